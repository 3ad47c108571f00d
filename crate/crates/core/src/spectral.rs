//! Spectral verification toolkit: evaluation of the matrix-valued symbol
//! of the block Toeplitz factor, sampling of the symmetrized distribution
//! `ψ_g`, dense spectra of (preconditioned) saddle matrices, and the
//! numeric-rank surrogate behind the clustering bounds.
//!
//! The dense eigensolver itself lives in [`crate::eigen`]; this module
//! re-exports its entry points and builds the desk-scale oracles on top.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use crate::eigen::{singular_values, symmetric_eigen, symmetric_eigenvalues};

use crate::error::{Error, Result};
use crate::operators::{materialize_dense, NegativeLaplacian};
use crate::precond::{strang_first_columns, SpdPreconditioner};
use crate::problem::GridSpec;

/// Largest spatial block accepted by dense symbol evaluation.
pub const SYMBOL_SIZE_LIMIT: usize = 512;
/// Largest saddle matrix accepted by preconditioned-spectrum evaluation.
pub const PRECONDITIONED_SPECTRUM_LIMIT: usize = 4_000;

/// Evaluator of the time symbol `h(θ) = L(1 + e^{2iθ}) - 2e^{iθ}I` and of
/// the matched SPD symbol `g(θ) = √(|h(θ)|² + α²I)`.
///
/// `h(θ)` is a polynomial in the SPD matrix `L = I + (τ²/2)(-Δ)`, so its
/// singular values reduce to `2|ℓ_j cos θ - 1|` over the eigenvalues
/// `ℓ_j ≥ 1` of `L`; the reduction is cross-checked against a dense SVD
/// oracle in the test suite.
pub struct SymbolEvaluator {
    grid: GridSpec,
    laplacian: NegativeLaplacian,
    ell: Vec<f64>,
}

impl SymbolEvaluator {
    pub fn new(grid: GridSpec) -> Self {
        Self::with_laplacian(NegativeLaplacian::new(grid))
    }

    pub fn with_laplacian(laplacian: NegativeLaplacian) -> Self {
        let grid = *laplacian.grid();
        let half_tau2 = 0.5 * grid.tau * grid.tau;
        let ell = laplacian
            .eigenvalues()
            .into_iter()
            .map(|mu| 1.0 + half_tau2 * mu)
            .collect();
        SymbolEvaluator {
            grid,
            laplacian,
            ell,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Eigenvalues `ℓ_j = 1 + (τ²/2)μ_j ≥ 1` of the spatial factor.
    pub fn ell(&self) -> &[f64] {
        &self.ell
    }

    /// Dense `m×m` value of the symbol at angle `θ`.
    pub fn symbol_h(&self, theta: f64) -> Result<Array2<Complex64>> {
        let m = self.grid.m;
        if m > SYMBOL_SIZE_LIMIT {
            return Err(Error::SizeGuard {
                what: "dense symbol evaluation",
                requested: m,
                limit: SYMBOL_SIZE_LIMIT,
            });
        }
        let lap = materialize_dense(&self.laplacian)?;
        let half_tau2 = 0.5 * self.grid.tau * self.grid.tau;
        let outer = Complex64::new(0.0, 2.0 * theta).exp() + 1.0;
        let inner = Complex64::new(0.0, theta).exp() * 2.0;
        let mut out = Array2::from_elem((m, m), Complex64::new(0.0, 0.0));
        for i in 0..m {
            for j in 0..m {
                let l_ij = half_tau2 * lap[(i, j)] + if i == j { 1.0 } else { 0.0 };
                out[(i, j)] = outer * l_ij - if i == j { inner } else { Complex64::new(0.0, 0.0) };
            }
        }
        Ok(out)
    }

    /// Eigenvalues of `g(θ)`, sorted nondecreasingly:
    /// `√(4(ℓ_j cos θ - 1)² + α²)`.
    pub fn symbol_g_eigenvalues(&self, theta: f64) -> Vec<f64> {
        let alpha2 = self.grid.alpha * self.grid.alpha;
        let cos = theta.cos();
        let mut vals: Vec<f64> = self
            .ell
            .iter()
            .map(|&l| {
                let w = 2.0 * (l * cos - 1.0);
                (w * w + alpha2).sqrt()
            })
            .collect();
        vals.sort_by(f64::total_cmp);
        vals
    }

    /// Samples `ψ_g` on the uniform grid `θ_i = -2π + i·2π/n`, `i = 1..2n`:
    /// the negated branch on `[-2π, 0]` and the positive branch on
    /// `(0, 2π]`, each sorted nondecreasingly, concatenated to `2mn`
    /// values.
    pub fn sample_psi_g(&self) -> Vec<f64> {
        let n = self.grid.n;
        let step = 2.0 * std::f64::consts::PI / n as f64;
        let mut negative = Vec::with_capacity(self.grid.m * n);
        let mut positive = Vec::with_capacity(self.grid.m * n);
        for i in 1..=n {
            let theta = -2.0 * std::f64::consts::PI + i as f64 * step;
            negative.extend(self.symbol_g_eigenvalues(theta).into_iter().map(|v| -v));
        }
        for i in (n + 1)..=(2 * n) {
            let theta = -2.0 * std::f64::consts::PI + i as f64 * step;
            positive.extend(self.symbol_g_eigenvalues(theta));
        }
        negative.sort_by(f64::total_cmp);
        positive.sort_by(f64::total_cmp);
        negative.extend(positive);
        negative
    }
}

/// Pairing statistics between a sorted spectrum and sorted `ψ_g` samples.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SpectralComparison {
    pub delta: f64,
    pub edge_margin: usize,
    pub max_abs_diff: f64,
    pub mean_abs_diff: f64,
    pub interior_max_abs_diff: f64,
    pub interior_mean_abs_diff: f64,
    pub outlier_count: usize,
    pub interval_check: bool,
}

/// Index-wise comparison of two sorted lists per the ordering procedure:
/// sorted eigenvalues against sorted samples, outliers counted at
/// threshold `delta`, and interior statistics excluding `edge_margin`
/// entries at both ends of each (negative/positive) half.
pub fn compare_spectrum(
    eigenvalues: &[f64],
    samples: &[f64],
    delta: f64,
    edge_margin: usize,
) -> Result<SpectralComparison> {
    if eigenvalues.len() != samples.len() {
        return Err(Error::DimensionMismatch {
            expected: eigenvalues.len(),
            got: samples.len(),
        });
    }
    let len = eigenvalues.len();
    if len == 0 {
        return Err(Error::InvalidParameter("empty spectrum".into()));
    }
    if edge_margin > 0 && (len % 2 != 0 || 2 * edge_margin >= len / 2) {
        return Err(Error::InvalidParameter(format!(
            "edge margin {edge_margin} does not fit two halves of {len} entries"
        )));
    }

    let diffs: Vec<f64> = eigenvalues
        .iter()
        .zip(samples)
        .map(|(e, s)| (e - s).abs())
        .collect();
    let max_abs_diff = diffs.iter().cloned().fold(0.0, f64::max);
    let mean_abs_diff = diffs.iter().sum::<f64>() / len as f64;
    let outlier_count = diffs.iter().filter(|&&d| d > delta).count();

    let half = len / 2;
    let mut interior_max = 0.0f64;
    let mut interior_sum = 0.0f64;
    let mut interior_len = 0usize;
    for start in [0, half] {
        let lo = start + edge_margin;
        let hi = start + half - edge_margin;
        for &d in &diffs[lo..hi] {
            interior_max = interior_max.max(d);
            interior_sum += d;
            interior_len += 1;
        }
    }

    let lo_bound = samples.iter().cloned().fold(f64::INFINITY, f64::min) - delta;
    let hi_bound = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + delta;
    let interval_check = eigenvalues.iter().all(|&e| e >= lo_bound && e <= hi_bound);

    Ok(SpectralComparison {
        delta,
        edge_margin,
        max_abs_diff,
        mean_abs_diff,
        interior_max_abs_diff: interior_max,
        interior_mean_abs_diff: interior_sum / interior_len.max(1) as f64,
        outlier_count,
        interval_check,
    })
}

/// Full distribution-verification record for one grid: the paired sorted
/// lists plus their discrepancy statistics; serializes to the JSON report
/// emitted by the spectrum runner.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectralReport {
    pub size: usize,
    pub gamma: f64,
    pub grid: GridSpec,
    pub eigenvalues: Vec<f64>,
    pub samples: Vec<f64>,
    pub max_abs_diff: f64,
    pub mean_abs_diff: f64,
    pub outlier_count: usize,
    pub interval_check: bool,
    pub delta: f64,
    pub edge_margin: usize,
    pub interior_max_abs_diff: f64,
    pub interior_mean_abs_diff: f64,
    /// Spectra of preconditioned matrices, keyed by preconditioner name,
    /// present only when requested.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub preconditioned: Vec<PreconditionedSpectrum>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PreconditionedSpectrum {
    pub preconditioner: String,
    pub eigenvalues: Vec<f64>,
}

impl SpectralReport {
    pub fn new(
        grid: GridSpec,
        eigenvalues: Vec<f64>,
        samples: Vec<f64>,
        delta: f64,
        edge_margin: usize,
    ) -> Result<Self> {
        let cmp = compare_spectrum(&eigenvalues, &samples, delta, edge_margin)?;
        Ok(SpectralReport {
            size: eigenvalues.len(),
            gamma: grid.gamma,
            grid,
            eigenvalues,
            samples,
            max_abs_diff: cmp.max_abs_diff,
            mean_abs_diff: cmp.mean_abs_diff,
            outlier_count: cmp.outlier_count,
            interval_check: cmp.interval_check,
            delta: cmp.delta,
            edge_margin: cmp.edge_margin,
            interior_max_abs_diff: cmp.interior_max_abs_diff,
            interior_mean_abs_diff: cmp.interior_mean_abs_diff,
            preconditioned: Vec::new(),
        })
    }
}

/// Spectrum of `P^{-1/2}·A·P^{-1/2}` (equal to the spectrum of `P⁻¹A`),
/// with `P` materialized from its apply-inverse action and the square
/// root taken through the symmetric eigendecomposition.
pub fn preconditioned_spectrum(
    precond: &dyn SpdPreconditioner,
    a_dense: &Array2<f64>,
) -> Result<Vec<f64>> {
    let dim = a_dense.nrows();
    if dim > PRECONDITIONED_SPECTRUM_LIMIT {
        return Err(Error::SizeGuard {
            what: "preconditioned spectrum",
            requested: dim,
            limit: PRECONDITIONED_SPECTRUM_LIMIT,
        });
    }
    if precond.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: precond.dim(),
        });
    }
    // Columns of P⁻¹.
    let mut p_inv = Array2::zeros((dim, dim));
    let mut e = vec![0.0; dim];
    let mut col = vec![0.0; dim];
    for j in 0..dim {
        e[j] = 1.0;
        precond.apply_inverse_into(&e, &mut col)?;
        e[j] = 0.0;
        for i in 0..dim {
            p_inv[(i, j)] = col[i];
        }
    }
    // P^{-1/2} = (P⁻¹)^{1/2}.
    let decomp = symmetric_eigen(&p_inv)?;
    if let Some(&bad) = decomp.values.iter().find(|&&l| l <= 0.0) {
        return Err(Error::NotPositiveDefinite(bad));
    }
    let n = dim;
    let q = &decomp.vectors;
    let sqrt_vals: Vec<f64> = decomp.values.iter().map(|&l| l.sqrt()).collect();
    let mut root = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut acc = 0.0;
            for k in 0..n {
                acc += q[(i, k)] * sqrt_vals[k] * q[(j, k)];
            }
            root[(i, j)] = acc;
            root[(j, i)] = acc;
        }
    }
    let similar = root.dot(a_dense).dot(&root);
    symmetric_eigenvalues(&similar)
}

/// Number of singular values above `rel_tol · σ_max`; the numeric
/// surrogate for exact rank bounds.
pub fn numeric_rank(a: &Array2<f64>, rel_tol: f64) -> Result<usize> {
    let sv = singular_values(a)?;
    let max = sv.first().copied().unwrap_or(0.0);
    if max == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|&&s| s > rel_tol * max).count())
}

/// Kronecker product of two dense matrices (verification-scale sizes).
pub fn kron(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let scale = a[(i, j)];
            if scale == 0.0 {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = scale * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Dense circulant matrix from its first column.
pub fn dense_circulant(first_column: &[f64]) -> Array2<f64> {
    let n = first_column.len();
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = first_column[(i + n - j) % n];
        }
    }
    out
}

/// Dense Strang skeleton `S = S₁⊗I + (τ²/2)S₂⊗(-Δ)` of the block
/// Toeplitz factor.
pub fn dense_strang_s(laplacian: &NegativeLaplacian) -> Array2<f64> {
    let grid = laplacian.grid();
    let (c1, c2) = strang_first_columns(grid.n);
    let s1 = dense_circulant(&c1);
    let s2 = dense_circulant(&c2);
    let lap = materialize_dense(laplacian).expect("desk-scale laplacian");
    let eye = Array2::<f64>::eye(grid.m);
    let half_tau2 = 0.5 * grid.tau * grid.tau;
    kron(&s1, &eye) + kron(&s2, &lap) * half_tau2
}

/// Dense Tau skeleton `G = G₁⊗I + (τ²/2)G₂⊗(-Δ)`.
pub fn dense_tau_g(laplacian: &NegativeLaplacian) -> Array2<f64> {
    let grid = laplacian.grid();
    let n = grid.n;
    let mut g1 = Array2::zeros((n, n));
    let mut g2 = Array2::zeros((n, n));
    for i in 0..n {
        g1[(i, i)] = 2.0;
        if i + 1 < n {
            g1[(i, i + 1)] = -1.0;
            g1[(i + 1, i)] = -1.0;
            g2[(i, i + 1)] = -1.0;
            g2[(i + 1, i)] = -1.0;
        }
    }
    let lap = materialize_dense(laplacian).expect("desk-scale laplacian");
    let eye = Array2::<f64>::eye(grid.m);
    let half_tau2 = 0.5 * grid.tau * grid.tau;
    kron(&g1, &eye) + kron(&g2, &lap) * half_tau2
}

/// Dense circulant-skeleton saddle matrix
/// `s(A) = [[α·I, Sᵀ], [S, -α·I]]`, the matrix whose SPD absolute value
/// is the Strang preconditioner.
pub fn dense_circulant_skeleton(laplacian: &NegativeLaplacian) -> Array2<f64> {
    let grid = laplacian.grid();
    let mn = grid.m * grid.n;
    let s = dense_strang_s(laplacian);
    let mut out = Array2::zeros((2 * mn, 2 * mn));
    for i in 0..mn {
        out[(i, i)] = grid.alpha;
        out[(mn + i, mn + i)] = -grid.alpha;
        for j in 0..mn {
            out[(i, mn + j)] = s[(j, i)];
            out[(mn + i, j)] = s[(i, j)];
        }
    }
    out
}
