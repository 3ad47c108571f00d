//! The modified preconditioners `P̃_S` and `P̃_G`.
//!
//! Both approximate the matched symbol by splitting it into a scalar time
//! factor and a shifted Laplacian:
//!
//! ```text
//! blockdiag( √(A₁ᵀA₁+α²Iₙ) ⊗ I_m + (τ²/2)·√(A₂ᵀA₂) ⊗ (-Δ) , … )
//! ```
//!
//! with `A_i` the Strang circulants (Fourier in time) or the Tau matrices
//! (DST in time). Inversion needs no fast diagonalization of `-Δ`: after
//! the time transform, each time frequency `k` decouples into one SPD
//! spatial system `(a_k·I + c_k·(-Δ))w = r̂_k`, solved exactly by
//! tridiagonal elimination (1-D) or a partial sine transform plus
//! tridiagonal elimination (2-D).

use std::ops::{Div, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::Result;
use crate::operators::NegativeLaplacian;
use crate::problem::{GridSpec, SpatialDim};
use crate::transforms::{into_real_checked, to_complex, FourierPlan, SinePlan};

use super::{
    check_len, fourier_across_time, norm2, sine_across_time, strang_time_eigenvalues,
    tau_time_eigenvalues, PrecondKind, SpdPreconditioner,
};

/// Exact solver for `(a·I + c·(-Δ))w = r` with `a > 0`, `c ≥ 0`.
pub struct ShiftedLaplacianSolver {
    grid: GridSpec,
    zero_laplacian: bool,
    sine: Option<Arc<SinePlan>>,
    mu_1d: Vec<f64>,
}

impl ShiftedLaplacianSolver {
    pub fn new(laplacian: &NegativeLaplacian) -> Self {
        let grid = *laplacian.grid();
        let mu_1d: Vec<f64> = (1..=grid.m1)
            .map(|j| {
                let s = (j as f64 * std::f64::consts::PI * grid.h / 2.0).sin();
                4.0 / (grid.h * grid.h) * s * s
            })
            .collect();
        let sine = match grid.d {
            SpatialDim::Two if !laplacian.is_zero_fixture() => {
                Some(Arc::new(SinePlan::new(grid.m1)))
            }
            _ => None,
        };
        ShiftedLaplacianSolver {
            grid,
            zero_laplacian: laplacian.is_zero_fixture(),
            sine,
            mu_1d,
        }
    }

    pub fn solve<T: ThomasScalar>(&self, a: f64, c: f64, rhs: &mut [T]) {
        debug_assert!(a > 0.0 && c >= 0.0);
        if self.zero_laplacian {
            for v in rhs.iter_mut() {
                *v = *v / a;
            }
            return;
        }
        let inv_h2 = 1.0 / (self.grid.h * self.grid.h);
        match self.grid.d {
            SpatialDim::One => {
                thomas_const(a + 2.0 * c * inv_h2, -c * inv_h2, rhs);
            }
            SpatialDim::Two => {
                let m1 = self.grid.m1;
                let plan = self.sine.as_ref().expect("2-D solver keeps a sine plan");
                // Diagonalize the second direction, eliminate along the first.
                let mut series: Vec<T> = vec![rhs[0]; m1];
                for i1 in 0..m1 {
                    for i2 in 0..m1 {
                        series[i2] = rhs[i2 * m1 + i1];
                    }
                    T::sine(plan, &mut series);
                    for i2 in 0..m1 {
                        rhs[i2 * m1 + i1] = series[i2];
                    }
                }
                for (q, line) in rhs.chunks_mut(m1).enumerate() {
                    let shifted = a + c * self.mu_1d[q];
                    thomas_const(shifted + 2.0 * c * inv_h2, -c * inv_h2, line);
                }
                for i1 in 0..m1 {
                    for i2 in 0..m1 {
                        series[i2] = rhs[i2 * m1 + i1];
                    }
                    T::sine(plan, &mut series);
                    for i2 in 0..m1 {
                        rhs[i2 * m1 + i1] = series[i2];
                    }
                }
            }
        }
    }
}

/// Scalar types the tridiagonal elimination runs over: the coefficients
/// stay real, only the right-hand side varies.
pub trait ThomasScalar:
    Copy + Sub<Output = Self> + Mul<f64, Output = Self> + Div<f64, Output = Self>
{
    fn sine(plan: &SinePlan, series: &mut [Self]);
}

impl ThomasScalar for f64 {
    fn sine(plan: &SinePlan, series: &mut [Self]) {
        plan.apply(series);
    }
}

impl ThomasScalar for Complex64 {
    fn sine(plan: &SinePlan, series: &mut [Self]) {
        plan.apply_complex(series);
    }
}

/// In-place Thomas elimination for a symmetric tridiagonal matrix with
/// constant diagonal and off-diagonal. Diagonal dominance (`diag > 2|off|`
/// for every system built here) keeps it stable without pivoting.
fn thomas_const<T: ThomasScalar>(diag: f64, off: f64, rhs: &mut [T]) {
    let m = rhs.len();
    if m == 0 {
        return;
    }
    let mut upper = vec![0.0; m];
    let mut denom = diag;
    upper[0] = off / denom;
    rhs[0] = rhs[0] / denom;
    for i in 1..m {
        denom = diag - off * upper[i - 1];
        upper[i] = off / denom;
        rhs[i] = (rhs[i] - rhs[i - 1] * off) / denom;
    }
    for i in (0..m - 1).rev() {
        rhs[i] = rhs[i] - rhs[i + 1] * upper[i];
    }
}

/// `P̃_S`: Fourier in time, shifted-Laplacian solves in space, with
/// `a_k = √(|s1_k|²+α²)` and `c_k = (τ²/2)|s2_k|`.
pub struct ModStrangPreconditioner {
    grid: GridSpec,
    time: Arc<FourierPlan>,
    coeffs: Vec<(f64, f64)>,
    solver: ShiftedLaplacianSolver,
}

impl ModStrangPreconditioner {
    pub fn build(laplacian: NegativeLaplacian) -> Result<Self> {
        let grid = *laplacian.grid();
        let (s1, s2) = strang_time_eigenvalues(grid.n);
        let alpha2 = grid.alpha * grid.alpha;
        let half_tau2 = 0.5 * grid.tau * grid.tau;
        let coeffs = s1
            .iter()
            .zip(&s2)
            .map(|(a, b)| ((a.norm_sqr() + alpha2).sqrt(), half_tau2 * b.norm()))
            .collect();
        Ok(ModStrangPreconditioner {
            grid,
            time: Arc::new(FourierPlan::new(grid.n)),
            coeffs,
            solver: ShiftedLaplacianSolver::new(&laplacian),
        })
    }

    /// Per-frequency `(a_k, c_k)` pairs of the spatial systems.
    pub fn coefficients(&self) -> &[(f64, f64)] {
        &self.coeffs
    }

    fn apply_block(&self, v: &[f64], out: &mut [f64], adjoint_first: bool) -> Result<()> {
        let (m, n) = (self.grid.m, self.grid.n);
        let mut buf = to_complex(v);
        fourier_across_time(&mut buf, m, n, &self.time, adjoint_first);
        for (k, block) in buf.chunks_mut(m).enumerate() {
            let (a, c) = self.coeffs[k];
            self.solver.solve(a, c, block);
        }
        fourier_across_time(&mut buf, m, n, &self.time, !adjoint_first);
        out.copy_from_slice(&into_real_checked(&buf, norm2(v))?);
        Ok(())
    }
}

impl SpdPreconditioner for ModStrangPreconditioner {
    fn dim(&self) -> usize {
        self.grid.dof()
    }

    fn kind(&self) -> PrecondKind {
        PrecondKind::ModStrang
    }

    fn apply_inverse_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        let mn = self.grid.m * self.grid.n;
        check_len(v, 2 * mn)?;
        check_len(out, 2 * mn)?;
        let (v1, v2) = v.split_at(mn);
        let (out1, out2) = out.split_at_mut(mn);
        // The circulants are normal, so both blocks coincide; the two
        // conjugate transform patterns are kept regardless.
        self.apply_block(v1, out1, true)?;
        self.apply_block(v2, out2, false)?;
        Ok(())
    }
}

/// `P̃_G`: DST in time, shifted-Laplacian solves in space, with
/// `a_k = √(g1_k²+α²)` and `c_k = (τ²/2)|g2_k|`. Fully real.
pub struct ModTauPreconditioner {
    grid: GridSpec,
    time: Arc<SinePlan>,
    coeffs: Vec<(f64, f64)>,
    solver: ShiftedLaplacianSolver,
}

impl ModTauPreconditioner {
    pub fn build(laplacian: NegativeLaplacian) -> Result<Self> {
        let grid = *laplacian.grid();
        let (g1, g2) = tau_time_eigenvalues(grid.n);
        let alpha2 = grid.alpha * grid.alpha;
        let half_tau2 = 0.5 * grid.tau * grid.tau;
        let coeffs = g1
            .iter()
            .zip(&g2)
            .map(|(a, b)| ((a * a + alpha2).sqrt(), half_tau2 * b.abs()))
            .collect();
        Ok(ModTauPreconditioner {
            grid,
            time: Arc::new(SinePlan::new(grid.n)),
            coeffs,
            solver: ShiftedLaplacianSolver::new(&laplacian),
        })
    }

    /// Per-frequency `(a_k, c_k)` pairs of the spatial systems.
    pub fn coefficients(&self) -> &[(f64, f64)] {
        &self.coeffs
    }

    fn apply_block(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        let (m, n) = (self.grid.m, self.grid.n);
        out.copy_from_slice(v);
        sine_across_time(out, m, n, &self.time);
        for (k, block) in out.chunks_mut(m).enumerate() {
            let (a, c) = self.coeffs[k];
            self.solver.solve(a, c, block);
        }
        sine_across_time(out, m, n, &self.time);
        Ok(())
    }
}

impl SpdPreconditioner for ModTauPreconditioner {
    fn dim(&self) -> usize {
        self.grid.dof()
    }

    fn kind(&self) -> PrecondKind {
        PrecondKind::ModTau
    }

    fn apply_inverse_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        let mn = self.grid.m * self.grid.n;
        check_len(v, 2 * mn)?;
        check_len(out, 2 * mn)?;
        let (v1, v2) = v.split_at(mn);
        let (out1, out2) = out.split_at_mut(mn);
        self.apply_block(v1, out1)?;
        self.apply_block(v2, out2)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::{spd_sqrt, symmetric_solve};
    use crate::operators::{materialize_dense, LinearOperator};
    use crate::spectral::kron;
    use approx::assert_relative_eq;
    use ndarray::Array2;

    fn random_vec(len: usize, seed: u64) -> Vec<f64> {
        let mut state = seed;
        (0..len)
            .map(|_| {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                (state >> 33) as f64 / (1u64 << 31) as f64 - 1.0
            })
            .collect()
    }

    #[test]
    fn shifted_solver_satisfies_operator_equation_1d() {
        let grid = GridSpec::build(SpatialDim::One, 7, 4, 2.0, 1e-2).unwrap();
        let lap = NegativeLaplacian::new(grid);
        let solver = ShiftedLaplacianSolver::new(&lap);
        let (a, c) = (1.7, 0.03);
        let rhs = random_vec(grid.m, 2);
        let mut w = rhs.clone();
        solver.solve(a, c, &mut w);
        let lw = lap.apply(&w).unwrap();
        for i in 0..grid.m {
            assert_relative_eq!(a * w[i] + c * lw[i], rhs[i], max_relative = 1e-12, epsilon = 1e-13);
        }
    }

    #[test]
    fn shifted_solver_satisfies_operator_equation_2d() {
        let grid = GridSpec::build(SpatialDim::Two, 5, 4, 2.0, 1e-2).unwrap();
        let lap = NegativeLaplacian::new(grid);
        let solver = ShiftedLaplacianSolver::new(&lap);
        let (a, c) = (0.9, 0.011);
        let rhs = random_vec(grid.m, 4);
        let mut w = rhs.clone();
        solver.solve(a, c, &mut w);
        let lw = lap.apply(&w).unwrap();
        for i in 0..grid.m {
            assert_relative_eq!(a * w[i] + c * lw[i], rhs[i], max_relative = 1e-11, epsilon = 1e-12);
        }
    }

    #[test]
    fn mod_strang_matches_sine_diagonal_route() {
        // On the uniform grid P̃_S also decomposes as
        // (F⊗U)·diag(a_k + c_k·μ_j)·(F⊗U)*, an independent evaluation path.
        let grid = GridSpec::build(SpatialDim::One, 3, 4, 2.0, 1e-2).unwrap();
        let lap = NegativeLaplacian::new(grid);
        let p = ModStrangPreconditioner::build(lap).unwrap();
        let mn = grid.m * grid.n;
        let v = random_vec(2 * mn, 77);
        let got = p.apply_inverse(&v).unwrap();

        let mu = lap.eigenvalues();
        let space = lap.transform();
        let time = FourierPlan::new(grid.n);
        let mut alt = Vec::new();
        for (block_idx, chunk) in v.chunks(mn).enumerate() {
            let mut buf = to_complex(chunk);
            for b in buf.chunks_mut(grid.m) {
                space.apply_block(b);
            }
            fourier_across_time(&mut buf, grid.m, grid.n, &time, block_idx == 0);
            for (k, b) in buf.chunks_mut(grid.m).enumerate() {
                let (a, c) = p.coefficients()[k];
                for (z, &mu_j) in b.iter_mut().zip(&mu) {
                    *z /= a + c * mu_j;
                }
            }
            fourier_across_time(&mut buf, grid.m, grid.n, &time, block_idx != 0);
            for b in buf.chunks_mut(grid.m) {
                space.apply_block(b);
            }
            alt.extend(into_real_checked(&buf, norm2(chunk)).unwrap());
        }
        for (g, w) in got.iter().zip(&alt) {
            assert_relative_eq!(g, w, max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn mod_tau_matches_dense_materialization() {
        let grid = GridSpec::build(SpatialDim::One, 3, 4, 2.0, 1.0).unwrap();
        let lap = NegativeLaplacian::new(grid);
        let p = ModTauPreconditioner::build(lap).unwrap();
        let (m, n) = (grid.m, grid.n);
        let mn = m * n;

        // Dense assembly of √(G₁²+α²Iₙ)⊗I_m + (τ²/2)√(G₂²)⊗(-Δ).
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
        let alpha2 = grid.alpha * grid.alpha;
        let mut g1_sq = g1.dot(&g1);
        for i in 0..n {
            g1_sq[(i, i)] += alpha2;
        }
        let time_a = spd_sqrt(&g1_sq).unwrap();
        let g2_sq = g2.dot(&g2);
        let time_c = spd_sqrt(&g2_sq).unwrap();
        let lap_dense = materialize_dense(&lap).unwrap();
        let eye_m = Array2::<f64>::eye(m);
        let half_tau2 = 0.5 * grid.tau * grid.tau;
        let block = kron(&time_a, &eye_m) + kron(&time_c, &lap_dense) * half_tau2;

        let v = random_vec(2 * mn, 55);
        let got = p.apply_inverse(&v).unwrap();
        let want1 = symmetric_solve(&block, &v[..mn]).unwrap();
        let want2 = symmetric_solve(&block, &v[mn..]).unwrap();
        for (g, w) in got[..mn].iter().zip(&want1) {
            assert_relative_eq!(g, w, max_relative = 1e-10, epsilon = 1e-11);
        }
        for (g, w) in got[mn..].iter().zip(&want2) {
            assert_relative_eq!(g, w, max_relative = 1e-10, epsilon = 1e-11);
        }
    }

    #[test]
    fn mod_tau_all_ones_is_positive_form() {
        let grid = GridSpec::build(SpatialDim::One, 3, 4, 2.0, 1.0).unwrap();
        let p = ModTauPreconditioner::build(NegativeLaplacian::new(grid)).unwrap();
        let v = vec![1.0; grid.dof()];
        let pv = p.apply_inverse(&v).unwrap();
        assert!(pv.iter().all(|x| x.is_finite()));
        let quad: f64 = pv.iter().zip(&v).map(|(a, b)| a * b).sum();
        assert!(quad > 0.0);
    }

    #[test]
    fn mod_strang_real_output_and_large_alpha_limit() {
        let grid = GridSpec::raw(SpatialDim::One, 2, 3, 2.0, 2.0f64.powi(-2) * 1e-24).unwrap();
        let p = ModStrangPreconditioner::build(NegativeLaplacian::new(grid)).unwrap();
        let v = random_vec(grid.dof(), 9);
        let out = p.apply_inverse(&v).unwrap();
        let err: f64 = out
            .iter()
            .zip(&v)
            .map(|(o, x)| (grid.alpha * o - x).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(err <= 1e-5 * norm2(&v));
    }

    #[test]
    fn mod_variants_work_on_zero_fixture() {
        let grid = GridSpec::raw(SpatialDim::One, 1, 2, 2.0, 1.0).unwrap();
        let lap = NegativeLaplacian::zero_fixture(grid);
        let v = random_vec(grid.dof(), 13);
        for p in [
            Box::new(ModStrangPreconditioner::build(lap).unwrap()) as Box<dyn SpdPreconditioner>,
            Box::new(ModTauPreconditioner::build(lap).unwrap()),
        ] {
            let out = p.apply_inverse(&v).unwrap();
            assert!(out.iter().all(|x| x.is_finite()));
        }
    }
}
