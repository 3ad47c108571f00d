//! Fast transform kernels behind the parallel-in-time preconditioners.
//!
//! Conventions, fixed once for the whole crate:
//!
//! * `F` is the unitary Fourier matrix `(1/√n)[ω^{(i-1)(j-1)}]` with
//!   `ω = exp(2πi/n)`. [`fft`] multiplies by `F*` (the usual
//!   negative-exponent DFT, unitary scaling), [`ifft`] multiplies by `F`.
//! * `S` is the orthonormal discrete sine matrix
//!   `√(2/(n+1))[sin(ijπ/(n+1))]`; it is symmetric and involutory, so
//!   [`SinePlan::apply`] is its own inverse.
//! * A circulant with first column `c` factors as `C = F·diag(λ)·F*`
//!   with `λ_k = Σ_j c_j exp(-2πijk/n)`, i.e. `λ = √n·fft(c)`.
//!
//! Both directions carry the `1/√n` scaling so every transform is
//! unitary and similarity transforms preserve the 2-norm.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Planned unitary DFT of a fixed length. Cheap to clone, safe to share.
pub struct FourierPlan {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl FourierPlan {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "transform length must be positive");
        let mut planner = FftPlanner::new();
        FourierPlan {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            scale: 1.0 / (n as f64).sqrt(),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// In-place multiplication by `F*` (negative-exponent unitary DFT).
    pub fn apply_adjoint(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n);
        self.forward.process(buf);
        for v in buf.iter_mut() {
            *v *= self.scale;
        }
    }

    /// In-place multiplication by `F` (positive-exponent unitary DFT).
    pub fn apply(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n);
        self.inverse.process(buf);
        for v in buf.iter_mut() {
            *v *= self.scale;
        }
    }
}

/// Unitary DFT, negative-exponent kernel: `(fft v)_k = (1/√n) Σ_j v_j ω^{-jk}`.
pub fn fft(v: &[Complex64]) -> Vec<Complex64> {
    let mut buf = v.to_vec();
    FourierPlan::new(v.len()).apply_adjoint(&mut buf);
    buf
}

/// Inverse of [`fft`]; `ifft(fft(v)) = v` to machine precision.
pub fn ifft(v: &[Complex64]) -> Vec<Complex64> {
    let mut buf = v.to_vec();
    FourierPlan::new(v.len()).apply(&mut buf);
    buf
}

/// Eigenvalues of the circulant matrix with the given first column, in the
/// order matching `C = F·diag(λ)·F*`.
pub fn circulant_eigenvalues(first_column: &[Complex64]) -> Vec<Complex64> {
    let n = first_column.len() as f64;
    fft(first_column)
        .into_iter()
        .map(|v| v * n.sqrt())
        .collect()
}

/// Real-input convenience wrapper around [`circulant_eigenvalues`].
pub fn circulant_eigenvalues_real(first_column: &[f64]) -> Vec<Complex64> {
    let c: Vec<Complex64> = first_column.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    circulant_eigenvalues(&c)
}

/// Planned orthonormal DST-I of a fixed length, evaluated through a
/// length-`2(n+1)` FFT of the odd extension.
pub struct SinePlan {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    norm: f64,
}

impl SinePlan {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "transform length must be positive");
        let mut planner = FftPlanner::new();
        SinePlan {
            n,
            fft: planner.plan_fft_forward(2 * (n + 1)),
            norm: (2.0 / (n as f64 + 1.0)).sqrt(),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// In-place `v ← S v`. Involution: applying twice returns the input.
    pub fn apply(&self, v: &mut [f64]) {
        debug_assert_eq!(v.len(), self.n);
        let mut ext = self.odd_extension(|i| Complex64::new(v[i], 0.0));
        self.fft.process(&mut ext);
        for (k, slot) in v.iter_mut().enumerate() {
            // raw_k = (i/2)·Z_{k+1}; real input keeps only -Im/2.
            *slot = -0.5 * self.norm * ext[k + 1].im;
        }
    }

    /// In-place `v ← S v` on a complex buffer (both parts transformed by
    /// the one real matrix, sharing a single FFT).
    pub fn apply_complex(&self, v: &mut [Complex64]) {
        debug_assert_eq!(v.len(), self.n);
        let mut ext = self.odd_extension(|i| v[i]);
        self.fft.process(&mut ext);
        let half_i = Complex64::new(0.0, 0.5);
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = half_i * ext[k + 1] * self.norm;
        }
    }

    fn odd_extension(&self, get: impl Fn(usize) -> Complex64) -> Vec<Complex64> {
        let n = self.n;
        let len = 2 * (n + 1);
        let mut ext = vec![Complex64::new(0.0, 0.0); len];
        for i in 0..n {
            let z = get(i);
            ext[i + 1] = z;
            ext[len - 1 - i] = -z;
        }
        ext
    }
}

/// Orthonormal DST-I as a one-shot call.
pub fn dst1(v: &[f64]) -> Vec<f64> {
    let mut buf = v.to_vec();
    SinePlan::new(v.len()).apply(&mut buf);
    buf
}

/// One factor of a Kronecker-structured transform.
#[derive(Clone)]
pub enum TransformOp {
    /// Identity of the given length.
    Identity(usize),
    /// Multiplication by the unitary `F` (positive-exponent kernel).
    Fourier(Arc<FourierPlan>),
    /// Multiplication by `F*`.
    FourierAdjoint(Arc<FourierPlan>),
    /// Orthonormal DST-I.
    Sine(Arc<SinePlan>),
    /// `S ⊗ S` acting on an `m1 × m1` block stored first-index-fastest.
    Sine2(Arc<SinePlan>),
}

impl TransformOp {
    pub fn len(&self) -> usize {
        match self {
            TransformOp::Identity(n) => *n,
            TransformOp::Fourier(p) | TransformOp::FourierAdjoint(p) => p.len(),
            TransformOp::Sine(p) => p.len(),
            TransformOp::Sine2(p) => p.len() * p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Applies the factor to one contiguous block.
    pub fn apply_block(&self, block: &mut [Complex64]) {
        debug_assert_eq!(block.len(), self.len());
        match self {
            TransformOp::Identity(_) => {}
            TransformOp::Fourier(p) => p.apply(block),
            TransformOp::FourierAdjoint(p) => p.apply_adjoint(block),
            TransformOp::Sine(p) => p.apply_complex(block),
            TransformOp::Sine2(p) => {
                let m1 = p.len();
                for row in block.chunks_mut(m1) {
                    p.apply_complex(row);
                }
                let mut series = vec![Complex64::new(0.0, 0.0); m1];
                for i1 in 0..m1 {
                    for i2 in 0..m1 {
                        series[i2] = block[i2 * m1 + i1];
                    }
                    p.apply_complex(&mut series);
                    for i2 in 0..m1 {
                        block[i2 * m1 + i1] = series[i2];
                    }
                }
            }
        }
    }
}

/// Applies `(A_time ⊗ B_space)` to a length-`mn` vector stored time-major
/// with the space index fastest: the space factor acts within each of the
/// `n` contiguous blocks of length `m`, the time factor along each of the
/// `m` stride-`m` series.
pub fn apply_time_space(
    time: &TransformOp,
    space: &TransformOp,
    v: &mut [Complex64],
) -> Result<()> {
    let (n, m) = (time.len(), space.len());
    if v.len() != m * n {
        return Err(Error::DimensionMismatch {
            expected: m * n,
            got: v.len(),
        });
    }
    for block in v.chunks_mut(m) {
        space.apply_block(block);
    }
    if !matches!(time, TransformOp::Identity(_)) {
        let mut series = vec![Complex64::new(0.0, 0.0); n];
        for s in 0..m {
            for k in 0..n {
                series[k] = v[k * m + s];
            }
            time.apply_block(&mut series);
            for k in 0..n {
                v[k * m + s] = series[k];
            }
        }
    }
    Ok(())
}

/// Copies a real vector into a complex work buffer.
pub fn to_complex(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

/// Extracts the real part of a pipeline that is mathematically real,
/// failing loudly if the imaginary residue exceeds `1e-10` times the
/// input scale (an implementation-bug signal, not a rounding artifact).
pub fn into_real_checked(v: &[Complex64], scale: f64) -> Result<Vec<f64>> {
    let residue = v.iter().map(|z| z.im.abs()).fold(0.0f64, f64::max);
    let bound = 1e-10 * scale.max(f64::MIN_POSITIVE);
    if residue > bound {
        return Err(Error::ComplexResidue { residue, bound });
    }
    Ok(v.iter().map(|z| z.re).collect())
}
