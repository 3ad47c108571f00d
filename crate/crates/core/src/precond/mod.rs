//! Symbol-matching SPD preconditioners for the saddle-point system, all
//! behind one apply-inverse contract:
//!
//! * `|H|` — the ideal block diagonal `blockdiag(√(TᵀT+α²I), √(TTᵀ+α²I))`,
//!   materialized densely for desk-scale verification;
//! * `P_S` — Strang circulant skeleton, inverted by FFT in time and the
//!   Laplacian eigenvector transform in space;
//! * `P_G` — Tau skeleton, inverted by DST in both directions;
//! * `P̃_S`, `P̃_G` — modified variants whose inversion needs no fast
//!   diagonalization of the Laplacian: a time transform followed by one
//!   shifted-Laplacian solve per time frequency.
//!
//! Every variant applies the inverse of a symmetric positive definite
//! matrix, which is what MINRES requires.

mod abs_h;
mod modified;
mod strang;
mod tau;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::NegativeLaplacian;
use crate::problem::GridSpec;
use crate::transforms::{circulant_eigenvalues_real, FourierPlan, SinePlan, TransformOp};

pub use abs_h::AbsHPreconditioner;
pub use modified::{ModStrangPreconditioner, ModTauPreconditioner};
pub use strang::StrangPreconditioner;
pub use tau::TauPreconditioner;

/// Apply-inverse contract shared by all preconditioners. The operator
/// behind `apply_inverse_into` is the inverse of an SPD matrix: linear,
/// self-adjoint, and positive.
pub trait SpdPreconditioner: Send + Sync {
    fn dim(&self) -> usize;

    fn kind(&self) -> PrecondKind;

    fn apply_inverse_into(&self, v: &[f64], out: &mut [f64]) -> Result<()>;

    fn apply_inverse(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.apply_inverse_into(v, &mut out)?;
        Ok(out)
    }
}

/// Preconditioner selector, also the CLI-facing name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PrecondKind {
    Identity,
    AbsH,
    Strang,
    Tau,
    ModStrang,
    ModTau,
}

impl PrecondKind {
    pub const ALL: [PrecondKind; 6] = [
        PrecondKind::Identity,
        PrecondKind::AbsH,
        PrecondKind::Strang,
        PrecondKind::Tau,
        PrecondKind::ModStrang,
        PrecondKind::ModTau,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PrecondKind::Identity => "none",
            PrecondKind::AbsH => "abs-h",
            PrecondKind::Strang => "strang",
            PrecondKind::Tau => "tau",
            PrecondKind::ModStrang => "mod-strang",
            PrecondKind::ModTau => "mod-tau",
        }
    }
}

impl fmt::Display for PrecondKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PrecondKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" | "identity" => Ok(PrecondKind::Identity),
            "abs-h" => Ok(PrecondKind::AbsH),
            "strang" => Ok(PrecondKind::Strang),
            "tau" => Ok(PrecondKind::Tau),
            "mod-strang" => Ok(PrecondKind::ModStrang),
            "mod-tau" => Ok(PrecondKind::ModTau),
            other => Err(Error::UnknownPreconditioner(other.to_string())),
        }
    }
}

impl TryFrom<String> for PrecondKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PrecondKind> for String {
    fn from(k: PrecondKind) -> String {
        k.name().to_string()
    }
}

/// Builds the selected preconditioner for the uniform-grid Laplacian.
pub fn build(kind: PrecondKind, grid: &GridSpec) -> Result<Box<dyn SpdPreconditioner>> {
    build_with_laplacian(kind, NegativeLaplacian::new(*grid))
}

/// Builds the selected preconditioner on an explicit Laplacian (used by
/// fixtures and non-default stencils).
pub fn build_with_laplacian(
    kind: PrecondKind,
    laplacian: NegativeLaplacian,
) -> Result<Box<dyn SpdPreconditioner>> {
    let grid = *laplacian.grid();
    Ok(match kind {
        PrecondKind::Identity => Box::new(IdentityPreconditioner::new(grid.dof())),
        PrecondKind::AbsH => Box::new(AbsHPreconditioner::build(laplacian)?),
        PrecondKind::Strang => Box::new(StrangPreconditioner::build(laplacian)?),
        PrecondKind::Tau => Box::new(TauPreconditioner::build(laplacian)?),
        PrecondKind::ModStrang => Box::new(ModStrangPreconditioner::build(laplacian)?),
        PrecondKind::ModTau => Box::new(ModTauPreconditioner::build(laplacian)?),
    })
}

/// The `MINRES-I` baseline: no preconditioning.
#[derive(Clone, Copy, Debug)]
pub struct IdentityPreconditioner {
    dim: usize,
}

impl IdentityPreconditioner {
    pub fn new(dim: usize) -> Self {
        IdentityPreconditioner { dim }
    }
}

impl SpdPreconditioner for IdentityPreconditioner {
    fn dim(&self) -> usize {
        self.dim
    }

    fn kind(&self) -> PrecondKind {
        PrecondKind::Identity
    }

    fn apply_inverse_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        check_len(v, self.dim)?;
        check_len(out, self.dim)?;
        out.copy_from_slice(v);
        Ok(())
    }
}

/// Eigenpairs of `-Δ_m` as used by every fast factorization: the
/// eigenvalues in transform order together with the orthogonal transform
/// applying the eigenvector basis.
pub fn laplacian_eigenpairs(laplacian: &NegativeLaplacian) -> (Vec<f64>, TransformOp) {
    (laplacian.eigenvalues(), laplacian.transform())
}

/// First columns of the two Strang circulants `S₁` (taps 1,-2,1) and `S₂`
/// (taps 1,0,1) on rows 0,1,2, folded modulo `n` for tiny sizes.
pub fn strang_first_columns(n: usize) -> (Vec<f64>, Vec<f64>) {
    let fold = |taps: &[(usize, f64)]| -> Vec<f64> {
        let mut col = vec![0.0; n];
        for &(row, coeff) in taps {
            col[row % n] += coeff;
        }
        col
    };
    (
        fold(&[(0, 1.0), (1, -2.0), (2, 1.0)]),
        fold(&[(0, 1.0), (2, 1.0)]),
    )
}

/// Eigenvalues of the two Strang circulants of size `n`, ordered to match
/// the Fourier transform.
pub fn strang_time_eigenvalues(n: usize) -> (Vec<Complex64>, Vec<Complex64>) {
    let (c1, c2) = strang_first_columns(n);
    (
        circulant_eigenvalues_real(&c1),
        circulant_eigenvalues_real(&c2),
    )
}

/// Eigenvalues of the two Tau matrices `G₁ = tridiag(-1,2,-1)` and
/// `G₂ = tridiag(-1,0,-1)` of size `n`, ordered to match the DST.
pub fn tau_time_eigenvalues(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut g1 = Vec::with_capacity(n);
    let mut g2 = Vec::with_capacity(n);
    for k in 1..=n {
        let c = (k as f64 * PI / (n as f64 + 1.0)).cos();
        g1.push(2.0 - 2.0 * c);
        g2.push(-2.0 * c);
    }
    (g1, g2)
}

pub(crate) fn check_len(v: &[f64], expected: usize) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: v.len(),
        });
    }
    Ok(())
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Applies the time transform along every stride-`m` series of a complex
/// time-major buffer.
pub(crate) fn fourier_across_time(
    buf: &mut [Complex64],
    m: usize,
    n: usize,
    plan: &FourierPlan,
    adjoint: bool,
) {
    let mut series = vec![Complex64::new(0.0, 0.0); n];
    for s in 0..m {
        for k in 0..n {
            series[k] = buf[k * m + s];
        }
        if adjoint {
            plan.apply_adjoint(&mut series);
        } else {
            plan.apply(&mut series);
        }
        for k in 0..n {
            buf[k * m + s] = series[k];
        }
    }
}

/// Applies the DST along every stride-`m` series of a real time-major
/// buffer.
pub(crate) fn sine_across_time(buf: &mut [f64], m: usize, n: usize, plan: &SinePlan) {
    let mut series = vec![0.0; n];
    for s in 0..m {
        for k in 0..n {
            series[k] = buf[k * m + s];
        }
        plan.apply(&mut series);
        for k in 0..n {
            buf[k * m + s] = series[k];
        }
    }
}

/// Applies a real spatial transform blockwise to a real buffer.
pub(crate) fn space_blocks_real(buf: &mut [f64], m: usize, op: &TransformOp) -> Result<()> {
    match op {
        TransformOp::Identity(_) => Ok(()),
        TransformOp::Sine(plan) => {
            for block in buf.chunks_mut(m) {
                plan.apply(block);
            }
            Ok(())
        }
        TransformOp::Sine2(plan) => {
            let m1 = plan.len();
            let mut series = vec![0.0; m1];
            for block in buf.chunks_mut(m) {
                for row in block.chunks_mut(m1) {
                    plan.apply(row);
                }
                for i1 in 0..m1 {
                    for i2 in 0..m1 {
                        series[i2] = block[i2 * m1 + i1];
                    }
                    plan.apply(&mut series);
                    for i2 in 0..m1 {
                        block[i2 * m1 + i1] = series[i2];
                    }
                }
            }
            Ok(())
        }
        TransformOp::Fourier(_) | TransformOp::FourierAdjoint(_) => Err(Error::InvalidParameter(
            "Fourier factor is not a real spatial transform".into(),
        )),
    }
}
