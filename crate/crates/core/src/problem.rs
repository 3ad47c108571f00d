//! Problem setup for distributed optimal control of the wave equation.
//!
//! The continuous problem minimizes a tracking functional subject to
//! `y_tt - Δy = f + u` on the unit interval/square with homogeneous
//! Dirichlet boundary data. After eliminating the control, a leap-frog
//! discretization of the coupled state/adjoint system yields one
//! all-at-once linear system in the unknown `[√γ·y ; p]`, where both
//! blocks are stored time-major with the space index fastest.
//!
//! This module owns the discretization parameters, the data samplers,
//! right-hand-side assembly, solution recovery and error measurement.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spatial dimension of the domain (unit interval or unit square).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum SpatialDim {
    One,
    Two,
}

impl SpatialDim {
    pub fn as_usize(self) -> usize {
        match self {
            SpatialDim::One => 1,
            SpatialDim::Two => 2,
        }
    }
}

impl From<SpatialDim> for u8 {
    fn from(d: SpatialDim) -> u8 {
        d.as_usize() as u8
    }
}

impl TryFrom<u8> for SpatialDim {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(SpatialDim::One),
            2 => Ok(SpatialDim::Two),
            other => Err(format!("spatial dimension must be 1 or 2, got {other}")),
        }
    }
}

/// Discretization parameters for the all-at-once system.
///
/// `m1` interior grid points per spatial direction give `m = m1^d` spatial
/// degrees of freedom with mesh width `h = 1/(m1+1)`; `n` time steps on
/// `[0, T]` give `tau = T/n`. The combined parameter `alpha = tau²/√gamma`
/// scales the diagonal blocks of the saddle-point matrix.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GridSpec {
    pub d: SpatialDim,
    pub m1: usize,
    pub m: usize,
    pub n: usize,
    pub t_final: f64,
    pub tau: f64,
    pub h: f64,
    pub gamma: f64,
    pub alpha: f64,
}

impl GridSpec {
    /// Builds a grid, validating `d ∈ {1,2}`, `m1 ≥ 1`, `n ≥ 2`, `T > 0`
    /// and `gamma > 0`.
    pub fn build(d: SpatialDim, m1: usize, n: usize, t_final: f64, gamma: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 time steps, got {n}"
            )));
        }
        Self::raw(d, m1, n, t_final, gamma)
    }

    /// Like [`GridSpec::build`] but allows degenerate single-step grids
    /// (`n = 1`), used by unit fixtures exercising pure time structure.
    pub fn raw(d: SpatialDim, m1: usize, n: usize, t_final: f64, gamma: f64) -> Result<Self> {
        if m1 == 0 {
            return Err(Error::InvalidParameter("m1 must be at least 1".into()));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("n must be at least 1".into()));
        }
        if !(t_final > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "final time must be positive, got {t_final}"
            )));
        }
        if !(gamma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "regularization gamma must be positive, got {gamma}"
            )));
        }
        let tau = t_final / n as f64;
        let h = 1.0 / (m1 as f64 + 1.0);
        let alpha = tau * tau / gamma.sqrt();
        let m = match d {
            SpatialDim::One => m1,
            SpatialDim::Two => m1 * m1,
        };
        Ok(GridSpec {
            d,
            m1,
            m,
            n,
            t_final,
            tau,
            h,
            gamma,
            alpha,
        })
    }

    /// Experiment grid with space and time steps coupled as in the
    /// reference runs: on `[0, 2]`, `n = 1/h + 1` time steps so that
    /// `h = (2/tau - 1)⁻¹`, and `m1 = 1/h - 1` interior points.
    ///
    /// `h` must be the reciprocal of an integer (e.g. `2^-7`).
    pub fn coupled(d: SpatialDim, h: f64, gamma: f64) -> Result<Self> {
        if !(h > 0.0 && h < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "coupled grids need 0 < h < 1/2, got {h}"
            )));
        }
        let inv = 1.0 / h;
        let inv_rounded = inv.round();
        if (inv - inv_rounded).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "coupled grids need 1/h integral, got h = {h}"
            )));
        }
        let k = inv_rounded as usize;
        Self::build(d, k - 1, k + 1, 2.0, gamma)
    }

    /// Total number of unknowns `2·m·n` of the all-at-once system.
    pub fn dof(&self) -> usize {
        2 * self.m * self.n
    }

    /// Interior grid points in lexicographic order (first coordinate
    /// fastest), matching the spatial ordering of all vectors.
    pub fn space_points(&self) -> Vec<Vec<f64>> {
        let m1 = self.m1;
        let h = self.h;
        match self.d {
            SpatialDim::One => (1..=m1).map(|i| vec![i as f64 * h]).collect(),
            SpatialDim::Two => {
                let mut pts = Vec::with_capacity(m1 * m1);
                for i2 in 1..=m1 {
                    for i1 in 1..=m1 {
                        pts.push(vec![i1 as f64 * h, i2 as f64 * h]);
                    }
                }
                pts
            }
        }
    }
}

/// Sampler of a space-time field; the slice holds `d` coordinates.
pub type SpaceTimeFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;
/// Sampler of a purely spatial field.
pub type SpaceFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Data of one control problem: source `f`, tracking target `g`, initial
/// state `psi0`, initial velocity `psi1`, and (when known) the exact
/// optimal state/adjoint pair used for error measurement.
#[derive(Clone)]
pub struct WaveControlProblem {
    pub f: SpaceTimeFn,
    pub g: SpaceTimeFn,
    pub psi0: SpaceFn,
    pub psi1: SpaceFn,
    pub exact_y: Option<SpaceTimeFn>,
    pub exact_p: Option<SpaceTimeFn>,
}

impl WaveControlProblem {
    pub fn new(f: SpaceTimeFn, g: SpaceTimeFn, psi0: SpaceFn, psi1: SpaceFn) -> Self {
        WaveControlProblem {
            f,
            g,
            psi0,
            psi1,
            exact_y: None,
            exact_p: None,
        }
    }

    pub fn with_exact(mut self, y: SpaceTimeFn, p: SpaceTimeFn) -> Self {
        self.exact_y = Some(y);
        self.exact_p = Some(p);
        self
    }

    /// Problem with identically zero data; assembles to a zero right-hand
    /// side.
    pub fn zero() -> Self {
        WaveControlProblem::new(
            Arc::new(|_, _| 0.0),
            Arc::new(|_, _| 0.0),
            Arc::new(|_| 0.0),
            Arc::new(|_| 0.0),
        )
    }

    /// Named presets: `example-1d` and `example-2d`.
    ///
    /// The source term depends on the regularization parameter, so the
    /// preset is built for a specific `gamma`.
    pub fn preset(name: &str, gamma: f64) -> Result<Self> {
        match name {
            "example-1d" => Ok(Self::example_1d(gamma)),
            "example-2d" => Ok(Self::example_2d(gamma)),
            other => Err(Error::UnknownProblem(other.to_string())),
        }
    }

    /// One-dimensional benchmark problem on `(0,1) × [0,2]` with exact
    /// solution `y = sin(πx)cos(πt)`, `p = sin(πx)(e^t - e^T)²`.
    pub fn example_1d(gamma: f64) -> Self {
        let t_final: f64 = 2.0;
        let f: SpaceTimeFn = Arc::new(move |x: &[f64], t: f64| {
            -1.0 / gamma * (PI * x[0]).sin() * ((t.exp() - t_final.exp()).powi(2))
        });
        let g: SpaceTimeFn = Arc::new(move |x: &[f64], t: f64| {
            let sx = (PI * x[0]).sin();
            (4.0 * (2.0 * t).exp() - 2.0 * (t_final + t).exp()) * sx
                + PI * PI * sx * (t.exp() - t_final.exp()).powi(2)
                + sx * (PI * t).cos()
        });
        let psi0: SpaceFn = Arc::new(|x: &[f64]| (PI * x[0]).sin());
        let psi1: SpaceFn = Arc::new(|_x: &[f64]| 0.0);
        let exact_y: SpaceTimeFn =
            Arc::new(|x: &[f64], t: f64| (PI * x[0]).sin() * (PI * t).cos());
        let exact_p: SpaceTimeFn = Arc::new(move |x: &[f64], t: f64| {
            (PI * x[0]).sin() * (t.exp() - t_final.exp()).powi(2)
        });
        WaveControlProblem::new(f, g, psi0, psi1).with_exact(exact_y, exact_p)
    }

    /// Two-dimensional benchmark problem on `(0,1)² × [0,2]` with exact
    /// solution `y = e^t sin(πx₁)sin(πx₂)`, `p = (t-T)² sin(πx₁)sin(πx₂)`.
    pub fn example_2d(gamma: f64) -> Self {
        let t_final: f64 = 2.0;
        let sine2 = |x: &[f64]| (PI * x[0]).sin() * (PI * x[1]).sin();
        let f: SpaceTimeFn = Arc::new(move |x: &[f64], t: f64| {
            let s = (PI * x[0]).sin() * (PI * x[1]).sin();
            (1.0 + 2.0 * PI * PI) * t.exp() * s - 1.0 / gamma * (t - t_final).powi(2) * s
        });
        let g: SpaceTimeFn = Arc::new(move |x: &[f64], t: f64| {
            let s = (PI * x[0]).sin() * (PI * x[1]).sin();
            (t.exp() + 2.0 + 2.0 * PI * PI * (t - t_final).powi(2)) * s
        });
        let psi0: SpaceFn = Arc::new(move |x: &[f64]| sine2(x));
        let psi1: SpaceFn = Arc::new(move |x: &[f64]| sine2(x));
        let exact_y: SpaceTimeFn =
            Arc::new(move |x: &[f64], t: f64| t.exp() * (PI * x[0]).sin() * (PI * x[1]).sin());
        let exact_p: SpaceTimeFn = Arc::new(move |x: &[f64], t: f64| {
            (t - t_final).powi(2) * (PI * x[0]).sin() * (PI * x[1]).sin()
        });
        WaveControlProblem::new(f, g, psi0, psi1).with_exact(exact_y, exact_p)
    }
}

/// Length-`2mn` vector in the `[√γ·y ; p]` block layout.
///
/// The first `mn` entries hold the scaled states `√γ·y^(k)` for
/// `k = 1..n` and the last `mn` entries hold the adjoints `p^(k)` for
/// `k = 0..n-1`, both time-major with the space index fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockVector {
    data: Vec<f64>,
    m: usize,
    n: usize,
}

impl BlockVector {
    pub fn new(data: Vec<f64>, m: usize, n: usize) -> Result<Self> {
        if data.len() != 2 * m * n {
            return Err(Error::DimensionMismatch {
                expected: 2 * m * n,
                got: data.len(),
            });
        }
        Ok(BlockVector { data, m, n })
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        BlockVector {
            data: vec![0.0; grid.dof()],
            m: grid.m,
            n: grid.n,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// First block: the scaled states `√γ·y`.
    pub fn state_block(&self) -> &[f64] {
        &self.data[..self.m * self.n]
    }

    /// Second block: the adjoints `p`.
    pub fn adjoint_block(&self) -> &[f64] {
        &self.data[self.m * self.n..]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}

/// Assembles the right-hand side `[g ; √γ·f]` of the all-at-once system.
///
/// The tracking block carries `τ²·g(·, t_k)` for `k = 1..n` with the final
/// entry halved. The source block carries `√γ·τ²·f(·, t_k)` for
/// `k = 0..n-1` plus the initial data moved off the unknown side by
/// ghost-point elimination of `y(·,0) = ψ0`, `y_t(·,0) = ψ1` (with
/// `L = I + (τ²/2)(-Δ)` the implicit spatial factor):
///
/// ```text
/// row 1: τ²·½f(·,0) + ψ0 + τ·ψ1        (halved leap-frog row at t₀)
/// row 2: τ²·f(·,τ) - L ψ0              (row at t₁ still sees y^(0))
/// ```
pub fn assemble_rhs(problem: &WaveControlProblem, grid: &GridSpec) -> BlockVector {
    let (m, n, tau) = (grid.m, grid.n, grid.tau);
    let tau2 = tau * tau;
    let sqrt_gamma = grid.gamma.sqrt();
    let pts = grid.space_points();
    let mut data = vec![0.0; 2 * m * n];

    let (g_block, f_block) = data.split_at_mut(m * n);
    for k in 1..=n {
        let t = k as f64 * tau;
        let weight = if k == n { 0.5 * tau2 } else { tau2 };
        let block = &mut g_block[(k - 1) * m..k * m];
        for (slot, x) in block.iter_mut().zip(&pts) {
            *slot = weight * (problem.g)(x, t);
        }
    }

    use crate::operators::LinearOperator;
    let lap = crate::operators::NegativeLaplacian::new(*grid);
    let apply_l = |w: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; m];
        lap.apply_into(w, &mut out).expect("matching lengths");
        let half_tau2 = 0.5 * tau2;
        for (o, &x) in out.iter_mut().zip(w) {
            *o = x + half_tau2 * *o;
        }
        out
    };
    let psi0: Vec<f64> = pts.iter().map(|x| (problem.psi0)(x)).collect();
    let psi1: Vec<f64> = pts.iter().map(|x| (problem.psi1)(x)).collect();
    let l_psi0 = apply_l(&psi0);

    for k in 0..n {
        let t = k as f64 * tau;
        let block = &mut f_block[k * m..(k + 1) * m];
        match k {
            0 => {
                for (i, (slot, x)) in block.iter_mut().zip(&pts).enumerate() {
                    let init = 0.5 * tau2 * (problem.f)(x, 0.0) + psi0[i] + tau * psi1[i];
                    *slot = sqrt_gamma * init;
                }
            }
            1 => {
                for (i, (slot, x)) in block.iter_mut().zip(&pts).enumerate() {
                    *slot = sqrt_gamma * (tau2 * (problem.f)(x, t) - l_psi0[i]);
                }
            }
            _ => {
                for (slot, x) in block.iter_mut().zip(&pts) {
                    *slot = sqrt_gamma * tau2 * (problem.f)(x, t);
                }
            }
        }
    }

    BlockVector { data, m, n }
}

/// Splits a solved unknown into the physical state and adjoint
/// trajectories: `y = (first block)/√γ` on `t_k = kτ, k = 1..n` and
/// `p = second block` on `t_k = kτ, k = 0..n-1`.
pub fn recover_solution(x: &BlockVector, grid: &GridSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.len() != grid.dof() {
        return Err(Error::DimensionMismatch {
            expected: grid.dof(),
            got: x.len(),
        });
    }
    let inv_sqrt_gamma = 1.0 / grid.gamma.sqrt();
    let y = x.state_block().iter().map(|v| v * inv_sqrt_gamma).collect();
    let p = x.adjoint_block().to_vec();
    Ok((y, p))
}

/// Discrete `L∞((0,T); L²(Ω))` errors of the state and adjoint
/// trajectories against the problem's exact solution:
/// `e = max_k h^{d/2} ‖·^(k) - exact(·, t_k)‖₂` over each block's own
/// time grid.
pub fn error_norms(
    y: &[f64],
    p: &[f64],
    problem: &WaveControlProblem,
    grid: &GridSpec,
) -> Result<(f64, f64)> {
    let exact_y = problem.exact_y.as_ref().ok_or(Error::MissingExactSolution)?;
    let exact_p = problem.exact_p.as_ref().ok_or(Error::MissingExactSolution)?;
    let (m, n) = (grid.m, grid.n);
    if y.len() != m * n {
        return Err(Error::DimensionMismatch {
            expected: m * n,
            got: y.len(),
        });
    }
    if p.len() != m * n {
        return Err(Error::DimensionMismatch {
            expected: m * n,
            got: p.len(),
        });
    }
    let pts = grid.space_points();
    let weight = grid.h.powi(grid.d.as_usize() as i32).sqrt();

    let block_err = |vals: &[f64], t: f64, exact: &SpaceTimeFn| -> f64 {
        let sq: f64 = vals
            .iter()
            .zip(&pts)
            .map(|(v, x)| {
                let diff = v - exact(x, t);
                diff * diff
            })
            .sum();
        weight * sq.sqrt()
    };

    let mut e_y: f64 = 0.0;
    for k in 1..=n {
        let err = block_err(&y[(k - 1) * m..k * m], k as f64 * grid.tau, exact_y);
        e_y = e_y.max(err);
    }
    let mut e_p: f64 = 0.0;
    for k in 0..n {
        let err = block_err(&p[k * m..(k + 1) * m], k as f64 * grid.tau, exact_p);
        e_p = e_p.max(err);
    }
    Ok((e_y, e_p))
}
