//! Preconditioned MINRES for symmetric indefinite systems.
//!
//! The Lanczos recurrence runs in the `P⁻¹` inner product, so only the
//! apply-inverse action of the SPD preconditioner is needed. The natural
//! residual quantity of that recurrence is `‖r_k‖_{P⁻¹}`; it is
//! nonincreasing by construction, drives the stopping test, and is
//! recorded per iteration so residual-decay bounds can be checked
//! directly. The true 2-norm relative residual is recomputed once at the
//! end for reporting.

use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::LinearOperator;
use crate::precond::{IdentityPreconditioner, SpdPreconditioner};

/// Relative threshold under which a vanishing Lanczos β is treated as a
/// lucky breakdown (exact invariant subspace reached).
const BREAKDOWN_TOL: f64 = 1e-14;

/// Outcome bookkeeping of one MINRES solve.
#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub converged: bool,
    /// `‖r_k‖_{P⁻¹}` for `k = 0..iterations`.
    pub residual_history: Vec<f64>,
    /// Final `‖r_k‖_{P⁻¹} / ‖r_0‖_{P⁻¹}`.
    pub final_relative_residual: f64,
    /// Final `‖b - Ax‖₂ / ‖b‖₂`, recomputed from the returned iterate.
    pub final_true_relative_residual: f64,
    pub wall_time_s: f64,
    /// Set when the solve ended through an exact-subspace breakdown
    /// rather than the tolerance test.
    pub breakdown: bool,
}

/// Preconditioned MINRES with zero initial guess: returns once
/// `‖r_k‖_{P⁻¹} ≤ tol·‖r_0‖_{P⁻¹}` or `maxit` iterations elapsed.
pub fn minres(
    op: &dyn LinearOperator,
    precond: &dyn SpdPreconditioner,
    b: &[f64],
    tol: f64,
    maxit: usize,
) -> Result<(Vec<f64>, SolveReport)> {
    let start = Instant::now();
    let dim = op.dim();
    if b.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: b.len(),
        });
    }
    if precond.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: precond.dim(),
        });
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }

    let mut x = vec![0.0; dim];
    let b_norm2 = norm2(b);
    if b_norm2 == 0.0 {
        return Ok((
            x,
            SolveReport {
                iterations: 0,
                converged: true,
                residual_history: vec![0.0],
                final_relative_residual: 0.0,
                final_true_relative_residual: 0.0,
                wall_time_s: start.elapsed().as_secs_f64(),
                breakdown: false,
            },
        ));
    }

    // x₀ = 0, so r₀ = b.
    let mut v = b.to_vec();
    let mut z = precond.apply_inverse(&v)?;
    let beta1_sq = dot(&v, &z);
    if !beta1_sq.is_finite() || beta1_sq <= 0.0 {
        return Err(Error::Breakdown(format!(
            "preconditioner is not SPD: <P⁻¹r, r> = {beta1_sq:.3e}"
        )));
    }
    let beta1 = beta1_sq.sqrt();
    scale(&mut v, 1.0 / beta1);
    scale(&mut z, 1.0 / beta1);

    let mut v_prev = vec![0.0; dim];
    let mut dir = vec![0.0; dim];
    let mut dir_prev = vec![0.0; dim];
    let mut av = vec![0.0; dim];

    let mut beta = beta1;
    let mut c_prev = 1.0;
    let mut s_prev = 0.0;
    let mut c = 1.0;
    let mut s = 0.0;
    let mut eta = 1.0;
    let mut phi = beta1; // ‖r_k‖_{P⁻¹}
    let mut history = vec![beta1];
    let mut converged = false;
    let mut breakdown = false;
    let mut iterations = 0;

    for _ in 0..maxit {
        // Lanczos step in the P⁻¹ inner product.
        op.apply_into(&z, &mut av)?;
        let alpha = dot(&z, &av);
        for i in 0..dim {
            av[i] -= beta * v_prev[i] + alpha * v[i];
        }
        let z_next = precond.apply_inverse(&av)?;
        let beta_next_sq = dot(&av, &z_next);
        if !alpha.is_finite() || !beta_next_sq.is_finite() {
            return Err(Error::Breakdown("NaN in Lanczos recurrence".into()));
        }
        if beta_next_sq < 0.0 {
            return Err(Error::Breakdown(format!(
                "preconditioner is not SPD: <P⁻¹r, r> = {beta_next_sq:.3e}"
            )));
        }
        let beta_next = beta_next_sq.sqrt();

        // Two stored Givens rotations applied to the new column, then one
        // new rotation annihilating β_{k+1}.
        let rho3 = s_prev * beta;
        let delta = c_prev * beta;
        let rho2 = s * alpha + c * delta;
        let rho1_hat = c * alpha - s * delta;
        let rho1 = rho1_hat.hypot(beta_next);
        if rho1 == 0.0 {
            return Err(Error::Breakdown("zero pivot in Givens update".into()));
        }
        c_prev = c;
        s_prev = s;
        c = rho1_hat / rho1;
        s = beta_next / rho1;

        // Direction update from the preconditioned Lanczos vector.
        for i in 0..dim {
            let d = (z[i] - rho2 * dir[i] - rho3 * dir_prev[i]) / rho1;
            dir_prev[i] = dir[i];
            dir[i] = d;
        }
        let step = beta1 * c * eta;
        for i in 0..dim {
            x[i] += step * dir[i];
        }
        eta *= -s;

        iterations += 1;
        phi *= s.abs();
        history.push(phi);

        if phi <= tol * beta1 {
            converged = true;
            break;
        }
        if beta_next <= BREAKDOWN_TOL * beta1 {
            // Lucky breakdown: the Krylov space is invariant and the
            // iterate is exact in it.
            converged = true;
            breakdown = true;
            break;
        }

        std::mem::swap(&mut v_prev, &mut v);
        v.copy_from_slice(&av);
        scale(&mut v, 1.0 / beta_next);
        z = z_next;
        scale(&mut z, 1.0 / beta_next);
        beta = beta_next;
    }

    // True residual, recomputed from scratch.
    op.apply_into(&x, &mut av)?;
    let mut true_res = 0.0;
    for i in 0..dim {
        let r = b[i] - av[i];
        true_res += r * r;
    }
    let report = SolveReport {
        iterations,
        converged,
        final_relative_residual: phi / beta1,
        final_true_relative_residual: true_res.sqrt() / b_norm2,
        residual_history: history,
        wall_time_s: start.elapsed().as_secs_f64(),
        breakdown,
    };
    Ok((x, report))
}

/// MINRES without preconditioning (the identity baseline).
pub fn minres_unpreconditioned(
    op: &dyn LinearOperator,
    b: &[f64],
    tol: f64,
    maxit: usize,
) -> Result<(Vec<f64>, SolveReport)> {
    let identity = IdentityPreconditioner::new(op.dim());
    minres(op, &identity, b, tol, maxit)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn scale(a: &mut [f64], factor: f64) {
    for x in a.iter_mut() {
        *x *= factor;
    }
}
