//! The Tau preconditioner `P_G`.
//!
//! `G = G₁⊗I + (τ²/2)G₂⊗(-Δ)` is symmetric, so `GᵀG = GGᵀ = G²` and both
//! diagonal blocks of the preconditioner are identical with diagonal
//! `√((g1_k + (τ²/2)·g2_k·μ_j)² + α²)` in the DST⊗DST basis. The whole
//! pipeline stays in real arithmetic.

use std::sync::Arc;

use crate::error::Result;
use crate::operators::NegativeLaplacian;
use crate::problem::GridSpec;
use crate::transforms::{SinePlan, TransformOp};

use super::{
    check_len, sine_across_time, space_blocks_real, tau_time_eigenvalues, PrecondKind,
    SpdPreconditioner,
};

pub struct TauPreconditioner {
    grid: GridSpec,
    space: TransformOp,
    time: Arc<SinePlan>,
    inv_diag: Vec<f64>,
}

impl TauPreconditioner {
    pub fn build(laplacian: NegativeLaplacian) -> Result<Self> {
        let grid = *laplacian.grid();
        let (g1, g2) = tau_time_eigenvalues(grid.n);
        let mu = laplacian.eigenvalues();
        let half_tau2 = 0.5 * grid.tau * grid.tau;
        let alpha2 = grid.alpha * grid.alpha;

        let mut inv_diag = Vec::with_capacity(grid.m * grid.n);
        for k in 0..grid.n {
            for &mu_j in &mu {
                let lambda = g1[k] + half_tau2 * g2[k] * mu_j;
                inv_diag.push(1.0 / (lambda * lambda + alpha2).sqrt());
            }
        }
        Ok(TauPreconditioner {
            grid,
            space: laplacian.transform(),
            time: Arc::new(SinePlan::new(grid.n)),
            inv_diag,
        })
    }

    /// Combined diagonal entries `√(λ(G)² + α²)`, time-major.
    pub fn diagonal(&self) -> Vec<f64> {
        self.inv_diag.iter().map(|d| 1.0 / d).collect()
    }

    fn apply_block(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        let (m, n) = (self.grid.m, self.grid.n);
        out.copy_from_slice(v);
        space_blocks_real(out, m, &self.space)?;
        sine_across_time(out, m, n, &self.time);
        for (x, d) in out.iter_mut().zip(&self.inv_diag) {
            *x *= *d;
        }
        sine_across_time(out, m, n, &self.time);
        space_blocks_real(out, m, &self.space)?;
        Ok(())
    }
}

impl SpdPreconditioner for TauPreconditioner {
    fn dim(&self) -> usize {
        self.grid.dof()
    }

    fn kind(&self) -> PrecondKind {
        PrecondKind::Tau
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
    use crate::problem::SpatialDim;
    use crate::spectral::dense_tau_g;
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

    fn dense_oracle_apply(grid: &GridSpec, lap: &NegativeLaplacian, v: &[f64]) -> Vec<f64> {
        let mn = grid.m * grid.n;
        let g = dense_tau_g(lap);
        let alpha2 = grid.alpha * grid.alpha;
        let mut gram = Array2::zeros((mn, mn));
        for i in 0..mn {
            for j in 0..mn {
                let mut acc = 0.0;
                for k in 0..mn {
                    acc += g[(k, i)] * g[(k, j)];
                }
                gram[(i, j)] = acc;
            }
        }
        for i in 0..mn {
            gram[(i, i)] += alpha2;
        }
        let root = spd_sqrt(&gram).unwrap();
        let mut out = Vec::with_capacity(2 * mn);
        out.extend(symmetric_solve(&root, &v[..mn]).unwrap());
        out.extend(symmetric_solve(&root, &v[mn..]).unwrap());
        out
    }

    #[test]
    fn matches_dense_matrix_square_root_oracle() {
        let grid = GridSpec::build(SpatialDim::One, 3, 4, 2.0, 1e-2).unwrap();
        let lap = NegativeLaplacian::new(grid);
        let p = TauPreconditioner::build(lap).unwrap();
        let v = random_vec(grid.dof(), 29);
        let got = p.apply_inverse(&v).unwrap();
        let want = dense_oracle_apply(&grid, &lap, &v);
        for (g, w) in got.iter().zip(&want) {
            assert_relative_eq!(g, w, max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn blocks_are_identical() {
        // G symmetric ⇒ the two diagonal blocks coincide: feeding (v, 0)
        // and (0, v) gives mirrored results.
        let grid = GridSpec::build(SpatialDim::One, 3, 5, 2.0, 1e-4).unwrap();
        let p = TauPreconditioner::build(NegativeLaplacian::new(grid)).unwrap();
        let mn = grid.m * grid.n;
        let v = random_vec(mn, 31);
        let mut first = vec![0.0; 2 * mn];
        first[..mn].copy_from_slice(&v);
        let mut second = vec![0.0; 2 * mn];
        second[mn..].copy_from_slice(&v);
        let a = p.apply_inverse(&first).unwrap();
        let b = p.apply_inverse(&second).unwrap();
        for i in 0..mn {
            assert_relative_eq!(a[i], b[mn + i], max_relative = 1e-14);
            assert_eq!(a[mn + i], 0.0);
            assert_eq!(b[i], 0.0);
        }
    }

    #[test]
    fn degenerate_single_step_matches_dense_oracle() {
        let grid = GridSpec::raw(SpatialDim::One, 3, 1, 2.0, 1.0).unwrap();
        let lap = NegativeLaplacian::new(grid);
        let p = TauPreconditioner::build(lap).unwrap();
        let v = random_vec(grid.dof(), 41);
        let got = p.apply_inverse(&v).unwrap();
        let want = dense_oracle_apply(&grid, &lap, &v);
        for (g, w) in got.iter().zip(&want) {
            assert_relative_eq!(g, w, max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn positive_quadratic_form() {
        let grid = GridSpec::build(SpatialDim::Two, 3, 4, 2.0, 1e-4).unwrap();
        let p = TauPreconditioner::build(NegativeLaplacian::new(grid)).unwrap();
        for seed in 0..20u64 {
            let v = random_vec(grid.dof(), 100 + seed);
            let pv = p.apply_inverse(&v).unwrap();
            let quad: f64 = pv.iter().zip(&v).map(|(a, b)| a * b).sum();
            assert!(quad > 0.0);
        }
    }
}
