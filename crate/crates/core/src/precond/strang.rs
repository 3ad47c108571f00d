//! The Strang circulant preconditioner `P_S`.
//!
//! With `S = S₁⊗I + (τ²/2)S₂⊗(-Δ)` the skeleton is normal, so both
//! diagonal blocks of `blockdiag(√(SᵀS+α²I), √(SSᵀ+α²I))` coincide and
//! share the diagonal `√(|Λ|² + α²)` with
//! `Λ_{k,j} = s1_k + (τ²/2)·s2_k·μ_j`. Inversion is three steps: the
//! unitary transform `F⊗U` (conjugated pattern on the second block), a
//! diagonal scaling, and the transform back.

use std::sync::Arc;


use crate::error::Result;
use crate::operators::NegativeLaplacian;
use crate::problem::GridSpec;
use crate::transforms::{into_real_checked, to_complex, FourierPlan, TransformOp};

use super::{
    check_len, fourier_across_time, norm2, strang_time_eigenvalues, PrecondKind,
    SpdPreconditioner,
};

pub struct StrangPreconditioner {
    grid: GridSpec,
    space: TransformOp,
    time: Arc<FourierPlan>,
    inv_diag: Vec<f64>,
}

impl StrangPreconditioner {
    pub fn build(laplacian: NegativeLaplacian) -> Result<Self> {
        let grid = *laplacian.grid();
        let (s1, s2) = strang_time_eigenvalues(grid.n);
        let mu = laplacian.eigenvalues();
        let half_tau2 = 0.5 * grid.tau * grid.tau;
        let alpha2 = grid.alpha * grid.alpha;

        let mut inv_diag = Vec::with_capacity(grid.m * grid.n);
        for k in 0..grid.n {
            for &mu_j in &mu {
                let lambda = s1[k] + s2[k] * (half_tau2 * mu_j);
                inv_diag.push(1.0 / (lambda.norm_sqr() + alpha2).sqrt());
            }
        }
        Ok(StrangPreconditioner {
            grid,
            space: laplacian.transform(),
            time: Arc::new(FourierPlan::new(grid.n)),
            inv_diag,
        })
    }

    /// Combined diagonal entries `√(|Λ|²+α²)`, time-major.
    pub fn diagonal(&self) -> Vec<f64> {
        self.inv_diag.iter().map(|d| 1.0 / d).collect()
    }

    fn apply_block(&self, v: &[f64], out: &mut [f64], adjoint_first: bool) -> Result<()> {
        let (m, n) = (self.grid.m, self.grid.n);
        let mut buf = to_complex(v);
        for block in buf.chunks_mut(m) {
            self.space.apply_block(block);
        }
        fourier_across_time(&mut buf, m, n, &self.time, adjoint_first);
        for (z, d) in buf.iter_mut().zip(&self.inv_diag) {
            *z *= *d;
        }
        fourier_across_time(&mut buf, m, n, &self.time, !adjoint_first);
        for block in buf.chunks_mut(m) {
            self.space.apply_block(block);
        }
        out.copy_from_slice(&into_real_checked(&buf, norm2(v))?);
        Ok(())
    }
}

impl SpdPreconditioner for StrangPreconditioner {
    fn dim(&self) -> usize {
        self.grid.dof()
    }

    fn kind(&self) -> PrecondKind {
        PrecondKind::Strang
    }

    fn apply_inverse_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        let mn = self.grid.m * self.grid.n;
        check_len(v, 2 * mn)?;
        check_len(out, 2 * mn)?;
        let (v1, v2) = v.split_at(mn);
        let (out1, out2) = out.split_at_mut(mn);
        // First block uses (F⊗U)*·diag·(F⊗U)… pattern; the second block
        // the conjugate one, per the unitary blockdiag(F⊗U, (F⊗U)*).
        self.apply_block(v1, out1, true)?;
        self.apply_block(v2, out2, false)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::{spd_sqrt, symmetric_solve};
    use crate::problem::SpatialDim;
    use crate::spectral::dense_strang_s;
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
    fn real_input_gives_real_output() {
        let grid = GridSpec::build(SpatialDim::One, 3, 4, 2.0, 1e-4).unwrap();
        let p = StrangPreconditioner::build(NegativeLaplacian::new(grid)).unwrap();
        let v = random_vec(grid.dof(), 11);
        // apply_inverse already errors on imaginary residue; success is the
        // assertion.
        let out = p.apply_inverse(&v).unwrap();
        assert_eq!(out.len(), grid.dof());
    }

    #[test]
    fn matches_dense_matrix_square_root_oracle() {
        let grid = GridSpec::build(SpatialDim::One, 3, 4, 2.0, 1e-2).unwrap();
        let lap = NegativeLaplacian::new(grid);
        let p = StrangPreconditioner::build(lap).unwrap();
        let mn = grid.m * grid.n;
        let s = dense_strang_s(&lap);
        let alpha2 = grid.alpha * grid.alpha;

        // blockdiag(√(SᵀS+α²I), √(SSᵀ+α²I)) applied through dense algebra.
        let gram = |transposed: bool| -> Array2<f64> {
            let mut g = Array2::zeros((mn, mn));
            for i in 0..mn {
                for j in 0..mn {
                    let mut acc = 0.0;
                    for k in 0..mn {
                        acc += if transposed {
                            s[(k, i)] * s[(k, j)]
                        } else {
                            s[(i, k)] * s[(j, k)]
                        };
                    }
                    g[(i, j)] = acc;
                }
            }
            for i in 0..mn {
                g[(i, i)] += alpha2;
            }
            g
        };

        let v = random_vec(2 * mn, 5);
        let got = p.apply_inverse(&v).unwrap();
        for (transposed, range) in [(true, 0..mn), (false, mn..2 * mn)] {
            let root = spd_sqrt(&gram(transposed)).unwrap();
            let want = symmetric_solve(&root, &v[range.clone()]).unwrap();
            for (g, w) in got[range].iter().zip(&want) {
                assert_relative_eq!(g, w, max_relative = 1e-10, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn large_alpha_inverse_approaches_identity_over_alpha() {
        // √(|Λ|²+α²) ∈ [α, α·√(1+max|Λ|²/α²)], so α·P⁻¹ ≈ I for huge α.
        let grid = GridSpec::raw(SpatialDim::One, 2, 3, 2.0, 2.0f64.powi(-2) * 1e-24).unwrap();
        assert!(grid.alpha > 1e5);
        let p = StrangPreconditioner::build(NegativeLaplacian::new(grid)).unwrap();
        let v = random_vec(grid.dof(), 3);
        let out = p.apply_inverse(&v).unwrap();
        let err: f64 = out
            .iter()
            .zip(&v)
            .map(|(o, x)| (grid.alpha * o - x).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(err <= 1e-5 * norm2(&v), "deviation {err:.3e}");
    }

    #[test]
    fn self_adjoint_in_euclidean_inner_product() {
        let grid = GridSpec::build(SpatialDim::One, 4, 5, 2.0, 1e-4).unwrap();
        let p = StrangPreconditioner::build(NegativeLaplacian::new(grid)).unwrap();
        let v = random_vec(grid.dof(), 17);
        let w = random_vec(grid.dof(), 23);
        let pv = p.apply_inverse(&v).unwrap();
        let pw = p.apply_inverse(&w).unwrap();
        let lhs: f64 = pv.iter().zip(&w).map(|(a, b)| a * b).sum();
        let rhs: f64 = v.iter().zip(&pw).map(|(a, b)| a * b).sum();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
    }
}
