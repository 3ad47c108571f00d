//! The ideal block diagonal preconditioner
//! `|H| = blockdiag(√(TᵀT + α²I), √(TTᵀ + α²I))`, held as two dense
//! symmetric eigendecompositions. Desk-scale only: it exists to verify
//! the localization and convergence bounds the fast preconditioners
//! approximate.

use ndarray::{Array1, Array2};

use crate::eigen::symmetric_eigen;
use crate::error::{Error, Result};
use crate::operators::{materialize_dense, BlockToeplitzT, NegativeLaplacian};
use crate::problem::GridSpec;

use super::{check_len, PrecondKind, SpdPreconditioner};

/// Largest system (2mn) the dense factorization accepts.
pub const ABS_H_LIMIT: usize = 10_000;

pub struct AbsHPreconditioner {
    grid: GridSpec,
    q1: Array2<f64>,
    inv_sqrt1: Vec<f64>,
    q2: Array2<f64>,
    inv_sqrt2: Vec<f64>,
}

impl AbsHPreconditioner {
    pub fn build(laplacian: NegativeLaplacian) -> Result<Self> {
        let grid = *laplacian.grid();
        if grid.dof() > ABS_H_LIMIT {
            return Err(Error::SizeGuard {
                what: "ideal |H| factorization",
                requested: grid.dof(),
                limit: ABS_H_LIMIT,
            });
        }
        let t = BlockToeplitzT::with_laplacian(laplacian);
        let t_dense = materialize_dense(&t)?;
        let alpha2 = grid.alpha * grid.alpha;
        let mn = grid.m * grid.n;

        let gram = |left_transposed: bool| -> Array2<f64> {
            let mut out = Array2::zeros((mn, mn));
            for i in 0..mn {
                for j in 0..=i {
                    let mut acc = 0.0;
                    for k in 0..mn {
                        acc += if left_transposed {
                            t_dense[(k, i)] * t_dense[(k, j)]
                        } else {
                            t_dense[(i, k)] * t_dense[(j, k)]
                        };
                    }
                    if i == j {
                        acc += alpha2;
                    }
                    out[(i, j)] = acc;
                    out[(j, i)] = acc;
                }
            }
            out
        };

        let (q1, inv_sqrt1) = factor(&gram(true))?; // TᵀT + α²I
        let (q2, inv_sqrt2) = factor(&gram(false))?; // TTᵀ + α²I
        Ok(AbsHPreconditioner {
            grid,
            q1,
            inv_sqrt1,
            q2,
            inv_sqrt2,
        })
    }

    fn apply_block(q: &Array2<f64>, inv_sqrt: &[f64], v: &[f64], out: &mut [f64]) {
        let coeffs = q.t().dot(&Array1::from(v.to_vec()));
        let scaled: Array1<f64> =
            Array1::from_iter(coeffs.iter().zip(inv_sqrt).map(|(c, d)| c * d));
        let result = q.dot(&scaled);
        out.copy_from_slice(result.as_slice().unwrap());
    }
}

fn factor(gram: &Array2<f64>) -> Result<(Array2<f64>, Vec<f64>)> {
    let decomp = symmetric_eigen(gram)?;
    if let Some(&bad) = decomp.values.iter().find(|&&l| l <= 0.0) {
        return Err(Error::NotPositiveDefinite(bad));
    }
    let inv_sqrt = decomp.values.iter().map(|&l| 1.0 / l.sqrt()).collect();
    Ok((decomp.vectors, inv_sqrt))
}

impl SpdPreconditioner for AbsHPreconditioner {
    fn dim(&self) -> usize {
        self.grid.dof()
    }

    fn kind(&self) -> PrecondKind {
        PrecondKind::AbsH
    }

    fn apply_inverse_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        let mn = self.grid.m * self.grid.n;
        check_len(v, 2 * mn)?;
        check_len(out, 2 * mn)?;
        let (v1, v2) = v.split_at(mn);
        let (out1, out2) = out.split_at_mut(mn);
        Self::apply_block(&self.q1, &self.inv_sqrt1, v1, out1);
        Self::apply_block(&self.q2, &self.inv_sqrt2, v2, out2);
        Ok(())
    }
}
