//! Matrix-free application of the discrete operators making up the
//! all-at-once system: the negative Laplacian stencil, the block lower
//! triangular Toeplitz matrix `T = B₁⊗I - (τ²/2)B₂⊗Δ`, and the symmetric
//! saddle-point matrix
//!
//! ```text
//! A = [ α·Ǐ⊗I   Tᵀ      ]        Ǐ = diag(1,…,1,½)
//!     [ T      -α·Î⊗I   ]        Î = diag(½,1,…,1)
//! ```
//!
//! Everything applies in `O(mn)`; dense materialization is provided for
//! desk-scale verification only.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::problem::{GridSpec, SpatialDim};
use crate::transforms::{SinePlan, TransformOp};

/// Anything that can be applied to a vector; the basis of the matrix-free
/// solver stack.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    fn apply_into(&self, v: &[f64], out: &mut [f64]) -> Result<()>;

    fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(v, &mut out)?;
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Stencil {
    /// Second-order central differences with zero Dirichlet ghosts.
    Dirichlet,
    /// Testing fixture with `Δ = 0`, so `L = I` and all time structure is
    /// exposed undisturbed.
    Zero,
}

/// The SPD matrix `-Δ_m` on the uniform grid, applied stencil-wise.
#[derive(Clone, Copy, Debug)]
pub struct NegativeLaplacian {
    grid: GridSpec,
    stencil: Stencil,
}

impl NegativeLaplacian {
    pub fn new(grid: GridSpec) -> Self {
        NegativeLaplacian {
            grid,
            stencil: Stencil::Dirichlet,
        }
    }

    /// The `Δ = 0` fixture: applying it yields zero and `L_m = I_m`.
    pub fn zero_fixture(grid: GridSpec) -> Self {
        NegativeLaplacian {
            grid,
            stencil: Stencil::Zero,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn is_zero_fixture(&self) -> bool {
        self.stencil == Stencil::Zero
    }

    /// Eigenvalues in the ordering produced by [`NegativeLaplacian::transform`]:
    /// 1-D `μ_j = (4/h²)sin²(jπh/2)`; 2-D all pairwise sums, first index
    /// fastest.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let g = &self.grid;
        if self.stencil == Stencil::Zero {
            return vec![0.0; g.m];
        }
        let one_d: Vec<f64> = (1..=g.m1)
            .map(|j| {
                let s = (j as f64 * std::f64::consts::PI * g.h / 2.0).sin();
                4.0 / (g.h * g.h) * s * s
            })
            .collect();
        match g.d {
            SpatialDim::One => one_d,
            SpatialDim::Two => {
                let mut out = Vec::with_capacity(g.m);
                for j2 in 0..g.m1 {
                    for j1 in 0..g.m1 {
                        out.push(one_d[j1] + one_d[j2]);
                    }
                }
                out
            }
        }
    }

    /// The orthogonal eigenvector transform: DST-I per direction, or the
    /// identity for the zero fixture.
    pub fn transform(&self) -> TransformOp {
        if self.stencil == Stencil::Zero {
            return TransformOp::Identity(self.grid.m);
        }
        let plan = std::sync::Arc::new(SinePlan::new(self.grid.m1));
        match self.grid.d {
            SpatialDim::One => TransformOp::Sine(plan),
            SpatialDim::Two => TransformOp::Sine2(plan),
        }
    }

    fn apply_dirichlet_1d(inv_h2: f64, v: &[f64], out: &mut [f64]) {
        let m = v.len();
        for i in 0..m {
            let left = if i > 0 { v[i - 1] } else { 0.0 };
            let right = if i + 1 < m { v[i + 1] } else { 0.0 };
            out[i] += inv_h2 * (2.0 * v[i] - left - right);
        }
    }
}

impl LinearOperator for NegativeLaplacian {
    fn dim(&self) -> usize {
        self.grid.m
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        let g = &self.grid;
        if v.len() != g.m || out.len() != g.m {
            return Err(Error::DimensionMismatch {
                expected: g.m,
                got: v.len().max(out.len()),
            });
        }
        out.fill(0.0);
        if self.stencil == Stencil::Zero {
            return Ok(());
        }
        let inv_h2 = 1.0 / (g.h * g.h);
        match g.d {
            SpatialDim::One => Self::apply_dirichlet_1d(inv_h2, v, out),
            SpatialDim::Two => {
                let m1 = g.m1;
                for (row_v, row_out) in v.chunks(m1).zip(out.chunks_mut(m1)) {
                    Self::apply_dirichlet_1d(inv_h2, row_v, row_out);
                }
                for i1 in 0..m1 {
                    for i2 in 0..m1 {
                        let idx = i2 * m1 + i1;
                        let down = if i2 > 0 { v[idx - m1] } else { 0.0 };
                        let up = if i2 + 1 < m1 { v[idx + m1] } else { 0.0 };
                        out[idx] += inv_h2 * (2.0 * v[idx] - down - up);
                    }
                }
            }
        }
        Ok(())
    }
}

/// The block lower triangular Toeplitz matrix `T` with time stencils
/// `B₁ = (1,-2,1)` and `B₂ = (1,0,1)` on diagonals `0,-1,-2`, and spatial
/// factor `L = I + (τ²/2)(-Δ)` on the even taps.
#[derive(Clone, Copy, Debug)]
pub struct BlockToeplitzT {
    laplacian: NegativeLaplacian,
}

impl BlockToeplitzT {
    pub fn new(grid: GridSpec) -> Self {
        BlockToeplitzT {
            laplacian: NegativeLaplacian::new(grid),
        }
    }

    pub fn with_laplacian(laplacian: NegativeLaplacian) -> Self {
        BlockToeplitzT { laplacian }
    }

    pub fn grid(&self) -> &GridSpec {
        self.laplacian.grid()
    }

    pub fn laplacian(&self) -> &NegativeLaplacian {
        &self.laplacian
    }

    /// Applies `L = I + (τ²/2)(-Δ)` to one spatial block.
    pub fn apply_l_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        self.laplacian.apply_into(v, out)?;
        let half_tau2 = 0.5 * self.grid().tau * self.grid().tau;
        for (o, &x) in out.iter_mut().zip(v) {
            *o = x + half_tau2 * *o;
        }
        Ok(())
    }

    /// Output block `k = L·v_k - 2·v_{k-1} + L·v_{k-2}`, missing blocks
    /// treated as zero.
    pub fn apply_t_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        let (m, n) = (self.grid().m, self.grid().n);
        check_len(v, m * n)?;
        check_len(out, m * n)?;
        let mut lv = vec![0.0; m * n];
        for (src, dst) in v.chunks(m).zip(lv.chunks_mut(m)) {
            self.apply_l_into(src, dst)?;
        }
        for k in 0..n {
            let block = &mut out[k * m..(k + 1) * m];
            block.copy_from_slice(&lv[k * m..(k + 1) * m]);
            if k >= 1 {
                for (o, &x) in block.iter_mut().zip(&v[(k - 1) * m..k * m]) {
                    *o -= 2.0 * x;
                }
            }
            if k >= 2 {
                for (o, &x) in block.iter_mut().zip(&lv[(k - 2) * m..(k - 1) * m]) {
                    *o += x;
                }
            }
        }
        Ok(())
    }

    /// The mirrored band: output block `k = L·v_k - 2·v_{k+1} + L·v_{k+2}`.
    pub fn apply_t_transpose_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        let (m, n) = (self.grid().m, self.grid().n);
        check_len(v, m * n)?;
        check_len(out, m * n)?;
        let mut lv = vec![0.0; m * n];
        for (src, dst) in v.chunks(m).zip(lv.chunks_mut(m)) {
            self.apply_l_into(src, dst)?;
        }
        for k in 0..n {
            let block = &mut out[k * m..(k + 1) * m];
            block.copy_from_slice(&lv[k * m..(k + 1) * m]);
            if k + 1 < n {
                for (o, &x) in block.iter_mut().zip(&v[(k + 1) * m..(k + 2) * m]) {
                    *o -= 2.0 * x;
                }
            }
            if k + 2 < n {
                for (o, &x) in block.iter_mut().zip(&lv[(k + 2) * m..(k + 3) * m]) {
                    *o += x;
                }
            }
        }
        Ok(())
    }

    pub fn apply_t(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.apply_t_into(v, &mut out)?;
        Ok(out)
    }

    pub fn apply_t_transpose(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.apply_t_transpose_into(v, &mut out)?;
        Ok(out)
    }

    /// View of `Tᵀ` as an operator, for dense materialization.
    pub fn transpose_op(&self) -> TransposeOfT {
        TransposeOfT { t: *self }
    }
}

impl LinearOperator for BlockToeplitzT {
    fn dim(&self) -> usize {
        self.grid().m * self.grid().n
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        self.apply_t_into(v, out)
    }
}

/// Adapter exposing `Tᵀ` through [`LinearOperator`].
#[derive(Clone, Copy, Debug)]
pub struct TransposeOfT {
    t: BlockToeplitzT,
}

impl LinearOperator for TransposeOfT {
    fn dim(&self) -> usize {
        self.t.dim()
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        self.t.apply_t_transpose_into(v, out)
    }
}

/// The symmetric indefinite saddle-point matrix of the all-at-once system.
#[derive(Clone, Copy, Debug)]
pub struct SaddleOperator {
    t: BlockToeplitzT,
}

impl SaddleOperator {
    pub fn new(grid: GridSpec) -> Self {
        SaddleOperator {
            t: BlockToeplitzT::new(grid),
        }
    }

    pub fn with_laplacian(laplacian: NegativeLaplacian) -> Self {
        SaddleOperator {
            t: BlockToeplitzT::with_laplacian(laplacian),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        self.t.grid()
    }

    pub fn toeplitz(&self) -> &BlockToeplitzT {
        &self.t
    }
}

impl LinearOperator for SaddleOperator {
    fn dim(&self) -> usize {
        2 * self.t.dim()
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        let g = *self.grid();
        let mn = g.m * g.n;
        check_len(v, 2 * mn)?;
        check_len(out, 2 * mn)?;
        let (v1, v2) = v.split_at(mn);
        let (out1, out2) = out.split_at_mut(mn);

        // out₁ = α·Ǐ v₁ + Tᵀ v₂ with Ǐ halving the last time block.
        self.t.apply_t_transpose_into(v2, out1)?;
        for k in 0..g.n {
            let w = if k + 1 == g.n { 0.5 * g.alpha } else { g.alpha };
            for (o, &x) in out1[k * g.m..(k + 1) * g.m].iter_mut().zip(&v1[k * g.m..]) {
                *o += w * x;
            }
        }

        // out₂ = T v₁ - α·Î v₂ with Î halving the first time block.
        self.t.apply_t_into(v1, out2)?;
        for k in 0..g.n {
            let w = if k == 0 { 0.5 * g.alpha } else { g.alpha };
            for (o, &x) in out2[k * g.m..(k + 1) * g.m].iter_mut().zip(&v2[k * g.m..]) {
                *o -= w * x;
            }
        }
        Ok(())
    }
}

fn check_len(v: &[f64], expected: usize) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: v.len(),
        });
    }
    Ok(())
}

/// Dense materialization guard: verification matrices stay desk-scale.
pub const MATERIALIZE_LIMIT: usize = 10_000;

/// Materializes an operator column-by-column; column `j` is the image of
/// the `j`-th standard basis vector.
pub fn materialize_dense(op: &dyn LinearOperator) -> Result<Array2<f64>> {
    let n = op.dim();
    if n > MATERIALIZE_LIMIT {
        return Err(Error::SizeGuard {
            what: "dense materialization",
            requested: n,
            limit: MATERIALIZE_LIMIT,
        });
    }
    let mut dense = Array2::zeros((n, n));
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply_into(&e, &mut col)?;
        e[j] = 0.0;
        for i in 0..n {
            dense[(i, j)] = col[i];
        }
    }
    Ok(dense)
}
