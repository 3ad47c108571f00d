//! Dense symmetric eigensolver used as the verification oracle: Householder
//! reduction to tridiagonal form followed by the implicit-shift QL
//! iteration, the classical EISPACK tred2/tql2 pair.
//!
//! The solver is self-contained on purpose: it cross-checks the fast
//! transform-based factorizations elsewhere in the crate, so it must not
//! share code paths with them.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Desk-scale guard for dense eigendecompositions.
pub const EIGEN_SIZE_LIMIT: usize = 10_000;

const MAX_QL_SWEEPS: usize = 50;

/// Eigendecomposition of a real symmetric matrix; eigenvalues ascend and
/// column `j` of `vectors` belongs to `values[j]`.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Array2<f64>,
}

/// All eigenvalues of a dense symmetric matrix, sorted nondecreasingly.
pub fn symmetric_eigenvalues(a: &Array2<f64>) -> Result<Vec<f64>> {
    let mut work = checked_copy(a)?;
    let n = a.nrows();
    let (mut d, mut e) = tridiagonalize(&mut work, n, false);
    ql_implicit_shift(&mut d, &mut e, None, n)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Full eigendecomposition with orthonormal eigenvectors.
pub fn symmetric_eigen(a: &Array2<f64>) -> Result<SymmetricEigen> {
    let mut work = checked_copy(a)?;
    let n = a.nrows();
    let (mut d, mut e) = tridiagonalize(&mut work, n, true);
    ql_implicit_shift(&mut d, &mut e, Some(&mut work), n)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors[(row, col)] = work[row * n + src];
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

/// Singular values (sorted nonincreasingly) via the symmetric embedding
/// `[[0, A], [Aᵀ, 0]]`, whose spectrum is `±σ_i`. Resolves small singular
/// values relative to `σ_max` far better than an eigensolve of `AᵀA`.
pub fn singular_values(a: &Array2<f64>) -> Result<Vec<f64>> {
    let (r, c) = (a.nrows(), a.ncols());
    let n = r + c;
    if n > EIGEN_SIZE_LIMIT {
        return Err(Error::SizeGuard {
            what: "singular value embedding",
            requested: n,
            limit: EIGEN_SIZE_LIMIT,
        });
    }
    let mut emb = Array2::zeros((n, n));
    for i in 0..r {
        for j in 0..c {
            emb[(i, r + j)] = a[(i, j)];
            emb[(r + j, i)] = a[(i, j)];
        }
    }
    let eigs = symmetric_eigenvalues(&emb)?;
    let mut sv: Vec<f64> = eigs.into_iter().filter(|&l| l > 0.0).collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv.truncate(r.min(c));
    Ok(sv)
}

/// SPD square root `A^{1/2} = Q·diag(√λ)·Qᵀ`.
pub fn spd_sqrt(a: &Array2<f64>) -> Result<Array2<f64>> {
    spd_power(a, 0.5)
}

/// SPD inverse square root `A^{-1/2}`.
pub fn spd_inv_sqrt(a: &Array2<f64>) -> Result<Array2<f64>> {
    spd_power(a, -0.5)
}

/// SPD inverse through the eigendecomposition.
pub fn spd_inverse(a: &Array2<f64>) -> Result<Array2<f64>> {
    spd_power(a, -1.0)
}

fn spd_power(a: &Array2<f64>, exponent: f64) -> Result<Array2<f64>> {
    let decomp = symmetric_eigen(a)?;
    let n = a.nrows();
    if let Some(&min) = decomp
        .values
        .iter()
        .find(|&&l| l <= 0.0 || (exponent < 0.0 && l == 0.0))
    {
        return Err(Error::NotPositiveDefinite(min));
    }
    let powered: Vec<f64> = decomp.values.iter().map(|&l| l.powf(exponent)).collect();
    let q = &decomp.vectors;
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut acc = 0.0;
            for k in 0..n {
                acc += q[(i, k)] * powered[k] * q[(j, k)];
            }
            out[(i, j)] = acc;
            out[(j, i)] = acc;
        }
    }
    Ok(out)
}

/// Direct dense solve of a symmetric (possibly indefinite) system through
/// the eigendecomposition; the desk-scale oracle for iterative solvers.
pub fn symmetric_solve(a: &Array2<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.nrows();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    let decomp = symmetric_eigen(a)?;
    let scale = decomp
        .values
        .iter()
        .fold(0.0f64, |acc, &l| acc.max(l.abs()));
    let q = &decomp.vectors;
    let mut coeffs = vec![0.0; n];
    for k in 0..n {
        let mut acc = 0.0;
        for i in 0..n {
            acc += q[(i, k)] * b[i];
        }
        if decomp.values[k].abs() <= 1e-14 * scale {
            return Err(Error::Breakdown(format!(
                "singular dense system: |lambda| = {:.3e}",
                decomp.values[k].abs()
            )));
        }
        coeffs[k] = acc / decomp.values[k];
    }
    let mut x = vec![0.0; n];
    for i in 0..n {
        let mut acc = 0.0;
        for k in 0..n {
            acc += q[(i, k)] * coeffs[k];
        }
        x[i] = acc;
    }
    Ok(x)
}

fn checked_copy(a: &Array2<f64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.ncols(),
        });
    }
    if n > EIGEN_SIZE_LIMIT {
        return Err(Error::SizeGuard {
            what: "dense eigendecomposition",
            requested: n,
            limit: EIGEN_SIZE_LIMIT,
        });
    }
    let mut scale = 0.0f64;
    let mut max_asym = 0.0f64;
    for i in 0..n {
        for j in 0..=i {
            scale = scale.max(a[(i, j)].abs()).max(a[(j, i)].abs());
            max_asym = max_asym.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    let tol = 1e-12 * scale.max(1.0);
    if max_asym > tol {
        return Err(Error::NotSymmetric { max_asym, tol });
    }
    let mut work = vec![0.0; n * n];
    // Average away the sub-tolerance asymmetry so downstream arithmetic
    // sees an exactly symmetric matrix.
    for i in 0..n {
        for j in 0..n {
            work[i * n + j] = 0.5 * (a[(i, j)] + a[(j, i)]);
        }
    }
    Ok(work)
}

/// Householder reduction of a symmetric matrix (flat row-major storage) to
/// tridiagonal form. Returns the diagonal and subdiagonal; when
/// `accumulate` is set, `a` is overwritten with the orthogonal similarity
/// transform, otherwise its contents become scratch.
fn tridiagonalize(a: &mut [f64], n: usize, accumulate: bool) -> (Vec<f64>, Vec<f64>) {
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    if n == 1 {
        d[0] = a[0];
        if accumulate {
            a[0] = 1.0;
        }
        return (d, e);
    }

    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = a[i * n..i * n + l + 1].iter().map(|x| x.abs()).sum();
            if scale == 0.0 {
                e[i] = a[i * n + l];
            } else {
                for k in 0..=l {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                let f = a[i * n + l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;

                // p = A·u over the leading block, lower triangle only,
                // swept row-wise so every access is contiguous.
                e[..=l].fill(0.0);
                for k in 0..=l {
                    let uk = a[i * n + k];
                    let row_start = k * n;
                    let mut acc = a[row_start + k] * uk;
                    for j in 0..k {
                        let akj = a[row_start + j];
                        acc += akj * a[i * n + j];
                        e[j] += akj * uk;
                    }
                    e[k] += acc;
                }
                let mut f_acc = 0.0;
                for j in 0..=l {
                    if accumulate {
                        a[j * n + i] = a[i * n + j] / h;
                    }
                    e[j] /= h;
                    f_acc += e[j] * a[i * n + j];
                }
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    let f = a[i * n + j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    let (head, tail) = a.split_at_mut(i * n);
                    let u_row = &tail[..=l];
                    let a_row = &mut head[j * n..j * n + j + 1];
                    for (k, slot) in a_row.iter_mut().enumerate() {
                        *slot -= f * e[k] + g * u_row[k];
                    }
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }

    if accumulate {
        d[0] = 0.0;
    }
    e[0] = 0.0;

    for i in 0..n {
        if accumulate {
            if d[i] != 0.0 {
                for j in 0..i {
                    let mut g = 0.0;
                    for k in 0..i {
                        g += a[i * n + k] * a[k * n + j];
                    }
                    for k in 0..i {
                        a[k * n + j] -= g * a[k * n + i];
                    }
                }
            }
            d[i] = a[i * n + i];
            a[i * n + i] = 1.0;
            for j in 0..i {
                a[j * n + i] = 0.0;
                a[i * n + j] = 0.0;
            }
        } else {
            d[i] = a[i * n + i];
        }
    }
    (d, e)
}

/// Implicit-shift QL iteration on a symmetric tridiagonal matrix; when a
/// transform matrix is supplied the rotations are accumulated into its
/// columns, which then become the eigenvectors.
fn ql_implicit_shift(
    d: &mut [f64],
    e: &mut [f64],
    mut z: Option<&mut [f64]>,
    n: usize,
) -> Result<()> {
    if n <= 1 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_QL_SWEEPS {
                return Err(Error::EigenNoConvergence(MAX_QL_SWEEPS));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0, 1.0);
            let mut p = 0.0;
            let mut underflowed = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    // Rotation annihilated early; deflate and restart.
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflowed = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(zm) = z.as_deref_mut() {
                    for k in 0..n {
                        let f = zm[k * n + i + 1];
                        zm[k * n + i + 1] = s * zm[k * n + i] + c * f;
                        zm[k * n + i] = c * zm[k * n + i] - s * f;
                    }
                }
            }
            if underflowed {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn from_rows(rows: &[&[f64]]) -> Array2<f64> {
        let n = rows.len();
        let mut a = Array2::zeros((n, rows[0].len()));
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                a[(i, j)] = v;
            }
        }
        a
    }

    fn pseudo_random_symmetric(n: usize, seed: u64) -> Array2<f64> {
        let mut state = seed;
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 33) as f64 / (1u64 << 31) as f64 - 1.0
        };
        let mut a = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let v = next();
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        a
    }

    #[test]
    fn diagonal_matrix_sorted() {
        let a = from_rows(&[&[3.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 2.0]]);
        let eigs = symmetric_eigenvalues(&a).unwrap();
        assert_eq!(eigs, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn dirichlet_tridiagonal_closed_form() {
        let n = 4;
        let mut a = Array2::zeros((n, n));
        for i in 0..n {
            a[(i, i)] = 2.0;
            if i + 1 < n {
                a[(i, i + 1)] = -1.0;
                a[(i + 1, i)] = -1.0;
            }
        }
        let eigs = symmetric_eigenvalues(&a).unwrap();
        for (k, lam) in (1..=n).zip(&eigs) {
            let want = 2.0 - 2.0 * (k as f64 * PI / (n as f64 + 1.0)).cos();
            assert_relative_eq!(*lam, want, max_relative = 1e-12);
        }
    }

    #[test]
    fn reconstruction_is_backward_stable() {
        for &n in &[5usize, 32, 128, 512] {
            let a = pseudo_random_symmetric(n, 42 + n as u64);
            let decomp = symmetric_eigen(&a).unwrap();
            let q = &decomp.vectors;
            let mut frob_err = 0.0f64;
            let mut frob_a = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for k in 0..n {
                        acc += q[(i, k)] * decomp.values[k] * q[(j, k)];
                    }
                    frob_err += (acc - a[(i, j)]).powi(2);
                    frob_a += a[(i, j)].powi(2);
                }
            }
            assert!(
                frob_err.sqrt() <= 1e-9 * frob_a.sqrt(),
                "n = {n}: reconstruction error {:.3e}",
                frob_err.sqrt() / frob_a.sqrt()
            );
        }
    }

    #[test]
    fn eigenvectors_are_orthonormal() {
        let n = 40;
        let a = pseudo_random_symmetric(n, 7);
        let decomp = symmetric_eigen(&a).unwrap();
        let q = &decomp.vectors;
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += q[(k, i)] * q[(k, j)];
                }
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((acc - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eigenvalues_match_residual_check() {
        let n = 24;
        let a = pseudo_random_symmetric(n, 99);
        let decomp = symmetric_eigen(&a).unwrap();
        let norm_a = decomp
            .values
            .iter()
            .fold(0.0f64, |acc, &l| acc.max(l.abs()));
        for k in 0..n {
            let mut residual = 0.0f64;
            for i in 0..n {
                let mut av = 0.0;
                for j in 0..n {
                    av += a[(i, j)] * decomp.vectors[(j, k)];
                }
                residual += (av - decomp.values[k] * decomp.vectors[(i, k)]).powi(2);
            }
            assert!(residual.sqrt() <= 1e-9 * norm_a.max(1.0));
        }
    }

    #[test]
    fn rejects_asymmetric_input() {
        let a = from_rows(&[&[1.0, 2.0], &[0.0, 1.0]]);
        assert!(matches!(
            symmetric_eigenvalues(&a),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn spd_sqrt_squares_back() {
        let n = 12;
        let b = pseudo_random_symmetric(n, 3);
        // b·bᵀ + I is SPD.
        let mut a = Array2::<f64>::eye(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += b[(i, k)] * b[(j, k)];
                }
                a[(i, j)] += acc;
            }
        }
        let root = spd_sqrt(&a).unwrap();
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += root[(i, k)] * root[(k, j)];
                }
                assert_relative_eq!(acc, a[(i, j)], max_relative = 1e-10, epsilon = 1e-10);
            }
        }
        let inv_root = spd_inv_sqrt(&a).unwrap();
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += root[(i, k)] * inv_root[(k, j)];
                }
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((acc - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn spd_power_rejects_indefinite() {
        let a = from_rows(&[&[1.0, 0.0], &[0.0, -2.0]]);
        assert!(matches!(spd_sqrt(&a), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn dense_solve_recovers_known_solution() {
        let n = 15;
        let a = {
            let mut a = pseudo_random_symmetric(n, 5);
            for i in 0..n {
                a[(i, i)] += 4.0; // keep it comfortably nonsingular
            }
            a
        };
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut b = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                b[i] += a[(i, j)] * x_true[j];
            }
        }
        let x = symmetric_solve(&a, &b).unwrap();
        for (got, want) in x.iter().zip(&x_true) {
            assert_relative_eq!(got, want, max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn singular_values_of_rank_one() {
        let mut a = Array2::zeros((3, 3));
        for i in 0..3 {
            for j in 0..3 {
                a[(i, j)] = (i + 1) as f64 * (j as f64 + 0.5);
            }
        }
        let sv = singular_values(&a).unwrap();
        assert_eq!(sv.len(), 3);
        assert!(sv[0] > 1.0);
        assert!(sv[1] <= 1e-12 * sv[0]);
    }

    #[test]
    fn size_one_matrix() {
        let a = from_rows(&[&[7.5]]);
        assert_eq!(symmetric_eigenvalues(&a).unwrap(), vec![7.5]);
        let d = symmetric_eigen(&a).unwrap();
        assert_eq!(d.vectors[(0, 0)].abs(), 1.0);
    }
}
