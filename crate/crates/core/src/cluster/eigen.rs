//! Dense symmetric eigendecomposition: Householder tridiagonalization
//! followed by implicit-shift QL, with deterministic eigenvector signs.

use crate::error::{Error, Result};

/// Deflation tolerance for the QL sweep.
const EIGEN_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// `vectors[k]` is the unit eigenvector for `values[k]`, sign-fixed so
    /// its first component above 1e-12 in magnitude is positive.
    pub vectors: Vec<Vec<f64>>,
}

/// Decompose a row-major symmetric matrix.
pub fn symmetric_eigen(matrix: &[f64], n: usize) -> Result<SymmetricEigen> {
    if n == 0 || matrix.len() != n * n {
        return Err(Error::invalid("eigen input must be a square matrix"));
    }
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| matrix[i * n..(i + 1) * n].to_vec())
        .collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut a, &mut d, &mut e);
    ql_implicit(&mut d, &mut e, &mut a)?;

    // a now holds eigenvectors in its columns; pair, sort, and sign-fix.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| d[x].partial_cmp(&d[y]).unwrap().then(x.cmp(&y)));
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for &col in &order {
        values.push(d[col]);
        let mut v: Vec<f64> = (0..n).map(|row| a[row][col]).collect();
        if let Some(first) = v.iter().find(|c| c.abs() > 1e-12) {
            if *first < 0.0 {
                for c in v.iter_mut() {
                    *c = -*c;
                }
            }
        }
        vectors.push(v);
    }
    Ok(SymmetricEigen { values, vectors })
}

/// Householder reduction to tridiagonal form, accumulating the orthogonal
/// transform in `a`.
fn tridiagonalize(a: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        let mut scale = 0.0;
        if l > 0 {
            for k in 0..=l {
                scale += a[i][k].abs();
            }
            if scale == 0.0 {
                e[i] = a[i][l];
            } else {
                for k in 0..=l {
                    a[i][k] /= scale;
                    h += a[i][k] * a[i][k];
                }
                let f = a[i][l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i][l] = f - g;
                let mut fsum = 0.0;
                for j in 0..=l {
                    a[j][i] = a[i][j] / h;
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += a[j][k] * a[i][k];
                    }
                    for k in (j + 1)..=l {
                        g += a[k][j] * a[i][k];
                    }
                    e[j] = g / h;
                    fsum += e[j] * a[i][j];
                }
                let hh = fsum / (h + h);
                for j in 0..=l {
                    let f = a[i][j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[j][k] -= f * e[k] + g * a[i][k];
                    }
                }
            }
        } else {
            e[i] = a[i][l];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0;
                for k in 0..i {
                    g += a[i][k] * a[k][j];
                }
                for k in 0..i {
                    a[k][j] -= g * a[k][i];
                }
            }
        }
        d[i] = a[i][i];
        a[i][i] = 1.0;
        for j in 0..i {
            a[j][i] = 0.0;
            a[i][j] = 0.0;
        }
    }
}

/// Implicit-shift QL iteration on the tridiagonal (d, e), rotating the
/// accumulated transform `z` into the eigenvector matrix.
fn ql_implicit(d: &mut [f64], e: &mut [f64], z: &mut [Vec<f64>]) -> Result<()> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= EIGEN_TOL * dd + f64::MIN_POSITIVE {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Internal(
                    "eigensolver failed to converge in 60 sweeps".into(),
                ));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            let sign_r = if g >= 0.0 { r } else { -r };
            g = d[m] - d[l] + e[l] / (g + sign_r);
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow_at: Option<usize> = None;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow_at = Some(i);
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                let rr = (d[i] - g) * s + 2.0 * c * b;
                p = s * rr;
                d[i + 1] = g + p;
                g = c * rr - b;
                for zk in z.iter_mut() {
                    let fz = zk[i + 1];
                    zk[i + 1] = s * zk[i] + c * fz;
                    zk[i] = c * zk[i] - s * fz;
                }
            }
            if underflow_at.is_some() {
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

    fn residual(matrix: &[f64], n: usize, eig: &SymmetricEigen) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, v) in eig.vectors.iter().enumerate() {
            for i in 0..n {
                let mut av = 0.0;
                for j in 0..n {
                    av += matrix[i * n + j] * v[j];
                }
                worst = worst.max((av - eig.values[k] * v[i]).abs());
            }
        }
        worst
    }

    #[test]
    fn two_by_two_known_system() {
        let m = [2.0, 1.0, 1.0, 2.0];
        let eig = symmetric_eigen(&m, 2).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-10);
        assert!((eig.values[1] - 3.0).abs() < 1e-10);
        let inv_sqrt2 = 1.0 / 2.0f64.sqrt();
        assert!((eig.vectors[0][0] - inv_sqrt2).abs() < 1e-10);
        assert!((eig.vectors[0][1] + inv_sqrt2).abs() < 1e-10);
        assert!((eig.vectors[1][0] - inv_sqrt2).abs() < 1e-10);
        assert!((eig.vectors[1][1] - inv_sqrt2).abs() < 1e-10);
    }

    #[test]
    fn diagonal_matrix_sorted_values() {
        let m = [3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0];
        let eig = symmetric_eigen(&m, 3).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-12);
        assert!((eig.values[1] - 2.0).abs() < 1e-12);
        assert!((eig.values[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn random_symmetric_residual_and_orthonormality() {
        let mut state = 42u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 0.5
        };
        for n in [2usize, 3, 5, 8, 12] {
            let mut m = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..=i {
                    let v = next();
                    m[i * n + j] = v;
                    m[j * n + i] = v;
                }
            }
            let eig = symmetric_eigen(&m, n).unwrap();
            assert!(residual(&m, n, &eig) < 1e-8, "residual too large for n={n}");
            for a in 0..n {
                for b in 0..n {
                    let dot: f64 = (0..n).map(|i| eig.vectors[a][i] * eig.vectors[b][i]).sum();
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((dot - want).abs() < 1e-8, "orthonormality {a},{b} for n={n}");
                }
            }
            for w in eig.values.windows(2) {
                assert!(w[0] <= w[1] + 1e-12);
            }
        }
    }

    #[test]
    fn sign_convention_first_large_component_positive() {
        let mut state = 7u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 0.5
        };
        let n = 6;
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = next();
                m[i * n + j] = v;
                m[j * n + i] = v;
            }
        }
        let eig = symmetric_eigen(&m, n).unwrap();
        for v in &eig.vectors {
            let first = v.iter().find(|c| c.abs() > 1e-12).unwrap();
            assert!(*first > 0.0);
        }
    }

    #[test]
    fn zero_matrix_is_fine() {
        let m = vec![0.0; 16];
        let eig = symmetric_eigen(&m, 4).unwrap();
        assert!(eig.values.iter().all(|v| v.abs() < 1e-12));
    }
}
