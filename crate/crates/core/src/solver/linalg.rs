//! Small dense kernels: Gauss-Jordan inversion and LU solves with partial pivoting.

const PIVOT_EPS: f64 = 1e-12;

/// Inverts the row-major `n x n` matrix `a`. On failure returns the index of
/// the column whose pivot vanished and the pivot magnitude.
pub fn invert(a: &[f64], n: usize) -> Result<Vec<f64>, (usize, f64)> {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
    for col in 0..n {
        let (piv_row, piv_abs) =
            (col..n)
                .map(|r| (r, m[r * n + col].abs()))
                .fold(
                    (col, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
        if piv_abs <= PIVOT_EPS * scale {
            return Err((col, piv_abs));
        }
        if piv_row != col {
            for k in 0..n {
                m.swap(piv_row * n + k, col * n + k);
                inv.swap(piv_row * n + k, col * n + k);
            }
        }
        let p = m[col * n + col];
        for k in 0..n {
            m[col * n + k] /= p;
            inv[col * n + k] /= p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[r * n + col];
            if f == 0.0 {
                continue;
            }
            for k in 0..n {
                m[r * n + k] -= f * m[col * n + k];
                inv[r * n + k] -= f * inv[col * n + k];
            }
        }
    }
    Ok(inv)
}

/// Solves `a x = b` for row-major `n x n` `a`.
pub fn solve_dense(a: &[f64], b: &[f64], n: usize) -> Result<Vec<f64>, (usize, f64)> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
    for col in 0..n {
        let (piv_row, piv_abs) =
            (col..n)
                .map(|r| (r, m[r * n + col].abs()))
                .fold(
                    (col, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
        if piv_abs <= PIVOT_EPS * scale {
            return Err((col, piv_abs));
        }
        if piv_row != col {
            for k in 0..n {
                m.swap(piv_row * n + k, col * n + k);
            }
            x.swap(piv_row, col);
        }
        let p = m[col * n + col];
        for r in col + 1..n {
            let f = m[r * n + col] / p;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                m[r * n + k] -= f * m[col * n + k];
            }
            x[r] -= f * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for k in col + 1..n {
            s -= m[col * n + k] * x[k];
        }
        x[col] = s / m[col * n + col];
    }
    Ok(x)
}
