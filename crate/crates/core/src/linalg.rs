//! Small dense linear algebra used by the sign constructions.

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Orthonormal basis of the span of `rows` by modified Gram–Schmidt with
/// reorthogonalization. Rows whose residual falls below `tol` times their
/// original length are dropped. Stops once `cap` rows are kept.
pub(crate) fn orthonormal_rows(
    rows: impl IntoIterator<Item = Vec<f64>>,
    tol: f64,
    cap: usize,
) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for mut row in rows {
        if basis.len() >= cap {
            break;
        }
        let original = dot(&row, &row).sqrt();
        if original == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&row, q);
                for (r, qv) in row.iter_mut().zip(q) {
                    *r -= c * qv;
                }
            }
        }
        let norm = dot(&row, &row).sqrt();
        if norm > tol * original {
            row.iter_mut().for_each(|v| *v /= norm);
            basis.push(row);
        }
    }
    basis
}

/// A null vector of the `rows.len() x cols` matrix formed by the given
/// columns, or `None` when the columns are independent.
///
/// Gauss–Jordan elimination scanning columns left to right; the returned
/// vector has a `1` in the first non-pivot column and is zero in every other
/// non-pivot column.
pub(crate) fn first_null_vector(columns: &[Vec<f64>], tol: f64) -> Option<Vec<f64>> {
    let cols = columns.len();
    let rows = columns.first().map_or(0, Vec::len);
    let mut a: Vec<Vec<f64>> = (0..rows)
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect();
    let scale = a
        .iter()
        .flatten()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        if row == rows {
            break;
        }
        let (best, value) = (row..rows)
            .map(|r| (r, a[r][col].abs()))
            .fold((row, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if value <= tol * scale {
            continue;
        }
        a.swap(row, best);
        let pivot = a[row][col];
        a[row].iter_mut().for_each(|v| *v /= pivot);
        for r in 0..rows {
            if r != row {
                let factor = a[r][col];
                if factor != 0.0 {
                    let (src, dst) = if r < row {
                        let (lo, hi) = a.split_at_mut(row);
                        (&hi[0], &mut lo[r])
                    } else {
                        let (lo, hi) = a.split_at_mut(r);
                        (&lo[row], &mut hi[0])
                    };
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d -= factor * s;
                    }
                }
            }
        }
        pivots.push((row, col));
        row += 1;
    }
    let free = (0..cols).find(|c| !pivots.iter().any(|&(_, pc)| pc == *c))?;
    let mut v = vec![0.0; cols];
    v[free] = 1.0;
    for &(r, c) in &pivots {
        v[c] = -a[r][free];
    }
    Some(v)
}

/// Solves `a x = b` for a small square system by partial pivoting.
pub(crate) fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let best = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[best][col] == 0.0 {
            return None;
        }
        a.swap(col, best);
        b.swap(col, best);
        for r in col + 1..n {
            let factor = a[r][col] / a[col][col];
            if factor != 0.0 {
                let (top, bottom) = a.split_at_mut(r);
                for (x, &y) in bottom[0][col..].iter_mut().zip(&top[col][col..]) {
                    *x -= factor * y;
                }
                b[r] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Unit eigenvector for the smallest eigenvalue of a symmetric positive
/// semidefinite matrix, by shifted inverse iteration. Returns `(value, vector)`.
pub(crate) fn smallest_eigenpair(g: &[Vec<f64>], iters: usize) -> (f64, Vec<f64>) {
    let n = g.len();
    let trace: f64 = (0..n).map(|i| g[i][i]).sum();
    let shift = 1e-12 * trace.max(1.0);
    let shifted: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| g[i][j] + if i == j { shift } else { 0.0 })
                .collect()
        })
        .collect();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..iters {
        let Some(y) = solve(shifted.clone(), x.clone()) else {
            break;
        };
        let norm = dot(&y, &y).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            break;
        }
        let next: Vec<f64> = y.iter().map(|v| v / norm).collect();
        let delta: f64 = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let flipped: f64 = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a + b).abs())
            .fold(0.0, f64::max);
        x = next;
        if delta.min(flipped) < 1e-15 {
            break;
        }
    }
    let gx: Vec<f64> = g.iter().map(|row| dot(row, &x)).collect();
    (dot(&x, &gx), x)
}
