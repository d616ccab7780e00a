//! Small dense linear algebra helpers.

/// Numerical rank of the rows of `m`, by Gaussian elimination with partial
/// pivoting on a copy whose rows are scaled to unit max-norm.
pub fn rank(m: &[Vec<f64>], tol: f64) -> usize {
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .map(|r| {
            let s = r.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            if s > 0.0 {
                r.iter().map(|v| v / s).collect()
            } else {
                r.clone()
            }
        })
        .collect();
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let piv = (rank..rows).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        if a[piv][c].abs() <= tol {
            continue;
        }
        a.swap(rank, piv);
        for i in rank + 1..rows {
            let f = a[i][c] / a[rank][c];
            if f != 0.0 {
                for k in c..cols {
                    a[i][k] -= f * a[rank][k];
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Least-squares solution of `Σⱼ coef[j]·rows[j] ≈ target` via Householder QR
/// on the transposed system. `rows` must have full row rank.
pub fn least_squares(rows: &[Vec<f64>], target: &[f64]) -> Vec<f64> {
    let k = rows.len();
    let n = target.len();
    // Column-major copy of the n×k matrix whose columns are the rows.
    let mut a: Vec<Vec<f64>> = rows.to_vec();
    let mut b = target.to_vec();
    for j in 0..k {
        let norm = (j..n).map(|i| a[j][i] * a[j][i]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[j][j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (j..n).map(|i| a[j][i]).collect();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        if vv == 0.0 {
            continue;
        }
        for col in a.iter_mut().skip(j) {
            let d: f64 = v.iter().zip(&col[j..]).map(|(p, q)| p * q).sum::<f64>() * 2.0 / vv;
            for (i, vi) in v.iter().enumerate() {
                col[j + i] -= d * vi;
            }
        }
        let d: f64 = v.iter().zip(&b[j..]).map(|(p, q)| p * q).sum::<f64>() * 2.0 / vv;
        for (i, vi) in v.iter().enumerate() {
            b[j + i] -= d * vi;
        }
    }
    let mut x = vec![0.0; k];
    for j in (0..k).rev() {
        let mut s = b[j];
        for l in j + 1..k {
            s -= a[l][j] * x[l];
        }
        x[j] = if a[j][j] != 0.0 { s / a[j][j] } else { 0.0 };
    }
    x
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn max_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_detects_dependence() {
        assert_eq!(rank(&[vec![1.0, 1.0], vec![1.0, -1.0]], 1e-9), 2);
        assert_eq!(rank(&[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]], 1e-9), 1);
        assert_eq!(rank(&[vec![0.0, 0.0]], 1e-9), 0);
    }

    #[test]
    fn least_squares_recovers_coefficients() {
        let x = least_squares(&[vec![1.0, 1.0], vec![1.0, -1.0]], &[2.0, 0.0]);
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
        let x = least_squares(&[vec![1.0, 1.0]], &[1.0, 2.0]);
        assert!((x[0] - 1.5).abs() < 1e-14);
    }
}
