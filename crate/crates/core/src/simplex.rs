//! Dense phase-1 simplex for small feasibility problems
//! `{x : A x ≤ b, 0 ≤ x ≤ 1}`.

use crate::error::{Error, Result};

/// Pivot and reduced-cost tolerance.
pub const PIVOT_TOL: f64 = 1e-12;
/// Accepted constraint residual for a feasible point.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Returns a point of the box-constrained polytope, or `None` if it is empty.
///
/// Rows are rescaled to unit max-norm before pivoting; `FEASIBILITY_TOL`
/// applies to the rescaled rows. Bland's rule prevents cycling.
pub fn find_feasible_point(a: &[Vec<f64>], b: &[f64]) -> Result<Option<Vec<f64>>> {
    let n = a.first().map_or(0, Vec::len);
    if a.len() != b.len() || a.iter().any(|r| r.len() != n) {
        return Err(Error::Dimension("LP rows have inconsistent lengths".into()));
    }
    if a.iter().flatten().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::LinearProgram("non-finite coefficient".into()));
    }
    // Constraint rows: the given ones, then x_j ≤ 1.
    let mut rows: Vec<(Vec<f64>, f64)> = a
        .iter()
        .zip(b)
        .map(|(r, &rhs)| {
            let s = r.iter().fold(rhs.abs(), |acc, v| acc.max(v.abs()));
            if s > 0.0 {
                (r.iter().map(|v| v / s).collect(), rhs / s)
            } else {
                (r.clone(), rhs)
            }
        })
        .collect();
    for j in 0..n {
        let mut r = vec![0.0; n];
        r[j] = 1.0;
        rows.push((r, 1.0));
    }
    let m = rows.len();
    let artificial: Vec<usize> = (0..m).filter(|&i| rows[i].1 < 0.0).collect();
    let width = n + m + artificial.len() + 1;
    let rhs = width - 1;
    let mut t = vec![vec![0.0; width]; m + 1];
    let mut basis = vec![0usize; m];
    for (i, (coef, bi)) in rows.iter().enumerate() {
        let sign = if *bi < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = sign * coef[j];
        }
        t[i][n + i] = sign;
        t[i][rhs] = sign * bi;
        basis[i] = n + i;
    }
    for (q, &i) in artificial.iter().enumerate() {
        let col = n + m + q;
        t[i][col] = 1.0;
        basis[i] = col;
    }
    // Objective row holds reduced costs of minimizing the artificial sum.
    for &i in &artificial {
        for j in 0..width {
            let v = t[i][j];
            t[m][j] -= v;
        }
    }
    for col in n + m..rhs {
        t[m][col] = 0.0;
    }

    let max_iter = 50 * (m + width);
    for _ in 0..max_iter {
        let Some(enter) = (0..rhs).find(|&j| t[m][j] < -PIVOT_TOL) else {
            break;
        };
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            if t[i][enter] > PIVOT_TOL {
                let ratio = t[i][rhs] / t[i][enter];
                if ratio < best - PIVOT_TOL || (ratio <= best + PIVOT_TOL && leave.is_some_and(|l| basis[i] < basis[l]))
                {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(pr) = leave else {
            return Err(Error::LinearProgram("phase-1 objective unbounded".into()));
        };
        let piv = t[pr][enter];
        for v in t[pr].iter_mut() {
            *v /= piv;
        }
        let pivot_row = t[pr].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != pr {
                let f = row[enter];
                if f != 0.0 {
                    for (v, p) in row.iter_mut().zip(&pivot_row) {
                        *v -= f * p;
                    }
                }
            }
        }
        basis[pr] = enter;
    }
    if t[m].iter().take(rhs).any(|&v| v < -PIVOT_TOL) {
        return Err(Error::LinearProgram("simplex iteration limit reached".into()));
    }
    let mut x = vec![0.0; n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            x[bv] = t[i][rhs].clamp(0.0, 1.0);
        }
    }
    let feasible = rows[..a.len()]
        .iter()
        .all(|(coef, bi)| coef.iter().zip(&x).map(|(c, v)| c * v).sum::<f64>() <= bi + FEASIBILITY_TOL);
    Ok(feasible.then_some(x))
}
