//! Dense two-phase primal simplex for small inequality-form LPs.
//!
//! Solves `min cᵀx  s.t.  Ax ≤ b, x ≥ 0` with `b` of any sign. Rows with
//! negative right-hand sides are flipped and given artificial variables;
//! phase 1 minimizes the artificial sum, phase 2 the real objective.
//! Pricing is Dantzig's rule with a switch to Bland's rule after a fixed
//! iteration budget, which guarantees termination on degenerate problems.

/// Reduced costs below `-RC_TOL` qualify a column to enter the basis.
const RC_TOL: f64 = 1e-9;
/// Pivot elements smaller than this are treated as zero in the ratio test.
const PIVOT_TOL: f64 = 1e-10;
/// Phase-1 objective above this means the LP is infeasible.
const FEAS_TOL: f64 = 1e-7;

#[derive(Debug, Clone)]
pub(crate) struct LpSolution {
    pub x: Vec<f64>,
    /// cᵀx at the solution; exercised by the solver's own tests.
    #[cfg_attr(not(test), allow(dead_code))]
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub(crate) enum LpError {
    Infeasible { residual: f64, iterations: usize },
    IterationLimit { iterations: usize },
    Unbounded { iterations: usize },
}

struct Tableau {
    /// m rows by `width` columns; the last column is the RHS.
    rows: Vec<f64>,
    width: usize,
    m: usize,
    /// Reduced-cost row (same width as `rows`).
    cost: Vec<f64>,
    /// Basic variable of each row.
    basis: Vec<usize>,
    /// Columns allowed to enter (artificials are barred in phase 2).
    enterable: Vec<bool>,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.rows[r * self.width + c]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.width;
        let inv = 1.0 / self.at(row, col);
        for c in 0..w {
            self.rows[row * w + c] *= inv;
        }
        self.rows[row * w + col] = 1.0;
        for r in 0..self.m {
            if r == row {
                continue;
            }
            let factor = self.at(r, col);
            if factor == 0.0 {
                continue;
            }
            for c in 0..w {
                self.rows[r * w + c] -= factor * self.rows[row * w + c];
            }
            self.rows[r * w + col] = 0.0;
        }
        let factor = self.cost[col];
        if factor != 0.0 {
            for c in 0..w {
                self.cost[c] -= factor * self.rows[row * w + c];
            }
            self.cost[col] = 0.0;
        }
        self.basis[row] = col;
    }

    /// Entering column: Dantzig pricing, or Bland's rule when told to.
    fn entering(&self, bland: bool) -> Option<usize> {
        let rhs = self.width - 1;
        if bland {
            (0..rhs).find(|&c| self.enterable[c] && self.cost[c] < -RC_TOL)
        } else {
            let mut best = None;
            let mut best_val = -RC_TOL;
            for c in 0..rhs {
                if self.enterable[c] && self.cost[c] < best_val {
                    best_val = self.cost[c];
                    best = Some(c);
                }
            }
            best
        }
    }

    /// Leaving row by minimum ratio; ties break toward the lowest basis index.
    fn leaving(&self, col: usize) -> Option<usize> {
        let rhs = self.width - 1;
        let mut best: Option<(usize, f64)> = None;
        for r in 0..self.m {
            let a = self.at(r, col);
            if a <= PIVOT_TOL {
                continue;
            }
            let ratio = self.at(r, rhs) / a;
            match best {
                None => best = Some((r, ratio)),
                Some((br, bratio)) => {
                    if ratio < bratio - 1e-12
                        || ((ratio - bratio).abs() <= 1e-12 && self.basis[r] < self.basis[br])
                    {
                        best = Some((r, ratio));
                    }
                }
            }
        }
        best.map(|(r, _)| r)
    }
}

/// Runs simplex iterations until optimal, returning the iteration count.
fn optimize(
    t: &mut Tableau,
    start_iter: usize,
    max_iter: usize,
    bland_after: usize,
) -> Result<usize, LpError> {
    let mut iter = start_iter;
    loop {
        let bland = iter >= bland_after;
        let Some(col) = t.entering(bland) else {
            return Ok(iter);
        };
        let Some(row) = t.leaving(col) else {
            return Err(LpError::Unbounded { iterations: iter });
        };
        t.pivot(row, col);
        iter += 1;
        if iter >= max_iter {
            return Err(LpError::IterationLimit { iterations: iter });
        }
    }
}

/// Solves `min cᵀx  s.t.  Ax ≤ b, x ≥ 0`; `a` is row-major m×n.
pub(crate) fn solve_inequality_lp(
    c: &[f64],
    a: &[f64],
    b: &[f64],
    max_iter: usize,
) -> Result<LpSolution, LpError> {
    let n = c.len();
    let m = b.len();
    debug_assert_eq!(a.len(), m * n);

    let flipped: Vec<bool> = b.iter().map(|&v| v < 0.0).collect();
    let art_rows: Vec<usize> = (0..m).filter(|&r| flipped[r]).collect();
    let n_art = art_rows.len();
    let width = n + m + n_art + 1;

    let mut rows = vec![0.0f64; m * width];
    let mut basis = vec![0usize; m];
    let mut art_of_row = vec![usize::MAX; m];
    for (idx, &r) in art_rows.iter().enumerate() {
        art_of_row[r] = n + m + idx;
    }
    for r in 0..m {
        let sign = if flipped[r] { -1.0 } else { 1.0 };
        for j in 0..n {
            rows[r * width + j] = sign * a[r * n + j];
        }
        rows[r * width + n + r] = sign; // slack (surplus when flipped)
        rows[r * width + width - 1] = sign * b[r];
        if flipped[r] {
            rows[r * width + art_of_row[r]] = 1.0;
            basis[r] = art_of_row[r];
        } else {
            basis[r] = n + r;
        }
    }

    let mut t = Tableau {
        rows,
        width,
        m,
        cost: vec![0.0; width],
        basis,
        enterable: vec![true; width - 1],
    };

    let bland_after_p1 = 4 * (m + n);
    let mut iterations = 0usize;

    if n_art > 0 {
        // Phase-1 reduced costs: c = 1 on artificials, reduced by the
        // artificial basic rows.
        for c_idx in 0..width {
            let mut v = 0.0;
            for &r in &art_rows {
                v -= t.at(r, c_idx);
            }
            t.cost[c_idx] = v;
        }
        for idx in 0..n_art {
            t.cost[n + m + idx] += 1.0;
        }
        iterations = optimize(&mut t, 0, max_iter, bland_after_p1)?;
        let phase1 = -t.cost[width - 1];
        if phase1 > FEAS_TOL {
            return Err(LpError::Infeasible {
                residual: phase1,
                iterations,
            });
        }
        // Drive lingering zero-level artificials out of the basis.
        for r in 0..m {
            if t.basis[r] >= n + m {
                if let Some(col) = (0..n + m).find(|&c| t.at(r, c).abs() > FEAS_TOL) {
                    t.pivot(r, col);
                }
            }
        }
        for idx in 0..n_art {
            t.enterable[n + m + idx] = false;
        }
    }

    // Phase-2 reduced costs for the real objective over the current basis.
    t.cost.iter_mut().for_each(|v| *v = 0.0);
    t.cost[..n].copy_from_slice(c);
    for r in 0..t.m {
        let bv = t.basis[r];
        let cb = if bv < n { c[bv] } else { 0.0 };
        if cb != 0.0 {
            for col in 0..width {
                t.cost[col] -= cb * t.at(r, col);
            }
            t.cost[bv] = 0.0;
        }
    }

    let bland_after_p2 = iterations + 4 * (m + n);
    let iterations = optimize(&mut t, iterations, max_iter, bland_after_p2)?;

    let mut x = vec![0.0f64; n];
    for r in 0..t.m {
        if t.basis[r] < n {
            x[t.basis[r]] = t.at(r, width - 1);
        }
    }
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(LpSolution {
        x,
        objective,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximization_classic_as_min() {
        // min -3x - 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), obj -36.
        let c = [-3.0, -5.0];
        let a = [1.0, 0.0, 0.0, 2.0, 3.0, 2.0];
        let b = [4.0, 12.0, 18.0];
        let sol = solve_inequality_lp(&c, &a, &b, 100).unwrap();
        assert!((sol.x[0] - 2.0).abs() < 1e-9);
        assert!((sol.x[1] - 6.0).abs() < 1e-9);
        assert!((sol.objective + 36.0).abs() < 1e-9);
    }

    #[test]
    fn negative_rhs_needs_phase_one() {
        // min x + y s.t. x + y >= 1 (written -x - y <= -1) -> objective 1.
        let c = [1.0, 1.0];
        let a = [-1.0, -1.0];
        let b = [-1.0];
        let sol = solve_inequality_lp(&c, &a, &b, 100).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_detected() {
        // x <= 1 and x >= 2 cannot hold together.
        let c = [1.0];
        let a = [1.0, -1.0];
        let b = [1.0, -2.0];
        match solve_inequality_lp(&c, &a, &b, 100) {
            Err(LpError::Infeasible { residual, .. }) => assert!(residual > 0.5),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn unbounded_detected() {
        // min -x with only x >= 0 and a vacuous row.
        let c = [-1.0];
        let a = [0.0];
        let b = [1.0];
        match solve_inequality_lp(&c, &a, &b, 100) {
            Err(LpError::Unbounded { .. }) => {}
            other => panic!("expected unbounded, got {other:?}"),
        }
    }

    #[test]
    fn equality_via_paired_rows() {
        // min x + y s.t. x + 2y = 3 exactly (<= and >=) -> (0, 1.5).
        let c = [1.0, 1.0];
        let a = [1.0, 2.0, -1.0, -2.0];
        let b = [3.0, -3.0];
        let sol = solve_inequality_lp(&c, &a, &b, 100).unwrap();
        assert!((sol.x[1] - 1.5).abs() < 1e-9);
        assert!(sol.x[0].abs() < 1e-9);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Multiple redundant rows through the same vertex.
        let c = [-1.0, -1.0];
        let a = [1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 1.0, 0.0];
        let b = [2.0, 2.0, 4.0, 2.0];
        let sol = solve_inequality_lp(&c, &a, &b, 200).unwrap();
        assert!((sol.objective + 2.0).abs() < 1e-9);
    }
}
