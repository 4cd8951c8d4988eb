//! Dense two-phase simplex for `min c·x  s.t.  A x = b, x >= 0`.
//!
//! Pivoting follows Bland's rule (lowest-index entering column, lowest-index
//! basic variable among ratio ties), which rules out cycling on the highly
//! degenerate transportation problems the solvers generate.

use crate::error::{Error, Result};

const COST_EPS: f64 = 1e-11;
const PIVOT_EPS: f64 = 1e-11;
const MAX_PIVOTS: usize = 200_000;

#[derive(Clone, Debug)]
pub struct LinearProgram {
    /// Constraint matrix, one row per equality.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpFailure {
    Infeasible,
    Unbounded,
}

struct Tableau {
    /// `m + 1` rows; the last row holds reduced costs and `-objective`.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    m: usize,
    width: usize,
    pivots: usize,
}

impl Tableau {
    fn rhs(&self) -> usize {
        self.width - 1
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let rhs = self.rhs();
        let p = self.t[row][col];
        for v in self.t[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[row].clone();
        for (i, r) in self.t.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let f = r[col];
            if f != 0.0 {
                for j in 0..=rhs {
                    r[j] -= f * pivot_row[j];
                }
                r[col] = 0.0;
            }
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Runs Bland-rule iterations over columns `0..allowed`.
    fn optimize(&mut self, allowed: usize) -> std::result::Result<(), LpFailure> {
        let rhs = self.rhs();
        loop {
            if self.pivots > MAX_PIVOTS {
                // Bland's rule terminates; reaching this means numerical trouble.
                return Err(LpFailure::Unbounded);
            }
            let obj = &self.t[self.m];
            let entering = (0..allowed).find(|&j| obj[j] < -COST_EPS);
            let Some(col) = entering else {
                return Ok(());
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let a = self.t[i][col];
                if a > PIVOT_EPS {
                    let ratio = self.t[i][rhs].max(0.0) / a;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-14
                                || (ratio <= br + 1e-14 && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            match best {
                Some((row, _)) => self.pivot(row, col),
                None => return Err(LpFailure::Unbounded),
            }
        }
    }
}

impl LinearProgram {
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>, c: Vec<f64>) -> Self {
        LinearProgram { a, b, c }
    }

    pub fn solve(&self) -> Result<std::result::Result<LpSolution, LpFailure>> {
        let m = self.a.len();
        let n = self.c.len();
        if self.b.len() != m || self.a.iter().any(|r| r.len() != n) {
            return Err(Error::LinearProgram("inconsistent dimensions".into()));
        }
        if m == 0 {
            if self.c.iter().any(|&c| c < 0.0) {
                return Ok(Err(LpFailure::Unbounded));
            }
            return Ok(Ok(LpSolution {
                x: vec![0.0; n],
                objective: 0.0,
                pivots: 0,
            }));
        }
        let width = n + m + 1;
        let mut t = vec![vec![0.0; width]; m + 1];
        for i in 0..m {
            let sign = if self.b[i] < 0.0 { -1.0 } else { 1.0 };
            for j in 0..n {
                t[i][j] = sign * self.a[i][j];
            }
            t[i][n + i] = 1.0;
            t[i][width - 1] = sign * self.b[i];
        }
        // phase I: minimize the sum of artificials
        for j in 0..n {
            t[m][j] = -(0..m).map(|i| t[i][j]).sum::<f64>();
        }
        t[m][width - 1] = -(0..m).map(|i| t[i][width - 1]).sum::<f64>();
        let mut tab = Tableau {
            t,
            basis: (n..n + m).collect(),
            m,
            width,
            pivots: 0,
        };
        if tab.optimize(n).is_err() {
            return Err(Error::LinearProgram("phase I did not terminate".into()));
        }
        let scale = 1.0 + self.b.iter().map(|v| v.abs()).sum::<f64>();
        let infeasibility = -tab.t[m][width - 1];
        if infeasibility > 1e-9 * scale {
            return Ok(Err(LpFailure::Infeasible));
        }
        // drive zero-level artificials out of the basis where possible
        for i in 0..m {
            if tab.basis[i] >= n {
                if let Some(j) = (0..n).find(|&j| tab.t[i][j].abs() > 1e-9) {
                    tab.pivot(i, j);
                }
            }
        }
        // phase II
        for j in 0..width {
            tab.t[m][j] = 0.0;
        }
        for j in 0..n {
            tab.t[m][j] = self.c[j];
        }
        for i in 0..m {
            let bj = tab.basis[i];
            let cb = if bj < n { self.c[bj] } else { 0.0 };
            if cb != 0.0 {
                for j in 0..width {
                    let v = tab.t[i][j];
                    tab.t[m][j] -= cb * v;
                }
            }
        }
        if let Err(e) = tab.optimize(n) {
            return Ok(Err(e));
        }
        let mut x = vec![0.0; n];
        for i in 0..m {
            if tab.basis[i] < n {
                x[tab.basis[i]] = tab.t[i][width - 1].max(0.0);
            }
        }
        let objective = self.c.iter().zip(&x).map(|(c, x)| c * x).sum();
        Ok(Ok(LpSolution {
            x,
            objective,
            pivots: tab.pivots,
        }))
    }
}

/// Exact minimizer of `Σ cost[i][j] x[i][j]` over nonnegative matrices with
/// row sums `supply` and column sums `demand` (row-major result).
pub fn solve_transportation(cost: &[f64], supply: &[f64], demand: &[f64]) -> Result<Vec<f64>> {
    let (r, k) = (supply.len(), demand.len());
    if cost.len() != r * k {
        return Err(Error::LinearProgram("cost matrix shape".into()));
    }
    let total: f64 = supply.iter().sum();
    if total <= 0.0 {
        return Ok(vec![0.0; r * k]);
    }
    // Work on the normalized problem; the last column constraint is implied.
    let mut a = Vec::with_capacity(r + k - 1);
    let mut b = Vec::with_capacity(r + k - 1);
    for i in 0..r {
        let mut row = vec![0.0; r * k];
        for j in 0..k {
            row[i * k + j] = 1.0;
        }
        a.push(row);
        b.push(supply[i] / total);
    }
    for j in 0..k.saturating_sub(1) {
        let mut row = vec![0.0; r * k];
        for i in 0..r {
            row[i * k + j] = 1.0;
        }
        a.push(row);
        b.push(demand[j] / total);
    }
    let lp = LinearProgram::new(a, b, cost.to_vec());
    match lp.solve()? {
        Ok(sol) => Ok(sol.x.into_iter().map(|v| v * total).collect()),
        Err(f) => Err(Error::LinearProgram(format!("transportation problem {f:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_lp() {
        // min -x - y  s.t. x + 2y + s1 = 4, 3x + y + s2 = 6
        let lp = LinearProgram::new(
            vec![vec![1.0, 2.0, 1.0, 0.0], vec![3.0, 1.0, 0.0, 1.0]],
            vec![4.0, 6.0],
            vec![-1.0, -1.0, 0.0, 0.0],
        );
        let sol = lp.solve().unwrap().unwrap();
        assert!((sol.objective + 2.8).abs() < 1e-12);
        assert!((sol.x[0] - 1.6).abs() < 1e-12);
        assert!((sol.x[1] - 1.2).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let infeasible = LinearProgram::new(vec![vec![1.0, 1.0]], vec![-1.0], vec![0.0, 0.0]);
        assert_eq!(infeasible.solve().unwrap(), Err(LpFailure::Infeasible));
        let unbounded = LinearProgram::new(vec![vec![1.0, -1.0]], vec![1.0], vec![0.0, -1.0]);
        assert_eq!(unbounded.solve().unwrap(), Err(LpFailure::Unbounded));
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        let lp = LinearProgram::new(
            vec![vec![1.0, 1.0], vec![2.0, 2.0]],
            vec![1.0, 2.0],
            vec![1.0, 2.0],
        );
        let sol = lp.solve().unwrap().unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn transportation_matches_enumeration() {
        // 2x2 transportation: feasible set is a segment parametrized by x00
        let supply = [0.3, 0.7];
        let demand = [0.6, 0.4];
        let cost = [1.0, 3.0, 2.0, -1.0];
        let x = solve_transportation(&cost, &supply, &demand).unwrap();
        let value = |t: f64| {
            let m = [t, 0.3 - t, 0.6 - t, 0.1 + t];
            m.iter().zip(&cost).map(|(a, b)| a * b).sum::<f64>()
        };
        let best = (0..=3000)
            .map(|i| value(i as f64 * 1e-4))
            .fold(f64::INFINITY, f64::min);
        let got: f64 = x.iter().zip(&cost).map(|(a, b)| a * b).sum();
        assert!((got - best).abs() < 1e-9);
        assert!((x[0] + x[1] - 0.3).abs() < 1e-12);
        assert!((x[1] + x[3] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn degenerate_transportation_terminates() {
        let n = 5;
        let supply = vec![0.2; n];
        let demand = vec![0.2; n];
        let cost: Vec<f64> = (0..n * n).map(|i| ((i * 7) % 5) as f64).collect();
        let x = solve_transportation(&cost, &supply, &demand).unwrap();
        for i in 0..n {
            let row: f64 = x[i * n..(i + 1) * n].iter().sum();
            assert!((row - 0.2).abs() < 1e-12);
        }
    }
}
