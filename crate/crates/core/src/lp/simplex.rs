//! Two-phase revised simplex with a dense basis inverse and sparse columns.
//!
//! Sized for the tree LPs built here (a few hundred rows, a few thousand
//! columns). All variables are non-negative.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `min c·x` subject to the constraints and `x ≥ 0`.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            objective: vec![0.0; num_vars],
            constraints: Vec::new(),
        }
    }

    pub fn add_var(&mut self, cost: f64) -> usize {
        self.objective.push(cost);
        self.num_vars += 1;
        self.num_vars - 1
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    /// Largest violation of any constraint or bound by `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = x.iter().map(|&v| (-v).max(0.0)).fold(0.0, f64::max);
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let v = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotRule {
    /// Smallest-index entering and leaving variable; never cycles.
    Bland,
    /// Most negative reduced cost, with Bland's leaving rule on ties.
    Dantzig,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-7;
const REFACTOR_EVERY: usize = 64;

struct Tableau {
    m: usize,
    /// Columns in CSC form: structural, then slack/surplus, then artificial.
    col_start: Vec<usize>,
    row_idx: Vec<usize>,
    vals: Vec<f64>,
    rhs: Vec<f64>,
    first_artificial: usize,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    iterations: usize,
    since_refactor: usize,
}

impl Tableau {
    fn ncols(&self) -> usize {
        self.col_start.len() - 1
    }

    fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.col_start[j]..self.col_start[j + 1]).map(move |k| (self.row_idx[k], self.vals[k]))
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        let mut a = vec![0.0; m * m];
        for (pos, &j) in self.basis.iter().enumerate() {
            for (i, v) in self.column(j) {
                a[i * m + pos] = v;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let piv = (col..m)
                .max_by(|&r1, &r2| a[r1 * m + col].abs().total_cmp(&a[r2 * m + col].abs()))
                .unwrap();
            if a[piv * m + col].abs() < 1e-12 {
                return Err(Error::structural("singular basis during refactorisation"));
            }
            if piv != col {
                for k in 0..m {
                    a.swap(piv * m + k, col * m + k);
                    inv.swap(piv * m + k, col * m + k);
                }
            }
            let d = a[col * m + col];
            for k in 0..m {
                a[col * m + k] /= d;
                inv[col * m + k] /= d;
            }
            for r in 0..m {
                if r != col {
                    let f = a[r * m + col];
                    if f != 0.0 {
                        for k in 0..m {
                            a[r * m + k] -= f * a[col * m + k];
                            inv[r * m + k] -= f * inv[col * m + k];
                        }
                    }
                }
            }
        }
        self.binv = inv;
        for i in 0..m {
            self.xb[i] = (0..m).map(|k| self.binv[i * m + k] * self.rhs[k]).sum();
            if self.xb[i] < 0.0 && self.xb[i] > -FEAS_TOL {
                self.xb[i] = 0.0;
            }
        }
        self.since_refactor = 0;
        Ok(())
    }

    /// Run simplex iterations on cost vector `cost` (indexed by column).
    fn optimise(&mut self, cost: &[f64], rule: PivotRule, allow: impl Fn(usize) -> bool) -> Result<()> {
        let m = self.m;
        let n = self.ncols();
        let mut pi = vec![0.0; m];
        let mut d = vec![0.0; m];
        let max_iter = 50_000 + 50 * (m + n);
        loop {
            if self.iterations > max_iter {
                return Err(Error::structural("simplex iteration limit reached"));
            }
            // Duals: pi = c_B B^{-1}.
            pi.fill(0.0);
            for (pos, &j) in self.basis.iter().enumerate() {
                let cb = cost[j];
                if cb != 0.0 {
                    let row = &self.binv[pos * m..(pos + 1) * m];
                    for (p, &b) in pi.iter_mut().zip(row) {
                        *p += cb * b;
                    }
                }
            }
            let mut entering = None;
            let mut best = -COST_TOL;
            for j in 0..n {
                if self.is_basic[j] || !allow(j) {
                    continue;
                }
                let rc = cost[j] - self.column(j).map(|(i, v)| pi[i] * v).sum::<f64>();
                if rc < best {
                    entering = Some(j);
                    best = rc;
                    if rule == PivotRule::Bland {
                        break;
                    }
                }
            }
            let Some(q) = entering else {
                return Ok(());
            };
            // d = B^{-1} a_q.
            d.fill(0.0);
            for (i, v) in self.column(q) {
                for r in 0..m {
                    d[r] += self.binv[r * m + i] * v;
                }
            }
            let mut leave: Option<usize> = None;
            let mut theta = f64::INFINITY;
            for r in 0..m {
                if d[r] > PIVOT_TOL {
                    let ratio = self.xb[r].max(0.0) / d[r];
                    match leave {
                        Some(l) if ratio >= theta - 1e-12 => {
                            if ratio <= theta + 1e-12 && self.basis[r] < self.basis[l] {
                                leave = Some(r);
                                theta = theta.min(ratio);
                            }
                        }
                        _ => {
                            leave = Some(r);
                            theta = ratio;
                        }
                    }
                }
            }
            let Some(r) = leave else {
                return Err(Error::Unbounded);
            };
            theta = self.xb[r].max(0.0) / d[r];
            for i in 0..m {
                if i != r {
                    self.xb[i] -= theta * d[i];
                    if self.xb[i] < 0.0 && self.xb[i] > -FEAS_TOL {
                        self.xb[i] = 0.0;
                    }
                }
            }
            self.xb[r] = theta;
            let piv = d[r];
            for k in 0..m {
                self.binv[r * m + k] /= piv;
            }
            for i in 0..m {
                if i != r && d[i] != 0.0 {
                    let f = d[i];
                    for k in 0..m {
                        self.binv[i * m + k] -= f * self.binv[r * m + k];
                    }
                }
            }
            self.is_basic[self.basis[r]] = false;
            self.is_basic[q] = true;
            self.basis[r] = q;
            self.iterations += 1;
            self.since_refactor += 1;
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
        }
    }
}

/// Solve `lp` to optimality.
pub fn solve(lp: &LinearProgram, rule: PivotRule) -> Result<LpSolution> {
    let m = lp.constraints.len();
    let nv = lp.num_vars;
    // Normalise every row to a non-negative right-hand side.
    let mut rows: Vec<(Vec<(usize, f64)>, Relation, f64)> = Vec::with_capacity(m);
    for c in &lp.constraints {
        if let Some(&(j, _)) = c.coeffs.iter().find(|&&(j, _)| j >= nv) {
            return Err(Error::invalid(format!("constraint references variable {j} of {nv}")));
        }
        if c.rhs < 0.0 {
            let rel = match c.relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
            rows.push((c.coeffs.iter().map(|&(j, a)| (j, -a)).collect(), rel, -c.rhs));
        } else {
            rows.push((c.coeffs.clone(), c.relation, c.rhs));
        }
    }
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nv];
    for (i, (coeffs, _, _)) in rows.iter().enumerate() {
        for &(j, a) in coeffs {
            if a != 0.0 {
                cols[j].push((i, a));
            }
        }
    }
    let mut basis = vec![usize::MAX; m];
    for (i, (_, rel, _)) in rows.iter().enumerate() {
        match rel {
            Relation::Le => {
                basis[i] = cols.len();
                cols.push(vec![(i, 1.0)]);
            }
            Relation::Ge => cols.push(vec![(i, -1.0)]),
            Relation::Eq => {}
        }
    }
    let first_artificial = cols.len();
    for (i, (_, rel, _)) in rows.iter().enumerate() {
        if *rel != Relation::Le {
            basis[i] = cols.len();
            cols.push(vec![(i, 1.0)]);
        }
    }
    let ncols = cols.len();
    let mut col_start = Vec::with_capacity(ncols + 1);
    let mut row_idx = Vec::new();
    let mut vals = Vec::new();
    col_start.push(0);
    for c in &cols {
        for &(i, v) in c {
            row_idx.push(i);
            vals.push(v);
        }
        col_start.push(row_idx.len());
    }
    let mut is_basic = vec![false; ncols];
    for &b in &basis {
        is_basic[b] = true;
    }
    let rhs: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let mut binv = vec![0.0; m * m];
    for i in 0..m {
        binv[i * m + i] = 1.0;
    }
    let mut t = Tableau {
        m,
        col_start,
        row_idx,
        vals,
        xb: rhs.clone(),
        rhs,
        first_artificial,
        basis,
        is_basic,
        binv,
        iterations: 0,
        since_refactor: 0,
    };

    if first_artificial < ncols {
        let phase1: Vec<f64> = (0..ncols).map(|j| if j >= first_artificial { 1.0 } else { 0.0 }).collect();
        t.optimise(&phase1, rule, |_| true)?;
        t.refactor()?;
        let infeasibility: f64 = t
            .basis
            .iter()
            .zip(&t.xb)
            .filter(|(&j, _)| j >= first_artificial)
            .map(|(_, &x)| x)
            .sum();
        if infeasibility > FEAS_TOL * (1.0 + m as f64) {
            return Err(Error::Infeasible);
        }
        drive_out_artificials(&mut t)?;
    }
    let mut phase2 = vec![0.0; ncols];
    phase2[..nv].copy_from_slice(&lp.objective);
    let fa = t.first_artificial;
    t.optimise(&phase2, rule, |j| j < fa)?;
    t.refactor()?;
    let mut x = vec![0.0; nv];
    for (pos, &j) in t.basis.iter().enumerate() {
        if j < nv {
            x[j] = t.xb[pos].max(0.0);
        }
    }
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution {
        x,
        objective,
        iterations: t.iterations,
    })
}

/// Pivot zero-level artificials out of the basis where a structural column allows.
fn drive_out_artificials(t: &mut Tableau) -> Result<()> {
    let m = t.m;
    let fa = t.first_artificial;
    for r in 0..m {
        if t.basis[r] < fa {
            continue;
        }
        // Row r of B^{-1} A for non-artificial, non-basic columns.
        let candidate = (0..fa).find(|&j| {
            !t.is_basic[j] && t.column(j).map(|(i, v)| t.binv[r * m + i] * v).sum::<f64>().abs() > 1e-7
        });
        if let Some(q) = candidate {
            let mut d = vec![0.0; m];
            for (i, v) in t.column(q) {
                for k in 0..m {
                    d[k] += t.binv[k * m + i] * v;
                }
            }
            let piv = d[r];
            for k in 0..m {
                t.binv[r * m + k] /= piv;
            }
            for i in 0..m {
                if i != r && d[i] != 0.0 {
                    let f = d[i];
                    for k in 0..m {
                        t.binv[i * m + k] -= f * t.binv[r * m + k];
                    }
                }
            }
            t.is_basic[t.basis[r]] = false;
            t.is_basic[q] = true;
            t.basis[r] = q;
        }
    }
    t.refactor()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_max_problem() {
        // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18  → (2, 6), value 36.
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![-3.0, -5.0];
        lp.add_constraint(vec![(0, 1.0)], Relation::Le, 4.0);
        lp.add_constraint(vec![(1, 2.0)], Relation::Le, 12.0);
        lp.add_constraint(vec![(0, 3.0), (1, 2.0)], Relation::Le, 18.0);
        for rule in [PivotRule::Bland, PivotRule::Dantzig] {
            let s = solve(&lp, rule).unwrap();
            assert!((s.objective + 36.0).abs() < 1e-9);
            assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
        }
    }

    #[test]
    fn covering_with_equalities() {
        // min x + y s.t. x + 2y ≥ 4, x - y = 1.
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 1.0];
        lp.add_constraint(vec![(0, 1.0), (1, 2.0)], Relation::Ge, 4.0);
        lp.add_constraint(vec![(0, 1.0), (1, -1.0)], Relation::Eq, 1.0);
        let s = solve(&lp, PivotRule::Bland).unwrap();
        assert!((s.objective - 3.0).abs() < 1e-9, "{}", s.objective);
        assert!(lp.max_violation(&s.x) < 1e-9);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.objective = vec![1.0];
        lp.add_constraint(vec![(0, 1.0)], Relation::Ge, 2.0);
        lp.add_constraint(vec![(0, 1.0)], Relation::Le, 1.0);
        assert!(matches!(solve(&lp, PivotRule::Bland), Err(Error::Infeasible)));

        let mut lp = LinearProgram::new(1);
        lp.objective = vec![-1.0];
        lp.add_constraint(vec![(0, 1.0)], Relation::Ge, 0.0);
        assert!(matches!(solve(&lp, PivotRule::Dantzig), Err(Error::Unbounded)));
    }
}
