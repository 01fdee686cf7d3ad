//! Exact linear programming over rationals.
//!
//! Two-phase dense simplex with Bland's anticycling rule. Everything is
//! computed in exact rational arithmetic, so `Feasible`/`Infeasible` and
//! optimal values are literal facts about the input program, not numerical
//! approximations. Intended for the small dense programs produced by
//! coupling constraints (a few hundred variables at most).

use crate::rational::Q;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Maximize,
    Minimize,
}

/// A dense LP: equality rows, `row . x <= rhs` inequality rows, per-variable
/// nonnegativity flags and an optional linear objective.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub equalities: Vec<(Vec<Q>, Q)>,
    pub inequalities: Vec<(Vec<Q>, Q)>,
    pub nonneg: Vec<bool>,
    pub objective: Option<(Vec<Q>, Direction)>,
}

impl LinearProgram {
    /// A program with all variables constrained nonnegative and no objective.
    pub fn new(num_vars: usize) -> LinearProgram {
        LinearProgram {
            num_vars,
            equalities: Vec::new(),
            inequalities: Vec::new(),
            nonneg: vec![true; num_vars],
            objective: None,
        }
    }

    pub fn eq(&mut self, row: Vec<Q>, rhs: Q) {
        self.equalities.push((row, rhs));
    }

    pub fn le(&mut self, row: Vec<Q>, rhs: Q) {
        self.inequalities.push((row, rhs));
    }

    fn check(&self) -> Result<(), LpError> {
        if self.num_vars == 0 {
            return Err(LpError::MalformedProgram("no variables".into()));
        }
        if self.nonneg.len() != self.num_vars {
            return Err(LpError::MalformedProgram("nonneg mask length".into()));
        }
        for (row, _) in self.equalities.iter().chain(&self.inequalities) {
            if row.len() != self.num_vars {
                return Err(LpError::MalformedProgram("row length mismatch".into()));
            }
        }
        if let Some((obj, _)) = &self.objective {
            if obj.len() != self.num_vars {
                return Err(LpError::MalformedProgram("objective length mismatch".into()));
            }
        }
        Ok(())
    }

    /// Exact re-substitution check of a candidate point.
    pub fn satisfied_by(&self, x: &[Q]) -> bool {
        if x.len() != self.num_vars {
            return false;
        }
        for (i, flag) in self.nonneg.iter().enumerate() {
            if *flag && x[i].is_negative() {
                return false;
            }
        }
        let dot = |row: &[Q]| -> Q { row.iter().zip(x).map(|(a, b)| a * b).sum() };
        self.equalities.iter().all(|(row, rhs)| &dot(row) == rhs)
            && self.inequalities.iter().all(|(row, rhs)| !(dot(row) > rhs.clone()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Feasible(Vec<Q>),
    Infeasible,
    Optimal { point: Vec<Q>, value: Q },
    Unbounded,
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum LpError {
    #[error("malformed program: {0}")]
    MalformedProgram(String),
    #[error("solve_optimize requires an objective")]
    MissingObjective,
}

/// Decide feasibility; on success the witness satisfies every constraint
/// exactly. Deterministic for a fixed input.
pub fn solve_feasibility(lp: &LinearProgram) -> Result<LpOutcome, LpError> {
    lp.check()?;
    let mut t = Tableau::build(lp);
    if !t.phase_one() {
        return Ok(LpOutcome::Infeasible);
    }
    Ok(LpOutcome::Feasible(t.extract(lp)))
}

/// Optimize the program's objective: `Optimal`, `Infeasible` or `Unbounded`.
pub fn solve_optimize(lp: &LinearProgram) -> Result<LpOutcome, LpError> {
    lp.check()?;
    let (obj, dir) = lp.objective.clone().ok_or(LpError::MissingObjective)?;
    let mut t = Tableau::build(lp);
    if !t.phase_one() {
        return Ok(LpOutcome::Infeasible);
    }
    // phase 2 always maximizes; flip a minimization objective
    let sign = match dir {
        Direction::Maximize => Q::one(),
        Direction::Minimize => -Q::one(),
    };
    let mut cost = vec![Q::zero(); t.ncols];
    for (j, col) in t.var_cols(lp).into_iter().enumerate() {
        match col {
            VarCols::Single(c) => cost[c] = &obj[j] * &sign,
            VarCols::Split(cp, cn) => {
                cost[cp] = &obj[j] * &sign;
                cost[cn] = -(&obj[j] * &sign);
            }
        }
    }
    if !t.phase_two(&cost) {
        return Ok(LpOutcome::Unbounded);
    }
    let point = t.extract(lp);
    let value: Q = obj.iter().zip(&point).map(|(a, b)| a * b).sum();
    Ok(LpOutcome::Optimal { point, value })
}

enum VarCols {
    Single(usize),
    Split(usize, usize),
}

/// Dense tableau kept in canonical form: basis columns are unit vectors and
/// the objective row has zero reduced cost on basic columns.
struct Tableau {
    // rows[r] has length ncols; rhs[r] >= 0 throughout
    rows: Vec<Vec<Q>>,
    rhs: Vec<Q>,
    basis: Vec<usize>,
    ncols: usize,
    nstruct: usize, // structural + slack columns (artificials come after)
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let nsplit = lp.nonneg.iter().filter(|f| !**f).count();
        let nvars = lp.num_vars + nsplit;
        let nslack = lp.inequalities.len();
        let m = lp.equalities.len() + lp.inequalities.len();
        let nstruct = nvars + nslack;
        let ncols = nstruct + m;

        let cols = Tableau::var_cols_static(lp);
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut fill = |row: &[Q], b: &Q, slack: Option<usize>| {
            let mut r = vec![Q::zero(); ncols];
            for (j, a) in row.iter().enumerate() {
                match &cols[j] {
                    VarCols::Single(c) => r[*c] = a.clone(),
                    VarCols::Split(cp, cn) => {
                        r[*cp] = a.clone();
                        r[*cn] = -a;
                    }
                }
            }
            if let Some(s) = slack {
                r[nvars + s] = Q::one();
            }
            let mut b = b.clone();
            if b.is_negative() {
                for v in r.iter_mut() {
                    *v = -&*v;
                }
                b = -b;
            }
            rows.push(r);
            rhs.push(b);
        };
        for (row, b) in &lp.equalities {
            fill(row, b, None);
        }
        for (s, (row, b)) in lp.inequalities.iter().enumerate() {
            fill(row, b, Some(s));
        }
        // artificial basis
        let mut basis = Vec::with_capacity(m);
        for (r, row) in rows.iter_mut().enumerate() {
            row[nstruct + r] = Q::one();
            basis.push(nstruct + r);
        }
        Tableau {
            rows,
            rhs,
            basis,
            ncols,
            nstruct,
        }
    }

    // free variables are split x = x+ - x-, the negative columns sit after
    // the original variable block
    fn var_cols_static(lp: &LinearProgram) -> Vec<VarCols> {
        let mut out = Vec::with_capacity(lp.num_vars);
        let mut split_at = lp.num_vars;
        for (j, flag) in lp.nonneg.iter().enumerate() {
            if *flag {
                out.push(VarCols::Single(j));
            } else {
                out.push(VarCols::Split(j, split_at));
                split_at += 1;
            }
        }
        out
    }

    fn var_cols(&self, lp: &LinearProgram) -> Vec<VarCols> {
        Tableau::var_cols_static(lp)
    }

    fn pivot(&mut self, r: usize, c: usize, cost: &mut [Q], cost_rhs: &mut Q) {
        let inv = self.rows[r][c].recip();
        for v in self.rows[r].iter_mut() {
            *v = &*v * &inv;
        }
        self.rhs[r] = &self.rhs[r] * &inv;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][c].is_zero() {
                continue;
            }
            let f = self.rows[i][c].clone();
            for (v, p) in self.rows[i].iter_mut().zip(&pivot_row) {
                *v = &*v - &(&f * p);
            }
            self.rhs[i] = &self.rhs[i] - &(&f * &pivot_rhs);
        }
        if !cost[c].is_zero() {
            let f = cost[c].clone();
            for (v, p) in cost.iter_mut().zip(&pivot_row) {
                *v = &*v - &(&f * p);
            }
            *cost_rhs = &*cost_rhs - &(&f * &pivot_rhs);
        }
        self.basis[r] = c;
    }

    /// Maximize `cost . x` from the current basic feasible point with
    /// Bland's rule. Returns false on unboundedness.
    fn simplex(&mut self, cost: &mut Vec<Q>, cost_rhs: &mut Q, allowed: usize) -> bool {
        loop {
            // entering: lowest-index column with positive reduced cost
            let enter = (0..allowed).find(|&c| cost[c].is_positive());
            let Some(c) = enter else { return true };
            // leaving: min ratio, ties by lowest basis variable index
            let mut best: Option<(usize, Q)> = None;
            for r in 0..self.rows.len() {
                if !self.rows[r][c].is_positive() {
                    continue;
                }
                let ratio = &self.rhs[r] / &self.rows[r][c];
                best = match best {
                    None => Some((r, ratio)),
                    Some((br, bratio)) => {
                        if ratio < bratio
                            || (ratio == bratio && self.basis[r] < self.basis[br])
                        {
                            Some((r, ratio))
                        } else {
                            Some((br, bratio))
                        }
                    }
                };
            }
            let Some((r, _)) = best else { return false };
            self.pivot(r, c, cost, cost_rhs);
        }
    }

    /// Drive the artificial variables to zero. Returns false if infeasible.
    fn phase_one(&mut self) -> bool {
        let m = self.rows.len();
        let mut cost = vec![Q::zero(); self.ncols];
        for a in 0..m {
            cost[self.nstruct + a] = -Q::one();
        }
        let mut cost_rhs = Q::zero();
        // canonicalize: basic artificial columns must have zero reduced cost
        for r in 0..m {
            let f = cost[self.basis[r]].clone();
            if f.is_zero() {
                continue;
            }
            let row = self.rows[r].clone();
            for (v, p) in cost.iter_mut().zip(&row) {
                *v = &*v - &(&f * p);
            }
            cost_rhs = &cost_rhs - &(&f * &self.rhs[r]);
        }
        let bounded = self.simplex(&mut cost, &mut cost_rhs, self.ncols);
        debug_assert!(bounded, "phase-one objective is bounded by zero");
        if !cost_rhs.is_zero() {
            return false;
        }
        // pivot any lingering (degenerate) artificials out of the basis
        for r in 0..m {
            if self.basis[r] < self.nstruct {
                continue;
            }
            if let Some(c) = (0..self.nstruct).find(|&c| !self.rows[r][c].is_zero()) {
                self.pivot(r, c, &mut cost, &mut cost_rhs);
            }
            // else: redundant row, every structural coefficient already zero
        }
        true
    }

    fn phase_two(&mut self, cost: &[Q]) -> bool {
        let m = self.rows.len();
        let mut cost = cost.to_vec();
        let mut cost_rhs = Q::zero();
        for r in 0..m {
            let f = cost[self.basis[r]].clone();
            if f.is_zero() {
                continue;
            }
            let row = self.rows[r].clone();
            for (v, p) in cost.iter_mut().zip(&row) {
                *v = &*v - &(&f * p);
            }
            cost_rhs = &cost_rhs - &(&f * &self.rhs[r]);
        }
        // artificial columns stay out: restrict entering to structural columns
        self.simplex(&mut cost, &mut cost_rhs, self.nstruct)
    }

    fn extract(&self, lp: &LinearProgram) -> Vec<Q> {
        let mut col_val = vec![Q::zero(); self.ncols];
        for (r, &b) in self.basis.iter().enumerate() {
            // a residual basic artificial sits at value zero
            col_val[b] = self.rhs[r].clone();
        }
        self.var_cols(lp)
            .into_iter()
            .map(|c| match c {
                VarCols::Single(j) => col_val[j].clone(),
                VarCols::Split(p, n) => &col_val[p] - &col_val[n],
            })
            .collect()
    }
}
