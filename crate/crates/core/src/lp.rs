//! Dense two-phase primal simplex.
//!
//! Problems are stated as `minimize cᵀx` subject to rows `aᵢᵀx {≤,=,≥} bᵢ`, with each
//! variable either non-negative or free. Free variables are split into a positive and a
//! negative part. Pivoting follows Bland's rule, so the solver terminates on degenerate
//! problems and is fully deterministic.

use crate::error::{Error, Result};

/// Pivot and feasibility tolerance.
pub const PIVOT_TOL: f64 = 1e-9;
/// Magnitudes below this are flushed to zero after each pivot.
pub const ZERO_TOL: f64 = 1e-12;

const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    LessEq,
    Eq,
    GreaterEq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarBound {
    NonNegative,
    Free,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    /// Cost vector, minimized.
    pub objective: Vec<f64>,
    pub constraint_matrix: Vec<Vec<f64>>,
    pub constraint_rhs: Vec<f64>,
    pub constraint_kinds: Vec<Relation>,
    pub variable_bounds: Vec<VarBound>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Present iff `status == Optimal`.
    pub primal: Option<Vec<f64>>,
    /// Present iff `status == Optimal`.
    pub objective_value: Option<f64>,
}

impl LpSolution {
    fn without_point(status: LpStatus) -> Self {
        LpSolution {
            status,
            primal: None,
            objective_value: None,
        }
    }
}

impl LinearProgram {
    /// Program with `n` non-negative variables and no constraints yet.
    pub fn minimize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            objective,
            constraint_matrix: Vec::new(),
            constraint_rhs: Vec::new(),
            constraint_kinds: Vec::new(),
            variable_bounds: vec![VarBound::NonNegative; n],
        }
    }

    pub fn with_constraint(mut self, row: Vec<f64>, kind: Relation, rhs: f64) -> Self {
        self.constraint_matrix.push(row);
        self.constraint_kinds.push(kind);
        self.constraint_rhs.push(rhs);
        self
    }

    pub fn with_free_variable(mut self, j: usize) -> Self {
        self.variable_bounds[j] = VarBound::Free;
        self
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.objective.len();
        let r = self.constraint_matrix.len();
        if self.constraint_rhs.len() != r || self.constraint_kinds.len() != r {
            return Err(Error::Dimension(format!(
                "{} constraint rows, {} right-hand sides, {} relations",
                r,
                self.constraint_rhs.len(),
                self.constraint_kinds.len()
            )));
        }
        if self.variable_bounds.len() != n {
            return Err(Error::Dimension(format!(
                "{} variables but {} bounds",
                n,
                self.variable_bounds.len()
            )));
        }
        if let Some((i, row)) = self
            .constraint_matrix
            .iter()
            .enumerate()
            .find(|(_, row)| row.len() != n)
        {
            return Err(Error::Dimension(format!(
                "constraint row {} has {} coefficients, expected {}",
                i,
                row.len(),
                n
            )));
        }
        let all_finite = self.objective.iter().all(|v| v.is_finite())
            && self.constraint_rhs.iter().all(|v| v.is_finite())
            && self.constraint_matrix.iter().flatten().all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::Input("linear program has non-finite entries".into()));
        }
        Ok(())
    }

    /// Largest violation of any row or bound at `x`, zero when feasible.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for ((row, &b), kind) in self
            .constraint_matrix
            .iter()
            .zip(&self.constraint_rhs)
            .zip(&self.constraint_kinds)
        {
            let lhs: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
            let v = match kind {
                Relation::LessEq => lhs - b,
                Relation::GreaterEq => b - lhs,
                Relation::Eq => (lhs - b).abs(),
            };
            worst = worst.max(v);
        }
        for (v, bound) in x.iter().zip(&self.variable_bounds) {
            if *bound == VarBound::NonNegative {
                worst = worst.max(-v);
            }
        }
        worst
    }
}

/// Column bookkeeping: which structural variable a tableau column belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Column {
    Positive(usize),
    Negative(usize),
    Slack,
    Artificial,
}

struct Tableau {
    /// `rows × (cols + 1)`, last entry of each row is the right-hand side.
    rows: Vec<Vec<f64>>,
    /// Reduced costs, last entry is minus the current objective value.
    cost: Vec<f64>,
    basis: Vec<usize>,
    cols: usize,
}

enum PivotOutcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.rows[r][self.cols]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let width = self.cols + 1;
        let inv = 1.0 / self.rows[pr][pc];
        for v in self.rows[pr].iter_mut() {
            *v *= inv;
        }
        self.rows[pr][pc] = 1.0;
        let pivot_row = self.rows[pr].clone();
        for (r, row) in self.rows.iter_mut().enumerate() {
            if r == pr {
                continue;
            }
            let factor = row[pc];
            if factor == 0.0 {
                continue;
            }
            for c in 0..width {
                let v = row[c] - factor * pivot_row[c];
                row[c] = if v.abs() < ZERO_TOL { 0.0 } else { v };
            }
            row[pc] = 0.0;
        }
        let factor = self.cost[pc];
        if factor != 0.0 {
            for c in 0..width {
                let v = self.cost[c] - factor * pivot_row[c];
                self.cost[c] = if v.abs() < ZERO_TOL { 0.0 } else { v };
            }
            self.cost[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    /// Runs Bland-rule pivots over the columns allowed by `eligible`.
    fn optimize(&mut self, eligible: impl Fn(usize) -> bool) -> Result<PivotOutcome> {
        for _ in 0..MAX_PIVOTS {
            let entering = (0..self.cols).find(|&c| eligible(c) && self.cost[c] < -PIVOT_TOL);
            let Some(pc) = entering else {
                return Ok(PivotOutcome::Optimal);
            };
            let mut leaving: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][pc];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(r) / a;
                    leaving = match leaving {
                        None => Some((r, ratio)),
                        Some((br, best)) => {
                            if ratio < best - ZERO_TOL
                                || (ratio <= best + ZERO_TOL && self.basis[r] < self.basis[br])
                            {
                                Some((r, ratio))
                            } else {
                                Some((br, best))
                            }
                        }
                    };
                }
            }
            match leaving {
                None => return Ok(PivotOutcome::Unbounded),
                Some((pr, _)) => self.pivot(pr, pc),
            }
        }
        Err(Error::Numerical(format!(
            "simplex exceeded {MAX_PIVOTS} pivots"
        )))
    }

    fn price_out(&mut self, costs: &[f64]) {
        let width = self.cols + 1;
        self.cost = vec![0.0; width];
        self.cost[..costs.len()].copy_from_slice(costs);
        for r in 0..self.rows.len() {
            let cb = self.cost[self.basis[r]];
            if cb != 0.0 {
                for c in 0..width {
                    self.cost[c] -= cb * self.rows[r][c];
                }
            }
        }
    }
}

/// Solves `lp` to optimality or classifies it as infeasible or unbounded.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.num_vars();

    let mut columns = Vec::new();
    for (j, bound) in lp.variable_bounds.iter().enumerate() {
        columns.push(Column::Positive(j));
        if *bound == VarBound::Free {
            columns.push(Column::Negative(j));
        }
    }
    let structural = columns.len();

    // Normalise every row to a non-negative right-hand side.
    let normalised: Vec<(Vec<f64>, Relation, f64)> = lp
        .constraint_matrix
        .iter()
        .zip(&lp.constraint_kinds)
        .zip(&lp.constraint_rhs)
        .map(|((row, &kind), &b)| {
            let expanded: Vec<f64> = columns
                .iter()
                .map(|col| match *col {
                    Column::Positive(j) => row[j],
                    Column::Negative(j) => -row[j],
                    _ => unreachable!(),
                })
                .collect();
            if b < 0.0 {
                let flipped = match kind {
                    Relation::LessEq => Relation::GreaterEq,
                    Relation::GreaterEq => Relation::LessEq,
                    Relation::Eq => Relation::Eq,
                };
                (expanded.into_iter().map(|v| -v).collect(), flipped, -b)
            } else {
                (expanded, kind, b)
            }
        })
        .collect();

    let slack_count = normalised
        .iter()
        .filter(|(_, k, _)| *k != Relation::Eq)
        .count();
    let artificial_count = normalised
        .iter()
        .filter(|(_, k, _)| *k != Relation::LessEq)
        .count();
    columns.extend(std::iter::repeat_n(Column::Slack, slack_count));
    columns.extend(std::iter::repeat_n(Column::Artificial, artificial_count));
    let cols = columns.len();

    let mut rows = Vec::with_capacity(normalised.len());
    let mut basis = Vec::with_capacity(normalised.len());
    let mut next_slack = structural;
    let mut next_artificial = structural + slack_count;
    for (coeffs, kind, b) in &normalised {
        let mut row = vec![0.0; cols + 1];
        row[..structural].copy_from_slice(coeffs);
        row[cols] = *b;
        match kind {
            Relation::LessEq => {
                row[next_slack] = 1.0;
                basis.push(next_slack);
                next_slack += 1;
            }
            Relation::GreaterEq => {
                row[next_slack] = -1.0;
                next_slack += 1;
                row[next_artificial] = 1.0;
                basis.push(next_artificial);
                next_artificial += 1;
            }
            Relation::Eq => {
                row[next_artificial] = 1.0;
                basis.push(next_artificial);
                next_artificial += 1;
            }
        }
        rows.push(row);
    }

    let mut tab = Tableau {
        rows,
        cost: Vec::new(),
        basis,
        cols,
    };
    let is_artificial = |c: usize| columns[c] == Column::Artificial;

    // Phase one: minimise the sum of artificials.
    if artificial_count > 0 {
        let phase_one: Vec<f64> = (0..cols)
            .map(|c| if is_artificial(c) { 1.0 } else { 0.0 })
            .collect();
        tab.price_out(&phase_one);
        tab.optimize(|_| true)?;
        let infeasibility = -tab.cost[cols];
        let scale = 1.0_f64.max(lp.constraint_rhs.iter().fold(0.0_f64, |m, b| m.max(b.abs())));
        if infeasibility > PIVOT_TOL * scale {
            return Ok(LpSolution::without_point(LpStatus::Infeasible));
        }
        // Drive zero-valued artificials out of the basis, dropping redundant rows.
        let mut r = 0;
        while r < tab.rows.len() {
            if is_artificial(tab.basis[r]) {
                let replacement =
                    (0..cols).find(|&c| !is_artificial(c) && tab.rows[r][c].abs() > PIVOT_TOL);
                match replacement {
                    Some(c) => tab.pivot(r, c),
                    None => {
                        tab.rows.remove(r);
                        tab.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
    }

    // Phase two on the original costs, artificial columns barred from entering.
    let phase_two: Vec<f64> = columns
        .iter()
        .map(|col| match *col {
            Column::Positive(j) => lp.objective[j],
            Column::Negative(j) => -lp.objective[j],
            _ => 0.0,
        })
        .collect();
    tab.price_out(&phase_two);
    if let PivotOutcome::Unbounded = tab.optimize(|c| !is_artificial(c))? {
        return Ok(LpSolution::without_point(LpStatus::Unbounded));
    }

    let mut x = vec![0.0; n];
    for (r, &b) in tab.basis.iter().enumerate() {
        let value = tab.rhs(r);
        match columns[b] {
            Column::Positive(j) => x[j] += value,
            Column::Negative(j) => x[j] -= value,
            _ => {}
        }
    }
    let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        primal: Some(x),
        objective_value: Some(value),
    })
}
