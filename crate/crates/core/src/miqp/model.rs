//! Generic sparse MIQP container.
//!
//! ```text
//! minimize   1/2 x'Px + q'x + c
//! subject to a_r'x {<=, =} b_r      for every row r
//!            lower <= x <= upper
//!            x_j in {0, 1}          for binary j
//! ```
//!
//! `P` is stored as its upper triangle; an off-diagonal entry `(i, j)`
//! stands for both `P_ij` and `P_ji`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::layout::{CompletionRole, VariableLayout};

/// `(variable, priority, rows)` of one member of a selection group.
type Candidate<'a> = (usize, f64, &'a [usize]);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("row `{row}` references variable {index} but the model has {len}")]
    BadIndex { row: String, index: usize, len: usize },
    #[error("binary variable `{0}` must have bounds within [0, 1]")]
    BinaryBounds(String),
    #[error("variable `{0}` has lower bound above upper bound")]
    EmptyDomain(String),
    #[error("non-finite coefficient in `{0}`")]
    NonFinite(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub binary: bool,
    /// Branching priority class; lower tiers are branched on first.
    pub tier: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates the row (zero when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Objective {
    /// Upper-triangular entries of `P`, keyed `(i, j)` with `i <= j`.
    pub quadratic: BTreeMap<(usize, usize), f64>,
    pub linear: Vec<f64>,
    pub constant: f64,
}

impl Objective {
    pub fn value(&self, x: &[f64]) -> f64 {
        let mut v = self.constant;
        for (j, c) in self.linear.iter().enumerate() {
            v += c * x[j];
        }
        for (&(i, j), &p) in &self.quadratic {
            if i == j {
                v += 0.5 * p * x[i] * x[i];
            } else {
                v += p * x[i] * x[j];
            }
        }
        v
    }

    /// Gradient `P x + q`.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.linear.clone();
        g.resize(x.len(), 0.0);
        for (&(i, j), &p) in &self.quadratic {
            g[i] += p * x[j];
            if i != j {
                g[j] += p * x[i];
            }
        }
        g
    }
}

/// Rows and bounds a point violates beyond a tolerance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Violations {
    pub max_row: f64,
    pub max_bound: f64,
    pub max_integrality: f64,
    pub worst_row: Option<usize>,
}

impl Violations {
    pub fn max(&self) -> f64 {
        self.max_row.max(self.max_bound).max(self.max_integrality)
    }
}

/// Result of deriving the binaries of a relaxed point.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub point: Vec<f64>,
    pub violated_rows: Vec<usize>,
    pub bounds_ok: bool,
}

impl Completion {
    pub fn is_feasible(&self) -> bool {
        self.bounds_ok && self.violated_rows.is_empty()
    }
}

#[derive(Debug, Clone, Default)]
pub struct MiqpModel {
    pub name: String,
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: Objective,
    layout: Option<VariableLayout>,
}

impl MiqpModel {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> usize {
        self.push_variable(name.into(), lower, upper, false, 0)
    }

    pub fn add_binary(&mut self, name: impl Into<String>, tier: u8) -> usize {
        self.push_variable(name.into(), 0.0, 1.0, true, tier)
    }

    fn push_variable(&mut self, name: String, lower: f64, upper: f64, binary: bool, tier: u8) -> usize {
        self.variables.push(Variable {
            name,
            lower,
            upper,
            binary,
            tier,
        });
        self.objective.linear.push(0.0);
        self.variables.len() - 1
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.variables[j].lower = lower;
        self.variables[j].upper = upper;
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> usize {
        self.constraints.push(Constraint {
            name: name.into(),
            terms,
            sense,
            rhs,
        });
        self.constraints.len() - 1
    }

    /// Adds `value` to the symmetric entry `P_ij` (and `P_ji`).
    pub fn add_quadratic(&mut self, i: usize, j: usize, value: f64) {
        let key = (i.min(j), i.max(j));
        *self.objective.quadratic.entry(key).or_insert(0.0) += value;
    }

    pub fn add_linear(&mut self, j: usize, value: f64) {
        self.objective.linear[j] += value;
    }

    pub fn add_constant(&mut self, value: f64) {
        self.objective.constant += value;
    }

    pub fn set_layout(&mut self, layout: VariableLayout) {
        self.layout = Some(layout);
    }

    pub fn layout(&self) -> Option<&VariableLayout> {
        self.layout.as_ref()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn binary_indices(&self) -> Vec<usize> {
        (0..self.variables.len())
            .filter(|&j| self.variables[j].binary)
            .collect()
    }

    pub fn num_binaries(&self) -> usize {
        self.variables.iter().filter(|v| v.binary).count()
    }

    pub fn lower_bounds(&self) -> Vec<f64> {
        self.variables.iter().map(|v| v.lower).collect()
    }

    pub fn upper_bounds(&self) -> Vec<f64> {
        self.variables.iter().map(|v| v.upper).collect()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.value(x)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.variables.len();
        for v in &self.variables {
            if v.lower > v.upper {
                return Err(ModelError::EmptyDomain(v.name.clone()));
            }
            if v.binary && (v.lower < 0.0 || v.upper > 1.0) {
                return Err(ModelError::BinaryBounds(v.name.clone()));
            }
        }
        for r in &self.constraints {
            for &(j, a) in &r.terms {
                if j >= n {
                    return Err(ModelError::BadIndex {
                        row: r.name.clone(),
                        index: j,
                        len: n,
                    });
                }
                if !a.is_finite() {
                    return Err(ModelError::NonFinite(r.name.clone()));
                }
            }
            if !r.rhs.is_finite() {
                return Err(ModelError::NonFinite(r.name.clone()));
            }
        }
        for (&(i, j), p) in &self.objective.quadratic {
            if i >= n || j >= n || !p.is_finite() {
                return Err(ModelError::NonFinite("objective".into()));
            }
        }
        Ok(())
    }

    /// Row, bound and integrality violations of `x`.
    pub fn violations(&self, x: &[f64]) -> Violations {
        let mut out = Violations::default();
        for (r, row) in self.constraints.iter().enumerate() {
            let v = row.violation(x);
            if v > out.max_row {
                out.max_row = v;
                out.worst_row = Some(r);
            }
        }
        for (v, xj) in self.variables.iter().zip(x) {
            out.max_bound = out.max_bound.max(v.lower - xj).max(xj - v.upper);
            if v.binary {
                out.max_integrality = out.max_integrality.max((xj - xj.round()).abs());
            }
        }
        out
    }

    /// Tries to turn a relaxed point into an integer-feasible one without
    /// touching its continuous part. Binaries fixed by `lower`/`upper` keep
    /// their fixed value. Returns `None` if the completed point violates any
    /// row by more than `tol`.
    pub fn complete_binaries(&self, x: &[f64], lower: &[f64], upper: &[f64], tol: f64) -> Option<Vec<f64>> {
        let c = self.complete(x, lower, upper, tol);
        c.is_feasible().then_some(c.point)
    }

    /// Like [`complete_binaries`](Self::complete_binaries) but always returns
    /// the completed point, with the rows it violates beyond `tol`.
    pub fn complete(&self, x: &[f64], lower: &[f64], upper: &[f64], tol: f64) -> Completion {
        let mut y = x.to_vec();
        let fixed = |j: usize| (upper[j] - lower[j]).abs() < 0.5;
        match &self.layout {
            Some(layout) => {
                for stage in layout.completion_stages() {
                    for &(j, role) in stage {
                        if fixed(j) {
                            y[j] = lower[j].round();
                            continue;
                        }
                        match role {
                            CompletionRole::SetIfSatisfied { row } => {
                                y[j] = 1.0;
                                if self.constraints[row].violation(&y) > tol {
                                    y[j] = 0.0;
                                }
                            }
                            CompletionRole::SetIfNeeded { row } => {
                                y[j] = 0.0;
                                if self.constraints[row].violation(&y) > tol {
                                    y[j] = 1.0;
                                }
                            }
                            CompletionRole::Select { .. } => {}
                        }
                    }
                    self.complete_selections(&mut y, stage, lower, upper, tol);
                }
                for j in self.binary_indices() {
                    if fixed(j) {
                        y[j] = lower[j].round();
                    } else {
                        y[j] = y[j].round().clamp(0.0, 1.0);
                    }
                }
            }
            None => {
                for j in self.binary_indices() {
                    y[j] = x[j].round().clamp(lower[j], upper[j]);
                }
            }
        }
        let violated_rows = (0..self.constraints.len())
            .filter(|&r| self.constraints[r].violation(&y) > tol)
            .collect();
        let bounds_ok = self
            .variables
            .iter()
            .zip(&y)
            .all(|(v, &yj)| yj >= v.lower - tol && yj <= v.upper + tol);
        Completion {
            point: y,
            violated_rows,
            bounds_ok,
        }
    }

    /// Within each selection group at most one member is switched on: the
    /// admissible member with the highest priority whose rows all hold.
    fn complete_selections(
        &self,
        y: &mut [f64],
        stage: &[(usize, CompletionRole)],
        lower: &[f64],
        upper: &[f64],
        tol: f64,
    ) {
        let mut groups: BTreeMap<usize, Vec<Candidate>> = BTreeMap::new();
        for &(j, role) in stage {
            if let CompletionRole::Select { group, priority } = role {
                let rows = self
                    .layout
                    .as_ref()
                    .map(|l| l.rows_of(j))
                    .unwrap_or(&[]);
                groups.entry(group).or_default().push((j, priority, rows));
            }
        }
        for members in groups.values() {
            let fixed_on = members
                .iter()
                .any(|&(j, _, _)| lower[j] > 0.5);
            for &(j, _, _) in members {
                y[j] = if lower[j] > 0.5 { 1.0 } else { 0.0 };
            }
            if fixed_on {
                continue;
            }
            let mut order: Vec<_> = members.iter().filter(|&&(j, _, _)| upper[j] > 0.5).collect();
            order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            for &&(j, _, rows) in &order {
                y[j] = 1.0;
                if rows.iter().all(|&r| self.constraints[r].violation(y) <= tol) {
                    break;
                }
                y[j] = 0.0;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objective_value_and_gradient() {
        let mut m = MiqpModel::new("t");
        let a = m.add_continuous("a", -10.0, 10.0);
        let b = m.add_continuous("b", -10.0, 10.0);
        // (a - b)^2 + 3a + 1 = 1/2 [a b] [[2,-2],[-2,2]] [a b]' + 3a + 1
        m.add_quadratic(a, a, 2.0);
        m.add_quadratic(b, b, 2.0);
        m.add_quadratic(b, a, -2.0);
        m.add_linear(a, 3.0);
        m.add_constant(1.0);
        let x = [2.0, 5.0];
        assert_eq!(m.objective_value(&x), 9.0 + 6.0 + 1.0);
        assert_eq!(m.objective().gradient(&x), vec![2.0 * (2.0 - 5.0) + 3.0, -2.0 * (2.0 - 5.0)]);
    }

    #[test]
    fn validation_catches_bad_rows() {
        let mut m = MiqpModel::new("t");
        let a = m.add_binary("z", 0);
        m.add_constraint("r", vec![(a, 1.0), (7, 1.0)], Sense::Le, 1.0);
        assert!(matches!(m.validate(), Err(ModelError::BadIndex { index: 7, .. })));
    }

    #[test]
    fn violations_report_worst_row() {
        let mut m = MiqpModel::new("t");
        let a = m.add_continuous("a", 0.0, 1.0);
        let z = m.add_binary("z", 0);
        m.add_constraint("r0", vec![(a, 1.0)], Sense::Le, 0.5);
        m.add_constraint("r1", vec![(a, 1.0), (z, 1.0)], Sense::Eq, 1.0);
        let v = m.violations(&[0.9, 0.5]);
        assert!((v.max_row - 0.4).abs() < 1e-12);
        assert_eq!(v.worst_row, Some(0));
        assert_eq!(v.max_integrality, 0.5);
    }

    #[test]
    fn plain_completion_rounds() {
        let mut m = MiqpModel::new("t");
        let z = m.add_binary("z", 0);
        m.add_constraint("r", vec![(z, 1.0)], Sense::Le, 0.5);
        let (lo, hi) = (m.lower_bounds(), m.upper_bounds());
        assert_eq!(m.complete_binaries(&[1e-9], &lo, &hi, 1e-6), Some(vec![0.0]));
        assert_eq!(m.complete_binaries(&[0.9], &lo, &hi, 1e-6), None);
    }
}
