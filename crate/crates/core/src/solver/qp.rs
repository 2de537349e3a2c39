//! Convex QP relaxations solved with the Clarabel interior-point solver.
//!
//! Variables whose node bounds coincide are substituted out; the remaining
//! finite bounds become inequality rows.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, NonnegativeConeT, SolverStatus, SupportedConeT, ZeroConeT,
};
use serde::Serialize;

use crate::miqp::{MiqpModel, Sense};

/// Rows left with no free variable must hold to this tolerance.
const CONSTANT_ROW_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QpStatus {
    Optimal,
    Infeasible,
    /// The interior-point method stopped without a solution or a certificate.
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub status: QpStatus,
    /// Full-length point (fixed variables included); empty unless optimal.
    pub values: Vec<f64>,
    pub objective: f64,
    /// Largest row or bound violation of the reduced problem.
    pub primal_residual: f64,
    /// Infinity norm of `P x + q + A' z` on the reduced problem.
    pub dual_residual: f64,
    pub iterations: u32,
}

impl QpSolution {
    fn without_point(status: QpStatus) -> Self {
        Self {
            status,
            values: Vec::new(),
            objective: f64::INFINITY,
            primal_residual: f64::NAN,
            dual_residual: f64::NAN,
            iterations: 0,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == QpStatus::Optimal
    }
}

struct Reduced {
    n: usize,
    p: CscMatrix<f64>,
    q: Vec<f64>,
    a: CscMatrix<f64>,
    b: Vec<f64>,
    cones: Vec<SupportedConeT<f64>>,
    /// Full index of each reduced column.
    columns: Vec<usize>,
}

/// Solves the continuous relaxation of `model` with binaries in
/// `[lower, upper]`. `lower`/`upper` must have one entry per variable.
pub fn solve_qp_relaxation(model: &MiqpModel, lower: &[f64], upper: &[f64]) -> QpSolution {
    let n_full = model.num_variables();
    assert_eq!(lower.len(), n_full);
    assert_eq!(upper.len(), n_full);
    if (0..n_full).any(|j| lower[j] > upper[j]) {
        return QpSolution::without_point(QpStatus::Infeasible);
    }
    let mut base = vec![0.0; n_full];
    let mut reduced_index = vec![usize::MAX; n_full];
    let mut columns = Vec::new();
    for j in 0..n_full {
        if lower[j] == upper[j] {
            base[j] = lower[j];
        } else {
            reduced_index[j] = columns.len();
            columns.push(j);
        }
    }
    let reduced = match reduce(model, lower, upper, &base, &reduced_index, columns) {
        Some(r) => r,
        None => return QpSolution::without_point(QpStatus::Infeasible),
    };
    if reduced.n == 0 {
        return QpSolution {
            status: QpStatus::Optimal,
            objective: model.objective_value(&base),
            values: base,
            primal_residual: 0.0,
            dual_residual: 0.0,
            iterations: 0,
        };
    }
    let settings = DefaultSettings {
        verbose: false,
        max_threads: 1,
        ..DefaultSettings::default()
    };
    let mut solver = match DefaultSolver::new(&reduced.p, &reduced.q, &reduced.a, &reduced.b, &reduced.cones, settings) {
        Ok(s) => s,
        Err(e) => {
            log::warn!("relaxation setup failed: {e}");
            return QpSolution::without_point(QpStatus::NumericalFailure);
        }
    };
    solver.solve();
    let sol = &solver.solution;
    let status = match sol.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => QpStatus::Optimal,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => QpStatus::Infeasible,
        other => {
            log::debug!("relaxation stopped with {other:?}");
            QpStatus::NumericalFailure
        }
    };
    if status != QpStatus::Optimal {
        let mut out = QpSolution::without_point(status);
        out.iterations = sol.iterations;
        return out;
    }
    let mut values = base;
    for (k, &j) in reduced.columns.iter().enumerate() {
        values[j] = sol.x[k].clamp(lower[j], upper[j]);
    }
    let primal_residual = residual_primal(&reduced, &sol.x);
    let dual_residual = residual_dual(&reduced, &sol.x, &sol.z);
    QpSolution {
        status,
        objective: model.objective_value(&values),
        values,
        primal_residual,
        dual_residual,
        iterations: sol.iterations,
    }
}

fn reduce(
    model: &MiqpModel,
    lower: &[f64],
    upper: &[f64],
    base: &[f64],
    reduced_index: &[usize],
    columns: Vec<usize>,
) -> Option<Reduced> {
    let n = columns.len();
    let obj = model.objective();
    let mut q: Vec<f64> = columns.iter().map(|&j| obj.linear[j]).collect();
    let (mut pi, mut pj, mut pv) = (Vec::new(), Vec::new(), Vec::new());
    for (&(i, j), &v) in &obj.quadratic {
        let (ri, rj) = (reduced_index[i], reduced_index[j]);
        match (ri != usize::MAX, rj != usize::MAX) {
            (true, true) => {
                pi.push(ri);
                pj.push(rj);
                pv.push(v);
            }
            (true, false) => q[ri] += v * base[j],
            (false, true) => q[rj] += v * base[i],
            (false, false) => {}
        }
    }

    let (mut ai, mut aj, mut av) = (Vec::new(), Vec::new(), Vec::new());
    let mut b = Vec::new();
    let mut n_eq = 0;
    for pass in [Sense::Eq, Sense::Le] {
        for row in model.constraints().iter().filter(|r| r.sense == pass) {
            let mut rhs = row.rhs;
            let start = av.len();
            for &(j, a) in &row.terms {
                if reduced_index[j] == usize::MAX {
                    rhs -= a * base[j];
                } else if a != 0.0 {
                    ai.push(b.len());
                    aj.push(reduced_index[j]);
                    av.push(a);
                }
            }
            if av.len() == start {
                let ok = match pass {
                    Sense::Eq => rhs.abs() <= CONSTANT_ROW_TOL * (1.0 + row.rhs.abs()),
                    Sense::Le => rhs >= -CONSTANT_ROW_TOL * (1.0 + row.rhs.abs()),
                };
                if !ok {
                    return None;
                }
                continue;
            }
            b.push(rhs);
        }
        if pass == Sense::Eq {
            n_eq = b.len();
        }
    }
    for (k, &j) in columns.iter().enumerate() {
        if upper[j].is_finite() {
            ai.push(b.len());
            aj.push(k);
            av.push(1.0);
            b.push(upper[j]);
        }
        if lower[j].is_finite() {
            ai.push(b.len());
            aj.push(k);
            av.push(-1.0);
            b.push(-lower[j]);
        }
    }
    let m = b.len();
    let mut cones = Vec::new();
    if n_eq > 0 {
        cones.push(ZeroConeT(n_eq));
    }
    if m > n_eq {
        cones.push(NonnegativeConeT(m - n_eq));
    }
    Some(Reduced {
        n,
        p: CscMatrix::new_from_triplets(n, n, pi, pj, pv),
        q,
        a: CscMatrix::new_from_triplets(m, n, ai, aj, av),
        b,
        cones,
        columns,
    })
}

fn csc_columns(m: &CscMatrix<f64>) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
    (0..m.n).flat_map(move |c| (m.colptr[c]..m.colptr[c + 1]).map(move |k| (m.rowval[k], c, m.nzval[k])))
}

fn residual_primal(r: &Reduced, x: &[f64]) -> f64 {
    let mut ax = vec![0.0; r.b.len()];
    for (i, j, v) in csc_columns(&r.a) {
        ax[i] += v * x[j];
    }
    let n_eq = match r.cones.first() {
        Some(SupportedConeT::ZeroConeT(k)) => *k,
        _ => 0,
    };
    ax.iter()
        .zip(&r.b)
        .enumerate()
        .map(|(i, (lhs, rhs))| if i < n_eq { (lhs - rhs).abs() } else { (lhs - rhs).max(0.0) })
        .fold(0.0, f64::max)
}

fn residual_dual(r: &Reduced, x: &[f64], z: &[f64]) -> f64 {
    let mut g = r.q.clone();
    for (i, j, v) in csc_columns(&r.p) {
        g[i] += v * x[j];
        if i != j {
            g[j] += v * x[i];
        }
    }
    for (i, j, v) in csc_columns(&r.a) {
        g[j] += v * z[i];
    }
    g.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bounds(m: &MiqpModel) -> (Vec<f64>, Vec<f64>) {
        (m.lower_bounds(), m.upper_bounds())
    }

    #[test]
    fn unconstrained_least_norm() {
        let mut m = MiqpModel::new("u");
        for k in 0..3 {
            let j = m.add_continuous(format!("u{k}"), f64::NEG_INFINITY, f64::INFINITY);
            m.add_quadratic(j, j, 2.0);
        }
        let (lo, hi) = bounds(&m);
        let s = solve_qp_relaxation(&m, &lo, &hi);
        assert!(s.is_optimal());
        assert!(s.objective.abs() < 1e-9);
        assert!(s.values.iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn active_upper_bound() {
        // (v - 3)^2 = v^2 - 6v + 9 with v <= 1
        let mut m = MiqpModel::new("v");
        let v = m.add_continuous("v", f64::NEG_INFINITY, 1.0);
        m.add_quadratic(v, v, 2.0);
        m.add_linear(v, -6.0);
        m.add_constant(9.0);
        let (lo, hi) = bounds(&m);
        let s = solve_qp_relaxation(&m, &lo, &hi);
        assert!(s.is_optimal());
        assert!((s.values[0] - 1.0).abs() < 1e-6);
        assert!((s.objective - 4.0).abs() < 1e-6);
        assert!(s.dual_residual < 1e-6);
    }

    #[test]
    fn infeasible_rows_detected() {
        let mut m = MiqpModel::new("i");
        let a = m.add_continuous("a", 0.0, 1.0);
        m.add_constraint("r", vec![(a, 1.0)], Sense::Le, -1.0);
        let (lo, hi) = bounds(&m);
        assert_eq!(solve_qp_relaxation(&m, &lo, &hi).status, QpStatus::Infeasible);
    }

    #[test]
    fn fixed_variables_substituted() {
        let mut m = MiqpModel::new("f");
        let a = m.add_continuous("a", -10.0, 10.0);
        let z = m.add_binary("z", 0);
        m.add_quadratic(a, a, 2.0);
        // a >= 2 z
        m.add_constraint("r", vec![(a, -1.0), (z, 2.0)], Sense::Le, 0.0);
        let (mut lo, hi) = bounds(&m);
        lo[z] = 1.0;
        let s = solve_qp_relaxation(&m, &lo, &hi);
        assert!(s.is_optimal());
        assert!((s.values[a] - 2.0).abs() < 1e-6);
        assert_eq!(s.values[z], 1.0);
        assert!((s.objective - 4.0).abs() < 1e-6);
    }

    #[test]
    fn all_fixed_is_evaluated_directly() {
        let mut m = MiqpModel::new("c");
        let z = m.add_binary("z", 0);
        m.add_linear(z, 3.0);
        m.add_constraint("r", vec![(z, 1.0)], Sense::Le, 0.5);
        let s = solve_qp_relaxation(&m, &[0.0], &[0.0]);
        assert!(s.is_optimal());
        assert_eq!(s.objective, 0.0);
        assert_eq!(solve_qp_relaxation(&m, &[1.0], &[1.0]).status, QpStatus::Infeasible);
    }
}
