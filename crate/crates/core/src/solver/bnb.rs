//! Branch-and-bound over QP relaxations.
//!
//! Each node carries the binary fixings made on its path from the root and
//! the bound inherited from its parent. After a relaxation is solved the
//! model's completion rules try to turn the relaxed point into an
//! integer-feasible one; when that succeeds at the relaxation value the node
//! is closed without branching.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::time::Instant;

use super::options::{Branching, NodeSelection, SolveOptions};
use super::qp::{solve_qp_relaxation, QpSolution, QpStatus};
use super::{MipSolution, MipStatus, SearchStats};
use crate::miqp::{Completion, MiqpModel};

#[derive(Debug, Clone)]
struct Node {
    id: u64,
    fixings: Vec<(usize, f64)>,
    /// Parent relaxation value, a valid lower bound for this subtree.
    bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64, u64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

enum Pool {
    Best(BTreeMap<Key, Node>),
    Depth(Vec<Node>),
}

impl Pool {
    fn new(sel: NodeSelection) -> Self {
        match sel {
            NodeSelection::BestBound => Pool::Best(BTreeMap::new()),
            NodeSelection::DepthFirst => Pool::Depth(Vec::new()),
        }
    }

    fn push(&mut self, node: Node) {
        match self {
            Pool::Best(m) => {
                m.insert(Key(node.bound, node.id), node);
            }
            Pool::Depth(v) => v.push(node),
        }
    }

    fn pop(&mut self) -> Option<Node> {
        match self {
            Pool::Best(m) => m.pop_first().map(|(_, n)| n),
            Pool::Depth(v) => v.pop(),
        }
    }

    fn is_empty(&self) -> bool {
        match self {
            Pool::Best(m) => m.is_empty(),
            Pool::Depth(v) => v.is_empty(),
        }
    }

    fn min_bound(&self) -> f64 {
        match self {
            Pool::Best(m) => m.keys().next().map_or(f64::INFINITY, |k| k.0),
            Pool::Depth(v) => v.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min),
        }
    }
}

struct Search<'a> {
    model: &'a MiqpModel,
    opts: &'a SolveOptions,
    lower: Vec<f64>,
    upper: Vec<f64>,
    binaries: Vec<usize>,
    incumbent: Option<(Vec<f64>, f64)>,
    /// Smallest bound among subtrees dropped after numerical failures.
    dropped_bound: f64,
    /// Smallest bound among subtrees pruned against an incumbent.
    pruned_bound: f64,
    stats: SearchStats,
    next_id: u64,
}

impl<'a> Search<'a> {
    fn cutoff(&self) -> f64 {
        match &self.incumbent {
            Some((_, v)) => v - gap_allowance(*v, self.opts),
            None => f64::INFINITY,
        }
    }

    fn node_bounds(&self, node: &Node) -> (Vec<f64>, Vec<f64>) {
        let mut lo = self.lower.clone();
        let mut hi = self.upper.clone();
        for &(j, v) in &node.fixings {
            lo[j] = v;
            hi[j] = v;
        }
        (lo, hi)
    }

    fn solve_batch(&self, batch: &[Node]) -> Vec<QpSolution> {
        if batch.len() == 1 {
            let (lo, hi) = self.node_bounds(&batch[0]);
            return vec![solve_qp_relaxation(self.model, &lo, &hi)];
        }
        std::thread::scope(|s| {
            let handles: Vec<_> = batch
                .iter()
                .map(|node| {
                    let (lo, hi) = self.node_bounds(node);
                    let model = self.model;
                    s.spawn(move || solve_qp_relaxation(model, &lo, &hi))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("relaxation worker panicked"))
                .collect()
        })
    }

    fn offer(&mut self, point: Vec<f64>, value: f64) {
        if self.incumbent.as_ref().is_none_or(|(_, v)| value < *v) {
            self.stats.incumbent_history.push((self.stats.nodes, value));
            log::debug!("node {}: incumbent {value:.6}", self.stats.nodes);
            self.incumbent = Some((point, value));
        }
    }

    /// Picks the branching binary. Candidates come from the rows the
    /// completed point violates: among those whose free binaries reach the
    /// lowest tier, the rows with the fewest free binaries. Without violated
    /// rows every free binary is a candidate. The lowest tier wins, then the
    /// branching rule, then the larger relaxed value, then the lowest index.
    /// Returns `None` only if no free binary is fractional or disagrees with
    /// its completion.
    fn branch_variable(&self, x: &[f64], completed: &Completion, lo: &[f64], hi: &[f64]) -> Option<usize> {
        let tol = self.opts.integer_tolerance;
        let vars = self.model.variables();
        let rows = self.model.constraints();
        let free_of = |r: usize| -> Vec<usize> {
            rows[r]
                .terms
                .iter()
                .map(|&(j, _)| j)
                .filter(|&j| vars[j].binary && lo[j] != hi[j])
                .collect()
        };
        let mut tightest: Option<(u8, usize)> = None;
        let mut focused: Vec<usize> = Vec::new();
        for &r in &completed.violated_rows {
            let free = free_of(r);
            let Some(tier) = free.iter().map(|&j| vars[j].tier).min() else {
                continue;
            };
            let rank = (tier, free.len());
            match tightest {
                Some(best) if rank > best => {}
                Some(best) if rank == best => focused.extend(free),
                _ => {
                    tightest = Some(rank);
                    focused = free;
                }
            }
        }
        focused.sort_unstable();
        focused.dedup();
        let everything: Vec<usize>;
        let candidates: &[usize] = if focused.is_empty() {
            everything = self
                .binaries
                .iter()
                .copied()
                .filter(|&j| lo[j] != hi[j])
                .filter(|&j| {
                    let f = x[j] - x[j].floor();
                    f.min(1.0 - f) > tol || (x[j] - completed.point[j]).abs() > tol
                })
                .collect();
            &everything
        } else {
            &focused
        };
        let layout = self.model.layout();
        // Distance proxy: total violation of the face rows with the face
        // binaries switched on.
        let proximity = |j: usize| -> f64 {
            let Some(layout) = layout else { return 0.0 };
            layout
                .indicators_of(j)
                .iter()
                .map(|&(z, r)| {
                    let row = &rows[r];
                    let coef: f64 = row.terms.iter().filter(|t| t.0 == z).map(|t| t.1).sum();
                    (row.activity(x) + coef * (1.0 - x[z]) - row.rhs).max(0.0)
                })
                .sum()
        };
        let key = |j: usize| {
            let f = x[j] - x[j].floor();
            let dist = f.min(1.0 - f);
            match self.opts.branching {
                Branching::MostFractional => (0.0, dist),
                Branching::FirstFractional => (0.0, if dist > tol { 1.0 } else { 0.0 }),
                Branching::Proximity => (-proximity(j), dist),
            }
        };
        let mut best: Option<(u8, (f64, f64), f64, usize)> = None;
        for &j in candidates {
            let k = (vars[j].tier, key(j), x[j]);
            let better = match best {
                None => true,
                Some((bt, bs, bx, _)) => match k.0.cmp(&bt) {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    Ordering::Equal => match self.opts.branching {
                        Branching::FirstFractional => k.1 > bs,
                        _ => k.1 > bs || (k.1 == bs && k.2 > bx),
                    },
                },
            };
            if better {
                best = Some((k.0, k.1, k.2, j));
            }
        }
        best.map(|(_, _, _, j)| j)
    }

    /// Handles one solved node; returns children to enqueue.
    fn process(&mut self, node: Node, sol: QpSolution) -> Vec<Node> {
        match sol.status {
            QpStatus::Infeasible => {
                log::trace!("node {} depth {} infeasible", node.id, node.fixings.len());
                return Vec::new();
            }
            QpStatus::NumericalFailure => {
                log::warn!("relaxation failed numerically at node {}; subtree dropped", node.id);
                self.stats.numerical_failures += 1;
                self.dropped_bound = self.dropped_bound.min(node.bound);
                return Vec::new();
            }
            QpStatus::Optimal => {}
        }
        if node.bound.is_finite() {
            self.stats.max_bound_drop = self.stats.max_bound_drop.max(node.bound - sol.objective);
        }
        let bound = sol.objective.max(node.bound);
        if bound >= self.cutoff() {
            self.pruned_bound = self.pruned_bound.min(bound);
            return Vec::new();
        }
        let (lo, hi) = self.node_bounds(&node);
        let tol = self.opts.feasibility_tolerance;
        let completed = self.model.complete(&sol.values, &lo, &hi, tol);
        if completed.is_feasible() {
            let value = self.model.objective_value(&completed.point);
            self.offer(completed.point.clone(), value);
            if value <= bound + gap_allowance(value, self.opts) {
                self.pruned_bound = self.pruned_bound.min(bound);
                return Vec::new();
            }
        }
        log::trace!(
            "node {} depth {} value {:.4} status {:?}",
            node.id,
            node.fixings.len(),
            sol.objective,
            sol.status
        );
        let Some(j) = self.branch_variable(&sol.values, &completed, &lo, &hi) else {
            // Integral relaxation whose rounding still misses a row by more
            // than the tolerance: keep its bound but do not trust it.
            log::warn!("node {} is integral but fails row checks; subtree dropped", node.id);
            self.stats.numerical_failures += 1;
            self.dropped_bound = self.dropped_bound.min(bound);
            return Vec::new();
        };
        log::trace!("branch on {} = {:.4}", self.model.variables()[j].name, sol.values[j]);
        let mut children = Vec::with_capacity(2);
        for v in [1.0, 0.0] {
            let mut fixings = node.fixings.clone();
            fixings.push((j, v));
            children.push(Node {
                id: self.next_id,
                fixings,
                bound,
            });
            self.next_id += 1;
        }
        children
    }
}

/// Solves `model` to global optimality within the gap tolerances, or stops
/// at a node or time limit with the best incumbent found.
pub fn branch_and_bound(model: &MiqpModel, opts: &SolveOptions) -> MipSolution {
    let start = Instant::now();
    let mut search = Search {
        model,
        opts,
        lower: model.lower_bounds(),
        upper: model.upper_bounds(),
        binaries: model.binary_indices(),
        incumbent: None,
        dropped_bound: f64::INFINITY,
        pruned_bound: f64::INFINITY,
        stats: SearchStats::default(),
        next_id: 1,
    };
    let mut pool = Pool::new(opts.node_selection);
    pool.push(Node {
        id: 0,
        fixings: Vec::new(),
        bound: f64::NEG_INFINITY,
    });
    let mut limit: Option<String> = None;
    let mut root_message = None;
    // Best-bound search plunges: the children of the node just processed
    // are solved next, up child first, ahead of the pool order. Older
    // plunge siblings fall back into the pool.
    let mut plunge: Vec<Node> = Vec::new();
    while !plunge.is_empty() || !pool.is_empty() {
        if let Some(n) = opts.node_limit {
            if search.stats.nodes >= n {
                limit = Some(format!("node limit {n} reached"));
                break;
            }
        }
        if let Some(t) = opts.time_limit_s {
            if start.elapsed().as_secs_f64() >= t {
                limit = Some(format!("time limit {t} s reached"));
                break;
            }
        }
        let cutoff = search.cutoff();
        let mut room = opts.workers;
        if let Some(n) = opts.node_limit {
            room = room.min((n - search.stats.nodes) as usize);
        }
        let mut batch = Vec::with_capacity(room);
        while batch.len() < room {
            match plunge.pop() {
                Some(node) if node.bound >= cutoff => {
                    search.pruned_bound = search.pruned_bound.min(node.bound);
                }
                Some(node) => batch.push(node),
                None => break,
            }
        }
        while batch.len() < room {
            match pool.pop() {
                Some(node) if node.bound >= cutoff => {
                    search.pruned_bound = search.pruned_bound.min(node.bound);
                }
                Some(node) => batch.push(node),
                None => break,
            }
        }
        if batch.is_empty() {
            break;
        }
        let results = search.solve_batch(&batch);
        for (node, sol) in batch.into_iter().zip(results) {
            search.stats.nodes += 1;
            if node.id == 0 {
                search.stats.root_bound = Some(sol.objective);
                if sol.status != QpStatus::Optimal {
                    root_message = Some(format!("root relaxation: {:?}", sol.status));
                }
            }
            let children = search.process(node, sol).into_iter();
            match pool {
                // Up branch on top of the stack.
                Pool::Depth(_) => children.rev().for_each(|c| pool.push(c)),
                Pool::Best(_) => {
                    if children.len() > 0 {
                        plunge.drain(..).for_each(|c| pool.push(c));
                    }
                    children.rev().for_each(|c| plunge.push(c));
                }
            }
        }
    }
    plunge.into_iter().for_each(|c| pool.push(c));

    let open_bound = pool.min_bound();
    let Search {
        incumbent,
        dropped_bound,
        pruned_bound,
        mut stats,
        ..
    } = search;
    let mut bound = open_bound.min(dropped_bound).min(pruned_bound);
    let (status, values, objective, message) = match incumbent {
        Some((point, value)) => {
            bound = bound.min(value);
            let (values, objective) = polish(model, point, value, opts);
            let exhausted = limit.is_none() && dropped_bound == f64::INFINITY;
            let status = if exhausted { MipStatus::Optimal } else { MipStatus::FeasibleGap };
            let message = limit.clone().or_else(|| {
                (dropped_bound < f64::INFINITY).then(|| "subtrees dropped after numerical failures".to_string())
            });
            bound = bound.min(objective);
            (status, values, objective, message)
        }
        None => {
            let status = if limit.is_none() && dropped_bound == f64::INFINITY {
                MipStatus::Infeasible
            } else {
                MipStatus::LimitHit
            };
            let message = limit.or(root_message).or_else(|| Some("no integer-feasible point exists".into()));
            (status, Vec::new(), f64::INFINITY, message)
        }
    };
    stats.wall_time_s = start.elapsed().as_secs_f64();
    let gap = if objective.is_finite() {
        ((objective - bound) / objective.abs().max(1.0)).max(0.0)
    } else {
        f64::INFINITY
    };
    MipSolution {
        status,
        values,
        objective,
        bound,
        gap,
        nodes_explored: stats.nodes,
        wall_time_s: stats.wall_time_s,
        message,
        heuristic: false,
        stats,
    }
}

fn gap_allowance(value: f64, opts: &SolveOptions) -> f64 {
    opts.absolute_gap.max(opts.relative_gap * value.abs().max(1.0))
}

/// Re-solves with every binary fixed to clean up the continuous part.
fn polish(model: &MiqpModel, point: Vec<f64>, value: f64, opts: &SolveOptions) -> (Vec<f64>, f64) {
    let mut lo = model.lower_bounds();
    let mut hi = model.upper_bounds();
    for j in model.binary_indices() {
        lo[j] = point[j];
        hi[j] = point[j];
    }
    let sol = solve_qp_relaxation(model, &lo, &hi);
    if sol.is_optimal() && sol.objective <= value + gap_allowance(value, opts) {
        let v = model.violations(&sol.values);
        if v.max() <= opts.feasibility_tolerance {
            return (sol.values, sol.objective);
        }
    }
    (point, value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::miqp::Sense;

    /// `min sum (b_j - t_j)^2 + (x - 1)^2` with `x <= b_0 + b_1`.
    fn targets(t: &[f64]) -> MiqpModel {
        let mut m = MiqpModel::new("targets");
        let x = m.add_continuous("x", -5.0, 5.0);
        m.add_quadratic(x, x, 2.0);
        m.add_linear(x, -2.0);
        m.add_constant(1.0);
        let bs: Vec<usize> = t
            .iter()
            .enumerate()
            .map(|(j, &tj)| {
                let b = m.add_binary(format!("b{j}"), 0);
                m.add_quadratic(b, b, 2.0);
                m.add_linear(b, -2.0 * tj);
                m.add_constant(tj * tj);
                b
            })
            .collect();
        m.add_constraint("cap", vec![(x, 1.0), (bs[0], -1.0), (bs[1], -1.0)], Sense::Le, 0.0);
        m
    }

    fn exact() -> SolveOptions {
        SolveOptions {
            relative_gap: 1e-9,
            absolute_gap: 1e-9,
            ..Default::default()
        }
    }

    #[test]
    fn rounds_towards_targets() {
        let m = targets(&[0.2, 0.3, 0.9]);
        let sol = branch_and_bound(&m, &exact());
        assert_eq!(sol.status, MipStatus::Optimal);
        // b = (0, 1, 1), x = 1 against b = (0, 0, 1), x = 0.
        assert!((sol.objective - (0.04 + 0.49 + 0.01)).abs() < 1e-6, "{}", sol.objective);
        assert!(sol.gap <= 1e-6);
    }

    #[test]
    fn depth_first_agrees_with_best_bound() {
        let m = targets(&[0.45, 0.55, 0.5, 0.1]);
        let best = branch_and_bound(&m, &exact());
        let depth = branch_and_bound(
            &m,
            &SolveOptions {
                node_selection: NodeSelection::DepthFirst,
                branching: Branching::FirstFractional,
                ..exact()
            },
        );
        assert!((best.objective - depth.objective).abs() < 1e-6);
    }

    #[test]
    fn infeasible_model_is_reported() {
        let mut m = targets(&[0.5, 0.5]);
        m.add_constraint("both", vec![(1, -1.0), (2, -1.0)], Sense::Le, -2.5);
        let sol = branch_and_bound(&m, &exact());
        assert_eq!(sol.status, MipStatus::Infeasible);
        assert!(sol.values.is_empty());
    }

    #[test]
    fn node_limit_without_incumbent_is_a_limit_hit() {
        let m = targets(&[0.5, 0.5, 0.5]);
        let sol = branch_and_bound(
            &m,
            &SolveOptions {
                node_limit: Some(1),
                ..exact()
            },
        );
        assert_eq!(sol.nodes_explored, 1);
        assert!(matches!(sol.status, MipStatus::LimitHit | MipStatus::FeasibleGap));
        assert!(sol.message.unwrap().contains("node limit"));
    }
}
