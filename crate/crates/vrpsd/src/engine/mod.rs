//! Branch-and-cut driver.
//!
//! The master relaxes integrality and the exponential capacity family, and
//! replaces the recourse by one variable per customer. Each node runs a cut
//! loop: solve the relaxation; separate rounded-capacity inequalities (and
//! check the set cut of every inspected set); on fractional solutions add
//! component set/path cuts; on integer solutions add the most violated
//! subpath cuts; branch on a fractional edge when no cut fires. Nodes are
//! explored best-bound first. Instances certified monotone use path and set
//! cuts; others fall back to route cuts, which need no monotonicity.

pub mod exhaustive;
pub mod heuristic;
pub mod master;
pub mod separation;

use std::collections::{BTreeMap, BinaryHeap};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::bounds::{fleet_lb_vector_truncated, l3_detailed_truncated, BoundsError};
use crate::cuts::{make_capacity_cut, make_classic_cut, CutKind};
use crate::instance::StochasticInstance;
use crate::lp::{LpError, LpStatus, VarId};
use crate::monotonicity::certify_instance;
use crate::recourse::{
    expected_recourse_route_truncated, Path, RecourseError, RoutePlan,
};

pub use heuristic::{heuristic_incumbent, Incumbent};
pub use master::{MasterModel, MasterSolution};
pub use separation::{
    analyze_fractional_components, fractional_component_cuts, on_integer_solution,
    s_cuts_for_inspected_sets, separate_rounded_capacity, VIOLATION_TOL,
};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("LP oracle failed at node {node}: {source}")]
    Lp { node: u64, source: LpError },
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Recourse(#[from] RecourseError),
    #[error("internal inconsistency: {0}")]
    Internal(String),
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub time_limit: Duration,
    /// Truncation threshold for every recourse and bound evaluation inside
    /// the solver. Tight by default so bounds, cuts and incumbents agree to
    /// solver tolerances.
    pub truncation: f64,
    pub enable_p_cuts: bool,
    pub enable_s_cuts: bool,
    /// Forces route-cut mode even on monotone-certified instances.
    pub force_r_cuts: bool,
    pub enable_classic_cuts: bool,
    pub max_capacity_cuts: usize,
    pub node_limit: Option<usize>,
    /// Per-node trace on stderr: node id, LP value, cuts added by kind.
    pub trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            time_limit: Duration::from_secs(3600),
            truncation: 1e-12,
            enable_p_cuts: true,
            enable_s_cuts: true,
            force_r_cuts: false,
            enable_classic_cuts: false,
            max_capacity_cuts: 50,
            node_limit: None,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SolveStatus {
    Optimal,
    TimeLimit,
    Infeasible,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SolverReport {
    pub instance: String,
    pub status: SolveStatus,
    /// Incumbent objective (travel + expected recourse), if any was found.
    pub objective: Option<f64>,
    pub travel_cost: Option<f64>,
    pub recourse_cost: Option<f64>,
    pub routes: Vec<Vec<usize>>,
    pub fleet_size: Option<usize>,
    pub best_bound: f64,
    /// (objective - bound) / objective * 100, when an incumbent exists with
    /// positive objective.
    pub gap_percent: Option<f64>,
    pub nodes: usize,
    pub cuts: BTreeMap<String, usize>,
    pub wall_time_seconds: f64,
    /// Sum of the recourse variables at the final optimal relaxation.
    pub theta_sum: Option<f64>,
    pub monotone_mode: bool,
    pub warnings: Vec<String>,
}

/// Per-fleet-size recourse bounds used by the fleet lower-bound row; sizes
/// whose set-covering relaxation is infeasible fall back to zero.
pub fn fleet_bounds_or_zero(
    instance: &StochasticInstance,
    truncation: f64,
    monotone: bool,
) -> BTreeMap<usize, f64> {
    let mut out = BTreeMap::new();
    if !monotone {
        for &m in &instance.fleet_sizes {
            out.insert(m, 0.0);
        }
        return out;
    }
    match fleet_lb_vector_truncated(instance, truncation) {
        Ok(v) => v,
        Err(_) => {
            let all: Vec<usize> = (1..=instance.num_customers()).collect();
            for &m in &instance.fleet_sizes {
                let v = l3_detailed_truncated(&all, m, instance, truncation)
                    .map(|o| o.bound)
                    .unwrap_or(0.0);
                out.insert(m, v);
            }
            out
        }
    }
}

struct Node {
    bound: f64,
    fixings: Vec<(VarId, f64, f64)>,
}

struct NodeOrd(f64, u64);
impl PartialEq for NodeOrd {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0).is_eq() && self.1 == other.1
    }
}
impl Eq for NodeOrd {}
impl PartialOrd for NodeOrd {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for NodeOrd {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Reversed: BinaryHeap pops the smallest bound first.
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Solves the instance to proven optimality (or the time limit) by the
/// disaggregated branch-and-cut.
pub fn branch_and_cut(
    instance: &StochasticInstance,
    config: &SolverConfig,
) -> Result<SolverReport, EngineError> {
    let start = Instant::now();
    let monotone = !config.force_r_cuts && certify_instance(instance).is_certified();
    let fleet_bounds = fleet_bounds_or_zero(instance, config.truncation, monotone);
    let mut master = MasterModel::build(instance, &fleet_bounds);

    // Root bounds of every branchable variable, to restore between nodes.
    let mut root_bounds: BTreeMap<VarId, (f64, f64)> = BTreeMap::new();
    for &v in &master.edge_vars {
        root_bounds.insert(v, crate::lp::LpBackend::var_bounds(&master.lp, v));
    }
    for &v in master.fleet_vars.values() {
        root_bounds.insert(v, crate::lp::LpBackend::var_bounds(&master.lp, v));
    }

    let mut incumbent = heuristic_incumbent(instance, config.truncation);
    let mut ub = incumbent.as_ref().map_or(f64::INFINITY, |i| i.objective());

    let mut set_bound_cache: BTreeMap<Vec<usize>, Option<f64>> = BTreeMap::new();
    let mut recourse_cache: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    let mut l1_cache: BTreeMap<Vec<usize>, f64> = BTreeMap::new();

    let mut heap: BinaryHeap<NodeOrd> = BinaryHeap::new();
    let mut nodes_store: BTreeMap<u64, Node> = BTreeMap::new();
    let mut next_id = 0u64;
    let spawn = |heap: &mut BinaryHeap<NodeOrd>,
                     store: &mut BTreeMap<u64, Node>,
                     next_id: &mut u64,
                     bound: f64,
                     fixings: Vec<(VarId, f64, f64)>| {
        let id = *next_id;
        *next_id += 1;
        heap.push(NodeOrd(bound, id));
        store.insert(id, Node { bound, fixings });
    };
    spawn(&mut heap, &mut nodes_store, &mut next_id, f64::NEG_INFINITY, Vec::new());

    let mut applied: Vec<VarId> = Vec::new();
    let mut nodes_explored = 0usize;
    let mut timed_out = false;

    let prune_threshold = |ub: f64| ub - 1e-9 * (1.0 + ub.abs());

    'tree: while let Some(NodeOrd(bound, id)) = heap.pop() {
        let node = nodes_store.remove(&id).expect("heap and store in sync");
        if bound >= prune_threshold(ub) {
            continue; // bound-dominated
        }
        if let Some(limit) = config.node_limit {
            if nodes_explored >= limit {
                timed_out = true;
                nodes_store.insert(id, node);
                heap.push(NodeOrd(bound, id));
                break 'tree;
            }
        }
        nodes_explored += 1;

        // Install this node's bounds.
        for v in applied.drain(..) {
            let (lb, ubv) = root_bounds[&v];
            crate::lp::LpBackend::set_var_bounds(&mut master.lp, v, lb, ubv);
        }
        for &(v, lb, ubv) in &node.fixings {
            crate::lp::LpBackend::set_var_bounds(&mut master.lp, v, lb, ubv);
            applied.push(v);
        }

        let mut last_lp = f64::NEG_INFINITY;
        'cutloop: loop {
            if start.elapsed() >= config.time_limit {
                timed_out = true;
                // Keep the node open so the final bound stays valid.
                let reopen_bound = if last_lp.is_finite() { last_lp } else { node.bound };
                spawn(&mut heap, &mut nodes_store, &mut next_id, reopen_bound, node.fixings.clone());
                break 'tree;
            }
            match master.solve() {
                Ok(LpStatus::Optimal) => {}
                Ok(LpStatus::Infeasible) => break 'cutloop,
                Err(source) => return Err(EngineError::Lp { node: id, source }),
            }
            let sol = master.snapshot();
            debug_assert!(
                sol.objective >= last_lp - 1e-5,
                "cut loop lowered the relaxation bound: {last_lp} -> {}",
                sol.objective
            );
            last_lp = sol.objective;
            if sol.objective >= prune_threshold(ub) {
                break 'cutloop;
            }

            // Capacity separation plus set cuts on every inspected set.
            let (cap_sets, components) =
                separate_rounded_capacity(&sol, instance, config.max_capacity_cuts);
            let mut added = 0usize;
            for set in &cap_sets {
                if master.add_cut(&make_capacity_cut(set, instance)) {
                    added += 1;
                }
            }
            if config.enable_s_cuts {
                let mut inspected = cap_sets.clone();
                inspected.extend(components.iter().cloned());
                for cut in s_cuts_for_inspected_sets(
                    &inspected,
                    &sol,
                    instance,
                    config.truncation,
                    monotone,
                    &mut set_bound_cache,
                ) {
                    if master.add_cut(&cut) {
                        added += 1;
                    }
                }
            }
            if added > 0 {
                trace(config, id, sol.objective, "capacity round", added);
                continue 'cutloop;
            }

            if sol.is_integer() {
                let routes = master.extract_routes(&sol).ok_or_else(|| {
                    EngineError::Internal(
                        "integer solution without capacity violation failed route extraction"
                            .into(),
                    )
                })?;
                // Incumbent update with the exact recourse of the routes.
                let plans: Vec<RoutePlan> = routes
                    .iter()
                    .map(|r| RoutePlan::new(Path::new(r.clone()), instance))
                    .collect();
                let travel: f64 = plans.iter().map(|p| p.travel_cost(instance)).sum();
                let mut recourse = 0.0;
                for p in &plans {
                    recourse += expected_recourse_route_truncated(p, instance, config.truncation)?;
                }
                let value = travel + recourse;
                if value < ub - 1e-9 {
                    ub = value;
                    incumbent = Some(Incumbent { routes: routes.clone(), travel, recourse });
                }

                let mut cuts7 = on_integer_solution(
                    &routes,
                    &sol,
                    instance,
                    config.truncation,
                    monotone,
                    &mut recourse_cache,
                    &mut l1_cache,
                );
                cuts7.retain(|c| match c.kind {
                    CutKind::PCut => config.enable_p_cuts,
                    CutKind::SCut => config.enable_s_cuts,
                    _ => true,
                });
                if config.enable_classic_cuts {
                    let support: Vec<(usize, usize)> = routes
                        .iter()
                        .flat_map(|r| r.windows(2).map(|w| (w[0].min(w[1]), w[0].max(w[1]))))
                        .collect();
                    let classic = make_classic_cut(
                        &support,
                        instance.num_customers(),
                        recourse,
                        0.0,
                    );
                    if classic.violation(&sol) > VIOLATION_TOL {
                        cuts7.push(classic);
                    }
                }
                let mut added7 = 0usize;
                for cut in &cuts7 {
                    if master.add_cut(cut) {
                        added7 += 1;
                    }
                }
                if added7 > 0 {
                    trace(config, id, sol.objective, "integer round", added7);
                    continue 'cutloop;
                }
                // Theta already carries the full recourse: the node is done.
                break 'cutloop;
            }

            // Fractional: component set/path cuts, then branch.
            if monotone && (config.enable_p_cuts || config.enable_s_cuts) {
                let mut frac_cuts = fractional_component_cuts(
                    &sol,
                    instance,
                    config.truncation,
                    monotone,
                    &mut set_bound_cache,
                );
                frac_cuts.retain(|c| match c.kind {
                    CutKind::PCut => config.enable_p_cuts,
                    CutKind::SCut => config.enable_s_cuts,
                    _ => true,
                });
                let mut added5 = 0usize;
                for cut in &frac_cuts {
                    if master.add_cut(cut) {
                        added5 += 1;
                    }
                }
                if added5 > 0 {
                    trace(config, id, sol.objective, "fractional round", added5);
                    continue 'cutloop;
                }
            }

            // Branch: fractional edge closest to one half (ties: larger
            // travel cost, then lexicographic), else a fractional fleet var.
            let branch = select_branch_edge(&master, &sol, instance)
                .or_else(|| select_branch_fleet(&master, &sol));
            let Some((var, frac)) = branch else {
                return Err(EngineError::Internal(
                    "fractional solution with no fractional variable".into(),
                ));
            };
            // Split the variable's CURRENT domain at this node; a depot edge
            // can be branched twice, and the second split must not loosen
            // the first.
            let (cur_lb, cur_ub) = crate::lp::LpBackend::var_bounds(&master.lp, var);
            let floor = frac.floor();
            let mut down = node.fixings.clone();
            down.push((var, cur_lb, floor));
            let mut up = node.fixings.clone();
            up.push((var, floor + 1.0, cur_ub));
            spawn(&mut heap, &mut nodes_store, &mut next_id, sol.objective, down);
            spawn(&mut heap, &mut nodes_store, &mut next_id, sol.objective, up);
            trace(config, id, sol.objective, "branch", 2);
            break 'cutloop;
        }
    }

    // Final bookkeeping.
    let open_lb = heap
        .iter()
        .map(|NodeOrd(b, _)| *b)
        .fold(f64::INFINITY, f64::min);
    let status = if timed_out {
        SolveStatus::TimeLimit
    } else if incumbent.is_none() {
        SolveStatus::Infeasible
    } else {
        SolveStatus::Optimal
    };
    let best_bound = match status {
        SolveStatus::Optimal => ub,
        _ => {
            let mut lb = open_lb;
            if !lb.is_finite() {
                lb = 0.0; // costs are non-negative
            }
            lb.max(0.0).min(ub)
        }
    };
    let gap_percent = incumbent.as_ref().and_then(|i| {
        let obj = i.objective();
        if obj.abs() < 1e-12 {
            None
        } else {
            Some(((obj - best_bound) / obj * 100.0).max(0.0))
        }
    });

    // At optimality, re-derive the binding value of the recourse variables by
    // fixing the incumbent's first stage into the master and running the
    // integer cut loop to convergence: the resulting sum of theta is the
    // final relaxation's recourse estimate of the optimal plan.
    let theta_sum = match (&status, &incumbent) {
        (SolveStatus::Optimal, Some(inc)) => Some(bind_theta_at_incumbent(
            &mut master,
            &mut applied,
            &root_bounds,
            inc,
            instance,
            config,
            monotone,
            &mut recourse_cache,
            &mut l1_cache,
        )?),
        _ => None,
    };

    let mut warnings = instance.warnings();
    if !monotone {
        warnings.push(
            "instance not certified monotone: path and set cuts disabled, route cuts active"
                .into(),
        );
    }

    Ok(SolverReport {
        instance: instance.name.clone(),
        status,
        objective: incumbent.as_ref().map(|i| i.objective()),
        travel_cost: incumbent.as_ref().map(|i| i.travel),
        recourse_cost: incumbent.as_ref().map(|i| i.recourse),
        routes: incumbent.as_ref().map(|i| i.routes.clone()).unwrap_or_default(),
        fleet_size: incumbent.as_ref().map(|i| i.routes.len()),
        best_bound,
        gap_percent,
        nodes: nodes_explored,
        cuts: master
            .cuts_by_kind
            .iter()
            .map(|(k, &v)| (format!("{k:?}"), v))
            .collect(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        theta_sum,
        monotone_mode: monotone,
        warnings,
    })
}

fn trace(config: &SolverConfig, node: u64, lp: f64, stage: &str, added: usize) {
    if config.trace {
        eprintln!("node {node}: lp {lp:.6} {stage} (+{added} cuts)");
    }
}

/// Fixes the incumbent's first stage in the master, runs the integer cut
/// loop until no subpath cut is violated, and returns the sum of the
/// recourse variables at the final relaxation.
#[allow(clippy::too_many_arguments)]
fn bind_theta_at_incumbent(
    master: &mut MasterModel,
    applied: &mut Vec<VarId>,
    root_bounds: &BTreeMap<VarId, (f64, f64)>,
    incumbent: &Incumbent,
    instance: &StochasticInstance,
    config: &SolverConfig,
    monotone: bool,
    recourse_cache: &mut BTreeMap<Vec<usize>, f64>,
    l1_cache: &mut BTreeMap<Vec<usize>, f64>,
) -> Result<f64, EngineError> {
    use crate::lp::LpBackend as _;
    for v in applied.drain(..) {
        let (lb, ub) = root_bounds[&v];
        master.lp.set_var_bounds(v, lb, ub);
    }
    // Edge values of the incumbent.
    let mut values: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for route in &incumbent.routes {
        let mut bump = |a: usize, b: usize| {
            let key = (a.min(b), a.max(b));
            *values.entry(key).or_insert(0.0) += 1.0;
        };
        bump(0, route[0]);
        for w in route.windows(2) {
            bump(w[0], w[1]);
        }
        bump(0, *route.last().unwrap());
    }
    for (k, &(i, j)) in master.edges.clone().iter().enumerate() {
        let v = values.get(&(i, j)).copied().unwrap_or(0.0);
        let var = master.edge_vars[k];
        master.lp.set_var_bounds(var, v, v);
        applied.push(var);
    }
    let m_used = incumbent.routes.len();
    for (&m, &var) in master.fleet_vars.clone().iter() {
        let v = if m == m_used { 1.0 } else { 0.0 };
        master.lp.set_var_bounds(var, v, v);
        applied.push(var);
    }
    for _round in 0..10_000 {
        match master.solve() {
            Ok(LpStatus::Optimal) => {}
            Ok(LpStatus::Infeasible) => {
                return Err(EngineError::Internal(
                    "incumbent infeasible in its own master".into(),
                ))
            }
            Err(source) => return Err(EngineError::Lp { node: u64::MAX, source }),
        }
        let sol = master.snapshot();
        let cuts = on_integer_solution(
            &incumbent.routes,
            &sol,
            instance,
            config.truncation,
            monotone,
            recourse_cache,
            l1_cache,
        );
        let mut added = 0;
        for cut in &cuts {
            let keep = match cut.kind {
                CutKind::PCut => config.enable_p_cuts,
                CutKind::SCut => config.enable_s_cuts,
                _ => true,
            };
            if keep && master.add_cut(cut) {
                added += 1;
            }
        }
        if added == 0 {
            if config.trace {
                eprintln!("cut pool at the incumbent:");
                for line in master.dump_cut_pool(&sol) {
                    eprintln!("  {line}");
                }
            }
            return Ok(sol.theta_sum());
        }
    }
    Err(EngineError::Internal("theta binding did not converge".into()))
}

fn select_branch_edge(
    master: &MasterModel,
    sol: &MasterSolution,
    instance: &StochasticInstance,
) -> Option<(VarId, f64)> {
    let mut best: Option<(f64, f64, (usize, usize), VarId, f64)> = None;
    for (k, &(i, j)) in master.edges.iter().enumerate() {
        let v = sol.edge_values[k];
        let frac = v - v.floor();
        if frac <= master::INT_TOL || frac >= 1.0 - master::INT_TOL {
            continue;
        }
        let dist = (frac - 0.5).abs();
        let cost = instance.cost(i, j);
        let better = match best {
            None => true,
            Some((bd, bc, be, _, _)) => {
                dist < bd - 1e-12
                    || (dist < bd + 1e-12 && cost > bc + 1e-12)
                    || (dist < bd + 1e-12 && (cost - bc).abs() <= 1e-12 && (i, j) < be)
            }
        };
        if better {
            best = Some((dist, cost, (i, j), master.edge_vars[k], v));
        }
    }
    best.map(|(_, _, _, var, v)| (var, v))
}

fn select_branch_fleet(master: &MasterModel, sol: &MasterSolution) -> Option<(VarId, f64)> {
    let mut best: Option<(f64, usize, VarId, f64)> = None;
    for (&m, &var) in &master.fleet_vars {
        let v = sol.fleet_values[&m];
        let frac = v - v.floor();
        if frac <= master::INT_TOL || frac >= 1.0 - master::INT_TOL {
            continue;
        }
        let dist = (frac - 0.5).abs();
        let better = match best {
            None => true,
            Some((bd, bm, _, _)) => dist < bd - 1e-12 || (dist < bd + 1e-12 && m < bm),
        };
        if better {
            best = Some((dist, m, var, v));
        }
    }
    best.map(|(_, _, var, v)| (var, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_jabali, CustomerNode, DistanceRounding};
    use crate::recourse::expected_recourse_path_truncated;
    use crate::stochastic::{DemandDistribution, DiscreteTable};
    use std::collections::BTreeSet;

    fn poisson_instance(
        lambdas: &[u32],
        coords: &[(f64, f64)],
        q: u32,
        fleet: BTreeSet<usize>,
    ) -> StochasticInstance {
        let nodes = lambdas
            .iter()
            .zip(coords)
            .enumerate()
            .map(|(i, (&l, &(x, y)))| CustomerNode {
                id: i + 1,
                x,
                y,
                demand: DemandDistribution::Poisson { lambda: l as f64 },
            })
            .collect();
        StochasticInstance::new(
            "engine-test".into(),
            "test".into(),
            (0.0, 0.0),
            nodes,
            q,
            fleet,
            DistanceRounding::Exact,
            None,
        )
        .unwrap()
    }

    #[test]
    fn single_customer_instance_is_trivial() {
        let inst = poisson_instance(&[5], &[(3.0, 4.0)], 8, BTreeSet::from([1]));
        let report = branch_and_cut(&inst, &SolverConfig::default()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        let singleton =
            expected_recourse_path_truncated(&Path::new(vec![1]), &inst, 1e-12).unwrap();
        let expect = 2.0 * 5.0 + singleton;
        assert!((report.objective.unwrap() - expect).abs() < 1e-6);
        assert_eq!(report.routes, vec![vec![1]]);
    }

    #[test]
    fn matches_exhaustive_on_small_poisson_instances() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for trial in 0..6 {
            let n = rng.gen_range(4..=7);
            let q = rng.gen_range(10..=16u32);
            let lambdas: Vec<u32> = (0..n).map(|_| rng.gen_range(1..=5)).collect();
            let coords: Vec<(f64, f64)> =
                (0..n).map(|_| (rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0))).collect();
            let total: u32 = lambdas.iter().sum();
            let min_m = (total as f64 / q as f64).ceil() as usize;
            let inst =
                poisson_instance(&lambdas, &coords, q, (min_m.max(1)..=n).collect());
            let (oracle, _) = exhaustive::solve_exhaustive(&inst, 1e-12).unwrap();
            let report = branch_and_cut(&inst, &SolverConfig::default()).unwrap();
            assert_eq!(report.status, SolveStatus::Optimal, "trial {trial}");
            let got = report.objective.unwrap();
            assert!(
                (got - oracle).abs() <= 1e-6,
                "trial {trial}: engine {got} vs oracle {oracle}"
            );
            // Theta binding at the optimum.
            assert!((report.theta_sum.unwrap() - report.recourse_cost.unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn route_cut_mode_solves_non_monotone_instances() {
        // Demands as in the spiky discrete counterexample: not monotone.
        let spiky = DiscreteTable::new(vec![(6, 0.9), (16, 0.1)]).unwrap();
        let nodes = vec![
            CustomerNode {
                id: 1,
                x: 2.0,
                y: 0.0,
                demand: DemandDistribution::FiniteDiscrete(DiscreteTable::point(5)),
            },
            CustomerNode {
                id: 2,
                x: 0.0,
                y: 3.0,
                demand: DemandDistribution::FiniteDiscrete(spiky.clone()),
            },
            CustomerNode {
                id: 3,
                x: -4.0,
                y: 1.0,
                demand: DemandDistribution::FiniteDiscrete(spiky),
            },
        ];
        let inst = StochasticInstance::new(
            "nonmono".into(),
            "test".into(),
            (0.0, 0.0),
            nodes,
            20,
            BTreeSet::from([1, 2, 3]),
            DistanceRounding::Exact,
            None,
        )
        .unwrap();
        let report = branch_and_cut(&inst, &SolverConfig::default()).unwrap();
        assert!(!report.monotone_mode);
        assert_eq!(report.status, SolveStatus::Optimal);
        let (oracle, _) = exhaustive::solve_exhaustive(&inst, 1e-12).unwrap();
        assert!(
            (report.objective.unwrap() - oracle).abs() <= 1e-6,
            "engine {} vs oracle {oracle}",
            report.objective.unwrap()
        );
    }

    #[test]
    fn other_certified_families_solve_exactly() {
        // Binomial, Erlang and negative binomial demands certify by family
        // rule; the two-stage and set-covering bounds do not apply to them,
        // so this also exercises the zero fleet-bound fallback.
        let cases: Vec<(&str, Vec<DemandDistribution>)> = vec![
            (
                "binomial",
                (0..5).map(|k| DemandDistribution::Binomial { trials: 4 + k, success: 0.5 }).collect(),
            ),
            (
                "erlang",
                (0..5).map(|k| DemandDistribution::Erlang { shape: 2 + k, rate: 1.0 }).collect(),
            ),
            (
                "negative binomial",
                (0..5)
                    .map(|k| DemandDistribution::NegativeBinomial { successes: 2 + k, success: 0.6 })
                    .collect(),
            ),
        ];
        for (family, demands) in cases {
            let n = demands.len();
            let nodes = demands
                .into_iter()
                .enumerate()
                .map(|(i, demand)| CustomerNode {
                    id: i + 1,
                    x: (i as f64 * 5.0) - 10.0,
                    y: ((i * 7) % 5) as f64,
                    demand,
                })
                .collect();
            let inst = StochasticInstance::new(
                family.into(),
                "test".into(),
                (0.0, 0.0),
                nodes,
                14,
                (2..=n).collect(),
                DistanceRounding::Exact,
                None,
            )
            .unwrap();
            assert!(certify_instance(&inst).is_certified(), "{family} should certify");
            let report = branch_and_cut(&inst, &SolverConfig::default()).unwrap();
            assert_eq!(report.status, SolveStatus::Optimal, "{family}");
            let (oracle, _) = exhaustive::solve_exhaustive(&inst, 1e-12).unwrap();
            assert!(
                (report.objective.unwrap() - oracle).abs() <= 1e-6,
                "{family}: engine {} vs oracle {oracle}",
                report.objective.unwrap()
            );
        }
    }

    #[test]
    fn cut_modes_agree_on_the_optimum() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(71);
        for _ in 0..3 {
            let n = rng.gen_range(5..=7);
            let q = rng.gen_range(10..=14u32);
            let lambdas: Vec<u32> = (0..n).map(|_| rng.gen_range(1..=5)).collect();
            let coords: Vec<(f64, f64)> =
                (0..n).map(|_| (rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0))).collect();
            let total: u32 = lambdas.iter().sum();
            let min_m = total.div_ceil(q) as usize;
            let inst = poisson_instance(&lambdas, &coords, q, (min_m.max(1)..=n).collect());
            let (oracle, _) = exhaustive::solve_exhaustive(&inst, 1e-12).unwrap();
            for config in [
                SolverConfig::default(),
                SolverConfig { force_r_cuts: true, ..Default::default() },
                SolverConfig { enable_classic_cuts: true, ..Default::default() },
                SolverConfig { enable_s_cuts: false, ..Default::default() },
            ] {
                let report = branch_and_cut(&inst, &config).unwrap();
                assert_eq!(report.status, SolveStatus::Optimal);
                assert!(
                    (report.objective.unwrap() - oracle).abs() <= 1e-6,
                    "mode {config:?}: {} vs oracle {oracle}",
                    report.objective.unwrap()
                );
            }
        }
    }

    #[test]
    fn solver_is_deterministic() {
        let inst = generate_jabali(12, 2, 0.9, 1.0, 77).unwrap();
        let a = branch_and_cut(&inst, &SolverConfig::default()).unwrap();
        let b = branch_and_cut(&inst, &SolverConfig::default()).unwrap();
        assert_eq!(a.routes, b.routes);
        assert_eq!(a.nodes, b.nodes);
        assert_eq!(a.objective, b.objective);
        assert_eq!(a.cuts, b.cuts);
    }

    #[test]
    fn zero_time_limit_reports_heuristic_incumbent() {
        let inst = generate_jabali(10, 2, 0.9, 1.0, 21).unwrap();
        let config = SolverConfig { time_limit: Duration::ZERO, ..Default::default() };
        let report = branch_and_cut(&inst, &config).unwrap();
        assert_eq!(report.status, SolveStatus::TimeLimit);
        assert!(report.objective.is_some());
        assert!(report.best_bound <= report.objective.unwrap() + 1e-9);
        assert!(report.gap_percent.is_some());
    }

    #[test]
    fn generated_instance_solves_and_binds_theta() {
        let inst = generate_jabali(10, 2, 0.9, 1.0, 33).unwrap();
        let report = branch_and_cut(&inst, &SolverConfig::default()).unwrap();
        assert_eq!(report.status, SolveStatus::Optimal);
        assert!(report.monotone_mode);
        assert_eq!(report.fleet_size, Some(2));
        assert!((report.theta_sum.unwrap() - report.recourse_cost.unwrap()).abs() < 1e-6);
        // Incumbent routes are load-feasible.
        for r in &report.routes {
            let load: f64 = r.iter().map(|&c| inst.mean_demand(c)).sum();
            assert!(load <= inst.capacity as f64 + 1e-9);
        }
    }
}
