//! Cut families over the master model's variables.
//!
//! All cuts are linear inequalities over edge variables x_{ij} (depot edges
//! may take value 2), per-customer recourse variables theta_i and fleet
//! selectors z_m:
//!
//! * path cuts — theta(N(r)) >= Q(r) (x(p) - |p| + 1) over the path's own
//!   edges; valid under the monotonicity property;
//! * set cuts — theta(S) >= L(S) (x(S) - |S| + ceil(mu(S)/Q) + 1) with a
//!   partition-valid bound L(S);
//! * route cuts — like path cuts but anchored with the depot edges and
//!   doubled interior coefficients, valid without monotonicity;
//! * classic cuts — the single-solution optimality cut, anchored on the
//!   customer-customer edge support (depot edges are implied by the degree
//!   rows, which keeps the cut valid with 0/1/2 depot values);
//! * fleet bound — theta(N) >= sum_m L_m z_m;
//! * capacity cuts — x(E(S)) <= |S| - ceil(mu(S)/Q).

use thiserror::Error;

use crate::instance::{ceil_ratio, StochasticInstance};
use crate::recourse::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CutKind {
    PCut,
    SCut,
    RCut,
    Classic,
    FleetLb,
    Capacity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutSense {
    Ge,
    Le,
}

/// Where a cut came from, for debugging dumps.
#[derive(Debug, Clone, PartialEq)]
pub enum CutProvenance {
    Path(Vec<usize>),
    Set(Vec<usize>),
    Route(Vec<usize>),
    Solution,
    Fleet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearCut {
    pub kind: CutKind,
    /// Unordered edge endpoints (lower id first; 0 is the depot).
    pub edge_coeffs: Vec<((usize, usize), f64)>,
    pub theta_coeffs: Vec<(usize, f64)>,
    pub fleet_coeffs: Vec<(usize, f64)>,
    pub sense: CutSense,
    pub rhs: f64,
    pub provenance: CutProvenance,
}

#[derive(Debug, Error)]
pub enum CutError {
    #[error("path cuts need the monotonicity property; use route cuts on this instance")]
    MonotonicityRequired,
    #[error("cut payload is empty")]
    EmptyPayload,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Values of the master variables at some (fractional or integer) point.
pub trait SolutionValues {
    fn edge_value(&self, i: usize, j: usize) -> f64;
    fn theta_value(&self, customer: usize) -> f64;
    fn fleet_value(&self, m: usize) -> f64;
}

impl LinearCut {
    /// RHS minus LHS for >= cuts, LHS minus RHS for <= cuts; positive means
    /// violated.
    pub fn violation<S: SolutionValues>(&self, sol: &S) -> f64 {
        let mut lhs = 0.0;
        for &((i, j), a) in &self.edge_coeffs {
            lhs += a * sol.edge_value(i, j);
        }
        for &(c, a) in &self.theta_coeffs {
            lhs += a * sol.theta_value(c);
        }
        for &(m, a) in &self.fleet_coeffs {
            lhs += a * sol.fleet_value(m);
        }
        match self.sense {
            CutSense::Ge => self.rhs - lhs,
            CutSense::Le => lhs - self.rhs,
        }
    }

    /// Canonical identity for duplicate suppression: kind plus a payload key
    /// that ignores path orientation.
    pub fn dedup_key(&self) -> (CutKind, Vec<usize>) {
        let key = match &self.provenance {
            CutProvenance::Path(p) | CutProvenance::Route(p) => {
                let mut fwd = p.clone();
                let mut rev = p.clone();
                rev.reverse();
                if rev < fwd {
                    fwd = rev;
                }
                fwd
            }
            CutProvenance::Set(s) => {
                let mut s = s.clone();
                s.sort_unstable();
                s
            }
            CutProvenance::Solution => {
                let mut flat: Vec<usize> = self
                    .edge_coeffs
                    .iter()
                    .flat_map(|&((i, j), a)| {
                        // Sign distinguishes support from off-support edges.
                        let tag = if a > 0.0 { 0 } else { 1 };
                        [i, j, tag]
                    })
                    .collect();
                flat.sort_unstable();
                flat
            }
            CutProvenance::Fleet => Vec::new(),
        };
        (self.kind, key)
    }
}

/// Path cut: theta(N(r)) >= recourse * (x(p) - |p| + 1). A single-customer
/// path reduces to theta_i >= recourse. Valid only under the monotonicity
/// property, hence the certificate gate.
pub fn make_p_cut(
    path: &Path,
    recourse: f64,
    instance_monotone: bool,
) -> Result<LinearCut, CutError> {
    if !instance_monotone {
        return Err(CutError::MonotonicityRequired);
    }
    if path.is_empty() {
        return Err(CutError::EmptyPayload);
    }
    let customers = path.customers();
    let edges: Vec<((usize, usize), f64)> = customers
        .windows(2)
        .map(|w| (edge_key(w[0], w[1]), -recourse))
        .collect();
    let num_edges = edges.len() as f64;
    Ok(LinearCut {
        kind: CutKind::PCut,
        edge_coeffs: edges,
        theta_coeffs: customers.iter().map(|&c| (c, 1.0)).collect(),
        fleet_coeffs: Vec::new(),
        sense: CutSense::Ge,
        rhs: recourse * (1.0 - num_edges),
        provenance: CutProvenance::Path(customers.to_vec()),
    })
}

/// Set cut: theta(S) >= bound * (x(E(S)) - |S| + ceil(mu(S)/Q) + 1).
pub fn make_s_cut(
    set: &[usize],
    bound: f64,
    instance: &StochasticInstance,
    instance_monotone: bool,
) -> Result<LinearCut, CutError> {
    if !instance_monotone {
        return Err(CutError::MonotonicityRequired);
    }
    if set.is_empty() {
        return Err(CutError::EmptyPayload);
    }
    let mut sorted = set.to_vec();
    sorted.sort_unstable();
    let total: f64 = sorted.iter().map(|&c| instance.mean_demand(c)).sum();
    let k = ceil_ratio(total, instance.capacity) as f64;
    let mut edges = Vec::new();
    for (ai, &a) in sorted.iter().enumerate() {
        for &b in &sorted[ai + 1..] {
            edges.push((edge_key(a, b), -bound));
        }
    }
    Ok(LinearCut {
        kind: CutKind::SCut,
        edge_coeffs: edges,
        theta_coeffs: sorted.iter().map(|&c| (c, 1.0)).collect(),
        fleet_coeffs: Vec::new(),
        sense: CutSense::Ge,
        rhs: bound * (k + 1.0 - sorted.len() as f64),
        provenance: CutProvenance::Set(sorted),
    })
}

/// Route cut: valid without monotonicity. Interior edges weigh double and
/// the depot edges anchor the route, so the cut only activates when exactly
/// this route is driven.
///
/// Short routes need their own anchors because depot edges can take value 2:
/// a single-customer route uses theta_i >= recourse * (x_{0i} - 1), and a
/// two-customer route weighs its only interior edge by three (with the
/// doubled coefficient, splitting (0,a,b,0) into two singleton routes would
/// keep the activation expression at its maximum).
pub fn make_r_cut(route_path: &Path, recourse: f64) -> Result<LinearCut, CutError> {
    let customers = route_path.customers();
    if customers.is_empty() {
        return Err(CutError::EmptyPayload);
    }
    let t = customers.len() as f64;
    let mut edges: Vec<((usize, usize), f64)> = Vec::new();
    match customers {
        [single] => {
            edges.push((edge_key(0, *single), -recourse));
            return Ok(LinearCut {
                kind: CutKind::RCut,
                edge_coeffs: edges,
                theta_coeffs: vec![(*single, 1.0)],
                fleet_coeffs: Vec::new(),
                sense: CutSense::Ge,
                rhs: -recourse,
                provenance: CutProvenance::Route(customers.to_vec()),
            });
        }
        [a, b] => {
            edges.push((edge_key(*a, *b), -3.0 * recourse));
            edges.push((edge_key(0, *a), -recourse));
            edges.push((edge_key(0, *b), -recourse));
            return Ok(LinearCut {
                kind: CutKind::RCut,
                edge_coeffs: edges,
                theta_coeffs: vec![(*a, 1.0), (*b, 1.0)],
                fleet_coeffs: Vec::new(),
                sense: CutSense::Ge,
                rhs: -4.0 * recourse,
                provenance: CutProvenance::Route(customers.to_vec()),
            });
        }
        _ => {}
    }
    for w in customers.windows(2) {
        edges.push((edge_key(w[0], w[1]), -2.0 * recourse));
    }
    edges.push((edge_key(0, customers[0]), -recourse));
    edges.push((edge_key(0, *customers.last().unwrap()), -recourse));
    Ok(LinearCut {
        kind: CutKind::RCut,
        edge_coeffs: edges,
        theta_coeffs: customers.iter().map(|&c| (c, 1.0)).collect(),
        fleet_coeffs: Vec::new(),
        sense: CutSense::Ge,
        rhs: -recourse * (2.0 * (t - 1.0) + 1.0),
        provenance: CutProvenance::Route(customers.to_vec()),
    })
}

/// Classic single-solution optimality cut, anchored on the customer-customer
/// edge support of the triggering solution (the degree rows make those edges
/// determine the depot edges, so matching the support means matching the
/// whole solution):
///
/// theta(N) >= (Q(x) - L)(x(supp) - x(off) - |supp| + 1) + L.
pub fn make_classic_cut(
    support_cc_edges: &[(usize, usize)],
    all_customers: usize,
    solution_recourse: f64,
    global_lb: f64,
) -> LinearCut {
    let gap = (solution_recourse - global_lb).max(0.0);
    // theta(N) - gap * x(supp) + gap * x(off) >= gap (1 - |supp|) + L.
    let mut edges: Vec<((usize, usize), f64)> = Vec::new();
    let mut in_support = std::collections::BTreeSet::new();
    for &(a, b) in support_cc_edges {
        let e = edge_key(a, b);
        in_support.insert(e);
        edges.push((e, -gap));
    }
    for a in 1..=all_customers {
        for b in (a + 1)..=all_customers {
            if !in_support.contains(&(a, b)) {
                edges.push(((a, b), gap));
            }
        }
    }
    LinearCut {
        kind: CutKind::Classic,
        edge_coeffs: edges,
        theta_coeffs: (1..=all_customers).map(|c| (c, 1.0)).collect(),
        fleet_coeffs: Vec::new(),
        sense: CutSense::Ge,
        rhs: gap * (1.0 - support_cc_edges.len() as f64) + global_lb,
        provenance: CutProvenance::Solution,
    }
}

/// Fleet lower-bound row: theta(N) >= sum_m L_m z_m.
pub fn make_fleet_lb_cut(
    all_customers: usize,
    fleet_bounds: &std::collections::BTreeMap<usize, f64>,
) -> LinearCut {
    LinearCut {
        kind: CutKind::FleetLb,
        edge_coeffs: Vec::new(),
        theta_coeffs: (1..=all_customers).map(|c| (c, 1.0)).collect(),
        fleet_coeffs: fleet_bounds.iter().map(|(&m, &l)| (m, -l)).collect(),
        sense: CutSense::Ge,
        rhs: 0.0,
        provenance: CutProvenance::Fleet,
    }
}

/// Rounded capacity inequality: x(E(S)) <= |S| - ceil(mu(S)/Q).
pub fn make_capacity_cut(set: &[usize], instance: &StochasticInstance) -> LinearCut {
    let mut sorted = set.to_vec();
    sorted.sort_unstable();
    let total: f64 = sorted.iter().map(|&c| instance.mean_demand(c)).sum();
    let k = ceil_ratio(total, instance.capacity) as f64;
    let mut edges = Vec::new();
    for (ai, &a) in sorted.iter().enumerate() {
        for &b in &sorted[ai + 1..] {
            edges.push((edge_key(a, b), 1.0));
        }
    }
    LinearCut {
        kind: CutKind::Capacity,
        edge_coeffs: edges,
        theta_coeffs: Vec::new(),
        fleet_coeffs: Vec::new(),
        sense: CutSense::Le,
        rhs: sorted.len() as f64 - k,
        provenance: CutProvenance::Set(sorted),
    }
}

/// Payload-tagged construction, mirroring the cut taxonomy.
pub enum CutRequest<'a> {
    Path { path: &'a Path, recourse: f64 },
    Set { set: &'a [usize], bound: f64 },
    Route { path: &'a Path, recourse: f64 },
    Classic {
        support_cc_edges: &'a [(usize, usize)],
        solution_recourse: f64,
        global_lb: f64,
    },
    Fleet { bounds: &'a std::collections::BTreeMap<usize, f64> },
    Capacity { set: &'a [usize] },
}

pub fn make_cut(
    request: CutRequest<'_>,
    instance: &StochasticInstance,
    instance_monotone: bool,
) -> Result<LinearCut, CutError> {
    match request {
        CutRequest::Path { path, recourse } => make_p_cut(path, recourse, instance_monotone),
        CutRequest::Set { set, bound } => make_s_cut(set, bound, instance, instance_monotone),
        CutRequest::Route { path, recourse } => make_r_cut(path, recourse),
        CutRequest::Classic { support_cc_edges, solution_recourse, global_lb } => Ok(
            make_classic_cut(
                support_cc_edges,
                instance.num_customers(),
                solution_recourse,
                global_lb,
            ),
        ),
        CutRequest::Fleet { bounds } => {
            Ok(make_fleet_lb_cut(instance.num_customers(), bounds))
        }
        CutRequest::Capacity { set } => Ok(make_capacity_cut(set, instance)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{CustomerNode, DistanceRounding};
    use crate::lp::{DenseSimplex, LpBackend, LpStatus, RowSense, VarId};
    use crate::recourse::{expected_recourse_route, RoutePlan};
    use crate::stochastic::DemandDistribution;
    use std::collections::{BTreeMap, BTreeSet};

    struct MapSolution {
        edges: BTreeMap<(usize, usize), f64>,
        thetas: BTreeMap<usize, f64>,
        fleets: BTreeMap<usize, f64>,
    }

    impl SolutionValues for MapSolution {
        fn edge_value(&self, i: usize, j: usize) -> f64 {
            self.edges.get(&edge_key(i, j)).copied().unwrap_or(0.0)
        }
        fn theta_value(&self, customer: usize) -> f64 {
            self.thetas.get(&customer).copied().unwrap_or(0.0)
        }
        fn fleet_value(&self, m: usize) -> f64 {
            self.fleets.get(&m).copied().unwrap_or(0.0)
        }
    }

    fn instance(n: usize, q: u32) -> StochasticInstance {
        let nodes = (1..=n)
            .map(|id| CustomerNode {
                id,
                x: id as f64 * 2.0,
                y: 1.0,
                demand: DemandDistribution::Poisson { lambda: 3.0 },
            })
            .collect();
        StochasticInstance::new(
            "cuts".into(),
            "test".into(),
            (0.0, 0.0),
            nodes,
            q,
            BTreeSet::from([1, 2]),
            DistanceRounding::Exact,
            None,
        )
        .unwrap()
    }

    #[test]
    fn single_customer_path_cut_is_constant_bound() {
        let cut = make_p_cut(&Path::new(vec![2]), 5.0, true).unwrap();
        assert!(cut.edge_coeffs.is_empty());
        assert_eq!(cut.theta_coeffs, vec![(2, 1.0)]);
        assert_eq!(cut.rhs, 5.0);
        // theta_2 = 0 violates it by exactly 5.
        let sol = MapSolution {
            edges: BTreeMap::new(),
            thetas: BTreeMap::new(),
            fleets: BTreeMap::new(),
        };
        assert!((cut.violation(&sol) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn path_cut_rhs_at_fully_active_path() {
        let cut = make_p_cut(&Path::new(vec![1, 2, 3]), 4.0, true).unwrap();
        let sol = MapSolution {
            edges: BTreeMap::from([((1, 2), 1.0), ((2, 3), 1.0)]),
            thetas: BTreeMap::new(),
            fleets: BTreeMap::new(),
        };
        // x(p) = |p| makes the bound fully active: violation = recourse.
        assert!((cut.violation(&sol) - 4.0).abs() < 1e-12);

        // With no active edges and |p| >= 2 the cut is slack.
        let zero = MapSolution {
            edges: BTreeMap::new(),
            thetas: BTreeMap::new(),
            fleets: BTreeMap::new(),
        };
        assert!(cut.violation(&zero) <= 0.0);
    }

    #[test]
    fn path_cuts_refused_without_monotonicity() {
        assert!(matches!(
            make_p_cut(&Path::new(vec![1, 2]), 1.0, false),
            Err(CutError::MonotonicityRequired)
        ));
        let inst = instance(3, 10);
        assert!(matches!(
            make_s_cut(&[1, 2], 1.0, &inst, false),
            Err(CutError::MonotonicityRequired)
        ));
    }

    #[test]
    fn set_cut_inactive_below_edge_threshold() {
        let inst = instance(4, 10);
        // mu(S) = 9 over 3 customers, ceil = 1.
        let cut = make_s_cut(&[1, 2, 3], 2.5, &inst, true).unwrap();
        // x(S) = |S| - ceil - 1 = 1 edge: RHS contribution non-positive.
        let sol = MapSolution {
            edges: BTreeMap::from([((1, 2), 1.0)]),
            thetas: BTreeMap::new(),
            fleets: BTreeMap::new(),
        };
        assert!(cut.violation(&sol) <= 1e-12);
        // x(S) = |S| - ceil = 2 edges: the cut demands the full bound.
        let sol2 = MapSolution {
            edges: BTreeMap::from([((1, 2), 1.0), ((2, 3), 1.0)]),
            thetas: BTreeMap::new(),
            fleets: BTreeMap::new(),
        };
        assert!((cut.violation(&sol2) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn capacity_cut_respected_by_feasible_solutions() {
        let inst = instance(3, 10);
        // Total mean 9 <= 10: one vehicle may serve all three.
        let cut = make_capacity_cut(&[1, 2, 3], &inst);
        assert_eq!(cut.rhs, 2.0);
        let route_sol = MapSolution {
            edges: BTreeMap::from([((1, 2), 1.0), ((2, 3), 1.0)]),
            thetas: BTreeMap::new(),
            fleets: BTreeMap::new(),
        };
        assert!(cut.violation(&route_sol) <= 0.0);
        // A subtour 1-2-3-1 violates it.
        let subtour = MapSolution {
            edges: BTreeMap::from([((1, 2), 1.0), ((2, 3), 1.0), ((1, 3), 1.0)]),
            thetas: BTreeMap::new(),
            fleets: BTreeMap::new(),
        };
        assert!(cut.violation(&subtour) > 0.5);
    }

    #[test]
    fn route_cut_only_activates_at_its_own_route() {
        let inst = instance(3, 30);
        let route = RoutePlan::new(Path::new(vec![1, 2]), &inst);
        let q_r = expected_recourse_route(&route, &inst).unwrap();
        let cut = make_r_cut(&route.path, q_r.max(1.0)).unwrap();

        // Enumerate all integer solutions of the 3-customer model and check
        // the cut's RHS is positive only when routes contain exactly (1,2).
        let solutions: Vec<(Vec<Vec<usize>>, bool)> = vec![
            (vec![vec![1, 2], vec![3]], true),
            (vec![vec![2, 1], vec![3]], true), // same route reversed
            (vec![vec![1, 2, 3]], false),
            (vec![vec![3, 1, 2]], false), // (1,2) inside but with 3 attached
            (vec![vec![1], vec![2], vec![3]], false),
            (vec![vec![1, 3], vec![2]], false),
        ];
        for (routes, expect_active) in solutions {
            let mut edges = BTreeMap::new();
            for r in &routes {
                let mut add = |a: usize, b: usize| {
                    *edges.entry(edge_key(a, b)).or_insert(0.0) += 1.0;
                };
                add(0, r[0]);
                for w in r.windows(2) {
                    add(w[0], w[1]);
                }
                add(0, *r.last().unwrap());
            }
            let sol = MapSolution { edges, thetas: BTreeMap::new(), fleets: BTreeMap::new() };
            // RHS of the >= cut at theta = 0 equals the violation.
            let v = cut.violation(&sol);
            if expect_active {
                assert!(
                    (v - q_r.max(1.0)).abs() < 1e-9,
                    "route-present solution should demand the bound, got {v}"
                );
            } else {
                assert!(v <= 1e-9, "foreign solution {routes:?} activates the cut: {v}");
            }
        }
    }

    #[test]
    fn classic_cut_binds_only_its_own_solution() {
        // Solution A: route (1,2,3); support edges {12, 23}.
        let cut = make_classic_cut(&[(1, 2), (2, 3)], 3, 7.0, 1.0);
        let own = MapSolution {
            edges: BTreeMap::from([((1, 2), 1.0), ((2, 3), 1.0)]),
            thetas: BTreeMap::new(),
            fleets: BTreeMap::new(),
        };
        assert!((cut.violation(&own) - 7.0).abs() < 1e-12);
        // Solution B: singletons; no customer-customer edges.
        let other = MapSolution {
            edges: BTreeMap::new(),
            thetas: BTreeMap::new(),
            fleets: BTreeMap::new(),
        };
        // Demands at most the global lower bound from any other solution.
        assert!(cut.violation(&other) <= 1.0 + 1e-12);
        // Solution C: routes (1,2) and (3): shares one support edge.
        let partial = MapSolution {
            edges: BTreeMap::from([((1, 2), 1.0)]),
            thetas: BTreeMap::new(),
            fleets: BTreeMap::new(),
        };
        assert!(cut.violation(&partial) <= 1.0 + 1e-12);
    }

    #[test]
    fn fleet_lb_cut_mixes_bounds() {
        let bounds = BTreeMap::from([(2, 10.0), (3, 6.0)]);
        let cut = make_fleet_lb_cut(4, &bounds);
        let sol = MapSolution {
            edges: BTreeMap::new(),
            thetas: BTreeMap::from([(1, 3.0), (2, 3.0)]),
            fleets: BTreeMap::from([(2, 1.0)]),
        };
        // theta sum 6 < L_2 = 10: violated by 4.
        assert!((cut.violation(&sol) - 4.0).abs() < 1e-12);
        let sol3 = MapSolution {
            edges: BTreeMap::new(),
            thetas: BTreeMap::from([(1, 3.0), (2, 3.0)]),
            fleets: BTreeMap::from([(3, 1.0)]),
        };
        assert!(cut.violation(&sol3) <= 0.0);
    }

    #[test]
    fn dedup_canonicalizes_paths_up_to_reversal() {
        let a = make_p_cut(&Path::new(vec![1, 2, 3]), 2.0, true).unwrap();
        let b = make_p_cut(&Path::new(vec![3, 2, 1]), 2.0, true).unwrap();
        assert_eq!(a.dedup_key(), b.dedup_key());
        let c = make_p_cut(&Path::new(vec![2, 1, 3]), 2.0, true).unwrap();
        assert_ne!(a.dedup_key(), c.dedup_key());
    }

    /// Pooling the path cut of EVERY feasible path and the set cut of EVERY
    /// feasible set never forces the recourse variables of the true optimum
    /// above its actual recourse: minimizing theta under the full pool at
    /// the optimal first stage recovers at most the optimal recourse.
    #[test]
    fn maximal_cut_pool_never_cuts_the_optimum() {
        use crate::engine::exhaustive::solve_exhaustive;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(404);
        for _ in 0..3 {
            let n = 5usize;
            let q = rng.gen_range(10..=14u32);
            let nodes = (1..=n)
                .map(|id| CustomerNode {
                    id,
                    x: rng.gen_range(-8.0..8.0),
                    y: rng.gen_range(-8.0..8.0),
                    demand: DemandDistribution::Poisson {
                        lambda: rng.gen_range(1..=5) as f64,
                    },
                })
                .collect();
            let inst = StochasticInstance::new(
                "pool".into(),
                "test".into(),
                (0.0, 0.0),
                nodes,
                q,
                (1..=n).collect(),
                crate::instance::DistanceRounding::Exact,
                None,
            )
            .unwrap();
            let (optimum, routes) = solve_exhaustive(&inst, 0.0).unwrap();
            let travel: f64 = routes
                .iter()
                .map(|r| RoutePlan::new(Path::new(r.clone()), &inst).travel_cost(&inst))
                .sum();
            let recourse = optimum - travel;

            // Every feasible ordered path (for path cuts) and every feasible
            // set (for set cuts with the single-route bound).
            let mut cuts = Vec::new();
            let ids: Vec<usize> = (1..=n).collect();
            for mask in 1u32..(1 << n) {
                let set: Vec<usize> =
                    ids.iter().copied().filter(|&c| mask >> (c - 1) & 1 == 1).collect();
                let load: f64 = set.iter().map(|&c| inst.mean_demand(c)).sum();
                if load > inst.capacity as f64 {
                    continue;
                }
                if let Ok(l1) = crate::bounds::l1_unchecked_truncated(&set, &inst, 0.0) {
                    if l1 > 0.0 {
                        cuts.push(make_s_cut(&set, l1, &inst, true).unwrap());
                    }
                }
                let mut perm = set.clone();
                let mut orders = Vec::new();
                fn permute(v: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
                    if k == v.len() {
                        out.push(v.clone());
                        return;
                    }
                    for i in k..v.len() {
                        v.swap(k, i);
                        permute(v, k + 1, out);
                        v.swap(k, i);
                    }
                }
                permute(&mut perm, 0, &mut orders);
                for order in orders {
                    let plan = RoutePlan::new(Path::new(order.clone()), &inst);
                    let q_r = expected_recourse_route(&plan, &inst).unwrap();
                    if q_r > 0.0 {
                        cuts.push(make_p_cut(&Path::new(order), q_r, true).unwrap());
                    }
                }
            }

            // Edge values of the optimal solution.
            let mut edges: BTreeMap<(usize, usize), f64> = BTreeMap::new();
            for r in &routes {
                let mut add = |a: usize, b: usize| {
                    *edges.entry(edge_key(a, b)).or_insert(0.0) += 1.0;
                };
                add(0, r[0]);
                for w in r.windows(2) {
                    add(w[0], w[1]);
                }
                add(0, *r.last().unwrap());
            }
            let mut lp = DenseSimplex::new();
            let thetas: Vec<VarId> =
                (0..n).map(|_| lp.add_var(1.0, 0.0, f64::INFINITY)).collect();
            for cut in &cuts {
                let mut rhs = cut.rhs;
                for &((i, j), a) in &cut.edge_coeffs {
                    rhs -= a * edges.get(&(i, j)).copied().unwrap_or(0.0);
                }
                let coeffs: Vec<(VarId, f64)> =
                    cut.theta_coeffs.iter().map(|&(c, a)| (thetas[c - 1], a)).collect();
                lp.add_row(&coeffs, RowSense::Ge, rhs);
            }
            assert_eq!(lp.solve().unwrap(), LpStatus::Optimal);
            assert!(
                lp.objective_value() <= recourse + 1e-6,
                "maximal pool forces {} above the optimal recourse {recourse}",
                lp.objective_value()
            );
        }
    }

    /// Pooled path cuts bind theta to the per-route recourse at integer
    /// solutions: minimizing theta over all cuts of a solution's subpaths
    /// recovers exactly the solution recourse.
    #[test]
    fn pooled_path_cuts_bind_theta_at_integer_solutions() {
        let inst = instance(3, 12); // means 3+3+3 <= 12: monotone by family
        let routes = [vec![1, 2], vec![3]];
        // Pool the path cut of every connected subpath of every route.
        let mut cuts = Vec::new();
        for r in &routes {
            for a in 0..r.len() {
                for b in a..r.len() {
                    let sub: Vec<usize> = r[a..=b].to_vec();
                    let rp = RoutePlan::new(Path::new(sub.clone()), &inst);
                    let q = expected_recourse_route(&rp, &inst).unwrap();
                    if q > 0.0 {
                        cuts.push(make_p_cut(&Path::new(sub), q, true).unwrap());
                    }
                }
            }
        }
        // x values of the integer solution.
        let mut edges: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for r in &routes {
            *edges.entry(edge_key(0, r[0])).or_insert(0.0) += 1.0;
            for w in r.windows(2) {
                *edges.entry(edge_key(w[0], w[1])).or_insert(0.0) += 1.0;
            }
            *edges.entry(edge_key(0, *r.last().unwrap())).or_insert(0.0) += 1.0;
        }
        // Minimize sum of theta subject to the pooled cuts with x fixed.
        let mut lp = DenseSimplex::new();
        let thetas: Vec<VarId> = (0..3).map(|_| lp.add_var(1.0, 0.0, f64::INFINITY)).collect();
        for cut in &cuts {
            let mut rhs = cut.rhs;
            for &((i, j), a) in &cut.edge_coeffs {
                rhs -= a * edges.get(&(i, j)).copied().unwrap_or(0.0);
            }
            let coeffs: Vec<(VarId, f64)> =
                cut.theta_coeffs.iter().map(|&(c, a)| (thetas[c - 1], a)).collect();
            lp.add_row(&coeffs, RowSense::Ge, rhs);
        }
        assert_eq!(lp.solve().unwrap(), LpStatus::Optimal);
        let expected: f64 = routes
            .iter()
            .map(|r| {
                expected_recourse_route(&RoutePlan::new(Path::new(r.clone()), &inst), &inst)
                    .unwrap()
            })
            .sum();
        assert!(
            (lp.objective_value() - expected).abs() < 1e-9,
            "theta minimum {} vs solution recourse {expected}",
            lp.objective_value()
        );
    }
}
