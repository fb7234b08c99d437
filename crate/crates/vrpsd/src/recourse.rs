//! Expected detour-to-depot recourse of paths, routes and solutions.
//!
//! Under the detour-to-depot policy a vehicle drives its planned sequence,
//! and whenever the realized demand at a customer exceeds the residual
//! capacity it pays a round trip to the depot (2 * c_{0i}) and continues. The
//! expected recourse of a path sums, over customers and restock counts l, the
//! probability that the l-th restock happens exactly at that customer. A
//! restocking trip occurs only when the demand strictly exceeds the residual
//! capacity; an exact stock-out does not trigger one.

use thiserror::Error;

use crate::instance::StochasticInstance;
use crate::stochastic::{clamp_probability, DemandDistribution, DistributionError, PartialSum};

/// Default threshold below which the restock-count summation stops.
pub const DEFAULT_TRUNCATION: f64 = 1e-4;

/// Hard cap on the restock-count summation, for pathological parameters.
const MAX_RESTOCKS: u32 = 10_000;

#[derive(Debug, Error)]
pub enum RecourseError {
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error("customer {0} not in instance")]
    UnknownCustomer(usize),
    #[error("customer {0} covered {1} times; routes must partition the customers")]
    NotAPartition(usize, usize),
    #[error("scenario space of {0} outcomes exceeds the oracle limit")]
    ScenarioExplosion(f64),
    #[error("oracle requires finite discrete demands, customer {0} is {1}")]
    NotDiscrete(usize, String),
}

/// An ordered customer sequence, depot endpoints implicit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path(pub Vec<usize>);

impl Path {
    pub fn new(customers: Vec<usize>) -> Self {
        debug_assert!(
            {
                let mut s = customers.clone();
                s.sort_unstable();
                s.windows(2).all(|w| w[0] != w[1])
            },
            "path must not repeat customers"
        );
        Self(customers)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn reversed(&self) -> Self {
        let mut v = self.0.clone();
        v.reverse();
        Self(v)
    }

    pub fn customers(&self) -> &[usize] {
        &self.0
    }
}

/// A route: a path served by one vehicle, depot at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutePlan {
    pub path: Path,
    expected_demand: f64,
}

impl RoutePlan {
    pub fn new(path: Path, instance: &StochasticInstance) -> Self {
        let expected_demand = path.customers().iter().map(|&c| instance.mean_demand(c)).sum();
        Self { path, expected_demand }
    }

    pub fn expected_demand(&self) -> f64 {
        self.expected_demand
    }

    /// Expected-capacity feasibility of the first stage.
    pub fn is_load_feasible(&self, instance: &StochasticInstance) -> bool {
        self.expected_demand <= instance.capacity as f64 + 1e-9
    }

    /// Travel cost of the closed route.
    pub fn travel_cost(&self, instance: &StochasticInstance) -> f64 {
        let p = self.path.customers();
        if p.is_empty() {
            return 0.0;
        }
        let mut cost = instance.cost(0, p[0]) + instance.cost(0, *p.last().unwrap());
        for w in p.windows(2) {
            cost += instance.cost(w[0], w[1]);
        }
        cost
    }
}

fn check_customers(path: &Path, instance: &StochasticInstance) -> Result<(), RecourseError> {
    for &c in path.customers() {
        if c == 0 || c > instance.num_customers() {
            return Err(RecourseError::UnknownCustomer(c));
        }
    }
    Ok(())
}

/// Expected recourse of a path in its given orientation, with the summation
/// over restock counts truncated once the term drops below `truncation`
/// (after the threshold has passed the expected load, so high-mean prefixes
/// are not cut off early).
pub fn expected_recourse_path_truncated(
    path: &Path,
    instance: &StochasticInstance,
    truncation: f64,
) -> Result<f64, RecourseError> {
    check_customers(path, instance)?;
    let q = instance.capacity;
    let mut prefix = PartialSum::empty();
    let mut total = 0.0;
    for &customer in path.customers() {
        let next = instance.demand(customer);
        let with_next = prefix.with(next)?;
        let mean_full = with_next.mean();
        // Bounded supports are summed exactly: every term vanishes once l*Q
        // reaches the largest possible load, and spiky tables can interleave
        // zero and positive terms, so the truncation rule must not fire.
        let hard_stop = with_next.upper_bound();
        // Below this, terms are double-precision noise; lets truncation 0
        // mean "machine exact".
        let floor = truncation.max(1e-15);
        let mut mass = 0.0;
        for l in 1..=MAX_RESTOCKS {
            let threshold = l as f64 * q as f64;
            if let Some(ub) = hard_stop {
                if threshold >= ub {
                    break;
                }
            }
            let term = clamp_probability(prefix.cdf(threshold) - with_next.cdf(threshold))?;
            if hard_stop.is_none() && term < floor && threshold >= mean_full {
                break;
            }
            mass += term;
        }
        total += 2.0 * mass * instance.cost(0, customer);
        prefix = with_next;
    }
    Ok(total)
}

/// Expected recourse of a path with the default truncation threshold.
pub fn expected_recourse_path(
    path: &Path,
    instance: &StochasticInstance,
) -> Result<f64, RecourseError> {
    expected_recourse_path_truncated(path, instance, DEFAULT_TRUNCATION)
}

/// Expected recourse of a route: the cheaper of the two orientations.
pub fn expected_recourse_route(
    route: &RoutePlan,
    instance: &StochasticInstance,
) -> Result<f64, RecourseError> {
    expected_recourse_route_truncated(route, instance, DEFAULT_TRUNCATION)
}

pub fn expected_recourse_route_truncated(
    route: &RoutePlan,
    instance: &StochasticInstance,
    truncation: f64,
) -> Result<f64, RecourseError> {
    let fwd = expected_recourse_path_truncated(&route.path, instance, truncation)?;
    let rev = expected_recourse_path_truncated(&route.path.reversed(), instance, truncation)?;
    Ok(fwd.min(rev))
}

/// Expected recourse of a first-stage solution: the sum over its routes.
/// The routes must partition the customer set.
pub fn expected_recourse_solution(
    routes: &[RoutePlan],
    instance: &StochasticInstance,
) -> Result<f64, RecourseError> {
    expected_recourse_solution_truncated(routes, instance, DEFAULT_TRUNCATION)
}

pub fn expected_recourse_solution_truncated(
    routes: &[RoutePlan],
    instance: &StochasticInstance,
    truncation: f64,
) -> Result<f64, RecourseError> {
    let mut coverage = vec![0usize; instance.num_customers() + 1];
    for route in routes {
        for &c in route.path.customers() {
            if c == 0 || c > instance.num_customers() {
                return Err(RecourseError::UnknownCustomer(c));
            }
            coverage[c] += 1;
        }
    }
    for c in 1..=instance.num_customers() {
        if coverage[c] != 1 {
            return Err(RecourseError::NotAPartition(c, coverage[c]));
        }
    }
    let mut total = 0.0;
    for route in routes {
        total += expected_recourse_route_truncated(route, instance, truncation)?;
    }
    Ok(total)
}

/// Exact expected recourse of a path by exhaustive scenario enumeration.
/// Requires every demand on the path to be finite discrete; the product of
/// support sizes must stay within 10^7 outcomes. Simulates the same
/// cumulative-threshold semantics as the analytic evaluation: the l-th
/// restock happens at customer j iff prefix_{j-1} <= l*Q < prefix_j.
pub fn recourse_oracle_discrete(
    path: &Path,
    instance: &StochasticInstance,
) -> Result<f64, RecourseError> {
    check_customers(path, instance)?;
    let mut supports: Vec<Vec<(u32, f64)>> = Vec::with_capacity(path.len());
    for &c in path.customers() {
        match instance.demand(c) {
            DemandDistribution::FiniteDiscrete(t) => supports.push(t.support().collect()),
            other => return Err(RecourseError::NotDiscrete(c, other.family_name().to_string())),
        }
    }
    if supports.is_empty() {
        return Ok(0.0);
    }
    let scenarios: f64 = supports.iter().map(|s| s.len() as f64).product();
    if scenarios > 1e7 {
        return Err(RecourseError::ScenarioExplosion(scenarios));
    }
    let q = instance.capacity as u64;
    let mut total = 0.0;
    let mut choice = vec![0usize; supports.len()];
    loop {
        // Evaluate one scenario.
        let mut prob = 1.0;
        let mut cum = 0u64;
        let mut cost = 0.0;
        for (j, &c) in path.customers().iter().enumerate() {
            let (v, p) = supports[j][choice[j]];
            prob *= p;
            let before = cum;
            cum += v as u64;
            // Count the l >= 1 with before <= l*q < cum.
            let l_min = before.div_ceil(q).max(1);
            let l_max = cum.div_ceil(q).saturating_sub(1);
            if l_max >= l_min {
                cost += (l_max - l_min + 1) as f64 * 2.0 * instance.cost(0, c);
            }
        }
        total += prob * cost;
        // Next scenario in mixed-radix order.
        let mut j = 0;
        loop {
            if j == supports.len() {
                return Ok(total);
            }
            choice[j] += 1;
            if choice[j] < supports[j].len() {
                break;
            }
            choice[j] = 0;
            j += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{CustomerNode, DistanceRounding};
    use crate::stochastic::DiscreteTable;
    use std::collections::BTreeSet;

    /// Three customers on a line; depot distances c_{01} = c_{02} = 0 and
    /// c_{03} = 1, capacity 20, Poisson means (5, 15, 10).
    fn poisson_counterexample_instance() -> StochasticInstance {
        let nodes = vec![
            CustomerNode { id: 1, x: 0.0, y: 0.0, demand: DemandDistribution::Poisson { lambda: 5.0 } },
            CustomerNode { id: 2, x: 0.0, y: 0.0, demand: DemandDistribution::Poisson { lambda: 15.0 } },
            CustomerNode { id: 3, x: 1.0, y: 0.0, demand: DemandDistribution::Poisson { lambda: 10.0 } },
        ];
        StochasticInstance::new(
            "poisson-counterexample".into(),
            "test".into(),
            (0.0, 0.0),
            nodes,
            20,
            BTreeSet::from([1, 2, 3]),
            DistanceRounding::Exact,
            None,
        )
        .unwrap()
    }

    fn discrete_counterexample_instance(c02: f64, c03: f64) -> StochasticInstance {
        let spiky = DiscreteTable::new(vec![(6, 0.9), (16, 0.1)]).unwrap();
        let nodes = vec![
            CustomerNode {
                id: 1,
                x: 0.0,
                y: 0.0,
                demand: DemandDistribution::FiniteDiscrete(DiscreteTable::point(5)),
            },
            CustomerNode {
                id: 2,
                x: c02,
                y: 0.0,
                demand: DemandDistribution::FiniteDiscrete(spiky.clone()),
            },
            CustomerNode {
                id: 3,
                x: c03,
                y: 0.0,
                demand: DemandDistribution::FiniteDiscrete(spiky),
            },
        ];
        StochasticInstance::new(
            "discrete-counterexample".into(),
            "test".into(),
            (0.0, 0.0),
            nodes,
            20,
            BTreeSet::from([1, 2, 3]),
            DistanceRounding::Exact,
            None,
        )
        .unwrap()
    }

    #[test]
    fn poisson_counterexample_values() {
        let inst = poisson_counterexample_instance();
        let full = expected_recourse_path(&Path::new(vec![1, 2, 3]), &inst).unwrap();
        let sub = expected_recourse_path(&Path::new(vec![2, 3]), &inst).unwrap();
        assert!((full - 1.11).abs() < 0.01, "full path: {full}");
        assert!((sub - 1.47).abs() < 0.01, "subpath: {sub}");
        assert!(full < sub, "removing a customer increases the recourse here");
    }

    #[test]
    fn discrete_counterexample_values_exact() {
        let (c02, c03) = (3.0, 7.0);
        let inst = discrete_counterexample_instance(c02, c03);
        let full = expected_recourse_path(&Path::new(vec![1, 2, 3]), &inst).unwrap();
        let sub = expected_recourse_path(&Path::new(vec![2, 3]), &inst).unwrap();
        assert!((full - (0.1 * 2.0 * c02 + 0.09 * 2.0 * c03)).abs() < 1e-12);
        assert!((sub - 0.19 * 2.0 * c03).abs() < 1e-12);

        let ofull = recourse_oracle_discrete(&Path::new(vec![1, 2, 3]), &inst).unwrap();
        let osub = recourse_oracle_discrete(&Path::new(vec![2, 3]), &inst).unwrap();
        assert!((ofull - full).abs() < 1e-12);
        assert!((osub - sub).abs() < 1e-12);
    }

    #[test]
    fn deterministic_demands_within_capacity_have_zero_recourse() {
        let nodes = (1..=3)
            .map(|id| CustomerNode {
                id,
                x: id as f64,
                y: 2.0,
                demand: DemandDistribution::FiniteDiscrete(DiscreteTable::point(5)),
            })
            .collect();
        let inst = StochasticInstance::new(
            "det".into(),
            "test".into(),
            (0.0, 0.0),
            nodes,
            15,
            BTreeSet::from([1]),
            DistanceRounding::Exact,
            None,
        )
        .unwrap();
        let r = expected_recourse_path(&Path::new(vec![1, 2, 3]), &inst).unwrap();
        assert_eq!(r, 0.0);
        let o = recourse_oracle_discrete(&Path::new(vec![1, 2, 3]), &inst).unwrap();
        assert_eq!(o, 0.0);
    }

    #[test]
    fn empty_path_has_zero_recourse() {
        let inst = poisson_counterexample_instance();
        assert_eq!(expected_recourse_path(&Path::new(vec![]), &inst).unwrap(), 0.0);
    }

    #[test]
    fn route_takes_cheaper_orientation() {
        let inst = poisson_counterexample_instance();
        let route = RoutePlan::new(Path::new(vec![1, 2, 3]), &inst);
        let fwd = expected_recourse_path(&Path::new(vec![1, 2, 3]), &inst).unwrap();
        let rev = expected_recourse_path(&Path::new(vec![3, 2, 1]), &inst).unwrap();
        let r = expected_recourse_route(&route, &inst).unwrap();
        assert!((r - fwd.min(rev)).abs() < 1e-12);
        assert!(r <= fwd && r <= rev);
    }

    #[test]
    fn single_customer_route_is_orientation_invariant() {
        let inst = poisson_counterexample_instance();
        let route = RoutePlan::new(Path::new(vec![3]), &inst);
        let fwd = expected_recourse_path(&route.path, &inst).unwrap();
        let rev = expected_recourse_path(&route.path.reversed(), &inst).unwrap();
        assert_eq!(fwd, rev);
        assert!((expected_recourse_route(&route, &inst).unwrap() - fwd).abs() < 1e-15);
    }

    #[test]
    fn solution_recourse_is_additive_and_checks_partition() {
        let inst = poisson_counterexample_instance();
        let r12 = RoutePlan::new(Path::new(vec![1, 2]), &inst);
        let r3 = RoutePlan::new(Path::new(vec![3]), &inst);
        let sum = expected_recourse_solution(&[r12.clone(), r3.clone()], &inst).unwrap();
        let a = expected_recourse_route(&r12, &inst).unwrap();
        let b = expected_recourse_route(&r3, &inst).unwrap();
        assert!((sum - (a + b)).abs() < 1e-12);

        // Customer 3 covered twice.
        let bad = expected_recourse_solution(
            &[r12, RoutePlan::new(Path::new(vec![3]), &inst), r3],
            &inst,
        );
        assert!(matches!(bad, Err(RecourseError::NotAPartition(3, 2))));
    }

    #[test]
    fn oracle_rejects_non_discrete_demands() {
        let inst = poisson_counterexample_instance();
        assert!(matches!(
            recourse_oracle_discrete(&Path::new(vec![1]), &inst),
            Err(RecourseError::NotDiscrete(1, _))
        ));
    }

    #[test]
    fn analytic_recourse_matches_oracle_on_random_discrete_instances() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        for trial in 0..60 {
            let n = rng.gen_range(1..=5);
            let q = rng.gen_range(8..=25u32);
            let nodes: Vec<CustomerNode> = (1..=n)
                .map(|id| {
                    let k = rng.gen_range(1..=3);
                    let mut vals = BTreeSet::new();
                    while vals.len() < k {
                        vals.insert(rng.gen_range(0..=(2 * q)));
                    }
                    let mut probs: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
                    let total: f64 = probs.iter().sum();
                    for p in &mut probs {
                        *p /= total;
                    }
                    // Force the sum to exactly 1 against rounding.
                    let correction: f64 = 1.0 - probs.iter().sum::<f64>();
                    probs[0] += correction;
                    let pairs: Vec<(u32, f64)> =
                        vals.iter().copied().zip(probs.iter().copied()).collect();
                    CustomerNode {
                        id,
                        x: rng.gen_range(0.0..10.0),
                        y: rng.gen_range(0.0..10.0),
                        demand: DemandDistribution::FiniteDiscrete(
                            DiscreteTable::new(pairs).unwrap(),
                        ),
                    }
                })
                .collect();
            let inst = StochasticInstance::new(
                format!("rand{trial}"),
                "test".into(),
                (5.0, 5.0),
                nodes,
                q,
                BTreeSet::from([1]),
                DistanceRounding::Exact,
                None,
            )
            .unwrap();
            let path = Path::new((1..=n).collect());
            // Bounded supports are evaluated exactly even at the default
            // truncation threshold.
            let analytic = expected_recourse_path(&path, &inst).unwrap();
            let oracle = recourse_oracle_discrete(&path, &inst).unwrap();
            assert!(
                (analytic - oracle).abs() <= 1e-9,
                "trial {trial}: analytic {analytic} vs oracle {oracle}"
            );
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn poisson_fixture(lambdas: Vec<u32>, q: u32) -> StochasticInstance {
            let nodes = lambdas
                .iter()
                .enumerate()
                .map(|(i, &l)| CustomerNode {
                    id: i + 1,
                    x: (i as f64 * 7.3) % 11.0,
                    y: (i as f64 * 3.1) % 5.0,
                    demand: DemandDistribution::Poisson { lambda: l as f64 },
                })
                .collect();
            StochasticInstance::new(
                "prop".into(),
                "test".into(),
                (0.0, 0.0),
                nodes,
                q,
                BTreeSet::from([1]),
                DistanceRounding::Exact,
                None,
            )
            .unwrap()
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            /// For monotone-certified sets, deleting customers from a path
            /// never increases its expected recourse.
            #[test]
            fn subpath_deletion_never_increases_recourse(
                lambdas in proptest::collection::vec(1u32..6, 2..6),
                keep_mask in 1u32..63,
                extra_capacity in 0u32..10,
            ) {
                let total: u32 = lambdas.iter().sum();
                let q = total + extra_capacity; // capacity hypothesis holds
                let inst = poisson_fixture(lambdas.clone(), q);
                let full: Vec<usize> = (1..=lambdas.len()).collect();
                let sub: Vec<usize> = full
                    .iter()
                    .copied()
                    .filter(|&c| keep_mask >> (c - 1) & 1 == 1)
                    .collect();
                let q_full =
                    expected_recourse_path_truncated(&Path::new(full), &inst, 0.0).unwrap();
                let q_sub =
                    expected_recourse_path_truncated(&Path::new(sub), &inst, 0.0).unwrap();
                prop_assert!(
                    q_full >= q_sub - 1e-9,
                    "subpath recourse {q_sub} exceeds full path {q_full}"
                );
            }

            /// Reversing a path never changes the route-level recourse, and
            /// the route value never exceeds either orientation.
            #[test]
            fn route_recourse_orientation_invariant(
                lambdas in proptest::collection::vec(1u32..8, 1..6),
                q in 5u32..30,
            ) {
                let inst = poisson_fixture(lambdas.clone(), q);
                let path = Path::new((1..=lambdas.len()).collect());
                let route = RoutePlan::new(path.clone(), &inst);
                let rev_route = RoutePlan::new(path.reversed(), &inst);
                let a = expected_recourse_route(&route, &inst).unwrap();
                let b = expected_recourse_route(&rev_route, &inst).unwrap();
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn truncation_soundness_tightening_changes_little() {
        let inst = poisson_counterexample_instance();
        let path = Path::new(vec![1, 2, 3]);
        let coarse = expected_recourse_path_truncated(&path, &inst, 1e-4).unwrap();
        let fine = expected_recourse_path_truncated(&path, &inst, 1e-8).unwrap();
        let max_cost = (1..=3).map(|c| inst.cost(0, c)).fold(0.0, f64::max);
        assert!((fine - coarse).abs() < 2e-3 * max_cost, "{coarse} vs {fine}");
        assert!(fine >= coarse - 1e-15, "tightening only adds non-negative terms");
    }
}
