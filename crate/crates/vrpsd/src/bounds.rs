//! Lower bounds on the expected recourse of a customer set.
//!
//! Four bounds, from tightest to cheapest:
//!
//! * `l1_single_route` — the recourse of the set visited by one vehicle in
//!   non-increasing order of depot distance, which is the cheapest of all
//!   single-route orders when the set respects the monotonicity condition;
//! * `l2_dp` — a two-stage dynamic program that distributes integer units of
//!   expected demand over `m` vehicles, each vehicle priced by a least-cost
//!   assignment table (`GTable`);
//! * `l3_set_covering` — the linear relaxation of a set-covering model over
//!   capacity-feasible paths, solved by column generation with the `GTable`
//!   recurrence as the pricing problem;
//! * `lsg18_bound` — the single-big-vehicle baseline: the l-th failure is
//!   charged at the l-th closest customer of one vehicle of capacity `m*Q`.
//!
//! The set-cut bound used by the engine is `l1` when the set fits one
//! vehicle and `l2` with the minimum feasible fleet otherwise.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::instance::{ceil_ratio, StochasticInstance};
use crate::lp::{DenseSimplex, LpBackend, LpError, LpStatus, RowId, RowSense};
use crate::monotonicity::{certify_family, check_condition_enumerative};
use crate::recourse::{
    expected_recourse_path_truncated, Path, RecourseError, DEFAULT_TRUNCATION,
};
use crate::stochastic::DemandDistribution;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("set is not certified monotone; the single-route bound needs the monotonicity condition")]
    MonotonicityRequired,
    #[error("expected demand {total} exceeds capacity {capacity}; use the multi-vehicle bounds")]
    OverCapacity { total: f64, capacity: u32 },
    #[error("bound requires Poisson or normal demands, customer {0} is {1}")]
    UnsupportedFamily(usize, String),
    #[error("bound requires integer demand means, customer {id} has mean {mean}")]
    NonIntegerMean { id: usize, mean: f64 },
    #[error("fleet of {m} vehicles cannot carry total expected demand {total} with capacity {capacity}")]
    InfeasibleFleet { m: usize, total: f64, capacity: u32 },
    #[error("set-covering master is infeasible")]
    MasterInfeasible,
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Recourse(#[from] RecourseError),
}

/// Sorts customers by non-increasing depot distance, ties by ascending id.
pub fn sort_non_increasing_distance(set: &[usize], instance: &StochasticInstance) -> Vec<usize> {
    let mut ids = set.to_vec();
    ids.sort_by(|&a, &b| {
        instance.cost(0, b).partial_cmp(&instance.cost(0, a)).unwrap().then(a.cmp(&b))
    });
    ids
}

fn sort_non_decreasing_distance(set: &[usize], instance: &StochasticInstance) -> Vec<usize> {
    let mut ids = set.to_vec();
    ids.sort_by(|&a, &b| {
        instance.cost(0, a).partial_cmp(&instance.cost(0, b)).unwrap().then(a.cmp(&b))
    });
    ids
}

/// Single-route lower bound: the recourse of the set served by one vehicle in
/// non-increasing order of depot distance. Valid (and minimal over orders)
/// for sets respecting the monotonicity condition whose expected demand fits
/// one vehicle.
pub fn l1_single_route(set: &[usize], instance: &StochasticInstance) -> Result<f64, BoundsError> {
    l1_single_route_truncated(set, instance, DEFAULT_TRUNCATION)
}

/// [`l1_single_route`] with an explicit truncation threshold.
pub fn l1_single_route_truncated(
    set: &[usize],
    instance: &StochasticInstance,
    truncation: f64,
) -> Result<f64, BoundsError> {
    let total: f64 = set.iter().map(|&c| instance.mean_demand(c)).sum();
    if total > instance.capacity as f64 + 1e-9 {
        return Err(BoundsError::OverCapacity { total, capacity: instance.capacity });
    }
    let certified = if certify_family(set, instance).is_certified() {
        true
    } else if set.len() <= 10 {
        check_condition_enumerative(set, instance, 3).map(|c| c.is_certified()).unwrap_or(false)
    } else {
        false
    };
    if !certified {
        return Err(BoundsError::MonotonicityRequired);
    }
    l1_unchecked_truncated(set, instance, truncation)
}

/// The sorted-order recourse without the monotonicity check; callers that
/// already certified the instance use this directly.
pub fn l1_single_route_unchecked(
    set: &[usize],
    instance: &StochasticInstance,
) -> Result<f64, BoundsError> {
    l1_unchecked_truncated(set, instance, DEFAULT_TRUNCATION)
}

pub fn l1_unchecked_truncated(
    set: &[usize],
    instance: &StochasticInstance,
    truncation: f64,
) -> Result<f64, BoundsError> {
    let order = sort_non_increasing_distance(set, instance);
    Ok(expected_recourse_path_truncated(&Path::new(order), instance, truncation)?)
}

// ---------------------------------------------------------------------------
// Least-cost assignment tables
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StateFamily {
    Poisson,
    Normal,
}

/// Least-cost assignment table. `order` holds the customers of the set by
/// non-decreasing depot distance; stage `h` (1-based) may serve only
/// customers `h..=n` (the `n-h+1` farthest). The table value at `(h, q)` is
/// the least expected recourse of assigning `q` units of expected demand
/// from stage `h` on; unreachable states are infinite. The demand of `q`
/// assigned units is modeled as Poisson(q) for Poisson customers and as a
/// normal variable with the smallest variance any assignment of `q` units
/// from stages `h..=n` can have.
pub struct GTable {
    pub order: Vec<usize>,
    capacity: u32,
    family: StateFamily,
    means: Vec<u32>,
    value: Vec<Vec<f64>>,
    take: Vec<Vec<bool>>,
    min_variance: Vec<Vec<f64>>,
    truncation: f64,
}

impl GTable {
    /// Table value at stage `h` (1-based) and load `q`.
    pub fn value(&self, h: usize, q: u32) -> f64 {
        self.value[h - 1][q as usize]
    }

    pub fn stages(&self) -> usize {
        self.order.len()
    }

    pub fn stage_mean(&self, h: usize) -> u32 {
        self.means[h - 1]
    }

    fn state_cdf(&self, h: usize, q: u32, t: f64) -> f64 {
        match self.family {
            StateFamily::Poisson => DemandDistribution::Poisson { lambda: q as f64 }.cdf(t),
            StateFamily::Normal => {
                let var = self.min_variance[h - 1][q as usize];
                DemandDistribution::Normal { mean: q as f64, variance: var }.cdf(t)
            }
        }
    }

    /// Expected restock count paid when taking customer `h` moves the state
    /// from `q - mu_h` to `q`, summed over restock counts.
    fn take_mass(&self, h: usize, q: u32) -> f64 {
        let mu = self.means[h - 1];
        let prev = q - mu;
        let qf = self.capacity as f64;
        let floor = self.truncation.max(1e-15);
        let mut mass = 0.0;
        for l in 1..=10_000u32 {
            let t = l as f64 * qf;
            let term = (self.state_cdf(h, prev, t) - self.state_cdf(h, q, t)).max(0.0);
            if term < floor {
                break;
            }
            mass += term;
        }
        mass
    }

    /// Replays the table's cost model on a concrete stage subset (1-based,
    /// strictly increasing). This is the objective coefficient a generated
    /// column carries in the set-covering master, so the master and the
    /// pricing problem price paths identically.
    pub fn column_cost(&self, stages: &[usize], instance: &StochasticInstance) -> f64 {
        let n = self.stages();
        let mut q = 0u32;
        let mut cost = 0.0;
        for &h in stages.iter().rev() {
            let customer = self.order[h - 1];
            let q_new = q + self.means[h - 1];
            let term = if h == n {
                let fail = 1.0 - self.state_cdf(h, q_new, self.capacity as f64);
                let fail = if fail < self.truncation.max(1e-15) { 0.0 } else { fail };
                2.0 * instance.cost(0, customer) * fail
            } else {
                2.0 * instance.cost(0, customer) * self.take_mass(h, q_new)
            };
            cost += term;
            q = q_new;
        }
        cost
    }
}

/// Builds the least-cost assignment table for `set`, optionally in pricing
/// mode where taking stage `h` additionally earns the dual price of its
/// customer. Demands must be all Poisson or all normal, with integer means.
pub fn build_g_table(
    set: &[usize],
    instance: &StochasticInstance,
    duals: Option<&BTreeMap<usize, f64>>,
) -> Result<GTable, BoundsError> {
    build_g_table_truncated(set, instance, duals, DEFAULT_TRUNCATION)
}

/// [`build_g_table`] with an explicit truncation threshold.
pub fn build_g_table_truncated(
    set: &[usize],
    instance: &StochasticInstance,
    duals: Option<&BTreeMap<usize, f64>>,
    truncation: f64,
) -> Result<GTable, BoundsError> {
    let order = sort_non_decreasing_distance(set, instance);
    let n = order.len();
    assert!(n >= 1, "empty set has no assignment table");
    let q_cap = instance.capacity;

    let mut family = None;
    let mut means = Vec::with_capacity(n);
    let mut variances = Vec::with_capacity(n);
    for &c in &order {
        let d = instance.demand(c);
        let fam = match d {
            DemandDistribution::Poisson { .. } => StateFamily::Poisson,
            DemandDistribution::Normal { .. } => StateFamily::Normal,
            other => {
                return Err(BoundsError::UnsupportedFamily(c, other.family_name().to_string()))
            }
        };
        match family {
            None => family = Some(fam),
            Some(f) if f == fam => {}
            Some(_) => return Err(BoundsError::UnsupportedFamily(c, d.family_name().to_string())),
        }
        let mean = d.mean();
        if (mean - mean.round()).abs() > 1e-9 || mean < 1.0 {
            return Err(BoundsError::NonIntegerMean { id: c, mean });
        }
        means.push(mean.round() as u32);
        variances.push(d.variance());
    }
    let family = family.expect("at least one customer");

    // Minimal-variance subset sums over suffixes {h..n}, for the normal
    // state distributions. Entry [h-1][q]; infinite when no subset of the
    // suffix sums to q.
    let width = q_cap as usize + 1;
    let mut min_variance = vec![vec![f64::INFINITY; width]; n];
    if family == StateFamily::Normal {
        let mut next = vec![f64::INFINITY; width];
        next[0] = 0.0;
        for h in (1..=n).rev() {
            let mu = means[h - 1] as usize;
            let var = variances[h - 1];
            let mut cur = vec![f64::INFINITY; width];
            for q in 0..width {
                let skip = next[q];
                let take =
                    if q >= mu { next[q - mu] + var } else { f64::INFINITY };
                cur[q] = skip.min(take);
            }
            min_variance[h - 1] = cur.clone();
            next = cur;
        }
    }

    let mut table = GTable {
        order,
        capacity: q_cap,
        family,
        means,
        value: vec![vec![f64::INFINITY; width]; n],
        take: vec![vec![false; width]; n],
        min_variance,
        truncation,
    };

    let dual_of =
        |customer: usize| -> f64 { duals.and_then(|d| d.get(&customer).copied()).unwrap_or(0.0) };

    // Boundary stage h = n: assign nothing or exactly customer n.
    let last_mu = table.means[n - 1];
    let last_customer = table.order[n - 1];
    table.value[n - 1][0] = 0.0;
    if last_mu <= q_cap {
        let fail = 1.0 - table.state_cdf(n, last_mu, q_cap as f64);
        // The single-failure charge obeys the same truncation threshold as
        // the running sums, so a boundary-stage singleton prices exactly
        // like its path evaluation.
        let fail = if fail < truncation.max(1e-15) { 0.0 } else { fail };
        table.value[n - 1][last_mu as usize] =
            2.0 * instance.cost(0, last_customer) * fail - dual_of(last_customer);
        table.take[n - 1][last_mu as usize] = true;
    }

    for h in (1..n).rev() {
        let mu = table.means[h - 1];
        let customer = table.order[h - 1];
        for q in 0..width as u32 {
            let skip = table.value[h][q as usize];
            let mut best = skip;
            let mut took = false;
            if q >= mu && table.value[h][(q - mu) as usize].is_finite() {
                let mass = table.take_mass(h, q);
                let take = table.value[h][(q - mu) as usize]
                    + 2.0 * instance.cost(0, customer) * mass
                    - dual_of(customer);
                if take < best {
                    best = take;
                    took = true;
                }
            }
            table.value[h - 1][q as usize] = best;
            table.take[h - 1][q as usize] = took;
        }
    }
    Ok(table)
}

/// Two-stage dynamic program bound for `set` served by exactly `m` vehicles
/// (idle vehicles allowed). Errors when the fleet cannot carry the load.
pub fn l2_dp(set: &[usize], m: usize, instance: &StochasticInstance) -> Result<f64, BoundsError> {
    l2_dp_truncated(set, m, instance, DEFAULT_TRUNCATION)
}

/// [`l2_dp`] with an explicit truncation threshold.
pub fn l2_dp_truncated(
    set: &[usize],
    m: usize,
    instance: &StochasticInstance,
    truncation: f64,
) -> Result<f64, BoundsError> {
    assert!(m >= 1, "need at least one vehicle");
    let table = build_g_table_truncated(set, instance, None, truncation)?;
    let n = table.stages();
    let total: u32 = (1..=n).map(|h| table.stage_mean(h)).sum();
    let q_cap = instance.capacity;
    if total as u64 > m as u64 * q_cap as u64 {
        return Err(BoundsError::InfeasibleFleet { m, total: total as f64, capacity: q_cap });
    }
    // Vehicle k may serve only stages >= k; stages beyond n carry nothing.
    let g_k = |k: usize, q: u32| -> f64 {
        if k > n {
            if q == 0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            table.value(k, q)
        }
    };
    let d_total = total as usize;
    let mut h_prev = vec![f64::INFINITY; d_total + 1];
    for (q, slot) in h_prev.iter_mut().enumerate() {
        if q <= q_cap as usize {
            *slot = g_k(1, q as u32);
        }
    }
    for k in 2..=m {
        let mut h_next = vec![f64::INFINITY; d_total + 1];
        for (q, slot) in h_next.iter_mut().enumerate() {
            if q > k * q_cap as usize {
                continue;
            }
            let mut best = f64::INFINITY;
            for x in 0..=q.min(q_cap as usize) {
                let g = g_k(k, x as u32);
                if !g.is_finite() {
                    continue;
                }
                let rest = h_prev[q - x];
                if rest.is_finite() && g + rest < best {
                    best = g + rest;
                }
            }
            *slot = best;
        }
        h_prev = h_next;
    }
    Ok(h_prev[d_total])
}

/// Single-big-vehicle baseline: one vehicle of capacity `m*Q`, the l-th
/// failure charged at the l-th closest customer, truncated at l = |S|.
pub fn lsg18_bound(
    set: &[usize],
    m: usize,
    instance: &StochasticInstance,
) -> Result<f64, BoundsError> {
    if set.is_empty() {
        return Ok(0.0);
    }
    let by_distance = sort_non_decreasing_distance(set, instance);
    let total = crate::stochastic::sum_of(
        &set.iter().map(|&c| instance.demand(c).clone()).collect::<Vec<_>>(),
    )
    .map_err(|e| BoundsError::Recourse(RecourseError::Distribution(e)))?;
    let big_q = m as f64 * instance.capacity as f64;
    let mut bound = 0.0;
    for (l, &customer) in by_distance.iter().enumerate() {
        let tail = 1.0 - total.cdf((l as f64 + 1.0) * big_q);
        if tail <= 0.0 {
            break;
        }
        bound += 2.0 * tail * instance.cost(0, customer);
    }
    Ok(bound)
}

// ---------------------------------------------------------------------------
// Set-covering bound by column generation
// ---------------------------------------------------------------------------

/// Result of the set-covering bound with its convergence diagnostics.
pub struct SetCoveringOutcome {
    pub bound: f64,
    pub columns_generated: usize,
    pub pricing_rounds: usize,
    /// Dual prices of the covering rows at convergence.
    pub final_duals: BTreeMap<usize, f64>,
    /// Dual of the cardinality row at convergence.
    pub final_cardinality_dual: f64,
}

/// Set-covering lower bound: linear relaxation of choosing exactly `m`
/// capacity-feasible paths covering `set`, path costs from the assignment
/// table's cost model, solved by column generation. Pricing stops when the
/// cheapest priced path is no cheaper than the dual of the cardinality row.
pub fn l3_set_covering(
    set: &[usize],
    m: usize,
    instance: &StochasticInstance,
) -> Result<f64, BoundsError> {
    Ok(l3_set_covering_detailed(set, m, instance)?.bound)
}

pub fn l3_set_covering_detailed(
    set: &[usize],
    m: usize,
    instance: &StochasticInstance,
) -> Result<SetCoveringOutcome, BoundsError> {
    l3_detailed_truncated(set, m, instance, DEFAULT_TRUNCATION)
}

/// [`l3_set_covering_detailed`] with an explicit truncation threshold.
pub fn l3_detailed_truncated(
    set: &[usize],
    m: usize,
    instance: &StochasticInstance,
    truncation: f64,
) -> Result<SetCoveringOutcome, BoundsError> {
    let total: f64 = set.iter().map(|&c| instance.mean_demand(c)).sum();
    let min_m = ceil_ratio(total, instance.capacity);
    if m < min_m {
        return Err(BoundsError::InfeasibleFleet { m, total, capacity: instance.capacity });
    }
    // More vehicles than customers: the extra ones stay idle.
    let m = m.min(set.len());

    let plain = build_g_table_truncated(set, instance, None, truncation)?;
    let q_cap = instance.capacity;

    let mut lp = DenseSimplex::new();
    let mut cover_rows: BTreeMap<usize, RowId> = BTreeMap::new();
    for &c in plain.order.iter() {
        cover_rows.insert(c, lp.add_row(&[], RowSense::Ge, 1.0));
    }
    let cardinality = lp.add_row(&[], RowSense::Eq, m as f64);

    // Feasibility column: covers everything, priced far above any real path.
    let big_m_cost = 1e7;
    let art_coeffs: Vec<(RowId, f64)> = cover_rows
        .values()
        .map(|&r| (r, 1.0))
        .chain(std::iter::once((cardinality, 1.0)))
        .collect();
    let artificial = lp.add_column(big_m_cost, 0.0, f64::INFINITY, &art_coeffs);

    let mut pool: BTreeMap<Vec<usize>, ()> = BTreeMap::new();
    let add_column =
        |lp: &mut DenseSimplex, pool: &mut BTreeMap<Vec<usize>, ()>, customers: Vec<usize>, cost: f64| -> bool {
            let mut key = customers.clone();
            key.sort_unstable();
            if pool.contains_key(&key) {
                return false;
            }
            let coeffs: Vec<(RowId, f64)> = customers
                .iter()
                .map(|c| (cover_rows[c], 1.0))
                .chain(std::iter::once((cardinality, 1.0)))
                .collect();
            lp.add_column(cost.max(0.0), 0.0, f64::INFINITY, &coeffs);
            pool.insert(key, ());
            true
        };

    // Initial pool: singleton paths plus a greedy first-fit split into m
    // capacity-respecting paths.
    for (idx, &c) in plain.order.iter().enumerate() {
        let cost = plain.column_cost(&[idx + 1], instance);
        add_column(&mut lp, &mut pool, vec![c], cost);
    }
    {
        let mut by_mean: Vec<usize> = (1..=plain.stages()).collect();
        by_mean.sort_by(|&a, &b| plain.means[b - 1].cmp(&plain.means[a - 1]).then(a.cmp(&b)));
        let mut bins: Vec<(u32, Vec<usize>)> = vec![(0, Vec::new()); m];
        let mut ok = true;
        for h in by_mean {
            let mu = plain.means[h - 1];
            match bins.iter_mut().find(|(load, _)| *load + mu <= q_cap) {
                Some((load, stages)) => {
                    *load += mu;
                    stages.push(h);
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            for (_, mut stages) in bins {
                if stages.is_empty() {
                    continue;
                }
                stages.sort_unstable();
                let customers: Vec<usize> = stages.iter().map(|&h| plain.order[h - 1]).collect();
                let cost = plain.column_cost(&stages, instance);
                add_column(&mut lp, &mut pool, customers, cost);
            }
        }
    }

    let mut rounds = 0usize;
    let max_rounds = 400 + 40 * set.len();
    // Assigned on the first pass; the loop always solves at least once.
    #[allow(unused_assignments)]
    let mut converged: Option<(BTreeMap<usize, f64>, f64)> = None;
    // Most negative reduced cost still priced at exit. Zero at convergence;
    // strictly negative when the round limit fires first. The Lagrangian
    // bound master + m * deficit stays valid either way.
    let mut rc_deficit = 0.0f64;
    loop {
        rounds += 1;
        match lp.solve()? {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return Err(BoundsError::MasterInfeasible),
        }
        let duals: BTreeMap<usize, f64> =
            cover_rows.iter().map(|(&c, &r)| (c, lp.row_dual(r))).collect();
        let sigma = lp.row_dual(cardinality);
        converged = Some((duals.clone(), sigma));

        let priced = build_g_table_truncated(set, instance, Some(&duals), truncation)?;
        // Cheapest non-empty assignment.
        let mut best_q = None;
        let mut best_val = f64::INFINITY;
        for q in 1..=q_cap {
            let v = priced.value(1, q);
            if v < best_val {
                best_val = v;
                best_q = Some(q);
            }
        }
        let Some(mut q) = best_q else { break };
        rc_deficit = (best_val - sigma).min(0.0);
        if best_val >= sigma - 1e-7 || rounds > max_rounds {
            break;
        }
        // Reconstruct the chosen stages.
        let mut stages = Vec::new();
        for h in 1..=priced.stages() {
            if priced.take[h - 1][q as usize] {
                stages.push(h);
                q -= priced.means[h - 1];
            }
            if q == 0 {
                break;
            }
        }
        if stages.is_empty() {
            break;
        }
        let customers: Vec<usize> = stages.iter().map(|&h| priced.order[h - 1]).collect();
        let cost = plain.column_cost(&stages, instance);
        if !add_column(&mut lp, &mut pool, customers, cost) {
            break; // duplicate under numerical noise; treat as converged
        }
    }
    // Force the artificial column out so its big cost cannot pollute the
    // bound; if the master cannot live without it, the model is infeasible.
    lp.set_var_bounds(artificial, 0.0, 0.0);
    match lp.solve()? {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(BoundsError::MasterInfeasible),
    }
    let (final_duals, final_cardinality_dual) =
        converged.expect("at least one master solve happened");
    Ok(SetCoveringOutcome {
        bound: (lp.objective_value() + m as f64 * rc_deficit).max(0.0),
        columns_generated: pool.len(),
        pricing_rounds: rounds,
        final_duals,
        final_cardinality_dual,
    })
}

/// Per-fleet-size recourse lower bounds `m -> L_m` over the instance's
/// admissible fleet sizes, from the set-covering bound on the full customer
/// set.
pub fn fleet_lb_vector(instance: &StochasticInstance) -> Result<BTreeMap<usize, f64>, BoundsError> {
    fleet_lb_vector_truncated(instance, DEFAULT_TRUNCATION)
}

/// [`fleet_lb_vector`] with an explicit truncation threshold.
pub fn fleet_lb_vector_truncated(
    instance: &StochasticInstance,
    truncation: f64,
) -> Result<BTreeMap<usize, f64>, BoundsError> {
    let all: Vec<usize> = (1..=instance.num_customers()).collect();
    let mut out = BTreeMap::new();
    for &m in &instance.fleet_sizes {
        let v = l3_detailed_truncated(&all, m, instance, truncation)?.bound;
        out.insert(m, v);
    }
    Ok(out)
}

/// Bound used by the engine's set cuts: single-route when the set fits one
/// vehicle, otherwise the dynamic program with the smallest feasible fleet.
pub fn set_cut_bound(set: &[usize], instance: &StochasticInstance) -> Result<f64, BoundsError> {
    set_cut_bound_truncated(set, instance, DEFAULT_TRUNCATION)
}

/// [`set_cut_bound`] with an explicit truncation threshold.
pub fn set_cut_bound_truncated(
    set: &[usize],
    instance: &StochasticInstance,
    truncation: f64,
) -> Result<f64, BoundsError> {
    let total: f64 = set.iter().map(|&c| instance.mean_demand(c)).sum();
    if total <= instance.capacity as f64 + 1e-9 {
        l1_unchecked_truncated(set, instance, truncation)
    } else {
        let m = ceil_ratio(total, instance.capacity);
        l2_dp_truncated(set, m, instance, truncation)
    }
}
