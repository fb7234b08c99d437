//! Reference solver for tiny instances: exhaustive enumeration of all route
//! partitions and orientations via a subset dynamic program. Independent of
//! the branch-and-cut machinery; used as the exactness oracle.

use crate::instance::StochasticInstance;
use crate::stochastic::{clamp_probability, PartialSum};

/// Upper limit on customers for the subset enumeration.
pub const EXHAUSTIVE_LIMIT: usize = 14;

/// Exact optimum (travel plus expected recourse) over every partition of the
/// customers into admissible-fleet routes and every visiting order, with the
/// restock summation evaluated at `truncation`. Returns the optimal routes
/// as well. `None` when no admissible partition exists.
pub fn solve_exhaustive(
    instance: &StochasticInstance,
    truncation: f64,
) -> Option<(f64, Vec<Vec<usize>>)> {
    let n = instance.num_customers();
    assert!(n <= EXHAUSTIVE_LIMIT, "exhaustive oracle is for tiny instances");
    let full: u32 = (1u32 << n) - 1;
    let q = instance.capacity;

    // Prefix demand distribution and expected load per customer subset.
    let mut prefix: Vec<Option<PartialSum>> = vec![None; 1 << n];
    let mut load = vec![0.0f64; 1 << n];
    prefix[0] = Some(PartialSum::empty());
    for mask in 1u32..=full {
        let low = mask.trailing_zeros() as usize;
        let rest = mask & (mask - 1);
        let base = prefix[rest as usize].clone()?;
        let sum = base.with(instance.demand(low + 1)).ok();
        load[mask as usize] = load[rest as usize] + instance.mean_demand(low + 1);
        prefix[mask as usize] = sum;
    }

    // Expected restock cost of visiting `next` after the set `mask`.
    let floor = truncation.max(1e-15);
    let restock = |mask: u32, next: usize| -> f64 {
        let pre = prefix[mask as usize].as_ref().expect("closed family");
        let with_next = prefix[(mask | (1 << (next - 1))) as usize]
            .as_ref()
            .expect("closed family");
        let mean_full = with_next.mean();
        let hard_stop = with_next.upper_bound();
        let mut mass = 0.0;
        for l in 1..10_000u32 {
            let t = l as f64 * q as f64;
            if let Some(ub) = hard_stop {
                if t >= ub {
                    break;
                }
            }
            let term = clamp_probability(pre.cdf(t) - with_next.cdf(t)).unwrap_or(0.0);
            if hard_stop.is_none() && term < floor && t >= mean_full {
                break;
            }
            mass += term;
        }
        2.0 * mass * instance.cost(0, next)
    };

    // Held-Karp over (visited set, last customer): travel from the depot
    // plus restock costs along the way. Every ordering appears, so the
    // cheaper orientation of each route is found automatically.
    let inf = f64::INFINITY;
    let mut hk = vec![inf; (1usize << n) * n];
    let mut hk_parent: Vec<Option<(u32, usize)>> = vec![None; (1usize << n) * n];
    for c in 1..=n {
        let mask = 1u32 << (c - 1);
        hk[(mask as usize) * n + c - 1] = instance.cost(0, c) + restock(0, c);
    }
    for mask in 1u32..=full {
        if load[mask as usize] > q as f64 + 1e-9 {
            continue;
        }
        for last in 1..=n {
            let v = hk[(mask as usize) * n + last - 1];
            if !v.is_finite() {
                continue;
            }
            for next in 1..=n {
                let bit = 1u32 << (next - 1);
                if mask & bit != 0 {
                    continue;
                }
                let nmask = mask | bit;
                if load[nmask as usize] > q as f64 + 1e-9 {
                    continue;
                }
                let cand = v + instance.cost(last, next) + restock(mask, next);
                let slot = (nmask as usize) * n + next - 1;
                if cand < hk[slot] {
                    hk[slot] = cand;
                    hk_parent[slot] = Some((mask, last));
                }
            }
        }
    }

    // Best closed route per feasible subset.
    let mut route_cost = vec![inf; 1usize << n];
    let mut route_end = vec![0usize; 1usize << n];
    for mask in 1u32..=full {
        if load[mask as usize] > q as f64 + 1e-9 {
            continue;
        }
        for last in 1..=n {
            let v = hk[(mask as usize) * n + last - 1];
            if v.is_finite() {
                let closed = v + instance.cost(0, last);
                if closed < route_cost[mask as usize] {
                    route_cost[mask as usize] = closed;
                    route_end[mask as usize] = last;
                }
            }
        }
    }

    // Partition the full set into exactly k routes for each admissible k.
    let max_m = *instance.fleet_sizes.iter().next_back().unwrap();
    let mut part = vec![vec![inf; max_m + 1]; 1usize << n];
    let mut part_choice = vec![vec![0u32; max_m + 1]; 1usize << n];
    part[0][0] = 0.0;
    for mask in 1u32..=full {
        let low_bit = 1u32 << mask.trailing_zeros();
        for k in 1..=max_m {
            let mut best = inf;
            let mut choice = 0u32;
            // The first route takes a submask containing the lowest customer.
            let mut sub = mask;
            loop {
                if sub & low_bit != 0 && route_cost[sub as usize].is_finite() {
                    let rest = part[(mask ^ sub) as usize][k - 1];
                    if rest.is_finite() {
                        let cand = route_cost[sub as usize] + rest;
                        if cand < best {
                            best = cand;
                            choice = sub;
                        }
                    }
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & mask;
            }
            part[mask as usize][k] = best;
            part_choice[mask as usize][k] = choice;
        }
    }

    let mut best: Option<(f64, usize)> = None;
    for &m in &instance.fleet_sizes {
        if m > max_m {
            continue;
        }
        let v = part[full as usize][m];
        if v.is_finite() && best.map_or(true, |(b, _)| v < b) {
            best = Some((v, m));
        }
    }
    let (value, m) = best?;

    // Reconstruct the partition and each route's order.
    let mut routes = Vec::new();
    let mut mask = full;
    let mut k = m;
    while k > 0 {
        let sub = part_choice[mask as usize][k];
        let mut seq = Vec::new();
        let mut cur_mask = sub;
        let mut cur_last = route_end[sub as usize];
        while cur_last != 0 {
            seq.push(cur_last);
            match hk_parent[(cur_mask as usize) * n + cur_last - 1] {
                Some((pm, pl)) => {
                    cur_mask = pm;
                    cur_last = pl;
                }
                None => break,
            }
        }
        seq.reverse();
        routes.push(seq);
        mask ^= sub;
        k -= 1;
    }
    Some((value, routes))
}
