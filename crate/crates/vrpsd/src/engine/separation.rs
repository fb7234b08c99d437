//! Separation routines: rounded capacity inequalities over the fractional
//! support graph, component analysis for set and path cuts, and the
//! subpath cuts generated at integer solutions.

use std::collections::BTreeMap;

use crate::bounds::{l1_unchecked_truncated, set_cut_bound_truncated};
use crate::cuts::{make_p_cut, make_r_cut, make_s_cut, LinearCut};
use crate::instance::{ceil_ratio, StochasticInstance};
use crate::recourse::{expected_recourse_path_truncated, Path};

use super::master::MasterSolution;

/// Edges below this weight are not part of the support graph.
const SUPPORT_TOL: f64 = 1e-9;

/// Cut-violation threshold.
pub const VIOLATION_TOL: f64 = 1e-6;

/// Connected components of the customer support graph (depot edges excluded).
pub fn support_components(sol: &MasterSolution, n: usize) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..=n).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        let mut root = x;
        while parent[root] != root {
            root = parent[root];
        }
        let mut cur = x;
        while parent[cur] != root {
            let next = parent[cur];
            parent[cur] = root;
            cur = next;
        }
        root
    }
    for i in 1..=n {
        for j in (i + 1)..=n {
            if sol.edge(i, j) > SUPPORT_TOL {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for c in 1..=n {
        groups.entry(find(&mut parent, c)).or_default().push(c);
    }
    groups.into_values().collect()
}

fn capacity_violation(set: &[usize], sol: &MasterSolution, instance: &StochasticInstance) -> f64 {
    let mut inside = 0.0;
    for (ai, &a) in set.iter().enumerate() {
        for &b in &set[ai + 1..] {
            inside += sol.edge(a, b);
        }
    }
    let total: f64 = set.iter().map(|&c| instance.mean_demand(c)).sum();
    inside - (set.len() as f64 - ceil_ratio(total, instance.capacity) as f64)
}

/// Rounded-capacity separation: connected components, exhaustive subsets of
/// small components, and add/remove hill climbing on larger ones. Returns
/// the violated customer sets (most violated first, up to `max_cuts`) and
/// the full component list for set-cut inspection.
pub fn separate_rounded_capacity(
    sol: &MasterSolution,
    instance: &StochasticInstance,
    max_cuts: usize,
) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let n = instance.num_customers();
    let components = support_components(sol, n);
    let mut violated: Vec<(f64, Vec<usize>)> = Vec::new();
    let push = |viol: f64, set: Vec<usize>, out: &mut Vec<(f64, Vec<usize>)>| {
        if viol > VIOLATION_TOL {
            out.push((viol, set));
        }
    };
    for comp in &components {
        if comp.len() <= 12 {
            // Exhaustive subsets of the component, with the inside-edge mass
            // and expected load built up incrementally over the masks.
            let k = comp.len();
            let mut w = vec![0.0f64; k * k];
            for a in 0..k {
                for b in (a + 1)..k {
                    let v = sol.edge(comp[a], comp[b]);
                    w[a * k + b] = v;
                    w[b * k + a] = v;
                }
            }
            let mu: Vec<f64> = comp.iter().map(|&c| instance.mean_demand(c)).collect();
            let mut inside = vec![0.0f64; 1 << k];
            let mut load = vec![0.0f64; 1 << k];
            for mask in 1u32..(1 << k) {
                let low = mask.trailing_zeros() as usize;
                let rest = (mask & (mask - 1)) as usize;
                let mut extra = 0.0;
                let mut bits = rest;
                while bits != 0 {
                    let b = bits.trailing_zeros() as usize;
                    extra += w[low * k + b];
                    bits &= bits - 1;
                }
                inside[mask as usize] = inside[rest] + extra;
                load[mask as usize] = load[rest] + mu[low];
                let size = mask.count_ones() as f64;
                let k_min = ((load[mask as usize] / instance.capacity as f64) - 1e-9)
                    .ceil()
                    .max(0.0);
                let viol = inside[mask as usize] - (size - k_min);
                if viol > VIOLATION_TOL {
                    let set: Vec<usize> =
                        (0..k).filter(|&b| mask >> b & 1 == 1).map(|b| comp[b]).collect();
                    push(viol, set, &mut violated);
                }
            }
        } else {
            // Component itself, then greedy add/remove hill climbing.
            let mut set = comp.clone();
            let mut viol = capacity_violation(&set, sol, instance);
            push(viol, set.clone(), &mut violated);
            loop {
                let mut best: Option<(f64, Option<usize>, Option<usize>)> = None; // (viol, add, remove)
                for c in 1..=n {
                    if !set.contains(&c) {
                        let mut cand = set.clone();
                        cand.push(c);
                        cand.sort_unstable();
                        let v = capacity_violation(&cand, sol, instance);
                        if v > viol + 1e-12 && best.as_ref().map_or(true, |b| v > b.0) {
                            best = Some((v, Some(c), None));
                        }
                    }
                }
                for &c in set.iter() {
                    if set.len() > 1 {
                        let cand: Vec<usize> = set.iter().copied().filter(|&x| x != c).collect();
                        let v = capacity_violation(&cand, sol, instance);
                        if v > viol + 1e-12 && best.as_ref().map_or(true, |b| v > b.0) {
                            best = Some((v, None, Some(c)));
                        }
                    }
                }
                match best {
                    Some((v, add, remove)) => {
                        if let Some(c) = add {
                            set.push(c);
                            set.sort_unstable();
                        }
                        if let Some(c) = remove {
                            set.retain(|&x| x != c);
                        }
                        viol = v;
                        push(viol, set.clone(), &mut violated);
                    }
                    None => break,
                }
            }
        }
    }
    violated.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    violated.dedup_by(|a, b| a.1 == b.1);
    let sets: Vec<Vec<usize>> = violated.into_iter().take(max_cuts).map(|(_, s)| s).collect();
    (sets, components)
}

/// A support component with its path structure, when it has one.
pub struct FractionalComponent {
    pub customers: Vec<usize>,
    /// The customer sequence when the component's support is a path graph.
    pub path: Option<Vec<usize>>,
}

/// Analyzes the components of a fractional support: a component is a path
/// when its node count equals its positive-edge count plus one (and degrees
/// allow walking it end to end).
pub fn analyze_fractional_components(
    sol: &MasterSolution,
    instance: &StochasticInstance,
) -> Vec<FractionalComponent> {
    let n = instance.num_customers();
    let components = support_components(sol, n);
    components
        .into_iter()
        .map(|comp| {
            let mut edges = Vec::new();
            for (ai, &a) in comp.iter().enumerate() {
                for &b in &comp[ai + 1..] {
                    if sol.edge(a, b) > SUPPORT_TOL {
                        edges.push((a, b));
                    }
                }
            }
            let path = if comp.len() >= 2 && edges.len() + 1 == comp.len() {
                walk_path(&comp, &edges)
            } else {
                None
            };
            FractionalComponent { customers: comp, path }
        })
        .collect()
}

/// Orders a path component's customers end to end; `None` when some node has
/// degree over two (tree, not path).
fn walk_path(comp: &[usize], edges: &[(usize, usize)]) -> Option<Vec<usize>> {
    let mut adjacency: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(a, b) in edges {
        adjacency.entry(a).or_default().push(b);
        adjacency.entry(b).or_default().push(a);
    }
    let mut ends: Vec<usize> = comp
        .iter()
        .copied()
        .filter(|c| adjacency.get(c).map_or(0, |v| v.len()) == 1)
        .collect();
    ends.sort_unstable();
    if ends.len() != 2 {
        return None;
    }
    let mut path = vec![ends[0]];
    let mut prev = 0usize;
    let mut cur = ends[0];
    while path.len() < comp.len() {
        let nexts = adjacency.get(&cur)?;
        let next = nexts.iter().copied().find(|&x| x != prev)?;
        path.push(next);
        prev = cur;
        cur = next;
    }
    Some(path)
}

/// Builds the candidate cuts of the fractional step: a set cut per component
/// and a path cut per path-shaped component. Returns only the violated ones.
pub fn fractional_component_cuts(
    sol: &MasterSolution,
    instance: &StochasticInstance,
    truncation: f64,
    monotone: bool,
    bound_cache: &mut BTreeMap<Vec<usize>, Option<f64>>,
) -> Vec<LinearCut> {
    if !monotone {
        return Vec::new();
    }
    let mut out = Vec::new();
    for comp in analyze_fractional_components(sol, instance) {
        if let Some(bound) = cached_set_bound(&comp.customers, instance, truncation, bound_cache) {
            if let Ok(cut) = make_s_cut(&comp.customers, bound, instance, true) {
                if cut.violation(sol) > VIOLATION_TOL {
                    out.push(cut);
                }
            }
        }
        if let Some(seq) = comp.path {
            let path = Path::new(seq);
            if let Some(q_r) = min_orientation_recourse(&path, instance, truncation) {
                if q_r > 0.0 {
                    if let Ok(cut) = make_p_cut(&path, q_r, true) {
                        if cut.violation(sol) > VIOLATION_TOL {
                            out.push(cut);
                        }
                    }
                }
            }
        }
    }
    out
}

fn min_orientation_recourse(
    path: &Path,
    instance: &StochasticInstance,
    truncation: f64,
) -> Option<f64> {
    let fwd = expected_recourse_path_truncated(path, instance, truncation).ok()?;
    let rev = expected_recourse_path_truncated(&path.reversed(), instance, truncation).ok()?;
    Some(fwd.min(rev))
}

fn cached_set_bound(
    set: &[usize],
    instance: &StochasticInstance,
    truncation: f64,
    cache: &mut BTreeMap<Vec<usize>, Option<f64>>,
) -> Option<f64> {
    let mut key = set.to_vec();
    key.sort_unstable();
    if let Some(v) = cache.get(&key) {
        return *v;
    }
    let bound = set_cut_bound_truncated(&key, instance, truncation).ok().filter(|&b| b > 0.0);
    cache.insert(key, bound);
    bound
}

/// Set cuts for the capacity-inspected sets (violated or not), per the rule
/// that every set surfaced by the separation gets its set cut checked.
pub fn s_cuts_for_inspected_sets(
    sets: &[Vec<usize>],
    sol: &MasterSolution,
    instance: &StochasticInstance,
    truncation: f64,
    monotone: bool,
    bound_cache: &mut BTreeMap<Vec<usize>, Option<f64>>,
) -> Vec<LinearCut> {
    if !monotone {
        return Vec::new();
    }
    let mut out = Vec::new();
    for set in sets {
        if let Some(bound) = cached_set_bound(set, instance, truncation, bound_cache) {
            if let Ok(cut) = make_s_cut(set, bound, instance, true) {
                if cut.violation(sol) > VIOLATION_TOL {
                    out.push(cut);
                }
            }
        }
    }
    out
}

/// Subpath cuts at an integer solution: for every route, every subpath with
/// at most five removals is priced for a path cut and a set cut; the five
/// most violated of each kind are returned. Non-monotone instances get a
/// route cut per whole route instead.
pub fn on_integer_solution(
    routes: &[Vec<usize>],
    sol: &MasterSolution,
    instance: &StochasticInstance,
    truncation: f64,
    monotone: bool,
    recourse_cache: &mut BTreeMap<Vec<usize>, f64>,
    l1_cache: &mut BTreeMap<Vec<usize>, f64>,
) -> Vec<LinearCut> {
    let mut p_candidates: Vec<(f64, LinearCut)> = Vec::new();
    let mut s_candidates: Vec<(f64, LinearCut)> = Vec::new();
    let mut r_candidates: Vec<(f64, LinearCut)> = Vec::new();
    for route in routes {
        if !monotone {
            let path = Path::new(route.clone());
            if let Some(q_r) = min_orientation_recourse(&path, instance, truncation) {
                if q_r > 0.0 {
                    if let Ok(cut) = make_r_cut(&path, q_r) {
                        let v = cut.violation(sol);
                        if v > VIOLATION_TOL {
                            r_candidates.push((v, cut));
                        }
                    }
                }
            }
            continue;
        }
        let t = route.len();
        let max_remove = 5.min(t - 1);
        for removal in subsets_up_to(t, max_remove) {
            let sub: Vec<usize> = route
                .iter()
                .enumerate()
                .filter(|&(k, _)| removal & (1u64 << k) == 0)
                .map(|(_, &c)| c)
                .collect();
            debug_assert!(!sub.is_empty());
            let path = Path::new(sub.clone());
            let q_sub = {
                let mut key = sub.clone();
                let rev: Vec<usize> = sub.iter().rev().copied().collect();
                if rev < key {
                    key = rev;
                }
                match recourse_cache.get(&key) {
                    Some(&v) => v,
                    None => {
                        let v = min_orientation_recourse(&path, instance, truncation)
                            .unwrap_or(0.0);
                        recourse_cache.insert(key, v);
                        v
                    }
                }
            };
            if q_sub > 0.0 {
                if let Ok(cut) = make_p_cut(&path, q_sub, true) {
                    let v = cut.violation(sol);
                    if v > VIOLATION_TOL {
                        p_candidates.push((v, cut));
                    }
                }
            }
            let l1 = {
                let mut key = sub.clone();
                key.sort_unstable();
                match l1_cache.get(&key) {
                    Some(&v) => v,
                    None => {
                        let v = l1_unchecked_truncated(&key, instance, truncation).unwrap_or(0.0);
                        l1_cache.insert(key, v);
                        v
                    }
                }
            };
            if l1 > 0.0 {
                if let Ok(cut) = make_s_cut(&sub, l1, instance, true) {
                    let v = cut.violation(sol);
                    if v > VIOLATION_TOL {
                        s_candidates.push((v, cut));
                    }
                }
            }
        }
    }
    let mut out = Vec::new();
    for mut candidates in [p_candidates, s_candidates, r_candidates] {
        candidates.sort_by(|a, b| {
            b.0.partial_cmp(&a.0).unwrap().then_with(|| a.1.dedup_key().cmp(&b.1.dedup_key()))
        });
        candidates.dedup_by(|a, b| a.1.dedup_key() == b.1.dedup_key());
        out.extend(candidates.into_iter().take(5).map(|(_, c)| c));
    }
    out
}

/// Bitmasks over `t` positions with at most `k` bits set (the removals),
/// enumerated by combination so long routes stay tractable.
fn subsets_up_to(t: usize, k: usize) -> Vec<u64> {
    fn rec(t: usize, k: usize, start: usize, mask: u64, out: &mut Vec<u64>) {
        out.push(mask);
        if k == 0 {
            return;
        }
        for pos in start..t {
            rec(t, k - 1, pos + 1, mask | (1 << pos), out);
        }
    }
    let mut out = Vec::new();
    rec(t, k, 0, 0, &mut out);
    out.sort_unstable();
    out.dedup();
    out
}
