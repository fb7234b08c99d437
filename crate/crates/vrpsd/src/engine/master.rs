//! Master model: edge, recourse and fleet variables with the structural rows
//! and a growing cut pool.

use std::collections::{BTreeMap, BTreeSet};

use crate::cuts::{CutKind, LinearCut, SolutionValues};
use crate::instance::StochasticInstance;
use crate::lp::{DenseSimplex, LpBackend, LpError, LpStatus, RowSense, VarId};

/// Integrality tolerance on edge and fleet variables.
pub const INT_TOL: f64 = 1e-6;

pub struct MasterModel {
    pub lp: DenseSimplex,
    /// All edges (i, j) with i < j; depot edges are (0, i).
    pub edges: Vec<(usize, usize)>,
    pub edge_vars: Vec<VarId>,
    edge_index: BTreeMap<(usize, usize), usize>,
    pub theta_vars: Vec<VarId>,
    pub fleet_vars: BTreeMap<usize, VarId>,
    pub n: usize,
    cut_keys: BTreeSet<(CutKind, Vec<usize>)>,
    pub cuts_by_kind: BTreeMap<CutKind, usize>,
    /// Append-only pool of every cut added, for dumps and diagnostics.
    pub pool: Vec<LinearCut>,
}

/// Snapshot of the master variables at the last LP solve.
pub struct MasterSolution {
    pub objective: f64,
    pub edge_values: Vec<f64>,
    pub theta_values: Vec<f64>,
    pub fleet_values: BTreeMap<usize, f64>,
    /// Dense (n+1)x(n+1) symmetric value matrix for O(1) edge lookups.
    dense: Vec<f64>,
    n: usize,
}

impl MasterSolution {
    /// Builds a solution view from explicit values (diagnostics and tests).
    pub fn from_values(
        n: usize,
        edges: &[(usize, usize, f64)],
        theta_values: Vec<f64>,
        fleet_values: BTreeMap<usize, f64>,
    ) -> MasterSolution {
        let mut dense = vec![0.0; (n + 1) * (n + 1)];
        let mut edge_values = Vec::with_capacity(edges.len());
        for &(i, j, v) in edges {
            dense[i * (n + 1) + j] = v;
            dense[j * (n + 1) + i] = v;
            edge_values.push(v);
        }
        let objective = theta_values.iter().sum();
        MasterSolution { objective, edge_values, theta_values, fleet_values, dense, n }
    }

    #[inline]
    pub fn edge(&self, i: usize, j: usize) -> f64 {
        self.dense[i * (self.n + 1) + j]
    }

    pub fn theta_sum(&self) -> f64 {
        self.theta_values.iter().sum()
    }

    /// True when every edge and fleet variable sits on an integer.
    pub fn is_integer(&self) -> bool {
        self.edge_values.iter().all(|v| (v - v.round()).abs() <= INT_TOL)
            && self.fleet_values.values().all(|v| (v - v.round()).abs() <= INT_TOL)
    }

    pub fn fractional_edges(&self) -> bool {
        self.edge_values.iter().any(|v| (v - v.round()).abs() > INT_TOL)
    }
}

impl SolutionValues for MasterSolution {
    fn edge_value(&self, i: usize, j: usize) -> f64 {
        self.edge(i, j)
    }
    fn theta_value(&self, customer: usize) -> f64 {
        self.theta_values[customer - 1]
    }
    fn fleet_value(&self, m: usize) -> f64 {
        self.fleet_values.get(&m).copied().unwrap_or(0.0)
    }
}

impl MasterModel {
    /// Builds the relaxed master: objective travel plus per-customer recourse
    /// variables, depot-degree, customer-degree and fleet-choice rows, and
    /// the fleet lower-bound row over the supplied `L_m` values.
    pub fn build(
        instance: &StochasticInstance,
        fleet_bounds: &BTreeMap<usize, f64>,
    ) -> MasterModel {
        let n = instance.num_customers();
        let mut lp = DenseSimplex::new();
        let mut edges = Vec::new();
        let mut edge_vars = Vec::new();
        let mut edge_index = BTreeMap::new();
        for i in 1..=n {
            let v = lp.add_var(instance.cost(0, i), 0.0, 2.0);
            edge_index.insert((0, i), edges.len());
            edges.push((0, i));
            edge_vars.push(v);
        }
        for i in 1..=n {
            for j in (i + 1)..=n {
                let v = lp.add_var(instance.cost(i, j), 0.0, 1.0);
                edge_index.insert((i, j), edges.len());
                edges.push((i, j));
                edge_vars.push(v);
            }
        }
        let theta_vars: Vec<VarId> =
            (0..n).map(|_| lp.add_var(1.0, 0.0, f64::INFINITY)).collect();
        let mut fleet_vars = BTreeMap::new();
        for &m in &instance.fleet_sizes {
            // A singleton fleet choice is fixed outright.
            let (lb, ub) = if instance.fleet_sizes.len() == 1 { (1.0, 1.0) } else { (0.0, 1.0) };
            fleet_vars.insert(m, lp.add_var(0.0, lb, ub));
        }

        // Depot degree: sum x_{0i} - sum 2 m z_m = 0.
        let mut row = Vec::new();
        for i in 1..=n {
            row.push((edge_vars[edge_index[&(0, i)]], 1.0));
        }
        for (&m, &z) in &fleet_vars {
            row.push((z, -2.0 * m as f64));
        }
        lp.add_row(&row, RowSense::Eq, 0.0);

        // Customer degrees: every customer has two incident edge traversals.
        for h in 1..=n {
            let mut row = Vec::new();
            for (k, &(i, j)) in edges.iter().enumerate() {
                if i == h || j == h {
                    row.push((edge_vars[k], 1.0));
                }
            }
            lp.add_row(&row, RowSense::Eq, 2.0);
        }

        // Exactly one fleet size.
        let fleet_row: Vec<(VarId, f64)> =
            fleet_vars.values().map(|&z| (z, 1.0)).collect();
        lp.add_row(&fleet_row, RowSense::Eq, 1.0);

        let mut master = MasterModel {
            lp,
            edges,
            edge_vars,
            edge_index,
            theta_vars,
            fleet_vars,
            n,
            cut_keys: BTreeSet::new(),
            cuts_by_kind: BTreeMap::new(),
            pool: Vec::new(),
        };

        // Fleet lower-bound row: theta(N) >= sum_m L_m z_m.
        let fleet_cut = crate::cuts::make_fleet_lb_cut(n, fleet_bounds);
        master.add_cut(&fleet_cut);
        master
    }

    pub fn edge_var(&self, i: usize, j: usize) -> VarId {
        let key = if i < j { (i, j) } else { (j, i) };
        self.edge_vars[self.edge_index[&key]]
    }

    /// Adds a cut unless an identical payload is already pooled. Returns
    /// whether the cut was new.
    pub fn add_cut(&mut self, cut: &LinearCut) -> bool {
        if !self.cut_keys.insert(cut.dedup_key()) {
            return false;
        }
        let mut coeffs: Vec<(VarId, f64)> = Vec::new();
        for &((i, j), a) in &cut.edge_coeffs {
            coeffs.push((self.edge_var(i, j), a));
        }
        for &(c, a) in &cut.theta_coeffs {
            coeffs.push((self.theta_vars[c - 1], a));
        }
        for &(m, a) in &cut.fleet_coeffs {
            coeffs.push((self.fleet_vars[&m], a));
        }
        let sense = match cut.sense {
            crate::cuts::CutSense::Ge => RowSense::Ge,
            crate::cuts::CutSense::Le => RowSense::Le,
        };
        self.lp.add_row(&coeffs, sense, cut.rhs);
        *self.cuts_by_kind.entry(cut.kind).or_insert(0) += 1;
        self.pool.push(cut.clone());
        true
    }

    /// One line per pooled cut: kind, payload, right-hand side and the
    /// violation at the given solution.
    pub fn dump_cut_pool(&self, sol: &MasterSolution) -> Vec<String> {
        self.pool
            .iter()
            .map(|cut| {
                format!(
                    "{:?} {:?} rhs={:.6} violation={:.3e}",
                    cut.kind,
                    cut.provenance,
                    cut.rhs,
                    cut.violation(sol)
                )
            })
            .collect()
    }

    pub fn solve(&mut self) -> Result<LpStatus, LpError> {
        self.lp.solve()
    }

    pub fn snapshot(&self) -> MasterSolution {
        let edge_values: Vec<f64> =
            self.edge_vars.iter().map(|&v| self.lp.var_value(v)).collect();
        let mut dense = vec![0.0; (self.n + 1) * (self.n + 1)];
        for (k, &(i, j)) in self.edges.iter().enumerate() {
            dense[i * (self.n + 1) + j] = edge_values[k];
            dense[j * (self.n + 1) + i] = edge_values[k];
        }
        MasterSolution {
            objective: self.lp.objective_value(),
            edge_values,
            theta_values: self.theta_vars.iter().map(|&v| self.lp.var_value(v)).collect(),
            fleet_values: self
                .fleet_vars
                .iter()
                .map(|(&m, &v)| (m, self.lp.var_value(v)))
                .collect(),
            dense,
            n: self.n,
        }
    }

    /// Extracts routes from an integer solution. Returns `None` when the
    /// support is not a set of depot-anchored paths (e.g. a subtour is still
    /// present).
    pub fn extract_routes(&self, sol: &MasterSolution) -> Option<Vec<Vec<usize>>> {
        let n = self.n;
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
        let mut depot_double: Vec<usize> = Vec::new();
        for &(i, j) in self.edges.iter() {
            let v = sol.edge(i, j);
            let r = v.round();
            if (v - r).abs() > INT_TOL {
                return None;
            }
            let r = r as i64;
            match r {
                0 => {}
                1 => {
                    adj[i].push(j);
                    adj[j].push(i);
                }
                2 if i == 0 => depot_double.push(j),
                _ => return None,
            }
        }
        let mut used = vec![false; n + 1];
        let mut routes = Vec::new();
        for &c in &depot_double {
            if !adj[c].is_empty() {
                return None;
            }
            used[c] = true;
            routes.push(vec![c]);
        }
        // Chains start at customers adjacent to the depot; walking marks both
        // ends used, so each chain is emitted once.
        let mut starts: Vec<usize> = adj[0].clone();
        starts.sort_unstable();
        for &s in &starts {
            if used[s] {
                continue;
            }
            let mut route = vec![s];
            used[s] = true;
            let mut prev = 0usize;
            let mut cur = s;
            loop {
                // Every chain customer has degree 2; leave by the edge we did
                // not come in by.
                let nexts = &adj[cur];
                if nexts.len() != 2 {
                    return None;
                }
                let next = if nexts[0] == prev { nexts[1] } else if nexts[1] == prev { nexts[0] } else {
                    return None;
                };
                if next == 0 {
                    break;
                }
                if used[next] {
                    return None;
                }
                used[next] = true;
                route.push(next);
                prev = cur;
                cur = next;
            }
            routes.push(route);
        }
        if (1..=n).any(|c| !used[c]) {
            return None; // a depot-disconnected cycle remains
        }
        Some(routes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{CustomerNode, DistanceRounding, StochasticInstance};
    use crate::stochastic::DemandDistribution;
    use std::collections::BTreeSet;

    fn instance(n: usize, fleet: BTreeSet<usize>) -> StochasticInstance {
        let nodes = (1..=n)
            .map(|id| CustomerNode {
                id,
                x: id as f64,
                y: 0.0,
                demand: DemandDistribution::Poisson { lambda: 3.0 },
            })
            .collect();
        StochasticInstance::new(
            "master".into(),
            "test".into(),
            (0.0, 0.0),
            nodes,
            10,
            fleet,
            DistanceRounding::Exact,
            None,
        )
        .unwrap()
    }

    #[test]
    fn structural_rows_and_variables() {
        let inst = instance(5, BTreeSet::from([2, 3]));
        let bounds = BTreeMap::from([(2, 1.5), (3, 0.5)]);
        let master = MasterModel::build(&inst, &bounds);
        // One depot-degree row, five customer-degree rows, one fleet-choice
        // row, one fleet lower-bound row.
        assert_eq!(crate::lp::LpBackend::num_rows(&master.lp), 1 + 5 + 1 + 1);
        // Edges: 5 depot + C(5,2) customer pairs; plus 5 theta and 2 fleet.
        assert_eq!(master.edges.len(), 5 + 10);
        assert_eq!(master.theta_vars.len(), 5);
        assert_eq!(master.fleet_vars.len(), 2);
        assert_eq!(master.cuts_by_kind[&CutKind::FleetLb], 1);
    }

    #[test]
    fn singleton_fleet_variable_is_fixed() {
        let inst = instance(4, BTreeSet::from([2]));
        let master = MasterModel::build(&inst, &BTreeMap::from([(2, 0.0)]));
        let z = master.fleet_vars[&2];
        assert_eq!(crate::lp::LpBackend::var_bounds(&master.lp, z), (1.0, 1.0));
    }

    #[test]
    fn route_extraction_reads_chains_singletons_and_rejects_subtours() {
        let inst = instance(5, BTreeSet::from([2, 3]));
        let master = MasterModel::build(&inst, &BTreeMap::from([(2, 0.0), (3, 0.0)]));
        // Chain (0,1,2,0), singleton (0,3,0) via a doubled depot edge, chain
        // (0,4,5,0).
        let sol = MasterSolution::from_values(
            5,
            &[
                (0, 1, 1.0),
                (1, 2, 1.0),
                (0, 2, 1.0),
                (0, 3, 2.0),
                (0, 4, 1.0),
                (4, 5, 1.0),
                (0, 5, 1.0),
            ],
            vec![0.0; 5],
            BTreeMap::new(),
        );
        assert!(sol.is_integer());
        let routes = master.extract_routes(&sol).unwrap();
        assert_eq!(routes, vec![vec![3], vec![1, 2], vec![4, 5]]);

        // A depot-disconnected triangle is rejected.
        let bad = MasterSolution::from_values(
            5,
            &[
                (1, 2, 1.0),
                (2, 3, 1.0),
                (1, 3, 1.0),
                (0, 4, 1.0),
                (4, 5, 1.0),
                (0, 5, 1.0),
            ],
            vec![0.0; 5],
            BTreeMap::new(),
        );
        assert!(master.extract_routes(&bad).is_none());
    }

    #[test]
    fn fractional_solutions_are_flagged() {
        let sol = MasterSolution::from_values(
            3,
            &[(0, 1, 1.0), (1, 2, 0.5)],
            vec![0.0; 3],
            BTreeMap::new(),
        );
        assert!(!sol.is_integer());
        assert!(sol.fractional_edges());
    }
}
