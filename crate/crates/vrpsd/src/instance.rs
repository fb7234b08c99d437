//! Problem data model, CVRPLIB ingestion and instance generation.
//!
//! An instance is immutable after construction: customers with demand
//! distributions, a depot, a symmetric travel-cost matrix and the set of
//! admissible fleet sizes. Two text formats are supported: the TSPLIB-style
//! CVRP format (EUC_2D only), which yields Poisson demands normalized by the
//! collective gcd of demands and capacity, and a native key/value format that
//! round-trips every distribution family exactly.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::stochastic::{DemandDistribution, DiscreteTable};

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported edge weight type {0:?} (only EUC_2D)")]
    UnsupportedEdgeWeightType(String),
    #[error("customer {id} has zero demand")]
    ZeroDemand { id: usize },
    #[error("demand means must be integers for gcd normalization (customer {id} has mean {mean})")]
    NonIntegerMean { id: usize, mean: f64 },
    #[error("generation failed: {0}")]
    Generation(String),
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error(transparent)]
    Distribution(#[from] crate::stochastic::DistributionError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How pairwise costs are derived from coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum DistanceRounding {
    /// TSPLIB EUC_2D: Euclidean distance rounded to the nearest integer.
    NearestInteger,
    /// Exact double-precision Euclidean distance.
    Exact,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CustomerNode {
    /// 1-based customer id, unique within the instance.
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub demand: DemandDistribution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StochasticInstance {
    pub name: String,
    pub source: String,
    pub depot: (f64, f64),
    pub nodes: Vec<CustomerNode>,
    /// Vehicle capacity.
    pub capacity: u32,
    /// Admissible fleet sizes.
    pub fleet_sizes: BTreeSet<usize>,
    pub rounding: DistanceRounding,
    pub seed: Option<u64>,
    /// Dense symmetric cost matrix over nodes 0..=n (0 is the depot).
    cost: Vec<f64>,
}

impl StochasticInstance {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: String,
        source: String,
        depot: (f64, f64),
        nodes: Vec<CustomerNode>,
        capacity: u32,
        fleet_sizes: BTreeSet<usize>,
        rounding: DistanceRounding,
        seed: Option<u64>,
    ) -> Result<Self, InstanceError> {
        let mut inst = Self {
            name,
            source,
            depot,
            nodes,
            capacity,
            fleet_sizes,
            rounding,
            seed,
            cost: Vec::new(),
        };
        inst.validate()?;
        inst.rebuild_costs();
        Ok(inst)
    }

    fn validate(&self) -> Result<(), InstanceError> {
        if self.nodes.is_empty() {
            return Err(InstanceError::Invalid("no customers".into()));
        }
        for (k, node) in self.nodes.iter().enumerate() {
            if node.id != k + 1 {
                return Err(InstanceError::Invalid(format!(
                    "customer ids must be 1..=n in order, found {} at position {}",
                    node.id,
                    k + 1
                )));
            }
            node.demand.validate()?;
        }
        if self.capacity == 0 {
            return Err(InstanceError::Invalid("capacity must be positive".into()));
        }
        if self.fleet_sizes.is_empty() {
            return Err(InstanceError::Invalid("fleet size set is empty".into()));
        }
        let total: f64 = self.nodes.iter().map(|n| n.demand.mean()).sum();
        if !(total > 0.0) {
            return Err(InstanceError::Invalid("total expected demand must be positive".into()));
        }
        Ok(())
    }

    fn rebuild_costs(&mut self) {
        let n = self.nodes.len();
        let coord = |i: usize| -> (f64, f64) {
            if i == 0 {
                self.depot
            } else {
                (self.nodes[i - 1].x, self.nodes[i - 1].y)
            }
        };
        let mut cost = vec![0.0; (n + 1) * (n + 1)];
        for i in 0..=n {
            for j in (i + 1)..=n {
                let (xi, yi) = coord(i);
                let (xj, yj) = coord(j);
                let d = ((xi - xj).powi(2) + (yi - yj).powi(2)).sqrt();
                let d = match self.rounding {
                    DistanceRounding::NearestInteger => (d + 0.5).floor(),
                    DistanceRounding::Exact => d,
                };
                cost[i * (n + 1) + j] = d;
                cost[j * (n + 1) + i] = d;
            }
        }
        self.cost = cost;
    }

    pub fn num_customers(&self) -> usize {
        self.nodes.len()
    }

    /// Travel cost between nodes `i` and `j` (0 is the depot).
    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.cost[i * (self.nodes.len() + 1) + j]
    }

    pub fn demand(&self, customer: usize) -> &DemandDistribution {
        &self.nodes[customer - 1].demand
    }

    pub fn mean_demand(&self, customer: usize) -> f64 {
        self.nodes[customer - 1].demand.mean()
    }

    pub fn total_mean_demand(&self) -> f64 {
        self.nodes.iter().map(|n| n.demand.mean()).sum()
    }

    /// Minimum fleet size the expected demands allow: ceil(sum mu / Q).
    pub fn min_vehicles(&self) -> usize {
        ceil_ratio(self.total_mean_demand(), self.capacity)
    }

    /// Non-fatal modeling caveats, e.g. normal demands with heavy left tails.
    pub fn warnings(&self) -> Vec<String> {
        let mut flagged = Vec::new();
        for node in &self.nodes {
            if let DemandDistribution::Normal { mean, variance } = node.demand {
                if variance.sqrt() > mean / 3.0 {
                    flagged.push(node.id);
                }
            }
        }
        if flagged.is_empty() {
            Vec::new()
        } else {
            vec![format!(
                "{} customer(s) have normal demands with sigma > mean/3 (ids {:?}); \
                 demands are treated as non-negative without truncation, which is \
                 approximate for such heavy left tails",
                flagged.len(),
                flagged
            )]
        }
    }
}

/// `ceil(total / q)` guarded against floating noise in `total`.
pub fn ceil_ratio(total: f64, q: u32) -> usize {
    ((total / q as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Generation profile of an instance with a fixed fleet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FleetProfile {
    pub fixed_size: Option<usize>,
    /// Filling coefficient sum(mu) / (m * Q).
    pub filling_coefficient: f64,
    /// Coefficient of dispersion sigma^2 / mu, common to all customers.
    pub dispersion: f64,
}

impl StochasticInstance {
    /// Profile of a generated instance; `None` when the fleet is not fixed.
    pub fn fleet_profile(&self) -> Option<FleetProfile> {
        if self.fleet_sizes.len() != 1 {
            return None;
        }
        let m = *self.fleet_sizes.iter().next().unwrap();
        let dispersion = match self.nodes.first().map(|n| &n.demand) {
            Some(DemandDistribution::Normal { mean, variance }) => variance / mean,
            _ => 0.0,
        };
        Some(FleetProfile {
            fixed_size: Some(m),
            filling_coefficient: self.total_mean_demand() / (m as f64 * self.capacity as f64),
            dispersion,
        })
    }
}

// ---------------------------------------------------------------------------
// CVRPLIB (TSPLIB-style) parsing
// ---------------------------------------------------------------------------

/// Parses a TSPLIB-style CVRP file into a stochastic instance with Poisson
/// demands whose means are the deterministic demands, after dividing all
/// demands and the capacity by their collective gcd. The fleet is unlimited:
/// M = {ceil(sum mu / Q), ..., n}.
pub fn parse_cvrplib(text: &str) -> Result<StochasticInstance, InstanceError> {
    parse_cvrplib_with(text, false)
}

/// Like [`parse_cvrplib`] but optionally drops zero-demand customers instead
/// of rejecting the file.
pub fn parse_cvrplib_with(
    text: &str,
    drop_zero_demand: bool,
) -> Result<StochasticInstance, InstanceError> {
    let err = |line: usize, message: String| InstanceError::Parse { line, message };

    let mut name = String::from("unnamed");
    let mut dimension: Option<usize> = None;
    let mut capacity: Option<u64> = None;
    let mut edge_weight_type: Option<String> = None;
    let mut coords: Vec<Option<(f64, f64)>> = Vec::new();
    let mut demands: Vec<Option<u64>> = Vec::new();
    let mut depot_id: Option<usize> = None;
    let mut saw_coord_section = false;
    let mut saw_demand_section = false;

    #[derive(PartialEq)]
    enum Section {
        Header,
        Coords,
        Demands,
        Depot,
        Done,
    }
    let mut section = Section::Header;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let upper = line.to_ascii_uppercase();
        if upper == "EOF" {
            section = Section::Done;
            continue;
        }
        if upper.starts_with("NODE_COORD_SECTION") {
            let dim =
                dimension.ok_or_else(|| err(lineno, "NODE_COORD_SECTION before DIMENSION".into()))?;
            coords = vec![None; dim];
            saw_coord_section = true;
            section = Section::Coords;
            continue;
        }
        if upper.starts_with("DEMAND_SECTION") {
            let dim =
                dimension.ok_or_else(|| err(lineno, "DEMAND_SECTION before DIMENSION".into()))?;
            demands = vec![None; dim];
            saw_demand_section = true;
            section = Section::Demands;
            continue;
        }
        if upper.starts_with("DEPOT_SECTION") {
            section = Section::Depot;
            continue;
        }
        match section {
            Section::Header => {
                let (key, value) = match line.split_once(':') {
                    Some((k, v)) => (k.trim().to_ascii_uppercase(), v.trim().to_string()),
                    None => (upper.clone(), String::new()),
                };
                match key.as_str() {
                    "NAME" => name = value,
                    "DIMENSION" => {
                        dimension = Some(value.parse().map_err(|_| {
                            err(lineno, format!("invalid DIMENSION value {value:?}"))
                        })?)
                    }
                    "CAPACITY" => {
                        capacity = Some(value.parse().map_err(|_| {
                            err(lineno, format!("invalid CAPACITY value {value:?}"))
                        })?)
                    }
                    "EDGE_WEIGHT_TYPE" => edge_weight_type = Some(value),
                    // TYPE, COMMENT and friends are informational.
                    _ => {}
                }
            }
            Section::Coords => {
                let mut it = line.split_whitespace();
                let id: usize = it
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| err(lineno, "expected node id".into()))?;
                let x: f64 = it
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| err(lineno, "expected x coordinate".into()))?;
                let y: f64 = it
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| err(lineno, "expected y coordinate".into()))?;
                if id == 0 || id > coords.len() {
                    return Err(err(lineno, format!("node id {id} out of range")));
                }
                coords[id - 1] = Some((x, y));
            }
            Section::Demands => {
                let mut it = line.split_whitespace();
                let id: usize = it
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| err(lineno, "expected node id".into()))?;
                let demand: u64 = it
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| err(lineno, "expected integer demand".into()))?;
                if id == 0 || id > demands.len() {
                    return Err(err(lineno, format!("node id {id} out of range")));
                }
                demands[id - 1] = Some(demand);
            }
            Section::Depot => {
                let v: i64 = line
                    .parse()
                    .map_err(|_| err(lineno, format!("invalid depot entry {line:?}")))?;
                if v == -1 {
                    section = Section::Header;
                } else if depot_id.is_none() {
                    depot_id = Some(v as usize);
                } else {
                    return Err(err(lineno, "multiple depots are not supported".into()));
                }
            }
            Section::Done => {}
        }
    }

    let dimension = dimension.ok_or_else(|| err(0, "missing DIMENSION".into()))?;
    let capacity = capacity.ok_or_else(|| err(0, "missing CAPACITY".into()))?;
    let ewt = edge_weight_type.unwrap_or_default();
    if ewt.to_ascii_uppercase() != "EUC_2D" {
        return Err(InstanceError::UnsupportedEdgeWeightType(ewt));
    }
    if !saw_coord_section {
        return Err(err(0, "missing NODE_COORD_SECTION".into()));
    }
    if !saw_demand_section {
        return Err(err(0, "missing DEMAND_SECTION".into()));
    }
    for (i, c) in coords.iter().enumerate() {
        if c.is_none() {
            return Err(err(0, format!("missing coordinates for node {}", i + 1)));
        }
    }
    for (i, d) in demands.iter().enumerate() {
        if d.is_none() {
            return Err(err(0, format!("missing demand for node {}", i + 1)));
        }
    }
    let depot_id = depot_id.unwrap_or(1);
    if depot_id == 0 || depot_id > dimension {
        return Err(err(0, format!("depot id {depot_id} out of range")));
    }
    if demands[depot_id - 1] != Some(0) {
        return Err(err(0, format!("depot node {depot_id} must have zero demand")));
    }

    // Collect customer demands, apply the collective gcd with the capacity.
    let mut raw: Vec<((f64, f64), u64)> = Vec::new();
    for id in 1..=dimension {
        if id == depot_id {
            continue;
        }
        let d = demands[id - 1].unwrap();
        if d == 0 {
            if drop_zero_demand {
                continue;
            }
            return Err(InstanceError::ZeroDemand { id });
        }
        raw.push((coords[id - 1].unwrap(), d));
    }
    if raw.is_empty() {
        return Err(err(0, "no customers with positive demand".into()));
    }
    let mut g = capacity;
    for &(_, d) in &raw {
        g = gcd(g, d);
    }
    let capacity = (capacity / g) as u32;

    let nodes: Vec<CustomerNode> = raw
        .iter()
        .enumerate()
        .map(|(k, &((x, y), d))| CustomerNode {
            id: k + 1,
            x,
            y,
            demand: DemandDistribution::Poisson { lambda: (d / g) as f64 },
        })
        .collect();

    let total: f64 = nodes.iter().map(|n| n.demand.mean()).sum();
    let min_m = ceil_ratio(total, capacity);
    let fleet_sizes: BTreeSet<usize> = (min_m.max(1)..=nodes.len()).collect();

    StochasticInstance::new(
        name,
        "cvrplib".into(),
        coords[depot_id - 1].unwrap(),
        nodes,
        capacity,
        fleet_sizes,
        DistanceRounding::NearestInteger,
        None,
    )
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Divides all demand means and the capacity by their collective gcd.
/// Identity when the gcd is 1. Requires integer means.
pub fn normalize_gcd(instance: &StochasticInstance) -> Result<StochasticInstance, InstanceError> {
    let mut means = Vec::with_capacity(instance.nodes.len());
    for node in &instance.nodes {
        let mean = node.demand.mean();
        if (mean - mean.round()).abs() > 1e-9 || mean <= 0.0 {
            return Err(InstanceError::NonIntegerMean { id: node.id, mean });
        }
        means.push(mean.round() as u64);
    }
    let mut g = instance.capacity as u64;
    for &m in &means {
        g = gcd(g, m);
    }
    if g == 1 {
        return Ok(instance.clone());
    }
    let nodes: Vec<CustomerNode> = instance
        .nodes
        .iter()
        .zip(&means)
        .map(|(node, &m)| {
            let scaled = (m / g) as f64;
            let demand = match &node.demand {
                DemandDistribution::Poisson { .. } => DemandDistribution::Poisson { lambda: scaled },
                DemandDistribution::Normal { mean, variance } => DemandDistribution::Normal {
                    mean: scaled,
                    variance: variance * scaled / mean,
                },
                other => other.clone(),
            };
            CustomerNode { id: node.id, x: node.x, y: node.y, demand }
        })
        .collect();
    StochasticInstance::new(
        instance.name.clone(),
        instance.source.clone(),
        instance.depot,
        nodes,
        (instance.capacity as u64 / g) as u32,
        instance.fleet_sizes.clone(),
        instance.rounding,
        instance.seed,
    )
}

// ---------------------------------------------------------------------------
// Instance generation
// ---------------------------------------------------------------------------

/// Generates an instance in the style of the normal-demand benchmark sets:
/// `n` customers with integer means uniform in {1..10}, normal demands with
/// variance `dispersion * mean`, coordinates uniform on the `[0,100]` square,
/// depot at
/// the center, capacity chosen so the filling coefficient sum(mu)/(m*Q) is as
/// close to `fill` as integer rounding allows, and a fixed fleet of `m`
/// vehicles. Deterministic for a fixed seed.
pub fn generate_jabali(
    n: usize,
    m: usize,
    fill: f64,
    dispersion: f64,
    seed: u64,
) -> Result<StochasticInstance, InstanceError> {
    if n < 2 {
        return Err(InstanceError::Generation(format!("need at least 2 customers, got {n}")));
    }
    if m < 1 {
        return Err(InstanceError::Generation("need at least one vehicle".into()));
    }
    if !(fill > 0.0 && fill <= 1.0) {
        return Err(InstanceError::Generation(format!(
            "filling coefficient {fill} must be in (0, 1]"
        )));
    }
    if dispersion < 0.0 {
        return Err(InstanceError::Generation(format!(
            "dispersion {dispersion} must be non-negative"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes = Vec::with_capacity(n);
    let mut total_mean = 0u64;
    let mut max_mean = 0u64;
    for id in 1..=n {
        let x = rng.gen_range(0.0..100.0);
        let y = rng.gen_range(0.0..100.0);
        let mean = rng.gen_range(1..=10u64);
        total_mean += mean;
        max_mean = max_mean.max(mean);
        let demand = if dispersion == 0.0 {
            DemandDistribution::FiniteDiscrete(DiscreteTable::point(mean as u32))
        } else {
            DemandDistribution::Normal {
                mean: mean as f64,
                variance: dispersion * mean as f64,
            }
        };
        nodes.push(CustomerNode { id, x, y, demand });
    }
    let capacity = (total_mean as f64 / (m as f64 * fill)).round() as u32;
    if (capacity as u64) < max_mean {
        return Err(InstanceError::Generation(format!(
            "capacity {capacity} below largest expected demand {max_mean}; lower the fill or fleet size"
        )));
    }
    StochasticInstance::new(
        format!("gen-n{n}-m{m}-f{fill:.2}-d{dispersion:.2}-s{seed}"),
        "generated".into(),
        (50.0, 50.0),
        nodes,
        capacity,
        BTreeSet::from([m]),
        DistanceRounding::Exact,
        Some(seed),
    )
}

// ---------------------------------------------------------------------------
// Native instance format
// ---------------------------------------------------------------------------

/// Serializes an instance in the native key/value format. All floats use the
/// shortest representation that round-trips exactly.
pub fn to_native(instance: &StochasticInstance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "vrpsd 1");
    let _ = writeln!(out, "name {}", instance.name);
    let _ = writeln!(out, "source {}", instance.source);
    if let Some(seed) = instance.seed {
        let _ = writeln!(out, "seed {seed}");
    }
    let _ = writeln!(out, "capacity {}", instance.capacity);
    let sizes: Vec<String> = instance.fleet_sizes.iter().map(|m| m.to_string()).collect();
    let _ = writeln!(out, "fleet {}", sizes.join(" "));
    let _ = writeln!(
        out,
        "rounding {}",
        match instance.rounding {
            DistanceRounding::NearestInteger => "euc2d",
            DistanceRounding::Exact => "exact",
        }
    );
    let _ = writeln!(out, "depot {} {}", instance.depot.0, instance.depot.1);
    let _ = writeln!(out, "customers {}", instance.nodes.len());
    for node in &instance.nodes {
        let d = match &node.demand {
            DemandDistribution::Poisson { lambda } => format!("poisson {lambda}"),
            DemandDistribution::Normal { mean, variance } => format!("normal {mean} {variance}"),
            DemandDistribution::Binomial { trials, success } => {
                format!("binomial {trials} {success}")
            }
            DemandDistribution::Erlang { shape, rate } => format!("erlang {shape} {rate}"),
            DemandDistribution::NegativeBinomial { successes, success } => {
                format!("negbin {successes} {success}")
            }
            DemandDistribution::FiniteDiscrete(t) => {
                let mut s = String::from("discrete");
                for (v, p) in t.support() {
                    let _ = write!(s, " {v} {p}");
                }
                s
            }
        };
        let _ = writeln!(out, "c {} {} {} {}", node.id, node.x, node.y, d);
    }
    out
}

/// Parses the native format produced by [`to_native`].
pub fn from_native(text: &str) -> Result<StochasticInstance, InstanceError> {
    let err = |line: usize, message: String| InstanceError::Parse { line, message };
    let mut name = String::from("unnamed");
    let mut source = String::from("native");
    let mut seed = None;
    let mut capacity: Option<u32> = None;
    let mut fleet_sizes = BTreeSet::new();
    let mut rounding = DistanceRounding::Exact;
    let mut depot: Option<(f64, f64)> = None;
    let mut expected_customers: Option<usize> = None;
    let mut nodes: Vec<CustomerNode> = Vec::new();
    let mut saw_magic = false;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let key = it.next().unwrap();
        let rest: Vec<&str> = it.collect();
        match key {
            "vrpsd" => {
                if rest.first() != Some(&"1") {
                    return Err(err(lineno, format!("unsupported format version {rest:?}")));
                }
                saw_magic = true;
            }
            "name" => name = rest.join(" "),
            "source" => source = rest.join(" "),
            "seed" => {
                seed = Some(
                    rest.first()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| err(lineno, "invalid seed".into()))?,
                )
            }
            "capacity" => {
                capacity = Some(
                    rest.first()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| err(lineno, "invalid capacity".into()))?,
                )
            }
            "fleet" => {
                for s in &rest {
                    fleet_sizes.insert(
                        s.parse::<usize>()
                            .map_err(|_| err(lineno, format!("invalid fleet size {s}")))?,
                    );
                }
            }
            "rounding" => {
                rounding = match rest.first().copied() {
                    Some("euc2d") => DistanceRounding::NearestInteger,
                    Some("exact") => DistanceRounding::Exact,
                    other => return Err(err(lineno, format!("invalid rounding {other:?}"))),
                }
            }
            "depot" => {
                let x: f64 = rest
                    .first()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| err(lineno, "invalid depot x".into()))?;
                let y: f64 = rest
                    .get(1)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| err(lineno, "invalid depot y".into()))?;
                depot = Some((x, y));
            }
            "customers" => {
                expected_customers = Some(
                    rest.first()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| err(lineno, "invalid customer count".into()))?,
                )
            }
            "c" => {
                if rest.len() < 4 {
                    return Err(err(lineno, "customer line too short".into()));
                }
                let id: usize =
                    rest[0].parse().map_err(|_| err(lineno, "invalid customer id".into()))?;
                let x: f64 = rest[1].parse().map_err(|_| err(lineno, "invalid x".into()))?;
                let y: f64 = rest[2].parse().map_err(|_| err(lineno, "invalid y".into()))?;
                let fam = rest[3];
                let args = &rest[4..];
                let req = |k: usize| -> Result<f64, InstanceError> {
                    args.get(k)
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| err(lineno, format!("missing parameter {k} for {fam}")))
                };
                let demand = match fam {
                    "poisson" => DemandDistribution::Poisson { lambda: req(0)? },
                    "normal" => DemandDistribution::Normal { mean: req(0)?, variance: req(1)? },
                    "binomial" => DemandDistribution::Binomial {
                        trials: req(0)? as u32,
                        success: req(1)?,
                    },
                    "erlang" => {
                        DemandDistribution::Erlang { shape: req(0)? as u32, rate: req(1)? }
                    }
                    "negbin" => DemandDistribution::NegativeBinomial {
                        successes: req(0)? as u32,
                        success: req(1)?,
                    },
                    "discrete" => {
                        if args.is_empty() || args.len() % 2 != 0 {
                            return Err(err(
                                lineno,
                                "discrete needs value/probability pairs".into(),
                            ));
                        }
                        let mut pairs = Vec::new();
                        for chunk in args.chunks(2) {
                            let v: u32 = chunk[0]
                                .parse()
                                .map_err(|_| err(lineno, format!("invalid value {}", chunk[0])))?;
                            let p: f64 = chunk[1]
                                .parse()
                                .map_err(|_| err(lineno, format!("invalid prob {}", chunk[1])))?;
                            pairs.push((v, p));
                        }
                        DemandDistribution::FiniteDiscrete(DiscreteTable::new(pairs)?)
                    }
                    other => return Err(err(lineno, format!("unknown family {other}"))),
                };
                nodes.push(CustomerNode { id, x, y, demand });
            }
            other => return Err(err(lineno, format!("unknown key {other:?}"))),
        }
    }
    if !saw_magic {
        return Err(err(0, "missing `vrpsd 1` header".into()));
    }
    let capacity = capacity.ok_or_else(|| err(0, "missing capacity".into()))?;
    let depot = depot.ok_or_else(|| err(0, "missing depot".into()))?;
    if let Some(exp) = expected_customers {
        if nodes.len() != exp {
            return Err(err(0, format!("expected {exp} customers, found {}", nodes.len())));
        }
    }
    StochasticInstance::new(name, source, depot, nodes, capacity, fleet_sizes, rounding, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cvrplib(demands: &[u64], capacity: u64) -> String {
        let n = demands.len();
        let mut s = String::new();
        let _ = writeln!(s, "NAME : tiny");
        let _ = writeln!(s, "TYPE : CVRP");
        let _ = writeln!(s, "DIMENSION : {}", n + 1);
        let _ = writeln!(s, "EDGE_WEIGHT_TYPE : EUC_2D");
        let _ = writeln!(s, "CAPACITY : {capacity}");
        let _ = writeln!(s, "NODE_COORD_SECTION");
        let _ = writeln!(s, "1 0 0");
        for (i, _) in demands.iter().enumerate() {
            let _ = writeln!(s, "{} {} {}", i + 2, 10 * (i + 1), 0);
        }
        let _ = writeln!(s, "DEMAND_SECTION");
        let _ = writeln!(s, "1 0");
        for (i, d) in demands.iter().enumerate() {
            let _ = writeln!(s, "{} {}", i + 2, d);
        }
        let _ = writeln!(s, "DEPOT_SECTION");
        let _ = writeln!(s, "1");
        let _ = writeln!(s, "-1");
        let _ = writeln!(s, "EOF");
        s
    }

    #[test]
    fn parse_applies_collective_gcd() {
        let inst = parse_cvrplib(&tiny_cvrplib(&[2, 4, 6], 10)).unwrap();
        assert_eq!(inst.capacity, 5);
        let means: Vec<f64> = inst.nodes.iter().map(|n| n.demand.mean()).collect();
        assert_eq!(means, vec![1.0, 2.0, 3.0]);
        for node in &inst.nodes {
            assert!(matches!(node.demand, DemandDistribution::Poisson { .. }));
        }
    }

    #[test]
    fn parse_sets_unlimited_fleet_range() {
        let inst = parse_cvrplib(&tiny_cvrplib(&[3, 5, 4], 7)).unwrap();
        // ceil(12/7) = 2 up to n = 3.
        let expected: BTreeSet<usize> = (2..=3).collect();
        assert_eq!(inst.fleet_sizes, expected);
    }

    #[test]
    fn parse_rounds_euclidean_distances_to_nearest_integer() {
        let inst = parse_cvrplib(&tiny_cvrplib(&[1, 1], 5)).unwrap();
        assert_eq!(inst.cost(0, 1), 10.0);
        assert_eq!(inst.cost(1, 2), 10.0);
        assert_eq!(inst.cost(0, 2), 20.0);
    }

    #[test]
    fn parse_rejects_missing_demand_section() {
        // Drop the whole demand section from the file.
        let full = tiny_cvrplib(&[2, 4], 10);
        let mut text = String::new();
        let mut skipping = false;
        for line in full.lines() {
            if line.starts_with("DEMAND_SECTION") {
                skipping = true;
            }
            if line.starts_with("DEPOT_SECTION") {
                skipping = false;
            }
            if !skipping {
                text.push_str(line);
                text.push('\n');
            }
        }
        let e = parse_cvrplib(&text).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("DEMAND_SECTION"), "{msg}");

        // A malformed line inside a section is reported with its line number.
        let garbled = full.replace("2 10 0", "2 ten 0");
        let e2 = parse_cvrplib(&garbled).unwrap_err();
        assert!(matches!(e2, InstanceError::Parse { line, .. } if line > 0), "{e2}");
    }

    #[test]
    fn parse_rejects_zero_demand_by_default_but_can_drop() {
        let text = tiny_cvrplib(&[2, 0, 4], 10);
        assert!(matches!(parse_cvrplib(&text), Err(InstanceError::ZeroDemand { id: 3 })));
        let inst = parse_cvrplib_with(&text, true).unwrap();
        assert_eq!(inst.num_customers(), 2);
    }

    #[test]
    fn parse_rejects_non_euc2d() {
        let text = tiny_cvrplib(&[2, 4], 10).replace("EUC_2D", "EXPLICIT");
        assert!(matches!(
            parse_cvrplib(&text),
            Err(InstanceError::UnsupportedEdgeWeightType(_))
        ));
    }

    #[test]
    fn normalize_gcd_examples() {
        let build = |means: &[u64], q: u32| {
            let nodes = means
                .iter()
                .enumerate()
                .map(|(i, &m)| CustomerNode {
                    id: i + 1,
                    x: i as f64,
                    y: 0.0,
                    demand: DemandDistribution::Poisson { lambda: m as f64 },
                })
                .collect();
            StochasticInstance::new(
                "t".into(),
                "test".into(),
                (0.0, 0.0),
                nodes,
                q,
                BTreeSet::from([1]),
                DistanceRounding::Exact,
                None,
            )
            .unwrap()
        };
        let a = normalize_gcd(&build(&[10, 20, 30], 100)).unwrap();
        assert_eq!(a.capacity, 10);
        assert_eq!(
            a.nodes.iter().map(|n| n.demand.mean()).collect::<Vec<_>>(),
            vec![1.0, 2.0, 3.0]
        );

        let b = normalize_gcd(&build(&[3, 5], 7)).unwrap();
        assert_eq!(b.capacity, 7);
        assert_eq!(b.nodes.iter().map(|n| n.demand.mean()).collect::<Vec<_>>(), vec![3.0, 5.0]);

        let c = normalize_gcd(&build(&[6, 4], 10)).unwrap();
        assert_eq!(c.capacity, 5);
        assert_eq!(c.nodes.iter().map(|n| n.demand.mean()).collect::<Vec<_>>(), vec![3.0, 2.0]);

        // Idempotence.
        let cc = normalize_gcd(&c).unwrap();
        assert_eq!(cc, c);
    }

    #[test]
    fn normalize_gcd_rejects_non_integer_means() {
        let nodes = vec![CustomerNode {
            id: 1,
            x: 0.0,
            y: 0.0,
            demand: DemandDistribution::Poisson { lambda: 1.5 },
        }];
        let inst = StochasticInstance::new(
            "t".into(),
            "test".into(),
            (0.0, 0.0),
            nodes,
            10,
            BTreeSet::from([1]),
            DistanceRounding::Exact,
            None,
        )
        .unwrap();
        assert!(matches!(normalize_gcd(&inst), Err(InstanceError::NonIntegerMean { .. })));
    }

    #[test]
    fn generator_hits_requested_filling_coefficient() {
        let inst = generate_jabali(20, 2, 0.90, 1.0, 7).unwrap();
        let p = inst.fleet_profile().unwrap();
        assert!(
            (0.88..=0.92).contains(&p.filling_coefficient),
            "filling coefficient {}",
            p.filling_coefficient
        );
        // One rounding unit of Q.
        let m = 2.0;
        let q = inst.capacity as f64;
        assert!((p.filling_coefficient - 0.90).abs() <= 10.0 / (m * q));
        assert!((p.dispersion - 1.0).abs() < 1e-12);
    }

    #[test]
    fn generator_is_deterministic() {
        let a = generate_jabali(15, 3, 0.85, 1.0, 123).unwrap();
        let b = generate_jabali(15, 3, 0.85, 1.0, 123).unwrap();
        assert_eq!(a, b);
        assert_eq!(to_native(&a), to_native(&b));
    }

    #[test]
    fn generator_degenerate_two_customer_case() {
        let inst = generate_jabali(2, 1, 1.0, 0.0, 5).unwrap();
        let total = inst.total_mean_demand();
        assert_eq!(inst.capacity as f64, total);
        for node in &inst.nodes {
            assert!(matches!(node.demand, DemandDistribution::FiniteDiscrete(_)));
        }
    }

    #[test]
    fn native_format_round_trips_exactly() {
        let inst = generate_jabali(12, 2, 0.9, 1.0, 99).unwrap();
        let text = to_native(&inst);
        let back = from_native(&text).unwrap();
        assert_eq!(back, inst);

        // A mixed-family handcrafted instance.
        let nodes = vec![
            CustomerNode {
                id: 1,
                x: 0.125,
                y: 7.4,
                demand: DemandDistribution::Poisson { lambda: 3.0 },
            },
            CustomerNode {
                id: 2,
                x: -3.25,
                y: 0.3333333333333333,
                demand: DemandDistribution::FiniteDiscrete(
                    DiscreteTable::new(vec![(6, 0.9), (16, 0.1)]).unwrap(),
                ),
            },
        ];
        let inst2 = StochasticInstance::new(
            "mixed".into(),
            "test".into(),
            (1.5, -2.0),
            nodes,
            20,
            BTreeSet::from([1, 2]),
            DistanceRounding::Exact,
            Some(4),
        )
        .unwrap();
        let back2 = from_native(&to_native(&inst2)).unwrap();
        assert_eq!(back2, inst2);
    }

    #[test]
    fn warnings_flag_heavy_tailed_normals() {
        let nodes = vec![CustomerNode {
            id: 1,
            x: 0.0,
            y: 0.0,
            demand: DemandDistribution::Normal { mean: 3.0, variance: 4.0 },
        }];
        let inst = StochasticInstance::new(
            "w".into(),
            "test".into(),
            (0.0, 0.0),
            nodes,
            10,
            BTreeSet::from([1]),
            DistanceRounding::Exact,
            None,
        )
        .unwrap();
        assert_eq!(inst.warnings().len(), 1);
        assert!(inst.warnings()[0].contains("[1]"));
    }
}
