//! Exact solver for the vehicle routing problem with stochastic demands (VRPSD)
//! under the detour-to-depot recourse policy.
//!
//! A first-stage plan assigns every customer to exactly one route. Demands are
//! random and only revealed on arrival; whenever a realized demand exceeds the
//! vehicle's residual capacity, the vehicle performs a round trip to the depot
//! and resumes the route. The solver minimizes travel cost plus the expected
//! cost of those restocking trips, exactly, by branch-and-cut on a master model
//! with one recourse variable per customer.
//!
//! The crate is organized around that pipeline:
//!
//! * [`instance`] — problem data, CVRPLIB ingestion, instance generation;
//! * [`stochastic`] — demand distribution algebra and failure probabilities;
//! * [`recourse`] — expected detour-to-depot recourse of paths and solutions;
//! * [`monotonicity`] — certificates that removing customers never increases
//!   recourse, the property every disaggregated cut relies on;
//! * [`bounds`] — recourse lower bounds (sorted single route, two-stage DP,
//!   set-covering column generation, single-big-vehicle baseline);
//! * [`cuts`] — path cuts, set cuts, route cuts, capacity inequalities;
//! * [`lp`] — the dense bounded-variable simplex behind the LP oracle;
//! * [`engine`] — the branch-and-cut driver and incumbent heuristic;
//! * [`cli`] — the command-line surface (solve, bounds, check-mono, generate).

pub mod bounds;
pub mod cli;
pub mod cuts;
pub mod engine;
pub mod instance;
pub mod lp;
pub mod monotonicity;
pub mod recourse;
pub mod stochastic;

pub use instance::StochasticInstance;
pub use stochastic::DemandDistribution;
