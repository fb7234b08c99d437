//! Command-line surface: solve instances, compare recourse lower bounds,
//! verify monotonicity and generate instance suites.
//!
//! Exit codes: 0 optimal, 3 time limit, 4 infeasible, 5 internal error
//! (clap itself exits 2 on usage errors).

use std::fs;
use std::io::Write as _;
use std::path::{Path as FsPath, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bounds::{
    l1_unchecked_truncated, l2_dp_truncated, l3_detailed_truncated, lsg18_bound,
};
use crate::engine::{branch_and_cut, SolveStatus, SolverConfig, SolverReport};
use crate::instance::{from_native, generate_jabali, parse_cvrplib, to_native, StochasticInstance};
use crate::monotonicity::{
    certify_instance, check_property_enumerative, verify_normal_grid, MonotonicityCertificate,
};
use crate::stochastic::DemandDistribution;

pub const EXIT_OPTIMAL: i32 = 0;
pub const EXIT_TIME_LIMIT: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;
pub const EXIT_ERROR: i32 = 5;

#[derive(Parser)]
#[command(
    name = "vrpsd",
    about = "Exact solver for the vehicle routing problem with stochastic demands \
             under detour-to-depot recourse",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Solve instances to proven optimality by branch-and-cut.
    Solve(SolveArgs),
    /// Solve, then report the relative gap of each recourse lower bound.
    Bounds(BoundsArgs),
    /// Check the monotonicity property of instances.
    CheckMono(CheckMonoArgs),
    /// Generate a grid of stochastic instances.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    /// Human-readable tables.
    Table,
    /// Line-delimited JSON records with a schema tag.
    Json,
}

#[derive(Args)]
pub struct CommonSolveArgs {
    /// Wall-clock limit per instance, in seconds.
    #[arg(long, default_value_t = 3600.0)]
    pub time_limit: f64,
    /// Truncation threshold of the restock-count summation.
    #[arg(long, default_value_t = 1e-12)]
    pub truncation: f64,
    /// Cut families to use (comma separated: p,s,r,classic).
    #[arg(long, default_value = "p,s", value_delimiter = ',')]
    pub cuts: Vec<String>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    pub format: OutputFormat,
    /// Write output to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-node trace on stderr.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Args)]
pub struct SolveArgs {
    /// Instance files (native format or TSPLIB-style CVRP).
    #[arg(required = true)]
    pub instances: Vec<PathBuf>,
    #[command(flatten)]
    pub common: CommonSolveArgs,
}

#[derive(Args)]
pub struct BoundsArgs {
    /// Instance files (native format or TSPLIB-style CVRP).
    #[arg(required = true)]
    pub instances: Vec<PathBuf>,
    #[command(flatten)]
    pub common: CommonSolveArgs,
}

#[derive(Args)]
pub struct CheckMonoArgs {
    /// Instance files (native format or TSPLIB-style CVRP).
    #[arg(required = true)]
    pub instances: Vec<PathBuf>,
    /// Largest restock count checked.
    #[arg(long, default_value_t = 3)]
    pub lmax: u32,
    /// Sweep the normal-demand grid over this mean range as a fallback.
    #[arg(long, default_value_t = 10)]
    pub grid_mean_max: u32,
    #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
    pub format: OutputFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct GenerateArgs {
    /// Customer counts.
    #[arg(long, required = true, value_delimiter = ',')]
    pub n: Vec<usize>,
    /// Fleet sizes.
    #[arg(long, required = true, value_delimiter = ',')]
    pub fleet: Vec<usize>,
    /// Filling coefficients.
    #[arg(long, required = true, value_delimiter = ',')]
    pub fill: Vec<f64>,
    /// Coefficient of dispersion sigma^2/mu.
    #[arg(long, default_value_t = 1.0)]
    pub dispersion: f64,
    /// Replicates per grid point.
    #[arg(long, default_value_t = 10)]
    pub replicates: usize,
    /// Base seed; each grid point derives its own.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

fn solver_config(common: &CommonSolveArgs) -> SolverConfig {
    let cuts: Vec<&str> = common.cuts.iter().map(|s| s.as_str()).collect();
    SolverConfig {
        time_limit: Duration::from_secs_f64(common.time_limit.max(0.0)),
        truncation: common.truncation,
        enable_p_cuts: cuts.contains(&"p"),
        enable_s_cuts: cuts.contains(&"s"),
        force_r_cuts: cuts.contains(&"r"),
        enable_classic_cuts: cuts.contains(&"classic"),
        trace: common.trace,
        ..Default::default()
    }
}

/// Loads an instance, sniffing the format from the first line.
pub fn load_instance(path: &FsPath) -> Result<StochasticInstance, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let parsed = if first.trim_start().starts_with("vrpsd") {
        from_native(&text)
    } else {
        parse_cvrplib(&text)
    };
    parsed.map_err(|e| format!("{}: {e}", path.display()))
}

struct Output {
    to: Option<PathBuf>,
    buffer: String,
}

impl Output {
    fn new(to: Option<PathBuf>) -> Self {
        Self { to, buffer: String::new() }
    }
    fn line(&mut self, s: &str) {
        self.buffer.push_str(s);
        self.buffer.push('\n');
    }
    fn finish(self) -> i32 {
        match self.to {
            None => {
                print!("{}", self.buffer);
                EXIT_OPTIMAL
            }
            Some(path) => match fs::File::create(&path).and_then(|mut f| f.write_all(self.buffer.as_bytes())) {
                Ok(()) => EXIT_OPTIMAL,
                Err(e) => {
                    eprintln!("cannot write {}: {e}", path.display());
                    EXIT_ERROR
                }
            },
        }
    }
}

fn report_lines(report: &SolverReport, format: OutputFormat, out: &mut Output) {
    match format {
        OutputFormat::Json => {
            let mut v = serde_json::to_value(report).expect("report serializes");
            v["schema"] = serde_json::Value::String("vrpsd-report-v1".into());
            out.line(&v.to_string());
        }
        OutputFormat::Table => {
            out.line(&format!("instance     {}", report.instance));
            out.line(&format!("status       {:?}", report.status));
            if let Some(obj) = report.objective {
                out.line(&format!(
                    "objective    {obj:.4}  (travel {:.4} + recourse {:.4})",
                    report.travel_cost.unwrap_or(0.0),
                    report.recourse_cost.unwrap_or(0.0)
                ));
            }
            out.line(&format!("bound        {:.4}", report.best_bound));
            if let Some(g) = report.gap_percent {
                out.line(&format!("gap          {g:.4}%"));
            }
            out.line(&format!("nodes        {}", report.nodes));
            let cuts: Vec<String> =
                report.cuts.iter().map(|(k, v)| format!("{k}:{v}")).collect();
            out.line(&format!("cuts         {}", cuts.join(" ")));
            out.line(&format!("time         {:.2}s", report.wall_time_seconds));
            for (k, route) in report.routes.iter().enumerate() {
                let stops: Vec<String> = route.iter().map(|c| c.to_string()).collect();
                out.line(&format!("route {:>2}     0 {} 0", k + 1, stops.join(" ")));
            }
            for w in &report.warnings {
                out.line(&format!("warning      {w}"));
            }
            out.line("");
        }
    }
}

pub fn cmd_solve(args: &SolveArgs) -> i32 {
    let config = solver_config(&args.common);
    let mut out = Output::new(args.common.out.clone());
    let mut worst = EXIT_OPTIMAL;
    for path in &args.instances {
        let instance = match load_instance(path) {
            Ok(i) => i,
            Err(e) => {
                eprintln!("{e}");
                return EXIT_ERROR;
            }
        };
        for w in instance.warnings() {
            eprintln!("warning: {w}");
        }
        match branch_and_cut(&instance, &config) {
            Ok(report) => {
                let code = match report.status {
                    SolveStatus::Optimal => EXIT_OPTIMAL,
                    SolveStatus::TimeLimit => EXIT_TIME_LIMIT,
                    SolveStatus::Infeasible => EXIT_INFEASIBLE,
                };
                worst = worst.max(code);
                report_lines(&report, args.common.format, &mut out);
            }
            Err(e) => {
                eprintln!("{}: solver failed: {e}", path.display());
                return EXIT_ERROR;
            }
        }
    }
    let write_code = out.finish();
    worst.max(write_code)
}

pub fn cmd_bounds_report(args: &BoundsArgs) -> i32 {
    let config = solver_config(&args.common);
    let mut out = Output::new(args.common.out.clone());
    if args.common.format == OutputFormat::Table {
        out.line(&format!(
            "{:<28} {:>10} {:>8} {:>8} {:>8} {:>8} {:>8}",
            "instance", "recourse*", "LSG18", "L1", "L2", "L3", "L3(s)"
        ));
    }
    let mut sums = [0.0f64; 4];
    let mut counted = 0usize;
    for path in &args.instances {
        let instance = match load_instance(path) {
            Ok(i) => i,
            Err(e) => {
                eprintln!("{e}");
                return EXIT_ERROR;
            }
        };
        let report = match branch_and_cut(&instance, &config) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("{}: solver failed: {e}", path.display());
                return EXIT_ERROR;
            }
        };
        let Some(recourse) = report.recourse_cost else {
            eprintln!("{}: no solution found, skipping", path.display());
            continue;
        };
        let n_all: Vec<usize> = (1..=instance.num_customers()).collect();
        let m_used = report.fleet_size.unwrap_or(instance.min_vehicles().max(1));
        let trunc = config.truncation;

        let lsg = lsg18_bound(&n_all, m_used, &instance).unwrap_or(0.0);
        let l1: f64 = report
            .routes
            .iter()
            .map(|r| l1_unchecked_truncated(r, &instance, trunc).unwrap_or(0.0))
            .sum();
        let l2 = l2_dp_truncated(&n_all, m_used, &instance, trunc).unwrap_or(0.0);
        let t3 = Instant::now();
        let l3 = l3_detailed_truncated(&n_all, m_used, &instance, trunc)
            .map(|o| o.bound)
            .unwrap_or(0.0);
        let l3_time = t3.elapsed().as_secs_f64();

        if recourse <= 1e-12 {
            match args.common.format {
                OutputFormat::Table => out.line(&format!(
                    "{:<28} {:>10} zero recourse in best solution; gaps undefined",
                    instance.name, "0"
                )),
                OutputFormat::Json => out.line(
                    &serde_json::json!({
                        "schema": "vrpsd-bounds-v1",
                        "instance": instance.name,
                        "recourse": 0.0,
                        "flagged": "zero recourse; gaps undefined",
                    })
                    .to_string(),
                ),
            }
            continue;
        }
        let gap = |bound: f64| (recourse - bound) / recourse * 100.0;
        let gaps = [gap(lsg), gap(l1), gap(l2), gap(l3)];
        for (s, g) in sums.iter_mut().zip(gaps.iter()) {
            *s += g;
        }
        counted += 1;
        match args.common.format {
            OutputFormat::Table => out.line(&format!(
                "{:<28} {:>10.4} {:>8.1} {:>8.1} {:>8.1} {:>8.1} {:>8.2}",
                instance.name, recourse, gaps[0], gaps[1], gaps[2], gaps[3], l3_time
            )),
            OutputFormat::Json => out.line(
                &serde_json::json!({
                    "schema": "vrpsd-bounds-v1",
                    "instance": instance.name,
                    "recourse": recourse,
                    "gap_lsg18": gaps[0],
                    "gap_l1": gaps[1],
                    "gap_l2": gaps[2],
                    "gap_l3": gaps[3],
                    "l3_seconds": l3_time,
                })
                .to_string(),
            ),
        }
    }
    if counted > 0 && args.common.format == OutputFormat::Table {
        let k = counted as f64;
        out.line(&format!(
            "{:<28} {:>10} {:>8.1} {:>8.1} {:>8.1} {:>8.1}",
            "Average", "", sums[0] / k, sums[1] / k, sums[2] / k, sums[3] / k
        ));
    }
    out.finish()
}

pub fn cmd_check_mono(args: &CheckMonoArgs) -> i32 {
    let mut out = Output::new(args.out.clone());
    let mut code = EXIT_OPTIMAL;
    for path in &args.instances {
        let instance = match load_instance(path) {
            Ok(i) => i,
            Err(e) => {
                eprintln!("{e}");
                return EXIT_ERROR;
            }
        };
        let mut cert = certify_instance(&instance);
        if matches!(cert, MonotonicityCertificate::Unknown) {
            if instance.num_customers() <= 15 {
                match check_property_enumerative(&instance, args.lmax) {
                    Ok(c) => cert = c,
                    Err(e) => eprintln!("{}: {e}", path.display()),
                }
            } else if instance
                .nodes
                .iter()
                .all(|n| matches!(n.demand, DemandDistribution::Normal { .. }))
            {
                // Normal fallback: grid sweep over the relevant mean range.
                let report = verify_normal_grid(
                    instance.capacity,
                    1..=args.grid_mean_max,
                    instance.fleet_profile().map(|p| p.dispersion).unwrap_or(1.0),
                    &(1..=args.lmax).collect::<Vec<_>>(),
                    true,
                );
                if report.failed == 0 {
                    cert = MonotonicityCertificate::VerifiedOnGrid {
                        points: report.passed,
                    };
                }
            }
        }
        match args.format {
            OutputFormat::Json => {
                let mut v = serde_json::json!({
                    "schema": "vrpsd-mono-v1",
                    "instance": instance.name,
                });
                v["certificate"] = serde_json::to_value(&cert).expect("serializable");
                out.line(&v.to_string());
            }
            OutputFormat::Table => {
                let verdict = match &cert {
                    MonotonicityCertificate::CertifiedByFamily { rule } => {
                        format!("CertifiedByFamily — {rule}")
                    }
                    MonotonicityCertificate::VerifiedEnumeratively { l_max } => {
                        format!("VerifiedEnumeratively (l <= {l_max})")
                    }
                    MonotonicityCertificate::VerifiedOnGrid { points } => {
                        format!("VerifiedOnGrid ({points} grid points)")
                    }
                    MonotonicityCertificate::Violated { witness, margin } => format!(
                        "Violated — witness a={} b={} subset={:?} l={} (margin {margin:.3e})",
                        witness.a, witness.b, witness.subset, witness.l
                    ),
                    MonotonicityCertificate::Unknown => "Unknown".into(),
                };
                out.line(&format!("{:<28} {verdict}", instance.name));
            }
        }
        if matches!(cert, MonotonicityCertificate::Violated { .. }) {
            code = code.max(1);
        }
    }
    out.finish().max(code)
}

pub fn cmd_generate(args: &GenerateArgs) -> i32 {
    if let Err(e) = fs::create_dir_all(&args.out_dir) {
        eprintln!("cannot create {}: {e}", args.out_dir.display());
        return EXIT_ERROR;
    }
    let mut point = 0u64;
    let mut failures = 0usize;
    let mut written = 0usize;
    for &n in &args.n {
        for &m in &args.fleet {
            for &fill in &args.fill {
                for rep in 0..args.replicates {
                    let seed = args
                        .seed
                        .wrapping_add(point.wrapping_mul(1_000_003))
                        .wrapping_add(rep as u64);
                    point += 1;
                    match generate_jabali(n, m, fill, args.dispersion, seed) {
                        Ok(instance) => {
                            let file = args.out_dir.join(format!(
                                "gen-n{n}-m{m}-f{fill:.2}-r{rep}.vrpsd"
                            ));
                            if let Err(e) = fs::write(&file, to_native(&instance)) {
                                eprintln!("cannot write {}: {e}", file.display());
                                failures += 1;
                            } else {
                                written += 1;
                            }
                        }
                        Err(e) => {
                            eprintln!("n={n} m={m} fill={fill} rep={rep}: {e}");
                            failures += 1;
                        }
                    }
                }
            }
        }
    }
    eprintln!("generated {written} instance(s), {failures} failure(s)");
    if written == 0 {
        EXIT_ERROR
    } else {
        EXIT_OPTIMAL
    }
}

pub fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Solve(args) => cmd_solve(&args),
        Command::Bounds(args) => cmd_bounds_report(&args),
        Command::CheckMono(args) => cmd_check_mono(&args),
        Command::Generate(args) => cmd_generate(&args),
    }
}
