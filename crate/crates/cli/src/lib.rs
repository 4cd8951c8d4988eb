//! Command-line front end: argument parsing and the individual commands.
//! Commands return their output and exit code instead of printing, so they
//! can be driven from tests.

pub mod file;
mod output;

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use unikey::blackwell;
use unikey::bounds::{self, BoundsOptions};
use unikey::error::Error;
use unikey::harness::{self, SuiteConfig};
use unikey::prob::{default_layout, random_dirichlet};
use unikey::ui::{self, Roles, SolverOptions};

pub use file::DistributionFile;
use output::{fixed, num, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_CONVERGENCE: i32 = 2;
pub const EXIT_HARD_VIOLATION: i32 = 3;
pub const EXIT_SUITE_VIOLATION: i32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "unikey", version, about = "Unique information and secret key rate bounds")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Solver tolerance on the certified gap, in bits.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Random restarts of the non-convex bound searches.
    #[arg(long, global = true)]
    pub restarts: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub max_iters: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct RoleArgs {
    /// Alice's variables (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub s: Option<Vec<String>>,
    /// Bob's variables.
    #[arg(long, value_delimiter = ',')]
    pub y: Option<Vec<String>>,
    /// Eve's variables.
    #[arg(long, value_delimiter = ',')]
    pub z: Option<Vec<String>>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Unique, shared and synergistic information.
    Ui {
        file: PathBuf,
        #[command(flatten)]
        roles: RoleArgs,
    },
    /// The chain of key rate bounds.
    Bounds {
        file: PathBuf,
        #[command(flatten)]
        roles: RoleArgs,
        /// Objective evaluations allowed in the nested B_gUI search.
        #[arg(long)]
        max_evals: Option<usize>,
        /// Skip the reduced intrinsic information estimate.
        #[arg(long)]
        no_reduced: bool,
    },
    /// Whether Eve's variable Blackwell-dominates Bob's.
    Blackwell {
        file: PathBuf,
        #[command(flatten)]
        roles: RoleArgs,
    },
    /// Lower estimate of the one-way secret key rate.
    Keyrate {
        file: PathBuf,
        #[command(flatten)]
        roles: RoleArgs,
    },
    /// Run the property suite.
    Verify {
        /// Suite configuration (JSON); the built-in suite when omitted.
        config: Option<PathBuf>,
        /// Override the number of draws of every ensemble.
        #[arg(long)]
        count: Option<usize>,
    },
    /// Write a seeded Dirichlet distribution file.
    Random {
        #[arg(long, value_delimiter = ',', required = true)]
        shape: Vec<usize>,
        #[arg(long, default_value_t = 1.0)]
        concentration: f64,
        /// Output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Resolved global settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunConfig {
    pub tolerance: f64,
    pub restarts: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub format: Format,
}

impl RunConfig {
    pub fn from_args(g: &GlobalArgs) -> anyhow::Result<Self> {
        let solver = SolverOptions::default();
        let c = RunConfig {
            tolerance: g.tol.unwrap_or(solver.tolerance),
            restarts: g.restarts.unwrap_or(BoundsOptions::default().restarts),
            seed: g.seed.unwrap_or(0),
            max_iters: g.max_iters.unwrap_or(solver.max_iters),
            format: g.format,
        };
        if !(c.tolerance > 0.0) {
            bail!("--tol must be positive");
        }
        if c.restarts < 1 {
            bail!("--restarts must be at least 1");
        }
        Ok(c)
    }

    fn solver(&self) -> SolverOptions {
        SolverOptions {
            tolerance: self.tolerance,
            max_iters: self.max_iters,
            ..SolverOptions::default()
        }
    }

    fn bounds(&self) -> BoundsOptions {
        BoundsOptions {
            restarts: self.restarts,
            seed: self.seed,
            solver: self.solver(),
            ..BoundsOptions::default()
        }
    }
}

/// What a command produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl Outcome {
    fn ok(stdout: String, code: i32) -> Self {
        Outcome {
            stdout,
            stderr: String::new(),
            code,
        }
    }

    fn fail(err: anyhow::Error) -> Self {
        let code = match err.downcast_ref::<Error>() {
            Some(Error::SolverBug(_)) => EXIT_HARD_VIOLATION,
            _ => EXIT_INPUT,
        };
        Outcome {
            stdout: String::new(),
            stderr: format!("error: {err:#}\n"),
            code,
        }
    }
}

pub fn run(cli: &Cli) -> Outcome {
    match dispatch(cli) {
        Ok(o) => o,
        Err(e) => Outcome::fail(e),
    }
}

/// Parse `args` (program name first) and run.
pub fn run_args<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            Outcome {
                stdout: if e.use_stderr() { String::new() } else { e.to_string() },
                stderr: if e.use_stderr() { e.to_string() } else { String::new() },
                code,
            }
        }
    }
}

fn load(path: &PathBuf, roles: &RoleArgs) -> anyhow::Result<(unikey::prob::JointDist, Roles)> {
    let f = DistributionFile::read(path)?;
    let d = f.to_dist()?;
    let r = f.roles(roles.s.as_deref(), roles.y.as_deref(), roles.z.as_deref())?;
    r.flatten(&d)?;
    Ok((d, r))
}

fn render(format: Format, table: Table, value: Value) -> String {
    match format {
        Format::Table => table.render(),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&value).expect("serializable");
            s.push('\n');
            s
        }
    }
}

fn roles_json(r: &Roles) -> Value {
    json!({ "s": r.s, "y": r.y, "z": r.z })
}

fn roles_line(r: &Roles) -> String {
    format!("S={} Y={} Z={}", r.s.join(","), r.y.join(","), r.z.join(","))
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn dispatch(cli: &Cli) -> anyhow::Result<Outcome> {
    match &cli.command {
        Command::Verify { config, count } => cmd_verify(&cli.global, config.as_ref(), *count),
        other => {
            let rc = RunConfig::from_args(&cli.global)?;
            match other {
                Command::Ui { file, roles } => cmd_ui(&rc, file, roles),
                Command::Bounds {
                    file,
                    roles,
                    max_evals,
                    no_reduced,
                } => cmd_bounds(&rc, file, roles, *max_evals, *no_reduced),
                Command::Blackwell { file, roles } => cmd_blackwell(&rc, file, roles),
                Command::Keyrate { file, roles } => cmd_keyrate(&rc, file, roles),
                Command::Random {
                    shape,
                    concentration,
                    out,
                } => cmd_random(&rc, shape, *concentration, out.as_ref()),
                Command::Verify { .. } => unreachable!(),
            }
        }
    }
}

pub fn cmd_ui(rc: &RunConfig, file: &PathBuf, roles: &RoleArgs) -> anyhow::Result<Outcome> {
    let (d, r) = load(file, roles)?;
    let res = ui::compute_ui(&d, &r, &rc.solver())?;
    let mut t = Table::new();
    t.text("roles", roles_line(&r));
    t.value_gap("UI", res.ui, res.gap);
    t.value_gap("SI", res.si, res.gap);
    t.value_gap("CI", res.ci, res.gap);
    t.value("I(S;Y)", res.mi);
    t.value("I(S;Y|Z)", res.cmi);
    t.text("iterations", res.iterations.to_string());
    t.text("method", res.method.to_string());
    t.text("converged", yes(res.converged).into());
    let v = json!({
        "roles": roles_json(&r),
        "ui": num(res.ui),
        "si": num(res.si),
        "ci": num(res.ci),
        "mi": num(res.mi),
        "cmi": num(res.cmi),
        "gap": num(res.gap),
        "iterations": res.iterations,
        "method": res.method.to_string(),
        "converged": res.converged,
    });
    let code = if res.converged { EXIT_OK } else { EXIT_CONVERGENCE };
    Ok(Outcome::ok(render(rc.format, t, v), code))
}

pub fn cmd_bounds(
    rc: &RunConfig,
    file: &PathBuf,
    roles: &RoleArgs,
    max_evals: Option<usize>,
    no_reduced: bool,
) -> anyhow::Result<Outcome> {
    let (d, r) = load(file, roles)?;
    let mut opts = rc.bounds();
    if let Some(m) = max_evals {
        opts.max_evals = m;
    }
    opts.reduced = !no_reduced;
    let b = bounds::compute_bounds(&d, &r, &opts)?;
    let f = &b.flags;

    let mut t = Table::new();
    t.text("roles", roles_line(&r));
    t.chain("one-way rate", "↑", b.one_way_lower, None, f.one_way_converged);
    t.chain("UI", "", b.ui, Some(b.ui_gap), f.ui_converged);
    t.chain("B_gUI", "↓", b.b_gui_upper, Some(b.b_gui_gap), f.b_gui_converged);
    t.chain("B1", "↓", b.b1_upper, None, f.b1_converged);
    if let (Some(v), Some(c)) = (b.reduced_intrinsic, f.reduced_converged) {
        t.chain("reduced intrinsic (heuristic)", "↓", v, None, c);
    }
    t.chain("intrinsic", "↓", b.intrinsic_upper, None, f.intrinsic_converged);
    t.text("I(S;Y|Z)", format!("  {}", fixed(b.cmi)));
    let hard = b.hard_violations();
    for s in &f.soft_violations {
        t.text("soft violation", s.clone());
    }
    for s in &hard {
        t.text("HARD VIOLATION", s.to_string());
    }

    let bound = |v: f64, gap: Option<f64>, conv: bool| json!({ "value": num(v), "gap": gap.map(num), "converged": conv });
    let mut chain = serde_json::Map::new();
    chain.insert("one_way_lower".into(), bound(b.one_way_lower, None, f.one_way_converged));
    chain.insert("ui".into(), bound(b.ui, Some(b.ui_gap), f.ui_converged));
    chain.insert("b_gui_upper".into(), bound(b.b_gui_upper, Some(b.b_gui_gap), f.b_gui_converged));
    chain.insert("b1_upper".into(), bound(b.b1_upper, None, f.b1_converged));
    if let (Some(v), Some(c)) = (b.reduced_intrinsic, f.reduced_converged) {
        chain.insert("reduced_intrinsic".into(), bound(v, None, c));
    }
    chain.insert("intrinsic_upper".into(), bound(b.intrinsic_upper, None, f.intrinsic_converged));
    chain.insert("cmi".into(), json!(num(b.cmi)));
    let v = json!({
        "roles": roles_json(&r),
        "chain": chain,
        "soft_violations": f.soft_violations,
        "hard_violations": hard,
    });
    let code = if !hard.is_empty() {
        EXIT_HARD_VIOLATION
    } else if !b.converged() {
        EXIT_CONVERGENCE
    } else {
        EXIT_OK
    };
    Ok(Outcome::ok(render(rc.format, t, v), code))
}

pub fn cmd_blackwell(rc: &RunConfig, file: &PathBuf, roles: &RoleArgs) -> anyhow::Result<Outcome> {
    let (d, r) = load(file, roles)?;
    let v = blackwell::blackwell_dominates(&d, &r)?;
    let mut t = Table::new();
    t.text("roles", roles_line(&r));
    t.text("dominates", yes(v.dominates).into());
    t.value("residual", v.residual);
    let mut rows = Vec::new();
    if let Some(w) = &v.witness {
        for k in 0..w.rows() {
            let row: Vec<f64> = w.row(k).iter().map(|&x| num(x)).collect();
            t.text(&format!("witness row {k}"), row.iter().map(|&x| fixed(x)).collect::<Vec<_>>().join(" "));
            rows.push(row);
        }
    }
    let j = json!({
        "roles": roles_json(&r),
        "dominates": v.dominates,
        "residual": num(v.residual),
        "witness": v.witness.as_ref().map(|_| rows),
    });
    Ok(Outcome::ok(render(rc.format, t, j), EXIT_OK))
}

pub fn cmd_keyrate(rc: &RunConfig, file: &PathBuf, roles: &RoleArgs) -> anyhow::Result<Outcome> {
    let (d, r) = load(file, roles)?;
    let e = bounds::one_way_rate(&d, &r, &rc.bounds())?;
    let mut t = Table::new();
    t.text("roles", roles_line(&r));
    t.chain("one-way rate", "↑", e.value, None, e.converged);
    let j = json!({
        "roles": roles_json(&r),
        "one_way_lower": num(e.value),
        "converged": e.converged,
    });
    let code = if e.converged { EXIT_OK } else { EXIT_CONVERGENCE };
    Ok(Outcome::ok(render(rc.format, t, j), code))
}

pub fn cmd_verify(g: &GlobalArgs, config: Option<&PathBuf>, count: Option<usize>) -> anyhow::Result<Outcome> {
    let mut cfg = match config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<SuiteConfig>(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => SuiteConfig::default(),
    };
    if let Some(t) = g.tol {
        if !(t > 0.0) {
            bail!("--tol must be positive");
        }
        cfg.solver.tolerance = t;
        cfg.bounds.solver.tolerance = t;
    }
    if let Some(m) = g.max_iters {
        cfg.solver.max_iters = m;
        cfg.bounds.solver.max_iters = m;
    }
    if let Some(r) = g.restarts {
        if r < 1 {
            bail!("--restarts must be at least 1");
        }
        cfg.bounds.restarts = r;
    }
    for e in &mut cfg.ensembles {
        if let Some(s) = g.seed {
            e.seed = s;
        }
        if let Some(c) = count {
            e.count = c;
        }
    }
    let reports = harness::run_suite(&cfg)?;
    let total: usize = reports.iter().map(|r| r.violations).sum();

    let mut t = Table::new();
    let mut items = Vec::new();
    for r in &reports {
        let shape = r.shape.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("x");
        let mut line = format!(
            "{} / {} violations, worst slack {}",
            r.violations,
            r.instances,
            fixed(r.worst_slack)
        );
        if !r.failing_seeds.is_empty() {
            line.push_str(&format!(", failing seeds {:?}", r.failing_seeds));
        }
        t.text(&format!("{:?} {shape}", r.property_id), line);
        items.push(json!({
            "property_id": r.property_id,
            "shape": r.shape,
            "instances": r.instances,
            "violations": r.violations,
            "worst_slack": num(r.worst_slack),
            "seeds": r.seeds,
            "failing_seeds": r.failing_seeds,
            "errors": r.errors,
        }));
    }
    t.text("total violations", total.to_string());
    let format = g.format;
    let v = json!({ "reports": items, "violations": total });
    let code = if total == 0 { EXIT_OK } else { EXIT_SUITE_VIOLATION };
    Ok(Outcome::ok(render(format, t, v), code))
}

pub fn cmd_random(rc: &RunConfig, shape: &[usize], concentration: f64, out: Option<&PathBuf>) -> anyhow::Result<Outcome> {
    let d = random_dirichlet(default_layout(shape), concentration, rc.seed)?;
    let f = DistributionFile::from_dist(&d);
    match out {
        Some(p) => {
            f.write(p)?;
            Ok(Outcome::ok(String::new(), EXIT_OK))
        }
        None => Ok(Outcome::ok(f.to_canonical(), EXIT_OK)),
    }
}
