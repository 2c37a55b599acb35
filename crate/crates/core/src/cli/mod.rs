//! `angval` command-line driver.
//!
//! Every subcommand writes a CSV table to `--out` (or stdout). With
//! `--out`, a run record `<out>.json` holds the resolved configuration,
//! the global flags and the crate version.

pub mod io;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::autonomous::{
    angular_value_irrational, angular_value_resonant_4d, symmetry_check, time_average_estimate,
    QuadConfig, ResonantConfig, SchurSpec, Verdict,
};
use crate::continuous::{estimate_all_variants_ct, ContinuousSystem};
use crate::discrete::{estimate_all_variants, planar_model, DiscreteSystem};
use crate::error::{Error, Result};
use crate::grassmann::{metric_d1, metric_d2, metric_df, metric_dsigma, principal_angles, procrustes_min, Subspace};
use crate::linalg::{Matrix, DEFAULT_RANK_TOL};
use crate::oracles::{birkhoff_average, fd_angle_derivative, maxmin_angle, procrustes_bruteforce_s2, OracleSystem};
use crate::search::{AngularValueReport, SubspaceSearchConfig};
use crate::semicontinuity::{hairy_sweep, SweepConfig, TagKind};
use crate::smoothness::{angle_derivative_flow, angle_derivative_right, CurvePoint};
use io::{num, read_matrix, read_text, write_text, Csv};

#[derive(Parser, Debug)]
#[command(name = "angval", version, about = "Principal angles and angular values of linear systems")]
pub struct Cli {
    /// JSON run configuration for the subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// CSV output path; the run record goes to `<out>.json`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "ANGVAL_THREADS")]
    pub threads: Option<usize>,
    /// Rank tolerance (angles, metrics, derivative) or gate tolerance (autonomous).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Print angles in degrees.
    #[arg(long, global = true)]
    pub degrees: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Principal angles between range(V) and range(W).
    Angles {
        #[arg(long)]
        v: PathBuf,
        #[arg(long)]
        w: PathBuf,
    },
    /// The four Grassmannian metrics and the Procrustes residual.
    Metrics {
        #[arg(long)]
        v: PathBuf,
        #[arg(long)]
        w: PathBuf,
    },
    /// Right derivative of the maximal angle along W + hẆ.
    Derivative {
        #[arg(long)]
        w: PathBuf,
        #[arg(long)]
        wdot: PathBuf,
        /// Also report the angular speed ‖(I − P)AP‖ of range(W) under A.
        #[arg(long)]
        generator: Option<PathBuf>,
    },
    /// Angular-value estimates for a discrete system (needs --config).
    Discrete,
    /// Angular-value estimates for a continuous system (needs --config).
    Continuous,
    /// Closed-form or resonant values for a Schur block spec (needs --config).
    Autonomous,
    /// The (κ, ρ₂) sweep of the 4D model.
    Sweep,
    /// Brute-force reference computations.
    Oracle {
        #[command(subcommand)]
        kind: OracleCommand,
    },
}

#[derive(Subcommand, Debug)]
pub enum OracleCommand {
    /// Max–min sampling estimate of the largest principal angle.
    Maxmin {
        #[arg(long)]
        v: PathBuf,
        #[arg(long)]
        w: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
    },
    /// Grid search over O(2) for the Procrustes residual (s = 2).
    Procrustes {
        #[arg(long)]
        v: PathBuf,
        #[arg(long)]
        w: PathBuf,
        #[arg(long, default_value_t = 36_000)]
        grid: usize,
    },
    /// Forward difference of the maximal angle.
    Fd {
        #[arg(long)]
        w: PathBuf,
        #[arg(long)]
        wdot: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        h: f64,
    },
    /// Direct long-run average of successive angles for the system in
    /// --config (discrete or continuous schema).
    Birkhoff {
        /// Initial subspace; defaults to the first s coordinate axes.
        #[arg(long)]
        v: Option<PathBuf>,
        /// Read --config as a continuous system.
        #[arg(long)]
        continuous: bool,
        /// Steps (discrete) or final time (continuous); defaults to the config horizon.
        #[arg(long)]
        horizon: Option<f64>,
        /// Integration step; defaults to the config step.
        #[arg(long)]
        h: Option<f64>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum DiscreteSystemConfig {
    Constant { matrix: Matrix },
    Periodic { matrices: Vec<Matrix> },
    /// `D_ρ T_φ D_ρ^{-1}`.
    Planar { rho: f64, phi: f64 },
}

impl DiscreteSystemConfig {
    pub fn build(&self) -> Result<DiscreteSystem> {
        match self {
            DiscreteSystemConfig::Constant { matrix } => DiscreteSystem::constant(matrix.clone()),
            DiscreteSystemConfig::Periodic { matrices } => DiscreteSystem::periodic(matrices.clone()),
            DiscreteSystemConfig::Planar { rho, phi } => DiscreteSystem::constant(planar_model(*rho, *phi)?),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteConfig {
    pub system: DiscreteSystemConfig,
    pub s: usize,
    pub horizon: usize,
    #[serde(default)]
    pub search: SubspaceSearchConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ContinuousSystemConfig {
    Constant { matrix: Matrix },
    Schur { spec: SchurSpec },
    /// `u̇ = [[0, −ω/ρ], [ρω, 0]] u`.
    Model2d { omega: f64, rho: f64 },
}

impl ContinuousSystemConfig {
    fn spec(&self) -> Result<Option<SchurSpec>> {
        match self {
            ContinuousSystemConfig::Constant { .. } => Ok(None),
            ContinuousSystemConfig::Schur { spec } => Ok(Some(spec.clone())),
            ContinuousSystemConfig::Model2d { omega, rho } => SchurSpec::model2d(*omega, *rho).map(Some),
        }
    }

    pub fn build(&self) -> Result<ContinuousSystem> {
        match self {
            ContinuousSystemConfig::Constant { matrix } => ContinuousSystem::constant(matrix.clone()),
            _ => Ok(self.spec()?.expect("spec-backed system").system()),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuousConfig {
    pub system: ContinuousSystemConfig,
    pub s: usize,
    pub t_end: f64,
    /// Defaults to 1% of the fastest period (spec-backed systems) or 1e−3.
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(default)]
    pub search: SubspaceSearchConfig,
    /// Echelon-structured starting subspaces per admissible set (spec-backed systems).
    #[serde(default)]
    pub echelon_candidates: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonantInput {
    pub omega1: f64,
    pub p: u64,
    pub q: u64,
    pub rho1: f64,
    pub rho2: f64,
    #[serde(default)]
    pub config: ResonantConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutonomousConfig {
    #[serde(default)]
    pub spec: Option<SchurSpec>,
    #[serde(default)]
    pub s: Option<usize>,
    #[serde(default)]
    pub quad: QuadConfig,
    /// Evaluate the resonant formula instead of the closed form.
    #[serde(default)]
    pub resonant: Option<ResonantInput>,
    /// Also report whether `ϑ_s = ϑ_{d−s}` holds.
    #[serde(default)]
    pub symmetry: bool,
}

struct Output {
    csv: String,
    config: Value,
    extra: Vec<(String, String)>,
}

impl Output {
    fn new(csv: &Csv, config: Value) -> Self {
        Output {
            csv: csv.render(),
            config,
            extra: Vec::new(),
        }
    }
}

fn load_config<T: for<'de> Deserialize<'de>>(path: Option<&Path>, what: &str) -> Result<T> {
    let path = path.ok_or_else(|| Error::InvalidInput(format!("{what} needs --config <path>")))?;
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).unwrap_or(Value::Null)
}

fn angle_out(x: f64, degrees: bool) -> String {
    num(if degrees { x.to_degrees() } else { x })
}

fn reports_csv(reports: &[AngularValueReport]) -> Csv {
    let mut csv = Csv::new(&[
        "variant",
        "value",
        "horizon",
        "tail_start",
        "tail_end",
        "tail_samples",
        "candidates",
        "seed",
    ]);
    for r in reports {
        csv.push(vec![
            r.variant.to_string(),
            num(r.value),
            num(r.horizon),
            num(r.tail_window.0),
            num(r.tail_window.1),
            r.tail_samples.to_string(),
            r.candidates.to_string(),
            r.seed.to_string(),
        ]);
    }
    csv
}

fn verdict_text(v: &Verdict) -> String {
    match v {
        Verdict::Independent => "independent".into(),
        Verdict::Rational(pairs) => pairs
            .iter()
            .map(|p| format!("rational:{}/{}={}/{}", p.j, p.i, p.p, p.q))
            .collect::<Vec<_>>()
            .join(";"),
    }
}

fn execute(cli: &Cli) -> Result<Output> {
    let rank_tol = cli.tol.unwrap_or(DEFAULT_RANK_TOL);
    let cfg_path = cli.config.as_deref();
    match &cli.command {
        Command::Angles { v, w } => {
            let a = Subspace::from_spanning(&read_matrix(v)?, rank_tol)?;
            let b = Subspace::from_spanning(&read_matrix(w)?, rank_tol)?;
            let r = principal_angles(&a, &b)?;
            let mut csv = Csv::new(&["j", "phi_j", "cos", "sin"]);
            for (j, &phi) in r.angles.iter().enumerate() {
                csv.push(vec![
                    (j + 1).to_string(),
                    angle_out(phi, cli.degrees),
                    num(phi.cos()),
                    num(phi.sin()),
                ]);
            }
            Ok(Output::new(&csv, json!({"v": v, "w": w, "rank_tol": rank_tol})))
        }
        Command::Metrics { v, w } => {
            let (mv, mw) = (read_matrix(v)?, read_matrix(w)?);
            let a = Subspace::from_spanning(&mv, rank_tol)?;
            let b = Subspace::from_spanning(&mw, rank_tol)?;
            let phi = metric_d1(&a, &b)?;
            let pr = procrustes_min(a.basis(), b.basis())?;
            let mut csv = Csv::new(&["metric", "value"]);
            csv.push(vec!["d1".into(), angle_out(phi, cli.degrees)]);
            csv.push(vec!["d2".into(), num(metric_d2(&a, &b)?)]);
            csv.push(vec!["dF".into(), num(metric_df(&a, &b)?)]);
            csv.push(vec!["dsigma".into(), num(metric_dsigma(&a, &b)?)]);
            csv.push(vec!["procrustes".into(), num(pr.value)]);
            Ok(Output::new(&csv, json!({"v": v, "w": w, "rank_tol": rank_tol})))
        }
        Command::Derivative { w, wdot, generator } => {
            let mw = read_matrix(w)?;
            let p = CurvePoint::new(mw.clone(), read_matrix(wdot)?)?;
            let mut csv = Csv::new(&["quantity", "value"]);
            csv.push(vec!["angle_derivative_right".into(), num(angle_derivative_right(&p)?)]);
            if let Some(g) = generator {
                let a = read_matrix(g)?;
                let v = Subspace::from_spanning(&mw, rank_tol)?;
                csv.push(vec!["angular_speed".into(), num(angle_derivative_flow(&a, &v)?)]);
            }
            Ok(Output::new(&csv, json!({"w": w, "wdot": wdot, "generator": generator})))
        }
        Command::Discrete => {
            let mut cfg: DiscreteConfig = load_config(cfg_path, "discrete")?;
            if let Some(seed) = cli.seed {
                cfg.search.seed = seed;
            }
            let sys = cfg.system.build()?;
            let reports = estimate_all_variants(&sys, cfg.s, cfg.horizon, &cfg.search)?;
            Ok(Output::new(&reports_csv(&reports), to_value(&cfg)))
        }
        Command::Continuous => {
            let mut cfg: ContinuousConfig = load_config(cfg_path, "continuous")?;
            if let Some(seed) = cli.seed {
                cfg.search.seed = seed;
            }
            let reports = match cfg.system.spec()? {
                Some(spec) => time_average_estimate(&spec, cfg.s, cfg.t_end, cfg.h, &cfg.search, cfg.echelon_candidates)?,
                None => {
                    let sys = cfg.system.build()?;
                    let h = cfg.h.unwrap_or_else(|| sys.default_step(1.0));
                    estimate_all_variants_ct(&sys, cfg.s, cfg.t_end, h, &cfg.search)?
                }
            };
            Ok(Output::new(&reports_csv(&reports), to_value(&cfg)))
        }
        Command::Autonomous => {
            let mut cfg: AutonomousConfig = load_config(cfg_path, "autonomous")?;
            if let Some(t) = cli.tol {
                cfg.quad.gate_tol = t;
            }
            match (&cfg.spec, &cfg.resonant) {
                (Some(spec), None) => {
                    let s = cfg.s.ok_or_else(|| Error::InvalidInput("autonomous config needs 's'".into()))?;
                    let r = angular_value_irrational(s, spec, &cfg.quad)?;
                    let mut header = vec!["s", "value", "err_estimate", "best_set", "verdict"];
                    if cfg.symmetry {
                        header.push("symmetric");
                    }
                    let mut csv = Csv::new(&header);
                    let set: Vec<String> = r.best_set.iter().map(|j| j.to_string()).collect();
                    let mut row = vec![
                        s.to_string(),
                        num(r.value),
                        num(r.err_estimate),
                        set.join(";"),
                        verdict_text(&r.verdict),
                    ];
                    if cfg.symmetry {
                        row.push(symmetry_check(s, spec, &cfg.quad)?.to_string());
                    }
                    csv.push(row);
                    Ok(Output::new(&csv, to_value(&cfg)))
                }
                (None, Some(res)) => {
                    let r = angular_value_resonant_4d(res.omega1, res.p, res.q, res.rho1, res.rho2, &res.config)?;
                    let mut csv = Csv::new(&["p", "q", "value", "t_argmax", "err_estimate"]);
                    csv.push(vec![
                        res.p.to_string(),
                        res.q.to_string(),
                        num(r.value),
                        num(r.t_argmax),
                        num(r.err_estimate),
                    ]);
                    let mut line = Csv::new(&["t", "L"]);
                    for (t, l) in &r.samples {
                        line.push(vec![num(*t), num(*l)]);
                    }
                    let mut out = Output::new(&csv, to_value(&cfg));
                    out.extra.push(("line.csv".into(), line.render()));
                    Ok(out)
                }
                _ => Err(Error::InvalidInput(
                    "autonomous config needs exactly one of 'spec' and 'resonant'".into(),
                )),
            }
        }
        Command::Sweep => {
            let cfg: SweepConfig = match cfg_path {
                Some(_) => load_config(cfg_path, "sweep")?,
                None => SweepConfig::default(),
            };
            let cells = hairy_sweep(&cfg)?;
            let mut csv = Csv::new(&["kappa", "rho2", "tag", "p", "q", "value", "t_argmax", "err_estimate"]);
            let mut lines = Csv::new(&["kappa", "rho2", "t", "L"]);
            for c in &cells {
                if let Some(d) = &c.diagnostic {
                    eprintln!("cell kappa={} rho2={}: {d}", c.kappa, c.rho2);
                }
                let (tag, p, q) = match c.tag.kind {
                    TagKind::Rational { p, q } => ("rational", p.to_string(), q.to_string()),
                    TagKind::Irrational => ("irrational", String::new(), String::new()),
                };
                csv.push(vec![
                    num(c.kappa),
                    num(c.rho2),
                    tag.into(),
                    p,
                    q,
                    num(c.value),
                    c.t_argmax.map(num).unwrap_or_default(),
                    num(c.err_estimate),
                ]);
                for (t, l) in c.line.iter().flatten() {
                    lines.push(vec![num(c.kappa), num(c.rho2), num(*t), num(*l)]);
                }
            }
            let mut out = Output::new(&csv, to_value(&cfg));
            if cfg.keep_lines {
                out.extra.push(("lines.csv".into(), lines.render()));
            }
            Ok(out)
        }
        Command::Oracle { kind } => oracle(cli, kind, rank_tol),
    }
}

fn oracle(cli: &Cli, kind: &OracleCommand, rank_tol: f64) -> Result<Output> {
    let mut csv = Csv::new(&["quantity", "value"]);
    match kind {
        OracleCommand::Maxmin { v, w, samples } => {
            let seed = cli.seed.unwrap_or(0);
            let x = maxmin_angle(&read_matrix(v)?, &read_matrix(w)?, *samples, seed)?;
            csv.push(vec!["maxmin_angle".into(), angle_out(x, cli.degrees)]);
            Ok(Output::new(&csv, json!({"v": v, "w": w, "samples": samples, "seed": seed})))
        }
        OracleCommand::Procrustes { v, w, grid } => {
            let a = Subspace::from_spanning(&read_matrix(v)?, rank_tol)?;
            let b = Subspace::from_spanning(&read_matrix(w)?, rank_tol)?;
            let x = procrustes_bruteforce_s2(a.basis(), b.basis(), *grid)?;
            csv.push(vec!["procrustes_bruteforce".into(), num(x)]);
            Ok(Output::new(&csv, json!({"v": v, "w": w, "grid": grid})))
        }
        OracleCommand::Fd { w, wdot, h } => {
            let x = fd_angle_derivative(&read_matrix(w)?, &read_matrix(wdot)?, *h)?;
            csv.push(vec!["fd_angle_derivative".into(), num(x)]);
            Ok(Output::new(&csv, json!({"w": w, "wdot": wdot, "h": h})))
        }
        OracleCommand::Birkhoff {
            v,
            continuous,
            horizon,
            h,
        } => {
            let start = |d: usize, s: usize| -> Result<Matrix> {
                match v {
                    Some(p) => read_matrix(p),
                    None => Ok(Subspace::coordinate(d, &(0..s).collect::<Vec<_>>())?.into_basis()),
                }
            };
            let (x, config) = if *continuous {
                let cfg: ContinuousConfig = load_config(cli.config.as_deref(), "oracle birkhoff")?;
                let sys = cfg.system.build()?;
                let step = h.or(cfg.h).unwrap_or_else(|| sys.default_step(1.0));
                let f = |t: f64| sys.matrix(t).expect("generator evaluation");
                let v0 = start(sys.dim(), cfg.s)?;
                let x = birkhoff_average(&OracleSystem::Continuous(&f), &v0, horizon.unwrap_or(cfg.t_end), Some(step))?;
                (x, to_value(&cfg))
            } else {
                let cfg: DiscreteConfig = load_config(cli.config.as_deref(), "oracle birkhoff")?;
                let sys = cfg.system.build()?;
                let f = |n: usize| sys.matrix(n).expect("generator evaluation");
                let v0 = start(sys.dim(), cfg.s)?;
                let x = birkhoff_average(&OracleSystem::Discrete(&f), &v0, horizon.unwrap_or(cfg.horizon as f64), None)?;
                (x, to_value(&cfg))
            };
            csv.push(vec!["birkhoff_average".into(), num(x)]);
            Ok(Output::new(&csv, config))
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Angles { .. } => "angles",
        Command::Metrics { .. } => "metrics",
        Command::Derivative { .. } => "derivative",
        Command::Discrete => "discrete",
        Command::Continuous => "continuous",
        Command::Autonomous => "autonomous",
        Command::Sweep => "sweep",
        Command::Oracle { kind } => match kind {
            OracleCommand::Maxmin { .. } => "oracle maxmin",
            OracleCommand::Procrustes { .. } => "oracle procrustes",
            OracleCommand::Fd { .. } => "oracle fd",
            OracleCommand::Birkhoff { .. } => "oracle birkhoff",
        },
    }
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

fn finish(cli: &Cli, out: Output) -> Result<()> {
    match &cli.out {
        None => {
            print!("{}", out.csv);
            Ok(())
        }
        Some(path) => {
            write_text(path, &out.csv)?;
            for (suffix, text) in &out.extra {
                write_text(&sibling(path, suffix), text)?;
            }
            let record = json!({
                "command": command_name(&cli.command),
                "version": env!("CARGO_PKG_VERSION"),
                "config": out.config,
                "globals": {
                    "config_path": cli.config,
                    "seed": cli.seed,
                    "threads": cli.threads,
                    "tol": cli.tol,
                    "degrees": cli.degrees,
                },
                "outputs": std::iter::once(path.clone())
                    .chain(out.extra.iter().map(|(s, _)| sibling(path, s)))
                    .collect::<Vec<_>>(),
            });
            let text = serde_json::to_string_pretty(&record).expect("json");
            write_text(&sibling(path, "json"), &(text + "\n"))
        }
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code: 0 ok, 2 bad input, 3 numerical failure,
/// 4 budget exceeded.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let work = || execute(&cli).and_then(|out| finish(&cli, out));
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(work),
            Err(e) => Err(Error::InvalidInput(format!("thread pool: {e}"))),
        },
        None => work(),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
