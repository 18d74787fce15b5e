//! Command-line front end.  Every subcommand resolves its configuration
//! from flags layered over an optional flat `key=value` config file, echoes
//! the resolved configuration in its JSON output (schema `sel-lab/1`), and
//! exits 0 on success, 2 on invalid input, 3 on numerical failure.
//!
//! Parameter sweeps (`--lambda 1,10,100` or `-p 2,4`) run their items
//! concurrently, capped by `SEL_LAB_THREADS`, with output kept in input
//! order.

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sel_lab::bessel::{bessel_ik, bessel_ik_scaled, BesselError, BesselEval, ScaledBesselEval};
use sel_lab::evolve::{self, EvolveError, EvolutionRun};
use sel_lab::forms::{
    dissipativity_form, interpolation_corpus, log_hardy, violation_search, weighted_coercivity,
    FormsError, TestFunction,
};
use sel_lab::grid::{bump_profile, lp_norm, weighted_lp_norm, GridError, LogGrid, RadialGridFunction};
use sel_lab::oscillate::{build_counterexample, integrate_homogeneous, transform, OscillateError};
use sel_lab::params::{classify, DomainKind, OperatorParams};
use sel_lab::radial::RadialError;
use sel_lab::resolvent::{
    dual_solve, fd_is_m_matrix, fd_solve, green_solve, BcMode, Method, ResolventError,
};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::Arc;

const SCHEMA: &str = "sel-lab/1";

// ---- outcome plumbing -------------------------------------------------------

enum Failure {
    /// exit 2: a precondition was violated by the input
    Input(String),
    /// exit 3: the computation itself broke down
    Numeric(String),
}

type CliResult<T> = Result<T, Failure>;

fn input_err(e: impl std::fmt::Display) -> Failure {
    Failure::Input(e.to_string())
}

fn bessel_failure(e: BesselError) -> Failure {
    match e {
        BesselError::BadOrder(_) | BesselError::BadArgument(_) => Failure::Input(e.to_string()),
        BesselError::Overflow { .. } | BesselError::NoConvergence { .. } => {
            Failure::Numeric(e.to_string())
        }
    }
}

fn radial_failure(e: RadialError) -> Failure {
    match e {
        RadialError::Bessel(inner) => bessel_failure(inner),
        _ => Failure::Input(e.to_string()),
    }
}

fn resolvent_failure(e: ResolventError) -> Failure {
    match e {
        ResolventError::Radial(inner) => radial_failure(inner),
        ResolventError::SupportTooWide { .. }
        | ResolventError::SingularSystem
        | ResolventError::IndistinctExponents { .. } => Failure::Numeric(e.to_string()),
        _ => Failure::Input(e.to_string()),
    }
}

fn oscillate_failure(e: OscillateError) -> Failure {
    match e {
        OscillateError::StepSizeFailure { .. } | OscillateError::NoNegativeWindow => {
            Failure::Numeric(e.to_string())
        }
        _ => Failure::Input(e.to_string()),
    }
}

fn evolve_failure(e: EvolveError) -> Failure {
    match e {
        EvolveError::Resolvent(inner) => resolvent_failure(inner),
        EvolveError::SingularStep => Failure::Numeric(e.to_string()),
        _ => Failure::Input(e.to_string()),
    }
}

fn forms_failure(e: FormsError) -> Failure {
    match e {
        FormsError::Radial(inner) => radial_failure(inner),
        _ => Failure::Input(e.to_string()),
    }
}

// ---- config file ------------------------------------------------------------

/// Flat `key = value` file; keys mirror the long flag names.
struct FileCfg(BTreeMap<String, String>);

impl FileCfg {
    fn load(path: Option<&PathBuf>) -> CliResult<Self> {
        let mut map = BTreeMap::new();
        if let Some(path) = path {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Input(format!("config file {}: {e}", path.display())))?;
            for (ln, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((key, value)) = line.split_once('=') else {
                    return Err(Failure::Input(format!(
                        "config file line {}: expected key=value, got {line:?}",
                        ln + 1
                    )));
                };
                map.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(FileCfg(map))
    }

    fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| Failure::Input(format!("config key {key} = {raw:?}: {e}"))),
        }
    }

    fn get_list(&self, key: &str) -> CliResult<Option<Vec<f64>>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .split(',')
                .map(|piece| piece.trim().parse::<f64>())
                .collect::<Result<Vec<f64>, _>>()
                .map(Some)
                .map_err(|e| Failure::Input(format!("config key {key} = {raw:?}: {e}"))),
        }
    }

    fn get_enum<T: ValueEnum>(&self, key: &str) -> CliResult<Option<T>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => T::from_str(raw, true)
                .map(Some)
                .map_err(|e| Failure::Input(format!("config key {key} = {raw:?}: {e}"))),
        }
    }
}

/// Flags override file values; the file fills what flags left unset.
fn merged<T: FromStr>(flag: Option<T>, cfg: &FileCfg, key: &str) -> CliResult<Option<T>>
where
    T::Err: std::fmt::Display,
{
    if flag.is_some() {
        Ok(flag)
    } else {
        cfg.get(key)
    }
}

fn merged_list(flag: Option<Vec<f64>>, cfg: &FileCfg, key: &str) -> CliResult<Option<Vec<f64>>> {
    match flag {
        Some(v) if !v.is_empty() => Ok(Some(v)),
        _ => cfg.get_list(key),
    }
}

fn merged_enum<T: ValueEnum>(flag: Option<T>, cfg: &FileCfg, key: &str) -> CliResult<Option<T>> {
    if flag.is_some() {
        Ok(flag)
    } else {
        cfg.get_enum(key)
    }
}

fn require<T>(value: Option<T>, name: &str) -> CliResult<T> {
    value.ok_or_else(|| {
        Failure::Input(format!("missing required value {name}: pass the flag or set it in the config file"))
    })
}

// ---- shared argument groups ---------------------------------------------------

#[derive(Args)]
struct ParamArgs {
    /// space dimension N
    #[arg(short = 'N', long)]
    dim: Option<u32>,
    /// exponent alpha of the leading coefficient |x|^alpha
    #[arg(short, long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// strength b of the potential term -b |x|^{alpha-2}
    #[arg(short, long, allow_negative_numbers = true)]
    b: Option<f64>,
    /// strength c of the radial drift c |x|^{alpha-1} (x/|x|) . grad
    #[arg(short, long, allow_negative_numbers = true)]
    c: Option<f64>,
}

#[derive(Args)]
struct GridArgs {
    /// left grid edge in s = log r
    #[arg(long, allow_negative_numbers = true)]
    grid_min: Option<f64>,
    /// right grid edge in s = log r
    #[arg(long, allow_negative_numbers = true)]
    grid_max: Option<f64>,
    /// number of grid nodes
    #[arg(long)]
    grid_nodes: Option<usize>,
}

#[derive(Args)]
struct OutputArgs {
    /// stdout format of the main document
    #[arg(long, value_enum)]
    format: Option<FormatOpt>,
    /// path for the bulk CSV artifact (profiles, histories)
    #[arg(short, long)]
    output: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatOpt {
    Json,
    Csv,
}

impl FormatOpt {
    fn name(self) -> &'static str {
        match self {
            FormatOpt::Json => "json",
            FormatOpt::Csv => "csv",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainOpt {
    WholeSpace,
    Ball,
    Exterior,
}

impl From<DomainOpt> for DomainKind {
    fn from(d: DomainOpt) -> DomainKind {
        match d {
            DomainOpt::WholeSpace => DomainKind::WholeSpace,
            DomainOpt::Ball => DomainKind::Ball,
            DomainOpt::Exterior => DomainKind::Exterior,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodOpt {
    /// run both routes and report their distance
    Dual,
    /// kernel quadrature only
    Green,
    /// finite differences only
    Fd,
}

impl MethodOpt {
    fn name(self) -> &'static str {
        match self {
            MethodOpt::Dual => "dual",
            MethodOpt::Green => "green",
            MethodOpt::Fd => "fd",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeOpt {
    ImplicitEuler,
    CrankNicolson,
}

impl From<SchemeOpt> for evolve::Scheme {
    fn from(s: SchemeOpt) -> evolve::Scheme {
        match s {
            SchemeOpt::ImplicitEuler => evolve::Scheme::ImplicitEuler,
            SchemeOpt::CrankNicolson => evolve::Scheme::CrankNicolson,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteOpt {
    All,
    Dissipativity,
    Violation,
    Coercivity,
    LogHardy,
    Interpolation,
}

impl SuiteOpt {
    fn name(self) -> &'static str {
        match self {
            SuiteOpt::All => "all",
            SuiteOpt::Dissipativity => "dissipativity",
            SuiteOpt::Violation => "violation",
            SuiteOpt::Coercivity => "coercivity",
            SuiteOpt::LogHardy => "log-hardy",
            SuiteOpt::Interpolation => "interpolation",
        }
    }
}

// ---- CLI shape ----------------------------------------------------------------

#[derive(Parser)]
#[command(
    name = "sel-lab",
    version,
    about = "Classification, resolvent, evolution and form checks for |x|^alpha-degenerate elliptic operators"
)]
struct Cli {
    /// flat key=value config file; flags override its entries
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Which realizations of the operator generate a semigroup on L^p
    Classify {
        #[command(flatten)]
        params: ParamArgs,
        /// Lebesgue exponent p
        #[arg(short, long)]
        p: Option<f64>,
        /// domain the operator lives on
        #[arg(long, value_enum)]
        domain: Option<DomainOpt>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Solve (lambda - L) u = f for bump data and report norms
    Solve {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(short, long)]
        p: Option<f64>,
        /// one or more lambda values, comma separated
        #[arg(short, long, value_delimiter = ',', allow_negative_numbers = true)]
        lambda: Option<Vec<f64>>,
        /// weight exponents theta for ||r^{theta(alpha-2)} u||_p reporting
        #[arg(long, value_delimiter = ',')]
        theta: Option<Vec<f64>>,
        /// solver route
        #[arg(long, value_enum)]
        method: Option<MethodOpt>,
        /// inner radius of the Dirichlet annulus closure (fd route only)
        #[arg(long)]
        annulus_eps: Option<f64>,
        /// bump data support, lower radius
        #[arg(long)]
        f_lo: Option<f64>,
        /// bump data support, upper radius
        #[arg(long)]
        f_hi: Option<f64>,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// March u_t = L u from bump initial data
    Evolve {
        #[command(flatten)]
        params: ParamArgs,
        /// one or more exponents p, comma separated
        #[arg(short, long, value_delimiter = ',')]
        p: Option<Vec<f64>>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_final: Option<f64>,
        #[arg(long, value_enum)]
        scheme: Option<SchemeOpt>,
        /// initial bump support, lower radius
        #[arg(long)]
        f_lo: Option<f64>,
        /// initial bump support, upper radius
        #[arg(long)]
        f_hi: Option<f64>,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Zero table of the oscillatory kernel branch plus the sign witness
    Oscillate {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(short, long, allow_negative_numbers = true)]
        lambda: Option<f64>,
        /// far edge of the scan window in s = log r
        #[arg(long, allow_negative_numbers = true)]
        s_from: Option<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run the verification suites and emit a scorecard
    Verify {
        /// which suite to run
        #[arg(long, value_enum)]
        suite: Option<SuiteOpt>,
        /// seed for the randomized draws
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Evaluate the modified Bessel pair I_nu, K_nu
    Bessel {
        #[arg(long, allow_negative_numbers = true)]
        nu: Option<f64>,
        #[arg(short, long, allow_negative_numbers = true)]
        x: Option<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
}

// ---- document emission ----------------------------------------------------------

#[derive(Serialize)]
struct Doc<'a, C: Serialize, R: Serialize> {
    schema: &'static str,
    config: &'a C,
    result: &'a R,
}

fn json_doc<C: Serialize, R: Serialize>(config: &C, result: &R) -> CliResult<String> {
    serde_json::to_string_pretty(&Doc { schema: SCHEMA, config, result })
        .map(|s| s + "\n")
        .map_err(|e| Failure::Numeric(format!("serialization: {e}")))
}

fn enum_str<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

fn opt_str<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_artifact(path: &str, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| Failure::Input(format!("cannot write {path}: {e}")))
}

/// Print the main document; `--output` gets the side artifact when one
/// exists for the subcommand, otherwise a copy of the document.
fn emit(
    format: FormatOpt,
    output: Option<&str>,
    json: String,
    csv: String,
    artifact: Option<String>,
) -> CliResult<()> {
    let main = match format {
        FormatOpt::Json => json,
        FormatOpt::Csv => csv,
    };
    print!("{main}");
    if let Some(path) = output {
        match artifact {
            Some(side) => write_artifact(path, &side)?,
            None => write_artifact(path, &main)?,
        }
    }
    Ok(())
}

// ---- shared resolution helpers ----------------------------------------------------

#[derive(Clone, Copy, Serialize)]
struct ParamsEcho {
    dim: u32,
    alpha: f64,
    b: f64,
    c: f64,
}

fn resolve_params(args: &ParamArgs, cfg: &FileCfg) -> CliResult<(OperatorParams, ParamsEcho)> {
    let dim = require(merged(args.dim, cfg, "dim")?, "--dim")?;
    let alpha = require(merged(args.alpha, cfg, "alpha")?, "--alpha")?;
    let b = require(merged(args.b, cfg, "b")?, "--b")?;
    let c = require(merged(args.c, cfg, "c")?, "--c")?;
    let params = OperatorParams::new(dim, alpha, b, c).map_err(input_err)?;
    Ok((params, ParamsEcho { dim, alpha, b, c }))
}

#[derive(Clone, Copy, Serialize)]
struct GridEcho {
    s_min: f64,
    s_max: f64,
    nodes: usize,
}

fn resolve_grid(args: &GridArgs, cfg: &FileCfg, alpha: f64) -> CliResult<(Arc<LogGrid>, GridEcho)> {
    let fallback = LogGrid::default_for(alpha);
    let s_min = merged(args.grid_min, cfg, "grid-min")?.unwrap_or(fallback.s[0]);
    let s_max = merged(args.grid_max, cfg, "grid-max")?.unwrap_or(*fallback.s.last().unwrap());
    let nodes = merged(args.grid_nodes, cfg, "grid-nodes")?.unwrap_or(fallback.len());
    let grid = LogGrid::new(s_min, s_max, nodes).map_err(|e: GridError| input_err(e))?;
    Ok((Arc::new(grid), GridEcho { s_min, s_max, nodes }))
}

fn resolve_out(args: &OutputArgs, cfg: &FileCfg) -> CliResult<(FormatOpt, Option<String>)> {
    let format = merged_enum(args.format, cfg, "format")?.unwrap_or(FormatOpt::Json);
    let output = merged(args.output.clone(), cfg, "output")?;
    Ok((format, output))
}

// ---- sweeps --------------------------------------------------------------------

fn thread_cap() -> usize {
    std::env::var("SEL_LAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&k| k >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(8)
        })
}

/// Run `f` over `items`, possibly concurrently, preserving input order.
fn sweep_map<T, R, F>(items: &[T], f: F) -> Vec<CliResult<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> CliResult<R> + Sync,
{
    let cap = thread_cap();
    if items.len() <= 1 || cap <= 1 {
        return items.iter().map(&f).collect();
    }
    let mut out: Vec<Option<CliResult<R>>> = items.iter().map(|_| None).collect();
    let chunk = items.len().div_ceil(cap);
    std::thread::scope(|scope| {
        for (slots, work) in out.chunks_mut(chunk).zip(items.chunks(chunk)) {
            let f = &f;
            scope.spawn(move || {
                for (slot, item) in slots.iter_mut().zip(work) {
                    *slot = Some(f(item));
                }
            });
        }
    });
    out.into_iter().map(|r| r.expect("every slot filled")).collect()
}

// ---- classify -------------------------------------------------------------------

#[derive(Serialize)]
struct ClassifyConfig {
    subcommand: &'static str,
    params: ParamsEcho,
    p: f64,
    domain: DomainKind,
    format: &'static str,
    output: Option<String>,
}

fn run_classify(
    args: ParamArgs,
    p: Option<f64>,
    domain: Option<DomainOpt>,
    out: OutputArgs,
    cfg: &FileCfg,
) -> CliResult<()> {
    let (params, echo) = resolve_params(&args, cfg)?;
    let p = merged(p, cfg, "p")?.unwrap_or(2.0);
    let domain: DomainKind =
        merged_enum(domain, cfg, "domain")?.unwrap_or(DomainOpt::WholeSpace).into();
    let (format, output) = resolve_out(&out, cfg)?;
    let cls = classify(&params, p, domain).map_err(input_err)?;
    let config = ClassifyConfig {
        subcommand: "classify",
        params: echo,
        p,
        domain,
        format: format.name(),
        output: output.clone(),
    };
    let json = json_doc(&config, &cls)?;
    let mut csv = String::from(
        "verdict,n_over_p,lo,hi,lo_closed,hi_closed,int_eq_min,int_eq_max,selfadjoint,theta_lo,theta_hi,theta0\n",
    );
    let iv = cls.interval;
    let th = cls.theta.interval;
    writeln!(
        csv,
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        enum_str(&cls.verdict),
        cls.n_over_p,
        opt_str(iv.map(|i| i.lo)),
        opt_str(iv.map(|i| i.hi)),
        opt_str(iv.map(|i| i.lo_closed)),
        opt_str(iv.map(|i| i.hi_closed)),
        cls.int_eq_min,
        cls.int_eq_max,
        opt_str(cls.selfadjoint),
        opt_str(th.map(|i| i.lo)),
        opt_str(th.map(|i| i.hi)),
        opt_str(cls.theta.theta0),
    )
    .expect("string write");
    emit(format, output.as_deref(), json, csv, None)
}

// ---- solve ---------------------------------------------------------------------

#[derive(Serialize)]
struct SolveConfig {
    subcommand: &'static str,
    params: ParamsEcho,
    p: f64,
    lambda: Vec<f64>,
    theta: Vec<f64>,
    method: &'static str,
    annulus_eps: Option<f64>,
    data_support: (f64, f64),
    grid: GridEcho,
    format: &'static str,
    output: Option<String>,
}

#[derive(Serialize)]
struct SolveSummary {
    lambda: f64,
    method: Method,
    norm_p: f64,
    weighted_norms: Vec<(f64, f64)>,
    discrepancy: Option<f64>,
    m_matrix: bool,
}

#[allow(clippy::too_many_arguments)]
fn run_solve(
    args: ParamArgs,
    p: Option<f64>,
    lambda: Option<Vec<f64>>,
    theta: Option<Vec<f64>>,
    method: Option<MethodOpt>,
    annulus_eps: Option<f64>,
    f_lo: Option<f64>,
    f_hi: Option<f64>,
    grid_args: GridArgs,
    out: OutputArgs,
    cfg: &FileCfg,
) -> CliResult<()> {
    let (params, echo) = resolve_params(&args, cfg)?;
    let p = merged(p, cfg, "p")?.unwrap_or(2.0);
    let lambdas = merged_list(lambda, cfg, "lambda")?.unwrap_or_else(|| vec![1.0]);
    let thetas = merged_list(theta, cfg, "theta")?.unwrap_or_default();
    let method = merged_enum(method, cfg, "method")?.unwrap_or(MethodOpt::Dual);
    let annulus_eps = merged(annulus_eps, cfg, "annulus-eps")?;
    let f_lo = merged(f_lo, cfg, "f-lo")?.unwrap_or(0.8);
    let f_hi = merged(f_hi, cfg, "f-hi")?.unwrap_or(2.0);
    let (grid, grid_echo) = resolve_grid(&grid_args, cfg, params.alpha)?;
    let (format, output) = resolve_out(&out, cfg)?;
    if !(f_lo > 0.0 && f_lo < f_hi) {
        return Err(Failure::Input(format!(
            "data support needs 0 < f-lo < f-hi, got {f_lo} and {f_hi}"
        )));
    }
    let data = bump_profile(&grid, f_lo, f_hi);

    let bc = match annulus_eps {
        Some(eps) => BcMode::DirichletAnnulus { eps },
        None => BcMode::DecayingBranch,
    };
    let solves = sweep_map(&lambdas, |&lam| -> CliResult<(SolveSummary, Vec<f64>)> {
        let summarize = |u: &[f64], m: Method, disc: Option<f64>| SolveSummary {
            lambda: lam,
            method: m,
            norm_p: lp_norm(&grid, u, p, params.dim),
            weighted_norms: thetas
                .iter()
                .map(|&t| {
                    (t, weighted_lp_norm(&grid, u, p, params.dim, t * (params.alpha - 2.0)))
                })
                .collect(),
            discrepancy: disc,
            m_matrix: fd_is_m_matrix(&params, &grid),
        };
        match method {
            MethodOpt::Dual => {
                let rep =
                    dual_solve(&params, p, lam, &grid, &data, &thetas).map_err(resolvent_failure)?;
                let mut summary = summarize(&rep.solution_re, rep.method, rep.discrepancy);
                summary.weighted_norms = rep.weighted_norms.clone();
                Ok((summary, rep.solution_re))
            }
            MethodOpt::Green => {
                let u = green_solve(&params, lam, &grid, &data).map_err(resolvent_failure)?;
                Ok((summarize(&u, Method::Green, None), u))
            }
            MethodOpt::Fd => {
                let u = fd_solve(&params, lam, &grid, &data, bc).map_err(resolvent_failure)?;
                Ok((summarize(&u, Method::FiniteDifference, None), u))
            }
        }
    });

    let mut summaries = Vec::with_capacity(solves.len());
    let mut artifact = String::from("lambda,r,u\n");
    for item in solves {
        let (summary, u) = item?;
        for (i, &ui) in u.iter().enumerate() {
            writeln!(artifact, "{},{},{}", summary.lambda, grid.r[i], ui).expect("string write");
        }
        summaries.push(summary);
    }

    let config = SolveConfig {
        subcommand: "solve",
        params: echo,
        p,
        lambda: lambdas.clone(),
        theta: thetas.clone(),
        method: method.name(),
        annulus_eps,
        data_support: (f_lo, f_hi),
        grid: grid_echo,
        format: format.name(),
        output: output.clone(),
    };
    let json = json_doc(&config, &summaries)?;
    let mut csv = String::from("lambda,method,norm_p,discrepancy,m_matrix\n");
    for s in &summaries {
        writeln!(
            csv,
            "{},{},{},{},{}",
            s.lambda,
            enum_str(&s.method),
            s.norm_p,
            opt_str(s.discrepancy),
            s.m_matrix
        )
        .expect("string write");
    }
    emit(format, output.as_deref(), json, csv, Some(artifact))
}

// ---- evolve --------------------------------------------------------------------

#[derive(Serialize)]
struct EvolveConfig {
    subcommand: &'static str,
    params: ParamsEcho,
    p: Vec<f64>,
    dt: f64,
    t_final: f64,
    scheme: evolve::Scheme,
    initial_support: (f64, f64),
    grid: GridEcho,
    format: &'static str,
    output: Option<String>,
}

#[allow(clippy::too_many_arguments)]
fn run_evolve(
    args: ParamArgs,
    p: Option<Vec<f64>>,
    dt: Option<f64>,
    t_final: Option<f64>,
    scheme: Option<SchemeOpt>,
    f_lo: Option<f64>,
    f_hi: Option<f64>,
    grid_args: GridArgs,
    out: OutputArgs,
    cfg: &FileCfg,
) -> CliResult<()> {
    let (params, echo) = resolve_params(&args, cfg)?;
    let ps = merged_list(p, cfg, "p")?.unwrap_or_else(|| vec![2.0]);
    let dt = merged(dt, cfg, "dt")?.unwrap_or(1e-3);
    let t_final = merged(t_final, cfg, "t-final")?.unwrap_or(1.0);
    let scheme: evolve::Scheme =
        merged_enum(scheme, cfg, "scheme")?.unwrap_or(SchemeOpt::ImplicitEuler).into();
    let f_lo = merged(f_lo, cfg, "f-lo")?.unwrap_or(0.8);
    let f_hi = merged(f_hi, cfg, "f-hi")?.unwrap_or(2.0);
    let (grid, grid_echo) = resolve_grid(&grid_args, cfg, params.alpha)?;
    let (format, output) = resolve_out(&out, cfg)?;
    if !(f_lo > 0.0 && f_lo < f_hi) {
        return Err(Failure::Input(format!(
            "initial support needs 0 < f-lo < f-hi, got {f_lo} and {f_hi}"
        )));
    }
    let initial = RadialGridFunction::new(Arc::clone(&grid), bump_profile(&grid, f_lo, f_hi));

    let runs = sweep_map(&ps, |&pe| {
        evolve::run(&params, pe, &initial, dt, t_final, scheme).map_err(evolve_failure)
    });
    let mut results: Vec<EvolutionRun> = Vec::with_capacity(runs.len());
    for r in runs {
        results.push(r?);
    }

    let config = EvolveConfig {
        subcommand: "evolve",
        params: echo,
        p: ps.clone(),
        dt,
        t_final,
        scheme,
        initial_support: (f_lo, f_hi),
        grid: grid_echo,
        format: format.name(),
        output: output.clone(),
    };
    let json = json_doc(&config, &results)?;
    let mut csv = String::from("p,t,norm,min\n");
    for run in &results {
        for (&(t, norm), &(_, min)) in run.norm_history.iter().zip(&run.min_history) {
            writeln!(csv, "{},{},{},{}", run.p, t, norm, min).expect("string write");
        }
    }
    let mut artifact = String::from("p,r,u_final\n");
    for run in &results {
        for (i, &ui) in run.final_state.values.iter().enumerate() {
            writeln!(artifact, "{},{},{}", run.p, grid.r[i], ui).expect("string write");
        }
    }
    emit(format, output.as_deref(), json, csv, Some(artifact))
}

// ---- oscillate -----------------------------------------------------------------

#[derive(Serialize)]
struct OscillateConfig {
    subcommand: &'static str,
    params: ParamsEcho,
    lambda: f64,
    s_from: f64,
    format: &'static str,
    output: Option<String>,
}

#[derive(Serialize)]
struct OscillateResult {
    /// potential threshold: beyond m the exponential term is below k/2
    threshold_m: f64,
    /// constant part of the transformed potential (the discriminant)
    potential_constant: f64,
    window: (f64, f64),
    zero_count: usize,
    zeros: Vec<f64>,
    mean_spacing: Option<f64>,
    /// deep-window spacing pi / sqrt(-k)
    asymptotic_spacing: f64,
    wronskian_defect: f64,
    witness_s: f64,
    witness_value: f64,
    bump_support: (f64, f64),
}

fn run_oscillate(
    args: ParamArgs,
    lambda: Option<f64>,
    s_from: Option<f64>,
    out: OutputArgs,
    cfg: &FileCfg,
) -> CliResult<()> {
    let (params, echo) = resolve_params(&args, cfg)?;
    let lambda = merged(lambda, cfg, "lambda")?.unwrap_or(1.0);
    let s_from = merged(s_from, cfg, "s-from")?.unwrap_or(-40.0);
    let (format, output) = resolve_out(&out, cfg)?;

    let tr = transform(&params, lambda).map_err(oscillate_failure)?;
    // the oscillatory side: s -> -inf for alpha < 2, s -> +inf for alpha > 2
    let window = if tr.rate > 0.0 { (s_from, tr.m) } else { (tr.m, -s_from) };
    let pair =
        integrate_homogeneous(&params, lambda, window.0, window.1).map_err(oscillate_failure)?;
    let cx = build_counterexample(&params, lambda).map_err(oscillate_failure)?;

    let spacings: Vec<f64> = pair.zeros.windows(2).map(|w| w[1] - w[0]).collect();
    let mean_spacing = if spacings.is_empty() {
        None
    } else {
        Some(spacings.iter().sum::<f64>() / spacings.len() as f64)
    };
    let result = OscillateResult {
        threshold_m: tr.m,
        potential_constant: tr.k,
        window,
        zero_count: pair.zeros.len(),
        zeros: pair.zeros.clone(),
        mean_spacing,
        asymptotic_spacing: std::f64::consts::PI / (-tr.k).sqrt(),
        wronskian_defect: pair.wronskian_defect,
        witness_s: cx.witness_s,
        witness_value: cx.witness_value,
        bump_support: cx.g_support,
    };

    let config = OscillateConfig {
        subcommand: "oscillate",
        params: echo,
        lambda,
        s_from,
        format: format.name(),
        output: output.clone(),
    };
    let json = json_doc(&config, &result)?;
    let mut csv = String::from("index,zero_s,spacing\n");
    for (i, &z) in pair.zeros.iter().enumerate() {
        let spacing = if i == 0 { String::new() } else { spacings[i - 1].to_string() };
        writeln!(csv, "{i},{z},{spacing}").expect("string write");
    }
    let mut artifact = String::from("r,phi\n");
    for &(r, phi) in &cx.phi {
        writeln!(artifact, "{r},{phi}").expect("string write");
    }
    emit(format, output.as_deref(), json, csv, Some(artifact))
}

// ---- verify --------------------------------------------------------------------

#[derive(Serialize)]
struct VerifyConfig {
    subcommand: &'static str,
    suite: &'static str,
    seed: u64,
    format: &'static str,
    output: Option<String>,
}

#[derive(Serialize)]
struct SuiteScore {
    suite: &'static str,
    passes: usize,
    total: usize,
    passed: bool,
}

#[derive(Serialize)]
struct Scorecard {
    suites: Vec<SuiteScore>,
    all_passed: bool,
}

fn score(suite: &'static str, passes: usize, total: usize) -> SuiteScore {
    SuiteScore { suite, passes, total, passed: passes == total }
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
}

/// 200 seeded (profile, harmonic) draws on a margin-positive fixture: the
/// form must be nonnegative and obey the sectoriality cone.
fn suite_dissipativity(seed: u64) -> CliResult<SuiteScore> {
    let params = OperatorParams::new(3, 0.0, 0.0, 0.0).map_err(input_err)?;
    let p = 2.0;
    let cone = params.sectoriality_constant(p).map_err(input_err)?;
    let grid = Arc::new(LogGrid::new(-6.0, 6.0, 1201).map_err(input_err)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = 200;
    let mut passes = 0;
    for _ in 0..total {
        let center: f64 = rng.gen_range(-2.0..2.0);
        let half: f64 = rng.gen_range(0.25..1.0);
        let n: u32 = rng.gen_range(0..=3);
        let g = bump_profile(&grid, (center - half).exp(), (center + half).exp());
        let tf = TestFunction::new(Arc::clone(&grid), g, n, p).map_err(forms_failure)?;
        let rep = dissipativity_form(&params, &tf).map_err(forms_failure)?;
        let ok = rep.real_part >= -1e-8 * rep.scale
            && rep.imaginary_part.abs() <= cone * rep.real_part + 1e-8 * rep.scale;
        passes += usize::from(ok);
    }
    Ok(score("dissipativity", passes, total))
}

/// Negative-margin fixtures must yield a certified violating profile.
fn suite_violation() -> CliResult<SuiteScore> {
    let fixtures = [(3u32, 0.0, -0.4, 0.0, 2.0), (3, 0.0, -0.4, 0.0, 3.0), (4, 0.5, -2.0, 0.5, 2.0)];
    let mut passes = 0;
    for &(dim, alpha, b, c, p) in &fixtures {
        let params = OperatorParams::new(dim, alpha, b, c).map_err(input_err)?;
        let sweep = violation_search(&params, p).map_err(forms_failure)?;
        passes += usize::from(sweep.worst_ratio <= -1e-3);
    }
    Ok(score("violation", passes, fixtures.len()))
}

/// 20 seeded bumps against the positive-margin coercivity fixture.
fn suite_coercivity(seed: u64) -> CliResult<SuiteScore> {
    let params = OperatorParams::new(5, 0.0, 1.0, 0.0).map_err(input_err)?;
    let grid = Arc::new(LogGrid::new(-6.0, 6.0, 1201).map_err(input_err)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = 20;
    let mut passes = 0;
    for _ in 0..total {
        let center: f64 = rng.gen_range(-2.0..2.0);
        let half: f64 = rng.gen_range(0.3..1.2);
        let g = bump_profile(&grid, (center - half).exp(), (center + half).exp());
        let tf = TestFunction::new(Arc::clone(&grid), g, 0, 2.0).map_err(forms_failure)?;
        let rep = weighted_coercivity(&params, 2.0, &tf).map_err(forms_failure)?;
        passes += usize::from(rep.passed && rep.real_part > rep.lower_bound);
    }
    Ok(score("coercivity", passes, total))
}

/// 50 seeded ball profiles (bumps, log-power plateaus, Hardy
/// near-optimizers) for p in {1.5, 2, 3}.
fn suite_log_hardy(seed: u64) -> CliResult<SuiteScore> {
    let grid = LogGrid::new(-50.0, 0.0, 5001).map_err(input_err)?;
    let mut passes = 0;
    let mut total = 0;
    for p in [1.5, 2.0, 3.0] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in 0..50u32 {
            let v = match k % 3 {
                0 => {
                    let center: f64 = rng.gen_range(-30.0..-3.0);
                    let half: f64 = rng.gen_range(0.5..2.5);
                    bump_profile(&grid, (center - half).exp(), (center + half).exp())
                }
                rest => {
                    let q: f64 = if rest == 1 { rng.gen_range(0.3..1.5) } else { 1.0 / p };
                    let t0: f64 = rng.gen_range(0.2..1.5);
                    grid.sample(|r| {
                        let t = -r.ln();
                        if t <= t0 {
                            return 0.0;
                        }
                        let chi = if t < 2.0 * t0 {
                            smoothstep(t / t0 - 1.0)
                        } else if t > 12.0 {
                            smoothstep((48.0 / t).ln() / 4.0f64.ln())
                        } else {
                            1.0
                        };
                        t.powf(q) * chi
                    })
                }
            };
            let rep = log_hardy(p, &grid, &v).map_err(forms_failure)?;
            passes += usize::from(rep.passed);
            total += 1;
        }
    }
    Ok(score("log-hardy", passes, total))
}

/// Fitted interpolation constants must stay bounded over the corpus.
fn suite_interpolation() -> CliResult<SuiteScore> {
    let params = OperatorParams::new(3, 0.8, 0.5, -0.2).map_err(input_err)?;
    let grid = LogGrid::new(-6.0, 6.0, 1201).map_err(input_err)?;
    let rep = interpolation_corpus(&params, 2.0, &grid).map_err(forms_failure)?;
    let passes = rep.max_c.iter().filter(|c| c.is_finite() && **c <= 100.0).count();
    Ok(score("interpolation", passes, rep.max_c.len()))
}

fn run_verify(
    suite: Option<SuiteOpt>,
    seed: Option<u64>,
    out: OutputArgs,
    cfg: &FileCfg,
) -> CliResult<()> {
    let suite = merged_enum(suite, cfg, "suite")?.unwrap_or(SuiteOpt::All);
    let seed = merged(seed, cfg, "seed")?.unwrap_or(0);
    let (format, output) = resolve_out(&out, cfg)?;

    let mut suites = Vec::new();
    if matches!(suite, SuiteOpt::All | SuiteOpt::Dissipativity) {
        suites.push(suite_dissipativity(seed)?);
    }
    if matches!(suite, SuiteOpt::All | SuiteOpt::Violation) {
        suites.push(suite_violation()?);
    }
    if matches!(suite, SuiteOpt::All | SuiteOpt::Coercivity) {
        suites.push(suite_coercivity(seed)?);
    }
    if matches!(suite, SuiteOpt::All | SuiteOpt::LogHardy) {
        suites.push(suite_log_hardy(seed)?);
    }
    if matches!(suite, SuiteOpt::All | SuiteOpt::Interpolation) {
        suites.push(suite_interpolation()?);
    }
    let all_passed = suites.iter().all(|s| s.passed);
    let result = Scorecard { suites, all_passed };

    let config = VerifyConfig {
        subcommand: "verify",
        suite: suite.name(),
        seed,
        format: format.name(),
        output: output.clone(),
    };
    let json = json_doc(&config, &result)?;
    let mut csv = String::from("suite,passes,total\n");
    for s in &result.suites {
        writeln!(csv, "{},{},{}", s.suite, s.passes, s.total).expect("string write");
    }
    emit(format, output.as_deref(), json, csv, None)
}

// ---- bessel --------------------------------------------------------------------

#[derive(Serialize)]
struct BesselConfig {
    subcommand: &'static str,
    nu: f64,
    x: f64,
    format: &'static str,
    output: Option<String>,
}

#[derive(Serialize)]
struct BesselResult {
    plain: BesselEval,
    scaled: ScaledBesselEval,
}

fn run_bessel(nu: Option<f64>, x: Option<f64>, out: OutputArgs, cfg: &FileCfg) -> CliResult<()> {
    let nu = require(merged(nu, cfg, "nu")?, "--nu")?;
    let x = require(merged(x, cfg, "x")?, "--x")?;
    let (format, output) = resolve_out(&out, cfg)?;
    let plain = bessel_ik(nu, x).map_err(bessel_failure)?;
    let scaled = bessel_ik_scaled(nu, x).map_err(bessel_failure)?;
    let result = BesselResult { plain, scaled };
    let config = BesselConfig {
        subcommand: "bessel",
        nu,
        x,
        format: format.name(),
        output: output.clone(),
    };
    let json = json_doc(&config, &result)?;
    let mut csv = String::from("nu,x,i,k,di,dk\n");
    writeln!(
        csv,
        "{},{},{},{},{},{}",
        nu, x, plain.value_i, plain.value_k, plain.deriv_i, plain.deriv_k
    )
    .expect("string write");
    emit(format, output.as_deref(), json, csv, None)
}

// ---- entry ---------------------------------------------------------------------

fn dispatch(cli: Cli) -> CliResult<()> {
    let cfg = FileCfg::load(cli.config.as_ref())?;
    match cli.command {
        Command::Classify { params, p, domain, out } => run_classify(params, p, domain, out, &cfg),
        Command::Solve {
            params,
            p,
            lambda,
            theta,
            method,
            annulus_eps,
            f_lo,
            f_hi,
            grid,
            out,
        } => run_solve(params, p, lambda, theta, method, annulus_eps, f_lo, f_hi, grid, out, &cfg),
        Command::Evolve { params, p, dt, t_final, scheme, f_lo, f_hi, grid, out } => {
            run_evolve(params, p, dt, t_final, scheme, f_lo, f_hi, grid, out, &cfg)
        }
        Command::Oscillate { params, lambda, s_from, out } => {
            run_oscillate(params, lambda, s_from, out, &cfg)
        }
        Command::Verify { suite, seed, out } => run_verify(suite, seed, out, &cfg),
        Command::Bessel { nu, x, out } => run_bessel(nu, x, out, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("sel-lab: invalid input: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("sel-lab: numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}
