//! Command-line front end. [`run`] parses arguments, dispatches to the solvers and writes a
//! JSON result file, keeping I/O injectable for tests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use chebball::ccb::{self, CcbSolution, SQP_GAP_TOL};
use chebball::gen::{generate, GenConfig};
use chebball::hardness::{partition_bruteforce, reduce_to_p0, MAX_BRUTEFORCE_DIM};
use chebball::io::{instance_to_json, parse_instance, to_canonical_json, Instance};
use chebball::lp::{uq_lp, LpStatus};
use chebball::oracle::{oracle_ccb, oracle_uq, OracleConfig};
use chebball::planar::solve_planar;
use chebball::problem::{recenter, validate, CcbInstance, UqInstance};
use chebball::uq::{
    approx_round, duality_conditions, sdp_value_with, solve_exact_with, trichotomy, EnumerationConfig,
    Trichotomy, UqSolution,
};
use chebball::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "chebball", version, about = "Chebyshev center of an intersection of balls")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Options,
}

#[derive(Args, Debug)]
struct Options {
    /// Feasibility tolerance used when recentering.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Target accuracy of the ellipsoid method.
    #[arg(long, global = true, default_value_t = 1e-6)]
    eps: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Iteration cap for the ellipsoid method.
    #[arg(long = "max-iter", global = true, default_value_t = 1_000_000)]
    max_iter: usize,
    /// Largest number of active sets the exact enumeration may visit.
    #[arg(long, global = true, default_value_t = 10_000_000)]
    budget: u64,
    /// Solver for solve-ccb; defaults to planar in the plane and ellipsoid otherwise.
    #[arg(long, global = true, value_enum)]
    method: Option<Method>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Planar,
    Ellipsoid,
    Sqp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Chebyshev center of a ball instance.
    SolveCcb { file: PathBuf },
    /// Global optimum of a quadratic instance by active-set enumeration.
    SolveUq { file: PathBuf },
    /// Linear relaxation, vertex classification, semidefinite value and duality conditions.
    RelaxLp { file: PathBuf },
    /// Simplex-constrained quadratic relaxation of a ball instance.
    RelaxSqp { file: PathBuf },
    /// Exact planar solver.
    Planar { file: PathBuf },
    /// Rounded relaxation point with a guaranteed ratio.
    Approx {
        file: PathBuf,
        /// Translate an interior point to the origin first.
        #[arg(long)]
        recenter: bool,
    },
    /// Relaxed center with its approximation ratio certificate.
    Certify { file: PathBuf },
    /// Writes the partition instance for a comma-separated integer vector.
    ReducePartition {
        #[arg(allow_hyphen_values = true)]
        values: String,
        /// Write the ball form instead of the quadratic form.
        #[arg(long)]
        balls: bool,
    },
    /// Sampling reference solution.
    Oracle {
        file: PathBuf,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long = "grid-step", default_value_t = 0.01)]
        grid_step: f64,
    },
    /// Random ball instance with nonempty interior.
    Gen {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        balls: usize,
        #[arg(long, default_value_t = 1.0)]
        spread: f64,
        #[arg(long, default_value_t = 0.5)]
        margin: f64,
    },
}

/// A failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::EmptyInterior { .. } | Error::NotInterior { .. } | Error::PreconditionViolated(_) => {
            EXIT_INFEASIBLE
        }
        Error::NoCandidate { .. } => EXIT_INFEASIBLE,
        Error::BudgetExceeded { .. } | Error::IterationLimit { .. } => EXIT_BUDGET,
        _ => EXIT_USAGE,
    }
}

/// What a command produced: a result file, or an instance file for the generators.
enum Output {
    Result { report: Report, code: i32 },
    Instance(String),
}

/// Fields of a result file; `extra` holds command-specific top-level keys.
struct Report {
    method: String,
    value: f64,
    point: Vec<f64>,
    certificate: Value,
    status: String,
    extra: Map<String, Value>,
    summary: String,
}

impl Report {
    fn new(method: &str, value: f64, point: &[f64], certificate: Value, status: &str) -> Self {
        Self {
            method: method.into(),
            value,
            point: point.to_vec(),
            certificate,
            status: status.into(),
            extra: Map::new(),
            summary: String::new(),
        }
    }

    fn from_ccb(sol: &CcbSolution) -> Self {
        let method = to_value(&sol.method);
        let status = to_value(&sol.status);
        let mut r = Self::new(
            method.as_str().unwrap_or_default(),
            sol.squared_radius,
            sol.center.as_slice(),
            to_value(&sol.certificate),
            status.as_str().unwrap_or_default(),
        );
        r.extra.insert("iterations".into(), json!(sol.iterations));
        r
    }

    fn from_uq(method: &str, sol: &UqSolution) -> Self {
        let mut r = Self::new(method, sol.value, sol.x.as_slice(), to_value(&sol.certificate), "ok");
        r.extra.insert("upper_bound".into(), json!(sol.upper_bound));
        r
    }

    fn to_json(&self, wall_ms: f64, opts: &Options) -> Value {
        let mut map = self.extra.clone();
        map.insert("method".into(), json!(self.method));
        map.insert("value".into(), json!(self.value));
        map.insert("point".into(), json!(self.point));
        map.insert("certificate".into(), self.certificate.clone());
        map.insert("status".into(), json!(self.status));
        map.insert("wall_ms".into(), json!(wall_ms));
        map.insert("seed".into(), json!(opts.seed));
        map.insert(
            "tolerances".into(),
            json!({ "eps": opts.eps, "tol": opts.tol, "sqp_gap": SQP_GAP_TOL }),
        );
        Value::Object(map)
    }

    fn to_text(&self) -> String {
        let point: Vec<String> = self.point.iter().map(|v| v.to_string()).collect();
        let mut text = format!(
            "method: {}\nstatus: {}\nvalue: {}\npoint: [{}]\n",
            self.method,
            self.status,
            self.value,
            point.join(", ")
        );
        for (k, v) in &self.extra {
            text.push_str(&format!("{k}: {v}\n"));
        }
        text
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("solver types serialize")
}

fn load(path: &Path) -> Result<Instance, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    parse_instance(&text).map_err(|e| match e {
        Error::Parse { line, column, message } => Failure::usage(format!(
            "{}: malformed JSON at line {line}, column {column}: {message}",
            path.display()
        )),
        other => Failure::usage(format!("{}: {other}", path.display())),
    })
}

fn load_ccb(path: &Path) -> Result<CcbInstance, Failure> {
    match load(path)? {
        Instance::Ccb(inst) => Ok(inst),
        Instance::Uq(_) => Err(Failure::usage(format!("{}: expected a ccb instance", path.display()))),
    }
}

fn load_uq(path: &Path) -> Result<UqInstance, Failure> {
    match load(path)? {
        Instance::Uq(uq) => Ok(uq),
        Instance::Ccb(_) => Err(Failure::usage(format!("{}: expected a uq instance", path.display()))),
    }
}

fn enumeration(opts: &Options) -> EnumerationConfig {
    EnumerationConfig {
        budget: u128::from(opts.budget),
        ..EnumerationConfig::default()
    }
}

fn ccb_result(sol: Result<CcbSolution, Error>) -> Result<Output, Failure> {
    match sol {
        Ok(sol) => {
            let mut report = Report::from_ccb(&sol);
            report.summary = format!("squared radius {} ({})", sol.squared_radius, report.status);
            Ok(Output::Result { report, code: EXIT_OK })
        }
        Err(Error::IterationLimit {
            iterations,
            gap_estimate,
            best: Some(best),
        }) => {
            let mut report = Report::from_ccb(&best);
            report.summary = format!(
                "iteration limit {iterations} reached, best squared radius {} (gap estimate {gap_estimate:.3e})",
                best.squared_radius
            );
            Ok(Output::Result { report, code: EXIT_BUDGET })
        }
        Err(e) => Err(e.into()),
    }
}

fn solve_ccb(file: &Path, opts: &Options) -> Result<Output, Failure> {
    let inst = load_ccb(file)?;
    validate(&inst)?;
    let method = opts
        .method
        .unwrap_or(if inst.dim() == 2 { Method::Planar } else { Method::Ellipsoid });
    ccb_result(match method {
        Method::Planar => solve_planar(&inst),
        Method::Ellipsoid => ccb::solve_ccb_ellipsoid(&inst, opts.eps, opts.max_iter),
        Method::Sqp => ccb::solve_ccb_sqp(&inst, SQP_GAP_TOL),
    })
}

fn solve_uq(file: &Path, opts: &Options) -> Result<Output, Failure> {
    let uq = load_uq(file)?;
    match solve_exact_with(&uq, &enumeration(opts)) {
        Ok(sol) => {
            let mut report = Report::from_uq("enumeration", &sol);
            report.summary = format!("optimal value {}", sol.value);
            Ok(Output::Result { report, code: EXIT_OK })
        }
        Err(Error::NoCandidate {
            fallback_value: Some(value),
            fallback_point: Some(point),
        }) => {
            let mut report = Report::new("oracle", value, &point, json!({ "kind": "sampling_lower_bound" }), "oracle_fallback");
            report.summary = format!("enumeration found no candidate; sampled value {value}");
            Ok(Output::Result { report, code: EXIT_OK })
        }
        Err(e) => Err(e.into()),
    }
}

fn relax_lp(file: &Path, opts: &Options) -> Result<Output, Failure> {
    let uq = load_uq(file)?;
    let lp = uq_lp(&uq)?;
    let label = match trichotomy(&uq)? {
        Trichotomy::Finite(t) => t.case.label(),
        Trichotomy::Unbounded => "unbounded",
    };
    let sdp = sdp_value_with(&uq, &enumeration(opts))?;
    let duality = duality_conditions(&uq)?;
    let status = match lp.status {
        LpStatus::Optimal => "ok",
        LpStatus::Unbounded => "unbounded",
        LpStatus::Infeasible => "infeasible",
    };
    let mut report = Report::new(
        "lp",
        lp.value,
        lp.x.as_slice(),
        json!({ "kind": "relaxation", "y": lp.y, "lambda": lp.lambda }),
        status,
    );
    report.extra.insert("lp".into(), json!(lp.value));
    report.extra.insert("trichotomy".into(), json!(label));
    report.extra.insert("sdp".into(), json!(sdp));
    report.extra.insert("duality".into(), to_value(&duality));
    report.summary = format!("v(LP) {}, case {label}, v(SDP) {sdp}", lp.value);
    Ok(Output::Result { report, code: EXIT_OK })
}

fn relax_sqp(file: &Path) -> Result<Output, Failure> {
    let inst = load_ccb(file)?;
    let sqp = ccb::solve_sqp(&inst, SQP_GAP_TOL)?;
    let mut report = Report::new(
        "sqp_relaxation",
        sqp.value,
        sqp.z_bar.as_slice(),
        json!({
            "kind": "relaxation",
            "lambda": sqp.lambda,
            "stationarity_gap": sqp.stationarity_gap,
            "iterations": sqp.iterations,
        }),
        "ok",
    );
    report.summary = format!("v(SQP) {}", sqp.value);
    Ok(Output::Result { report, code: EXIT_OK })
}

fn approx(file: &Path, do_recenter: bool, opts: &Options) -> Result<Output, Failure> {
    let uq = load_uq(file)?;
    let mut report = if do_recenter {
        let cert = validate(&uq.to_balls()?)?;
        let rc = recenter(&uq, &cert.point, opts.tol)?;
        let sol = approx_round(&rc.instance)?;
        let x = rc.to_original(&sol.x);
        let mut report = Report::new(
            "approx",
            uq.objective(&x),
            x.as_slice(),
            to_value(&sol.certificate),
            "ok",
        );
        report.extra.insert("shift".into(), json!(rc.shift.as_slice()));
        report
            .extra
            .insert("recentered_value".into(), json!(sol.value));
        report
    } else {
        Report::from_uq("approx", &approx_round(&uq)?)
    };
    report.summary = format!("rounded value {}", report.value);
    Ok(Output::Result { report, code: EXIT_OK })
}

fn certify(file: &Path) -> Result<Output, Failure> {
    let inst = load_ccb(file)?;
    let sol = ccb::solve_ccb_sqp(&inst, SQP_GAP_TOL)?;
    let mut report = Report::from_ccb(&sol);
    report.summary = match &sol.certificate {
        Some(ccb::CcbCertificate::Ratio(c)) => format!(
            "f(z) {} within [{}, {}], ratio {} (gamma {})",
            c.achieved, c.lower, c.upper, c.ratio, c.gamma
        ),
        _ => format!("f(z) {}", sol.squared_radius),
    };
    Ok(Output::Result { report, code: EXIT_OK })
}

fn parse_integers(text: &str) -> Result<Vec<i64>, Failure> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<i64>()
                .map_err(|e| Failure::usage(format!("invalid integer {v:?}: {e}")))
        })
        .collect()
}

fn reduce_partition(text: &str, balls: bool) -> Result<(Output, String), Failure> {
    let values = &parse_integers(text)?[..];
    let (uq, ccb_form) = reduce_to_p0(values)?;
    let text = if balls {
        instance_to_json(&Instance::Ccb(ccb_form))
    } else {
        instance_to_json(&Instance::Uq(uq))
    };
    let verdict = if values.len() <= MAX_BRUTEFORCE_DIM {
        match partition_bruteforce(values)? {
            Some(x) => format!("partition exists: {x:?}"),
            None => "no partition exists".to_string(),
        }
    } else {
        "partition not checked".to_string()
    };
    Ok((Output::Instance(text), format!("instance for n = {}; {verdict}", values.len())))
}

fn oracle(file: &Path, samples: usize, grid_step: f64, opts: &Options) -> Result<Output, Failure> {
    let cfg = OracleConfig {
        samples,
        grid_step,
        seed: opts.seed,
    };
    let mut report = match load(file)? {
        Instance::Ccb(inst) => {
            let ball = oracle_ccb(&inst, &cfg);
            Report::new(
                "oracle_ccb",
                ball.squared_radius,
                ball.center.as_slice(),
                json!({ "kind": "sampling_lower_bound", "resolution": ball.resolution, "samples": samples }),
                "ok",
            )
        }
        Instance::Uq(uq) => {
            let est = oracle_uq(&uq, &cfg).ok_or(Failure {
                code: EXIT_INFEASIBLE,
                message: "no feasible point found".into(),
            })?;
            Report::new(
                "oracle_uq",
                est.value,
                est.point.as_slice(),
                json!({ "kind": "sampling_lower_bound", "resolution": est.resolution }),
                "ok",
            )
        }
    };
    report.summary = format!("sampled value {}", report.value);
    Ok(Output::Result { report, code: EXIT_OK })
}

fn gen(dim: usize, balls: usize, spread: f64, margin: f64, opts: &Options) -> Result<(Output, String), Failure> {
    let inst = generate(&GenConfig {
        dim,
        balls,
        seed: opts.seed,
        spread,
        margin,
    })?;
    Ok((
        Output::Instance(instance_to_json(&Instance::Ccb(inst))),
        format!("{balls} balls in dimension {dim}, seed {}", opts.seed),
    ))
}

fn execute(cli: &Cli) -> Result<(Output, String), Failure> {
    let opts = &cli.opts;
    let name = match &cli.command {
        Command::SolveCcb { .. } => "solve-ccb",
        Command::SolveUq { .. } => "solve-uq",
        Command::RelaxLp { .. } => "relax-lp",
        Command::RelaxSqp { .. } => "relax-sqp",
        Command::Planar { .. } => "planar",
        Command::Approx { .. } => "approx",
        Command::Certify { .. } => "certify",
        Command::Oracle { .. } => "oracle",
        Command::ReducePartition { values, balls } => return reduce_partition(values, *balls),
        Command::Gen {
            dim,
            balls,
            spread,
            margin,
        } => return gen(*dim, *balls, *spread, *margin, opts),
    };
    let out = match &cli.command {
        Command::SolveCcb { file } => solve_ccb(file, opts)?,
        Command::SolveUq { file } => solve_uq(file, opts)?,
        Command::RelaxLp { file } => relax_lp(file, opts)?,
        Command::RelaxSqp { file } => relax_sqp(file)?,
        Command::Planar { file } => ccb_result(solve_planar(&load_ccb(file)?))?,
        Command::Approx { file, recenter } => approx(file, *recenter, opts)?,
        Command::Certify { file } => certify(file)?,
        Command::Oracle {
            file,
            samples,
            grid_step,
        } => oracle(file, *samples, *grid_step, opts)?,
        Command::ReducePartition { .. } | Command::Gen { .. } => unreachable!("handled above"),
    };
    let summary = match &out {
        Output::Result { report, .. } => format!("{name}: {}", report.summary),
        Output::Instance(_) => name.to_string(),
    };
    Ok((out, summary))
}

fn emit(text: &str, opts: &Options, out: &mut dyn Write) -> Result<(), Failure> {
    match &opts.out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display()))),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| Failure::usage(format!("cannot write output: {e}"))),
    }
}

/// Runs the command line `args` (including the program name) and returns the exit code:
/// 0 on success, 1 for usage errors and malformed input, 2 for infeasible instances or an
/// empty interior, 3 when a work budget or iteration cap is exhausted.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    let start = Instant::now();
    let result = execute(&cli).and_then(|(output, summary)| {
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        let (text, code) = match output {
            Output::Instance(json) => (json + "\n", EXIT_OK),
            Output::Result { report, code } => match cli.opts.format {
                Format::Json => (to_canonical_json(&report.to_json(wall_ms, &cli.opts)) + "\n", code),
                Format::Text => (report.to_text(), code),
            },
        };
        emit(&text, &cli.opts, out)?;
        let _ = writeln!(err, "{summary}");
        Ok(code)
    });
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
