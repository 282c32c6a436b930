//! The `coherelab` command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod netfile;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};
use coherelab::aggregate::{self, AggregateModel, DEFAULT_TRANSIENT_FRACTION};
use coherelab::coherence::{csv_number, reports_to_csv, FrequencyGrid, NetworkModel, RhpEligibility, Tolerances};
use coherelab::concentration::{self, GraphFamily, RandomTFModel};
use coherelab::rational::{self, ExtComplex};
use coherelab::timedomain::{self, Input, SimOptions};
use num_complex::Complex64;

pub use error::CliError;
pub use netfile::NetworkFile;

pub const THREADS_ENV: &str = "COHERELAB_THREADS";

#[derive(Debug, Parser)]
#[command(name = "coherelab", version, about = "Coherence analysis of heterogeneous linear networks")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Relative size under which a polynomial value counts as zero.
    #[arg(long, global = true, default_value_t = rational::DEFAULT_TOL_ZERO)]
    pub tol_zero: f64,
    /// Root distance for pole/zero cancellation.
    #[arg(long, global = true, default_value_t = rational::DEFAULT_TOL_CANCEL)]
    pub tol_cancel: f64,
    /// Distance under which a point is classified as a pole or zero.
    #[arg(long, global = true, default_value_t = Tolerances::default().proximity)]
    pub tol_proximity: f64,
    /// Condition estimate above which a solve is flagged.
    #[arg(long, global = true, default_value_t = Tolerances::default().condition)]
    pub tol_condition: f64,
    /// Write the result here instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<String>,
}

impl GlobalOpts {
    fn tolerances(&self) -> Result<Tolerances, CliError> {
        let t = Tolerances {
            zero: self.tol_zero,
            cancel: self.tol_cancel,
            proximity: self.tol_proximity,
            condition: self.tol_condition,
        };
        if [t.zero, t.cancel, t.proximity, t.condition].iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(CliError::Invalid("tolerances must be positive and finite".into()));
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpacingArg {
    Lin,
    Log,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub omega_min: f64,
    #[arg(long)]
    pub omega_max: f64,
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    #[arg(long, value_enum, default_value_t = SpacingArg::Lin)]
    pub spacing: SpacingArg,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the coherence report at a single point s = sigma + i omega.
    Eval {
        #[arg(long)]
        net: String,
        #[arg(long, allow_hyphen_values = true)]
        sigma: f64,
        #[arg(long, allow_hyphen_values = true)]
        omega: f64,
    },
    /// Coherence reports along a vertical line of the s-plane, as CSV.
    Sweep {
        #[arg(long)]
        net: String,
        #[arg(long, allow_hyphen_values = true)]
        sigma: f64,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Incoherence and its bound as the Laplacian is scaled by each alpha.
    Converge {
        #[arg(long)]
        net: String,
        #[arg(long, allow_hyphen_values = true)]
        sigma: f64,
        #[arg(long, allow_hyphen_values = true)]
        omega: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        alphas: Vec<f64>,
    },
    /// Simulate the closed loop in the time domain and print the trajectory as CSV.
    Simulate {
        #[arg(long)]
        net: String,
        /// `impulse`, `step:<node>:<magnitude>` or `sin:<omega>:<amplitude>`.
        #[arg(long)]
        input: String,
        #[arg(long)]
        t_end: f64,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, default_value_t = 1)]
        stride: usize,
        /// Append the coherent reference response as a `y_ref` column.
        #[arg(long)]
        reference: bool,
    },
    /// Monte Carlo concentration study over random node dynamics.
    Concentrate {
        /// File holding a random model such as `num: U(1,5) / den: 0 1`.
        #[arg(long)]
        model: String,
        /// `complete` or `ring:<ratio>`.
        #[arg(long, default_value = "complete")]
        family: String,
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.5)]
        sigma: f64,
        #[arg(long, default_value_t = 0.1)]
        omega_min: f64,
        #[arg(long, default_value_t = 2.0)]
        omega_max: f64,
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long, value_enum, default_value_t = SpacingArg::Lin)]
        spacing: SpacingArg,
    },
    /// Reduced-order aggregate of the network, optionally checked against a simulation.
    Aggregate {
        #[arg(long)]
        net: String,
        /// Simulate and report the worst deviation from the aggregate response.
        #[arg(long, requires_all = ["input", "t_end"])]
        compare: bool,
        #[arg(long)]
        input: Option<String>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        /// Leading fraction of the horizon excluded from the error.
        #[arg(long, default_value_t = DEFAULT_TRANSIENT_FRACTION)]
        transient: f64,
    },
    /// Validate a network file and report which structural assumptions hold.
    Check {
        #[arg(long)]
        net: String,
    },
}

/// Runs the tool on `args` (including the program name) and returns the exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = configure_threads().and_then(|()| execute(&cli));
    match result {
        Ok(Outcome { text, code }) => {
            let written = match &cli.global.out {
                Some(path) => std::fs::write(path, &text).map_err(|source| CliError::Io {
                    path: path.clone(),
                    source,
                }),
                None => out.write_all(text.as_bytes()).map_err(|source| CliError::Io {
                    path: "<stdout>".into(),
                    source,
                }),
            };
            match written {
                Ok(()) => code,
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    e.exit_code()
                }
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn run() -> i32 {
    run_with(std::env::args_os(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let threads: usize = value
        .trim()
        .parse()
        .map_err(|_| CliError::Invalid(format!("{THREADS_ENV} must be a non-negative integer, got `{value}`")))?;
    // A second call in the same process finds the pool already built; that is fine.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

struct Outcome {
    text: String,
    code: i32,
}

impl From<String> for Outcome {
    fn from(text: String) -> Self {
        Self { text, code: 0 }
    }
}

fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let tol = cli.global.tolerances()?;
    match &cli.command {
        Command::Eval { net, sigma, omega } => {
            let model = load_model(net, tol)?;
            Ok(eval_text(&model, Complex64::new(*sigma, *omega)).into())
        }
        Command::Sweep { net, sigma, grid } => {
            let model = load_model(net, tol)?;
            let grid = build_grid(*sigma, grid.omega_min, grid.omega_max, grid.points, grid.spacing)?;
            Ok(reports_to_csv(&model.sweep(&grid)).into())
        }
        Command::Converge {
            net,
            sigma,
            omega,
            alphas,
        } => {
            let model = load_model(net, tol)?;
            if alphas.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
                return Err(CliError::Invalid("alphas must be positive and finite".into()));
            }
            let rows = model.convergence_study(Complex64::new(*sigma, *omega), alphas)?;
            let mut text = String::from("alpha,incoherence,bound,norm_T\n");
            for r in rows {
                let _ = writeln!(
                    text,
                    "{},{},{},{}",
                    r.alpha,
                    csv_number(r.incoherence),
                    csv_number(r.lemma4_bound),
                    csv_number(Some(r.norm_t))
                );
            }
            Ok(text.into())
        }
        Command::Simulate {
            net,
            input,
            t_end,
            dt,
            stride,
            reference,
        } => {
            let model = load_model(net, tol)?;
            let input = parse_input(input, model.n())?;
            let opts = sim_options(*t_end, *dt)?.with_stride(*stride);
            let text = if *reference {
                let (full, reference) = timedomain::simulate_with_reference(&model, &input, &opts)?;
                full.to_csv(Some(&reference))
            } else {
                let ss = timedomain::closed_loop(&model)?;
                timedomain::simulate(&ss, &input, &opts)?.to_csv(None)
            };
            Ok(text.into())
        }
        Command::Concentrate {
            model,
            family,
            sizes,
            trials,
            epsilon,
            seed,
            sigma,
            omega_min,
            omega_max,
            points,
            spacing,
        } => {
            let text = read(model)?;
            let random: RandomTFModel = text
                .lines()
                .map(|l| l.split('#').next().unwrap_or("").trim())
                .filter(|l| !l.is_empty())
                .collect::<Vec<_>>()
                .join(" ")
                .parse()
                .map_err(|e: coherelab::ConcentrationError| CliError::Invalid(format!("{model}: {e}")))?;
            let family = parse_family(family)?;
            if !(*epsilon > 0.0) {
                return Err(CliError::Invalid("epsilon must be positive".into()));
            }
            let grid = build_grid(*sigma, *omega_min, *omega_max, *points, *spacing)?;
            let table = concentration::concentration_experiment(&random, family, sizes, &grid, *trials, *epsilon, *seed)?;
            Ok(table.to_csv().into())
        }
        Command::Aggregate {
            net,
            compare,
            input,
            t_end,
            dt,
            transient,
        } => {
            let file = load_file(net)?;
            let model = file.model(tol).map_err(|e| e.at(net))?;
            let agg = aggregate_of(&file, &model)?;
            let mut text = format!("{agg}\n");
            if *compare {
                let (Some(input), Some(t_end)) = (input, t_end) else {
                    return Err(CliError::Invalid("--compare needs --input and --t-end".into()));
                };
                if !(0.0..1.0).contains(transient) {
                    return Err(CliError::Invalid("--transient must lie in [0, 1)".into()));
                }
                let input = parse_input(input, model.n())?;
                let opts = sim_options(*t_end, *dt)?;
                let error = aggregate::aggregation_error(&model, &input, &opts, *transient)?;
                let _ = writeln!(text, "aggregation_error: {error}");
            }
            Ok(text.into())
        }
        Command::Check { net } => {
            let file = load_file(net)?;
            let model = file.model(tol).map_err(|e| e.at(net))?;
            Ok(check_outcome(&model))
        }
    }
}

fn read(path: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_string(),
        source,
    })
}

fn load_file(path: &str) -> Result<NetworkFile, CliError> {
    NetworkFile::parse(&read(path)?).map_err(|e| CliError::from(e).at(path))
}

fn load_model(path: &str, tol: Tolerances) -> Result<NetworkModel, CliError> {
    load_file(path)?.model(tol).map_err(|e| e.at(path))
}

fn build_grid(sigma: f64, lo: f64, hi: f64, points: usize, spacing: SpacingArg) -> Result<FrequencyGrid, CliError> {
    let grid = match spacing {
        SpacingArg::Lin => FrequencyGrid::linear(sigma, lo, hi, points),
        SpacingArg::Log => FrequencyGrid::logarithmic(sigma, lo, hi, points),
    };
    Ok(grid?)
}

fn sim_options(t_end: f64, dt: Option<f64>) -> Result<SimOptions, CliError> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(CliError::Invalid("--t-end must be positive".into()));
    }
    let opts = SimOptions::new(t_end);
    match dt {
        Some(dt) if !(dt > 0.0) || dt > t_end => Err(CliError::Invalid("--dt must lie in (0, t_end]".into())),
        Some(dt) => Ok(opts.with_dt(dt)),
        None => Ok(opts),
    }
}

/// Parses `impulse`, `step:<node>:<magnitude>` or `sin:<omega>:<amplitude>`.
pub fn parse_input(text: &str, n: usize) -> Result<Input, CliError> {
    let bad = || CliError::Invalid(format!("bad input `{text}`; expected impulse, step:<node>:<mag> or sin:<omega>:<amp>"));
    let parts: Vec<&str> = text.split(':').collect();
    match parts[..] {
        ["impulse"] => Ok(Input::impulse_all()),
        ["step", node, mag] => {
            let node: usize = node.parse().map_err(|_| bad())?;
            if node >= n {
                return Err(CliError::Invalid(format!("step node {node} out of range for {n} nodes")));
            }
            Ok(Input::step_node(node, mag.parse().map_err(|_| bad())?))
        }
        ["sin", omega, amp] => Ok(Input::sinusoid_all(
            omega.parse().map_err(|_| bad())?,
            amp.parse().map_err(|_| bad())?,
        )),
        _ => Err(bad()),
    }
}

fn parse_family(text: &str) -> Result<GraphFamily, CliError> {
    match text.split_once(':') {
        None if text == "complete" => Ok(GraphFamily::Complete),
        Some(("ring", ratio)) => match ratio.parse::<f64>() {
            Ok(ratio) if ratio > 0.0 && ratio < 0.5 => Ok(GraphFamily::Ring { ratio }),
            _ => Err(CliError::Invalid(format!("ring ratio must lie in (0, 0.5), got `{ratio}`"))),
        },
        _ => Err(CliError::Invalid(format!("unknown family `{text}`; expected complete or ring:<ratio>"))),
    }
}

fn aggregate_of(file: &NetworkFile, model: &NetworkModel) -> Result<AggregateModel, CliError> {
    let aggregate = match file.generators() {
        Some(params) if params.iter().all(|p| p.droop.is_none()) => aggregate::swing_aggregate(&params)?,
        Some(params) if params.iter().all(|p| p.droop.is_some()) => aggregate::swing_turbine_aggregate(&params)?,
        _ => aggregate::aggregate_dynamics(model.nodes())?,
    };
    Ok(aggregate)
}

fn complex_text(z: Complex64) -> String {
    if z.im < 0.0 {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

fn eval_text(model: &NetworkModel, s0: Complex64) -> String {
    let report = model.report(s0);
    let gbar = match report.gbar {
        Some(ExtComplex::Finite(v)) => complex_text(v),
        Some(ExtComplex::AtInfinity) => "inf".into(),
        None => "nan".into(),
    };
    let mut text = String::new();
    let _ = writeln!(text, "s0: {}", complex_text(s0));
    let _ = writeln!(text, "status: {}", report.status);
    let _ = writeln!(text, "incoherence: {}", csv_number(report.incoherence));
    let _ = writeln!(text, "bound: {}", csv_number(report.lemma4_bound));
    let _ = writeln!(text, "eff_conn: {}", csv_number(Some(report.effective_connectivity)));
    let _ = writeln!(text, "norm_T: {}", csv_number(report.norm_t));
    let _ = writeln!(text, "multiplicity: {}", report.nodal_multiplicity);
    let _ = writeln!(text, "gbar: {gbar}");
    text
}

fn check_outcome(model: &NetworkModel) -> Outcome {
    let a = model.assumptions();
    let l = model.laplacian();
    let yes_no = |b: bool| if b { "yes" } else { "no" };
    let list = |v: &[usize]| {
        if v.is_empty() {
            "none".to_string()
        } else {
            v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
        }
    };
    let clashes = if a.clashes.is_empty() {
        "none".to_string()
    } else {
        a.clashes
            .iter()
            .map(|c| format!("node {} at {}", c.node, complex_text(c.point)))
            .collect::<Vec<_>>()
            .join("; ")
    };
    let mut text = String::new();
    let _ = writeln!(text, "nodes: {}", model.n());
    let _ = writeln!(text, "lambda2: {}", l.algebraic_connectivity());
    let _ = writeln!(text, "connected: {}", yes_no(a.connected));
    let _ = writeln!(text, "improper_nodes: {}", list(&a.improper_nodes));
    let _ = writeln!(text, "coupling_proper: {}", yes_no(a.coupling_proper));
    let _ = writeln!(text, "pole_zero_clashes: {clashes}");
    let _ = writeln!(
        text,
        "coherent_dynamics: {}",
        model.coherent().map_or_else(|| "unavailable".to_string(), ToString::to_string)
    );
    let _ = writeln!(text, "assumptions: {}", if a.is_satisfied() { "satisfied" } else { "violated" });
    let _ = match model.rhp_uniform_check() {
        RhpEligibility::Eligible => writeln!(text, "rhp_uniform: eligible"),
        RhpEligibility::Ineligible(why) => writeln!(text, "rhp_uniform: ineligible ({why})"),
    };
    Outcome {
        text,
        code: if a.is_satisfied() { 0 } else { 1 },
    }
}
