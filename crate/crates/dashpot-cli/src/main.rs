//! `dashpot` — analyze, simulate and control dashpot-spring-mass chains.
//!
//! Exit codes: 0 success (for `analyze`: controllable and observable),
//! 3 `analyze` decided "no", 1 usage or input error, 2 internal error.

use clap::{Parser, Subcommand, ValueEnum};
use dashpot::analysis::{
    decide, make_controllable_nonproportional_n3, make_counterexample_n3, AnalysisError, Verdict,
};
use dashpot::chain::{ChainSpec, SpecFileError};
use dashpot::chain_poly::{adjoint_poly_closed_form, char_poly_recursive};
use dashpot::dynamics::{
    min_energy_control, quarter_car_demo, reconstruct_initial_state, simulate, simulate_plan,
    DynamicsError, QuarterCarSpec, RoadProfile, DEFAULT_HORIZON, DEFAULT_STEP,
};
use dashpot::rational::{format_rational, parse_rational, BigRational};
use serde_json::json;
use std::fmt::Display;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "dashpot", version, about = "Controllability analysis and control synthesis for dashpot-spring-mass chains", long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide complete controllability/observability of a chain
    Analyze {
        /// Chain spec file (JSON or TOML)
        spec: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Print the characteristic polynomial and the (factored) adjoint
    Polys {
        /// Chain spec file (JSON or TOML)
        spec: PathBuf,
    },
    /// Integrate the chain under an input signal and export a CSV trace
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        /// Initial state, comma separated (default: all zeros)
        #[arg(long)]
        z0: Option<String>,
        /// Input signal: flat, step:<amp>:<time> or sine:<amp>:<freq>
        #[arg(long, default_value = "flat")]
        input: String,
        #[arg(long, default_value_t = DEFAULT_HORIZON)]
        horizon: f64,
        #[arg(long, default_value_t = DEFAULT_STEP)]
        step: f64,
        /// Output CSV path (default: stdout)
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Synthesize a minimum-energy steering input and verify it
    Control {
        #[arg(long)]
        spec: PathBuf,
        /// Target state, comma separated
        #[arg(long)]
        target: String,
        /// Initial state, comma separated (default: all zeros)
        #[arg(long)]
        z0: Option<String>,
        #[arg(long, default_value_t = DEFAULT_HORIZON)]
        horizon: f64,
        #[arg(long, default_value_t = DEFAULT_STEP)]
        step: f64,
        /// Output CSV path for the t,u plan (default: stdout)
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Simulate, sample the output, and reconstruct the initial state
    Observe {
        #[arg(long)]
        spec: PathBuf,
        /// True initial state, comma separated
        #[arg(long)]
        z0: String,
        #[arg(long, default_value_t = 3.0)]
        horizon: f64,
        #[arg(long, default_value_t = DEFAULT_STEP)]
        step: f64,
        /// Number of output samples (default: 3x the state dimension)
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 1e-8)]
        noise_floor: f64,
    },
    /// Build a three-mass chain with an engineered common root (or, with
    /// --controllable, a non-proportional chain that stays controllable)
    Counterexample {
        /// Three masses, comma separated rationals
        #[arg(long, default_value = "1,1,1")]
        m: String,
        #[arg(long, default_value = "1")]
        k1: String,
        #[arg(long, default_value = "1")]
        c1: String,
        #[arg(long, default_value = "1")]
        c2: String,
        /// Search for a controllable non-proportional chain instead
        #[arg(long)]
        controllable: bool,
        /// Write the spec file here (default: stdout)
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Quarter-car suspension demo: simulate over a road profile and
    /// reconstruct the initial state from body-position samples
    QuarterCar {
        #[arg(long, default_value_t = 40.0)]
        wheel_mass: f64,
        #[arg(long, default_value_t = 250.0)]
        body_mass: f64,
        #[arg(long, default_value_t = 28000.0)]
        suspension_stiffness: f64,
        #[arg(long, default_value_t = 2000.0)]
        suspension_damping: f64,
        #[arg(long, default_value_t = 125000.0)]
        tyre_stiffness: f64,
        #[arg(long, default_value_t = 0.0)]
        tyre_damping: f64,
        /// Road profile: flat, step:<height>:<time> or sine:<amp>:<freq>
        #[arg(long, default_value = "step:0.05:0.5")]
        road: String,
        /// Initial state (z_wheel,z_body,v_wheel,v_body)
        #[arg(long)]
        z0: Option<String>,
        #[arg(long, default_value_t = 2.0)]
        horizon: f64,
        #[arg(long, default_value_t = DEFAULT_STEP)]
        step: f64,
        /// Output CSV path for the trajectory (default: stdout)
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

enum CliError {
    Input(String),
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

impl Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(msg) | CliError::Internal(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<SpecFileError> for CliError {
    fn from(e: SpecFileError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        // every dynamics failure here traces back to user-supplied
        // parameters; genuine internal failures surface as Internal below
        CliError::Input(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Internal(format!("i/o failure: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Analyze { spec, format } => analyze(&spec, format),
        Command::Polys { spec } => polys(&spec),
        Command::Simulate {
            spec,
            z0,
            input,
            horizon,
            step,
            output,
        } => run_simulate(&spec, z0.as_deref(), &input, horizon, step, output.as_deref()),
        Command::Control {
            spec,
            target,
            z0,
            horizon,
            step,
            output,
        } => run_control(&spec, &target, z0.as_deref(), horizon, step, output.as_deref()),
        Command::Observe {
            spec,
            z0,
            horizon,
            step,
            samples,
            noise_floor,
        } => run_observe(&spec, &z0, horizon, step, samples, noise_floor),
        Command::Counterexample {
            m,
            k1,
            c1,
            c2,
            controllable,
            output,
        } => run_counterexample(&m, &k1, &c1, &c2, controllable, output.as_deref()),
        Command::QuarterCar {
            wheel_mass,
            body_mass,
            suspension_stiffness,
            suspension_damping,
            tyre_stiffness,
            tyre_damping,
            road,
            z0,
            horizon,
            step,
            output,
        } => run_quarter_car(
            QuarterCarSpec::new(
                wheel_mass,
                body_mass,
                suspension_stiffness,
                suspension_damping,
                tyre_stiffness,
                tyre_damping,
                parse_signal(&road)?,
            )?,
            z0.as_deref(),
            horizon,
            step,
            output.as_deref(),
        ),
    }
}

fn load_spec(path: &Path) -> Result<ChainSpec, CliError> {
    let (spec, warnings) = ChainSpec::load(path)?;
    for w in warnings {
        eprintln!("warning: {w}");
    }
    Ok(spec)
}

fn parse_floats(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Input(format!("cannot parse {s:?} as a number")))
        })
        .collect()
}

fn parse_rat(text: &str) -> Result<BigRational, CliError> {
    parse_rational(text).map_err(|e| CliError::Input(e.to_string()))
}

fn parse_signal(text: &str) -> Result<RoadProfile, CliError> {
    text.parse::<RoadProfile>()
        .map_err(|e| CliError::Input(e.to_string()))
}

fn state_or_zeros(text: Option<&str>, dim: usize) -> Result<Vec<f64>, CliError> {
    let state = match text {
        None => vec![0.0; dim],
        Some(t) => parse_floats(t)?,
    };
    if state.len() != dim {
        return Err(CliError::Input(format!(
            "expected a state of length {dim}, got {}",
            state.len()
        )));
    }
    Ok(state)
}

/// Prints to stdout, treating a closed pipe (e.g. `| head`) as success.
fn print_stdout(text: std::fmt::Arguments<'_>) -> Result<(), CliError> {
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match lock.write_fmt(text).and_then(|()| writeln!(lock)) {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

macro_rules! outln {
    ($($arg:tt)*) => { print_stdout(format_args!($($arg)*))? };
}

/// Writes through a closure either to the given file or to stdout.
fn with_output<F>(path: Option<&Path>, write: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    match path {
        Some(p) => {
            let mut file = BufWriter::new(File::create(p)?);
            write(&mut file)?;
            file.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            // a closed pipe (e.g. `| head`) is not an error
            match write(&mut lock) {
                Err(e) if e.kind() == io::ErrorKind::BrokenPipe => {}
                other => other?,
            }
        }
    }
    Ok(())
}

fn verdict_json(n: usize, verdict: &Verdict) -> serde_json::Value {
    json!({
        "n": n,
        "controllable_observable": verdict.controllable_observable,
        "proportional": verdict.proportionality_holds,
        "char_poly": verdict.char_poly.to_string(),
        "adjoint_poly": verdict.adjoint_poly.to_string(),
        "gcd": verdict.gcd.to_string(),
        "common_roots": verdict.common_roots.iter().map(format_rational).collect::<Vec<_>>(),
        "kalman_ranks": [verdict.kalman_control_rank, verdict.kalman_observe_rank],
    })
}

fn analyze(path: &Path, format: Format) -> Result<u8, CliError> {
    let spec = load_spec(path)?;
    let verdict = decide(&spec);
    match format {
        Format::Json => outln!(
            "{}",
            serde_json::to_string_pretty(&verdict_json(spec.n_masses(), &verdict))
                .map_err(|e| CliError::Internal(e.to_string()))?
        ),
        Format::Text => {
            outln!(
                "chain with {} masses: {}",
                spec.n_masses(),
                if verdict.controllable_observable {
                    "completely controllable and observable"
                } else {
                    "NOT controllable/observable (common root)"
                }
            );
            outln!("  proportional damping: {}", verdict.proportionality_holds);
            outln!("  characteristic polynomial: {}", verdict.char_poly);
            outln!("  adjoint polynomial:        {}", verdict.adjoint_poly);
            outln!("  gcd:                       {}", verdict.gcd);
            if !verdict.common_roots.is_empty() {
                let roots: Vec<String> =
                    verdict.common_roots.iter().map(format_rational).collect();
                outln!("  common roots:              {}", roots.join(", "));
            }
            outln!(
                "  Kalman ranks:              control {}, observe {} (full = {})",
                verdict.kalman_control_rank,
                verdict.kalman_observe_rank,
                2 * spec.n_masses()
            );
        }
    }
    Ok(if verdict.controllable_observable { 0 } else { 3 })
}

fn polys(path: &Path) -> Result<u8, CliError> {
    let spec = load_spec(path)?;
    let p = char_poly_recursive(&spec);
    let fact = adjoint_poly_closed_form(&spec);
    outln!("characteristic: {p}");
    outln!("adjoint:        {}", fact.expand());
    outln!("adjoint factored: {fact}");
    Ok(0)
}

fn run_simulate(
    path: &Path,
    z0: Option<&str>,
    input: &str,
    horizon: f64,
    step: f64,
    output: Option<&Path>,
) -> Result<u8, CliError> {
    let spec = load_spec(path)?;
    let model = spec.to_state_space();
    let z0 = state_or_zeros(z0, model.dim())?;
    let signal = parse_signal(input)?;
    let traj = simulate(&model, &z0, |t| signal.position(t), horizon, step)?;
    with_output(output, |w| traj.to_csv(w))?;
    Ok(0)
}

fn run_control(
    path: &Path,
    target: &str,
    z0: Option<&str>,
    horizon: f64,
    step: f64,
    output: Option<&Path>,
) -> Result<u8, CliError> {
    let spec = load_spec(path)?;
    let model = spec.to_state_space();
    let target = parse_floats(target)?;
    if target.len() != model.dim() {
        return Err(CliError::Input(format!(
            "expected a target of length {}, got {}",
            model.dim(),
            target.len()
        )));
    }
    let z0 = state_or_zeros(z0, model.dim())?;

    let plan = min_energy_control(&model, &z0, &target, horizon, step)?;
    if plan.gramian_condition > 1e12 {
        eprintln!(
            "warning: Gramian condition {:.2e}; the plan may be inaccurate",
            plan.gramian_condition
        );
    }
    let traj = simulate_plan(&model, &plan)?;
    let scale = target.iter().fold(1.0f64, |a, &b| a.max(b.abs()));
    let err = traj
        .terminal_state()
        .iter()
        .zip(&target)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / scale;
    eprintln!(
        "verified: terminal error {err:.3e} (normalized), input energy {:.6e}, Gramian condition {:.3e}",
        plan.energy(),
        plan.gramian_condition
    );
    if err > dashpot::dynamics::CONTROL_TOLERANCE {
        eprintln!(
            "warning: terminal error exceeds {:.0e}; try a longer horizon or a smaller step",
            dashpot::dynamics::CONTROL_TOLERANCE
        );
    }
    with_output(output, |w| plan.to_csv(w))?;
    Ok(0)
}

fn run_observe(
    path: &Path,
    z0: &str,
    horizon: f64,
    step: f64,
    samples: Option<usize>,
    noise_floor: f64,
) -> Result<u8, CliError> {
    let spec = load_spec(path)?;
    let model = spec.to_state_space();
    let z0 = state_or_zeros(Some(z0), model.dim())?;
    let traj = simulate(&model, &z0, |_| 0.0, horizon, step)?;

    let count = samples.unwrap_or(3 * model.dim()).max(2);
    let picked: Vec<(f64, f64)> = (0..count)
        .map(|i| {
            let idx = i * (traj.len() - 1) / (count - 1);
            (traj.times[idx], traj.outputs[idx])
        })
        .collect();
    let rec = reconstruct_initial_state(&model, &picked, noise_floor)?;
    outln!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "initial_state": rec.initial_state,
            "residual": rec.residual,
            "within_noise_floor": rec.within_noise_floor,
            "samples_used": picked.len(),
        }))
        .map_err(|e| CliError::Internal(e.to_string()))?
    );
    Ok(0)
}

fn run_counterexample(
    m: &str,
    k1: &str,
    c1: &str,
    c2: &str,
    controllable: bool,
    output: Option<&Path>,
) -> Result<u8, CliError> {
    let masses: Vec<BigRational> = m
        .split(',')
        .map(|s| parse_rat(s.trim()))
        .collect::<Result<_, _>>()?;
    let masses: [BigRational; 3] = masses
        .try_into()
        .map_err(|_| CliError::Input("expected exactly three masses".into()))?;
    let c1 = parse_rat(c1)?;
    let c2 = parse_rat(c2)?;

    let spec = if controllable {
        let spec = make_controllable_nonproportional_n3(&masses, &c1, &c2)?;
        eprintln!(
            "controllable non-proportional chain: k = ({}, {})",
            format_rational(&spec.stiffness()[0]),
            format_rational(&spec.stiffness()[1]),
        );
        spec
    } else {
        let k1 = parse_rat(k1)?;
        let ce = make_counterexample_n3(&masses, &k1, &c1, &c2)?;
        eprintln!(
            "derived k2 = {}; common root z = {}",
            format_rational(&ce.spec().stiffness()[1]),
            format_rational(ce.common_root()),
        );
        ce.spec().clone()
    };
    let text = spec.to_spec_json();
    with_output(output, |w| writeln!(w, "{text}"))?;
    Ok(0)
}

fn run_quarter_car(
    car: QuarterCarSpec,
    z0: Option<&str>,
    horizon: f64,
    step: f64,
    output: Option<&Path>,
) -> Result<u8, CliError> {
    let z0 = state_or_zeros(z0, 4)?;
    let z0: [f64; 4] = z0.try_into().expect("length checked");
    let run = quarter_car_demo(&car, &z0, horizon, step)?;
    eprintln!(
        "reconstructed initial state: [{}] (residual {:.3e})",
        run.reconstruction
            .initial_state
            .iter()
            .map(|v| format!("{v:.6}"))
            .collect::<Vec<_>>()
            .join(", "),
        run.reconstruction.residual
    );
    with_output(output, |w| run.trajectory.to_csv(w))?;
    Ok(0)
}
