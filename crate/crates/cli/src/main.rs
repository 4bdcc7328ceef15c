use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mbs_core::bdg::{build_bdg, diagonalize, extract_coupling, BdgError};
use mbs_core::chain::{load_config, validate, Boundary, ChainConfig, ConfigError, DriveParams, ValidatedConfig};
use mbs_core::dynamics::{
    evolve_driven, evolve_static, extract_rabi_frequency, initial_majorana_state, sample_times, DriveOptions,
    DynamicsError, EvolutionTrace, Observable,
};
use mbs_core::floquet::{bessel_j0_zero, effective_config, invert_j0};
use mbs_core::qubit::{schedule_protocol, validate_protocol, Protocol, QubitError};
use mbs_core::scalar::format_sig;
use mbs_core::sweep::{run_sweep, write_sweep_csv, SweepAxis, SweepMethod, SweepSpec};

#[derive(Parser)]
#[command(name = "mbs", version, about = "Majorana coupling through a trivial Kitaev segment")]
struct Cli {
    /// Chain configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout if absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the boundary of the configuration.
    #[arg(long, global = true)]
    boundary: Option<Boundary>,
    /// Reserved: nothing here draws random numbers.
    #[arg(long, global = true)]
    seedless: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObservableArg {
    Overlap,
    Sites,
}

impl From<ObservableArg> for Observable {
    fn from(o: ObservableArg) -> Self {
        match o {
            ObservableArg::Overlap => Observable::Overlap,
            ObservableArg::Sites => Observable::Sites,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FloquetMode {
    Direct,
    Effective,
}

#[derive(Subcommand)]
enum Command {
    /// BdG eigenvalues, with ε and the zero sector as trailing comments.
    Spectrum,
    /// ε over a parameter range, or a 2-D grid with --grid.
    Sweep {
        /// Swept parameter, e.g. center.mu.
        #[arg(long, default_value = "center.mu")]
        param: String,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        steps: usize,
        /// Comma-separated subset of numeric,eq12,boundary,longrange,ksum.
        #[arg(long, value_delimiter = ',', default_value = "numeric,eq12")]
        methods: Vec<String>,
        /// Boundaries for the numeric method; defaults to the config's.
        #[arg(long, value_delimiter = ',')]
        boundaries: Vec<Boundary>,
        /// Two parameters `x,y`; both axes use from/to/steps unless the y-range is given.
        #[arg(long, value_delimiter = ',', num_args = 1)]
        grid: Vec<String>,
        #[arg(long)]
        y_from: Option<f64>,
        #[arg(long)]
        y_to: Option<f64>,
        #[arg(long)]
        y_steps: Option<usize>,
    },
    /// Evolve a Majorana localized on one site, static or driven.
    Evolve {
        #[arg(long)]
        t_max: f64,
        /// Sample spacing (static) or largest integrator step (driven).
        #[arg(long)]
        dt: f64,
        #[arg(long, requires = "drive_omega")]
        drive_mu0: Option<f64>,
        #[arg(long)]
        drive_omega: Option<f64>,
        #[arg(long, value_enum, default_value = "overlap")]
        observable: ObservableArg,
        /// Initial site of `γ = a + a†`.
        #[arg(long, default_value_t = -1, allow_hyphen_values = true)]
        site: isize,
        /// Driven runs: samples inside each recorded period.
        #[arg(long, default_value_t = 1)]
        samples_per_period: usize,
        /// Driven runs: record every this many periods.
        #[arg(long, default_value_t = 1)]
        period_stride: usize,
        /// Append the Rabi frequency as a trailing comment row.
        #[arg(long)]
        rabi: bool,
    },
    /// Direct drive against the Bessel-renormalized chain, sampled stroboscopically.
    Floquet {
        #[arg(long, value_enum)]
        mode: FloquetMode,
        #[arg(long)]
        drive_omega: f64,
        #[arg(long, conflicts_with = "j0_target")]
        drive_mu0: Option<f64>,
        /// Choose μ0 so that J0(μ0/ω) equals this value.
        #[arg(long)]
        j0_target: Option<f64>,
        #[arg(long)]
        t_max: f64,
        /// Sample spacing, rounded to whole drive periods.
        #[arg(long)]
        dt: f64,
        /// Largest integrator step of the direct mode; a hundredth of the period by default.
        #[arg(long)]
        step: Option<f64>,
        #[arg(long, value_enum, default_value = "overlap")]
        observable: ObservableArg,
        #[arg(long, default_value_t = -1, allow_hyphen_values = true)]
        site: isize,
        #[arg(long)]
        rabi: bool,
    },
    /// Validate a square-wave gate protocol against the lattice.
    Gates {
        /// Protocol JSON.
        #[arg(long)]
        protocol: PathBuf,
        #[arg(long, default_value_t = 2.5)]
        mu_low: f64,
        #[arg(long, default_value_t = 10.0)]
        mu_high: f64,
    },
    /// n-th positive zero of J0.
    BesselZero {
        #[arg(long, default_value_t = 1)]
        n: usize,
    },
}

enum Failure {
    Config(String),
    NoZeroSector(String),
    NormDrift(String),
    Leakage(String),
    Decoupling(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Other(_) => 1,
            Failure::Config(_) => 2,
            Failure::NoZeroSector(_) => 3,
            Failure::NormDrift(_) => 4,
            Failure::Leakage(_) => 5,
            Failure::Decoupling(_) => 6,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m)
            | Failure::NoZeroSector(m)
            | Failure::NormDrift(m)
            | Failure::Leakage(m)
            | Failure::Decoupling(m)
            | Failure::Other(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

impl From<DynamicsError> for Failure {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::NormDrift { .. } => Failure::NormDrift(e.to_string()),
            DynamicsError::Bdg(BdgError::NoZeroSector { .. }) => Failure::NoZeroSector(e.to_string()),
            _ => Failure::Other(e.to_string()),
        }
    }
}

impl From<BdgError> for Failure {
    fn from(e: BdgError) -> Self {
        match e {
            BdgError::NoZeroSector { .. } => Failure::NoZeroSector(e.to_string()),
            _ => Failure::Other(e.to_string()),
        }
    }
}

type Out = Box<dyn Write>;

fn open_out(path: &Option<PathBuf>) -> Result<Out, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Other(format!("cannot write {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load(cli: &Cli) -> Result<ChainConfig<f64>, Failure> {
    let path = cli.config.as_ref().ok_or_else(|| Failure::Config("--config is required".into()))?;
    let mut config: ChainConfig<f64> = load_config(path)?;
    if let Some(b) = cli.boundary {
        config.boundary = b;
    }
    Ok(config)
}

fn validated(cli: &Cli) -> Result<ValidatedConfig<f64>, Failure> {
    let v = validate(&load(cli)?)?;
    for w in v.warnings() {
        log::warn!("{w}");
    }
    Ok(v)
}

fn spectrum(cli: &Cli) -> Result<(), Failure> {
    let v = validated(cli)?;
    let s = diagonalize(&build_bdg(&v))?;
    let mut out = open_out(&cli.out)?;
    s.write_csv(&mut out)?;
    let result = extract_coupling(&s);
    if let Ok(eps) = &result {
        let n = s.sites();
        writeln!(out, "# epsilon,{}", format_sig(*eps))?;
        writeln!(out, "# zero_sector,{},{},{},{}", n - 2, n - 1, n, n + 1)?;
    }
    out.flush()?;
    result.map(|_| ()).map_err(Failure::from)
}

fn sweep(cli: &Cli, args: &Command) -> Result<(), Failure> {
    let Command::Sweep { param, from, to, steps, methods, boundaries, grid, y_from, y_to, y_steps } = args else {
        unreachable!()
    };
    let config = load(cli)?;
    let bad = |e: mbs_core::SweepError| Failure::Config(e.to_string());
    let methods = methods.iter().map(|m| m.parse::<SweepMethod>()).collect::<Result<Vec<_>, _>>().map_err(bad)?;
    let boundaries = if boundaries.is_empty() { vec![config.boundary] } else { boundaries.clone() };
    let spec = match grid.as_slice() {
        [] => SweepSpec::new(SweepAxis::new(param, *from, *to, *steps).map_err(bad)?, methods).map_err(bad)?,
        [x, y] => {
            let xa = SweepAxis::new(x, *from, *to, *steps).map_err(bad)?;
            let ya = SweepAxis::new(y, y_from.unwrap_or(*from), y_to.unwrap_or(*to), y_steps.unwrap_or(*steps))
                .map_err(bad)?;
            SweepSpec::new(xa, methods).map_err(bad)?.with_grid(ya)
        }
        _ => return Err(Failure::Config("--grid takes exactly two parameters `x,y`".into())),
    }
    .with_boundaries(boundaries);
    let rows = run_sweep(&config, &spec).map_err(bad)?;
    let mut out = open_out(&cli.out)?;
    write_sweep_csv(&spec, &rows, &mut out)?;
    out.flush()?;
    Ok(())
}

fn emit_trace(cli: &Cli, v: &ValidatedConfig<f64>, trace: &EvolutionTrace<f64>, rabi: bool) -> Result<(), Failure> {
    let mut out = open_out(&cli.out)?;
    trace.write_csv(v, &mut out)?;
    if rabi {
        match extract_rabi_frequency(trace) {
            Ok(r) => writeln!(out, "# omega_rabi,{},confidence,{}", format_sig(r.omega_rabi), format_sig(r.confidence))?,
            Err(DynamicsError::LowConfidence { omega_rabi, confidence }) => {
                log::warn!("Rabi estimate has low confidence");
                writeln!(
                    out,
                    "# omega_rabi,{},confidence,{},low_confidence",
                    format_sig(omega_rabi),
                    format_sig(confidence)
                )?
            }
            Err(e) => {
                log::warn!("{e}");
                writeln!(out, "# omega_rabi,nan,error,{e}")?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn evolve(cli: &Cli, args: &Command) -> Result<(), Failure> {
    let Command::Evolve {
        t_max,
        dt,
        drive_mu0,
        drive_omega,
        observable,
        site,
        samples_per_period,
        period_stride,
        rabi,
    } = args
    else {
        unreachable!()
    };
    let v = validated(cli)?;
    let psi0 = initial_majorana_state(&v, *site)?;
    let trace = match drive_omega {
        None => evolve_static(&build_bdg(&v), &psi0, &sample_times(*t_max, *dt), (*observable).into())?,
        Some(omega) => {
            let drive = DriveParams::new(drive_mu0.unwrap_or(0.0), *omega)?;
            let mut opts = DriveOptions::new(*t_max, *dt);
            opts.samples_per_period = *samples_per_period;
            opts.period_stride = *period_stride;
            opts.observable = (*observable).into();
            evolve_driven(&v, &drive, &psi0, &opts)?
        }
    };
    emit_trace(cli, &v, &trace, *rabi)
}

fn floquet(cli: &Cli, args: &Command) -> Result<(), Failure> {
    let Command::Floquet { mode, drive_omega, drive_mu0, j0_target, t_max, dt, step, observable, site, rabi } =
        args
    else {
        unreachable!()
    };
    let v = validated(cli)?;
    let mu0 = match (drive_mu0, j0_target) {
        (Some(m), _) => *m,
        (None, Some(target)) => invert_j0(*target).map_err(|e| Failure::Config(e.to_string()))? * drive_omega,
        (None, None) => 0.0,
    };
    let drive = DriveParams::new(mu0, *drive_omega)?;
    let period = std::f64::consts::TAU / drive_omega;
    let stride = ((dt / period).round() as usize).max(1);
    let psi0 = initial_majorana_state(&v, *site)?;
    let trace = match mode {
        FloquetMode::Effective => {
            let eff = effective_config(v.config(), &drive);
            let ev = eff.validated()?;
            let times = sample_times(*t_max, stride as f64 * period);
            evolve_static(&build_bdg(&ev), &psi0, &times, (*observable).into())?
        }
        FloquetMode::Direct => {
            // Logs the high-frequency check.
            effective_config(v.config(), &drive);
            let mut opts = DriveOptions::new(*t_max, step.unwrap_or(period / 100.0));
            opts.period_stride = stride;
            opts.observable = (*observable).into();
            evolve_driven(&v, &drive, &psi0, &opts)?
        }
    };
    emit_trace(cli, &v, &trace, *rabi)
}

fn gates(cli: &Cli, protocol: &PathBuf, mu_low: f64, mu_high: f64) -> Result<(), Failure> {
    let config = load(cli)?;
    let text = std::fs::read_to_string(protocol)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", protocol.display())))?;
    let protocol: Protocol<f64> = Protocol::from_json(&text).map_err(|e| Failure::Config(e.to_string()))?;
    let qubit = |e: QubitError| match e {
        QubitError::InsufficientDecoupling { .. } => Failure::Decoupling(e.to_string()),
        QubitError::Config(_) | QubitError::NotSweetSpot | QubitError::NegativeDuration(_) => {
            Failure::Config(e.to_string())
        }
        QubitError::Bdg(b) => Failure::from(b),
        _ => Failure::Other(e.to_string()),
    };
    let schedule = schedule_protocol(&protocol, &config, mu_low, mu_high).map_err(qubit)?;
    let (report, failure) = match validate_protocol(&schedule) {
        Ok(r) => (r, None),
        Err(e) => match e.report() {
            Some(r) => (r.clone(), Some(Failure::Leakage(e.to_string()))),
            None => return Err(qubit(e)),
        },
    };
    let mut out = open_out(&cli.out)?;
    writeln!(out, "{}", report.to_json())?;
    out.flush()?;
    failure.map_or(Ok(()), Err)
}

fn bessel_zero(cli: &Cli, n: usize) -> Result<(), Failure> {
    let z = bessel_j0_zero(n).map_err(|e| Failure::Config(e.to_string()))?;
    let mut out = open_out(&cli.out)?;
    writeln!(out, "n,zero")?;
    writeln!(out, "{n},{}", format_sig(z))?;
    out.flush()?;
    Ok(())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Spectrum => spectrum(cli),
        c @ Command::Sweep { .. } => sweep(cli, c),
        c @ Command::Evolve { .. } => evolve(cli, c),
        c @ Command::Floquet { .. } => floquet(cli, c),
        Command::Gates { protocol, mu_low, mu_high } => gates(cli, protocol, *mu_low, *mu_high),
        Command::BesselZero { n } => bessel_zero(cli, *n),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
