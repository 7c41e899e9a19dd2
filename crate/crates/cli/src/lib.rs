//! Command-line front end for `zenolab`.
//!
//! Exit codes: 0 success, 2 argument error, 3 numerical failure, 4 I/O failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod emit;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use zenolab::resolvent::resonance;
use zenolab::selfenergy::qbar_with_derivative;
use zenolab::{
    bromwich_inverse, crossover_time, default_abscissa, find_pole, perturbative_pole,
    qbar_quadrature, spectral_density, spectral_inverse, threshold_poles, zeno_time, AtomParams,
    CutMethod, CutQuadratureSpec, DiscretizedModel, Execution, GridScale, PoleData, Sheet,
    SheetPoint, SurvivalModel, TimeGrid, ZENO_CORRECTION,
};

use config::{FileConfig, Format, OutputTarget, Overrides, RunConfig, Tolerances};
use emit::{render, survival_table, Cell, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

const CLAIMED_CROSSOVER_LIFETIMES: f64 = 98.0;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Usage(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "argument error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<zenolab::Error> for CliError {
    fn from(e: zenolab::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "zenolab",
    version,
    about = "Survival probability of an unstable level: pole, branch cut and oracles",
    allow_negative_numbers = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Table of model constants, Zeno time, lifetime and crossover.
    Constants(CommonArgs),
    /// Exact and leading-order decay pole, plus the threshold poles.
    Pole(CommonArgs),
    /// Survival probability and its decomposition on a time grid.
    Survival {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Exponential to power-law crossover time.
    Crossover(CommonArgs),
    /// Spectral density w(x) on a frequency grid.
    Spectrum {
        #[command(flatten)]
        common: CommonArgs,
        /// Lower frequency in units of Λ [default: resonance - 20 widths]
        #[arg(long)]
        xmin: Option<f64>,
        /// Upper frequency in units of Λ [default: resonance + 20 widths]
        #[arg(long)]
        xmax: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// First- or second-sheet self-energy at one point.
    Selfenergy {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, allow_hyphen_values = true)]
        re: f64,
        #[arg(long, allow_hyphen_values = true)]
        im: f64,
        #[arg(long, value_enum, default_value_t = SheetArg::First)]
        sheet: SheetArg,
    },
    /// Amplitude from one brute-force oracle on a time grid.
    Oracle {
        #[arg(value_enum)]
        kind: OracleKind,
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        discrete: DiscreteArgs,
    },
    /// Pole + cut amplitude against an oracle; max and mean |Δy|.
    Compare {
        #[arg(long, value_enum)]
        oracle: OracleKind,
        /// Emit every grid point instead of the summary row.
        #[arg(long)]
        detail: bool,
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        discrete: DiscreteArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SheetArg {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OracleKind {
    Bromwich,
    Spectral,
    Discrete,
}

impl OracleKind {
    fn name(self) -> &'static str {
        match self {
            OracleKind::Bromwich => "bromwich",
            OracleKind::Spectral => "spectral",
            OracleKind::Discrete => "discrete",
        }
    }
}

#[derive(Debug, Clone, Args)]
struct CommonArgs {
    /// Nuclear charge; 0 selects synthetic parameters [default: 1]
    #[arg(long)]
    z: Option<u32>,
    /// Fine-structure constant
    #[arg(long)]
    alpha: Option<f64>,
    /// Electron rest frequency in rad/s
    #[arg(long)]
    me: Option<f64>,
    /// Coupling χ (synthetic mode)
    #[arg(long)]
    chi: Option<f64>,
    /// Transition frequency in units of Λ (synthetic mode)
    #[arg(long)]
    a: Option<f64>,
    /// Cutoff Λ in rad/s (synthetic mode) [default: 1]
    #[arg(long)]
    lambda: Option<f64>,
    /// Quadrature tolerance [default: 1e-10]
    #[arg(long = "quad-tol")]
    quad_tol: Option<f64>,
    /// Pole residual tolerance [default: 1e-14 a]
    #[arg(long = "pole-tol")]
    pole_tol: Option<f64>,
    /// Output format [default: csv]
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Output file [default: standard output]
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
struct GridArgs {
    /// First time in seconds [default: 1e-3/Λ]
    #[arg(long)]
    tmin: Option<f64>,
    /// Last time in seconds [default: 300 lifetimes]
    #[arg(long)]
    tmax: Option<f64>,
    /// Number of grid points [default: 200]
    #[arg(long)]
    points: Option<usize>,
    /// Grid spacing [default: log]
    #[arg(long, value_enum)]
    scale: Option<ScaleArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScaleArg {
    Log,
    Linear,
}

impl std::str::FromStr for ScaleArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <ScaleArg as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, Args)]
struct DiscreteArgs {
    /// Continuum modes for the discrete oracle [default: 4000]
    #[arg(long)]
    modes: Option<usize>,
    /// Continuum cutoff for the discrete oracle, units of Λ [default: 20]
    #[arg(long = "x-max")]
    x_max: Option<f64>,
}

/// Runs the command line with `ZENOLAB_CONFIG` as the optional config file.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = std::env::var_os("ZENOLAB_CONFIG").map(PathBuf::from);
    run_with(argv, config)
}

/// Runs the command line with an explicit config file.
pub fn run_with<I, T>(argv: I, config: Option<PathBuf>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = FileConfig::load_optional(config.as_deref()).and_then(|file| dispatch(cli, &file));
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("zenolab: {e}");
            e.exit_code()
        }
    }
}

impl FileConfig {
    fn load_optional(path: Option<&std::path::Path>) -> Result<Self, CliError> {
        match path {
            Some(p) => FileConfig::load(p),
            None => Ok(FileConfig::default()),
        }
    }
}

fn resolve(common: &CommonArgs, file: &FileConfig) -> Result<RunConfig, CliError> {
    let config = RunConfig {
        z: file.pick(common.z, "z")?.unwrap_or(1),
        overrides: Overrides {
            alpha: file.pick(common.alpha, "alpha")?,
            me: file.pick(common.me, "me")?,
            chi: file.pick(common.chi, "chi")?,
            a: file.pick(common.a, "a")?,
            cutoff_lambda: file.pick(common.lambda, "lambda")?,
        },
        tolerances: Tolerances {
            quadrature: file.pick(common.quad_tol, "quad-tol")?.unwrap_or(1e-10),
            pole: file.pick(common.pole_tol, "pole-tol")?,
        },
        output: OutputTarget {
            path: file.pick(common.output.clone(), "output")?,
            format: file.pick(common.format, "format")?.unwrap_or(Format::Csv),
        },
    };
    config.validate()?;
    Ok(config)
}

struct Session {
    config: RunConfig,
    params: AtomParams,
}

impl Session {
    fn new(common: &CommonArgs, file: &FileConfig) -> Result<Self, CliError> {
        let config = resolve(common, file)?;
        let params = config.params()?;
        Ok(Session { config, params })
    }

    fn pole(&self) -> Result<PoleData, CliError> {
        Ok(find_pole(
            &self.params,
            self.config.pole_tolerance(&self.params),
            100,
        )?)
    }

    fn spec(&self) -> Result<CutQuadratureSpec, CliError> {
        Ok(CutQuadratureSpec::new(
            CutMethod::AdaptiveTruncated,
            self.config.tolerances.quadrature,
            128,
        )?)
    }

    fn grid(
        &self,
        grid: &GridArgs,
        file: &FileConfig,
        pole: &PoleData,
    ) -> Result<TimeGrid, CliError> {
        let scale = match file.pick(grid.scale, "scale")?.unwrap_or(ScaleArg::Log) {
            ScaleArg::Log => GridScale::Log,
            ScaleArg::Linear => GridScale::Linear,
        };
        let grid = TimeGrid {
            t_min: file
                .pick(grid.tmin, "tmin")?
                .unwrap_or(1e-3 / self.params.cutoff_lambda),
            t_max: file
                .pick(grid.tmax, "tmax")?
                .unwrap_or(300.0 * pole.lifetime()),
            points: file.pick(grid.points, "points")?.unwrap_or(200),
            scale,
        };
        grid.times()?;
        Ok(grid)
    }

    fn emit(&self, table: &Table) -> Result<(), CliError> {
        let bytes = render(table, &self.params, self.config.output.format).map_err(CliError::Io)?;
        match &self.config.output.path {
            Some(path) => std::fs::write(path, bytes)
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
            None => std::io::stdout()
                .lock()
                .write_all(&bytes)
                .map_err(|e| CliError::Io(e.to_string())),
        }
    }
}

fn dispatch(cli: Cli, file: &FileConfig) -> Result<(), CliError> {
    match cli.command {
        Command::Constants(common) => constants(&Session::new(&common, file)?),
        Command::Pole(common) => pole(&Session::new(&common, file)?),
        Command::Survival { common, grid } => {
            let session = Session::new(&common, file)?;
            let pole = session.pole()?;
            let grid = session.grid(&grid, file, &pole)?;
            let samples = zenolab::timeseries(&session.params, &pole, &session.spec()?, &grid)?;
            session.emit(&survival_table(&samples))
        }
        Command::Crossover(common) => crossover(&Session::new(&common, file)?),
        Command::Spectrum {
            common,
            xmin,
            xmax,
            points,
        } => {
            let session = Session::new(&common, file)?;
            let xmin = file.pick(xmin, "xmin")?;
            let xmax = file.pick(xmax, "xmax")?;
            let points = file.pick(points, "points")?.unwrap_or(200);
            spectrum(&session, xmin, xmax, points)
        }
        Command::Selfenergy {
            common,
            re,
            im,
            sheet,
        } => selfenergy(&Session::new(&common, file)?, Complex64::new(re, im), sheet),
        Command::Oracle {
            kind,
            common,
            grid,
            discrete,
        } => {
            let session = Session::new(&common, file)?;
            let pole = session.pole()?;
            let grid = session.grid(&grid, file, &pole)?;
            let times = grid.times()?;
            let ys = oracle_amplitudes(&session, kind, &times, &discrete, file)?;
            let mut table = Table::new("samples", &["t_s", "tau", "y_re", "y_im", "p"]);
            for (&t, y) in times.iter().zip(&ys) {
                let tau = session.params.tau(t);
                table.push(vec![
                    t.into(),
                    tau.into(),
                    y.re.into(),
                    y.im.into(),
                    y.norm_sqr().into(),
                ]);
            }
            session.emit(&table)
        }
        Command::Compare {
            oracle,
            detail,
            common,
            grid,
            discrete,
        } => {
            let session = Session::new(&common, file)?;
            let pole = session.pole()?;
            let grid = session.grid(&grid, file, &pole)?;
            compare(&session, &pole, oracle, detail, &grid, &discrete, file)
        }
    }
}

fn constants(session: &Session) -> Result<(), CliError> {
    let p = &session.params;
    let pole = session.pole()?;
    let crossing = crossover_time(p, &pole, &session.spec()?)?;
    let mut t = Table::quantities("constants");
    t.push(vec!["z".into(), Cell::Int(p.z as i64), "1".into()]);
    t.quantity("cutoff_lambda", p.cutoff_lambda, "rad/s");
    t.quantity("chi", p.chi, "1");
    t.quantity("a", p.a, "1");
    t.quantity("omega0", p.omega0, "rad/s");
    t.quantity("zeno_time", zeno_time(p, false), "s");
    t.quantity("zeno_time_corrected", zeno_time(p, true), "s");
    t.quantity("zeno_correction", ZENO_CORRECTION, "1");
    t.quantity("gamma", pole.gamma, "rad/s");
    t.quantity("lifetime", pole.lifetime(), "s");
    t.quantity("delta_e", pole.delta_e, "rad/s");
    t.quantity("residue_modulus", pole.residue_modulus, "1");
    t.quantity("residue_phase", pole.residue_phase, "rad");
    t.quantity("tail_constant", p.tail_constant(), "1");
    t.quantity("crossover", crossing.t_root, "s");
    t.quantity("crossover_lifetimes", crossing.root_lifetimes, "1");
    session.emit(&t)
}

fn pole(session: &Session) -> Result<(), CliError> {
    let p = &session.params;
    let exact = session.pole()?;
    let leading = perturbative_pole(p)?;
    let mut t = Table::quantities("pole");
    t.quantity("s_re", exact.s_pole.re, "1");
    t.quantity("s_im", exact.s_pole.im, "1");
    t.quantity("gamma", exact.gamma, "rad/s");
    t.quantity("lifetime", exact.lifetime(), "s");
    t.quantity("delta_e", exact.delta_e, "rad/s");
    t.quantity(
        "delta_e_over_chi_lambda",
        exact.delta_e / (p.chi * p.cutoff_lambda),
        "1",
    );
    t.quantity("residue_modulus", exact.residue_modulus, "1");
    t.quantity("residue_phase", exact.residue_phase, "rad");
    t.quantity("gamma_leading_order", leading.gamma, "rad/s");
    t.quantity("delta_e_leading_order", leading.delta_e, "rad/s");
    for (k, th) in threshold_poles(p, &exact)?.iter().enumerate() {
        t.push(vec![
            Cell::Text(format!("threshold_{k}_re")),
            th.s.re.into(),
            "1".into(),
        ]);
        t.push(vec![
            Cell::Text(format!("threshold_{k}_im")),
            th.s.im.into(),
            "1".into(),
        ]);
    }
    session.emit(&t)
}

fn crossover(session: &Session) -> Result<(), CliError> {
    let pole = session.pole()?;
    let c = crossover_time(&session.params, &pole, &session.spec()?)?;
    let mut t = Table::quantities("crossover");
    t.quantity("t_root", c.t_root, "s");
    t.quantity("root_lifetimes", c.root_lifetimes, "1");
    t.quantity("root_residual", c.residual, "1");
    t.quantity("t_equal", c.t_equal, "s");
    t.quantity("equal_lifetimes", c.equal_lifetimes, "1");
    if !session.params.is_synthetic() && session.params.z == 1 {
        t.quantity("claimed_lifetimes", CLAIMED_CROSSOVER_LIFETIMES, "1");
    }
    session.emit(&t)
}

fn spectrum(
    session: &Session,
    xmin: Option<f64>,
    xmax: Option<f64>,
    points: usize,
) -> Result<(), CliError> {
    let p = &session.params;
    let (centre, width) = resonance(p)?;
    let lo = xmin.unwrap_or((centre - 20.0 * width).max(0.5 * centre));
    let hi = xmax.unwrap_or(centre + 20.0 * width);
    if !(lo > 0.0 && hi > lo) {
        return Err(CliError::Usage(format!(
            "spectrum needs 0 < xmin < xmax, got {lo} and {hi}"
        )));
    }
    let xs = TimeGrid {
        t_min: lo,
        t_max: hi,
        points,
        scale: GridScale::Linear,
    }
    .times()?;
    let ws = zenolab::par::map(Execution::default(), &xs, |&x| spectral_density(x, p));
    let mut t = Table::new("spectrum", &["x", "omega", "w"]);
    for (&x, w) in xs.iter().zip(ws) {
        t.push(vec![x.into(), (x * p.cutoff_lambda).into(), w?.into()]);
    }
    session.emit(&t)
}

fn selfenergy(session: &Session, s: Complex64, sheet: SheetArg) -> Result<(), CliError> {
    let sheet = match sheet {
        SheetArg::First => Sheet::First,
        SheetArg::Second => Sheet::Second,
    };
    let point = SheetPoint::new(s, sheet)?;
    let (q, dq) = qbar_with_derivative(point)?;
    let mut t = Table::quantities("selfenergy");
    t.quantity("qbar_re", q.re, "1");
    t.quantity("qbar_im", q.im, "1");
    t.quantity("qbar_derivative_re", dq.re, "1");
    t.quantity("qbar_derivative_im", dq.im, "1");
    if sheet == Sheet::First && !(s.re == 0.0 && s.im <= 0.0) {
        let quad = qbar_quadrature(s, session.config.tolerances.quadrature)?;
        t.quantity("quadrature_re", quad.re, "1");
        t.quantity("quadrature_im", quad.im, "1");
    }
    session.emit(&t)
}

fn oracle_amplitudes(
    session: &Session,
    kind: OracleKind,
    times: &[f64],
    discrete: &DiscreteArgs,
    file: &FileConfig,
) -> Result<Vec<Complex64>, CliError> {
    let p = &session.params;
    let tol = session.config.tolerances.quadrature;
    let taus: Vec<f64> = times.iter().map(|&t| p.tau(t)).collect();
    let exec = Execution::default();
    let ys: Vec<zenolab::Result<Complex64>> = match kind {
        OracleKind::Bromwich => zenolab::par::map(exec, &taus, |&tau| {
            bromwich_inverse(tau, p, default_abscissa(tau), tol)
        }),
        OracleKind::Spectral => {
            zenolab::par::map(exec, &taus, |&tau| spectral_inverse(tau, p, tol))
        }
        OracleKind::Discrete => {
            let n = file.pick(discrete.modes, "modes")?.unwrap_or(4000);
            let x_max = file.pick(discrete.x_max, "x-max")?.unwrap_or(20.0);
            let model = DiscretizedModel::new_with(p, n, x_max, exec)?;
            taus.iter().map(|&tau| Ok(model.amplitude(tau))).collect()
        }
    };
    Ok(ys.into_iter().collect::<zenolab::Result<_>>()?)
}

fn compare(
    session: &Session,
    pole: &PoleData,
    kind: OracleKind,
    detail: bool,
    grid: &TimeGrid,
    discrete: &DiscreteArgs,
    file: &FileConfig,
) -> Result<(), CliError> {
    let p = &session.params;
    let times = grid.times()?;
    let model = SurvivalModel::new(*p, *pole, session.spec()?)?;
    let taus: Vec<f64> = times.iter().map(|&t| p.tau(t)).collect();
    let exact: Vec<Complex64> =
        zenolab::par::map(Execution::default(), &taus, |&tau| model.amplitude(tau))
            .into_iter()
            .collect::<zenolab::Result<_>>()?;
    let oracle = oracle_amplitudes(session, kind, &times, discrete, file)?;
    let errors: Vec<f64> = exact
        .iter()
        .zip(&oracle)
        .map(|(y, o)| (y - o).norm())
        .collect();

    let table = if detail {
        let mut t = Table::new(
            "points",
            &[
                "t_s",
                "tau",
                "y_re",
                "y_im",
                "oracle_re",
                "oracle_im",
                "abs_error",
            ],
        );
        for k in 0..times.len() {
            t.push(vec![
                times[k].into(),
                taus[k].into(),
                exact[k].re.into(),
                exact[k].im.into(),
                oracle[k].re.into(),
                oracle[k].im.into(),
                errors[k].into(),
            ]);
        }
        t
    } else {
        let max = errors.iter().copied().fold(0.0, f64::max);
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        let mut t = Table::new(
            "summary",
            &["oracle", "points", "max_abs_error", "mean_abs_error"],
        );
        t.push(vec![
            kind.name().into(),
            Cell::Int(times.len() as i64),
            max.into(),
            mean.into(),
        ]);
        t
    };
    session.emit(&table)
}
