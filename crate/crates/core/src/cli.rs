//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O or parse error, 2 model condition failure,
//! 3 time grid insufficient for the filter, 4 singular feedback loop.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::grid::UniformGrid;
use crate::io::{model_to_json, read_model, read_pulse_csv, write_pulse_csv, write_response_csv};
use crate::operator::DEFAULT_TOL;
use crate::oracles::{self, FeedbackCase, TwoLevelParams};
use crate::pulse::{shape_fft, shape_ode, Pulse, PulseShape};
use crate::slh::{feedback_reduce, series_product, validate_single_photon_linearity, SlhModel};
use crate::transfer::PhotonTransfer;

pub const TOL_ENV: &str = "PHOTON_SLH_TOL";

pub const EXIT_OK: u8 = 0;
pub const EXIT_IO: u8 = 1;
pub const EXIT_CONDITION: u8 = 2;
pub const EXIT_GRID: u8 = 3;
pub const EXIT_SINGULAR: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "photon-slh", version, about = "Single-photon transfer and pulse shaping for (S, L, H) models")]
pub struct Cli {
    /// Condition tolerance; overrides PHOTON_SLH_TOL (default 1e-10).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the single-photon conditions and print the report as JSON.
    Validate {
        model: PathBuf,
    },
    /// Shape a pulse through a model and write the output pulse as CSV.
    Shape(ShapeArgs),
    /// Compose models in series or close a feedback loop.
    Compose(ComposeArgs),
    /// Tabulate the frequency response.
    Sweep {
        model: PathBuf,
        /// Frequencies as first:last:count.
        #[arg(long, allow_hyphen_values = true)]
        omega: UniformGrid,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Evaluate closed-form references.
    Oracle {
        #[command(subcommand)]
        which: OracleCommand,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Fft,
    Ode,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// First sample time.
    #[arg(long, default_value_t = -20.0, allow_hyphen_values = true)]
    pub t_start: f64,
    /// Sample spacing; defaults to 40 / 2^log2_n.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Number of samples as a power of two.
    #[arg(long, default_value_t = 14, value_parser = clap::value_parser!(u32).range(8..=22))]
    pub log2_n: u32,
}

impl GridArgs {
    pub fn grid(&self) -> Result<UniformGrid> {
        let n = 1usize << self.log2_n;
        let dt = self.dt.unwrap_or(40.0 / n as f64);
        UniformGrid::new(self.t_start, dt, n)
    }
}

#[derive(Debug, Args)]
pub struct ShapeArgs {
    pub model: PathBuf,
    /// Pass the photon through this many copies of the model in series.
    #[arg(long, default_value_t = 1)]
    pub cascade: usize,
    /// gaussian:t0=..,sigma=..[,omega=..] | decaying_exp:kappa=..,t_on=..[,omega=..] |
    /// rising_exp[:kappa=..,omega_c=..] | square:t0=..,t1=.. | csv:PATH
    #[arg(long)]
    pub pulse: String,
    /// Input channel for analytic pulses.
    #[arg(long, default_value_t = 0)]
    pub channel: usize,
    #[arg(long, value_enum, default_value_t = Method::Fft)]
    pub method: Method,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Reference time for the early-energy fraction in the sidecar.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub t0: f64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Sidecar JSON path; defaults to OUTPUT.sidecar.json, or stderr.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct CompositionKind {
    /// Models in the order the photon meets them.
    #[arg(long, num_args = 2..)]
    pub series: Option<Vec<PathBuf>>,
    /// Feed output channel 2 back into input channel 2.
    #[arg(long)]
    pub feedback: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ComposeArgs {
    #[command(flatten)]
    pub kind: CompositionKind,
    /// Place each series model on its own site of a tensor product instead
    /// of sharing one system.
    #[arg(long, conflicts_with = "feedback")]
    pub tensor: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Feedback sidecar path; defaults to OUTPUT.sidecar.json, or stderr.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct AtomArgs {
    #[arg(long)]
    pub kappa: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub omega_c: f64,
}

impl AtomArgs {
    fn params(&self) -> Result<TwoLevelParams> {
        TwoLevelParams::new(self.kappa, self.omega_c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CaseArg {
    Real,
    Complex,
}

#[derive(Debug, Subcommand)]
pub enum OracleCommand {
    /// Single atom response on a frequency grid.
    TwoLevel {
        #[command(flatten)]
        atom: AtomArgs,
        #[arg(long, allow_hyphen_values = true)]
        omega: UniformGrid,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Through and cross amplitudes of a two-channel atom.
    TwoChannel {
        #[arg(long)]
        kappa1: f64,
        #[arg(long)]
        kappa2: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        omega_c: f64,
        #[arg(long, allow_hyphen_values = true)]
        omega: UniformGrid,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Response of N atoms in series.
    Memory {
        #[arg(long)]
        n: u32,
        #[command(flatten)]
        atom: AtomArgs,
        #[arg(long, allow_hyphen_values = true)]
        omega: UniformGrid,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Time-domain kernel of N atoms in series.
    MemoryKernel {
        #[arg(long)]
        n: u32,
        #[command(flatten)]
        atom: AtomArgs,
        /// Times as first:last:count.
        #[arg(long)]
        t: UniformGrid,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Response after closing the loop on channel 2.
    Feedback {
        #[arg(long, value_enum)]
        case: CaseArg,
        /// swap | beamsplitter | JSON 2x2 matrix of [re, im] pairs
        #[arg(long)]
        scattering: String,
        #[arg(long)]
        kappa1: f64,
        #[arg(long)]
        kappa2: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        omega_c: f64,
        #[arg(long, allow_hyphen_values = true)]
        omega: UniformGrid,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Input pulse that fully excites the atom.
    InvertingPulse {
        #[command(flatten)]
        atom: AtomArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Validation(_) | Error::Unstable(_) | Error::SelfTest(_) => EXIT_CONDITION,
        Error::GridTooShort { .. } | Error::GridTooCoarse { .. } => EXIT_GRID,
        Error::SingularLoop(_) => EXIT_SINGULAR,
        _ => EXIT_IO,
    }
}

/// Tolerance from the flag, then the environment, then the default.
pub fn resolve_tol(flag: Option<f64>, env: Option<&str>) -> Result<f64> {
    let tol = match (flag, env) {
        (Some(t), _) => t,
        (None, Some(s)) => s
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("{TOL_ENV} is not a number: {s:?}")))?,
        (None, None) => DEFAULT_TOL,
    };
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    Ok(tol)
}

/// Parses and runs a command line, returning the process exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_IO } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let env = std::env::var(TOL_ENV).ok();
    let result = resolve_tol(cli.tol, env.as_deref()).and_then(|tol| dispatch(cli.command, tol));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(command: Command, tol: f64) -> Result<u8> {
    match command {
        Command::Validate { model } => validate(&model, tol),
        Command::Shape(args) => shape(&args, tol).map(|_| EXIT_OK),
        Command::Compose(args) => compose(&args, tol).map(|_| EXIT_OK),
        Command::Sweep { model, omega, output } => {
            let f = PhotonTransfer::from_model(&read_model(&model)?, tol)?;
            write_response_csv(open_output(output.as_deref())?, &f.frequency_response(&omega))?;
            Ok(EXIT_OK)
        }
        Command::Oracle { which } => oracle(which).map(|_| EXIT_OK),
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn sidecar_path(explicit: Option<&Path>, output: Option<&Path>) -> Option<PathBuf> {
    explicit.map(Path::to_path_buf).or_else(|| {
        output.map(|o| {
            let mut s = o.as_os_str().to_owned();
            s.push(".sidecar.json");
            PathBuf::from(s)
        })
    })
}

fn emit_sidecar<T: Serialize>(value: &T, path: Option<PathBuf>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match path {
        Some(p) => fs::write(p, text)?,
        None => eprint!("{text}"),
    }
    Ok(())
}

fn validate(path: &Path, tol: f64) -> Result<u8> {
    let model = read_model(path)?;
    let report = validate_single_photon_linearity(&model, tol);
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    if report.passed {
        Ok(EXIT_OK)
    } else {
        eprintln!("{}", report.summary());
        Ok(EXIT_CONDITION)
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("pulse parameter {key}={value:?} is not a number")))
}

/// Analytic pulse or CSV file named by a `--pulse` descriptor.
#[derive(Debug, Clone, PartialEq)]
pub enum PulseSpec {
    Analytic(PulseShape),
    /// Rising exponential matched to the filter's first stage.
    MatchedRisingExp,
    Csv(PathBuf),
}

pub fn parse_pulse_spec(desc: &str) -> Result<PulseSpec> {
    let (kind, rest) = desc.split_once(':').unwrap_or((desc, ""));
    if kind == "csv" {
        if rest.is_empty() {
            return Err(Error::InvalidArgument("csv pulse needs a path".into()));
        }
        return Ok(PulseSpec::Csv(PathBuf::from(rest)));
    }
    let mut pairs = Vec::new();
    for item in rest.split(',').filter(|s| !s.trim().is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("expected key=value, got {item:?}")))?;
        pairs.push((k.trim().to_string(), parse_f64(k, v)?));
    }
    let allowed: &[&str] = match kind {
        "gaussian" => &["t0", "sigma", "omega"],
        "decaying_exp" => &["kappa", "t_on", "omega"],
        "rising_exp" => &["kappa", "omega_c"],
        "square" => &["t0", "t1"],
        _ => return Err(Error::InvalidArgument(format!("unknown pulse kind {kind:?}"))),
    };
    if let Some((k, _)) = pairs.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
        return Err(Error::InvalidArgument(format!("{kind} pulse has no parameter {k:?}")));
    }
    let get = |k: &str| pairs.iter().rev().find(|(key, _)| key == k).map(|&(_, v)| v);
    let need = |k: &str| get(k).ok_or_else(|| Error::InvalidArgument(format!("{kind} pulse needs {k}")));
    let shape = match kind {
        "gaussian" => PulseShape::Gaussian {
            center: get("t0").unwrap_or(0.0),
            width: get("sigma").unwrap_or(1.0),
            carrier: get("omega").unwrap_or(0.0),
        },
        "decaying_exp" => PulseShape::DecayingExp {
            kappa: need("kappa")?,
            onset: get("t_on").unwrap_or(0.0),
            carrier: get("omega").unwrap_or(0.0),
        },
        "rising_exp" => match (get("kappa"), get("omega_c")) {
            (None, None) => return Ok(PulseSpec::MatchedRisingExp),
            (Some(kappa), omega_c) => PulseShape::RisingExp {
                kappa,
                omega_c: omega_c.unwrap_or(0.0),
            },
            (None, Some(_)) => return Err(Error::InvalidArgument("rising_exp needs kappa with omega_c".into())),
        },
        _ => PulseShape::Square {
            start: need("t0")?,
            end: need("t1")?,
        },
    };
    shape.check()?;
    Ok(PulseSpec::Analytic(shape))
}

/// Two-level parameters of a single-channel, unit-scattering stage with
/// `h = -1`, the family covered by the kernel oracle.
fn two_level_params(f: &PhotonTransfer) -> Option<TwoLevelParams> {
    let stage = f.stages().first()?;
    let unit = f.channels() == 1 && (stage.scattering()[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-12;
    if !unit || stage.h() != -1.0 {
        return None;
    }
    let kappa = stage.theta().norm_squared();
    let a = stage.pole();
    ((a.re + kappa / 2.0).abs() < 1e-12 * kappa.max(1.0))
        .then(|| TwoLevelParams::new(kappa, -a.im).ok())
        .flatten()
}

#[derive(Debug, Serialize)]
struct ShapeSidecar {
    method: &'static str,
    cascade: usize,
    grid: UniformGrid,
    input_norm: f64,
    output_norm: f64,
    t0: f64,
    pre_t0_energy_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    fft_ode_l2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kernel_l2: Option<f64>,
}

fn build_input(args: &ShapeArgs, f: &PhotonTransfer) -> Result<Pulse> {
    let grid = args.grid.grid()?;
    let k = f.channels();
    let shape = match parse_pulse_spec(&args.pulse)? {
        PulseSpec::Csv(path) => {
            let p = read_pulse_csv(File::open(path)?)?;
            if p.n_channels() > k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    found: p.n_channels(),
                });
            }
            // Files may omit trailing vacuum channels.
            let mut channels = p.channels().to_vec();
            channels.resize(k, vec![Complex64::new(0.0, 0.0); p.len()]);
            return Pulse::sampled(*p.grid(), channels);
        }
        PulseSpec::Analytic(shape) => shape,
        PulseSpec::MatchedRisingExp => {
            let a = f.stages()[0].pole();
            PulseShape::RisingExp {
                kappa: -2.0 * a.re,
                omega_c: -a.im,
            }
        }
    };
    Pulse::analytic(shape, grid, k, args.channel)
}

fn shape(args: &ShapeArgs, tol: f64) -> Result<()> {
    if args.cascade == 0 {
        return Err(Error::InvalidArgument("--cascade must be at least 1".into()));
    }
    let single = PhotonTransfer::from_model(&read_model(&args.model)?, tol)?;
    let f = single.repeat(args.cascade)?;
    let input = build_input(args, &f)?;
    let (result, fft_ode_l2) = match args.method {
        Method::Fft => (shape_fft(&input, &f)?, None),
        Method::Ode => (shape_ode(&input, &f)?, None),
        Method::Both => {
            let a = shape_fft(&input, &f)?;
            let b = shape_ode(&input, &f)?;
            let d = a.output.l2_distance(&b.output)?;
            eprintln!("fft/ode L2 discrepancy: {d:.6e}");
            (a, Some(d))
        }
    };
    let kernel_l2 = match two_level_params(&single) {
        Some(p) if args.cascade > 1 => {
            let by_kernel = oracles::convolve_memory_kernel(&input, args.cascade as u32, p)?;
            Some(by_kernel.l2_distance(&result.output)?)
        }
        _ => None,
    };
    let energy = result.output.energy();
    let sidecar = ShapeSidecar {
        method: match args.method {
            Method::Fft => "fft",
            Method::Ode => "ode",
            Method::Both => "fft+ode",
        },
        cascade: args.cascade,
        grid: *input.grid(),
        input_norm: result.input_norm,
        output_norm: result.output_norm,
        t0: args.t0,
        pre_t0_energy_fraction: if energy > 0.0 {
            result.output.energy_before(args.t0) / energy
        } else {
            0.0
        },
        fft_ode_l2,
        kernel_l2,
    };
    match &args.output {
        Some(path) => write_pulse_csv(BufWriter::new(File::create(path)?), &result.output)?,
        None => write_pulse_csv(io::stdout().lock(), &result.output)?,
    }
    emit_sidecar(&sidecar, sidecar_path(args.sidecar.as_deref(), args.output.as_deref()))
}

fn compose(args: &ComposeArgs, tol: f64) -> Result<()> {
    let composed = if let Some(paths) = &args.kind.series {
        let models: Vec<SlhModel> = paths.iter().map(|p| read_model(p)).collect::<Result<_>>()?;
        let models = if args.tensor {
            let n = models.len();
            models.iter().enumerate().map(|(i, m)| m.embed(i, n)).collect::<Result<Vec<_>>>()?
        } else {
            models
        };
        let mut acc = models[0].clone();
        for next in &models[1..] {
            acc = series_product(next, &acc)?;
        }
        acc
    } else {
        let path = args.kind.feedback.as_ref().expect("clap enforces one composition");
        let reduced = feedback_reduce(&read_model(path)?)?;
        let theta = reduced.model.theta().expect("reduction keeps θᵀL0")[0];
        let sidecar = json!({
            "delta": reduced.delta,
            "theta": [theta.re, theta.im],
            "loop_gain": [reduced.loop_gain.re, reduced.loop_gain.im],
            "scattering": [reduced.model.scattering()[(0, 0)].re, reduced.model.scattering()[(0, 0)].im],
            "validation_passed": validate_single_photon_linearity(&reduced.model, tol).passed,
        });
        emit_sidecar(&sidecar, sidecar_path(args.sidecar.as_deref(), args.output.as_deref()))?;
        reduced.model
    };
    let mut out = open_output(args.output.as_deref())?;
    out.write_all(model_to_json(&composed).as_bytes())?;
    out.flush()?;
    Ok(())
}

fn scattering_arg(s: &str) -> Result<DMatrix<Complex64>> {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    match s {
        "swap" => Ok(DMatrix::from_row_slice(2, 2, &[zero, one, one, zero])),
        "beamsplitter" => {
            let i = Complex64::new(0.0, 1.0);
            Ok(DMatrix::from_row_slice(2, 2, &[one, i, i, one]) * Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0))
        }
        text => {
            let rows: Vec<Vec<[f64; 2]>> = serde_json::from_str(text)?;
            if rows.len() != 2 || rows.iter().any(|r| r.len() != 2) {
                return Err(Error::InvalidArgument("scattering matrix must be 2x2".into()));
            }
            Ok(DMatrix::from_fn(2, 2, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
        }
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_table(output: Option<&Path>, header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(open_output(output)?);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.into_iter().map(num))?;
    }
    w.flush()?;
    Ok(())
}

fn complex_rows<'a>(omega: &'a UniformGrid, g: impl Fn(f64) -> Complex64 + 'a) -> impl Iterator<Item = Vec<f64>> + 'a {
    omega.points().map(move |w| {
        let z = g(w);
        vec![w, z.re, z.im, z.norm_sqr()]
    })
}

fn oracle(which: OracleCommand) -> Result<()> {
    let header = ["omega", "re", "im", "abs2"];
    match which {
        OracleCommand::TwoLevel { atom, omega, output } => {
            let p = atom.params()?;
            write_table(output.as_deref(), &header, complex_rows(&omega, |w| oracles::two_level_g(p, w)))
        }
        OracleCommand::TwoChannel {
            kappa1,
            kappa2,
            omega_c,
            omega,
            output,
        } => {
            if !(kappa1 > 0.0 && kappa2 > 0.0) {
                return Err(Error::InvalidArgument("decay rates must be positive".into()));
            }
            let rows = omega.points().map(|w| {
                let r = oracles::two_channel_g(kappa1, kappa2, omega_c, w);
                vec![w, r.through.re, r.through.im, r.cross.re, r.cross.im, r.through.norm_sqr(), r.cross.norm_sqr()]
            });
            write_table(
                output.as_deref(),
                &["omega", "through_re", "through_im", "cross_re", "cross_im", "through_abs2", "cross_abs2"],
                rows,
            )
        }
        OracleCommand::Memory { n, atom, omega, output } => {
            if n == 0 {
                return Err(Error::InvalidArgument("n must be at least 1".into()));
            }
            let p = atom.params()?;
            write_table(output.as_deref(), &header, complex_rows(&omega, |w| oracles::memory_g(n, p, w)))
        }
        OracleCommand::MemoryKernel { n, atom, t, output } => {
            let p = atom.params()?;
            let values = t
                .points()
                .map(|s| oracles::memory_kernel(n, p, s).map(|z| vec![s, z.re, z.im]))
                .collect::<Result<Vec<_>>>()?;
            write_table(output.as_deref(), &["t", "re", "im"], values.into_iter())
        }
        OracleCommand::Feedback {
            case,
            scattering,
            kappa1,
            kappa2,
            omega_c,
            omega,
            output,
        } => {
            let case = match case {
                CaseArg::Real => FeedbackCase::RealScattering,
                CaseArg::Complex => FeedbackCase::ComplexScattering,
            };
            let closed = oracles::FeedbackClosedForm::new(case, &scattering_arg(&scattering)?, kappa1, kappa2, omega_c)?;
            eprintln!("{}", serde_json::to_string(&closed)?);
            write_table(output.as_deref(), &header, complex_rows(&omega, |w| closed.response(w)))
        }
        OracleCommand::InvertingPulse { atom, grid, output } => {
            let p = Pulse::analytic(oracles::inverting_pulse(atom.params()?), grid.grid()?, 1, 0)?;
            write_pulse_csv(open_output(output.as_deref())?, &p)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_precedence() {
        assert_eq!(resolve_tol(Some(1e-6), Some("1e-3")).unwrap(), 1e-6);
        assert_eq!(resolve_tol(None, Some("1e-3")).unwrap(), 1e-3);
        assert_eq!(resolve_tol(None, None).unwrap(), DEFAULT_TOL);
        assert!(resolve_tol(None, Some("tight")).is_err());
        assert!(resolve_tol(Some(-1.0), None).is_err());
    }

    #[test]
    fn pulse_descriptors() {
        assert_eq!(
            parse_pulse_spec("gaussian:t0=1.5,sigma=0.5").unwrap(),
            PulseSpec::Analytic(PulseShape::Gaussian {
                center: 1.5,
                width: 0.5,
                carrier: 0.0
            })
        );
        assert_eq!(
            parse_pulse_spec("square:t0=-1,t1=2").unwrap(),
            PulseSpec::Analytic(PulseShape::Square { start: -1.0, end: 2.0 })
        );
        assert_eq!(parse_pulse_spec("rising_exp").unwrap(), PulseSpec::MatchedRisingExp);
        assert_eq!(
            parse_pulse_spec("rising_exp:kappa=2,omega_c=-1").unwrap(),
            PulseSpec::Analytic(PulseShape::RisingExp { kappa: 2.0, omega_c: -1.0 })
        );
        assert_eq!(parse_pulse_spec("csv:in.csv").unwrap(), PulseSpec::Csv(PathBuf::from("in.csv")));
        assert!(parse_pulse_spec("square:t0=1").is_err());
        assert!(parse_pulse_spec("square:t0=1,t1=0").is_err());
        assert!(parse_pulse_spec("gaussian:width=1").is_err());
        assert!(parse_pulse_spec("lorentzian").is_err());
        assert!(parse_pulse_spec("gaussian:sigma").is_err());
    }

    #[test]
    fn grid_defaults_and_bounds() {
        let cli = Cli::try_parse_from(["photon-slh", "shape", "m.json", "--pulse", "gaussian"]).unwrap();
        let Command::Shape(args) = cli.command else { panic!() };
        let g = args.grid.grid().unwrap();
        assert_eq!((g.start(), g.len(), g.span()), (-20.0, 16384, 40.0));
        assert!(Cli::try_parse_from(["photon-slh", "shape", "m.json", "--pulse", "gaussian", "--log2-n", "7"]).is_err());
        assert!(Cli::try_parse_from(["photon-slh", "shape", "m.json", "--pulse", "gaussian", "--log2-n", "23"]).is_err());
    }

    #[test]
    fn error_codes() {
        assert_eq!(exit_code(&Error::SingularLoop(0.0)), EXIT_SINGULAR);
        assert_eq!(exit_code(&Error::GridTooShort { span: 1.0, required: 2.0 }), EXIT_GRID);
        assert_eq!(exit_code(&Error::Parse("x".into())), EXIT_IO);
        let report = SlhModel::identity(1, 2).validate(DEFAULT_TOL);
        assert_eq!(exit_code(&Error::Validation(Box::new(report))), EXIT_CONDITION);
    }

    #[test]
    fn compose_needs_exactly_one_kind() {
        assert!(Cli::try_parse_from(["photon-slh", "compose"]).is_err());
        assert!(Cli::try_parse_from(["photon-slh", "compose", "--feedback", "a", "--series", "b", "c"]).is_err());
        assert!(Cli::try_parse_from(["photon-slh", "compose", "--series", "b"]).is_err());
        assert!(Cli::try_parse_from(["photon-slh", "compose", "--feedback", "a", "--tensor"]).is_err());
    }

    #[test]
    fn named_scattering_matrices() {
        let s = scattering_arg("beamsplitter").unwrap();
        assert!((s.adjoint() * &s - DMatrix::identity(2, 2)).norm() < 1e-15);
        assert!(scattering_arg("[[[1,0],[0,0]]]").is_err());
        assert!(scattering_arg("[[[0,0],[1,0]],[[1,0],[0,0]]]").unwrap() == scattering_arg("swap").unwrap());
    }
}
