//! `earthwire` command-line front end.

mod input;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use earthwire::breakdown::evaluate_breakdown;
use earthwire::dsl;
use earthwire::engine::Simulation;
use earthwire::model::Model;
use earthwire::probes::CsvWriter;
use earthwire::soil::{
    apparent_from_vi, depth_of_investigation, fit_debye, DoiMethod, ElectrodeArray, FitOptions, SoilModel, SoilSample,
    SoilSampleSet,
};
use earthwire::Error;

use crate::input::{read_breakdown_model, read_probe_csv, read_soil_csv};

#[derive(Parser)]
#[command(name = "earthwire", version, about = "FDTD grounding and lightning transient solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a model file; diagnostics go to standard error.
    Check { model: PathBuf },
    /// Run a model and write probe records as CSV.
    Run(RunArgs),
    /// Fit Debye poles to soil samples.
    FitDebye(FitArgs),
    /// Evaluate a frequency-dependent soil model.
    SoilModel(SoilArgs),
    /// Apparent resistivity and permittivity from probe V and I records.
    Apparent(ApparentArgs),
    /// Depth of investigation of a surface array.
    Doi(DoiArgs),
    /// Insulation breakdown time of a probe voltage record.
    Breakdown(BreakdownArgs),
}

#[derive(Args)]
struct RunArgs {
    model: PathBuf,
    /// CSV output path; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads, 0 for all cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Courant number override.
    #[arg(long)]
    cfl: Option<f64>,
    /// Report progress every 5% on standard error.
    #[arg(long)]
    progress: bool,
}

#[derive(Args)]
struct FitArgs {
    /// CSV with columns freq, sigma (S/m), eps_r, as written by soil-model.
    #[arg(long, conflicts_with = "model")]
    input: Option<PathBuf>,
    /// Sample a soil model instead of reading a file.
    #[arg(long, value_enum, requires = "rho0")]
    model: Option<ModelName>,
    #[arg(long)]
    rho0: Option<f64>,
    #[arg(long, default_value_t = 100.0)]
    f_min: f64,
    #[arg(long, default_value_t = 4e6)]
    f_max: f64,
    #[arg(long, default_value_t = 60)]
    points: usize,
    /// Known DC conductivity (S/m) held fixed in the fit. Defaults to
    /// 1/rho0 with --model.
    #[arg(long)]
    sigma0: Option<f64>,
    #[arg(long, default_value_t = 4)]
    poles: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 40)]
    particles: usize,
    #[arg(long, default_value_t = 200)]
    iterations: usize,
    #[arg(long, default_value_t = 0.7)]
    inertia: f64,
    #[arg(long, default_value_t = 1.5)]
    cognitive: f64,
    #[arg(long, default_value_t = 1.5)]
    social: f64,
    #[arg(long, default_value_t = 1e-9)]
    tau_min: f64,
    #[arg(long, default_value_t = 1e-3)]
    tau_max: f64,
    /// Relative RMS residual above which a warning is printed.
    #[arg(long, default_value_t = 0.02)]
    max_residual: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelName {
    Messier,
    #[value(name = "alipio_visacro", alias = "alipio-visacro")]
    AlipioVisacro,
    Portela,
}

impl From<ModelName> for SoilModel {
    fn from(m: ModelName) -> Self {
        match m {
            ModelName::Messier => SoilModel::Messier,
            ModelName::AlipioVisacro => SoilModel::AlipioVisacro,
            ModelName::Portela => SoilModel::Portela,
        }
    }
}

#[derive(Args)]
struct SoilArgs {
    #[arg(value_enum)]
    model: ModelName,
    #[arg(long)]
    rho0: f64,
    /// Single frequency; otherwise a sweep over --f-min..--f-max.
    #[arg(long, conflicts_with_all = ["f_min", "f_max", "points"])]
    freq: Option<f64>,
    #[arg(long, default_value_t = 100.0)]
    f_min: f64,
    #[arg(long, default_value_t = 4e6)]
    f_max: f64,
    #[arg(long, default_value_t = 60)]
    points: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArrayKind {
    Wenner,
    #[value(name = "dipole_dipole", alias = "dipole-dipole")]
    DipoleDipole,
    General,
}

#[derive(Args)]
struct ArrayArgs {
    /// Array kind; dipole-dipole when --n is given, otherwise Wenner.
    #[arg(long, value_enum)]
    array: Option<ArrayKind>,
    /// Electrode spacing, m.
    #[arg(long)]
    a: Option<f64>,
    /// Dipole separation factor.
    #[arg(long)]
    n: Option<f64>,
    /// General array as ax,ay,bx,by,mx,my,nx,ny (current in at A, out at B;
    /// voltage is M minus N).
    #[arg(long, value_delimiter = ',', num_args = 8, value_names = ["AX", "AY", "BX", "BY", "MX", "MY", "NX", "NY"])]
    electrodes: Option<Vec<f64>>,
}

impl ArrayArgs {
    fn array(&self) -> Result<ElectrodeArray, Failure> {
        let need = |v: Option<f64>, flag: &str| {
            v.ok_or_else(|| Failure::usage(format!("--{flag} is required for this array")))
        };
        let kind = self.array.unwrap_or(if self.n.is_some() { ArrayKind::DipoleDipole } else { ArrayKind::Wenner });
        let arr = match kind {
            ArrayKind::Wenner => ElectrodeArray::Wenner { a: need(self.a, "a")? },
            ArrayKind::DipoleDipole => ElectrodeArray::DipoleDipole { a: need(self.a, "a")?, n: need(self.n, "n")? },
            ArrayKind::General => {
                let e = self
                    .electrodes
                    .as_ref()
                    .ok_or_else(|| Failure::usage("--electrodes is required for a general array"))?;
                ElectrodeArray::General { a: [e[0], e[1]], b: [e[2], e[3]], m: [e[4], e[5]], n: [e[6], e[7]] }
            }
        };
        arr.check()?;
        Ok(arr)
    }
}

#[derive(Args)]
struct ApparentArgs {
    /// Probe CSV written by `run`.
    input: PathBuf,
    #[command(flatten)]
    array: ArrayArgs,
    #[arg(long, default_value = "voltage0")]
    voltage: String,
    #[arg(long, default_value = "current0")]
    current: String,
    /// Rows with |I(f)| below this fraction of the spectral peak are invalid.
    #[arg(long, default_value_t = earthwire::soil::apparent::DEFAULT_CURRENT_FLOOR)]
    floor: f64,
}

#[derive(Args)]
struct DoiArgs {
    #[command(flatten)]
    array: ArrayArgs,
    #[arg(long, value_enum)]
    method: MethodName,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodName {
    #[value(name = "roy_apparao", alias = "roy-apparao")]
    RoyApparao,
    Barker,
}

#[derive(Args)]
struct BreakdownArgs {
    /// Probe CSV written by `run`.
    input: PathBuf,
    /// TOML file with the breakdown model parameters.
    #[arg(long)]
    params: PathBuf,
    #[arg(long, default_value = "voltage0")]
    column: String,
}

/// A failed command: message for standard error and exit status.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn io(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NonFinite { .. } => Failure { code: 3, message: e.to_string() },
            other => Failure::usage(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check { model } => check(&model),
        Command::Run(a) => run(&a),
        Command::FitDebye(a) => fit(&a),
        Command::SoilModel(a) => soil(&a),
        Command::Apparent(a) => apparent(&a),
        Command::Doi(a) => doi(&a),
        Command::Breakdown(a) => breakdown(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("earthwire: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}

fn stdout_error(e: io::Error) -> Failure {
    Failure::io(format!("cannot write output: {e}"))
}

/// Reads and validates a model, printing `file:line: message` diagnostics.
fn load_model(path: &Path) -> Result<Model, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
    dsl::load(&text).map_err(|diags| {
        for d in &diags {
            eprintln!("{}:{}: {}", path.display(), d.line, d.message);
        }
        Failure::usage("")
    })
}

fn check(path: &Path) -> Result<(), Failure> {
    load_model(path).map(|_| ())
}

fn run(args: &RunArgs) -> Result<(), Failure> {
    let mut model = load_model(&args.model)?;
    if let Some(cfl) = args.cfl {
        model.cfl = cfl;
        if let Err(e) = model.validate() {
            return Err(Failure::usage(format!("{}: {}", args.model.display(), e.message())));
        }
    }
    let timing = model.timing()?;
    let scene = model.build_scene()?;
    let mut sim = Simulation::new(scene, args.threads)?;
    let names: Vec<String> = (0..model.probes.len()).map(|i| model.probe_name(i)).collect();
    let out: Box<dyn Write> = match &args.output {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Failure::io(format!("{}: {e}", p.display())))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let mut csv = CsvWriter::new(out, &names, timing.dt).map_err(stdout_error)?;
    let total = timing.n_steps.max(1);
    let mut next_report = 5;
    let mut write_error = None;
    let outcome = sim.run(|rec| {
        if let Err(e) = csv.write(rec) {
            write_error = Some(e);
            return Err(Error::Computation("output failed".into()));
        }
        if args.progress {
            let pct = rec.step * 100 / total;
            if pct >= next_report {
                eprintln!("progress: {pct}% (step {} of {})", rec.step, timing.n_steps);
                next_report = pct / 5 * 5 + 5;
            }
        }
        Ok(())
    });
    if let Some(e) = write_error {
        return Err(stdout_error(e));
    }
    outcome.map_err(Failure::from)
}

fn fit(args: &FitArgs) -> Result<(), Failure> {
    let mut samples = match (&args.input, args.model) {
        (Some(path), _) => {
            let rows = read_soil_csv(path)?;
            let points = rows.iter().map(|p| SoilSample { freq: p.freq, eps: p.complex_permittivity() }).collect();
            SoilSampleSet::new(points, None)?
        }
        (None, Some(m)) => {
            let rho0 = args.rho0.ok_or_else(|| Failure::usage("--rho0 is required with --model"))?;
            SoilSampleSet::from_model(m.into(), rho0, args.f_min, args.f_max, args.points)?
        }
        (None, None) => return Err(Failure::usage("either --input or --model is required")),
    };
    if let Some(s) = args.sigma0 {
        samples.sigma_dc = Some(s);
        samples.check()?;
    }
    let opts = FitOptions {
        particles: args.particles,
        iterations: args.iterations,
        inertia: args.inertia,
        cognitive: args.cognitive,
        social: args.social,
        tau_min: args.tau_min,
        tau_max: args.tau_max,
        seed: args.seed,
        residual_ceiling: args.max_residual,
    };
    let f = fit_debye(&samples, args.poles, &opts)?;
    let mut out = io::stdout().lock();
    let mut report = || -> io::Result<()> {
        writeln!(out, "sigma0 = {:.3} mS/m", f.sigma0 * 1e3)?;
        writeln!(out, "eps_inf = {:.3}", f.eps_inf)?;
        for (i, p) in f.poles.iter().enumerate() {
            writeln!(out, "delta_eps_{} = {:.3}", i + 1, p.delta_eps)?;
            writeln!(out, "tau_{} = {:.4e} s", i + 1, p.tau)?;
        }
        writeln!(out, "residual = {:.3e}", f.residual)?;
        write!(out, "debye (deb")?;
        for p in &f.poles {
            write!(out, ", {:.3}, {:.4e}", p.delta_eps, p.tau)?;
        }
        writeln!(out, ")")
    };
    report().map_err(stdout_error)?;
    if let Some(w) = &f.warning {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn soil(args: &SoilArgs) -> Result<(), Failure> {
    let model: SoilModel = args.model.into();
    let rows = match args.freq {
        Some(f) => vec![model.properties(args.rho0, f)?],
        None => model.sweep(args.rho0, args.f_min, args.f_max, args.points)?,
    };
    let mut out = io::stdout().lock();
    let mut write = || -> io::Result<()> {
        writeln!(out, "freq,sigma,eps_r")?;
        for r in &rows {
            writeln!(out, "{:.9e},{:.9e},{:.9e}", r.freq, r.sigma, r.eps_r)?;
        }
        Ok(())
    };
    write().map_err(stdout_error)
}

fn apparent(args: &ApparentArgs) -> Result<(), Failure> {
    let array = args.array.array()?;
    let probes = read_probe_csv(&args.input)?;
    let v = probes.column(&args.voltage)?;
    let i = probes.column(&args.current)?;
    let rows = apparent_from_vi(v, i, probes.dt()?, &array, args.floor)?;
    let mut out = io::stdout().lock();
    let mut write = || -> io::Result<()> {
        writeln!(out, "freq,rho_a,eps_a,valid")?;
        for r in &rows {
            writeln!(out, "{:.9e},{:.9e},{:.9e},{}", r.freq, r.rho_a, r.eps_a, u8::from(r.valid))?;
        }
        Ok(())
    };
    write().map_err(stdout_error)
}

fn doi(args: &DoiArgs) -> Result<(), Failure> {
    let array = args.array.array()?;
    let method = match args.method {
        MethodName::RoyApparao => DoiMethod::RoyApparao,
        MethodName::Barker => DoiMethod::Barker,
    };
    let z = depth_of_investigation(&array, method)?;
    writeln!(io::stdout().lock(), "{z:.6}").map_err(stdout_error)
}

fn breakdown(args: &BreakdownArgs) -> Result<(), Failure> {
    let model = read_breakdown_model(&args.params)?;
    let probes = read_probe_csv(&args.input)?;
    let v = probes.column(&args.column)?;
    let t0 = probes.time[0];
    let line = match evaluate_breakdown(v, probes.dt()?, &model)? {
        Some(t) => format!("breakdown at {:.9e} s", t0 + t),
        None => "no breakdown".to_string(),
    };
    writeln!(io::stdout().lock(), "{line}").map_err(stdout_error)
}
