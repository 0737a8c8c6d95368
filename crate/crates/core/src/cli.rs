//! Command-line front end.
//!
//! Every command produces one document: a provenance block (tool version,
//! the exact configuration, SHA-256 of every input file) followed by the
//! result as JSON, or as a CSV table preceded by `#` comment lines.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::apes::{fit_pjt, fit_quartic_well, ApesScan, FitOptions, FrozenMask};
use crate::ctl::{photostability_windows, transition_level, ChargeStateRecord, NamedSeries, ThresholdCurves};
use crate::error::{Error, Result};
use crate::lsq::LmOptions;
use crate::schrodinger::{solve_bound_states, tunneling_splitting, wkb_splitting, PotentialCurve, SolveOptions};
use crate::spectro::{
    check_lifetime, hf_levels, hf_principal, linear_calibration, radiative_rate, three_sig, HyperfineTensor,
    RadiativeInput,
};
use crate::units::{load_param_table, AxisKind, StrainSeries, TableFormat};
use crate::vibronic::observables::{vibronic_report, VibronicConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;

#[derive(Debug, Parser, Serialize)]
#[command(name = "sivtool", version, about = "Vibronic, tunneling and spectroscopic models of the neutral SiV center")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Args, Serialize)]
pub struct GlobalArgs {
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
    /// Worker threads for batch commands; 0 uses every core.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, global = true, default_value_t = 0x5eed)]
    pub seed: u64,
    /// Boson truncation n_x + n_y <= n_max.
    #[arg(long, global = true, default_value_t = 60)]
    pub n_max: usize,
    /// Relative eigensolver residual tolerance.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    /// Record the wall-clock time in the provenance block.
    #[arg(long, global = true)]
    pub stamp: bool,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Vibronic gap, Ham factors and spin-orbit splitting per strain point.
    Vibronic(VibronicArgs),
    /// Tunneling splitting and bound states of 1D potentials.
    Tunnel(TunnelArgs),
    /// Fit the product Jahn-Teller model to a potential-surface cut.
    FitApes(FitApesArgs),
    /// Fit a quartic double well to a 1D scan.
    FitWell(FitWellArgs),
    /// Radiative rate and lifetime.
    Lifetime(LifetimeArgs),
    /// Hyperfine principal values and zero-field levels.
    Hf(HfArgs),
    /// Charge transition levels and photostability windows.
    Ctl(CtlArgs),
    /// Straight-line fit of an observable against strain.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct VibronicArgs {
    /// Parameter table (CSV or TOML).
    #[arg(long)]
    pub params: PathBuf,
    /// Number of lowest eigenpairs.
    #[arg(long, default_value_t = 24)]
    pub k: usize,
    #[arg(long, default_value_t = crate::vibronic::classify::DEFAULT_DEG_TOL)]
    pub deg_tol: f64,
    /// Also diagonalize with spin-orbit coupling included.
    #[arg(long)]
    pub direct_so: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct TunnelArgs {
    /// Potential files with columns `q_angsqrtamu,v_mev`.
    #[arg(required = true)]
    pub potentials: Vec<PathBuf>,
    /// Bound states to report per potential.
    #[arg(long, default_value_t = 6)]
    pub states: usize,
    /// Effective mass in amu.
    #[arg(long, default_value_t = 1.0)]
    pub mass: f64,
    #[arg(long)]
    pub no_richardson: bool,
    #[arg(long)]
    pub no_decay_check: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct FitApesArgs {
    /// Cut with columns `q_angsqrtamu,e1_mev[,e2_mev,...]`.
    #[arg(long)]
    pub scan: PathBuf,
    /// Parameter table holding the starting point.
    #[arg(long)]
    pub init: PathBuf,
    /// Row of the parameter table to start from.
    #[arg(long, default_value_t = 0)]
    pub row: usize,
    /// Comma-separated parameters to hold fixed.
    #[arg(long, value_delimiter = ',', default_value = "quad_g")]
    pub freeze: Vec<String>,
    #[arg(long, default_value_t = crate::apes::PJT_STARTS)]
    pub starts: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct FitWellArgs {
    /// Scan with columns `q_angsqrtamu,e_mev`.
    #[arg(long)]
    pub scan: PathBuf,
    /// The scan covers q >= 0 only and is mirrored before fitting.
    #[arg(long)]
    pub half: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct LifetimeArgs {
    /// Emission energy, eV.
    #[arg(long)]
    pub ezpl: f64,
    /// Refractive index.
    #[arg(long = "n")]
    pub n: f64,
    /// Transition dipole, Debye.
    #[arg(long)]
    pub mu: f64,
    /// Quoted lifetime (ns) to compare against.
    #[arg(long)]
    pub reference_ns: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    pub reference_tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct HfArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub apar: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub aperp: Option<f64>,
    /// Full tensor, nine comma-separated values in row order (MHz).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with_all = ["apar", "aperp"])]
    pub tensor: Option<Vec<f64>>,
    /// Defect symmetry axis.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "1,1,1")]
    pub axis: Vec<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct CtlArgs {
    /// Charge states with columns `q,e_tot_ev,e_el_ev,delta_v_ev`.
    #[arg(long)]
    pub records: Option<PathBuf>,
    /// Valence band maximum, eV.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub vbm: f64,
    /// ZPL series with columns `pressure_gpa,energy_ev`.
    #[arg(long, requires = "threshold")]
    pub zpl: Option<PathBuf>,
    /// Threshold series as NAME=PATH; repeatable.
    #[arg(long)]
    pub threshold: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisArg {
    Pressure,
    Strain,
}

#[derive(Debug, Args, Serialize)]
pub struct CalibrateArgs {
    /// Two-column series with a header line.
    #[arg(long)]
    pub series: PathBuf,
    #[arg(long, value_enum, default_value_t = AxisArg::Pressure)]
    pub axis: AxisArg,
    /// Multiplies x before fitting (e.g. -100 for tensile fraction to signed percent).
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    pub x_scale: f64,
    /// Multiplies y before fitting (e.g. 1000 for eV to meV).
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    pub y_scale: f64,
}

#[derive(Debug, Clone, Serialize)]
struct InputDigest {
    path: String,
    sha256: String,
    bytes: usize,
}

#[derive(Debug, Clone, Serialize)]
struct Provenance {
    tool: &'static str,
    version: &'static str,
    command: String,
    config: Value,
    inputs: Vec<InputDigest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    generated_unix_s: Option<u64>,
}

/// Result of one command before serialization.
struct Outcome {
    result: Value,
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
    exit: i32,
}

/// Inputs consumed by a command, hashed in the order they were read.
#[derive(Default)]
struct Inputs(Vec<InputDigest>);

impl Inputs {
    fn read(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        if !self.0.iter().any(|d| d.path == path.display().to_string()) {
            self.0.push(InputDigest {
                path: path.display().to_string(),
                sha256: hex::encode(Sha256::digest(&bytes)),
                bytes: bytes.len(),
            });
        }
        Ok(bytes)
    }
}

fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NONCONVERGENCE
    } else {
        EXIT_VALIDATION
    }
}

fn worst(a: i32, b: i32) -> i32 {
    a.max(b)
}

fn fmt_f(x: f64) -> String {
    format!("{x}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f).unwrap_or_default()
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Validation(format!("cannot start {jobs} worker threads: {e}")))
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs a parsed command line, writes the document and returns the exit code.
pub fn execute(cli: &Cli) -> Result<i32> {
    if !(cli.global.tol > 0.0) {
        return Err(Error::Validation(format!("--tol must be positive, got {}", cli.global.tol)));
    }
    let mut inputs = Inputs::default();
    let outcome = match &cli.command {
        Command::Vibronic(a) => cmd_vibronic(&cli.global, a, &mut inputs)?,
        Command::Tunnel(a) => cmd_tunnel(&cli.global, a, &mut inputs)?,
        Command::FitApes(a) => cmd_fit_apes(&cli.global, a, &mut inputs)?,
        Command::FitWell(a) => cmd_fit_well(a, &mut inputs)?,
        Command::Lifetime(a) => cmd_lifetime(a)?,
        Command::Hf(a) => cmd_hf(a)?,
        Command::Ctl(a) => cmd_ctl(a, &mut inputs)?,
        Command::Calibrate(a) => cmd_calibrate(a, &mut inputs)?,
    };
    let config = serde_json::to_value(cli).expect("arguments serialize");
    let command = config["command"]
        .as_object()
        .and_then(|o| o.keys().next().cloned())
        .unwrap_or_default();
    let provenance = Provenance {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        inputs: inputs.0,
        generated_unix_s: cli.global.stamp.then(|| {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        }),
    };
    let text = render(&provenance, &outcome, cli.global.format)?;
    match &cli.global.out {
        Some(path) => fs::write(path, text).map_err(|e| Error::io(path, e))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Error::io("<stdout>", e))?;
        }
    }
    Ok(outcome.exit)
}

fn render(p: &Provenance, o: &Outcome, format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Json => {
            let doc = json!({ "provenance": p, "result": o.result });
            let mut s = serde_json::to_string_pretty(&doc).expect("values serialize");
            s.push('\n');
            Ok(s)
        }
        OutputFormat::Csv => {
            let mut s = format!("# tool: {} {}\n# command: {}\n", p.tool, p.version, p.command);
            s.push_str(&format!("# config: {}\n", serde_json::to_string(&p.config).expect("values serialize")));
            for d in &p.inputs {
                s.push_str(&format!("# input: {} sha256={} bytes={}\n", d.path, d.sha256, d.bytes));
            }
            if let Some(t) = p.generated_unix_s {
                s.push_str(&format!("# generated_unix_s: {t}\n"));
            }
            let mut w = csv::Writer::from_writer(Vec::new());
            let err = |e: csv::Error| Error::Shape(format!("cannot write CSV: {e}"));
            w.write_record(&o.headers).map_err(err)?;
            for r in &o.rows {
                w.write_record(r).map_err(err)?;
            }
            let body = w.into_inner().map_err(|e| Error::Shape(format!("cannot write CSV: {e}")))?;
            s.push_str(&String::from_utf8(body).expect("CSV is UTF-8"));
            Ok(s)
        }
    }
}

fn cmd_vibronic(g: &GlobalArgs, a: &VibronicArgs, inputs: &mut Inputs) -> Result<Outcome> {
    let text = inputs.read(&a.params)?;
    let text = String::from_utf8(text).map_err(|_| Error::Validation(format!("{} is not UTF-8", a.params.display())))?;
    let params = crate::units::parse_param_table(&text, &a.params, TableFormat::from_path(&a.params))?;
    let cfg = VibronicConfig {
        n_max: g.n_max,
        k: a.k,
        tol: g.tol,
        deg_tol: a.deg_tol,
        seed: g.seed,
    };
    use rayon::prelude::*;
    let reports: Vec<Result<_>> =
        pool(g.jobs)?.install(|| params.par_iter().map(|p| vibronic_report(p, &cfg, a.direct_so)).collect());

    let headers = [
        "label", "x", "e_jt1_mev", "e_jt2_mev", "delta_mev", "p_u", "p_g", "p_mean", "delta_so_ghz",
        "delta_so_direct_ghz", "n_max", "converged", "max_residual", "ground", "warnings", "error",
    ];
    let mut exit = EXIT_OK;
    let mut points = Vec::new();
    let mut rows = Vec::new();
    for (p, r) in params.iter().zip(reports) {
        match r {
            Ok(rep) => {
                if !rep.converged {
                    exit = worst(exit, EXIT_NONCONVERGENCE);
                }
                rows.push(vec![
                    rep.label.clone(),
                    fmt_f(rep.x),
                    fmt_f(rep.e_jt1_mev),
                    fmt_f(rep.e_jt2_mev),
                    fmt_f(rep.delta_mev),
                    fmt_f(rep.p_u),
                    fmt_f(rep.p_g),
                    fmt_f(rep.p_mean),
                    fmt_opt(rep.delta_so_ghz),
                    fmt_opt(rep.delta_so_direct_ghz),
                    rep.n_max.to_string(),
                    rep.converged.to_string(),
                    fmt_f(rep.max_residual),
                    rep.ground.clone(),
                    rep.warnings.join("; "),
                    String::new(),
                ]);
                points.push(json!({ "label": rep.label, "report": rep }));
            }
            Err(e) => {
                exit = worst(exit, exit_code(&e));
                let mut row = vec![String::new(); headers.len()];
                row[0] = p.label.to_string();
                row[1] = fmt_f(p.label.value());
                row[15] = e.to_string();
                rows.push(row);
                points.push(json!({ "label": p.label.to_string(), "error": e.to_string() }));
            }
        }
    }
    Ok(Outcome {
        result: json!({ "points": points }),
        headers: headers.iter().map(|s| s.to_string()).collect(),
        rows,
        exit,
    })
}

fn tunnel_one(path: &Path, a: &TunnelArgs, inputs: &mut Inputs) -> Result<Value> {
    inputs.read(path)?;
    let v = PotentialCurve::load_csv(path)?.with_mass(a.mass)?;
    let opts = SolveOptions {
        richardson: !a.no_richardson,
        check_decay: !a.no_decay_check,
    };
    let fd = tunneling_splitting(&v, &opts)?;
    let states = solve_bound_states(&v, a.states.max(2), &opts)?;
    let wkb = wkb_splitting(&v, &opts);
    let (wkb_value, ratio) = match &wkb {
        Ok(w) => (serde_json::to_value(w).expect("serializes"), Some(w.delta_e_mev / fd.delta_e_mev)),
        Err(e) => (json!({ "error": e.to_string() }), None),
    };
    Ok(json!({
        "fd": fd,
        "wkb": wkb_value,
        "wkb_over_fd": ratio,
        "energies_mev": states.energies,
        "parities": states.parities,
    }))
}

fn cmd_tunnel(g: &GlobalArgs, a: &TunnelArgs, inputs: &mut Inputs) -> Result<Outcome> {
    use rayon::prelude::*;
    let results: Vec<(Result<Value>, Inputs)> = pool(g.jobs)?.install(|| {
        a.potentials
            .par_iter()
            .map(|p| {
                let mut local = Inputs::default();
                (tunnel_one(p, a, &mut local), local)
            })
            .collect()
    });
    let headers = [
        "path", "e0_mev", "e1_mev", "delta_e_mev", "nu_ghz", "above_barrier", "wkb_delta_e_mev", "wkb_over_fd",
        "energies_mev", "error",
    ];
    let mut exit = EXIT_OK;
    let mut entries = Vec::new();
    let mut rows = Vec::new();
    for (path, (res, local)) in a.potentials.iter().zip(results) {
        inputs.0.extend(local.0);
        let name = path.display().to_string();
        match res {
            Ok(v) => {
                let fd = &v["fd"];
                let energies: Vec<String> = v["energies_mev"]
                    .as_array()
                    .map(|a| a.iter().map(|e| e.to_string()).collect())
                    .unwrap_or_default();
                rows.push(vec![
                    name.clone(),
                    fd["e0_mev"].to_string(),
                    fd["e1_mev"].to_string(),
                    fd["delta_e_mev"].to_string(),
                    fd["nu_ghz"].to_string(),
                    fd["above_barrier"].to_string(),
                    v["wkb"].get("delta_e_mev").map(|x| x.to_string()).unwrap_or_default(),
                    if v["wkb_over_fd"].is_null() { String::new() } else { v["wkb_over_fd"].to_string() },
                    energies.join(" "),
                    String::new(),
                ]);
                let mut entry = json!({ "path": name });
                entry["result"] = v;
                entries.push(entry);
            }
            Err(e) => {
                exit = worst(exit, exit_code(&e));
                let mut row = vec![String::new(); headers.len()];
                row[0] = name.clone();
                row[9] = e.to_string();
                rows.push(row);
                entries.push(json!({ "path": name, "error": e.to_string() }));
            }
        }
    }
    Ok(Outcome {
        result: json!({ "potentials": entries }),
        headers: headers.iter().map(|s| s.to_string()).collect(),
        rows,
        exit,
    })
}

fn frozen_mask(names: &[String]) -> Result<FrozenMask> {
    let mut m = FrozenMask {
        f_g: false,
        f_u: false,
        hbar_omega: false,
        lambda: false,
        xi: false,
        quad_g: false,
    };
    for n in names.iter().map(|s| s.trim()).filter(|s| !s.is_empty()) {
        match n.trim_end_matches("_mev") {
            "f_g" => m.f_g = true,
            "f_u" => m.f_u = true,
            "hbar_omega" => m.hbar_omega = true,
            "lambda" => m.lambda = true,
            "xi" => m.xi = true,
            "quad_g" => m.quad_g = true,
            "none" => {}
            other => return Err(Error::Validation(format!("unknown parameter `{other}` in --freeze"))),
        }
    }
    Ok(m)
}

fn fit_rows(fit: &crate::apes::FitResult) -> Vec<Vec<String>> {
    fit.parameters
        .iter()
        .map(|p| vec![p.name.clone(), fmt_f(p.value), fmt_f(p.uncertainty), p.free.to_string()])
        .collect()
}

fn cmd_fit_apes(g: &GlobalArgs, a: &FitApesArgs, inputs: &mut Inputs) -> Result<Outcome> {
    inputs.read(&a.scan)?;
    inputs.read(&a.init)?;
    let scan = ApesScan::load_csv(&a.scan)?;
    let table = load_param_table(&a.init, TableFormat::from_path(&a.init))?;
    let init = table.get(a.row).ok_or_else(|| {
        Error::Validation(format!("{} has {} rows; --row {} is out of range", a.init.display(), table.len(), a.row))
    })?;
    let opts = FitOptions {
        seed: g.seed,
        starts: a.starts,
        ..FitOptions::default()
    };
    let (params, fit) = fit_pjt(&scan, init, &frozen_mask(&a.freeze)?, &opts)?;
    let exit = if fit.converged { EXIT_OK } else { EXIT_NONCONVERGENCE };
    let table = crate::units::write_param_table(&[params], TableFormat::Csv)?;
    Ok(Outcome {
        result: json!({ "fit": fit, "params_csv": table }),
        headers: ["parameter", "value", "uncertainty", "free"].map(String::from).to_vec(),
        rows: fit_rows(&fit),
        exit,
    })
}

fn cmd_fit_well(a: &FitWellArgs, inputs: &mut Inputs) -> Result<Outcome> {
    inputs.read(&a.scan)?;
    let scan = ApesScan::load_csv(&a.scan)?;
    let (well, fit) = fit_quartic_well(&scan, a.half, &LmOptions::default())?;
    let exit = if fit.converged { EXIT_OK } else { EXIT_NONCONVERGENCE };
    let mut rows = fit_rows(&fit);
    rows.push(vec!["curvature_mev_per_a2amu".into(), fmt_f(well.curvature()), String::new(), "false".into()]);
    Ok(Outcome {
        result: json!({
            "fit": fit,
            "barrier_mev": well.barrier(),
            "curvature_mev_per_a2amu": well.curvature(),
        }),
        headers: ["parameter", "value", "uncertainty", "free"].map(String::from).to_vec(),
        rows,
        exit,
    })
}

fn cmd_lifetime(a: &LifetimeArgs) -> Result<Outcome> {
    let inp = RadiativeInput::new(a.ezpl, a.n, a.mu)?;
    let rate = radiative_rate(&inp)?;
    let check = a.reference_ns.map(|r| check_lifetime(&rate, r, a.reference_tol));
    let tau = rate.tau_ns.map(three_sig);
    Ok(Outcome {
        result: json!({
            "input": inp,
            "gamma_per_s": rate.gamma,
            "tau_ns": tau,
            "tau_ns_unrounded": rate.tau_ns,
            "infinite_lifetime": rate.is_infinite(),
            "reference": check,
        }),
        headers: ["e_zpl_ev", "n", "mu_debye", "gamma_per_s", "tau_ns", "infinite_lifetime", "reference_ns", "discrepant"]
            .map(String::from)
            .to_vec(),
        rows: vec![vec![
            fmt_f(inp.e_zpl),
            fmt_f(inp.refractive_index),
            fmt_f(inp.mu),
            fmt_f(rate.gamma),
            fmt_opt(tau),
            rate.is_infinite().to_string(),
            fmt_opt(check.map(|c| c.reference_ns)),
            check.map(|c| c.discrepant.to_string()).unwrap_or_default(),
        ]],
        exit: EXIT_OK,
    })
}

fn cmd_hf(a: &HfArgs) -> Result<Outcome> {
    let axis: [f64; 3] = a
        .axis
        .as_slice()
        .try_into()
        .map_err(|_| Error::Validation(format!("--axis needs 3 components, got {}", a.axis.len())))?;
    let (a_par, a_perp, principal) = match (&a.tensor, a.apar, a.aperp) {
        (Some(t), _, _) => {
            if t.len() != 9 {
                return Err(Error::Validation(format!("--tensor needs 9 components, got {}", t.len())));
            }
            let m = std::array::from_fn(|i| std::array::from_fn(|j| t[3 * i + j]));
            let p = hf_principal(&HyperfineTensor::new(m, axis)?);
            (p.a_par, p.a_perp, Some(p))
        }
        (None, Some(par), Some(perp)) => (par, perp, None),
        _ => return Err(Error::Validation("give either --tensor or both --apar and --aperp".into())),
    };
    let levels = hf_levels(a_par, a_perp);
    let trace: f64 = levels.energies.iter().sum();
    Ok(Outcome {
        result: json!({
            "a_par_mhz": a_par,
            "a_perp_mhz": a_perp,
            "principal": principal,
            "levels": levels,
            "trace_mhz": trace,
        }),
        headers: ["index", "energy_mhz"].map(String::from).to_vec(),
        rows: levels
            .energies
            .iter()
            .enumerate()
            .map(|(i, e)| vec![i.to_string(), fmt_f(*e)])
            .collect(),
        exit: EXIT_OK,
    })
}

fn load_records(path: &Path, inputs: &mut Inputs) -> Result<Vec<ChargeStateRecord>> {
    let bytes = inputs.read(path)?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes.as_slice());
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| crate::units::parse_err(path, row, "record", e.to_string()))?;
        if rec.len() != 4 {
            return Err(crate::units::parse_err(path, row, "record", "expected q,e_tot_ev,e_el_ev,delta_v_ev".into()));
        }
        let q: i32 = rec[0]
            .parse()
            .map_err(|_| crate::units::parse_err(path, row, "q", format!("`{}` is not an integer", &rec[0])))?;
        let f = |c: usize, name: &str| crate::units::parse_field(path, row, name, &rec[c]);
        out.push(ChargeStateRecord::new(q, f(1, "e_tot_ev")?, f(2, "e_el_ev")?, f(3, "delta_v_ev")?)?);
    }
    Ok(out)
}

fn cmd_ctl(a: &CtlArgs, inputs: &mut Inputs) -> Result<Outcome> {
    if a.records.is_none() && a.zpl.is_none() {
        return Err(Error::Validation("ctl needs --records and/or --zpl with --threshold".into()));
    }
    let headers = ["kind", "a", "b", "value", "status"].map(String::from).to_vec();
    let mut rows = Vec::new();
    let mut result = json!({});

    if let Some(path) = &a.records {
        let recs = load_records(path, inputs)?;
        let mut levels = Vec::new();
        for (i, ra) in recs.iter().enumerate() {
            for rb in &recs[i + 1..] {
                if ra.q == rb.q {
                    continue;
                }
                let (hi, lo) = if ra.q > rb.q { (ra, rb) } else { (rb, ra) };
                let eps = transition_level(hi, lo, a.vbm)?;
                rows.push(vec!["level".into(), hi.q.to_string(), lo.q.to_string(), fmt_f(eps), String::new()]);
                levels.push(json!({ "q": hi.q, "q_prime": lo.q, "level_ev": eps }));
            }
        }
        result["levels"] = Value::Array(levels);
    }

    if let Some(zpl_path) = &a.zpl {
        inputs.read(zpl_path)?;
        let zpl = StrainSeries::load_csv(zpl_path, AxisKind::PressureGpa, "eV")?;
        let mut thresholds = Vec::new();
        for spec in &a.threshold {
            let (name, path) = spec
                .split_once('=')
                .ok_or_else(|| Error::Validation(format!("--threshold expects NAME=PATH, got `{spec}`")))?;
            let path = Path::new(path);
            inputs.read(path)?;
            thresholds.push(NamedSeries {
                name: name.to_string(),
                series: StrainSeries::load_csv(path, AxisKind::PressureGpa, "eV")?,
            });
        }
        let report = photostability_windows(&ThresholdCurves::new(zpl, thresholds)?)?;
        for w in &report.windows {
            rows.push(vec!["window".into(), fmt_f(w.from), fmt_f(w.to), String::new(), w.status.to_string()]);
        }
        for c in &report.crossings {
            rows.push(vec!["crossing".into(), c.threshold.clone(), String::new(), fmt_f(c.x), c.entering.to_string()]);
        }
        result["windows"] = json!(report
            .windows
            .iter()
            .map(|w| json!({ "from_gpa": w.from, "to_gpa": w.to, "status": w.status }))
            .collect::<Vec<_>>());
        result["crossings"] = json!(report.crossings);
    }
    Ok(Outcome {
        result,
        headers,
        rows,
        exit: EXIT_OK,
    })
}

fn cmd_calibrate(a: &CalibrateArgs, inputs: &mut Inputs) -> Result<Outcome> {
    let bytes = inputs.read(&a.series)?;
    let axis = match a.axis {
        AxisArg::Pressure => AxisKind::PressureGpa,
        AxisArg::Strain => AxisKind::StrainFraction,
    };
    let raw = StrainSeries::load_csv(&a.series, axis, "")?;
    let header = String::from_utf8_lossy(&bytes).lines().next().unwrap_or_default().to_string();
    let scaled = StrainSeries::new(
        axis,
        "",
        raw.points().iter().map(|&(x, y)| (x * a.x_scale, y * a.y_scale)).collect(),
    )?;
    let cal = linear_calibration(&scaled)?;
    Ok(Outcome {
        result: json!({
            "columns": header,
            "x_scale": a.x_scale,
            "y_scale": a.y_scale,
            "calibration": cal,
        }),
        headers: ["slope", "intercept", "r_squared", "points"].map(String::from).to_vec(),
        rows: vec![vec![fmt_f(cal.slope), fmt_f(cal.intercept), fmt_f(cal.r_squared), cal.points.to_string()]],
        exit: EXIT_OK,
    })
}
