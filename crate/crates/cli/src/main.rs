use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nlafock::sweep::{
    parse_measures, run_preset, run_sweep, run_wigner, write_sweep, CutoffChoice, Family, GainRange, PresetId,
    PresetOptions, StateParam, SweepSpec, WignerRequest, DEFAULT_ACCURACY, DEFAULT_G_MAX, DEFAULT_G_MIN,
    DEFAULT_G_STEPS, DEFAULT_WIGNER_POINTS,
};
use nlafock::{Error, ErrorKind};

/// Default output directory when `--out` is not given.
const OUT_DIR_ENV: &str = "NLAFOCK_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "nlafock", version, about = "Noiseless linear amplification of Gaussian states in a truncated Fock space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sweep gain and threshold, writing one CSV row per point.
    #[command(args_override_self = true)]
    Sweep(SweepArgs),
    /// Sample the Wigner function of one amplified state.
    #[command(args_override_self = true)]
    Wigner(WignerArgs),
    /// Regenerate a figure dataset with frozen parameters.
    #[command(args_override_self = true)]
    Preset(PresetArgs),
}

#[derive(Args, Debug)]
struct StateArgs {
    /// coherent, squeezed, twb-destructive or twb-nondestructive
    #[arg(long)]
    family: Family,
    #[arg(long, group = "param")]
    alpha: Option<f64>,
    #[arg(long, group = "param")]
    r: Option<f64>,
    #[arg(long, group = "param")]
    chi: Option<f64>,
    /// Mean input photon number; the family parameter is solved for.
    #[arg(long, group = "param")]
    energy: Option<f64>,
}

impl StateArgs {
    fn param(&self) -> Result<StateParam, Error> {
        let expected = match self.family {
            Family::Coherent => ("alpha", self.alpha),
            Family::Squeezed => ("r", self.r),
            Family::TwbDestructive | Family::TwbNondestructive => ("chi", self.chi),
        };
        if let Some(n) = self.energy {
            return Ok(StateParam::Energy(n));
        }
        match expected.1 {
            Some(v) => Ok(StateParam::Value(v)),
            None => Err(Error::InvalidInput(format!(
                "family {} needs --{} or --energy",
                self.family.name(),
                expected.0
            ))),
        }
    }
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    state: StateArgs,
    #[arg(long, default_value_t = DEFAULT_G_MIN)]
    g_min: f64,
    #[arg(long, default_value_t = DEFAULT_G_MAX)]
    g_max: f64,
    #[arg(long, default_value_t = DEFAULT_G_STEPS)]
    g_steps: usize,
    /// Comma-separated thresholds.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    p: Vec<usize>,
    /// Comma-separated subset of psuccess,nbar,ng,nc,wln,entanglement.
    /// Defaults to every measure the family supports.
    #[arg(long)]
    measures: Option<String>,
    #[arg(long, default_value_t = DEFAULT_ACCURACY)]
    accuracy: f64,
    #[arg(long, default_value = "auto")]
    cutoff: CutoffChoice,
    /// CSV path; the summary is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    /// key = value file with defaults for any of these flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct WignerArgs {
    #[command(flatten)]
    state: StateArgs,
    #[arg(long, default_value_t = 1.0)]
    g: f64,
    #[arg(long, default_value_t = 2)]
    p: usize,
    #[arg(long, default_value_t = DEFAULT_WIGNER_POINTS)]
    points: usize,
    /// Box half-width; chosen from the covariance matrix when omitted.
    #[arg(long)]
    half_width: Option<f64>,
    #[arg(long, default_value = "auto")]
    cutoff: CutoffChoice,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PresetArgs {
    /// fig1, fig2, fig3, fig3-twb, fig4 or fig5
    id: PresetId,
    #[arg(long, default_value_t = DEFAULT_G_MIN)]
    g_min: f64,
    #[arg(long, default_value_t = DEFAULT_G_MAX)]
    g_max: f64,
    #[arg(long, default_value_t = DEFAULT_G_STEPS)]
    g_steps: usize,
    #[arg(long, default_value_t = DEFAULT_ACCURACY)]
    accuracy: f64,
    #[arg(long, default_value_t = DEFAULT_WIGNER_POINTS)]
    points: usize,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::InvalidInput => 2,
        ErrorKind::Convergence => 3,
        ErrorKind::Resource => 4,
    }
}

fn out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."))
}

fn ensure_parent(path: &Path) -> Result<(), Error> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => std::fs::create_dir_all(dir)
            .map_err(|e| Error::InvalidInput(format!("cannot create {}: {e}", dir.display()))),
        _ => Ok(()),
    }
}

/// Reads `key = value` lines (`#` starts a comment) into flag arguments.
fn config_args(path: &Path) -> Result<Vec<OsString>, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read config {}: {e}", path.display())))?;
    let mut args = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidInput(format!("{}:{}: expected key = value", path.display(), lineno + 1))
        })?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key == "config" {
            return Err(Error::InvalidInput("config files cannot include other config files".into()));
        }
        args.push(format!("--{key}").into());
        args.push(value.trim().into());
    }
    Ok(args)
}

/// Splices config-file flags in front of the command-line flags so that
/// explicit flags win.
fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>, Error> {
    let mut config = None;
    let mut rest = Vec::with_capacity(argv.len());
    let mut it = argv.into_iter();
    while let Some(arg) = it.next() {
        let s = arg.to_string_lossy().into_owned();
        if s == "--config" {
            let path = it.next().ok_or_else(|| Error::InvalidInput("--config needs a path".into()))?;
            config = Some(PathBuf::from(path));
        } else if let Some(path) = s.strip_prefix("--config=") {
            config = Some(PathBuf::from(path));
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = config else { return Ok(rest) };
    let extra = config_args(&path)?;
    // program name and subcommand, then the preset id if any
    let head = if rest.get(1).is_some_and(|s| s == "preset") { 3 } else { 2 };
    if rest.len() < 2 {
        return Err(Error::InvalidInput("--config must follow a subcommand".into()));
    }
    let head = head.min(rest.len());
    let mut out: Vec<OsString> = rest[..head].to_vec();
    out.extend(extra);
    out.extend_from_slice(&rest[head..]);
    Ok(out)
}

fn sweep(args: SweepArgs) -> Result<Option<Error>, Error> {
    let family = args.state.family;
    let measures = match &args.measures {
        Some(list) => parse_measures(list)?,
        None => family.default_measures(),
    };
    let spec = SweepSpec {
        family,
        param: args.state.param()?,
        gains: GainRange::new(args.g_min, args.g_max, args.g_steps)?,
        p_list: args.p,
        measures,
        accuracy: args.accuracy,
        cutoff: args.cutoff,
    };
    let path = args.out.unwrap_or_else(|| out_dir().join(format!("{}.csv", family.name())));
    ensure_parent(&path)?;
    let output = run_sweep(&spec, args.jobs)?;
    write_sweep(&output, &path)?;
    let failed = output.failures().count();
    if failed > 0 {
        eprintln!("{failed} of {} points failed; see {}", output.rows.len(), path.display());
    }
    eprintln!("wrote {}", path.display());
    Ok(output.first_error().cloned())
}

fn wigner(args: WignerArgs) -> Result<Option<Error>, Error> {
    let req = WignerRequest {
        family: args.state.family,
        param: args.state.param()?,
        g: args.g,
        p: args.p,
        points_per_axis: args.points,
        half_width: args.half_width,
        cutoff: args.cutoff,
    };
    let path = args.out.unwrap_or_else(|| out_dir().join("wigner.csv"));
    ensure_parent(&path)?;
    let (field, cutoff) = run_wigner(&req)?;
    field
        .save(&path, cutoff.n_max())
        .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))?;
    eprintln!(
        "wrote {} (total integral {:.10}, negative volume {:.6e})",
        path.display(),
        field.total_integral,
        field.negative_volume
    );
    Ok(None)
}

fn preset(args: PresetArgs) -> Result<Option<Error>, Error> {
    let opts = PresetOptions {
        gains: GainRange::new(args.g_min, args.g_max, args.g_steps)?,
        accuracy: args.accuracy,
        jobs: args.jobs,
        points_per_axis: args.points,
    };
    let dir = args.out.unwrap_or_else(|| out_dir().join(args.id.name()));
    let report = run_preset(args.id, &opts, &dir)?;
    for f in &report.files {
        eprintln!("wrote {}", f.display());
    }
    Ok(report.first_error)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv = match expand_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::try_parse_from(argv).unwrap_or_else(|e| e.exit());
    let result = match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::Wigner(a) => wigner(a),
        Command::Preset(a) => preset(a),
    };
    match result {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
