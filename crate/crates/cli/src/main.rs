mod commands;
mod config;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Worker-count variable; the library runs single-threaded, so values above
/// one are recorded but not used.
pub const THREADS_ENV: &str = "KORANYI_THREADS";

#[derive(Debug, Parser)]
#[command(name = "koranyi", version, about = "Experiments on Korányi spheres of free two-step nilpotent groups")]
pub struct Cli {
    /// RNG seed for Monte-Carlo rules, random fields and samples.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory for result files and the run manifest.
    #[arg(long, global = true, default_value = "koranyi-out")]
    out: PathBuf,
    /// Format printed on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// `key = value` file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Random-sample check of the group law, dilations, norm and O(v) action.
    #[command(args_override_self = true)]
    GroupSelfcheck(commands::GroupSelfcheckArgs),
    /// Total mass of the sphere measure against ½B(v/4, z/2).
    #[command(args_override_self = true)]
    MuMass(commands::MuMassArgs),
    /// Scan of the square-function functional over a parameter grid.
    #[command(args_override_self = true)]
    ShatScan(commands::ShatScanArgs),
    /// Plancherel self-consistency on N_2 for radial Gaussian profiles.
    #[command(args_override_self = true)]
    Plancherel(commands::PlancherelArgs),
    /// Pointwise maximal estimate on a grid field in N_2.
    #[command(args_override_self = true)]
    MaximalDemo(commands::MaximalDemoArgs),
    /// Sphere plane-wave integrals against reduced Bessel functions.
    #[command(args_override_self = true)]
    BesselIdentity(commands::BesselIdentityArgs),
    /// Band of the normalized |1/Γ(x+iy)| and its Stirling limit.
    #[command(args_override_self = true)]
    GammaEstimate(commands::GammaEstimateArgs),
    /// ⟨μ_s, φ⟩ and its s-derivatives over an s-grid.
    #[command(args_override_self = true)]
    Pairing(commands::PairingArgs),
    /// A^α against the B-combination and its α → 0 limit.
    #[command(args_override_self = true)]
    AnalyticFamily(commands::AnalyticFamilyArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::GroupSelfcheck(_) => "group-selfcheck",
            Command::MuMass(_) => "mu-mass",
            Command::ShatScan(_) => "shat-scan",
            Command::Plancherel(_) => "plancherel",
            Command::MaximalDemo(_) => "maximal-demo",
            Command::BesselIdentity(_) => "bessel-identity",
            Command::GammaEstimate(_) => "gamma-estimate",
            Command::Pairing(_) => "pairing",
            Command::AnalyticFamily(_) => "analytic-family",
        }
    }

    fn parameters(&self) -> serde_json::Value {
        fn ser<T: Args + Serialize>(a: &T) -> serde_json::Value {
            serde_json::to_value(a).expect("plain data")
        }
        match self {
            Command::GroupSelfcheck(a) => ser(a),
            Command::MuMass(a) => ser(a),
            Command::ShatScan(a) => ser(a),
            Command::Plancherel(a) => ser(a),
            Command::MaximalDemo(a) => ser(a),
            Command::BesselIdentity(a) => ser(a),
            Command::GammaEstimate(a) => ser(a),
            Command::Pairing(a) => ser(a),
            Command::AnalyticFamily(a) => ser(a),
        }
    }
}

/// What a command hands back for printing and writing.
pub struct Outcome {
    pub json: serde_json::Value,
    pub csv: String,
    pub passed: bool,
    pub warnings: Vec<String>,
    /// Extra files `(name, bytes)` written to the output directory.
    pub files: Vec<(String, Vec<u8>)>,
}

pub enum Failure {
    Usage(String),
    Check(String),
}

impl From<koranyi::Error> for Failure {
    fn from(e: koranyi::Error) -> Self {
        use koranyi::Error as E;
        match e {
            E::InvalidParameter(_) | E::DimensionMismatch { .. } | E::Unsupported(_) | E::NotOrthogonal(_) => {
                Failure::Usage(e.to_string())
            }
            E::Pole(_) | E::NonFinite(_) | E::Margin(_) | E::Tail(_) => Failure::Check(e.to_string()),
        }
    }
}

#[derive(Debug, Serialize)]
struct RunManifest {
    command: String,
    parameters: BTreeMap<String, serde_json::Value>,
    seed: u64,
    tool_version: String,
    threads_requested: usize,
    threads_used: usize,
    started: String,
    finished: String,
    exit_code: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    outputs: Vec<String>,
}

pub struct Context {
    pub seed: u64,
}

fn threads_requested() -> Result<usize, String> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(1),
        Ok(s) => s.trim().parse::<usize>().ok().filter(|n| *n >= 1).ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got `{s}`")),
    }
}

fn write_outputs(dir: &Path, name: &str, outcome: &Outcome) -> std::io::Result<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    let mut files = vec![
        (format!("{name}.json"), serde_json::to_vec_pretty(&outcome.json).expect("json")),
        (format!("{name}.csv"), outcome.csv.clone().into_bytes()),
    ];
    files.extend(outcome.files.iter().cloned());
    let mut listed = Vec::new();
    for (file, bytes) in files {
        let path = dir.join(&file);
        std::fs::write(&path, bytes)?;
        listed.push(path.display().to_string());
    }
    Ok(listed)
}

fn run() -> u8 {
    let args = match config::expand_args(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let threads = match threads_requested() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let started = chrono::Utc::now().to_rfc3339();
    let ctx = Context { seed: cli.seed };
    let name = cli.command.name();
    let result = match &cli.command {
        Command::GroupSelfcheck(a) => commands::group_selfcheck(a, &ctx),
        Command::MuMass(a) => commands::mu_mass(a, &ctx),
        Command::ShatScan(a) => commands::shat_scan(a, &ctx),
        Command::Plancherel(a) => commands::plancherel(a, &ctx),
        Command::MaximalDemo(a) => commands::maximal_demo(a, &ctx),
        Command::BesselIdentity(a) => commands::bessel_identity(a, &ctx),
        Command::GammaEstimate(a) => commands::gamma_estimate(a, &ctx),
        Command::Pairing(a) => commands::pairing(a, &ctx),
        Command::AnalyticFamily(a) => commands::analytic_family(a, &ctx),
    };
    let (exit_code, outputs, error) = match result {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            let text = match cli.format {
                Format::Json => serde_json::to_string_pretty(&outcome.json).expect("json") + "\n",
                Format::Csv => outcome.csv.clone(),
            };
            // a closed pipe on stdout is not an error of the run
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            match write_outputs(&cli.out, name, &outcome) {
                Ok(list) => {
                    if !outcome.passed {
                        eprintln!("check failed: see {}", cli.out.join(format!("{name}.json")).display());
                    }
                    (if outcome.passed { 0 } else { 1 }, list, None)
                }
                Err(e) => {
                    eprintln!("error: cannot write outputs to {}: {e}", cli.out.display());
                    return 1;
                }
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            (2, Vec::new(), Some(msg))
        }
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            (1, Vec::new(), Some(msg))
        }
    };
    let mut parameters: BTreeMap<String, serde_json::Value> = match cli.command.parameters() {
        serde_json::Value::Object(m) => m.into_iter().collect(),
        _ => BTreeMap::new(),
    };
    parameters.insert("format".into(), serde_json::to_value(cli.format).expect("enum"));
    parameters.insert("out".into(), serde_json::Value::String(cli.out.display().to_string()));
    let manifest_path = cli.out.join(format!("{name}.manifest.json"));
    let mut all_outputs = outputs;
    all_outputs.push(manifest_path.display().to_string());
    let manifest = RunManifest {
        command: name.to_string(),
        parameters,
        seed: cli.seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        threads_requested: threads,
        threads_used: 1,
        started,
        finished: chrono::Utc::now().to_rfc3339(),
        exit_code,
        error,
        outputs: all_outputs,
    };
    let written = std::fs::create_dir_all(&cli.out)
        .and_then(|_| std::fs::write(&manifest_path, serde_json::to_vec_pretty(&manifest).expect("json")));
    if let Err(e) = written {
        eprintln!("error: cannot write manifest: {e}");
        return exit_code.max(1);
    }
    exit_code
}

fn main() -> ExitCode {
    ExitCode::from(run())
}
