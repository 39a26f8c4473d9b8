use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use isr_core::harness::{parse_seed, run_and_write, ExperimentConfig};
use isr_core::Error;
use serde_json::{json, Map, Value};

#[derive(Parser, Debug)]
#[command(name = "isr-lab", version, about = "Protocols under imperfectly shared randomness")]
struct Cli {
    /// JSON experiment configuration; flags given on the command line override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, decimal or 0x-prefixed hex.
    #[arg(long, global = true, value_parser = seed_arg)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Option<Command>,
}

fn seed_arg(s: &str) -> Result<u64, String> {
    parse_seed(s).map_err(|e| e.to_string())
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Proto {
    Gaussian,
    Sparse,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Mode {
    Literal,
    Calibrated,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum BackendArg {
    BlockSums,
    Coordinates,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compression with uncertain priors.
    Compress(CompressArgs),
    /// Syndrome-based agreement distillation.
    Agree(AgreeArgs),
    /// Inner-product gap protocols (Gaussian ISR or sparse PSR).
    Gapip(GapipArgs),
    /// Strategy trees versus their vector representation.
    StrategyCheck(StrategyArgs),
    /// Fourier and influence identities on random bounded functions.
    Influence(InfluenceArgs),
    /// Equality testing through a constant-rate code and the Gaussian protocol.
    Equality(EqualityArgs),
}

#[derive(Args, Debug, Default)]
struct CompressArgs {
    #[arg(long)]
    n: Option<usize>,
    /// Target entropy of the generated prior, in bits.
    #[arg(long)]
    entropy: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Promise gap between the two priors.
    #[arg(long)]
    prior_gap: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    p_file: Option<PathBuf>,
    #[arg(long)]
    q_file: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct AgreeArgs {
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    /// One or more slack values, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    eps: Option<Vec<f64>>,
    /// Draw H uniformly instead of certifying it.
    #[arg(long)]
    random_matrix: bool,
    /// Also report the first-k-bits baseline.
    #[arg(long)]
    baseline: bool,
}

#[derive(Args, Debug, Default)]
struct GapipArgs {
    #[arg(long, value_enum)]
    proto: Option<Proto>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    /// Number of Gaussian vectors (gaussian protocol only).
    #[arg(long)]
    t: Option<usize>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    calibration_samples: Option<u64>,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
    /// Repetitions with a majority vote (gaussian) or counting repetitions (sparse).
    #[arg(long)]
    reps: Option<u64>,
    /// Sparse protocol: run the repeated counting variant.
    #[arg(long)]
    repeated: bool,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    /// Instance file: two lines of 0/1 characters.
    #[arg(long)]
    instance: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct StrategyArgs {
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    deterministic: bool,
}

#[derive(Args, Debug, Default)]
struct InfluenceArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
}

#[derive(Args, Debug, Default)]
struct EqualityArgs {
    #[arg(long)]
    bits: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    calibration_samples: Option<u64>,
}

struct Overlay(Map<String, Value>);

impl Overlay {
    fn set<T: Into<Value>>(&mut self, key: &str, v: Option<T>) {
        if let Some(v) = v {
            self.0.insert(key.to_string(), v.into());
        }
    }

    fn flag(&mut self, key: &str, on: bool) {
        if on {
            self.0.insert(key.to_string(), Value::Bool(true));
        }
    }
}

fn path(p: Option<PathBuf>) -> Option<Value> {
    p.map(|p| Value::String(p.to_string_lossy().into_owned()))
}

fn kebab<T: ValueEnum>(v: Option<T>) -> Option<Value> {
    v.and_then(|v| v.to_possible_value()).map(|p| Value::String(p.get_name().to_string()))
}

/// Kind name plus the experiment fields that the command line sets.
fn command_overlay(cmd: Command, current_kind: Option<&str>) -> (String, Overlay) {
    let mut o = Overlay(Map::new());
    let kind = match cmd {
        Command::Compress(a) => {
            o.set("n", a.n);
            o.set("entropy", a.entropy);
            o.set("rho", a.rho);
            o.set("eps", a.eps);
            o.set("delta", a.delta);
            o.set("prior_gap", a.prior_gap);
            o.set("kappa", a.kappa);
            o.set("p_file", path(a.p_file));
            o.set("q_file", path(a.q_file));
            "compress".to_string()
        }
        Command::Agree(a) => {
            o.set("k", a.k);
            o.set("rho", a.rho);
            o.set("eps", a.eps);
            if a.random_matrix {
                o.set("matrix", Some("random"));
            }
            o.flag("baseline", a.baseline);
            "agree".to_string()
        }
        Command::Gapip(a) => {
            let kind = match (a.proto, current_kind) {
                (Some(Proto::Sparse), _) => "gapip-sparse",
                (Some(Proto::Gaussian), _) => "gapip-gaussian",
                (None, Some(k)) if k.starts_with("gapip") => k,
                (None, _) => "gapip-gaussian",
            }
            .to_string();
            o.set("q", a.q);
            o.set("n", a.n);
            o.set("c", a.c);
            o.set("s", a.s);
            o.set("instance", path(a.instance));
            if kind == "gapip-sparse" {
                o.set("reps", a.reps);
                o.flag("repeated", a.repeated);
                // Gaussian-only flags are accepted but have no meaning here.
                for (name, given) in [
                    ("--rho", a.rho.is_some()),
                    ("--t", a.t.is_some()),
                    ("--mode", a.mode.is_some()),
                    ("--alpha", a.alpha.is_some()),
                    ("--backend", a.backend.is_some()),
                ] {
                    if given {
                        log::warn!("{name} is ignored by the sparse protocol");
                    }
                }
            } else {
                o.set("rho", a.rho);
                o.set("t", a.t);
                o.set("mode", kebab(a.mode));
                o.set("alpha", a.alpha);
                o.set("calibration_samples", a.calibration_samples);
                o.set("backend", kebab(a.backend));
                o.set("reps", a.reps);
                if a.repeated {
                    log::warn!("--repeated is ignored by the gaussian protocol");
                }
            }
            kind
        }
        Command::StrategyCheck(a) => {
            o.set("k", a.k);
            o.set("samples", a.samples);
            o.flag("deterministic", a.deterministic);
            "strategy-check".to_string()
        }
        Command::Influence(a) => {
            o.set("n", a.n);
            o.set("p", a.p);
            o.set("d", a.d);
            o.set("tau", a.tau);
            o.set("eta", a.eta);
            "influence".to_string()
        }
        Command::Equality(a) => {
            o.set("bits", a.bits);
            o.set("rho", a.rho);
            o.set("t", a.t);
            o.set("reps", a.reps);
            o.set("calibration_samples", a.calibration_samples);
            "equality".to_string()
        }
    };
    (kind, o)
}

fn build_config(cli: Cli) -> Result<ExperimentConfig, Error> {
    let mut root = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str::<Value>(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => json!({}),
    };
    let obj = root
        .as_object_mut()
        .ok_or_else(|| Error::Config("configuration must be a JSON object".into()))?;

    if let Some(cmd) = cli.command {
        let current = obj
            .get("experiment")
            .and_then(|e| e.get("kind"))
            .and_then(Value::as_str)
            .map(str::to_string);
        let (kind, overlay) = command_overlay(cmd, current.as_deref());
        let mut exp = match (current.as_deref(), obj.remove("experiment")) {
            (Some(k), Some(Value::Object(m))) if k == kind => m,
            (Some(k), Some(_)) if !(k.starts_with("gapip") && kind.starts_with("gapip")) => {
                return Err(Error::Config(format!("config describes a {k} experiment, command line asks for {kind}")));
            }
            _ => Map::new(),
        };
        exp.insert("kind".into(), Value::String(kind));
        exp.extend(overlay.0);
        obj.insert("experiment".into(), Value::Object(exp));
    } else if !obj.contains_key("experiment") {
        return Err(Error::Config("name an experiment or pass --config".into()));
    }

    if let Some(s) = cli.seed {
        obj.insert("seed".into(), json!(s));
    }
    if let Some(t) = cli.trials {
        obj.insert("trials".into(), json!(t));
    }
    if let Some(o) = path(cli.out) {
        obj.insert("out".into(), o);
    }
    if let Some(j) = cli.jobs {
        obj.insert("jobs".into(), json!(j));
    }
    if let Some(f) = kebab(cli.format) {
        obj.insert("format".into(), f);
    }
    ExperimentConfig::from_value(root)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = build_config(cli).and_then(|config| run_and_write(&config).map(|_| ()));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("isr-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
