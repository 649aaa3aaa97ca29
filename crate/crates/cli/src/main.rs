use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use xcorpus_core::audio::{load_wav, preprocess, write_wav, PreprocessConfig};
use xcorpus_core::corpus::{majority_vote, parse_manifest, parse_ratings, summarize, Manifest, UtteranceRecord};
use xcorpus_core::learners::ModelFamily;
use xcorpus_core::metrics::{fleiss_kappa, kappa_band};
use xcorpus_core::runner::{
    cache_features, generate_synthetic_corpus, render_tables, run_experiment, EvalReport, ExperimentConfig, Mode,
    RunError, SynthSpec,
};
use xcorpus_core::{Error, Preset};

#[derive(Parser)]
#[command(name = "xcorpus", version, about = "Self- and cross-corpus speech emotion recognition evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Compact,
    Brute,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    #[value(name = "self")]
    SelfCorpus,
    Cross,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Logreg,
    Mlp,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Markdown,
}

#[derive(Subcommand)]
enum Command {
    /// Downmix, trim, resample to 16 kHz and peak-normalize every utterance.
    Preprocess {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Write one feature row per utterance to a CSV file.
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_enum, default_value = "compact")]
        preset: PresetArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a self- or cross-corpus experiment. Flags override the config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        target: Option<String>,
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render UAR tables from report files.
    Report {
        /// Comma-separated report paths.
        #[arg(long = "in", value_delimiter = ',', required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "markdown")]
        format: ReportFormat,
    },
    /// Fleiss' kappa and majority-vote summary of a ratings CSV.
    Kappa {
        #[arg(long)]
        ratings: PathBuf,
    },
    /// Generate synthetic corpora and their manifest.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }.into()
}

fn cmd_preprocess(manifest: &Path, out_dir: &Path) -> Result<String, Error> {
    let m = parse_manifest(manifest)?;
    let cfg = PreprocessConfig::default();
    let mut records = Vec::with_capacity(m.len());
    for r in m.records() {
        let clip = preprocess(&load_wav(&r.path)?, &cfg)?;
        let rel = PathBuf::from(&r.corpus).join(format!("{}.wav", r.utterance_id));
        let dest = out_dir.join(&rel);
        fs::create_dir_all(dest.parent().expect("joined path has a parent")).map_err(io_err(out_dir))?;
        write_wav(&dest, &clip)?;
        records.push(UtteranceRecord { path: rel, ..r.clone() });
    }
    let out = Manifest::new(records)?;
    let path = out_dir.join("manifest.csv");
    out.write_csv(&path)?;
    Ok(format!("preprocessed {} utterances; manifest {}", out.len(), path.display()))
}

fn cmd_extract(manifest: &Path, preset: Preset, out: &Path) -> Result<String, Error> {
    let m = parse_manifest(manifest)?;
    let table = cache_features(&m, preset, out)?;
    Ok(format!("wrote {} rows x {} features to {}", table.rows.len(), table.dimension(), out.display()))
}

fn cmd_run(
    config: &Path,
    mode: Option<ModeArg>,
    target: Option<String>,
    model: Option<ModelArg>,
    seed: Option<u64>,
    out: &Path,
) -> Result<String, Error> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(m) = mode {
        cfg.mode = match m {
            ModeArg::SelfCorpus => Mode::SelfCorpus,
            ModeArg::Cross => Mode::CrossCorpus,
        };
    }
    if target.is_some() {
        cfg.target = target;
    }
    if let Some(m) = model {
        cfg.model = match m {
            ModelArg::Logreg => ModelFamily::Logreg,
            ModelArg::Mlp => ModelFamily::Mlp,
        };
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let report = run_experiment(&cfg)?;
    fs::write(out, report.to_json()?).map_err(io_err(out))?;
    Ok(report.to_string())
}

fn cmd_report(inputs: &[PathBuf]) -> Result<String, Error> {
    let reports = inputs
        .iter()
        .map(|p| EvalReport::from_json(&fs::read_to_string(p).map_err(io_err(p))?).map_err(Error::from))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(render_tables(&reports)?)
}

fn cmd_kappa(ratings: &Path) -> Result<String, Error> {
    let table = parse_ratings(ratings)?;
    let kappa = fleiss_kappa(&table.kappa_input()?)?;
    let votes = majority_vote(&table);
    Ok(format!(
        "items={} raters={} kappa={kappa:.4} band=\"{}\" gold={} unresolved={}",
        table.items(),
        table.raters(),
        kappa_band(kappa),
        votes.gold.len(),
        votes.unresolved.len()
    ))
}

fn cmd_synth(spec: &Path, out_dir: &Path) -> Result<String, Error> {
    let text = fs::read_to_string(spec).map_err(io_err(spec))?;
    let spec = SynthSpec::parse(&text)?;
    let (manifest, path) = generate_synthetic_corpus(&spec, out_dir)?;
    let stats = summarize(&manifest);
    let per: Vec<String> = stats.corpora.iter().map(|c| format!("{}={}", c.corpus, c.samples)).collect();
    Ok(format!("wrote {} utterances ({}) and {}", stats.total, per.join(" "), path.display()))
}

fn execute(cli: Cli) -> Result<String, Error> {
    match cli.command {
        Command::Preprocess { manifest, out_dir } => cmd_preprocess(&manifest, &out_dir),
        Command::Extract { manifest, preset, out } => {
            let preset = match preset {
                PresetArg::Compact => Preset::Compact,
                PresetArg::Brute => Preset::Brute,
            };
            cmd_extract(&manifest, preset, &out)
        }
        Command::Run { config, mode, target, model, seed, out } => cmd_run(&config, mode, target, model, seed, &out),
        Command::Report { inputs, format: ReportFormat::Markdown } => cmd_report(&inputs),
        Command::Kappa { ratings } => cmd_kappa(&ratings),
        Command::Synth { spec, out_dir } => cmd_synth(&spec, &out_dir),
    }
}

/// `error kind=<Kind> message="<text>"` on one line.
fn error_line(kind: &str, message: &str) -> String {
    let flat = message.replace(['\n', '\r'], " ").replace('"', "'");
    format!("error kind={kind} message=\"{flat}\"")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("{}", error_line("Usage", first));
            return ExitCode::from(2);
        }
    };
    match execute(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_line(e.kind(), &e.to_string()));
            ExitCode::FAILURE
        }
    }
}
