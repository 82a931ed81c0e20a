use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use linearizer::cli::{self, InputFormat, ReportFormat};
use linearizer::config::RunConfig;
use linearizer::{Error, Result};

/// Word ordering by joint dependency-tree and sentence prediction.
#[derive(Parser)]
#[command(name = "linearizer", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Settings {
    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one setting, e.g. `--set lm.n_units=64`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Random seed for initialization, shuffling and dropout.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Train the LSTM language model on gold-order sentences.
    TrainLm {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[command(flatten)]
        settings: Settings,
    },
    /// Train the linearizer; with --lm, on language-model features too.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
        /// full or light.
        #[arg(long)]
        variant: Option<String>,
        /// Frozen language model whose states become extra features.
        #[arg(long)]
        lm: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[command(flatten)]
        settings: Settings,
    },
    /// Order the words of every input bag.
    Decode {
        /// Linearizer, combined or language-model file.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Language model for syn+lstm and lstm-only modes.
        #[arg(long)]
        lm: Option<PathBuf>,
        #[arg(long)]
        input: PathBuf,
        /// conll or bags (one whitespace-separated bag per line).
        #[arg(long, default_value = "conll")]
        format: String,
        /// syn, lstm-only, syn+lstm or syn*lstm.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        beam: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Renormalize syn+lstm scores at every step.
        #[arg(long)]
        normalize: bool,
        #[arg(long)]
        threads: Option<usize>,
        /// Write records here instead of standard output.
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[command(flatten)]
        settings: Settings,
    },
    /// Corpus BLEU with length buckets.
    Evaluate {
        /// Treebank or one sentence per line.
        #[arg(long)]
        refs: PathBuf,
        /// Decode output or one sentence per line.
        #[arg(long)]
        hyps: PathBuf,
        /// Print key=value lines instead of a table.
        #[arg(long)]
        kv: bool,
    },
    /// Summarize a model file, or list the nearest actions to one action.
    Inspect {
        #[arg(long)]
        model: PathBuf,
        /// Action name such as Shift-dog, Pos-NN or LArc-det.
        #[arg(long)]
        action: Option<String>,
        #[arg(short, long, default_value_t = 10)]
        k: usize,
    },
    /// Check that every gold tree is rebuilt by its oracle derivation.
    OracleCheck {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "full")]
        variant: String,
    },
}

fn settings(s: &Settings) -> Result<RunConfig> {
    let mut config = RunConfig::default();
    if let Some(path) = &s.config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
        config.apply_text(&text).map_err(|e| e.in_file(path))?;
    }
    for a in &s.set {
        config.set_assignment(a)?;
    }
    if let Some(seed) = s.seed {
        config.set("seed", &seed.to_string())?;
    }
    Ok(config)
}

fn set_opt<T: ToString>(config: &mut RunConfig, key: &str, value: &Option<T>) -> Result<()> {
    match value {
        Some(v) => config.set(key, &v.to_string()),
        None => Ok(()),
    }
}

fn run(command: Command) -> Result<()> {
    let stdout = io::stdout();
    let stderr = io::stderr();
    match command {
        Command::TrainLm {
            corpus,
            output,
            epochs,
            settings: s,
        } => {
            let mut config = settings(&s)?;
            set_opt(&mut config, "lm.epochs", &epochs)?;
            cli::train_lm_cmd(&corpus, &output, &config, &mut stderr.lock())
        }
        Command::Train {
            corpus,
            output,
            variant,
            lm,
            epochs,
            settings: s,
        } => {
            let mut config = settings(&s)?;
            set_opt(&mut config, "variant", &variant)?;
            set_opt(&mut config, "epochs", &epochs)?;
            cli::train_cmd(&corpus, &output, lm.as_deref(), &config, &mut stderr.lock())
        }
        Command::Decode {
            model,
            lm,
            input,
            format,
            mode,
            beam,
            alpha,
            normalize,
            threads,
            output,
            settings: s,
        } => {
            let mut config = settings(&s)?;
            set_opt(&mut config, "mode", &mode)?;
            set_opt(&mut config, "beam", &beam)?;
            set_opt(&mut config, "alpha", &alpha)?;
            set_opt(&mut config, "threads", &threads)?;
            if normalize {
                config.set("normalize", "true")?;
            }
            let format: InputFormat = format.parse()?;
            let mut buffer = Vec::new();
            cli::decode_cmd(
                model.as_deref(),
                lm.as_deref(),
                &input,
                format,
                &config,
                &mut buffer,
                &mut stderr.lock(),
            )?;
            write_output(output.as_deref(), &buffer)
        }
        Command::Evaluate { refs, hyps, kv } => {
            let format = if kv {
                ReportFormat::KeyValue
            } else {
                ReportFormat::Table
            };
            let report = cli::evaluate_cmd(&refs, &hyps, format)?;
            stdout.lock().write_all(report.as_bytes())?;
            Ok(())
        }
        Command::Inspect { model, action, k } => {
            let report = cli::inspect_cmd(&model, action.as_deref(), k)?;
            stdout.lock().write_all(report.as_bytes())?;
            Ok(())
        }
        Command::OracleCheck { corpus, variant } => {
            let report = cli::oracle_check_cmd(&corpus, variant.parse()?, 1)?;
            stdout.lock().write_all(report.as_bytes())?;
            Ok(())
        }
    }
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| Error::from(e).in_file(p)),
        None => Ok(io::stdout().lock().write_all(bytes)?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let summary: Vec<&str> = msg
                .lines()
                .take_while(|l| !l.starts_with("Usage:"))
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .collect();
            let summary = summary.join(" ");
            eprintln!("error[usage]: {}", summary.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.code());
            ExitCode::from(1)
        }
    }
}
