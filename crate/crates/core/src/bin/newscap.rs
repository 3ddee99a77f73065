use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use newscap::pipeline::{evaluate_files, parse_split, Pipeline, PipelineConfig, Stage, StageOutcome};
use newscap::{Error, Result};

/// Entity-aware news image captioning pipeline.
#[derive(Parser, Debug)]
#[command(name = "newscap", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// TOML configuration; defaults to `<workdir>/config.toml` when present.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory holding the stage artifacts.
    #[arg(long, global = true)]
    workdir: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Rebuild even when the stage is up to date or its settings changed.
    #[arg(long, global = true)]
    force: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate the corpus, write normalized samples and the split.
    Ingest {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Same as --workdir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Train, val and test ratios, e.g. 0.8,0.1,0.1.
        #[arg(long)]
        split: Option<String>,
    },
    /// Recognize entities and build template captions and the vocabulary.
    Annotate,
    /// Encode every article into a sentence-embedding matrix.
    Encode,
    /// Train the template-caption decoder.
    Train,
    /// Generate template captions with attention traces.
    Generate,
    /// Fill generated templates with article entities.
    Insert,
    /// Score filled captions, from the workdir or from explicit files.
    Evaluate {
        #[arg(long, requires_all = ["gt", "report"])]
        pred: Option<PathBuf>,
        #[arg(long, requires = "pred")]
        gt: Option<PathBuf>,
        #[arg(long, requires = "pred")]
        report: Option<PathBuf>,
    },
    /// Consolidate evaluated strategies into one table.
    Report,
    /// Run every stage in order.
    Pipeline {
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

fn absolute(p: &Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

fn load_config(global: &GlobalArgs, workdir: Option<&Path>) -> Result<PipelineConfig> {
    let mut cfg = match (&global.config, workdir) {
        (Some(path), _) => PipelineConfig::load(path)?,
        (None, Some(dir)) if dir.join("config.toml").is_file() => PipelineConfig::load(dir.join("config.toml"))?,
        _ => PipelineConfig::default(),
    };
    if let Some(dir) = workdir {
        cfg.paths.workdir = Some(absolute(dir));
    }
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn report_outcome(stage: Stage, outcome: StageOutcome) {
    match outcome {
        StageOutcome::Ran => println!("{stage}: done"),
        StageOutcome::UpToDate => println!("{stage}: up to date"),
    }
}

fn print_summary(pipeline: &Pipeline) -> Result<()> {
    let path = pipeline.workdir().join("report/summary.txt");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    print!("{text}");
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let global = &cli.global;
    let stage = match &cli.command {
        Command::Ingest { .. } => Stage::Ingest,
        Command::Annotate => Stage::Annotate,
        Command::Encode => Stage::Encode,
        Command::Train => Stage::Train,
        Command::Generate => Stage::Generate,
        Command::Insert => Stage::Insert,
        Command::Evaluate {
            pred: Some(pred),
            gt: Some(gt),
            report: Some(report),
        } => {
            let metrics = evaluate_files(pred, gt, report)?;
            print!("{}", metrics.to_table());
            return Ok(());
        }
        Command::Evaluate { .. } => Stage::Evaluate,
        Command::Report => Stage::Report,
        Command::Pipeline { .. } => Stage::Report,
    };

    let workdir = match &cli.command {
        Command::Ingest { out: Some(out), .. } => Some(out.as_path()),
        _ => global.workdir.as_deref(),
    };
    let mut cfg = load_config(global, workdir)?;
    match &cli.command {
        Command::Ingest { input, split, .. } => {
            if let Some(input) = input {
                cfg.paths.corpus = Some(absolute(input));
            }
            if let Some(split) = split {
                cfg.split = parse_split(split)?;
            }
        }
        Command::Pipeline { input: Some(input) } => cfg.paths.corpus = Some(absolute(input)),
        _ => {}
    }

    let pipeline = Pipeline::new(cfg, global.force)?;
    if let Command::Pipeline { .. } = cli.command {
        for (stage, outcome) in pipeline.run_all()? {
            report_outcome(stage, outcome);
        }
        return print_summary(&pipeline);
    }
    report_outcome(stage, pipeline.run(stage)?);
    if stage == Stage::Report {
        print_summary(&pipeline)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
