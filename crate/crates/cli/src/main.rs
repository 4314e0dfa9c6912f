//! `vote-harness`: split, translate, collect, vote, evaluate and report from
//! one config file.
//!
//! Exit status is 0 on success, 1 on any error, 2 on bad usage and 3 when
//! a strict run finished with warnings.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vote_harness::clock::{Clock, FixedClock, SystemClock};
use vote_harness::orchestration::{
    preflight, render_report, run_stages, validate_config, EvalReport, PipelineConfig, PipelineOptions, ReportFormat,
    ReportKind, Verb, MANIFEST_FILE,
};
use vote_harness::SubtaskId;

const EXIT_ERROR: u8 = 1;
const EXIT_STRICT_WARNINGS: u8 = 3;

#[derive(Parser)]
#[command(name = "vote-harness", version, about = "Hard-voting ensemble evaluation harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stratified train/dev/holdout split of the training corpus.
    Split(Common),
    /// Translate the corpora through the cache.
    Translate(Common),
    /// Check the config and every stored input without writing anything.
    Validate(Common),
    /// Collect predictions and run the ensembles.
    Vote(Common),
    /// Collect, vote, score and write reports.
    Evaluate(Common),
    /// The whole pipeline.
    Run(Common),
    /// Print reports already written to the output directory.
    Report(ReportArgs),
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, short)]
    config: PathBuf,
    /// Override the split seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Serve translations from the cache only.
    #[arg(long)]
    offline: bool,
    /// Stamp outputs with 2000-01-01T00:00:00Z instead of the wall clock.
    #[arg(long)]
    fixed_clock: bool,
    /// Exit with status 3 if any warning was raised.
    #[arg(long)]
    strict: bool,
    /// Format of the summary printed to stdout.
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[arg(long, short, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    common: Common,
    /// Only this subtask.
    #[arg(long)]
    subtask: Option<SubtaskId>,
    #[arg(long, value_enum, default_value_t = Which::Ensembles)]
    which: Which,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Table => ReportFormat::Table,
            Format::Json => ReportFormat::Json,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Which {
    Ensembles,
    Models,
    All,
}

fn load(common: &Common) -> Result<PipelineConfig, Vec<String>> {
    let mut config = validate_config(&common.config)?;
    if let Some(seed) = common.seed {
        config.split.seed = seed;
    }
    if let Some(dir) = &common.output_dir {
        config.output_dir = dir.clone();
    }
    if common.offline {
        config.translation.offline = true;
    }
    if common.strict {
        config.strict = true;
    }
    let errors = config.check();
    if errors.is_empty() {
        Ok(config)
    } else {
        Err(errors)
    }
}

fn print_errors(errors: &[String]) {
    eprintln!("error: invalid configuration");
    for e in errors {
        eprintln!("  {e}");
    }
}

fn run_verb(verb: Verb, common: &Common) -> u8 {
    let config = match load(common) {
        Ok(c) => c,
        Err(errors) => {
            print_errors(&errors);
            return EXIT_ERROR;
        }
    };
    let fixed = FixedClock::epoch_2000();
    let clock: &dyn Clock = if common.fixed_clock { &fixed } else { &SystemClock };
    let options = PipelineOptions { clock, translator: None };
    let stages = verb.stages(&config);
    let result = run_stages(&config, &stages, &options);
    let manifest_path = config.output_dir.join(MANIFEST_FILE);
    match result {
        Err(failure) => {
            eprintln!("error: {}", failure.error);
            eprintln!("manifest: {}", manifest_path.display());
            EXIT_ERROR
        }
        Ok(run) => {
            let ensembles: Vec<EvalReport> =
                run.reports.iter().filter(|r| r.kind == ReportKind::Ensemble).cloned().collect();
            let shown = if ensembles.is_empty() { run.reports.clone() } else { ensembles };
            if !shown.is_empty() {
                print!("{}", render_report(&shown, common.format.into()));
            }
            eprintln!("manifest: {}", manifest_path.display());
            if config.strict && !run.manifest.warnings.is_empty() {
                eprintln!("error: {} warning(s) in strict mode", run.manifest.warnings.len());
                EXIT_STRICT_WARNINGS
            } else {
                0
            }
        }
    }
}

fn validate(common: &Common) -> u8 {
    let config = match load(common) {
        Ok(c) => c,
        Err(errors) => {
            print_errors(&errors);
            return EXIT_ERROR;
        }
    };
    let found = preflight(&config);
    for w in &found.warnings {
        eprintln!("warning: {w}");
    }
    if !found.errors.is_empty() {
        print_errors(&found.errors);
        return EXIT_ERROR;
    }
    println!(
        "{}: ok ({} model binding(s), {} run(s), evaluating on {})",
        common.config.display(),
        config.models.len(),
        config.runs.len(),
        config.evaluate_on
    );
    if config.strict && !found.warnings.is_empty() {
        return EXIT_STRICT_WARNINGS;
    }
    0
}

fn read_reports(path: &Path) -> Result<Vec<EvalReport>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn report(args: &ReportArgs) -> u8 {
    let config = match load(&args.common) {
        Ok(c) => c,
        Err(errors) => {
            print_errors(&errors);
            return EXIT_ERROR;
        }
    };
    let names: &[&str] = match args.which {
        Which::Ensembles => &["ensembles"],
        Which::Models => &["models"],
        Which::All => &["models", "ensembles"],
    };
    let mut reports = Vec::new();
    for s in SubtaskId::ALL.into_iter().filter(|s| args.subtask.is_none_or(|only| only == *s)) {
        for name in names {
            let path = config.output_dir.join("reports").join(s.as_str()).join(format!("{name}.json"));
            if !path.exists() {
                continue;
            }
            match read_reports(&path) {
                Ok(r) => reports.extend(r),
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_ERROR;
                }
            }
        }
    }
    if reports.is_empty() {
        eprintln!(
            "error: no JSON reports under {}; run `evaluate` or `run` with the json report format first",
            config.output_dir.join("reports").display()
        );
        return EXIT_ERROR;
    }
    print!("{}", render_report(&reports, args.common.format.into()));
    0
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_target(false)
        .format_timestamp(None)
        .init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Split(c)
        | Command::Translate(c)
        | Command::Validate(c)
        | Command::Vote(c)
        | Command::Evaluate(c)
        | Command::Run(c) => c,
        Command::Report(args) => &args.common,
    };
    init_logging(common.verbose);
    let code = match &cli.command {
        Command::Split(c) => run_verb(Verb::Split, c),
        Command::Translate(c) => run_verb(Verb::Translate, c),
        Command::Validate(c) => validate(c),
        Command::Vote(c) => run_verb(Verb::Vote, c),
        Command::Evaluate(c) => run_verb(Verb::Evaluate, c),
        Command::Run(c) => run_verb(Verb::Run, c),
        Command::Report(args) => report(args),
    };
    ExitCode::from(code)
}
