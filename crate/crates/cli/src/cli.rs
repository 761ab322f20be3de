//! Command-line parsing and dispatch.

use std::ffi::OsString;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Arg, ArgAction, ArgMatches, CommandFactory, FromArgMatches, Parser, Subcommand};
use venuerec::synthgen::generate;

use crate::artifacts::{write_atomic, Lock};
use crate::config::{RunConfig, Scope, KEYS};
use crate::error::{CliError, CliResult};
use crate::stages::{QueryInput, Workspace};

/// Publication venue recommendation.
///
/// Every configuration key is also a flag (`--min-df 5`). Values come from
/// the defaults, then `--config FILE`, then flags.
#[derive(Debug, Parser)]
#[command(name = "venuerec", version)]
pub struct Cli {
    /// Configuration file of `key = value` lines
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// More log output (repeatable)
    #[arg(short, long, action = ArgAction::Count, global = true)]
    pub verbose: u8,
    /// Log errors only
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load the corpus, drop small or excluded venues, split by year
    Ingest,
    /// Build the pruned clustering vocabulary
    Prep,
    /// Cluster the training articles
    Cluster,
    /// Build venue profiles for the configured strategies
    Profiles,
    /// Build fielded indexes, or inspect one
    Index {
        #[command(subcommand)]
        action: Option<IndexAction>,
    },
    /// Run every stage the configured evaluation needs
    Train,
    /// Rank venues for one article
    Recommend {
        /// File with one corpus-format record (`-` for standard input)
        #[arg(long, conflicts_with = "text", required_unless_present_any = ["text", "authors"])]
        article: Option<PathBuf>,
        /// Title and abstract text
        #[arg(long)]
        text: Option<String>,
        /// Comma-separated keywords
        #[arg(long, value_delimiter = ',', conflicts_with = "article")]
        keywords: Vec<String>,
        /// Comma-separated author ids
        #[arg(long, value_delimiter = ',', conflicts_with = "article")]
        authors: Vec<String>,
    },
    /// Score the test split and write CSV and text reports
    Evaluate {
        /// Report CSV path [default: <artifacts>/reports/evaluate.csv]
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Write a synthetic corpus with planted venue topics
    Synth {
        /// Corpus output path
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Also write planted `(venue, topic)` labels as TSV
        #[arg(long, value_name = "FILE")]
        planted: Option<PathBuf>,
    },
    /// Print the resolved configuration
    Config,
}

#[derive(Debug, Subcommand)]
pub enum IndexAction {
    /// Print statistics of the index of `--strategy`
    Inspect,
}

fn key_arg(id: &'static str, long: &'static str, help: &'static str) -> Arg {
    Arg::new(id)
        .long(long)
        .value_name("VALUE")
        .help(help)
        .overrides_with(id)
}

pub fn command() -> clap::Command {
    let mut cmd = Cli::command();
    for k in KEYS.iter().filter(|k| k.scope == Scope::Run) {
        cmd = cmd.arg(
            key_arg(k.name, k.name, k.help)
                .global(true)
                .help_heading("Configuration"),
        );
    }
    cmd.mut_subcommand("synth", |mut s| {
        for k in KEYS.iter().filter(|k| k.scope == Scope::Synth) {
            let long = k.name.strip_prefix("synth-").expect("synth keys are prefixed");
            s = s.arg(key_arg(k.name, long, k.help).help_heading("Generator"));
        }
        s
    })
}

/// Defaults, then the config file, then flags; validated.
pub fn resolve(cli: &Cli, matches: &ArgMatches) -> CliResult<RunConfig> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    let mut leaf = matches;
    while let Some((_, sub)) = leaf.subcommand() {
        leaf = sub;
    }
    for k in KEYS {
        if let Ok(Some(v)) = leaf.try_get_one::<String>(k.name) {
            config
                .set(k.name, v)
                .map_err(|e| CliError::usage(format!("--{}: {e}", k.name.trim_start_matches("synth-"))))?;
        }
    }
    config.validate()?;
    Ok(config)
}

fn synth(config: &RunConfig, out: &Path, planted: Option<&Path>) -> CliResult<String> {
    let s = generate(&config.synth)?;
    let mut buf = Vec::new();
    s.corpus.write_jsonl(&mut buf).expect("writing to memory");
    write_atomic(out, &buf)?;
    if let Some(p) = planted {
        let mut tsv = String::from("id\tvenue\ttopic\n");
        for (a, (v, t)) in s.corpus.articles().iter().zip(&s.planted) {
            tsv.push_str(&format!("{}\t{v}\t{t}\n", a.article_id));
        }
        write_atomic(p, tsv.as_bytes())?;
    }
    let mut cfg_path = out.as_os_str().to_os_string();
    cfg_path.push(".config.txt");
    write_atomic(&PathBuf::from(cfg_path), config.to_text(Scope::Synth).as_bytes())?;
    Ok(format!(
        "wrote {} articles ({} venues) to {}\n",
        s.corpus.len(),
        s.corpus.n_venues(),
        out.display()
    ))
}

pub fn dispatch(cli: &Cli, config: RunConfig) -> CliResult<String> {
    match &cli.command {
        Command::Config => return Ok(config.to_text(Scope::Run)),
        Command::Synth { out, planted } => return synth(&config, out, planted.as_deref()),
        Command::Index {
            action: Some(IndexAction::Inspect),
        } => return Workspace::new(config).inspect(),
        _ => {}
    }
    let _lock = Lock::acquire(&config.artifacts)?;
    let mut ws = Workspace::new(config);
    match &cli.command {
        Command::Ingest => ws.ingest(),
        Command::Prep => ws.prep(),
        Command::Cluster => ws.cluster(),
        Command::Profiles => ws.profiles(),
        Command::Index { .. } => ws.index(),
        Command::Train => ws.train(),
        Command::Recommend {
            article,
            text,
            keywords,
            authors,
        } => {
            let query = match article {
                Some(p) => QueryInput::Record(p.clone()),
                None => QueryInput::Parts {
                    text: text.clone().unwrap_or_default(),
                    keywords: keywords.clone(),
                    authors: authors.clone(),
                },
            };
            ws.recommend(&query)
        }
        Command::Evaluate { out } => ws.evaluate(out.as_deref()),
        Command::Config | Command::Synth { .. } => unreachable!("handled above"),
    }
}

fn init_logging(cli: &Cli) {
    let level = if cli.quiet {
        log::LevelFilter::Error
    } else {
        match cli.verbose {
            0 => log::LevelFilter::Info,
            1 => log::LevelFilter::Debug,
            _ => log::LevelFilter::Trace,
        }
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp(None)
        .try_init();
}

/// Runs one invocation and returns its exit status. Results go to standard
/// output; logs and errors to standard error.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return 1;
        }
    };
    init_logging(&cli);
    let result = catch_unwind(AssertUnwindSafe(|| {
        resolve(&cli, &matches).and_then(|c| dispatch(&cli, c))
    }));
    match result {
        Ok(Ok(out)) => {
            print!("{out}");
            0
        }
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
        Err(_) => {
            eprintln!("error: internal failure (see message above)");
            3
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> CliResult<RunConfig> {
        let m = command()
            .try_get_matches_from(args)
            .map_err(|e| CliError::usage(e.to_string()))?;
        let cli = Cli::from_arg_matches(&m).unwrap();
        resolve(&cli, &m)
    }

    #[test]
    fn command_definition_is_consistent() {
        command().debug_assert();
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.conf");
        std::fs::write(&p, "min-df = 3\nmax-df = 0.5\n").unwrap();
        let c = parse(&["venuerec", "--config", p.to_str().unwrap(), "prep", "--min-df", "7"]).unwrap();
        assert_eq!(c.prep.min_df, 7);
        assert_eq!(c.prep.max_df, 0.5);
    }

    #[test]
    fn evaluate_flags_resolve() {
        let c = parse(&[
            "venuerec",
            "evaluate",
            "--strategy",
            "sp",
            "--k",
            "20",
            "--features",
            "cb",
            "--lambda-blend",
            "0.5",
            "--sweep-lambda",
            "0.0:1.0:0.05",
        ])
        .unwrap();
        assert_eq!(c.cluster.k, Some(20));
        assert_eq!(c.lambdas().unwrap().len(), 21);
        assert!(parse(&["venuerec", "evaluate", "--features", "xx"]).is_err());
    }

    #[test]
    fn synth_flags_are_scoped() {
        let c = parse(&["venuerec", "synth", "--out", "x", "--n-venues", "4", "--data-seed", "9"]).unwrap();
        assert_eq!(c.synth.n_venues, 4);
        assert_eq!(c.synth.seed, 9);
        assert!(parse(&["venuerec", "prep", "--n-venues", "4"]).is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(main_with(["venuerec", "bogus"]), 1);
        assert_eq!(main_with(["venuerec", "config", "--max-df", "2"]), 1);
    }
}
