use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use biharm_core::groups::GroupKind;
use biharm_core::verify::{self, ClaimReport, Overrides, DEFAULT_SEED, SEED_ENV};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Parser)]
#[command(name = "biharm", version, about = "Verify harmonicity claims on matrix Lie groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum Group {
    U,
    Su,
    So,
    Sp,
    Lorentz,
}

impl From<Group> for GroupKind {
    fn from(g: Group) -> Self {
        match g {
            Group::U => GroupKind::U,
            Group::Su => GroupKind::SU,
            Group::So => GroupKind::SO,
            Group::Sp => GroupKind::Sp,
            Group::Lorentz => GroupKind::Lorentz,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the claim catalog.
    List {
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Run claims and report.
    Verify {
        /// Claim id or glob pattern; comma-separated alternatives allowed.
        #[arg(long)]
        claim: Option<String>,
        #[arg(long, value_enum)]
        group: Option<Group>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, env = SEED_ENV)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON file with named suites.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Suite name from the config file.
        #[arg(long, requires = "config")]
        suite: Option<String>,
    },
    /// Report residuals for random quotients of k×k minors (advisory).
    Explore {
        #[arg(long, default_value_t = 3)]
        minors: usize,
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long, env = SEED_ENV)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Config {
    suites: BTreeMap<String, Suite>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Suite {
    claims: String,
    #[serde(default)]
    overrides: Overrides,
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn render(reports: &[ClaimReport], format: Format) -> Result<String> {
    Ok(match format {
        Format::Json => serde_json::to_string_pretty(reports)? + "\n",
        Format::Text => verify::render_text(reports),
    })
}

fn list(format: Format) -> Result<()> {
    let claims = verify::registry();
    let text = match format {
        Format::Json => {
            let rows: Vec<_> = claims
                .iter()
                .map(|c| {
                    serde_json::json!({
                        "claim": c.id,
                        "group": c.domain.label(c.n),
                        "n": c.n,
                        "assertion": c.assertion.to_string(),
                        "samples": c.samples,
                        "tolerance": c.tol,
                        "advisory": c.advisory,
                        "citation": c.citation,
                    })
                })
                .collect();
            serde_json::to_string_pretty(&rows)? + "\n"
        }
        Format::Text => {
            let width = claims.iter().map(|c| c.id.len()).max().unwrap_or(0);
            claims
                .iter()
                .map(|c| {
                    format!(
                        "{:<width$}  {:<9}  {:<18}  {}{}\n",
                        c.id,
                        c.domain.label(c.n),
                        c.assertion.to_string(),
                        c.citation,
                        if c.advisory { " [advisory]" } else { "" }
                    )
                })
                .collect()
        }
    };
    emit(&text, None)
}

#[allow(clippy::too_many_arguments)]
fn run_verify(
    claim: Option<String>,
    group: Option<Group>,
    n: Option<usize>,
    samples: Option<usize>,
    tol: Option<f64>,
    seed: Option<u64>,
    config: Option<PathBuf>,
    suite: Option<String>,
) -> Result<Vec<ClaimReport>> {
    let (mut pattern, mut overrides) = ("*".to_string(), Overrides::default());
    if let Some(path) = config {
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: Config = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let name = match suite {
            Some(s) => s,
            None if cfg.suites.len() == 1 => cfg.suites.keys().next().cloned().unwrap_or_default(),
            None => bail!("{} defines several suites; pick one with --suite", path.display()),
        };
        let Some(s) = cfg.suites.get(&name) else {
            bail!("no suite named {name:?} in {}", path.display());
        };
        pattern = s.claims.clone();
        overrides = s.overrides.clone();
    }
    if let Some(c) = claim {
        pattern = c;
    }
    overrides.group = group.map(GroupKind::from).or(overrides.group);
    overrides.n = n.or(overrides.n);
    overrides.samples = samples.or(overrides.samples);
    overrides.tol = tol.or(overrides.tol);
    overrides.seed = seed.or(overrides.seed);
    let reports = verify::run_suite(&pattern, &overrides, DEFAULT_SEED)?;
    if reports.is_empty() {
        bail!("no claim matches {pattern:?}");
    }
    Ok(reports)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::List { format } => {
            list(format)?;
            Ok(true)
        }
        Command::Verify {
            claim,
            group,
            n,
            samples,
            tol,
            seed,
            format,
            out,
            config,
            suite,
        } => {
            let reports = run_verify(claim, group, n, samples, tol, seed, config, suite)?;
            emit(&render(&reports, format)?, out.as_ref())?;
            Ok(verify::all_passed(&reports))
        }
        Command::Explore {
            minors,
            n,
            samples,
            seed,
            format,
            out,
        } => {
            let seed = verify::claim_seed(seed.unwrap_or(DEFAULT_SEED), "explore");
            let report = verify::explore_minors(minors, n, samples, seed)?;
            let text = match format {
                Format::Json => serde_json::to_string_pretty(&report)? + "\n",
                Format::Text => verify::render_text(std::slice::from_ref(&report)),
            };
            emit(&text, out.as_ref())?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
