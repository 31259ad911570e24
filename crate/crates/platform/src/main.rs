use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use tradeoff_core::analysis::Stratum;
use tradeoff_core::elicitation::PreferenceOutcome;
use tradeoff_core::frontier::{build_frontier, ArmId};
use tradeoff_core::simulator::{
    cost_per_conversion, estimate_endpoints, simulate, to_records, Language, SimulationConfig,
};
use tradeoff_platform::config::{resolve_config_path, StudyConfig, CONFIG_ENV};
use tradeoff_platform::export::{read_export, respondents_from_records, write_export, ExportFormat};
use tradeoff_platform::pipeline::{run_pipeline, PipelineOptions};
use tradeoff_platform::service::{arm_view, export_log, ArmRuntime, SurveyService};
use tradeoff_platform::synth::{population_cell_weights, synthesize, CohortPlan, Mix};

#[derive(Debug, Parser)]
#[command(name = "tradeoff", version, about = "Frontier preference studies: survey service, simulation and analysis")]
struct Cli {
    /// Study configuration file.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Inspect arm frontiers.
    Frontier {
        #[command(subcommand)]
        action: FrontierAction,
    },
    /// Simulate an ad experiment and write its daily log.
    Simulate {
        /// Experiment name in the simulation file.
        #[arg(long, default_value = "high")]
        experiment: String,
        #[arg(long)]
        days: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
        /// Simulation file; defaults to simulation.toml beside the study config.
        #[arg(long)]
        simulation: Option<PathBuf>,
        /// Output JSON lines file; defaults to the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve the survey API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
    },
    /// Export respondents and ballots from the event log.
    Export {
        /// Output directory; defaults to `export` under the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::Jsonl)]
        format: FormatArg,
        /// Include sessions that never finished.
        #[arg(long)]
        include_incomplete: bool,
    },
    /// Fit models and write result tables.
    Analyze {
        /// Outcome to model; repeat for several. Both when absent.
        #[arg(long, value_parser = parse_outcome)]
        outcome: Vec<PreferenceOutcome>,
        /// Resamples per interval; zero skips intervals.
        #[arg(long)]
        bootstrap: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Export directory to read; defaults to `export` under the output directory.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Directory for tables; defaults to the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also compute curves for respondents not preferring efficiency.
        #[arg(long)]
        all_strata: bool,
    },
    /// Drive planted-preference respondents through the survey and append
    /// them to the event log.
    SynthesizeCohort {
        #[arg(long)]
        n: usize,
        /// Type shares, e.g. `0.4-efficiency/0.6-parity`.
        #[arg(long, value_parser = parse_mix)]
        mix: Mix,
        /// Arms dealt in turn.
        #[arg(long, value_delimiter = ',', default_values_t = [ArmId::High, ArmId::Low])]
        arms: Vec<ArmId>,
        #[arg(long, default_value_t = 0.02)]
        tremble: f64,
        /// Republican minus Democrat efficiency share.
        #[arg(long, default_value_t = 0.28)]
        party_gap: f64,
        #[arg(long, default_value_t = 0.0)]
        failure_rate: f64,
        #[arg(long)]
        seed: Option<u64>,
        /// Where to write the planted assignment as JSON.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Write the default population cell weights.
    CellWeights {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum FrontierAction {
    /// Print an arm's options.
    Show {
        #[arg(long)]
        arm: ArmId,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Jsonl,
    Csv,
}

impl From<FormatArg> for ExportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Jsonl => ExportFormat::Jsonl,
            FormatArg::Csv => ExportFormat::Csv,
        }
    }
}

fn parse_outcome(s: &str) -> Result<PreferenceOutcome, String> {
    s.parse()
}

fn parse_mix(s: &str) -> Result<Mix, String> {
    s.parse()
}

fn load_config(explicit: Option<&Path>) -> Result<StudyConfig> {
    let path = resolve_config_path(explicit);
    StudyConfig::load(&path).with_context(|| format!("loading {}", path.display()))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn frontier_show(config: &StudyConfig, arm: ArmId, json: bool) -> Result<()> {
    let Some(arm) = config.arm(arm) else {
        bail!("arm `{arm}` is not configured");
    };
    let view = arm_view(&ArmRuntime::new(arm.clone())?);
    if json {
        return print_json(&view);
    }
    let frontier = build_frontier(arm)?;
    println!("{} ({}), budget {} per day", view.label, view.id, view.daily_budget);
    println!("{:<10}{:>8}{:>10}{:>10}{:>10}{:>10}  ", "option", "lambda", "english", "spanish", "total", "share");
    for (p, card) in frontier.points.iter().zip(&view.options) {
        let mut marks = Vec::new();
        if card.option == view.efficiency_option {
            marks.push("efficiency");
        }
        if card.option == view.parity_option {
            marks.push("parity");
        }
        println!(
            "{:<10}{:>8.1}{:>10.2}{:>10.2}{:>10.2}{:>9.1}%  {}",
            card.label,
            p.spanish_budget_share,
            p.expected.english,
            p.expected.spanish,
            p.total_conversions,
            100.0 * p.spanish_share,
            marks.join(", ")
        );
    }
    println!(
        "trolley: {} Spanish-speaking vs {} English-speaking applicants",
        view.trolley.n_spanish, view.trolley.n_english
    );
    Ok(())
}

#[derive(Serialize)]
struct SimulationSummary {
    experiment: String,
    days: u32,
    seed: u64,
    log: PathBuf,
    full_english: (f64, f64),
    full_spanish: (f64, f64),
    english_cost_per_conversion: f64,
    spanish_cost_per_conversion: f64,
    cost_ratio: f64,
}

fn run_simulate(
    config_path: &Path,
    config: &StudyConfig,
    experiment: &str,
    days: Option<u32>,
    seed: Option<u64>,
    simulation: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<()> {
    let path = simulation.unwrap_or_else(|| {
        config_path.parent().unwrap_or(Path::new("")).join("simulation.toml")
    });
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let mut experiments: std::collections::BTreeMap<String, SimulationConfig> =
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let Some(mut sim) = experiments.remove(experiment) else {
        bail!("no experiment `{experiment}` in {}", path.display());
    };
    if let Some(d) = days {
        sim.days = d;
    }
    sim.seed = seed.unwrap_or(sim.seed);
    let logs = simulate(&sim)?;
    let log_path = out.unwrap_or_else(|| config.output_dir.join(format!("simulation_{experiment}.jsonl")));
    if let Some(dir) = log_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut file = std::io::BufWriter::new(
        std::fs::File::create(&log_path).with_context(|| format!("creating {}", log_path.display()))?,
    );
    for r in to_records(&logs) {
        serde_json::to_writer(&mut file, &r)?;
        file.write_all(b"\n")?;
    }
    file.flush()?;
    let e = estimate_endpoints(&logs, sim.full_daily_budget)?;
    let english = cost_per_conversion(&logs, Language::English)?;
    let spanish = cost_per_conversion(&logs, Language::Spanish)?;
    print_json(&SimulationSummary {
        experiment: experiment.to_string(),
        days: sim.days,
        seed: sim.seed,
        log: log_path,
        full_english: (e.full_english.english, e.full_english.spanish),
        full_spanish: (e.full_spanish.english, e.full_spanish.spanish),
        english_cost_per_conversion: english,
        spanish_cost_per_conversion: spanish,
        cost_ratio: spanish / english,
    })
}

#[tokio::main]
async fn serve(config: StudyConfig, host: IpAddr, port: u16) -> Result<()> {
    let service = tokio::task::spawn_blocking(move || SurveyService::open(config)).await??;
    tradeoff_platform::http::serve(Arc::new(service), SocketAddr::new(host, port)).await?;
    Ok(())
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let config_path = resolve_config_path(cli.config.as_deref());
    if let Command::CellWeights { out } = &cli.command {
        let mut file = std::fs::File::create(out).with_context(|| format!("creating {}", out.display()))?;
        population_cell_weights().write_csv(&mut file)?;
        return Ok(());
    }
    let config = load_config(Some(&config_path))?;
    match cli.command {
        Command::Frontier {
            action: FrontierAction::Show { arm, json },
        } => frontier_show(&config, arm, json),
        Command::Simulate {
            experiment,
            days,
            seed,
            simulation,
            out,
        } => run_simulate(&config_path, &config, &experiment, days, seed, simulation, out),
        Command::Serve { port, host } => serve(config, host, port),
        Command::Export {
            out,
            format,
            include_incomplete,
        } => {
            let dir = out.unwrap_or_else(|| config.output_dir.join("export"));
            let records = export_log(&config, include_incomplete)?;
            print_json(&write_export(&records, &dir, format.into())?)
        }
        Command::Analyze {
            outcome,
            bootstrap,
            seed,
            data,
            out,
            all_strata,
        } => {
            let dir = data.unwrap_or_else(|| config.output_dir.join("export"));
            // Cell weights are checked before the data is read.
            config.cells()?;
            let records = read_export(&dir)?;
            let respondents = respondents_from_records(&records, &config.frontiers())
                .with_context(|| format!("reading respondents from {}", dir.display()))?;
            let mut options = PipelineOptions::from_config(&config);
            if !outcome.is_empty() {
                options.outcomes = outcome;
            }
            if all_strata {
                options.strata.push(Stratum::PrefersOther);
            }
            options.bootstrap = bootstrap.unwrap_or(options.bootstrap);
            options.seed = seed.unwrap_or(options.seed);
            if let Some(out) = out {
                options.output_dir = out;
            }
            let report = run_pipeline(&config, &respondents, &options)?;
            for w in &report.warnings {
                tracing::warn!("{w}");
            }
            for f in &report.files {
                println!("{}", f.display());
            }
            Ok(())
        }
        Command::SynthesizeCohort {
            n,
            mix,
            arms,
            tremble,
            party_gap,
            failure_rate,
            seed,
            summary,
        } => {
            let cells = config.cells()?;
            let mut plan = CohortPlan::new(n, mix, seed.unwrap_or(config.seed));
            plan.arms = arms;
            plan.tremble = tremble;
            plan.party_gap = party_gap;
            plan.failure_rate = failure_rate;
            let service = SurveyService::open(config)?;
            let cohort = synthesize(&service, &plan, &cells)?;
            if let Some(path) = summary {
                let file = std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                serde_json::to_writer_pretty(file, &cohort)?;
            }
            let counts: Vec<String> = cohort
                .counts()
                .iter()
                .map(|((party, kind), n)| format!("{}/{}: {n}", party.as_str(), kind.as_str()))
                .collect();
            println!("{} sessions ({})", cohort.respondents.len(), counts.join(", "));
            Ok(())
        }
        Command::CellWeights { .. } => unreachable!("handled before config load"),
    }
}
