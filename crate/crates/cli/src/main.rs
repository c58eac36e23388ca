use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use eventmine::dedup::{calibrate_cutoff, score_candidates, TrainedClassifier};
use eventmine::event::EventRecord;
use eventmine::linkage::{match_pairs_csv, MatchCriteria};
use eventmine::pipeline::{
    configured_stages, evaluate, export_events, link_events, load_events, obtain_model, regress_events, run,
    ArtifactStore, ExportFilters, ExportFormat, LinkageConfig, RegressConfig, RunConfig, RunOptions, Stage,
};
use eventmine::regress::{summary_csv, table_csv};
use eventmine::synth::fixture::{write_fixture, FixtureParams};

/// Builds a violent-event dataset from news articles, stage by stage.
#[derive(Debug, Parser)]
#[command(name = "pipeline", version)]
struct Cli {
    /// Run configuration (JSON).
    #[arg(short, long, global = true, default_value = "run.json")]
    config: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run pipeline stages.
    Run(RunArgs),
    /// Export the final events as CSV or GeoJSON.
    Export(ExportArgs),
    /// Train or calibrate the duplicate classifier.
    #[command(subcommand)]
    Dedup(DedupCommand),
    /// Overlap bounds against a reference event dataset.
    Link(LinkArgs),
    /// Department-year fixed-effects regressions.
    Regress(RegressArgs),
    /// Per-field extraction accuracy against gold labels.
    Evaluate(EvaluateArgs),
    /// Write the synthetic fixture corpus with its inputs and expected counts.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Comma-separated stages, or `all`. Defaults to every configured stage.
    #[arg(long)]
    stages: Option<String>,
    /// Worker threads for parallel stages.
    #[arg(long)]
    parallelism: Option<usize>,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long, default_value = "csv")]
    format: String,
    /// Years, e.g. `2013` or `2010-2012,2019`.
    #[arg(long)]
    years: Option<String>,
    /// Any of farc, eln, auc, epl, guerrilla, government.
    #[arg(long)]
    attackers: Option<String>,
    /// Violence types, e.g. `murder,kidnapping`.
    #[arg(long)]
    types: Option<String>,
    /// Output file; defaults to `<output_dir>/export/events.<format>`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum DedupCommand {
    /// Train from labeled pairs over the geocoded events.
    Train {
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Model file; defaults to `<output_dir>/dedup_model.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Find the cutoff whose duplicate rate is nearest the target.
    Calibrate {
        #[arg(long)]
        target_rate: f64,
        /// Model file; defaults to the configured model or the last dedup run's.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct LinkArgs {
    /// Reference directory with `mapping.json`; defaults to the configured one.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Overlap report; match pairs go next to it as `.matches.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RegressArgs {
    /// Model specs or grid; defaults to the configured specs.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Output directory for the tables.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Gold labels; defaults to the configured ones.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Also write the table as JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 50)]
    articles: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let validation = e
                .chain()
                .find_map(|c| c.downcast_ref::<eventmine::Error>())
                .is_some_and(eventmine::Error::is_validation);
            ExitCode::from(if validation { 2 } else { 1 })
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth(a) => synth(a),
        command => {
            let config = RunConfig::load(&cli.config)?;
            match command {
                Command::Run(a) => run_cmd(&config, a),
                Command::Export(a) => export_cmd(&config, a),
                Command::Dedup(d) => dedup_cmd(config, d),
                Command::Link(a) => link_cmd(config, a),
                Command::Regress(a) => regress_cmd(config, a),
                Command::Evaluate(a) => evaluate_cmd(&config, a),
                Command::Synth(_) => unreachable!(),
            }
        }
    }
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn pretty<T: serde::Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn run_cmd(config: &RunConfig, a: &RunArgs) -> Result<()> {
    let stages = match &a.stages {
        Some(s) => Stage::parse_list(s)?,
        None => configured_stages(config),
    };
    let outcome = run(
        config,
        &stages,
        &RunOptions {
            parallelism: a.parallelism,
        },
    )?;
    let names: Vec<&str> = outcome.stages.iter().map(|s| s.name()).collect();
    println!("ran {} in {}", names.join(", "), config.output_dir.display());
    if let Some(report) = &outcome.report {
        print!("{}", report.render());
    }
    Ok(())
}

fn export_cmd(config: &RunConfig, a: &ExportArgs) -> Result<()> {
    let format: ExportFormat = a.format.parse()?;
    let filters = ExportFilters {
        years: a.years.as_deref().map(ExportFilters::parse_years).transpose()?.unwrap_or_default(),
        attackers: a.attackers.as_deref().map(ExportFilters::parse_attackers).transpose()?.unwrap_or_default(),
        types: a.types.as_deref().map(ExportFilters::parse_types).transpose()?.unwrap_or_default(),
    };
    let store = ArtifactStore::open(&config.output_dir)?;
    let events = load_events(&store)?;
    let ext = match format {
        ExportFormat::Csv => "csv",
        ExportFormat::Geojson => "geojson",
    };
    let out = a
        .out
        .clone()
        .unwrap_or_else(|| config.output_dir.join("export").join(format!("events.{ext}")));
    let note = export_events(&events, format, &filters, &out)?;
    println!("wrote {} of {} events to {}", note.written, events.len(), out.display());
    if note.excluded_without_coordinates > 0 {
        println!("{} matching events had no coordinates", note.excluded_without_coordinates);
    }
    Ok(())
}

fn geocoded_events(config: &RunConfig) -> Result<Vec<EventRecord>> {
    let store = ArtifactStore::open(&config.output_dir)?;
    Ok(store.read_jsonl("geocode", "events")?)
}

fn dedup_cmd(mut config: RunConfig, d: &DedupCommand) -> Result<()> {
    match d {
        DedupCommand::Train { labels, seed, out } => {
            if let Some(l) = labels {
                config.dedup.labels = Some(l.clone());
            }
            if let Some(s) = seed {
                config.dedup.params.seed = *s;
            }
            let Some(labels) = &config.dedup.labels else {
                return Err(eventmine::Error::Config("no labels given and none configured".into()).into());
            };
            if !labels.exists() {
                return Err(eventmine::Error::Config(format!("labels not found: {}", labels.display())).into());
            }
            config.dedup.model = None;
            let events = geocoded_events(&config)?;
            let (model, report, skipped) = obtain_model(&config.dedup, &events)?;
            let out = out.clone().unwrap_or_else(|| config.output_dir.join("dedup_model.json"));
            write_file(&out, model.to_json()?)?;
            if skipped > 0 {
                println!("{skipped} labeled pairs skipped (articles absent from this run)");
            }
            print!("{}", pretty(&report)?);
            println!("model written to {}", out.display());
        }
        DedupCommand::Calibrate { target_rate, model, out } => {
            let events = geocoded_events(&config)?;
            let store = ArtifactStore::open(&config.output_dir)?;
            let model = match model.as_ref().or(config.dedup.model.as_ref()) {
                Some(p) => TrainedClassifier::load(p)?,
                None => serde_json::from_slice(&store.read("dedup", "model")?)?,
            };
            let pairs = score_candidates(&events, &model, &config.dedup.params)?;
            let ids: Vec<String> = events.iter().map(|e| e.id().to_string()).collect();
            let calibration = calibrate_cutoff(&ids, &pairs, *target_rate)?;
            if let Some(w) = &calibration.warning {
                eprintln!("warning: {w}");
            }
            let text = pretty(&calibration)?;
            if let Some(out) = out {
                write_file(out, &text)?;
            }
            print!("{text}");
        }
    }
    Ok(())
}

fn link_cmd(config: RunConfig, a: &LinkArgs) -> Result<()> {
    let mut linkage = config.linkage.clone().unwrap_or_else(|| LinkageConfig {
        reference_dir: PathBuf::new(),
        lower: MatchCriteria::lower(),
        upper: MatchCriteria::upper(),
        party_canon: None,
        crosswalk: None,
    });
    if let Some(r) = &a.reference {
        linkage.reference_dir = r.clone();
    }
    if !linkage.reference_dir.join("mapping.json").exists() {
        return Err(eventmine::Error::Config(format!(
            "no mapping.json in reference directory {:?}",
            linkage.reference_dir
        ))
        .into());
    }
    let store = ArtifactStore::open(&config.output_dir)?;
    let events = load_events(&store)?;
    let (report, load_report) = link_events(&events, &linkage, &config)?;
    let out = a.out.clone().unwrap_or_else(|| config.output_dir.join("overlap.json"));
    write_file(&out, pretty(&report)?)?;
    write_file(&out.with_extension("matches.csv"), match_pairs_csv(&report)?)?;
    println!(
        "reference rows {} (excluded {}), our events {}",
        report.reference_total, load_report.excluded_rows, report.ours_total
    );
    println!(
        "lower bound: {} of ours ({:.1}%), {} of reference ({:.1}%)",
        report.lower.ours_matched,
        report.lower.ours_fraction * 100.0,
        report.lower.reference_matched,
        report.lower.reference_fraction * 100.0
    );
    println!(
        "upper bound: {} of ours ({:.1}%), {} of reference ({:.1}%)",
        report.upper.ours_matched,
        report.upper.ours_fraction * 100.0,
        report.upper.reference_matched,
        report.upper.reference_fraction * 100.0
    );
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

fn file_label(label: &str) -> String {
    let s: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect();
    s.split('_').filter(|p| !p.is_empty()).collect::<Vec<_>>().join("_")
}

fn regress_cmd(config: RunConfig, a: &RegressArgs) -> Result<()> {
    let Some(mut regress) = config.regress.clone() else {
        return Err(eventmine::Error::Config("regress needs a regress section with the eradication data".into()).into());
    };
    if let Some(s) = &a.spec {
        if !s.exists() {
            return Err(eventmine::Error::Config(format!("model specs not found: {}", s.display())).into());
        }
        regress = RegressConfig {
            specs: Some(s.clone()),
            ..regress
        };
    }
    let store = ArtifactStore::open(&config.output_dir)?;
    let events = load_events(&store)?;
    let (summary, without_department) = regress_events(&events, &regress)?;
    let out = a.out.clone().unwrap_or_else(|| config.output_dir.join("tables"));
    write_file(&out.join("summary.csv"), summary_csv(&summary)?)?;
    write_file(&out.join("grid.json"), pretty(&summary)?)?;
    for (i, v) in summary.variants.iter().enumerate() {
        match &v.result {
            Some(r) => write_file(&out.join(format!("{:02}_{}.csv", i + 1, file_label(&v.label))), table_csv(r)?)?,
            None => eprintln!("variant {} failed: {}", v.label, v.error.as_deref().unwrap_or("")),
        }
    }
    if without_department > 0 {
        println!("{without_department} events without a department left out of the panels");
    }
    println!(
        "{} variants, {} failed; tables in {}",
        summary.variants.len(),
        summary.failures(),
        out.display()
    );
    Ok(())
}

fn evaluate_cmd(config: &RunConfig, a: &EvaluateArgs) -> Result<()> {
    let Some(labels) = a.labels.as_ref().or(config.gold.as_ref()) else {
        return Err(eventmine::Error::Config("no gold labels given and none configured".into()).into());
    };
    if !labels.exists() {
        return Err(eventmine::Error::Config(format!("gold labels not found: {}", labels.display())).into());
    }
    let store = ArtifactStore::open(&config.output_dir)?;
    let table = evaluate(&store, labels)?;
    print!("{}", table.render());
    if let Some(out) = &a.out {
        write_file(out, pretty(&table)?)?;
    }
    Ok(())
}

fn synth(a: &SynthArgs) -> Result<()> {
    let exp = write_fixture(
        &a.out,
        &FixtureParams {
            articles: a.articles,
            seed: a.seed,
        },
    )?;
    println!(
        "wrote {} articles to {} ({} expected to survive filtering)",
        exp.total_loaded,
        a.out.display(),
        exp.filtered
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_become_file_names() {
        assert_eq!(file_label("All events ~ lag 3 (log1p)"), "all_events_lag_3_log1p");
    }

    #[test]
    fn cli_shape() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
