use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use amrfoil::backends::{BackendMode, Backends, Endpoint, FixtureTransport, RecordingTransport, Request, Transport};
use amrfoil::bench::{self, EvalReport};
use amrfoil::config::Config;
use amrfoil::penman::{self, ParseOptions};
use amrfoil::pipeline::{self, Dataset, FilterSpec, FoilRecord};
use amrfoil::transforms::{ManipulationType, Transformer};
use amrfoil::wordnet::{load_database, WordnetDb};
use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use crate::{
    BackendArgs, Cli, Command, CompareArgs, DatasetArg, EvaluateArgs, FilterPreset, InduceArgs, ParseArgs,
    PlotDataArgs, RecordArgs, StatsArgs, TransformArgs,
};

pub fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Parse(args) => parse(args),
        Command::Transform(args) => transform(&config, args),
        Command::Induce(args) => induce(&config, args),
        Command::Evaluate(args) => evaluate(&config, args),
        Command::Stats(args) => stats(args),
        Command::PlotData(args) => plot_data(args),
        Command::CompareRankings(args) => compare_rankings(args),
        Command::RecordFixtures(args) => record_fixtures(&config, args),
    }
}

fn read_input(path: Option<&Path>) -> Result<String> {
    match path {
        Some(path) => fs::read_to_string(path).with_context(|| format!("reading {}", path.display())),
        None => {
            let mut text = String::new();
            std::io::stdin().read_to_string(&mut text).context("reading stdin")?;
            Ok(text)
        }
    }
}

fn parse(args: ParseArgs) -> Result<()> {
    let text = read_input(args.input.as_deref())?;
    let source = args.input.as_ref().map_or("<stdin>".to_string(), |p| p.display().to_string());
    let graphs = penman::parse_corpus(&text, &ParseOptions { strip_wiki: args.strip_wiki })
        .with_context(|| format!("{source}"))?;
    let mut out = std::io::stdout().lock();
    for (i, graph) in graphs.iter().enumerate() {
        if i > 0 {
            writeln!(out)?;
        }
        if args.triples {
            for triple in graph.to_triples() {
                writeln!(out, "{triple}")?;
            }
        } else {
            writeln!(out, "{}", penman::serialize(graph))?;
        }
    }
    Ok(())
}

fn load_wordnet(
    config: &Config,
    flag: Option<&PathBuf>,
    allowed: &BTreeSet<ManipulationType>,
) -> Result<Option<WordnetDb>> {
    let Some(dir) = flag.cloned().or_else(|| config.wordnet_dir()) else {
        if allowed.iter().any(|k| k.needs_wordnet()) {
            tracing::warn!("no WordNet directory configured; AR and HS are unavailable");
        }
        return Ok(None);
    };
    let db = load_database(&dir).with_context(|| format!("loading WordNet from {}", dir.display()))?;
    Ok(Some(db))
}

fn connect(config: &Config, args: &BackendArgs) -> Result<Backends> {
    let mut backend = config.backend.clone();
    if let Some(url) = &args.backend_url {
        backend.mode = BackendMode::Http;
        backend.base_url = Some(url.clone());
    }
    if let Some(path) = &args.fixtures {
        backend.mode = BackendMode::Fixture;
        backend.fixtures = Some(path.clone());
    }
    if let Some(dir) = &args.cache_dir {
        backend.cache_dir = Some(dir.clone());
    }
    let mut transport = backend.transport()?;
    if let Some(path) = &args.record {
        transport = Arc::new(RecordingTransport::new(transport, path)?);
    }
    Ok(backend.backends_over(transport))
}

fn kinds(flag: &[ManipulationType], default: &BTreeSet<ManipulationType>) -> BTreeSet<ManipulationType> {
    if flag.is_empty() {
        default.clone()
    } else {
        flag.iter().copied().collect()
    }
}

fn transform(config: &Config, args: TransformArgs) -> Result<()> {
    let allowed = kinds(&args.manip, &ManipulationType::ALL.into_iter().collect());
    let wordnet = load_wordnet(config, args.wordnet.as_ref(), &allowed)?;
    let transformer = Transformer::new(&config.transform, wordnet.as_ref());
    let seed = args.seed.unwrap_or(config.seed);
    let output = if let Some(path) = &args.graph {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let graph = penman::parse_corpus(&text, &ParseOptions::default())
            .with_context(|| path.display().to_string())?
            .into_iter()
            .next()
            .context("no graph in input")?;
        let (result, manipulation) = transformer.apply_random(&graph, seed, &allowed)?;
        json!({ "graph": penman::serialize(&result), "manipulation": manipulation })
    } else {
        let sentence = args.sentence.as_deref().expect("clap requires --sentence or --graph");
        let backends = connect(config, &args.backend)?;
        let foil = pipeline::transform_sentence(sentence, &backends, &transformer, seed, &allowed)
            .map_err(|(reason, message)| anyhow::anyhow!("{reason}: {message}"))?;
        json!({
            "source": sentence,
            "foil": foil.text,
            "manipulation": foil.manipulation,
            "source_graph": foil.source_graph,
            "foil_graph": foil.foil_graph,
        })
    };
    println!("{}", serde_json::to_string_pretty(&output)?);
    Ok(())
}

fn dataset(arg: DatasetArg) -> Dataset {
    match arg {
        DatasetArg::Paws => Dataset::Paws,
        DatasetArg::Gptp => Dataset::Gptp,
        DatasetArg::Custom => Dataset::Custom,
    }
}

fn write_jsonl<T: serde::Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut text = String::new();
    for item in items {
        text.push_str(&serde_json::to_string(item)?);
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn induce(config: &Config, args: InduceArgs) -> Result<()> {
    let mut induce = config.induce_config()?;
    if let Some(seed) = args.seed {
        induce.seed = seed;
    }
    if let Some(filter) = args.filter {
        induce.filter = match filter {
            FilterPreset::Main => FilterSpec::main(),
            FilterPreset::NeutralAblation => FilterSpec::neutral_ablation(),
        };
    }
    induce.allowed = kinds(&args.allowed, &induce.allowed);
    if let Some(workers) = args.workers {
        induce.workers = workers;
    }
    let pairs = pipeline::read_pairs(&args.pairs, dataset(args.dataset))?;
    let wordnet = load_wordnet(config, args.wordnet.as_ref(), &induce.allowed)?;
    let backends = connect(config, &args.backend)?;
    let outcome = pipeline::induce_dataset(&pairs, &induce, &backends, wordnet.as_ref())?;

    write_jsonl(&args.out, &outcome.records)?;
    if let Some(path) = &args.failures {
        write_jsonl(path, &outcome.failures)?;
    }
    let mut reasons: BTreeMap<String, usize> = BTreeMap::new();
    for failure in &outcome.failures {
        *reasons.entry(failure.reason.to_string()).or_default() += 1;
    }
    eprintln!(
        "{} pairs, {} foils, {} retained by `{}`, {} failures {:?}",
        pairs.len(),
        outcome.records.len(),
        outcome.retained().count(),
        induce.filter.name,
        outcome.failures.len(),
        reasons
    );
    Ok(())
}

fn read_all_records(paths: &[PathBuf]) -> Result<Vec<FoilRecord>> {
    let mut records = Vec::new();
    for path in paths {
        records.extend(pipeline::read_records(path)?);
    }
    Ok(records)
}

fn by_dataset(records: Vec<FoilRecord>) -> BTreeMap<Dataset, Vec<FoilRecord>> {
    let mut grouped: BTreeMap<Dataset, Vec<FoilRecord>> = BTreeMap::new();
    for record in records {
        grouped.entry(record.dataset).or_default().push(record);
    }
    grouped
}

fn file_stem(model: &str) -> String {
    model.chars().map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' }).collect()
}

fn evaluate(config: &Config, args: EvaluateArgs) -> Result<()> {
    let grouped = by_dataset(read_all_records(&args.records)?);
    let backends = connect(config, &args.backend)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut reports = Vec::new();
    for model in &args.models {
        for (dataset, records) in &grouped {
            let name = dataset.to_string();
            let report = bench::evaluate_model(records, &backends, model, &name)
                .with_context(|| format!("evaluating {model} on {name}"))?;
            let path = args.out.join(format!("{}.{}.json", file_stem(model), name));
            fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")?;
            eprintln!("{model} {name}: tacc {:.4} auc {:.4} hmean {:.4}", report.tacc, report.auc, report.hmean);
            reports.push(report);
        }
    }
    fs::write(args.out.join("metrics.csv"), bench::metrics_csv(&reports))?;
    fs::write(args.out.join("per_type.csv"), bench::per_type_csv(&reports))?;

    let table = bench::cross_dataset_table(&reports, config.cross_dataset_mean);
    let datasets: Vec<String> = grouped.keys().map(Dataset::to_string).collect();
    let mut summary = format!("model,{},AVG\n", datasets.join(","));
    for (model, scores, avg) in table {
        let cells: Vec<String> =
            datasets.iter().map(|d| scores.get(d).map(|v| format!("{v:.4}")).unwrap_or_default()).collect();
        summary.push_str(&format!("{model},{},{avg:.4}\n", cells.join(",")));
    }
    fs::write(args.out.join("summary.csv"), summary)?;
    Ok(())
}

fn stats(args: StatsArgs) -> Result<()> {
    let grouped = by_dataset(read_all_records(&args.records)?);
    let rows: Vec<(String, pipeline::StatsReport)> =
        grouped.iter().map(|(d, records)| (d.to_string(), pipeline::dataset_stats(records))).collect();
    if args.json {
        let map: BTreeMap<&str, &pipeline::StatsReport> = rows.iter().map(|(n, r)| (n.as_str(), r)).collect();
        println!("{}", serde_json::to_string_pretty(&map)?);
    } else {
        print!("{}", pipeline::render_stats_table(&rows));
    }
    Ok(())
}

fn report_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for path in paths {
        if path.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(path)?
                .map(|e| e.map(|e| e.path()))
                .collect::<Result<_, _>>()?;
            found.retain(|p| p.extension().is_some_and(|e| e == "json"));
            found.sort();
            files.extend(found);
        } else {
            files.push(path.clone());
        }
    }
    if files.is_empty() {
        bail!("no report files found");
    }
    Ok(files)
}

fn plot_data(args: PlotDataArgs) -> Result<()> {
    let mut reports: Vec<EvalReport> = Vec::new();
    for path in report_files(&args.reports)? {
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        reports.push(serde_json::from_str(&text).with_context(|| format!("{}: not a report", path.display()))?);
    }
    let csv = bench::plot_data_csv(&reports);
    match &args.out {
        Some(path) => fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn compare_rankings(args: CompareArgs) -> Result<()> {
    let a = bench::read_ranking_csv(&args.a)?;
    let b = bench::read_ranking_csv(&args.b)?;
    let (rho, n) = bench::compare_rankings(&a, &b)?;
    println!("spearman {rho:.4} over {n} models");
    Ok(())
}

fn record_fixtures(config: &Config, args: RecordArgs) -> Result<()> {
    let mut backend = config.backend.clone();
    if let Some(url) = args.backend_url {
        backend.base_url = Some(url);
    }
    let live = backend.http_transport()?;
    let recorder = RecordingTransport::new(live, &args.out)?;
    let text = fs::read_to_string(&args.requests).with_context(|| format!("reading {}", args.requests.display()))?;
    let mut count = 0;
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Value = serde_json::from_str(line).with_context(|| format!("line {}", n + 1))?;
        let endpoint: Endpoint = serde_json::from_value(row["endpoint"].clone())
            .with_context(|| format!("line {}: bad endpoint", n + 1))?;
        let requests = Request::from_body(endpoint, &row["request"])?;
        recorder.send(&requests)?;
        count += requests.len();
    }
    // Reload to check the file replays.
    let replay = FixtureTransport::load(&args.out)?;
    eprintln!("recorded {count} requests; fixture holds {} entries", replay.len());
    Ok(())
}
