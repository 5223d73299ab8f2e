mod config;

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dbroute::corpus::{
    build_route_split, dataset_stats, load_questions, merge_evidence, SplitManifest,
};
use dbroute::eval::{
    constrained_kmeans, intra_cluster_confusion, EvalReport, KMeansOptions, ReportFormat,
};
use dbroute::pipeline::run_metadata_ablation;
use dbroute::reasoner::PromptSet;
use dbroute::retrieval::{build_index, RepositoryIndex};
use dbroute::schema::{
    apply_table_metadata_csv, load_catalog, parse_ddl, validate_repository, CatalogRecord,
};
use dbroute::{write_atomic, DatabaseSchema, QuerySample, Router, RoutingDataset};
use serde::Serialize;

use config::{parse_mode, FileConfig, Overrides, Paths, Settings};

#[derive(Parser)]
#[command(
    name = "dbroute",
    version,
    about = "Route natural-language questions to the right database"
)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for batch work.
    #[arg(long, global = true)]
    parallelism: Option<usize>,
    /// Serve reasoner answers only from this transcript.
    #[arg(long, global = true, conflicts_with = "record")]
    replay: Option<PathBuf>,
    /// Append live reasoner answers to this transcript.
    #[arg(long, global = true)]
    record: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate schemas and write a repository file.
    Ingest(IngestArgs),
    /// Split questions 50/50 per database.
    Split(SplitArgs),
    /// Embed every schema document.
    Index(IndexArgs),
    /// Rank the repository for one question.
    Route(RouteArgs),
    /// Route a question set and report Recall@k and mAP.
    Evaluate(EvaluateArgs),
    /// Cluster schema embeddings and measure same-cluster confusion.
    AnalyzeClusters(ClusterArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Spider-style tables.json.
    #[arg(long, conflicts_with = "ddl")]
    catalog: Option<PathBuf>,
    /// DDL scripts; the file stem is the database id.
    #[arg(long, num_args = 1..)]
    ddl: Vec<PathBuf>,
    /// Directory with `<db_id>/database_description/<table>.csv` files.
    #[arg(long)]
    metadata_dir: Option<PathBuf>,
    /// Question file whose evidence sentences are attached per database.
    #[arg(long)]
    evidence: Option<PathBuf>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    questions: Option<PathBuf>,
    #[arg(long)]
    repository: Option<PathBuf>,
    /// Databases whose train questions are withheld.
    #[arg(long, value_delimiter = ',')]
    cross_domain: Vec<String>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IndexArgs {
    #[arg(long)]
    repository: Option<PathBuf>,
    #[arg(long)]
    no_metadata: bool,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct RoutingArgs {
    #[arg(long)]
    repository: Option<PathBuf>,
    #[arg(long)]
    index: Option<PathBuf>,
    /// retrieval, direct-rerank or modular-rerank.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<dbroute::Mode>,
    #[arg(long)]
    k: Option<usize>,
    /// Coverage penalty exponent.
    #[arg(long)]
    n: Option<f64>,
    #[arg(long)]
    no_metadata: bool,
}

#[derive(Args)]
struct RouteArgs {
    question: String,
    #[command(flatten)]
    routing: RoutingArgs,
    /// Print the full scoring JSON.
    #[arg(long)]
    explain: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    routing: RoutingArgs,
    #[arg(long)]
    questions: Option<PathBuf>,
    /// Split manifest; its test questions are evaluated.
    #[arg(long)]
    split: Option<PathBuf>,
    #[arg(long)]
    oracle_injection: bool,
    /// Also run without metadata and report the difference.
    #[arg(long)]
    ablate_metadata: bool,
    #[arg(long, value_parser = parse_format, default_value = "json")]
    format: ReportFormat,
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Write every routed ranking with score details here.
    #[arg(long)]
    explain_out: Option<PathBuf>,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    clusters: usize,
    #[arg(long)]
    min_size: usize,
    #[arg(long)]
    max_size: usize,
    /// Evaluation report (JSON) to compute confusion statistics from.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn parse_format(s: &str) -> Result<ReportFormat> {
    match s {
        "json" => Ok(ReportFormat::Json),
        "csv" => Ok(ReportFormat::Csv),
        other => bail!("unknown format `{other}` (expected json or csv)"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn settings(cli: &Cli, flags: Overrides) -> Result<Settings> {
    let file = cli.config.as_deref().map(FileConfig::load).transpose()?;
    let mut s = Settings::resolve(FileConfig::from_env()?, file, flags)?;
    s.replay = cli.replay.clone();
    s.record = cli.record.clone();
    Ok(s)
}

fn global_flags(cli: &Cli) -> Overrides {
    Overrides {
        seed: cli.seed,
        parallelism: cli.parallelism,
        ..Overrides::default()
    }
}

fn routing_flags(cli: &Cli, r: &RoutingArgs) -> Overrides {
    Overrides {
        mode: r.mode,
        k: r.k,
        n: r.n,
        include_metadata: r.no_metadata.then_some(false),
        paths: Paths {
            repository: r.repository.clone(),
            index: r.index.clone(),
            ..Paths::default()
        },
        ..global_flags(cli)
    }
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest(a) => ingest(&settings(&cli, global_flags(&cli))?, a),
        Command::Split(a) => {
            let flags = Overrides {
                paths: Paths {
                    questions: a.questions.clone(),
                    repository: a.repository.clone(),
                    ..Paths::default()
                },
                ..global_flags(&cli)
            };
            split(&settings(&cli, flags)?, a)
        }
        Command::Index(a) => {
            let flags = Overrides {
                include_metadata: a.no_metadata.then_some(false),
                paths: Paths {
                    repository: a.repository.clone(),
                    ..Paths::default()
                },
                ..global_flags(&cli)
            };
            index(&settings(&cli, flags)?, a)
        }
        Command::Route(a) => route(&settings(&cli, routing_flags(&cli, &a.routing))?, a),
        Command::Evaluate(a) => {
            let mut flags = routing_flags(&cli, &a.routing);
            flags.paths.questions = a.questions.clone();
            flags.paths.split = a.split.clone();
            flags.oracle_injection = a.oracle_injection.then_some(true);
            evaluate(&settings(&cli, flags)?, a)
        }
        Command::AnalyzeClusters(a) => {
            let flags = Overrides {
                paths: Paths {
                    index: a.index.clone(),
                    ..Paths::default()
                },
                ..global_flags(&cli)
            };
            analyze_clusters(&settings(&cli, flags)?, a)
        }
    }
}

fn require<'a>(path: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    let p = path
        .as_deref()
        .ok_or_else(|| anyhow!("no {what} path given (flag or config file)"))?;
    if !p.exists() {
        bail!("{what} file {} does not exist", p.display());
    }
    Ok(p)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes()).with_context(|| format!("writing {}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(BufReader::new(f))
        .with_context(|| format!("parsing {}", path.display()))
}

fn load_repository(path: &Path) -> Result<Vec<DatabaseSchema>> {
    let repo: Vec<DatabaseSchema> = read_json(path)?;
    for s in &repo {
        s.validate()?;
    }
    validate_repository(&repo)?;
    Ok(repo)
}

fn load_question_file(path: &Path) -> Result<Vec<QuerySample>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(load_questions(BufReader::new(f), "q")?)
}

fn thread_pool(settings: &Settings) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = settings.parallelism {
        b = b.num_threads(n);
    }
    Ok(b.build()?)
}

fn ingest(settings: &Settings, a: &IngestArgs) -> Result<()> {
    let mut schemas = Vec::new();
    let mut failures = Vec::new();
    if let Some(catalog) = &a.catalog {
        let records: Vec<CatalogRecord> = read_json(catalog)?;
        for r in &records {
            match load_catalog(r) {
                Ok(s) => schemas.push(s),
                Err(e) => failures.push(format!("{}: {e}", r.db_id)),
            }
        }
    }
    for path in &a.ddl {
        let db_id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| anyhow!("cannot take a database id from {}", path.display()))?;
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        match parse_ddl(db_id, &text) {
            Ok(s) => schemas.push(s),
            Err(e) => failures.push(format!("{db_id}: {e}")),
        }
    }
    if a.catalog.is_none() && a.ddl.is_empty() {
        bail!("give --catalog or --ddl");
    }
    if let Some(dir) = &a.metadata_dir {
        for s in &mut schemas {
            let desc = dir.join(&s.db_id).join("database_description");
            let Ok(entries) = std::fs::read_dir(&desc) else {
                continue;
            };
            let mut files: Vec<PathBuf> =
                entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
            files.sort();
            for f in files
                .iter()
                .filter(|f| f.extension().is_some_and(|x| x == "csv"))
            {
                let table = f
                    .file_stem()
                    .and_then(|t| t.to_str())
                    .unwrap_or_default()
                    .to_string();
                let file = File::open(f).with_context(|| format!("opening {}", f.display()))?;
                if let Err(e) = apply_table_metadata_csv(s, &table, file) {
                    failures.push(format!("{}: {}: {e}", s.db_id, f.display()));
                }
            }
        }
    }
    if let Some(q) = &a.evidence {
        let evidence = merge_evidence(&load_question_file(q)?);
        for s in &mut schemas {
            if let Some(e) = evidence.get(&s.db_id).filter(|e| !e.is_empty()) {
                s.metadata = Some(e.clone());
            }
        }
    }
    if let Err(e) = validate_repository(&schemas) {
        failures.push(e.to_string());
    }
    if !failures.is_empty() {
        for f in &failures {
            eprintln!("invalid: {f}");
        }
        bail!("{} database(s) failed validation", failures.len());
    }
    schemas.sort_by(|x, y| x.db_id.cmp(&y.db_id));
    let out = a
        .out
        .clone()
        .or_else(|| settings.paths.repository.clone())
        .unwrap_or_else(|| PathBuf::from("repository.json"));
    write_json(&out, &schemas)?;
    for s in &schemas {
        let fks: usize = s.tables.iter().map(|t| t.foreign_keys.len()).sum();
        println!(
            "{}: {} tables, {} columns, {fks} foreign keys",
            s.db_id,
            s.tables.len(),
            s.column_count()
        );
    }
    println!(
        "{} databases ingested into {}",
        schemas.len(),
        out.display()
    );
    Ok(())
}

fn split(settings: &Settings, a: &SplitArgs) -> Result<()> {
    let questions = load_question_file(require(&settings.paths.questions, "questions")?)?;
    let repository = match &settings.paths.repository {
        Some(p) => load_repository(p)?,
        None => Vec::new(),
    };
    if !repository.is_empty() {
        let ids: BTreeSet<&str> = repository.iter().map(|s| s.db_id.as_str()).collect();
        if let Some(q) = questions
            .iter()
            .find(|q| !ids.contains(q.gold_db_id.as_str()))
        {
            bail!(
                "question {} names unknown database `{}`",
                q.query_id,
                q.gold_db_id
            );
        }
    }
    let (train, test) = build_route_split(&questions, settings.seed)?;
    let mut manifest = SplitManifest::new(settings.seed, &train, &test);
    let held_out: BTreeSet<String> = a.cross_domain.iter().cloned().collect();
    let (mut train, test) = (train, test);
    if !held_out.is_empty() {
        let known: BTreeSet<&str> = questions.iter().map(|q| q.gold_db_id.as_str()).collect();
        if let Some(d) = held_out.iter().find(|d| !known.contains(d.as_str())) {
            bail!("unknown cross-domain database `{d}`");
        }
        train.retain(|q| !held_out.contains(&q.gold_db_id));
        manifest.train = train.iter().map(|q| q.query_id.clone()).collect();
        manifest.cross_domain_db_ids = Some(held_out);
    }
    let out = a
        .out
        .clone()
        .or_else(|| settings.paths.split.clone())
        .unwrap_or_else(|| PathBuf::from("split.json"));
    write_json(&out, &manifest)?;
    let dataset = RoutingDataset {
        repository,
        train,
        test,
        cross_domain_db_ids: manifest.cross_domain_db_ids.clone(),
    };
    let stats = dataset_stats(&dataset);
    println!("databases\ttrain\ttest\ttotal");
    println!(
        "{}\t{}\t{}\t{}",
        stats.per_db.len(),
        stats.train_questions,
        stats.test_questions,
        stats.total_questions
    );
    println!("manifest written to {}", out.display());
    Ok(())
}

fn index(settings: &Settings, a: &IndexArgs) -> Result<()> {
    let repo = load_repository(require(&settings.paths.repository, "repository")?)?;
    let embedder = settings.embedder()?;
    let index = build_index(&repo, embedder.as_ref(), settings.router.index)?;
    let out = a
        .out
        .clone()
        .or_else(|| settings.paths.index.clone())
        .unwrap_or_else(|| PathBuf::from("index.json"));
    index.save(&out)?;
    println!(
        "indexed {} databases with {} (dimension {}) into {}",
        index.len(),
        index.model_id,
        index.dimension,
        out.display()
    );
    Ok(())
}

fn router(settings: &Settings) -> Result<Router> {
    let repo = load_repository(require(&settings.paths.repository, "repository")?)?;
    let embedder = settings.embedder()?;
    let reasoner = if settings.router.mode.needs_reasoner() {
        Some(settings.reasoner()?)
    } else {
        None
    };
    let mut config = settings.router.clone();
    let router = match &settings.paths.index {
        Some(p) => {
            let index = RepositoryIndex::load(require(&Some(p.clone()), "index")?)?;
            if index.options != config.index {
                log::warn!("using the document options stored in {}", p.display());
                config.index = index.options;
            }
            Router::with_index(repo, index, embedder, reasoner, config)?
        }
        None => Router::new(repo, embedder, reasoner, config)?,
    };
    Ok(match &settings.paths.prompts {
        Some(dir) => router.with_prompts(PromptSet::load_dir(dir)?),
        None => router,
    })
}

fn route(settings: &Settings, a: &RouteArgs) -> Result<()> {
    let router = router(settings)?;
    let query = QuerySample::new("cli", a.question.clone(), "");
    let outcome = thread_pool(settings)?.install(|| router.route(&query))?;
    if a.explain {
        println!("{}", serde_json::to_string_pretty(&outcome)?);
        return Ok(());
    }
    for (i, item) in outcome.output.items.iter().enumerate() {
        match &item.details {
            Some(d) => println!(
                "{}\t{}\ttotal={:.6}\tcoverage={:.6}\tconnectivity={}\tsemantic={:.6}{}",
                i + 1,
                item.db_id,
                d.total,
                d.coverage,
                d.connectivity,
                d.semantic,
                d.error
                    .as_deref()
                    .map(|e| format!("\terror={e}"))
                    .unwrap_or_default()
            ),
            None => println!("{}\t{}\t{:.6}", i + 1, item.db_id, item.score),
        }
    }
    Ok(())
}

fn evaluation_queries(settings: &Settings) -> Result<Vec<QuerySample>> {
    let questions = load_question_file(require(&settings.paths.questions, "questions")?)?;
    let queries = match &settings.paths.split {
        Some(p) => {
            let manifest: SplitManifest = read_json(require(&Some(p.clone()), "split")?)?;
            manifest.apply(&questions)?.1
        }
        None => questions,
    };
    if queries.is_empty() {
        bail!("the question set to evaluate is empty");
    }
    Ok(queries)
}

fn print_aggregates(label: &str, r: &EvalReport) {
    let a = &r.aggregates;
    println!(
        "{label}\tqueries={}\tR@1={:.4}\tR@2={:.4}\tR@3={:.4}\tR@5={:.4}\tmAP={:.4}\tmAP_ext={:.4}\tcandidate_misses={}",
        a.queries, a.recall_at_1, a.recall_at_2, a.recall_at_3, a.recall_at_5, a.map, a.map_extended, a.candidate_misses
    );
}

fn evaluate(settings: &Settings, a: &EvaluateArgs) -> Result<()> {
    let queries = evaluation_queries(settings)?;
    let pool = thread_pool(settings)?;
    let out = a.out.clone();
    if a.ablate_metadata {
        let repo = load_repository(require(&settings.paths.repository, "repository")?)?;
        let reasoner = if settings.router.mode.needs_reasoner() {
            Some(settings.reasoner()?)
        } else {
            None
        };
        let embedder = settings.embedder()?;
        let ab = pool.install(|| {
            run_metadata_ablation(&repo, embedder, reasoner, &settings.router, &queries)
        })?;
        print_aggregates("with_metadata", &ab.with_metadata);
        print_aggregates("without_metadata", &ab.without_metadata);
        println!(
            "delta\tR@1={:+.4}\tR@3={:+.4}\tmAP={:+.4}",
            ab.delta.recall_at_1, ab.delta.recall_at_3, ab.delta.map
        );
        if let Some(out) = out {
            write_json(&out, &ab)?;
        }
        return Ok(());
    }
    let router = router(settings)?;
    let (report, outcomes) = pool.install(|| router.evaluate_with_outcomes(&queries))?;
    print_aggregates(&format!("{:?}", report.config.stage), &report);
    if let Some(out) = out {
        report.write(&out, a.format)?;
    }
    if let Some(path) = &a.explain_out {
        write_json(path, &outcomes)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ClusterReport {
    clusters: dbroute::eval::ClusterAssignment,
    #[serde(skip_serializing_if = "Option::is_none")]
    confusion: Option<dbroute::eval::ConfusionStats>,
}

fn analyze_clusters(settings: &Settings, a: &ClusterArgs) -> Result<()> {
    let index = RepositoryIndex::load(require(&settings.paths.index, "index")?)?;
    let vectors: BTreeMap<String, _> = index
        .entries
        .iter()
        .map(|(k, e)| (k.clone(), e.vector.clone()))
        .collect();
    let clusters = constrained_kmeans(
        &vectors,
        a.clusters,
        a.min_size,
        a.max_size,
        settings.seed,
        KMeansOptions::default(),
    )?;
    let confusion = match &a.report {
        Some(p) => {
            let report: EvalReport = read_json(p)?;
            Some(intra_cluster_confusion(&report.records, &clusters))
        }
        None => None,
    };
    for (c, size) in clusters.sizes.iter().enumerate() {
        let members: Vec<&str> = clusters.members(c).collect();
        println!("cluster {c}\t{size}\t{}", members.join(", "));
    }
    if let Some(s) = &confusion {
        println!(
            "errors={}\ttop1_same_cluster={:.4}\tmulti_same_cluster_top5={:.4}",
            s.errors, s.top1_same_cluster_rate, s.multi_same_cluster_top5_rate
        );
    }
    if let Some(out) = &a.out {
        write_json(
            out,
            &ClusterReport {
                clusters,
                confusion,
            },
        )?;
    }
    Ok(())
}
