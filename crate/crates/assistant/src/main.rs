//! `dakg`: batch driver for every pipeline stage.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 training diverged.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dakg_assistant::anticipate::{recommend, AnticipateOptions, Method, Sources};
use dakg_assistant::service::{port_from_env, serve, AppState, ServiceConfig};
use dakg_core::store::{load_ntriples, save_ntriples};
use dakg_core::vocab::RDF_TYPE;
use dakg_core::{
    annotate, profile_file, source_breakdown, synthesize, Graph, Ladder, ProfileOptions, Schema, SynthConfig, Target,
    TaskContext, Term,
};
use dakg_kge::data::CandidateSets;
use dakg_kge::search::{grid_csv, grid_search, tpe_search, validation_objective, SearchSpace, TpeSpace};
use dakg_kge::{
    checkpoint, evaluate_named, train_data, EarlyStopConfig, EvalContext, EvalMode, KgData, KgeError, ModelConfig,
    ModelKind, Sides, SplitSpec,
};

#[derive(Parser)]
#[command(name = "dakg", version, about = "Data-analytics knowledge graph: corpus, embeddings and recommendations")]
struct Cli {
    /// JSON file of flag values; flags given on the command line win.
    #[arg(long, global = true)]
    #[allow(dead_code)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Write the bootstrapped schema as N-Triples.
    Schema {
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate the synthetic interaction corpus.
    Synth {
        #[arg(long)]
        seed: Option<u64>,
        /// SynthConfig JSON.
        #[arg(long)]
        synth_config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Profile a CSV file, optionally recording it in a store.
    Profile {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = ',')]
        delimiter: char,
        /// Store to annotate in place.
        #[arg(long)]
        store: Option<PathBuf>,
        /// Profile JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Load N-Triples, validate instance triples against the schema, and
    /// optionally write the merged store.
    Load {
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Counts of triples, entities, relations and instances per class.
    Stats {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write train/valid/test files of the embedding view.
    Split {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train embeddings.
    Train {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        store: PathBuf,
        /// Checkpoint file; the history goes next to it as `.history.csv`.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        stop: StopArgs,
    },
    /// Evaluate a checkpoint on the test split of a store.
    Eval {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// raw, filtered (range-filtered) or known (drop other known triples).
        #[arg(long, default_value = "raw")]
        mode: String,
        #[arg(long, default_value_t = 0)]
        split_seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid search.
    Grid {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "transe,transh,transr,rotate,distmult,complex")]
        models: Vec<ModelKind>,
        #[arg(long, value_delimiter = ',', default_value = "2,10,42,100")]
        dims: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0.0001,0.0012,0.01")]
        lrs: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1,20,50")]
        npps: Vec<usize>,
        #[arg(long, default_value_t = 300)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        cache: Option<PathBuf>,
        /// CSV of results.
        #[arg(long)]
        out: PathBuf,
    },
    /// Tree-structured Parzen Estimator search over dim, lr and npp.
    Tpe {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, default_value = "transh")]
        model: ModelKind,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 300)]
        epochs: usize,
        /// JSON-lines trace.
        #[arg(long)]
        out: PathBuf,
    },
    /// Recommend the next input for a task.
    Recommend {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        user: String,
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long)]
        intent: Option<String>,
        #[arg(long)]
        metric: Option<String>,
        #[arg(long)]
        target: Target,
        #[arg(long, default_value = "auto")]
        method: Method,
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// Rank every entity instead of plausible candidates only.
        #[arg(long)]
        unfiltered: bool,
    },
    /// Run the HTTP service. The port comes from DAKG_PORT.
    Serve {
        /// ServiceConfig JSON.
        #[arg(long)]
        service_config: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, default_value = "transh")]
    model: ModelKind,
    #[arg(long, default_value_t = 42)]
    dim: usize,
    #[arg(long, default_value_t = 0.0012)]
    lr: f64,
    #[arg(long, default_value_t = 50)]
    npp: usize,
    #[arg(long, default_value_t = 1.0)]
    margin: f64,
    #[arg(long, default_value_t = 300)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    split_seed: u64,
}

impl ModelArgs {
    fn config(&self) -> ModelConfig {
        ModelConfig {
            model: self.model,
            dim: self.dim,
            lr: self.lr,
            npp: self.npp,
            margin: self.margin,
            max_epochs: self.epochs,
            seed: self.seed,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct StopArgs {
    /// Train for all epochs, validating without stopping.
    #[arg(long)]
    no_early_stop: bool,
    #[arg(long, default_value_t = 15)]
    valid_every: usize,
    #[arg(long, default_value_t = 2)]
    patience: usize,
}

impl StopArgs {
    fn config(&self) -> EarlyStopConfig {
        EarlyStopConfig { enabled: !self.no_early_stop, every: self.valid_every, patience: self.patience }
    }
}

enum Failure {
    Usage(String),
    Data(String),
    Diverged(String),
}

impl From<KgeError> for Failure {
    fn from(e: KgeError) -> Self {
        match e {
            KgeError::Diverged { .. } => Failure::Diverged(e.to_string()),
            KgeError::Config(_) => Failure::Usage(e.to_string()),
            other => Failure::Data(other.to_string()),
        }
    }
}

fn data<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Data(e.to_string())
}

/// Appends `--key value` for every config entry whose flag is absent.
fn merge_config(mut argv: Vec<String>) -> Result<Vec<String>, Failure> {
    let Some(pos) = argv.iter().position(|a| a == "--config") else { return Ok(argv) };
    let path = argv.get(pos + 1).cloned().ok_or_else(|| Failure::Usage("--config needs a path".into()))?;
    let text = fs::read_to_string(&path).map_err(|e| Failure::Data(format!("{path}: {e}")))?;
    let obj: BTreeMap<String, serde_json::Value> =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{path}: expected a JSON object of flags: {e}")))?;
    argv.drain(pos..pos + 2);
    for (k, v) in obj {
        let flag = format!("--{}", k.replace('_', "-"));
        if argv.iter().any(|a| a == &flag || a.starts_with(&format!("{flag}="))) {
            continue;
        }
        match v {
            serde_json::Value::Bool(true) => argv.push(flag),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::Array(items) => {
                let parts: Vec<String> = items.iter().map(scalar).collect();
                argv.push(flag);
                argv.push(parts.join(","));
            }
            other => {
                argv.push(flag);
                argv.push(scalar(&other));
            }
        }
    }
    Ok(argv)
}

fn scalar(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn load_store(path: &Path) -> Result<Graph, Failure> {
    load_ntriples(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(data)?;
    }
    fs::write(path, text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn iri(s: &str) -> Result<Term, Failure> {
    Term::iri(s).map_err(|e| Failure::Usage(e.to_string()))
}

fn run(verb: Verb) -> Result<(), Failure> {
    let schema = Schema::bootstrap();
    match verb {
        Verb::Schema { out } => {
            save_ntriples(schema.graph(), &out).map_err(data)?;
            println!("schema: {} triples -> {}", schema.graph().len(), out.display());
        }
        Verb::Synth { seed, synth_config, out } => {
            let mut cfg = match synth_config {
                Some(p) => serde_json::from_str(&fs::read_to_string(&p).map_err(data)?).map_err(data)?,
                None => SynthConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            let g = synthesize(&schema, &cfg);
            save_ntriples(&g, &out).map_err(data)?;
            let c = source_breakdown(&schema, &g);
            println!(
                "corpus: {} triples ({} schema, {} characteristics, {} experiments) -> {}",
                g.len(),
                c.schema,
                c.characteristics,
                c.experiments,
                out.display()
            );
        }
        Verb::Profile { input, target, delimiter, store, out } => {
            let opts = ProfileOptions {
                delimiter: u8::try_from(delimiter).map_err(|_| Failure::Usage("delimiter must be one byte".into()))?,
                ..Default::default()
            };
            let p = profile_file(&input, &target, &opts).map_err(|e| Failure::Data(format!("{}: {e}", input.display())))?;
            print!("{}", p.to_key_values());
            if let Some(out) = out {
                write(&out, &serde_json::to_string_pretty(&p).expect("profile serializes"))?;
            }
            if let Some(store) = store {
                let mut g = if store.exists() { load_store(&store)? } else { schema.graph().clone() };
                let e = annotate(&mut g, &schema, &p).map_err(data)?;
                save_ntriples(&g, &store).map_err(data)?;
                println!("recorded as {} in {}", e.lexical(), store.display());
            }
        }
        Verb::Load { input, out } => {
            let mut g = schema.graph().clone();
            let mut violations = 0usize;
            for path in &input {
                let part = load_store(path)?;
                let fresh: Vec<_> = part.iter().filter(|t| !g.contains(t)).collect();
                let mut scratch = g.clone();
                scratch.extend(fresh.iter().cloned()).map_err(data)?;
                for t in &fresh {
                    if let Err(v) = schema.validate(&scratch, t) {
                        violations += 1;
                        if violations <= 20 {
                            eprintln!("{}: {t}: {v}", path.display());
                        }
                    }
                }
                g = scratch;
            }
            println!("loaded {} triples from {} file(s); {violations} schema violation(s)", g.len(), input.len());
            if violations > 0 {
                return Err(Failure::Data(format!("{violations} triples violate the schema")));
            }
            if let Some(out) = out {
                save_ntriples(&g, &out).map_err(data)?;
            }
        }
        Verb::Stats { store, out } => {
            let g = load_store(&store)?;
            let mut per_class: BTreeMap<String, usize> = BTreeMap::new();
            for t in g.find(None, Some(&Term::Iri(RDF_TYPE.into())), None) {
                *per_class.entry(t.object.lexical().to_string()).or_default() += 1;
            }
            let c = source_breakdown(&schema, &g);
            let stats = serde_json::json!({
                "triples": g.len(),
                "entities": g.entities().len(),
                "relations": g.relations().len(),
                "sources": c,
                "per_class": per_class,
            });
            println!("triples {} entities {} relations {}", g.len(), g.entities().len(), g.relations().len());
            println!("schema {} characteristics {} experiments {}", c.schema, c.characteristics, c.experiments);
            if let Some(out) = out {
                write(&out, &serde_json::to_string_pretty(&stats).expect("stats serialize"))?;
            }
        }
        Verb::Split { store, seed, out } => {
            let g = load_store(&store)?;
            let d = KgData::build(&g, &schema, &SplitSpec { seed, ..Default::default() });
            for (name, part) in [("train", &d.train), ("valid", &d.valid), ("test", &d.test)] {
                let text: String = part.iter().map(|t| d.named(t).join("\t") + "\n").collect();
                write(&out.join(format!("{name}.tsv")), &text)?;
            }
            write(&out.join("split.json"), &serde_json::to_string_pretty(&d.split_report).expect("report serializes"))?;
            let (a, b, c) = d.split_report.realized;
            println!(
                "split {} triples: train {a:.3} valid {b:.3} test {c:.3}, {} moved into train",
                d.all.len(),
                d.split_report.moved
            );
        }
        Verb::Train { model, store, out, stop } => {
            let g = load_store(&store)?;
            let d = KgData::build(&g, &schema, &SplitSpec { seed: model.split_seed, ..Default::default() });
            let cfg = model.config();
            cfg.validate().map_err(Failure::Usage)?;
            let (state, hist) = train_data(&d, &cfg, &stop.config())?;
            checkpoint::save(&state, &out)?;
            let hist_path = PathBuf::from(format!("{}.history.csv", out.display()));
            write(&hist_path, &hist.to_csv())?;
            println!(
                "trained {} for {} epochs (best {}), validation tail Hits@3 {:?} -> {}",
                cfg.model,
                hist.stopped_epoch,
                hist.best_epoch,
                hist.evals.iter().find(|e| e.0 == hist.best_epoch).map(|e| e.1),
                out.display()
            );
        }
        Verb::Eval { store, checkpoint: ckpt, mode, split_seed, out } => {
            let mode = match mode.as_str() {
                "raw" => EvalMode::Raw,
                "filtered" | "range" => EvalMode::RangeFiltered,
                "known" => EvalMode::Filtered,
                other => return Err(Failure::Usage(format!("unknown mode {other:?}; expected raw, filtered or known"))),
            };
            let g = load_store(&store)?;
            let state = checkpoint::load(&ckpt)?;
            let d = KgData::build(&g, &schema, &SplitSpec { seed: split_seed, ..Default::default() });
            let named: Vec<_> = d.test.iter().map(|t| d.named(t)).collect();
            let all: Vec<_> =
                d.all.iter().filter_map(|t| { let [h, r, o] = d.named(t); state.ids(&h, &r, &o).ok() }).collect();
            let candidates = CandidateSets::build(&schema, &g, &state.entities, &state.relations, &all);
            let known = all.iter().copied().collect();
            let ctx = EvalContext { candidates: Some(&candidates), known: Some(&known) };
            let rep = evaluate_named(&state, &named, mode, Sides::Both, &ctx);
            for (side, m) in [("head", rep.head), ("tail", rep.tail)] {
                if let Some(m) = m {
                    println!(
                        "{side}: Hits@1 {:.4} Hits@3 {:.4} Hits@10 {:.4} MR {:.1} MRR {:.4} (n {})",
                        m.hits1, m.hits3, m.hits10, m.mean_rank, m.mrr, m.n
                    );
                }
            }
            if let Some(out) = out {
                write(&out, &serde_json::to_string_pretty(&rep).expect("report serializes"))?;
            }
        }
        Verb::Grid { store, models, dims, lrs, npps, epochs, seed, cache, out } => {
            let g = load_store(&store)?;
            let d = KgData::build(&g, &schema, &SplitSpec::default());
            let base = ModelConfig { max_epochs: epochs, seed, ..Default::default() };
            let space = SearchSpace { models, dims, lrs, npps };
            let rows = grid_search(&d, &base, &space, &EarlyStopConfig::default(), cache.as_deref())?;
            write(&out, &grid_csv(&rows))?;
            let failed = rows.iter().filter(|r| r.error.is_some()).count();
            println!("{} cells ({failed} failed) -> {}", rows.len(), out.display());
        }
        Verb::Tpe { store, model, trials, seed, epochs, out } => {
            let g = load_store(&store)?;
            let d = KgData::build(&g, &schema, &SplitSpec::default());
            let base = ModelConfig { model, max_epochs: epochs, ..Default::default() };
            let space = TpeSpace { model, dim: (2, 200), lr: (1e-4, 1e-1), npp: (1, 100) };
            let stop = EarlyStopConfig::default();
            let trace = tpe_search(&space, &base, trials, seed, validation_objective(&d, &stop))?;
            write(&out, &trace.to_jsonl())?;
            if let Some(b) = trace.best() {
                println!(
                    "best validation tail Hits@3 {:.4} at dim {} lr {} npp {} -> {}",
                    b.objective,
                    b.config.dim,
                    b.config.lr,
                    b.config.npp,
                    out.display()
                );
            }
        }
        Verb::Recommend { store, checkpoint: ckpt, user, dataset, intent, metric, target, method, k, unfiltered } => {
            if k == 0 {
                return Err(Failure::Usage("--k must be positive".into()));
            }
            let g = load_store(&store)?;
            let state = ckpt.map(|p| checkpoint::load(&p)).transpose()?;
            let mut ctx = TaskContext::new(iri(&user)?);
            ctx.dataset = dataset.as_deref().map(iri).transpose()?;
            ctx.intent = intent.as_deref().map(iri).transpose()?;
            ctx.metric = metric.as_deref().map(iri).transpose()?;
            let ladder = Ladder::default();
            let options = AnticipateOptions { filter: !unfiltered, ..Default::default() };
            let src = Sources { schema: &schema, graph: &g, ladder: &ladder, state: state.as_ref(), options: &options };
            let rec = recommend(&src, &ctx, target, method, k).map_err(data)?;
            println!("{}", serde_json::to_string_pretty(&rec).expect("recommendation serializes"));
        }
        Verb::Serve { service_config } => {
            let cfg: ServiceConfig = match service_config {
                Some(p) => serde_json::from_str(&fs::read_to_string(&p).map_err(data)?).map_err(data)?,
                None => ServiceConfig::default(),
            };
            let port = port_from_env().map_err(Failure::Usage)?;
            let g = match &cfg.store {
                Some(p) if p.exists() => load_store(p)?,
                _ => schema.graph().clone(),
            };
            let state = match &cfg.checkpoint {
                Some(p) if p.exists() => Some(checkpoint::load(p)?),
                _ => None,
            };
            tracing_subscriber::fmt().with_env_filter(tracing_subscriber::EnvFilter::from_default_env()).init();
            let rt = tokio::runtime::Runtime::new().map_err(data)?;
            rt.block_on(async move {
                let app = AppState::new(schema, g, state, cfg).with_fine_tuning();
                serve(app, port).await
            })
            .map_err(data)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let argv = match merge_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            return ExitCode::from(1);
        }
        Err(Failure::Data(m) | Failure::Diverged(m)) => {
            eprintln!("error: {m}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.verb) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Diverged(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
