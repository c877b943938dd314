//! The `graphae` command-line tool.
//!
//! Every subcommand reads the same flat configuration: an optional file given
//! with `--config` plus `key=value` overrides on the command line. Exit
//! status is 0 on success, 1 for usage, configuration or input errors and 2
//! when a computation fails numerically.

mod config;

use std::collections::{BTreeMap, HashMap};
use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::json;

pub use config::{ConfigError, RunConfig, OUTPUT_ENV, SWEEPABLE};

use crate::clustering::{kmeans, louvain, modularity, Partition};
use crate::degeneracy::{core_decomposition, extract_k_core};
use crate::eval::{ami, ari, mean_std, select_hyperparameters, MetricSummary};
use crate::experiment::{Experiment, GroundTruth, PriorSpec, Task};
use crate::graph::{load_graph, FeatureMatrix, Features, OperatorKind, SparseGraph};
use crate::io::{open, write_atomic, write_embeddings, write_loss_trace};
use crate::model::{DecoderConfig, DecoderKind, EncoderKind, ModelSpec, ModularityReg, Scaling, TrainConfig, TrainedModel};
use crate::retrofit::{annotation_scores, retrofit, Composition, ConceptSpace, WordVectors};
use crate::sampling::{importance_scores, recommended_subgraph_size, sample_subgraph, sampling_distribution, ImportanceMethod, SamplingConfig, ThresholdParams};
use crate::Error;

#[derive(Parser, Debug)]
#[command(name = "graphae", version, about = "Graph autoencoders: training, evaluation, clustering and retrofitting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// Configuration file of `key = value` lines.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// `key=value` overrides, applied after the file.
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Relabel a raw edge list to dense ids (`input`, `directed`).
    Prepare(RunArgs),
    /// Core numbers and the k-core subgraph (`graph`, `core_k`).
    Kcore(RunArgs),
    /// Draw an importance-sampled subgraph (`graph`, `sample_size`, `sample_method`).
    Sample(RunArgs),
    /// Train a model; writes checkpoint, embeddings and loss trace.
    Train(RunArgs),
    /// Repeated seeded runs of a task; writes metrics JSON and curves.
    Evaluate(RunArgs),
    /// Grid search maximising the mean of validation AUC and modularity.
    Sweep(RunArgs),
    /// Louvain on a graph or k-means on a checkpoint's embedding.
    Cluster(RunArgs),
    /// Top-K predicted neighbours from a checkpoint.
    Rank(RunArgs),
    /// Refine concept embeddings along a relation graph.
    Retrofit(RunArgs),
}

/// Failure of a command, mapped to an exit status.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Run(Error),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Run(Error::Numeric(_)) => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Run(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses arguments, runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("graphae: {e}");
            e.exit_code()
        }
    }
}

fn load_config(args: &RunArgs) -> CliResult<RunConfig> {
    let text = match &args.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
        None => String::new(),
    };
    Ok(RunConfig::parse(&text, &args.overrides)?)
}

fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Prepare(a) => cmd_prepare(&load_config(&a)?),
        Command::Kcore(a) => cmd_kcore(&load_config(&a)?),
        Command::Sample(a) => cmd_sample(&load_config(&a)?),
        Command::Train(a) => cmd_train(&load_config(&a)?),
        Command::Evaluate(a) => cmd_evaluate(&load_config(&a)?),
        Command::Sweep(a) => cmd_sweep(&load_config(&a)?),
        Command::Cluster(a) => cmd_cluster(&load_config(&a)?),
        Command::Rank(a) => cmd_rank(&load_config(&a)?),
        Command::Retrofit(a) => cmd_retrofit(&load_config(&a)?),
    }
}

fn read_graph(cfg: &RunConfig) -> CliResult<SparseGraph> {
    let path = cfg.require_path("graph")?;
    Ok(load_graph(open(&path)?, cfg.flag("directed"))?)
}

fn read_features(cfg: &RunConfig, n: usize) -> CliResult<Features> {
    match cfg.path("features") {
        None => Ok(Features::Identity(n)),
        Some(p) => Ok(Features::Dense(FeatureMatrix::read(open(&p)?)?)),
    }
}

fn read_truth(cfg: &RunConfig) -> CliResult<Option<GroundTruth>> {
    match cfg.path("labels") {
        None => Ok(None),
        Some(p) => Ok(Some(GroundTruth::read(open(&p)?)?)),
    }
}

fn model_spec(cfg: &RunConfig) -> ModelSpec {
    let encoder = match cfg.text("encoder") {
        "linear" => EncoderKind::Linear,
        _ => EncoderKind::Gcn2 { hidden: cfg.count("hidden") },
    };
    let decoder = match cfg.text("decoder") {
        "source_target" => DecoderConfig::source_target(),
        "gravity" => DecoderConfig::gravity(cfg.real("gravity_lambda")),
        _ => DecoderConfig::inner_product(),
    };
    let operator = if cfg.text("operator") == "out_degree" { OperatorKind::OutDegree } else { OperatorKind::Symmetric };
    ModelSpec { encoder, variational: cfg.flag("variational"), dim: cfg.count("dim"), decoder, operator }
}

fn threshold(cfg: &RunConfig) -> ThresholdParams {
    ThresholdParams {
        deviation: cfg.real("threshold_deviation"),
        confidence: cfg.real("threshold_confidence"),
        prob_cap: cfg.real("threshold_cap"),
    }
}

fn sample_size(cfg: &RunConfig, n: usize) -> CliResult<usize> {
    match cfg.opt_count("sample_size") {
        Some(s) => Ok(s),
        None => Ok(recommended_subgraph_size(n, threshold(cfg))?.min(n)),
    }
}

fn train_config(cfg: &RunConfig, n: usize) -> CliResult<TrainConfig> {
    let scaling = match cfg.text("scaling") {
        "kcore" => Scaling::KCore { k: cfg.count("core_k"), iterations: cfg.count("propagation_iters") },
        "sampled" => Scaling::Sampled(SamplingConfig {
            method: ImportanceMethod::parse(cfg.text("sample_method"))?,
            alpha: cfg.real("sample_alpha"),
            size: sample_size(cfg, n)?,
            with_replacement: cfg.flag("with_replacement"),
        }),
        _ => Scaling::Full,
    };
    let beta = cfg.real("modularity_beta");
    Ok(TrainConfig {
        epochs: cfg.count("epochs"),
        learning_rate: cfg.real("learning_rate"),
        w_pos: cfg.opt_real("w_pos"),
        scaling,
        modularity: (beta > 0.0).then(|| ModularityReg { beta, gamma: cfg.real("modularity_gamma") }),
        seed: cfg.seed("seed"),
        include_diagonal: cfg.flag("include_diagonal"),
        max_pairs: cfg.seed("max_pairs"),
    })
}

fn experiment(cfg: &RunConfig, n: usize) -> CliResult<Experiment> {
    let lambda = cfg.real("prior_lambda");
    Ok(Experiment {
        spec: model_spec(cfg),
        train: train_config(cfg, n)?,
        prior: (lambda > 0.0).then(|| PriorSpec { lambda, s: cfg.count("prior_s") }),
        task: Task::parse(cfg.text("task"))?,
        val_frac: cfg.real("val_frac"),
        test_frac: cfg.real("test_frac"),
        include_reversals: cfg.flag("include_reversals"),
        clusters: Some(cfg.count("clusters")).filter(|&k| k > 0),
        top_k: cfg.count("top_k"),
    })
}

fn cmd_prepare(cfg: &RunConfig) -> CliResult<()> {
    let input = cfg.require_path("input")?;
    let directed = cfg.flag("directed");
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut names: Vec<String> = Vec::new();
    let mut seen: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let (mut loops, mut dups) = (0usize, 0usize);
    for (k, line) in open(&input)?.lines().enumerate() {
        let line = line.map_err(Error::Io)?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with('%') {
            continue;
        }
        let f: Vec<&str> = t.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).collect();
        if f.len() < 2 {
            return Err(Error::Parse { line: k + 1, msg: "expected 'source target [weight]'".into() }.into());
        }
        let mut id = |s: &str| {
            let next = names.len();
            *ids.entry(s.to_string()).or_insert_with(|| {
                names.push(s.to_string());
                next
            })
        };
        let (a, b) = (id(f[0]), id(f[1]));
        let w = match f.get(2) {
            Some(w) => w.parse::<f64>().map_err(|_| Error::Parse { line: k + 1, msg: format!("bad weight '{w}'") })?,
            None => 1.0,
        };
        if a == b {
            loops += 1;
            continue;
        }
        let key = if directed { (a, b) } else { (a.min(b), a.max(b)) };
        if seen.insert(key, w).is_some() {
            dups += 1;
        }
    }
    let edges: Vec<(usize, usize, f64)> = seen.into_iter().map(|((a, b), w)| (a, b, w)).collect();
    let g = SparseGraph::from_edges(names.len(), &edges, directed)?;
    let out = cfg.output_dir();
    write_atomic(&out.join("edges.txt"), |w| g.write_edge_list(w))?;
    write_atomic(&out.join("node_ids.tsv"), |w| {
        for (i, name) in names.iter().enumerate() {
            writeln!(w, "{i}\t{name}")?;
        }
        Ok(())
    })?;
    println!("{} nodes, {} edges ({loops} self-loops and {dups} duplicates dropped) -> {}", g.n(), g.m(), out.display());
    Ok(())
}

fn cmd_kcore(cfg: &RunConfig) -> CliResult<()> {
    let g = read_graph(cfg)?;
    let k = cfg.count("core_k");
    let dec = core_decomposition(&g);
    let (core, nodes) = extract_k_core(&g, k);
    let out = cfg.output_dir();
    write_atomic(&out.join("core_numbers.tsv"), |w| {
        for (i, c) in dec.core_number.iter().enumerate() {
            writeln!(w, "{i}\t{c}")?;
        }
        Ok(())
    })?;
    write_atomic(&out.join("kcore_edges.txt"), |w| core.write_edge_list(w))?;
    write_atomic(&out.join("kcore_nodes.tsv"), |w| {
        for (local, v) in nodes.iter().enumerate() {
            writeln!(w, "{local}\t{v}")?;
        }
        Ok(())
    })?;
    println!("degeneracy {}; {k}-core has {} of {} nodes and {} edges", dec.degeneracy, core.n(), g.n(), core.m());
    Ok(())
}

fn cmd_sample(cfg: &RunConfig) -> CliResult<()> {
    let g = read_graph(cfg)?;
    let size = sample_size(cfg, g.n())?;
    let method = ImportanceMethod::parse(cfg.text("sample_method"))?;
    let p = sampling_distribution(&importance_scores(&g, method), cfg.real("sample_alpha"))?;
    let (nodes, sub) = sample_subgraph(&g, &p, size, cfg.flag("with_replacement"), cfg.seed("seed"))?;
    let out = cfg.output_dir();
    write_atomic(&out.join("sampled_nodes.tsv"), |w| {
        for (local, v) in nodes.iter().enumerate() {
            writeln!(w, "{local}\t{v}")?;
        }
        Ok(())
    })?;
    write_atomic(&out.join("subgraph_edges.txt"), |w| sub.write_edge_list(w))?;
    println!(
        "sampled {} nodes ({} sampling, recommended size {}); subgraph has {} edges",
        nodes.len(),
        method.name(),
        recommended_subgraph_size(g.n(), threshold(cfg))?,
        sub.m()
    );
    Ok(())
}

fn cmd_train(cfg: &RunConfig) -> CliResult<()> {
    let g = read_graph(cfg)?;
    let x = read_features(cfg, g.n())?;
    let exp = experiment(cfg, g.n())?;
    let model = exp.fit(&g, &x, cfg.seed("seed"))?;
    let out = cfg.output_dir();
    write_atomic(&out.join("model.ckpt"), |w| model.write_checkpoint(w))?;
    write_atomic(&out.join("embeddings.tsv"), |w| write_embeddings(w, &model.embedding))?;
    write_atomic(&out.join("loss.csv"), |w| write_loss_trace(w, &model.loss_trace))?;
    println!(
        "trained {} epochs on {} nodes: loss {:.6} -> {:.6}; artifacts in {}",
        model.loss_trace.len(),
        g.n(),
        model.loss_trace[0],
        model.loss_trace.last().unwrap(),
        out.display()
    );
    Ok(())
}

fn cmd_evaluate(cfg: &RunConfig) -> CliResult<()> {
    let g = read_graph(cfg)?;
    let x = read_features(cfg, g.n())?;
    let truth = read_truth(cfg)?;
    let exp = experiment(cfg, g.n())?;
    let base = cfg.seed("seed");
    let runs = cfg.count("runs").max(1);
    let mut records = Vec::new();
    let mut per_metric: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut curve = String::from("run,epoch,loss\n");
    for r in 0..runs {
        let seed = base + r as u64;
        let outcome = exp.run(&g, &x, truth.as_ref(), seed)?;
        for (k, v) in &outcome.metrics {
            per_metric.entry(k.clone()).or_default().push(*v);
        }
        for (e, l) in outcome.model.loss_trace.iter().enumerate() {
            curve += &format!("{r},{e},{l:.17e}\n");
        }
        println!("run {r} (seed {seed}): {}", fmt_metrics(&outcome.metrics));
        records.push(json!({"run": r, "seed": seed, "train_seconds": outcome.train_seconds, "metrics": outcome.metrics}));
    }
    let summaries: Vec<MetricSummary> = per_metric.iter().map(|(m, v)| MetricSummary::from_values(exp.task.name(), m, v, base)).collect();
    for s in &summaries {
        println!("{} {}: {:.4} ± {:.4} over {} runs", s.task, s.metric, s.mean, s.std, s.runs);
    }
    let doc = json!({"task": exp.task.name(), "seed_base": base, "runs": records, "summary": summaries});
    let out = cfg.output_dir();
    write_atomic(&out.join("metrics.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &doc).map_err(|e| Error::Io(e.into()))?;
        Ok(writeln!(w)?)
    })?;
    write_atomic(&out.join("curve.csv"), |w| Ok(w.write_all(curve.as_bytes())?))?;
    Ok(())
}

fn fmt_metrics(m: &BTreeMap<String, f64>) -> String {
    m.iter().map(|(k, v)| format!("{k}={v:.4}")).collect::<Vec<_>>().join(" ")
}

fn cmd_sweep(cfg: &RunConfig) -> CliResult<()> {
    let points = cfg.grid_points();
    if cfg.grid.is_empty() || points.is_empty() {
        return Err(CliError::Config("sweep needs a non-empty grid (e.g. grid.prior_lambda = 0, 0.25)".into()));
    }
    let g = read_graph(cfg)?;
    let x = read_features(cfg, g.n())?;
    let truth = read_truth(cfg)?;
    let base = cfg.seed("seed");
    let runs = cfg.count("runs").max(1);
    let mut rows = Vec::new();
    for (idx, point) in points.iter().enumerate() {
        let mut exp = experiment(point, g.n())?;
        exp.task = Task::Joint;
        let (mut aucs, mut qs) = (Vec::new(), Vec::new());
        for r in 0..runs {
            let m = exp.run(&g, &x, truth.as_ref(), base + r as u64)?.metrics;
            aucs.push(*m.get("val_auc").ok_or_else(|| CliError::Config("sweep needs val_frac > 0".into()))?);
            qs.push(m["modularity"]);
        }
        let (auc, q) = (mean_std(&aucs).0, mean_std(&qs).0);
        let values: Vec<String> = cfg.grid.iter().map(|(k, _)| point.text(k).to_string()).collect();
        println!("candidate {idx} [{}]: val_auc={auc:.4} modularity={q:.4}", values.join(", "));
        rows.push((values, auc, q));
    }
    let scores: Vec<(f64, f64)> = rows.iter().map(|r| (r.1, r.2)).collect();
    let best = select_hyperparameters(&scores)?;
    let out = cfg.output_dir();
    write_atomic(&out.join("leaderboard.csv"), |w| {
        let keys: Vec<&str> = cfg.grid.iter().map(|(k, _)| k.as_str()).collect();
        writeln!(w, "candidate,{},val_auc,modularity,score", keys.join(","))?;
        for (i, (values, auc, q)) in rows.iter().enumerate() {
            writeln!(w, "{i},{},{auc:.6},{q:.6},{:.6}", values.join(","), (auc + q) / 2.0)?;
        }
        Ok(())
    })?;
    let mut winner = points[best].clone();
    winner.grid.clear();
    write_atomic(&out.join("best.conf"), |w| Ok(w.write_all(winner.to_text().as_bytes())?))?;
    println!("best candidate {best}; configuration written to {}", out.join("best.conf").display());
    Ok(())
}

fn read_checkpoint(cfg: &RunConfig) -> CliResult<TrainedModel> {
    let path = cfg.require_path("checkpoint")?;
    Ok(TrainedModel::read_checkpoint(open(&path)?)?)
}

fn cmd_cluster(cfg: &RunConfig) -> CliResult<()> {
    let graph = cfg.path("graph").map(|_| read_graph(cfg)).transpose()?;
    let truth = read_truth(cfg)?;
    let partition = match cfg.text("cluster_method") {
        "kmeans" => {
            let model = read_checkpoint(cfg)?;
            let k = match (cfg.count("clusters"), &truth) {
                (0, Some(t)) => t.classes(),
                (0, None) => return Err(CliError::Config("k-means needs 'clusters' or a labels file".into())),
                (k, _) => k,
            };
            let z = if model.spec.decoder.kind == DecoderKind::Gravity {
                model.embedding.slice(ndarray::s![.., ..model.spec.dim]).to_owned()
            } else {
                model.embedding.clone()
            };
            kmeans(z.view(), k, cfg.seed("seed"))?
        }
        _ => {
            let g = graph.as_ref().ok_or_else(|| CliError::Config("Louvain needs 'graph'".into()))?;
            let levels = louvain(g, None)?;
            println!("Louvain: {} levels", levels.len());
            levels.last().unwrap().clone()
        }
    };
    let mut line = format!("{} communities", partition.k());
    if let Some(g) = &graph {
        line += &format!(", modularity {:.4}", modularity(g, &partition)?);
    }
    if let Some(t) = &truth {
        let r: Partition = partition.restrict(&t.nodes);
        line += &format!(", AMI {:.4}, ARI {:.4}", ami(&t.partition, &r)?, ari(&t.partition, &r)?);
    }
    println!("{line}");
    write_atomic(&cfg.output_dir().join("partition.tsv"), |w| partition.write_tsv(w))?;
    Ok(())
}

fn cmd_rank(cfg: &RunConfig) -> CliResult<()> {
    let model = read_checkpoint(cfg)?;
    let n = model.embedding.nrows();
    let queries: Vec<usize> = match cfg.text("queries") {
        "all" => (0..n).collect(),
        list => list
            .split(',')
            .map(|q| q.trim().parse::<usize>().map_err(|_| CliError::Config(format!("queries: bad node id '{q}'"))))
            .collect::<CliResult<_>>()?,
    };
    let ranked = model.rank(&queries, cfg.count("top_k"))?;
    write_atomic(&cfg.output_dir().join("rankings.tsv"), |w| {
        writeln!(w, "query\trank\tnode\tscore")?;
        for (q, list) in queries.iter().zip(&ranked) {
            for (r, (v, s)) in list.iter().enumerate() {
                writeln!(w, "{q}\t{}\t{v}\t{s:.17e}", r + 1)?;
            }
        }
        Ok(())
    })?;
    println!("ranked top {} for {} queries", cfg.count("top_k"), queries.len());
    Ok(())
}

fn tag_list(space: &ConceptSpace, text: &str) -> CliResult<Vec<usize>> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| space.index_of(t).ok_or_else(|| CliError::Config(format!("unknown concept '{t}'"))))
        .collect()
}

fn cmd_retrofit(cfg: &RunConfig) -> CliResult<()> {
    let relations = cfg.require_path("relations")?;
    let empty: &[u8] = b"";
    let mut space = match cfg.path("vectors") {
        Some(p) => ConceptSpace::load(open(&p)?, open(&relations)?)?,
        None => ConceptSpace::load(empty, open(&relations)?)?,
    };
    if let Some(words) = cfg.path("words") {
        let wv = WordVectors::read(open(&words)?)?;
        let mode = Composition::parse(cfg.text("composition"), cfg.real("sif_a"))?;
        let composed = wv.compose_tags(&space.concepts, mode)?;
        space.known = composed.rows().into_iter().map(|r| r.iter().any(|&v| v != 0.0)).collect();
        space.initial = composed;
    }
    let q = retrofit(&space, cfg.count("max_iters"), cfg.real("tol"))?;
    let out = cfg.output_dir();
    write_atomic(&out.join("retrofitted.tsv"), |w| {
        for (tag, row) in space.concepts.iter().zip(q.rows()) {
            let vals: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
            writeln!(w, "{tag}\t{}", vals.join(" "))?;
        }
        Ok(())
    })?;
    let known = space.known.iter().filter(|&&k| k).count();
    println!("retrofitted {} concepts ({known} with initial vectors)", space.concepts.len());
    let sources = tag_list(&space, cfg.text("sources"))?;
    if !sources.is_empty() {
        let targets = match tag_list(&space, cfg.text("targets"))? {
            t if t.is_empty() => (0..space.concepts.len()).collect(),
            t => t,
        };
        let scores = annotation_scores(&sources, &targets, &q)?;
        let mut order: Vec<usize> = (0..targets.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        write_atomic(&out.join("scores.tsv"), |w| {
            for &k in &order {
                writeln!(w, "{}\t{:.17e}", space.concepts[targets[k]], scores[k])?;
            }
            Ok(())
        })?;
        println!("scored {} targets against {} source concepts", targets.len(), sources.len());
    }
    Ok(())
}
