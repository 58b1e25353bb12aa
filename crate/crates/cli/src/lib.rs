//! The `firegnn` command line: synth, build-graph, features, train, eval,
//! explain and gradcheck.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use firegnn::explain::{explain_node, render_rules};
use firegnn::graph::{build_graph, BuildConfig, CsrGraph};
use firegnn::graphio::{
    encode_checkpoint, read_checkpoint, read_dataset, read_edge_list, write_dataset, write_edge_list, DatasetBundle,
    DatasetPaths, FeatureFormat,
};
use firegnn::metrics::evaluate;
use firegnn::model::{Backbone, Variant};
use firegnn::synth::{edge_homophily, generate, SynthConfig};
use firegnn::topo::{aux_targets, fact_matrix};
use firegnn::train::{
    cross_validate_parallel, gradcheck_fixture, gradient_check, inference, train_one, SavedModel, TrainConfig,
};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const THREADS_VAR: &str = "FIREGNN_THREADS";

#[derive(Debug, Parser)]
#[command(name = "firegnn", about = "Graph neural networks with trainable fuzzy rules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Generate a planted-partition dataset.
    Synth(SynthArgs),
    /// Build a cosine k-NN graph over every node and augment it with training labels.
    BuildGraph(BuildGraphArgs),
    /// Dump per-node facts and auxiliary targets as TSV.
    Features(FeaturesArgs),
    /// Train one model, or cross-validate with --cv.
    Train(TrainArgs),
    /// Evaluate a checkpoint on one split.
    Eval(EvalArgs),
    /// Print the learned rules or explain one node.
    Explain(ExplainArgs),
    /// Compare analytic and finite-difference gradients on a 30-node fixture.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Dataset directory; defaults to the built-in synthetic benchmark.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Feature file format.
    #[arg(long, default_value = "auto", value_parser = ["auto", "fgnf", "csv"])]
    format: String,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    classes: usize,
    #[arg(long, default_value_t = 16)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    separation: f64,
    #[arg(long, default_value_t = 0.4)]
    homophily: f64,
    #[arg(long, default_value_t = 10.0)]
    mean_degree: f64,
    #[arg(long, default_value_t = 0.6)]
    train_frac: f64,
    #[arg(long, default_value_t = 0.2)]
    val_frac: f64,
    #[arg(long, default_value_t = 0.2)]
    test_frac: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Omit the edge list so training builds a k-NN graph.
    #[arg(long)]
    no_edges: bool,
}

#[derive(Debug, Args)]
struct BuildGraphArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    label_edges: bool,
    #[arg(long, default_value_t = 1)]
    label_edge_budget: usize,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    rewire: bool,
    #[arg(long, default_value_t = 0.5)]
    rewire_rate: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Debug, Args)]
struct FeaturesArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Edge list to use instead of the dataset's own edges.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// k for the k-NN graph when neither --graph nor dataset edges exist.
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// TSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Every flag maps onto one config key and overrides the config file.
#[derive(Debug, Args)]
struct ConfigFlags {
    /// File of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    folds: Option<String>,
    /// Comma-separated seeds for --cv.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    lr: Option<String>,
    #[arg(long)]
    weight_decay: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    backbone: Option<String>,
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    hidden_dim: Option<String>,
    #[arg(long)]
    layers: Option<String>,
    #[arg(long)]
    dropout: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    label_edges: Option<String>,
    #[arg(long)]
    label_edge_budget: Option<String>,
    #[arg(long)]
    rewire: Option<String>,
    #[arg(long)]
    rewire_rate: Option<String>,
}

impl ConfigFlags {
    fn resolve(&self) -> Result<TrainConfig, CliError> {
        let mut cfg = TrainConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            cfg.apply_kv(&text)?;
        }
        let flags = [
            ("epochs", &self.epochs),
            ("folds", &self.folds),
            ("seeds", &self.seeds),
            ("lr", &self.lr),
            ("weight_decay", &self.weight_decay),
            ("lambda", &self.lambda),
            ("backbone", &self.backbone),
            ("variant", &self.variant),
            ("hidden_dim", &self.hidden_dim),
            ("layers", &self.layers),
            ("dropout", &self.dropout),
            ("k", &self.k),
            ("label_edges", &self.label_edges),
            ("label_edge_budget", &self.label_edge_budget),
            ("rewire", &self.rewire),
            ("rewire_rate", &self.rewire_rate),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    config: ConfigFlags,
    /// Seed of a single run.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Cross-validate over `folds` × `seeds` instead of a single run.
    #[arg(long)]
    cv: bool,
    /// Checkpoint destination (single run).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Epoch log destination, TSV (single run).
    #[arg(long)]
    log: Option<PathBuf>,
    /// Metrics JSON destination.
    #[arg(long)]
    metrics: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value = "test", value_parser = ["train", "val", "test"])]
    split: String,
    /// Report JSON destination.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("what").required(true).args(["node", "rules"]))]
struct ExplainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    model: PathBuf,
    /// Node to explain.
    #[arg(long)]
    node: Option<usize>,
    /// Print the learned rules.
    #[arg(long)]
    rules: bool,
    /// JSON destination.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    hidden_dim: usize,
    /// Finite-difference step.
    #[arg(long, default_value_t = 1e-5)]
    step: f64,
    /// Largest accepted relative error.
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(String),
    Lib(firegnn::Error),
}

impl From<firegnn::Error> for CliError {
    fn from(e: firegnn::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Lib(e) if e.is_io_or_format() => 2,
            CliError::Lib(_) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) | CliError::Io(m) => m.clone(),
            CliError::Lib(e) => e.to_string(),
        }
    }
}

type CliResult = Result<(), CliError>;

/// Parses `args` (program name first), runs the command and returns the exit
/// code: 0 on success, 1 on invalid input, 2 on unreadable or malformed files.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{text}");
                0
            } else {
                let _ = write!(err, "{text}");
                1
            };
        }
    };
    let result = match cli.command {
        Command::Synth(a) => synth(&a, out),
        Command::BuildGraph(a) => build_graph_cmd(&a, out),
        Command::Features(a) => features(&a, out),
        Command::Train(a) => train(&a, out),
        Command::Eval(a) => eval(&a, out),
        Command::Explain(a) => explain(&a, out),
        Command::Gradcheck(a) => gradcheck(&a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.code()
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn final_line(out: &mut dyn Write, value: Value) -> CliResult {
    writeln!(out, "{value}")?;
    Ok(())
}

fn echo(out: &mut dyn Write, command: &str, header: &[(&str, String)], body: &str) -> CliResult {
    let mut s = format!("# firegnn {command}\n");
    for (k, v) in header {
        let _ = writeln!(s, "# {k}: {v}");
    }
    s.push_str(body);
    write!(out, "{s}")?;
    Ok(())
}

fn load_data(args: &DataArgs) -> Result<(DatasetBundle, String), CliError> {
    let format = match args.format.as_str() {
        "fgnf" => FeatureFormat::Fgnf,
        "csv" => FeatureFormat::Csv,
        _ => FeatureFormat::Auto,
    };
    match &args.data {
        Some(dir) => {
            if !dir.is_dir() {
                return Err(CliError::Io(format!("{} is not a directory", dir.display())));
            }
            Ok((read_dataset(&DatasetPaths::in_dir(dir), format).map_err(at_path(dir))?, dir.display().to_string()))
        }
        None => Ok((generate(&SynthConfig::default())?, "synthetic benchmark (default synth settings)".into())),
    }
}

fn write_file(path: &Path, contents: &[u8]) -> CliResult {
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn synth(a: &SynthArgs, out: &mut dyn Write) -> CliResult {
    let cfg = SynthConfig {
        n: a.n,
        classes: a.classes,
        dim: a.dim,
        separation: a.separation,
        homophily: a.homophily,
        mean_degree: a.mean_degree,
        train_frac: a.train_frac,
        val_frac: a.val_frac,
        test_frac: a.test_frac,
        seed: a.seed,
    };
    let body = serde_json::to_string(&cfg).map_err(firegnn::Error::from)?;
    echo(out, "synth", &[("out", a.out.display().to_string()), ("edges", (!a.no_edges).to_string())], &format!("{body}\n"))?;
    let mut bundle = generate(&cfg)?;
    let edges = bundle.edges.clone().unwrap_or_default();
    let realized = edge_homophily(&edges, &bundle.labels);
    if a.no_edges {
        bundle.edges = None;
    }
    write_dataset(&a.out, &bundle).map_err(at_path(&a.out))?;
    final_line(
        out,
        json!({
            "command": "synth",
            "dir": a.out.display().to_string(),
            "nodes": bundle.n(),
            "edges": bundle.edges.as_ref().map_or(0, Vec::len),
            "edge_homophily": realized,
            "splits": [bundle.splits.train.len(), bundle.splits.val.len(), bundle.splits.test.len()],
        }),
    )
}

fn build_graph_cmd(a: &BuildGraphArgs, out: &mut dyn Write) -> CliResult {
    let build = BuildConfig {
        k: a.k,
        add_label_edges: a.label_edges,
        label_edge_budget: a.label_edge_budget,
        rewire_edges: a.rewire,
        rewire_rate: a.rewire_rate,
        seed: a.seed,
    };
    build.validate()?;
    let (bundle, source) = load_data(&a.data)?;
    let body = serde_json::to_string(&build).map_err(firegnn::Error::from)?;
    echo(out, "build-graph", &[("data", source), ("out", a.out.display().to_string())], &format!("{body}\n"))?;
    let g = build_graph(&bundle.features, &bundle.labels, &bundle.splits.train, &build)?;
    let edges: Vec<(usize, usize)> = g.edges().collect();
    write_edge_list(&a.out, &edges).map_err(at_path(&a.out))?;
    let bytes = std::fs::read(&a.out)?;
    final_line(
        out,
        json!({
            "command": "build-graph",
            "out": a.out.display().to_string(),
            "nodes": g.n(),
            "edges": edges.len(),
            "edge_homophily": edge_homophily(&edges, &bundle.labels),
            "sha256": sha256_hex(&bytes),
        }),
    )
}

fn features(a: &FeaturesArgs, out: &mut dyn Write) -> CliResult {
    let (bundle, source) = load_data(&a.data)?;
    let (g, graph_source) = match (&a.graph, &bundle.edges) {
        (Some(path), _) => (CsrGraph::from_edges(bundle.n(), &read_edge_list(path).map_err(at_path(path))?)?, path.display().to_string()),
        (None, Some(edges)) => (CsrGraph::from_edges(bundle.n(), edges)?, "dataset edges".into()),
        (None, None) => {
            let build = BuildConfig { k: a.k, add_label_edges: false, rewire_edges: false, ..BuildConfig::default() };
            (build_graph(&bundle.features, &bundle.labels, &bundle.splits.train, &build)?, format!("cosine k-NN, k = {}", a.k))
        }
    };
    echo(out, "features", &[("data", source), ("graph", graph_source), ("labeled", "train split".into())], "")?;
    let mut labeled = vec![false; bundle.n()];
    for &u in &bundle.splits.train {
        labeled[u] = true;
    }
    let facts = fact_matrix(&g, &bundle.labels, &labeled);
    let aux = aux_targets(&g, &bundle.labels, &labeled, &bundle.features);
    let mut tsv = String::from("node\tdegree\tclustering\tagreement\thomophily\tentropy\n");
    for u in 0..bundle.n() {
        let [d, c, l] = facts.row(u);
        let _ = writeln!(tsv, "{u}\t{d}\t{c}\t{l}\t{}\t{}", aux.homophily[u], aux.entropy[u]);
    }
    match &a.out {
        Some(path) => write_file(path, tsv.as_bytes())?,
        None => write!(out, "{tsv}")?,
    }
    final_line(
        out,
        json!({
            "command": "features",
            "nodes": bundle.n(),
            "edges": g.num_edges(),
            "out": a.out.as_ref().map(|p| p.display().to_string()),
            "sha256": sha256_hex(tsv.as_bytes()),
        }),
    )
}

fn threads() -> Result<usize, CliError> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(1),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t >= 1 => Ok(t),
            _ => Err(CliError::Usage(format!("{THREADS_VAR} must be a positive integer, got {v:?}"))),
        },
    }
}

fn train(a: &TrainArgs, out: &mut dyn Write) -> CliResult {
    let cfg = a.config.resolve()?;
    let (bundle, source) = load_data(&a.data)?;
    if a.cv {
        let threads = threads()?;
        echo(out, "train --cv", &[("data", source), ("threads", threads.to_string())], &cfg.to_kv())?;
        let result = cross_validate_parallel(&bundle, &cfg, threads)?;
        let text = serde_json::to_string_pretty(&result).map_err(firegnn::Error::from)?;
        if let Some(path) = &a.metrics {
            write_file(path, text.as_bytes())?;
        }
        for r in &result.runs {
            writeln!(out, "seed {} fold {}: accuracy {:.4}", r.seed, r.fold, r.metrics.accuracy)?;
        }
        return final_line(
            out,
            json!({
                "command": "train",
                "cv": true,
                "runs": result.runs.len(),
                "mean": result.mean,
                "std": result.std,
                "theta_mean": result.theta_mean,
                "sha256": sha256_hex(text.as_bytes()),
            }),
        );
    }
    echo(out, "train", &[("data", source), ("seed", a.seed.to_string())], &cfg.to_kv())?;
    let trained = train_one(&bundle, &cfg, a.seed)?;
    let bytes = encode_checkpoint(&SavedModel::from_output(&trained, &cfg).to_checkpoint()?)?;
    if let Some(path) = &a.out {
        write_file(path, &bytes)?;
    }
    if let Some(path) = &a.log {
        write_file(path, trained.log.to_tsv().as_bytes())?;
    }
    let pred = trained.predict(&bundle)?;
    let report = split_report(&bundle, &pred, &bundle.splits.test)?;
    let metrics = serde_json::to_string_pretty(&report).map_err(firegnn::Error::from)?;
    if let Some(path) = &a.metrics {
        write_file(path, metrics.as_bytes())?;
    }
    let losses = trained.log.losses();
    if let (Some(first), Some(last)) = (losses.first(), losses.last()) {
        writeln!(out, "loss {first:.4} -> {last:.4} over {} epochs", losses.len())?;
    }
    writeln!(out, "test accuracy {:.4}", report.accuracy)?;
    final_line(
        out,
        json!({
            "command": "train",
            "seed": a.seed,
            "checkpoint": a.out.as_ref().map(|p| p.display().to_string()),
            "checkpoint_sha256": sha256_hex(&bytes),
            "final_loss": losses.last(),
            "test": report,
        }),
    )
}

fn split_report(
    bundle: &DatasetBundle,
    pred: &firegnn::train::Predictions,
    nodes: &[usize],
) -> Result<firegnn::metrics::EvalReport, CliError> {
    if nodes.is_empty() {
        return Err(CliError::Usage("the selected split is empty".into()));
    }
    let p: Vec<usize> = nodes.iter().map(|&u| pred.labels[u]).collect();
    let truth: Vec<usize> = nodes.iter().map(|&u| bundle.labels[u]).collect();
    let scores = pred.probs.select_rows(nodes);
    Ok(evaluate(&p, &scores, &truth, pred.probs.cols())?)
}

fn at_path(path: &Path) -> impl FnOnce(firegnn::Error) -> CliError + '_ {
    move |e| match e {
        firegnn::Error::Io(io) => CliError::Io(format!("{}: {io}", path.display())),
        other => CliError::Lib(other),
    }
}

fn load_model(path: &Path) -> Result<SavedModel, CliError> {
    Ok(SavedModel::from_checkpoint(read_checkpoint(path).map_err(at_path(path))?)?)
}

fn model_header(saved: &SavedModel) -> String {
    format!("{} / {}, seed {}, {} epochs", saved.model.backbone, saved.model.variant, saved.seed, saved.epochs)
}

fn eval(a: &EvalArgs, out: &mut dyn Write) -> CliResult {
    let saved = load_model(&a.model)?;
    let (bundle, source) = load_data(&a.data)?;
    echo(
        out,
        "eval",
        &[("data", source), ("model", a.model.display().to_string()), ("trained", model_header(&saved)), ("split", a.split.clone())],
        &saved.train.to_kv(),
    )?;
    let eval = saved.eval_graph(&bundle)?;
    let pred = inference(&saved.params, &saved.model, &bundle, &eval)?;
    let nodes = match a.split.as_str() {
        "train" => &bundle.splits.train,
        "val" => &bundle.splits.val,
        _ => &bundle.splits.test,
    };
    let report = split_report(&bundle, &pred, nodes)?;
    if let Some(path) = &a.out {
        write_file(path, serde_json::to_string_pretty(&report).map_err(firegnn::Error::from)?.as_bytes())?;
    }
    writeln!(
        out,
        "accuracy {:.4}  macro-F1 {:.4}  sensitivity {:.4}  ROC-AUC {:.4}",
        report.accuracy, report.macro_f1, report.sensitivity, report.roc_auc
    )?;
    let mut line = serde_json::to_value(&report).map_err(firegnn::Error::from)?;
    line["command"] = json!("eval");
    line["split"] = json!(a.split);
    final_line(out, line)
}

fn explain(a: &ExplainArgs, out: &mut dyn Write) -> CliResult {
    let saved = load_model(&a.model)?;
    let fuzzy = saved
        .params
        .fuzzy
        .as_ref()
        .ok_or_else(|| CliError::Usage(format!("{} is a {} model; rules need the fuzzy variant", a.model.display(), saved.model.variant)))?;
    if a.rules {
        echo(out, "explain --rules", &[("model", a.model.display().to_string()), ("trained", model_header(&saved))], "")?;
        let report = render_rules(fuzzy);
        write!(out, "{}", report.text())?;
        if let Some(path) = &a.out {
            write_file(path, report.json().as_bytes())?;
        }
        let mut line = serde_json::to_value(&report).map_err(firegnn::Error::from)?;
        line["command"] = json!("explain");
        return final_line(out, line);
    }
    let node = a.node.expect("clap requires --node or --rules");
    let (bundle, source) = load_data(&a.data)?;
    echo(
        out,
        "explain",
        &[("data", source), ("model", a.model.display().to_string()), ("trained", model_header(&saved)), ("node", node.to_string())],
        "",
    )?;
    if node >= bundle.n() {
        return Err(CliError::Usage(format!("node {node} outside 0..{}", bundle.n())));
    }
    let eval = saved.eval_graph(&bundle)?;
    let pred = inference(&saved.params, &saved.model, &bundle, &eval)?;
    let facts = pred.facts.as_ref().expect("fuzzy inference records facts");
    let explanation = explain_node(node, facts, fuzzy, Some(pred.labels[node]))?;
    write!(out, "{}", explanation.text())?;
    if let Some(path) = &a.out {
        write_file(path, explanation.json().as_bytes())?;
    }
    let mut line = serde_json::to_value(&explanation).map_err(firegnn::Error::from)?;
    line["command"] = json!("explain");
    final_line(out, line)
}

fn gradcheck(a: &GradcheckArgs, out: &mut dyn Write) -> CliResult {
    echo(
        out,
        "gradcheck",
        &[
            ("seed", a.seed.to_string()),
            ("hidden_dim", a.hidden_dim.to_string()),
            ("step", a.step.to_string()),
            ("tolerance", a.tolerance.to_string()),
        ],
        "",
    )?;
    let bundle = gradcheck_fixture(a.seed)?;
    let mut worst = 0.0f64;
    let mut reports = Vec::new();
    for backbone in [Backbone::Gcn, Backbone::Gin] {
        for variant in [Variant::Plain, Variant::Fuzzy, Variant::Aux] {
            let r = gradient_check(&bundle, backbone, variant, a.hidden_dim, a.seed, a.step)?;
            writeln!(
                out,
                "{backbone}/{variant}: max relative error {:.3e} over {} scalars ({} skipped at kinks)",
                r.max_rel_error, r.checked, r.skipped
            )?;
            worst = worst.max(r.max_rel_error);
            reports.push(json!({
                "backbone": backbone,
                "variant": variant,
                "max_rel_error": r.max_rel_error,
                "checked": r.checked,
                "skipped": r.skipped,
            }));
        }
    }
    let pass = worst < a.tolerance;
    final_line(out, json!({ "command": "gradcheck", "max_rel_error": worst, "pass": pass, "runs": reports }))?;
    if pass {
        Ok(())
    } else {
        Err(CliError::Usage(format!("max relative error {worst:.3e} is not below {}", a.tolerance)))
    }
}
