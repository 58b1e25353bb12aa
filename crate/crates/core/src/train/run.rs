use std::fmt::Write as _;

use super::{aux_loss_grad, classification_loss_grad, total_loss, TrainConfig};
use crate::error::{Error, Result};
use crate::graph::{augment, knn_attach, knn_edges, BuildConfig, CsrGraph, NormalizedAdjacency};
use crate::graphio::DatasetBundle;
use crate::metrics::accuracy;
use crate::model::{backward, forward, FactStats, GraphInputs, Mode, ModelConfig, ModelParams, OutputGradients, Variant};
use crate::numkit::{softmax_rows, AdamConfig, AdamState, Rng};
use crate::topo::{aux_targets, fact_matrix, fact_matrix_with, label_agreement_many, AuxTargets, CenterLabel, FactMatrix};
use crate::Matrix;

pub(crate) const INIT_STREAM: u64 = 11;
pub(crate) const DROPOUT_STREAM: u64 = 12;

/// The graph seen during training: training nodes only, relabelled
/// `0..m` in `splits.train` order, with facts and aux targets computed from
/// training labels.
#[derive(Debug, Clone)]
pub struct TrainingGraph {
    pub nodes: Vec<usize>,
    pub graph: CsrGraph,
    pub adjacency: NormalizedAdjacency,
    pub features: Matrix,
    pub labels: Vec<usize>,
    pub facts: FactMatrix,
    pub aux: AuxTargets,
}

impl TrainingGraph {
    /// Builds the subgraph from the bundle's edges when it has them (then
    /// augments), otherwise by k-NN over training features.
    pub fn build(bundle: &DatasetBundle, build: &BuildConfig) -> Result<Self> {
        build.validate()?;
        let nodes = bundle.splits.train.clone();
        if nodes.is_empty() {
            return Err(Error::Empty("training split"));
        }
        let features = bundle.features.select_rows(&nodes);
        let labels: Vec<usize> = nodes.iter().map(|&u| bundle.labels[u]).collect();
        let m = nodes.len();
        let base = match &bundle.edges {
            Some(edges) => CsrGraph::from_edges(bundle.n(), edges)?.induced(&nodes),
            None if m >= 2 => CsrGraph::from_edges(m, &knn_edges(&features, build.k)?)?,
            None => CsrGraph::empty(m),
        };
        let all: Vec<usize> = (0..m).collect();
        let graph = augment(&base, &features, &labels, &all, build)?;
        let labeled = vec![true; m];
        let facts = fact_matrix(&graph, &labels, &labeled);
        let aux = aux_targets(&graph, &labels, &labeled, &features);
        let adjacency = NormalizedAdjacency::new(&graph);
        Ok(Self { nodes, graph, adjacency, features, labels, facts, aux })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn fact_stats(&self) -> FactStats {
        let all: Vec<usize> = (0..self.len()).collect();
        let (mean, std) = self.facts.column_stats(&all);
        FactStats { mean, std }
    }
}

/// The full graph used at inference: the training graph in global ids,
/// plus edges from every other node to training nodes only.
#[derive(Debug, Clone)]
pub struct EvalGraph {
    pub graph: CsrGraph,
    pub adjacency: NormalizedAdjacency,
    pub train_mask: Vec<bool>,
    /// Training labels at training nodes, 0 elsewhere (never read there).
    pub known_labels: Vec<usize>,
    /// Facts with the neutral agreement at non-training nodes.
    pub neutral_facts: FactMatrix,
}

impl EvalGraph {
    /// With prebuilt edges, keeps the bundle's edges between a training and
    /// a non-training node; otherwise attaches each non-training node to its
    /// `k` most similar training nodes. Edges among non-training nodes are
    /// never present.
    pub fn build(bundle: &DatasetBundle, training: &TrainingGraph, k: usize) -> Result<Self> {
        let n = bundle.n();
        let mut train_mask = vec![false; n];
        let mut known_labels = vec![0; n];
        for &u in &training.nodes {
            train_mask[u] = true;
            known_labels[u] = bundle.labels[u];
        }
        let mut edges: Vec<(usize, usize)> =
            training.graph.edges().map(|(a, b)| (training.nodes[a], training.nodes[b])).collect();
        let others: Vec<usize> = (0..n).filter(|&u| !train_mask[u]).collect();
        match &bundle.edges {
            Some(all) => edges.extend(all.iter().copied().filter(|&(u, v)| train_mask[u] != train_mask[v])),
            None if !others.is_empty() => edges.extend(knn_attach(&bundle.features, &others, &training.nodes, k)?),
            None => {}
        }
        let graph = CsrGraph::from_edges(n, &edges)?;
        let neutral_facts = fact_matrix_with(&graph, &known_labels, &train_mask, CenterLabel::NeutralIfUnlabeled);
        let adjacency = NormalizedAdjacency::new(&graph);
        Ok(Self { graph, adjacency, train_mask, known_labels, neutral_facts })
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    /// Facts with `provisional[u]` as the center label at non-training nodes.
    pub fn facts_with_predictions(&self, provisional: &[usize]) -> FactMatrix {
        let mut labels = self.known_labels.clone();
        for u in 0..self.n() {
            if !self.train_mask[u] {
                labels[u] = provisional[u];
            }
        }
        let others: Vec<usize> = (0..self.n()).filter(|&u| !self.train_mask[u]).collect();
        let agreement = label_agreement_many(&self.graph, &labels, &self.train_mask, &others);
        let mut facts = self.neutral_facts.clone();
        for (&u, a) in others.iter().zip(agreement) {
            facts.0.set(u, 2, a);
        }
        facts
    }
}

/// Output of [`inference`] over every node of the evaluation graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub labels: Vec<usize>,
    pub probs: Matrix,
    /// Facts fed to the final pass (fuzzy variant only).
    pub facts: Option<FactMatrix>,
}

pub fn argmax_rows(m: &Matrix) -> Vec<usize> {
    (0..m.rows())
        .map(|u| {
            let row = m.row(u);
            let mut best = 0;
            for j in 1..row.len() {
                if row[j] > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Eval-mode prediction on the full graph. The aux heads play no part. For
/// the fuzzy variant, a first pass with neutral agreement at non-training
/// nodes yields provisional labels, and a second pass recomputes their
/// agreement with those labels as the center label.
pub fn inference(
    params: &ModelParams<f64>,
    model: &ModelConfig,
    bundle: &DatasetBundle,
    eval: &EvalGraph,
) -> Result<Predictions> {
    if eval.n() != bundle.n() || model.input_dim != bundle.dim() {
        return Err(Error::InvalidArgument(format!(
            "model expects {} features, bundle has {} nodes x {} features, graph has {} nodes",
            model.input_dim,
            bundle.n(),
            bundle.dim(),
            eval.n()
        )));
    }
    let run = |facts: Option<&FactMatrix>| -> Result<Matrix> {
        let inputs = GraphInputs { features: &bundle.features, adjacency: &eval.adjacency, facts: facts.map(FactMatrix::matrix) };
        Ok(forward(params, model, inputs, Mode::Eval)?.0)
    };
    let (logits, facts) = if model.variant == Variant::Fuzzy {
        let provisional = argmax_rows(&run(Some(&eval.neutral_facts))?);
        let facts = eval.facts_with_predictions(&provisional);
        (run(Some(&facts))?, Some(facts))
    } else {
        (run(None)?, None)
    };
    let probs = softmax_rows(&logits)?;
    Ok(Predictions { labels: argmax_rows(&logits), probs, facts })
}

/// One epoch of the training log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Objective the optimizer saw: classification plus weighted aux loss.
    pub loss: f64,
    pub cls_loss: f64,
    /// Mean squared error of the aux heads (aux variant only).
    pub aux_loss: Option<f64>,
    /// Accuracy on `splits.val` after the update; `None` without a val split.
    pub val_acc: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpochLog {
    pub records: Vec<EpochRecord>,
}

impl EpochLog {
    pub const TSV_HEADER: &'static str = "epoch\tloss\tcls_loss\taux_loss\tval_acc";

    pub fn to_tsv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), |x| format!("{x:.17e}"));
        let mut s = format!("{}\n", Self::TSV_HEADER);
        for r in &self.records {
            let _ = writeln!(s, "{}\t{:.17e}\t{:.17e}\t{}\t{}", r.epoch, r.loss, r.cls_loss, opt(r.aux_loss), opt(r.val_acc));
        }
        s
    }

    /// Only the columns computed from training data.
    pub fn training_tsv(&self) -> String {
        let mut s = String::from("epoch\tloss\tcls_loss\taux_loss\n");
        for r in &self.records {
            let aux = r.aux_loss.map_or_else(|| "nan".into(), |x| format!("{x:.17e}"));
            let _ = writeln!(s, "{}\t{:.17e}\t{:.17e}\t{aux}", r.epoch, r.loss, r.cls_loss);
        }
        s
    }

    pub fn losses(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.loss).collect()
    }
}

/// Everything produced by [`train_one`].
#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub params: ModelParams<f64>,
    pub model: ModelConfig,
    /// Graph settings actually used (seed set to the run seed).
    pub build: BuildConfig,
    pub seed: u64,
    pub log: EpochLog,
    pub training: TrainingGraph,
    pub eval: EvalGraph,
}

impl TrainOutput {
    pub fn predict(&self, bundle: &DatasetBundle) -> Result<Predictions> {
        inference(&self.params, &self.model, bundle, &self.eval)
    }
}

/// Full-batch training of one model on `splits.train`.
///
/// Initialization, dropout and graph augmentation each draw from their own
/// stream of `seed`, so variants share every common random draw.
pub fn train_one(bundle: &DatasetBundle, cfg: &TrainConfig, seed: u64) -> Result<TrainOutput> {
    bundle.validate()?;
    cfg.validate()?;
    let model = cfg.model_for(bundle);
    model.validate()?;
    let build = BuildConfig { seed, ..cfg.build.clone() };
    let training = TrainingGraph::build(bundle, &build)?;
    let eval = EvalGraph::build(bundle, &training, build.k)?;

    let stats = training.fact_stats();
    let mut params = ModelParams::init(&model, Some(&stats), &mut Rng::stream(seed, INIT_STREAM))?;
    let mut dropout = Rng::stream(seed, DROPOUT_STREAM);
    let adam = AdamConfig { lr: cfg.lr, weight_decay: cfg.weight_decay, ..AdamConfig::default() };
    let mut opt = AdamState::new(adam, params.shapes());
    let mask: Vec<usize> = (0..training.len()).collect();
    let val_truth: Vec<usize> = bundle.splits.val.iter().map(|&u| bundle.labels[u]).collect();
    let inputs = GraphInputs {
        features: &training.features,
        adjacency: &training.adjacency,
        facts: (model.variant == Variant::Fuzzy).then(|| training.facts.matrix()),
    };

    let mut log = EpochLog::default();
    for epoch in 1..=cfg.epochs {
        let (logits, trace) = forward(&params, &model, inputs, Mode::Train(&mut dropout))?;
        let (cls_loss, d_logits) = classification_loss_grad(&logits, &training.labels, &mask)?;
        let mut upstream = OutputGradients { logits: d_logits, homophily: None, entropy: None };
        let mut aux_loss = None;
        let mut loss = cls_loss;
        if let Some((h, s)) = trace.aux_outputs() {
            let (l, mut dh, mut ds) = aux_loss_grad(h, s, &training.aux, &mask)?;
            dh.iter_mut().chain(ds.iter_mut()).for_each(|g| *g *= cfg.lambda);
            loss = total_loss(cls_loss, l, cfg.lambda);
            aux_loss = Some(l);
            upstream.homophily = Some(dh);
            upstream.entropy = Some(ds);
        }
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("training loss {loss} at epoch {epoch} (seed {seed})")));
        }
        let grads = backward(&trace, &params, inputs, &upstream)?;
        opt.step(&mut params.tensors_mut(), &grads.tensors())?;
        let val_acc = if val_truth.is_empty() {
            None
        } else {
            let pred = inference(&params, &model, bundle, &eval)?;
            let val_pred: Vec<usize> = bundle.splits.val.iter().map(|&u| pred.labels[u]).collect();
            Some(accuracy(&val_pred, &val_truth)?)
        };
        log.records.push(EpochRecord { epoch, loss, cls_loss, aux_loss, val_acc });
    }
    Ok(TrainOutput { params, model, build, seed, log, training, eval })
}
