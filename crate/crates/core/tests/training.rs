use firegnn::graphio::{encode_checkpoint, DatasetBundle};
use firegnn::metrics::accuracy;
use firegnn::model::{forward, Backbone, GraphInputs, Mode, ModelConfig, ModelParams, Variant};
use firegnn::numkit::{softmax_rows, Rng};
use firegnn::synth::{generate, SynthConfig};
use firegnn::topo::{fact_matrix_with, label_agreement_2hop, CenterLabel};
use firegnn::train::{argmax_rows, cross_validate, inference, train_one, SavedModel, TrainConfig, TrainOutput};

fn small(n: usize, q: f64, s: f64, seed: u64) -> DatasetBundle {
    generate(&SynthConfig { n, classes: 3, dim: 6, separation: s, homophily: q, mean_degree: 6.0, seed, ..SynthConfig::default() })
        .unwrap()
}

fn cfg(variant: Variant, epochs: usize) -> TrainConfig {
    let mut c = TrainConfig { epochs, ..TrainConfig::default() };
    c.model = ModelConfig { hidden_dim: 16, ..ModelConfig::new(Backbone::Gcn, variant, 1, 1) };
    c
}

fn checkpoint_bytes(out: &TrainOutput, c: &TrainConfig) -> Vec<u8> {
    encode_checkpoint(&SavedModel::from_output(out, c).to_checkpoint().unwrap()).unwrap()
}

#[test]
fn zero_epochs_returns_initialization() {
    let b = small(90, 0.5, 1.0, 1);
    for variant in [Variant::Plain, Variant::Fuzzy, Variant::Aux] {
        let c = cfg(variant, 0);
        let out = train_one(&b, &c, 5).unwrap();
        let stats = out.training.fact_stats();
        let init = ModelParams::init(&out.model, Some(&stats), &mut Rng::stream(5, 11)).unwrap();
        assert_eq!(out.params, init);
        assert!(out.log.records.is_empty());
    }
}

#[test]
fn separable_set_is_fit_exactly() {
    let b = generate(&SynthConfig {
        n: 60,
        classes: 3,
        dim: 4,
        separation: 8.0,
        homophily: 1.0,
        mean_degree: 4.0,
        seed: 3,
        ..SynthConfig::default()
    })
    .unwrap();
    let out = train_one(&b, &cfg(Variant::Plain, 200), 42).unwrap();
    let pred = out.predict(&b).unwrap();
    let train = &b.splits.train;
    let p: Vec<usize> = train.iter().map(|&u| pred.labels[u]).collect();
    let t: Vec<usize> = train.iter().map(|&u| b.labels[u]).collect();
    assert_eq!(accuracy(&p, &t).unwrap(), 1.0);
}

#[test]
fn same_seed_same_checkpoint_and_log() {
    let b = small(120, 0.5, 1.0, 2);
    for variant in [Variant::Plain, Variant::Fuzzy, Variant::Aux] {
        let c = cfg(variant, 15);
        let (x, y) = (train_one(&b, &c, 42).unwrap(), train_one(&b, &c, 42).unwrap());
        assert_eq!(checkpoint_bytes(&x, &c), checkpoint_bytes(&y, &c));
        assert_eq!(x.log.to_tsv(), y.log.to_tsv());
        let z = train_one(&b, &c, 43).unwrap();
        assert_ne!(checkpoint_bytes(&x, &c), checkpoint_bytes(&z, &c));
    }
}

#[test]
fn aux_with_zero_lambda_follows_plain_trajectory() {
    let b = small(120, 0.4, 1.0, 4);
    let plain = train_one(&b, &cfg(Variant::Plain, 30), 42).unwrap();
    let mut c = cfg(Variant::Aux, 30);
    c.lambda = 0.0;
    let aux = train_one(&b, &c, 42).unwrap();
    let shared = plain.params.tensors().len();
    for (a, p) in aux.params.tensors().iter().take(shared).zip(plain.params.tensors()) {
        let (a, p): (Vec<u64>, Vec<u64>) = (a.data().iter().map(|x| x.to_bits()).collect(), p.data().iter().map(|x| x.to_bits()).collect());
        assert_eq!(a, p);
    }
    for (r, s) in aux.log.records.iter().zip(&plain.log.records) {
        assert_eq!(r.loss.to_bits(), s.loss.to_bits());
    }
}

#[test]
fn val_and_test_labels_are_never_read_during_training() {
    let b = small(150, 0.4, 1.0, 5);
    let mut scrambled = b.clone();
    let mut hidden: Vec<usize> = b.splits.val.iter().chain(&b.splits.test).copied().collect();
    let values: Vec<usize> = hidden.iter().map(|&u| (b.labels[u] + 1) % 3).collect();
    Rng::new(9).shuffle(&mut hidden);
    for (&u, v) in hidden.iter().zip(values) {
        scrambled.labels[u] = v;
    }
    assert_ne!(scrambled.labels, b.labels);
    for variant in [Variant::Plain, Variant::Fuzzy, Variant::Aux] {
        let c = cfg(variant, 12);
        let (x, y) = (train_one(&b, &c, 42).unwrap(), train_one(&scrambled, &c, 42).unwrap());
        assert_eq!(checkpoint_bytes(&x, &c), checkpoint_bytes(&y, &c), "{variant}");
        assert_eq!(x.log.training_tsv(), y.log.training_tsv());
        assert_eq!(x.predict(&b).unwrap(), y.predict(&scrambled).unwrap());
    }
}

#[test]
fn eval_graph_is_inductive() {
    for b in [small(150, 0.4, 1.0, 6), {
        let mut b = small(150, 0.4, 1.0, 6);
        b.edges = None;
        b
    }] {
        let out = train_one(&b, &cfg(Variant::Plain, 0), 42).unwrap();
        let mut is_train = vec![false; b.n()];
        for &u in &b.splits.train {
            is_train[u] = true;
        }
        for (u, v) in out.eval.graph.edges() {
            assert!(is_train[u] || is_train[v], "edge ({u}, {v}) joins two held-out nodes");
        }
        let restricted = out.eval.graph.induced(&out.training.nodes);
        assert_eq!(restricted, out.training.graph);
    }
}

#[test]
fn easy_set_loss_halves_and_rules_stay_sane() {
    let b = small(300, 0.8, 3.0, 7);
    let out = train_one(&b, &cfg(Variant::Fuzzy, 200), 42).unwrap();
    let l = out.log.losses();
    assert!(l[l.len() - 1] <= 0.5 * l[0], "{} -> {}", l[0], l[l.len() - 1]);
    let theta = out.params.theta().unwrap();
    let alpha = out.params.alpha().unwrap();
    assert!(theta.iter().all(|t| t.is_finite()));
    assert!(alpha.iter().all(|a| a.abs() > 1e-3), "{alpha:?}");
}

#[test]
fn inference_is_repeatable_and_plain_matches_forward() {
    let b = small(100, 0.5, 1.0, 8);
    let out = train_one(&b, &cfg(Variant::Plain, 10), 42).unwrap();
    let p1 = out.predict(&b).unwrap();
    assert_eq!(p1, out.predict(&b).unwrap());
    let inputs = GraphInputs { features: &b.features, adjacency: &out.eval.adjacency, facts: None };
    let (logits, _) = forward(&out.params, &out.model, inputs, Mode::Eval).unwrap();
    assert_eq!(p1.probs, softmax_rows(&logits).unwrap());
    assert_eq!(p1.labels, argmax_rows(&logits));
}

#[test]
fn fuzzy_inference_matches_manual_two_pass() {
    let b = small(40, 0.5, 1.0, 9);
    let out = train_one(&b, &cfg(Variant::Fuzzy, 10), 42).unwrap();
    let g = &out.eval.graph;
    let n = b.n();
    let mut known = vec![false; n];
    let mut labels = vec![0; n];
    for &u in &b.splits.train {
        known[u] = true;
        labels[u] = b.labels[u];
    }
    let neutral = fact_matrix_with(g, &labels, &known, CenterLabel::NeutralIfUnlabeled);
    let run = |facts: &firegnn::Matrix| {
        let inputs = GraphInputs { features: &b.features, adjacency: &out.eval.adjacency, facts: Some(facts) };
        forward(&out.params, &out.model, inputs, Mode::Eval).unwrap().0
    };
    let provisional = argmax_rows(&run(neutral.matrix()));
    let mut second = neutral.clone();
    let mut with_pred = labels.clone();
    for u in (0..n).filter(|&u| !known[u]) {
        with_pred[u] = provisional[u];
    }
    for u in (0..n).filter(|&u| !known[u]) {
        second.0.set(u, 2, label_agreement_2hop(g, &with_pred, &known, u));
    }
    let logits = run(second.matrix());
    let pred = inference(&out.params, &out.model, &b, &out.eval).unwrap();
    assert_eq!(pred.labels, argmax_rows(&logits));
    assert_eq!(pred.probs, softmax_rows(&logits).unwrap());
    assert_eq!(pred.facts.unwrap(), second);
}

#[test]
fn cross_validation_shape() {
    let b = small(90, 0.5, 2.0, 10);
    let r = cross_validate(&b, &cfg(Variant::Fuzzy, 3)).unwrap();
    assert_eq!(r.runs.len(), 9);
    let pairs: Vec<(u64, usize)> = r.runs.iter().map(|x| (x.seed, x.fold)).collect();
    assert_eq!(pairs, [42, 43, 44].iter().flat_map(|&s| (0..3).map(move |f| (s, f))).collect::<Vec<_>>());
    for s in [r.std.accuracy, r.std.macro_f1, r.std.sensitivity, r.std.roc_auc] {
        assert!(s >= 0.0);
    }
    assert!(r.runs.iter().all(|x| x.theta.is_some()));
    let par = firegnn::train::cross_validate_parallel(&b, &cfg(Variant::Fuzzy, 3), 3).unwrap();
    assert_eq!(serde_json::to_string(&par).unwrap(), serde_json::to_string(&r).unwrap());
}
