use firegnn::graph::{symmetrize, NormalizedAdjacency};
use firegnn::model::{
    backward, forward, fuse, gate, gcn_layer_forward, rule_activation, rule_embed, Backbone, BackboneLayer, GraphInputs,
    Mode, ModelConfig, ModelParams, OutputGradients, Variant,
};
use firegnn::numkit::{DenseMatrix, Rng};
use firegnn::topo::{fact_matrix_with, CenterLabel};
use firegnn::{Error, Matrix};

struct Fixture {
    features: Matrix,
    adjacency: NormalizedAdjacency,
    facts: Matrix,
}

fn fixture(n: usize, dim: usize, seed: u64) -> Fixture {
    let mut rng = Rng::new(seed);
    let mut edges: Vec<(usize, usize)> = (1..n).map(|u| (u - 1, u)).collect();
    edges.extend((0..n).filter_map(|u| {
        let v = (u + 2 + rng.below(n - 3)) % n;
        (u != v).then_some((u, v))
    }));
    let graph = symmetrize(n, &edges).unwrap();
    let features = DenseMatrix::new(n, dim, (0..n * dim).map(|_| rng.normal()).collect()).unwrap();
    let labels: Vec<usize> = (0..n).map(|u| u % 3).collect();
    let facts = fact_matrix_with(&graph, &labels, &vec![true; n], CenterLabel::Given).0;
    Fixture { features, adjacency: NormalizedAdjacency::new(&graph), facts }
}

fn inputs(f: &Fixture) -> GraphInputs<'_, f64> {
    GraphInputs { features: &f.features, adjacency: &f.adjacency, facts: Some(&f.facts) }
}

fn model(backbone: Backbone, variant: Variant, dim: usize, seed: u64) -> (ModelConfig, ModelParams<f64>) {
    let cfg = ModelConfig { hidden_dim: 8, ..ModelConfig::new(backbone, variant, dim, 3) };
    let params = ModelParams::init(&cfg, None, &mut Rng::new(seed)).unwrap();
    (cfg, params)
}

#[test]
fn saturated_gate_reduces_to_plain() {
    let f = fixture(12, 5, 1);
    let (fcfg, mut fuzzy) = model(Backbone::Gcn, Variant::Fuzzy, 5, 2);
    fuzzy.fusion.as_mut().unwrap().b_g = DenseMatrix::new(1, 8, vec![60.0; 8]).unwrap();
    let (pcfg, mut plain) = model(Backbone::Gcn, Variant::Plain, 5, 3);
    plain.layers = fuzzy.layers.clone();
    plain.classifier_w = fuzzy.classifier_w.clone();
    plain.classifier_b = fuzzy.classifier_b.clone();
    let (a, _) = forward(&fuzzy, &fcfg, inputs(&f), Mode::Eval).unwrap();
    let (b, _) = forward(&plain, &pcfg, inputs(&f), Mode::Eval).unwrap();
    for (x, y) in a.data().iter().zip(b.data()) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn fusion_is_a_convex_combination() {
    let f = fixture(20, 4, 4);
    for backbone in [Backbone::Gcn, Backbone::Gin] {
        let (cfg, params) = model(backbone, Variant::Fuzzy, 4, 5);
        let (_, trace) = forward(&params, &cfg, inputs(&f), Mode::Eval).unwrap();
        let (h, e, g, out) = (trace.embedding(), trace.rule_embedding().unwrap(), trace.gate().unwrap(), trace.fused());
        for i in 0..out.data().len() {
            let (lo, hi) = (h.data()[i].min(e.data()[i]), h.data()[i].max(e.data()[i]));
            let gi = g.data()[i];
            assert!(gi > 0.0 && gi < 1.0);
            assert!(out.data()[i] >= lo - 1e-12 && out.data()[i] <= hi + 1e-12);
        }
    }
}

#[test]
fn rule_activation_is_monotone_in_the_fact() {
    let xs: Vec<f64> = (0..50).map(|i| -3.0 + 0.13 * i as f64).collect();
    for alpha in [0.3, 2.0, 9.0] {
        let facts = DenseMatrix::new(xs.len(), 3, xs.iter().flat_map(|&x| [x, x, x]).collect()).unwrap();
        let r = rule_activation(&facts, &[0.5, -0.2, 1.0], &[alpha, -alpha, alpha]).unwrap();
        for u in 1..xs.len() {
            assert!(r.get(u, 0) > r.get(u - 1, 0));
            assert!(r.get(u, 1) < r.get(u - 1, 1));
            assert!(r.get(u, 2) >= r.get(u - 1, 2));
        }
    }
}

#[test]
fn forward_is_the_composition_of_its_layers() {
    let f = fixture(6, 3, 6);
    let (cfg, params) = model(Backbone::Gcn, Variant::Fuzzy, 3, 7);
    let (logits, _) = forward(&params, &cfg, inputs(&f), Mode::Eval).unwrap();
    let mut h = f.features.clone();
    for (l, layer) in params.layers.iter().enumerate() {
        let BackboneLayer::Gcn { weight } = layer else { unreachable!() };
        h = gcn_layer_forward(&h, &f.adjacency, weight, l + 1 == params.layers.len()).unwrap();
    }
    let fz = params.fuzzy.as_ref().unwrap();
    let fu = params.fusion.as_ref().unwrap();
    let r = rule_activation(&f.facts, fz.theta.data(), fz.alpha.data()).unwrap();
    let e = rule_embed(&r, &fu.w_r, &fu.b_r).unwrap();
    let g = gate(&h, &e, &fu.w_g, &fu.b_g).unwrap();
    let fused = fuse(&h, &e, &g).unwrap();
    for u in 0..6 {
        for c in 0..3 {
            let manual: f64 = params.classifier_b.get(0, c)
                + (0..8).map(|j| fused.get(u, j) * params.classifier_w.get(c, j)).sum::<f64>();
            assert!((manual - logits.get(u, c)).abs() < 1e-12, "node {u} class {c}");
        }
    }
}

#[test]
fn forward_is_deterministic() {
    let f = fixture(15, 4, 8);
    for variant in [Variant::Plain, Variant::Fuzzy, Variant::Aux] {
        let (mut cfg, params) = model(Backbone::Gin, variant, 4, 9);
        cfg.dropout = 0.5;
        let (a, _) = forward(&params, &cfg, inputs(&f), Mode::Eval).unwrap();
        let (b, _) = forward(&params, &cfg, inputs(&f), Mode::Eval).unwrap();
        assert_eq!(a, b);
        let (c, _) = forward(&params, &cfg, inputs(&f), Mode::Train(&mut Rng::new(3))).unwrap();
        let (d, _) = forward(&params, &cfg, inputs(&f), Mode::Train(&mut Rng::new(3))).unwrap();
        assert_eq!(c, d);
        assert_ne!(a, c);
    }
}

#[test]
fn zero_upstream_gives_zero_gradients() {
    let f = fixture(15, 4, 10);
    for backbone in [Backbone::Gcn, Backbone::Gin] {
        for variant in [Variant::Plain, Variant::Fuzzy, Variant::Aux] {
            let (cfg, params) = model(backbone, variant, 4, 11);
            let (logits, trace) = forward(&params, &cfg, inputs(&f), Mode::Eval).unwrap();
            let aux = (variant == Variant::Aux).then(|| vec![0.0; 15]);
            let up = OutputGradients { logits: DenseMatrix::zeros(logits.rows(), logits.cols()), homophily: aux.clone(), entropy: aux };
            let grads = backward(&trace, &params, inputs(&f), &up).unwrap();
            assert!(grads.to_flat().iter().all(|&g| g == 0.0));
            assert_eq!(grads.shapes(), params.shapes());
        }
    }
}

#[test]
fn backward_rejects_a_stale_trace() {
    let f = fixture(10, 3, 12);
    let (cfg, mut params) = model(Backbone::Gcn, Variant::Fuzzy, 3, 13);
    let (logits, trace) = forward(&params, &cfg, inputs(&f), Mode::Eval).unwrap();
    params.classifier_b.set(0, 0, 1.5);
    let up = OutputGradients { logits: logits.clone(), homophily: None, entropy: None };
    assert!(matches!(backward(&trace, &params, inputs(&f), &up), Err(Error::StaleTrace)));
}

#[test]
fn single_precision_tracks_double() {
    let f = fixture(25, 4, 14);
    let facts32 = f.facts.cast::<f32>();
    let features32 = f.features.cast::<f32>();
    for variant in [Variant::Plain, Variant::Fuzzy, Variant::Aux] {
        let (cfg, params) = model(Backbone::Gcn, variant, 4, 15);
        let p32 = ModelParams::<f32>::from_tensors(&cfg, params.tensors().iter().map(|t| t.cast()).collect()).unwrap();
        let (a, _) = forward(&params, &cfg, inputs(&f), Mode::Eval).unwrap();
        let i32 = GraphInputs { features: &features32, adjacency: &f.adjacency, facts: Some(&facts32) };
        let (b, _) = forward(&p32, &cfg, i32, Mode::Eval).unwrap();
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - *y as f64).abs() < 1e-4, "{x} vs {y}");
        }
    }
}
