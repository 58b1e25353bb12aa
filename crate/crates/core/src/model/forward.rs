use super::layers::{affine, mlp_forward, MlpCache};
use super::{BackboneLayer, Mlp, ModelConfig, ModelParams, Variant};
use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;
use crate::numkit::{relu, sigmoid, softplus, DenseMatrix, Rng, Scalar};

/// Graph-side inputs shared by every forward pass over one graph.
#[derive(Debug, Clone, Copy)]
pub struct GraphInputs<'a, T> {
    pub features: &'a DenseMatrix<T>,
    pub adjacency: &'a NormalizedAdjacency,
    /// `n × 3` fact vectors; required by the fuzzy variant.
    pub facts: Option<&'a DenseMatrix<T>>,
}

/// Evaluation, or training with dropout masks drawn from the given stream.
#[derive(Debug)]
pub enum Mode<'a> {
    Eval,
    Train(&'a mut Rng),
}

#[derive(Debug, Clone)]
enum LayerCache<T> {
    Gcn { propagated: DenseMatrix<T>, pre: DenseMatrix<T> },
    Gin { summed: DenseMatrix<T>, mlp: MlpCache<T> },
}

impl<T> LayerCache<T> {
    fn pre(&self) -> &DenseMatrix<T> {
        match self {
            LayerCache::Gcn { pre, .. } => pre,
            LayerCache::Gin { mlp, .. } => &mlp.out,
        }
    }
}

#[derive(Debug, Clone)]
struct FuzzyCache<T> {
    rules: DenseMatrix<T>,
    embed: DenseMatrix<T>,
    joined: DenseMatrix<T>,
    gate: DenseMatrix<T>,
}

#[derive(Debug, Clone)]
struct AuxCache<T> {
    homophily: MlpCache<T>,
    entropy: MlpCache<T>,
    homophily_out: Vec<T>,
    entropy_out: Vec<T>,
}

/// Activations cached by [`forward`] for [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardTrace<T> {
    fingerprint: u64,
    variant: Variant,
    layers: Vec<LayerCache<T>>,
    dropout_mask: Option<DenseMatrix<T>>,
    embedding: DenseMatrix<T>,
    fuzzy: Option<FuzzyCache<T>>,
    fused: DenseMatrix<T>,
    aux: Option<AuxCache<T>>,
    logits: DenseMatrix<T>,
}

impl<T: Scalar> ForwardTrace<T> {
    pub fn logits(&self) -> &DenseMatrix<T> {
        &self.logits
    }

    /// Backbone output `h`.
    pub fn embedding(&self) -> &DenseMatrix<T> {
        &self.embedding
    }

    /// Classifier input `h'` (equal to `h` outside the fuzzy variant).
    pub fn fused(&self) -> &DenseMatrix<T> {
        &self.fused
    }

    pub fn rule_strengths(&self) -> Option<&DenseMatrix<T>> {
        self.fuzzy.as_ref().map(|f| &f.rules)
    }

    pub fn rule_embedding(&self) -> Option<&DenseMatrix<T>> {
        self.fuzzy.as_ref().map(|f| &f.embed)
    }

    pub fn gate(&self) -> Option<&DenseMatrix<T>> {
        self.fuzzy.as_ref().map(|f| &f.gate)
    }

    /// Predicted `(homophily, entropy)` per node in the aux variant.
    pub fn aux_outputs(&self) -> Option<(&[T], &[T])> {
        self.aux.as_ref().map(|a| (a.homophily_out.as_slice(), a.entropy_out.as_slice()))
    }

    /// Which inputs of every rectifier were positive. Two traces with equal
    /// patterns lie on the same linear piece of each rectifier.
    pub fn relu_pattern(&self) -> Vec<bool> {
        let mut out = Vec::new();
        let mut push = |m: &DenseMatrix<T>| out.extend(m.data().iter().map(|&z| z > T::zero()));
        let last = self.layers.len().saturating_sub(1);
        for (l, cache) in self.layers.iter().enumerate() {
            if let LayerCache::Gin { mlp, .. } = cache {
                push(&mlp.hidden_pre);
            }
            if l != last {
                push(cache.pre());
            }
        }
        if let Some(a) = &self.aux {
            push(&a.homophily.hidden_pre);
            push(&a.entropy.hidden_pre);
        }
        out
    }
}

/// Upstream gradients of the loss with respect to the model outputs.
#[derive(Debug, Clone)]
pub struct OutputGradients<T> {
    pub logits: DenseMatrix<T>,
    pub homophily: Option<Vec<T>>,
    pub entropy: Option<Vec<T>>,
}

fn relu_mask_in_place<T: Scalar>(grad: &mut DenseMatrix<T>, pre: &DenseMatrix<T>) {
    for (g, &z) in grad.data_mut().iter_mut().zip(pre.data()) {
        if z <= T::zero() {
            *g = T::zero();
        }
    }
}

/// Runs the model: backbone, then (fuzzy variant) rule activation, rule
/// embedding, gate and fusion, then the linear classifier; the aux variant
/// also evaluates the regression heads on the backbone output. Dropout acts
/// on the output of the first layer in training mode only.
pub fn forward<T: Scalar>(
    params: &ModelParams<T>,
    config: &ModelConfig,
    inputs: GraphInputs<'_, T>,
    mut mode: Mode<'_>,
) -> Result<(DenseMatrix<T>, ForwardTrace<T>)> {
    config.validate()?;
    if params.layers.len() != config.layers {
        return Err(Error::InvalidArgument(format!(
            "config has {} layers, parameters {}",
            config.layers,
            params.layers.len()
        )));
    }
    let n = inputs.features.rows();
    if inputs.adjacency.n() != n {
        return Err(Error::Shape { op: "forward", left: (n, n), right: (inputs.adjacency.n(), inputs.adjacency.n()) });
    }
    let last = config.layers - 1;
    let mut h = inputs.features.clone();
    let mut caches = Vec::with_capacity(config.layers);
    let mut dropout_mask = None;
    for (l, layer) in params.layers.iter().enumerate() {
        let cache = match layer {
            BackboneLayer::Gcn { weight } => {
                let propagated = inputs.adjacency.apply(&h)?;
                let pre = propagated.matmul(weight)?;
                LayerCache::Gcn { propagated, pre }
            }
            BackboneLayer::Gin { mlp } => {
                let summed = h.add(&inputs.adjacency.graph().aggregate(&h)?)?;
                let mlp = mlp_forward(mlp, &summed)?;
                LayerCache::Gin { summed, mlp }
            }
        };
        h = if l == last { cache.pre().clone() } else { cache.pre().map(relu) };
        if l == 0 && l != last && config.dropout > 0.0 {
            if let Mode::Train(rng) = &mut mode {
                let keep = 1.0 - config.dropout;
                let scale = T::of(1.0 / keep);
                let data = (0..h.data().len()).map(|_| if rng.bernoulli(keep) { scale } else { T::zero() }).collect();
                let mask = DenseMatrix::new(h.rows(), h.cols(), data)?;
                h = h.hadamard(&mask)?;
                dropout_mask = Some(mask);
            }
        }
        caches.push(cache);
    }
    let embedding = h;

    let (fused, fuzzy) = match config.variant {
        Variant::Fuzzy => {
            let (fz, fu) = params
                .fuzzy
                .as_ref()
                .zip(params.fusion.as_ref())
                .ok_or_else(|| Error::InvalidArgument("fuzzy variant without fuzzy parameters".into()))?;
            let facts = inputs
                .facts
                .ok_or_else(|| Error::InvalidArgument("fuzzy variant needs fact vectors".into()))?;
            if facts.shape() != (n, 3) {
                return Err(Error::Shape { op: "forward facts", left: (n, 3), right: facts.shape() });
            }
            let rules = super::rule_activation(facts, fz.theta.data(), fz.alpha.data())?;
            let embed = affine(&rules, &fu.w_r, &fu.b_r)?;
            let joined = embedding.hstack(&embed)?;
            let gate = affine(&joined, &fu.w_g, &fu.b_g)?.map(sigmoid);
            let fused = super::fuse(&embedding, &embed, &gate)?;
            (fused, Some(FuzzyCache { rules, embed, joined, gate }))
        }
        _ => (embedding.clone(), None),
    };

    let mut logits = fused.matmul_nt(&params.classifier_w)?;
    logits.add_row_broadcast(params.classifier_b.data())?;

    let aux = match config.variant {
        Variant::Aux => {
            let heads = params
                .aux
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("aux variant without aux heads".into()))?;
            let homophily = mlp_forward(&heads.homophily, &embedding)?;
            let entropy = mlp_forward(&heads.entropy, &embedding)?;
            let homophily_out = homophily.out.data().iter().map(|&z| sigmoid(z)).collect();
            let entropy_out = entropy.out.data().iter().map(|&z| softplus(z)).collect();
            Some(AuxCache { homophily, entropy, homophily_out, entropy_out })
        }
        _ => None,
    };

    let trace = ForwardTrace {
        fingerprint: params.fingerprint(),
        variant: config.variant,
        layers: caches,
        dropout_mask,
        embedding,
        fuzzy,
        fused,
        aux,
        logits: logits.clone(),
    };
    Ok((logits, trace))
}

/// Gradients of an MLP head given `d out`; returns `d input`.
fn mlp_backward<T: Scalar>(
    mlp: &Mlp<T>,
    cache: &MlpCache<T>,
    input: &DenseMatrix<T>,
    d_out: &DenseMatrix<T>,
    grads: &mut Mlp<T>,
) -> Result<DenseMatrix<T>> {
    grads.w2.add_assign(&d_out.matmul_tn(&cache.hidden)?)?;
    grads.b2.add_assign(&DenseMatrix::new(1, d_out.cols(), d_out.column_sums())?)?;
    let mut d_hidden = d_out.matmul(&mlp.w2)?;
    relu_mask_in_place(&mut d_hidden, &cache.hidden_pre);
    grads.w1.add_assign(&d_hidden.matmul_tn(input)?)?;
    grads.b1.add_assign(&DenseMatrix::new(1, d_hidden.cols(), d_hidden.column_sums())?)?;
    d_hidden.matmul(&mlp.w1)
}

/// Reverse-mode gradients of every parameter, given upstream gradients of
/// the logits and (aux variant) of the two head outputs.
pub fn backward<T: Scalar>(
    trace: &ForwardTrace<T>,
    params: &ModelParams<T>,
    inputs: GraphInputs<'_, T>,
    upstream: &OutputGradients<T>,
) -> Result<ModelParams<T>> {
    if trace.fingerprint != params.fingerprint() || trace.layers.len() != params.layers.len() {
        return Err(Error::StaleTrace);
    }
    let n = trace.logits.rows();
    if upstream.logits.shape() != trace.logits.shape() {
        return Err(Error::Shape { op: "backward", left: trace.logits.shape(), right: upstream.logits.shape() });
    }
    let mut grads = params.zeros_like();
    let d_logits = &upstream.logits;
    grads.classifier_w = d_logits.matmul_tn(&trace.fused)?;
    grads.classifier_b = DenseMatrix::new(1, d_logits.cols(), d_logits.column_sums())?;
    let d_fused = d_logits.matmul(&params.classifier_w)?;

    let mut d_h = match (&trace.fuzzy, trace.variant) {
        (Some(fc), Variant::Fuzzy) => {
            let fz = params.fuzzy.as_ref().ok_or(Error::StaleTrace)?;
            let fu = params.fusion.as_ref().ok_or(Error::StaleTrace)?;
            let facts = inputs
                .facts
                .ok_or_else(|| Error::InvalidArgument("fuzzy variant needs fact vectors".into()))?;
            let d = trace.embedding.cols();
            let mut d_h = DenseMatrix::zeros(n, d);
            let mut d_e = DenseMatrix::zeros(n, d);
            let mut d_zg = DenseMatrix::zeros(n, d);
            for i in 0..n * d {
                let g = fc.gate.data()[i];
                let up = d_fused.data()[i];
                d_h.data_mut()[i] = up * g;
                d_e.data_mut()[i] = up * (T::one() - g);
                let d_g = up * (trace.embedding.data()[i] - fc.embed.data()[i]);
                d_zg.data_mut()[i] = d_g * g * (T::one() - g);
            }
            let gf = grads.fusion.as_mut().expect("fusion grads");
            gf.w_g = d_zg.matmul_tn(&fc.joined)?;
            gf.b_g = DenseMatrix::new(1, d, d_zg.column_sums())?;
            let (d_join_h, d_join_e) = d_zg.matmul(&fu.w_g)?.split_cols(d);
            d_h.add_assign(&d_join_h)?;
            d_e.add_assign(&d_join_e)?;
            gf.w_r = d_e.matmul_tn(&fc.rules)?;
            gf.b_r = DenseMatrix::new(1, d, d_e.column_sums())?;
            let d_rules = d_e.matmul(&fu.w_r)?;
            let gz = grads.fuzzy.as_mut().expect("fuzzy grads");
            let (theta, alpha) = (fz.theta.data(), fz.alpha.data());
            for u in 0..n {
                for i in 0..3 {
                    let r = fc.rules.get(u, i);
                    let d_z = d_rules.get(u, i) * r * (T::one() - r);
                    gz.alpha.data_mut()[i] += d_z * (facts.get(u, i) - theta[i]);
                    gz.theta.data_mut()[i] -= d_z * alpha[i];
                }
            }
            d_h
        }
        _ => d_fused,
    };

    if let (Some(ac), Variant::Aux) = (&trace.aux, trace.variant) {
        let heads = params.aux.as_ref().ok_or(Error::StaleTrace)?;
        let ga = grads.aux.as_mut().expect("aux grads");
        if let Some(up) = &upstream.homophily {
            let d_out: Vec<T> = up.iter().zip(&ac.homophily_out).map(|(&g, &y)| g * y * (T::one() - y)).collect();
            let d_out = DenseMatrix::column(d_out);
            d_h.add_assign(&mlp_backward(&heads.homophily, &ac.homophily, &trace.embedding, &d_out, &mut ga.homophily)?)?;
        }
        if let Some(up) = &upstream.entropy {
            let d_out: Vec<T> = up.iter().zip(ac.entropy.out.data()).map(|(&g, &z)| g * sigmoid(z)).collect();
            let d_out = DenseMatrix::column(d_out);
            d_h.add_assign(&mlp_backward(&heads.entropy, &ac.entropy, &trace.embedding, &d_out, &mut ga.entropy)?)?;
        }
    }

    let last = params.layers.len() - 1;
    let mut d_out = d_h;
    for l in (0..params.layers.len()).rev() {
        if l == 0 {
            if let Some(mask) = &trace.dropout_mask {
                d_out = d_out.hadamard(mask)?;
            }
        }
        let cache = &trace.layers[l];
        if l != last {
            relu_mask_in_place(&mut d_out, cache.pre());
        }
        let d_in = match (&params.layers[l], cache, &mut grads.layers[l]) {
            (BackboneLayer::Gcn { weight }, LayerCache::Gcn { propagated, .. }, BackboneLayer::Gcn { weight: gw }) => {
                *gw = propagated.matmul_tn(&d_out)?;
                if l > 0 {
                    Some(inputs.adjacency.apply(&d_out.matmul_nt(weight)?)?)
                } else {
                    None
                }
            }
            (BackboneLayer::Gin { mlp }, LayerCache::Gin { summed, mlp: mc }, BackboneLayer::Gin { mlp: gm }) => {
                let d_summed = mlp_backward(mlp, mc, summed, &d_out, gm)?;
                if l > 0 {
                    Some(d_summed.add(&inputs.adjacency.graph().aggregate(&d_summed)?)?)
                } else {
                    None
                }
            }
            _ => return Err(Error::StaleTrace),
        };
        if let Some(d) = d_in {
            d_out = d;
        }
    }
    Ok(grads)
}
