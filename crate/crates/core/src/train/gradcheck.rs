use serde::Serialize;

use super::run::{DROPOUT_STREAM, INIT_STREAM};
use super::{aux_loss_grad, classification_loss_grad, total_loss, TrainingGraph};
use crate::error::{Error, Result};
use crate::graph::BuildConfig;
use crate::graphio::DatasetBundle;
use crate::model::{backward, forward, Backbone, GraphInputs, Mode, ModelConfig, ModelParams, OutputGradients, Variant};
use crate::numkit::{finite_diff_grad, relative_error, Rng};
use crate::synth::{generate, SynthConfig};

/// Worst coordinate of one tensor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorError {
    pub name: String,
    pub scalars: usize,
    /// Coordinates whose two probes straddled a rectifier kink.
    pub skipped: usize,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub backbone: Backbone,
    pub variant: Variant,
    pub tensors: Vec<TensorError>,
    pub max_rel_error: f64,
    pub checked: usize,
    pub skipped: usize,
}

/// 30 nodes, 3 classes, 6 features, every node in the training split.
pub fn gradcheck_fixture(seed: u64) -> Result<DatasetBundle> {
    generate(&SynthConfig {
        n: 30,
        classes: 3,
        dim: 6,
        separation: 1.0,
        homophily: 0.5,
        mean_degree: 4.0,
        train_frac: 1.0,
        val_frac: 0.0,
        test_frac: 0.0,
        seed,
    })
}

/// Compares [`backward`] with central differences of the training
/// objective (classification plus `0.5·aux` for the aux variant) at a
/// random initialization, in training mode with a fixed dropout mask.
///
/// A coordinate is skipped when its `+h` and `−h` probes see different
/// rectifier activation patterns: the difference quotient then spans a kink
/// and says nothing about the derivative. Skips are counted in the report.
pub fn gradient_check(
    bundle: &DatasetBundle,
    backbone: Backbone,
    variant: Variant,
    hidden_dim: usize,
    seed: u64,
    h: f64,
) -> Result<GradCheckReport> {
    let lambda = 0.5;
    let build = BuildConfig { seed, ..BuildConfig::default() };
    let training = TrainingGraph::build(bundle, &build)?;
    let model = ModelConfig {
        hidden_dim,
        ..ModelConfig::new(backbone, variant, bundle.dim(), bundle.num_classes())
    };
    let params = ModelParams::init(&model, Some(&training.fact_stats()), &mut Rng::stream(seed, INIT_STREAM))?;
    let inputs = GraphInputs {
        features: &training.features,
        adjacency: &training.adjacency,
        facts: (variant == Variant::Fuzzy).then(|| training.facts.matrix()),
    };
    let mask: Vec<usize> = (0..training.len()).collect();

    let objective = |p: &ModelParams<f64>| -> Result<(f64, ModelParams<f64>, Vec<bool>)> {
        let mut rng = Rng::stream(seed, DROPOUT_STREAM);
        let (logits, trace) = forward(p, &model, inputs, Mode::Train(&mut rng))?;
        let (cls, d_logits) = classification_loss_grad(&logits, &training.labels, &mask)?;
        let mut up = OutputGradients { logits: d_logits, homophily: None, entropy: None };
        let mut loss = cls;
        if let Some((hp, sp)) = trace.aux_outputs() {
            let (l, mut dh, mut ds) = aux_loss_grad(hp, sp, &training.aux, &mask)?;
            dh.iter_mut().chain(ds.iter_mut()).for_each(|g| *g *= lambda);
            loss = total_loss(cls, l, lambda);
            up.homophily = Some(dh);
            up.entropy = Some(ds);
        }
        Ok((loss, backward(&trace, p, inputs, &up)?, trace.relu_pattern()))
    };

    let (_, grads, _) = objective(&params)?;
    let analytic = grads.to_flat();
    let mut scratch = params.clone();
    let mut failure = None;
    let mut patterns = Vec::new();
    let numeric = finite_diff_grad(
        |flat| {
            scratch.set_flat(flat).expect("same length");
            match objective(&scratch) {
                Ok((l, _, pattern)) => {
                    patterns.push(pattern);
                    l
                }
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            }
        },
        &params.to_flat(),
        h,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let numeric = numeric?;

    let mut tensors = Vec::new();
    let mut pos = 0;
    for (name, t) in params.named_tensors() {
        let len = t.data().len();
        // probes run in (+h, −h) order per coordinate
        let smooth: Vec<usize> = (pos..pos + len).filter(|&i| patterns[2 * i] == patterns[2 * i + 1]).collect();
        let worst = smooth.iter().map(|&i| relative_error(analytic[i], numeric[i])).fold(0.0, f64::max);
        tensors.push(TensorError { name, scalars: len, skipped: len - smooth.len(), max_rel_error: worst });
        pos += len;
    }
    let max_rel_error = tensors.iter().map(|t| t.max_rel_error).fold(0.0, f64::max);
    if !max_rel_error.is_finite() {
        return Err(Error::NonFinite("gradient check error".into()));
    }
    let checked = params.num_scalars();
    let skipped = tensors.iter().map(|t| t.skipped).sum();
    Ok(GradCheckReport { backbone, variant, tensors, max_rel_error, checked, skipped })
}
