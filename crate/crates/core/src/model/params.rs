use std::hash::{Hash, Hasher};

use super::{Backbone, ModelConfig, Variant, NUM_RULES};
use crate::error::{Error, Result};
use crate::numkit::{DenseMatrix, Rng, Scalar};

/// Two-layer perceptron `relu(x·W1ᵀ + b1)·W2ᵀ + b2` with weights stored
/// output-major (`W1: hidden × in`, `W2: out × hidden`).
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    pub w1: DenseMatrix<T>,
    pub b1: DenseMatrix<T>,
    pub w2: DenseMatrix<T>,
    pub b2: DenseMatrix<T>,
}

/// One backbone layer. GCN weights are `in × out`; GIN layers hold their MLP.
#[derive(Debug, Clone, PartialEq)]
pub enum BackboneLayer<T> {
    Gcn { weight: DenseMatrix<T> },
    Gin { mlp: Mlp<T> },
}

/// Rule thresholds θ and sharpness α, each `1 × 3`.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyParams<T> {
    pub theta: DenseMatrix<T>,
    pub alpha: DenseMatrix<T>,
}

/// Rule projection (`W_r: d × 3`, `b_r: 1 × d`) and gate (`W_g: d × 2d`,
/// `b_g: 1 × d`).
#[derive(Debug, Clone, PartialEq)]
pub struct FusionParams<T> {
    pub w_r: DenseMatrix<T>,
    pub b_r: DenseMatrix<T>,
    pub w_g: DenseMatrix<T>,
    pub b_g: DenseMatrix<T>,
}

/// Regression heads `d → d/2 → 1` for homophily and similarity entropy.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxHeads<T> {
    pub homophily: Mlp<T>,
    pub entropy: Mlp<T>,
}

/// Every trainable tensor. The same type carries gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub layers: Vec<BackboneLayer<T>>,
    pub classifier_w: DenseMatrix<T>,
    pub classifier_b: DenseMatrix<T>,
    pub fuzzy: Option<FuzzyParams<T>>,
    pub fusion: Option<FusionParams<T>>,
    pub aux: Option<AuxHeads<T>>,
}

/// Training-set statistics of the fact columns used to center θ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactStats {
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

fn uniform<T: Scalar>(rows: usize, cols: usize, fan_in: usize, rng: &mut Rng) -> DenseMatrix<T> {
    let bound = 1.0 / (fan_in as f64).sqrt();
    let data = (0..rows * cols).map(|_| T::of(rng.uniform(-bound, bound))).collect();
    DenseMatrix::new(rows, cols, data).expect("sized")
}

impl<T: Scalar> Mlp<T> {
    fn init(input: usize, hidden: usize, output: usize, rng: &mut Rng) -> Self {
        Self {
            w1: uniform(hidden, input, input, rng),
            b1: DenseMatrix::zeros(1, hidden),
            w2: uniform(output, hidden, hidden, rng),
            b2: DenseMatrix::zeros(1, output),
        }
    }

    fn tensors(&self) -> [&DenseMatrix<T>; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }

    fn tensors_mut(&mut self) -> [&mut DenseMatrix<T>; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }
}

impl<T: Scalar> ModelParams<T> {
    /// Random initialization.
    ///
    /// Weights are uniform in `±1/√fan_in`, biases zero, α = 1 and
    /// θ_i = mean_i + 0.01·std_i·N(0, 1) from the training facts (0 without
    /// stats). Tensors are drawn in the order backbone, classifier, fuzzy,
    /// fusion, aux heads, so variants share their common prefix.
    pub fn init(config: &ModelConfig, stats: Option<&FactStats>, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let d = config.hidden_dim;
        let layers = (0..config.layers)
            .map(|l| {
                let input = if l == 0 { config.input_dim } else { d };
                match config.backbone {
                    Backbone::Gcn => BackboneLayer::Gcn { weight: uniform(input, d, input, rng) },
                    Backbone::Gin => BackboneLayer::Gin { mlp: Mlp::init(input, d, d, rng) },
                }
            })
            .collect();
        let classifier_w = uniform(config.num_classes, d, d, rng);
        let classifier_b = DenseMatrix::zeros(1, config.num_classes);
        let (fuzzy, fusion) = if config.variant == Variant::Fuzzy {
            let stats = stats.copied().unwrap_or(FactStats { mean: [0.0; 3], std: [0.0; 3] });
            let theta = (0..NUM_RULES).map(|i| T::of(stats.mean[i] + 0.01 * stats.std[i] * rng.normal())).collect();
            let fuzzy = FuzzyParams {
                theta: DenseMatrix::new(1, NUM_RULES, theta)?,
                alpha: DenseMatrix::filled(1, NUM_RULES, T::one()),
            };
            let fusion = FusionParams {
                w_r: uniform(d, NUM_RULES, NUM_RULES, rng),
                b_r: DenseMatrix::zeros(1, d),
                w_g: uniform(d, 2 * d, 2 * d, rng),
                b_g: DenseMatrix::zeros(1, d),
            };
            (Some(fuzzy), Some(fusion))
        } else {
            (None, None)
        };
        let aux = (config.variant == Variant::Aux).then(|| AuxHeads {
            homophily: Mlp::init(d, config.aux_hidden(), 1, rng),
            entropy: Mlp::init(d, config.aux_hidden(), 1, rng),
        });
        Ok(Self { layers, classifier_w, classifier_b, fuzzy, fusion, aux })
    }

    /// All tensors with their checkpoint names, in checkpoint order.
    pub fn named_tensors(&self) -> Vec<(String, &DenseMatrix<T>)> {
        let mut out: Vec<(String, &DenseMatrix<T>)> = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            match layer {
                BackboneLayer::Gcn { weight } => out.push((format!("layer{l}.weight"), weight)),
                BackboneLayer::Gin { mlp } => {
                    for (name, t) in ["w1", "b1", "w2", "b2"].iter().zip(mlp.tensors()) {
                        out.push((format!("layer{l}.mlp.{name}"), t));
                    }
                }
            }
        }
        out.push(("classifier.weight".into(), &self.classifier_w));
        out.push(("classifier.bias".into(), &self.classifier_b));
        if let Some(f) = &self.fuzzy {
            out.push(("fuzzy.theta".into(), &f.theta));
            out.push(("fuzzy.alpha".into(), &f.alpha));
        }
        if let Some(f) = &self.fusion {
            out.push(("fusion.w_r".into(), &f.w_r));
            out.push(("fusion.b_r".into(), &f.b_r));
            out.push(("fusion.w_g".into(), &f.w_g));
            out.push(("fusion.b_g".into(), &f.b_g));
        }
        if let Some(a) = &self.aux {
            for (head, mlp) in [("homophily", &a.homophily), ("entropy", &a.entropy)] {
                for (name, t) in ["w1", "b1", "w2", "b2"].iter().zip(mlp.tensors()) {
                    out.push((format!("aux.{head}.{name}"), t));
                }
            }
        }
        out
    }

    pub fn tensors(&self) -> Vec<&DenseMatrix<T>> {
        self.named_tensors().into_iter().map(|(_, t)| t).collect()
    }

    /// Mutable tensors in the same order as [`named_tensors`](Self::named_tensors).
    pub fn tensors_mut(&mut self) -> Vec<&mut DenseMatrix<T>> {
        let mut out: Vec<&mut DenseMatrix<T>> = Vec::new();
        for layer in &mut self.layers {
            match layer {
                BackboneLayer::Gcn { weight } => out.push(weight),
                BackboneLayer::Gin { mlp } => out.extend(mlp.tensors_mut()),
            }
        }
        out.push(&mut self.classifier_w);
        out.push(&mut self.classifier_b);
        if let Some(f) = &mut self.fuzzy {
            out.push(&mut f.theta);
            out.push(&mut f.alpha);
        }
        if let Some(f) = &mut self.fusion {
            out.extend([&mut f.w_r, &mut f.b_r, &mut f.w_g, &mut f.b_g]);
        }
        if let Some(a) = &mut self.aux {
            out.extend(a.homophily.tensors_mut());
            out.extend(a.entropy.tensors_mut());
        }
        out
    }

    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.tensors().iter().map(|t| t.shape()).collect()
    }

    /// Same structure, every entry zero.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.data_mut().fill(T::zero());
        }
        z
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors().iter().map(|t| t.data().len()).sum()
    }

    pub fn to_flat(&self) -> Vec<T> {
        self.tensors().iter().flat_map(|t| t.data().iter().copied()).collect()
    }

    pub fn set_flat(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.num_scalars() {
            return Err(Error::InvalidArgument(format!(
                "flat vector has {} entries, parameters have {}",
                flat.len(),
                self.num_scalars()
            )));
        }
        let mut pos = 0;
        for t in self.tensors_mut() {
            let len = t.data().len();
            t.data_mut().copy_from_slice(&flat[pos..pos + len]);
            pos += len;
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.all_finite())
    }

    /// Hash of every parameter bit pattern; ties a forward trace to the
    /// parameters that produced it.
    pub fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for t in self.tensors() {
            t.shape().hash(&mut h);
            for v in t.data() {
                v.as_f64().to_bits().hash(&mut h);
            }
        }
        h.finish()
    }

    pub fn theta(&self) -> Option<[T; 3]> {
        self.fuzzy.as_ref().map(|f| {
            let d = f.theta.data();
            [d[0], d[1], d[2]]
        })
    }

    pub fn alpha(&self) -> Option<[T; 3]> {
        self.fuzzy.as_ref().map(|f| {
            let d = f.alpha.data();
            [d[0], d[1], d[2]]
        })
    }

    /// Rebuilds parameters for `config` from tensors in checkpoint order.
    pub fn from_tensors(config: &ModelConfig, tensors: Vec<DenseMatrix<T>>) -> Result<Self> {
        let mut template = Self::init(config, None, &mut Rng::new(0))?;
        let shapes = template.shapes();
        if tensors.len() != shapes.len() {
            return Err(Error::Validation(format!(
                "expected {} tensors for this configuration, found {}",
                shapes.len(),
                tensors.len()
            )));
        }
        for ((slot, t), shape) in template.tensors_mut().into_iter().zip(tensors).zip(shapes) {
            if t.shape() != shape {
                return Err(Error::Shape { op: "ModelParams::from_tensors", left: shape, right: t.shape() });
            }
            *slot = t;
        }
        Ok(template)
    }
}
