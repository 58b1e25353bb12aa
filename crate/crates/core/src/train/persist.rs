use serde::{Deserialize, Serialize};

use super::{EvalGraph, TrainConfig, TrainOutput, TrainingGraph};
use crate::error::{Error, Result};
use crate::graph::BuildConfig;
use crate::graphio::{Checkpoint, DatasetBundle, NamedTensor, CHECKPOINT_VERSION};
use crate::model::{ModelConfig, ModelParams};

#[derive(Serialize, Deserialize)]
struct StoredConfig {
    train: TrainConfig,
    model: ModelConfig,
    build: BuildConfig,
}

/// A trained model as stored on disk.
#[derive(Debug, Clone)]
pub struct SavedModel {
    pub train: TrainConfig,
    pub model: ModelConfig,
    pub build: BuildConfig,
    pub seed: u64,
    pub epochs: usize,
    pub params: ModelParams<f64>,
}

impl SavedModel {
    pub fn from_output(out: &TrainOutput, cfg: &TrainConfig) -> Self {
        Self {
            train: cfg.clone(),
            model: out.model.clone(),
            build: out.build.clone(),
            seed: out.seed,
            epochs: out.log.records.len(),
            params: out.params.clone(),
        }
    }

    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        let config = serde_json::to_value(StoredConfig {
            train: self.train.clone(),
            model: self.model.clone(),
            build: self.build.clone(),
        })?;
        let tensors = self
            .params
            .named_tensors()
            .into_iter()
            .map(|(name, t)| NamedTensor { name, value: t.clone() })
            .collect();
        Ok(Checkpoint { version: CHECKPOINT_VERSION, config, seed: self.seed, epochs: self.epochs, tensors })
    }

    pub fn from_checkpoint(c: Checkpoint) -> Result<Self> {
        let stored: StoredConfig =
            serde_json::from_value(c.config).map_err(|e| Error::Format(format!("checkpoint config: {e}")))?;
        let expected: Vec<String> =
            ModelParams::<f64>::init(&stored.model, None, &mut crate::numkit::Rng::new(0))?
                .named_tensors()
                .into_iter()
                .map(|(n, _)| n)
                .collect();
        let found: Vec<&str> = c.tensors.iter().map(|t| t.name.as_str()).collect();
        if found != expected {
            return Err(Error::Validation(format!("checkpoint tensors {found:?} do not match the model {expected:?}")));
        }
        let params = ModelParams::from_tensors(&stored.model, c.tensors.into_iter().map(|t| t.value).collect())?;
        if !params.all_finite() {
            return Err(Error::NonFinite("checkpoint parameters".into()));
        }
        Ok(Self { train: stored.train, model: stored.model, build: stored.build, seed: c.seed, epochs: c.epochs, params })
    }

    /// Rebuilds the inference graph exactly as training built it.
    pub fn eval_graph(&self, bundle: &DatasetBundle) -> Result<EvalGraph> {
        if self.model.input_dim != bundle.dim() {
            return Err(Error::Validation(format!(
                "model expects {} features, dataset has {}",
                self.model.input_dim,
                bundle.dim()
            )));
        }
        let training = TrainingGraph::build(bundle, &self.build)?;
        EvalGraph::build(bundle, &training, self.build.k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphio::{decode_checkpoint, encode_checkpoint};
    use crate::model::{Backbone, Variant};
    use crate::synth::{generate, SynthConfig};
    use crate::train::{inference, train_one};

    #[test]
    fn checkpoint_round_trip_reproduces_predictions() {
        let bundle = generate(&SynthConfig { n: 120, dim: 6, ..SynthConfig::default() }).unwrap();
        for variant in [Variant::Plain, Variant::Fuzzy, Variant::Aux] {
            let mut cfg = TrainConfig { epochs: 5, ..TrainConfig::default() };
            cfg.model = ModelConfig { hidden_dim: 8, ..ModelConfig::new(Backbone::Gin, variant, 1, 1) };
            let out = train_one(&bundle, &cfg, 7).unwrap();
            let bytes = encode_checkpoint(&SavedModel::from_output(&out, &cfg).to_checkpoint().unwrap()).unwrap();
            let saved = SavedModel::from_checkpoint(decode_checkpoint(&bytes).unwrap()).unwrap();
            assert_eq!(saved.params, out.params);
            let eval = saved.eval_graph(&bundle).unwrap();
            assert_eq!(eval.graph, out.eval.graph);
            assert_eq!(inference(&saved.params, &saved.model, &bundle, &eval).unwrap(), out.predict(&bundle).unwrap());
            assert_eq!(encode_checkpoint(&saved.to_checkpoint().unwrap()).unwrap(), bytes);
        }
    }

    #[test]
    fn mismatched_tensor_names_rejected() {
        let bundle = generate(&SynthConfig { n: 60, dim: 4, ..SynthConfig::default() }).unwrap();
        let cfg = TrainConfig { epochs: 0, ..TrainConfig::default() };
        let out = train_one(&bundle, &cfg, 1).unwrap();
        let mut c = SavedModel::from_output(&out, &cfg).to_checkpoint().unwrap();
        c.tensors[0].name = "bogus".into();
        assert!(matches!(SavedModel::from_checkpoint(c), Err(Error::Validation(_))));
    }
}
