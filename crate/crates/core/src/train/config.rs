use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::BuildConfig;
use crate::graphio::DatasetBundle;
use crate::model::{Backbone, ModelConfig, Variant};

/// Protocol and optimization settings for one experiment.
///
/// `model.input_dim` and `model.num_classes` are placeholders until
/// [`TrainConfig::model_for`] fills them from a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub folds: usize,
    pub seeds: Vec<u64>,
    pub lr: f64,
    pub weight_decay: f64,
    /// Weight of the auxiliary loss; read only by the aux variant.
    pub lambda: f64,
    pub model: ModelConfig,
    pub build: BuildConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            folds: 3,
            seeds: vec![42, 43, 44],
            lr: 0.01,
            weight_decay: 5e-4,
            lambda: 0.5,
            model: ModelConfig::new(Backbone::Gcn, Variant::Plain, 1, 1),
            build: BuildConfig::default(),
        }
    }
}

/// Keys accepted by [`TrainConfig::set`], with a short description each.
pub const CONFIG_KEYS: &[(&str, &str)] = &[
    ("epochs", "training epochs (full batch)"),
    ("folds", "cross-validation folds"),
    ("seeds", "comma-separated run seeds"),
    ("lr", "Adam learning rate"),
    ("weight_decay", "L2 coefficient added to every gradient"),
    ("lambda", "auxiliary loss weight"),
    ("backbone", "gcn | gin"),
    ("variant", "plain | fuzzy | aux"),
    ("hidden_dim", "embedding width"),
    ("layers", "backbone depth"),
    ("dropout", "dropout after the first backbone layer"),
    ("k", "cosine k-NN neighbors"),
    ("label_edges", "add same-label training edges (true | false)"),
    ("label_edge_budget", "label edges per training node"),
    ("rewire", "rewire cross-label training edges (true | false)"),
    ("rewire_rate", "rewiring probability"),
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Validation(format!("invalid value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Validation(format!("invalid boolean {value:?} for {key}"))),
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if self.folds < 2 {
            return bad(format!("folds must be at least 2, got {}", self.folds));
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("learning rate {} must be positive", self.lr));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad(format!("weight decay {} must be >= 0", self.weight_decay));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda {} must be >= 0", self.lambda));
        }
        self.build.validate()?;
        let mut m = self.model.clone();
        m.input_dim = m.input_dim.max(1);
        m.num_classes = m.num_classes.max(1);
        m.validate()
    }

    /// The model configuration with input width and class count from `bundle`.
    pub fn model_for(&self, bundle: &DatasetBundle) -> ModelConfig {
        ModelConfig { input_dim: bundle.dim(), num_classes: bundle.num_classes(), ..self.model.clone() }
    }

    /// Sets one documented key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "epochs" => self.epochs = parse(key, value)?,
            "folds" => self.folds = parse(key, value)?,
            "seeds" => {
                self.seeds = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse(key, s.trim()))
                    .collect::<Result<_>>()?
            }
            "lr" => self.lr = parse(key, value)?,
            "weight_decay" => self.weight_decay = parse(key, value)?,
            "lambda" => self.lambda = parse(key, value)?,
            "backbone" => self.model.backbone = value.parse().map_err(|e: Error| Error::Validation(e.to_string()))?,
            "variant" => self.model.variant = value.parse().map_err(|e: Error| Error::Validation(e.to_string()))?,
            "hidden_dim" => self.model.hidden_dim = parse(key, value)?,
            "layers" => self.model.layers = parse(key, value)?,
            "dropout" => self.model.dropout = parse(key, value)?,
            "k" => self.build.k = parse(key, value)?,
            "label_edges" => self.build.add_label_edges = parse_bool(key, value)?,
            "label_edge_budget" => self.build.label_edge_budget = parse(key, value)?,
            "rewire" => self.build.rewire_edges = parse_bool(key, value)?,
            "rewire_rate" => self.build.rewire_rate = parse(key, value)?,
            _ => return Err(Error::Validation(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (key, value) in parse_kv(text)? {
            self.set(&key, &value)?;
        }
        Ok(())
    }

    /// The configuration as `key = value` lines, readable by [`apply_kv`](Self::apply_kv).
    pub fn to_kv(&self) -> String {
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let b = &self.build;
        let m = &self.model;
        format!(
            "epochs = {}\nfolds = {}\nseeds = {}\nlr = {}\nweight_decay = {}\nlambda = {}\n\
             backbone = {}\nvariant = {}\nhidden_dim = {}\nlayers = {}\ndropout = {}\n\
             k = {}\nlabel_edges = {}\nlabel_edge_budget = {}\nrewire = {}\nrewire_rate = {}\n",
            self.epochs,
            self.folds,
            seeds.join(","),
            self.lr,
            self.weight_decay,
            self.lambda,
            m.backbone,
            m.variant,
            m.hidden_dim,
            m.layers,
            m.dropout,
            b.k,
            b.add_label_edges,
            b.label_edge_budget,
            b.rewire_edges,
            b.rewire_rate,
        )
    }
}

/// Splits `key = value` lines, skipping blanks and `#` comments.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: i + 1, msg: format!("expected key = value, got {line:?}") })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = TrainConfig::default();
        assert_eq!((c.epochs, c.folds, c.seeds.clone()), (200, 3, vec![42, 43, 44]));
        assert_eq!((c.lr, c.weight_decay, c.lambda), (0.01, 5e-4, 0.5));
        c.validate().unwrap();
    }

    #[test]
    fn kv_round_trip() {
        let mut c = TrainConfig::default();
        c.apply_kv("# comment\nvariant = fuzzy\nbackbone=gin  # inline\nseeds = 1, 2\nrewire = false\n\nlambda = 0.25")
            .unwrap();
        assert_eq!(c.model.variant, Variant::Fuzzy);
        assert_eq!(c.model.backbone, Backbone::Gin);
        assert_eq!(c.seeds, vec![1, 2]);
        assert!(!c.build.rewire_edges);
        let mut d = TrainConfig::default();
        d.apply_kv(&c.to_kv()).unwrap();
        assert_eq!(d, c);
    }

    #[test]
    fn rejects_bad_input() {
        let mut c = TrainConfig::default();
        assert!(matches!(c.set("nope", "1"), Err(Error::Validation(_))));
        assert!(matches!(c.set("epochs", "-3"), Err(Error::Validation(_))));
        assert!(matches!(c.set("variant", "gat"), Err(Error::Validation(_))));
        assert!(matches!(parse_kv("epochs 3"), Err(Error::Parse { line: 1, .. })));
        c.folds = 1;
        assert!(c.validate().is_err());
        let c = TrainConfig { lambda: -1.0, ..TrainConfig::default() };
        assert!(c.validate().is_err());
    }
}
