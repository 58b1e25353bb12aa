use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backbone {
    Gcn,
    Gin,
}

/// Which heads sit on top of the backbone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Backbone followed directly by the classifier.
    Plain,
    /// Fuzzy rules fused into the embedding through a gate.
    Fuzzy,
    /// Plain model with homophily and entropy regression heads during training.
    Aux,
}

macro_rules! str_enum {
    ($ty:ty { $($name:literal => $variant:path),+ $(,)? }) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.to_ascii_lowercase().as_str() {
                    $($name => Ok($variant),)+
                    other => Err(Error::InvalidArgument(format!(
                        concat!("unknown ", stringify!($ty), " {:?}"), other
                    ))),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let name = match self {
                    $($variant => $name,)+
                };
                f.write_str(name)
            }
        }
    };
}

str_enum!(Backbone { "gcn" => Backbone::Gcn, "gin" => Backbone::Gin });
str_enum!(Variant { "plain" => Variant::Plain, "fuzzy" => Variant::Fuzzy, "aux" => Variant::Aux });

/// Number of fuzzy rules; one per fact feature.
pub const NUM_RULES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub backbone: Backbone,
    pub variant: Variant,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub num_classes: usize,
    pub layers: usize,
    pub dropout: f64,
    pub rules: usize,
}

impl ModelConfig {
    pub fn new(backbone: Backbone, variant: Variant, input_dim: usize, num_classes: usize) -> Self {
        Self {
            backbone,
            variant,
            input_dim,
            hidden_dim: 64,
            num_classes,
            layers: 2,
            dropout: 0.5,
            rules: NUM_RULES,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.hidden_dim < 2 {
            return bad(format!("hidden dimension {} must be at least 2", self.hidden_dim));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if self.rules != NUM_RULES {
            return bad(format!("only {NUM_RULES} rules are supported, got {}", self.rules));
        }
        if self.layers == 0 || self.input_dim == 0 || self.num_classes == 0 {
            return bad("layers, input dimension and class count must be positive".into());
        }
        Ok(())
    }

    pub fn aux_hidden(&self) -> usize {
        (self.hidden_dim / 2).max(1)
    }
}
