//! The FireGNN architecture: GCN or GIN backbone, fuzzy rule activation over
//! fact vectors, rule embedding, gated fusion, linear classifier, and the
//! auxiliary regression heads. Forward and backward passes are hand-written.

mod config;
mod forward;
mod layers;
mod params;

pub use config::{Backbone, ModelConfig, Variant, NUM_RULES};
pub use forward::{backward, forward, ForwardTrace, GraphInputs, Mode, OutputGradients};
pub use layers::{aux_predict, fuse, gate, gcn_layer_forward, gin_layer_forward, rule_activation, rule_embed};
pub use params::{AuxHeads, BackboneLayer, FactStats, FusionParams, FuzzyParams, Mlp, ModelParams};
