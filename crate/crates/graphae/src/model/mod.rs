//! Graph autoencoders: encoders, decoders, training objectives, the
//! training loop with its three scaling strategies, and inference.

mod checkpoint;
mod decoder;
mod encoder;
mod infer;
mod loss;
mod train;

pub use decoder::{decode, pair_logit, sigmoid, DecoderConfig, DecoderKind};
pub use encoder::{encode_gcn2, encode_linear, reparameterize, EncoderKind, EncoderWeights, Layer, Propagation};
pub use infer::{infer_new_nodes, rank_neighbors};
pub use loss::{kl_gaussian, loss_modularity_reg, loss_reconstruction};
pub use train::{train, CommunityPrior, ModelSpec, ModularityReg, Objective, Scaling, TrainConfig, TrainedModel};
