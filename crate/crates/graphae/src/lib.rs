//! Graph autoencoders (GAE / VGAE) for node embeddings.
//!
//! The crate covers the full pipeline: sparse graph storage and normalized
//! propagation operators ([`graph`]), linear and two-layer GCN encoders with
//! inner-product, source/target and gravity decoders ([`model`]), two ways
//! of scaling training to larger graphs (k-core training with embedding
//! propagation in [`degeneracy`], importance-sampled subgraph decoding in
//! [`sampling`]), community detection tools ([`clustering`]), evaluation
//! ([`eval`]) and ontology-constrained embedding refinement ([`retrofit`]).

pub mod cli;
pub mod clustering;
pub mod degeneracy;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod graph;
pub mod io;
pub mod model;
pub mod retrofit;
pub mod sampling;

pub use error::{Error, Result};
pub use graph::{FeatureMatrix, Features, Operator, OperatorKind, SparseGraph};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic generator for a given seed and purpose.
///
/// Different `stream` values give independent sequences from the same seed,
/// so e.g. weight initialisation and reparameterisation noise never share
/// draws.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
