//! Physical-layer secret-key generation for mmWave massive-MIMO links.
//!
//! The crate simulates channel probing between two beamforming parties and
//! an optional co-located eavesdropper, turns the measurements into keys
//! through extraction, quantization, Cascade reconciliation and Toeplitz
//! privacy amplification, and runs Monte-Carlo scenarios that write CSV
//! tables.
//!
//! - [`channel`]: clustered channel model, temporal evolution, angular domain.
//! - [`beamforming`]: steering and perturbed beams, hierarchical codebook.
//! - [`probing`]: bidirectional pilot exchange with independent noise.
//! - [`keygen`]: the post-processing pipeline and agreement metrics.
//! - [`schemes`]: beam perturbation with XOR, virtual-angle bits,
//!   multi-resolution probing, and a per-entry quantization baseline.
//! - [`experiments`]: configuration, scenario runner and CSV output.

pub mod beamforming;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod keygen;
pub mod probing;
pub mod schemes;
pub mod seeds;

pub use error::{Error, Result};
