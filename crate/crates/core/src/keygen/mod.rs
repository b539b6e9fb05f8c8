//! Post-processing: randomness extraction, quantization, agreement metrics,
//! reconciliation, privacy amplification and entropy-rate estimation.

mod amplify;
mod bits;
mod cascade;
mod entropy;
mod quantize;

pub use amplify::{amplified_length, privacy_amplify, KeyMaterial, DEFAULT_SAFETY_MARGIN};
pub use bits::{bar, bdr, gray_decode, gray_encode, xor_combine, BitString};
pub use cascade::{cascade, initial_block_for, reconcile, CascadeOutcome, CascadeParams, Reconciliation};
pub use entropy::{key_entropy_rate, key_entropy_rate_with_min, plugin_entropy, DEFAULT_MIN_TRIALS};
pub use quantize::{extract_randomness, quantile_sorted, quantize, QuantRange, Quantizer, QuantizerConfig};
