//! Polarization-based codes for discrete memoryless broadcast channels.
//!
//! The crate implements three coding schemes built on the binary polar
//! transform: binning codes for deterministic broadcast channels,
//! superposition codes for two-user noisy channels, and Marton codes with
//! genie-bit accounting. Around them sit the pieces a construction needs:
//! exact and Monte-Carlo synthesized-channel statistics, rate-region
//! evaluation, a degradation-hierarchy classifier, and a seeded simulation
//! harness.

pub mod channels;
pub mod detbc;
pub mod error;
pub mod harness;
pub mod marton;
pub mod prob;
pub mod seeding;
pub mod superposition;
pub mod synthesis;
pub mod transform;

pub use channels::{
    bec_bsc, blackwell, bsc_pair, classify, cover_rates, det_region_vertex, marton_rates,
    is_stochastically_degraded, BcClass, ClassifyReport, CoverRates, DeterministicBC,
    MartonConfig, ModelDoc, NoisyBC, SuperpositionChain,
};
pub use error::{Error, Result};
pub use prob::{
    bhattacharyya, binary_entropy, kl_divergence, star_convolve, total_variation, JointTable, Pmf,
};
pub use synthesis::{
    BitLetterModel, IndexStats, PolarContext, PolarizationSets, Scheme, SelectionRule,
};
pub use transform::{bit_reversal_permutation, polar_transform, BitBlock, TransformPlan};
