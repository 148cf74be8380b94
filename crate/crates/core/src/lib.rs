//! Verifiable differential privacy for counting queries and histograms.

pub mod dp_params;
pub mod encoding;
pub mod group;
pub mod morra;
pub mod party;
pub mod protocol;
pub mod shares;
pub mod sigma_or;
pub mod transcript;
