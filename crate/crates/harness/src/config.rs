use rand::Rng;
use vdp_core::dp_params::{DpError, PrivacyParams};
use vdp_core::group::GroupId;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("need at least one prover")]
    NoProvers,
    #[error("need at least one bin")]
    NoBins,
    #[error(transparent)]
    Privacy(#[from] DpError),
    #[error("input spec: {0}")]
    Inputs(String),
    #[error("adversary: {0}")]
    Adversary(String),
}

/// How client inputs are generated.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputSpec {
    /// Uniform bit per client, or a uniform bin for histograms.
    Random,
    /// Every client holds this bit (one bin) or this bin index (histogram).
    Constant(u64),
    /// Explicit per-client inputs, each of length `bins`.
    Explicit(Vec<Vec<u64>>),
}

impl InputSpec {
    /// Input vector of client `i`.
    pub fn input<R: Rng + ?Sized>(&self, i: usize, bins: u32, rng: &mut R) -> Result<Vec<u64>, ConfigError> {
        let one_hot = |b: u64| (0..bins as u64).map(|j| (j == b) as u64).collect::<Vec<_>>();
        match self {
            InputSpec::Random if bins == 1 => Ok(vec![rng.random_range(0..2)]),
            InputSpec::Random => Ok(one_hot(rng.random_range(0..bins as u64))),
            InputSpec::Constant(v) if bins == 1 => Ok(vec![*v]),
            InputSpec::Constant(v) if *v < bins as u64 => Ok(one_hot(*v)),
            InputSpec::Constant(v) => Err(ConfigError::Inputs(format!("bin {v} out of range"))),
            InputSpec::Explicit(rows) => rows
                .get(i)
                .cloned()
                .ok_or_else(|| ConfigError::Inputs(format!("no input for client {i}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SessionConfig {
    pub provers: u32,
    pub clients: u64,
    pub bins: u32,
    pub privacy: PrivacyParams,
    pub group: GroupId,
    pub seed: u64,
    pub inputs: InputSpec,
    /// Verify bit proofs with one multi-exponentiation per prover.
    #[serde(default)]
    pub batch_verify: bool,
}

impl SessionConfig {
    pub fn new(provers: u32, clients: u64, bins: u32, privacy: PrivacyParams) -> Self {
        SessionConfig {
            provers,
            clients,
            bins,
            privacy,
            group: GroupId::Ristretto255,
            seed: 0,
            inputs: InputSpec::Random,
            batch_verify: false,
        }
    }

    pub fn with_group(mut self, group: GroupId) -> Self {
        self.group = group;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_inputs(mut self, inputs: InputSpec) -> Self {
        self.inputs = inputs;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.provers == 0 {
            return Err(ConfigError::NoProvers);
        }
        if self.bins == 0 {
            return Err(ConfigError::NoBins);
        }
        self.privacy.validate()?;
        if let InputSpec::Explicit(rows) = &self.inputs {
            if rows.len() as u64 != self.clients {
                return Err(ConfigError::Inputs(format!(
                    "{} explicit inputs for {} clients",
                    rows.len(),
                    self.clients
                )));
            }
        }
        Ok(())
    }
}
