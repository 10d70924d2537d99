//! JSON run configuration. Unknown keys are rejected at every level.

use serde::{Deserialize, Serialize};

use qevote_core::harness::Experiment;
use qevote_core::Vote;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub votes: Option<Vec<Vote>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<StrategySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub casting_order: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub export: Option<ExportSpec>,
}

impl RunConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        if cfg.schema_version != SCHEMA_VERSION {
            anyhow::bail!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            );
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BackendName {
    #[default]
    Compact,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PathName {
    #[default]
    Fast,
    Full,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProtocolSpec {
    Travelball {
        voters: usize,
        #[serde(default)]
        dim: Option<usize>,
    },
    Distball {
        dim: usize,
        voters: usize,
        #[serde(default = "one")]
        rounds: usize,
        #[serde(default)]
        difference: Option<usize>,
        #[serde(default)]
        backend: BackendName,
    },
    Dualbasis {
        voters: usize,
        candidates: usize,
        delta0: u32,
        #[serde(default)]
        path: PathName,
    },
    Conjcode {
        voters: usize,
        n: usize,
        #[serde(default)]
        w: Option<usize>,
        #[serde(default = "one")]
        candidate_len: usize,
    },
}

impl ProtocolSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Travelball { .. } => "travelball",
            Self::Distball { .. } => "distball",
            Self::Dualbasis { .. } => "dualbasis",
            Self::Conjcode { .. } => "conjcode",
        }
    }

    pub fn voters(&self) -> usize {
        match *self {
            Self::Travelball { voters, .. }
            | Self::Distball { voters, .. }
            | Self::Dualbasis { voters, .. }
            | Self::Conjcode { voters, .. } => voters,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TargetName {
    #[default]
    D1,
    D2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum TamperName {
    #[default]
    Random,
    Offset(u64),
}

fn default_samples() -> usize {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StrategySpec {
    Honest,
    TravelballDoubleVote {
        #[serde(default)]
        voter: usize,
        #[serde(default = "one")]
        extra: usize,
    },
    TravelballSandwich {
        #[serde(default = "one")]
        victim_slot: usize,
    },
    DistballDtransfer {
        #[serde(default)]
        voter: usize,
        #[serde(default = "one")]
        d: usize,
        /// Leftover qudits measured per option type; `null` uses the exact label difference.
        #[serde(default = "default_samples_opt")]
        samples: Option<usize>,
    },
    DualbasisExtraction {
        #[serde(default)]
        target: TargetName,
        #[serde(default)]
        extra: usize,
    },
    DualbasisAbort {
        #[serde(default)]
        attacker: usize,
        #[serde(default)]
        tamper: TamperName,
    },
    ConjcodeMalleate {
        #[serde(default = "default_mask")]
        mask: Vec<u8>,
    },
    ConjcodeSerial,
}

fn default_samples_opt() -> Option<usize> {
    Some(default_samples())
}

fn default_mask() -> Vec<u8> {
    vec![1]
}

impl StrategySpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Honest => "honest",
            Self::TravelballDoubleVote { .. } => "travelball-double-vote",
            Self::TravelballSandwich { .. } => "travelball-sandwich",
            Self::DistballDtransfer { .. } => "distball-dtransfer",
            Self::DualbasisExtraction { .. } => "dualbasis-extraction",
            Self::DualbasisAbort { .. } => "dualbasis-abort",
            Self::ConjcodeMalleate { .. } => "conjcode-malleate",
            Self::ConjcodeSerial => "conjcode-serial",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParameter {
    Epsilon,
    Delta0,
    Rounds,
    Samples,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectedConstant {
    pub id: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BoundsSpec {
    #[serde(default)]
    pub filter: Option<String>,
    #[serde(default)]
    pub inject: Option<InjectedConstant>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SeriesName {
    /// Single-bin and three-bin mass against the phase offset.
    BinMass,
    /// Outcome density of the phase measurement.
    PovmDensity,
    /// Survival probability of corrupted copies against the test exponent.
    Survival,
    /// Per-round success threshold against the number of rounds.
    RoundsThreshold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportSpec {
    pub series: SeriesName,
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub voters: Option<u64>,
    #[serde(default)]
    pub corrupted: Option<u64>,
    #[serde(default)]
    pub max_rounds: Option<u64>,
}
