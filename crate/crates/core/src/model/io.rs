//! TOML scenario documents.
//!
//! A document is a [`Scenario`] at top level plus an optional `[partition]`
//! table, so a partition written by one run can be fed back into the next:
//!
//! ```toml
//! name = "case2"
//! n_total = 60
//! d_bs = 20.0
//! alpha_bs = 2.0
//! alpha_su = 2.0
//! rho0_db = -30.0
//! sigma2_dbm = -94.0
//! alpha_direct = 3.5
//!
//! [[users]]
//! side = "transmission"
//! d_su = 50.0
//! gamma_th = 0.7
//! a = 0.6
//! r_min = 1.2
//!
//! # ... more [[users]] ...
//!
//! [partition]
//! counts = [16, 20, 24]
//! n_t = 36
//! n_r = 24
//! ```

use serde::{Deserialize, Serialize};

use super::{ModelError, Partition, Scenario};

/// Serialized form of a [`Partition`]. `n_t`/`n_r` are informational and
/// re-derived (and checked) on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionRecord {
    pub counts: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_t: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_r: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_thr: Option<usize>,
}

impl PartitionRecord {
    pub fn from_partition(p: &Partition, n_thr: Option<usize>) -> Self {
        Self {
            counts: p.counts().to_vec(),
            n_t: Some(p.n_t()),
            n_r: Some(p.n_r()),
            n_thr,
        }
    }

    pub fn to_partition(&self, scenario: &Scenario) -> Result<Partition, ModelError> {
        let p = Partition::new(scenario, self.counts.clone())?;
        if self.n_t.is_some_and(|n| n != p.n_t()) || self.n_r.is_some_and(|n| n != p.n_r()) {
            return Err(ModelError::InvalidPartition(format!(
                "side totals ({:?}, {:?}) disagree with counts {:?}",
                self.n_t, self.n_r, self.counts
            )));
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDocument {
    #[serde(flatten)]
    pub scenario: Scenario,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<PartitionRecord>,
}

impl ScenarioDocument {
    pub fn new(scenario: Scenario, partition: Option<PartitionRecord>) -> Self {
        Self {
            scenario,
            partition,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ModelError> {
        let doc: Self = toml::from_str(text)?;
        doc.scenario.validate()?;
        if let Some(p) = &doc.partition {
            p.to_partition(&doc.scenario)?;
        }
        Ok(doc)
    }

    pub fn to_toml(&self) -> Result<String, ModelError> {
        Ok(toml::to_string(self)?)
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, ModelError> {
        Ok(ScenarioDocument::from_toml(text)?.scenario)
    }

    pub fn to_toml(&self) -> Result<String, ModelError> {
        ScenarioDocument::new(self.clone(), None).to_toml()
    }
}
