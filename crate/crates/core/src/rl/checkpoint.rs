use std::path::Path;

use serde::{Deserialize, Serialize};

use super::net::PolicyNet;
use super::RlError;

pub const CHECKPOINT_VERSION: u32 = 1;

/// Serialized network weights plus the configuration that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub input_dim: usize,
    pub hidden: [usize; 2],
    pub frames: u64,
    pub config: serde_json::Value,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn new(net: &PolicyNet, frames: u64, config: serde_json::Value) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            input_dim: net.input_dim(),
            hidden: net.hidden(),
            frames,
            config,
            params: net.params().to_vec(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), RlError> {
        let text = serde_json::to_string(self).map_err(|e| RlError::Checkpoint(e.to_string()))?;
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, text)?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint, RlError> {
        let text = std::fs::read_to_string(path)?;
        let ck: Checkpoint =
            serde_json::from_str(&text).map_err(|e| RlError::Checkpoint(e.to_string()))?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(RlError::Checkpoint(format!("unsupported version {}", ck.version)));
        }
        Ok(ck)
    }

    /// Rebuild the network, checking it matches the expected input width.
    pub fn network(&self, expected_input_dim: usize) -> Result<PolicyNet, RlError> {
        if self.input_dim != expected_input_dim {
            return Err(RlError::DimensionMismatch {
                expected: expected_input_dim,
                found: self.input_dim,
            });
        }
        PolicyNet::from_params(self.input_dim, self.hidden, self.params.clone()).ok_or_else(|| {
            RlError::Checkpoint(format!("parameter count {} does not fit layout", self.params.len()))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_and_dimension_check() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = PolicyNet::new(12, [5, 4], &mut rng);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("policy.json");
        Checkpoint::new(&net, 99, serde_json::json!({"a": 1})).save(&path).unwrap();
        let ck = Checkpoint::load(&path).unwrap();
        assert_eq!(ck.frames, 99);
        assert_eq!(ck.network(12).unwrap().params(), net.params());
        assert!(matches!(
            ck.network(13),
            Err(RlError::DimensionMismatch { expected: 13, found: 12 })
        ));
    }
}
