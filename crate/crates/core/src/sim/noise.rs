//! Synthetic Pauli noise profiles.
//!
//! A profile assigns per-gate Pauli error probabilities and per-qubit readout
//! flip probabilities. Profiles are stored as JSON files, e.g.
//!
//! ```json
//! {
//!   "name": "synth_medium",
//!   "p1": [0.001, 0.001, 0.002],
//!   "p2": [0.005, 0.005, 0.01],
//!   "readout_flip": 0.02
//! }
//! ```

use serde::{Deserialize, Serialize};

use super::SimError;

/// Per-qubit readout flip probability: one number for all qubits or an
/// explicit per-qubit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReadoutFlip {
    Uniform(f64),
    PerQubit(Vec<f64>),
}

impl ReadoutFlip {
    pub fn prob(&self, qubit: usize) -> f64 {
        match self {
            ReadoutFlip::Uniform(p) => *p,
            ReadoutFlip::PerQubit(ps) => ps.get(qubit).copied().unwrap_or(0.0),
        }
    }

    pub fn per_qubit(&self, n_qubits: usize) -> Vec<f64> {
        (0..n_qubits).map(|q| self.prob(q)).collect()
    }
}

/// Pauli-noise model: `(px, py, pz)` injected on each operand qubit after
/// every one-qubit (`p1`) or two-qubit (`p2`) gate, plus readout flips.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseProfile {
    pub name: String,
    pub p1: [f64; 3],
    pub p2: [f64; 3],
    pub readout_flip: ReadoutFlip,
}

impl NoiseProfile {
    /// The all-zero profile.
    pub fn noiseless() -> NoiseProfile {
        NoiseProfile {
            name: "noiseless".into(),
            p1: [0.0; 3],
            p2: [0.0; 3],
            readout_flip: ReadoutFlip::Uniform(0.0),
        }
    }

    /// Symmetric depolarizing-style profile: total error probability `p`
    /// split evenly over X, Y, Z after every gate, no readout error.
    pub fn depolarizing(p: f64) -> NoiseProfile {
        NoiseProfile {
            name: format!("depolarizing_{p}"),
            p1: [p / 3.0; 3],
            p2: [p / 3.0; 3],
            readout_flip: ReadoutFlip::Uniform(0.0),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let check = |ps: &[f64; 3], what: &str| -> Result<(), SimError> {
            if ps.iter().any(|&p| !(0.0..=1.0).contains(&p)) || ps.iter().sum::<f64>() > 1.0 {
                return Err(SimError::InvalidNoise {
                    msg: format!("{what} probabilities must lie in [0,1] and sum to at most 1"),
                });
            }
            Ok(())
        };
        check(&self.p1, "p1")?;
        check(&self.p2, "p2")?;
        let flips = match &self.readout_flip {
            ReadoutFlip::Uniform(p) => std::slice::from_ref(p),
            ReadoutFlip::PerQubit(ps) => ps.as_slice(),
        };
        if flips.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(SimError::InvalidNoise {
                msg: "readout flip probabilities must lie in [0,1]".into(),
            });
        }
        Ok(())
    }

    pub fn is_gate_noiseless(&self) -> bool {
        self.p1.iter().all(|&p| p == 0.0) && self.p2.iter().all(|&p| p == 0.0)
    }

    pub fn from_json(text: &str) -> Result<NoiseProfile, SimError> {
        let profile: NoiseProfile =
            serde_json::from_str(text).map_err(|e| SimError::InvalidNoise {
                msg: format!("cannot parse noise profile: {e}"),
            })?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("noise profile serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let p = NoiseProfile {
            name: "t".into(),
            p1: [0.01, 0.0, 0.02],
            p2: [0.03, 0.03, 0.04],
            readout_flip: ReadoutFlip::PerQubit(vec![0.1, 0.2]),
        };
        let back = NoiseProfile::from_json(&p.to_json()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn uniform_readout_parses_from_scalar() {
        let p = NoiseProfile::from_json(
            r#"{"name":"x","p1":[0,0,0],"p2":[0,0,0],"readout_flip":0.05}"#,
        )
        .unwrap();
        assert_eq!(p.readout_flip.prob(3), 0.05);
    }

    #[test]
    fn invalid_probabilities_rejected() {
        assert!(NoiseProfile::from_json(
            r#"{"name":"x","p1":[0.6,0.3,0.3],"p2":[0,0,0],"readout_flip":0}"#,
        )
        .is_err());
        assert!(NoiseProfile::from_json(
            r#"{"name":"x","p1":[0,0,0],"p2":[0,0,0],"readout_flip":1.5}"#,
        )
        .is_err());
    }
}
