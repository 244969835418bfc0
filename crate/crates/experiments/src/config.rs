//! Sweep configuration: validated, serializable, and round-trip exact.

use serde::{Deserialize, Serialize};

use crate::{ExperimentError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderKind {
    PerfectEd,
    Sbs,
}

impl DecoderKind {
    pub fn label(&self) -> &'static str {
        match self {
            DecoderKind::PerfectEd => "perfect_ed",
            DecoderKind::Sbs => "sbs",
        }
    }
}

/// Wigner grid specification for figure panels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WignerSpec {
    /// symmetric bound: the grid covers `[-bound, bound]` per quadrature
    pub bound: f64,
    pub points: usize,
}

impl Default for WignerSpec {
    fn default() -> Self {
        Self { bound: 7.0, points: 201 }
    }
}

/// Full sweep configuration; mirrors the CLI flags field for field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub deltas: Vec<f64>,
    /// loss parameters per gate time
    pub gammas: Vec<f64>,
    /// post-selected error-correction rounds per point (sbs pipelines)
    pub n_rounds: Vec<usize>,
    pub decoder: DecoderKind,
    /// photon-loss parameter applied to the freshly prepared state before
    /// the gate (the noisy-initialization toggle)
    pub gamma_init: Option<f64>,
    /// oscillator dephasing rate during the gate window (units of 1/t_K)
    pub dephasing_rate: Option<f64>,
    /// measurement confusion `(p(e|g), p(g|e))`
    pub confusion: (f64, f64),
    /// optional loss parameter applied between EC rounds (finite round time)
    pub per_round_loss_gamma: Option<f64>,
    /// `(delta, dim)` truncation overrides
    pub truncation_overrides: Vec<(f64, usize)>,
    /// recompute every sweep point at dim + 20 and flag divergence
    pub check_truncation: bool,
    /// enable envelopes below 0.2 (dimension 240 runtimes)
    pub allow_large_dim: bool,
    pub cubic_coeffs: [f64; 3],
    pub wigner: WignerSpec,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            deltas: vec![0.36, 0.25],
            gammas: log_grid(1e-4, 3e-2, 12),
            n_rounds: vec![30],
            decoder: DecoderKind::PerfectEd,
            gamma_init: None,
            dephasing_rate: None,
            confusion: (0.0, 0.0),
            per_round_loss_gamma: None,
            truncation_overrides: Vec::new(),
            check_truncation: false,
            allow_large_dim: false,
            cubic_coeffs: gkpsim_core::gates::DEFAULT_CUBIC_COEFFS,
            wigner: WignerSpec::default(),
            seed: 7,
        }
    }
}

/// `n` log-spaced points over `[lo, hi]`, inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let step = (hi / lo).ln() / (n as f64 - 1.0);
    (0..n).map(|k| lo * (step * k as f64).exp()).collect()
}

impl SweepConfig {
    /// Truncation dimension for an envelope, honoring overrides.
    pub fn dim_for(&self, delta: f64) -> usize {
        self.truncation_overrides
            .iter()
            .find(|(d, _)| (*d - delta).abs() < 1e-12)
            .map(|(_, dim)| *dim)
            .unwrap_or_else(|| gkpsim_core::gkp::default_dim(delta))
    }

    /// Checks every field against the module preconditions.
    pub fn validate(&self) -> Result<()> {
        if self.deltas.is_empty() {
            return Err(ExperimentError::Config("deltas list is empty".into()));
        }
        for &d in &self.deltas {
            if !(d > 0.0 && d <= 0.6) {
                return Err(ExperimentError::Config(format!("delta {d} outside (0, 0.6]")));
            }
            if d < 0.2 && !self.allow_large_dim {
                return Err(ExperimentError::Config(format!(
                    "delta {d} needs dim >= 240; set allow_large_dim to opt in"
                )));
            }
        }
        for &g in self.gammas.iter().chain(self.gamma_init.iter()) {
            if !(0.0..1.0).contains(&g) {
                return Err(ExperimentError::Config(format!("gamma {g} outside [0, 1)")));
            }
        }
        if let Some(g) = self.per_round_loss_gamma {
            if !(0.0..1.0).contains(&g) {
                return Err(ExperimentError::Config(format!(
                    "per-round gamma {g} outside [0, 1)"
                )));
            }
        }
        for p in [self.confusion.0, self.confusion.1] {
            if !(0.0..1.0).contains(&p) {
                return Err(ExperimentError::Config(format!("confusion {p} outside [0, 1)")));
            }
        }
        if let Some(k) = self.dephasing_rate {
            if !(k >= 0.0) {
                return Err(ExperimentError::Config("dephasing rate must be >= 0".into()));
            }
        }
        if self.wigner.points < 2 || !(self.wigner.bound > 0.0) {
            return Err(ExperimentError::Config("wigner grid needs points >= 2, bound > 0".into()));
        }
        if self.cubic_coeffs.iter().any(|c| !c.is_finite()) {
            return Err(ExperimentError::Config("cubic coefficients must be finite".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        let cfg = SweepConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.gammas.len(), 12);
        assert!((cfg.gammas[0] - 1e-4).abs() < 1e-18);
        assert!((cfg.gammas[11] - 3e-2).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut cfg = SweepConfig::default();
        cfg.gammas = vec![1.234e-4, 0.1 + 0.2];
        cfg.seed = 0xdeadbeef;
        cfg.truncation_overrides = vec![(0.25, 120)];
        let text = cfg.to_json();
        let back = SweepConfig::from_json(&text).unwrap();
        assert_eq!(cfg, back);
        // serialize -> parse -> serialize is byte-identical
        assert_eq!(text, back.to_json());
    }

    #[test]
    fn validation_rejects_bad_fields() {
        let mut cfg = SweepConfig::default();
        cfg.deltas = vec![0.15];
        assert!(cfg.validate().is_err());
        cfg.allow_large_dim = true;
        cfg.validate().unwrap();
        cfg.gammas = vec![1.5];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = r#"{"deltas": [0.25], "bogus": 1}"#;
        assert!(SweepConfig::from_json(text).is_err());
    }

    #[test]
    fn dim_overrides() {
        let mut cfg = SweepConfig::default();
        assert_eq!(cfg.dim_for(0.36), 60);
        assert_eq!(cfg.dim_for(0.25), 100);
        assert_eq!(cfg.dim_for(0.15), 240);
        cfg.truncation_overrides = vec![(0.25, 140)];
        assert_eq!(cfg.dim_for(0.25), 140);
    }
}
