use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// All numeric thresholds used across the library.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Eigensolver off-diagonal convergence threshold, relative to the
    /// Frobenius norm of the input.
    pub eig_tol: f64,
    /// Min-eigenvalue slack for PSD decisions, scaled by the matrix 1-norm.
    pub psd_tol: f64,
    /// Singular/eigenvalue cutoff for rank decisions, relative to the largest
    /// value.
    pub rank_tol: f64,
    /// A principal-angle cosine >= 1 - cluster_tol counts as angle zero.
    pub cluster_tol: f64,
    /// Target width of the kappa bisection interval.
    pub bisect_tol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            eig_tol: 1e-12,
            psd_tol: 1e-9,
            rank_tol: 1e-8,
            cluster_tol: 1e-8,
            bisect_tol: 1e-10,
        }
    }
}

impl ToleranceConfig {
    pub fn strict() -> Self {
        Self {
            eig_tol: 1e-14,
            psd_tol: 1e-11,
            rank_tol: 1e-10,
            cluster_tol: 1e-10,
            bisect_tol: 1e-12,
        }
    }

    pub fn loose() -> Self {
        Self {
            eig_tol: 1e-10,
            psd_tol: 1e-7,
            rank_tol: 1e-6,
            cluster_tol: 1e-6,
            bisect_tol: 1e-8,
        }
    }

    /// Look up a named profile: `strict`, `default`, or `loose`.
    pub fn profile(name: &str) -> Result<Self> {
        match name {
            "strict" => Ok(Self::strict()),
            "default" => Ok(Self::default()),
            "loose" => Ok(Self::loose()),
            other => Err(Error::Parse(format!("unknown tolerance profile '{other}'"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eig_tol", self.eig_tol),
            ("psd_tol", self.psd_tol),
            ("rank_tol", self.rank_tol),
            ("cluster_tol", self.cluster_tol),
            ("bisect_tol", self.bisect_tol),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Domain(format!("{name} must be in (0, 1), got {v}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ToleranceConfig::default().validate().unwrap();
        ToleranceConfig::strict().validate().unwrap();
        ToleranceConfig::loose().validate().unwrap();
    }

    #[test]
    fn bad_profile_is_parse_error() {
        assert!(ToleranceConfig::profile("medium").is_err());
    }

    #[test]
    fn out_of_range_rejected() {
        let mut cfg = ToleranceConfig::default();
        cfg.psd_tol = 0.0;
        assert!(cfg.validate().is_err());
        cfg.psd_tol = 1.5;
        assert!(cfg.validate().is_err());
    }
}
