use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical thresholds shared by the information measures, the solver,
/// the disparity reports and the property suites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Negative round-off below this magnitude is clamped to zero; larger
    /// negatives are treated as bugs.
    pub roundoff: f64,
    /// PID and disparity components in `[-report_clamp, 0)` are reported as 0.
    pub report_clamp: f64,
    /// Bipartitions within this many bits of the minimum are reported as ties.
    pub tie: f64,
    /// Target accuracy of the unique-information solver, in bits.
    pub solver: f64,
    /// Iteration cap of the unique-information solver.
    pub solver_max_iterations: usize,
    /// A measure above this value counts as "nonzero" in verdict tables.
    pub nonzero: f64,
    /// A measure below this value counts as "zero" in verdict tables.
    pub zero: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            roundoff: 1e-9,
            report_clamp: 1e-6,
            tie: 1e-6,
            solver: 1e-7,
            solver_max_iterations: 100_000,
            nonzero: 1e-4,
            zero: 1e-6,
        }
    }
}

impl Tolerances {
    /// Clamp tiny negative round-off to zero; reject anything more negative.
    pub fn clamp_information(&self, value: f64) -> Result<f64> {
        if value >= 0.0 {
            Ok(value)
        } else if value > -self.roundoff {
            Ok(0.0)
        } else {
            Err(Error::NegativeInformation(value))
        }
    }

    /// Clamp a report component: values in `[-report_clamp, 0)` become 0.
    /// More negative values are returned unchanged so callers can flag them.
    pub fn clamp_report(&self, value: f64) -> f64 {
        if value < 0.0 && value >= -self.report_clamp {
            0.0
        } else {
            value
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamps_roundoff_and_rejects_bugs() {
        let t = Tolerances::default();
        assert_eq!(t.clamp_information(-1e-12).unwrap(), 0.0);
        assert_eq!(t.clamp_information(0.25).unwrap(), 0.25);
        assert!(t.clamp_information(-1e-6).is_err());
        assert_eq!(t.clamp_report(-5e-7), 0.0);
        assert_eq!(t.clamp_report(-2e-6), -2e-6);
    }
}
