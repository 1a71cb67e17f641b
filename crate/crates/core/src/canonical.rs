//! The six canonical hiring examples scored by four candidate measures of
//! non-exempt disparity.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::measures::{audit_scm, DisparityReport};
use crate::scm::{path_specific_influence, scenario, Scm};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Desired {
    Zero,
    Positive,
}

/// Values of the four candidate measures, in bits (path-specific is in
/// output units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateValues {
    pub cmi: f64,
    pub uni: f64,
    pub path_specific: f64,
    pub proposed: f64,
}

impl CandidateValues {
    pub fn as_array(&self) -> [f64; 4] {
        [self.cmi, self.uni, self.path_specific, self.proposed]
    }
}

pub const MEASURE_NAMES: [&str; 4] = ["cmi", "uni", "path_specific", "proposed"];

/// One example: its values, the verdicts they earn, and the verdicts the
/// example is known to produce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalRow {
    pub example: usize,
    pub scenario: String,
    pub title: String,
    pub desired: Desired,
    pub values: CandidateValues,
    pub verdicts: [bool; 4],
    pub expected: [bool; 4],
}

impl CanonicalRow {
    pub fn matches(&self) -> bool {
        self.verdicts == self.expected
    }
}

struct Example {
    title: &'static str,
    desired: Desired,
    expected: [bool; 4],
}

const EXAMPLES: [Example; 6] = [
    Example {
        title: "hiring with biased critical feature",
        desired: Desired::Zero,
        expected: [true, true, true, true],
    },
    Example {
        title: "hiring with biased general feature",
        desired: Desired::Positive,
        expected: [true, true, true, true],
    },
    Example {
        title: "counterfactually fair hiring",
        desired: Desired::Zero,
        expected: [false, true, true, true],
    },
    Example {
        title: "masked disparity in hiring ads I",
        desired: Desired::Positive,
        expected: [true, false, true, true],
    },
    Example {
        title: "masked disparity in hiring ads II",
        desired: Desired::Positive,
        expected: [false, false, true, true],
    },
    Example {
        title: "disparity amplification by unmasking",
        desired: Desired::Positive,
        expected: [true, true, false, true],
    },
];

/// Does `value` give the desired outcome? "Zero" means below
/// `tolerances.zero`, "positive" means above `tolerances.nonzero`.
pub fn verdict(value: f64, desired: Desired, tolerances: &Tolerances) -> bool {
    match desired {
        Desired::Zero => value < tolerances.zero,
        Desired::Positive => value > tolerances.nonzero,
    }
}

/// Evaluate the four candidate measures on a model.
pub fn candidate_values(scm: &Scm, tolerances: &Tolerances) -> Result<(CandidateValues, DisparityReport)> {
    let report = audit_scm(scm, &[], tolerances)?;
    let values = CandidateValues {
        cmi: report.observational.cmi,
        uni: report.observational.uni,
        path_specific: path_specific_influence(scm)?,
        proposed: report.m_ne_star,
    };
    Ok((values, report))
}

/// Score canonical example `n` (1-based).
pub fn canonical_row(n: usize, tolerances: &Tolerances) -> Result<CanonicalRow> {
    let ex = EXAMPLES.get(n.wrapping_sub(1)).ok_or_else(|| {
        crate::error::Error::Config(format!("canonical examples are numbered 1 to {}, got {n}", EXAMPLES.len()))
    })?;
    let name = format!("canonical-{n}");
    let (values, _) = candidate_values(&scenario(&name)?, tolerances)?;
    let verdicts = values.as_array().map(|v| verdict(v, ex.desired, tolerances));
    Ok(CanonicalRow {
        example: n,
        scenario: name,
        title: ex.title.to_string(),
        desired: ex.desired,
        values,
        verdicts,
        expected: ex.expected,
    })
}

pub fn canonical_table(tolerances: &Tolerances) -> Result<Vec<CanonicalRow>> {
    (1..=EXAMPLES.len()).map(|n| canonical_row(n, tolerances)).collect()
}

/// Plain-text rendering with one row per example.
pub fn render_table(rows: &[CanonicalRow]) -> String {
    let mark = |b: bool| if b { "ok" } else { "x" };
    let mut out = format!(
        "{:<3} {:<40} {:>8} {:>14} {:>14} {:>14} {:>14}  match\n",
        "#", "example", "desired", "cmi", "uni", "path_specific", "proposed"
    );
    for r in rows {
        let desired = match r.desired {
            Desired::Zero => "0",
            Desired::Positive => ">0",
        };
        out.push_str(&format!("{:<3} {:<40} {:>8}", r.example, r.title, desired));
        for (v, ok) in r.values.as_array().iter().zip(r.verdicts) {
            out.push_str(&format!(" {:>9.6} {:>4}", v, mark(ok)));
        }
        out.push_str(&format!("  {}\n", if r.matches() { "yes" } else { "NO" }));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unmasking_row() {
        let r = canonical_row(6, &Tolerances::default()).unwrap();
        assert_eq!(r.verdicts, [true, true, false, true]);
        assert!((r.values.uni - 0.5).abs() < 1e-6);
        assert!((r.values.cmi - 0.5).abs() < 1e-9);
    }

    #[test]
    fn out_of_range_example() {
        assert!(canonical_row(0, &Tolerances::default()).is_err());
        assert!(canonical_row(7, &Tolerances::default()).is_err());
    }

    #[test]
    fn verdict_thresholds() {
        let t = Tolerances::default();
        assert!(verdict(5e-7, Desired::Zero, &t));
        assert!(!verdict(5e-5, Desired::Zero, &t));
        assert!(!verdict(5e-5, Desired::Positive, &t));
        assert!(verdict(2e-4, Desired::Positive, &t));
    }
}
