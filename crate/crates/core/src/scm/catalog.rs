//! Built-in scenario models, embedded from `catalog/*.scm`.

use super::Scm;
use crate::error::{Error, Result};

const CATALOG: &[(&str, &str)] = &[
    ("canonical-1", include_str!("../../catalog/canonical-1.scm")),
    ("canonical-2", include_str!("../../catalog/canonical-2.scm")),
    ("canonical-3", include_str!("../../catalog/canonical-3.scm")),
    ("canonical-4", include_str!("../../catalog/canonical-4.scm")),
    ("canonical-5", include_str!("../../catalog/canonical-5.scm")),
    ("canonical-6", include_str!("../../catalog/canonical-6.scm")),
    ("canonical-7", include_str!("../../catalog/canonical-7.scm")),
    ("canonical-1-variant", include_str!("../../catalog/canonical-1-variant.scm")),
    ("cancellation", include_str!("../../catalog/cancellation.scm")),
    ("impossibility-A", include_str!("../../catalog/impossibility-A.scm")),
    ("impossibility-B", include_str!("../../catalog/impossibility-B.scm")),
    ("pid-scenario-1", include_str!("../../catalog/pid-scenario-1.scm")),
    ("exp-1", include_str!("../../catalog/exp-1.scm")),
    ("exp-2", include_str!("../../catalog/exp-2.scm")),
    ("exp-3", include_str!("../../catalog/exp-3.scm")),
    ("exp-4", include_str!("../../catalog/exp-4.scm")),
];

pub fn catalog_names() -> Vec<&'static str> {
    CATALOG.iter().map(|(n, _)| *n).collect()
}

/// Source text of a catalog entry. `1`..`4` are accepted as short names
/// for the experimental scenarios.
pub fn scenario_text(name: &str) -> Result<&'static str> {
    let full = match name {
        "1" | "2" | "3" | "4" => format!("exp-{name}"),
        _ => name.to_string(),
    };
    CATALOG
        .iter()
        .find(|(n, _)| *n == full)
        .map(|(_, t)| *t)
        .ok_or_else(|| Error::UnknownScenario {
            name: name.to_string(),
            catalog: catalog_names().join(", "),
        })
}

/// Parse a catalog entry.
pub fn scenario(name: &str) -> Result<Scm> {
    Scm::parse(scenario_text(name)?)
}
