//! Structural causal models with discrete or discretized latents.
//!
//! A model has a protected source `Z`, mutually independent latents, an
//! ordered list of feature assignments (each tagged critical or general),
//! and optional label and output assignments. Features may reference `Z`,
//! latents and earlier features; the output may reference features only.

mod catalog;
mod enumerate;
pub mod expr;
mod sample;
mod text;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
pub use catalog::{catalog_names, scenario, scenario_text};
pub use enumerate::{cci, enumerate, enumerate_joint, enumerate_joint_over, path_specific_influence, Enumeration};
pub use expr::{BinOp, Expr};
pub use sample::{sample, Dataset};

/// Largest alphabet kept for a derived (feature, output or label) variable.
pub const MAX_DERIVED_VALUES: usize = 64;
/// Finest grid derived values are rounded to.
pub const GRID_STEP: f64 = 0.25;
/// Default number of equal-probability bins for a Gaussian latent.
pub const DEFAULT_GAUSSIAN_BINS: usize = 8;
/// Gaussian latents are truncated to `mean ± TRUNCATION * sd`.
pub const TRUNCATION: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    Bernoulli { p: f64 },
    Categorical { weights: Vec<f64> },
    Gaussian { mean: f64, sd: f64, bins: usize },
}

/// Finite support of a source variable: values and their probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Alphabet {
    pub values: Vec<f64>,
    pub probs: Vec<f64>,
}

impl Distribution {
    fn validate(&self, name: &str) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScm(format!("`{name}`: {m}")));
        match self {
            Distribution::Bernoulli { p } => {
                if !(0.0..=1.0).contains(p) {
                    return bad(format!("bernoulli parameter {p} outside [0,1]"));
                }
            }
            Distribution::Categorical { weights } => {
                if weights.is_empty() || weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                    return bad("categorical weights must be non-negative".into());
                }
                let s: f64 = weights.iter().sum();
                if (s - 1.0).abs() > 1e-9 {
                    return bad(format!("categorical weights sum to {s}, not 1"));
                }
            }
            Distribution::Gaussian { mean, sd, bins } => {
                if !mean.is_finite() || !(sd.is_finite() && *sd > 0.0) {
                    return bad(format!("gaussian needs finite mean and positive sd, got {mean}, {sd}"));
                }
                if *bins < 2 {
                    return bad(format!("gaussian needs at least 2 bins, got {bins}"));
                }
            }
        }
        Ok(())
    }

    /// The discrete support used for exact enumeration.
    ///
    /// A Gaussian is truncated to `mean ± 3 sd` and cut into equal-probability
    /// bins; each bin is represented by its conditional mean.
    pub fn alphabet(&self) -> Alphabet {
        match self {
            Distribution::Bernoulli { p } => Alphabet {
                values: vec![0.0, 1.0],
                probs: vec![1.0 - p, *p],
            },
            Distribution::Categorical { weights } => Alphabet {
                values: (0..weights.len()).map(|i| i as f64).collect(),
                probs: weights.clone(),
            },
            Distribution::Gaussian { mean, sd, bins } => {
                let std = standard_normal();
                let lo = std.cdf(-TRUNCATION);
                let width = (std.cdf(TRUNCATION) - lo) / *bins as f64;
                let edge = |i: usize| {
                    if i == 0 {
                        -TRUNCATION
                    } else if i == *bins {
                        TRUNCATION
                    } else {
                        std.inverse_cdf(lo + width * i as f64)
                    }
                };
                let values = (0..*bins)
                    .map(|i| {
                        let (a, b) = (edge(i), edge(i + 1));
                        mean + sd * (std.pdf(a) - std.pdf(b)) / width
                    })
                    .collect();
                Alphabet {
                    values,
                    probs: vec![1.0 / *bins as f64; *bins],
                }
            }
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Distribution::Bernoulli { .. } => 2,
            Distribution::Categorical { weights } => weights.len(),
            Distribution::Gaussian { bins, .. } => *bins,
        }
    }
}

pub(crate) fn standard_normal() -> Normal {
    Normal::standard()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentSpec {
    pub name: String,
    pub distribution: Distribution,
}

impl LatentSpec {
    pub fn new(name: &str, distribution: Distribution) -> Self {
        LatentSpec {
            name: name.to_string(),
            distribution,
        }
    }

    pub fn bernoulli(name: &str, p: f64) -> Self {
        Self::new(name, Distribution::Bernoulli { p })
    }

    pub fn gaussian(name: &str, mean: f64, sd: f64, bins: usize) -> Self {
        Self::new(name, Distribution::Gaussian { mean, sd, bins })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tag {
    Critical,
    General,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub name: String,
    pub tag: Tag,
    pub expr: Expr,
}

impl Feature {
    pub fn new(name: &str, tag: Tag, expr: Expr) -> Self {
        Feature {
            name: name.to_string(),
            tag,
            expr,
        }
    }
}

/// A named assignment without a tag (label or output).
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub name: String,
    pub expr: Expr,
}

impl Assignment {
    pub fn new(name: &str, expr: Expr) -> Self {
        Assignment {
            name: name.to_string(),
            expr,
        }
    }
}

/// A validated structural causal model.
#[derive(Debug, Clone, PartialEq)]
pub struct Scm {
    protected: LatentSpec,
    latents: Vec<LatentSpec>,
    features: Vec<Feature>,
    label: Option<Assignment>,
    output: Option<Assignment>,
}

const RESERVED: [&str; 3] = ["xor", "ind", "indicator"];

fn check_name(name: &str) -> Result<()> {
    let mut chars = name.chars();
    let ok_first = chars.next().is_some_and(|c| c.is_alphabetic() || c == '_');
    if !ok_first || !chars.all(|c| c.is_alphanumeric() || c == '_' || c == '\'') || RESERVED.contains(&name) {
        return Err(Error::InvalidScm(format!("`{name}` is not a valid variable name")));
    }
    Ok(())
}

impl Scm {
    pub fn new(
        protected: LatentSpec,
        latents: Vec<LatentSpec>,
        features: Vec<Feature>,
        label: Option<Assignment>,
        output: Option<Assignment>,
    ) -> Result<Scm> {
        let scm = Scm {
            protected,
            latents,
            features,
            label,
            output,
        };
        scm.validate()?;
        Ok(scm)
    }

    /// Parse the line-oriented text format.
    pub fn parse(text: &str) -> Result<Scm> {
        text::parse(text)
    }

    /// Serialize to the text format accepted by [`Scm::parse`].
    pub fn to_text(&self) -> String {
        text::write(self)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        let mut names: Vec<&str> = vec![&self.protected.name];
        names.extend(self.latents.iter().map(|l| l.name.as_str()));
        names.extend(self.features.iter().map(|f| f.name.as_str()));
        names.extend(self.label.iter().map(|a| a.name.as_str()));
        names.extend(self.output.iter().map(|a| a.name.as_str()));
        for n in &names {
            check_name(n)?;
            if !seen.insert(*n) {
                return Err(Error::DuplicateVariable(n.to_string()));
            }
        }
        self.protected.distribution.validate(&self.protected.name)?;
        for l in &self.latents {
            l.distribution.validate(&l.name)?;
        }
        let feature_pos: HashMap<&str, usize> =
            self.features.iter().enumerate().map(|(i, f)| (f.name.as_str(), i)).collect();
        let mut visible: HashSet<&str> = HashSet::new();
        visible.insert(&self.protected.name);
        visible.extend(self.latents.iter().map(|l| l.name.as_str()));
        for (i, f) in self.features.iter().enumerate() {
            for v in f.expr.variables() {
                if visible.contains(v) {
                    continue;
                }
                return Err(match feature_pos.get(v) {
                    Some(&j) if j >= i => Error::Cycle(format!(
                        "feature `{}` references `{v}`, which is not defined before it",
                        f.name
                    )),
                    _ => Error::InvalidScm(format!("feature `{}` references unknown variable `{v}`", f.name)),
                });
            }
            visible.insert(&f.name);
        }
        if let Some(out) = &self.output {
            for v in out.expr.variables() {
                if !feature_pos.contains_key(v) {
                    return Err(Error::InvalidScm(format!(
                        "output `{}` may reference features only, found `{v}`",
                        out.name
                    )));
                }
            }
        }
        if let Some(label) = &self.label {
            for v in label.expr.variables() {
                if !visible.contains(v) {
                    return Err(if Some(v) == self.output.as_ref().map(|o| o.name.as_str()) || v == label.name {
                        Error::Cycle(format!("label `{}` references `{v}`", label.name))
                    } else {
                        Error::InvalidScm(format!("label `{}` references unknown variable `{v}`", label.name))
                    });
                }
            }
        }
        Ok(())
    }

    pub fn protected(&self) -> &LatentSpec {
        &self.protected
    }

    pub fn protected_name(&self) -> &str {
        &self.protected.name
    }

    pub fn latents(&self) -> &[LatentSpec] {
        &self.latents
    }

    pub fn latent_names(&self) -> Vec<&str> {
        self.latents.iter().map(|l| l.name.as_str()).collect()
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.name.as_str()).collect()
    }

    pub fn critical(&self) -> Vec<&str> {
        self.tagged(Tag::Critical)
    }

    pub fn general(&self) -> Vec<&str> {
        self.tagged(Tag::General)
    }

    fn tagged(&self, tag: Tag) -> Vec<&str> {
        self.features
            .iter()
            .filter(|f| f.tag == tag)
            .map(|f| f.name.as_str())
            .collect()
    }

    pub fn label(&self) -> Option<&Assignment> {
        self.label.as_ref()
    }

    pub fn output(&self) -> Option<&Assignment> {
        self.output.as_ref()
    }

    /// Name of the output variable, or an error if the model has none.
    pub fn output_name(&self) -> Result<&str> {
        self.output
            .as_ref()
            .map(|o| o.name.as_str())
            .ok_or_else(|| Error::InvalidScm("model has no output assignment".into()))
    }

    /// All variable names in evaluation order: protected, latents, features,
    /// output, label.
    pub fn variable_names(&self) -> Vec<&str> {
        let mut v = vec![self.protected.name.as_str()];
        v.extend(self.latent_names());
        v.extend(self.feature_names());
        v.extend(self.output.iter().map(|a| a.name.as_str()));
        v.extend(self.label.iter().map(|a| a.name.as_str()));
        v
    }

    /// Copy in which exactly the named features are critical.
    pub fn retagged(&self, critical: &[&str]) -> Result<Scm> {
        for c in critical {
            if !self.features.iter().any(|f| f.name == *c) {
                return Err(Error::UnknownVariable(c.to_string()));
            }
        }
        let mut out = self.clone();
        for f in &mut out.features {
            f.tag = if critical.contains(&f.name.as_str()) {
                Tag::Critical
            } else {
                Tag::General
            };
        }
        Ok(out)
    }

    /// Copy with a different output assignment.
    pub fn with_output(&self, output: Option<Assignment>) -> Result<Scm> {
        Scm::new(
            self.protected.clone(),
            self.latents.clone(),
            self.features.clone(),
            self.label.clone(),
            output,
        )
    }

    /// Copy with a different label assignment.
    pub fn with_label(&self, label: Option<Assignment>) -> Result<Scm> {
        Scm::new(
            self.protected.clone(),
            self.latents.clone(),
            self.features.clone(),
            label,
            self.output.clone(),
        )
    }

    /// The model in which every general-feature occurrence of `Z` reads an
    /// independent copy `Z'` instead. Returns the model and the copy's name.
    pub(crate) fn with_protected_copy_in_general(&self) -> Result<(Scm, String)> {
        let z = &self.protected.name;
        let taken: HashSet<&str> = self.variable_names().into_iter().collect();
        let mut copy = format!("{z}'");
        while taken.contains(copy.as_str()) {
            copy.push('\'');
        }
        let mut latents = self.latents.clone();
        latents.push(LatentSpec::new(&copy, self.protected.distribution.clone()));
        let features = self
            .features
            .iter()
            .map(|f| match f.tag {
                Tag::General => Feature::new(&f.name, f.tag, f.expr.rename(z, &copy)),
                Tag::Critical => f.clone(),
            })
            .collect();
        let scm = Scm::new(
            self.protected.clone(),
            latents,
            features,
            self.label.clone(),
            self.output.clone(),
        )?;
        Ok((scm, copy))
    }
}

impl std::fmt::Display for Scm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    #[test]
    fn rejects_forward_and_self_references() {
        let z = LatentSpec::bernoulli("Z", 0.5);
        let fwd = Scm::new(
            z.clone(),
            vec![],
            vec![
                Feature::new("X1", Tag::Critical, e("X2 + Z")),
                Feature::new("X2", Tag::General, e("Z")),
            ],
            None,
            None,
        );
        assert!(matches!(fwd, Err(Error::Cycle(_))));
        let selfref = Scm::new(z, vec![], vec![Feature::new("X1", Tag::Critical, e("X1"))], None, None);
        assert!(matches!(selfref, Err(Error::Cycle(_))));
    }

    #[test]
    fn output_sees_features_only() {
        let r = Scm::new(
            LatentSpec::bernoulli("Z", 0.5),
            vec![LatentSpec::bernoulli("U1", 0.5)],
            vec![Feature::new("X1", Tag::Critical, e("U1"))],
            None,
            Some(Assignment::new("Yhat", e("X1 + Z"))),
        );
        assert!(matches!(r, Err(Error::InvalidScm(_))));
    }

    #[test]
    fn duplicate_names_rejected() {
        let r = Scm::new(
            LatentSpec::bernoulli("Z", 0.5),
            vec![LatentSpec::bernoulli("Z", 0.5)],
            vec![],
            None,
            None,
        );
        assert!(matches!(r, Err(Error::DuplicateVariable(_))));
    }

    #[test]
    fn gaussian_bins_are_symmetric_and_ordered() {
        let a = Distribution::Gaussian {
            mean: 1.0,
            sd: 2.0,
            bins: 8,
        }
        .alphabet();
        assert_eq!(a.values.len(), 8);
        for i in 0..8 {
            assert!((a.values[i] - 1.0 + (a.values[7 - i] - 1.0)).abs() < 1e-9);
        }
        assert!(a.values.windows(2).all(|w| w[0] < w[1]));
        assert!(a.values[0] > 1.0 - 6.0 && a.values[7] < 1.0 + 6.0);
        let mean: f64 = a.values.iter().zip(&a.probs).map(|(v, p)| v * p).sum();
        assert!((mean - 1.0).abs() < 1e-9);
    }

    #[test]
    fn protected_copy_only_in_general() {
        let scm = Scm::new(
            LatentSpec::bernoulli("Z", 0.5),
            vec![LatentSpec::bernoulli("U1", 0.5)],
            vec![
                Feature::new("Xc", Tag::Critical, e("Z + U1")),
                Feature::new("Xg", Tag::General, e("Z + U1")),
            ],
            None,
            Some(Assignment::new("Yhat", e("Xc + Xg"))),
        )
        .unwrap();
        let (m, copy) = scm.with_protected_copy_in_general().unwrap();
        assert_eq!(copy, "Z'");
        assert_eq!(m.features()[0].expr, e("Z + U1"));
        assert_eq!(m.features()[1].expr, e("Z' + U1"));
    }
}
