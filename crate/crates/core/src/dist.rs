//! Exact finite joint distributions and Shannon measures in bits.
//!
//! A [`JointTable`] is a dense row-major table over an ordered list of named
//! discrete variables (the last variable varies fastest). Variables are
//! addressed by name everywhere so audit configurations stay readable.
//!
//! Conventions: logarithms are base 2, `0 · log 0 = 0`, the entropy of the
//! empty set is 0, and information quantities clamp negative round-off
//! smaller than [`Tolerances::roundoff`] to 0.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

/// Default cap on the number of cells of a dense table (2^20).
pub const DEFAULT_CELL_CAP: usize = 1 << 20;

/// Mass tolerance accepted before a table is renormalized.
const MASS_SLACK: f64 = 1e-9;

/// A named discrete variable taking values `0..arity`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub arity: usize,
    /// Optional display labels, one per value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl Variable {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        Variable {
            name: name.into(),
            arity,
            labels: None,
        }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        self.labels = Some(labels);
        self
    }

    /// Display label of `value`, falling back to the integer code.
    pub fn label(&self, value: usize) -> String {
        self.labels
            .as_ref()
            .and_then(|l| l.get(value).cloned())
            .unwrap_or_else(|| value.to_string())
    }
}

/// Exact joint probability table over named discrete variables.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    variables: Vec<Variable>,
    probs: Vec<f64>,
}

fn cell_count(variables: &[Variable], cap: usize) -> Result<usize> {
    let mut cells: u128 = 1;
    for v in variables {
        cells = cells.saturating_mul(v.arity as u128);
    }
    if cells > cap as u128 {
        return Err(Error::TableTooLarge { cells, cap });
    }
    Ok(cells as usize)
}

fn check_variables(variables: &[Variable]) -> Result<()> {
    let mut seen = HashSet::new();
    for v in variables {
        if v.arity == 0 {
            return Err(Error::InvalidTable(format!(
                "variable `{}` has arity 0",
                v.name
            )));
        }
        if let Some(labels) = &v.labels {
            if labels.len() != v.arity {
                return Err(Error::InvalidTable(format!(
                    "variable `{}` has {} labels for arity {}",
                    v.name,
                    labels.len(),
                    v.arity
                )));
            }
        }
        if !seen.insert(v.name.as_str()) {
            return Err(Error::DuplicateVariable(v.name.clone()));
        }
    }
    Ok(())
}

impl JointTable {
    /// Build a table from dense probabilities, checking shape, sign and mass.
    ///
    /// Mass within 1e-9 of 1 is renormalized exactly; larger deviations are
    /// rejected.
    pub fn new(variables: Vec<Variable>, probs: Vec<f64>) -> Result<Self> {
        Self::with_cap(variables, probs, DEFAULT_CELL_CAP)
    }

    pub fn with_cap(variables: Vec<Variable>, mut probs: Vec<f64>, cap: usize) -> Result<Self> {
        check_variables(&variables)?;
        let cells = cell_count(&variables, cap)?;
        if probs.len() != cells {
            return Err(Error::InvalidTable(format!(
                "expected {cells} cells, got {}",
                probs.len()
            )));
        }
        let mut total = 0.0;
        for &p in &probs {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidTable(format!("entry {p} is not a probability")));
            }
            total += p;
        }
        if (total - 1.0).abs() > MASS_SLACK {
            return Err(Error::InvalidTable(format!("entries sum to {total}, not 1")));
        }
        if total != 1.0 {
            probs.iter_mut().for_each(|p| *p /= total);
        }
        Ok(JointTable { variables, probs })
    }

    /// Accumulate weighted atoms `(value indices, mass)` into a dense table.
    pub fn from_atoms<I>(variables: Vec<Variable>, atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, f64)>,
    {
        Self::from_atoms_with_cap(variables, atoms, DEFAULT_CELL_CAP)
    }

    pub fn from_atoms_with_cap<I>(variables: Vec<Variable>, atoms: I, cap: usize) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, f64)>,
    {
        check_variables(&variables)?;
        let cells = cell_count(&variables, cap)?;
        let strides = strides(&variables);
        let mut probs = vec![0.0; cells];
        for (values, mass) in atoms {
            if values.len() != variables.len() {
                return Err(Error::InvalidTable(format!(
                    "atom has {} values for {} variables",
                    values.len(),
                    variables.len()
                )));
            }
            let mut idx = 0;
            for ((&val, var), &s) in values.iter().zip(&variables).zip(&strides) {
                if val >= var.arity {
                    return Err(Error::InvalidTable(format!(
                        "value {val} out of range for `{}` (arity {})",
                        var.name, var.arity
                    )));
                }
                idx += val * s;
            }
            probs[idx] += mass;
        }
        Self::with_cap(variables, probs, cap)
    }

    /// Point mass at `values`.
    pub fn point_mass(variables: Vec<Variable>, values: &[usize]) -> Result<Self> {
        Self::from_atoms(variables, [(values.to_vec(), 1.0)])
    }

    /// Uniform table over the product alphabet.
    pub fn uniform(variables: Vec<Variable>) -> Result<Self> {
        let cells = cell_count(&variables, DEFAULT_CELL_CAP)?;
        Self::new(variables, vec![1.0 / cells as f64; cells])
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn names(&self) -> Vec<&str> {
        self.variables.iter().map(|v| v.name.as_str()).collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.variables.iter().any(|v| v.name == name)
    }

    pub fn position(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn variable(&self, name: &str) -> Result<&Variable> {
        Ok(&self.variables[self.position(name)?])
    }

    /// Probability of the cell addressed by one value per variable.
    pub fn prob(&self, values: &[usize]) -> f64 {
        let strides = strides(&self.variables);
        let idx: usize = values.iter().zip(&strides).map(|(v, s)| v * s).sum();
        self.probs[idx]
    }

    /// Iterate `(value indices, mass)` over cells with positive mass.
    pub fn support(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        let arities: Vec<usize> = self.variables.iter().map(|v| v.arity).collect();
        let mut values = vec![0usize; arities.len()];
        let mut first = true;
        self.probs.iter().filter_map(move |&p| {
            if first {
                first = false;
            } else {
                advance(&mut values, &arities);
            }
            (p > 0.0).then(|| (values.clone(), p))
        })
    }

    fn positions(&self, names: &[&str]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(names.len());
        for name in names {
            let pos = self.position(name)?;
            if !out.contains(&pos) {
                out.push(pos);
            }
        }
        Ok(out)
    }

    /// Sum out every variable not in `keep`. The result lists the kept
    /// variables in this table's order.
    pub fn marginalize(&self, keep: &[&str]) -> Result<JointTable> {
        if keep.is_empty() {
            return Err(Error::InvalidTable("marginalize needs at least one variable".into()));
        }
        let mut positions = self.positions(keep)?;
        positions.sort_unstable();
        Ok(self.marginalize_positions(&positions))
    }

    fn marginalize_positions(&self, positions: &[usize]) -> JointTable {
        let kept: Vec<Variable> = positions.iter().map(|&i| self.variables[i].clone()).collect();
        let kept_strides = strides(&kept);
        let mut target_stride = vec![0usize; self.variables.len()];
        for (k, &pos) in positions.iter().enumerate() {
            target_stride[pos] = kept_strides[k];
        }
        let cells: usize = kept.iter().map(|v| v.arity).product();
        let mut probs = vec![0.0; cells];
        let arities: Vec<usize> = self.variables.iter().map(|v| v.arity).collect();
        let mut values = vec![0usize; arities.len()];
        let mut target = 0usize;
        for (i, &p) in self.probs.iter().enumerate() {
            if i > 0 {
                // Odometer step, keeping the target index in sync.
                let mut d = arities.len();
                while d > 0 {
                    d -= 1;
                    values[d] += 1;
                    target += target_stride[d];
                    if values[d] < arities[d] {
                        break;
                    }
                    target -= target_stride[d] * values[d];
                    values[d] = 0;
                }
            }
            probs[target] += p;
        }
        JointTable {
            variables: kept,
            probs,
        }
    }

    /// Joint entropy `H(vars)` in bits. The empty set has entropy 0.
    pub fn entropy(&self, vars: &[&str]) -> Result<f64> {
        if vars.is_empty() {
            return Ok(0.0);
        }
        let mut positions = self.positions(vars)?;
        positions.sort_unstable();
        let probs = if positions.len() == self.variables.len() {
            std::borrow::Cow::Borrowed(&self.probs)
        } else {
            std::borrow::Cow::Owned(self.marginalize_positions(&positions).probs)
        };
        Ok(entropy_of(&probs))
    }

    /// `I(A;B) = H(A) + H(B) - H(A,B)`.
    pub fn mutual_information(&self, a: &[&str], b: &[&str]) -> Result<f64> {
        self.conditional_mutual_information(a, b, &[])
    }

    /// `I(A;B|C) = H(A,C) + H(B,C) - H(A,B,C) - H(C)`.
    pub fn conditional_mutual_information(&self, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64> {
        disjoint(&[a, b, c])?;
        if a.is_empty() || b.is_empty() {
            return Ok(0.0);
        }
        let ac = concat(&[a, c]);
        let bc = concat(&[b, c]);
        let abc = concat(&[a, b, c]);
        let value = self.entropy(&ac)? + self.entropy(&bc)? - self.entropy(&abc)? - self.entropy(c)?;
        Tolerances::default().clamp_information(value)
    }

    /// Copy of this table with an extra variable `new_name` that always
    /// equals `source`.
    pub fn with_copy(&self, source: &str, new_name: &str) -> Result<JointTable> {
        let pos = self.position(source)?;
        if self.contains(new_name) {
            return Err(Error::DuplicateVariable(new_name.to_string()));
        }
        let mut variables = self.variables.clone();
        let mut copy = self.variables[pos].clone();
        copy.name = new_name.to_string();
        variables.push(copy);
        let atoms = self.support().map(|(mut values, p)| {
            values.push(values[pos]);
            (values, p)
        });
        JointTable::from_atoms(variables, atoms)
    }

    /// Total-variation distance to a table over the same variables.
    pub fn total_variation(&self, other: &JointTable) -> Result<f64> {
        if self.variables.len() != other.variables.len() {
            return Err(Error::InvalidTable("tables have different variables".into()));
        }
        let names = self.names();
        let aligned = other.reorder(&names)?;
        if aligned.variables != self.variables {
            return Err(Error::InvalidTable("tables have different alphabets".into()));
        }
        Ok(0.5
            * self
                .probs
                .iter()
                .zip(&aligned.probs)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }

    /// The same distribution with variables listed in `order`.
    pub fn reorder(&self, order: &[&str]) -> Result<JointTable> {
        if order.len() != self.variables.len() {
            return Err(Error::InvalidTable("reorder must list every variable".into()));
        }
        let positions = self.positions(order)?;
        if positions.len() != order.len() {
            return Err(Error::InvalidTable("reorder lists a variable twice".into()));
        }
        let variables: Vec<Variable> = positions.iter().map(|&i| self.variables[i].clone()).collect();
        let atoms = self
            .support()
            .map(|(values, p)| (positions.iter().map(|&i| values[i]).collect::<Vec<_>>(), p));
        JointTable::from_atoms(variables, atoms)
    }
}

impl fmt::Display for JointTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}  p", self.names().join(" "))?;
        for (values, p) in self.support() {
            let labels: Vec<String> = values
                .iter()
                .zip(&self.variables)
                .map(|(&v, var)| var.label(v))
                .collect();
            writeln!(f, "{}  {p:.6}", labels.join(" "))?;
        }
        Ok(())
    }
}

pub(crate) fn strides(variables: &[Variable]) -> Vec<usize> {
    let mut strides = vec![1usize; variables.len()];
    for i in (0..variables.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * variables[i + 1].arity;
    }
    strides
}

fn advance(values: &mut [usize], arities: &[usize]) {
    for d in (0..values.len()).rev() {
        values[d] += 1;
        if values[d] < arities[d] {
            return;
        }
        values[d] = 0;
    }
}

/// `-Σ p log2 p` over a probability vector, with `0 log 0 = 0`.
pub fn entropy_of(probs: &[f64]) -> f64 {
    let h: f64 = probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum();
    h.max(0.0)
}

/// Binary entropy `h_b(p)` in bits.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_of(&[p, 1.0 - p])
}

pub(crate) fn disjoint(sets: &[&[&str]]) -> Result<()> {
    let mut seen = HashSet::new();
    for set in sets {
        let mut local = HashSet::new();
        for name in *set {
            if local.insert(*name) && !seen.insert(*name) {
                return Err(Error::OverlappingSets(name.to_string()));
            }
        }
    }
    Ok(())
}

pub(crate) fn concat<'a>(sets: &[&[&'a str]]) -> Vec<&'a str> {
    sets.iter().flat_map(|s| s.iter().copied()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bit(name: &str) -> Variable {
        Variable::new(name, 2)
    }

    #[test]
    fn marginal_of_uniform_pair_is_fair_coin() {
        let t = JointTable::uniform(vec![bit("A"), bit("B")]).unwrap();
        let m = t.marginalize(&["A"]).unwrap();
        assert_eq!(m.probabilities(), &[0.5, 0.5]);
        assert_eq!(m.names(), vec!["A"]);
    }

    #[test]
    fn diagonal_projection() {
        let t = JointTable::new(vec![bit("Z"), bit("W")], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert_eq!(t.marginalize(&["W"]).unwrap().probabilities(), &[0.5, 0.5]);
        assert!((t.mutual_information(&["Z"], &["W"]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn keep_order_follows_table() {
        let t = JointTable::uniform(vec![bit("A"), Variable::new("B", 3), bit("C")]).unwrap();
        let m = t.marginalize(&["C", "A"]).unwrap();
        assert_eq!(m.names(), vec!["A", "C"]);
    }

    #[test]
    fn unknown_variable_is_named() {
        let t = JointTable::uniform(vec![bit("A")]).unwrap();
        let err = t.marginalize(&["Q"]).unwrap_err();
        assert!(err.to_string().contains("`Q`"));
    }

    #[test]
    fn entropy_conventions() {
        let coin = JointTable::uniform(vec![bit("A")]).unwrap();
        assert!((coin.entropy(&["A"]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(coin.entropy(&[]).unwrap(), 0.0);
        let point = JointTable::point_mass(vec![Variable::new("A", 3)], &[2]).unwrap();
        assert_eq!(point.entropy(&["A"]).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(JointTable::new(vec![bit("A")], vec![0.7, 0.7]).is_err());
        assert!(JointTable::new(vec![bit("A")], vec![-0.1, 1.1]).is_err());
        assert!(JointTable::new(vec![bit("A"), bit("A")], vec![0.25; 4]).is_err());
        assert!(JointTable::new(vec![Variable::new("A", 0)], vec![]).is_err());
        let wide: Vec<Variable> = (0..21).map(|i| bit(&format!("v{i}"))).collect();
        assert!(matches!(
            JointTable::uniform(wide),
            Err(Error::TableTooLarge { .. })
        ));
    }

    #[test]
    fn overlapping_sets_rejected() {
        let t = JointTable::uniform(vec![bit("A"), bit("B")]).unwrap();
        assert!(matches!(
            t.mutual_information(&["A"], &["A", "B"]),
            Err(Error::OverlappingSets(_))
        ));
    }

    #[test]
    fn empty_conditioning_is_plain_mi() {
        let t = JointTable::new(vec![bit("A"), bit("B")], vec![0.4, 0.1, 0.2, 0.3]).unwrap();
        let mi = t.mutual_information(&["A"], &["B"]).unwrap();
        let cmi = t.conditional_mutual_information(&["A"], &["B"], &[]).unwrap();
        assert_eq!(mi, cmi);
    }

    #[test]
    fn copy_variable_duplicates_values() {
        let t = JointTable::new(vec![bit("A"), bit("B")], vec![0.4, 0.1, 0.2, 0.3]).unwrap();
        let c = t.with_copy("B", "B2").unwrap();
        let h = t.entropy(&["B"]).unwrap();
        assert!((c.mutual_information(&["B"], &["B2"]).unwrap() - h).abs() < 1e-12);
        assert!((c.entropy(&["A", "B", "B2"]).unwrap() - t.entropy(&["A", "B"]).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn binary_entropy_values() {
        assert!((binary_entropy(0.5) - 1.0).abs() < 1e-15);
        assert_eq!(binary_entropy(0.0), 0.0);
        assert!((binary_entropy(1.0 / 3.0) - 0.918_295_834_054_489_6).abs() < 1e-12);
    }
}
