use std::collections::HashMap;

use super::expr::Code;
use super::{Scm, GRID_STEP, MAX_DERIVED_VALUES};
use crate::dist::{JointTable, Variable, DEFAULT_CELL_CAP};
use crate::error::{Error, Result};

/// Every positive-probability atom of the model's source product with the
/// (quantized) value of each variable.
///
/// Variables are stored column-wise as indices into per-variable sorted
/// alphabets. Derived variables are quantized in evaluation order and later
/// assignments read the quantized values, so each derived variable is an
/// exact function of its parents' alphabets.
#[derive(Debug, Clone)]
pub struct Enumeration {
    names: Vec<String>,
    alphabets: Vec<Vec<f64>>,
    columns: Vec<Vec<u32>>,
    probs: Vec<f64>,
    sources: usize,
}

/// Round raw values to the grid of step [`GRID_STEP`], doubling the step
/// until at most [`MAX_DERIVED_VALUES`] grid points are occupied. Integer
/// valued variables stay exact; sums of Gaussian bin representatives land
/// on shared grid points, as continuous values would overlap.
pub(crate) fn quantize(raw: &[f64]) -> (Vec<f64>, Vec<u32>) {
    let mut step = GRID_STEP;
    loop {
        let keys: Vec<i64> = raw.iter().map(|&x| (x / step).round() as i64).collect();
        let mut distinct = keys.clone();
        distinct.sort_unstable();
        distinct.dedup();
        if distinct.len() <= MAX_DERIVED_VALUES {
            let codes = keys
                .iter()
                .map(|k| distinct.binary_search(k).unwrap_or(0) as u32)
                .collect();
            return (distinct.iter().map(|&k| k as f64 * step).collect(), codes);
        }
        step *= 2.0;
    }
}

fn format_value(x: f64) -> String {
    if x == x.round() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:.6}")
    }
}

/// Enumerate the model with the default atom cap.
pub fn enumerate(scm: &Scm) -> Result<Enumeration> {
    Enumeration::build(scm, DEFAULT_CELL_CAP)
}

/// The full joint over protected, latents, features, output and label.
pub fn enumerate_joint(scm: &Scm) -> Result<JointTable> {
    enumerate(scm)?.joint()
}

/// The joint over the named variables only; avoids materializing the full
/// product table.
pub fn enumerate_joint_over(scm: &Scm, keep: &[&str]) -> Result<JointTable> {
    enumerate(scm)?.joint_over(keep)
}

impl Enumeration {
    pub fn build(scm: &Scm, cap: usize) -> Result<Enumeration> {
        let mut sources = vec![scm.protected()];
        sources.extend(scm.latents());
        let alphabets: Vec<_> = sources.iter().map(|s| s.distribution.alphabet()).collect();
        let count = alphabets
            .iter()
            .try_fold(1usize, |acc, a| acc.checked_mul(a.values.len()))
            .filter(|&c| c <= cap);
        let Some(count) = count else {
            let cells = alphabets.iter().map(|a| a.values.len() as u128).product();
            return Err(Error::TableTooLarge { cells, cap });
        };
        let mut columns: Vec<Vec<u32>> = vec![Vec::with_capacity(count); sources.len()];
        let mut probs = Vec::with_capacity(count);
        let mut cursor = vec![0usize; sources.len()];
        for _ in 0..count {
            let p: f64 = cursor.iter().zip(&alphabets).map(|(&i, a)| a.probs[i]).product();
            if p > 0.0 {
                for (col, &i) in columns.iter_mut().zip(&cursor) {
                    col.push(i as u32);
                }
                probs.push(p);
            }
            for d in (0..cursor.len()).rev() {
                cursor[d] += 1;
                if cursor[d] < alphabets[d].values.len() {
                    break;
                }
                cursor[d] = 0;
            }
        }
        let mut e = Enumeration {
            names: sources.iter().map(|s| s.name.clone()).collect(),
            alphabets: alphabets.into_iter().map(|a| a.values).collect(),
            columns,
            probs,
            sources: sources.len(),
        };
        let derived = scm
            .features()
            .iter()
            .map(|f| (&f.name, &f.expr))
            .chain(scm.output().map(|o| (&o.name, &o.expr)))
            .chain(scm.label().map(|l| (&l.name, &l.expr)));
        for (name, expr) in derived {
            let index: HashMap<&str, usize> = e.names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
            let code = expr
                .compile(&|v| index.get(v).copied())
                .map_err(|message| Error::Expr {
                    context: format!("{name} = {expr}"),
                    message,
                })?;
            let raw = e.evaluate(&code).map_err(|message| Error::Expr {
                context: format!("{name} = {expr}"),
                message,
            })?;
            e.push_quantized(name, &raw);
        }
        Ok(e)
    }

    fn evaluate(&self, code: &Code) -> std::result::Result<Vec<f64>, String> {
        let mut slots = vec![0.0; self.names.len()];
        (0..self.probs.len())
            .map(|atom| {
                for (v, slot) in slots.iter_mut().enumerate() {
                    *slot = self.alphabets[v][self.columns[v][atom] as usize];
                }
                code.eval(&slots)
            })
            .collect()
    }

    fn push_quantized(&mut self, name: &str, raw: &[f64]) {
        let (alphabet, codes) = quantize(raw);
        self.names.push(name.to_string());
        self.alphabets.push(alphabet);
        self.columns.push(codes);
    }

    /// Add a derived variable whose raw per-atom values are supplied by the
    /// caller (e.g. a trained model's decisions).
    pub fn with_variable(&self, name: &str, raw: &[f64]) -> Result<Enumeration> {
        if raw.len() != self.probs.len() {
            return Err(Error::InvalidTable(format!(
                "{} values supplied for {} atoms",
                raw.len(),
                self.probs.len()
            )));
        }
        if self.names.iter().any(|n| n == name) {
            return Err(Error::DuplicateVariable(name.to_string()));
        }
        let mut e = self.clone();
        e.push_quantized(name, raw);
        Ok(e)
    }

    pub fn names(&self) -> Vec<&str> {
        self.names.iter().map(String::as_str).collect()
    }

    pub fn atom_count(&self) -> usize {
        self.probs.len()
    }

    pub fn probability(&self, atom: usize) -> f64 {
        self.probs[atom]
    }

    fn index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn alphabet(&self, name: &str) -> Result<&[f64]> {
        Ok(&self.alphabets[self.index(name)?])
    }

    /// Quantized value of `name` in every atom.
    pub fn values(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.index(name)?;
        Ok(self.columns[i].iter().map(|&c| self.alphabets[i][c as usize]).collect())
    }

    /// Code (alphabet index) of each source variable for one atom.
    fn source_codes(&self, atom: usize) -> Vec<u32> {
        (0..self.sources).map(|v| self.columns[v][atom]).collect()
    }

    pub fn joint(&self) -> Result<JointTable> {
        self.joint_over(&self.names())
    }

    pub fn joint_over(&self, keep: &[&str]) -> Result<JointTable> {
        let idx: Vec<usize> = keep.iter().map(|n| self.index(n)).collect::<Result<_>>()?;
        let vars: Vec<Variable> = idx
            .iter()
            .map(|&i| {
                Variable::new(&self.names[i], self.alphabets[i].len())
                    .with_labels(self.alphabets[i].iter().map(|&x| format_value(x)).collect())
            })
            .collect();
        let atoms = (0..self.probs.len()).map(|a| {
            let values = idx.iter().map(|&i| self.columns[i][a] as usize).collect();
            (values, self.probs[a])
        });
        JointTable::from_atoms(vars, atoms)
    }
}

/// `E |h(Z,U) - h(Z',U)|` with `Z'` an independent copy of `Z`.
pub fn cci(scm: &Scm) -> Result<f64> {
    let output = scm.output_name()?;
    let e = enumerate(scm)?;
    let h = e.values(output)?;
    let z_alphabet = scm.protected().distribution.alphabet();
    // Group atoms by latent codes; within a group the atoms differ only in z.
    let mut groups: HashMap<Vec<u32>, Vec<(usize, f64)>> = HashMap::new();
    for atom in 0..e.atom_count() {
        let codes = e.source_codes(atom);
        let z = codes[0] as usize;
        let pu = e.probability(atom) / z_alphabet.probs[z];
        groups.entry(codes[1..].to_vec()).or_default().push((atom, pu));
    }
    let mut total = 0.0;
    for members in groups.values() {
        let pu = members[0].1;
        for &(a, _) in members {
            for &(b, _) in members {
                let za = e.columns[0][a] as usize;
                let zb = e.columns[0][b] as usize;
                total += pu * z_alphabet.probs[za] * z_alphabet.probs[zb] * (h[a] - h[b]).abs();
            }
        }
    }
    Ok(total)
}

/// `E |h(Z,U) - h~(Z,Z',U)|` where `h~` routes an independent copy `Z'`
/// into every syntactic occurrence of `Z` in general-feature assignments.
/// Occurrences reached only through other features are not rerouted.
pub fn path_specific_influence(scm: &Scm) -> Result<f64> {
    let output = scm.output_name()?;
    let (modified, copy) = scm.with_protected_copy_in_general()?;
    let e = enumerate(&modified)?;
    let h = e.values(output)?;
    let zi = 0;
    let ci = e.index(&copy)?;
    // Value with Z' = Z, keyed by all source codes except the copy.
    let mut diagonal: HashMap<Vec<u32>, f64> = HashMap::new();
    for atom in 0..e.atom_count() {
        if e.columns[zi][atom] == e.columns[ci][atom] {
            let mut key = e.source_codes(atom);
            key.remove(ci);
            diagonal.insert(key, h[atom]);
        }
    }
    let mut total = 0.0;
    for atom in 0..e.atom_count() {
        let mut key = e.source_codes(atom);
        key.remove(ci);
        // The diagonal atom exists because p(z) > 0 for every atom's z.
        let base = diagonal.get(&key).copied().unwrap_or(h[atom]);
        total += e.probability(atom) * (base - h[atom]).abs();
    }
    Ok(total)
}
