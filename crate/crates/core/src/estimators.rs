//! Correlation-based information estimates on samples, with analytic
//! gradients with respect to the model outputs.
//!
//! Every estimate uses the Gaussian relation `I = −½ log2(1 − ρ²)` with the
//! sample Pearson correlation `ρ`. Conditional variants average that
//! quantity over bins of the conditioning variables, weighted by bin mass.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `ρ²` is clipped to this value so the estimate stays finite.
pub const RHO2_CLIP: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinStrategy {
    Quantile,
    EqualWidth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningSpec {
    pub variables: Vec<String>,
    pub bins: usize,
    pub strategy: BinStrategy,
    /// Cells lighter than this are merged with their neighbours.
    pub floor: f64,
}

impl BinningSpec {
    /// Quantile bins with the default floor `1/(4n)`.
    pub fn quantile(variables: &[&str], bins: usize) -> BinningSpec {
        BinningSpec {
            variables: variables.iter().map(|s| s.to_string()).collect(),
            bins,
            strategy: BinStrategy::Quantile,
            floor: 1.0 / (4.0 * bins as f64),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 {
            return Err(Error::Config(format!("bin count must be at least 2, got {}", self.bins)));
        }
        if !(self.floor > 0.0 && self.floor <= 1.0 / self.bins as f64) {
            return Err(Error::Config(format!(
                "mass floor must lie in (0, 1/{}], got {}",
                self.bins, self.floor
            )));
        }
        Ok(())
    }
}

/// Fixed assignment of samples to conditioning cells.
#[derive(Debug, Clone, PartialEq)]
pub struct BinAssignment {
    cell_of: Vec<usize>,
    masses: Vec<f64>,
}

fn column_edges(col: &[f64], bins: usize, strategy: BinStrategy) -> Vec<f64> {
    let mut sorted = col.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    let mut edges: Vec<f64> = match strategy {
        BinStrategy::Quantile => (1..bins)
            .map(|k| sorted[(k * sorted.len() / bins).min(sorted.len() - 1)])
            .collect(),
        BinStrategy::EqualWidth => (1..bins).map(|k| lo + (hi - lo) * k as f64 / bins as f64).collect(),
    };
    edges.retain(|&e| e > lo);
    edges.dedup();
    edges
}

impl BinAssignment {
    /// Bin each conditioning column, form the lexicographic product of the
    /// per-column bins, and merge adjacent light cells until every cell
    /// carries at least the floor mass.
    pub fn fit(columns: &[&[f64]], spec: &BinningSpec) -> Result<BinAssignment> {
        spec.validate()?;
        let n = columns.first().map_or(0, |c| c.len());
        if columns.is_empty() {
            return Err(Error::Estimator("binning needs at least one conditioning column".into()));
        }
        if n == 0 || columns.iter().any(|c| c.len() != n) {
            return Err(Error::Estimator("conditioning columns must be non-empty and of equal length".into()));
        }
        let per_column: Vec<Vec<usize>> = columns
            .iter()
            .map(|col| {
                let edges = column_edges(col, spec.bins, spec.strategy);
                col.iter().map(|x| edges.partition_point(|e| e <= x)).collect()
            })
            .collect();
        let keys: Vec<Vec<usize>> = (0..n).map(|i| per_column.iter().map(|c| c[i]).collect()).collect();
        let mut distinct = keys.clone();
        distinct.sort();
        distinct.dedup();
        let mut counts = vec![0usize; distinct.len()];
        let raw: Vec<usize> = keys
            .iter()
            .map(|k| {
                let c = distinct.binary_search(k).unwrap_or(0);
                counts[c] += 1;
                c
            })
            .collect();
        // Greedy merge in lexicographic order.
        let floor_count = spec.floor * n as f64;
        let mut group_of = vec![0usize; distinct.len()];
        let mut group_mass: Vec<usize> = Vec::new();
        let mut current = 0usize;
        for (c, &count) in counts.iter().enumerate() {
            if group_mass.is_empty() || (group_mass[current] as f64) >= floor_count {
                group_mass.push(0);
                current = group_mass.len() - 1;
            }
            group_of[c] = current;
            group_mass[current] += count;
        }
        if group_mass.len() > 1 && (group_mass[current] as f64) < floor_count {
            let last = group_mass.pop().unwrap_or(0);
            group_mass[current - 1] += last;
            for g in group_of.iter_mut().filter(|g| **g == current) {
                *g = current - 1;
            }
        }
        Ok(BinAssignment {
            cell_of: raw.iter().map(|&c| group_of[c]).collect(),
            masses: group_mass.iter().map(|&m| m as f64 / n as f64).collect(),
        })
    }

    /// Every sample in one cell.
    pub fn single(n: usize) -> BinAssignment {
        BinAssignment {
            cell_of: vec![0; n],
            masses: vec![1.0],
        }
    }

    pub fn cell_count(&self) -> usize {
        self.masses.len()
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn cell_of(&self) -> &[usize] {
        &self.cell_of
    }

    pub fn len(&self) -> usize {
        self.cell_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cell_of.is_empty()
    }

    /// The assignment seen by a subset of the samples: cells keep their
    /// membership, masses are recomputed and empty cells dropped.
    pub fn restrict(&self, rows: &[usize]) -> BinAssignment {
        let mut counts = vec![0usize; self.masses.len()];
        for &r in rows {
            counts[self.cell_of[r]] += 1;
        }
        let mut renumber = vec![usize::MAX; counts.len()];
        let mut masses = Vec::new();
        for (c, &k) in counts.iter().enumerate() {
            if k > 0 {
                renumber[c] = masses.len();
                masses.push(k as f64 / rows.len() as f64);
            }
        }
        BinAssignment {
            cell_of: rows.iter().map(|&r| renumber[self.cell_of[r]]).collect(),
            masses,
        }
    }

    fn members(&self) -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); self.masses.len()];
        for (i, &c) in self.cell_of.iter().enumerate() {
            m[c].push(i);
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinContribution {
    pub mass: f64,
    pub correlation: f64,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyValue {
    pub value: f64,
    pub per_bin: Option<Vec<BinContribution>>,
    pub warning: Option<String>,
}

/// `−½ log2(1 − ρ²)` with `ρ²` clipped.
pub fn gaussian_mi(rho: f64) -> f64 {
    -0.5 * (1.0 - (rho * rho).min(RHO2_CLIP)).log2()
}

/// `d/dρ` of [`gaussian_mi`]; zero inside the clipped region.
pub fn gaussian_mi_slope(rho: f64) -> f64 {
    if rho * rho >= RHO2_CLIP {
        0.0
    } else {
        rho / (std::f64::consts::LN_2 * (1.0 - rho * rho))
    }
}

struct Moments {
    rho: f64,
    sxx: f64,
    syy: f64,
    mx: f64,
    my: f64,
}

fn moments(x: &[f64], y: &[f64], idx: Option<&[usize]>) -> Option<Moments> {
    let pick = |i: usize| idx.map_or(i, |ix| ix[i]);
    let n = idx.map_or(x.len(), |ix| ix.len());
    if n < 2 {
        return None;
    }
    let (mut mx, mut my) = (0.0, 0.0);
    for i in 0..n {
        mx += x[pick(i)];
        my += y[pick(i)];
    }
    mx /= n as f64;
    my /= n as f64;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (dx, dy) = (x[pick(i)] - mx, y[pick(i)] - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    // Relative guard against round-off in constant columns.
    let scale = |s: f64, m: f64| s <= 1e-24 * (1.0 + m * m) * n as f64;
    if scale(sxx, mx) || scale(syy, my) {
        return None;
    }
    Some(Moments {
        rho: (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0),
        sxx,
        syy,
        mx,
        my,
    })
}

/// Sample Pearson correlation, or `None` when either side is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    moments(x, y, None).map(|m| m.rho)
}

fn check_pair(z: &[f64], y: &[f64]) -> Result<()> {
    if z.len() != y.len() {
        return Err(Error::Estimator(format!("sample lengths differ: {} vs {}", z.len(), y.len())));
    }
    if z.len() < 2 {
        return Err(Error::Estimator("at least 2 samples are needed".into()));
    }
    Ok(())
}

fn constant_warning(z: &[f64], y: &[f64]) -> Option<String> {
    if pearson(z, z).is_none() {
        Some("protected attribute is constant; estimate set to 0".into())
    } else if pearson(y, y).is_none() {
        Some("output is constant; estimate set to 0".into())
    } else {
        None
    }
}

/// Accumulate `scale · d(gaussian_mi(ρ))/dy_i` over the samples `idx`.
fn add_gradient(z: &[f64], y: &[f64], idx: Option<&[usize]>, scale: f64, grad: &mut [f64]) {
    let Some(m) = moments(z, y, idx) else {
        return;
    };
    let slope = gaussian_mi_slope(m.rho) * scale;
    if slope == 0.0 {
        return;
    }
    let norm = (m.sxx * m.syy).sqrt();
    let n = idx.map_or(z.len(), |ix| ix.len());
    for k in 0..n {
        let i = idx.map_or(k, |ix| ix[k]);
        let d = (z[i] - m.mx) / norm - m.rho * (y[i] - m.my) / m.syy;
        grad[i] += slope * d;
    }
}

/// `Ĩ(Z;Ŷ) = −½ log2(1 − ρ²)`.
pub fn mi_gauss(z: &[f64], y: &[f64]) -> Result<PenaltyValue> {
    check_pair(z, y)?;
    Ok(PenaltyValue {
        value: pearson(z, y).map_or(0.0, gaussian_mi),
        per_bin: None,
        warning: constant_warning(z, y),
    })
}

pub fn mi_gauss_gradient(z: &[f64], y: &[f64]) -> Result<(PenaltyValue, Vec<f64>)> {
    let value = mi_gauss(z, y)?;
    let mut grad = vec![0.0; y.len()];
    add_gradient(z, y, None, 1.0, &mut grad);
    Ok((value, grad))
}

/// Squared multiple correlation of `z` on the columns of `x`.
pub fn multiple_correlation_sq(z: &[f64], x: &[&[f64]]) -> f64 {
    let n = z.len();
    let k = x.len();
    if k == 0 || n < 2 {
        return 0.0;
    }
    if k == 1 {
        return pearson(z, x[0]).map_or(0.0, |r| r * r);
    }
    let mean = |c: &[f64]| c.iter().sum::<f64>() / n as f64;
    let mz = mean(z);
    let mx: Vec<f64> = x.iter().map(|c| mean(c)).collect();
    let mut s = vec![vec![0.0; k]; k];
    let mut c = vec![0.0; k];
    let mut szz = 0.0;
    for i in 0..n {
        let dz = z[i] - mz;
        szz += dz * dz;
        for a in 0..k {
            let da = x[a][i] - mx[a];
            c[a] += da * dz;
            for b in 0..k {
                s[a][b] += da * (x[b][i] - mx[b]);
            }
        }
    }
    if szz <= 0.0 {
        return 0.0;
    }
    let trace: f64 = (0..k).map(|a| s[a][a]).sum();
    for (a, row) in s.iter_mut().enumerate() {
        row[a] += 1e-12 * trace.max(1e-300);
    }
    let beta = solve(s, c.clone());
    let explained: f64 = beta.iter().zip(&c).map(|(b, c)| b * c).sum();
    (explained / szz).clamp(0.0, 1.0)
}

/// Gaussian elimination with partial pivoting on a small dense system.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let k = b.len();
    for col in 0..k {
        let piv = (col..k)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        a.swap(col, piv);
        b.swap(col, piv);
        let d = a[col][col];
        if d.abs() < 1e-300 {
            continue;
        }
        for row in col + 1..k {
            let f = a[row][col] / d;
            for j in col..k {
                a[row][j] -= f * a[col][j];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        let s: f64 = (row + 1..k).map(|j| a[row][j] * x[j]).sum();
        x[row] = if a[row][row].abs() < 1e-300 { 0.0 } else { (b[row] - s) / a[row][row] };
    }
    x
}

/// `max(0, Ĩ(Z;Ŷ) − Ĩ(Z;X_c))`, with `Ĩ(Z;X_c)` from the squared multiple
/// correlation when `X_c` has several columns.
pub fn uni_gauss(z: &[f64], y: &[f64], xc: &[&[f64]]) -> Result<PenaltyValue> {
    Ok(uni_gauss_gradient(z, y, xc)?.0)
}

pub fn uni_gauss_gradient(z: &[f64], y: &[f64], xc: &[&[f64]]) -> Result<(PenaltyValue, Vec<f64>)> {
    check_pair(z, y)?;
    if xc.iter().any(|c| c.len() != z.len()) {
        return Err(Error::Estimator("critical columns must match the sample length".into()));
    }
    let (mi, grad) = mi_gauss_gradient(z, y)?;
    let i_zx = -0.5 * (1.0 - multiple_correlation_sq(z, xc).min(RHO2_CLIP)).log2();
    if mi.value > i_zx {
        Ok((
            PenaltyValue {
                value: mi.value - i_zx,
                per_bin: None,
                warning: mi.warning,
            },
            grad,
        ))
    } else {
        Ok((
            PenaltyValue {
                value: 0.0,
                per_bin: None,
                warning: mi.warning,
            },
            vec![0.0; y.len()],
        ))
    }
}

/// `Σ_i Pr(cell i) · (−½ log2(1 − ρ_i²))` over the fixed cells.
pub fn cmi_binned(z: &[f64], y: &[f64], cells: &BinAssignment) -> Result<PenaltyValue> {
    Ok(cmi_binned_gradient(z, y, cells)?.0)
}

pub fn cmi_binned_gradient(z: &[f64], y: &[f64], cells: &BinAssignment) -> Result<(PenaltyValue, Vec<f64>)> {
    check_pair(z, y)?;
    if cells.len() != z.len() {
        return Err(Error::Estimator(format!(
            "bin assignment covers {} samples, got {}",
            cells.len(),
            z.len()
        )));
    }
    let mut grad = vec![0.0; y.len()];
    let mut per_bin = Vec::with_capacity(cells.cell_count());
    let mut value = 0.0;
    for (members, &mass) in cells.members().iter().zip(cells.masses()) {
        let rho = moments(z, y, Some(members)).map_or(0.0, |m| m.rho);
        let contribution = mass * gaussian_mi(rho);
        value += contribution;
        per_bin.push(BinContribution {
            mass,
            correlation: rho,
            contribution,
        });
        add_gradient(z, y, Some(members), mass, &mut grad);
    }
    let warning = if cells.cell_count() == 1 {
        Some("all mass in one cell; estimate equals the unconditional one".into())
    } else {
        constant_warning(z, y)
    };
    Ok((
        PenaltyValue {
            value,
            per_bin: Some(per_bin),
            warning,
        },
        grad,
    ))
}
