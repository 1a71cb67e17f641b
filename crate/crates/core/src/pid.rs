//! Partial information decomposition of `I(Z;(A,B))` into unique,
//! redundant and synergistic parts.
//!
//! The unique information `Uni(Z:A|B)` is the minimum of `I_Q(Z;A|B)` over
//! the polytope `Δ_p` of joints `Q` on `(Z,A,B)` that keep the true `(Z,A)`
//! and `(Z,B)` marginals. Every `Q ∈ Δ_p` is written `q(z,a,b) = p(z) q(a,b|z)`
//! where each slice `q(·,·|z)` is a coupling of `p(a|z)` and `p(b|z)`.
//!
//! Because `I_Q(Z;B) = I(Z;B)` is fixed on `Δ_p`, minimizing `I_Q(Z;A|B)` is
//! the same as minimizing `I_Q(Z;(A,B)) = min_r D(Q ‖ p(z) r(a,b))`. The
//! solver alternates the two exact partial minimizations:
//!
//! * `r ← q(a,b)` (the reference that is optimal for fixed `Q`), and
//! * per slice, the I-projection of `r` onto the couplings of `p(a|z)` and
//!   `p(b|z)`, computed by Sinkhorn scaling.
//!
//! Both sets are convex and the divergence is jointly convex, so the
//! objective decreases monotonically to the global minimum. A Lagrangian
//! lower bound on the linearized problem gives a certificate of the gap.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dist::{concat, disjoint, JointTable, Variable};
use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

/// The four PID components of one `(Z; A, B)` triple, in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidResult {
    pub uni_a_given_b: f64,
    pub uni_b_given_a: f64,
    pub redundancy: f64,
    pub synergy: f64,
    /// `I(Z;(A,B))`.
    pub total: f64,
    pub solver_iterations: usize,
    pub objective_gap: f64,
}

impl PidResult {
    pub fn sum(&self) -> f64 {
        self.uni_a_given_b + self.uni_b_given_a + self.redundancy + self.synergy
    }
}

/// A point of `Δ_p`: the couplings `q(a,b|z)` and the full joint they induce.
#[derive(Debug, Clone)]
pub struct Coupling {
    slices: Vec<Slice>,
    z_labels: Vec<String>,
    a_labels: Vec<String>,
    b_labels: Vec<String>,
}

/// Result of [`unique_information`].
#[derive(Debug, Clone)]
pub struct UniqueInformation {
    /// `Uni(Z:A|B)` in bits.
    pub value: f64,
    /// Upper bound on `value - optimum` certified at termination (may be
    /// infinite when the certificate is unavailable).
    pub gap: f64,
    pub iterations: usize,
    pub witness: Coupling,
}

/// Per-`z` slice of the problem: the support of `p(a|z)` and `p(b|z)` and
/// the current coupling on their product.
#[derive(Debug, Clone)]
struct Slice {
    pz: f64,
    rows: Vec<usize>,
    cols: Vec<usize>,
    pa: Vec<f64>,
    pb: Vec<f64>,
    /// Row-major `rows.len() × cols.len()` coupling `q(a,b|z)`.
    q: Vec<f64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl Slice {
    fn free_parameters(&self) -> usize {
        (self.rows.len() - 1) * (self.cols.len() - 1)
    }
}

/// Compressed `p(z,a,b)` with every slot flattened to the tuples in its
/// support.
#[derive(Debug, Clone)]
struct Problem {
    slices: Vec<Slice>,
    na: usize,
    nb: usize,
    pb: Vec<f64>,
    z_labels: Vec<String>,
    a_labels: Vec<String>,
    b_labels: Vec<String>,
    /// `(z, a, b, mass)` atoms of the true distribution.
    atoms: Vec<(usize, usize, usize, f64)>,
}

fn tuple_label(joint: &JointTable, positions: &[usize], values: &[usize]) -> String {
    let parts: Vec<String> = positions
        .iter()
        .map(|&p| joint.variables()[p].label(values[p]))
        .collect();
    if parts.len() == 1 {
        parts.into_iter().next().unwrap_or_default()
    } else {
        format!("({})", parts.join(","))
    }
}

#[derive(Default)]
struct Interner {
    index: HashMap<Vec<usize>, usize>,
    labels: Vec<String>,
}

impl Interner {
    fn intern(&mut self, key: Vec<usize>, label: impl FnOnce() -> String) -> usize {
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        let i = self.labels.len();
        self.labels.push(label());
        self.index.insert(key, i);
        i
    }
}

impl Problem {
    fn build(joint: &JointTable, z: &[&str], a: &[&str], b: &[&str]) -> Result<Problem> {
        let all = concat(&[z, a, b]);
        let table = joint.marginalize(&all)?;
        let pos = |names: &[&str]| -> Result<Vec<usize>> {
            names.iter().map(|n| table.position(n)).collect()
        };
        let (zp, ap, bp) = (pos(z)?, pos(a)?, pos(b)?);
        let (mut zi, mut ai, mut bi) = (Interner::default(), Interner::default(), Interner::default());
        let mut atoms = Vec::new();
        for (values, p) in table.support() {
            let key = |ps: &[usize]| ps.iter().map(|&i| values[i]).collect::<Vec<_>>();
            let zk = zi.intern(key(&zp), || tuple_label(&table, &zp, &values));
            let ak = ai.intern(key(&ap), || tuple_label(&table, &ap, &values));
            let bk = bi.intern(key(&bp), || tuple_label(&table, &bp, &values));
            atoms.push((zk, ak, bk, p));
        }
        let (nz, na, nb) = (zi.labels.len(), ai.labels.len(), bi.labels.len());
        let mut pz = vec![0.0; nz];
        let mut pza: Vec<HashMap<usize, f64>> = vec![HashMap::new(); nz];
        let mut pzb: Vec<HashMap<usize, f64>> = vec![HashMap::new(); nz];
        let mut pb = vec![0.0; nb];
        for &(zk, ak, bk, p) in &atoms {
            pz[zk] += p;
            *pza[zk].entry(ak).or_default() += p;
            *pzb[zk].entry(bk).or_default() += p;
            pb[bk] += p;
        }
        let mut slices = Vec::with_capacity(nz);
        for zk in 0..nz {
            let mut rows: Vec<(usize, f64)> = pza[zk].iter().map(|(&k, &v)| (k, v / pz[zk])).collect();
            let mut cols: Vec<(usize, f64)> = pzb[zk].iter().map(|(&k, &v)| (k, v / pz[zk])).collect();
            rows.sort_by_key(|r| r.0);
            cols.sort_by_key(|c| c.0);
            let pa: Vec<f64> = rows.iter().map(|r| r.1).collect();
            let pbz: Vec<f64> = cols.iter().map(|c| c.1).collect();
            // Conditional-independence coupling: a feasible interior point.
            let q: Vec<f64> = pa
                .iter()
                .flat_map(|&x| pbz.iter().map(move |&y| x * y))
                .collect();
            slices.push(Slice {
                pz: pz[zk],
                alpha: vec![1.0; rows.len()],
                beta: vec![1.0; cols.len()],
                rows: rows.into_iter().map(|r| r.0).collect(),
                cols: cols.into_iter().map(|c| c.0).collect(),
                pa,
                pb: pbz,
                q,
            });
        }
        Ok(Problem {
            slices,
            na,
            nb,
            pb,
            z_labels: zi.labels,
            a_labels: ai.labels,
            b_labels: bi.labels,
            atoms,
        })
    }

    fn free_parameters(&self) -> usize {
        self.slices.iter().map(Slice::free_parameters).sum()
    }

    /// `r(a,b) = Σ_z p(z) q(a,b|z)`, dense `na × nb`.
    fn reference(&self) -> Vec<f64> {
        let mut r = vec![0.0; self.na * self.nb];
        self.reference_into(&mut r);
        r
    }

    fn reference_into(&self, r: &mut [f64]) {
        r.iter_mut().for_each(|x| *x = 0.0);
        for s in &self.slices {
            let nc = s.cols.len();
            for (i, &a) in s.rows.iter().enumerate() {
                for (j, &b) in s.cols.iter().enumerate() {
                    r[a * self.nb + b] += s.pz * s.q[i * nc + j];
                }
            }
        }
    }

    /// `I_Q(Z;A|B)` in bits for the current couplings and their reference.
    fn objective(&self, r: &[f64]) -> f64 {
        let mut total = 0.0;
        for s in &self.slices {
            let nc = s.cols.len();
            for (i, &a) in s.rows.iter().enumerate() {
                for (j, &b) in s.cols.iter().enumerate() {
                    let q = s.q[i * nc + j];
                    let rab = r[a * self.nb + b];
                    // Subnormal masses can underflow `rab`; their terms are
                    // negligible.
                    if q > 0.0 && rab > 0.0 {
                        total += s.pz * q * (q.log2() + self.pb[b].log2() - rab.log2() - s.pb[j].log2());
                    }
                }
            }
        }
        total
    }

    /// Certified upper bound on `objective - optimum` from the linearization
    /// at the current point and a dual-feasible bound on each slice's
    /// transportation problem.
    fn gap(&self, r: &[f64]) -> f64 {
        let mut gap = 0.0;
        for s in &self.slices {
            let (nr, nc) = (s.rows.len(), s.cols.len());
            if nr == 1 || nc == 1 {
                continue;
            }
            let mut g = vec![0.0; nr * nc];
            for (i, &a) in s.rows.iter().enumerate() {
                for (j, &b) in s.cols.iter().enumerate() {
                    let q = s.q[i * nc + j];
                    let rab = r[a * self.nb + b];
                    g[i * nc + j] = if rab <= 0.0 {
                        0.0
                    } else if q <= 0.0 {
                        return f64::INFINITY;
                    } else {
                        (s.pz * q / rab).log2()
                    };
                }
            }
            let linear: f64 = g.iter().zip(&s.q).map(|(g, q)| g * q).sum();
            gap += s.pz * (linear - transport_lower_bound(&g, nr, nc, &s.pa, &s.pb));
        }
        gap.max(0.0)
    }

    /// Largest column-sum error over all slices.
    fn column_violation(&self) -> f64 {
        let mut worst = 0.0f64;
        for s in &self.slices {
            let nc = s.cols.len();
            for (j, &pb) in s.pb.iter().enumerate() {
                let c: f64 = (0..s.rows.len()).map(|i| s.q[i * nc + j]).sum();
                worst = worst.max((c - pb).abs());
            }
        }
        worst
    }

    /// Move every slice onto its transport polytope exactly: scale rows and
    /// columns down to their targets, then add the rank-one correction
    /// `e_r e_c^T / |e_r|`. The objective at the result is a genuine
    /// `I_Q(Z;A|B)` even when Sinkhorn stalled near the boundary.
    fn round_feasible(&mut self) {
        for s in &mut self.slices {
            let (nr, nc) = (s.rows.len(), s.cols.len());
            if nr == 1 || nc == 1 {
                continue;
            }
            for i in 0..nr {
                let row: f64 = s.q[i * nc..(i + 1) * nc].iter().sum();
                if row > s.pa[i] {
                    let f = s.pa[i] / row;
                    s.q[i * nc..(i + 1) * nc].iter_mut().for_each(|x| *x *= f);
                }
            }
            for j in 0..nc {
                let col: f64 = (0..nr).map(|i| s.q[i * nc + j]).sum();
                if col > s.pb[j] {
                    let f = s.pb[j] / col;
                    (0..nr).for_each(|i| s.q[i * nc + j] *= f);
                }
            }
            let er: Vec<f64> = (0..nr)
                .map(|i| (s.pa[i] - s.q[i * nc..(i + 1) * nc].iter().sum::<f64>()).max(0.0))
                .collect();
            let ec: Vec<f64> = (0..nc)
                .map(|j| (s.pb[j] - (0..nr).map(|i| s.q[i * nc + j]).sum::<f64>()).max(0.0))
                .collect();
            let total: f64 = er.iter().sum();
            if total > 0.0 {
                for i in 0..nr {
                    for j in 0..nc {
                        s.q[i * nc + j] += er[i] * ec[j] / total;
                    }
                }
            }
        }
    }

    /// One alternating step: I-project `r` onto every slice's couplings,
    /// with at most `sweeps` Sinkhorn sweeps per slice. Scalings are warm
    /// started, so a truncated projection keeps improving on later steps.
    fn project(&mut self, r: &[f64], sweeps: usize) {
        let nb = self.nb;
        for s in &mut self.slices {
            let (nr, nc) = (s.rows.len(), s.cols.len());
            if nr == 1 || nc == 1 {
                // The coupling is forced.
                continue;
            }
            let mut k = vec![0.0; nr * nc];
            for (i, &a) in s.rows.iter().enumerate() {
                for (j, &b) in s.cols.iter().enumerate() {
                    k[i * nc + j] = r[a * nb + b];
                }
            }
            sinkhorn(&k, nr, nc, (&s.pa, &s.pb), (&mut s.alpha, &mut s.beta), sweeps);
            for i in 0..nr {
                for j in 0..nc {
                    s.q[i * nc + j] = s.alpha[i] * k[i * nc + j] * s.beta[j];
                }
            }
            // Sinkhorn stops on row error; restore exact row sums so the
            // iterate stays in Δ_p to machine precision.
            for i in 0..nr {
                let row: f64 = s.q[i * nc..(i + 1) * nc].iter().sum();
                if row > 0.0 {
                    let f = s.pa[i] / row;
                    s.q[i * nc..(i + 1) * nc].iter_mut().for_each(|x| *x *= f);
                }
            }
        }
    }

    fn coupling(&self) -> Coupling {
        Coupling {
            slices: self.slices.clone(),
            z_labels: self.z_labels.clone(),
            a_labels: self.a_labels.clone(),
            b_labels: self.b_labels.clone(),
        }
    }

    /// The true distribution as a point of `Δ_p`.
    fn true_coupling(&self) -> Coupling {
        let mut slices = self.slices.clone();
        let mut lookup: Vec<HashMap<(usize, usize), f64>> = vec![HashMap::new(); slices.len()];
        for &(z, a, b, p) in &self.atoms {
            lookup[z].insert((a, b), p);
        }
        for (zk, s) in slices.iter_mut().enumerate() {
            let nc = s.cols.len();
            for (i, &a) in s.rows.iter().enumerate() {
                for (j, &b) in s.cols.iter().enumerate() {
                    s.q[i * nc + j] = lookup[zk].get(&(a, b)).copied().unwrap_or(0.0) / s.pz;
                }
            }
        }
        Coupling {
            slices,
            z_labels: self.z_labels.clone(),
            a_labels: self.a_labels.clone(),
            b_labels: self.b_labels.clone(),
        }
    }
}

/// Sinkhorn scaling of a non-negative kernel to row sums `pa` and column
/// sums `pb`, warm-started from the given scalings.
fn sinkhorn(k: &[f64], nr: usize, nc: usize, marginals: (&[f64], &[f64]), scalings: (&mut [f64], &mut [f64]), sweeps: usize) {
    const TARGET: f64 = 1e-13;
    let (pa, pb) = marginals;
    let (alpha, beta) = scalings;
    let mut col = vec![0.0; nc];
    for _ in 0..sweeps {
        // Row error of the previous sweep is measured while updating alpha.
        let mut err = 0.0;
        for i in 0..nr {
            let row = &k[i * nc..(i + 1) * nc];
            let s: f64 = row.iter().zip(beta.iter()).map(|(k, b)| k * b).sum();
            err += (alpha[i] * s - pa[i]).abs();
            alpha[i] = if s > 0.0 { pa[i] / s } else { 0.0 };
        }
        if err < TARGET {
            break;
        }
        col.iter_mut().for_each(|c| *c = 0.0);
        for i in 0..nr {
            let a = alpha[i];
            for (c, k) in col.iter_mut().zip(&k[i * nc..(i + 1) * nc]) {
                *c += a * k;
            }
        }
        for j in 0..nc {
            beta[j] = if col[j] > 0.0 { pb[j] / col[j] } else { 0.0 };
        }
    }
    // Keep the scalings in a sane range for the next warm start.
    let scale = alpha.iter().cloned().fold(0.0f64, f64::max);
    if scale > 0.0 && scale.is_finite() {
        alpha.iter_mut().for_each(|a| *a /= scale);
        beta.iter_mut().for_each(|b| *b *= scale);
    }
}

/// Lower bound on `min Σ g(a,b) s(a,b)` over couplings `s` of `pa` and `pb`
/// from dual-feasible potentials built by alternating c-transforms.
fn transport_lower_bound(g: &[f64], nr: usize, nc: usize, pa: &[f64], pb: &[f64]) -> f64 {
    let mut u = vec![0.0; nr];
    let mut v = vec![0.0; nc];
    for _ in 0..4 {
        for i in 0..nr {
            u[i] = (0..nc).map(|j| g[i * nc + j] - v[j]).fold(f64::INFINITY, f64::min);
        }
        for j in 0..nc {
            v[j] = (0..nr).map(|i| g[i * nc + j] - u[i]).fold(f64::INFINITY, f64::min);
        }
    }
    u.iter().zip(pa).map(|(u, p)| u * p).sum::<f64>() + v.iter().zip(pb).map(|(v, p)| v * p).sum::<f64>()
}

impl Coupling {
    /// The joint `q(z,a,b)` over three flattened slot variables `Z`, `A`, `B`
    /// whose labels name the original tuples.
    pub fn distribution(&self) -> Result<JointTable> {
        let vars = vec![
            Variable::new("Z", self.z_labels.len()).with_labels(self.z_labels.clone()),
            Variable::new("A", self.a_labels.len()).with_labels(self.a_labels.clone()),
            Variable::new("B", self.b_labels.len()).with_labels(self.b_labels.clone()),
        ];
        let mut atoms = Vec::new();
        for (zk, s) in self.slices.iter().enumerate() {
            let nc = s.cols.len();
            for (i, &a) in s.rows.iter().enumerate() {
                for (j, &b) in s.cols.iter().enumerate() {
                    let q = s.pz * s.q[i * nc + j];
                    if q > 0.0 {
                        atoms.push((vec![zk, a, b], q));
                    }
                }
            }
        }
        JointTable::from_atoms(vars, atoms)
    }

    /// Largest violation of the per-`z` marginal constraints.
    pub fn marginal_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for s in &self.slices {
            let nc = s.cols.len();
            for (i, &pa) in s.pa.iter().enumerate() {
                let row: f64 = s.q[i * nc..(i + 1) * nc].iter().sum();
                worst = worst.max((row - pa).abs());
            }
            for (j, &pb) in s.pb.iter().enumerate() {
                let col: f64 = (0..s.rows.len()).map(|i| s.q[i * nc + j]).sum();
                worst = worst.max((col - pb).abs());
            }
            if let Some(neg) = s.q.iter().cloned().reduce(f64::min) {
                worst = worst.max(-neg);
            }
        }
        worst
    }

    /// `I_Q(Z;A|B)` of this coupling, in bits.
    pub fn conditional_information(&self) -> Result<f64> {
        self.distribution()?
            .conditional_mutual_information(&["Z"], &["A"], &["B"])
    }
}

fn check_slots(z: &[&str], a: &[&str], b: &[&str]) -> Result<()> {
    disjoint(&[z, a, b])?;
    if z.is_empty() {
        return Err(Error::Config("the target slot Z must name at least one variable".into()));
    }
    Ok(())
}

/// `Uni(Z:A|B) = min_{Q ∈ Δ_p} I_Q(Z;A|B)` with a witness coupling.
pub fn unique_information(
    joint: &JointTable,
    z: &[&str],
    a: &[&str],
    b: &[&str],
    tol: f64,
) -> Result<UniqueInformation> {
    let tolerances = Tolerances {
        solver: tol,
        ..Tolerances::default()
    };
    unique_information_with(joint, z, a, b, &tolerances)
}

pub fn unique_information_with(
    joint: &JointTable,
    z: &[&str],
    a: &[&str],
    b: &[&str],
    tolerances: &Tolerances,
) -> Result<UniqueInformation> {
    check_slots(z, a, b)?;
    let tol = tolerances.solver;
    if !(tol > 0.0) {
        return Err(Error::Config(format!("solver tolerance must be positive, got {tol}")));
    }
    if a.is_empty() {
        let problem = Problem::build(joint, z, z, &[]).ok();
        return Ok(trivial(problem, 0.0));
    }
    let i_za = joint.mutual_information(z, a)?;
    if b.is_empty() {
        // An empty slot carries no information: Red = 0 and Uni = I(Z;A).
        let problem = Problem::build(joint, z, a, &[])?;
        return Ok(trivial(Some(problem), i_za));
    }
    let mut problem = Problem::build(joint, z, a, b)?;
    let i_za_given_b = joint.conditional_mutual_information(z, a, b)?;
    if i_za <= 0.0 {
        // Uni ≤ I(Z;A) forces zero; the independence coupling attains it.
        return Ok(UniqueInformation {
            value: 0.0,
            gap: 0.0,
            iterations: 0,
            witness: problem.coupling(),
        });
    }
    if problem.free_parameters() == 0 {
        // Δ_p is the single true distribution.
        return Ok(UniqueInformation {
            value: i_za_given_b,
            gap: 0.0,
            iterations: 0,
            witness: problem.true_coupling(),
        });
    }

    const WINDOW: usize = 25;
    const GAP_WINDOW: usize = 20;
    const STEP_SWEEPS: usize = 50;
    const POLISH_SWEEPS: usize = 5_000;
    let mut r = problem.reference();
    let mut history = vec![problem.objective(&r)];
    let mut gap = f64::INFINITY;
    let mut gaps: Vec<f64> = Vec::new();
    let mut iterations = 0;
    let converged = loop {
        if iterations >= tolerances.solver_max_iterations {
            break false;
        }
        problem.project(&r, STEP_SWEEPS);
        r = problem.reference();
        iterations += 1;
        history.push(problem.objective(&r));
        if iterations % 5 == 0 || iterations <= 5 {
            gap = problem.gap(&r);
            if gap < tol {
                break true;
            }
            // The certificate can plateau just above `tol` while inexact
            // projections keep nudging the objective.
            gaps.push(gap);
            let m = gaps.len();
            if m > GAP_WINDOW && gap.is_finite() && gaps[m - 1 - GAP_WINDOW] - gap < tol / 10.0 {
                break true;
            }
        }
        let n = history.len();
        if n > WINDOW && history[n - 1 - WINDOW] - history[n - 1] < tol / 10.0 {
            gap = problem.gap(&r);
            break true;
        }
    };
    if !converged {
        let best = *history.last().unwrap_or(&f64::INFINITY);
        return Err(Error::SolverNotConverged {
            best,
            gap,
            iterations,
        });
    }
    // Settle the marginals before reporting, in rebalanced chunks; keep the
    // unpolished point if scalings degenerate.
    let before = problem.slices.clone();
    for _ in 0..POLISH_SWEEPS / STEP_SWEEPS {
        problem.project(&r, STEP_SWEEPS);
        if problem.column_violation() < 1e-13 {
            break;
        }
    }
    problem.round_feasible();
    let mut best = problem.objective(&problem.reference());
    if !best.is_finite() {
        problem.slices = before;
        problem.round_feasible();
        best = problem.objective(&problem.reference());
    }
    let settled = problem.gap(&problem.reference());
    if settled.is_finite() {
        gap = settled;
    }
    let mut value = tolerances.clamp_information(best)?;
    let mut witness = problem.coupling();
    if i_za_given_b < value {
        value = i_za_given_b;
        witness = problem.true_coupling();
        gap = gap.min(best - i_za_given_b).max(0.0);
    }
    Ok(UniqueInformation {
        value,
        gap,
        iterations,
        witness,
    })
}

fn trivial(problem: Option<Problem>, value: f64) -> UniqueInformation {
    let witness = problem
        .map(|p| p.true_coupling())
        .unwrap_or_else(|| Coupling {
            slices: Vec::new(),
            z_labels: Vec::new(),
            a_labels: Vec::new(),
            b_labels: Vec::new(),
        });
    UniqueInformation {
        value,
        gap: 0.0,
        iterations: 0,
        witness,
    }
}

/// The PID of `I(Z;(A,B))` with default tolerances.
pub fn pid_decompose(joint: &JointTable, z: &[&str], a: &[&str], b: &[&str]) -> Result<PidResult> {
    pid_decompose_with(joint, z, a, b, &Tolerances::default())
}

pub fn pid_decompose_with(
    joint: &JointTable,
    z: &[&str],
    a: &[&str],
    b: &[&str],
    tolerances: &Tolerances,
) -> Result<PidResult> {
    let uni = unique_information_with(joint, z, a, b, tolerances)?;
    let i_za = joint.mutual_information(z, a)?;
    let i_zb = joint.mutual_information(z, b)?;
    let i_za_given_b = joint.conditional_mutual_information(z, a, b)?;
    let total = joint.mutual_information(z, &concat(&[a, b]))?;
    let redundancy = i_za - uni.value;
    let synergy = i_za_given_b - uni.value;
    let uni_b = i_zb - redundancy;
    Ok(PidResult {
        uni_a_given_b: tolerances.clamp_report(uni.value),
        uni_b_given_a: tolerances.clamp_report(uni_b),
        redundancy: tolerances.clamp_report(redundancy),
        synergy: tolerances.clamp_report(synergy),
        total,
        solver_iterations: uni.iterations,
        objective_gap: uni.gap,
    })
}

/// Exhaustive grid oracle for `Uni(Z:A|B)` when `Δ_p` has at most four free
/// parameters (binary `A` and `B` slices).
///
/// Each free slice is a 2×2 coupling with one parameter `t` on a feasible
/// interval; the grid scans that interval at `grid_step` including both
/// endpoints. The objective is convex in `t`, so along every axis the true
/// minimum lies within one grid cell of the best grid point; the returned
/// value exceeds the optimum by at most the objective's variation across the
/// neighbouring cells of the best point.
pub fn brute_force_unique(joint: &JointTable, z: &[&str], a: &[&str], b: &[&str], grid_step: f64) -> Result<f64> {
    check_slots(z, a, b)?;
    if !(grid_step > 0.0 && grid_step <= 0.01) {
        return Err(Error::Config(format!("grid step must lie in (0, 0.01], got {grid_step}")));
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    if b.is_empty() {
        return joint.mutual_information(z, a);
    }
    let mut problem = Problem::build(joint, z, a, b)?;
    let free: Vec<usize> = problem
        .slices
        .iter()
        .enumerate()
        .filter(|(_, s)| s.free_parameters() > 0)
        .map(|(i, _)| i)
        .collect();
    let count = problem.free_parameters();
    if count > 4 || free.iter().any(|&i| problem.slices[i].free_parameters() != 1) {
        return Err(Error::TooManyFreeParameters(count));
    }
    // Feasible interval of q(a0,b0|z) for each free 2×2 slice.
    let grids: Vec<Vec<f64>> = free
        .iter()
        .map(|&i| {
            let s = &problem.slices[i];
            let lo = (s.pa[0] + s.pb[0] - 1.0).max(0.0);
            let hi = s.pa[0].min(s.pb[0]);
            let mut pts = Vec::new();
            let mut t = lo;
            while t < hi {
                pts.push(t);
                t += grid_step;
            }
            pts.push(hi);
            pts
        })
        .collect();
    let mut best = f64::INFINITY;
    let mut r = vec![0.0; problem.na * problem.nb];
    let mut cursor = vec![0usize; grids.len()];
    loop {
        for (k, &i) in free.iter().enumerate() {
            let s = &mut problem.slices[i];
            let t = grids[k][cursor[k]];
            s.q[0] = t;
            s.q[1] = (s.pa[0] - t).max(0.0);
            s.q[2] = (s.pb[0] - t).max(0.0);
            s.q[3] = (1.0 - s.pa[0] - s.pb[0] + t).max(0.0);
        }
        problem.reference_into(&mut r);
        best = best.min(problem.objective(&r));
        // Odometer over the grid.
        let mut d = grids.len();
        loop {
            if d == 0 {
                return Tolerances::default().clamp_information(best);
            }
            d -= 1;
            cursor[d] += 1;
            if cursor[d] < grids[d].len() {
                break;
            }
            cursor[d] = 0;
        }
    }
}
