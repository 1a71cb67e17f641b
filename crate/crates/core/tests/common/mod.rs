#![allow(dead_code)]

use std::collections::BTreeMap;

use exempt_audit::{JointTable, Variable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random table over `names` with the given arities. About a fifth of the
/// cells are zero so that support edges get exercised.
pub fn random_table(rng: &mut ChaCha8Rng, names: &[&str], arities: &[usize]) -> JointTable {
    let vars: Vec<Variable> = names.iter().zip(arities).map(|(n, &k)| Variable::new(*n, k)).collect();
    let cells: usize = arities.iter().product();
    let mut w: Vec<f64> = (0..cells)
        .map(|_| if rng.random::<f64>() < 0.2 { 0.0 } else { -rng.random::<f64>().max(1e-12).ln() })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[0] = 1.0;
    }
    let s: f64 = w.iter().sum();
    JointTable::new(vars, w.into_iter().map(|x| x / s).collect()).unwrap()
}

/// Marginal masses keyed by the values of `vars`, built from the support
/// without going through the table's own marginalization.
fn marginal(joint: &JointTable, vars: &[&str]) -> BTreeMap<Vec<usize>, f64> {
    let pos: Vec<usize> = vars.iter().map(|v| joint.position(v).unwrap()).collect();
    let mut m = BTreeMap::new();
    for (vals, p) in joint.support() {
        *m.entry(pos.iter().map(|&i| vals[i]).collect()).or_insert(0.0) += p;
    }
    m
}

pub fn oracle_entropy(joint: &JointTable, vars: &[&str]) -> f64 {
    marginal(joint, vars)
        .values()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

pub fn oracle_mi(joint: &JointTable, a: &[&str], b: &[&str]) -> f64 {
    let ab: Vec<&str> = a.iter().chain(b).copied().collect();
    oracle_entropy(joint, a) + oracle_entropy(joint, b) - oracle_entropy(joint, &ab)
}

pub fn oracle_cmi(joint: &JointTable, a: &[&str], b: &[&str], c: &[&str]) -> f64 {
    let ac: Vec<&str> = a.iter().chain(c).copied().collect();
    let bc: Vec<&str> = b.iter().chain(c).copied().collect();
    let abc: Vec<&str> = ac.iter().chain(b).copied().collect();
    oracle_entropy(joint, &ac) + oracle_entropy(joint, &bc) - oracle_entropy(joint, &abc) - oracle_entropy(joint, c)
}

fn golden(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    f(lo).min(f(hi)).min(fc).min(fd)
}

/// `min I_Q(Z;A|B)` over couplings with the marginals `p(a|z)` and
/// `p(b|z)`, for binary `z`, `a`, `b`. Each z-slice has one free
/// parameter; the objective is jointly convex, so nested golden-section
/// search finds the minimum.
pub fn oracle_binary_unique(joint: &JointTable, z: &str, a: &str, b: &str) -> f64 {
    let m = marginal(joint, &[z, a, b]);
    let p = |zi: usize, ai: usize, bi: usize| m.get(&vec![zi, ai, bi]).copied().unwrap_or(0.0);
    let pz = [0, 1].map(|zi| (0..4).map(|k| p(zi, k >> 1, k & 1)).sum::<f64>());
    // p(a=1|z), p(b=1|z)
    let pa = [0, 1].map(|zi| if pz[zi] > 0.0 { (p(zi, 1, 0) + p(zi, 1, 1)) / pz[zi] } else { 0.0 });
    let pb = [0, 1].map(|zi| if pz[zi] > 0.0 { (p(zi, 0, 1) + p(zi, 1, 1)) / pz[zi] } else { 0.0 });
    let range = |zi: usize| ((pa[zi] + pb[zi] - 1.0).max(0.0), pa[zi].min(pb[zi]));
    let objective = |t: [f64; 2]| {
        let mut q = [[[0.0; 2]; 2]; 2];
        for zi in 0..2 {
            let c = [
                [1.0 - pa[zi] - pb[zi] + t[zi], pb[zi] - t[zi]],
                [pa[zi] - t[zi], t[zi]],
            ];
            for ai in 0..2 {
                for bi in 0..2 {
                    q[zi][ai][bi] = pz[zi] * c[ai][bi].max(0.0);
                }
            }
        }
        let mut total = 0.0;
        for bi in 0..2 {
            let qb: f64 = (0..2).flat_map(|zi| (0..2).map(move |ai| (zi, ai))).map(|(zi, ai)| q[zi][ai][bi]).sum();
            for zi in 0..2 {
                for ai in 0..2 {
                    let v = q[zi][ai][bi];
                    if v <= 0.0 {
                        continue;
                    }
                    let qzb = q[zi][0][bi] + q[zi][1][bi];
                    let qab = q[0][ai][bi] + q[1][ai][bi];
                    total += v * (v * qb / (qzb * qab)).log2();
                }
            }
        }
        total
    };
    let (l0, h0) = range(0);
    let (l1, h1) = range(1);
    golden(l0, h0, |t0| golden(l1, h1, |t1| objective([t0, t1]))).max(0.0)
}

/// Model text with up to `max_latents` binary latents and up to four
/// binary-arithmetic features; the output is a random expression over the
/// features. With `cancel`, one feature pair lets `Z` cancel in the output.
pub fn random_scm_text(rng: &mut ChaCha8Rng, max_latents: usize, cancel: bool) -> String {
    let probs = [0.5, 0.25, 0.75];
    let pick = |rng: &mut ChaCha8Rng, xs: &[String]| xs[rng.random_range(0..xs.len())].clone();
    let mut text = format!("protected Z bernoulli {}\n", probs[rng.random_range(0..3)]);
    let nl = rng.random_range(1..=max_latents);
    let latents: Vec<String> = (1..=nl).map(|i| format!("U{i}")).collect();
    for u in &latents {
        text.push_str(&format!("latent {u} bernoulli {}\n", probs[rng.random_range(0..3)]));
    }
    let mut sources: Vec<String> = vec!["Z".into()];
    sources.extend(latents.iter().cloned());
    let mut features: Vec<String> = Vec::new();
    if cancel {
        let u = pick(rng, &latents);
        let tag = |rng: &mut ChaCha8Rng| if rng.random_bool(0.5) { "critical" } else { "general" };
        text.push_str(&format!("feature X1 {} = Z + {u}\n", tag(rng)));
        text.push_str(&format!("feature X2 {} = Z\n", tag(rng)));
        text.push_str("output Yhat = X1 - X2\n");
        return text;
    }
    let nf = rng.random_range(1..=4);
    for j in 1..=nf {
        let name = format!("X{j}");
        let mut pool = sources.clone();
        pool.extend(features.iter().cloned());
        let a = pick(rng, &pool);
        let b = pick(rng, &pool);
        let expr = match rng.random_range(0..6) {
            0 => a,
            1 => format!("({a}) xor ({b})"),
            2 => format!("{a} + {b}"),
            3 => format!("{a} * {b}"),
            4 => format!("ind({a} + {b} >= 1)"),
            _ => format!("{a} - {b}"),
        };
        let tag = if rng.random_bool(0.5) { "critical" } else { "general" };
        text.push_str(&format!("feature {name} {tag} = {expr}\n"));
        features.push(name);
    }
    let a = pick(rng, &features);
    let b = pick(rng, &features);
    let c = pick(rng, &features);
    let out = match rng.random_range(0..6) {
        0 => a,
        1 => format!("({a}) xor ({b})"),
        2 => format!("{a} + {b}"),
        3 => format!("ind({a} + {b} + {c} >= 2)"),
        4 => format!("{a} * {b}"),
        _ => format!("{a} - {b}"),
    };
    text.push_str(&format!("output Yhat = {out}\n"));
    text
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// Append `name` = `f(values of from)` to a table.
pub fn with_function(t: &JointTable, from: &[&str], name: &str, arity: usize, f: impl Fn(&[usize]) -> usize) -> JointTable {
    let pos: Vec<usize> = from.iter().map(|v| t.position(v).unwrap()).collect();
    let mut vars = t.variables().to_vec();
    vars.push(Variable::new(name, arity));
    let atoms: Vec<(Vec<usize>, f64)> = t
        .support()
        .map(|(mut vals, p)| {
            let x: Vec<usize> = pos.iter().map(|&i| vals[i]).collect();
            vals.push(f(&x));
            (vals, p)
        })
        .collect();
    JointTable::from_atoms(vars, atoms).unwrap()
}

pub fn random_map(r: &mut impl Rng, domain: usize, range: usize) -> Vec<usize> {
    (0..domain).map(|_| r.random_range(0..range)).collect()
}
