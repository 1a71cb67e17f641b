mod common;

use common::{close, rng};
use exempt_audit::estimators::{cmi_binned, gaussian_mi, mi_gauss, uni_gauss, BinAssignment, BinningSpec, RHO2_CLIP};
use exempt_audit::scm::{sample, scenario};
use rand::Rng;
use rand_distr::StandardNormal;

fn normals(r: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.sample::<f64, _>(StandardNormal)).collect()
}

/// Centred, unit-norm, mutually orthogonal columns.
fn orthonormal(r: &mut impl Rng, k: usize, n: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for _ in 0..k {
        let mut v = normals(r, n);
        let m = v.iter().sum::<f64>() / n as f64;
        v.iter_mut().for_each(|x| *x -= m);
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        basis.push(v);
    }
    basis
}

fn mix(parts: &[(f64, &[f64])]) -> Vec<f64> {
    let n = parts[0].1.len();
    (0..n).map(|i| parts.iter().map(|(w, v)| w * v[i]).sum()).collect()
}

#[test]
fn gaussian_triple_with_exact_sample_correlations() {
    let e = orthonormal(&mut rng(1), 3, 500);
    let z = e[0].clone();
    let y = mix(&[(0.6, &e[0]), (0.8, &e[1])]);
    let xc = mix(&[(0.3, &e[0]), (0.91f64.sqrt(), &e[2])]);
    let v = uni_gauss(&z, &y, &[&xc]).unwrap().value;
    let want = -0.5 * 0.64f64.log2() + 0.5 * 0.91f64.log2();
    assert!(close(v, want, 1e-9), "{v}");
    assert!(close(want, 0.2538, 1e-4));
}

#[test]
fn perfect_copy_saturates_at_the_clip() {
    let z = normals(&mut rng(2), 1000);
    let v = mi_gauss(&z, &z).unwrap().value;
    assert!(close(v, -0.5 * (1.0 - RHO2_CLIP).log2(), 1e-6));
    assert!(v > 14.9 && v < 15.0, "{v}");
}

#[test]
fn independent_pair_is_small_at_ten_thousand() {
    let mut r = rng(3);
    let (z, y) = (normals(&mut r, 10_000), normals(&mut r, 10_000));
    assert!(mi_gauss(&z, &y).unwrap().value < 0.02);
}

#[test]
fn estimator_is_consistent_across_seeds() {
    let rho: f64 = 0.5;
    let want = gaussian_mi(rho);
    assert!(close(want, 0.2075, 1e-4));
    let values: Vec<f64> = (0..30)
        .map(|s| {
            let mut r = rng(100 + s);
            let (a, b) = (normals(&mut r, 2000), normals(&mut r, 2000));
            let y = mix(&[(rho, &a), ((1.0 - rho * rho).sqrt(), &b)]);
            mi_gauss(&a, &y).unwrap().value
        })
        .collect();
    let mean = values.iter().sum::<f64>() / 30.0;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 29.0).sqrt();
    assert!((mean - want).abs() <= 3.0 * sd / 30f64.sqrt(), "mean {mean}, sd {sd}");
}

fn binned(name: &str, seed: u64) -> f64 {
    let scm = scenario(name).unwrap();
    let d = sample(&scm, 10_000, seed).unwrap();
    let (z, y, xc) = (d.column("Z").unwrap(), d.column("Yhat").unwrap(), d.column("Xc").unwrap());
    let cells = BinAssignment::fit(&[&xc], &BinningSpec::quantile(&["Xc"], 8)).unwrap();
    let p = cmi_binned(&z, &y, &cells).unwrap();
    let parts: f64 = p.per_bin.as_ref().unwrap().iter().map(|b| b.contribution).sum();
    assert!(close(parts, p.value, 1e-9));
    p.value
}

#[test]
fn binned_estimator_on_canonical_samples() {
    assert!(binned("canonical-1", 5) < 0.05);
    // Every cell has correlation ±1, so the value sits at the clip.
    let v = binned("canonical-4", 6);
    assert!(v > 14.0, "{v}");
}

#[test]
fn single_cell_matches_unconditional() {
    let mut r = rng(7);
    let (z, y) = (normals(&mut r, 400), normals(&mut r, 400));
    let a = cmi_binned(&z, &y, &BinAssignment::single(400)).unwrap().value;
    assert!(close(a, mi_gauss(&z, &y).unwrap().value, 1e-12));
}
