mod common;

use common::{close, random_scm_text, rng};
use exempt_audit::measures::{
    audit_scm, masked_witness_check, obs_cmi, obs_cmi_extended, obs_unique, prior_intersection_measure,
    product_measure, total_disparity, DisparityReport,
};
use exempt_audit::scm::{catalog_names, cci, enumerate, enumerate_joint, sample, scenario, Scm};
use exempt_audit::Tolerances;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn report(scm: &Scm) -> DisparityReport {
    audit_scm(scm, &[], &tol()).unwrap()
}

fn random_models(seed: u64, count: usize) -> Vec<Scm> {
    let mut r = rng(seed);
    (0..count).map(|_| Scm::parse(&random_scm_text(&mut r, 4, false)).unwrap()).collect()
}

#[test]
fn catalog_files_round_trip_from_disk() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("catalog");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = std::fs::read_to_string(&path).unwrap();
        let scm = Scm::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let again = Scm::parse(&scm.to_text()).unwrap();
        assert_eq!(scm, again, "{}", path.display());
        seen += 1;
    }
    assert_eq!(seen, catalog_names().len());
}

#[test]
fn sampled_canonical_one_matches_exact_information() {
    let scm = scenario("canonical-1").unwrap();
    let exact = enumerate_joint(&scm).unwrap().mutual_information(&["Z"], &["Yhat"]).unwrap();
    let data = sample(&scm, 10_000, 7).unwrap();
    let (z, y) = (data.column("Z").unwrap(), data.column("Yhat").unwrap());
    // Plug-in estimate over the observed values.
    let mut counts = std::collections::HashMap::new();
    for (a, b) in z.iter().zip(&y) {
        *counts.entry((*a as i64, *b as i64)).or_insert(0.0) += 1.0 / z.len() as f64;
    }
    let mut pz = std::collections::HashMap::new();
    let mut py = std::collections::HashMap::new();
    for (&(a, b), &p) in &counts {
        *pz.entry(a).or_insert(0.0) += p;
        *py.entry(b).or_insert(0.0) += p;
    }
    let est: f64 = counts.iter().map(|(&(a, b), &p)| p * (p / (pz[&a] * py[&b])).log2()).sum();
    assert!(close(est, exact, 0.05), "{est} vs {exact}");
}

#[test]
fn sampling_is_byte_identical_under_seed() {
    let scm = scenario("exp-2").unwrap();
    let mut one = Vec::new();
    let mut two = Vec::new();
    sample(&scm, 500, 42).unwrap().write_csv(&mut one).unwrap();
    sample(&scm, 500, 42).unwrap().write_csv(&mut two).unwrap();
    assert_eq!(one, two);
    assert_eq!(sample(&scm, 1, 3).unwrap().len(), 1);
}

#[test]
fn enumerated_latents_are_independent_and_output_is_determined() {
    for scm in random_models(21, 60) {
        let j = enumerate_joint(&scm).unwrap();
        let u = scm.latent_names();
        assert!(j.mutual_information(&["Z"], &u).unwrap() < 1e-12);
        let x = scm.feature_names();
        let yx: Vec<&str> = std::iter::once("Yhat").chain(x.iter().copied()).collect();
        let h = j.entropy(&yx).unwrap() - j.entropy(&x).unwrap();
        assert!(h.abs() < 1e-12, "{}", scm.to_text());
    }
}

#[test]
fn counterfactual_influence_vanishes_exactly_with_total_disparity() {
    let mut r = rng(22);
    let mut zeros = 0;
    for i in 0..100 {
        let scm = Scm::parse(&random_scm_text(&mut r, 4, i % 5 == 0)).unwrap();
        let c = cci(&scm).unwrap();
        let j = enumerate_joint(&scm).unwrap();
        let total = total_disparity(&j, "Z", &scm.latent_names(), "Yhat").unwrap();
        assert_eq!(c <= 1e-9, total <= 1e-9, "{}: cci {c}, total {total}", scm.to_text());
        zeros += usize::from(total <= 1e-9);
    }
    assert!(zeros > 0 && zeros < 100, "{zeros}");
}

#[test]
fn four_components_on_random_models() {
    for scm in random_models(23, 60) {
        let r = report(&scm);
        for c in [r.m_v_ne, r.m_v_e, r.m_m_ne, r.m_m_e] {
            assert!(c >= -1e-6, "{r:?}");
        }
        assert!(close(r.component_sum(), r.total, 1e-6));
        assert!(close(r.visible + r.masked, r.total, 1e-6));
        assert!(close(r.m_v_ne + r.m_m_ne, r.m_ne_star, 1e-6));
        assert!(close(r.m_e, r.total - r.m_ne_star, 1e-6));
    }
}

/// Properties 1 to 6 and the bounds sandwich, for one model.
fn check_properties(scm: &Scm) {
    let t = tol();
    let r = report(scm);
    let text = scm.to_text();
    if r.total <= 1e-9 {
        assert!(r.m_ne_star <= 1e-6, "P1: {text}");
    }
    if r.observational.uni > 1e-4 {
        assert!(r.m_ne_star > 1e-6, "P2: {text}");
    }
    let j = enumerate_joint(scm).unwrap();
    let critical = scm.critical();
    let mut upper = f64::INFINITY;
    for b in &r.bipartitions {
        let za: Vec<&str> = std::iter::once("Z").chain(b.bipartition.u_a.iter().map(String::as_str)).collect();
        let yb: Vec<&str> = std::iter::once("Yhat").chain(b.bipartition.u_b.iter().map(String::as_str)).collect();
        let cmi = j.conditional_mutual_information(&za, &yb, &critical).unwrap();
        upper = upper.min(cmi);
        if cmi <= 1e-9 {
            assert!(r.m_ne_star <= 1e-6, "P3: {text}");
            assert!(r.observational.cmi <= 1e-6, "cmi with a vanishing bipartition: {text}");
        }
    }
    assert!(r.observational.uni <= r.m_ne_star + 1e-6, "lower bound: {text}");
    assert!(r.m_ne_star <= upper + 1e-6, "upper bound: {text}");
    let none = report(&scm.retagged(&[]).unwrap());
    assert!(close(none.m_ne_star, none.total, 1e-6), "P4: {text}");
    let all = report(&scm.retagged(&scm.feature_names()).unwrap());
    assert!(all.m_ne_star <= 1e-6, "P6: {text}");
    for g in scm.general() {
        let mut more = critical.clone();
        more.push(g);
        let moved = audit_scm(&scm.retagged(&more).unwrap(), &[], &t).unwrap();
        assert!(moved.m_ne_star <= r.m_ne_star + 1e-6, "P5 moving {g}: {text}");
    }
}

#[test]
fn desirable_properties_on_catalog() {
    for name in catalog_names() {
        let scm = scenario(name).unwrap();
        if scm.output().is_none() || scm.latents().len() > 4 {
            continue;
        }
        check_properties(&scm);
    }
    for name in ["canonical-4", "canonical-5"] {
        assert!(close(report(&scenario(name).unwrap()).m_ne_star, 1.0, 1e-4), "{name}");
    }
}

#[test]
fn desirable_properties_on_random_models() {
    for scm in random_models(24, 100) {
        check_properties(&scm);
    }
}

#[test]
fn cancellation_gives_no_unique_information() {
    let mut r = rng(25);
    for _ in 0..30 {
        let scm = Scm::parse(&random_scm_text(&mut r, 3, true)).unwrap();
        let rep = report(&scm);
        assert!(rep.total <= 1e-9);
        assert!(rep.observational.uni <= 1e-6);
    }
}

#[test]
fn biased_general_feature_bipartitions() {
    let r = report(&scenario("canonical-2").unwrap());
    let mut values: Vec<(Vec<String>, f64)> =
        r.bipartitions.iter().map(|b| (b.bipartition.u_a.clone(), b.value)).collect();
    values.sort_by(|a, b| a.0.cmp(&b.0));
    let want = [(vec![], 1.0), (vec!["U1"], 1.0), (vec!["U1", "U2"], 1.5), (vec!["U2"], 1.5)];
    for ((ua, v), (wa, w)) in values.iter().zip(want) {
        assert_eq!(ua, &wa);
        assert!(close(*v, w, 1e-4), "{ua:?}: {v}");
    }
    assert!(close(r.m_ne_star, 1.0, 1e-4));
    let h = |p: f64| -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
    assert!(close(r.observational.uni, 1.0 - 0.75 * h(1.0 / 3.0), 1e-4));
}

#[test]
fn biased_critical_feature_minimizer() {
    let r = report(&scenario("canonical-1").unwrap());
    assert!(r.m_ne_star.abs() < 1e-6);
    assert!(r
        .minimizing_bipartitions
        .iter()
        .any(|b| b.u_a == ["U1"] && b.u_b == ["U2"]));
}

#[test]
fn counterfactually_fair_example_measures() {
    let scm = scenario("canonical-3").unwrap();
    let j = enumerate_joint(&scm).unwrap();
    let u = scm.latent_names();
    let c = scm.critical();
    assert!(total_disparity(&j, "Z", &u, "Yhat").unwrap() < 1e-12);
    assert!(obs_cmi(&j, "Z", &c, "Yhat").unwrap() > 1e-4);
    assert!(report(&scm).m_ne_star < 1e-6);
    assert!(prior_intersection_measure(&j, "Z", &u, &c, "Yhat", &tol()).unwrap().abs() < 1e-6);
    assert!(product_measure(&j, "Z", &u, &c, "Yhat").unwrap().abs() < 1e-12);
}

#[test]
fn extended_conditioning_catches_the_second_masking_example() {
    let scm = scenario("canonical-5").unwrap();
    let j = enumerate_joint(&scm).unwrap();
    assert!(obs_cmi(&j, "Z", &[], "Yhat").unwrap() < 1e-12);
    assert!(close(obs_cmi_extended(&j, "Z", &[], &["X2"], "Yhat").unwrap(), 1.0, 1e-9));
    let all = scm.feature_names();
    assert!(obs_cmi(&j, "Z", &all, "Yhat").unwrap() < 1e-12);
    assert!(obs_unique(&j, "Z", &all, "Yhat", &tol()).unwrap() < 1e-6);
}

#[test]
fn two_bit_protected_example_has_positive_product() {
    let scm = scenario("canonical-7").unwrap();
    let j = enumerate_joint(&scm).unwrap();
    let p = product_measure(&j, "Z", &scm.latent_names(), &scm.critical(), "Yhat").unwrap();
    assert!(p > 1e-4, "{p}");
}

#[test]
fn variant_splits_into_exempt_masked() {
    let r = report(&scenario("canonical-1-variant").unwrap());
    let h = |p: f64| -p * p.log2() - (1.0 - p) * (1.0 - p).log2();
    let visible = 1.0 - 0.75 * h(1.0 / 3.0);
    assert!(close(r.visible, visible, 1e-9));
    assert!(close(r.m_m_e, r.total - r.visible, 1e-6));
    assert!(close(r.m_m_e, 1.0 - visible, 1e-6));
    assert!(close(r.m_m_e, 0.6887, 1e-4));
    assert!(r.m_ne_star < 1e-6);
}

#[test]
fn witness_for_masking() {
    let scm = scenario("canonical-4").unwrap();
    let j = enumerate_joint(&scm).unwrap();
    let w = masked_witness_check(&j, "Z", &["U1"], "Yhat", &[vec!["U1"]]).unwrap();
    assert!(w.found);
    assert!(close(w.full_set_gain, 1.0, 1e-9));
    let e = enumerate(&scenario("canonical-3").unwrap()).unwrap();
    let j = e.joint().unwrap();
    let w = masked_witness_check(&j, "Z", &["U1"], "Yhat", &[vec!["U1"]]).unwrap();
    assert!(!w.found);
}
