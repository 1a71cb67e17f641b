mod common;

use common::{close, oracle_cmi, oracle_entropy, oracle_mi, random_table, rng};
use exempt_audit::scm::{enumerate_joint, scenario};
use exempt_audit::{JointTable, Variable};
use proptest::prelude::*;

fn arb_table() -> impl Strategy<Value = (JointTable, Vec<String>)> {
    (prop::collection::vec(1usize..=3, 2..=4), any::<u64>()).prop_map(|(arities, seed)| {
        let names: Vec<String> = (0..arities.len()).map(|i| format!("V{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        (random_table(&mut rng(seed), &refs, &arities), names)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn measures_are_non_negative_and_match_oracle((t, names) in arb_table()) {
        let n: Vec<&str> = names.iter().map(String::as_str).collect();
        let h = t.entropy(&n[..1]).unwrap();
        prop_assert!(h >= 0.0);
        prop_assert!(close(h, oracle_entropy(&t, &n[..1]), 1e-12));
        let mi = t.mutual_information(&n[..1], &n[1..2]).unwrap();
        prop_assert!(mi >= 0.0);
        prop_assert!(close(mi, oracle_mi(&t, &n[..1], &n[1..2]).max(0.0), 1e-9));
        let cmi = t.conditional_mutual_information(&n[..1], &n[1..2], &n[2..]).unwrap();
        prop_assert!(cmi >= 0.0);
        prop_assert!(close(cmi, oracle_cmi(&t, &n[..1], &n[1..2], &n[2..]).max(0.0), 1e-9));
    }

    #[test]
    fn chain_rule((t, names) in arb_table()) {
        prop_assume!(names.len() >= 3);
        let (z, a, b) = ([names[0].as_str()], [names[1].as_str()], [names[2].as_str()]);
        let joint = t.mutual_information(&z, &[a[0], b[0]]).unwrap();
        let split = t.mutual_information(&z, &b).unwrap() + t.conditional_mutual_information(&z, &a, &b).unwrap();
        prop_assert!(close(joint, split, 1e-9));
    }

    #[test]
    fn marginalization_commutes((t, names) in arb_table()) {
        prop_assume!(names.len() >= 3);
        let n: Vec<&str> = names.iter().map(String::as_str).collect();
        let drop_last_then_second = t.marginalize(&n[..n.len() - 1]).unwrap();
        let keep: Vec<&str> = n[..n.len() - 1].iter().enumerate().filter(|(i, _)| *i != 1).map(|(_, s)| *s).collect();
        let one = drop_last_then_second.marginalize(&keep).unwrap();
        let other: Vec<&str> = n.iter().enumerate().filter(|(i, _)| *i != 1).map(|(_, s)| *s).collect();
        let two = t.marginalize(&other).unwrap().marginalize(&keep).unwrap();
        for (p, q) in one.probabilities().iter().zip(two.probabilities()) {
            prop_assert!((p - q).abs() <= 1e-12);
        }
        let total: f64 = t.marginalize(&n[..1]).unwrap().probabilities().iter().sum();
        prop_assert!(close(total, 1.0, 1e-12));
    }
}

#[test]
fn sum_of_three_bits_entropy() {
    let vars = vec![Variable::new("S", 4)];
    let t = JointTable::new(vars, vec![0.125, 0.375, 0.375, 0.125]).unwrap();
    let want = 2.0 * 0.375 * (8.0f64 / 3.0).log2() + 2.0 * 0.125 * 3.0;
    assert!(close(t.entropy(&["S"]).unwrap(), want, 1e-12));
    assert!(close(want, 1.8113, 1e-4));
}

#[test]
fn protected_bit_and_its_noisy_copy_share_half_a_bit() {
    // I(Z; Z+U1) with fair bits, by enumeration of four atoms.
    let vars = vec![Variable::new("Z", 2), Variable::new("S", 3)];
    let atoms = [(vec![0, 0], 0.25), (vec![0, 1], 0.25), (vec![1, 1], 0.25), (vec![1, 2], 0.25)];
    let t = JointTable::from_atoms(vars, atoms).unwrap();
    assert!(close(t.mutual_information(&["Z"], &["S"]).unwrap(), 0.5, 1e-12));
}

#[test]
fn canonical_one_marginal_matches_direct_enumeration() {
    let j = enumerate_joint(&scenario("canonical-1").unwrap()).unwrap();
    let zy = j.marginalize(&["Z", "Yhat"]).unwrap();
    // Direct: Yhat = Z + U1 + U2 over the 8 outcomes.
    let mut want = [[0.0; 4]; 2];
    for m in 0..8 {
        let (z, u1, u2) = (m & 1, (m >> 1) & 1, (m >> 2) & 1);
        want[z][z + u1 + u2] += 0.125;
    }
    let y = zy.variable("Yhat").unwrap();
    assert_eq!(y.arity, 4);
    for z in 0..2 {
        for s in 0..4 {
            let k = (0..y.arity).find(|&k| y.label(k) == s.to_string()).unwrap();
            assert!(close(zy.prob(&[z, k]), want[z][s], 1e-12), "z={z} s={s}");
        }
    }
}

#[test]
fn canonical_conditional_informations() {
    let one = enumerate_joint(&scenario("canonical-1").unwrap()).unwrap();
    assert!(one.conditional_mutual_information(&["Z"], &["Yhat"], &["Xc"]).unwrap().abs() < 1e-12);
    let four = enumerate_joint(&scenario("canonical-4").unwrap()).unwrap();
    assert!(close(four.conditional_mutual_information(&["Z"], &["Yhat"], &["Xc"]).unwrap(), 1.0, 1e-12));
}
