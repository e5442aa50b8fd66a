use fkg_core::cumulants::{evaluate_kappa, CumulantSpec};
use fkg_core::lattice::{
    condition, expectation, expect_product, inductive_gap, is_mtp2, join_meet, marginalize, CoordSubset,
    LatticeFunction, LatticeMeasure, LatticePoint, LatticeShape,
};
use fkg_core::partitions::{bell_number, enumerate_partitions, set_partitions};
use fkg_core::rational::{format_rational, parse_rational};
use fkg_core::symcert::{build_phi, shifted_phi, CertVars};
use fkg_core::verifier::{generate_trial, InstanceGenConfig};
use fkg_core::Rational;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

fn rational() -> impl Strategy<Value = Rational> {
    (-50i64..=50, 1i64..=12).prop_map(|(n, d)| Rational::new(n.into(), d.into()))
}

fn nonneg_rational() -> impl Strategy<Value = Rational> {
    (0i64..=30, 1i64..=9).prop_map(|(n, d)| Rational::new(n.into(), d.into()))
}

fn shape() -> impl Strategy<Value = Vec<usize>> {
    prop_oneof![
        Just(vec![2, 2]),
        Just(vec![2, 2, 2]),
        Just(vec![3, 3]),
        Just(vec![2, 3]),
        Just(vec![3, 2, 2]),
    ]
}

fn instance(shape: Vec<usize>, seed: u64, trial: u64, count: usize) -> (LatticeMeasure, Vec<LatticeFunction>) {
    let cfg = InstanceGenConfig::new(shape, seed, count);
    let inst = generate_trial(&cfg, trial).expect("generator accepts small shapes");
    (inst.measure, inst.functions)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rational_text_round_trips(r in rational()) {
        prop_assert_eq!(parse_rational(&format_rational(&r)).unwrap(), r);
    }

    #[test]
    fn join_and_meet_bound_both_points(
        p in proptest::collection::vec(0usize..4, 3),
        q in proptest::collection::vec(0usize..4, 3),
    ) {
        let (p, q) = (LatticePoint::new(p), LatticePoint::new(q));
        let (join, meet) = join_meet(&p, &q).unwrap();
        prop_assert!(p.leq(&join) && q.leq(&join));
        prop_assert!(meet.leq(&p) && meet.leq(&q));
        let (jj, mm) = join_meet(&join, &meet).unwrap();
        prop_assert_eq!((jj, mm), (join, meet));
    }

    #[test]
    fn marginals_of_generated_measures_stay_mtp2(shape in shape(), seed in any::<u64>(), mask in 0u64..8) {
        let (mu, _) = instance(shape.clone(), seed, 0, 1);
        prop_assert!(is_mtp2(&mu));
        let b = CoordSubset::from_mask(shape.len(), mask & ((1 << shape.len()) - 1)).unwrap();
        prop_assert!(is_mtp2(&marginalize(&mu, &b).unwrap()));
    }

    #[test]
    fn conditional_expectation_averages_back(shape in shape(), seed in any::<u64>(), mask in 0u64..8) {
        let (mu, fs) = instance(shape.clone(), seed, 1, 1);
        let b = CoordSubset::from_mask(shape.len(), mask & ((1 << shape.len()) - 1)).unwrap();
        let mu_b = marginalize(&mu, &b).unwrap();
        let cond = condition(&fs[0], &mu, &b).unwrap();
        prop_assert_eq!(expect_product(&mu_b, &[&cond]).unwrap(), expectation(&mu, &fs[0]).unwrap());
    }

    #[test]
    fn inductive_gap_is_nonnegative(shape in shape(), seed in any::<u64>(), mask in 0u64..8) {
        let (mu, fs) = instance(shape.clone(), seed, 2, 3);
        let b = CoordSubset::from_mask(shape.len(), mask & ((1 << shape.len()) - 1)).unwrap();
        let g = inductive_gap(&mu, [&fs[0], &fs[1], &fs[2]], &b).unwrap();
        prop_assert!(!g.is_negative(), "gap {}", g);
    }

    #[test]
    fn conjugate_value_is_symmetric_in_the_functions(shape in shape(), seed in any::<u64>(), m in 3usize..=4) {
        let (mu, mut fs) = instance(shape, seed, 3, m);
        let spec = CumulantSpec::conjugate(m).unwrap();
        let v = evaluate_kappa(&spec, &mu, &fs).unwrap();
        fs.rotate_left(1);
        prop_assert_eq!(&evaluate_kappa(&spec, &mu, &fs).unwrap(), &v);
        fs.swap(0, 1);
        prop_assert_eq!(evaluate_kappa(&spec, &mu, &fs).unwrap(), v);
    }

    #[test]
    fn passing_certificates_are_nonnegative_on_the_orthant(
        point in proptest::collection::vec(nonneg_rational(), 2 + 2 * 4),
        m in 2usize..=4,
    ) {
        let spec = CumulantSpec::conjugate(m).unwrap();
        let poly = shifted_phi(&spec).unwrap();
        let vars = CertVars { m };
        let value = poly.evaluate(&point[..vars.count()]).unwrap();
        prop_assert!(!value.is_negative());
    }

    #[test]
    fn polynomial_matches_lattice_on_a_two_chain(
        w1 in 1i64..=9,
        w2 in 1i64..=9,
        us in proptest::collection::vec(rational(), 3),
        vs in proptest::collection::vec(rational(), 3),
    ) {
        let m = 3;
        let spec = CumulantSpec::conjugate(m).unwrap();
        let vars = CertVars { m };
        let mut point = vec![Rational::zero(); vars.count()];
        point[vars.w1()] = Rational::from_integer(w1.into());
        point[vars.w2()] = Rational::from_integer(w2.into());
        for i in 1..=m {
            point[vars.u(i)] = us[i - 1].clone();
            point[vars.v(i)] = vs[i - 1].clone();
        }
        let phi = build_phi(&spec).unwrap().evaluate(&point).unwrap();
        let s = Rational::from_integer((w1 + w2).into());
        let shape = LatticeShape::new(vec![2]).unwrap();
        let mu = LatticeMeasure::new(shape.clone(), vec![&point[vars.w1()] / &s, &point[vars.w2()] / &s]).unwrap();
        let fs: Vec<LatticeFunction> = (0..m)
            .map(|i| LatticeFunction::new(shape.clone(), vec![us[i].clone(), vs[i].clone()]).unwrap())
            .collect();
        let kappa = evaluate_kappa(&spec, &mu, &fs).unwrap();
        prop_assert_eq!(phi / num_traits::pow(s, m), kappa);
    }
}

#[test]
fn set_partition_counts_follow_the_bell_numbers() {
    for m in 1..=7 {
        let total: u128 = enumerate_partitions(m).unwrap().iter().map(|l| l.split_count()).sum();
        assert_eq!(total, bell_number(m));
        assert_eq!(set_partitions(m, 10).unwrap().len() as u128, bell_number(m));
    }
}
