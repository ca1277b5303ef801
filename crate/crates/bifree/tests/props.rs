use bifree::bnc::{catalan, enumerate_bnc, BncPartition, ChiShape, Side};
use bifree::cumulants::{Decorated, Engine};
use bifree::descriptor::random_element;
use bifree::matrix::BMatrix;
use bifree::mobius::mobius;
use bifree::models::FockModel;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn shape(bits: &[bool]) -> ChiShape {
    ChiShape::new(bits.iter().map(|&r| if r { Side::Right } else { Side::Left }).collect())
}

fn pick<'a>(all: &'a [BncPartition], k: usize) -> &'a BncPartition {
    &all[k % all.len()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn counts_are_catalan(bits in prop::collection::vec(any::<bool>(), 1..=7)) {
        let s = shape(&bits);
        prop_assert_eq!(enumerate_bnc(&s).unwrap().len() as u64, catalan(bits.len()));
    }

    #[test]
    fn join_and_meet_are_bounds(bits in prop::collection::vec(any::<bool>(), 1..=6), i in 0usize..1000, j in 0usize..1000) {
        let all = enumerate_bnc(&shape(&bits)).unwrap();
        let (p, q) = (pick(&all, i), pick(&all, j));
        let join = p.join(q).unwrap();
        let meet = p.meet(q).unwrap();
        prop_assert!(p.refines(&join).unwrap() && q.refines(&join).unwrap());
        prop_assert!(meet.refines(p).unwrap() && meet.refines(q).unwrap());
        // least upper bound: every common upper bound sits above the join
        for u in &all {
            if p.refines(u).unwrap() && q.refines(u).unwrap() {
                prop_assert!(join.refines(u).unwrap());
            }
        }
    }

    #[test]
    fn mobius_inverts_zeta(bits in prop::collection::vec(any::<bool>(), 1..=5), i in 0usize..1000, j in 0usize..1000) {
        let all = enumerate_bnc(&shape(&bits)).unwrap();
        let (p, q) = (pick(&all, i), pick(&all, j));
        prop_assert_eq!(mobius(p, p).unwrap(), 1);
        if p.refines(q).unwrap() {
            let s: i128 = all
                .iter()
                .filter(|t| p.refines(t).unwrap() && t.refines(q).unwrap())
                .map(|t| mobius(p, t).unwrap())
                .sum();
            prop_assert_eq!(s, i128::from(p == q));
        } else {
            prop_assert_eq!(mobius(p, q).unwrap(), 0);
        }
    }

    #[test]
    fn moment_cumulant_round_trip(bits in prop::collection::vec(any::<bool>(), 1..=4), seed in any::<u64>()) {
        let s = shape(&bits);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entries: Vec<_> = s
            .tags()
            .iter()
            .map(|&side| Decorated::plain(random_element(&mut rng, 2, side, &[0, 1])).with_pre(BMatrix::random(&mut rng, 2, 0.5)))
            .collect();
        let eng = Engine::new(FockModel::new(2, 6).unwrap());
        for sigma in enumerate_bnc(&s).unwrap() {
            let e = eng.e_pi(&sigma, &entries).unwrap();
            let back = eng.moments_from_cumulants(&sigma, &entries).unwrap();
            prop_assert!(e.dist(&back) <= 1e-10, "residual {}", e.dist(&back));
        }
    }

    #[test]
    fn well_conditioned_inverse(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = BMatrix::identity(3) + BMatrix::random(&mut rng, 3, 0.1);
        let inv = b.inverse().unwrap();
        prop_assert!((b * inv).dist(&BMatrix::identity(3)) <= 1e-12);
    }
}
