mod common;

use std::sync::Arc;

use bifree::bnc::*;
use bifree::cumulants::*;
use bifree::matrix::BMatrix;
use bifree::models::*;
use bifree::specified::*;
use bifree::Error;
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn decorate<T>(rng: &mut ChaCha8Rng, op: T, d: usize) -> Decorated<T> {
    let mut e = Decorated::plain(op);
    if rng.gen_bool(0.6) {
        e.pre = Some(random_b(rng, d));
    }
    if rng.gen_bool(0.6) {
        e.suf = Some(random_b(rng, d));
    }
    e
}

/// Decorated tuples with the same decorations over the specified symbols and the Fock operators.
fn paired_tuples(
    rng: &mut ChaCha8Rng,
    shape: &ChiShape,
    d: usize,
    fock: &dyn Fn(Side) -> OpElement,
) -> (Vec<Decorated<usize>>, Vec<Decorated<OpElement>>) {
    let mut spec_entries = Vec::new();
    let mut fock_entries = Vec::new();
    for &side in shape.tags() {
        let sym = match side {
            Side::Left => 0,
            Side::Right => 1,
        };
        let e = decorate(rng, sym, d);
        fock_entries.push(Decorated::new(fock(side), e.pre.clone(), e.suf.clone()));
        spec_entries.push(e);
    }
    (spec_entries, fock_entries)
}

#[test]
fn every_gap_gets_one_slot() {
    for n in 1..=8 {
        for shape in all_shapes(n) {
            let layout = omega_layout(shape.tags());
            let ff = free_form(shape.tags(), &layout);
            assert!(ff.head.is_none() && ff.tail.is_none(), "{shape}");
            let mut seen = vec![false; n.saturating_sub(1)];
            for (a, b) in &ff.gaps {
                assert!(a.is_some() != b.is_some(), "{shape}");
                seen[a.or(*b).unwrap()] = true;
            }
            assert!(seen.iter().all(|&s| s));
            let g = omega_slot_gaps(shape.tags());
            let mut sorted = g.clone();
            sorted.sort_unstable();
            assert_eq!(sorted, (0..n.saturating_sub(1)).collect::<Vec<_>>());
        }
    }
}

#[test]
fn first_order_spec_gives_transported_products() {
    let d = 2;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mx, my) = (random_b(&mut rng, d), random_b(&mut rng, d));
    let (mx2, my2) = (mx.clone(), my.clone());
    let spec = CumulantSpec {
        d,
        left: vec!["x".into()],
        right: vec!["y".into()],
        max_order: 1,
        theta: Arc::new(move |w: &[usize], _bs: &[BMatrix]| if w[0] == 0 { mx2.clone() } else { my2.clone() }),
    };
    let model = SpecifiedModel::new(spec).unwrap();
    let fock = FockModel::new(d, 4).unwrap();
    let (x, y) = (OpElement::lb(&mx), OpElement::rb(&my));
    let pick = |s: Side| if s == Side::Left { x.clone() } else { y.clone() };
    for n in 1..=4 {
        for shape in all_shapes(n) {
            let (se, fe) = paired_tuples(&mut rng, &shape, d, &pick);
            let a = model.moment(shape.tags(), &se).unwrap();
            let b = MomentModel::moment(&fock, shape.tags(), &fe).unwrap();
            assert!(a.dist(&b) < 1e-12, "{shape}: {}", a.dist(&b));
        }
    }
}

#[test]
fn central_limit_spec_matches_fock_moments() {
    let d = 2;
    let model = SpecifiedModel::new(central_limit_spec(d)).unwrap();
    let mut pool = GeneratorPool::new();
    let mut h = vec![0; d * d];
    for g in h.iter_mut() {
        *g = pool.take().unwrap();
    }
    let sl = MatOp::from_fn(d, |i, j| bifree::fock::FockOp::l(h[i * d + j]).add(&bifree::fock::FockOp::ls(h[j * d + i])));
    let sr = MatOp::from_fn(d, |i, j| bifree::fock::FockOp::r(h[i * d + j]).add(&bifree::fock::FockOp::rs(h[j * d + i])));
    let (x, y) = (OpElement::left(&sl), OpElement::right(&sr));
    let pick = |s: Side| if s == Side::Left { x.clone() } else { y.clone() };
    let fock = FockModel::new(d, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst: f64 = 0.0;
    for n in [2, 3, 4] {
        for shape in all_shapes(n) {
            let (se, fe) = paired_tuples(&mut rng, &shape, d, &pick);
            let a = model.moment(shape.tags(), &se).unwrap();
            let b = MomentModel::moment(&fock, shape.tags(), &fe).unwrap();
            worst = worst.max(a.dist(&b));
        }
    }
    assert!(worst < 1e-12, "worst {worst}");
}

#[test]
fn spec_round_trip() {
    let d = 2;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let spec = mixed_zero_spec(d, [random_b(&mut rng, d), random_b(&mut rng, d)], [0.7, 1.3], [0.4, -0.2]);
    let theta = spec.theta.clone();
    let names: Vec<String> = spec.left.iter().chain(spec.right.iter()).cloned().collect();
    let engine = Engine::new(SpecifiedModel::new(spec).unwrap());
    struct Fam(Vec<String>);
    impl WordFamily for Fam {
        type Op = usize;
        fn side_of(&self, l: &str) -> Option<Side> {
            let i = self.0.iter().position(|n| n == l)?;
            Some(if i < 2 { Side::Left } else { Side::Right })
        }
        fn op_of(&self, l: &str) -> Option<usize> {
            self.0.iter().position(|n| n == l)
        }
    }
    let fam = Fam(names.clone());
    let mut worst: f64 = 0.0;
    for n in 1..=4 {
        for _ in 0..12 {
            let word: Vec<usize> = (0..n).map(|_| rng.gen_range(0..4)).collect();
            let omega: Vec<&str> = word.iter().map(|&w| names[w].as_str()).collect();
            let bs: Vec<BMatrix> = (0..n - 1).map(|_| random_b(&mut rng, d)).collect();
            let k = kappa_z_omega(&engine, &fam, &omega, &bs).unwrap();
            worst = worst.max(k.dist(&theta(&word, &bs)));
        }
    }
    assert!(worst < 1e-12, "worst {worst}");
}

#[test]
fn r_diagonal_round_trip() {
    let spec = r_diagonal_spec(vec![1.0, 0.3]);
    let theta = spec.theta.clone();
    let engine = Engine::new(SpecifiedModel::new(spec).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for n in 1..=4 {
        for _ in 0..20 {
            let word: Vec<usize> = (0..n).map(|_| rng.gen_range(0..4)).collect();
            let tags: Vec<Side> = word.iter().map(|&w| if w < 2 { Side::Left } else { Side::Right }).collect();
            let t = DecoratedTuple::plain(ChiShape::new(tags), word.clone()).unwrap();
            let k = engine.kappa_full(t.shape.tags(), &t.entries).unwrap();
            let ones: Vec<BMatrix> = (0..n - 1).map(|_| BMatrix::identity(1)).collect();
            assert!(k.dist(&theta(&word, &ones)) < 1e-12);
        }
    }
    // (X, X*) alternates, (X, X) does not
    assert!((theta(&[0, 1], &[BMatrix::identity(1)]).get(0, 0).re - 1.0).abs() < 1e-15);
    assert_eq!(theta(&[0, 0], &[BMatrix::identity(1)]).norm_max(), 0.0);
}

#[test]
fn nonlinear_spec_is_refused() {
    let spec = CumulantSpec {
        d: 2,
        left: vec!["x".into()],
        right: vec![],
        max_order: 2,
        theta: Arc::new(|w: &[usize], bs: &[BMatrix]| if w.len() == 2 { &bs[0] * &bs[0] } else { BMatrix::zeros(2) }),
    };
    assert!(matches!(SpecifiedModel::new(spec), Err(Error::NonMultilinearSpec(_))));
}

#[test]
fn wrong_side_symbol_is_rejected() {
    let model = SpecifiedModel::new(central_limit_spec(1)).unwrap();
    let r = model.moment(&[Side::Left], &[Decorated::plain(1)]);
    assert!(matches!(r, Err(Error::ShapeMismatch(_))));
}
