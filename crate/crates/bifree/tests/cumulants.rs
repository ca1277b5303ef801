mod common;

use bifree::bnc::*;
use bifree::cumulants::*;
use bifree::fock::FockOp;
use bifree::matrix::{BMatrix, C64};
use bifree::models::*;
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_tuple(rng: &mut ChaCha8Rng, shape: &ChiShape, d: usize, decorate: bool) -> OpTuple {
    let entries = shape
        .tags()
        .iter()
        .map(|&side| {
            let op = random_op(rng, d, side, &[0, 1]);
            let mut e = Decorated::plain(op);
            if decorate {
                if rng.gen_bool(0.5) {
                    e.pre = Some(random_b(rng, d));
                }
                if rng.gen_bool(0.5) {
                    e.suf = Some(random_b(rng, d));
                }
            }
            e
        })
        .collect();
    DecoratedTuple::new(shape.clone(), entries).unwrap()
}

fn engine(d: usize) -> FockEngine {
    Engine::new(FockModel::new(d, 8).unwrap())
}

#[test]
fn moment_full_examples() {
    let eng = engine(1);
    let l = OpElement::left(&MatOp::from_fn(1, |_, _| FockOp::l(0)));
    let ls = OpElement::left(&MatOp::from_fn(1, |_, _| FockOp::ls(0)));
    let s = ChiShape::parse("ll").unwrap();
    let t = DecoratedTuple::plain(s.clone(), vec![l.clone(), ls.clone()]).unwrap();
    assert_eq!(eval_moment_full(&eng, &t).unwrap(), BMatrix::zeros(1));
    let t = DecoratedTuple::plain(s, vec![ls, l]).unwrap();
    assert_eq!(eval_moment_full(&eng, &t).unwrap(), BMatrix::identity(1));
    // single decorated constant: E(L_b1 L_z L_b2) = b1 z b2
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let eng = engine(2);
    let (b1, z, b2) = (random_b(&mut rng, 2), random_b(&mut rng, 2), random_b(&mut rng, 2));
    let t = DecoratedTuple::new(
        ChiShape::parse("l").unwrap(),
        vec![Decorated::new(OpElement::lb(&z), Some(b1.clone()), Some(b2.clone()))],
    )
    .unwrap();
    assert!(eval_moment_full(&eng, &t).unwrap().approx_eq(&(&(&b1 * &z) * &b2), 1e-14));
}

#[test]
fn decoration_transport_example() {
    // Φ(L_b1 Z1, R_b2 Z2, L_b3 Z3, R_b4 Z4 R_b5) = b1 Φ(Z1 L_b3, Z2 R_b4, Z3 L_b5, Z4) b2
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let eng = engine(2);
    let shape = ChiShape::parse("lrlr").unwrap();
    let z: Vec<OpElement> = shape.tags().iter().map(|&s| random_op(&mut rng, 2, s, &[0, 1])).collect();
    let b: Vec<BMatrix> = (0..5).map(|_| random_b(&mut rng, 2)).collect();
    let lhs = vec![
        Decorated::plain(z[0].clone()).with_pre(b[0].clone()),
        Decorated::plain(z[1].clone()).with_pre(b[1].clone()),
        Decorated::plain(z[2].clone()).with_pre(b[2].clone()),
        Decorated::new(z[3].clone(), Some(b[3].clone()), Some(b[4].clone())),
    ];
    let rhs = vec![
        Decorated::plain(z[0].clone()).with_suf(b[2].clone()),
        Decorated::plain(z[1].clone()).with_suf(b[3].clone()),
        Decorated::plain(z[2].clone()).with_suf(b[4].clone()),
        Decorated::plain(z[3].clone()),
    ];
    let l = eng.e_full(shape.tags(), &lhs).unwrap();
    let r = &(&b[0] * &eng.e_full(shape.tags(), &rhs).unwrap()) * &b[1];
    assert!(l.approx_eq(&r, 1e-12), "{}", l.dist(&r));
    // the same identity for the cumulant
    let l = eng.kappa_full(shape.tags(), &lhs).unwrap();
    let r = &(&b[0] * &eng.kappa_full(shape.tags(), &rhs).unwrap()) * &b[1];
    assert!(l.approx_eq(&r, 1e-10), "{}", l.dist(&r));
}

#[test]
fn zero_partition_on_two_left_entries() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let eng = engine(2);
    let s = ChiShape::parse("ll").unwrap();
    let t = random_tuple(&mut rng, &s, 2, true);
    let e0 = eval_moment_pi(&eng, &BncPartition::zero(&s), &t).unwrap();
    let single = |k: usize| eng.e_full(&[Side::Left], &t.entries[k..k + 1]).unwrap();
    assert!(e0.approx_eq(&(&single(0) * &single(1)), 1e-13));
}

#[test]
fn second_cumulant_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let eng = engine(2);
    let s = ChiShape::parse("ll").unwrap();
    let t = random_tuple(&mut rng, &s, 2, false);
    let k = eval_cumulant_pi(&eng, &BncPartition::one(&s), &t).unwrap();
    let e12 = eval_moment_full(&eng, &t).unwrap();
    let e1 = eng.e_full(&[Side::Left], &t.entries[0..1]).unwrap();
    let e2 = eng.e_full(&[Side::Left], &t.entries[1..2]).unwrap();
    assert!(k.approx_eq(&(&e12 - &(&e1 * &e2)), 1e-13));
    let one = ChiShape::parse("r").unwrap();
    let t1 = random_tuple(&mut rng, &one, 2, true);
    assert!(eng.kappa_full(one.tags(), &t1.entries).unwrap().approx_eq(&eval_moment_full(&eng, &t1).unwrap(), 0.0));
}

#[test]
fn schedules_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let eng = engine(2);
    for n in 2..=5 {
        for s in all_shapes(n).into_iter().step_by(3) {
            let t = random_tuple(&mut rng, &s, 2, true);
            for pi in enumerate_bnc(&s).unwrap() {
                let base = eng.e_pi_with(&pi, &t.entries, Schedule::default()).unwrap();
                for sch in Schedule::ALL {
                    let v = eng.e_pi_with(&pi, &t.entries, sch).unwrap();
                    assert!(v.approx_eq(&base, 1e-12), "shape {s} pi {pi} {sch:?}: {}", v.dist(&base));
                }
            }
        }
    }
}

#[test]
fn cumulant_reduction_equals_mobius_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let eng = engine(2);
    for n in 2..=4 {
        for s in all_shapes(n) {
            let t = random_tuple(&mut rng, &s, 2, true);
            for pi in enumerate_bnc(&s).unwrap() {
                let a = eng.kappa_pi(&pi, &t.entries).unwrap();
                let b = eng.kappa_pi_mobius(&pi, &t.entries).unwrap();
                assert!(a.approx_eq(&b, 1e-9), "shape {s} pi {pi}: {}", a.dist(&b));
            }
        }
    }
}

#[test]
fn round_trip_small() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let eng = engine(2);
    for n in 1..=4 {
        for s in all_shapes(n) {
            let t = random_tuple(&mut rng, &s, 2, true);
            for sigma in enumerate_bnc(&s).unwrap() {
                let e = eval_moment_pi(&eng, &sigma, &t).unwrap();
                let back = moments_from_cumulants(&eng, &sigma, &t).unwrap();
                assert!(e.approx_eq(&back, 1e-10), "{}", e.dist(&back));
            }
        }
    }
}

#[test]
fn vanishing_with_b_entries() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let eng = engine(2);
    for n in 2..=4 {
        for s in all_shapes(n) {
            let mut t = random_tuple(&mut rng, &s, 2, true);
            let q = rng.gen_range(0..n);
            t.entries[q] = Decorated::plain(OpElement::b_op(s.tag(q), &random_b(&mut rng, 2)));
            let k = eng.kappa_full(s.tags(), &t.entries).unwrap();
            assert!(k.norm_max() <= 1e-10, "shape {s} q {q}: {}", k.norm_max());
        }
    }
}

#[test]
fn products_identity_small() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let eng = engine(2);
    for (outer, cuts) in [("ll", vec![0, 2, 4]), ("lr", vec![0, 2, 4]), ("rl", vec![0, 1, 3]), ("lr", vec![0, 1, 2])] {
        let emb = HatEmbedding::new(ChiShape::parse(outer).unwrap(), cuts).unwrap();
        let t = random_tuple(&mut rng, emb.inner(), 2, true);
        let c = cumulant_of_products(&eng, &emb, &t).unwrap();
        assert!(c.residual <= 1e-10, "{outer}: {}", c.residual);
    }
}

struct Fam {
    x: OpElement,
    y: OpElement,
    x2: OpElement,
}

impl WordFamily for Fam {
    type Op = OpElement;
    fn side_of(&self, l: &str) -> Option<Side> {
        match l {
            "x" | "x2" => Some(Side::Left),
            "y" => Some(Side::Right),
            _ => None,
        }
    }
    fn op_of(&self, l: &str) -> Option<OpElement> {
        match l {
            "x" => Some(self.x.clone()),
            "x2" => Some(self.x2.clone()),
            "y" => Some(self.y.clone()),
            _ => None,
        }
    }
}

#[test]
fn kappa_z_omega_layout() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let eng = engine(2);
    let fam = Fam {
        x: random_op(&mut rng, 2, Side::Left, &[0, 1]),
        y: random_op(&mut rng, 2, Side::Right, &[0, 1]),
        x2: random_op(&mut rng, 2, Side::Left, &[1]),
    };
    // all-left n = 1 is the expectation
    let v = kappa_z_omega(&eng, &fam, &["x"], &[]).unwrap();
    assert!(v.approx_eq(&eng.model().expectation(&fam.x).unwrap(), 1e-15));
    // mixed (x, y): b_1 is the terminal suffix on position 2
    let b = random_b(&mut rng, 2);
    let v = kappa_z_omega(&eng, &fam, &["x", "y"], &[b.clone()]).unwrap();
    let hand = vec![Decorated::plain(fam.x.clone()), Decorated::plain(fam.y.clone()).with_suf(b.clone())];
    assert!(v.approx_eq(&eng.kappa_full(&[Side::Left, Side::Right], &hand).unwrap(), 0.0));
    // mixed (x, x2, y, x): k0 = 3 carries no prefix
    let bs: Vec<BMatrix> = (0..3).map(|_| random_b(&mut rng, 2)).collect();
    let t = omega_tuple(&fam, &["x", "x2", "y", "x"], &bs).unwrap();
    assert!(t.entries[0].pre.is_none() && t.entries[2].pre.is_none());
    assert_eq!(t.entries[1].pre.as_ref(), Some(&bs[0]));
    assert_eq!(t.entries[3].pre.as_ref(), Some(&bs[1]));
    assert_eq!(t.entries[3].suf.as_ref(), Some(&bs[2]));
    assert!(omega_tuple(&fam, &["x", "z"], &[b.clone()]).is_err());
    assert!(omega_tuple(&fam, &["x", "y"], &[]).is_err());
}

#[test]
fn kappa_z_omega_is_multilinear() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let eng = engine(2);
    let fam = Fam {
        x: random_op(&mut rng, 2, Side::Left, &[0, 1]),
        y: random_op(&mut rng, 2, Side::Right, &[0, 1]),
        x2: random_op(&mut rng, 2, Side::Left, &[1]),
    };
    let omega = ["y", "x", "x2", "y"];
    let bs: Vec<BMatrix> = (0..3).map(|_| random_b(&mut rng, 2)).collect();
    for slot in 0..3 {
        let u = random_b(&mut rng, 2);
        let a = C64::new(0.7, -0.2);
        let mut b1 = bs.clone();
        b1[slot] = &bs[slot] + &u.scale(a);
        let mut b2 = bs.clone();
        b2[slot] = u.clone();
        let lhs = kappa_z_omega(&eng, &fam, &omega, &b1).unwrap();
        let rhs = &kappa_z_omega(&eng, &fam, &omega, &bs).unwrap() + &kappa_z_omega(&eng, &fam, &omega, &b2).unwrap().scale(a);
        assert!(lhs.approx_eq(&rhs, 1e-12), "slot {slot}: {}", lhs.dist(&rhs));
    }
}

#[test]
fn interchange_and_tail_swap() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let eng = engine(2);
    let z = random_b(&mut rng, 2);
    let zi = BMatrix::scalar(2, C64::new(0.4, 0.1));
    let probes: Vec<OpElement> =
        vec![random_op(&mut rng, 2, Side::Left, &[0]), random_op(&mut rng, 2, Side::Right, &[1]), OpElement::identity(2)];
    // X = L_z, Y = R_z with z scalar: hypothesis exact
    let s = ChiShape::parse("llrr").unwrap();
    let mut t = random_tuple(&mut rng, &s, 2, false);
    t.entries[1] = Decorated::plain(OpElement::lb(&zi));
    t.entries[2] = Decorated::plain(OpElement::rb(&zi));
    let c = verify_interchange(&eng, &t, 1, &probes, 1e-12).unwrap();
    assert!(c.hypothesis_ok && c.residual <= 1e-12);
    // Fock-model pair with E(ZX) = E(ZY): X = L(diag(l+l*)), Y = R(diag(r+r*)) on one generator
    let (x, y) = diagonal_pair(&[
        (FockOp::semicircular_left(0), FockOp::semicircular_right(0)),
        (FockOp::semicircular_left(0), FockOp::semicircular_right(0)),
    ]);
    let s = ChiShape::parse("rll").unwrap();
    let mut t = random_tuple(&mut rng, &s, 2, false);
    t.entries[2] = Decorated::plain(x.clone());
    let probe_left: Vec<OpElement> = vec![OpElement::identity(2), OpElement::lb(&z)];
    let c = verify_tail_swap(&eng, &t, &y, &probe_left, 1e-12).unwrap();
    assert!(c.hypothesis_ok, "{}", c.hypothesis_residual);
    assert!(c.residual <= 1e-9, "{}", c.residual);
    // broken hypothesis is flagged
    let other = random_op(&mut rng, 2, Side::Right, &[1]);
    let c = verify_tail_swap(&eng, &t, &other, &probe_left, 1e-12).unwrap();
    assert!(!c.hypothesis_ok);
}
