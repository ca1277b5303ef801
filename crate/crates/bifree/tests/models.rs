mod common;

use bifree::bnc::Side;
use bifree::fock::*;
use bifree::matrix::{BMatrix, C64};
use bifree::models::*;
use bifree::Error;
use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[test]
fn vacuum_expectations() {
    let fs = FockSpace::new(2, 6).unwrap();
    assert_eq!(fs.vacuum_expectation(&FockOp::l(0)), re(0.0));
    assert_eq!(fs.vacuum_expectation(&FockOp::ls(0).mul(&FockOp::l(0))), re(1.0));
    assert_eq!(fs.vacuum_expectation(&FockOp::ls(1).mul(&FockOp::l(0))), re(0.0));
    let x = FockOp::semicircular_left(0);
    assert_eq!(fs.vacuum_expectation(&x.mul(&x)), re(1.0));
    assert_eq!(fs.vacuum_expectation(&x.mul(&x).mul(&x).mul(&x)), re(2.0));
}

#[test]
fn dense_powers_match_sparse_and_catalan() {
    // single generator, depth 8: dimension 9
    let fs = FockSpace::new(1, 8).unwrap();
    assert_eq!(fs.dim(), 9);
    let x = FockOp::semicircular_left(0);
    let m = fs.to_dense(&x, DEFAULT_DENSE_CAP).unwrap();
    let mut p = bifree::matrix::A0Matrix::identity(9);
    for k in 1..=16 {
        p = p.mul(&m);
        let expect = if k % 2 == 0 { common::catalan_oracle(k as u64 / 2) as f64 } else { 0.0 };
        assert!((p.vacuum() - re(expect)).norm() < 1e-9, "order {k}");
    }
    // and through the sparse model
    let model = FockModel::new(1, 8).unwrap();
    let xo = OpElement::left(&MatOp::from_fn(1, |_, _| x.clone()));
    let seq: Vec<&OpElement> = std::iter::repeat(&xo).take(10).collect();
    assert!((model.moment(&seq).unwrap().get(0, 0) - re(42.0)).norm() < 1e-12);
}

#[test]
fn dense_cap_is_enforced() {
    let fs = FockSpace::new(8, 6).unwrap();
    assert!(matches!(fs.to_dense(&FockOp::l(0), DEFAULT_DENSE_CAP), Err(Error::CapExceeded { .. })));
    assert!(FockSpace::new(40, 2).is_err());
}

#[test]
fn letter_actions() {
    let w = Letter::L(2).apply(0, 8).unwrap();
    let w = Letter::R(4).apply(w, 8).unwrap();
    assert_eq!(word_len(w), 2);
    assert_eq!(Letter::Ls(2).apply(w, 8), Some(Letter::R(4).apply(0, 8).unwrap()));
    assert_eq!(Letter::Rs(4).apply(w, 8), Some(Letter::L(2).apply(0, 8).unwrap()));
    assert_eq!(Letter::Ls(4).apply(w, 8), None);
    assert_eq!(Letter::L(0).apply(w, 2), None);
    // l*(h) is the adjoint of l(h) on the truncation
    let fs = FockSpace::new(2, 3).unwrap();
    let a = fs.to_dense(&FockOp::l(1), 400).unwrap();
    let b = fs.to_dense(&FockOp::ls(1), 400).unwrap();
    assert_eq!(a.adjoint(), b);
    let a = fs.to_dense(&FockOp::r(0), 400).unwrap();
    let b = fs.to_dense(&FockOp::rs(0), 400).unwrap();
    assert_eq!(a.adjoint(), b);
}

#[test]
fn expectation_basics() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let model = FockModel::new(2, 8).unwrap();
    assert_eq!(model.expectation(&OpElement::identity(2)).unwrap(), BMatrix::identity(2));
    let b = random_b(&mut rng, 2);
    assert!(model.expectation(&OpElement::lb(&b)).unwrap().approx_eq(&b, 1e-15));
    assert!(model.expectation(&OpElement::rb(&b)).unwrap().approx_eq(&b, 1e-15));
    let b2 = random_b(&mut rng, 2);
    let e = model.moment(&[&OpElement::lb(&b), &OpElement::rb(&b2)]).unwrap();
    assert!(e.approx_eq(&(&b * &b2), 1e-15));
}

#[test]
fn left_right_product_expectation() {
    // E(L(Z) R(Z')) = φ_d(Z Z') with scalar products Z_ik Z'_kj
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let d = 2;
    let z = random_matop(&mut rng, d, Side::Left, &[0, 1]);
    let w = random_matop(&mut rng, d, Side::Right, &[0, 2]);
    let model = FockModel::new(d, 8).unwrap();
    let got = model.moment(&[&OpElement::left(&z), &OpElement::right(&w)]).unwrap();
    let fs = FockSpace::new(3, 8).unwrap();
    let expect = BMatrix::from_fn(d, |i, j| {
        (0..d).map(|k| fs.vacuum_expectation(&z.get(i, k).mul(w.get(k, j)))).sum()
    });
    assert!(got.approx_eq(&expect, 1e-13));
}

#[test]
fn commutation_with_opposite_multipliers() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let d = 2;
    let model = FockModel::new(d, 8).unwrap();
    for _ in 0..5 {
        let x = random_op(&mut rng, d, Side::Left, &[0, 1]);
        let y = random_op(&mut rng, d, Side::Right, &[0, 1]);
        let b = random_b(&mut rng, d);
        let w1 = random_op(&mut rng, d, Side::Left, &[1]);
        let w2 = random_op(&mut rng, d, Side::Right, &[0]);
        let (rb, lb) = (OpElement::rb(&b), OpElement::lb(&b));
        let a = model.moment(&[&w1, &x, &rb, &w2]).unwrap();
        let c = model.moment(&[&w1, &rb, &x, &w2]).unwrap();
        assert!(a.approx_eq(&c, 1e-13), "{}", a.dist(&c));
        let a = model.moment(&[&w2, &y, &lb, &w1]).unwrap();
        let c = model.moment(&[&w2, &lb, &y, &w1]).unwrap();
        assert!(a.approx_eq(&c, 1e-13), "{}", a.dist(&c));
        assert!(x.is_left_type() && y.is_right_type());
    }
}

#[test]
fn family_probes_pass_and_reject() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let model = FockModel::new(2, 8).unwrap();
    let x = random_op(&mut rng, 2, Side::Left, &[0]);
    let y = random_op(&mut rng, 2, Side::Right, &[0]);
    let fam = TwoFacedFamily::new(model, vec![("x".into(), x.clone())], vec![("y".into(), y.clone())], &mut rng);
    assert!(fam.is_ok());
    let bad = TwoFacedFamily::new(model, vec![("y".into(), y)], vec![], &mut rng);
    assert!(matches!(bad, Err(Error::Config(_))));
}

#[test]
fn shift_examples() {
    let model = FockModel::new(1, 8).unwrap();
    let i1 = BMatrix::identity(1);
    let s = shift(&OpElement::zero(1), &i1, Side::Left);
    assert_eq!(model.expectation(&s).unwrap(), i1);
    let x = OpElement::left(&MatOp::from_fn(1, |_, _| FockOp::semicircular_left(0)));
    let sx = shift(&x, &i1, Side::Left);
    assert_eq!(model.expectation(&sx).unwrap(), i1);
    assert!(sx.is_left_type());
}

#[test]
fn creation_example_generators() {
    let mut pool = GeneratorPool::new();
    let ex = creation_example(2, 2, &mut pool).unwrap();
    assert_eq!(pool.used(), 8);
    assert_eq!(ex.left.len(), 4);
    assert_eq!(ex.right.len(), 4);
}

#[test]
fn d_one_lift_is_the_scalar_pair() {
    let model = FockModel::new(1, 8).unwrap();
    let (x, y) = diagonal_pair(&[(FockOp::semicircular_left(0), FockOp::semicircular_right(0))]);
    let fs = FockSpace::new(1, 8).unwrap();
    let s = FockOp::semicircular_left(0).mul(&FockOp::semicircular_right(0)).mul(&FockOp::semicircular_left(0)).mul(&FockOp::semicircular_right(0));
    let got = model.moment(&[&x, &y, &x, &y]).unwrap();
    assert!((got.get(0, 0) - fs.vacuum_expectation(&s)).norm() < 1e-14);
}

#[test]
fn budget_pruning_is_exact() {
    // compare pruned moments with a dense computation on a truncation deep enough to be exact
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let fs = FockSpace::new(2, 6).unwrap();
    for _ in 0..5 {
        let ops: Vec<FockOp> = (0..6)
            .map(|k| {
                let g = k % 2;
                let side = if k % 3 == 0 { Side::Right } else { Side::Left };
                random_matop(&mut rng, 1, side, &[g]).get(0, 0).clone()
            })
            .collect();
        let prod = ops.iter().skip(1).fold(ops[0].clone(), |acc, o| acc.mul(o));
        let dense = fs.to_dense(&prod, 400).unwrap().vacuum();
        let model = FockModel::new(1, 6).unwrap();
        let els: Vec<OpElement> = ops.iter().map(|o| OpElement::left(&MatOp::from_fn(1, |_, _| o.clone()))).collect();
        let refs: Vec<&OpElement> = els.iter().collect();
        assert!((model.moment(&refs).unwrap().get(0, 0) - dense).norm() < 1e-12);
    }
}
