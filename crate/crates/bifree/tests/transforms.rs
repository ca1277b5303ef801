use bifree::bnc::Side;
use bifree::fock::FockOp;
use bifree::matrix::{BMatrix, C64};
use bifree::models::*;
use bifree::transforms::inverse::{s_transform_left, s_transform_right};
use bifree::transforms::partial::{s_partial, t_transform};
use bifree::transforms::pinched::Slot;
use bifree::transforms::verify::*;
use bifree::transforms::*;
use bifree::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn scalar(x: f64) -> BMatrix {
    BMatrix::scalar(1, C64::new(x, 0.0))
}

fn catalan(k: u64) -> f64 {
    bifree::bnc::catalan(k as usize) as f64
}

/// `l(h) + l*(h)` on the left and `r(h) + r*(h)` on the right, same generator, over `C`.
fn scalar_semicircle() -> Pair {
    let sl = MatOp::from_fn(1, |_, _| FockOp::l(0).add(&FockOp::ls(0)));
    let sr = MatOp::from_fn(1, |_, _| FockOp::r(0).add(&FockOp::rs(0)));
    Pair::new(OpElement::left(&sl), OpElement::right(&sr))
}

fn standard(seed: u64, order: usize, rho: f64) -> (SeriesContext, Pairs, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (model, pairs) = shifted_pairs(2, 0.5, 6, &mut rng).unwrap();
    (SeriesContext::new(model, order, rho), pairs, rng)
}

fn diag(a: f64, b: f64) -> BMatrix {
    BMatrix::from_diag(&[C64::new(a, 0.0), C64::new(b, 0.0)])
}

#[test]
fn series_at_zero_are_constant_terms() {
    let (ctx, pairs, _) = standard(1, 6, 0.08);
    let zero = BMatrix::zeros(2);
    let x = &pairs.first.x;
    assert_eq!(ctx.left(SeriesKind::M, x, &zero).unwrap().value, BMatrix::identity(2));
    assert_eq!(ctx.left(SeriesKind::C, x, &zero).unwrap().value, BMatrix::identity(2));
    assert_eq!(ctx.left(SeriesKind::G, x, &zero).unwrap().value, zero);
    let c = diag(0.3, -0.7);
    for kind in [TwoFaceKind::M, TwoFaceKind::C] {
        assert_eq!(ctx.two_face(kind, &pairs.first, &zero, &c, &zero).unwrap().value, c);
    }
    assert_eq!(ctx.two_face(TwoFaceKind::K, &pairs.first, &zero, &c, &zero).unwrap().value, zero);
}

#[test]
fn constant_left_element_has_one_cumulant() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ctx = SeriesContext::new(FockModel::new(2, 4).unwrap(), 6, 0.08);
    let z = BMatrix::random(&mut rng, 2, 1.0);
    let x = OpElement::lb(&z);
    let b = BMatrix::sample_point(&mut rng, 2, 0.08);
    let r = ctx.left(SeriesKind::R, &x, &b).unwrap().value;
    let c = ctx.left(SeriesKind::C, &x, &b).unwrap().value;
    assert!(r.dist(&z) < 1e-14);
    assert!(c.dist(&(BMatrix::identity(2) + &b * &z)) < 1e-14);
}

#[test]
fn scalar_semicircle_moments_are_catalan() {
    let p = scalar_semicircle();
    let ctx = SeriesContext::new(FockModel::new(1, 6).unwrap(), 6, 0.08);
    let b = 0.07;
    let m = ctx.left(SeriesKind::M, &p.x, &scalar(b)).unwrap().value.get(0, 0);
    let expect: f64 = (0..=3).map(|k| catalan(k) * b.powi(2 * k as i32)).sum();
    assert!((m.re - expect).abs() < 1e-15 && m.im.abs() < 1e-15, "{m} vs {expect}");
}

#[test]
fn scalar_two_face_cumulant_series() {
    // κ_{2,0} = κ_{1,1} = κ_{0,2} = 1 and nothing else, so C(z, c, w) = c (1 + z² + zw + w²).
    let p = scalar_semicircle();
    let ctx = SeriesContext::new(FockModel::new(1, 6).unwrap(), 6, 0.08);
    let (z, c, w) = (0.05, 0.8, -0.06);
    let got = ctx.two_face(TwoFaceKind::C, &p, &scalar(z), &scalar(c), &scalar(w)).unwrap().value.get(0, 0);
    let expect = c * (1.0 + z * z + z * w + w * w);
    assert!((got.re - expect).abs() < 1e-15, "{got} vs {expect}");
    let k = ctx.two_face(TwoFaceKind::K, &p, &scalar(z), &scalar(c), &scalar(w)).unwrap().value.get(0, 0);
    assert!((k.re - c * z * w).abs() < 1e-15);
    // the identity itself in the scalar case
    let pairs = Pairs::new(p.clone(), scalar_semicircle());
    let pt = Point { b: scalar(z), c: scalar(1.0), d: scalar(w) };
    let checks = check_r_transform(&ctx, &pairs, &pt).unwrap();
    assert!(checks[0].pass, "{:?}", checks[0]);
}

#[test]
fn norm_contract_is_enforced() {
    let (ctx, pairs, _) = standard(3, 6, 0.08);
    let big = BMatrix::identity(2).scale_re(0.2);
    let r = left_series(SeriesKind::M, &ctx, &pairs.first.x, &big);
    assert!(matches!(r, Err(Error::NormTooLarge { .. })));
    let r = two_face_series(TwoFaceKind::C, &ctx, &pairs.first, &BMatrix::zeros(2), &BMatrix::identity(2), &big);
    assert!(matches!(r, Err(Error::NormTooLarge { .. })));
}

#[test]
fn relations_exact_at_zero_and_within_tail_elsewhere() {
    let (ctx, pairs, mut rng) = standard(4, 6, 0.08);
    let zero = Point { b: BMatrix::zeros(2), c: BMatrix::identity(2), d: BMatrix::zeros(2) };
    for c in check_relations(&ctx, &pairs.first, &zero).unwrap() {
        assert_eq!(c.residual, 0.0, "{}", c.name);
    }
    let fixed_b = Point { b: BMatrix::identity(2).scale_re(0.05), ..zero };
    for c in check_relations(&ctx, &pairs.first, &fixed_b).unwrap() {
        assert!(c.pass, "{}: {} > {}", c.name, c.residual, c.tail_tol);
    }
    let pt = Point::sample(&mut rng, 2, 0.08);
    for c in check_relations(&ctx, &pairs.first, &pt).unwrap() {
        assert!(c.pass, "{}: {} > {}", c.name, c.residual, c.tail_tol);
    }
}

#[test]
fn degenerations_hold_at_five_points() {
    let (ctx, pairs, mut rng) = standard(5, 6, 0.08);
    for _ in 0..5 {
        let pt = Point::sample(&mut rng, 2, 0.08);
        for c in check_degenerations(&ctx, &pairs.first, &pt).unwrap() {
            assert!(c.pass && c.residual < 1e-13, "{}: {}", c.name, c.residual);
        }
    }
}

#[test]
fn r_transform_and_additivity() {
    let (ctx, pairs, mut rng) = standard(6, 6, 0.05);
    let pt = Point::sample(&mut rng, 2, 0.05);
    let checks = check_r_transform(&ctx, &pairs, &pt).unwrap();
    assert_eq!(checks.len(), 5);
    for c in &checks {
        assert!(c.pass, "{}: {} > {}", c.name, c.residual, c.tail_tol);
        assert!(c.non_increasing(&[3, 4, 5]), "{}: {:?}", c.name, c.by_order);
    }
}

#[test]
fn additivity_fails_for_dependent_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut pool = GeneratorPool::new();
    let p = shifted_pair(2, 0.5, &mut pool, &mut rng).unwrap();
    let mut pool2 = GeneratorPool::new();
    let q = shifted_pair(2, 0.5, &mut pool2, &mut rng).unwrap();
    // same generators: the two pairs are far from bi-free
    let pairs = Pairs::new(Pair::from(&p), Pair::from(&q));
    let ctx = SeriesContext::new(FockModel::new(2, 6).unwrap(), 6, 0.08);
    let pt = Point::sample(&mut rng, 2, 0.08);
    let add = check_r_transform(&ctx, &pairs, &pt).unwrap().into_iter().find(|c| c.name.contains("additivity")).unwrap();
    assert!(!add.pass && add.residual > 1e-4, "{}", add.residual);
}

#[test]
fn inversion_round_trips_on_ten_points_per_side() {
    let (ctx, pairs, mut rng) = standard(8, 6, 0.08);
    for _ in 0..10 {
        let pt = Point::sample(&mut rng, 2, 0.08);
        for c in check_inversion(&ctx, &pairs.first, &pt).unwrap() {
            assert!(c.pass, "{}: {} > {}", c.name, c.residual, c.tail_tol);
        }
    }
}

#[test]
fn constant_element_inverts_in_one_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let ctx = SeriesContext::new(FockModel::new(2, 4).unwrap(), 6, 0.08);
    let z = &BMatrix::identity(2) + &BMatrix::random(&mut rng, 2, 0.2);
    let x = OpElement::lb(&z);
    let v = BMatrix::sample_point(&mut rng, 2, 0.08);
    let inv = ctx.invert_phi(Side::Left, &x, &v).unwrap();
    assert_eq!(inv.iterations, 1);
    assert!(inv.u.dist(&(&v * &z.inverse().unwrap())) < 1e-14);
    let s = s_transform_left(&ctx, &x, &v, SRoute::Theta).unwrap();
    assert!(s.dist(&z.inverse().unwrap()) < 1e-14);
}

#[test]
fn theta_at_zero_is_inverse_mean() {
    let (ctx, pairs, _) = standard(10, 6, 0.08);
    let zero = BMatrix::zeros(2);
    for (side, z) in [(Side::Left, &pairs.first.x), (Side::Right, &pairs.first.y)] {
        let mean = ctx.engine().e_full(&[side], &[bifree::cumulants::Decorated::plain(z.clone())]).unwrap();
        let th = ctx.invert_phi(side, z, &zero).unwrap().theta;
        assert!(th.dist(&mean.inverse().unwrap()) < 1e-14);
    }
    // the literal route needs an invertible point
    let r = s_transform_right(&ctx, &pairs.first.y, &zero, SRoute::Literal);
    assert!(matches!(r, Err(Error::Singular { .. })));
}

#[test]
fn s_routes_agree() {
    let (ctx, pairs, mut rng) = standard(11, 5, 0.05);
    let pt = Point::sample(&mut rng, 2, 0.05);
    for c in check_s_routes(&ctx, &pairs.first, &pt).unwrap() {
        assert!(c.pass, "{}: {} > {}", c.name, c.residual, c.tail_tol);
    }
}

#[test]
fn psi_first_term_and_zero_argument() {
    let (ctx, pairs, mut rng) = standard(12, 5, 0.05);
    let b = BMatrix::sample_point(&mut rng, 2, 0.05);
    let (x1, x2) = (&pairs.first.x, &pairs.second.x);
    let first = ctx.with_order(1).psi_left(&Slot::pre(x1, &b), &Slot::plain(x2)).unwrap().value;
    let mean = ctx.engine().e_full(&[Side::Left], &[bifree::cumulants::Decorated::new(x1.clone(), Some(b.clone()), None)]).unwrap();
    assert!(first.dist(&mean) < 1e-15);
    let zero_op = OpElement::zero(2);
    let z = ctx.psi_left(&Slot::plain(&zero_op), &Slot::plain(x2)).unwrap().value;
    assert!(z.norm_max() < 1e-15);
}

#[test]
fn s_lemmata_hold() {
    let (ctx, pairs, mut rng) = standard(13, 5, 0.05);
    let pt = Point::sample(&mut rng, 2, 0.05);
    let checks = check_s_lemmata(&ctx, &pairs, &pt).unwrap();
    assert_eq!(checks.len(), 16);
    for c in &checks {
        assert!(c.pass, "{}: {} > {}", c.name, c.residual, c.tail_tol);
    }
}

#[test]
fn free_s_with_commuting_constants() {
    let ctx = SeriesContext::new(FockModel::new(2, 4).unwrap(), 5, 0.05);
    let (z1, z2) = (diag(1.2, 0.7), diag(0.9, 1.5));
    let x1 = OpElement::lb(&z1);
    let x2 = OpElement::lb(&z2);
    let b = diag(0.03, -0.02);
    let s = ctx.s_one_face(Side::Left, &x1.mul(&x2), &b, SRoute::Theta).unwrap();
    assert!(s.dist(&(&z1 * &z2).inverse().unwrap()) < 1e-14);
    let pairs = Pairs::new(Pair::new(x1, OpElement::rb(&z1)), Pair::new(x2, OpElement::rb(&z2)));
    let pt = Point { b: b.clone(), c: BMatrix::identity(2), d: b };
    for c in check_free_s(&ctx, &pairs, &pt).unwrap() {
        assert!(c.residual < 1e-14, "{}", c.name);
    }
}

#[test]
fn free_s_for_shifted_semicirculars() {
    let (ctx, pairs, mut rng) = standard(14, 5, 0.05);
    let pt = Point::sample(&mut rng, 2, 0.05);
    for c in check_free_s(&ctx, &pairs, &pt).unwrap() {
        assert!(c.pass, "{}: {} > {}", c.name, c.residual, c.tail_tol);
        assert!(c.non_increasing(&[3, 4, 5]));
    }
}

#[test]
fn free_s_fails_for_dependent_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut pool = GeneratorPool::new();
    let p = shifted_pair(2, 0.5, &mut pool, &mut rng).unwrap();
    let mut pool2 = GeneratorPool::new();
    let q = shifted_pair(2, 0.5, &mut pool2, &mut rng).unwrap();
    let pairs = Pairs::new(Pair::from(&p), Pair::from(&q));
    let ctx = SeriesContext::new(FockModel::new(2, 6).unwrap(), 5, 0.05);
    let pt = Point::sample(&mut rng, 2, 0.05);
    let checks = check_free_s(&ctx, &pairs, &pt).unwrap();
    assert!(checks.iter().all(|c| !c.pass), "{checks:?}");
}

#[test]
fn t_transform_with_zero_left_element_is_c() {
    let (ctx, pairs, mut rng) = standard(16, 5, 0.05);
    let pt = Point::sample(&mut rng, 2, 0.05);
    let p = Pair::new(OpElement::zero(2), pairs.first.y.clone());
    let t = t_transform(&ctx, &p, &pt.b, &pt.c, &pt.d).unwrap();
    assert!(t.dist(&pt.c) < 1e-15);
}

#[test]
fn s_partial_of_constants_is_c() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let ctx = SeriesContext::new(FockModel::new(2, 4).unwrap(), 5, 0.05);
    let p = Pair::new(OpElement::lb(&diag(1.1, 0.8)), OpElement::rb(&diag(0.9, 1.3)));
    let pt = Point::sample(&mut rng, 2, 0.05);
    let s = s_partial(&ctx, &p, &pt.b, &pt.c, &pt.d).unwrap();
    assert!(s.dist(&pt.c) < 1e-15);
}

#[test]
fn t_property_and_cases() {
    let (ctx, pairs, mut rng) = standard(18, 5, 0.05);
    let pt = Point::sample(&mut rng, 2, 0.05);
    let mut checks = check_t_property(&ctx, &pairs, &pt).unwrap();
    checks.extend(check_t_cases(&ctx, &pairs, &pt).unwrap());
    for c in &checks {
        assert!(c.pass, "{}: {} > {}", c.name, c.residual, c.tail_tol);
        assert!(c.non_increasing(&[3, 4, 5]), "{}: {:?}", c.name, c.by_order);
    }
}

#[test]
fn s_property_and_cases() {
    let (ctx, pairs, mut rng) = standard(19, 5, 0.05);
    let pt = Point::sample(&mut rng, 2, 0.05);
    let mut checks = check_s_property(&ctx, &pairs, &pt).unwrap();
    checks.extend(check_s_cases(&ctx, &pairs, &pt).unwrap());
    assert_eq!(checks.len(), 9);
    for c in &checks {
        assert!(c.pass, "{}: {} > {}", c.name, c.residual, c.tail_tol);
        assert!(c.non_increasing(&[3, 4, 5]), "{}: {:?}", c.name, c.by_order);
    }
}

#[test]
fn scalar_reductions_of_t_and_s() {
    // over C the partial transforms of a bi-free central limit pair against itself
    let p = scalar_semicircle();
    let ctx = SeriesContext::new(FockModel::new(1, 6).unwrap(), 5, 0.05);
    let shift = |s: f64| BMatrix::scalar(1, C64::new(s, 0.0));
    let p1 = Pair::new(p.x.add(&OpElement::lb(&shift(1.0))), p.y.add(&OpElement::rb(&shift(1.0))));
    let sl = MatOp::from_fn(1, |_, _| FockOp::l(1).add(&FockOp::ls(1)));
    let sr = MatOp::from_fn(1, |_, _| FockOp::r(1).add(&FockOp::rs(1)));
    let p2 = Pair::new(OpElement::left(&sl).add(&OpElement::lb(&shift(1.0))), OpElement::right(&sr).add(&OpElement::rb(&shift(1.0))));
    let pairs = Pairs::new(p1, p2);
    let pt = Point { b: scalar(0.04), c: scalar(1.0), d: scalar(-0.03) };
    for c in check_t_property(&ctx, &pairs, &pt).unwrap().into_iter().chain(check_s_property(&ctx, &pairs, &pt).unwrap()) {
        assert!(c.pass, "{}: {} > {}", c.name, c.residual, c.tail_tol);
    }
    // κ_{1,1} = 1 is the only mixed cumulant, so T(z, 1, w) = 1 + z θ_Y(w)
    let t = ctx.t_transform(&pairs.first, &scalar(0.04), &scalar(1.0), &scalar(-0.03)).unwrap().get(0, 0);
    let theta = ctx.invert_phi(Side::Right, &pairs.first.y, &scalar(-0.03)).unwrap().theta.get(0, 0);
    assert!((t - (1.0 + 0.04 * theta)).norm() < 1e-14);
}

#[test]
fn unknown_check_lists_names() {
    let (ctx, pairs, mut rng) = standard(20, 5, 0.05);
    let pt = Point::sample(&mut rng, 2, 0.05);
    match run_check("nope", &ctx, &pairs, &pt) {
        Err(Error::UnknownCheck { valid, .. }) => assert!(valid.contains("s-cases")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn checks_are_deterministic() {
    let run = || {
        let (ctx, pairs, mut rng) = standard(21, 5, 0.05);
        let pt = Point::sample(&mut rng, 2, 0.05);
        serde_json::to_string(&check_t_property(&ctx, &pairs, &pt).unwrap()).unwrap()
    };
    assert_eq!(run(), run());
}
