use bifree::matrix::*;
use bifree::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

#[test]
fn inverse_examples() {
    let i = BMatrix::identity(3);
    assert!(i.inverse().unwrap().approx_eq(&i, 1e-15));
    let d = BMatrix::from_diag(&[c(2.0), c(4.0)]);
    assert!(d.inverse().unwrap().approx_eq(&BMatrix::from_diag(&[c(0.5), c(0.25)]), 1e-15));
}

#[test]
fn singular_inverse_reports_condition() {
    let s = BMatrix::from_rows(&[vec![c(1.0), c(2.0)], vec![c(2.0), c(4.0)]]).unwrap();
    assert!(matches!(s.inverse(), Err(Error::Singular { .. })));
    let near = BMatrix::from_diag(&[c(1.0), c(1e-13)]);
    match near.inverse() {
        Err(Error::Singular { cond }) => assert!(cond > 1e12),
        other => panic!("expected refusal, got {other:?}"),
    }
}

#[test]
fn ring_and_involution_laws() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for d in 1..=4 {
        for _ in 0..20 {
            let a = BMatrix::random(&mut rng, d, 1.0);
            let b = BMatrix::random(&mut rng, d, 1.0);
            let e = BMatrix::random(&mut rng, d, 1.0);
            assert!(((&a * &b) * &e).approx_eq(&(&a * &(&b * &e)), 1e-12));
            assert!((&a * &(&b + &e)).approx_eq(&(&(&a * &b) + &(&a * &e)), 1e-12));
            assert!((&a * &b).adjoint().approx_eq(&(&b.adjoint() * &a.adjoint()), 1e-12));
            assert!(a.adjoint().adjoint().approx_eq(&a, 0.0));
            assert!((&a * &BMatrix::identity(d)).approx_eq(&a, 0.0));
            if let Ok(inv) = a.inverse() {
                assert!((&inv * &a).approx_eq(&BMatrix::identity(d), 1e-9));
            }
        }
    }
}

#[test]
fn diagonal_expectation() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    assert_eq!(diag_part(&BMatrix::identity(3)), BMatrix::identity(3));
    assert_eq!(diag_part(&BMatrix::unit(2, 0, 1)), BMatrix::zeros(2));
    for d in 1..=4 {
        for _ in 0..20 {
            let b = BMatrix::random(&mut rng, d, 1.0);
            let d1 = DiagMatrix::random(&mut rng, d, 1.0).to_b();
            let d2 = DiagMatrix::random(&mut rng, d, 1.0).to_b();
            let lhs = diag_part(&(&(&d1 * &b) * &d2));
            let rhs = &(&d1 * &diag_part(&b)) * &d2;
            assert!(lhs.approx_eq(&rhs, 1e-14));
            assert_eq!(diag_part(&diag_part(&b)), diag_part(&b));
            // faithfulness witness: F(b* b) has positive trace
            assert!(diag_part(&(&b.adjoint() * &b)).trace().re > 0.0);
        }
    }
}

#[test]
fn sample_points_are_invertible_with_margin() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let p = BMatrix::sample_point(&mut rng, 2, 0.05);
        assert!(p.norm_op() <= 0.05 + 1e-12);
        assert!(p.condition() <= 4.0 + 1e-9);
        let u = BMatrix::random_unitary(&mut rng, 3);
        assert!((&u * &u.adjoint()).approx_eq(&BMatrix::identity(3), 1e-12));
    }
}

#[test]
fn json_round_trip() {
    let m = BMatrix::from_rows(&[vec![C64::new(1.0, -2.0), c(0.5)], vec![c(0.0), C64::new(0.0, 3.0)]]).unwrap();
    let s = serde_json::to_string(&m).unwrap();
    assert_eq!(s, "[[[1.0,-2.0],[0.5,0.0]],[[0.0,0.0],[0.0,3.0]]]");
    let back: BMatrix = serde_json::from_str(&s).unwrap();
    assert_eq!(back, m);
    assert!(serde_json::from_str::<BMatrix>("[[[1.0,0.0]],[[0.0,0.0]]]").is_err());
}
