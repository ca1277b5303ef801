use bifree::transforms::verify::{OrderResidual, PointCheck};
use bifree_cli::config::ExperimentConfig;
use bifree_cli::suite::{check_names, explain, order_growth, run_suite, CHECKS};
use bifree_cli::CliError;
use serde_json::Value;

fn point(residuals: &[(usize, f64)]) -> PointCheck {
    let z = bifree::matrix::BMatrix::zeros(1);
    PointCheck {
        name: "x".into(),
        inputs: Default::default(),
        lhs: z.clone(),
        rhs: z,
        residual: 0.0,
        tail_tol: 0.0,
        pass: true,
        by_order: residuals.iter().map(|&(order, residual)| OrderResidual { order, residual }).collect(),
    }
}

#[test]
fn empty_config_is_the_golden_run() {
    assert_eq!(ExperimentConfig::from_json("{}").unwrap(), ExperimentConfig::default());
    let c = ExperimentConfig::from_json(r#"{"seed": 4, "transforms": {"relations": {"order": 5, "rho": 0.1, "points": 2}}}"#).unwrap();
    assert_eq!(c.seed, 4);
    assert_eq!(c.transforms.relations.order, 5);
    assert_eq!(c.transforms.r_transform, ExperimentConfig::default().transforms.r_transform);
}

#[test]
fn config_round_trips_through_the_report() {
    let c = ExperimentConfig::default();
    let text = serde_json::to_string(&c).unwrap();
    assert_eq!(ExperimentConfig::from_json(&text).unwrap(), c);
}

#[test]
fn validation() {
    let mut c = ExperimentConfig::default();
    c.checks = vec!["mobius".into(), "bogus".into()];
    assert!(matches!(c.validate(), Err(CliError::UnknownCheck { .. })));
    let mut c = ExperimentConfig::default();
    c.transforms.r_transform.rho = 1.5;
    assert!(matches!(c.validate(), Err(CliError::Config(_))));
    assert!(matches!(run_suite(&c, 1), Err(CliError::Config(_))));
}

#[test]
fn registry_is_complete() {
    let names = check_names();
    let mut sorted = names.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(sorted.len(), names.len());
    for c in CHECKS {
        assert!(explain(c.name).unwrap().contains(c.anchor));
    }
    // every criterion except report determinism has a check
    for k in 1..=14 {
        assert!(CHECKS.iter().any(|c| c.criterion == k), "criterion {k}");
    }
    for n in bifree::transforms::verify::CHECK_NAMES {
        assert!(names.contains(&n), "{n}");
    }
}

#[test]
fn growth_ignores_rounding_noise() {
    let orders = [3, 4, 5];
    assert_eq!(order_growth(&point(&[(3, 1e-6), (4, 1e-8), (5, 1e-9)]), &orders), Some(0.0));
    assert_eq!(order_growth(&point(&[(3, 1e-16), (4, 5e-15), (5, 0.0)]), &orders), Some(0.0));
    let g = order_growth(&point(&[(3, 1e-8), (4, 3e-8), (5, 0.0)]), &orders).unwrap();
    assert!((g - 2e-8).abs() < 1e-20);
    assert_eq!(order_growth(&point(&[(4, 1e-8), (5, 0.0)]), &orders), None);
}

#[test]
fn per_check_errors_do_not_abort() {
    let mut c = ExperimentConfig::default();
    c.checks = vec!["kreweras".into(), "relations".into()];
    // one family only: the transform check cannot form two pairs
    c.transforms.model = bifree::descriptor::ModelSpec::ShiftedPairs { d: 1, alpha: 1.0, pairs: 1, depth: 4, seed: 0, shared: false };
    let rep = run_suite(&c, 1).unwrap();
    assert_eq!(rep.total, 2);
    assert_eq!(rep.passed, 1);
    let rel = rep.get("relations").unwrap();
    assert!(!rel.pass && rel.error.as_deref().unwrap().contains("two families"));
    assert_eq!(rep.exit_code(), bifree_cli::EXIT_FAIL);
    let v: Value = serde_json::to_value(&rep).unwrap();
    assert!(v["checks"][1]["residual"].is_null());
}
