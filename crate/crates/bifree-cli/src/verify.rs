//! Seeded point verification of the transform identities.

use bifree::descriptor::ModelSpec;
use bifree::transforms::verify::{run_check, PointCheck, Point, CHECK_NAMES};
use bifree::transforms::SeriesContext;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::Sweep;
use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub point: usize,
    #[serde(flatten)]
    pub check: PointCheck,
}

/// Everything needed to replay the run, then one entry per identity and point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub check: String,
    pub model: ModelSpec,
    pub order: usize,
    pub rho: f64,
    pub points: usize,
    pub seed: u64,
    pub results: Vec<PointResult>,
    pub pass: bool,
}

pub fn check_name(name: &str) -> Result<&'static str, CliError> {
    CHECK_NAMES
        .iter()
        .copied()
        .find(|n| *n == name)
        .ok_or_else(|| CliError::UnknownCheck { name: name.to_string(), valid: CHECK_NAMES.join(", ") })
}

/// Points are drawn in sequence from one generator seeded with `seed`.
pub fn run_verify(name: &str, model: &ModelSpec, sweep: Sweep, seed: u64) -> Result<VerifyReport, CliError> {
    let check = check_name(name)?;
    let built = model.build()?;
    let pairs = built.pairs()?;
    let d = built.d();
    let ctx = SeriesContext::new(built.model, sweep.order, sweep.rho);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut results = Vec::new();
    for k in 0..sweep.points {
        let pt = Point::sample(&mut rng, d, sweep.rho);
        for c in run_check(check, &ctx, &pairs, &pt)? {
            results.push(PointResult { point: k, check: c });
        }
    }
    let pass = results.iter().all(|r| r.check.pass);
    Ok(VerifyReport {
        check: check.to_string(),
        model: model.clone(),
        order: sweep.order,
        rho: sweep.rho,
        points: sweep.points,
        seed,
        results,
        pass,
    })
}
