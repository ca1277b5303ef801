//! The Möbius function of the bi-non-crossing lattice.
//!
//! `μ_BNC(π, σ) = μ_NC(s_χ⁻¹·π, s_χ⁻¹·σ)`, and an interval `[π, σ]` of `NC(n)`
//! factors over the blocks of `σ`. On a single block the interval
//! `[π|_V, 1_V]` is isomorphic to `[0, K(π|_V)]`, giving
//! `∏_{W ∈ K(π|_V)} (-1)^{|W|-1} Cat(|W|-1)`.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use crate::bnc::{enumerate_bnc, kreweras, BncPartition};
use crate::error::{Error, Result};

/// Largest shape size accepted by [`mobius_column_sum_check`].
pub const COLUMN_CHECK_BOUND: usize = 8;

fn memo() -> &'static Mutex<HashMap<Vec<usize>, i128>> {
    static MEMO: OnceLock<Mutex<HashMap<Vec<usize>, i128>>> = OnceLock::new();
    MEMO.get_or_init(|| Mutex::new(HashMap::new()))
}

fn catalan_i128(n: usize) -> i128 {
    let mut c: i128 = 1;
    for k in 0..n as i128 {
        c = c.checked_mul(2 * (2 * k + 1)).expect("Catalan overflow") / (k + 2);
    }
    c
}

/// `∏ (-1)^{s-1} Cat(s-1)` over a multiset of sizes.
fn factor_product(mut sizes: Vec<usize>) -> i128 {
    sizes.sort_unstable();
    if let Some(v) = memo().lock().unwrap().get(&sizes) {
        return *v;
    }
    let mut v: i128 = 1;
    for &s in &sizes {
        let f = catalan_i128(s - 1);
        let f = if (s - 1) % 2 == 1 { -f } else { f };
        v = v.checked_mul(f).expect("Möbius value overflow");
    }
    memo().lock().unwrap().insert(sizes, v);
    v
}

/// `μ_BNC(π, σ)`; zero unless `π ≤ σ`.
pub fn mobius(pi: &BncPartition, sigma: &BncPartition) -> Result<i128> {
    if !pi.refines(sigma)? {
        return Ok(0);
    }
    let shape = pi.shape();
    let owners = pi.owners();
    let mut sizes = Vec::new();
    for v in sigma.blocks() {
        // blocks of π inside V, relabelled by position within V in ≺_χ order
        let mut local: Vec<usize> = v.iter().map(|&k| shape.rank(k)).collect();
        local.sort_unstable();
        let idx: HashMap<usize, usize> = local.iter().enumerate().map(|(i, &r)| (r, i)).collect();
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        for &k in v {
            groups.entry(owners[k]).or_default().push(idx[&shape.rank(k)]);
        }
        let blocks: Vec<Vec<usize>> = groups.into_values().collect();
        let k = kreweras(&blocks, v.len())?;
        sizes.extend(k.iter().map(|b| b.len()));
    }
    Ok(factor_product(sizes))
}

/// Checks `Σ_{π≤τ≤σ} μ(τ,σ) = δ(π,σ)` and `Σ_{π≤τ≤σ} μ(π,τ) = δ(π,σ)` for every `π ≤ σ`.
pub fn mobius_column_sum_check(sigma: &BncPartition) -> Result<bool> {
    if sigma.len() > COLUMN_CHECK_BOUND {
        return Err(Error::BoundExceeded { n: sigma.len(), bound: COLUMN_CHECK_BOUND });
    }
    let below: Vec<BncPartition> =
        enumerate_bnc(sigma.shape())?.into_iter().filter(|p| p.refines(sigma).unwrap_or(false)).collect();
    let to_sigma: Vec<i128> = below.iter().map(|t| mobius(t, sigma)).collect::<Result<_>>()?;
    for pi in &below {
        let delta = i128::from(pi == sigma);
        let mut col = 0i128;
        let mut row = 0i128;
        for (t, mu_ts) in below.iter().zip(&to_sigma) {
            if pi.refines(t)? {
                col += mu_ts;
                row += mobius(pi, t)?;
            }
        }
        if col != delta || row != delta {
            return Ok(false);
        }
    }
    Ok(true)
}
