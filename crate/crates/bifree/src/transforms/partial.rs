//! Two-variable partial `T`- and `S`-transforms.
//!
//! `T(b,c,d) = c + K(b, c, Φ_r⁻¹(d)) d⁻¹` and, with
//! `Υ = K(Φ_ℓ⁻¹(b), c, Φ_r⁻¹(d))`, `S(b,c,d) = c + b⁻¹Υ + Υd⁻¹ + b⁻¹Υd⁻¹`.
//!
//! Since `Φ_ℓ⁻¹(b) = bθ_X` and `Φ_r⁻¹(d) = θ_Y d`, every term of `K` at these
//! arguments starts with `b` and ends with `d`. The default evaluators peel
//! those factors off inside the cumulants (prefix overrides `θ_X`, `θ_Y`), so
//! `b` and `d` are never inverted. The literal evaluators invert them.

use super::{Pair, Peel, SeriesContext};
use crate::bnc::Side;
use crate::error::Result;
use crate::matrix::BMatrix;

impl SeriesContext {
    pub fn t_transform(&self, pair: &Pair, b: &BMatrix, c: &BMatrix, d: &BMatrix) -> Result<BMatrix> {
        let theta = self.invert_phi(Side::Right, &pair.y, d)?.theta;
        let u = &theta * d;
        Ok(c + &self.k_xy(pair, b, c, &u, &Peel::right(theta))?.value)
    }

    pub fn t_transform_literal(&self, pair: &Pair, b: &BMatrix, c: &BMatrix, d: &BMatrix) -> Result<BMatrix> {
        let u = self.invert_phi(Side::Right, &pair.y, d)?.u;
        Ok(c + &(&self.k_xy(pair, b, c, &u, &Peel::none())?.value * &d.inverse()?))
    }

    pub fn s_partial(&self, pair: &Pair, b: &BMatrix, c: &BMatrix, d: &BMatrix) -> Result<BMatrix> {
        let l = self.invert_phi(Side::Left, &pair.x, b)?;
        let r = self.invert_phi(Side::Right, &pair.y, d)?;
        let k = |peel: Peel| self.k_xy(pair, &l.u, c, &r.u, &peel).map(|v| v.value);
        let mut s = c.clone();
        s += &k(Peel::left(l.theta.clone()))?;
        s += &k(Peel::right(r.theta.clone()))?;
        s += &k(Peel::both(l.theta.clone(), r.theta.clone()))?;
        Ok(s)
    }

    pub fn s_partial_literal(&self, pair: &Pair, b: &BMatrix, c: &BMatrix, d: &BMatrix) -> Result<BMatrix> {
        let ul = self.invert_phi(Side::Left, &pair.x, b)?.u;
        let ur = self.invert_phi(Side::Right, &pair.y, d)?.u;
        let upsilon = self.k_xy(pair, &ul, c, &ur, &Peel::none())?.value;
        let (bi, di) = (b.inverse()?, d.inverse()?);
        let left = &bi * &upsilon;
        let right = &upsilon * &di;
        let both = &left * &di;
        Ok(&(&(c + &left) + &right) + &both)
    }
}

/// `T_{X,Y}(b,c,d)` with the norm contract enforced.
pub fn t_transform(ctx: &SeriesContext, pair: &Pair, b: &BMatrix, c: &BMatrix, d: &BMatrix) -> Result<BMatrix> {
    ctx.check_point(b)?;
    ctx.check_point(d)?;
    ctx.t_transform(pair, b, c, d)
}

/// `S_{X,Y}(b,c,d)` with the norm contract enforced.
pub fn s_partial(ctx: &SeriesContext, pair: &Pair, b: &BMatrix, c: &BMatrix, d: &BMatrix) -> Result<BMatrix> {
    ctx.check_point(b)?;
    ctx.check_point(d)?;
    ctx.s_partial(pair, b, c, d)
}
