//! Compositional inverses of `Φ = C − 1` and the one-sided `S`-transforms.
//!
//! `Φ_ℓ(b) = b φ_ℓ(b)` with `φ_ℓ = R^ℓ`, so `Φ_ℓ⁻¹(b) = b θ(b)` where `θ`
//! solves `θ φ_ℓ(bθ) = 1`. The fixed point `θ ← φ_ℓ(bθ)⁻¹` contracts for small
//! `b` and starts from `E(X)⁻¹`. On the right everything is mirrored.

use serde::{Deserialize, Serialize};

use super::{SeriesContext, SeriesKind};
use crate::bnc::Side;
use crate::error::{Error, Result};
use crate::matrix::{BMatrix, C64};
use crate::models::OpElement;

pub const ITERATION_CAP: usize = 50;
/// Relative step size at which an iteration is considered converged.
pub const STEP_TOL: f64 = 1e-14;
/// Successive step ratio above which the fixed point is declared stalled.
const STALL_RATIO: f64 = 0.95;
const NEWTON_CAP: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SRoute {
    /// `θ` from the fixed point above.
    Theta,
    /// `b⁻¹ Φ⁻¹(b)` with `Φ⁻¹` from the linearised iteration.
    Literal,
    /// `(1 + b) b⁻¹ Ψ⁻¹(b)` with `Ψ = M − 1`.
    Psi,
}

/// Result of an inversion at a point `v`: `u` with `Φ(u) = v` and the
/// multiplier `θ` with `u = vθ` (left) or `u = θv` (right).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Inverse {
    pub u: BMatrix,
    pub theta: BMatrix,
    pub iterations: usize,
    pub newton: bool,
    pub residual: f64,
}

fn side_mul(side: Side, v: &BMatrix, theta: &BMatrix) -> BMatrix {
    match side {
        Side::Left => v * theta,
        Side::Right => theta * v,
    }
}

fn to_reals(m: &BMatrix) -> Vec<f64> {
    let d = m.d();
    let mut out = Vec::with_capacity(2 * d * d);
    for i in 0..d {
        for j in 0..d {
            let z = m.get(i, j);
            out.push(z.re);
            out.push(z.im);
        }
    }
    out
}

fn from_reals(d: usize, v: &[f64]) -> BMatrix {
    BMatrix::from_fn(d, |i, j| C64::new(v[2 * (i * d + j)], v[2 * (i * d + j) + 1]))
}

impl SeriesContext {
    /// `φ(u)`: the `R`-series of `z` on `side`.
    pub fn small_phi(&self, side: Side, z: &OpElement, u: &BMatrix) -> Result<BMatrix> {
        Ok(self.one_face(SeriesKind::R, side, z, u)?.value)
    }

    /// `Φ(u) = C(u) − 1`.
    pub fn big_phi(&self, side: Side, z: &OpElement, u: &BMatrix) -> Result<BMatrix> {
        Ok(&self.one_face(SeriesKind::C, side, z, u)?.value - &BMatrix::identity(self.d()))
    }

    /// `Ψ(u) = M(u) − 1`.
    pub fn big_psi(&self, side: Side, z: &OpElement, u: &BMatrix) -> Result<BMatrix> {
        Ok(&self.one_face(SeriesKind::M, side, z, u)?.value - &BMatrix::identity(self.d()))
    }

    /// `θ φ(vθ) − 1` on the left, `φ(θv) θ − 1` on the right.
    fn theta_defect(&self, side: Side, z: &OpElement, v: &BMatrix, theta: &BMatrix) -> Result<BMatrix> {
        let phi = self.small_phi(side, z, &side_mul(side, v, theta))?;
        let prod = match side {
            Side::Left => theta * &phi,
            Side::Right => &phi * theta,
        };
        Ok(&prod - &BMatrix::identity(self.d()))
    }

    /// `θ_Z(v)` and the inverse `Φ_Z⁻¹(v)`.
    pub fn invert_phi(&self, side: Side, z: &OpElement, v: &BMatrix) -> Result<Inverse> {
        let mut theta = self.mean_inverse(side, z)?;
        let mut prev_step = f64::INFINITY;
        let mut stalls = 0;
        let mut last_step = f64::INFINITY;
        for it in 1..=ITERATION_CAP {
            let phi = self.small_phi(side, z, &side_mul(side, v, &theta))?;
            let next = phi.inverse()?;
            let step = next.dist(&theta);
            theta = next;
            last_step = step;
            if step <= STEP_TOL * (1.0 + theta.norm_max()) {
                return self.finish(side, z, v, theta, it, false);
            }
            if step > STALL_RATIO * prev_step {
                stalls += 1;
                if stalls >= 2 {
                    break;
                }
            } else {
                stalls = 0;
            }
            prev_step = step;
        }
        // fixed point is not contracting here; polish with Newton from the last iterate
        match self.newton_theta(side, z, v, theta) {
            Ok((theta, its)) => self.finish(side, z, v, theta, ITERATION_CAP + its, true),
            Err(_) => Err(Error::NoConvergence { iterations: ITERATION_CAP, last_step }),
        }
    }

    fn finish(&self, side: Side, z: &OpElement, v: &BMatrix, theta: BMatrix, iterations: usize, newton: bool) -> Result<Inverse> {
        let u = side_mul(side, v, &theta);
        let residual = self.big_phi(side, z, &u)?.dist(v);
        Ok(Inverse { u, theta, iterations, newton, residual })
    }

    /// Newton on the `2d²` real coordinates of `θ` with a forward-difference Jacobian.
    fn newton_theta(&self, side: Side, z: &OpElement, v: &BMatrix, mut theta: BMatrix) -> Result<(BMatrix, usize)> {
        let d = self.d();
        let dim = 2 * d * d;
        for it in 1..=NEWTON_CAP {
            let f0 = to_reals(&self.theta_defect(side, z, v, &theta)?);
            let fnorm = f0.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            if fnorm <= 1e-14 {
                return Ok((theta, it));
            }
            let x0 = to_reals(&theta);
            let h = 1e-7 * (1.0 + theta.norm_max());
            let mut jac = nalgebra::DMatrix::<f64>::zeros(dim, dim);
            for k in 0..dim {
                let mut x = x0.clone();
                x[k] += h;
                let fk = to_reals(&self.theta_defect(side, z, v, &from_reals(d, &x))?);
                for r in 0..dim {
                    jac[(r, k)] = (fk[r] - f0[r]) / h;
                }
            }
            let rhs = nalgebra::DVector::from_iterator(dim, f0.iter().map(|x| -x));
            let delta = jac.lu().solve(&rhs).ok_or(Error::Singular { cond: f64::INFINITY })?;
            let x: Vec<f64> = x0.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
            theta = from_reals(d, &x);
            if delta.amax() <= STEP_TOL * (1.0 + theta.norm_max()) {
                return Ok((theta, it));
            }
        }
        Err(Error::NoConvergence { iterations: NEWTON_CAP, last_step: f64::NAN })
    }

    /// `u ← u + (v − F(u)) F'(0)⁻¹`, with `F'(0)` multiplication by `E(Z)` on the
    /// side opposite to the argument.
    fn invert_linearised(
        &self,
        side: Side,
        z: &OpElement,
        v: &BMatrix,
        f: &dyn Fn(&BMatrix) -> Result<BMatrix>,
    ) -> Result<BMatrix> {
        let inv = self.mean_inverse(side, z)?;
        let apply = |w: &BMatrix| side_mul(side, w, &inv);
        let mut u = apply(v);
        let mut last_step = f64::INFINITY;
        for _ in 0..ITERATION_CAP {
            let step = apply(&(v - &f(&u)?));
            last_step = step.norm_max();
            u += &step;
            if last_step <= STEP_TOL * (1.0 + u.norm_max()) {
                return Ok(u);
            }
        }
        Err(Error::NoConvergence { iterations: ITERATION_CAP, last_step })
    }

    /// `Φ⁻¹(v)` by the linearised iteration instead of `θ`.
    pub fn invert_phi_literal(&self, side: Side, z: &OpElement, v: &BMatrix) -> Result<BMatrix> {
        self.invert_linearised(side, z, v, &|u| self.big_phi(side, z, u))
    }

    /// `Ψ⁻¹(v)` with `Ψ = M − 1`; `Ψ'(0)` is multiplication by `E(Z)` like `Φ'(0)`.
    pub fn invert_psi(&self, side: Side, z: &OpElement, v: &BMatrix) -> Result<BMatrix> {
        self.invert_linearised(side, z, v, &|u| self.big_psi(side, z, u))
    }

    /// The one-sided `S`-transform: `S^ℓ_X(b) = b⁻¹ Φ⁻¹(b)`, `S^r_Y(d) = Φ⁻¹(d) d⁻¹`.
    pub fn s_one_face(&self, side: Side, z: &OpElement, p: &BMatrix, route: SRoute) -> Result<BMatrix> {
        let one = BMatrix::identity(self.d());
        match (route, side) {
            (SRoute::Theta, _) => Ok(self.invert_phi(side, z, p)?.theta),
            (SRoute::Literal, Side::Left) => Ok(&p.inverse()? * &self.invert_phi_literal(side, z, p)?),
            (SRoute::Literal, Side::Right) => Ok(&self.invert_phi_literal(side, z, p)? * &p.inverse()?),
            (SRoute::Psi, Side::Left) => Ok(&(&one + p) * &(&p.inverse()? * &self.invert_psi(side, z, p)?)),
            (SRoute::Psi, Side::Right) => Ok(&(&self.invert_psi(side, z, p)? * &p.inverse()?) * &(&one + p)),
        }
    }
}

/// `S^ℓ_X(b)` with the norm contract enforced.
pub fn s_transform_left(ctx: &SeriesContext, x: &OpElement, b: &BMatrix, route: SRoute) -> Result<BMatrix> {
    ctx.check_point(b)?;
    ctx.s_one_face(Side::Left, x, b, route)
}

pub fn s_transform_right(ctx: &SeriesContext, y: &OpElement, d: &BMatrix, route: SRoute) -> Result<BMatrix> {
    ctx.check_point(d)?;
    ctx.s_one_face(Side::Right, y, d, route)
}
