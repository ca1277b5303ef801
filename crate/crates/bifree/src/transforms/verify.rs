//! Point checks of the transform identities.
//!
//! An identity is a pair of evaluators `(lhs, rhs)` at a point. It is evaluated
//! at every order from `min(3, N-2)` to `N`; the residual is the max-entry gap at
//! order `N` and the tolerance `τ` comes from how much both sides still moved
//! over the last two orders:
//!
//! `δ_k = ‖L_k − L_{k−1}‖ + ‖R_k − R_{k−1}‖`, `q = min(max(δ_N/δ_{N−1}, ρ), 0.9)`,
//! `τ = 10 · max(δ_N, q δ_{N−1}) · q/(1 − q) + 1e-12`.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::pinched::Slot;
use super::{Pair, Peel, SeriesContext, SeriesKind, TwoFaceKind};
use crate::bnc::{SClass, Side, TClass};
use crate::error::{Error, Result};
use crate::matrix::BMatrix;
use crate::models::{shifted_pair, FockModel, GeneratorPool, OpElement};

/// Safety factor on the observed tail.
pub const TAIL_SAFETY: f64 = 10.0;
/// Absolute floor of `τ`, above accumulated rounding.
pub const TAIL_FLOOR: f64 = 1e-12;
/// Residuals below this are rounding noise.
pub const ROUNDING_FLOOR: f64 = 1e-14;
/// Fixed tolerance of the `θ φ(bθ) = 1` fixed-point residual.
pub const THETA_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderResidual {
    pub order: usize,
    pub residual: f64,
}

/// One identity at one point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCheck {
    pub name: String,
    pub inputs: BTreeMap<String, BMatrix>,
    pub lhs: BMatrix,
    pub rhs: BMatrix,
    pub residual: f64,
    pub tail_tol: f64,
    pub pass: bool,
    pub by_order: Vec<OrderResidual>,
}

impl PointCheck {
    /// Residuals never grow with the order over `orders`. Residuals at rounding
    /// level (below [`ROUNDING_FLOOR`]) count as zero: they have no order.
    pub fn non_increasing(&self, orders: &[usize]) -> bool {
        let r: Vec<f64> = orders
            .iter()
            .filter_map(|o| self.by_order.iter().find(|x| x.order == *o).map(|x| x.residual))
            .map(|x| if x <= ROUNDING_FLOOR { 0.0 } else { x })
            .collect();
        r.len() == orders.len() && r.windows(2).all(|w| w[1] <= w[0])
    }
}

/// `(b, c, d)`: `b, d` within `ρ` and invertible, `c` of unit operator norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub b: BMatrix,
    pub c: BMatrix,
    pub d: BMatrix,
}

impl Point {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, dim: usize, rho: f64) -> Self {
        let b = BMatrix::sample_point(rng, dim, rho);
        let d = BMatrix::sample_point(rng, dim, rho);
        let c = BMatrix::random(rng, dim, 1.0);
        let c = c.scale_re(1.0 / c.norm_op());
        Point { b, c, d }
    }

    pub fn inputs(&self) -> BTreeMap<String, BMatrix> {
        [("b", &self.b), ("c", &self.c), ("d", &self.d)].into_iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }
}

/// Two pairs `(X_1, Y_1)`, `(X_2, Y_2)`, bi-free over `B` when built on disjoint generators.
#[derive(Clone, Debug)]
pub struct Pairs {
    pub first: Pair,
    pub second: Pair,
    sum: Pair,
    sum_product: Pair,
    product: Pair,
}

impl Pairs {
    pub fn new(first: Pair, second: Pair) -> Self {
        let sum = first.sum(&second);
        let sum_product = first.sum_product(&second);
        let product = first.product(&second);
        Pairs { first, second, sum, sum_product, product }
    }

    /// `(X_1 + X_2, Y_1 + Y_2)`.
    pub fn sum(&self) -> &Pair {
        &self.sum
    }

    /// `(X_1 + X_2, Y_1 Y_2)`.
    pub fn sum_product(&self) -> &Pair {
        &self.sum_product
    }

    /// `(X_1 X_2, Y_1 Y_2)`.
    pub fn product(&self) -> &Pair {
        &self.product
    }
}

/// Two shifted semicircular pairs on disjoint generators with a Fock model deep enough
/// for products of order `2N`.
pub fn shifted_pairs<R: Rng + ?Sized>(d: usize, alpha: f64, depth: usize, rng: &mut R) -> Result<(FockModel, Pairs)> {
    let mut pool = GeneratorPool::new();
    let p1 = shifted_pair(d, alpha, &mut pool, rng)?;
    let p2 = shifted_pair(d, alpha, &mut pool, rng)?;
    Ok((FockModel::new(d, depth)?, Pairs::new(Pair::from(&p1), Pair::from(&p2))))
}

/// `τ` from `(lhs, rhs)` at consecutive orders ending at `N`.
pub fn tail_tolerance(values: &[(BMatrix, BMatrix)], rho: f64) -> f64 {
    let delta = |k: usize| values[k].0.dist(&values[k - 1].0) + values[k].1.dist(&values[k - 1].1);
    let n = values.len();
    if n < 3 {
        return TAIL_FLOOR;
    }
    let (dn, dp) = (delta(n - 1), delta(n - 2));
    let mut q = rho;
    if dp > 0.0 && dn / dp > q {
        q = dn / dp;
    }
    let q = q.min(0.9);
    TAIL_SAFETY * dn.max(q * dp) * q / (1.0 - q) + TAIL_FLOOR
}

/// Lowest order in a sweep ending at `n`.
fn sweep_start(n: usize) -> usize {
    n.saturating_sub(2).clamp(1, 3)
}

type Sides = (BMatrix, BMatrix);

/// Evaluate one identity across the order sweep.
pub fn identity(
    name: &str,
    ctx: &SeriesContext,
    inputs: BTreeMap<String, BMatrix>,
    f: &dyn Fn(&SeriesContext) -> Result<Sides>,
) -> Result<PointCheck> {
    let mut values = Vec::new();
    let mut by_order = Vec::new();
    for k in sweep_start(ctx.order)..=ctx.order {
        let (l, r) = f(&ctx.with_order(k))?;
        by_order.push(OrderResidual { order: k, residual: l.dist(&r) });
        values.push((l, r));
    }
    let tail_tol = tail_tolerance(&values, ctx.rho);
    let (lhs, rhs) = values.pop().expect("non-empty sweep");
    let residual = lhs.dist(&rhs);
    Ok(PointCheck { name: name.to_string(), inputs, lhs, rhs, residual, tail_tol, pass: residual <= tail_tol, by_order })
}

/// An identity with a fixed tolerance, evaluated at order `N` only.
pub fn fixed(name: &str, ctx: &SeriesContext, inputs: BTreeMap<String, BMatrix>, tol: f64, f: &dyn Fn(&SeriesContext) -> Result<Sides>) -> Result<PointCheck> {
    let (lhs, rhs) = f(ctx)?;
    let residual = lhs.dist(&rhs);
    let by_order = vec![OrderResidual { order: ctx.order, residual }];
    Ok(PointCheck { name: name.to_string(), inputs, lhs, rhs, residual, tail_tol: tol, pass: residual <= tol, by_order })
}

fn one(ctx: &SeriesContext) -> BMatrix {
    BMatrix::identity(ctx.d())
}

fn lv(ctx: &SeriesContext, kind: SeriesKind, x: &OpElement, b: &BMatrix) -> Result<BMatrix> {
    Ok(ctx.left(kind, x, b)?.value)
}

fn rv(ctx: &SeriesContext, kind: SeriesKind, y: &OpElement, d: &BMatrix) -> Result<BMatrix> {
    Ok(ctx.right(kind, y, d)?.value)
}

fn tv(ctx: &SeriesContext, kind: TwoFaceKind, p: &Pair, b: &BMatrix, c: &BMatrix, d: &BMatrix) -> Result<BMatrix> {
    Ok(ctx.two_face(kind, p, b, c, d)?.value)
}

fn kv(ctx: &SeriesContext, p: &Pair, b: &BMatrix, c: &BMatrix, d: &BMatrix, peel: Peel) -> Result<BMatrix> {
    Ok(ctx.k_xy(p, b, c, d, &peel)?.value)
}

fn psi(ctx: &SeriesContext, side: Side, z1: Slot, z2: Slot) -> Result<BMatrix> {
    Ok(ctx.psi(side, &z1, &z2)?.value)
}

fn phi_inv(ctx: &SeriesContext, side: Side, z: &OpElement, v: &BMatrix) -> Result<BMatrix> {
    Ok(ctx.invert_phi(side, z, v)?.u)
}

fn s1(ctx: &SeriesContext, side: Side, z: &OpElement, p: &BMatrix) -> Result<BMatrix> {
    Ok(ctx.invert_phi(side, z, p)?.theta)
}

/// Names accepted by [`run_check`], in suite order.
pub const CHECK_NAMES: [&str; 11] = [
    "relations",
    "r-transform",
    "degenerations",
    "inversion",
    "s-routes",
    "s-lemmata",
    "free-s",
    "t-property",
    "t-cases",
    "s-property",
    "s-cases",
];

pub fn run_check(name: &str, ctx: &SeriesContext, pairs: &Pairs, pt: &Point) -> Result<Vec<PointCheck>> {
    match name {
        "relations" => check_relations(ctx, &pairs.first, pt),
        "r-transform" => check_r_transform(ctx, pairs, pt),
        "degenerations" => check_degenerations(ctx, &pairs.first, pt),
        "inversion" => check_inversion(ctx, &pairs.first, pt),
        "s-routes" => check_s_routes(ctx, &pairs.first, pt),
        "s-lemmata" => check_s_lemmata(ctx, pairs, pt),
        "free-s" => check_free_s(ctx, pairs, pt),
        "t-property" => check_t_property(ctx, pairs, pt),
        "t-cases" => check_t_cases(ctx, pairs, pt),
        "s-property" => check_s_property(ctx, pairs, pt),
        "s-cases" => check_s_cases(ctx, pairs, pt),
        _ => Err(Error::UnknownCheck { name: name.to_string(), valid: CHECK_NAMES.join(", ") }),
    }
}

/// `G = Mb`, `C = 1 + bR`, `M = C(Mb)` and the mirrored right relations.
pub fn check_relations(ctx: &SeriesContext, p: &Pair, pt: &Point) -> Result<Vec<PointCheck>> {
    let (x, y, b, d) = (&p.x, &p.y, &pt.b, &pt.d);
    let inputs = || {
        let mut m = pt.inputs();
        m.remove("c");
        m
    };
    Ok(vec![
        identity("left G = M b", ctx, inputs(), &|c| Ok((lv(c, SeriesKind::G, x, b)?, lv(c, SeriesKind::M, x, b)? * b)))?,
        identity("left C = 1 + b R", ctx, inputs(), &|c| {
            Ok((lv(c, SeriesKind::C, x, b)?, one(c) + b * lv(c, SeriesKind::R, x, b)?))
        })?,
        identity("left M = C(M b)", ctx, inputs(), &|c| {
            let m = lv(c, SeriesKind::M, x, b)?;
            let arg = &m * b;
            Ok((m, lv(c, SeriesKind::C, x, &arg)?))
        })?,
        identity("right G = d M", ctx, inputs(), &|c| Ok((rv(c, SeriesKind::G, y, d)?, d * rv(c, SeriesKind::M, y, d)?)))?,
        identity("right C = 1 + R d", ctx, inputs(), &|c| {
            Ok((rv(c, SeriesKind::C, y, d)?, one(c) + rv(c, SeriesKind::R, y, d)? * d))
        })?,
        identity("right M = C(d M)", ctx, inputs(), &|c| {
            let m = rv(c, SeriesKind::M, y, d)?;
            let arg = d * &m;
            Ok((m, rv(c, SeriesKind::C, y, &arg)?))
        })?,
    ])
}

/// `M^ℓ M_{XY} + M_{XY} M^r = M^ℓ c M^r + C_{XY}(M^ℓ b, M_{XY}, d M^r)`.
fn r_transform_sides(ctx: &SeriesContext, p: &Pair, b: &BMatrix, c: &BMatrix, d: &BMatrix) -> Result<Sides> {
    let ml = lv(ctx, SeriesKind::M, &p.x, b)?;
    let mr = rv(ctx, SeriesKind::M, &p.y, d)?;
    let mxy = tv(ctx, TwoFaceKind::M, p, b, c, d)?;
    let lhs = &ml * &mxy + &mxy * &mr;
    let rhs = &(&ml * c) * &mr + tv(ctx, TwoFaceKind::C, p, &(&ml * b), &mxy, &(d * &mr))?;
    Ok((lhs, rhs))
}

/// The two-face identity, the `L_c`/`R_c` terminal agreement, additivity of `C − c`,
/// and its `d = 0` reduction to `M^ℓ = C^ℓ(M^ℓ b)`.
pub fn check_r_transform(ctx: &SeriesContext, pairs: &Pairs, pt: &Point) -> Result<Vec<PointCheck>> {
    let p = &pairs.first;
    let (b, c, d) = (&pt.b, &pt.c, &pt.d);
    let zero = BMatrix::zeros(ctx.d());
    let at_d0 = || {
        let mut m = pt.inputs();
        m.insert("d".into(), zero.clone());
        m
    };
    Ok(vec![
        identity("r-transform", ctx, pt.inputs(), &|k| r_transform_sides(k, p, b, c, d))?,
        identity("r-transform terminal L_c = R_c", ctx, pt.inputs(), &|k| {
            Ok((k.m_xy_with(p, b, c, d, Side::Right)?.value, k.m_xy_with(p, b, c, d, Side::Left)?.value))
        })?,
        identity("r-transform additivity", ctx, pt.inputs(), &|k| {
            let sum = tv(k, TwoFaceKind::C, pairs.sum(), b, c, d)? - c;
            let first = tv(k, TwoFaceKind::C, &pairs.first, b, c, d)? - c;
            let second = tv(k, TwoFaceKind::C, &pairs.second, b, c, d)? - c;
            Ok((sum, first + second))
        })?,
        identity("r-transform at d = 0", ctx, at_d0(), &|k| r_transform_sides(k, p, b, c, &zero))?,
        identity("r-transform at d = 0 gives M = C(M b)", ctx, at_d0(), &|k| {
            let ml = lv(k, SeriesKind::M, &p.x, b)?;
            let arg = &ml * b;
            Ok((ml, tv(k, TwoFaceKind::C, p, &arg, &one(k), &zero)?))
        })?,
    ])
}

/// Two-face series at `d = 0` and `b = 0` against the one-face series.
pub fn check_degenerations(ctx: &SeriesContext, p: &Pair, pt: &Point) -> Result<Vec<PointCheck>> {
    let (b, c, d) = (&pt.b, &pt.c, &pt.d);
    let zero = BMatrix::zeros(ctx.d());
    let with = |key: &str| {
        let mut m = pt.inputs();
        m.insert(key.into(), zero.clone());
        m
    };
    Ok(vec![
        identity("M(b, c, 0) = M^l(b) c", ctx, with("d"), &|k| {
            Ok((tv(k, TwoFaceKind::M, p, b, c, &zero)?, lv(k, SeriesKind::M, &p.x, b)? * c))
        })?,
        identity("M(0, c, d) = c M^r(d)", ctx, with("b"), &|k| {
            Ok((tv(k, TwoFaceKind::M, p, &zero, c, d)?, c * rv(k, SeriesKind::M, &p.y, d)?))
        })?,
        identity("C(b, c, 0) = C^l(b) c", ctx, with("d"), &|k| {
            Ok((tv(k, TwoFaceKind::C, p, b, c, &zero)?, lv(k, SeriesKind::C, &p.x, b)? * c))
        })?,
        identity("C(0, c, d) = c C^r(d)", ctx, with("b"), &|k| {
            Ok((tv(k, TwoFaceKind::C, p, &zero, c, d)?, c * rv(k, SeriesKind::C, &p.y, d)?))
        })?,
    ])
}

/// Round trips `Φ(Φ⁻¹(v)) = v`, `Φ⁻¹(Φ(u)) = u` and the `θ` fixed-point residual.
pub fn check_inversion(ctx: &SeriesContext, p: &Pair, pt: &Point) -> Result<Vec<PointCheck>> {
    let mut out = Vec::new();
    for (side, z, v, tag) in [(Side::Left, &p.x, &pt.b, "left"), (Side::Right, &p.y, &pt.d, "right")] {
        let mut inputs = BTreeMap::new();
        inputs.insert(if side == Side::Left { "b" } else { "d" }.to_string(), v.clone());
        out.push(identity(&format!("{tag} Phi(Phi^-1(v)) = v"), ctx, inputs.clone(), &|k| {
            Ok((k.big_phi(side, z, &phi_inv(k, side, z, v)?)?, v.clone()))
        })?);
        out.push(identity(&format!("{tag} Phi^-1(Phi(u)) = u"), ctx, inputs.clone(), &|k| {
            Ok((phi_inv(k, side, z, &k.big_phi(side, z, v)?)?, v.clone()))
        })?);
        out.push(fixed(&format!("{tag} theta fixed point"), ctx, inputs, THETA_TOL, &|k| {
            let th = s1(k, side, z, v)?;
            let prod = match side {
                Side::Left => &th * &k.small_phi(side, z, &(v * &th))?,
                Side::Right => &k.small_phi(side, z, &(&th * v))? * &th,
            };
            Ok((prod, one(k)))
        })?);
    }
    Ok(out)
}

/// `θ` route against the literal `b⁻¹Φ⁻¹(b)` and the `Ψ` route, on both sides.
pub fn check_s_routes(ctx: &SeriesContext, p: &Pair, pt: &Point) -> Result<Vec<PointCheck>> {
    use super::SRoute;
    let mut out = Vec::new();
    for (side, z, v, tag) in [(Side::Left, &p.x, &pt.b, "left"), (Side::Right, &p.y, &pt.d, "right")] {
        let mut inputs = BTreeMap::new();
        inputs.insert(if side == Side::Left { "b" } else { "d" }.to_string(), v.clone());
        for (route, rname) in [(SRoute::Literal, "Phi"), (SRoute::Psi, "Psi")] {
            out.push(identity(&format!("{tag} S theta route = {rname} route"), ctx, inputs.clone(), &|k| {
                Ok((k.s_one_face(side, z, v, SRoute::Theta)?, k.s_one_face(side, z, v, route)?))
            })?);
        }
    }
    Ok(out)
}

/// The pinched-series lemmata behind the free `S` theorem, left and right.
pub fn check_s_lemmata(ctx: &SeriesContext, pairs: &Pairs, pt: &Point) -> Result<Vec<PointCheck>> {
    let (x1, x2, x12) = (&pairs.first.x, &pairs.second.x, &pairs.product().x);
    let (y1, y2, y12) = (&pairs.first.y, &pairs.second.y, &pairs.product().y);
    let (b, d) = (&pt.b, &pt.d);
    let (l, r) = (Side::Left, Side::Right);
    let left_in = || BTreeMap::from([("b".to_string(), b.clone())]);
    let right_in = || BTreeMap::from([("d".to_string(), d.clone())]);
    let mut out = Vec::new();

    // ψ_ℓ(L_bX1, X2) and ψ_ℓ(X2, L_bX1)
    let pl = |k: &SeriesContext| psi(k, l, Slot::pre(x1, b), Slot::plain(x2));
    let pl2 = |k: &SeriesContext| psi(k, l, Slot::plain(x2), Slot::pre(x1, b));
    // ψ_r(R_dY1, Y2) and ψ_r(Y2, R_dY1)
    let pr = |k: &SeriesContext| psi(k, r, Slot::pre(y1, d), Slot::plain(y2));
    let pr2 = |k: &SeriesContext| psi(k, r, Slot::plain(y2), Slot::pre(y1, d));

    out.push(identity("left S-lem-1", ctx, left_in(), &|k| Ok((k.big_phi(l, x12, b)?, pl(k)? * pl2(k)?)))?);
    out.push(identity("left S-lem-2", ctx, left_in(), &|k| Ok((k.big_phi(l, x12, b)?, k.big_phi(l, x2, &pl(k)?)?)))?);
    out.push(identity("left S-lem-3", ctx, left_in(), &|k| {
        let arg = psi(k, l, Slot::suf(x2, b), Slot::plain(x1))?;
        Ok((pl2(k)? * pl(k)?, k.big_phi(l, x1, &arg)?))
    })?);
    out.push(identity("left move-around", ctx, left_in(), &|k| {
        Ok((psi(k, l, Slot::suf(x2, b), Slot::plain(x1))?, pl2(k)? * b))
    })?);
    out.push(identity("left pinched-to-inverse", ctx, left_in(), &|k| {
        Ok((pl(k)?, phi_inv(k, l, x2, &k.big_phi(l, x12, b)?)?))
    })?);
    out.push(identity("left inverse-times-pinched", ctx, left_in(), &|k| {
        let full = k.big_phi(l, x12, b)?;
        Ok((phi_inv(k, l, x2, &full)? * pl2(k)?, full))
    })?);
    out.push(identity("left S-lem-4", ctx, left_in(), &|k| {
        let u = phi_inv(k, l, x12, b)?;
        Ok((psi(k, l, Slot::plain(x2), Slot::pre(x1, &u))?, s1(k, l, x2, b)?.inverse()?))
    })?);
    out.push(identity("left free-S-lem-for-T", ctx, left_in(), &|k| {
        let u = phi_inv(k, l, x12, b)?;
        let s2 = s1(k, l, x2, b)?;
        let arg = &(&s2.inverse()? * b) * &s2;
        Ok((psi(k, l, Slot::suf(x2, &u), Slot::plain(x1))?, phi_inv(k, l, x1, &arg)?))
    })?);

    out.push(identity("right S-lem-1", ctx, right_in(), &|k| Ok((k.big_phi(r, y12, d)?, pr2(k)? * pr(k)?)))?);
    out.push(identity("right S-lem-2", ctx, right_in(), &|k| Ok((k.big_phi(r, y12, d)?, k.big_phi(r, y2, &pr(k)?)?)))?);
    out.push(identity("right S-lem-3", ctx, right_in(), &|k| {
        let arg = psi(k, r, Slot::suf(y2, d), Slot::plain(y1))?;
        Ok((pr(k)? * pr2(k)?, k.big_phi(r, y1, &arg)?))
    })?);
    out.push(identity("right move-around", ctx, right_in(), &|k| {
        Ok((psi(k, r, Slot::suf(y2, d), Slot::plain(y1))?, d * pr2(k)?))
    })?);
    out.push(identity("right pinched-to-inverse", ctx, right_in(), &|k| {
        Ok((pr(k)?, phi_inv(k, r, y2, &k.big_phi(r, y12, d)?)?))
    })?);
    out.push(identity("right inverse-times-pinched", ctx, right_in(), &|k| {
        let full = k.big_phi(r, y12, d)?;
        Ok((pr2(k)? * phi_inv(k, r, y2, &full)?, full))
    })?);
    out.push(identity("right S-lem-4", ctx, right_in(), &|k| {
        let u = phi_inv(k, r, y12, d)?;
        Ok((psi(k, r, Slot::plain(y2), Slot::pre(y1, &u))?, s1(k, r, y2, d)?.inverse()?))
    })?);
    out.push(identity("right free-S-lem-for-T", ctx, right_in(), &|k| {
        let u = phi_inv(k, r, y12, d)?;
        let s2 = s1(k, r, y2, d)?;
        let arg = &(&s2 * d) * &s2.inverse()?;
        Ok((psi(k, r, Slot::suf(y2, &u), Slot::plain(y1))?, phi_inv(k, r, y1, &arg)?))
    })?);
    Ok(out)
}

/// `S^ℓ_{X1X2}(b) = S2 S^ℓ_{X1}(S2⁻¹ b S2)` and `S^r_{Y1Y2}(d) = S^r_{Y1}(S2 d S2⁻¹) S2`.
pub fn check_free_s(ctx: &SeriesContext, pairs: &Pairs, pt: &Point) -> Result<Vec<PointCheck>> {
    let (x1, x2, x12) = (&pairs.first.x, &pairs.second.x, &pairs.product().x);
    let (y1, y2, y12) = (&pairs.first.y, &pairs.second.y, &pairs.product().y);
    let (b, d) = (&pt.b, &pt.d);
    Ok(vec![
        identity("left free-S", ctx, BTreeMap::from([("b".to_string(), b.clone())]), &|k| {
            let s2 = s1(k, Side::Left, x2, b)?;
            let arg = &(&s2.inverse()? * b) * &s2;
            Ok((s1(k, Side::Left, x12, b)?, &s2 * &s1(k, Side::Left, x1, &arg)?))
        })?,
        identity("right free-S", ctx, BTreeMap::from([("d".to_string(), d.clone())]), &|k| {
            let s2 = s1(k, Side::Right, y2, d)?;
            let arg = &(&s2 * d) * &s2.inverse()?;
            Ok((s1(k, Side::Right, y12, d)?, &s1(k, Side::Right, y1, &arg)? * &s2))
        })?,
    ])
}

/// `T_{X1+X2,Y1Y2}(b,c,d) = T_{X1,Y1}(b, T_{X2,Y2}(b,c,d) S2⁻¹, S2 d S2⁻¹) S2` with
/// `S2 = S^r_{Y2}(d)`, plus the peeled/literal agreement of `T`.
pub fn check_t_property(ctx: &SeriesContext, pairs: &Pairs, pt: &Point) -> Result<Vec<PointCheck>> {
    let (b, c, d) = (&pt.b, &pt.c, &pt.d);
    let (p1, p2, p12) = (&pairs.first, &pairs.second, pairs.sum_product());
    Ok(vec![
        identity("t-property", ctx, pt.inputs(), &|k| {
            let s2 = s1(k, Side::Right, &p2.y, d)?;
            let s2i = s2.inverse()?;
            let inner = &k.t_transform(p2, b, c, d)? * &s2i;
            let dd = &(&s2 * d) * &s2i;
            Ok((k.t_transform(p12, b, c, d)?, &k.t_transform(p1, b, &inner, &dd)? * &s2))
        })?,
        identity("t peeled = literal", ctx, pt.inputs(), &|k| {
            Ok((k.t_transform(p12, b, c, d)?, k.t_transform_literal(p12, b, c, d)?))
        })?,
    ])
}

/// The `BNC_T` class sums against their closed forms, and `K = Ψ_e + Ψ_o`.
pub fn check_t_cases(ctx: &SeriesContext, pairs: &Pairs, pt: &Point) -> Result<Vec<PointCheck>> {
    let (b, c, d) = (&pt.b, &pt.c, &pt.d);
    let (p1, p2, p12) = (&pairs.first, &pairs.second, pairs.sum_product());
    let (x, y1, y2) = (&p12.x, &p1.y, &p2.y);
    let class = |k: &SeriesContext, cl: TClass| Ok::<_, Error>(k.t_class_sum(cl, x, y1, y2, b, c, d)?.value);
    // ψ_r(R_dY1, Y2) and ψ_r(Y2, R_dY1)
    let pr = |k: &SeriesContext| psi(k, Side::Right, Slot::pre(y1, d), Slot::plain(y2));
    let pr2 = |k: &SeriesContext| psi(k, Side::Right, Slot::plain(y2), Slot::pre(y1, d));
    let id = one(ctx);
    Ok(vec![
        identity("T-case-1", ctx, pt.inputs(), &|k| Ok((class(k, TClass::E)?, kv(k, p2, b, c, &pr(k)?, Peel::none())?)))?,
        identity("T-case-2", ctx, pt.inputs(), &|k| {
            Ok((class(k, TClass::OPrime)?, kv(k, p2, b, c, &pr(k)?, Peel::right(id.clone()))?))
        })?,
        identity("T-case-3", ctx, pt.inputs(), &|k| {
            let q = pr2(k)?;
            let cc = class(k, TClass::OPrime)? + c * &q;
            Ok((class(k, TClass::O)?, kv(k, p1, b, &cc, &(d * &q), Peel::right(d.clone()))?))
        })?,
        identity("T-case split K = Psi_e + Psi_o", ctx, pt.inputs(), &|k| {
            Ok((kv(k, p12, b, c, d, Peel::none())?, class(k, TClass::E)? + class(k, TClass::O)?))
        })?,
    ])
}

/// `S_{X1X2,Y1Y2}(b,c,d) = S2ℓ S_{X1,Y1}(S2ℓ⁻¹ b S2ℓ, S2ℓ⁻¹ S_{X2,Y2}(b,c,d) S2r⁻¹, S2r d S2r⁻¹) S2r`,
/// plus the peeled/literal agreement of `S`.
pub fn check_s_property(ctx: &SeriesContext, pairs: &Pairs, pt: &Point) -> Result<Vec<PointCheck>> {
    let (b, c, d) = (&pt.b, &pt.c, &pt.d);
    let (p1, p2, p12) = (&pairs.first, &pairs.second, pairs.product());
    Ok(vec![
        identity("s-property", ctx, pt.inputs(), &|k| {
            let sl = s1(k, Side::Left, &p2.x, b)?;
            let sr = s1(k, Side::Right, &p2.y, d)?;
            let (sli, sri) = (sl.inverse()?, sr.inverse()?);
            let bb = &(&sli * b) * &sl;
            let cc = &(&sli * &k.s_partial(p2, b, c, d)?) * &sri;
            let dd = &(&sr * d) * &sri;
            Ok((k.s_partial(p12, b, c, d)?, &(&sl * &k.s_partial(p1, &bb, &cc, &dd)?) * &sr))
        })?,
        identity("s peeled = literal", ctx, pt.inputs(), &|k| {
            Ok((k.s_partial(p12, b, c, d)?, k.s_partial_literal(p12, b, c, d)?))
        })?,
    ])
}

/// The `BNC_S` class sums against their closed forms, and `K = Ψ_e + Ψ_o`.
pub fn check_s_cases(ctx: &SeriesContext, pairs: &Pairs, pt: &Point) -> Result<Vec<PointCheck>> {
    let (b, c, d) = (&pt.b, &pt.c, &pt.d);
    let (p1, p2, p12) = (&pairs.first, &pairs.second, pairs.product());
    let (x1, x2, y1, y2) = (&p1.x, &p2.x, &p1.y, &p2.y);
    let class = |k: &SeriesContext, cl: SClass| Ok::<_, Error>(k.s_class_sum(cl, p1, p2, b, c, d)?.value);
    let pl = |k: &SeriesContext| psi(k, Side::Left, Slot::pre(x1, b), Slot::plain(x2));
    let pl2 = |k: &SeriesContext| psi(k, Side::Left, Slot::plain(x2), Slot::pre(x1, b));
    let pr = |k: &SeriesContext| psi(k, Side::Right, Slot::pre(y1, d), Slot::plain(y2));
    let pr2 = |k: &SeriesContext| psi(k, Side::Right, Slot::plain(y2), Slot::pre(y1, d));
    let id = one(ctx);
    let k2 = |k: &SeriesContext, peel: Peel| kv(k, p2, &pl(k)?, c, &pr(k)?, peel);
    let o_prime = |k: &SeriesContext| -> Result<BMatrix> {
        let mut s = class(k, SClass::O0)?;
        for cl in [SClass::OR, SClass::OL, SClass::OLR] {
            s += &class(k, cl)?;
        }
        Ok(s)
    };
    Ok(vec![
        identity("S-case-1", ctx, pt.inputs(), &|k| Ok((class(k, SClass::E)?, k2(k, Peel::none())?)))?,
        identity("S-case-2", ctx, pt.inputs(), &|k| {
            let rl = lv(k, SeriesKind::R, x2, &pl(k)?)?;
            let rr = rv(k, SeriesKind::R, y2, &pr(k)?)?;
            Ok((class(k, SClass::O0)?, &(&rl * c) * &rr))
        })?,
        identity("S-case-3", ctx, pt.inputs(), &|k| Ok((class(k, SClass::OR)?, pl2(k)? * k2(k, Peel::right(id.clone()))?)))?,
        identity("S-case-4", ctx, pt.inputs(), &|k| Ok((class(k, SClass::OL)?, k2(k, Peel::left(id.clone()))? * pr2(k)?)))?,
        identity("S-case-5", ctx, pt.inputs(), &|k| Ok((class(k, SClass::OLR)?, k2(k, Peel::both(id.clone(), id.clone()))?)))?,
        identity("S-case-6", ctx, pt.inputs(), &|k| {
            let lb = pl2(k)? * b;
            let rd = d * pr2(k)?;
            Ok((class(k, SClass::O)?, kv(k, p1, &lb, &o_prime(k)?, &rd, Peel::both(b.clone(), d.clone()))?))
        })?,
        identity("S-case split K = Psi_e + Psi_o", ctx, pt.inputs(), &|k| {
            Ok((kv(k, p12, b, c, d, Peel::none())?, class(k, SClass::E)? + class(k, SClass::O)?))
        })?,
    ])
}
