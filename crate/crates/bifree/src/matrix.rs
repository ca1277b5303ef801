//! Dense complex matrices: the coefficient algebra `B = M_d(ℂ)`, its diagonal
//! subalgebra `D`, and dense base-algebra operators.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default max-entry tolerance for matrix equality.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Inverses are refused when the 1-norm condition estimate exceeds this.
pub const COND_CAP: f64 = 1e12;

#[derive(Clone, Debug, PartialEq)]
pub struct BMatrix(DMatrix<C64>);

impl BMatrix {
    pub fn zeros(d: usize) -> Self {
        BMatrix(DMatrix::zeros(d, d))
    }

    pub fn identity(d: usize) -> Self {
        BMatrix(DMatrix::identity(d, d))
    }

    pub fn scalar(d: usize, z: C64) -> Self {
        BMatrix(DMatrix::identity(d, d) * z)
    }

    /// Matrix unit `E_{i,j}` (0-based).
    pub fn unit(d: usize, i: usize, j: usize) -> Self {
        let mut m = DMatrix::zeros(d, d);
        m[(i, j)] = C64::new(1.0, 0.0);
        BMatrix(m)
    }

    pub fn from_fn(d: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        BMatrix(DMatrix::from_fn(d, d, f))
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let d = diag.len();
        BMatrix::from_fn(d, |i, j| if i == j { diag[i] } else { C64::new(0.0, 0.0) })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Dimension(format!("expected {d}x{d} rows")));
        }
        Ok(BMatrix::from_fn(d, |i, j| rows[i][j]))
    }

    pub fn from_inner(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension(format!("{}x{} is not square", m.nrows(), m.ncols())));
        }
        Ok(BMatrix(m))
    }

    pub fn inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn d(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, z: C64) {
        self.0[(i, j)] = z;
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        (0..self.d()).map(|i| (0..self.d()).map(|j| self.get(i, j)).collect()).collect()
    }

    pub fn scale(&self, z: C64) -> Self {
        BMatrix(&self.0 * z)
    }

    pub fn scale_re(&self, x: f64) -> Self {
        self.scale(C64::new(x, 0.0))
    }

    pub fn adjoint(&self) -> Self {
        BMatrix(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// Largest entry modulus.
    pub fn norm_max(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Induced 1-norm (max column sum).
    pub fn norm_one(&self) -> f64 {
        (0..self.d()).map(|j| (0..self.d()).map(|i| self.get(i, j).norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// Operator norm (largest singular value).
    pub fn norm_op(&self) -> f64 {
        if self.d() == 0 {
            return 0.0;
        }
        self.0.clone().singular_values().iter().cloned().fold(0.0, f64::max)
    }

    pub fn dist(&self, other: &Self) -> f64 {
        (self - other).norm_max()
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.d() == other.d() && self.dist(other) <= tol
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Inverse by partial-pivot LU, refused above [`COND_CAP`].
    pub fn inverse(&self) -> Result<Self> {
        self.inverse_capped(COND_CAP)
    }

    pub fn inverse_capped(&self, cap: f64) -> Result<Self> {
        let inv = self.0.clone().lu().try_inverse().ok_or(Error::Singular { cond: f64::INFINITY })?;
        let inv = BMatrix(inv);
        let cond = self.norm_one() * inv.norm_one();
        if !cond.is_finite() || cond > cap {
            return Err(Error::Singular { cond });
        }
        Ok(inv)
    }

    /// 1-norm condition estimate, infinite when singular.
    pub fn condition(&self) -> f64 {
        match self.0.clone().lu().try_inverse() {
            Some(inv) => self.norm_one() * BMatrix(inv).norm_one(),
            None => f64::INFINITY,
        }
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        (0..self.d()).all(|i| (0..self.d()).all(|j| i == j || self.get(i, j).norm() <= tol))
    }

    /// Raw bytes of the entries, for cache fingerprints.
    pub fn bit_pattern(&self) -> Vec<u64> {
        self.0.iter().flat_map(|z| [z.re.to_bits(), z.im.to_bits()]).collect()
    }

    /// Entries uniform in the complex square `[-scale, scale]²`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, d: usize, scale: f64) -> Self {
        BMatrix::from_fn(d, |_, _| C64::new(rng.gen_range(-scale..=scale), rng.gen_range(-scale..=scale)))
    }

    pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize, scale: f64) -> Self {
        let a = BMatrix::random(rng, d, scale);
        (&a + &a.adjoint()).scale_re(0.5)
    }

    /// Haar-ish unitary from the QR factorisation of a random matrix.
    pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Self {
        let a = BMatrix::random(rng, d, 1.0);
        let qr = a.0.qr();
        let q = qr.q();
        let r = qr.r();
        // fix phases so the factorisation is unique
        let phases: Vec<C64> =
            (0..d).map(|i| if r[(i, i)].norm() > 0.0 { r[(i, i)] / r[(i, i)].norm() } else { C64::new(1.0, 0.0) }).collect();
        BMatrix(q * BMatrix::from_diag(&phases).0)
    }

    /// `ρ·U·diag(u)·U*` with `u` uniform in `[0.5, 1]`: invertible with margin.
    pub fn sample_point<R: Rng + ?Sized>(rng: &mut R, d: usize, rho: f64) -> Self {
        let u = BMatrix::random_unitary(rng, d);
        let diag: Vec<C64> = (0..d).map(|_| C64::new(rng.gen_range(0.5..=1.0), 0.0)).collect();
        (&(&u * &BMatrix::from_diag(&diag)) * &u.adjoint()).scale_re(rho)
    }
}

impl fmt::Display for BMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.d() {
            let row: Vec<String> = (0..self.d()).map(|j| format!("{:.6}", self.get(i, j))).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

macro_rules! binop {
    ($tr:ident, $f:ident, $op:tt) => {
        impl $tr<&BMatrix> for &BMatrix {
            type Output = BMatrix;
            fn $f(self, rhs: &BMatrix) -> BMatrix {
                BMatrix(&self.0 $op &rhs.0)
            }
        }
        impl $tr<BMatrix> for BMatrix {
            type Output = BMatrix;
            fn $f(self, rhs: BMatrix) -> BMatrix {
                BMatrix(self.0 $op rhs.0)
            }
        }
        impl $tr<&BMatrix> for BMatrix {
            type Output = BMatrix;
            fn $f(self, rhs: &BMatrix) -> BMatrix {
                BMatrix(self.0 $op &rhs.0)
            }
        }
        impl $tr<BMatrix> for &BMatrix {
            type Output = BMatrix;
            fn $f(self, rhs: BMatrix) -> BMatrix {
                BMatrix(&self.0 $op rhs.0)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl AddAssign<&BMatrix> for BMatrix {
    fn add_assign(&mut self, rhs: &BMatrix) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&BMatrix> for BMatrix {
    fn sub_assign(&mut self, rhs: &BMatrix) {
        self.0 -= &rhs.0;
    }
}

impl Neg for BMatrix {
    type Output = BMatrix;
    fn neg(self) -> BMatrix {
        BMatrix(-self.0)
    }
}

impl Neg for &BMatrix {
    type Output = BMatrix;
    fn neg(self) -> BMatrix {
        BMatrix(-&self.0)
    }
}

impl Serialize for BMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> =
            (0..self.d()).map(|i| (0..self.d()).map(|j| [self.get(i, j).re, self.get(i, j).im]).collect()).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for BMatrix {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(de)?;
        let rows: Vec<Vec<C64>> = rows.into_iter().map(|r| r.into_iter().map(|[a, b]| C64::new(a, b)).collect()).collect();
        BMatrix::from_rows(&rows).map_err(D::Error::custom)
    }
}

/// An element of the diagonal subalgebra `D_d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagMatrix {
    pub diagonal: Vec<C64>,
}

impl DiagMatrix {
    pub fn d(&self) -> usize {
        self.diagonal.len()
    }

    pub fn to_b(&self) -> BMatrix {
        BMatrix::from_diag(&self.diagonal)
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R, d: usize, scale: f64) -> Self {
        DiagMatrix {
            diagonal: (0..d).map(|_| C64::new(rng.gen_range(-scale..=scale), rng.gen_range(-scale..=scale))).collect(),
        }
    }
}

/// The conditional expectation `F : M_d(ℂ) → D_d` onto the diagonal.
pub fn cond_expect_diag(b: &BMatrix) -> DiagMatrix {
    DiagMatrix { diagonal: (0..b.d()).map(|i| b.get(i, i)).collect() }
}

/// `F` as a map `B → B`.
pub fn diag_part(b: &BMatrix) -> BMatrix {
    cond_expect_diag(b).to_b()
}

/// A dense operator on a finite-dimensional base space (small Fock truncations).
#[derive(Clone, Debug, PartialEq)]
pub struct A0Matrix(pub DMatrix<C64>);

impl A0Matrix {
    pub fn zeros(n: usize) -> Self {
        A0Matrix(DMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        A0Matrix(DMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn mul(&self, other: &Self) -> Self {
        A0Matrix(&self.0 * &other.0)
    }

    pub fn add(&self, other: &Self) -> Self {
        A0Matrix(&self.0 + &other.0)
    }

    pub fn adjoint(&self) -> Self {
        A0Matrix(self.0.adjoint())
    }

    /// `⟨e_0, T e_0⟩`.
    pub fn vacuum(&self) -> C64 {
        self.0[(0, 0)]
    }
}
