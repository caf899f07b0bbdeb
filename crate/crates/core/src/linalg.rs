//! Inner-product arithmetic on `F^n` for `F` the reals or the complexes.
//!
//! Both fields share one representation: entries are stored as `Complex64`
//! and a [`Field`] tag records which field the value lives in. Real vectors
//! and maps always carry exactly zero imaginary parts, so every operation
//! between real operands stays real.
//!
//! The inner product is linear in its first argument and conjugate-linear in
//! its second: `inner(f, h) = sum_i f_i * conj(h_i)`.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default absolute tolerance for structural identities.
pub const DEFAULT_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Real => f.write_str("real"),
            Field::Complex => f.write_str("complex"),
        }
    }
}

fn check_entries(field: Field, entries: &[Complex64]) -> Result<()> {
    for (i, z) in entries.iter().enumerate() {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::NonFinite(i));
        }
        if field == Field::Real && z.im != 0.0 {
            return Err(Error::ImaginaryInReal(i));
        }
    }
    Ok(())
}

/// An element of `F^n`.
#[derive(Clone, PartialEq)]
pub struct Vector {
    data: DVector<Complex64>,
    field: Field,
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.field {
            Field::Real => f
                .debug_tuple("Vector::Real")
                .field(&self.data.iter().map(|z| z.re).collect::<Vec<_>>())
                .finish(),
            Field::Complex => f
                .debug_tuple("Vector::Complex")
                .field(&self.data.iter().map(|z| (z.re, z.im)).collect::<Vec<_>>())
                .finish(),
        }
    }
}

impl Vector {
    pub fn new(field: Field, entries: Vec<Complex64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::DimensionTooSmall { min: 1, actual: 0 });
        }
        check_entries(field, &entries)?;
        Ok(Vector {
            data: DVector::from_vec(entries),
            field,
        })
    }

    pub fn real(entries: &[f64]) -> Result<Self> {
        Self::new(
            Field::Real,
            entries.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn complex(entries: &[Complex64]) -> Result<Self> {
        Self::new(Field::Complex, entries.to_vec())
    }

    /// Builds a vector in `field` from real coordinates.
    pub fn from_reals(field: Field, entries: &[f64]) -> Result<Self> {
        Self::new(
            field,
            entries.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn zeros(dim: usize, field: Field) -> Self {
        Vector {
            data: DVector::from_element(dim.max(1), ZERO),
            field,
        }
    }

    /// The `index`-th standard basis vector.
    pub fn basis(dim: usize, index: usize, field: Field) -> Self {
        let mut v = Self::zeros(dim, field);
        v.data[index] = ONE;
        v
    }

    pub(crate) fn from_raw(data: DVector<Complex64>, field: Field) -> Self {
        Vector { data, field }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn entries(&self) -> &[Complex64] {
        self.data.as_slice()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| *z == ZERO)
    }

    /// Multiplies by a scalar. A complex scalar applied to a real vector is
    /// rejected unless its imaginary part is zero.
    pub fn scale(&self, c: Complex64) -> Result<Vector> {
        if self.field == Field::Real && c.im != 0.0 {
            return Err(Error::FieldMismatch(Field::Real, Field::Complex));
        }
        Ok(self.scale_unchecked(c))
    }

    pub(crate) fn scale_unchecked(&self, c: Complex64) -> Vector {
        Vector::from_raw(&self.data * c, self.field)
    }

    pub fn scale_real(&self, t: f64) -> Vector {
        Vector::from_raw(&self.data * Complex64::new(t, 0.0), self.field)
    }

    pub fn add(&self, other: &Vector) -> Result<Vector> {
        check_compatible(self, other)?;
        Ok(Vector::from_raw(&self.data + &other.data, self.field))
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector> {
        check_compatible(self, other)?;
        Ok(Vector::from_raw(&self.data - &other.data, self.field))
    }

    pub(crate) fn sub_unchecked(&self, other: &Vector) -> Vector {
        Vector::from_raw(&self.data - &other.data, self.field)
    }

    /// `self + t * other` without compatibility checks.
    pub(crate) fn axpy(&self, t: Complex64, other: &Vector) -> Vector {
        Vector::from_raw(&self.data + &other.data * t, self.field)
    }

    /// JSON form: numbers over the reals, `[re, im]` pairs over the complexes.
    pub fn to_json_value(&self) -> serde_json::Value {
        entries_json(self.data.iter(), self.field)
    }

    /// Real part of every entry followed by the imaginary parts (complex only).
    pub fn to_flat_reals(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.data.iter().map(|z| z.re).collect();
        if self.field == Field::Complex {
            out.extend(self.data.iter().map(|z| z.im));
        }
        out
    }
}

fn entries_json<'a>(it: impl Iterator<Item = &'a Complex64>, field: Field) -> serde_json::Value {
    it.map(|z| match field {
        Field::Real => serde_json::json!(z.re),
        Field::Complex => serde_json::json!([z.re, z.im]),
    })
    .collect()
}

fn check_compatible(a: &Vector, b: &Vector) -> Result<()> {
    if a.field != b.field {
        return Err(Error::FieldMismatch(a.field, b.field));
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    Ok(())
}

/// `<f, h>`, linear in `f` and conjugate-linear in `h`.
pub fn inner(f: &Vector, h: &Vector) -> Result<Complex64> {
    check_compatible(f, h)?;
    Ok(inner_unchecked(f, h))
}

pub(crate) fn inner_unchecked(f: &Vector, h: &Vector) -> Complex64 {
    h.data.dotc(&f.data)
}

pub fn norm(h: &Vector) -> f64 {
    h.data.norm()
}

/// Canonical isometry invariants `(r, p, q)` of a pair with `g != 0`:
/// `r = |g|`, `p = |<h,g>|` and `q = sqrt(|h|^2 |g|^2 - |<h,g>|^2)`.
///
/// `q` is evaluated as `|g|` times the norm of the component of `h`
/// orthogonal to `g`, which keeps it accurate when `h` is nearly collinear
/// with `g`.
pub fn canonical_invariants(g: &Vector, h: &Vector) -> Result<(f64, f64, f64)> {
    check_compatible(g, h)?;
    let r = norm(g);
    if r == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(canonical_invariants_unchecked(g, h, r))
}

pub(crate) fn canonical_invariants_unchecked(g: &Vector, h: &Vector, r: f64) -> (f64, f64, f64) {
    let hg = inner_unchecked(h, g);
    let p = hg.norm();
    let coef = hg / g.data.norm_squared();
    let perp = &h.data - &g.data * coef;
    let q = r * perp.norm();
    (r, p, q)
}

/// Acute angle between the `F`-lines through `g` and `h`, in `[0, pi/2]`.
pub fn acute_angle(g: &Vector, h: &Vector) -> Result<f64> {
    check_compatible(g, h)?;
    if g.is_zero() || h.is_zero() {
        return Err(Error::ZeroVector);
    }
    let (_, p, q) = canonical_invariants_unchecked(g, h, norm(g));
    Ok(angle_from_pq(p, q))
}

/// `atan2(q, p)` equals `arccos(p / sqrt(p^2 + q^2))` and is well conditioned
/// at both ends of the range.
pub(crate) fn angle_from_pq(p: f64, q: f64) -> f64 {
    q.atan2(p).clamp(0.0, FRAC_PI_2)
}

/// A dense linear map `F^n -> F^m`.
#[derive(Clone, PartialEq)]
pub struct LinearMap {
    data: DMatrix<Complex64>,
    field: Field,
}

impl fmt::Debug for LinearMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LinearMap<{}>{}", self.field, self.data)
    }
}

impl LinearMap {
    /// Builds an `rows x cols` map from row-major entries.
    pub fn new(field: Field, rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionTooSmall {
                min: 1,
                actual: rows.min(cols),
            });
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: entries.len(),
            });
        }
        check_entries(field, &entries)?;
        Ok(LinearMap {
            data: DMatrix::from_row_slice(rows, cols, &entries),
            field,
        })
    }

    /// Builds a map from real rows, tagged with `field`.
    pub fn from_real_rows(field: Field, rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::InvalidArgument("ragged rows".into()));
        }
        let entries = rows
            .iter()
            .flatten()
            .map(|&x| Complex64::new(x, 0.0))
            .collect();
        Self::new(field, n_rows, n_cols, entries)
    }

    pub fn identity(dim: usize, field: Field) -> Self {
        LinearMap {
            data: DMatrix::identity(dim, dim),
            field,
        }
    }

    pub fn diagonal(field: Field, diag: &[Complex64]) -> Result<Self> {
        let n = diag.len();
        let mut entries = vec![ZERO; n * n];
        for (i, d) in diag.iter().enumerate() {
            entries[i * n + i] = *d;
        }
        Self::new(field, n, n, entries)
    }

    pub(crate) fn from_raw(data: DMatrix<Complex64>, field: Field) -> Self {
        LinearMap { data, field }
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[(row, col)]
    }

    pub fn entries_row_major(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.data[(i, j)]);
            }
        }
        out
    }

    pub fn apply(&self, v: &Vector) -> Result<Vector> {
        if v.field != self.field {
            return Err(Error::FieldMismatch(self.field, v.field));
        }
        if v.dim() != self.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.cols(),
                actual: v.dim(),
            });
        }
        Ok(self.apply_unchecked(v))
    }

    pub(crate) fn apply_unchecked(&self, v: &Vector) -> Vector {
        Vector::from_raw(&self.data * &v.data, self.field)
    }

    /// `self * other`, i.e. `other` is applied first.
    pub fn compose(&self, other: &LinearMap) -> Result<LinearMap> {
        if self.field != other.field {
            return Err(Error::FieldMismatch(self.field, other.field));
        }
        if self.cols() != other.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.cols(),
                actual: other.rows(),
            });
        }
        Ok(LinearMap::from_raw(&self.data * &other.data, self.field))
    }

    pub fn scale(&self, c: Complex64) -> Result<LinearMap> {
        if self.field == Field::Real && c.im != 0.0 {
            return Err(Error::FieldMismatch(Field::Real, Field::Complex));
        }
        Ok(LinearMap::from_raw(&self.data * c, self.field))
    }

    pub(crate) fn scale_unchecked(&self, c: Complex64) -> LinearMap {
        LinearMap::from_raw(&self.data * c, self.field)
    }

    pub fn adjoint(&self) -> LinearMap {
        LinearMap::from_raw(self.data.adjoint(), self.field)
    }

    pub fn determinant(&self) -> Result<Complex64> {
        if !self.is_square() {
            return Err(Error::InvalidArgument(
                "determinant of a non-square map".into(),
            ));
        }
        Ok(self.data.determinant())
    }

    /// Largest entry of `|U*U - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let gram = self.data.adjoint() * &self.data;
        let n = gram.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((gram[(i, j)] - target).norm());
            }
        }
        worst
    }

    pub fn is_isometry(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    /// Row-major entries in the same JSON form as [`Vector::to_json_value`].
    pub fn to_json_value(&self) -> serde_json::Value {
        entries_json(self.entries_row_major().iter(), self.field)
    }

    pub fn column(&self, j: usize) -> Vector {
        Vector::from_raw(self.data.column(j).into_owned(), self.field)
    }
}

/// Seeded generator used by every sampling routine in the crate.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent sub-seed for the `index`-th task of a seeded computation
/// (splitmix64 finalizer).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Standard Gaussian scalar in `field` (complex: independent real and
/// imaginary parts of variance 1/2).
pub fn random_scalar<R: Rng + ?Sized>(field: Field, rng: &mut R) -> Complex64 {
    match field {
        Field::Real => Complex64::new(rng.sample(StandardNormal), 0.0),
        Field::Complex => {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        }
    }
}

pub fn random_vector<R: Rng + ?Sized>(dim: usize, field: Field, rng: &mut R) -> Vector {
    let data = DVector::from_fn(dim, |_, _| random_scalar(field, rng));
    Vector::from_raw(data, field)
}

/// Uniformly distributed unit vector.
pub fn random_unit_vector<R: Rng + ?Sized>(dim: usize, field: Field, rng: &mut R) -> Vector {
    loop {
        let v = random_vector(dim, field, rng);
        let n = norm(&v);
        if n > 1e-12 {
            return v.scale_real(1.0 / n);
        }
    }
}

pub(crate) fn gaussian_matrix<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    field: Field,
    rng: &mut R,
) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| random_scalar(field, rng))
}

/// Haar-distributed unitary (orthogonal over the reals), from the QR
/// factorization of a Gaussian matrix with the phases of `diag(R)` moved
/// into `Q`.
pub fn random_unitary(dim: usize, field: Field, seed: u64) -> Result<LinearMap> {
    if dim == 0 {
        return Err(Error::DimensionTooSmall { min: 1, actual: 0 });
    }
    let mut rng = rng_from_seed(seed);
    Ok(haar_unitary(dim, field, &mut rng))
}

pub(crate) fn haar_unitary<R: Rng + ?Sized>(dim: usize, field: Field, rng: &mut R) -> LinearMap {
    loop {
        let z = gaussian_matrix(dim, dim, field, rng);
        let qr = z.qr();
        let r = qr.r();
        if (0..dim).any(|i| r[(i, i)].norm() < 1e-300) {
            continue;
        }
        let mut q = qr.q();
        for j in 0..dim {
            let d = r[(j, j)];
            let phase = d / d.norm();
            let phase = match field {
                Field::Real => Complex64::new(phase.re.signum(), 0.0),
                Field::Complex => phase,
            };
            q.column_mut(j).scale_mut_complex(phase);
        }
        if field == Field::Real {
            q.apply(|z| z.im = 0.0);
        }
        return LinearMap::from_raw(q, field);
    }
}

trait ScaleComplex {
    fn scale_mut_complex(&mut self, c: Complex64);
}

impl<S> ScaleComplex for nalgebra::Matrix<Complex64, nalgebra::Dyn, nalgebra::U1, S>
where
    S: nalgebra::StorageMut<Complex64, nalgebra::Dyn, nalgebra::U1>,
{
    fn scale_mut_complex(&mut self, c: Complex64) {
        for z in self.iter_mut() {
            *z *= c;
        }
    }
}

/// Haar-random rotation: a real orthogonal map with determinant +1.
pub fn random_rotation(dim: usize, field: Field, seed: u64) -> Result<LinearMap> {
    if field != Field::Real {
        return Err(Error::InvalidArgument(
            "rotations are defined over the real field only".into(),
        ));
    }
    if dim < 2 {
        return Err(Error::DimensionTooSmall {
            min: 2,
            actual: dim,
        });
    }
    let mut rng = rng_from_seed(seed);
    Ok(haar_rotation(dim, &mut rng))
}

pub(crate) fn haar_rotation<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> LinearMap {
    let mut u = haar_unitary(dim, Field::Real, rng);
    if u.data.determinant().re < 0.0 {
        for z in u.data.column_mut(0).iter_mut() {
            *z = -*z;
        }
    }
    u
}

/// Singular values in descending order; `min(rows, cols)` of them.
pub fn singular_values(t: &LinearMap) -> Vec<f64> {
    let mut sv: Vec<f64> = t.data.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

fn gram_schmidt_step(v: &mut DVector<Complex64>, basis: &[DVector<Complex64>]) {
    // two passes for numerical orthogonality
    for _ in 0..2 {
        for b in basis {
            let c = b.dotc(v);
            *v -= b * c;
        }
    }
}

/// Completes an orthonormal list to an orthonormal basis of `F^dim`, each
/// time taking the standard basis vector with the largest residual.
fn complete_basis(mut basis: Vec<DVector<Complex64>>, dim: usize) -> Vec<DVector<Complex64>> {
    while basis.len() < dim {
        let mut best: Option<(f64, DVector<Complex64>)> = None;
        for i in 0..dim {
            let mut v = DVector::from_element(dim, ZERO);
            v[i] = ONE;
            gram_schmidt_step(&mut v, &basis);
            let n = v.norm();
            if best.as_ref().is_none_or(|(bn, _)| n > *bn) {
                best = Some((n, v));
            }
        }
        let (n, v) = best.expect("dim > 0");
        basis.push(v / Complex64::new(n, 0.0));
    }
    basis
}

/// Isometry `U` with `U g = |g| e` that maps `h` into `span{e, f}`:
/// `U h = (<h,g>/|<h,g>|) (|<h,g>| e + q f) / |g|`, where the phase factor
/// is taken to be 1 whenever `<h,g> = 0`.
///
/// Over the reals, when the basis completion leaves a free sign, it is
/// chosen so that `det U = +1`.
pub fn build_canonical_isometry(
    g: &Vector,
    h: &Vector,
    e: &Vector,
    f: &Vector,
) -> Result<LinearMap> {
    for v in [h, e, f] {
        check_compatible(g, v)?;
    }
    let dim = g.dim();
    if dim < 2 {
        return Err(Error::DimensionTooSmall {
            min: 2,
            actual: dim,
        });
    }
    let defect = (norm(e) - 1.0)
        .abs()
        .max((norm(f) - 1.0).abs())
        .max(inner_unchecked(e, f).norm());
    if defect > DEFAULT_TOL {
        return Err(Error::NotOrthonormal(defect));
    }
    let r = norm(g);
    if r == 0.0 {
        return Err(Error::ZeroVector);
    }
    let field = g.field;
    let u1 = &g.data / Complex64::new(r, 0.0);
    let hg = inner_unchecked(h, g);
    let phase = if hg.norm() > 0.0 { hg / hg.norm() } else { ONE };

    let mut perp = h.data.clone();
    gram_schmidt_step(&mut perp, std::slice::from_ref(&u1));
    let perp_norm = perp.norm();
    // relative threshold: below it, h is treated as collinear with g
    let collinear = perp_norm <= 1e-14 * norm(h).max(f64::MIN_POSITIVE);

    let mut source = vec![u1];
    let mut free_sign = collinear;
    if !collinear {
        source.push(perp / Complex64::new(perp_norm, 0.0));
    }
    if dim > 2 {
        free_sign = true;
    }
    let source = complete_basis(source, dim);

    let e1 = e.data.clone();
    let e2 = &f.data * phase;
    let mut target = complete_basis(vec![e1, e2], dim);

    let mut s = DMatrix::from_element(dim, dim, ZERO);
    let mut t = DMatrix::from_element(dim, dim, ZERO);
    for k in 0..dim {
        s.set_column(k, &source[k]);
        t.set_column(k, &target[k]);
    }
    let mut u = &t * s.adjoint();
    if field == Field::Real && free_sign && u.determinant().re < 0.0 {
        // flip the last free target vector: index 1 when h is collinear
        // with g and dim == 2, the last completion vector otherwise
        let k = if dim > 2 { dim - 1 } else { 1 };
        target[k] = -target[k].clone();
        t.set_column(k, &target[k]);
        u = &t * s.adjoint();
    }
    if field == Field::Real {
        u.apply(|z| z.im = 0.0);
    }
    Ok(LinearMap::from_raw(u, field))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_4, SQRT_2};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn inner_product_convention() {
        let e1 = Vector::real(&[1.0, 0.0]).unwrap();
        let e2 = Vector::real(&[0.0, 1.0]).unwrap();
        assert_eq!(inner(&e1, &e2).unwrap(), c(0.0, 0.0));

        let v = Vector::complex(&[c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        assert_abs_diff_eq!(inner(&v, &v).unwrap().re, 2.0);
        assert_eq!(inner(&v, &v).unwrap().im, 0.0);

        let a = Vector::complex(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let b = Vector::complex(&[c(0.0, 1.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(inner(&a, &b).unwrap(), c(0.0, -1.0));
    }

    #[test]
    fn mismatches_are_rejected() {
        let a = Vector::real(&[1.0, 0.0]).unwrap();
        let b = Vector::real(&[1.0, 0.0, 0.0]).unwrap();
        let z = Vector::complex(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(matches!(
            inner(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(inner(&a, &z), Err(Error::FieldMismatch(..))));
        assert!(Vector::real(&[]).is_err());
        assert!(matches!(
            Vector::real(&[f64::NAN]),
            Err(Error::NonFinite(0))
        ));
        assert!(matches!(
            Vector::new(Field::Real, vec![c(0.0, 1.0)]),
            Err(Error::ImaginaryInReal(0))
        ));
    }

    #[test]
    fn norms() {
        assert_eq!(norm(&Vector::real(&[3.0, 4.0, 0.0]).unwrap()), 5.0);
        assert_eq!(norm(&Vector::zeros(3, Field::Real)), 0.0);
        let v = Vector::complex(&[c(0.0, 1.0), c(1.0, 0.0)]).unwrap();
        assert_abs_diff_eq!(norm(&v), SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn acute_angles() {
        let e1 = Vector::real(&[1.0, 0.0]).unwrap();
        let e2 = Vector::real(&[0.0, 1.0]).unwrap();
        let d = Vector::real(&[1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(acute_angle(&e1, &e2).unwrap(), FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(acute_angle(&e1, &d).unwrap(), FRAC_PI_4, epsilon = 1e-15);
        let a = Vector::complex(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let b = Vector::complex(&[c(0.0, 1.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(acute_angle(&a, &b).unwrap(), 0.0);
        assert!(matches!(
            acute_angle(&Vector::zeros(2, Field::Real), &e1),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn invariants_examples() {
        let r = |x: &[f64]| Vector::real(x).unwrap();
        assert_eq!(
            canonical_invariants(&r(&[2.0, 0.0]), &r(&[0.0, 3.0])).unwrap(),
            (2.0, 0.0, 6.0)
        );
        assert_eq!(
            canonical_invariants(&r(&[1.0, 0.0]), &r(&[1.0, 0.0])).unwrap(),
            (1.0, 1.0, 0.0)
        );
        assert_eq!(
            canonical_invariants(&r(&[1.0, 0.0]), &r(&[1.0, 1.0])).unwrap(),
            (1.0, 1.0, 1.0)
        );
        assert!(canonical_invariants(&r(&[0.0, 0.0]), &r(&[1.0, 1.0])).is_err());
    }

    #[test]
    fn canonical_isometry_identity_case() {
        let e1 = Vector::real(&[1.0, 0.0]).unwrap();
        let e2 = Vector::real(&[0.0, 1.0]).unwrap();
        let u = build_canonical_isometry(&e1, &e2, &e1, &e2).unwrap();
        assert_eq!(u, LinearMap::identity(2, Field::Real));
    }

    #[test]
    fn canonical_isometry_collinear_is_rotation() {
        let g = Vector::real(&[0.0, 2.0]).unwrap();
        let e1 = Vector::real(&[1.0, 0.0]).unwrap();
        let e2 = Vector::real(&[0.0, 1.0]).unwrap();
        let u = build_canonical_isometry(&g, &g, &e1, &e2).unwrap();
        let ug = u.apply(&g).unwrap();
        assert_abs_diff_eq!(ug.entries()[0].re, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ug.entries()[1].re, 0.0, epsilon = 1e-15);
        assert!(u.unitarity_defect() < 1e-15);
        assert_abs_diff_eq!(u.determinant().unwrap().re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn canonical_isometry_rejects_bad_frames() {
        let g = Vector::real(&[1.0, 2.0]).unwrap();
        let e1 = Vector::real(&[1.0, 0.0]).unwrap();
        let bad = Vector::real(&[1.0, 1.0]).unwrap();
        assert!(matches!(
            build_canonical_isometry(&g, &g, &e1, &bad),
            Err(Error::NotOrthonormal(_))
        ));
        let one = Vector::real(&[1.0]).unwrap();
        assert!(matches!(
            build_canonical_isometry(&one, &one, &one, &one),
            Err(Error::DimensionTooSmall { .. })
        ));
    }

    #[test]
    fn canonical_isometry_random_complex() {
        let mut rng = rng_from_seed(7);
        let e = Vector::basis(4, 0, Field::Complex);
        let f = Vector::basis(4, 1, Field::Complex);
        for _ in 0..100 {
            let g = random_vector(4, Field::Complex, &mut rng);
            let h = random_vector(4, Field::Complex, &mut rng);
            let u = build_canonical_isometry(&g, &h, &e, &f).unwrap();
            let (ug, uh) = (u.apply(&g).unwrap(), u.apply(&h).unwrap());
            assert!((inner(&uh, &ug).unwrap() - inner(&h, &g).unwrap()).norm() <= 1e-12);
            assert!((norm(&uh) - norm(&h)).abs() <= 1e-12);
            let target = e.scale_real(norm(&g));
            assert!(norm(&ug.sub(&target).unwrap()) <= 1e-12);
            // U h lies in span{e, f}
            assert!(uh.entries()[2..].iter().all(|z| z.norm() <= 1e-12));
            // the e-coefficient is <h,g>/|g|
            let expected = inner(&h, &g).unwrap() / norm(&g);
            assert!((uh.entries()[0] - expected).norm() <= 1e-12);
            for _ in 0..5 {
                let probe = random_vector(4, Field::Complex, &mut rng);
                let up = u.apply(&probe).unwrap();
                assert!((norm(&up) - norm(&probe)).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn orthogonal_pair_uses_unit_phase() {
        let g = Vector::complex(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        let h = Vector::complex(&[c(0.0, 0.0), c(0.0, 2.0), c(0.0, 0.0)]).unwrap();
        let e = Vector::basis(3, 0, Field::Complex);
        let f = Vector::basis(3, 1, Field::Complex);
        let u = build_canonical_isometry(&g, &h, &e, &f).unwrap();
        let uh = u.apply(&h).unwrap();
        assert!((uh.entries()[1] - c(2.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn unitary_samples() {
        let u = random_unitary(1, Field::Real, 3).unwrap();
        assert_eq!(u.get(0, 0).re.abs(), 1.0);
        for (dim, field, seed) in [
            (3, Field::Real, 1),
            (5, Field::Complex, 2),
            (8, Field::Complex, 9),
        ] {
            let u = random_unitary(dim, field, seed).unwrap();
            assert!(u.unitarity_defect() <= 1e-12);
            assert!((u.determinant().unwrap().norm() - 1.0).abs() <= 1e-10);
            assert_eq!(u, random_unitary(dim, field, seed).unwrap());
        }
        assert!(random_unitary(0, Field::Real, 0).is_err());
    }

    #[test]
    fn rotation_samples() {
        for seed in 0..20 {
            let r = random_rotation(2 + (seed as usize % 4), Field::Real, seed).unwrap();
            assert!(r.unitarity_defect() <= 1e-12);
            assert_abs_diff_eq!(r.determinant().unwrap().re, 1.0, epsilon = 1e-10);
        }
        let r2 = random_rotation(2, Field::Real, 11).unwrap();
        // planar rotation: [[c, -s], [s, c]]
        assert_abs_diff_eq!(r2.get(0, 0).re, r2.get(1, 1).re, epsilon = 1e-14);
        assert_abs_diff_eq!(r2.get(0, 1).re, -r2.get(1, 0).re, epsilon = 1e-14);
        assert!(random_rotation(3, Field::Complex, 0).is_err());
        assert!(random_rotation(1, Field::Real, 0).is_err());
    }

    #[test]
    fn singular_value_examples() {
        let id = LinearMap::identity(4, Field::Real);
        assert_eq!(singular_values(&id), vec![1.0; 4]);
        let d = LinearMap::from_real_rows(Field::Real, &[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let sv = singular_values(&d);
        assert_abs_diff_eq!(sv[0], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(sv[1], 1.0, epsilon = 1e-14);
        let rank1 =
            LinearMap::from_real_rows(Field::Real, &[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(singular_values(&rank1)[1] <= 1e-12);
        let rect =
            LinearMap::from_real_rows(Field::Real, &[vec![1.0, 0.0, 0.0], vec![0.0, 3.0, 0.0]])
                .unwrap();
        assert_eq!(singular_values(&rect).len(), 2);
    }

    #[test]
    fn derived_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| derive_seed(42, i)).collect();
        assert_eq!(seeds.len(), 1000);
    }
}
