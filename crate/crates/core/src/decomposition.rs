//! Recovering canonical profiles from black-box metrics.
//!
//! With `g = r e` and `h = p e + q f` for an orthonormal pair `(e, f)`, an
//! isometry-invariant metric of homogeneity degree `alpha` satisfies
//! `lambda_r(p, q) = r^-alpha rho_{r e}(p e + q f)`. For Hermitean forms,
//! `phi(R) = sigma_{sqrt(R) e}(f, f)` and
//! `psi(R) = (sigma_{sqrt(R) e}(e, e) - phi(R)) / R`.
//!
//! Extracted profiles delegate to the oracle on every call; nothing is
//! tabulated unless [`tabulate_theta`] or [`tabulate_phi_psi`] is used.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::domain::RadiusDomain;
use crate::error::{Error, Result};
use crate::linalg::{
    derive_seed, inner, norm, random_unit_vector, random_vector, rng_from_seed, Field, Vector,
    DEFAULT_TOL,
};
use crate::metric::{
    eval_finsler, eval_sesquilinear, random_nonzero_scalar, FinslerFn, MetricSpec,
};
use crate::profile::{
    Fn1, NonSymLambdaProfile, Profile, RiemannProfile, SymLambdaProfile, ThetaProfile,
};

const ALPHA_TOL: f64 = 1e-8;
const VALIDATION_SAMPLES: usize = 64;
const VALIDATION_SEED: u64 = 0x5eed;

pub type SesquiFn = dyn Fn(&Vector, &Vector, &Vector) -> Result<Complex64> + Send + Sync;

/// A black-box function on base-point/direction pairs with a declared
/// homogeneity degree `alpha`: `rho_g(t h) = |t|^alpha rho_g(h)`.
#[derive(Clone)]
pub struct MetricOracle {
    eval: Arc<FinslerFn>,
    pub dim: usize,
    pub field: Field,
    pub domain: RadiusDomain,
    pub alpha: f64,
}

impl fmt::Debug for MetricOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricOracle")
            .field("dim", &self.dim)
            .field("field", &self.field)
            .field("domain", &self.domain)
            .field("alpha", &self.alpha)
            .finish()
    }
}

impl MetricOracle {
    pub fn new(
        eval: impl Fn(&Vector, &Vector) -> Result<f64> + Send + Sync + 'static,
        dim: usize,
        field: Field,
        domain: RadiusDomain,
        alpha: f64,
    ) -> Self {
        MetricOracle {
            eval: Arc::new(eval),
            dim,
            field,
            domain,
            alpha,
        }
    }

    /// Wraps a metric spec (degree 1).
    pub fn from_spec(spec: &MetricSpec) -> Self {
        let s = spec.clone();
        MetricOracle {
            eval: Arc::new(move |g, h| eval_finsler(&s, g, h)),
            dim: spec.dim(),
            field: spec.field(),
            domain: spec.domain().clone(),
            alpha: 1.0,
        }
    }

    pub fn eval(&self, g: &Vector, h: &Vector) -> Result<f64> {
        (self.eval)(g, h)
    }

    /// The oracle as a (custom) metric spec.
    pub fn to_spec(&self) -> Result<MetricSpec> {
        MetricSpec::custom(
            Arc::clone(&self.eval),
            self.dim,
            self.field,
            self.domain.clone(),
        )
    }

    /// Samples `rho_g(t h) = |t|^alpha rho_g(h)` with relative tolerance
    /// 1e-8; `positive_only` restricts `t` to positive reals.
    pub fn validate_alpha(&self, positive_only: bool, n_samples: usize, seed: u64) -> Result<()> {
        for i in 0..n_samples {
            let mut rng = rng_from_seed(derive_seed(seed, i as u64));
            let g = random_unit_vector(self.dim, self.field, &mut rng)
                .scale_real(self.domain.sample(&mut rng));
            let h = random_vector(self.dim, self.field, &mut rng);
            let t = if positive_only {
                Complex64::new(rng.random_range(0.1..3.0), 0.0)
            } else {
                random_nonzero_scalar(self.field, &mut rng)
            };
            let base = self.eval(&g, &h)?;
            let scaled = self.eval(&g, &h.scale_unchecked(t))?;
            let want = t.norm().powf(self.alpha) * base;
            let dev = (scaled - want).abs() / 1f64.max(scaled.abs()).max(want.abs());
            if dev > ALPHA_TOL {
                return Err(Error::HomogeneityViolation { deviation: dev });
            }
        }
        Ok(())
    }
}

/// A black-box function `(g, f, h) -> sigma_g(f, h)` that is sesquilinear
/// in `(f, h)` for each base point `g` with `|g|` in `domain`.
#[derive(Clone)]
pub struct SesquiOracle {
    eval: Arc<SesquiFn>,
    pub dim: usize,
    pub field: Field,
    pub domain: RadiusDomain,
}

impl fmt::Debug for SesquiOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SesquiOracle")
            .field("dim", &self.dim)
            .field("field", &self.field)
            .field("domain", &self.domain)
            .finish()
    }
}

impl SesquiOracle {
    pub fn new(
        eval: impl Fn(&Vector, &Vector, &Vector) -> Result<Complex64> + Send + Sync + 'static,
        dim: usize,
        field: Field,
        domain: RadiusDomain,
    ) -> Self {
        SesquiOracle {
            eval: Arc::new(eval),
            dim,
            field,
            domain,
        }
    }

    pub fn from_profile(profile: &RiemannProfile, dim: usize, field: Field) -> Self {
        let p = profile.clone();
        SesquiOracle {
            eval: Arc::new(move |g, f, h| eval_sesquilinear(&p, g, f, h)),
            dim,
            field,
            domain: profile.domain.sqrt(),
        }
    }

    pub fn eval(&self, g: &Vector, f: &Vector, h: &Vector) -> Result<Complex64> {
        (self.eval)(g, f, h)
    }

    /// Samples `sigma_g(f, h) = conj(sigma_g(h, f))`.
    pub fn validate_conjugate_symmetry(&self, n_samples: usize, seed: u64, tol: f64) -> Result<()> {
        for i in 0..n_samples {
            let mut rng = rng_from_seed(derive_seed(seed, i as u64));
            let g = random_unit_vector(self.dim, self.field, &mut rng)
                .scale_real(self.domain.sample(&mut rng));
            let f = random_vector(self.dim, self.field, &mut rng);
            let h = random_vector(self.dim, self.field, &mut rng);
            let a = self.eval(&g, &f, &h)?;
            let b = self.eval(&g, &h, &f)?.conj();
            let dev = (a - b).norm() / (1.0 + a.norm());
            if dev > tol {
                return Err(Error::NotConjugateSymmetric { deviation: dev });
            }
        }
        Ok(())
    }
}

fn require_plane(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall {
            min: 2,
            actual: dim,
        });
    }
    Ok(())
}

fn standard_frame(dim: usize, field: Field) -> (Vector, Vector) {
    (Vector::basis(dim, 0, field), Vector::basis(dim, 1, field))
}

/// `lambda_r(p, q) = r^-alpha rho_{r e1}(p e1 + q e2)`.
pub fn extract_lambda(oracle: &MetricOracle) -> Result<SymLambdaProfile> {
    require_plane(oracle.dim)?;
    let (e, f) = standard_frame(oracle.dim, oracle.field);
    extract_lambda_in_frame(oracle, &e, &f)
}

/// As [`extract_lambda`] with an arbitrary orthonormal pair `(e, f)`.
pub fn extract_lambda_in_frame(
    oracle: &MetricOracle,
    e: &Vector,
    f: &Vector,
) -> Result<SymLambdaProfile> {
    require_plane(oracle.dim)?;
    check_frame(oracle.dim, oracle.field, e, f)?;
    oracle.validate_alpha(false, VALIDATION_SAMPLES, VALIDATION_SEED)?;
    let o = oracle.clone();
    let (e, f) = (e.clone(), f.clone());
    let alpha = oracle.alpha;
    Ok(SymLambdaProfile::from_fn(
        move |r, p, q| {
            if !o.domain.contains(r) || r == 0.0 {
                return Err(Error::OutOfDomain(r));
            }
            let g = e.scale_real(r);
            let h = e.scale_real(p).axpy(Complex64::new(q, 0.0), &f);
            Ok(o.eval(&g, &h)? / r.powf(alpha))
        },
        alpha,
    ))
}

fn check_frame(dim: usize, field: Field, e: &Vector, f: &Vector) -> Result<()> {
    for v in [e, f] {
        if v.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: v.dim(),
            });
        }
        if v.field() != field {
            return Err(Error::FieldMismatch(field, v.field()));
        }
    }
    let defect = (norm(e) - 1.0)
        .abs()
        .max((norm(f) - 1.0).abs())
        .max(inner(e, f)?.norm());
    if defect > DEFAULT_TOL {
        return Err(Error::NotOrthonormal(defect));
    }
    Ok(())
}

/// `theta(r, tau) = r lambda_r(cos tau, sin tau)` for degree-1 oracles.
pub fn extract_theta(oracle: &MetricOracle) -> Result<ThetaProfile> {
    if oracle.alpha != 1.0 {
        return Err(Error::InvalidArgument(format!(
            "theta extraction needs a degree-1 oracle, got alpha = {}",
            oracle.alpha
        )));
    }
    let lambda = extract_lambda(oracle)?;
    Ok(ThetaProfile::from_fn(move |r, tau| {
        Ok(r * lambda.call(r, tau.cos(), tau.sin())?)
    }))
}

/// Non-symmetric lambda with `p` in `F`:
/// `lambda_r(p, q) = r^-1 rho_{r e1}(p e1 + q e2)`.
pub fn extract_nonsym_lambda(oracle: &MetricOracle) -> Result<NonSymLambdaProfile> {
    require_plane(oracle.dim)?;
    if oracle.alpha != 1.0 {
        return Err(Error::InvalidArgument(
            "non-symmetric extraction needs alpha = 1".into(),
        ));
    }
    oracle.validate_alpha(true, VALIDATION_SAMPLES, VALIDATION_SEED)?;
    let (e, f) = standard_frame(oracle.dim, oracle.field);
    let o = oracle.clone();
    Ok(NonSymLambdaProfile::from_fn(move |r, p, q| {
        if !o.domain.contains(r) || r == 0.0 {
            return Err(Error::OutOfDomain(r));
        }
        if o.field == Field::Real && p.im != 0.0 {
            return Err(Error::FieldMismatch(Field::Real, Field::Complex));
        }
        let g = e.scale_real(r);
        let h = e.scale_unchecked(p).axpy(Complex64::new(q, 0.0), &f);
        Ok(o.eval(&g, &h)? / r)
    }))
}

/// `(phi, psi)` of an isometry-invariant Hermitean oracle. The returned
/// profile's domain holds squared radii.
pub fn extract_phi_psi(oracle: &SesquiOracle) -> Result<RiemannProfile> {
    require_plane(oracle.dim)?;
    oracle.validate_conjugate_symmetry(VALIDATION_SAMPLES, VALIDATION_SEED, 1e-9)?;
    let (e, f) = standard_frame(oracle.dim, oracle.field);
    let domain = oracle.domain.squared();
    let phi_at = {
        let (o, e, f, d) = (oracle.clone(), e.clone(), f.clone(), domain.clone());
        move |big_r: f64| -> Result<f64> {
            if !d.contains(big_r) || big_r == 0.0 {
                return Err(Error::OutOfDomain(big_r.sqrt()));
            }
            Ok(o.eval(&e.scale_real(big_r.sqrt()), &f, &f)?.re)
        }
    };
    let phi_at = Arc::new(phi_at);
    let psi = {
        let (o, e, phi_at) = (oracle.clone(), e.clone(), Arc::clone(&phi_at));
        move |big_r: f64| -> Result<f64> {
            let phi = phi_at(big_r)?;
            let along = o.eval(&e.scale_real(big_r.sqrt()), &e, &e)?.re;
            Ok((along - phi) / big_r)
        }
    };
    let phi = move |big_r: f64| phi_at(big_r);
    Ok(RiemannProfile::new(
        Profile::<Fn1>::from_fn(phi),
        Profile::<Fn1>::from_fn(psi),
        domain,
    ))
}

#[derive(Debug, Clone)]
pub struct RoundtripReport {
    pub max_deviation: f64,
    pub witness: Option<(Vector, Vector)>,
    pub samples: usize,
    pub passed: bool,
}

/// Which stratum of pairs a sample is drawn from.
fn sample_direction<R: Rng + ?Sized>(i: usize, g: &Vector, rng: &mut R) -> Vector {
    let (dim, field) = (g.dim(), g.field());
    match i % 4 {
        // collinear: h = c g
        0 => g.scale_unchecked(random_nonzero_scalar(field, rng)),
        // orthogonal: h perpendicular to g
        1 => {
            let v = random_vector(dim, field, rng);
            let gg = norm(g).powi(2);
            let c = crate::linalg::inner_unchecked(&v, g) / gg;
            v.axpy(-c, g)
        }
        _ => random_vector(dim, field, rng),
    }
}

/// Compares the oracle with a reconstructed spec on seeded pairs, always
/// including collinear and orthogonal pairs. Deviation is
/// `|a - b| / (1 + |a|)` with `a` the oracle value.
pub fn roundtrip_check(
    oracle: &MetricOracle,
    spec: &MetricSpec,
    n_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<RoundtripReport> {
    let mut rep = RoundtripReport {
        max_deviation: 0.0,
        witness: None,
        samples: 0,
        passed: true,
    };
    for i in 0..n_samples {
        let mut rng = rng_from_seed(derive_seed(seed, i as u64));
        let g = spec.sample_base_point(&mut rng);
        if !oracle.domain.contains(norm(&g)) {
            continue;
        }
        let h = sample_direction(i, &g, &mut rng);
        let a = oracle.eval(&g, &h)?;
        let b = eval_finsler(spec, &g, &h)?;
        let dev = (a - b).abs() / (1.0 + a.abs());
        rep.samples += 1;
        if dev > rep.max_deviation {
            rep.max_deviation = dev;
            rep.witness = Some((g, h));
        }
    }
    rep.passed = rep.max_deviation <= tol;
    Ok(rep)
}

#[derive(Debug, Clone)]
pub struct SesquiRoundtripReport {
    pub max_deviation: f64,
    pub witness: Option<(Vector, Vector, Vector)>,
    pub samples: usize,
    pub passed: bool,
}

/// Compares a Hermitean oracle with `sigma` rebuilt from `(phi, psi)` on
/// seeded triples; `f` and `h` cycle through collinear, orthogonal and
/// general positions relative to `g`.
pub fn roundtrip_check_sesqui(
    oracle: &SesquiOracle,
    profile: &RiemannProfile,
    n_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<SesquiRoundtripReport> {
    let mut rep = SesquiRoundtripReport {
        max_deviation: 0.0,
        witness: None,
        samples: 0,
        passed: true,
    };
    for i in 0..n_samples {
        let mut rng = rng_from_seed(derive_seed(seed, i as u64));
        let g = random_unit_vector(oracle.dim, oracle.field, &mut rng)
            .scale_real(oracle.domain.sample(&mut rng));
        let f = sample_direction(i, &g, &mut rng);
        let h = sample_direction(i / 4, &g, &mut rng);
        let a = oracle.eval(&g, &f, &h)?;
        let b = eval_sesquilinear(profile, &g, &f, &h)?;
        let dev = (a - b).norm() / (1.0 + a.norm());
        rep.samples += 1;
        if dev > rep.max_deviation {
            rep.max_deviation = dev;
            rep.witness = Some((g, f, h));
        }
    }
    rep.passed = rep.max_deviation <= tol;
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaRow {
    pub r: f64,
    pub tau: f64,
    pub theta_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiPsiRow {
    pub r: f64,
    pub phi: f64,
    pub psi: f64,
}

/// Snapshot of `theta` on `r_values x {tau_j}` with `n_tau` angles spread
/// evenly over `[0, pi/2]`.
pub fn tabulate_theta(
    theta: &ThetaProfile,
    r_values: &[f64],
    n_tau: usize,
) -> Result<Vec<ThetaRow>> {
    let n_tau = n_tau.max(2);
    let mut rows = Vec::with_capacity(r_values.len() * n_tau);
    for &r in r_values {
        for j in 0..n_tau {
            let tau = FRAC_PI_2 * j as f64 / (n_tau - 1) as f64;
            rows.push(ThetaRow {
                r,
                tau,
                theta_value: theta.call(r, tau)?,
            });
        }
    }
    Ok(rows)
}

pub fn tabulate_phi_psi(profile: &RiemannProfile, r_values: &[f64]) -> Result<Vec<PhiPsiRow>> {
    r_values
        .iter()
        .map(|&r| {
            Ok(PhiPsiRow {
                r,
                phi: profile.phi(r)?,
                psi: profile.psi(r)?,
            })
        })
        .collect()
}
