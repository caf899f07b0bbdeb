//! Metric families built from canonical profiles, their evaluation, and the
//! pointwise criteria: positive definiteness, the Kaehler condition,
//! homothety invariance and sampled profile validation.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{DomainDoc, RadiusDomain};
use crate::error::{Error, Result};
use crate::linalg::{
    angle_from_pq, canonical_invariants_unchecked, derive_seed, inner_unchecked, norm,
    random_scalar, random_unit_vector, random_vector, rng_from_seed, Field, Vector,
};
use crate::profile::{
    NonSymLambdaProfile, RiemannProfile, SymLambdaProfile, ThetaProfile, VarthetaProfile,
};

/// A black-box Finsler function `(g, h) -> rho_g(h)`.
pub type FinslerFn = dyn Fn(&Vector, &Vector) -> Result<f64> + Send + Sync;

#[derive(Clone)]
pub enum MetricKind {
    FromLambda(SymLambdaProfile),
    FromTheta(ThetaProfile),
    FromNonSymLambda(NonSymLambdaProfile),
    /// Induced Finsler metric `sign(v) sqrt(|v|)` of `v = sigma_g(h, h)`.
    FromRiemann(RiemannProfile),
    /// `rho_g(h) = |h| / |g| * vartheta(angle(g, h))`.
    CongruenceInvariant(VarthetaProfile),
    /// Induced Finsler form of the Fubini-Study metric on `F^n \ {0}`.
    FubiniStudy,
    Euclidean,
    /// `b |g| |h| sin(angle(g, h))`, the parallelogram area in dimension 2.
    AreaDim2 {
        b: f64,
    },
    /// `rho_0(h) = b |h|` at the origin, `inner` elsewhere.
    ZeroExtended {
        b: f64,
        inner: Box<MetricSpec>,
    },
    /// Arbitrary function, not necessarily invariant.
    Custom(Arc<FinslerFn>),
}

impl fmt::Debug for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricKind::FromLambda(l) => f.debug_tuple("FromLambda").field(l).finish(),
            MetricKind::FromTheta(t) => f.debug_tuple("FromTheta").field(t).finish(),
            MetricKind::FromNonSymLambda(l) => f.debug_tuple("FromNonSymLambda").field(l).finish(),
            MetricKind::FromRiemann(p) => f.debug_tuple("FromRiemann").field(p).finish(),
            MetricKind::CongruenceInvariant(v) => {
                f.debug_tuple("CongruenceInvariant").field(v).finish()
            }
            MetricKind::FubiniStudy => f.write_str("FubiniStudy"),
            MetricKind::Euclidean => f.write_str("Euclidean"),
            MetricKind::AreaDim2 { b } => f.debug_struct("AreaDim2").field("b", b).finish(),
            MetricKind::ZeroExtended { b, inner } => f
                .debug_struct("ZeroExtended")
                .field("b", b)
                .field("inner", inner)
                .finish(),
            MetricKind::Custom(_) => f.write_str("Custom"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MetricSpec {
    kind: MetricKind,
    domain: RadiusDomain,
    field: Field,
    dim: usize,
}

impl MetricSpec {
    pub fn new(kind: MetricKind, dim: usize, field: Field, domain: RadiusDomain) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionTooSmall { min: 1, actual: 0 });
        }
        match &kind {
            MetricKind::AreaDim2 { .. } if dim != 2 => {
                return Err(Error::InvalidSpec("area metric requires dim = 2".into()));
            }
            MetricKind::ZeroExtended { inner, .. } => {
                if !domain.includes_zero() {
                    return Err(Error::InvalidSpec(
                        "zero-extended metric needs a domain containing 0".into(),
                    ));
                }
                if inner.domain.includes_zero() {
                    return Err(Error::InvalidSpec(
                        "zero-extended metric wraps a metric whose domain excludes 0".into(),
                    ));
                }
                if inner.dim != dim || inner.field != field {
                    return Err(Error::InvalidSpec(
                        "zero-extended metric and its inner metric disagree on dim or field".into(),
                    ));
                }
            }
            _ => {}
        }
        Ok(MetricSpec {
            kind,
            domain,
            field,
            dim,
        })
    }

    fn on_punctured(kind: MetricKind, dim: usize, field: Field) -> Result<Self> {
        Self::new(kind, dim, field, RadiusDomain::positive())
    }

    pub fn euclidean(dim: usize, field: Field) -> Result<Self> {
        Self::on_punctured(MetricKind::Euclidean, dim, field)
    }

    pub fn fubini_study(dim: usize, field: Field) -> Result<Self> {
        Self::on_punctured(MetricKind::FubiniStudy, dim, field)
    }

    /// Fubini-Study as the induced metric of its `(phi, psi)` profile.
    pub fn fubini_study_riemann(dim: usize, field: Field) -> Result<Self> {
        Self::from_riemann(RiemannProfile::fubini_study(), dim, field)
    }

    /// `rho_g(h) = |h| / |g|`.
    pub fn norm_quotient(dim: usize, field: Field) -> Result<Self> {
        Self::congruence_invariant(VarthetaProfile::constant(1.0), dim, field)
    }

    pub fn area(b: f64, field: Field) -> Result<Self> {
        Self::on_punctured(MetricKind::AreaDim2 { b }, 2, field)
    }

    pub fn from_lambda(profile: SymLambdaProfile, dim: usize, field: Field) -> Result<Self> {
        Self::on_punctured(MetricKind::FromLambda(profile), dim, field)
    }

    pub fn from_theta(profile: ThetaProfile, dim: usize, field: Field) -> Result<Self> {
        Self::on_punctured(MetricKind::FromTheta(profile), dim, field)
    }

    pub fn from_nonsym_lambda(
        profile: NonSymLambdaProfile,
        dim: usize,
        field: Field,
    ) -> Result<Self> {
        Self::on_punctured(MetricKind::FromNonSymLambda(profile), dim, field)
    }

    /// The metric's radius domain is the square root of the profile's domain.
    pub fn from_riemann(profile: RiemannProfile, dim: usize, field: Field) -> Result<Self> {
        let domain = profile.domain.sqrt();
        Self::new(MetricKind::FromRiemann(profile), dim, field, domain)
    }

    pub fn congruence_invariant(
        vartheta: VarthetaProfile,
        dim: usize,
        field: Field,
    ) -> Result<Self> {
        Self::on_punctured(MetricKind::CongruenceInvariant(vartheta), dim, field)
    }

    pub fn zero_extended(b: f64, inner: MetricSpec) -> Result<Self> {
        let domain = inner.domain.with_zero(true)?;
        let (dim, field) = (inner.dim, inner.field);
        Self::new(
            MetricKind::ZeroExtended {
                b,
                inner: Box::new(inner),
            },
            dim,
            field,
            domain,
        )
    }

    pub fn custom(
        f: Arc<FinslerFn>,
        dim: usize,
        field: Field,
        domain: RadiusDomain,
    ) -> Result<Self> {
        Self::new(MetricKind::Custom(f), dim, field, domain)
    }

    /// Replaces the radius domain; for Hermitean profiles the profile's
    /// squared-norm domain follows.
    pub fn with_domain(mut self, domain: RadiusDomain) -> Result<Self> {
        if let MetricKind::FromRiemann(p) = &mut self.kind {
            p.domain = domain.squared();
        }
        Self::new(self.kind, self.dim, self.field, domain)
    }

    pub fn kind(&self) -> &MetricKind {
        &self.kind
    }

    pub fn domain(&self) -> &RadiusDomain {
        &self.domain
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Whether `rho_g(t h) = |t| rho_g(h)` holds for every scalar `t`, as
    /// opposed to `t >= 0` only. Unknown for custom functions.
    pub fn is_symmetric(&self) -> bool {
        match &self.kind {
            MetricKind::FromNonSymLambda(_) | MetricKind::Custom(_) => false,
            MetricKind::ZeroExtended { inner, .. } => inner.is_symmetric(),
            _ => true,
        }
    }

    /// The `(phi, psi)` profile for metrics induced by a Hermitean form.
    pub fn riemann_profile(&self) -> Option<RiemannProfile> {
        match &self.kind {
            MetricKind::FromRiemann(p) => Some(p.clone()),
            MetricKind::FubiniStudy => Some(RiemannProfile::fubini_study()),
            MetricKind::Euclidean => Some(RiemannProfile::euclidean()),
            _ => None,
        }
    }

    pub(crate) fn check_vector(&self, v: &Vector) -> Result<()> {
        if v.field() != self.field {
            return Err(Error::FieldMismatch(self.field, v.field()));
        }
        if v.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: v.dim(),
            });
        }
        Ok(())
    }

    /// Random base point with radius drawn from the domain.
    pub fn sample_base_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        let r = self.domain.sample(rng);
        random_unit_vector(self.dim, self.field, rng).scale_real(r)
    }
}

/// Sum `a + b`, snapped to zero when it is below the rounding floor of its
/// operands.
fn cancel_sum(a: f64, b: f64) -> f64 {
    let s = a + b;
    if s.abs() <= 8.0 * f64::EPSILON * (a.abs() + b.abs()) {
        0.0
    } else {
        s
    }
}

fn signed_sqrt(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v.signum() * v.abs().sqrt()
    }
}

/// `sigma_g(h, h)` from `(phi, psi)` at `R = |g|^2`, written as
/// `phi |h_perp|^2 + (phi + R psi) |<h,g>|^2 / R` so that the cancellation
/// for degenerate profiles happens on scalars rather than on vectors.
fn riemann_quadratic(profile: &RiemannProfile, r: f64, p: f64, q: f64) -> Result<f64> {
    let big_r = r * r;
    if !profile.domain.contains(big_r) {
        return Err(Error::OutOfDomain(r));
    }
    let phi = profile.phi(big_r)?;
    let psi = profile.psi(big_r)?;
    let radial = cancel_sum(phi, big_r * psi);
    let perp2 = (q / r) * (q / r);
    let along2 = (p / r) * (p / r);
    Ok(cancel_sum(phi * perp2, radial * along2))
}

/// `rho_g(h)` for the given metric.
pub fn eval_finsler(spec: &MetricSpec, g: &Vector, h: &Vector) -> Result<f64> {
    spec.check_vector(g)?;
    spec.check_vector(h)?;
    let r = norm(g);
    if !spec.domain.contains(r) {
        return Err(Error::OutOfDomain(r));
    }
    eval_in_domain(spec, g, h, r)
}

fn eval_in_domain(spec: &MetricSpec, g: &Vector, h: &Vector, r: f64) -> Result<f64> {
    if let MetricKind::ZeroExtended { b, inner } = &spec.kind {
        return if r == 0.0 {
            Ok(b * norm(h))
        } else {
            eval_in_domain(inner, g, h, r)
        };
    }
    if let MetricKind::Custom(f) = &spec.kind {
        return f(g, h);
    }
    if r == 0.0 {
        return Err(Error::OutOfDomain(0.0));
    }
    let (r, p, q) = canonical_invariants_unchecked(g, h, r);
    Ok(match &spec.kind {
        MetricKind::Euclidean => norm(h),
        MetricKind::FubiniStudy => q / (r * r),
        MetricKind::AreaDim2 { b } => b * q,
        MetricKind::FromLambda(l) => l.call(r, p, q)?,
        MetricKind::FromTheta(t) => {
            let hn = norm(h);
            if hn == 0.0 {
                0.0
            } else {
                hn * t.call(r, angle_from_pq(p, q))?
            }
        }
        MetricKind::CongruenceInvariant(v) => {
            let hn = norm(h);
            if hn == 0.0 {
                0.0
            } else {
                hn / r * v.call(angle_from_pq(p, q))?
            }
        }
        MetricKind::FromNonSymLambda(l) => l.call(r, inner_unchecked(h, g), q)?,
        MetricKind::FromRiemann(profile) => signed_sqrt(riemann_quadratic(profile, r, p, q)?),
        MetricKind::ZeroExtended { .. } | MetricKind::Custom(_) => unreachable!(),
    })
}

/// `sigma_g(f, h) = phi(|g|^2) <f,h> + psi(|g|^2) <f,g><g,h>`.
pub fn eval_sesquilinear(
    profile: &RiemannProfile,
    g: &Vector,
    f: &Vector,
    h: &Vector,
) -> Result<Complex64> {
    let fh = crate::linalg::inner(f, h)?;
    let fg = crate::linalg::inner(f, g)?;
    let gh = inner_unchecked(g, h);
    let big_r = norm(g).powi(2);
    if big_r == 0.0 || !profile.domain.contains(big_r) {
        return Err(Error::OutOfDomain(big_r.sqrt()));
    }
    Ok(fh * profile.phi(big_r)? + fg * gh * profile.psi(big_r)?)
}

/// Induced Finsler metric of a Hermitean profile, with a flag raised when the
/// form is indefinite somewhere on a sampled grid of the domain.
#[derive(Clone, Debug)]
pub struct InducedFinsler {
    pub spec: MetricSpec,
    pub indefinite_somewhere: bool,
}

pub fn induced_finsler(
    profile: &RiemannProfile,
    dim: usize,
    field: Field,
) -> Result<InducedFinsler> {
    let grid = profile.domain.grid(64);
    let verdicts = check_positive_definite(profile, &grid, PD_DEFAULT_TOL)?;
    let indefinite_somewhere = verdicts.contains(&PdVerdict::Indefinite);
    if indefinite_somewhere {
        log::warn!("induced Finsler metric takes negative values: the form is indefinite");
    }
    Ok(InducedFinsler {
        spec: MetricSpec::from_riemann(profile.clone(), dim, field)?,
        indefinite_somewhere,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PdVerdict {
    PositiveDefinite,
    PsdDegenerate,
    Indefinite,
}

pub const PD_DEFAULT_TOL: f64 = 1e-12;

/// Classifies `sigma_g` for `|g|^2 = r` by the signs of `phi(r)` and
/// `phi(r) + r psi(r)`; values within `tol` of zero count as zero.
pub fn check_positive_definite(
    profile: &RiemannProfile,
    r_samples: &[f64],
    tol: f64,
) -> Result<Vec<PdVerdict>> {
    r_samples
        .iter()
        .map(|&r| {
            if !profile.domain.contains(r) {
                return Err(Error::OutOfDomain(r));
            }
            let phi = profile.phi(r)?;
            let radial = cancel_sum(phi, r * profile.psi(r)?);
            Ok(if phi > tol && radial > tol {
                PdVerdict::PositiveDefinite
            } else if phi >= -tol && radial >= -tol {
                PdVerdict::PsdDegenerate
            } else {
                PdVerdict::Indefinite
            })
        })
        .collect()
}

/// Finite-difference check of `psi = phi'` at each sample. Defaults:
/// `step = max(1e-5, 1e-5 r)` and `tol = 1e-6 (1 + |psi(r)|)`.
pub fn check_kaehler(
    profile: &RiemannProfile,
    r_samples: &[f64],
    fd_step: Option<f64>,
    tol: Option<f64>,
) -> Result<Vec<bool>> {
    r_samples
        .iter()
        .map(|&r| {
            let step = fd_step.unwrap_or_else(|| (1e-5f64).max(1e-5 * r));
            if !(profile.domain.contains(r - step)
                && profile.domain.contains(r)
                && profile.domain.contains(r + step))
            {
                return Err(Error::TooCloseToBoundary { r, step });
            }
            let derivative = (profile.phi(r + step)? - profile.phi(r - step)?) / (2.0 * step);
            let psi = profile.psi(r)?;
            let tol = tol.unwrap_or(1e-6 * (1.0 + psi.abs()));
            Ok((psi - derivative).abs() <= tol)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct HomothetyVerdict {
    pub invariant: bool,
    pub max_deviation: f64,
    pub witness: Option<(Vector, Vector)>,
    pub samples_used: usize,
    pub skipped: usize,
}

/// Tests `rho_{alpha g}(alpha h) = rho_g(h)` on random pairs. Samples whose
/// scaled base point leaves the domain are skipped and counted.
pub fn check_homothety_invariance(
    spec: &MetricSpec,
    alpha: f64,
    n_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<HomothetyVerdict> {
    if !(alpha > 0.0) || alpha == 1.0 || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "homothety coefficient must be positive and different from 1, got {alpha}"
        )));
    }
    let mut out = HomothetyVerdict {
        invariant: true,
        max_deviation: 0.0,
        witness: None,
        samples_used: 0,
        skipped: 0,
    };
    let mut worst: Option<(Vector, Vector)> = None;
    for i in 0..n_samples {
        let mut rng = rng_from_seed(derive_seed(seed, i as u64));
        let g = spec.sample_base_point(&mut rng);
        let h = random_vector(spec.dim, spec.field, &mut rng);
        if !spec.domain.contains(alpha * norm(&g)) {
            out.skipped += 1;
            continue;
        }
        let base = eval_finsler(spec, &g, &h)?;
        let scaled = eval_finsler(spec, &g.scale_real(alpha), &h.scale_real(alpha))?;
        let dev = (scaled - base).abs();
        out.samples_used += 1;
        if dev > out.max_deviation || worst.is_none() {
            out.max_deviation = out.max_deviation.max(dev);
            worst = Some((g, h));
        }
    }
    if out.samples_used == 0 {
        return Err(Error::AllSamplesSkipped(n_samples));
    }
    out.invariant = out.max_deviation <= tol;
    if !out.invariant {
        out.witness = worst;
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ProfileReport {
    pub passed: bool,
    pub homogeneity_violation: f64,
    pub evenness_violation: f64,
    pub non_finite: usize,
    pub eval_errors: usize,
    pub worst: Option<String>,
}

impl ProfileReport {
    fn record(
        &mut self,
        what: &str,
        violation: f64,
        at: impl FnOnce() -> String,
        slot: fn(&mut Self) -> &mut f64,
    ) {
        let s = slot(self);
        if violation > *s {
            *s = violation;
            self.worst = Some(format!("{what} at {}", at()));
        }
    }
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

/// Samples the structural hypotheses of the underlying profile: positive
/// homogeneity and evenness for lambda profiles, finiteness for the rest.
/// The `(p, q)` grid is log-radial over the full circle; `t` ranges over
/// `{0, 1/2, 1, 2}`.
pub fn validate_profile(spec: &MetricSpec, grid_size: usize, seed: u64, tol: f64) -> ProfileReport {
    let mut rep = ProfileReport::default();
    let mut rng = rng_from_seed(seed);
    let n = grid_size.max(2);
    let radii = spec.domain.grid(n);
    let ts = [0.0, 0.5, 1.0, 2.0];
    let pq_grid: Vec<(f64, f64)> = (0..n)
        .flat_map(|i| {
            let rad = (-3.0 + 6.0 * i as f64 / (n - 1) as f64).exp();
            (0..n).map(move |j| (rad, j))
        })
        .map(|(rad, j)| {
            let ang = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / n as f64;
            (rad * ang.cos(), rad * ang.sin())
        })
        .collect();
    let check_value = |rep: &mut ProfileReport, v: Result<f64>| -> Option<f64> {
        match v {
            Ok(x) if x.is_finite() => Some(x),
            Ok(_) => {
                rep.non_finite += 1;
                None
            }
            Err(_) => {
                rep.eval_errors += 1;
                None
            }
        }
    };
    match &spec.kind {
        MetricKind::FromLambda(l) => {
            for &r in &radii {
                for &(p, q) in &pq_grid {
                    let Some(base) = check_value(&mut rep, l.call(r, p, q)) else {
                        continue;
                    };
                    for &t in &ts {
                        if let Some(v) = check_value(&mut rep, l.call(r, t * p, t * q)) {
                            let gap = rel_gap(v, t.powf(l.alpha()) * base);
                            rep.record(
                                "homogeneity",
                                gap,
                                || format!("r={r}, p={p}, q={q}, t={t}"),
                                |s| &mut s.homogeneity_violation,
                            );
                        }
                    }
                    for (pp, qq) in [(-p, q), (p, -q)] {
                        if let Some(v) = check_value(&mut rep, l.call(r, pp, qq)) {
                            let gap = rel_gap(v, base);
                            rep.record(
                                "evenness",
                                gap,
                                || format!("r={r}, p={p}, q={q}"),
                                |s| &mut s.evenness_violation,
                            );
                        }
                    }
                }
            }
        }
        MetricKind::FromNonSymLambda(l) => {
            for &r in &radii {
                for &(p, q) in &pq_grid {
                    let phase = rng.random_range(0.0..std::f64::consts::TAU);
                    let pc = match spec.field {
                        Field::Real => Complex64::new(p, 0.0),
                        Field::Complex => Complex64::from_polar(p, phase),
                    };
                    let Some(base) = check_value(&mut rep, l.call(r, pc, q)) else {
                        continue;
                    };
                    for &t in &ts {
                        for sign in [1.0, -1.0] {
                            if let Some(v) = check_value(&mut rep, l.call(r, pc * t, sign * t * q))
                            {
                                let gap = rel_gap(v, t * base);
                                if sign > 0.0 {
                                    rep.record(
                                        "homogeneity",
                                        gap,
                                        || format!("r={r}, p={pc}, q={q}, t={t}"),
                                        |s| &mut s.homogeneity_violation,
                                    );
                                } else {
                                    rep.record(
                                        "evenness in q",
                                        gap,
                                        || format!("r={r}, p={pc}, q={q}, t={t}"),
                                        |s| &mut s.evenness_violation,
                                    );
                                }
                            }
                        }
                    }
                }
            }
        }
        MetricKind::FromTheta(t) => {
            for &r in &radii {
                for j in 0..n {
                    let tau = FRAC_PI_2 * j as f64 / (n - 1) as f64;
                    check_value(&mut rep, t.call(r, tau));
                }
            }
        }
        MetricKind::CongruenceInvariant(v) => {
            for j in 0..n {
                let tau = FRAC_PI_2 * j as f64 / (n - 1) as f64;
                check_value(&mut rep, v.call(tau));
            }
        }
        MetricKind::FromRiemann(p) => {
            for r in p.domain.grid(n) {
                check_value(&mut rep, p.phi(r));
                check_value(&mut rep, p.psi(r));
            }
        }
        MetricKind::ZeroExtended { inner, .. } => {
            return validate_profile(inner, grid_size, seed, tol)
        }
        MetricKind::FubiniStudy
        | MetricKind::Euclidean
        | MetricKind::AreaDim2 { .. }
        | MetricKind::Custom(_) => {}
    }
    rep.passed = rep.homogeneity_violation <= tol
        && rep.evenness_violation <= tol
        && rep.non_finite == 0
        && rep.eval_errors == 0;
    rep
}

/// Random scalar in `field` suitable for scaling-law checks.
pub(crate) fn random_nonzero_scalar<R: Rng + ?Sized>(field: Field, rng: &mut R) -> Complex64 {
    loop {
        let c = random_scalar(field, rng);
        if c.norm() > 1e-3 {
            return c;
        }
    }
}

// ---------------------------------------------------------------------------
// JSON

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SpecDoc {
    family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    field: Option<Field>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<DomainDoc>,
    #[serde(default)]
    params: serde_json::Value,
}

fn param_str<'a>(params: &'a serde_json::Value, key: &str, family: &str) -> Result<&'a str> {
    params
        .get(key)
        .and_then(|v| v.as_str())
        .ok_or_else(|| Error::InvalidSpec(format!("family '{family}' needs string param '{key}'")))
}

fn param_f64(params: &serde_json::Value, key: &str, family: &str) -> Result<f64> {
    params
        .get(key)
        .and_then(|v| v.as_f64())
        .ok_or_else(|| Error::InvalidSpec(format!("family '{family}' needs numeric param '{key}'")))
}

impl MetricSpec {
    /// Parses the JSON object form; `dim` and `field` fall back to the given
    /// defaults when absent.
    pub fn from_json_with_defaults(
        text: &str,
        dim: Option<usize>,
        field: Option<Field>,
    ) -> Result<Self> {
        let doc: SpecDoc = serde_json::from_str(text)?;
        Self::from_doc(doc, dim, field)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_json_with_defaults(text, None, None)
    }

    fn from_doc(doc: SpecDoc, dim: Option<usize>, field: Option<Field>) -> Result<Self> {
        let dim = doc
            .dim
            .or(dim)
            .ok_or_else(|| Error::InvalidSpec("missing 'dim'".into()))?;
        let field = doc.field.or(field).unwrap_or(Field::Real);
        let domain = match doc.domain {
            Some(d) => Some(RadiusDomain::try_from(d)?),
            None => None,
        };
        let fam = doc.family.as_str();
        let params = &doc.params;
        let with_domain = |spec: MetricSpec| match &domain {
            Some(d) => spec.with_domain(d.clone()),
            None => Ok(spec),
        };
        match fam {
            "euclidean" => with_domain(Self::euclidean(dim, field)?),
            "fubini-study" => with_domain(Self::fubini_study(dim, field)?),
            "fubini-study-riemann" => with_domain(Self::fubini_study_riemann(dim, field)?),
            "norm-quotient" => with_domain(Self::norm_quotient(dim, field)?),
            "area" => {
                if dim != 2 {
                    return Err(Error::InvalidSpec("area metric requires dim = 2".into()));
                }
                with_domain(Self::area(
                    params.get("b").and_then(|v| v.as_f64()).unwrap_or(1.0),
                    field,
                )?)
            }
            "lambda" => {
                let alpha = params.get("alpha").and_then(|v| v.as_f64()).unwrap_or(1.0);
                let l = SymLambdaProfile::from_expr(param_str(params, "expr", fam)?, alpha)?;
                with_domain(Self::from_lambda(l, dim, field)?)
            }
            "theta" => {
                let t = ThetaProfile::from_expr(param_str(params, "expr", fam)?)?;
                with_domain(Self::from_theta(t, dim, field)?)
            }
            "nonsym-lambda" => {
                let l = NonSymLambdaProfile::from_expr(param_str(params, "expr", fam)?)?;
                with_domain(Self::from_nonsym_lambda(l, dim, field)?)
            }
            "congruence-invariant" => {
                let v = VarthetaProfile::from_expr(param_str(params, "vartheta", fam)?, "tau")?;
                with_domain(Self::congruence_invariant(v, dim, field)?)
            }
            "riemann" | "congruence-riemann" => {
                let norm_domain = domain.clone().unwrap_or_default();
                let profile = if fam == "riemann" {
                    RiemannProfile::from_exprs(
                        param_str(params, "phi", fam)?,
                        param_str(params, "psi", fam)?,
                        norm_domain.squared(),
                    )?
                } else {
                    let mut p = crate::profile::congruence_invariant_riemann(
                        param_f64(params, "a", fam)?,
                        param_f64(params, "b", fam)?,
                    );
                    p.domain = norm_domain.squared();
                    p
                };
                Self::from_riemann(profile, dim, field)
            }
            "zero-extended" => {
                let b = param_f64(params, "b", fam)?;
                let inner_doc: SpecDoc =
                    serde_json::from_value(params.get("inner").cloned().ok_or_else(|| {
                        Error::InvalidSpec("zero-extended needs 'inner'".into())
                    })?)?;
                let inner = Self::from_doc(inner_doc, Some(dim), Some(field))?;
                Self::zero_extended(b, inner)
            }
            other => Err(Error::InvalidSpec(format!(
                "unknown metric family '{other}'"
            ))),
        }
    }

    fn to_doc(&self) -> Result<SpecDoc> {
        let native = || {
            Error::InvalidSpec("metric is backed by a native function and has no JSON form".into())
        };
        let (family, params) = match &self.kind {
            MetricKind::Euclidean => ("euclidean", serde_json::json!({})),
            MetricKind::FubiniStudy => ("fubini-study", serde_json::json!({})),
            MetricKind::AreaDim2 { b } => ("area", serde_json::json!({ "b": b })),
            MetricKind::FromLambda(l) => (
                "lambda",
                serde_json::json!({ "expr": l.source().ok_or_else(native)?, "alpha": l.alpha() }),
            ),
            MetricKind::FromTheta(t) => (
                "theta",
                serde_json::json!({ "expr": t.source().ok_or_else(native)? }),
            ),
            MetricKind::FromNonSymLambda(l) => (
                "nonsym-lambda",
                serde_json::json!({ "expr": l.source().ok_or_else(native)? }),
            ),
            MetricKind::CongruenceInvariant(v) => (
                "congruence-invariant",
                serde_json::json!({ "vartheta": v.source().ok_or_else(native)? }),
            ),
            MetricKind::FromRiemann(p) => (
                "riemann",
                serde_json::json!({
                    "phi": p.phi.source().ok_or_else(native)?,
                    "psi": p.psi.source().ok_or_else(native)?,
                }),
            ),
            MetricKind::ZeroExtended { b, inner } => (
                "zero-extended",
                serde_json::json!({ "b": b, "inner": serde_json::to_value(inner.to_doc()?)? }),
            ),
            MetricKind::Custom(_) => return Err(native()),
        };
        Ok(SpecDoc {
            family: family.to_string(),
            dim: Some(self.dim),
            field: Some(self.field),
            domain: Some(DomainDoc::from(&self.domain)),
            params,
        })
    }

    pub fn to_json_value(&self) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(self.to_doc()?)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_doc()?)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_unitary;
    use approx::assert_abs_diff_eq;

    fn rv(x: &[f64]) -> Vector {
        Vector::real(x).unwrap()
    }

    #[test]
    fn evaluation_examples() {
        let e3 = MetricSpec::euclidean(3, Field::Real).unwrap();
        assert_eq!(
            eval_finsler(&e3, &rv(&[1.0, 2.0, 0.0]), &rv(&[3.0, 4.0, 0.0])).unwrap(),
            5.0
        );

        let fs = MetricSpec::fubini_study(2, Field::Real).unwrap();
        assert_abs_diff_eq!(
            eval_finsler(&fs, &rv(&[1.0, 0.0]), &rv(&[0.0, 2.0])).unwrap(),
            2.0,
            epsilon = 1e-15
        );
        let fsr = MetricSpec::fubini_study_riemann(2, Field::Real).unwrap();
        assert_abs_diff_eq!(
            eval_finsler(&fsr, &rv(&[1.0, 0.0]), &rv(&[0.0, 2.0])).unwrap(),
            2.0,
            epsilon = 1e-15
        );

        let z =
            MetricSpec::zero_extended(3.0, MetricSpec::euclidean(2, Field::Real).unwrap()).unwrap();
        assert_eq!(
            eval_finsler(&z, &rv(&[0.0, 0.0]), &rv(&[1.0, 0.0])).unwrap(),
            3.0
        );
        assert_eq!(
            eval_finsler(&z, &rv(&[1.0, 0.0]), &rv(&[1.0, 0.0])).unwrap(),
            1.0
        );

        let one =
            MetricSpec::from_theta(ThetaProfile::from_expr("1").unwrap(), 3, Field::Real).unwrap();
        let h = rv(&[1.0, -2.0, 2.0]);
        for g in [rv(&[1.0, 0.0, 0.0]), rv(&[0.3, 5.0, -1.0])] {
            assert_abs_diff_eq!(eval_finsler(&one, &g, &h).unwrap(), 3.0, epsilon = 1e-15);
        }
        assert_eq!(
            eval_finsler(&one, &rv(&[1.0, 0.0, 0.0]), &rv(&[0.0; 3])).unwrap(),
            0.0
        );
    }

    #[test]
    fn evaluation_errors() {
        let e = MetricSpec::euclidean(2, Field::Real).unwrap();
        assert!(matches!(
            eval_finsler(&e, &rv(&[0.0, 0.0]), &rv(&[1.0, 0.0])),
            Err(Error::OutOfDomain(_))
        ));
        assert!(matches!(
            eval_finsler(&e, &rv(&[1.0, 0.0]), &rv(&[1.0])),
            Err(Error::DimensionMismatch { .. })
        ));
        let restricted = e
            .with_domain(RadiusDomain::new(vec![(1.0, 2.0)], false).unwrap())
            .unwrap();
        assert!(matches!(
            eval_finsler(&restricted, &rv(&[3.0, 0.0]), &rv(&[1.0, 0.0])),
            Err(Error::OutOfDomain(r)) if r == 3.0
        ));
    }

    #[test]
    fn spec_invariants_enforced() {
        assert!(MetricSpec::new(
            MetricKind::AreaDim2 { b: 1.0 },
            3,
            Field::Real,
            RadiusDomain::positive()
        )
        .is_err());
        let inner = MetricSpec::euclidean(2, Field::Real).unwrap();
        assert!(MetricSpec::new(
            MetricKind::ZeroExtended {
                b: 1.0,
                inner: Box::new(inner.clone())
            },
            2,
            Field::Real,
            RadiusDomain::positive()
        )
        .is_err());
        let zero_inner = inner.with_domain(RadiusDomain::everything()).unwrap();
        assert!(MetricSpec::zero_extended(1.0, zero_inner).is_err());
    }

    #[test]
    fn sesquilinear_examples() {
        let g = rv(&[1.0, 0.0]);
        let f = rv(&[0.0, 1.0]);
        let e = RiemannProfile::euclidean();
        let a = rv(&[1.0, 2.0]);
        let b = rv(&[-3.0, 0.5]);
        assert_abs_diff_eq!(
            eval_sesquilinear(&e, &g, &a, &b).unwrap().re,
            -2.0,
            epsilon = 1e-15
        );

        let fs = RiemannProfile::fubini_study();
        assert_abs_diff_eq!(
            eval_sesquilinear(&fs, &g, &f, &f).unwrap().re,
            1.0,
            epsilon = 1e-15
        );
        let gg = rv(&[0.6, -1.7]);
        assert!(eval_sesquilinear(&fs, &gg, &gg, &gg).unwrap().norm() < 1e-15);
        assert!(eval_sesquilinear(&fs, &rv(&[0.0, 0.0]), &f, &f).is_err());
    }

    #[test]
    fn induced_values_and_sign_convention() {
        let e = induced_finsler(&RiemannProfile::euclidean(), 2, Field::Real).unwrap();
        assert!(!e.indefinite_somewhere);
        assert_eq!(
            eval_finsler(&e.spec, &rv(&[1.0, 1.0]), &rv(&[3.0, 4.0])).unwrap(),
            5.0
        );

        let fs = induced_finsler(&RiemannProfile::fubini_study(), 3, Field::Real).unwrap();
        let g = rv(&[0.2, 1.0, -3.0]);
        assert_eq!(eval_finsler(&fs.spec, &g, &g).unwrap(), 0.0);

        let neg = RiemannProfile::from_exprs("-1", "0", RadiusDomain::positive()).unwrap();
        let ind = induced_finsler(&neg, 2, Field::Real).unwrap();
        assert!(ind.indefinite_somewhere);
        assert_abs_diff_eq!(
            eval_finsler(&ind.spec, &rv(&[0.0, 1.0]), &rv(&[1.0, 0.0])).unwrap(),
            -1.0
        );
    }

    #[test]
    fn pd_examples() {
        let rs = [0.5, 1.0, 7.0];
        let v = check_positive_definite(&RiemannProfile::euclidean(), &rs, PD_DEFAULT_TOL).unwrap();
        assert!(v.iter().all(|x| *x == PdVerdict::PositiveDefinite));
        let v =
            check_positive_definite(&RiemannProfile::fubini_study(), &rs, PD_DEFAULT_TOL).unwrap();
        assert!(v.iter().all(|x| *x == PdVerdict::PsdDegenerate));
        let p = RiemannProfile::from_exprs("1", "-2/r", RadiusDomain::positive()).unwrap();
        assert_eq!(
            check_positive_definite(&p, &[1.0], PD_DEFAULT_TOL).unwrap(),
            vec![PdVerdict::Indefinite]
        );
        assert!(check_positive_definite(&p, &[0.0], PD_DEFAULT_TOL).is_err());
    }

    #[test]
    fn kaehler_examples() {
        let rs: Vec<f64> = (1..20).map(|i| 0.1 * i as f64).collect();
        assert!(
            check_kaehler(&RiemannProfile::fubini_study(), &rs, None, None)
                .unwrap()
                .iter()
                .all(|b| *b)
        );
        assert!(check_kaehler(&RiemannProfile::euclidean(), &rs, None, None)
            .unwrap()
            .iter()
            .all(|b| *b));
        let p = RiemannProfile::from_exprs("1", "1", RadiusDomain::positive()).unwrap();
        assert!(check_kaehler(&p, &rs, None, None)
            .unwrap()
            .iter()
            .all(|b| !*b));
        assert!(matches!(
            check_kaehler(&p, &[1e-6], None, None),
            Err(Error::TooCloseToBoundary { .. })
        ));
    }

    #[test]
    fn congruence_family_kaehler_iff_a_eq_minus_b() {
        let rs = [0.3, 1.0, 4.0];
        for (a, b) in [
            (1.0, -1.0),
            (2.0, -2.0),
            (1.0, 0.0),
            (1.0, 1.0),
            (-0.5, 0.5),
        ] {
            let p = crate::profile::congruence_invariant_riemann(a, b);
            let ok = check_kaehler(&p, &rs, None, None)
                .unwrap()
                .iter()
                .all(|x| *x);
            assert_eq!(ok, a == -b, "a={a}, b={b}");
        }
        let p = crate::profile::congruence_invariant_riemann(1.0, 0.0);
        let g = rv(&[0.0, 2.0]);
        let f = rv(&[1.0, 1.0]);
        let h = rv(&[2.0, -1.0]);
        assert_abs_diff_eq!(
            eval_sesquilinear(&p, &g, &f, &h).unwrap().re,
            1.0 / 4.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn homothety_examples() {
        let nq = MetricSpec::norm_quotient(3, Field::Real).unwrap();
        let v = check_homothety_invariance(&nq, 2.0, 200, 1, 1e-12).unwrap();
        assert!(v.invariant && v.witness.is_none());

        let periodic = ThetaProfile::from_expr("(2 + sin(2*pi*log(r)/log(2)))/r").unwrap();
        let spec = MetricSpec::from_theta(periodic, 3, Field::Complex).unwrap();
        let v = check_homothety_invariance(&spec, 2.0, 200, 2, 1e-10).unwrap();
        assert!(v.invariant, "{}", v.max_deviation);

        let e = MetricSpec::euclidean(3, Field::Real).unwrap();
        let v = check_homothety_invariance(&e, 2.0, 50, 3, 1e-10).unwrap();
        assert!(!v.invariant);
        let (_, h) = v.witness.unwrap();
        assert_abs_diff_eq!(v.max_deviation, norm(&h), epsilon = 1e-12);

        assert!(check_homothety_invariance(&e, 1.0, 10, 0, 1e-9).is_err());
        let bounded = e
            .with_domain(RadiusDomain::new(vec![(1.0, 1.5)], false).unwrap())
            .unwrap();
        assert!(matches!(
            check_homothety_invariance(&bounded, 2.0, 10, 0, 1e-9),
            Err(Error::AllSamplesSkipped(10))
        ));
    }

    #[test]
    fn profile_validation_examples() {
        let mk = |text: &str| {
            MetricSpec::from_lambda(
                SymLambdaProfile::from_expr(text, 1.0).unwrap(),
                2,
                Field::Real,
            )
            .unwrap()
        };
        assert!(validate_profile(&mk("sqrt(p^2+q^2)/r"), 12, 0, 1e-9).passed);
        let rep = validate_profile(&mk("p+q"), 12, 0, 1e-9);
        assert!(!rep.passed && rep.evenness_violation > 0.1 && rep.homogeneity_violation <= 1e-9);
        let rep = validate_profile(&mk("p^2+q^2"), 12, 0, 1e-9);
        assert!(!rep.passed && rep.homogeneity_violation > 0.1);
        let rep = validate_profile(&mk("log(p)"), 6, 0, 1e-9);
        assert!(!rep.passed && rep.eval_errors > 0);
    }

    #[test]
    fn isometry_invariance_of_families() {
        for field in [Field::Real, Field::Complex] {
            let specs = vec![
                MetricSpec::euclidean(3, field).unwrap(),
                MetricSpec::fubini_study(3, field).unwrap(),
                MetricSpec::fubini_study_riemann(3, field).unwrap(),
                MetricSpec::norm_quotient(3, field).unwrap(),
                MetricSpec::from_theta(ThetaProfile::from_expr("1 + cos(tau)").unwrap(), 3, field)
                    .unwrap(),
                MetricSpec::from_nonsym_lambda(
                    NonSymLambdaProfile::from_expr("sqrt(pre^2+pim^2+q^2) + pre").unwrap(),
                    3,
                    field,
                )
                .unwrap(),
            ];
            let mut rng = rng_from_seed(5);
            for spec in &specs {
                for k in 0..50 {
                    let u = random_unitary(3, field, k).unwrap();
                    let g = spec.sample_base_point(&mut rng);
                    let h = random_vector(3, field, &mut rng);
                    let a = eval_finsler(spec, &g, &h).unwrap();
                    let b =
                        eval_finsler(spec, &u.apply(&g).unwrap(), &u.apply(&h).unwrap()).unwrap();
                    assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{spec:?}");
                }
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let specs = [
            r#"{"family":"euclidean","dim":3,"field":"real"}"#,
            r#"{"family":"theta","dim":2,"field":"complex","params":{"expr":"1+cos(tau)"}}"#,
            r#"{"family":"riemann","dim":2,"params":{"phi":"1/r","psi":"-1/r^2"}}"#,
            r#"{"family":"zero-extended","dim":2,"params":{"b":3,"inner":{"family":"euclidean"}}}"#,
            r#"{"family":"lambda","dim":2,"domain":{"intervals":[[1,2]],"includes_zero":false},"params":{"expr":"abs(p)","alpha":1}}"#,
            r#"{"family":"congruence-riemann","dim":2,"params":{"a":1,"b":-1}}"#,
        ];
        let g = rv(&[1.2, 0.5]);
        let h = rv(&[-0.3, 2.0]);
        for text in specs {
            let spec = MetricSpec::from_json(text).unwrap();
            let again = MetricSpec::from_json(&spec.to_json().unwrap()).unwrap();
            assert_eq!(again.dim(), spec.dim());
            assert_eq!(again.domain(), spec.domain());
            if spec.dim() == 2 && spec.field() == Field::Real {
                assert_eq!(
                    eval_finsler(&spec, &g, &h).unwrap(),
                    eval_finsler(&again, &g, &h).unwrap()
                );
            }
        }
        let z = MetricSpec::from_json(specs[3]).unwrap();
        assert_eq!(
            eval_finsler(&z, &rv(&[0.0, 0.0]), &rv(&[0.0, 2.0])).unwrap(),
            6.0
        );
        assert!(MetricSpec::from_json(r#"{"family":"nope","dim":2}"#).is_err());
        assert!(MetricSpec::from_json(r#"{"family":"area","dim":3}"#).is_err());
        assert!(
            MetricSpec::from_json(r#"{"family":"theta","dim":2,"params":{"expr":"p"}}"#).is_err()
        );
    }
}
