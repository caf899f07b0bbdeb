//! Symmetry tests of linear maps against metrics.
//!
//! `T` is a symmetry of `rho` on `G` when `T G` stays in `G` and
//! `rho_{Tg}(Th) = rho_g(h)` for every `g` in `G` and `h`.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::linalg::{
    derive_seed, gaussian_matrix, haar_rotation, haar_unitary, norm, random_vector, rng_from_seed,
    singular_values, Field, LinearMap, Vector,
};
use crate::metric::{eval_finsler, MetricSpec};

/// Early exit threshold as a multiple of `tol`.
const EARLY_EXIT_FACTOR: f64 = 1e3;

#[derive(Debug, Clone)]
pub struct SymmetryVerdict {
    pub is_symmetry: bool,
    pub max_deviation: f64,
    pub witness: Option<(Vector, Vector)>,
    pub samples_used: usize,
    /// Samples whose image base point left the domain.
    pub skipped: usize,
}

impl SymmetryVerdict {
    /// Probe record: `{spec, map, verdict, max_deviation, witness}`.
    /// `spec` is null for specs without a JSON form.
    pub fn to_json(&self, spec: &MetricSpec, map: &LinearMap) -> serde_json::Value {
        json!({
            "spec": spec.to_json_value().unwrap_or(serde_json::Value::Null),
            "map": map.to_json_value(),
            "verdict": self.is_symmetry,
            "max_deviation": finite_or_null(self.max_deviation),
            "samples_used": self.samples_used,
            "skipped": self.skipped,
            "witness": self.witness.as_ref().map(|(g, h)| json!({
                "g": g.to_json_value(),
                "h": h.to_json_value(),
            })),
        })
    }
}

fn finite_or_null(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        serde_json::Value::Null
    }
}

fn check_map(t: &LinearMap, spec: &MetricSpec) -> Result<()> {
    if t.field() != spec.field() {
        return Err(Error::FieldMismatch(spec.field(), t.field()));
    }
    for n in [t.rows(), t.cols()] {
        if n != spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.dim(),
                actual: n,
            });
        }
    }
    Ok(())
}

fn scan(
    t: &LinearMap,
    spec: &MetricSpec,
    n_samples: usize,
    seed: u64,
    tol: f64,
    early_exit: bool,
) -> Result<SymmetryVerdict> {
    check_map(t, spec)?;
    let mut v = SymmetryVerdict {
        is_symmetry: true,
        max_deviation: 0.0,
        witness: None,
        samples_used: 0,
        skipped: 0,
    };
    let mut worst = None;
    for i in 0..n_samples {
        let mut rng = rng_from_seed(derive_seed(seed, i as u64));
        let g = spec.sample_base_point(&mut rng);
        let h = random_vector(spec.dim(), spec.field(), &mut rng);
        let tg = t.apply_unchecked(&g);
        let dev = if spec.domain().contains(norm(&tg)) {
            let a = eval_finsler(spec, &g, &h)?;
            let b = eval_finsler(spec, &tg, &t.apply_unchecked(&h))?;
            v.samples_used += 1;
            (b - a).abs() / (1.0 + a.abs())
        } else {
            v.skipped += 1;
            f64::INFINITY
        };
        if dev > v.max_deviation || (dev.is_nan() && !v.max_deviation.is_nan()) {
            v.max_deviation = dev;
            worst = Some((g, h));
        }
        if early_exit && !(dev <= EARLY_EXIT_FACTOR * tol) {
            break;
        }
    }
    v.is_symmetry = v.max_deviation <= tol;
    if !v.is_symmetry {
        v.witness = worst;
    }
    Ok(v)
}

/// Checks `rho_{Tg}(Th) = rho_g(h)` on seeded samples; relative deviation
/// `|rho_{Tg}(Th) - rho_g(h)| / (1 + |rho_g(h)|)`. A sample whose image
/// base point leaves the domain counts as an infinite deviation. Stops
/// early once a deviation exceeds `1e3 * tol`.
pub fn is_symmetry(
    t: &LinearMap,
    spec: &MetricSpec,
    n_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<SymmetryVerdict> {
    scan(t, spec, n_samples, seed, tol, true)
}

/// As [`is_symmetry`] but always visits every sample, so `max_deviation`
/// is the true maximum over the sample set.
pub fn symmetry_deviation(
    t: &LinearMap,
    spec: &MetricSpec,
    n_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<SymmetryVerdict> {
    scan(t, spec, n_samples, seed, tol, false)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "class", content = "value", rename_all = "kebab-case")]
pub enum CongruenceClass {
    Isometry,
    /// `c U` with `U` an isometry; holds `c`.
    Congruence(f64),
    /// Holds the singular-value ratio `s_max / s_min` (infinite when singular).
    NotCongruence(f64),
}

/// `T = c U` exactly when all singular values of `T` equal `c`.
pub fn classify_congruence(t: &LinearMap, tol: f64) -> Result<CongruenceClass> {
    if !t.is_square() {
        return Err(Error::DimensionMismatch {
            expected: t.rows(),
            actual: t.cols(),
        });
    }
    let sv = singular_values(t);
    let (smax, smin) = (sv[0], sv[sv.len() - 1]);
    if smax == 0.0 || smin <= 0.0 {
        return Ok(CongruenceClass::NotCongruence(f64::INFINITY));
    }
    if smax - smin > tol * smax {
        return Ok(CongruenceClass::NotCongruence(smax / smin));
    }
    let c = sv.iter().sum::<f64>() / sv.len() as f64;
    if (c - 1.0).abs() <= tol {
        Ok(CongruenceClass::Isometry)
    } else {
        Ok(CongruenceClass::Congruence(c))
    }
}

/// Gaussian map conditioned on `s_max / s_min >= min_sv_ratio` and on being
/// well away from singular.
pub fn random_non_congruence<R: Rng + ?Sized>(
    dim: usize,
    field: Field,
    min_sv_ratio: f64,
    rng: &mut R,
) -> LinearMap {
    loop {
        let t = LinearMap::from_raw(gaussian_matrix(dim, dim, field, rng), field);
        let sv = singular_values(&t);
        let (smax, smin) = (sv[0], sv[dim - 1]);
        if smin > 1e-6 * smax && smax / smin >= min_sv_ratio {
            return t;
        }
    }
}

/// `c U` with `U` Haar and `c` a random unit scalar, times a random
/// positive scale when `scaled` is set.
pub fn random_congruence<R: Rng + ?Sized>(
    dim: usize,
    field: Field,
    scaled: bool,
    rng: &mut R,
) -> LinearMap {
    let u = haar_unitary(dim, field, rng);
    let phase = match field {
        Field::Real => Complex64::new(if rng.random_bool(0.5) { 1.0 } else { -1.0 }, 0.0),
        Field::Complex => Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)),
    };
    let scale = if scaled {
        rng.random_range(-1.5f64..1.5).exp()
    } else {
        1.0
    };
    u.scale_unchecked(phase * scale)
}

#[derive(Debug, Clone)]
pub struct MainProbeReport {
    pub maps_tested: usize,
    /// Every non-congruence map failed the symmetry test.
    pub all_failed: bool,
    /// Smallest deviation over the non-congruence maps, with its map and
    /// verdict.
    pub weakest: Option<(LinearMap, SymmetryVerdict)>,
    pub controls_tested: usize,
    pub controls_passed: bool,
    pub controls_max_deviation: f64,
    /// Whether controls were scaled (the spec is homothety-invariant).
    pub scaled_controls: bool,
    /// The spec vanished on every sample; nothing was probed.
    pub vacuous: bool,
}

impl MainProbeReport {
    pub fn to_json(&self, spec: &MetricSpec) -> serde_json::Value {
        json!({
            "maps_tested": self.maps_tested,
            "all_failed": self.all_failed,
            "weakest": self.weakest.as_ref().map(|(t, v)| v.to_json(spec, t)),
            "controls_tested": self.controls_tested,
            "controls_passed": self.controls_passed,
            "controls_max_deviation": finite_or_null(self.controls_max_deviation),
            "scaled_controls": self.scaled_controls,
            "vacuous": self.vacuous,
        })
    }
}

const CONTROL_STREAM: u64 = 1 << 32;
const SAMPLE_STREAM: u64 = 1 << 33;

/// Falsification harness: random maps far from congruences must all fail
/// the symmetry test while congruence controls pass. Controls are `c U`
/// with `|c| = 1`, or with any `c != 0` when `2 I` is a symmetry.
pub fn theorem_main_probe(
    spec: &MetricSpec,
    n_maps: usize,
    n_samples: usize,
    seed: u64,
    min_sv_ratio: f64,
    tol: f64,
) -> Result<MainProbeReport> {
    let (dim, field) = (spec.dim(), spec.field());
    if dim < 3 {
        return Err(Error::DimensionTooSmall {
            min: 3,
            actual: dim,
        });
    }
    if !(min_sv_ratio > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "min_sv_ratio must exceed 1, got {min_sv_ratio}"
        )));
    }
    let sample_seed = derive_seed(seed, SAMPLE_STREAM);
    let mut report = MainProbeReport {
        maps_tested: 0,
        all_failed: false,
        weakest: None,
        controls_tested: 0,
        controls_passed: false,
        controls_max_deviation: 0.0,
        scaled_controls: false,
        vacuous: false,
    };
    if is_vacuous(spec, n_samples, sample_seed)? {
        report.vacuous = true;
        return Ok(report);
    }
    let two = LinearMap::identity(dim, field).scale_unchecked(Complex64::new(2.0, 0.0));
    report.scaled_controls = is_symmetry(&two, spec, n_samples, sample_seed, tol)?.is_symmetry;

    let maps: Vec<(LinearMap, SymmetryVerdict)> = (0..n_maps)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_from_seed(derive_seed(seed, k as u64));
            let t = random_non_congruence(dim, field, min_sv_ratio, &mut rng);
            let v = symmetry_deviation(&t, spec, n_samples, sample_seed, tol)?;
            Ok((t, v))
        })
        .collect::<Result<_>>()?;
    report.maps_tested = maps.len();
    report.all_failed = maps.iter().all(|(_, v)| !v.is_symmetry);
    report.weakest = maps
        .into_iter()
        .min_by(|a, b| a.1.max_deviation.total_cmp(&b.1.max_deviation));

    let scaled = report.scaled_controls;
    let controls: Vec<SymmetryVerdict> = (0..n_maps)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_from_seed(derive_seed(seed, CONTROL_STREAM + k as u64));
            let t = random_congruence(dim, field, scaled, &mut rng);
            symmetry_deviation(&t, spec, n_samples, sample_seed, tol)
        })
        .collect::<Result<_>>()?;
    report.controls_tested = controls.len();
    report.controls_passed = controls.iter().all(|v| v.is_symmetry);
    report.controls_max_deviation = controls.iter().map(|v| v.max_deviation).fold(0.0, f64::max);
    Ok(report)
}

fn is_vacuous(spec: &MetricSpec, n_samples: usize, seed: u64) -> Result<bool> {
    for i in 0..n_samples.max(1) {
        let mut rng = rng_from_seed(derive_seed(seed, i as u64));
        let g = spec.sample_base_point(&mut rng);
        let h = random_vector(spec.dim(), spec.field(), &mut rng);
        if eval_finsler(spec, &g, &h)? != 0.0 {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Serialize)]
pub struct Dim2Report {
    pub maps_checked: usize,
    pub all_symmetric: bool,
    pub max_deviation: f64,
}

/// `R(a) diag(s, 1/s) R(b)`: a random real map with determinant 1.
pub fn random_unimodular<R: Rng + ?Sized>(rng: &mut R) -> LinearMap {
    let rot = |a: f64| vec![vec![a.cos(), -a.sin()], vec![a.sin(), a.cos()]];
    let tau = std::f64::consts::TAU;
    let s = rng.random_range(-1.0f64..1.0).exp();
    let r1 = LinearMap::from_real_rows(Field::Real, &rot(rng.random_range(0.0..tau))).expect("2x2");
    let r2 = LinearMap::from_real_rows(Field::Real, &rot(rng.random_range(0.0..tau))).expect("2x2");
    let d =
        LinearMap::from_real_rows(Field::Real, &[vec![s, 0.0], vec![0.0, 1.0 / s]]).expect("2x2");
    r1.compose(&d).and_then(|m| m.compose(&r2)).expect("2x2")
}

/// The area metric `b |g| |h| sin angle(g, h)` in dimension 2 against maps
/// of determinant +-1.
pub fn dim2_exception_check(
    b: f64,
    maps: &[LinearMap],
    n_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<Dim2Report> {
    let spec = MetricSpec::area(b, Field::Real)?;
    let mut rep = Dim2Report {
        maps_checked: 0,
        all_symmetric: true,
        max_deviation: 0.0,
    };
    for t in maps {
        check_map(t, &spec)?;
        let det = t.determinant()?.re;
        if (det.abs() - 1.0).abs() > tol {
            return Err(Error::NotUnimodular(det));
        }
    }
    for t in maps {
        let v = symmetry_deviation(t, &spec, n_samples, seed, tol)?;
        rep.maps_checked += 1;
        rep.all_symmetric &= v.is_symmetry;
        rep.max_deviation = rep.max_deviation.max(v.max_deviation);
    }
    Ok(rep)
}

#[derive(Debug, Clone, Serialize)]
pub struct RotationReport {
    pub rotations_tested: usize,
    pub rotation_max_deviation: f64,
    pub orthogonal_max_deviation: f64,
    pub rotations_pass: bool,
    pub orthogonal_pass: bool,
    /// Both suites reach the same verdict.
    pub agree: bool,
}

/// Compares invariance under random rotations with invariance under random
/// orthogonal maps (half of which reverse orientation).
pub fn rotation_sufficiency_check(
    spec: &MetricSpec,
    n_rotations: usize,
    n_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<RotationReport> {
    if spec.field() != Field::Real {
        return Err(Error::InvalidArgument(
            "rotations are defined over the real field only".into(),
        ));
    }
    if spec.dim() < 3 {
        return Err(Error::DimensionTooSmall {
            min: 3,
            actual: spec.dim(),
        });
    }
    let dim = spec.dim();
    let sample_seed = derive_seed(seed, SAMPLE_STREAM);
    let devs: Vec<(f64, f64)> = (0..n_rotations)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_from_seed(derive_seed(seed, k as u64));
            let r = haar_rotation(dim, &mut rng);
            let o = haar_unitary(dim, Field::Real, &mut rng);
            let a = symmetry_deviation(&r, spec, n_samples, sample_seed, tol)?.max_deviation;
            let b = symmetry_deviation(&o, spec, n_samples, sample_seed, tol)?.max_deviation;
            Ok((a, b))
        })
        .collect::<Result<_>>()?;
    let rot = devs.iter().map(|d| d.0).fold(0.0, f64::max);
    let orth = devs.iter().map(|d| d.1).fold(0.0, f64::max);
    Ok(RotationReport {
        rotations_tested: devs.len(),
        rotation_max_deviation: rot,
        orthogonal_max_deviation: orth,
        rotations_pass: rot <= tol,
        orthogonal_pass: orth <= tol,
        agree: (rot <= tol) == (orth <= tol),
    })
}
