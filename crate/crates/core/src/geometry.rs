//! Curve lengths, the Fubini-Study pseudodistances and numerical geodesics.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::linalg::{
    angle_from_pq, canonical_invariants, derive_seed, norm, random_unit_vector, rng_from_seed,
    Vector,
};
use crate::metric::{eval_finsler, MetricSpec};

pub type CurveFn = dyn Fn(f64) -> Vector + Send + Sync;

/// Relative finite-difference step for parametric curves.
pub const FD_STEP: f64 = 1e-6;

#[derive(Clone)]
pub enum Curve {
    /// `t -> path(t)` on `[a, b]`, differentiated numerically.
    Parametric {
        path: Arc<CurveFn>,
        a: f64,
        b: f64,
        fd_step: f64,
    },
    /// Piecewise linear through `vertices` at strictly increasing `params`.
    Polyline {
        params: Vec<f64>,
        vertices: Vec<Vector>,
    },
}

impl fmt::Debug for Curve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Curve::Parametric { a, b, fd_step, .. } => f
                .debug_struct("Parametric")
                .field("a", a)
                .field("b", b)
                .field("fd_step", fd_step)
                .finish(),
            Curve::Polyline { params, vertices } => f
                .debug_struct("Polyline")
                .field("params", params)
                .field("vertices", vertices)
                .finish(),
        }
    }
}

impl Curve {
    pub fn parametric(
        path: impl Fn(f64) -> Vector + Send + Sync + 'static,
        a: f64,
        b: f64,
    ) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "bad parameter interval [{a}, {b}]"
            )));
        }
        Ok(Curve::Parametric {
            path: Arc::new(path),
            a,
            b,
            fd_step: FD_STEP,
        })
    }

    pub fn polyline(params: Vec<f64>, vertices: Vec<Vector>) -> Result<Self> {
        if vertices.len() < 2 || params.len() != vertices.len() {
            return Err(Error::InvalidArgument(
                "a polyline needs at least 2 vertices and one parameter per vertex".into(),
            ));
        }
        if params.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument(
                "polyline parameters must increase strictly".into(),
            ));
        }
        let (dim, field) = (vertices[0].dim(), vertices[0].field());
        for v in &vertices[1..] {
            if v.field() != field {
                return Err(Error::FieldMismatch(field, v.field()));
            }
            if v.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: v.dim(),
                });
            }
        }
        Ok(Curve::Polyline { params, vertices })
    }

    pub fn interval(&self) -> (f64, f64) {
        match self {
            Curve::Parametric { a, b, .. } => (*a, *b),
            Curve::Polyline { params, .. } => (params[0], params[params.len() - 1]),
        }
    }

    pub fn point(&self, t: f64) -> Vector {
        match self {
            Curve::Parametric { path, .. } => path(t),
            Curve::Polyline { params, vertices } => {
                let k = segment_index(params, t);
                let s = (t - params[k]) / (params[k + 1] - params[k]);
                vertices[k].axpy(
                    Complex64::new(s, 0.0),
                    &vertices[k + 1].sub_unchecked(&vertices[k]),
                )
            }
        }
    }

    /// `gamma'(t)`: centered differences inside, second-order one-sided
    /// differences near the ends.
    pub fn derivative(&self, t: f64) -> Vector {
        match self {
            Curve::Parametric {
                path,
                a,
                b,
                fd_step,
            } => {
                let h = fd_step * t.abs().max(1.0);
                let lin = |terms: &[(f64, f64)], denom: f64| {
                    let mut acc = path(t + terms[0].0).scale_real(terms[0].1);
                    for &(dt, w) in &terms[1..] {
                        acc = acc.axpy(Complex64::new(w, 0.0), &path(t + dt));
                    }
                    acc.scale_real(1.0 / denom)
                };
                if t - h < *a {
                    lin(&[(0.0, -3.0), (h, 4.0), (2.0 * h, -1.0)], 2.0 * h)
                } else if t + h > *b {
                    lin(&[(0.0, 3.0), (-h, -4.0), (-2.0 * h, 1.0)], 2.0 * h)
                } else {
                    lin(&[(h, 1.0), (-h, -1.0)], 2.0 * h)
                }
            }
            Curve::Polyline { params, vertices } => {
                let k = segment_index(params, t);
                vertices[k + 1]
                    .sub_unchecked(&vertices[k])
                    .scale_real(1.0 / (params[k + 1] - params[k]))
            }
        }
    }
}

fn segment_index(params: &[f64], t: f64) -> usize {
    let n = params.len();
    match params.partition_point(|&p| p <= t) {
        0 => 0,
        k if k >= n => n - 2,
        k => k - 1,
    }
}

fn midpoint_value(spec: &MetricSpec, u: &Vector, v: &Vector) -> Result<f64> {
    let delta = v.sub_unchecked(u);
    let mid = u.axpy(Complex64::new(0.5, 0.0), &delta);
    eval_finsler(spec, &mid, &delta)
}

/// `int_a^b rho_{gamma(t)}(gamma'(t)) dt`: composite Simpson on `n_nodes`
/// (odd, at least 3) for parametric curves, `sum rho_mid(delta)` over the
/// segments of a polyline (`n_nodes` is ignored there).
pub fn curve_length(spec: &MetricSpec, curve: &Curve, n_nodes: usize) -> Result<f64> {
    let values: Vec<f64> = match curve {
        Curve::Parametric { a, b, .. } => {
            if n_nodes < 3 || n_nodes.is_multiple_of(2) {
                return Err(Error::InvalidArgument(format!(
                    "Simpson quadrature needs an odd node count >= 3, got {n_nodes}"
                )));
            }
            let h = (b - a) / (n_nodes - 1) as f64;
            let f: Vec<f64> = (0..n_nodes)
                .into_par_iter()
                .map(|k| {
                    let t = if k == n_nodes - 1 {
                        *b
                    } else {
                        a + h * k as f64
                    };
                    eval_finsler(spec, &curve.point(t), &curve.derivative(t))
                })
                .collect::<Result<_>>()?;
            let mut s = f[0] + f[n_nodes - 1];
            for (k, v) in f.iter().enumerate().take(n_nodes - 1).skip(1) {
                s += if k % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            warn_negative(&f);
            return Ok(s * h / 3.0);
        }
        Curve::Polyline { vertices, .. } => vertices
            .par_windows(2)
            .map(|w| midpoint_value(spec, &w[0], &w[1]))
            .collect::<Result<_>>()?,
    };
    warn_negative(&values);
    Ok(values.iter().sum())
}

fn warn_negative(values: &[f64]) {
    let neg = values.iter().filter(|v| **v < 0.0).count();
    if neg > 0 {
        log::warn!(
            "metric is negative at {neg} of {} quadrature points",
            values.len()
        );
    }
}

fn nonzero(v: &Vector) -> Result<f64> {
    let n = norm(v);
    if n == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(n)
}

/// `sin angle(g, h)`: the distance between the F-lines through `g` and `h`.
pub fn delta1(g: &Vector, h: &Vector) -> Result<f64> {
    let (gn, hn) = (nonzero(g)?, nonzero(h)?);
    let (_, _, q) = canonical_invariants(g, h)?;
    Ok((q / (gn * hn)).min(1.0))
}

/// `sqrt(2 - 2 |<g,h>| / (|g| |h|))`: the chord between the closest unit
/// representatives of the two F-lines, evaluated as `2 sin(angle / 2)`.
pub fn delta2(g: &Vector, h: &Vector) -> Result<f64> {
    nonzero(g)?;
    nonzero(h)?;
    let (_, p, q) = canonical_invariants(g, h)?;
    Ok(2.0 * (angle_from_pq(p, q) / 2.0).sin())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Delta {
    Delta1,
    Delta2,
}

impl Delta {
    pub fn eval(self, g: &Vector, h: &Vector) -> Result<f64> {
        match self {
            Delta::Delta1 => delta1(g, h),
            Delta::Delta2 => delta2(g, h),
        }
    }
}

/// `sum_k delta(gamma(t_k), gamma(t_{k+1}))` over a uniform partition.
pub fn polygonal_delta_length(which: Delta, curve: &Curve, n_segments: usize) -> Result<f64> {
    if n_segments == 0 {
        return Err(Error::InvalidArgument("need at least one segment".into()));
    }
    let (a, b) = curve.interval();
    let pts: Vec<Vector> = (0..=n_segments)
        .into_par_iter()
        .map(|k| {
            let t = if k == n_segments {
                b
            } else {
                a + (b - a) * k as f64 / n_segments as f64
            };
            curve.point(t)
        })
        .collect();
    let parts: Vec<f64> = pts
        .par_windows(2)
        .map(|w| which.eval(&w[0], &w[1]))
        .collect::<Result<_>>()?;
    Ok(parts.iter().sum())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RatioRow {
    pub step: f64,
    pub delta1_ratio: f64,
    pub delta2_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IntrinsificationTable {
    pub rows: Vec<RatioRow>,
    /// `sqrt(sigma_{gamma(t)}(gamma'(t), gamma'(t)))` for the Fubini-Study form.
    pub sigma_speed: f64,
    pub degenerate_derivative: bool,
    /// Distance to `sigma_speed` never grows along the table, for both ratios.
    pub monotone: bool,
    /// Largest gap to `sigma_speed` in the last row.
    pub final_gap: f64,
}

/// Tabulates `delta_i(gamma(s), gamma(t)) / |t - s|` for `s = t + step`
/// (or `t - step` near the right end) over decreasing steps.
pub fn intrinsification_ratio(
    curve: &Curve,
    t: f64,
    steps: &[f64],
) -> Result<IntrinsificationTable> {
    if steps.is_empty()
        || steps.iter().any(|s| !(*s > 0.0))
        || steps.windows(2).any(|w| !(w[0] > w[1]))
    {
        return Err(Error::InvalidArgument(
            "steps must be positive and strictly decreasing".into(),
        ));
    }
    let (a, b) = curve.interval();
    if !(a <= t && t <= b) {
        return Err(Error::InvalidArgument(format!(
            "t = {t} outside [{a}, {b}]"
        )));
    }
    let g = curve.point(t);
    let r = nonzero(&g)?;
    let d = curve.derivative(t);
    let (_, _, q) = canonical_invariants(&g, &d)?;
    let sigma_speed = q / (r * r);
    let mut rows = Vec::with_capacity(steps.len());
    for &step in steps {
        let s = if t + step <= b { t + step } else { t - step };
        let gs = curve.point(s);
        rows.push(RatioRow {
            step,
            delta1_ratio: delta1(&gs, &g)? / step,
            delta2_ratio: delta2(&gs, &g)? / step,
        });
    }
    let gap = |row: &RatioRow| {
        (row.delta1_ratio - sigma_speed)
            .abs()
            .max((row.delta2_ratio - sigma_speed).abs())
    };
    let slack = 1e-9 * sigma_speed.max(1.0);
    let monotone = rows.windows(2).all(|w| {
        (w[1].delta1_ratio - sigma_speed).abs() <= (w[0].delta1_ratio - sigma_speed).abs() + slack
            && (w[1].delta2_ratio - sigma_speed).abs()
                <= (w[0].delta2_ratio - sigma_speed).abs() + slack
    });
    Ok(IntrinsificationTable {
        final_gap: gap(rows.last().expect("non-empty")),
        rows,
        sigma_speed,
        degenerate_derivative: norm(&d) < 1e-12,
        monotone,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct GeodesicOptions {
    pub n_vertices: usize,
    pub n_iterations: usize,
    pub seed: u64,
    /// Independent runs from differently seeded directions; the shortest wins.
    pub restarts: usize,
}

impl Default for GeodesicOptions {
    fn default() -> Self {
        GeodesicOptions {
            n_vertices: 65,
            n_iterations: 400,
            seed: 0,
            restarts: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Geodesic {
    pub value: f64,
    pub initial_length: f64,
    /// Sweeps performed.
    pub iterations: usize,
    pub path: Curve,
    /// Total length after each sweep.
    pub history: Vec<f64>,
}

impl Geodesic {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "value": self.value,
            "iterations": self.iterations,
            "initial_length": self.initial_length,
        })
    }
}

/// Upper bound for the distance from `g` to `h`: the midpoint-rule length of
/// a polyline improved by derivative-free coordinate descent. Each interior
/// vertex tries a step either way along a random direction; the step grows
/// after an accepted move and shrinks after a rejected one. Segments are
/// kept short relative to their distance from the origin so the midpoint
/// rule stays accurate.
pub fn geodesic_distance(
    spec: &MetricSpec,
    g: &Vector,
    h: &Vector,
    opts: &GeodesicOptions,
) -> Result<Geodesic> {
    spec.check_vector(g)?;
    spec.check_vector(h)?;
    for v in [g, h] {
        if !spec.domain().contains(norm(v)) {
            return Err(Error::OutOfDomain(norm(v)));
        }
    }
    if opts.n_vertices < 2 {
        return Err(Error::InvalidArgument("need at least 2 vertices".into()));
    }
    let runs: Vec<Geodesic> = (0..opts.restarts.max(1))
        .into_par_iter()
        .map(|k| descend(spec, g, h, opts, derive_seed(opts.seed, k as u64)))
        .collect::<Result<_>>()?;
    Ok(runs
        .into_iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .expect("at least one run"))
}

fn vertices_in_domain(spec: &MetricSpec, vs: &[Vector]) -> bool {
    vs.iter().all(|v| spec.domain().contains(norm(v)))
}

fn initial_path(
    spec: &MetricSpec,
    g: &Vector,
    h: &Vector,
    n: usize,
    seed: u64,
) -> Result<Vec<Vector>> {
    let delta = h.sub_unchecked(g);
    let chord: Vec<Vector> = (0..n)
        .map(|k| g.axpy(Complex64::new(k as f64 / (n - 1) as f64, 0.0), &delta))
        .collect();
    if vertices_in_domain(spec, &chord) {
        return Ok(chord);
    }
    // quadratic arcs through a perturbed midpoint
    let mut rng = rng_from_seed(derive_seed(seed, u64::MAX));
    let mid = g.axpy(Complex64::new(0.5, 0.0), &delta);
    let scale = norm(g).max(norm(h)).max(norm(&delta));
    for attempt in 0..64 {
        let w = random_unit_vector(g.dim(), g.field(), &mut rng)
            .scale_real(0.5 * scale * (1.0 + attempt as f64 / 8.0));
        let m = mid.add(&w)?;
        // control point so that the arc passes through m at s = 1/2
        let c = m
            .scale_real(2.0)
            .axpy(Complex64::new(-0.5, 0.0), &g.add(h)?);
        let arc: Vec<Vector> = (0..n)
            .map(|k| {
                let s = k as f64 / (n - 1) as f64;
                g.scale_real((1.0 - s) * (1.0 - s))
                    .axpy(Complex64::new(2.0 * s * (1.0 - s), 0.0), &c)
                    .axpy(Complex64::new(s * s, 0.0), h)
            })
            .collect();
        if vertices_in_domain(spec, &arc) {
            return Ok(arc);
        }
    }
    Err(Error::NoValidInitialization)
}

fn segment_ratio(u: &Vector, v: &Vector) -> f64 {
    norm(&v.sub_unchecked(u)) / norm(u).min(norm(v))
}

fn descend(
    spec: &MetricSpec,
    g: &Vector,
    h: &Vector,
    opts: &GeodesicOptions,
    seed: u64,
) -> Result<Geodesic> {
    let n = opts.n_vertices;
    let mut vs = initial_path(spec, g, h, n, opts.seed)?;
    let mut seg: Vec<f64> = vs
        .windows(2)
        .map(|w| midpoint_value(spec, &w[0], &w[1]))
        .collect::<Result<_>>()?;
    if let Some(&neg) = seg.iter().find(|v| **v < 0.0) {
        return Err(Error::NonPositiveMetric { value: neg });
    }
    let initial_length: f64 = seg.iter().sum();
    let max_ratio = vs
        .windows(2)
        .map(|w| segment_ratio(&w[0], &w[1]))
        .fold(0.0, f64::max);
    let cap = (1.5 * max_ratio).max(0.1);
    let mean_len = vs
        .windows(2)
        .map(|w| norm(&w[1].sub_unchecked(&w[0])))
        .sum::<f64>()
        / (n - 1) as f64;
    let scale = norm(g).max(norm(h));
    let mut steps = vec![0.25 * mean_len.max(1e-3 * scale); n];
    let mut rng = rng_from_seed(seed);
    let mut history = Vec::with_capacity(opts.n_iterations);
    let mut iterations = 0;

    let admissible = |u: &Vector, v: &Vector| -> Option<f64> {
        if segment_ratio(u, v) > cap {
            return None;
        }
        midpoint_value(spec, u, v).ok().filter(|x| *x >= 0.0)
    };

    for _ in 0..opts.n_iterations {
        if n <= 2 || steps[1..n - 1].iter().all(|s| *s < 1e-12 * scale) {
            break;
        }
        iterations += 1;
        for i in 1..n - 1 {
            let d = random_unit_vector(g.dim(), g.field(), &mut rng);
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let old = seg[i - 1] + seg[i];
            let mut accepted = false;
            for s in [sign, -sign] {
                let cand = vs[i].axpy(Complex64::new(s * steps[i], 0.0), &d);
                if !spec.domain().contains(norm(&cand)) {
                    continue;
                }
                let (Some(a), Some(b)) =
                    (admissible(&vs[i - 1], &cand), admissible(&cand, &vs[i + 1]))
                else {
                    continue;
                };
                if a + b < old {
                    vs[i] = cand;
                    seg[i - 1] = a;
                    seg[i] = b;
                    accepted = true;
                    break;
                }
            }
            steps[i] *= if accepted { 1.2 } else { 0.7 };
        }
        let total: f64 = seg.iter().sum();
        // summation order can wobble in the last bit
        let prev = history.last().copied().unwrap_or(initial_length);
        history.push(total.min(prev));
    }
    let value = history.last().copied().unwrap_or(initial_length);
    let params = (0..n).map(|k| k as f64 / (n - 1) as f64).collect();
    Ok(Geodesic {
        value,
        initial_length,
        iterations,
        path: Curve::polyline(params, vs)?,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_unitary, random_vector, Field, LinearMap};
    use crate::profile::{SymLambdaProfile, VarthetaProfile};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn circle(field: Field) -> Curve {
        Curve::parametric(
            move |t| Vector::from_reals(field, &[t.cos(), t.sin(), 0.0]).unwrap(),
            0.0,
            FRAC_PI_2,
        )
        .unwrap()
    }

    #[test]
    fn length_examples() {
        let e = MetricSpec::euclidean(3, Field::Real).unwrap();
        let seg =
            Curve::parametric(|t| Vector::real(&[1.0 + t, 0.0, 0.0]).unwrap(), 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(curve_length(&e, &seg, 11).unwrap(), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(
            curve_length(&e, &circle(Field::Real), 10001).unwrap(),
            FRAC_PI_2,
            epsilon = 1e-6
        );
        let fs = MetricSpec::fubini_study(3, Field::Complex).unwrap();
        assert_abs_diff_eq!(
            curve_length(&fs, &circle(Field::Complex), 10001).unwrap(),
            FRAC_PI_2,
            epsilon = 1e-6
        );
        let dg = MetricSpec::from_lambda(
            SymLambdaProfile::from_expr("p/r", 1.0).unwrap(),
            3,
            Field::Real,
        )
        .unwrap();
        assert!(
            curve_length(&dg, &circle(Field::Real), 10001)
                .unwrap()
                .abs()
                <= 1e-9
        );
        assert!(curve_length(&e, &seg, 2).is_err());
        assert!(curve_length(&e, &seg, 10).is_err());
    }

    #[test]
    fn length_leaves_domain() {
        let fs = MetricSpec::fubini_study(2, Field::Real).unwrap();
        let through_zero =
            Curve::parametric(|t| Vector::real(&[t, 0.0]).unwrap(), -1.0, 1.0).unwrap();
        assert!(curve_length(&fs, &through_zero, 5).is_err());
    }

    #[test]
    fn polyline_length_and_reversal() {
        let e = MetricSpec::euclidean(2, Field::Real).unwrap();
        let pl = Curve::polyline(
            vec![0.0, 1.0, 3.0],
            vec![
                Vector::real(&[1.0, 0.0]).unwrap(),
                Vector::real(&[1.0, 1.0]).unwrap(),
                Vector::real(&[4.0, 5.0]).unwrap(),
            ],
        )
        .unwrap();
        assert_abs_diff_eq!(curve_length(&e, &pl, 0).unwrap(), 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(pl.point(2.0).entries()[0].re, 2.5, epsilon = 1e-15);
        assert!(Curve::polyline(vec![0.0, 0.0], vec![Vector::real(&[1.0]).unwrap(); 2]).is_err());

        let fs = MetricSpec::fubini_study(3, Field::Real).unwrap();
        let c = circle(Field::Real);
        let rev = Curve::parametric(
            |t| Vector::real(&[(FRAC_PI_2 - t).cos(), (FRAC_PI_2 - t).sin(), 0.0]).unwrap(),
            0.0,
            FRAC_PI_2,
        )
        .unwrap();
        assert_abs_diff_eq!(
            curve_length(&fs, &c, 1001).unwrap(),
            curve_length(&fs, &rev, 1001).unwrap(),
            epsilon = 1e-8
        );
    }

    #[test]
    fn length_is_isometry_invariant() {
        let fs = MetricSpec::fubini_study(3, Field::Complex).unwrap();
        let helix = |t: f64| {
            Vector::complex(&[
                Complex64::new(t.cos(), 0.3 * t),
                Complex64::from_polar(t.sin(), 2.0 * t),
                Complex64::new(0.5, 0.0),
            ])
            .unwrap()
        };
        let base = Curve::parametric(helix, 0.0, 2.0).unwrap();
        let a = curve_length(&fs, &base, 2001).unwrap();
        for seed in 0..3 {
            let u: LinearMap = random_unitary(3, Field::Complex, seed).unwrap();
            let moved = Curve::parametric(move |t| u.apply(&helix(t)).unwrap(), 0.0, 2.0).unwrap();
            assert_abs_diff_eq!(curve_length(&fs, &moved, 2001).unwrap(), a, epsilon = 1e-9);
        }
    }

    #[test]
    fn delta_examples() {
        let e1 = Vector::real(&[1.0, 0.0]).unwrap();
        let e2 = Vector::real(&[0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(delta1(&e1, &e2).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(delta2(&e1, &e2).unwrap(), 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(delta1(&e1, &e1).unwrap(), 0.0);
        assert_eq!(delta2(&e1, &e1).unwrap(), 0.0);
        let one = Vector::complex(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]).unwrap();
        let i = Vector::complex(&[Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.0)]).unwrap();
        assert_eq!(delta1(&one, &i).unwrap(), 0.0);
        assert_eq!(delta2(&one, &i).unwrap(), 0.0);
        assert!(matches!(
            delta1(&e1, &Vector::zeros(2, Field::Real)),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn delta_identities() {
        let mut rng = rng_from_seed(11);
        for _ in 0..2000 {
            let g = random_vector(3, Field::Complex, &mut rng);
            let h = random_vector(3, Field::Complex, &mut rng);
            let d1 = delta1(&g, &h).unwrap();
            let d2 = delta2(&g, &h).unwrap();
            assert!((d2 * d2 - (2.0 - 2.0 * (1.0 - d1 * d1).sqrt())).abs() < 1e-12);
            assert!(d2 <= 2f64.sqrt() * d1 + 1e-12);
            let c = Complex64::new(-0.7, 2.0);
            assert_abs_diff_eq!(
                delta1(&g.scale(c).unwrap(), &h).unwrap(),
                d1,
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(
                delta2(&g, &h.scale(c).unwrap()).unwrap(),
                d2,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn delta2_is_the_closest_chord() {
        // min over phases of | g/|g| - e^{i phi} h/|h| |
        let mut rng = rng_from_seed(12);
        for _ in 0..50 {
            let g = random_vector(3, Field::Complex, &mut rng);
            let h = random_vector(3, Field::Complex, &mut rng);
            let (gu, hu) = (g.scale_real(1.0 / norm(&g)), h.scale_real(1.0 / norm(&h)));
            let best = (0..20000)
                .map(|k| {
                    let phi = 2.0 * PI * k as f64 / 20000.0;
                    norm(
                        &gu.sub(&hu.scale(Complex64::from_polar(1.0, phi)).unwrap())
                            .unwrap(),
                    )
                })
                .fold(f64::INFINITY, f64::min);
            assert!((best - delta2(&g, &h).unwrap()).abs() < 1e-7);
        }
    }

    #[test]
    fn polygonal_lengths() {
        let c = circle(Field::Real);
        for which in [Delta::Delta1, Delta::Delta2] {
            assert_abs_diff_eq!(
                polygonal_delta_length(which, &c, 10_000).unwrap(),
                FRAC_PI_2,
                epsilon = 1e-3
            );
        }
        let fixed = Curve::parametric(|_| Vector::real(&[1.0, 2.0]).unwrap(), 0.0, 1.0).unwrap();
        assert_eq!(
            polygonal_delta_length(Delta::Delta1, &fixed, 100).unwrap(),
            0.0
        );
    }

    #[test]
    fn intrinsification_examples() {
        let steps = [1e-1, 1e-2, 1e-3, 1e-4];
        let full = Curve::parametric(
            |t: f64| Vector::real(&[t.cos(), t.sin()]).unwrap(),
            0.0,
            2.0 * PI,
        )
        .unwrap();
        let tab = intrinsification_ratio(&full, 0.0, &steps).unwrap();
        assert_abs_diff_eq!(tab.sigma_speed, 1.0, epsilon = 1e-9);
        assert!(tab.monotone && tab.final_gap < 1e-3);

        let radial =
            Curve::parametric(|t| Vector::real(&[1.0 + t, 0.0]).unwrap(), 0.0, 1.0).unwrap();
        let tab = intrinsification_ratio(&radial, 0.0, &steps).unwrap();
        assert!(tab.sigma_speed.abs() < 1e-12 && tab.final_gap < 1e-9);

        assert!(intrinsification_ratio(&radial, 0.0, &[1e-3, 1e-2]).is_err());
    }

    #[test]
    fn geodesic_examples() {
        let e = MetricSpec::euclidean(3, Field::Real).unwrap();
        let g = Vector::real(&[1.0, 0.0, 0.0]).unwrap();
        let h = Vector::real(&[2.0, 1.0, 0.0]).unwrap();
        let r = geodesic_distance(&e, &g, &h, &GeodesicOptions::default()).unwrap();
        assert_abs_diff_eq!(r.value, 2f64.sqrt(), epsilon = 1e-3);
        assert!(r.value <= r.initial_length + 1e-12);
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));

        let ni = MetricSpec::congruence_invariant(VarthetaProfile::constant(1.0), 3, Field::Real)
            .unwrap();
        let r =
            geodesic_distance(&ni, &g, &g.scale_real(2.0), &GeodesicOptions::default()).unwrap();
        assert_abs_diff_eq!(r.value, 2f64.ln(), epsilon = 1e-3);
    }

    #[test]
    fn geodesic_initialisation() {
        // the chord through the origin is not admissible for Fubini-Study
        let fs = MetricSpec::fubini_study(2, Field::Real).unwrap();
        let g = Vector::real(&[1.0, 0.0]).unwrap();
        let opts = GeodesicOptions {
            n_vertices: 8,
            n_iterations: 5,
            ..Default::default()
        };
        let r = geodesic_distance(&fs, &g, &g.scale_real(-1.0), &opts).unwrap();
        assert!(r.value.is_finite());

        let neg = MetricSpec::from_lambda(
            SymLambdaProfile::from_expr("-sqrt(p^2+q^2)/r", 1.0).unwrap(),
            2,
            Field::Real,
        )
        .unwrap();
        assert!(matches!(
            geodesic_distance(&neg, &g, &Vector::real(&[0.0, 1.0]).unwrap(), &opts),
            Err(Error::NonPositiveMetric { .. })
        ));
    }
}
