use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Set of admissible radii `R`: a union of open intervals in `[0, inf)`,
/// optionally together with the point 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusDomain {
    intervals: Vec<(f64, f64)>,
    includes_zero: bool,
}

impl RadiusDomain {
    pub fn new(mut intervals: Vec<(f64, f64)>, includes_zero: bool) -> Result<Self> {
        for &(lo, hi) in &intervals {
            if lo.is_nan() || hi.is_nan() || lo < 0.0 || lo >= hi || lo.is_infinite() {
                return Err(Error::InvalidDomain(format!("bad interval ({lo}, {hi})")));
            }
        }
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in intervals.windows(2) {
            if w[0].1 > w[1].0 {
                return Err(Error::InvalidDomain(format!(
                    "intervals ({}, {}) and ({}, {}) overlap",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        if intervals.is_empty() && !includes_zero {
            return Err(Error::InvalidDomain("empty domain".into()));
        }
        Ok(RadiusDomain {
            intervals,
            includes_zero,
        })
    }

    /// `(0, inf)`.
    pub fn positive() -> Self {
        RadiusDomain {
            intervals: vec![(0.0, f64::INFINITY)],
            includes_zero: false,
        }
    }

    /// `[0, inf)`.
    pub fn everything() -> Self {
        RadiusDomain {
            intervals: vec![(0.0, f64::INFINITY)],
            includes_zero: true,
        }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn includes_zero(&self) -> bool {
        self.includes_zero
    }

    pub fn with_zero(&self, includes_zero: bool) -> Result<Self> {
        Self::new(self.intervals.clone(), includes_zero)
    }

    pub fn contains(&self, r: f64) -> bool {
        if r == 0.0 {
            return self.includes_zero;
        }
        self.intervals.iter().any(|&(lo, hi)| lo < r && r < hi)
    }

    /// Image under `r -> r^2`.
    pub fn squared(&self) -> Self {
        RadiusDomain {
            intervals: self
                .intervals
                .iter()
                .map(|&(lo, hi)| (lo * lo, hi * hi))
                .collect(),
            includes_zero: self.includes_zero,
        }
    }

    /// Image under `r -> sqrt(r)`.
    pub fn sqrt(&self) -> Self {
        RadiusDomain {
            intervals: self
                .intervals
                .iter()
                .map(|&(lo, hi)| (lo.sqrt(), hi.sqrt()))
                .collect(),
            includes_zero: self.includes_zero,
        }
    }

    /// Random non-zero radius; 0 only when the domain is `{0}`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.intervals.is_empty() {
            return 0.0;
        }
        let (lo, hi) = self.intervals[rng.random_range(0..self.intervals.len())];
        loop {
            let r = if hi.is_infinite() {
                lo + rng.random_range(-1.5f64..1.5).exp() * lo.max(1.0)
            } else {
                lo + (hi - lo) * rng.random_range(0.001..0.999)
            };
            if self.contains(r) {
                return r;
            }
        }
    }

    /// Deterministic quantile-style grid of about `n` interior radii.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        let k = self.intervals.len().max(1);
        let m = n.div_ceil(k).max(1);
        let mut out = Vec::with_capacity(m * k);
        for &(lo, hi) in &self.intervals {
            for j in 0..m {
                let r = if hi.is_infinite() {
                    let s = if m == 1 {
                        0.0
                    } else {
                        -2.0 + 4.0 * j as f64 / (m - 1) as f64
                    };
                    lo + s.exp() * lo.max(1.0)
                } else {
                    lo + (hi - lo) * (j as f64 + 0.5) / m as f64
                };
                if self.contains(r) {
                    out.push(r);
                }
            }
        }
        out
    }
}

impl Default for RadiusDomain {
    fn default() -> Self {
        Self::positive()
    }
}

/// JSON form: `{"intervals": [[lo, hi], ...], "includes_zero": bool}` with
/// `null` standing for an infinite upper end.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainDoc {
    pub intervals: Vec<(f64, Option<f64>)>,
    #[serde(default)]
    pub includes_zero: bool,
}

impl From<&RadiusDomain> for DomainDoc {
    fn from(d: &RadiusDomain) -> Self {
        DomainDoc {
            intervals: d
                .intervals
                .iter()
                .map(|&(lo, hi)| (lo, hi.is_finite().then_some(hi)))
                .collect(),
            includes_zero: d.includes_zero,
        }
    }
}

impl TryFrom<DomainDoc> for RadiusDomain {
    type Error = Error;

    fn try_from(doc: DomainDoc) -> Result<Self> {
        RadiusDomain::new(
            doc.intervals
                .into_iter()
                .map(|(lo, hi)| (lo, hi.unwrap_or(f64::INFINITY)))
                .collect(),
            doc.includes_zero,
        )
    }
}
