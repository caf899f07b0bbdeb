//! Canonical profile functions classifying invariant metrics.
//!
//! A profile is a black-box callable, optionally backed by an expression
//! whose source text is kept for serialization. Variable names per role:
//!
//! | profile | variables |
//! |---|---|
//! | symmetric lambda | `r, p, q` |
//! | theta | `r, tau` |
//! | vartheta (congruence-invariant) | `tau` |
//! | non-symmetric lambda | `r, pre, pim, q` |
//! | phi, psi | `r` (the squared norm of the base point) |

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::domain::RadiusDomain;
use crate::error::Result;
use crate::expr::{parse, Expr};

pub type Fn1 = dyn Fn(f64) -> Result<f64> + Send + Sync;
pub type Fn2 = dyn Fn(f64, f64) -> Result<f64> + Send + Sync;
pub type Fn3 = dyn Fn(f64, f64, f64) -> Result<f64> + Send + Sync;
pub type FnNonSym = dyn Fn(f64, Complex64, f64) -> Result<f64> + Send + Sync;

/// A callable plus the expression text it came from, if any.
pub struct Profile<F: ?Sized> {
    func: Arc<F>,
    source: Option<String>,
}

impl<F: ?Sized> Clone for Profile<F> {
    fn clone(&self) -> Self {
        Profile {
            func: Arc::clone(&self.func),
            source: self.source.clone(),
        }
    }
}

impl<F: ?Sized> fmt::Debug for Profile<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.source {
            Some(s) => write!(f, "Profile({s:?})"),
            None => f.write_str("Profile(<native>)"),
        }
    }
}

impl<F: ?Sized> Profile<F> {
    pub fn source(&self) -> Option<&str> {
        self.source.as_deref()
    }

    pub fn func(&self) -> &Arc<F> {
        &self.func
    }
}

fn parse_with(text: &str, vars: &[&str]) -> Result<Expr> {
    Ok(parse(text, vars)?)
}

impl Profile<Fn1> {
    pub fn from_fn(f: impl Fn(f64) -> Result<f64> + Send + Sync + 'static) -> Self {
        Profile {
            func: Arc::new(f),
            source: None,
        }
    }

    /// Parses a one-variable expression in `var`.
    pub fn from_expr(text: &str, var: &'static str) -> Result<Self> {
        let e = parse_with(text, &[var])?;
        Ok(Profile {
            func: Arc::new(move |x| Ok(e.eval_with(&|n: &str| (n == var).then_some(x))?)),
            source: Some(text.to_string()),
        })
    }

    pub fn constant(c: f64) -> Self {
        Profile {
            func: Arc::new(move |_| Ok(c)),
            source: Some(format!("{c:?}")),
        }
    }

    pub fn call(&self, x: f64) -> Result<f64> {
        (self.func)(x)
    }
}

impl Profile<Fn2> {
    pub fn from_fn(f: impl Fn(f64, f64) -> Result<f64> + Send + Sync + 'static) -> Self {
        Profile {
            func: Arc::new(f),
            source: None,
        }
    }

    /// Parses a theta profile in `r, tau`.
    pub fn from_expr(text: &str) -> Result<Self> {
        let e = parse_with(text, &["r", "tau"])?;
        Ok(Profile {
            func: Arc::new(move |r, tau| {
                Ok(e.eval_with(&|n: &str| match n {
                    "r" => Some(r),
                    "tau" => Some(tau),
                    _ => None,
                })?)
            }),
            source: Some(text.to_string()),
        })
    }

    pub fn call(&self, r: f64, tau: f64) -> Result<f64> {
        (self.func)(r, tau)
    }
}

impl Profile<FnNonSym> {
    pub fn from_fn(f: impl Fn(f64, Complex64, f64) -> Result<f64> + Send + Sync + 'static) -> Self {
        Profile {
            func: Arc::new(f),
            source: None,
        }
    }

    /// Parses a non-symmetric lambda in `r, pre, pim, q`.
    pub fn from_expr(text: &str) -> Result<Self> {
        let e = parse_with(text, &["r", "pre", "pim", "q"])?;
        Ok(Profile {
            func: Arc::new(move |r, p: Complex64, q| {
                Ok(e.eval_with(&|n: &str| match n {
                    "r" => Some(r),
                    "pre" => Some(p.re),
                    "pim" => Some(p.im),
                    "q" => Some(q),
                    _ => None,
                })?)
            }),
            source: Some(text.to_string()),
        })
    }

    pub fn call(&self, r: f64, p: Complex64, q: f64) -> Result<f64> {
        (self.func)(r, p, q)
    }
}

pub type ThetaProfile = Profile<Fn2>;
pub type VarthetaProfile = Profile<Fn1>;
pub type NonSymLambdaProfile = Profile<FnNonSym>;

/// `lambda_r(p, q)`, positively homogeneous of degree `alpha` and even in
/// both `p` and `q`.
#[derive(Clone, Debug)]
pub struct SymLambdaProfile {
    func: Profile<Fn3>,
    alpha: f64,
}

impl SymLambdaProfile {
    pub fn from_fn(
        f: impl Fn(f64, f64, f64) -> Result<f64> + Send + Sync + 'static,
        alpha: f64,
    ) -> Self {
        SymLambdaProfile {
            func: Profile {
                func: Arc::new(f),
                source: None,
            },
            alpha,
        }
    }

    pub fn from_expr(text: &str, alpha: f64) -> Result<Self> {
        let e = parse_with(text, &["r", "p", "q"])?;
        Ok(SymLambdaProfile {
            func: Profile {
                func: Arc::new(move |r, p, q| {
                    Ok(e.eval_with(&|n: &str| match n {
                        "r" => Some(r),
                        "p" => Some(p),
                        "q" => Some(q),
                        _ => None,
                    })?)
                }),
                source: Some(text.to_string()),
            },
            alpha,
        })
    }

    pub fn call(&self, r: f64, p: f64, q: f64) -> Result<f64> {
        (self.func.func)(r, p, q)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn source(&self) -> Option<&str> {
        self.func.source()
    }
}

/// The pair `(phi, psi)` of an isometry-invariant Hermitean form
/// `sigma_g(f, h) = phi(|g|^2) <f,h> + psi(|g|^2) <f,g><g,h>`.
///
/// `domain` is a set of admissible values of `|g|^2`.
#[derive(Clone, Debug)]
pub struct RiemannProfile {
    pub phi: Profile<Fn1>,
    pub psi: Profile<Fn1>,
    pub domain: RadiusDomain,
}

impl RiemannProfile {
    pub fn new(phi: Profile<Fn1>, psi: Profile<Fn1>, domain: RadiusDomain) -> Self {
        RiemannProfile { phi, psi, domain }
    }

    pub fn from_exprs(phi: &str, psi: &str, domain: RadiusDomain) -> Result<Self> {
        Ok(RiemannProfile {
            phi: Profile::<Fn1>::from_expr(phi, "r")?,
            psi: Profile::<Fn1>::from_expr(psi, "r")?,
            domain,
        })
    }

    /// `phi = 1`, `psi = 0`: the ambient inner product.
    pub fn euclidean() -> Self {
        RiemannProfile {
            phi: Profile::<Fn1>::constant(1.0),
            psi: Profile::<Fn1>::constant(0.0),
            domain: RadiusDomain::positive(),
        }
    }

    /// `phi(r) = 1/r`, `psi(r) = -1/r^2` on `(0, inf)`.
    pub fn fubini_study() -> Self {
        congruence_invariant_riemann(1.0, -1.0)
    }

    pub fn phi(&self, r: f64) -> Result<f64> {
        self.phi.call(r)
    }

    pub fn psi(&self, r: f64) -> Result<f64> {
        self.psi.call(r)
    }
}

/// The congruence-invariant Hermitean family: `phi(r) = a/r`,
/// `psi(r) = b/r^2` on `(0, inf)`. `(1, -1)` is the Fubini-Study form.
pub fn congruence_invariant_riemann(a: f64, b: f64) -> RiemannProfile {
    RiemannProfile {
        phi: Profile {
            func: Arc::new(move |r| Ok(a / r)),
            source: Some(format!("{a:?}/r")),
        },
        psi: Profile {
            func: Arc::new(move |r| Ok(b / (r * r))),
            source: Some(format!("{b:?}/(r*r)")),
        },
        domain: RadiusDomain::positive(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expression_profiles() {
        let l = SymLambdaProfile::from_expr("sqrt(p^2+q^2)/r", 1.0).unwrap();
        assert_eq!(l.call(2.0, 3.0, 4.0).unwrap(), 2.5);
        let t = ThetaProfile::from_expr("1 + cos(tau)").unwrap();
        assert_eq!(t.call(1.0, 0.0).unwrap(), 2.0);
        let n = NonSymLambdaProfile::from_expr("pre + sqrt(pim^2 + q^2)").unwrap();
        assert_eq!(n.call(1.0, Complex64::new(-1.0, 3.0), 4.0).unwrap(), 4.0);
        assert!(ThetaProfile::from_expr("p").is_err());
        assert!(VarthetaProfile::from_expr("r", "tau").is_err());
    }

    #[test]
    fn fubini_study_profile_values() {
        let fs = RiemannProfile::fubini_study();
        for r in [0.25, 1.0, 3.0] {
            assert!((fs.phi(r).unwrap() - 1.0 / r).abs() < 1e-15);
            assert!((fs.psi(r).unwrap() + 1.0 / (r * r)).abs() < 1e-15);
        }
        let parsed = RiemannProfile::from_exprs(
            fs.phi.source().unwrap(),
            fs.psi.source().unwrap(),
            RadiusDomain::positive(),
        )
        .unwrap();
        assert_eq!(parsed.psi(2.0).unwrap(), fs.psi(2.0).unwrap());
    }
}
