//! Product-of-Beta test densities on `[0,1]^D` with exact sampling and
//! analytic functional values.
//!
//! Parameters are integers `>= 1`, so `Beta(a, b)` is sampled exactly as the
//! `a`-th order statistic of `a + b − 1` independent uniforms.
//!
//! Spec strings: `beta:a,b` per coordinate joined by `x`
//! (`beta:2,2xbeta:1,3`), `^D` to repeat (`beta:2,2^4`), and `uniform`
//! as shorthand for `beta:1,1`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::estimators::{FunctionalKind, FunctionalSpec, PlugInMap};
use crate::metric::{MetricConfig, Norm};
use crate::neighbors::SampleSet;
use crate::quadrature::integrate_unit;
use crate::rng;
use crate::special::{digamma_unchecked, ln_gamma_unchecked};

const QUAD_TOL: f64 = 1e-10;

/// One `Beta(a, b)` coordinate law.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BetaComponent {
    pub a: u32,
    pub b: u32,
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma_unchecked(a) + ln_gamma_unchecked(b) - ln_gamma_unchecked(a + b)
}

impl BetaComponent {
    pub fn new(a: u32, b: u32) -> Result<Self> {
        if a == 0 || b == 0 {
            return Err(Error::Parameter(format!("beta parameters must be >= 1, got ({a}, {b})")));
        }
        Ok(Self { a, b })
    }

    pub const UNIFORM: BetaComponent = BetaComponent { a: 1, b: 1 };

    fn af(self) -> f64 {
        self.a as f64
    }

    fn bf(self) -> f64 {
        self.b as f64
    }

    fn ln_norm(self) -> f64 {
        ln_beta(self.af(), self.bf())
    }

    /// `ln p(x)` given `x` and `1 − x`.
    fn ln_pdf(self, x: f64, xc: f64) -> f64 {
        let mut v = -self.ln_norm();
        if self.a > 1 {
            v += (self.af() - 1.0) * x.ln();
        }
        if self.b > 1 {
            v += (self.bf() - 1.0) * xc.ln();
        }
        v
    }

    pub fn pdf(self, x: f64) -> f64 {
        x.powi(self.a as i32 - 1) * (1.0 - x).powi(self.b as i32 - 1) / self.ln_norm().exp()
    }

    pub fn mean(self) -> f64 {
        self.af() / (self.af() + self.bf())
    }

    pub fn variance(self) -> f64 {
        let s = self.af() + self.bf();
        self.af() * self.bf() / (s * s * (s + 1.0))
    }

    fn sample<R: Rng>(self, rng: &mut R, scratch: &mut Vec<f64>) -> f64 {
        let m = (self.a + self.b - 1) as usize;
        if m == 1 {
            return rng.random::<f64>();
        }
        scratch.clear();
        scratch.extend((0..m).map(|_| rng.random::<f64>()));
        let (_, v, _) = scratch.select_nth_unstable_by(self.a as usize - 1, f64::total_cmp);
        *v
    }

    fn entropy(self) -> f64 {
        let (a, b) = (self.af(), self.bf());
        self.ln_norm() - (a - 1.0) * digamma_unchecked(a) - (b - 1.0) * digamma_unchecked(b)
            + (a + b - 2.0) * digamma_unchecked(a + b)
    }

    /// `E_p[ln q]` for `p = self`.
    fn cross_log(self, q: BetaComponent) -> f64 {
        let (a, b) = (self.af(), self.bf());
        let s = digamma_unchecked(a + b);
        (q.af() - 1.0) * (digamma_unchecked(a) - s) + (q.bf() - 1.0) * (digamma_unchecked(b) - s)
            - q.ln_norm()
    }

    /// `∫ p^w q^{1−w}`; `None` when the combined Beta parameters are not
    /// positive (the integral diverges).
    fn power_mix(self, q: BetaComponent, w: f64) -> Option<f64> {
        let a = w * (self.af() - 1.0) + (1.0 - w) * (q.af() - 1.0) + 1.0;
        let b = w * (self.bf() - 1.0) + (1.0 - w) * (q.bf() - 1.0) + 1.0;
        if a <= 0.0 || b <= 0.0 {
            return None;
        }
        Some((ln_beta(a, b) - w * self.ln_norm() - (1.0 - w) * q.ln_norm()).exp())
    }
}

impl fmt::Display for BetaComponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "beta:{},{}", self.a, self.b)
    }
}

/// Product of per-coordinate Beta laws.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistributionSpec {
    pub components: Vec<BetaComponent>,
}

impl DistributionSpec {
    pub fn new(components: Vec<BetaComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Parameter("distribution needs at least one coordinate".into()));
        }
        for c in &components {
            BetaComponent::new(c.a, c.b)?;
        }
        Ok(Self { components })
    }

    pub fn uniform(dimension: usize) -> Result<Self> {
        Self::new(vec![BetaComponent::UNIFORM; dimension])
    }

    pub fn iid(component: BetaComponent, dimension: usize) -> Result<Self> {
        Self::new(vec![component; dimension])
    }

    pub fn dimension(&self) -> usize {
        self.components.len()
    }

    /// Exponent `b` in a boundary lower bound `p(x) >= c ε(x)^b`, with
    /// `ε(x)` the distance to the cube boundary.
    pub fn boundary_exponent(&self) -> u32 {
        self.components
            .iter()
            .map(|c| c.a.max(c.b) - 1)
            .max()
            .unwrap_or(0)
    }

    pub fn density_at(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension() {
            return Err(Error::Dimension {
                expected: self.dimension(),
                found: x.len(),
            });
        }
        if x.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::Support { index: 0 });
        }
        Ok(self.components.iter().zip(x).map(|(c, &xi)| c.pdf(xi)).product())
    }

    /// Draw `n` points from `rng`, coordinates in order.
    pub fn sample_with<R: Rng>(&self, rng: &mut R, n: usize, norm: Norm) -> Result<SampleSet> {
        let d = self.dimension();
        let mut coords = Vec::with_capacity(n * d);
        let mut scratch = Vec::new();
        for _ in 0..n {
            for c in &self.components {
                coords.push(c.sample(rng, &mut scratch));
            }
        }
        SampleSet::from_flat(coords, MetricConfig::new(d, norm)?)
    }

    /// Deterministic in `(self, n, seed)`.
    pub fn sample(&self, n: usize, seed: u64, norm: Norm) -> Result<SampleSet> {
        self.sample_with(&mut rng::stream(seed, &[]), n, norm)
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                write!(f, "x")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for DistributionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Parameter(format!("bad distribution spec {s:?}: {msg}"));
        let mut components = Vec::new();
        for token in s.trim().split('x') {
            let token = token.trim();
            let (base, reps) = match token.split_once('^') {
                Some((b, r)) => (
                    b,
                    r.trim()
                        .parse::<usize>()
                        .map_err(|_| bad("repeat count must be a positive integer"))?,
                ),
                None => (token, 1),
            };
            if reps == 0 {
                return Err(bad("repeat count must be >= 1"));
            }
            let comp = if base.eq_ignore_ascii_case("uniform") {
                BetaComponent::UNIFORM
            } else if let Some(params) = base.strip_prefix("beta:") {
                let (a, b) = params.split_once(',').ok_or_else(|| bad("expected beta:a,b"))?;
                let a = a.trim().parse().map_err(|_| bad("a must be an integer >= 1"))?;
                let b = b.trim().parse().map_err(|_| bad("b must be an integer >= 1"))?;
                BetaComponent::new(a, b)?
            } else {
                return Err(bad("expected beta:a,b or uniform"));
            };
            components.extend(std::iter::repeat_n(comp, reps));
        }
        Self::new(components)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroundTruthMethod {
    ClosedForm,
    Quadrature,
}

impl GroundTruthMethod {
    pub fn name(self) -> &'static str {
        match self {
            GroundTruthMethod::ClosedForm => "closed_form",
            GroundTruthMethod::Quadrature => "quadrature",
        }
    }
}

/// Exact value of a functional, with the route used to compute it.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthValue {
    pub value: f64,
    pub method: GroundTruthMethod,
    pub functional: FunctionalSpec,
    /// Absolute error bound; zero for closed forms.
    pub abs_error: f64,
}

/// Per-coordinate target. Sums for log-type functionals, products otherwise.
#[derive(Clone, Copy)]
enum Coord {
    Entropy,
    /// `∫ p^w q^{1−w}`; `q = p` gives `∫ p^w`.
    PowerMix(f64),
    Kl,
}

fn coord_closed(p: BetaComponent, q: BetaComponent, target: Coord) -> Option<f64> {
    match target {
        Coord::Entropy => Some(p.entropy()),
        Coord::Kl => Some(-p.entropy() - p.cross_log(q)),
        Coord::PowerMix(w) => p.power_mix(q, w),
    }
}

fn coord_quadrature(p: BetaComponent, q: BetaComponent, target: Coord) -> Result<(f64, f64)> {
    let quad = match target {
        Coord::Entropy => integrate_unit(
            |x, xc| {
                let lp = p.ln_pdf(x, xc);
                -lp.exp() * lp
            },
            QUAD_TOL,
        )?,
        Coord::Kl => integrate_unit(
            |x, xc| {
                let lp = p.ln_pdf(x, xc);
                lp.exp() * (lp - q.ln_pdf(x, xc))
            },
            QUAD_TOL,
        )?,
        Coord::PowerMix(w) => integrate_unit(
            |x, xc| (w * p.ln_pdf(x, xc) + (1.0 - w) * q.ln_pdf(x, xc)).exp(),
            QUAD_TOL,
        )?,
    };
    Ok((quad.value, quad.abs_error))
}

/// Which evaluation route [`true_functional_with`] may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruthRoute {
    /// Closed form, falling back to quadrature per coordinate.
    Auto,
    /// Quadrature for every coordinate.
    Quadrature,
}

/// Analytic value of `functional` for the given densities.
pub fn true_functional(
    spec_p: &DistributionSpec,
    spec_q: Option<&DistributionSpec>,
    functional: &FunctionalSpec,
) -> Result<GroundTruthValue> {
    true_functional_with(spec_p, spec_q, functional, TruthRoute::Auto)
}

pub fn true_functional_with(
    spec_p: &DistributionSpec,
    spec_q: Option<&DistributionSpec>,
    functional: &FunctionalSpec,
    route: TruthRoute,
) -> Result<GroundTruthValue> {
    let alpha = || {
        functional
            .alpha
            .ok_or_else(|| Error::Parameter(format!("{} requires alpha", functional.kind.name())))
    };
    // (target, sign applied to the summed value, is_product)
    let (target, sign, product) = match functional.kind {
        FunctionalKind::ShannonEntropy => (Coord::Entropy, 1.0, false),
        FunctionalKind::RenyiFunctional => (Coord::PowerMix(alpha()?), 1.0, true),
        FunctionalKind::KlDivergence => (Coord::Kl, 1.0, false),
        FunctionalKind::AlphaDivergenceFunctional => (Coord::PowerMix(alpha()?), 1.0, true),
        FunctionalKind::PlugIn => match functional.plug_in_f {
            Some(PlugInMap::Log) => (Coord::Entropy, -1.0, false),
            Some(PlugInMap::Power(e)) => (Coord::PowerMix(e + 1.0), 1.0, true),
            None => return Err(Error::Parameter("plug-in functional needs a scalar map".into())),
        },
    };
    let q = if functional.kind.is_divergence() {
        let q = spec_q.ok_or_else(|| {
            Error::Parameter(format!("{} requires a second distribution", functional.kind.name()))
        })?;
        if q.dimension() != spec_p.dimension() {
            return Err(Error::Dimension {
                expected: spec_p.dimension(),
                found: q.dimension(),
            });
        }
        q.clone()
    } else {
        DistributionSpec::uniform(spec_p.dimension())?
    };

    let mut method = GroundTruthMethod::ClosedForm;
    let mut parts = Vec::with_capacity(spec_p.dimension());
    for (&pc, &qc) in spec_p.components.iter().zip(&q.components) {
        let closed = match route {
            TruthRoute::Auto => coord_closed(pc, qc, target),
            TruthRoute::Quadrature => None,
        };
        parts.push(match closed {
            Some(v) => (v, 0.0),
            None => {
                method = GroundTruthMethod::Quadrature;
                coord_quadrature(pc, qc, target)?
            }
        });
    }

    let (value, abs_error) = if product {
        let value: f64 = parts.iter().map(|p| p.0).product();
        // first-order propagation of per-factor errors
        let err: f64 = parts
            .iter()
            .enumerate()
            .map(|(i, (_, e))| {
                e * parts
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, p)| p.0.abs())
                    .product::<f64>()
            })
            .sum();
        (value, err)
    } else {
        (
            sign * parts.iter().map(|p| p.0).sum::<f64>(),
            parts.iter().map(|p| p.1).sum(),
        )
    };
    if method == GroundTruthMethod::Quadrature && (abs_error.is_nan() || abs_error > 1e-8) {
        return Err(Error::Numeric {
            message: "quadrature error bound exceeds 1e-8".into(),
            achieved: abs_error,
        });
    }
    Ok(GroundTruthValue {
        value,
        method,
        functional: *functional,
        abs_error,
    })
}
