//! k-NN density estimate, the uncorrected plug-in estimator, and the four
//! bias-corrected fixed-k estimators.
//!
//! Conventions shared by every estimator here:
//!
//! * at a sample point `X_i` the k-NN distance `ε_k(X_i)` is taken among the
//!   other `n − 1` samples, while the density estimate and the correction
//!   constants use the total count `n`;
//! * logarithms are natural, outputs are in nats;
//! * a zero k-NN distance (duplicate points) is an error, never jittered;
//! * per-point terms are computed in parallel but summed in index order, so
//!   results do not depend on the thread count.

use std::fmt;

use crate::error::{Error, Result};
use crate::metric::MetricConfig;
use crate::neighbors::{cross_distances, knn_distance, leave_one_out_distances, SampleSet};
use crate::special::{digamma_unchecked, ln_gamma_unchecked};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionalKind {
    /// `H(P) = −E[log p(X)]`.
    ShannonEntropy,
    /// `E[p^{α−1}(X)]`.
    RenyiFunctional,
    /// `E_P[log(p/q)]`.
    KlDivergence,
    /// `E_P[(p/q)^{α−1}]`.
    AlphaDivergenceFunctional,
    /// Uncorrected `(1/n) Σ f(p̂_k(X_i))`.
    PlugIn,
}

impl FunctionalKind {
    pub fn name(self) -> &'static str {
        match self {
            FunctionalKind::ShannonEntropy => "shannon",
            FunctionalKind::RenyiFunctional => "renyi",
            FunctionalKind::KlDivergence => "kl",
            FunctionalKind::AlphaDivergenceFunctional => "alpha-div",
            FunctionalKind::PlugIn => "plugin",
        }
    }

    pub fn is_divergence(self) -> bool {
        matches!(
            self,
            FunctionalKind::KlDivergence | FunctionalKind::AlphaDivergenceFunctional
        )
    }
}

/// Scalar map applied by the plug-in estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlugInMap {
    Log,
    /// `z ↦ z^e`; the Rényi functional uses `e = α − 1`.
    Power(f64),
}

impl PlugInMap {
    fn apply_log(self, ln_z: f64) -> f64 {
        match self {
            PlugInMap::Log => ln_z,
            PlugInMap::Power(e) => (e * ln_z).exp(),
        }
    }
}

/// Which functional to estimate, with its parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalSpec {
    pub kind: FunctionalKind,
    pub alpha: Option<f64>,
    pub plug_in_f: Option<PlugInMap>,
}

fn check_alpha(alpha: f64) -> Result<f64> {
    if !alpha.is_finite() || alpha == 1.0 {
        return Err(Error::Parameter(format!("alpha must be finite and != 1, got {alpha}")));
    }
    Ok(alpha)
}

impl FunctionalSpec {
    pub fn shannon() -> Self {
        Self {
            kind: FunctionalKind::ShannonEntropy,
            alpha: None,
            plug_in_f: None,
        }
    }

    pub fn renyi(alpha: f64) -> Result<Self> {
        Ok(Self {
            kind: FunctionalKind::RenyiFunctional,
            alpha: Some(check_alpha(alpha)?),
            plug_in_f: None,
        })
    }

    pub fn kl() -> Self {
        Self {
            kind: FunctionalKind::KlDivergence,
            alpha: None,
            plug_in_f: None,
        }
    }

    pub fn alpha_divergence(alpha: f64) -> Result<Self> {
        Ok(Self {
            kind: FunctionalKind::AlphaDivergenceFunctional,
            alpha: Some(check_alpha(alpha)?),
            plug_in_f: None,
        })
    }

    pub fn plug_in(map: PlugInMap) -> Result<Self> {
        if let PlugInMap::Power(e) = map {
            if !e.is_finite() {
                return Err(Error::Parameter(format!("plug-in exponent must be finite, got {e}")));
            }
        }
        Ok(Self {
            kind: FunctionalKind::PlugIn,
            alpha: None,
            plug_in_f: Some(map),
        })
    }

    fn alpha_value(&self) -> Result<f64> {
        self.alpha
            .ok_or_else(|| Error::Parameter(format!("{} requires alpha", self.kind.name())))
            .and_then(check_alpha)
    }

    /// Whether the correction constant exists for this `k`.
    pub fn check_k(&self, k: usize) -> Result<()> {
        if k == 0 {
            return Err(Error::Parameter("k must be >= 1".into()));
        }
        let kf = k as f64;
        match self.kind {
            FunctionalKind::RenyiFunctional => {
                let a = self.alpha_value()?;
                if kf + 1.0 - a <= 0.0 {
                    return Err(Error::Parameter(format!(
                        "renyi functional needs k + 1 - alpha > 0 (k={k}, alpha={a})"
                    )));
                }
            }
            FunctionalKind::AlphaDivergenceFunctional => {
                let a = self.alpha_value()?;
                if kf - a + 1.0 <= 0.0 || kf + a - 1.0 <= 0.0 {
                    return Err(Error::Parameter(format!(
                        "alpha-divergence needs k - alpha + 1 > 0 and k + alpha - 1 > 0 (k={k}, alpha={a})"
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

impl fmt::Display for FunctionalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.kind, self.alpha, self.plug_in_f) {
            (FunctionalKind::PlugIn, _, Some(PlugInMap::Log)) => write!(f, "plugin(log)"),
            (FunctionalKind::PlugIn, _, Some(PlugInMap::Power(e))) => write!(f, "plugin(power({e}))"),
            (kind, Some(a), _) => write!(f, "{}(alpha={a})", kind.name()),
            (kind, None, _) => write!(f, "{}", kind.name()),
        }
    }
}

/// Output of an estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub functional: FunctionalSpec,
    pub k: usize,
    pub n: usize,
    pub m: Option<usize>,
    pub metric: MetricConfig,
    pub correction_description: String,
}

impl Estimate {
    /// `log(F̂) / (1 − α)` for a Rényi functional estimate.
    pub fn renyi_entropy(&self) -> Option<f64> {
        match (self.functional.kind, self.functional.alpha) {
            (FunctionalKind::RenyiFunctional, Some(a)) => Some(self.value.ln() / (1.0 - a)),
            _ => None,
        }
    }
}

fn mean(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    values.sum::<f64>() / n as f64
}

/// `ln p̂_k = ln(k/n) − ln c_{D,r} − D ln ε`.
fn ln_density(k: usize, n: usize, ln_ball: f64, d: usize, dist: f64) -> f64 {
    (k as f64 / n as f64).ln() - ln_ball - d as f64 * dist.ln()
}

fn loo(data: &SampleSet, k: usize) -> Result<Vec<f64>> {
    let n = data.len();
    if n < 2 || k == 0 || k > n - 1 {
        return Err(Error::Cardinality {
            k,
            available: n.saturating_sub(1),
        });
    }
    Ok(leave_one_out_distances(data, k)?.values)
}

fn check_pair(p: &SampleSet, q: &SampleSet, k: usize) -> Result<()> {
    if p.metric() != q.metric() {
        return Err(Error::Dimension {
            expected: p.dimension(),
            found: q.dimension(),
        });
    }
    let available = (p.len().saturating_sub(1)).min(q.len());
    if k == 0 || k > available {
        return Err(Error::Cardinality { k, available });
    }
    Ok(())
}

/// `p̂_k(x) = (k/n) / (c_{D,r} ε_k(x)^D)` with `n` the full sample count,
/// including an excluded self.
pub fn knn_density(
    data: &SampleSet,
    query: &[f64],
    k: usize,
    exclude_index: Option<usize>,
) -> Result<f64> {
    let eps = knn_distance(query, data, k, exclude_index)?;
    if eps <= 0.0 {
        return Err(Error::DegenerateSample {
            index: exclude_index.unwrap_or(0),
        });
    }
    let metric = data.metric();
    Ok(ln_density(k, data.len(), metric.unit_ball_volume().ln(), metric.dimension, eps).exp())
}

/// Kozachenko–Leonenko entropy estimate
/// `Ĥ = −(1/n) Σ ln p̂_k(X_i) + ψ(n) − ψ(k) + ln(k/n)`, which equals
/// `ψ(n) − ψ(k) + ln c_{D,r} + (D/n) Σ ln ε_k(X_i)`.
pub fn shannon_entropy(data: &SampleSet, k: usize) -> Result<Estimate> {
    let eps = loo(data, k)?;
    let n = data.len();
    let metric = *data.metric();
    let ln_ball = metric.unit_ball_volume().ln();
    let correction = digamma_unchecked(n as f64) - digamma_unchecked(k as f64)
        + (k as f64 / n as f64).ln();
    let mean_ln_density = mean(
        eps.iter()
            .map(|&e| ln_density(k, n, ln_ball, metric.dimension, e)),
        n,
    );
    let value = correction - mean_ln_density;
    Ok(Estimate {
        value,
        functional: FunctionalSpec::shannon(),
        k,
        n,
        m: None,
        metric,
        correction_description: format!(
            "additive: psi(n) - psi(k) + log(k/n) = {correction}"
        ),
    })
}

/// `F̂ = Γ(k)/Γ(k+1−α) · (1/n) Σ p̂_k(X_i)^{α−1}`, estimating `E[p^{α−1}]`.
pub fn renyi_functional(data: &SampleSet, k: usize, alpha: f64) -> Result<Estimate> {
    let spec = FunctionalSpec::renyi(alpha)?;
    spec.check_k(k)?;
    let eps = loo(data, k)?;
    let n = data.len();
    let metric = *data.metric();
    let ln_ball = metric.unit_ball_volume().ln();
    let ln_const = ln_gamma_unchecked(k as f64) - ln_gamma_unchecked(k as f64 + 1.0 - alpha);
    let constant = ln_const.exp();
    let raw = mean(
        eps.iter()
            .map(|&e| ((alpha - 1.0) * ln_density(k, n, ln_ball, metric.dimension, e)).exp()),
        n,
    );
    Ok(Estimate {
        value: constant * raw,
        functional: spec,
        k,
        n,
        m: None,
        metric,
        correction_description: format!(
            "multiplicative: Gamma(k)/Gamma(k+1-alpha) = {constant}"
        ),
    })
}

/// `D̂ = (D/n) Σ ln(δ_k(X_i)/ε_k(X_i)) + ln(m/(n−1))`.
pub fn kl_divergence(data_p: &SampleSet, data_q: &SampleSet, k: usize) -> Result<Estimate> {
    check_pair(data_p, data_q, k)?;
    let eps = loo(data_p, k)?;
    let delta = cross_distances(data_p, data_q, k)?.values;
    let n = data_p.len();
    let m = data_q.len();
    let metric = *data_p.metric();
    let d = metric.dimension as f64;
    let constant = (m as f64 / (n - 1) as f64).ln();
    let value = d * mean(delta.iter().zip(&eps).map(|(dl, e)| (dl / e).ln()), n) + constant;
    Ok(Estimate {
        value,
        functional: FunctionalSpec::kl(),
        k,
        n,
        m: Some(m),
        metric,
        correction_description: format!(
            "none: p and q corrections cancel; sample-size constant log(m/(n-1)) = {constant}"
        ),
    })
}

/// `F̂ = Γ(k)²/(Γ(k−α+1)Γ(k+α−1)) · (1/n) Σ (p̂_k(X_i)/q̂_k(X_i))^{α−1}`,
/// estimating `E_P[(p/q)^{α−1}]`.
pub fn alpha_divergence_functional(
    data_p: &SampleSet,
    data_q: &SampleSet,
    k: usize,
    alpha: f64,
) -> Result<Estimate> {
    let spec = FunctionalSpec::alpha_divergence(alpha)?;
    spec.check_k(k)?;
    check_pair(data_p, data_q, k)?;
    let eps = loo(data_p, k)?;
    let delta = cross_distances(data_p, data_q, k)?.values;
    let n = data_p.len();
    let m = data_q.len();
    let metric = *data_p.metric();
    let d = metric.dimension as f64;
    let kf = k as f64;
    let ln_const = 2.0 * ln_gamma_unchecked(kf)
        - ln_gamma_unchecked(kf - alpha + 1.0)
        - ln_gamma_unchecked(kf + alpha - 1.0);
    let constant = ln_const.exp();
    // ln(p̂/q̂) = ln(m/n) + D ln(δ/ε)
    let ln_sizes = (m as f64 / n as f64).ln();
    let raw = mean(
        delta
            .iter()
            .zip(&eps)
            .map(|(dl, e)| ((alpha - 1.0) * (ln_sizes + d * (dl / e).ln())).exp()),
        n,
    );
    Ok(Estimate {
        value: constant * raw,
        functional: spec,
        k,
        n,
        m: Some(m),
        metric,
        correction_description: format!(
            "multiplicative: Gamma(k)^2/(Gamma(k-alpha+1)Gamma(k+alpha-1)) = {constant}"
        ),
    })
}

/// Uncorrected plug-in `(1/n) Σ f(p̂_k(X_i))`.
pub fn plug_in(data: &SampleSet, k: usize, spec: &FunctionalSpec) -> Result<Estimate> {
    let map = match (spec.kind, spec.plug_in_f) {
        (FunctionalKind::PlugIn, Some(map)) => map,
        _ => {
            return Err(Error::Parameter(
                "plug_in requires a PlugIn functional with a scalar map".into(),
            ))
        }
    };
    let eps = loo(data, k)?;
    let n = data.len();
    let metric = *data.metric();
    let ln_ball = metric.unit_ball_volume().ln();
    let value = mean(
        eps.iter()
            .map(|&e| map.apply_log(ln_density(k, n, ln_ball, metric.dimension, e))),
        n,
    );
    Ok(Estimate {
        value,
        functional: *spec,
        k,
        n,
        m: None,
        metric,
        correction_description: "none: uncorrected plug-in".into(),
    })
}

/// Dispatch on `spec.kind`. Divergences require `data_q`.
pub fn estimate(
    spec: &FunctionalSpec,
    data_p: &SampleSet,
    data_q: Option<&SampleSet>,
    k: usize,
) -> Result<Estimate> {
    let need_q = || {
        data_q.ok_or_else(|| {
            Error::Parameter(format!("{} requires a second sample", spec.kind.name()))
        })
    };
    match spec.kind {
        FunctionalKind::ShannonEntropy => shannon_entropy(data_p, k),
        FunctionalKind::RenyiFunctional => renyi_functional(data_p, k, spec.alpha_value()?),
        FunctionalKind::KlDivergence => kl_divergence(data_p, need_q()?, k),
        FunctionalKind::AlphaDivergenceFunctional => {
            alpha_divergence_functional(data_p, need_q()?, k, spec.alpha_value()?)
        }
        FunctionalKind::PlugIn => plug_in(data_p, k, spec),
    }
}
