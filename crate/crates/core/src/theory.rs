//! Monte Carlo checks of the finite-sample behavior of k-NN distances at the
//! center of the unit cube under the uniform density and the sup-norm:
//! Chernoff-type concentration, the Erlang limit of `n P(B(x, ε_k(x)))`, and
//! positive/negative moment bounds.
//!
//! Under the uniform law with the sup-norm, every ball `B(x, r)`, `r <= 1`,
//! meets the cube in a box whose sides are all at least `r`, so
//! `2^{-D} <= P(B(x, r)) / μ(B(x, r)) <= 1` for every `x` in the cube. The
//! checks use `p_* = 2^{-D}` and `p^* = 1`, and the ball measure
//! `μ(B(x, r)) = c_{D,∞} r^D = (2r)^D`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{unit_ball_volume, Norm};
use crate::rng;
use crate::special::regularized_lower_gamma;

/// Minimum trial count for the concentration check.
pub const MIN_CONCENTRATION_TRIALS: usize = 1000;

/// Slack, in standard errors, granted to Monte Carlo estimates.
pub const SE_SLACK: f64 = 3.0;

/// Largest KS distance to `Gamma(k, 1)` accepted by the Erlang check.
pub const ERLANG_KS_THRESHOLD: f64 = 0.05;

/// Largest fraction of discarded Erlang trials accepted.
pub const ERLANG_MAX_DISCARD: f64 = 0.01;

/// Radius scale beyond which the local bounds are not claimed.
const RHO: f64 = 1.0;

/// Global lower and upper bounds on `P(B(x, r)) / μ(B(x, r))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalBounds {
    pub p_star: f64,
    pub p_star_upper: f64,
}

impl LocalBounds {
    pub fn new(p_star: f64, p_star_upper: f64) -> Result<Self> {
        if !(p_star > 0.0 && p_star <= p_star_upper && p_star_upper.is_finite()) {
            return Err(Error::Parameter(format!(
                "need 0 < p_* <= p^* < inf, got ({p_star}, {p_star_upper})"
            )));
        }
        Ok(Self {
            p_star,
            p_star_upper,
        })
    }

    /// Bounds for the uniform density on `[0,1]^D` under the sup-norm.
    pub fn uniform_sup_norm(dimension: usize) -> Self {
        Self {
            p_star: 0.5f64.powi(dimension as i32),
            p_star_upper: 1.0,
        }
    }

    /// `κ = k p_* / p^*`.
    pub fn kappa(&self, k: usize) -> f64 {
        k as f64 * self.p_star / self.p_star_upper
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TailSide {
    /// `P[ε_k(x) > r]`.
    Upper,
    /// `P[ε_k(x) < r]`.
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RowStatus {
    Pass,
    Fail,
    Skipped,
}

/// Tail bounds for the k-NN distance at a point with local bounds `bounds`.
///
/// With `λ_* = n p_* μ(B(x,r))` and `λ^* = n p^* μ(B(x,r))`:
///
/// * upper tail, valid for `λ_* > k`: `P[ε_k > r] <= e^{-λ_*} (e λ_* / k)^k`
/// * lower tail, valid for `λ^* < k`: `P[ε_k < r] <= e^{-λ_*} (e λ^* / k)^κ`
#[derive(Debug, Clone, Copy)]
pub struct TailBound {
    pub n: usize,
    pub k: usize,
    pub dimension: usize,
    pub bounds: LocalBounds,
    /// `c_{D,r}`, the measure of the unit ball.
    pub ball_volume: f64,
}

impl TailBound {
    pub fn uniform_sup_norm(n: usize, k: usize, dimension: usize) -> Self {
        Self {
            n,
            k,
            dimension,
            bounds: LocalBounds::uniform_sup_norm(dimension),
            ball_volume: unit_ball_volume(dimension, Norm::Infinity),
        }
    }

    fn mass(&self, r: f64) -> f64 {
        self.n as f64 * self.ball_volume * r.powi(self.dimension as i32)
    }

    /// Smallest radius for which the upper-tail bound holds (exclusive).
    pub fn upper_threshold(&self) -> f64 {
        (self.k as f64 / (self.bounds.p_star * self.ball_volume * self.n as f64))
            .powf(1.0 / self.dimension as f64)
    }

    /// Largest radius for which the lower-tail bound holds (exclusive).
    pub fn lower_threshold(&self) -> f64 {
        (self.k as f64 / (self.bounds.p_star_upper * self.ball_volume * self.n as f64))
            .powf(1.0 / self.dimension as f64)
    }

    /// `None` when `r` is outside the validity range of that side.
    pub fn bound(&self, side: TailSide, r: f64) -> Option<f64> {
        if !(r > 0.0 && r <= RHO) {
            return None;
        }
        let k = self.k as f64;
        let lo = self.bounds.p_star * self.mass(r);
        match side {
            TailSide::Upper => {
                (lo > k).then(|| (-lo + k * (std::f64::consts::E * lo / k).ln()).exp())
            }
            TailSide::Lower => {
                let hi = self.bounds.p_star_upper * self.mass(r);
                (hi < k).then(|| {
                    let kappa = self.bounds.kappa(self.k);
                    (-lo + kappa * (std::f64::consts::E * hi / k).ln()).exp()
                })
            }
        }
    }
}

/// Sample `n` uniform points in `[0,1]^D` and return the sup-norm distance
/// from the center to the k-th nearest.
fn center_knn_distance<R: Rng>(rng: &mut R, n: usize, k: usize, dimension: usize) -> f64 {
    let mut dists: Vec<f64> = (0..n)
        .map(|_| {
            (0..dimension).fold(0.0f64, |m, _| m.max((rng.random::<f64>() - 0.5).abs()))
        })
        .collect();
    let (_, kth, _) = dists.select_nth_unstable_by(k - 1, f64::total_cmp);
    *kth
}

fn check_nk(n: usize, k: usize, dimension: usize) -> Result<()> {
    if dimension == 0 {
        return Err(Error::Parameter("dimension must be >= 1".into()));
    }
    if k == 0 || k > n {
        return Err(Error::Cardinality { k, available: n });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationRow {
    pub radius: f64,
    pub side: TailSide,
    pub empirical_tail: f64,
    pub analytic_bound: f64,
    pub standard_error: f64,
    pub status: RowStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationReport {
    pub n: usize,
    pub k: usize,
    pub dimension: usize,
    pub trials: usize,
    pub bounds: LocalBounds,
    pub rows: Vec<ConcentrationRow>,
}

impl ConcentrationReport {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.status == RowStatus::Fail).count()
    }

    pub fn valid_rows(&self, side: TailSide) -> usize {
        self.rows
            .iter()
            .filter(|r| r.side == side && r.status != RowStatus::Skipped)
            .count()
    }

    pub fn passed(&self) -> bool {
        self.violations() == 0
    }
}

/// Five radii strictly inside each side's validity range: multiples of the
/// upper threshold above it and fractions of the lower threshold below it.
pub fn default_radii(n: usize, k: usize, dimension: usize) -> Vec<f64> {
    let tb = TailBound::uniform_sup_norm(n, k, dimension);
    let lo = tb.lower_threshold();
    let up = tb.upper_threshold();
    let mut radii: Vec<f64> = [0.1, 0.25, 0.5, 0.75, 0.9].iter().map(|f| f * lo).collect();
    radii.extend(
        [1.25, 1.5, 2.0, 3.0, 4.0]
            .iter()
            .map(|f| (f * up).min(RHO)),
    );
    radii
}

/// For each radius, draw `trials` fresh uniform samples of size `n`, measure
/// the empirical frequency of `{ε_k(center) > r}` and `{ε_k(center) < r}`, and
/// compare with [`TailBound`]. Sides where `r` is outside the validity range
/// are reported as skipped.
pub fn concentration_check(
    n: usize,
    k: usize,
    dimension: usize,
    radii: &[f64],
    trials: usize,
    seed: u64,
) -> Result<ConcentrationReport> {
    check_nk(n, k, dimension)?;
    if trials < MIN_CONCENTRATION_TRIALS {
        return Err(Error::Parameter(format!(
            "concentration check needs at least {MIN_CONCENTRATION_TRIALS} trials, got {trials}"
        )));
    }
    let tb = TailBound::uniform_sup_norm(n, k, dimension);
    let mut rows = Vec::with_capacity(2 * radii.len());
    for (ri, &r) in radii.iter().enumerate() {
        let upper = tb.bound(TailSide::Upper, r);
        let lower = tb.bound(TailSide::Lower, r);
        let eps: Vec<f64> = if upper.is_some() || lower.is_some() {
            (0..trials)
                .into_par_iter()
                .map(|t| {
                    let mut g = rng::stream(seed, &[ri as u64, t as u64]);
                    center_knn_distance(&mut g, n, k, dimension)
                })
                .collect()
        } else {
            Vec::new()
        };
        for (side, bound) in [(TailSide::Upper, upper), (TailSide::Lower, lower)] {
            rows.push(match bound {
                None => ConcentrationRow {
                    radius: r,
                    side,
                    empirical_tail: f64::NAN,
                    analytic_bound: f64::NAN,
                    standard_error: f64::NAN,
                    status: RowStatus::Skipped,
                },
                Some(bound) => {
                    let hits = eps
                        .iter()
                        .filter(|&&e| match side {
                            TailSide::Upper => e > r,
                            TailSide::Lower => e < r,
                        })
                        .count();
                    let p = hits as f64 / trials as f64;
                    let se = (p * (1.0 - p) / trials as f64).sqrt();
                    let pass = p <= bound + SE_SLACK * se;
                    ConcentrationRow {
                        radius: r,
                        side,
                        empirical_tail: p,
                        analytic_bound: bound,
                        standard_error: se,
                        status: if pass { RowStatus::Pass } else { RowStatus::Fail },
                    }
                }
            });
        }
    }
    Ok(ConcentrationReport {
        n,
        k,
        dimension,
        trials,
        bounds: tb.bounds,
        rows,
    })
}

/// Kolmogorov–Smirnov distance between the empirical CDF of `samples` and
/// `cdf`. Sorts `samples` in place.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErlangCheckReport {
    pub ks_statistic: f64,
    pub trials_used: usize,
    pub trials_discarded: usize,
    pub n: usize,
    pub k: usize,
    pub dimension: usize,
    pub query: Vec<f64>,
}

impl ErlangCheckReport {
    pub fn discarded_fraction(&self) -> f64 {
        self.trials_discarded as f64 / (self.trials_used + self.trials_discarded) as f64
    }

    pub fn passed(&self) -> bool {
        self.ks_statistic < ERLANG_KS_THRESHOLD && self.discarded_fraction() < ERLANG_MAX_DISCARD
    }
}

/// Per trial, `T = n c_{D,∞} ε_k(x)^D` at the cube center; trials whose ball
/// leaves the cube are discarded. Returns the KS distance between the
/// empirical law of `T` and `Gamma(k, 1)`.
pub fn erlang_check(
    n: usize,
    k: usize,
    dimension: usize,
    trials: usize,
    seed: u64,
) -> Result<ErlangCheckReport> {
    check_nk(n, k, dimension)?;
    let center = vec![0.5; dimension];
    let guard = crate::metric::distance_to_boundary(&center)?;
    let c = unit_ball_volume(dimension, Norm::Infinity);
    let eps: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut g = rng::stream(seed, &[t as u64]);
            center_knn_distance(&mut g, n, k, dimension)
        })
        .collect();
    let mut stats: Vec<f64> = eps
        .iter()
        .filter(|&&e| e <= guard)
        .map(|&e| n as f64 * c * e.powi(dimension as i32))
        .collect();
    let used = stats.len();
    if used == 0 {
        return Err(Error::InsufficientData(
            "no erlang trials satisfied the boundary guard".into(),
        ));
    }
    let kf = k as f64;
    let ks = ks_statistic(&mut stats, |t| {
        regularized_lower_gamma(kf, t).expect("shape and argument are valid")
    });
    Ok(ErlangCheckReport {
        ks_statistic: ks,
        trials_used: used,
        trials_discarded: trials - used,
        n,
        k,
        dimension,
        query: center,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub n: usize,
    pub k: usize,
    pub dimension: usize,
    pub alpha: f64,
    pub trials: usize,
    pub empirical_moment: f64,
    pub standard_error: f64,
    pub analytic_bound: f64,
    pub pass: bool,
}

/// Upper bound on `E[ε_k(x)^α]` at the cube center.
///
/// * `α > 0`: `(1 + α/D) (k / (c n p_*))^{α/D}`.
/// * `−Dκ < α < 0`: `(1 + e^κ |α| / (Dκ + α)) (k / (c n p^*))^{α/D}`, obtained
///   by integrating the lower-tail bound and using `γ(s, κ) <= κ^s / s`.
pub fn moment_bound(n: usize, k: usize, dimension: usize, alpha: f64) -> Result<f64> {
    check_nk(n, k, dimension)?;
    let b = LocalBounds::uniform_sup_norm(dimension);
    let c = unit_ball_volume(dimension, Norm::Infinity);
    let d = dimension as f64;
    let (k, n) = (k as f64, n as f64);
    let kappa = k * b.p_star / b.p_star_upper;
    if alpha > 0.0 && alpha.is_finite() {
        Ok((1.0 + alpha / d) * (k / (c * n * b.p_star)).powf(alpha / d))
    } else if alpha < 0.0 && alpha > -d * kappa {
        let c3 = 1.0 + kappa.exp() * alpha.abs() / (d * kappa + alpha);
        Ok(c3 * (k / (c * n * b.p_star_upper)).powf(alpha / d))
    } else {
        Err(Error::Parameter(format!(
            "moment order must lie in (-D*kappa, 0) or (0, inf) = (-{}, 0) or (0, inf), got {alpha}",
            d * kappa
        )))
    }
}

/// Empirical `E[ε_k(center)^α]` over `trials` uniform samples of size `n`
/// against [`moment_bound`].
pub fn moment_bound_check(
    n: usize,
    k: usize,
    dimension: usize,
    alpha: f64,
    trials: usize,
    seed: u64,
) -> Result<MomentReport> {
    let bound = moment_bound(n, k, dimension, alpha)?;
    if trials < 2 {
        return Err(Error::InsufficientData("moment check needs at least 2 trials".into()));
    }
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut g = rng::stream(seed, &[t as u64]);
            center_knn_distance(&mut g, n, k, dimension).powf(alpha)
        })
        .collect();
    let tf = trials as f64;
    let mean = values.iter().sum::<f64>() / tf;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (tf - 1.0);
    let se = (var / tf).sqrt();
    Ok(MomentReport {
        n,
        k,
        dimension,
        alpha,
        trials,
        empirical_moment: mean,
        standard_error: se,
        analytic_bound: bound,
        pass: mean <= bound + SE_SLACK * se,
    })
}
