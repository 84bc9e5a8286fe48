//! Monte Carlo rate sweeps: bias, variance, and MSE of an estimator over a
//! grid of sample sizes, with log–log slope fits.

use rayon::prelude::*;
use serde::Serialize;

use crate::distributions::{true_functional, DistributionSpec, GroundTruthValue};
use crate::error::{Error, Result};
use crate::estimators::{estimate, FunctionalSpec};
use crate::metric::Norm;
use crate::rng;

/// Fraction of aborted trials at which a grid point fails the sweep.
pub const MAX_ABORT_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub dist_p: DistributionSpec,
    /// Required for divergences; sampled with the same size as `dist_p`.
    pub dist_q: Option<DistributionSpec>,
    pub functional: FunctionalSpec,
    pub ks: Vec<usize>,
    pub norm: Norm,
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub master_seed: u64,
    /// Hölder exponent of the test density, echoed for slope comparison.
    pub expected_beta: Option<f64>,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ks.is_empty() {
            return Err(Error::Parameter("sweep needs at least one k".into()));
        }
        if self.n_grid.is_empty() {
            return Err(Error::Parameter("sweep needs a non-empty n grid".into()));
        }
        if self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parameter("n grid must be strictly increasing".into()));
        }
        let kmax = *self.ks.iter().max().unwrap_or(&0);
        if self.n_grid[0] <= kmax {
            return Err(Error::Parameter(format!(
                "every grid size must exceed k (smallest n = {}, largest k = {kmax})",
                self.n_grid[0]
            )));
        }
        for &k in &self.ks {
            self.functional.check_k(k)?;
        }
        if self.trials < 2 {
            return Err(Error::Parameter("sweep needs at least 2 trials per grid point".into()));
        }
        if let Some(b) = self.expected_beta {
            if !(b > 0.0 && b <= 2.0) {
                return Err(Error::Parameter(format!("expected beta must be in (0, 2], got {b}")));
            }
        }
        if self.functional.kind.is_divergence() {
            match &self.dist_q {
                Some(q) if q.dimension() == self.dist_p.dimension() => {}
                Some(q) => {
                    return Err(Error::Dimension {
                        expected: self.dist_p.dimension(),
                        found: q.dimension(),
                    })
                }
                None => {
                    return Err(Error::Parameter(format!(
                        "{} sweep requires a second distribution",
                        self.functional.kind.name()
                    )))
                }
            }
        }
        Ok(())
    }
}

/// Aggregates over trials at one `(n, k)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub k: usize,
    pub trials: usize,
    pub aborted: usize,
    pub mean_estimate: f64,
    pub bias: f64,
    pub variance: f64,
    /// `bias² + variance`.
    pub mse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
}

/// Log–log fits against `n` for one `k`. A fit is `None` when some value is
/// not strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepFit {
    pub k: usize,
    pub bias: Option<LineFit>,
    pub variance: Option<LineFit>,
    pub mse: Option<LineFit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub ground_truth: GroundTruthValue,
    pub rows: Vec<SweepRow>,
    pub fits: Vec<SweepFit>,
}

impl SweepResult {
    pub fn fit_for(&self, k: usize) -> Option<&SweepFit> {
        self.fits.iter().find(|f| f.k == k)
    }
}

/// Ordinary least squares of `ln y` on `ln x`. Returns `(slope, intercept)`.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 2 {
        return Err(Error::Cardinality {
            k: 2,
            available: points.len(),
        });
    }
    if let Some(&(x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::Domain(format!(
            "log-log fit needs positive coordinates, got ({x}, {y})"
        )));
    }
    let m = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("log-log fit needs at least two distinct x values".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

fn fit_opt(points: Vec<(f64, f64)>) -> Option<LineFit> {
    fit_loglog_slope(&points)
        .ok()
        .map(|(slope, intercept)| LineFit { slope, intercept })
}

/// One trial: draw samples at grid index `ni`, trial `t`, and estimate for
/// every `k`. Samples are shared across `k`.
fn run_trial(config: &SweepConfig, ni: usize, n: usize, t: usize) -> Vec<Result<f64>> {
    let mut g = rng::stream(config.master_seed, &[ni as u64, t as u64]);
    let samples = config.dist_p.sample_with(&mut g, n, config.norm).and_then(|p| {
        let q = match (&config.dist_q, config.functional.kind.is_divergence()) {
            (Some(q), true) => Some(q.sample_with(&mut g, n, config.norm)?),
            _ => None,
        };
        Ok((p, q))
    });
    match samples {
        Err(e) => config.ks.iter().map(|_| Err(e.clone())).collect(),
        Ok((p, q)) => config
            .ks
            .iter()
            .map(|&k| estimate(&config.functional, &p, q.as_ref(), k).map(|e| e.value))
            .collect(),
    }
}

fn aggregate(n: usize, k: usize, truth: f64, outcomes: &[Result<f64>]) -> Result<SweepRow> {
    let values: Vec<f64> = outcomes.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
    let aborted = outcomes.len() - values.len();
    if aborted as f64 > MAX_ABORT_FRACTION * outcomes.len() as f64 || values.len() < 2 {
        let first = outcomes
            .iter()
            .find_map(|r| r.as_ref().err())
            .map(|e| e.to_string())
            .unwrap_or_default();
        return Err(Error::InsufficientData(format!(
            "{aborted} of {} trials aborted at n={n}, k={k}: {first}",
            outcomes.len()
        )));
    }
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let variance = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
    let bias = mean - truth;
    Ok(SweepRow {
        n,
        k,
        trials: outcomes.len(),
        aborted,
        mean_estimate: mean,
        bias,
        variance,
        mse: bias * bias + variance,
    })
}

fn run_sweep_inner(config: &SweepConfig, truth: GroundTruthValue) -> Result<SweepResult> {
    let mut rows = Vec::with_capacity(config.n_grid.len() * config.ks.len());
    for (ni, &n) in config.n_grid.iter().enumerate() {
        let per_trial: Vec<Vec<Result<f64>>> = (0..config.trials)
            .into_par_iter()
            .map(|t| run_trial(config, ni, n, t))
            .collect();
        for (ki, &k) in config.ks.iter().enumerate() {
            let outcomes: Vec<Result<f64>> = per_trial.iter().map(|v| v[ki].clone()).collect();
            rows.push(aggregate(n, k, truth.value, &outcomes)?);
        }
    }
    let fits = config
        .ks
        .iter()
        .map(|&k| {
            let mine: Vec<&SweepRow> = rows.iter().filter(|r| r.k == k).collect();
            let pick = |f: fn(&SweepRow) -> f64| -> Vec<(f64, f64)> {
                mine.iter().map(|r| (r.n as f64, f(r))).collect()
            };
            SweepFit {
                k,
                bias: fit_opt(pick(|r| r.bias.abs())),
                variance: fit_opt(pick(|r| r.variance)),
                mse: fit_opt(pick(|r| r.mse)),
            }
        })
        .collect();
    Ok(SweepResult {
        config: config.clone(),
        ground_truth: truth,
        rows,
        fits,
    })
}

/// Run `trials` independent estimates at each grid size and aggregate.
/// Trial `t` at grid index `i` draws from the stream seeded by
/// `derive_seed(master_seed, [i, t])`, so the output is the same for any
/// thread count.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let truth = true_functional(&config.dist_p, config.dist_q.as_ref(), &config.functional)?;
    match config.threads {
        None => run_sweep_inner(config, truth),
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.max(1))
                .build()
                .map_err(|e| Error::Parameter(format!("cannot build thread pool: {e}")))?;
            pool.install(|| run_sweep_inner(config, truth))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn fit_examples() {
        let (s, _) = fit_loglog_slope(&[(10.0, 0.1), (100.0, 0.01)]).unwrap();
        assert!((s + 1.0).abs() < 1e-12);
        let (s, i) = fit_loglog_slope(&[(1.0, 1.0), (10.0, 0.1)]).unwrap();
        assert!((s + 1.0).abs() < 1e-12 && i.abs() < 1e-12);
        let (s, i) = fit_loglog_slope(&[(1.0, 2.0), (100.0, 2.0)]).unwrap();
        assert!(s.abs() < 1e-12 && (i - 2f64.ln()).abs() < 1e-12);
        let (s, _) = fit_loglog_slope(&[(E, E * E), (E * E, E.powi(4))]).unwrap();
        assert!((s - 2.0).abs() < 1e-12);
    }

    #[test]
    fn fit_errors() {
        assert!(matches!(fit_loglog_slope(&[(1.0, 1.0)]), Err(Error::Cardinality { .. })));
        assert!(matches!(
            fit_loglog_slope(&[(1.0, 1.0), (2.0, 0.0)]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            fit_loglog_slope(&[(-1.0, 1.0), (2.0, 1.0)]),
            Err(Error::Domain(_))
        ));
    }

    fn small_config() -> SweepConfig {
        SweepConfig {
            dist_p: "beta:2,2".parse().unwrap(),
            dist_q: None,
            functional: FunctionalSpec::shannon(),
            ks: vec![1, 2],
            norm: Norm::L2,
            n_grid: vec![64, 128, 256],
            trials: 8,
            master_seed: 17,
            expected_beta: Some(2.0),
            threads: None,
        }
    }

    #[test]
    fn sweep_rows_satisfy_decomposition() {
        let res = run_sweep(&small_config()).unwrap();
        assert_eq!(res.rows.len(), 6);
        for r in &res.rows {
            let want = r.bias * r.bias + r.variance;
            assert!((r.mse - want).abs() <= 1e-10 * want.abs());
            assert_eq!(r.aborted, 0);
        }
        assert_eq!(res.fits.len(), 2);
        assert!(res.fit_for(2).unwrap().variance.is_some());
    }

    #[test]
    fn sweep_is_thread_count_invariant() {
        let mut a = small_config();
        a.threads = Some(1);
        let mut b = small_config();
        b.threads = Some(4);
        let ra = run_sweep(&a).unwrap();
        let rb = run_sweep(&b).unwrap();
        assert_eq!(ra.rows, rb.rows);
    }

    #[test]
    fn sweep_validation() {
        let mut c = small_config();
        c.n_grid = vec![128, 64];
        assert!(run_sweep(&c).is_err());
        let mut c = small_config();
        c.n_grid = vec![2, 64];
        assert!(run_sweep(&c).is_err());
        let mut c = small_config();
        c.trials = 1;
        assert!(run_sweep(&c).is_err());
        let mut c = small_config();
        c.functional = FunctionalSpec::kl();
        assert!(run_sweep(&c).is_err());
    }

    #[test]
    fn aborted_trials_fail_the_grid_point() {
        let outcomes = |bad: usize| -> Vec<Result<f64>> {
            (0..20)
                .map(|i| {
                    if i < bad {
                        Err(Error::DegenerateSample { index: 0 })
                    } else {
                        Ok(i as f64)
                    }
                })
                .collect()
        };
        let row = aggregate(20, 1, 0.0, &outcomes(2)).unwrap();
        assert_eq!((row.trials, row.aborted), (20, 2));
        assert!(aggregate(20, 1, 0.0, &outcomes(3)).is_err());
    }
}
