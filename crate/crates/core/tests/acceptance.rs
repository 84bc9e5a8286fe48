//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so every line is printed. Set
//! `FIXEDK_SKIP_SLOW=1` to skip the long bias-rate sweep.

use std::process::{Command, ExitCode};
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fixedk::distributions::DistributionSpec;
use fixedk::estimators::{alpha_divergence_functional, kl_divergence, shannon_entropy};
use fixedk::harness::{run_sweep, SweepConfig, SweepResult};
use fixedk::metric::{MetricConfig, Norm};
use fixedk::neighbors::{cross_raw, leave_one_out_raw, Backend, SampleSet};
use fixedk::rng::derive_seed;
use fixedk::selftest::run_selftest;
use fixedk::theory::{concentration_check, default_radii, erlang_check, moment_bound, moment_bound_check};
use fixedk::FunctionalSpec;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = fn() -> Verdict;

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn attempt(f: impl FnOnce() -> fixedk::Result<Verdict>) -> Verdict {
    f().unwrap_or_else(|e| Verdict::Fail(format!("error: {e}")))
}

fn c01_selftest() -> Verdict {
    attempt(|| {
        let start = Instant::now();
        let cases = run_selftest()?;
        let elapsed = start.elapsed().as_secs_f64();
        let worst = cases.iter().map(|c| c.abs_error).fold(0.0, f64::max);
        Ok(verdict(
            cases.iter().all(|c| c.pass) && elapsed < 1.0,
            format!("4 hand examples, max abs error {worst:.1e} (tol 1e-12), {elapsed:.3}s"),
        ))
    })
}

fn random_set(rng: &mut ChaCha8Rng, n: usize, d: usize, norm: Norm) -> fixedk::Result<SampleSet> {
    let coarse = rng.random_bool(0.2);
    let coords = (0..n * d)
        .map(|_| {
            let u: f64 = rng.random();
            if coarse {
                (u * 8.0).floor() / 8.0
            } else {
                u
            }
        })
        .collect();
    SampleSet::from_flat(coords, MetricConfig::new(d, norm)?)
}

fn c02_backend_equivalence() -> Verdict {
    attempt(|| {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let norms = [Norm::L1, Norm::L2, Norm::Infinity];
        let mut worst = 0.0f64;
        for inst in 0..100 {
            let n = rng.random_range(2..=512);
            let d = rng.random_range(1..=8);
            let norm = norms[inst % 3];
            let k = rng.random_range(1..n.min(10));
            let data = random_set(&mut rng, n, d, norm)?;
            let m = rng.random_range(1..64);
            let queries = random_set(&mut rng, m, d, norm)?;
            let pairs = [
                (
                    leave_one_out_raw(&data, k, Backend::BruteForce)?,
                    leave_one_out_raw(&data, k, Backend::KdTree)?,
                ),
                (
                    cross_raw(&queries, &data, k, Backend::BruteForce)?,
                    cross_raw(&queries, &data, k, Backend::KdTree)?,
                ),
            ];
            for (a, b) in &pairs {
                for (x, y) in a.iter().zip(b) {
                    worst = worst.max((x - y).abs());
                }
            }
        }
        let elapsed = start.elapsed().as_secs_f64();
        Ok(verdict(
            worst <= 1e-12 && elapsed < 30.0,
            format!("100 instances, max |tree - brute| {worst:.1e}, {elapsed:.2}s"),
        ))
    })
}

fn c03_accuracy() -> Verdict {
    attempt(|| {
        let b22: DistributionSpec = "beta:2,2".parse()?;
        let unif: DistributionSpec = "uniform".parse()?;
        let n = 8192;
        let seeds = 32u64;
        let (mut h, mut kl, mut ad) = (0.0, 0.0, 0.0);
        for s in 0..seeds {
            let p = b22.sample(n, derive_seed(3, &[s, 0]), Norm::L2)?;
            let q_unif = unif.sample(n, derive_seed(3, &[s, 1]), Norm::L2)?;
            let q_b22 = b22.sample(n, derive_seed(3, &[s, 2]), Norm::L2)?;
            h += shannon_entropy(&p, 1)?.value;
            kl += kl_divergence(&p, &q_unif, 1)?.value;
            ad += alpha_divergence_functional(&p, &q_b22, 1, 0.5)?.value;
        }
        let sf = seeds as f64;
        let (h, kl, ad) = (h / sf, kl / sf, ad / sf);
        let dh = (h + 0.125_093).abs();
        let dkl = (kl - 0.125_093).abs();
        let dad = (ad - 1.0).abs();
        Ok(verdict(
            dh < 0.05 && dkl < 0.05 && dad < 0.05,
            format!(
                "shannon {h:.5} (|err| {dh:.4}), kl {kl:.5} (|err| {dkl:.4}), alpha-div {ad:.5} (|err| {dad:.4}); tol 0.05"
            ),
        ))
    })
}

fn beta22_sweep() -> fixedk::Result<SweepResult> {
    static SWEEP: OnceLock<fixedk::Result<SweepResult>> = OnceLock::new();
    SWEEP.get_or_init(beta22_sweep_uncached).clone()
}

fn beta22_sweep_uncached() -> fixedk::Result<SweepResult> {
    run_sweep(&SweepConfig {
        dist_p: "beta:2,2".parse()?,
        dist_q: None,
        functional: FunctionalSpec::shannon(),
        ks: vec![1],
        norm: Norm::L2,
        n_grid: vec![512, 1024, 2048, 4096, 8192, 16384],
        trials: 64,
        master_seed: 4,
        expected_beta: Some(2.0),
        threads: None,
    })
}

fn c04_mse_rate() -> Verdict {
    attempt(|| {
        let r = beta22_sweep()?;
        let slope = r.fit_for(1).and_then(|f| f.mse).map(|f| f.slope);
        Ok(match slope {
            Some(s) => verdict((s + 1.0).abs() <= 0.3, format!("mse slope {s:.3} (target -1 +/- 0.3)")),
            None => Verdict::Fail("mse slope unavailable".into()),
        })
    })
}

fn c05_variance_rate() -> Verdict {
    attempt(|| {
        let r = beta22_sweep()?;
        let slope = r.fit_for(1).and_then(|f| f.variance).map(|f| f.slope);
        Ok(match slope {
            Some(s) => verdict((s + 1.0).abs() <= 0.3, format!("variance slope {s:.3} (target -1 +/- 0.3)")),
            None => Verdict::Fail("variance slope unavailable".into()),
        })
    })
}

fn c06_bias_rate() -> Verdict {
    if std::env::var_os("FIXEDK_SKIP_SLOW").is_some() {
        return Verdict::Skip("slow; FIXEDK_SKIP_SLOW is set".into());
    }
    attempt(|| {
        let start = Instant::now();
        let r = run_sweep(&SweepConfig {
            dist_p: "beta:2,2^4".parse()?,
            dist_q: None,
            functional: FunctionalSpec::shannon(),
            ks: vec![1],
            norm: Norm::L2,
            n_grid: vec![1024, 2048, 4096, 8192, 16384, 32768],
            trials: BIAS_TRIALS,
            master_seed: 6,
            expected_beta: Some(2.0),
            threads: None,
        })?;
        let elapsed = start.elapsed().as_secs_f64();
        let slope = r.fit_for(1).and_then(|f| f.bias).map(|f| f.slope);
        Ok(match slope {
            Some(s) => verdict(
                (s + 0.5).abs() <= 0.25,
                format!("bias slope {s:.3} (target -0.5 +/- 0.25), {BIAS_TRIALS} trials, {elapsed:.0}s"),
            ),
            None => Verdict::Fail("bias changes sign on the grid; no log-log fit".into()),
        })
    })
}

const BIAS_TRIALS: usize = 1000;

fn c07_erlang() -> Verdict {
    attempt(|| {
        let mut parts = Vec::new();
        let mut ok = true;
        for k in [1, 3] {
            let rep = erlang_check(4096, k, 2, 2000, 7)?;
            ok &= rep.passed();
            parts.push(format!(
                "k={k}: KS {:.4}, discarded {:.2}%",
                rep.ks_statistic,
                100.0 * rep.discarded_fraction()
            ));
        }
        Ok(verdict(ok, format!("{} (KS < 0.05, discard < 1%)", parts.join("; "))))
    })
}

fn c08_concentration() -> Verdict {
    attempt(|| {
        let mut violations = 0;
        let mut short_sides = 0;
        let mut rows = 0;
        for n in [100, 1000] {
            for k in [1, 3] {
                for d in [1, 2] {
                    let rep = concentration_check(n, k, d, &default_radii(n, k, d), 5000, 8)?;
                    violations += rep.violations();
                    for side in [fixedk::theory::TailSide::Upper, fixedk::theory::TailSide::Lower] {
                        let v = rep.valid_rows(side);
                        rows += v;
                        if v < 5 {
                            short_sides += 1;
                        }
                    }
                }
            }
        }
        Ok(verdict(
            violations == 0 && short_sides == 0,
            format!("{rows} valid rows over 8 configurations, {violations} violations, {short_sides} sides with < 5 radii"),
        ))
    })
}

fn c09_moments() -> Verdict {
    attempt(|| {
        let exact = moment_bound(100, 1, 1, 1.0)?;
        let mut ok = exact == 0.02;
        let mut parts = vec![format!("alpha=1 bound {exact}")];
        for alpha in [1.0, 2.0, -0.25] {
            let rep = moment_bound_check(100, 1, 1, alpha, 5000, 9)?;
            ok &= rep.pass;
            parts.push(format!(
                "alpha={alpha}: {:.4e} <= {:.4e}",
                rep.empirical_moment, rep.analytic_bound
            ));
        }
        Ok(verdict(ok, parts.join("; ")))
    })
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_fixedk"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?} exited with {}", out.status));
    }
    Ok(out.stdout)
}

fn c10_determinism() -> Verdict {
    let sweep = [
        "sweep", "--dist", "beta:2,2", "--n-grid", "256,512,1024", "--trials", "16", "--seed", "10",
    ];
    let invocations: Vec<Vec<&str>> = vec![
        ["estimate", "--dist", "beta:2,2^2", "--n", "2000", "--seed", "5", "--k", "3"].to_vec(),
        ["estimate", "--functional", "kl", "--dist", "beta:2,2", "--dist-q", "uniform", "--n", "2000", "--seed", "5", "--format", "csv"].to_vec(),
        ["check", "erlang", "--n", "1024", "--trials", "500", "--seed", "3"].to_vec(),
        ["check", "concentration", "--n", "100", "--k", "3", "--dim", "2", "--trials", "1000"].to_vec(),
        sweep.to_vec(),
        [&sweep[..], &["--format", "csv"]].concat(),
    ];
    let mut compared = 0;
    for args in &invocations {
        let mut outputs = Vec::new();
        for threads in [None, Some("1"), Some("2"), Some("4")] {
            let mut a = args.clone();
            if let Some(t) = threads {
                a.extend(["--threads", t]);
            }
            match run_cli(&a) {
                Ok(o) => outputs.push(o),
                Err(e) => return Verdict::Fail(e),
            }
        }
        match run_cli(args) {
            Ok(o) => outputs.push(o),
            Err(e) => return Verdict::Fail(e),
        }
        if outputs.windows(2).any(|w| w[0] != w[1]) {
            return Verdict::Fail(format!("output differs for {args:?}"));
        }
        compared += outputs.len();
    }
    Verdict::Pass(format!(
        "{} invocations x {compared} runs byte-identical across --threads 1/2/4 and default",
        invocations.len()
    ))
}

fn main() -> ExitCode {
    let list = std::env::args().any(|a| a == "--list");
    let criteria: [(&str, Check); 10] = [
        ("exact hand examples", c01_selftest),
        ("tree vs brute-force k-NN", c02_backend_equivalence),
        ("accuracy vs analytic truth", c03_accuracy),
        ("MSE rate", c04_mse_rate),
        ("variance rate", c05_variance_rate),
        ("bias rate (slow)", c06_bias_rate),
        ("Erlang limit", c07_erlang),
        ("concentration", c08_concentration),
        ("moment bounds", c09_moments),
        ("CLI determinism", c10_determinism),
    ];
    if list {
        for i in 1..=criteria.len() {
            println!("criterion_{i:02}: test");
        }
        return ExitCode::SUCCESS;
    }
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (tag, detail) = match check() {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Verdict::Skip(d) => ("SKIP", d),
        };
        println!("criterion {:>2} [{tag}] {name}: {detail}", i + 1);
    }
    println!("acceptance: {} of 10 failed", failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
