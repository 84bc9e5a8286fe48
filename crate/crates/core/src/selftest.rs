//! Exact small-sample cases with hand-computed values.

use std::f64::consts::{LN_2, PI};

use serde::Serialize;

use crate::error::Result;
use crate::estimators::{alpha_divergence_functional, kl_divergence, renyi_functional, shannon_entropy};
use crate::metric::Norm;
use crate::neighbors::SampleSet;

pub const SELFTEST_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestCase {
    pub name: &'static str,
    pub value: f64,
    pub expected: f64,
    pub abs_error: f64,
    pub pass: bool,
}

fn line(xs: &[f64]) -> Result<SampleSet> {
    SampleSet::from_scalars(xs, Norm::L2)
}

fn case(name: &'static str, value: f64, expected: f64) -> SelftestCase {
    let abs_error = (value - expected).abs();
    SelftestCase {
        name,
        value,
        expected,
        abs_error,
        pass: abs_error <= SELFTEST_TOLERANCE,
    }
}

pub fn run_selftest() -> Result<Vec<SelftestCase>> {
    let p = line(&[0.3, 0.7])?;
    let q = line(&[0.2, 0.6])?;
    Ok(vec![
        case(
            "shannon k=1 {0.25,0.75}",
            shannon_entropy(&line(&[0.25, 0.75])?, 1)?.value,
            1.0,
        ),
        case(
            "renyi alpha=2 k=2 {0.2,0.5,0.8}",
            renyi_functional(&line(&[0.2, 0.5, 0.8])?, 2, 2.0)?.value,
            20.0 / 27.0,
        ),
        case("kl k=1 {0.3,0.7} vs {0.2,0.6}", kl_divergence(&p, &q, 1)?.value, -LN_2),
        case(
            "alpha-div alpha=0.5 k=1 {0.3,0.7} vs {0.2,0.6}",
            alpha_divergence_functional(&p, &q, 1, 0.5)?.value,
            4.0 / PI,
        ),
    ])
}
