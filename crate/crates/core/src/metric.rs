//! r-norm geometry on the unit cube.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::special::ln_gamma_unchecked;

/// Norm order `r` with `1 <= r <= inf`. `Infinity` is a distinguished value,
/// not a large float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Norm {
    L1,
    L2,
    /// General finite order `r > 1`, `r != 2`.
    Lp(f64),
    Infinity,
}

impl Norm {
    pub fn new(r: f64) -> Result<Self> {
        if r.is_nan() || r < 1.0 {
            return Err(Error::Parameter(format!("norm order must be >= 1, got {r}")));
        }
        Ok(if r == 1.0 {
            Norm::L1
        } else if r == 2.0 {
            Norm::L2
        } else if r.is_infinite() {
            Norm::Infinity
        } else {
            Norm::Lp(r)
        })
    }

    pub fn order(self) -> f64 {
        match self {
            Norm::L1 => 1.0,
            Norm::L2 => 2.0,
            Norm::Lp(r) => r,
            Norm::Infinity => f64::INFINITY,
        }
    }

    #[inline]
    pub(crate) fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Norm::L1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            Norm::L2 => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Norm::Lp(r) => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs().powf(r))
                .sum::<f64>()
                .powf(1.0 / r),
            Norm::Infinity => a
                .iter()
                .zip(b)
                .fold(0.0, |m, (x, y)| m.max((x - y).abs())),
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Norm::L1 => write!(f, "1"),
            Norm::L2 => write!(f, "2"),
            Norm::Lp(r) => write!(f, "{r}"),
            Norm::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
            return Ok(Norm::Infinity);
        }
        let r: f64 = t
            .parse()
            .map_err(|_| Error::Parameter(format!("cannot parse norm order {s:?}")))?;
        Norm::new(r)
    }
}

/// Dimension and norm order shared by a sample set and every geometric query
/// made against it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricConfig {
    pub dimension: usize,
    pub norm: Norm,
}

impl MetricConfig {
    pub fn new(dimension: usize, norm: Norm) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Parameter("dimension must be >= 1".into()));
        }
        // revalidate Lp payloads built by hand
        if let Norm::Lp(r) = norm {
            Norm::new(r)?;
        }
        Ok(Self { dimension, norm })
    }

    /// Lebesgue volume of the unit r-ball in this dimension.
    pub fn unit_ball_volume(&self) -> f64 {
        unit_ball_volume(self.dimension, self.norm)
    }

    fn check_dim(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dimension {
            return Err(Error::Dimension {
                expected: self.dimension,
                found: p.len(),
            });
        }
        Ok(())
    }
}

/// `‖a − b‖_r` under `cfg`.
pub fn norm_distance(a: &[f64], b: &[f64], cfg: &MetricConfig) -> Result<f64> {
    cfg.check_dim(a)?;
    cfg.check_dim(b)?;
    Ok(cfg.norm.distance(a, b))
}

/// `c_{D,r} = (2Γ(1 + 1/r))^D / Γ(1 + D/r)`, evaluated in log space.
/// The sup-norm ball is the cube of side 2, volume `2^D`.
pub fn unit_ball_volume(dimension: usize, norm: Norm) -> f64 {
    let d = dimension as f64;
    match norm {
        Norm::Infinity => 2f64.powi(dimension as i32),
        _ => {
            let r = norm.order();
            let ln_vol = d * (std::f64::consts::LN_2 + ln_gamma_unchecked(1.0 + 1.0 / r))
                - ln_gamma_unchecked(1.0 + d / r);
            ln_vol.exp()
        }
    }
}

/// Distance from `x` to the boundary of the unit cube. Errors if `x` is
/// outside `[0,1]^D`.
pub fn distance_to_boundary(x: &[f64]) -> Result<f64> {
    let mut m = f64::INFINITY;
    for &c in x {
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::Support { index: 0 });
        }
        m = m.min(c.min(1.0 - c));
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn cfg(d: usize, norm: Norm) -> MetricConfig {
        MetricConfig::new(d, norm).unwrap()
    }

    #[test]
    fn distance_examples() {
        let d = norm_distance(&[0.0, 0.0], &[0.3, 0.4], &cfg(2, Norm::L2)).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
        let d = norm_distance(&[0.2, 0.2], &[0.5, 0.1], &cfg(2, Norm::Infinity)).unwrap();
        assert!((d - 0.3).abs() < 1e-15);
        let a = [0.17, 0.93, 0.5];
        for norm in [Norm::L1, Norm::L2, Norm::Lp(3.0), Norm::Infinity] {
            assert_eq!(norm_distance(&a, &a, &cfg(3, norm)).unwrap(), 0.0);
        }
    }

    #[test]
    fn distance_dimension_mismatch() {
        let err = norm_distance(&[0.0], &[0.1, 0.2], &cfg(2, Norm::L2)).unwrap_err();
        assert_eq!(err, Error::Dimension { expected: 2, found: 1 });
    }

    #[test]
    fn ball_volume_examples() {
        for norm in [Norm::L1, Norm::L2, Norm::Lp(1.5), Norm::Lp(7.0), Norm::Infinity] {
            assert!((unit_ball_volume(1, norm) - 2.0).abs() < 1e-14, "{norm}");
        }
        assert!((unit_ball_volume(2, Norm::L2) - PI).abs() < 1e-14);
        assert!((unit_ball_volume(2, Norm::L1) - 2.0).abs() < 1e-14);
        assert_eq!(unit_ball_volume(3, Norm::Infinity), 8.0);
        // 4/3 π
        assert!((unit_ball_volume(3, Norm::L2) - 4.0 / 3.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn ball_volume_monotone_in_order() {
        for d in 1..=12 {
            let grid = [Norm::L1, Norm::Lp(1.5), Norm::L2, Norm::Lp(3.0), Norm::Infinity];
            let vols: Vec<f64> = grid.iter().map(|&n| unit_ball_volume(d, n)).collect();
            for w in vols.windows(2) {
                assert!(w[1] >= w[0] - 1e-12, "d={d}: {vols:?}");
            }
        }
    }

    #[test]
    fn ball_volume_large_order_approaches_cube() {
        for d in 1..=6 {
            let v = unit_ball_volume(d, Norm::Lp(1024.0));
            assert!((v - 2f64.powi(d as i32)).abs() < 1e-3 * 2f64.powi(d as i32).max(1.0), "d={d}");
        }
        assert!((unit_ball_volume(1, Norm::Lp(64.0)) - 2.0).abs() < 2e-4);
    }

    #[test]
    fn ball_volume_large_dimension_is_finite() {
        let v = unit_ball_volume(400, Norm::L2);
        assert!(v > 0.0 && v.is_finite());
    }

    #[test]
    fn boundary_distance_examples() {
        assert_eq!(distance_to_boundary(&[0.5, 0.5]).unwrap(), 0.5);
        assert!((distance_to_boundary(&[0.1, 0.7]).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(distance_to_boundary(&[0.0, 0.3]).unwrap(), 0.0);
        assert!(matches!(distance_to_boundary(&[1.2, 0.3]), Err(Error::Support { .. })));
    }

    #[test]
    fn norm_parsing() {
        assert_eq!("inf".parse::<Norm>().unwrap(), Norm::Infinity);
        assert_eq!("1".parse::<Norm>().unwrap(), Norm::L1);
        assert_eq!("2".parse::<Norm>().unwrap(), Norm::L2);
        assert_eq!("2.5".parse::<Norm>().unwrap(), Norm::Lp(2.5));
        assert!("0.5".parse::<Norm>().is_err());
        assert!("abc".parse::<Norm>().is_err());
    }

    fn norms() -> impl Strategy<Value = Norm> {
        prop_oneof![
            Just(Norm::L1),
            Just(Norm::L2),
            Just(Norm::Lp(1.5)),
            Just(Norm::Lp(3.0)),
            Just(Norm::Infinity)
        ]
    }

    proptest! {
        #[test]
        fn triangle_inequality(
            d in 1usize..6,
            norm in norms(),
            seed in proptest::collection::vec(0.0f64..1.0, 18),
        ) {
            let c = cfg(d, norm);
            let a = &seed[0..d];
            let b = &seed[6..6 + d];
            let e = &seed[12..12 + d];
            let ac = norm_distance(a, e, &c).unwrap();
            let ab = norm_distance(a, b, &c).unwrap();
            let bc = norm_distance(b, e, &c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-12);
            prop_assert_eq!(ab, norm_distance(b, a, &c).unwrap());
        }
    }
}
