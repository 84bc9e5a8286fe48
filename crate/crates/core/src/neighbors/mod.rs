//! k-nearest-neighbor distances with a brute-force reference backend and a
//! k-d tree backend.

mod kdtree;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metric::{MetricConfig, Norm};

pub use kdtree::KdTree;

/// An ordered collection of points in `R^D` together with the metric they are
/// analyzed under. Index identity is stable; leave-one-out queries rely on it.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    coords: Vec<f64>,
    metric: MetricConfig,
}

impl SampleSet {
    pub fn new(points: Vec<Vec<f64>>, metric: MetricConfig) -> Result<Self> {
        let mut coords = Vec::with_capacity(points.len() * metric.dimension);
        for p in &points {
            if p.len() != metric.dimension {
                return Err(Error::Dimension {
                    expected: metric.dimension,
                    found: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(coords, metric)
    }

    /// Build from row-major coordinates, `D` values per point.
    pub fn from_flat(coords: Vec<f64>, metric: MetricConfig) -> Result<Self> {
        let d = metric.dimension;
        if coords.is_empty() {
            return Err(Error::InsufficientData("sample set must contain at least one point".into()));
        }
        if !coords.len().is_multiple_of(d) {
            return Err(Error::Dimension {
                expected: d,
                found: coords.len() % d,
            });
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::Domain(format!("non-finite coordinate in point {}", i / d)));
        }
        Ok(Self { coords, metric })
    }

    /// One-dimensional sample set from scalars.
    pub fn from_scalars(values: &[f64], norm: Norm) -> Result<Self> {
        Self::from_flat(values.to_vec(), MetricConfig::new(1, norm)?)
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.metric.dimension
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.metric.dimension
    }

    pub fn metric(&self) -> &MetricConfig {
        &self.metric
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.metric.dimension;
        &self.coords[i * d..(i + 1) * d]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.metric.dimension)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Same points analyzed under a different norm.
    pub fn with_norm(&self, norm: Norm) -> Result<Self> {
        Ok(Self {
            coords: self.coords.clone(),
            metric: MetricConfig::new(self.metric.dimension, norm)?,
        })
    }

    /// Apply `f` to every coordinate, keeping the metric.
    pub fn map_coords(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_flat(self.coords.iter().map(|&c| f(c)).collect(), self.metric)
    }

    /// Index of the first point with a coordinate outside `[0,1]`.
    pub fn first_outside_cube(&self) -> Option<usize> {
        self.points()
            .position(|p| p.iter().any(|c| !(0.0..=1.0).contains(c)))
    }

    pub fn check_in_cube(&self) -> Result<()> {
        match self.first_outside_cube() {
            Some(index) => Err(Error::Support { index }),
            None => Ok(()),
        }
    }
}

/// One k-NN distance per query.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborDistances {
    pub values: Vec<f64>,
    pub k: usize,
    pub self_excluded: bool,
}

impl NeighborDistances {
    /// Fails with a degenerate-sample error at the first zero distance.
    pub fn require_positive(self) -> Result<Self> {
        match self.values.iter().position(|&v| v <= 0.0) {
            Some(index) => Err(Error::DegenerateSample { index }),
            None => Ok(self),
        }
    }
}

/// Search backend selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    BruteForce,
    KdTree,
    /// k-d tree for r in {1, 2, inf}, brute force otherwise.
    #[default]
    Auto,
}

/// A searchable view over a sample set. Immutable once built, so it can be
/// shared across threads.
pub enum KnnIndex<'a> {
    Brute(&'a SampleSet),
    Tree(KdTree<'a>),
}

impl<'a> KnnIndex<'a> {
    pub fn build(data: &'a SampleSet, backend: Backend) -> Self {
        let tree_ok = matches!(data.metric.norm, Norm::L1 | Norm::L2 | Norm::Infinity);
        match backend {
            Backend::KdTree | Backend::Auto if tree_ok => KnnIndex::Tree(KdTree::build(data)),
            _ => KnnIndex::Brute(data),
        }
    }

    pub fn data(&self) -> &'a SampleSet {
        match self {
            KnnIndex::Brute(d) => d,
            KnnIndex::Tree(t) => t.data(),
        }
    }

    /// Distance from `query` to its k-th nearest usable point.
    pub fn query(&self, query: &[f64], k: usize, exclude: Option<usize>) -> Result<f64> {
        let data = self.data();
        check_query(data, query, k, exclude)?;
        Ok(match self {
            KnnIndex::Brute(d) => brute_kth(d, query, k, exclude),
            KnnIndex::Tree(t) => t.kth_distance(query, k, exclude),
        })
    }
}

fn check_query(data: &SampleSet, query: &[f64], k: usize, exclude: Option<usize>) -> Result<()> {
    if query.len() != data.dimension() {
        return Err(Error::Dimension {
            expected: data.dimension(),
            found: query.len(),
        });
    }
    let available = match exclude {
        Some(i) if i < data.len() => data.len() - 1,
        _ => data.len(),
    };
    if k == 0 || k > available {
        return Err(Error::Cardinality { k, available });
    }
    Ok(())
}

fn brute_kth(data: &SampleSet, query: &[f64], k: usize, exclude: Option<usize>) -> f64 {
    let norm = data.metric.norm;
    let mut dists: Vec<f64> = data
        .points()
        .enumerate()
        .filter(|(i, _)| Some(*i) != exclude)
        .map(|(_, p)| norm.distance(query, p))
        .collect();
    let (_, kth, _) = dists.select_nth_unstable_by(k - 1, f64::total_cmp);
    *kth
}

/// Distance from `query` to its k-th nearest point of `data`, optionally
/// skipping the point at `exclude_index`. Brute-force reference.
pub fn knn_distance(
    query: &[f64],
    data: &SampleSet,
    k: usize,
    exclude_index: Option<usize>,
) -> Result<f64> {
    check_query(data, query, k, exclude_index)?;
    Ok(brute_kth(data, query, k, exclude_index))
}

/// Leave-one-out k-NN distances without the positivity check. Zeros from
/// duplicate points are returned as-is.
pub fn leave_one_out_raw(data: &SampleSet, k: usize, backend: Backend) -> Result<Vec<f64>> {
    let n = data.len();
    if k == 0 || k >= n {
        return Err(Error::Cardinality {
            k,
            available: n.saturating_sub(1),
        });
    }
    let index = KnnIndex::build(data, backend);
    (0..n)
        .into_par_iter()
        .map(|i| index.query(data.point(i), k, Some(i)))
        .collect()
}

/// Cross-sample k-NN distances without the positivity check.
pub fn cross_raw(
    queries: &SampleSet,
    data: &SampleSet,
    k: usize,
    backend: Backend,
) -> Result<Vec<f64>> {
    if queries.metric() != data.metric() {
        return Err(Error::Dimension {
            expected: data.dimension(),
            found: queries.dimension(),
        });
    }
    if k == 0 || k > data.len() {
        return Err(Error::Cardinality {
            k,
            available: data.len(),
        });
    }
    let index = KnnIndex::build(data, backend);
    (0..queries.len())
        .into_par_iter()
        .map(|i| index.query(queries.point(i), k, None))
        .collect()
}

/// `values[i]` is the k-NN distance of point `i` among the other `n − 1`
/// points. Zero distances are a degenerate-sample error.
pub fn leave_one_out_distances(data: &SampleSet, k: usize) -> Result<NeighborDistances> {
    NeighborDistances {
        values: leave_one_out_raw(data, k, Backend::Auto)?,
        k,
        self_excluded: true,
    }
    .require_positive()
}

/// `values[i]` is the k-NN distance from `queries[i]` to `data`.
pub fn cross_distances(
    queries: &SampleSet,
    data: &SampleSet,
    k: usize,
) -> Result<NeighborDistances> {
    NeighborDistances {
        values: cross_raw(queries, data, k, Backend::Auto)?,
        k,
        self_excluded: false,
    }
    .require_positive()
}
