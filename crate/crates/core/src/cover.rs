//! Covers of a lens codomain: overlapping intervals, grid boxes built as the
//! product of per-axis interval covers, and the coordinate cover of the
//! probability simplex.
//!
//! Intervals are closed so that floating-point lens values sitting exactly on
//! an endpoint are still covered.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Closed interval `[lo, hi]`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Interval cover of one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisCover {
    intervals: Vec<Interval>,
    /// Set for uniform covers built by [`AxisCover::uniform`].
    overlap: Option<f64>,
}

impl AxisCover {
    /// `n` equal-length intervals over `[lo, hi]`, consecutive ones sharing a
    /// fraction `overlap` of their length.
    ///
    /// Length is `(hi - lo) / (n - (n - 1) * overlap)` and interval `i` starts at
    /// `lo + i * length * (1 - overlap)`. The last upper end is pinned to `hi`.
    pub fn uniform(n: usize, overlap: f64, lo: f64, hi: f64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("cover needs at least one interval"));
        }
        if !(0.0..1.0).contains(&overlap) {
            return Err(invalid(format!("overlap {overlap} outside [0, 1)")));
        }
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(invalid(format!("invalid cover range [{lo}, {hi}]")));
        }
        if overlap >= 0.5 && n > 2 {
            log::warn!("overlap {overlap} >= 0.5 creates triple intersections between intervals");
        }
        let length = (hi - lo) / (n as f64 - (n as f64 - 1.0) * overlap);
        let step = length * (1.0 - overlap);
        let mut intervals: Vec<Interval> = (0..n)
            .map(|i| {
                let start = lo + i as f64 * step;
                Interval::new(start, start + length)
            })
            .collect();
        intervals[0].lo = lo;
        intervals[n - 1].hi = hi;
        Ok(Self {
            intervals,
            overlap: Some(overlap),
        })
    }

    /// Arbitrary intervals, kept in the given order.
    pub fn from_intervals(intervals: Vec<Interval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(invalid("cover needs at least one interval"));
        }
        if intervals
            .iter()
            .any(|iv| iv.lo.is_nan() || iv.hi.is_nan() || iv.lo > iv.hi)
        {
            return Err(invalid("interval bounds must satisfy lo <= hi"));
        }
        Ok(Self {
            intervals,
            overlap: None,
        })
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn overlap(&self) -> Option<f64> {
        self.overlap
    }

    /// Smallest lower and largest upper bound.
    pub fn range(&self) -> Interval {
        let lo = self.intervals.iter().map(|i| i.lo).fold(f64::INFINITY, f64::min);
        let hi = self.intervals.iter().map(|i| i.hi).fold(f64::NEG_INFINITY, f64::max);
        Interval::new(lo, hi)
    }

    /// Ascending indices of intervals containing `x`.
    pub fn membership(&self, x: f64) -> Vec<usize> {
        self.intervals
            .iter()
            .enumerate()
            .filter(|(_, iv)| iv.contains(x))
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverKind {
    Intervals,
    Grid,
    Simplex,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cover {
    Intervals(AxisCover),
    /// Product of per-axis covers; sets are ordered row-major over axis indices.
    Grid(Vec<AxisCover>),
    /// `B_k = { x in simplex : x_k > 0 }` for `k < K`.
    Simplex(usize),
}

/// Result of a membership query.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Membership {
    pub sets: Vec<usize>,
    /// No set contains the point.
    pub out_of_range: bool,
}

impl Cover {
    pub fn interval(n: usize, overlap: f64, lo: f64, hi: f64) -> Result<Self> {
        AxisCover::uniform(n, overlap, lo, hi).map(Cover::Intervals)
    }

    /// Grid over `ranges` with per-axis counts and overlaps. `1 <= d <= 3`.
    pub fn grid(counts: &[usize], overlaps: &[f64], ranges: &[(f64, f64)]) -> Result<Self> {
        let d = counts.len();
        if d == 0 || d > 3 {
            return Err(invalid(format!("grid dimension {d} outside 1..=3")));
        }
        if overlaps.len() != d || ranges.len() != d {
            return Err(invalid(format!(
                "grid axis mismatch: {} counts, {} overlaps, {} ranges",
                d,
                overlaps.len(),
                ranges.len()
            )));
        }
        let axes = (0..d)
            .map(|a| AxisCover::uniform(counts[a], overlaps[a], ranges[a].0, ranges[a].1))
            .collect::<Result<Vec<_>>>()?;
        Ok(Cover::Grid(axes))
    }

    pub fn simplex(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(invalid("simplex cover needs K >= 1"));
        }
        Ok(Cover::Simplex(k))
    }

    pub fn kind(&self) -> CoverKind {
        match self {
            Cover::Intervals(_) => CoverKind::Intervals,
            Cover::Grid(_) => CoverKind::Grid,
            Cover::Simplex(_) => CoverKind::Simplex,
        }
    }

    /// Dimension of the points this cover accepts.
    pub fn dim(&self) -> usize {
        match self {
            Cover::Intervals(_) => 1,
            Cover::Grid(axes) => axes.len(),
            Cover::Simplex(k) => *k,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Cover::Intervals(axis) => axis.len(),
            Cover::Grid(axes) => axes.iter().map(AxisCover::len).product(),
            Cover::Simplex(k) => *k,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-axis bounds of set `index` (intervals and grid covers only).
    pub fn set_bounds(&self, index: usize) -> Option<Vec<Interval>> {
        match self {
            Cover::Intervals(axis) => axis.intervals().get(index).map(|iv| vec![*iv]),
            Cover::Grid(axes) => {
                if index >= self.len() {
                    return None;
                }
                let mut rest = index;
                let mut out = vec![Interval::new(0.0, 0.0); axes.len()];
                for (a, axis) in axes.iter().enumerate().rev() {
                    out[a] = axis.intervals()[rest % axis.len()];
                    rest /= axis.len();
                }
                Some(out)
            }
            Cover::Simplex(_) => None,
        }
    }

    pub fn membership(&self, x: &[f64]) -> Result<Membership> {
        if x.len() != self.dim() {
            return Err(invalid(format!(
                "point of dimension {} queried against a {}-dimensional cover",
                x.len(),
                self.dim()
            )));
        }
        let sets = match self {
            Cover::Intervals(axis) => axis.membership(x[0]),
            Cover::Grid(axes) => {
                let per_axis: Vec<Vec<usize>> = axes.iter().zip(x).map(|(axis, &xi)| axis.membership(xi)).collect();
                let mut sets = vec![0usize];
                for (axis, hits) in axes.iter().zip(&per_axis) {
                    sets = sets
                        .iter()
                        .flat_map(|&prefix| hits.iter().map(move |&h| prefix * axis.len() + h))
                        .collect();
                }
                sets
            }
            Cover::Simplex(_) => (0..x.len()).filter(|&k| x[k] > 0.0).collect(),
        };
        Ok(Membership {
            out_of_range: sets.is_empty(),
            sets,
        })
    }
}
