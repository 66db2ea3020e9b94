//! Pareto front construction and quality measures.

use std::collections::HashSet;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::Solution;

/// Coefficient of variation at or below which a set of runs counts as stable.
pub const STABILITY_CV: f64 = 0.05;

/// Mutually non-dominated solutions, kept sorted by ascending effort.
#[derive(Clone, Debug, PartialEq)]
pub struct Front {
    instance: String,
    solutions: Vec<Solution>,
}

impl Front {
    pub fn instance(&self) -> &str {
        &self.instance
    }

    pub fn solutions(&self) -> &[Solution] {
        &self.solutions
    }

    pub fn into_solutions(self) -> Vec<Solution> {
        self.solutions
    }

    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    /// Distinct `(satisfaction, effort)` points in ascending effort.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = self.solutions.iter().map(Solution::point).collect();
        pts.dedup_by(|a, b| a.0.to_bits() == b.0.to_bits() && a.1.to_bits() == b.1.to_bits());
        pts
    }

    pub fn contains_selection(&self, selection: &FixedBitSet) -> bool {
        self.solutions.iter().any(|s| s.selected() == selection)
    }
}

/// Keeps exactly the solutions no other solution dominates. Repeated
/// selections collapse to one; different selections sharing an objective
/// point are all kept.
pub fn nondominated_filter<I>(instance: impl Into<String>, solutions: I) -> Front
where
    I: IntoIterator<Item = Solution>,
{
    let mut all: Vec<Solution> = solutions.into_iter().collect();
    all.sort_by(Solution::cmp_by_effort);
    all.dedup_by(|a, b| a.selected() == b.selected());

    let mut kept = Vec::new();
    let mut best_below = f64::NEG_INFINITY;
    let mut i = 0;
    while i < all.len() {
        let effort = all[i].effort();
        let mut j = i;
        while j < all.len() && all[j].effort() == effort {
            j += 1;
        }
        // sorted by descending satisfaction within an effort level
        let top = all[i].satisfaction();
        if top >= best_below {
            kept.extend(all[i..j].iter().filter(|s| s.satisfaction() == top).cloned());
        }
        best_below = best_below.max(top);
        i = j;
    }
    Front {
        instance: instance.into(),
        solutions: kept,
    }
}

/// Area dominated by the front inside the box bounded by the nadir point
/// `(effort_limit, 0)`.
pub fn hypervolume(front: &Front, effort_limit: f64) -> Result<f64> {
    hypervolume_of_points(&front.points(), effort_limit)
}

/// Same as [`hypervolume`] on raw `(satisfaction, effort)` points.
pub fn hypervolume_of_points(points: &[(f64, f64)], effort_limit: f64) -> Result<f64> {
    if let Some(&(s, e)) = points.iter().find(|p| p.1 > effort_limit) {
        return Err(Error::Domain(format!(
            "point (sat {s}, eff {e}) exceeds the effort limit {effort_limit}"
        )));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.1.total_cmp(&b.1).then(b.0.total_cmp(&a.0)));
    let mut area = 0.0;
    let mut height = 0.0f64;
    for (k, &(sat, eff)) in pts.iter().enumerate() {
        height = height.max(sat);
        let next = pts.get(k + 1).map_or(effort_limit, |p| p.1);
        area += height * (next - eff);
    }
    Ok(area)
}

fn point_key(p: (f64, f64)) -> (u64, u64) {
    (p.0.to_bits(), p.1.to_bits())
}

/// Number of distinct objective points of `front` that also appear on `reference`.
pub fn coincident_solutions(front: &Front, reference: &Front) -> usize {
    coincident_points(&front.points(), &reference.points())
}

/// [`coincident_solutions`] on raw `(satisfaction, effort)` points. Repeated
/// points count once.
pub fn coincident_points(points: &[(f64, f64)], reference: &[(f64, f64)]) -> usize {
    let reference: HashSet<(u64, u64)> = reference.iter().copied().map(point_key).collect();
    let mine: HashSet<(u64, u64)> = points.iter().copied().map(point_key).collect();
    mine.intersection(&reference).count()
}

/// Stricter variant of [`coincident_solutions`]: counts solutions whose exact
/// requirement set appears on `reference`.
pub fn coincident_selections(front: &Front, reference: &Front) -> usize {
    let reference: HashSet<&FixedBitSet> = reference.solutions.iter().map(Solution::selected).collect();
    front
        .solutions
        .iter()
        .filter(|s| reference.contains(s.selected()))
        .count()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiveNumberSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunStatistics {
    pub count: usize,
    pub mean: f64,
    /// Sample (n - 1) standard deviation; 0 for a single value.
    pub sd: f64,
    /// `sd / mean`; `None` when the mean is 0 and the values are not constant.
    pub cv: Option<f64>,
    pub summary: FiveNumberSummary,
    pub stable: bool,
}

/// Mean, dispersion and five-number summary of per-run values. Quartiles use
/// linear interpolation between order statistics.
pub fn run_statistics(values: &[f64]) -> Result<RunStatistics> {
    if values.is_empty() {
        return Err(Error::Domain("statistics of an empty sequence".into()));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite value {v}")));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let cv = if sd == 0.0 {
        Some(0.0)
    } else if mean != 0.0 {
        Some(sd / mean.abs())
    } else {
        None
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let h = (n - 1) as f64 * p;
        let lo = h.floor() as usize;
        let hi = h.ceil() as usize;
        sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
    };
    Ok(RunStatistics {
        count: n,
        mean,
        sd,
        cv,
        summary: FiveNumberSummary {
            min: sorted[0],
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            max: sorted[n - 1],
        },
        stable: cv.is_some_and(|c| c <= STABILITY_CV),
    })
}
