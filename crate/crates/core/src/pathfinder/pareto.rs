//! Non-dominated filtering of objective vectors and grid-bin thinning.

use std::cmp::Ordering;
use std::collections::HashSet;

/// `(ToF, ΔV, -|α|, V_inf)`, every component minimised.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveVector(pub [f64; 4]);

impl ObjectiveVector {
    pub fn new(tof_days: f64, dv_mps: f64, alpha_deg: f64, v_inf_mps: f64) -> Self {
        Self([tof_days, dv_mps, -alpha_deg.abs(), v_inf_mps])
    }

    pub fn tof_days(&self) -> f64 {
        self.0[0]
    }

    pub fn dv_mps(&self) -> f64 {
        self.0[1]
    }

    pub fn alpha_deg(&self) -> f64 {
        -self.0[2]
    }

    pub fn v_inf_mps(&self) -> f64 {
        self.0[3]
    }

    /// Componentwise `<=` with at least one strict `<`.
    pub fn dominates(&self, other: &Self) -> bool {
        let mut strict = false;
        for (a, b) in self.0.iter().zip(other.0.iter()) {
            if a > b {
                return false;
            }
            strict |= a < b;
        }
        strict
    }

    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    }
}

/// Bin widths of the four objectives. The pump-angle width is supplied per
/// point because it scales with the local maximum bend angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinWidths {
    pub tof_days: f64,
    pub dv_mps: f64,
    pub v_inf_mps: f64,
}

fn bin_key(v: &ObjectiveVector, widths: &BinWidths, alpha_width_deg: f64) -> [i64; 4] {
    let cell = |x: f64, w: f64| (x / w).floor() as i64;
    [
        cell(v.0[0], widths.tof_days),
        cell(v.0[1], widths.dv_mps),
        cell(v.0[2], alpha_width_deg),
        cell(v.0[3], widths.v_inf_mps),
    ]
}

/// Above this many distinct V_inf values the bucketed filter falls back to
/// pairwise checks against the kept set.
const MAX_BUCKETS: usize = 256;

/// Indices of the non-dominated points, in lexicographic order of their
/// vectors (equal vectors by index). Equal vectors do not dominate each
/// other, so duplicates all survive.
pub fn non_dominated(points: &[ObjectiveVector]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].lex_cmp(&points[b]).then(a.cmp(&b)));
    let mut speeds: Vec<f64> = points.iter().map(|p| p.0[3]).collect();
    speeds.sort_by(f64::total_cmp);
    speeds.dedup();
    if speeds.len() <= MAX_BUCKETS {
        bucketed(points, &order, &speeds)
    } else {
        pairwise(points, &order)
    }
}

/// A point can only be dominated by one that sorts before it, and a
/// dominated dominator is itself dominated by a kept point.
fn pairwise(points: &[ObjectiveVector], order: &[usize]) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for &i in order {
        let p = &points[i];
        if !kept.iter().any(|&k| points[k].dominates(p)) {
            kept.push(i);
        }
    }
    kept
}

/// 2D staircase over (ΔV, -|α|): ΔV ascending, second component strictly
/// descending.
#[derive(Default)]
struct Staircase(std::collections::BTreeMap<OrdF64, f64>);

#[derive(Clone, Copy)]
struct OrdF64(f64);
impl PartialEq for OrdF64 {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}
impl Eq for OrdF64 {}
impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl Staircase {
    /// Some stored point is `<=` (x, y) in both components.
    fn covers(&self, x: f64, y: f64) -> bool {
        self.0
            .range(..=OrdF64(x))
            .next_back()
            .is_some_and(|(_, &sy)| sy <= y)
    }

    fn insert(&mut self, x: f64, y: f64) {
        let stale: Vec<OrdF64> = self
            .0
            .range(OrdF64(x)..)
            .take_while(|(_, &sy)| sy >= y)
            .map(|(k, _)| *k)
            .collect();
        for k in stale {
            self.0.remove(&k);
        }
        self.0.insert(OrdF64(x), y);
    }
}

/// Points in lexicographic order, one staircase per distinct V_inf. Runs of
/// equal vectors are decided together so that equality never counts as
/// domination.
fn bucketed(points: &[ObjectiveVector], order: &[usize], speeds: &[f64]) -> Vec<usize> {
    let bucket = |v: f64| speeds.partition_point(|s| s.total_cmp(&v).is_lt());
    let mut stairs: Vec<Staircase> = (0..speeds.len()).map(|_| Staircase::default()).collect();
    let mut kept = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let p = points[order[i]];
        let mut j = i + 1;
        while j < order.len() && points[order[j]].lex_cmp(&p).is_eq() {
            j += 1;
        }
        let b = bucket(p.0[3]);
        let dominated = stairs[..=b].iter().any(|s| s.covers(p.0[1], p.0[2]));
        if !dominated {
            kept.extend_from_slice(&order[i..j]);
            stairs[b].insert(p.0[1], p.0[2]);
        }
        i = j;
    }
    kept
}

/// Keep the first index of each occupied bin. With `ids` in lexicographic
/// order the keeper is the lexicographic minimum of its bin.
pub fn bin_filter(
    points: &[ObjectiveVector],
    ids: &[usize],
    widths: &BinWidths,
    alpha_width_deg: impl Fn(usize) -> f64,
) -> Vec<usize> {
    let mut seen = HashSet::with_capacity(ids.len());
    ids.iter()
        .copied()
        .filter(|&i| seen.insert(bin_key(&points[i], widths, alpha_width_deg(i))))
        .collect()
}

/// Non-dominated subset, optionally thinned to one point per bin.
pub fn pareto_prune(
    points: &[ObjectiveVector],
    bins: Option<(&BinWidths, &dyn Fn(usize) -> f64)>,
) -> Vec<usize> {
    let nd = non_dominated(points);
    match bins {
        Some((widths, alpha)) => bin_filter(points, &nd, widths, alpha),
        None => nd,
    }
}

/// Two-objective (ToF, ΔV) non-dominated subset, lexicographic order.
pub fn pareto_2d(points: &[(f64, f64)]) -> Vec<usize> {
    let vecs: Vec<ObjectiveVector> = points
        .iter()
        .map(|&(t, d)| ObjectiveVector([t, d, 0.0, 0.0]))
        .collect();
    non_dominated(&vecs)
}
