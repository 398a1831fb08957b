//! How the optimal stationary subset moves with patience δ and with the
//! efficiency of learning.
//!
//! For features `i, j` with `a_i² > a_j²` write `ΔI = a_i² - a_j²` and
//! `ΔD = (a_i - h_{i,0})² - (a_j - h_{j,0})²`. Feature `i` is weakly preferred
//! at every δ when `ΔI ≥ ΔD`; otherwise there is a unique switching point
//! solving `1 - ΔI/ΔD = F(δ)` with `F(δ) = Σ_{t≥1} δ^t ψ(t)`, which is strictly
//! increasing from `F(0) = 0` to `F(1) = 1`.

use serde::Serialize;

use crate::dynamics::{Efficiency, LearningDynamic};
use crate::error::{Error, Result};
use crate::exec::{self, Parallelism};
use crate::model::{FeatureSubset, ProblemInstance};
use crate::planner::{discounted_baseline_loss, optimal_stationary_sequence_with, stationary_value_with_sum, top_k_positive};
use crate::numeric::bisect_increasing;

/// Absolute bracket width at which δ bisections stop.
pub const SWITCH_TOL: f64 = 1e-10;

/// Breakpoints closer than this are treated as one.
pub const BREAKPOINT_MERGE_TOL: f64 = 1e-12;

/// Resolution of the grid-refinement fallback of [`enumerate_optimal_subsets`].
pub const GRID_RESOLUTION: f64 = 1e-6;

const GRID_COARSE_CELLS: usize = 1000;
const GRID_REFINE_ROUNDS: usize = 3;
const GRID_REFINE_SPLIT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairGap {
    /// The more informative feature.
    pub i: usize,
    pub j: usize,
    pub delta_i: f64,
    pub delta_d: f64,
}

impl PairGap {
    /// Orders the pair so that `i` is the more informative feature. Equal
    /// informativeness has no switching structure and is rejected.
    pub fn new(instance: &ProblemInstance, x: usize, y: usize) -> Result<Self> {
        instance.check_index(x)?;
        instance.check_index(y)?;
        let (ix, iy) = (instance.informativeness(x), instance.informativeness(y));
        if ix == iy {
            return Err(Error::invalid(format!(
                "features {} and {} are equally informative",
                x + 1,
                y + 1
            )));
        }
        let (i, j) = if ix > iy { (x, y) } else { (y, x) };
        Ok(Self::from_gaps(
            i,
            j,
            instance.informativeness(i) - instance.informativeness(j),
            instance.divergence0(i) - instance.divergence0(j),
        )
        .expect("orientation guarantees a positive informativeness gap"))
    }

    pub fn from_gaps(i: usize, j: usize, delta_i: f64, delta_d: f64) -> Result<Self> {
        if delta_i.is_nan() || delta_i <= 0.0 || !delta_d.is_finite() {
            return Err(Error::invalid(format!(
                "informativeness difference must be positive, got {delta_i}"
            )));
        }
        Ok(PairGap { i, j, delta_i, delta_d })
    }

    /// Whether the more informative feature is weakly preferred for every δ.
    pub fn always_more_informative(&self) -> bool {
        self.delta_i >= self.delta_d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "delta", rename_all = "snake_case")]
pub enum SwitchKind {
    AlwaysI,
    Threshold(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwitchPoint {
    pub pair: PairGap,
    pub kind: SwitchKind,
}

impl SwitchPoint {
    pub fn threshold(&self) -> Option<f64> {
        match self.kind {
            SwitchKind::AlwaysI => None,
            SwitchKind::Threshold(d) => Some(d),
        }
    }
}

/// Switching point for any dynamic, by bisection on `F`.
pub fn switching_point(pair: &PairGap, dynamic: &LearningDynamic) -> SwitchPoint {
    if pair.always_more_informative() {
        return SwitchPoint {
            pair: *pair,
            kind: SwitchKind::AlwaysI,
        };
    }
    let target = 1.0 - pair.delta_i / pair.delta_d;
    let root = bisect_increasing(|d| dynamic.marginal_transform(d) - target, 0.0, 1.0, SWITCH_TOL);
    SwitchPoint {
        pair: *pair,
        kind: SwitchKind::Threshold(root),
    }
}

/// Switching point for `φ(t) = w^{2t}`: `(ΔI - ΔD) / (w² ΔI - ΔD)`.
pub fn switching_point_closed_form(pair: &PairGap, w: f64) -> Result<SwitchPoint> {
    if !(0.0..1.0).contains(&w) {
        return Err(Error::invalid(format!("w must lie in [0,1), got {w}")));
    }
    if pair.always_more_informative() {
        return Ok(SwitchPoint {
            pair: *pair,
            kind: SwitchKind::AlwaysI,
        });
    }
    let d = (pair.delta_i - pair.delta_d) / (w * w * pair.delta_i - pair.delta_d);
    Ok(SwitchPoint {
        pair: *pair,
        kind: SwitchKind::Threshold(d),
    })
}

/// Every pair of features with distinct informativeness, `i < j` by index.
pub fn all_switching_points(instance: &ProblemInstance, dynamic: &LearningDynamic) -> Vec<SwitchPoint> {
    let n = instance.n();
    let mut out = Vec::new();
    for x in 0..n {
        for y in x + 1..n {
            if let Ok(pair) = PairGap::new(instance, x, y) {
                out.push(match dynamic.exponential_rate() {
                    Some(w) => switching_point_closed_form(&pair, w).expect("validated w"),
                    None => switching_point(&pair, dynamic),
                });
            }
        }
    }
    out
}

/// Smallest δ from which feature `i` has a positive stationary value, or
/// `None` if it is positive for every δ.
pub fn positivity_threshold(instance: &ProblemInstance, dynamic: &LearningDynamic, i: usize) -> Result<Option<f64>> {
    instance.check_index(i)?;
    let (inf, div) = (instance.informativeness(i), instance.divergence0(i));
    if inf >= div {
        return Ok(None);
    }
    let ratio = inf / div;
    if let Some(w) = dynamic.exponential_rate() {
        return Ok(Some((1.0 - ratio) / (1.0 - ratio * w * w)));
    }
    let target = 1.0 - ratio;
    Ok(Some(bisect_increasing(
        |d| dynamic.marginal_transform(d) - target,
        0.0,
        1.0,
        SWITCH_TOL,
    )))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub parameter: f64,
    pub subset: FeatureSubset,
    pub total_value: f64,
    pub informativeness: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn informativeness_nondecreasing(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].informativeness >= w[0].informativeness - 1e-12)
    }

    pub fn distinct_subsets(&self) -> Vec<FeatureSubset> {
        let mut subsets: Vec<FeatureSubset> = self.rows.iter().map(|r| r.subset.clone()).collect();
        subsets.sort();
        subsets.dedup();
        subsets
    }

    pub fn distinct_nonempty_subsets(&self) -> usize {
        self.distinct_subsets().iter().filter(|s| !s.is_empty()).count()
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("grid must not be empty"));
    }
    if let Some(d) = grid.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
        return Err(Error::invalid(format!("delta grid value {d} is outside (0,1)")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("delta grid must be strictly increasing"));
    }
    Ok(())
}

/// Optimal stationary subset at each δ of `grid`.
pub fn sweep_delta(
    instance: &ProblemInstance,
    dynamic: &LearningDynamic,
    grid: &[f64],
    par: Parallelism,
) -> Result<SweepResult> {
    check_grid(grid)?;
    let rows = exec::map_slice(par, grid, |&delta| {
        let inst = instance.with_delta(delta).expect("grid checked");
        let plan = optimal_stationary_sequence_with(&inst, dynamic, Parallelism::Sequential);
        SweepRow {
            parameter: delta,
            informativeness: plan.subset.informativeness(&inst),
            loss: discounted_baseline_loss(&inst) - plan.total_value,
            total_value: plan.total_value,
            subset: plan.subset,
        }
    });
    Ok(SweepResult { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetInterval {
    pub lo: f64,
    pub hi: f64,
    pub subset: FeatureSubset,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum PartitionMethod {
    /// Breakpoints from closed-form switching points and bisected thresholds.
    Exact,
    /// Grid refinement with the given resolution.
    Grid { resolution: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetPartition {
    pub method: PartitionMethod,
    pub intervals: Vec<SubsetInterval>,
}

impl SubsetPartition {
    pub fn subset_at(&self, delta: f64) -> Option<&FeatureSubset> {
        self.intervals
            .iter()
            .find(|iv| delta >= iv.lo && delta <= iv.hi)
            .map(|iv| &iv.subset)
    }

    /// `n(n-1)/2 + k + 1`: pairwise switches, `k` additions, and the empty set.
    pub fn interval_bound(instance: &ProblemInstance) -> usize {
        let n = instance.n();
        n * (n - 1) / 2 + instance.k() + 1
    }
}

fn optimal_subset_at(instance: &ProblemInstance, dynamic: &LearningDynamic, delta: f64) -> FeatureSubset {
    let s = dynamic.discounted_phi_sum(delta, 0);
    let inst = instance.with_delta(delta).expect("delta inside (0,1)");
    let values: Vec<f64> = (0..inst.n()).map(|i| stationary_value_with_sum(&inst, i, s)).collect();
    top_k_positive(&values, inst.k())
}

/// Partitions `(0,1)` into maximal δ-intervals with a constant optimal
/// stationary subset. Exponential dynamics use exact breakpoints; other
/// dynamics fall back to grid refinement at [`GRID_RESOLUTION`].
pub fn enumerate_optimal_subsets(instance: &ProblemInstance, dynamic: &LearningDynamic) -> SubsetPartition {
    let (method, mut breakpoints) = match dynamic.exponential_rate() {
        Some(_) => (PartitionMethod::Exact, exact_breakpoints(instance, dynamic)),
        None => (
            PartitionMethod::Grid {
                resolution: GRID_RESOLUTION,
            },
            grid_breakpoints(instance, dynamic),
        ),
    };
    breakpoints.retain(|b| *b > 0.0 && *b < 1.0);
    breakpoints.sort_by(f64::total_cmp);
    breakpoints.dedup_by(|b, a| (*b - *a).abs() < BREAKPOINT_MERGE_TOL);

    let mut edges = Vec::with_capacity(breakpoints.len() + 2);
    edges.push(0.0);
    edges.extend(breakpoints);
    edges.push(1.0);

    let mut intervals: Vec<SubsetInterval> = Vec::new();
    for w in edges.windows(2) {
        let subset = optimal_subset_at(instance, dynamic, 0.5 * (w[0] + w[1]));
        match intervals.last_mut() {
            Some(last) if last.subset == subset => last.hi = w[1],
            _ => intervals.push(SubsetInterval {
                lo: w[0],
                hi: w[1],
                subset,
            }),
        }
    }
    SubsetPartition { method, intervals }
}

fn exact_breakpoints(instance: &ProblemInstance, dynamic: &LearningDynamic) -> Vec<f64> {
    let mut out: Vec<f64> = all_switching_points(instance, dynamic)
        .iter()
        .filter_map(SwitchPoint::threshold)
        .collect();
    for i in 0..instance.n() {
        if let Some(t) = positivity_threshold(instance, dynamic, i).expect("index in range") {
            out.push(t);
        }
    }
    out
}

fn grid_breakpoints(instance: &ProblemInstance, dynamic: &LearningDynamic) -> Vec<f64> {
    let mut points = vec![GRID_RESOLUTION];
    points.extend((1..GRID_COARSE_CELLS).map(|j| j as f64 / GRID_COARSE_CELLS as f64));
    points.push(1.0 - GRID_RESOLUTION);
    let subsets: Vec<FeatureSubset> = points.iter().map(|&d| optimal_subset_at(instance, dynamic, d)).collect();

    let mut cells: Vec<(f64, f64, FeatureSubset, FeatureSubset)> = Vec::new();
    for k in 0..points.len() - 1 {
        if subsets[k] != subsets[k + 1] {
            cells.push((points[k], points[k + 1], subsets[k].clone(), subsets[k + 1].clone()));
        }
    }
    for _ in 0..GRID_REFINE_ROUNDS {
        let mut next = Vec::new();
        for (lo, hi, left, right) in cells {
            let step = (hi - lo) / GRID_REFINE_SPLIT as f64;
            let mut prev = (lo, left);
            for s in 1..=GRID_REFINE_SPLIT {
                let x = if s == GRID_REFINE_SPLIT { hi } else { lo + step * s as f64 };
                let sub = if s == GRID_REFINE_SPLIT {
                    right.clone()
                } else {
                    optimal_subset_at(instance, dynamic, x)
                };
                if sub != prev.1 {
                    next.push((prev.0, x, prev.1.clone(), sub.clone()));
                }
                prev = (x, sub);
            }
        }
        cells = next;
    }
    cells.into_iter().map(|(lo, hi, _, _)| 0.5 * (lo + hi)).collect()
}

/// Loss ratios `L(⟨{1}⟩) / L(⟨{2}⟩)` over a `(w, δ)` grid for a two-feature,
/// budget-one instance with exponential learning. Row `r` is `w_grid[r]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossRatioGrid {
    pub w: Vec<f64>,
    pub delta: Vec<f64>,
    pub ratio: Vec<Vec<f64>>,
}

impl LossRatioGrid {
    /// Per row, the first δ column where the ratio is at most 1, i.e. where
    /// the more informative feature has become the better stationary choice.
    pub fn crossings(&self) -> Vec<Option<usize>> {
        self.ratio
            .iter()
            .map(|row| row.iter().position(|&r| r <= 1.0))
            .collect()
    }
}

pub fn loss_ratio_grid(
    instance: &ProblemInstance,
    w_grid: &[f64],
    delta_grid: &[f64],
    par: Parallelism,
) -> Result<LossRatioGrid> {
    if instance.n() != 2 || instance.k() != 1 {
        return Err(Error::invalid(format!(
            "loss-ratio grid needs exactly 2 features and k=1, got n={} k={}",
            instance.n(),
            instance.k()
        )));
    }
    check_grid(delta_grid)?;
    let dynamics = w_grid
        .iter()
        .map(|&w| LearningDynamic::exponential(w))
        .collect::<Result<Vec<_>>>()?;
    let ratio = exec::map_slice(par, &dynamics, |dynamic| {
        delta_grid
            .iter()
            .map(|&delta| {
                let inst = instance.with_delta(delta).expect("grid checked");
                let s = dynamic.discounted_phi_sum(delta, 0);
                let base = discounted_baseline_loss(&inst);
                let l1 = base - stationary_value_with_sum(&inst, 0, s);
                let l2 = base - stationary_value_with_sum(&inst, 1, s);
                l1 / l2
            })
            .collect()
    });
    Ok(LossRatioGrid {
        w: w_grid.to_vec(),
        delta: delta_grid.to_vec(),
        ratio,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencyComparison {
    pub ordering: Efficiency,
    pub subset_first: FeatureSubset,
    pub subset_second: FeatureSubset,
    pub informativeness_first: f64,
    pub informativeness_second: f64,
    pub value_first: f64,
    pub value_second: f64,
    /// Whether the more efficient side picked an at least as informative
    /// subset; `None` when the dynamics are incomparable.
    pub ordering_holds: Option<bool>,
}

pub fn compare_efficiency_selection(
    instance: &ProblemInstance,
    first: &LearningDynamic,
    second: &LearningDynamic,
    horizon: usize,
) -> EfficiencyComparison {
    let ordering = first.compare_efficiency(second, horizon);
    let p1 = optimal_stationary_sequence_with(instance, first, Parallelism::Sequential);
    let p2 = optimal_stationary_sequence_with(instance, second, Parallelism::Sequential);
    let (inf1, inf2) = (p1.subset.informativeness(instance), p2.subset.informativeness(instance));
    let slack = 1e-12 * inf1.max(inf2).max(1.0);
    let ordering_holds = match ordering {
        Efficiency::More => Some(inf1 >= inf2 - slack),
        Efficiency::Less => Some(inf2 >= inf1 - slack),
        Efficiency::Equal => Some((inf1 - inf2).abs() <= slack),
        Efficiency::Incomparable => None,
    };
    EfficiencyComparison {
        ordering,
        informativeness_first: inf1,
        informativeness_second: inf2,
        value_first: p1.total_value,
        value_second: p2.total_value,
        subset_first: p1.subset,
        subset_second: p2.subset,
        ordering_holds,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_feature() -> ProblemInstance {
        ProblemInstance::new(vec![1.0, 0.4], 0.0, vec![-0.5, 0.75], 0.0, 1, 0.5).unwrap()
    }

    #[test]
    fn two_feature_pair_gaps() {
        let pair = PairGap::new(&two_feature(), 1, 0).unwrap();
        assert_eq!((pair.i, pair.j), (0, 1));
        assert!((pair.delta_i - 0.84).abs() < 1e-12);
        assert!((pair.delta_d - 2.1275).abs() < 1e-12);
    }

    #[test]
    fn switching_point_examples() {
        let pair = PairGap::new(&two_feature(), 0, 1).unwrap();
        let w0 = switching_point_closed_form(&pair, 0.0).unwrap().threshold().unwrap();
        assert!((w0 - 1.2875 / 2.1275).abs() < 1e-15);
        assert!((w0 - 0.605_170).abs() < 1e-6);
        let w5 = switching_point_closed_form(&pair, 0.5).unwrap().threshold().unwrap();
        assert!((w5 - 1.2875 / 1.9175).abs() < 1e-15);
        assert!((w5 - 0.671_447).abs() < 1e-6);

        let bis0 = switching_point(&pair, &LearningDynamic::exponential(0.0).unwrap());
        assert!((bis0.threshold().unwrap() - w0).abs() < 1e-9);
        let bis5 = switching_point(&pair, &LearningDynamic::exponential(0.5).unwrap());
        assert!((bis5.threshold().unwrap() - w5).abs() < 1e-9);
    }

    #[test]
    fn aligned_beliefs_always_prefer_informative() {
        let inst = ProblemInstance::new(vec![1.0, 0.4], 0.0, vec![1.0, 0.4], 0.0, 1, 0.5).unwrap();
        let pair = PairGap::new(&inst, 0, 1).unwrap();
        let d = LearningDynamic::exponential(0.3).unwrap();
        assert_eq!(switching_point(&pair, &d).kind, SwitchKind::AlwaysI);
        assert_eq!(switching_point_closed_form(&pair, 0.3).unwrap().kind, SwitchKind::AlwaysI);
    }

    #[test]
    fn equal_informativeness_is_rejected() {
        let inst = ProblemInstance::new(vec![0.5, -0.5], 0.0, vec![0.0, 0.0], 0.0, 1, 0.5).unwrap();
        assert!(PairGap::new(&inst, 0, 1).is_err());
    }

    #[test]
    fn two_feature_partition() {
        let d = LearningDynamic::exponential(0.0).unwrap();
        let part = enumerate_optimal_subsets(&two_feature(), &d);
        assert_eq!(part.method, PartitionMethod::Exact);
        assert_eq!(part.intervals.len(), 2);
        assert_eq!(part.intervals[0].subset.label(), "2");
        assert_eq!(part.intervals[1].subset.label(), "1");
        assert!((part.intervals[0].hi - 1.2875 / 2.1275).abs() < 1e-12);
    }

    #[test]
    fn grid_fallback_locates_breakpoints() {
        // tabulated copy of w=0.5 takes the grid path
        let d = LearningDynamic::tabulated(vec![1.0, 0.25], 0.5).unwrap();
        let part = enumerate_optimal_subsets(&two_feature(), &d);
        assert!(matches!(part.method, PartitionMethod::Grid { .. }));
        assert_eq!(part.intervals.len(), 2);
        let exact = 1.2875 / 1.9175;
        assert!((part.intervals[0].hi - exact).abs() <= GRID_RESOLUTION);
    }

    #[test]
    fn empty_then_growth_partition() {
        // both features start non-positive; the less informative one turns
        // positive first and is later overtaken
        let inst = ProblemInstance::new(vec![1.0, 0.4], 0.0, vec![-1.0, -0.1], 0.0, 1, 0.5).unwrap();
        let d = LearningDynamic::exponential(0.0).unwrap();
        let part = enumerate_optimal_subsets(&inst, &d);
        let labels: Vec<String> = part.intervals.iter().map(|iv| iv.subset.label()).collect();
        assert_eq!(labels, ["{}", "2", "1"]);
        assert!((part.intervals[0].hi - 0.36).abs() < 1e-9);
        assert!(part.intervals.len() <= SubsetPartition::interval_bound(&inst));
    }

    #[test]
    fn single_feature_partition() {
        let inst = ProblemInstance::new(vec![0.5], 0.0, vec![-0.5], 0.0, 1, 0.5).unwrap();
        let d = LearningDynamic::exponential(0.2).unwrap();
        let part = enumerate_optimal_subsets(&inst, &d);
        assert!(part.intervals.len() <= 2);
        assert_eq!(part.intervals.last().unwrap().subset.label(), "1");
    }

    #[test]
    fn sweep_switches_once() {
        let d = LearningDynamic::exponential(0.0).unwrap();
        let grid: Vec<f64> = (1..100).map(|j| j as f64 / 100.0).collect();
        let sweep = sweep_delta(&two_feature(), &d, &grid, Parallelism::Sequential).unwrap();
        let switches = sweep.rows.windows(2).filter(|w| w[0].subset != w[1].subset).count();
        assert_eq!(switches, 1);
        assert!(sweep.informativeness_nondecreasing());
        assert_eq!(sweep.rows[59].subset.label(), "2");
        assert_eq!(sweep.rows[60].subset.label(), "1");

        let one = sweep_delta(&two_feature(), &d, &[0.7], Parallelism::Sequential).unwrap();
        let inst = two_feature().with_delta(0.7).unwrap();
        let plan = crate::planner::optimal_stationary_sequence(&inst, &d);
        assert_eq!(one.rows[0].subset, plan.subset);
        assert_eq!(one.rows[0].total_value, plan.total_value);
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        let d = LearningDynamic::exponential(0.0).unwrap();
        let inst = two_feature();
        assert!(sweep_delta(&inst, &d, &[], Parallelism::Sequential).is_err());
        assert!(sweep_delta(&inst, &d, &[0.5, 0.4], Parallelism::Sequential).is_err());
        assert!(sweep_delta(&inst, &d, &[0.5, 1.0], Parallelism::Sequential).is_err());
    }

    #[test]
    fn loss_ratio_examples() {
        let inst = two_feature();
        let switch = 1.2875 / 2.1275;
        let grid = loss_ratio_grid(&inst, &[0.0], &[switch], Parallelism::Sequential).unwrap();
        assert!((grid.ratio[0][0] - 1.0).abs() < 1e-3);

        // first-step dominance at tiny δ
        let tiny = loss_ratio_grid(&inst, &[0.0, 0.5, 0.9], &[1e-6], Parallelism::Sequential).unwrap();
        let r0 = tiny.ratio[0][0];
        assert!(tiny.ratio.iter().all(|row| (row[0] - r0).abs() < 1e-5));

        let three = ProblemInstance::new(vec![1.0, 0.4, 0.2], 0.0, vec![0.0; 3], 0.0, 1, 0.5).unwrap();
        assert!(loss_ratio_grid(&three, &[0.0], &[0.5], Parallelism::Sequential).is_err());
    }

    #[test]
    fn efficiency_selection_identical_dynamics() {
        let d = LearningDynamic::exponential(0.4).unwrap();
        let inst = two_feature().with_delta(0.65).unwrap();
        let cmp = compare_efficiency_selection(&inst, &d, &d, 64);
        assert_eq!(cmp.ordering, Efficiency::Equal);
        assert_eq!(cmp.subset_first, cmp.subset_second);
        assert_eq!(cmp.ordering_holds, Some(true));
    }

    #[test]
    fn positivity_threshold_matches_closed_form() {
        // w=0: F(δ)=δ, so the threshold is 1 - a²/d²
        let inst = ProblemInstance::new(vec![0.5], 0.0, vec![-0.5], 0.0, 1, 0.5).unwrap();
        let d = LearningDynamic::exponential(0.0).unwrap();
        let t = positivity_threshold(&inst, &d, 0).unwrap().unwrap();
        assert!((t - 0.75).abs() < 1e-9);
        let easy = ProblemInstance::new(vec![0.5], 0.0, vec![0.4], 0.0, 1, 0.5).unwrap();
        assert_eq!(positivity_threshold(&easy, &d, 0).unwrap(), None);
    }
}
