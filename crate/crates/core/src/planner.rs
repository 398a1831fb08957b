//! Optimal static subsets and optimal stationary sequences.
//!
//! Both planners reduce to the same selection rule: compute an additive
//! per-feature value, sort, and keep the top `k` features whose value is
//! strictly positive. Ties are broken by the lower index.

use serde::Serialize;

use crate::dynamics::LearningDynamic;
use crate::error::Result;
use crate::exec::{self, Parallelism};
use crate::model::{unchecked_static_value, FeatureSubset, ProblemInstance};
use crate::numeric::nearly_equal;

/// Relative gap under which two feature values count as tied.
pub const NEAR_TIE_REL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureValueReport {
    pub index: usize,
    pub informativeness: f64,
    pub divergence0: f64,
    pub value: f64,
    pub selected: bool,
}

/// A selected subset with per-feature reports, sorted by decreasing value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plan {
    pub subset: FeatureSubset,
    pub total_value: f64,
    pub reports: Vec<FeatureValueReport>,
    /// Set when two feature values are within [`NEAR_TIE_REL`] of each other,
    /// so the selection depends on the index tie-break.
    pub degenerate: bool,
}

/// Feature order by decreasing value, lower index first on equal values.
pub fn rank_features(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
    order
}

/// The up-to-`k` features with the largest strictly positive values.
pub fn top_k_positive(values: &[f64], k: usize) -> FeatureSubset {
    let order = rank_features(values);
    select_from_order(&order, values, k)
}

fn select_from_order(order: &[usize], values: &[f64], k: usize) -> FeatureSubset {
    let mut chosen: Vec<usize> = order
        .iter()
        .copied()
        .take_while(|&i| values[i] > 0.0)
        .take(k)
        .collect();
    chosen.sort_unstable();
    FeatureSubset::from_sorted(chosen)
}

fn assemble(instance: &ProblemInstance, values: Vec<f64>) -> Plan {
    let order = rank_features(&values);
    let subset = select_from_order(&order, &values, instance.k());
    let degenerate = order
        .windows(2)
        .any(|w| nearly_equal(values[w[0]], values[w[1]], NEAR_TIE_REL));
    let total_value = subset.iter().map(|i| values[i]).fold(0.0, |s, x| s + x);
    let reports = order
        .iter()
        .map(|&i| FeatureValueReport {
            index: i,
            informativeness: instance.informativeness(i),
            divergence0: instance.divergence0(i),
            value: values[i],
            selected: subset.contains(i),
        })
        .collect();
    Plan {
        subset,
        total_value,
        reports,
        degenerate,
    }
}

/// Best single-shot subset for a human holding beliefs `h`.
pub fn optimal_static_subset(instance: &ProblemInstance, h: &[f64]) -> Result<Plan> {
    instance.check_beliefs(h)?;
    let values = instance
        .a()
        .iter()
        .zip(h)
        .map(|(&a, &h)| unchecked_static_value(a, h))
        .collect();
    Ok(assemble(instance, values))
}

/// Value of always showing feature `i`:
/// `a_i²/(1-δ) - Σ_t δ^t φ(t) (a_i - h_{i,0})²`.
pub fn stationary_feature_value(instance: &ProblemInstance, dynamic: &LearningDynamic, i: usize) -> Result<f64> {
    instance.check_index(i)?;
    let s = dynamic.discounted_phi_sum(instance.delta(), 0);
    Ok(stationary_value_with_sum(instance, i, s))
}

#[inline]
pub(crate) fn stationary_value_with_sum(instance: &ProblemInstance, i: usize, phi_sum: f64) -> f64 {
    instance.informativeness(i) / (1.0 - instance.delta()) - phi_sum * instance.divergence0(i)
}

/// Stationary values for every feature.
pub fn stationary_values(instance: &ProblemInstance, dynamic: &LearningDynamic, par: Parallelism) -> Vec<f64> {
    let s = dynamic.discounted_phi_sum(instance.delta(), 0);
    // below this size thread dispatch costs more than the arithmetic
    let par = if instance.n() < 4096 { Parallelism::Sequential } else { par };
    exec::map_indexed(par, instance.n(), |i| stationary_value_with_sum(instance, i, s))
}

/// Optimal stationary sequence: the subset to show at every step.
pub fn optimal_stationary_sequence(instance: &ProblemInstance, dynamic: &LearningDynamic) -> Plan {
    optimal_stationary_sequence_with(instance, dynamic, Parallelism::default())
}

pub fn optimal_stationary_sequence_with(
    instance: &ProblemInstance,
    dynamic: &LearningDynamic,
    par: Parallelism,
) -> Plan {
    assemble(instance, stationary_values(instance, dynamic, par))
}

/// Discounted loss of never showing anything: `((c-c̄)² + Σ a_i²) / (1-δ)`.
pub fn discounted_baseline_loss(instance: &ProblemInstance) -> f64 {
    let empty: f64 = (0..instance.n()).map(|i| instance.informativeness(i)).sum();
    (instance.constant_error() + empty) / (1.0 - instance.delta())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_features(k: usize, delta: f64) -> ProblemInstance {
        ProblemInstance::new(vec![0.3, 0.2, 0.1], 0.0, vec![0.8, 0.2, 0.15], 0.0, k, delta).unwrap()
    }

    fn two_feature(delta: f64) -> ProblemInstance {
        ProblemInstance::new(vec![1.0, 0.4], 0.0, vec![-0.5, 0.75], 0.0, 1, delta).unwrap()
    }

    #[test]
    fn static_plan_on_three_features() {
        let inst = three_features(3, 0.9);
        let plan = optimal_static_subset(&inst, inst.h0()).unwrap();
        assert_eq!(plan.subset.label(), "2+3");
        assert!((plan.total_value - 0.0475).abs() < 1e-12);
        assert_eq!(plan.reports.len(), 3);
        assert_eq!(plan.reports[0].index, 1);
        assert!(plan.reports.iter().all(|r| !r.selected || r.value > 0.0));
    }

    #[test]
    fn static_plan_edge_cases() {
        let a = vec![0.5, -0.7, 0.2];
        let inst = ProblemInstance::new(a.clone(), 0.0, a.clone(), 0.0, 3, 0.5).unwrap();
        assert_eq!(optimal_static_subset(&inst, &a).unwrap().subset, FeatureSubset::all(3));
        let flipped: Vec<f64> = a.iter().map(|x| -x).collect();
        assert!(optimal_static_subset(&inst, &flipped).unwrap().subset.is_empty());
    }

    #[test]
    fn stationary_value_examples() {
        let inst = ProblemInstance::new(vec![1.0], 0.0, vec![-0.5], 0.0, 1, 0.9).unwrap();
        let d = LearningDynamic::exponential(0.5).unwrap();
        let v = stationary_feature_value(&inst, &d, 0).unwrap();
        assert!((v - (10.0 - 2.25 / 0.775)).abs() < 1e-12);
        assert!((v - 7.096_774_193_548_387).abs() < 1e-9);

        let same = ProblemInstance::new(vec![0.7], 0.0, vec![0.7], 0.0, 1, 0.9).unwrap();
        assert!((stationary_feature_value(&same, &d, 0).unwrap() - 0.49 / 0.1).abs() < 1e-12);

        // almost no learning: the discounted static value
        let slow = LearningDynamic::exponential(0.999_999).unwrap();
        let v = stationary_feature_value(&inst, &slow, 0).unwrap();
        assert!((v - (1.0 - 2.25) / 0.1).abs() < 1e-3);
    }

    #[test]
    fn stationary_plans() {
        let fast = LearningDynamic::exponential(0.0).unwrap();
        assert_eq!(optimal_stationary_sequence(&three_features(3, 0.9), &fast).subset.label(), "1+2+3");
        assert_eq!(optimal_stationary_sequence(&two_feature(0.5), &fast).subset.label(), "2");
        assert_eq!(optimal_stationary_sequence(&two_feature(0.7), &fast).subset.label(), "1");
        let none = optimal_stationary_sequence(&three_features(0, 0.9), &fast);
        assert!(none.subset.is_empty());
        assert_eq!(none.total_value, 0.0);
    }

    #[test]
    fn baseline_loss_examples() {
        assert!((discounted_baseline_loss(&three_features(3, 0.9)) - 1.4).abs() < 1e-12);
        let one = ProblemInstance::new(vec![1.0], 0.0, vec![0.0], 0.0, 1, 0.5).unwrap();
        assert_eq!(discounted_baseline_loss(&one), 2.0);
    }

    #[test]
    fn ties_break_by_index_and_flag_degenerate() {
        let values = [1.0, 2.0, 2.0, -1.0];
        assert_eq!(rank_features(&values), vec![1, 2, 0, 3]);
        assert_eq!(top_k_positive(&values, 1).indices(), &[1]);
        assert_eq!(top_k_positive(&values, 4).indices(), &[0, 1, 2]);
        let inst = ProblemInstance::new(vec![0.5, 0.5], 0.0, vec![0.5, 0.5], 0.0, 1, 0.5).unwrap();
        let plan = optimal_static_subset(&inst, inst.h0()).unwrap();
        assert!(plan.degenerate);
        assert_eq!(plan.subset.indices(), &[0]);
    }

    #[test]
    fn fewer_than_k_positive_features() {
        let inst = ProblemInstance::new(vec![0.3, 0.2, 0.1], 0.0, vec![0.8, -0.2, 0.15], 0.0, 3, 0.5).unwrap();
        let plan = optimal_static_subset(&inst, inst.h0()).unwrap();
        assert_eq!(plan.subset.label(), "3");
    }
}
