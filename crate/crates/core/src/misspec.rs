//! Error margins for an algorithm whose model of the instance is off, and the
//! resulting bound on lost value.
//!
//! For a feature `i` with coefficient error at most `ε_i`, the misspecified
//! value `V'` satisfies `V - ξ̄_i ≤ V' ≤ V + ξ_i`. Summing `ξ̄` over features
//! the algorithm wrongly dropped and `ξ` over features it wrongly picked
//! bounds `V(A*) - V(A)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::LearningDynamic;
use crate::error::{Error, Result};
use crate::exec::{self, Parallelism};
use crate::model::{unchecked_static_value, FeatureSubset, ProblemInstance};
use crate::planner::{stationary_value_with_sum, top_k_positive};

/// Slack allowed when checking a realized gap against its bound.
pub const VIOLATION_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    /// Wrong `a`, fixed human beliefs.
    GroundTruthStatic,
    /// Wrong `h`, fixed human beliefs.
    HumanStatic,
    /// Wrong `h_0`, learning human.
    HumanLearning,
    /// Wrong `a`, learning human.
    GroundTruthLearning,
    /// Wrong `Σ_t δ^t φ(t)`.
    PhiSum,
}

impl ErrorKind {
    pub const ALL: [ErrorKind; 5] = [
        ErrorKind::GroundTruthStatic,
        ErrorKind::HumanStatic,
        ErrorKind::HumanLearning,
        ErrorKind::GroundTruthLearning,
        ErrorKind::PhiSum,
    ];

    pub fn is_learning(self) -> bool {
        matches!(
            self,
            ErrorKind::HumanLearning | ErrorKind::GroundTruthLearning | ErrorKind::PhiSum
        )
    }

    /// Largest admissible `ε_i` for feature `i`.
    pub fn cap(self, instance: &ProblemInstance, i: usize) -> f64 {
        let gap = (instance.a()[i] - instance.h0()[i]).abs();
        match self {
            ErrorKind::HumanStatic | ErrorKind::HumanLearning => gap,
            ErrorKind::GroundTruthLearning => gap.min(instance.a()[i].abs()),
            ErrorKind::GroundTruthStatic | ErrorKind::PhiSum => f64::INFINITY,
        }
    }

    fn cap_rule(self) -> &'static str {
        match self {
            ErrorKind::HumanStatic | ErrorKind::HumanLearning => "epsilon_i <= |h_i - a_i|",
            ErrorKind::GroundTruthLearning => "epsilon_i <= min(|a_i|, |a_i - h_i|)",
            ErrorKind::GroundTruthStatic | ErrorKind::PhiSum => "epsilon >= 0",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSpec {
    pub kind: ErrorKind,
    /// One bound per feature; a φ-sum error stores the same scalar for all.
    pub epsilon: Vec<f64>,
}

impl ErrorSpec {
    pub fn per_feature(kind: ErrorKind, epsilon: Vec<f64>) -> Result<Self> {
        if kind == ErrorKind::PhiSum && epsilon.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::invalid("a phi-sum error is a single scalar epsilon"));
        }
        Ok(ErrorSpec { kind, epsilon })
    }

    pub fn uniform(kind: ErrorKind, epsilon: f64, n: usize) -> Self {
        ErrorSpec {
            kind,
            epsilon: vec![epsilon; n],
        }
    }

    /// `ε_i = min(ε, cap_i)`, for kinds whose admissible error depends on
    /// the feature.
    pub fn uniform_within_caps(kind: ErrorKind, epsilon: f64, instance: &ProblemInstance) -> Self {
        ErrorSpec {
            kind,
            epsilon: (0..instance.n()).map(|i| epsilon.min(kind.cap(instance, i))).collect(),
        }
    }

    fn validate(&self, instance: &ProblemInstance) -> Result<()> {
        if self.epsilon.len() != instance.n() {
            return Err(Error::DimensionMismatch {
                what: "epsilon",
                expected: instance.n(),
                got: self.epsilon.len(),
            });
        }
        for (i, &e) in self.epsilon.iter().enumerate() {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(Error::precondition(format!(
                    "epsilon_{} = {e} must be finite and nonnegative",
                    i + 1
                )));
            }
            let cap = self.kind.cap(instance, i);
            if e > cap {
                return Err(Error::precondition(format!(
                    "{} violated for feature {}: epsilon = {e}, bound = {cap}",
                    self.kind.cap_rule(),
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Margin {
    /// `ξ̄`: how far the estimate may fall below the true value.
    pub xi_lower: f64,
    /// `ξ`: how far the estimate may rise above the true value.
    pub xi_upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginReport {
    pub kind: ErrorKind,
    pub epsilon: Vec<f64>,
    pub margins: Vec<Margin>,
}

fn require_dynamic(kind: ErrorKind, dynamic: Option<&LearningDynamic>) -> Result<Option<&LearningDynamic>> {
    match (kind.is_learning(), dynamic) {
        (true, None) => Err(Error::invalid(format!("{kind:?} margins need a learning dynamic"))),
        (true, d) => Ok(d),
        (false, _) => Ok(None),
    }
}

/// Per-feature margins for `spec`. Static kinds use the human's current
/// beliefs `h0`; learning kinds need `dynamic`.
pub fn margins(instance: &ProblemInstance, dynamic: Option<&LearningDynamic>, spec: &ErrorSpec) -> Result<MarginReport> {
    spec.validate(instance)?;
    let dynamic = require_dynamic(spec.kind, dynamic)?;
    let delta = instance.delta();
    let s = dynamic.map(|d| d.discounted_phi_sum(delta, 0)).unwrap_or(1.0);
    let undisc = 1.0 / (1.0 - delta);
    let margins = (0..instance.n())
        .map(|i| {
            let e = spec.epsilon[i];
            let (a, h) = (instance.a()[i], instance.h0()[i]);
            let gap = (a - h).abs();
            match spec.kind {
                ErrorKind::GroundTruthStatic => {
                    let m = 2.0 * e * h.abs();
                    Margin {
                        xi_lower: m,
                        xi_upper: m,
                    }
                }
                ErrorKind::HumanStatic => Margin {
                    xi_lower: 2.0 * e * gap + e * e,
                    xi_upper: 2.0 * e * gap - e * e,
                },
                ErrorKind::HumanLearning => Margin {
                    xi_lower: s * (2.0 * e * gap + e * e),
                    xi_upper: s * (2.0 * e * gap - e * e),
                },
                ErrorKind::GroundTruthLearning => {
                    let curvature = undisc - s;
                    let cross = (a * undisc - s * (a - h)).abs();
                    // worst downward move over ε' ∈ [0, ε] of 2ε'|B| - cε'²
                    let lower = if curvature <= 0.0 || e * curvature <= cross {
                        2.0 * e * cross - curvature * e * e
                    } else {
                        cross * cross / curvature
                    };
                    Margin {
                        xi_lower: lower.max(0.0),
                        xi_upper: e * e * curvature + 2.0 * e * cross,
                    }
                }
                ErrorKind::PhiSum => {
                    let m = e * instance.divergence0(i);
                    Margin {
                        xi_lower: m,
                        xi_upper: m,
                    }
                }
            }
        })
        .collect();
    Ok(MarginReport {
        kind: spec.kind,
        epsilon: spec.epsilon.clone(),
        margins,
    })
}

/// `Σ_{i ∈ A*∖A} ξ̄_i + Σ_{j ∈ A∖A*} ξ_j`.
pub fn aggregate_gap_bound(report: &MarginReport, a_star: &FeatureSubset, a: &FeatureSubset) -> f64 {
    let dropped: f64 = a_star.difference(a).iter().map(|&i| report.margins[i].xi_lower).fold(0.0, |s, x| s + x);
    let picked: f64 = a.difference(a_star).iter().map(|&j| report.margins[j].xi_upper).fold(0.0, |s, x| s + x);
    dropped + picked
}

/// One pair from matching `A*∖A` against `A∖A*`; `None` is a zero-valued
/// dummy feature padding the shorter side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairTerm {
    pub dropped: Option<usize>,
    pub picked: Option<usize>,
    /// `V(dropped) - V(picked)` under the true values.
    pub gap: f64,
    /// `ξ̄_dropped + ξ_picked`.
    pub bound: f64,
}

pub fn pair_terms(report: &MarginReport, values: &[f64], a_star: &FeatureSubset, a: &FeatureSubset) -> Vec<PairTerm> {
    let dropped = a_star.difference(a);
    let picked = a.difference(a_star);
    let len = dropped.len().max(picked.len());
    (0..len)
        .map(|k| {
            let i = dropped.get(k).copied();
            let j = picked.get(k).copied();
            let vi = i.map_or(0.0, |i| values[i]);
            let vj = j.map_or(0.0, |j| values[j]);
            let bi = i.map_or(0.0, |i| report.margins[i].xi_lower);
            let bj = j.map_or(0.0, |j| report.margins[j].xi_upper);
            PairTerm {
                dropped: i,
                picked: j,
                gap: vi - vj,
                bound: bi + bj,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub trial: u64,
    pub gap: f64,
    pub bound: f64,
    pub ratio: f64,
    pub violated: bool,
    pub pair_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub kind: ErrorKind,
    pub seed: u64,
    pub trials: Vec<TrialOutcome>,
    pub violations: usize,
    pub pair_violations: usize,
    pub max_gap: f64,
    pub max_ratio: f64,
    pub mean_ratio: f64,
}

/// True values of every feature in the setting `kind` lives in.
fn true_values(instance: &ProblemInstance, phi_sum: Option<f64>) -> Vec<f64> {
    match phi_sum {
        None => (0..instance.n())
            .map(|i| unchecked_static_value(instance.a()[i], instance.h0()[i]))
            .collect(),
        Some(s) => (0..instance.n()).map(|i| stationary_value_with_sum(instance, i, s)).collect(),
    }
}

/// Values the misspecified algorithm computes after drawing one perturbation
/// uniformly from the ε box.
fn perturbed_values(instance: &ProblemInstance, spec: &ErrorSpec, phi_sum: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let undisc = 1.0 / (1.0 - instance.delta());
    let mut draw = |e: f64| if e > 0.0 { rng.gen_range(-e..=e) } else { 0.0 };
    let (a, h) = (instance.a(), instance.h0());
    match spec.kind {
        ErrorKind::PhiSum => {
            let s = phi_sum + draw(spec.epsilon.first().copied().unwrap_or(0.0));
            (0..instance.n())
                .map(|i| instance.informativeness(i) * undisc - s * instance.divergence0(i))
                .collect()
        }
        kind => (0..instance.n())
            .map(|i| {
                let u = draw(spec.epsilon[i]);
                match kind {
                    ErrorKind::GroundTruthStatic => unchecked_static_value(a[i] + u, h[i]),
                    ErrorKind::HumanStatic => unchecked_static_value(a[i], h[i] + u),
                    ErrorKind::HumanLearning => {
                        let d = a[i] - (h[i] + u);
                        a[i] * a[i] * undisc - phi_sum * d * d
                    }
                    ErrorKind::GroundTruthLearning => {
                        let ap = a[i] + u;
                        let d = ap - h[i];
                        ap * ap * undisc - phi_sum * d * d
                    }
                    ErrorKind::PhiSum => unreachable!(),
                }
            })
            .collect(),
    }
}

/// Samples `trials` misspecified models and checks the realized value gap
/// against [`aggregate_gap_bound`]. Trial `t` draws from its own ChaCha
/// stream, so results do not depend on evaluation order.
pub fn validate_bound(
    instance: &ProblemInstance,
    dynamic: Option<&LearningDynamic>,
    spec: &ErrorSpec,
    trials: u64,
    seed: u64,
    par: Parallelism,
) -> Result<ValidationReport> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let report = margins(instance, dynamic, spec)?;
    let phi_sum = require_dynamic(spec.kind, dynamic)?.map(|d| d.discounted_phi_sum(instance.delta(), 0));
    let values = true_values(instance, phi_sum);
    let a_star = top_k_positive(&values, instance.k());
    let v_star: f64 = a_star.iter().map(|i| values[i]).sum();

    let outcomes = exec::map_indexed(par, trials as usize, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        let estimated = perturbed_values(instance, spec, phi_sum.unwrap_or(1.0), &mut rng);
        let chosen = top_k_positive(&estimated, instance.k());
        let gap = v_star - chosen.iter().map(|i| values[i]).sum::<f64>();
        let bound = aggregate_gap_bound(&report, &a_star, &chosen);
        let pair_violations = pair_terms(&report, &values, &a_star, &chosen)
            .iter()
            .filter(|p| p.gap > p.bound + VIOLATION_SLACK)
            .count();
        let ratio = if gap <= 0.0 {
            0.0
        } else if bound > 0.0 {
            gap / bound
        } else {
            f64::INFINITY
        };
        TrialOutcome {
            trial: t as u64,
            gap,
            bound,
            ratio,
            violated: gap > bound + VIOLATION_SLACK,
            pair_violations,
        }
    });

    let violations = outcomes.iter().filter(|o| o.violated).count();
    let pair_violations = outcomes.iter().map(|o| o.pair_violations).sum();
    let max_gap = outcomes.iter().map(|o| o.gap).fold(0.0, f64::max);
    let max_ratio = outcomes.iter().map(|o| o.ratio).fold(0.0, f64::max);
    let mean_ratio = outcomes.iter().map(|o| o.ratio).sum::<f64>() / outcomes.len() as f64;
    Ok(ValidationReport {
        kind: spec.kind,
        seed,
        trials: outcomes,
        violations,
        pair_violations,
        max_gap,
        max_ratio,
        mean_ratio,
    })
}
