//! Brute-force evaluation of arbitrary selection sequences, used to check the
//! planners independently.
//!
//! A sequence is a finite prefix of subsets followed by one subset repeated
//! forever. Losses are exact expectations: the prefix is summed term by term
//! from simulated beliefs, and the stationary tail is evaluated per feature
//! with its exposure count at the end of the prefix as an offset into φ.

use std::cmp::Ordering;

use serde::Serialize;

use crate::dynamics::LearningDynamic;
use crate::error::{Error, Result};
use crate::exec::{self, Parallelism};
use crate::model::{mse, subsets_up_to, FeatureSubset, ProblemInstance};
use crate::planner::{discounted_baseline_loss, optimal_stationary_sequence_with, top_k_positive};

pub const DEFAULT_TOL: f64 = 1e-9;

pub const MAX_SEARCH_FEATURES: usize = 4;
pub const MAX_SEARCH_BUDGET: usize = 2;
pub const MAX_SEARCH_PREFIX: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct SelectionSequence {
    pub prefix: Vec<FeatureSubset>,
    pub tail: FeatureSubset,
}

impl SelectionSequence {
    pub fn new(prefix: Vec<FeatureSubset>, tail: FeatureSubset) -> Self {
        SelectionSequence { prefix, tail }
    }

    pub fn stationary(subset: FeatureSubset) -> Self {
        SelectionSequence {
            prefix: Vec::new(),
            tail: subset,
        }
    }

    pub fn at(&self, t: usize) -> &FeatureSubset {
        self.prefix.get(t).unwrap_or(&self.tail)
    }

    /// Exposure counts `m_i` after the prefix.
    pub fn prefix_counts(&self, n: usize) -> Vec<u64> {
        let mut counts = vec![0u64; n];
        for subset in &self.prefix {
            for i in subset.iter() {
                counts[i] += 1;
            }
        }
        counts
    }

    pub fn validate(&self, instance: &ProblemInstance) -> Result<()> {
        for (t, subset) in self.prefix.iter().chain(std::iter::once(&self.tail)).enumerate() {
            subset.check_against(instance)?;
            if subset.len() > instance.k() {
                return Err(Error::invalid(format!(
                    "step {t} selects {} features, budget is {}",
                    subset.len(),
                    instance.k()
                )));
            }
        }
        Ok(())
    }
}

/// Beliefs and exposure counts at steps `0..=horizon`; entry `t` is the
/// state the human predicts with at step `t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BeliefTrajectory {
    pub beliefs: Vec<Vec<f64>>,
    pub counts: Vec<Vec<u64>>,
    pub divergences: Vec<Vec<f64>>,
}

pub fn simulate_beliefs(
    instance: &ProblemInstance,
    dynamic: &LearningDynamic,
    sequence: &SelectionSequence,
    horizon: usize,
) -> Result<BeliefTrajectory> {
    if horizon == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    sequence.validate(instance)?;
    let n = instance.n();
    let (a, h0) = (instance.a(), instance.h0());
    let mut counts = vec![0u64; n];
    let mut traj = BeliefTrajectory {
        beliefs: Vec::with_capacity(horizon + 1),
        counts: Vec::with_capacity(horizon + 1),
        divergences: Vec::with_capacity(horizon + 1),
    };
    for t in 0..=horizon {
        let beliefs: Vec<f64> = (0..n)
            .map(|i| match dynamic.exponential_rate() {
                Some(w) => {
                    let wm = w.powi(counts[i].min(i32::MAX as u64) as i32);
                    wm * h0[i] + (1.0 - wm) * a[i]
                }
                None => a[i] - dynamic.phi(counts[i]).sqrt() * (a[i] - h0[i]),
            })
            .collect();
        let divergences = (0..n)
            .map(|i| dynamic.phi(counts[i]) * instance.divergence0(i))
            .collect();
        traj.beliefs.push(beliefs);
        traj.counts.push(counts.clone());
        traj.divergences.push(divergences);
        for i in sequence.at(t).iter() {
            counts[i] += 1;
        }
    }
    Ok(traj)
}

/// `Σ_{s≥0} δ^s φ(s + offset)`: closed form for exponential learning,
/// certified truncation otherwise.
fn tail_phi_sum(dynamic: &LearningDynamic, delta: f64, offset: u64, abs_tol: f64) -> f64 {
    match dynamic.exponential_rate() {
        Some(w) => {
            let w2 = w * w;
            w2.powf(offset as f64) / (1.0 - delta * w2)
        }
        None => dynamic.truncated_phi_sum(delta, offset, abs_tol).0,
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("tolerance must be positive, got {tol}")))
    }
}

/// Per-feature truncation budget so the summed remainder stays below `tol`.
fn per_feature_tol(instance: &ProblemInstance, tol: f64) -> f64 {
    let weight: f64 = (0..instance.n()).map(|i| instance.divergence0(i)).sum::<f64>() + 1.0;
    tol / weight
}

/// Discounted loss `Σ_t δ^t MSE(A_t, h_t)` of a sequence.
pub fn sequence_loss(
    instance: &ProblemInstance,
    dynamic: &LearningDynamic,
    sequence: &SelectionSequence,
    tol: f64,
) -> Result<f64> {
    check_tol(tol)?;
    sequence.validate(instance)?;
    let delta = instance.delta();
    let t_len = sequence.prefix.len();
    let mut loss = 0.0;
    let mut disc = 1.0;
    if t_len > 0 {
        let traj = simulate_beliefs(instance, dynamic, sequence, t_len)?;
        for (t, subset) in sequence.prefix.iter().enumerate() {
            loss += disc * mse(instance, subset, &traj.beliefs[t])?;
            disc *= delta;
        }
    }
    let counts = sequence.prefix_counts(instance.n());
    let feature_tol = per_feature_tol(instance, tol);
    let mut per_step = instance.constant_error();
    let mut learned = 0.0;
    for (i, &m) in counts.iter().enumerate() {
        if sequence.tail.contains(i) {
            learned += instance.divergence0(i) * tail_phi_sum(dynamic, delta, m, feature_tol);
        } else {
            per_step += instance.informativeness(i);
        }
    }
    Ok(loss + disc * (per_step / (1.0 - delta) + learned))
}

/// Value `Σ_t δ^t Σ_{i∈A_t} (a_i² - φ(m_i(t)) (a_i - h_{i,0})²)`, computed
/// from exposure counts without going through beliefs or losses.
pub fn sequence_value(
    instance: &ProblemInstance,
    dynamic: &LearningDynamic,
    sequence: &SelectionSequence,
    tol: f64,
) -> Result<f64> {
    check_tol(tol)?;
    sequence.validate(instance)?;
    let delta = instance.delta();
    let mut counts = vec![0u64; instance.n()];
    let mut value = 0.0;
    let mut disc = 1.0;
    for subset in &sequence.prefix {
        for i in subset.iter() {
            value += disc * (instance.informativeness(i) - dynamic.phi(counts[i]) * instance.divergence0(i));
        }
        for i in subset.iter() {
            counts[i] += 1;
        }
        disc *= delta;
    }
    let feature_tol = per_feature_tol(instance, tol);
    let tail: f64 = sequence
        .tail
        .iter()
        .map(|i| tail_value(instance, dynamic, i, counts[i], feature_tol))
        .sum();
    Ok(value + disc * tail)
}

/// Value of showing feature `i` forever, starting after `offset` exposures.
fn tail_value(instance: &ProblemInstance, dynamic: &LearningDynamic, i: usize, offset: u64, tol: f64) -> f64 {
    let delta = instance.delta();
    instance.informativeness(i) / (1.0 - delta) - instance.divergence0(i) * tail_phi_sum(dynamic, delta, offset, tol)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrefixSearchReport {
    pub prefix_length: usize,
    pub sequences_examined: u64,
    pub best: SelectionSequence,
    pub best_value: f64,
    pub stationary_subset: FeatureSubset,
    pub stationary_value: f64,
    pub tol: f64,
    /// `best_value <= stationary_value + tol`.
    pub holds: bool,
}

#[derive(Debug, Clone)]
struct Candidate {
    value: f64,
    sequence: SelectionSequence,
}

impl Candidate {
    /// Higher value wins; equal values fall back to the lexicographically
    /// smaller sequence.
    fn better_than(&self, other: &Candidate) -> bool {
        match self.value.total_cmp(&other.value) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => self.sequence < other.sequence,
        }
    }
}

/// Exhaustively tries every prefix of length `prefix_length`, completes each
/// with its best stationary tail given the exposure counts it leaves behind,
/// and compares the best result with the optimal stationary sequence.
pub fn exhaustive_prefix_search(
    instance: &ProblemInstance,
    dynamic: &LearningDynamic,
    prefix_length: usize,
    tol: f64,
    par: Parallelism,
) -> Result<PrefixSearchReport> {
    check_tol(tol)?;
    if instance.n() > MAX_SEARCH_FEATURES || instance.k() > MAX_SEARCH_BUDGET || prefix_length > MAX_SEARCH_PREFIX {
        return Err(Error::invalid(format!(
            "exhaustive search is limited to n ≤ {MAX_SEARCH_FEATURES}, k ≤ {MAX_SEARCH_BUDGET}, \
             T ≤ {MAX_SEARCH_PREFIX}; got n={}, k={}, T={prefix_length}",
            instance.n(),
            instance.k()
        )));
    }
    let choices = subsets_up_to(instance.n(), instance.k());
    let feature_tol = per_feature_tol(instance, tol);
    let searcher = Searcher {
        instance,
        dynamic,
        choices: &choices,
        prefix_length,
        feature_tol,
    };

    let (best, examined) = if prefix_length == 0 {
        let mut prefix = Vec::new();
        let mut examined = 0;
        let best = searcher.descend(&mut prefix, &mut vec![0; instance.n()], 0.0, 1.0, &mut examined);
        (best, examined)
    } else {
        let branches = exec::map_slice(par, &choices, |first| {
            let mut prefix = Vec::with_capacity(prefix_length);
            let mut counts = vec![0u64; instance.n()];
            let mut examined = 0u64;
            let gain = searcher.step_gain(first, &counts);
            prefix.push(first.clone());
            for i in first.iter() {
                counts[i] += 1;
            }
            let best = searcher.descend(&mut prefix, &mut counts, gain, instance.delta(), &mut examined);
            (best, examined)
        });
        let examined = branches.iter().map(|(_, e)| *e).sum();
        let best = branches
            .into_iter()
            .map(|(b, _)| b)
            .reduce(|acc, c| if c.better_than(&acc) { c } else { acc })
            .expect("at least the empty subset is a choice");
        (best, examined)
    };

    let plan = optimal_stationary_sequence_with(instance, dynamic, Parallelism::Sequential);
    Ok(PrefixSearchReport {
        prefix_length,
        sequences_examined: examined,
        holds: best.value <= plan.total_value + tol,
        best_value: best.value,
        best: best.sequence,
        stationary_subset: plan.subset,
        stationary_value: plan.total_value,
        tol,
    })
}

struct Searcher<'a> {
    instance: &'a ProblemInstance,
    dynamic: &'a LearningDynamic,
    choices: &'a [FeatureSubset],
    prefix_length: usize,
    feature_tol: f64,
}

impl Searcher<'_> {
    fn step_gain(&self, subset: &FeatureSubset, counts: &[u64]) -> f64 {
        subset
            .iter()
            .map(|i| self.instance.informativeness(i) - self.dynamic.phi(counts[i]) * self.instance.divergence0(i))
            .sum()
    }

    fn descend(
        &self,
        prefix: &mut Vec<FeatureSubset>,
        counts: &mut [u64],
        acc: f64,
        disc: f64,
        examined: &mut u64,
    ) -> Candidate {
        if prefix.len() == self.prefix_length {
            *examined += 1;
            let values: Vec<f64> = (0..self.instance.n())
                .map(|i| tail_value(self.instance, self.dynamic, i, counts[i], self.feature_tol))
                .collect();
            let tail = top_k_positive(&values, self.instance.k());
            let tail_total: f64 = tail.iter().map(|i| values[i]).sum();
            return Candidate {
                value: acc + disc * tail_total,
                sequence: SelectionSequence::new(prefix.clone(), tail),
            };
        }
        let mut best: Option<Candidate> = None;
        for subset in self.choices {
            let gain = self.step_gain(subset, counts);
            prefix.push(subset.clone());
            for i in subset.iter() {
                counts[i] += 1;
            }
            let cand = self.descend(prefix, counts, acc + disc * gain, disc * self.instance.delta(), examined);
            for i in subset.iter() {
                counts[i] -= 1;
            }
            prefix.pop();
            if best.as_ref().is_none_or(|b| cand.better_than(b)) {
                best = Some(cand);
            }
        }
        best.expect("choices are never empty")
    }
}

/// `discounted_baseline_loss - sequence_loss`, the loss-side route to a
/// sequence's value.
pub fn value_via_losses(
    instance: &ProblemInstance,
    dynamic: &LearningDynamic,
    sequence: &SelectionSequence,
    tol: f64,
) -> Result<f64> {
    Ok(discounted_baseline_loss(instance) - sequence_loss(instance, dynamic, sequence, tol)?)
}
