//! φ-convergent learning dynamics.
//!
//! After a feature has been shown `m` times the human's squared divergence on
//! it is `φ(m)` times the initial one, with `φ(0) = 1`, `φ` nonincreasing and
//! `φ → 0`. Two representations are supported, both with a geometric tail:
//!
//! - `Exponential { w }`: `φ(m) = w^{2m}`, the belief update
//!   `h ← w·h + (1-w)·a` applied on every exposure.
//! - `Tabulated { values, tail_w }`: `φ(m) = values[m]` inside the table and
//!   `last · tail_w^{2(m - last_index)}` beyond it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::check_delta;

/// Default number of marginals considered by marginal-based operations.
pub const DEFAULT_HORIZON: usize = 64;

/// Absolute slack when comparing two φ profiles pointwise.
pub const EFFICIENCY_TOL: f64 = 1e-14;

/// Relative stopping rule for [`LearningDynamic::truncated_phi_sum_default`].
const TRUNCATION_REL_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DynamicKind {
    Exponential { w: f64 },
    Tabulated { values: Vec<f64>, tail_w: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct LearningDynamic {
    kind: DynamicKind,
}

/// Outcome of comparing two dynamics by efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Efficiency {
    /// First dynamic is pointwise ≤ and somewhere strictly below the second.
    More,
    Equal,
    /// Second dynamic is strictly more efficient than the first.
    Less,
    Incomparable,
}

/// `ψ(t) = φ(t-1) - φ(t)` for `t = 1..=horizon`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalProfile {
    psi: Vec<f64>,
}

impl MarginalProfile {
    /// `psi()[t-1]` holds `ψ(t)`.
    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn total(&self) -> f64 {
        self.psi.iter().sum()
    }

    pub fn is_decreasing(&self) -> bool {
        self.psi.windows(2).all(|w| w[0] >= w[1])
    }
}

impl LearningDynamic {
    pub fn exponential(w: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&w) {
            return Err(Error::invalid(format!(
                "exponential learning rate w must lie in [0,1), got {w}"
            )));
        }
        Ok(LearningDynamic {
            kind: DynamicKind::Exponential { w },
        })
    }

    /// `values` must start at exactly 1, stay in `[0,1]` and never increase.
    pub fn tabulated(values: Vec<f64>, tail_w: f64) -> Result<Self> {
        if values.first() != Some(&1.0) {
            return Err(Error::invalid("tabulated phi must start with phi(0) = 1"));
        }
        if let Some(t) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid(format!("phi({t}) = {} is outside [0,1]", values[t])));
        }
        if let Some(t) = values.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::invalid(format!(
                "tabulated phi must be nonincreasing: phi({}) = {} > phi({t}) = {}",
                t + 1,
                values[t + 1],
                values[t]
            )));
        }
        if !(0.0..1.0).contains(&tail_w) {
            return Err(Error::invalid(format!("tail_w must lie in [0,1), got {tail_w}")));
        }
        Ok(LearningDynamic {
            kind: DynamicKind::Tabulated { values, tail_w },
        })
    }

    pub fn from_kind(kind: DynamicKind) -> Result<Self> {
        match kind {
            DynamicKind::Exponential { w } => Self::exponential(w),
            DynamicKind::Tabulated { values, tail_w } => Self::tabulated(values, tail_w),
        }
    }

    pub fn kind(&self) -> &DynamicKind {
        &self.kind
    }

    /// The `w` of an exponential dynamic.
    pub fn exponential_rate(&self) -> Option<f64> {
        match self.kind {
            DynamicKind::Exponential { w } => Some(w),
            DynamicKind::Tabulated { .. } => None,
        }
    }

    fn table(&self) -> &[f64] {
        match &self.kind {
            DynamicKind::Exponential { .. } => &[1.0],
            DynamicKind::Tabulated { values, .. } => values,
        }
    }

    /// Per-step factor of the geometric tail.
    fn tail_ratio(&self) -> f64 {
        let w = match self.kind {
            DynamicKind::Exponential { w } => w,
            DynamicKind::Tabulated { tail_w, .. } => tail_w,
        };
        w * w
    }

    pub fn phi(&self, m: u64) -> f64 {
        let table = self.table();
        let last = table.len() - 1;
        if (m as usize) <= last && m <= usize::MAX as u64 {
            return table[m as usize];
        }
        table[last] * pow_u64(self.tail_ratio(), m - last as u64)
    }

    /// `Σ_{t≥0} δ^t φ(t + offset)` in closed form (finite table plus geometric tail).
    pub fn discounted_phi_sum(&self, delta: f64, offset: u64) -> f64 {
        debug_assert!(delta > 0.0 && delta < 1.0);
        let table = self.table();
        let last = (table.len() - 1) as u64;
        let tail = 1.0 / (1.0 - delta * self.tail_ratio());
        if offset >= last {
            return self.phi(offset) * tail;
        }
        let mut sum = 0.0;
        let mut disc = 1.0;
        for &v in &table[offset as usize..last as usize] {
            sum += disc * v;
            disc *= delta;
        }
        sum + disc * table[last as usize] * tail
    }

    /// Checked variant of [`LearningDynamic::discounted_phi_sum`].
    pub fn try_discounted_phi_sum(&self, delta: f64, offset: u64) -> Result<f64> {
        check_delta(delta)?;
        Ok(self.discounted_phi_sum(delta, offset))
    }

    /// Term-by-term summation, stopping at the first `T` where the remainder
    /// bound `δ^T φ(T + offset) / (1 - δ)` drops below `abs_tol`. Returns the
    /// partial sum and the certified bound on what was left out.
    pub fn truncated_phi_sum(&self, delta: f64, offset: u64, abs_tol: f64) -> (f64, f64) {
        self.truncate_with(delta, offset, |_| abs_tol)
    }

    /// Truncated sum with the relative stopping rule
    /// `δ^T φ(T)/(1-δ) < 1e-13 · (sum + 1e-300)`.
    pub fn truncated_phi_sum_default(&self, delta: f64, offset: u64) -> (f64, f64) {
        self.truncate_with(delta, offset, |sum| TRUNCATION_REL_TOL * (sum + 1e-300))
    }

    fn truncate_with<F: Fn(f64) -> f64>(&self, delta: f64, offset: u64, tol: F) -> (f64, f64) {
        let mut sum = 0.0;
        let mut disc = 1.0;
        let mut t = 0u64;
        loop {
            let p = self.phi(t + offset);
            let remainder = disc * p / (1.0 - delta);
            if remainder < tol(sum) {
                return (sum, remainder);
            }
            sum += disc * p;
            disc *= delta;
            t += 1;
        }
    }

    /// `Σ_{t≥1} δ^t ψ(t) = 1 - (1-δ) Σ_{t≥0} δ^t φ(t)`, strictly increasing in δ.
    pub fn marginal_transform(&self, delta: f64) -> f64 {
        1.0 - (1.0 - delta) * self.discounted_phi_sum(delta, 0)
    }

    pub fn marginals(&self, horizon: usize) -> MarginalProfile {
        let psi = (1..=horizon as u64)
            .map(|t| (self.phi(t - 1) - self.phi(t)).max(0.0))
            .collect();
        MarginalProfile { psi }
    }

    /// Builds the dynamic whose first `horizon` marginals are this one's,
    /// sorted in decreasing order. `φ(horizon)` and everything after it are
    /// unchanged, so the result is pointwise no larger than `self`.
    pub fn sort_marginals(&self, horizon: usize) -> LearningDynamic {
        let horizon = horizon.max(1);
        let mut psi = self.marginals(horizon).psi;
        psi.sort_by(|x, y| y.total_cmp(x));

        // suffix sums anchored at φ(horizon) keep the junction exact
        let mut values = vec![0.0; horizon + 1];
        values[horizon] = self.phi(horizon as u64);
        for t in (0..horizon).rev() {
            values[t] = (values[t + 1] + psi[t]).min(1.0);
        }
        values[0] = 1.0;
        for t in 1..=horizon {
            values[t] = values[t].min(values[t - 1]);
        }
        let table = self.table();
        if table.len() > horizon + 1 {
            values.extend_from_slice(&table[horizon + 1..]);
        }
        let tail_w = self.tail_ratio().sqrt();
        LearningDynamic {
            kind: DynamicKind::Tabulated { values, tail_w },
        }
    }

    /// Pointwise efficiency ordering over all `t`, using `horizon` as the
    /// minimum explicit comparison range. Beyond both tables the profiles are
    /// geometric, so the tail is compared exactly.
    pub fn compare_efficiency(&self, other: &LearningDynamic, horizon: usize) -> Efficiency {
        let last = horizon
            .max(self.table().len() - 1)
            .max(other.table().len() - 1) as u64;
        let mut le = true;
        let mut ge = true;
        let mut differs = false;
        for t in 0..=last {
            let (p, q) = (self.phi(t), other.phi(t));
            if p > q + EFFICIENCY_TOL {
                le = false;
            }
            if q > p + EFFICIENCY_TOL {
                ge = false;
            }
            if (p - q).abs() > EFFICIENCY_TOL {
                differs = true;
            }
        }
        // first tail step beyond `last`; both sides continue geometrically
        let (p1, r1) = (self.phi(last + 1), self.tail_ratio());
        let (p2, r2) = (other.phi(last + 1), other.tail_ratio());
        let (tail_le, tail_lt) = geometric_tail_le(p1, r1, p2, r2);
        let (tail_ge, tail_gt) = geometric_tail_le(p2, r2, p1, r1);
        le &= tail_le;
        ge &= tail_ge;
        differs |= tail_lt || tail_gt;
        match (le, ge, differs) {
            (true, true, _) | (_, _, false) => Efficiency::Equal,
            (true, false, _) => Efficiency::More,
            (false, true, _) => Efficiency::Less,
            (false, false, _) => Efficiency::Incomparable,
        }
    }
}

/// For tails `p1 r1^s` vs `p2 r2^s` (s ≥ 0): whether the first is ≤ the second
/// for every `s`, and whether it is strictly below for some `s`.
fn geometric_tail_le(p1: f64, r1: f64, p2: f64, r2: f64) -> (bool, bool) {
    let tiny = EFFICIENCY_TOL;
    if p1 <= tiny {
        return (true, p2 > tiny);
    }
    if p2 <= tiny {
        return (false, false);
    }
    if r1 < r2 {
        (p1 <= p2 + tiny, true)
    } else if r1 == r2 {
        (p1 <= p2 + tiny, p1 < p2 - tiny)
    } else {
        (false, p1 < p2 - tiny)
    }
}

impl<'de> Deserialize<'de> for LearningDynamic {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let kind = DynamicKind::deserialize(deserializer)?;
        LearningDynamic::from_kind(kind).map_err(serde::de::Error::custom)
    }
}

fn pow_u64(base: f64, exp: u64) -> f64 {
    if exp <= i32::MAX as u64 {
        base.powi(exp as i32)
    } else {
        base.powf(exp as f64)
    }
}
