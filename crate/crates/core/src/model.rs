//! Problem instances, squared-error evaluation and static feature values.
//!
//! Features are assumed standardized (zero mean, unit variance, independent),
//! so the human's expected squared error when shown subset `A` is
//!
//! ```text
//! (c - c̄)² + Σ_{i∉A} a_i² + Σ_{i∈A} (a_i - h_i)²
//! ```
//!
//! and a feature's static value `a_i² - (a_i - h_i)² = 2 a_i h_i - h_i²` is
//! additive over subsets.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ground truth, the human's initial beliefs, budget and discount factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    a: Vec<f64>,
    c: f64,
    h0: Vec<f64>,
    c_bar: f64,
    k: usize,
    delta: f64,
}

impl ProblemInstance {
    /// Builds a validated instance. Zero ground-truth coefficients are rejected.
    pub fn new(a: Vec<f64>, c: f64, h0: Vec<f64>, c_bar: f64, k: usize, delta: f64) -> Result<Self> {
        Self::build(a, c, h0, c_bar, k, delta, false)
    }

    /// Like [`ProblemInstance::new`] but tolerates `a_i = 0`; callers can list
    /// the offending features with [`ProblemInstance::zero_coefficients`].
    pub fn new_allowing_zero(
        a: Vec<f64>,
        c: f64,
        h0: Vec<f64>,
        c_bar: f64,
        k: usize,
        delta: f64,
    ) -> Result<Self> {
        Self::build(a, c, h0, c_bar, k, delta, true)
    }

    fn build(
        a: Vec<f64>,
        c: f64,
        h0: Vec<f64>,
        c_bar: f64,
        k: usize,
        delta: f64,
        allow_zero: bool,
    ) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::invalid("instance needs at least one feature"));
        }
        if h0.len() != a.len() {
            return Err(Error::DimensionMismatch {
                what: "h0",
                expected: a.len(),
                got: h0.len(),
            });
        }
        if k > a.len() {
            return Err(Error::invalid(format!(
                "budget k={k} exceeds the number of features n={}",
                a.len()
            )));
        }
        check_delta(delta)?;
        if !c.is_finite() || !c_bar.is_finite() {
            return Err(Error::invalid("constants c and c_bar must be finite"));
        }
        if let Some(i) = a.iter().chain(h0.iter()).position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("non-finite coefficient at position {i}")));
        }
        if !allow_zero {
            if let Some(i) = a.iter().position(|&x| x == 0.0) {
                return Err(Error::invalid(format!(
                    "ground-truth coefficient a_{} is zero; coefficients must be non-zero",
                    i + 1
                )));
            }
        }
        Ok(ProblemInstance {
            a,
            c,
            h0,
            c_bar,
            k,
            delta,
        })
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn h0(&self) -> &[f64] {
        &self.h0
    }

    pub fn c_bar(&self) -> f64 {
        self.c_bar
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Squared ground-truth coefficient `a_i²`.
    pub fn informativeness(&self, i: usize) -> f64 {
        self.a[i] * self.a[i]
    }

    /// Initial divergence `(a_i - h_{i,0})²`.
    pub fn divergence0(&self, i: usize) -> f64 {
        let d = self.a[i] - self.h0[i];
        d * d
    }

    /// Squared error of the constant term, `(c - c̄)²`.
    pub fn constant_error(&self) -> f64 {
        let d = self.c - self.c_bar;
        d * d
    }

    pub fn zero_coefficients(&self) -> Vec<usize> {
        self.a
            .iter()
            .enumerate()
            .filter(|(_, &x)| x == 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        Ok(ProblemInstance { delta, ..self.clone() })
    }

    pub fn with_k(&self, k: usize) -> Result<Self> {
        if k > self.n() {
            return Err(Error::invalid(format!("budget k={k} exceeds n={}", self.n())));
        }
        Ok(ProblemInstance { k, ..self.clone() })
    }

    /// Replaces the ground truth, keeping everything else. Zero entries are
    /// allowed here because perturbed instances may cross zero.
    pub fn with_a(&self, a: Vec<f64>) -> Result<Self> {
        Self::build(a, self.c, self.h0.clone(), self.c_bar, self.k, self.delta, true)
    }

    pub fn with_h0(&self, h0: Vec<f64>) -> Result<Self> {
        Self::build(self.a.clone(), self.c, h0, self.c_bar, self.k, self.delta, true)
    }

    pub(crate) fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n() {
            Err(Error::IndexOutOfRange { index: i, n: self.n() })
        } else {
            Ok(())
        }
    }

    pub(crate) fn check_beliefs(&self, h: &[f64]) -> Result<()> {
        if h.len() != self.n() {
            Err(Error::DimensionMismatch {
                what: "belief vector",
                expected: self.n(),
                got: h.len(),
            })
        } else {
            Ok(())
        }
    }
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "delta must lie strictly inside (0,1), got {delta}"
        )))
    }
}

/// Sorted set of 0-based feature indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureSubset(Vec<usize>);

impl FeatureSubset {
    /// Validates indices against `n`; duplicates are an error.
    pub fn new(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        indices.sort_unstable();
        if let Some(w) = indices.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid(format!("duplicate feature index {}", w[0])));
        }
        if let Some(&i) = indices.last() {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, n });
            }
        }
        Ok(FeatureSubset(indices))
    }

    /// Parses a 1-based label such as `"1+3"`; `"{}"` or `""` is the empty set.
    pub fn parse_label(label: &str, n: usize) -> Result<Self> {
        let body = label.trim();
        if body.is_empty() || body == "{}" || body == "∅" {
            return Ok(FeatureSubset::empty());
        }
        let mut indices = Vec::new();
        for part in body.split('+') {
            let one_based: usize = part
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad feature label {part:?} in {label:?}")))?;
            if one_based == 0 {
                return Err(Error::invalid("feature labels are 1-based"));
            }
            indices.push(one_based - 1);
        }
        FeatureSubset::new(indices, n)
    }

    pub fn empty() -> Self {
        FeatureSubset(Vec::new())
    }

    pub fn all(n: usize) -> Self {
        FeatureSubset((0..n).collect())
    }

    pub(crate) fn from_sorted(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        FeatureSubset(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    /// Indices in `self` but not in `other`.
    pub fn difference(&self, other: &FeatureSubset) -> Vec<usize> {
        self.iter().filter(|&i| !other.contains(i)).collect()
    }

    /// 1-based label joined by `+`, `{}` for the empty set.
    pub fn label(&self) -> String {
        if self.0.is_empty() {
            return "{}".to_string();
        }
        self.0
            .iter()
            .map(|i| (i + 1).to_string())
            .collect::<Vec<_>>()
            .join("+")
    }

    /// `Σ a_i²` over the subset.
    pub fn informativeness(&self, instance: &ProblemInstance) -> f64 {
        self.iter().map(|i| instance.informativeness(i)).fold(0.0, |s, x| s + x)
    }

    pub(crate) fn check_against(&self, instance: &ProblemInstance) -> Result<()> {
        match self.0.last() {
            Some(&i) if i >= instance.n() => Err(Error::IndexOutOfRange { index: i, n: instance.n() }),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for FeatureSubset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Every subset of `0..n`, ordered by size and then lexicographically.
pub fn all_subsets(n: usize) -> Vec<FeatureSubset> {
    subsets_up_to(n, n)
}

/// Subsets of `0..n` with at most `k` members, ordered by size then
/// lexicographically.
pub fn subsets_up_to(n: usize, k: usize) -> Vec<FeatureSubset> {
    let mut out = Vec::new();
    for size in 0..=k.min(n) {
        let mut comb: Vec<usize> = (0..size).collect();
        loop {
            out.push(FeatureSubset(comb.clone()));
            // advance to the next combination in lexicographic order
            let mut pos = size;
            while pos > 0 && comb[pos - 1] == n - size + pos - 1 {
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
            comb[pos - 1] += 1;
            for j in pos..size {
                comb[j] = comb[j - 1] + 1;
            }
        }
    }
    out
}

/// Human's squared prediction error when shown `subset` with beliefs `h`.
pub fn mse(instance: &ProblemInstance, subset: &FeatureSubset, h: &[f64]) -> Result<f64> {
    instance.check_beliefs(h)?;
    subset.check_against(instance)?;
    let a = instance.a();
    let mut total = instance.constant_error();
    for i in 0..instance.n() {
        let e = if subset.contains(i) { a[i] - h[i] } else { a[i] };
        total += e * e;
    }
    Ok(total)
}

/// Loss reduction from revealing feature `i` alone: `2 a_i h_i - h_i²`.
pub fn static_value(instance: &ProblemInstance, i: usize, h: &[f64]) -> Result<f64> {
    instance.check_index(i)?;
    instance.check_beliefs(h)?;
    Ok(unchecked_static_value(instance.a()[i], h[i]))
}

#[inline]
pub(crate) fn unchecked_static_value(a: f64, h: f64) -> f64 {
    2.0 * a * h - h * h
}

/// Value of a subset: the sum of its members' static values.
pub fn static_set_value(instance: &ProblemInstance, subset: &FeatureSubset, h: &[f64]) -> Result<f64> {
    instance.check_beliefs(h)?;
    subset.check_against(instance)?;
    let a = instance.a();
    Ok(subset.iter().map(|i| unchecked_static_value(a[i], h[i])).fold(0.0, |s, x| s + x))
}

/// Raw feature means and standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationSpec {
    mu: Vec<f64>,
    sigma: Vec<f64>,
}

impl StandardizationSpec {
    pub fn new(mu: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        if mu.len() != sigma.len() {
            return Err(Error::DimensionMismatch {
                what: "sigma",
                expected: mu.len(),
                got: sigma.len(),
            });
        }
        if let Some(i) = sigma.iter().position(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::invalid(format!(
                "sigma_{} = {} must be strictly positive",
                i + 1,
                sigma[i]
            )));
        }
        if mu.iter().any(|m| !m.is_finite()) {
            return Err(Error::invalid("mu must be finite"));
        }
        Ok(StandardizationSpec { mu, sigma })
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }
}

/// Rewrites a raw linear model so that it acts on standardized features
/// `x_i = (z_i - μ_i) / σ_i`: returns `(σ_i a_i, c + Σ μ_i a_i)`.
pub fn standardize(raw_a: &[f64], raw_c: f64, spec: &StandardizationSpec) -> Result<(Vec<f64>, f64)> {
    if raw_a.len() != spec.mu.len() {
        return Err(Error::DimensionMismatch {
            what: "standardization",
            expected: raw_a.len(),
            got: spec.mu.len(),
        });
    }
    let a = raw_a.iter().zip(&spec.sigma).map(|(a, s)| a * s).collect();
    let c = raw_c + raw_a.iter().zip(&spec.mu).map(|(a, m)| a * m).sum::<f64>();
    Ok((a, c))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_features() -> ProblemInstance {
        ProblemInstance::new(vec![0.3, 0.2, 0.1], 0.0, vec![0.8, 0.2, 0.15], 0.0, 3, 0.9).unwrap()
    }

    fn close(x: f64, y: f64) -> bool {
        (x - y).abs() < 1e-12
    }

    #[test]
    fn static_mse_table_values() {
        let inst = three_features();
        let h = inst.h0().to_vec();
        let expected = [0.14, 0.3, 0.1, 0.1325, 0.26, 0.2925, 0.0925, 0.2525];
        let subsets = all_subsets(3);
        assert_eq!(subsets.len(), 8);
        for (s, e) in subsets.iter().zip(expected) {
            let got = mse(&inst, s, &h).unwrap();
            assert!(close(got, e), "{s}: {got} vs {e}");
        }
    }

    #[test]
    fn perfect_beliefs_have_zero_error() {
        let inst = ProblemInstance::new(vec![0.5, -1.2], 0.3, vec![0.5, -1.2], 0.3, 2, 0.5).unwrap();
        let h = inst.a().to_vec();
        assert_eq!(mse(&inst, &FeatureSubset::all(2), &h).unwrap(), 0.0);
    }

    #[test]
    fn static_values_match_table_differences() {
        let inst = three_features();
        let h = inst.h0().to_vec();
        assert!(close(static_value(&inst, 0, &h).unwrap(), -0.16));
        assert!(close(static_value(&inst, 1, &h).unwrap(), 0.04));
        assert!(close(static_value(&inst, 2, &h).unwrap(), 0.0075));
        let zero = vec![0.0; 3];
        assert_eq!(static_value(&inst, 0, &zero).unwrap(), 0.0);
        let s23 = FeatureSubset::new(vec![1, 2], 3).unwrap();
        assert!(close(static_set_value(&inst, &s23, &h).unwrap(), 0.0475));
        assert_eq!(static_set_value(&inst, &FeatureSubset::empty(), &h).unwrap(), 0.0);
    }

    #[test]
    fn errors_on_bad_shapes() {
        let inst = three_features();
        assert!(matches!(
            mse(&inst, &FeatureSubset::empty(), &[0.0; 2]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            static_value(&inst, 3, inst.h0()),
            Err(Error::IndexOutOfRange { index: 3, n: 3 })
        ));
        assert!(FeatureSubset::new(vec![1, 1], 3).is_err());
        assert!(FeatureSubset::new(vec![3], 3).is_err());
    }

    #[test]
    fn instance_validation() {
        assert!(ProblemInstance::new(vec![1.0], 0.0, vec![0.0], 0.0, 1, 1.0).is_err());
        assert!(ProblemInstance::new(vec![1.0], 0.0, vec![0.0], 0.0, 1, 0.0).is_err());
        assert!(ProblemInstance::new(vec![1.0], 0.0, vec![0.0], 0.0, 2, 0.5).is_err());
        assert!(ProblemInstance::new(vec![1.0, 2.0], 0.0, vec![0.0], 0.0, 1, 0.5).is_err());
        assert!(ProblemInstance::new(vec![0.0], 0.0, vec![0.0], 0.0, 1, 0.5).is_err());
        let inst = ProblemInstance::new_allowing_zero(vec![0.0, 1.0], 0.0, vec![0.0, 0.0], 0.0, 1, 0.5).unwrap();
        assert_eq!(inst.zero_coefficients(), vec![0]);
    }

    #[test]
    fn subset_labels_round_trip() {
        let s = FeatureSubset::parse_label("3+1", 3).unwrap();
        assert_eq!(s.indices(), &[0, 2]);
        assert_eq!(s.label(), "1+3");
        assert_eq!(FeatureSubset::parse_label("{}", 3).unwrap(), FeatureSubset::empty());
        assert!(FeatureSubset::parse_label("0", 3).is_err());
        assert!(FeatureSubset::parse_label("4", 3).is_err());
    }

    #[test]
    fn subset_enumeration_counts() {
        assert_eq!(all_subsets(4).len(), 16);
        assert_eq!(subsets_up_to(4, 2).len(), 11);
        assert_eq!(subsets_up_to(3, 0), vec![FeatureSubset::empty()]);
        let labels: Vec<String> = all_subsets(3).iter().map(|s| s.label()).collect();
        assert_eq!(labels, ["{}", "1", "2", "3", "1+2", "1+3", "2+3", "1+2+3"]);
    }

    #[test]
    fn standardization_examples() {
        let id = StandardizationSpec::new(vec![0.0; 2], vec![1.0; 2]).unwrap();
        assert_eq!(standardize(&[0.4, -2.0], 1.5, &id).unwrap(), (vec![0.4, -2.0], 1.5));
        let spec = StandardizationSpec::new(vec![3.0], vec![0.5]).unwrap();
        assert_eq!(standardize(&[2.0], 1.0, &spec).unwrap(), (vec![1.0], 7.0));
        assert!(StandardizationSpec::new(vec![0.0], vec![0.0]).is_err());
        assert!(StandardizationSpec::new(vec![0.0], vec![-1.0]).is_err());
    }
}
