//! Multi-distance indicator functions `V(x) = Σ_{(i,j) ∈ E} |x_i - x_j|`.

use std::collections::BTreeSet;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::graph::{Graph, Label};
use crate::value::{abs_diff, from_int, midpoint, serde_vec, Rational};

/// Pair set `E` of an indicator; its graph is `G_V`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicatorSpec {
    n: usize,
    pairs: BTreeSet<(Label, Label)>,
}

impl IndicatorSpec {
    pub fn new<I>(n: usize, pairs: I) -> Result<Self, AnalysisError>
    where
        I: IntoIterator<Item = (Label, Label)>,
    {
        let g = Graph::new(n, pairs).map_err(AnalysisError::Spec)?;
        Ok(Self::from_graph(&g))
    }

    /// All pairs: the only instantaneous indicator.
    pub fn complete(n: usize) -> Self {
        let pairs = (1..=n).flat_map(|i| (i + 1..=n).map(move |j| (i, j))).collect();
        IndicatorSpec { n, pairs }
    }

    pub fn from_graph(g: &Graph) -> Self {
        IndicatorSpec { n: g.n(), pairs: g.edges().collect() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pairs(&self) -> impl Iterator<Item = (Label, Label)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn contains(&self, a: Label, b: Label) -> bool {
        let p = if a < b { (a, b) } else { (b, a) };
        self.pairs.contains(&p)
    }

    /// `G_V`, possibly disconnected.
    pub fn graph(&self) -> Graph {
        Graph::new(self.n, self.pairs.iter().copied()).expect("pairs validated at construction")
    }

    pub fn value(&self, x: &[Rational]) -> Rational {
        assert_eq!(x.len(), self.n, "value vector length");
        self.pairs.iter().map(|&(i, j)| abs_diff(&x[i - 1], &x[j - 1])).sum()
    }

    /// `V(x) = 0` forces consensus exactly when `G_V` is connected on all `n`
    /// vertices. This is the criterion the proof uses; the pairs of `G_V` need
    /// not be edges of `g`.
    pub fn is_indicator(&self, g: &Graph) -> bool {
        debug_assert_eq!(g.n(), self.n);
        self.graph().is_connected()
    }

    /// Instantaneous exactly when `G_V` is complete.
    pub fn is_instantaneous(&self, g: &Graph) -> bool {
        debug_assert_eq!(g.n(), self.n);
        self.pairs.len() == self.n * (self.n - 1) / 2
    }

    /// Structural test: `g ⊆ G_V`, and whenever `(i,k) ∈ G_V` and `(i,j) ∈ g`
    /// with `j ≠ k`, also `(j,k) ∈ G_V`.
    pub fn morse_condition(&self, g: &Graph) -> bool {
        if !g.edges().all(|(a, b)| self.contains(a, b)) {
            return false;
        }
        self.pairs.iter().all(|&(a, b)| {
            [(a, b), (b, a)].iter().all(|&(i, k)| {
                g.neighbors(i).iter().all(|&j| j == k || self.contains(j, k))
            })
        })
    }
}

/// `Σ_{i<j} |x_i - x_j|` via the sorted-order identity
/// `Σ_k (2k - n + 1) x_(k)`.
pub fn complete_value(x: &[Rational]) -> Rational {
    let mut sorted: Vec<&Rational> = x.iter().collect();
    sorted.sort();
    let n = sorted.len() as i64;
    sorted
        .iter()
        .enumerate()
        .map(|(k, v)| from_int(2 * k as i64 - n + 1) * *v)
        .sum()
}

/// Checks `V(after) - V(before) <= -|x_i - x_j|` for a single gossip on
/// `(i, j)`. `after` must be `before` with `i` and `j` averaged.
pub fn check_gossip_decrease(
    spec: &IndicatorSpec,
    before: &[Rational],
    after: &[Rational],
    pair: (Label, Label),
) -> bool {
    let (i, j) = pair;
    spec.value(after) - spec.value(before) <= -abs_diff(&before[i - 1], &before[j - 1])
}

/// After `i` and `j` average, the summed distance from a third agent to both
/// does not grow.
pub fn distance_sum_nonincreasing(xi: &Rational, xj: &Rational, xk: &Rational) -> bool {
    let m = midpoint(xi, xj);
    abs_diff(xk, &m) * from_int(2) <= abs_diff(xk, xi) + abs_diff(xk, xj)
}

/// Configuration and allowable gossip showing an indicator is not
/// instantaneous.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContainWitness {
    pub pair: (Label, Label),
    #[serde(with = "serde_vec")]
    pub x_before: Vec<Rational>,
    #[serde(with = "serde_vec")]
    pub x_after: Vec<Rational>,
    #[serde(with = "crate::value::serde_one")]
    pub v_before: Rational,
    #[serde(with = "crate::value::serde_one")]
    pub v_after: Rational,
}

impl ContainWitness {
    /// The gossip did not decrease `V` at all.
    pub fn is_non_decrease(&self) -> bool {
        self.v_after >= self.v_before
    }

    /// The unit-rate decrease `V(t+1) - V(t) <= -|x_i - x_j|` fails.
    pub fn violates_unit_decrease(&self) -> bool {
        let (i, j) = self.pair;
        let d = abs_diff(&self.x_before[i - 1], &self.x_before[j - 1]);
        !d.is_zero() && &self.v_after - &self.v_before > -d
    }
}

/// Builds the worst configuration for `V` over every allowable gossip `(i, j)`
/// of `g` and returns the one with the largest change `V(after) - V(before)`.
///
/// Placement with `x_i = 0`, `x_j = 2`: agents tied to both `i` and `j` in
/// `G_V` sit at `0` (their distance sum is unchanged), agents tied only to `i`
/// sit at `-1` and those tied only to `j` at `3` (each such distance grows by
/// `1`), the rest sit at `0`. No configuration does better for a fixed pair,
/// so a non-decrease witness exists iff the returned one is non-decreasing.
///
/// Returns `None` when `G_V` is complete (no gossip escapes the unit decrease).
pub fn contain_witness(spec: &IndicatorSpec, g: &Graph) -> Option<ContainWitness> {
    if spec.is_instantaneous(g) {
        return None;
    }
    let mut best: Option<(i64, (Label, Label))> = None;
    for (a, b) in g.edges() {
        for (i, j) in [(a, b), (b, a)] {
            let mut score = 0i64;
            for k in g.labels().filter(|&k| k != i && k != j) {
                let (ik, jk) = (spec.contains(i, k), spec.contains(j, k));
                if ik != jk {
                    score += 1;
                }
            }
            // each one-sided agent adds d/2, the pair itself removes d (= 2 halves)
            let score = score - if spec.contains(i, j) { 2 } else { 0 };
            if best.is_none_or(|(s, _)| score > s) {
                best = Some((score, (i, j)));
            }
        }
    }
    let (_, (i, j)) = best?;
    let mut x = vec![from_int(0); spec.n];
    x[j - 1] = from_int(2);
    for k in g.labels().filter(|&k| k != i && k != j) {
        match (spec.contains(i, k), spec.contains(j, k)) {
            (true, false) => x[k - 1] = from_int(-1),
            (false, true) => x[k - 1] = from_int(3),
            _ => {}
        }
    }
    let mut after = x.clone();
    let mid = midpoint(&x[i - 1], &x[j - 1]);
    after[i - 1] = mid.clone();
    after[j - 1] = mid;
    Some(ContainWitness {
        pair: (i, j),
        v_before: spec.value(&x),
        v_after: spec.value(&after),
        x_before: x,
        x_after: after,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, GraphKind};
    use crate::value::ratio;

    fn ints(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| from_int(x)).collect()
    }

    #[test]
    fn values() {
        let k3 = IndicatorSpec::complete(3);
        assert_eq!(k3.value(&ints(&[5, 5, 5])), from_int(0));
        assert_eq!(k3.value(&ints(&[4, 2, 0])), from_int(8));
        assert_eq!(k3.value(&ints(&[3, 3, 0])), from_int(6));
        assert_eq!(complete_value(&ints(&[4, 2, 0])), from_int(8));
        assert_eq!(complete_value(&[ratio(1, 2), from_int(-3), from_int(2)]), from_int(10));
    }

    #[test]
    fn indicator_classification() {
        let g = generate(&GraphKind::Path { n: 3 }).unwrap();
        assert!(IndicatorSpec::from_graph(&g).is_indicator(&g));
        let lone = IndicatorSpec::new(3, [(1, 2)]).unwrap();
        assert!(!lone.is_indicator(&g));
        assert_eq!(lone.value(&ints(&[1, 1, 7])), from_int(0));
        assert!(IndicatorSpec::complete(3).is_indicator(&g));
        assert!(IndicatorSpec::new(3, [(1, 1)]).is_err());
        assert!(IndicatorSpec::new(3, [(1, 2), (2, 1)]).is_err());
    }

    #[test]
    fn instantaneous_classification() {
        let g = generate(&GraphKind::Path { n: 3 }).unwrap();
        let complete = IndicatorSpec::complete(3);
        assert!(complete.is_instantaneous(&g) && complete.morse_condition(&g));
        let own = IndicatorSpec::from_graph(&g);
        assert!(!own.is_instantaneous(&g) && !own.morse_condition(&g));
        let w = contain_witness(&own, &g).unwrap();
        assert!(w.violates_unit_decrease());
        let k2 = generate(&GraphKind::Path { n: 2 }).unwrap();
        assert!(IndicatorSpec::from_graph(&k2).is_instantaneous(&k2));
        assert!(contain_witness(&IndicatorSpec::complete(3), &g).is_none());
    }

    #[test]
    fn three_path_own_edges_always_decrease_by_half() {
        // Brute force over a value grid: for E = path edges, every gossip
        // decreases V by at least |x_i - x_j| / 2, so no non-decrease exists.
        let g = generate(&GraphKind::Path { n: 3 }).unwrap();
        let spec = IndicatorSpec::from_graph(&g);
        for a in -3..=3 {
            for b in -3..=3 {
                for c in -3..=3 {
                    let x = ints(&[a, b, c]);
                    for (i, j) in g.edges() {
                        let mut y = x.clone();
                        let m = midpoint(&x[i - 1], &x[j - 1]);
                        y[i - 1] = m.clone();
                        y[j - 1] = m;
                        let drop = spec.value(&x) - spec.value(&y);
                        let d = abs_diff(&x[i - 1], &x[j - 1]);
                        assert!(drop * from_int(2) >= d);
                    }
                }
            }
        }
        assert!(!contain_witness(&spec, &g).unwrap().is_non_decrease());
    }

    #[test]
    fn witness_is_non_decreasing_when_two_one_sided_agents_exist() {
        // Star center 1: gossip (1,2) with leaves 3,4 tied only to 1.
        let g = generate(&GraphKind::Star { n: 4 }).unwrap();
        let spec = IndicatorSpec::from_graph(&g);
        let w = contain_witness(&spec, &g).unwrap();
        assert!(w.is_non_decrease());
        assert!(w.violates_unit_decrease());
    }

    #[test]
    fn gossip_decrease_examples() {
        let k3 = IndicatorSpec::complete(3);
        let before = ints(&[4, 2, 0]);
        assert!(check_gossip_decrease(&k3, &before, &ints(&[3, 3, 0]), (1, 2)));
        assert!(check_gossip_decrease(&k3, &before, &ints(&[2, 2, 2]), (1, 3)));
        let eq = ints(&[1, 1, 0]);
        assert!(check_gossip_decrease(&k3, &eq, &eq, (1, 2)));
    }
}
