//! Rank-quality metrics: precision at k, Kendall tau-b and Jaccard distance.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::hash::Hash;

use crate::canonical::CanonicalCode;
use crate::error::{Error, Result};

/// Codes with non-increasing values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankedList {
    items: Vec<(CanonicalCode, f64)>,
}

impl RankedList {
    pub fn new(items: Vec<(CanonicalCode, f64)>) -> Result<Self> {
        if items.windows(2).any(|w| w[0].1 < w[1].1) {
            return Err(Error::Config("ranked list values must be non-increasing".into()));
        }
        Ok(Self { items })
    }

    pub fn items(&self) -> &[(CanonicalCode, f64)] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn top_codes(&self, k: usize) -> impl Iterator<Item = &CanonicalCode> {
        self.items.iter().take(k).map(|(c, _)| c)
    }
}

/// Percentage of the true top-k found in the mined top-k.
///
/// The truth list must already be tie-broken (the oracle ranks ties by code).
pub fn precision_at_k(mined: &RankedList, truth: &RankedList, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Config("k must be positive".into()));
    }
    if truth.len() < k {
        return Err(Error::Config(format!("k = {k} exceeds the {} patterns in the truth set", truth.len())));
    }
    let truth_top: HashSet<&CanonicalCode> = truth.top_codes(k).collect();
    let hits = mined.top_codes(k).filter(|c| truth_top.contains(c)).count();
    Ok(100.0 * hits as f64 / k as f64)
}

/// Tie-corrected Kendall rank correlation,
/// `(C - D) / sqrt((n0 - n1) (n0 - n2))`.
pub fn kendall_tau_b(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.len() < 2 {
        return Err(Error::Undefined("tau-b needs at least two observations"));
    }
    let n = pairs.len() as u64;
    let n0 = n * (n - 1) / 2;
    let (mut concordant, mut discordant, mut ties_x, mut ties_y) = (0u64, 0u64, 0u64, 0u64);
    for (i, a) in pairs.iter().enumerate() {
        for b in &pairs[i + 1..] {
            let dx = a.0.total_cmp(&b.0);
            let dy = a.1.total_cmp(&b.1);
            if dx.is_eq() {
                ties_x += 1;
            }
            if dy.is_eq() {
                ties_y += 1;
            }
            if dx.is_ne() && dy.is_ne() {
                if dx == dy {
                    concordant += 1;
                } else {
                    discordant += 1;
                }
            }
        }
    }
    let denom = ((n0 - ties_x) as f64 * (n0 - ties_y) as f64).sqrt();
    if denom == 0.0 {
        return Err(Error::Undefined("tau-b undefined: one coordinate is constant"));
    }
    Ok((concordant as f64 - discordant as f64) / denom)
}

/// `1 - |A ∩ B| / |A ∪ B|`, zero when both are empty.
pub fn jaccard_distance<T: Eq + Hash>(a: &HashSet<T>, b: &HashSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    1.0 - a.intersection(b).count() as f64 / union as f64
}

/// Mean Jaccard distance over all unordered pairs of sets.
pub fn mean_pairwise_jaccard<T: Eq + Hash>(sets: &[HashSet<T>]) -> f64 {
    let mut total = 0.0;
    let mut pairs = 0usize;
    for (i, a) in sets.iter().enumerate() {
        for b in &sets[i + 1..] {
            total += jaccard_distance(a, b);
            pairs += 1;
        }
    }
    if pairs == 0 {
        0.0
    } else {
        total / pairs as f64
    }
}

/// (actual support, expected support) for every code in the union of the
/// true and mined top-k. Codes never sampled get expected support 0; codes
/// missing from `actual` get actual support 0.
pub fn support_pairs(
    mined: &RankedList,
    truth: &RankedList,
    actual: &HashMap<CanonicalCode, usize>,
    k: usize,
) -> Vec<(CanonicalCode, f64, f64)> {
    let expected: HashMap<&CanonicalCode, f64> = mined.top_codes(k).zip(mined.items.iter().map(|x| x.1)).collect();
    let union: BTreeSet<&CanonicalCode> = truth.top_codes(k).chain(mined.top_codes(k)).collect();
    union
        .into_iter()
        .map(|c| {
            let a = actual.get(c).copied().unwrap_or(0) as f64;
            let e = expected.get(c).copied().unwrap_or(0.0);
            (c.clone(), a, e)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn list(codes: &[&str]) -> RankedList {
        let n = codes.len();
        RankedList::new(codes.iter().enumerate().map(|(i, c)| (CanonicalCode::from_text(*c), (n - i) as f64)).collect())
            .unwrap()
    }

    /// Direct pair enumeration of the tau-b formula.
    fn tau_b_oracle(p: &[(f64, f64)]) -> f64 {
        let sign = |x: f64| {
            if x > 0.0 {
                1.0
            } else if x < 0.0 {
                -1.0
            } else {
                0.0
            }
        };
        let mut num = 0.0f64;
        let mut sx = 0.0f64;
        let mut sy = 0.0f64;
        for i in 0..p.len() {
            for j in 0..p.len() {
                if i < j {
                    let a = sign(p[i].0 - p[j].0);
                    let b = sign(p[i].1 - p[j].1);
                    num += a * b;
                    sx += a * a;
                    sy += b * b;
                }
            }
        }
        num / (sx * sy).sqrt()
    }

    #[test]
    fn precision_cases() {
        let truth = list(&["a", "b", "c", "d", "e"]);
        assert_eq!(precision_at_k(&list(&["a", "b", "c", "d"]), &truth, 4).unwrap(), 100.0);
        assert_eq!(precision_at_k(&list(&["a", "x", "c", "y"]), &truth, 4).unwrap(), 50.0);
        assert_eq!(precision_at_k(&list(&["x", "y"]), &truth, 2).unwrap(), 0.0);
        assert!(precision_at_k(&truth, &truth, 0).is_err());
        assert!(precision_at_k(&truth, &truth, 6).is_err());
    }

    #[test]
    fn tau_b_cases() {
        assert_eq!(kendall_tau_b(&[(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)]).unwrap(), 1.0);
        assert_eq!(kendall_tau_b(&[(1.0, 3.0), (2.0, 2.0), (3.0, 1.0)]).unwrap(), -1.0);
        let tied = [(1.0, 1.0), (2.0, 2.0), (3.0, 2.0), (4.0, 4.0)];
        let v = kendall_tau_b(&tied).unwrap();
        // C = 5, D = 0, one tie in y: 5 / sqrt(6 * 5)
        assert!((v - 5.0 / 30f64.sqrt()).abs() < 1e-12);
        assert!((v - tau_b_oracle(&tied)).abs() < 1e-12);
        assert!(kendall_tau_b(&[(1.0, 1.0)]).is_err());
        assert!(kendall_tau_b(&[(1.0, 1.0), (1.0, 2.0)]).is_err());
    }

    #[test]
    fn tau_b_symmetries() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let p: Vec<(f64, f64)> =
                (0..20).map(|_| (rng.gen_range(0..6) as f64, rng.gen_range(0..6) as f64)).collect();
            let t = kendall_tau_b(&p).unwrap();
            assert!((t - tau_b_oracle(&p)).abs() < 1e-12);
            let neg: Vec<_> = p.iter().map(|&(x, y)| (x, -y)).collect();
            assert!((kendall_tau_b(&neg).unwrap() + t).abs() < 1e-12);
            let own: Vec<_> = p.iter().map(|&(x, _)| (x, x)).collect();
            assert!((kendall_tau_b(&own).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn jaccard_cases() {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<HashSet<_>>();
        assert_eq!(jaccard_distance(&s(&["a", "b"]), &s(&["a", "b"])), 0.0);
        assert_eq!(jaccard_distance(&s(&["a"]), &s(&["b"])), 1.0);
        assert_eq!(jaccard_distance(&s(&["a", "b", "c"]), &s(&["b", "c", "d"])), 0.5);
        assert_eq!(jaccard_distance::<String>(&s(&[]), &s(&[])), 0.0);
        assert_eq!(mean_pairwise_jaccard(&[s(&["a"]), s(&["a"]), s(&["b"])]), 2.0 / 3.0);
    }

    #[test]
    fn union_pairs() {
        let truth = list(&["a", "b", "c"]);
        let mined = list(&["b", "z"]);
        let actual: HashMap<_, _> =
            [("a", 5), ("b", 4), ("c", 3), ("z", 1)].iter().map(|&(c, s)| (CanonicalCode::from_text(c), s)).collect();
        let pairs = support_pairs(&mined, &truth, &actual, 2);
        let got: Vec<(String, f64, f64)> = pairs.into_iter().map(|(c, a, e)| (c.to_string(), a, e)).collect();
        assert_eq!(got, vec![("a".into(), 5.0, 0.0), ("b".into(), 4.0, 2.0), ("z".into(), 1.0, 1.0)]);
    }
}
