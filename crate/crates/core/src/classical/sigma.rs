//! Finite truncation of the remote-future algebra generated by
//! `T^k A_i`, `k >= n`.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{MapSpec, MeasurableSet};
use crate::error::Result;

/// Hard cap on the number of produced sets.
pub const MAX_PRODUCED: usize = 64;

const TRIPLE_SEED: u64 = 0x5167_6d61;

/// Shape of a produced set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaKind {
    Single,
    /// Finite intersection.
    Intersection,
    /// Finite union of differences.
    UnionOfDifferences,
}

#[derive(Debug, Clone)]
pub struct SigmaTerm<S> {
    pub kind: SigmaKind,
    pub label: String,
    pub set: S,
}

#[derive(Debug, Clone)]
pub struct SigmaSample<S> {
    pub generators: Vec<S>,
    pub offset: i64,
    pub max_terms: usize,
    pub produced: Vec<SigmaTerm<S>>,
}

/// Enumerates, in order and up to [`MAX_PRODUCED`] sets:
///
/// 1. `T^{n+j} A_i` for `j < max_terms` and every generator;
/// 2. for every pair of those, the intersection and both differences;
/// 3. a seeded selection of triples, alternating `a ∩ b ∩ c` and
///    `(a \ b) ∪ (b \ c)`.
pub fn generate_sigma_sample<S: MeasurableSet>(
    base_sets: &[S],
    map: &MapSpec,
    offset: i64,
    max_terms: usize,
) -> Result<SigmaSample<S>> {
    let mut singles = Vec::new();
    'outer: for j in 0..max_terms {
        for (i, a) in base_sets.iter().enumerate() {
            if singles.len() == MAX_PRODUCED {
                break 'outer;
            }
            let k = offset + j as i64;
            singles.push(SigmaTerm {
                kind: SigmaKind::Single,
                label: format!("T^{k} A{}", i + 1),
                set: a.image(map, k)?,
            });
        }
    }
    let mut produced = singles.clone();
    let room = |p: &Vec<SigmaTerm<S>>| p.len() < MAX_PRODUCED;

    'pairs: for s in 0..singles.len() {
        for t in s + 1..singles.len() {
            let (a, b) = (&singles[s], &singles[t]);
            for (kind, label, set) in [
                (SigmaKind::Intersection, format!("({}) ∩ ({})", a.label, b.label), a.set.meet(&b.set)),
                (SigmaKind::UnionOfDifferences, format!("({}) \\ ({})", a.label, b.label), a.set.minus(&b.set)),
                (SigmaKind::UnionOfDifferences, format!("({}) \\ ({})", b.label, a.label), b.set.minus(&a.set)),
            ] {
                if !room(&produced) {
                    break 'pairs;
                }
                produced.push(SigmaTerm { kind, label, set: set? });
            }
        }
    }

    let m = singles.len();
    if m >= 3 && room(&produced) {
        let mut rng = ChaCha8Rng::seed_from_u64(TRIPLE_SEED);
        let mut seen = HashSet::new();
        let distinct = m * (m - 1) * (m - 2);
        let mut attempts = 0;
        while room(&produced) && seen.len() < distinct && attempts < 64 * MAX_PRODUCED {
            attempts += 1;
            let a = rng.random_range(0..m);
            let b = rng.random_range(0..m);
            let c = rng.random_range(0..m);
            if a == b || b == c || a == c || !seen.insert((a, b, c)) {
                continue;
            }
            let (x, y, z) = (&singles[a], &singles[b], &singles[c]);
            let term = if seen.len() % 2 == 1 {
                SigmaTerm {
                    kind: SigmaKind::Intersection,
                    label: format!("({}) ∩ ({}) ∩ ({})", x.label, y.label, z.label),
                    set: x.set.meet(&y.set)?.meet(&z.set)?,
                }
            } else {
                SigmaTerm {
                    kind: SigmaKind::UnionOfDifferences,
                    label: format!(
                        "(({}) \\ ({})) ∪ (({}) \\ ({}))",
                        x.label, y.label, y.label, z.label
                    ),
                    set: x.set.minus(&y.set)?.join(&y.set.minus(&z.set)?)?,
                }
            };
            produced.push(term);
        }
    }

    Ok(SigmaSample {
        generators: base_sets.to_vec(),
        offset,
        max_terms,
        produced,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{ArcSet, CellSet};

    #[test]
    fn single_generator_single_term() {
        let a = ArcSet::new([(0.0, 0.3)]).unwrap();
        let m = MapSpec::Rotation { alpha: 0.25 };
        let s = generate_sigma_sample(&[a.clone()], &m, 3, 1).unwrap();
        assert_eq!(s.produced.len(), 1);
        assert_eq!(s.produced[0].set, a.rotated(0.75));
    }

    #[test]
    fn pairs_are_included() {
        let a1 = CellSet::cylinder(2, &[0, 1], true).unwrap();
        let a2 = CellSet::cylinder(2, &[1], false).unwrap();
        let m = MapSpec::Baker;
        let n = 4;
        let s = generate_sigma_sample(&[a1.clone(), a2.clone()], &m, n, 2).unwrap();
        let t1 = a1.image(&m, n).unwrap();
        let t2 = a2.image(&m, n + 1).unwrap();
        let inter = t1.intersection(&t2).unwrap();
        let diff = t1.difference(&t2).unwrap();
        assert!(s.produced.iter().any(|t| t.set.same_set(&inter)));
        assert!(s.produced.iter().any(|t| t.set.same_set(&diff)));
        assert!(s.produced.len() <= MAX_PRODUCED);
    }

    #[test]
    fn measures_match_popcount() {
        let base: Vec<CellSet> = (0..3)
            .map(|i| CellSet::from_predicate(2, 3, |x, y| (x * (i + 2) + y) % 3 == 0).unwrap())
            .collect();
        let s = generate_sigma_sample(&base, &MapSpec::Cat, 5, 3).unwrap();
        assert_eq!(s.produced.len(), MAX_PRODUCED);
        for t in &s.produced {
            let sq = t.set.to_square().unwrap();
            let side = 1u64 << sq.resolution().unwrap();
            let mut count = 0u64;
            for ix in 0..side {
                for iy in 0..side {
                    count += sq.contains_cell(ix, iy) as u64;
                }
            }
            let m = t.set.measure();
            assert!((0.0..=1.0).contains(&m));
            assert_eq!(m, count as f64 / (side * side) as f64);
        }
    }

    #[test]
    fn deterministic() {
        let base = vec![
            ArcSet::new([(0.0, 0.5)]).unwrap(),
            ArcSet::new([(0.2, 0.4)]).unwrap(),
        ];
        let m = MapSpec::Rotation { alpha: 0.3 };
        let a = generate_sigma_sample(&base, &m, 2, 4).unwrap();
        let b = generate_sigma_sample(&base, &m, 2, 4).unwrap();
        let la: Vec<_> = a.produced.iter().map(|t| t.label.clone()).collect();
        let lb: Vec<_> = b.produced.iter().map(|t| t.label.clone()).collect();
        assert_eq!(la, lb);
    }
}
