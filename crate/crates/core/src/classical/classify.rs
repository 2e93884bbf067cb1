//! Classical level-tests on a family of base sets.

use serde::{Deserialize, Serialize};

use super::{cesaro_correlation, generate_sigma_sample, set_correlation, MapSpec, MeasurableSet};
use crate::error::{Error, Result};
use crate::verdict::{HierarchyVerdict, Level, LevelResult};

/// Horizons and truncation for [`classify_set_level`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifyParams {
    /// Cesàro horizon of the ergodic test.
    pub n_cesaro: u64,
    /// Mixing uses the tail `[n_mix/2, n_mix]`; Bernoulli uses `[0, n_mix]`.
    pub n_mix: u64,
    /// Offset of the remote-future sample in the Kolmogorov test.
    pub n0_k: i64,
    /// Number of generators fed to the sample.
    pub r: usize,
    /// Time steps per generator in the sample.
    pub j: usize,
    pub epsilon: f64,
}

impl Default for ClassifyParams {
    fn default() -> Self {
        Self {
            n_cesaro: 10_000,
            n_mix: 200,
            n0_k: 100,
            r: 2,
            j: 2,
            epsilon: 1e-2,
        }
    }
}

/// Runs the four classical level-tests.
///
/// `base_sets[0]` is the reference set `A`; every other base set `B`
/// contributes the correlation `C(T^n B, A)`. The Kolmogorov test draws
/// its sets from the sample generated by `base_sets[1..=r]`.
pub fn classify_set_level<S: MeasurableSet>(
    map: &MapSpec,
    base_sets: &[S],
    params: &ClassifyParams,
) -> Result<HierarchyVerdict> {
    if base_sets.len() < 2 {
        return Err(Error::InsufficientSets {
            found: base_sets.len(),
        });
    }
    if !(params.epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {}",
            params.epsilon
        )));
    }
    if params.n_cesaro == 0 || params.n_mix == 0 {
        return Err(Error::InvalidParameter("horizons must be >= 1".into()));
    }
    map.validate()?;
    let eps = params.epsilon;
    let a = &base_sets[0];
    let others = &base_sets[1..];

    let mut ergodic = 0.0f64;
    for b in others {
        ergodic = ergodic.max(cesaro_correlation(map, a, b, params.n_cesaro)?.abs());
    }

    let mut mixing = 0.0f64;
    let mut bernoulli = 0.0f64;
    for b in others {
        for n in 0..=params.n_mix {
            let c = set_correlation(map, a, b, n as i64)?.abs();
            bernoulli = bernoulli.max(c);
            if n >= params.n_mix / 2 {
                mixing = mixing.max(c);
            }
        }
    }

    let generators = &others[..params.r.clamp(1, others.len())];
    let sample = generate_sigma_sample(generators, map, params.n0_k, params.j)?;
    let mut kolmogorov = 0.0f64;
    for t in &sample.produced {
        let c = a.meet_measure(&t.set)? - a.measure() * t.set.measure();
        kolmogorov = kolmogorov.max(c.abs());
    }

    let mut v = HierarchyVerdict::new(
        map.name(),
        eps,
        [
            LevelResult::new(Level::Ergodic, ergodic, eps).with_param("n_cesaro", params.n_cesaro as f64),
            LevelResult::new(Level::Mixing, mixing, eps)
                .with_param("window_start", (params.n_mix / 2) as f64)
                .with_param("window_end", params.n_mix as f64),
            LevelResult::new(Level::Kolmogorov, kolmogorov, eps)
                .with_param("n0", params.n0_k as f64)
                .with_param("r", generators.len() as f64)
                .with_param("J", params.j as f64)
                .with_param("sample_size", sample.produced.len() as f64),
            LevelResult::new(Level::Bernoulli, bernoulli, eps).with_param("n_max", params.n_mix as f64),
        ],
    );
    let outcome = if v.passed(Level::Kolmogorov) { "not falsified" } else { "falsified" };
    v.notes.push(format!(
        "kolmogorov: {outcome} on {} sets at truncation (n0 = {}, r = {}, J = {})",
        sample.produced.len(),
        params.n0_k,
        generators.len(),
        params.j
    ));
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{ArcSet, CellSet};

    const GOLDEN: f64 = 0.618_033_988_749_894_8;

    fn half() -> ArcSet {
        ArcSet::new([(0.0, 0.5)]).unwrap()
    }

    #[test]
    fn needs_two_sets() {
        let r = classify_set_level(&MapSpec::Cat, &[CellSet::full(2).unwrap()], &ClassifyParams::default());
        assert!(matches!(r, Err(Error::InsufficientSets { found: 1 })));
    }

    #[test]
    fn bernoulli_shift_cylinders() {
        let a0 = CellSet::cylinder(2, &[1, 0, 1], true).unwrap();
        let a1 = CellSet::cylinder(2, &[0, 1, 1], false).unwrap();
        let a2 = CellSet::cylinder(2, &[1, 1, 0], false).unwrap();
        let p = ClassifyParams {
            n_cesaro: 2_000,
            ..Default::default()
        };
        let v = classify_set_level(&MapSpec::BernoulliShift { p: 2 }, &[a0, a1, a2], &p).unwrap();
        for l in Level::ALL {
            assert!(v.passed(l), "{v}");
            assert_eq!(v.residual(l), 0.0);
        }
    }

    #[test]
    fn irrational_rotation_is_ergodic_not_mixing() {
        let p = ClassifyParams {
            n_mix: 10_000,
            ..Default::default()
        };
        let v = classify_set_level(&MapSpec::Rotation { alpha: GOLDEN }, &[half(), half()], &p).unwrap();
        assert!(v.passed(Level::Ergodic), "{v}");
        assert!(!v.passed(Level::Mixing), "{v}");
        assert!(v.inclusions_hold());
    }

    #[test]
    fn identity_rotation_fails_everything() {
        let v = classify_set_level(
            &MapSpec::Rotation { alpha: 0.0 },
            &[half(), half()],
            &ClassifyParams {
                n_cesaro: 100,
                ..Default::default()
            },
        )
        .unwrap();
        for l in Level::ALL {
            assert!(!v.passed(l));
        }
    }
}
