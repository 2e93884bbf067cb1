//! Per-level outcome of a hierarchy classification.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Levels of the hierarchy, weakest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Ergodic,
    Mixing,
    Kolmogorov,
    Bernoulli,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::Ergodic, Level::Mixing, Level::Kolmogorov, Level::Bernoulli];

    pub fn name(self) -> &'static str {
        match self {
            Level::Ergodic => "ergodic",
            Level::Mixing => "mixing",
            Level::Kolmogorov => "kolmogorov",
            Level::Bernoulli => "bernoulli",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Outcome of one level-test. `passed` is `residual < epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    pub level: Level,
    pub passed: bool,
    pub residual: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
}

impl LevelResult {
    pub fn new(level: Level, residual: f64, epsilon: f64) -> Self {
        Self {
            level,
            // NaN residuals never pass
            passed: residual < epsilon,
            residual,
            epsilon,
            parameters: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: f64) -> Self {
        self.parameters.insert(key.to_string(), value);
        self
    }
}

/// Four level results sharing one tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyVerdict {
    pub system: String,
    pub epsilon: f64,
    pub levels: Vec<LevelResult>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl HierarchyVerdict {
    pub fn new(system: impl Into<String>, epsilon: f64, levels: [LevelResult; 4]) -> Self {
        Self {
            system: system.into(),
            epsilon,
            levels: levels.into(),
            notes: Vec::new(),
        }
    }

    pub fn get(&self, level: Level) -> Option<&LevelResult> {
        self.levels.iter().find(|l| l.level == level)
    }

    pub fn passed(&self, level: Level) -> bool {
        self.get(level).is_some_and(|l| l.passed)
    }

    pub fn residual(&self, level: Level) -> f64 {
        self.get(level).map_or(f64::NAN, |l| l.residual)
    }

    /// Whether every passing level implies all weaker levels pass.
    pub fn inclusions_hold(&self) -> bool {
        Level::ALL.windows(2).all(|w| !self.passed(w[1]) || self.passed(w[0]))
    }

    /// Strongest level for which it and all weaker levels pass.
    pub fn strongest(&self) -> Option<Level> {
        Level::ALL.iter().take_while(|&&l| self.passed(l)).last().copied()
    }
}

impl fmt::Display for HierarchyVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} (epsilon = {:e})", self.system, self.epsilon)?;
        for l in &self.levels {
            writeln!(
                f,
                "  {:<10} {:<4} residual {:.6e}",
                l.level.name(),
                if l.passed { "pass" } else { "fail" },
                l.residual
            )?;
        }
        for n in &self.notes {
            writeln!(f, "  note: {n}")?;
        }
        Ok(())
    }
}
