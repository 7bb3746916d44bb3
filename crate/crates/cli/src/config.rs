use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sphvisc::harness::{
    default_family, random_family, HarnessSpec, ProblemSpec, ScheduleSpec, SolverSpec, SweepSpec, TestFunction,
};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: invalid value for `{field}`: {message}")]
    Invalid { path: PathBuf, field: String, message: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

/// Options of the `run` subcommand.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSpec {
    /// Viscosity of the single run; the first entry of `schedule.eps` if absent.
    pub eps: Option<f64>,
}

/// Test functions for the weak residuals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestsSpec {
    /// Names from the built-in family: `bump`, `r2_bump`, `linear`.
    pub family: Vec<String>,
    /// Number of extra seeded random admissible functions.
    pub random: usize,
    pub seed: u64,
}

impl Default for TestsSpec {
    fn default() -> Self {
        Self {
            family: vec!["bump".into(), "r2_bump".into(), "linear".into()],
            random: 0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub output: OutputSpec,
    pub run: RunSpec,
    pub problem: ProblemSpec,
    pub schedule: ScheduleSpec,
    pub solver: SolverSpec,
    pub harness: HarnessSpec,
    pub tests: TestsSpec,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.into(),
            source,
        })?;
        let cfg = Self::parse(&text).map_err(|message| ConfigError::Parse {
            path: path.into(),
            message,
        })?;
        cfg.check().map_err(|(field, message)| ConfigError::Invalid {
            path: path.into(),
            field,
            message,
        })?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn sweep(&self) -> SweepSpec {
        SweepSpec {
            problem: self.problem.clone(),
            schedule: self.schedule.clone(),
            solver: self.solver.clone(),
            harness: self.harness.clone(),
        }
    }

    pub fn run_eps(&self) -> f64 {
        self.run.eps.or_else(|| self.schedule.eps.first().copied()).unwrap_or(f64::NAN)
    }

    /// Semantic checks that parsing cannot express, as `(field, message)`.
    pub fn check(&self) -> Result<(), (String, String)> {
        let known: Vec<String> = default_family::<f64>(1.0).iter().map(|f| f.name().to_string()).collect();
        for name in &self.tests.family {
            if !known.contains(name) {
                return Err(("tests.family".into(), format!("unknown test function `{name}` (known: {})", known.join(", "))));
            }
        }
        if let Some(eps) = self.run.eps {
            if !(eps > 0.0) {
                return Err(("run.eps".into(), format!("{eps} must be positive")));
            }
        }
        self.sweep().validate().map_err(|e| (field_of(&e.to_string()).into(), e.to_string()))
    }

    /// The configured test functions; `seed` overrides `tests.seed`.
    pub fn family(&self, seed: Option<u64>) -> Vec<TestFunction<f64>> {
        let t = self.problem.t_final;
        let mut fam: Vec<TestFunction<f64>> = default_family(t)
            .into_iter()
            .filter(|f| self.tests.family.iter().any(|n| n == f.name()))
            .collect();
        fam.extend(random_family(seed.unwrap_or(self.tests.seed), self.tests.random, t));
        fam
    }
}

fn field_of(message: &str) -> &'static str {
    if message.contains("eps") {
        "schedule.eps"
    } else if message.contains("t_final") {
        "problem.t_final"
    } else if message.contains("snapshot") {
        "solver.snapshots"
    } else if message.contains("CFL") {
        "solver.cfl"
    } else if message.contains("spacing") {
        "solver.outer_spacing"
    } else if message.contains("time-step") {
        "solver.max_dt"
    } else if message.contains("floor") {
        "solver.density_floor"
    } else if message.contains("bump") {
        "problem.profile"
    } else if message.contains("threshold") || message.contains("Delta") || message.contains("delta") {
        "harness.deltas"
    } else {
        "config"
    }
}
