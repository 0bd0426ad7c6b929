//! Scenario configuration: one simulation setup per TOML file, with
//! validation of the admissible parameter ranges before anything runs.

use crate::error::{Error, Result};
use crate::fracnorms::Alpha;
use crate::grid::TimeGrid;
use crate::noise::{FbmMethod, Hurst};
use crate::sde::{CoefficientFamily, SdeProblem};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Partition family for the solve grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GridSpec {
    #[default]
    Uniform,
    /// `t_i = horizon * (i / n)^gamma` with `gamma >= 1`.
    Graded { gamma: f64 },
}

impl GridSpec {
    pub fn build(&self, horizon: f64, steps: usize) -> Result<TimeGrid> {
        match *self {
            GridSpec::Uniform => TimeGrid::uniform(horizon, steps),
            GridSpec::Graded { gamma } => TimeGrid::graded(horizon, steps, gamma),
        }
    }
}

/// A fully described simulation: coefficients, drivers, grid, and the
/// fractional-norm parameter. Unknown keys are rejected so typos surface as
/// config errors instead of silently picking defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub hurst: f64,
    pub horizon: f64,
    pub steps: usize,
    pub seed: u64,
    /// Fractional order for norms and integrals; defaults to the midpoint of
    /// the admissible window `(1 - hurst, 1/2)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub x0: Vec<f64>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub method: FbmMethod,
    pub coefficients: CoefficientFamily,
    /// Output root; overridable by the command line and environment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
}

impl Scenario {
    pub fn from_toml_str(src: &str) -> Result<Scenario> {
        let scenario: Scenario =
            toml::from_str(src).map_err(|e| Error::Config(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Scenario> {
        let src = std::fs::read_to_string(path.as_ref())?;
        Scenario::from_toml_str(&src)
    }

    /// Check all parameter ranges; every scenario passes through here before
    /// anything is generated.
    pub fn validate(&self) -> Result<()> {
        match self.diagnostics().into_iter().next() {
            None => Ok(()),
            Some(problem) => Err(Error::Config(problem)),
        }
    }

    /// All schema and cross-reference problems at once, for front ends that
    /// want to list every issue instead of stopping at the first.
    pub fn diagnostics(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            problems.push(format!(
                "scenario name must be non-empty and free of path separators, got `{}`",
                self.name
            ));
        }
        let hurst = match Hurst::new(self.hurst) {
            Ok(h) => Some(h),
            Err(e) => {
                problems.push(format!("hurst: {e}"));
                None
            }
        };
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            problems.push(format!(
                "horizon must be positive and finite, got {}",
                self.horizon
            ));
        }
        if self.steps < 2 {
            problems.push(format!("steps must be at least 2, got {}", self.steps));
        }
        if self.x0.is_empty() || self.x0.iter().any(|v| !v.is_finite()) {
            problems.push("x0 must be non-empty and finite".into());
        }
        if let Some(a) = self.alpha {
            match Alpha::new(a) {
                Err(e) => problems.push(format!("alpha: {e}")),
                Ok(_) => {
                    if let Some(h) = hurst {
                        if a <= 1.0 - h.get() {
                            problems.push(format!(
                                "alpha = {a} must exceed 1 - hurst = {}; smaller orders fall \
                                 outside the admissible window",
                                1.0 - h.get()
                            ));
                        }
                    }
                }
            }
        }
        match self.coefficients.build() {
            Err(e) => problems.push(format!("coefficients: {e}")),
            Ok(coeffs) => {
                if coeffs.dims().state != self.x0.len() {
                    problems.push(format!(
                        "x0 has {} components but the coefficient family expects {}",
                        self.x0.len(),
                        coeffs.dims().state
                    ));
                }
            }
        }
        if matches!(self.coefficients, CoefficientFamily::TimeModulated { .. })
            && self.horizon > 1.0
        {
            problems.push(
                "the time-modulated family declares its constants for horizons <= 1".into(),
            );
        }
        problems
    }

    pub fn hurst(&self) -> Hurst {
        Hurst::new(self.hurst).expect("validated")
    }

    /// The configured alpha, or the midpoint of `(1 - hurst, 1/2)`.
    pub fn alpha(&self) -> Alpha {
        let a = self.alpha.unwrap_or(0.5 * ((1.0 - self.hurst) + 0.5));
        Alpha::new(a).expect("validated")
    }

    pub fn build_grid(&self) -> Result<TimeGrid> {
        self.grid.build(self.horizon, self.steps)
    }

    pub fn to_problem(&self) -> Result<SdeProblem> {
        SdeProblem::new(
            self.coefficients.build()?,
            self.x0.clone(),
            self.horizon,
            self.hurst(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
name = "demo"
hurst = 0.75
horizon = 1.0
steps = 128
seed = 7
x0 = [1.0]

[coefficients]
family = "linear-mixed"
drift = 0.1
vol_bm = 0.1
vol_fbm = 0.3
"#;

    #[test]
    fn round_trips_and_defaults() {
        let sc = Scenario::from_toml_str(GOOD).unwrap();
        assert_eq!(sc.name, "demo");
        assert_eq!(sc.grid, GridSpec::Uniform);
        assert_eq!(sc.method, FbmMethod::Auto);
        // default alpha is the admissible midpoint
        assert!((sc.alpha().get() - 0.375).abs() < 1e-12);
        let back = Scenario::from_toml_str(&toml::to_string(&sc).unwrap()).unwrap();
        assert_eq!(back, sc);
        assert_eq!(sc.build_grid().unwrap().steps(), 128);
        assert_eq!(sc.to_problem().unwrap().x0, vec![1.0]);
    }

    #[test]
    fn rejects_out_of_range_hurst_and_alpha() {
        let bad_h = GOOD.replace("hurst = 0.75", "hurst = 0.4");
        let err = Scenario::from_toml_str(&bad_h).unwrap_err();
        assert!(err.to_string().contains("hurst"), "{err}");

        let bad_a = GOOD.replace("seed = 7", "seed = 7\nalpha = 0.2");
        let err = Scenario::from_toml_str(&bad_a).unwrap_err();
        assert!(err.to_string().contains("1 - hurst"), "{err}");

        let big_a = GOOD.replace("seed = 7", "seed = 7\nalpha = 0.6");
        assert!(Scenario::from_toml_str(&big_a).is_err());
    }

    #[test]
    fn rejects_unknown_keys_and_families() {
        let unknown = GOOD.replace("seed = 7", "seed = 7\nbogus = 1");
        let err = Scenario::from_toml_str(&unknown).unwrap_err();
        assert!(matches!(err, Error::Config(_)));

        let bad_family = GOOD.replace("family = \"linear-mixed\"", "family = \"no-such\"");
        assert!(Scenario::from_toml_str(&bad_family).is_err());
    }

    #[test]
    fn diagnostics_list_every_problem() {
        let broken = GOOD
            .replace("hurst = 0.75", "hurst = 0.4")
            .replace("steps = 128", "steps = 1")
            .replace("x0 = [1.0]", "x0 = [1.0, 2.0]");
        let sc: Scenario = toml::from_str(&broken).unwrap();
        let problems = sc.diagnostics();
        assert_eq!(problems.len(), 3, "{problems:?}");
        assert!(problems.iter().any(|p| p.contains("hurst")));
        assert!(problems.iter().any(|p| p.contains("steps")));
        assert!(problems.iter().any(|p| p.contains("x0")));
        // validate() surfaces the first of them
        assert!(matches!(sc.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn rejects_mismatched_x0_and_long_time_modulated() {
        let bad_x0 = GOOD.replace("x0 = [1.0]", "x0 = [1.0, 2.0]");
        let err = Scenario::from_toml_str(&bad_x0).unwrap_err();
        assert!(err.to_string().contains("x0"), "{err}");

        let tm = r#"
name = "tm"
hurst = 0.75
horizon = 2.0
steps = 64
seed = 1
x0 = [0.5]

[coefficients]
family = "time-modulated"
beta = 0.6
amplitude = 0.5
"#;
        let err = Scenario::from_toml_str(tm).unwrap_err();
        assert!(err.to_string().contains("horizons <= 1"), "{err}");
    }

    #[test]
    fn loads_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scenario.toml");
        std::fs::write(&path, GOOD).unwrap();
        let sc = Scenario::load(&path).unwrap();
        assert_eq!(sc.seed, 7);
        assert!(Scenario::load(dir.path().join("missing.toml")).is_err());
    }

    #[test]
    fn graded_grid_spec_builds() {
        let graded = GOOD.replace(
            "[coefficients]",
            "[grid]\nkind = \"graded\"\ngamma = 2.0\n\n[coefficients]",
        );
        let sc = Scenario::from_toml_str(&graded).unwrap();
        let grid = sc.build_grid().unwrap();
        assert!(!grid.is_uniform());
        assert_eq!(grid.steps(), 128);
    }
}
