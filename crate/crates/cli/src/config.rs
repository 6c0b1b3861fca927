use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use kslab::{MeasuredPointCloud, ScaleGrid, SpaceSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Doubling,
    Energy,
    Smoothing,
    Poincare,
    Graphform,
    Convergence,
    All,
}

impl Suite {
    pub const EACH: [Suite; 6] = [
        Suite::Doubling,
        Suite::Energy,
        Suite::Smoothing,
        Suite::Poincare,
        Suite::Graphform,
        Suite::Convergence,
    ];

    pub fn expand(self) -> Vec<Suite> {
        match self {
            Suite::All => Self::EACH.to_vec(),
            s => vec![s],
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Suite::Doubling => "doubling",
            Suite::Energy => "energy",
            Suite::Smoothing => "smoothing",
            Suite::Poincare => "poincare",
            Suite::Graphform => "graphform",
            Suite::Convergence => "convergence",
            Suite::All => "all",
        };
        f.write_str(s)
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Suite::EACH
            .iter()
            .chain(&[Suite::All])
            .find(|k| k.to_string() == s)
            .copied()
            .ok_or_else(|| format!("unknown suite {s:?}"))
    }
}

/// Walk dimension: a number, or `"fit"` to estimate it from the space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WalkDim {
    Value(f64),
    Fit(FitTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitTag {
    Fit,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub r_max: Option<f64>,
    pub ratio: Option<f64>,
    pub count: Option<usize>,
    pub window: Option<usize>,
    pub kappa: Option<f64>,
}

/// Every threshold used by a pass/fail decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Upper bound on the doubling constant; unset means "finite".
    pub doubling_max: Option<f64>,
    pub comparability_max: f64,
    /// Relative tolerance of the fitted limit against the closed form on grids.
    pub calibration_rel: f64,
    pub mollifier_stability: f64,
    pub cutoff_stability: f64,
    pub walk_dim_agreement: f64,
    pub heat_residual_max: f64,
    pub heat_exponent_tol: f64,
    pub gamma_lip_rel: f64,
    pub mosco_stability: f64,
    pub compactness_delta: f64,
    pub compactness_fields: usize,
    pub telescope_c: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            doubling_max: None,
            comparability_max: 1.5,
            calibration_rel: 0.05,
            mollifier_stability: 2.0,
            cutoff_stability: 4.0,
            walk_dim_agreement: 0.15,
            heat_residual_max: 1.0,
            heat_exponent_tol: 0.2,
            gamma_lip_rel: 0.1,
            mosco_stability: 2.0,
            compactness_delta: 0.1,
            compactness_fields: 50,
            telescope_c: kslab::poincare::TELESCOPE_C,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub space: SpaceSpec,
    #[serde(default = "default_dw")]
    pub d_w: WalkDim,
    pub seed: Option<u64>,
    #[serde(default = "default_suite")]
    pub suite: Suite,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_dw() -> WalkDim {
    WalkDim::Fit(FitTag::Fit)
}

fn default_suite() -> Suite {
    Suite::All
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| format!("malformed config: {e}"))
    }

    /// Checks ranges that serde cannot express.
    pub fn validate(&self) -> Result<(), String> {
        if self.seed.is_none() {
            return Err("seed is mandatory (config `seed` or --seed)".into());
        }
        if let WalkDim::Value(d) = self.d_w {
            if !(d >= 2.0 && d.is_finite()) {
                return Err(format!("d_w = {d} must be a finite number >= 2"));
            }
        }
        let g = &self.grid;
        if let Some(r) = g.r_max {
            if !(r > 0.0 && r.is_finite()) {
                return Err(format!("grid.r_max = {r} must be positive"));
            }
        }
        if let Some(r) = g.ratio {
            if !(r > 0.0 && r < 1.0) {
                return Err(format!("grid.ratio = {r} must lie in (0, 1)"));
            }
        }
        if g.count.is_some_and(|c| c < 2) {
            return Err("grid.count must be at least 2".into());
        }
        if g.window.is_some_and(|w| w < 1) {
            return Err("grid.window must be at least 1".into());
        }
        if let Some(k) = g.kappa {
            if !(k >= 1.0 && k.is_finite()) {
                return Err(format!("grid.kappa = {k} must be at least 1"));
            }
        }
        let t = &self.tolerances;
        let positive = [
            ("comparability_max", t.comparability_max),
            ("calibration_rel", t.calibration_rel),
            ("mollifier_stability", t.mollifier_stability),
            ("cutoff_stability", t.cutoff_stability),
            ("walk_dim_agreement", t.walk_dim_agreement),
            ("heat_residual_max", t.heat_residual_max),
            ("heat_exponent_tol", t.heat_exponent_tol),
            ("gamma_lip_rel", t.gamma_lip_rel),
            ("mosco_stability", t.mosco_stability),
            ("compactness_delta", t.compactness_delta),
            ("telescope_c", t.telescope_c),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("tolerances.{name} = {v} must be positive"));
            }
        }
        if t.compactness_fields < 2 {
            return Err("tolerances.compactness_fields must be at least 2".into());
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("validated")
    }

    /// Builds the cloud with the configured admissibility factor.
    pub fn build_space(&self) -> Result<MeasuredPointCloud, String> {
        let c = self.space.build().map_err(|e| e.to_string())?;
        Ok(match self.grid.kappa {
            Some(k) => c.with_kappa(k),
            None => c,
        })
    }

    pub fn scale_grid(&self, cloud: &MeasuredPointCloud) -> Result<ScaleGrid, String> {
        let d = ScaleGrid::default_for(cloud);
        let g = &self.grid;
        ScaleGrid::new(
            g.r_max.unwrap_or(d.r_max),
            g.ratio.unwrap_or(d.ratio),
            g.count.unwrap_or(d.count),
            g.window.unwrap_or(d.window),
        )
        .map_err(|e| e.to_string())
    }
}
