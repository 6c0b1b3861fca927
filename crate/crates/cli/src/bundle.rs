use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{ExperimentConfig, Suite};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// The check does not apply to this space.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub suite: Suite,
    pub name: String,
    /// Statement the check probes.
    pub theorem: String,
    pub status: Status,
    pub constant: Option<f64>,
    pub details: BTreeMap<String, Value>,
    /// Attached CSV file, relative to the bundle.
    pub csv: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceInfo {
    pub spec: String,
    pub points: usize,
    pub mesh: f64,
    pub diameter: f64,
    pub kappa: f64,
}

impl SpaceInfo {
    pub fn of(spec: &kslab::SpaceSpec, cloud: &kslab::MeasuredPointCloud) -> Self {
        SpaceInfo {
            spec: spec.to_string(),
            points: cloud.len(),
            mesh: cloud.mesh(),
            diameter: cloud.diameter(),
            kappa: cloud.kappa(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkDimInfo {
    pub value: f64,
    /// `explicit`, `eigen_ratio` or `ks_scaling`.
    pub provenance: String,
    pub ks_scaling: Option<f64>,
    pub eigen_ratio: Option<f64>,
    /// Whether both estimates agree within tolerance, when both exist.
    pub agree: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub version: String,
    pub config: ExperimentConfig,
    pub space: SpaceInfo,
    pub d_w: WalkDimInfo,
    pub checks: Vec<CheckRecord>,
    pub pass: bool,
}

impl Summary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }

    pub fn read(dir: &Path) -> Result<Self, String> {
        let path = dir.join("summary.json");
        let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{} is not a summary: {e}", path.display()))
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "space {} ({} points), d_w = {:.4} [{}]",
            self.space.spec, self.space.points, self.d_w.value, self.d_w.provenance
        );
        let _ = writeln!(out, "{:<12} {:<26} {:<58} {:>12}  status", "suite", "check", "statement", "constant");
        for c in &self.checks {
            let constant = c.constant.map(|v| format!("{v:.5}")).unwrap_or_else(|| "-".into());
            let status = match c.status {
                Status::Pass => "pass",
                Status::Fail => "FAIL",
                Status::Skipped => "skipped",
            };
            let _ = writeln!(
                out,
                "{:<12} {:<26} {:<58} {:>12}  {status}",
                c.suite.to_string(),
                c.name,
                c.theorem,
                constant
            );
        }
        let _ = writeln!(out, "overall: {}", if self.pass { "pass" } else { "FAIL" });
        out
    }
}

/// Writes `summary.json` and the attachments into `dir`.
pub fn write_bundle(dir: &Path, summary: &Summary, files: &[(String, String)]) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    for (name, body) in files {
        let p = dir.join(name);
        std::fs::write(&p, body).map_err(|e| format!("cannot write {}: {e}", p.display()))?;
    }
    let p = dir.join("summary.json");
    std::fs::write(&p, summary.to_json()).map_err(|e| format!("cannot write {}: {e}", p.display()))
}
