//! Run configuration, identity names and grid sampling.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use jetcurv::{Catalog, C64};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Every identity a run reports, in report order, with its default tolerance.
pub const IDENTITIES: &[(&str, f64)] = &[
    ("jet_certification", 1e-6),
    ("curvature_wedge_formula", 1e-8),
    ("gauge_covariance", 1e-8),
    ("frame_change", 1e-9),
    ("jet_curvature_routes", 1e-7),
    ("rank_bound", 1e-8),
    ("jet_block_structure", 1e-9),
    ("det_recursion", 1e-9),
    ("det_curvature", 1e-9),
    ("trace_formula", 1e-8),
    ("desnanot_jacobi", 1e-9),
    ("gram_quotient", 1e-9),
    ("cocycle", 1e-9),
    ("equivalence_biconditional", 1e-8),
    ("jet_descent", 1e-8),
];

pub fn default_tolerance(name: &str) -> Option<f64> {
    IDENTITIES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridShape {
    Polar,
    Cartesian,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub shape: GridShape,
    pub radius: f64,
    pub points: usize,
    /// `radius * (1 + margin)` must lie inside every model's domain.
    #[serde(default)]
    pub margin: f64,
    /// Polar only; defaults to `round(sqrt(points / 4))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rings: Option<usize>,
}

impl GridSpec {
    /// Parses `shape:radius:points[:rings]`, e.g. `polar:0.5:64`.
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || CliError::Config(format!("grid {s:?} is not shape:radius:points[:rings]"));
        if parts.len() < 3 || parts.len() > 4 {
            return Err(bad());
        }
        let shape = match parts[0] {
            "polar" => GridShape::Polar,
            "cartesian" => GridShape::Cartesian,
            _ => return Err(bad()),
        };
        let radius = parts[1].parse().map_err(|_| bad())?;
        let points = parts[2].parse().map_err(|_| bad())?;
        let rings = match parts.get(3) {
            Some(r) => Some(r.parse().map_err(|_| bad())?),
            None => None,
        };
        Ok(GridSpec {
            shape,
            radius,
            points,
            margin: 0.0,
            rings,
        })
    }
}

/// Deterministic grid. Polar: rings at `radius (j + 1) / J`, `points / J` angles each,
/// starting at angle 0. Cartesian: the `m x m` lattice on `[-radius, radius]^2` with
/// `m = ceil(sqrt(points))`, keeping points with `|z| <= radius`.
pub fn sample_grid(spec: &GridSpec) -> Result<Vec<C64>, CliError> {
    if !(spec.radius > 0.0 && spec.radius.is_finite()) {
        return Err(CliError::Config(format!(
            "grid radius must be positive (got {})",
            spec.radius
        )));
    }
    if spec.points == 0 {
        return Err(CliError::Config("grid is empty: points = 0".into()));
    }
    let pts = match spec.shape {
        GridShape::Polar => {
            let rings = spec
                .rings
                .unwrap_or_else(|| ((spec.points as f64 / 4.0).sqrt().round() as usize).max(1));
            if rings == 0 || rings > spec.points {
                return Err(CliError::Config(format!(
                    "polar grid needs 1 <= rings <= points (rings = {rings}, points = {})",
                    spec.points
                )));
            }
            let angles = spec.points / rings;
            (0..rings)
                .flat_map(|j| {
                    let r = spec.radius * (j + 1) as f64 / rings as f64;
                    (0..angles).map(move |a| C64::from_polar(r, TAU * a as f64 / angles as f64))
                })
                .collect::<Vec<_>>()
        }
        GridShape::Cartesian => {
            let m = (spec.points as f64).sqrt().ceil() as usize;
            let coord = |i: usize| {
                if m == 1 {
                    0.0
                } else {
                    -spec.radius + 2.0 * spec.radius * i as f64 / (m - 1) as f64
                }
            };
            (0..m)
                .flat_map(|i| (0..m).map(move |j| C64::new(coord(j), coord(i))))
                .filter(|z| z.norm() <= spec.radius)
                .collect()
        }
    };
    if pts.is_empty() {
        return Err(CliError::Config("grid is empty".into()));
    }
    Ok(pts)
}

/// Parses `NAME=VALUE` tolerance overrides, rejecting unknown names and negative values.
pub fn parse_overrides(overrides: &[String]) -> Result<BTreeMap<String, f64>, CliError> {
    let mut out = BTreeMap::new();
    for o in overrides {
        let (name, value) = o
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("tolerance {o:?} is not NAME=VALUE")))?;
        let v: f64 = value
            .parse()
            .map_err(|_| CliError::Config(format!("tolerance {o:?} has a bad value")))?;
        if default_tolerance(name).is_none() {
            return Err(CliError::Config(format!(
                "unknown identity {name:?} in tolerances"
            )));
        }
        if !(v >= 0.0) {
            return Err(CliError::Config(format!(
                "tolerance for {name} must be >= 0 (got {v})"
            )));
        }
        out.insert(name.to_string(), v);
    }
    Ok(out)
}

fn default_trials() -> usize {
    1000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Catalog file; relative paths resolve against the config file's directory.
    pub models: PathBuf,
    pub grid: GridSpec,
    pub jet_orders: Vec<usize>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    pub outputs: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Trials for the randomized identities.
    #[serde(default = "default_trials")]
    pub trials: usize,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        if cfg.models.is_relative() {
            cfg.models = base.join(&cfg.models);
        }
        if cfg.outputs.is_relative() {
            cfg.outputs = base.join(&cfg.outputs);
        }
        Ok(cfg)
    }

    pub fn load_catalog(&self) -> Result<Catalog, CliError> {
        let text = std::fs::read_to_string(&self.models).map_err(|e| {
            CliError::Config(format!(
                "cannot read catalog {}: {e}",
                self.models.display()
            ))
        })?;
        Catalog::from_json(&text).map_err(|e| CliError::Config(format!("catalog: {e}")))
    }

    /// Applies `NAME=VALUE` overrides.
    pub fn override_tolerances(&mut self, overrides: &[String]) -> Result<(), CliError> {
        self.tolerances.extend(parse_overrides(overrides)?);
        Ok(())
    }

    pub fn tolerance(&self, name: &str) -> f64 {
        self.tolerances
            .get(name)
            .copied()
            .or_else(|| default_tolerance(name))
            .expect("known identity")
    }

    pub fn validate(&self, catalog: &Catalog) -> Result<(), CliError> {
        if self.jet_orders.is_empty() {
            return Err(CliError::Config("jet_orders is empty".into()));
        }
        for (name, v) in &self.tolerances {
            if default_tolerance(name).is_none() {
                return Err(CliError::Config(format!(
                    "unknown identity {name:?} in tolerances"
                )));
            }
            if !(*v >= 0.0) {
                return Err(CliError::Config(format!(
                    "tolerance for {name} must be >= 0 (got {v})"
                )));
            }
        }
        if !(self.grid.margin >= 0.0) {
            return Err(CliError::Config(format!(
                "grid margin must be >= 0 (got {})",
                self.grid.margin
            )));
        }
        if catalog.models.is_empty() {
            return Err(CliError::Config("catalog has no models".into()));
        }
        let reach = self.grid.radius * (1.0 + self.grid.margin);
        for e in &catalog.models {
            let r = e.model.domain_radius();
            if !(reach < r) {
                return Err(CliError::Config(format!(
                    "model {}: grid radius {} with margin {} reaches {reach}, outside the domain radius {r}",
                    e.id, self.grid.radius, self.grid.margin
                )));
            }
        }
        Ok(())
    }
}
