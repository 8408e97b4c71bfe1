//! Run configuration: one TOML file with a full default set.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circle::MetricConfig;
use crate::distortion::{BfsParams, DemoParams};
use crate::error::{Error, Result};
use crate::generators::{EncodeParams, LAMBDA_MAX};
use crate::perfect::DecomposeParams;
use crate::flows::{build_ht, CommutatorFamily, FlowFamily};
use crate::rotation::{pick_t0, rotation_number, LinearizeParams, Method, ScanConfig, SolveParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub output_dir: PathBuf,
    pub generators: GeneratorConfig,
    pub metric: MetricSection,
    pub rotation: RotationConfig,
    pub decompose: DecomposeConfig,
    pub demo: DemoConfig,
    pub bfs: BfsConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    /// Rotation angle of `F3`.
    pub alpha: f64,
    /// Slope of `F1` at its repelling fixed point.
    pub lambda: f64,
    /// Gadget slots built by `gen`.
    pub n_max: usize,
    /// Cap on every exponent search.
    pub search_cap: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricSection {
    pub grid_size: usize,
    /// Highest derivative order `R` in the C^R distance.
    pub order: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RotationConfig {
    /// Orbit length for rotation numbers and linearization.
    pub iterates: usize,
    pub newton_steps: usize,
    pub fourier_modes: usize,
    pub knots: usize,
    pub method: Method,
    /// The family parameter is scanned on `(0, t0_scan_max]`.
    pub t0_scan_max: f64,
    pub t0_scan_points: usize,
    pub target_quality: u64,
    /// Fixes `t0` and skips the scan.
    pub t0: Option<f64>,
    pub bracket_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecomposeConfig {
    /// Allowed support enlargement `δ`.
    pub support_margin: f64,
    /// Bound on the C^1 size of encoded maps; absent means unchecked.
    pub c1_bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemoConfig {
    pub beta: f64,
    pub count: usize,
    pub max_closeness: f64,
    pub row_tol: f64,
    pub verify_grid: usize,
    /// Report lengths with `f` appended to the generators as well.
    pub append_f: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BfsConfig {
    pub max_radius: usize,
    pub max_nodes: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            output_dir: PathBuf::from("out"),
            generators: GeneratorConfig::default(),
            metric: MetricSection::default(),
            rotation: RotationConfig::default(),
            decompose: DecomposeConfig::default(),
            demo: DemoConfig::default(),
            bfs: BfsConfig::default(),
        }
    }
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig { alpha: crate::generators::golden_mean(), lambda: 1.125, n_max: 20, search_cap: 1_000_000 }
    }
}

impl Default for MetricSection {
    fn default() -> Self {
        let m = MetricConfig::default();
        MetricSection { grid_size: m.grid_size, order: m.max_order }
    }
}

impl Default for RotationConfig {
    fn default() -> Self {
        let l = LinearizeParams::default();
        let s = ScanConfig::default();
        RotationConfig {
            iterates: l.budget,
            newton_steps: l.max_iter,
            fourier_modes: l.modes,
            knots: l.knots,
            method: l.method,
            t0_scan_max: s.t_max,
            t0_scan_points: s.points,
            target_quality: s.target_quality,
            t0: None,
            bracket_max: SolveParams::default().bracket_max,
        }
    }
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        DecomposeConfig { support_margin: DecomposeParams::default().support_margin, c1_bound: None }
    }
}

impl Default for DemoConfig {
    fn default() -> Self {
        let d = DemoParams::default();
        DemoConfig {
            beta: d.beta,
            count: d.count,
            max_closeness: d.max_closeness,
            row_tol: d.row_tol,
            verify_grid: d.verify_grid,
            append_f: d.append_f,
        }
    }
}

impl Default for BfsConfig {
    fn default() -> Self {
        let b = BfsParams::default();
        BfsConfig { max_radius: b.max_radius, max_nodes: b.max_nodes }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Config::from_toml(&text).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML form,
    /// leaving out the output directory.
    pub fn hash(&self) -> Result<String> {
        let canonical = Config { output_dir: PathBuf::new(), ..self.clone() };
        let digest = Sha256::digest(canonical.to_toml()?.as_bytes());
        Ok(hex::encode(&digest[..8]))
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.generators;
        if !(g.lambda > 1.0 && g.lambda <= LAMBDA_MAX) {
            return Err(Error::Domain(format!("lambda {} outside (1, {LAMBDA_MAX}]", g.lambda)));
        }
        if !(g.alpha > 0.0 && g.alpha < 1.0) {
            return Err(Error::Domain(format!("alpha {} outside (0, 1)", g.alpha)));
        }
        let caps = [
            ("generators.n_max", g.n_max as u64),
            ("generators.search_cap", g.search_cap),
            ("metric.grid_size", self.metric.grid_size as u64),
            ("rotation.iterates", self.rotation.iterates as u64),
            ("rotation.newton_steps", self.rotation.newton_steps as u64),
            ("rotation.fourier_modes", self.rotation.fourier_modes as u64),
            ("rotation.knots", self.rotation.knots as u64),
            ("rotation.t0_scan_points", self.rotation.t0_scan_points as u64),
            ("demo.verify_grid", self.demo.verify_grid as u64),
            ("bfs.max_nodes", self.bfs.max_nodes as u64),
        ];
        if let Some((name, _)) = caps.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Domain(format!("{name} must be positive")));
        }
        let positive = [
            ("rotation.t0_scan_max", self.rotation.t0_scan_max),
            ("rotation.bracket_max", self.rotation.bracket_max),
            ("decompose.support_margin", self.decompose.support_margin),
            ("demo.max_closeness", self.demo.max_closeness),
            ("demo.row_tol", self.demo.row_tol),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(Error::Domain(format!("{name} = {v} must be positive")));
        }
        if self.bfs.max_radius > 6 {
            return Err(Error::Domain(format!("bfs.max_radius {} exceeds 6", self.bfs.max_radius)));
        }
        Ok(())
    }

    pub fn metric_config(&self) -> MetricConfig {
        MetricConfig::with_order(self.metric.order, self.metric.grid_size)
    }

    pub fn linearize_params(&self) -> LinearizeParams {
        let r = &self.rotation;
        LinearizeParams {
            budget: r.iterates,
            max_iter: r.newton_steps,
            modes: r.fourier_modes,
            knots: r.knots,
            method: r.method,
            quality_cap: r.target_quality,
            ..LinearizeParams::default()
        }
    }

    pub fn scan_config(&self) -> ScanConfig {
        let r = &self.rotation;
        ScanConfig {
            t_max: r.t0_scan_max,
            points: r.t0_scan_points,
            budget: r.iterates,
            target_quality: r.target_quality,
            ..ScanConfig::default()
        }
    }

    pub fn solve_params(&self) -> SolveParams {
        let d = SolveParams::default();
        SolveParams {
            budget: self.rotation.iterates,
            bracket_max: self.rotation.bracket_max,
            linearize: LinearizeParams {
                max_offset: d.linearize.max_offset,
                residual_tol: d.linearize.residual_tol,
                ..self.linearize_params()
            },
            ..d
        }
    }

    pub fn decompose_params(&self) -> DecomposeParams {
        DecomposeParams { support_margin: self.decompose.support_margin, ..DecomposeParams::default() }
    }

    pub fn encode_params(&self) -> EncodeParams {
        EncodeParams { c1_bound: self.decompose.c1_bound.unwrap_or(f64::INFINITY), ..EncodeParams::default() }
    }

    pub fn demo_params(&self) -> DemoParams {
        let d = &self.demo;
        DemoParams {
            beta: d.beta,
            count: d.count,
            max_closeness: d.max_closeness,
            row_tol: d.row_tol,
            verify_grid: d.verify_grid,
            append_f: d.append_f,
            search_cap: self.generators.search_cap,
            decompose: self.decompose_params(),
            encode: self.encode_params(),
            metric: self.metric_config(),
            ..DemoParams::default()
        }
    }

    /// The family with `t0` from the file, or picked by the scan.
    pub fn family(&self) -> Result<FlowFamily> {
        match self.rotation.t0 {
            Some(t0) => {
                let rho0 = rotation_number(&build_ht(t0), self.rotation.iterates)?.value;
                Ok(FlowFamily { t0, rho0 })
            }
            None => {
                let p = pick_t0(&CommutatorFamily, &self.scan_config())?;
                Ok(FlowFamily { t0: p.t0, rho0: p.rho0 })
            }
        }
    }

    pub fn bfs_params(&self) -> BfsParams {
        BfsParams { max_radius: self.bfs.max_radius, max_nodes: self.bfs.max_nodes }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut cfg = Config::default();
        cfg.rotation.t0 = Some(0.123456789012345);
        cfg.decompose.c1_bound = Some(0.1);
        let back = Config::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash().unwrap(), cfg.hash().unwrap());
    }

    #[test]
    fn partial_file_uses_defaults() {
        let cfg = Config::from_toml("[generators]\nlambda = 1.2\n").unwrap();
        assert_eq!(cfg.generators.lambda, 1.2);
        assert_eq!(cfg.metric, MetricSection::default());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(Config::from_toml("[generators]\nlambda = 1.3\n").is_err());
        assert!(Config::from_toml("[bfs]\nmax_radius = 7\n").is_err());
        assert!(Config::from_toml("[demo]\nunknown = 1\n").is_err());
    }
}
