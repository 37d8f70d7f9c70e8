//! Run configuration read from TOML. Every block is optional; missing keys
//! take the default machine and optimizer settings.

use std::path::{Path, PathBuf};

use rotopt::materials::MaterialParams;
use rotopt::{ConstraintWeights, MachineGeometry, MtpaOptions, OptimizerOptions, ThermalParams, VShapeLayout};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Syntax { path: PathBuf, message: String },
    #[error("{key}: {message}")]
    Invalid { key: String, message: String },
}

fn invalid(key: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        message: message.into(),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Machine dimensions; `rotation_steps` is the number of time steps `N`
    /// per sixth of an electrical period.
    pub geometry: MachineGeometry,
    pub mesh: MeshConfig,
    /// Initial V-shaped magnet layout.
    pub layout: VShapeLayout,
    pub materials: MaterialsConfig,
    pub thermal: ThermalParams,
    pub winding: WindingConfig,
    pub cycle: CycleConfig,
    pub mtpa: MtpaOptions,
    pub optimizer: OptimizerConfig,
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    /// Target edge length in the rotor and stator, m.
    pub edge_length: f64,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self { edge_length: 2.2e-3 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialsConfig {
    /// Two-column `H B` table for the iron; the fitted Brauer curve otherwise.
    pub bh_table: Option<PathBuf>,
    pub constants: MaterialParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindingConfig {
    pub turns_per_slot: f64,
    pub fill_factor: f64,
    /// Phase resistance for the Joule losses, Ω.
    pub resistance: f64,
}

impl Default for WindingConfig {
    fn default() -> Self {
        Self {
            turns_per_slot: 60.0,
            fill_factor: 0.6,
            resistance: 3.2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CycleConfig {
    /// Trace CSV with header `time_s,speed_rpm,torque_Nm`; the bundled
    /// scaled WLTP class 3 trace when absent.
    pub trace: Option<PathBuf>,
    /// Cells along speed and torque.
    pub grid: [usize; 2],
}

impl Default for CycleConfig {
    fn default() -> Self {
        Self { trace: None, grid: [6, 5] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub temperature_weight: f64,
    pub stress_weight: f64,
    /// °C.
    pub max_temperature: f64,
    /// Pa.
    pub max_stress: f64,
    pub exponent: u32,
    pub max_iterations: usize,
    pub max_step: f64,
    pub min_step: f64,
    /// Speed of the stress analysis; the highest cycle speed when absent.
    pub stress_speed_rpm: Option<f64>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let w = ConstraintWeights::default();
        let o = OptimizerOptions::default();
        Self {
            temperature_weight: w.temperature,
            stress_weight: w.stress,
            max_temperature: w.max_temperature,
            max_stress: w.max_stress,
            exponent: w.exponent,
            max_iterations: o.max_iterations,
            max_step: o.max_step,
            min_step: o.min_step,
            stress_speed_rpm: None,
        }
    }
}

impl OptimizerConfig {
    pub fn weights(&self) -> ConstraintWeights {
        ConstraintWeights {
            temperature: self.temperature_weight,
            stress: self.stress_weight,
            max_temperature: self.max_temperature,
            max_stress: self.max_stress,
            exponent: self.exponent,
        }
    }

    pub fn options(&self) -> OptimizerOptions {
        OptimizerOptions {
            max_iterations: self.max_iterations,
            max_step: self.max_step,
            min_step: self.min_step,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Design snapshot every this many iterations; 0 writes only the
    /// initial and final designs.
    pub snapshot_stride: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            snapshot_stride: 10,
        }
    }
}

/// Reads and validates `path`. Relative file references are resolved
/// against the directory of the config file.
pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_str(&text, base).map_err(|e| match e {
        ConfigError::Syntax { message, .. } => ConfigError::Syntax {
            path: path.to_path_buf(),
            message,
        },
        e => e,
    })
}

pub fn parse_str(text: &str, base: &Path) -> Result<RunConfig, ConfigError> {
    let mut cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Syntax {
        path: PathBuf::from("<config>"),
        message: e.to_string(),
    })?;
    for p in [&mut cfg.materials.bh_table, &mut cfg.cycle.trace].into_iter().flatten() {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    if cfg.output.dir.is_relative() && !base.as_os_str().is_empty() {
        cfg.output.dir = base.join(&cfg.output.dir);
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Checks every float of a serialized block with `ok`.
fn check_floats<T: Serialize>(block: &str, value: &T, what: &str, ok: impl Fn(f64) -> bool) -> Result<(), ConfigError> {
    let table = toml::Table::try_from(value).map_err(|e| invalid(block, e.to_string()))?;
    for (k, v) in &table {
        let x = match v {
            toml::Value::Float(x) => *x,
            toml::Value::Integer(i) => *i as f64,
            _ => continue,
        };
        if !ok(x) {
            return Err(invalid(format!("{block}.{k}"), format!("{x} must be {what}")));
        }
    }
    Ok(())
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        let non_negative = |x: f64| x >= 0.0 && x.is_finite();
        check_floats("geometry", &self.geometry, "positive", positive)?;
        self.geometry.validate().map_err(|e| invalid("geometry", e.to_string()))?;
        check_floats("mesh", &self.mesh, "positive", positive)?;
        check_floats("layout", &self.layout, "non-negative", non_negative)?;
        check_floats("materials.constants", &self.materials.constants, "non-negative", non_negative)?;
        self.materials
            .constants
            .build(None)
            .map_err(|e| invalid("materials.constants", e.to_string()))?;
        check_floats("thermal", &self.thermal, "finite", f64::is_finite)?;
        if !(self.thermal.shaft_transfer >= 0.0 && self.thermal.rim_transfer >= 0.0) {
            return Err(invalid("thermal", "transfer coefficients must be non-negative"));
        }
        check_floats("winding", &self.winding, "non-negative", non_negative)?;
        for (k, v) in [("turns_per_slot", self.winding.turns_per_slot), ("fill_factor", self.winding.fill_factor)] {
            if !positive(v) {
                return Err(invalid(format!("winding.{k}"), format!("{v} must be positive")));
            }
        }
        if self.cycle.grid.contains(&0) {
            return Err(invalid("cycle.grid", "needs at least one cell per axis"));
        }
        if !positive(self.mtpa.rated_current) {
            return Err(invalid("mtpa.rated_current", "must be positive"));
        }
        if self.mtpa.samples == 0 {
            return Err(invalid("mtpa.samples", "must be positive"));
        }
        if !(self.mtpa.min_fraction > 0.0 && self.mtpa.min_fraction <= self.mtpa.max_fraction) {
            return Err(invalid("mtpa.min_fraction", "must lie in (0, max_fraction]"));
        }
        let o = &self.optimizer;
        self.optimizer.weights().validate().map_err(|e| invalid("optimizer", e.to_string()))?;
        if !(o.min_step > 0.0 && o.min_step <= o.max_step) {
            return Err(invalid("optimizer.min_step", "must lie in (0, max_step]"));
        }
        if let Some(s) = o.stress_speed_rpm {
            if !non_negative(s) {
                return Err(invalid("optimizer.stress_speed_rpm", "must be non-negative"));
            }
        }
        for (key, p) in [("materials.bh_table", &self.materials.bh_table), ("cycle.trace", &self.cycle.trace)] {
            if let Some(p) = p {
                if !p.is_file() {
                    return Err(invalid(key, format!("file {} does not exist", p.display())));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        parse_str(text, Path::new(""))
    }

    #[test]
    fn empty_file_gives_defaults() {
        let c = parse("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.geometry.slot_count, 48);
        assert_eq!(c.geometry.axial_length, 90e-3);
        assert_eq!(c.optimizer.temperature_weight, 1e7);
        assert_eq!(c.optimizer.stress_weight, 1e10);
    }

    #[test]
    fn negative_axial_length_names_the_key() {
        let e = parse("[geometry]\naxial_length = -0.09\n").unwrap_err();
        assert!(e.to_string().starts_with("geometry.axial_length:"), "{e}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = parse("[optimizer]\nmax_iters = 3\n").unwrap_err();
        assert!(e.to_string().contains("max_iters"), "{e}");
        assert!(parse("colour = 1\n").is_err());
    }

    #[test]
    fn missing_files_are_reported() {
        let e = parse("[cycle]\ntrace = \"no/such/trace.csv\"\n").unwrap_err();
        assert!(e.to_string().starts_with("cycle.trace:"), "{e}");
        let e = parse("[materials]\nbh_table = \"no/such/bh.txt\"\n").unwrap_err();
        assert!(e.to_string().starts_with("materials.bh_table:"), "{e}");
    }

    #[test]
    fn out_of_range_values() {
        assert!(parse("[optimizer]\nexponent = 3\n").is_err());
        assert!(parse("[cycle]\ngrid = [0, 5]\n").is_err());
        assert!(parse("[optimizer]\nmin_step = 1.0\nmax_step = 0.5\n").is_err());
        assert!(parse("[mesh]\nedge_length = 0.0\n").unwrap_err().to_string().starts_with("mesh.edge_length"));
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let dir = std::env::temp_dir().join(format!("rotopt-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("bh.txt"), "0 0\n100 0.5\n1000 1.4\n").unwrap();
        let path = dir.join("run.toml");
        std::fs::write(&path, "[materials]\nbh_table = \"bh.txt\"\n[output]\ndir = \"res\"\n").unwrap();
        let c = parse_config(&path).unwrap();
        assert_eq!(c.materials.bh_table.as_deref(), Some(dir.join("bh.txt").as_path()));
        assert_eq!(c.output.dir, dir.join("res"));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn serialized_config_round_trips() {
        let mut c = RunConfig::default();
        c.cycle.grid = [2, 3];
        c.optimizer.max_temperature = 42.0;
        let text = toml::to_string(&c).unwrap();
        assert_eq!(parse(&text).unwrap(), c);
    }

    #[test]
    fn bundled_configs_parse() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
        let desk = parse_config(&dir.join("desk.toml")).unwrap();
        assert_eq!(desk.cycle.grid, [2, 3]);
        assert_eq!(desk.optimizer.max_temperature, 42.0);
        let full = parse_config(&dir.join("full.toml")).unwrap();
        assert_eq!(RunConfig { output: OutputConfig::default(), ..full }, RunConfig::default());
    }
}
