//! Run configuration: JSON on disk, dotted-path overrides on the command line.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use spinkrylov::lattice::{Couplings, LatticeSpec};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Free-form experiment name, echoed into the summary.
    #[serde(default = "default_name")]
    pub name: String,
    /// Worker threads: 0 = one per core, 1 = deterministic serial reference.
    #[serde(default)]
    pub threads: usize,
    #[serde(default)]
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub sector: SectorConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub lanczos: LanczosConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub evolve: EvolveConfig,
    #[serde(default)]
    pub witten: WittenConfig,
    #[serde(default)]
    pub fermion: FermionConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    /// Output directory; `--out` takes precedence.
    #[serde(default = "default_out")]
    pub out: String,
}

fn default_name() -> String {
    "run".into()
}

fn default_out() -> String {
    "out".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeConfig {
    pub nx: usize,
    pub ny: usize,
    pub j_par: f64,
    pub j_perp: f64,
    pub delta_par: f64,
    pub delta_perp: f64,
    pub shells: Vec<ShellConfig>,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self {
            nx: 4,
            ny: 2,
            j_par: 1.0,
            j_perp: 1.0,
            delta_par: 0.0,
            delta_perp: 0.0,
            shells: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShellConfig {
    pub shell: usize,
    pub strength: f64,
}

impl LatticeConfig {
    pub fn couplings(&self) -> Couplings {
        let mut c = Couplings::xx(self.j_par, self.j_perp).with_anisotropy(self.delta_par, self.delta_perp);
        for s in &self.shells {
            c = c.with_shell(s.shell, s.strength);
        }
        c
    }

    pub fn build(&self) -> Result<LatticeSpec, CliError> {
        Ok(LatticeSpec::new(self.nx, self.ny, self.couplings())?)
    }

    pub fn n_sites(&self) -> usize {
        self.nx * self.ny
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SectorConfig {
    /// Number of down spins; `null` selects `S^z = 0` (or the pattern's sector).
    pub n_down: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConfig {
    /// `u`/`d` per site in site order, or `domain_wall`.
    pub pattern: String,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            pattern: "domain_wall".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    /// Averaging window `[t_min, t_max]`; `null` skips the average.
    pub window: Option<[f64; 2]>,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self {
            t0: 0.0,
            t1: 1000.0,
            dt: 1.0,
            window: Some([100.0, 1000.0]),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LanczosConfig {
    pub steps: usize,
    /// Full reorthogonalization; `false` runs the storage-free recursion.
    pub reorthogonalize: bool,
    /// Fit window; `null` entries fall back to the automatic window.
    pub fit_start: Option<usize>,
    pub fit_end: Option<usize>,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        Self {
            steps: 100,
            reorthogonalize: true,
            fit_start: None,
            fit_end: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Zero-energy threshold relative to `max |E|`.
    pub zero: f64,
    /// Level grouping threshold relative to `max |E|`.
    pub degeneracy: f64,
    /// Largest symmetry block diagonalized densely.
    pub dense_cap: usize,
    /// Local error bound of each Krylov step.
    pub krylov: f64,
    pub krylov_subspace: usize,
    /// Residual above which a scar state is reported as broken.
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            zero: spinkrylov::spectral::DEFAULT_ZERO_TOL,
            degeneracy: spinkrylov::spectral::DEFAULT_DEGENERACY_TOL,
            dense_cap: spinkrylov::operator::DEFAULT_DENSE_CAP,
            krylov: 1e-9,
            krylov_subspace: 30,
            residual: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    /// Half-system entropy of every eigenstate (needs eigenvectors).
    pub entropies: bool,
    /// Points on the thermal entropy curve.
    pub thermal_points: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            entropies: false,
            thermal_points: 41,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Spectral,
    Krylov,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    pub method: Method,
    pub entropy: bool,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            method: Method::Spectral,
            entropy: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WittenConfig {
    /// Sectors to tabulate; `null` takes every sector of the lattice.
    pub n_down: Option<Vec<usize>>,
    pub brute_force: bool,
}

impl Default for WittenConfig {
    fn default() -> Self {
        Self {
            n_down: None,
            brute_force: true,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FermionConfig {
    /// Filled columns; `null` fills the left half.
    pub columns: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Infinite-time limit from the eigenbasis expansion.
    Projection,
    /// Krylov evolution averaged over `time.window`.
    Window,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Longest-domain lengths; `null` runs `1..=nx/2`.
    pub longest: Option<Vec<usize>>,
    pub estimator: Estimator,
    pub pattern_cap: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            longest: None,
            estimator: Estimator::Projection,
            pattern_cap: 10_000,
        }
    }
}

impl RunConfig {
    /// Parse `text`, apply `key=value` overrides, then validate the schema.
    pub fn load(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut value: Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid JSON: {e}")))?;
        for item in overrides {
            apply_override(&mut value, item)?;
        }
        serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))
    }
}

/// `a.b.c=v`. The value is parsed as JSON when possible, else taken as a string.
fn apply_override(root: &mut Value, item: &str) -> Result<(), CliError> {
    let (path, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override {item:?} is not key=value")))?;
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let keys: Vec<&str> = path.split('.').collect();
    for (depth, key) in keys.iter().enumerate() {
        if key.is_empty() {
            return Err(CliError::Config(format!("override path {path:?} has an empty segment")));
        }
        let obj = match node {
            Value::Object(map) => map,
            Value::Null => {
                *node = Value::Object(Default::default());
                node.as_object_mut().unwrap()
            }
            _ => {
                return Err(CliError::Config(format!(
                    "override {path:?}: {} is not an object",
                    keys[..depth].join(".")
                )))
            }
        };
        if depth + 1 == keys.len() {
            obj.insert(key.to_string(), parsed);
            return Ok(());
        }
        node = obj.entry(key.to_string()).or_insert(Value::Null);
    }
    unreachable!("split always yields at least one segment")
}
