use std::path::{Path, PathBuf};

use clap::ValueEnum;
use repulse_core::highdim::OdeCase;
use repulse_core::modified_propagator::PhaseShiftVariant;
use repulse_core::potentials::{PotentialSpec, Table};
use repulse_core::transforms::GridSpec;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Wavefun,
    Spectrum,
    Evolve,
    Waveop,
    Variants,
    Equiv,
    Dispersion,
    Odecheck,
    Bridge3d,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Wavefun => "wavefun",
            Experiment::Spectrum => "spectrum",
            Experiment::Evolve => "evolve",
            Experiment::Waveop => "waveop",
            Experiment::Variants => "variants",
            Experiment::Equiv => "equiv",
            Experiment::Dispersion => "dispersion",
            Experiment::Odecheck => "odecheck",
            Experiment::Bridge3d => "bridge3d",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    /// `zero`, `inverse_power`, `smoothed_inverse_power` or `tabulated`.
    pub kind: String,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub shift: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    /// Adds `mu/x²`.
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default)]
    pub path: Option<PathBuf>,
    /// Decay rate assumed past the last tabulated point.
    #[serde(default)]
    pub tail_beta: Option<f64>,
    /// Replace the potential on `[0, 1]` by its tangent line at 1.
    #[serde(default)]
    pub truncate: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub length: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { length: 512.0, n: 4095 }
    }
}

/// Initial data `w = sin(k0 x) exp(-(x - x0)²/2σ²)`, moving in `direction`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub k0: f64,
    pub sigma: f64,
    pub x0: f64,
    /// `standing`, `inward` or `outward`.
    pub direction: String,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self { k0: 2.25, sigma: 3.0, x0: 0.0, direction: "standing".into() }
    }
}

impl DataConfig {
    pub fn support(&self) -> f64 {
        self.x0 + 8.0 * self.sigma
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub jost: f64,
    pub energy_drift: f64,
    pub far_equal: f64,
    pub bridge: f64,
    pub cfl: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { jost: 1e-10, energy_drift: 1e-2, far_equal: 1e-3, bridge: 1e-6, cfl: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WavefunConfig {
    pub ks: Vec<f64>,
    pub x_max: f64,
    pub dx: f64,
}

impl Default for WavefunConfig {
    fn default() -> Self {
        Self { ks: vec![0.5, 1.0, 2.0], x_max: 100.0, dx: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub nk: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { nk: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveConfig {
    pub report_every: u64,
    pub snapshots: bool,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self { report_every: 100, snapshots: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquivConfig {
    /// Second potential; defaults to the first truncated to type I.
    pub other: Option<PotentialConfig>,
    pub r: f64,
}

impl Default for EquivConfig {
    fn default() -> Self {
        Self { other: None, r: 2.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DispersionConfig {
    pub d: u32,
    pub nu: u32,
    pub flatness: f64,
    pub tilt: f64,
    pub x0: f64,
    pub cutoff: f64,
    pub nk: usize,
    pub constants: Option<(f64, f64)>,
}

impl Default for DispersionConfig {
    fn default() -> Self {
        Self { d: 3, nu: 0, flatness: 0.02, tilt: 2.0, x0: 15.0, cutoff: 600.0, nk: 3000, constants: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OdeConfig {
    pub xi: Vec<f64>,
    pub case: String,
    pub t0: f64,
    pub t1: f64,
}

impl Default for OdeConfig {
    fn default() -> Self {
        Self { xi: vec![1.0, 2.0], case: "b".into(), t0: 10.0, t1: 1e6 }
    }
}

/// Profile `w(r) = r² exp(-(r - center)²/width²)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BridgeConfig {
    pub center: f64,
    pub width: f64,
    pub support: f64,
    pub xi_max: f64,
}

impl Default for BridgeConfig {
    fn default() -> Self {
        Self { center: 4.0, width: 1.0, support: 12.0, xi_max: 6.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: Option<Experiment>,
    pub potential: PotentialConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default = "default_band")]
    pub band: (f64, f64),
    #[serde(default)]
    pub t_list: Vec<f64>,
    #[serde(default = "default_variant")]
    pub variant: String,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub wavefun: WavefunConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub evolve: EvolveConfig,
    #[serde(default)]
    pub equiv: EquivConfig,
    #[serde(default)]
    pub dispersion: DispersionConfig,
    #[serde(default)]
    pub ode: OdeConfig,
    #[serde(default)]
    pub bridge: BridgeConfig,
}

fn default_band() -> (f64, f64) {
    (0.5, 4.0)
}

fn default_variant() -> String {
    "full".into()
}

#[derive(Debug)]
pub struct ConfigInvalid(pub String);

impl std::fmt::Display for ConfigInvalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid config: {}", self.0)
    }
}

fn invalid(msg: impl Into<String>) -> ConfigInvalid {
    ConfigInvalid(msg.into())
}

/// Parses `v` as a TOML value, falling back to a bare string.
fn parse_value(v: &str) -> toml::Value {
    match format!("v = {v}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(v.into())),
        Err(_) => toml::Value::String(v.into()),
    }
}

/// Applies `a.b.c=value` to the raw table.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), ConfigInvalid> {
    let (key, value) = assignment.split_once('=').ok_or_else(|| invalid(format!("--set {assignment}: expected key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(invalid(format!("--set {assignment}: empty key segment")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| invalid(format!("--set {assignment}: {p} is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), parse_value(value.trim()));
    Ok(())
}

pub fn load(path: &Path, overrides: &[String]) -> Result<ExperimentConfig, ConfigInvalid> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let mut table: toml::Table = text.parse().map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let mut cfg: ExperimentConfig =
        toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| invalid(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    for p in [Some(&mut cfg.potential), cfg.equiv.other.as_mut()].into_iter().flatten() {
        if let Some(rel) = &p.path {
            if rel.is_relative() {
                p.path = Some(base.join(rel));
            }
        }
    }
    Ok(cfg)
}

impl PotentialConfig {
    pub fn build(&self) -> Result<PotentialSpec, ConfigInvalid> {
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| invalid(format!("potential kind {} needs {name}", self.kind)));
        let base = match self.kind.as_str() {
            "zero" => PotentialSpec::zero(),
            "inverse_power" => {
                let beta = need(self.beta, "beta")?;
                match self.shift {
                    Some(s) if s > 0.0 => PotentialSpec::shifted_inverse_power(beta, s),
                    Some(s) if s < 0.0 => return Err(invalid(format!("shift must be nonnegative, got {s}"))),
                    _ => PotentialSpec::inverse_power(beta),
                }
            }
            "smoothed_inverse_power" => PotentialSpec::smoothed_inverse_power(need(self.beta, "beta")?, need(self.delta, "delta")?),
            "tabulated" => {
                let path = self.path.as_ref().ok_or_else(|| invalid("tabulated potential needs path"))?;
                let tail = need(self.tail_beta, "tail_beta")?;
                let table = Table::from_csv(path, tail).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
                PotentialSpec::tabulated(table)
            }
            other => return Err(invalid(format!("unknown potential kind {other}"))),
        };
        let spec = if self.truncate { repulse_core::truncate_to_type1(&base) } else { base };
        Ok(match self.mu {
            Some(mu) if mu != 0.0 => PotentialSpec::inverse_square_plus(mu, spec),
            _ => spec,
        })
    }
}

impl ExperimentConfig {
    pub fn variant(&self) -> Result<PhaseShiftVariant, ConfigInvalid> {
        self.variant.parse().map_err(|e| invalid(format!("{e}")))
    }

    pub fn ode_case(&self) -> Result<OdeCase, ConfigInvalid> {
        self.ode.case.parse().map_err(|e| invalid(format!("{e}")))
    }

    pub fn grid_spec(&self) -> Result<GridSpec<f64>, ConfigInvalid> {
        GridSpec::new(self.grid.length, self.grid.n).map_err(|e| invalid(format!("{e}")))
    }

    fn t_max(&self) -> f64 {
        self.t_list.iter().cloned().fold(0.0, f64::max)
    }

    /// Checks everything that does not need a module call.
    pub fn validate(&self, exp: Experiment) -> Result<(), ConfigInvalid> {
        if let Some(e) = self.experiment {
            if e != exp {
                return Err(invalid(format!("config declares experiment {} but {} was requested", e.name(), exp.name())));
            }
        }
        self.grid_spec()?;
        self.variant()?;
        let (a, b) = self.band;
        if !(a > 0.0 && b > a) {
            return Err(invalid(format!("band [{a}, {b}] must satisfy 0 < a < b")));
        }
        if self.t_list.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(invalid("t_list entries must be finite and nonnegative"));
        }
        if self.t_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("t_list must be strictly increasing"));
        }
        for p in [Some(&self.potential), self.equiv.other.as_ref()].into_iter().flatten() {
            if let Some(path) = &p.path {
                if !path.exists() {
                    return Err(invalid(format!("file {} does not exist", path.display())));
                }
            }
            p.build()?;
        }
        if !matches!(self.data.direction.as_str(), "standing" | "inward" | "outward") {
            return Err(invalid(format!("unknown data direction {}", self.data.direction)));
        }
        if !(self.data.sigma > 0.0) {
            return Err(invalid("data.sigma must be positive"));
        }
        let needs_t = matches!(exp, Experiment::Evolve | Experiment::Waveop | Experiment::Variants | Experiment::Equiv | Experiment::Dispersion);
        if needs_t && self.t_list.is_empty() {
            return Err(invalid(format!("{} needs a nonempty t_list", exp.name())));
        }
        let support = match exp {
            Experiment::Evolve | Experiment::Waveop | Experiment::Equiv => Some(self.data.support()),
            Experiment::Dispersion => Some(self.dispersion.x0),
            _ => None,
        };
        if let Some(s) = support {
            let need = self.t_max() + s + 10.0;
            if self.grid.length < need {
                return Err(invalid(format!("grid length {} below max(t_list) + data support + 10 = {need}", self.grid.length)));
            }
        }
        if exp == Experiment::Odecheck {
            self.ode_case()?;
            if !(self.ode.t0 > 0.0 && self.ode.t1 > self.ode.t0) {
                return Err(invalid("ode needs 0 < t0 < t1"));
            }
        }
        if exp == Experiment::Wavefun && !(self.wavefun.dx > 0.0 && self.wavefun.x_max > 0.0) {
            return Err(invalid("wavefun needs positive dx and x_max"));
        }
        if exp == Experiment::Spectrum && self.spectrum.nk == 0 {
            return Err(invalid("spectrum.nk must be positive"));
        }
        Ok(())
    }
}
