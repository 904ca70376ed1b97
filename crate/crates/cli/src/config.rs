//! JSON run configuration. Every section is optional; missing keys take the
//! defaults below, which use the 2021 preset.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use harvest_core::{
    density_weights, DensityKind, FitRanges, GrowthSpec, HeterogeneityDensity, Model, Mortality, Mu, ObjectiveSpec,
    ParamRange, PiecewiseLinear, QuadratureGrid, SolveGrid, TerminalUtility,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub growth: GrowthConfig,
    pub density: DensityConfig,
    pub quad_points: usize,
    pub objective: ObjectiveConfig,
    pub grid: GridConfig,
    pub paths: PathsConfig,
    pub distort: DistortConfig,
    pub fit: FitConfig,
    /// Run even when the time step exceeds the CFL bound.
    pub override_cfl: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            growth: GrowthConfig::default(),
            density: DensityConfig::Uniform,
            quad_points: QuadratureGrid::DEFAULT_POINTS,
            objective: ObjectiveConfig::default(),
            grid: GridConfig::default(),
            paths: PathsConfig::default(),
            distort: DistortConfig::default(),
            fit: FitConfig::default(),
            override_cfl: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "2021")]
    Year2021,
    #[serde(rename = "2022")]
    Year2022,
}

impl Preset {
    pub fn growth(self) -> GrowthSpec {
        match self {
            Preset::Year2021 => GrowthSpec::year_2021(),
            Preset::Year2022 => GrowthSpec::year_2022(),
        }
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "2021" => Ok(Preset::Year2021),
            "2022" => Ok(Preset::Year2022),
            _ => Err(format!("unknown preset {s:?} (expected 2021 or 2022)")),
        }
    }
}

/// A year preset with optional per-parameter overrides, or a fully explicit model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrowthConfig {
    pub preset: Option<Preset>,
    pub x: Option<f64>,
    pub r: Option<f64>,
    /// Upper growth rate when the rate is heterogeneous too.
    pub r_hi: Option<f64>,
    pub k_lo: Option<f64>,
    pub k_hi: Option<f64>,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        Self {
            preset: Some(Preset::Year2021),
            x: None,
            r: None,
            r_hi: None,
            k_lo: None,
            k_hi: None,
        }
    }
}

impl GrowthConfig {
    /// Unvalidated parameters; [`GrowthSpec::validate`] reports problems.
    pub fn spec(&self) -> Result<GrowthSpec> {
        let base = self.preset.map(Preset::growth);
        let pick = |v: Option<f64>, from: Option<f64>, name: &str| {
            v.or(from)
                .ok_or_else(|| CliError::Config(format!("growth.{name} is required without a preset")))
        };
        let r = pick(self.r, base.map(|b| b.r_lo), "r")?;
        Ok(GrowthSpec {
            x: pick(self.x, base.map(|b| b.x), "x")?,
            r_lo: r,
            r_hi: self
                .r_hi
                .or(base.filter(|_| self.r.is_none()).map(|b| b.r_hi))
                .unwrap_or(r),
            k_lo: pick(self.k_lo, base.map(|b| b.k_lo), "k_lo")?,
            k_hi: pick(self.k_hi, base.map(|b| b.k_hi), "k_hi")?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityConfig {
    Uniform,
    Beta { a: f64, b: f64 },
}

impl DensityConfig {
    pub fn kind(self) -> DensityKind {
        match self {
            DensityConfig::Uniform => DensityKind::Uniform,
            DensityConfig::Beta { a, b } => DensityKind::Beta { a, b },
        }
    }
}

/// `μ` as a positive number or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MuRepr", into = "MuRepr")]
pub struct MuSetting(pub Mu);

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum MuRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<MuRepr> for MuSetting {
    type Error = String;

    fn try_from(r: MuRepr) -> std::result::Result<Self, String> {
        let text = match r {
            MuRepr::Number(v) => v.to_string(),
            MuRepr::Text(s) => s,
        };
        text.parse()
            .map(MuSetting)
            .map_err(|e: harvest_core::Error| e.to_string())
    }
}

impl From<MuSetting> for MuRepr {
    fn from(m: MuSetting) -> Self {
        match m.0 {
            Mu::Finite(v) => MuRepr::Number(v),
            Mu::Infinite => MuRepr::Text("inf".into()),
        }
    }
}

impl FromStr for MuSetting {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.parse().map(MuSetting).map_err(|e: harvest_core::Error| e.to_string())
    }
}

impl fmt::Display for MuSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TerminalConfig {
    Zero,
    CappedLinear { eta: f64, cap: f64 },
    Piecewise { knots: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MortalityConfig {
    Constant { rate: f64 },
    Piecewise { knots: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectiveConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub mu: MuSetting,
    pub c_bar: Option<f64>,
    pub terminal: TerminalConfig,
    pub mortality: MortalityConfig,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        let o = ObjectiveSpec::baseline();
        Self {
            alpha: o.alpha,
            gamma: o.gamma,
            mu: MuSetting(o.mu),
            c_bar: None,
            terminal: TerminalConfig::Zero,
            mortality: MortalityConfig::Constant { rate: 0.01 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub t0: f64,
    pub t1: f64,
    pub pop_max: f64,
    pub pop_steps: usize,
    /// Explicit `I`; when absent, `I` follows from `cfl_fraction`.
    pub time_steps: Option<usize>,
    pub cfl_fraction: f64,
    /// Export every k-th time level / population node. The last level is
    /// always included. The default time stride keeps a CFL-derived 2021 run
    /// near 70k rows instead of 7M.
    pub export_stride_time: usize,
    pub export_stride_pop: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            t0: 61.0,
            t1: 181.0,
            pop_max: 10.0,
            pop_steps: 200,
            time_steps: None,
            cfl_fraction: 0.9,
            export_stride_time: 100,
            export_stride_pop: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Terminal populations of backward paths.
    pub terminal_values: Vec<f64>,
    /// Initial populations of forward paths.
    pub initial_values: Vec<f64>,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            terminal_values: vec![0.5, 1.0, 2.0, 4.0],
            initial_values: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistortConfig {
    pub t: f64,
    pub n: f64,
    pub mu: Vec<MuSetting>,
}

impl Default for DistortConfig {
    fn default() -> Self {
        Self {
            t: 61.0,
            n: 5.0,
            mu: vec![
                MuSetting(Mu::Finite(0.01)),
                MuSetting(Mu::Finite(0.1)),
                MuSetting(Mu::Infinite),
            ],
        }
    }
}

/// `[lo, hi, step]` triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub observations: Option<PathBuf>,
    pub r: [f64; 3],
    pub x: [f64; 3],
    pub k_lo: [f64; 3],
    pub k_hi: [f64; 3],
}

impl Default for FitConfig {
    fn default() -> Self {
        let d = FitRanges::default();
        let t = |r: ParamRange| [r.lo, r.hi, r.step];
        Self {
            observations: None,
            r: t(d.r),
            x: t(d.x),
            k_lo: t(d.k_lo),
            k_hi: t(d.k_hi),
        }
    }
}

impl FitConfig {
    pub fn ranges(&self) -> Result<FitRanges> {
        let r = |[lo, hi, step]: [f64; 3]| ParamRange::new(lo, hi, step).map_err(CliError::from);
        Ok(FitRanges {
            r: r(self.r)?,
            x: r(self.x)?,
            k_lo: r(self.k_lo)?,
            k_hi: r(self.k_hi)?,
        })
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column())))
    }

    pub fn quad(&self) -> Result<QuadratureGrid> {
        Ok(QuadratureGrid::new(self.quad_points)?)
    }

    pub fn density(&self) -> Result<HeterogeneityDensity> {
        Ok(density_weights(self.density.kind(), self.quad()?)?)
    }

    pub fn terminal(&self) -> Result<TerminalUtility> {
        Ok(match &self.objective.terminal {
            TerminalConfig::Zero => TerminalUtility::Zero,
            TerminalConfig::CappedLinear { eta, cap } => TerminalUtility::CappedLinear { eta: *eta, cap: *cap },
            TerminalConfig::Piecewise { knots } => TerminalUtility::Piecewise(PiecewiseLinear::new(knots.clone())?),
        })
    }

    pub fn mortality(&self) -> Result<Mortality> {
        Ok(match &self.objective.mortality {
            MortalityConfig::Constant { rate } => Mortality::Constant(*rate),
            MortalityConfig::Piecewise { knots } => Mortality::Piecewise(PiecewiseLinear::new(knots.clone())?),
        })
    }

    pub fn objective(&self) -> Result<ObjectiveSpec> {
        let o = &self.objective;
        Ok(ObjectiveSpec {
            alpha: o.alpha,
            gamma: o.gamma,
            mu: o.mu.0,
            c_bar: o.c_bar,
            t0: self.grid.t0,
            t1: self.grid.t1,
            terminal: self.terminal()?,
            mortality: self.mortality()?,
        })
    }

    /// Fully validated model.
    pub fn model(&self) -> Result<Model> {
        Ok(Model::new(self.growth.spec()?, self.density()?, self.objective()?)?)
    }

    /// Solver grid; without an explicit `I`, the smallest `I` with
    /// `Δt ≤ cfl_fraction · cfl_max_dt`.
    pub fn solve_grid(&self, model: &Model) -> Result<SolveGrid> {
        let g = &self.grid;
        match g.time_steps {
            Some(steps) => Ok(SolveGrid::new(g.t0, g.t1, steps, g.pop_steps, g.pop_max)?),
            None => {
                if !(g.cfl_fraction > 0.0 && g.cfl_fraction <= 1.0) {
                    return Err(CliError::Config(format!(
                        "grid.cfl_fraction must lie in (0, 1], got {}",
                        g.cfl_fraction
                    )));
                }
                let probe = SolveGrid::new(g.t0, g.t1, 1, g.pop_steps, g.pop_max)?;
                let bound = harvest_core::cfl_max_dt(&probe, model);
                Ok(SolveGrid::with_max_dt(
                    g.t0,
                    g.t1,
                    g.cfl_fraction * bound,
                    g.pop_steps,
                    g.pop_max,
                )?)
            }
        }
    }
}
