//! Job configuration. Every block rejects unknown keys.

use crate::complex_powers::DEFAULT_DEPTH;
use crate::conformal_harness::{FunctionalSpec, HarnessOptions};
use crate::field::{Domain, FieldSpec};
use crate::laurent_engine::{LaurentOptions, TraceOperand};
use crate::spectral_models::{Family, MellinOptions, ModelGeometry};
use crate::symbol_core::{CutoffProfile, SymbolJson};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Residue,
    Cutoff,
    Zeta,
    HeatFit,
    Laurent,
    Anomaly,
    Covariance,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Self::Residue => "residue",
            Self::Cutoff => "cutoff",
            Self::Zeta => "zeta",
            Self::HeatFit => "heat-fit",
            Self::Laurent => "laurent",
            Self::Anomaly => "anomaly",
            Self::Covariance => "covariance",
        }
    }

    /// Pass threshold used when `numerics.tolerance` is absent.
    pub fn default_tolerance(self) -> f64 {
        match self {
            Self::Laurent => 1e-4,
            _ => 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Circle,
    Torus,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub kind: DomainKind,
    pub lengths: Vec<f64>,
    #[serde(rename = "N", default = "default_modes")]
    pub n: usize,
    /// Conformal factor; flat when absent.
    #[serde(default = "flat_phi")]
    pub phi: FieldSpec,
}

fn default_modes() -> usize {
    64
}

fn flat_phi() -> FieldSpec {
    FieldSpec::Constant { value: 0.0 }
}

impl GeometryConfig {
    pub fn domain(&self) -> Result<Domain> {
        let want = match self.kind {
            DomainKind::Circle => 1,
            DomainKind::Torus => 2,
        };
        if self.lengths.len() != want {
            return Err(Error::Config(format!("{:?} geometry needs {want} length(s), got {}", self.kind, self.lengths.len())));
        }
        Domain::new(self.lengths.clone())
    }

    pub fn build(&self) -> Result<ModelGeometry> {
        ModelGeometry::new(self.phi.to_field(&self.domain()?)?, self.n)
    }
}

/// Operand `A` of a weighted trace; fields are given as [`FieldSpec`]s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperandConfig {
    Identity,
    Power {
        s: f64,
    },
    Multiplier {
        f: FieldSpec,
        #[serde(default)]
        s: f64,
    },
    SignedUnit,
    SignedMultiplier {
        f: FieldSpec,
    },
}

impl OperandConfig {
    pub fn build(&self, domain: &Domain) -> Result<TraceOperand> {
        Ok(match self {
            Self::Identity => TraceOperand::Identity,
            Self::Power { s } => TraceOperand::Power { s: *s },
            Self::Multiplier { f, s } => TraceOperand::Multiplier { f: f.to_field(domain)?, s: *s },
            Self::SignedUnit => TraceOperand::SignedUnit,
            Self::SignedMultiplier { f } => TraceOperand::SignedMultiplier { f: f.to_field(domain)? },
        })
    }

    pub fn has_field(&self) -> bool {
        matches!(self, Self::Multiplier { .. } | Self::SignedMultiplier { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffConfig {
    #[serde(default = "default_r0")]
    pub r0: f64,
    #[serde(default = "default_r1")]
    pub r1: f64,
    #[serde(default = "default_smoothness")]
    pub smoothness: u32,
    /// Grid point x at which a variable-coefficient symbol is frozen.
    #[serde(default)]
    pub x_index: usize,
    /// Cross-check c against a fit of ball integrals over `radii`.
    #[serde(default)]
    pub ball_check: bool,
}

fn default_r0() -> f64 {
    CutoffProfile::default().r0
}

fn default_r1() -> f64 {
    CutoffProfile::default().r1
}

fn default_smoothness() -> u32 {
    CutoffProfile::default().smoothness
}

impl CutoffConfig {
    pub fn profile(&self) -> Result<CutoffProfile> {
        let p = CutoffProfile { r0: self.r0, r1: self.r1, smoothness: self.smoothness };
        p.validate()?;
        Ok(p)
    }
}

/// Numeric knobs. The defaults below are the documented ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Numerics {
    /// Symbol depth J kept by the cut-off integral.
    pub depth: usize,
    /// Heat fit window [ε_min, ε_max]; trust-aware default when absent.
    pub eps_window: Option<[f64; 2]>,
    pub fit_points: usize,
    /// Conformal step t of the finite differences.
    pub t: f64,
    /// 1 = central difference, 2 = one Richardson step.
    pub richardson: u8,
    /// Pass threshold; per-task default when absent.
    pub tolerance: Option<f64>,
    /// Cauchy circle radius and sample count of Laurent fits.
    pub radius: f64,
    pub points: usize,
    pub max_order: i32,
    /// Mellin split point.
    pub t0: f64,
    /// Grid points per axis for symbol-side residues.
    pub symbol_grid: usize,
    /// Real points at which `zeta` tabulates ζ(z).
    pub z_grid: Vec<f64>,
    /// Fit the signed (η) heat trace in `heat-fit`.
    pub signed: bool,
    /// Refuse anomaly checks whose covariance residual exceeds the gate.
    pub gate: bool,
    pub radii: Vec<f64>,
    /// Lowest ball-fit exponent kept.
    pub min_exponent: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        let h = HarnessOptions::default();
        let l = LaurentOptions::default();
        Self {
            depth: DEFAULT_DEPTH,
            eps_window: None,
            fit_points: h.fit_points,
            t: h.t,
            richardson: h.richardson,
            tolerance: None,
            radius: l.radius,
            points: l.points,
            max_order: l.max_order,
            t0: MellinOptions::default().t0,
            symbol_grid: h.symbol_grid,
            z_grid: Vec::new(),
            signed: false,
            gate: h.gate,
            radii: (0..24).map(|i| 4.0 * 25f64.powf(i as f64 / 23.0)).collect(),
            min_exponent: -10.0,
        }
    }
}

impl Numerics {
    pub fn window(&self) -> Result<Option<(f64, f64)>> {
        match self.eps_window {
            Some([lo, hi]) if !(lo > 0.0 && hi > lo) => Err(Error::Config(format!("eps_window [{lo}, {hi}] is not an interval in (0, ∞)"))),
            Some([lo, hi]) => Ok(Some((lo, hi))),
            None => Ok(None),
        }
    }

    pub fn mellin(&self) -> MellinOptions {
        MellinOptions { t0: self.t0, eps_min: None }
    }

    pub fn harness(&self, task: Task) -> Result<HarnessOptions> {
        Ok(HarnessOptions {
            t: self.t,
            richardson: self.richardson,
            fit_points: self.fit_points,
            window: self.window()?,
            mellin: self.mellin(),
            symbol_grid: self.symbol_grid,
            tolerance: self.tolerance.unwrap_or(task.default_tolerance()),
            gate: self.gate,
        })
    }

    pub fn laurent(&self) -> LaurentOptions {
        LaurentOptions {
            radius: self.radius,
            points: self.points,
            max_order: self.max_order,
            mellin: self.mellin(),
            symbol_grid: self.symbol_grid,
            fit: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    /// Must match the task given on the command line when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometryConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<Family>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functional: Option<FunctionalSpec>,
    /// Conformal direction, or heat-trace weight in `heat-fit`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<FieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operand: Option<OperandConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol: Option<SymbolJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<CutoffConfig>,
    #[serde(default)]
    pub numerics: Numerics,
    // Paths stay out of the report so that reruns elsewhere compare equal.
    #[serde(default, skip_serializing)]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing)]
    pub cache_dir: Option<PathBuf>,
}

impl JobConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn geometry(&self) -> Result<ModelGeometry> {
        self.geometry.as_ref().ok_or_else(|| missing("geometry"))?.build()
    }

    pub fn family(&self) -> Result<&Family> {
        self.operator.as_ref().ok_or_else(|| missing("operator"))
    }

    pub fn functional(&self) -> Result<&FunctionalSpec> {
        self.functional.as_ref().ok_or_else(|| missing("functional"))
    }

    pub fn direction(&self) -> Result<&FieldSpec> {
        self.f.as_ref().ok_or_else(|| missing("f"))
    }

    pub fn operand(&self) -> Result<&OperandConfig> {
        self.operand.as_ref().ok_or_else(|| missing("operand"))
    }

    pub fn symbol(&self) -> Result<&SymbolJson> {
        self.symbol.as_ref().ok_or_else(|| missing("symbol"))
    }

    pub fn tolerance(&self, task: Task) -> f64 {
        self.numerics.tolerance.unwrap_or(task.default_tolerance())
    }
}

fn missing(key: &str) -> Error {
    Error::Config(format!("this task needs a `{key}` block"))
}
