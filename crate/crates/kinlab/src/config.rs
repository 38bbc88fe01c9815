//! JSON mirrors of the core problem description.
//!
//! Every subcommand takes one JSON file. Unknown fields are rejected so that
//! typos surface as config errors instead of silently picking defaults.
//! Custom (function-pointer) potentials are a library-only feature and have
//! no config representation.

use crate::{CliError, CliResult};
use kinlab_core::model::{InitialLaw, KSchedule, LabelSpace, Potential, ProblemSpec};
use kinlab_core::particles::SimMode;
use kinlab_core::pde::PdeMode;
use kinlab_core::{BoxDomain, Grid1D, Vect};
use serde::{Deserialize, Serialize};

fn cfg_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn vect(v: &[f64], what: &str) -> CliResult<Vect> {
    if v.is_empty() || v.len() > kinlab_core::MAX_DIM {
        return Err(cfg_err(format!(
            "{what} must have between 1 and {} coordinates",
            kinlab_core::MAX_DIM
        )));
    }
    if v.iter().any(|c| !c.is_finite()) {
        return Err(cfg_err(format!("{what} must be finite")));
    }
    Ok(Vect::new(v))
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialCfg {
    QuadraticWell,
    ScaledQuadratic,
    AnisotropicQuadratic2d { v: [f64; 2], a: [f64; 2] },
}

impl PotentialCfg {
    pub fn resolve(&self) -> Potential {
        match self {
            PotentialCfg::QuadraticWell => Potential::QuadraticWell,
            PotentialCfg::ScaledQuadratic => Potential::ScaledQuadratic,
            PotentialCfg::AnisotropicQuadratic2d { v, a } => {
                Potential::AnisotropicQuadratic2D { v: *v, a: *a }
            }
        }
    }
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LabelsCfg {
    Bernoulli { p: f64 },
    Explicit { labels: Vec<Vec<f64>>, weights: Vec<f64> },
}

impl LabelsCfg {
    pub fn resolve(&self) -> CliResult<LabelSpace> {
        match self {
            LabelsCfg::Bernoulli { p } => Ok(LabelSpace::bernoulli(*p)?),
            LabelsCfg::Explicit { labels, weights } => {
                let vs = labels
                    .iter()
                    .map(|l| vect(l, "label"))
                    .collect::<CliResult<Vec<_>>>()?;
                Ok(LabelSpace::new(vs, weights.clone())?)
            }
        }
    }
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleCfg {
    Constant { k: f64 },
    Affine { a: f64, b: f64 },
}

impl ScheduleCfg {
    pub fn resolve(&self) -> CliResult<KSchedule> {
        match self {
            ScheduleCfg::Constant { k } => Ok(KSchedule::constant(*k)?),
            ScheduleCfg::Affine { a, b } => Ok(KSchedule::affine(*a, *b)?),
        }
    }
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitCfg {
    PointMass { x: Vec<f64> },
    UniformBox { lo: Vec<f64>, hi: Vec<f64> },
}

impl InitCfg {
    pub fn resolve(&self) -> CliResult<InitialLaw> {
        match self {
            InitCfg::PointMass { x } => Ok(InitialLaw::PointMass { x: vect(x, "init point")? }),
            InitCfg::UniformBox { lo, hi } => Ok(InitialLaw::UniformBox {
                domain: BoxDomain::new(vect(lo, "init box lo")?, vect(hi, "init box hi")?)?,
            }),
        }
    }
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct DomainCfg {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl DomainCfg {
    pub fn resolve(&self) -> CliResult<BoxDomain> {
        Ok(BoxDomain::new(vect(&self.lo, "domain lo")?, vect(&self.hi, "domain hi")?)?)
    }
}

/// Config mirror of `ProblemSpec`. Defaults describe the two-label
/// quadratic-well system on `[0, 3]` with switching rate 5.
#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(default, deny_unknown_fields)]
pub struct SpecCfg {
    pub potential: PotentialCfg,
    pub labels: LabelsCfg,
    pub schedule: ScheduleCfg,
    pub init: InitCfg,
    pub init_label_weights: Option<Vec<f64>>,
    pub domain: DomainCfg,
    pub horizon: f64,
    pub record_times: Vec<f64>,
    pub seed: u64,
}

impl Default for SpecCfg {
    fn default() -> Self {
        SpecCfg {
            potential: PotentialCfg::QuadraticWell,
            labels: LabelsCfg::Bernoulli { p: 0.5 },
            schedule: ScheduleCfg::Constant { k: 5.0 },
            init: InitCfg::UniformBox { lo: vec![0.0], hi: vec![3.0] },
            init_label_weights: None,
            domain: DomainCfg { lo: vec![0.0], hi: vec![3.0] },
            horizon: 1.0,
            record_times: vec![0.0, 1.0],
            seed: 0,
        }
    }
}

impl SpecCfg {
    /// Builds the validated core spec; `seed` (from `--seed`) wins over the
    /// file value.
    pub fn resolve(&self, seed: Option<u64>) -> CliResult<ProblemSpec> {
        let spec = ProblemSpec::new(
            self.potential.resolve(),
            self.labels.resolve()?,
            self.schedule.resolve()?,
            self.init.resolve()?,
            self.domain.resolve()?,
            self.horizon,
            self.record_times.clone(),
            seed.unwrap_or(self.seed),
        )?;
        match &self.init_label_weights {
            Some(w) => Ok(spec.with_init_label_weights(w.clone())?),
            None => Ok(spec),
        }
    }

    /// Copy with the effective seed filled in, for echoing in sidecars.
    pub fn resolved_echo(&self, seed: Option<u64>) -> SpecCfg {
        let mut c = self.clone();
        if let Some(s) = seed {
            c.seed = s;
        }
        c
    }
}

#[derive(Serialize, Deserialize, Clone, Copy, Debug)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModeCfg {
    EventDriven,
    Uniformized { dt: f64 },
}

impl ModeCfg {
    pub fn resolve(&self) -> SimMode {
        match self {
            ModeCfg::EventDriven => SimMode::EventDriven,
            ModeCfg::Uniformized { dt } => SimMode::Uniformized { dt: *dt },
        }
    }
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateCfg {
    pub spec: SpecCfg,
    pub n: usize,
    pub mode: ModeCfg,
}

impl Default for SimulateCfg {
    fn default() -> Self {
        SimulateCfg { spec: SpecCfg::default(), n: 1000, mode: ModeCfg::EventDriven }
    }
}

#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum PdeModeCfg {
    Kinetic,
    GradientFlow,
}

impl PdeModeCfg {
    pub fn resolve(&self) -> PdeMode {
        match self {
            PdeModeCfg::Kinetic => PdeMode::Kinetic,
            PdeModeCfg::GradientFlow => PdeMode::GradientFlow,
        }
    }
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(default, deny_unknown_fields)]
pub struct PdeCfg {
    pub spec: SpecCfg,
    /// Cells of the solver grid, spanning the spec's (one-dimensional) domain.
    pub n_cells: usize,
    pub mode: PdeModeCfg,
}

impl Default for PdeCfg {
    fn default() -> Self {
        PdeCfg { spec: SpecCfg::default(), n_cells: 400, mode: PdeModeCfg::Kinetic }
    }
}

impl PdeCfg {
    pub fn grid(&self) -> CliResult<Grid1D> {
        let domain = self.spec.domain.resolve()?;
        if domain.dim() != 1 {
            return Err(cfg_err("the grid solver needs a one-dimensional domain"));
        }
        Ok(Grid1D::new(domain.lo.at(0), domain.hi.at(0), self.n_cells)?)
    }
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct GridCfg {
    pub lo: f64,
    pub hi: f64,
    pub n_cells: usize,
}

impl GridCfg {
    pub fn resolve(&self) -> CliResult<Grid1D> {
        Ok(Grid1D::new(self.lo, self.hi, self.n_cells)?)
    }
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum StationaryMethodCfg {
    /// Closed-form two-label quadratic-well state; no free parameters.
    Analytic,
    /// Viscosity continuation along `eps_sequence` (strictly decreasing,
    /// at least four values), then power iteration at each stage.
    Eigensolver { eps_sequence: Vec<f64>, tol: f64, max_iter: usize },
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(default, deny_unknown_fields)]
pub struct StationaryCfg {
    pub potential: PotentialCfg,
    pub labels: LabelsCfg,
    pub k: f64,
    pub grid: GridCfg,
    pub method: StationaryMethodCfg,
}

impl Default for StationaryCfg {
    fn default() -> Self {
        StationaryCfg {
            potential: PotentialCfg::QuadraticWell,
            labels: LabelsCfg::Bernoulli { p: 0.5 },
            k: 8.0,
            grid: GridCfg { lo: 0.5, hi: 2.5, n_cells: 500 },
            method: StationaryMethodCfg::Analytic,
        }
    }
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundCurveCfg {
    Stability { l: f64, k: f64, w2_init: f64, w2_mu: f64 },
    ConvexDecay { delta: f64, m: f64, k: f64, l: f64, w2_init: f64, w2_mu: f64 },
    Grazing { m: f64, k: f64, sigma2: f64, w2_init: f64 },
    GrazingRate { m: f64, k: f64, l: f64, c: f64 },
    VariableRate { m: f64, c: f64, schedule: ScheduleCfg },
    SecondMomentEnvelope { m2_init: f64, l: f64, c: f64 },
}

#[derive(Serialize, Deserialize, Clone, Copy, Debug)]
#[serde(deny_unknown_fields)]
pub struct TimeAxisCfg {
    pub start: f64,
    pub stop: f64,
    pub n: usize,
}

impl TimeAxisCfg {
    pub fn times(&self) -> CliResult<Vec<f64>> {
        if self.n < 2 || !(self.start < self.stop) {
            return Err(cfg_err("time axis needs start < stop and at least 2 points"));
        }
        let step = (self.stop - self.start) / (self.n - 1) as f64;
        Ok((0..self.n).map(|i| self.start + step * i as f64).collect())
    }
}

#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsCfg {
    pub curve: BoundCurveCfg,
    pub times: TimeAxisCfg,
}

impl Default for BoundsCfg {
    fn default() -> Self {
        BoundsCfg {
            curve: BoundCurveCfg::GrazingRate {
                m: 1.0,
                k: 10.0,
                l: 2.0,
                c: std::f64::consts::FRAC_1_SQRT_2,
            },
            times: TimeAxisCfg { start: 0.0, stop: 3.0, n: 61 },
        }
    }
}

/// Canned experiment selector with desk-scale overrides. Omitted fields keep
/// each experiment's documented defaults.
#[derive(Serialize, Deserialize, Clone, Debug)]
#[serde(deny_unknown_fields)]
pub struct ExperimentCfg {
    pub name: String,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub n_cells: Option<usize>,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Parses a config file of type `T`, mapping every syntax or schema problem
/// to a config error.
pub fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| cfg_err(e.to_string()))
}
