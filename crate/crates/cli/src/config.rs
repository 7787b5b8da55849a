use serde::{Deserialize, Serialize};

use delay_smoothing::delay_dynamics::DelayMeasure;
use delay_smoothing::{DelaySystem, PastFunctional, Segment, SquareMatrix};

use crate::catalog::Catalog;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    Covariance,
    SmoothingRate,
    GradientRate,
    FellerProbe,
    HjbSolve,
    LinearSolve,
    Control,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Covariance => "covariance",
            Experiment::SmoothingRate => "smoothing-rate",
            Experiment::GradientRate => "gradient-rate",
            Experiment::FellerProbe => "feller-probe",
            Experiment::HjbSolve => "hjb-solve",
            Experiment::LinearSolve => "linear-solve",
            Experiment::Control => "control",
        }
    }

    fn needs_seed(self) -> bool {
        matches!(self, Experiment::Simulate | Experiment::LinearSolve | Experiment::Control)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub theta: f64,
    pub weight: Vec<Vec<f64>>,
}

/// Delay measure given by atoms and a piecewise-constant density (equal cells on `[-d, 0]`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    #[serde(default)]
    pub atoms: Vec<AtomSpec>,
    #[serde(default)]
    pub density: Vec<Vec<Vec<f64>>>,
}

/// Either a catalog name or explicit coefficients.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub name: Option<String>,
    pub delay: Option<f64>,
    pub a0: Option<Vec<Vec<f64>>>,
    pub sigma: Option<Vec<Vec<f64>>>,
    pub a1: Option<MeasureSpec>,
    pub tail_grid: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PfSpec {
    pub alpha0: Vec<Vec<f64>>,
    #[serde(default)]
    pub tail: MeasureSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    /// Euler step of path simulations.
    pub dt: f64,
    /// Step of the response table.
    pub table_dt: f64,
    /// Probe times; empty selects the experiment default.
    pub times: Vec<f64>,
    pub t: f64,
    pub horizon: f64,
    pub paths: usize,
    pub x_head: Vec<f64>,
    /// Constant tail value; zeros when empty.
    pub x_tail: Vec<f64>,
    /// Head of the perturbation direction; `e₁` when empty.
    pub h_head: Vec<f64>,
    pub theta_star: f64,
    pub gh_order: usize,
    pub grid_nodes: usize,
    pub half_width: Option<f64>,
    pub time_nodes: usize,
    pub s_order: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub candidates: Vec<f64>,
    /// `formula`, `fd` or `both`; no gradient when absent.
    pub gradient: Option<String>,
    pub fd_delta: f64,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            dt: 0.01,
            table_dt: 1e-4,
            times: Vec::new(),
            t: 0.5,
            horizon: 1.0,
            paths: 1000,
            x_head: Vec::new(),
            x_tail: Vec::new(),
            h_head: Vec::new(),
            theta_star: -0.75,
            gh_order: 40,
            grid_nodes: 81,
            half_width: None,
            time_nodes: 32,
            s_order: 8,
            tol: 1e-6,
            max_iter: 50,
            candidates: vec![-1.0, -0.5, 0.0, 0.5, 1.0],
            gradient: None,
            fd_delta: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub seed: Option<u64>,
    #[serde(default)]
    pub system: SystemSpec,
    pub pf: Option<PfSpec>,
    pub observable: Option<String>,
    pub observable_param: Option<f64>,
    pub drift: Option<String>,
    #[serde(default)]
    pub drift_param: Vec<f64>,
    pub psi: Option<String>,
    #[serde(default)]
    pub psi_param: Vec<f64>,
    pub benchmark: Option<String>,
    #[serde(default)]
    pub params: Params,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<SquareMatrix<f64>, CliError> {
    SquareMatrix::from_rows(rows).map_err(|e| invalid(format!("{what}: {e}")))
}

fn measure(spec: &MeasureSpec, n: usize, d: f64, what: &str) -> Result<DelayMeasure<f64>, CliError> {
    let mut m = DelayMeasure::zero(n, d)?;
    for a in &spec.atoms {
        if a.theta == 0.0 {
            return Err(invalid(format!(
                "{what} has an atom at θ = 0; the standing condition a1({{0}}) = 0 requires that mass in the present-value coefficient"
            )));
        }
        m = m.with_atom(a.theta, matrix(&a.weight, what)?)?;
    }
    if !spec.density.is_empty() {
        let cells = spec.density.iter().map(|c| matrix(c, what)).collect::<Result<Vec<_>, _>>()?;
        m = m.with_density(cells)?;
    }
    Ok(m)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| invalid(format!("config: {e}")))?;
        if cfg.experiment.needs_seed() && cfg.seed.is_none() {
            return Err(invalid(format!("experiment '{}' needs an explicit seed", cfg.experiment.name())));
        }
        Ok(cfg)
    }

    /// The config with every default written out.
    pub fn resolved_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn system(&self, catalog: &Catalog) -> Result<(DelaySystem<f64>, PastFunctional<f64>), CliError> {
        let s = &self.system;
        let (sys, default_pf) = match &s.name {
            Some(name) => {
                if s.a0.is_some() || s.sigma.is_some() || s.a1.is_some() || s.delay.is_some() {
                    return Err(invalid("give either a system name or coefficients, not both"));
                }
                let (sys, pf) = catalog
                    .system(name)
                    .ok_or_else(|| invalid(format!("unknown system '{name}'")))??;
                (sys, Some(pf))
            }
            None => {
                let a0 = matrix(s.a0.as_deref().ok_or_else(|| invalid("system needs a name or a0"))?, "a0")?;
                let n = a0.dim();
                let d = s.delay.ok_or_else(|| invalid("system needs a delay"))?;
                let sigma = match &s.sigma {
                    Some(rows) => matrix(rows, "sigma")?,
                    None => SquareMatrix::identity(n),
                };
                let a1 = measure(&s.a1.clone().unwrap_or_default(), n, d, "a1")?;
                let sys = DelaySystem::new(a0, a1, sigma, s.tail_grid.unwrap_or(delay_smoothing::systems::DEFAULT_TAIL_GRID))?;
                (sys, None)
            }
        };
        let pf = match (&self.pf, default_pf) {
            (Some(p), _) => {
                let alpha0 = matrix(&p.alpha0, "pf.alpha0")?;
                let tail = measure(&p.tail, alpha0.dim(), sys.delay(), "pf.tail")?;
                PastFunctional::new(alpha0, tail)?
            }
            (None, Some(pf)) => pf,
            (None, None) => PastFunctional::head_projection(sys.dim(), sys.delay())?,
        };
        if pf.dim() != sys.dim() {
            return Err(invalid(format!("pf has dimension {}, system has {}", pf.dim(), sys.dim())));
        }
        Ok((sys, pf))
    }

    pub fn segment(&self, sys: &DelaySystem<f64>, head: &[f64], tail: &[f64]) -> Result<Segment<f64>, CliError> {
        let n = sys.dim();
        let fill = |v: &[f64], what: &str| -> Result<Vec<f64>, CliError> {
            match v.len() {
                0 => Ok(vec![0.0; n]),
                k if k == n => Ok(v.to_vec()),
                k => Err(invalid(format!("{what} has {k} entries, system dimension is {n}"))),
            }
        };
        Ok(Segment::constant(fill(head, "x_head")?, &fill(tail, "x_tail")?, sys.delay(), sys.tail_grid())?)
    }

    pub fn initial(&self, sys: &DelaySystem<f64>) -> Result<Segment<f64>, CliError> {
        self.segment(sys, &self.params.x_head, &self.params.x_tail)
    }

    /// Perturbation direction with zero tail.
    pub fn direction(&self, sys: &DelaySystem<f64>) -> Result<Segment<f64>, CliError> {
        let mut head = self.params.h_head.clone();
        if head.is_empty() {
            head = vec![0.0; sys.dim()];
            head[0] = 1.0;
        }
        self.segment(sys, &head, &[])
    }
}
