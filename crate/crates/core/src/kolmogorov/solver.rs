use crate::delay_dynamics::DelaySystem;
use crate::error::{Error, Result};
use crate::functionals::{PastFunctional, Phibar, Regime};
use crate::linalg::{norm2, sym, SquareMatrix};
use crate::mc::par_map;
use crate::quadrature::GaussLegendre;
use crate::smoothing::{geometric_grid, lower_bound_certificate, GaussRule, Gaussian, QuadConfig, ResponseTable};

use super::grid::{cubic_stencil, SpaceGrid};
use super::nonlinearity::{Arity, Nonlinearity};

/// Space grid of the reduced variable `y = 𝒫e^{tA}x`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    /// Box center; zeros when absent.
    pub center: Option<Vec<f64>>,
    /// Box half-width; `6·√λ_max(bar Q_T) + data_range` when absent.
    pub half_width: Option<f64>,
    pub data_range: f64,
    pub nodes: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            center: None,
            half_width: None,
            data_range: 1.0,
            nodes: 81,
        }
    }
}

/// Where the bound `t̄` of the covariance certificate comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum TbarSource {
    /// Run [`lower_bound_certificate`] on these probe times (a default
    /// geometric grid up to the horizon when empty).
    Certificate { probes: Vec<f64> },
    Given(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub horizon: f64,
    /// Optional cap on the subinterval length.
    pub t0: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub gh_order: Option<usize>,
    /// Gauss-Legendre nodes on each half of the time integral.
    pub s_order: usize,
    /// Time nodes per subinterval (`τ_k = T₀(k/K)²`, `k = 0..=K`).
    pub time_nodes: usize,
    pub grid: GridSpec,
    /// Step of the response table.
    pub dt: f64,
    pub tbar: TbarSource,
    pub floor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            t0: None,
            tol: 1e-6,
            max_iter: 50,
            gh_order: None,
            s_order: 8,
            time_nodes: 32,
            grid: GridSpec::default(),
            dt: 1e-3,
            tbar: TbarSource::Certificate { probes: Vec::new() },
            floor: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn quad(&self) -> QuadConfig {
        QuadConfig {
            gh_order: self.gh_order,
            dt: self.dt,
            floor: self.floor,
            ..QuadConfig::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Invalid(m));
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return bad("tolerance and iteration cap must be positive".into());
        }
        if self.time_nodes < 3 || self.s_order == 0 {
            return bad("need at least 3 time nodes and 1 s-quadrature node".into());
        }
        if !(self.dt > 0.0) || self.dt > self.horizon {
            return bad(format!("table step {} must lie in (0, horizon]", self.dt));
        }
        if let Some(t0) = self.t0 {
            if !(t0 > 0.0) {
                return bad(format!("subinterval cap must be positive, got {t0}"));
            }
        }
        Ok(())
    }
}

/// Fixed-point history of one subinterval.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowReport {
    pub start: f64,
    pub length: f64,
    pub iterations: usize,
    /// Weighted change after each sweep.
    pub changes: Vec<f64>,
    /// Successive change ratios.
    pub ratios: Vec<f64>,
}

#[derive(Debug, Clone)]
struct WindowData {
    start: f64,
    values: Vec<f64>,
    grads: Vec<f64>,
}

/// `w(t, x) = w̄(t, 𝒫e^{tA}x)` on a time × space grid, together with the
/// reduced gradient `∇_y w̄` (so that `∇w(t,x)G = ∇_y w̄ · M(t)`).
#[derive(Debug, Clone)]
pub struct SigmaFunction {
    n: usize,
    grid: SpaceGrid,
    horizon: f64,
    t0: f64,
    k_nodes: usize,
    tbar: f64,
    dt: f64,
    windows: Vec<WindowData>,
    table: ResponseTable,
    reports: Vec<WindowReport>,
    phibar_bound: f64,
}

impl SigmaFunction {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> &SpaceGrid {
        &self.grid
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Subinterval length `T₀`.
    pub fn window_length(&self) -> f64 {
        self.t0
    }

    pub fn tbar(&self) -> f64 {
        self.tbar
    }

    /// Step of the response table used by the solver.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn reports(&self) -> &[WindowReport] {
        &self.reports
    }

    pub fn phibar_bound(&self) -> f64 {
        self.phibar_bound
    }

    /// `M(t) = 𝒫e^{tA}G`.
    pub fn response(&self, t: f64) -> SquareMatrix<f64> {
        self.table.at(t)
    }

    fn tau(&self, k: usize) -> f64 {
        let r = k as f64 / self.k_nodes as f64;
        self.t0 * r * r
    }

    /// Every stored `(t, values, reduced gradients)` slice in time order,
    /// subinterval boundaries listed once.
    pub fn slices(&self) -> Vec<(f64, &[f64], &[f64])> {
        let j = self.grid.len();
        let mut out = Vec::new();
        for (b, w) in self.windows.iter().enumerate() {
            let first = if b == 0 { 0 } else { 1 };
            for k in first..=self.k_nodes {
                out.push((
                    w.start + self.tau(k),
                    &w.values[k * j..(k + 1) * j],
                    &w.grads[k * j * self.n..(k + 1) * j * self.n],
                ));
            }
        }
        out
    }

    pub fn times(&self) -> Vec<f64> {
        self.slices().into_iter().map(|s| s.0).collect()
    }

    /// `ḡG(t, y) = t^{1/2} Mᵀ(t) ∇_y w̄(t, y)` from a reduced gradient.
    pub fn scale_gradient(&self, t: f64, grad: &[f64]) -> Vec<f64> {
        let m = self.table.at(t);
        m.vec_mul(grad).into_iter().map(|v| v * t.sqrt()).collect()
    }

    /// `sup_t t^{1/2} |∇w(t,·)G|` over the stored nodes.
    pub fn scaled_gradient_sup(&self) -> f64 {
        let mut best = 0.0f64;
        for (t, _, g) in self.slices() {
            if t == 0.0 {
                continue;
            }
            for gj in g.chunks(self.n) {
                best = best.max(norm2(&self.scale_gradient(t, gj)));
            }
        }
        best
    }

    fn time_stencil(&self, t: f64) -> (usize, usize, [f64; 4]) {
        let nw = self.windows.len();
        let t = t.clamp(0.0, self.horizon);
        let b = ((t / self.t0 + 1e-12).floor() as usize).min(nw - 1);
        let tau = (t - self.windows[b].start).max(0.0);
        let pos = (tau / self.t0).sqrt() * self.k_nodes as f64;
        let (s, w) = cubic_stencil(self.k_nodes + 1, pos);
        (b, s, w)
    }

    /// `(w̄(t, y), ∇_y w̄(t, y))`: cubic in `√τ` within a subinterval, cubic in space.
    pub fn eval_reduced(&self, t: f64, y: &[f64]) -> (f64, Vec<f64>) {
        let (b, s, w) = self.time_stencil(t);
        let j = self.grid.len();
        let win = &self.windows[b];
        let mut v = [0.0];
        let mut g = vec![0.0; self.n];
        for (a, wa) in w.iter().enumerate() {
            let k = s + a;
            self.grid.interp_acc(&win.values[k * j..(k + 1) * j], 1, y, *wa, &mut v);
            self.grid.interp_acc(&win.grads[k * j * self.n..(k + 1) * j * self.n], self.n, y, *wa, &mut g);
        }
        (v[0], g)
    }

    /// Values and reduced gradients at every grid node at time `t`.
    pub fn slice(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let (b, s, w) = self.time_stencil(t);
        let j = self.grid.len();
        let win = &self.windows[b];
        let mut v = vec![0.0; j];
        let mut g = vec![0.0; j * self.n];
        for (a, wa) in w.iter().enumerate() {
            let k = s + a;
            for (o, x) in v.iter_mut().zip(&win.values[k * j..(k + 1) * j]) {
                *o += wa * x;
            }
            for (o, x) in g.iter_mut().zip(&win.grads[k * j * self.n..(k + 1) * j * self.n]) {
                *o += wa * x;
            }
        }
        (v, g)
    }
}

enum Base<'a> {
    Phibar(&'a Phibar),
    Grid { values: Vec<f64>, grads: Vec<f64> },
}

/// `(E b(y + Z), ∇_y E b(y + Z))`; `None` is the point mass.
fn base_expect(base: &Base<'_>, grid: &SpaceGrid, rule: &GaussRule, gauss: Option<&Gaussian>, y: &[f64], floor: f64) -> Result<(f64, Vec<f64>)> {
    let n = y.len();
    match base {
        Base::Phibar(phi) => {
            let g = match gauss {
                Some(g) if !g.is_degenerate() => g,
                _ => return Ok((phi.eval(y), phi.gradient(y).unwrap_or_else(|| vec![0.0; n]))),
            };
            if let Some(hs) = phi.half_space_form() {
                return Ok((g.half_space_prob(hs, y, floor), g.half_space_grad_vec(hs, y, floor)?));
            }
            g.expect_with_score(rule, y, |z| phi.eval(z))
        }
        Base::Grid { values, grads } => {
            let g = match gauss {
                Some(g) if !g.is_degenerate() => g,
                _ => {
                    let mut gr = vec![0.0; n];
                    grid.interp_acc(grads, n, y, 1.0, &mut gr);
                    return Ok((grid.interp(values, y), gr));
                }
            };
            g.expect_with_score(rule, y, |z| grid.interp(values, z))
        }
    }
}

/// Time nodes and weights for `∫_0^τ f(s) ds` with `s = σ²` near 0 and
/// `τ − s = σ²` near `τ`.
pub(crate) fn s_nodes(gl: &GaussLegendre<f64>, tau: f64) -> Vec<(f64, f64)> {
    let a = (0.5 * tau).sqrt();
    let mut out = Vec::with_capacity(2 * gl.order());
    for (sig, w) in gl.on_interval(0.0, a) {
        out.push((sig * sig, 2.0 * sig * w));
        out.push((tau - sig * sig, 2.0 * sig * w));
    }
    out
}

struct SNode {
    w: f64,
    gauss: Gaussian,
    m: SquareMatrix<f64>,
    stencil: (usize, [f64; 4]),
    lin_v: Vec<f64>,
    lin_g: Vec<f64>,
}

struct Setup<'a> {
    sys_n: usize,
    grid: &'a SpaceGrid,
    nodes: &'a [Vec<f64>],
    rule: &'a GaussRule,
    table: &'a ResponseTable,
    floor: f64,
    k_nodes: usize,
    t0: f64,
}

impl Setup<'_> {
    fn gaussian(&self, s: f64, t: f64) -> Result<Option<Gaussian>> {
        if t <= s {
            return Ok(None);
        }
        Ok(Some(Gaussian::new(&self.table.covariance(s, t, 2)?.value, self.floor)))
    }

    fn linear_slice(&self, base: &Base<'_>, gauss: Option<&Gaussian>) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.sys_n;
        let mut v = Vec::with_capacity(self.nodes.len());
        let mut g = Vec::with_capacity(self.nodes.len() * n);
        for y in self.nodes {
            let (a, b) = base_expect(base, self.grid, self.rule, gauss, y, self.floor)?;
            v.push(a);
            g.extend_from_slice(&b);
        }
        Ok((v, g))
    }

    fn solve_window(
        &self,
        base: &Base<'_>,
        start: f64,
        psi: &Nonlinearity,
        cfg: &SolverConfig,
    ) -> Result<(WindowData, WindowReport)> {
        let n = self.sys_n;
        let jn = self.nodes.len();
        let kk = self.k_nodes;
        let taus: Vec<f64> = (0..=kk).map(|k| self.t0 * (k as f64 / kk as f64).powi(2)).collect();
        let gl = GaussLegendre::<f64>::new(cfg.s_order)?;

        let lin: Vec<(Vec<f64>, Vec<f64>)> = par_map(kk + 1, |k| {
            let g = self.gaussian(start, start + taus[k])?;
            self.linear_slice(base, g.as_ref())
        })
        .into_iter()
        .collect::<Result<_>>()?;

        let snodes: Vec<Vec<SNode>> = par_map(kk, |km| {
            let k = km + 1;
            let tk = start + taus[k];
            s_nodes(&gl, taus[k])
                .into_iter()
                .map(|(s, w)| {
                    let gl_base = self.gaussian(start, start + s)?;
                    let (lin_v, lin_g) = self.linear_slice(base, gl_base.as_ref())?;
                    let gauss = self.gaussian(start + s, tk)?.unwrap_or_else(|| Gaussian::point_mass(n));
                    let pos = (s / self.t0).sqrt() * kk as f64;
                    Ok(SNode {
                        w,
                        gauss,
                        m: self.table.at(start + s),
                        stencil: cubic_stencil(kk + 1, pos),
                        lin_v,
                        lin_g,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .into_iter()
        .collect::<Result<_>>()?;

        let m_at: Vec<SquareMatrix<f64>> = taus.iter().map(|t| self.table.at(start + t)).collect();
        let mut gam_v = vec![0.0; (kk + 1) * jn];
        let mut gam_g = vec![0.0; (kk + 1) * jn * n];
        let mut changes = Vec::new();
        let mut ratios = Vec::new();
        let mut streak = 0;
        let mut converged = false;
        let full = psi.arity() == Arity::Full;

        for _ in 0..cfg.max_iter {
            let upd: Vec<(Vec<f64>, Vec<f64>)> = par_map(kk, |km| {
                let mut nv = vec![0.0; jn];
                let mut ng = vec![0.0; jn * n];
                let mut field = vec![0.0; jn];
                let mut grad = vec![0.0; n];
                for nd in &snodes[km] {
                    let (s0, tw) = nd.stencil;
                    for j in 0..jn {
                        let mut v = nd.lin_v[j];
                        grad.copy_from_slice(&nd.lin_g[j * n..(j + 1) * n]);
                        for (a, wa) in tw.iter().enumerate() {
                            let k = s0 + a;
                            if full {
                                v += wa * gam_v[k * jn + j];
                            }
                            for c in 0..n {
                                grad[c] += wa * gam_g[(k * jn + j) * n + c];
                            }
                        }
                        field[j] = psi.eval(v, &nd.m.vec_mul(&grad));
                    }
                    for (i, y) in self.nodes.iter().enumerate() {
                        if nd.gauss.is_degenerate() {
                            nv[i] += nd.w * field[i];
                            continue;
                        }
                        let (a, b) = nd
                            .gauss
                            .expect_with_score(self.rule, y, |z| self.grid.interp(&field, z))
                            .expect("non-degenerate law");
                        nv[i] += nd.w * a;
                        for c in 0..n {
                            ng[i * n + c] += nd.w * b[c];
                        }
                    }
                }
                (nv, ng)
            });
            let mut change = 0.0f64;
            let mut dgrad = 0.0f64;
            for (km, (nv, ng)) in upd.iter().enumerate() {
                let k = km + 1;
                let st = taus[k].sqrt();
                for j in 0..jn {
                    change = change.max((nv[j] - gam_v[k * jn + j]).abs());
                    let d: Vec<f64> = (0..n).map(|c| ng[j * n + c] - gam_g[(k * jn + j) * n + c]).collect();
                    dgrad = dgrad.max(st * norm2(&m_at[k].vec_mul(&d)));
                }
            }
            let change = change + dgrad;
            for (km, (nv, ng)) in upd.into_iter().enumerate() {
                let k = km + 1;
                gam_v[k * jn..(k + 1) * jn].copy_from_slice(&nv);
                gam_g[k * jn * n..(k + 1) * jn * n].copy_from_slice(&ng);
            }
            if let Some(prev) = changes.last().copied() {
                if prev > 0.0 {
                    let r = change / prev;
                    ratios.push(r);
                    streak = if r >= 1.0 { streak + 1 } else { 0 };
                }
            }
            changes.push(change);
            if change < cfg.tol {
                converged = true;
                break;
            }
            if streak >= 3 {
                return Err(Error::NonContraction(format!(
                    "window at t = {start}: ratios {ratios:?}, changes {changes:?}"
                )));
            }
        }
        if !converged {
            return Err(Error::NonContraction(format!(
                "window at t = {start}: no convergence to {} in {} sweeps; changes {changes:?}",
                cfg.tol, cfg.max_iter
            )));
        }
        let mut values = vec![0.0; (kk + 1) * jn];
        let mut grads = vec![0.0; (kk + 1) * jn * n];
        for k in 0..=kk {
            for j in 0..jn {
                values[k * jn + j] = lin[k].0[j] + gam_v[k * jn + j];
                for c in 0..n {
                    grads[(k * jn + j) * n + c] = lin[k].1[j * n + c] + gam_g[(k * jn + j) * n + c];
                }
            }
        }
        Ok((
            WindowData { start, values, grads },
            WindowReport {
                start,
                length: self.t0,
                iterations: changes.len(),
                changes,
                ratios,
            },
        ))
    }
}

/// Estimated `t̄` and the subinterval length used by [`picard_solve`].
pub fn window_length(sys: &DelaySystem<f64>, pf: &PastFunctional<f64>, cfg: &SolverConfig) -> Result<(f64, f64)> {
    cfg.validate()?;
    if !matches!(pf.regime(), Regime::A1) {
        return Err(Error::Refused(format!(
            "the fixed-point solver needs an invertible α₀ (regime A1); this reduction map is {}",
            pf.regime().label()
        )));
    }
    let tbar = match &cfg.tbar {
        TbarSource::Given(t) => *t,
        TbarSource::Certificate { probes } => {
            let probes = if probes.is_empty() {
                geometric_grid(cfg.horizon.min(sys.delay()) / 100.0, cfg.horizon.min(sys.delay()), 10)
            } else {
                probes.clone()
            };
            let cert = lower_bound_certificate(sys, pf, &probes, cfg.dt)?;
            if !cert.pass {
                return Err(Error::Refused(format!(
                    "covariance lower-bound certificate failed (ĉ = {:e}, t̄ = {})",
                    cert.c_hat, cert.t_bar
                )));
            }
            cert.t_bar
        }
    };
    if !(tbar > 0.0) {
        return Err(Error::Refused(format!("t̄ = {tbar} is not positive")));
    }
    let cap = [sys.delay(), tbar, cfg.horizon, 1.0, cfg.t0.unwrap_or(f64::INFINITY)]
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let windows = (cfg.horizon / cap - 1e-9).ceil().max(1.0);
    Ok((tbar, cfg.horizon / windows))
}

/// Mild solution of `∂_t w = 𝓛w + ψ(w, ∇wG)`, `w(0) = φ̄∘𝒫`, on `[0, T]`:
/// Picard iteration `w ← R̄[φ] + Γw` on subintervals of length `T₀`, each
/// restarted from the previous terminal slice.
pub fn picard_solve(
    sys: &DelaySystem<f64>,
    pf: &PastFunctional<f64>,
    phibar: &Phibar,
    psi: &Nonlinearity,
    cfg: &SolverConfig,
) -> Result<SigmaFunction> {
    let (tbar, t0) = window_length(sys, pf, cfg)?;
    let n = sys.dim();
    if pf.dim() != n {
        return Err(Error::Dimension { expected: n, got: pf.dim() });
    }
    let quad = cfg.quad();
    let table = ResponseTable::new(sys, pf, cfg.horizon, cfg.dt)?;
    let rule = GaussRule::for_dim(n, &quad)?;
    let center = cfg.grid.center.clone().unwrap_or_else(|| vec![0.0; n]);
    if center.len() != n {
        return Err(Error::Dimension { expected: n, got: center.len() });
    }
    let half = match cfg.grid.half_width {
        Some(h) => h,
        None => {
            let q = table.covariance(0.0, table.horizon(), 2)?;
            6.0 * sym::SymEigen::new(&q.value).max().max(0.0).sqrt() + cfg.grid.data_range
        }
    };
    let grid = SpaceGrid::centered(&center, half, cfg.grid.nodes)?;
    let nodes = grid.nodes();
    let setup = Setup {
        sys_n: n,
        grid: &grid,
        nodes: &nodes,
        rule: &rule,
        table: &table,
        floor: cfg.floor,
        k_nodes: cfg.time_nodes,
        t0,
    };
    let count = (cfg.horizon / t0).round() as usize;
    let mut windows: Vec<WindowData> = Vec::with_capacity(count);
    let mut reports = Vec::with_capacity(count);
    for b in 0..count {
        let start = b as f64 * t0;
        let base = match windows.last() {
            None => Base::Phibar(phibar),
            Some(w) => {
                let jn = nodes.len();
                let k = cfg.time_nodes;
                Base::Grid {
                    values: w.values[k * jn..(k + 1) * jn].to_vec(),
                    grads: w.grads[k * jn * n..(k + 1) * jn * n].to_vec(),
                }
            }
        };
        let (w, r) = setup.solve_window(&base, start, psi, cfg)?;
        windows.push(w);
        reports.push(r);
    }
    Ok(SigmaFunction {
        n,
        grid,
        horizon: cfg.horizon,
        t0,
        k_nodes: cfg.time_nodes,
        tbar,
        dt: cfg.dt,
        windows,
        table,
        reports,
        phibar_bound: phibar.bound(),
    })
}
