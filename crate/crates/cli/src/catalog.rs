//! Named systems, observables, drifts, nonlinearities and benchmark problems.

use std::collections::BTreeMap;
use std::sync::Arc;

use delay_smoothing::control::{s1_benchmark, ControlProblem};
use delay_smoothing::kolmogorov::Nonlinearity;
use delay_smoothing::{systems, DelaySystem, PastFunctional, Phibar, ReducedDrift, Result};

type SystemFn = Arc<dyn Fn() -> Result<(DelaySystem<f64>, PastFunctional<f64>)> + Send + Sync>;
/// `(dimension, optional scalar parameter)`.
type ObservableFn = Arc<dyn Fn(usize, Option<f64>) -> Phibar + Send + Sync>;
type DriftFn = Arc<dyn Fn(PastFunctional<f64>, &[f64]) -> ReducedDrift + Send + Sync>;
type PsiFn = Arc<dyn Fn(usize, &[f64]) -> Nonlinearity + Send + Sync>;
type BenchmarkFn = Arc<dyn Fn() -> Result<ControlProblem> + Send + Sync>;

#[derive(Clone, Default)]
pub struct Catalog {
    systems: BTreeMap<String, SystemFn>,
    observables: BTreeMap<String, ObservableFn>,
    drifts: BTreeMap<String, DriftFn>,
    psis: BTreeMap<String, PsiFn>,
    benchmarks: BTreeMap<String, BenchmarkFn>,
}

fn first_or(p: &[f64], d: f64) -> f64 {
    p.first().copied().unwrap_or(d)
}

fn vector(p: &[f64], n: usize, d: f64) -> Vec<f64> {
    if p.is_empty() {
        vec![d; n]
    } else {
        p.to_vec()
    }
}

impl Catalog {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn builtin() -> Self {
        let mut c = Self::empty();
        for name in systems::NAMES {
            c.register_system(name, move || systems::by_name(name).expect("listed system"));
        }
        c.register_observable("indicator", |n, _| Phibar::indicator(n));
        c.register_observable("tanh", |_, k| Phibar::tanh(k.unwrap_or(1.0)));
        c.register_observable("cos", |_, _| Phibar::cos());
        c.register_observable("smoothstep", |_, _| Phibar::smoothstep());
        c.register_observable("constant", |_, k| Phibar::constant(k.unwrap_or(1.0)));
        c.register_drift("zero", |pf, _| ReducedDrift::zero(pf));
        c.register_drift("identity", |pf, _| ReducedDrift::identity(pf));
        c.register_drift("tanh", |pf, _| ReducedDrift::tanh(pf));
        c.register_drift("constant", |pf, p| {
            let n = pf.dim();
            ReducedDrift::constant(pf, vector(p, n, 1.0))
        });
        c.register_psi("zero", |_, _| Nonlinearity::zero());
        c.register_psi("constant", |_, p| Nonlinearity::constant(first_or(p, 1.0)));
        c.register_psi("linear-value", |_, p| Nonlinearity::linear_value(first_or(p, 1.0)));
        c.register_psi("gradient-linear", |n, p| Nonlinearity::gradient_linear(vector(p, n, 1.0)));
        c.register_benchmark("s1-quadratic", s1_benchmark);
        c
    }

    pub fn register_system(
        &mut self,
        name: &str,
        f: impl Fn() -> Result<(DelaySystem<f64>, PastFunctional<f64>)> + Send + Sync + 'static,
    ) {
        self.systems.insert(name.to_string(), Arc::new(f));
    }

    pub fn register_observable(&mut self, name: &str, f: impl Fn(usize, Option<f64>) -> Phibar + Send + Sync + 'static) {
        self.observables.insert(name.to_string(), Arc::new(f));
    }

    pub fn register_drift(&mut self, name: &str, f: impl Fn(PastFunctional<f64>, &[f64]) -> ReducedDrift + Send + Sync + 'static) {
        self.drifts.insert(name.to_string(), Arc::new(f));
    }

    pub fn register_psi(&mut self, name: &str, f: impl Fn(usize, &[f64]) -> Nonlinearity + Send + Sync + 'static) {
        self.psis.insert(name.to_string(), Arc::new(f));
    }

    pub fn register_benchmark(&mut self, name: &str, f: impl Fn() -> Result<ControlProblem> + Send + Sync + 'static) {
        self.benchmarks.insert(name.to_string(), Arc::new(f));
    }

    pub fn system(&self, name: &str) -> Option<Result<(DelaySystem<f64>, PastFunctional<f64>)>> {
        self.systems
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, f)| f())
    }

    pub fn observable(&self, name: &str, n: usize, param: Option<f64>) -> Option<Phibar> {
        self.observables.get(name).map(|f| f(n, param))
    }

    pub fn drift(&self, name: &str, pf: PastFunctional<f64>, param: &[f64]) -> Option<ReducedDrift> {
        self.drifts.get(name).map(|f| f(pf, param))
    }

    pub fn psi(&self, name: &str, n: usize, param: &[f64]) -> Option<Nonlinearity> {
        self.psis.get(name).map(|f| f(n, param))
    }

    pub fn benchmark(&self, name: &str) -> Option<Result<ControlProblem>> {
        self.benchmarks.get(name).map(|f| f())
    }

    /// `(kind, name)` pairs in a fixed order.
    pub fn listing(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        out.extend(self.systems.keys().map(|k| ("system", k.clone())));
        out.extend(self.observables.keys().map(|k| ("observable", k.clone())));
        out.extend(self.drifts.keys().map(|k| ("drift", k.clone())));
        out.extend(self.psis.keys().map(|k| ("psi", k.clone())));
        out.extend(self.benchmarks.keys().map(|k| ("benchmark", k.clone())));
        out
    }
}

/// The catalog the binary starts from.
pub fn default_catalog() -> Catalog {
    if cfg!(feature = "builtin-catalog") {
        Catalog::builtin()
    } else {
        Catalog::empty()
    }
}
