use delay_smoothing::delay_dynamics::{simulate_controlled, BrownianPath, Control};
use delay_smoothing::functionals::observe;
use delay_smoothing::kolmogorov::*;
use delay_smoothing::mc::{estimate, par_map};
use delay_smoothing::smoothing::{McConfig, QuadConfig};
use delay_smoothing::{systems, Error, Observable, Phibar, ReducedDrift, Segment};

fn cfg(horizon: f64) -> SolverConfig {
    SolverConfig {
        horizon,
        ..SolverConfig::default()
    }
}

fn interior(w: &SigmaFunction, r: f64) -> Vec<usize> {
    (0..w.grid().len()).filter(|&j| w.grid().node(j)[0].abs() <= r).collect()
}

#[test]
fn zero_nonlinearity_returns_linear_part() {
    let (sys, pf) = systems::s1().unwrap();
    let w = picard_solve(&sys, &pf, &Phibar::cos(), &Nonlinearity::zero(), &cfg(1.0)).unwrap();
    assert!(w.reports().iter().all(|r| r.iterations == 1));
    for (t, v, _) in w.slices() {
        for (j, y) in w.grid().nodes().iter().enumerate() {
            let want = (-t / 2.0f64).exp() * y[0].cos();
            assert!((v[j] - want).abs() < 1e-8, "t={t} y={y:?}");
            assert!(v[j].abs() <= 1.0 + 1e-12);
        }
    }
}

#[test]
fn value_linear_nonlinearity_matches_integrating_factor() {
    let (sys, pf) = systems::s1().unwrap();
    let c = 0.8;
    let mut cf = cfg(1.0);
    cf.tol = 1e-10;
    let w = picard_solve(&sys, &pf, &Phibar::cos(), &Nonlinearity::linear_value(c), &cf).unwrap();
    let nodes = w.grid().nodes();
    let mut worst = 0.0f64;
    for (t, v, _) in w.slices() {
        for j in interior(&w, 2.5) {
            let want = ((c - 0.5) * t).exp() * nodes[j][0].cos();
            if want.abs() > 1e-2 {
                worst = worst.max(((v[j] - want) / want).abs());
            }
        }
    }
    assert!(worst < 1e-4, "worst relative error {worst}");
    for r in w.reports() {
        assert!(r.ratios.iter().all(|x| *x < 1.0), "{r:?}");
    }
}

#[test]
fn gamma_convolution_closed_forms() {
    let (sys, pf) = systems::s1().unwrap();
    let q = QuadConfig { dt: 1e-3, ..Default::default() };
    let g = picard_solve(&sys, &pf, &Phibar::cos(), &Nonlinearity::zero(), &cfg(1.0)).unwrap();
    for t in [0.2, 0.7] {
        let y = [0.4];
        assert_eq!(gamma_convolution(&sys, &pf, &g, &Nonlinearity::zero(), t, &y, &q).unwrap(), 0.0);
        let one = gamma_convolution(&sys, &pf, &g, &Nonlinearity::constant(1.0), t, &y, &q).unwrap();
        assert!((one - t).abs() < 1e-12);
        let v = gamma_convolution(&sys, &pf, &g, &Nonlinearity::linear_value(1.0), t, &y, &q).unwrap();
        let want = t * (-t / 2.0f64).exp() * 0.4f64.cos();
        assert!((v - want).abs() < 1e-4 * want.abs(), "{v} vs {want}");
        let k = Segment::constant(vec![1.0], &[0.0], 1.0, 100).unwrap();
        let c = gamma_gradient(&sys, &pf, &g, &Nonlinearity::constant(2.0), t, &y, Direction::Segment(&k), &q).unwrap();
        assert!(c.abs() < 1e-10);
    }
}

#[test]
fn gamma_gradient_matches_finite_differences() {
    let (sys, pf) = systems::s1().unwrap();
    let q = QuadConfig { dt: 1e-3, ..Default::default() };
    let g = picard_solve(&sys, &pf, &Phibar::tanh(1.0), &Nonlinearity::zero(), &cfg(1.0)).unwrap();
    let psi = Nonlinearity::new("mixed", 1.0, Arity::Full, |v, z| (v + z[0]).sin());
    let t = 0.6;
    let y = 0.3;
    let gd = gamma_gradient(&sys, &pf, &g, &psi, t, &[y], Direction::GColumn(0), &q).unwrap();
    let h = 1e-4;
    let up = gamma_convolution(&sys, &pf, &g, &psi, t, &[y + h], &q).unwrap();
    let dn = gamma_convolution(&sys, &pf, &g, &psi, t, &[y - h], &q).unwrap();
    let fd = (up - dn) / (2.0 * h);
    assert!((gd - fd).abs() <= 1e-3 * fd.abs(), "{gd} vs {fd}");
}

#[test]
fn gradient_only_solution_matches_feynman_kac() {
    let (sys, pf) = systems::s2().unwrap();
    let horizon = 0.5;
    let phi = Phibar::tanh(1.0);
    let w = picard_solve(&sys, &pf, &phi, &Nonlinearity::gradient_linear(vec![-1.0]), &cfg(horizon)).unwrap();
    for r in w.reports() {
        assert!(r.ratios.iter().all(|x| *x < 1.0), "{r:?}");
    }
    let drift = ReducedDrift::constant(pf.clone(), vec![-1.0]);
    let obs = Observable::new(pf.clone(), phi.clone());
    let dt = 0.005;
    for x in [
        Segment::constant(vec![0.0], &[0.0], 1.0, 100).unwrap(),
        Segment::constant(vec![1.0], &[0.5], 1.0, 100).unwrap(),
        Segment::from_fn(vec![-0.5], 1.0, 100, |th: f64| vec![(4.0 * th).sin()]).unwrap(),
    ] {
        let ev = sigma_eval(&w, &sys, &pf, horizon, &x).unwrap();
        assert!(!ev.extrapolated);
        let samples: Vec<f64> = par_map(20_000, |p| {
            let noise = BrownianPath::generate(1, 100, dt, 77, p as u64);
            let path = simulate_controlled(&sys, &x, Some(&drift), &Control::Zero, horizon, dt, &noise).unwrap();
            observe(&obs, path.last().unwrap())
        });
        let mc = estimate(&samples);
        assert!(mc.covers(ev.value, 3.0, 2e-3), "{} vs {mc:?}", ev.value);
    }
}

#[test]
fn sigma_eval_collapses_and_matches_fd() {
    let (sys, pf) = systems::s1().unwrap();
    let w = picard_solve(&sys, &pf, &Phibar::tanh(1.0), &Nonlinearity::linear_value(0.3), &cfg(1.0)).unwrap();
    let a = Segment::constant(vec![0.2], &[0.0], 1.0, 100).unwrap();
    let b = Segment::constant(vec![0.2], &[5.0], 1.0, 100).unwrap();
    let ea = sigma_eval(&w, &sys, &pf, 0.6, &a).unwrap();
    let eb = sigma_eval(&w, &sys, &pf, 0.6, &b).unwrap();
    assert_eq!(ea, SigmaEval { y: ea.y.clone(), ..eb.clone() });
    let h = 1e-4;
    let up = sigma_eval(&w, &sys, &pf, 0.6, &Segment::constant(vec![0.2 + h], &[0.0], 1.0, 100).unwrap()).unwrap();
    let dn = sigma_eval(&w, &sys, &pf, 0.6, &Segment::constant(vec![0.2 - h], &[0.0], 1.0, 100).unwrap()).unwrap();
    let fd = (up.value - dn.value) / (2.0 * h);
    assert!((ea.grad_g[0] - fd).abs() <= 1e-2 * fd.abs(), "{} vs {fd}", ea.grad_g[0]);
    let e0 = sigma_eval(&w, &sys, &pf, 0.0, &a).unwrap();
    assert!((e0.value - 0.2f64.tanh()).abs() < 1e-4);
}

#[test]
fn c1_data_keeps_gradient_bounded_near_zero() {
    let (sys, pf) = systems::s1().unwrap();
    let w = picard_solve(&sys, &pf, &Phibar::tanh(1.0), &Nonlinearity::gradient_linear(vec![0.5]), &cfg(1.0)).unwrap();
    let sup = w
        .slices()
        .iter()
        .flat_map(|(_, _, g)| g.iter().map(|v| v.abs()))
        .fold(0.0, f64::max);
    assert!(sup <= 1.0 + 1e-3, "{sup}");
}

#[test]
fn sigma_estimate_stable_under_refinement() {
    let (sys, pf) = systems::s2().unwrap();
    let psi = Nonlinearity::gradient_linear(vec![-1.0]);
    let phi = Phibar::indicator(1);
    let mut c = cfg(1.0);
    c.grid.nodes = 61;
    c.time_nodes = 24;
    let coarse = picard_solve(&sys, &pf, &phi, &psi, &c).unwrap().scaled_gradient_sup();
    c.grid.nodes = 121;
    c.time_nodes = 48;
    let fine = picard_solve(&sys, &pf, &phi, &psi, &c).unwrap().scaled_gradient_sup();
    assert!(((coarse - fine) / fine).abs() <= 0.2, "{coarse} vs {fine}");
}

#[test]
fn regime_a2_is_refused() {
    let (sys, pf) = systems::s3().unwrap();
    let r = picard_solve(&sys, &pf, &Phibar::cos(), &Nonlinearity::zero(), &cfg(0.5));
    assert!(matches!(r, Err(Error::Refused(_))));
}

#[test]
fn linear_solve_terminal_and_zero_drift() {
    let (sys, pf) = systems::s2().unwrap();
    let x = Segment::constant(vec![1.0], &[1.0], 1.0, 100).unwrap();
    let mc = McConfig { paths: 2000, seed: 1, dt: 0.01 };
    let zero = ReducedDrift::zero(pf.clone());
    let e = linear_solve(&sys, &pf, &zero, &Phibar::cos(), 1.0, 1.0, &x, &mc).unwrap();
    assert!((e.direct.mean - 2.0f64.cos()).abs() < 1e-12);
    let r = reduced_ou(&sys, &pf, &Phibar::cos(), 0.0, &[0.3], &QuadConfig::default()).unwrap();
    assert_eq!(r, 0.3f64.cos());
}
