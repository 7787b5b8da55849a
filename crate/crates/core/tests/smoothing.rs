use delay_smoothing::delay_dynamics::{simulate_ou, BrownianPath};
use delay_smoothing::functionals::observe;
use delay_smoothing::mc::estimate;
use delay_smoothing::smoothing::*;
use delay_smoothing::{systems, Observable, Phibar, ReducedDrift, Segment, Smoothness};

fn head(v: f64) -> Segment {
    Segment::constant(vec![v], &[0.0], 1.0, 100).unwrap()
}

fn ones() -> Segment {
    Segment::constant(vec![1.0], &[1.0], 1.0, 100).unwrap()
}

#[test]
fn s1_covariance_is_t() {
    let (sys, pf) = systems::s1().unwrap();
    for t in [0.1, 0.5, 0.9] {
        let q = covariance(&sys, &pf, 0.0, t, 2, 1e-3).unwrap();
        assert!((q.value.get(0, 0) - t).abs() / t < 1e-10);
        let w = covariance(&sys, &pf, 0.05, t, 2, 1e-3).unwrap();
        assert!((w.value.get(0, 0) - (t - 0.05)).abs() < 1e-12);
    }
    assert!(covariance(&sys, &pf, 0.5, 0.5, 2, 1e-3).is_err());
}

#[test]
fn s2_covariance_matches_riemann_sum() {
    let (sys, pf) = systems::s2().unwrap();
    let q = covariance(&sys, &pf, 0.0, 0.1, 2, 1e-4).unwrap().value.get(0, 0);
    // oracle: fine Euler response at dr = 1e-5, midpoint Riemann sum
    let table = ResponseTable::new(&sys, &pf, 0.1, 1e-5).unwrap();
    let mut acc = 0.0;
    for k in 0..10_000 {
        let m = table.at((k as f64 + 0.5) * 1e-5).get(0, 0);
        acc += m * m * 1e-5;
    }
    assert!((q - acc).abs() < 1e-6, "{q} vs {acc}");
}

#[test]
fn response_matrix_limits() {
    let (sys, pf) = systems::s2().unwrap();
    assert!((response_matrix(&sys, &pf, 0.0, 1e-4).unwrap().get(0, 0) - 1.0).abs() < 1e-12);
    let (sys, pf) = systems::s3().unwrap();
    for s in [1e-3, 1e-4] {
        let m = response_matrix(&sys, &pf, s, s / 100.0).unwrap().get(0, 0);
        assert!((m / s - 1.0).abs() < 2.0 * s + 1e-6, "s={s} M/s={}", m / s);
    }
}

#[test]
fn window_additivity_and_monotonicity() {
    let (sys, pf) = systems::s2().unwrap();
    let table = ResponseTable::new(&sys, &pf, 0.8, 1e-4).unwrap();
    for (s, t) in [(0.1, 0.3), (0.25, 0.8), (0.5, 0.6)] {
        let a = table.covariance(0.0, t, 2).unwrap().value.get(0, 0);
        let b = table.covariance(0.0, s, 2).unwrap().value.get(0, 0);
        let c = table.covariance(s, t, 2).unwrap().value.get(0, 0);
        assert!((a - b - c).abs() < 1e-8);
        assert!(a - b >= -1e-10);
    }
}

#[test]
fn smoothing_rates_by_regime() {
    let ts = geometric_grid(1e-3, 1e-1, 9);
    let (sys, pf) = systems::s1().unwrap();
    let f = smoothing_rate_probe(&sys, &pf, &ts, 1e-4).unwrap();
    assert!((f.slope - 1.0).abs() < 1e-6);
    let (sys, pf) = systems::s2().unwrap();
    let f = smoothing_rate_probe(&sys, &pf, &ts, 1e-5).unwrap();
    assert!((0.9..=1.1).contains(&f.slope), "{}", f.slope);
    let (sys, pf) = systems::s3().unwrap();
    let f = smoothing_rate_probe(&sys, &pf, &ts, 1e-5).unwrap();
    assert!((2.8..=3.2).contains(&f.slope), "{}", f.slope);
}

#[test]
fn fit_refuses_short_span() {
    let pts: Vec<_> = geometric_grid(0.1, 0.5, 6).into_iter().map(|t| (t, t)).collect();
    assert!(fit_loglog(pts).is_err());
}

#[test]
fn cosine_closed_forms() {
    let (sys, pf) = systems::s1().unwrap();
    let q = QuadConfig::default();
    let phi = Phibar::cos();
    for (m, t) in [(0.3, 0.2), (-1.0, 0.7)] {
        let v = ou_apply(&sys, &pf, &phi, t, &head(m), &q).unwrap();
        assert!((v - (-t / 2.0f64).exp() * m.cos()).abs() < 1e-10);
    }
    let g = ou_gradient(&sys, &pf, &phi, 0.4, &head(0.0), &head(1.0), &q).unwrap();
    assert!(g.abs() < 1e-12);
    let c = ou_apply(&sys, &pf, &Phibar::constant(0.7), 0.4, &ones(), &q).unwrap();
    assert!((c - 0.7).abs() < 1e-13);
}

#[test]
fn indicator_gradient_and_rate() {
    let (sys, pf) = systems::s1().unwrap();
    let q = QuadConfig::default();
    let phi = Phibar::indicator(1);
    for t in [0.01, 0.1, 0.5] {
        let g = ou_gradient(&sys, &pf, &phi, t, &head(0.0), &head(1.0), &q).unwrap();
        let want = (2.0 * std::f64::consts::PI * t).powf(-0.5);
        assert!((g - want).abs() / want < 1e-6);
    }
    let ts = geometric_grid(1e-3, 1e-1, 7);
    let f = gradient_rate_probe(&sys, &pf, &phi, &head(0.0), &head(1.0), &ts, &q).unwrap();
    assert!((f.slope + 0.5).abs() < 1e-6);
    let (sys, pf) = systems::s2().unwrap();
    let f = gradient_rate_probe(&sys, &pf, &phi, &head(0.0), &head(1.0), &ts, &q).unwrap();
    assert!((-0.6..=-0.4).contains(&f.slope), "{}", f.slope);
    let f = gradient_rate_probe(&sys, &pf, &Phibar::tanh(1.0), &head(0.0), &head(1.0), &ts, &q).unwrap();
    assert!(f.slope.abs() < 0.1, "{}", f.slope);
}

#[test]
fn gradient_matches_finite_differences() {
    let (sys, pf) = systems::s2().unwrap();
    let q = QuadConfig::default();
    let ctx = OuContext::new(&sys, &pf, 0.3, &q).unwrap();
    let x = Segment::from_fn(vec![0.2], 1.0, 100, |th: f64| vec![(3.0 * th).sin()]).unwrap();
    let h = Segment::from_fn(vec![1.0], 1.0, 100, |th: f64| vec![th]).unwrap();
    for phi in [Phibar::tanh(1.0), Phibar::cos()] {
        let g = ctx.gradient(&phi, 0.3, &x, &h).unwrap();
        let delta = 1e-4 * (1.0 + 0.2);
        let up = ctx.apply(&phi, 0.3, &x.axpy(delta, &h).unwrap()).unwrap();
        let dn = ctx.apply(&phi, 0.3, &x.axpy(-delta, &h).unwrap()).unwrap();
        let fd = (up - dn) / (2.0 * delta);
        assert!((g - fd).abs() <= 1e-3 * fd.abs(), "{g} vs {fd}");
    }
}

#[test]
fn steering_energy_identities() {
    let (sys, pf) = systems::s1().unwrap();
    let q = QuadConfig::default();
    for t in [0.1, 0.4] {
        let e = steering_energy(&sys, &pf, t, &head(1.0), &q).unwrap();
        assert!((e - t.powf(-0.5)).abs() < 1e-9);
    }
    assert_eq!(steering_energy(&sys, &pf, 0.3, &head(0.0), &q).unwrap(), 0.0);
    let (sys, pf) = systems::s2().unwrap();
    let ctx = OuContext::new(&sys, &pf, 0.2, &q).unwrap();
    let e = ctx.steering_energy(0.2, &head(1.0)).unwrap();
    let v = ctx.mean(&head(1.0), 0.2).unwrap()[0];
    let qq = ctx.covariance(0.0, 0.2).unwrap().value.get(0, 0);
    assert!((e * e - v * v / qq).abs() < 1e-10);
}

#[test]
fn ou_apply_matches_monte_carlo() {
    let (sys, pf) = systems::s2().unwrap();
    let q = QuadConfig::default();
    let phi = Phibar::tanh(1.0);
    let obs = Observable::new(pf.clone(), phi.clone());
    let t = 0.3;
    let dt = 0.01;
    let x = ones();
    let samples: Vec<f64> = (0..20_000)
        .map(|p| {
            let noise = BrownianPath::generate(1, 30, dt, 11, p);
            let path = simulate_ou(&sys, &x, t, dt, &noise).unwrap();
            observe(&obs, path.last().unwrap())
        })
        .collect();
    let mc = estimate(&samples);
    // compare with the quadrature at the same Euler step
    let q = QuadConfig { dt, ..q };
    let v = ou_apply(&sys, &pf, &phi, t, &x, &q).unwrap();
    assert!(mc.covers(v, 3.0, 0.0), "{v} vs {mc:?}");
}

#[test]
fn lower_bound_certificate_on_a1_and_a2() {
    let (sys, pf) = systems::s2().unwrap();
    let c = lower_bound_certificate(&sys, &pf, &[0.01, 0.05, 0.1, 0.2, 0.4], 1e-4).unwrap();
    assert!(c.pass && c.c_hat > 0.5 && c.t_bar >= 0.2, "{c:?}");
    let (sys, pf) = systems::s3().unwrap();
    let c = lower_bound_certificate(&sys, &pf, &[0.01, 0.05, 0.1], 1e-4).unwrap();
    assert!(!c.pass);
}

#[test]
fn perturbed_estimators_agree() {
    let (sys, pf) = systems::s2().unwrap();
    let mc = McConfig {
        paths: 20_000,
        seed: 3,
        dt: 0.01,
    };
    let drift = ReducedDrift::tanh(pf.clone());
    let e = perturbed_apply(&sys, &pf, &drift, &Phibar::tanh(1.0), 0.5, &ones(), &mc).unwrap();
    assert!(e.direct.agrees_with(&e.girsanov, 3.0), "{e:?}");
    assert!(e.weight_mean.covers(1.0, 3.0, 0.0));
    assert!(!e.flagged);
    let c = perturbed_apply(&sys, &pf, &drift, &Phibar::constant(0.25), 0.5, &ones(), &mc).unwrap();
    assert_eq!(c.direct.mean, 0.25);
    let zero = ReducedDrift::zero(pf.clone());
    let z = perturbed_apply(&sys, &pf, &zero, &Phibar::tanh(1.0), 0.5, &ones(), &mc).unwrap();
    assert_eq!(z.weight_mean.mean, 1.0);
    let v = ou_apply(&sys, &pf, &Phibar::tanh(1.0), 0.5, &ones(), &QuadConfig { dt: 0.01, ..Default::default() }).unwrap();
    assert!(z.direct.covers(v, 3.0, 0.0) && z.girsanov.covers(v, 3.0, 0.0));
}

#[test]
fn perturbed_gradient_formula_vs_fd() {
    let (sys, pf) = systems::s2().unwrap();
    let mc = McConfig {
        paths: 20_000,
        seed: 5,
        dt: 0.01,
    };
    let h = head(1.0);
    let x = ones();
    let drift = ReducedDrift::tanh(pf.clone());
    let g = perturbed_gradient(&sys, &pf, &drift, &Phibar::tanh(1.0), 0.5, &x, &h, &mc, GradientPath::Both, 1e-3).unwrap();
    let (f, d) = (g.formula.unwrap(), g.fd.unwrap());
    assert!((f.mean - d.mean).abs() <= 3.0 * f.se.hypot(d.se) + 1e-5, "{f:?} {d:?}");

    let zero = ReducedDrift::zero(pf.clone());
    let g = perturbed_gradient(&sys, &pf, &zero, &Phibar::cos(), 0.5, &x, &h, &mc, GradientPath::Formula, 1e-3).unwrap();
    let q = QuadConfig { dt: 0.01, ..Default::default() };
    let exact = ou_gradient(&sys, &pf, &Phibar::cos(), 0.5, &x, &h, &q).unwrap();
    assert!(g.formula.unwrap().covers(exact, 3.0, 0.0));

    let bad = perturbed_gradient(&sys, &pf, &zero, &Phibar::indicator(1), 0.5, &x, &h, &mc, GradientPath::Formula, 1e-3);
    assert!(matches!(bad, Err(delay_smoothing::Error::Smoothness { .. })));
    assert_eq!(Phibar::indicator(1).smoothness(), Smoothness::Bounded);
}

#[test]
fn strong_feller_failure_before_delay() {
    let (sys, _) = systems::s1().unwrap();
    let x = Segment::zeros(1, 1.0, 100).unwrap();
    let r = strong_feller_failure_probe(&sys, 0.5, -0.9, &x, &QuadConfig::default()).unwrap();
    assert!(r.deterministic);
    assert!(r.growth >= 100.0, "{r:?}");
    assert!(r.control_bounded);
    assert!(!r.point_bounded);
    let at = |d: f64| r.rows.iter().find(|w| w.delta == d).unwrap().point_ratio;
    assert!((at(1e-3) - 1e3).abs() < 1e-6 && (at(1e-5) - 1e5).abs() < 1e-4);
}

#[test]
fn strong_feller_bounded_after_delay() {
    let (sys, _) = systems::s1_with_delay(0.4).unwrap();
    let x = Segment::zeros(1, 0.4, 100).unwrap();
    let q = QuadConfig::default();
    let r = strong_feller_failure_probe(&sys, 0.5, -0.3, &x, &q).unwrap();
    assert!(!r.deterministic && r.point_bounded && r.control_bounded, "{r:?}");
    // MC cross-check of P(y(0.2) > 0) under the shifted datum
    let h = feller_direction(&x, 0.5, -0.3).unwrap();
    let xd = x.axpy(0.1, &h).unwrap();
    let dt = 0.004;
    let samples: Vec<f64> = (0..20_000)
        .map(|p| {
            let noise = BrownianPath::generate(1, 125, dt, 2, p);
            let path = simulate_ou(&sys, &xd, 0.5, dt, &noise).unwrap();
            let seg = path.last().unwrap();
            if seg.eval_tail(-0.3)[0] > 0.0 { 1.0 } else { 0.0 }
        })
        .collect();
    let mc = estimate(&samples);
    let want = delay_smoothing::quadrature::normal_cdf(0.1 / 0.2f64.sqrt());
    assert!(mc.covers(want, 3.0, 0.0), "{mc:?} vs {want}");
}
