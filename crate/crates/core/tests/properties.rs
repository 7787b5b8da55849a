use std::sync::OnceLock;

use proptest::prelude::*;

use delay_smoothing::control::{hamiltonian, hamiltonian_nonlinearity, select_upsilon, ControlSet, RunningCost};
use delay_smoothing::delay_dynamics::{evolve_deterministic, BrownianPath};
use delay_smoothing::functionals::apply_reduction;
use delay_smoothing::linalg::sym;
use delay_smoothing::smoothing::{OuContext, QuadConfig, ResponseTable};
use delay_smoothing::{systems, Phibar, Segment, Smoothness};

fn seg(h: f64, a: f64, b: f64) -> Segment {
    Segment::from_fn(vec![h], 1.0, 100, |th| vec![a * th.sin() + b * th * th]).unwrap()
}

fn s2_table() -> &'static ResponseTable {
    static T: OnceLock<ResponseTable> = OnceLock::new();
    T.get_or_init(|| {
        let (sys, pf) = systems::s2().unwrap();
        ResponseTable::new(&sys, &pf, 1.0, 1e-4).unwrap()
    })
}

fn costs() -> Vec<(RunningCost, ControlSet)> {
    vec![
        (RunningCost::quadratic(1.0), ControlSet::interval(-1.0, 1.0).unwrap()),
        (RunningCost::new("quartic", |u| u[0].powi(4) + 0.3 * u[0]), ControlSet::interval(-2.0, 0.5).unwrap()),
        (
            RunningCost::new("abs", |u| u[0].abs() + (u[1] - 0.2).abs()),
            ControlSet::boxed(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap(),
        ),
        (
            RunningCost::new("finite", |u| u.iter().map(|v| v * v).sum()),
            ControlSet::finite(vec![vec![0.0, 0.0], vec![1.0, -1.0], vec![-2.0, 0.5]]).unwrap(),
        ),
    ]
}

fn z_for(dim: usize, z: [f64; 2]) -> Vec<f64> {
    z[..dim].to_vec()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn evolution_is_linear(h1 in -2.0..2.0f64, a1 in -2.0..2.0f64, b1 in -2.0..2.0f64,
                           h2 in -2.0..2.0f64, a2 in -2.0..2.0f64, b2 in -2.0..2.0f64,
                           al in -3.0..3.0f64, be in -3.0..3.0f64, k in 1usize..250) {
        let (sys, _) = systems::s2().unwrap();
        let t = k as f64 * 0.01;
        let x = seg(h1, a1, b1);
        let z = seg(h2, a2, b2);
        let comb = x.scaled(al).axpy(be, &z).unwrap();
        let lhs = evolve_deterministic(&sys, &comb, t, 0.01).unwrap();
        let rhs = evolve_deterministic(&sys, &x, t, 0.01).unwrap().scaled(al)
            .axpy(be, &evolve_deterministic(&sys, &z, t, 0.01).unwrap()).unwrap();
        let scale = 1.0 + al.abs() * 4.0 + be.abs() * 4.0;
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-12 * scale);
    }

    #[test]
    fn history_is_shifted_not_integrated(h in -2.0..2.0f64, a in -2.0..2.0f64, b in -2.0..2.0f64, k in 1usize..99) {
        let (sys, _) = systems::s2().unwrap();
        let x = seg(h, a, b);
        let t = k as f64 * 0.01;
        let y = evolve_deterministic(&sys, &x, t, 0.01).unwrap();
        for j in 0..(100 - k) {
            prop_assert_eq!(y.tail_point(j), x.tail_point(j + k));
        }
    }

    #[test]
    fn reduction_is_linear(h1 in -2.0..2.0f64, a1 in -2.0..2.0f64, b1 in -2.0..2.0f64,
                           h2 in -2.0..2.0f64, a2 in -2.0..2.0f64, b2 in -2.0..2.0f64,
                           al in -3.0..3.0f64, be in -3.0..3.0f64) {
        for (_, pf) in [systems::s1().unwrap(), systems::s2().unwrap(), systems::s3().unwrap()] {
            let x = seg(h1, a1, b1);
            let z = seg(h2, a2, b2);
            let lhs = apply_reduction(&pf, &x.scaled(al).axpy(be, &z).unwrap())[0];
            let rhs = al * apply_reduction(&pf, &x)[0] + be * apply_reduction(&pf, &z)[0];
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn noise_streams_repeat(seed in any::<u64>(), stream in 0u64..1000) {
        let a = BrownianPath::<f64>::generate(2, 50, 0.01, seed, stream);
        let b = BrownianPath::<f64>::generate(2, 50, 0.01, seed, stream);
        let c = BrownianPath::<f64>::generate(2, 50, 0.01, seed, stream + 1);
        for k in 0..50 {
            prop_assert_eq!(a.increment(k), b.increment(k));
        }
        prop_assert_ne!(a.increment(0), c.increment(0));
    }

    #[test]
    fn covariance_windows_add_up(r in 0.0..1.0f64, p in 0.05..0.95f64) {
        let table = s2_table();
        let t = 0.02 + 0.98 * r;
        let s = p * t;
        let full = table.covariance(0.0, t, 2).unwrap().value;
        let head = table.covariance(0.0, s, 2).unwrap().value;
        let win = table.covariance(s, t, 2).unwrap().value;
        prop_assert!((full.get(0, 0) - head.get(0, 0) - win.get(0, 0)).abs() < 1e-8);
        // monotone in t: the increment is PSD
        prop_assert!(sym::lambda_min(&win) >= -1e-10);
        prop_assert!(sym::lambda_min(&full.sub(&head)) >= -1e-10);
    }

    #[test]
    fn ou_apply_is_a_contraction(t in 0.01..1.0f64, y in -5.0..5.0f64, k in 0.5..5.0f64) {
        let (sys, pf) = systems::s2().unwrap();
        let ctx = OuContext::new(&sys, &pf, 1.0, &QuadConfig::default()).unwrap();
        let phi = Phibar::tanh(k);
        let v = ctx.apply_reduced(&phi, t, &[y]).unwrap();
        prop_assert!(v.abs() <= phi.bound() + 1e-12);
        let c = Phibar::new("wave", Smoothness::Bounded, 2.0, move |y| 2.0 * (k * y[0]).sin());
        prop_assert!(ctx.apply_reduced(&c, t, &[y]).unwrap().abs() <= 2.0 + 1e-12);
    }

    #[test]
    fn psi_is_the_infimum(z0 in -4.0..4.0f64, z1 in -4.0..4.0f64) {
        for (g, set) in costs() {
            let z = z_for(set.dim(), [z0, z1]);
            let psi = hamiltonian(&g, &set, &z);
            for u in set.samples(21) {
                let val = g.eval(&u) + z.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>();
                prop_assert!(psi <= val + 1e-9, "{}: psi {psi} > {val} at {u:?}", g.name());
            }
            let u = select_upsilon(&g, &set, &z);
            prop_assert!(set.contains(&u, 1e-12));
            let at = g.eval(&u) + z.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>();
            prop_assert!((psi - at).abs() <= 1e-12 * (1.0 + psi.abs()));
        }
    }

    #[test]
    fn psi_envelope_lipschitz(a0 in -4.0..4.0f64, a1 in -4.0..4.0f64, b0 in -4.0..4.0f64, b1 in -4.0..4.0f64) {
        for (g, set) in costs() {
            let za = z_for(set.dim(), [a0, a1]);
            let zb = z_for(set.dim(), [b0, b1]);
            let dz = za.iter().zip(&zb).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            let lip = hamiltonian_nonlinearity(&g, &set).lipschitz();
            prop_assert!(lip <= set.max_norm() + 1e-15);
            // the numeric argmin is exact to its tolerance, not to machine precision
            let d = (hamiltonian(&g, &set, &za) - hamiltonian(&g, &set, &zb)).abs();
            prop_assert!(d <= lip * dz + 1e-7, "{}: {d} > {lip}·{dz}", g.name());
        }
    }

    #[test]
    fn selection_is_deterministic(z0 in -4.0..4.0f64, z1 in -4.0..4.0f64) {
        for (g, set) in costs() {
            let z = z_for(set.dim(), [z0, z1]);
            let a = select_upsilon(&g, &set, &z);
            let b = select_upsilon(&g, &set, &z);
            prop_assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        }
    }
}
