use num_complex::Complex;
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

use repulse_core::evolution::{Densities, NodePotential};
use repulse_core::highdim::mu_coefficient;
use repulse_core::modified_propagator::{u_vec, PhaseShift, PhaseShiftVariant};
use repulse_core::potentials::{truncate_to_type1, MomentCache, PotentialSpec};
use repulse_core::transforms::{energy_norm, sine_forward, sine_inverse, GridFunction, GridSpec};
use repulse_core::FieldState;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, rng_seed: RngSeed::Fixed(0x5eed_0001), failure_persistence: None, ..ProptestConfig::default() }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

fn grid_values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

fn spec_strategy() -> impl Strategy<Value = PotentialSpec> {
    prop_oneof![
        (0.3f64..1.9, 0.1f64..3.0).prop_map(|(b, s)| PotentialSpec::shifted_inverse_power(b, s)),
        (0.3f64..1.9, 0.05f64..2.0).prop_map(|(b, d)| PotentialSpec::smoothed_inverse_power(b, d)),
        (0.3f64..1.9).prop_map(PotentialSpec::inverse_power),
    ]
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn potentials_decrease(spec in spec_strategy(), x1 in 1e-3f64..1e4, gap in 1e-3f64..1e3) {
        let x2 = x1 + gap;
        prop_assert!(spec.eval_q(x2).unwrap() < spec.eval_q(x1).unwrap());
    }

    #[test]
    fn moments_match_simpson(beta in 0.35f64..0.95, shift in 0.5f64..2.0, t in 2.0f64..500.0, j in 1usize..=2) {
        let spec = PotentialSpec::shifted_inverse_power(beta, shift);
        let m = MomentCache::new(&spec, 1.0, 2).unwrap().moment(j, t).unwrap();
        let oracle = simpson(|x| spec.q(x).powi(j as i32), 1.0, t, 20000);
        prop_assert!((m - oracle).abs() <= 1e-8 * oracle.abs(), "{} vs {}", m, oracle);
    }

    #[test]
    fn integrable_first_moment_stays_bounded(s in 1.05f64..1.95) {
        let c = MomentCache::new(&PotentialSpec::inverse_power(s), 1.0, 1).unwrap();
        let (a, b) = (c.moment(1, 1e3).unwrap(), c.moment(1, 1e6).unwrap());
        prop_assert!(b - a < 10.0 * a * 10f64.powf(-3.0 * (s - 1.0)));
    }

    #[test]
    fn truncation_is_repulsive(beta in 0.3f64..1.9, shift in prop::option::of(0.1f64..3.0)) {
        let base = match shift {
            Some(s) => PotentialSpec::shifted_inverse_power(beta, s),
            None => PotentialSpec::inverse_power(beta),
        };
        let t = truncate_to_type1(&base);
        for i in 0..2000 {
            let x = i as f64 * 0.01;
            let (q, dq) = t.eval_pair(x).unwrap();
            prop_assert!(q > 0.0 && dq < 0.0, "x = {}: q = {}, q' = {}", x, q, dq);
        }
    }

    #[test]
    fn admissibility_thresholds(beta in 0.05f64..3.0) {
        prop_assert_eq!(PhaseShiftVariant::Full.admissible(beta), beta > 1.0 / 3.0);
        prop_assert_eq!(PhaseShiftVariant::Simple.admissible(beta), beta > 0.5);
        prop_assert_eq!(PhaseShiftVariant::None.admissible(beta), beta > 1.0);
    }

    #[test]
    fn variants_agree_up_to_a_constant(beta in 0.9f64..1.5, k in 1.0f64..4.0, t in 5e3f64..1e4) {
        let spec = PotentialSpec::inverse_power(beta);
        let f = PhaseShift::new(PhaseShiftVariant::Full, &spec).unwrap();
        let s = PhaseShift::new(PhaseShiftVariant::Simple, &spec).unwrap();
        let delta = f.value(k, 1e4).unwrap() - s.value(k, 1e4).unwrap();
        let gap = f.value(k, t).unwrap() - s.value(k, t).unwrap();
        prop_assert!((gap - delta).abs() < 1e-3);
    }
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn plancherel(values in grid_values(255), length in 10.0f64..500.0) {
        let g = GridSpec::new(length, 255).unwrap();
        let f = GridFunction::from_real(g, &values).unwrap();
        let s = sine_forward(&f);
        let lhs: f64 = s.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * 2.0 / std::f64::consts::PI * g.dk();
        let rhs: f64 = values.iter().map(|v| v * v).sum::<f64>() * g.dx();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
    }

    #[test]
    fn sine_round_trip(values in grid_values(127)) {
        let g = GridSpec::new(64.0, 127).unwrap();
        let f = GridFunction::from_real(g, &values).unwrap();
        let back = sine_inverse(&sine_forward(&f));
        for (a, b) in back.values.iter().zip(&f.values) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn sine_forward_is_linear_and_real(a in grid_values(127), b in grid_values(127), s in -3.0f64..3.0) {
        let g = GridSpec::new(40.0, 127).unwrap();
        let fa = GridFunction::from_real(g, &a).unwrap();
        let fb = GridFunction::from_real(g, &b).unwrap();
        let combo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + s * y).collect();
        let fc = sine_forward(&GridFunction::from_real(g, &combo).unwrap());
        let (sa, sb) = (sine_forward(&fa), sine_forward(&fb));
        for m in 0..127 {
            prop_assert!((fc.values[m] - (sa.values[m] + sb.values[m] * s)).norm() < 1e-12);
            prop_assert_eq!(sa.values[m].im, 0.0);
        }
    }

    #[test]
    fn energy_norm_triangle(a in grid_values(254), b in grid_values(254), c in grid_values(254)) {
        let g = GridSpec::new(30.0, 127).unwrap();
        let pair = |v: &[f64]| (GridFunction::from_real(g, &v[..127]).unwrap(), GridFunction::from_real(g, &v[127..]).unwrap());
        let n = |v: &[f64]| { let (x, y) = pair(v); energy_norm(&x, &y).unwrap() };
        let sum = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| x + y).collect::<Vec<f64>>();
        prop_assert!(n(&sum(&a, &b)) <= n(&a) + n(&b) + 1e-12);
        prop_assert!(n(&sum(&b, &c)) <= n(&b) + n(&c) + 1e-12);
        prop_assert!(n(&sum(&sum(&a, &b), &c)) <= n(&a) + n(&b) + n(&c) + 1e-12);
    }

    #[test]
    fn densities_split_and_morawetz_sign(w in grid_values(199), wt in grid_values(199), spec in spec_strategy()) {
        let g = GridSpec::new(20.0, 199).unwrap();
        let pot = NodePotential::new(&spec, &g).unwrap();
        let d = Densities::new(&FieldState::new(g, w, wt, 0.0).unwrap(), &pot);
        for i in 0..d.len() {
            prop_assert_eq!(d.e_plus[i] + d.e_minus[i], d.e[i]);
            prop_assert!(d.morawetz[i] >= 0.0);
        }
    }

    #[test]
    fn modified_free_propagator_is_isometric(
        beta in 0.35f64..1.5,
        t in 1.0f64..500.0,
        variant in prop_oneof![Just(PhaseShiftVariant::Full), Just(PhaseShiftVariant::Simple), Just(PhaseShiftVariant::None)],
        a in grid_values(255),
        b in grid_values(255),
    ) {
        let g = GridSpec::new(100.0, 255).unwrap();
        let ps = PhaseShift::new(variant, &PotentialSpec::shifted_inverse_power(beta, 1.0)).unwrap();
        let v0 = GridFunction::from_real(g, &a).unwrap();
        let v1 = GridFunction::from_real(g, &b).unwrap();
        let (w0, w1) = u_vec(&ps, t, &v0, &v1).unwrap();
        let before = energy_norm(&v0, &v1).unwrap();
        let after = energy_norm(&w0, &w1).unwrap();
        prop_assert!((after - before).abs() <= 1e-12 * before);
    }
}

#[test]
fn mu_is_at_least_three_quarters_off_the_radial_3d_sector() {
    for d in 3..=8u32 {
        for nu in 0..=8u32 {
            let mu = mu_coefficient(d, nu);
            if (d, nu) == (3, 0) {
                assert_eq!(mu, 0.0);
            } else {
                assert!(mu >= 0.75, "d = {d}, nu = {nu}: {mu}");
            }
        }
    }
}

#[test]
fn complex_data_transforms_componentwise() {
    let g = GridSpec::new(10.0, 63).unwrap();
    let f = GridFunction::new(g, (0..63).map(|i| Complex::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect()).unwrap();
    let back = sine_inverse(&sine_forward(&f));
    for (a, b) in back.values.iter().zip(&f.values) {
        assert!((a - b).norm() < 1e-12);
    }
}
