use repulse_core::highdim::{
    band_profile, dispersion_shell_3d, inward_band_data, mu_ratio, ode_asymptotics_check, shell_constants,
    HarmonicSector, OdeCase,
};
use repulse_core::modified_propagator::{phase_shift, w_vec, PhaseShift, PhaseShiftVariant};
use repulse_core::potentials::{classify, truncate_to_type1, MomentCache, PotentialClass, PotentialSpec};
use repulse_core::spectral::{AsymptoticPhase, JostContext, JostOptions, JostTable, SpectralBasis};
use repulse_core::transforms::{energy_norm, sine_forward, GridFunction, GridSpec};
use repulse_core::{FieldState, Simulation};
use num_rational::Ratio;

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

#[test]
fn inverse_sqrt_is_type_two() {
    let c = classify(&PotentialSpec::inverse_power(0.5)).unwrap();
    assert_eq!(c.class, PotentialClass::TypeII);
    assert_eq!(c.beta, 0.5);
    assert_eq!(c.kappa, Some(0.5));
}

#[test]
fn truncation_value_at_origin() {
    let t = truncate_to_type1(&PotentialSpec::inverse_power(0.5));
    assert!((t.eval_q(0.0).unwrap() - 1.5).abs() < 1e-14);
}

#[test]
fn first_moments() {
    let c = MomentCache::new(&PotentialSpec::inverse_power(0.5), 1.0, 1).unwrap();
    assert!((c.moment(1, 4.0).unwrap() - 2.0).abs() < 1e-12);
    assert!((c.moment(1, 100.0).unwrap() - 18.0).abs() < 1e-10);
    let c = MomentCache::new(&PotentialSpec::inverse_power(1.0), 1.0, 1).unwrap();
    for t in [10.0, 1e3, 1e5] {
        assert!((c.moment(1, t).unwrap() - f64::ln(t)).abs() < 1e-9);
    }
}

#[test]
fn truncated_phase_at_x_100() {
    let spec = PotentialSpec::shifted_inverse_power(0.6, 1.0);
    let m = MomentCache::new(&spec, 0.0, 2).unwrap();
    let theta = AsymptoticPhase::new(2, 0.6).unwrap().theta(&m, 1.0, 100.0).unwrap();
    let q1 = simpson(|x| spec.q(x), 0.0, 100.0, 200_000);
    let q2 = simpson(|x| spec.q(x).powi(2), 0.0, 100.0, 200_000);
    assert!((theta - (100.0 - q1 / 2.0 - q2 / 8.0)).abs() < 1e-9);
    assert!((theta - 92.954_901_780_581_24).abs() < 1e-9);
}

#[test]
fn phase_shift_values() {
    let s = PotentialSpec::inverse_power(0.5);
    let full = phase_shift(PhaseShiftVariant::Full, &s, 1.0, 4.0).unwrap();
    assert!((full - 0.923_286_795_139_986_3).abs() < 1e-12);
    assert!((phase_shift(PhaseShiftVariant::Simple, &s, 2.0, 4.0).unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(phase_shift(PhaseShiftVariant::None, &s, 2.0, 4.0).unwrap(), 0.0);
}

#[test]
fn variant_gap_grows_below_one_half() {
    let s = PotentialSpec::inverse_power(0.45);
    let f = PhaseShift::new(PhaseShiftVariant::Full, &s).unwrap();
    let p = PhaseShift::new(PhaseShiftVariant::Simple, &s).unwrap();
    let gap = |t: f64| f.value(1.0, t).unwrap() - p.value(1.0, t).unwrap();
    assert!((gap(1e3) - 0.357_444_277_459_379_8).abs() < 1e-9);
    assert!((gap(1e4) - 0.755_295_539_575_625_6).abs() < 1e-9);
    assert!(gap(1e4) > 2.0 * gap(1e3));
}

#[test]
fn mu_table() {
    assert_eq!(mu_ratio(3, 0), Ratio::from_integer(0));
    assert_eq!(mu_ratio(3, 1), Ratio::from_integer(2));
    assert_eq!(mu_ratio(4, 0), Ratio::new(3, 4));
}

#[test]
fn dst_matches_direct_summation() {
    let g: GridSpec<f64> = GridSpec::new(200.0, 4095).unwrap();
    let f = GridFunction::from_fn(g, |x: f64| (-(x - 20.0) * (x - 20.0)).exp());
    let fast = sine_forward(&f);
    let xs = g.xs();
    for m in (0..g.n).step_by(97) {
        let k = g.k(m);
        let direct: f64 = xs.iter().zip(&f.values).map(|(x, v)| (k * x).sin() * v.re).sum::<f64>() * g.dx();
        assert!((fast.values[m].re - direct).abs() < 1e-10, "m = {m}");
    }
}

#[test]
fn free_generalized_transform_is_scaled_sine_transform() {
    let g = GridSpec::new(128.0, 1023).unwrap();
    let basis = SpectralBasis::new(&PotentialSpec::zero(), g, 0.5, 4.0, JostOptions::default()).unwrap();
    let f = GridFunction::from_fn(g, |x| (2.0 * x).sin() * (-(x - 30.0) * (x - 30.0) / 18.0).exp());
    let gen = basis.forward(&f).unwrap();
    let plain = sine_forward(&f);
    let scale = plain.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for m in basis.band.clone() {
        let k = g.k(m);
        assert!((gen.values[m] - plain.values[m] / k).norm() < 1e-6 * scale, "k = {k}");
    }
}

#[test]
fn jost_phase_is_continuous_and_windows_agree() {
    let spec = PotentialSpec::shifted_inverse_power(0.6, 1.0);
    let ks: Vec<f64> = (0..=50).map(|i| 1.0 + 0.01 * i as f64).collect();
    let table = JostTable::build(&spec, &ks, JostOptions::default()).unwrap();
    for w in table.entries.windows(2) {
        assert!((w[1].arg_a - w[0].arg_a).abs() < std::f64::consts::FRAC_PI_4);
    }
    let at = |lo: f64, hi: f64| {
        let opts = JostOptions { window: Some((lo, hi)), ..JostOptions::default() };
        let ctx = JostContext::new(&spec, opts).unwrap();
        let xs: Vec<f64> = Vec::new();
        ctx.extract(1.0, &xs).unwrap().0
    };
    let (a, b) = (at(200.0, 400.0), at(400.0, 800.0));
    let slack = 3.0 * (a.fit_residual + b.fit_residual) + 1e-12;
    assert!((a.abs_a - b.abs_a).abs() <= slack * a.abs_a, "{} vs {}", a.abs_a, b.abs_a);
    assert!((a.arg_a - b.arg_a).abs() <= slack);
}

#[test]
fn spectral_propagator_is_unitary() {
    let spec = PotentialSpec::shifted_inverse_power(0.6, 1.0);
    let g = GridSpec::new(256.0, 2047).unwrap();
    let basis = SpectralBasis::new(&spec, g, 0.5, 4.0, JostOptions::default()).unwrap();
    let u0 = GridFunction::from_fn(g, |x| (2.0 * x).sin() * (-(x - 40.0) * (x - 40.0) / 18.0).exp());
    let u1 = GridFunction::zeros(g);
    let (c0, c1) = (basis.coefficients(&u0).unwrap(), basis.coefficients(&u1).unwrap());
    let e0 = basis.a_energy(&c0, &c1);
    for t in [10.0, 50.0, 100.0] {
        let (a, b) = basis.rotate(&c0, &c1, t);
        assert!((basis.a_energy(&a, &b) - e0).abs() < 1e-6 * e0);
    }
}

#[test]
fn wave_operator_preserves_energy_norm() {
    let spec = PotentialSpec::shifted_inverse_power(0.6, 1.0);
    let g = GridSpec::new(256.0, 2047).unwrap();
    let basis = SpectralBasis::new(&spec, g, 0.5, 4.0, JostOptions::default()).unwrap();
    for i in 0..10 {
        let (k0, x0, s) = (1.5 + 0.15 * i as f64, 30.0 + 5.0 * i as f64, 3.0 + 0.2 * i as f64);
        let env = move |x: f64| (-(x - x0) * (x - x0) / (2.0 * s * s)).exp();
        let u0 = GridFunction::from_fn(g, move |x| (k0 * x).sin() * env(x));
        let u1 = if i % 2 == 0 {
            GridFunction::zeros(g)
        } else {
            GridFunction::from_fn(g, move |x| k0 * (k0 * x).cos() * env(x))
        };
        let (w0, w1) = w_vec(&basis, PhaseShiftVariant::Full, &u0, &u1).unwrap();
        let lhs = energy_norm(&w0, &w1).unwrap();
        let potential: f64 = g.xs().iter().zip(&u0.values).map(|(x, v)| spec.q(*x) * v.norm_sqr()).sum::<f64>() * g.dx();
        let rhs = (energy_norm(&u0, &u1).unwrap().powi(2) + potential).sqrt();
        assert!((lhs - rhs).abs() < 1e-3 * rhs, "datum {i}: {lhs} vs {rhs}");
    }
}

#[test]
fn shell_fractions_partition_the_energy() {
    let spec = PotentialSpec::smoothed_inverse_power(0.5, 0.1);
    let band = (0.5, 2.0);
    let g = GridSpec::new(300.0, 5999).unwrap();
    let data = inward_band_data(g, band, |k| band_profile(k, band, 0.02, 2.0), 15.0, 120.0, 400);
    let rep = dispersion_shell_3d(&spec, HarmonicSector::new(3, 0).unwrap(), data, &[50.0, 100.0], shell_constants(band), 0.5)
        .unwrap();
    for r in &rep.rows {
        assert!((r.inside + r.shell + r.outside - 1.0).abs() < 1e-12);
    }
}

#[test]
fn ode_amplitude_is_stable_across_windows() {
    let r = ode_asymptotics_check(&PotentialSpec::inverse_power(0.45), 2.0, OdeCase::B, 10.0, 1e5).unwrap();
    let amp = r.a * r.a + r.b * r.b;
    let late = &r.fits[r.fits.len() / 2..];
    for f in late {
        assert!(((f.a * f.a + f.b * f.b) - amp).abs() < 0.02 * amp, "window [{}, {}]", f.t_lo, f.t_hi);
    }
}

#[test]
fn spectral_propagator_matches_finite_differences() {
    let spec = PotentialSpec::shifted_inverse_power(0.6, 1.0);
    let g = GridSpec::new(256.0, 2047).unwrap();
    let basis = SpectralBasis::new(&spec, g, 0.5, 4.0, JostOptions::default()).unwrap();
    let w = |x: f64| (2.0 * x).sin() * (-(x - 60.0) * (x - 60.0) / 18.0).exp();
    let (s0, s1) = basis.propagate(&GridFunction::from_fn(g, w), &GridFunction::zeros(g), 50.0).unwrap();
    let fine = GridSpec::new(256.0, 32767).unwrap();
    let mut sim = Simulation::new(&spec, FieldState::from_fns(fine, w, |_| 0.0), 0.5).unwrap();
    sim.set_tracking(false);
    sim.advance_to(50.0).unwrap();
    let pick = |v: &[f64]| -> Vec<f64> { (0..g.n).map(|j| v[16 * (j + 1) - 1]).collect() };
    let f0 = GridFunction::from_real(g, &pick(&sim.state.w)).unwrap();
    let f1 = GridFunction::from_real(g, &pick(&sim.state.wt)).unwrap();
    let diff = |a: &GridFunction<f64>, b: &GridFunction<f64>| {
        GridFunction::new(g, a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect()).unwrap()
    };
    let err = energy_norm(&diff(&s0, &f0), &diff(&s1, &f1)).unwrap();
    let size = energy_norm(&s0, &s1).unwrap();
    assert!(err < 1e-2 * size, "{err} vs {size}");
}
