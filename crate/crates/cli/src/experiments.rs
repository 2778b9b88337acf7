use repulse_core::evolution::Densities;
use repulse_core::highdim::{
    band_profile, dispersion_shell_3d, inward_band_data, mu_coefficient, ode_asymptotics_check, radial3d_bridge,
    shell_constants, HarmonicSector,
};
use repulse_core::modified_propagator::{intertwine_residual, w_vec, waveop_residual, PhaseShift, PhaseShiftVariant};
use repulse_core::potentials::{classify, truncate_to_type1, PotentialSpec};
use repulse_core::spectral::{solve_wavefunction, JostOptions, JostTable, SpectralBasis};
use repulse_core::transforms::{energy_norm, GridFunction, GridSpec};
use repulse_core::{FieldState, Simulation};
use serde::Serialize;

use crate::config::{ConfigInvalid, DataConfig, Experiment, ExperimentConfig};
use crate::output::Output;

pub enum RunError {
    Config(ConfigInvalid),
    Stage { stage: &'static str, message: String },
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(c) => write!(f, "{c}"),
            RunError::Stage { stage, message } => write!(f, "{stage} failed: {message}"),
        }
    }
}

impl From<ConfigInvalid> for RunError {
    fn from(c: ConfigInvalid) -> Self {
        RunError::Config(c)
    }
}

fn stage<T, E: std::fmt::Display>(name: &'static str, r: Result<T, E>) -> Result<T, RunError> {
    r.map_err(|e| RunError::Stage { stage: name, message: e.to_string() })
}

/// Whether every assertion-grade invariant of the run held.
pub type Verdict = bool;

pub fn run(exp: Experiment, cfg: &ExperimentConfig, out: &mut Output) -> Result<Verdict, RunError> {
    let spec = cfg.potential.build()?;
    if !spec.is_zero() {
        let c = stage("potential", classify(&spec))?;
        out.note(format!("potential: {:?}, decay rate {}", c.class, c.beta));
    } else {
        out.note("potential: zero");
    }
    match exp {
        Experiment::Wavefun => wavefun(cfg, &spec, out),
        Experiment::Spectrum => spectrum(cfg, &spec, out),
        Experiment::Evolve => evolve(cfg, &spec, out),
        Experiment::Waveop => waveop(cfg, &spec, out),
        Experiment::Variants => variants(cfg, &spec, out),
        Experiment::Equiv => equiv(cfg, &spec, out),
        Experiment::Dispersion => dispersion(cfg, &spec, out),
        Experiment::Odecheck => odecheck(cfg, &spec, out),
        Experiment::Bridge3d => bridge3d(cfg, out),
    }
}

fn io<T>(r: std::io::Result<T>) -> Result<T, RunError> {
    stage("output", r)
}

fn band_ks(band: (f64, f64), nk: usize) -> Vec<f64> {
    if nk == 1 {
        return vec![band.0];
    }
    (0..nk).map(|i| band.0 + (band.1 - band.0) * i as f64 / (nk - 1) as f64).collect()
}

fn jost_options(cfg: &ExperimentConfig) -> JostOptions {
    JostOptions { tol: cfg.tolerances.jost, ..JostOptions::default() }
}

/// `(w, w_t)` at the nodes for the configured packet.
fn packet(d: &DataConfig, x: f64) -> (f64, f64) {
    let g = (-(x - d.x0) * (x - d.x0) / (2.0 * d.sigma * d.sigma)).exp();
    let (s, c) = (d.k0 * x).sin_cos();
    let w = s * g;
    let wx = d.k0 * c * g - s * (x - d.x0) / (d.sigma * d.sigma) * g;
    let wt = match d.direction.as_str() {
        "inward" => wx,
        "outward" => -wx,
        _ => 0.0,
    };
    (w, wt)
}

fn field_data(cfg: &ExperimentConfig, g: GridSpec<f64>) -> FieldState<f64> {
    FieldState::from_fns(g, |x| packet(&cfg.data, x).0, |x| packet(&cfg.data, x).1)
}

fn wavefun(cfg: &ExperimentConfig, spec: &PotentialSpec, out: &mut Output) -> Result<Verdict, RunError> {
    let w = &cfg.wavefun;
    let n = (w.x_max / w.dx).floor() as usize;
    let xs: Vec<f64> = (0..=n).map(|i| i as f64 * w.dx).collect();
    let mut rows = Vec::new();
    for &k in &w.ks {
        let wf = stage("wavefun", solve_wavefunction(spec, k, &xs, cfg.tolerances.jost))?;
        rows.extend((0..xs.len()).map(|i| vec![k, wf.x[i], wf.u[i], wf.ux[i]]));
    }
    io(out.csv("wavefun.csv", &["k", "x", "u", "ux"], rows))?;
    out.note(format!("{} wave functions on [0, {}] at spacing {}", w.ks.len(), xs[xs.len() - 1], w.dx));
    Ok(true)
}

fn spectrum(cfg: &ExperimentConfig, spec: &PotentialSpec, out: &mut Output) -> Result<Verdict, RunError> {
    let ks = band_ks(cfg.band, cfg.spectrum.nk);
    let table = stage("spectrum", JostTable::build(spec, &ks, jost_options(cfg)))?;
    io(out.csv(
        "jost.csv",
        &["k", "absA", "argA", "residual"],
        table.entries.iter().map(|e| vec![e.k, e.abs_a, e.arg_a, e.fit_residual]),
    ))?;
    let m = table.measure();
    io(out.csv("measure.csv", &["k", "density"], m.k.iter().zip(&m.density).map(|(k, d)| vec![*k, *d])))?;
    let dev = table.entries.iter().fold(0.0f64, |a, e| a.max((e.abs_a * e.k - 1.0).abs()));
    let bad: Vec<f64> = table.entries.iter().filter(|e| !e.ms_consistent).map(|e| e.k).collect();
    out.note(format!("asymptotic order N = {}", table.order));
    if spec.is_zero() {
        out.note(format!("max ||A(k)| k - 1| = {dev:.6e}"));
    }
    out.note(format!("max fit residual = {:.6e}", table.entries.iter().fold(0.0f64, |a, e| a.max(e.fit_residual))));
    if bad.is_empty() {
        out.note("mean-square amplitude check: consistent at every k");
    } else {
        out.note(format!("mean-square amplitude check FAILED at k = {bad:?}"));
    }
    Ok(bad.is_empty())
}

#[derive(Serialize)]
struct EvolveReport<'a> {
    dt: f64,
    reports: &'a [repulse_core::EnergyReport<f64>],
    morawetz: repulse_core::MorawetzScan<f64>,
    max_relative_drift: f64,
}

fn evolve(cfg: &ExperimentConfig, spec: &PotentialSpec, out: &mut Output) -> Result<Verdict, RunError> {
    let g = cfg.grid_spec()?;
    let mut sim = stage("evolve", Simulation::new(spec, field_data(cfg, g), cfg.tolerances.cfl))?;
    sim.report_every(cfg.evolve.report_every.max(1));
    if cfg.evolve.snapshots {
        for &t in &cfg.t_list {
            sim.request_snapshot(t);
        }
    }
    let t_end = cfg.t_list[cfg.t_list.len() - 1];
    stage("evolve", sim.advance_to(t_end))?;
    let reports = sim.reports();
    io(out.csv(
        "energy.csv",
        &["t", "E", "E_minus", "E_plus", "potential_part", "boundary_flux", "morawetz"],
        reports.iter().map(|r| {
            vec![r.time, r.e_total, r.e_minus, r.e_plus, r.potential_part, r.boundary_flux_accum, r.morawetz_accum]
        }),
    ))?;
    for (i, s) in sim.snapshots().iter().enumerate() {
        let d = Densities::new(s, &sim.pot);
        io(out.csv(
            &format!("snapshot_{i:03}.csv"),
            &["x", "w", "w_t", "e", "e_minus", "e_plus"],
            (0..d.len()).map(|j| vec![d.x(j), d.w[j], d.wt[j], d.e[j], d.e_minus[j], d.e_plus[j]]),
        ))?;
        out.note(format!("snapshot_{i:03}.csv at t = {}", s.time));
    }
    let e0 = reports[0].e_total;
    let drift = reports.iter().fold(0.0f64, |m, r| m.max((r.e_total - e0).abs() / e0));
    let scan = sim.morawetz_scan();
    io(out.json("report.json", &EvolveReport { dt: sim.dt(), reports, morawetz: scan, max_relative_drift: drift }))?;
    out.note(format!("dt = {}, steps to t = {t_end}", sim.dt()));
    out.note(format!("max relative energy drift {drift:.6e} (tolerance {})", cfg.tolerances.energy_drift));
    out.note(format!(
        "Morawetz: boundary {:.6e}, interior {:.6e}, bound {:.6e}, within bound {}",
        scan.boundary, scan.interior, scan.bound, scan.within_bound
    ));
    Ok(drift <= cfg.tolerances.energy_drift)
}

fn admissibility_note(out: &mut Output, variant: PhaseShiftVariant, spec: &PotentialSpec) {
    if !spec.is_zero() && !variant.admissible(spec.beta) {
        out.note(format!("variant {} is not admissible for decay rate {}", variant.name(), spec.beta));
    }
}

fn waveop(cfg: &ExperimentConfig, spec: &PotentialSpec, out: &mut Output) -> Result<Verdict, RunError> {
    let g = cfg.grid_spec()?;
    let variant = cfg.variant()?;
    admissibility_note(out, variant, spec);
    let basis = stage("spectral basis", SpectralBasis::new(spec, g, cfg.band.0, cfg.band.1, jost_options(cfg)))?;
    let u0 = GridFunction::from_fn(g, |x| packet(&cfg.data, x).0);
    let u1 = GridFunction::from_fn(g, |x| packet(&cfg.data, x).1);
    let norm = stage("waveop", energy_norm(&u0, &u1))?;
    let reference = stage("wave operator", w_vec(&basis, variant, &u0, &u1))?;
    let ps = stage("phase shift", PhaseShift::new(variant, spec))?;
    let rows = stage("waveop", waveop_residual(&basis, &ps, &reference, &(u0, u1), &cfg.t_list))?;
    io(out.csv(
        "waveop.csv",
        &["t", "residual", "relative", "cauchy_diff"],
        rows.iter().map(|r| vec![r.t, r.residual, r.residual / norm, r.cauchy.unwrap_or(f64::NAN)]),
    ))?;
    out.note(format!("variant {}, data energy norm {norm:.6e}", variant.name()));
    for r in &rows {
        out.note(format!("t = {}: residual/|data| = {:.6e}", r.t, r.residual / norm));
    }
    Ok(true)
}

fn variants(cfg: &ExperimentConfig, spec: &PotentialSpec, out: &mut Output) -> Result<Verdict, RunError> {
    let ks = band_ks(cfg.band, cfg.spectrum.nk);
    let full = stage("phase shift", PhaseShift::new(PhaseShiftVariant::Full, spec))?;
    let simple = stage("phase shift", PhaseShift::new(PhaseShiftVariant::Simple, spec))?;
    for v in [PhaseShiftVariant::Full, PhaseShiftVariant::Simple, PhaseShiftVariant::None] {
        out.note(format!("{}: admissible for decay rate {}: {}", v.name(), spec.beta, spec.is_zero() || v.admissible(spec.beta)));
    }
    for (i, &t) in cfg.t_list.iter().enumerate() {
        let (mf, ms) = (stage("phase shift", full.moments(t))?, stage("phase shift", simple.moments(t))?);
        let rows: Vec<Vec<f64>> = ks
            .iter()
            .map(|&k| {
                let (a, b) = (full.value_with(&mf, k), simple.value_with(&ms, k));
                vec![k, a, b, a - b]
            })
            .collect();
        let gap = rows.iter().fold(0.0f64, |m, r| m.max(r[3].abs()));
        io(out.csv(&format!("variants_{i:03}.csv"), &["k", "P_full", "P_simple", "diff"], rows))?;
        out.note(format!("variants_{i:03}.csv at t = {t}: max |P_full - P_simple| = {gap:.6e}"));
    }
    Ok(true)
}

fn equiv(cfg: &ExperimentConfig, spec: &PotentialSpec, out: &mut Output) -> Result<Verdict, RunError> {
    let g = cfg.grid_spec()?;
    let other = match &cfg.equiv.other {
        Some(p) => p.build()?,
        None => truncate_to_type1(spec),
    };
    let rows = stage(
        "equiv",
        intertwine_residual(spec, &other, cfg.equiv.r, cfg.tolerances.far_equal, &field_data(cfg, g), &cfg.t_list, cfg.tolerances.cfl),
    )?;
    io(out.csv("equiv.csv", &["t1", "t2", "difference"], rows.iter().map(|r| vec![r.t1, r.t2, r.difference])))?;
    for r in &rows {
        out.note(format!("Cauchy difference ({}, {}) = {:.6e}", r.t1, r.t2, r.difference));
    }
    Ok(true)
}

fn dispersion(cfg: &ExperimentConfig, spec: &PotentialSpec, out: &mut Output) -> Result<Verdict, RunError> {
    let g = cfg.grid_spec()?;
    let d = &cfg.dispersion;
    let sector = stage("sector", HarmonicSector::new(d.d, d.nu))?;
    let band = cfg.band;
    let data = inward_band_data(g, band, |k| band_profile(k, band, d.flatness, d.tilt), d.x0, d.cutoff, d.nk);
    let constants = d.constants.unwrap_or_else(|| shell_constants(band));
    let rep = stage("dispersion", dispersion_shell_3d(spec, sector, data, &cfg.t_list, constants, cfg.tolerances.cfl))?;
    io(out.csv(
        "shell.csv",
        &["t", "inside_frac", "shell_frac", "outside_frac", "sliding_sup"],
        rep.rows.iter().map(|r| vec![r.t, r.inside, r.shell, r.outside, r.sliding_sup]),
    ))?;
    out.note(format!("sector d = {}, nu = {}, mu = {}; shell constants c1 = {}, c2 = {}", sector.d, sector.nu, sector.mu, rep.c1, rep.c2));
    if let Some(n) = &rep.note {
        out.note(format!("note: {n}"));
    }
    let mut ok = true;
    for r in &rep.rows {
        let sum = r.inside + r.shell + r.outside;
        ok &= (sum - 1.0).abs() <= 1e-9;
        out.note(format!("t = {}: shell fraction {:.6}, sliding sup {:.6e}, fractions sum to {sum:.12}", r.t, r.shell, r.sliding_sup));
    }
    Ok(ok)
}

fn odecheck(cfg: &ExperimentConfig, spec: &PotentialSpec, out: &mut Output) -> Result<Verdict, RunError> {
    let case = cfg.ode_case()?;
    let o = &cfg.ode;
    for (i, &xi) in o.xi.iter().enumerate() {
        let r = stage("odecheck", ode_asymptotics_check(spec, xi, case, o.t0, o.t1))?;
        io(out.csv(&format!("ode_{i:03}.csv"), &["t", "E0", "E1"], r.trace.iter().map(|s| vec![s.t, s.e0, s.e1])))?;
        io(out.csv(&format!("ode_envelope_{i:03}.csv"), &["t", "E0", "E1"], r.envelope.iter().map(|s| vec![s.t, s.e0, s.e1])))?;
        let (lo, hi) = (o.t0 * 100.0, (o.t0 * 1000.0).min(o.t1));
        let slope = r.envelope_slope(lo, hi).map_or("n/a".to_string(), |s| format!("{s:.4}"));
        out.note(format!(
            "xi = {xi}: A = {:.10}, B = {:.10}, fit change {:.3e}, envelope slope on [{lo}, {hi}] {slope}",
            r.a, r.b, r.change
        ));
    }
    Ok(true)
}

fn bridge3d(cfg: &ExperimentConfig, out: &mut Output) -> Result<Verdict, RunError> {
    let g = cfg.grid_spec()?;
    let b = &cfg.bridge;
    let (c, s) = (b.center, b.width);
    let rep = stage("bridge3d", radial3d_bridge(|r| r * r * (-((r - c) / s).powi(2)).exp(), &g, b.support, b.xi_max))?;
    io(out.csv(
        "bridge.csv",
        &["xi", "direct_re", "direct_im", "transformed"],
        (0..rep.xi.len()).map(|i| vec![rep.xi[i], rep.direct[i].re, rep.direct[i].im, rep.transformed[i]]),
    ))?;
    let mut mu_rows = Vec::new();
    for d in 3..=6u32 {
        for nu in 0..=4u32 {
            mu_rows.push(vec![d as f64, nu as f64, mu_coefficient(d, nu)]);
        }
    }
    io(out.csv("mu.csv", &["d", "nu", "mu"], mu_rows))?;
    out.note(format!("bridge discrepancy {:.6e} (tolerance {})", rep.discrepancy, cfg.tolerances.bridge));
    Ok(rep.discrepancy <= cfg.tolerances.bridge)
}
