//! Radial and single-harmonic solutions in `ℝᵈ` reduced to the half line:
//! `μ` coefficients, the 3-d radial Fourier identity, the late-time ODE
//! check and the dispersion-shell experiment.

use num_complex::Complex;
use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{Densities, FieldState, NodePotential, Simulation};
use crate::ode::{dopri5, Sampler, Tolerance};
use crate::potentials::{fitted_decay_rate, MomentCache, PotentialSpec};
use crate::quadrature::gauss_legendre;
use crate::transforms::{sine_forward_real, GridSpec};

/// `μ = (d - 1 + 2ν)(d - 3 + 2ν)/4` as an exact fraction.
pub fn mu_ratio(d: u32, nu: u32) -> Ratio<i64> {
    let (d, nu) = (d as i64, nu as i64);
    Ratio::new((d - 1 + 2 * nu) * (d - 3 + 2 * nu), 4)
}

pub fn mu_coefficient(d: u32, nu: u32) -> f64 {
    let r = mu_ratio(d, nu);
    *r.numer() as f64 / *r.denom() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicSector {
    pub d: u32,
    pub nu: u32,
    pub mu: f64,
}

impl HarmonicSector {
    pub fn new(d: u32, nu: u32) -> Result<Self> {
        if d < 3 {
            return Err(Error::Invalid(format!("dimension {d} < 3")));
        }
        Ok(Self { d, nu, mu: mu_coefficient(d, nu) })
    }

    /// `q + μ/r²`.
    pub fn reduced_potential(&self, spec: &PotentialSpec) -> PotentialSpec {
        if self.mu == 0.0 {
            spec.clone()
        } else {
            PotentialSpec::inverse_square_plus(self.mu, spec.clone())
        }
    }

    /// `(d - 1)/(2r) w²`, the edge term converting half-line shell energy to `ℝᵈ`.
    pub fn edge_term(&self, r: f64, w: f64) -> f64 {
        if r <= 0.0 {
            0.0
        } else {
            (self.d as f64 - 1.0) / (2.0 * r) * w * w
        }
    }
}

/// Both sides of `û(ξ) = (√2 π)⁻¹ |ξ|⁻¹ (F₀w)(|ξ|)` for `u(x) = w(|x|)/(2√π |x|)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BridgeReport {
    pub xi: Vec<f64>,
    /// `û(ξ)` by Gauss–Legendre quadrature in `cos θ` and `r`.
    pub direct: Vec<Complex<f64>>,
    /// `(F₀w)(ξ)/(√2 π ξ)` from the discrete sine transform on the grid.
    pub transformed: Vec<f64>,
    pub discrepancy: f64,
}

/// Compares the two sides at the grid frequencies up to `xi_max`; `w` must
/// vanish (to working precision) beyond `support`.
pub fn radial3d_bridge(
    w: impl Fn(f64) -> f64 + Sync,
    grid: &GridSpec<f64>,
    support: f64,
    xi_max: f64,
) -> Result<BridgeReport> {
    if !(support > 0.0 && support <= grid.length) {
        return Err(Error::Invalid(format!("support {support} outside (0, {}]", grid.length)));
    }
    let samples: Vec<f64> = grid.xs().iter().map(|&x| w(x)).collect();
    let f0 = sine_forward_real(grid, &samples);
    let m_max = grid.band_indices(0.0, xi_max).end;
    let norm = 1.0 / (std::f64::consts::SQRT_2 * std::f64::consts::PI);

    let panels = (support.ceil() as usize).max(1) * 2;
    let (gx, gw) = gauss_legendre(24);
    let mut rs = Vec::with_capacity(panels * gx.len());
    let mut rw = Vec::with_capacity(panels * gx.len());
    let h = support / panels as f64;
    for p in 0..panels {
        for (x, wt) in gx.iter().zip(&gw) {
            rs.push(h * (p as f64 + 0.5 * (x + 1.0)));
            rw.push(0.5 * h * wt);
        }
    }
    let wr: Vec<f64> = rs.iter().map(|&r| w(r)).collect();
    let pref = 1.0 / (2f64.powf(1.5) * std::f64::consts::PI);

    let xi: Vec<f64> = (0..m_max).map(|m| grid.k(m)).collect();
    let direct: Vec<Complex<f64>> = xi
        .par_iter()
        .map(|&k| {
            let n_mu = (2.0 * k * support).ceil() as usize + 48;
            let (mx, mw) = gauss_legendre(n_mu);
            let mut s = Complex::new(0.0, 0.0);
            for ((r, wt), wv) in rs.iter().zip(&rw).zip(&wr) {
                let mut ang = Complex::new(0.0, 0.0);
                for (m, a) in mx.iter().zip(&mw) {
                    ang += Complex::from_polar(*a, -k * r * m);
                }
                s += ang * (wv * r * wt);
            }
            s * pref
        })
        .collect();
    let transformed: Vec<f64> = xi.iter().enumerate().map(|(m, &k)| norm * f0[m] / k).collect();
    let discrepancy = direct.iter().zip(&transformed).fold(0.0f64, |a, (d, t)| a.max((d - t).norm()));
    Ok(BridgeReport { xi, direct, transformed, discrepancy })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OdeCase {
    /// `v'' + (ξ² + q - q′Q₁/(2ξ² + 2q)) v = 0` against the three-term phase.
    B,
    /// `v'' + (ξ² + q) v = 0` against `Q₁/(2ξ)`.
    A,
}

impl std::str::FromStr for OdeCase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "b" | "b-case" => Ok(Self::B),
            "a" | "a-case" => Ok(Self::A),
            _ => Err(Error::Invalid(format!("unknown ODE case {s}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeFit {
    pub t_lo: f64,
    pub t_hi: f64,
    pub a: f64,
    pub b: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorSample {
    pub t: f64,
    pub e0: f64,
    pub e1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdeAsymptoticsReport {
    pub xi: f64,
    pub a: f64,
    pub b: f64,
    /// Window fits from the earliest to the latest.
    pub fits: Vec<AmplitudeFit>,
    /// Relative change of `(A, B)` between the last two windows.
    pub change: f64,
    pub trace: Vec<ErrorSample>,
    /// Maximum of `|E₀|`, `|E₁|` over one period starting at each `t`.
    pub envelope: Vec<ErrorSample>,
    /// `q″ > 0` on the sampled tail.
    pub convex_tail: bool,
}

impl OdeAsymptoticsReport {
    /// Least-squares slope of `log max|E₀|` against `log t` on `[t_lo, t_hi]`.
    pub fn envelope_slope(&self, t_lo: f64, t_hi: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .envelope
            .iter()
            .filter(|s| s.t >= t_lo && s.t <= t_hi && s.e0 > 0.0)
            .map(|s| (s.t.ln(), s.e0.ln()))
            .collect();
        if pts.len() < 3 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        Some(sxy / sxx)
    }
}

#[derive(Clone, Copy, Debug)]
struct PhaseModel {
    case: OdeCase,
    xi: f64,
}

impl PhaseModel {
    /// `η` from `(t, q, Q₁, Q₂)`.
    fn eta(&self, t: f64, q: f64, q1: f64, q2: f64) -> f64 {
        let k = self.xi;
        match self.case {
            OdeCase::A => k * t + q1 / (2.0 * k),
            OdeCase::B => k * t + q1 / (2.0 * k) - q * q1 / (4.0 * k.powi(3)) + q2 / (8.0 * k.powi(3)),
        }
    }
}

/// Integrates the late-time ODE from `t0` to `t1` with `v(t0) = 1`,
/// `v′(t0) = 0` and fits `(A, B)` on the four dyadic windows ending at `t1`.
pub fn ode_asymptotics_check(spec: &PotentialSpec, xi: f64, case: OdeCase, t0: f64, t1: f64) -> Result<OdeAsymptoticsReport> {
    if !(xi > 0.0) || !(t0 >= 1.0) || !(t1 > 16.0 * t0) {
        return Err(Error::Invalid(format!("need xi > 0, 1 <= t0 and t1 > 16 t0 (xi={xi}, t0={t0}, t1={t1})")));
    }
    let moments = MomentCache::new(spec, 1.0, 2)?;
    let model = PhaseModel { case, xi };
    let convex_tail = (0..=20).all(|i| {
        let x = t0 * (t1 / t0).powf(i as f64 / 20.0);
        spec.eval_qsecond(x).map(|v| v > 0.0).unwrap_or(false)
    });

    let period = 2.0 * std::f64::consts::PI / xi;
    let mut times: Vec<f64> = Vec::new();
    let n_fit = 512;
    let windows: Vec<(f64, f64)> = (0..4).rev().map(|i| (t1 / 2f64.powi(i + 1), t1 / 2f64.powi(i))).collect();
    for &(lo, hi) in &windows {
        times.extend((0..n_fit).map(|j| lo + (hi - lo) * (j as f64 + 0.5) / n_fit as f64));
    }
    let n_trace = 400;
    let trace_t: Vec<f64> = (0..n_trace).map(|i| t0 * (t1 / t0).powf(i as f64 / (n_trace - 1) as f64)).collect();
    times.extend(trace_t.iter().copied());
    let n_env = 60;
    let per_env = 48;
    let env_t: Vec<f64> = (0..n_env).map(|i| 2.0 * t0 * (t1 / (4.0 * t0)).powf(i as f64 / (n_env - 1) as f64)).collect();
    for &c in &env_t {
        times.extend((0..per_env).map(|j| c + period * j as f64 / per_env as f64));
    }
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| times[i]).collect();

    let rhs = |t: f64, y: &[f64; 4]| -> [f64; 4] {
        let (q, dq) = spec.eval_pair(t).unwrap_or((0.0, 0.0));
        let coef = match case {
            OdeCase::A => xi * xi + q,
            OdeCase::B => xi * xi + q - dq * y[2] / (2.0 * xi * xi + 2.0 * q),
        };
        [y[1], -coef * y[0], q, q * q]
    };
    let y0 = [1.0, 0.0, moments.moment(1, t0)?, moments.moment(2, t0)?];
    let tol = Tolerance { rtol: 1e-11, atol: [1e-12, 1e-12 * xi, 1e-11, 1e-11] };
    let mut sampler = Sampler::new(&sorted);
    dopri5(rhs, t0, y0, t1, tol, 0.05 * period, |s| sampler.feed(s))?;
    if !sampler.done() {
        return Err(Error::Invalid("ODE sampling incomplete".into()));
    }
    let mut states = vec![[0.0; 4]; sorted.len()];
    for (slot, &i) in order.iter().enumerate() {
        states[i] = sampler.out[slot];
    }

    let eta_at = |t: f64, y: &[f64; 4]| -> Result<f64> { Ok(model.eta(t, spec.eval_q(t)?, y[2], y[3])) };
    let mut fits = Vec::new();
    for (w, &(lo, hi)) in windows.iter().enumerate() {
        let (mut sa, mut sb) = (0.0, 0.0);
        for j in 0..n_fit {
            let idx = w * n_fit + j;
            let (t, y) = (times[idx], &states[idx]);
            let (s, c) = eta_at(t, y)?.sin_cos();
            sa += y[0] * c - y[1] * s / xi;
            sb += y[0] * s + y[1] * c / xi;
        }
        fits.push(AmplitudeFit { t_lo: lo, t_hi: hi, a: sa / n_fit as f64, b: sb / n_fit as f64 });
    }
    let (last, prev) = (fits[3], fits[2]);
    let change = ((last.a - prev.a).hypot(last.b - prev.b)) / last.a.hypot(last.b);
    let (a, b) = (last.a, last.b);
    let err = |idx: usize| -> Result<ErrorSample> {
        let (t, y) = (times[idx], &states[idx]);
        let (s, c) = eta_at(t, y)?.sin_cos();
        Ok(ErrorSample { t, e0: y[0] - (a * c + b * s), e1: y[1] - xi * (-a * s + b * c) })
    };
    let base = 4 * n_fit;
    let trace = (0..n_trace).map(|i| err(base + i)).collect::<Result<Vec<_>>>()?;
    let mut envelope = Vec::with_capacity(n_env);
    for (i, &c) in env_t.iter().enumerate() {
        let (mut m0, mut m1) = (0.0f64, 0.0f64);
        for j in 0..per_env {
            let e = err(base + n_trace + i * per_env + j)?;
            m0 = m0.max(e.e0.abs());
            m1 = m1.max(e.e1.abs());
        }
        envelope.push(ErrorSample { t: c, e0: m0, e1: m1 });
    }
    let report = OdeAsymptoticsReport { xi, a, b, fits, change, trace, envelope, convex_tail };
    if change >= 0.01 {
        return Err(Error::NonConvergentFit { change });
    }
    Ok(report)
}

/// `c₁ = (3/8b²)·0.5`, `c₂ = (3/4a²)·1.5` for data in the band `[a, b]`.
pub fn shell_constants(band: (f64, f64)) -> (f64, f64) {
    (3.0 / (8.0 * band.1 * band.1) * 0.5, 3.0 / (4.0 * band.0 * band.0) * 1.5)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellRow {
    pub t: f64,
    pub q1: f64,
    pub inside: f64,
    pub shell: f64,
    pub outside: f64,
    pub window: f64,
    /// Largest fraction of the energy in any radial window of length `window`.
    pub sliding_sup: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShellReport {
    pub sector: HarmonicSector,
    pub c1: f64,
    pub c2: f64,
    pub rows: Vec<ShellRow>,
    /// Set when the decay rate exceeds 1 and the shell statement degenerates.
    pub note: Option<Error>,
}

/// Smooth profile on `[a, b]`: `exp(-c/(s(1 - s))) k^{-p}` with `s = (k - a)/(b - a)`.
pub fn band_profile(k: f64, band: (f64, f64), flatness: f64, tilt: f64) -> f64 {
    let (a, b) = band;
    if k <= a || k >= b {
        return 0.0;
    }
    let s = (k - a) / (b - a);
    (-flatness / (s * (1.0 - s))).exp() * k.powf(-tilt)
}

/// Inward-moving half-line data `w(x, t) = ∫ f(k) [cos k(x - x₀ + t) - cos k(x + x₀ - t)] dk`
/// at `t = 0`, with `nk` midpoint nodes over `band`; set to zero past `cutoff`.
pub fn inward_band_data(
    grid: GridSpec<f64>,
    band: (f64, f64),
    f: impl Fn(f64) -> f64,
    x0: f64,
    cutoff: f64,
    nk: usize,
) -> FieldState<f64> {
    let h = (band.1 - band.0) / nk as f64;
    let nodes: Vec<(f64, f64)> = (0..nk)
        .map(|i| {
            let k = band.0 + (i as f64 + 0.5) * h;
            (k, f(k) * h)
        })
        .collect();
    let xs = grid.xs();
    let (w, wt): (Vec<f64>, Vec<f64>) = xs
        .par_iter()
        .map(|&x| {
            if x > cutoff {
                return (0.0, 0.0);
            }
            nodes.iter().fold((0.0, 0.0), |(w, v), &(k, a)| {
                let (s1, c1) = (k * (x - x0)).sin_cos();
                let (s2, c2) = (k * (x + x0)).sin_cos();
                (w + a * (c1 - c2), v - a * k * (s1 + s2))
            })
        })
        .unzip();
    FieldState { grid, w, wt, time: 0.0 }
}

/// `ℓ(t) = Q₁/log Q₁`.
pub fn default_window(q1: f64) -> f64 {
    if q1 > std::f64::consts::E {
        q1 / q1.ln()
    } else {
        q1.max(1.0)
    }
}

/// `ℝᵈ` energy in `{a ≤ r ≤ b}` for a reduced half-line state.
pub fn sector_energy(sector: &HarmonicSector, d: &Densities<f64>, a: f64, b: f64) -> f64 {
    d.integrate(&d.e, a, b) - sector.edge_term(b, d.interp(&d.w, b)) + sector.edge_term(a, d.interp(&d.w, a))
}

fn sector_sliding_sup(sector: &HarmonicSector, d: &Densities<f64>, ell: f64) -> f64 {
    let n = d.len();
    let mut cum = vec![0.0; n];
    for i in 1..n {
        cum[i] = cum[i - 1] + 0.5 * d.dx * (d.e[i] + d.e[i - 1]);
    }
    let edge: Vec<f64> = (0..n).map(|i| sector.edge_term(d.x(i), d.w[i])).collect();
    let span = ((ell / d.dx).round() as usize).clamp(1, n - 1);
    (0..n - span).fold(0.0f64, |m, i| m.max(cum[i + span] - cum[i] - edge[i + span] + edge[i]))
}

/// Evolves the reduced half-line problem with potential `q + μ/r²` and
/// measures `ℝᵈ` energy fractions in `[0, t - c₂Q₁]`, `[t - c₂Q₁, t - c₁Q₁]`
/// and beyond, plus the sliding-window supremum with window `ℓ(t)`.
pub fn dispersion_shell_3d(
    spec: &PotentialSpec,
    sector: HarmonicSector,
    data: FieldState<f64>,
    t_list: &[f64],
    constants: (f64, f64),
    cfl: f64,
) -> Result<ShellReport> {
    let (c1, c2) = constants;
    if !(c2 > c1 && c1 >= 0.0) {
        return Err(Error::Invalid(format!("shell constants need 0 <= c1 < c2, got ({c1}, {c2})")));
    }
    let note = match fitted_decay_rate(spec) {
        Ok(beta) if beta > 1.0 => Some(Error::Q1Bounded { beta }),
        _ => None,
    };
    let moments = MomentCache::new(spec, 1.0, 1)?;
    let reduced = sector.reduced_potential(spec);
    let pot = NodePotential::new(&reduced, &data.grid)?;
    let mut sim = Simulation::with_potential(pot, data, cfl)?;
    sim.set_tracking(false);
    let mut rows = Vec::with_capacity(t_list.len());
    for &t in t_list {
        sim.advance_to(t)?;
        let d = Densities::new(&sim.state, &sim.pot);
        let q1 = if spec.is_zero() { 0.0 } else { moments.moment(1, t.max(1.0))? };
        let len = sim.state.grid.length;
        let r2 = (t - c2 * q1).clamp(0.0, len);
        let r1 = (t - c1 * q1).clamp(r2, len);
        let inside = sector_energy(&sector, &d, 0.0, r2);
        let shell = sector_energy(&sector, &d, r2, r1);
        let outside = sector_energy(&sector, &d, r1, len);
        let total = inside + shell + outside;
        let window = default_window(q1);
        rows.push(ShellRow {
            t: sim.state.time,
            q1,
            inside: inside / total,
            shell: shell / total,
            outside: outside / total,
            window,
            sliding_sup: sector_sliding_sup(&sector, &d, window) / total,
        });
    }
    Ok(ShellReport { sector, c1, c2, rows, note })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mu_values() {
        assert_eq!(mu_ratio(3, 0), Ratio::from_integer(0));
        assert_eq!(mu_ratio(3, 1), Ratio::from_integer(2));
        assert_eq!(mu_ratio(4, 0), Ratio::new(3, 4));
    }

    #[test]
    fn free_ode_recovers_cosine() {
        let r = ode_asymptotics_check(&PotentialSpec::zero(), 1.5, OdeCase::A, 1.0, 400.0).unwrap();
        assert!((r.a - (1.5f64).cos()).abs() < 1e-8, "{}", r.a);
        assert!((r.b - (1.5f64).sin()).abs() < 1e-8);
        assert!(r.trace.iter().all(|s| s.e0.abs() < 1e-8));
    }

    #[test]
    fn constants_for_unit_band() {
        let (c1, c2) = shell_constants((1.0, 2.0));
        assert!((c1 - 3.0 / 64.0).abs() < 1e-15 && (c2 - 1.125).abs() < 1e-15);
    }
}
