//! Wave functions of `A = -d²/dx² + q`, the far-field amplitude `A(k)`, the
//! spectral measure and the generalized Fourier transform pair.
//!
//! `u(x, k)` solves `-u'' + q u = k² u` with `u(0) = 0`, `u'(0) = 1`. Far out
//! it behaves like `|A(k)| sin(θ_N(k, x) - arg A(k))`, where
//! `θ_N(k, x) = kx - Σ_{j≤N} c_j k^{1-2j} Q_j(x)` and `Q_j(x) = ∫_0^x q^j`.
//! The measure is `dρ = 2/(π|A(k)|²) dk`.
//!
//! `arg A` is recovered by fitting against the exact local phase
//! `kx - ∫ (k - √(k² - q))` with the matching amplitude factor
//! `(1 - q/k²)^{-1/4}`, then shifting to the order-`N` convention with the
//! convergent remainder `∫ R_N`.

use std::ops::Range;
use std::sync::LazyLock;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{dopri5, Sampler, Tolerance};
use crate::potentials::{MomentCache, PotentialClass, PotentialSpec};
use crate::quadrature::integrate_to_infinity;
use crate::transforms::{GridFunction, GridSpec, SpectrumFunction};

const SERIES_TERMS: usize = 200;

static SERIES: LazyLock<Vec<f64>> = LazyLock::new(|| phase_coefficients(SERIES_TERMS));

/// `c_1..c_n` from `c_1 = 1/2`, `c_n = ½ Σ_{i<n} c_i c_{n-i}`: the Taylor
/// coefficients of `1 - √(1 - s)`.
pub fn phase_coefficients(n: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(n);
    for m in 1..=n {
        if m == 1 {
            c.push(0.5);
        } else {
            let s: f64 = (1..m).map(|i| c[i - 1] * c[m - i - 1]).sum();
            c.push(0.5 * s);
        }
    }
    c
}

/// Coefficients of `(k - Σ c_j k^{1-2j} q^j)² - (k² - q)` as a polynomial in `q`,
/// lowest degree first.
pub fn square_identity_coefficients(c: &[f64], k: f64) -> Vec<f64> {
    let n = c.len();
    let mut p = vec![0.0; n + 1];
    p[0] = k;
    for (j, cj) in c.iter().enumerate() {
        p[j + 1] = -cj * k.powi(1 - 2 * (j as i32 + 1));
    }
    let mut sq = vec![0.0; 2 * n + 1];
    for i in 0..=n {
        for j in 0..=n {
            sq[i + j] += p[i] * p[j];
        }
    }
    sq[0] -= k * k;
    sq[1] += 1.0;
    sq
}

/// Truncated asymptotic phase `θ_N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticPhase {
    pub order: usize,
    pub coeffs: Vec<f64>,
}

impl AsymptoticPhase {
    /// `⌈1/β⌉ + 1`, and 1 for a vanishing potential.
    pub fn default_order(beta: f64) -> usize {
        if beta.is_infinite() {
            1
        } else {
            (1.0 / beta).ceil() as usize + 1
        }
    }

    pub fn new(order: usize, beta: f64) -> Result<Self> {
        if order == 0 || (order as f64) * beta < 1.0 {
            return Err(Error::OrderTooLow { n: order, beta });
        }
        Ok(Self { order, coeffs: phase_coefficients(order) })
    }

    /// `Σ_{j≤N} c_j k^{1-2j} Q_j(x)` with moments taken from 0.
    pub fn shift(&self, moments: &MomentCache, k: f64, x: f64) -> Result<f64> {
        if moments.spec().is_zero() {
            return Ok(0.0);
        }
        let mut s = 0.0;
        for (j, c) in self.coeffs.iter().enumerate() {
            s += c * k.powi(-(2 * j as i32 + 1)) * moments.moment(j + 1, x)?;
        }
        Ok(s)
    }

    pub fn theta(&self, moments: &MomentCache, k: f64, x: f64) -> Result<f64> {
        Ok(k * x - self.shift(moments, k, x)?)
    }

    /// `(sin θ, k cos θ)`, the far-field shape of `(u, u_x)` up to amplitude and phase.
    pub fn model(&self, moments: &MomentCache, k: f64, x: f64) -> Result<(f64, f64)> {
        let t = self.theta(moments, k, x)?;
        Ok((t.sin(), k * t.cos()))
    }
}

/// `k - √(k² - q) - Σ_{j≤N} c_j k^{1-2j} q^j`.
fn phase_remainder(k: f64, q: f64, order: usize) -> f64 {
    let s = q / (k * k);
    if s < 0.5 {
        let mut acc = 0.0;
        let mut p = s.powi(order as i32 + 1);
        for c in &SERIES[order..] {
            let term = c * p;
            acc += term;
            if term < 1e-18 * acc {
                break;
            }
            p *= s;
        }
        k * acc
    } else {
        let head: f64 = SERIES[..order].iter().enumerate().map(|(j, c)| c * s.powi(j as i32 + 1)).sum();
        k * (1.0 - (1.0 - s).sqrt() - head)
    }
}

/// Samples of `u(·, k)` and `u_x(·, k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveFunction {
    pub k: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub ux: Vec<f64>,
}

fn require_type1(spec: &PotentialSpec) -> Result<()> {
    if spec.class != PotentialClass::TypeI {
        return Err(Error::Invalid("wave functions need a type I potential; truncate first".into()));
    }
    Ok(())
}

fn wave_tolerance(k: f64, tol: f64) -> Tolerance<3> {
    Tolerance { rtol: tol, atol: [tol / k.max(1.0), tol, tol] }
}

/// Integrates `(u, u_x)` and the exact local phase; the phase integrand is
/// switched on at `phase_from`, where it starts from `phase0`. Samples `xs`
/// and `extra` must each be sorted.
fn integrate_wave(
    spec: &PotentialSpec,
    k: f64,
    tol: f64,
    xs: &[f64],
    extra: &[f64],
    phase_from: f64,
    phase0: f64,
) -> Result<(Vec<[f64; 3]>, Vec<[f64; 3]>)> {
    let k2 = k * k;
    let rhs = |x: f64, y: &[f64; 3]| {
        let q = spec.q(x);
        let dphi = if x >= phase_from { q / (k + (k2 - q).sqrt()) } else { 0.0 };
        [y[1], (q - k2) * y[0], dphi]
    };
    let end = xs.last().copied().unwrap_or(0.0).max(extra.last().copied().unwrap_or(0.0));
    let tolv = wave_tolerance(k, tol);
    let h0 = 0.05 / k.max(1.0);
    let mut s1 = Sampler::new(xs);
    let mut s2 = Sampler::new(extra);
    let split = phase_from.min(end);
    let mut y = dopri5(rhs, 0.0, [0.0, 1.0, 0.0], split, tolv, h0, |st| {
        s1.feed(st);
        s2.feed(st);
    })?;
    if end > split {
        y[2] = phase0;
        dopri5(rhs, split, y, end, tolv, h0, |st| {
            s1.feed(st);
            s2.feed(st);
        })?;
    }
    Ok((s1.out, s2.out))
}

/// `u(x, k)` on the sorted abscissae `xs` (all `> 0`), adaptive tolerance `tol`.
pub fn solve_wavefunction(spec: &PotentialSpec, k: f64, xs: &[f64], tol: f64) -> Result<WaveFunction> {
    require_type1(spec)?;
    if !(k > 0.0) {
        return Err(Error::Invalid(format!("k must be positive, got {k}")));
    }
    if xs.windows(2).any(|w| w[1] < w[0]) || xs.first().is_some_and(|&x| x < 0.0) {
        return Err(Error::Invalid("sample abscissae must be sorted and nonnegative".into()));
    }
    let (out, _) = integrate_wave(spec, k, tol, xs, &[], f64::INFINITY, 0.0)?;
    Ok(WaveFunction {
        k,
        x: xs.to_vec(),
        u: out.iter().map(|y| y[0]).collect(),
        ux: out.iter().map(|y| y[1]).collect(),
    })
}

/// One row of a [`JostTable`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JostEntry {
    pub k: f64,
    pub abs_a: f64,
    pub arg_a: f64,
    pub fit_residual: f64,
    /// `√` of the window mean of `(u/a)² + (u_x a/k)²`; equals `|A|` up to
    /// the squared residual.
    pub ms_amplitude: f64,
    pub ms_consistent: bool,
    pub window: (f64, f64),
}

/// Settings for amplitude extraction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JostOptions {
    pub tol: f64,
    pub order: Option<usize>,
    pub window: Option<(f64, f64)>,
}

impl Default for JostOptions {
    fn default() -> Self {
        Self { tol: 1e-10, order: None, window: None }
    }
}

/// Potential-dependent state shared by every `k`.
#[derive(Clone, Debug)]
pub struct JostContext {
    pub spec: PotentialSpec,
    pub phase: AsymptoticPhase,
    pub moments: MomentCache,
    pub opts: JostOptions,
}

impl JostContext {
    pub fn new(spec: &PotentialSpec, opts: JostOptions) -> Result<Self> {
        require_type1(spec)?;
        let order = opts.order.unwrap_or_else(|| AsymptoticPhase::default_order(spec.beta));
        let phase = AsymptoticPhase::new(order, spec.beta)?;
        let moments = MomentCache::new(spec, 0.0, order)?;
        Ok(Self { spec: spec.clone(), phase, moments, opts })
    }

    /// Default window: starts at 50 or where `q ≤ 0.05 k²`, whichever is
    /// farther, and spans a doubling and at least four periods.
    pub fn default_window(&self, k: f64) -> (f64, f64) {
        let lo = self.spec.level_crossing(0.05 * k * k, 50.0).max(50.0);
        (lo, (2.0 * lo).max(lo + 8.0 * std::f64::consts::PI / k))
    }

    /// Extracts `|A(k)|` and `arg A(k)`; also returns `u, u_x` on `xs`.
    pub fn extract(&self, k: f64, xs: &[f64]) -> Result<(JostEntry, WaveFunction)> {
        if !(k > 0.0) {
            return Err(Error::Invalid(format!("k must be positive, got {k}")));
        }
        let (lo, hi) = self.opts.window.unwrap_or_else(|| self.default_window(k));
        if !(hi > lo && lo > 0.0) {
            return Err(Error::Invalid(format!("fit window [{lo}, {hi}] is empty")));
        }
        let q_lo = self.spec.eval_q(lo)?;
        if q_lo >= 0.25 * k * k {
            return Err(Error::Invalid(format!("fit window starts inside the near field: q({lo}) = {q_lo}")));
        }
        let periods = (hi - lo) * k / (2.0 * std::f64::consts::PI);
        let m = ((16.0 * periods) as usize).clamp(400, 400_000);
        let fit_x: Vec<f64> = (0..m).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / m as f64).collect();
        let phi0 = self.phase.shift(&self.moments, k, lo)?;
        let (grid_out, fit_out) = integrate_wave(&self.spec, k, self.opts.tol, xs, &fit_x, lo, phi0)?;

        let mut model = Vec::with_capacity(m);
        for (x, y) in fit_x.iter().zip(&fit_out) {
            let q = self.spec.eval_q(*x)?;
            let a = (1.0 - q / (k * k)).powf(-0.25);
            let th = k * x - y[2];
            model.push((th.sin(), th.cos(), y[0] / a, y[1] * a / k));
        }
        let mf = m as f64;
        let alpha = model.iter().map(|&(s, c, y1, y2)| s * y1 + c * y2).sum::<f64>() / mf;
        let beta = model.iter().map(|&(s, c, y1, y2)| -c * y1 + s * y2).sum::<f64>() / mf;
        let mut sq = 0.0;
        let mut ms = 0.0;
        for &(s, c, y1, y2) in &model {
            let e1 = y1 - (alpha * s - beta * c);
            let e2 = y2 - (alpha * c + beta * s);
            sq += e1 * e1 + e2 * e2;
            ms += y1 * y1 + y2 * y2;
        }
        let residual = (sq / mf).sqrt();
        let ms_amplitude = (ms / mf).sqrt();
        let abs_a = alpha.hypot(beta);
        if !(abs_a > 0.0) || residual > 0.1 * abs_a {
            return Err(Error::FitDegenerate { k, residual, amplitude: abs_a });
        }
        let order = self.phase.order;
        let tail = if self.spec.is_zero() {
            0.0
        } else {
            integrate_to_infinity(|x| phase_remainder(k, self.spec.q(x), order), lo, 1e-10)
                .ok_or(Error::DivergentTail { j: order + 1 })?
        };
        let arg_a = beta.atan2(alpha) + tail;
        let entry = JostEntry {
            k,
            abs_a,
            arg_a,
            fit_residual: residual,
            ms_amplitude,
            ms_consistent: (ms_amplitude - abs_a).abs() <= 2.0 * residual + 1e-12 * abs_a,
            window: (lo, hi),
        };
        let wave = WaveFunction {
            k,
            x: xs.to_vec(),
            u: grid_out.iter().map(|y| y[0]).collect(),
            ux: grid_out.iter().map(|y| y[1]).collect(),
        };
        Ok((entry, wave))
    }
}

/// Single-`k` convenience wrapper around [`JostContext::extract`].
pub fn extract_a(spec: &PotentialSpec, k: f64, opts: JostOptions) -> Result<JostEntry> {
    Ok(JostContext::new(spec, opts)?.extract(k, &[])?.0)
}

/// Rewrites phases so neighbours differ by at most π, keeping the first value.
pub fn unwrap_phases(phases: &mut [f64]) {
    let tau = 2.0 * std::f64::consts::PI;
    for i in 1..phases.len() {
        let d = phases[i] - phases[i - 1];
        phases[i] -= tau * (d / tau).round();
    }
}

/// `|A(k)|` and the unwrapped `arg A(k)` on an increasing k-grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JostTable {
    pub order: usize,
    pub entries: Vec<JostEntry>,
}

impl JostTable {
    pub fn build(spec: &PotentialSpec, ks: &[f64], opts: JostOptions) -> Result<Self> {
        let ctx = JostContext::new(spec, opts)?;
        let (table, _) = Self::build_with_samples(&ctx, ks, &[])?;
        Ok(table)
    }

    /// Builds the table and the wave functions on `xs` for every `k`.
    pub fn build_with_samples(ctx: &JostContext, ks: &[f64], xs: &[f64]) -> Result<(Self, Vec<WaveFunction>)> {
        if ks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid("k-grid must be strictly increasing".into()));
        }
        let rows: Vec<(JostEntry, WaveFunction)> =
            ks.par_iter().map(|&k| ctx.extract(k, xs)).collect::<Result<_>>()?;
        let (mut entries, waves): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
        let mut phases: Vec<f64> = entries.iter().map(|e| e.arg_a).collect();
        unwrap_phases(&mut phases);
        for (e, p) in entries.iter_mut().zip(phases) {
            e.arg_a = p;
        }
        Ok((Self { order: ctx.phase.order, entries }, waves))
    }

    pub fn ks(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.k).collect()
    }

    pub fn measure(&self) -> SpectralMeasure {
        SpectralMeasure {
            k: self.ks(),
            density: self.entries.iter().map(|e| 2.0 / (std::f64::consts::PI * e.abs_a * e.abs_a)).collect(),
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["k", "absA", "argA", "residual"])?;
        for e in &self.entries {
            wtr.write_record([e.k, e.abs_a, e.arg_a, e.fit_residual].iter().map(|v| format!("{v:.16e}")))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Density of `dρ` with respect to `dk`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasure {
    pub k: Vec<f64>,
    pub density: Vec<f64>,
}

/// Wave functions on the nodes of a grid for the frequencies of a band, the
/// data behind the generalized transform pair and the exact propagator.
#[derive(Clone, Debug)]
pub struct SpectralBasis {
    pub grid: GridSpec<f64>,
    pub band: Range<usize>,
    pub table: JostTable,
    pub context: JostContext,
    waves: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

const BAND_DEFECT_LIMIT: f64 = 0.01;

impl SpectralBasis {
    /// Basis for the grid frequencies inside `[k_lo, k_hi]`.
    pub fn new(spec: &PotentialSpec, grid: GridSpec<f64>, k_lo: f64, k_hi: f64, opts: JostOptions) -> Result<Self> {
        let band = grid.band_indices(k_lo, k_hi);
        if band.is_empty() {
            return Err(Error::Invalid(format!("band [{k_lo}, {k_hi}] holds no grid frequency")));
        }
        let ks: Vec<f64> = band.clone().map(|m| grid.k(m)).collect();
        let context = JostContext::new(spec, opts)?;
        let (table, waves) = JostTable::build_with_samples(&context, &ks, &grid.xs())?;
        let dk = grid.dk();
        let weights = table.measure().density.iter().map(|d| d * dk).collect();
        Ok(Self { grid, band, table, context, waves: waves.into_iter().map(|w| w.u).collect(), weights })
    }

    pub fn ks(&self) -> Vec<f64> {
        self.table.ks()
    }

    /// `u(x_n, k_m)` for band member `m`.
    pub fn wave(&self, m: usize) -> &[f64] {
        &self.waves[m]
    }

    /// `dρ` weight of band member `m`.
    pub fn weight(&self, m: usize) -> f64 {
        self.weights[m]
    }

    fn forward_real(&self, f: &[f64]) -> Vec<f64> {
        let dx = self.grid.dx();
        self.waves.par_iter().map(|u| u.iter().zip(f).map(|(a, b)| a * b).sum::<f64>() * dx).collect()
    }

    fn inverse_real(&self, g: &[f64]) -> Vec<f64> {
        let mut f = vec![0.0; self.grid.n];
        for (m, u) in self.waves.iter().enumerate() {
            let c = g[m] * self.weights[m];
            if c != 0.0 {
                f.iter_mut().zip(u).for_each(|(fi, ui)| *fi += c * ui);
            }
        }
        f
    }

    /// Band coefficients `(Ff)(k_m)` without the truncation check.
    pub fn coefficients(&self, f: &GridFunction<f64>) -> Result<Vec<Complex<f64>>> {
        crate::transforms::same_grid(&self.grid, &f.grid)?;
        let re = self.forward_real(&f.re());
        let im = if f.is_real() {
            vec![0.0; re.len()]
        } else {
            self.forward_real(&f.values.iter().map(|v| v.im).collect::<Vec<_>>())
        };
        Ok(re.into_iter().zip(im).map(|(a, b)| Complex::new(a, b)).collect())
    }

    /// Fraction of `‖f‖²` missing from `∫_band |Ff|² dρ`.
    pub fn plancherel_defect(&self, f: &GridFunction<f64>, coeffs: &[Complex<f64>]) -> f64 {
        let norm = f.l2_norm().powi(2);
        if norm == 0.0 {
            return 0.0;
        }
        let spec: f64 = coeffs.iter().zip(&self.weights).map(|(c, w)| c.norm_sqr() * w).sum();
        (norm - spec) / norm
    }

    fn checked_coefficients(&self, f: &GridFunction<f64>) -> Result<Vec<Complex<f64>>> {
        let c = self.coefficients(f)?;
        let defect = self.plancherel_defect(f, &c);
        if defect > BAND_DEFECT_LIMIT {
            return Err(Error::BandTruncation { defect });
        }
        Ok(c)
    }

    /// `(Ff)(k) = ∫ f(x) u(x, k) dx` on the grid's frequencies; zero off the band.
    pub fn forward(&self, f: &GridFunction<f64>) -> Result<SpectrumFunction<f64>> {
        let c = self.checked_coefficients(f)?;
        let mut values = vec![Complex::new(0.0, 0.0); self.grid.n];
        for (m, v) in self.band.clone().zip(c) {
            values[m] = v;
        }
        SpectrumFunction::new(self.grid, values)
    }

    /// `(F⁻¹g)(x) = ∫ u(x, k) g(k) dρ`, using only band frequencies.
    pub fn inverse(&self, g: &SpectrumFunction<f64>) -> Result<GridFunction<f64>> {
        crate::transforms::same_grid(&self.grid, &g.grid)?;
        let vals = &g.values[self.band.clone()];
        Ok(self.from_coefficients(vals))
    }

    /// Synthesises a grid function from band coefficients.
    pub fn from_coefficients(&self, c: &[Complex<f64>]) -> GridFunction<f64> {
        let re = self.inverse_real(&c.iter().map(|v| v.re).collect::<Vec<_>>());
        let values = if c.iter().all(|v| v.im == 0.0) {
            re.into_iter().map(|a| Complex::new(a, 0.0)).collect()
        } else {
            let im = self.inverse_real(&c.iter().map(|v| v.im).collect::<Vec<_>>());
            re.into_iter().zip(im).map(|(a, b)| Complex::new(a, b)).collect()
        };
        GridFunction { grid: self.grid, values }
    }

    /// `∫ (k²|F u0|² + |F u1|²) dρ`.
    pub fn a_energy(&self, c0: &[Complex<f64>], c1: &[Complex<f64>]) -> f64 {
        let ks = self.ks();
        (0..ks.len()).map(|m| (ks[m] * ks[m] * c0[m].norm_sqr() + c1[m].norm_sqr()) * self.weights[m]).sum()
    }

    /// Coefficients of `S_q(t)(u0, u1)`.
    pub fn rotate(&self, c0: &[Complex<f64>], c1: &[Complex<f64>], t: f64) -> (Vec<Complex<f64>>, Vec<Complex<f64>>) {
        let ks = self.ks();
        let mut a = Vec::with_capacity(ks.len());
        let mut b = Vec::with_capacity(ks.len());
        for (m, &k) in ks.iter().enumerate() {
            let (s, c) = (k * t).sin_cos();
            a.push(c0[m] * c + c1[m] * (s / k));
            b.push(c0[m] * (-k * s) + c1[m] * c);
        }
        (a, b)
    }

    /// Exact propagator `S_q(t)` applied to `(u0, u1)`.
    pub fn propagate(
        &self,
        u0: &GridFunction<f64>,
        u1: &GridFunction<f64>,
        t: f64,
    ) -> Result<(GridFunction<f64>, GridFunction<f64>)> {
        let c0 = self.checked_coefficients(u0)?;
        let c1 = self.checked_coefficients(u1)?;
        let (a, b) = self.rotate(&c0, &c1, t);
        Ok((self.from_coefficients(&a), self.from_coefficients(&b)))
    }
}

/// Physical-space `∫ (|u_x|² + q|u|² + |u_t|²) dx` by centered differences.
pub fn a_energy_physical(spec: &PotentialSpec, u0: &GridFunction<f64>, u1: &GridFunction<f64>) -> f64 {
    let g = u0.grid;
    let dx = g.dx();
    let n = g.n;
    let at = |i: isize| -> Complex<f64> {
        if i < 0 || i >= n as isize {
            Complex::new(0.0, 0.0)
        } else {
            u0.values[i as usize]
        }
    };
    let mut s = 0.0;
    for i in -1..n as isize {
        s += ((at(i + 1) - at(i)) / dx).norm_sqr();
    }
    for i in 0..n {
        s += spec.q(g.x(i)) * u0.values[i].norm_sqr() + u1.values[i].norm_sqr();
    }
    s * dx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients_match_closed_forms() {
        let c = phase_coefficients(4);
        assert_eq!(c, vec![0.5, 0.125, 0.0625, 5.0 / 128.0]);
    }

    #[test]
    fn remainder_series_and_closed_form_agree() {
        for &(k, q) in &[(1.0, 0.3), (2.0, 0.5), (0.7, 0.2)] {
            for order in 1..5 {
                let s: f64 = q / (k * k);
                let head: f64 = SERIES[..order].iter().enumerate().map(|(j, c)| c * s.powi(j as i32 + 1)).sum();
                let direct = k * (1.0 - (1.0 - s).sqrt() - head);
                assert!((phase_remainder(k, q, order) - direct).abs() < 1e-14, "{k} {q} {order}");
            }
        }
    }

    #[test]
    fn free_wave_function() {
        let xs: Vec<f64> = (1..=100).map(|i| i as f64 * 0.5).collect();
        let w = solve_wavefunction(&PotentialSpec::zero(), 2.0, &xs, 1e-11).unwrap();
        for (x, u) in xs.iter().zip(&w.u) {
            assert!((u - (2.0 * x).sin() / 2.0).abs() < 1e-8);
        }
    }

    #[test]
    fn unwrap_removes_jumps() {
        let mut p = vec![3.0, -3.1, 3.0];
        unwrap_phases(&mut p);
        assert!((p[1] - (-3.1 + 2.0 * std::f64::consts::PI)).abs() < 1e-15);
        assert!((p[2] - 3.0).abs() < 1e-15);
    }
}
