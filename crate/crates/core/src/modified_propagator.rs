//! Phase shifts `P(k, t)`, the reference propagators `U(t)`, the limit
//! operator `W` and the residual scans that exhibit `U(t)⁻¹ S_q(t) → W`.
//!
//! `P` uses moments from 1:
//! Full `Q₁/(2k) - q(t) Q₁/(4k³) + Q₂/(8k³)`, Simple `Q₁/(2k)`, None `0`.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{FieldState, NodePotential, Simulation};
use crate::potentials::{MomentCache, PotentialSpec};
use crate::scalar::Scalar;
use crate::spectral::{JostContext, SpectralBasis};
use crate::transforms::{energy_norm, same_grid, sine_forward, sine_inverse, GridFunction, SpectrumFunction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhaseShiftVariant {
    Full,
    Simple,
    None,
}

impl PhaseShiftVariant {
    pub fn name(self) -> &'static str {
        match self {
            PhaseShiftVariant::Full => "full",
            PhaseShiftVariant::Simple => "simple",
            PhaseShiftVariant::None => "none",
        }
    }

    /// Full needs β > 1/3, Simple β > 1/2, None an integrable potential (β > 1).
    pub fn admissible(self, beta: f64) -> bool {
        match self {
            PhaseShiftVariant::Full => beta > 1.0 / 3.0,
            PhaseShiftVariant::Simple => beta > 0.5,
            PhaseShiftVariant::None => beta > 1.0,
        }
    }

    pub fn check(self, beta: f64) -> Result<()> {
        if self.admissible(beta) {
            Ok(())
        } else {
            Err(Error::VariantInadmissible { variant: self.name().into(), beta })
        }
    }
}

impl std::str::FromStr for PhaseShiftVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(Self::Full),
            "simple" => Ok(Self::Simple),
            "none" => Ok(Self::None),
            _ => Err(Error::Invalid(format!("unknown variant {s}"))),
        }
    }
}

/// `P(k, t)` for one potential and variant.
#[derive(Clone, Debug)]
pub struct PhaseShift {
    pub variant: PhaseShiftVariant,
    pub spec: PotentialSpec,
    moments: MomentCache,
}

/// `(q(t), Q₁(t), Q₂(t))` with moments from 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentSample {
    pub q: f64,
    pub q1: f64,
    pub q2: f64,
}

impl PhaseShift {
    /// Inadmissible variants are allowed here so their failure can be observed;
    /// see [`PhaseShiftVariant::check`].
    pub fn new(variant: PhaseShiftVariant, spec: &PotentialSpec) -> Result<Self> {
        Ok(Self { variant, spec: spec.clone(), moments: MomentCache::new(spec, 1.0, 2)? })
    }

    pub fn moments(&self, t: f64) -> Result<MomentSample> {
        if self.spec.is_zero() {
            return Ok(MomentSample { q: 0.0, q1: 0.0, q2: 0.0 });
        }
        if t < 1.0 {
            return Err(Error::Invalid(format!("phase shift needs t >= 1, got {t}")));
        }
        Ok(MomentSample { q: self.spec.eval_q(t)?, q1: self.moments.moment(1, t)?, q2: self.moments.moment(2, t)? })
    }

    pub fn value_with(&self, m: &MomentSample, k: f64) -> f64 {
        match self.variant {
            PhaseShiftVariant::Full => m.q1 / (2.0 * k) - m.q * m.q1 / (4.0 * k.powi(3)) + m.q2 / (8.0 * k.powi(3)),
            PhaseShiftVariant::Simple => m.q1 / (2.0 * k),
            PhaseShiftVariant::None => 0.0,
        }
    }

    pub fn value(&self, k: f64, t: f64) -> Result<f64> {
        if !(k > 0.0) {
            return Err(Error::Invalid(format!("k must be positive, got {k}")));
        }
        Ok(self.value_with(&self.moments(t)?, k))
    }

    /// `η(k_m, t) = k_m t + P(k_m, t)`.
    pub fn multiplier(&self, ks: &[f64], t: f64) -> Result<Multiplier> {
        let m = self.moments(t)?;
        Ok(Multiplier { t, eta: ks.iter().map(|&k| k * t + self.value_with(&m, k)).collect() })
    }
}

/// `P(k, t)` for a single point.
pub fn phase_shift(variant: PhaseShiftVariant, spec: &PotentialSpec, k: f64, t: f64) -> Result<f64> {
    PhaseShift::new(variant, spec)?.value(k, t)
}

/// Phases `η(k, t)` of the reference propagator on a k-grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Multiplier {
    pub t: f64,
    pub eta: Vec<f64>,
}

fn rotate_spectrum<T: Scalar>(
    a: &SpectrumFunction<T>,
    b: &SpectrumFunction<T>,
    eta: &[f64],
    sign: f64,
) -> (SpectrumFunction<T>, SpectrumFunction<T>) {
    let mut x = a.clone();
    let mut y = b.clone();
    for m in 0..a.values.len() {
        let k = a.grid.k(m);
        let (s, c) = (sign * eta[m]).sin_cos();
        let (s, c) = (T::lit(s), T::lit(c));
        x.values[m] = a.values[m] * c + b.values[m] * (s / k);
        y.values[m] = a.values[m] * (-k * s) + b.values[m] * c;
    }
    (x, y)
}

fn u_apply<T: Scalar>(
    ps: &PhaseShift,
    t: f64,
    v0: &GridFunction<T>,
    v1: &GridFunction<T>,
    sign: f64,
) -> Result<(GridFunction<T>, GridFunction<T>)> {
    same_grid(&v0.grid, &v1.grid)?;
    let ks: Vec<f64> = v0.grid.ks().into_iter().map(|k| k.as_f64()).collect();
    let mult = ps.multiplier(&ks, t)?;
    let (a, b) = rotate_spectrum(&sine_forward(v0), &sine_forward(v1), &mult.eta, sign);
    Ok((sine_inverse(&a), sine_inverse(&b)))
}

/// `U(t)(v0, v1)`: classic sine transform, rotation by `η`, inverse transform.
pub fn u_vec<T: Scalar>(
    ps: &PhaseShift,
    t: f64,
    v0: &GridFunction<T>,
    v1: &GridFunction<T>,
) -> Result<(GridFunction<T>, GridFunction<T>)> {
    u_apply(ps, t, v0, v1, 1.0)
}

/// `U(t)⁻¹(w0, w1)`.
pub fn u_vec_inverse<T: Scalar>(
    ps: &PhaseShift,
    t: f64,
    w0: &GridFunction<T>,
    w1: &GridFunction<T>,
) -> Result<(GridFunction<T>, GridFunction<T>)> {
    u_apply(ps, t, w0, w1, -1.0)
}

/// Constant `Δ(k)` added to `arg A(k)` so that `W` matches the moments from 1
/// used by the variant's `P`.
pub fn phase_offset(variant: PhaseShiftVariant, ctx: &JostContext, k: f64) -> Result<f64> {
    if ctx.spec.is_zero() {
        return Ok(0.0);
    }
    let c = &ctx.phase.coeffs;
    let n = ctx.phase.order;
    let mo = &ctx.moments;
    let head = |j: usize| mo.moment(j, 1.0);
    let mut d = c[0] / k
        * match variant {
            PhaseShiftVariant::None => mo.moment_tail(1)?,
            _ => head(1)?,
        };
    let k3 = k.powi(3);
    if n >= 2 {
        d += c[1] / k3
            * match variant {
                PhaseShiftVariant::Full => head(2)?,
                _ => mo.moment_tail(2)?,
            };
    } else if variant == PhaseShiftVariant::Full {
        let cache = MomentCache::new(&ctx.spec, 0.0, 2)?;
        d -= (cache.moment_tail(2)? - cache.moment(2, 1.0)?) / (8.0 * k3);
    }
    for j in 3..=n {
        d += c[j - 1] * k.powi(1 - 2 * j as i32) * mo.moment_tail(j)?;
    }
    Ok(d)
}

/// The limit operator `W = F₀⁻¹ R(arg A + Δ) F/|A|` on a spectral basis.
#[derive(Clone, Debug)]
pub struct WaveOperator<'a> {
    pub basis: &'a SpectralBasis,
    pub variant: PhaseShiftVariant,
    pub angle: Vec<f64>,
}

impl<'a> WaveOperator<'a> {
    pub fn new(basis: &'a SpectralBasis, variant: PhaseShiftVariant) -> Result<Self> {
        let angle = basis
            .table
            .entries
            .iter()
            .map(|e| Ok(e.arg_a + phase_offset(variant, &basis.context, e.k)?))
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self { basis, variant, angle })
    }

    /// Applies `W` to band coefficients of `(u0, u1)`.
    pub fn apply_coefficients(
        &self,
        c0: &[Complex<f64>],
        c1: &[Complex<f64>],
    ) -> (GridFunction<f64>, GridFunction<f64>) {
        let grid = self.basis.grid;
        let zero = Complex::new(0.0, 0.0);
        let mut a = vec![zero; grid.n];
        let mut b = vec![zero; grid.n];
        for (i, (m, e)) in self.basis.band.clone().zip(&self.basis.table.entries).enumerate() {
            let k = e.k;
            let (s, c) = self.angle[i].sin_cos();
            let x0 = c0[i] / e.abs_a;
            let x1 = c1[i] / e.abs_a;
            a[m] = x0 * c + x1 * (s / k);
            b[m] = x0 * (-k * s) + x1 * c;
        }
        (
            sine_inverse(&SpectrumFunction { grid, values: a }),
            sine_inverse(&SpectrumFunction { grid, values: b }),
        )
    }

    pub fn apply(
        &self,
        u0: &GridFunction<f64>,
        u1: &GridFunction<f64>,
    ) -> Result<(GridFunction<f64>, GridFunction<f64>)> {
        let (c0, c1) = checked_pair(self.basis, u0, u1)?;
        Ok(self.apply_coefficients(&c0, &c1))
    }
}

fn checked_pair(
    basis: &SpectralBasis,
    u0: &GridFunction<f64>,
    u1: &GridFunction<f64>,
) -> Result<(Vec<Complex<f64>>, Vec<Complex<f64>>)> {
    let c0 = basis.coefficients(u0)?;
    let c1 = basis.coefficients(u1)?;
    let ks = basis.ks();
    let mut spec = 0.0;
    for m in 0..ks.len() {
        spec += (ks[m] * ks[m] * c0[m].norm_sqr() + c1[m].norm_sqr()) * basis.weight(m);
    }
    let phys = crate::spectral::a_energy_physical(&basis.context.spec, u0, u1);
    if phys > 0.0 {
        let defect = (phys - spec) / phys;
        if defect > 0.01 {
            return Err(Error::BandTruncation { defect });
        }
    }
    Ok((c0, c1))
}

/// `W(u0, u1)`.
pub fn w_vec(
    basis: &SpectralBasis,
    variant: PhaseShiftVariant,
    u0: &GridFunction<f64>,
    u1: &GridFunction<f64>,
) -> Result<(GridFunction<f64>, GridFunction<f64>)> {
    WaveOperator::new(basis, variant)?.apply(u0, u1)
}

/// One row of a residual scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub t: f64,
    pub residual: f64,
    /// Distance to the previous row's `U(t)⁻¹ S_q(t) d`.
    pub cauchy: Option<f64>,
}

fn difference_norm(
    a: &(GridFunction<f64>, GridFunction<f64>),
    b: &(GridFunction<f64>, GridFunction<f64>),
) -> Result<f64> {
    let d0 = sub(&a.0, &b.0)?;
    let d1 = sub(&a.1, &b.1)?;
    energy_norm(&d0, &d1)
}

fn sub(a: &GridFunction<f64>, b: &GridFunction<f64>) -> Result<GridFunction<f64>> {
    same_grid(&a.grid, &b.grid)?;
    Ok(GridFunction { grid: a.grid, values: a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect() })
}

/// `‖U(t)⁻¹ S_q(t) d - reference‖` for each `t`, with `S_q` exact on the basis.
pub fn waveop_residual(
    basis: &SpectralBasis,
    ps: &PhaseShift,
    reference: &(GridFunction<f64>, GridFunction<f64>),
    data: &(GridFunction<f64>, GridFunction<f64>),
    t_list: &[f64],
) -> Result<Vec<ResidualRow>> {
    let (c0, c1) = checked_pair(basis, &data.0, &data.1)?;
    let pulled: Vec<(GridFunction<f64>, GridFunction<f64>)> = t_list
        .par_iter()
        .map(|&t| {
            let (a, b) = basis.rotate(&c0, &c1, t);
            let w0 = basis.from_coefficients(&a);
            let w1 = basis.from_coefficients(&b);
            u_vec_inverse(ps, t, &w0, &w1)
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(t_list.len());
    for (i, p) in pulled.iter().enumerate() {
        let cauchy = if i > 0 { Some(difference_norm(p, &pulled[i - 1])?) } else { None };
        rows.push(ResidualRow { t: t_list[i], residual: difference_norm(p, reference)?, cauchy });
    }
    Ok(rows)
}

/// `(∫ (w_x² + q w² + w_t²) dx)^{1/2}` on the finite-difference grid.
pub fn fd_energy_norm<T: Scalar>(state: &FieldState<T>, pot: &NodePotential<T>) -> T {
    let dx = state.grid.dx();
    let n = state.grid.n;
    let at = |i: isize| if i < 0 || i >= n as isize { T::zero() } else { state.w[i as usize] };
    let mut s = T::zero();
    for i in -1..n as isize {
        let d = (at(i + 1) - at(i)) / dx;
        s += d * d;
    }
    for i in 0..n {
        s += pot.q[i + 1] * state.w[i] * state.w[i] + state.wt[i] * state.wt[i];
    }
    (s * dx).sqrt()
}

fn reversed<T: Scalar>(s: &FieldState<T>) -> FieldState<T> {
    FieldState { grid: s.grid, w: s.w.clone(), wt: s.wt.iter().map(|v| -*v).collect(), time: T::zero() }
}

/// Checks `q_a = q_b` (relative tolerance `rtol`) on a log grid beyond `r`.
pub fn check_far_equal(a: &PotentialSpec, b: &PotentialSpec, r: f64, rtol: f64) -> Result<()> {
    for i in 0..=400 {
        let x = r * (1e4f64).powf(i as f64 / 400.0);
        let (qa, qb) = (a.eval_q(x)?, b.eval_q(x)?);
        let gap = (qa - qb).abs();
        if gap > rtol * qa.abs().max(qb.abs()) {
            return Err(Error::PotentialsDifferFar { r, x, gap });
        }
    }
    Ok(())
}

/// One Cauchy difference of `S_b(-t) S_a(t) d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchyRow {
    pub t1: f64,
    pub t2: f64,
    pub difference: f64,
}

/// Finite-difference scan of `S_b(-t) S_a(t) d` over `t_list`; differences of
/// consecutive entries in the `b` energy norm.
pub fn intertwine_residual<T: Scalar>(
    spec_a: &PotentialSpec,
    spec_b: &PotentialSpec,
    r: f64,
    far_rtol: f64,
    data: &FieldState<T>,
    t_list: &[f64],
    cfl: T,
) -> Result<Vec<CauchyRow>> {
    check_far_equal(spec_a, spec_b, r, far_rtol)?;
    let pot_b = NodePotential::new(spec_b, &data.grid)?;
    let mut fwd = Simulation::new(spec_a, data.clone(), cfl)?;
    fwd.set_tracking(false);
    let mut pulled = Vec::with_capacity(t_list.len());
    for &t in t_list {
        fwd.advance_to(T::lit(t))?;
        let mut back = Simulation::with_potential(pot_b.clone(), reversed(&fwd.state), cfl)?;
        back.set_tracking(false);
        back.advance_to(T::lit(t))?;
        pulled.push(reversed(&back.state));
    }
    let mut rows = Vec::new();
    for i in 1..pulled.len() {
        let d = FieldState {
            grid: data.grid,
            w: pulled[i].w.iter().zip(&pulled[i - 1].w).map(|(a, b)| *a - *b).collect(),
            wt: pulled[i].wt.iter().zip(&pulled[i - 1].wt).map(|(a, b)| *a - *b).collect(),
            time: T::zero(),
        };
        rows.push(CauchyRow { t1: t_list[i - 1], t2: t_list[i], difference: fd_energy_norm(&d, &pot_b).as_f64() });
    }
    Ok(rows)
}

/// `w̃(x, t) = ∫_a^b f(k) e^{i(±kx + kt + P(k, t))} dk` by the trapezoid rule
/// at spacing `dk`, which must not exceed `2π/(10(x + t))` for the largest `x`.
pub fn oscillatory_packet(
    f: impl Fn(f64) -> f64,
    band: (f64, f64),
    ps: &PhaseShift,
    t: f64,
    sign: f64,
    xs: &[f64],
    dk: f64,
) -> Result<Vec<Complex<f64>>> {
    let (a, b) = band;
    if !(a > 0.0 && b > a) {
        return Err(Error::Invalid(format!("band [{a}, {b}] must lie in (0, ∞)")));
    }
    let xmax = xs.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let bound = 2.0 * std::f64::consts::PI / (10.0 * (xmax + t.abs()));
    if dk > bound {
        return Err(Error::UnderResolved { spacing: dk, bound });
    }
    let m = ((b - a) / dk).ceil() as usize;
    let h = (b - a) / m as f64;
    let ms = ps.moments(t)?;
    let coef: Vec<Complex<f64>> = (0..=m)
        .map(|i| {
            let k = a + i as f64 * h;
            let w = if i == 0 || i == m { 0.5 * h } else { h };
            Complex::from_polar(w * f(k), k * t + ps.value_with(&ms, k))
        })
        .collect();
    Ok(xs
        .par_iter()
        .map(|&x| {
            let step = Complex::from_polar(1.0, sign * h * x);
            let mut e = Complex::from_polar(1.0, sign * a * x);
            let mut s = Complex::new(0.0, 0.0);
            for (i, c) in coef.iter().enumerate() {
                if i % 64 == 0 {
                    e = Complex::from_polar(1.0, sign * (a + i as f64 * h) * x);
                }
                s += c * e;
                e *= step;
            }
            s
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_shift_of_inverse_sqrt() {
        let s = PotentialSpec::inverse_power(0.5);
        let p = phase_shift(PhaseShiftVariant::Full, &s, 1.0, 4.0).unwrap();
        assert!((p - (1.0 - 0.25 + 4f64.ln() / 8.0)).abs() < 1e-10);
        let p = phase_shift(PhaseShiftVariant::Simple, &s, 2.0, 4.0).unwrap();
        assert!((p - 0.5).abs() < 1e-10);
    }

    #[test]
    fn admissibility_thresholds() {
        assert!(PhaseShiftVariant::Full.admissible(0.45));
        assert!(!PhaseShiftVariant::Simple.admissible(0.45));
        assert!(PhaseShiftVariant::None.check(0.9).is_err());
    }
}
