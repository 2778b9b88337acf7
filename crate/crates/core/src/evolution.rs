//! Finite-difference evolution of `w_tt - w_xx + q w = 0` on `[0, L]` with
//! `w = 0` at both ends, and the energy diagnostics built on it.
//!
//! Densities follow `e = w_x² + w_t² + q w²`,
//! `e_± = ½(w_x ∓ w_t)² + ½ q w²`, `e' = q w²` and `M = -½ q' w²`, so that
//! `e_+ + e_- = e` and the total energy is `E = ∫ e`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::PotentialSpec;
use crate::scalar::Scalar;
use crate::transforms::GridSpec;

/// `(w, w_t)` on the interior nodes at time `time`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState<T> {
    pub grid: GridSpec<T>,
    pub w: Vec<T>,
    pub wt: Vec<T>,
    pub time: T,
}

impl<T: Scalar> FieldState<T> {
    pub fn new(grid: GridSpec<T>, w: Vec<T>, wt: Vec<T>, time: T) -> Result<Self> {
        if w.len() != grid.n || wt.len() != grid.n {
            return Err(Error::GridMismatch(format!("state of length {}/{} on a grid of {}", w.len(), wt.len(), grid.n)));
        }
        if w.iter().chain(&wt).any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite field value".into()));
        }
        Ok(Self { grid, w, wt, time })
    }

    pub fn zeros(grid: GridSpec<T>) -> Self {
        Self { grid, w: vec![T::zero(); grid.n], wt: vec![T::zero(); grid.n], time: T::zero() }
    }

    pub fn from_fns(grid: GridSpec<T>, w: impl Fn(T) -> T, wt: impl Fn(T) -> T) -> Self {
        let xs = grid.xs();
        Self {
            grid,
            w: xs.iter().map(|&x| w(x)).collect(),
            wt: xs.iter().map(|&x| wt(x)).collect(),
            time: T::zero(),
        }
    }
}

/// `q` and `q'` at the nodes `x_0 = 0, ..., x_{N+1} = L`. The values at
/// `x = 0` are never used against a nonzero field and are set to 0 when the
/// potential is singular there.
#[derive(Clone, Debug)]
pub struct NodePotential<T> {
    pub q: Vec<T>,
    pub dq: Vec<T>,
}

impl<T: Scalar> NodePotential<T> {
    pub fn new(spec: &PotentialSpec, grid: &GridSpec<T>) -> Result<Self> {
        let dx = grid.dx().as_f64();
        let mut q = Vec::with_capacity(grid.n + 2);
        let mut dq = Vec::with_capacity(grid.n + 2);
        for i in 0..grid.n + 2 {
            let x = i as f64 * dx;
            let (a, b) = if i == 0 && spec.domain_start() > 0.0 { (0.0, 0.0) } else { spec.eval_pair(x)? };
            q.push(T::lit(a));
            dq.push(T::lit(b));
        }
        Ok(Self { q, dq })
    }
}

/// Pointwise fields on all nodes including both boundaries.
#[derive(Clone, Debug)]
pub struct Densities<T> {
    pub dx: T,
    pub w: Vec<T>,
    pub wx: Vec<T>,
    pub wt: Vec<T>,
    pub e: Vec<T>,
    pub e_minus: Vec<T>,
    pub e_plus: Vec<T>,
    pub e_prime: Vec<T>,
    pub morawetz: Vec<T>,
}

/// `w_x(0)` from the one-sided second-order stencil with `w(0) = 0`.
pub fn boundary_slope<T: Scalar>(w: &[T], dx: T) -> T {
    let w2 = if w.len() > 1 { w[1] } else { T::zero() };
    (T::lit(4.0) * w[0] - w2) / (T::lit(2.0) * dx)
}

impl<T: Scalar> Densities<T> {
    pub fn new(state: &FieldState<T>, pot: &NodePotential<T>) -> Self {
        let n = state.grid.n;
        let dx = state.grid.dx();
        let half = T::lit(0.5);
        let mut w = Vec::with_capacity(n + 2);
        w.push(T::zero());
        w.extend_from_slice(&state.w);
        w.push(T::zero());
        let mut wt = Vec::with_capacity(n + 2);
        wt.push(T::zero());
        wt.extend_from_slice(&state.wt);
        wt.push(T::zero());
        let mut wx = vec![T::zero(); n + 2];
        wx[0] = boundary_slope(&state.w, dx);
        wx[n + 1] = -boundary_slope(&state.w.iter().rev().copied().collect::<Vec<_>>(), dx);
        for i in 1..=n {
            wx[i] = (w[i + 1] - w[i - 1]) / (T::lit(2.0) * dx);
        }
        let mut d = Self {
            dx,
            e: Vec::with_capacity(n + 2),
            e_minus: Vec::with_capacity(n + 2),
            e_plus: Vec::with_capacity(n + 2),
            e_prime: Vec::with_capacity(n + 2),
            morawetz: Vec::with_capacity(n + 2),
            w,
            wx,
            wt,
        };
        for i in 0..n + 2 {
            let ep = pot.q[i] * d.w[i] * d.w[i];
            let a = d.wx[i] - d.wt[i];
            let b = d.wx[i] + d.wt[i];
            let plus = half * a * a + half * ep;
            let minus = half * b * b + half * ep;
            d.e_prime.push(ep);
            d.e_plus.push(plus);
            d.e_minus.push(minus);
            d.e.push(plus + minus);
            d.morawetz.push(-half * pot.dq[i] * d.w[i] * d.w[i]);
        }
        d
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn x(&self, i: usize) -> T {
        T::of_usize(i) * self.dx
    }

    /// Piecewise-linear interpolant of nodal values `v` at `x`.
    pub fn interp(&self, v: &[T], x: T) -> T {
        let s = x / self.dx;
        let last = v.len() - 1;
        if s <= T::zero() {
            return v[0];
        }
        let i = s.floor().to_usize().unwrap_or(last).min(last);
        if i >= last {
            return v[last];
        }
        let f = s - T::of_usize(i);
        v[i] * (T::one() - f) + v[i + 1] * f
    }

    /// `∫_a^b` of the piecewise-linear interpolant of `v`.
    pub fn integrate(&self, v: &[T], a: T, b: T) -> T {
        let l = self.x(v.len() - 1);
        let (a, b) = (a.max(T::zero()), b.min(l));
        if b <= a {
            return T::zero();
        }
        let ia = (a / self.dx).ceil().to_usize().unwrap_or(0);
        let ib = (b / self.dx).floor().to_usize().unwrap_or(0);
        let half = T::lit(0.5);
        if ia > ib {
            return half * (self.interp(v, a) + self.interp(v, b)) * (b - a);
        }
        let mut s = half * (self.interp(v, a) + v[ia]) * (self.x(ia) - a);
        for i in ia..ib {
            s += half * (v[i] + v[i + 1]) * self.dx;
        }
        s + half * (v[ib] + self.interp(v, b)) * (b - self.x(ib))
    }

    pub fn total(&self, v: &[T]) -> T {
        self.integrate(v, T::zero(), self.x(v.len() - 1))
    }
}

/// Energy split of one state plus the accumulated boundary and Morawetz terms of its run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport<T> {
    pub time: T,
    pub e_total: T,
    pub e_minus: T,
    pub e_plus: T,
    pub potential_part: T,
    /// `½ ∫ |w_x(0, t)|² dt` since the start of the run.
    pub boundary_flux_accum: T,
    /// `∬ M dx dt` since the start of the run.
    pub morawetz_accum: T,
}

pub fn energy_decomposition<T: Scalar>(state: &FieldState<T>, pot: &NodePotential<T>) -> EnergyReport<T> {
    let d = Densities::new(state, pot);
    EnergyReport {
        time: state.time,
        e_total: d.total(&d.e),
        e_minus: d.total(&d.e_minus),
        e_plus: d.total(&d.e_plus),
        potential_part: d.total(&d.e_prime),
        boundary_flux_accum: T::zero(),
        morawetz_accum: T::zero(),
    }
}

/// `∫_a^b e(x, t) dx`.
pub fn shell_energy<T: Scalar>(state: &FieldState<T>, pot: &NodePotential<T>, a: T, b: T) -> T {
    let d = Densities::new(state, pot);
    d.integrate(&d.e, a, b)
}

/// `sup_r ∫_r^{r+ℓ} e dx` over node-aligned windows (ℓ rounded to whole cells).
pub fn sliding_max<T: Scalar>(state: &FieldState<T>, pot: &NodePotential<T>, ell: T) -> T {
    let d = Densities::new(state, pot);
    sliding_max_of(&d.e, d.dx, ell)
}

/// Sliding-window maximum of the trapezoid integral of nodal values `v`.
pub fn sliding_max_of<T: Scalar>(v: &[T], dx: T, ell: T) -> T {
    let cells = (ell / dx).round().to_usize().unwrap_or(1).max(1);
    let mut prefix = vec![T::zero(); v.len()];
    for i in 1..v.len() {
        prefix[i] = prefix[i - 1] + T::lit(0.5) * (v[i - 1] + v[i]) * dx;
    }
    if cells >= v.len() {
        return prefix[v.len() - 1];
    }
    (0..v.len() - cells).map(|i| prefix[i + cells] - prefix[i]).fold(T::zero(), |a, b| a.max(b))
}

/// Quantities whose large-time limits vanish.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticDiagnostics<T> {
    pub time: T,
    pub potential_part: T,
    pub hardy: T,
    pub sup_w2_over_x: T,
    /// `(c, ∫_0^{c|t|} e)` for each requested fraction.
    pub inner_energy: Vec<(T, T)>,
    /// `(c, E_-([0, c|t|]))`.
    pub inner_inward: Vec<(T, T)>,
}

pub fn asymptotic_diagnostics<T: Scalar>(
    state: &FieldState<T>,
    pot: &NodePotential<T>,
    fractions: &[T],
) -> AsymptoticDiagnostics<T> {
    let d = Densities::new(state, pot);
    let mut hardy_v = vec![T::zero(); d.len()];
    let mut sup = T::zero();
    for i in 1..d.len() {
        let x = d.x(i);
        hardy_v[i] = d.w[i] * d.w[i] / (x * x);
        sup = sup.max(d.w[i] * d.w[i] / x);
    }
    hardy_v[0] = d.wx[0] * d.wx[0];
    let t = state.time.abs();
    AsymptoticDiagnostics {
        time: state.time,
        potential_part: d.total(&d.e_prime),
        hardy: d.total(&hardy_v),
        sup_w2_over_x: sup,
        inner_energy: fractions.iter().map(|&c| (c, d.integrate(&d.e, T::zero(), c * t))).collect(),
        inner_inward: fractions.iter().map(|&c| (c, d.integrate(&d.e_minus, T::zero(), c * t))).collect(),
    }
}

/// Space-time region for flux checks. Times are snapped to the step grid
/// when registered.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Region<T> {
    Rectangle { x1: T, x2: T, t1: T, t2: T },
    /// `{x ≥ 0, x + t ≤ s, t ≥ t0}`.
    Triangle { s: T, t0: T },
}

/// Trapezoid accumulator over consecutive step samples.
#[derive(Clone, Copy, Debug, Default)]
struct Trapezoid<T> {
    sum: T,
    last: Option<T>,
}

impl<T: Scalar> Trapezoid<T> {
    fn push(&mut self, v: T, dt: T) {
        if let Some(p) = self.last {
            self.sum += T::lit(0.5) * (p + v) * dt;
        }
        self.last = Some(v);
    }
}

#[derive(Clone, Debug)]
struct RegionTrace<T> {
    region: Region<T>,
    start: u64,
    end: u64,
    spatial_start: Vec<T>,
    spatial_end: Vec<T>,
    time_parts: Vec<Trapezoid<T>>,
    done: bool,
}

/// Both sides of the flux identities on one region, relative to `E`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxResidual<T> {
    pub inward: T,
    pub outward: Option<T>,
    pub energy: T,
}

/// Summary of the Morawetz quantities over a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MorawetzScan<T> {
    /// `∫ |w_x(0, t)|² dt`.
    pub boundary: T,
    /// `∬ (-q') |w|² dx dt`.
    pub interior: T,
    pub bound: T,
    pub within_bound: bool,
    /// `|½ ∫ |w_x(0)|² + ∬ M - E_-(t_start)| / E`.
    pub representation_defect: T,
    /// `E_-` at the end of the run is below `0.05 E`.
    pub settled: bool,
}

/// Leapfrog (velocity Verlet) integrator with running diagnostics.
#[derive(Clone, Debug)]
pub struct Simulation<T: Scalar> {
    pub state: FieldState<T>,
    pub pot: NodePotential<T>,
    dt: T,
    t_start: T,
    steps: u64,
    acc: Vec<T>,
    initial: EnergyReport<T>,
    boundary: Trapezoid<T>,
    interior: Trapezoid<T>,
    regions: Vec<RegionTrace<T>>,
    snapshot_steps: Vec<u64>,
    snapshots: Vec<FieldState<T>>,
    report_every: u64,
    reports: Vec<EnergyReport<T>>,
    tracking: bool,
}

impl<T: Scalar> Simulation<T> {
    /// Requires `cfl ≤ 0.9` and `q_max dt² < 0.1`.
    pub fn new(spec: &PotentialSpec, state: FieldState<T>, cfl: T) -> Result<Self> {
        let pot = NodePotential::new(spec, &state.grid)?;
        Self::with_potential(pot, state, cfl)
    }

    pub fn with_potential(pot: NodePotential<T>, state: FieldState<T>, cfl: T) -> Result<Self> {
        let dx = state.grid.dx();
        let dt = cfl * dx;
        if !(cfl > T::zero() && cfl <= T::lit(0.9)) {
            return Err(Error::CflViolation { dt: dt.as_f64(), dx: dx.as_f64() });
        }
        let qmax = pot.q[1..].iter().fold(T::zero(), |a, &b| a.max(b));
        if qmax * dt * dt >= T::lit(0.1) {
            return Err(Error::CflViolation { dt: dt.as_f64(), dx: dx.as_f64() });
        }
        let initial = energy_decomposition(&state, &pot);
        let mut sim = Self {
            acc: vec![T::zero(); state.grid.n],
            t_start: state.time,
            state,
            pot,
            dt,
            steps: 0,
            initial,
            boundary: Trapezoid::default(),
            interior: Trapezoid::default(),
            regions: Vec::new(),
            snapshot_steps: Vec::new(),
            snapshots: Vec::new(),
            report_every: 0,
            reports: vec![initial],
            tracking: true,
        };
        sim.acceleration();
        sim.observe();
        Ok(sim)
    }

    /// With tracking off only snapshots are recorded; the Morawetz
    /// accumulators, regions and periodic reports stop updating.
    pub fn set_tracking(&mut self, on: bool) {
        self.tracking = on;
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn initial_report(&self) -> EnergyReport<T> {
        self.initial
    }

    fn step_time(&self, k: u64) -> T {
        self.t_start + T::lit(k as f64) * self.dt
    }

    fn step_of(&self, t: T) -> i64 {
        ((t - self.t_start) / self.dt).round().to_i64().unwrap_or(i64::MAX)
    }

    fn acceleration(&mut self) {
        let n = self.state.grid.n;
        let dx = self.state.grid.dx();
        let inv = T::one() / (dx * dx);
        let w = &self.state.w;
        for i in 0..n {
            let l = if i == 0 { T::zero() } else { w[i - 1] };
            let r = if i + 1 == n { T::zero() } else { w[i + 1] };
            self.acc[i] = (l - T::lit(2.0) * w[i] + r) * inv - self.pot.q[i + 1] * w[i];
        }
    }

    /// One velocity-Verlet step.
    pub fn step(&mut self) {
        let h = T::lit(0.5) * self.dt;
        for (v, a) in self.state.wt.iter_mut().zip(&self.acc) {
            *v += h * *a;
        }
        for (w, v) in self.state.w.iter_mut().zip(&self.state.wt) {
            *w += self.dt * *v;
        }
        self.acceleration();
        for (v, a) in self.state.wt.iter_mut().zip(&self.acc) {
            *v += h * *a;
        }
        self.steps += 1;
        self.state.time = self.step_time(self.steps);
        self.observe();
    }

    /// Registers a region whose identities are accumulated while stepping.
    /// Returns its handle for [`Simulation::flux_check`].
    pub fn register(&mut self, region: Region<T>) -> Result<usize> {
        let (t1, t2) = match region {
            Region::Rectangle { x1, x2, t1, t2 } => {
                if !(x1 >= T::zero() && x2 >= x1 && t2 >= t1) {
                    return Err(Error::Invalid("rectangle needs 0 <= x1 <= x2 and t1 <= t2".into()));
                }
                (t1, t2)
            }
            Region::Triangle { s, t0 } => {
                if !(s >= t0) {
                    return Err(Error::Invalid("triangle needs s >= t0".into()));
                }
                (t0, s)
            }
        };
        let (a, b) = (self.step_of(t1), self.step_of(t2));
        if a < self.steps as i64 {
            return Err(Error::RegionOutsideHistory(format!("region starts at {t1}, before the current time")));
        }
        let parts = match region {
            Region::Rectangle { .. } => 5,
            Region::Triangle { .. } => 3,
        };
        self.regions.push(RegionTrace {
            region,
            start: a as u64,
            end: b as u64,
            spatial_start: Vec::new(),
            spatial_end: Vec::new(),
            time_parts: vec![Trapezoid::default(); parts],
            done: false,
        });
        if a as u64 == self.steps {
            let d = Densities::new(&self.state, &self.pot);
            let k = self.regions.len() - 1;
            Self::observe_region(&mut self.regions[k], &d, self.steps, self.state.time, self.dt);
        }
        Ok(self.regions.len() - 1)
    }

    /// Stores a copy of the state at the step nearest `t`.
    pub fn request_snapshot(&mut self, t: T) {
        let k = self.step_of(t);
        if k >= self.steps as i64 {
            self.snapshot_steps.push(k as u64);
        }
    }

    /// Records an energy report every `every` steps.
    pub fn report_every(&mut self, every: u64) {
        self.report_every = every;
    }

    pub fn snapshots(&self) -> &[FieldState<T>] {
        &self.snapshots
    }

    pub fn reports(&self) -> &[EnergyReport<T>] {
        &self.reports
    }

    fn observe_region(tr: &mut RegionTrace<T>, d: &Densities<T>, step: u64, t: T, dt: T) {
        if tr.done || step < tr.start || step > tr.end {
            return;
        }
        let half = T::lit(0.5);
        match tr.region {
            Region::Rectangle { x1, x2, .. } => {
                let at = |v: &[T], x: T| d.interp(v, x);
                let g_in = |x: T| {
                    let b = at(&d.wx, x) + at(&d.wt, x);
                    half * (b * b - at(&d.e_prime, x))
                };
                let g_out = |x: T| {
                    let a = at(&d.wx, x) - at(&d.wt, x);
                    half * (-a * a + at(&d.e_prime, x))
                };
                let spatial = || {
                    let mut fin = vec![T::zero(); d.len()];
                    let mut fout = vec![T::zero(); d.len()];
                    for i in 0..d.len() {
                        let b = d.wx[i] + d.wt[i];
                        let a = d.wx[i] - d.wt[i];
                        fin[i] = half * (b * b + d.e_prime[i]);
                        fout[i] = half * (a * a + d.e_prime[i]);
                    }
                    vec![d.integrate(&fin, x1, x2), d.integrate(&fout, x1, x2)]
                };
                if step == tr.start {
                    tr.spatial_start = spatial();
                }
                let vals = [g_in(x1), g_in(x2), g_out(x1), g_out(x2), d.integrate(&d.morawetz, x1, x2)];
                for (p, v) in tr.time_parts.iter_mut().zip(vals) {
                    p.push(v, dt);
                }
                if step == tr.end {
                    tr.spatial_end = spatial();
                    tr.done = true;
                }
            }
            Region::Triangle { s, .. } => {
                if step == tr.start {
                    tr.spatial_start = vec![d.integrate(&d.e_minus, T::zero(), s - t)];
                }
                let wx0 = d.wx[0];
                let vals = [half * wx0 * wx0, d.interp(&d.e_prime, s - t), d.integrate(&d.morawetz, T::zero(), s - t)];
                for (p, v) in tr.time_parts.iter_mut().zip(vals) {
                    p.push(v, dt);
                }
                if step == tr.end {
                    tr.done = true;
                }
            }
        }
    }

    fn observe(&mut self) {
        if !self.tracking {
            if self.snapshot_steps.contains(&self.steps) {
                self.snapshots.push(self.state.clone());
                let s = self.steps;
                self.snapshot_steps.retain(|&k| k != s);
            }
            return;
        }
        let d = Densities::new(&self.state, &self.pot);
        let wx0 = d.wx[0];
        self.boundary.push(T::lit(0.5) * wx0 * wx0, self.dt);
        self.interior.push(d.total(&d.morawetz), self.dt);
        let (steps, t, dt) = (self.steps, self.state.time, self.dt);
        for tr in &mut self.regions {
            Self::observe_region(tr, &d, steps, t, dt);
        }
        if self.snapshot_steps.contains(&steps) {
            self.snapshots.push(self.state.clone());
            self.snapshot_steps.retain(|&k| k != steps);
        }
        if self.report_every > 0 && steps % self.report_every == 0 && steps > 0 {
            let r = self.report_from(&d);
            self.reports.push(r);
        }
    }

    fn report_from(&self, d: &Densities<T>) -> EnergyReport<T> {
        EnergyReport {
            time: self.state.time,
            e_total: d.total(&d.e),
            e_minus: d.total(&d.e_minus),
            e_plus: d.total(&d.e_plus),
            potential_part: d.total(&d.e_prime),
            boundary_flux_accum: self.boundary.sum,
            morawetz_accum: self.interior.sum,
        }
    }

    pub fn report(&self) -> EnergyReport<T> {
        self.report_from(&Densities::new(&self.state, &self.pot))
    }

    /// Steps until the step nearest `t_end`; fails if the energy grows tenfold.
    pub fn advance_to(&mut self, t_end: T) -> Result<()> {
        let target = self.step_of(t_end);
        let e0 = self.initial.e_total;
        let check = 200u64;
        while (self.steps as i64) < target {
            self.step();
            if self.steps % check == 0 {
                let e: T = self.state.wt.iter().map(|v| *v * *v).sum::<T>() * self.state.grid.dx();
                if !e.is_finite() || (e0 > T::zero() && e > T::lit(10.0) * e0) {
                    return Err(Error::Blowup { t: self.state.time.as_f64() });
                }
            }
        }
        Ok(())
    }

    /// Relative residuals of the flux identities on a registered region.
    pub fn flux_check(&self, id: usize) -> Result<FluxResidual<T>> {
        let tr = self.regions.get(id).ok_or_else(|| Error::Invalid(format!("no region {id}")))?;
        if !tr.done {
            return Err(Error::RegionOutsideHistory(format!("{:?} not yet covered at t = {}", tr.region, self.state.time)));
        }
        let energy = self.initial.e_total;
        let scale = if energy > T::zero() { energy } else { T::one() };
        let p: Vec<T> = tr.time_parts.iter().map(|p| p.sum).collect();
        match tr.region {
            Region::Rectangle { .. } => {
                let inward = tr.spatial_end[0] - tr.spatial_start[0] - p[1] + p[0] + p[4];
                let outward = tr.spatial_end[1] - tr.spatial_start[1] - p[3] + p[2] - p[4];
                Ok(FluxResidual { inward: inward.abs() / scale, outward: Some(outward.abs() / scale), energy })
            }
            Region::Triangle { .. } => {
                let inward = tr.spatial_start[0] - p[0] - p[1] - p[2];
                Ok(FluxResidual { inward: inward.abs() / scale, outward: None, energy })
            }
        }
    }

    pub fn morawetz_scan(&self) -> MorawetzScan<T> {
        let e = self.initial.e_total;
        let two = T::lit(2.0);
        let boundary = two * self.boundary.sum;
        let interior = two * self.interior.sum;
        let scale = if e > T::zero() { e } else { T::one() };
        let defect = (self.boundary.sum + self.interior.sum - self.initial.e_minus).abs() / scale;
        let now = self.report();
        MorawetzScan {
            boundary,
            interior,
            bound: two * e,
            within_bound: boundary + interior <= two * e,
            representation_defect: defect,
            settled: now.e_minus < T::lit(0.05) * e || e == T::zero(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(x: f64) -> f64 {
        (-(x - 20.0) * (x - 20.0)).exp()
    }

    #[test]
    fn densities_split_exactly() {
        let g = GridSpec::new(40.0, 399).unwrap();
        let st = FieldState::from_fns(g, bump, |x| 0.3 * bump(x));
        let pot = NodePotential::new(&PotentialSpec::shifted_inverse_power(0.6, 1.0), &g).unwrap();
        let d = Densities::new(&st, &pot);
        for i in 0..d.len() {
            assert!((d.e_plus[i] + d.e_minus[i] - d.e[i]).abs() <= 1e-15 * d.e[i].max(1e-300));
            assert!(d.morawetz[i] >= 0.0);
        }
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = GridSpec::new(10.0, 99).unwrap();
        let mut sim = Simulation::new(&PotentialSpec::shifted_inverse_power(0.6, 1.0), FieldState::zeros(g), 0.5).unwrap();
        sim.advance_to(5.0).unwrap();
        assert!(sim.state.w.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn interpolated_integral_matches_polynomial() {
        let g = GridSpec::new(1.0, 99).unwrap();
        let st = FieldState::from_fns(g, |x| x, |_| 0.0);
        let pot = NodePotential::new(&PotentialSpec::zero(), &g).unwrap();
        let d = Densities::new(&st, &pot);
        let w = d.w.clone();
        assert!((d.integrate(&w, 0.123, 0.777) - 0.5 * (0.777f64.powi(2) - 0.123f64.powi(2))).abs() < 1e-14);
    }

    #[test]
    fn cfl_guard() {
        let g = GridSpec::new(10.0, 99).unwrap();
        assert!(matches!(
            Simulation::new(&PotentialSpec::zero(), FieldState::zeros(g), 1.0),
            Err(Error::CflViolation { .. })
        ));
    }
}
