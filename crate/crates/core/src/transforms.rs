//! Half-line sine transform pair on the DST-I grid.
//!
//! Nodes are `x_n = n·dx`, `n = 1..N`, with `dx = L/(N+1)`; frequencies are
//! `k_m = πm/L`. The forward map `g_m = Σ_n sin(k_m x_n) f_n dx` and the inverse
//! `f_n = (2/π) Σ_m sin(k_m x_n) g_m dk` are exact inverses.

use std::any::{Any, TypeId};
use std::collections::HashMap;
use std::sync::{Arc, LazyLock, Mutex};

use num_complex::Complex;
use rustdct::{Dst1, DctPlanner};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec<T> {
    pub length: T,
    pub n: usize,
}

impl<T: Scalar> GridSpec<T> {
    pub fn new(length: T, n: usize) -> Result<Self> {
        if !(length > T::zero()) || n < 8 {
            return Err(Error::InvalidGrid(format!("need L > 0 and N >= 8, got L = {length}, N = {n}")));
        }
        Ok(Self { length, n })
    }

    /// Grid with spacing closest to `dx` such that `N + 1` is a power of two.
    pub fn with_spacing(length: T, dx: T) -> Result<Self> {
        let cells = (length / dx).to_f64().unwrap_or(0.0).max(9.0);
        let n = (cells.log2().round() as u32).max(4);
        Self::new(length, (1usize << n) - 1)
    }

    pub fn dx(&self) -> T {
        self.length / T::of_usize(self.n + 1)
    }

    pub fn dk(&self) -> T {
        T::PI() / self.length
    }

    /// Node `i` (0-based), i.e. `x_{i+1}`.
    pub fn x(&self, i: usize) -> T {
        T::of_usize(i + 1) * self.dx()
    }

    /// Frequency `i` (0-based), i.e. `k_{i+1}`.
    pub fn k(&self, i: usize) -> T {
        T::of_usize(i + 1) * self.dk()
    }

    pub fn xs(&self) -> Vec<T> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    pub fn ks(&self) -> Vec<T> {
        (0..self.n).map(|i| self.k(i)).collect()
    }

    /// Index range of frequencies inside `[k_lo, k_hi]`.
    pub fn band_indices(&self, k_lo: T, k_hi: T) -> std::ops::Range<usize> {
        let dk = self.dk();
        let lo = (k_lo / dk).ceil().to_f64().unwrap_or(0.0).max(1.0) as usize;
        let hi = (k_hi / dk).floor().to_f64().unwrap_or(0.0).min(self.n as f64) as usize;
        if hi < lo {
            return 0..0;
        }
        (lo - 1)..hi
    }

    fn same(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length
    }
}

/// Samples on the interior nodes; zero at both ends is implied.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<T> {
    pub grid: GridSpec<T>,
    pub values: Vec<Complex<T>>,
}

/// Values on the frequency grid `k_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumFunction<T> {
    pub grid: GridSpec<T>,
    pub values: Vec<Complex<T>>,
}

impl<T: Scalar> GridFunction<T> {
    pub fn new(grid: GridSpec<T>, values: Vec<Complex<T>>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::GridMismatch(format!("{} samples on a grid of {}", values.len(), grid.n)));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Invalid("non-finite sample".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_real(grid: GridSpec<T>, values: &[T]) -> Result<Self> {
        Self::new(grid, values.iter().map(|&v| Complex::new(v, T::zero())).collect())
    }

    pub fn from_fn(grid: GridSpec<T>, f: impl Fn(T) -> T) -> Self {
        let values = grid.xs().into_iter().map(|x| Complex::new(f(x), T::zero())).collect();
        Self { grid, values }
    }

    pub fn zeros(grid: GridSpec<T>) -> Self {
        Self { grid, values: vec![Complex::new(T::zero(), T::zero()); grid.n] }
    }

    pub fn re(&self) -> Vec<T> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == T::zero())
    }

    /// `(Σ |f|² dx)^{1/2}`.
    pub fn l2_norm(&self) -> T {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<T>() * self.grid.dx()).sqrt()
    }
}

impl<T: Scalar> SpectrumFunction<T> {
    pub fn new(grid: GridSpec<T>, values: Vec<Complex<T>>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::GridMismatch(format!("{} samples on a grid of {}", values.len(), grid.n)));
        }
        Ok(Self { grid, values })
    }

    /// `((2/π) Σ |g|² dk)^{1/2}`.
    pub fn l2_norm(&self) -> T {
        let w = T::lit(2.0) / T::PI() * self.grid.dk();
        (self.values.iter().map(|v| v.norm_sqr()).sum::<T>() * w).sqrt()
    }
}

type PlanMap = HashMap<(TypeId, usize), Arc<dyn Any + Send + Sync>>;
static PLANS: LazyLock<Mutex<PlanMap>> = LazyLock::new(|| Mutex::new(HashMap::new()));

fn plan<T: Scalar>(n: usize) -> Arc<dyn Dst1<T>> {
    let mut map = PLANS.lock().expect("plan cache poisoned");
    let entry = map.entry((TypeId::of::<T>(), n)).or_insert_with(|| {
        let p: Arc<dyn Dst1<T>> = DctPlanner::<T>::new().plan_dst1(n);
        Arc::new(p)
    });
    entry.downcast_ref::<Arc<dyn Dst1<T>>>().expect("plan type").clone()
}

/// Unnormalised DST-I in place: `y_m = Σ_n x_n sin(π(n+1)(m+1)/(N+1))`.
pub fn dst1<T: Scalar>(buf: &mut [T]) {
    plan::<T>(buf.len()).process_dst1(buf);
}

/// Real forward transform, `g_m = Σ_n sin(k_m x_n) f_n dx`.
pub fn sine_forward_real<T: Scalar>(grid: &GridSpec<T>, f: &[T]) -> Vec<T> {
    let mut buf = f.to_vec();
    dst1(&mut buf);
    let dx = grid.dx();
    buf.iter_mut().for_each(|v| *v *= dx);
    buf
}

/// Real inverse transform, `f_n = (2/π) Σ_m sin(k_m x_n) g_m dk`.
pub fn sine_inverse_real<T: Scalar>(grid: &GridSpec<T>, g: &[T]) -> Vec<T> {
    let mut buf = g.to_vec();
    dst1(&mut buf);
    let w = T::lit(2.0) / grid.length;
    buf.iter_mut().for_each(|v| *v *= w);
    buf
}

fn split<T: Scalar>(v: &[Complex<T>]) -> (Vec<T>, Vec<T>) {
    (v.iter().map(|c| c.re).collect(), v.iter().map(|c| c.im).collect())
}

fn join<T: Scalar>(re: Vec<T>, im: Vec<T>) -> Vec<Complex<T>> {
    re.into_iter().zip(im).map(|(a, b)| Complex::new(a, b)).collect()
}

pub fn sine_forward<T: Scalar>(f: &GridFunction<T>) -> SpectrumFunction<T> {
    let (re, im) = split(&f.values);
    let im = if im.iter().all(|v| *v == T::zero()) { im } else { sine_forward_real(&f.grid, &im) };
    SpectrumFunction { grid: f.grid, values: join(sine_forward_real(&f.grid, &re), im) }
}

pub fn sine_inverse<T: Scalar>(g: &SpectrumFunction<T>) -> GridFunction<T> {
    let (re, im) = split(&g.values);
    let im = if im.iter().all(|v| *v == T::zero()) { im } else { sine_inverse_real(&g.grid, &im) };
    GridFunction { grid: g.grid, values: join(sine_inverse_real(&g.grid, &re), im) }
}

/// Zeroes the spectrum outside `[k_lo, k_hi]`.
pub fn band_project<T: Scalar>(f: &GridFunction<T>, k_lo: T, k_hi: T) -> Result<GridFunction<T>> {
    if !(k_lo >= T::zero() && k_lo < k_hi) {
        return Err(Error::Invalid(format!("band [{k_lo}, {k_hi}] must satisfy 0 <= k_lo < k_hi")));
    }
    let mut g = sine_forward(f);
    for (m, v) in g.values.iter_mut().enumerate() {
        let k = f.grid.k(m);
        if k < k_lo || k > k_hi {
            *v = Complex::new(T::zero(), T::zero());
        }
    }
    Ok(sine_inverse(&g))
}

/// Spectral Ḣ¹×L² norm of real data `(v0, v1)`.
pub fn energy_norm_real<T: Scalar>(grid: &GridSpec<T>, v0: &[T], v1: &[T]) -> T {
    let a = sine_forward_real(grid, v0);
    let b = sine_forward_real(grid, v1);
    let mut s = T::zero();
    for m in 0..grid.n {
        let k = grid.k(m);
        s += k * k * a[m] * a[m] + b[m] * b[m];
    }
    (s * T::lit(2.0) / T::PI() * grid.dk()).sqrt()
}

/// `((2/π) Σ_m [k_m² |v̂0|² + |v̂1|²] dk)^{1/2}`.
pub fn energy_norm<T: Scalar>(v0: &GridFunction<T>, v1: &GridFunction<T>) -> Result<T> {
    if !v0.grid.same(&v1.grid) {
        return Err(Error::GridMismatch("energy norm components on different grids".into()));
    }
    let a = sine_forward(v0);
    let b = sine_forward(v1);
    let mut s = T::zero();
    for m in 0..v0.grid.n {
        let k = v0.grid.k(m);
        s += k * k * a.values[m].norm_sqr() + b.values[m].norm_sqr();
    }
    Ok((s * T::lit(2.0) / T::PI() * v0.grid.dk()).sqrt())
}

/// Checks two grids agree.
pub fn same_grid<T: Scalar>(a: &GridSpec<T>, b: &GridSpec<T>) -> Result<()> {
    if a.same(b) {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!("N {} vs {}, L {} vs {}", a.n, b.n, a.length, b.length)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mode_spectrum() {
        let grid = GridSpec::new(10.0f64, 63).unwrap();
        let f = GridFunction::from_fn(grid, |x| (std::f64::consts::PI * x / 10.0).sin());
        let g = sine_forward(&f);
        assert!((g.values[0].re - 5.0).abs() < 1e-12);
        assert!(g.values[1..].iter().all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn inverse_of_single_mode() {
        let grid = GridSpec::new(7.0f64, 31).unwrap();
        let mut g = SpectrumFunction::new(grid, vec![Complex::new(0.0, 0.0); 31]).unwrap();
        g.values[4] = Complex::new(1.0, 0.0);
        let f = sine_inverse(&g);
        for (i, v) in f.values.iter().enumerate() {
            let want = 2.0 / 7.0 * (grid.k(4) * grid.x(i)).sin();
            assert!((v.re - want).abs() < 1e-14);
        }
    }

    #[test]
    fn band_projection_edges() {
        let grid = GridSpec::new(20.0f64, 127).unwrap();
        let f = GridFunction::from_fn(grid, |x| (-(x - 8.0) * (x - 8.0)).exp());
        let all = band_project(&f, 0.0, 1e3).unwrap();
        let none = band_project(&f, 1e3, 2e3).unwrap();
        for i in 0..grid.n {
            assert!((all.values[i] - f.values[i]).norm() < 1e-13);
            assert!(none.values[i].norm() < 1e-300);
        }
    }

    #[test]
    fn band_index_range() {
        let grid = GridSpec::new(std::f64::consts::PI, 99).unwrap();
        assert_eq!(grid.band_indices(2.5, 5.0), 2..5);
        assert_eq!(grid.band_indices(2.2, 2.8), 0..0);
    }

    #[test]
    fn spacing_rounds_to_power_of_two() {
        let g = GridSpec::with_spacing(512.0f64, 0.125).unwrap();
        assert_eq!(g.n, 4095);
        assert_eq!(g.dx(), 0.125);
    }
}
