//! Dormand–Prince 5(4) integrator with continuous output.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Clone, Copy, Debug)]
pub struct Tolerance<const D: usize> {
    pub rtol: f64,
    pub atol: [f64; D],
}

/// Continuous extension over one accepted step.
pub struct DenseStep<const D: usize> {
    pub x0: f64,
    pub x1: f64,
    r: [[f64; D]; 5],
}

impl<const D: usize> DenseStep<D> {
    pub fn eval(&self, x: f64) -> [f64; D] {
        let h = self.x1 - self.x0;
        let th = (x - self.x0) / h;
        let th1 = 1.0 - th;
        let mut y = [0.0; D];
        for i in 0..D {
            let r = &self.r;
            y[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        y
    }
}

fn axpy<const D: usize>(y: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    let mut out = *y;
    for &(a, k) in terms {
        if a != 0.0 {
            for i in 0..D {
                out[i] += h * a * k[i];
            }
        }
    }
    out
}

/// Integrates `y' = f(x, y)` from `x0` to `x1`, invoking `on_step` after each
/// accepted step. Returns the final state.
pub fn dopri5<const D: usize, F, S>(
    f: F,
    x0: f64,
    y0: [f64; D],
    x1: f64,
    tol: Tolerance<D>,
    h_init: f64,
    mut on_step: S,
) -> Result<[f64; D]>
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
    S: FnMut(&DenseStep<D>),
{
    let dir = if x1 >= x0 { 1.0 } else { -1.0 };
    let span = (x1 - x0).abs();
    if span == 0.0 {
        return Ok(y0);
    }
    let mut x = x0;
    let mut y = y0;
    let mut h = h_init.abs().min(span).max(1e-12 * span) * dir;
    let mut k1 = f(x, &y);
    let mut rejected = false;
    loop {
        let remaining = x1 - x;
        if remaining * dir <= 0.0 {
            break;
        }
        if (h * dir) > remaining * dir {
            h = remaining;
        }
        let k2 = f(x + C2 * h, &axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(x + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(x + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(x + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(x + h, &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(x + h, &y_new);
        let mut err = 0.0;
        for i in 0..D {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sk = tol.atol[i] + tol.rtol * y[i].abs().max(y_new[i].abs());
            err += (e / sk) * (e / sk);
        }
        err = (err / D as f64).sqrt();
        if !err.is_finite() {
            err = 1e10;
        }
        if err <= 1.0 {
            let mut r = [[0.0; D]; 5];
            for i in 0..D {
                let ydiff = y_new[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                r[0][i] = y[i];
                r[1][i] = ydiff;
                r[2][i] = bspl;
                r[3][i] = ydiff - h * k7[i] - bspl;
                r[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            let x_new = if (x1 - (x + h)).abs() < 1e-14 * span { x1 } else { x + h };
            on_step(&DenseStep { x0: x, x1: x_new, r });
            x = x_new;
            y = y_new;
            k1 = k7;
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= if rejected { fac.min(1.0) } else { fac };
            rejected = false;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            rejected = true;
        }
        if h.abs() < 1e-13 * x.abs().max(1.0) {
            return Err(Error::StiffnessFailure { x });
        }
    }
    Ok(y)
}

/// Samples the dense output at sorted abscissae as steps are accepted.
pub struct Sampler<'a, const D: usize> {
    xs: &'a [f64],
    next: usize,
    pub out: Vec<[f64; D]>,
}

impl<'a, const D: usize> Sampler<'a, D> {
    pub fn new(xs: &'a [f64]) -> Self {
        Self { xs, next: 0, out: Vec::with_capacity(xs.len()) }
    }

    pub fn feed(&mut self, step: &DenseStep<D>) {
        while self.next < self.xs.len() && self.xs[self.next] <= step.x1 {
            self.out.push(step.eval(self.xs[self.next]));
            self.next += 1;
        }
    }

    pub fn done(&self) -> bool {
        self.next == self.xs.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_dense_output() {
        let k = 3.0;
        let xs: Vec<f64> = (1..=200).map(|i| i as f64 * 0.37).collect();
        let mut s = Sampler::new(&xs);
        let tol = Tolerance { rtol: 1e-11, atol: [1e-11; 2] };
        let end = dopri5(|_, y| [y[1], -k * k * y[0]], 0.0, [0.0, 1.0], 80.0, tol, 0.01, |st| s.feed(st)).unwrap();
        assert!(s.done());
        for (x, y) in xs.iter().zip(&s.out) {
            assert!((y[0] - (k * x).sin() / k).abs() < 1e-8, "x={x}");
            assert!((y[1] - (k * x).cos()).abs() < 1e-8);
        }
        assert!((end[0] - (k * 80.0).sin() / k).abs() < 1e-8);
    }

    #[test]
    fn exponential_growth() {
        let tol = Tolerance { rtol: 1e-12, atol: [1e-14] };
        let y = dopri5(|_, y| [y[0]], 0.0, [1.0], 2.0, tol, 0.1, |_| {}).unwrap();
        assert!((y[0] - 2f64.exp()).abs() < 1e-10);
    }
}
