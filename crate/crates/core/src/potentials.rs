//! Repulsive potentials, their classification and cumulative moments.
//!
//! A potential is declared by a [`PotentialKind`] together with its decay rate
//! β, growth exponent κ (singular kinds only) and class. [`classify`] checks
//! the declaration against samples. [`MomentCache`] tabulates
//! `Q_j(t) = ∫_{lower}^t q^j`, the quantities every phase formula consumes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_to_infinity};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PotentialClass {
    TypeI,
    TypeII,
    TypeIII,
}

/// Monotone cubic (Fritsch–Carlson) table with a power-law tail past the last node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub x: Vec<f64>,
    pub q: Vec<f64>,
    pub slope: Vec<f64>,
    pub tail_beta: f64,
}

impl Table {
    /// Builds the interpolant. `dq` are optional derivative samples; they are
    /// limited so the interpolant stays monotone.
    pub fn new(x: Vec<f64>, q: Vec<f64>, dq: Option<Vec<f64>>, tail_beta: f64) -> Result<Self> {
        let n = x.len();
        if n < 2 || q.len() != n || dq.as_ref().is_some_and(|d| d.len() != n) {
            return Err(Error::Invalid("table needs >= 2 matching samples".into()));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) || x[0] < 0.0 {
            return Err(Error::Invalid("table abscissae must be increasing and >= 0".into()));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (q[i + 1] - q[i]) / h[i]).collect();
        let mut m = match dq {
            Some(d) => d,
            None => {
                let mut m = vec![0.0; n];
                m[0] = delta[0];
                m[n - 1] = delta[n - 2];
                for i in 1..n - 1 {
                    if delta[i - 1] * delta[i] > 0.0 {
                        let w1 = 2.0 * h[i] + h[i - 1];
                        let w2 = h[i] + 2.0 * h[i - 1];
                        m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                    }
                }
                m
            }
        };
        for i in 0..n - 1 {
            if delta[i] == 0.0 {
                m[i] = 0.0;
                m[i + 1] = 0.0;
                continue;
            }
            let a = m[i] / delta[i];
            let b = m[i + 1] / delta[i];
            if a < 0.0 {
                m[i] = 0.0;
            }
            if b < 0.0 {
                m[i + 1] = 0.0;
            }
            let s = a * a + b * b;
            if s > 9.0 {
                let tau = 3.0 / s.sqrt();
                m[i] = tau * a * delta[i];
                m[i + 1] = tau * b * delta[i];
            }
        }
        Ok(Self { x, q, slope: m, tail_beta })
    }

    /// Reads a two-column `(x, q)` CSV file.
    pub fn from_csv(path: &Path, tail_beta: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)?;
        let (mut xs, mut qs) = (Vec::new(), Vec::new());
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| Error::Invalid(format!("bad table row {rec:?}")))
            };
            match parse(0) {
                Ok(x) => {
                    xs.push(x);
                    qs.push(parse(1)?);
                }
                Err(_) if xs.is_empty() => continue,
                Err(e) => return Err(e),
            }
        }
        Self::new(xs, qs, None, tail_beta)
    }

    fn eval(&self, x: f64) -> (f64, f64) {
        let n = self.x.len();
        if x >= self.x[n - 1] {
            let (xn, qn) = (self.x[n - 1], self.q[n - 1]);
            let v = qn * (x / xn).powf(-self.tail_beta);
            return (v, -self.tail_beta * v / x);
        }
        if x <= self.x[0] {
            return (self.q[0] + self.slope[0] * (x - self.x[0]), self.slope[0]);
        }
        let i = self.x.partition_point(|&xi| xi <= x) - 1;
        let h = self.x[i + 1] - self.x[i];
        let s = (x - self.x[i]) / h;
        let (q0, q1, m0, m1) = (self.q[i], self.q[i + 1], self.slope[i], self.slope[i + 1]);
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        let v = h00 * q0 + h10 * h * m0 + h01 * q1 + h11 * h * m1;
        let d00 = 6.0 * s * s - 6.0 * s;
        let d10 = 3.0 * s * s - 4.0 * s + 1.0;
        let d01 = -d00;
        let d11 = 3.0 * s * s - 2.0 * s;
        let dv = (d00 * q0 + d01 * q1) / h + d10 * m0 + d11 * m1;
        (v, dv)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PotentialKind {
    Zero,
    /// `x^{-β}`
    InversePower { beta: f64 },
    /// `(x₀ + x)^{-β}`
    ShiftedInversePower { beta: f64, shift: f64 },
    /// `(x² + δ²)^{-β/2}`, a smooth stand-in for `x^{-β}` near the origin.
    SmoothedInversePower { beta: f64, delta: f64 },
    /// `μ x^{-2} + q₀(x)`
    InverseSquarePlus { mu: f64, inner: Box<PotentialKind> },
    /// `q` for `x ≥ 1`, its tangent line at 1 on `[0, 1]`.
    TruncatedLinearization { base: Box<PotentialKind> },
    Tabulated(Table),
}

impl PotentialKind {
    fn eval(&self, x: f64) -> Result<(f64, f64)> {
        match self {
            PotentialKind::Zero => Ok((0.0, 0.0)),
            PotentialKind::InversePower { beta } => {
                if x <= 0.0 {
                    return Err(Error::DomainError(x));
                }
                let v = x.powf(-beta);
                Ok((v, -beta * v / x))
            }
            PotentialKind::ShiftedInversePower { beta, shift } => {
                if x < 0.0 {
                    return Err(Error::DomainError(x));
                }
                let v = (shift + x).powf(-beta);
                Ok((v, -beta * v / (shift + x)))
            }
            PotentialKind::SmoothedInversePower { beta, delta } => {
                if x < 0.0 {
                    return Err(Error::DomainError(x));
                }
                let r2 = x * x + delta * delta;
                let v = r2.powf(-0.5 * beta);
                Ok((v, -beta * x * v / r2))
            }
            PotentialKind::InverseSquarePlus { mu, inner } => {
                if x <= 0.0 {
                    return Err(Error::DomainError(x));
                }
                let (v, d) = inner.eval(x)?;
                Ok((v + mu / (x * x), d - 2.0 * mu / (x * x * x)))
            }
            PotentialKind::TruncatedLinearization { base } => {
                if x < 0.0 {
                    return Err(Error::DomainError(x));
                }
                if x >= 1.0 {
                    base.eval(x)
                } else {
                    let (v1, d1) = base.eval(1.0)?;
                    Ok((v1 + (x - 1.0) * d1, d1))
                }
            }
            PotentialKind::Tabulated(t) => {
                if x < 0.0 {
                    return Err(Error::DomainError(x));
                }
                Ok(t.eval(x))
            }
        }
    }

    fn singular_at_zero(&self) -> bool {
        match self {
            PotentialKind::InversePower { .. } | PotentialKind::InverseSquarePlus { .. } => true,
            PotentialKind::Tabulated(t) => t.x[0] > 0.0,
            _ => false,
        }
    }
}

/// A declared potential: kind plus decay rate, growth exponent and class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub beta: f64,
    pub kappa: Option<f64>,
    pub class: PotentialClass,
}

impl PotentialSpec {
    pub fn zero() -> Self {
        Self { kind: PotentialKind::Zero, beta: f64::INFINITY, kappa: None, class: PotentialClass::TypeI }
    }

    pub fn inverse_power(beta: f64) -> Self {
        Self {
            kind: PotentialKind::InversePower { beta },
            beta,
            kappa: Some(beta),
            class: PotentialClass::TypeII,
        }
    }

    pub fn shifted_inverse_power(beta: f64, shift: f64) -> Self {
        Self {
            kind: PotentialKind::ShiftedInversePower { beta, shift },
            beta,
            kappa: None,
            class: PotentialClass::TypeI,
        }
    }

    pub fn smoothed_inverse_power(beta: f64, delta: f64) -> Self {
        Self {
            kind: PotentialKind::SmoothedInversePower { beta, delta },
            beta,
            kappa: None,
            class: PotentialClass::TypeI,
        }
    }

    pub fn inverse_square_plus(mu: f64, inner: PotentialSpec) -> Self {
        Self {
            beta: inner.beta.min(2.0),
            kappa: Some(2.0),
            kind: PotentialKind::InverseSquarePlus { mu, inner: Box::new(inner.kind) },
            class: PotentialClass::TypeIII,
        }
    }

    /// Tabulated potential; singular (type II) when the first node is away from zero.
    pub fn tabulated(table: Table) -> Self {
        let beta = table.tail_beta;
        if table.x[0] > 0.0 {
            let kappa = (table.q[0] / table.q[1]).ln() / (table.x[1] / table.x[0]).ln();
            Self { kind: PotentialKind::Tabulated(table), beta, kappa: Some(kappa), class: PotentialClass::TypeII }
        } else {
            Self { kind: PotentialKind::Tabulated(table), beta, kappa: None, class: PotentialClass::TypeI }
        }
    }

    pub fn eval_q(&self, x: f64) -> Result<f64> {
        Ok(self.kind.eval(x)?.0)
    }

    pub fn eval_qprime(&self, x: f64) -> Result<f64> {
        Ok(self.kind.eval(x)?.1)
    }

    /// `(q, q')` together.
    pub fn eval_pair(&self, x: f64) -> Result<(f64, f64)> {
        self.kind.eval(x)
    }

    /// `q(x)`, NaN outside the domain; for use inside quadrature closures.
    pub fn q(&self, x: f64) -> f64 {
        self.kind.eval(x).map(|p| p.0).unwrap_or(f64::NAN)
    }

    /// `q(x)` in any scalar precision.
    pub fn q_at<T: Scalar>(&self, x: T) -> Result<T> {
        self.eval_q(x.as_f64()).map(T::lit)
    }

    /// Second derivative by central differences of `q'`.
    pub fn eval_qsecond(&self, x: f64) -> Result<f64> {
        let h = 1e-4 * x.max(1e-2);
        Ok((self.eval_qprime(x + h)? - self.eval_qprime(x - h)?) / (2.0 * h))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, PotentialKind::Zero)
    }

    /// Smallest x at which the potential may be sampled.
    pub fn domain_start(&self) -> f64 {
        if self.kind.singular_at_zero() {
            f64::MIN_POSITIVE
        } else {
            0.0
        }
    }

    /// Smallest `x ≥ x_from` with `q(x) ≤ level`, by bracketing and bisection.
    pub fn level_crossing(&self, level: f64, x_from: f64) -> f64 {
        if self.is_zero() || self.q(x_from) <= level {
            return x_from;
        }
        let mut lo = x_from;
        let mut hi = x_from.max(1.0) * 2.0;
        while self.q(hi) > level {
            lo = hi;
            hi *= 2.0;
            if hi > 1e15 {
                return hi;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.q(mid) > level {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-12 * hi {
                break;
            }
        }
        hi
    }
}

/// Outcome of [`classify`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: PotentialClass,
    pub beta: f64,
    pub kappa: Option<f64>,
}

fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect()
}

/// Log-log regression slope of `q` over `[10², 10⁴]`, negated.
pub fn fitted_decay_rate(spec: &PotentialSpec) -> Result<f64> {
    let xs = log_grid(1e2, 1e4, 41);
    let mut pts = Vec::with_capacity(xs.len());
    for &x in &xs {
        pts.push((x.ln(), spec.eval_q(x)?.ln()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(-sxy / sxx)
}

/// Checks the declared class against samples on a log-spaced grid.
pub fn classify(spec: &PotentialSpec) -> Result<Classification> {
    if spec.is_zero() {
        return Ok(Classification { class: PotentialClass::TypeI, beta: f64::INFINITY, kappa: None });
    }
    let mut xs = if spec.kind.singular_at_zero() { vec![] } else { vec![0.0] };
    xs.extend(log_grid(1e-3, 1e4, 160));
    let mut prev = f64::INFINITY;
    for &x in &xs {
        let (q, dq) = spec.eval_pair(x)?;
        if !(q > 0.0) || !(dq < 0.0 || (x == 0.0 && dq == 0.0)) || !(q < prev) {
            return Err(Error::NotRepulsive { x, q, dq });
        }
        prev = q;
    }
    let fitted = fitted_decay_rate(spec)?;
    if (fitted - spec.beta).abs() > 0.1 {
        return Err(Error::DecayMismatch { declared: spec.beta, fitted });
    }
    match spec.class {
        PotentialClass::TypeI => {
            if spec.kind.singular_at_zero() {
                return Err(Error::Unclassifiable("type I potential must be finite at 0".into()));
            }
            spec.eval_q(0.0)?;
        }
        PotentialClass::TypeII => {
            let kappa = spec.kappa.unwrap_or(0.0);
            if spec.kind.singular_at_zero() && !(kappa > 0.0 && kappa < 2.0) {
                return Err(Error::Unclassifiable(format!("growth exponent {kappa} outside (0, 2)")));
            }
            if spec.beta <= 1.0 / 3.0 {
                return Err(Error::Unclassifiable(format!("type II needs decay rate > 1/3, got {}", spec.beta)));
            }
        }
        PotentialClass::TypeIII => match &spec.kind {
            PotentialKind::InverseSquarePlus { mu, inner } => {
                if *mu < 0.75 {
                    return Err(Error::Unclassifiable(format!("type III needs mu >= 3/4, got {mu}")));
                }
                let inner_spec = PotentialSpec {
                    kind: (**inner).clone(),
                    beta: spec.beta,
                    kappa: None,
                    class: PotentialClass::TypeII,
                };
                if inner_spec.beta <= 1.0 / 3.0 {
                    return Err(Error::Unclassifiable("type III inner part needs decay rate > 1/3".into()));
                }
            }
            _ => return Err(Error::Unclassifiable("type III must be mu x^-2 + q0".into())),
        },
    }
    Ok(Classification { class: spec.class, beta: spec.beta, kappa: spec.kappa })
}

/// Type I surrogate `q*`: unchanged on `x ≥ 1`, tangent line on `[0, 1]`.
/// Type III inputs lose their `μ x^{-2}` part first.
pub fn truncate_to_type1(spec: &PotentialSpec) -> PotentialSpec {
    let base = match (&spec.class, &spec.kind) {
        (PotentialClass::TypeI, _) => return spec.clone(),
        (PotentialClass::TypeIII, PotentialKind::InverseSquarePlus { inner, .. }) => (**inner).clone(),
        (_, k) => k.clone(),
    };
    PotentialSpec {
        kind: PotentialKind::TruncatedLinearization { base: Box::new(base) },
        beta: spec.beta,
        kappa: None,
        class: PotentialClass::TypeI,
    }
}

/// Cumulative moments `Q_j(t) = ∫_{lower}^t q^j`, `j = 1..=jmax`.
#[derive(Clone, Debug)]
pub struct MomentCache {
    spec: PotentialSpec,
    lower: f64,
    jmax: usize,
    nodes: Vec<f64>,
    cumulative: Vec<Vec<f64>>,
}

const MOMENT_RTOL: f64 = 1e-12;
const TABLE_TOP: f64 = 1e5;

impl MomentCache {
    pub fn new(spec: &PotentialSpec, lower: f64, jmax: usize) -> Result<Self> {
        if lower < 0.0 || jmax == 0 {
            return Err(Error::Invalid("moment cache needs lower >= 0 and jmax >= 1".into()));
        }
        let mut nodes = vec![lower];
        let mut x = lower;
        while x < TABLE_TOP {
            x += (0.05 * x).max(0.05);
            nodes.push(x);
        }
        let mut cumulative = Vec::with_capacity(jmax);
        for j in 1..=jmax {
            let mut acc = 0.0;
            let mut col = Vec::with_capacity(nodes.len());
            col.push(0.0);
            for w in nodes.windows(2) {
                acc += integrate(|s| spec.q(s).powi(j as i32), w[0], w[1], MOMENT_RTOL, 0.0);
                col.push(acc);
            }
            if !acc.is_finite() {
                return Err(Error::DivergentTail { j });
            }
            cumulative.push(col);
        }
        Ok(Self { spec: spec.clone(), lower, jmax, nodes, cumulative })
    }

    pub fn lower_limit(&self) -> f64 {
        self.lower
    }

    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    pub fn jmax(&self) -> usize {
        self.jmax
    }

    /// `Q_j(t)`.
    pub fn moment(&self, j: usize, t: f64) -> Result<f64> {
        if j == 0 || j > self.jmax {
            return Err(Error::Invalid(format!("moment order {j} outside 1..={}", self.jmax)));
        }
        if t < self.lower {
            return Err(Error::DomainError(t));
        }
        if self.spec.is_zero() {
            return Ok(0.0);
        }
        let i = self.nodes.partition_point(|&x| x <= t) - 1;
        let base = self.cumulative[j - 1][i];
        let rest = integrate(|s| self.spec.q(s).powi(j as i32), self.nodes[i], t, MOMENT_RTOL, 0.0);
        Ok(base + rest)
    }

    /// `∫_{lower}^∞ q^j`.
    pub fn moment_tail(&self, j: usize) -> Result<f64> {
        if self.spec.is_zero() {
            return Ok(0.0);
        }
        if j as f64 * self.spec.beta <= 1.0 {
            return Err(Error::DivergentTail { j });
        }
        let top = *self.nodes.last().expect("nodes");
        let head = if j <= self.jmax {
            self.cumulative[j - 1][self.nodes.len() - 1]
        } else {
            integrate(|s| self.spec.q(s).powi(j as i32), self.lower, top, MOMENT_RTOL, 0.0)
        };
        let tail = integrate_to_infinity(|s| self.spec.q(s).powi(j as i32), top, MOMENT_RTOL)
            .ok_or(Error::DivergentTail { j })?;
        Ok(head + tail)
    }

    /// `∫_{lower}^∞ q³`, the constant of the third-order phase term.
    pub fn moment_tail3(&self) -> Result<f64> {
        self.moment_tail(3)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pointwise_values() {
        let s = PotentialSpec::inverse_power(1.0);
        assert_eq!(s.eval_pair(2.0).unwrap(), (0.5, -0.25));
        assert_eq!(PotentialSpec::zero().eval_pair(3.0).unwrap(), (0.0, 0.0));
        assert!(matches!(s.eval_q(0.0), Err(Error::DomainError(_))));
    }

    #[test]
    fn truncated_linearization_value() {
        let base = PotentialSpec::shifted_inverse_power(1.0, 1.0);
        let t = PotentialSpec {
            kind: PotentialKind::TruncatedLinearization { base: Box::new(base.kind) },
            ..base
        };
        assert!((t.eval_q(0.5).unwrap() - 0.625).abs() < 1e-15);
    }

    #[test]
    fn truncation_of_inverse_sqrt() {
        let t = truncate_to_type1(&PotentialSpec::inverse_power(0.5));
        assert_eq!(t.class, PotentialClass::TypeI);
        assert!((t.eval_q(0.0).unwrap() - 1.5).abs() < 1e-15);
        assert_eq!(t.eval_q(1.0).unwrap(), 1.0);
        let a = PotentialSpec::shifted_inverse_power(0.6, 1.0);
        assert_eq!(truncate_to_type1(&a), a);
    }

    #[test]
    fn classification_examples() {
        let c = classify(&PotentialSpec::shifted_inverse_power(0.6, 1.0)).unwrap();
        assert_eq!(c.class, PotentialClass::TypeI);
        let c = classify(&PotentialSpec::inverse_power(0.5)).unwrap();
        assert_eq!((c.class, c.kappa), (PotentialClass::TypeII, Some(0.5)));
        let s = PotentialSpec::inverse_square_plus(0.75, PotentialSpec::shifted_inverse_power(0.6, 1.0));
        assert_eq!(classify(&s).unwrap().class, PotentialClass::TypeIII);
        let mut bad = PotentialSpec::shifted_inverse_power(0.6, 1.0);
        bad.beta = 0.9;
        assert!(matches!(classify(&bad), Err(Error::DecayMismatch { .. })));
        assert!(matches!(classify(&PotentialSpec::inverse_power(0.3)), Err(Error::Unclassifiable(_))));
    }

    #[test]
    fn table_is_monotone_and_matches_nodes() {
        let xs: Vec<f64> = (0..40).map(|i| i as f64 * 0.5).collect();
        let qs: Vec<f64> = xs.iter().map(|x| (1.0 + x).powf(-0.6)).collect();
        let t = Table::new(xs.clone(), qs.clone(), None, 0.6).unwrap();
        let s = PotentialSpec::tabulated(t);
        for (x, q) in xs.iter().zip(&qs) {
            assert!((s.eval_q(*x).unwrap() - q).abs() < 1e-14);
        }
        let mut prev = f64::INFINITY;
        for i in 0..4000 {
            let (v, d) = s.eval_pair(i as f64 * 0.01).unwrap();
            assert!(v < prev && d < 0.0);
            prev = v;
        }
        assert!((s.eval_q(7.25).unwrap() - 8.25f64.powf(-0.6)).abs() < 1e-4);
    }

    #[test]
    fn moments_of_inverse_sqrt() {
        let c = MomentCache::new(&PotentialSpec::inverse_power(0.5), 1.0, 2).unwrap();
        assert!((c.moment(1, 4.0).unwrap() - 2.0).abs() < 1e-12);
        assert!((c.moment(2, 4.0).unwrap() - 4f64.ln()).abs() < 1e-12);
        assert_eq!(c.moment(1, 1.0).unwrap(), 0.0);
        let c = MomentCache::new(&PotentialSpec::inverse_power(1.0), 1.0, 1).unwrap();
        assert!((c.moment(1, 1e6).unwrap() - 1e6f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn tail_integrals() {
        let c = MomentCache::new(&PotentialSpec::shifted_inverse_power(0.6, 1.0), 0.0, 3).unwrap();
        let exact = 1.0 / 0.8;
        assert!((c.moment_tail3().unwrap() - exact).abs() < 1e-8 * exact);
        assert!(matches!(c.moment_tail(1), Err(Error::DivergentTail { j: 1 })));
    }
}
