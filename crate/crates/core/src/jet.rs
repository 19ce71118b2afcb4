//! Truncated multivariate Taylor jets in the three chart coordinates.
//!
//! A [`Jet`] of order `N` stores the Taylor coefficients of a smooth function
//! at a base point, for every multi-index of total degree `<= N`. Arithmetic
//! is exact truncated Taylor algebra: the degree-k coefficients of a product
//! depend only on coefficients of degrees `<= k` of the factors, so a jet of
//! order `N` carries the exact partial derivatives of the represented function
//! up to total order `N`.
//!
//! Coefficients are stored as Taylor coefficients (`∂^α f / α!`), not raw
//! derivatives; [`Jet::partial`] applies the factorial when a derivative value
//! is wanted.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use thiserror::Error;

/// Number of chart coordinates. The whole engine works on 3-dimensional charts.
pub const NVARS: usize = 3;

/// Errors from jet arithmetic.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    /// A derivative was requested from an order-0 jet.
    #[error("insufficient jet order: derivative of an order-0 jet")]
    InsufficientOrder,
    /// Division (or reciprocal) of a jet whose value part is zero.
    #[error("division by a jet with zero value part")]
    DivisionByZero,
    /// A univariate function was applied outside its domain.
    #[error("domain violation: {func}({value}) is undefined")]
    Domain { func: &'static str, value: f64 },
}

/// Number of multi-indices with total degree `< d` (block offset in storage).
#[inline]
fn block_offset(d: usize) -> usize {
    d * (d + 1) * (d + 2) / 6
}

/// Storage length of an order-`n` jet: C(n+3, 3).
#[inline]
pub fn jet_len(order: usize) -> usize {
    block_offset(order + 1)
}

/// Flat index of the multi-index `(i, j, k)` in graded layout.
#[inline]
pub fn index_of(i: usize, j: usize, k: usize) -> usize {
    let d = i + j + k;
    block_offset(d) + (d - i) * (d - i + 1) / 2 + k
}

#[inline]
fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |a, m| a * m as f64)
}

/// Real truncated Taylor jet in three variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    order: usize,
    coeffs: Vec<f64>,
}

impl Jet {
    /// Jet with all coefficients zero.
    pub fn zero(order: usize) -> Self {
        Jet {
            order,
            coeffs: vec![0.0; jet_len(order)],
        }
    }

    /// Jet of a constant function.
    pub fn constant(value: f64, order: usize) -> Self {
        let mut j = Jet::zero(order);
        j.coeffs[0] = value;
        j
    }

    /// Jet of the coordinate function `var` (value plus unit first-order term).
    pub fn variable(value: f64, var: usize, order: usize) -> Self {
        assert!(var < NVARS);
        let mut j = Jet::constant(value, order);
        if order >= 1 {
            let e = [usize::from(var == 0), usize::from(var == 1), usize::from(var == 2)];
            j.coeffs[index_of(e[0], e[1], e[2])] = 1.0;
        }
        j
    }

    /// Build from raw Taylor coefficients (graded layout).
    pub fn from_coeffs(order: usize, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), jet_len(order));
        Jet { order, coeffs }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Constant (value) part.
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// Taylor coefficient of the multi-index.
    pub fn coeff(&self, i: usize, j: usize, k: usize) -> f64 {
        if i + j + k > self.order {
            0.0
        } else {
            self.coeffs[index_of(i, j, k)]
        }
    }

    /// Partial derivative `∂_x^i ∂_y^j ∂_t^k f` (Taylor coefficient times `α!`).
    pub fn partial(&self, i: usize, j: usize, k: usize) -> f64 {
        self.coeff(i, j, k) * factorial(i) * factorial(j) * factorial(k)
    }

    /// Truncate to a lower order (no-op if already lower).
    pub fn truncated(&self, order: usize) -> Jet {
        if order >= self.order {
            return self.clone();
        }
        Jet {
            order,
            coeffs: self.coeffs[..jet_len(order)].to_vec(),
        }
    }

    /// Visit every stored multi-index of total degree `<= max_deg`.
    fn for_each_index(max_deg: usize, mut f: impl FnMut(usize, usize, usize, usize)) {
        let mut idx = 0;
        for d in 0..=max_deg {
            for i in (0..=d).rev() {
                for j in (0..=(d - i)).rev() {
                    f(i, j, d - i - j, idx);
                    idx += 1;
                }
            }
        }
    }

    /// Jet of the partial derivative along `var`; drops one order.
    pub fn derivative(&self, var: usize) -> Result<Jet, JetError> {
        if self.order == 0 {
            return Err(JetError::InsufficientOrder);
        }
        let n = self.order - 1;
        let mut out = Jet::zero(n);
        Jet::for_each_index(n, |i, j, k, idx| {
            let (si, sj, sk) = match var {
                0 => (i + 1, j, k),
                1 => (i, j + 1, k),
                _ => (i, j, k + 1),
            };
            let m = match var {
                0 => si,
                1 => sj,
                _ => sk,
            };
            out.coeffs[idx] = self.coeffs[index_of(si, sj, sk)] * m as f64;
        });
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add_scalar(&self, s: f64) -> Jet {
        let mut j = self.clone();
        j.coeffs[0] += s;
        j
    }

    fn binop(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        let n = self.order.min(other.order);
        let len = jet_len(n);
        let mut coeffs = Vec::with_capacity(len);
        for idx in 0..len {
            coeffs.push(f(self.coeffs[idx], other.coeffs[idx]));
        }
        Jet { order: n, coeffs }
    }

    /// Truncated Cauchy product.
    pub fn mul_jet(&self, other: &Jet) -> Jet {
        let n = self.order.min(other.order);
        let mut out = Jet::zero(n);
        Jet::for_each_index(n, |i, j, k, ia| {
            let va = self.coeffs[ia];
            if va == 0.0 {
                return;
            }
            let da = i + j + k;
            Jet::for_each_index(n - da, |bi, bj, bk, ib| {
                let vb = other.coeffs[ib];
                if vb != 0.0 {
                    out.coeffs[index_of(i + bi, j + bj, k + bk)] += va * vb;
                }
            });
        });
        out
    }

    /// Compose with a univariate Taylor series `sum_m a[m] u^m` where `u` is
    /// this jet with its value part removed. Horner evaluation in the jet ring.
    pub fn compose_univariate(&self, a: &[f64]) -> Jet {
        let n = self.order;
        debug_assert_eq!(a.len(), n + 1);
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let mut r = Jet::constant(a[n], n);
        for m in (0..n).rev() {
            r = r.mul_jet(&h).add_scalar(a[m]);
        }
        r
    }

    /// Reciprocal; requires a nonzero value part.
    pub fn recip(&self) -> Result<Jet, JetError> {
        let c = self.value();
        if c == 0.0 {
            return Err(JetError::DivisionByZero);
        }
        let mut a = Vec::with_capacity(self.order + 1);
        let mut p = 1.0 / c;
        for _ in 0..=self.order {
            a.push(p);
            p *= -1.0 / c;
        }
        Ok(self.compose_univariate(&a))
    }

    pub fn div_jet(&self, other: &Jet) -> Result<Jet, JetError> {
        Ok(self.mul_jet(&other.recip()?))
    }

    /// Integer power by repeated multiplication (negative exponents via recip).
    pub fn powi(&self, n: i64) -> Result<Jet, JetError> {
        if n < 0 {
            return self.recip()?.powi(-n);
        }
        let mut acc = Jet::constant(1.0, self.order);
        let mut base = self.clone();
        let mut m = n;
        while m > 0 {
            if m & 1 == 1 {
                acc = acc.mul_jet(&base);
            }
            m >>= 1;
            if m > 0 {
                base = base.mul_jet(&base);
            }
        }
        Ok(acc)
    }

    /// Real power via the binomial series; requires a positive value part.
    pub fn powf(&self, r: f64) -> Result<Jet, JetError> {
        let c = self.value();
        if c <= 0.0 {
            return Err(JetError::Domain { func: "pow", value: c });
        }
        // (c + u)^r = c^r * sum_m C(r, m) (u/c)^m
        let mut a = Vec::with_capacity(self.order + 1);
        let mut coef = c.powf(r);
        for m in 0..=self.order {
            a.push(coef);
            coef *= (r - m as f64) / ((m + 1) as f64 * c);
        }
        Ok(self.compose_univariate(&a))
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        let mut a = Vec::with_capacity(self.order + 1);
        let mut f = e;
        for m in 0..=self.order {
            a.push(f);
            f /= (m + 1) as f64;
        }
        self.compose_univariate(&a)
    }

    pub fn ln(&self) -> Result<Jet, JetError> {
        let c = self.value();
        if c <= 0.0 {
            return Err(JetError::Domain { func: "log", value: c });
        }
        let mut a = Vec::with_capacity(self.order + 1);
        a.push(c.ln());
        // log(c + u) = log c + sum_{m>=1} (-1)^{m-1} u^m / (m c^m)
        let mut p = 1.0;
        for m in 1..=self.order {
            p /= c;
            a.push(if m % 2 == 1 { p / m as f64 } else { -p / m as f64 });
        }
        Ok(self.compose_univariate(&a))
    }

    pub fn sqrt(&self) -> Result<Jet, JetError> {
        let c = self.value();
        if c < 0.0 {
            return Err(JetError::Domain { func: "sqrt", value: c });
        }
        if c == 0.0 {
            return Err(JetError::Domain { func: "sqrt", value: c });
        }
        self.powf(0.5)
    }

    fn sin_cos_coeffs(&self, phase: usize) -> Vec<f64> {
        // Derivatives of sin cycle through sin, cos, -sin, -cos; phase 1 starts at cos.
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let mut a = Vec::with_capacity(self.order + 1);
        for m in 0..=self.order {
            a.push(cycle[(m + phase) % 4] / factorial(m));
        }
        a
    }

    pub fn sin(&self) -> Jet {
        self.compose_univariate(&self.sin_cos_coeffs(0))
    }

    pub fn cos(&self) -> Jet {
        self.compose_univariate(&self.sin_cos_coeffs(1))
    }

    pub fn tan(&self) -> Result<Jet, JetError> {
        let c = self.value().cos();
        if c == 0.0 {
            return Err(JetError::Domain { func: "tan", value: self.value() });
        }
        self.sin().div_jet(&self.cos())
    }

    pub fn sinh(&self) -> Jet {
        let (sh, ch) = (self.value().sinh(), self.value().cosh());
        let mut a = Vec::with_capacity(self.order + 1);
        for m in 0..=self.order {
            a.push(if m % 2 == 0 { sh } else { ch } / factorial(m));
        }
        self.compose_univariate(&a)
    }

    pub fn cosh(&self) -> Jet {
        let (sh, ch) = (self.value().sinh(), self.value().cosh());
        let mut a = Vec::with_capacity(self.order + 1);
        for m in 0..=self.order {
            a.push(if m % 2 == 0 { ch } else { sh } / factorial(m));
        }
        self.compose_univariate(&a)
    }

    pub fn tanh(&self) -> Result<Jet, JetError> {
        self.sinh().div_jet(&self.cosh())
    }

    pub fn atan(&self) -> Jet {
        let c = self.value();
        let n = self.order;
        // atan'(c + u) = 1 / (1 + (c + u)^2); integrate its univariate series.
        let d = [1.0 + c * c, 2.0 * c, 1.0];
        let mut r = vec![0.0; n.max(1)];
        r[0] = 1.0 / d[0];
        for m in 1..r.len() {
            let mut s = 0.0;
            for j in 1..=m.min(2) {
                s += d[j] * r[m - j];
            }
            r[m] = -s / d[0];
        }
        let mut a = Vec::with_capacity(n + 1);
        a.push(c.atan());
        for m in 1..=n {
            a.push(r[m - 1] / m as f64);
        }
        self.compose_univariate(&a)
    }

    /// Max absolute coefficient, a cheap magnitude estimate.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |a, c| a.max(c.abs()))
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.binop(rhs, |a, b| a + b)
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.binop(rhs, |a, b| a - b)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.mul_jet(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

/// Complex jet: a pair of real jets for the real and imaginary parts.
///
/// Complex arithmetic is componentwise-consistent with conjugation:
/// `conj(a*b) = conj(a)*conj(b)` and `a*conj(a)` has zero imaginary part
/// up to rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct CJet {
    pub re: Jet,
    pub im: Jet,
}

impl CJet {
    pub fn new(re: Jet, im: Jet) -> Self {
        CJet { re, im }
    }

    pub fn from_re(re: Jet) -> Self {
        let im = Jet::zero(re.order());
        CJet { re, im }
    }

    pub fn zero(order: usize) -> Self {
        CJet::from_re(Jet::zero(order))
    }

    pub fn constant(v: Complex64, order: usize) -> Self {
        CJet {
            re: Jet::constant(v.re, order),
            im: Jet::constant(v.im, order),
        }
    }

    pub fn order(&self) -> usize {
        self.re.order().min(self.im.order())
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }

    pub fn conj(&self) -> CJet {
        CJet {
            re: self.re.clone(),
            im: -&self.im,
        }
    }

    /// Multiplication by the imaginary unit.
    pub fn mul_i(&self) -> CJet {
        CJet {
            re: -&self.im,
            im: self.re.clone(),
        }
    }

    pub fn scale(&self, s: f64) -> CJet {
        CJet {
            re: self.re.scale(s),
            im: self.im.scale(s),
        }
    }

    pub fn scale_c(&self, s: Complex64) -> CJet {
        CJet {
            re: &self.re.scale(s.re) - &self.im.scale(s.im),
            im: &self.re.scale(s.im) + &self.im.scale(s.re),
        }
    }

    pub fn derivative(&self, var: usize) -> Result<CJet, JetError> {
        Ok(CJet {
            re: self.re.derivative(var)?,
            im: self.im.derivative(var)?,
        })
    }

    pub fn norm_sq(&self) -> Jet {
        &(&self.re * &self.re) + &(&self.im * &self.im)
    }

    pub fn recip(&self) -> Result<CJet, JetError> {
        let inv = self.norm_sq().recip()?;
        Ok(CJet {
            re: &self.re * &inv,
            im: &self.im.scale(-1.0) * &inv,
        })
    }

    pub fn div(&self, other: &CJet) -> Result<CJet, JetError> {
        Ok(self * &other.recip()?)
    }

    /// `|value|` of the constant part (pivot magnitude for linear solves).
    pub fn mag(&self) -> f64 {
        self.value().norm()
    }
}

impl Add for &CJet {
    type Output = CJet;
    fn add(self, rhs: &CJet) -> CJet {
        CJet {
            re: &self.re + &rhs.re,
            im: &self.im + &rhs.im,
        }
    }
}

impl Sub for &CJet {
    type Output = CJet;
    fn sub(self, rhs: &CJet) -> CJet {
        CJet {
            re: &self.re - &rhs.re,
            im: &self.im - &rhs.im,
        }
    }
}

impl Mul for &CJet {
    type Output = CJet;
    fn mul(self, rhs: &CJet) -> CJet {
        CJet {
            re: &(&self.re * &rhs.re) - &(&self.im * &rhs.im),
            im: &(&self.re * &rhs.im) + &(&self.im * &rhs.re),
        }
    }
}

impl Neg for &CJet {
    type Output = CJet;
    fn neg(self) -> CJet {
        self.scale(-1.0)
    }
}
