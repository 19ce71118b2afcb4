//! Pointwise exterior algebra over complex jets.
//!
//! Vectors and one-forms are component triples against the coordinate frame
//! `{∂x, ∂y, ∂t}` resp. `{dx, dy, dt}`; two-forms store the components
//! `[xy, xt, yt]`. All entries are jets, so exterior derivatives are exact
//! truncated-Taylor operations (and `d∘d = 0` holds identically).

use num_complex::Complex64;

use crate::jet::{CJet, Jet, JetError};

pub type CV3 = [CJet; 3];
/// One-form components against `{dx, dy, dt}`.
pub type Form1 = [CJet; 3];
/// Two-form components `[c_xy, c_xt, c_yt]`.
pub type Form2 = [CJet; 3];

pub fn zero3(order: usize) -> CV3 {
    [CJet::zero(order), CJet::zero(order), CJet::zero(order)]
}

pub fn from_re3(v: [Jet; 3]) -> CV3 {
    let [a, b, c] = v;
    [CJet::from_re(a), CJet::from_re(b), CJet::from_re(c)]
}

pub fn conj3(v: &CV3) -> CV3 {
    [v[0].conj(), v[1].conj(), v[2].conj()]
}

pub fn add3(a: &CV3, b: &CV3) -> CV3 {
    [&a[0] + &b[0], &a[1] + &b[1], &a[2] + &b[2]]
}

pub fn sub3(a: &CV3, b: &CV3) -> CV3 {
    [&a[0] - &b[0], &a[1] - &b[1], &a[2] - &b[2]]
}

pub fn scale3(a: &CV3, s: &CJet) -> CV3 {
    [&a[0] * s, &a[1] * s, &a[2] * s]
}

pub fn scale3_c(a: &CV3, s: Complex64) -> CV3 {
    [a[0].scale_c(s), a[1].scale_c(s), a[2].scale_c(s)]
}

/// Pairing of a one-form with a vector: `α(V) = Σ α_i V_i`.
pub fn pair(alpha: &Form1, v: &CV3) -> CJet {
    &(&(&alpha[0] * &v[0]) + &(&alpha[1] * &v[1])) + &(&alpha[2] * &v[2])
}

/// Directional derivative of a scalar jet along a vector field: `V(u) = Σ V_i ∂_i u`.
pub fn dir_deriv(v: &CV3, u: &CJet) -> Result<CJet, JetError> {
    let mut acc = CJet::zero(u.order().saturating_sub(1).min(v[0].order()));
    for i in 0..3 {
        acc = &acc + &(&v[i] * &u.derivative(i)?);
    }
    Ok(acc)
}

/// Gradient one-form of a scalar jet: `du = (∂x u, ∂y u, ∂t u)`.
pub fn d_scalar(u: &CJet) -> Result<Form1, JetError> {
    Ok([u.derivative(0)?, u.derivative(1)?, u.derivative(2)?])
}

/// Exterior derivative of a one-form.
pub fn d1(alpha: &Form1) -> Result<Form2, JetError> {
    let dxy = &alpha[1].derivative(0)? - &alpha[0].derivative(1)?;
    let dxt = &alpha[2].derivative(0)? - &alpha[0].derivative(2)?;
    let dyt = &alpha[2].derivative(1)? - &alpha[1].derivative(2)?;
    Ok([dxy, dxt, dyt])
}

/// Exterior derivative of a two-form; the single `dx∧dy∧dt` coefficient.
pub fn d2(beta: &Form2) -> Result<CJet, JetError> {
    // d(c_xy dx∧dy + c_xt dx∧dt + c_yt dy∧dt)
    //   = (∂t c_xy - ∂y c_xt + ∂x c_yt) dx∧dy∧dt
    Ok(&(&beta[0].derivative(2)? - &beta[1].derivative(1)?) + &beta[2].derivative(0)?)
}

/// Evaluate a two-form on a pair of vectors.
pub fn eval2(beta: &Form2, u: &CV3, v: &CV3) -> CJet {
    let m = |a: &CJet, b: &CJet, c: &CJet, d: &CJet| &(a * b) - &(c * d);
    let xy = m(&u[0], &v[1], &u[1], &v[0]);
    let xt = m(&u[0], &v[2], &u[2], &v[0]);
    let yt = m(&u[1], &v[2], &u[2], &v[1]);
    &(&(&beta[0] * &xy) + &(&beta[1] * &xt)) + &(&beta[2] * &yt)
}

/// Wedge of two one-forms.
pub fn wedge11(a: &Form1, b: &Form1) -> Form2 {
    let m = |i: usize, j: usize| &(&a[i] * &b[j]) - &(&a[j] * &b[i]);
    [m(0, 1), m(0, 2), m(1, 2)]
}

/// Interior product `V ⌋ β` of a vector with a two-form.
pub fn interior(v: &CV3, beta: &Form2) -> Form1 {
    let neg = |c: &CJet| -c;
    [
        &neg(&(&beta[0] * &v[1])) - &(&beta[1] * &v[2]),
        &(&beta[0] * &v[0]) - &(&beta[2] * &v[2]),
        &(&beta[1] * &v[0]) + &(&beta[2] * &v[1]),
    ]
}

/// Evaluate `α ∧ β` (a 3-form, for one-form α, two-form β) on a vector triple.
pub fn eval3(alpha: &Form1, beta: &Form2, u: &CV3, v: &CV3, w: &CV3) -> CJet {
    let t1 = &pair(alpha, u) * &eval2(beta, v, w);
    let t2 = &pair(alpha, v) * &eval2(beta, u, w);
    let t3 = &pair(alpha, w) * &eval2(beta, u, v);
    &(&t1 - &t2) + &t3
}

/// Lie bracket of two vector fields given as jet components.
pub fn bracket(u: &CV3, v: &CV3) -> Result<CV3, JetError> {
    let mut out = zero3(0);
    for i in 0..3 {
        out[i] = &dir_deriv(u, &v[i])? - &dir_deriv(v, &u[i])?;
    }
    Ok(out)
}

/// Lie derivative of a one-form along a vector field, by the Cartan formula
/// `L_X α = X ⌋ dα + d(X ⌋ α)`.
pub fn lie_form(x: &CV3, alpha: &Form1) -> Result<Form1, JetError> {
    let da = d1(alpha)?;
    let a = interior(x, &da);
    let b = d_scalar(&pair(alpha, x))?;
    Ok([&a[0] + &b[0], &a[1] + &b[1], &a[2] + &b[2]])
}

/// Solve the 3x3 jet-valued linear system `M w = rhs` by Gaussian elimination
/// with partial pivoting on value magnitude. `M[i]` is the i-th equation row.
pub fn solve3(m: &[CV3; 3], rhs: &CV3) -> Result<CV3, JetError> {
    let mut a: Vec<CV3> = m.to_vec();
    let mut b: Vec<CJet> = rhs.to_vec();
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&i, &j| a[i][col].mag().total_cmp(&a[j][col].mag()))
            .unwrap();
        if a[piv][col].mag() < 1e-13 {
            return Err(JetError::DivisionByZero);
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let inv = a[col][col].recip()?;
        for j in 0..3 {
            a[col][j] = &a[col][j] * &inv;
        }
        b[col] = &b[col] * &inv;
        for row in 0..3 {
            if row == col {
                continue;
            }
            let f = a[row][col].clone();
            if f.mag() == 0.0 && f.re.max_abs_coeff() == 0.0 && f.im.max_abs_coeff() == 0.0 {
                continue;
            }
            for j in 0..3 {
                a[row][j] = &a[row][j] - &(&f * &a[col][j]);
            }
            b[row] = &b[row] - &(&f * &b[col]);
        }
    }
    Ok([b[0].clone(), b[1].clone(), b[2].clone()])
}
