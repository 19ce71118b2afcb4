//! Covariant differentiation in the pseudohermitian index conventions,
//! sub-gradient/sub-Laplacian, Lie derivatives and the contact vector field.
//!
//! A tensor coefficient with multi-index `I` over `{1, 1̄, 0}` has weight
//! `k = #1 - #1̄`; its covariant comma-derivative along a frame direction `X`
//! is `C_{I,X} = X(C_I) - k·θ₁¹(X)·C_I`, and appending the index moves the
//! weight by ±1 (or 0 along the Reeb direction). Coefficients live here as
//! jets, i.e. as germs of the coefficient fields, so higher derivatives are
//! obtained by re-running the same rule on jet-valued inputs rather than by
//! hand-expanded formulas.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::curvature::{connection, tw_curvature, ConnectionData};
use crate::expr::Expr;
use crate::forms::{self, Form1, CV3};
use crate::jet::CJet;
use crate::sample::SampleSet;
use crate::structure::{GeomError, GeomPoint, PHStructure};

/// Frame directions for comma derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir {
    Z1,
    Z1Bar,
    T,
}

impl Dir {
    fn weight_shift(self) -> i32 {
        match self {
            Dir::Z1 => 1,
            Dir::Z1Bar => -1,
            Dir::T => 0,
        }
    }
}

/// A tensor coefficient as a jet together with its weight `k = #1 - #1̄`.
#[derive(Debug, Clone)]
pub struct Coeff {
    pub v: CJet,
    pub weight: i32,
}

impl Coeff {
    pub fn scalar(v: CJet) -> Coeff {
        Coeff { v, weight: 0 }
    }

    pub fn conj(&self) -> Coeff {
        Coeff { v: self.v.conj(), weight: -self.weight }
    }

    pub fn value(&self) -> Complex64 {
        self.v.value()
    }
}

/// Covariant-derivative context: the frame package at a point plus the
/// connection coefficient form.
pub struct CovCtx<'a> {
    pub gp: &'a GeomPoint,
    pub conn: &'a ConnectionData,
}

impl<'a> CovCtx<'a> {
    pub fn new(gp: &'a GeomPoint, conn: &'a ConnectionData) -> CovCtx<'a> {
        CovCtx { gp, conn }
    }

    pub fn direction(&self, d: Dir) -> &CV3 {
        match d {
            Dir::Z1 => &self.gp.z1,
            Dir::Z1Bar => &self.gp.z1b,
            Dir::T => &self.gp.reeb,
        }
    }

    /// `C_{I,X} = X(C_I) - k θ₁¹(X) C_I`, with the weight moved by the index.
    pub fn deriv(&self, c: &Coeff, d: Dir) -> Result<Coeff, GeomError> {
        let x = self.direction(d);
        let mut v = forms::dir_deriv(x, &c.v)?;
        if c.weight != 0 {
            let corr = &forms::pair(&self.conn.theta11, x) * &c.v;
            v = &v - &corr.scale(c.weight as f64);
        }
        Ok(Coeff { v, weight: c.weight + d.weight_shift() })
    }

    /// Iterated comma derivative along a list of directions.
    pub fn derivs(&self, c: &Coeff, dirs: &[Dir]) -> Result<Coeff, GeomError> {
        let mut acc = c.clone();
        for &d in dirs {
            acc = self.deriv(&acc, d)?;
        }
        Ok(acc)
    }

    /// Evaluate a scalar field expression as a weight-0 coefficient germ.
    pub fn scalar_field(&self, s: &PHStructure, e: &Expr) -> Result<Coeff, GeomError> {
        let j = e.eval_jet(self.gp.point, &s.params.values, self.gp.order)?;
        Ok(Coeff::scalar(CJet::from_re(j)))
    }

    /// Real connection form `σ₁² = -i θ₁¹` (real-valued; `σ₂¹ = -σ₁²`).
    pub fn sigma12(&self) -> Form1 {
        let t = &self.conn.theta11;
        [-&t[0].mul_i(), -&t[1].mul_i(), -&t[2].mul_i()]
    }

    fn frame_vec(&self, i: usize) -> &CV3 {
        if i == 0 {
            &self.gp.e1
        } else {
            &self.gp.e2
        }
    }

    /// First real-frame derivative `φ_{e_i}` of a scalar germ.
    pub fn d_real(&self, phi: &CJet, i: usize) -> Result<CJet, GeomError> {
        Ok(forms::dir_deriv(self.frame_vec(i), phi)?)
    }

    /// `φ₀ = Tφ`.
    pub fn d_reeb(&self, phi: &CJet) -> Result<CJet, GeomError> {
        Ok(forms::dir_deriv(&self.gp.reeb, phi)?)
    }

    /// `σ_i^k(V) φ_{e_k}` for a single lower frame index `i` (σ₁² = -σ₂¹).
    fn sigma_corr_1(&self, phi: &CJet, i: usize, v: &CV3) -> Result<CJet, GeomError> {
        let sv = forms::pair(&self.sigma12(), v);
        let other = self.d_real(phi, 1 - i)?;
        let corr = &sv * &other;
        Ok(if i == 0 { corr } else { -&corr })
    }

    /// Second real-frame covariant derivative
    /// `φ_{e_i e_j} = e_j(φ_{e_i}) - σ_i^k(e_j) φ_{e_k}`.
    pub fn d2_real(&self, phi: &CJet, i: usize, j: usize) -> Result<CJet, GeomError> {
        let fi = self.d_real(phi, i)?;
        let ej = self.frame_vec(j).clone();
        let raw = forms::dir_deriv(&ej, &fi)?;
        Ok(&raw - &self.sigma_corr_1(phi, i, &ej)?)
    }

    /// `φ_{e_i 0} = T(φ_{e_i}) - σ_i^k(T) φ_{e_k}`.
    pub fn d2_real_reeb(&self, phi: &CJet, i: usize) -> Result<CJet, GeomError> {
        let fi = self.d_real(phi, i)?;
        let reeb = self.gp.reeb.clone();
        let raw = forms::dir_deriv(&reeb, &fi)?;
        Ok(&raw - &self.sigma_corr_1(phi, i, &reeb)?)
    }

    /// `φ_{0 e_i} = e_i(φ₀)`; the Reeb index carries no connection term.
    pub fn d2_reeb_real(&self, phi: &CJet, i: usize) -> Result<CJet, GeomError> {
        let f0 = self.d_reeb(phi)?;
        Ok(forms::dir_deriv(self.frame_vec(i), &f0)?)
    }

    /// Third real-frame covariant derivative
    /// `φ_{e_i e_j e_k} = e_k(φ_{e_i e_j}) - σ_i^m(e_k) φ_{e_m e_j} - σ_j^m(e_k) φ_{e_i e_m}`.
    pub fn d3_real(&self, phi: &CJet, i: usize, j: usize, k: usize) -> Result<CJet, GeomError> {
        let fij = self.d2_real(phi, i, j)?;
        let ek = self.frame_vec(k).clone();
        let raw = forms::dir_deriv(&ek, &fij)?;
        let s = forms::pair(&self.sigma12(), &ek);
        let ci = {
            let other = self.d2_real(phi, 1 - i, j)?;
            let c = &s * &other;
            if i == 0 {
                c
            } else {
                -&c
            }
        };
        let cj = {
            let other = self.d2_real(phi, i, 1 - j)?;
            let c = &s * &other;
            if j == 0 {
                c
            } else {
                -&c
            }
        };
        Ok(&(&raw - &ci) - &cj)
    }
}

/// `∇_b φ` in complex components: `(φ₁, φ₁̄)` with `φ₁̄ = conj(φ₁)` for real φ.
pub struct HorizontalGradient {
    pub phi1: Coeff,
    pub phi1b: Coeff,
}

pub fn horizontal_gradient(ctx: &CovCtx, phi: &Coeff) -> Result<HorizontalGradient, GeomError> {
    Ok(HorizontalGradient {
        phi1: ctx.deriv(phi, Dir::Z1)?,
        phi1b: ctx.deriv(phi, Dir::Z1Bar)?,
    })
}

/// `|∇_b φ|² = 2 φ₁ φ₁̄ = (φ_{e₁}² + φ_{e₂}²)/2`.
///
/// The factor fixes the unique normalization under which the conserved
/// quantity `W + |∇_bφ|²/2 - μφ` is constant on the flat-model soliton.
pub fn grad_norm_sq(g: &HorizontalGradient) -> CJet {
    (&g.phi1.v * &g.phi1b.v).scale(2.0)
}

/// Both routes to the sub-Laplacian and their defect.
#[derive(Debug, Clone)]
pub struct SubLaplacian {
    /// `φ₁₁̄ + φ₁̄₁`.
    pub complex_route: CJet,
    /// `(φ_{e₁e₁} + φ_{e₂e₂})/2`.
    pub real_route: CJet,
}

impl SubLaplacian {
    pub fn value(&self) -> f64 {
        self.complex_route.value().re
    }

    pub fn route_defect(&self) -> f64 {
        (self.complex_route.value() - self.real_route.value()).norm()
    }
}

pub fn sub_laplacian(ctx: &CovCtx, phi: &Coeff) -> Result<SubLaplacian, GeomError> {
    let c =
        &ctx.derivs(phi, &[Dir::Z1, Dir::Z1Bar])?.v + &ctx.derivs(phi, &[Dir::Z1Bar, Dir::Z1])?.v;
    let r = (&ctx.d2_real(&phi.v, 0, 0)? + &ctx.d2_real(&phi.v, 1, 1)?).scale(0.5);
    Ok(SubLaplacian { complex_route: c, real_route: r })
}

/// Max residuals of the commutation relations over a sample set, one entry
/// per identity. These hold for every smooth function, so nonzero residuals
/// measure the engine, not the input.
#[derive(Debug, Clone)]
pub struct CommutationResiduals {
    /// `φ_{e₁e₂} - φ_{e₂e₁} = 2φ₀`
    pub first_order: f64,
    /// `φ_{0e₁} - φ_{e₁0} = φ_{e₁}Re A₁₁ - φ_{e₂}Im A₁₁`
    pub reeb_e1: f64,
    /// `φ_{0e₂} - φ_{e₂0} = φ_{e₁}Im A₁₁ + φ_{e₂}Re A₁₁`
    pub reeb_e2: f64,
    /// `φ_{e₁e₁e₂} - φ_{e₁e₂e₁} = 2φ_{e₁0} - 2φ_{e₂}W`
    pub third_e1: f64,
    /// `φ_{e₂e₁e₂} - φ_{e₂e₂e₁} = 2φ_{e₂0} + 2φ_{e₁}W`
    pub third_e2: f64,
    /// `C_{I,11̄} - C_{I,1̄1} = iC_{I,0} + kWC_I` on `C = φ` (k = 0)
    pub complex_scalar: f64,
    /// same on `C = φ₁` (k = 1)
    pub complex_weighted: f64,
}

impl CommutationResiduals {
    pub fn max(&self) -> f64 {
        self.first_order
            .max(self.reeb_e1)
            .max(self.reeb_e2)
            .max(self.third_e1)
            .max(self.third_e2)
            .max(self.complex_scalar)
            .max(self.complex_weighted)
    }
}

/// Evaluate the commutation relations for a scalar field over samples.
pub fn commutation_residuals(
    s: &PHStructure,
    phi: &Expr,
    samples: &SampleSet,
    order: usize,
) -> Result<CommutationResiduals, GeomError> {
    let per: Vec<[f64; 7]> = samples
        .points
        .par_iter()
        .map(|&p| -> Result<[f64; 7], GeomError> {
            let gp = s.eval_point(p, order)?;
            let conn = connection(&gp)?;
            let curv = tw_curvature(&gp, &conn)?;
            let ctx = CovCtx::new(&gp, &conn);
            let f = ctx.scalar_field(s, phi)?;
            let a11 = conn.a11.value();
            let w = curv.w_value;

            let fe = [ctx.d_real(&f.v, 0)?.value(), ctx.d_real(&f.v, 1)?.value()];
            let f0 = ctx.d_reeb(&f.v)?.value();

            let r1 = (ctx.d2_real(&f.v, 0, 1)?.value() - ctx.d2_real(&f.v, 1, 0)?.value()
                - 2.0 * f0)
                .norm();
            let r2 = (ctx.d2_reeb_real(&f.v, 0)?.value() - ctx.d2_real_reeb(&f.v, 0)?.value()
                - (fe[0] * a11.re - fe[1] * a11.im))
                .norm();
            let r3 = (ctx.d2_reeb_real(&f.v, 1)?.value() - ctx.d2_real_reeb(&f.v, 1)?.value()
                - (fe[0] * a11.im + fe[1] * a11.re))
                .norm();
            let fi0 = [
                ctx.d2_real_reeb(&f.v, 0)?.value(),
                ctx.d2_real_reeb(&f.v, 1)?.value(),
            ];
            let r4 = (ctx.d3_real(&f.v, 0, 0, 1)?.value() - ctx.d3_real(&f.v, 0, 1, 0)?.value()
                - (2.0 * fi0[0] - 2.0 * fe[1] * w))
                .norm();
            let r5 = (ctx.d3_real(&f.v, 1, 0, 1)?.value() - ctx.d3_real(&f.v, 1, 1, 0)?.value()
                - (2.0 * fi0[1] + 2.0 * fe[0] * w))
                .norm();

            let cplx = |c: &Coeff| -> Result<f64, GeomError> {
                let lhs = ctx.derivs(c, &[Dir::Z1, Dir::Z1Bar])?.value()
                    - ctx.derivs(c, &[Dir::Z1Bar, Dir::Z1])?.value();
                let rhs = Complex64::i() * ctx.deriv(c, Dir::T)?.value()
                    + Complex64::from(c.weight as f64) * w * c.value();
                Ok((lhs - rhs).norm())
            };
            let r6 = cplx(&f)?;
            let r7 = cplx(&ctx.deriv(&f, Dir::Z1)?)?;
            Ok([r1, r2, r3, r4, r5, r6, r7])
        })
        .collect::<Result<_, _>>()?;

    let mut m = [0f64; 7];
    for row in &per {
        for (a, b) in m.iter_mut().zip(row) {
            *a = a.max(*b);
        }
    }
    Ok(CommutationResiduals {
        first_order: m[0],
        reeb_e1: m[1],
        reeb_e2: m[2],
        third_e1: m[3],
        third_e2: m[4],
        complex_scalar: m[5],
        complex_weighted: m[6],
    })
}

/// The contact vector field `X_f = i f₁ Z₁̄ - i f₁̄ Z₁ - f T` and the Lie
/// derivative diagnostics at one point.
#[derive(Debug, Clone)]
pub struct ContactFieldReport {
    /// X_f in coordinate components (value part).
    pub x_f: [Complex64; 3],
    /// max of `|(L_{X_f}θ)(e₁)|, |(L_{X_f}θ)(e₂)|` — zero for every smooth f.
    pub horizontal_residual: f64,
    /// `(L_{X_f}θ)(T)`; equals `-f₀` for every smooth f.
    pub factor: Complex64,
    /// `|(L_{X_f}θ)(T) + f₀|`.
    pub factor_residual: f64,
    /// `2(f₁₁ + i A₁₁ f)`, the θ¹⊗Z₁̄ component of `L_{X_f}J`.
    pub lie_j: Complex64,
    /// Defect between the covariant formula for `L_{X_f}J` and the direct
    /// bracket computation `(L_{X_f}J)(Z₁) = [X, JZ₁] - J[X, Z₁]` mod θ.
    pub lie_j_bracket_defect: f64,
}

/// Build `X_f` as a jet field at the context point.
pub fn contact_vector(ctx: &CovCtx, f: &Coeff) -> Result<CV3, GeomError> {
    let f1 = ctx.deriv(f, Dir::Z1)?.v;
    let f1b = ctx.deriv(f, Dir::Z1Bar)?.v;
    let mut x = forms::zero3(f.v.order());
    for i in 0..3 {
        let a = &f1.mul_i() * &ctx.gp.z1b[i];
        let b = &f1b.mul_i() * &ctx.gp.z1[i];
        let c = &f.v * &ctx.gp.reeb[i];
        x[i] = &(&a - &b) - &c;
    }
    Ok(x)
}

pub fn contact_field(
    s: &PHStructure,
    f_expr: &Expr,
    p: crate::expr::Point,
    order: usize,
) -> Result<ContactFieldReport, GeomError> {
    let gp = s.eval_point(p, order)?;
    let conn = connection(&gp)?;
    let ctx = CovCtx::new(&gp, &conn);
    let f = ctx.scalar_field(s, f_expr)?;
    let x = contact_vector(&ctx, &f)?;

    let lie = forms::lie_form(&x, &gp.theta)?;
    let l_e1 = forms::pair(&lie, &gp.e1).value();
    let l_e2 = forms::pair(&lie, &gp.e2).value();
    let l_t = forms::pair(&lie, &gp.reeb).value();
    let f0 = ctx.deriv(&f, Dir::T)?.value();

    // Covariant route for L_{X_f}J.
    let f11 = ctx.derivs(&f, &[Dir::Z1, Dir::Z1])?.value();
    let lie_j = 2.0 * (f11 + Complex64::i() * conn.a11.value() * f.value());

    // Bracket route: (L_X J)(Z₁) = 2iβ Z₁̄ mod θ with β = θ¹̄([X, Z₁]).
    let br = forms::bracket(&x, &gp.z1)?;
    let beta = forms::pair(&gp.theta1b, &br).value();
    let lie_j_bracket = 2.0 * Complex64::i() * beta;

    Ok(ContactFieldReport {
        x_f: [x[0].value(), x[1].value(), x[2].value()],
        horizontal_residual: l_e1.norm().max(l_e2.norm()),
        factor: l_t,
        factor_residual: (l_t + f0).norm(),
        lie_j,
        lie_j_bracket_defect: (lie_j - lie_j_bracket).norm(),
    })
}
