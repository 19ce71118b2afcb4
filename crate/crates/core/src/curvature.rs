//! The structure-equation solver: connection form, torsion, Tanaka-Webster
//! curvature, Cartan tensor, CR Paneitz operator, Q-curvature, and conformal
//! rescaling.
//!
//! The connection is read off `dθ¹ = p θ¹∧θ¹̄ + q θ∧θ¹ + r θ∧θ¹̄` as
//! `θ₁¹ = -p̄ θ¹ + p θ¹̄ - q θ` (the unique purely imaginary solution of the
//! first structure equation) with torsion `A¹_1̄ = r`, `A₁₁ = r̄`; the scalar
//! curvature is the `θ¹∧θ¹̄` coefficient of `dθ₁¹`, and the remaining
//! coefficients are kept as residuals against the torsion-derivative terms of
//! the curvature structure equation.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::calculus::{sub_laplacian, Coeff, CovCtx, Dir};
use crate::expr::{Expr, Func, Point};
use crate::forms::{self, Form1};
use crate::jet::CJet;
use crate::sample::SampleSet;
use crate::structure::{GeomError, GeomPoint, PHStructure};

/// Pointwise connection coefficient and pseudohermitian torsion.
#[derive(Debug, Clone)]
pub struct ConnectionData {
    /// Coordinate components of `θ₁¹` as jets (one jet order below the coframe).
    pub theta11: Form1,
    /// `A₁₁ = conj(A¹_1̄)`, a weight-2 coefficient germ.
    pub a11: CJet,
    /// Expansion coefficients of `dθ¹`: `p` along `θ¹∧θ¹̄`, `q` along `θ∧θ¹`,
    /// `r` along `θ∧θ¹̄`.
    pub p: CJet,
    pub q: CJet,
    pub r: CJet,
    /// `|Re γ|` for the θ-coefficient `γ = -q` of θ₁¹; encodes `dh₁₁̄ = 0`.
    pub residual_re_gamma: f64,
    /// Componentwise `|θ₁¹ + conj(θ₁¹)|` (purely imaginary defect).
    pub residual_imaginary: f64,
    /// Residual of the conjugate structure equation for `dθ¹̄`.
    pub residual_conjugate: f64,
}

impl ConnectionData {
    pub fn a11_coeff(&self) -> Coeff {
        Coeff { v: self.a11.clone(), weight: 2 }
    }
}

/// Solve the first structure equation `dθ¹ = θ¹∧θ₁¹ + θ∧τ¹` at a point.
pub fn connection(gp: &GeomPoint) -> Result<ConnectionData, GeomError> {
    let dtheta1 = forms::d1(&gp.theta1)?;
    let p = forms::eval2(&dtheta1, &gp.z1, &gp.z1b);
    let q = forms::eval2(&dtheta1, &gp.reeb, &gp.z1);
    let r = forms::eval2(&dtheta1, &gp.reeb, &gp.z1b);

    // θ₁¹ = -conj(p) θ¹ + p θ¹̄ - q θ, as a coordinate one-form.
    let mut theta11 = forms::zero3(gp.order.saturating_sub(1));
    let pc = p.conj();
    for i in 0..3 {
        let a = -&(&pc * &gp.theta1[i]);
        let b = &p * &gp.theta1b[i];
        let c = &q * &gp.theta[i];
        theta11[i] = &(&a + &b) - &c;
    }

    let residual_re_gamma = (-q.value()).re.abs();
    let mut residual_imaginary = 0f64;
    for i in 0..3 {
        residual_imaginary = residual_imaginary.max((&theta11[i] + &theta11[i].conj()).mag());
    }

    // Conjugate structure equation: the θ∧θ¹ coefficient of dθ¹̄ must be
    // conj(r) and its θ∧θ¹̄ coefficient conj(q).
    let dtheta1b = forms::d1(&gp.theta1b)?;
    let rb = forms::eval2(&dtheta1b, &gp.reeb, &gp.z1);
    let qb = forms::eval2(&dtheta1b, &gp.reeb, &gp.z1b);
    let residual_conjugate = (rb.value() - r.value().conj())
        .norm()
        .max((qb.value() - q.value().conj()).norm());

    Ok(ConnectionData {
        theta11,
        a11: r.conj(),
        p,
        q,
        r,
        residual_re_gamma,
        residual_imaginary,
        residual_conjugate,
    })
}

/// Tanaka-Webster scalar curvature and structure-equation residuals.
#[derive(Debug, Clone)]
pub struct CurvatureData {
    /// `W` as a weight-0 germ (real part of the θ¹∧θ¹̄ coefficient of dθ₁¹).
    pub w: CJet,
    pub w_value: f64,
    /// Imaginary defect of the extracted coefficient.
    pub residual_im_w: f64,
    /// Residuals of the θ∧θ¹ and θ∧θ¹̄ coefficients of `dθ₁¹` against the
    /// torsion derivative `A₁₁,₁̄` and its conjugate.
    pub residual_torsion_terms: f64,
}

/// Solve the curvature structure equation
/// `dθ₁¹ = W θ¹∧θ¹̄ + A¹̄_{1,1̄} θ¹∧θ - A¹_{1̄,1} θ¹̄∧θ`.
pub fn tw_curvature(gp: &GeomPoint, conn: &ConnectionData) -> Result<CurvatureData, GeomError> {
    let d11 = forms::d1(&conn.theta11)?;
    let w_raw = forms::eval2(&d11, &gp.z1, &gp.z1b);
    let s = forms::eval2(&d11, &gp.reeb, &gp.z1);
    let u = forms::eval2(&d11, &gp.reeb, &gp.z1b);

    let ctx = CovCtx::new(gp, conn);
    let a_1b = ctx.deriv(&conn.a11_coeff(), Dir::Z1Bar)?.value();
    // θ∧θ¹ coefficient is -A₁₁,₁̄; θ∧θ¹̄ coefficient is +conj(A₁₁,₁̄).
    let residual_torsion_terms =
        (s.value() + a_1b).norm().max((u.value() - a_1b.conj()).norm());

    Ok(CurvatureData {
        w: w_raw.clone(),
        w_value: w_raw.value().re,
        residual_im_w: w_raw.value().im.abs(),
        residual_torsion_terms,
    })
}

/// Cartan tensor `Q₁₁ = (1/6)W₁₁ + (i/2)W A₁₁ - A₁₁,₀ - (2i/3)A₁₁,₁̄₁`.
/// Its vanishing characterizes spherical structures.
pub fn cartan_tensor(ctx: &CovCtx, curv: &CurvatureData) -> Result<CJet, GeomError> {
    let w = Coeff::scalar(curv.w.clone());
    let w11 = ctx.derivs(&w, &[Dir::Z1, Dir::Z1])?.v;
    let a = ctx.conn.a11_coeff();
    let a0 = ctx.deriv(&a, Dir::T)?.v;
    let a_b1 = ctx.derivs(&a, &[Dir::Z1Bar, Dir::Z1])?.v;
    let wa = (&curv.w * &ctx.conn.a11).mul_i().scale(0.5);
    let q = &(&(&w11.scale(1.0 / 6.0) + &wa) - &a0) - &a_b1.mul_i().scale(2.0 / 3.0);
    Ok(q)
}

/// CR Paneitz data at a point.
#[derive(Debug, Clone)]
pub struct PaneitzData {
    /// `P₁φ = φ₁̄₁₁ + i A₁₁ φ₁̄` (weight-1 germ).
    pub p1: Coeff,
    /// `P₀φ = (P₁φ),₁̄ + conj`, the fourth-order Paneitz operator (real).
    pub p0: f64,
    /// Imaginary defect of `(P₁φ),₁̄ + conj((P₁φ),₁̄)` pairing.
    pub residual_im: f64,
}

pub fn paneitz(ctx: &CovCtx, phi: &Coeff) -> Result<PaneitzData, GeomError> {
    let f_b11 = ctx.derivs(phi, &[Dir::Z1Bar, Dir::Z1, Dir::Z1])?;
    let f_b = ctx.deriv(phi, Dir::Z1Bar)?;
    let p1v = &f_b11.v + &(&ctx.conn.a11 * &f_b.v).mul_i();
    let p1 = Coeff { v: p1v, weight: 1 };
    let div = ctx.deriv(&p1, Dir::Z1Bar)?.value();
    Ok(PaneitzData {
        p1,
        p0: 2.0 * div.re,
        residual_im: 0.0f64.max((div + div.conj()).im.abs()),
    })
}

/// Q-curvature data at a point, with the convention `c = 2`:
/// `Q = -2 Re R₁,₁̄ = -(Δ_bW + 2 Im A₁₁,₁̄₁̄)`. The raw pair `(R₁, R₁,₁̄)`
/// is returned so any other constant is recoverable.
#[derive(Debug, Clone)]
pub struct QCurvatureData {
    /// `R₁ = W₁ - i A₁₁,₁̄` (weight-1 germ).
    pub r1: Coeff,
    pub r1_value: Complex64,
    /// `R₁,₁̄`.
    pub r1_div: Complex64,
    /// `Q = -2 Re R₁,₁̄`.
    pub q: f64,
    /// `|Im R₁,₁̄|`; vanishes by the CR Bianchi identity, so this is an
    /// engine self-check.
    pub bianchi_defect: f64,
}

pub fn q_curvature(ctx: &CovCtx, curv: &CurvatureData) -> Result<QCurvatureData, GeomError> {
    let w = Coeff::scalar(curv.w.clone());
    let w1 = ctx.deriv(&w, Dir::Z1)?.v;
    let a_b = ctx.deriv(&ctx.conn.a11_coeff(), Dir::Z1Bar)?.v;
    let r1v = &w1 - &a_b.mul_i();
    let r1 = Coeff { v: r1v, weight: 1 };
    let r1_div = ctx.deriv(&r1, Dir::Z1Bar)?.value();
    Ok(QCurvatureData {
        r1_value: r1.value(),
        r1,
        r1_div,
        q: -2.0 * r1_div.re,
        bianchi_defect: r1_div.im.abs(),
    })
}

/// Everything the curvature layer computes at one point.
pub struct PointCurvature<'a> {
    pub gp: GeomPoint,
    pub conn: ConnectionData,
    pub curv: CurvatureData,
    pub structure: &'a PHStructure,
}

impl<'a> PointCurvature<'a> {
    pub fn at(s: &'a PHStructure, p: Point, order: usize) -> Result<PointCurvature<'a>, GeomError> {
        let gp = s.eval_point(p, order)?;
        let conn = connection(&gp)?;
        let curv = tw_curvature(&gp, &conn)?;
        Ok(PointCurvature { gp, conn, curv, structure: s })
    }

    pub fn ctx(&self) -> CovCtx<'_> {
        CovCtx::new(&self.gp, &self.conn)
    }
}

/// Build the conformally rescaled structure `θ̃ = e^{2g} θ`.
///
/// The admissible coframe is `θ̃¹ = e^g (θ¹ + 2i g₁̄ θ)` — the unique choice
/// (mod θ̃-multiples) with `dθ̃ = i θ̃¹ ∧ θ̃¹̄` — and its dual frame works out
/// to `Z̃₁ = e^{-g} Z₁`, so the rescaled real frame is `ẽᵢ = e^{-g} eᵢ`.
/// The new structure is therefore built by composing component expressions;
/// torsion and curvature of the result are computed, not asserted.
pub fn conformal_change(s: &PHStructure, g: &Expr) -> PHStructure {
    let e2g = Expr::func(Func::Exp, Expr::mul(Expr::num(2.0), g.clone()));
    let emg = Expr::func(Func::Exp, Expr::neg(g.clone()));
    let scale3 = |c: &[Expr; 3], f: &Expr| -> [Expr; 3] {
        [
            Expr::mul(f.clone(), c[0].clone()),
            Expr::mul(f.clone(), c[1].clone()),
            Expr::mul(f.clone(), c[2].clone()),
        ]
    };
    PHStructure {
        chart: s.chart.clone(),
        theta: scale3(&s.theta, &e2g),
        e1: scale3(&s.e1, &emg),
        e2: scale3(&s.e2, &emg),
        params: s.params.clone(),
    }
}

/// Residuals of the conformal transformation laws at one point.
#[derive(Debug, Clone)]
pub struct ConformalPointReport {
    /// `R̃₁` computed directly on the rescaled structure.
    pub r1_direct: Complex64,
    /// `R̃₁` from the law `e^{-3g}(R₁ - 6 P₁ g)`.
    pub r1_law: Complex64,
    pub r1_discrepancy: f64,
    /// Residual of `Δ_bW + 2 Im A₁₁,₁̄₁̄ = 12 Re C_θ g + 2 Re(e^{4g} R̃₁,₁̄)`
    /// with `C_θ g = (P₁ g),₁̄`; reduces to the vanishing-Q̃ identity
    /// `Δ_bW + 2 Im A₁₁,₁̄₁̄ = 12 C_θ g` when the rescaled Q-curvature is zero.
    pub divergence_identity: f64,
    /// `W̃` and `|Ã₁₁|` of the rescaled structure at the point.
    pub w_new: f64,
    pub torsion_new: f64,
}

/// Verify Lemma-type conformal laws for `θ̃ = e^{2g}θ` at one point.
pub fn conformal_point_report(
    s: &PHStructure,
    s_new: &PHStructure,
    g: &Expr,
    p: Point,
    order: usize,
) -> Result<ConformalPointReport, GeomError> {
    let base = PointCurvature::at(s, p, order)?;
    let new = PointCurvature::at(s_new, p, order)?;
    let bctx = base.ctx();
    let nctx = new.ctx();

    let g_coeff = bctx.scalar_field(s, g)?;
    let gv = g_coeff.value().re;

    let q_base = q_curvature(&bctx, &base.curv)?;
    let q_new = q_curvature(&nctx, &new.curv)?;
    let pg = crate::curvature::paneitz(&bctx, &g_coeff)?;

    let r1_direct = q_new.r1_value;
    let r1_law = (-3.0 * gv).exp() * (q_base.r1_value - 6.0 * pg.p1.value());

    // Divergence-level law: R₁,₁̄ - 6 C_θ g = e^{4g} R̃₁,₁̄, taken in real
    // parts through Δ_bW + 2 Im A₁₁,₁̄₁̄ = 2 Re R₁,₁̄.
    let w = Coeff::scalar(base.curv.w.clone());
    let dbw = sub_laplacian(&bctx, &w)?.value();
    let a_bb = bctx
        .derivs(&base.conn.a11_coeff(), &[Dir::Z1Bar, Dir::Z1Bar])?
        .value();
    let lhs = dbw + 2.0 * a_bb.im;
    let c_theta_g = bctx.deriv(&pg.p1, Dir::Z1Bar)?.value();
    let rhs = 12.0 * c_theta_g.re + 2.0 * ((4.0 * gv).exp() * q_new.r1_div).re;

    Ok(ConformalPointReport {
        r1_direct,
        r1_law,
        r1_discrepancy: (r1_direct - r1_law).norm(),
        divergence_identity: (lhs - rhs).abs(),
        w_new: new.curv.w_value,
        torsion_new: new.conn.a11.mag(),
    })
}

/// Max residuals of the conformal laws over a sample set.
#[derive(Debug, Clone)]
pub struct ConformalReport {
    pub r1_discrepancy: f64,
    pub divergence_identity: f64,
    pub w_new_min: f64,
    pub w_new_max: f64,
    pub torsion_new_max: f64,
}

pub fn conformal_report(
    s: &PHStructure,
    g: &Expr,
    samples: &SampleSet,
    order: usize,
) -> Result<ConformalReport, GeomError> {
    let s_new = conformal_change(s, g);
    let per: Vec<ConformalPointReport> = samples
        .points
        .par_iter()
        .map(|&p| conformal_point_report(s, &s_new, g, p, order))
        .collect::<Result<_, _>>()?;
    let mut rep = ConformalReport {
        r1_discrepancy: 0.0,
        divergence_identity: 0.0,
        w_new_min: f64::INFINITY,
        w_new_max: f64::NEG_INFINITY,
        torsion_new_max: 0.0,
    };
    for r in &per {
        rep.r1_discrepancy = rep.r1_discrepancy.max(r.r1_discrepancy);
        rep.divergence_identity = rep.divergence_identity.max(r.divergence_identity);
        rep.w_new_min = rep.w_new_min.min(r.w_new);
        rep.w_new_max = rep.w_new_max.max(r.w_new);
        rep.torsion_new_max = rep.torsion_new_max.max(r.torsion_new);
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    const PTS: [[f64; 3]; 3] = [[0.3, -0.4, 0.8], [1.2, 0.9, -1.5], [-0.7, 0.2, 0.1]];

    #[test]
    fn heisenberg_is_flat() {
        let s = models::builtin("heisenberg", &[]).unwrap().structure;
        for p in PTS {
            let pc = PointCurvature::at(&s, p, 6).unwrap();
            assert!(pc.conn.a11.mag() < 1e-12);
            for c in &pc.conn.theta11 {
                assert!(c.mag() < 1e-12);
            }
            assert!(pc.curv.w_value.abs() < 1e-12);
            let ctx = pc.ctx();
            let q11 = cartan_tensor(&ctx, &pc.curv).unwrap();
            assert!(q11.mag() < 1e-11);
            let qc = q_curvature(&ctx, &pc.curv).unwrap();
            assert!(qc.r1_value.norm() < 1e-11);
            assert!(qc.q.abs() < 1e-11);
        }
    }

    #[test]
    fn sphere_has_constant_w_two_and_no_torsion() {
        let s = models::builtin("cr_sphere", &[]).unwrap().structure;
        for p in PTS {
            let pc = PointCurvature::at(&s, p, 6).unwrap();
            assert!(pc.conn.a11.mag() < 1e-11, "torsion {} at {p:?}", pc.conn.a11.mag());
            assert!(
                (pc.curv.w_value - models::CR_SPHERE_W).abs() < 1e-10,
                "W = {} at {p:?}",
                pc.curv.w_value
            );
            assert!(pc.curv.residual_im_w < 1e-11);
            assert!(pc.curv.residual_torsion_terms < 1e-9);
            let ctx = pc.ctx();
            let q11 = cartan_tensor(&ctx, &pc.curv).unwrap();
            assert!(q11.mag() < 1e-8, "cartan {} at {p:?}", q11.mag());
            let qc = q_curvature(&ctx, &pc.curv).unwrap();
            assert!(qc.r1_value.norm() < 1e-9);
            assert!(qc.bianchi_defect < 1e-9);
        }
    }

    #[test]
    fn exterior_derivative_is_closed() {
        // d(dθ¹) = 0 identically in the jet ring.
        let s = models::builtin("cr_sphere", &[]).unwrap().structure;
        let gp = s.eval_point([0.4, 0.2, -0.9], 5).unwrap();
        let d1 = forms::d1(&gp.theta1).unwrap();
        let dd = forms::d2(&d1).unwrap();
        assert!(dd.mag() < 1e-10);
    }

    #[test]
    fn paneitz_kernel_contains_pluriharmonic_x() {
        let s = models::builtin("heisenberg", &[]).unwrap().structure;
        let coords = s.chart.coord_names();
        let x = crate::expr::parse_expr("x", &coords, &[]).unwrap();
        let pc = PointCurvature::at(&s, [0.3, 0.5, -0.2], 6).unwrap();
        let ctx = pc.ctx();
        let phi = ctx.scalar_field(&s, &x).unwrap();
        let pd = paneitz(&ctx, &phi).unwrap();
        assert!(pd.p1.value().norm() < 1e-13);
        assert!(pd.p0.abs() < 1e-13);
    }

    #[test]
    fn paneitz_cross_checked_against_hand_expansion() {
        // On the flat model with θ₁¹ = 0: P₁φ = Z₁Z₁Z₁̄φ. For φ = x³ this is
        // 3/4 everywhere; for φ = x²+y² it vanishes.
        let s = models::builtin("heisenberg", &[]).unwrap().structure;
        let coords = s.chart.coord_names();
        let pc = PointCurvature::at(&s, [0.7, -0.1, 0.4], 6).unwrap();
        let ctx = pc.ctx();

        let cubic = crate::expr::parse_expr("x^3", &coords, &[]).unwrap();
        let phi = ctx.scalar_field(&s, &cubic).unwrap();
        let pd = paneitz(&ctx, &phi).unwrap();
        assert!((pd.p1.value() - Complex64::new(0.75, 0.0)).norm() < 1e-12);

        let quad = crate::expr::parse_expr("x^2+y^2", &coords, &[]).unwrap();
        let phi = ctx.scalar_field(&s, &quad).unwrap();
        let pd = paneitz(&ctx, &phi).unwrap();
        // hand expansion: Z₁̄φ = z, Z₁z = 1, Z₁1 = 0
        assert!(pd.p1.value().norm() < 1e-12);
        assert!(pd.p0.abs() < 1e-12);
    }

    #[test]
    fn conformal_identity_for_zero_g() {
        let s = models::builtin("heisenberg", &[]).unwrap().structure;
        let coords = s.chart.coord_names();
        let zero = crate::expr::parse_expr("0", &coords, &[]).unwrap();
        let s_new = conformal_change(&s, &zero);
        for p in PTS {
            let a = PointCurvature::at(&s, p, 6).unwrap();
            let b = PointCurvature::at(&s_new, p, 6).unwrap();
            assert!((a.curv.w_value - b.curv.w_value).abs() < 1e-12);
            assert!((a.conn.a11.value() - b.conn.a11.value()).norm() < 1e-12);
        }
    }

    #[test]
    fn conformal_dual_path_on_small_g() {
        let s = models::builtin("heisenberg", &[]).unwrap().structure;
        let coords = s.chart.coord_names();
        let g = crate::expr::parse_expr("0.1*x", &coords, &[]).unwrap();
        let samples = SampleSet::halton(&s.chart, 7, 16);
        let rep = conformal_report(&s, &g, &samples, 6).unwrap();
        assert!(rep.r1_discrepancy < 1e-6, "dual path discrepancy {}", rep.r1_discrepancy);
        assert!(rep.divergence_identity < 1e-6, "divergence identity {}", rep.divergence_identity);
    }

    #[test]
    fn sphere_agrees_with_conformal_change_of_heisenberg() {
        // The built-in sphere is the frozen image of exactly this rescaling.
        let h = models::builtin("heisenberg", &[]).unwrap().structure;
        let coords = h.chart.coord_names();
        let g = crate::expr::parse_expr(
            "-0.5*log((1+(x^2+y^2)/4)^2+t^2/4)",
            &coords,
            &[],
        )
        .unwrap();
        let s_conf = conformal_change(&h, &g);
        let s_frozen = models::builtin("cr_sphere", &[]).unwrap().structure;
        for p in PTS {
            let a = PointCurvature::at(&s_conf, p, 6).unwrap();
            let b = PointCurvature::at(&s_frozen, p, 6).unwrap();
            assert!((a.curv.w_value - b.curv.w_value).abs() < 1e-9);
            assert!((a.conn.a11.value() - b.conn.a11.value()).norm() < 1e-9);
        }
    }

    #[test]
    fn gauge_covariance_under_frame_rotation() {
        // Rotating (e₁,e₂) by an angle field leaves the frame-independent
        // scalars W, |A₁₁|, |Q₁₁|, Q, |R₁| unchanged.
        let s = models::builtin("heisenberg_gaussian", &[]).unwrap().structure;
        let coords = s.chart.coord_names();
        let pe = |t: &str| crate::expr::parse_expr(t, &coords, &[]).unwrap();
        let rot = PHStructure {
            chart: s.chart.clone(),
            theta: s.theta.clone(),
            e1: [
                pe("cos(0.3*x)"),
                pe("sin(0.3*x)"),
                pe("y*cos(0.3*x) - x*sin(0.3*x)"),
            ],
            e2: [
                pe("-sin(0.3*x)"),
                pe("cos(0.3*x)"),
                pe("-y*sin(0.3*x) - x*cos(0.3*x)"),
            ],
            params: s.params.clone(),
        };
        for p in PTS {
            let a = PointCurvature::at(&s, p, 6).unwrap();
            let b = PointCurvature::at(&rot, p, 6).unwrap();
            assert!((a.curv.w_value - b.curv.w_value).abs() < 1e-10);
            assert!((a.conn.a11.mag() - b.conn.a11.mag()).abs() < 1e-10);
            assert!(b.conn.residual_imaginary < 1e-10);
            assert!(b.conn.residual_re_gamma < 1e-10);
            let (actx, bctx) = (a.ctx(), b.ctx());
            let qa = cartan_tensor(&actx, &a.curv).unwrap();
            let qb = cartan_tensor(&bctx, &b.curv).unwrap();
            assert!((qa.mag() - qb.mag()).abs() < 1e-9);
            let ra = q_curvature(&actx, &a.curv).unwrap();
            let rb = q_curvature(&bctx, &b.curv).unwrap();
            assert!((ra.q - rb.q).abs() < 1e-9);
            assert!((ra.r1_value.norm() - rb.r1_value.norm()).abs() < 1e-9);
        }
    }

    #[test]
    fn perturbed_model_is_not_spherical() {
        // θ + ε x² dy with the frame rescaled back into the kernel: the
        // Cartan tensor and R₁ pick up nonzero values (negative control).
        let s = models::builtin("heisenberg", &[]).unwrap().structure;
        let coords = s.chart.coord_names();
        let pe = |t: &str| crate::expr::parse_expr(t, &coords, &[]).unwrap();
        let sp = PHStructure {
            chart: s.chart.clone(),
            theta: [pe("-y"), pe("x + 0.2*x^2"), pe("1")],
            e1: [
                pe("(1+0.2*x)^-0.5"),
                pe("0"),
                pe("y*(1+0.2*x)^-0.5"),
            ],
            e2: [
                pe("0"),
                pe("(1+0.2*x)^-0.5"),
                pe("-(x+0.2*x^2)*(1+0.2*x)^-0.5"),
            ],
            params: s.params.clone(),
        };
        let samples = SampleSet::halton(&sp.chart, 7, 16);
        let report = crate::structure::validate(&sp, &samples).unwrap();
        assert!(report.pass(), "perturbed frame must still be admissible");
        let pc = PointCurvature::at(&sp, [0.5, 0.3, -0.2], 6).unwrap();
        let ctx = pc.ctx();
        let q11 = cartan_tensor(&ctx, &pc.curv).unwrap();
        let qc = q_curvature(&ctx, &pc.curv).unwrap();
        assert!(q11.mag() > 1e-4, "cartan tensor unexpectedly small: {}", q11.mag());
        assert!(qc.r1_value.norm() > 1e-4, "R1 unexpectedly small: {}", qc.r1_value.norm());
    }
}
