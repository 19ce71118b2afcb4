//! Pseudohermitian structures on a chart: contact form, adapted frame, Reeb
//! field and complex coframe.
//!
//! The normalization conventions are fixed once and validated pointwise:
//! the frame lies in the contact plane (`θ(e₁) = θ(e₂) = 0`), the real
//! structure equation `dθ = 2 e¹∧e²` holds, and for `Z₁ = (e₁ - i e₂)/2` the
//! Levi form is normalized to `h₁₁̄ = 1`, equivalently `dθ = i θ¹∧θ¹̄`.
//! The CR structure is encoded by the frame itself via `J e₁ = e₂`.

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::expr::{EvalError, Expr, Point};
use crate::forms::{self, Form1, Form2, CV3};
use crate::jet::{CJet, JetError};
use crate::sample::{Chart, SampleSet};

/// Residual tolerance for the structure normalization invariants.
pub const STRUCT_TOL: f64 = 1e-9;
/// Tolerance for the finite-difference cross-oracle on model expressions.
pub const FD_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("contact condition violated at ({0}, {1}, {2}): θ∧dθ vanishes", p[0], p[1], p[2])]
    ContactViolated { p: Point },
    #[error("frame degenerate at ({0}, {1}, {2}): e₁, e₂, T linearly dependent", p[0], p[1], p[2])]
    FrameDegenerate { p: Point },
    #[error("expression evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("jet arithmetic failed: {0}")]
    Jet(#[from] JetError),
    #[error("{0}")]
    Invalid(String),
}

/// Ordered parameter table (names fixed at model load, values bound per run).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamTable {
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl ParamTable {
    pub fn new(pairs: &[(&str, f64)]) -> ParamTable {
        ParamTable {
            names: pairs.iter().map(|(n, _)| n.to_string()).collect(),
            values: pairs.iter().map(|(_, v)| *v).collect(),
        }
    }

    pub fn set(&mut self, name: &str, value: f64) -> bool {
        if let Some(i) = self.names.iter().position(|n| n == name) {
            self.values[i] = value;
            true
        } else {
            false
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }
}

/// A pseudohermitian 3-manifold presented chart-wise: contact form `θ` and an
/// adapted real frame `(e₁, e₂)` spanning `ξ = ker θ`, with `J e₁ = e₂`.
///
/// The frame is user-supplied data rather than derived from `θ`, because `J`
/// is data; `validate` enforces compatibility. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PHStructure {
    pub chart: Chart,
    /// Components of θ against `(dx, dy, dt)` in coordinate order.
    pub theta: [Expr; 3],
    pub e1: [Expr; 3],
    pub e2: [Expr; 3],
    pub params: ParamTable,
}

/// Everything the engine knows about a structure at one point, as jets of one
/// working order: frame, Reeb field, contact form differentials and the dual
/// complex coframe. Downstream layers (connection, curvature, adapted metric)
/// consume this.
#[derive(Debug, Clone)]
pub struct GeomPoint {
    pub point: Point,
    pub order: usize,
    pub theta: Form1,
    pub dtheta: Form2,
    pub e1: CV3,
    pub e2: CV3,
    /// Reeb field `T`: `θ(T) = 1`, `dθ(T, ·) = 0`.
    pub reeb: CV3,
    /// `Z₁ = (e₁ - i e₂)/2`.
    pub z1: CV3,
    pub z1b: CV3,
    /// Complex coframe `θ¹` dual to `(Z₁, Z₁̄, T)`.
    pub theta1: Form1,
    pub theta1b: Form1,
}

impl PHStructure {
    fn eval_triple(&self, comp: &[Expr; 3], p: Point, order: usize) -> Result<CV3, GeomError> {
        let v = &self.params.values;
        Ok([
            CJet::from_re(comp[0].eval_jet(p, v, order)?),
            CJet::from_re(comp[1].eval_jet(p, v, order)?),
            CJet::from_re(comp[2].eval_jet(p, v, order)?),
        ])
    }

    /// Evaluate the full frame package at `p` as order-`order` jets.
    pub fn eval_point(&self, p: Point, order: usize) -> Result<GeomPoint, GeomError> {
        let theta = self.eval_triple(&self.theta, p, order)?;
        let e1 = self.eval_triple(&self.e1, p, order)?;
        let e2 = self.eval_triple(&self.e2, p, order)?;
        let dtheta = forms::d1(&theta)?;

        // Reeb field: the kernel of the antisymmetric 2-form dθ is spanned by
        // its Hodge-dual vector v = (dθ_yt, -dθ_xt, dθ_xy); normalizing by
        // θ(v) solves θ(T)=1, dθ(T,·)=0 in closed form. θ(v) = 0 is exactly
        // the failure of the contact condition θ∧dθ ≠ 0.
        let v: CV3 = [dtheta[2].clone(), -&dtheta[1], dtheta[0].clone()];
        let tv = forms::pair(&theta, &v);
        if tv.mag() < 1e-12 {
            return Err(GeomError::ContactViolated { p });
        }
        let inv = tv.recip()?;
        let reeb = forms::scale3(&v, &inv);

        let z1: CV3 = [
            (&e1[0] - &e2[0].mul_i()).scale(0.5),
            (&e1[1] - &e2[1].mul_i()).scale(0.5),
            (&e1[2] - &e2[2].mul_i()).scale(0.5),
        ];
        let z1b = forms::conj3(&z1);

        // θ¹ is the unique complex one-form with θ¹(Z₁)=1, θ¹(Z₁̄)=0, θ¹(T)=0.
        let one = CJet::constant(Complex64::new(1.0, 0.0), order);
        let zero = CJet::zero(order);
        let theta1 = forms::solve3(
            &[z1.clone(), z1b.clone(), reeb.clone()],
            &[one, zero.clone(), zero],
        )
        .map_err(|_| GeomError::FrameDegenerate { p })?;
        let theta1b = [theta1[0].conj(), theta1[1].conj(), theta1[2].conj()];

        Ok(GeomPoint {
            point: p,
            order,
            theta,
            dtheta,
            e1,
            e2,
            reeb,
            z1,
            z1b,
            theta1,
            theta1b,
        })
    }
}

impl GeomPoint {
    /// Levi coefficient `h₁₁̄ = dθ(Z₁, Z₁̄)/i`; the normalization fixes it to 1.
    pub fn levi(&self) -> CJet {
        -&forms::eval2(&self.dtheta, &self.z1, &self.z1b).mul_i()
    }

    /// Residuals of the coframe duality relations and of `dθ = i θ¹∧θ¹̄`,
    /// as max |value| over the individual identities.
    pub fn duality_residuals(&self) -> DualityResiduals {
        let p1 = forms::pair(&self.theta1, &self.z1);
        let p0 = forms::pair(&self.theta1, &self.z1b);
        let pt = forms::pair(&self.theta1, &self.reeb);
        let tt = forms::pair(&self.theta, &self.reeb);
        let w = forms::wedge11(&self.theta1, &self.theta1b);
        let mut eq = 0f64;
        for i in 0..3 {
            eq = eq.max((&self.dtheta[i] - &w[i].mul_i()).mag());
        }
        DualityResiduals {
            theta1_z1: (p1.value() - Complex64::new(1.0, 0.0)).norm(),
            theta1_z1b: p0.mag(),
            theta1_reeb: pt.mag(),
            theta_reeb: (tt.value() - Complex64::new(1.0, 0.0)).norm(),
            structure_eq: eq,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DualityResiduals {
    pub theta1_z1: f64,
    pub theta1_z1b: f64,
    pub theta1_reeb: f64,
    pub theta_reeb: f64,
    /// Componentwise residual of `dθ - i θ¹∧θ¹̄`.
    pub structure_eq: f64,
}

/// One named residual of a validation run.
#[derive(Debug, Clone)]
pub struct ValidationEntry {
    pub name: &'static str,
    pub anchor: &'static str,
    pub max_residual: f64,
    pub tolerance: f64,
}

impl ValidationEntry {
    pub fn pass(&self) -> bool {
        self.max_residual <= self.tolerance
    }
}

/// Report of [`validate`]: per-invariant max residuals over the sample set.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub entries: Vec<ValidationEntry>,
    /// Worst point for the worst entry.
    pub worst_point: Point,
    pub worst_residual: f64,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass())
    }
}

/// Validate the normalization invariants of a structure over a sample set:
/// `θ(e₁) = θ(e₂) = 0`, `dθ(e₁,e₂) = 2` (equivalently `h₁₁̄ = 1`), the
/// coframe duality relations, `θ∧dθ(e₁,e₂,T) = 2`, plus the
/// finite-difference cross-check of every component expression.
pub fn validate(s: &PHStructure, samples: &SampleSet) -> Result<ValidationReport, GeomError> {
    let order = 2;
    let per_point: Vec<([f64; 7], Point)> = samples
        .points
        .par_iter()
        .map(|&p| -> Result<([f64; 7], Point), GeomError> {
            let gp = s.eval_point(p, order)?;
            let te1 = forms::pair(&gp.theta, &gp.e1).mag();
            let te2 = forms::pair(&gp.theta, &gp.e2).mag();
            let norm =
                (forms::eval2(&gp.dtheta, &gp.e1, &gp.e2).value() - Complex64::new(2.0, 0.0))
                    .norm();
            let levi = (gp.levi().value() - Complex64::new(1.0, 0.0)).norm();
            let dual = gp.duality_residuals();
            let dualmax = dual
                .theta1_z1
                .max(dual.theta1_z1b)
                .max(dual.theta1_reeb)
                .max(dual.theta_reeb);
            let vol = (forms::eval3(&gp.theta, &gp.dtheta, &gp.e1, &gp.e2, &gp.reeb).value()
                - Complex64::new(2.0, 0.0))
            .norm();
            Ok(([te1, te2, norm, levi, dualmax, dual.structure_eq, vol], p))
        })
        .collect::<Result<_, _>>()?;

    let mut maxima = [0f64; 7];
    let mut worst_point = samples.points.first().copied().unwrap_or([0.0; 3]);
    let mut worst = 0f64;
    for (vals, p) in &per_point {
        for (m, v) in maxima.iter_mut().zip(vals) {
            *m = m.max(*v);
        }
        let local = vals.iter().fold(0f64, |a, v| a.max(*v));
        if local > worst {
            worst = local;
            worst_point = *p;
        }
    }

    // Independent finite-difference regime on the raw component expressions.
    let mut fd_worst = 0f64;
    let fd_points = &samples.points[..samples.points.len().min(64)];
    for comp in s.theta.iter().chain(s.e1.iter()).chain(s.e2.iter()) {
        for &p in fd_points {
            fd_worst = fd_worst.max(crate::expr::fd_check(comp, p, &s.params.values, 2)?);
        }
    }

    let entries = vec![
        ValidationEntry {
            name: "frame_in_contact_plane_e1",
            anchor: "theta(e1) = 0",
            max_residual: maxima[0],
            tolerance: STRUCT_TOL,
        },
        ValidationEntry {
            name: "frame_in_contact_plane_e2",
            anchor: "theta(e2) = 0",
            max_residual: maxima[1],
            tolerance: STRUCT_TOL,
        },
        ValidationEntry {
            name: "levi_normalization",
            anchor: "dtheta(e1,e2) = 2",
            max_residual: maxima[2],
            tolerance: STRUCT_TOL,
        },
        ValidationEntry {
            name: "levi_coefficient",
            anchor: "h_11bar = 1",
            max_residual: maxima[3],
            tolerance: STRUCT_TOL,
        },
        ValidationEntry {
            name: "coframe_duality",
            anchor: "theta1(Z1)=1, theta1(Z1bar)=0, theta1(T)=0, theta(T)=1",
            max_residual: maxima[4],
            tolerance: STRUCT_TOL,
        },
        ValidationEntry {
            name: "complex_structure_equation",
            anchor: "dtheta = i theta1 ^ theta1bar",
            max_residual: maxima[5],
            tolerance: STRUCT_TOL,
        },
        ValidationEntry {
            name: "volume_normalization",
            anchor: "theta ^ dtheta (e1,e2,T) = 2",
            max_residual: maxima[6],
            tolerance: STRUCT_TOL,
        },
        ValidationEntry {
            name: "fd_cross_check",
            anchor: "jet vs central differences on component expressions",
            max_residual: fd_worst,
            tolerance: FD_TOL,
        },
    ];

    Ok(ValidationReport {
        entries,
        worst_point,
        worst_residual: worst.max(fd_worst),
    })
}
