//! Acceptance suite: every criterion of the verification contract, one test
//! per criterion, each printing a single pass/fail line (run with
//! `cargo test --test acceptance -- --nocapture` to see them).
//!
//! All suites run on 256 Halton samples with seed 7 unless stated otherwise.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crgeo_core::calculus::commutation_residuals;
use crgeo_core::curvature::{
    cartan_tensor, conformal_report, q_curvature, PointCurvature,
};
use crgeo_core::models::{self, CR_SPHERE_W};
use crgeo_core::riemann::{self, ConcludedType, GridSpec, TopologyTag};
use crgeo_core::sample::SampleSet;
use crgeo_core::soliton::{
    check_cr_soliton, check_pseudo_gradient, conserved_quantities, harnack_residual,
    SolitonCandidate,
};
use crgeo_core::structure::validate;
use crgeo_core::{parse_expr, Expr, ModelDecl, PHStructure};

const SEED: u64 = 7;
const N: usize = 256;
const ORDER: usize = 6;

struct Criterion {
    name: &'static str,
    rows: Vec<(String, f64, f64)>,
}

impl Criterion {
    fn new(name: &'static str) -> Criterion {
        Criterion { name, rows: Vec::new() }
    }

    fn check(&mut self, label: impl Into<String>, value: f64, bound: f64) {
        self.rows.push((label.into(), value, bound));
    }

    fn finish(self) {
        let pass = self.rows.iter().all(|(_, v, b)| v.is_finite() && *v <= *b);
        println!("[{}] {}", if pass { "PASS" } else { "FAIL" }, self.name);
        for (l, v, b) in &self.rows {
            if !(v.is_finite() && v <= b) {
                println!("    exceeded: {l}: {v:.3e} > {b:.1e}");
            }
        }
        assert!(pass, "{} failed: {:?}", self.name, self.rows);
    }
}

fn decl(name: &str, mu: f64) -> ModelDecl {
    models::builtin(name, &[("mu", mu)])
        .or_else(|_| models::builtin(name, &[]))
        .unwrap()
}

fn candidate(name: &str, mu: f64) -> SolitonCandidate {
    let d = decl(name, mu);
    let p = d.potential.as_ref().unwrap();
    SolitonCandidate {
        structure: d.structure.clone(),
        potential: p.expr.clone(),
        kind: p.kind,
        mu,
    }
}

fn samples(s: &PHStructure, n: usize) -> SampleSet {
    SampleSet::halton(&s.chart, SEED, n)
}

fn random_poly(rng: &mut ChaCha8Rng, max_deg: u32, scale: f64) -> String {
    let monomials: &[(&str, u32)] = &[
        ("1", 0),
        ("x", 1),
        ("y", 1),
        ("t", 1),
        ("x*y", 2),
        ("x*t", 2),
        ("y^2", 2),
        ("x^2", 2),
        ("t^2", 2),
        ("x^2*y", 3),
        ("x*y*t", 3),
        ("t^3", 3),
        ("x^3", 3),
        ("y^3", 3),
        ("x^2*y^2", 4),
        ("x^3*y", 4),
        ("x*y*t^2", 4),
        ("y^4", 4),
        ("t^4", 4),
        ("x^2*t^2", 4),
    ];
    let mut terms = Vec::new();
    for (m, d) in monomials {
        if *d <= max_deg && rng.gen_bool(0.5) {
            let c: f64 = rng.gen_range(-scale..scale);
            terms.push(format!("({c:.6})*{m}"));
        }
    }
    if terms.is_empty() {
        terms.push(format!("({:.6})*x*y", rng.gen_range(-scale..scale)));
    }
    terms.join(" + ")
}

#[test]
fn ac01_structure_normalization() {
    let mut c = Criterion::new("AC-01 structure normalization on heisenberg and cr_sphere");
    for name in ["heisenberg", "cr_sphere"] {
        let s = decl(name, 1.0).structure;
        let rep = validate(&s, &samples(&s, N)).unwrap();
        for e in &rep.entries {
            let tol = if e.name == "fd_cross_check" { 1e-4 } else { 1e-9 };
            c.check(format!("{name}.{}", e.name), e.max_residual, tol);
        }
    }
    c.finish();
}

#[test]
fn ac02_commutation_relations() {
    let mut c = Criterion::new("AC-02 commutation relations, 20 random degree-4 fields x 2 models");
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for name in ["heisenberg", "cr_sphere"] {
        let s = decl(name, 1.0).structure;
        let coords = s.chart.coord_names();
        let pts = samples(&s, N);
        let mut worst = 0f64;
        for _ in 0..20 {
            let phi = parse_expr(&random_poly(&mut rng, 4, 1.0), &coords, &[]).unwrap();
            worst = worst.max(commutation_residuals(&s, &phi, &pts, ORDER).unwrap().max());
        }
        c.check(format!("{name}: max over identities"), worst, 1e-8);
    }
    c.finish();
}

#[test]
fn ac03_flat_model_exactness() {
    let mut c = Criterion::new("AC-03 flat model: W, A11, theta11, Q11, R1 vanish to 1e-10");
    let s = decl("heisenberg", 1.0).structure;
    let mut w = 0f64;
    let mut a = 0f64;
    let mut th = 0f64;
    let mut q11 = 0f64;
    let mut r1 = 0f64;
    for &p in &samples(&s, N).points {
        let pc = PointCurvature::at(&s, p, ORDER).unwrap();
        let ctx = pc.ctx();
        w = w.max(pc.curv.w_value.abs());
        a = a.max(pc.conn.a11.mag());
        for comp in &pc.conn.theta11 {
            th = th.max(comp.mag());
        }
        q11 = q11.max(cartan_tensor(&ctx, &pc.curv).unwrap().mag());
        r1 = r1.max(q_curvature(&ctx, &pc.curv).unwrap().r1_value.norm());
    }
    c.check("W", w, 1e-10);
    c.check("A11", a, 1e-10);
    c.check("theta11", th, 1e-10);
    c.check("Q11", q11, 1e-10);
    c.check("R1", r1, 1e-10);
    c.finish();
}

#[test]
fn ac04_sphere_model() {
    let mut c = Criterion::new("AC-04 sphere model: constant W, no torsion, spherical, scalar anchor");
    let s = decl("cr_sphere", 1.0).structure;
    let mut wmin = f64::INFINITY;
    let mut wmax = f64::NEG_INFINITY;
    let mut a = 0f64;
    let mut q11 = 0f64;
    for &p in &samples(&s, N).points {
        let pc = PointCurvature::at(&s, p, ORDER).unwrap();
        let ctx = pc.ctx();
        wmin = wmin.min(pc.curv.w_value);
        wmax = wmax.max(pc.curv.w_value);
        a = a.max(pc.conn.a11.mag());
        q11 = q11.max(cartan_tensor(&ctx, &pc.curv).unwrap().mag());
    }
    c.check("W spatial spread", wmax - wmin, 1e-8);
    c.check("|A11|", a, 1e-9);
    c.check("|Q11|", q11, 1e-7);
    // internal anchor R^lambda = 4W - 2/lambda^2 for three lambdas
    for lambda in [0.5, 1.0, 2.0] {
        let mut worst = 0f64;
        for &p in samples(&s, 64).points.iter() {
            let pc = PointCurvature::at(&s, p, ORDER).unwrap();
            let am = riemann::adapted_metric(&s, lambda, p, ORDER).unwrap();
            let pred = 4.0 * pc.curv.w_value - 2.0 / (lambda * lambda);
            worst = worst.max((am.scalar - pred).abs());
        }
        c.check(format!("R^lambda anchor, lambda = {lambda}"), worst, 1e-7);
    }
    c.check("frozen constant |W - 2|", (wmax - CR_SPHERE_W).abs(), 1e-9);
    c.finish();
}

#[test]
fn ac05_adapted_ricci_matrix() {
    let mut c = Criterion::new("AC-05 adapted-metric Ricci diag(2W-2/l^2, 2W-2/l^2, 2/l^2), both models, 3 lambdas");
    for name in ["heisenberg", "cr_sphere"] {
        let s = decl(name, 1.0).structure;
        for lambda in [0.5, 1.0, 2.0] {
            let mut diag = 0f64;
            let mut off = 0f64;
            for &p in samples(&s, 64).points.iter() {
                let pc = PointCurvature::at(&s, p, ORDER).unwrap();
                let am = riemann::adapted_metric(&s, lambda, p, ORDER).unwrap();
                let li = 1.0 / (lambda * lambda);
                let w = pc.curv.w_value;
                let pred = [2.0 * w - 2.0 * li, 2.0 * w - 2.0 * li, 2.0 * li];
                for i in 0..3 {
                    diag = diag.max((am.ricci[i][i] - pred[i]).abs());
                    for j in 0..3 {
                        if i != j {
                            off = off.max(am.ricci[i][j].abs());
                        }
                    }
                }
            }
            c.check(format!("{name} lambda={lambda} diagonal"), diag, 1e-7);
            c.check(format!("{name} lambda={lambda} off-diagonal"), off, 1e-8);
        }
    }
    c.finish();
}

#[test]
fn ac06_soliton_suite() {
    let mut c = Criterion::new("AC-06 soliton suite: gaussian mu in {-1,0,1,2}, contact, negative controls");
    for mu in [-1.0, 0.0, 1.0, 2.0] {
        let cand = candidate("heisenberg_gaussian", mu);
        let rep =
            check_pseudo_gradient(&cand, &samples(&cand.structure, N), ORDER, 1e-9).unwrap();
        c.check(format!("gaussian mu={mu}"), rep.max_residual(), 1e-9);
    }
    for mu in [-1.0, 1.0, 2.0] {
        let cand = candidate("heisenberg_contact", mu);
        let rep = check_cr_soliton(&cand, &samples(&cand.structure, N), ORDER, 1e-9).unwrap();
        c.check(format!("contact mu={mu}"), rep.max_residual(), 1e-9);
    }
    // negative controls must FAIL with residuals above 1e-2
    let coords = decl("heisenberg", 0.0).structure.chart.coord_names();
    let mut bad = candidate("heisenberg_gaussian", 0.0);
    bad.potential = parse_expr("x^3", &coords, &[]).unwrap();
    let rep = check_pseudo_gradient(&bad, &samples(&bad.structure, N), ORDER, 1e-9).unwrap();
    c.check(
        "x^3 rejected (inverted)",
        if rep.entry("phi_11").unwrap().max_residual > 1e-2 { 0.0 } else { 1.0 },
        0.5,
    );
    let mut bad = candidate("heisenberg_contact", 0.0);
    bad.potential = parse_expr("t^2", &coords, &[]).unwrap();
    let rep = check_cr_soliton(&bad, &samples(&bad.structure, N), ORDER, 1e-9).unwrap();
    c.check(
        "t^2 rejected (inverted)",
        if rep.entry("soliton_scalar").unwrap().max_residual > 1e-2 { 0.0 } else { 1.0 },
        0.5,
    );
    c.finish();
}

#[test]
fn ac07_harnack_identity() {
    let mut c = Criterion::new("AC-07 Harnack identity on passing contact solitons");
    for mu in [-1.0, 0.5, 1.0] {
        let cand = candidate("heisenberg_contact", mu);
        let rep = harnack_residual(&cand, &samples(&cand.structure, N), ORDER, 1e-9).unwrap();
        c.check(
            format!("precondition mu={mu} (inverted)"),
            if rep.precondition_ok { 0.0 } else { 1.0 },
            0.5,
        );
        c.check(format!("harnack residual mu={mu}"), rep.max_residual, 1e-7);
        // identically zero on the flat contact soliton
        c.check(format!("identically zero mu={mu}"), rep.max_residual, 1e-14);
    }
    // trivial soliton on the sphere: f = 0, mu = W
    let d = decl("cr_sphere", 0.0);
    let coords = d.structure.chart.coord_names();
    let cand = SolitonCandidate {
        structure: d.structure.clone(),
        potential: parse_expr("0", &coords, &[]).unwrap(),
        kind: crgeo_core::models::PotentialKind::Contact,
        mu: CR_SPHERE_W,
    };
    let rep = harnack_residual(&cand, &samples(&cand.structure, 64), ORDER, 1e-7).unwrap();
    c.check("sphere trivial soliton residual", rep.max_residual, 1e-8);
    c.finish();
}

#[test]
fn ac08_conserved_quantities() {
    let mut c = Criterion::new("AC-08 conserved quantity C, grad(W e^{-phi}), identity (4.3)");
    for mu in [1.0, 2.0, -1.0] {
        let cand = candidate("heisenberg_gaussian", mu);
        let rep =
            conserved_quantities(&cand, &samples(&cand.structure, N), ORDER, 1e-9).unwrap();
        c.check(
            format!("hypotheses mu={mu} (inverted)"),
            rep.hypothesis_failures.len() as f64,
            0.5,
        );
        c.check(format!("spread of C, mu={mu}"), rep.c_spread, 1e-7);
        c.check(format!("|grad_b(W e^-phi)|, mu={mu}"), rep.grad_we_max, 1e-7);
        c.check(format!("W1 identity (4.3), mu={mu}"), rep.w1_identity, 1e-8);
        c.check(format!("gradient identity, mu={mu}"), rep.grad_norm_identity, 1e-7);
    }
    c.finish();
}

#[test]
fn ac09_conformal_laws() {
    let mut c = Criterion::new("AC-09 conformal dual path + divergence identity, 10 random g x 2 models");
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    for name in ["heisenberg", "cr_sphere"] {
        let s = decl(name, 1.0).structure;
        let coords = s.chart.coord_names();
        let pts = SampleSet::halton(&s.chart, SEED, 64);
        let mut dual = 0f64;
        let mut div = 0f64;
        for _ in 0..10 {
            let g: Expr = parse_expr(&random_poly(&mut rng, 3, 0.05), &coords, &[]).unwrap();
            let rep = conformal_report(&s, &g, &pts, ORDER).unwrap();
            dual = dual.max(rep.r1_discrepancy);
            div = div.max(rep.divergence_identity);
        }
        c.check(format!("{name}: dual-path R1"), dual, 1e-6);
        c.check(format!("{name}: divergence identity"), div, 1e-6);
    }
    c.finish();
}

#[test]
fn ac10_level_surface_package() {
    let mut c = Criterion::new("AC-10 level-surface package on gaussian(1), lambda=1, levels {0.5,1,2}");
    let d = decl("heisenberg_gaussian", 1.0);
    let s = &d.structure;
    let phi = &d.potential.as_ref().unwrap().expr;
    let lambda = 1.0;
    for lvl in [0.5, 1.0, 2.0] {
        let ls = riemann::level_surface(s, phi, lambda, lvl, 32, SEED, ORDER).unwrap();
        let mut ii33 = 0f64;
        let mut ii23 = 0f64;
        let mut rm = 0f64;
        let mut k = 0f64;
        for sm in &ls {
            ii33 = ii33.max(sm.ii_e3e3.abs());
            ii23 = ii23.max((sm.ii_e2e3 - 1.0 / lambda).abs());
            rm = rm.max((sm.rm_2323 - 1.0 / (lambda * lambda)).abs());
            k = k.max(sm.gauss_k.abs());
        }
        c.check(format!("II(E3,E3) c={lvl}"), ii33, 1e-8);
        c.check(format!("II(E2,E3)-1/lambda c={lvl}"), ii23, 1e-7);
        c.check(format!("Rm(E2,E3,E2,E3)-1/lambda^2 c={lvl}"), rm, 1e-7);
        c.check(format!("|K| c={lvl}"), k, 1e-7);
    }
    let stats =
        riemann::isoparametric_check(s, phi, 1.0, lambda, &[0.5, 1.0, 2.0], 32, SEED, ORDER)
            .unwrap();
    for st in &stats {
        c.check(format!("isoparametric |grad| spread c={}", st.c), st.grad_spread, 1e-6);
        c.check(format!("isoparametric lap spread c={}", st.c), st.lap_spread, 1e-6);
        // the horizontal part of h^lambda is half the Levi form, so the
        // Laplace-Beltrami operator doubles the sub-Laplacian
        c.check(
            format!("lap phi = 2 lap_b phi c={}", st.c),
            st.laplacian_comparison,
            1e-8,
        );
    }
    c.finish();
}

#[test]
fn ac11_critical_set_classifier() {
    let mut c = Criterion::new("AC-11 critical set of gaussian(1): one line, case (ii), R^3");
    let d = decl("heisenberg_gaussian", 1.0);
    let phi = &d.potential.as_ref().unwrap().expr;
    let rep = riemann::critical_set(&d.structure, phi, GridSpec::default(), SEED).unwrap();
    c.check("trivial flag (inverted)", if rep.trivial { 1.0 } else { 0.0 }, 0.5);
    c.check("components", (rep.components.len() as f64 - 1.0).abs(), 0.5);
    if let Some(comp) = rep.components.first() {
        c.check("dimension", (comp.dimension as f64 - 1.0).abs(), 0.5);
        c.check(
            "tag line (inverted)",
            if comp.tag == TopologyTag::Line { 0.0 } else { 1.0 },
            0.5,
        );
    }
    c.check(
        "case (ii) (inverted)",
        if rep.diffeo.case_label == "(ii)" { 0.0 } else { 1.0 },
        0.5,
    );
    c.check(
        "concluded R^3 (inverted)",
        if rep.diffeo.concluded == ConcludedType::R3 { 0.0 } else { 1.0 },
        0.5,
    );
    c.finish();
}

#[test]
fn ac_extra_gauge_covariance() {
    // Frame-independent scalars are unchanged under frame rotation.
    let mut c = Criterion::new("AC-x gauge covariance of W, |A11|, |Q11|, Q, |R1| under frame rotation");
    let s = decl("heisenberg_gaussian", 1.0).structure;
    let coords = s.chart.coord_names();
    let pe = |t: &str| parse_expr(t, &coords, &[]).unwrap();
    let rot = PHStructure {
        chart: s.chart.clone(),
        theta: s.theta.clone(),
        e1: [pe("cos(0.4*x)"), pe("sin(0.4*x)"), pe("y*cos(0.4*x) - x*sin(0.4*x)")],
        e2: [pe("-sin(0.4*x)"), pe("cos(0.4*x)"), pe("-y*sin(0.4*x) - x*cos(0.4*x)")],
        params: s.params.clone(),
    };
    let mut worst = 0f64;
    for &p in samples(&s, 32).points.iter() {
        let a = PointCurvature::at(&s, p, ORDER).unwrap();
        let b = PointCurvature::at(&rot, p, ORDER).unwrap();
        let (actx, bctx) = (a.ctx(), b.ctx());
        worst = worst
            .max((a.curv.w_value - b.curv.w_value).abs())
            .max((a.conn.a11.mag() - b.conn.a11.mag()).abs())
            .max(
                (cartan_tensor(&actx, &a.curv).unwrap().mag()
                    - cartan_tensor(&bctx, &b.curv).unwrap().mag())
                .abs(),
            );
        let qa = q_curvature(&actx, &a.curv).unwrap();
        let qb = q_curvature(&bctx, &b.curv).unwrap();
        worst = worst
            .max((qa.q - qb.q).abs())
            .max((qa.r1_value.norm() - qb.r1_value.norm()).abs());
    }
    c.check("max deviation over scalars", worst, 1e-8);
    c.finish();
}

#[test]
fn ac_extra_bakry_emery() {
    let mut c = Criterion::new("AC-x Bakry-Emery Ricci = mu|X|^2 and torsion equality on solitons");
    let cand = candidate("heisenberg_gaussian", 1.0);
    let mut worst = 0f64;
    for &p in samples(&cand.structure, 16).points.iter() {
        for x1 in [Complex64::new(1.0, 0.0), Complex64::new(0.3, -0.8)] {
            let be = crgeo_core::soliton::bakry_emery(&cand, x1, p, ORDER).unwrap();
            worst = worst.max(be.ric_residual).max(be.tor_residual);
        }
    }
    c.check("max residual", worst, 1e-9);
    c.finish();
}
