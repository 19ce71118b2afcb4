//! Built-in model spaces and the loader for user-defined model files.
//!
//! Model files are UTF-8, line oriented key/value sections:
//!
//! ```text
//! [chart]
//! coords = x,y,t
//! box = -2,2,-2,2,-2,2
//! margin = 0.001
//!
//! [params]
//! mu = 1
//!
//! [contact]
//! theta = "-y","x","1"
//!
//! [frame]
//! e1 = "1","0","y"
//! e2 = "0","1","-x"
//!
//! [potential]
//! kind = gradient
//! expr = "mu*(x^2+y^2)"
//!
//! [hypotheses]
//! complete = true
//! closed = false
//! vanishing_torsion = true
//! ```
//!
//! Contact-form and frame components are quoted expressions against
//! `(dx, dy, dt)` resp. `(∂x, ∂y, ∂t)` in coordinate order; `#` starts a
//! comment line. Built-ins are declared in the same format and parsed by the
//! same loader, so a built-in serialized with [`save_model`] and reloaded
//! reproduces identical reports bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::expr::{parse_expr, Expr, ParseError};
use crate::sample::{Chart, ChartError, SampleSet};
use crate::structure::{validate, GeomError, PHStructure, ParamTable};

/// Tanaka-Webster scalar curvature of the built-in CR sphere model.
///
/// The sphere is realized as the conformal image `θ = θ_H / u` of the
/// Heisenberg model with `u = (1+(x²+y²)/4)² + t²/4` (frame scaled by `√u`),
/// the chart being the Cayley-transform image of the sphere minus a point.
/// For this normalization `W ≡ 2`: with `v = u^{-1/2}` one computes
/// `Δ_b v = -v³/2` on the Heisenberg model, and `W = -4 v^{-3} Δ_b v = 2`.
/// The engine cross-checks the value against the adapted-metric scalar
/// curvature relation `R^λ = 4W - 2λ⁻²`.
pub const CR_SPHERE_W: f64 = 2.0;

/// Declared global hypotheses of a model; data, never inferred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Hypotheses {
    pub complete: bool,
    pub closed: bool,
    pub vanishing_torsion: bool,
}

/// Which soliton equations a potential is meant for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialKind {
    /// `φ`: pseudo-gradient equations `W + Δ_bφ/2 = μ`, `φ₁₁ = 0`, `φ₀ = 0`.
    Gradient,
    /// `f`: contact-field equations `W + f₀/2 = μ`, `f₁₁ + iA₁₁f = 0`.
    Contact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    pub kind: PotentialKind,
    pub expr: Expr,
    pub source: String,
}

/// A registered model: structure, optional potential, declared hypotheses.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelDecl {
    pub name: String,
    pub structure: PHStructure,
    pub potential: Option<Potential>,
    pub hypotheses: Hypotheses,
    /// Component source strings, kept for serialization.
    pub sources: ModelSources,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSources {
    pub theta: [String; 3],
    pub e1: [String; 3],
    pub e2: [String; 3],
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("model file line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("model file line {line}: {source}")]
    Parse { line: usize, source: ParseError },
    #[error("chart: {0}")]
    Chart(#[from] ChartError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("validation failure: {0}")]
    Validation(String),
    #[error("{0}")]
    Geom(#[from] GeomError),
}

const HEISENBERG: &str = r#"[chart]
coords = x,y,t
box = -2,2,-2,2,-2,2
margin = 0.001

[contact]
theta = "-y","x","1"

[frame]
e1 = "1","0","y"
e2 = "0","1","-x"

[hypotheses]
complete = true
closed = false
vanishing_torsion = true
"#;

const HEISENBERG_GAUSSIAN: &str = r#"[chart]
coords = x,y,t
box = -2,2,-2,2,-2,2
margin = 0.001

[params]
mu = 1

[contact]
theta = "-y","x","1"

[frame]
e1 = "1","0","y"
e2 = "0","1","-x"

[potential]
kind = gradient
expr = "mu*(x^2+y^2)"

[hypotheses]
complete = true
closed = false
vanishing_torsion = true
"#;

const HEISENBERG_CONTACT: &str = r#"[chart]
coords = x,y,t
box = -2,2,-2,2,-2,2
margin = 0.001

[params]
mu = 1

[contact]
theta = "-y","x","1"

[frame]
e1 = "1","0","y"
e2 = "0","1","-x"

[potential]
kind = contact
expr = "2*mu*t"

[hypotheses]
complete = true
closed = false
vanishing_torsion = true
"#;

// The conformal factor u = (1+(x^2+y^2)/4)^2 + t^2/4 realizes the round
// sphere: theta = theta_H/u, frame scaled by sqrt(u). W = 2, A_11 = 0.
const CR_SPHERE: &str = r#"[chart]
coords = x,y,t
box = -2,2,-2,2,-2,2
margin = 0.001

[contact]
theta = "-y/((1+(x^2+y^2)/4)^2+t^2/4)","x/((1+(x^2+y^2)/4)^2+t^2/4)","1/((1+(x^2+y^2)/4)^2+t^2/4)"

[frame]
e1 = "sqrt((1+(x^2+y^2)/4)^2+t^2/4)","0","y*sqrt((1+(x^2+y^2)/4)^2+t^2/4)"
e2 = "0","sqrt((1+(x^2+y^2)/4)^2+t^2/4)","-x*sqrt((1+(x^2+y^2)/4)^2+t^2/4)"

[hypotheses]
complete = true
closed = true
vanishing_torsion = true
"#;

const CR_SPHERE_TRIVIAL: &str = r#"[chart]
coords = x,y,t
box = -2,2,-2,2,-2,2
margin = 0.001

[contact]
theta = "-y/((1+(x^2+y^2)/4)^2+t^2/4)","x/((1+(x^2+y^2)/4)^2+t^2/4)","1/((1+(x^2+y^2)/4)^2+t^2/4)"

[frame]
e1 = "sqrt((1+(x^2+y^2)/4)^2+t^2/4)","0","y*sqrt((1+(x^2+y^2)/4)^2+t^2/4)"
e2 = "0","sqrt((1+(x^2+y^2)/4)^2+t^2/4)","-x*sqrt((1+(x^2+y^2)/4)^2+t^2/4)"

[potential]
kind = gradient
expr = "0"

[hypotheses]
complete = true
closed = true
vanishing_torsion = true
"#;

/// Names of the built-in models.
pub const BUILTIN_NAMES: [&str; 5] = [
    "heisenberg",
    "heisenberg_gaussian",
    "heisenberg_contact",
    "cr_sphere",
    "cr_sphere_trivial",
];

/// Construct a built-in model, overriding declared parameters.
pub fn builtin(name: &str, params: &[(&str, f64)]) -> Result<ModelDecl, ModelError> {
    let text = match name {
        "heisenberg" => HEISENBERG,
        "heisenberg_gaussian" => HEISENBERG_GAUSSIAN,
        "heisenberg_contact" => HEISENBERG_CONTACT,
        "cr_sphere" => CR_SPHERE,
        "cr_sphere_trivial" => CR_SPHERE_TRIVIAL,
        other => return Err(ModelError::UnknownModel(other.to_string())),
    };
    let mut decl = parse_model(text, name)?;
    for (pname, value) in params {
        if !decl.structure.params.set(pname, *value) {
            return Err(ModelError::UnknownParameter(pname.to_string()));
        }
    }
    Ok(decl)
}

/// Load a model file: parse, then validate the structure invariants on the
/// declared sampling box. Fails loudly on any invariant violation.
pub fn load(path: &Path) -> Result<ModelDecl, ModelError> {
    let text = std::fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".to_string());
    let decl = parse_model(&text, &name)?;
    check_valid(&decl)?;
    Ok(decl)
}

/// Run the structure validation a loaded model must pass before registration.
pub fn check_valid(decl: &ModelDecl) -> Result<(), ModelError> {
    let samples = SampleSet::halton(&decl.structure.chart, 7, 64);
    let report = validate(&decl.structure, &samples)?;
    if report.pass() {
        return Ok(());
    }
    // Prefer the normalization entry in the message when it failed: a wrongly
    // scaled frame trips several invariants at once and this is the readable one.
    let worst = report
        .entries
        .iter()
        .find(|e| !e.pass() && e.name == "levi_normalization")
        .unwrap_or_else(|| {
            report
                .entries
                .iter()
                .filter(|e| !e.pass())
                .max_by(|a, b| a.max_residual.total_cmp(&b.max_residual))
                .unwrap()
        });
    let msg = if worst.name == "levi_normalization" {
        // Re-evaluate at the worst point so the message carries the value.
        let gp = decl.structure.eval_point(report.worst_point, 2)?;
        let got = crate::forms::eval2(&gp.dtheta, &gp.e1, &gp.e2).value().re;
        format!(
            "normalization: expected 2, got {} at ({}, {}, {})",
            got, report.worst_point[0], report.worst_point[1], report.worst_point[2]
        )
    } else {
        format!(
            "{}: residual {} exceeds {} at ({}, {}, {})",
            worst.name,
            worst.max_residual,
            worst.tolerance,
            report.worst_point[0],
            report.worst_point[1],
            report.worst_point[2]
        )
    };
    Err(ModelError::Validation(msg))
}

fn split_quoted(line: usize, v: &str) -> Result<Vec<String>, ModelError> {
    let mut out = Vec::new();
    let mut rest = v.trim();
    while !rest.is_empty() {
        if !rest.starts_with('"') {
            return Err(ModelError::Format {
                line,
                msg: format!("expected quoted expression, found `{rest}`"),
            });
        }
        let end = rest[1..].find('"').ok_or(ModelError::Format {
            line,
            msg: "unterminated quote".to_string(),
        })? + 1;
        out.push(rest[1..end].to_string());
        rest = rest[end + 1..].trim_start();
        if let Some(stripped) = rest.strip_prefix(',') {
            rest = stripped.trim_start();
        } else if !rest.is_empty() {
            return Err(ModelError::Format {
                line,
                msg: format!("expected `,` between components, found `{rest}`"),
            });
        }
    }
    Ok(out)
}

fn parse_bool(line: usize, v: &str) -> Result<bool, ModelError> {
    match v.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(ModelError::Format { line, msg: format!("expected true/false, got `{other}`") }),
    }
}

fn parse_f64(line: usize, v: &str) -> Result<f64, ModelError> {
    v.trim()
        .parse()
        .map_err(|_| ModelError::Format { line, msg: format!("bad number `{}`", v.trim()) })
}

/// Parse model text (used by both `load` and the built-ins).
pub fn parse_model(text: &str, name: &str) -> Result<ModelDecl, ModelError> {
    let mut section = String::new();
    let mut coords: Option<Vec<String>> = None;
    let mut sbox = [(-2.0, 2.0); 3];
    let mut margin = 1e-3;
    let mut params: Vec<(String, f64)> = Vec::new();
    let mut theta_src: Option<Vec<String>> = None;
    let mut e1_src: Option<Vec<String>> = None;
    let mut e2_src: Option<Vec<String>> = None;
    let mut pot_kind: Option<PotentialKind> = None;
    let mut pot_src: Option<String> = None;
    let mut hyp = Hypotheses::default();

    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(sec) = line.strip_prefix('[') {
            let sec = sec.strip_suffix(']').ok_or(ModelError::Format {
                line: ln,
                msg: "unterminated section header".to_string(),
            })?;
            section = sec.to_string();
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ModelError::Format {
            line: ln,
            msg: format!("expected `key = value`, found `{line}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        match (section.as_str(), key) {
            ("chart", "coords") => {
                let c: Vec<String> = value.split(',').map(|s| s.trim().to_string()).collect();
                if c.len() != 3 {
                    return Err(ModelError::Format { line: ln, msg: "need 3 coordinates".into() });
                }
                coords = Some(c);
            }
            ("chart", "box") => {
                let nums: Vec<f64> = value
                    .split(',')
                    .map(|s| parse_f64(ln, s))
                    .collect::<Result<_, _>>()?;
                if nums.len() != 6 {
                    return Err(ModelError::Format { line: ln, msg: "box needs 6 numbers".into() });
                }
                sbox = [(nums[0], nums[1]), (nums[2], nums[3]), (nums[4], nums[5])];
            }
            ("chart", "margin") => margin = parse_f64(ln, value)?,
            ("params", _) => params.push((key.to_string(), parse_f64(ln, value)?)),
            ("contact", "theta") => theta_src = Some(split_quoted(ln, value)?),
            ("frame", "e1") => e1_src = Some(split_quoted(ln, value)?),
            ("frame", "e2") => e2_src = Some(split_quoted(ln, value)?),
            ("potential", "kind") => {
                pot_kind = Some(match value {
                    "gradient" => PotentialKind::Gradient,
                    "contact" => PotentialKind::Contact,
                    other => {
                        return Err(ModelError::Format {
                            line: ln,
                            msg: format!("potential kind must be gradient|contact, got `{other}`"),
                        })
                    }
                });
            }
            ("potential", "expr") => {
                pot_src = Some(split_quoted(ln, value)?.into_iter().next().ok_or(
                    ModelError::Format { line: ln, msg: "empty potential expression".into() },
                )?);
            }
            ("hypotheses", "complete") => hyp.complete = parse_bool(ln, value)?,
            ("hypotheses", "closed") => hyp.closed = parse_bool(ln, value)?,
            ("hypotheses", "vanishing_torsion") => hyp.vanishing_torsion = parse_bool(ln, value)?,
            (sec, key) => {
                return Err(ModelError::Format {
                    line: ln,
                    msg: format!("unknown key `{key}` in section [{sec}]"),
                })
            }
        }
    }

    let coords = coords.ok_or(ModelError::Format { line: 0, msg: "missing [chart] coords".into() })?;
    let theta_src = theta_src.ok_or(ModelError::Format { line: 0, msg: "missing [contact] theta".into() })?;
    let e1_src = e1_src.ok_or(ModelError::Format { line: 0, msg: "missing [frame] e1".into() })?;
    let e2_src = e2_src.ok_or(ModelError::Format { line: 0, msg: "missing [frame] e2".into() })?;
    for (what, v) in [("theta", &theta_src), ("e1", &e1_src), ("e2", &e2_src)] {
        if v.len() != 3 {
            return Err(ModelError::Format { line: 0, msg: format!("{what} needs 3 components") });
        }
    }

    let inf = f64::INFINITY;
    let chart = Chart::new(
        name,
        [coords[0].as_str(), coords[1].as_str(), coords[2].as_str()],
        [(-inf, inf); 3],
        sbox,
        margin,
    )?;
    let pnames: Vec<String> = params.iter().map(|(n, _)| n.clone()).collect();

    let parse3 = |src: &[String]| -> Result<[Expr; 3], ModelError> {
        let mut out = Vec::with_capacity(3);
        for s in src {
            out.push(
                parse_expr(s, &coords, &pnames)
                    .map_err(|source| ModelError::Parse { line: 0, source })?,
            );
        }
        Ok([out[0].clone(), out[1].clone(), out[2].clone()])
    };

    let structure = PHStructure {
        chart,
        theta: parse3(&theta_src)?,
        e1: parse3(&e1_src)?,
        e2: parse3(&e2_src)?,
        params: ParamTable {
            names: pnames.clone(),
            values: params.iter().map(|(_, v)| *v).collect(),
        },
    };

    let potential = match (pot_kind, pot_src) {
        (Some(kind), Some(src)) => Some(Potential {
            kind,
            expr: parse_expr(&src, &coords, &pnames)
                .map_err(|source| ModelError::Parse { line: 0, source })?,
            source: src,
        }),
        (None, None) => None,
        _ => {
            return Err(ModelError::Format {
                line: 0,
                msg: "[potential] requires both kind and expr".into(),
            })
        }
    };

    Ok(ModelDecl {
        name: name.to_string(),
        structure,
        potential,
        hypotheses: hyp,
        sources: ModelSources {
            theta: [theta_src[0].clone(), theta_src[1].clone(), theta_src[2].clone()],
            e1: [e1_src[0].clone(), e1_src[1].clone(), e1_src[2].clone()],
            e2: [e2_src[0].clone(), e2_src[1].clone(), e2_src[2].clone()],
        },
    })
}

/// Serialize a model in the canonical file format.
pub fn save_model(decl: &ModelDecl) -> String {
    let mut s = String::new();
    let chart = &decl.structure.chart;
    let _ = writeln!(s, "[chart]");
    let _ = writeln!(s, "coords = {},{},{}", chart.coords[0], chart.coords[1], chart.coords[2]);
    let b = &chart.sampling_box;
    let _ = writeln!(
        s,
        "box = {},{},{},{},{},{}",
        b[0].0, b[0].1, b[1].0, b[1].1, b[2].0, b[2].1
    );
    let _ = writeln!(s, "margin = {}", chart.margin);
    if !decl.structure.params.names.is_empty() {
        let _ = writeln!(s, "\n[params]");
        for (n, v) in decl
            .structure
            .params
            .names
            .iter()
            .zip(&decl.structure.params.values)
        {
            let _ = writeln!(s, "{n} = {v}");
        }
    }
    let _ = writeln!(s, "\n[contact]");
    let th = &decl.sources.theta;
    let _ = writeln!(s, "theta = \"{}\",\"{}\",\"{}\"", th[0], th[1], th[2]);
    let _ = writeln!(s, "\n[frame]");
    let e1 = &decl.sources.e1;
    let _ = writeln!(s, "e1 = \"{}\",\"{}\",\"{}\"", e1[0], e1[1], e1[2]);
    let e2 = &decl.sources.e2;
    let _ = writeln!(s, "e2 = \"{}\",\"{}\",\"{}\"", e2[0], e2[1], e2[2]);
    if let Some(pot) = &decl.potential {
        let _ = writeln!(s, "\n[potential]");
        let kind = match pot.kind {
            PotentialKind::Gradient => "gradient",
            PotentialKind::Contact => "contact",
        };
        let _ = writeln!(s, "kind = {kind}");
        let _ = writeln!(s, "expr = \"{}\"", pot.source);
    }
    let _ = writeln!(s, "\n[hypotheses]");
    let _ = writeln!(s, "complete = {}", decl.hypotheses.complete);
    let _ = writeln!(s, "closed = {}", decl.hypotheses.closed);
    let _ = writeln!(s, "vanishing_torsion = {}", decl.hypotheses.vanishing_torsion);
    s
}
