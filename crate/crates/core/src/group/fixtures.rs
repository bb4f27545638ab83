//! Builtin fixture gallery and the JSON fixture format.
//!
//! Builtin identifiers take optional `key=value` parameters after a colon:
//! `disk-schottky:gap=0.3`, `triangle-reflection:p=4,q=4,r=4`,
//! `simplex-lattice`, `cyclic:boost=1.0`.

use std::collections::BTreeMap;

use serde::Deserialize;

use super::GroupPresentation;
use crate::domain::ConvexDomain;
use crate::error::{GeomError, Result};
use crate::projective::{Matrix, ProjectiveMap, ProjectivePoint, Vector};

/// Translation length at which the two orthogonal boosts of `disk-schottky`
/// stop playing ping-pong: `2 asinh 1`.
pub const SCHOTTKY_THRESHOLD: f64 = 1.762_747_174_039_086;

pub const DEFAULT_SCHOTTKY_GAP: f64 = 0.25;

/// A group acting on a domain, with a basepoint.
#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: String,
    pub presentation: GroupPresentation,
    pub domain: ConvexDomain,
    pub basepoint: ProjectivePoint,
}

/// Hyperbolic translation of length `s` along a coordinate axis of the disk.
pub fn boost(axis: usize, s: f64) -> ProjectiveMap {
    let raw = |s: f64| {
        let mut m = Matrix::identity(3, 3);
        m[(axis, axis)] = s.cosh();
        m[(2, 2)] = s.cosh();
        m[(axis, 2)] = s.sinh();
        m[(2, axis)] = s.sinh();
        m
    };
    // det = cosh² − sinh² cancels for large s; the inverse is known exactly.
    ProjectiveMap::from_parts(raw(s), raw(-s), 1.0)
}

pub fn rotation(theta: f64) -> ProjectiveMap {
    ProjectiveMap::from_rows(&[
        vec![theta.cos(), -theta.sin(), 0.0],
        vec![theta.sin(), theta.cos(), 0.0],
        vec![0.0, 0.0, 1.0],
    ])
    .expect("rotation is invertible")
}

impl Fixture {
    /// A builtin name or a path to a JSON fixture.
    pub fn load(spec: &str) -> Result<Self> {
        let path = std::path::Path::new(spec);
        if path.extension().is_some_and(|e| e == "json") || path.is_file() {
            let text = std::fs::read_to_string(path)
                .map_err(|e| GeomError::Fixture(format!("{}: {e}", path.display())))?;
            return Self::from_json(&text);
        }
        Self::builtin(spec)
    }

    pub fn builtin(spec: &str) -> Result<Self> {
        let (name, params) = parse_params(spec)?;
        let get = |k: &str, default: f64| params.get(k).copied().unwrap_or(default);
        let known: &[&str] = match name {
            "disk-schottky" => &["s", "gap"],
            "triangle-reflection" => &["p", "q", "r"],
            "simplex-lattice" => &[],
            "cyclic" => &["boost"],
            _ => return Err(GeomError::Fixture(format!("unknown builtin fixture '{name}'"))),
        };
        if let Some(k) = params.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(GeomError::Fixture(format!("{name}: unknown parameter '{k}'")));
        }
        match name {
            "disk-schottky" => {
                let s = params.get("s").copied().unwrap_or(SCHOTTKY_THRESHOLD + get("gap", DEFAULT_SCHOTTKY_GAP));
                Self::disk_schottky(s)
            }
            "triangle-reflection" => Self::triangle_reflection(get("p", 4.0), get("q", 4.0), get("r", 4.0)),
            "simplex-lattice" => Ok(Self::simplex_lattice()),
            _ => Self::cyclic(get("boost", 1.0)),
        }
    }

    /// Two boosts of length `s` along orthogonal axes of the disk.
    pub fn disk_schottky(s: f64) -> Result<Self> {
        if s <= SCHOTTKY_THRESHOLD {
            return Err(GeomError::Fixture(format!(
                "disk-schottky: s = {s} is not above the ping-pong threshold {SCHOTTKY_THRESHOLD:.6}"
            )));
        }
        let gens = vec![("a".to_string(), boost(0, s)), ("b".to_string(), boost(1, s))];
        let domain = ConvexDomain::disk();
        Ok(Self {
            name: format!("disk-schottky:s={s}"),
            presentation: GroupPresentation::new(gens, true)?,
            basepoint: domain.interior_point(),
            domain,
        })
    }

    /// Reflection group of the hyperbolic triangle with angles `π/p, π/q, π/r`,
    /// acting on the ellipsoid of its Gram form. The basepoint is the incentre.
    pub fn triangle_reflection(p: f64, q: f64, r: f64) -> Result<Self> {
        if [p, q, r].iter().any(|&m| m < 2.0 || m.fract() != 0.0) {
            return Err(GeomError::Fixture("triangle-reflection: p, q, r must be integers ≥ 2".into()));
        }
        if 1.0 / p + 1.0 / q + 1.0 / r >= 1.0 {
            return Err(GeomError::Fixture("triangle-reflection: 1/p + 1/q + 1/r must be < 1".into()));
        }
        let c = |m: f64| -(std::f64::consts::PI / m).cos();
        let gram = Matrix::from_row_slice(3, 3, &[1.0, c(p), c(q), c(p), 1.0, c(r), c(q), c(r), 1.0]);
        let gens = (0..3)
            .map(|i| {
                // s_i(v) = v − 2 B(e_i, v) e_i
                let mut m = Matrix::identity(3, 3);
                for j in 0..3 {
                    m[(i, j)] -= 2.0 * gram[(i, j)];
                }
                Ok((["r1", "r2", "r3"][i].to_string(), ProjectiveMap::new(m)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let inv = gram.clone().try_inverse().ok_or(GeomError::SingularMatrix)?;
        let x = -(inv * Vector::from_element(3, 1.0));
        let domain = ConvexDomain::ellipsoid(gram, None)?;
        Ok(Self {
            name: format!("triangle-reflection:p={p},q={q},r={r}"),
            presentation: GroupPresentation::new(gens, false)?,
            basepoint: ProjectivePoint::new(x)?,
            domain,
        })
    }

    /// `⟨diag(4,2,1), diag(2,4,1)⟩` on the 2-simplex.
    pub fn simplex_lattice() -> Self {
        let d = |a: f64, b: f64| ProjectiveMap::new(Matrix::from_diagonal(&Vector::from_vec(vec![a, b, 1.0]))).unwrap();
        let gens = vec![("a".to_string(), d(4.0, 2.0)), ("b".to_string(), d(2.0, 4.0))];
        let domain = ConvexDomain::standard_simplex(2);
        Self {
            name: "simplex-lattice".into(),
            presentation: GroupPresentation::new(gens, false).expect("diagonal generators"),
            basepoint: domain.interior_point(),
            domain,
        }
    }

    /// `⟨boost⟩` on the disk.
    pub fn cyclic(s: f64) -> Result<Self> {
        if !(s > 0.0) {
            return Err(GeomError::Fixture("cyclic: boost must be positive".into()));
        }
        let domain = ConvexDomain::disk();
        Ok(Self {
            name: format!("cyclic:boost={s}"),
            presentation: GroupPresentation::new(vec![("a".into(), boost(0, s))], true)?,
            basepoint: domain.interior_point(),
            domain,
        })
    }

    /// Parses the JSON fixture format.
    ///
    /// ```json
    /// {"generators": [{"label": "a", "matrix": [[...], ...]}, ...],
    ///  "free": true,
    ///  "domain": {"kind": "ellipsoid", "form": [[...]]},
    ///  "basepoint": [...]}
    /// ```
    ///
    /// `domain` defaults to the hyperbolic ball `diag(1, …, 1, −1)`; other kinds
    /// are `simplex` (the standard one) and `polytope` with `vertices`.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawFixture = serde_json::from_str(text).map_err(|e| {
            GeomError::Fixture(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        if raw.generators.is_empty() {
            return Err(GeomError::Fixture("generators: empty list".into()));
        }
        let n = raw.generators[0].matrix.len();
        if n < 2 {
            return Err(GeomError::Fixture("generators[0].matrix: need at least 2 rows".into()));
        }
        let mut gens = Vec::new();
        for (i, g) in raw.generators.iter().enumerate() {
            let field = format!("generators[{i}].matrix");
            let m = matrix_field(&field, &g.matrix, n)?;
            let map = ProjectiveMap::new(m).map_err(|e| GeomError::Fixture(format!("{field}: {e}")))?;
            let label = g.label.clone().unwrap_or_else(|| format!("g{i}"));
            gens.push((label, map));
        }
        let presentation = GroupPresentation::new(gens, raw.free.unwrap_or(false))?;
        let domain = match &raw.domain {
            None => ConvexDomain::hyperbolic_ball(n - 1),
            Some(RawDomain::Ellipsoid { form }) => {
                ConvexDomain::ellipsoid(matrix_field("domain.form", form, n)?, None)
                    .map_err(|e| GeomError::Fixture(format!("domain.form: {e}")))?
            }
            Some(RawDomain::Simplex) => ConvexDomain::standard_simplex(n - 1),
            Some(RawDomain::Polytope { vertices }) => {
                let verts = vertices
                    .iter()
                    .enumerate()
                    .map(|(i, v)| vector_field(&format!("domain.vertices[{i}]"), v, n))
                    .collect::<Result<Vec<_>>>()?;
                ConvexDomain::polytope(verts, None, None)
                    .map_err(|e| GeomError::Fixture(format!("domain.vertices: {e}")))?
            }
        };
        let basepoint = match &raw.basepoint {
            Some(b) => ProjectivePoint::new(vector_field("basepoint", b, n)?)?,
            None => domain.interior_point(),
        };
        if !domain.contains(&basepoint) {
            return Err(GeomError::Fixture("basepoint: not inside the domain".into()));
        }
        super::check_automorphisms(&presentation, &domain)
            .map_err(|e| GeomError::Fixture(format!("generators: {e}")))?;
        Ok(Self { name: raw.name.unwrap_or_else(|| "json".into()), presentation, domain, basepoint })
    }
}

fn parse_params(spec: &str) -> Result<(&str, BTreeMap<String, f64>)> {
    let (name, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let mut params = BTreeMap::new();
    for kv in rest.split(',').filter(|s| !s.trim().is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| GeomError::Fixture(format!("{name}: expected key=value, got '{kv}'")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| GeomError::Fixture(format!("{name}: parameter '{k}' is not a number")))?;
        params.insert(k.trim().to_string(), v);
    }
    Ok((name.trim(), params))
}

fn matrix_field(field: &str, rows: &[Vec<f64>], n: usize) -> Result<Matrix> {
    if rows.len() != n {
        return Err(GeomError::Fixture(format!("{field}: expected {n} rows, got {}", rows.len())));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != n {
            return Err(GeomError::Fixture(format!("{field}[{i}]: expected {n} entries, got {}", r.len())));
        }
    }
    Ok(Matrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn vector_field(field: &str, v: &[f64], n: usize) -> Result<Vector> {
    if v.len() != n {
        return Err(GeomError::Fixture(format!("{field}: expected {n} entries, got {}", v.len())));
    }
    Ok(Vector::from_column_slice(v))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFixture {
    name: Option<String>,
    generators: Vec<RawGenerator>,
    free: Option<bool>,
    domain: Option<RawDomain>,
    basepoint: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGenerator {
    label: Option<String>,
    matrix: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RawDomain {
    Ellipsoid { form: Vec<Vec<f64>> },
    Simplex,
    Polytope { vertices: Vec<Vec<f64>> },
}
