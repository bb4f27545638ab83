use std::collections::VecDeque;

use super::{Backend, Chart, ConvexDomain, FaceDistance, SplDistance};
use crate::error::{GeomError, Result};
use crate::projective::{Matrix, Vector};

/// Incidence tolerance for `f(x) = 0` with facets normalised to `f(interior) = 1`.
const FACE_TOL: f64 = 1e-9;
const MAX_HULL_VERTICES: usize = 64;

/// A convex polytope in `P(V)`: chart-normalised vertices, facet functionals
/// (positive inside, `f(interior) = 1`) and the facet–vertex incidence.
#[derive(Clone, Debug)]
pub struct Polyhedron {
    vertices: Vec<Vector>,
    facets: Vec<Vector>,
    incidence: Vec<Vec<usize>>,
    interior: Vector,
    simplex: bool,
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

fn default_chart(vertices: &[Vector]) -> Vector {
    let n = vertices[0].len();
    let mut m = Vector::zeros(n);
    for v in vertices {
        m += v.normalize();
    }
    m.map(|c| if c.abs() < 1e-14 { 0.0 } else { c })
}

fn normalise_vertices(vertices: &[Vector], chart: &Vector) -> Result<Vec<Vector>> {
    vertices
        .iter()
        .map(|v| {
            let phi = chart.dot(v);
            if phi <= 1e-12 * v.norm() {
                Err(GeomError::InvalidDomain("vertex not in the positive half of the chart".into()))
            } else {
                Ok(v / phi)
            }
        })
        .collect()
}

impl Polyhedron {
    fn finish(vertices: Vec<Vector>, facets: Vec<Vector>, interior: Vector, simplex: bool) -> Self {
        let incidence = facets
            .iter()
            .map(|f| (0..vertices.len()).filter(|&j| f.dot(&vertices[j]).abs() <= FACE_TOL).collect())
            .collect();
        Self { vertices, facets, incidence, interior, simplex }
    }

    pub(crate) fn simplex(vertices: Vec<Vector>, chart: Option<Vector>) -> Result<(Self, Chart)> {
        let n = vertices.first().map(|v| v.len()).ok_or(GeomError::Empty("simplex vertices"))?;
        if vertices.len() != n || vertices.iter().any(|v| v.len() != n) {
            return Err(GeomError::InvalidDomain(format!("a simplex in P(R^{n}) needs {n} vertices")));
        }
        let vm = Matrix::from_columns(&vertices);
        let inv = vm.try_inverse().ok_or(GeomError::InvalidDomain("simplex vertices are dependent".into()))?;
        // Rows of V⁻¹ are the barycentric functionals; fix signs so vertices are positive.
        let mut functionals: Vec<Vector> = (0..n).map(|i| inv.row(i).transpose()).collect();
        let functional = match chart {
            Some(f) => f,
            None => functionals.iter().fold(Vector::zeros(n), |acc, f| acc + f),
        };
        let verts = normalise_vertices(&vertices, &functional)?;
        let mut interior = Vector::zeros(n);
        for v in &verts {
            interior += v;
        }
        interior /= n as f64;
        for f in functionals.iter_mut() {
            let val = f.dot(&interior);
            *f /= val;
        }
        let origin = verts[n - 1].clone();
        let basis = Matrix::from_columns(&(0..n - 1).map(|i| &verts[i] - &origin).collect::<Vec<_>>());
        let chart = Chart::new(functional, &origin, basis)?;
        Ok((Self::finish(verts, functionals, interior, true), chart))
    }

    pub(crate) fn from_vertices(
        vertices: Vec<Vector>,
        interior: Option<Vector>,
        chart: Option<Vector>,
    ) -> Result<(Self, Chart)> {
        let n = vertices.first().map(|v| v.len()).ok_or(GeomError::Empty("polytope vertices"))?;
        if vertices.iter().any(|v| v.len() != n) {
            return Err(GeomError::DimensionMismatch { expected: n, got: vertices.iter().map(|v| v.len()).max().unwrap_or(0) });
        }
        if vertices.len() < n {
            return Err(GeomError::InvalidDomain("too few vertices for an open polytope".into()));
        }
        if vertices.len() > MAX_HULL_VERTICES {
            return Err(GeomError::InvalidDomain(format!("at most {MAX_HULL_VERTICES} vertices supported")));
        }
        let functional = chart.unwrap_or_else(|| default_chart(&vertices));
        let verts = normalise_vertices(&vertices, &functional)?;
        let interior = match interior {
            Some(p) => {
                let phi = functional.dot(&p);
                if phi.abs() < 1e-12 {
                    return Err(GeomError::InteriorPointMissing);
                }
                p / phi
            }
            None => verts.iter().fold(Vector::zeros(n), |a, v| a + v) / verts.len() as f64,
        };
        let scale = verts.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let mut facets: Vec<Vector> = Vec::new();
        for combo in combinations(verts.len(), n - 1) {
            let m = Matrix::from_fn(n - 1, n, |i, j| verts[combo[i]][j]);
            let svd = m.svd(false, true);
            let v_t = svd.v_t.expect("requested");
            let mut sv: Vec<(usize, f64)> = svd.singular_values.iter().copied().enumerate().collect();
            sv.sort_by(|a, b| a.1.total_cmp(&b.1));
            // Need rank n-1: all n-1 singular values non-negligible.
            if sv.len() < n - 1 || sv[0].1 < 1e-9 * scale {
                continue;
            }
            // Null vector: orthogonal complement of the row space.
            let rows: Vec<Vector> = (0..v_t.nrows()).map(|i| v_t.row(i).transpose()).collect();
            let mut f = Vector::zeros(n);
            for k in 0..n {
                let mut e = Vector::zeros(n);
                e[k] = 1.0;
                for r in &rows {
                    let p = r.dot(&e);
                    e -= r * p;
                }
                if e.norm() > f.norm() {
                    f = e;
                }
            }
            let fi = f.dot(&interior);
            if fi.abs() < 1e-12 {
                continue;
            }
            f /= fi;
            if verts.iter().all(|v| f.dot(v) >= -FACE_TOL) && !facets.iter().any(|g| (g - &f).amax() < 1e-8) {
                facets.push(f);
            }
        }
        if facets.len() < n {
            return Err(GeomError::InvalidDomain("vertices do not span an open polytope".into()));
        }
        if facets.iter().any(|f| f.dot(&interior) <= 0.0) {
            return Err(GeomError::InteriorPointMissing);
        }
        // Keep only genuine vertices: incident facets must have rank n-1.
        let kept: Vec<Vector> = verts
            .iter()
            .filter(|v| {
                let inc: Vec<&Vector> = facets.iter().filter(|f| f.dot(v).abs() <= FACE_TOL).collect();
                if inc.len() < n - 1 {
                    return false;
                }
                let m = Matrix::from_fn(inc.len(), n, |i, j| inc[i][j]);
                let sv = m.singular_values();
                let mut s: Vec<f64> = sv.iter().copied().collect();
                s.sort_by(|a, b| b.total_cmp(a));
                s[n - 2] > 1e-9 * s[0]
            })
            .cloned()
            .collect();
        let simplex = kept.len() == n && facets.len() == n;
        let chart = Chart::orthonormal(functional, &interior)?;
        Ok((Self::finish(kept, facets, interior, simplex), chart))
    }

    pub fn vertices(&self) -> &[Vector] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Vector] {
        &self.facets
    }

    /// Vertex indices on each facet.
    pub fn incidence(&self) -> &[Vec<usize>] {
        &self.incidence
    }

    pub fn interior(&self) -> &Vector {
        &self.interior
    }

    pub fn is_simplex(&self) -> bool {
        self.simplex
    }

    pub(crate) fn margin(&self, x: &Vector, chart: &Chart) -> f64 {
        self.facets
            .iter()
            .map(|f| f.dot(x) / chart.tangent(f).norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn exit_param(&self, x: &Vector, u: &Vector) -> Result<f64> {
        let mut best = f64::INFINITY;
        for f in &self.facets {
            let fu = f.dot(u);
            if fu < 0.0 {
                let s = f.dot(x).max(0.0) / -fu;
                best = best.min(s);
            }
        }
        Ok(best)
    }

    /// Facets whose hyperplane contains the chart point `x`.
    pub(crate) fn active_facets(&self, x: &Vector) -> Vec<usize> {
        (0..self.facets.len()).filter(|&i| self.facets[i].dot(x).abs() <= FACE_TOL).collect()
    }

    /// Smooth, extremal, strongly extremal.
    pub(crate) fn classify(&self, x: &Vector) -> (bool, bool, bool) {
        let active = self.active_facets(x);
        let smooth = active.len() == 1;
        let extremal = self.vertices.iter().any(|v| (v - x).amax() <= 1e-8);
        // A vertex of a polytope of dimension ≥ 2 ends an edge lying in ∂Ω,
        // so no boundary point is strongly extremal.
        let strongly = extremal && self.vertices[0].len() <= 2;
        (smooth, extremal, strongly)
    }

    pub(crate) fn simplicial_distance(&self, x: &Vector, y: &Vector) -> SplDistance {
        if (x - y).amax() <= 1e-9 {
            return SplDistance::Finite(0);
        }
        let fx = self.active_facets(x);
        let fy = self.active_facets(y);
        if fx.is_empty() || fy.is_empty() {
            return SplDistance::Unknown;
        }
        // Chains of boundary segments move inside facets; two facets can be
        // chained iff they share a vertex.
        let m = self.facets.len();
        let adjacent = |i: usize, j: usize| self.incidence[i].iter().any(|v| self.incidence[j].contains(v));
        let mut dist = vec![u32::MAX; m];
        let mut queue = VecDeque::new();
        for &i in &fx {
            dist[i] = 0;
            queue.push_back(i);
        }
        while let Some(i) = queue.pop_front() {
            for j in 0..m {
                if dist[j] == u32::MAX && adjacent(i, j) {
                    dist[j] = dist[i] + 1;
                    queue.push_back(j);
                }
            }
        }
        match fy.iter().map(|&j| dist[j]).min() {
            Some(d) if d != u32::MAX => SplDistance::Finite(d + 1),
            _ => SplDistance::Infinite,
        }
    }

    pub(crate) fn face_distance(&self, x: &Vector, y: &Vector) -> FaceDistance {
        let fx = self.active_facets(x);
        let fy = self.active_facets(y);
        if fx != fy {
            return FaceDistance::Infinite;
        }
        let u = y - x;
        if u.amax() <= 1e-12 {
            return FaceDistance::Finite(0.0);
        }
        // Exit through the facets not containing the face.
        let exit = |p: &Vector, dir: &Vector| {
            self.facets
                .iter()
                .enumerate()
                .filter(|(i, _)| !fx.contains(i))
                .filter_map(|(_, f)| {
                    let fu = f.dot(dir);
                    (fu < 0.0).then(|| f.dot(p).max(0.0) / -fu)
                })
                .fold(f64::INFINITY, f64::min)
        };
        let sa = exit(x, &(-&u));
        let tb = exit(y, &u);
        FaceDistance::Finite(0.5 * ((1.0 / sa).ln_1p() + (1.0 / tb).ln_1p()))
    }

    /// Max-log-ratio formula on a simplex for arbitrary representatives.
    pub(crate) fn simplex_distance_vec(&self, x: &Vector, y: &Vector) -> Result<f64> {
        let ratios: Vec<f64> = self.facets.iter().map(|f| f.dot(y) / f.dot(x)).collect();
        if ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(GeomError::NotInDomain { near_boundary: false });
        }
        let max = ratios.iter().copied().fold(f64::MIN, f64::max);
        let min = ratios.iter().copied().fold(f64::MAX, f64::min);
        Ok(0.5 * (max / min).ln())
    }

    /// Dual polytope: hyperplanes missing the closure.
    fn dual(&self, chart_functional: &Vector) -> Result<ConvexDomain> {
        let n = self.interior.len();
        let vertices: Vec<Vector> = self.facets.clone();
        // Evaluation at a primal point is a functional on V*. Evaluation at the
        // interior point charts the dual; the primal chart is an interior dual point.
        let dual_interior = chart_functional.clone();
        let dual_chart = self.interior.clone();
        let facets: Vec<Vector> = self
            .vertices
            .iter()
            .map(|v| v / v.dot(&dual_interior))
            .collect();
        let verts = normalise_vertices(&vertices, &dual_chart)?;
        let interior = &dual_interior / dual_chart.dot(&dual_interior);
        let simplex = verts.len() == n && facets.len() == n;
        let poly = Polyhedron::finish(verts, facets, interior.clone(), simplex);
        let chart = Chart::orthonormal(dual_chart, &interior)?;
        Ok(ConvexDomain::from_parts(Backend::Polytope(poly), chart))
    }
}

/// Dual of a polytope domain, living in `P(V*)`.
pub fn dual_polytope(domain: &ConvexDomain) -> Result<ConvexDomain> {
    let poly = domain
        .as_polyhedron()
        .ok_or_else(|| GeomError::InvalidDomain("dual_polytope needs a polytope".into()))?;
    if poly.margin(&poly.interior, domain.chart()) <= 0.0 {
        return Err(GeomError::InteriorPointMissing);
    }
    poly.dual(domain.chart().functional())
}
