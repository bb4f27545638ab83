use minilp::{ComparisonOp, OptimizationDirection, Problem};

use super::Chart;
use crate::error::{GeomError, Result};
use crate::projective::{Matrix, Vector};

/// Convex hull of a finite point cloud, queried by linear programming.
#[derive(Clone, Debug)]
pub struct OrbitHull {
    /// Chart coordinates of the hull generators.
    points: Vec<Vec<f64>>,
    center: Vector,
    chart: Chart,
    depth: usize,
}

impl OrbitHull {
    pub(crate) fn build(points: Vec<Vector>, depth: usize, chart: Option<Vector>) -> Result<(Self, Chart)> {
        let n = points.first().map(|p| p.len()).ok_or(GeomError::Empty("orbit hull points"))?;
        if points.len() < n {
            return Err(GeomError::InvalidDomain("orbit hull needs at least dim V points".into()));
        }
        let functional = chart.unwrap_or_else(|| {
            let mut m = Vector::zeros(n);
            for p in &points {
                m += p.normalize();
            }
            m
        });
        let lifted: Vec<Vector> = points
            .iter()
            .map(|p| {
                let phi = functional.dot(p);
                if phi.abs() < 1e-12 {
                    Err(GeomError::InvalidDomain("hull point on the chart's hyperplane at infinity".into()))
                } else {
                    Ok(p / phi)
                }
            })
            .collect::<Result<_>>()?;
        let center = lifted.iter().fold(Vector::zeros(n), |a, p| a + p) / lifted.len() as f64;
        let chart = Chart::orthonormal(functional, &center)?;
        let coords = lifted.iter().map(|p| chart_coords(&chart, p)).collect();
        let hull = Self { points: coords, center, chart: chart.clone(), depth };
        // The centroid must be interior, i.e. the cloud spans the chart.
        if hull.signed_margin(&hull.center)? <= 0.0 {
            return Err(GeomError::InvalidDomain("orbit hull has empty interior".into()));
        }
        Ok((hull, chart))
    }

    pub fn center(&self) -> &Vector {
        &self.center
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest `s ≥ 0` with `p + s·u` in the hull (chart coordinates), or −1
    /// when `p` itself is outside.
    fn max_step(&self, p: &[f64], u: &[f64]) -> Result<f64> {
        let m = p.len();
        let mut lp = Problem::new(OptimizationDirection::Maximize);
        let lambdas: Vec<_> = self.points.iter().map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
        let s = lp.add_var(1.0, (0.0, f64::INFINITY));
        for k in 0..m {
            let mut expr: Vec<(minilp::Variable, f64)> =
                lambdas.iter().zip(&self.points).map(|(&l, q)| (l, q[k])).collect();
            expr.push((s, -u[k]));
            lp.add_constraint(expr, ComparisonOp::Eq, p[k]);
        }
        lp.add_constraint(lambdas.iter().map(|&l| (l, 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, 1.0);
        match lp.solve() {
            Ok(sol) => Ok(sol.objective()),
            Err(minilp::Error::Infeasible) => Ok(-1.0),
            Err(e) => Err(GeomError::LinearProgram(e.to_string())),
        }
    }

    /// Chart distance from `x` to the boundary along the ray from the centroid,
    /// negative outside.
    fn signed_margin(&self, x: &Vector) -> Result<f64> {
        let c = chart_coords(&self.chart, &self.center);
        let p = chart_coords(&self.chart, x);
        let d: Vec<f64> = p.iter().zip(&c).map(|(a, b)| a - b).collect();
        let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-15 {
            // Centroid: distance to the boundary along any frame direction.
            let mut e = vec![0.0; p.len()];
            e[0] = 1.0;
            let fwd = self.max_step(&p, &e)?;
            e[0] = -1.0;
            let bwd = self.max_step(&p, &e)?;
            return Ok(fwd.min(bwd));
        }
        // Largest s with c + s·d in the hull; x is inside iff s > 1.
        let s = self.max_step(&c, &d)?;
        Ok((s - 1.0) * norm)
    }

    pub(crate) fn margin(&self, x: &Vector) -> f64 {
        self.signed_margin(x).unwrap_or(f64::NEG_INFINITY)
    }

    pub(crate) fn exit_param(&self, x: &Vector, u: &Vector) -> Result<f64> {
        let p = chart_coords(&self.chart, x);
        let du = chart_dir(&self.chart, u);
        let s = self.max_step(&p, &du)?;
        if s < 0.0 {
            return Err(GeomError::NotInDomain { near_boundary: false });
        }
        Ok(s)
    }
}

fn chart_coords(chart: &Chart, x: &Vector) -> Vec<f64> {
    (&chart.dual * (chart.lift(x).expect("lifted point") - &chart.origin)).iter().copied().collect()
}

fn chart_dir(chart: &Chart, u: &Vector) -> Vec<f64> {
    let m: &Matrix = &chart.dual;
    (m * chart.tangent(u)).iter().copied().collect()
}
