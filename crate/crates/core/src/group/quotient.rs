use super::{GroupElement, OrbitBall};
use crate::domain::ConvexDomain;
use crate::error::{GeomError, Result};
use crate::flow::{geodesic_flow, UnitTangent};
use crate::projective::{ProjectiveMap, ProjectivePoint};

/// Upper bound on reduction steps for one point.
const MAX_REDUCTION_STEPS: usize = 10_000;

/// Iterative reduction into the Dirichlet domain
/// `D = {x : d(o, x) ≤ d(γo, x) for all γ}` using a small set of moves.
///
/// A point outside `D` violates a face inequality, so when the moves contain
/// the face pairings of `D` greedy descent ends in `D`.
#[derive(Clone, Debug)]
pub struct Reducer {
    pub basepoint: ProjectivePoint,
    pub moves: Vec<GroupElement>,
}

impl Reducer {
    /// Moves are the ball elements with `0 < d(o, γo) ≤ radius`.
    pub fn new(ball: &OrbitBall, radius: f64) -> Result<Self> {
        let moves: Vec<GroupElement> = ball
            .elements
            .iter()
            .filter(|e| !e.element.is_empty() && e.distance <= radius)
            .map(|e| e.element.clone())
            .collect();
        if moves.is_empty() {
            return Err(GeomError::Empty("reduction moves"));
        }
        Ok(Self { basepoint: ball.basepoint.clone(), moves })
    }

    /// Radius `2 · max d(o, s o)` over the generators, enough for the face
    /// pairings of the builtin fixtures.
    pub fn from_ball(ball: &OrbitBall) -> Result<Self> {
        let step = ball.elements[ball.layer_start[1]..ball.layer_start[2.min(ball.depth + 1)]]
            .iter()
            .map(|e| e.distance)
            .fold(0.0, f64::max);
        Self::new(ball, 2.0 * step + 1e-9)
    }

    /// `(x', γ)` with `x = γ x'` and `x'` in the Dirichlet domain.
    pub fn reduce_point(&self, domain: &ConvexDomain, x: &ProjectivePoint) -> Result<(ProjectivePoint, ProjectiveMap)> {
        self.reduce_counted(domain, x).map(|(x, g, _)| (x, g))
    }

    fn reduce_counted(
        &self,
        domain: &ConvexDomain,
        x: &ProjectivePoint,
    ) -> Result<(ProjectivePoint, ProjectiveMap, usize)> {
        let o = &self.basepoint;
        let mut x = x.clone();
        let mut acc = ProjectiveMap::identity(domain.dim());
        let mut d0 = domain.hilbert_distance(o, &x)?;
        for steps in 0..MAX_REDUCTION_STEPS {
            let mut best: Option<(f64, &GroupElement)> = None;
            for m in &self.moves {
                let d = domain.orbit_point_distance(o, &m.map, &x)?;
                if d < best.map_or(f64::INFINITY, |b| b.0) {
                    best = Some((d, m));
                }
            }
            match best {
                Some((d, m)) if d < d0 - 1e-12 => {
                    x = m.map.inverse().apply(&x);
                    acc = acc.compose(&m.map);
                    d0 = domain.hilbert_distance(o, &x)?;
                }
                _ => return Ok((x, acc, steps)),
            }
        }
        Err(GeomError::Precondition("Dirichlet reduction did not terminate".into()))
    }

    pub fn reduce_tangent(&self, domain: &ConvexDomain, v: &UnitTangent) -> Result<UnitTangent> {
        let (_, g, steps) = self.reduce_counted(domain, &v.foot)?;
        if steps == 0 {
            return Ok(v.clone());
        }
        Ok(v.transform(&g.inverse()))
    }

    /// True when `x` already lies in the Dirichlet domain.
    pub fn in_domain(&self, domain: &ConvexDomain, x: &ProjectivePoint) -> Result<bool> {
        let d0 = domain.hilbert_distance(&self.basepoint, x)?;
        for m in &self.moves {
            if domain.orbit_point_distance(&self.basepoint, &m.map, x)? < d0 - 1e-12 {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `φ_t v` reduced, flowing in steps of at most `step` and reducing after
    /// each so that no intermediate point drifts far out.
    pub fn flow_reduced(&self, domain: &ConvexDomain, v: &UnitTangent, t: f64, step: f64) -> Result<UnitTangent> {
        let n = (t.abs() / step).ceil().max(1.0) as usize;
        let h = t / n as f64;
        let mut w = v.clone();
        for _ in 0..n {
            w = self.reduce_tangent(domain, &geodesic_flow(domain, &w, h)?)?;
        }
        Ok(w)
    }

    /// `d_M(x, y) = min_γ d(x, γy)` over the identity and the moves, for
    /// reduced `x, y`.
    pub fn quotient_distance(&self, domain: &ConvexDomain, x: &ProjectivePoint, y: &ProjectivePoint) -> Result<f64> {
        let mut best = domain.hilbert_distance(x, y)?;
        for m in &self.moves {
            best = best.min(domain.hilbert_distance(x, &m.map.apply(y))?);
        }
        Ok(best)
    }
}
