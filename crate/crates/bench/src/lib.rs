//! Shared inputs for the criterion benches in `benches/`.

use hilbertflow::{Fixture, ProjectivePoint, Vector};

/// Deterministic interior points and boundary points of a fixture's domain.
pub struct Points {
    pub interior: Vec<ProjectivePoint>,
    pub boundary: Vec<ProjectivePoint>,
}

fn direction(dim: usize, k: usize) -> Vector {
    // Low-discrepancy directions; avoids pulling a RNG into the bench crate.
    Vector::from_fn(dim, |i, _| ((k * (2 * i + 3)) as f64 * 0.618_033_988_7).fract() - 0.5)
}

pub fn points(f: &Fixture, n: usize) -> Points {
    let d = &f.domain;
    let o = &f.basepoint;
    let mut interior = Vec::with_capacity(n);
    let mut boundary = Vec::with_capacity(n);
    for k in 1..=n {
        let v = direction(d.dim(), k);
        interior.push(d.point_at_distance(o, &v, 0.25 + (k % 7) as f64 * 0.25).expect("interior point"));
        boundary.push(d.exit_point(o, &v).expect("boundary point"));
    }
    Points { interior, boundary }
}

pub fn fixture(name: &str) -> Fixture {
    Fixture::load(name).expect("builtin fixture")
}
