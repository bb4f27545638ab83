use std::collections::HashMap;
use std::path::PathBuf;

use anyhow::Result;
use hilbertflow::flow::{busemann, busemann_detailed, gromov_product, hopf, period_check};
use hilbertflow::group::{check_automorphisms, enumerate_ball, orbit, Fixture};
use hilbertflow::{build_density, reweight, ConvexDomain, DomainKind, ProjectivePoint, Vector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::{load_fixture, Outputs, RunConfig};

/// One named identity with its worst residual over the tested samples.
#[derive(Clone, Debug, Serialize)]
pub struct Invariant {
    pub name: String,
    /// `None` when no sample could be evaluated.
    pub residual: Option<f64>,
    pub threshold: f64,
    /// False when every sample failed a precondition, e.g. no element of the
    /// fixture is biproximal; such invariants pass vacuously.
    pub applicable: bool,
    pub pass: bool,
    pub samples: usize,
    /// Samples rejected by a precondition (e.g. a non-geodesic pair).
    pub skipped: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub fixture: String,
    pub pass: bool,
    pub invariants: Vec<Invariant>,
}

const PAIRS: usize = 100;

struct Suite<'a> {
    f: &'a Fixture,
    rng: ChaCha8Rng,
    out: Vec<Invariant>,
}

impl Suite<'_> {
    fn dir(&mut self) -> Vector {
        Vector::from_iterator(self.f.domain.dim(), (0..self.f.domain.dim()).map(|_| self.rng.random_range(-1.0..1.0)))
    }

    fn point(&mut self) -> Result<ProjectivePoint> {
        let (d, r) = (self.dir(), self.rng.random_range(0.0..2.0));
        Ok(self.f.domain.point_at_distance(&self.f.basepoint, &d, r)?)
    }

    fn boundary(&mut self) -> Result<ProjectivePoint> {
        let d = self.dir();
        Ok(self.f.domain.exit_point(&self.f.basepoint, &d)?)
    }

    /// Records the max of `n` residuals; samples returning `Err` are skipped.
    fn check(&mut self, name: &str, threshold: f64, n: usize, mut residual: impl FnMut(&mut Self) -> Result<f64>) {
        let (mut worst, mut ok, mut skipped) = (0.0f64, 0, 0);
        for _ in 0..n {
            match residual(self) {
                Ok(r) => {
                    worst = worst.max(r);
                    ok += 1;
                }
                Err(_) => skipped += 1,
            }
        }
        let residual = (ok > 0).then_some(worst);
        self.out.push(Invariant {
            name: name.into(),
            residual,
            threshold,
            applicable: ok > 0,
            pass: residual.is_none_or(|r| r <= threshold),
            samples: ok,
            skipped,
        });
    }

    fn domain(&self) -> &ConvexDomain {
        &self.f.domain
    }
}

/// Runs the invariant suites on the fixture and writes `verify.json`.
/// Failing invariants are reported, not raised; fixture errors are raised.
pub fn cmd_verify(config: &RunConfig) -> Result<(Vec<PathBuf>, VerifyReport)> {
    let f = load_fixture(config)?;
    let mut s = Suite { f: &f, rng: config.rng(), out: Vec::new() };

    let auto = check_automorphisms(&f.presentation, &f.domain);
    s.out.push(Invariant {
        name: "automorphisms".into(),
        residual: Some(if auto.is_ok() { 0.0 } else { 1.0 }),
        threshold: 0.0,
        applicable: true,
        pass: auto.is_ok(),
        samples: f.presentation.generators().len(),
        skipped: 0,
    });

    s.check("distance_symmetry", 1e-9, PAIRS, |s| {
        let (x, y) = (s.point()?, s.point()?);
        Ok((s.domain().hilbert_distance(&x, &y)? - s.domain().hilbert_distance(&y, &x)?).abs())
    });
    s.check("triangle_inequality", 1e-9, PAIRS, |s| {
        let (x, y, z) = (s.point()?, s.point()?, s.point()?);
        let d = |a, b| s.domain().hilbert_distance(a, b);
        Ok((d(&x, &z)? - d(&x, &y)? - d(&y, &z)?).max(0.0))
    });
    s.check("busemann_cocycle", 1e-6, PAIRS, |s| {
        let (xi, x, y, z) = (s.boundary()?, s.point()?, s.point()?, s.point()?);
        let b = |p, q| busemann(s.domain(), &xi, p, q);
        Ok((b(&x, &y)? + b(&y, &z)? - b(&x, &z)?).abs())
    });
    s.check("busemann_on_rays", 1e-8, PAIRS, |s| {
        let (x, dir, t) = (s.point()?, s.dir(), s.rng.random_range(0.1..3.0));
        let xi = s.domain().exit_point(&x, &dir)?;
        let y = s.domain().point_at_distance(&x, &dir, t)?;
        Ok((busemann(s.domain(), &xi, &x, &y)? - s.domain().hilbert_distance(&x, &y)?).abs())
    });
    s.check("gromov_symmetry", 1e-9, PAIRS, |s| {
        let (xi, eta, x) = (s.boundary()?, s.boundary()?, s.point()?);
        Ok((gromov_product(s.domain(), &xi, &eta, &x)? - gromov_product(s.domain(), &eta, &xi, &x)?).abs())
    });
    s.check("gromov_basepoint_change", 1e-6, PAIRS, |s| {
        let (xi, eta, x, y) = (s.boundary()?, s.boundary()?, s.point()?, s.point()?);
        let d = s.domain();
        let lhs = gromov_product(d, &xi, &eta, &y)? - gromov_product(d, &xi, &eta, &x)?;
        let rhs = 0.5 * (busemann(d, &xi, &y, &x)? + busemann(d, &eta, &y, &x)?);
        Ok((lhs - rhs).abs())
    });
    s.check("hopf_flip", 1e-7, PAIRS, |s| {
        let (xi, eta, t) = (s.boundary()?, s.boundary()?, s.rng.random_range(-2.0..2.0));
        let d = s.domain();
        let o = &s.f.basepoint;
        let v = hopf(d, o, &xi, &eta, t)?;
        let w = hopf(d, o, &eta, &xi, 2.0 * gromov_product(d, &xi, &eta, o)? - t)?;
        Ok(d.hilbert_distance(&v.foot, &w.foot)?)
    });

    let words = enumerate_ball(&f.presentation, 3)?;
    let elements: Vec<_> = words.elements.iter().filter(|e| !e.is_empty()).cloned().collect();
    let mut k = 0usize;
    s.check("period_identity", 1e-6, PAIRS, |s| {
        let g = &elements[k % elements.len()].map;
        k += 1;
        let xi = s.boundary()?;
        Ok((period_check(s.domain(), g, &xi)? - 2.0 * g.spectral()?.ell).abs())
    });
    let mut k = 0usize;
    s.check("displacement_at_least_ell", 1e-8, PAIRS, |s| {
        let g = &elements[k % elements.len()].map;
        k += 1;
        let x = s.point()?;
        Ok((g.spectral()?.ell - s.domain().hilbert_distance(&x, &g.apply(&x))?).max(0.0))
    });
    if f.domain.kind() == DomainKind::Simplex {
        // Diagonal maps translate every point of the simplex by the same amount.
        let diagonal: Vec<_> = f
            .presentation
            .generators()
            .iter()
            .filter(|g| {
                let m = g.matrix();
                (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] == 0.0))
            })
            .cloned()
            .collect();
        if !diagonal.is_empty() {
            let mut k = 0usize;
            s.check("constant_displacement", 1e-9, PAIRS, |s| {
                let g = &diagonal[k % diagonal.len()];
                k += 1;
                let x = s.point()?;
                Ok((s.domain().hilbert_distance(&x, &g.apply(&x))? - g.spectral()?.ell).abs())
            });
        }
    }

    let ball = orbit(&f.presentation, &f.domain, &f.basepoint, config.depth_or_default().min(4))?;
    if let Ok(mut nu) = build_density(&ball, 1.0) {
        // At a boundary point with several supporting hyperplanes the Busemann
        // limit depends on the ray, so the change of basepoint is only a
        // cocycle on the smooth atoms.
        let o = f.basepoint.clone();
        let probe = f.domain.point_at_distance(&o, &Vector::from_fn(f.domain.dim(), |i, _| f64::from(i == 0)), 0.5)?;
        nu.atoms.retain(|a| busemann_detailed(&f.domain, &a.direction, &probe, &o).is_ok_and(|b| !b.ambiguous));
        let z: f64 = nu.atoms.iter().map(|a| a.weight).sum();
        nu.atoms.iter_mut().for_each(|a| a.weight /= z);
        if !nu.atoms.is_empty() {
            s.check("density_round_trip", 1e-6, 20, |s| {
                let x = s.point()?;
                let back = reweight(s.domain(), &reweight(s.domain(), &nu, &x)?.density, &o)?.density;
                let back: HashMap<&[u16], f64> = back.atoms.iter().map(|a| (a.word.as_slice(), a.weight)).collect();
                Ok(nu
                    .atoms
                    .iter()
                    .map(|a| back.get(a.word.as_slice()).map_or(a.weight, |b| (a.weight - b).abs()))
                    .fold(0.0, f64::max))
            });
        }
    }

    let report = VerifyReport { fixture: f.name.clone(), pass: s.out.iter().all(|i| i.pass), invariants: s.out };
    let mut out = Outputs::new(config)?;
    out.json("verify.json", &report)?;
    Ok((out.written, report))
}
