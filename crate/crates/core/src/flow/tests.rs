use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn pt(c: &[f64]) -> ProjectivePoint {
    ProjectivePoint::from_slice(c).unwrap()
}

fn circle(theta: f64) -> ProjectivePoint {
    pt(&[theta.cos(), theta.sin(), 1.0])
}

fn boost_x(s: f64) -> ProjectiveMap {
    ProjectiveMap::from_rows(&[
        vec![s.cosh(), 0.0, s.sinh()],
        vec![0.0, 1.0, 0.0],
        vec![s.sinh(), 0.0, s.cosh()],
    ])
    .unwrap()
}

fn rotation(a: f64) -> ProjectiveMap {
    ProjectiveMap::from_rows(&[vec![a.cos(), -a.sin(), 0.0], vec![a.sin(), a.cos(), 0.0], vec![0.0, 0.0, 1.0]])
        .unwrap()
}

fn random_disk_point(rng: &mut ChaCha8Rng, r: f64) -> ProjectivePoint {
    let rho = r * rng.random::<f64>().sqrt();
    let th = rng.random::<f64>() * std::f64::consts::TAU;
    pt(&[rho * th.cos(), rho * th.sin(), 1.0])
}

/// Minkowski pairing `x·y − z w` on the hyperboloid model.
fn mink(a: &[f64], b: &[f64]) -> f64 {
    a[0] * b[0] + a[1] * b[1] - a[2] * b[2]
}

/// Busemann function in the hyperboloid model for points with `⟨p, p⟩ = −1`.
fn hyperbolic_busemann(xi: &ProjectivePoint, x: &ProjectivePoint, y: &ProjectivePoint) -> f64 {
    let norm = |p: &ProjectivePoint| {
        let c: Vec<f64> = p.coords().iter().copied().collect();
        let n = (-mink(&c, &c)).sqrt() * c[2].signum();
        c.iter().map(|v| v / n).collect::<Vec<f64>>()
    };
    let xs: Vec<f64> = xi.coords().iter().copied().collect();
    (mink(&norm(x), &xs) / mink(&norm(y), &xs)).ln()
}

/// Hilbert distance in the standard simplex, `½ log max_{ij} x_i y_j / (x_j y_i)`.
fn simplex_distance(x: &[f64], y: &[f64]) -> f64 {
    let mut best = f64::MIN;
    for i in 0..x.len() {
        for j in 0..x.len() {
            best = best.max((x[i] / y[i]).ln() - (x[j] / y[j]).ln());
        }
    }
    0.5 * best
}

#[test]
fn busemann_matches_hyperboloid_formula() {
    let disk = ConvexDomain::disk();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..300 {
        let x = random_disk_point(&mut rng, 0.95);
        let y = random_disk_point(&mut rng, 0.95);
        let xi = circle(rng.random::<f64>() * std::f64::consts::TAU);
        let got = busemann_detailed(&disk, &xi, &x, &y).unwrap();
        assert!(!got.ambiguous);
        assert_abs_diff_eq!(got.value, hyperbolic_busemann(&xi, &x, &y), epsilon = 1e-9);
    }
}

#[test]
fn busemann_on_a_triangle_edge_matches_limit() {
    // ξ with ξ_k = 0: the limit of d(x, z) − d(y, z) is
    // ½ log[(x_k / y_k) · max_j(ξ_j / x_j) / max_j(ξ_j / y_j)].
    let tri = ConvexDomain::standard_simplex(2);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let x: Vec<f64> = (0..3).map(|_| 0.05 + rng.random::<f64>()).collect();
        let y: Vec<f64> = (0..3).map(|_| 0.05 + rng.random::<f64>()).collect();
        let k = rng.random_range(0..3);
        let mut xi: Vec<f64> = (0..3).map(|_| 0.05 + rng.random::<f64>()).collect();
        xi[k] = 0.0;
        let mx = (0..3).filter(|&j| j != k).map(|j| xi[j] / x[j]).fold(f64::MIN, f64::max);
        let my = (0..3).filter(|&j| j != k).map(|j| xi[j] / y[j]).fold(f64::MIN, f64::max);
        let expect = 0.5 * ((x[k] / y[k]) * mx / my).ln();
        let got = busemann_detailed(&tri, &pt(&xi), &pt(&x), &pt(&y)).unwrap();
        assert!(!got.ambiguous);
        assert_abs_diff_eq!(got.value, expect, epsilon = 1e-10);
    }
}

#[test]
fn busemann_at_a_vertex_is_the_ray_limit() {
    let tri = ConvexDomain::standard_simplex(2);
    let xi = [1.0, 0.0, 0.0];
    let x = [0.2, 0.5, 0.3];
    let y = [0.3, 0.3, 0.4];
    let got = busemann_detailed(&tri, &pt(&xi), &pt(&x), &pt(&y)).unwrap();
    assert!(got.ambiguous);
    let eps = 1e-7;
    let z: Vec<f64> = (0..3).map(|i| (1.0 - eps) * xi[i] + eps * y[i]).collect();
    let lim = simplex_distance(&x, &z) - simplex_distance(&y, &z);
    assert_abs_diff_eq!(got.value, lim, epsilon = 1e-5);
}

#[test]
fn busemann_on_polygon_is_the_ray_limit() {
    let pent = ConvexDomain::polygon(&[[1.0, 0.0], [0.3, 0.9], [-0.8, 0.6], [-0.8, -0.6], [0.3, -0.9]]).unwrap();
    let x = pent.point(&[0.1, 0.2]).unwrap();
    let y = pent.point(&[-0.3, -0.1]).unwrap();
    for xi in [pent.point(&[1.0, 0.0]).unwrap(), pent.point(&[-0.8, 0.1]).unwrap()] {
        let got = busemann(&pent, &xi, &x, &y).unwrap();
        let yh = pent.lift(&y).unwrap();
        let xih = pent.lift(&xi).unwrap();
        let z = ProjectivePoint::new(&xih * (1.0 - 1e-8) + &yh * 1e-8).unwrap();
        let lim = pent.hilbert_distance(&x, &z).unwrap() - pent.hilbert_distance(&y, &z).unwrap();
        assert_abs_diff_eq!(got, lim, epsilon = 1e-6);
    }
}

#[test]
fn sampled_busemann_on_orbit_hull_matches_polygon() {
    let sq = [[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]];
    let poly = ConvexDomain::polygon(&sq).unwrap();
    let pts = sq.iter().map(|p| Vector::from_vec(vec![p[0], p[1], 1.0])).collect();
    let hull = ConvexDomain::orbit_hull(pts, 0, Some(Vector::from_vec(vec![0.0, 0.0, 1.0]))).unwrap();
    let x = poly.point(&[0.2, 0.3]).unwrap();
    let y = poly.point(&[-0.4, 0.1]).unwrap();
    let xi = poly.point(&[1.0, 0.25]).unwrap();
    let exact = busemann(&poly, &xi, &x, &y).unwrap();
    let sampled = busemann(&hull, &xi, &x, &y).unwrap();
    assert_abs_diff_eq!(exact, sampled, epsilon = 1e-6);
}

#[test]
fn busemann_rejects_interior_xi() {
    let disk = ConvexDomain::disk();
    let o = disk.interior_point();
    let p = disk.point(&[0.5, 0.0]).unwrap();
    assert!(busemann(&disk, &p, &o, &p).is_err());
}

#[test]
fn gromov_product_examples() {
    let disk = ConvexDomain::disk();
    let o = disk.interior_point();
    // o on the chord: zero.
    assert_abs_diff_eq!(gromov_product(&disk, &circle(0.3), &circle(0.3 + std::f64::consts::PI), &o).unwrap(), 0.0, epsilon = 1e-12);
    // Hyperbolic plane: ⟨ξ, η⟩_o = −log sin(θ/2).
    for th in [0.1, 0.7, 1.5, 2.9] {
        let g = gromov_product(&disk, &circle(0.0), &circle(th), &o).unwrap();
        assert_abs_diff_eq!(g, -(th / 2.0).sin().ln(), epsilon = 1e-10);
    }
    assert!(matches!(gromov_product(&disk, &circle(1.0), &circle(1.0), &o), Err(GeomError::NotGeodesicPair)));
    // Two points of one edge of a triangle are not a geodesic pair.
    let tri = ConvexDomain::standard_simplex(2);
    let r = gromov_product(&tri, &pt(&[0.0, 0.3, 0.7]), &pt(&[0.0, 0.6, 0.4]), &tri.interior_point());
    assert!(matches!(r, Err(GeomError::NotGeodesicPair)));
}

#[test]
fn gromov_product_is_independent_of_chord_point() {
    let pent = ConvexDomain::polygon(&[[1.0, 0.0], [0.3, 0.9], [-0.8, 0.6], [-0.8, -0.6], [0.3, -0.9]]).unwrap();
    let xi = pent.point(&[0.65, 0.45]).unwrap();
    let eta = pent.point(&[-0.8, -0.2]).unwrap();
    let o = pent.interior_point();
    let a = gromov_product(&pent, &xi, &eta, &o).unwrap();
    let xh = pent.lift(&xi).unwrap();
    let eh = pent.lift(&eta).unwrap();
    for t in [0.2, 0.4, 0.8] {
        let y = ProjectivePoint::new(&xh * (1.0 - t) + &eh * t).unwrap();
        let b = gromov_product_via(&pent, &xi, &eta, &o, &y).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-10);
    }
}

#[test]
fn flow_moves_at_unit_speed() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let domains = [
        ConvexDomain::disk(),
        ConvexDomain::standard_simplex(2),
        ConvexDomain::polygon(&[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]).unwrap(),
    ];
    for dom in &domains {
        let o = dom.interior_point();
        for _ in 0..50 {
            let th = rng.random::<f64>() * std::f64::consts::TAU;
            let dir = dom.chart().tangent(&(dom.chart().point(&[th.cos(), th.sin()]).unwrap().coords() - dom.lift(&o).unwrap()));
            let v = UnitTangent::from_direction(dom, &o, &dir).unwrap();
            let t = rng.random::<f64>() * 12.0 - 6.0;
            let w = geodesic_flow(dom, &v, t).unwrap();
            assert_abs_diff_eq!(dom.hilbert_distance(&o, &w.foot).unwrap(), t.abs(), epsilon = 1e-8);
            // φ_s ∘ φ_t = φ_{s+t}
            let s = rng.random::<f64>() * 4.0 - 2.0;
            let a = geodesic_flow(dom, &w, s).unwrap();
            let b = geodesic_flow(dom, &v, s + t).unwrap();
            assert!(a.foot.approx_eq(&b.foot, 1e-9));
            // forward flow approaches ξ⁺
            let busy = busemann(dom, &v.xi_plus, &o, &w.foot).unwrap();
            assert_abs_diff_eq!(busy, t, epsilon = 1e-8);
        }
    }
}

#[test]
fn flip_reverses_the_flow() {
    let disk = ConvexDomain::disk();
    let v = UnitTangent::from_points(&disk, &disk.point(&[0.1, 0.2]).unwrap(), &disk.point(&[0.5, -0.3]).unwrap())
        .unwrap();
    let a = geodesic_flow(&disk, &v.flip(), 1.3).unwrap();
    let b = geodesic_flow(&disk, &v, -1.3).unwrap();
    assert!(a.foot.approx_eq(&b.foot, 1e-12));
}

#[test]
fn hopf_round_trip_and_flip() {
    let domains = [
        ConvexDomain::disk(),
        ConvexDomain::polygon(&[[1.0, 0.0], [0.3, 0.9], [-0.8, 0.6], [-0.8, -0.6], [0.3, -0.9]]).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for dom in &domains {
        let o = dom.interior_point();
        for _ in 0..40 {
            let x = dom.point(&[rng.random::<f64>() * 0.4 - 0.2, rng.random::<f64>() * 0.4 - 0.2]).unwrap();
            let y = dom.point(&[rng.random::<f64>() * 0.4 - 0.2, rng.random::<f64>() * 0.4 - 0.2]).unwrap();
            let Ok(v) = UnitTangent::from_points(dom, &x, &y) else { continue };
            let h = hopf_coords(dom, &o, &v).unwrap();
            let back = hopf(dom, &o, &h.xi, &h.eta, h.t).unwrap();
            assert!(back.foot.approx_eq(&v.foot, 1e-9));
            // −Hopf(ξ, η, t) = Hopf(η, ξ, 2⟨ξ, η⟩_o − t)
            let t = rng.random::<f64>() * 4.0 - 2.0;
            let lhs = hopf(dom, &o, &h.xi, &h.eta, t).unwrap().flip();
            let g = gromov_product(dom, &h.xi, &h.eta, &o).unwrap();
            let rhs = hopf(dom, &o, &h.eta, &h.xi, 2.0 * g - t).unwrap();
            assert!(lhs.foot.approx_eq(&rhs.foot, 1e-9));
            assert!(lhs.xi_plus.approx_eq(&rhs.xi_plus, 1e-12));
        }
    }
}

#[test]
fn hopf_is_equivariant() {
    let disk = ConvexDomain::disk();
    let o = disk.interior_point();
    let g = boost_x(0.8).compose(&rotation(0.4));
    let (xi, eta) = (circle(0.2), circle(2.5));
    let t = 0.7;
    let v = hopf(&disk, &o, &xi, &eta, t).unwrap();
    let gv = v.transform(&g);
    let shift = busemann(&disk, &g.apply(&eta), &o, &g.apply(&o)).unwrap();
    let w = hopf(&disk, &o, &g.apply(&xi), &g.apply(&eta), t + shift).unwrap();
    assert!(gv.foot.approx_eq(&w.foot, 1e-9));
}

#[test]
fn cross_ratio_matches_circle_formula() {
    // On the circle, B = 2 log(|ξ−η||ξ'−η'| / (|ξ−η'||ξ'−η|)).
    let disk = ConvexDomain::disk();
    let chord = |a: f64, b: f64| 2.0 * ((a - b) / 2.0).sin().abs();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let a: Vec<f64> = (0..4).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect();
        let got = cross_ratio_B(&disk, &circle(a[0]), &circle(a[1]), &circle(a[2]), &circle(a[3])).unwrap();
        let expect = 2.0 * (chord(a[0], a[2]) * chord(a[1], a[3]) / (chord(a[0], a[3]) * chord(a[1], a[2]))).ln();
        assert_abs_diff_eq!(got, expect, epsilon = 1e-8);
    }
}

#[test]
fn cross_ratio_is_an_interior_limit() {
    // B = lim d(x, y) + d(x', y') − d(x, y') − d(x', y) as x→ξ, x'→ξ', y→η, y'→η'.
    let pent = ConvexDomain::polygon(&[[1.0, 0.0], [0.3, 0.9], [-0.8, 0.6], [-0.8, -0.6], [0.3, -0.9]]).unwrap();
    let bnd = [[0.65, 0.45], [-0.25, 0.75], [-0.8, -0.1], [0.65, -0.45]];
    let pts: Vec<ProjectivePoint> = bnd.iter().map(|c| pent.point(c).unwrap()).collect();
    let got = cross_ratio_B(&pent, &pts[0], &pts[1], &pts[2], &pts[3]).unwrap();
    let eps = 1e-7;
    let near: Vec<ProjectivePoint> =
        bnd.iter().map(|c| pent.point(&[c[0] * (1.0 - eps), c[1] * (1.0 - eps)]).unwrap()).collect();
    let d = |i: usize, j: usize| pent.hilbert_distance(&near[i], &near[j]).unwrap();
    let lim = d(0, 2) + d(1, 3) - d(0, 3) - d(1, 2);
    assert_abs_diff_eq!(got, lim, epsilon = 1e-5);
}

#[test]
fn period_of_a_boost() {
    let disk = ConvexDomain::disk();
    let g = boost_x(1.1);
    for th in [0.5, 1.7, 2.4, 4.0] {
        let b = period_check(&disk, &g, &circle(th)).unwrap();
        assert_abs_diff_eq!(b, 2.0 * 1.1, epsilon = 1e-8);
    }
}

#[test]
fn stable_distance_decays_on_the_disk() {
    let disk = ConvexDomain::disk();
    let o = disk.interior_point();
    let xi = circle(0.0);
    let v = hopf(&disk, &o, &circle(2.0), &xi, 0.0).unwrap();
    let w = hopf(&disk, &o, &circle(3.5), &xi, 0.0).unwrap();
    let grid: Vec<f64> = (0..=10).map(|k| k as f64).collect();
    let d = stable_distance(&disk, &v, &w, &grid).unwrap();
    for pair in d.windows(2).skip(2) {
        // Horocyclic distance decays like e^{−t}.
        assert!(pair[1] < pair[0] * 0.45, "{d:?}");
    }
    let off = hopf(&disk, &o, &circle(3.5), &xi, 0.3).unwrap();
    assert!(stable_distance(&disk, &v, &off, &grid).is_err());
}

#[test]
fn flow_on_disk_diameter() {
    let disk = ConvexDomain::disk();
    let o = disk.interior_point();
    let v = UnitTangent::from_points(&disk, &o, &disk.point(&[0.3, 0.0]).unwrap()).unwrap();
    let w = geodesic_flow(&disk, &v, 0.5 * 3f64.ln()).unwrap();
    let c = disk.chart_coords(&w.foot).unwrap();
    assert_abs_diff_eq!(c[0], 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(c[1], 0.0, epsilon = 1e-12);
    let back = geodesic_flow(&disk, &w, -0.5 * 3f64.ln()).unwrap();
    assert!(back.foot.approx_eq(&o, 1e-10));
    assert!(geodesic_flow(&disk, &v, 0.0).unwrap().foot.approx_eq(&o, 0.0));
}

#[test]
fn busemann_along_the_ray_is_the_distance() {
    let pent = ConvexDomain::polygon(&[[1.0, 0.0], [0.3, 0.9], [-0.8, 0.6], [-0.8, -0.6], [0.3, -0.9]]).unwrap();
    let disk = ConvexDomain::disk();
    for dom in [&pent, &disk] {
        let x = dom.point(&[-0.2, 0.1]).unwrap();
        let y = dom.point(&[0.2, -0.05]).unwrap();
        let (_, xi) = dom.ray_boundary(&x, &y).unwrap();
        assert_abs_diff_eq!(busemann(dom, &xi, &x, &y).unwrap(), dom.hilbert_distance(&x, &y).unwrap(), epsilon = 1e-10);
        assert_eq!(busemann(dom, &xi, &x, &x).unwrap(), 0.0);
    }
}

#[test]
fn gromov_identities_on_random_pairs() {
    let pent = ConvexDomain::polygon(&[[1.0, 0.0], [0.3, 0.9], [-0.8, 0.6], [-0.8, -0.6], [0.3, -0.9]]).unwrap();
    let disk = ConvexDomain::disk();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for dom in [&pent, &disk] {
        let o = dom.interior_point();
        for _ in 0..30 {
            let x = dom.point(&[rng.random::<f64>() * 0.6 - 0.3, rng.random::<f64>() * 0.6 - 0.3]).unwrap();
            let y = dom.point(&[rng.random::<f64>() * 0.6 - 0.3, rng.random::<f64>() * 0.6 - 0.3]).unwrap();
            let th = rng.random::<f64>() * std::f64::consts::TAU;
            let dir = Vector::from_vec(vec![th.cos(), th.sin(), 0.0]);
            let xi = dom.exit_point(&o, &dir).unwrap();
            let eta = dom.exit_point(&o, &(-dir)).unwrap();
            let gx = gromov_product(dom, &xi, &eta, &x).unwrap();
            let gy = gromov_product(dom, &xi, &eta, &y).unwrap();
            let r = 2.0 * gx - 2.0 * gy - busemann(dom, &xi, &x, &y).unwrap() - busemann(dom, &eta, &x, &y).unwrap();
            assert!(r.abs() < 1e-9);
            assert!((gx - gy).abs() <= dom.hilbert_distance(&x, &y).unwrap() + 1e-9);
            assert!(gx >= -1e-12);
        }
    }
}

#[test]
fn cross_ratio_degenerate_and_invariant() {
    let disk = ConvexDomain::disk();
    let (a, b, c) = (circle(0.3), circle(2.0), circle(4.1));
    assert_abs_diff_eq!(cross_ratio_B(&disk, &a, &a, &b, &c).unwrap(), 0.0, epsilon = 1e-10);
    let d = circle(5.5);
    let g = boost_x(0.9).compose(&rotation(1.2));
    let before = cross_ratio_B(&disk, &a, &b, &c, &d).unwrap();
    let after = cross_ratio_B(&disk, &g.apply(&a), &g.apply(&b), &g.apply(&c), &g.apply(&d)).unwrap();
    assert_abs_diff_eq!(before, after, epsilon = 1e-8);
    let swapped = cross_ratio_B(&disk, &b, &a, &d, &c).unwrap();
    assert_abs_diff_eq!(before, swapped, epsilon = 1e-10);
}

#[test]
fn period_is_independent_of_xi_and_inversion() {
    let disk = ConvexDomain::disk();
    let g = boost_x(0.6).compose(&rotation(0.0));
    let h = rotation(0.7);
    let g = h.compose(&g).compose(&h.inverse());
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut vals = Vec::new();
    let spec = g.spectral().unwrap();
    let (xp, xm) = (spec.x_plus.clone().unwrap(), spec.x_minus.clone().unwrap());
    while vals.len() < 20 {
        let xi = circle(rng.random::<f64>() * std::f64::consts::TAU);
        if xi.approx_eq(&xp, 1e-3) || xi.approx_eq(&xm, 1e-3) {
            continue;
        }
        vals.push(period_check(&disk, &g, &xi).unwrap());
        assert_abs_diff_eq!(period_check(&disk, &g.inverse(), &xi).unwrap(), 1.2, epsilon = 1e-8);
    }
    let spread = vals.iter().cloned().fold(f64::MIN, f64::max) - vals.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread < 1e-8);
    assert_abs_diff_eq!(vals[0], 1.2, epsilon = 1e-8);
}

#[test]
fn stable_distance_of_equal_vectors_is_zero() {
    let disk = ConvexDomain::disk();
    let v = hopf(&disk, &disk.interior_point(), &circle(2.0), &circle(0.0), 0.4).unwrap();
    let d = stable_distance(&disk, &v, &v, &[0.0, 1.0, 5.0]).unwrap();
    assert!(d.iter().all(|&x| x == 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn busemann_cocycle_and_equivariance(
        xc in (-0.6f64..0.6, -0.6f64..0.6),
        yc in (-0.6f64..0.6, -0.6f64..0.6),
        zc in (-0.6f64..0.6, -0.6f64..0.6),
        th in 0.0f64..std::f64::consts::TAU,
        s in -1.5f64..1.5,
    ) {
        let disk = ConvexDomain::disk();
        let x = disk.point(&[xc.0, xc.1]).unwrap();
        let y = disk.point(&[yc.0, yc.1]).unwrap();
        let z = disk.point(&[zc.0, zc.1]).unwrap();
        let xi = circle(th);
        let bxy = busemann(&disk, &xi, &x, &y).unwrap();
        let byz = busemann(&disk, &xi, &y, &z).unwrap();
        let bxz = busemann(&disk, &xi, &x, &z).unwrap();
        prop_assert!((bxy + byz - bxz).abs() < 1e-9);
        prop_assert!(bxy.abs() <= disk.hilbert_distance(&x, &y).unwrap() + 1e-9);
        let g = boost_x(s);
        let gb = busemann(&disk, &g.apply(&xi), &g.apply(&x), &g.apply(&y)).unwrap();
        prop_assert!((gb - bxy).abs() < 1e-8);
    }

    #[test]
    fn busemann_cocycle_on_triangle(
        x in prop::array::uniform3(0.05f64..1.0),
        y in prop::array::uniform3(0.05f64..1.0),
        z in prop::array::uniform3(0.05f64..1.0),
        xi in prop::array::uniform3(0.0f64..1.0),
        k in 0usize..3,
    ) {
        let tri = ConvexDomain::standard_simplex(2);
        let mut xi = xi;
        xi[k] = 0.0;
        prop_assume!(xi.iter().sum::<f64>() > 0.05);
        let b = |p: &[f64; 3], q: &[f64; 3]| busemann(&tri, &pt(&xi), &pt(p), &pt(q)).unwrap();
        prop_assert!((b(&x, &y) + b(&y, &z) - b(&x, &z)).abs() < 1e-9);
        prop_assert!(b(&x, &y).abs() <= simplex_distance(&x, &y) + 1e-9);
    }
}
