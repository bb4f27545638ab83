//! Hilbert geometry, geodesic flow and Patterson–Sullivan tooling for
//! discrete groups of projective transformations preserving a properly
//! convex open set.

pub mod density;
pub mod domain;
pub mod error;
pub mod flow;
pub mod group;
pub mod projective;

pub use density::{build_density, reweight, AtomicDensity};
pub use domain::{BoundaryPoint, ConvexDomain, DomainKind, Membership, ShadowSpec, ShadowVariant, SplDistance};
pub use error::{GeomError, Result};
pub use flow::{
    busemann, cross_ratio_B, geodesic_flow, gromov_product, hopf, hopf_coords, period_check, stable_distance, HopfCoord,
    UnitTangent,
};
pub use group::{
    classify_element, conjugacy_classes, count_table, critical_exponent, dirichlet_reduce, closing_search, enumerate_ball, orbit,
    poincare_series, ClassKind, ConjClass, ConjStrategy, Fixture, GroupElement, GroupPresentation, OrbitBall, WordBall,
};
pub use projective::{
    apply, classify_map, collinear_param, cross_ratio, translation_length, Matrix, ProjectiveMap, ProjectivePoint,
    SpectralClass, Vector,
};
