//! Persistent homology of offset filtrations of disjoint convex polygons.
//!
//! The exact pipeline builds the Voronoi diagram of the polygons, reads the
//! restricted nerve filtration off it and reduces it to a barcode. The full
//! nerve and a grid-sampled alpha filtration serve as reference pipelines,
//! and [`oracle`] rasterizes offsets for ground truth in tests.

pub mod geom;
pub mod nerve;
pub mod oracle;
pub mod persistence;
pub mod sampling;
pub mod voronoi;

pub use geom::{validate_polygon, ConvexPolygon, Feature, FeatureKind, GeomError, Point, SiteSet};
pub use nerve::{cech_triple_value, restricted_nerve, unrestricted_nerve, FilteredComplex, Simplex};
pub use persistence::{bottleneck_distance, compute_barcode, Barcode, Interval, PersistenceError};
pub use sampling::{alpha_filtration, delaunay, grid_sample, PointSample, SamplingError, Triangulation};
pub use voronoi::{build_voronoi, VoronoiDiagram, VoronoiError};
