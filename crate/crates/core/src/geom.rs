//! Planar primitives: exact orientation predicates, convex polygon sites and
//! the Euclidean distance computations shared by every pipeline.

use std::cmp::Ordering;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

/// Global comparison tolerance for derived (floating point) quantities.
pub const TAU: f64 = 1e-9;

/// Default bound on the number of vertices of a single site.
pub const DEFAULT_VERTEX_CAP: usize = 64;

/// Polygons whose absolute signed area falls below this are rejected.
pub const MIN_AREA: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon has {count} vertices, cap is {cap}")]
    TooManyVertices { count: usize, cap: usize },
    #[error("non-finite coordinate at vertex {0}")]
    NonFinite(usize),
    #[error("polygon is not strictly convex at vertex {0}")]
    NonConvex(usize),
    #[error("polygon boundary intersects itself")]
    SelfIntersecting,
    #[error("polygon area {0:e} is degenerate")]
    DegenerateArea(f64),
    #[error("sites {0} and {1} overlap or touch")]
    OverlappingSites(usize, usize),
    #[error("site ids must be 0..n-1 in order; found {found} at position {position}")]
    BadSiteId { position: usize, found: usize },
    #[error("offset boundaries overlap along a curve")]
    DegenerateContact,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    #[inline]
    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    #[inline]
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    /// Counterclockwise rotation by 90 degrees.
    #[inline]
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    #[inline]
    pub fn unit(self) -> Point {
        let n = self.norm();
        Point::new(self.x / n, self.y / n)
    }

    #[inline]
    pub fn from_angle(theta: f64) -> Point {
        let (s, c) = theta.sin_cos();
        Point::new(c, s)
    }

    #[inline]
    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, o: Point, t: f64) -> Point {
        self + (o - self) * t
    }

    /// Lexicographic order on (x, y).
    pub fn lex_cmp(&self, o: &Point) -> Ordering {
        self.x.total_cmp(&o.x).then(self.y.total_cmp(&o.y))
    }
}

impl Add for Point {
    type Output = Point;
    #[inline]
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    #[inline]
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    #[inline]
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    #[inline]
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point::new(x, y)
    }
}

/// Sign of a predicate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    Clockwise,
    Collinear,
    CounterClockwise,
}

#[inline]
fn coord(p: Point) -> robust::Coord<f64> {
    robust::Coord { x: p.x, y: p.y }
}

/// Exact sign of the determinant `| b-a  c-a |` for the stored doubles.
pub fn orient(a: Point, b: Point, c: Point) -> Orientation {
    let d = robust::orient2d(coord(a), coord(b), coord(c));
    if d > 0.0 {
        Orientation::CounterClockwise
    } else if d < 0.0 {
        Orientation::Clockwise
    } else {
        Orientation::Collinear
    }
}

/// Exact in-circle test: positive when `d` lies strictly inside the circle
/// through the counterclockwise triangle `a, b, c`.
pub fn incircle(a: Point, b: Point, c: Point, d: Point) -> Ordering {
    let v = robust::incircle(coord(a), coord(b), coord(c), coord(d));
    v.partial_cmp(&0.0).unwrap_or(Ordering::Equal)
}

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BBox {
    pub min: Point,
    pub max: Point,
}

impl BBox {
    pub fn of(points: &[Point]) -> BBox {
        let mut min = Point::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        BBox { min, max }
    }

    pub fn union(&self, o: &BBox) -> BBox {
        BBox {
            min: Point::new(self.min.x.min(o.min.x), self.min.y.min(o.min.y)),
            max: Point::new(self.max.x.max(o.max.x), self.max.y.max(o.max.y)),
        }
    }

    pub fn inflate(&self, r: f64) -> BBox {
        BBox {
            min: Point::new(self.min.x - r, self.min.y - r),
            max: Point::new(self.max.x + r, self.max.y + r),
        }
    }

    /// Lower bound on the distance between any point of `self` and any point of `o`.
    pub fn gap(&self, o: &BBox) -> f64 {
        let dx = (o.min.x - self.max.x).max(self.min.x - o.max.x).max(0.0);
        let dy = (o.min.y - self.max.y).max(self.min.y - o.max.y).max(0.0);
        dx.hypot(dy)
    }

    pub fn strictly_disjoint(&self, o: &BBox) -> bool {
        o.min.x > self.max.x || self.min.x > o.max.x || o.min.y > self.max.y || self.min.y > o.max.y
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }
}

/// A strictly convex, counterclockwise, simple polygon.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexPolygon {
    id: usize,
    vertices: Vec<Point>,
    normals: Vec<Point>,
    lengths: Vec<f64>,
    bbox: BBox,
}

impl ConvexPolygon {
    /// Validates `points` with the default vertex cap and site id 0.
    pub fn new(points: &[Point]) -> Result<Self, GeomError> {
        validate_polygon(points, 0, DEFAULT_VERTEX_CAP)
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn with_id(mut self, id: usize) -> Self {
        self.id = id;
        self
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    #[inline]
    pub fn vertex(&self, k: usize) -> Point {
        self.vertices[k % self.vertices.len()]
    }

    /// Edge `k` runs from vertex `k` to vertex `k + 1`.
    #[inline]
    pub fn edge(&self, k: usize) -> (Point, Point) {
        (self.vertex(k), self.vertex(k + 1))
    }

    /// Outward unit normal of edge `k`.
    #[inline]
    pub fn normal(&self, k: usize) -> Point {
        self.normals[k]
    }

    #[inline]
    pub fn edge_len(&self, k: usize) -> f64 {
        self.lengths[k]
    }

    pub fn perimeter(&self) -> f64 {
        self.lengths.iter().sum()
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn centroid(&self) -> Point {
        let m = self.vertices.len() as f64;
        let s = self.vertices.iter().fold(Point::ORIGIN, |acc, &p| acc + p);
        s * (1.0 / m)
    }

    /// Exact closed containment test.
    pub fn contains(&self, p: Point) -> bool {
        (0..self.len()).all(|k| {
            let (a, b) = self.edge(k);
            orient(a, b, p) != Orientation::Clockwise
        })
    }
}

fn signed_area(pts: &[Point]) -> f64 {
    let m = pts.len();
    let mut s = 0.0;
    for k in 0..m {
        s += pts[k].cross(pts[(k + 1) % m]);
    }
    0.5 * s
}

/// Validates a vertex loop as a strictly convex simple polygon, returning it
/// in counterclockwise order (the first vertex is kept in place).
pub fn validate_polygon(points: &[Point], id: usize, cap: usize) -> Result<ConvexPolygon, GeomError> {
    if points.len() < 3 {
        return Err(GeomError::TooFewVertices(points.len()));
    }
    if points.len() > cap {
        return Err(GeomError::TooManyVertices { count: points.len(), cap });
    }
    if let Some(k) = points.iter().position(|p| !p.is_finite()) {
        return Err(GeomError::NonFinite(k));
    }
    let area = signed_area(points);
    if area.abs() < MIN_AREA {
        return Err(GeomError::DegenerateArea(area));
    }
    let mut vertices = points.to_vec();
    if area < 0.0 {
        vertices[1..].reverse();
    }
    let m = vertices.len();
    for k in 0..m {
        let (a, b, c) = (vertices[k], vertices[(k + 1) % m], vertices[(k + 2) % m]);
        if orient(a, b, c) != Orientation::CounterClockwise {
            return Err(GeomError::NonConvex((k + 1) % m));
        }
    }
    // Local left turns everywhere still admit star-shaped loops that wind
    // more than once; strict convexity needs every vertex left of every edge.
    for k in 0..m {
        let (a, b) = (vertices[k], vertices[(k + 1) % m]);
        for (l, &p) in vertices.iter().enumerate() {
            if l == k || l == (k + 1) % m {
                continue;
            }
            if orient(a, b, p) != Orientation::CounterClockwise {
                return Err(GeomError::SelfIntersecting);
            }
        }
    }
    let mut normals = Vec::with_capacity(m);
    let mut lengths = Vec::with_capacity(m);
    for k in 0..m {
        let d = vertices[(k + 1) % m] - vertices[k];
        let len = d.norm();
        normals.push(Point::new(d.y / len, -d.x / len));
        lengths.push(len);
    }
    let bbox = BBox::of(&vertices);
    Ok(ConvexPolygon { id, vertices, normals, lengths, bbox })
}

/// Pairwise disjoint convex sites with ids `0..n`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SiteSet {
    polygons: Vec<ConvexPolygon>,
}

impl SiteSet {
    /// Checks id order and pairwise disjointness.
    pub fn new(polygons: Vec<ConvexPolygon>) -> Result<Self, GeomError> {
        for (position, p) in polygons.iter().enumerate() {
            if p.id() != position {
                return Err(GeomError::BadSiteId { position, found: p.id() });
            }
        }
        for i in 0..polygons.len() {
            for j in i + 1..polygons.len() {
                if polygons[i].bbox().strictly_disjoint(&polygons[j].bbox()) {
                    continue;
                }
                if !strictly_separated(&polygons[i], &polygons[j]) {
                    return Err(GeomError::OverlappingSites(i, j));
                }
            }
        }
        Ok(SiteSet { polygons })
    }

    /// Validates raw vertex loops and assigns ids in order.
    pub fn from_loops(loops: &[Vec<Point>]) -> Result<Self, (usize, GeomError)> {
        let polys = loops
            .iter()
            .enumerate()
            .map(|(i, l)| validate_polygon(l, i, DEFAULT_VERTEX_CAP).map_err(|e| (i, e)))
            .collect::<Result<Vec<_>, _>>()?;
        SiteSet::new(polys).map_err(|e| match e {
            GeomError::OverlappingSites(_, j) => (j, e),
            other => (0, other),
        })
    }

    pub fn polygons(&self) -> &[ConvexPolygon] {
        &self.polygons
    }

    pub fn get(&self, i: usize) -> &ConvexPolygon {
        &self.polygons[i]
    }

    pub fn len(&self) -> usize {
        self.polygons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polygons.is_empty()
    }

    pub fn total_vertices(&self) -> usize {
        self.polygons.iter().map(ConvexPolygon::len).sum()
    }

    pub fn bbox(&self) -> Option<BBox> {
        let mut it = self.polygons.iter().map(ConvexPolygon::bbox);
        let first = it.next()?;
        Some(it.fold(first, |acc, b| acc.union(&b)))
    }

    /// Distance from `p` to the union of all sites.
    pub fn dist(&self, p: Point) -> f64 {
        self.polygons
            .iter()
            .map(|q| dist_point_polygon(p, q).0)
            .fold(f64::INFINITY, f64::min)
    }
}

/// True when some edge line of one polygon has the other strictly outside.
fn strictly_separated(p: &ConvexPolygon, q: &ConvexPolygon) -> bool {
    let sep = |a: &ConvexPolygon, b: &ConvexPolygon| {
        (0..a.len()).any(|k| {
            let (u, v) = a.edge(k);
            b.vertices().iter().all(|&w| orient(u, v, w) == Orientation::Clockwise)
        })
    };
    sep(p, q) || sep(q, p)
}

/// Which part of a polygon boundary a feature is.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureKind {
    Vertex,
    Edge,
}

/// A vertex or (open) edge of a site boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Feature {
    pub site: usize,
    pub kind: FeatureKind,
    pub index: usize,
}

impl Feature {
    pub fn vertex(site: usize, index: usize) -> Self {
        Feature { site, kind: FeatureKind::Vertex, index }
    }

    pub fn edge(site: usize, index: usize) -> Self {
        Feature { site, kind: FeatureKind::Edge, index }
    }
}

/// Closest point of segment `[a, b]` to `p`, snapping to the endpoints exactly.
#[inline]
pub fn closest_on_segment(p: Point, a: Point, b: Point) -> Point {
    let d = b - a;
    let len2 = d.norm_sq();
    let t = (p - a).dot(d) / len2;
    if t <= 0.0 {
        a
    } else if t >= 1.0 {
        b
    } else {
        a + d * t
    }
}

/// Distance from `p` to `poly` together with the nearest point (the point
/// itself when it lies inside).
pub fn dist_point_polygon(p: Point, poly: &ConvexPolygon) -> (f64, Point) {
    if poly.contains(p) {
        return (0.0, p);
    }
    let mut best = (f64::INFINITY, p);
    for k in 0..poly.len() {
        let (a, b) = poly.edge(k);
        let q = closest_on_segment(p, a, b);
        let d = p.dist(q);
        if d < best.0 {
            best = (d, q);
        }
    }
    best
}

/// Distance from `p` to `poly` assuming `p` is not inside; skips the
/// containment test and returns the nearest point and the feature realizing it.
pub fn exterior_nearest(p: Point, poly: &ConvexPolygon) -> (f64, Point) {
    let mut best = (f64::INFINITY, p);
    for k in 0..poly.len() {
        let (a, b) = poly.edge(k);
        let q = closest_on_segment(p, a, b);
        let d = p.dist(q);
        if d < best.0 {
            best = (d, q);
        }
    }
    best
}

/// Minimum distance between two disjoint sites with a witness pair.
///
/// When the minimum is attained along a continuum (parallel facing edges)
/// the lexicographically smallest witness pair is returned.
pub fn dist_polygon_polygon(p: &ConvexPolygon, q: &ConvexPolygon) -> Result<(f64, Point, Point), GeomError> {
    if !strictly_separated(p, q) {
        return Err(GeomError::OverlappingSites(p.id(), q.id()));
    }
    let mut cands: Vec<(f64, Point, Point)> = Vec::with_capacity(2 * p.len() * q.len());
    for &v in p.vertices() {
        for k in 0..q.len() {
            let (a, b) = q.edge(k);
            let w = closest_on_segment(v, a, b);
            cands.push((v.dist(w), v, w));
        }
    }
    for &v in q.vertices() {
        for k in 0..p.len() {
            let (a, b) = p.edge(k);
            let w = closest_on_segment(v, a, b);
            cands.push((w.dist(v), w, v));
        }
    }
    let d = cands.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let slack = 1e-12 * d.max(1.0);
    let (_, wp, wq) = cands
        .into_iter()
        .filter(|c| c.0 <= d + slack)
        .min_by(|a, b| a.1.lex_cmp(&b.1).then(a.2.lex_cmp(&b.2)))
        .expect("polygons have vertices");
    Ok((d, wp, wq))
}

/// One piece of the boundary of a polygon offset: a translated edge or a
/// circular arc around a vertex (angles counterclockwise, `end > start`).
#[derive(Clone, Copy, Debug)]
enum OffsetPiece {
    Segment(Point, Point),
    Arc { center: Point, start: f64, end: f64 },
}

fn offset_pieces(p: &ConvexPolygon, alpha: f64) -> Vec<OffsetPiece> {
    let m = p.len();
    let mut out = Vec::with_capacity(2 * m);
    for k in 0..m {
        let (a, b) = p.edge(k);
        let n = p.normal(k);
        out.push(OffsetPiece::Segment(a + n * alpha, b + n * alpha));
        let start = n.angle();
        let mut end = p.normal((k + 1) % m).angle();
        while end <= start {
            end += std::f64::consts::TAU;
        }
        out.push(OffsetPiece::Arc { center: b, start, end });
    }
    out
}

fn angle_in(theta: f64, start: f64, end: f64, tol: f64) -> Option<f64> {
    let mut t = theta;
    while t < start - tol {
        t += std::f64::consts::TAU;
    }
    while t > start + std::f64::consts::TAU - tol {
        t -= std::f64::consts::TAU;
    }
    if t >= start - tol && t <= end + tol {
        Some(((t - start) / (end - start)).clamp(0.0, 1.0))
    } else {
        None
    }
}

/// Intersections of a segment with a circle, returned as segment parameters.
fn segment_circle(a: Point, b: Point, c: Point, r: f64) -> Vec<f64> {
    let d = b - a;
    let f = a - c;
    let qa = d.norm_sq();
    let qb = 2.0 * f.dot(d);
    let qc = f.norm_sq() - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    let tol = 1e-12;
    if disc < -tol * qb.abs().max(qa) {
        return Vec::new();
    }
    let sq = disc.max(0.0).sqrt();
    let mut ts = vec![(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)];
    ts.retain(|t| (-tol..=1.0 + tol).contains(t));
    ts
}

/// All intersection points of the boundaries of the `alpha`-offsets of two
/// disjoint convex polygons, in counterclockwise order along the boundary of
/// the first offset. Fails with [`GeomError::DegenerateContact`] when the two
/// boundaries share a curve.
pub fn offset_boundary_intersections(p: &ConvexPolygon, q: &ConvexPolygon, alpha: f64) -> Result<Vec<Point>, GeomError> {
    assert!(alpha > 0.0, "offset radius must be positive");
    let pp = offset_pieces(p, alpha);
    let qp = offset_pieces(q, alpha);
    let scale = p.bbox().union(&q.bbox()).diagonal().max(alpha).max(1.0);
    let eps = 1e-12 * scale;
    // (piece index on p, parameter within piece, point)
    let mut hits: Vec<(usize, f64, Point)> = Vec::new();
    for (ip, a) in pp.iter().enumerate() {
        for b in &qp {
            match (*a, *b) {
                (OffsetPiece::Segment(a0, a1), OffsetPiece::Segment(b0, b1)) => {
                    let da = a1 - a0;
                    let db = b1 - b0;
                    let den = da.cross(db);
                    let la = da.norm();
                    let lb = db.norm();
                    if den.abs() <= 1e-12 * la * lb {
                        // parallel: overlap along a line is a degenerate contact
                        let off = (b0 - a0).cross(da) / la;
                        if off.abs() <= eps {
                            let t0 = (b0 - a0).dot(da) / (la * la);
                            let t1 = (b1 - a0).dot(da) / (la * la);
                            let (lo, hi) = (t0.min(t1).max(0.0), t0.max(t1).min(1.0));
                            if hi - lo > eps / la {
                                return Err(GeomError::DegenerateContact);
                            }
                            if hi >= lo - eps / la {
                                let t = 0.5 * (lo + hi);
                                hits.push((ip, t, a0 + da * t));
                            }
                        }
                        continue;
                    }
                    let w = b0 - a0;
                    let t = w.cross(db) / den;
                    let u = w.cross(da) / den;
                    let tt = eps / la;
                    let tu = eps / lb;
                    if t >= -tt && t <= 1.0 + tt && u >= -tu && u <= 1.0 + tu {
                        let t = t.clamp(0.0, 1.0);
                        hits.push((ip, t, a0 + da * t));
                    }
                }
                (OffsetPiece::Segment(a0, a1), OffsetPiece::Arc { center, start, end }) => {
                    for t in segment_circle(a0, a1, center, alpha) {
                        let x = a0.lerp(a1, t);
                        if angle_in((x - center).angle(), start, end, 1e-12).is_some() {
                            hits.push((ip, t.clamp(0.0, 1.0), x));
                        }
                    }
                }
                (OffsetPiece::Arc { center, start, end }, OffsetPiece::Segment(b0, b1)) => {
                    for t in segment_circle(b0, b1, center, alpha) {
                        let x = b0.lerp(b1, t);
                        if let Some(s) = angle_in((x - center).angle(), start, end, 1e-12) {
                            hits.push((ip, s, x));
                        }
                    }
                }
                (
                    OffsetPiece::Arc { center: c1, start: s1, end: e1 },
                    OffsetPiece::Arc { center: c2, start: s2, end: e2 },
                ) => {
                    let d = c2 - c1;
                    let dd = d.norm();
                    if dd <= eps {
                        // only possible for coincident vertices, excluded by disjointness
                        continue;
                    }
                    if dd > 2.0 * alpha + eps {
                        continue;
                    }
                    let h2 = alpha * alpha - 0.25 * dd * dd;
                    let h = h2.max(0.0).sqrt();
                    let mid = c1 + d * 0.5;
                    let nrm = d.perp() * (1.0 / dd);
                    let cands = if h <= eps { vec![mid] } else { vec![mid + nrm * h, mid - nrm * h] };
                    for x in cands {
                        let on1 = angle_in((x - c1).angle(), s1, e1, 1e-12);
                        let on2 = angle_in((x - c2).angle(), s2, e2, 1e-12);
                        if let (Some(s), Some(_)) = (on1, on2) {
                            hits.push((ip, s, x));
                        }
                    }
                }
            }
        }
    }
    hits.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let merge = 1e-9 * scale;
    let mut out: Vec<Point> = Vec::with_capacity(hits.len());
    for (_, _, x) in hits {
        if out.iter().any(|y| y.dist(x) <= merge) {
            continue;
        }
        out.push(x);
    }
    Ok(out)
}
