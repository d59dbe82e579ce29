//! Nerve filtrations of the offsets: the restricted nerve read off a Voronoi
//! diagram, and the full nerve computed by brute force over all pairs and
//! triples of sites.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::geom::{dist_point_polygon, dist_polygon_polygon, exterior_nearest, ConvexPolygon, Point, SiteSet};
use crate::voronoi::VoronoiDiagram;

/// Simplex of dimension 0, 1 or 2 on sorted, distinct vertex ids.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Simplex {
    verts: [u32; 3],
    len: u8,
}

impl Simplex {
    pub fn vertex(a: u32) -> Self {
        Simplex { verts: [a, 0, 0], len: 1 }
    }

    pub fn edge(a: u32, b: u32) -> Self {
        assert_ne!(a, b, "edge on a repeated vertex");
        Simplex { verts: [a.min(b), a.max(b), 0], len: 2 }
    }

    pub fn triangle(a: u32, b: u32, c: u32) -> Self {
        let mut v = [a, b, c];
        v.sort_unstable();
        assert!(v[0] != v[1] && v[1] != v[2], "triangle on a repeated vertex");
        Simplex { verts: v, len: 3 }
    }

    pub fn from_vertices(ids: &[u32]) -> Self {
        match *ids {
            [a] => Self::vertex(a),
            [a, b] => Self::edge(a, b),
            [a, b, c] => Self::triangle(a, b, c),
            _ => panic!("simplices have 1 to 3 vertices"),
        }
    }

    pub fn dim(&self) -> usize {
        self.len as usize - 1
    }

    pub fn vertices(&self) -> &[u32] {
        &self.verts[..self.len as usize]
    }

    /// Codimension-one faces, in lexicographic order.
    pub fn facets(&self) -> Vec<Simplex> {
        let v = self.vertices();
        match v.len() {
            1 => Vec::new(),
            2 => vec![Self::vertex(v[0]), Self::vertex(v[1])],
            _ => vec![Self::edge(v[0], v[1]), Self::edge(v[0], v[2]), Self::edge(v[1], v[2])],
        }
    }
}

impl Ord for Simplex {
    fn cmp(&self, o: &Self) -> Ordering {
        self.len.cmp(&o.len).then_with(|| self.vertices().cmp(o.vertices()))
    }
}

impl PartialOrd for Simplex {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComplexError {
    #[error("simplex {0:?} appears twice")]
    Duplicate(Vec<u32>),
    #[error("face {face:?} of {simplex:?} is missing")]
    MissingFace { simplex: Vec<u32>, face: Vec<u32> },
    #[error("simplex {simplex:?} enters at {value} before its face {face:?} at {face_value}")]
    NotMonotone { simplex: Vec<u32>, value: f64, face: Vec<u32>, face_value: f64 },
    #[error("simplex {0:?} has invalid filtration value {1}")]
    BadValue(Vec<u32>, f64),
}

/// Simplicial complex with a filtration value per simplex, kept in
/// filtration order: by value, then dimension, then vertex ids.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FilteredComplex {
    simplices: Vec<(Simplex, f64)>,
}

fn filtration_cmp(a: &(Simplex, f64), b: &(Simplex, f64)) -> Ordering {
    a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0))
}

impl FilteredComplex {
    /// Validates closure under faces, monotonicity and uniqueness, and sorts
    /// into filtration order.
    pub fn new(mut simplices: Vec<(Simplex, f64)>) -> Result<Self, ComplexError> {
        let mut index: HashMap<Simplex, f64> = HashMap::with_capacity(simplices.len());
        for &(s, v) in &simplices {
            if !v.is_finite() || v < 0.0 {
                return Err(ComplexError::BadValue(s.vertices().to_vec(), v));
            }
            if index.insert(s, v).is_some() {
                return Err(ComplexError::Duplicate(s.vertices().to_vec()));
            }
        }
        for &(s, v) in &simplices {
            for f in s.facets() {
                match index.get(&f) {
                    None => {
                        return Err(ComplexError::MissingFace {
                            simplex: s.vertices().to_vec(),
                            face: f.vertices().to_vec(),
                        })
                    }
                    Some(&fv) if fv > v => {
                        return Err(ComplexError::NotMonotone {
                            simplex: s.vertices().to_vec(),
                            value: v,
                            face: f.vertices().to_vec(),
                            face_value: fv,
                        })
                    }
                    _ => {}
                }
            }
        }
        simplices.sort_by(filtration_cmp);
        Ok(FilteredComplex { simplices })
    }

    /// Wraps simplices without validation; the order is kept as given.
    /// Persistence computations re-check the invariants.
    pub fn from_raw(simplices: Vec<(Simplex, f64)>) -> Self {
        FilteredComplex { simplices }
    }

    pub fn simplices(&self) -> &[(Simplex, f64)] {
        &self.simplices
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    pub fn count_dim(&self, dim: usize) -> usize {
        self.simplices.iter().filter(|(s, _)| s.dim() == dim).count()
    }

    pub fn value_of(&self, s: &Simplex) -> Option<f64> {
        self.simplices.iter().find(|(t, _)| t == s).map(|&(_, v)| v)
    }
}

/// Raises every simplex to the maximum of its faces' values.
pub(crate) fn clamp_monotone(vertices: usize, edges: BTreeMap<(u32, u32), f64>, triangles: BTreeMap<[u32; 3], f64>) -> FilteredComplex {
    let mut out = Vec::with_capacity(vertices + edges.len() + triangles.len());
    out.extend((0..vertices as u32).map(|i| (Simplex::vertex(i), 0.0)));
    for (&(a, b), &v) in &edges {
        out.push((Simplex::edge(a, b), v));
    }
    for (&[a, b, c], &raw) in &triangles {
        let mut v = raw;
        for e in [(a, b), (a, c), (b, c)] {
            v = v.max(edges[&e]);
        }
        out.push((Simplex::triangle(a, b, c), v));
    }
    FilteredComplex::new(out).expect("clamped nerve is a valid filtration")
}

/// Nerve of the Voronoi-restricted offsets: one edge per adjacent site pair
/// (minimum over bisector components), one triangle per Voronoi vertex triple.
pub fn restricted_nerve(diagram: &VoronoiDiagram) -> FilteredComplex {
    let mut edges: BTreeMap<(u32, u32), f64> = BTreeMap::new();
    for e in &diagram.edges {
        let key = (e.sites.0.min(e.sites.1) as u32, e.sites.0.max(e.sites.1) as u32);
        let slot = edges.entry(key).or_insert(f64::INFINITY);
        *slot = slot.min(e.critical_value);
    }
    let mut triangles: BTreeMap<[u32; 3], f64> = BTreeMap::new();
    for v in &diagram.vertices {
        let key = v.sites.map(|k| k as u32);
        let slot = triangles.entry(key).or_insert(f64::INFINITY);
        *slot = slot.min(v.value);
    }
    // a triangle always comes with its three edges in a valid diagram
    for (&[a, b, c], &v) in &triangles {
        for e in [(a, b), (a, c), (b, c)] {
            edges.entry(e).or_insert(v);
        }
    }
    clamp_monotone(diagram.sites.len(), edges, triangles)
}

/// Set of points where two offsets first meet: the midpoint of the closest
/// pair, or a segment of midpoints when the closest features are parallel.
#[derive(Clone, Copy, Debug)]
struct PairMeet {
    value: f64,
    seg: (Point, Point),
}

fn pair_meet(a: &ConvexPolygon, b: &ConvexPolygon) -> PairMeet {
    let (d, p, q) = dist_polygon_polygon(a, b).expect("sites are disjoint");
    let value = 0.5 * d;
    let mid = p.lerp(q, 0.5);
    let mut seg = (mid, mid);
    let eps = 1e-12 * d.max(1.0);
    for ka in 0..a.len() {
        let (a0, a1) = a.edge(ka);
        let na = a.normal(ka);
        if (na.dot(p - a0)).abs() > eps {
            continue;
        }
        for kb in 0..b.len() {
            let nb = b.normal(kb);
            if na.dot(nb) > -1.0 + 1e-12 {
                continue;
            }
            let (b0, b1) = b.edge(kb);
            if (nb.dot(q - b0)).abs() > eps {
                continue;
            }
            let t = na.perp();
            let (lo_a, hi_a) = minmax(t.dot(a0), t.dot(a1));
            let (lo_b, hi_b) = minmax(t.dot(b0), t.dot(b1));
            let (lo, hi) = (lo_a.max(lo_b), hi_a.min(hi_b));
            if hi > lo {
                let base = mid - t * t.dot(mid);
                let (s0, s1) = (base + t * lo, base + t * hi);
                seg = if s0.lex_cmp(&s1) == Ordering::Greater { (s1, s0) } else { (s0, s1) };
            }
        }
    }
    PairMeet { value, seg }
}

fn minmax(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Lexicographically smallest point of the segment within `r` of `poly`, if any.
fn segment_within(seg: (Point, Point), poly: &ConvexPolygon, r: f64) -> Option<Point> {
    let slack = 1e-12 * r.max(1.0);
    let at = |t: f64| seg.0.lerp(seg.1, t);
    let f = |t: f64| dist_point_polygon(at(t), poly).0;
    if seg.0 == seg.1 {
        return (f(0.0) <= r + slack).then_some(seg.0);
    }
    if f(0.0) <= r + slack {
        return Some(seg.0);
    }
    // the distance along the segment is convex: find its minimum, then the
    // first feasible parameter before it
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let tmin = 0.5 * (lo + hi);
    if f(tmin) > r + slack {
        return None;
    }
    let (mut lo, mut hi) = (0.0, tmin);
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if f(m) <= r + slack {
            hi = m;
        } else {
            lo = m;
        }
    }
    Some(at(hi))
}

fn objective(polys: &[&ConvexPolygon; 3], x: Point) -> f64 {
    polys.iter().map(|p| dist_point_polygon(x, p).0).fold(0.0, f64::max)
}

/// Newton iteration for a point equidistant from three sites whose unit
/// gradients surround the origin.
fn equidistant_minimizer(polys: &[&ConvexPolygon; 3], start: Point) -> Option<(f64, Point)> {
    let eval = |x: Point| {
        let mut d = [0.0; 3];
        let mut g = [Point::ORIGIN; 3];
        for k in 0..3 {
            let (dist, w) = exterior_nearest(x, polys[k]);
            d[k] = dist;
            g[k] = if dist > 0.0 { (x - w) * (1.0 / dist) } else { Point::ORIGIN };
        }
        (d, g)
    };
    let mut x = start;
    for _ in 0..60 {
        let (d, g) = eval(x);
        let f1 = d[0] - d[1];
        let f2 = d[0] - d[2];
        let r1 = g[0] - g[1];
        let r2 = g[0] - g[2];
        let det = r1.cross(r2);
        if det.abs() < 1e-14 || !det.is_finite() {
            return None;
        }
        let dx = Point::new(-(f1 * r2.y - f2 * r1.y) / det, -(r1.x * f2 - r2.x * f1) / det);
        x = x + dx;
        if dx.norm() <= 1e-15 * (1.0 + x.norm()) {
            break;
        }
    }
    let (d, g) = eval(x);
    let spread = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - d.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(spread <= 1e-10 * d[0].max(1.0)) || d.iter().any(|&v| v <= 0.0) {
        return None;
    }
    // origin in the convex hull of the gradients, with slack
    let c0 = g[0].cross(g[1]);
    let c1 = g[1].cross(g[2]);
    let c2 = g[2].cross(g[0]);
    let slack = 1e-9;
    let inside = (c0 >= -slack && c1 >= -slack && c2 >= -slack) || (c0 <= slack && c1 <= slack && c2 <= slack);
    inside.then(|| (d.iter().cloned().fold(f64::NEG_INFINITY, f64::max), x))
}

/// Golden-section search of a convex function on an interval.
fn golden_min(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..120 {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

fn triple_from_meets(polys: [&ConvexPolygon; 3], meets: [PairMeet; 3]) -> (f64, Point) {
    // meets[k] is for the pair not containing polys[k]
    let mut best: Option<(f64, Point)> = None;
    for k in 0..3 {
        let m = meets[k];
        if let Some(w) = segment_within(m.seg, polys[k], m.value) {
            best = match best {
                Some((v, p)) if v < m.value || (v == m.value && p.lex_cmp(&w) != Ordering::Greater) => Some((v, p)),
                _ => Some((m.value, w)),
            };
        }
    }
    if let Some(b) = best {
        return b;
    }
    let lower = meets.iter().map(|m| m.value).fold(0.0, f64::max);
    let mids = meets.map(|m| m.seg.0.lerp(m.seg.1, 0.5));
    let center = (mids[0] + mids[1] + mids[2]) * (1.0 / 3.0);
    let mut found: Option<(f64, Point)> = None;
    for start in [center, mids[0], mids[1], mids[2]] {
        if let Some((v, x)) = equidistant_minimizer(&polys, start) {
            if v >= lower - 1e-9 && found.is_none_or(|(fv, _)| v < fv) {
                found = Some((v, x));
            }
        }
    }
    if let Some(f) = found {
        return f;
    }
    // nested golden-section search over the joint bounding box
    let bb = polys[0].bbox().union(&polys[1].bbox()).union(&polys[2].bbox());
    let bb = bb.inflate(bb.diagonal());
    let inner = |x: f64| golden_min(bb.min.y, bb.max.y, |y| objective(&polys, Point::new(x, y)));
    let (x, _) = golden_min(bb.min.x, bb.max.x, |x| inner(x).1);
    let (y, v) = inner(x);
    let p = Point::new(x, y);
    match equidistant_minimizer(&polys, p) {
        Some((nv, np)) if nv <= v + 1e-12 => (nv, np),
        _ => (v, p),
    }
}

/// Smallest `alpha` at which the offsets of three sites share a point, with
/// a point attaining it. Symmetric in its arguments.
pub fn cech_triple_value(p1: &ConvexPolygon, p2: &ConvexPolygon, p3: &ConvexPolygon) -> (f64, Point) {
    let mut polys = [p1, p2, p3];
    polys.sort_by(|a, b| a.id().cmp(&b.id()).then_with(|| cmp_vertices(a, b)));
    let meets = [pair_meet(polys[1], polys[2]), pair_meet(polys[0], polys[2]), pair_meet(polys[0], polys[1])];
    triple_from_meets(polys, meets)
}

fn cmp_vertices(a: &ConvexPolygon, b: &ConvexPolygon) -> Ordering {
    for (p, q) in a.vertices().iter().zip(b.vertices()) {
        match p.lex_cmp(q) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Full nerve of the offsets: every pair at half its distance, every triple
/// at the first common intersection of the three offsets.
pub fn unrestricted_nerve(sites: &SiteSet) -> FilteredComplex {
    let n = sites.len();
    let polys = sites.polygons();
    let mut meets: HashMap<(usize, usize), PairMeet> = HashMap::with_capacity(n * n.saturating_sub(1) / 2);
    let mut edges = BTreeMap::new();
    for i in 0..n {
        for j in i + 1..n {
            let m = pair_meet(&polys[i], &polys[j]);
            edges.insert((i as u32, j as u32), m.value);
            meets.insert((i, j), m);
        }
    }
    let mut triangles = BTreeMap::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let (v, _) = triple_from_meets(
                    [&polys[i], &polys[j], &polys[k]],
                    [meets[&(j, k)], meets[&(i, k)], meets[&(i, j)]],
                );
                triangles.insert([i as u32, j as u32, k as u32], v);
            }
        }
    }
    clamp_monotone(n, edges, triangles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::validate_polygon;
    use crate::voronoi::build_voronoi;

    fn rect(id: usize, x0: f64, y0: f64, x1: f64, y1: f64) -> ConvexPolygon {
        validate_polygon(
            &[Point::new(x0, y0), Point::new(x1, y0), Point::new(x1, y1), Point::new(x0, y1)],
            id,
            64,
        )
        .unwrap()
    }

    fn unit_at(id: usize, cx: f64, cy: f64) -> ConvexPolygon {
        rect(id, cx - 0.5, cy - 0.5, cx + 0.5, cy + 0.5)
    }

    #[test]
    fn complex_validation() {
        let v = |a| (Simplex::vertex(a), 0.0);
        assert!(FilteredComplex::new(vec![v(0), v(1), (Simplex::edge(0, 1), 1.0)]).is_ok());
        assert!(matches!(
            FilteredComplex::new(vec![v(0), (Simplex::edge(0, 1), 1.0)]),
            Err(ComplexError::MissingFace { .. })
        ));
        assert!(matches!(
            FilteredComplex::new(vec![(Simplex::vertex(0), 2.0), v(1), (Simplex::edge(0, 1), 1.0)]),
            Err(ComplexError::NotMonotone { .. })
        ));
        assert!(matches!(FilteredComplex::new(vec![v(0), v(0)]), Err(ComplexError::Duplicate(_))));
    }

    #[test]
    fn filtration_order() {
        let fc = FilteredComplex::new(vec![
            (Simplex::edge(0, 1), 1.0),
            (Simplex::vertex(1), 0.0),
            (Simplex::vertex(0), 0.0),
            (Simplex::vertex(2), 1.0),
        ])
        .unwrap();
        let order: Vec<Vec<u32>> = fc.simplices().iter().map(|(s, _)| s.vertices().to_vec()).collect();
        assert_eq!(order, vec![vec![0], vec![1], vec![2], vec![0, 1]]);
    }

    #[test]
    fn restricted_two_squares() {
        let sites = SiteSet::new(vec![rect(0, 0.0, 0.0, 1.0, 1.0), rect(1, 2.0, 0.0, 3.0, 1.0)]).unwrap();
        let fc = restricted_nerve(&build_voronoi(&sites).unwrap());
        assert_eq!(fc.len(), 3);
        assert_eq!(fc.value_of(&Simplex::edge(0, 1)), Some(0.5));
    }

    #[test]
    fn single_site_nerves() {
        let sites = SiteSet::new(vec![rect(0, 0.0, 0.0, 1.0, 1.0)]).unwrap();
        assert_eq!(restricted_nerve(&build_voronoi(&sites).unwrap()).len(), 1);
        assert_eq!(unrestricted_nerve(&sites).len(), 1);
    }

    #[test]
    fn unrestricted_two_squares() {
        let sites = SiteSet::new(vec![rect(0, 0.0, 0.0, 1.0, 1.0), rect(1, 2.0, 0.0, 3.0, 1.0)]).unwrap();
        let fc = unrestricted_nerve(&sites);
        assert_eq!(fc.value_of(&Simplex::edge(0, 1)), Some(0.5));
    }

    #[test]
    fn collinear_squares_triple() {
        let a = rect(0, 0.0, 0.0, 1.0, 1.0);
        let b = rect(1, 2.0, 0.0, 3.0, 1.0);
        let c = rect(2, 4.0, 0.0, 5.0, 1.0);
        let (v, w) = cech_triple_value(&a, &b, &c);
        assert!((v - 1.5).abs() < 1e-12);
        assert!(w.dist(Point::new(2.5, 0.0)) < 1e-9, "{w:?}");
        let (v2, w2) = cech_triple_value(&c, &a, &b);
        assert_eq!((v, w), (v2, w2));
    }

    /// Grid search at step 1e-3 refined by coordinate descent.
    fn brute_force(polys: [&ConvexPolygon; 3]) -> f64 {
        let bb = polys[0].bbox().union(&polys[1].bbox()).union(&polys[2].bbox());
        let step = 1e-3;
        let mut best = (f64::INFINITY, Point::ORIGIN);
        let nx = (bb.width() / step) as usize;
        let ny = (bb.height() / step) as usize;
        for ix in (0..=nx).step_by(10) {
            for iy in (0..=ny).step_by(10) {
                let x = Point::new(bb.min.x + ix as f64 * step, bb.min.y + iy as f64 * step);
                let v = objective(&polys, x);
                if v < best.0 {
                    best = (v, x);
                }
            }
        }
        // refine around the coarse optimum on the fine grid, then descend
        let c = best.1;
        for ix in -20i32..=20 {
            for iy in -20i32..=20 {
                let x = c + Point::new(ix as f64 * step, iy as f64 * step);
                let v = objective(&polys, x);
                if v < best.0 {
                    best = (v, x);
                }
            }
        }
        let mut h = step;
        while h > 1e-13 {
            let mut moved = false;
            for d in [Point::new(h, 0.0), Point::new(-h, 0.0), Point::new(0.0, h), Point::new(0.0, -h), Point::new(h, h), Point::new(-h, -h), Point::new(h, -h), Point::new(-h, h)] {
                let x = best.1 + d;
                let v = objective(&polys, x);
                if v < best.0 {
                    best = (v, x);
                    moved = true;
                }
            }
            if !moved {
                h *= 0.5;
            }
        }
        best.0
    }

    #[test]
    fn three_squares_match_grid_search() {
        let a = unit_at(0, 0.0, 0.0);
        let b = unit_at(1, 4.0, 0.0);
        let c = unit_at(2, 2.0, 3.0);
        let (v, w) = cech_triple_value(&a, &b, &c);
        assert!((v - brute_force([&a, &b, &c])).abs() < 1e-6);
        assert!((objective(&[&a, &b, &c], w) - v).abs() < 1e-9);
        // permutation invariance
        for perm in [[&b, &a, &c], [&c, &b, &a], [&b, &c, &a]] {
            assert_eq!(cech_triple_value(perm[0], perm[1], perm[2]).0, v);
        }
    }

    #[test]
    fn triple_value_bounds_pair_values() {
        let a = validate_polygon(&[Point::new(0.0, 0.0), Point::new(2.0, 0.5), Point::new(0.5, 1.5)], 0, 64).unwrap();
        let b = validate_polygon(&[Point::new(5.0, 0.0), Point::new(6.0, 2.0), Point::new(4.5, 1.0)], 1, 64).unwrap();
        let c = validate_polygon(&[Point::new(2.0, 4.0), Point::new(3.0, 4.5), Point::new(2.5, 6.0)], 2, 64).unwrap();
        let (v, _) = cech_triple_value(&a, &b, &c);
        for (p, q) in [(&a, &b), (&a, &c), (&b, &c)] {
            assert!(v >= 0.5 * dist_polygon_polygon(p, q).unwrap().0 - 1e-9);
        }
        assert!((v - brute_force([&a, &b, &c])).abs() < 1e-6);
    }

    #[test]
    fn unrestricted_size() {
        let sites = SiteSet::new((0..10).map(|k| unit_at(k, 3.0 * k as f64, (k * k % 7) as f64 * 2.0)).collect()).unwrap();
        assert_eq!(unrestricted_nerve(&sites).len(), 175);
    }
}
