//! Grid sampling of the polygon union and the alpha filtration of the sample.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_rational::BigRational;
use num_traits::FromPrimitive;
use spade::{DelaunayTriangulation, Point2, Triangulation as _};
use thiserror::Error;

use crate::geom::{incircle, orient, ConvexPolygon, Orientation, Point, SiteSet};
use crate::nerve::{clamp_monotone, FilteredComplex};

pub const DEFAULT_SAMPLE_CAP: usize = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplingError {
    #[error("epsilon must be positive and finite, got {0}")]
    BadEpsilon(f64),
    #[error("sample would exceed {cap} points")]
    SampleTooLarge { cap: usize },
    #[error("triangulation failed: {0}")]
    Triangulation(String),
}

/// Centers of the grid cells met by the polygons.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSample {
    pub points: Vec<Point>,
    pub epsilon: f64,
    pub origin: Point,
    pub cell_side: f64,
}

impl PointSample {
    /// One `x y` line per point.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for p in &self.points {
            let _ = writeln!(out, "{} {}", p.x, p.y);
        }
        out
    }
}

fn rat(x: f64) -> BigRational {
    BigRational::from_f64(x).expect("finite coordinate")
}

/// Whether the closed polygon meets the cell `[x0, x1) x [y0, y1)`, decided
/// exactly by clipping in rational arithmetic.
fn cell_meets_exact(poly: &ConvexPolygon, x0: f64, x1: f64, y0: f64, y1: f64) -> bool {
    let mut pts: Vec<(BigRational, BigRational)> = poly.vertices().iter().map(|p| (rat(p.x), rat(p.y))).collect();
    let bounds = [(0usize, rat(x0), true), (0, rat(x1), false), (1, rat(y0), true), (1, rat(y1), false)];
    for (axis, c, lower) in bounds {
        let keep = |p: &(BigRational, BigRational)| {
            let v = if axis == 0 { &p.0 } else { &p.1 };
            if lower {
                v >= &c
            } else {
                v <= &c
            }
        };
        let mut out = Vec::with_capacity(pts.len() + 2);
        for k in 0..pts.len() {
            let a = &pts[k];
            let b = &pts[(k + 1) % pts.len()];
            let (ka, kb) = (keep(a), keep(b));
            if ka {
                out.push(a.clone());
            }
            if ka != kb {
                let (va, vb) = if axis == 0 { (&a.0, &b.0) } else { (&a.1, &b.1) };
                let t = (&c - va) / (vb - va);
                let x = &a.0 + (&b.0 - &a.0) * &t;
                let y = &a.1 + (&b.1 - &a.1) * &t;
                out.push((x, y));
            }
        }
        pts = out;
        if pts.is_empty() {
            return false;
        }
    }
    let (rx1, ry1) = (rat(x1), rat(y1));
    let min_x = pts.iter().map(|p| &p.0).min().unwrap();
    let min_y = pts.iter().map(|p| &p.1).min().unwrap();
    min_x < &rx1 && min_y < &ry1
}

/// Separating-axis test with exact orientation signs: the cell axes and the
/// polygon edge lines either separate the closed sets, or all overlap
/// strictly and the interiors meet. Only touching configurations fall
/// through to the exact clip.
fn cell_meets(poly: &ConvexPolygon, x0: f64, x1: f64, y0: f64, y1: f64) -> bool {
    let bb = poly.bbox();
    if bb.max.x < x0 || bb.min.x > x1 || bb.max.y < y0 || bb.min.y > y1 {
        return false;
    }
    let mut strict = bb.max.x > x0 && bb.min.x < x1 && bb.max.y > y0 && bb.min.y < y1;
    let corners = [Point::new(x0, y0), Point::new(x1, y0), Point::new(x1, y1), Point::new(x0, y1)];
    for k in 0..poly.len() {
        let (a, b) = poly.edge(k);
        let mut inside = false;
        let mut on = false;
        for &c in &corners {
            match orient(a, b, c) {
                Orientation::CounterClockwise => inside = true,
                Orientation::Collinear => on = true,
                Orientation::Clockwise => {}
            }
        }
        if !inside && !on {
            return false;
        }
        strict &= inside;
    }
    strict || cell_meets_exact(poly, x0, x1, y0, y1)
}

/// Centers of the half-open grid cells `[i s, (i+1) s) x [j s, (j+1) s)`,
/// `s = sqrt(2) epsilon`, that meet some polygon.
pub fn grid_sample(sites: &SiteSet, epsilon: f64) -> Result<PointSample, SamplingError> {
    grid_sample_capped(sites, epsilon, DEFAULT_SAMPLE_CAP)
}

pub fn grid_sample_capped(sites: &SiteSet, epsilon: f64, cap: usize) -> Result<PointSample, SamplingError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(SamplingError::BadEpsilon(epsilon));
    }
    let s = 2f64.sqrt() * epsilon;
    let area: f64 = sites.polygons().iter().map(|p| p.area()).sum();
    if area / (s * s) > cap as f64 {
        return Err(SamplingError::SampleTooLarge { cap });
    }
    let mut cells: BTreeSet<(i64, i64)> = BTreeSet::new();
    for poly in sites.polygons() {
        let bb = poly.bbox();
        let (i0, i1) = ((bb.min.x / s).floor() as i64 - 1, (bb.max.x / s).floor() as i64 + 1);
        let (j0, j1) = ((bb.min.y / s).floor() as i64 - 1, (bb.max.y / s).floor() as i64 + 1);
        for i in i0..=i1 {
            let (x0, x1) = (i as f64 * s, (i + 1) as f64 * s);
            if x1 < bb.min.x || x0 > bb.max.x {
                continue;
            }
            for j in j0..=j1 {
                let (y0, y1) = (j as f64 * s, (j + 1) as f64 * s);
                if y1 < bb.min.y || y0 > bb.max.y {
                    continue;
                }
                if cell_meets(poly, x0, x1, y0, y1) {
                    cells.insert((i, j));
                    if cells.len() > cap {
                        return Err(SamplingError::SampleTooLarge { cap });
                    }
                }
            }
        }
    }
    let points = cells.iter().map(|&(i, j)| Point::new((i as f64 + 0.5) * s, (j as f64 + 0.5) * s)).collect();
    Ok(PointSample { points, epsilon, origin: Point::ORIGIN, cell_side: s })
}

/// Edge of a triangulation with its (up to two) incident triangles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TriEdge {
    pub v: [u32; 2],
    pub faces: [Option<u32>; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct Triangulation {
    pub points: Vec<Point>,
    /// counterclockwise vertex triples
    pub triangles: Vec<[u32; 3]>,
    pub edges: Vec<TriEdge>,
}

fn edge_key(a: u32, b: u32) -> (u32, u32) {
    (a.min(b), a.max(b))
}

fn edge_faces(triangles: &[[u32; 3]]) -> BTreeMap<(u32, u32), Vec<u32>> {
    let mut map: BTreeMap<(u32, u32), Vec<u32>> = BTreeMap::new();
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            map.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default().push(t as u32);
        }
    }
    map
}

fn opposite(tri: &[u32; 3], a: u32, b: u32) -> u32 {
    *tri.iter().find(|&&v| v != a && v != b).unwrap()
}

/// Flips exactly cocircular quadrilaterals so that the diagonal is incident
/// to the smallest vertex id of the quadrilateral.
fn canonical_flips(points: &[Point], triangles: &mut [[u32; 3]]) {
    for _ in 0..64 {
        let map = edge_faces(triangles);
        let mut touched = vec![false; triangles.len()];
        let mut flipped = false;
        for (&(a, b), faces) in &map {
            let [t1, t2] = faces[..] else { continue };
            let (t1, t2) = (t1 as usize, t2 as usize);
            if touched[t1] || touched[t2] {
                continue;
            }
            let c = opposite(&triangles[t1], a, b);
            let d = opposite(&triangles[t2], a, b);
            let lo = a.min(b).min(c).min(d);
            if lo == a || lo == b {
                continue;
            }
            let (pa, pb, pc, pd) = (points[a as usize], points[b as usize], points[c as usize], points[d as usize]);
            let ccw = |x: Point, y: Point, z: Point| orient(x, y, z) == Orientation::CounterClockwise;
            let (p, q, r) = if ccw(pa, pb, pc) { (pa, pb, pc) } else { (pb, pa, pc) };
            if incircle(p, q, r, pd) != std::cmp::Ordering::Equal {
                continue;
            }
            // the quadrilateral must be strictly convex for the flip to be valid
            if !(ccw(pc, pd, pa) != ccw(pc, pd, pb)) {
                continue;
            }
            let t_a = if ccw(pc, pa, pd) { [c, a, d] } else { [c, d, a] };
            let t_b = if ccw(pc, pd, pb) { [c, d, b] } else { [c, b, d] };
            triangles[t1] = t_a;
            triangles[t2] = t_b;
            touched[t1] = true;
            touched[t2] = true;
            flipped = true;
        }
        if !flipped {
            break;
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Vertex {
    pos: Point2<f64>,
}

impl spade::HasPosition for Vertex {
    type Scalar = f64;

    fn position(&self) -> Point2<f64> {
        self.pos
    }
}

/// Delaunay triangulation of distinct points. Fewer than three points or a
/// collinear set yields edges only.
pub fn delaunay(points: &[Point]) -> Result<Triangulation, SamplingError> {
    let verts: Vec<Vertex> = points.iter().map(|p| Vertex { pos: Point2::new(p.x, p.y) }).collect();
    let dt = DelaunayTriangulation::<Vertex>::bulk_load_stable(verts)
        .map_err(|e| SamplingError::Triangulation(format!("{e:?}")))?;
    if dt.num_vertices() != points.len() {
        return Err(SamplingError::Triangulation("duplicate points".into()));
    }
    let mut triangles: Vec<[u32; 3]> = dt
        .inner_faces()
        .map(|f| {
            let v = f.vertices();
            [v[0].index() as u32, v[1].index() as u32, v[2].index() as u32]
        })
        .collect();
    canonical_flips(points, &mut triangles);
    // canonical triangle order: rotate to the smallest id, then sort
    for t in &mut triangles {
        let k = (0..3).min_by_key(|&k| t[k]).unwrap();
        t.rotate_left(k);
    }
    triangles.sort_unstable();
    let edges = if triangles.is_empty() {
        let mut e: Vec<TriEdge> = dt
            .undirected_edges()
            .map(|e| {
                let [a, b] = e.vertices();
                let (a, b) = edge_key(a.index() as u32, b.index() as u32);
                TriEdge { v: [a, b], faces: [None, None] }
            })
            .collect();
        e.sort_by_key(|e| e.v);
        e
    } else {
        edge_faces(&triangles)
            .into_iter()
            .map(|((a, b), f)| TriEdge { v: [a, b], faces: [f.first().copied(), f.get(1).copied()] })
            .collect()
    };
    Ok(Triangulation { points: points.to_vec(), triangles, edges })
}

pub fn circumradius(a: Point, b: Point, c: Point) -> f64 {
    let area2 = (b - a).cross(c - a).abs();
    a.dist(b) * b.dist(c) * c.dist(a) / (2.0 * area2)
}

/// Alpha filtration with values as radii: triangles at their circumradius,
/// Gabriel edges at half their length, other edges at the smallest
/// circumradius of an incident triangle.
pub fn alpha_filtration(tri: &Triangulation) -> FilteredComplex {
    let p = |k: u32| tri.points[k as usize];
    let tri_value: Vec<f64> = tri.triangles.iter().map(|t| circumradius(p(t[0]), p(t[1]), p(t[2]))).collect();
    let mut edges = BTreeMap::new();
    for e in &tri.edges {
        let (a, b) = (p(e.v[0]), p(e.v[1]));
        let mut gabriel = true;
        let mut min_r = f64::INFINITY;
        for f in e.faces.iter().flatten() {
            let t = &tri.triangles[*f as usize];
            let c = p(opposite(t, e.v[0], e.v[1]));
            if (a - c).dot(b - c) < 0.0 {
                gabriel = false;
            }
            min_r = min_r.min(tri_value[*f as usize]);
        }
        let v = if gabriel { 0.5 * a.dist(b) } else { min_r };
        edges.insert((e.v[0], e.v[1]), v);
    }
    let triangles = tri
        .triangles
        .iter()
        .zip(&tri_value)
        .map(|(t, &v)| {
            let mut key = *t;
            key.sort_unstable();
            (key, v)
        })
        .collect::<BTreeMap<_, _>>();
    clamp_monotone(tri.points.len(), edges, triangles)
}

/// Sample, triangulate and filter in one step.
pub fn sample_filtration(sites: &SiteSet, epsilon: f64) -> Result<(PointSample, FilteredComplex), SamplingError> {
    let sample = grid_sample(sites, epsilon)?;
    let tri = delaunay(&sample.points)?;
    Ok((sample, alpha_filtration(&tri)))
}
