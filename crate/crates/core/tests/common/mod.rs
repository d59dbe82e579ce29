#![allow(dead_code)]

use offsetph_core::geom::{dist_polygon_polygon, validate_polygon, ConvexPolygon, Point, SiteSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rect(id: usize, x0: f64, y0: f64, x1: f64, y1: f64) -> ConvexPolygon {
    validate_polygon(&[Point::new(x0, y0), Point::new(x1, y0), Point::new(x1, y1), Point::new(x0, y1)], id, 64).unwrap()
}

pub fn unit_at(id: usize, cx: f64, cy: f64) -> ConvexPolygon {
    rect(id, cx - 0.5, cy - 0.5, cx + 0.5, cy + 0.5)
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a - o).cross(b - o)
}

pub fn hull(mut pts: Vec<Point>) -> Vec<Point> {
    pts.sort_by(|a, b| a.lex_cmp(b));
    let mut h: Vec<Point> = Vec::new();
    for pass in 0..2 {
        let start = h.len();
        let iter: Box<dyn Iterator<Item = &Point>> = if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while h.len() >= start + 2 && cross(h[h.len() - 2], h[h.len() - 1], p) <= 0.0 {
                h.pop();
            }
            h.push(p);
        }
        h.pop();
    }
    h
}

/// Random disjoint convex pentagon hulls in [0, 100]^2.
pub fn random_sites(n: usize, seed: u64) -> SiteSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut polys: Vec<ConvexPolygon> = Vec::new();
    while polys.len() < n {
        let c = Point::new(rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0));
        let (w, h) = (rng.gen_range(2.0..10.0), rng.gen_range(2.0..10.0));
        let pts: Vec<Point> =
            (0..5).map(|_| c + Point::new(rng.gen_range(-0.5..0.5) * w, rng.gen_range(-0.5..0.5) * h)).collect();
        let Ok(p) = validate_polygon(&hull(pts), polys.len(), 64) else { continue };
        if polys.iter().all(|q| dist_polygon_polygon(&p, q).map(|d| d.0 > 1e-6).unwrap_or(false)) {
            polys.push(p);
        }
    }
    SiteSet::new(polys).unwrap()
}
