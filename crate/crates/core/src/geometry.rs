//! Planar polygons for room footprints and rigid 3-D frames for IFC
//! placements.

use serde::Serialize;
use thiserror::Error;

pub type Point2 = [f64; 2];
pub type Point3 = [f64; 3];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolygonError {
    #[error("polygon needs at least 3 distinct vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon has non-finite coordinates")]
    NonFinite,
    #[error("polygon has zero area")]
    ZeroArea,
    #[error("polygon boundary intersects itself")]
    SelfIntersecting,
}

/// Twice the signed area of triangle (a, b, c); positive when c lies left
/// of a→b.
pub fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: Point2, b: Point2, p: Point2) -> bool {
    orient(a, b, p) == 0.0
        && p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

fn segments_touch(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let (d1, d2) = (orient(c, d, a), orient(c, d, b));
    let (d3, d4) = (orient(a, b, c), orient(a, b, d));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    on_segment(c, d, a) || on_segment(c, d, b) || on_segment(a, b, c) || on_segment(a, b, d)
}

/// A simple polygon with counter-clockwise vertex order and no repeated
/// closing vertex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polygon {
    vertices: Vec<Point2>,
}

impl Polygon {
    /// Validates and normalizes a vertex ring: drops a repeated closing
    /// vertex and consecutive duplicates, then orients it counter-clockwise.
    pub fn new(points: impl IntoIterator<Item = Point2>) -> Result<Self, PolygonError> {
        let mut vertices: Vec<Point2> = Vec::new();
        for p in points {
            if !(p[0].is_finite() && p[1].is_finite()) {
                return Err(PolygonError::NonFinite);
            }
            if vertices.last() != Some(&p) {
                vertices.push(p);
            }
        }
        while vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(PolygonError::TooFewVertices(vertices.len()));
        }
        if vertices[2..].iter().all(|&v| orient(vertices[0], vertices[1], v) == 0.0) {
            return Err(PolygonError::ZeroArea);
        }
        if !is_simple(&vertices) {
            return Err(PolygonError::SelfIntersecting);
        }
        // a simple ring with non-collinear vertices can still round to zero
        let area = signed_area(&vertices);
        if area == 0.0 {
            return Err(PolygonError::ZeroArea);
        }
        if area < 0.0 {
            vertices.reverse();
        }
        Ok(Polygon { vertices })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn centroid(&self) -> Point2 {
        let (mut cx, mut cy) = (0.0, 0.0);
        let n = self.vertices.len();
        for i in 0..n {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
            let cross = a[0] * b[1] - b[0] * a[1];
            cx += (a[0] + b[0]) * cross;
            cy += (a[1] + b[1]) * cross;
        }
        let six_a = 6.0 * self.area();
        [cx / six_a, cy / six_a]
    }

    pub fn on_boundary(&self, p: Point2) -> bool {
        self.edges().any(|(a, b)| on_segment(a, b, p))
    }

    /// Even-odd ray casting towards +x. Boundary points count as inside.
    pub fn contains(&self, p: Point2) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if on_segment(a, b, p) {
                return true;
            }
            if (a[1] > p[1]) != (b[1] > p[1]) {
                // the edge crosses the ray's line; decide the side with the
                // orientation sign instead of dividing
                let o = orient(a, b, p);
                let crosses_right = if b[1] > a[1] { o > 0.0 } else { o < 0.0 };
                if crosses_right {
                    inside = !inside;
                }
            }
        }
        inside
    }

    fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }
}

/// Shoelace formula; positive for counter-clockwise rings.
pub fn signed_area(ring: &[Point2]) -> f64 {
    let n = ring.len();
    (0..n)
        .map(|i| {
            let (a, b) = (ring[i], ring[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        / 2.0
}

fn is_simple(ring: &[Point2]) -> bool {
    let n = ring.len();
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        for j in (i + 1)..n {
            let (c, d) = (ring[j], ring[(j + 1) % n]);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // shared vertex; only a collinear fold-back is a problem
                let (shared, p, q) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                let folds = orient(p, shared, q) == 0.0
                    && (p[0] - shared[0]) * (q[0] - shared[0]) + (p[1] - shared[1]) * (q[1] - shared[1]) > 0.0;
                if folds {
                    return false;
                }
            } else if segments_touch(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// A right-handed orthonormal frame with an origin, i.e. a rigid placement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub origin: Point3,
    pub x: Point3,
    pub y: Point3,
    pub z: Point3,
}

impl Default for Frame {
    fn default() -> Self {
        Frame { origin: [0.0; 3], x: [1.0, 0.0, 0.0], y: [0.0, 1.0, 0.0], z: [0.0, 0.0, 1.0] }
    }
}

fn cross(a: Point3, b: Point3) -> Point3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: Point3, b: Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn normalize(v: Point3) -> Option<Point3> {
    let len = dot(v, v).sqrt();
    (len > 1e-12 && len.is_finite()).then(|| [v[0] / len, v[1] / len, v[2] / len])
}

impl Frame {
    /// Builds a frame the way IFC axis placements do: `axis` fixes z, and
    /// `ref_direction` is projected onto the plane normal to it to give x.
    pub fn from_axes(origin: Point3, axis: Option<Point3>, ref_direction: Option<Point3>) -> Option<Frame> {
        let z = match axis {
            Some(a) => normalize(a)?,
            None => [0.0, 0.0, 1.0],
        };
        let r = ref_direction.unwrap_or(if z[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] });
        let d = dot(r, z);
        let x = normalize([r[0] - d * z[0], r[1] - d * z[1], r[2] - d * z[2]])?;
        let y = cross(z, x);
        Some(Frame { origin, x, y, z })
    }

    pub fn apply(&self, p: Point3) -> Point3 {
        let mut out = self.origin;
        for (i, o) in out.iter_mut().enumerate() {
            *o += self.x[i] * p[0] + self.y[i] * p[1] + self.z[i] * p[2];
        }
        out
    }

    fn rotate(&self, v: Point3) -> Point3 {
        let mut out = [0.0; 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.x[i] * v[0] + self.y[i] * v[1] + self.z[i] * v[2];
        }
        out
    }

    /// `self ∘ child`: a point in the child's frame mapped through both.
    pub fn then(&self, child: &Frame) -> Frame {
        Frame {
            origin: self.apply(child.origin),
            x: self.rotate(child.x),
            y: self.rotate(child.y),
            z: self.rotate(child.z),
        }
    }
}
