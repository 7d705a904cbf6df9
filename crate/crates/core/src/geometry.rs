//! Small fixed-size vector helpers used throughout the grid and solver code.

/// 3D point or vector.
pub type Vec3 = [f64; 3];

/// Symmetric 3x3 tensor stored row-major.
pub type Tensor3 = [[f64; 3]; 3];

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn distance(a: Vec3, b: Vec3) -> f64 {
    norm(sub(a, b))
}

/// Returns the unit vector along `a`, or the zero vector for a zero input.
pub fn normalize(a: Vec3) -> Vec3 {
    let n = norm(a);
    if n == 0.0 {
        [0.0; 3]
    } else {
        scale(a, 1.0 / n)
    }
}

pub fn mat_vec(t: &Tensor3, v: Vec3) -> Vec3 {
    [dot(t[0], v), dot(t[1], v), dot(t[2], v)]
}

/// Isotropic tensor `k * I`.
pub fn isotropic(k: f64) -> Tensor3 {
    [[k, 0.0, 0.0], [0.0, k, 0.0], [0.0, 0.0, k]]
}

pub fn diagonal(d: Vec3) -> Tensor3 {
    [[d[0], 0.0, 0.0], [0.0, d[1], 0.0], [0.0, 0.0, d[2]]]
}

pub fn centroid_of(points: &[Vec3]) -> Vec3 {
    let n = points.len() as f64;
    let s = points.iter().fold([0.0; 3], |acc, p| add(acc, *p));
    scale(s, 1.0 / n)
}

/// Area, area-weighted centroid and unit normal (Newell) of a planar polygon
/// whose vertices are given in cyclic order.
pub fn polygon_geometry(points: &[Vec3]) -> (f64, Vec3, Vec3) {
    let mut newell = [0.0; 3];
    for i in 0..points.len() {
        let p = points[i];
        let q = points[(i + 1) % points.len()];
        newell[0] += (p[1] - q[1]) * (p[2] + q[2]);
        newell[1] += (p[2] - q[2]) * (p[0] + q[0]);
        newell[2] += (p[0] - q[0]) * (p[1] + q[1]);
    }
    let normal = normalize(newell);
    if points.len() == 3 {
        let area = 0.5 * norm(cross(sub(points[1], points[0]), sub(points[2], points[0])));
        return (area, centroid_of(points), normal);
    }
    // fan triangulation from the vertex average
    let center = centroid_of(points);
    let mut area = 0.0;
    let mut weighted = [0.0; 3];
    for i in 0..points.len() {
        let p = points[i];
        let q = points[(i + 1) % points.len()];
        let a = 0.5 * dot(cross(sub(p, center), sub(q, center)), normal);
        area += a;
        let c = scale(add(add(center, p), q), 1.0 / 3.0);
        weighted = add(weighted, scale(c, a));
    }
    (area, scale(weighted, 1.0 / area), normal)
}

/// Unsigned volume and centroid of a tetrahedron.
pub fn tetrahedron_geometry(p: [Vec3; 4]) -> (f64, Vec3) {
    let v = dot(sub(p[1], p[0]), cross(sub(p[2], p[0]), sub(p[3], p[0]))) / 6.0;
    (v.abs(), centroid_of(&p))
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: Vec3,
    pub max: Vec3,
}

impl BoundingBox {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        BoundingBox { min, max }
    }

    pub fn unit_cube() -> Self {
        BoundingBox::new([0.0; 3], [1.0; 3])
    }

    pub fn of_points<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Self {
        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        for p in points {
            for k in 0..3 {
                min[k] = min[k].min(p[k]);
                max[k] = max[k].max(p[k]);
            }
        }
        BoundingBox { min, max }
    }

    pub fn diameter(&self) -> f64 {
        distance(self.min, self.max)
    }

    pub fn volume(&self) -> f64 {
        (0..3).map(|k| self.max[k] - self.min[k]).product()
    }

    /// True if `p` lies on one of the six box faces within `tol`.
    pub fn on_boundary(&self, p: Vec3, tol: f64) -> bool {
        (0..3).any(|k| (p[k] - self.min[k]).abs() <= tol || (p[k] - self.max[k]).abs() <= tol)
    }

    pub fn contains(&self, p: Vec3, tol: f64) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] - tol && p[k] <= self.max[k] + tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_simplex_volume() {
        let (v, c) = tetrahedron_geometry([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!((v - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(c, [0.25, 0.25, 0.25]);
    }

    #[test]
    fn square_polygon() {
        let (a, c, n) = polygon_geometry(&[[0.5, 0.0, 0.0], [0.5, 1.0, 0.0], [0.5, 1.0, 1.0], [0.5, 0.0, 1.0]]);
        assert!((a - 1.0).abs() < 1e-15);
        assert!((c[0] - 0.5).abs() < 1e-15 && (c[1] - 0.5).abs() < 1e-15 && (c[2] - 0.5).abs() < 1e-15);
        assert!((n[0].abs() - 1.0).abs() < 1e-15);
    }
}
