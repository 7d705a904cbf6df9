//! Fracture corner tables and the region partition of the regular network case.

use crate::geometry::Vec3;

/// Corners of the nine fractures of the regular network, in table order.
pub const REGULAR_FRACTURES: [[Vec3; 4]; 9] = [
    [[0.5, 0.0, 0.0], [0.5, 1.0, 0.0], [0.5, 1.0, 1.0], [0.5, 0.0, 1.0]],
    [[0.0, 0.5, 0.0], [1.0, 0.5, 0.0], [1.0, 0.5, 1.0], [0.0, 0.5, 1.0]],
    [[0.0, 0.0, 0.5], [1.0, 0.0, 0.5], [1.0, 1.0, 0.5], [0.0, 1.0, 0.5]],
    [[0.75, 0.5, 0.5], [0.75, 1.0, 0.5], [0.75, 1.0, 1.0], [0.75, 0.5, 1.0]],
    [[0.5, 0.5, 0.75], [1.0, 0.5, 0.75], [1.0, 1.0, 0.75], [0.5, 1.0, 0.75]],
    [[0.5, 0.75, 0.5], [1.0, 0.75, 0.5], [1.0, 0.75, 1.0], [0.5, 0.75, 1.0]],
    [[0.50, 0.625, 0.50], [0.75, 0.625, 0.50], [0.75, 0.625, 0.75], [0.50, 0.625, 0.75]],
    [[0.625, 0.50, 0.50], [0.625, 0.75, 0.50], [0.625, 0.75, 0.75], [0.625, 0.50, 0.75]],
    [[0.50, 0.50, 0.625], [0.75, 0.50, 0.625], [0.75, 0.75, 0.625], [0.50, 0.75, 0.625]],
];

/// Corners of the eight fractures of the small-features network, in table order.
pub const SMALL_FEATURES_FRACTURES: [[Vec3; 4]; 8] = [
    [[0.05, 0.25, 0.5], [0.95, 0.25, 0.5], [0.95, 2.0, 0.5], [0.05, 2.0, 0.5]],
    [[0.5, 0.05, 0.05], [0.5, 0.05, 0.95], [0.5, 0.3, 0.95], [0.5, 0.3, 0.05]],
    [[0.05, 1.0, 0.5], [0.95, 1.0, 0.5], [0.95, 2.2, 0.85], [0.05, 2.2, 0.85]],
    [[0.05, 1.0, 0.48], [0.95, 1.0, 0.48], [0.95, 2.2, 0.14], [0.05, 2.2, 0.14]],
    [[0.17, 1.9, 0.7], [0.17, 1.9, 0.3], [0.23, 2.2, 0.3], [0.23, 2.2, 0.7]],
    [[0.23, 1.9, 0.7], [0.23, 1.9, 0.3], [0.17, 2.2, 0.3], [0.17, 2.2, 0.7]],
    [[0.77, 1.9, 0.7], [0.77, 1.9, 0.3], [0.77, 2.2, 0.3], [0.77, 2.2, 0.7]],
    [[0.83, 1.9, 0.7], [0.83, 1.9, 0.3], [0.83, 2.2, 0.3], [0.83, 2.2, 0.7]],
];

/// Corners of the single fracture used by the committed sample mesh. The plane is
/// inferred from the sampling line and is not tabulated.
pub const SINGLE_FRACTURE: [Vec3; 4] = [[0.0, 0.0, 80.0], [100.0, 0.0, 20.0], [100.0, 100.0, 20.0], [0.0, 100.0, 80.0]];

/// Open interval `lo < v < hi`; `None` bounds are unconstrained.
type Interval = (Option<f64>, Option<f64>);

const LO: f64 = 0.5;

const fn below(v: f64) -> Interval {
    (None, Some(v))
}

const fn above(v: f64) -> Interval {
    (Some(v), None)
}

const fn between(a: f64, b: f64) -> Interval {
    (Some(a), Some(b))
}

/// Region predicates as (x, y, z) intervals, indexed by region id.
const REGIONS: [[Interval; 3]; 22] = [
    [below(LO), below(LO), below(LO)],
    [above(LO), below(LO), below(LO)],
    [below(LO), above(LO), below(LO)],
    [above(LO), above(LO), below(LO)],
    [below(LO), below(LO), above(LO)],
    [above(LO), below(LO), above(LO)],
    [below(LO), above(LO), above(LO)],
    [above(0.75), above(0.75), above(0.75)],
    [above(0.75), between(0.5, 0.75), above(0.75)],
    [between(0.5, 0.75), above(0.75), above(0.75)],
    [between(0.5, 0.75), between(0.5, 0.75), above(0.75)],
    [above(0.75), above(0.75), between(0.5, 0.75)],
    [above(0.75), between(0.5, 0.75), between(0.5, 0.75)],
    [between(0.5, 0.75), above(0.75), between(0.5, 0.75)],
    [between(0.5, 0.625), between(0.5, 0.625), between(0.5, 0.625)],
    [between(0.625, 0.75), between(0.5, 0.625), between(0.5, 0.625)],
    [between(0.5, 0.625), between(0.625, 0.75), between(0.5, 0.625)],
    [between(0.625, 0.75), between(0.625, 0.75), between(0.5, 0.625)],
    [between(0.5, 0.625), between(0.5, 0.625), between(0.625, 0.75)],
    [between(0.625, 0.75), between(0.5, 0.625), between(0.625, 0.75)],
    [between(0.5, 0.625), between(0.625, 0.75), between(0.625, 0.75)],
    [between(0.625, 0.75), between(0.625, 0.75), between(0.625, 0.75)],
];

pub const NUM_REGULAR_REGIONS: usize = REGIONS.len();

/// Regions that make up the low-conductivity matrix block of the regular network.
pub const REGULAR_LOW_CONDUCTIVITY_REGIONS: [i32; 6] = [1, 5, 8, 12, 15, 19];

fn inside(v: f64, (lo, hi): Interval) -> bool {
    lo.is_none_or(|l| v > l) && hi.is_none_or(|h| v < h)
}

/// Region id of a point of the unit cube. Fails for points on a dividing plane,
/// where no predicate holds strictly.
pub fn region_id(p: Vec3) -> Option<i32> {
    let mut found = None;
    for (id, r) in REGIONS.iter().enumerate() {
        if (0..3).all(|k| inside(p[k], r[k])) {
            if found.is_some() {
                return None;
            }
            found = Some(id as i32);
        }
    }
    found
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn region_examples() {
        assert_eq!(region_id([0.26, 0.1, 0.1]), Some(0));
        assert_eq!(region_id([0.8, 0.8, 0.8]), Some(7));
        assert_eq!(region_id([0.6, 0.55, 0.55]), Some(14));
        assert_eq!(region_id([0.5, 0.2, 0.2]), None);
    }

    #[test]
    fn tables_are_planar() {
        for quad in REGULAR_FRACTURES.iter().chain(&SMALL_FEATURES_FRACTURES).chain([&SINGLE_FRACTURE]) {
            let n =
                crate::geometry::cross(crate::geometry::sub(quad[1], quad[0]), crate::geometry::sub(quad[3], quad[0]));
            let off = crate::geometry::dot(n, crate::geometry::sub(quad[2], quad[0]));
            assert!(off.abs() <= 1e-9 * crate::geometry::dot(n, n).sqrt(), "{quad:?}");
        }
    }
}
