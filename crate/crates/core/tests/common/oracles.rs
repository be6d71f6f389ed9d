//! Brute-force oracles that share no code with the crate.

use std::f64::consts::TAU;

/// Point-to-segment distance.
fn segment_distance(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0) };
    let (cx, cy) = (a[0] + t * dx, a[1] + t * dy);
    ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt()
}

/// Winding number of `ring` around `p` from the sum of subtended angles.
pub fn winding_number(ring: &[[f64; 2]], p: [f64; 2]) -> i64 {
    let mut total = 0.0;
    for i in 0..ring.len() {
        let (a, b) = (ring[i], ring[(i + 1) % ring.len()]);
        let (ax, ay, bx, by) = (a[0] - p[0], a[1] - p[1], b[0] - p[0], b[1] - p[1]);
        total += (ax * by - ay * bx).atan2(ax * bx + ay * by);
    }
    (total / TAU).round() as i64
}

/// Boundary-inclusive containment: on an edge (within 1e-9) or nonzero
/// winding number.
pub fn contains(ring: &[[f64; 2]], p: [f64; 2]) -> bool {
    let on_edge = (0..ring.len()).any(|i| segment_distance(ring[i], ring[(i + 1) % ring.len()], p) <= 1e-9);
    on_edge || winding_number(ring, p) != 0
}

/// Room id, z band `[min, max)` and footprint ring.
pub type OracleRoom = (String, (f64, f64), Vec<[f64; 2]>);

/// First room (rooms must be given in ascending id order) whose z band
/// holds `p` and whose ring contains it.
pub fn locate(rooms: &[OracleRoom], p: [f64; 3]) -> Option<&str> {
    rooms
        .iter()
        .find(|(_, (z0, z1), ring)| p[2] >= *z0 && p[2] < *z1 && contains(ring, [p[0], p[1]]))
        .map(|(id, _, _)| id.as_str())
}
