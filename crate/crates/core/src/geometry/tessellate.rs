//! Watertight triangulation of primitive descriptors in local coordinates.

use std::f64::consts::TAU;
use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{Point3, Vector3};

use super::mesh::{MeshBuilder, TriMesh};
use super::primitive::{
    box_corner, cut_tolerance, cylindrical_point, edge_crossing, spherical_point, CylindricalExtent, HalfSpace,
    Interval, PrimitiveDescriptor, SphericalExtent,
};

pub const DEFAULT_SEGMENTS: usize = 32;

static SEGMENTS: AtomicUsize = AtomicUsize::new(DEFAULT_SEGMENTS);

/// Segment count per full turn used when no explicit count is given.
pub fn default_segments() -> usize {
    SEGMENTS.load(Ordering::Relaxed)
}

pub fn set_default_segments(n: usize) {
    SEGMENTS.store(n.max(3), Ordering::Relaxed);
}

/// Triangulates a descriptor; `segments` is the count per full 2π turn.
pub fn tessellate(desc: &PrimitiveDescriptor, segments: usize) -> TriMesh {
    let segments = segments.max(3);
    match desc {
        PrimitiveDescriptor::Euclidean { lo, hi, cut } => euclidean(lo, hi, cut.as_ref()),
        PrimitiveDescriptor::Cylindrical(c) => cylindrical(c, segments),
        PrimitiveDescriptor::Spherical(s) => spherical(s, segments),
    }
}

fn euclidean(lo: &Vector3<f64>, hi: &Vector3<f64>, cut: Option<&HalfSpace>) -> TriMesh {
    let mut b = MeshBuilder::default();
    let tol = cut.map(|hs| cut_tolerance(lo, hi, hs)).unwrap_or(0.0);
    let dist = |p: &Point3<f64>| cut.map(|hs| hs.signed_distance(p)).unwrap_or(-1.0);

    for axis in 0..3 {
        let (i, j) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in 0..2 {
            let mut ids = [0usize; 4];
            for (k, (a, c)) in [(0, 0), (1, 0), (1, 1), (0, 1)].into_iter().enumerate() {
                ids[k] = (side << axis) | (a << i) | (c << j);
            }
            if side == 0 {
                ids.reverse();
            }
            let ring: Vec<(usize, Point3<f64>, f64)> = ids
                .iter()
                .map(|&id| {
                    let p = box_corner(lo, hi, id);
                    (id, p, dist(&p))
                })
                .collect();
            let poly = clip_polygon(&ring, tol);
            fan(&mut b, &poly);
        }
    }

    if let Some(hs) = cut {
        let cap = cap_polygon(lo, hi, hs, tol);
        fan(&mut b, &cap);
    }
    b.finish()
}

/// Sutherland–Hodgman against `d <= tol`, using canonical edge crossings.
fn clip_polygon(ring: &[(usize, Point3<f64>, f64)], tol: f64) -> Vec<Point3<f64>> {
    let mut out = Vec::with_capacity(ring.len() + 2);
    for k in 0..ring.len() {
        let cur = ring[k];
        let next = ring[(k + 1) % ring.len()];
        let cur_in = cur.2 <= tol;
        let next_in = next.2 <= tol;
        if cur_in {
            out.push(cur.1);
        }
        if (cur_in && !next_in && cur.2 < -tol) || (!cur_in && next_in && next.2 < -tol) {
            out.push(edge_crossing(cur, next));
        }
    }
    out
}

fn cap_polygon(lo: &Vector3<f64>, hi: &Vector3<f64>, hs: &HalfSpace, tol: f64) -> Vec<Point3<f64>> {
    let corners: Vec<(usize, Point3<f64>, f64)> = (0..8)
        .map(|i| {
            let p = box_corner(lo, hi, i);
            (i, p, hs.signed_distance(&p))
        })
        .collect();
    let mut pts: Vec<Point3<f64>> = corners.iter().filter(|c| c.2.abs() <= tol).map(|c| c.1).collect();
    for &(i, j) in &super::primitive::BOX_EDGES {
        let (a, c) = (corners[i], corners[j]);
        if (a.2 < -tol && c.2 > tol) || (a.2 > tol && c.2 < -tol) {
            pts.push(edge_crossing(a, c));
        }
    }
    if pts.len() < 3 {
        return Vec::new();
    }
    let center = pts.iter().fold(Vector3::zeros(), |acc, p| acc + p.coords) / pts.len() as f64;
    let n = hs.normal.normalize();
    let helper = if n.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let e1 = n.cross(&helper).normalize();
    let e2 = n.cross(&e1);
    pts.sort_by(|a, b| {
        let (da, db) = (a.coords - center, b.coords - center);
        let ta = da.dot(&e2).atan2(da.dot(&e1));
        let tb = db.dot(&e2).atan2(db.dot(&e1));
        ta.total_cmp(&tb)
    });
    pts
}

fn fan(b: &mut MeshBuilder, poly: &[Point3<f64>]) {
    for k in 1..poly.len().saturating_sub(1) {
        b.triangle(poly[0], poly[k], poly[k + 1]);
    }
}

fn angular_samples(iv: Interval, per_turn: f64, full_turn: bool) -> Vec<f64> {
    let n = ((per_turn * iv.len() / TAU) - 1e-9).ceil().max(1.0) as usize;
    let step = iv.len() / n as f64;
    let mut out: Vec<f64> = (0..n).map(|k| iv.lo + step * k as f64).collect();
    out.push(if full_turn { iv.lo } else { iv.hi });
    out
}

/// Emits the six faces of a parameter box `[a] x [b] x [c]` mapped through
/// `map`. Faces come out with consistent orientation in parameter space, so the
/// builder's final sign check makes the whole shell outward.
fn parameter_box(
    b: &mut MeshBuilder,
    samples: [&[f64]; 3],
    skip_axis_faces: [bool; 3],
    map: impl Fn(f64, f64, f64) -> Point3<f64>,
) {
    let at = |p: [f64; 3]| map(p[0], p[1], p[2]);
    for axis in 0..3 {
        if skip_axis_faces[axis] {
            continue;
        }
        let (i, j) = ((axis + 1) % 3, (axis + 2) % 3);
        let (si, sj) = (samples[i], samples[j]);
        let sk = samples[axis];
        for side in 0..2 {
            let fixed = if side == 0 { sk[0] } else { sk[sk.len() - 1] };
            for a in 0..si.len() - 1 {
                for c in 0..sj.len() - 1 {
                    let param = |u: usize, v: usize| {
                        let mut p = [0.0; 3];
                        p[axis] = fixed;
                        p[i] = si[u];
                        p[j] = sj[v];
                        at(p)
                    };
                    let q = [param(a, c), param(a + 1, c), param(a + 1, c + 1), param(a, c + 1)];
                    if side == 1 {
                        b.quad(q[0], q[1], q[2], q[3]);
                    } else {
                        b.quad(q[3], q[2], q[1], q[0]);
                    }
                }
            }
        }
    }
}

fn cylindrical(c: &CylindricalExtent, segments: usize) -> TriMesh {
    let full = c.is_full_turn();
    let radial = [c.radial.lo, c.radial.hi];
    let thetas = angular_samples(c.theta, segments as f64, full);
    let mut heights = vec![c.height.lo];
    heights.extend(c.inner_kink());
    heights.push(c.height.hi);
    let tiny = 1e-12 * c.radial.hi;
    let radius = |u: f64, y: f64| {
        let r = u + c.taper * (y - c.reference);
        if r <= tiny {
            0.0
        } else {
            r
        }
    };
    let mut b = MeshBuilder::default();
    parameter_box(&mut b, [&radial, &thetas, &heights], [false, full, false], |u, t, y| {
        cylindrical_point(radius(u, y), t, y)
    });
    b.finish()
}

fn spherical(s: &SphericalExtent, segments: usize) -> TriMesh {
    let full = s.theta.len() >= TAU - super::primitive::ANGLE_TOL;
    let radial = [s.radial.lo, s.radial.hi];
    let thetas = angular_samples(s.theta, segments as f64, full);
    let phis = angular_samples(s.phi, segments as f64, false);
    let mut b = MeshBuilder::default();
    parameter_box(&mut b, [&radial, &thetas, &phis], [false, full, false], spherical_point);
    b.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mesh::mesh_volume;
    use crate::geometry::primitive::Axis;
    use std::f64::consts::PI;

    fn cylinder(r: f64, h: f64) -> PrimitiveDescriptor {
        PrimitiveDescriptor::cylindrical(CylindricalExtent {
            radial: Interval::new(0.0, r),
            theta: Interval::new(0.0, TAU),
            height: Interval::new(-h / 2.0, h / 2.0),
            taper: 0.0,
            reference: -h / 2.0,
        })
    }

    #[test]
    fn unit_box_has_cube_topology() {
        let d = PrimitiveDescriptor::euclidean(Vector3::new(-0.5, -0.5, -0.5), Vector3::new(0.5, 0.5, 0.5), None);
        let m = tessellate(&d, 32);
        assert_eq!(m.vertices.len(), 8);
        assert_eq!(m.faces.len(), 12);
        assert!((mesh_volume(&m).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inscribed_prism_volume() {
        let m = tessellate(&cylinder(1.0, 1.0), 32);
        let n = 32.0;
        let expected = n / 2.0 * (TAU / n).sin();
        assert!((mesh_volume(&m).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn half_cylinder_is_closed_sphere_like() {
        let half = cylinder(1.0, 1.0).restrict(Axis::Theta, Interval::new(0.0, PI));
        let m = tessellate(&half, 32);
        assert!(m.is_watertight());
        let chi = m.vertices.len() as i64 - (m.faces.len() as i64 * 3 / 2) + m.faces.len() as i64;
        assert_eq!(chi, 2);
    }
}
