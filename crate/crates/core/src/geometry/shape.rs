use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use nalgebra::{Point3, Vector3};

use super::appearance::Appearance;
use super::frame::Frame;
use super::mesh::TriMesh;
use super::primitive::{
    normalize_name, Axis, CoordSystem, CylindricalExtent, HalfSpace, Interval, PrimitiveDescriptor, PrimitiveKind,
    SphericalExtent, ANGLE_TOL,
};
use super::tessellate::{default_segments, tessellate};
use super::GeometryError;

/// Relative tolerance on the sum of split sizes.
pub const SPLIT_TOLERANCE: f64 = 1e-6;
/// Repeat children thinner than this (model units) are dropped.
pub const MIN_PIECE: f64 = 1e-9;
pub const MAX_REPEAT_CHILDREN: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Primitive(PrimitiveDescriptor),
    /// Result of a Boolean; vertices are in the local space of the frame.
    Mesh(Arc<TriMesh>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Shape {
    pub geometry: Geometry,
    pub frame: Frame,
    pub appearance: Appearance,
    pub is_void: bool,
    pub symbol: String,
}

impl Shape {
    pub fn from_descriptor(desc: PrimitiveDescriptor) -> Self {
        Self {
            geometry: Geometry::Primitive(desc),
            frame: Frame::identity(),
            appearance: Appearance::new(),
            is_void: false,
            symbol: String::new(),
        }
    }

    pub fn from_mesh(mesh: TriMesh) -> Self {
        Self {
            geometry: Geometry::Mesh(Arc::new(mesh)),
            frame: Frame::identity(),
            appearance: Appearance::new(),
            is_void: false,
            symbol: String::new(),
        }
    }

    /// The unit cube centered at the origin that seeds every derivation.
    pub fn unit_cube() -> Self {
        Self::from_descriptor(PrimitiveDescriptor::euclidean(Vector3::repeat(-0.5), Vector3::repeat(0.5), None))
    }

    pub fn descriptor(&self) -> Option<&PrimitiveDescriptor> {
        match &self.geometry {
            Geometry::Primitive(d) => Some(d),
            Geometry::Mesh(_) => None,
        }
    }

    pub fn kind(&self) -> Option<PrimitiveKind> {
        self.descriptor().map(PrimitiveDescriptor::kind)
    }

    pub fn coord_system(&self) -> Option<CoordSystem> {
        self.descriptor().map(PrimitiveDescriptor::coord_system)
    }

    pub fn is_mesh(&self) -> bool {
        matches!(self.geometry, Geometry::Mesh(_))
    }

    /// Analytic volume for primitives, divergence volume for meshes.
    pub fn volume(&self) -> f64 {
        let local = match &self.geometry {
            Geometry::Primitive(d) => d.volume(),
            Geometry::Mesh(m) => m.signed_volume(),
        };
        local * self.frame.determinant_scale()
    }

    /// World-space triangulation carrying this shape's appearance.
    pub fn triangulate(&self, segments: usize) -> TriMesh {
        let mut mesh = match &self.geometry {
            Geometry::Primitive(d) => tessellate(d, segments),
            Geometry::Mesh(m) => (**m).clone(),
        };
        let frame = &self.frame;
        mesh.map_vertices(|p| frame.to_world(p));
        if !matches!(self.geometry, Geometry::Mesh(_)) || mesh.materials.is_empty() {
            mesh = mesh.with_material(self.appearance.clone());
        }
        mesh
    }

    /// Bounds of the untransformed geometry.
    pub fn local_bounds(&self) -> (Point3<f64>, Point3<f64>) {
        match &self.geometry {
            Geometry::Primitive(d) => d.local_bounds(),
            Geometry::Mesh(m) => m.bounds().unwrap_or((Point3::origin(), Point3::origin())),
        }
    }

    /// Scope extents: local bounds scaled by the frame (rotation ignored).
    pub fn dims(&self) -> Vector3<f64> {
        let (lo, hi) = self.local_bounds();
        (hi - lo).component_mul(&self.frame.scale)
    }

    /// Largest outer radius, in model units.
    pub fn radius(&self) -> Option<f64> {
        self.descriptor()?.outer_radius().map(|r| r * self.frame.scale.x)
    }

    pub fn inner_radius(&self) -> Option<f64> {
        self.descriptor()?.inner_radius().map(|r| r * self.frame.scale.x)
    }

    /// Extent of `axis` in model units (radians for angular axes).
    pub fn axis_extent(&self, axis: Axis) -> Option<f64> {
        let desc = self.descriptor()?;
        let iv = desc.axis_interval(axis)?;
        Some(iv.len() * axis_factor(&self.frame, desc.coord_system(), axis))
    }

    /// World-axis-aligned bounds of the triangulation at the default segment count.
    pub fn world_bounds(&self) -> (Point3<f64>, Point3<f64>) {
        self.world_bounds_at(default_segments())
    }

    pub fn world_bounds_at(&self, segments: usize) -> (Point3<f64>, Point3<f64>) {
        self.triangulate(segments).bounds().unwrap_or((Point3::origin(), Point3::origin()))
    }

    pub fn world_center(&self) -> Point3<f64> {
        let (lo, hi) = self.local_bounds();
        self.frame.to_world(&nalgebra::center(&lo, &hi))
    }

    /// Matches a kind name or one of the coordinate-system names.
    pub fn is_instance_of(&self, name: &str) -> bool {
        let Some(desc) = self.descriptor() else {
            return false;
        };
        let key = normalize_name(name);
        if key == normalize_name(desc.coord_system().namespace_name()) {
            return true;
        }
        PrimitiveKind::from_name(name) == Some(desc.kind())
    }

    pub fn apply_scale(&self, sx: f64, sy: f64, sz: f64) -> Result<Shape, GeometryError> {
        for v in [sx, sy, sz] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(GeometryError::NonPositiveScale(v));
            }
        }
        let (lo, hi) = self.local_bounds();
        let c = nalgebra::center(&lo, &hi).coords;
        let mut out = self.clone();
        let old = out.frame.scale;
        out.frame.scale = old.component_mul(&Vector3::new(sx, sy, sz));
        out.frame.translation += out.frame.rotation * (old - out.frame.scale).component_mul(&c);
        Ok(out)
    }

    /// Euler rotation (x, then y, then z) about the frame origin.
    pub fn apply_rotate(&self, rx: f64, ry: f64, rz: f64) -> Shape {
        let mut out = self.clone();
        out.frame.rotation = Frame::euler_xyz(rx, ry, rz) * out.frame.rotation;
        out
    }

    pub fn apply_translate(&self, tx: f64, ty: f64, tz: f64) -> Shape {
        let mut out = self.clone();
        out.frame.translation += Vector3::new(tx, ty, tz);
        out
    }

    /// The world-axis-aligned box enclosing this shape's triangulation.
    pub fn bounding_box(&self) -> Shape {
        let (lo, hi) = self.world_bounds();
        let half = (hi - lo) / 2.0;
        let mut out = Shape::from_descriptor(PrimitiveDescriptor::euclidean(-half, half, None));
        out.frame.translation = nalgebra::center(&lo, &hi).coords;
        out.appearance = self.appearance.clone();
        out.symbol = self.symbol.clone();
        out
    }

    fn with_descriptor(&self, desc: PrimitiveDescriptor) -> Shape {
        Shape {
            geometry: Geometry::Primitive(desc),
            frame: self.frame.clone(),
            appearance: self.appearance.clone(),
            is_void: false,
            symbol: String::new(),
        }
    }
}

fn axis_factor(frame: &Frame, system: CoordSystem, axis: Axis) -> f64 {
    match (system, axis) {
        (_, Axis::Theta | Axis::Phi) => 1.0,
        (_, Axis::X | Axis::R) => frame.scale.x,
        (_, Axis::Y) => frame.scale.y,
        (_, Axis::Z) => frame.scale.z,
    }
}

fn check_axis(shape: &Shape, axis: Axis) -> Result<(&PrimitiveDescriptor, Interval, f64), GeometryError> {
    let desc = shape.descriptor().ok_or(GeometryError::MeshNotSplittable)?;
    let system = desc.coord_system();
    let iv = desc
        .axis_interval(axis)
        .filter(|_| system.has_axis(axis))
        .ok_or(GeometryError::AxisNotInSystem { axis, system })?;
    Ok((desc, iv, axis_factor(&shape.frame, system, axis)))
}

fn check_sizes(sizes: &[f64]) -> Result<(), GeometryError> {
    if sizes.is_empty() {
        return Err(GeometryError::EmptySizes);
    }
    for &s in sizes {
        if !(s > 0.0 && s.is_finite()) {
            return Err(GeometryError::NonPositiveSize(s));
        }
    }
    Ok(())
}

/// Partitions `shape` along `axis` into pieces of the given sizes.
pub fn split_shape(shape: &Shape, axis: Axis, sizes: &[f64]) -> Result<Vec<Shape>, GeometryError> {
    let (desc, iv, factor) = check_axis(shape, axis)?;
    check_sizes(sizes)?;
    let extent = iv.len() * factor;
    let total: f64 = sizes.iter().sum();
    if (total - extent).abs() > SPLIT_TOLERANCE * extent {
        return Err(GeometryError::SizeSumMismatch { axis, expected: extent, got: total });
    }
    let mut bounds = Vec::with_capacity(sizes.len() + 1);
    let mut acc = 0.0;
    bounds.push(iv.lo);
    for s in &sizes[..sizes.len() - 1] {
        acc += s;
        bounds.push((iv.lo + acc / factor).min(iv.hi));
    }
    bounds.push(iv.hi);
    Ok(bounds.windows(2).map(|w| shape.with_descriptor(desc.restrict(axis, Interval::new(w[0], w[1])))).collect())
}

/// Tiles `axis` with the repeating `sizes` pattern, starting at `-offset`.
/// Pieces are clipped to the extent and pieces thinner than [`MIN_PIECE`] are
/// dropped.
pub fn repeat_shape(shape: &Shape, axis: Axis, sizes: &[f64], offset: f64) -> Result<Vec<Shape>, GeometryError> {
    let (desc, iv, factor) = check_axis(shape, axis)?;
    check_sizes(sizes)?;
    let period: f64 = sizes.iter().sum();
    if !(offset >= 0.0 && offset < period) {
        return Err(GeometryError::InvalidOffset { offset, period });
    }
    let extent = iv.len() * factor;
    let mut prefix = vec![0.0];
    for s in sizes {
        prefix.push(prefix.last().unwrap() + s);
    }
    let position = |k: usize| -> f64 {
        let (cycle, rem) = (k / sizes.len(), k % sizes.len());
        -offset + cycle as f64 * period + prefix[rem]
    };

    // cut positions in model units, strictly inside (0, extent)
    let mut cuts = vec![0.0];
    let mut k = 1;
    loop {
        let p = position(k);
        if p >= extent - MIN_PIECE {
            break;
        }
        if p > MIN_PIECE && p - cuts.last().unwrap() >= MIN_PIECE {
            cuts.push(p);
            if cuts.len() > MAX_REPEAT_CHILDREN {
                return Err(GeometryError::RepeatLimit(MAX_REPEAT_CHILDREN));
            }
        }
        k += 1;
    }
    let mut bounds: Vec<f64> = cuts.iter().map(|c| iv.lo + c / factor).collect();
    bounds.push(iv.hi);
    Ok(bounds.windows(2).map(|w| shape.with_descriptor(desc.restrict(axis, Interval::new(w[0], w[1])))).collect())
}

/// Number of pieces [`repeat_shape`] produces for a uniform pattern.
pub fn repeat_count(extent: f64, size: f64, offset: f64) -> usize {
    ((extent + offset) / size - MIN_PIECE / size).ceil() as usize
}

fn expect_arity(kind: PrimitiveKind, params: &[f64], names: &[&str]) -> Result<(), GeometryError> {
    if params.len() != names.len() {
        return Err(GeometryError::ArityMismatch {
            kind: kind.name().to_string(),
            expected: names.len(),
            got: params.len(),
        });
    }
    for (v, n) in params.iter().zip(names) {
        if !(*v > 0.0 && v.is_finite()) {
            return Err(GeometryError::NonPositiveDimension {
                kind: kind.name().to_string(),
                param: n.to_string(),
                value: *v,
            });
        }
    }
    Ok(())
}

fn invalid(kind: PrimitiveKind, msg: &str) -> GeometryError {
    GeometryError::InvalidParameter(format!("{kind}: {msg}"))
}

fn centered_box(w: f64, h: f64, d: f64) -> (Vector3<f64>, Vector3<f64>) {
    let half = Vector3::new(w, h, d) / 2.0;
    (-half, half)
}

/// Shifts a Euclidean descriptor so its bounding box is centered on the origin.
fn recenter(desc: PrimitiveDescriptor) -> PrimitiveDescriptor {
    match desc {
        PrimitiveDescriptor::Euclidean { lo, hi, cut } => {
            let c = (lo + hi) / 2.0;
            PrimitiveDescriptor::Euclidean {
                lo: lo - c,
                hi: hi - c,
                cut: cut.map(|hs| HalfSpace { normal: hs.normal, offset: hs.offset - hs.normal.dot(&c) }),
            }
        }
        other => other,
    }
}

fn rotary(r_in: f64, r_top: f64, r_bottom: f64, h: f64, theta: f64) -> PrimitiveDescriptor {
    let taper = (r_top - r_bottom) / h;
    let (reference, outer) = if r_top > r_bottom { (h / 2.0, r_top) } else { (-h / 2.0, r_bottom) };
    PrimitiveDescriptor::cylindrical(CylindricalExtent {
        radial: Interval::new(r_in, outer),
        theta: Interval::new(0.0, theta.min(TAU)),
        height: Interval::new(-h / 2.0, h / 2.0),
        taper,
        reference,
    })
}

fn spherical(r_in: f64, r: f64, theta: f64, phi: f64) -> PrimitiveDescriptor {
    PrimitiveDescriptor::spherical(SphericalExtent {
        radial: Interval::new(r_in, r),
        theta: Interval::new(0.0, theta.min(TAU)),
        phi: Interval::new(0.0, phi),
    })
}

fn tetra_cut(lo: Vector3<f64>, hi: Vector3<f64>) -> HalfSpace {
    let s = hi - lo;
    let n = Vector3::new(s.y * s.z, s.x * s.z, s.x * s.y);
    HalfSpace { normal: n, offset: s.x * s.y * s.z + n.dot(&lo) }
}

/// Instantiates a primitive by kind name. Base kinds take their usual
/// dimensions; derived kinds take extra interval parameters.
pub fn make_primitive(kind_name: &str, params: &[f64]) -> Result<Shape, GeometryError> {
    use PrimitiveKind as K;
    let kind = PrimitiveKind::from_name(kind_name).ok_or_else(|| GeometryError::UnknownKind(kind_name.to_string()))?;
    let p = params;
    let desc = match kind {
        K::Box => {
            expect_arity(kind, p, &["w", "h", "d"])?;
            let (lo, hi) = centered_box(p[0], p[1], p[2]);
            PrimitiveDescriptor::euclidean(lo, hi, None)
        }
        K::Ramp => {
            expect_arity(kind, p, &["w", "h", "d"])?;
            let (lo, hi) = centered_box(p[0], p[1], p[2]);
            let (h, d) = (p[1], p[2]);
            let n = Vector3::new(0.0, d, h);
            PrimitiveDescriptor::euclidean(lo, hi, Some(HalfSpace { normal: n, offset: h * d + n.dot(&lo) }))
        }
        K::RampFrustumX => {
            expect_arity(kind, p, &["w", "h", "d", "h2"])?;
            let (h, d, h2) = (p[1], p[2], p[3]);
            if h2 >= h {
                return Err(invalid(kind, "h2 must be smaller than h"));
            }
            let (lo, hi) = centered_box(p[0], h, d);
            let n = Vector3::new(0.0, d, h - h2);
            PrimitiveDescriptor::euclidean(lo, hi, Some(HalfSpace { normal: n, offset: h * d + n.dot(&lo) }))
        }
        K::RampFrustumY => {
            expect_arity(kind, p, &["w", "h", "d", "a", "b"])?;
            let (h, d, a, b) = (p[1], p[2], p[3], p[4]);
            if a >= h || b >= d {
                return Err(invalid(kind, "chamfer must be smaller than the box"));
            }
            let (lo, hi) = centered_box(p[0], h, d);
            let n = Vector3::new(0.0, b, a);
            let offset = a * b + b * (hi.y - a) + a * (hi.z - b);
            PrimitiveDescriptor::euclidean(lo, hi, Some(HalfSpace { normal: n, offset }))
        }
        K::Tetrahedron => {
            expect_arity(kind, p, &["w", "h", "d"])?;
            let (lo, hi) = centered_box(p[0], p[1], p[2]);
            PrimitiveDescriptor::euclidean(lo, hi, Some(tetra_cut(lo, hi)))
        }
        K::TetraFrustum => {
            expect_arity(kind, p, &["w", "h", "d", "k"])?;
            if p[3] >= p[1] {
                return Err(invalid(kind, "k must be smaller than h"));
            }
            let (lo, hi) = centered_box(p[0], p[1], p[2]);
            let tetra = PrimitiveDescriptor::euclidean(lo, hi, Some(tetra_cut(lo, hi)));
            recenter(tetra.restrict(Axis::Y, Interval::new(lo.y, lo.y + p[3])))
        }
        K::TetraFrustumSector => {
            expect_arity(kind, p, &["w", "h", "d", "a", "b", "c"])?;
            let (a, b, c) = (p[3], p[4], p[5]);
            if a >= p[0] || b >= p[1] || c >= p[2] {
                return Err(invalid(kind, "corner cut must be smaller than the box"));
            }
            let (lo, hi) = centered_box(p[0], p[1], p[2]);
            let n = Vector3::new(b * c, a * c, a * b);
            let offset = n.dot(&hi) - a * b * c;
            PrimitiveDescriptor::euclidean(lo, hi, Some(HalfSpace { normal: n, offset }))
        }
        K::Cylinder => {
            expect_arity(kind, p, &["r", "h"])?;
            rotary(0.0, p[0], p[0], p[1], TAU)
        }
        K::CylinderSector => {
            expect_arity(kind, p, &["r", "h", "theta"])?;
            rotary(0.0, p[0], p[0], p[1], p[2])
        }
        K::Ring => {
            expect_arity(kind, p, &["r_in", "r_out", "h"])?;
            if p[0] >= p[1] {
                return Err(invalid(kind, "r_in must be smaller than r_out"));
            }
            rotary(p[0], p[1], p[1], p[2], TAU)
        }
        K::RingSector => {
            expect_arity(kind, p, &["r_in", "r_out", "h", "theta"])?;
            if p[0] >= p[1] {
                return Err(invalid(kind, "r_in must be smaller than r_out"));
            }
            rotary(p[0], p[1], p[1], p[2], p[3])
        }
        K::Cone => {
            expect_arity(kind, p, &["r", "h"])?;
            rotary(0.0, 0.0, p[0], p[1], TAU)
        }
        K::ConeSector => {
            expect_arity(kind, p, &["r", "h", "theta"])?;
            rotary(0.0, 0.0, p[0], p[1], p[2])
        }
        K::ConicFrustum => {
            expect_arity(kind, p, &["r_top", "r_bottom", "h"])?;
            rotary(0.0, p[0], p[1], p[2], TAU)
        }
        K::FrustumSector => {
            expect_arity(kind, p, &["r_top", "r_bottom", "h", "theta"])?;
            rotary(0.0, p[0], p[1], p[2], p[3])
        }
        K::HollowFrustum => {
            expect_arity(kind, p, &["r_top", "r_bottom", "h", "thickness"])?;
            let outer = p[0].max(p[1]);
            if p[3] >= outer {
                return Err(invalid(kind, "thickness must be smaller than the larger radius"));
            }
            rotary(outer - p[3], p[0], p[1], p[2], TAU)
        }
        K::Sphere => {
            expect_arity(kind, p, &["r"])?;
            spherical(0.0, p[0], TAU, PI)
        }
        K::SphereShell => {
            expect_arity(kind, p, &["r_in", "r_out"])?;
            if p[0] >= p[1] {
                return Err(invalid(kind, "r_in must be smaller than r_out"));
            }
            spherical(p[0], p[1], TAU, PI)
        }
        K::SphereWedge => {
            expect_arity(kind, p, &["r", "theta", "phi"])?;
            if p[2] > PI + ANGLE_TOL {
                return Err(invalid(kind, "phi span exceeds π"));
            }
            spherical(0.0, p[0], p[1], p[2].min(PI))
        }
    };
    let theta_param = match kind {
        K::CylinderSector | K::ConeSector => Some(p[2]),
        K::RingSector | K::FrustumSector => Some(p[3]),
        K::SphereWedge => Some(p[1]),
        _ => None,
    };
    if theta_param.is_some_and(|t| t > TAU + ANGLE_TOL) {
        return Err(invalid(kind, "theta span exceeds 2π"));
    }
    let is_derived = kind.base() != kind;
    if is_derived && desc.kind() != kind {
        return Err(invalid(kind, &format!("parameters describe a {}", desc.kind())));
    }
    Ok(Shape::from_descriptor(desc))
}
