//! Split-closed volumetric primitive descriptors.
//!
//! Every primitive lives in one of three coordinate systems and is stored as
//! a box of per-axis intervals in that system, plus at most one linear
//! constraint:
//!
//! * Euclidean shapes are an axis box intersected with an optional half-space.
//!   A half-space whose normal has one zero component is a prism (the ramp
//!   family); with no zero component it chops a corner (the tetrahedron
//!   family).
//! * Cylindrical shapes use a sheared radial coordinate `u = r - taper * (y - reference)`,
//!   so that radial cuts run parallel to a sloped lateral surface and radial
//!   sizes measure wall thickness. The physical inner radius is clamped at the
//!   axis.
//! * Spherical shapes are plain `(r, theta, phi)` boxes.
//!
//! Cutting any of these boxes along one of its axes yields another box of the
//! same form, which is what makes the family closed under split and repeat.

use std::f64::consts::{PI, TAU};
use std::fmt;

use nalgebra::{Point3, Vector3};

/// Slack allowed when testing angular spans against 2π / π.
pub const ANGLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoordSystem {
    Euclidean,
    Cylindrical,
    Spherical,
}

impl CoordSystem {
    pub fn axes(self) -> [Axis; 3] {
        match self {
            CoordSystem::Euclidean => [Axis::X, Axis::Y, Axis::Z],
            CoordSystem::Cylindrical => [Axis::R, Axis::Theta, Axis::Y],
            CoordSystem::Spherical => [Axis::R, Axis::Theta, Axis::Phi],
        }
    }

    pub fn has_axis(self, axis: Axis) -> bool {
        self.axes().contains(&axis)
    }

    /// The `instanceof` name that matches every shape in this system.
    pub fn namespace_name(self) -> &'static str {
        match self {
            CoordSystem::Euclidean => "CartesianShape",
            CoordSystem::Cylindrical => "RotaryShape",
            CoordSystem::Spherical => "SphericalShape",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CoordSystem::Euclidean => "euclidean",
            CoordSystem::Cylindrical => "cylindrical",
            CoordSystem::Spherical => "spherical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
    R,
    Theta,
    Phi,
}

impl Axis {
    pub fn from_name(name: &str) -> Option<Axis> {
        match name {
            "x" | "X" => Some(Axis::X),
            "y" | "Y" => Some(Axis::Y),
            "z" | "Z" => Some(Axis::Z),
            "r" | "R" => Some(Axis::R),
            "theta" => Some(Axis::Theta),
            "phi" => Some(Axis::Phi),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
            Axis::R => "r",
            Axis::Theta => "theta",
            Axis::Phi => "phi",
        }
    }

    pub fn is_angular(self) -> bool {
        matches!(self, Axis::Theta | Axis::Phi)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The nineteen instantiable primitive kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrimitiveKind {
    Box,
    Ramp,
    /// Ramp prism whose cross-section is a quadrilateral.
    RampFrustumX,
    /// Ramp prism whose cross-section is a pentagon (a chamfered box).
    RampFrustumY,
    Cylinder,
    CylinderSector,
    Ring,
    RingSector,
    Cone,
    ConeSector,
    ConicFrustum,
    FrustumSector,
    HollowFrustum,
    Tetrahedron,
    /// Corner-cut box with six vertices (a tetrahedron with one vertex cut off).
    TetraFrustum,
    /// Any other corner-cut box.
    TetraFrustumSector,
    Sphere,
    SphereShell,
    SphereWedge,
}

impl PrimitiveKind {
    pub const ALL: [PrimitiveKind; 19] = [
        PrimitiveKind::Box,
        PrimitiveKind::Ramp,
        PrimitiveKind::RampFrustumX,
        PrimitiveKind::RampFrustumY,
        PrimitiveKind::Cylinder,
        PrimitiveKind::CylinderSector,
        PrimitiveKind::Ring,
        PrimitiveKind::RingSector,
        PrimitiveKind::Cone,
        PrimitiveKind::ConeSector,
        PrimitiveKind::ConicFrustum,
        PrimitiveKind::FrustumSector,
        PrimitiveKind::HollowFrustum,
        PrimitiveKind::Tetrahedron,
        PrimitiveKind::TetraFrustum,
        PrimitiveKind::TetraFrustumSector,
        PrimitiveKind::Sphere,
        PrimitiveKind::SphereShell,
        PrimitiveKind::SphereWedge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PrimitiveKind::Box => "box",
            PrimitiveKind::Ramp => "ramp",
            PrimitiveKind::RampFrustumX => "ramp-frustum-x",
            PrimitiveKind::RampFrustumY => "ramp-frustum-y",
            PrimitiveKind::Cylinder => "cylinder",
            PrimitiveKind::CylinderSector => "cylinder-sector",
            PrimitiveKind::Ring => "ring",
            PrimitiveKind::RingSector => "ring-sector",
            PrimitiveKind::Cone => "cone",
            PrimitiveKind::ConeSector => "cone-sector",
            PrimitiveKind::ConicFrustum => "conicfrustum",
            PrimitiveKind::FrustumSector => "frustum-sector",
            PrimitiveKind::HollowFrustum => "hollow-frustum",
            PrimitiveKind::Tetrahedron => "tetrahedron",
            PrimitiveKind::TetraFrustum => "tetra-frustum",
            PrimitiveKind::TetraFrustumSector => "tetra-frustum-sector",
            PrimitiveKind::Sphere => "sphere",
            PrimitiveKind::SphereShell => "sphere-shell",
            PrimitiveKind::SphereWedge => "sphere-wedge",
        }
    }

    /// CamelCase name used on the right of `instanceof`.
    pub fn namespace_name(self) -> &'static str {
        match self {
            PrimitiveKind::Box => "Box",
            PrimitiveKind::Ramp => "Ramp",
            PrimitiveKind::RampFrustumX => "RampFrustumX",
            PrimitiveKind::RampFrustumY => "RampFrustumY",
            PrimitiveKind::Cylinder => "Cylinder",
            PrimitiveKind::CylinderSector => "CylinderSector",
            PrimitiveKind::Ring => "Ring",
            PrimitiveKind::RingSector => "RingSector",
            PrimitiveKind::Cone => "Cone",
            PrimitiveKind::ConeSector => "ConeSector",
            PrimitiveKind::ConicFrustum => "ConicFrustum",
            PrimitiveKind::FrustumSector => "FrustumSector",
            PrimitiveKind::HollowFrustum => "HollowFrustum",
            PrimitiveKind::Tetrahedron => "Tetrahedron",
            PrimitiveKind::TetraFrustum => "TetraFrustum",
            PrimitiveKind::TetraFrustumSector => "TetraFrustumSector",
            PrimitiveKind::Sphere => "Sphere",
            PrimitiveKind::SphereShell => "SphereShell",
            PrimitiveKind::SphereWedge => "SphereWedge",
        }
    }

    /// Accepts `conicfrustum`, `ConicFrustum`, `cylinder-sector`, `cylinder_sector`, ...
    pub fn from_name(name: &str) -> Option<PrimitiveKind> {
        let key = normalize_name(name);
        Self::ALL.into_iter().find(|k| normalize_name(k.name()) == key)
    }

    pub fn coord_system(self) -> CoordSystem {
        use PrimitiveKind::*;
        match self {
            Box | Ramp | RampFrustumX | RampFrustumY | Tetrahedron | TetraFrustum | TetraFrustumSector => {
                CoordSystem::Euclidean
            }
            Cylinder | CylinderSector | Ring | RingSector | Cone | ConeSector | ConicFrustum | FrustumSector
            | HollowFrustum => CoordSystem::Cylindrical,
            Sphere | SphereShell | SphereWedge => CoordSystem::Spherical,
        }
    }

    /// The basic primitive this kind is derived from by splitting.
    pub fn base(self) -> PrimitiveKind {
        use PrimitiveKind::*;
        match self {
            Box => Box,
            Ramp | RampFrustumX | RampFrustumY => Ramp,
            Cylinder | CylinderSector | Ring | RingSector => Cylinder,
            Cone | ConeSector | ConicFrustum | FrustumSector | HollowFrustum => Cone,
            Tetrahedron | TetraFrustum | TetraFrustumSector => Tetrahedron,
            Sphere | SphereShell | SphereWedge => Sphere,
        }
    }
}

impl fmt::Display for PrimitiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The 22 names usable on the right of `instanceof`: one per coordinate
/// system plus one per primitive kind.
pub fn namespace_names() -> Vec<&'static str> {
    let systems = [CoordSystem::Euclidean, CoordSystem::Cylindrical, CoordSystem::Spherical];
    systems.iter().map(|c| c.namespace_name()).chain(PrimitiveKind::ALL.iter().map(|k| k.namespace_name())).collect()
}

/// Whether `name` resolves to one of [`namespace_names`].
pub fn is_namespace_name(name: &str) -> bool {
    let key = normalize_name(name);
    namespace_names().iter().any(|n| normalize_name(n) == key)
}

pub(crate) fn normalize_name(name: &str) -> String {
    name.chars().filter(|c| *c != '-' && *c != '_').map(|c| c.to_ascii_lowercase()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Keeps the points with `normal · p <= offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfSpace {
    pub normal: Vector3<f64>,
    pub offset: f64,
}

impl HalfSpace {
    pub fn signed_distance(&self, p: &Point3<f64>) -> f64 {
        self.normal.dot(&p.coords) - self.offset
    }

    fn zero_components(&self) -> usize {
        let scale = self.normal.amax();
        self.normal.iter().filter(|c| c.abs() <= 1e-12 * scale).count()
    }
}

/// Sheared cylindrical extents.
///
/// Outer radius at height `y` is `radial.hi + taper * (y - reference)`; inner
/// radius is `max(0, radial.lo + taper * (y - reference))`. After
/// normalization `reference` sits at the end of `height` where the outer radius
/// is largest, so `radial.hi` is the maximum outer radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylindricalExtent {
    pub radial: Interval,
    pub theta: Interval,
    pub height: Interval,
    pub taper: f64,
    pub reference: f64,
}

impl CylindricalExtent {
    pub fn outer_at(&self, y: f64) -> f64 {
        self.radial.hi + self.taper * (y - self.reference)
    }

    pub fn inner_at(&self, y: f64) -> f64 {
        (self.radial.lo + self.taper * (y - self.reference)).max(0.0)
    }

    /// Height at which the inner surface meets the axis, if it does so strictly
    /// inside the height interval.
    pub fn inner_kink(&self) -> Option<f64> {
        if self.radial.lo <= 0.0 || self.taper == 0.0 {
            return None;
        }
        let y = self.reference - self.radial.lo / self.taper;
        let eps = 1e-12 * self.height.len().max(1.0);
        (y > self.height.lo + eps && y < self.height.hi - eps).then_some(y)
    }

    pub fn is_full_turn(&self) -> bool {
        self.theta.len() >= TAU - ANGLE_TOL
    }

    fn normalized(mut self) -> Self {
        if self.taper != 0.0 {
            let y_zero = self.reference - self.radial.hi / self.taper;
            if self.taper < 0.0 && y_zero < self.height.hi {
                self.height.hi = y_zero;
            } else if self.taper > 0.0 && y_zero > self.height.lo {
                self.height.lo = y_zero;
            }
        }
        let new_ref = if self.taper > 0.0 { self.height.hi } else { self.height.lo };
        let shift = self.taper * (new_ref - self.reference);
        self.radial.hi += shift;
        let lo = self.radial.lo + shift;
        self.radial.lo = if lo <= 1e-12 * self.radial.hi { 0.0 } else { lo };
        self.reference = new_ref;
        self
    }

    fn volume(&self) -> f64 {
        let y0 = self.height.lo;
        let y1 = self.height.hi;
        let outer = integrate_square_linear(self.outer_at(y0), self.outer_at(y1), y1 - y0);
        let inner = if self.radial.lo <= 0.0 {
            0.0
        } else {
            let lin = |y: f64| self.radial.lo + self.taper * (y - self.reference);
            match self.inner_kink() {
                Some(k) => {
                    // positive part sits on the reference side of the kink
                    let (a, b) = if self.reference <= k { (y0, k) } else { (k, y1) };
                    integrate_square_linear(lin(a).max(0.0), lin(b).max(0.0), b - a)
                }
                None => {
                    if lin(y0) <= 0.0 && lin(y1) <= 0.0 {
                        0.0
                    } else {
                        integrate_square_linear(lin(y0).max(0.0), lin(y1).max(0.0), y1 - y0)
                    }
                }
            }
        };
        0.5 * self.theta.len() * (outer - inner)
    }
}

/// ∫ f² over an interval of length `len` where f is linear with end values f0, f1.
fn integrate_square_linear(f0: f64, f1: f64, len: f64) -> f64 {
    len * (f0 * f0 + f0 * f1 + f1 * f1) / 3.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalExtent {
    pub radial: Interval,
    pub theta: Interval,
    pub phi: Interval,
}

impl SphericalExtent {
    pub fn is_full(&self) -> bool {
        self.theta.len() >= TAU - ANGLE_TOL && self.phi.len() >= PI - ANGLE_TOL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PrimitiveDescriptor {
    Euclidean { lo: Vector3<f64>, hi: Vector3<f64>, cut: Option<HalfSpace> },
    Cylindrical(CylindricalExtent),
    Spherical(SphericalExtent),
}

impl PrimitiveDescriptor {
    pub fn euclidean(lo: Vector3<f64>, hi: Vector3<f64>, cut: Option<HalfSpace>) -> Self {
        normalize_euclidean(lo, hi, cut)
    }

    pub fn cylindrical(extent: CylindricalExtent) -> Self {
        PrimitiveDescriptor::Cylindrical(extent.normalized())
    }

    pub fn spherical(extent: SphericalExtent) -> Self {
        PrimitiveDescriptor::Spherical(extent)
    }

    pub fn coord_system(&self) -> CoordSystem {
        match self {
            PrimitiveDescriptor::Euclidean { .. } => CoordSystem::Euclidean,
            PrimitiveDescriptor::Cylindrical(_) => CoordSystem::Cylindrical,
            PrimitiveDescriptor::Spherical(_) => CoordSystem::Spherical,
        }
    }

    pub fn kind(&self) -> PrimitiveKind {
        match self {
            PrimitiveDescriptor::Euclidean { lo, hi, cut } => match cut {
                None => PrimitiveKind::Box,
                Some(hs) => {
                    let verts = cut_box_vertices(lo, hi, hs).len();
                    match hs.zero_components() {
                        0 => match verts {
                            4 => PrimitiveKind::Tetrahedron,
                            6 => PrimitiveKind::TetraFrustum,
                            _ => PrimitiveKind::TetraFrustumSector,
                        },
                        1 => match verts / 2 {
                            3 => PrimitiveKind::Ramp,
                            4 => PrimitiveKind::RampFrustumX,
                            _ => PrimitiveKind::RampFrustumY,
                        },
                        _ => PrimitiveKind::Box,
                    }
                }
            },
            PrimitiveDescriptor::Cylindrical(c) => {
                let full = c.is_full_turn();
                let hollow = c.radial.lo > 0.0;
                let tapered = c.taper.abs() > 1e-12;
                if !tapered {
                    match (hollow, full) {
                        (false, true) => PrimitiveKind::Cylinder,
                        (false, false) => PrimitiveKind::CylinderSector,
                        (true, true) => PrimitiveKind::Ring,
                        (true, false) => PrimitiveKind::RingSector,
                    }
                } else if hollow {
                    PrimitiveKind::HollowFrustum
                } else {
                    let far = if c.taper < 0.0 { c.height.hi } else { c.height.lo };
                    let apex = c.outer_at(far) <= 1e-9 * c.radial.hi;
                    match (apex, full) {
                        (true, true) => PrimitiveKind::Cone,
                        (true, false) => PrimitiveKind::ConeSector,
                        (false, true) => PrimitiveKind::ConicFrustum,
                        (false, false) => PrimitiveKind::FrustumSector,
                    }
                }
            }
            PrimitiveDescriptor::Spherical(s) => {
                if !s.is_full() {
                    PrimitiveKind::SphereWedge
                } else if s.radial.lo > 0.0 {
                    PrimitiveKind::SphereShell
                } else {
                    PrimitiveKind::Sphere
                }
            }
        }
    }

    /// Closed-form volume in local (unscaled) units.
    pub fn volume(&self) -> f64 {
        match self {
            PrimitiveDescriptor::Euclidean { lo, hi, cut } => match cut {
                None => (hi - lo).product(),
                Some(hs) => cut_box_volume(lo, hi, hs),
            },
            PrimitiveDescriptor::Cylindrical(c) => c.volume(),
            PrimitiveDescriptor::Spherical(s) => {
                let r3 = s.radial.hi.powi(3) - s.radial.lo.powi(3);
                s.theta.len() * r3 * (s.phi.lo.cos() - s.phi.hi.cos()) / 3.0
            }
        }
    }

    /// Interval of the descriptor along `axis`, in local units.
    pub fn axis_interval(&self, axis: Axis) -> Option<Interval> {
        match (self, axis) {
            (PrimitiveDescriptor::Euclidean { lo, hi, .. }, Axis::X) => Some(Interval::new(lo.x, hi.x)),
            (PrimitiveDescriptor::Euclidean { lo, hi, .. }, Axis::Y) => Some(Interval::new(lo.y, hi.y)),
            (PrimitiveDescriptor::Euclidean { lo, hi, .. }, Axis::Z) => Some(Interval::new(lo.z, hi.z)),
            (PrimitiveDescriptor::Cylindrical(c), Axis::R) => Some(c.radial),
            (PrimitiveDescriptor::Cylindrical(c), Axis::Theta) => Some(c.theta),
            (PrimitiveDescriptor::Cylindrical(c), Axis::Y) => Some(c.height),
            (PrimitiveDescriptor::Spherical(s), Axis::R) => Some(s.radial),
            (PrimitiveDescriptor::Spherical(s), Axis::Theta) => Some(s.theta),
            (PrimitiveDescriptor::Spherical(s), Axis::Phi) => Some(s.phi),
            _ => None,
        }
    }

    /// Intersects the descriptor with a slab along `axis`. The slab must lie
    /// inside the current axis interval.
    pub fn restrict(&self, axis: Axis, slab: Interval) -> PrimitiveDescriptor {
        match self {
            PrimitiveDescriptor::Euclidean { lo, hi, cut } => {
                let (mut lo, mut hi) = (*lo, *hi);
                let i = match axis {
                    Axis::X => 0,
                    Axis::Y => 1,
                    _ => 2,
                };
                lo[i] = slab.lo;
                hi[i] = slab.hi;
                normalize_euclidean(lo, hi, *cut)
            }
            PrimitiveDescriptor::Cylindrical(c) => {
                let mut c = *c;
                match axis {
                    Axis::R => c.radial = slab,
                    Axis::Theta => c.theta = slab,
                    _ => c.height = slab,
                }
                PrimitiveDescriptor::Cylindrical(c.normalized())
            }
            PrimitiveDescriptor::Spherical(s) => {
                let mut s = *s;
                match axis {
                    Axis::R => s.radial = slab,
                    Axis::Theta => s.theta = slab,
                    _ => s.phi = slab,
                }
                PrimitiveDescriptor::Spherical(s)
            }
        }
    }

    /// Tight axis-aligned bounds in local coordinates.
    pub fn local_bounds(&self) -> (Point3<f64>, Point3<f64>) {
        match self {
            PrimitiveDescriptor::Euclidean { lo, hi, .. } => (Point3::from(*lo), Point3::from(*hi)),
            PrimitiveDescriptor::Cylindrical(c) => {
                let mut ys = vec![c.height.lo, c.height.hi];
                ys.extend(c.inner_kink());
                let thetas = candidate_angles(c.theta);
                let mut pts = Vec::new();
                for &y in &ys {
                    for r in [c.inner_at(y), c.outer_at(y).max(0.0)] {
                        for &t in &thetas {
                            pts.push(cylindrical_point(r, t, y));
                        }
                    }
                }
                aabb(&pts)
            }
            PrimitiveDescriptor::Spherical(s) => {
                let thetas = candidate_angles(s.theta);
                let mut phis = vec![s.phi.lo, s.phi.hi];
                if s.phi.lo < PI / 2.0 && s.phi.hi > PI / 2.0 {
                    phis.push(PI / 2.0);
                }
                let mut pts = Vec::new();
                for r in [s.radial.lo, s.radial.hi] {
                    for &t in &thetas {
                        for &p in &phis {
                            pts.push(spherical_point(r, t, p));
                        }
                    }
                }
                aabb(&pts)
            }
        }
    }

    /// Radius exposed as `scope.r`: the largest outer radius.
    pub fn outer_radius(&self) -> Option<f64> {
        match self {
            PrimitiveDescriptor::Cylindrical(c) => Some(c.radial.hi),
            PrimitiveDescriptor::Spherical(s) => Some(s.radial.hi),
            PrimitiveDescriptor::Euclidean { .. } => None,
        }
    }

    pub fn inner_radius(&self) -> Option<f64> {
        match self {
            PrimitiveDescriptor::Cylindrical(c) => Some(c.radial.lo),
            PrimitiveDescriptor::Spherical(s) => Some(s.radial.lo),
            PrimitiveDescriptor::Euclidean { .. } => None,
        }
    }

    /// Checks the structural invariants. Returns a description of the first
    /// violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        let nonempty = |name: &str, iv: Interval| {
            if iv.lo < iv.hi {
                Ok(())
            } else {
                Err(format!("{name} interval [{}, {}] is empty", iv.lo, iv.hi))
            }
        };
        match self {
            PrimitiveDescriptor::Euclidean { lo, hi, .. } => {
                for (i, n) in ["x", "y", "z"].iter().enumerate() {
                    nonempty(n, Interval::new(lo[i], hi[i]))?;
                }
            }
            PrimitiveDescriptor::Cylindrical(c) => {
                nonempty("r", c.radial)?;
                nonempty("theta", c.theta)?;
                nonempty("y", c.height)?;
                if c.radial.lo < 0.0 {
                    return Err("negative radial bound".into());
                }
                if c.theta.len() > TAU + ANGLE_TOL {
                    return Err("theta span exceeds 2π".into());
                }
            }
            PrimitiveDescriptor::Spherical(s) => {
                nonempty("r", s.radial)?;
                nonempty("theta", s.theta)?;
                nonempty("phi", s.phi)?;
                if s.radial.lo < 0.0 {
                    return Err("negative radial bound".into());
                }
                if s.theta.len() > TAU + ANGLE_TOL {
                    return Err("theta span exceeds 2π".into());
                }
                if s.phi.len() > PI + ANGLE_TOL || s.phi.lo < -ANGLE_TOL || s.phi.hi > PI + ANGLE_TOL {
                    return Err("phi interval outside [0, π]".into());
                }
            }
        }
        Ok(())
    }
}

/// Cylindrical map with y up; theta turns right-handed about +y.
pub fn cylindrical_point(r: f64, theta: f64, y: f64) -> Point3<f64> {
    Point3::new(r * snap(theta.cos()), y, -r * snap(theta.sin()))
}

/// Spherical map with the polar angle measured from +y.
pub fn spherical_point(r: f64, theta: f64, phi: f64) -> Point3<f64> {
    let s = snap(phi.sin());
    Point3::new(r * s * snap(theta.cos()), r * snap(phi.cos()), -r * s * snap(theta.sin()))
}

/// Rounds trigonometric noise around zero (cos π/2, sin π, ...) to exactly zero
/// so that axis-aligned extremes and poles come out exact.
pub(crate) fn snap(x: f64) -> f64 {
    if x.abs() < 1e-15 {
        0.0
    } else {
        x
    }
}

fn candidate_angles(iv: Interval) -> Vec<f64> {
    let mut out = vec![iv.lo, iv.hi];
    let start = (iv.lo / (PI / 2.0)).ceil() as i64;
    let end = (iv.hi / (PI / 2.0)).floor() as i64;
    for k in start..=end {
        out.push(k as f64 * PI / 2.0);
    }
    out
}

fn aabb(pts: &[Point3<f64>]) -> (Point3<f64>, Point3<f64>) {
    let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in pts {
        for i in 0..3 {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    (lo, hi)
}

pub(crate) fn box_corner(lo: &Vector3<f64>, hi: &Vector3<f64>, bits: usize) -> Point3<f64> {
    Point3::new(
        if bits & 1 != 0 { hi.x } else { lo.x },
        if bits & 2 != 0 { hi.y } else { lo.y },
        if bits & 4 != 0 { hi.z } else { lo.z },
    )
}

pub(crate) const BOX_EDGES: [(usize, usize); 12] =
    [(0, 1), (2, 3), (4, 5), (6, 7), (0, 2), (1, 3), (4, 6), (5, 7), (0, 4), (1, 5), (2, 6), (3, 7)];

/// Classification slack for a half-space against a box.
pub(crate) fn cut_tolerance(lo: &Vector3<f64>, hi: &Vector3<f64>, hs: &HalfSpace) -> f64 {
    let scale = (hi - lo).norm().max(lo.amax()).max(hi.amax()).max(1.0);
    1e-9 * hs.normal.norm() * scale
}

/// Point on segment `a`–`b` where the signed distances `da`, `db` vanish.
/// Endpoints are ordered by corner index so that the result is bitwise
/// identical whichever face asks for it.
pub(crate) fn edge_crossing(a: (usize, Point3<f64>, f64), b: (usize, Point3<f64>, f64)) -> Point3<f64> {
    let (p, q) = if a.0 < b.0 { (a, b) } else { (b, a) };
    let t = p.2 / (p.2 - q.2);
    p.1 + (q.1 - p.1) * t
}

/// Vertices of `box ∩ half-space`, deduplicated.
pub(crate) fn cut_box_vertices(lo: &Vector3<f64>, hi: &Vector3<f64>, hs: &HalfSpace) -> Vec<Point3<f64>> {
    let tol = cut_tolerance(lo, hi, hs);
    let corners: Vec<(usize, Point3<f64>, f64)> = (0..8)
        .map(|i| {
            let p = box_corner(lo, hi, i);
            (i, p, hs.signed_distance(&p))
        })
        .collect();
    let mut verts: Vec<Point3<f64>> = corners.iter().filter(|c| c.2 <= tol).map(|c| c.1).collect();
    for &(i, j) in &BOX_EDGES {
        let (a, b) = (corners[i], corners[j]);
        if (a.2 < -tol && b.2 > tol) || (a.2 > tol && b.2 < -tol) {
            verts.push(edge_crossing(a, b));
        }
    }
    let merge = 1e-9 * (hi - lo).norm().max(1e-300);
    let mut unique: Vec<Point3<f64>> = Vec::with_capacity(verts.len());
    for v in verts {
        if !unique.iter().any(|u| (u - v).norm() <= merge) {
            unique.push(v);
        }
    }
    unique
}

fn normalize_euclidean(lo: Vector3<f64>, hi: Vector3<f64>, cut: Option<HalfSpace>) -> PrimitiveDescriptor {
    let Some(hs) = cut else {
        return PrimitiveDescriptor::Euclidean { lo, hi, cut: None };
    };
    let tol = cut_tolerance(&lo, &hi, &hs);
    let any_outside = (0..8).any(|i| hs.signed_distance(&box_corner(&lo, &hi, i)) > tol);
    if !any_outside {
        return PrimitiveDescriptor::Euclidean { lo, hi, cut: None };
    }
    let verts = cut_box_vertices(&lo, &hi, &hs);
    let (mut new_lo, mut new_hi) = (lo, hi);
    for i in 0..3 {
        new_lo[i] = verts.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min).max(lo[i]);
        new_hi[i] = verts.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max).min(hi[i]);
    }
    let still_cut = (0..8).any(|i| hs.signed_distance(&box_corner(&new_lo, &new_hi, i)) > tol);
    PrimitiveDescriptor::Euclidean { lo: new_lo, hi: new_hi, cut: still_cut.then_some(hs) }
}

/// Volume of `{p in box : n · p <= c}` by inclusion–exclusion over box corners.
fn cut_box_volume(lo: &Vector3<f64>, hi: &Vector3<f64>, hs: &HalfSpace) -> f64 {
    let scale = hs.normal.amax();
    let mut base = Vector3::zeros();
    let mut weights = [0.0; 3];
    let mut free_length = 1.0;
    let mut active: Vec<usize> = Vec::new();
    for i in 0..3 {
        let n = hs.normal[i];
        if n.abs() <= 1e-12 * scale {
            free_length *= hi[i] - lo[i];
        } else {
            base[i] = if n > 0.0 { lo[i] } else { hi[i] };
            weights[i] = n.abs();
            active.push(i);
        }
    }
    let budget = hs.offset - active.iter().map(|&i| hs.normal[i] * base[i]).sum::<f64>();
    if budget <= 0.0 {
        return 0.0;
    }
    let k = active.len() as i32;
    let mut sum = 0.0;
    for mask in 0..(1usize << active.len()) {
        let mut t = budget;
        let mut sign = 1.0;
        for (bit, &i) in active.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                t -= weights[i] * (hi[i] - lo[i]);
                sign = -sign;
            }
        }
        if t > 0.0 {
            sum += sign * t.powi(k);
        }
    }
    let factorial: f64 = (1..=k).map(f64::from).product();
    let denom: f64 = active.iter().map(|&i| weights[i]).product::<f64>() * factorial;
    free_length * sum / denom
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cyl(r: f64, h: f64) -> CylindricalExtent {
        CylindricalExtent {
            radial: Interval::new(0.0, r),
            theta: Interval::new(0.0, TAU),
            height: Interval::new(-h / 2.0, h / 2.0),
            taper: 0.0,
            reference: -h / 2.0,
        }
    }

    #[test]
    fn nineteen_distinct_names_resolve() {
        let mut names: Vec<&str> = PrimitiveKind::ALL.iter().map(|k| k.name()).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), 19);
        for k in PrimitiveKind::ALL {
            assert_eq!(PrimitiveKind::from_name(k.name()), Some(k));
            assert_eq!(PrimitiveKind::from_name(k.namespace_name()), Some(k));
        }
        assert_eq!(PrimitiveKind::from_name("cylinder_sector"), Some(PrimitiveKind::CylinderSector));
        assert_eq!(PrimitiveKind::from_name("torus"), None);
    }

    #[test]
    fn tetra_corner_volume_matches_sixth_of_box() {
        let lo = Vector3::zeros();
        let hi = Vector3::new(2.0, 3.0, 4.0);
        let hs = HalfSpace { normal: Vector3::new(12.0, 8.0, 6.0), offset: 24.0 };
        assert!((cut_box_volume(&lo, &hi, &hs) - 4.0).abs() < 1e-12);
        let d = PrimitiveDescriptor::euclidean(lo, hi, Some(hs));
        assert_eq!(d.kind(), PrimitiveKind::Tetrahedron);
    }

    #[test]
    fn negative_normals_are_reflected() {
        // same tetrahedron anchored at the opposite corner
        let lo = Vector3::zeros();
        let hi = Vector3::new(2.0, 3.0, 4.0);
        let n = Vector3::new(-12.0, -8.0, -6.0);
        let hs = HalfSpace { normal: n, offset: n.dot(&hi) + 24.0 };
        assert!((cut_box_volume(&lo, &hi, &hs) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn ramp_prism_volume_is_half_box() {
        let lo = Vector3::zeros();
        let hi = Vector3::new(5.0, 2.0, 3.0);
        let hs = HalfSpace { normal: Vector3::new(0.0, 3.0, 2.0), offset: 6.0 };
        assert!((cut_box_volume(&lo, &hi, &hs) - 15.0).abs() < 1e-12);
        let d = PrimitiveDescriptor::euclidean(lo, hi, Some(hs));
        assert_eq!(d.kind(), PrimitiveKind::Ramp);
    }

    #[test]
    fn inactive_cut_collapses_to_box() {
        let lo = Vector3::zeros();
        let hi = Vector3::new(1.0, 1.0, 1.0);
        let hs = HalfSpace { normal: Vector3::new(1.0, 1.0, 1.0), offset: 5.0 };
        let d = PrimitiveDescriptor::euclidean(lo, hi, Some(hs));
        assert_eq!(d.kind(), PrimitiveKind::Box);
    }

    #[test]
    fn cylinder_volume_and_kinds() {
        let c = PrimitiveDescriptor::cylindrical(cyl(2.0, 8.0));
        assert_eq!(c.kind(), PrimitiveKind::Cylinder);
        assert!((c.volume() - 32.0 * PI).abs() < 1e-9);
        let ring = c.restrict(Axis::R, Interval::new(1.5, 2.0));
        assert_eq!(ring.kind(), PrimitiveKind::Ring);
        assert!((ring.volume() - 14.0 * PI).abs() < 1e-9);
        let sector = c.restrict(Axis::Theta, Interval::new(0.0, PI));
        assert_eq!(sector.kind(), PrimitiveKind::CylinderSector);
    }

    #[test]
    fn cone_radial_split_shortens_inner_cone() {
        let cone = PrimitiveDescriptor::cylindrical(CylindricalExtent {
            radial: Interval::new(0.0, 1.0),
            theta: Interval::new(0.0, TAU),
            height: Interval::new(0.0, 1.0),
            taper: -1.0,
            reference: 0.0,
        });
        assert_eq!(cone.kind(), PrimitiveKind::Cone);
        assert!((cone.volume() - PI / 3.0).abs() < 1e-12);
        let inner = cone.restrict(Axis::R, Interval::new(0.0, 0.5));
        let outer = cone.restrict(Axis::R, Interval::new(0.5, 1.0));
        assert_eq!(inner.kind(), PrimitiveKind::Cone);
        assert_eq!(outer.kind(), PrimitiveKind::HollowFrustum);
        let iv = inner.axis_interval(Axis::Y).unwrap();
        assert!((iv.hi - 0.5).abs() < 1e-12);
        assert!((inner.volume() + outer.volume() - cone.volume()).abs() < 1e-12);
    }

    #[test]
    fn sphere_partitions() {
        let s = SphericalExtent {
            radial: Interval::new(0.0, 1.0),
            theta: Interval::new(0.0, TAU),
            phi: Interval::new(0.0, PI),
        };
        let d = PrimitiveDescriptor::spherical(s);
        assert_eq!(d.kind(), PrimitiveKind::Sphere);
        assert!((d.volume() - 4.0 * PI / 3.0).abs() < 1e-12);
        assert_eq!(d.restrict(Axis::R, Interval::new(0.5, 1.0)).kind(), PrimitiveKind::SphereShell);
        assert_eq!(d.restrict(Axis::Phi, Interval::new(0.0, 1.0)).kind(), PrimitiveKind::SphereWedge);
    }

    #[test]
    fn sector_bounds_include_axis_extremes() {
        let c = PrimitiveDescriptor::cylindrical(cyl(1.0, 2.0)).restrict(Axis::Theta, Interval::new(0.0, PI));
        let (lo, hi) = c.local_bounds();
        assert!((lo.x + 1.0).abs() < 1e-12 && (hi.x - 1.0).abs() < 1e-12);
        assert!((lo.z + 1.0).abs() < 1e-12 && hi.z.abs() < 1e-12);
    }
}
