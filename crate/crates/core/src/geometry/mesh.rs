use std::collections::HashMap;

use nalgebra::{Point3, Vector3};

use super::appearance::Appearance;
use super::GeometryError;

/// Indexed triangle mesh with a per-face material palette.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriMesh {
    pub vertices: Vec<Point3<f64>>,
    pub faces: Vec<[u32; 3]>,
    /// Index into `materials` for each face.
    pub face_material: Vec<u32>,
    pub materials: Vec<Appearance>,
}

impl TriMesh {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    /// Sets every face to a single material.
    pub fn with_material(mut self, appearance: Appearance) -> Self {
        self.materials = vec![appearance];
        self.face_material = vec![0; self.faces.len()];
        self
    }

    pub fn triangle(&self, f: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a as usize], self.vertices[b as usize], self.vertices[c as usize]]
    }

    /// Divergence-theorem volume; meaningful only for closed meshes.
    pub fn signed_volume(&self) -> f64 {
        // accumulate relative to the first vertex to limit cancellation
        let Some(origin) = self.vertices.first().copied() else {
            return 0.0;
        };
        self.faces
            .iter()
            .map(|&[a, b, c]| {
                let pa = self.vertices[a as usize] - origin;
                let pb = self.vertices[b as usize] - origin;
                let pc = self.vertices[c as usize] - origin;
                pa.dot(&pb.cross(&pc))
            })
            .sum::<f64>()
            / 6.0
    }

    /// Every directed edge has exactly one reversed partner.
    pub fn is_watertight(&self) -> bool {
        let mut edges: HashMap<(u32, u32), i32> = HashMap::with_capacity(self.faces.len() * 3);
        for &[a, b, c] in &self.faces {
            for (u, v) in [(a, b), (b, c), (c, a)] {
                if u == v {
                    return false;
                }
                *edges.entry((u, v)).or_insert(0) += 1;
            }
        }
        edges.iter().all(|(&(u, v), &n)| n == 1 && edges.get(&(v, u)) == Some(&1))
    }

    pub fn bounds(&self) -> Option<(Point3<f64>, Point3<f64>)> {
        let first = *self.vertices.first()?;
        let (mut lo, mut hi) = (first, first);
        for p in &self.vertices {
            for i in 0..3 {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        Some((lo, hi))
    }

    pub fn flip(&mut self) {
        for f in &mut self.faces {
            f.swap(1, 2);
        }
    }

    /// Appends `other`, remapping its material ids after ours.
    pub fn append(&mut self, other: &TriMesh) {
        let vbase = self.vertices.len() as u32;
        let mbase = self.materials.len() as u32;
        self.vertices.extend_from_slice(&other.vertices);
        self.faces.extend(other.faces.iter().map(|f| [f[0] + vbase, f[1] + vbase, f[2] + vbase]));
        self.face_material.extend(other.face_material.iter().map(|m| m + mbase));
        self.materials.extend(other.materials.iter().cloned());
    }

    pub fn map_vertices(&mut self, f: impl Fn(&Point3<f64>) -> Point3<f64>) {
        for v in &mut self.vertices {
            *v = f(v);
        }
    }

    /// Collapses materials with equal canonical form.
    pub fn compact_materials(&mut self) {
        let mut seen: HashMap<String, u32> = HashMap::new();
        let mut palette = Vec::new();
        let remap: Vec<u32> = self
            .materials
            .iter()
            .map(|m| {
                *seen.entry(m.canonical()).or_insert_with(|| {
                    palette.push(m.clone());
                    (palette.len() - 1) as u32
                })
            })
            .collect();
        for m in &mut self.face_material {
            *m = remap[*m as usize];
        }
        self.materials = palette;
    }

    /// Area-weighted sum of face normals; zero for a closed mesh.
    pub fn normal_sum(&self) -> Vector3<f64> {
        (0..self.faces.len())
            .map(|f| {
                let [a, b, c] = self.triangle(f);
                (b - a).cross(&(c - a))
            })
            .sum()
    }
}

/// Divergence-theorem volume of a closed mesh.
pub fn mesh_volume(mesh: &TriMesh) -> Result<f64, GeometryError> {
    if !mesh.is_watertight() {
        return Err(GeometryError::NotWatertight);
    }
    Ok(mesh.signed_volume())
}

/// Accumulates triangles while welding bit-identical vertex positions.
#[derive(Default)]
pub(crate) struct MeshBuilder {
    vertices: Vec<Point3<f64>>,
    index: HashMap<[u64; 3], u32>,
    faces: Vec<[u32; 3]>,
}

impl MeshBuilder {
    pub fn vertex(&mut self, p: Point3<f64>) -> u32 {
        let p = Point3::new(clean_zero(p.x), clean_zero(p.y), clean_zero(p.z));
        let key = [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()];
        *self.index.entry(key).or_insert_with(|| {
            self.vertices.push(p);
            (self.vertices.len() - 1) as u32
        })
    }

    pub fn triangle(&mut self, a: Point3<f64>, b: Point3<f64>, c: Point3<f64>) {
        let ia = self.vertex(a);
        let ib = self.vertex(b);
        let ic = self.vertex(c);
        if ia != ib && ib != ic && ic != ia {
            self.faces.push([ia, ib, ic]);
        }
    }

    /// Quad `a b c d` in counter-clockwise order, split along `a`–`c`.
    pub fn quad(&mut self, a: Point3<f64>, b: Point3<f64>, c: Point3<f64>, d: Point3<f64>) {
        self.triangle(a, b, c);
        self.triangle(a, c, d);
    }

    pub fn finish(self) -> TriMesh {
        let mut mesh = TriMesh {
            face_material: vec![0; self.faces.len()],
            vertices: self.vertices,
            faces: self.faces,
            materials: vec![Appearance::new()],
        };
        if mesh.signed_volume() < 0.0 {
            mesh.flip();
        }
        mesh
    }
}

pub(crate) fn clean_zero(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}
