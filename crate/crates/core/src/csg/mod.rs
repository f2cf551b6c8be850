//! Regularized Booleans on closed triangle meshes.

mod bsp;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Point3, Vector3};
use thiserror::Error;

use crate::geometry::TriMesh;
use bsp::{newell_normal, Bsp, Polygon};

/// Sliver polygons below this area are discarded before repair.
pub const MIN_POLYGON_AREA: f64 = 1e-12;
/// Boundary loops narrower than this (relative to model size) are numerical
/// cracks and get closed; anything larger is reported.
pub const CRACK_SIZE: f64 = 1e-5;
/// A result with less volume than this is reported empty.
pub const EMPTY_VOLUME: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CsgError {
    #[error("unknown Boolean operator `{0}` (expected \"+\", \"-\" or \"&&\")")]
    UnknownOperator(String),
    #[error("Boolean operand is not a closed mesh")]
    NonWatertightInput,
    #[error("degenerate intersection: {0}")]
    DegenerateIntersection(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BooleanOp {
    Union,
    Difference,
    Intersection,
}

impl BooleanOp {
    pub fn token(self) -> &'static str {
        match self {
            BooleanOp::Union => "+",
            BooleanOp::Difference => "-",
            BooleanOp::Intersection => "&&",
        }
    }
}

impl FromStr for BooleanOp {
    type Err = CsgError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "+" => Ok(BooleanOp::Union),
            "-" => Ok(BooleanOp::Difference),
            "&&" => Ok(BooleanOp::Intersection),
            other => Err(CsgError::UnknownOperator(other.to_string())),
        }
    }
}

impl fmt::Display for BooleanOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsgResult {
    pub mesh: TriMesh,
    pub empty: bool,
}

impl CsgResult {
    fn from_mesh(mut mesh: TriMesh) -> Self {
        if mesh.faces.is_empty() || mesh.signed_volume() < EMPTY_VOLUME {
            mesh.vertices.clear();
            mesh.faces.clear();
            mesh.face_material.clear();
            return CsgResult { mesh, empty: true };
        }
        CsgResult { mesh, empty: false }
    }
}

pub fn csg_volume(r: &CsgResult) -> f64 {
    if r.empty {
        0.0
    } else {
        r.mesh.signed_volume()
    }
}

fn to_polygons(mesh: &TriMesh, material_offset: u32) -> Vec<Polygon> {
    (0..mesh.faces.len())
        .filter_map(|f| {
            let tri = mesh.triangle(f);
            let mat = mesh.face_material.get(f).copied().unwrap_or(0) + material_offset;
            Polygon::new(tri.to_vec(), mat)
        })
        .collect()
}

fn boxes_overlap(a: &TriMesh, b: &TriMesh) -> bool {
    match (a.bounds(), b.bounds()) {
        (Some((alo, ahi)), Some((blo, bhi))) => {
            (0..3).all(|i| alo[i] <= bhi[i] + bsp::EPS && blo[i] <= ahi[i] + bsp::EPS)
        }
        _ => false,
    }
}

fn concat(a: &TriMesh, b: &TriMesh) -> TriMesh {
    let mut out = a.clone();
    out.append(b);
    out.compact_materials();
    out
}

/// Regularized Boolean of two closed, outward-oriented meshes.
pub fn mesh_boolean(a: &TriMesh, b: &TriMesh, op: BooleanOp) -> Result<CsgResult, CsgError> {
    if !a.is_empty() && !a.is_watertight() || !b.is_empty() && !b.is_watertight() {
        return Err(CsgError::NonWatertightInput);
    }
    if a.is_empty() || b.is_empty() || !boxes_overlap(a, b) {
        return Ok(match op {
            BooleanOp::Union => CsgResult::from_mesh(concat(a, b)),
            BooleanOp::Difference => CsgResult::from_mesh(a.clone()),
            BooleanOp::Intersection => CsgResult { mesh: TriMesh::new(), empty: true },
        });
    }

    let offset = a.materials.len() as u32;
    let mut ta = Bsp::new(to_polygons(a, 0));
    let mut tb = Bsp::new(to_polygons(b, offset));
    match op {
        BooleanOp::Union => {
            ta.clip_to(&tb);
            tb.clip_to(&ta);
            tb.invert();
            tb.clip_to(&ta);
            tb.invert();
            ta.build(tb.all_polygons());
        }
        BooleanOp::Difference => {
            ta.invert();
            ta.clip_to(&tb);
            tb.clip_to(&ta);
            tb.invert();
            tb.clip_to(&ta);
            tb.invert();
            ta.build(tb.all_polygons());
            ta.invert();
        }
        BooleanOp::Intersection => {
            ta.invert();
            tb.clip_to(&ta);
            tb.invert();
            ta.clip_to(&tb);
            tb.clip_to(&ta);
            ta.build(tb.all_polygons());
            ta.invert();
        }
    }

    let mut materials = a.materials.clone();
    materials.extend(b.materials.iter().cloned());
    let scale = model_scale(a, b);
    let mut mesh = assemble(ta.all_polygons(), scale)?;
    mesh.materials = materials;
    mesh.compact_materials();
    Ok(CsgResult::from_mesh(mesh))
}

fn model_scale(a: &TriMesh, b: &TriMesh) -> f64 {
    let mut s: f64 = 1.0;
    for m in [a, b] {
        if let Some((lo, hi)) = m.bounds() {
            s = s.max((hi - lo).norm()).max(lo.coords.amax()).max(hi.coords.amax());
        }
    }
    s
}

/// Tolerance-based vertex welding on a uniform hash grid.
struct Welder {
    tol: f64,
    cells: HashMap<[i64; 3], Vec<u32>>,
    points: Vec<Point3<f64>>,
}

impl Welder {
    fn new(tol: f64) -> Self {
        Self { tol, cells: HashMap::new(), points: Vec::new() }
    }

    fn cell(&self, p: &Point3<f64>) -> [i64; 3] {
        [(p.x / self.tol).floor() as i64, (p.y / self.tol).floor() as i64, (p.z / self.tol).floor() as i64]
    }

    fn insert(&mut self, p: Point3<f64>) -> u32 {
        let c = self.cell(&p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = self.cells.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                        for &id in ids {
                            if (self.points[id as usize] - p).norm() <= self.tol {
                                return id;
                            }
                        }
                    }
                }
            }
        }
        let id = self.points.len() as u32;
        self.points.push(p);
        self.cells.entry(c).or_default().push(id);
        id
    }
}

/// Coarse grid over welded vertices for segment proximity queries.
struct PointGrid {
    origin: Point3<f64>,
    cell: f64,
    cells: HashMap<[i64; 3], Vec<u32>>,
}

impl PointGrid {
    fn new(points: &[Point3<f64>]) -> Self {
        let mut lo = Point3::from(Vector3::repeat(f64::INFINITY));
        let mut hi = Point3::from(Vector3::repeat(f64::NEG_INFINITY));
        for p in points {
            for i in 0..3 {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        let diag = (hi - lo).norm().max(1e-9);
        let cell = diag / (points.len() as f64).cbrt().max(1.0);
        let mut grid = PointGrid { origin: lo, cell, cells: HashMap::new() };
        for (i, p) in points.iter().enumerate() {
            let k = grid.key(p);
            grid.cells.entry(k).or_default().push(i as u32);
        }
        grid
    }

    fn key(&self, p: &Point3<f64>) -> [i64; 3] {
        let d = (p - self.origin) / self.cell;
        [d.x.floor() as i64, d.y.floor() as i64, d.z.floor() as i64]
    }

    fn near_segment(&self, a: &Point3<f64>, b: &Point3<f64>, pad: f64, mut f: impl FnMut(u32)) {
        let lo = Point3::new(a.x.min(b.x) - pad, a.y.min(b.y) - pad, a.z.min(b.z) - pad);
        let hi = Point3::new(a.x.max(b.x) + pad, a.y.max(b.y) + pad, a.z.max(b.z) + pad);
        let (kl, kh) = (self.key(&lo), self.key(&hi));
        for x in kl[0]..=kh[0] {
            for y in kl[1]..=kh[1] {
                for z in kl[2]..=kh[2] {
                    if let Some(ids) = self.cells.get(&[x, y, z]) {
                        ids.iter().for_each(|&i| f(i));
                    }
                }
            }
        }
    }
}

/// A polygon below the area floor whose vertices all lie within `tol` of its
/// longest edge. Dropping it is safe because T-junction repair re-threads its
/// vertices into the neighbouring edges; compact small polygons are kept.
fn is_sliver(vertices: &[Point3<f64>], tol: f64) -> bool {
    let twice_area = newell_normal(vertices).norm();
    if twice_area * 0.5 >= MIN_POLYGON_AREA {
        return false;
    }
    let longest =
        (0..vertices.len()).map(|k| (vertices[(k + 1) % vertices.len()] - vertices[k]).norm()).fold(0.0, f64::max);
    twice_area <= tol * longest
}

/// Welds BSP output, repairs T-junctions and triangulates. Fails if the
/// result is not a closed 2-manifold.
fn assemble(polygons: Vec<Polygon>, scale: f64) -> Result<TriMesh, CsgError> {
    let weld_tol = 1e-8 * scale;
    let tjunction_tol = 1e-8 * scale;

    let mut welder = Welder::new(weld_tol);
    let mut rings: Vec<(Vec<u32>, u32)> = Vec::with_capacity(polygons.len());
    for poly in polygons {
        if is_sliver(&poly.vertices, tjunction_tol) {
            continue;
        }
        let mut ring: Vec<u32> = Vec::with_capacity(poly.vertices.len());
        for v in &poly.vertices {
            let id = welder.insert(*v);
            if ring.last() != Some(&id) {
                ring.push(id);
            }
        }
        while ring.len() > 1 && ring.first() == ring.last() {
            ring.pop();
        }
        if ring.len() >= 3 {
            rings.push((ring, poly.material));
        }
    }

    let points = welder.points.clone();
    let grid = PointGrid::new(&points);
    let mut edge_inserts: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
    let mut expanded: Vec<(Vec<u32>, u32, bool)> = Vec::with_capacity(rings.len());
    for (ring, mat) in &rings {
        let mut out = Vec::with_capacity(ring.len());
        let mut inserted = false;
        for k in 0..ring.len() {
            let (u, v) = (ring[k], ring[(k + 1) % ring.len()]);
            out.push(u);
            let key = (u.min(v), u.max(v));
            let mids = edge_inserts.entry(key).or_insert_with(|| {
                let (a, b) = (points[key.0 as usize], points[key.1 as usize]);
                let ab = b - a;
                let len2 = ab.norm_squared();
                let len = len2.sqrt();
                let mut hits: Vec<(f64, u32)> = Vec::new();
                grid.near_segment(&a, &b, tjunction_tol, |w| {
                    if w == key.0 || w == key.1 {
                        return;
                    }
                    let p = points[w as usize];
                    let t = (p - a).dot(&ab) / len2;
                    if t * len <= tjunction_tol || (1.0 - t) * len <= tjunction_tol {
                        return;
                    }
                    if (a + ab * t - p).norm() <= tjunction_tol {
                        hits.push((t, w));
                    }
                });
                hits.sort_by(|x, y| x.0.total_cmp(&y.0));
                hits.into_iter().map(|h| h.1).collect()
            });
            if !mids.is_empty() {
                inserted = true;
                if u < v {
                    out.extend(mids.iter().copied());
                } else {
                    out.extend(mids.iter().rev().copied());
                }
            }
        }
        expanded.push((out, *mat, inserted));
    }

    let mut faces: Vec<[u32; 3]> = Vec::new();
    let mut face_material: Vec<u32> = Vec::new();
    for (ring, mat, inserted) in expanded {
        let pts: Vec<Point3<f64>> = ring.iter().map(|&i| welder.points[i as usize]).collect();
        let has_collinear = inserted
            || (0..ring.len()).any(|k| {
                let prev = pts[(k + ring.len() - 1) % ring.len()];
                let next = pts[(k + 1) % ring.len()];
                (pts[k] - prev).cross(&(next - pts[k])).norm() <= 1e-12 * scale * scale
            });
        if has_collinear && ring.len() > 3 {
            let centroid = Point3::from(pts.iter().map(|p| p.coords).sum::<Vector3<f64>>() / pts.len() as f64);
            let c = welder.insert(centroid);
            for k in 0..ring.len() {
                let (u, v) = (ring[k], ring[(k + 1) % ring.len()]);
                if c != u && c != v {
                    faces.push([c, u, v]);
                    face_material.push(mat);
                }
            }
        } else {
            for k in 1..ring.len() - 1 {
                faces.push([ring[0], ring[k], ring[k + 1]]);
                face_material.push(mat);
            }
        }
    }

    cancel_opposed(&mut faces, &mut face_material);
    close_cracks(&welder.points, &mut faces, &mut face_material, CRACK_SIZE * scale);

    let mut mesh = TriMesh { vertices: welder.points, faces, face_material, materials: Vec::new() };
    compact_vertices(&mut mesh);
    if !mesh.faces.is_empty() && !mesh.is_watertight() {
        return Err(CsgError::DegenerateIntersection(format!(
            "Boolean result with {} faces is not a closed manifold",
            mesh.faces.len()
        )));
    }
    Ok(mesh)
}

/// Removes pairs of coincident triangles with opposite orientation, which
/// enclose no volume.
fn cancel_opposed(faces: &mut Vec<[u32; 3]>, mats: &mut Vec<u32>) {
    let canon = |f: &[u32; 3]| {
        let m = (0..3).min_by_key(|&i| f[i]).unwrap();
        [f[m], f[(m + 1) % 3], f[(m + 2) % 3]]
    };
    let mut index: HashMap<[u32; 3], Vec<usize>> = HashMap::new();
    for (i, f) in faces.iter().enumerate() {
        index.entry(canon(f)).or_default().push(i);
    }
    let mut dead = vec![false; faces.len()];
    for (i, f) in faces.iter().enumerate() {
        if dead[i] {
            continue;
        }
        let rev = canon(&[f[0], f[2], f[1]]);
        if let Some(list) = index.get(&rev) {
            if let Some(&j) = list.iter().find(|&&j| !dead[j] && j != i) {
                dead[i] = true;
                dead[j] = true;
            }
        }
    }
    let mut k = 0;
    faces.retain(|_| {
        k += 1;
        !dead[k - 1]
    });
    let mut k = 0;
    mats.retain(|_| {
        k += 1;
        !dead[k - 1]
    });
}

/// Closes boundary loops whose vertices all lie within `size` of each other.
/// Such loops come from cut points computed on nearly parallel edges landing
/// slightly apart; the patches enclose no measurable volume.
fn close_cracks(points: &[Point3<f64>], faces: &mut Vec<[u32; 3]>, mats: &mut Vec<u32>, size: f64) {
    let mut count: HashMap<(u32, u32), (u32, usize)> = HashMap::new();
    for (i, f) in faces.iter().enumerate() {
        for (u, v) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
            count.entry((u, v)).or_insert((0, i)).0 += 1;
        }
    }
    let mut next: HashMap<u32, (u32, usize)> = HashMap::new();
    for (&(u, v), &(n, face)) in &count {
        if n == 1 && !count.contains_key(&(v, u)) && next.insert(u, (v, face)).is_some() {
            return;
        }
    }
    let mut starts: Vec<u32> = next.keys().copied().collect();
    starts.sort_unstable();
    let mut visited = std::collections::HashSet::new();
    for s in starts {
        if visited.contains(&s) {
            continue;
        }
        let mut lp = vec![s];
        let mut mat = 0;
        let mut cur = s;
        let closed = loop {
            visited.insert(cur);
            let Some(&(nx, face)) = next.get(&cur) else { break false };
            mat = mats[face];
            if nx == s {
                break true;
            }
            if visited.contains(&nx) || lp.len() > 64 {
                break false;
            }
            lp.push(nx);
            cur = nx;
        };
        if !closed || lp.len() < 3 {
            continue;
        }
        let p0 = points[lp[0] as usize];
        if lp.iter().any(|&v| (points[v as usize] - p0).norm() > size) {
            continue;
        }
        for k in 1..lp.len() - 1 {
            faces.push([lp[0], lp[k + 1], lp[k]]);
            mats.push(mat);
        }
    }
}

fn compact_vertices(mesh: &mut TriMesh) {
    let mut remap = vec![u32::MAX; mesh.vertices.len()];
    let mut verts = Vec::new();
    for f in &mut mesh.faces {
        for v in f.iter_mut() {
            if remap[*v as usize] == u32::MAX {
                remap[*v as usize] = verts.len() as u32;
                verts.push(mesh.vertices[*v as usize]);
            }
            *v = remap[*v as usize];
        }
    }
    mesh.vertices = verts;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_primitive;

    fn cube(dx: f64) -> TriMesh {
        make_primitive("box", &[1.0, 1.0, 1.0]).unwrap().apply_translate(dx, 0.0, 0.0).triangulate(32)
    }

    #[test]
    fn operator_tokens() {
        assert_eq!("&&".parse::<BooleanOp>().unwrap(), BooleanOp::Intersection);
        assert!("*".parse::<BooleanOp>().is_err());
    }

    #[test]
    fn shifted_cube_overlap() {
        let r = mesh_boolean(&cube(0.0), &cube(0.5), BooleanOp::Intersection).unwrap();
        assert!((csg_volume(&r) - 0.5).abs() < 1e-9);
        assert!(r.mesh.is_watertight());
        let u = mesh_boolean(&cube(0.0), &cube(0.5), BooleanOp::Union).unwrap();
        assert!((csg_volume(&u) - 1.5).abs() < 1e-9);
        let d = mesh_boolean(&cube(0.0), &cube(0.5), BooleanOp::Difference).unwrap();
        assert!((csg_volume(&d) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn self_difference_is_empty() {
        let r = mesh_boolean(&cube(0.0), &cube(0.0), BooleanOp::Difference).unwrap();
        assert!(r.empty);
        assert_eq!(csg_volume(&r), 0.0);
    }
}
