use std::collections::{BTreeMap, HashMap};
use std::fmt::Write;

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::format_float;
use crate::geometry::{Appearance, AppearanceKey, AppearanceValue, TriMesh};
use crate::scene::{NodeId, NodeKind, ParseTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroupBy {
    #[default]
    LeafSymbol,
    FullPath,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExportOptions {
    pub include_voids: bool,
    pub segments: usize,
    pub group_by: GroupBy,
    /// File stem used for the `mtllib` reference.
    pub stem: String,
}

impl Default for ExportOptions {
    fn default() -> Self {
        Self {
            include_voids: false,
            segments: crate::geometry::DEFAULT_SEGMENTS,
            group_by: GroupBy::LeafSymbol,
            stem: "model".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExportError {
    #[error("segment count must be at least 3, got {0}")]
    Segments(usize),
    #[error("node `{0}` was never derived")]
    UnterminatedDerivation(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjOutput {
    pub obj: String,
    pub mtl: String,
    /// Present when voids were requested.
    pub voids: Option<String>,
}

/// `m_` followed by the first 64 bits of the SHA-256 of the appearance's canonical form.
pub fn material_name(appearance: &Appearance) -> String {
    let digest = Sha256::digest(appearance.canonical().as_bytes());
    let mut name = String::from("m_");
    for b in digest.iter().take(8) {
        write!(name, "{b:02x}").unwrap();
    }
    name
}

/// Serializes the visible terminals (and, optionally, the voids into a
/// separate OBJ) with one group per terminal and one material per distinct
/// appearance.
pub fn write_obj(tree: &ParseTree, opts: &ExportOptions) -> Result<ObjOutput, ExportError> {
    if opts.segments < 3 {
        return Err(ExportError::Segments(opts.segments));
    }
    let mut visible = Vec::new();
    let mut voids = Vec::new();
    for n in tree.preorder() {
        let node = tree.node(n);
        match node.kind {
            NodeKind::Terminal => visible.push(n),
            NodeKind::VoidTerminal => voids.push(n),
            NodeKind::NonTerminal if node.children.is_empty() && node.stamp.is_none() => {
                return Err(ExportError::UnterminatedDerivation(tree.path(n)));
            }
            NodeKind::NonTerminal => {}
        }
    }
    let mut materials = BTreeMap::new();
    let obj = write_group_file(tree, &visible, opts, &mut materials);
    let voids = opts.include_voids.then(|| write_group_file(tree, &voids, opts, &mut materials));
    let mut mtl = String::from("# psml materials\n");
    for (name, appearance) in &materials {
        mtl.push('\n');
        write_material(&mut mtl, name, appearance);
    }
    Ok(ObjOutput { obj, mtl, voids })
}

fn write_group_file(
    tree: &ParseTree,
    nodes: &[NodeId],
    opts: &ExportOptions,
    materials: &mut BTreeMap<String, Appearance>,
) -> String {
    let mut out = String::new();
    out.push_str("# psml export\n# right-handed coordinates, +Y up, model units\n");
    writeln!(out, "mtllib {}.mtl", opts.stem).unwrap();
    let mut base = 1usize;
    for &n in nodes {
        let node = tree.node(n);
        let name = match opts.group_by {
            GroupBy::LeafSymbol => node.symbol.clone(),
            GroupBy::FullPath => tree.path(n),
        };
        let mesh = node.shape.triangulate(opts.segments);
        writeln!(out, "g {name}").unwrap();
        base += write_mesh(&mut out, &mesh, base, &node.shape.appearance, materials);
    }
    out
}

/// Writes deduplicated vertices then faces; returns the number of vertices written.
fn write_mesh(
    out: &mut String,
    mesh: &TriMesh,
    base: usize,
    fallback: &Appearance,
    materials: &mut BTreeMap<String, Appearance>,
) -> usize {
    let mut index: HashMap<[u64; 3], usize> = HashMap::new();
    let mut remap = Vec::with_capacity(mesh.vertices.len());
    let mut order = Vec::new();
    for p in &mesh.vertices {
        let key = [canon(p.x).to_bits(), canon(p.y).to_bits(), canon(p.z).to_bits()];
        let next = index.len();
        let i = *index.entry(key).or_insert_with(|| {
            order.push(p);
            next
        });
        remap.push(i);
    }
    for p in order.iter() {
        writeln!(out, "v {} {} {}", format_float(p.x), format_float(p.y), format_float(p.z)).unwrap();
    }
    let mut current: Option<String> = None;
    for (f, face) in mesh.faces.iter().enumerate() {
        let appearance = mesh.face_material.get(f).and_then(|&m| mesh.materials.get(m as usize)).unwrap_or(fallback);
        let name = material_name(appearance);
        if current.as_deref() != Some(name.as_str()) {
            writeln!(out, "usemtl {name}").unwrap();
            materials.entry(name.clone()).or_insert_with(|| appearance.clone());
            current = Some(name);
        }
        let [a, b, c] = face.map(|v| remap[v as usize] + base);
        if a != b && b != c && a != c {
            writeln!(out, "f {a} {b} {c}").unwrap();
        }
    }
    order.len()
}

fn canon(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x
    }
}

fn rgb(v: &[f64]) -> Option<String> {
    let v = match v {
        [g] => [*g, *g, *g],
        [r, g, b, ..] => [*r, *g, *b],
        _ => return None,
    };
    Some(v.map(format_float).join(" "))
}

fn write_material(out: &mut String, name: &str, a: &Appearance) {
    writeln!(out, "newmtl {name}").unwrap();
    let diffuse = a
        .numbers(AppearanceKey::Diffuse)
        .or_else(|| a.numbers(AppearanceKey::Color))
        .and_then(rgb)
        .unwrap_or_else(|| "0.8 0.8 0.8".to_string());
    writeln!(out, "Kd {diffuse}").unwrap();
    if let Some(ka) = a.numbers(AppearanceKey::Ambient).and_then(rgb) {
        writeln!(out, "Ka {ka}").unwrap();
    }
    let ks = a.numbers(AppearanceKey::Specular).and_then(rgb).unwrap_or_else(|| "0 0 0".to_string());
    writeln!(out, "Ks {ks}").unwrap();
    if let Some(ke) = a.numbers(AppearanceKey::Emissive).and_then(rgb) {
        writeln!(out, "Ke {ke}").unwrap();
    }
    if let Some(&[ns, ..]) = a.numbers(AppearanceKey::Shininess) {
        writeln!(out, "Ns {}", format_float(ns)).unwrap();
    }
    let transparency = a.numbers(AppearanceKey::Transparency).and_then(|v| v.first().copied()).unwrap_or(0.0);
    writeln!(out, "d {}", format_float(1.0 - transparency)).unwrap();
    if let Some(tex) = text(a, AppearanceKey::Texture) {
        writeln!(out, "map_Kd {tex}").unwrap();
    }
    let bump = text(a, AppearanceKey::BumpMap).or_else(|| text(a, AppearanceKey::Bump));
    if let Some(bump) = bump {
        match a.numbers(AppearanceKey::BumpWeight).and_then(|v| v.first()) {
            Some(w) => writeln!(out, "map_bump -bm {} {bump}", format_float(*w)).unwrap(),
            None => writeln!(out, "map_bump {bump}").unwrap(),
        }
    }
    if let Some(m) = a.get(AppearanceKey::Material) {
        writeln!(out, "# material {m}").unwrap();
    }
}

fn text(a: &Appearance, key: AppearanceKey) -> Option<String> {
    match a.get(key)? {
        AppearanceValue::Text(s) => Some(s.clone()),
        AppearanceValue::Numbers(_) => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Shape;

    #[test]
    fn material_names_are_stable_and_distinct() {
        let mut red = Appearance::new();
        red.set(AppearanceKey::Diffuse, AppearanceValue::Numbers(vec![1.0, 0.0, 0.0]));
        let name = material_name(&red);
        assert_eq!(name.len(), 18);
        assert_eq!(name, material_name(&red.clone()));
        assert_ne!(name, material_name(&Appearance::new()));
    }

    #[test]
    fn cube_exports_eight_vertices_and_twelve_faces() {
        let mut t = ParseTree::new("Axiom", Shape::unit_cube());
        t.node_mut(0).kind = NodeKind::Terminal;
        let out = write_obj(&t, &ExportOptions::default()).unwrap();
        assert_eq!(out.obj.lines().filter(|l| l.starts_with("v ")).count(), 8);
        assert_eq!(out.obj.lines().filter(|l| l.starts_with("f ")).count(), 12);
        assert!(out.obj.contains("mtllib model.mtl"));
        assert!(out.mtl.contains("d 1\n"));
        assert!(out.voids.is_none());
    }

    #[test]
    fn transparency_maps_to_dissolve() {
        let mut a = Appearance::new();
        a.set(AppearanceKey::Transparency, AppearanceValue::Numbers(vec![0.25]));
        a.set(AppearanceKey::Texture, AppearanceValue::Text("rock.jpg".into()));
        let mut s = String::new();
        write_material(&mut s, "m", &a);
        assert!(s.contains("d 0.75\n"));
        assert!(s.contains("map_Kd rock.jpg\n"));
    }

    #[test]
    fn rejects_too_few_segments() {
        let t = ParseTree::new("Axiom", Shape::unit_cube());
        let opts = ExportOptions { segments: 2, ..ExportOptions::default() };
        assert_eq!(write_obj(&t, &opts), Err(ExportError::Segments(2)));
    }
}
