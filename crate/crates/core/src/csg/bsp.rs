//! Polygon BSP trees with iterative build and clip.

use nalgebra::{Point3, Vector3};

pub(crate) const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Plane {
    pub normal: Vector3<f64>,
    pub w: f64,
}

impl Plane {
    fn flip(&mut self) {
        self.normal = -self.normal;
        self.w = -self.w;
    }

    fn distance(&self, p: &Point3<f64>) -> f64 {
        self.normal.dot(&p.coords) - self.w
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Polygon {
    pub vertices: Vec<Point3<f64>>,
    pub plane: Plane,
    pub material: u32,
}

impl Polygon {
    /// Returns `None` for degenerate input.
    pub fn new(vertices: Vec<Point3<f64>>, material: u32) -> Option<Self> {
        let normal = newell_normal(&vertices);
        let len = normal.norm();
        if len.is_nan() || len <= 0.0 {
            return None;
        }
        let normal = normal / len;
        let w = normal.dot(&vertices[0].coords);
        Some(Self { vertices, plane: Plane { normal, w }, material })
    }

    fn flip(&mut self) {
        self.vertices.reverse();
        self.plane.flip();
    }
}

/// Twice the area vector of a planar polygon.
pub(crate) fn newell_normal(vertices: &[Point3<f64>]) -> Vector3<f64> {
    let mut n = Vector3::zeros();
    let o = vertices[0].coords;
    for k in 1..vertices.len().saturating_sub(1) {
        n += (vertices[k].coords - o).cross(&(vertices[k + 1].coords - o));
    }
    n
}

const COPLANAR: u8 = 0;
const FRONT: u8 = 1;
const BACK: u8 = 2;
const SPANNING: u8 = 3;

enum Side {
    CoplanarFront,
    CoplanarBack,
    Front,
    Back,
}

/// Splits `poly` by `plane`, appending pieces to the matching outputs.
fn split_polygon(plane: &Plane, poly: Polygon, mut emit: impl FnMut(Side, Polygon)) {
    let mut kind = COPLANAR;
    let types: Vec<u8> = poly
        .vertices
        .iter()
        .map(|v| {
            let t = plane.distance(v);
            let ty = if t < -EPS {
                BACK
            } else if t > EPS {
                FRONT
            } else {
                COPLANAR
            };
            kind |= ty;
            ty
        })
        .collect();
    match kind {
        COPLANAR => {
            if plane.normal.dot(&poly.plane.normal) > 0.0 {
                emit(Side::CoplanarFront, poly)
            } else {
                emit(Side::CoplanarBack, poly)
            }
        }
        FRONT => emit(Side::Front, poly),
        BACK => emit(Side::Back, poly),
        _ => {
            let n = poly.vertices.len();
            let mut f = Vec::with_capacity(n + 1);
            let mut b = Vec::with_capacity(n + 1);
            for i in 0..n {
                let j = (i + 1) % n;
                let (ti, tj) = (types[i], types[j]);
                let (vi, vj) = (poly.vertices[i], poly.vertices[j]);
                if ti != BACK {
                    f.push(vi);
                }
                if ti != FRONT {
                    b.push(vi);
                }
                if (ti | tj) == SPANNING {
                    let t = (plane.w - plane.normal.dot(&vi.coords)) / plane.normal.dot(&(vj - vi));
                    let v = vi + (vj - vi) * t;
                    f.push(v);
                    b.push(v);
                }
            }
            if f.len() >= 3 {
                emit(Side::Front, Polygon { vertices: f, plane: poly.plane, material: poly.material });
            }
            if b.len() >= 3 {
                emit(Side::Back, Polygon { vertices: b, plane: poly.plane, material: poly.material });
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
struct Node {
    plane: Option<Plane>,
    front: Option<usize>,
    back: Option<usize>,
    polygons: Vec<Polygon>,
}

/// BSP tree stored in an arena so that deep, chain-like trees need no recursion.
#[derive(Debug, Clone)]
pub(crate) struct Bsp {
    nodes: Vec<Node>,
}

impl Bsp {
    pub fn new(polygons: Vec<Polygon>) -> Self {
        let mut bsp = Bsp { nodes: vec![Node::default()] };
        bsp.build(polygons);
        bsp
    }

    pub fn invert(&mut self) {
        for node in &mut self.nodes {
            for p in &mut node.polygons {
                p.flip();
            }
            if let Some(pl) = &mut node.plane {
                pl.flip();
            }
            std::mem::swap(&mut node.front, &mut node.back);
        }
    }

    /// Removes the parts of `polygons` that lie inside this tree's solid.
    pub fn clip_polygons(&self, polygons: Vec<Polygon>) -> Vec<Polygon> {
        let mut out = Vec::new();
        let mut stack = vec![(0usize, polygons)];
        while let Some((id, polys)) = stack.pop() {
            let node = &self.nodes[id];
            let Some(plane) = node.plane else {
                out.extend(polys);
                continue;
            };
            let mut front = Vec::new();
            let mut back = Vec::new();
            for p in polys {
                split_polygon(&plane, p, |side, piece| match side {
                    Side::Front | Side::CoplanarFront => front.push(piece),
                    Side::Back | Side::CoplanarBack => back.push(piece),
                });
            }
            match node.front {
                Some(f) => stack.push((f, front)),
                None => out.extend(front),
            }
            if let Some(b) = node.back {
                stack.push((b, back));
            }
        }
        out
    }

    pub fn clip_to(&mut self, other: &Bsp) {
        for node in &mut self.nodes {
            let polys = std::mem::take(&mut node.polygons);
            node.polygons = other.clip_polygons(polys);
        }
    }

    pub fn all_polygons(&self) -> Vec<Polygon> {
        self.nodes.iter().flat_map(|n| n.polygons.iter().cloned()).collect()
    }

    pub fn build(&mut self, polygons: Vec<Polygon>) {
        let mut stack = vec![(0usize, polygons)];
        while let Some((id, polys)) = stack.pop() {
            if polys.is_empty() {
                continue;
            }
            let plane = *self.nodes[id].plane.get_or_insert(polys[0].plane);
            let mut front = Vec::new();
            let mut back = Vec::new();
            let mut coplanar = Vec::new();
            for p in polys {
                split_polygon(&plane, p, |side, piece| match side {
                    Side::Front => front.push(piece),
                    Side::Back => back.push(piece),
                    Side::CoplanarFront | Side::CoplanarBack => coplanar.push(piece),
                });
            }
            self.nodes[id].polygons.extend(coplanar);
            if !front.is_empty() {
                let child = self.child(id, true);
                stack.push((child, front));
            }
            if !back.is_empty() {
                let child = self.child(id, false);
                stack.push((child, back));
            }
        }
    }

    fn child(&mut self, id: usize, front: bool) -> usize {
        let slot = if front { self.nodes[id].front } else { self.nodes[id].back };
        if let Some(c) = slot {
            return c;
        }
        self.nodes.push(Node::default());
        let c = self.nodes.len() - 1;
        if front {
            self.nodes[id].front = Some(c);
        } else {
            self.nodes[id].back = Some(c);
        }
        c
    }
}
