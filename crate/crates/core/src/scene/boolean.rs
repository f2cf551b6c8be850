use std::sync::Arc;

use thiserror::Error;

use super::tree::{NodeId, NodeKind, ParseTree};
use crate::csg::{mesh_boolean, BooleanOp, CsgError};
use crate::geometry::{default_segments, Frame, Geometry, Shape, TriMesh};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BooleanError {
    #[error("Boolean operand is empty")]
    EmptyOperand,
    #[error(transparent)]
    Csg(#[from] CsgError),
}

/// One side of a `geometricBoolean` call.
#[derive(Debug, Clone)]
pub enum Operand {
    /// Detached copies (results of `instances()` or earlier Booleans).
    Copies(Vec<Shape>),
    /// References to leaves of the parse tree (results of `terminals()`).
    Terminals(Vec<NodeId>),
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum BooleanOutcome {
    /// A new shape outside the tree; the tree is untouched.
    Detached(Shape),
    /// Terminals rewritten in place. Leaves emptied by the operation and
    /// leaves consumed by a union or intersection are listed in `deleted`.
    Mutated { changed: Vec<NodeId>, deleted: Vec<NodeId> },
}

fn member_meshes(tree: &ParseTree, op: &Operand) -> Vec<TriMesh> {
    let segments = default_segments();
    match op {
        Operand::Copies(shapes) => shapes.iter().map(|s| s.triangulate(segments)).collect(),
        Operand::Terminals(ids) => ids.iter().map(|&n| tree.node(n).shape.triangulate(segments)).collect(),
    }
}

fn union_all(meshes: Vec<TriMesh>) -> Result<TriMesh, BooleanError> {
    let mut iter = meshes.into_iter().filter(|m| !m.is_empty());
    let Some(mut acc) = iter.next() else {
        return Err(BooleanError::EmptyOperand);
    };
    for m in iter {
        acc = mesh_boolean(&acc, &m, BooleanOp::Union)?.mesh;
    }
    Ok(acc)
}

/// Union of all members of an operand, in world coordinates.
pub fn operand_mesh(tree: &ParseTree, op: &Operand) -> Result<TriMesh, BooleanError> {
    union_all(member_meshes(tree, op))
}

fn mesh_shape(template: &Shape, mesh: TriMesh) -> Shape {
    Shape {
        geometry: Geometry::Mesh(Arc::new(mesh)),
        frame: Frame::identity(),
        appearance: template.appearance.clone(),
        is_void: template.is_void,
        symbol: template.symbol.clone(),
    }
}

/// Applies `a op b` with the terminal/non-terminal rules:
///
/// | a  | b  | op      | effect                                   |
/// |----|----|---------|------------------------------------------|
/// | NT | NT | any     | new detached shape                       |
/// | NT | T  | any     | new detached shape                       |
/// | T  | NT | any     | a's leaves rewritten                     |
/// | T  | T  | `+` `&&`| a's leaves rewritten, b's leaves deleted |
/// | T  | T  | `-`     | a's leaves rewritten, b kept             |
///
/// A union into several `a` leaves is carried by the first leaf and the
/// others are deleted; intersection and difference rewrite each leaf.
pub fn geometric_boolean(
    tree: &mut ParseTree,
    a: &Operand,
    b: &Operand,
    op: BooleanOp,
) -> Result<BooleanOutcome, BooleanError> {
    let b_meshes = member_meshes(tree, b);
    if b_meshes.iter().all(TriMesh::is_empty) {
        return Err(BooleanError::EmptyOperand);
    }
    match a {
        Operand::Copies(shapes) => {
            let template = shapes.first().ok_or(BooleanError::EmptyOperand)?;
            let am = operand_mesh(tree, a)?;
            let mesh = combine(am, b_meshes, op)?;
            let mut shape = mesh_shape(template, mesh);
            shape.is_void = false;
            Ok(BooleanOutcome::Detached(shape))
        }
        Operand::Terminals(ids) => {
            if ids.is_empty() {
                return Err(BooleanError::EmptyOperand);
            }
            let mut changed = Vec::new();
            let mut deleted = Vec::new();
            if op == BooleanOp::Union {
                let first = ids[0];
                let mut all = member_meshes(tree, a);
                all.extend(b_meshes);
                let mesh = union_all(all)?;
                let shape = mesh_shape(&tree.node(first).shape, mesh);
                tree.node_mut(first).shape = shape;
                changed.push(first);
                deleted.extend(ids[1..].iter().copied());
            } else {
                let b_union = if op == BooleanOp::Intersection { Some(union_all(b_meshes.clone())?) } else { None };
                for &id in ids {
                    let am = tree.node(id).shape.triangulate(default_segments());
                    let mesh = match &b_union {
                        Some(bm) => mesh_boolean(&am, bm, op)?.mesh,
                        None => combine(am, b_meshes.clone(), op)?,
                    };
                    if mesh.is_empty() {
                        deleted.push(id);
                    } else {
                        let shape = mesh_shape(&tree.node(id).shape, mesh);
                        tree.node_mut(id).shape = shape;
                        changed.push(id);
                    }
                }
            }
            if let Operand::Terminals(bids) = b {
                if op != BooleanOp::Difference {
                    deleted.extend(bids.iter().copied().filter(|x| !ids.contains(x)));
                }
            }
            for &d in &deleted {
                if !tree.node(d).removed && tree.node(d).kind != NodeKind::NonTerminal {
                    tree.remove(d);
                }
            }
            Ok(BooleanOutcome::Mutated { changed, deleted })
        }
    }
}

/// `a op (b_1 ∪ … ∪ b_n)`; differences subtract members one at a time.
fn combine(a: TriMesh, b: Vec<TriMesh>, op: BooleanOp) -> Result<TriMesh, BooleanError> {
    match op {
        BooleanOp::Difference => {
            let mut acc = a;
            for m in b.iter().filter(|m| !m.is_empty()) {
                if acc.is_empty() {
                    break;
                }
                acc = mesh_boolean(&acc, m, op)?.mesh;
            }
            Ok(acc)
        }
        BooleanOp::Union => {
            let mut all = vec![a];
            all.extend(b);
            union_all(all)
        }
        BooleanOp::Intersection => Ok(mesh_boolean(&a, &union_all(b)?, op)?.mesh),
    }
}
