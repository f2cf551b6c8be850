//! Procedural shape-modeling language: volumetric primitives, mesh Booleans,
//! a grammar frontend and interpreter, parse-tree queries and OBJ export.

pub mod csg;
pub mod export;
pub mod frontend;
pub mod geometry;
pub mod interp;
pub mod scene;
