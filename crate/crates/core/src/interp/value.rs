use std::fmt;

use crate::scene::{NodeId, Operand};

#[derive(Debug, Clone)]
pub enum Value {
    Num(f64),
    Str(String),
    Array(Vec<Value>),
    /// One or more shapes: detached copies or references to parse-tree leaves.
    Shapes(Operand),
    /// Roots produced by a named rules block; usable as a query search root.
    Block(Vec<NodeId>),
    Unit,
}

impl Value {
    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Num(_) => "number",
            Value::Str(_) => "string",
            Value::Array(_) => "array",
            Value::Shapes(_) => "shape",
            Value::Block(_) => "rules block",
            Value::Unit => "nothing",
        }
    }

    pub fn truthy(&self) -> bool {
        match self {
            Value::Num(n) => *n != 0.0,
            Value::Str(s) => !s.is_empty(),
            Value::Array(v) => !v.is_empty(),
            Value::Shapes(Operand::Copies(v)) => !v.is_empty(),
            Value::Shapes(Operand::Terminals(v)) => !v.is_empty(),
            Value::Block(v) => !v.is_empty(),
            Value::Unit => false,
        }
    }

    pub fn bool(b: bool) -> Value {
        Value::Num(if b { 1.0 } else { 0.0 })
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(n) => write!(f, "{n}"),
            Value::Str(s) => f.write_str(s),
            Value::Array(v) => {
                let items: Vec<String> = v.iter().map(ToString::to_string).collect();
                write!(f, "{{{}}}", items.join(", "))
            }
            Value::Shapes(Operand::Copies(v)) => write!(f, "<{} shape copies>", v.len()),
            Value::Shapes(Operand::Terminals(v)) => write!(f, "<{} terminals>", v.len()),
            Value::Block(v) => write!(f, "<rules block with {} roots>", v.len()),
            Value::Unit => f.write_str("<nothing>"),
        }
    }
}
