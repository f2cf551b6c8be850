use super::Loc;

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub name: String,
    pub extends: Option<String>,
    pub imports: Vec<String>,
    pub fields: Vec<VarDecl>,
    pub methods: Vec<Method>,
    pub loc: Loc,
}

impl Program {
    pub fn method(&self, name: &str) -> Option<&Method> {
        self.methods.iter().find(|m| m.name == name)
    }

    pub fn main(&self) -> Option<&Method> {
        self.methods.iter().find(|m| m.name == "main" && !m.is_constructor)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeName {
    pub base: String,
    pub array: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Declarator {
    pub name: String,
    pub init: Option<Expr>,
    pub loc: Loc,
}

/// `float a = 1, b;`
#[derive(Debug, Clone, PartialEq)]
pub struct VarDecl {
    pub modifiers: Vec<String>,
    pub ty: TypeName,
    pub declarators: Vec<Declarator>,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub ty: TypeName,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Method {
    pub name: String,
    pub modifiers: Vec<String>,
    /// `None` for constructors.
    pub ret: Option<TypeName>,
    pub params: Vec<Param>,
    pub body: Vec<Stmt>,
    pub is_constructor: bool,
    pub loc: Loc,
}

impl Method {
    /// All rules blocks in the body, including nested ones, in source order.
    pub fn rules_blocks(&self) -> Vec<&RulesBlock> {
        let mut out = Vec::new();
        for s in &self.body {
            s.collect_rules(&mut out);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignOp {
    Set,
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

impl AssignOp {
    pub fn token(self) -> &'static str {
        match self {
            AssignOp::Set => "=",
            AssignOp::Add => "+=",
            AssignOp::Sub => "-=",
            AssignOp::Mul => "*=",
            AssignOp::Div => "/=",
            AssignOp::Rem => "%=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Var(VarDecl),
    Assign {
        target: Expr,
        op: AssignOp,
        value: Expr,
        loc: Loc,
    },
    /// `x++` / `x--`
    Step {
        target: Expr,
        increment: bool,
        loc: Loc,
    },
    Expr(Expr),
    If {
        cond: Expr,
        then: Box<Stmt>,
        otherwise: Option<Box<Stmt>>,
        loc: Loc,
    },
    For {
        init: Option<Box<Stmt>>,
        cond: Option<Expr>,
        update: Option<Box<Stmt>>,
        body: Box<Stmt>,
        loc: Loc,
    },
    While {
        cond: Expr,
        body: Box<Stmt>,
        loc: Loc,
    },
    Return {
        value: Option<Expr>,
        loc: Loc,
    },
    Block(Vec<Stmt>),
    Rules(RulesBlock),
}

impl Stmt {
    fn collect_rules<'a>(&'a self, out: &mut Vec<&'a RulesBlock>) {
        match self {
            Stmt::Rules(r) => out.push(r),
            Stmt::If { then, otherwise, .. } => {
                then.collect_rules(out);
                if let Some(o) = otherwise {
                    o.collect_rules(out);
                }
            }
            Stmt::For { body, .. } | Stmt::While { body, .. } => body.collect_rules(out),
            Stmt::Block(b) => b.iter().for_each(|s| s.collect_rules(out)),
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RulesBlock {
    pub name: Option<String>,
    pub rules: Vec<Rule>,
    pub loc: Loc,
}

/// `predecessor : condition : functions {successors};`
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub predecessor: String,
    pub condition: Option<Expr>,
    pub functions: Vec<Call>,
    pub successors: Vec<Successor>,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Call {
    pub name: String,
    pub args: Vec<Expr>,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Successor {
    Terminal(Loc),
    Symbol(String, Loc),
    Method(Call),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Plus,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

impl BinaryOp {
    pub fn token(self) -> &'static str {
        match self {
            BinaryOp::Or => "||",
            BinaryOp::And => "&&",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Rem => "%",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Or => 1,
            BinaryOp::And => 2,
            BinaryOp::Eq | BinaryOp::Ne => 3,
            BinaryOp::Lt | BinaryOp::Le | BinaryOp::Gt | BinaryOp::Ge => 4,
            BinaryOp::Add | BinaryOp::Sub => 5,
            BinaryOp::Mul | BinaryOp::Div | BinaryOp::Rem => 6,
        }
    }
}

/// Precedence of `instanceof`, shared with the relational operators.
pub const INSTANCEOF_PRECEDENCE: u8 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub loc: Loc,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Number(f64),
    Str(String),
    Bool(bool),
    Ident(String),
    Attr(String),
    Member(Box<Expr>, String),
    Index(Box<Expr>, Box<Expr>),
    Call(Box<Expr>, Vec<Expr>),
    Array(Vec<Expr>),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    /// Right operand as written (possibly dotted); only the last segment is significant.
    InstanceOf(Box<Expr>, String),
}

impl Expr {
    pub fn new(kind: ExprKind, loc: Loc) -> Self {
        Self { kind, loc }
    }

    /// Dotted name for chains of identifiers and member accesses, e.g. `brick.properties`.
    pub fn dotted_name(&self) -> Option<String> {
        match &self.kind {
            ExprKind::Ident(s) => Some(s.clone()),
            ExprKind::Member(base, field) => Some(format!("{}.{}", base.dotted_name()?, field)),
            _ => None,
        }
    }
}
