use std::collections::HashMap;
use std::path::PathBuf;
use std::rc::Rc;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::value::Value;
use super::{read_attribute_file, Library, RunOptions, RunOutput, RuntimeError, RuntimeErrorKind, ROOT_SYMBOL};
use crate::csg::BooleanOp;
use crate::frontend::{
    AssignOp, AttributeFile, AttributeGroup, AttributeValue, BinaryOp, Call, Expr, ExprKind, Loc, Method, Program,
    RulesBlock, Stmt, Successor, UnaryOp,
};
use crate::geometry::{
    make_primitive, repeat_shape, split_shape, Appearance, AppearanceKey, AppearanceValue, Axis, GeometryError, Shape,
};
use crate::scene::{geometric_boolean, instances, terminals, BooleanOutcome, NodeId, NodeKind, Operand, ParseTree};

const LOOP_LIMIT: usize = 10_000_000;

type R<T> = Result<T, RuntimeError>;

struct AttrLayer {
    group: Arc<AttributeGroup>,
    parent: AttrScope,
}

/// Attribute groups visible to a derivation subtree, innermost first.
type AttrScope = Option<Rc<AttrLayer>>;

struct Grammar {
    program: Arc<Program>,
    dir: Option<PathBuf>,
    fields: HashMap<String, Value>,
}

struct Frame {
    grammar: usize,
    scopes: Vec<HashMap<String, Value>>,
    /// Node the running method derives into.
    node: NodeId,
    my_shape: Shape,
    attrs: AttrScope,
}

/// Per-expression context: the rule predecessor (if inside a rule) and attributes.
struct Ctx<'a> {
    scope: Option<&'a Shape>,
    attrs: &'a AttrScope,
}

enum Flow {
    Next,
    Return(Value),
}

enum Pending {
    Scale(f64, f64, f64),
    Rotate(f64, f64, f64),
    Translate(f64, f64, f64),
}

struct Chain {
    shapes: Vec<Shape>,
    repeat: bool,
    attrs: AttrScope,
}

struct Work<'b> {
    node: NodeId,
    depth: usize,
    attrs: AttrScope,
    axiom: bool,
    call: Option<(&'b Call, Vec<Value>)>,
}

struct Machine {
    grammars: Vec<Grammar>,
    tree: ParseTree,
    rng: ChaCha8Rng,
    opts: RunOptions,
    entry_dir: Option<PathBuf>,
    lib_attrs: HashMap<String, Arc<AttributeFile>>,
    attr_cache: HashMap<(String, String), Arc<AttributeGroup>>,
    log: Vec<String>,
    call_depth: usize,
}

pub(super) fn run(entry: Program, dir: Option<PathBuf>, lib: Library, opts: RunOptions) -> R<RunOutput> {
    let mut names: Vec<&String> = lib.programs.keys().filter(|n| **n != entry.name).collect();
    names.sort();
    let mut grammars = vec![Grammar { program: Arc::new(entry), dir: dir.clone(), fields: HashMap::new() }];
    for n in names {
        let (p, d) = &lib.programs[n];
        grammars.push(Grammar { program: p.clone(), dir: d.clone(), fields: HashMap::new() });
    }
    let mut m = Machine {
        grammars,
        tree: ParseTree::new(ROOT_SYMBOL, Shape::unit_cube()),
        rng: ChaCha8Rng::seed_from_u64(opts.seed),
        opts,
        entry_dir: dir,
        lib_attrs: lib.attributes.clone(),
        attr_cache: HashMap::new(),
        log: Vec::new(),
        call_depth: 0,
    };
    for g in 0..m.grammars.len() {
        m.init_fields(g)?;
    }
    let program = m.grammars[0].program.clone();
    for (name, _) in &m.opts.overrides {
        if !m.grammars[0].fields.contains_key(name) {
            return Err(m.error(0, program.loc, RuntimeErrorKind::UnknownOverride(name.clone())));
        }
    }
    let main = program.main().expect("parser guarantees a main method");
    let args = vec![Value::Array(Vec::new()); main.params.len()];
    let root = m.tree.root();
    m.tree.stamp(root);
    m.invoke(0, main, args, root, Shape::unit_cube(), None, main.loc)?;
    Ok(RunOutput { tree: m.tree, log: m.log })
}

impl Machine {
    fn error(&self, g: usize, loc: Loc, kind: RuntimeErrorKind) -> RuntimeError {
        RuntimeError { grammar: self.grammars[g].program.name.clone(), loc, kind }
    }

    fn fail<T>(&self, frame: &Frame, loc: Loc, kind: RuntimeErrorKind) -> R<T> {
        Err(self.error(frame.grammar, loc, kind))
    }

    fn type_error<T>(&self, frame: &Frame, loc: Loc, msg: String) -> R<T> {
        self.fail(frame, loc, RuntimeErrorKind::Type(msg))
    }

    fn init_fields(&mut self, g: usize) -> R<()> {
        let program = self.grammars[g].program.clone();
        let frame =
            Frame { grammar: g, scopes: Vec::new(), node: self.tree.root(), my_shape: Shape::unit_cube(), attrs: None };
        for decl in &program.fields {
            for d in &decl.declarators {
                let over = if g == 0 {
                    self.opts.overrides.iter().find(|(n, _)| *n == d.name).map(|(_, v)| v.clone())
                } else {
                    None
                };
                let value = match (over, &d.init) {
                    (Some(v), _) => v,
                    (None, Some(e)) => {
                        let attrs = None;
                        let ctx = Ctx { scope: None, attrs: &attrs };
                        self.eval(&frame, &ctx, e)?
                    }
                    (None, None) => default_value(&decl.ty.base, decl.ty.array),
                };
                let value = coerce(&decl.ty.base, value);
                self.grammars[g].fields.insert(d.name.clone(), value);
            }
        }
        Ok(())
    }

    // ---- methods and statements ----

    #[allow(clippy::too_many_arguments)]
    fn invoke(
        &mut self,
        g: usize,
        method: &Method,
        args: Vec<Value>,
        node: NodeId,
        shape: Shape,
        attrs: AttrScope,
        loc: Loc,
    ) -> R<Value> {
        if args.len() != method.params.len() {
            return Err(self.error(
                g,
                loc,
                RuntimeErrorKind::ArgumentCount {
                    name: method.name.clone(),
                    expected: method.params.len(),
                    got: args.len(),
                },
            ));
        }
        if self.call_depth >= self.opts.depth_limit {
            return Err(self.error(g, loc, RuntimeErrorKind::DepthLimit(self.opts.depth_limit)));
        }
        let my_shape = if shape.is_mesh() { shape.bounding_box() } else { shape };
        let mut locals = HashMap::new();
        for (p, v) in method.params.iter().zip(args) {
            locals.insert(p.name.clone(), coerce(&p.ty.base, v));
        }
        let mut frame = Frame { grammar: g, scopes: vec![locals], node, my_shape, attrs };
        self.call_depth += 1;
        let flow = self.exec_stmts(&mut frame, &method.body);
        self.call_depth -= 1;
        Ok(match flow? {
            Flow::Return(v) => v,
            Flow::Next => Value::Unit,
        })
    }

    fn exec_stmts(&mut self, frame: &mut Frame, stmts: &[Stmt]) -> R<Flow> {
        for s in stmts {
            if let Flow::Return(v) = self.exec(frame, s)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Next)
    }

    fn exec_scoped(&mut self, frame: &mut Frame, s: &Stmt) -> R<Flow> {
        frame.scopes.push(HashMap::new());
        let r = self.exec(frame, s);
        frame.scopes.pop();
        r
    }

    fn eval_stmt_expr(&mut self, frame: &Frame, e: &Expr) -> R<Value> {
        let attrs = frame.attrs.clone();
        let ctx = Ctx { scope: None, attrs: &attrs };
        self.eval(frame, &ctx, e)
    }

    fn exec(&mut self, frame: &mut Frame, s: &Stmt) -> R<Flow> {
        match s {
            Stmt::Var(decl) => {
                for d in &decl.declarators {
                    let v = match &d.init {
                        Some(e) => self.eval_stmt_expr(frame, e)?,
                        None => default_value(&decl.ty.base, decl.ty.array),
                    };
                    let v = coerce(&decl.ty.base, v);
                    frame.scopes.last_mut().expect("method scope").insert(d.name.clone(), v);
                }
            }
            Stmt::Assign { target, op, value, loc } => {
                let rhs = self.eval_stmt_expr(frame, value)?;
                let new = if *op == AssignOp::Set {
                    rhs
                } else {
                    let cur = self.eval_stmt_expr(frame, target)?;
                    let bop = match op {
                        AssignOp::Add => BinaryOp::Add,
                        AssignOp::Sub => BinaryOp::Sub,
                        AssignOp::Mul => BinaryOp::Mul,
                        AssignOp::Div => BinaryOp::Div,
                        AssignOp::Rem => BinaryOp::Rem,
                        AssignOp::Set => unreachable!(),
                    };
                    self.arith(frame, *loc, bop, cur, rhs)?
                };
                self.store(frame, target, new, *loc)?;
            }
            Stmt::Step { target, increment, loc } => {
                let cur = self.eval_stmt_expr(frame, target)?;
                let Value::Num(n) = cur else {
                    return self.type_error(frame, *loc, format!("cannot increment a {}", cur.type_name()));
                };
                let delta = if *increment { 1.0 } else { -1.0 };
                self.store(frame, target, Value::Num(n + delta), *loc)?;
            }
            Stmt::Expr(e) => {
                self.eval_stmt_expr(frame, e)?;
            }
            Stmt::If { cond, then, otherwise, .. } => {
                if self.eval_stmt_expr(frame, cond)?.truthy() {
                    return self.exec_scoped(frame, then);
                } else if let Some(o) = otherwise {
                    return self.exec_scoped(frame, o);
                }
            }
            Stmt::While { cond, body, loc } => {
                let mut n = 0;
                while self.eval_stmt_expr(frame, cond)?.truthy() {
                    n += 1;
                    if n > LOOP_LIMIT {
                        return self.fail(frame, *loc, RuntimeErrorKind::LoopLimit(LOOP_LIMIT));
                    }
                    if let Flow::Return(v) = self.exec_scoped(frame, body)? {
                        return Ok(Flow::Return(v));
                    }
                }
            }
            Stmt::For { init, cond, update, body, loc } => {
                frame.scopes.push(HashMap::new());
                let r = self.exec_for(frame, init.as_deref(), cond.as_ref(), update.as_deref(), body, *loc);
                frame.scopes.pop();
                return r;
            }
            Stmt::Return { value, .. } => {
                let v = match value {
                    Some(e) => self.eval_stmt_expr(frame, e)?,
                    None => Value::Unit,
                };
                return Ok(Flow::Return(v));
            }
            Stmt::Block(items) => {
                frame.scopes.push(HashMap::new());
                let r = self.exec_stmts(frame, items);
                frame.scopes.pop();
                return r;
            }
            Stmt::Rules(block) => {
                let roots = self.derive_block(frame, block)?;
                if let Some(name) = &block.name {
                    frame.scopes.last_mut().expect("method scope").insert(name.clone(), Value::Block(roots));
                }
            }
        }
        Ok(Flow::Next)
    }

    fn exec_for(
        &mut self,
        frame: &mut Frame,
        init: Option<&Stmt>,
        cond: Option<&Expr>,
        update: Option<&Stmt>,
        body: &Stmt,
        loc: Loc,
    ) -> R<Flow> {
        if let Some(i) = init {
            self.exec(frame, i)?;
        }
        let mut n = 0;
        loop {
            if let Some(c) = cond {
                if !self.eval_stmt_expr(frame, c)?.truthy() {
                    break;
                }
            }
            n += 1;
            if n > LOOP_LIMIT {
                return self.fail(frame, loc, RuntimeErrorKind::LoopLimit(LOOP_LIMIT));
            }
            if let Flow::Return(v) = self.exec_scoped(frame, body)? {
                return Ok(Flow::Return(v));
            }
            if let Some(u) = update {
                self.exec(frame, u)?;
            }
        }
        Ok(Flow::Next)
    }

    fn store(&mut self, frame: &mut Frame, target: &Expr, value: Value, loc: Loc) -> R<()> {
        match &target.kind {
            ExprKind::Ident(name) => {
                let slot = self.slot(frame, name);
                match slot {
                    Some(v) => {
                        *v = value;
                        Ok(())
                    }
                    None => self.fail(frame, loc, RuntimeErrorKind::UnknownIdentifier(name.clone())),
                }
            }
            ExprKind::Index(base, idx) => {
                let ExprKind::Ident(name) = &base.kind else {
                    return self.type_error(frame, loc, "only named arrays can be assigned by index".into());
                };
                let i = self.eval_stmt_expr(frame, idx)?;
                let Value::Num(i) = i else {
                    return self.type_error(frame, loc, format!("array index must be a number, not {}", i.type_name()));
                };
                let g = frame.grammar;
                let name_owned = name.clone();
                let Some(slot) = self.slot(frame, name) else {
                    return Err(self.error(g, loc, RuntimeErrorKind::UnknownIdentifier(name_owned)));
                };
                match slot {
                    Value::Array(items) if i >= 0.0 && (i as usize) < items.len() => {
                        items[i as usize] = value;
                        Ok(())
                    }
                    Value::Array(items) => {
                        let len = items.len();
                        Err(self.error(
                            g,
                            loc,
                            RuntimeErrorKind::Type(format!("index {i} out of bounds for length {len}")),
                        ))
                    }
                    other => {
                        let t = other.type_name();
                        Err(self.error(g, loc, RuntimeErrorKind::Type(format!("cannot index a {t}"))))
                    }
                }
            }
            _ => self.type_error(frame, loc, "assignment target must be a variable or array element".into()),
        }
    }

    fn slot<'a>(&'a mut self, frame: &'a mut Frame, name: &str) -> Option<&'a mut Value> {
        if let Some(scope) = frame.scopes.iter_mut().rev().find(|s| s.contains_key(name)) {
            return scope.get_mut(name);
        }
        self.grammars[frame.grammar].fields.get_mut(name)
    }

    // ---- derivation ----

    fn find_method(&self, g: usize, name: &str) -> Option<(usize, usize)> {
        let own = &self.grammars[g].program;
        if let Some(i) = own.methods.iter().position(|m| m.name == name && m.name != "main") {
            return Some((g, i));
        }
        self.grammars.iter().enumerate().find_map(|(gi, gr)| {
            (gr.program.name == name)
                .then(|| gr.program.methods.iter().position(|m| m.is_constructor))
                .flatten()
                .map(|mi| (gi, mi))
        })
    }

    /// Applies the block's first rule to the frame's node and expands depth-first.
    /// Returns the roots the block produced.
    fn derive_block(&mut self, frame: &Frame, block: &RulesBlock) -> R<Vec<NodeId>> {
        let start = frame.node;
        if block.rules.is_empty() {
            return Ok(Vec::new());
        }
        let before = self.tree.node(start).children.len();
        let mut stack = vec![Work {
            node: start,
            depth: self.tree.depth(start),
            attrs: frame.attrs.clone(),
            axiom: true,
            call: None,
        }];
        while let Some(w) = stack.pop() {
            self.tree.stamp(w.node);
            if let Some((call, args)) = w.call {
                let Some((mg, mi)) = self.find_method(frame.grammar, &call.name) else {
                    return self.fail(frame, call.loc, RuntimeErrorKind::UnknownMethod(call.name.clone()));
                };
                let program = self.grammars[mg].program.clone();
                let shape = self.tree.node(w.node).shape.clone();
                self.invoke(mg, &program.methods[mi], args, w.node, shape, w.attrs, call.loc)?;
                continue;
            }
            if self.tree.node(w.node).kind.is_leaf() {
                continue;
            }
            if w.depth > self.opts.depth_limit {
                let loc = block.loc;
                return self.fail(frame, loc, RuntimeErrorKind::DepthLimit(self.opts.depth_limit));
            }
            let pred = self.tree.node(w.node).shape.clone();
            let symbol = self.tree.node(w.node).symbol.clone();
            let rule = if w.axiom {
                &block.rules[0]
            } else {
                let mut chosen = None;
                for r in block.rules.iter().filter(|r| r.predecessor == symbol) {
                    let ok = match &r.condition {
                        None => true,
                        Some(c) => {
                            let ctx = Ctx { scope: Some(&pred), attrs: &w.attrs };
                            self.eval(frame, &ctx, c)?.truthy()
                        }
                    };
                    if ok {
                        chosen = Some(r);
                        break;
                    }
                }
                match chosen {
                    Some(r) => r,
                    None => {
                        let loc = block.loc;
                        return self.fail(frame, loc, RuntimeErrorKind::NoApplicableRule(symbol));
                    }
                }
            };

            let chain = self.apply_chain(frame, &rule.functions, &pred, w.attrs.clone())?;
            let succ = &rule.successors;
            if let ([Successor::Terminal(_)], [shape]) = (succ.as_slice(), chain.shapes.as_slice()) {
                let node = self.tree.node_mut(w.node);
                let mut shape = shape.clone();
                shape.symbol = node.symbol.clone();
                node.kind = if shape.is_void { NodeKind::VoidTerminal } else { NodeKind::Terminal };
                node.shape = shape;
                continue;
            }
            let n = chain.shapes.len();
            if n == 0 || (!chain.repeat && n != succ.len()) {
                return self.fail(frame, rule.loc, RuntimeErrorKind::SuccessorArity { expected: succ.len(), got: n });
            }
            let mut children = Vec::with_capacity(n);
            for (i, shape) in chain.shapes.into_iter().enumerate() {
                let s = &succ[i % succ.len()];
                let work = match s {
                    Successor::Terminal(_) => {
                        let kind = if shape.is_void { NodeKind::VoidTerminal } else { NodeKind::Terminal };
                        let id = self.tree.add_child(w.node, &symbol, shape, kind);
                        Work { node: id, depth: w.depth + 1, attrs: None, axiom: false, call: None }
                    }
                    Successor::Symbol(name, _) => {
                        let id = self.tree.add_child(w.node, name, shape, NodeKind::NonTerminal);
                        Work { node: id, depth: w.depth + 1, attrs: chain.attrs.clone(), axiom: false, call: None }
                    }
                    Successor::Method(call) => {
                        let ctx = Ctx { scope: Some(&pred), attrs: &chain.attrs };
                        let mut args = Vec::with_capacity(call.args.len());
                        for a in &call.args {
                            args.push(self.eval(frame, &ctx, a)?);
                        }
                        let id = self.tree.add_child(w.node, &call.name, shape, NodeKind::NonTerminal);
                        Work {
                            node: id,
                            depth: w.depth + 1,
                            attrs: chain.attrs.clone(),
                            axiom: false,
                            call: Some((call, args)),
                        }
                    }
                };
                children.push(work);
            }
            stack.extend(children.into_iter().rev());
        }
        let node = self.tree.node(start);
        if node.kind.is_leaf() {
            Ok(vec![start])
        } else {
            Ok(node.children[before.min(node.children.len())..].to_vec())
        }
    }

    fn apply_chain(&mut self, frame: &Frame, calls: &[Call], pred: &Shape, attrs: AttrScope) -> R<Chain> {
        let mut attrs = attrs;
        let mut base = pred.clone();
        let mut created: Vec<Shape> = Vec::new();
        let mut pending: Vec<Pending> = Vec::new();
        let mut split_out: Option<Vec<Shape>> = None;
        let mut repeat = false;
        let mut void = false;
        for call in calls {
            let loc = call.loc;
            if split_out.is_some() && call.name != "useAttributes" {
                return self.fail(frame, loc, RuntimeErrorKind::FunctionAfterSplit(call.name.clone()));
            }
            let ctx_attrs = attrs.clone();
            let ctx = Ctx { scope: Some(pred), attrs: &ctx_attrs };
            match call.name.as_str() {
                "I" => {
                    self.arity(frame, call, 1, 2)?;
                    let kind = self.symbolic(frame, &ctx, &call.args[0])?;
                    let params = match call.args.get(1) {
                        Some(e) => self.numbers(frame, &ctx, e)?,
                        None => Vec::new(),
                    };
                    let mut shape = make_primitive(&kind, &params).map_err(|e| self.geo(frame, loc, e))?;
                    shape.frame.rotation = base.frame.rotation;
                    shape.frame.translation = base.world_center().coords;
                    shape.appearance = base.appearance.clone();
                    let shape = self.apply_pending(frame, loc, shape, &mut pending)?;
                    created.push(shape);
                }
                "S" | "R" | "T" => {
                    let v = self.vector3(frame, &ctx, call)?;
                    pending.push(match call.name.as_str() {
                        "S" => Pending::Scale(v[0], v[1], v[2]),
                        "R" => Pending::Rotate(v[0], v[1], v[2]),
                        _ => Pending::Translate(v[0], v[1], v[2]),
                    });
                }
                "split" | "repeat" => {
                    let is_repeat = call.name == "repeat";
                    if is_repeat {
                        self.arity(frame, call, 2, 3)?;
                    } else {
                        self.arity(frame, call, 2, 2)?;
                    }
                    let axis_name = self.axis_name(frame, &ctx, &call.args[0])?;
                    let Some(axis) = Axis::from_name(&axis_name) else {
                        return self.type_error(frame, loc, format!("unknown axis `{axis_name}`"));
                    };
                    let sizes = self.numbers(frame, &ctx, &call.args[1])?;
                    let offset = match call.args.get(2) {
                        Some(e) => self.number(frame, &ctx, e)?,
                        None => 0.0,
                    };
                    let target = match created.pop() {
                        Some(s) => s,
                        None => base.clone(),
                    };
                    let target = self.apply_pending(frame, loc, target, &mut pending)?;
                    let children = if is_repeat {
                        repeat_shape(&target, axis, &sizes, offset)
                    } else {
                        split_shape(&target, axis, &sizes)
                    }
                    .map_err(|e| self.geo(frame, loc, e))?;
                    let mut out = std::mem::take(&mut created);
                    out.extend(children);
                    split_out = Some(out);
                    repeat = is_repeat;
                }
                "appearance" => {
                    self.arity(frame, call, 2, 2)?;
                    let key_name = self.symbolic(frame, &ctx, &call.args[0])?;
                    let Some(key) = AppearanceKey::from_name(&key_name) else {
                        return self.type_error(frame, loc, format!("unknown appearance attribute `{key_name}`"));
                    };
                    let value = self.appearance_value(frame, &ctx, &call.args[1])?;
                    let target = created.last_mut().unwrap_or(&mut base);
                    target.appearance.set(key, value);
                }
                "void" => {
                    self.arity(frame, call, 0, 0)?;
                    void = true;
                }
                "useAttributes" => {
                    self.arity(frame, call, 2, 2)?;
                    let file = self.symbolic(frame, &ctx, &call.args[0])?;
                    let group = self.symbolic(frame, &ctx, &call.args[1])?;
                    let g = self.load_group(frame, loc, &file, &group)?;
                    attrs = Some(Rc::new(AttrLayer { group: g, parent: attrs }));
                }
                other => return self.fail(frame, loc, RuntimeErrorKind::UnknownFunction(other.to_string())),
            }
        }
        if void && (!created.is_empty() || split_out.is_some()) {
            let loc = calls.first().map_or_else(Loc::default, |c| c.loc);
            return self.fail(frame, loc, RuntimeErrorKind::VoidWithGeometry);
        }
        let loc = calls.last().map_or_else(Loc::default, |c| c.loc);
        let mut shapes = match split_out {
            Some(v) => v,
            None => match created.pop() {
                Some(last) => {
                    let last = self.apply_pending(frame, loc, last, &mut pending)?;
                    created.push(last);
                    created
                }
                None => vec![self.apply_pending(frame, loc, base, &mut pending)?],
            },
        };
        if void {
            for s in &mut shapes {
                s.is_void = true;
            }
        }
        Ok(Chain { shapes, repeat, attrs })
    }

    fn apply_pending(&self, frame: &Frame, loc: Loc, mut shape: Shape, pending: &mut Vec<Pending>) -> R<Shape> {
        for p in pending.drain(..) {
            shape = match p {
                Pending::Scale(x, y, z) => shape.apply_scale(x, y, z).map_err(|e| self.geo(frame, loc, e))?,
                Pending::Rotate(x, y, z) => shape.apply_rotate(x, y, z),
                Pending::Translate(x, y, z) => shape.apply_translate(x, y, z),
            };
        }
        Ok(shape)
    }

    fn geo(&self, frame: &Frame, loc: Loc, e: GeometryError) -> RuntimeError {
        self.error(frame.grammar, loc, RuntimeErrorKind::Geometry(e))
    }

    fn arity(&self, frame: &Frame, call: &Call, min: usize, max: usize) -> R<()> {
        let n = call.args.len();
        if n < min || n > max {
            return self.fail(
                frame,
                call.loc,
                RuntimeErrorKind::ArgumentCount {
                    name: call.name.clone(),
                    expected: if n < min { min } else { max },
                    got: n,
                },
            );
        }
        Ok(())
    }

    fn vector3(&mut self, frame: &Frame, ctx: &Ctx, call: &Call) -> R<[f64; 3]> {
        let mut v = Vec::new();
        for a in &call.args {
            v.extend(self.numbers(frame, ctx, a)?);
        }
        match v.as_slice() {
            [x, y, z] => Ok([*x, *y, *z]),
            _ => self.fail(
                frame,
                call.loc,
                RuntimeErrorKind::ArgumentCount { name: call.name.clone(), expected: 3, got: v.len() },
            ),
        }
    }

    fn is_bound(&self, frame: &Frame, name: &str) -> bool {
        frame.scopes.iter().any(|s| s.contains_key(name))
            || self.grammars[frame.grammar].fields.contains_key(name)
            || name == "myShape"
            || name == "scope"
    }

    /// Text for name-like arguments: unbound identifiers and dotted names read as
    /// their spelling (`box`, `diffuse`, `brick.properties`).
    fn symbolic(&mut self, frame: &Frame, ctx: &Ctx, e: &Expr) -> R<String> {
        if let Some(name) = e.dotted_name() {
            let root = name.split('.').next().unwrap_or_default();
            if !self.is_bound(frame, root) {
                return Ok(name);
            }
        }
        match self.eval(frame, ctx, e)? {
            Value::Str(s) => Ok(s),
            other => self.type_error(frame, e.loc, format!("expected a name, found {}", other.type_name())),
        }
    }

    /// Like [`Self::symbolic`], but a bare axis name stays an axis when it is
    /// bound to a non-string value such as a field `r`.
    fn axis_name(&mut self, frame: &Frame, ctx: &Ctx, e: &Expr) -> R<String> {
        if let ExprKind::Ident(name) = &e.kind {
            if Axis::from_name(name).is_some() && !matches!(self.lookup(frame, ctx, name), Some(Value::Str(_))) {
                return Ok(name.clone());
            }
        }
        self.symbolic(frame, ctx, e)
    }

    fn appearance_value(&mut self, frame: &Frame, ctx: &Ctx, e: &Expr) -> R<AppearanceValue> {
        if let Some(name) = e.dotted_name() {
            let root = name.split('.').next().unwrap_or_default();
            if !self.is_bound(frame, root) {
                return Ok(AppearanceValue::Text(name));
            }
        }
        match self.eval(frame, ctx, e)? {
            Value::Str(s) => Ok(AppearanceValue::Text(s)),
            v => Ok(AppearanceValue::Numbers(self.to_numbers(frame, e.loc, v)?)),
        }
    }

    fn load_group(&mut self, frame: &Frame, loc: Loc, file: &str, group: &str) -> R<Arc<AttributeGroup>> {
        let key = (file.to_string(), group.to_string());
        if let Some(g) = self.attr_cache.get(&key) {
            return Ok(g.clone());
        }
        let parsed = match self.lib_attrs.get(file) {
            Some(f) => f.clone(),
            None => {
                let mut dirs: Vec<PathBuf> = self.opts.attr_dirs.clone();
                dirs.extend(self.grammars[frame.grammar].dir.clone());
                dirs.extend(self.entry_dir.clone());
                let mut found = None;
                for d in dirs {
                    let path = d.join(file);
                    match read_attribute_file(&path) {
                        Ok(Some(f)) => {
                            found = Some(Arc::new(f));
                            break;
                        }
                        Ok(None) => {}
                        Err(kind) => return self.fail(frame, loc, kind),
                    }
                }
                let Some(f) = found else {
                    return self.fail(frame, loc, RuntimeErrorKind::MissingAttributeFile(file.to_string()));
                };
                self.lib_attrs.insert(file.to_string(), f.clone());
                f
            }
        };
        let Some(g) = parsed.group(group) else {
            return self.fail(
                frame,
                loc,
                RuntimeErrorKind::MissingGroup { file: file.to_string(), group: group.to_string() },
            );
        };
        let g = Arc::new(g.clone());
        self.attr_cache.insert(key, g.clone());
        Ok(g)
    }

    // ---- expressions ----

    fn number(&mut self, frame: &Frame, ctx: &Ctx, e: &Expr) -> R<f64> {
        match self.eval(frame, ctx, e)? {
            Value::Num(n) => Ok(n),
            other => self.type_error(frame, e.loc, format!("expected a number, found {}", other.type_name())),
        }
    }

    /// A number list from an array or a single number.
    fn numbers(&mut self, frame: &Frame, ctx: &Ctx, e: &Expr) -> R<Vec<f64>> {
        let v = self.eval(frame, ctx, e)?;
        self.to_numbers(frame, e.loc, v)
    }

    fn to_numbers(&self, frame: &Frame, loc: Loc, v: Value) -> R<Vec<f64>> {
        match v {
            Value::Num(n) => Ok(vec![n]),
            Value::Array(items) => items
                .into_iter()
                .map(|x| match x {
                    Value::Num(n) => Ok(n),
                    other => self.type_error(frame, loc, format!("expected numbers, found {}", other.type_name())),
                })
                .collect(),
            other => self.type_error(frame, loc, format!("expected numbers, found {}", other.type_name())),
        }
    }

    fn lookup(&self, frame: &Frame, ctx: &Ctx, name: &str) -> Option<Value> {
        if let Some(v) = frame.scopes.iter().rev().find_map(|s| s.get(name)) {
            return Some(v.clone());
        }
        if let Some(v) = self.grammars[frame.grammar].fields.get(name) {
            return Some(v.clone());
        }
        match name {
            "myShape" => Some(Value::Shapes(Operand::Copies(vec![frame.my_shape.clone()]))),
            "scope" => {
                let s = ctx.scope.cloned().unwrap_or_else(|| frame.my_shape.clone());
                Some(Value::Shapes(Operand::Copies(vec![s])))
            }
            _ => None,
        }
    }

    fn attribute(&self, frame: &Frame, ctx: &Ctx, key: &str, loc: Loc) -> R<Value> {
        let mut layer = ctx.attrs.as_ref();
        while let Some(l) = layer {
            if let Some(v) = l.group.get(key) {
                return Ok(match v {
                    AttributeValue::Number(n) => Value::Num(*n),
                    AttributeValue::Numbers(v) => Value::Array(v.iter().map(|n| Value::Num(*n)).collect()),
                    AttributeValue::Text(s) => Value::Str(s.clone()),
                });
            }
            layer = l.parent.as_ref();
        }
        self.fail(frame, loc, RuntimeErrorKind::UnresolvedAttribute(key.to_string()))
    }

    fn eval(&mut self, frame: &Frame, ctx: &Ctx, e: &Expr) -> R<Value> {
        let loc = e.loc;
        match &e.kind {
            ExprKind::Number(n) => Ok(Value::Num(*n)),
            ExprKind::Str(s) => Ok(Value::Str(s.clone())),
            ExprKind::Bool(b) => Ok(Value::bool(*b)),
            ExprKind::Attr(key) => self.attribute(frame, ctx, key, loc),
            ExprKind::Ident(name) => match self.lookup(frame, ctx, name) {
                Some(v) => Ok(v),
                None => self.fail(frame, loc, RuntimeErrorKind::UnknownIdentifier(name.clone())),
            },
            ExprKind::Array(items) => {
                let mut out = Vec::with_capacity(items.len());
                for i in items {
                    out.push(self.eval(frame, ctx, i)?);
                }
                Ok(Value::Array(out))
            }
            ExprKind::Unary(op, inner) => {
                let v = self.eval(frame, ctx, inner)?;
                match (op, v) {
                    (UnaryOp::Not, v) => Ok(Value::bool(!v.truthy())),
                    (UnaryOp::Neg, Value::Num(n)) => Ok(Value::Num(-n)),
                    (UnaryOp::Plus, Value::Num(n)) => Ok(Value::Num(n)),
                    (_, v) => self.type_error(frame, loc, format!("cannot negate a {}", v.type_name())),
                }
            }
            ExprKind::Binary(op, l, r) => match op {
                BinaryOp::And => {
                    if !self.eval(frame, ctx, l)?.truthy() {
                        return Ok(Value::bool(false));
                    }
                    Ok(Value::bool(self.eval(frame, ctx, r)?.truthy()))
                }
                BinaryOp::Or => {
                    if self.eval(frame, ctx, l)?.truthy() {
                        return Ok(Value::bool(true));
                    }
                    Ok(Value::bool(self.eval(frame, ctx, r)?.truthy()))
                }
                _ => {
                    let a = self.eval(frame, ctx, l)?;
                    let b = self.eval(frame, ctx, r)?;
                    self.arith(frame, loc, *op, a, b)
                }
            },
            ExprKind::InstanceOf(inner, name) => {
                let v = self.eval(frame, ctx, inner)?;
                let last = name.rsplit('.').next().unwrap_or(name);
                let shape = self.first_shape(frame, loc, &v)?;
                Ok(Value::bool(shape.is_instance_of(last)))
            }
            ExprKind::Member(base, field) => {
                if let Some(ns) = base.dotted_name() {
                    if ns == "Math" && self.lookup(frame, ctx, "Math").is_none() {
                        return match field.as_str() {
                            "PI" => Ok(Value::Num(std::f64::consts::PI)),
                            "E" => Ok(Value::Num(std::f64::consts::E)),
                            _ => self.fail(
                                frame,
                                loc,
                                RuntimeErrorKind::UnknownMember { on: "Math".into(), member: field.clone() },
                            ),
                        };
                    }
                }
                let v = self.eval(frame, ctx, base)?;
                self.member(frame, loc, &v, field)
            }
            ExprKind::Index(base, idx) => {
                let v = self.eval(frame, ctx, base)?;
                let i = self.number(frame, ctx, idx)?;
                let len = match &v {
                    Value::Array(a) => a.len(),
                    Value::Shapes(Operand::Copies(s)) => s.len(),
                    Value::Shapes(Operand::Terminals(s)) => s.len(),
                    other => return self.type_error(frame, loc, format!("cannot index a {}", other.type_name())),
                };
                if !(i >= 0.0 && (i as usize) < len) {
                    return self.type_error(frame, loc, format!("index {i} out of bounds for length {len}"));
                }
                let i = i as usize;
                Ok(match v {
                    Value::Array(mut a) => a.swap_remove(i),
                    Value::Shapes(Operand::Copies(mut s)) => Value::Shapes(Operand::Copies(vec![s.swap_remove(i)])),
                    Value::Shapes(Operand::Terminals(s)) => Value::Shapes(Operand::Terminals(vec![s[i]])),
                    _ => unreachable!(),
                })
            }
            ExprKind::Call(callee, args) => self.call(frame, ctx, loc, callee, args),
        }
    }

    fn arith(&self, frame: &Frame, loc: Loc, op: BinaryOp, a: Value, b: Value) -> R<Value> {
        match (a, b) {
            (Value::Num(x), Value::Num(y)) => Ok(match op {
                BinaryOp::Add => Value::Num(x + y),
                BinaryOp::Sub => Value::Num(x - y),
                BinaryOp::Mul => Value::Num(x * y),
                BinaryOp::Div => Value::Num(x / y),
                BinaryOp::Rem => Value::Num(x % y),
                BinaryOp::Eq => Value::bool(x == y),
                BinaryOp::Ne => Value::bool(x != y),
                BinaryOp::Lt => Value::bool(x < y),
                BinaryOp::Le => Value::bool(x <= y),
                BinaryOp::Gt => Value::bool(x > y),
                BinaryOp::Ge => Value::bool(x >= y),
                BinaryOp::And => Value::bool(x != 0.0 && y != 0.0),
                BinaryOp::Or => Value::bool(x != 0.0 || y != 0.0),
            }),
            (Value::Str(x), Value::Str(y)) if matches!(op, BinaryOp::Eq | BinaryOp::Ne) => {
                Ok(Value::bool((x == y) == (op == BinaryOp::Eq)))
            }
            (x @ Value::Str(_), y) | (x, y @ Value::Str(_)) if op == BinaryOp::Add => Ok(Value::Str(format!("{x}{y}"))),
            (x, y) => self.type_error(
                frame,
                loc,
                format!("operator `{}` does not apply to {} and {}", op.token(), x.type_name(), y.type_name()),
            ),
        }
    }

    fn shapes_of(&self, v: &Value) -> Vec<Shape> {
        match v {
            Value::Shapes(Operand::Copies(s)) => s.clone(),
            Value::Shapes(Operand::Terminals(ids)) => {
                ids.iter().filter(|&&n| !self.tree.node(n).removed).map(|&n| self.tree.node(n).shape.clone()).collect()
            }
            Value::Array(items) => items.iter().flat_map(|i| self.shapes_of(i)).collect(),
            _ => Vec::new(),
        }
    }

    fn first_shape(&self, frame: &Frame, loc: Loc, v: &Value) -> R<Shape> {
        if !matches!(v, Value::Shapes(_) | Value::Array(_)) {
            return self.type_error(frame, loc, format!("expected a shape, found {}", v.type_name()));
        }
        match self.shapes_of(v).into_iter().next() {
            Some(s) => Ok(s),
            None => self.type_error(frame, loc, "empty shape array".into()),
        }
    }

    fn member(&self, frame: &Frame, loc: Loc, v: &Value, field: &str) -> R<Value> {
        let unknown = || {
            Err(self.error(
                frame.grammar,
                loc,
                RuntimeErrorKind::UnknownMember { on: v.type_name().to_string(), member: field.to_string() },
            ))
        };
        match v {
            Value::Array(a) if field == "length" => Ok(Value::Num(a.len() as f64)),
            Value::Shapes(_) if field == "length" => Ok(Value::Num(self.shapes_of(v).len() as f64)),
            Value::Shapes(_) => {
                let s = self.first_shape(frame, loc, v)?;
                let dims = s.dims();
                let c = s.world_center();
                let n = match field {
                    "w" => Some(dims.x),
                    "h" => Some(dims.y),
                    "d" => Some(dims.z),
                    "r" => s.radius(),
                    "ri" => s.inner_radius(),
                    "theta" => s.axis_extent(Axis::Theta),
                    "phi" => s.axis_extent(Axis::Phi),
                    "x" => Some(c.x),
                    "y" => Some(c.y),
                    "z" => Some(c.z),
                    "volume" => Some(self.shapes_of(v).iter().map(Shape::volume).sum()),
                    _ => return unknown(),
                };
                match n {
                    Some(n) => Ok(Value::Num(n)),
                    None => self.type_error(frame, loc, format!("this shape has no `{field}` extent")),
                }
            }
            _ => unknown(),
        }
    }

    fn eval_args(&mut self, frame: &Frame, ctx: &Ctx, args: &[Expr]) -> R<Vec<Value>> {
        let mut out = Vec::with_capacity(args.len());
        for a in args {
            out.push(self.eval(frame, ctx, a)?);
        }
        Ok(out)
    }

    fn call(&mut self, frame: &Frame, ctx: &Ctx, loc: Loc, callee: &Expr, args: &[Expr]) -> R<Value> {
        match &callee.kind {
            ExprKind::Member(base, name) => {
                if let Some(dotted) = base.dotted_name() {
                    if dotted == "Math" && self.lookup(frame, ctx, "Math").is_none() {
                        let vals = self.eval_args(frame, ctx, args)?;
                        let nums = self.to_numbers(frame, loc, Value::Array(vals))?;
                        return self.math(frame, loc, name, &nums);
                    }
                    if dotted == "System.out" && (name == "println" || name == "print") {
                        let vals = self.eval_args(frame, ctx, args)?;
                        self.log.push(vals.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "));
                        return Ok(Value::Unit);
                    }
                }
                let target = self.eval(frame, ctx, base)?;
                match name.as_str() {
                    "geometricBoolean" => {
                        if args.len() != 2 {
                            return self.fail(
                                frame,
                                loc,
                                RuntimeErrorKind::ArgumentCount { name: name.clone(), expected: 2, got: args.len() },
                            );
                        }
                        let other = self.eval(frame, ctx, &args[0])?;
                        let op = match self.eval(frame, ctx, &args[1])? {
                            Value::Str(s) => s,
                            v => {
                                return self.type_error(
                                    frame,
                                    loc,
                                    format!("Boolean operator must be a string, not {}", v.type_name()),
                                )
                            }
                        };
                        self.boolean(frame, loc, &target, &other, &op)
                    }
                    "volume" => Ok(Value::Num(self.shapes_of(&target).iter().map(Shape::volume).sum())),
                    _ => self.fail(frame, loc, RuntimeErrorKind::UnknownMethod(name.clone())),
                }
            }
            ExprKind::Ident(name) => {
                let vals = self.eval_args(frame, ctx, args)?;
                match name.as_str() {
                    "terminals" | "instances" => self.query(frame, loc, name, &vals),
                    "volume" if vals.len() == 1 => {
                        Ok(Value::Num(self.shapes_of(&vals[0]).iter().map(Shape::volume).sum()))
                    }
                    "print" | "println" => {
                        self.log.push(vals.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "));
                        Ok(Value::Unit)
                    }
                    _ => self.call_method(frame, ctx, loc, name, vals),
                }
            }
            _ => self.type_error(frame, loc, "expression is not callable".into()),
        }
    }

    /// Runs a grammar method from sequential code. A leading shape argument beyond the
    /// method's parameters becomes its `myShape`, and the derived subtree is grafted
    /// under the calling method's node.
    fn call_method(&mut self, frame: &Frame, ctx: &Ctx, loc: Loc, name: &str, mut vals: Vec<Value>) -> R<Value> {
        let Some((mg, mi)) = self.find_method(frame.grammar, name) else {
            return self.fail(frame, loc, RuntimeErrorKind::UnknownMethod(name.to_string()));
        };
        let program = self.grammars[mg].program.clone();
        let method = &program.methods[mi];
        let shape = if vals.len() == method.params.len() + 1 && matches!(vals[0], Value::Shapes(_)) {
            let v = vals.remove(0);
            let shapes = self.shapes_of(&v);
            match shapes.len() {
                0 => return self.type_error(frame, loc, "empty shape passed to grammar method".into()),
                1 => shapes.into_iter().next().expect("one shape"),
                _ => {
                    let mut all = shapes[0].clone();
                    all.geometry = crate::geometry::Geometry::Mesh(Arc::new(
                        crate::scene::operand_mesh(&self.tree, &Operand::Copies(shapes))
                            .map_err(|e| self.error(frame.grammar, loc, e.into()))?,
                    ));
                    all.frame = crate::geometry::Frame::identity();
                    all
                }
            }
        } else {
            ctx.scope.cloned().unwrap_or_else(|| frame.my_shape.clone())
        };
        let mut shape = if shape.is_mesh() { shape.bounding_box() } else { shape };
        shape.is_void = false;
        let node = self.tree.add_child(frame.node, name, shape.clone(), NodeKind::NonTerminal);
        self.tree.stamp(node);
        self.invoke(mg, method, vals, node, shape, frame.attrs.clone(), loc)
    }

    fn query(&mut self, frame: &Frame, loc: Loc, name: &str, vals: &[Value]) -> R<Value> {
        let (roots, path) = match vals {
            [Value::Str(p)] => (vec![frame.node], p.clone()),
            [Value::Block(roots), Value::Str(p)] => (roots.clone(), p.clone()),
            _ => {
                return self.type_error(
                    frame,
                    loc,
                    format!("{name}() expects a path string, optionally preceded by a rules block"),
                )
            }
        };
        let mut ids: Vec<NodeId> = Vec::new();
        for r in roots {
            if self.tree.node(r).removed {
                continue;
            }
            let found =
                if name == "terminals" { terminals(&self.tree, r, &path) } else { instances(&self.tree, r, &path) };
            for f in found {
                if !ids.contains(&f) {
                    ids.push(f);
                }
            }
        }
        Ok(Value::Shapes(if name == "terminals" {
            Operand::Terminals(ids)
        } else {
            Operand::Copies(ids.into_iter().map(|n| self.tree.node(n).shape.clone()).collect())
        }))
    }

    fn operand(&self, frame: &Frame, loc: Loc, v: &Value) -> R<Operand> {
        match v {
            Value::Shapes(Operand::Terminals(ids)) => {
                Ok(Operand::Terminals(ids.iter().copied().filter(|&n| !self.tree.node(n).removed).collect()))
            }
            Value::Shapes(Operand::Copies(s)) => Ok(Operand::Copies(s.clone())),
            Value::Array(items) => {
                let all_terminal = items.iter().all(|i| matches!(i, Value::Shapes(Operand::Terminals(_))));
                if all_terminal && !items.is_empty() {
                    let mut ids = Vec::new();
                    for i in items {
                        if let Operand::Terminals(t) = self.operand(frame, loc, i)? {
                            ids.extend(t);
                        }
                    }
                    Ok(Operand::Terminals(ids))
                } else {
                    Ok(Operand::Copies(self.shapes_of(v)))
                }
            }
            other => self.type_error(frame, loc, format!("Boolean operand must be a shape, not {}", other.type_name())),
        }
    }

    fn boolean(&mut self, frame: &Frame, loc: Loc, a: &Value, b: &Value, op: &str) -> R<Value> {
        let op: BooleanOp = op
            .parse()
            .map_err(|e: crate::csg::CsgError| self.error(frame.grammar, loc, RuntimeErrorKind::Boolean(e.into())))?;
        let a = self.operand(frame, loc, a)?;
        let b = self.operand(frame, loc, b)?;
        let outcome =
            geometric_boolean(&mut self.tree, &a, &b, op).map_err(|e| self.error(frame.grammar, loc, e.into()))?;
        Ok(match outcome {
            BooleanOutcome::Detached(s) => Value::Shapes(Operand::Copies(vec![s])),
            BooleanOutcome::Mutated { changed, .. } => Value::Shapes(Operand::Terminals(changed)),
        })
    }

    fn math(&mut self, frame: &Frame, loc: Loc, name: &str, a: &[f64]) -> R<Value> {
        let want = |n: usize| -> R<()> {
            if a.len() == n {
                Ok(())
            } else {
                Err(self.error(
                    frame.grammar,
                    loc,
                    RuntimeErrorKind::ArgumentCount { name: format!("Math.{name}"), expected: n, got: a.len() },
                ))
            }
        };
        let unary = |f: fn(f64) -> f64| -> R<Value> {
            want(1)?;
            Ok(Value::Num(f(a[0])))
        };
        match name {
            "sin" => unary(f64::sin),
            "cos" => unary(f64::cos),
            "tan" => unary(f64::tan),
            "asin" => unary(f64::asin),
            "acos" => unary(f64::acos),
            "atan" => unary(f64::atan),
            "sqrt" => unary(f64::sqrt),
            "abs" => unary(f64::abs),
            "floor" => unary(f64::floor),
            "ceil" => unary(f64::ceil),
            "round" => unary(|x| (x + 0.5).floor()),
            "exp" => unary(f64::exp),
            "log" => unary(f64::ln),
            "signum" => unary(|x| if x == 0.0 || x.is_nan() { x } else { x.signum() }),
            "toRadians" => unary(f64::to_radians),
            "toDegrees" => unary(f64::to_degrees),
            "atan2" => {
                want(2)?;
                Ok(Value::Num(a[0].atan2(a[1])))
            }
            "pow" => {
                want(2)?;
                Ok(Value::Num(a[0].powf(a[1])))
            }
            "min" | "max" => {
                if a.is_empty() {
                    want(2)?;
                }
                let init = if name == "min" { f64::INFINITY } else { f64::NEG_INFINITY };
                Ok(Value::Num(a.iter().fold(init, |acc, &x| if name == "min" { acc.min(x) } else { acc.max(x) })))
            }
            "random" => {
                want(0)?;
                Ok(Value::Num(self.rng.random::<f64>()))
            }
            _ => self.fail(frame, loc, RuntimeErrorKind::UnknownMember { on: "Math".into(), member: name.to_string() }),
        }
    }
}

fn default_value(base: &str, array: bool) -> Value {
    if array {
        return Value::Array(Vec::new());
    }
    match base {
        "String" => Value::Str(String::new()),
        "Shape" => Value::Shapes(Operand::Copies(Vec::new())),
        _ => Value::Num(0.0),
    }
}

fn coerce(base: &str, v: Value) -> Value {
    match (base, v) {
        ("int" | "long" | "short" | "byte", Value::Num(n)) => Value::Num(n.trunc()),
        ("boolean", Value::Num(n)) => Value::bool(n != 0.0),
        (_, v) => v,
    }
}

#[allow(dead_code)]
fn appearance_of(shape: &Shape) -> &Appearance {
    &shape.appearance
}
