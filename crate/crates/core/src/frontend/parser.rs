use super::ast::*;
use super::lexer::{tokenize, Token, TokenKind};
use super::{Loc, ParseError, ParseErrorKind};
use crate::geometry::is_namespace_name;

const MODIFIERS: [&str; 6] = ["public", "private", "protected", "static", "final", "abstract"];

/// Parses a grammar source file and checks its structural invariants.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, pos: 0, end: end_loc(src) };
    let program = p.program()?;
    validate(&program)?;
    Ok(program)
}

/// Like [`parse_program`], additionally requiring the grammar name to equal `stem`.
pub fn parse_program_named(src: &str, stem: &str) -> Result<Program, ParseError> {
    let program = parse_program(src)?;
    if program.name != stem {
        return Err(ParseError::new(
            program.loc,
            ParseErrorKind::NameMismatch { grammar: program.name.clone(), file: stem.to_string() },
        ));
    }
    Ok(program)
}

fn validate(program: &Program) -> Result<(), ParseError> {
    let mains: Vec<&Method> = program.methods.iter().filter(|m| m.name == "main").collect();
    match mains.len() {
        0 => return Err(ParseError::new(program.loc, ParseErrorKind::MissingMain(program.name.clone()))),
        1 => {}
        _ => return Err(ParseError::new(mains[1].loc, ParseErrorKind::DuplicateMain(program.name.clone()))),
    }
    for m in &program.methods {
        if m.rules_blocks().is_empty() {
            return Err(ParseError::new(m.loc, ParseErrorKind::MissingRules(m.name.clone())));
        }
    }
    Ok(())
}

fn end_loc(src: &str) -> Loc {
    let line = src.matches('\n').count() as u32 + 1;
    let col = src.rsplit('\n').next().map_or(0, |l| l.chars().count()) as u32 + 1;
    Loc::new(line, col)
}

pub(crate) struct Parser {
    pub tokens: Vec<Token>,
    pub pos: usize,
    pub end: Loc,
}

impl Parser {
    pub fn peek(&self) -> Option<&TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn peek_at(&self, n: usize) -> Option<&TokenKind> {
        self.tokens.get(self.pos + n).map(|t| &t.kind)
    }

    pub fn loc(&self) -> Loc {
        self.tokens.get(self.pos).map_or(self.end, |t| t.loc)
    }

    pub fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(TokenKind::Punct(q)) if *q == p)
    }

    fn is_punct_at(&self, n: usize, p: &str) -> bool {
        matches!(self.peek_at(n), Some(TokenKind::Punct(q)) if *q == p)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Some(TokenKind::Ident(s)) if s == w)
    }

    fn is_ident_at(&self, n: usize) -> bool {
        matches!(self.peek_at(n), Some(TokenKind::Ident(_)))
    }

    pub fn advance(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub fn error(&self, expected: impl Into<String>) -> ParseError {
        let found = self.peek().map_or_else(|| "end of input".to_string(), |k| k.to_string());
        ParseError::new(self.loc(), ParseErrorKind::Syntax { expected: expected.into(), found })
    }

    pub fn eat(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, p: &str) -> Result<Loc, ParseError> {
        let loc = self.loc();
        if self.eat(p) {
            Ok(loc)
        } else {
            Err(self.error(format!("`{p}`")))
        }
    }

    pub fn ident(&mut self) -> Result<(String, Loc), ParseError> {
        let loc = self.loc();
        match self.peek() {
            Some(TokenKind::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok((s, loc))
            }
            _ => Err(self.error("identifier")),
        }
    }

    fn keyword(&mut self, w: &str) -> Result<Loc, ParseError> {
        let loc = self.loc();
        if self.is_word(w) {
            self.pos += 1;
            Ok(loc)
        } else {
            Err(self.error(format!("`{w}`")))
        }
    }

    fn dotted(&mut self) -> Result<(String, Loc), ParseError> {
        let (mut name, loc) = self.ident()?;
        while self.is_punct(".") && self.is_ident_at(1) {
            self.pos += 1;
            name.push('.');
            name.push_str(&self.ident()?.0);
        }
        Ok((name, loc))
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut imports = Vec::new();
        while self.is_word("import") {
            self.pos += 1;
            let (name, _) = self.dotted()?;
            self.expect(";")?;
            imports.push(name);
        }
        self.modifiers();
        self.keyword("class")?;
        let (name, loc) = self.ident()?;
        let extends = if self.is_word("extends") {
            self.pos += 1;
            Some(self.dotted()?.0)
        } else {
            None
        };
        self.expect("{")?;
        let mut fields = Vec::new();
        let mut methods = Vec::new();
        while !self.is_punct("}") {
            if self.peek().is_none() {
                return Err(self.error("`}`"));
            }
            let member_loc = self.loc();
            let modifiers = self.modifiers();
            if self.is_word(&name) && self.is_punct_at(1, "(") {
                let (mname, _) = self.ident()?;
                let (params, body) = self.method_rest()?;
                methods.push(Method {
                    name: mname,
                    modifiers,
                    ret: None,
                    params,
                    body,
                    is_constructor: true,
                    loc: member_loc,
                });
                continue;
            }
            let ty = self.type_name()?;
            if self.is_ident_at(0) && self.is_punct_at(1, "(") {
                let (mname, _) = self.ident()?;
                let (params, body) = self.method_rest()?;
                methods.push(Method {
                    name: mname,
                    modifiers,
                    ret: Some(ty),
                    params,
                    body,
                    is_constructor: false,
                    loc: member_loc,
                });
            } else {
                let declarators = self.declarators()?;
                self.expect(";")?;
                fields.push(VarDecl { modifiers, ty, declarators, loc: member_loc });
            }
        }
        self.expect("}")?;
        if self.peek().is_some() {
            return Err(self.error("end of input"));
        }
        Ok(Program { name, extends, imports, fields, methods, loc })
    }

    fn modifiers(&mut self) -> Vec<String> {
        let mut out = Vec::new();
        while let Some(TokenKind::Ident(s)) = self.peek() {
            if !MODIFIERS.contains(&s.as_str()) {
                break;
            }
            out.push(s.clone());
            self.pos += 1;
        }
        out
    }

    fn type_name(&mut self) -> Result<TypeName, ParseError> {
        let (base, _) = self.ident()?;
        let array = if self.is_punct("[") && self.is_punct_at(1, "]") {
            self.pos += 2;
            true
        } else {
            false
        };
        Ok(TypeName { base, array })
    }

    fn method_rest(&mut self) -> Result<(Vec<Param>, Vec<Stmt>), ParseError> {
        self.expect("(")?;
        let mut params = Vec::new();
        if !self.is_punct(")") {
            loop {
                let ty = self.type_name()?;
                let (name, _) = self.ident()?;
                params.push(Param { ty, name });
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        let body = self.block()?;
        Ok((params, body))
    }

    fn declarators(&mut self) -> Result<Vec<Declarator>, ParseError> {
        let mut out = Vec::new();
        loop {
            let (name, loc) = self.ident()?;
            let init = if self.eat("=") { Some(self.expr()?) } else { None };
            out.push(Declarator { name, init, loc });
            if !self.eat(",") {
                break;
            }
        }
        Ok(out)
    }

    fn block(&mut self) -> Result<Vec<Stmt>, ParseError> {
        self.expect("{")?;
        let mut out = Vec::new();
        while !self.is_punct("}") {
            if self.peek().is_none() {
                return Err(self.error("`}`"));
            }
            out.push(self.statement()?);
        }
        self.expect("}")?;
        Ok(out)
    }

    fn starts_declaration(&self) -> bool {
        if !self.is_ident_at(0) {
            return false;
        }
        if MODIFIERS.contains(&self.word_at(0)) {
            return true;
        }
        (self.is_ident_at(1) && self.word_at(0) != "instanceof" && self.word_at(1) != "instanceof")
            || (self.is_punct_at(1, "[") && self.is_punct_at(2, "]") && self.is_ident_at(3))
    }

    fn word_at(&self, n: usize) -> &str {
        match self.peek_at(n) {
            Some(TokenKind::Ident(s)) => s,
            _ => "",
        }
    }

    fn is_rules_start(&self) -> bool {
        self.is_word("rules") && (self.is_punct_at(1, "{") || (self.is_ident_at(1) && self.is_punct_at(2, "{")))
    }

    fn statement(&mut self) -> Result<Stmt, ParseError> {
        let loc = self.loc();
        if self.is_rules_start() {
            return Ok(Stmt::Rules(self.rules_block()?));
        }
        if self.is_punct("{") {
            return Ok(Stmt::Block(self.block()?));
        }
        if self.eat(";") {
            return Ok(Stmt::Block(Vec::new()));
        }
        if self.is_word("if") {
            self.pos += 1;
            self.expect("(")?;
            let cond = self.expr()?;
            self.expect(")")?;
            let then = Box::new(self.statement()?);
            let otherwise = if self.is_word("else") {
                self.pos += 1;
                Some(Box::new(self.statement()?))
            } else {
                None
            };
            return Ok(Stmt::If { cond, then, otherwise, loc });
        }
        if self.is_word("while") {
            self.pos += 1;
            self.expect("(")?;
            let cond = self.expr()?;
            self.expect(")")?;
            let body = Box::new(self.statement()?);
            return Ok(Stmt::While { cond, body, loc });
        }
        if self.is_word("for") {
            self.pos += 1;
            self.expect("(")?;
            let init = if self.is_punct(";") { None } else { Some(Box::new(self.simple_statement()?)) };
            self.expect(";")?;
            let cond = if self.is_punct(";") { None } else { Some(self.expr()?) };
            self.expect(";")?;
            let update = if self.is_punct(")") { None } else { Some(Box::new(self.simple_statement()?)) };
            self.expect(")")?;
            let body = Box::new(self.statement()?);
            return Ok(Stmt::For { init, cond, update, body, loc });
        }
        if self.is_word("return") {
            self.pos += 1;
            let value = if self.is_punct(";") { None } else { Some(self.expr()?) };
            self.expect(";")?;
            return Ok(Stmt::Return { value, loc });
        }
        let s = self.simple_statement()?;
        self.expect(";")?;
        Ok(s)
    }

    /// Declaration, assignment, increment, or expression, without the trailing `;`.
    fn simple_statement(&mut self) -> Result<Stmt, ParseError> {
        let loc = self.loc();
        if self.starts_declaration() {
            let modifiers = self.modifiers();
            let ty = self.type_name()?;
            let declarators = self.declarators()?;
            return Ok(Stmt::Var(VarDecl { modifiers, ty, declarators, loc }));
        }
        for (tok, inc) in [("++", true), ("--", false)] {
            if self.eat(tok) {
                let target = self.postfix()?;
                return Ok(Stmt::Step { target, increment: inc, loc });
            }
        }
        let e = self.expr()?;
        let op = [
            ("=", AssignOp::Set),
            ("+=", AssignOp::Add),
            ("-=", AssignOp::Sub),
            ("*=", AssignOp::Mul),
            ("/=", AssignOp::Div),
            ("%=", AssignOp::Rem),
        ]
        .into_iter()
        .find(|(t, _)| self.is_punct(t));
        if let Some((_, op)) = op {
            check_place(&e)?;
            self.pos += 1;
            let value = self.expr()?;
            return Ok(Stmt::Assign { target: e, op, value, loc });
        }
        for (tok, inc) in [("++", true), ("--", false)] {
            if self.eat(tok) {
                check_place(&e)?;
                return Ok(Stmt::Step { target: e, increment: inc, loc });
            }
        }
        Ok(Stmt::Expr(e))
    }

    fn rules_block(&mut self) -> Result<RulesBlock, ParseError> {
        let loc = self.keyword("rules")?;
        let name = if self.is_ident_at(0) { Some(self.ident()?.0) } else { None };
        self.expect("{")?;
        let mut rules = Vec::new();
        while !self.is_punct("}") {
            rules.push(self.rule()?);
        }
        self.expect("}")?;
        Ok(RulesBlock { name, rules, loc })
    }

    fn rule(&mut self) -> Result<Rule, ParseError> {
        let (predecessor, loc) = self.ident()?;
        let condition = if self.eat("::") {
            None
        } else {
            self.expect(":")?;
            if self.eat(":") {
                None
            } else {
                let c = self.expr()?;
                self.expect(":")?;
                Some(c)
            }
        };
        let mut functions = Vec::new();
        while !self.is_punct("{") {
            if !self.is_ident_at(0) {
                return Err(self.error("rule function or `{`"));
            }
            functions.push(self.call()?);
        }
        self.expect("{")?;
        let mut successors = Vec::new();
        loop {
            let (name, sloc) = self.ident()?;
            if name == "terminal" {
                successors.push(Successor::Terminal(sloc));
            } else if self.is_punct("(") {
                let args = self.args()?;
                successors.push(Successor::Method(Call { name, args, loc: sloc }));
            } else {
                successors.push(Successor::Symbol(name, sloc));
            }
            if !self.eat(",") {
                break;
            }
        }
        self.expect("}")?;
        self.expect(";")?;
        Ok(Rule { predecessor, condition, functions, successors, loc })
    }

    fn call(&mut self) -> Result<Call, ParseError> {
        let (name, loc) = self.ident()?;
        let args = self.args()?;
        Ok(Call { name, args, loc })
    }

    fn args(&mut self) -> Result<Vec<Expr>, ParseError> {
        self.expect("(")?;
        let mut args = Vec::new();
        if !self.is_punct(")") {
            loop {
                args.push(self.expr()?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        Ok(args)
    }

    pub fn expr(&mut self) -> Result<Expr, ParseError> {
        self.binary(1)
    }

    fn binary_op(&self) -> Option<BinaryOp> {
        let Some(TokenKind::Punct(p)) = self.peek() else {
            return None;
        };
        Some(match *p {
            "||" => BinaryOp::Or,
            "&&" => BinaryOp::And,
            "==" => BinaryOp::Eq,
            "!=" => BinaryOp::Ne,
            "<" => BinaryOp::Lt,
            "<=" => BinaryOp::Le,
            ">" => BinaryOp::Gt,
            ">=" => BinaryOp::Ge,
            "+" => BinaryOp::Add,
            "-" => BinaryOp::Sub,
            "*" => BinaryOp::Mul,
            "/" => BinaryOp::Div,
            "%" => BinaryOp::Rem,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.is_word("instanceof") && INSTANCEOF_PRECEDENCE >= min_prec {
                let loc = self.loc();
                self.pos += 1;
                let (name, name_loc) = self.dotted()?;
                let last = name.rsplit('.').next().unwrap_or(&name);
                if !is_namespace_name(last) {
                    return Err(ParseError::new(name_loc, ParseErrorKind::UnknownNamespace(name)));
                }
                lhs = Expr::new(ExprKind::InstanceOf(Box::new(lhs), name), loc);
                continue;
            }
            let Some(op) = self.binary_op() else { break };
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            let loc = self.loc();
            self.pos += 1;
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), loc);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        let loc = self.loc();
        for (tok, op) in [("-", UnaryOp::Neg), ("+", UnaryOp::Plus), ("!", UnaryOp::Not)] {
            if self.eat(tok) {
                let inner = self.unary()?;
                return Ok(Expr::new(ExprKind::Unary(op, Box::new(inner)), loc));
            }
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.primary()?;
        loop {
            let loc = self.loc();
            if self.eat(".") {
                let (field, _) = self.ident()?;
                e = Expr::new(ExprKind::Member(Box::new(e), field), loc);
            } else if self.is_punct("(") {
                let args = self.args()?;
                e = Expr::new(ExprKind::Call(Box::new(e), args), loc);
            } else if self.eat("[") {
                let idx = self.expr()?;
                self.expect("]")?;
                e = Expr::new(ExprKind::Index(Box::new(e), Box::new(idx)), loc);
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let loc = self.loc();
        let kind = match self.peek() {
            Some(TokenKind::Number(n)) => ExprKind::Number(*n),
            Some(TokenKind::Str(s)) => ExprKind::Str(s.clone()),
            Some(TokenKind::AttrRef(s)) => ExprKind::Attr(s.clone()),
            Some(TokenKind::Ident(s)) if s == "true" => ExprKind::Bool(true),
            Some(TokenKind::Ident(s)) if s == "false" => ExprKind::Bool(false),
            Some(TokenKind::Ident(s)) if s != "instanceof" => ExprKind::Ident(s.clone()),
            Some(TokenKind::Punct("(")) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(")")?;
                return Ok(e);
            }
            Some(TokenKind::Punct("{")) => {
                self.pos += 1;
                let mut items = Vec::new();
                if !self.is_punct("}") {
                    loop {
                        items.push(self.expr()?);
                        if !self.eat(",") || self.is_punct("}") {
                            break;
                        }
                    }
                }
                self.expect("}")?;
                return Ok(Expr::new(ExprKind::Array(items), loc));
            }
            _ => return Err(self.error("expression")),
        };
        self.pos += 1;
        Ok(Expr::new(kind, loc))
    }
}

fn check_place(e: &Expr) -> Result<(), ParseError> {
    match &e.kind {
        ExprKind::Ident(_) | ExprKind::Index(..) | ExprKind::Member(..) => Ok(()),
        _ => Err(ParseError::new(
            e.loc,
            ParseErrorKind::Syntax { expected: "assignable name".into(), found: "expression".into() },
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "public class G extends ShapeGrammar {\n  public static void main(String[] args) {\n    rules { a::{terminal}; }\n  }\n}\n";

    #[test]
    fn minimal_grammar() {
        let p = parse_program_named(MINIMAL, "G").unwrap();
        assert_eq!(p.name, "G");
        assert_eq!(p.extends.as_deref(), Some("ShapeGrammar"));
        let main = p.main().unwrap();
        assert_eq!(main.params.len(), 1);
        assert!(main.params[0].ty.array);
        let rules = main.rules_blocks();
        assert_eq!(rules[0].rules[0].successors, vec![Successor::Terminal(Loc::default())]);
    }

    #[test]
    fn file_stem_must_match() {
        let e = parse_program_named(MINIMAL, "Other").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::NameMismatch { .. }));
    }

    #[test]
    fn missing_rules_and_main() {
        let src = "class G { void main() { float x = 1; } }";
        let e = parse_program(src).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::MissingRules("main".into()));
        let e = parse_program("class G { void f() { rules { a::{terminal}; } } }").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::MissingMain("G".into()));
    }

    #[test]
    fn conditions_and_precedence() {
        let src = "class G { void main() { rules {\n a:x > 1 && y:split(x, {1, 2}){b, c};\n a::{terminal};\n} } }";
        let p = parse_program(src).unwrap();
        let block = p.main().unwrap().rules_blocks()[0];
        assert_eq!(block.rules.len(), 2);
        let cond = block.rules[0].condition.as_ref().unwrap();
        assert!(matches!(cond.kind, ExprKind::Binary(BinaryOp::And, ..)));
        assert!(block.rules[1].condition.is_none());
    }

    #[test]
    fn arithmetic_binds_tighter_than_comparison() {
        let mut p = Parser { tokens: tokenize("1 + 2 * 3 < 4 - -1").unwrap(), pos: 0, end: Loc::default() };
        let e = p.expr().unwrap();
        let ExprKind::Binary(BinaryOp::Lt, l, r) = e.kind else { panic!() };
        assert!(matches!(l.kind, ExprKind::Binary(BinaryOp::Add, ..)));
        assert!(matches!(r.kind, ExprKind::Binary(BinaryOp::Sub, ..)));
    }

    #[test]
    fn instanceof_accepts_only_namespace_names() {
        let ok =
            "class G { void main() { float e = myShape instanceof Shape3D.RotaryShape; rules { a::{terminal}; } } }";
        assert!(parse_program(ok).is_ok());
        let bad = "class G {\nvoid main() { float e = myShape instanceof Teapot; rules { a::{terminal}; } } }";
        let e = parse_program(bad).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownNamespace("Teapot".into()));
        assert_eq!((e.loc.line, e.loc.col), (2, 44));
    }

    #[test]
    fn syntax_error_location() {
        let src = "class G {\n  void main() {\n    rules { a::split(x {1}){b}; }\n  }\n}";
        let e = parse_program(src).unwrap_err();
        assert_eq!((e.loc.line, e.loc.col), (3, 24));
        assert!(matches!(e.kind, ParseErrorKind::Syntax { .. }));
    }
}
