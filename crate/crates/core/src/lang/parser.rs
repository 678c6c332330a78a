//! Recursive-descent parser and name resolution for MiniImp.
//!
//! Calls and `malloc` are statement-level constructs: they may appear as a
//! whole right-hand side, a bare statement, or a `return` operand, never
//! nested inside larger expressions. This keeps every call on its own
//! control-flow edge and keeps the identifier list free of synthetic
//! temporaries.

use std::collections::BTreeMap;
use std::fmt;

use super::ast::*;
use super::lexer::{Token, TokenKind};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    /// Index of the offending token; one past the last token at end of input.
    pub token: u32,
    pub expected: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at token {}: expected {}", self.token, self.expected)
    }
}

impl std::error::Error for ParseError {}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
}

struct FnScope {
    fn_name: String,
    vars: BTreeMap<String, (u32, Ty)>, // unqualified -> (decl token, type)
}

impl<'a> Parser<'a> {
    fn err<T>(&self, expected: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            token: self
                .toks
                .get(self.pos)
                .map(|t| t.index)
                .unwrap_or(self.toks.len() as u32 + 1),
            expected: expected.into(),
        })
    }

    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.pos)
    }

    fn peek2(&self) -> Option<&'a Token> {
        self.toks.get(self.pos + 1)
    }

    fn bump(&mut self) -> Option<&'a Token> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn at_punct(&self, s: &str) -> bool {
        matches!(self.peek(), Some(t) if t.kind == TokenKind::Punct && t.text == s)
    }

    fn at_keyword(&self, s: &str) -> bool {
        matches!(self.peek(), Some(t) if t.kind == TokenKind::Keyword && t.text == s)
    }

    fn eat_punct(&mut self, s: &str) -> Result<&'a Token, ParseError> {
        if self.at_punct(s) {
            Ok(self.bump().unwrap())
        } else {
            self.err(format!("`{s}`"))
        }
    }

    fn eat_keyword(&mut self, s: &str) -> Result<&'a Token, ParseError> {
        if self.at_keyword(s) {
            Ok(self.bump().unwrap())
        } else {
            self.err(format!("`{s}`"))
        }
    }

    fn eat_ident(&mut self) -> Result<&'a Token, ParseError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident => Ok(self.bump().unwrap()),
            _ => self.err("identifier"),
        }
    }

    fn parse_type(&mut self) -> Result<Ty, ParseError> {
        if self.at_keyword("void") {
            self.bump();
            return Ok(Ty::Void);
        }
        self.eat_keyword("int")?;
        let mut stars = 0;
        while self.at_punct("*") && stars < 2 {
            self.bump();
            stars += 1;
        }
        Ok(match stars {
            0 => Ty::Int,
            1 => Ty::Ptr,
            _ => Ty::PtrPtr,
        })
    }

    fn parse_function(&mut self) -> Result<Function, ParseError> {
        let ret_type = self.parse_type()?;
        let name_tok = self.eat_ident()?;
        self.eat_punct("(")?;
        let mut params = Vec::new();
        if !self.at_punct(")") {
            loop {
                let ty = self.parse_type()?;
                if ty == Ty::Void {
                    return self.err("parameter type");
                }
                let id = self.eat_ident()?;
                params.push(Param {
                    name: id.text.clone(),
                    qualified: format!("{}::{}", name_tok.text, id.text),
                    token: id.index,
                    ty,
                });
                if self.at_punct(",") {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.eat_punct(")")?;

        let mut scope = FnScope {
            fn_name: name_tok.text.clone(),
            vars: BTreeMap::new(),
        };
        for p in &params {
            if scope.vars.insert(p.name.clone(), (p.token, p.ty)).is_some() {
                return Err(ParseError {
                    token: p.token,
                    expected: "distinct parameter name".into(),
                });
            }
        }
        let mut locals = Vec::new();
        self.eat_punct("{")?;
        let body = self.parse_stmts_until_brace(&mut scope, &mut locals)?;
        Ok(Function {
            name: name_tok.text.clone(),
            name_token: name_tok.index,
            ret_type,
            params,
            locals,
            body,
        })
    }

    fn parse_stmts_until_brace(
        &mut self,
        scope: &mut FnScope,
        locals: &mut Vec<LocalDecl>,
    ) -> Result<Vec<Stmt>, ParseError> {
        let mut out = Vec::new();
        loop {
            if self.at_punct("}") {
                self.bump();
                return Ok(out);
            }
            if self.peek().is_none() {
                return self.err("`}`");
            }
            out.extend(self.parse_stmt(scope, locals)?);
        }
    }

    fn parse_block_or_single(
        &mut self,
        scope: &mut FnScope,
        locals: &mut Vec<LocalDecl>,
    ) -> Result<Vec<Stmt>, ParseError> {
        if self.at_punct("{") {
            self.bump();
            self.parse_stmts_until_brace(scope, locals)
        } else {
            self.parse_stmt(scope, locals)
        }
    }

    fn parse_stmt(
        &mut self,
        scope: &mut FnScope,
        locals: &mut Vec<LocalDecl>,
    ) -> Result<Vec<Stmt>, ParseError> {
        if self.at_punct("{") {
            self.bump();
            return self.parse_stmts_until_brace(scope, locals);
        }
        if self.at_keyword("int") {
            let ty = self.parse_type()?;
            let id = self.eat_ident()?;
            if scope.vars.contains_key(&id.text) {
                return Err(ParseError {
                    token: id.index,
                    expected: "fresh variable name (duplicate declaration)".into(),
                });
            }
            scope.vars.insert(id.text.clone(), (id.index, ty));
            let qualified = format!("{}::{}", scope.fn_name, id.text);
            locals.push(LocalDecl {
                qualified: qualified.clone(),
                token: id.index,
                ty,
            });
            let (init, assign_token) = if self.at_punct("=") {
                let eq = self.bump().unwrap();
                let e = self.parse_rhs(scope)?;
                (Some(e), Some(eq.index))
            } else {
                (None, None)
            };
            self.eat_punct(";")?;
            return Ok(vec![Stmt::Decl {
                name: qualified,
                token: id.index,
                ty,
                init,
                assign_token,
            }]);
        }
        if self.at_keyword("if") {
            self.bump();
            self.eat_punct("(")?;
            let cond = self.parse_expr(scope)?;
            self.eat_punct(")")?;
            let then_branch = self.parse_block_or_single(scope, locals)?;
            let else_branch = if self.at_keyword("else") {
                self.bump();
                self.parse_block_or_single(scope, locals)?
            } else {
                Vec::new()
            };
            return Ok(vec![Stmt::If {
                cond,
                then_branch,
                else_branch,
            }]);
        }
        if self.at_keyword("while") {
            self.bump();
            self.eat_punct("(")?;
            let cond = self.parse_expr(scope)?;
            self.eat_punct(")")?;
            let body = self.parse_block_or_single(scope, locals)?;
            return Ok(vec![Stmt::While { cond, body }]);
        }
        if self.at_keyword("goto") {
            self.bump();
            let id = self.eat_ident()?;
            self.eat_punct(";")?;
            return Ok(vec![Stmt::Goto {
                label: id.text.clone(),
            }]);
        }
        if self.at_keyword("return") {
            self.bump();
            if self.at_punct(";") {
                self.bump();
                return Ok(vec![Stmt::Return { expr: None }]);
            }
            let e = self.parse_rhs(scope)?;
            self.eat_punct(";")?;
            return Ok(vec![Stmt::Return { expr: Some(e) }]);
        }
        if self.at_keyword("assume") {
            let kw = self.bump().unwrap();
            self.eat_punct("(")?;
            let e = self.parse_expr(scope)?;
            self.eat_punct(")")?;
            self.eat_punct(";")?;
            return Ok(vec![Stmt::Assume {
                expr: e,
                token: kw.index,
            }]);
        }
        if self.at_keyword("error") {
            let kw = self.bump().unwrap();
            self.eat_punct("(")?;
            self.eat_punct(")")?;
            self.eat_punct(";")?;
            return Ok(vec![Stmt::Error { token: kw.index }]);
        }
        if self.at_keyword("free") {
            let kw = self.bump().unwrap();
            self.eat_punct("(")?;
            let e = self.parse_expr(scope)?;
            self.eat_punct(")")?;
            self.eat_punct(";")?;
            return Ok(vec![Stmt::Free {
                expr: e,
                token: kw.index,
            }]);
        }
        if self.at_punct("*") {
            // deref assignment: *e = rhs;
            let star = self.bump().unwrap();
            let target = self.parse_unary(scope)?;
            let eq = self.eat_punct("=")?;
            let rhs = self.parse_rhs(scope)?;
            self.eat_punct(";")?;
            return Ok(vec![Stmt::Assign {
                lhs: LValue::Deref(target, star.index),
                rhs,
                assign_token: eq.index,
            }]);
        }
        if matches!(self.peek(), Some(t) if t.kind == TokenKind::Ident) {
            let next = self.peek2().map(|t| t.text.as_str());
            match next {
                Some(":") => {
                    let id = self.bump().unwrap();
                    self.bump(); // colon
                    return Ok(vec![Stmt::Label {
                        name: id.text.clone(),
                    }]);
                }
                Some("(") => {
                    let call = self.parse_call(scope)?;
                    self.eat_punct(";")?;
                    return Ok(vec![Stmt::CallStmt { call }]);
                }
                Some("=") => {
                    let id = self.bump().unwrap();
                    let qualified = self.resolve(scope, id)?;
                    let eq = self.bump().unwrap();
                    let rhs = self.parse_rhs(scope)?;
                    self.eat_punct(";")?;
                    return Ok(vec![Stmt::Assign {
                        lhs: LValue::Var(qualified, id.index),
                        rhs,
                        assign_token: eq.index,
                    }]);
                }
                _ => return self.err("`:`, `(` or `=` after identifier"),
            }
        }
        self.err("statement")
    }

    /// Right-hand sides admit calls and malloc at the top level only.
    fn parse_rhs(&mut self, scope: &FnScope) -> Result<Expr, ParseError> {
        if self.at_keyword("malloc") {
            let kw = self.bump().unwrap();
            self.eat_punct("(")?;
            let size = self.parse_expr(scope)?;
            self.eat_punct(")")?;
            return Ok(Expr::Malloc(Box::new(size), kw.index));
        }
        if matches!(self.peek(), Some(t) if t.kind == TokenKind::Ident)
            && matches!(self.peek2(), Some(t) if t.text == "(")
        {
            return self.parse_call(scope);
        }
        self.parse_expr(scope)
    }

    fn parse_call(&mut self, scope: &FnScope) -> Result<Expr, ParseError> {
        let id = self.eat_ident()?;
        self.eat_punct("(")?;
        let mut args = Vec::new();
        if !self.at_punct(")") {
            loop {
                args.push(self.parse_expr(scope)?);
                if self.at_punct(",") {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.eat_punct(")")?;
        Ok(Expr::Call {
            callee: id.text.clone(),
            callee_token: id.index,
            args,
        })
    }

    fn resolve(&self, scope: &FnScope, tok: &Token) -> Result<String, ParseError> {
        if scope.vars.contains_key(&tok.text) {
            Ok(format!("{}::{}", scope.fn_name, tok.text))
        } else {
            Err(ParseError {
                token: tok.index,
                expected: format!("declared identifier (`{}` is not in scope)", tok.text),
            })
        }
    }

    fn parse_expr(&mut self, scope: &FnScope) -> Result<Expr, ParseError> {
        self.parse_or(scope)
    }

    fn parse_or(&mut self, scope: &FnScope) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_and(scope)?;
        while self.at_punct("||") {
            let op = self.bump().unwrap();
            let rhs = self.parse_and(scope)?;
            lhs = Expr::Binary(BinOp::Or, Box::new(lhs), Box::new(rhs), op.index);
        }
        Ok(lhs)
    }

    fn parse_and(&mut self, scope: &FnScope) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_cmp(scope)?;
        while self.at_punct("&&") {
            let op = self.bump().unwrap();
            let rhs = self.parse_cmp(scope)?;
            lhs = Expr::Binary(BinOp::And, Box::new(lhs), Box::new(rhs), op.index);
        }
        Ok(lhs)
    }

    fn parse_cmp(&mut self, scope: &FnScope) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_add(scope)?;
        loop {
            let op = match self.peek() {
                Some(t) if t.kind == TokenKind::Punct => match t.text.as_str() {
                    "==" => BinOp::Eq,
                    "!=" => BinOp::Ne,
                    "<" => BinOp::Lt,
                    "<=" => BinOp::Le,
                    ">" => BinOp::Gt,
                    ">=" => BinOp::Ge,
                    _ => break,
                },
                _ => break,
            };
            let t = self.bump().unwrap();
            let rhs = self.parse_add(scope)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs), t.index);
        }
        Ok(lhs)
    }

    fn parse_add(&mut self, scope: &FnScope) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_mul(scope)?;
        loop {
            let op = if self.at_punct("+") {
                BinOp::Add
            } else if self.at_punct("-") {
                BinOp::Sub
            } else {
                break;
            };
            let t = self.bump().unwrap();
            let rhs = self.parse_mul(scope)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs), t.index);
        }
        Ok(lhs)
    }

    fn parse_mul(&mut self, scope: &FnScope) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_unary(scope)?;
        while self.at_punct("*") {
            let t = self.bump().unwrap();
            let rhs = self.parse_unary(scope)?;
            lhs = Expr::Binary(BinOp::Mul, Box::new(lhs), Box::new(rhs), t.index);
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self, scope: &FnScope) -> Result<Expr, ParseError> {
        if self.at_punct("-") {
            let t = self.bump().unwrap();
            let e = self.parse_unary(scope)?;
            return Ok(Expr::Unary(UnOp::Neg, Box::new(e), t.index));
        }
        if self.at_punct("!") {
            let t = self.bump().unwrap();
            let e = self.parse_unary(scope)?;
            return Ok(Expr::Unary(UnOp::Not, Box::new(e), t.index));
        }
        if self.at_punct("*") {
            let t = self.bump().unwrap();
            let e = self.parse_unary(scope)?;
            return Ok(Expr::Deref(Box::new(e), t.index));
        }
        if self.at_punct("&") {
            let amp = self.bump().unwrap();
            let id = self.eat_ident()?;
            let qualified = self.resolve(scope, id)?;
            return Ok(Expr::AddrOf(qualified, amp.index, id.index));
        }
        self.parse_primary(scope)
    }

    fn parse_primary(&mut self, scope: &FnScope) -> Result<Expr, ParseError> {
        if self.at_punct("(") {
            self.bump();
            let e = self.parse_expr(scope)?;
            self.eat_punct(")")?;
            return Ok(e);
        }
        if self.at_keyword("input") {
            let kw = self.bump().unwrap();
            self.eat_punct("(")?;
            self.eat_punct(")")?;
            return Ok(Expr::Input(kw.index));
        }
        match self.peek() {
            Some(t) if t.kind == TokenKind::Number => {
                let t = self.bump().unwrap();
                let v: i64 = t.text.parse().map_err(|_| ParseError {
                    token: t.index,
                    expected: "integer literal in range".into(),
                })?;
                Ok(Expr::Num(v, t.index))
            }
            Some(t) if t.kind == TokenKind::Ident => {
                if matches!(self.peek2(), Some(n) if n.text == "(") {
                    return self.err("no calls nested inside expressions");
                }
                let t = self.bump().unwrap();
                let qualified = self.resolve(scope, t)?;
                Ok(Expr::Var(qualified, t.index))
            }
            _ => self.err("expression"),
        }
    }
}

fn check_no_nested_calls(e: &Expr, top: bool) -> Result<(), ParseError> {
    match e {
        Expr::Call { callee_token, args, .. } => {
            if !top {
                return Err(ParseError {
                    token: *callee_token,
                    expected: "call only as whole right-hand side".into(),
                });
            }
            for a in args {
                check_no_nested_calls(a, false)?;
            }
            Ok(())
        }
        Expr::Malloc(size, t) => {
            if !top {
                return Err(ParseError {
                    token: *t,
                    expected: "malloc only as whole right-hand side".into(),
                });
            }
            check_no_nested_calls(size, false)
        }
        Expr::Unary(_, x, _) | Expr::Deref(x, _) => check_no_nested_calls(x, false),
        Expr::Binary(_, a, b, _) => {
            check_no_nested_calls(a, false)?;
            check_no_nested_calls(b, false)
        }
        Expr::Num(..) | Expr::Var(..) | Expr::AddrOf(..) | Expr::Input(..) => Ok(()),
    }
}

fn check_stmts(stmts: &[Stmt], fns: &BTreeMap<String, (usize, u32)>) -> Result<(), ParseError> {
    for s in stmts {
        match s {
            Stmt::Decl { init: Some(e), .. } | Stmt::Assign { rhs: e, .. } => {
                check_no_nested_calls(e, true)?;
                check_callee(e, fns)?;
                if let Stmt::Assign {
                    lhs: LValue::Deref(t, _),
                    ..
                } = s
                {
                    check_no_nested_calls(t, false)?;
                }
            }
            Stmt::Return { expr: Some(e) } => {
                check_no_nested_calls(e, true)?;
                check_callee(e, fns)?;
            }
            Stmt::Assume { expr, .. } | Stmt::Free { expr, .. } => {
                check_no_nested_calls(expr, false)?;
            }
            Stmt::CallStmt { call } => {
                check_no_nested_calls(call, true)?;
                check_callee(call, fns)?;
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => {
                check_no_nested_calls(cond, false)?;
                check_stmts(then_branch, fns)?;
                check_stmts(else_branch, fns)?;
            }
            Stmt::While { cond, body } => {
                check_no_nested_calls(cond, false)?;
                check_stmts(body, fns)?;
            }
            _ => {}
        }
    }
    Ok(())
}

fn check_callee(e: &Expr, fns: &BTreeMap<String, (usize, u32)>) -> Result<(), ParseError> {
    if let Expr::Call {
        callee,
        callee_token,
        args,
    } = e
    {
        match fns.get(callee) {
            None => {
                return Err(ParseError {
                    token: *callee_token,
                    expected: format!("declared function (`{callee}` is unknown)"),
                })
            }
            Some((arity, _)) if *arity != args.len() => {
                return Err(ParseError {
                    token: *callee_token,
                    expected: format!("{arity} argument(s) for `{callee}`"),
                })
            }
            _ => {}
        }
        if callee == "main" {
            return Err(ParseError {
                token: *callee_token,
                expected: "callee other than `main`".into(),
            });
        }
    }
    Ok(())
}

/// Parses a token stream into a resolved program.
pub fn parse(tokens: &[Token]) -> Result<MiniImpProgram, ParseError> {
    let mut p = Parser {
        toks: tokens,
        pos: 0,
    };
    let mut functions = Vec::new();
    while p.peek().is_some() {
        functions.push(p.parse_function()?);
    }
    let mut fns: BTreeMap<String, (usize, u32)> = BTreeMap::new();
    for f in &functions {
        if fns
            .insert(f.name.clone(), (f.params.len(), f.name_token))
            .is_some()
        {
            return Err(ParseError {
                token: f.name_token,
                expected: "fresh function name (duplicate definition)".into(),
            });
        }
    }
    let mains = functions.iter().filter(|f| f.name == "main").count();
    if mains != 1 {
        return Err(ParseError {
            token: functions.last().map(|f| f.name_token).unwrap_or(1),
            expected: "exactly one function named `main`".into(),
        });
    }
    let main = functions.iter().find(|f| f.name == "main").unwrap();
    if !main.params.is_empty() {
        return Err(ParseError {
            token: main.name_token,
            expected: "`main` without parameters".into(),
        });
    }
    for f in &functions {
        check_stmts(&f.body, &fns)?;
    }
    // identifier list in declaration-token order
    let mut identifier_list = Vec::new();
    for f in &functions {
        identifier_list.push(IdentDecl {
            qualified: f.name.clone(),
            token: f.name_token,
        });
        for prm in &f.params {
            identifier_list.push(IdentDecl {
                qualified: prm.qualified.clone(),
                token: prm.token,
            });
        }
        for l in &f.locals {
            identifier_list.push(IdentDecl {
                qualified: l.qualified.clone(),
                token: l.token,
            });
        }
    }
    identifier_list.sort_by_key(|d| d.token);
    Ok(MiniImpProgram {
        functions,
        identifier_list,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::lexer::tokenize;

    fn parse_src(src: &str) -> Result<MiniImpProgram, ParseError> {
        parse(&tokenize(src).unwrap())
    }

    #[test]
    fn two_function_pointer_program_identifier_order() {
        let src = "void foo(int** p) {} void main() { int* p; p = malloc(100); foo(&p); free(p); }";
        let prog = parse_src(src).unwrap();
        let names: Vec<&str> = prog
            .identifier_list
            .iter()
            .map(|d| d.qualified.as_str())
            .collect();
        assert_eq!(names, ["foo", "foo::p", "main", "main::p"]);
    }

    #[test]
    fn empty_main() {
        let prog = parse_src("void main(){}").unwrap();
        assert_eq!(prog.functions.len(), 1);
        assert!(prog.functions[0].body.is_empty());
    }

    #[test]
    fn missing_operand_is_reported_at_token() {
        let err = parse_src("void main(){ int a; a=; }").unwrap_err();
        // tokens: void main ( ) { int a ; a = ; -> `;` at index 11
        assert_eq!(err.token, 11);
    }

    #[test]
    fn ast_keeps_operator_tokens() {
        let prog = parse_src("void main(){ int a = 1 + 2; }").unwrap();
        match &prog.functions[0].body[0] {
            Stmt::Decl {
                init: Some(Expr::Binary(BinOp::Add, _, _, t)),
                ..
            } => assert_eq!(*t, 10),
            s => panic!("unexpected {s:?}"),
        }
    }

    #[test]
    fn undeclared_identifier_rejected() {
        assert!(parse_src("void main(){ a = 1; }").is_err());
        assert!(parse_src("void main(){ int a = b; }").is_err());
    }

    #[test]
    fn nested_calls_rejected() {
        let src = "int f(int x){ return x; } void main(){ int a; a = 1 + f(2); }";
        assert!(parse_src(src).is_err());
        let ok = "int f(int x){ return x; } void main(){ int a; a = f(2); }";
        assert!(parse_src(ok).is_ok());
    }

    #[test]
    fn exactly_one_main_required() {
        assert!(parse_src("void foo(){}").is_err());
        assert!(parse_src("void main(){} void main(){}").is_err());
    }

    #[test]
    fn recursion_and_forward_references_parse() {
        let src = "int odd(int n){ if (n == 0) { return 0; } return even(n - 1); } \
                   int even(int n){ if (n == 0) { return 1; } return odd(n - 1); } \
                   void main(){ int r; r = odd(5); }";
        let prog = parse_src(src).unwrap();
        assert_eq!(prog.functions.len(), 3);
    }

    #[test]
    fn labels_and_gotos() {
        let src = "void main(){ int a = 0; L: a = a + 1; if (a < 3) { goto L; } }";
        let prog = parse_src(src).unwrap();
        assert!(prog.functions[0]
            .body
            .iter()
            .any(|s| matches!(s, Stmt::Label { name } if name == "L")));
    }
}
