//! Abstract syntax of MiniImp. Every identifier, operator and literal node
//! keeps the index of its lexical token so control-flow edges can be mapped
//! back to reshaped program lines.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ty {
    Void,
    Int,
    Ptr,
    PtrPtr,
}

impl Ty {
    pub fn is_pointer(self) -> bool {
        matches!(self, Ty::Ptr | Ty::PtrPtr)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Num(i64, u32),
    /// Resolved identifier occurrence: qualified name plus its token.
    Var(String, u32),
    Unary(UnOp, Box<Expr>, u32),
    Binary(BinOp, Box<Expr>, Box<Expr>, u32),
    /// `&x`; both the `&` and the identifier token are kept.
    AddrOf(String, u32, u32),
    /// `*e`; the `*` token is kept.
    Deref(Box<Expr>, u32),
    /// `input()`.
    Input(u32),
    /// `f(args)`; only allowed as a whole right-hand side or statement.
    Call {
        callee: String,
        callee_token: u32,
        args: Vec<Expr>,
    },
    /// `malloc(size)`; only allowed as a whole right-hand side.
    Malloc(Box<Expr>, u32),
}

impl Expr {
    /// Value tokens of the expression: identifiers, literals and operators,
    /// excluding short-circuit connectives (captured by CFG shape).
    pub fn value_tokens(&self, out: &mut std::collections::BTreeSet<u32>) {
        match self {
            Expr::Num(_, t) | Expr::Var(_, t) | Expr::Input(t) => {
                out.insert(*t);
            }
            Expr::Unary(op, e, t) => {
                if *op == UnOp::Neg || *op == UnOp::Not {
                    out.insert(*t);
                }
                e.value_tokens(out);
            }
            Expr::Binary(op, a, b, t) => {
                if !matches!(op, BinOp::And | BinOp::Or) {
                    out.insert(*t);
                }
                a.value_tokens(out);
                b.value_tokens(out);
            }
            Expr::AddrOf(_, amp, ident) => {
                out.insert(*amp);
                out.insert(*ident);
            }
            Expr::Deref(e, t) => {
                out.insert(*t);
                e.value_tokens(out);
            }
            Expr::Call {
                callee_token, args, ..
            } => {
                out.insert(*callee_token);
                for a in args {
                    a.value_tokens(out);
                }
            }
            Expr::Malloc(e, t) => {
                out.insert(*t);
                e.value_tokens(out);
            }
        }
    }

    pub fn contains_call(&self) -> bool {
        match self {
            Expr::Num(..) | Expr::Var(..) | Expr::AddrOf(..) | Expr::Input(..) => false,
            Expr::Call { .. } | Expr::Malloc(..) => true,
            Expr::Unary(_, e, _) | Expr::Deref(e, _) => e.contains_call(),
            Expr::Binary(_, a, b, _) => a.contains_call() || b.contains_call(),
        }
    }
}

/// Assignment target.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LValue {
    /// Resolved variable, qualified name plus token.
    Var(String, u32),
    /// `*e = ...`; the pointed-to cell.
    Deref(Expr, u32),
}

impl LValue {
    pub fn value_tokens(&self, out: &mut std::collections::BTreeSet<u32>) {
        match self {
            LValue::Var(_, t) => {
                out.insert(*t);
            }
            LValue::Deref(e, t) => {
                out.insert(*t);
                e.value_tokens(out);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    /// Declaration; initializer is optional. The declared qualified name and
    /// its token are recorded during resolution.
    Decl {
        name: String,
        token: u32,
        ty: Ty,
        init: Option<Expr>,
        assign_token: Option<u32>,
    },
    Assign {
        lhs: LValue,
        rhs: Expr,
        assign_token: u32,
    },
    If {
        cond: Expr,
        then_branch: Vec<Stmt>,
        else_branch: Vec<Stmt>,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
    },
    Goto {
        label: String,
    },
    Label {
        name: String,
    },
    Return {
        expr: Option<Expr>,
    },
    Assume {
        expr: Expr,
        token: u32,
    },
    /// `error();` — halts execution when reached.
    Error {
        token: u32,
    },
    Free {
        expr: Expr,
        token: u32,
    },
    CallStmt {
        call: Expr,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub qualified: String,
    pub token: u32,
    pub ty: Ty,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalDecl {
    pub qualified: String,
    pub token: u32,
    pub ty: Ty,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Function {
    pub name: String,
    pub name_token: u32,
    pub ret_type: Ty,
    pub params: Vec<Param>,
    pub locals: Vec<LocalDecl>,
    pub body: Vec<Stmt>,
}

impl Function {
    pub fn ret_slot_needed(&self) -> bool {
        self.ret_type != Ty::Void
    }

    pub fn var_type(&self, qualified: &str) -> Option<Ty> {
        self.params
            .iter()
            .find(|p| p.qualified == qualified)
            .map(|p| p.ty)
            .or_else(|| {
                self.locals
                    .iter()
                    .find(|l| l.qualified == qualified)
                    .map(|l| l.ty)
            })
    }
}

/// A declared identifier, in token order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdentDecl {
    pub qualified: String,
    pub token: u32,
}

/// A resolved MiniImp program.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MiniImpProgram {
    pub functions: Vec<Function>,
    /// All memory-referencing identifiers (function names, parameters,
    /// locals) ordered by their declaration token indices.
    pub identifier_list: Vec<IdentDecl>,
}

impl MiniImpProgram {
    pub fn function(&self, name: &str) -> Option<&Function> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn main(&self) -> &Function {
        self.function("main").expect("parser guarantees main")
    }
}

/// Name of the synthetic per-function return slot.
pub fn ret_slot_name(function: &str) -> String {
    format!("{function}::$ret")
}
