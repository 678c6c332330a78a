//! Detailed per-function control-flow graphs with token-level back-mapping.
//!
//! Every function is a separate single-entry single-exit component. A call is
//! a summary edge from the call site to the point where execution resumes
//! after the callee returns; the callee linkage lives in the edge effect, so
//! components never share nodes. Short-circuit `&&`/`||` expand into
//! branching, one statement per edge otherwise.
//!
//! Back-mapping convention: an edge carries the value tokens of the code it
//! executes (identifiers, literals, operators); punctuation, control
//! keywords and short-circuit connectives are captured by graph shape and
//! appear on no edge. The true-assume edge of a branch carries the condition
//! tokens, its false twin carries none, so every token belongs to at most
//! one edge.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::ast::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The memory effect of one edge.
#[derive(Clone, Debug, PartialEq)]
pub enum Effect {
    Assign {
        lhs: LValue,
        rhs: Expr,
    },
    /// Pass only when `cond` evaluates truthy (`polarity`) / falsy.
    Assume {
        cond: Expr,
        polarity: bool,
    },
    /// Summary edge: head is the call site, tail the return site.
    Call {
        callee: String,
        args: Vec<Expr>,
        ret: Option<LValue>,
    },
    Alloc {
        lhs: LValue,
        size: Expr,
    },
    Free {
        expr: Expr,
    },
    Nop,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CfgEdge {
    pub id: EdgeId,
    pub head: NodeId,
    pub tail: NodeId,
    pub effect: Effect,
    pub lines: BTreeSet<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CfgFunction {
    pub name: String,
    pub entry: NodeId,
    pub exit: NodeId,
    /// Qualified parameter names, in order.
    pub params: Vec<(String, Ty)>,
    pub locals: Vec<(String, Ty)>,
    pub ret_slot: Option<(String, Ty)>,
}

impl CfgFunction {
    /// Qualified names of the signed-integer variables this function owns.
    pub fn int_vars(&self) -> impl Iterator<Item = &str> {
        self.params
            .iter()
            .chain(self.locals.iter())
            .chain(self.ret_slot.iter())
            .filter(|(_, t)| *t == Ty::Int)
            .map(|(n, _)| n.as_str())
    }

    pub fn all_vars(&self) -> impl Iterator<Item = &(String, Ty)> {
        self.params
            .iter()
            .chain(self.locals.iter())
            .chain(self.ret_slot.iter())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnsupportedConstruct {
    pub token: u32,
    pub what: String,
}

impl fmt::Display for UnsupportedConstruct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unsupported construct at token {}: {}", self.token, self.what)
    }
}

impl std::error::Error for UnsupportedConstruct {}

#[derive(Clone, Debug)]
pub struct InternalCfg {
    pub num_nodes: u32,
    pub edges: Vec<CfgEdge>,
    pub functions: Vec<CfgFunction>,
    pub calls: BTreeSet<EdgeId>,
    /// Qualified names whose address is taken anywhere in the program.
    pub address_taken: BTreeSet<String>,
    out_adj: Vec<Vec<EdgeId>>,
    in_adj: Vec<Vec<EdgeId>>,
    node_function: Vec<u32>,
    loop_heads: BTreeSet<NodeId>,
}

impl InternalCfg {
    pub fn edge(&self, id: EdgeId) -> &CfgEdge {
        &self.edges[id.0 as usize]
    }

    pub fn out_edges(&self, n: NodeId) -> &[EdgeId] {
        &self.out_adj[n.0 as usize]
    }

    pub fn in_edges(&self, n: NodeId) -> &[EdgeId] {
        &self.in_adj[n.0 as usize]
    }

    pub fn out_degree(&self, n: NodeId) -> usize {
        self.out_adj[n.0 as usize].len()
    }

    pub fn in_degree(&self, n: NodeId) -> usize {
        self.in_adj[n.0 as usize].len()
    }

    pub fn is_join(&self, n: NodeId) -> bool {
        self.in_degree(n) > 1
    }

    pub fn is_loop_head(&self, n: NodeId) -> bool {
        self.loop_heads.contains(&n)
    }

    pub fn is_function_entry(&self, n: NodeId) -> bool {
        self.functions.iter().any(|f| f.entry == n)
    }

    pub fn is_exit(&self, n: NodeId) -> bool {
        self.out_degree(n) == 0
    }

    /// Return sites: tails of call edges.
    pub fn is_return_site(&self, n: NodeId) -> bool {
        self.in_adj[n.0 as usize]
            .iter()
            .any(|e| self.calls.contains(e))
    }

    pub fn function_of(&self, n: NodeId) -> &CfgFunction {
        &self.functions[self.node_function[n.0 as usize] as usize]
    }

    pub fn function_named(&self, name: &str) -> Option<&CfgFunction> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn main(&self) -> &CfgFunction {
        self.function_named("main").expect("main exists")
    }

    pub fn call_edges_to(&self, callee: &str) -> Vec<EdgeId> {
        self.edges
            .iter()
            .filter(|e| matches!(&e.effect, Effect::Call { callee: c, .. } if c == callee))
            .map(|e| e.id)
            .collect()
    }

    /// Entry node of the function a call edge enters.
    pub fn callee_entry(&self, e: EdgeId) -> Option<NodeId> {
        match &self.edge(e).effect {
            Effect::Call { callee, .. } => self.function_named(callee).map(|f| f.entry),
            _ => None,
        }
    }

    /// Checks the structural assumptions of the canonical-program recipe:
    /// edges sharing lines share their head, entries have no in-edges, exits
    /// no out-edges, the calls set matches the call effects.
    pub fn validate(&self) -> Result<(), String> {
        for a in &self.edges {
            for b in &self.edges {
                if a.id < b.id && !a.lines.is_disjoint(&b.lines) && a.head != b.head {
                    return Err(format!(
                        "edges {} and {} share lines but not their head",
                        a.id, b.id
                    ));
                }
            }
        }
        for f in &self.functions {
            if self.in_degree(f.entry) != 0 {
                return Err(format!("entry of `{}` has incoming edges", f.name));
            }
            if self.out_degree(f.exit) != 0 {
                return Err(format!("exit of `{}` has outgoing edges", f.name));
            }
        }
        for id in &self.calls {
            if !matches!(self.edge(*id).effect, Effect::Call { .. }) {
                return Err(format!("edge {id} is in calls but has no call effect"));
            }
        }
        for e in &self.edges {
            if matches!(e.effect, Effect::Call { .. }) && !self.calls.contains(&e.id) {
                return Err(format!("call edge {} missing from calls set", e.id));
            }
        }
        Ok(())
    }

    /// The frontend convention on top of `validate`: every token index
    /// appears in at most one edge's line set.
    pub fn validate_strict(&self) -> Result<(), String> {
        self.validate()?;
        let mut seen: BTreeMap<u32, EdgeId> = BTreeMap::new();
        for e in &self.edges {
            for line in &e.lines {
                if let Some(other) = seen.insert(*line, e.id) {
                    return Err(format!("token {line} appears on edges {other} and {}", e.id));
                }
            }
        }
        Ok(())
    }

    /// Line-oriented text dump: `N <id>` per node, then
    /// `E <head> <tail> <C|-> <comma-joined lines>` per edge.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for n in 0..self.num_nodes {
            s.push_str(&format!("N {n}\n"));
        }
        for e in &self.edges {
            let kind = if self.calls.contains(&e.id) { "C" } else { "-" };
            let lines: Vec<String> = e.lines.iter().map(|l| l.to_string()).collect();
            let lines = if lines.is_empty() {
                "-".to_string()
            } else {
                lines.join(",")
            };
            s.push_str(&format!("E {} {} {} {}\n", e.head, e.tail, kind, lines));
        }
        s
    }
}

/// Direct construction of internal representations, used for client graphs
/// that were not produced by the MiniImp frontend (they need not satisfy the
/// recipe-input conventions).
pub struct CfgBuilder {
    num_nodes: u32,
    edges: Vec<CfgEdge>,
    functions: Vec<CfgFunction>,
    calls: BTreeSet<EdgeId>,
}

impl CfgBuilder {
    pub fn new() -> CfgBuilder {
        CfgBuilder {
            num_nodes: 0,
            edges: Vec::new(),
            functions: Vec::new(),
            calls: BTreeSet::new(),
        }
    }

    pub fn node(&mut self) -> NodeId {
        let n = NodeId(self.num_nodes);
        self.num_nodes += 1;
        n
    }

    pub fn edge(&mut self, head: NodeId, tail: NodeId, effect: Effect, lines: &[u32]) -> EdgeId {
        let id = EdgeId(self.edges.len() as u32);
        if matches!(effect, Effect::Call { .. }) {
            self.calls.insert(id);
        }
        self.edges.push(CfgEdge {
            id,
            head,
            tail,
            effect,
            lines: lines.iter().copied().collect(),
        });
        id
    }

    pub fn mark_call(&mut self, id: EdgeId) {
        self.calls.insert(id);
    }

    pub fn function(&mut self, name: &str, entry: NodeId, exit: NodeId) {
        self.functions.push(CfgFunction {
            name: name.to_string(),
            entry,
            exit,
            params: Vec::new(),
            locals: Vec::new(),
            ret_slot: None,
        });
    }

    pub fn finish(self) -> InternalCfg {
        finish_graph(
            self.num_nodes,
            self.edges,
            self.functions,
            self.calls,
            BTreeSet::new(),
        )
    }
}

impl Default for CfgBuilder {
    fn default() -> Self {
        CfgBuilder::new()
    }
}

fn finish_graph(
    num_nodes: u32,
    edges: Vec<CfgEdge>,
    functions: Vec<CfgFunction>,
    calls: BTreeSet<EdgeId>,
    address_taken: BTreeSet<String>,
) -> InternalCfg {
    let mut out_adj = vec![Vec::new(); num_nodes as usize];
    let mut in_adj = vec![Vec::new(); num_nodes as usize];
    for e in &edges {
        out_adj[e.head.0 as usize].push(e.id);
        in_adj[e.tail.0 as usize].push(e.id);
    }
    // assign nodes to functions by reachability from entries (over all edges;
    // components are disjoint by construction)
    let mut node_function = vec![u32::MAX; num_nodes as usize];
    for (fi, f) in functions.iter().enumerate() {
        let mut stack = vec![f.entry];
        node_function[f.entry.0 as usize] = fi as u32;
        node_function[f.exit.0 as usize] = fi as u32;
        while let Some(n) = stack.pop() {
            for dir in [&out_adj, &in_adj] {
                for eid in &dir[n.0 as usize] {
                    let e = &edges[eid.0 as usize];
                    for m in [e.head, e.tail] {
                        if node_function[m.0 as usize] == u32::MAX {
                            node_function[m.0 as usize] = fi as u32;
                            stack.push(m);
                        }
                    }
                }
            }
        }
    }
    for nf in node_function.iter_mut() {
        if *nf == u32::MAX {
            *nf = 0;
        }
    }
    // loop heads: targets of DFS back edges, per function
    let mut loop_heads = BTreeSet::new();
    for f in &functions {
        let mut color = vec![0u8; num_nodes as usize]; // 0 white, 1 on stack, 2 done
        let mut stack: Vec<(NodeId, usize)> = vec![(f.entry, 0)];
        color[f.entry.0 as usize] = 1;
        while let Some((n, i)) = stack.pop() {
            let outs = &out_adj[n.0 as usize];
            if i < outs.len() {
                stack.push((n, i + 1));
                let t = edges[outs[i].0 as usize].tail;
                match color[t.0 as usize] {
                    0 => {
                        color[t.0 as usize] = 1;
                        stack.push((t, 0));
                    }
                    1 => {
                        loop_heads.insert(t);
                    }
                    _ => {}
                }
            } else {
                color[n.0 as usize] = 2;
            }
        }
    }
    InternalCfg {
        num_nodes,
        edges,
        functions,
        calls,
        address_taken,
        out_adj,
        in_adj,
        node_function,
        loop_heads,
    }
}

struct Lowering {
    num_nodes: u32,
    edges: Vec<CfgEdge>,
    calls: BTreeSet<EdgeId>,
    labels: BTreeMap<String, NodeId>,
}

impl Lowering {
    fn fresh(&mut self) -> NodeId {
        let n = NodeId(self.num_nodes);
        self.num_nodes += 1;
        n
    }

    fn label_node(&mut self, name: &str) -> NodeId {
        if let Some(n) = self.labels.get(name) {
            return *n;
        }
        let n = self.fresh();
        self.labels.insert(name.to_string(), n);
        n
    }

    fn emit(&mut self, head: NodeId, tail: NodeId, effect: Effect, lines: BTreeSet<u32>) -> EdgeId {
        let id = EdgeId(self.edges.len() as u32);
        if matches!(effect, Effect::Call { .. }) {
            self.calls.insert(id);
        }
        self.edges.push(CfgEdge {
            id,
            head,
            tail,
            effect,
            lines,
        });
        id
    }

    fn expand_cond(&mut self, cond: &Expr, from: NodeId, t: NodeId, f: NodeId) {
        match cond {
            Expr::Binary(BinOp::And, a, b, _) => {
                let m = self.fresh();
                self.expand_cond(a, from, m, f);
                self.expand_cond(b, m, t, f);
            }
            Expr::Binary(BinOp::Or, a, b, _) => {
                let m = self.fresh();
                self.expand_cond(a, from, t, m);
                self.expand_cond(b, m, t, f);
            }
            Expr::Unary(UnOp::Not, x, _) => self.expand_cond(x, from, f, t),
            leaf => {
                let mut lines = BTreeSet::new();
                leaf.value_tokens(&mut lines);
                self.emit(
                    from,
                    t,
                    Effect::Assume {
                        cond: leaf.clone(),
                        polarity: true,
                    },
                    lines,
                );
                self.emit(
                    from,
                    f,
                    Effect::Assume {
                        cond: leaf.clone(),
                        polarity: false,
                    },
                    BTreeSet::new(),
                );
            }
        }
    }

    fn lower_seq(&mut self, stmts: &[Stmt], entry: NodeId, sink: NodeId, fx: &FnCtx) {
        let mut cur = entry;
        let mut i = 0;
        while i < stmts.len() {
            let stmt = &stmts[i];
            if let Stmt::Label { name } = stmt {
                let ln = self.label_node(name);
                if cur != ln {
                    self.emit(cur, ln, Effect::Nop, BTreeSet::new());
                }
                cur = ln;
                i += 1;
                continue;
            }
            if let Stmt::Decl { init: None, .. } = stmt {
                i += 1;
                continue;
            }
            let next = if i + 1 == stmts.len() {
                sink
            } else if let Stmt::Label { name } = &stmts[i + 1] {
                self.label_node(name)
            } else {
                self.fresh()
            };
            self.lower_one(stmt, cur, next, fx);
            cur = next;
            i += 1;
        }
        if cur != sink {
            self.emit(cur, sink, Effect::Nop, BTreeSet::new());
        }
    }

    fn lower_one(&mut self, stmt: &Stmt, cur: NodeId, next: NodeId, fx: &FnCtx) {
        match stmt {
            Stmt::Label { .. } | Stmt::Decl { init: None, .. } => unreachable!("handled in lower_seq"),
            Stmt::Decl {
                name,
                token,
                init: Some(rhs),
                assign_token,
                ..
            } => {
                let lhs = LValue::Var(name.clone(), *token);
                let mut lines = BTreeSet::new();
                lines.insert(*token);
                if let Some(t) = assign_token {
                    lines.insert(*t);
                }
                rhs.value_tokens(&mut lines);
                self.emit_assign_like(cur, next, lhs, rhs, lines, fx);
            }
            Stmt::Assign {
                lhs,
                rhs,
                assign_token,
            } => {
                let mut lines = BTreeSet::new();
                lhs.value_tokens(&mut lines);
                lines.insert(*assign_token);
                rhs.value_tokens(&mut lines);
                self.emit_assign_like(cur, next, lhs.clone(), rhs, lines, fx);
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let t_entry = self.fresh();
                if else_branch.is_empty() {
                    self.expand_cond(cond, cur, t_entry, next);
                    self.lower_seq(then_branch, t_entry, next, fx);
                } else {
                    let e_entry = self.fresh();
                    self.expand_cond(cond, cur, t_entry, e_entry);
                    self.lower_seq(then_branch, t_entry, next, fx);
                    self.lower_seq(else_branch, e_entry, next, fx);
                }
            }
            Stmt::While { cond, body } => {
                let b_entry = self.fresh();
                self.expand_cond(cond, cur, b_entry, next);
                self.lower_seq(body, b_entry, cur, fx);
            }
            Stmt::Goto { label } => {
                let ln = self.label_node(label);
                self.emit(cur, ln, Effect::Nop, BTreeSet::new());
                // `next` starts an unreachable region if code follows
            }
            Stmt::Return { expr } => {
                match expr {
                    None => {
                        self.emit(cur, fx.exit, Effect::Nop, BTreeSet::new());
                    }
                    Some(e) => {
                        let slot = LValue::Var(fx.ret_slot.clone().unwrap_or_default(), 0);
                        let mut lines = BTreeSet::new();
                        e.value_tokens(&mut lines);
                        match e {
                            Expr::Call { callee, args, .. } => {
                                self.emit(
                                    cur,
                                    fx.exit,
                                    Effect::Call {
                                        callee: callee.clone(),
                                        args: args.clone(),
                                        ret: Some(slot),
                                    },
                                    lines,
                                );
                            }
                            _ => {
                                self.emit(
                                    cur,
                                    fx.exit,
                                    Effect::Assign {
                                        lhs: slot,
                                        rhs: e.clone(),
                                    },
                                    lines,
                                );
                            }
                        }
                    }
                }
                // `next` starts an unreachable region if code follows
            }
            Stmt::Assume { expr, token } => {
                let mut lines = BTreeSet::new();
                lines.insert(*token);
                expr.value_tokens(&mut lines);
                self.emit(
                    cur,
                    next,
                    Effect::Assume {
                        cond: expr.clone(),
                        polarity: true,
                    },
                    lines,
                );
            }
            Stmt::Error { token } => {
                // halts: an assumption that never passes
                let mut lines = BTreeSet::new();
                lines.insert(*token);
                self.emit(
                    cur,
                    next,
                    Effect::Assume {
                        cond: Expr::Num(0, *token),
                        polarity: true,
                    },
                    lines,
                );
            }
            Stmt::Free { expr, token } => {
                let mut lines = BTreeSet::new();
                lines.insert(*token);
                expr.value_tokens(&mut lines);
                self.emit(cur, next, Effect::Free { expr: expr.clone() }, lines);
            }
            Stmt::CallStmt { call } => {
                let mut lines = BTreeSet::new();
                call.value_tokens(&mut lines);
                if let Expr::Call { callee, args, .. } = call {
                    self.emit(
                        cur,
                        next,
                        Effect::Call {
                            callee: callee.clone(),
                            args: args.clone(),
                            ret: None,
                        },
                        lines,
                    );
                }
            }
        }
    }

    fn emit_assign_like(
        &mut self,
        cur: NodeId,
        next: NodeId,
        lhs: LValue,
        rhs: &Expr,
        lines: BTreeSet<u32>,
        _fx: &FnCtx,
    ) {
        match rhs {
            Expr::Call { callee, args, .. } => {
                self.emit(
                    cur,
                    next,
                    Effect::Call {
                        callee: callee.clone(),
                        args: args.clone(),
                        ret: Some(lhs),
                    },
                    lines,
                );
            }
            Expr::Malloc(size, _) => {
                self.emit(
                    cur,
                    next,
                    Effect::Alloc {
                        lhs,
                        size: (**size).clone(),
                    },
                    lines,
                );
            }
            _ => {
                self.emit(
                    cur,
                    next,
                    Effect::Assign {
                        lhs,
                        rhs: rhs.clone(),
                    },
                    lines,
                );
            }
        }
    }
}

struct FnCtx {
    exit: NodeId,
    ret_slot: Option<String>,
}

fn collect_addr_taken(stmts: &[Stmt], out: &mut BTreeSet<String>) {
    fn expr(e: &Expr, out: &mut BTreeSet<String>) {
        match e {
            Expr::AddrOf(q, _, _) => {
                out.insert(q.clone());
            }
            Expr::Unary(_, x, _) | Expr::Deref(x, _) | Expr::Malloc(x, _) => expr(x, out),
            Expr::Binary(_, a, b, _) => {
                expr(a, out);
                expr(b, out);
            }
            Expr::Call { args, .. } => args.iter().for_each(|a| expr(a, out)),
            _ => {}
        }
    }
    for s in stmts {
        match s {
            Stmt::Decl { init: Some(e), .. }
            | Stmt::Return { expr: Some(e) }
            | Stmt::Assume { expr: e, .. }
            | Stmt::Free { expr: e, .. }
            | Stmt::CallStmt { call: e } => expr(e, out),
            Stmt::Assign { lhs, rhs, .. } => {
                if let LValue::Deref(t, _) = lhs {
                    expr(t, out);
                }
                expr(rhs, out);
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => {
                expr(cond, out);
                collect_addr_taken(then_branch, out);
                collect_addr_taken(else_branch, out);
            }
            Stmt::While { cond, body } => {
                expr(cond, out);
                collect_addr_taken(body, out);
            }
            _ => {}
        }
    }
}

/// Builds the detailed control-flow graph of a resolved program.
pub fn build_cfg(program: &MiniImpProgram) -> Result<InternalCfg, UnsupportedConstruct> {
    let mut low = Lowering {
        num_nodes: 0,
        edges: Vec::new(),
        calls: BTreeSet::new(),
        labels: BTreeMap::new(),
    };
    let mut functions = Vec::new();
    for f in &program.functions {
        low.labels.clear();
        let entry = low.fresh();
        let (exit, ret_slot) = if f.body.is_empty() {
            (entry, None)
        } else {
            let exit = low.fresh();
            let slot = if f.ret_slot_needed() {
                Some(ret_slot_name(&f.name))
            } else {
                None
            };
            let fx = FnCtx {
                exit,
                ret_slot: slot.clone(),
            };
            low.lower_seq(&f.body, entry, exit, &fx);
            (exit, slot)
        };
        let slot_ty = match f.ret_type {
            Ty::Void => None,
            t => Some(t),
        };
        functions.push(CfgFunction {
            name: f.name.clone(),
            entry,
            exit,
            params: f.params.iter().map(|p| (p.qualified.clone(), p.ty)).collect(),
            locals: f.locals.iter().map(|l| (l.qualified.clone(), l.ty)).collect(),
            ret_slot: ret_slot.and_then(|n| slot_ty.map(|t| (n, t))),
        });
    }
    let mut address_taken = BTreeSet::new();
    for f in &program.functions {
        collect_addr_taken(&f.body, &mut address_taken);
    }
    Ok(finish_graph(
        low.num_nodes,
        low.edges,
        functions,
        low.calls,
        address_taken,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse, tokenize};

    pub fn cfg_of(src: &str) -> InternalCfg {
        let toks = tokenize(src).unwrap();
        let prog = parse(&toks).unwrap();
        build_cfg(&prog).unwrap()
    }

    #[test]
    fn straight_line_two_assignments() {
        // a=0;b=1; inside main: the statement edges carry value tokens only
        let cfg = cfg_of("void main(){ int a = 0; int b = 1; }");
        let main = cfg.main();
        let mut lines: Vec<Vec<u32>> = cfg
            .edges
            .iter()
            .filter(|e| !e.lines.is_empty())
            .map(|e| e.lines.iter().copied().collect())
            .collect();
        lines.sort();
        // tokens: void main ( ) { int a = 0 ; int b = 1 ; }
        assert_eq!(lines, vec![vec![7, 8, 9], vec![12, 13, 14]]);
        assert_eq!(cfg.out_degree(main.entry), 1);
        assert_eq!(cfg.out_degree(main.exit), 0);
        cfg.validate_strict().unwrap();
    }

    #[test]
    fn if_else_is_a_diamond() {
        let cfg = cfg_of("void main(){ int a = input(); int b; if (a > 0) { b = 1; } else { b = 2; } }");
        let branch_nodes: Vec<NodeId> = (0..cfg.num_nodes)
            .map(NodeId)
            .filter(|n| cfg.out_degree(*n) == 2)
            .collect();
        assert_eq!(branch_nodes.len(), 1);
        let cond = branch_nodes[0];
        let outs = cfg.out_edges(cond);
        let lined = outs
            .iter()
            .filter(|e| !cfg.edge(**e).lines.is_empty())
            .count();
        assert_eq!(lined, 1, "condition tokens sit on exactly one out-edge");
        cfg.validate_strict().unwrap();
    }

    #[test]
    fn recursive_call_is_a_summary_edge_in_calls() {
        let src = "int f(int n){ if (n < 1) { return 0; } return f(n - 1); } \
                   void main(){ int r; r = f(3); }";
        let cfg = cfg_of(src);
        assert_eq!(cfg.calls.len(), 2);
        let f = cfg.function_named("f").unwrap();
        // the self call runs from inside f straight to f's exit
        let self_call = cfg
            .calls
            .iter()
            .map(|e| cfg.edge(*e))
            .find(|e| cfg.function_of(e.head).name == "f")
            .unwrap();
        assert_eq!(self_call.tail, f.exit);
        assert_eq!(cfg.in_degree(f.entry), 0);
        cfg.validate_strict().unwrap();
    }

    #[test]
    fn short_circuit_expands_into_branching() {
        let cfg = cfg_of("void main(){ int a = input(); int b = input(); int c; if (a > 0 && b > 0) { c = 1; } }");
        let branch_nodes = (0..cfg.num_nodes)
            .map(NodeId)
            .filter(|n| cfg.out_degree(*n) == 2)
            .count();
        assert_eq!(branch_nodes, 2);
        cfg.validate_strict().unwrap();
    }

    #[test]
    fn while_loop_has_back_edge_and_loop_head() {
        let cfg = cfg_of("void main(){ int i = 0; while (i < 10) { i = i + 1; } }");
        assert_eq!(cfg.loop_heads.len(), 1);
        let head = *cfg.loop_heads.iter().next().unwrap();
        assert!(cfg.is_join(head));
        cfg.validate_strict().unwrap();
    }

    #[test]
    fn empty_body_collapses_entry_and_exit() {
        let cfg = cfg_of("void main(){}");
        let main = cfg.main();
        assert_eq!(main.entry, main.exit);
    }

    #[test]
    fn every_token_on_at_most_one_edge() {
        let src = "int g(int x){ int y = 0; while (y < x && x < 40) { y = y + 2; } return y; } \
                   void main(){ int r; r = g(7); if (r > 2 || r < 1) { error(); } }";
        let cfg = cfg_of(src);
        cfg.validate_strict().unwrap();
    }

    #[test]
    fn goto_and_label_wire_up() {
        let cfg = cfg_of("void main(){ int a = 0; L: a = a + 1; if (a < 3) { goto L; } }");
        assert!(!cfg.loop_heads.is_empty());
        cfg.validate_strict().unwrap();
    }

    #[test]
    fn dump_format() {
        let cfg = cfg_of("void main(){ int a = 1; }");
        let d = cfg.dump();
        assert!(d.starts_with("N 0\n"));
        assert!(d.contains("E 0 1 - 7,8,9"));
    }
}
