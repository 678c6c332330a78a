//! Concrete interpreter for MiniImp control-flow graphs.
//!
//! Serves as the ground truth for the analyses: random-input executions
//! check abstract invariants, and fixed-input executions replay the paths
//! symbolic execution claims feasible. Fresh unknowns — `input()` results
//! and reads of uninitialized cells — are drawn from an input source.
//!
//! Variable cells live per stack frame, keyed by segment; a pointer to a
//! variable resolves to the topmost frame owning its segment. Heap cells are
//! global, keyed by (segment, byte offset).

use std::collections::BTreeMap;

use crate::canon::{Context, Filter};
use crate::lang::ast::{BinOp, Expr, LValue, UnOp};
use crate::lang::cfg::{EdgeId, Effect, InternalCfg, NodeId};
use crate::memory::{HeapRegistry, SegmentTable};

/// Call-string suffix limit shared by all parties that key anything by a
/// reduced call context.
pub const CONTEXT_SUFFIX_LIMIT: usize = 3;

pub fn suffix_limit(edges: &[EdgeId], k: usize) -> Vec<EdgeId> {
    let start = edges.len().saturating_sub(k);
    edges[start..].to_vec()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Value {
    Int(i64),
    Ptr(u32, i64),
}

impl Value {
    fn truthy(self) -> bool {
        match self {
            Value::Int(v) => v != 0,
            Value::Ptr(seg, _) => seg != 0,
        }
    }
}

pub trait InputSource {
    fn next_input(&mut self) -> i64;
}

/// Replays a fixed input stream; after it runs dry every draw yields the
/// fill value.
pub struct FixedInputs {
    pub values: Vec<i64>,
    pub fill: i64,
    pos: usize,
}

impl FixedInputs {
    pub fn new(values: Vec<i64>) -> FixedInputs {
        FixedInputs {
            values,
            fill: 0,
            pos: 0,
        }
    }
}

impl InputSource for FixedInputs {
    fn next_input(&mut self) -> i64 {
        let v = self.values.get(self.pos).copied().unwrap_or(self.fill);
        self.pos += 1;
        v
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HaltReason {
    Completed,
    /// An assume edge (or `error()`) blocked the run.
    AssumeFailed,
    /// Invalid memory access or operation.
    Fault(String),
    StepLimit,
}

/// One arrival at a node: the call stack as call edges, and the values of
/// the current function's initialized integer variables.
#[derive(Clone, Debug)]
pub struct Visit {
    pub node: NodeId,
    pub call_stack: Vec<EdgeId>,
    pub int_vars: Vec<(u32, i64)>,
}

#[derive(Clone, Debug)]
pub struct ConcreteRun {
    pub visits: Vec<Visit>,
    pub trace: Vec<EdgeId>,
    pub halt: HaltReason,
    pub inputs_drawn: usize,
}

struct Frame {
    func: usize,
    cells: BTreeMap<u32, Value>,
    return_site: NodeId,
    ret_lvalue: Option<LValue>,
}

struct Interp<'a> {
    cfg: &'a InternalCfg,
    table: &'a SegmentTable,
    heap_reg: HeapRegistry,
    heap: BTreeMap<(u32, i64), Value>,
    frames: Vec<Frame>,
    call_stack: Vec<EdgeId>,
    inputs: &'a mut dyn InputSource,
    drawn: usize,
}

type Eval<T> = Result<T, HaltReason>;

impl<'a> Interp<'a> {
    fn seg_of(&self, qualified: &str) -> u32 {
        self.table.segment_of(qualified).expect("identifier tabled")
    }

    fn draw(&mut self) -> i64 {
        self.drawn += 1;
        self.inputs.next_input()
    }

    fn func_index(&self, name: &str) -> usize {
        self.cfg
            .functions
            .iter()
            .position(|f| f.name == name)
            .expect("function exists")
    }

    /// Topmost frame owning a variable segment.
    fn frame_of_segment(&mut self, seg: u32) -> Option<usize> {
        let name = self.table.name_of(seg)?;
        let owner = name.split("::").next().unwrap_or(name);
        for i in (0..self.frames.len()).rev() {
            if self.cfg.functions[self.frames[i].func].name == owner {
                return Some(i);
            }
        }
        None
    }

    fn read_cell(&mut self, seg: u32, off: i64) -> Eval<Value> {
        if seg == 0 {
            return Err(HaltReason::Fault("null dereference".into()));
        }
        if self.heap_reg.is_heap_segment(seg) {
            if let Some(v) = self.heap.get(&(seg, off)) {
                return Ok(*v);
            }
            let v = Value::Int(self.draw());
            self.heap.insert((seg, off), v);
            return Ok(v);
        }
        if off != 0 {
            return Err(HaltReason::Fault("non-zero offset into a variable".into()));
        }
        let fi = self
            .frame_of_segment(seg)
            .ok_or_else(|| HaltReason::Fault("dangling variable pointer".into()))?;
        if let Some(v) = self.frames[fi].cells.get(&seg) {
            return Ok(*v);
        }
        let v = Value::Int(self.draw());
        self.frames[fi].cells.insert(seg, v);
        Ok(v)
    }

    fn write_cell(&mut self, seg: u32, off: i64, v: Value) -> Eval<()> {
        if seg == 0 {
            return Err(HaltReason::Fault("null write".into()));
        }
        if self.heap_reg.is_heap_segment(seg) {
            self.heap.insert((seg, off), v);
            return Ok(());
        }
        if off != 0 {
            return Err(HaltReason::Fault("non-zero offset into a variable".into()));
        }
        let fi = self
            .frame_of_segment(seg)
            .ok_or_else(|| HaltReason::Fault("dangling variable pointer".into()))?;
        self.frames[fi].cells.insert(seg, v);
        Ok(())
    }

    fn read_var(&mut self, qualified: &str) -> Eval<Value> {
        let seg = self.seg_of(qualified);
        let top = self.frames.len() - 1;
        if let Some(v) = self.frames[top].cells.get(&seg) {
            return Ok(*v);
        }
        // not a local of the running function: fall back to cell resolution
        if self
            .cfg
            .functions
            .get(self.frames[top].func)
            .map(|f| f.all_vars().any(|(n, _)| n == qualified))
            .unwrap_or(false)
        {
            let v = Value::Int(self.draw());
            self.frames[top].cells.insert(seg, v);
            return Ok(v);
        }
        self.read_cell(seg, 0)
    }

    fn as_ptr(&self, v: Value) -> Eval<(u32, i64)> {
        match v {
            Value::Ptr(s, o) => Ok((s, o)),
            Value::Int(0) => Ok((0, 0)),
            Value::Int(_) => Err(HaltReason::Fault("integer used as pointer".into())),
        }
    }

    fn eval(&mut self, e: &Expr) -> Eval<Value> {
        match e {
            Expr::Num(v, _) => Ok(Value::Int(*v)),
            Expr::Var(q, _) => self.read_var(q),
            Expr::Input(_) => Ok(Value::Int(self.draw())),
            Expr::AddrOf(q, _, _) => Ok(Value::Ptr(self.seg_of(q), 0)),
            Expr::Deref(inner, _) => {
                let p = self.eval(inner)?;
                let (s, o) = self.as_ptr(p)?;
                self.read_cell(s, o)
            }
            Expr::Unary(op, x, _) => {
                let v = self.eval(x)?;
                match (op, v) {
                    (UnOp::Neg, Value::Int(i)) => Ok(Value::Int(-i)),
                    (UnOp::Not, v) => Ok(Value::Int(if v.truthy() { 0 } else { 1 })),
                    _ => Err(HaltReason::Fault("negation of a pointer".into())),
                }
            }
            Expr::Binary(op, a, b, _) => {
                let va = self.eval(a)?;
                // short-circuit when used as a value
                if *op == BinOp::And && !va.truthy() {
                    return Ok(Value::Int(0));
                }
                if *op == BinOp::Or && va.truthy() {
                    return Ok(Value::Int(1));
                }
                let vb = self.eval(b)?;
                self.binop(*op, va, vb)
            }
            Expr::Call { .. } | Expr::Malloc(..) => {
                Err(HaltReason::Fault("call position".into()))
            }
        }
    }

    fn binop(&mut self, op: BinOp, a: Value, b: Value) -> Eval<Value> {
        use Value::*;
        let int = |b: bool| Ok(Int(b as i64));
        match (op, a, b) {
            (BinOp::Add, Int(x), Int(y)) => Ok(Int(x.wrapping_add(y))),
            (BinOp::Add, Ptr(s, o), Int(k)) | (BinOp::Add, Int(k), Ptr(s, o)) => Ok(Ptr(s, o + k)),
            (BinOp::Sub, Int(x), Int(y)) => Ok(Int(x.wrapping_sub(y))),
            (BinOp::Sub, Ptr(s, o), Int(k)) => Ok(Ptr(s, o - k)),
            (BinOp::Mul, Int(x), Int(y)) => Ok(Int(x.wrapping_mul(y))),
            (BinOp::Eq, Int(x), Int(y)) => int(x == y),
            (BinOp::Ne, Int(x), Int(y)) => int(x != y),
            (BinOp::Lt, Int(x), Int(y)) => int(x < y),
            (BinOp::Le, Int(x), Int(y)) => int(x <= y),
            (BinOp::Gt, Int(x), Int(y)) => int(x > y),
            (BinOp::Ge, Int(x), Int(y)) => int(x >= y),
            (BinOp::Eq, Ptr(s, o), Ptr(s2, o2)) => int(s == s2 && o == o2),
            (BinOp::Ne, Ptr(s, o), Ptr(s2, o2)) => int(s != s2 || o != o2),
            (BinOp::Eq, Ptr(s, _), Int(0)) | (BinOp::Eq, Int(0), Ptr(s, _)) => int(s == 0),
            (BinOp::Ne, Ptr(s, _), Int(0)) | (BinOp::Ne, Int(0), Ptr(s, _)) => int(s != 0),
            (BinOp::And, x, y) => int(x.truthy() && y.truthy()),
            (BinOp::Or, x, y) => int(x.truthy() || y.truthy()),
            _ => Err(HaltReason::Fault(format!("invalid operands for {op:?}"))),
        }
    }

    fn write_lvalue(&mut self, lv: &LValue, v: Value) -> Eval<()> {
        match lv {
            LValue::Var(q, _) => {
                let seg = self.seg_of(q);
                let top = self.frames.len() - 1;
                self.frames[top].cells.insert(seg, v);
                Ok(())
            }
            LValue::Deref(e, _) => {
                let p = self.eval(e)?;
                let (s, o) = self.as_ptr(p)?;
                self.write_cell(s, o, v)
            }
        }
    }

    fn snapshot(&self, node: NodeId) -> Visit {
        let top = self.frames.last().expect("frame");
        let f = &self.cfg.functions[top.func];
        let mut int_vars = Vec::new();
        for name in f.int_vars() {
            let seg = self.table.segment_of(name).expect("tabled");
            if let Some(Value::Int(v)) = top.cells.get(&seg) {
                int_vars.push((seg, *v));
            }
        }
        Visit {
            node,
            call_stack: self.call_stack.clone(),
            int_vars,
        }
    }
}

/// Runs a program on the given input source, recording node visits and the
/// traversed edge sequence.
pub fn run_concrete(
    cfg: &InternalCfg,
    table: &SegmentTable,
    inputs: &mut dyn InputSource,
    max_steps: usize,
) -> ConcreteRun {
    let main_idx = cfg
        .functions
        .iter()
        .position(|f| f.name == "main")
        .expect("main exists");
    let mut it = Interp {
        cfg,
        table,
        heap_reg: HeapRegistry::new(table),
        heap: BTreeMap::new(),
        frames: vec![Frame {
            func: main_idx,
            cells: BTreeMap::new(),
            return_site: cfg.main().exit,
            ret_lvalue: None,
        }],
        call_stack: Vec::new(),
        inputs,
        drawn: 0,
    };
    let mut visits = Vec::new();
    let mut trace = Vec::new();
    let mut node = cfg.main().entry;
    let halt = loop {
        visits.push(it.snapshot(node));
        if trace.len() >= max_steps {
            break HaltReason::StepLimit;
        }
        let outs = cfg.out_edges(node);
        if outs.is_empty() {
            // function exit
            if it.frames.len() == 1 {
                break HaltReason::Completed;
            }
            let done = it.frames.pop().unwrap();
            it.call_stack.pop();
            if let Some(lv) = &done.ret_lvalue {
                let f = &cfg.functions[done.func];
                let ret_val = match &f.ret_slot {
                    Some((slot, _)) => {
                        let seg = it.seg_of(slot);
                        match done.cells.get(&seg) {
                            Some(v) => *v,
                            None => Value::Int(it.draw()),
                        }
                    }
                    None => Value::Int(it.draw()),
                };
                let lv = lv.clone();
                match it.write_lvalue(&lv, ret_val) {
                    Ok(()) => {}
                    Err(h) => break h,
                }
            }
            node = done.return_site;
            continue;
        }
        // choose the edge to traverse
        let mut chosen: Option<EdgeId> = None;
        let mut fault: Option<HaltReason> = None;
        if outs.len() == 1 {
            chosen = Some(outs[0]);
        } else {
            for eid in outs {
                if let Effect::Assume { cond, polarity } = &cfg.edge(*eid).effect {
                    match it.eval(cond) {
                        Ok(v) => {
                            if v.truthy() == *polarity {
                                chosen = Some(*eid);
                                break;
                            }
                        }
                        Err(h) => {
                            fault = Some(h);
                            break;
                        }
                    }
                } else {
                    fault = Some(HaltReason::Fault(
                        "branch node with non-assume edge".into(),
                    ));
                    break;
                }
            }
        }
        if let Some(h) = fault {
            break h;
        }
        let eid = match chosen {
            Some(e) => e,
            None => break HaltReason::Fault("no viable branch".into()),
        };
        let edge = cfg.edge(eid);
        let step = (|it: &mut Interp| -> Eval<Option<NodeId>> {
            match &edge.effect {
                Effect::Nop => Ok(Some(edge.tail)),
                Effect::Assume { cond, polarity } => {
                    let v = it.eval(cond)?;
                    if v.truthy() == *polarity {
                        Ok(Some(edge.tail))
                    } else {
                        Err(HaltReason::AssumeFailed)
                    }
                }
                Effect::Assign { lhs, rhs } => {
                    let v = it.eval(rhs)?;
                    it.write_lvalue(lhs, v)?;
                    Ok(Some(edge.tail))
                }
                Effect::Alloc { lhs, size } => {
                    let _ = it.eval(size)?;
                    let ctx = Context::new(
                        suffix_limit(&it.call_stack, CONTEXT_SUFFIX_LIMIT),
                        Filter::CALL,
                    );
                    let seg = it.heap_reg.segment_for(eid, &ctx);
                    it.write_lvalue(lhs, Value::Ptr(seg, 0))?;
                    Ok(Some(edge.tail))
                }
                Effect::Free { expr } => {
                    let _ = it.eval(expr)?;
                    Ok(Some(edge.tail))
                }
                Effect::Call { callee, args, ret } => {
                    let mut vals = Vec::with_capacity(args.len());
                    for a in args {
                        vals.push(it.eval(a)?);
                    }
                    let fi = it.func_index(callee);
                    let mut cells = BTreeMap::new();
                    for ((pname, _), v) in it.cfg.functions[fi].params.iter().zip(vals) {
                        cells.insert(it.seg_of(pname), v);
                    }
                    it.frames.push(Frame {
                        func: fi,
                        cells,
                        return_site: edge.tail,
                        ret_lvalue: ret.clone(),
                    });
                    it.call_stack.push(eid);
                    Ok(Some(it.cfg.functions[fi].entry))
                }
            }
        })(&mut it);
        match step {
            Ok(Some(next)) => {
                trace.push(eid);
                node = next;
            }
            Ok(None) => unreachable!(),
            Err(h) => break h,
        }
    };
    ConcreteRun {
        visits,
        trace,
        halt,
        inputs_drawn: it.drawn,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::frontend;
    use crate::memory::build_segment_table;

    fn run(src: &str, inputs: Vec<i64>) -> (ConcreteRun, InternalCfg, SegmentTable) {
        let (prog, cfg) = frontend(src).unwrap();
        let table = build_segment_table(&prog);
        let mut ins = FixedInputs::new(inputs);
        let r = run_concrete(&cfg, &table, &mut ins, 10_000);
        (r, cfg, table)
    }

    #[test]
    fn loop_terminates_with_counter_at_ten() {
        let (r, cfg, table) = run(
            "void main(){ int i = 0; while (i < 10) { i = i + 1; } }",
            vec![],
        );
        assert_eq!(r.halt, HaltReason::Completed);
        let seg = table.segment_of("main::i").unwrap();
        let exit = cfg.main().exit;
        let last = r.visits.iter().rev().find(|v| v.node == exit).unwrap();
        assert_eq!(last.int_vars, vec![(seg, 10)]);
    }

    #[test]
    fn inputs_drive_branches() {
        let src = "void main(){ int a = input(); int b; if (a > 0) { b = 1; } else { b = 2; } }";
        let (r1, cfg, table) = run(src, vec![5]);
        let (r2, _, _) = run(src, vec![-5]);
        assert_ne!(r1.trace, r2.trace);
        let segb = table.segment_of("main::b").unwrap();
        let exit = cfg.main().exit;
        let v1 = r1.visits.iter().find(|v| v.node == exit).unwrap();
        assert!(v1.int_vars.contains(&(segb, 1)));
    }

    #[test]
    fn recursion_uses_fresh_frames() {
        let src = "int sum(int n){ if (n < 1) { return 0; } int r; r = sum(n - 1); return r + n; } \
                   void main(){ int t; t = sum(4); }";
        let (r, cfg, table) = run(src, vec![]);
        assert_eq!(r.halt, HaltReason::Completed);
        let segt = table.segment_of("main::t").unwrap();
        let exit = cfg.main().exit;
        let last = r.visits.iter().rev().find(|v| v.node == exit).unwrap();
        assert!(last.int_vars.contains(&(segt, 10)));
        // call stack depth was recorded during the recursion
        assert!(r.visits.iter().any(|v| v.call_stack.len() == 5));
    }

    #[test]
    fn pointers_and_heap() {
        let src = "void main(){ int j = 7; int* p; int i; p = &j; i = *p; \
                   int* q; q = malloc(8); *q = 3; *(q + 4) = 4; i = i + *(q + 4); }";
        let (r, cfg, table) = run(src, vec![]);
        assert_eq!(r.halt, HaltReason::Completed);
        let segi = table.segment_of("main::i").unwrap();
        let exit = cfg.main().exit;
        let last = r.visits.iter().rev().find(|v| v.node == exit).unwrap();
        assert!(last.int_vars.contains(&(segi, 11)));
    }

    #[test]
    fn error_halts() {
        let (r, _, _) = run("void main(){ int a = 1; error(); a = 2; }", vec![]);
        assert_eq!(r.halt, HaltReason::AssumeFailed);
    }

    #[test]
    fn assume_blocks_nonmatching_runs() {
        let src = "void main(){ int a = input(); assume(a > 3); a = a + 1; }";
        let (r1, _, _) = run(src, vec![10]);
        assert_eq!(r1.halt, HaltReason::Completed);
        let (r2, _, _) = run(src, vec![0]);
        assert_eq!(r2.halt, HaltReason::AssumeFailed);
    }

    #[test]
    fn uninitialized_reads_draw_inputs() {
        let (r, _, _) = run("void main(){ int a; int b; b = a + 1; }", vec![41]);
        assert_eq!(r.halt, HaltReason::Completed);
        assert_eq!(r.inputs_drawn, 1);
    }
}
