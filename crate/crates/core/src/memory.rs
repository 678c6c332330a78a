//! Canonical memory: a shared segment-offset address model.
//!
//! Every memory-referencing identifier of the analysed program (function
//! names, parameters, locals) gets a segment. Segment 0 is reserved for the
//! invalid address (the null pointer). Heap objects get segments above the
//! identifier range, keyed by allocation edge and reduced call context so
//! that all parties name the same object the same way within a run.

use std::collections::BTreeMap;
use std::fmt;

use crate::canon::Context;
use crate::formula::Term;
use crate::lang::cfg::EdgeId;
use crate::lang::MiniImpProgram;

/// Type interpretation of a byte sequence at a segment/offset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ValueType {
    I8,
    I16,
    I32,
    I64,
    U8,
    U16,
    U32,
    U64,
    F32,
    F64,
    Seg,
    Off,
}

impl ValueType {
    pub fn name(self) -> &'static str {
        match self {
            ValueType::I8 => "i8",
            ValueType::I16 => "i16",
            ValueType::I32 => "i32",
            ValueType::I64 => "i64",
            ValueType::U8 => "u8",
            ValueType::U16 => "u16",
            ValueType::U32 => "u32",
            ValueType::U64 => "u64",
            ValueType::F32 => "f32",
            ValueType::F64 => "f64",
            ValueType::Seg => "seg",
            ValueType::Off => "off",
        }
    }

    pub fn from_name(s: &str) -> Option<ValueType> {
        Some(match s {
            "i8" => ValueType::I8,
            "i16" => ValueType::I16,
            "i32" => ValueType::I32,
            "i64" => ValueType::I64,
            "u8" => ValueType::U8,
            "u16" => ValueType::U16,
            "u32" => ValueType::U32,
            "u64" => ValueType::U64,
            "f32" => ValueType::F32,
            "f64" => ValueType::F64,
            "seg" => ValueType::Seg,
            "off" => ValueType::Off,
            _ => return None,
        })
    }

    /// Signed integer types; the only ones MiniImp produces arithmetic on.
    pub fn is_signed_int(self) -> bool {
        matches!(
            self,
            ValueType::I8 | ValueType::I16 | ValueType::I32 | ValueType::I64
        )
    }
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Segment expression of a dereference: a constant segment or a nested
/// seg-typed dereference.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SegExpr {
    Const(u32),
    Deref(Box<Dereference>),
}

/// A typed memory read: segment expression, offset expression, type.
///
/// `basic` when neither sub-expression nests another dereference; basic
/// dereferences denote values of program identifiers directly.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Dereference {
    pub seg: SegExpr,
    pub off: Term,
    pub vtype: ValueType,
}

impl Dereference {
    /// The dereference `(DEREF_vtype segment 0)` of an identifier's own cell.
    pub fn basic_var(segment: u32, vtype: ValueType) -> Dereference {
        Dereference {
            seg: SegExpr::Const(segment),
            off: Term::Const(0),
            vtype,
        }
    }

    pub fn at(segment: u32, offset: i64, vtype: ValueType) -> Dereference {
        Dereference {
            seg: SegExpr::Const(segment),
            off: Term::Const(offset),
            vtype,
        }
    }

    pub fn is_basic(&self) -> bool {
        matches!(self.seg, SegExpr::Const(_)) && !self.off.contains_deref()
    }

    /// Constant segment if the segment expression is not nested.
    pub fn const_seg(&self) -> Option<u32> {
        match self.seg {
            SegExpr::Const(s) => Some(s),
            SegExpr::Deref(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MemoryError {
    UnknownIdentifier(String),
    TypeMismatch(String),
}

impl fmt::Display for MemoryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MemoryError::UnknownIdentifier(n) => write!(f, "unknown identifier `{n}`"),
            MemoryError::TypeMismatch(m) => write!(f, "type mismatch: {m}"),
        }
    }
}

impl std::error::Error for MemoryError {}

/// Ordered identifier-to-segment table. Segments are dense starting at 1;
/// segment 0 stays reserved for the invalid address.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentTable {
    entries: Vec<String>,
    index: BTreeMap<String, u32>,
}

impl SegmentTable {
    pub fn from_names(names: Vec<String>) -> SegmentTable {
        let mut index = BTreeMap::new();
        for (i, n) in names.iter().enumerate() {
            index.insert(n.clone(), (i + 1) as u32);
        }
        SegmentTable {
            entries: names,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn segment_of(&self, qualified: &str) -> Option<u32> {
        self.index.get(qualified).copied()
    }

    pub fn name_of(&self, segment: u32) -> Option<&str> {
        if segment == 0 {
            return None;
        }
        self.entries.get(segment as usize - 1).map(|s| s.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), (i + 1) as u32))
    }

    /// First segment number above the identifier range; heap segments are
    /// handed out from here.
    pub fn heap_base(&self) -> u32 {
        self.entries.len() as u32 + 1
    }
}

/// Builds the identifier-to-segment table for a parsed program.
///
/// Identifiers are ordered by their declaration token indices; synthetic
/// return slots (no token of their own) follow, in function order.
pub fn build_segment_table(program: &MiniImpProgram) -> SegmentTable {
    let mut names: Vec<String> = program
        .identifier_list
        .iter()
        .map(|d| d.qualified.clone())
        .collect();
    for f in &program.functions {
        if f.ret_slot_needed() {
            names.push(crate::lang::ret_slot_name(&f.name));
        }
    }
    SegmentTable::from_names(names)
}

/// The dereference denoting an identifier's own memory.
pub fn basic_deref(
    qualified: &str,
    table: &SegmentTable,
    vtype: ValueType,
) -> Result<Dereference, MemoryError> {
    let seg = table
        .segment_of(qualified)
        .ok_or_else(|| MemoryError::UnknownIdentifier(qualified.to_string()))?;
    Ok(Dereference::basic_var(seg, vtype))
}

/// Nests a seg/off pair of dereferences into a new dereference, adding a
/// constant or symbolic offset.
pub fn nest(
    seg_part: Dereference,
    off_part: Dereference,
    offset_add: Term,
    vtype: ValueType,
) -> Result<Dereference, MemoryError> {
    if seg_part.vtype != ValueType::Seg {
        return Err(MemoryError::TypeMismatch(format!(
            "segment part has type {}, expected seg",
            seg_part.vtype
        )));
    }
    if off_part.vtype != ValueType::Off {
        return Err(MemoryError::TypeMismatch(format!(
            "offset part has type {}, expected off",
            off_part.vtype
        )));
    }
    let off_term = Term::Deref(Box::new(off_part));
    let off = if offset_add == Term::Const(0) {
        off_term
    } else {
        Term::Add(vec![off_term, offset_add])
    };
    Ok(Dereference {
        seg: SegExpr::Deref(Box::new(seg_part)),
        off,
        vtype,
    })
}

/// Deterministic registry of heap segments.
///
/// Allocations performed along the same edge under the same reduced call
/// context are indistinguishable and share a segment. Numbers are assigned
/// on first use, above the identifier range.
#[derive(Clone, Debug, Default)]
pub struct HeapRegistry {
    base: u32,
    map: BTreeMap<(EdgeId, Vec<EdgeId>), u32>,
}

impl HeapRegistry {
    pub fn new(table: &SegmentTable) -> HeapRegistry {
        HeapRegistry {
            base: table.heap_base(),
            map: BTreeMap::new(),
        }
    }

    pub fn segment_for(&mut self, alloc_edge: EdgeId, reduced_ctx: &Context) -> u32 {
        let key = (alloc_edge, reduced_ctx.edges.clone());
        let next = self.base + self.map.len() as u32;
        *self.map.entry(key).or_insert(next)
    }

    pub fn is_heap_segment(&self, seg: u32) -> bool {
        seg >= self.base
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse, tokenize};

    fn table_for(src: &str) -> SegmentTable {
        let toks = tokenize(src).unwrap();
        let prog = parse(&toks).unwrap();
        build_segment_table(&prog)
    }

    #[test]
    fn segment_table_orders_by_token_index() {
        // Mirrors the two-function pointer example: function names and
        // qualified parameters interleave in token order.
        let src = "void foo(int** p) {} void main() { int* p; p = malloc(100); foo(&p); free(p); }";
        let t = table_for(src);
        assert_eq!(t.segment_of("foo"), Some(1));
        assert_eq!(t.segment_of("foo::p"), Some(2));
        assert_eq!(t.segment_of("main"), Some(3));
        assert_eq!(t.segment_of("main::p"), Some(4));
    }

    #[test]
    fn same_name_locals_get_distinct_segments() {
        let src = "void foo() { int p; p = 1; } void main() { int p; p = 2; }";
        let t = table_for(src);
        let a = t.segment_of("foo::p").unwrap();
        let b = t.segment_of("main::p").unwrap();
        assert_ne!(a, b);
        assert!(a < b);
    }

    #[test]
    fn program_without_variables_still_tables_functions() {
        let t = table_for("void main() {}");
        assert_eq!(t.segment_of("main"), Some(1));
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn basic_deref_of_pointer_parts() {
        let src = "void foo(int** p) {} void main() {}";
        let t = table_for(src);
        let d = basic_deref("foo::p", &t, ValueType::Seg).unwrap();
        assert_eq!(d, Dereference::basic_var(2, ValueType::Seg));
        let d = basic_deref("foo::p", &t, ValueType::Off).unwrap();
        assert_eq!(d.vtype, ValueType::Off);
        assert!(d.is_basic());
        assert!(matches!(
            basic_deref("nope", &t, ValueType::I32),
            Err(MemoryError::UnknownIdentifier(_))
        ));
    }

    #[test]
    fn nest_builds_fourth_array_element_read() {
        // Segment and offset of an address stored in a doubly-indirect
        // pointer, then a read 12 bytes into the pointed-to block.
        let seg_part = Dereference::basic_var(2, ValueType::Seg);
        let off_part = Dereference::basic_var(2, ValueType::Off);
        let d = nest(seg_part, off_part, Term::Const(12), ValueType::I32).unwrap();
        assert!(!d.is_basic());
        assert_eq!(d.vtype, ValueType::I32);
        match &d.seg {
            SegExpr::Deref(inner) => assert_eq!(inner.vtype, ValueType::Seg),
            SegExpr::Const(_) => panic!("expected nested segment"),
        }
    }

    #[test]
    fn nest_rejects_wrong_types() {
        let seg_part = Dereference::basic_var(2, ValueType::I32);
        let off_part = Dereference::basic_var(2, ValueType::Off);
        assert!(matches!(
            nest(seg_part, off_part, Term::Const(0), ValueType::I32),
            Err(MemoryError::TypeMismatch(_))
        ));
    }

    #[test]
    fn heap_registry_is_keyed_by_edge_and_context() {
        let t = SegmentTable::from_names(vec!["main".into(), "main::p".into()]);
        let mut reg = HeapRegistry::new(&t);
        let ctx = Context::empty(crate::canon::Filter::CALL);
        let s1 = reg.segment_for(EdgeId(3), &ctx);
        let s2 = reg.segment_for(EdgeId(3), &ctx);
        let s3 = reg.segment_for(EdgeId(4), &ctx);
        assert_eq!(s1, s2);
        assert_ne!(s1, s3);
        assert_eq!(s1, t.heap_base());
        assert!(reg.is_heap_segment(s1));
    }
}
