//! Canonical program: the shared instruction-counter model.
//!
//! Built from an elected control-flow graph by the default recipe: discard
//! internal labels, mark call edges and edges with branching heads, and label
//! each node with the union of its out-edges' back-mapped token indices.
//! Node and edge identities are carried over from the input graph, so when
//! the elected graph is also a client's internal representation the mapping
//! between the two is the identity.
//!
//! A context is a list of canonical edges drawn from a filter; coupled with a
//! node it denotes the entry-anchored program paths whose filter projection
//! equals the list. Translation in and out of internal representations goes
//! through a (possibly partial) node mapping; edges touching unmapped nodes
//! are removed, which can only enlarge the denoted path set.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::lang::cfg::{EdgeId, InternalCfg, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeKind {
    Plain,
    Call,
    Branching,
}

impl EdgeKind {
    pub fn letter(self) -> char {
        match self {
            EdgeKind::Plain => 'P',
            EdgeKind::Call => 'C',
            EdgeKind::Branching => 'B',
        }
    }
}

/// Subset of the communicable edge kinds {call, branching}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Filter {
    pub call: bool,
    pub branching: bool,
}

impl Filter {
    pub const NONE: Filter = Filter {
        call: false,
        branching: false,
    };
    pub const CALL: Filter = Filter {
        call: true,
        branching: false,
    };
    pub const BRANCHING: Filter = Filter {
        call: false,
        branching: true,
    };
    pub const BOTH: Filter = Filter {
        call: true,
        branching: true,
    };

    pub fn admits(self, kind: EdgeKind) -> bool {
        match kind {
            EdgeKind::Call => self.call,
            EdgeKind::Branching => self.branching,
            EdgeKind::Plain => false,
        }
    }

    pub fn intersect(self, other: Filter) -> Filter {
        Filter {
            call: self.call && other.call,
            branching: self.branching && other.branching,
        }
    }
}

/// A list of canonical edges, each of a kind admitted by the filter.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Context {
    pub edges: Vec<EdgeId>,
    pub filter: Filter,
}

impl Context {
    pub fn empty(filter: Filter) -> Context {
        Context {
            edges: Vec::new(),
            filter,
        }
    }

    pub fn new(edges: Vec<EdgeId>, filter: Filter) -> Context {
        Context { edges, filter }
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, e) in self.edges.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "]")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonEdge {
    pub id: EdgeId,
    pub head: NodeId,
    pub tail: NodeId,
    pub kind: EdgeKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvariantViolation(pub String);

impl fmt::Display for InvariantViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "canonical-program invariant violation: {}", self.0)
    }
}

impl std::error::Error for InvariantViolation {}

#[derive(Clone, Debug)]
pub struct CanonicalProgram {
    pub num_nodes: u32,
    pub labels: Vec<BTreeSet<u32>>,
    pub edges: Vec<CanonEdge>,
    pub entry: NodeId,
    /// For call edges: the entry node of the called component, used by the
    /// path semantics.
    pub call_target: BTreeMap<EdgeId, NodeId>,
    out_adj: Vec<Vec<EdgeId>>,
    in_adj: Vec<Vec<EdgeId>>,
    line_node: BTreeMap<u32, NodeId>,
}

impl CanonicalProgram {
    pub fn edge(&self, id: EdgeId) -> &CanonEdge {
        &self.edges[id.0 as usize]
    }

    pub fn label(&self, n: NodeId) -> &BTreeSet<u32> {
        &self.labels[n.0 as usize]
    }

    pub fn out_edges(&self, n: NodeId) -> &[EdgeId] {
        &self.out_adj[n.0 as usize]
    }

    pub fn in_degree(&self, n: NodeId) -> usize {
        self.in_adj[n.0 as usize].len()
    }

    pub fn out_degree(&self, n: NodeId) -> usize {
        self.out_adj[n.0 as usize].len()
    }

    pub fn is_exit(&self, n: NodeId) -> bool {
        self.out_degree(n) == 0
    }

    /// The node whose label contains the given token index, if any. Labels
    /// partition token indices, so this is unique.
    pub fn node_of_line(&self, line: u32) -> Option<NodeId> {
        self.line_node.get(&line).copied()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.num_nodes).map(NodeId)
    }

    /// `N <id> {indices}` per node, `E <id> <head> <tail> <P|C|B>` per edge.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for n in self.nodes() {
            let lines: Vec<String> = self.label(n).iter().map(|l| l.to_string()).collect();
            s.push_str(&format!("N {} {{{}}}\n", n, lines.join(",")));
        }
        for e in &self.edges {
            s.push_str(&format!(
                "E {} {} {} {}\n",
                e.id,
                e.head,
                e.tail,
                e.kind.letter()
            ));
        }
        s
    }
}

/// The default recipe: keep the graph, assign call/branching kinds, label
/// nodes with the union of their out-edges' line sets.
pub fn build_canonical(cfg: &InternalCfg) -> Result<CanonicalProgram, InvariantViolation> {
    cfg.validate().map_err(InvariantViolation)?;
    let num_nodes = cfg.num_nodes;
    let mut labels = vec![BTreeSet::new(); num_nodes as usize];
    let mut edges = Vec::with_capacity(cfg.edges.len());
    let mut call_target = BTreeMap::new();
    for e in &cfg.edges {
        let kind = if cfg.calls.contains(&e.id) {
            if let Some(entry) = cfg.callee_entry(e.id) {
                call_target.insert(e.id, entry);
            }
            EdgeKind::Call
        } else if cfg.out_degree(e.head) > 1 {
            EdgeKind::Branching
        } else {
            EdgeKind::Plain
        };
        labels[e.head.0 as usize].extend(e.lines.iter().copied());
        edges.push(CanonEdge {
            id: e.id,
            head: e.head,
            tail: e.tail,
            kind,
        });
    }
    let mut out_adj = vec![Vec::new(); num_nodes as usize];
    let mut in_adj = vec![Vec::new(); num_nodes as usize];
    for e in &edges {
        out_adj[e.head.0 as usize].push(e.id);
        in_adj[e.tail.0 as usize].push(e.id);
    }
    let mut line_node = BTreeMap::new();
    for (i, lab) in labels.iter().enumerate() {
        for l in lab {
            if line_node.insert(*l, NodeId(i as u32)).is_some() {
                return Err(InvariantViolation(format!(
                    "token {l} labels two canonical nodes"
                )));
            }
        }
    }
    for n in 0..num_nodes {
        if out_adj[n as usize].is_empty() && !labels[n as usize].is_empty() {
            return Err(InvariantViolation(format!(
                "exit node {n} has a non-empty label"
            )));
        }
    }
    Ok(CanonicalProgram {
        num_nodes,
        labels,
        edges,
        entry: cfg.main().entry,
        call_target,
        out_adj,
        in_adj,
        line_node,
    })
}

/// Partial bidirectional relation between canonical and internal nodes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NodeMapping {
    pub pairs: BTreeSet<(NodeId, NodeId)>,
}

impl NodeMapping {
    pub fn link(&mut self, canon: NodeId, internal: NodeId) -> bool {
        self.pairs.insert((canon, internal))
    }

    pub fn internal_of(&self, canon: NodeId) -> Vec<NodeId> {
        self.pairs
            .iter()
            .filter(|(c, _)| *c == canon)
            .map(|(_, i)| *i)
            .collect()
    }

    pub fn canon_of(&self, internal: NodeId) -> Vec<NodeId> {
        self.pairs
            .iter()
            .filter(|(_, i)| *i == internal)
            .map(|(c, _)| *c)
            .collect()
    }

    pub fn canon_mapped(&self, canon: NodeId) -> bool {
        self.pairs.iter().any(|(c, _)| *c == canon)
    }

    pub fn internal_mapped(&self, internal: NodeId) -> bool {
        self.pairs.iter().any(|(_, i)| *i == internal)
    }
}

/// The mapping when the canonical program was built from this very graph:
/// every node links to itself.
pub fn identity_mapping(canon: &CanonicalProgram) -> NodeMapping {
    let mut m = NodeMapping::default();
    for n in canon.nodes() {
        m.link(n, n);
    }
    m
}

/// Default recipe for mapping construction, applied to a fixpoint:
///
/// For an internal edge (h,t) carrying a line contained in the label of
/// canonical node n,
/// 1. if both n and h have in-degree zero, link h with n;
/// 2. if t is an exit node and n has a successor with empty label and
///    out-degree zero, link t with that successor;
/// 3. if all successor edges of t carry lines and all of them fall in the
///    label of a single successor n' != n of n, link t with n'.
pub fn build_mapping(canon: &CanonicalProgram, internal: &InternalCfg) -> NodeMapping {
    let mut m = NodeMapping::default();
    loop {
        let mut changed = false;
        for e in &internal.edges {
            for line in &e.lines {
                let n = match canon.node_of_line(*line) {
                    Some(n) => n,
                    None => continue,
                };
                // case 1
                if canon.in_degree(n) == 0 && internal.in_degree(e.head) == 0 {
                    changed |= m.link(n, e.head);
                }
                // case 2
                if internal.out_degree(e.tail) == 0 {
                    let exits: Vec<NodeId> = canon
                        .out_edges(n)
                        .iter()
                        .map(|x| canon.edge(*x).tail)
                        .filter(|s| canon.label(*s).is_empty() && canon.out_degree(*s) == 0)
                        .collect();
                    if let [succ] = exits.as_slice() {
                        changed |= m.link(*succ, e.tail);
                    }
                }
                // case 3
                let succ_edges = internal.out_edges(e.tail);
                if !succ_edges.is_empty()
                    && succ_edges
                        .iter()
                        .all(|x| !internal.edge(*x).lines.is_empty())
                {
                    let mut union: BTreeSet<u32> = BTreeSet::new();
                    for x in succ_edges {
                        union.extend(internal.edge(*x).lines.iter().copied());
                    }
                    let mut candidates: Vec<NodeId> = canon
                        .out_edges(n)
                        .iter()
                        .map(|x| canon.edge(*x).tail)
                        .filter(|s| union.iter().all(|l| canon.label(*s).contains(l)))
                        .collect();
                    candidates.sort();
                    candidates.dedup();
                    if let [cand] = candidates.as_slice() {
                        if *cand != n {
                            changed |= m.link(*cand, e.tail);
                        }
                    }
                }
            }
        }
        if !changed {
            return m;
        }
    }
}

/// Removes every edge whose kind falls outside the intersection of the
/// context's construction filter and the given filter.
pub fn reduce_context(ctx: &Context, filter: Filter, canon: &CanonicalProgram) -> Context {
    let eff = ctx.filter.intersect(filter);
    Context {
        edges: ctx
            .edges
            .iter()
            .copied()
            .filter(|e| eff.admits(canon.edge(*e).kind))
            .collect(),
        filter: eff,
    }
}

fn simple_paths(internal: &InternalCfg, from: NodeId, to: NodeId, cap: usize) -> Vec<Vec<EdgeId>> {
    if from == to {
        return vec![Vec::new()];
    }
    let mut found = Vec::new();
    let mut path: Vec<EdgeId> = Vec::new();
    let mut visited: BTreeSet<NodeId> = [from].into_iter().collect();
    fn go(
        internal: &InternalCfg,
        cur: NodeId,
        to: NodeId,
        cap: usize,
        path: &mut Vec<EdgeId>,
        visited: &mut BTreeSet<NodeId>,
        found: &mut Vec<Vec<EdgeId>>,
    ) {
        if found.len() > cap {
            return;
        }
        for eid in internal.out_edges(cur) {
            let t = internal.edge(*eid).tail;
            if t == to {
                let mut p = path.clone();
                p.push(*eid);
                found.push(p);
                continue;
            }
            if visited.contains(&t) {
                continue;
            }
            visited.insert(t);
            path.push(*eid);
            go(internal, t, to, cap, path, visited, found);
            path.pop();
            visited.remove(&t);
        }
    }
    go(internal, from, to, cap, &mut path, &mut visited, &mut found);
    found
}

/// Translates one canonical edge to an internal edge sequence. The image
/// must be unique — exactly one linked endpoint pair connected by exactly
/// one simple path — otherwise the edge is dropped as untranslatable.
fn edge_image(
    e: &CanonEdge,
    mapping: &NodeMapping,
    internal: &InternalCfg,
) -> Option<Vec<EdgeId>> {
    let heads = mapping.internal_of(e.head);
    let tails = mapping.internal_of(e.tail);
    if heads.is_empty() || tails.is_empty() {
        return None;
    }
    let mut images: Vec<Vec<EdgeId>> = Vec::new();
    for h in &heads {
        for t in &tails {
            let mut ps = simple_paths(internal, *h, *t, 2);
            if ps.len() == 1 {
                images.push(ps.pop().unwrap());
            } else if ps.len() > 1 {
                return None; // ambiguous within one endpoint pair
            }
        }
    }
    if images.len() == 1 {
        images.pop()
    } else {
        None
    }
}

/// Translates a node/context pair into the internal representation: one
/// result per internal node linked to the canonical node, each with the
/// translated path constraint. Context edges with unmapped endpoints are
/// removed first (the mandated reduction); untranslatable edges are dropped.
pub fn translate_context_to_internal(
    node: NodeId,
    ctx: &Context,
    mapping: &NodeMapping,
    canon: &CanonicalProgram,
    internal: &InternalCfg,
) -> Vec<(NodeId, Vec<EdgeId>)> {
    let kept: Vec<&CanonEdge> = ctx
        .edges
        .iter()
        .map(|e| canon.edge(*e))
        .filter(|e| mapping.canon_mapped(e.head) && mapping.canon_mapped(e.tail))
        .collect();
    let mut constraint = Vec::new();
    for e in kept {
        if let Some(img) = edge_image(e, mapping, internal) {
            constraint.extend(img);
        }
    }
    mapping
        .internal_of(node)
        .into_iter()
        .map(|i| (i, constraint.clone()))
        .collect()
}

/// Translates an internal path (a list of internal edges from an entry node)
/// into a canonical context for the given filter. Edges whose endpoints lack
/// links are skipped, as are edges translating to kinds outside the filter.
/// A call edge needs only its head link: it translates to the unique
/// canonical call edge leaving the linked node.
pub fn translate_path_to_context(
    path: &[EdgeId],
    mapping: &NodeMapping,
    canon: &CanonicalProgram,
    internal: &InternalCfg,
    filter: Filter,
) -> Context {
    let mut out = Vec::new();
    for eid in path {
        let e = internal.edge(*eid);
        let heads = mapping.canon_of(e.head);
        if heads.is_empty() {
            continue;
        }
        if internal.calls.contains(eid) {
            let mut calls: Vec<EdgeId> = heads
                .iter()
                .flat_map(|h| canon.out_edges(*h).iter().copied())
                .filter(|c| canon.edge(*c).kind == EdgeKind::Call)
                .collect();
            calls.sort();
            calls.dedup();
            if let [c] = calls.as_slice() {
                if filter.admits(EdgeKind::Call) {
                    out.push(*c);
                }
            }
            continue;
        }
        let tails = mapping.canon_of(e.tail);
        if tails.is_empty() {
            continue;
        }
        let mut cands: Vec<EdgeId> = heads
            .iter()
            .flat_map(|h| canon.out_edges(*h).iter().copied())
            .filter(|c| tails.contains(&canon.edge(*c).tail))
            .collect();
        cands.sort();
        cands.dedup();
        if let [c] = cands.as_slice() {
            if filter.admits(canon.edge(*c).kind) {
                out.push(*c);
            }
        }
    }
    Context {
        edges: out,
        filter,
    }
}

/// Filter projection of a canonical path.
pub fn project_path(path: &[EdgeId], canon: &CanonicalProgram, filter: Filter) -> Vec<EdgeId> {
    path.iter()
        .copied()
        .filter(|e| filter.admits(canon.edge(*e).kind))
        .collect()
}

/// Test oracle: all entry-anchored canonical paths of length <= bound ending
/// at `node` whose filter projection equals the context. Path semantics
/// descend into the called component at a call edge and resume at the edge's
/// tail when the component's exit is reached.
pub fn represented_paths(
    node: NodeId,
    ctx: &Context,
    canon: &CanonicalProgram,
    bound: usize,
) -> BTreeSet<Vec<EdgeId>> {
    let mut out = BTreeSet::new();
    let mut path: Vec<EdgeId> = Vec::new();
    let mut proj: Vec<EdgeId> = Vec::new();
    fn go(
        canon: &CanonicalProgram,
        cur: NodeId,
        stack: &mut Vec<NodeId>,
        node: NodeId,
        ctx: &Context,
        bound: usize,
        path: &mut Vec<EdgeId>,
        proj: &mut Vec<EdgeId>,
        out: &mut BTreeSet<Vec<EdgeId>>,
    ) {
        if cur == node && proj.as_slice() == ctx.edges.as_slice() {
            out.insert(path.clone());
        }
        if canon.is_exit(cur) {
            if let Some(ret) = stack.pop() {
                go(canon, ret, stack, node, ctx, bound, path, proj, out);
                stack.push(ret);
            }
            return;
        }
        if path.len() == bound {
            return;
        }
        for eid in canon.out_edges(cur) {
            let e = canon.edge(*eid);
            let admitted = ctx.filter.admits(e.kind);
            // an admitted edge must extend the projection along the context
            if admitted
                && (proj.len() >= ctx.edges.len() || ctx.edges[proj.len()] != *eid)
            {
                continue;
            }
            path.push(*eid);
            if admitted {
                proj.push(*eid);
            }
            if e.kind == EdgeKind::Call {
                if let Some(target) = canon.call_target.get(eid) {
                    stack.push(e.tail);
                    go(canon, *target, stack, node, ctx, bound, path, proj, out);
                    stack.pop();
                } else {
                    go(canon, e.tail, stack, node, ctx, bound, path, proj, out);
                }
            } else {
                go(canon, e.tail, stack, node, ctx, bound, path, proj, out);
            }
            if admitted {
                proj.pop();
            }
            path.pop();
        }
    }
    let mut stack = Vec::new();
    go(
        canon, canon.entry, &mut stack, node, ctx, bound, &mut path, &mut proj, &mut out,
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::frontend;

    fn canon_of(src: &str) -> (CanonicalProgram, InternalCfg) {
        let (_, cfg) = frontend(src).unwrap();
        let canon = build_canonical(&cfg).unwrap();
        (canon, cfg)
    }

    #[test]
    fn straight_line_labels() {
        // a=0;b=1; style program: labels {7,8,9}, {12,13,14}, exit empty
        let (canon, _) = canon_of("void main(){ int a = 0; int b = 1; }");
        let mut labels: Vec<Vec<u32>> = canon
            .labels
            .iter()
            .map(|s| s.iter().copied().collect())
            .collect();
        labels.sort();
        assert!(labels.contains(&vec![]));
        assert!(labels.contains(&vec![7, 8, 9]));
        assert!(labels.contains(&vec![12, 13, 14]));
    }

    #[test]
    fn empty_body_single_node() {
        let (canon, _) = canon_of("void main(){}");
        assert_eq!(canon.num_nodes, 1);
        assert!(canon.label(canon.entry).is_empty());
        assert!(canon.is_exit(canon.entry));
    }

    #[test]
    fn branching_kinds_at_condition_node() {
        let (canon, _) =
            canon_of("void main(){ int a = input(); int b; if (a > 0) { b = 1; } else { b = 2; } }");
        let branching = canon
            .edges
            .iter()
            .filter(|e| e.kind == EdgeKind::Branching)
            .count();
        assert_eq!(branching, 2);
    }

    #[test]
    fn label_partition_matches_edge_lines() {
        let src = "int f(int n){ if (n < 1) { return 0; } return f(n - 1); } \
                   void main(){ int r; r = f(3); }";
        let (canon, cfg) = canon_of(src);
        let mut from_labels: BTreeSet<u32> = BTreeSet::new();
        for l in &canon.labels {
            from_labels.extend(l.iter().copied());
        }
        let mut from_edges: BTreeSet<u32> = BTreeSet::new();
        for e in &cfg.edges {
            from_edges.extend(e.lines.iter().copied());
        }
        assert_eq!(from_labels, from_edges);
    }

    #[test]
    fn recipe_is_deterministic() {
        let src = "void main(){ int i = 0; while (i < 4) { i = i + 1; } }";
        let (c1, _) = canon_of(src);
        let (c2, _) = canon_of(src);
        assert_eq!(c1.labels, c2.labels);
        assert_eq!(c1.edges, c2.edges);
        assert_eq!(c1.dump(), c2.dump());
    }

    #[test]
    fn identity_mapping_links_everything() {
        let (canon, cfg) = canon_of("void main(){ int a = 0; if (a < 1) { a = 2; } }");
        let m = identity_mapping(&canon);
        for n in canon.nodes() {
            assert_eq!(m.internal_of(n), vec![n]);
        }
        // and the recipe itself links entry by case 1 on the same graph
        let rec = build_mapping(&canon, &cfg);
        assert!(rec.pairs.contains(&(cfg.main().entry, cfg.main().entry)));
    }

    #[test]
    fn reduce_keeps_order_and_is_idempotent() {
        let src = "int f(int n){ if (n < 1) { return 0; } return f(n - 1); } \
                   void main(){ int r; r = f(3); }";
        let (canon, _) = canon_of(src);
        let call = canon
            .edges
            .iter()
            .find(|e| e.kind == EdgeKind::Call)
            .unwrap()
            .id;
        let branch: Vec<EdgeId> = canon
            .edges
            .iter()
            .filter(|e| e.kind == EdgeKind::Branching)
            .map(|e| e.id)
            .collect();
        let ctx = Context::new(
            vec![branch[0], call, branch[1], call],
            Filter::BOTH,
        );
        let r = reduce_context(&ctx, Filter::CALL, &canon);
        assert_eq!(r.edges, vec![call, call]);
        assert_eq!(r.filter, Filter::CALL);
        let rr = reduce_context(&r, Filter::CALL, &canon);
        assert_eq!(rr, r);
        // identity when the filter matches
        let same = reduce_context(&ctx, Filter::BOTH, &canon);
        assert_eq!(same, ctx);
        // empty intersection drops everything
        let none = reduce_context(
            &Context::new(vec![call, call], Filter::CALL),
            Filter::BRANCHING,
            &canon,
        );
        assert!(none.edges.is_empty());
    }

    #[test]
    fn empty_context_represents_all_paths() {
        let (canon, _) = canon_of("void main(){ int a = input(); int b; if (a > 0) { b = 1; } else { b = 2; } }");
        // find the join node (the exit here)
        let exit = canon.nodes().find(|n| canon.is_exit(*n)).unwrap();
        let all = represented_paths(exit, &Context::empty(Filter::NONE), &canon, 6);
        assert_eq!(all.len(), 2, "two arms of the diamond");
        // a context naming one forced branch picks out one path
        let branch = canon
            .edges
            .iter()
            .filter(|e| e.kind == EdgeKind::Branching)
            .map(|e| e.id)
            .next()
            .unwrap();
        let one = represented_paths(
            exit,
            &Context::new(vec![branch], Filter::BRANCHING),
            &canon,
            6,
        );
        assert_eq!(one.len(), 1);
        assert!(one.iter().next().unwrap().contains(&branch));
        // inconsistent context: empty set
        let none = represented_paths(
            exit,
            &Context::new(vec![branch, branch], Filter::BRANCHING),
            &canon,
            6,
        );
        assert!(none.is_empty());
    }

    #[test]
    fn reduction_enlarges_represented_paths() {
        let src = "void main(){ int a = input(); int b = 0; if (a > 0) { b = 1; } if (b < 1) { a = 2; } }";
        let (canon, _) = canon_of(src);
        let exit = canon.nodes().find(|n| canon.is_exit(*n)).unwrap();
        let branch: Vec<EdgeId> = canon
            .edges
            .iter()
            .filter(|e| e.kind == EdgeKind::Branching)
            .map(|e| e.id)
            .collect();
        let ctx = Context::new(vec![branch[0], branch[2]], Filter::BRANCHING);
        let reduced = reduce_context(&ctx, Filter::NONE, &canon);
        let before = represented_paths(exit, &ctx, &canon, 10);
        let after = represented_paths(exit, &reduced, &canon, 10);
        assert!(after.is_superset(&before));
        assert!(after.len() >= before.len());
    }

    #[test]
    fn path_translation_respects_projection_on_identity_mapping() {
        let src = "void main(){ int i = 0; while (i < 3) { i = i + 1; } }";
        let (canon, cfg) = canon_of(src);
        let m = identity_mapping(&canon);
        let exitn = canon.nodes().find(|n| canon.is_exit(*n)).unwrap();
        for p in represented_paths(exitn, &Context::empty(Filter::NONE), &canon, 12) {
            let ctx = translate_path_to_context(&p, &m, &canon, &cfg, Filter::BOTH);
            assert_eq!(ctx.edges, project_path(&p, &canon, Filter::BOTH));
        }
    }
}
