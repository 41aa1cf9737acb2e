//! The ground chain: the automaton observed only at empty stack.
//!
//! Outputs happen only at empty stack, and an excursion that never
//! re-empties the stack produces nothing further. Between two ground visits
//! the outcome depends only on the excursion head, so the qualitative
//! behaviour of outputs is that of a finite chain over ground states plus
//! a divergence sink.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use petgraph::graph::{DiGraph, NodeIndex};

use crate::eqsys::{EqSystem, Head, HeadClass, Var};
use crate::ppda::{Ppda, StackOp, StateId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    State(StateId),
    /// The stack never empties again.
    Diverge,
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::State(q) => write!(f, "q{q}"),
            Node::Diverge => f.write_str("D"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ReturnClass {
    AlmostSure,
    Sub,
    Unknown,
}

impl From<&HeadClass> for ReturnClass {
    fn from(c: &HeadClass) -> Self {
        match c {
            HeadClass::AlmostSureReturn => ReturnClass::AlmostSure,
            HeadClass::SubReturn(_) => ReturnClass::Sub,
            HeadClass::Unknown { .. } => ReturnClass::Unknown,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Provenance {
    /// A single transition at empty stack.
    Direct,
    /// An excursion from `head` that returns.
    ExcursionReturn { head: Head, class: ReturnClass },
    /// An excursion from `head` that may never return. `certain` is false
    /// when the head is unclassified.
    Divergence { head: Head, certain: bool },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub from: Node,
    pub to: Node,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundChain {
    /// Ground states reachable from the initial state, sorted.
    pub nodes: Vec<StateId>,
    pub edges: Vec<Edge>,
    pub output_nodes: Vec<StateId>,
    pub initial: StateId,
}

impl GroundChain {
    pub fn successors(&self, n: Node) -> BTreeSet<Node> {
        self.edges.iter().filter(|e| e.from == n).map(|e| e.to).collect()
    }
}

fn out_edges(p: &Ppda, s: &EqSystem, classes: &BTreeMap<Head, HeadClass>, q: StateId) -> Vec<Edge> {
    let from = Node::State(q);
    let mut edges = Vec::new();
    for m in p.row(q, None) {
        match m.op {
            StackOp::Push(symbol) => {
                let head = Head { state: m.next, symbol };
                let class = classes.get(&head).map_or(ReturnClass::Unknown, ReturnClass::from);
                for exit in 0..p.states().len() {
                    if s.find(Var { state: m.next, symbol, exit }).is_some() {
                        let provenance = Provenance::ExcursionReturn { head, class };
                        edges.push(Edge { from, to: Node::State(exit), provenance });
                    }
                }
                if class != ReturnClass::AlmostSure {
                    let provenance =
                        Provenance::Divergence { head, certain: class == ReturnClass::Sub };
                    edges.push(Edge { from, to: Node::Diverge, provenance });
                }
            }
            StackOp::Keep | StackOp::Pop => {
                edges.push(Edge { from, to: Node::State(m.next), provenance: Provenance::Direct });
            }
        }
    }
    edges.sort_by_key(|e| (e.to, e.provenance));
    edges.dedup();
    edges
}

/// Builds the ground chain of `p` from its cleaned system `s` and the head
/// classes of `s`. Only states reachable from the initial state are kept.
pub fn ground_chain(p: &Ppda, s: &EqSystem, classes: &BTreeMap<Head, HeadClass>) -> GroundChain {
    let initial = p.initial().state;
    let mut seen = BTreeSet::from([initial]);
    let mut queue = VecDeque::from([initial]);
    let mut edges = Vec::new();
    while let Some(q) = queue.pop_front() {
        for e in out_edges(p, s, classes, q) {
            if let Node::State(r) = e.to {
                if seen.insert(r) {
                    queue.push_back(r);
                }
            }
            edges.push(e);
        }
    }
    let nodes: Vec<StateId> = seen.into_iter().collect();
    let output_nodes = nodes.iter().copied().filter(|&q| p.is_constructor_state(q)).collect();
    GroundChain { nodes, edges, output_nodes, initial }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuchiVerdict {
    AlmostSure,
    NotAlmostSure,
    Unknown,
}

/// Reachable bottom components of one reading of the chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphSummary {
    pub bottom_sccs: Vec<Vec<Node>>,
    pub diverge_reachable: bool,
    /// Some reachable bottom component (the sink counts) has no output.
    pub silent_bottom: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuchiAnalysis {
    pub verdict: BuchiVerdict,
    /// Unknown heads treated as returning.
    pub optimistic: GraphSummary,
    /// Unknown heads treated as possibly diverging.
    pub pessimistic: GraphSummary,
}

fn summarize(g: &GroundChain, keep: impl Fn(&Edge) -> bool) -> GraphSummary {
    let mut graph = DiGraph::<Node, ()>::new();
    let mut index: BTreeMap<Node, NodeIndex> = BTreeMap::new();
    let mut reach = BTreeSet::from([Node::State(g.initial)]);
    let mut queue = VecDeque::from([Node::State(g.initial)]);
    while let Some(n) = queue.pop_front() {
        for e in g.edges.iter().filter(|e| e.from == n && keep(e)) {
            if reach.insert(e.to) {
                queue.push_back(e.to);
            }
        }
    }
    for &n in &reach {
        index.insert(n, graph.add_node(n));
    }
    for e in g.edges.iter().filter(|e| keep(e) && reach.contains(&e.from)) {
        graph.update_edge(index[&e.from], index[&e.to], ());
    }
    let outputs: BTreeSet<Node> = g.output_nodes.iter().map(|&q| Node::State(q)).collect();
    let mut bottom_sccs = Vec::new();
    let mut silent_bottom = false;
    for scc in petgraph::algo::tarjan_scc(&graph) {
        let members: BTreeSet<NodeIndex> = scc.iter().copied().collect();
        let closed = scc.iter().all(|&i| graph.neighbors(i).all(|j| members.contains(&j)));
        if closed {
            let mut nodes: Vec<Node> = scc.iter().map(|&i| graph[i]).collect();
            nodes.sort();
            silent_bottom |= !nodes.iter().any(|n| outputs.contains(n));
            bottom_sccs.push(nodes);
        }
    }
    bottom_sccs.sort();
    GraphSummary { bottom_sccs, diverge_reachable: reach.contains(&Node::Diverge), silent_bottom }
}

/// Qualitative check that the output nodes are visited infinitely often
/// with probability one, under both readings of unknown heads.
pub fn buchi_analysis(g: &GroundChain) -> BuchiAnalysis {
    let uncertain = |e: &Edge| matches!(e.provenance, Provenance::Divergence { certain: false, .. });
    let optimistic = summarize(g, |e| !uncertain(e));
    let pessimistic = summarize(g, |_| true);
    let verdict = if optimistic.silent_bottom {
        BuchiVerdict::NotAlmostSure
    } else if !pessimistic.silent_bottom {
        BuchiVerdict::AlmostSure
    } else {
        BuchiVerdict::Unknown
    };
    BuchiAnalysis { verdict, optimistic, pessimistic }
}

pub fn buchi_verdict(g: &GroundChain) -> BuchiVerdict {
    buchi_analysis(g).verdict
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eqsys::{build_system, classify_heads, clean, ClassifyConfig};
    use crate::ppda::{translate, Symbol};
    use crate::syntax::parse_file;

    fn chain(src: &str) -> (Ppda, GroundChain) {
        let p = translate(&parse_file(src).unwrap()[0]);
        let (s, _) = clean(&build_system(&p));
        let classes = classify_heads(&s, &ClassifyConfig::default());
        let g = ground_chain(&p, &s, &classes);
        (p, g)
    }

    fn named(p: &Ppda, name: &str) -> Node {
        Node::State((0..p.states().len()).find(|&i| p.state_name(i) == name).unwrap())
    }

    fn edge_set(g: &GroundChain) -> BTreeSet<(Node, Node)> {
        g.edges.iter().map(|e| (e.from, e.to)).collect()
    }

    #[test]
    fn fair_walk_chain() {
        let (p, g) = chain("stream s = a : s (+ 1/2) tail(s)");
        let [c, k, t, r] = ["a : s (+ 1/2) tail(s)", "a : s", "tail(s)", "s"].map(|n| named(&p, n));
        assert_eq!(g.nodes.len(), 4);
        let expected = BTreeSet::from([(c, k), (c, t), (k, r), (r, c), (t, r)]);
        assert_eq!(edge_set(&g), expected);
        let ret = g.edges.iter().find(|e| e.from == t).unwrap();
        assert!(matches!(
            ret.provenance,
            Provenance::ExcursionReturn { class: ReturnClass::AlmostSure, .. }
        ));
        assert_eq!(g.output_nodes.iter().map(|&q| Node::State(q)).collect::<Vec<_>>(), vec![k]);
        let a = buchi_analysis(&g);
        assert!(!a.pessimistic.diverge_reachable);
        assert_eq!(a.verdict, BuchiVerdict::AlmostSure);
    }

    #[test]
    fn biased_walk_reaches_the_sink() {
        let (p, g) = chain("stream s = a : s (+ 1/4) tail(s)");
        let t = named(&p, "tail(s)");
        assert!(edge_set(&g).contains(&(t, Node::Diverge)));
        assert!(edge_set(&g).contains(&(t, named(&p, "s"))));
        let a = buchi_analysis(&g);
        assert!(a.optimistic.diverge_reachable);
        assert_eq!(a.verdict, BuchiVerdict::NotAlmostSure);
    }

    #[test]
    fn silent_loop() {
        let (_, g) = chain("stream s = s");
        assert_eq!(g.nodes, vec![0]);
        assert_eq!(edge_set(&g), BTreeSet::from([(Node::State(0), Node::State(0))]));
        assert!(g.output_nodes.is_empty());
        assert_eq!(buchi_verdict(&g), BuchiVerdict::NotAlmostSure);
    }

    #[test]
    fn tail_of_cons_is_rejected() {
        // The excursion under tail reaches the constructor, pops back to the
        // recursion state and pushes again: the ground chain only ever sees
        // tail -> s -> tail, which has no output.
        let (p, g) = chain("stream s = tail(a : s)");
        let a = buchi_analysis(&g);
        assert_eq!(a.verdict, BuchiVerdict::NotAlmostSure);
        let t = named(&p, "tail(a : s)");
        let r = named(&p, "s");
        let mut bottom = vec![r, t];
        bottom.sort();
        assert_eq!(a.optimistic.bottom_sccs, vec![bottom]);
    }

    #[test]
    fn derived_tree_chain() {
        let (_, g) = chain("tree t = left(t) (+ 1/4) mk(x, t, left(t))");
        assert!(!g.output_nodes.is_empty());
        assert_eq!(buchi_verdict(&g), BuchiVerdict::AlmostSure);
    }

    #[test]
    fn unknown_edges_only_block_the_positive_answer() {
        let (p, mut g) = chain("stream s = a : s (+ 1/2) tail(s)");
        let t = named(&p, "tail(s)");
        let head = Head { state: 0, symbol: Symbol::Tl };
        g.edges.push(Edge {
            from: t,
            to: Node::Diverge,
            provenance: Provenance::Divergence { head, certain: false },
        });
        assert_eq!(buchi_verdict(&g), BuchiVerdict::Unknown);
        if let Some(e) = g.edges.last_mut() {
            e.provenance = Provenance::Divergence { head, certain: true };
        }
        assert_eq!(buchi_verdict(&g), BuchiVerdict::NotAlmostSure);
    }
}
