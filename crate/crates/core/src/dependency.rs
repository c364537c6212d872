//! Predicate dependency graph, stratification and the example-dependent predicate set.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::lang::{AtomLiteral, AtomRef, Head, Literal, PredSig, Rule, Sign, SketchProgram};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Pred(PredSig),
    /// A declared sketched predicate, by id (`?p`).
    Sketch(String),
    /// Synthetic head of the integrity constraint with this 0-based rule index.
    Constraint(usize),
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Pred(p) => write!(f, "{p}"),
            Node::Sketch(s) => f.write_str(s),
            Node::Constraint(i) => write!(f, "#false@{}", i + 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarity {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub from: Node,
    pub to: Node,
    pub polarity: Polarity,
}

/// Nodes and edges are kept sorted so every traversal is deterministic.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DependencyGraph {
    pub nodes: BTreeSet<Node>,
    pub edges: BTreeSet<Edge>,
}

impl DependencyGraph {
    fn add_edge(&mut self, from: Node, to: Node, polarity: Polarity) {
        self.nodes.insert(from.clone());
        self.nodes.insert(to.clone());
        self.edges.insert(Edge { from, to, polarity });
    }

    pub fn has_edge(&self, from: &Node, to: &Node, polarity: Polarity) -> bool {
        self.edges.contains(&Edge { from: from.clone(), to: to.clone(), polarity })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StratificationResult {
    Stratified(BTreeMap<Node, usize>),
    /// A cycle through at least one negative edge, first node repeated at the end.
    NegativeCycle(Vec<Node>),
}

impl StratificationResult {
    pub fn is_stratified(&self) -> bool {
        matches!(self, StratificationResult::Stratified(_))
    }
}

fn head_node(rule: &Rule, index: usize) -> Vec<Node> {
    match &rule.head {
        Head::Constraint => vec![Node::Constraint(index)],
        Head::Atom(a) => vec![Node::Pred(a.sig())],
        Head::Choice(c) => c.elements.iter().map(|e| Node::Pred(e.atom.sig())).collect(),
    }
}

fn literal_edges(
    program: Option<&SketchProgram>,
    heads: &[Node],
    lit: &Literal,
    inside_aggregate: bool,
    graph: &mut DependencyGraph,
) {
    match lit {
        Literal::Atom(AtomLiteral { sign, atom }) => {
            let polarity = if inside_aggregate || !matches!(sign, Sign::Pos) { Polarity::Negative } else { Polarity::Positive };
            match atom {
                AtomRef::Plain(a) => {
                    for h in heads {
                        graph.add_edge(h.clone(), Node::Pred(a.sig()), polarity);
                    }
                }
                AtomRef::Sketched { var, args } => {
                    let node = Node::Sketch(var.clone());
                    for h in heads {
                        graph.add_edge(h.clone(), node.clone(), polarity);
                    }
                    if let Some(decl) = program.and_then(|p| p.declaration(var.trim_start_matches('?'))) {
                        for c in &decl.candidates {
                            graph.add_edge(node.clone(), Node::Pred(PredSig::new(c.clone(), args.len())), polarity);
                        }
                    }
                }
            }
        }
        Literal::Cmp(_) => {}
        Literal::Agg(a) => {
            for inner in &a.condition {
                literal_edges(program, heads, inner, true, graph);
            }
        }
    }
}

fn rules_graph(program: Option<&SketchProgram>, rules: &[Rule]) -> DependencyGraph {
    let mut graph = DependencyGraph::default();
    for (i, rule) in rules.iter().enumerate() {
        let heads = head_node(rule, i);
        graph.nodes.extend(heads.iter().cloned());
        for lit in &rule.body {
            literal_edges(program, &heads, lit, false, &mut graph);
        }
        if let Head::Choice(c) = &rule.head {
            for e in &c.elements {
                let h = [Node::Pred(e.atom.sig())];
                for lit in &e.condition {
                    literal_edges(program, &h, lit, false, &mut graph);
                }
            }
        }
    }
    graph
}

/// Dependency graph of a sketch, including `?s -> candidate` edges.
pub fn dependency_graph(program: &SketchProgram) -> DependencyGraph {
    let mut graph = rules_graph(Some(program), &program.rules);
    for a in &program.facts {
        graph.nodes.insert(Node::Pred(a.sig()));
    }
    for p in program.examples.predicates() {
        graph.nodes.insert(Node::Pred(p));
    }
    graph
}

/// Dependency graph of a plain program (choice heads depend on their conditions).
pub fn program_graph(rules: &[Rule]) -> DependencyGraph {
    rules_graph(None, rules)
}

pub fn check_stratified(graph: &DependencyGraph) -> StratificationResult {
    let mut g: DiGraph<&Node, Polarity> = DiGraph::new();
    let mut index: BTreeMap<&Node, NodeIndex> = BTreeMap::new();
    for n in &graph.nodes {
        index.insert(n, g.add_node(n));
    }
    for e in &graph.edges {
        g.add_edge(index[&e.from], index[&e.to], e.polarity);
    }

    // Components come out in reverse topological order: dependencies first.
    let sccs = tarjan_scc(&g);
    let mut component = vec![0usize; g.node_count()];
    for (ci, scc) in sccs.iter().enumerate() {
        for &n in scc {
            component[n.index()] = ci;
        }
    }
    for e in &graph.edges {
        let (u, v) = (index[&e.from], index[&e.to]);
        if e.polarity == Polarity::Negative && component[u.index()] == component[v.index()] {
            return StratificationResult::NegativeCycle(witness_cycle(graph, &component, &index, &e.from, &e.to));
        }
    }

    let mut level = vec![0usize; sccs.len()];
    for (ci, scc) in sccs.iter().enumerate() {
        let mut l = 0;
        for &n in scc {
            for e in g.edges(n) {
                use petgraph::visit::EdgeRef;
                let target = component[e.target().index()];
                if target != ci {
                    l = l.max(level[target] + usize::from(*e.weight() == Polarity::Negative));
                }
            }
        }
        level[ci] = l;
    }
    StratificationResult::Stratified(graph.nodes.iter().map(|n| (n.clone(), level[component[index[n].index()]])).collect())
}

/// Shortest path `to -> ... -> from` inside the component, closed by the negative edge.
fn witness_cycle(
    graph: &DependencyGraph,
    component: &[usize],
    index: &BTreeMap<&Node, NodeIndex>,
    from: &Node,
    to: &Node,
) -> Vec<Node> {
    let comp = component[index[from].index()];
    let mut succ: BTreeMap<&Node, Vec<&Node>> = BTreeMap::new();
    for e in &graph.edges {
        if component[index[&e.from].index()] == comp && component[index[&e.to].index()] == comp {
            succ.entry(&e.from).or_default().push(&e.to);
        }
    }
    let mut parent: BTreeMap<&Node, &Node> = BTreeMap::new();
    let mut queue = VecDeque::from([to]);
    let mut seen = BTreeSet::from([to]);
    while let Some(n) = queue.pop_front() {
        if n == from {
            break;
        }
        for &m in succ.get(n).into_iter().flatten() {
            if seen.insert(m) {
                parent.insert(m, n);
                queue.push_back(m);
            }
        }
    }
    let mut path = vec![from.clone()];
    let mut cur = from;
    while cur != to {
        cur = parent[cur];
        path.push(cur.clone());
    }
    path.reverse();
    let mut cycle = vec![from.clone()];
    cycle.extend(path.into_iter().take_while(|n| n != from).collect::<Vec<_>>());
    cycle.push(from.clone());
    cycle
}

/// Nodes that depend (transitively, through sketched domains) on an example predicate,
/// together with the example predicates themselves.
pub fn example_dependent_nodes(program: &SketchProgram) -> BTreeSet<Node> {
    let graph = dependency_graph(program);
    let mut rev: BTreeMap<&Node, Vec<&Node>> = BTreeMap::new();
    for e in &graph.edges {
        rev.entry(&e.to).or_default().push(&e.from);
    }
    let mut out: BTreeSet<Node> = program.examples.predicates().into_iter().map(Node::Pred).collect();
    let mut queue: VecDeque<Node> = out.iter().cloned().collect();
    while let Some(n) = queue.pop_front() {
        for &m in rev.get(&n).into_iter().flatten() {
            if out.insert(m.clone()) {
                queue.push_back(m.clone());
            }
        }
    }
    out
}

/// The predicates that get an example-identifier argument.
pub fn example_dependent_predicates(program: &SketchProgram) -> BTreeSet<PredSig> {
    example_dependent_nodes(program)
        .into_iter()
        .filter_map(|n| match n {
            Node::Pred(p) => Some(p),
            _ => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse_program, parse_sketch};

    #[test]
    fn witness_for_negative_pair() {
        let g = program_graph(&parse_program("p :- not q. q :- not p.").unwrap());
        let p = Node::Pred(PredSig::new("p", 0));
        let q = Node::Pred(PredSig::new("q", 0));
        assert_eq!(check_stratified(&g), StratificationResult::NegativeCycle(vec![p.clone(), q, p]));
    }

    #[test]
    fn positive_cycle_is_fine() {
        let g = program_graph(&parse_program("p :- q. q :- p.").unwrap());
        assert_eq!(g.edges.len(), 2);
        assert!(g.edges.iter().all(|e| e.polarity == Polarity::Positive));
        assert!(check_stratified(&g).is_stratified());
        assert_eq!(check_stratified(&DependencyGraph::default()), StratificationResult::Stratified(BTreeMap::new()));
    }

    #[test]
    fn self_negation_and_aggregates() {
        let g = program_graph(&parse_program("p(X) :- q(X), not p(X).").unwrap());
        let p = Node::Pred(PredSig::new("p", 1));
        assert_eq!(check_stratified(&g), StratificationResult::NegativeCycle(vec![p.clone(), p]));
        let g = program_graph(&parse_program("n(N) :- N = #count{ X : p(X) }. p(X) :- n(X).").unwrap());
        assert!(!check_stratified(&g).is_stratified());
    }

    #[test]
    fn isolated_example_predicate() {
        let p = parse_sketch("[SKETCH]\nq(X) :- s(X).\n[EXAMPLES]\npositive: r(1).\n").unwrap();
        assert_eq!(example_dependent_predicates(&p), BTreeSet::from([PredSig::new("r", 1)]));
        let p = parse_sketch("[SKETCH]\nq(X) :- s(X).\n").unwrap();
        assert!(example_dependent_predicates(&p).is_empty());
    }
}
