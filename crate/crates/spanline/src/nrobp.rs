//! Nondeterministic read-once branching programs and the construction that
//! turns a sequential VA and a document into an NROBP computing the
//! Boolean abstraction of the spanner on that document.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::autops::{trim, Label, StateId, Va, VaBuilder};
use crate::error::{Error, Result};
use crate::spancore::{Document, Var};

/// A positive or negated indicator variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Literal {
    pub var: Var,
    pub positive: bool,
}

impl std::fmt::Display for Literal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}{}", if self.positive { "" } else { "!" }, self.var)
    }
}

/// A source-sink DAG whose edges optionally carry literals; an assignment
/// is a model iff some source-sink path has all its literals satisfied,
/// and on every path each variable labels at most one edge.
#[derive(Debug, Clone)]
pub struct Nrobp {
    vars: BTreeSet<Var>,
    num_nodes: usize,
    source: usize,
    sink: usize,
    edges: Vec<(usize, Option<Literal>, usize)>,
}

impl Nrobp {
    pub fn new(
        vars: BTreeSet<Var>,
        num_nodes: usize,
        source: usize,
        sink: usize,
        edges: Vec<(usize, Option<Literal>, usize)>,
    ) -> Result<Nrobp> {
        if source >= num_nodes || sink >= num_nodes {
            return Err(Error::InvalidInput("source or sink out of range".into()));
        }
        for (from, lit, to) in &edges {
            if *from >= num_nodes || *to >= num_nodes {
                return Err(Error::InvalidInput("edge endpoint out of range".into()));
            }
            if let Some(l) = lit {
                if !vars.contains(&l.var) {
                    return Err(Error::InvalidInput(format!("literal variable {} not declared", l.var)));
                }
            }
        }
        Ok(Nrobp { vars, num_nodes, source, sink, edges })
    }

    pub fn vars(&self) -> &BTreeSet<Var> {
        &self.vars
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn edges(&self) -> &[(usize, Option<Literal>, usize)] {
        &self.edges
    }

    fn adjacency(&self) -> Vec<Vec<(Option<Literal>, usize)>> {
        let mut adj: Vec<Vec<(Option<Literal>, usize)>> = vec![Vec::new(); self.num_nodes];
        for (from, lit, to) in &self.edges {
            adj[*from].push((lit.clone(), *to));
        }
        adj
    }

    /// Kahn topological order; `None` when the graph has a cycle.
    fn topo_order(&self) -> Option<Vec<usize>> {
        let mut indeg = vec![0usize; self.num_nodes];
        for (_, _, to) in &self.edges {
            indeg[*to] += 1;
        }
        let adj = self.adjacency();
        let mut queue: VecDeque<usize> =
            (0..self.num_nodes).filter(|n| indeg[*n] == 0).collect();
        let mut order = Vec::with_capacity(self.num_nodes);
        while let Some(n) = queue.pop_front() {
            order.push(n);
            for (_, to) in &adj[n] {
                indeg[*to] -= 1;
                if indeg[*to] == 0 {
                    queue.push_back(*to);
                }
            }
        }
        (order.len() == self.num_nodes).then_some(order)
    }

    pub fn is_acyclic(&self) -> bool {
        self.topo_order().is_some()
    }

    /// True iff no source-sink path carries two literals of the same
    /// variable: forward variable sets are propagated along the part of the
    /// graph that lies on source-sink paths, and an edge re-labeling an
    /// already-seen variable is a violation.
    pub fn check_read_once(&self) -> bool {
        let order = match self.topo_order() {
            Some(o) => o,
            None => return false,
        };
        let on_path = self.on_path_nodes();
        let mut seen_vars: Vec<BTreeSet<Var>> = vec![BTreeSet::new(); self.num_nodes];
        for n in order {
            if !on_path.contains(&n) {
                continue;
            }
            for (from, lit, to) in &self.edges {
                if *from != n || !on_path.contains(to) {
                    continue;
                }
                if let Some(l) = lit {
                    if seen_vars[n].contains(&l.var) {
                        return false;
                    }
                }
                let mut next: BTreeSet<Var> = seen_vars[n].clone();
                if let Some(l) = lit {
                    next.insert(l.var.clone());
                }
                seen_vars[*to].extend(next);
            }
        }
        true
    }

    fn on_path_nodes(&self) -> BTreeSet<usize> {
        let adj = self.adjacency();
        let mut fwd = BTreeSet::from([self.source]);
        let mut queue = VecDeque::from([self.source]);
        while let Some(n) = queue.pop_front() {
            for (_, to) in &adj[n] {
                if fwd.insert(*to) {
                    queue.push_back(*to);
                }
            }
        }
        let mut back: Vec<Vec<usize>> = vec![Vec::new(); self.num_nodes];
        for (from, _, to) in &self.edges {
            back[*to].push(*from);
        }
        let mut bwd = BTreeSet::from([self.sink]);
        let mut queue = VecDeque::from([self.sink]);
        while let Some(n) = queue.pop_front() {
            for from in &back[n] {
                if bwd.insert(*from) {
                    queue.push_back(*from);
                }
            }
        }
        fwd.intersection(&bwd).copied().collect()
    }

    /// The models of the computed Boolean function, as sets of variables
    /// assigned 1. Assignments are enumerated and each is tested by a
    /// reachability scan over its satisfied edges; variables absent from a
    /// satisfied path are thereby free unless an inserted negative literal
    /// forces them.
    pub fn models(&self) -> Result<BTreeSet<BTreeSet<Var>>> {
        let vars: Vec<Var> = self.vars.iter().cloned().collect();
        if vars.len() > 24 {
            return Err(Error::InvalidInput(format!(
                "model enumeration over {} variables is past desk scale",
                vars.len()
            )));
        }
        let adj = self.adjacency();
        let mut out = BTreeSet::new();
        for mask in 0..(1u64 << vars.len()) {
            let truth = |v: &Var| -> bool {
                let idx = vars.iter().position(|x| x == v).unwrap();
                mask & (1 << idx) != 0
            };
            let mut seen = vec![false; self.num_nodes];
            seen[self.source] = true;
            let mut queue = VecDeque::from([self.source]);
            let mut hit = self.source == self.sink;
            while let Some(n) = queue.pop_front() {
                for (lit, to) in &adj[n] {
                    let ok = match lit {
                        None => true,
                        Some(l) => truth(&l.var) == l.positive,
                    };
                    if ok && !seen[*to] {
                        seen[*to] = true;
                        if *to == self.sink {
                            hit = true;
                        }
                        queue.push_back(*to);
                    }
                }
            }
            if hit {
                out.insert(vars.iter().filter(|v| truth(v)).cloned().collect());
            }
        }
        Ok(out)
    }

    pub fn count_models(&self) -> Result<usize> {
        Ok(self.models()?.len())
    }

    /// Projection onto `keep`: literals of other variables are erased and
    /// the completion pass is re-run. Defined on completed programs (the
    /// outputs of [`to_nrobp`]), whose every source-sink path mentions
    /// every variable exactly once.
    pub fn project(&self, keep: &BTreeSet<Var>) -> Nrobp {
        let vars: BTreeSet<Var> = self.vars.intersection(keep).cloned().collect();
        let edges: Vec<(usize, Option<Literal>, usize)> = self
            .edges
            .iter()
            .map(|(from, lit, to)| {
                let lit = lit.clone().filter(|l| vars.contains(&l.var));
                (*from, lit, *to)
            })
            .collect();
        let raw = Nrobp { vars, num_nodes: self.num_nodes, source: self.source, sink: self.sink, edges };
        complete(raw)
    }

    /// GraphViz export: literal labels as `x` / `!x`, unlabeled edges bare.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph nrobp {\n  rankdir=LR;\n");
        out.push_str(&format!("  {} [shape=circle, label=\"s\"];\n", self.source));
        out.push_str(&format!("  {} [shape=doublecircle, label=\"t\"];\n", self.sink));
        for n in 0..self.num_nodes {
            if n != self.source && n != self.sink {
                out.push_str(&format!("  {n} [shape=point];\n"));
            }
        }
        for (from, lit, to) in &self.edges {
            match lit {
                Some(l) => out.push_str(&format!("  {from} -> {to} [label=\"{l}\"];\n")),
                None => out.push_str(&format!("  {from} -> {to};\n")),
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Builds an NROBP computing `Bool(P_A, d)`, following the product
/// construction: contract epsilon cycles, add a single final state, trim,
/// take the product with the document, relabel each opening marker to a
/// positive literal, drop the other markers, and force every variable not
/// seen on a path to 0 by the completion pass.
pub fn to_nrobp(a: &Va, d: &Document) -> Result<Nrobp> {
    if !a.flags().sequential {
        return Err(Error::NonSequentialInput("to_nrobp"));
    }
    let vars = a.variables().clone();
    let a = contract_eps_cycles(a);
    let a = single_final(&a);
    let a = trim(&a);
    if a.is_empty_spanner() {
        return Nrobp::new(vars, 2, 0, 1, Vec::new());
    }
    let final_state = *a.finals().iter().next().expect("trimmed non-empty automaton has a final state");

    // product with the document
    let n = a.num_states();
    let node = |q: StateId, pos: usize| q + pos * n;
    let mut edges: Vec<(usize, Option<Literal>, usize)> = Vec::new();
    for pos in 0..=d.len() {
        for (from, label, to) in a.transitions() {
            match label {
                Label::Eps => edges.push((node(*from, pos), None, node(*to, pos))),
                Label::Open(v) => edges.push((
                    node(*from, pos),
                    Some(Literal { var: v.clone(), positive: true }),
                    node(*to, pos),
                )),
                Label::Close(_) => edges.push((node(*from, pos), None, node(*to, pos))),
                Label::Letter(c) => {
                    if pos < d.len() && d.letter(pos) == *c {
                        edges.push((node(*from, pos), None, node(*to, pos + 1)));
                    }
                }
            }
        }
    }
    let raw = Nrobp {
        vars: vars.clone(),
        num_nodes: n * (d.len() + 1),
        source: node(a.initial(), 0),
        sink: node(final_state, d.len()),
        edges,
    };
    let pruned = prune_to_paths(raw);
    if pruned.num_nodes == 2 && pruned.edges.is_empty() && pruned.source != pruned.sink {
        return Ok(pruned); // no accepting run on this document
    }
    if !pruned.is_acyclic() {
        return Err(Error::Internal("product of a trimmed sequential VA with a document must be acyclic".into()));
    }
    Ok(complete(pruned))
}

/// Contracts strongly connected components of the epsilon subgraph into
/// single states and drops epsilon self-loops.
fn contract_eps_cycles(a: &Va) -> Va {
    if !a.has_eps() {
        return a.clone();
    }
    let n = a.num_states();
    let mut eps_adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut eps_radj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (from, label, to) in a.transitions() {
        if label.is_eps() {
            eps_adj[*from].push(*to);
            eps_radj[*to].push(*from);
        }
    }
    // Kosaraju
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        seen[start] = true;
        while let Some((q, i)) = stack.pop() {
            if i < eps_adj[q].len() {
                stack.push((q, i + 1));
                let next = eps_adj[q][i];
                if !seen[next] {
                    seen[next] = true;
                    stack.push((next, 0));
                }
            } else {
                order.push(q);
            }
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut num_comps = 0;
    for &start in order.iter().rev() {
        if comp[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        comp[start] = num_comps;
        while let Some(q) = stack.pop() {
            for &from in &eps_radj[q] {
                if comp[from] == usize::MAX {
                    comp[from] = num_comps;
                    stack.push(from);
                }
            }
        }
        num_comps += 1;
    }
    let mut b = VaBuilder::new();
    for _ in 0..num_comps {
        b.add_state();
    }
    b.set_initial(comp[a.initial()]);
    for f in a.finals() {
        b.mark_final(comp[*f]);
    }
    for (from, label, to) in a.transitions() {
        let (cf, ct) = (comp[*from], comp[*to]);
        if label.is_eps() && cf == ct {
            continue;
        }
        b.add_transition(cf, label.clone(), ct);
    }
    b.build(a.alphabet().clone(), a.variables().clone())
}

/// Adds a fresh final state reached by epsilon edges from the old finals.
fn single_final(a: &Va) -> Va {
    let mut b = VaBuilder::new();
    for q in 0..a.num_states() {
        b.add_state_note(a.state_note(q).to_string());
    }
    let t = b.add_state_note("final".into());
    b.set_initial(a.initial());
    b.mark_final(t);
    for (from, label, to) in a.transitions() {
        b.add_transition(*from, label.clone(), *to);
    }
    for f in a.finals() {
        b.add_transition(*f, Label::Eps, t);
    }
    b.build(a.alphabet().clone(), a.variables().clone())
}

/// Restricts the graph to nodes on source-sink paths, renumbering densely.
/// A graph with no such path collapses to a disconnected source and sink.
fn prune_to_paths(g: Nrobp) -> Nrobp {
    debug_assert_ne!(g.source, g.sink, "the fresh final state keeps source and sink distinct");
    let keep = g.on_path_nodes();
    if !keep.contains(&g.source) || !keep.contains(&g.sink) {
        return Nrobp { vars: g.vars, num_nodes: 2, source: 0, sink: 1, edges: Vec::new() };
    }
    let mut renumber: BTreeMap<usize, usize> = BTreeMap::new();
    for n in &keep {
        let id = renumber.len();
        renumber.insert(*n, id);
    }
    let edges = g
        .edges
        .iter()
        .filter(|(from, _, to)| keep.contains(from) && keep.contains(to))
        .map(|(from, lit, to)| (renumber[from], lit.clone(), renumber[to]))
        .collect();
    Nrobp {
        vars: g.vars,
        num_nodes: keep.len(),
        source: renumber[&g.source],
        sink: renumber[&g.sink],
        edges,
    }
}

/// The completion pass: for every edge, variables that appear on some
/// source path to the target but not on any source path to the origin (nor
/// on the edge itself) get forced to 0 by inserting a chain of negated
/// literals, in lexicographic variable order. At the sink the full
/// variable set is forced, so afterwards every source-sink path mentions
/// every variable exactly once.
fn complete(g: Nrobp) -> Nrobp {
    let order = g.topo_order().expect("completion runs on acyclic graphs");
    let mut seen: Vec<BTreeSet<Var>> = vec![BTreeSet::new(); g.num_nodes];
    let adj = g.adjacency();
    for &n in &order {
        for (lit, to) in &adj[n] {
            let mut add = seen[n].clone();
            if let Some(l) = lit {
                add.insert(l.var.clone());
            }
            seen[*to].extend(add);
        }
    }
    let mut target: Vec<BTreeSet<Var>> = seen.clone();
    target[g.sink] = g.vars.clone();
    let mut num_nodes = g.num_nodes;
    let mut edges: Vec<(usize, Option<Literal>, usize)> = Vec::new();
    for (from, lit, to) in &g.edges {
        let mut covered = seen[*from].clone();
        if let Some(l) = lit {
            covered.insert(l.var.clone());
        }
        let missing: Vec<Var> = target[*to].difference(&covered).cloned().collect();
        if missing.is_empty() {
            edges.push((*from, lit.clone(), *to));
            continue;
        }
        // from --(lit)--> n1 --!y1--> n2 --!y2--> ... --> to
        let mut at = *from;
        let mut carried = lit.clone();
        for y in &missing {
            let next = num_nodes;
            num_nodes += 1;
            edges.push((at, carried.take(), next));
            carried = Some(Literal { var: y.clone(), positive: false });
            at = next;
        }
        edges.push((at, carried, *to));
    }
    Nrobp { vars: g.vars, num_nodes, source: g.source, sink: g.sink, edges }
}
