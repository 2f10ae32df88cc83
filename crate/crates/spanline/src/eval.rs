//! Evaluation of a sequential VA over a document: enumerate the mapping
//! set, test membership of one mapping, and compute the Boolean
//! abstraction.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::autops::{eliminate_epsilon, trim, Label, StateId, Va};
use crate::error::{Error, Result};
use crate::spancore::{refwords_of, Document, Mapping, Span, Var};

/// Computes `P_A(d)` with set semantics: duplicates arising from several
/// accepting runs are merged, and the output order is the canonical
/// (lexicographic) mapping order.
///
/// The walk runs over the product of the automaton and the document
/// (letter edges advance the position, marker edges do not), pruned by
/// co-reachability. Marker cycles cannot occur in a trimmed sequential VA;
/// a per-position marker budget turns any violation of that invariant into
/// an internal error instead of divergence.
pub fn evaluate(a: &Va, d: &Document) -> Result<BTreeSet<Mapping>> {
    if !a.flags().sequential {
        return Err(Error::NonSequentialInput("evaluate"));
    }
    for c in d.letters() {
        if !a.alphabet().contains(c) {
            return Err(Error::LetterOutsideAlphabet(c));
        }
    }
    let a = trim(&eliminate_epsilon(a));
    if a.is_empty_spanner() {
        return Ok(BTreeSet::new());
    }
    let product = ProductDag::new(&a, d);
    let mut out = BTreeSet::new();
    let mut walker = Walker {
        product: &product,
        a: &a,
        d,
        budget: 2 * a.variables().len().max(1),
        open: BTreeMap::new(),
        assigned: Mapping::empty(),
        out: &mut out,
    };
    walker.walk(a.initial(), 0, 0)?;
    Ok(out)
}

/// Co-reachability of product nodes `(state, position)` toward accepting
/// nodes `(final, |d|)`.
struct ProductDag {
    n: usize,
    live: Vec<bool>,
}

impl ProductDag {
    fn new(a: &Va, d: &Document) -> ProductDag {
        let n = a.num_states();
        let positions = d.len() + 1;
        let mut live = vec![false; n * positions];
        let mut queue = VecDeque::new();
        for f in a.finals() {
            let node = f + d.len() * n;
            live[node] = true;
            queue.push_back((*f, d.len()));
        }
        // backward edges indexed on the fly
        let mut back_marker: Vec<Vec<StateId>> = vec![Vec::new(); n];
        let mut back_letter: Vec<Vec<(char, StateId)>> = vec![Vec::new(); n];
        for (from, label, to) in a.transitions() {
            match label {
                Label::Letter(c) => back_letter[*to].push((*c, *from)),
                Label::Open(_) | Label::Close(_) => back_marker[*to].push(*from),
                Label::Eps => unreachable!("evaluate runs on epsilon-free automata"),
            }
        }
        while let Some((q, pos)) = queue.pop_front() {
            for from in &back_marker[q] {
                let node = from + pos * n;
                if !live[node] {
                    live[node] = true;
                    queue.push_back((*from, pos));
                }
            }
            if pos > 0 {
                for (c, from) in &back_letter[q] {
                    if d.letter(pos - 1) == *c {
                        let node = from + (pos - 1) * n;
                        if !live[node] {
                            live[node] = true;
                            queue.push_back((*from, pos - 1));
                        }
                    }
                }
            }
        }
        ProductDag { n, live }
    }

    fn is_live(&self, q: StateId, pos: usize) -> bool {
        self.live[q + pos * self.n]
    }
}

struct Walker<'a> {
    product: &'a ProductDag,
    a: &'a Va,
    d: &'a Document,
    budget: usize,
    open: BTreeMap<Var, usize>,
    assigned: Mapping,
    out: &'a mut BTreeSet<Mapping>,
}

impl<'a> Walker<'a> {
    fn walk(&mut self, q: StateId, pos: usize, markers_here: usize) -> Result<()> {
        if markers_here > self.budget {
            return Err(Error::Internal(
                "marker budget exceeded: marker cycle in a trimmed sequential automaton".into(),
            ));
        }
        if pos == self.d.len() && self.a.is_final(q) && self.open.is_empty() {
            self.out.insert(self.assigned.clone());
        }
        let outgoing: Vec<(Label, StateId)> = self.a.outgoing(q).to_vec();
        for (label, to) in outgoing {
            match label {
                Label::Letter(c) => {
                    if pos < self.d.len() && self.d.letter(pos) == c && self.product.is_live(to, pos + 1) {
                        self.walk(to, pos + 1, 0)?;
                    }
                }
                Label::Open(v) => {
                    if self.product.is_live(to, pos) {
                        self.open.insert(v.clone(), pos);
                        self.walk(to, pos, markers_here + 1)?;
                        self.open.remove(&v);
                    }
                }
                Label::Close(v) => {
                    if self.product.is_live(to, pos) {
                        if let Some(&begin) = self.open.get(&v) {
                            self.open.remove(&v);
                            self.assigned.insert(v.clone(), Span::new(begin, pos));
                            self.walk(to, pos, markers_here + 1)?;
                            self.assigned.remove(&v);
                            self.open.insert(v, begin);
                        }
                    }
                }
                Label::Eps => unreachable!(),
            }
        }
        Ok(())
    }
}

/// Membership test `m ∈ P_A(d)`, implemented as a non-emptiness check of
/// the product of the automaton with the ref-word automaton of `(d, m)`.
pub fn contains(a: &Va, d: &Document, m: &Mapping) -> Result<bool> {
    if !a.flags().sequential {
        return Err(Error::NonSequentialInput("contains"));
    }
    let refs = refwords_of(d, m, a.alphabet())?;
    let a = eliminate_epsilon(a);
    Ok(intersects(&a, &refs))
}

/// True iff the two epsilon-free automata accept a common ref-word.
pub(crate) fn intersects(a: &Va, b: &Va) -> bool {
    let mut seen: BTreeSet<(StateId, StateId)> = BTreeSet::new();
    let start = (a.initial(), b.initial());
    seen.insert(start);
    let mut queue = VecDeque::from([start]);
    while let Some((qa, qb)) = queue.pop_front() {
        if a.is_final(qa) && b.is_final(qb) {
            return true;
        }
        for (la, ta) in a.outgoing(qa) {
            for (lb, tb) in b.outgoing(qb) {
                if la == lb && seen.insert((*ta, *tb)) {
                    queue.push_back((*ta, *tb));
                }
            }
        }
    }
    false
}

/// The Boolean abstraction `Bool(P, d)`: the set of assigned-variable sets
/// of the extracted mappings, over the indicator variables of `SVars(A)`.
pub fn bool_abstraction(a: &Va, d: &Document) -> Result<BTreeSet<BTreeSet<Var>>> {
    Ok(evaluate(a, d)?.into_iter().map(|m| m.domain_set()).collect())
}
