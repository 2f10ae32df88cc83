//! Variable-set automata and the automata-level constructions:
//! normalization (trimming, epsilon elimination, marker ordering,
//! determinization over ref-words) and the schemaless spanner algebra.

mod algebra;
mod normalize;

pub use algebra::{
    cartesian_product, concat, decompose, difference, intersection, join, project, rename_dagger,
    union,
};
pub(crate) use algebra::rename;
pub use normalize::{determinize_refwords, eliminate_epsilon, order_markers, trim};
pub(crate) use normalize::reduce;


use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spancore::{Alphabet, Marker, RefSym, RefWord, Var};

pub type StateId = usize;

/// A transition label: a letter of the alphabet, a variable marker, or an
/// epsilon move. Only intermediate automata carry epsilon labels; every
/// construction eliminates them before returning.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Eps,
    Letter(char),
    Open(Var),
    Close(Var),
}

impl Label {
    pub fn is_eps(&self) -> bool {
        matches!(self, Label::Eps)
    }

    pub fn is_marker(&self) -> bool {
        matches!(self, Label::Open(_) | Label::Close(_))
    }

    pub fn marker(&self) -> Option<Marker> {
        match self {
            Label::Open(v) => Some(Marker::Open(v.clone())),
            Label::Close(v) => Some(Marker::Close(v.clone())),
            _ => None,
        }
    }

    pub fn var(&self) -> Option<&Var> {
        match self {
            Label::Open(v) | Label::Close(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Eps => write!(f, "eps"),
            Label::Letter(c) => write!(f, "{c}"),
            Label::Open(v) => write!(f, "|-{v}"),
            Label::Close(v) => write!(f, "-|{v}"),
        }
    }
}

/// Certified properties of an automaton, computed by the corresponding
/// checkers when the automaton is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Flags {
    /// Every accepting run opens and closes each used variable exactly once.
    pub sequential: bool,
    /// Every accepting run assigns every declared variable.
    pub functional: bool,
    /// Every maximal marker block of an accepted ref-word is sorted by the
    /// canonical marker order.
    pub ordered: bool,
    /// Complete and deterministic as an automaton over letters and markers.
    pub deterministic: bool,
}

/// Per-state set of open variables of a trimmed sequential VA.
pub type OpenSetAnnotation = BTreeMap<StateId, BTreeSet<Var>>;

/// A variable-set automaton: an NFA over the alphabet extended with
/// variable markers. Immutable after construction; all operations build
/// fresh automata.
#[derive(Debug, Clone)]
pub struct Va {
    alphabet: Alphabet,
    variables: BTreeSet<Var>,
    num_states: usize,
    initial: StateId,
    finals: BTreeSet<StateId>,
    transitions: Vec<(StateId, Label, StateId)>,
    adj: Vec<Vec<(Label, StateId)>>,
    flags: Flags,
    /// Optional per-state provenance (original tuples of product or subset
    /// constructions); debugging output only.
    notes: Vec<String>,
}

impl Va {
    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn variables(&self) -> &BTreeSet<Var> {
        &self.variables
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn finals(&self) -> &BTreeSet<StateId> {
        &self.finals
    }

    pub fn is_final(&self, q: StateId) -> bool {
        self.finals.contains(&q)
    }

    pub fn transitions(&self) -> &[(StateId, Label, StateId)] {
        &self.transitions
    }

    pub fn outgoing(&self, q: StateId) -> &[(Label, StateId)] {
        &self.adj[q]
    }

    pub fn flags(&self) -> Flags {
        self.flags
    }

    pub fn state_note(&self, q: StateId) -> &str {
        self.notes.get(q).map(|s| s.as_str()).unwrap_or("")
    }

    pub fn has_eps(&self) -> bool {
        self.transitions.iter().any(|(_, l, _)| l.is_eps())
    }

    /// Rebuilds the automaton with enlarged declared alphabet and variable
    /// sets; both must be supersets of the current declarations.
    pub fn widen(&self, alphabet: Alphabet, variables: BTreeSet<Var>) -> Result<Va> {
        if self.alphabet.letters().any(|c| !alphabet.contains(c)) {
            return Err(Error::InvalidInput("widened alphabet must be a superset".into()));
        }
        if let Some(v) = self.variables.difference(&variables).next() {
            return Err(Error::InvalidInput(format!("widened variable set drops {v}")));
        }
        let mut b = VaBuilder::new();
        for q in 0..self.num_states {
            b.add_state_note(self.state_note(q).to_string());
        }
        b.set_initial(self.initial);
        for f in &self.finals {
            b.mark_final(*f);
        }
        for (from, label, to) in &self.transitions {
            b.add_transition(*from, label.clone(), *to);
        }
        Ok(b.build(alphabet, variables))
    }

    /// The canonical empty spanner: one non-final initial state, no
    /// transitions.
    pub fn empty_spanner(alphabet: Alphabet, variables: BTreeSet<Var>) -> Va {
        let mut b = VaBuilder::new();
        let s = b.add_state();
        b.set_initial(s);
        b.build(alphabet, variables)
    }

    /// True iff the automaton has no accepting run at all.
    pub fn is_empty_spanner(&self) -> bool {
        let reach = self.reachable();
        !self.finals.iter().any(|f| reach.contains(f))
    }

    pub(crate) fn reachable(&self) -> BTreeSet<StateId> {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::new();
        seen.insert(self.initial);
        queue.push_back(self.initial);
        while let Some(q) = queue.pop_front() {
            for (_, to) in &self.adj[q] {
                if seen.insert(*to) {
                    queue.push_back(*to);
                }
            }
        }
        seen
    }

    pub(crate) fn coreachable(&self) -> BTreeSet<StateId> {
        let mut back: Vec<Vec<StateId>> = vec![Vec::new(); self.num_states];
        for (from, _, to) in &self.transitions {
            back[*to].push(*from);
        }
        let mut seen: BTreeSet<StateId> = self.finals.clone();
        let mut queue: VecDeque<StateId> = self.finals.iter().copied().collect();
        while let Some(q) = queue.pop_front() {
            for from in &back[q] {
                if seen.insert(*from) {
                    queue.push_back(*from);
                }
            }
        }
        seen
    }

    /// States lying on at least one initial-to-final path.
    pub(crate) fn live_states(&self) -> BTreeSet<StateId> {
        let reach = self.reachable();
        let coreach = self.coreachable();
        reach.intersection(&coreach).copied().collect()
    }

    /// Simulates the automaton as an NFA over letters and markers.
    pub fn accepts_refword(&self, w: &RefWord) -> bool {
        let mut current = self.eps_closure_set(&BTreeSet::from([self.initial]));
        for sym in &w.0 {
            let mut next = BTreeSet::new();
            for &q in &current {
                for (label, to) in &self.adj[q] {
                    let fires = match (sym, label) {
                        (RefSym::Letter(c), Label::Letter(lc)) => c == lc,
                        (RefSym::Mark(Marker::Open(v)), Label::Open(lv)) => v == lv,
                        (RefSym::Mark(Marker::Close(v)), Label::Close(lv)) => v == lv,
                        _ => false,
                    };
                    if fires {
                        next.insert(*to);
                    }
                }
            }
            current = self.eps_closure_set(&next);
            if current.is_empty() {
                return false;
            }
        }
        current.iter().any(|q| self.finals.contains(q))
    }

    fn eps_closure_set(&self, start: &BTreeSet<StateId>) -> BTreeSet<StateId> {
        let mut seen = start.clone();
        let mut queue: VecDeque<StateId> = start.iter().copied().collect();
        while let Some(q) = queue.pop_front() {
            for (label, to) in &self.adj[q] {
                if label.is_eps() && seen.insert(*to) {
                    queue.push_back(*to);
                }
            }
        }
        seen
    }

    /// The per-state open-variable sets of a trimmed sequential automaton
    /// (single-valued by the open-variable observation).
    pub fn open_sets(&self) -> Result<OpenSetAnnotation> {
        if !self.flags.sequential {
            return Err(Error::NonSequentialInput("open_sets"));
        }
        let live = self.live_states();
        let mut open: BTreeMap<StateId, BTreeSet<Var>> = BTreeMap::new();
        if !live.contains(&self.initial) {
            return Ok(open);
        }
        open.insert(self.initial, BTreeSet::new());
        let mut queue = VecDeque::from([self.initial]);
        while let Some(q) = queue.pop_front() {
            let cur = open[&q].clone();
            for (label, to) in &self.adj[q] {
                if !live.contains(to) {
                    continue;
                }
                let mut next = cur.clone();
                match label {
                    Label::Open(v) => {
                        next.insert(v.clone());
                    }
                    Label::Close(v) => {
                        next.remove(v);
                    }
                    _ => {}
                }
                match open.get(to) {
                    None => {
                        open.insert(*to, next);
                        queue.push_back(*to);
                    }
                    Some(prev) => {
                        if *prev != next {
                            return Err(Error::Internal(format!(
                                "state {to} has two distinct open-variable sets"
                            )));
                        }
                    }
                }
            }
        }
        Ok(open)
    }

    /// Summary counts and flags, used by the CLI `--stats` output.
    pub fn stats(&self) -> VaStats {
        VaStats {
            states: self.num_states,
            transitions: self.transitions.len(),
            variables: self.variables.len(),
            flags: self.flags,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct VaStats {
    pub states: usize,
    pub transitions: usize,
    pub variables: usize,
    pub flags: Flags,
}

/// Incremental assembly of a [`Va`]. `build` certifies the flags of the
/// result; use it for trusted construction code and [`VaBuilder::try_build`]
/// for untrusted input.
#[derive(Debug, Default)]
pub struct VaBuilder {
    num_states: usize,
    initial: Option<StateId>,
    finals: BTreeSet<StateId>,
    transitions: BTreeSet<(StateId, Label, StateId)>,
    notes: Vec<String>,
}

impl VaBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_state(&mut self) -> StateId {
        self.add_state_note(String::new())
    }

    pub fn add_state_note(&mut self, note: String) -> StateId {
        let id = self.num_states;
        self.num_states += 1;
        self.notes.push(note);
        id
    }

    pub fn set_initial(&mut self, q: StateId) {
        self.initial = Some(q);
    }

    pub fn mark_final(&mut self, q: StateId) {
        self.finals.insert(q);
    }

    pub fn add_transition(&mut self, from: StateId, label: Label, to: StateId) {
        self.transitions.insert((from, label, to));
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn build(self, alphabet: Alphabet, variables: BTreeSet<Var>) -> Va {
        self.try_build(alphabet, variables).expect("builder invariant violated")
    }

    pub fn try_build(self, alphabet: Alphabet, variables: BTreeSet<Var>) -> Result<Va> {
        let initial = self
            .initial
            .ok_or_else(|| Error::InvalidInput("automaton has no initial state".into()))?;
        if initial >= self.num_states {
            return Err(Error::InvalidInput("initial state out of range".into()));
        }
        for q in &self.finals {
            if *q >= self.num_states {
                return Err(Error::InvalidInput("final state out of range".into()));
            }
        }
        for (from, label, to) in &self.transitions {
            if *from >= self.num_states || *to >= self.num_states {
                return Err(Error::InvalidInput("transition endpoint out of range".into()));
            }
            match label {
                Label::Letter(c) if !alphabet.contains(*c) => {
                    return Err(Error::LetterOutsideAlphabet(*c));
                }
                Label::Open(v) | Label::Close(v) if !variables.contains(v) => {
                    return Err(Error::InvalidInput(format!("marker variable {v} not declared")));
                }
                _ => {}
            }
        }
        let transitions: Vec<_> = self.transitions.into_iter().collect();
        let mut adj: Vec<Vec<(Label, StateId)>> = vec![Vec::new(); self.num_states];
        for (from, label, to) in &transitions {
            adj[*from].push((label.clone(), *to));
        }
        let mut va = Va {
            alphabet,
            variables,
            num_states: self.num_states,
            initial,
            finals: self.finals,
            transitions,
            adj,
            flags: Flags { sequential: false, functional: false, ordered: false, deterministic: false },
            notes: self.notes,
        };
        va.flags = compute_flags(&va);
        Ok(va)
    }
}

/// Checks sequentiality: no accepting run opens a variable twice, closes an
/// unopened variable, or leaves a variable open. Returns the per-state
/// open-variable annotation when the check succeeds.
///
/// The scan works per variable over the live (trimmed) part: a BFS over
/// `(state, status)` with status in unseen/open/closed. A violation for the
/// full status-vector walk projects to a violation for some single variable
/// and vice versa, so the per-variable scan gives the same answer in
/// polynomial time.
pub fn check_sequential(va: &Va) -> (bool, Option<OpenSetAnnotation>) {
    match first_sequentiality_violation(va) {
        Some(_) => (false, None),
        None => {
            let annotation = va.open_sets().ok();
            (true, annotation)
        }
    }
}

/// The first variable witnessing a sequentiality violation, if any.
pub(crate) fn first_sequentiality_violation(va: &Va) -> Option<Var> {
    let live = va.live_states();
    if !live.contains(&va.initial) {
        return None; // empty spanner is vacuously sequential
    }
    for var in &va.variables {
        if var_violates(va, &live, var) {
            return Some(var.clone());
        }
    }
    None
}

fn var_violates(va: &Va, live: &BTreeSet<StateId>, var: &Var) -> bool {
    const UNSEEN: u8 = 0;
    const OPEN: u8 = 1;
    const CLOSED: u8 = 2;
    let mut seen = vec![[false; 3]; va.num_states];
    seen[va.initial][UNSEEN as usize] = true;
    let mut queue = VecDeque::from([(va.initial, UNSEEN)]);
    while let Some((q, st)) = queue.pop_front() {
        if va.finals.contains(&q) && st == OPEN {
            return true; // variable left open at a final state
        }
        for (label, to) in &va.adj[q] {
            if !live.contains(to) {
                continue;
            }
            let next = match label {
                Label::Open(v) if v == var => {
                    if st != UNSEEN {
                        return true; // reopened
                    }
                    OPEN
                }
                Label::Close(v) if v == var => {
                    if st != OPEN {
                        return true; // closed while not open
                    }
                    CLOSED
                }
                _ => st,
            };
            if !seen[*to][next as usize] {
                seen[*to][next as usize] = true;
                queue.push_back((*to, next));
            }
        }
    }
    false
}

/// Checks functionality: every accepting run assigns every declared
/// variable. Requires a sequential automaton, on which it suffices to check
/// per variable that no accepting run avoids the variable's markers.
pub fn check_functional(va: &Va) -> Result<bool> {
    if !va.flags.sequential {
        return Err(Error::NonSequentialInput("check_functional"));
    }
    Ok(functional_of_sequential(va))
}

fn functional_of_sequential(va: &Va) -> bool {
    for var in &va.variables {
        if accepts_avoiding(va, var) {
            return false;
        }
    }
    true
}

/// True iff some accepting run never touches `var`'s markers.
fn accepts_avoiding(va: &Va, var: &Var) -> bool {
    let mut seen = vec![false; va.num_states];
    seen[va.initial] = true;
    let mut queue = VecDeque::from([va.initial]);
    while let Some(q) = queue.pop_front() {
        if va.finals.contains(&q) {
            return true;
        }
        for (label, to) in &va.adj[q] {
            if label.var() == Some(var) {
                continue;
            }
            if !seen[*to] {
                seen[*to] = true;
                queue.push_back(*to);
            }
        }
    }
    false
}

fn compute_flags(va: &Va) -> Flags {
    let sequential = first_sequentiality_violation(va).is_none();
    let functional = sequential && functional_of_sequential(va);
    let ordered = sequential && check_ordered_live(va);
    let deterministic = check_deterministic(va);
    Flags { sequential, functional, ordered, deterministic }
}

/// Blocks of consecutive markers on live paths must be sorted by the
/// canonical order. Epsilon edges are transparent to blocks.
fn check_ordered_live(va: &Va) -> bool {
    let live = va.live_states();
    // preceding[q]: markers that can occur immediately before reaching q
    // (through epsilon edges) on a live path.
    let mut preceding: Vec<BTreeSet<Marker>> = vec![BTreeSet::new(); va.num_states];
    let mut changed = true;
    for (from, label, to) in &va.transitions {
        if live.contains(from) && live.contains(to) {
            if let Some(m) = label.marker() {
                preceding[*to].insert(m);
            }
        }
    }
    while changed {
        changed = false;
        for (from, label, to) in &va.transitions {
            if label.is_eps() && live.contains(from) && live.contains(to) {
                let add: Vec<Marker> =
                    preceding[*from].iter().filter(|m| !preceding[*to].contains(*m)).cloned().collect();
                if !add.is_empty() {
                    preceding[*to].extend(add);
                    changed = true;
                }
            }
        }
    }
    for (from, label, to) in &va.transitions {
        if !live.contains(from) || !live.contains(to) {
            continue;
        }
        if let Some(m2) = label.marker() {
            if preceding[*from].iter().any(|m1| *m1 >= m2) {
                return false;
            }
        }
    }
    true
}

/// Complete and deterministic over the full symbol set (letters of the
/// alphabet plus markers of the declared variables), with no epsilon moves.
fn check_deterministic(va: &Va) -> bool {
    if va.has_eps() {
        return false;
    }
    let symbol_count = va.alphabet.len() + 2 * va.variables.len();
    for q in 0..va.num_states {
        let mut seen: BTreeSet<&Label> = BTreeSet::new();
        for (label, _) in &va.adj[q] {
            if !seen.insert(label) {
                return false; // two transitions on the same symbol
            }
        }
        if seen.len() != symbol_count {
            return false; // incomplete
        }
    }
    true
}

// --- JSON wire format -------------------------------------------------

#[derive(Serialize, Deserialize)]
struct VaJson {
    alphabet: Vec<String>,
    variables: Vec<String>,
    states: usize,
    initial: usize,
    finals: Vec<usize>,
    transitions: Vec<TransitionJson>,
}

#[derive(Serialize, Deserialize)]
struct TransitionJson {
    from: usize,
    label: LabelJson,
    to: usize,
}

#[derive(Serialize, Deserialize)]
struct LabelJson {
    #[serde(rename = "type")]
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<String>,
}

impl Va {
    pub fn to_json(&self) -> serde_json::Value {
        let doc = VaJson {
            alphabet: self.alphabet.letters().map(|c| c.to_string()).collect(),
            variables: self.variables.iter().map(|v| v.to_string()).collect(),
            states: self.num_states,
            initial: self.initial,
            finals: self.finals.iter().copied().collect(),
            transitions: self
                .transitions
                .iter()
                .map(|(from, label, to)| TransitionJson {
                    from: *from,
                    to: *to,
                    label: match label {
                        Label::Eps => LabelJson { kind: "eps".into(), value: None },
                        Label::Letter(c) => {
                            LabelJson { kind: "letter".into(), value: Some(c.to_string()) }
                        }
                        Label::Open(v) => LabelJson { kind: "open".into(), value: Some(v.to_string()) },
                        Label::Close(v) => {
                            LabelJson { kind: "close".into(), value: Some(v.to_string()) }
                        }
                    },
                })
                .collect(),
        };
        serde_json::to_value(doc).expect("VA serialization cannot fail")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Va> {
        let doc: VaJson = serde_json::from_value(value.clone())
            .map_err(|e| Error::InvalidInput(format!("bad VA JSON: {e}")))?;
        let mut alphabet_chars = Vec::new();
        for s in &doc.alphabet {
            let mut it = s.chars();
            match (it.next(), it.next()) {
                (Some(c), None) => alphabet_chars.push(c),
                _ => return Err(Error::InvalidInput(format!("alphabet entry {s:?} is not one letter"))),
            }
        }
        let alphabet = Alphabet::new(alphabet_chars);
        let mut variables = BTreeSet::new();
        for s in &doc.variables {
            variables.insert(Var::parse(s)?);
        }
        let mut b = VaBuilder::new();
        for _ in 0..doc.states {
            b.add_state();
        }
        if doc.states == 0 {
            return Err(Error::InvalidInput("automaton must have at least one state".into()));
        }
        b.set_initial(doc.initial);
        for f in doc.finals {
            if f >= doc.states {
                return Err(Error::InvalidInput("final state out of range".into()));
            }
            b.mark_final(f);
        }
        for t in doc.transitions {
            let label = match t.label.kind.as_str() {
                "eps" => Label::Eps,
                "letter" => {
                    let s = t.label.value.ok_or_else(|| {
                        Error::InvalidInput("letter transition without value".into())
                    })?;
                    let mut it = s.chars();
                    match (it.next(), it.next()) {
                        (Some(c), None) => Label::Letter(c),
                        _ => return Err(Error::InvalidInput(format!("letter {s:?} is not one character"))),
                    }
                }
                "open" | "close" => {
                    let s = t.label.value.ok_or_else(|| {
                        Error::InvalidInput("marker transition without value".into())
                    })?;
                    let v = Var::parse(&s)?;
                    if t.label.kind == "open" {
                        Label::Open(v)
                    } else {
                        Label::Close(v)
                    }
                }
                other => return Err(Error::InvalidInput(format!("unknown label type {other:?}"))),
            };
            b.add_transition(t.from, label, t.to);
        }
        b.try_build(alphabet, variables)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::evaluate;
    use crate::genbench::{random_doc, random_va, RandomVaLimits};
    use crate::regexformula::parse;
    use crate::spancore::{Mapping, Span};
    use std::collections::BTreeSet;

    fn ab() -> Alphabet {
        Alphabet::from_letters("ab")
    }

    fn compile(src: &str) -> Va {
        parse(src, &ab()).unwrap().compile(&ab()).unwrap()
    }

    fn mapping(pairs: &[(&str, (usize, usize))]) -> Mapping {
        Mapping::from_pairs(pairs.iter().map(|(v, (b, e))| (Var::new(v), Span::new(*b, *e))))
    }

    fn eval_all(va: &Va, texts: &[&str]) -> Vec<BTreeSet<Mapping>> {
        texts.iter().map(|t| evaluate(va, &ab().document(t).unwrap()).unwrap()).collect()
    }

    const DOCS: &[&str] = &["", "a", "b", "ab", "ba", "aa", "abab", "bbaa", "aba"];

    #[test]
    fn trim_removes_dead_states_and_is_idempotent() {
        let base = compile("a");
        // graft an unreachable state and a dead-end branch onto a copy
        let mut b = VaBuilder::new();
        for q in 0..base.num_states() {
            b.add_state();
            let _ = q;
        }
        let dead_end = b.add_state();
        let unreachable = b.add_state();
        b.set_initial(base.initial());
        for f in base.finals() {
            b.mark_final(*f);
        }
        for (from, label, to) in base.transitions() {
            b.add_transition(*from, label.clone(), *to);
        }
        b.add_transition(base.initial(), Label::Letter('b'), dead_end);
        b.add_transition(unreachable, Label::Letter('a'), base.initial());
        let grafted = b.build(ab(), BTreeSet::new());
        let trimmed = trim(&grafted);
        assert_eq!(trimmed.num_states(), base.num_states());
        assert_eq!(eval_all(&trimmed, DOCS), eval_all(&base, DOCS));
        let again = trim(&trimmed);
        assert_eq!(again.num_states(), trimmed.num_states());
        assert_eq!(again.transitions().len(), trimmed.transitions().len());
    }

    #[test]
    fn trim_of_unsatisfiable_automaton_is_canonical_empty() {
        let mut b = VaBuilder::new();
        let s = b.add_state();
        let t = b.add_state();
        b.set_initial(s);
        b.add_transition(s, Label::Letter('a'), t); // no final state at all
        let va = b.build(ab(), BTreeSet::new());
        let trimmed = trim(&va);
        assert_eq!(trimmed.num_states(), 1);
        assert!(trimmed.finals().is_empty());
        assert!(trimmed.transitions().is_empty());
        assert!(trimmed.is_empty_spanner());
    }

    #[test]
    fn epsilon_elimination_keeps_states_and_language() {
        let mut b = VaBuilder::new();
        let s = b.add_state();
        let t = b.add_state();
        b.set_initial(s);
        b.mark_final(t);
        b.add_transition(s, Label::Eps, t);
        b.add_transition(s, Label::Letter('a'), s);
        let va = b.build(ab(), BTreeSet::new());
        let out = eliminate_epsilon(&va);
        assert!(!out.has_eps());
        assert_eq!(out.num_states(), va.num_states());
        assert!(out.is_final(s), "source of an epsilon edge to a final state becomes final");
        // epsilon-free input is returned unchanged
        let plain = compile("a|b");
        let same = eliminate_epsilon(&plain);
        assert_eq!(same.num_states(), plain.num_states());
        assert_eq!(eval_all(&same, DOCS), eval_all(&plain, DOCS));
    }

    #[test]
    fn sequentiality_check_examples() {
        assert!(compile("x{a*} b a*|a* b x{a*}").flags().sequential);
        // self-loop open marker on a final state
        let x = Var::new("x");
        let mut b = VaBuilder::new();
        let s = b.add_state();
        b.set_initial(s);
        b.mark_final(s);
        b.add_transition(s, Label::Open(x.clone()), s);
        let va = b.build(ab(), BTreeSet::from([x.clone()]));
        let (ok, _) = check_sequential(&va);
        assert!(!ok);
        // linear double assignment |-x a -|x |-x b -|x
        let mut b = VaBuilder::new();
        let states: Vec<_> = (0..7).map(|_| b.add_state()).collect();
        b.set_initial(states[0]);
        b.mark_final(states[6]);
        b.add_transition(states[0], Label::Open(x.clone()), states[1]);
        b.add_transition(states[1], Label::Letter('a'), states[2]);
        b.add_transition(states[2], Label::Close(x.clone()), states[3]);
        b.add_transition(states[3], Label::Open(x.clone()), states[4]);
        b.add_transition(states[4], Label::Letter('b'), states[5]);
        b.add_transition(states[5], Label::Close(x.clone()), states[6]);
        let va = b.build(ab(), BTreeSet::from([x.clone()]));
        let (ok, _) = check_sequential(&va);
        assert!(!ok, "x is assigned twice on the accepting run");
    }

    #[test]
    fn open_set_annotation_is_single_valued() {
        let va = compile("x{a (a|b)*} y{b}");
        let (ok, annotation) = check_sequential(&va);
        assert!(ok);
        let annotation = annotation.unwrap();
        let x = Var::new("x");
        // some state has x open, the initial state has nothing open
        assert!(annotation.values().any(|s| s.contains(&x)));
        assert!(annotation[&va.initial()].is_empty());
    }

    #[test]
    fn open_sets_are_single_valued_on_random_automata() {
        let limits = RandomVaLimits::default();
        for seed in 1000..1100 {
            let va = random_va(seed, &limits);
            let annotation = va.open_sets().unwrap();
            assert!(annotation.contains_key(&va.initial()), "seed {seed}");
            assert!(annotation[&va.initial()].is_empty(), "seed {seed}");
            for f in va.finals() {
                if let Some(open) = annotation.get(f) {
                    assert!(open.is_empty(), "seed {seed}: final state with open variables");
                }
            }
        }
    }

    #[test]
    fn functionality_check_examples() {
        assert!(compile("x{a}").flags().functional);
        assert!(!compile("x{a}|a").flags().functional);
        assert!(compile("x{a}y{b}").flags().functional);
        assert!(!compile("x{a}y{b}|x{a}b").flags().functional);
    }

    #[test]
    fn order_markers_collapses_marker_permutations() {
        // automaton accepting |-x |-y a -|x -|y and |-x |-y a -|y -|x
        let x = Var::new("x");
        let y = Var::new("y");
        let mut b = VaBuilder::new();
        let q: Vec<_> = (0..8).map(|_| b.add_state()).collect();
        b.set_initial(q[0]);
        b.mark_final(q[5]);
        b.add_transition(q[0], Label::Open(x.clone()), q[1]);
        b.add_transition(q[1], Label::Open(y.clone()), q[2]);
        b.add_transition(q[2], Label::Letter('a'), q[3]);
        b.add_transition(q[3], Label::Close(x.clone()), q[4]);
        b.add_transition(q[4], Label::Close(y.clone()), q[5]);
        b.add_transition(q[3], Label::Close(y.clone()), q[6]);
        b.add_transition(q[6], Label::Close(x.clone()), q[5]);
        b.add_transition(q[7], Label::Letter('a'), q[7]); // unreachable
        let va = b.build(ab(), [x.clone(), y.clone()].into());
        assert!(!va.flags().ordered);
        let ordered = order_markers(&va).unwrap();
        assert!(ordered.flags().ordered);
        let d = ab().document("a").unwrap();
        assert_eq!(
            evaluate(&ordered, &d).unwrap(),
            evaluate(&va, &d).unwrap(),
            "mappings unchanged"
        );
        // exactly one accepted ref-word remains for the single mapping
        let canonical = crate::spancore::canonical_refword(
            &d,
            &mapping(&[("x", (0, 1)), ("y", (0, 1))]),
        )
        .unwrap();
        assert!(ordered.accepts_refword(&canonical));
        let mut flipped = canonical.clone();
        flipped.0.swap(3, 4);
        assert!(va.accepts_refword(&flipped));
        assert!(!ordered.accepts_refword(&flipped));
    }

    #[test]
    fn order_markers_idempotent_and_harmless_on_plain_automata() {
        let plain = compile("a b|b a");
        let ordered = order_markers(&plain).unwrap();
        assert_eq!(eval_all(&ordered, DOCS), eval_all(&plain, DOCS));
        let va = compile("x{a}y{b}");
        let once = order_markers(&va).unwrap();
        let twice = order_markers(&once).unwrap();
        assert_eq!(once.num_states(), twice.num_states());
        assert_eq!(eval_all(&once, DOCS), eval_all(&va, DOCS));
    }

    #[test]
    fn determinization_examples() {
        let va = order_markers(&compile("a|a")).unwrap();
        let det = determinize_refwords(&va).unwrap();
        assert!(det.flags().deterministic);
        assert!(det.flags().ordered);
        assert_eq!(eval_all(&det, DOCS), eval_all(&va, DOCS));
        for seed in 0..50 {
            let limits = RandomVaLimits { max_states: 4, ..Default::default() };
            let random = random_va(seed, &limits);
            let ordered = order_markers(&random).unwrap();
            let det = determinize_refwords(&ordered).unwrap();
            assert!(det.flags().deterministic, "seed {seed}");
            for len in 0..=4 {
                let d = random_doc(seed + 1000, len, &ab());
                assert_eq!(
                    evaluate(&det, &d).unwrap(),
                    evaluate(&random, &d).unwrap(),
                    "seed {seed} len {len}"
                );
            }
        }
    }

    #[test]
    fn algebra_examples_from_the_operation_table() {
        // join
        let j = join(&compile("x{a}b"), &compile("a y{b}")).unwrap();
        let d = ab().document("ab").unwrap();
        assert_eq!(
            evaluate(&j, &d).unwrap(),
            BTreeSet::from([mapping(&[("x", (0, 1)), ("y", (1, 2))])])
        );
        // difference
        let diff = difference(&compile("x{a}|a"), &compile("a")).unwrap();
        let d = ab().document("a").unwrap();
        assert_eq!(evaluate(&diff, &d).unwrap(), BTreeSet::from([mapping(&[("x", (0, 1))])]));
        // intersection
        let inter = intersection(&compile("x{a}|a"), &compile("x{a}|b")).unwrap();
        assert_eq!(evaluate(&inter, &d).unwrap(), BTreeSet::from([mapping(&[("x", (0, 1))])]));
        // projection
        let p = project(&compile("x{a}y{b}"), &BTreeSet::from([Var::new("x")])).unwrap();
        let d = ab().document("ab").unwrap();
        assert_eq!(evaluate(&p, &d).unwrap(), BTreeSet::from([mapping(&[("x", (0, 1))])]));
        // boolean projection
        let p0 = project(&compile("x{a}"), &BTreeSet::new()).unwrap();
        let d = ab().document("a").unwrap();
        assert_eq!(evaluate(&p0, &d).unwrap(), BTreeSet::from([Mapping::empty()]));
        // dagger renaming
        let dag = rename_dagger(&compile("x{a}")).unwrap();
        let got = evaluate(&dag, &d).unwrap();
        let expected =
            BTreeSet::from([Mapping::from_pairs([(Var::new("x").dagger(), Span::new(0, 1))])]);
        assert_eq!(got, expected);
    }

    #[test]
    fn concat_agrees_with_formula_concatenation() {
        // two routes to the same spanner: the automata-level concatenation
        // versus compiling the concatenated formula
        let cases = [
            ("x{a}", "y{b*}"),
            ("x{a*}|b", "y{b} a"),
            ("a|x{b}", "eps"),
        ];
        for (left, right) in cases {
            let e1 = parse(left, &ab()).unwrap();
            let e2 = parse(right, &ab()).unwrap();
            let via_automata =
                concat(&e1.compile(&ab()).unwrap(), &e2.compile(&ab()).unwrap()).unwrap();
            let via_formula = crate::regexformula::RegexFormula::concat(e1, e2)
                .compile(&ab())
                .unwrap();
            assert_eq!(
                eval_all(&via_automata, DOCS),
                eval_all(&via_formula, DOCS),
                "{left} . {right}"
            );
        }
    }

    #[test]
    fn variable_clash_is_reported() {
        assert!(matches!(
            cartesian_product(&compile("x{a}"), &compile("x{b}")),
            Err(crate::error::Error::VariableClash(_))
        ));
        assert!(matches!(
            concat(&compile("x{a}"), &compile("x{b}")),
            Err(crate::error::Error::VariableClash(_))
        ));
    }

    #[test]
    fn decompose_examples() {
        let parts = decompose(&compile("x{a}|a")).unwrap();
        assert_eq!(parts.len(), 2);
        let d = ab().document("a").unwrap();
        for (vars, part) in &parts {
            assert!(part.flags().functional, "{vars:?}");
            let got = evaluate(part, &d).unwrap();
            if vars.is_empty() {
                assert_eq!(got, BTreeSet::from([Mapping::empty()]));
            } else {
                assert_eq!(*vars, BTreeSet::from([Var::new("x")]));
                assert_eq!(got, BTreeSet::from([mapping(&[("x", (0, 1))])]));
            }
        }
        // functional automaton decomposes into itself
        let f = compile("x{a}");
        let parts = decompose(&f).unwrap();
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].0, BTreeSet::from([Var::new("x")]));
        // two-part schema mix
        let parts = decompose(&compile("x{a}y{b}|x{a}b")).unwrap();
        let domains: BTreeSet<BTreeSet<Var>> = parts.iter().map(|(x, _)| x.clone()).collect();
        assert_eq!(
            domains,
            BTreeSet::from([
                BTreeSet::from([Var::new("x")]),
                BTreeSet::from([Var::new("x"), Var::new("y")]),
            ])
        );
    }

    #[test]
    fn decompose_parts_partition_the_output() {
        let limits = RandomVaLimits::default();
        for seed in 0..60 {
            let va = random_va(seed, &limits);
            let parts = decompose(&va).unwrap();
            for len in 0..=4 {
                let d = random_doc(seed * 31 + len as u64, len, &ab());
                let total = evaluate(&va, &d).unwrap();
                let mut union: BTreeSet<Mapping> = BTreeSet::new();
                for (vars, part) in &parts {
                    let got = evaluate(part, &d).unwrap();
                    for m in &got {
                        assert_eq!(&m.domain_set(), vars, "seed {seed}");
                        assert!(union.insert(m.clone()), "parts overlap at {m} (seed {seed})");
                    }
                }
                assert_eq!(union, total, "seed {seed} len {len}");
            }
        }
    }

    #[test]
    fn binary_algebra_agrees_with_set_operations_on_random_instances() {
        let limits = RandomVaLimits { max_states: 5, max_vars: 3, ..Default::default() };
        for seed in 0..40 {
            let a = random_va(seed * 2 + 1, &limits);
            let b = random_va(seed * 2 + 2, &limits);
            let ops: Vec<(&str, crate::error::Result<Va>)> = vec![
                ("union", union(&a, &b)),
                ("join", join(&a, &b)),
                ("intersection", intersection(&a, &b)),
                ("difference", difference(&a, &b)),
            ];
            for len in 0..=3 {
                let d = random_doc(seed * 7 + len as u64, len, &ab());
                let ma = evaluate(&a, &d).unwrap();
                let mb = evaluate(&b, &d).unwrap();
                for (name, result) in &ops {
                    let out = result.as_ref().unwrap();
                    let got = evaluate(out, &d).unwrap();
                    let expected: BTreeSet<Mapping> = match *name {
                        "union" => ma.union(&mb).cloned().collect(),
                        "intersection" => ma.intersection(&mb).cloned().collect(),
                        "difference" => ma.difference(&mb).cloned().collect(),
                        "join" => {
                            let mut out = BTreeSet::new();
                            for m1 in &ma {
                                for m2 in &mb {
                                    if m1.compatible(m2) {
                                        out.insert(m1.merge(m2).unwrap());
                                    }
                                }
                            }
                            out
                        }
                        _ => unreachable!(),
                    };
                    assert_eq!(got, expected, "{name} seed {seed} len {len} doc {d}");
                }
            }
        }
    }

    #[test]
    fn va_json_round_trip() {
        let va = compile("x{a*} b a*|a* b x{a*}");
        let json = va.to_json();
        let back = Va::from_json(&json).unwrap();
        assert_eq!(eval_all(&back, DOCS), eval_all(&va, DOCS));
        assert_eq!(back.num_states(), va.num_states());
        assert!(Va::from_json(&serde_json::json!({"bogus": true})).is_err());
        let mut bad = json.clone();
        bad["initial"] = serde_json::json!(99);
        assert!(Va::from_json(&bad).is_err());
    }
}
