//! Normalization passes: trimming, epsilon elimination, quotienting by
//! bisimilar states, canonical marker ordering, and the subset construction
//! over ref-words.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::spancore::Marker;

use super::{Label, StateId, Va, VaBuilder};

/// Removes every state that is not part of an accepting run. The spanner is
/// unchanged; a spanner with no accepting run collapses to the canonical
/// empty automaton.
pub fn trim(va: &Va) -> Va {
    let live = va.live_states();
    if !live.contains(&va.initial) || !va.finals.iter().any(|f| live.contains(f)) {
        return Va::empty_spanner(va.alphabet.clone(), va.variables.clone());
    }
    let mut renumber: BTreeMap<StateId, StateId> = BTreeMap::new();
    let mut b = VaBuilder::new();
    for q in &live {
        renumber.insert(*q, b.add_state_note(va.state_note(*q).to_string()));
    }
    b.set_initial(renumber[&va.initial]);
    for f in &va.finals {
        if let Some(nf) = renumber.get(f) {
            b.mark_final(*nf);
        }
    }
    for (from, label, to) in &va.transitions {
        if let (Some(nf), Some(nt)) = (renumber.get(from), renumber.get(to)) {
            b.add_transition(*nf, label.clone(), *nt);
        }
    }
    b.build(va.alphabet.clone(), va.variables.clone())
}

/// Rewrites away epsilon transitions without changing the ref-word language
/// or the number of states: states with an epsilon path to a final state
/// become final, and every letter or marker transition is pulled back
/// across epsilon paths.
pub fn eliminate_epsilon(va: &Va) -> Va {
    if !va.has_eps() {
        return va.clone();
    }
    // forward epsilon closure per state
    let mut closure: Vec<BTreeSet<StateId>> = Vec::with_capacity(va.num_states);
    for q in 0..va.num_states {
        let mut seen = BTreeSet::from([q]);
        let mut queue = VecDeque::from([q]);
        while let Some(s) = queue.pop_front() {
            for (label, to) in &va.adj[s] {
                if label.is_eps() && seen.insert(*to) {
                    queue.push_back(*to);
                }
            }
        }
        closure.push(seen);
    }
    let mut b = VaBuilder::new();
    for q in 0..va.num_states {
        b.add_state_note(va.state_note(q).to_string());
    }
    b.set_initial(va.initial);
    for (q, reach) in closure.iter().enumerate() {
        if reach.iter().any(|r| va.finals.contains(r)) {
            b.mark_final(q);
        }
        for r in reach {
            for (label, to) in &va.adj[*r] {
                if !label.is_eps() {
                    b.add_transition(q, label.clone(), *to);
                }
            }
        }
    }
    b.build(va.alphabet.clone(), va.variables.clone())
}

/// Quotients the automaton by iterated forward and backward bisimilarity.
/// This keeps constructions from piling up duplicate states; it preserves
/// the ref-word language exactly and is not minimization.
pub(crate) fn reduce(va: &Va) -> Va {
    let mut current = trim(va);
    for round in 0..6 {
        let forward = round % 2 == 0;
        let classes = bisim_classes(&current, forward);
        let num_classes = classes.iter().max().map(|m| m + 1).unwrap_or(0);
        if num_classes == current.num_states {
            if forward {
                continue;
            } else {
                break;
            }
        }
        let mut b = VaBuilder::new();
        let mut note: Vec<String> = vec![String::new(); num_classes];
        for q in 0..current.num_states {
            if note[classes[q]].is_empty() {
                note[classes[q]] = current.state_note(q).to_string();
            }
        }
        for n in note {
            b.add_state_note(n);
        }
        b.set_initial(classes[current.initial]);
        for f in &current.finals {
            b.mark_final(classes[*f]);
        }
        for (from, label, to) in &current.transitions {
            b.add_transition(classes[*from], label.clone(), classes[*to]);
        }
        current = b.build(current.alphabet.clone(), current.variables.clone());
    }
    current
}

/// Partition refinement by outgoing (forward) or incoming (backward)
/// signatures.
fn bisim_classes(va: &Va, forward: bool) -> Vec<usize> {
    let mut class: Vec<usize> = (0..va.num_states)
        .map(|q| {
            if forward {
                usize::from(va.finals.contains(&q))
            } else {
                usize::from(q == va.initial)
            }
        })
        .collect();
    loop {
        let mut sig_of: BTreeMap<(usize, Vec<(Label, usize)>), usize> = BTreeMap::new();
        let mut next: Vec<usize> = vec![0; va.num_states];
        let mut sigs: Vec<BTreeSet<(Label, usize)>> = vec![BTreeSet::new(); va.num_states];
        for (from, label, to) in &va.transitions {
            if forward {
                sigs[*from].insert((label.clone(), class[*to]));
            } else {
                sigs[*to].insert((label.clone(), class[*from]));
            }
        }
        for q in 0..va.num_states {
            let key = (class[q], sigs[q].iter().cloned().collect::<Vec<_>>());
            let fresh = sig_of.len();
            let id = *sig_of.entry(key).or_insert(fresh);
            next[q] = id;
        }
        if next == class {
            return class;
        }
        class = next;
    }
}

/// Rewrites a sequential automaton so that every maximal block of markers in
/// an accepted ref-word is sorted by the canonical total order (opens before
/// closes, each group by variable). The spanner is unchanged and each
/// accepted mapping then corresponds to exactly one accepted ref-word.
pub fn order_markers(va: &Va) -> Result<Va> {
    if !va.flags.sequential {
        return Err(Error::NonSequentialInput("order_markers"));
    }
    if va.flags.ordered && !va.has_eps() {
        return Ok(va.clone());
    }
    let base = trim(&eliminate_epsilon(va));
    if base.is_empty_spanner() {
        return Ok(base);
    }
    let n = base.num_states;
    let mut b = VaBuilder::new();
    for q in 0..n {
        b.add_state_note(base.state_note(q).to_string());
    }
    for q in 0..n {
        b.add_state_note(format!("{}'", base.state_note(q)));
    }
    b.set_initial(base.initial);
    for f in &base.finals {
        b.mark_final(*f);
        b.mark_final(*f + n);
    }
    // Letter transitions run from both copies into the unprimed copy.
    for (from, label, to) in &base.transitions {
        if let Label::Letter(_) = label {
            b.add_transition(*from, label.clone(), *to);
            b.add_transition(*from + n, label.clone(), *to);
        }
    }
    // For every marker-only path, add a sorted path into the primed copy.
    // Marker paths of a trimmed sequential automaton never repeat a marker,
    // so the walk over (state, marker set) terminates.
    for start in 0..n {
        let mut paths: BTreeSet<(StateId, Vec<Marker>)> = BTreeSet::new();
        let mut seen: BTreeSet<(StateId, BTreeSet<Marker>)> = BTreeSet::new();
        let mut stack: Vec<(StateId, BTreeSet<Marker>)> = vec![(start, BTreeSet::new())];
        while let Some((q, markers)) = stack.pop() {
            for (label, to) in &base.adj[q] {
                if let Some(m) = label.marker() {
                    if markers.contains(&m) {
                        return Err(Error::Internal(format!(
                            "marker {m} repeats on a marker path of a trimmed sequential automaton"
                        )));
                    }
                    let mut next = markers.clone();
                    next.insert(m);
                    if seen.insert((*to, next.clone())) {
                        paths.insert((*to, next.iter().cloned().collect()));
                        stack.push((*to, next));
                    }
                }
            }
        }
        for (end, sorted_markers) in paths {
            let mut at = start;
            for (i, m) in sorted_markers.iter().enumerate() {
                let next = if i + 1 == sorted_markers.len() { end + n } else { b.add_state() };
                let label = match m {
                    Marker::Open(v) => Label::Open(v.clone()),
                    Marker::Close(v) => Label::Close(v.clone()),
                };
                b.add_transition(at, label, next);
                at = next;
            }
        }
    }
    let out = b.build(base.alphabet.clone(), base.variables.clone());
    Ok(reduce(&out))
}

/// Subset construction over the extended alphabet (letters plus markers of
/// the declared variables), completed with a sink so that every state has
/// exactly one successor per symbol. Requires an ordered sequential input;
/// the accepted ref-word language is unchanged.
pub fn determinize_refwords(va: &Va) -> Result<Va> {
    if !va.flags.sequential {
        return Err(Error::NonSequentialInput("determinize_refwords"));
    }
    if !va.flags.ordered {
        return Err(Error::InvalidInput("determinize_refwords requires an ordered automaton".into()));
    }
    Ok(determinize_raw(va))
}

/// The subset construction itself, without precondition checks; also used
/// on the right-hand side of the difference construction.
pub(crate) fn determinize_raw(va: &Va) -> Va {
    debug_assert!(!va.has_eps(), "determinization expects an epsilon-free automaton");
    let mut symbols: Vec<Label> = va.alphabet.letters().map(Label::Letter).collect();
    for v in &va.variables {
        symbols.push(Label::Open(v.clone()));
        symbols.push(Label::Close(v.clone()));
    }
    let mut b = VaBuilder::new();
    let mut ids: BTreeMap<BTreeSet<StateId>, StateId> = BTreeMap::new();
    let start: BTreeSet<StateId> = BTreeSet::from([va.initial]);
    let note = |set: &BTreeSet<StateId>| {
        let items: Vec<String> = set.iter().map(|q| q.to_string()).collect();
        format!("{{{}}}", items.join(","))
    };
    let mut queue: VecDeque<BTreeSet<StateId>> = VecDeque::new();
    let start_id = b.add_state_note(note(&start));
    ids.insert(start.clone(), start_id);
    b.set_initial(start_id);
    queue.push_back(start);
    while let Some(set) = queue.pop_front() {
        let id = ids[&set];
        if set.iter().any(|q| va.finals.contains(q)) {
            b.mark_final(id);
        }
        for sym in &symbols {
            let mut target: BTreeSet<StateId> = BTreeSet::new();
            for q in &set {
                for (label, to) in &va.adj[*q] {
                    if label == sym {
                        target.insert(*to);
                    }
                }
            }
            let target_id = match ids.get(&target) {
                Some(t) => *t,
                None => {
                    let t = b.add_state_note(note(&target));
                    ids.insert(target.clone(), t);
                    queue.push_back(target);
                    t
                }
            };
            b.add_transition(id, sym.clone(), target_id);
        }
    }
    b.build(va.alphabet.clone(), va.variables.clone())
}
