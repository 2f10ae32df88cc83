//! The schemaless spanner algebra on sequential variable-set automata:
//! union, concatenation, Cartesian product, natural join, intersection,
//! difference, projection, dagger renaming, and the decomposition into
//! functional parts.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::spancore::{Alphabet, Var};

use super::normalize::{determinize_raw, eliminate_epsilon, order_markers, reduce, trim};
use super::{Label, StateId, Va, VaBuilder};

fn require_sequential(va: &Va, op: &'static str) -> Result<()> {
    if va.flags.sequential {
        Ok(())
    } else {
        Err(Error::NonSequentialInput(op))
    }
}

/// Rebuilds the automaton with enlarged declared variable and alphabet sets.
fn widen(va: &Va, alphabet: Alphabet, variables: BTreeSet<Var>) -> Va {
    let mut b = VaBuilder::new();
    for q in 0..va.num_states() {
        b.add_state_note(va.state_note(q).to_string());
    }
    b.set_initial(va.initial());
    for f in va.finals() {
        b.mark_final(*f);
    }
    for (from, label, to) in va.transitions() {
        b.add_transition(*from, label.clone(), *to);
    }
    b.build(alphabet, variables)
}

/// Union of arbitrarily many spanners over the given declarations.
fn union_all(parts: &[Va], alphabet: Alphabet, variables: BTreeSet<Var>) -> Va {
    if parts.is_empty() {
        return Va::empty_spanner(alphabet, variables);
    }
    let mut b = VaBuilder::new();
    let start = b.add_state();
    b.set_initial(start);
    for part in parts {
        let offset = b.num_states();
        for q in 0..part.num_states() {
            b.add_state_note(part.state_note(q).to_string());
        }
        b.add_transition(start, Label::Eps, part.initial() + offset);
        for f in part.finals() {
            b.mark_final(*f + offset);
        }
        for (from, label, to) in part.transitions() {
            b.add_transition(*from + offset, label.clone(), *to + offset);
        }
    }
    let raw = b.build(alphabet, variables);
    reduce(&trim(&eliminate_epsilon(&raw)))
}

/// `P_A(d) ∪ P_B(d)` on every document.
pub fn union(a: &Va, b: &Va) -> Result<Va> {
    require_sequential(a, "union")?;
    require_sequential(b, "union")?;
    let alphabet = a.alphabet().union(b.alphabet());
    let variables: BTreeSet<Var> = a.variables().union(b.variables()).cloned().collect();
    Ok(union_all(&[a.clone(), b.clone()], alphabet, variables))
}

/// Split matches of the document between the operands, which must use
/// disjoint variable sets.
pub fn concat(a: &Va, b: &Va) -> Result<Va> {
    require_sequential(a, "concat")?;
    require_sequential(b, "concat")?;
    if let Some(v) = a.variables().intersection(b.variables()).next() {
        return Err(Error::VariableClash(v.to_string()));
    }
    let alphabet = a.alphabet().union(b.alphabet());
    let variables: BTreeSet<Var> = a.variables().union(b.variables()).cloned().collect();
    let mut builder = VaBuilder::new();
    for q in 0..a.num_states() {
        builder.add_state_note(a.state_note(q).to_string());
    }
    let offset = a.num_states();
    for q in 0..b.num_states() {
        builder.add_state_note(b.state_note(q).to_string());
    }
    builder.set_initial(a.initial());
    for (from, label, to) in a.transitions() {
        builder.add_transition(*from, label.clone(), *to);
    }
    for (from, label, to) in b.transitions() {
        builder.add_transition(*from + offset, label.clone(), *to + offset);
    }
    for f in a.finals() {
        builder.add_transition(*f, Label::Eps, b.initial() + offset);
    }
    for f in b.finals() {
        builder.mark_final(*f + offset);
    }
    let raw = builder.build(alphabet, variables);
    Ok(reduce(&trim(&eliminate_epsilon(&raw))))
}

/// Merged pairs `P_A(d) × P_B(d)` over disjoint variable sets.
///
/// Letter transitions are synchronized; marker transitions interleave one
/// side at a time, with the left side going first at each position so that
/// each pair of runs has one canonical interleaving.
pub fn cartesian_product(a: &Va, b: &Va) -> Result<Va> {
    require_sequential(a, "cartesian_product")?;
    require_sequential(b, "cartesian_product")?;
    if let Some(v) = a.variables().intersection(b.variables()).next() {
        return Err(Error::VariableClash(v.to_string()));
    }
    let a = eliminate_epsilon(a);
    let b = eliminate_epsilon(b);
    let alphabet = a.alphabet().union(b.alphabet());
    let variables: BTreeSet<Var> = a.variables().union(b.variables()).cloned().collect();

    let mut builder = VaBuilder::new();
    let mut ids: BTreeMap<(StateId, StateId, u8), StateId> = BTreeMap::new();
    let start = (a.initial(), b.initial(), 0u8);
    let mut queue = VecDeque::from([start]);
    let sid = builder.add_state_note(format!("({},{})", a.initial(), b.initial()));
    ids.insert(start, sid);
    builder.set_initial(sid);
    while let Some(key @ (qa, qb, phase)) = queue.pop_front() {
        let id = ids[&key];
        if a.is_final(qa) && b.is_final(qb) {
            builder.mark_final(id);
        }
        let push = |builder: &mut VaBuilder,
                        ids: &mut BTreeMap<(StateId, StateId, u8), StateId>,
                        queue: &mut VecDeque<(StateId, StateId, u8)>,
                        label: Label,
                        next: (StateId, StateId, u8)| {
            let nid = match ids.get(&next) {
                Some(n) => *n,
                None => {
                    let n = builder.add_state_note(format!("({},{})", next.0, next.1));
                    ids.insert(next, n);
                    queue.push_back(next);
                    n
                }
            };
            builder.add_transition(id, label, nid);
        };
        for (la, ta) in a.outgoing(qa) {
            match la {
                Label::Letter(c) => {
                    for (lb, tb) in b.outgoing(qb) {
                        if *lb == Label::Letter(*c) {
                            push(&mut builder, &mut ids, &mut queue, la.clone(), (*ta, *tb, 0));
                        }
                    }
                }
                Label::Open(_) | Label::Close(_) if phase == 0 => {
                    push(&mut builder, &mut ids, &mut queue, la.clone(), (*ta, qb, 0));
                }
                _ => {}
            }
        }
        for (lb, tb) in b.outgoing(qb) {
            if lb.is_marker() {
                push(&mut builder, &mut ids, &mut queue, lb.clone(), (qa, *tb, 1));
            }
        }
    }
    let raw = builder.build(alphabet, variables);
    Ok(reduce(&trim(&raw)))
}

/// Natural join: merges of compatible mappings. Both sides are decomposed
/// into functional parts, each pair of parts is joined by a synchronized
/// product (letters and shared-variable markers fire jointly, private
/// markers interleave), and the non-empty results are unioned.
pub fn join(a: &Va, b: &Va) -> Result<Va> {
    require_sequential(a, "join")?;
    require_sequential(b, "join")?;
    let alphabet = a.alphabet().union(b.alphabet());
    let variables: BTreeSet<Var> = a.variables().union(b.variables()).cloned().collect();
    let parts_a = ordered_parts(a)?;
    let parts_b = ordered_parts(b)?;
    let mut parts = Vec::new();
    for (xa, pa) in &parts_a {
        for (xb, pb) in &parts_b {
            let joined = functional_join(pa, xa, pb, xb, &alphabet)?;
            if !joined.is_empty_spanner() {
                parts.push(joined);
            }
        }
    }
    Ok(union_all(&parts, alphabet, variables))
}

/// `P_A(d) ∩ P_B(d)`: decomposition into functional parts, then pairwise
/// join of the parts with equal domain (on which intersection and join
/// coincide), unioned.
pub fn intersection(a: &Va, b: &Va) -> Result<Va> {
    require_sequential(a, "intersection")?;
    require_sequential(b, "intersection")?;
    let alphabet = a.alphabet().union(b.alphabet());
    let variables: BTreeSet<Var> = a.variables().union(b.variables()).cloned().collect();
    let parts_a = ordered_parts(a)?;
    let parts_b = ordered_parts(b)?;
    let mut parts = Vec::new();
    for (xa, pa) in &parts_a {
        for (xb, pb) in &parts_b {
            if xa != xb {
                continue;
            }
            let joined = functional_join(pa, xa, pb, xb, &alphabet)?;
            if !joined.is_empty_spanner() {
                parts.push(joined);
            }
        }
    }
    Ok(union_all(&parts, alphabet, variables))
}

fn ordered_parts(va: &Va) -> Result<Vec<(BTreeSet<Var>, Va)>> {
    let mut out = Vec::new();
    for (x, part) in decompose(va)? {
        out.push((x, order_markers(&part)?));
    }
    Ok(out)
}

/// Product of two ordered functional parts with statically known domains.
fn functional_join(
    pa: &Va,
    xa: &BTreeSet<Var>,
    pb: &Va,
    xb: &BTreeSet<Var>,
    alphabet: &Alphabet,
) -> Result<Va> {
    let shared: BTreeSet<Var> = xa.intersection(xb).cloned().collect();
    let variables: BTreeSet<Var> = xa.union(xb).cloned().collect();
    let mut builder = VaBuilder::new();
    let mut ids: BTreeMap<(StateId, StateId), StateId> = BTreeMap::new();
    let start = (pa.initial(), pb.initial());
    let sid = builder.add_state_note(format!("({},{})", start.0, start.1));
    ids.insert(start, sid);
    builder.set_initial(sid);
    let mut queue = VecDeque::from([start]);
    while let Some(key @ (qa, qb)) = queue.pop_front() {
        let id = ids[&key];
        if pa.is_final(qa) && pb.is_final(qb) {
            builder.mark_final(id);
        }
        let push = |builder: &mut VaBuilder,
                        ids: &mut BTreeMap<(StateId, StateId), StateId>,
                        queue: &mut VecDeque<(StateId, StateId)>,
                        label: Label,
                        next: (StateId, StateId)| {
            let nid = match ids.get(&next) {
                Some(n) => *n,
                None => {
                    let n = builder.add_state_note(format!("({},{})", next.0, next.1));
                    ids.insert(next, n);
                    queue.push_back(next);
                    n
                }
            };
            builder.add_transition(id, label, nid);
        };
        for (la, ta) in pa.outgoing(qa) {
            match la {
                Label::Letter(c) => {
                    for (lb, tb) in pb.outgoing(qb) {
                        if *lb == Label::Letter(*c) {
                            push(&mut builder, &mut ids, &mut queue, la.clone(), (*ta, *tb));
                        }
                    }
                }
                Label::Open(v) | Label::Close(v) => {
                    if shared.contains(v) {
                        for (lb, tb) in pb.outgoing(qb) {
                            if lb == la {
                                push(&mut builder, &mut ids, &mut queue, la.clone(), (*ta, *tb));
                            }
                        }
                    } else {
                        push(&mut builder, &mut ids, &mut queue, la.clone(), (*ta, qb));
                    }
                }
                Label::Eps => return Err(Error::Internal("epsilon in ordered part".into())),
            }
        }
        for (lb, tb) in pb.outgoing(qb) {
            if let Some(v) = lb.var() {
                if !shared.contains(v) {
                    push(&mut builder, &mut ids, &mut queue, lb.clone(), (qa, *tb));
                }
            }
        }
    }
    let raw = builder.build(alphabet.clone(), variables);
    Ok(reduce(&trim(&raw)))
}

/// `P_A(d) \ P_B(d)`: both sides are marker-ordered so that each mapping has
/// a unique canonical ref-word, the right side is completed and subset-
/// determinized over ref-words, and the product keeps runs accepted on the
/// left and rejected on the right.
pub fn difference(a: &Va, b: &Va) -> Result<Va> {
    require_sequential(a, "difference")?;
    require_sequential(b, "difference")?;
    let alphabet = a.alphabet().union(b.alphabet());
    let variables: BTreeSet<Var> = a.variables().union(b.variables()).cloned().collect();
    let oa = order_markers(&widen(a, alphabet.clone(), variables.clone()))?;
    if oa.is_empty_spanner() {
        return Ok(oa);
    }
    let ob = order_markers(&widen(b, alphabet.clone(), variables.clone()))?;
    let bd = determinize_raw(&ob);
    // successor lookup in the deterministic, complete right side
    let step = |q: StateId, label: &Label| -> StateId {
        bd.outgoing(q)
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, t)| *t)
            .expect("determinized automaton is complete")
    };
    let mut builder = VaBuilder::new();
    let mut ids: BTreeMap<(StateId, StateId), StateId> = BTreeMap::new();
    let start = (oa.initial(), bd.initial());
    let sid = builder.add_state_note(format!("({},{})", start.0, start.1));
    ids.insert(start, sid);
    builder.set_initial(sid);
    let mut queue = VecDeque::from([start]);
    while let Some(key @ (qa, qs)) = queue.pop_front() {
        let id = ids[&key];
        if oa.is_final(qa) && !bd.is_final(qs) {
            builder.mark_final(id);
        }
        for (label, ta) in oa.outgoing(qa) {
            let next = (*ta, step(qs, label));
            let nid = match ids.get(&next) {
                Some(n) => *n,
                None => {
                    let n = builder.add_state_note(format!("({},{})", next.0, next.1));
                    ids.insert(next, n);
                    queue.push_back(next);
                    n
                }
            };
            builder.add_transition(id, label.clone(), nid);
        }
    }
    let raw = builder.build(alphabet, variables);
    Ok(reduce(&trim(&raw)))
}

/// Projection to `keep`: markers of other variables are erased.
pub fn project(a: &Va, keep: &BTreeSet<Var>) -> Result<Va> {
    require_sequential(a, "project")?;
    if let Some(v) = keep.difference(a.variables()).next() {
        return Err(Error::InvalidInput(format!("projection variable {v} not in the automaton")));
    }
    let mut b = VaBuilder::new();
    for q in 0..a.num_states() {
        b.add_state_note(a.state_note(q).to_string());
    }
    b.set_initial(a.initial());
    for f in a.finals() {
        b.mark_final(*f);
    }
    for (from, label, to) in a.transitions() {
        let label = match label {
            Label::Open(v) | Label::Close(v) if !keep.contains(v) => Label::Eps,
            other => other.clone(),
        };
        b.add_transition(*from, label, *to);
    }
    let raw = b.build(a.alphabet().clone(), keep.clone());
    Ok(reduce(&trim(&eliminate_epsilon(&raw))))
}

/// Replaces every variable `x` by its annotated copy `x!`.
pub fn rename_dagger(a: &Va) -> Result<Va> {
    let map: BTreeMap<Var, Var> = a
        .variables()
        .iter()
        .map(|v| {
            if v.is_dagger() {
                Err(Error::InvalidInput(format!("variable {v} is already annotated")))
            } else {
                Ok((v.clone(), v.dagger()))
            }
        })
        .collect::<Result<_>>()?;
    rename(a, &map)
}

/// Injective renaming of variables.
pub(crate) fn rename(a: &Va, map: &BTreeMap<Var, Var>) -> Result<Va> {
    let mut targets = BTreeSet::new();
    for to in map.values() {
        if !targets.insert(to.clone()) {
            return Err(Error::InvalidInput(format!("renaming is not injective at {to}")));
        }
    }
    let apply = |v: &Var| map.get(v).cloned().unwrap_or_else(|| v.clone());
    let variables: BTreeSet<Var> = a.variables().iter().map(&apply).collect();
    if variables.len() != a.variables().len() {
        return Err(Error::InvalidInput("renaming merges variables".into()));
    }
    let mut b = VaBuilder::new();
    for q in 0..a.num_states() {
        b.add_state_note(a.state_note(q).to_string());
    }
    b.set_initial(a.initial());
    for f in a.finals() {
        b.mark_final(*f);
    }
    for (from, label, to) in a.transitions() {
        let label = match label {
            Label::Open(v) => Label::Open(apply(v)),
            Label::Close(v) => Label::Close(apply(v)),
            other => other.clone(),
        };
        b.add_transition(*from, label, *to);
    }
    Ok(b.build(a.alphabet().clone(), variables))
}

/// Splits a sequential spanner into functional parts: one entry per
/// variable set `X` whose restriction `P^[X]` is non-empty on some
/// document. Each part is a functional automaton for `P^[X]`, and the
/// union of the parts defines the original spanner.
pub fn decompose(a: &Va) -> Result<Vec<(BTreeSet<Var>, Va)>> {
    require_sequential(a, "decompose")?;
    let t = trim(a);
    if t.is_empty_spanner() {
        return Ok(Vec::new());
    }
    if t.flags().functional {
        return Ok(vec![(t.variables().clone(), t)]);
    }
    let domains = achievable_domains(&t);
    let mut out = Vec::new();
    for x in domains {
        let le = restrict_to(&t, &x);
        let part = if x.is_empty() {
            trim(&le)
        } else {
            let mut smaller = Vec::new();
            for v in &x {
                let mut without: BTreeSet<Var> = x.clone();
                without.remove(v);
                smaller.push(widen(&restrict_to(&t, &without), t.alphabet().clone(), x.clone()));
            }
            let lt = union_all(&smaller, t.alphabet().clone(), x.clone());
            difference(&le, &lt)?
        };
        if !part.is_empty_spanner() {
            out.push((x, part));
        }
    }
    Ok(out)
}

/// The variable sets assigned by at least one accepting run (over any
/// document): a walk over reachable (state, closed-variable set) pairs.
fn achievable_domains(t: &Va) -> Vec<BTreeSet<Var>> {
    let vars: Vec<Var> = t.variables().iter().cloned().collect();
    let index: BTreeMap<&Var, usize> = vars.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let mut seen: BTreeSet<(StateId, u64)> = BTreeSet::new();
    let mut domains: BTreeSet<u64> = BTreeSet::new();
    let mut queue = VecDeque::from([(t.initial(), 0u64)]);
    seen.insert((t.initial(), 0));
    while let Some((q, mask)) = queue.pop_front() {
        if t.is_final(q) {
            domains.insert(mask);
        }
        for (label, to) in t.outgoing(q) {
            let next_mask = match label {
                Label::Close(v) => mask | (1 << index[v]),
                _ => mask,
            };
            if seen.insert((*to, next_mask)) {
                queue.push_back((*to, next_mask));
            }
        }
    }
    domains
        .into_iter()
        .map(|mask| {
            vars.iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, v)| v.clone())
                .collect()
        })
        .collect()
}

/// Deletes all marker transitions of variables outside `x` and narrows the
/// declaration, yielding an automaton for the mappings with domain within
/// `x`.
fn restrict_to(t: &Va, x: &BTreeSet<Var>) -> Va {
    let mut b = VaBuilder::new();
    for q in 0..t.num_states() {
        b.add_state_note(t.state_note(q).to_string());
    }
    b.set_initial(t.initial());
    for f in t.finals() {
        b.mark_final(*f);
    }
    for (from, label, to) in t.transitions() {
        match label.var() {
            Some(v) if !x.contains(v) => continue,
            _ => b.add_transition(*from, label.clone(), *to),
        }
    }
    trim(&b.build(t.alphabet().clone(), x.clone()))
}
