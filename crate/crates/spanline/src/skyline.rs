//! The skyline operator: filter a mapping set down to its maximal elements
//! under a domination rule, either directly or by compiling the rule into
//! the automaton, plus the analyzer for strict domination pairs,
//! disjointness and hitting sets of single-variable rules.

use std::collections::BTreeSet;

use crate::autops::{self, Va};
use crate::domination::{all_spans, dominates, span_pair_dominates, template_var, DominationRule};
use crate::error::{Error, Result};
use crate::eval;
use crate::spancore::{Document, Mapping, Span, Var};

/// Filters an externally supplied mapping set down to the mappings not
/// strictly dominated by another element of the set.
pub fn skyline_filter(
    mappings: &BTreeSet<Mapping>,
    d: &Document,
    rule: &DominationRule,
) -> Result<BTreeSet<Mapping>> {
    let all: Vec<&Mapping> = mappings.iter().collect();
    let mut out = BTreeSet::new();
    for m in &all {
        let mut maximal = true;
        for m2 in &all {
            if m2 != m && dominates(rule, d, m, m2)? {
                maximal = false;
                break;
            }
        }
        if maximal {
            out.insert((*m).clone());
        }
    }
    Ok(out)
}

/// Parallel variant of [`skyline_filter`]; the pairwise tests are pure and
/// the result does not depend on the thread count.
pub fn skyline_filter_threads(
    mappings: &BTreeSet<Mapping>,
    d: &Document,
    rule: &DominationRule,
    threads: usize,
) -> Result<BTreeSet<Mapping>> {
    if threads <= 1 || mappings.len() < 32 {
        return skyline_filter(mappings, d, rule);
    }
    let all: Vec<Mapping> = mappings.iter().cloned().collect();
    let chunk = all.len().div_ceil(threads);
    let results: Vec<Result<Vec<Mapping>>> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for part in all.chunks(chunk) {
            let all_ref = &all;
            handles.push(scope.spawn(move || {
                let mut kept = Vec::new();
                for m in part {
                    let mut maximal = true;
                    for m2 in all_ref {
                        if m2 != m && dominates(rule, d, m, m2)? {
                            maximal = false;
                            break;
                        }
                    }
                    if maximal {
                        kept.push(m.clone());
                    }
                }
                Ok(kept)
            }));
        }
        handles.into_iter().map(|h| h.join().expect("skyline worker panicked")).collect()
    });
    let mut out = BTreeSet::new();
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

/// Evaluates the spanner and keeps the maximal mappings: the quadratic
/// pairwise filter of the data-complexity algorithm.
pub fn skyline_direct(a: &Va, d: &Document, rule: &DominationRule) -> Result<BTreeSet<Mapping>> {
    let mappings = eval::evaluate(a, d)?;
    skyline_filter(&mappings, d, rule)
}

/// The strict part `D − D_self` of a regular rule on the given variables:
/// the spanner extracting exactly the strict domination pairs. Computing it
/// once and reusing it across [`skyline_compiled_with_strict`] calls avoids
/// re-deriving the rule for every input automaton.
pub fn compiled_rule_strict_part(rule: &DominationRule, vars: &BTreeSet<Var>) -> Result<Va> {
    let rule_va = rule.regular_on(vars)?;
    let self_rule = DominationRule::builtin("self", rule_va.alphabet())?;
    let self_va = self_rule.regular_on(vars)?;
    autops::difference(&rule_va, &self_va)
}

/// Compiles the skyline of `a` under a regular rule into a sequential VA:
///
/// ```text
/// P_sky = P − π_X((P × P!) ∩ (D − D_self))
/// ```
///
/// where `P!` is the annotated copy of `P` and `D − D_self` extracts the
/// strict domination pairs.
pub fn skyline_compiled(a: &Va, rule: &DominationRule) -> Result<Va> {
    if !rule.is_regular() {
        return Err(Error::NonRegularRule(rule.name().into()));
    }
    let strict = compiled_rule_strict_part(rule, a.variables())?;
    skyline_compiled_with_strict(a, &strict)
}

/// The compiled construction with a precomputed strict part `D − D_self`.
pub fn skyline_compiled_with_strict(a: &Va, strict: &Va) -> Result<Va> {
    if !a.flags().sequential {
        return Err(Error::NonSequentialInput("skyline_compiled"));
    }
    let vars = a.variables().clone();
    let daggered = autops::rename_dagger(a)?;
    let pairs = autops::cartesian_product(a, &daggered)?;
    let dominated_pairs = autops::intersection(&pairs, strict)?;
    let dominated = autops::project(&dominated_pairs, &vars)?;
    autops::difference(a, &dominated)
}

/// A strict domination pair of a single-variable rule: `lhs ⊑ rhs` with
/// `lhs ≠ rhs`. Unassigned sides are `None` (the dash); the covering span
/// is the smallest span containing both, with the convention that the dash
/// is contained in every span.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct StrictDominationPair {
    pub lhs: Option<Span>,
    pub rhs: Option<Span>,
    pub covering: Span,
}

impl StrictDominationPair {
    pub fn new(lhs: Option<Span>, rhs: Option<Span>) -> Result<StrictDominationPair> {
        let covering = match (lhs, rhs) {
            (Some(a), Some(b)) => a.cover(b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => {
                return Err(Error::InvalidPairs("a strict pair cannot be (-, -)".into()))
            }
        };
        if lhs == rhs {
            return Err(Error::InvalidPairs("a strict pair needs two distinct sides".into()));
        }
        Ok(StrictDominationPair { lhs, rhs, covering })
    }

    /// Disjointness of pairs is disjointness of their covering spans.
    pub fn disjoint(&self, other: &StrictDominationPair) -> bool {
        self.covering.disjoint(other.covering)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let side = |s: Option<Span>| match s {
            Some(s) => serde_json::json!([s.begin(), s.end()]),
            None => serde_json::Value::Null,
        };
        serde_json::json!({
            "lhs": side(self.lhs),
            "rhs": side(self.rhs),
            "covering": [self.covering.begin(), self.covering.end()],
        })
    }
}

/// Analysis of a single-variable rule on a concrete document.
#[derive(Debug, Clone)]
pub struct RuleAnalysis {
    /// All strict domination pairs over the spans of the document plus the
    /// unassigned dash.
    pub pairs: Vec<StrictDominationPair>,
    /// Largest number of pairwise disjoint strict pairs (`k_p`).
    pub max_disjoint: usize,
    /// Minimum number of unit intervals hitting every strictly dominating
    /// span (`k_h`); defined for variable-inclusion-like rules whose
    /// right-hand sides are never empty spans.
    pub hitting_number: Option<usize>,
    /// Every strict pair merely extends the mapping: its left-hand side is
    /// the dash.
    pub variable_inclusion_like: bool,
    /// Some strict pair has an empty span as its right-hand side.
    pub has_empty_rhs: bool,
}

impl RuleAnalysis {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "pairs": self.pairs.iter().map(|p| p.to_json()).collect::<Vec<_>>(),
            "max_disjoint": self.max_disjoint,
            "hitting_number": self.hitting_number,
            "variable_inclusion_like": self.variable_inclusion_like,
            "has_empty_rhs": self.has_empty_rhs,
        })
    }
}

/// Materializes all strict domination pairs of a single-variable rule on
/// `d` and computes the disjointness and hitting-set measures. Explicit
/// multi-variable rules are analyzed through their behavior on their first
/// variable.
pub fn analyze_rule(rule: &DominationRule, d: &Document) -> Result<RuleAnalysis> {
    let var = match rule {
        DominationRule::Regular { va, .. } => va
            .variables()
            .iter()
            .map(|v| v.undagger())
            .next()
            .ok_or_else(|| Error::InvalidInput("rule automaton declares no variables".into()))?,
        _ => template_var(),
    };
    let options: Vec<Option<Span>> =
        std::iter::once(None).chain(all_spans(d).into_iter().map(Some)).collect();
    let mut pairs = Vec::new();
    for s1 in &options {
        for s2 in &options {
            if s1 == s2 {
                continue;
            }
            if span_pair_dominates(rule, d, &var, *s1, *s2)? {
                pairs.push(StrictDominationPair::new(*s1, *s2)?);
            }
        }
    }
    let max_disjoint = greedy_max_disjoint(&pairs.iter().map(|p| p.covering).collect::<Vec<_>>());
    let variable_inclusion_like = pairs.iter().all(|p| p.lhs.is_none());
    let has_empty_rhs = pairs.iter().any(|p| matches!(p.rhs, Some(s) if s.is_empty()));
    let hitting_number = if variable_inclusion_like && !has_empty_rhs && !pairs.is_empty() {
        let rhs: BTreeSet<Span> = pairs.iter().filter_map(|p| p.rhs).collect();
        Some(greedy_hitting_number(&rhs.into_iter().collect::<Vec<_>>())?)
    } else if variable_inclusion_like && !has_empty_rhs {
        Some(0)
    } else {
        None
    };
    Ok(RuleAnalysis { pairs, max_disjoint, hitting_number, variable_inclusion_like, has_empty_rhs })
}

/// Maximum number of pairwise disjoint spans, by the earliest-right-endpoint
/// greedy scan. Spans that overlap nothing (in particular empty spans) are
/// always kept; this is exact because disjointness restricts to interval
/// overlap on a line.
pub fn greedy_max_disjoint(covers: &[Span]) -> usize {
    let mut sorted: Vec<Span> = covers.to_vec();
    sorted.sort_by_key(|s| (s.end(), s.begin()));
    let mut count = 0usize;
    let mut last_end: Option<usize> = None;
    for s in sorted {
        if s.is_empty() {
            count += 1;
            continue;
        }
        match last_end {
            Some(e) if s.begin() < e => {}
            _ => {
                count += 1;
                last_end = Some(s.end());
            }
        }
    }
    count
}

/// Minimum number of unit intervals `[i,i+1>` stabbing every span, by the
/// greedy point-stabbing scan over spans sorted by right endpoint. All
/// spans must be non-empty.
pub fn greedy_hitting_number(spans: &[Span]) -> Result<usize> {
    if spans.iter().any(|s| s.is_empty()) {
        return Err(Error::InvalidInput("hitting sets are undefined for empty spans".into()));
    }
    let mut sorted: Vec<Span> = spans.to_vec();
    sorted.sort_by_key(|s| (s.end(), s.begin()));
    let mut hitters: Vec<usize> = Vec::new();
    for s in sorted {
        let stabbed = hitters.iter().any(|&i| s.begin() <= i && i < s.end());
        if !stabbed {
            hitters.push(s.end() - 1);
        }
    }
    Ok(hitters.len())
}
