//! Domination rules: regular rules given as spanners over `X ∪ X!`,
//! variable-wise single-variable templates, and native comparators, plus
//! pairwise domination tests and per-document partial-order validation.

use std::collections::{BTreeMap, BTreeSet};

use crate::autops::{self, Va};
use crate::error::{Error, Result};
use crate::eval;
use crate::regexformula::RegexFormula;
use crate::spancore::{Alphabet, Document, Mapping, Span, Var};

/// Built-in native comparator predicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NativeKind {
    SelfDom,
    VarInc,
    SpanInc,
    Ltr,
    SpanLen,
}

impl NativeKind {
    pub fn name(self) -> &'static str {
        match self {
            NativeKind::SelfDom => "self",
            NativeKind::VarInc => "varinc",
            NativeKind::SpanInc => "spaninc",
            NativeKind::Ltr => "ltr",
            NativeKind::SpanLen => "spanlen",
        }
    }

    /// The predicate deciding `m1 ⊑ m2`.
    fn dominates(self, m1: &Mapping, m2: &Mapping) -> bool {
        match self {
            NativeKind::SelfDom => m1 == m2,
            NativeKind::VarInc => {
                m1.iter().all(|(v, s)| m2.get(v) == Some(s))
            }
            NativeKind::SpanInc => {
                same_domain(m1, m2) && m1.iter().all(|(v, s)| s.included_in(m2.get(v).unwrap()))
            }
            NativeKind::Ltr => {
                same_domain(m1, m2)
                    && m1.iter().all(|(v, s)| {
                        let t = m2.get(v).unwrap();
                        s.begin() == t.begin() && t.len() >= s.len()
                    })
            }
            NativeKind::SpanLen => {
                // The length comparison alone is not antisymmetric: two
                // distinct mappings with pairwise-equal lengths would
                // dominate each other. Such pairs are treated as
                // incomparable instead.
                if !same_domain(m1, m2) {
                    return false;
                }
                let all_ge = m1.iter().all(|(v, s)| m2.get(v).unwrap().len() >= s.len());
                let all_eq = m1.iter().all(|(v, s)| m2.get(v).unwrap().len() == s.len());
                all_ge && (!all_eq || m1 == m2)
            }
        }
    }
}

fn same_domain(m1: &Mapping, m2: &Mapping) -> bool {
    m1.len() == m2.len() && m1.iter().all(|(v, _)| m2.get(v).is_some())
}

/// A domination rule: per document, a partial order on mappings.
#[derive(Debug, Clone)]
pub enum DominationRule {
    /// An explicit spanner over `X ∪ X!`.
    Regular { name: String, va: Va },
    /// A single-variable template over `{x, x!}`, instantiated variable-wise.
    VariableWise { name: String, template: Va },
    /// A native comparator predicate.
    Native { kind: NativeKind },
}

/// The canonical template variable of variable-wise rules.
pub fn template_var() -> Var {
    Var::new("x")
}

/// The built-in single-variable templates, verbatim:
///
/// ```text
/// self:    S* x!{x{S*}} S* | S*
/// spaninc: S* x!{S* x{S*} S*} S* | S*
/// ltr:     S* x!{x{S*} S*} S* | S*
/// varinc:  S* x!{S*} S* | self
/// ```
pub fn template_formula(kind: NativeKind, alphabet: &Alphabet) -> Result<RegexFormula> {
    let s = || RegexFormula::sigma_star(alphabet);
    let x = template_var();
    let xd = x.dagger();
    let self_rule = RegexFormula::alt(
        RegexFormula::concat_all([
            s(),
            RegexFormula::capture(xd.clone(), RegexFormula::capture(x.clone(), s())),
            s(),
        ]),
        s(),
    );
    let formula = match kind {
        NativeKind::SelfDom => self_rule,
        NativeKind::SpanInc => RegexFormula::alt(
            RegexFormula::concat_all([
                s(),
                RegexFormula::capture(
                    xd,
                    RegexFormula::concat_all([s(), RegexFormula::capture(x, s()), s()]),
                ),
                s(),
            ]),
            s(),
        ),
        NativeKind::Ltr => RegexFormula::alt(
            RegexFormula::concat_all([
                s(),
                RegexFormula::capture(
                    xd,
                    RegexFormula::concat_all([RegexFormula::capture(x, s()), s()]),
                ),
                s(),
            ]),
            s(),
        ),
        NativeKind::VarInc => RegexFormula::alt(
            RegexFormula::concat_all([s(), RegexFormula::capture(xd, s()), s()]),
            self_rule,
        ),
        NativeKind::SpanLen => {
            return Err(Error::NonRegularRule("spanlen".into()));
        }
    };
    Ok(formula)
}

impl DominationRule {
    /// Resolves a CLI rule name over the given alphabet. The four regular
    /// built-ins resolve to their variable-wise templates; `spanlen` has no
    /// regular form and resolves to the native comparator.
    pub fn builtin(name: &str, alphabet: &Alphabet) -> Result<DominationRule> {
        let kind = match name {
            "self" => NativeKind::SelfDom,
            "varinc" => NativeKind::VarInc,
            "spaninc" => NativeKind::SpanInc,
            "ltr" => NativeKind::Ltr,
            "spanlen" => return Ok(DominationRule::Native { kind: NativeKind::SpanLen }),
            other => return Err(Error::InvalidInput(format!("unknown rule {other:?}"))),
        };
        let template = template_formula(kind, alphabet)?.compile(alphabet)?;
        Ok(DominationRule::VariableWise { name: name.into(), template })
    }

    /// The native fast comparator of a built-in rule.
    pub fn native(name: &str) -> Result<DominationRule> {
        let kind = match name {
            "self" => NativeKind::SelfDom,
            "varinc" => NativeKind::VarInc,
            "spaninc" => NativeKind::SpanInc,
            "ltr" => NativeKind::Ltr,
            "spanlen" => NativeKind::SpanLen,
            other => return Err(Error::InvalidInput(format!("unknown native rule {other:?}"))),
        };
        Ok(DominationRule::Native { kind })
    }

    /// A rule from a user-supplied single-variable template automaton.
    pub fn from_template(name: &str, template: Va) -> Result<DominationRule> {
        let x = template_var();
        let allowed: BTreeSet<Var> = [x.clone(), x.dagger()].into();
        if let Some(v) = template.variables().difference(&allowed).next() {
            return Err(Error::InvalidInput(format!(
                "variable-wise template may only use x and x!, found {v}"
            )));
        }
        Ok(DominationRule::VariableWise { name: name.into(), template })
    }

    pub fn name(&self) -> &str {
        match self {
            DominationRule::Regular { name, .. } => name,
            DominationRule::VariableWise { name, .. } => name,
            DominationRule::Native { kind } => kind.name(),
        }
    }

    pub fn is_regular(&self) -> bool {
        !matches!(self, DominationRule::Native { .. })
    }

    /// The regular spanner over `X ∪ X!` defining the rule on variable set
    /// `X`; variable-wise templates are instantiated as the product of
    /// per-variable renamed copies.
    pub fn regular_on(&self, vars: &BTreeSet<Var>) -> Result<Va> {
        match self {
            DominationRule::Regular { va, .. } => Ok(va.clone()),
            DominationRule::VariableWise { template, .. } => {
                instantiate_variable_wise(template, vars)
            }
            DominationRule::Native { kind } => Err(Error::NonRegularRule(kind.name().into())),
        }
    }
}

/// Instantiates a single-variable rule on a variable set as the Cartesian
/// product of per-variable renamed copies.
pub fn instantiate_variable_wise(template: &Va, vars: &BTreeSet<Var>) -> Result<Va> {
    let x = template_var();
    let allowed: BTreeSet<Var> = [x.clone(), x.dagger()].into();
    if let Some(v) = template.variables().difference(&allowed).next() {
        return Err(Error::InvalidInput(format!(
            "variable-wise template may only use x and x!, found {v}"
        )));
    }
    for v in vars {
        if v.is_dagger() {
            return Err(Error::VariableOutsideRule(v.to_string()));
        }
    }
    let mut product: Option<Va> = None;
    for v in vars {
        let map: BTreeMap<Var, Var> = template
            .variables()
            .iter()
            .map(|tv| {
                let renamed = if tv.is_dagger() { v.dagger() } else { v.clone() };
                (tv.clone(), renamed)
            })
            .collect();
        let copy = autops::rename(template, &map)?;
        product = Some(match product {
            None => copy,
            Some(acc) => autops::cartesian_product(&acc, &copy)?,
        });
    }
    match product {
        Some(va) => Ok(va),
        // The empty product: the spanner extracting exactly the empty
        // mapping on every document.
        None => {
            RegexFormula::sigma_star(template.alphabet()).compile(template.alphabet())
        }
    }
}

/// Decides `m1 ⊑ m2` under the rule on document `d`.
///
/// Regular rules test membership of the merge of `m1` with the annotated
/// copy of `m2`, through the permutation-tolerant ref-word automaton.
/// Variable-wise rules test each variable's pair against the template.
pub fn dominates(rule: &DominationRule, d: &Document, m1: &Mapping, m2: &Mapping) -> Result<bool> {
    if !m1.fits(d) || !m2.fits(d) {
        return Err(Error::SpanOutOfBounds { span: (0, 0), len: d.len() });
    }
    match rule {
        DominationRule::Native { kind } => Ok(kind.dominates(m1, m2)),
        DominationRule::Regular { va, .. } => {
            let base: BTreeSet<Var> =
                va.variables().iter().map(|v| v.undagger()).collect();
            for v in m1.domain().chain(m2.domain()) {
                if !base.contains(v) {
                    return Err(Error::VariableOutsideRule(v.to_string()));
                }
            }
            let merged = m1.merge(&m2.dagger())?;
            eval::contains(va, d, &merged)
        }
        DominationRule::VariableWise { template, .. } => {
            let x = template_var();
            let mut vars: BTreeSet<Var> = m1.domain_set();
            vars.extend(m2.domain_set());
            for v in vars {
                let mut pair = Mapping::empty();
                if let Some(s) = m1.get(&v) {
                    pair.insert(x.clone(), s);
                }
                if let Some(s) = m2.get(&v) {
                    pair.insert(x.dagger(), s);
                }
                if !eval::contains(template, d, &pair)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

/// A found counterexample to one of the partial-order axioms.
#[derive(Debug, Clone)]
pub enum Violation {
    Reflexivity(Mapping),
    Antisymmetry(Mapping, Mapping),
    Transitivity(Mapping, Mapping, Mapping),
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Reflexivity(m) => write!(f, "not reflexive at {m}"),
            Violation::Antisymmetry(a, b) => write!(f, "not antisymmetric at {a}, {b}"),
            Violation::Transitivity(a, b, c) => write!(f, "not transitive at {a}, {b}, {c}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub reflexive: bool,
    pub antisymmetric: bool,
    pub transitive: bool,
    pub violations: Vec<Violation>,
    pub checked_mappings: usize,
}

impl ValidationReport {
    pub fn is_partial_order(&self) -> bool {
        self.reflexive && self.antisymmetric && self.transitive
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "reflexive": self.reflexive,
            "antisymmetric": self.antisymmetric,
            "transitive": self.transitive,
            "checked_mappings": self.checked_mappings,
            "violations": self.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
        })
    }
}

/// Checks the partial-order axioms on `d`, exhaustively over all mappings
/// of the given variables to spans of `d` (or unassigned). With
/// `exhaustive = false`, only the support of the materialized relation is
/// used as the candidate set.
pub fn validate_rule(
    rule: &DominationRule,
    d: &Document,
    vars: &BTreeSet<Var>,
    exhaustive: bool,
) -> Result<ValidationReport> {
    let candidates: Vec<Mapping> = if exhaustive {
        if vars.len() > 2 {
            return Err(Error::InvalidInput(
                "exhaustive validation is limited to at most 2 variables".into(),
            ));
        }
        enumerate_mappings(d, vars)
    } else {
        materialized_support(rule, d, vars)?
    };
    let n = candidates.len();
    let mut rel = vec![vec![false; n]; n];
    let pair_table = PairTable::build(rule, d)?;
    for (i, m1) in candidates.iter().enumerate() {
        for (j, m2) in candidates.iter().enumerate() {
            rel[i][j] = match &pair_table {
                Some(table) => table.dominates(m1, m2),
                None => dominates(rule, d, m1, m2)?,
            };
        }
    }
    let mut report = ValidationReport {
        reflexive: true,
        antisymmetric: true,
        transitive: true,
        violations: Vec::new(),
        checked_mappings: n,
    };
    for i in 0..n {
        if !rel[i][i] {
            report.reflexive = false;
            report.violations.push(Violation::Reflexivity(candidates[i].clone()));
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && rel[i][j] && rel[j][i] {
                report.antisymmetric = false;
                report
                    .violations
                    .push(Violation::Antisymmetry(candidates[i].clone(), candidates[j].clone()));
            }
        }
    }
    'outer: for i in 0..n {
        for j in 0..n {
            if !rel[i][j] {
                continue;
            }
            for k in 0..n {
                if rel[j][k] && !rel[i][k] {
                    report.transitive = false;
                    report.violations.push(Violation::Transitivity(
                        candidates[i].clone(),
                        candidates[j].clone(),
                        candidates[k].clone(),
                    ));
                    if report.violations.len() > 20 {
                        break 'outer;
                    }
                }
            }
        }
    }
    Ok(report)
}

/// All spans of `d`, in canonical order.
pub fn all_spans(d: &Document) -> Vec<Span> {
    let mut out = Vec::new();
    for b in 0..=d.len() {
        for e in b..=d.len() {
            out.push(Span::new(b, e));
        }
    }
    out
}

fn enumerate_mappings(d: &Document, vars: &BTreeSet<Var>) -> Vec<Mapping> {
    let options: Vec<Option<Span>> =
        std::iter::once(None).chain(all_spans(d).into_iter().map(Some)).collect();
    let vars: Vec<&Var> = vars.iter().collect();
    let mut out = vec![Mapping::empty()];
    for v in vars {
        let mut next = Vec::with_capacity(out.len() * options.len());
        for m in &out {
            for opt in &options {
                let mut m2 = m.clone();
                if let Some(s) = opt {
                    m2.insert((*v).clone(), *s);
                }
                next.push(m2);
            }
        }
        out = next;
    }
    out
}

/// Mappings appearing on either side of the materialized relation.
fn materialized_support(
    rule: &DominationRule,
    d: &Document,
    vars: &BTreeSet<Var>,
) -> Result<Vec<Mapping>> {
    let va = rule.regular_on(vars)?;
    let mut support = BTreeSet::new();
    let plain: BTreeSet<Var> = vars.clone();
    for m in eval::evaluate(&va, d)? {
        let lhs = m.restrict(&plain);
        let rhs = m
            .restrict(&plain.iter().map(|v| v.dagger()).collect())
            .undagger();
        support.insert(lhs);
        support.insert(rhs);
    }
    Ok(support.into_iter().collect())
}

/// Per-variable cache of single-span pair domination, used to make
/// exhaustive validation of variable-wise rules cheap.
struct PairTable {
    table: BTreeMap<(Option<Span>, Option<Span>), bool>,
}

impl PairTable {
    fn build(rule: &DominationRule, d: &Document) -> Result<Option<PairTable>> {
        let template = match rule {
            DominationRule::VariableWise { template, .. } => template.clone(),
            DominationRule::Native { .. } | DominationRule::Regular { .. } => return Ok(None),
        };
        let x = template_var();
        let mut table = BTreeMap::new();
        let options: Vec<Option<Span>> =
            std::iter::once(None).chain(all_spans(d).into_iter().map(Some)).collect();
        for s1 in &options {
            for s2 in &options {
                let mut pair = Mapping::empty();
                if let Some(s) = s1 {
                    pair.insert(x.clone(), *s);
                }
                if let Some(s) = s2 {
                    pair.insert(x.dagger(), *s);
                }
                table.insert((*s1, *s2), eval::contains(&template, d, &pair)?);
            }
        }
        Ok(Some(PairTable { table }))
    }

    fn dominates(&self, m1: &Mapping, m2: &Mapping) -> bool {
        let mut vars: BTreeSet<Var> = m1.domain_set();
        vars.extend(m2.domain_set());
        vars.iter().all(|v| self.table[&(m1.get(v), m2.get(v))])
    }
}

/// Single-variable pair test used by the rule analyzer.
pub(crate) fn span_pair_dominates(
    rule: &DominationRule,
    d: &Document,
    var: &Var,
    s1: Option<Span>,
    s2: Option<Span>,
) -> Result<bool> {
    let mut m1 = Mapping::empty();
    let mut m2 = Mapping::empty();
    if let Some(s) = s1 {
        m1.insert(var.clone(), s);
    }
    if let Some(s) = s2 {
        m2.insert(var.clone(), s);
    }
    dominates(rule, d, &m1, &m2)
}
