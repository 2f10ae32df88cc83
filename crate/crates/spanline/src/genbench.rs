//! Generators for the reduction and blowup families, random test
//! instances, and the brute-force oracles used to cross-check the engine.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autops::{Label, Va, VaBuilder};
use crate::domination::DominationRule;
use crate::error::{Error, Result};
use crate::regexformula::RegexFormula;
use crate::skyline::StrictDominationPair;
use crate::spancore::{Alphabet, Document, Mapping, Span, Var};

/// A CNF formula over 1-based variables; a positive index is a positive
/// literal, a negative index a negated one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cnf {
    num_vars: usize,
    clauses: Vec<Vec<i32>>,
}

impl Cnf {
    /// Indices must be non-zero and in range; empty clauses are permitted
    /// (they make the formula unsatisfiable).
    pub fn new(num_vars: usize, clauses: Vec<Vec<i32>>) -> Result<Cnf> {
        for clause in &clauses {
            for &lit in clause {
                if lit == 0 || lit.unsigned_abs() as usize > num_vars {
                    return Err(Error::InvalidInput(format!("literal {lit} out of range")));
                }
            }
        }
        Ok(Cnf { num_vars, clauses })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Vec<i32>] {
        &self.clauses
    }

    /// `T_i`: indices of clauses in which variable `i` appears positively
    /// (1-based variable, 1-based clause indices).
    pub fn t_set(&self, i: usize) -> Vec<usize> {
        self.occurrences(i as i32)
    }

    /// `F_i`: indices of clauses in which variable `i` appears negatively.
    pub fn f_set(&self, i: usize) -> Vec<usize> {
        self.occurrences(-(i as i32))
    }

    fn occurrences(&self, lit: i32) -> Vec<usize> {
        self.clauses
            .iter()
            .enumerate()
            .filter(|(_, c)| c.contains(&lit))
            .map(|(j, _)| j + 1)
            .collect()
    }

    /// All variables positive, every clause of width two, and every
    /// variable occurring at most three times overall.
    pub fn is_read3_monotone_2cnf(&self) -> bool {
        let mut occurrences = vec![0usize; self.num_vars + 1];
        for clause in &self.clauses {
            if clause.len() != 2 {
                return false;
            }
            for &lit in clause {
                if lit < 0 {
                    return false;
                }
                occurrences[lit as usize] += 1;
            }
        }
        occurrences.iter().all(|&n| n <= 3)
    }

    /// DIMACS CNF; clauses must be non-empty.
    pub fn parse_dimacs(src: &str) -> Result<Cnf> {
        let mut num_vars = None;
        let mut declared_clauses = None;
        let mut clauses = Vec::new();
        let mut current: Vec<i32> = Vec::new();
        for line in src.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('p') {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                if parts.len() != 3 || parts[0] != "cnf" {
                    return Err(Error::InvalidInput(format!("bad DIMACS header {line:?}")));
                }
                num_vars = Some(parts[1].parse::<usize>().map_err(|_| {
                    Error::InvalidInput(format!("bad variable count {:?}", parts[1]))
                })?);
                declared_clauses = Some(parts[2].parse::<usize>().map_err(|_| {
                    Error::InvalidInput(format!("bad clause count {:?}", parts[2]))
                })?);
                continue;
            }
            for tok in line.split_whitespace() {
                let lit: i32 = tok
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("bad literal {tok:?}")))?;
                if lit == 0 {
                    if current.is_empty() {
                        return Err(Error::InvalidInput("empty clause in DIMACS input".into()));
                    }
                    clauses.push(std::mem::take(&mut current));
                } else {
                    current.push(lit);
                }
            }
        }
        if !current.is_empty() {
            clauses.push(current);
        }
        let num_vars =
            num_vars.ok_or_else(|| Error::InvalidInput("missing DIMACS header".into()))?;
        if let Some(n) = declared_clauses {
            if n != clauses.len() {
                return Err(Error::InvalidInput(format!(
                    "header declares {n} clauses, found {}",
                    clauses.len()
                )));
            }
        }
        Cnf::new(num_vars, clauses)
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for clause in &self.clauses {
            for lit in clause {
                out.push_str(&format!("{lit} "));
            }
            out.push_str("0\n");
        }
        out
    }
}

/// Satisfiability by exhaustive assignment enumeration.
pub fn sat(cnf: &Cnf) -> Result<bool> {
    if cnf.num_vars > 20 {
        return Err(Error::InvalidInput("exhaustive SAT is limited to 20 variables".into()));
    }
    for mask in 0..(1u64 << cnf.num_vars) {
        let holds = cnf.clauses.iter().all(|clause| {
            clause.iter().any(|&lit| {
                let bit = mask & (1 << (lit.unsigned_abs() - 1)) != 0;
                if lit > 0 {
                    bit
                } else {
                    !bit
                }
            })
        });
        if holds {
            return Ok(true);
        }
    }
    Ok(false)
}

/// All satisfying assignments, as sets of true variable indices.
pub fn sat_models(cnf: &Cnf) -> Result<BTreeSet<BTreeSet<usize>>> {
    if cnf.num_vars > 20 {
        return Err(Error::InvalidInput("exhaustive SAT is limited to 20 variables".into()));
    }
    let mut out = BTreeSet::new();
    for mask in 0..(1u64 << cnf.num_vars) {
        let holds = cnf.clauses.iter().all(|clause| {
            clause.iter().any(|&lit| {
                let bit = mask & (1 << (lit.unsigned_abs() - 1)) != 0;
                if lit > 0 {
                    bit
                } else {
                    !bit
                }
            })
        });
        if holds {
            out.insert((1..=cnf.num_vars).filter(|i| mask & (1 << (i - 1)) != 0).collect());
        }
    }
    Ok(out)
}

fn occurrence_var(i: usize, j: usize) -> Var {
    Var::new(&format!("v{i}_{j}"))
}

/// The SAT-to-skyline reduction: a spanner on the empty document whose
/// skyline under variable inclusion has at least `threshold + 1` mappings
/// iff the formula is satisfiable.
#[derive(Debug, Clone)]
pub struct SatReduction {
    pub formula: RegexFormula,
    pub va: Va,
    pub doc: Document,
    pub threshold: usize,
    pub rule_name: &'static str,
}

impl SatReduction {
    pub fn is_sat_by_count(&self, skyline_size: usize) -> bool {
        skyline_size > self.threshold
    }
}

/// Builds `r_valid | r_mask` for the given CNF:
///
/// ```text
/// r_valid = ._i ((._{j in T_i} v_{i,j}{eps}) | (._{j in F_i} v_{i,j}{eps}))
/// r_mask  = a{eps} . \/_k ._{i, j != k} v_{i,j}{eps}
/// ```
pub fn sat_to_skyline(cnf: &Cnf) -> Result<SatReduction> {
    let eps_capture = |v: Var| RegexFormula::capture(v, RegexFormula::Epsilon);
    let n_c = cnf.num_clauses();
    let r_valid = RegexFormula::concat_all((1..=cnf.num_vars).map(|i| {
        let pos = RegexFormula::concat_all(
            cnf.t_set(i).into_iter().map(|j| eps_capture(occurrence_var(i, j))),
        );
        let neg = RegexFormula::concat_all(
            cnf.f_set(i).into_iter().map(|j| eps_capture(occurrence_var(i, j))),
        );
        RegexFormula::alt(pos, neg)
    }));
    let r_mask = RegexFormula::concat(
        eps_capture(Var::new("a")),
        RegexFormula::alt_all((1..=n_c).map(|k| {
            RegexFormula::concat_all((1..=cnf.num_vars).flat_map(|i| {
                (1..=n_c).filter(move |j| *j != k).map(move |j| eps_capture(occurrence_var(i, j)))
            }))
        })),
    );
    let formula = RegexFormula::alt(r_valid, r_mask);
    let alphabet = Alphabet::default();
    let va = formula.compile(&alphabet)?;
    Ok(SatReduction {
        formula,
        va,
        doc: alphabet.document("")?,
        threshold: n_c,
        rule_name: "varinc",
    })
}

/// The join blowup family: two regex formulas whose natural join encodes
/// the clause structure of a read-3 monotone 2-CNF on the single-letter
/// document.
///
/// ```text
/// e  = r_{x_1} ... r_{x_n} a      with r_{x_i} = (x_i^1{eps} x_i^2{eps} x_i^3{eps}) | eps
/// e' = a r_{C_1} ... r_{C_m}      with r_{C_j} = x_{j_1}^{p(j,1)}{eps} | x_{j_2}^{p(j,2)}{eps}
/// ```
pub fn join_blowup_family(cnf: &Cnf) -> Result<(RegexFormula, RegexFormula)> {
    if !cnf.is_read3_monotone_2cnf() {
        return Err(Error::InvalidInput("the join family needs a read-3 monotone 2-CNF".into()));
    }
    let eps_capture = |v: Var| RegexFormula::capture(v, RegexFormula::Epsilon);
    let occ = |i: usize, s: usize| Var::new(&format!("x{i}_{s}"));
    let r_eq = RegexFormula::concat_all(
        (1..=cnf.num_vars)
            .map(|i| {
                RegexFormula::alt(
                    RegexFormula::concat_all((1..=3).map(|s| eps_capture(occ(i, s)))),
                    RegexFormula::Epsilon,
                )
            })
            .chain(std::iter::once(RegexFormula::Letter('a'))),
    );
    // occurrence numbering, left to right across clauses
    let mut seen = vec![0usize; cnf.num_vars + 1];
    let mut clause_formulas = Vec::new();
    for clause in cnf.clauses() {
        let mut options = Vec::new();
        for &lit in clause {
            let i = lit as usize;
            seen[i] += 1;
            options.push(eps_capture(occ(i, seen[i])));
        }
        clause_formulas.push(RegexFormula::alt_all(options));
    }
    let r_clauses = RegexFormula::concat_all(
        std::iter::once(RegexFormula::Letter('a')).chain(clause_formulas),
    );
    Ok((r_eq, r_clauses))
}

/// The skyline blowup family: a spanner on the empty document whose
/// skyline under variable inclusion, Boolean-projected to the formula
/// variables, is exactly the model set of the CNF.
///
/// ```text
/// r_valid = ._i ((x_i{eps} ._{j in T_i} v_{i,j}{eps}) | xbar_i{eps})
/// r_mask  = \/_k ._i (x_i{xbar_i{eps}} ._{j in T_i \ k} v_{i,j}{eps})
/// ```
pub fn skyline_blowup_family(cnf: &Cnf) -> Result<Va> {
    if !cnf.is_read3_monotone_2cnf() {
        return Err(Error::InvalidInput("the skyline family needs a read-3 monotone 2-CNF".into()));
    }
    let eps_capture = |v: Var| RegexFormula::capture(v, RegexFormula::Epsilon);
    let xvar = |i: usize| Var::new(&format!("x{i}"));
    let xbar = |i: usize| Var::new(&format!("xbar{i}"));
    let r_valid = RegexFormula::concat_all((1..=cnf.num_vars).map(|i| {
        RegexFormula::alt(
            RegexFormula::concat(
                eps_capture(xvar(i)),
                RegexFormula::concat_all(
                    cnf.t_set(i).into_iter().map(|j| eps_capture(occurrence_var(i, j))),
                ),
            ),
            eps_capture(xbar(i)),
        )
    }));
    let r_mask = RegexFormula::alt_all((1..=cnf.num_clauses()).map(|k| {
        RegexFormula::concat_all((1..=cnf.num_vars).map(|i| {
            RegexFormula::concat(
                RegexFormula::capture(xvar(i), eps_capture(xbar(i))),
                RegexFormula::concat_all(
                    cnf.t_set(i)
                        .into_iter()
                        .filter(|j| *j != k)
                        .map(|j| eps_capture(occurrence_var(i, j))),
                ),
            )
        }))
    }));
    RegexFormula::alt(r_valid, r_mask).compile(&Alphabet::default())
}

/// Boolean projection of a mapping set to the `x1..xn` variables of the
/// skyline blowup family: the sets of formula variables assigned a span.
pub fn blowup_projection(mappings: &BTreeSet<Mapping>, num_vars: usize) -> BTreeSet<BTreeSet<usize>> {
    mappings
        .iter()
        .map(|m| {
            (1..=num_vars)
                .filter(|i| m.get(&Var::new(&format!("x{i}"))).is_some())
                .collect()
        })
        .collect()
}

/// An undirected graph, for the clause-per-edge construction.
#[derive(Debug, Clone)]
pub struct Graph {
    pub nodes: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn max_degree(&self) -> usize {
        let mut deg = vec![0usize; self.nodes];
        for (u, v) in &self.edges {
            deg[*u] += 1;
            deg[*v] += 1;
        }
        deg.into_iter().max().unwrap_or(0)
    }
}

/// `F_G`: one clause `x_u | x_v` per edge of a graph of maximum degree 3;
/// the result is a read-3 monotone 2-CNF.
pub fn graph_to_cnf(g: &Graph) -> Result<Cnf> {
    if g.max_degree() > 3 {
        return Err(Error::InvalidInput("graph must have maximum degree 3".into()));
    }
    let clauses = g
        .edges
        .iter()
        .map(|(u, v)| vec![(*u + 1) as i32, (*v + 1) as i32])
        .collect();
    Cnf::new(g.nodes, clauses)
}

/// A random graph with degrees at most 3, by sampling candidate edges and
/// keeping those that respect the degree bound.
pub fn random_cubic_graph(seed: u64, nodes: usize) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut deg = vec![0usize; nodes];
    let mut edges = Vec::new();
    let mut present = BTreeSet::new();
    let target = (3 * nodes) / 2;
    let mut attempts = 0;
    while edges.len() < target && attempts < 50 * nodes.max(1) {
        attempts += 1;
        let u = rng.gen_range(0..nodes);
        let v = rng.gen_range(0..nodes);
        if u == v || deg[u] >= 3 || deg[v] >= 3 {
            continue;
        }
        let key = (u.min(v), u.max(v));
        if present.insert(key) {
            deg[u] += 1;
            deg[v] += 1;
            edges.push(key);
        }
    }
    Graph { nodes, edges }
}

/// The generalized SAT reduction of the hardness dichotomy: given a
/// variable-wise rule, a document, and one disjoint strict domination pair
/// per CNF variable, builds a spanner whose skyline under the rule
/// contains a mapping with a satisfying per-clause pattern iff the CNF is
/// satisfiable.
#[derive(Debug, Clone)]
pub struct UmdsdpReduction {
    pub formula: RegexFormula,
    pub va: Va,
    pub doc: Document,
    pub pairs: Vec<StrictDominationPair>,
    num_clauses: usize,
    num_vars: usize,
}

impl UmdsdpReduction {
    /// True iff the mapping assigns, for every clause, some `v_{i,j}`
    /// following the dominating side of pair `i`.
    pub fn is_satisfying_pattern(&self, m: &Mapping) -> bool {
        (1..=self.num_clauses).all(|j| {
            (1..=self.num_vars).any(|i| {
                let v = occurrence_var(i, j);
                match self.pairs[i - 1].rhs {
                    Some(s) => m.get(&v) == Some(s),
                    None => m.get(&v).is_none(),
                }
            })
        })
    }

    pub fn detects_sat(&self, skyline: &BTreeSet<Mapping>) -> bool {
        skyline.iter().any(|m| self.is_satisfying_pattern(m))
    }
}

pub fn umdsdp_reduction(
    rule: &DominationRule,
    d: &Document,
    pairs: &[StrictDominationPair],
    cnf: &Cnf,
    alphabet: &Alphabet,
) -> Result<UmdsdpReduction> {
    if pairs.len() != cnf.num_vars() {
        return Err(Error::InvalidPairs(format!(
            "need one pair per CNF variable: {} pairs for {} variables",
            pairs.len(),
            cnf.num_vars()
        )));
    }
    let var = crate::domination::template_var();
    for p in pairs {
        if !crate::domination::span_pair_dominates(rule, d, &var, p.lhs, p.rhs)? {
            return Err(Error::InvalidPairs(format!(
                "({:?}, {:?}) is not a domination pair of the rule",
                p.lhs, p.rhs
            )));
        }
        if p.lhs == p.rhs {
            return Err(Error::InvalidPairs("pair is not strict".into()));
        }
    }
    let mut sorted: Vec<StrictDominationPair> = pairs.to_vec();
    sorted.sort_by_key(|p| (p.covering.begin(), p.covering.end()));
    for pair in sorted.windows(2) {
        if !pair[0].disjoint(&pair[1]) || pair[0].covering.end() > pair[1].covering.begin() {
            return Err(Error::InvalidPairs(
                "pairs must be disjoint and separable into document parts".into(),
            ));
        }
    }
    // cut the document into one part per pair
    let n_v = sorted.len();
    let n_c = cnf.num_clauses();
    let mut cuts = Vec::with_capacity(n_v + 1);
    cuts.push(0usize);
    for (idx, p) in sorted.iter().enumerate() {
        if idx + 1 < n_v {
            cuts.push(p.covering.end());
        }
    }
    cuts.push(d.len());

    let part_window = |i: usize| (cuts[i - 1], cuts[i]); // 1-based part index
    // r^i(I, side): read part i, assigning the variables of I following the
    // given side of pair i.
    let r_i = |i: usize, group: &[usize], side: Option<Span>| -> Result<RegexFormula> {
        let (lo, hi) = part_window(i);
        let vars: Vec<Var> = group.iter().map(|j| occurrence_var(i, *j)).collect();
        match side {
            None => capture_window(d, lo, hi, &[]),
            Some(span) => capture_window(d, lo, hi, &[(vars, span)]),
        }
    };
    let r_i2 = |i: usize,
                group_hi: &[usize],
                side_hi: Option<Span>,
                group_lo: &[usize],
                side_lo: Option<Span>|
     -> Result<RegexFormula> {
        let (lo, hi) = part_window(i);
        let mut groups: Vec<(Vec<Var>, Span)> = Vec::new();
        if let Some(span) = side_hi {
            if !group_hi.is_empty() {
                groups.push((group_hi.iter().map(|j| occurrence_var(i, *j)).collect(), span));
            }
        }
        if let Some(span) = side_lo {
            if !group_lo.is_empty() {
                groups.push((group_lo.iter().map(|j| occurrence_var(i, *j)).collect(), span));
            }
        }
        capture_window(d, lo, hi, &groups)
    };
    let _ = r_i;

    let all_clauses: Vec<usize> = (1..=n_c).collect();
    let complement = |of: &[usize]| -> Vec<usize> {
        all_clauses.iter().copied().filter(|j| !of.contains(j)).collect()
    };

    let mut valid_parts = Vec::with_capacity(n_v);
    for i in 1..=n_v {
        let p = &sorted[i - 1];
        let t_i = cnf.t_set(i);
        let f_i = cnf.f_set(i);
        let branch_true = r_i2(i, &t_i, p.rhs, &complement(&t_i), p.lhs)?;
        let branch_false = r_i2(i, &f_i, p.rhs, &complement(&f_i), p.lhs)?;
        valid_parts.push(RegexFormula::alt(branch_true, branch_false));
    }
    let r_valid = RegexFormula::concat_all(valid_parts);

    let mut mask_options = Vec::with_capacity(n_c);
    for k in 1..=n_c {
        let mut mask_parts = Vec::with_capacity(n_v);
        for i in 1..=n_v {
            let p = &sorted[i - 1];
            mask_parts.push(r_i2(i, &complement(&[k]), p.rhs, &[k], p.lhs)?);
        }
        mask_options.push(RegexFormula::concat_all(mask_parts));
    }
    let r_mask = RegexFormula::alt_all(mask_options);

    let formula = RegexFormula::alt(r_valid, r_mask);
    let va = formula.compile(alphabet)?;
    Ok(UmdsdpReduction {
        formula,
        va,
        doc: d.clone(),
        pairs: sorted,
        num_clauses: n_c,
        num_vars: n_v,
    })
}

/// Lays out captures over the document window `[lo,hi>` as a regex
/// formula: each group's variables capture the group's span, nested or
/// sequential as the spans require. Crossing (partially overlapping)
/// groups have no regex layout.
fn capture_window(
    d: &Document,
    lo: usize,
    hi: usize,
    groups: &[(Vec<Var>, Span)],
) -> Result<RegexFormula> {
    let literal = |a: usize, b: usize| {
        RegexFormula::literal(&d.substring(Span::new(a, b)).expect("window within document"))
    };
    for (_, span) in groups {
        if span.begin() < lo || span.end() > hi {
            return Err(Error::UnsupportedLayout(format!(
                "span {span} outside the part window [{lo},{hi}>"
            )));
        }
    }
    match groups {
        [] => Ok(literal(lo, hi)),
        [(vars, span)] => {
            let inner = wrap_captures(vars, literal(span.begin(), span.end()));
            Ok(RegexFormula::concat_all([
                literal(lo, span.begin()),
                inner,
                literal(span.end(), hi),
            ]))
        }
        [a, b] => {
            let (outer, inner) = if b.1.included_in(a.1) {
                (a, b)
            } else if a.1.included_in(b.1) {
                (b, a)
            } else if a.1.disjoint(b.1) {
                let (first, second) = if a.1.begin() <= b.1.begin() { (a, b) } else { (b, a) };
                let left = capture_window(d, lo, first.1.end(), std::slice::from_ref(first))?;
                let right = capture_window(d, first.1.end(), hi, std::slice::from_ref(second))?;
                return Ok(RegexFormula::concat(left, right));
            } else {
                return Err(Error::UnsupportedLayout(format!(
                    "spans {} and {} cross",
                    a.1, b.1
                )));
            };
            let core = capture_window(d, outer.1.begin(), outer.1.end(), std::slice::from_ref(inner))?;
            Ok(RegexFormula::concat_all([
                literal(lo, outer.1.begin()),
                wrap_captures(&outer.0, core),
                literal(outer.1.end(), hi),
            ]))
        }
        _ => Err(Error::UnsupportedLayout("more than two capture groups per part".into())),
    }
}

fn wrap_captures(vars: &[Var], core: RegexFormula) -> RegexFormula {
    vars.iter().rev().fold(core, |acc, v| RegexFormula::capture(v.clone(), acc))
}

/// Limits for the random sequential-VA generator.
#[derive(Debug, Clone)]
pub struct RandomVaLimits {
    pub max_states: usize,
    pub max_vars: usize,
    pub alphabet: Alphabet,
    /// Variables are named `<prefix>0`, `<prefix>1`, ...
    pub var_prefix: String,
}

impl Default for RandomVaLimits {
    fn default() -> Self {
        RandomVaLimits {
            max_states: 6,
            max_vars: 3,
            alphabet: Alphabet::from_letters("ab"),
            var_prefix: "x".into(),
        }
    }
}

/// A random trimmed sequential VA with at least one accepting run, by
/// rejection sampling against the sequentiality check. Candidates are
/// compiled from random capture formulas and then perturbed with extra
/// random transitions; perturbations that break sequentiality are rejected.
pub fn random_va(seed: u64, limits: &RandomVaLimits) -> Va {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..10_000 {
        let num_vars = if limits.max_vars == 0 || rng.gen_bool(0.15) {
            0
        } else {
            rng.gen_range(1..=limits.max_vars)
        };
        let vars: Vec<Var> =
            (0..num_vars).map(|i| Var::new(&format!("{}{i}", limits.var_prefix))).collect();
        let mut pool = vars.clone();
        let depth = rng.gen_range(3..=5);
        let formula = random_formula(&mut rng, limits, &mut pool, depth);
        let va = match formula.compile(&limits.alphabet) {
            Ok(va) => va,
            Err(_) => continue,
        };
        let va = graft_transitions(&mut rng, &va, &vars, limits);
        let trimmed = crate::autops::reduce(&va);
        if trimmed.is_empty_spanner()
            || trimmed.num_states() > limits.max_states
            || !trimmed.flags().sequential
        {
            continue;
        }
        return trimmed;
    }
    panic!("rejection sampling failed to produce a sequential VA");
}

/// Captures consume variables from the pool, so a variable is captured at
/// most once per generated formula (reuse across alternation branches is
/// covered by the grafting step instead).
fn random_formula(
    rng: &mut ChaCha8Rng,
    limits: &RandomVaLimits,
    pool: &mut Vec<Var>,
    depth: usize,
) -> RegexFormula {
    let letters: Vec<char> = limits.alphabet.letters().collect();
    let leaf = |rng: &mut ChaCha8Rng| {
        if letters.is_empty() || rng.gen_bool(0.2) {
            RegexFormula::Epsilon
        } else {
            RegexFormula::Letter(letters[rng.gen_range(0..letters.len())])
        }
    };
    if depth == 0 {
        return leaf(rng);
    }
    if !pool.is_empty() && rng.gen_bool(0.5) {
        let v = pool.swap_remove(rng.gen_range(0..pool.len()));
        let body = if rng.gen_bool(0.4) {
            RegexFormula::Epsilon
        } else {
            random_formula(rng, limits, pool, depth - 1)
        };
        let captured = RegexFormula::capture(v, body);
        return match rng.gen_range(0..3) {
            0 => captured,
            1 => RegexFormula::concat(captured, random_formula(rng, limits, pool, depth - 1)),
            _ => RegexFormula::alt(captured, random_formula(rng, limits, pool, depth - 1)),
        };
    }
    match rng.gen_range(0..100) {
        0..=19 => leaf(rng),
        20..=49 => RegexFormula::concat(
            random_formula(rng, limits, pool, depth - 1),
            random_formula(rng, limits, pool, depth - 1),
        ),
        50..=79 => RegexFormula::alt(
            random_formula(rng, limits, pool, depth - 1),
            random_formula(rng, limits, pool, depth - 1),
        ),
        _ => RegexFormula::star(random_formula(rng, limits, pool, depth - 1)),
    }
}

/// Adds a few random letter or marker transitions, keeping the result only
/// when it still passes the sequentiality check.
fn graft_transitions(rng: &mut ChaCha8Rng, va: &Va, vars: &[Var], limits: &RandomVaLimits) -> Va {
    if va.num_states() == 0 || rng.gen_bool(0.4) {
        return va.clone();
    }
    let letters: Vec<char> = limits.alphabet.letters().collect();
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
    let mut declared = va.variables().clone();
    let extra = rng.gen_range(1..=3);
    for _ in 0..extra {
        let from = rng.gen_range(0..va.num_states());
        let to = rng.gen_range(0..va.num_states());
        let label = if !vars.is_empty() && rng.gen_bool(0.5) {
            let v = vars[rng.gen_range(0..vars.len())].clone();
            declared.insert(v.clone());
            if rng.gen_bool(0.5) {
                Label::Open(v)
            } else {
                Label::Close(v)
            }
        } else if letters.is_empty() {
            continue;
        } else {
            Label::Letter(letters[rng.gen_range(0..letters.len())])
        };
        b.add_transition(from, label, to);
    }
    let grafted = b.build(va.alphabet().clone(), declared);
    let trimmed = crate::autops::trim(&grafted);
    if trimmed.flags().sequential && !trimmed.is_empty_spanner() {
        trimmed
    } else {
        va.clone()
    }
}

/// A random document of the given length.
pub fn random_doc(seed: u64, len: usize, alphabet: &Alphabet) -> Document {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let letters: Vec<char> = alphabet.letters().collect();
    let text: String = (0..len).map(|_| letters[rng.gen_range(0..letters.len())]).collect();
    alphabet.document(&text).expect("letters come from the alphabet")
}

/// A document sampled by a random walk over the automaton's transitions,
/// truncated to `max_len` letters. Evaluating the automaton on such a
/// document is usually non-trivial, which keeps oracle comparisons from
/// being vacuous; occasionally one letter is flipped.
pub fn random_matching_doc(va: &Va, seed: u64, max_len: usize, alphabet: &Alphabet) -> Document {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let letters: Vec<char> = alphabet.letters().collect();
    let mut text = Vec::new();
    let mut state = va.initial();
    for _ in 0..(4 * max_len + 8) {
        if text.len() >= max_len {
            break;
        }
        if va.is_final(state) && !text.is_empty() && rng.gen_bool(0.25) {
            break;
        }
        let out = va.outgoing(state);
        if out.is_empty() {
            break;
        }
        let (label, to) = &out[rng.gen_range(0..out.len())];
        if let Label::Letter(c) = label {
            text.push(*c);
        }
        state = *to;
    }
    if !text.is_empty() && !letters.is_empty() && rng.gen_bool(0.25) {
        let i = rng.gen_range(0..text.len());
        text[i] = letters[rng.gen_range(0..letters.len())];
    }
    let text: String = text.into_iter().collect();
    alphabet.document(&text).expect("walk letters come from the alphabet")
}

/// Brute-force oracles, kept independent of the implementation paths they
/// cross-check.
pub mod oracles {
    use super::*;

    /// Mapping set of a regex formula by recursive match semantics: the
    /// matches of each node on each document window, merged bottom-up.
    pub fn naive_regex_eval(e: &RegexFormula, d: &Document) -> BTreeSet<Mapping> {
        matches_of(e, d, 0, d.len())
    }

    fn matches_of(e: &RegexFormula, d: &Document, i: usize, j: usize) -> BTreeSet<Mapping> {
        let mut out = BTreeSet::new();
        match e {
            RegexFormula::Empty => {}
            RegexFormula::Epsilon => {
                if i == j {
                    out.insert(Mapping::empty());
                }
            }
            RegexFormula::Letter(c) => {
                if j == i + 1 && d.letter(i) == *c {
                    out.insert(Mapping::empty());
                }
            }
            RegexFormula::Concat(l, r) => {
                for k in i..=j {
                    for m1 in matches_of(l, d, i, k) {
                        for m2 in matches_of(r, d, k, j) {
                            if m1.domain().all(|v| m2.get(v).is_none()) {
                                out.insert(m1.merge(&m2).expect("disjoint domains"));
                            }
                        }
                    }
                }
            }
            RegexFormula::Alt(l, r) => {
                out.extend(matches_of(l, d, i, j));
                out.extend(matches_of(r, d, i, j));
            }
            RegexFormula::Star(inner) => {
                if i == j {
                    out.insert(Mapping::empty());
                }
                for k in (i + 1)..=j {
                    for m1 in matches_of(inner, d, i, k) {
                        for m2 in matches_of(e, d, k, j) {
                            if m1.domain().all(|v| m2.get(v).is_none()) {
                                out.insert(m1.merge(&m2).expect("disjoint domains"));
                            }
                        }
                    }
                }
            }
            RegexFormula::Capture(v, inner) => {
                for m in matches_of(inner, d, i, j) {
                    if m.get(v).is_none() {
                        let mut m = m.clone();
                        m.insert(v.clone(), Span::new(i, j));
                        out.insert(m);
                    }
                }
            }
        }
        out
    }

    /// Mapping set of a sequential VA by exhaustive enumeration of
    /// accepting runs (no pruning, no product graph).
    pub fn naive_va_eval(a: &Va, d: &Document) -> Result<BTreeSet<Mapping>> {
        if !a.flags().sequential {
            return Err(Error::NonSequentialInput("naive_va_eval"));
        }
        let a = crate::autops::eliminate_epsilon(a);
        let mut out = BTreeSet::new();
        let budget = d.len() + 2 * a.variables().len() + 1;
        let mut open = BTreeMap::new();
        runs(&a, d, a.initial(), 0, budget, &mut open, &Mapping::empty(), &mut out);
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn runs(
        a: &Va,
        d: &Document,
        q: usize,
        pos: usize,
        steps_left: usize,
        open: &mut BTreeMap<Var, usize>,
        assigned: &Mapping,
        out: &mut BTreeSet<Mapping>,
    ) {
        if pos == d.len() && a.is_final(q) && open.is_empty() {
            out.insert(assigned.clone());
        }
        if steps_left == 0 {
            return;
        }
        for (label, to) in a.outgoing(q) {
            match label {
                Label::Letter(c) => {
                    if pos < d.len() && d.letter(pos) == *c {
                        runs(a, d, *to, pos + 1, steps_left - 1, open, assigned, out);
                    }
                }
                Label::Open(v) => {
                    if !open.contains_key(v) && assigned.get(v).is_none() {
                        open.insert(v.clone(), pos);
                        runs(a, d, *to, pos, steps_left - 1, open, assigned, out);
                        open.remove(v);
                    }
                }
                Label::Close(v) => {
                    if let Some(&begin) = open.get(v) {
                        open.remove(v);
                        let mut next = assigned.clone();
                        next.insert(v.clone(), Span::new(begin, pos));
                        runs(a, d, *to, pos, steps_left - 1, open, &next, out);
                        open.insert(v.clone(), begin);
                    }
                }
                Label::Eps => unreachable!(),
            }
        }
    }

    /// Exact maximum number of pairwise disjoint spans by subset search.
    pub fn brute_max_disjoint(covers: &[Span]) -> usize {
        assert!(covers.len() <= 20, "subset search is limited to 20 spans");
        let mut best = 0usize;
        for mask in 0u32..(1 << covers.len()) {
            let chosen: Vec<Span> = covers
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, s)| *s)
                .collect();
            let ok = chosen
                .iter()
                .enumerate()
                .all(|(i, s)| chosen.iter().skip(i + 1).all(|t| s.disjoint(*t)));
            if ok {
                best = best.max(chosen.len());
            }
        }
        best
    }

    /// Exact minimum hitting set of unit intervals by subset search over
    /// candidate stab points.
    pub fn brute_hitting_number(spans: &[Span]) -> usize {
        assert!(spans.iter().all(|s| !s.is_empty()), "hitting needs non-empty spans");
        if spans.is_empty() {
            return 0;
        }
        let max_end = spans.iter().map(|s| s.end()).max().unwrap_or(0);
        let points: Vec<usize> = (0..max_end).collect();
        assert!(points.len() <= 20, "subset search is limited to 20 points");
        let mut best = usize::MAX;
        for mask in 0u32..(1 << points.len()) {
            let hitters: Vec<usize> = points
                .iter()
                .enumerate()
                .filter(|(idx, _)| mask & (1 << idx) != 0)
                .map(|(_, p)| *p)
                .collect();
            let covers_all = spans
                .iter()
                .all(|s| hitters.iter().any(|&i| s.begin() <= i && i < s.end()));
            if covers_all {
                best = best.min(hitters.len());
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::oracles::*;
    use super::*;
    use crate::eval::evaluate;
    use crate::skyline::{skyline_direct, StrictDominationPair};

    fn ab() -> Alphabet {
        Alphabet::from_letters("ab")
    }

    #[test]
    fn exhaustive_sat_examples() {
        let unsat = Cnf::new(1, vec![vec![1], vec![-1]]).unwrap();
        assert!(!sat(&unsat).unwrap());
        let tautologyish = Cnf::new(2, vec![vec![1, 2]]).unwrap();
        assert!(sat(&tautologyish).unwrap());
        let empty_clause = Cnf::new(1, vec![vec![]]).unwrap();
        assert!(!sat(&empty_clause).unwrap());
    }

    #[test]
    fn dimacs_round_trip() {
        let src = "c comment\np cnf 3 2\n1 -2 0\n2 3 0\n";
        let cnf = Cnf::parse_dimacs(src).unwrap();
        assert_eq!(cnf.num_vars(), 3);
        assert_eq!(cnf.num_clauses(), 2);
        assert_eq!(cnf.t_set(2), vec![2]);
        assert_eq!(cnf.f_set(2), vec![1]);
        let back = Cnf::parse_dimacs(&cnf.to_dimacs()).unwrap();
        assert_eq!(back, cnf);
        assert!(Cnf::parse_dimacs("p cnf 1 1\n0\n").is_err(), "empty clause rejected");
        assert!(Cnf::parse_dimacs("p cnf 1 1\n5 0\n").is_err(), "out-of-range literal");
    }

    #[test]
    fn sat_reduction_single_positive_clause() {
        let cnf = Cnf::new(1, vec![vec![1]]).unwrap();
        let red = sat_to_skyline(&cnf).unwrap();
        let rule = DominationRule::builtin(red.rule_name, &Alphabet::default()).unwrap();
        let sky = skyline_direct(&red.va, &red.doc, &rule).unwrap();
        let expected: BTreeSet<Mapping> = [
            Mapping::from_pairs([(Var::new("v1_1"), Span::new(0, 0))]),
            Mapping::from_pairs([(Var::new("a"), Span::new(0, 0))]),
        ]
        .into();
        assert_eq!(sky, expected);
        assert!(red.is_sat_by_count(sky.len()));
        assert!(sat(&cnf).unwrap());
    }

    #[test]
    fn sat_reduction_contradiction() {
        let cnf = Cnf::new(1, vec![vec![1], vec![-1]]).unwrap();
        let red = sat_to_skyline(&cnf).unwrap();
        let rule = DominationRule::builtin(red.rule_name, &Alphabet::default()).unwrap();
        let sky = skyline_direct(&red.va, &red.doc, &rule).unwrap();
        let a = Var::new("a");
        let expected: BTreeSet<Mapping> = [
            Mapping::from_pairs([(a.clone(), Span::new(0, 0)), (Var::new("v1_2"), Span::new(0, 0))]),
            Mapping::from_pairs([(a, Span::new(0, 0)), (Var::new("v1_1"), Span::new(0, 0))]),
        ]
        .into();
        assert_eq!(sky, expected);
        assert_eq!(sky.len(), red.threshold);
        assert!(!red.is_sat_by_count(sky.len()));
    }

    #[test]
    fn mask_mappings_are_never_dominated() {
        let rule = DominationRule::native("varinc").unwrap();
        for (vars, clauses) in [
            (2, vec![vec![1, 2], vec![-1, 2]]),
            (3, vec![vec![1, -2], vec![2, 3], vec![-3, 1]]),
        ] {
            let cnf = Cnf::new(vars, clauses).unwrap();
            let red = sat_to_skyline(&cnf).unwrap();
            let all = evaluate(&red.va, &red.doc).unwrap();
            let a = Var::new("a");
            for m in all.iter().filter(|m| m.get(&a).is_some()) {
                for other in &all {
                    if other != m {
                        assert!(
                            !crate::domination::dominates(&rule, &red.doc, m, other).unwrap(),
                            "mask mapping {m} dominated by {other}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn join_family_single_clause_matches_brute_force_join() {
        let cnf = Cnf::new(2, vec![vec![1, 2]]).unwrap();
        let (e, e_clauses) = join_blowup_family(&cnf).unwrap();
        let alpha = Alphabet::from_letters("a");
        let d = alpha.document("a").unwrap();
        let va1 = e.compile(&alpha).unwrap();
        let va2 = e_clauses.compile(&alpha).unwrap();
        let joined = crate::autops::join(&va1, &va2).unwrap();
        let m1 = evaluate(&va1, &d).unwrap();
        let m2 = evaluate(&va2, &d).unwrap();
        let mut expected = BTreeSet::new();
        for a in &m1 {
            for b in &m2 {
                if a.compatible(b) {
                    expected.insert(a.merge(b).unwrap());
                }
            }
        }
        assert_eq!(evaluate(&joined, &d).unwrap(), expected);
        assert!(!expected.is_empty());
    }

    #[test]
    fn join_family_with_no_clauses_is_the_equality_gadget() {
        let cnf = Cnf::new(1, vec![]).unwrap();
        let (e, e_clauses) = join_blowup_family(&cnf).unwrap();
        let alpha = Alphabet::from_letters("a");
        let d = alpha.document("a").unwrap();
        let va1 = e.compile(&alpha).unwrap();
        let va2 = e_clauses.compile(&alpha).unwrap();
        let joined = crate::autops::join(&va1, &va2).unwrap();
        assert_eq!(evaluate(&joined, &d).unwrap(), evaluate(&va1, &d).unwrap());
    }

    #[test]
    fn skyline_family_single_clause() {
        let cnf = Cnf::new(2, vec![vec![1, 2]]).unwrap();
        let va = skyline_blowup_family(&cnf).unwrap();
        let rule = DominationRule::native("varinc").unwrap();
        let doc = Alphabet::default().document("").unwrap();
        let sky = skyline_direct(&va, &doc, &rule).unwrap();
        let projected = blowup_projection(&sky, 2);
        let expected: BTreeSet<BTreeSet<usize>> =
            [[1, 2].into(), [1].into(), [2].into()].into();
        assert_eq!(projected, expected);
    }

    #[test]
    fn skyline_family_tautological_clause() {
        // x1 | x1 keeps only the all-ones assignment
        let cnf = Cnf::new(1, vec![vec![1, 1]]).unwrap();
        let va = skyline_blowup_family(&cnf).unwrap();
        let rule = DominationRule::native("varinc").unwrap();
        let doc = Alphabet::default().document("").unwrap();
        let sky = skyline_direct(&va, &doc, &rule).unwrap();
        let projected = blowup_projection(&sky, 1);
        assert_eq!(projected, sat_models(&cnf).unwrap());
    }

    #[test]
    fn skyline_family_matches_cnf_models_on_random_formulas() {
        let rule = DominationRule::native("varinc").unwrap();
        let doc = Alphabet::default().document("").unwrap();
        for seed in 0..15 {
            let g = random_cubic_graph(seed, 2 + (seed % 4) as usize);
            let cnf = graph_to_cnf(&g).unwrap();
            if cnf.num_clauses() == 0 {
                continue;
            }
            let va = skyline_blowup_family(&cnf).unwrap();
            let sky = skyline_direct(&va, &doc, &rule).unwrap();
            assert_eq!(
                blowup_projection(&sky, cnf.num_vars()),
                sat_models(&cnf).unwrap(),
                "seed {seed}"
            );
        }
    }

    #[test]
    fn graph_to_cnf_examples() {
        let triangle = Graph { nodes: 3, edges: vec![(0, 1), (1, 2), (2, 0)] };
        let cnf = graph_to_cnf(&triangle).unwrap();
        assert_eq!(cnf.num_clauses(), 3);
        assert_eq!(cnf.num_vars(), 3);
        assert!(cnf.is_read3_monotone_2cnf());
        let path = Graph { nodes: 3, edges: vec![(0, 1), (1, 2)] };
        let cnf = graph_to_cnf(&path).unwrap();
        assert_eq!(cnf.clauses(), &[vec![1, 2], vec![2, 3]]);
        for seed in 0..5 {
            let g = random_cubic_graph(seed, 8);
            assert!(g.max_degree() <= 3, "seed {seed}");
            assert!(graph_to_cnf(&g).unwrap().is_read3_monotone_2cnf());
        }
        let star = Graph { nodes: 5, edges: vec![(0, 1), (0, 2), (0, 3), (0, 4)] };
        assert!(graph_to_cnf(&star).is_err());
    }

    #[test]
    fn umdsdp_reduction_spaninc() {
        let alpha = Alphabet::from_letters("a");
        let d = alpha.document("aa").unwrap();
        let rule = DominationRule::builtin("spaninc", &alpha).unwrap();
        let pairs = vec![
            StrictDominationPair::new(Some(Span::new(0, 0)), Some(Span::new(0, 1))).unwrap(),
            StrictDominationPair::new(Some(Span::new(1, 1)), Some(Span::new(1, 2))).unwrap(),
        ];
        let cnf = Cnf::new(2, vec![vec![1, 2]]).unwrap();
        let red = umdsdp_reduction(&rule, &d, &pairs, &cnf, &alpha).unwrap();
        let sky = skyline_direct(&red.va, &red.doc, &rule).unwrap();
        assert!(red.detects_sat(&sky));
        assert!(sat(&cnf).unwrap());
    }

    #[test]
    fn umdsdp_reduction_empty_clause_is_unsat() {
        let alpha = Alphabet::from_letters("a");
        let d = alpha.document("aa").unwrap();
        let rule = DominationRule::builtin("spaninc", &alpha).unwrap();
        let pairs = vec![
            StrictDominationPair::new(Some(Span::new(0, 0)), Some(Span::new(0, 1))).unwrap(),
            StrictDominationPair::new(Some(Span::new(1, 1)), Some(Span::new(1, 2))).unwrap(),
        ];
        let cnf = Cnf::new(2, vec![vec![]]).unwrap();
        let red = umdsdp_reduction(&rule, &d, &pairs, &cnf, &alpha).unwrap();
        let sky = skyline_direct(&red.va, &red.doc, &rule).unwrap();
        assert!(!red.detects_sat(&sky));
        assert!(!sat(&cnf).unwrap());
    }

    #[test]
    fn umdsdp_reduction_varinc_matches_brute_sat() {
        let alpha = Alphabet::from_letters("a");
        let rule = DominationRule::builtin("varinc", &alpha).unwrap();
        for (vars, clauses) in [
            (2, vec![vec![1, 2]]),
            (2, vec![vec![1], vec![-1, 2]]),
            (2, vec![vec![1], vec![-1]]),
            (3, vec![vec![1, -2], vec![2, 3]]),
        ] {
            let cnf = Cnf::new(vars, clauses).unwrap();
            let d = alpha.document(&"a".repeat(vars)).unwrap();
            let pairs: Vec<StrictDominationPair> = (0..vars)
                .map(|i| StrictDominationPair::new(None, Some(Span::new(i, i + 1))).unwrap())
                .collect();
            let red = umdsdp_reduction(&rule, &d, &pairs, &cnf, &alpha).unwrap();
            let sky = skyline_direct(&red.va, &red.doc, &rule).unwrap();
            assert_eq!(red.detects_sat(&sky), sat(&cnf).unwrap(), "{cnf:?}");
        }
    }

    #[test]
    fn rejects_bad_pairs() {
        let alpha = Alphabet::from_letters("a");
        let d = alpha.document("aa").unwrap();
        let rule = DominationRule::builtin("spaninc", &alpha).unwrap();
        // not a domination pair of the rule
        let bogus = vec![
            StrictDominationPair::new(Some(Span::new(0, 1)), Some(Span::new(1, 2))).unwrap(),
        ];
        let cnf = Cnf::new(1, vec![vec![1]]).unwrap();
        assert!(matches!(
            umdsdp_reduction(&rule, &d, &bogus, &cnf, &alpha),
            Err(Error::InvalidPairs(_))
        ));
        // overlapping pairs
        let overlapping = vec![
            StrictDominationPair::new(Some(Span::new(0, 0)), Some(Span::new(0, 2))).unwrap(),
            StrictDominationPair::new(Some(Span::new(1, 1)), Some(Span::new(1, 2))).unwrap(),
        ];
        let cnf = Cnf::new(2, vec![vec![1, 2]]).unwrap();
        assert!(matches!(
            umdsdp_reduction(&rule, &d, &overlapping, &cnf, &alpha),
            Err(Error::InvalidPairs(_))
        ));
    }

    #[test]
    fn random_va_is_sequential_and_live() {
        let limits = RandomVaLimits::default();
        for seed in 0..200 {
            let va = random_va(seed, &limits);
            assert!(va.flags().sequential, "seed {seed}");
            assert!(!va.is_empty_spanner(), "seed {seed}");
            assert!(va.num_states() <= limits.max_states);
        }
    }

    #[test]
    fn naive_regex_eval_smoke() {
        let alpha = ab();
        let e = crate::regexformula::parse("x{a*} b a*|a* b x{a*}", &alpha).unwrap();
        let d = alpha.document("aba").unwrap();
        let got = naive_regex_eval(&e, &d);
        assert_eq!(got.len(), 2);
    }
}
