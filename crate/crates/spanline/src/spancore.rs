//! Core value types: documents, spans, mappings, markers and ref-words.
//!
//! Everything here is an immutable value. Spans are half-open `[i,j>`
//! intervals with 0-based positions; a mapping is a partial assignment
//! from variables to spans and is the unit of extraction results.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::autops::{Label, Va, VaBuilder};
use crate::error::{Error, Result};

/// The declared alphabet of an artifact instance: a finite set of letters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Alphabet(BTreeSet<char>);

impl Alphabet {
    pub fn new<I: IntoIterator<Item = char>>(letters: I) -> Self {
        Alphabet(letters.into_iter().collect())
    }

    /// Parses every character of `s` as a letter.
    pub fn from_letters(s: &str) -> Self {
        Alphabet(s.chars().collect())
    }

    pub fn contains(&self, c: char) -> bool {
        self.0.contains(&c)
    }

    pub fn letters(&self) -> impl Iterator<Item = char> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Validates `text` against this alphabet and wraps it as a document.
    pub fn document(&self, text: &str) -> Result<Document> {
        for c in text.chars() {
            if !self.contains(c) {
                return Err(Error::LetterOutsideAlphabet(c));
            }
        }
        Ok(Document { chars: text.chars().collect() })
    }

    /// The smallest alphabet containing both operands' letters.
    pub fn union(&self, other: &Alphabet) -> Alphabet {
        Alphabet(self.0.union(&other.0).copied().collect())
    }
}

/// A document is a finite word over the declared alphabet.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Document {
    chars: Vec<char>,
}

impl Document {
    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    pub fn letter(&self, pos: usize) -> char {
        self.chars[pos]
    }

    pub fn letters(&self) -> impl Iterator<Item = char> + '_ {
        self.chars.iter().copied()
    }

    /// The contiguous subword of the document at `span`.
    pub fn substring(&self, span: Span) -> Result<String> {
        if span.end > self.len() {
            return Err(Error::SpanOutOfBounds { span: (span.begin, span.end), len: self.len() });
        }
        Ok(self.chars[span.begin..span.end].iter().collect())
    }
}

impl fmt::Display for Document {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.chars {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// A half-open interval `[begin,end>` locating a factor of a document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    begin: usize,
    end: usize,
}

impl Span {
    /// Panics if `begin > end`; use [`Span::checked`] for untrusted input.
    pub fn new(begin: usize, end: usize) -> Self {
        assert!(begin <= end, "span begin {begin} past end {end}");
        Span { begin, end }
    }

    pub fn checked(begin: usize, end: usize) -> Result<Self> {
        if begin <= end {
            Ok(Span { begin, end })
        } else {
            Err(Error::InvalidInput(format!("span [{begin},{end}> has begin past end")))
        }
    }

    pub fn begin(&self) -> usize {
        self.begin
    }

    pub fn end(&self) -> usize {
        self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.begin
    }

    pub fn is_empty(&self) -> bool {
        self.begin == self.end
    }

    pub fn fits(&self, d: &Document) -> bool {
        self.end <= d.len()
    }

    /// True iff `self` is included in `outer`.
    pub fn included_in(&self, outer: Span) -> bool {
        outer.begin <= self.begin && outer.end >= self.end
    }

    /// Two spans overlap iff some non-empty span is included in both.
    pub fn overlaps(&self, other: Span) -> bool {
        self.begin.max(other.begin) < self.end.min(other.end)
    }

    pub fn disjoint(&self, other: Span) -> bool {
        !self.overlaps(other)
    }

    /// The smallest span containing both.
    pub fn cover(&self, other: Span) -> Span {
        Span::new(self.begin.min(other.begin), self.end.max(other.end))
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}>", self.begin, self.end)
    }
}

/// True iff `inner` is included in `outer`.
pub fn span_included(inner: Span, outer: Span) -> bool {
    inner.included_in(outer)
}

/// A variable name, optionally carrying the dagger annotation that marks
/// the right-hand side of a domination pair. Rendered as `x!` in ASCII.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Var {
    name: String,
    dagger: bool,
}

impl Var {
    pub fn new(name: &str) -> Self {
        debug_assert!(Self::valid_base(name), "bad variable name {name:?}");
        Var { name: name.to_string(), dagger: false }
    }

    /// Parses a rendered name, accepting a trailing `!` as the dagger.
    pub fn parse(s: &str) -> Result<Self> {
        let (base, dagger) = match s.strip_suffix('!') {
            Some(b) => (b, true),
            None => (s, false),
        };
        if Self::valid_base(base) {
            Ok(Var { name: base.to_string(), dagger })
        } else {
            Err(Error::InvalidInput(format!("bad variable name {s:?}")))
        }
    }

    fn valid_base(s: &str) -> bool {
        let mut chars = s.chars();
        match chars.next() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
            _ => return false,
        }
        chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_dagger(&self) -> bool {
        self.dagger
    }

    /// The annotated copy `x!` of this variable.
    pub fn dagger(&self) -> Var {
        debug_assert!(!self.dagger, "double dagger on {self}");
        Var { name: self.name.clone(), dagger: true }
    }

    /// Strips the dagger annotation.
    pub fn undagger(&self) -> Var {
        Var { name: self.name.clone(), dagger: false }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.name, if self.dagger { "!" } else { "" })
    }
}

impl TryFrom<String> for Var {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        Var::parse(&s)
    }
}

impl From<Var> for String {
    fn from(v: Var) -> String {
        v.to_string()
    }
}

/// Opening or closing marker of a variable. The derived order is the fixed
/// total order used for canonical ref-words: all opens before all closes,
/// each group sorted by variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Marker {
    Open(Var),
    Close(Var),
}

impl Marker {
    pub fn var(&self) -> &Var {
        match self {
            Marker::Open(v) | Marker::Close(v) => v,
        }
    }

    pub fn is_open(&self) -> bool {
        matches!(self, Marker::Open(_))
    }
}

impl fmt::Display for Marker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Marker::Open(v) => write!(f, "|-{v}"),
            Marker::Close(v) => write!(f, "-|{v}"),
        }
    }
}

/// One symbol of a ref-word: a letter or a marker.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RefSym {
    Letter(char),
    Mark(Marker),
}

/// A word over the alphabet extended with markers, encoding a document and
/// a mapping simultaneously.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct RefWord(pub Vec<RefSym>);

impl RefWord {
    /// Checks validity: per variable either no markers occur, or exactly
    /// one open occurs before exactly one close.
    pub fn is_valid(&self) -> bool {
        let mut state: BTreeMap<&Var, u8> = BTreeMap::new(); // 0 unseen, 1 open, 2 closed
        for sym in &self.0 {
            if let RefSym::Mark(m) = sym {
                let st = state.entry(m.var()).or_insert(0);
                match (m.is_open(), *st) {
                    (true, 0) => *st = 1,
                    (false, 1) => *st = 2,
                    _ => return false,
                }
            }
        }
        state.values().all(|&s| s != 1)
    }

    /// Decodes a valid ref-word into its erasure and the encoded mapping.
    pub fn decode(&self) -> Result<(Document, Mapping)> {
        if !self.is_valid() {
            return Err(Error::InvalidInput("ref-word is not valid".into()));
        }
        let mut chars = Vec::new();
        let mut open_at: BTreeMap<Var, usize> = BTreeMap::new();
        let mut mapping = Mapping::empty();
        for sym in &self.0 {
            match sym {
                RefSym::Letter(c) => chars.push(*c),
                RefSym::Mark(Marker::Open(v)) => {
                    open_at.insert(v.clone(), chars.len());
                }
                RefSym::Mark(Marker::Close(v)) => {
                    let b = open_at[v];
                    mapping.insert(v.clone(), Span::new(b, chars.len()));
                }
            }
        }
        Ok((Document { chars }, mapping))
    }
}

/// A partial assignment from variables to spans.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Mapping(BTreeMap<Var, Span>);

impl Mapping {
    pub fn empty() -> Self {
        Mapping(BTreeMap::new())
    }

    pub fn from_pairs<I: IntoIterator<Item = (Var, Span)>>(pairs: I) -> Self {
        Mapping(pairs.into_iter().collect())
    }

    pub fn insert(&mut self, var: Var, span: Span) {
        self.0.insert(var, span);
    }

    pub fn get(&self, var: &Var) -> Option<Span> {
        self.0.get(var).copied()
    }

    pub fn remove(&mut self, var: &Var) -> Option<Span> {
        self.0.remove(var)
    }

    pub fn domain(&self) -> impl Iterator<Item = &Var> + '_ {
        self.0.keys()
    }

    pub fn domain_set(&self) -> BTreeSet<Var> {
        self.0.keys().cloned().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, Span)> + '_ {
        self.0.iter().map(|(v, s)| (v, *s))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn fits(&self, d: &Document) -> bool {
        self.0.values().all(|s| s.fits(d))
    }

    /// True iff the mappings agree on every shared variable.
    pub fn compatible(&self, other: &Mapping) -> bool {
        self.0
            .iter()
            .all(|(v, s)| other.0.get(v).is_none_or(|s2| s == s2))
    }

    /// Restriction of the mapping to the variables in `vars`.
    pub fn restrict(&self, vars: &BTreeSet<Var>) -> Mapping {
        Mapping(self.0.iter().filter(|(v, _)| vars.contains(v)).map(|(v, s)| (v.clone(), *s)).collect())
    }

    /// The mapping assigning `x!` wherever this one assigns `x`.
    pub fn dagger(&self) -> Mapping {
        Mapping(self.0.iter().map(|(v, s)| (v.dagger(), *s)).collect())
    }

    /// Strips dagger annotations from every assigned variable.
    pub fn undagger(&self) -> Mapping {
        Mapping(self.0.iter().map(|(v, s)| (v.undagger(), *s)).collect())
    }

    /// Union of two compatible mappings; errors on a conflicting variable.
    pub fn merge(&self, other: &Mapping) -> Result<Mapping> {
        let mut out = self.0.clone();
        for (v, s) in &other.0 {
            if let Some(prev) = out.insert(v.clone(), *s) {
                if prev != *s {
                    return Err(Error::Internal(format!("merge conflict on {v}")));
                }
            }
        }
        Ok(Mapping(out))
    }

    /// JSON object with one key per variable of `universe`, `null` when the
    /// variable is unassigned, `[begin,end]` otherwise.
    pub fn to_json(&self, universe: &BTreeSet<Var>) -> serde_json::Value {
        let mut obj = serde_json::Map::new();
        for v in universe {
            let val = match self.get(v) {
                Some(s) => serde_json::json!([s.begin(), s.end()]),
                None => serde_json::Value::Null,
            };
            obj.insert(v.to_string(), val);
        }
        serde_json::Value::Object(obj)
    }
}

impl fmt::Display for Mapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (v, s)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}:{s}")?;
        }
        write!(f, "}}")
    }
}

/// True iff the mappings agree on every shared variable.
pub fn compatible(m1: &Mapping, m2: &Mapping) -> bool {
    m1.compatible(m2)
}

/// The canonical ref-word of `(d, m)`: at each position all due opening
/// markers precede all due closing markers, each group sorted by variable.
pub fn canonical_refword(d: &Document, m: &Mapping) -> Result<RefWord> {
    if !m.fits(d) {
        return Err(Error::SpanOutOfBounds {
            span: m.iter().find(|(_, s)| !s.fits(d)).map(|(_, s)| (s.begin(), s.end())).unwrap(),
            len: d.len(),
        });
    }
    let mut syms = Vec::new();
    for pos in 0..=d.len() {
        let mut due: Vec<Marker> = Vec::new();
        for (v, s) in m.iter() {
            if s.begin() == pos {
                due.push(Marker::Open(v.clone()));
            }
            if s.end() == pos {
                due.push(Marker::Close(v.clone()));
            }
        }
        due.sort();
        syms.extend(due.into_iter().map(RefSym::Mark));
        if pos < d.len() {
            syms.push(RefSym::Letter(d.letter(pos)));
        }
    }
    Ok(RefWord(syms))
}

/// An automaton over the alphabet extended with markers that accepts
/// exactly the valid ref-words whose erasure is `d` and whose markers
/// encode `m`. At each position the due markers may appear in any order,
/// except that a variable's open always precedes its close.
pub fn refwords_of(d: &Document, m: &Mapping, alphabet: &Alphabet) -> Result<Va> {
    if !m.fits(d) {
        return Err(Error::SpanOutOfBounds {
            span: m.iter().find(|(_, s)| !s.fits(d)).map(|(_, s)| (s.begin(), s.end())).unwrap(),
            len: d.len(),
        });
    }
    let mut b = VaBuilder::new();
    // Per position, states are indexed by the subset of due markers already
    // emitted; an open must be emitted before the same variable's close.
    let mut entry_state: Vec<usize> = Vec::new();
    let mut full_state: Vec<usize> = Vec::new();
    for pos in 0..=d.len() {
        let mut due: Vec<Marker> = Vec::new();
        for (v, s) in m.iter() {
            if s.begin() == pos {
                due.push(Marker::Open(v.clone()));
            }
            if s.end() == pos {
                due.push(Marker::Close(v.clone()));
            }
        }
        due.sort();
        let k = due.len();
        let mut subset_state: BTreeMap<u32, usize> = BTreeMap::new();
        for mask in 0..(1u32 << k) {
            if subset_ok(&due, mask) {
                subset_state.insert(mask, b.add_state());
            }
        }
        entry_state.push(subset_state[&0]);
        full_state.push(subset_state[&((1u32 << k) - 1)]);
        for (&mask, &st) in &subset_state {
            for (i, mk) in due.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    continue;
                }
                if let Marker::Close(v) = mk {
                    // If this position also opens v, the open must come first.
                    if let Some(j) = due.iter().position(|m2| m2 == &Marker::Open(v.clone())) {
                        if mask & (1 << j) == 0 {
                            continue;
                        }
                    }
                }
                let next = mask | (1 << i);
                if let Some(&to) = subset_state.get(&next) {
                    let label = match mk {
                        Marker::Open(v) => Label::Open(v.clone()),
                        Marker::Close(v) => Label::Close(v.clone()),
                    };
                    b.add_transition(st, label, to);
                }
            }
        }
    }
    for pos in 0..d.len() {
        b.add_transition(full_state[pos], Label::Letter(d.letter(pos)), entry_state[pos + 1]);
    }
    b.mark_final(full_state[d.len()]);
    b.set_initial(entry_state[0]);
    let vars = m.domain_set();
    Ok(b.build(alphabet.clone(), vars))
}

fn subset_ok(due: &[Marker], mask: u32) -> bool {
    for (i, mk) in due.iter().enumerate() {
        if mask & (1 << i) != 0 {
            if let Marker::Close(v) = mk {
                if let Some(j) = due.iter().position(|m2| m2 == &Marker::Open(v.clone())) {
                    if mask & (1 << j) == 0 {
                        return false;
                    }
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab() -> Alphabet {
        Alphabet::from_letters("ab")
    }

    #[test]
    fn substring_examples() {
        let alpha = Alphabet::from_letters("qwerty");
        let d = alpha.document("qwertyqwerty").unwrap();
        assert_eq!(d.substring(Span::new(2, 5)).unwrap(), "ert");
        assert_eq!(d.substring(Span::new(8, 11)).unwrap(), "ert");
        let d = Alphabet::from_letters("abc").document("abc").unwrap();
        assert_eq!(d.substring(Span::new(1, 1)).unwrap(), "");
        let d = ab().document("aba").unwrap();
        assert_eq!(d.substring(Span::new(0, 3)).unwrap(), "aba");
        assert!(matches!(d.substring(Span::new(2, 4)), Err(Error::SpanOutOfBounds { .. })));
    }

    #[test]
    fn substring_of_full_span_is_document() {
        for text in ["", "a", "ab", "abba"] {
            let d = ab().document(text).unwrap();
            assert_eq!(d.substring(Span::new(0, d.len())).unwrap(), text);
        }
    }

    #[test]
    fn span_inclusion_examples() {
        assert!(span_included(Span::new(1, 2), Span::new(0, 2)));
        assert!(span_included(Span::new(0, 2), Span::new(0, 2)));
        assert!(!span_included(Span::new(1, 3), Span::new(2, 5)));
    }

    #[test]
    fn span_inclusion_is_a_partial_order() {
        // exhaustive over all spans of documents of length <= 6
        let spans: Vec<Span> =
            (0..=6).flat_map(|b| (b..=6).map(move |e| Span::new(b, e))).collect();
        for &s in &spans {
            assert!(span_included(s, s));
        }
        for &s in &spans {
            for &t in &spans {
                if span_included(s, t) && span_included(t, s) {
                    assert_eq!(s, t);
                }
                for &u in &spans {
                    if span_included(s, t) && span_included(t, u) {
                        assert!(span_included(s, u));
                    }
                }
            }
        }
    }

    #[test]
    fn compatibility() {
        let x = Var::new("x");
        let y = Var::new("y");
        let m1 = Mapping::from_pairs([(x.clone(), Span::new(1, 2))]);
        let m2 = Mapping::from_pairs([(x.clone(), Span::new(1, 2)), (y.clone(), Span::new(0, 1))]);
        let m3 = Mapping::from_pairs([(x.clone(), Span::new(1, 3))]);
        assert!(compatible(&m1, &m2));
        assert!(!compatible(&m1, &m3));
        assert!(compatible(&Mapping::empty(), &m3));
        // symmetric and reflexive
        for m in [&m1, &m2, &m3] {
            assert!(compatible(m, m));
        }
        assert_eq!(compatible(&m1, &m2), compatible(&m2, &m1));
        assert_eq!(compatible(&m1, &m3), compatible(&m3, &m1));
    }

    /// All ref-words an automaton accepts, up to the given length.
    fn language(va: &crate::autops::Va, max_len: usize) -> BTreeSet<RefWord> {
        let mut out = BTreeSet::new();
        let mut stack = vec![(Vec::new(), va.initial())];
        while let Some((word, q)) = stack.pop() {
            if va.is_final(q) {
                out.insert(RefWord(word.clone()));
            }
            if word.len() == max_len {
                continue;
            }
            for (label, to) in va.outgoing(q) {
                let sym = match label {
                    Label::Letter(c) => RefSym::Letter(*c),
                    Label::Open(v) => RefSym::Mark(Marker::Open(v.clone())),
                    Label::Close(v) => RefSym::Mark(Marker::Close(v.clone())),
                    Label::Eps => panic!("epsilon-free expected"),
                };
                let mut next = word.clone();
                next.push(sym);
                stack.push((next, *to));
            }
        }
        out
    }

    #[test]
    fn refwords_of_forced_order() {
        let x = Var::new("x");
        let d = ab().document("").unwrap();
        let m = Mapping::from_pairs([(x.clone(), Span::new(0, 0))]);
        let va = refwords_of(&d, &m, &ab()).unwrap();
        let words = language(&va, 2);
        let expected =
            RefWord(vec![RefSym::Mark(Marker::Open(x.clone())), RefSym::Mark(Marker::Close(x))]);
        assert_eq!(words, BTreeSet::from([expected]));
    }

    #[test]
    fn refwords_of_enumerates_permutations() {
        let x = Var::new("x");
        let y = Var::new("y");
        let d = ab().document("a").unwrap();
        let m =
            Mapping::from_pairs([(x.clone(), Span::new(0, 1)), (y.clone(), Span::new(0, 1))]);
        let va = refwords_of(&d, &m, &ab()).unwrap();
        let words = language(&va, 5);
        let mk = |order: [Marker; 2], close: [Marker; 2]| {
            RefWord(vec![
                RefSym::Mark(order[0].clone()),
                RefSym::Mark(order[1].clone()),
                RefSym::Letter('a'),
                RefSym::Mark(close[0].clone()),
                RefSym::Mark(close[1].clone()),
            ])
        };
        let ox = Marker::Open(x.clone());
        let oy = Marker::Open(y.clone());
        let cx = Marker::Close(x.clone());
        let cy = Marker::Close(y.clone());
        let expected = BTreeSet::from([
            mk([ox.clone(), oy.clone()], [cx.clone(), cy.clone()]),
            mk([oy.clone(), ox.clone()], [cy.clone(), cx.clone()]),
            mk([ox.clone(), oy.clone()], [cy.clone(), cx.clone()]),
            mk([oy.clone(), ox.clone()], [cx.clone(), cy.clone()]),
        ]);
        assert_eq!(words, expected);
    }

    #[test]
    fn refwords_of_empty_mapping() {
        let d = ab().document("a").unwrap();
        let va = refwords_of(&d, &Mapping::empty(), &ab()).unwrap();
        assert_eq!(language(&va, 3), BTreeSet::from([RefWord(vec![RefSym::Letter('a')])]));
    }

    #[test]
    fn refword_decode_reencode_round_trip() {
        let x = Var::new("x");
        let y = Var::new("y");
        let w = RefWord(vec![
            RefSym::Mark(Marker::Open(y.clone())),
            RefSym::Letter('a'),
            RefSym::Mark(Marker::Open(x.clone())),
            RefSym::Mark(Marker::Close(x)),
            RefSym::Letter('b'),
            RefSym::Mark(Marker::Close(y)),
        ]);
        assert!(w.is_valid());
        let (d, m) = w.decode().unwrap();
        assert_eq!(d.to_string(), "ab");
        let va = refwords_of(&d, &m, &ab()).unwrap();
        assert!(va.accepts_refword(&w));
    }

    #[test]
    fn refword_validity() {
        let x = Var::new("x");
        assert!(!RefWord(vec![RefSym::Mark(Marker::Close(x.clone()))]).is_valid());
        assert!(!RefWord(vec![RefSym::Mark(Marker::Open(x.clone()))]).is_valid());
        assert!(!RefWord(vec![
            RefSym::Mark(Marker::Open(x.clone())),
            RefSym::Mark(Marker::Close(x.clone())),
            RefSym::Mark(Marker::Open(x)),
        ])
        .is_valid());
    }

    #[test]
    fn canonical_refword_sorts_blocks() {
        let x = Var::new("x");
        let y = Var::new("y");
        let d = ab().document("a").unwrap();
        let m =
            Mapping::from_pairs([(y.clone(), Span::new(0, 1)), (x.clone(), Span::new(0, 1))]);
        let w = canonical_refword(&d, &m).unwrap();
        assert_eq!(
            w.0,
            vec![
                RefSym::Mark(Marker::Open(x.clone())),
                RefSym::Mark(Marker::Open(y.clone())),
                RefSym::Letter('a'),
                RefSym::Mark(Marker::Close(x)),
                RefSym::Mark(Marker::Close(y)),
            ]
        );
    }

    #[test]
    fn var_parsing_and_order() {
        let x = Var::parse("x").unwrap();
        let xd = Var::parse("x!").unwrap();
        assert!(xd.is_dagger());
        assert_eq!(x.dagger(), xd);
        assert_eq!(xd.undagger(), x);
        assert!(x < xd);
        assert!(Var::parse("9x").is_err());
        assert!(Var::parse("").is_err());
        // opens before closes in the canonical marker order
        assert!(Marker::Open(Var::new("z")) < Marker::Close(Var::new("a")));
    }
}
