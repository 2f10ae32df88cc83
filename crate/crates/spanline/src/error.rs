use std::fmt;

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// A span reaches past the end of the document it is used with.
    SpanOutOfBounds { span: (usize, usize), len: usize },
    /// A letter does not belong to the declared alphabet.
    LetterOutsideAlphabet(char),
    /// Syntax error while parsing a regex formula, with byte offset.
    Parse { message: String, offset: usize },
    /// The formula compiles to an automaton with an accepting run that
    /// assigns some variable twice.
    NonSequentialFormula(String),
    /// An operation required a sequential automaton but was given one
    /// that is not.
    NonSequentialInput(&'static str),
    /// Two automata that must have disjoint variable sets share a variable.
    VariableClash(String),
    /// A mapping uses a variable outside the rule's declared variable set.
    VariableOutsideRule(String),
    /// The skyline compiler was handed a rule with no regular spanner form.
    NonRegularRule(String),
    /// The reduction generator cannot lay out the requested captures as a
    /// regex formula (crossing, non-nested spans).
    UnsupportedLayout(String),
    /// The strict domination pairs handed to a reduction are not usable
    /// (not strict, not disjoint, or not separable into document parts).
    InvalidPairs(String),
    /// Malformed input file (VA JSON, DIMACS, rule file).
    InvalidInput(String),
    /// An internal invariant was violated; indicates a bug.
    Internal(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::SpanOutOfBounds { span, len } => {
                write!(f, "span [{},{}> out of bounds for document of length {}", span.0, span.1, len)
            }
            Error::LetterOutsideAlphabet(c) => write!(f, "letter {c:?} outside the declared alphabet"),
            Error::Parse { message, offset } => write!(f, "parse error at offset {offset}: {message}"),
            Error::NonSequentialFormula(v) => {
                write!(f, "formula is not sequential: variable {v} can be assigned twice on one match")
            }
            Error::NonSequentialInput(op) => write!(f, "{op} requires a sequential automaton"),
            Error::VariableClash(v) => write!(f, "variable {v} occurs on both sides of a disjoint-variable operation"),
            Error::VariableOutsideRule(v) => write!(f, "variable {v} is outside the rule's variable set"),
            Error::NonRegularRule(name) => write!(f, "rule {name} has no regular spanner form"),
            Error::UnsupportedLayout(m) => write!(f, "cannot lay out captures as a regex formula: {m}"),
            Error::InvalidPairs(m) => write!(f, "invalid strict domination pairs: {m}"),
            Error::InvalidInput(m) => write!(f, "invalid input: {m}"),
            Error::Internal(m) => write!(f, "internal invariant violated: {m}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
