//! Multi-attribute annotations of data streams and queries.
//!
//! A stream is described by at most one descriptor per attribute. A missing
//! attribute is the empty value and attr-matches anything. A stream α-matches a
//! query when at least `α·n` of the `n` registered attributes attr-match, where
//! attributes absent from the query count as matches.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::NodeId;

/// Stable index of an attribute inside an [`AttributeRegistry`].
pub type AttrId = u16;

/// Character reserved as the leaf terminator of alphabetical codes.
pub const TERMINATOR: char = '$';

#[derive(Debug, Error, PartialEq)]
pub enum AnnotationError {
    #[error("duplicate attribute name `{0}`")]
    DuplicateAttribute(String),
    #[error("attribute id {0} appears twice in one annotation")]
    RepeatedDescriptor(AttrId),
    #[error("descriptor value for attribute {0} is empty")]
    EmptyValue(AttrId),
    #[error("value `{0}` contains the reserved terminator `$`")]
    ReservedCharacter(String),
    #[error("alpha {0} outside [0, 1]")]
    AlphaOutOfRange(f64),
    #[error("query has no descriptors")]
    EmptyQuery,
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Ordered, duplicate-free list of attribute names; ids are positions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AttributeRegistry {
    names: Vec<String>,
    index: HashMap<String, AttrId>,
}

impl AttributeRegistry {
    pub fn new<I, S>(names: I) -> Result<Self, AnnotationError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut reg = Self::default();
        for name in names {
            let name = name.into();
            if reg.index.contains_key(&name) {
                return Err(AnnotationError::DuplicateAttribute(name));
            }
            reg.intern(&name);
        }
        Ok(reg)
    }

    /// Returns the id of `name`, registering it if unseen.
    pub fn intern(&mut self, name: &str) -> AttrId {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len() as AttrId;
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        id
    }

    pub fn id(&self, name: &str) -> Option<AttrId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: AttrId) -> Option<&str> {
        self.names.get(id as usize).map(String::as_str)
    }

    /// Number of attributes, the `n` of the α threshold.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Lower-cases and trims a raw keyword the way all ingestion paths do.
pub fn normalize_value(raw: &str) -> String {
    raw.trim().to_lowercase()
}

/// One `(attribute, value)` pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Descriptor {
    pub attr: AttrId,
    pub value: String,
}

impl Descriptor {
    /// Builds a descriptor from a raw value, normalizing it first.
    pub fn new(attr: AttrId, raw: &str) -> Result<Self, AnnotationError> {
        let value = normalize_value(raw);
        if value.is_empty() {
            return Err(AnnotationError::EmptyValue(attr));
        }
        if value.contains(TERMINATOR) {
            return Err(AnnotationError::ReservedCharacter(value));
        }
        Ok(Self { attr, value })
    }
}

fn sorted_unique(mut descriptors: Vec<Descriptor>) -> Result<Vec<Descriptor>, AnnotationError> {
    descriptors.sort_by_key(|d| d.attr);
    for pair in descriptors.windows(2) {
        if pair[0].attr == pair[1].attr {
            return Err(AnnotationError::RepeatedDescriptor(pair[0].attr));
        }
    }
    Ok(descriptors)
}

fn value_of(descriptors: &[Descriptor], attr: AttrId) -> Option<&str> {
    descriptors
        .binary_search_by_key(&attr, |d| d.attr)
        .ok()
        .map(|i| descriptors[i].value.as_str())
}

/// Annotation of one data stream; descriptors are kept sorted by attribute id.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamAnnotation {
    pub stream_id: String,
    descriptors: Vec<Descriptor>,
}

impl StreamAnnotation {
    pub fn new(
        stream_id: impl Into<String>,
        descriptors: Vec<Descriptor>,
    ) -> Result<Self, AnnotationError> {
        Ok(Self {
            stream_id: stream_id.into(),
            descriptors: sorted_unique(descriptors)?,
        })
    }

    pub fn descriptors(&self) -> &[Descriptor] {
        &self.descriptors
    }

    pub fn value(&self, attr: AttrId) -> Option<&str> {
        value_of(&self.descriptors, attr)
    }
}

/// A discovery query `(A^q, α, source)` with an optional hop bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    descriptors: Vec<Descriptor>,
    pub alpha: f64,
    pub src: NodeId,
    /// `None` is an unbounded query.
    pub hop_bound: Option<u32>,
}

impl Query {
    pub fn new(
        descriptors: Vec<Descriptor>,
        alpha: f64,
        src: NodeId,
        hop_bound: Option<u32>,
    ) -> Result<Self, AnnotationError> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(AnnotationError::AlphaOutOfRange(alpha));
        }
        if descriptors.is_empty() {
            return Err(AnnotationError::EmptyQuery);
        }
        Ok(Self {
            descriptors: sorted_unique(descriptors)?,
            alpha,
            src,
            hop_bound,
        })
    }

    pub fn descriptors(&self) -> &[Descriptor] {
        &self.descriptors
    }

    pub fn value(&self, attr: AttrId) -> Option<&str> {
        value_of(&self.descriptors, attr)
    }
}

/// Per-attribute match: equal values, or either side absent.
pub fn attr_match(q: Option<&str>, ds: Option<&str>) -> bool {
    match (q, ds) {
        (Some(a), Some(b)) => a == b,
        _ => true,
    }
}

/// `true` when `matches ≥ α·n`; ties count as a match.
pub fn meets_threshold(matches: usize, alpha: f64, n: usize) -> bool {
    // tolerance keeps products such as 0.7 * 10 from rounding past an integer
    matches as f64 + 1e-9 >= alpha * n as f64
}

/// α-match over all `n` registered attributes.
pub fn alpha_match(q: &Query, ann: &StreamAnnotation, n: usize) -> bool {
    let mismatches = q
        .descriptors
        .iter()
        .filter(|d| !attr_match(Some(&d.value), ann.value(d.attr)))
        .count();
    meets_threshold(n.saturating_sub(mismatches), q.alpha, n)
}

/// α-match in which a query descriptor only counts when the stream carries the
/// same value. Streams lacking a queried attribute advertise nothing for it, so
/// this is the set of streams that descriptor routing can reach.
pub fn alpha_match_advertised(q: &Query, ann: &StreamAnnotation, n: usize) -> bool {
    let misses = q
        .descriptors
        .iter()
        .filter(|d| ann.value(d.attr) != Some(d.value.as_str()))
        .count();
    meets_threshold(n.saturating_sub(misses), q.alpha, n)
}

/// A parsed dataset: the attribute registry and the stream annotations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub registry: AttributeRegistry,
    pub streams: Vec<StreamAnnotation>,
}

impl Dataset {
    /// Parses `stream_id<TAB>attr=value;attr=value;...` lines. Lines starting with
    /// `#` and blank lines are skipped, except an `#attributes<TAB>a;b;...` line
    /// which fixes attribute ids up front. Other attribute ids follow first
    /// appearance.
    pub fn parse(text: &str) -> Result<Self, AnnotationError> {
        let mut out = Dataset::default();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |reason: String| AnnotationError::Parse {
                line: line_no,
                reason,
            };
            if let Some(names) = line.strip_prefix("#attributes\t") {
                for name in names.split(';').map(str::trim).filter(|n| !n.is_empty()) {
                    out.registry.intern(name);
                }
                continue;
            }
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let (id, rest) = line
                .split_once('\t')
                .ok_or_else(|| err("missing TAB after stream id".into()))?;
            let id = id.trim();
            if id.is_empty() {
                return Err(err("empty stream id".into()));
            }
            let mut descriptors = Vec::new();
            for part in rest.split(';').filter(|p| !p.trim().is_empty()) {
                let (attr, value) = part
                    .split_once('=')
                    .ok_or_else(|| err(format!("descriptor `{part}` has no `=`")))?;
                let attr = attr.trim();
                if attr.is_empty() {
                    return Err(err(format!("descriptor `{part}` has no attribute")));
                }
                let attr_id = out.registry.intern(attr);
                descriptors.push(Descriptor::new(attr_id, value).map_err(|e| err(e.to_string()))?);
            }
            let stream = StreamAnnotation::new(id, descriptors).map_err(|e| err(e.to_string()))?;
            out.streams.push(stream);
        }
        Ok(out)
    }

    /// Keywords of one attribute, sorted and deduplicated.
    pub fn keywords(&self, attr: AttrId) -> Vec<String> {
        let mut kws: Vec<String> = self
            .streams
            .iter()
            .filter_map(|s| s.value(attr).map(str::to_string))
            .collect();
        kws.sort_unstable();
        kws.dedup();
        kws
    }

    pub fn unique_keyword_count(&self) -> usize {
        (0..self.registry.len() as AttrId)
            .map(|a| self.keywords(a).len())
            .sum()
    }
}

impl fmt::Display for Dataset {
    /// Writes the dataset back in its line format.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.registry.is_empty() {
            writeln!(f, "#attributes\t{}", self.registry.names().join(";"))?;
        }
        for s in &self.streams {
            write!(f, "{}\t", s.stream_id)?;
            for (i, d) in s.descriptors.iter().enumerate() {
                if i > 0 {
                    f.write_str(";")?;
                }
                let name = self.registry.name(d.attr).unwrap_or("?");
                write!(f, "{}={}", name, d.value)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
