use std::collections::HashMap;
use std::fmt;

use xxhash_rust::xxh3::xxh3_64;

use super::TreeError;

/// Dimension of the trigram fallback embedding.
pub const DEFAULT_EMBEDDING_DIM: usize = 32;

/// Keyword vectors of a single fixed dimension.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingSet {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingSet {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            vectors: HashMap::new(),
        }
    }

    /// Parses `keyword v1 v2 ... vD` lines. Blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self, TreeError> {
        let mut set: Option<Self> = None;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let mut fields = line.split_whitespace();
            let Some(keyword) = fields.next() else {
                continue;
            };
            let vector = fields
                .map(|f| f.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| TreeError::EmbeddingParse {
                    line: line_no,
                    reason: e.to_string(),
                })?;
            if vector.is_empty() {
                return Err(TreeError::EmbeddingParse {
                    line: line_no,
                    reason: "no vector components".into(),
                });
            }
            let set = set.get_or_insert_with(|| Self::new(vector.len()));
            set.insert(keyword, vector)
                .map_err(|reason| TreeError::EmbeddingParse {
                    line: line_no,
                    reason,
                })?;
        }
        Ok(set.unwrap_or_else(|| Self::new(DEFAULT_EMBEDDING_DIM)))
    }

    /// Trigram fallback vectors for every keyword.
    pub fn fallback<I, S>(keywords: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = Self::new(DEFAULT_EMBEDDING_DIM);
        for kw in keywords {
            let kw = kw.as_ref();
            set.vectors
                .insert(kw.to_string(), trigram_embedding(kw, DEFAULT_EMBEDDING_DIM));
        }
        set
    }

    pub fn insert(&mut self, keyword: &str, vector: Vec<f64>) -> Result<(), String> {
        if vector.len() != self.dim {
            return Err(format!(
                "expected {} components, found {}",
                self.dim,
                vector.len()
            ));
        }
        self.vectors.insert(keyword.to_string(), vector);
        Ok(())
    }

    pub fn get(&self, keyword: &str) -> Option<&[f64]> {
        self.vectors.get(keyword).map(Vec::as_slice)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

impl fmt::Display for EmbeddingSet {
    /// Writes the parseable line format, keywords in sorted order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut keys: Vec<&String> = self.vectors.keys().collect();
        keys.sort_unstable();
        for k in keys {
            write!(f, "{k}")?;
            for x in &self.vectors[k] {
                write!(f, " {x}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Signed hashed counts of the character trigrams of `#keyword#`, L2-normalized.
pub fn trigram_embedding(keyword: &str, dim: usize) -> Vec<f64> {
    let padded: Vec<char> = std::iter::once('#')
        .chain(keyword.chars())
        .chain(std::iter::once('#'))
        .collect();
    let mut v = vec![0.0; dim];
    let mut buf = String::new();
    for w in padded.windows(3) {
        buf.clear();
        buf.extend(w);
        let h = xxh3_64(buf.as_bytes());
        let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
        v[(h % dim as u64) as usize] += sign;
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in &mut v {
            *x /= norm;
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_round_trips() {
        let set = EmbeddingSet::fallback(["beta", "alpha", "gamma"]);
        let text = set.to_string();
        assert!(text.starts_with("alpha "));
        assert_eq!(EmbeddingSet::parse(&text).unwrap(), set);
    }

    #[test]
    fn parse_file_format() {
        let set = EmbeddingSet::parse("cat 1 0 0\n\ndog 0.5 0.5 -1e-3\n").unwrap();
        assert_eq!(set.dim(), 3);
        assert_eq!(set.len(), 2);
        assert_eq!(set.get("dog").unwrap(), &[0.5, 0.5, -0.001]);
        assert!(set.get("cow").is_none());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        assert_eq!(
            EmbeddingSet::parse("a 1 2\nb 1\n").unwrap_err(),
            TreeError::EmbeddingParse {
                line: 2,
                reason: "expected 2 components, found 1".into()
            }
        );
        assert!(matches!(
            EmbeddingSet::parse("a 1 x\n"),
            Err(TreeError::EmbeddingParse { line: 1, .. })
        ));
        assert!(matches!(
            EmbeddingSet::parse("lonely\n"),
            Err(TreeError::EmbeddingParse { line: 1, .. })
        ));
    }

    #[test]
    fn fallback_is_normalized_and_deterministic() {
        let set = EmbeddingSet::fallback(["rain", "x"]);
        for kw in ["rain", "x"] {
            let v = set.get(kw).unwrap();
            assert_eq!(v.len(), DEFAULT_EMBEDDING_DIM);
            let norm: f64 = v.iter().map(|x| x * x).sum();
            assert!((norm - 1.0).abs() < 1e-9);
            assert_eq!(v, trigram_embedding(kw, DEFAULT_EMBEDDING_DIM).as_slice());
        }
    }

    #[test]
    fn shared_trigrams_bring_keywords_closer() {
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let a = trigram_embedding("temperature", 32);
        let b = trigram_embedding("temperatures", 32);
        let c = trigram_embedding("humidity", 32);
        assert!(dot(&a, &b) > dot(&a, &c));
    }
}
