//! Inverse document frequency tables.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::vector::TokenId;
use crate::vocab::Vocabulary;

/// Value returned for tokens with no stored IDF.
pub const DEFAULT_IDF: f64 = 1.0;

/// Per-token IDF values with a fallback for unknown tokens.
///
/// Stored values are always finite and strictly positive, so IDF-weighted
/// scores never flip sign.
#[derive(Debug, Clone, PartialEq)]
pub struct IdfTable {
    values: BTreeMap<TokenId, f64>,
    default: f64,
    source: String,
}

impl IdfTable {
    /// Empty table: every lookup returns [`DEFAULT_IDF`].
    pub fn new(source: impl Into<String>) -> Self {
        Self {
            values: BTreeMap::new(),
            default: DEFAULT_IDF,
            source: source.into(),
        }
    }

    pub fn with_default(mut self, default: f64) -> Result<Self> {
        check_positive(None, default)?;
        self.default = default;
        Ok(self)
    }

    pub fn insert(&mut self, token: TokenId, value: f64) -> Result<()> {
        check_positive(Some(token), value)?;
        self.values.insert(token, value);
        Ok(())
    }

    #[inline]
    pub fn get(&self, token: TokenId) -> f64 {
        self.values.get(&token).copied().unwrap_or(self.default)
    }

    pub fn default_value(&self) -> f64 {
        self.default
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (TokenId, f64)> + '_ {
        self.values.iter().map(|(&t, &v)| (t, v))
    }

    /// Copy with every value (and the default) multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidConfig(format!("IDF scale factor must be positive, got {factor}")));
        }
        let mut out = Self::new(self.source.clone()).with_default(self.default * factor)?;
        for (t, v) in self.iter() {
            out.insert(t, v * factor)?;
        }
        Ok(out)
    }

    /// Median IDF over the given tokens (lower median for even counts).
    pub fn median_of<I>(&self, tokens: I) -> Option<f64>
    where
        I: IntoIterator<Item = TokenId>,
    {
        let mut vals: Vec<f64> = tokens.into_iter().map(|t| self.get(t)).collect();
        if vals.is_empty() {
            return None;
        }
        vals.sort_unstable_by(f64::total_cmp);
        Some(vals[(vals.len() - 1) / 2])
    }
}

fn check_positive(token: Option<TokenId>, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidWeight {
            token: token.map_or(u32::MAX, |t| t.0),
            weight: value,
        })
    }
}

/// Smoothed IDF: `ln((N - df + 0.5) / (df + 0.5) + 1)`.
#[inline]
pub fn smoothed_idf(corpus_size: u64, df: u64) -> f64 {
    let n = corpus_size as f64;
    let df = df as f64;
    math::ln((n - df + 0.5) / (df + 0.5) + 1.0)
}

/// Computes an [`IdfTable`] from a corpus given as one token stream per
/// document (repeated tokens within a document count once).
///
/// Tokens that never occur keep the default of 1.0.
pub fn compute_idf<D, T>(docs: D, vocab: &Vocabulary, source: impl Into<String>) -> Result<IdfTable>
where
    D: IntoIterator<Item = T>,
    T: IntoIterator<Item = TokenId>,
{
    let mut df: BTreeMap<TokenId, u64> = BTreeMap::new();
    let mut n: u64 = 0;
    let mut seen = BTreeSet::new();
    for doc in docs {
        n += 1;
        seen.clear();
        for t in doc {
            if !vocab.contains(t) {
                return Err(Error::TokenOutOfRange {
                    token: t.0,
                    vocab_size: vocab.len(),
                });
            }
            if seen.insert(t) {
                *df.entry(t).or_insert(0) += 1;
            }
        }
    }
    if n == 0 {
        return Err(Error::EmptyCorpus);
    }
    let mut table = IdfTable::new(source);
    for (t, d) in df {
        table.insert(t, smoothed_idf(n, d))?;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::SparseVector;
    use alloc::vec;
    use proptest::prelude::*;

    fn vocab(n: usize) -> Vocabulary {
        Vocabulary::from_terms((0..n).map(|i| format!("t{i}"))).unwrap()
    }

    #[test]
    fn single_doc_single_token() {
        let v = vocab(2);
        let idf = compute_idf(vec![vec![TokenId(0)]], &v, "c").unwrap();
        // ln(0.5 / 1.5 + 1) = ln(4/3)
        assert!((idf.get(TokenId(0)) - 0.287_682_072_451_780_9).abs() < 1e-12);
        assert_eq!(idf.get(TokenId(1)), 1.0);
        assert_eq!(idf.source(), "c");
    }

    #[test]
    fn token_in_every_doc() {
        let v = vocab(1);
        let docs = vec![vec![TokenId(0), TokenId(0)], vec![TokenId(0)]];
        let idf = compute_idf(docs, &v, "c").unwrap();
        // ln(0.5 / 2.5 + 1) = ln(1.2)
        assert!((idf.get(TokenId(0)) - 0.182_321_556_793_954_6).abs() < 1e-12);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let docs: Vec<Vec<TokenId>> = vec![];
        assert_eq!(compute_idf(docs, &vocab(1), "c"), Err(Error::EmptyCorpus));
    }

    #[test]
    fn rejects_non_positive_values() {
        let mut t = IdfTable::new("x");
        assert!(t.insert(TokenId(0), 0.0).is_err());
        assert!(t.insert(TokenId(0), f64::INFINITY).is_err());
        assert!(IdfTable::new("x").with_default(-1.0).is_err());
    }

    #[test]
    fn median_of_tokens() {
        let mut t = IdfTable::new("x");
        t.insert(TokenId(0), 5.0).unwrap();
        t.insert(TokenId(1), 0.1).unwrap();
        t.insert(TokenId(2), 2.0).unwrap();
        assert_eq!(t.median_of([TokenId(0), TokenId(1), TokenId(2)]), Some(2.0));
        assert_eq!(t.median_of([TokenId(0), TokenId(1)]), Some(0.1));
        assert_eq!(t.median_of([]), None);
    }

    fn corpus_strategy() -> impl Strategy<Value = Vec<Vec<u32>>> {
        prop::collection::vec(prop::collection::vec(0u32..12, 0..8), 1..30)
    }

    proptest! {
        #[test]
        fn permutation_invariant(docs in corpus_strategy(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let v = vocab(12);
            let mut shuffled = docs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a = compute_idf(docs.iter().map(|d| d.iter().map(|&t| TokenId(t))), &v, "c").unwrap();
            let b = compute_idf(shuffled.iter().map(|d| d.iter().map(|&t| TokenId(t))), &v, "c").unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn higher_df_means_lower_idf(docs in corpus_strategy()) {
            let v = vocab(12);
            let vectors: Vec<SparseVector> = docs
                .iter()
                .map(|d| SparseVector::counts(d.iter().map(|&t| TokenId(t))))
                .collect();
            let idf = compute_idf(vectors.iter().map(|d| d.tokens()), &v, "c").unwrap();
            let df = |t: u32| vectors.iter().filter(|d| d.get(TokenId(t)) > 0.0).count();
            for a in 0..12u32 {
                for b in 0..12u32 {
                    if df(a) > 0 && df(b) > 0 && df(a) > df(b) {
                        prop_assert!(idf.get(TokenId(a)) <= idf.get(TokenId(b)));
                    }
                }
                if df(a) > 0 {
                    prop_assert!(idf.get(TokenId(a)) > 0.0);
                }
            }
        }
    }
}
