//! Sparse token-weight vectors.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Index of a token in a [`Vocabulary`](crate::Vocabulary).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TokenId(pub u32);

impl TokenId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<u32> for TokenId {
    fn from(id: u32) -> Self {
        TokenId(id)
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A map from token to strictly positive weight, stored as entries sorted
/// by strictly increasing [`TokenId`]. Zero weights are never stored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    entries: Vec<(TokenId, f64)>,
}

impl SparseVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a vector from unordered `(token, weight)` pairs.
    ///
    /// Zero weights are dropped. Negative or non-finite weights and
    /// repeated tokens are rejected.
    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (TokenId, f64)>,
    {
        let mut entries: Vec<(TokenId, f64)> = Vec::new();
        for (token, weight) in pairs {
            if !weight.is_finite() || weight < 0.0 {
                return Err(Error::InvalidWeight { token: token.0, weight });
            }
            if weight > 0.0 {
                entries.push((token, weight));
            }
        }
        entries.sort_unstable_by_key(|&(t, _)| t);
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateToken(w[0].0 .0));
        }
        Ok(Self { entries })
    }

    /// Binary vector with weight 1.0 on every distinct token.
    pub fn binary<I>(tokens: I) -> Self
    where
        I: IntoIterator<Item = TokenId>,
    {
        let mut ids: Vec<TokenId> = tokens.into_iter().collect();
        ids.sort_unstable();
        ids.dedup();
        Self {
            entries: ids.into_iter().map(|t| (t, 1.0)).collect(),
        }
    }

    /// Term-frequency vector: each occurrence of a token adds 1.0.
    pub fn counts<I>(tokens: I) -> Self
    where
        I: IntoIterator<Item = TokenId>,
    {
        let mut ids: Vec<TokenId> = tokens.into_iter().collect();
        ids.sort_unstable();
        let mut entries: Vec<(TokenId, f64)> = Vec::with_capacity(ids.len());
        for id in ids {
            match entries.last_mut() {
                Some((last, w)) if *last == id => *w += 1.0,
                _ => entries.push((id, 1.0)),
            }
        }
        Self { entries }
    }

    #[inline]
    pub fn entries(&self) -> &[(TokenId, f64)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (TokenId, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn tokens(&self) -> impl Iterator<Item = TokenId> + '_ {
        self.entries.iter().map(|&(t, _)| t)
    }

    /// Weight of `token`, 0.0 when absent.
    pub fn get(&self, token: TokenId) -> f64 {
        self.entries
            .binary_search_by_key(&token, |&(t, _)| t)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn l1(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w).sum()
    }

    /// Largest token id plus one, or 0 for the empty vector.
    pub fn dim_hint(&self) -> usize {
        self.entries.last().map_or(0, |&(t, _)| t.index() + 1)
    }
}
