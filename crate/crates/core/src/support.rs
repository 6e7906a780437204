use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered feature index set `T` (0-based, strictly increasing).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SupportSet {
    indices: Vec<usize>,
}

impl SupportSet {
    /// Validates that `indices` is strictly increasing and every entry is `< p`.
    pub fn new(indices: Vec<usize>, p: usize) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::arg("support indices must be strictly increasing"));
        }
        if let Some(&last) = indices.last() {
            if last >= p {
                return Err(Error::arg(format!("support index {last} out of range for p = {p}")));
            }
        }
        Ok(Self { indices })
    }

    /// Sorts and deduplicates before validating.
    pub fn from_unsorted(mut indices: Vec<usize>, p: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        Self::new(indices, p)
    }

    /// `{0, .., p-1}`.
    pub fn full(p: usize) -> Self {
        Self {
            indices: (0..p).collect(),
        }
    }

    /// Indices of the nonzero entries of `z`.
    pub fn support_of(z: &[f64]) -> Self {
        Self {
            indices: z
                .iter()
                .enumerate()
                .filter_map(|(i, &v)| (v != 0.0).then_some(i))
                .collect(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    /// `{0, .., p-1} \ T`, increasing.
    pub fn complement(&self, p: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(p.saturating_sub(self.len()));
        let mut it = self.indices.iter().peekable();
        for i in 0..p {
            if it.peek() == Some(&&i) {
                it.next();
            } else {
                out.push(i);
            }
        }
        out
    }

    /// Boolean membership mask of length `p`.
    pub fn mask(&self, p: usize) -> Vec<bool> {
        let mut m = vec![false; p];
        for &i in &self.indices {
            m[i] = true;
        }
        m
    }

    /// Sorted union of two sets.
    pub fn union(&self, other: &SupportSet) -> SupportSet {
        let mut v: Vec<usize> = self.indices.iter().chain(&other.indices).copied().collect();
        v.sort_unstable();
        v.dedup();
        SupportSet { indices: v }
    }

    /// Pads with the smallest unused indices until the set has `s` elements.
    pub fn padded_to(&self, s: usize, p: usize) -> SupportSet {
        if self.len() >= s {
            return self.clone();
        }
        let mut extra = self.complement(p);
        extra.truncate(s - self.len());
        let mut v = self.indices.clone();
        v.extend(extra);
        v.sort_unstable();
        SupportSet { indices: v }
    }

    /// 1-based indices, as written to files and logs.
    pub fn one_based(&self) -> Vec<usize> {
        self.indices.iter().map(|i| i + 1).collect()
    }
}
