//! Monad sets: the integer coordinate system every node is anchored to.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// A monad (slot) number. Monads are 1-based and dense.
pub type Monad = u32;

/// An inclusive run `start..=end` of consecutive monads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Run {
    pub start: Monad,
    pub end: Monad,
}

// runs and monad sets are never empty
#[allow(clippy::len_without_is_empty)]
impl Run {
    pub fn new(start: Monad, end: Monad) -> Self {
        debug_assert!(start <= end);
        Run { start, end }
    }

    pub fn len(&self) -> u32 {
        self.end - self.start + 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MonadSetError {
    #[error("empty monad set")]
    Empty,
    #[error("malformed monad range `{0}`")]
    MalformedRange(String),
    #[error("monad 0 is not a valid monad (monads start at 1)")]
    Zero,
}

/// A non-empty set of monads, stored as maximal runs in ascending order.
///
/// Canonical text form is the comma-joined list of runs, with `a-b` for
/// runs longer than one monad and `a` for singletons: `1-3,5`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MonadSet {
    runs: Vec<Run>,
}

#[allow(clippy::len_without_is_empty)]
impl MonadSet {
    pub fn singleton(m: Monad) -> Self {
        MonadSet {
            runs: vec![Run::new(m, m)],
        }
    }

    pub fn range(start: Monad, end: Monad) -> Self {
        MonadSet {
            runs: vec![Run::new(start, end)],
        }
    }

    /// Builds a set from arbitrary monads (any order, duplicates allowed).
    pub fn from_monads<I: IntoIterator<Item = Monad>>(monads: I) -> Result<Self, MonadSetError> {
        let mut ms: Vec<Monad> = monads.into_iter().collect();
        if ms.is_empty() {
            return Err(MonadSetError::Empty);
        }
        if ms.contains(&0) {
            return Err(MonadSetError::Zero);
        }
        ms.sort_unstable();
        ms.dedup();
        let mut runs: Vec<Run> = Vec::new();
        for m in ms {
            match runs.last_mut() {
                Some(r) if r.end + 1 == m => r.end = m,
                _ => runs.push(Run::new(m, m)),
            }
        }
        Ok(MonadSet { runs })
    }

    /// Builds a set from runs that may overlap, touch, or be unsorted.
    pub fn from_runs<I: IntoIterator<Item = Run>>(runs: I) -> Result<Self, MonadSetError> {
        let mut rs: Vec<Run> = runs.into_iter().collect();
        if rs.is_empty() {
            return Err(MonadSetError::Empty);
        }
        if rs.iter().any(|r| r.start == 0) {
            return Err(MonadSetError::Zero);
        }
        rs.sort_unstable();
        let mut merged: Vec<Run> = Vec::with_capacity(rs.len());
        for r in rs {
            match merged.last_mut() {
                Some(last) if r.start <= last.end.saturating_add(1) => {
                    last.end = last.end.max(r.end)
                }
                _ => merged.push(r),
            }
        }
        Ok(MonadSet { runs: merged })
    }

    /// Wraps runs already known to be canonical (sorted, disjoint, non-touching).
    pub(crate) fn from_canonical_runs(runs: Vec<Run>) -> Self {
        debug_assert!(!runs.is_empty());
        debug_assert!(runs.windows(2).all(|w| w[0].end + 1 < w[1].start));
        MonadSet { runs }
    }

    pub fn as_ref(&self) -> Monads<'_> {
        Monads { runs: &self.runs }
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn first(&self) -> Monad {
        self.as_ref().first()
    }

    pub fn last(&self) -> Monad {
        self.as_ref().last()
    }

    pub fn len(&self) -> usize {
        self.as_ref().len()
    }

    pub fn contains(&self, m: Monad) -> bool {
        self.as_ref().contains(m)
    }

    pub fn is_subset_of(&self, other: &MonadSet) -> bool {
        self.as_ref().is_subset_of(other.as_ref())
    }

    pub fn intersects(&self, other: &MonadSet) -> bool {
        self.as_ref().intersects(other.as_ref())
    }

    pub fn iter(&self) -> impl Iterator<Item = Monad> + '_ {
        self.runs.iter().flat_map(|r| r.start..=r.end)
    }
}

impl fmt::Display for MonadSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.as_ref().fmt(f)
    }
}

impl FromStr for MonadSet {
    type Err = MonadSetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(MonadSetError::Empty);
        }
        let mut runs = Vec::new();
        for part in s.split(',') {
            let part = part.trim();
            let bad = || MonadSetError::MalformedRange(part.to_string());
            let (a, b) = match part.split_once('-') {
                Some((a, b)) => (a.trim(), b.trim()),
                None => (part, part),
            };
            let a: Monad = a.parse().map_err(|_| bad())?;
            let b: Monad = b.parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            if a == 0 {
                return Err(MonadSetError::Zero);
            }
            runs.push(Run::new(a, b));
        }
        MonadSet::from_runs(runs)
    }
}

/// Borrowed view of a canonical run list. All the set algebra lives here so
/// that loaded corpora can answer containment questions without allocating.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Monads<'a> {
    runs: &'a [Run],
}

impl<'a> Monads<'a> {
    pub(crate) fn new(runs: &'a [Run]) -> Self {
        debug_assert!(!runs.is_empty());
        Monads { runs }
    }

    pub fn runs(&self) -> &'a [Run] {
        self.runs
    }

    pub fn first(&self) -> Monad {
        self.runs[0].start
    }

    pub fn last(&self) -> Monad {
        self.runs[self.runs.len() - 1].end
    }

    pub fn len(&self) -> usize {
        self.runs.iter().map(|r| r.len() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn contains(&self, m: Monad) -> bool {
        let i = self.runs.partition_point(|r| r.end < m);
        i < self.runs.len() && self.runs[i].start <= m
    }

    /// `self ⊆ other`.
    pub fn is_subset_of(&self, other: Monads<'_>) -> bool {
        if self.first() < other.first() || self.last() > other.last() {
            return false;
        }
        let mut j = 0;
        for r in self.runs {
            while j < other.runs.len() && other.runs[j].end < r.start {
                j += 1;
            }
            match other.runs.get(j) {
                Some(o) if o.start <= r.start && r.end <= o.end => {}
                _ => return false,
            }
        }
        true
    }

    pub fn intersects(&self, other: Monads<'_>) -> bool {
        if self.last() < other.first() || other.last() < self.first() {
            return false;
        }
        let (mut i, mut j) = (0, 0);
        while i < self.runs.len() && j < other.runs.len() {
            let (a, b) = (self.runs[i], other.runs[j]);
            if a.end < b.start {
                i += 1;
            } else if b.end < a.start {
                j += 1;
            } else {
                return true;
            }
        }
        false
    }

    pub fn iter(&self) -> impl Iterator<Item = Monad> + 'a {
        self.runs.iter().flat_map(|r| r.start..=r.end)
    }

    pub fn to_owned(&self) -> MonadSet {
        MonadSet::from_canonical_runs(self.runs.to_vec())
    }
}

impl fmt::Display for Monads<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.runs.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            if r.start == r.end {
                write!(f, "{}", r.start)?;
            } else {
                write!(f, "{}-{}", r.start, r.end)?;
            }
        }
        Ok(())
    }
}
