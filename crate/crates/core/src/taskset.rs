//! Compact set of task ids backed by a 64-bit mask.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Largest task id a [`TaskSet`] can hold, plus one.
pub const MAX_TASK_IDS: usize = 64;

/// Unordered set of task ids in `0..64`.
///
/// Value functions are indexed by sets rather than sequences, so this is the
/// key used throughout the value solver and the auction.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskSet(u64);

impl TaskSet {
    pub const fn empty() -> Self {
        TaskSet(0)
    }

    pub const fn from_bits(bits: u64) -> Self {
        TaskSet(bits)
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    pub fn singleton(task: usize) -> Self {
        debug_assert!(task < MAX_TASK_IDS);
        TaskSet(1u64 << task)
    }

    /// The set `{0, 1, .., n-1}`.
    pub fn first_n(n: usize) -> Self {
        debug_assert!(n <= MAX_TASK_IDS);
        if n == MAX_TASK_IDS {
            TaskSet(u64::MAX)
        } else {
            TaskSet((1u64 << n) - 1)
        }
    }

    pub fn contains(self, task: usize) -> bool {
        task < MAX_TASK_IDS && self.0 & (1u64 << task) != 0
    }

    pub fn insert(&mut self, task: usize) {
        debug_assert!(task < MAX_TASK_IDS);
        self.0 |= 1u64 << task;
    }

    pub fn remove(&mut self, task: usize) {
        if task < MAX_TASK_IDS {
            self.0 &= !(1u64 << task);
        }
    }

    #[must_use]
    pub fn with(mut self, task: usize) -> Self {
        self.insert(task);
        self
    }

    #[must_use]
    pub fn without(mut self, task: usize) -> Self {
        self.remove(task);
        self
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset_of(self, other: TaskSet) -> bool {
        self.0 & !other.0 == 0
    }

    #[must_use]
    pub fn union(self, other: TaskSet) -> Self {
        TaskSet(self.0 | other.0)
    }

    #[must_use]
    pub fn intersection(self, other: TaskSet) -> Self {
        TaskSet(self.0 & other.0)
    }

    #[must_use]
    pub fn difference(self, other: TaskSet) -> Self {
        TaskSet(self.0 & !other.0)
    }

    /// Task ids in ascending order.
    pub fn iter(self) -> TaskSetIter {
        TaskSetIter(self.0)
    }

    /// All subsets of `self`, in increasing order of their bit pattern.
    pub fn subsets(self) -> impl Iterator<Item = TaskSet> {
        let full = self.0;
        let mut next = Some(0u64);
        std::iter::from_fn(move || {
            let current = next?;
            next = if current == full {
                None
            } else {
                Some((current.wrapping_sub(full)) & full)
            };
            Some(TaskSet(current))
        })
    }
}

impl FromIterator<usize> for TaskSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut set = TaskSet::empty();
        for task in iter {
            set.insert(task);
        }
        set
    }
}

impl<'a> FromIterator<&'a usize> for TaskSet {
    fn from_iter<I: IntoIterator<Item = &'a usize>>(iter: I) -> Self {
        iter.into_iter().copied().collect()
    }
}

impl IntoIterator for TaskSet {
    type Item = usize;
    type IntoIter = TaskSetIter;

    fn into_iter(self) -> TaskSetIter {
        self.iter()
    }
}

pub struct TaskSetIter(u64);

impl Iterator for TaskSetIter {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let task = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(task)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for TaskSetIter {}

impl fmt::Debug for TaskSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for TaskSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, task) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{task}")?;
        }
        write!(f, "}}")
    }
}
