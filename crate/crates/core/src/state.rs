//! Finite-support elements of the modal state space.
//!
//! Index `2n` holds the position component of block `n` and `2n + 1` its
//! velocity component; block 0 is the rigid-body block.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Sparse element of l2. Exact zeros are never stored, so structural
/// equality is equality of vectors.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<(usize, f64)>", into = "Vec<(usize, f64)>")]
pub struct StateVector {
    entries: BTreeMap<usize, f64>,
}

impl StateVector {
    pub fn zeros() -> Self {
        Self::default()
    }

    pub fn from_entries<I: IntoIterator<Item = (usize, f64)>>(entries: I) -> Self {
        let mut v = Self::zeros();
        for (i, x) in entries {
            v.add(i, x);
        }
        v
    }

    pub fn from_dense(values: &[f64]) -> Self {
        Self::from_entries(values.iter().copied().enumerate())
    }

    /// Unit vector on `index`.
    pub fn unit(index: usize) -> Self {
        Self::from_entries([(index, 1.0)])
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries.get(&index).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, index: usize, value: f64) {
        if value == 0.0 {
            self.entries.remove(&index);
        } else {
            self.entries.insert(index, value);
        }
    }

    pub fn add(&mut self, index: usize, value: f64) {
        let v = self.get(index) + value;
        self.set(index, v);
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().map(|(&i, &x)| (i, x))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.keys().next_back().copied()
    }

    /// Highest block with a nonzero component.
    pub fn max_block(&self) -> Option<usize> {
        self.max_index().map(|i| i / 2)
    }

    pub fn norm(&self) -> f64 {
        self.entries.values().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Dense copy of the first `len` components.
    pub fn to_dense(&self, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for (i, x) in self.entries.range(..len) {
            out[*i] = *x;
        }
        out
    }

    /// Position and velocity components of `block`.
    pub fn block(&self, block: usize) -> [f64; 2] {
        [self.get(2 * block), self.get(2 * block + 1)]
    }

    pub fn sub(&self, other: &StateVector) -> StateVector {
        let mut out = self.clone();
        for (i, x) in other.iter() {
            out.add(i, -x);
        }
        out
    }

    pub fn plus(&self, other: &StateVector) -> StateVector {
        let mut out = self.clone();
        for (i, x) in other.iter() {
            out.add(i, x);
        }
        out
    }

    /// Keeps blocks `0..=order` (indices `<= 2 order + 1`).
    pub fn project(&self, order: usize) -> StateVector {
        let cut = 2 * order + 1;
        StateVector {
            entries: self.entries.range(..=cut).map(|(&i, &x)| (i, x)).collect(),
        }
    }

    /// Everything above block `order`.
    pub fn complement(&self, order: usize) -> StateVector {
        let cut = 2 * order + 1;
        StateVector {
            entries: self
                .entries
                .range(cut + 1..)
                .map(|(&i, &x)| (i, x))
                .collect(),
        }
    }
}

impl From<Vec<(usize, f64)>> for StateVector {
    fn from(v: Vec<(usize, f64)>) -> Self {
        Self::from_entries(v)
    }
}

impl From<StateVector> for Vec<(usize, f64)> {
    fn from(v: StateVector) -> Self {
        v.entries.into_iter().collect()
    }
}
