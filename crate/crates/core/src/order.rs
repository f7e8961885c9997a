//! Variable orders.
//!
//! An [`Order`] lists the variable read at each level. Internally variables are
//! 0-based; the serialized form and [`Order::to_one_based`] use the 1-based
//! labels `1..=n`.

use std::fmt;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Order {
    perm: Vec<usize>,
}

impl Order {
    /// Builds an order from 0-based variable indices.
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &v in &perm {
            if v >= n {
                return Err(Error::InvalidOrder(format!(
                    "variable {} out of range for n={n}",
                    v + 1
                )));
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidOrder(format!("variable {} repeated", v + 1)));
            }
        }
        Ok(Order { perm })
    }

    pub fn from_one_based(perm: &[usize]) -> Result<Self> {
        if perm.contains(&0) {
            return Err(Error::InvalidOrder("1-based order contains 0".into()));
        }
        Self::new(perm.iter().map(|v| v - 1).collect())
    }

    pub fn identity(n: usize) -> Self {
        Order { perm: (0..n).collect() }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// Variable (0-based) read at `level`.
    pub fn var_at(&self, level: usize) -> usize {
        self.perm[level]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.perm.iter().map(|v| v + 1).collect()
    }

    /// `inverse()[v]` is the level at which variable `v` is read.
    pub fn inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.perm.len()];
        for (level, &v) in self.perm.iter().enumerate() {
            inv[v] = level;
        }
        inv
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &v)| i == v)
    }

    /// Every order of `n` variables, in lexicographic order.
    pub fn all(n: usize) -> impl Iterator<Item = Order> {
        (0..n).permutations(n).map(|perm| Order { perm })
    }

    pub fn random(n: usize, rng: &mut impl rand::Rng) -> Self {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        Order { perm }
    }

    /// `count` uniformly random orders drawn from a ChaCha stream seeded by `seed`.
    pub fn sample(n: usize, count: usize, seed: u64) -> Vec<Order> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| Order::random(n, &mut rng)).collect()
    }
}

impl TryFrom<Vec<usize>> for Order {
    type Error = Error;

    fn try_from(one_based: Vec<usize>) -> Result<Self> {
        Order::from_one_based(&one_based)
    }
}

impl From<Order> for Vec<usize> {
    fn from(order: Order) -> Self {
        order.to_one_based()
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.to_one_based().iter().join(" "))
    }
}
