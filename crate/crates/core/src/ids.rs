use serde::{Deserialize, Serialize};
use std::fmt;

/// Index of a base station (player).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BsId(pub usize);

/// Global index of a user terminal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(pub usize);

impl fmt::Display for BsId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "bs{}", self.0)
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "u{}", self.0)
    }
}

/// Largest number of base stations a [`BsSet`] can hold.
pub const MAX_BS: usize = 64;

/// Set of base stations transmitting in one TTI, stored as a bitmask.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BsSet(pub u64);

impl BsSet {
    pub const EMPTY: BsSet = BsSet(0);

    pub fn single(bs: BsId) -> Self {
        BsSet(1u64 << bs.0)
    }

    pub fn all(n_bs: usize) -> Self {
        if n_bs >= MAX_BS {
            BsSet(u64::MAX)
        } else {
            BsSet((1u64 << n_bs) - 1)
        }
    }

    pub fn contains(self, bs: BsId) -> bool {
        bs.0 < MAX_BS && self.0 & (1u64 << bs.0) != 0
    }

    pub fn with(self, bs: BsId) -> Self {
        BsSet(self.0 | (1u64 << bs.0))
    }

    pub fn without(self, bs: BsId) -> Self {
        BsSet(self.0 & !(1u64 << bs.0))
    }

    pub fn union(self, other: BsSet) -> Self {
        BsSet(self.0 | other.0)
    }

    pub fn is_subset(self, other: BsSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = BsId> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(BsId(i))
            }
        })
    }
}

impl FromIterator<BsId> for BsSet {
    fn from_iter<I: IntoIterator<Item = BsId>>(iter: I) -> Self {
        iter.into_iter().fold(BsSet::EMPTY, BsSet::with)
    }
}
