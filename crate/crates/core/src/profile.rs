//! Eventually periodic sequences indexed by generation.
//!
//! A [`Profile`] is a total function on the integers described by a finite
//! table of explicit values layered over two periodic tails. The rightward
//! tail is anchored at index 0 (`period[n mod len]` for `n >= 0`), the
//! leftward tail at index -1 (`left_period[(-n - 1) mod len]` for `n < 0`).
//! An empty leftward tail reuses the rightward one, continued periodically
//! below zero.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "RawProfile<T>",
    bound(deserialize = "T: Deserialize<'de> + Clone")
)]
pub struct Profile<T> {
    #[serde(rename = "prefix", with = "explicit_pairs")]
    explicit: BTreeMap<i64, T>,
    period: Vec<T>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    left_period: Vec<T>,
}

#[derive(Deserialize)]
struct RawProfile<T> {
    #[serde(default = "BTreeMap::new", with = "explicit_pairs")]
    prefix: BTreeMap<i64, T>,
    period: Vec<T>,
    #[serde(default = "Vec::new")]
    left_period: Vec<T>,
}

impl<T: Clone> TryFrom<RawProfile<T>> for Profile<T> {
    type Error = Error;

    fn try_from(raw: RawProfile<T>) -> Result<Self> {
        Profile::new(raw.prefix, raw.period, raw.left_period)
    }
}

impl<T: Clone> Profile<T> {
    pub fn new(explicit: BTreeMap<i64, T>, period: Vec<T>, left_period: Vec<T>) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::InvalidSpec("profile period must be nonempty".into()));
        }
        Ok(Self {
            explicit,
            period,
            left_period,
        })
    }

    pub fn constant(value: T) -> Self {
        Self {
            explicit: BTreeMap::new(),
            period: vec![value],
            left_period: Vec::new(),
        }
    }

    /// Periodic in both directions with the same repeating block.
    pub fn periodic(period: Vec<T>) -> Result<Self> {
        Self::new(BTreeMap::new(), period, Vec::new())
    }

    pub fn with_explicit(mut self, index: i64, value: T) -> Self {
        self.explicit.insert(index, value);
        self
    }

    pub fn with_left_period(mut self, left: Vec<T>) -> Self {
        self.left_period = left;
        self
    }

    pub fn at(&self, n: i64) -> T {
        if let Some(v) = self.explicit.get(&n) {
            return v.clone();
        }
        if n >= 0 || self.left_period.is_empty() {
            let len = self.period.len() as i64;
            self.period[n.rem_euclid(len) as usize].clone()
        } else {
            let len = self.left_period.len() as i64;
            self.left_period[(-n - 1).rem_euclid(len) as usize].clone()
        }
    }

    pub fn explicit(&self) -> &BTreeMap<i64, T> {
        &self.explicit
    }

    pub fn period(&self) -> &[T] {
        &self.period
    }

    pub fn left_period(&self) -> &[T] {
        &self.left_period
    }

    /// Every index `n >= right_start()` is governed by the rightward tail.
    pub fn right_start(&self) -> i64 {
        match self.explicit.keys().next_back() {
            Some(&hi) => (hi + 1).max(0),
            None => 0,
        }
    }

    /// Every index `n <= left_end()` is governed by the leftward tail.
    pub fn left_end(&self) -> i64 {
        match self.explicit.keys().next() {
            Some(&lo) => (lo - 1).min(-1),
            None => -1,
        }
    }

    pub fn right_period_len(&self) -> usize {
        self.period.len()
    }

    pub fn left_period_len(&self) -> usize {
        if self.left_period.is_empty() {
            self.period.len()
        } else {
            self.left_period.len()
        }
    }

    /// Values of one full leftward period.
    pub fn left_tail(&self) -> &[T] {
        if self.left_period.is_empty() {
            &self.period
        } else {
            &self.left_period
        }
    }

    pub fn values(&self) -> impl Iterator<Item = &T> {
        self.explicit
            .values()
            .chain(self.period.iter())
            .chain(self.left_period.iter())
    }

    pub fn map<U: Clone>(&self, f: impl Fn(&T) -> U) -> Profile<U> {
        Profile {
            explicit: self.explicit.iter().map(|(k, v)| (*k, f(v))).collect(),
            period: self.period.iter().map(&f).collect(),
            left_period: self.left_period.iter().map(&f).collect(),
        }
    }
}

pub(crate) fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

mod explicit_pairs {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S, T>(map: &BTreeMap<i64, T>, s: S) -> Result<S::Ok, S::Error>
    where
        S: Serializer,
        T: Serialize,
    {
        let pairs: Vec<(&i64, &T)> = map.iter().collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D, T>(d: D) -> Result<BTreeMap<i64, T>, D::Error>
    where
        D: Deserializer<'de>,
        T: Deserialize<'de>,
    {
        let pairs: Vec<(i64, T)> = Vec::deserialize(d)?;
        Ok(pairs.into_iter().collect())
    }
}
