//! Fixed-parameter Bloom filters and the chains that hold them.
//!
//! Every filter has m = 2^18 bits and k = 2 index slices, so filters from
//! different builds can always be OR-ed together. Occupancy is tracked by
//! counting set bits, and a chain grows a new filter once the estimated
//! number of insertions would exceed [`N_MAX`].

use bitvec::prelude::*;
use thiserror::Error;

use crate::digest::Digest36;

/// Bits per filter.
pub const M: usize = 1 << 18;
/// Index slices per digest.
pub const K: u32 = 2;
/// Largest estimated insertion count a filter may reach.
pub const N_MAX: f64 = 1028.0;
/// Per-filter false-positive bound at `N_MAX` insertions.
pub const F_MAX: f64 = 1.0 / 16384.0;
/// Chain length limit imposed by the 16-bit filter count on the wire.
pub const MAX_FILTERS: usize = u16::MAX as usize;

pub type FilterBits = BitSlice<u64, Lsb0>;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("filter chain would exceed {MAX_FILTERS} filters")]
pub struct CapacityError;

/// Expected insertions given `ones` set bits: -(m/k) ln(1 - x/m).
pub fn estimate_from_ones(ones: usize) -> f64 {
    if ones >= M {
        return f64::INFINITY;
    }
    -(M as f64 / f64::from(K)) * (-(ones as f64) / M as f64).ln_1p()
}

fn within_bound(ones: usize) -> bool {
    estimate_from_ones(ones) <= N_MAX
}

#[derive(Clone, PartialEq, Eq)]
pub struct BloomFilter {
    bits: BitBox<u64, Lsb0>,
    ones: usize,
}

impl std::fmt::Debug for BloomFilter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BloomFilter")
            .field("ones", &self.ones)
            .finish()
    }
}

impl Default for BloomFilter {
    fn default() -> Self {
        Self::new()
    }
}

impl BloomFilter {
    pub fn new() -> Self {
        BloomFilter {
            bits: bitbox![u64, Lsb0; 0; M],
            ones: 0,
        }
    }

    /// Builds a filter from exactly `M` bits.
    pub fn from_bits(bits: &FilterBits) -> Option<Self> {
        if bits.len() != M {
            return None;
        }
        let bits: BitBox<u64, Lsb0> = bits.into();
        let ones = bits.count_ones();
        Some(BloomFilter { bits, ones })
    }

    pub fn bits(&self) -> &FilterBits {
        &self.bits
    }

    pub fn ones(&self) -> usize {
        self.ones
    }

    pub fn is_empty(&self) -> bool {
        self.ones == 0
    }

    /// Sets both index bits and returns how many flipped from 0 to 1.
    pub fn insert(&mut self, d: Digest36) -> u32 {
        let idx = d.indices();
        let mut newly_set = 0;
        for i in [idx.hi as usize, idx.lo as usize] {
            if !self.bits[i] {
                self.bits.set(i, true);
                newly_set += 1;
            }
        }
        self.ones += newly_set as usize;
        newly_set
    }

    /// Number of bits `insert(d)` would set, without mutating.
    pub fn would_set(&self, d: Digest36) -> u32 {
        let idx = d.indices();
        let hi = !self.bits[idx.hi as usize];
        let lo = idx.hi != idx.lo && !self.bits[idx.lo as usize];
        u32::from(hi) + u32::from(lo)
    }

    pub fn contains(&self, d: Digest36) -> bool {
        let idx = d.indices();
        self.bits[idx.hi as usize] && self.bits[idx.lo as usize]
    }

    pub fn union(&self, other: &BloomFilter) -> BloomFilter {
        let mut out = self.clone();
        out.union_in_place(other);
        out
    }

    pub fn union_in_place(&mut self, other: &BloomFilter) {
        for (a, b) in self
            .bits
            .as_raw_mut_slice()
            .iter_mut()
            .zip(other.bits.as_raw_slice())
        {
            *a |= *b;
        }
        self.ones = self.bits.count_ones();
    }

    /// Set bits in `self | other`, without allocating.
    pub fn union_ones(&self, other: &BloomFilter) -> usize {
        self.bits
            .as_raw_slice()
            .iter()
            .zip(other.bits.as_raw_slice())
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum()
    }

    pub fn estimate_n(&self) -> f64 {
        estimate_from_ones(self.ones)
    }
}

/// An ordered, non-empty sequence of filters in creation order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterChain {
    filters: Vec<BloomFilter>,
}

impl Default for FilterChain {
    fn default() -> Self {
        Self::new()
    }
}

impl FilterChain {
    /// A chain holding one empty filter.
    pub fn new() -> Self {
        FilterChain {
            filters: vec![BloomFilter::new()],
        }
    }

    pub fn from_filters(filters: Vec<BloomFilter>) -> Result<Self, CapacityError> {
        if filters.len() > MAX_FILTERS {
            return Err(CapacityError);
        }
        if filters.is_empty() {
            return Ok(Self::new());
        }
        Ok(FilterChain { filters })
    }

    pub fn filters(&self) -> &[BloomFilter] {
        &self.filters
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    /// Always false; a chain carries at least one filter.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, d: Digest36) -> bool {
        self.filters.iter().any(|f| f.contains(d))
    }

    /// Inserts `d`, opening a new filter if the last one would exceed the
    /// occupancy bound. Digests already queryable are left alone.
    pub fn insert(&mut self, d: Digest36) -> Result<(), CapacityError> {
        if self.contains(d) {
            return Ok(());
        }
        let last = self.filters.last_mut().expect("chain is non-empty");
        let projected = last.ones() + last.would_set(d) as usize;
        if within_bound(projected) {
            last.insert(d);
            return Ok(());
        }
        if self.filters.len() >= MAX_FILTERS {
            return Err(CapacityError);
        }
        let mut fresh = BloomFilter::new();
        fresh.insert(d);
        self.filters.push(fresh);
        Ok(())
    }

    /// Merges `other` into `self`. Each filter of `other`, in order, is OR-ed
    /// into the first filter whose merged occupancy stays within bound, or
    /// appended if none fits. All-zero filters carry nothing and are skipped.
    pub fn union_with(&mut self, other: &FilterChain) -> Result<(), CapacityError> {
        for g in other.filters.iter().filter(|g| !g.is_empty()) {
            match self
                .filters
                .iter_mut()
                .find(|h| within_bound(h.union_ones(g)))
            {
                Some(h) => h.union_in_place(g),
                None => {
                    if self.filters.len() >= MAX_FILTERS {
                        return Err(CapacityError);
                    }
                    self.filters.push(g.clone());
                }
            }
        }
        Ok(())
    }

    pub fn union(&self, other: &FilterChain) -> Result<FilterChain, CapacityError> {
        let mut out = self.clone();
        out.union_with(other)?;
        Ok(out)
    }
}
