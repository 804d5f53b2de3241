//! Sparse boolean vectors over entity and triple ids.
//!
//! Both vectors are stored as strictly increasing id lists. Producers that
//! accumulate large unions go through [`collect_sorted`], which switches to a
//! dense bitmask once the candidate count passes `width / DENSE_RATIO`.

use crate::kg::{EntityId, TripleId};

/// Candidates per slot above which a dense bitmask is used for dedup.
pub const DENSE_RATIO: usize = 32;

/// Fixed-width bitset used for dense frontiers and visited sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitmask {
    words: Vec<u64>,
    width: usize,
}

impl Bitmask {
    pub fn new(width: usize) -> Self {
        Self {
            words: vec![0; width.div_ceil(64)],
            width,
        }
    }

    #[inline]
    pub fn insert(&mut self, i: usize) -> bool {
        let (w, b) = (i / 64, i % 64);
        let mask = 1u64 << b;
        let fresh = self.words[w] & mask == 0;
        self.words[w] |= mask;
        fresh
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        i < self.width && self.words[i / 64] & (1u64 << (i % 64)) != 0
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Set bits in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &word)| {
            let mut w = word;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let tz = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + tz)
            })
        })
    }
}

/// Sorts and dedups `items` drawn from `0..width`, using a bitmask when dense.
pub fn collect_sorted(mut items: Vec<u32>, width: usize) -> Vec<u32> {
    if items.len() > 1 && items.len() * DENSE_RATIO > width {
        let mut mask = Bitmask::new(width);
        for &i in &items {
            mask.insert(i as usize);
        }
        items.clear();
        items.extend(mask.iter().map(|i| i as u32));
        items
    } else {
        items.sort_unstable();
        items.dedup();
        items
    }
}

macro_rules! sorted_id_set {
    ($(#[$meta:meta])* $name:ident, $id:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
        pub struct $name {
            active: Vec<$id>,
        }

        impl $name {
            pub fn new() -> Self {
                Self::default()
            }

            /// Builds a canonical vector from ids in any order, with repeats.
            pub fn from_ids<I: IntoIterator<Item = $id>>(ids: I) -> Self {
                let mut active: Vec<$id> = ids.into_iter().collect();
                active.sort_unstable();
                active.dedup();
                Self { active }
            }

            /// Wraps ids that are already strictly increasing.
            pub fn from_sorted_unchecked(active: Vec<$id>) -> Self {
                debug_assert!(active.windows(2).all(|w| w[0] < w[1]));
                Self { active }
            }

            pub fn from_raw<I: IntoIterator<Item = u32>>(ids: I) -> Self {
                Self::from_ids(ids.into_iter().map($id))
            }

            pub fn ids(&self) -> &[$id] {
                &self.active
            }

            pub fn raw(&self) -> impl Iterator<Item = u32> + '_ {
                self.active.iter().map(|i| i.0)
            }

            pub fn len(&self) -> usize {
                self.active.len()
            }

            pub fn is_empty(&self) -> bool {
                self.active.is_empty()
            }

            pub fn contains(&self, id: $id) -> bool {
                self.active.binary_search(&id).is_ok()
            }

            pub fn iter(&self) -> impl Iterator<Item = $id> + '_ {
                self.active.iter().copied()
            }

            pub fn into_vec(self) -> Vec<$id> {
                self.active
            }

            pub fn is_subset(&self, other: &Self) -> bool {
                let mut j = 0;
                for &x in &self.active {
                    while j < other.active.len() && other.active[j] < x {
                        j += 1;
                    }
                    if j == other.active.len() || other.active[j] != x {
                        return false;
                    }
                }
                true
            }

            pub fn union(&self, other: &Self) -> Self {
                let (a, b) = (&self.active, &other.active);
                let mut out = Vec::with_capacity(a.len() + b.len());
                let (mut i, mut j) = (0, 0);
                while i < a.len() && j < b.len() {
                    match a[i].cmp(&b[j]) {
                        std::cmp::Ordering::Less => {
                            out.push(a[i]);
                            i += 1;
                        }
                        std::cmp::Ordering::Greater => {
                            out.push(b[j]);
                            j += 1;
                        }
                        std::cmp::Ordering::Equal => {
                            out.push(a[i]);
                            i += 1;
                            j += 1;
                        }
                    }
                }
                out.extend_from_slice(&a[i..]);
                out.extend_from_slice(&b[j..]);
                Self { active: out }
            }

            pub fn intersection_len(&self, other: &Self) -> usize {
                let (a, b) = (&self.active, &other.active);
                let (mut i, mut j, mut n) = (0, 0, 0);
                while i < a.len() && j < b.len() {
                    match a[i].cmp(&b[j]) {
                        std::cmp::Ordering::Less => i += 1,
                        std::cmp::Ordering::Greater => j += 1,
                        std::cmp::Ordering::Equal => {
                            n += 1;
                            i += 1;
                            j += 1;
                        }
                    }
                }
                n
            }
        }

        impl FromIterator<$id> for $name {
            fn from_iter<I: IntoIterator<Item = $id>>(iter: I) -> Self {
                Self::from_ids(iter)
            }
        }
    };
}

sorted_id_set!(
    /// Active entities of a frontier, a sparse 0/1 row vector of width |E|.
    EntityVector,
    EntityId
);
sorted_id_set!(
    /// Activated triples of one hop.
    TripleVector,
    TripleId
);

/// Set overlap `|a ∩ b| / |a ∪ b|`; two empty sets score 1.0.
pub fn jaccard(a: &EntityVector, b: &EntityVector) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection_len(b);
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}
