//! Set partitions of `{0, …, m−1}` whose blocks have at most four elements.

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::MAX_ORDER;
use crate::error::{Error, Result};

/// Largest admissible block.
pub const MAX_BLOCK: usize = 4;

/// A partition with zero-based indices. Blocks are ascending internally and
/// ordered by their minimum element.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    /// Normalizes block and element order and validates coverage of
    /// `{0, …, m−1}` with blocks of size `1..=4`.
    pub fn new(mut blocks: Vec<Vec<usize>>) -> Result<Self> {
        for b in &mut blocks {
            b.sort_unstable();
        }
        blocks.sort_by_key(|b| b.first().copied());
        let m: usize = blocks.iter().map(Vec::len).sum();
        let mut seen = vec![false; m];
        for b in &blocks {
            if b.is_empty() || b.len() > MAX_BLOCK {
                return Err(Error::Config(format!("block {b:?} must have 1 to {MAX_BLOCK} elements")));
            }
            for &i in b {
                if i >= m || std::mem::replace(&mut seen[i], true) {
                    return Err(Error::Config(format!("blocks {blocks:?} do not partition 0..{m}")));
                }
            }
        }
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn order(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    /// Blocks with one-based labels, as used in reports.
    pub fn one_based(&self) -> Vec<Vec<usize>> {
        self.blocks
            .iter()
            .map(|b| b.iter().map(|i| i + 1).collect())
            .collect()
    }
}

/// Prints one-based, e.g. `{1,3}{2}`.
impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.one_based() {
            let inner: Vec<String> = b.iter().map(usize::to_string).collect();
            write!(f, "{{{}}}", inner.join(","))?;
        }
        Ok(())
    }
}

static CACHE: [OnceLock<Vec<Partition>>; MAX_ORDER + 1] = [const { OnceLock::new() }; MAX_ORDER + 1];

/// `Λ_m` in canonical order: blocks by minimum element, partitions
/// lexicographic in their block lists. Computed once per `m`.
pub fn enumerate_lambda(m: usize) -> Result<&'static [Partition]> {
    if !(1..=MAX_ORDER).contains(&m) {
        return Err(Error::OrderOutOfRange(m));
    }
    Ok(CACHE[m].get_or_init(|| build(m)))
}

// Restricted growth strings: element i joins an existing block or opens block
// max+1.
fn build(m: usize) -> Vec<Partition> {
    let mut out = Vec::new();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    grow(0, m, &mut blocks, &mut out);
    out.sort();
    out
}

fn grow(i: usize, m: usize, blocks: &mut Vec<Vec<usize>>, out: &mut Vec<Partition>) {
    if i == m {
        out.push(Partition { blocks: blocks.clone() });
        return;
    }
    for b in 0..blocks.len() {
        if blocks[b].len() < MAX_BLOCK {
            blocks[b].push(i);
            grow(i + 1, m, blocks, out);
            blocks[b].pop();
        }
    }
    blocks.push(vec![i]);
    grow(i + 1, m, blocks, out);
    blocks.pop();
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    // Independent oracle: label every element with a block id in 0..m, keep
    // labelings whose blocks are size-capped, and canonicalize into a set.
    fn brute_force(m: usize) -> BTreeSet<Vec<Vec<usize>>> {
        let mut set = BTreeSet::new();
        let total = m.pow(m as u32);
        for code in 0..total {
            let mut c = code;
            let mut groups = vec![Vec::new(); m];
            for i in 0..m {
                groups[c % m].push(i);
                c /= m;
            }
            let mut blocks: Vec<Vec<usize>> = groups.into_iter().filter(|g| !g.is_empty()).collect();
            if blocks.iter().any(|b| b.len() > MAX_BLOCK) {
                continue;
            }
            blocks.sort();
            set.insert(blocks);
        }
        set
    }

    #[test]
    fn counts_match_brute_force() {
        for m in 1..=7 {
            let got = enumerate_lambda(m).unwrap();
            let oracle = brute_force(m);
            assert_eq!(got.len(), oracle.len(), "m = {m}");
            let as_set: BTreeSet<Vec<Vec<usize>>> = got.iter().map(|p| p.blocks().to_vec()).collect();
            assert_eq!(as_set, oracle);
        }
        let counts: Vec<usize> = (1..=6).map(|m| enumerate_lambda(m).unwrap().len()).collect();
        assert_eq!(counts, [1, 2, 5, 15, 51, 196]);
    }

    #[test]
    fn order_is_canonical_and_blocks_valid() {
        for m in 1..=MAX_ORDER {
            let parts = enumerate_lambda(m).unwrap();
            assert!(parts.windows(2).all(|w| w[0] < w[1]));
            for p in parts {
                assert_eq!(p.order(), m);
                assert!(p.blocks().windows(2).all(|w| w[0][0] < w[1][0]));
                assert!(p.blocks().iter().all(|b| b.windows(2).all(|x| x[0] < x[1])));
                assert_eq!(&Partition::new(p.blocks().to_vec()).unwrap(), p);
            }
        }
    }

    #[test]
    fn small_cases_by_hand() {
        let one = enumerate_lambda(1).unwrap();
        assert_eq!(one[0].to_string(), "{1}");
        let two: Vec<String> = enumerate_lambda(2).unwrap().iter().map(ToString::to_string).collect();
        assert_eq!(two, ["{1}{2}", "{1,2}"]);
        let three: Vec<String> = enumerate_lambda(3).unwrap().iter().map(ToString::to_string).collect();
        assert_eq!(three, ["{1}{2}{3}", "{1}{2,3}", "{1,2}{3}", "{1,2,3}", "{1,3}{2}"]);
    }

    #[test]
    fn range_and_validation() {
        assert!(enumerate_lambda(0).is_err());
        assert!(enumerate_lambda(MAX_ORDER + 1).is_err());
        assert!(Partition::new(vec![vec![0, 1, 2, 3, 4]]).is_err());
        assert!(Partition::new(vec![vec![0], vec![0]]).is_err());
        assert!(Partition::new(vec![vec![0], vec![2]]).is_err());
        let p = Partition::new(vec![vec![2, 0], vec![1]]).unwrap();
        assert_eq!(p.to_string(), "{1,3}{2}");
    }

    #[test]
    fn cached_slices_are_shared() {
        assert!(std::ptr::eq(enumerate_lambda(4).unwrap(), enumerate_lambda(4).unwrap()));
    }
}
