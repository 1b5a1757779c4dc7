use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Subset of the parameter indices `{0, .., np - 1}` stored as a bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subset {
    np: usize,
    mask: u64,
}

impl Subset {
    /// Nonempty subset of 0-based indices.
    pub fn new(np: usize, members: &[usize]) -> Result<Self> {
        if np == 0 || np > 64 {
            return Err(Error::invalid("parameter count must be between 1 and 64"));
        }
        if members.is_empty() {
            return Err(Error::invalid("subset must be nonempty"));
        }
        let mut mask = 0u64;
        for &i in members {
            if i >= np {
                return Err(Error::invalid(alloc::format!("parameter index {i} out of range")));
            }
            mask |= 1 << i;
        }
        Ok(Self { np, mask })
    }

    pub fn singleton(np: usize, i: usize) -> Self {
        assert!(i < np && np <= 64);
        Self { np, mask: 1 << i }
    }

    pub fn full(np: usize) -> Self {
        assert!((1..=64).contains(&np));
        Self { np, mask: full_mask(np) }
    }

    pub fn empty(np: usize) -> Self {
        Self { np, mask: 0 }
    }

    pub fn complement(&self) -> Self {
        Self { np: self.np, mask: !self.mask & full_mask(self.np) }
    }

    pub fn np(&self) -> usize {
        self.np
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn contains(&self, i: usize) -> bool {
        i < 64 && self.mask & (1 << i) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn is_full(&self) -> bool {
        self.mask == full_mask(self.np)
    }

    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn members(&self) -> Vec<usize> {
        (0..self.np).filter(|&i| self.contains(i)).collect()
    }
}

fn full_mask(np: usize) -> u64 {
    if np == 64 {
        u64::MAX
    } else {
        (1u64 << np) - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_partitions() {
        let u = Subset::new(5, &[0, 3]).unwrap();
        let c = u.complement();
        assert_eq!(c.members(), alloc::vec![1, 2, 4]);
        assert_eq!(u.mask() | c.mask(), Subset::full(5).mask());
        assert_eq!(u.mask() & c.mask(), 0);
        assert!(Subset::full(3).complement().is_empty());
        assert!(Subset::new(3, &[]).is_err());
        assert!(Subset::new(3, &[3]).is_err());
    }
}
