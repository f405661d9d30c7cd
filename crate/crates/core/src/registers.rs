//! Named tensor factors with a big-endian index convention.

use crate::error::{arg, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RegisterLabel {
    pub name: String,
    pub dim: usize,
}

impl RegisterLabel {
    pub fn new(name: impl Into<String>, dim: usize) -> Self {
        Self { name: name.into(), dim }
    }
}

/// Ordered list of registers. The first register is the most significant digit.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RegisterSystem {
    labels: Vec<RegisterLabel>,
}

impl RegisterSystem {
    pub fn new(labels: Vec<RegisterLabel>) -> Result<Self> {
        for (i, l) in labels.iter().enumerate() {
            if l.dim == 0 {
                return arg(format!("register {} has dimension 0", l.name));
            }
            if labels[..i].iter().any(|o| o.name == l.name) {
                return arg(format!("duplicate register name {}", l.name));
            }
        }
        let sys = Self { labels };
        if sys.total_dim_u128() > u64::MAX as u128 {
            return arg("total dimension overflows a 64-bit index");
        }
        Ok(sys)
    }

    pub fn labels(&self) -> &[RegisterLabel] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.labels.iter().map(|l| l.name.clone()).collect()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.labels.iter().map(|l| l.dim).collect()
    }

    pub fn total_dim_u128(&self) -> u128 {
        self.labels.iter().map(|l| l.dim as u128).product()
    }

    pub fn total_dim(&self) -> u64 {
        self.total_dim_u128() as u64
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.labels.iter().position(|l| l.name == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.position(name).is_some()
    }

    pub fn dim_of(&self, name: &str) -> Option<usize> {
        self.position(name).map(|p| self.labels[p].dim)
    }

    /// Positions of `names`, rejecting unknown and repeated labels.
    pub fn positions<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(names.len());
        for n in names {
            let n = n.as_ref();
            let p = match self.position(n) {
                Some(p) => p,
                None => return arg(format!("unknown register {n}")),
            };
            if out.contains(&p) {
                return arg(format!("register {n} listed twice"));
            }
            out.push(p);
        }
        Ok(out)
    }

    /// Concatenation `self ⊗ other`.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        Self::new(labels)
    }

    /// Splits an index into per-register digits.
    pub fn digits(&self, mut index: u64) -> Vec<usize> {
        let mut out = vec![0; self.labels.len()];
        for (k, l) in self.labels.iter().enumerate().rev() {
            out[k] = (index % l.dim as u64) as usize;
            index /= l.dim as u64;
        }
        out
    }

    pub fn index_of(&self, digits: &[usize]) -> u64 {
        digits
            .iter()
            .zip(&self.labels)
            .fold(0u64, |acc, (&d, l)| acc * l.dim as u64 + d as u64)
    }
}

/// Mixed-radix extractor that maps a global index to the index of a sub-collection of registers.
#[derive(Debug, Clone)]
pub(crate) struct SubIndexer {
    /// (stride in the global index, dim, weight in the sub-index)
    parts: Vec<(u64, u64, u64)>,
    pub total: u64,
}

impl SubIndexer {
    pub fn new(sys: &RegisterSystem, positions: &[usize]) -> Self {
        let dims = sys.dims();
        let mut strides = vec![1u64; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1] as u64;
        }
        let mut parts = Vec::with_capacity(positions.len());
        let mut weight = 1u64;
        for &p in positions.iter().rev() {
            parts.push((strides[p], dims[p] as u64, weight));
            weight *= dims[p] as u64;
        }
        parts.reverse();
        Self { parts, total: weight }
    }

    pub fn extract(&self, index: u64) -> u64 {
        self.parts
            .iter()
            .map(|&(stride, dim, weight)| ((index / stride) % dim) * weight)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_zero_dims() {
        assert!(RegisterSystem::new(vec![RegisterLabel::new("A", 2), RegisterLabel::new("A", 2)]).is_err());
        assert!(RegisterSystem::new(vec![RegisterLabel::new("A", 0)]).is_err());
    }

    #[test]
    fn big_endian_digits() {
        let s = RegisterSystem::new(vec![RegisterLabel::new("A", 2), RegisterLabel::new("B", 3)]).unwrap();
        assert_eq!(s.digits(5), vec![1, 2]);
        assert_eq!(s.index_of(&[1, 0]), 3);
        let sub = SubIndexer::new(&s, &[1, 0]);
        assert_eq!(sub.extract(5), 2 * 2 + 1);
    }
}
