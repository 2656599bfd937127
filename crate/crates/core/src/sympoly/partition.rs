use std::fmt;

use super::SympolyError;

/// Integer partition with parts in non-increasing order, all positive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition(Vec<u32>);

impl Partition {
    pub fn new(parts: Vec<u32>) -> Result<Self, SympolyError> {
        if parts.windows(2).any(|w| w[0] < w[1]) || parts.contains(&0) {
            return Err(SympolyError::InvalidPartition(parts));
        }
        Ok(Self(parts))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    /// Number of nonzero parts, `ℓ(α)`.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `|α| = Σ αᵢ`.
    pub fn weight(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Comma-separated parts, e.g. `"2,1,1"`; empty string for `∅`.
    pub fn label(&self) -> String {
        self.0.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",")
    }

    pub fn parse(label: &str) -> Result<Self, SympolyError> {
        let label = label.trim();
        if label.is_empty() {
            return Ok(Self::empty());
        }
        let parts = label
            .split(',')
            .map(|s| s.trim().parse::<u32>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| SympolyError::InvalidPartition(Vec::new()))?;
        Self::new(parts)
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.label())
    }
}

/// All partitions of `k` with at most `max_parts` parts, in
/// reverse-lexicographic order (`5, 41, 32, 311, …`).
pub fn partitions(k: u32, max_parts: usize) -> Vec<Partition> {
    fn rec(rem: u32, cap: u32, slots: usize, prefix: &mut Vec<u32>, out: &mut Vec<Partition>) {
        if rem == 0 {
            out.push(Partition(prefix.clone()));
            return;
        }
        if slots == 0 {
            return;
        }
        for part in (1..=cap.min(rem)).rev() {
            prefix.push(part);
            rec(rem - part, part, slots - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, k, max_parts, &mut Vec::new(), &mut out);
    out
}

/// `M(k)`: partitions of `k` into at most `max_parts` parts; zero for `k < 0`.
pub fn partition_count(k: i64, max_parts: usize) -> u64 {
    if k < 0 {
        return 0;
    }
    let k = k as usize;
    // p[j][m]: partitions of m into parts of size ≤ j, equivalently into at most j parts
    let mut ways = vec![0u64; k + 1];
    ways[0] = 1;
    for part in 1..=max_parts.min(k.max(1)) {
        for m in part..=k {
            ways[m] += ways[m - part];
        }
    }
    ways[k]
}
