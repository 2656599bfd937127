use super::constraints::Regime;
use super::partition::partition_count;
use super::SympolyError;

/// Level degeneracy at `s = 2n + k` within the `L_n^ν P_k` family.
///
/// Truncated range: `s/2 + 1` for even `s`, `(s+1)/2` for odd `s`.
/// Full range: `M(s)`, partitions of `s` into at most `N` parts.
/// Only `s ≤ N` is inside the constraint regime; larger `s` is refused.
pub fn degeneracy(regime: Regime, n: usize, s: u32) -> Result<u64, SympolyError> {
    if s as usize > n {
        return Err(SympolyError::OutOfRegime { k: s, n });
    }
    Ok(degeneracy_unchecked(regime, n, s))
}

/// Same formulas without the regime guard; results for `s > N` are unverified.
pub fn degeneracy_unchecked(regime: Regime, n: usize, s: u32) -> u64 {
    match regime {
        Regime::Truncated => {
            if s.is_multiple_of(2) {
                s as u64 / 2 + 1
            } else {
                (s as u64).div_ceil(2)
            }
        }
        Regime::FullRange => partition_count(s as i64, n),
    }
}

/// `#{(n, k) : 2n + k = s}` weighted by the number of independent `P_k`
/// per degree (1 when truncated, `M(k) − M(k−2)` at full range).
pub fn count_by_quantum_numbers(regime: Regime, n_particles: usize, s: u32) -> u64 {
    (0..=s)
        .filter(|k| (s - k).is_multiple_of(2))
        .map(|k| match regime {
            Regime::Truncated => 1,
            Regime::FullRange => {
                partition_count(k as i64, n_particles) - partition_count(k as i64 - 2, n_particles)
            }
        })
        .sum()
}

/// Number of non-negative `(n₁, …, n_N)` with `Σ l·n_l = s`, by direct
/// enumeration.
pub fn count_calogero_quantum_numbers(n_particles: usize, s: u32) -> u64 {
    fn rec(l: usize, max_l: usize, rem: u32) -> u64 {
        if rem == 0 {
            return 1;
        }
        if l > max_l {
            return 0;
        }
        (0..=rem / l as u32).map(|nl| rec(l + 1, max_l, rem - nl * l as u32)).sum()
    }
    rec(1, n_particles, s)
}

/// `#{(n_X, n_rel) : n_X + 2 n_rel = s}`, the two-oscillator count.
pub fn count_two_oscillator_states(s: u32) -> u64 {
    (0..=s / 2).count() as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncated_values() {
        let d = |s| degeneracy(Regime::Truncated, 8, s).unwrap();
        assert_eq!(d(0), 1);
        assert_eq!(d(3), 2);
        assert_eq!(d(4), 3);
        assert!(matches!(
            degeneracy(Regime::Truncated, 3, 4),
            Err(SympolyError::OutOfRegime { .. })
        ));
    }

    #[test]
    fn full_range_values() {
        assert_eq!(degeneracy(Regime::FullRange, 5, 5).unwrap(), 7);
    }

    #[test]
    fn identities() {
        for n in 1..=8usize {
            for s in 0..=n as u32 {
                let m_s = degeneracy(Regime::FullRange, n, s).unwrap();
                assert_eq!(count_by_quantum_numbers(Regime::FullRange, n, s), m_s);
                assert_eq!(count_calogero_quantum_numbers(n, s), m_s);
                let d = degeneracy(Regime::Truncated, n, s).unwrap();
                assert_eq!(count_by_quantum_numbers(Regime::Truncated, n, s), d);
                assert_eq!(count_two_oscillator_states(s), d);
            }
        }
    }
}
