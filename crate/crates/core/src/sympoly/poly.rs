use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::partition::Partition;
use super::SympolyError;

/// Exponent vector; stored inline for up to eight variables.
pub type Exponents = smallvec::SmallVec<[u32; 8]>;

/// Exact multivariate polynomial in `N` variables with rational coefficients.
///
/// Terms are keyed by exponent vector; zero coefficients are never stored,
/// so structural equality is polynomial equality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Exponents, BigRational>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: BigRational) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(smallvec::smallvec![0; nvars], c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, BigRational::one())
    }

    pub fn variable(nvars: usize, i: usize) -> Self {
        let mut e: Exponents = smallvec::smallvec![0; nvars];
        e[i] = 1;
        Self::monomial(e, BigRational::one())
    }

    pub fn monomial(exponents: impl Into<Exponents>, c: BigRational) -> Self {
        let exponents = exponents.into();
        let mut p = Self::zero(exponents.len());
        p.add_term(exponents, c);
        p
    }

    /// `ρ² = Σ xᵢ²`.
    pub fn rho_squared(nvars: usize) -> Self {
        let mut p = Self::zero(nvars);
        for i in 0..nvars {
            let mut e: Exponents = smallvec::smallvec![0; nvars];
            e[i] = 2;
            p.add_term(e, BigRational::one());
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &BigRational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, exponents: &[u32]) -> BigRational {
        self.terms.get(exponents).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn add_term(&mut self, exponents: impl Into<Exponents>, c: BigRational) {
        let exponents = exponents.into();
        debug_assert_eq!(exponents.len(), self.nvars);
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(exponents) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    /// `self += other`, consuming `other`.
    pub fn add_assign(&mut self, other: Polynomial) {
        assert_eq!(self.nvars, other.nvars);
        for (e, c) in other.terms {
            self.add_term(e, c);
        }
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut degs = self.terms.keys().map(|e| e.iter().sum::<u32>());
        match degs.next() {
            None => true,
            Some(d) => degs.all(|x| x == d),
        }
    }

    /// Invariance under every permutation of the variables.
    pub fn is_symmetric(&self) -> bool {
        self.terms.iter().all(|(e, c)| {
            let mut sorted = e.clone();
            sorted.sort_unstable_by(|a, b| b.cmp(a));
            let mut perm = sorted.clone();
            perm.reverse();
            // every distinct permutation must carry the same coefficient
            let mut ok = true;
            loop {
                if self.terms.get(&perm) != Some(c) {
                    ok = false;
                    break;
                }
                if !next_permutation(&mut perm) {
                    break;
                }
            }
            ok
        })
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        Self {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect(),
        }
    }

    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut ne = e.clone();
            ne[i] -= 1;
            out.add_term(ne, c * BigRational::from_integer(e[i].into()));
        }
        out
    }

    /// `Σᵢ ∂ᵢ²`.
    pub fn laplacian(&self) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            for i in 0..self.nvars {
                if e[i] < 2 {
                    continue;
                }
                let mut ne = e.clone();
                ne[i] -= 2;
                let f = BigRational::from_integer((e[i] * (e[i] - 1)).into());
                out.add_term(ne, c * f);
            }
        }
        out
    }

    /// Euler operator `Σ xᵢ∂ᵢ`: scales each term by its degree.
    pub fn euler(&self) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            let d: u32 = e.iter().sum();
            out.add_term(e.clone(), c * BigRational::from_integer(d.into()));
        }
        out
    }

    /// Exact quotient of `self` by `(xᵢ − xⱼ)`.
    pub fn divide_by_difference(&self, i: usize, j: usize) -> Result<Self, SympolyError> {
        assert!(i != j && i < self.nvars && j < self.nvars);
        let terms = divide_terms_by_difference(self.terms.iter(), i, j).ok_or(SympolyError::NonPolynomial { i, j })?;
        Ok(Self {
            nvars: self.nvars,
            terms,
        })
    }

    /// `ρ² · self`, accumulated on integer coefficients.
    pub fn times_rho_squared(&self) -> Self {
        let (l, g) = self.integer_terms();
        let mut out: BTreeMap<Exponents, BigInt> = BTreeMap::new();
        for (e, c) in &g {
            for i in 0..self.nvars {
                let mut ne = e.clone();
                ne[i] += 2;
                *out.entry(ne).or_insert_with(BigInt::zero) += c;
            }
        }
        Self::from_integer_terms(self.nvars, out, &BigRational::new(BigInt::one(), l))
    }

    /// `(L, L·self)` with `L` the lcm of the coefficient denominators, so
    /// that `L·self` has integer coefficients.
    pub(crate) fn integer_terms(&self) -> (BigInt, BTreeMap<Exponents, BigInt>) {
        let l = self.terms.values().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| (e.clone(), c.numer() * (&l / c.denom())))
            .collect();
        (l, terms)
    }

    /// `scale · Σ c·xᵉ` from integer terms.
    pub(crate) fn from_integer_terms(nvars: usize, terms: BTreeMap<Exponents, BigInt>, scale: &BigRational) -> Self {
        let mut out = Self::zero(nvars);
        if scale.is_zero() {
            return out;
        }
        for (e, c) in terms {
            if !c.is_zero() {
                out.terms.insert(e, scale * BigRational::from_integer(c));
            }
        }
        out
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.nvars);
        self.terms
            .iter()
            .map(|(e, c)| {
                let m: f64 = e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product();
                c.to_f64().unwrap_or(f64::NAN) * m
            })
            .sum()
    }

    pub fn eval_exact(&self, x: &[BigRational]) -> BigRational {
        assert_eq!(x.len(), self.nvars);
        let mut acc = BigRational::zero();
        for (e, c) in &self.terms {
            let mut m = c.clone();
            for (&k, xi) in e.iter().zip(x) {
                for _ in 0..k {
                    m *= xi;
                }
            }
            acc += m;
        }
        acc
    }

    /// Largest coefficient magnitude, zero for the zero polynomial.
    pub fn max_abs_coefficient(&self) -> BigRational {
        self.terms
            .values()
            .map(|c| c.abs())
            .max()
            .unwrap_or_else(BigRational::zero)
    }

    /// Float copy for fast pointwise evaluation.
    pub fn to_float(&self) -> FloatPolynomial {
        FloatPolynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), c.to_f64().unwrap_or(f64::NAN)))
                .collect(),
        }
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (e, c)) in self.terms.iter().rev().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})")?;
            for (i, &k) in e.iter().enumerate() {
                match k {
                    0 => {}
                    1 => write!(f, "·x{}", i + 1)?,
                    _ => write!(f, "·x{}^{}", i + 1, k)?,
                }
            }
        }
        Ok(())
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -c.clone());
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(&-BigRational::one())
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = Polynomial::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e: Exponents = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}

/// Floating-point shadow of a [`Polynomial`], with analytic derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatPolynomial {
    nvars: usize,
    terms: Vec<(Exponents, f64)>,
}

impl FloatPolynomial {
    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product::<f64>())
            .sum()
    }

    /// Value, gradient and Laplacian at `x`.
    pub fn eval_with_derivatives(&self, x: &[f64]) -> (f64, Vec<f64>, f64) {
        let n = self.nvars;
        let mut value = 0.0;
        let mut grad = vec![0.0; n];
        let mut lap = 0.0;
        let mut pw = vec![0.0; n];
        for (e, c) in &self.terms {
            for i in 0..n {
                pw[i] = x[i].powi(e[i] as i32);
            }
            let full: f64 = pw.iter().product();
            value += c * full;
            for i in 0..n {
                if e[i] == 0 {
                    continue;
                }
                let others: f64 = (0..n).filter(|&m| m != i).map(|m| pw[m]).product();
                let k = e[i] as f64;
                grad[i] += c * k * x[i].powi(e[i] as i32 - 1) * others;
                if e[i] >= 2 {
                    lap += c * k * (k - 1.0) * x[i].powi(e[i] as i32 - 2) * others;
                }
            }
        }
        (value, grad, lap)
    }
}

/// In-place lexicographic next permutation; `false` once the last one is reached.
pub(crate) fn next_permutation(v: &mut [u32]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Exact quotient of `Σ c·xᵉ` by `(xᵢ − xⱼ)` over any coefficient ring;
/// `None` if the remainder is nonzero.
///
/// Eliminates `xᵢ` term by term from the top degree down: each term
/// `c·xᵢᵉ·m` contributes `c·xᵢᵉ⁻¹·m` to the quotient and leaves
/// `c·xᵢᵉ⁻¹·xⱼ·m` behind. Whatever survives without `xᵢ` is the dividend
/// at `xᵢ = xⱼ`, and must vanish for the division to be exact.
pub(crate) fn divide_terms_by_difference<'a, T>(
    terms: impl Iterator<Item = (&'a Exponents, &'a T)>,
    i: usize,
    j: usize,
) -> Option<BTreeMap<Exponents, T>>
where
    T: Clone + Zero + for<'b> AddAssign<&'b T> + 'a,
{
    let mut buckets: Vec<BTreeMap<Exponents, T>> = Vec::new();
    for (e, c) in terms {
        let level = e[i] as usize;
        if buckets.len() <= level {
            buckets.resize_with(level + 1, BTreeMap::new);
        }
        buckets[level].insert(e.clone(), c.clone());
    }
    let mut quotient: BTreeMap<Exponents, T> = BTreeMap::new();
    for level in (1..buckets.len()).rev() {
        let bucket = std::mem::take(&mut buckets[level]);
        for (mut e, c) in bucket {
            if c.is_zero() {
                continue;
            }
            e[i] -= 1;
            let q = quotient.entry(e.clone()).or_insert_with(T::zero);
            *q += &c;
            e[j] += 1;
            let slot = buckets[level - 1].entry(e).or_insert_with(T::zero);
            *slot += &c;
        }
    }
    if buckets.first().is_some_and(|b| b.values().any(|c| !c.is_zero())) {
        return None;
    }
    quotient.retain(|_, c| !c.is_zero());
    Some(quotient)
}

/// `m_α` in `N` variables: unit coefficients over distinct permutations of α.
pub fn monomial_symmetric(alpha: &Partition, nvars: usize) -> Result<Polynomial, SympolyError> {
    if alpha.len() > nvars {
        return Err(SympolyError::LengthExceedsN {
            length: alpha.len(),
            n: nvars,
        });
    }
    let mut e: Vec<u32> = alpha.parts().to_vec();
    e.resize(nvars, 0);
    e.sort_unstable();
    let mut p = Polynomial::zero(nvars);
    loop {
        p.add_term(Exponents::from_slice(&e), BigRational::one());
        if !next_permutation(&mut e) {
            break;
        }
    }
    Ok(p)
}

/// Rational from integer numerator and denominator.
pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Parses `"p/q"`, `"p"` or a plain decimal such as `"0.25"` exactly.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a.trim().parse().ok()?;
        let b: BigInt = b.trim().parse().ok()?;
        if b.is_zero() {
            return None;
        }
        return Some(BigRational::new(a, b));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let neg = whole.starts_with('-');
        let whole_digits = whole.trim_start_matches(['-', '+']);
        let digits = format!("{}{}", if whole_digits.is_empty() { "0" } else { whole_digits }, frac);
        let mut num: BigInt = digits.parse().ok()?;
        if neg {
            num = -num;
        }
        let den = num_traits::pow(BigInt::from(10), frac.len());
        return Some(BigRational::new(num, den));
    }
    s.parse::<BigInt>().ok().map(BigRational::from_integer)
}

/// `"p/q"`, or `"p"` for integers.
pub fn format_rational(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(parts: &[u32]) -> Partition {
        Partition::new(parts.to_vec()).unwrap()
    }

    #[test]
    fn monomials() {
        let m1 = monomial_symmetric(&p(&[1]), 3).unwrap();
        assert_eq!(m1.len(), 3);
        let m11 = monomial_symmetric(&p(&[1, 1]), 3).unwrap();
        assert_eq!(m11.len(), 3);
        assert_eq!(m11.coefficient(&[1, 1, 0]), int(1));
        let m21 = monomial_symmetric(&p(&[2, 1]), 2).unwrap();
        assert_eq!(m21.len(), 2);
        assert_eq!(m21.coefficient(&[2, 1]), int(1));
        assert_eq!(m21.coefficient(&[1, 2]), int(1));
        assert!(matches!(
            monomial_symmetric(&p(&[1, 1, 1]), 2),
            Err(SympolyError::LengthExceedsN { length: 3, n: 2 })
        ));
        let empty = monomial_symmetric(&p(&[]), 4).unwrap();
        assert_eq!(empty, Polynomial::one(4));
        assert!(m21.is_symmetric() && m11.is_symmetric());
        assert!(!Polynomial::variable(3, 0).is_symmetric());
    }

    #[test]
    fn exact_division() {
        // (x1³ − x2³)/(x1 − x2) = x1² + x1x2 + x2²
        let mut f = Polynomial::zero(2);
        f.add_term(vec![3, 0], int(1));
        f.add_term(vec![0, 3], int(-1));
        let q = f.divide_by_difference(0, 1).unwrap();
        let mut expect = Polynomial::zero(2);
        expect.add_term(vec![2, 0], int(1));
        expect.add_term(vec![1, 1], int(1));
        expect.add_term(vec![0, 2], int(1));
        assert_eq!(q, expect);
        // reversed orientation flips the sign
        assert_eq!(f.divide_by_difference(1, 0).unwrap(), -&expect);
        // x1 + x2 is not divisible
        let g = &Polynomial::variable(2, 0) + &Polynomial::variable(2, 1);
        assert!(matches!(g.divide_by_difference(0, 1), Err(SympolyError::NonPolynomial { .. })));
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("7/2"), Some(rat(7, 2)));
        assert_eq!(parse_rational("0.5"), Some(rat(1, 2)));
        assert_eq!(parse_rational("-1.25"), Some(rat(-5, 4)));
        assert_eq!(parse_rational("3"), Some(int(3)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(format_rational(&rat(14, 5)), "14/5");
        assert_eq!(format_rational(&int(-3)), "-3");
    }

    #[test]
    fn float_derivatives() {
        // f = 3 x1² x2 − x3
        let mut f = Polynomial::zero(3);
        f.add_term(vec![2, 1, 0], int(3));
        f.add_term(vec![0, 0, 1], int(-1));
        let x = [0.5, -2.0, 1.5];
        let (v, g, l) = f.to_float().eval_with_derivatives(&x);
        assert!((v - (3.0 * 0.25 * -2.0 - 1.5)).abs() < 1e-14);
        assert!((g[0] - 6.0 * 0.5 * -2.0).abs() < 1e-14);
        assert!((g[1] - 3.0 * 0.25).abs() < 1e-14);
        assert!((g[2] + 1.0).abs() < 1e-14);
        assert!((l - 6.0 * -2.0).abs() < 1e-14);
        assert_eq!(f.laplacian(), Polynomial::monomial(vec![0, 1, 0], int(6)));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_poly(nvars: usize) -> impl Strategy<Value = Polynomial> {
            prop::collection::vec((prop::collection::vec(0u32..4, nvars), -5i64..6), 0..8).prop_map(
                move |terms| {
                    let mut p = Polynomial::zero(nvars);
                    for (e, c) in terms {
                        p.add_term(e, int(c));
                    }
                    p
                },
            )
        }

        proptest! {
            #[test]
            fn division_inverts_multiplication(q in arb_poly(3), i in 0usize..3, j in 0usize..3) {
                prop_assume!(i != j);
                let diff = &Polynomial::variable(3, i) - &Polynomial::variable(3, j);
                let prod = &diff * &q;
                prop_assert_eq!(prod.divide_by_difference(i, j).unwrap(), q);
            }

            #[test]
            fn exact_and_float_eval_agree(f in arb_poly(3), a in -3i64..4, b in -3i64..4, c in -3i64..4) {
                let xs = [int(a), int(b), int(c)];
                let xf = [a as f64, b as f64, c as f64];
                let exact = f.eval_exact(&xs).to_f64().unwrap();
                prop_assert!((exact - f.eval_f64(&xf)).abs() <= 1e-9 * (1.0 + exact.abs()));
            }
        }
    }
}
