//! Exactly representable sequences: a finite prefix followed by a periodic
//! pattern of polynomials in the global index.
//!
//! A [`CanonicalSeq`] built through the public constructors is always in
//! normal form (minimal period, minimal prefix, trimmed polynomials), so the
//! derived `Eq` and `Hash` decide equality of the underlying sequences.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Polynomial with rational coefficients, lowest degree first, no trailing zeros.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly(Vec<BigRational>);

impl Poly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Poly(coeffs)
    }

    pub fn constant(c: BigRational) -> Self {
        Poly::new(vec![c])
    }

    pub fn zero() -> Self {
        Poly(Vec::new())
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.0
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    pub fn eval_at(&self, n: u64) -> BigRational {
        self.eval(&BigRational::from_integer(BigInt::from(n)))
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let len = self.0.len().max(other.0.len());
        let zero = BigRational::zero();
        let coeffs = (0..len)
            .map(|i| self.0.get(i).unwrap_or(&zero) + other.0.get(i).unwrap_or(&zero))
            .collect();
        Poly::new(coeffs)
    }

    pub fn scale(&self, k: &BigRational) -> Poly {
        Poly::new(self.0.iter().map(|c| c * k).collect())
    }

    /// `p(alpha * n + beta)`.
    pub fn compose_affine(&self, alpha: &BigRational, beta: &BigRational) -> Poly {
        let mut acc = Poly::zero();
        for c in self.0.iter().rev() {
            acc = acc.mul_linear(alpha, beta).add(&Poly::constant(c.clone()));
        }
        acc
    }

    fn mul_linear(&self, alpha: &BigRational, beta: &BigRational) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![BigRational::zero(); self.0.len() + 1];
        for (i, c) in self.0.iter().enumerate() {
            out[i] += c * beta;
            out[i + 1] += c * alpha;
        }
        Poly::new(out)
    }
}

/// Where the inserted zeros go relative to the selected source term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Placement {
    Before,
    After,
}

/// Periodic zero-insertion pattern: `zeros` zeros are inserted before or
/// after every source term whose index is `residue` modulo `every`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DilutionMask {
    pub every: usize,
    pub residue: usize,
    pub zeros: usize,
    pub placement: Placement,
}

impl DilutionMask {
    /// A zero before every term: `0, a0, 0, a1, ...`.
    pub const BEFORE_EACH: DilutionMask = DilutionMask {
        every: 1,
        residue: 0,
        zeros: 1,
        placement: Placement::Before,
    };
    /// A zero after every term: `a0, 0, a1, 0, ...`.
    pub const AFTER_EACH: DilutionMask = DilutionMask {
        every: 1,
        residue: 0,
        zeros: 1,
        placement: Placement::After,
    };
    /// A zero after every even-indexed term (the positive terms of Grandi's
    /// series): `a0, 0, a1, a2, 0, a3, ...`.
    pub const AFTER_EVEN: DilutionMask = DilutionMask {
        every: 2,
        residue: 0,
        zeros: 1,
        placement: Placement::After,
    };

    pub fn is_valid(&self) -> bool {
        self.every >= 1 && self.residue < self.every && self.zeros >= 1
    }

    pub fn block_len(&self) -> usize {
        self.every + self.zeros
    }

    /// Layout of one output block: `Some(offset)` takes source term
    /// `block_start + offset`, `None` is an inserted zero.
    pub fn slot(&self, v: usize) -> Option<usize> {
        let first_zero = match self.placement {
            Placement::Before => self.residue,
            Placement::After => self.residue + 1,
        };
        if v < first_zero {
            Some(v)
        } else if v < first_zero + self.zeros {
            None
        } else {
            Some(v - self.zeros)
        }
    }

    /// Source index feeding output index `n`, or `None` for an inserted zero.
    pub fn source_index(&self, n: u64) -> Option<u64> {
        let b = self.block_len() as u64;
        let block = n / b;
        self.slot((n % b) as usize)
            .map(|off| block * self.every as u64 + off as u64)
    }

    /// Inverse of [`DilutionMask::label`]; also accepts `after_even`.
    pub fn from_label(label: &str) -> Option<DilutionMask> {
        match label {
            "before_each" => return Some(DilutionMask::BEFORE_EACH),
            "after_each" => return Some(DilutionMask::AFTER_EACH),
            "after_positives" | "after_even" => return Some(DilutionMask::AFTER_EVEN),
            _ => {}
        }
        let mut parts = label.split(':');
        let placement = match parts.next()? {
            "before" => Placement::Before,
            "after" => Placement::After,
            _ => return None,
        };
        let mut num = || parts.next()?.parse::<usize>().ok();
        let mask = DilutionMask {
            every: num()?,
            residue: num()?,
            zeros: num()?,
            placement,
        };
        (parts.next().is_none() && mask.is_valid()).then_some(mask)
    }

    /// Short name used in renderings.
    pub fn label(&self) -> String {
        match *self {
            DilutionMask::BEFORE_EACH => "before_each".into(),
            DilutionMask::AFTER_EACH => "after_each".into(),
            DilutionMask::AFTER_EVEN => "after_positives".into(),
            m => {
                let place = match m.placement {
                    Placement::Before => "before",
                    Placement::After => "after",
                };
                format!("{place}:{}:{}:{}", m.every, m.residue, m.zeros)
            }
        }
    }
}

/// The pointwise sequence operations of the axiom engine.
#[derive(Debug, Clone, PartialEq)]
pub enum SeqOp {
    Scale(BigRational),
    Add(CanonicalSeq),
    /// Drop the first term.
    Shift,
    /// Put a new first term in front.
    Prepend(BigRational),
    Dilute(DilutionMask),
    /// Swap `(a_j, a_{j+1})` for `j = offset + 2k`, every `every`-th pair.
    SwapPairs { offset: usize, every: usize },
    /// Keep the first `offset` terms, then sum consecutive pairs.
    AssociatePairs { offset: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CanonicalSeq {
    prefix: Vec<BigRational>,
    tails: Vec<Poly>,
}

impl CanonicalSeq {
    /// Builds and normalizes. `tails` must be non-empty; its length is the period.
    pub fn new(prefix: Vec<BigRational>, tails: Vec<Poly>) -> Self {
        Self::raw(prefix, tails).normalize()
    }

    /// Builds without normalizing. Equality on such values is structural.
    pub fn raw(prefix: Vec<BigRational>, tails: Vec<Poly>) -> Self {
        assert!(!tails.is_empty(), "period must be positive");
        CanonicalSeq { prefix, tails }
    }

    pub fn constant(c: BigRational) -> Self {
        Self::new(vec![], vec![Poly::constant(c)])
    }

    /// `c0, c1, ..., c_{p-1}` repeated.
    pub fn periodic(values: Vec<BigRational>) -> Self {
        Self::new(vec![], values.into_iter().map(Poly::constant).collect())
    }

    pub fn polynomial(p: Poly) -> Self {
        Self::new(vec![], vec![p])
    }

    pub fn zeros() -> Self {
        Self::constant(BigRational::zero())
    }

    pub fn ones() -> Self {
        Self::constant(BigRational::one())
    }

    /// `1, -1, 1, -1, ...`
    pub fn grandi() -> Self {
        Self::periodic(vec![BigRational::one(), -BigRational::one()])
    }

    /// `1, 2, 3, ...`
    pub fn naturals() -> Self {
        Self::polynomial(Poly::new(vec![BigRational::one(), BigRational::one()]))
    }

    pub fn prefix(&self) -> &[BigRational] {
        &self.prefix
    }

    pub fn period(&self) -> usize {
        self.tails.len()
    }

    pub fn tails(&self) -> &[Poly] {
        &self.tails
    }

    pub fn degree(&self) -> usize {
        self.tails.iter().map(Poly::degree).max().unwrap_or(0)
    }

    /// Prefix length + period + polynomial degree.
    pub fn size(&self) -> usize {
        self.prefix.len() + self.period() + self.degree()
    }

    /// Literal term at index `n`.
    pub fn term(&self, n: u64) -> BigRational {
        let l = self.prefix.len() as u64;
        if n < l {
            return self.prefix[n as usize].clone();
        }
        let p = self.period() as u64;
        self.tails[((n - l) % p) as usize].eval_at(n)
    }

    pub fn terms(&self, count: usize) -> Vec<BigRational> {
        (0..count as u64).map(|n| self.term(n)).collect()
    }

    pub fn normalize(self) -> Self {
        let CanonicalSeq { mut prefix, tails } = self;
        let tails: Vec<Poly> = tails.into_iter().map(|p| Poly::new(p.0)).collect();
        let p = tails.len();
        let period = (1..=p)
            .filter(|d| p % d == 0)
            .find(|&d| (0..p).all(|i| tails[i] == tails[i % d]))
            .unwrap_or(p);
        let mut tails: Vec<Poly> = tails[..period].to_vec();
        // absorb prefix entries the tail rule already produces
        while let Some(last) = prefix.last() {
            let idx = prefix.len() as u64 - 1;
            if tails[period - 1].eval_at(idx) != *last {
                break;
            }
            prefix.pop();
            tails.rotate_right(1);
        }
        CanonicalSeq { prefix, tails }
    }

    pub fn apply(&self, op: &SeqOp) -> CanonicalSeq {
        match op {
            SeqOp::Scale(k) => self.scale(k),
            SeqOp::Add(other) => self.add(other),
            SeqOp::Shift => self.shift(),
            SeqOp::Prepend(q) => self.prepend(q.clone()),
            SeqOp::Dilute(mask) => self.dilute(*mask),
            SeqOp::SwapPairs { offset, every } => self.swap_pairs(*offset, *every),
            SeqOp::AssociatePairs { offset } => self.associate_pairs(*offset),
        }
    }

    pub fn scale(&self, k: &BigRational) -> CanonicalSeq {
        CanonicalSeq::new(
            self.prefix.iter().map(|q| q * k).collect(),
            self.tails.iter().map(|p| p.scale(k)).collect(),
        )
    }

    pub fn add(&self, other: &CanonicalSeq) -> CanonicalSeq {
        let start = self.prefix.len().max(other.prefix.len());
        let period = self.period().lcm(&other.period());
        let prefix = (0..start as u64)
            .map(|n| self.term(n) + other.term(n))
            .collect();
        let tails = (0..period)
            .map(|u| {
                let n = start + u;
                self.tail_at(n).add(other.tail_at(n))
            })
            .collect();
        CanonicalSeq::new(prefix, tails)
    }

    pub fn shift(&self) -> CanonicalSeq {
        self.reindex(self.prefix.len().saturating_sub(1), self.period(), |n| {
            vec![(n + 1, 1)]
        })
    }

    pub fn prepend(&self, q: BigRational) -> CanonicalSeq {
        let mut prefix = Vec::with_capacity(self.prefix.len() + 1);
        prefix.push(q);
        prefix.extend(self.prefix.iter().cloned());
        let one = BigRational::one();
        let tails = self
            .tails
            .iter()
            .map(|p| p.compose_affine(&one, &-BigRational::one()))
            .collect();
        CanonicalSeq::new(prefix, tails)
    }

    pub fn dilute(&self, mask: DilutionMask) -> CanonicalSeq {
        assert!(mask.is_valid(), "invalid dilution mask {mask:?}");
        let m = mask.every;
        let b = mask.block_len();
        let first_block = self.prefix.len().div_ceil(m);
        let start = first_block * b;
        let q = self.period().lcm(&m);
        let period = q / m * b;
        self.reindex(start, period, |n| match mask.source_index(n) {
            Some(j) => vec![(j, 1)],
            None => vec![],
        })
    }

    pub fn swap_pairs(&self, offset: usize, every: usize) -> CanonicalSeq {
        assert!(every >= 1);
        let block = 2 * every;
        let period = self.period().lcm(&block);
        let mut start = offset;
        while start < self.prefix.len() + 1 {
            start += block;
        }
        self.reindex(start, period, |n| vec![(swap_source(n, offset, every), 1)])
    }

    pub fn associate_pairs(&self, offset: usize) -> CanonicalSeq {
        let start = offset.max((self.prefix.len() + offset).div_ceil(2));
        self.reindex(start, self.period(), |n| {
            let n = n as usize;
            if n < offset {
                vec![(n as u64, 1)]
            } else {
                let j = (2 * n - offset) as u64;
                vec![(j, 1), (j + 1, 1)]
            }
        })
    }

    fn tail_at(&self, n: usize) -> &Poly {
        debug_assert!(n >= self.prefix.len());
        &self.tails[(n - self.prefix.len()) % self.period()]
    }

    /// Builds `out(n) = sum coef * self(j)` from a source-index map.
    ///
    /// For `n >= start` every source index must be an affine function of `n`
    /// on each residue class mod `period` that steps through whole source
    /// periods; the tail polynomial of each slot is recovered from two
    /// consecutive members of its class.
    fn reindex<F>(&self, start: usize, period: usize, sources: F) -> CanonicalSeq
    where
        F: Fn(u64) -> Vec<(u64, i64)>,
    {
        let eval = |n: u64| -> BigRational {
            sources(n)
                .into_iter()
                .map(|(j, c)| self.term(j) * BigRational::from_integer(c.into()))
                .fold(BigRational::zero(), |a, b| a + b)
        };
        let prefix = (0..start as u64).map(eval).collect();
        let tails = (0..period)
            .map(|u| {
                let n0 = (start + u) as u64;
                let n1 = n0 + period as u64;
                let s0 = sources(n0);
                let s1 = sources(n1);
                debug_assert_eq!(s0.len(), s1.len());
                let dn = BigRational::from_integer(BigInt::from(period));
                s0.iter()
                    .zip(&s1)
                    .map(|(&(j0, c), &(j1, _))| {
                        debug_assert!(j0 as usize >= self.prefix.len());
                        let alpha = BigRational::from_integer(BigInt::from(j1 as i64 - j0 as i64)) / &dn;
                        let beta = BigRational::from_integer(BigInt::from(j0))
                            - &alpha * BigRational::from_integer(BigInt::from(n0));
                        self.tail_at(j0 as usize)
                            .compose_affine(&alpha, &beta)
                            .scale(&BigRational::from_integer(c.into()))
                    })
                    .fold(Poly::zero(), |a, b| a.add(&b))
            })
            .collect();
        CanonicalSeq::new(prefix, tails)
    }
}

/// Source index for output `n` after swapping selected pairs.
pub fn swap_source(n: u64, offset: usize, every: usize) -> u64 {
    let offset = offset as u64;
    if n < offset {
        return n;
    }
    let v = (n - offset) % (2 * every as u64);
    match v {
        0 => n + 1,
        1 => n - 1,
        _ => n,
    }
}

impl fmt::Display for CanonicalSeq {
    /// First eight terms and an ellipsis.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self.terms(8).iter().map(|q| q.to_string()).collect();
        write!(f, "{{{}, ...}}", terms.join(", "))
    }
}
