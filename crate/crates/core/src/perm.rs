//! Permutation arithmetic.
//!
//! Permutations of `{0, .., M-1}` ranked in lexicographic order through the
//! factorial number system (Lehmer code). Symbols are 0-based internally and
//! 1-based whenever a permutation is displayed or serialized.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest supported permutation length; `12!` fits in a `u64` rank.
pub const MAX_M: usize = 12;

/// Returns `n!` for `n <= 20`.
pub fn factorial(n: u64) -> Result<u64> {
    if n > 20 {
        return Err(Error::FactorialOverflow(n));
    }
    Ok((1..=n).product())
}

pub(crate) fn fact(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Binomial coefficient `C(n, k)`.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Number of fixed-point-free permutations of `b` elements, `b! Σ (-1)^i / i!`.
///
/// Evaluated in exact integer arithmetic: every `b!/i!` term is an integer.
pub fn derangement_count(b: u64) -> Result<u64> {
    let bf = factorial(b)? as i128;
    let mut sum = 0i128;
    for i in 0..=b {
        let term = bf / factorial(i)? as i128;
        if i % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    Ok(sum as u64)
}

/// A lexicographic rank together with the permutation length it refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rank {
    m: usize,
    value: u64,
}

impl Rank {
    pub fn new(m: usize, value: u64) -> Result<Self> {
        check_len(m)?;
        if value >= fact(m) {
            return Err(Error::RankOutOfRange { rank: value, m });
        }
        Ok(Self { m, value })
    }

    pub fn m(self) -> usize {
        self.m
    }

    pub fn value(self) -> u64 {
        self.value
    }

    pub fn to_perm(self) -> Permutation {
        Permutation::unrank_unchecked(self.m, self.value)
    }

    /// Sign of the permutation with this rank, computed from the rank alone.
    ///
    /// The inversion count of the rank-`r` permutation is the digit sum of `r`
    /// in the factorial number system, which reduces to
    /// `(r mod 2) + 2⌊r/2⌋ + Σ_{j≥2} (1 - j)⌊r/j!⌋`. Only the parity matters:
    /// the `(1 - j)⌊r/j!⌋` term flips the sign when both `j - 1` and `⌊r/j!⌋`
    /// are odd.
    pub fn sign(self) -> i8 {
        let r = self.value;
        let mut negative = r % 2 == 1;
        let mut j = 2u64;
        let mut jf = 2u64;
        while jf <= r {
            let q = r / jf;
            if (j - 1) % 2 == 1 && q % 2 == 1 {
                negative = !negative;
            }
            j += 1;
            jf = match jf.checked_mul(j) {
                Some(v) => v,
                None => break,
            };
        }
        if negative {
            -1
        } else {
            1
        }
    }
}

/// Returns the `rank`-th permutation of `{0..m-1}` in lexicographic order.
pub fn rank_to_perm(m: usize, rank: u64) -> Result<Permutation> {
    Ok(Rank::new(m, rank)?.to_perm())
}

/// Sign of the `rank`-th permutation without materializing it.
pub fn sign_of_rank(m: usize, rank: u64) -> Result<i8> {
    Ok(Rank::new(m, rank)?.sign())
}

fn check_len(m: usize) -> Result<()> {
    if !(2..=MAX_M).contains(&m) {
        return Err(Error::UnsupportedLength(m));
    }
    Ok(())
}

/// A permutation of `{0, .., m-1}` with `2 <= m <= 12`, stored inline.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Permutation {
    elems: [u8; MAX_M],
    m: u8,
}

impl Permutation {
    /// Builds a permutation from 0-based symbols, validating bijectivity.
    pub fn new(elems: &[usize]) -> Result<Self> {
        let m = elems.len();
        check_len(m)?;
        let mut seen = [false; MAX_M];
        let mut out = [0u8; MAX_M];
        for (slot, &e) in elems.iter().enumerate() {
            if e >= m || seen[e] {
                return Err(Error::InvalidPermutation(format!("{elems:?}")));
            }
            seen[e] = true;
            out[slot] = e as u8;
        }
        Ok(Self { elems: out, m: m as u8 })
    }

    /// Builds a permutation from 1-based labels such as `[1, 2, 4, 3]`.
    pub fn from_one_based(labels: &[usize]) -> Result<Self> {
        let zero: Vec<usize> = labels
            .iter()
            .map(|&l| {
                l.checked_sub(1)
                    .ok_or_else(|| Error::InvalidPermutation(format!("{labels:?}")))
            })
            .collect::<Result<_>>()?;
        Self::new(&zero)
    }

    pub fn identity(m: usize) -> Result<Self> {
        check_len(m)?;
        let mut elems = [0u8; MAX_M];
        for (i, e) in elems.iter_mut().enumerate().take(m) {
            *e = i as u8;
        }
        Ok(Self { elems, m: m as u8 })
    }

    pub(crate) fn unrank_unchecked(m: usize, mut rank: u64) -> Self {
        let mut avail: [u8; MAX_M] = [0; MAX_M];
        for (i, a) in avail.iter_mut().enumerate().take(m) {
            *a = i as u8;
        }
        let mut n_avail = m;
        let mut elems = [0u8; MAX_M];
        for (pos, slot) in elems.iter_mut().enumerate().take(m) {
            let w = fact(m - 1 - pos);
            let digit = (rank / w) as usize;
            rank %= w;
            *slot = avail[digit];
            avail.copy_within(digit + 1..n_avail, digit);
            n_avail -= 1;
        }
        Self { elems, m: m as u8 }
    }

    pub fn m(&self) -> usize {
        self.m as usize
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.elems[..self.m as usize]
    }

    #[inline]
    pub fn get(&self, pos: usize) -> usize {
        self.elems[pos] as usize
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.as_slice().iter().map(|&e| e as usize).collect()
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.as_slice().iter().map(|&e| e as usize + 1).collect()
    }

    /// Lexicographic rank via the Lehmer code: `Σ L_i (m-1-i)!`.
    pub fn rank(&self) -> u64 {
        let m = self.m();
        let s = self.as_slice();
        let mut rank = 0u64;
        for i in 0..m {
            let smaller_after = s[i + 1..].iter().filter(|&&x| x < s[i]).count() as u64;
            rank += smaller_after * fact(m - 1 - i);
        }
        rank
    }

    pub fn to_rank(&self) -> Rank {
        Rank {
            m: self.m(),
            value: self.rank(),
        }
    }

    /// Number of pairs `a < b` with `p(a) > p(b)`.
    pub fn inversion_count(&self) -> u32 {
        let s = self.as_slice();
        let mut n = 0;
        for a in 0..s.len() {
            for b in a + 1..s.len() {
                if s[a] > s[b] {
                    n += 1;
                }
            }
        }
        n
    }

    /// `+1` for an even number of inversions, `-1` otherwise.
    pub fn sign(&self) -> i8 {
        if self.inversion_count().is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    pub fn hamming_distance(&self, other: &Permutation) -> Result<usize> {
        if self.m != other.m {
            return Err(Error::LengthMismatch(self.m(), other.m()));
        }
        Ok(self.hamming_unchecked(other))
    }

    #[inline]
    pub(crate) fn hamming_unchecked(&self, other: &Permutation) -> usize {
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .filter(|(a, b)| a != b)
            .count()
    }

    pub fn reverse(&self) -> Self {
        let mut out = *self;
        out.elems[..self.m()].reverse();
        out
    }

    /// Swaps the symbols at positions `a` and `b`.
    pub fn swapped(&self, a: usize, b: usize) -> Self {
        let mut out = *self;
        out.elems.swap(a, b);
        out
    }

    /// All permutations at Hamming distance exactly `d` from `self`, `d ∈ {2, 3}`.
    ///
    /// Distance 2 gives the `m(m-1)/2` transpositions, distance 3 the
    /// `m(m-1)(m-2)/3` three-cycles, both in a fixed position order.
    pub fn neighbors_at_distance(&self, d: usize) -> Result<Vec<Permutation>> {
        let m = self.m();
        match d {
            2 => {
                let mut out = Vec::with_capacity(m * (m - 1) / 2);
                for a in 0..m {
                    for b in a + 1..m {
                        out.push(self.swapped(a, b));
                    }
                }
                Ok(out)
            }
            3 => {
                let mut out = Vec::with_capacity(m * (m - 1) * (m - 2) / 3);
                for a in 0..m {
                    for b in a + 1..m {
                        for c in b + 1..m {
                            let (x, y, z) = (self.elems[a], self.elems[b], self.elems[c]);
                            let mut left = *self;
                            left.elems[a] = y;
                            left.elems[b] = z;
                            left.elems[c] = x;
                            let mut right = *self;
                            right.elems[a] = z;
                            right.elems[b] = x;
                            right.elems[c] = y;
                            out.push(left);
                            out.push(right);
                        }
                    }
                }
                Ok(out)
            }
            _ => Err(Error::UnsupportedDistance(d)),
        }
    }
}

impl PartialOrd for Permutation {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Permutation {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.as_slice().cmp(other.as_slice())
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation{self}")
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, e) in self.as_slice().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", e + 1)?;
        }
        write!(f, "]")
    }
}

impl Serialize for Permutation {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_one_based().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Permutation {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let labels = Vec::<usize>::deserialize(deserializer)?;
        Permutation::from_one_based(&labels).map_err(serde::de::Error::custom)
    }
}

/// Iterates all permutations of length `m` in lexicographic order.
pub fn all_permutations(m: usize) -> Result<impl Iterator<Item = Permutation>> {
    let first = Permutation::identity(m)?;
    Ok(LexIter { next: Some(first) })
}

struct LexIter {
    next: Option<Permutation>,
}

impl Iterator for LexIter {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        let cur = self.next?;
        self.next = next_lex(&cur);
        Some(cur)
    }
}

fn next_lex(p: &Permutation) -> Option<Permutation> {
    let m = p.m();
    let mut out = *p;
    let e = &mut out.elems[..m];
    let i = (0..m - 1).rev().find(|&i| e[i] < e[i + 1])?;
    let j = (i + 1..m).rev().find(|&j| e[j] > e[i])?;
    e.swap(i, j);
    e[i + 1..].reverse();
    Some(out)
}
