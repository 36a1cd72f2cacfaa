//! Permutation subsets and their symbol codecs.
//!
//! Every subset maps information symbols `0..|S|` onto member permutations
//! without a full lookup table where the structure allows it:
//!
//! * `Universal`: all `M!` permutations, symbol = lexicographic rank.
//! * `Block(k)`: tones grouped in blocks of `k`, only whole blocks are
//!   permuted; `(M/k)!` members with minimum distance `2k`.
//! * `Alternating`: permutations with positive sign; `M!/2` members with
//!   minimum distance 3. Ranks `2i` and `2i + 1` always have opposite signs,
//!   so symbol `i` is the positive one of the pair.
//! * `RadarRanked` / `Explicit`: sorted rank tables.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::{binomial, derangement_count, fact, Permutation, Rank, MAX_M};
use crate::radar::{self, FrequencyMapping};

/// Default cap on the number of members scanned by exhaustive queries.
pub const DEFAULT_BUDGET: u64 = 50_000;

#[derive(Debug, Clone, PartialEq)]
pub enum Variant {
    Universal,
    Block {
        k: usize,
    },
    Alternating,
    /// Lowest-repeat permutations under `mapping`, stored as sorted ranks.
    RadarRanked {
        size: u64,
        mapping: FrequencyMapping,
        ranks: Vec<u64>,
    },
    Explicit {
        ranks: Vec<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SubsetRepr", into = "SubsetRepr")]
pub struct SubsetSpec {
    m: usize,
    variant: Variant,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
enum VariantRepr {
    Universal,
    Block {
        k: usize,
    },
    Alternating,
    #[serde(alias = "radar_ranked")]
    Radar {
        size: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mapping: Option<FrequencyMapping>,
    },
    Explicit {
        ranks: Vec<u64>,
    },
}

#[derive(Serialize, Deserialize)]
struct SubsetRepr {
    m: usize,
    #[serde(flatten)]
    variant: VariantRepr,
}

impl TryFrom<SubsetRepr> for SubsetSpec {
    type Error = Error;

    fn try_from(r: SubsetRepr) -> Result<Self> {
        match r.variant {
            VariantRepr::Universal => SubsetSpec::universal(r.m),
            VariantRepr::Block { k } => SubsetSpec::block(r.m, k),
            VariantRepr::Alternating => SubsetSpec::alternating(r.m),
            VariantRepr::Radar { size, mapping } => {
                let mapping = match mapping {
                    Some(map) => map,
                    None => FrequencyMapping::identity(r.m)?,
                };
                SubsetSpec::radar_ranked(r.m, &mapping, size)
            }
            VariantRepr::Explicit { ranks } => SubsetSpec::explicit(r.m, ranks),
        }
    }
}

impl From<SubsetSpec> for SubsetRepr {
    fn from(s: SubsetSpec) -> Self {
        let variant = match s.variant {
            Variant::Universal => VariantRepr::Universal,
            Variant::Block { k } => VariantRepr::Block { k },
            Variant::Alternating => VariantRepr::Alternating,
            Variant::RadarRanked { size, mapping, .. } => VariantRepr::Radar {
                size,
                mapping: if mapping.is_identity() { None } else { Some(mapping) },
            },
            Variant::Explicit { ranks } => VariantRepr::Explicit { ranks },
        };
        SubsetRepr { m: s.m, variant }
    }
}

fn check_m(m: usize) -> Result<()> {
    if !(2..=MAX_M).contains(&m) {
        return Err(Error::UnsupportedLength(m));
    }
    Ok(())
}

impl SubsetSpec {
    pub fn universal(m: usize) -> Result<Self> {
        check_m(m)?;
        Ok(Self {
            m,
            variant: Variant::Universal,
        })
    }

    pub fn block(m: usize, k: usize) -> Result<Self> {
        check_m(m)?;
        if k < 2 || !m.is_multiple_of(k) {
            return Err(Error::InvalidSubset(format!(
                "block size {k} must be >= 2 and divide m = {m}"
            )));
        }
        Ok(Self {
            m,
            variant: Variant::Block { k },
        })
    }

    pub fn alternating(m: usize) -> Result<Self> {
        check_m(m)?;
        Ok(Self {
            m,
            variant: Variant::Alternating,
        })
    }

    /// Builds the radar subset by ranking all `m!` permutations on their
    /// difference-triangle repeats under `mapping`.
    pub fn radar_ranked(m: usize, mapping: &FrequencyMapping, size: u64) -> Result<Self> {
        check_m(m)?;
        let ranks = radar::rank_subset_by_repeats(m, mapping, size)?;
        Ok(Self {
            m,
            variant: Variant::RadarRanked {
                size,
                mapping: mapping.clone(),
                ranks,
            },
        })
    }

    /// An explicit member list. Ranks must be strictly increasing and `< m!`.
    pub fn explicit(m: usize, ranks: Vec<u64>) -> Result<Self> {
        check_m(m)?;
        if ranks.is_empty() {
            return Err(Error::InvalidSubset("explicit subset is empty".into()));
        }
        if ranks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSubset(
                "explicit ranks must be strictly increasing".into(),
            ));
        }
        let last = *ranks.last().unwrap();
        if last >= fact(m) {
            return Err(Error::RankOutOfRange { rank: last, m });
        }
        Ok(Self {
            m,
            variant: Variant::Explicit { ranks },
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn variant(&self) -> &Variant {
        &self.variant
    }

    pub fn block_k(&self) -> Option<usize> {
        match self.variant {
            Variant::Block { k } => Some(k),
            _ => None,
        }
    }

    /// Short variant name as used on the command line.
    pub fn kind_name(&self) -> &'static str {
        match self.variant {
            Variant::Universal => "universal",
            Variant::Block { .. } => "block",
            Variant::Alternating => "alternating",
            Variant::RadarRanked { .. } => "radar",
            Variant::Explicit { .. } => "explicit",
        }
    }

    fn table(&self) -> Option<&[u64]> {
        match &self.variant {
            Variant::RadarRanked { ranks, .. } | Variant::Explicit { ranks } => Some(ranks),
            _ => None,
        }
    }

    pub fn size(&self) -> u64 {
        match &self.variant {
            Variant::Universal => fact(self.m),
            Variant::Block { k } => fact(self.m / k),
            Variant::Alternating => fact(self.m) / 2,
            Variant::RadarRanked { ranks, .. } | Variant::Explicit { ranks } => ranks.len() as u64,
        }
    }

    /// `log2 |S|`.
    pub fn data_rate_bits(&self) -> f64 {
        (self.size() as f64).log2()
    }

    pub fn contains(&self, p: &Permutation) -> bool {
        if p.m() != self.m {
            return false;
        }
        match &self.variant {
            Variant::Universal => true,
            Variant::Alternating => p.sign() == 1,
            Variant::Block { k } => contract_block_perm(p, *k).is_some(),
            Variant::RadarRanked { ranks, .. } | Variant::Explicit { ranks } => ranks.binary_search(&p.rank()).is_ok(),
        }
    }

    pub fn encode(&self, symbol: u64) -> Result<Permutation> {
        let size = self.size();
        if symbol >= size {
            return Err(Error::SymbolOutOfRange { symbol, size });
        }
        Ok(match &self.variant {
            Variant::Universal => Permutation::unrank_unchecked(self.m, symbol),
            Variant::Block { k } => {
                let blocks = unrank_small(self.m / k, symbol);
                expand_block_perm(&blocks, *k)?
            }
            Variant::Alternating => {
                let even = Rank::new(self.m, 2 * symbol)?;
                if even.sign() == 1 {
                    even.to_perm()
                } else {
                    Permutation::unrank_unchecked(self.m, 2 * symbol + 1)
                }
            }
            Variant::RadarRanked { ranks, .. } | Variant::Explicit { ranks } => {
                Permutation::unrank_unchecked(self.m, ranks[symbol as usize])
            }
        })
    }

    /// Inverse of [`encode`](Self::encode).
    ///
    /// For the alternating subset the sign is not re-checked: callers pass
    /// permutations that already satisfy [`contains`](Self::contains).
    pub fn decode(&self, p: &Permutation) -> Result<u64> {
        if p.m() != self.m {
            return Err(Error::LengthMismatch(p.m(), self.m));
        }
        match &self.variant {
            Variant::Universal => Ok(p.rank()),
            Variant::Alternating => Ok(p.rank() / 2),
            Variant::Block { k } => contract_block_perm(p, *k)
                .map(|b| rank_small(&b))
                .ok_or_else(|| Error::NotInSubset(p.to_string())),
            Variant::RadarRanked { ranks, .. } | Variant::Explicit { ranks } => ranks
                .binary_search(&p.rank())
                .map(|i| i as u64)
                .map_err(|_| Error::NotInSubset(p.to_string())),
        }
    }

    /// Members in symbol order.
    pub fn enumerate(&self) -> impl Iterator<Item = Permutation> + '_ {
        (0..self.size()).map(move |s| self.encode(s).expect("symbol in range"))
    }

    /// Sorted lexicographic ranks of all members.
    pub fn member_ranks(&self, budget: u64) -> Result<Vec<u64>> {
        if let Some(t) = self.table() {
            return Ok(t.to_vec());
        }
        self.check_budget("member enumeration", self.size(), budget)?;
        let mut r: Vec<u64> = self.enumerate().map(|p| p.rank()).collect();
        r.sort_unstable();
        Ok(r)
    }

    fn check_budget(&self, what: &'static str, needed: u64, budget: u64) -> Result<()> {
        if needed > budget {
            return Err(Error::BudgetExceeded { what, needed, budget });
        }
        Ok(())
    }

    fn require_pairs(&self) -> Result<()> {
        if self.size() < 2 {
            return Err(Error::InvalidSubset("subset has fewer than two members".into()));
        }
        Ok(())
    }

    /// Minimum pairwise Hamming distance; analytic for the structured
    /// variants, exhaustive (within `budget` members) for tables.
    pub fn min_distance(&self, budget: u64) -> Result<usize> {
        self.require_pairs()?;
        match self.variant {
            Variant::Universal => Ok(2),
            Variant::Block { k } => Ok(2 * k),
            Variant::Alternating => Ok(3),
            _ => self.min_distance_exhaustive(budget),
        }
    }

    /// All-pairs scan regardless of variant.
    pub fn min_distance_exhaustive(&self, budget: u64) -> Result<usize> {
        self.require_pairs()?;
        self.check_budget("pairwise distance scan", self.size(), budget)?;
        let members: Vec<Permutation> = self.enumerate().collect();
        let mut best = usize::MAX;
        for (i, a) in members.iter().enumerate() {
            for b in &members[i + 1..] {
                best = best.min(a.hamming_unchecked(b));
            }
        }
        Ok(best)
    }

    /// Distance spectrum `A_l`.
    ///
    /// Universal and block subsets use derangement counts. The alternating
    /// group is scanned from the identity member; group symmetry makes the
    /// spectrum identical from every member. Tables are averaged over all
    /// members.
    pub fn distance_distribution(&self, budget: u64) -> Result<DistanceDistribution> {
        self.require_pairs()?;
        let m = self.m as u64;
        let mut counts = BTreeMap::new();
        match self.variant {
            Variant::Universal => {
                for l in 2..=m {
                    counts.insert(l as usize, (binomial(m, m - l) * derangement_count(l)?) as f64);
                }
            }
            Variant::Block { k } => {
                let nb = m / k as u64;
                for l in 2..=nb {
                    counts.insert(
                        (k as u64 * l) as usize,
                        (binomial(nb, nb - l) * derangement_count(l)?) as f64,
                    );
                }
            }
            Variant::Alternating => {
                self.check_budget("alternating distance scan", fact(self.m), budget)?;
                let id = Permutation::identity(self.m)?;
                let mut tally = BTreeMap::new();
                for q in crate::perm::all_permutations(self.m)? {
                    if q.sign() == 1 && q != id {
                        *tally.entry(id.hamming_unchecked(&q)).or_insert(0u64) += 1;
                    }
                }
                counts.extend(tally.into_iter().map(|(l, c)| (l, c as f64)));
            }
            _ => return self.distance_distribution_exhaustive(budget),
        }
        Ok(DistanceDistribution::from_counts(counts))
    }

    /// Member-averaged spectrum from an all-pairs scan.
    pub fn distance_distribution_exhaustive(&self, budget: u64) -> Result<DistanceDistribution> {
        self.require_pairs()?;
        self.check_budget("pairwise distance scan", self.size(), budget)?;
        let members: Vec<Permutation> = self.enumerate().collect();
        let mut tally = vec![0u64; self.m + 1];
        for (i, a) in members.iter().enumerate() {
            for b in &members[i + 1..] {
                tally[a.hamming_unchecked(b)] += 2;
            }
        }
        let n = members.len() as f64;
        let counts = tally
            .into_iter()
            .enumerate()
            .filter(|&(_, c)| c > 0)
            .map(|(l, c)| (l, c as f64 / n))
            .collect();
        Ok(DistanceDistribution::from_counts(counts))
    }
}

/// Average number of members at each Hamming distance from a member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceDistribution {
    pub a: BTreeMap<usize, f64>,
    pub d_min: usize,
}

impl DistanceDistribution {
    fn from_counts(a: BTreeMap<usize, f64>) -> Self {
        let d_min = a.iter().find(|(_, &c)| c > 0.0).map(|(&l, _)| l).unwrap_or(0);
        Self { a, d_min }
    }

    pub fn get(&self, l: usize) -> f64 {
        self.a.get(&l).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.a.values().sum()
    }
}

/// Slot `u` of the result holds block `blocks[u]` with its tones in order:
/// `out[u*k + o] = blocks[u]*k + o`.
pub fn expand_block_perm(blocks: &[usize], k: usize) -> Result<Permutation> {
    let m = blocks.len() * k;
    let mut elems = Vec::with_capacity(m);
    for &b in blocks {
        elems.extend((0..k).map(|o| b * k + o));
    }
    Permutation::new(&elems)
}

/// Recovers the block order of a block expansion, or `None` if `p` is not one.
pub fn contract_block_perm(p: &Permutation, k: usize) -> Option<Vec<usize>> {
    let m = p.m();
    if k == 0 || !m.is_multiple_of(k) {
        return None;
    }
    let mut blocks = Vec::with_capacity(m / k);
    for u in 0..m / k {
        let first = p.get(u * k);
        if !first.is_multiple_of(k) {
            return None;
        }
        if (1..k).any(|o| p.get(u * k + o) != first + o) {
            return None;
        }
        blocks.push(first / k);
    }
    Some(blocks)
}

/// Unranks a permutation of `n >= 1` symbols (lengths below 2 included).
pub(crate) fn unrank_small(n: usize, mut rank: u64) -> Vec<usize> {
    let mut avail: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(n);
    for pos in 0..n {
        let w = fact(n - 1 - pos);
        let d = (rank / w) as usize;
        rank %= w;
        out.push(avail.remove(d));
    }
    out
}

pub(crate) fn rank_small(p: &[usize]) -> u64 {
    let n = p.len();
    (0..n)
        .map(|i| p[i + 1..].iter().filter(|&&x| x < p[i]).count() as u64 * fact(n - 1 - i))
        .sum()
}
