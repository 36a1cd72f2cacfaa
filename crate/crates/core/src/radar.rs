//! Radar-side analysis of frequency-permutation pulse trains.
//!
//! A waveform is `M` pulses of width `T`; pulse `n` carries tone
//! `f_c + q * tone(p(n)) / T`. The complex ambiguity function used throughout is
//!
//! ```text
//! A(τ, f_d) = ∫ s*(t) s(t - τ) exp(j2π f_d t) dt
//! ```
//!
//! with unit signal energy, so `|A(0, 0)| = 1`. Cross terms between pulse `n`
//! and the replica's pulse `m = n - L` peak at `τ = LT`, `f_d = q Δ_{L,m} / T`,
//! where `Δ_{L,m}` is the tone difference recorded in the difference triangle.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::perm::{all_permutations, fact, Permutation, MAX_M};
use crate::subsets::SubsetSpec;

/// Largest `m` for which full `m!` enumeration is attempted.
pub const MAX_ENUM_M: usize = 10;

/// Bijection from permutation symbol to frequency tone index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FrequencyMapping {
    tone_of: Vec<usize>,
}

impl FrequencyMapping {
    pub fn identity(m: usize) -> Result<Self> {
        if !(2..=MAX_M).contains(&m) {
            return Err(Error::UnsupportedLength(m));
        }
        Ok(Self {
            tone_of: (0..m).collect(),
        })
    }

    /// From 0-based tone indices, `tone_of[symbol]`.
    pub fn new(tone_of: Vec<usize>) -> Result<Self> {
        let m = tone_of.len();
        if !(2..=MAX_M).contains(&m) {
            return Err(Error::InvalidMapping(format!("length {m} out of range")));
        }
        let mut seen = vec![false; m];
        for &t in &tone_of {
            if t >= m || seen[t] {
                return Err(Error::InvalidMapping(format!(
                    "{:?} is not a bijection",
                    tone_of.iter().map(|t| t + 1).collect::<Vec<_>>()
                )));
            }
            seen[t] = true;
        }
        Ok(Self { tone_of })
    }

    /// From 1-based tone labels, e.g. `[1,2,3,4,5,6,8,7]`.
    pub fn from_one_based(labels: &[usize]) -> Result<Self> {
        if labels.contains(&0) {
            return Err(Error::InvalidMapping(format!("{labels:?} contains 0")));
        }
        Self::new(labels.iter().map(|l| l - 1).collect())
    }

    /// Identity mapping with tones `a` and `b` (0-based) exchanged.
    pub fn swap(m: usize, a: usize, b: usize) -> Result<Self> {
        let mut map = Self::identity(m)?;
        if a >= m || b >= m {
            return Err(Error::InvalidMapping(format!("swap ({a},{b}) outside m = {m}")));
        }
        map.tone_of.swap(a, b);
        Ok(map)
    }

    pub fn m(&self) -> usize {
        self.tone_of.len()
    }

    #[inline]
    pub fn tone(&self, symbol: usize) -> usize {
        self.tone_of[symbol]
    }

    pub fn is_identity(&self) -> bool {
        self.tone_of.iter().enumerate().all(|(i, &t)| i == t)
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.tone_of.iter().map(|t| t + 1).collect()
    }

    fn check(&self, p: &Permutation) -> Result<()> {
        if p.m() != self.m() {
            return Err(Error::LengthMismatch(p.m(), self.m()));
        }
        Ok(())
    }
}

impl Serialize for FrequencyMapping {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_one_based().serialize(s)
    }
}

impl<'de> Deserialize<'de> for FrequencyMapping {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let labels = Vec::<usize>::deserialize(d)?;
        FrequencyMapping::from_one_based(&labels).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformParams {
    pub m: usize,
    /// Pulse width `T` in seconds.
    pub t_pulse: f64,
    /// Tone spacing multiplier, `Δf = q / T`.
    pub q: u32,
    /// Carrier offset added to every tone; only affects phases.
    pub f_c: f64,
}

impl WaveformParams {
    /// `T = 1`, `q = 1`, `f_c = 0`.
    pub fn normalized(m: usize) -> Self {
        Self {
            m,
            t_pulse: 1.0,
            q: 1,
            f_c: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=MAX_M).contains(&self.m) {
            return Err(Error::UnsupportedLength(self.m));
        }
        if !(self.t_pulse > 0.0 && self.t_pulse.is_finite()) {
            return Err(Error::InvalidParameter(format!("pulse width {}", self.t_pulse)));
        }
        if self.q == 0 {
            return Err(Error::InvalidParameter("q must be >= 1".into()));
        }
        Ok(())
    }

    /// Frequency (Hz) of tone index `tone`.
    #[inline]
    fn freq(&self, tone: usize) -> f64 {
        self.f_c + self.q as f64 * tone as f64 / self.t_pulse
    }
}

/// Row `L` (1-based, stored at index `L-1`) holds
/// `tone(p(i+L)) - tone(p(i))` for `i = 0..M-L`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DifferenceTriangle {
    pub rows: Vec<Vec<i32>>,
}

impl DifferenceTriangle {
    pub fn m(&self) -> usize {
        self.rows.len() + 1
    }

    pub fn row(&self, l: usize) -> &[i32] {
        &self.rows[l - 1]
    }

    /// How often `value` occurs in row `l`.
    pub fn multiplicity(&self, l: usize, value: i32) -> usize {
        self.row(l).iter().filter(|&&v| v == value).count()
    }

    /// Largest within-row multiplicity minus one; 0 for a Costas permutation.
    pub fn max_repeats(&self) -> usize {
        self.rows
            .iter()
            .map(|row| {
                let mut counts: BTreeMap<i32, usize> = BTreeMap::new();
                for &v in row {
                    *counts.entry(v).or_default() += 1;
                }
                counts.values().copied().max().unwrap_or(1) - 1
            })
            .max()
            .unwrap_or(0)
    }
}

pub fn difference_triangle(p: &Permutation, map: &FrequencyMapping) -> Result<DifferenceTriangle> {
    map.check(p)?;
    let m = p.m();
    let tones: Vec<i32> = (0..m).map(|i| map.tone(p.get(i)) as i32).collect();
    let rows = (1..m)
        .map(|l| (0..m - l).map(|i| tones[i + l] - tones[i]).collect())
        .collect();
    Ok(DifferenceTriangle { rows })
}

/// Allocation-free max-repeats for bulk enumeration.
fn max_repeats_fast(p: &Permutation, map: &FrequencyMapping) -> usize {
    let m = p.m();
    let mut tones = [0i32; MAX_M];
    for (i, t) in tones.iter_mut().enumerate().take(m) {
        *t = map.tone(p.get(i)) as i32;
    }
    let offset = m as i32 - 1;
    let mut best = 1u8;
    for l in 1..m {
        let mut counts = [0u8; 2 * MAX_M];
        for i in 0..m - l {
            let c = &mut counts[(tones[i + l] - tones[i] + offset) as usize];
            *c += 1;
            best = best.max(*c);
        }
    }
    best as usize - 1
}

pub fn max_repeats(p: &Permutation, map: &FrequencyMapping) -> Result<usize> {
    map.check(p)?;
    Ok(max_repeats_fast(p, map))
}

pub fn is_costas(p: &Permutation, map: &FrequencyMapping) -> Result<bool> {
    Ok(max_repeats(p, map)? == 0)
}

/// Worst lattice-point sidelobe, `(max_repeats + 1) / M`.
pub fn lattice_psl(p: &Permutation, map: &FrequencyMapping) -> Result<f64> {
    Ok((max_repeats(p, map)? + 1) as f64 / p.m() as f64)
}

#[inline]
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Closed-form complex ambiguity function.
///
/// Sums the per-pulse-pair correlations: the pair (n, m) contributes
///
/// ```text
/// (1/M) e^{j2π f_d nT} ((T-|τ'|)/T) sinc(α(T-|τ'|)) e^{-jπα(T+τ') - j2π f_m τ'}
/// ```
///
/// with `τ' = τ - (n-m)T`, `α = f_n - f_m - f_d`, and support `|τ'| <= T`.
/// The `n = m` terms are the auto-correlations.
pub fn af_value(p: &Permutation, map: &FrequencyMapping, params: &WaveformParams, tau: f64, fd: f64) -> Complex64 {
    let m = p.m();
    let t = params.t_pulse;
    let mut freqs = [0.0f64; MAX_M];
    for (i, f) in freqs.iter_mut().enumerate().take(m) {
        *f = params.freq(map.tone(p.get(i)));
    }
    let lag_lo = ((tau - t) / t).ceil() as i64;
    let lag_hi = ((tau + t) / t).floor() as i64;
    let mut acc = Complex64::new(0.0, 0.0);
    for lag in lag_lo.max(-(m as i64 - 1))..=lag_hi.min(m as i64 - 1) {
        let tp = tau - lag as f64 * t;
        let w = t - tp.abs();
        if w <= 0.0 {
            continue;
        }
        let n_lo = lag.max(0) as usize;
        let n_hi = (m as i64 + lag.min(0)) as usize;
        for n in n_lo..n_hi {
            let mi = (n as i64 - lag) as usize;
            let alpha = freqs[n] - freqs[mi] - fd;
            let mag = (w / t) * sinc(alpha * w);
            let phase = 2.0 * PI * fd * n as f64 * t - PI * alpha * (t + tp) - 2.0 * PI * freqs[mi] * tp;
            acc += Complex64::from_polar(mag, phase);
        }
    }
    acc / m as f64
}

/// Permutation-independent auto-correlation part of the zero-Doppler cut:
/// `((T-|τ|)/T) · sin(πMqτ/T) / (M sin(πqτ/T)) · e^{-jπ(2 f_c τ + (M-1) q τ/T)}`.
pub fn af_zero_doppler_auto(params: &WaveformParams, tau: f64) -> Complex64 {
    let t = params.t_pulse;
    if tau.abs() > t {
        return Complex64::new(0.0, 0.0);
    }
    let m = params.m as f64;
    let q = params.q as f64;
    let x = PI * q * tau / t;
    let dirichlet = if x.sin().abs() < 1e-12 {
        // limit of sin(Mx) / (M sin x) at x = jπ
        let j = (x / PI).round() as i64;
        if (j * (params.m as i64 - 1)) % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    } else {
        (m * x).sin() / (m * x.sin())
    };
    let phase = -PI * (2.0 * params.f_c * tau + (m - 1.0) * q * tau / t);
    Complex64::from_polar((t - tau.abs()) / t * dirichlet, phase)
}

/// Samples the unit-energy baseband waveform at time `t`.
pub fn waveform_sample(p: &Permutation, map: &FrequencyMapping, params: &WaveformParams, t: f64) -> Complex64 {
    let tp = params.t_pulse;
    let m = p.m();
    if t < 0.0 || t >= m as f64 * tp {
        return Complex64::new(0.0, 0.0);
    }
    let slot = ((t / tp).floor() as usize).min(m - 1);
    let f = params.freq(map.tone(p.get(slot)));
    let amp = (1.0 / (m as f64 * tp)).sqrt();
    Complex64::from_polar(amp, 2.0 * PI * f * (t - slot as f64 * tp))
}

/// Direct numerical evaluation of the ambiguity integral on the sampled
/// waveform: midpoint rule, with the integration range split at every pulse
/// edge of both the waveform and its delayed copy.
pub fn af_numeric_oracle(
    p: &Permutation,
    map: &FrequencyMapping,
    params: &WaveformParams,
    tau: f64,
    fd: f64,
    samples_per_pulse: usize,
) -> Result<Complex64> {
    if samples_per_pulse < 64 * params.q as usize {
        return Err(Error::InvalidParameter(format!(
            "{samples_per_pulse} samples per pulse is below 64q"
        )));
    }
    let t = params.t_pulse;
    let total = p.m() as f64 * t;
    let lo = tau.max(0.0);
    let hi = total.min(total + tau);
    if hi <= lo {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut edges = vec![lo, hi];
    for k in 0..=p.m() {
        for e in [k as f64 * t, k as f64 * t + tau] {
            if e > lo && e < hi {
                edges.push(e);
            }
        }
    }
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut acc = Complex64::new(0.0, 0.0);
    for w in edges.windows(2) {
        let len = w[1] - w[0];
        if len <= 0.0 {
            continue;
        }
        let n = ((len / t) * samples_per_pulse as f64).ceil().max(1.0) as usize;
        let h = len / n as f64;
        for i in 0..n {
            let x = w[0] + (i as f64 + 0.5) * h;
            let a = waveform_sample(p, map, params, x).conj();
            let b = waveform_sample(p, map, params, x - tau);
            acc += a * b * Complex64::from_polar(h, 2.0 * PI * fd * x);
        }
    }
    Ok(acc)
}

/// Rectangular delay-Doppler grid of `|A|` values, rows indexed by delay.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbiguityGrid {
    /// Normalized delays `τ/T`.
    pub tau_axis: Vec<f64>,
    /// Normalized Dopplers `f_d T`.
    pub fd_axis: Vec<f64>,
    pub mag: Vec<Vec<f64>>,
}

impl AmbiguityGrid {
    pub fn max_where(&self, pred: impl Fn(f64, f64) -> bool) -> f64 {
        let mut best = 0.0f64;
        for (i, &tn) in self.tau_axis.iter().enumerate() {
            for (j, &fnorm) in self.fd_axis.iter().enumerate() {
                if pred(tn, fnorm) {
                    best = best.max(self.mag[i][j]);
                }
            }
        }
        best
    }
}

/// Symmetric axis `-span..=span` in steps of `step`, built from integer
/// multiples so lattice points land exactly on the grid.
fn axis(span: f64, step: f64) -> Vec<f64> {
    let n = (span / step + 1e-9).floor() as i64;
    (-n..=n).map(|i| i as f64 * step).collect()
}

pub fn af_grid(
    p: &Permutation,
    map: &FrequencyMapping,
    params: &WaveformParams,
    tau_span: f64,
    fd_span: f64,
    step: f64,
) -> Result<AmbiguityGrid> {
    params.validate()?;
    map.check(p)?;
    if step.is_nan() || step <= 0.0 {
        return Err(Error::InvalidParameter(format!("grid step {step}")));
    }
    let tau_axis = axis(tau_span, step);
    let fd_axis = axis(fd_span, step);
    let t = params.t_pulse;
    let mag = tau_axis
        .iter()
        .map(|&tn| {
            fd_axis
                .iter()
                .map(|&fnorm| af_value(p, map, params, tn * t, fnorm / t).norm())
                .collect()
        })
        .collect();
    Ok(AmbiguityGrid { tau_axis, fd_axis, mag })
}

/// Dense-grid peak sidelobe evaluation settings (normalized units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PslGrid {
    pub step: f64,
    /// Points with `|τ/T|` below this are treated as mainlobe.
    pub min_tau: f64,
}

impl Default for PslGrid {
    fn default() -> Self {
        Self {
            step: 0.01,
            min_tau: 1.0,
        }
    }
}

/// Peak `|A|` over the sidelobe region `|τ/T| >= min_tau`, `|f_d T| <= Mq`.
///
/// Only `τ >= 0` is evaluated since `|A(-τ, -f_d)| = |A(τ, f_d)|` and the
/// Doppler span is symmetric.
pub fn grid_psl(p: &Permutation, map: &FrequencyMapping, params: &WaveformParams, grid: &PslGrid) -> Result<f64> {
    params.validate()?;
    map.check(p)?;
    if !(grid.step > 0.0 && grid.step <= 0.05) {
        return Err(Error::InvalidParameter(format!(
            "grid step {} must lie in (0, 0.05]",
            grid.step
        )));
    }
    let m = p.m();
    let t = params.t_pulse;
    let i_lo = (grid.min_tau / grid.step - 1e-9).ceil() as i64;
    let i_hi = (m as f64 / grid.step + 1e-9).floor() as i64;
    let n_fd = (m as f64 * params.q as f64 / grid.step + 1e-9).floor() as i64;
    let mut freqs = [0.0f64; MAX_M];
    for (i, f) in freqs.iter_mut().enumerate().take(m) {
        *f = params.freq(map.tone(p.get(i)));
    }
    let mut sweep = DopplerSweep::default();
    let mut best = 0.0f64;
    for i in i_lo..=i_hi {
        let tau = i as f64 * grid.step * t;
        best = best.max(sweep.max_norm_sqr(&freqs[..m], t, tau, n_fd, grid.step / t));
    }
    Ok(best.sqrt())
}

/// One pulse-pair term of [`af_value`] written as
/// `c(f_d) · (e^{j(a₊ + b₊ f_d)} − e^{j(a₋ + b₋ f_d)}) / 2j` with
/// `c = 1 / (M T π (Δf − f_d))`, so that stepping `f_d` on a uniform grid only
/// needs two complex rotations per term.
#[derive(Debug, Clone, Copy)]
struct PairTerm {
    df: f64,
    w: f64,
    a: [f64; 2],
    b: [f64; 2],
    rot: [Complex64; 2],
    step: [Complex64; 2],
}

#[derive(Debug, Default)]
struct DopplerSweep {
    terms: Vec<PairTerm>,
}

impl DopplerSweep {
    const RESYNC: i64 = 128;

    /// Max of `|A(τ, f_d)|²` over `f_d = j·dfd`, `|j| <= n_fd`.
    fn max_norm_sqr(&mut self, freqs: &[f64], t: f64, tau: f64, n_fd: i64, dfd: f64) -> f64 {
        let m = freqs.len();
        self.terms.clear();
        let lag_lo = ((tau - t) / t).ceil() as i64;
        let lag_hi = ((tau + t) / t).floor() as i64;
        for lag in lag_lo.max(-(m as i64 - 1))..=lag_hi.min(m as i64 - 1) {
            let tp = tau - lag as f64 * t;
            let w = t - tp.abs();
            if w <= 0.0 {
                continue;
            }
            for n in lag.max(0) as usize..(m as i64 + lag.min(0)) as usize {
                let fm = freqs[(n as i64 - lag) as usize];
                let df = freqs[n] - fm;
                let base = -PI * df * (t + tp) - 2.0 * PI * fm * tp;
                let slope = 2.0 * PI * n as f64 * t + PI * (t + tp);
                let a = [base + PI * df * w, base - PI * df * w];
                let b = [slope - PI * w, slope + PI * w];
                let step = [Complex64::cis(b[0] * dfd), Complex64::cis(b[1] * dfd)];
                self.terms.push(PairTerm {
                    df,
                    w,
                    a,
                    b,
                    rot: [Complex64::new(0.0, 0.0); 2],
                    step,
                });
            }
        }
        let scale = 1.0 / (m as f64 * t);
        let mut best = 0.0f64;
        for j in -n_fd..=n_fd {
            let fd = j as f64 * dfd;
            let resync = (j + n_fd) % Self::RESYNC == 0;
            let mut acc = Complex64::new(0.0, 0.0);
            for term in &mut self.terms {
                if resync {
                    term.rot = [
                        Complex64::cis(term.a[0] + term.b[0] * fd),
                        Complex64::cis(term.a[1] + term.b[1] * fd),
                    ];
                }
                let alpha = term.df - fd;
                if (alpha * term.w).abs() < 1e-9 {
                    // sinc limit: the phase is the midpoint of the two rotators
                    let phase = 0.5 * (term.a[0] + term.a[1] + (term.b[0] + term.b[1]) * fd);
                    let mid = Complex64::cis(phase);
                    acc += mid * term.w;
                } else {
                    let diff = term.rot[0] - term.rot[1];
                    // (diff / 2j) / (π α)
                    acc += Complex64::new(diff.im, -diff.re) / (2.0 * PI * alpha);
                }
                term.rot[0] *= term.step[0];
                term.rot[1] *= term.step[1];
            }
            best = best.max((acc * scale).norm_sqr());
        }
        best
    }
}

/// All `m!` ranks ordered by (max repeats, rank); the first `target_size`
/// are returned sorted by rank.
pub fn rank_subset_by_repeats(m: usize, map: &FrequencyMapping, target_size: u64) -> Result<Vec<u64>> {
    if map.m() != m {
        return Err(Error::LengthMismatch(map.m(), m));
    }
    if m > MAX_ENUM_M {
        return Err(Error::BudgetExceeded {
            what: "radar subset enumeration",
            needed: fact(m),
            budget: fact(MAX_ENUM_M),
        });
    }
    let total = fact(m);
    if target_size == 0 || target_size > total {
        return Err(Error::InvalidSubset(format!(
            "radar subset size {target_size} must lie in 1..={total}"
        )));
    }
    let mut scored: Vec<(usize, u64)> = all_permutations(m)?
        .enumerate()
        .map(|(r, p)| (max_repeats_fast(&p, map), r as u64))
        .collect();
    scored.sort_unstable();
    let mut ranks: Vec<u64> = scored[..target_size as usize].iter().map(|&(_, r)| r).collect();
    ranks.sort_unstable();
    Ok(ranks)
}

/// Number of subset members per max-repeats value.
pub fn repeats_histogram(spec: &SubsetSpec, map: &FrequencyMapping, budget: u64) -> Result<BTreeMap<usize, u64>> {
    if map.m() != spec.m() {
        return Err(Error::LengthMismatch(map.m(), spec.m()));
    }
    if spec.size() > budget {
        return Err(Error::BudgetExceeded {
            what: "repeats histogram",
            needed: spec.size(),
            budget,
        });
    }
    let mut hist = BTreeMap::new();
    for p in spec.enumerate() {
        *hist.entry(max_repeats_fast(&p, map)).or_insert(0) += 1;
    }
    Ok(hist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{seq::SliceRandom, Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(v: &[usize]) -> Permutation {
        Permutation::new(v).unwrap()
    }

    fn random_perm(m: usize, rng: &mut ChaCha8Rng) -> Permutation {
        let mut v: Vec<usize> = (0..m).collect();
        v.shuffle(rng);
        Permutation::new(&v).unwrap()
    }

    #[test]
    fn mapping_validation() {
        assert!(FrequencyMapping::new(vec![0, 0, 1]).is_err());
        assert!(FrequencyMapping::from_one_based(&[1, 2, 4]).is_err());
        let m = FrequencyMapping::from_one_based(&[1, 2, 3, 4, 5, 6, 8, 7]).unwrap();
        assert_eq!(m, FrequencyMapping::swap(8, 6, 7).unwrap());
        assert!(!m.is_identity());
        assert_eq!(serde_json::to_string(&m).unwrap(), "[1,2,3,4,5,6,8,7]");
    }

    #[test]
    fn triangle_examples() {
        let id = FrequencyMapping::identity(8).unwrap();
        let tri = difference_triangle(&Permutation::identity(8).unwrap(), &id).unwrap();
        for l in 1..8 {
            assert_eq!(tri.row(l).len(), 8 - l);
            assert!(tri.row(l).iter().all(|&v| v == l as i32));
        }
        assert_eq!(tri.max_repeats(), 6);
        let small = difference_triangle(&p(&[0, 2, 1]), &FrequencyMapping::identity(3).unwrap()).unwrap();
        assert_eq!(small.rows, vec![vec![2, -1], vec![1]]);
    }

    #[test]
    fn triangle_of_reverse_is_reversed_and_negated() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let m = rng.random_range(2..=9);
            let q = random_perm(m, &mut rng);
            let map = FrequencyMapping::identity(m).unwrap();
            let a = difference_triangle(&q, &map).unwrap();
            let b = difference_triangle(&q.reverse(), &map).unwrap();
            for l in 1..m {
                let expect: Vec<i32> = a.row(l).iter().rev().map(|v| -v).collect();
                assert_eq!(b.row(l), expect.as_slice());
            }
        }
    }

    #[test]
    fn max_repeats_examples() {
        let id = FrequencyMapping::identity(8).unwrap();
        assert_eq!(max_repeats(&Permutation::identity(8).unwrap(), &id).unwrap(), 6);
        let costas_like = Permutation::from_one_based(&[1, 2, 4, 5, 8, 7, 6, 3]).unwrap();
        assert_eq!(max_repeats(&costas_like, &id).unwrap(), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let q = random_perm(8, &mut rng);
            let tri = difference_triangle(&q, &id).unwrap();
            assert_eq!(tri.max_repeats(), max_repeats(&q, &id).unwrap());
        }
    }

    #[test]
    fn costas_counts() {
        let m7 = FrequencyMapping::identity(7).unwrap();
        let n = all_permutations(7)
            .unwrap()
            .filter(|q| is_costas(q, &m7).unwrap())
            .count();
        assert_eq!(n, 200);
        let m2 = FrequencyMapping::identity(2).unwrap();
        assert!(all_permutations(2).unwrap().all(|q| is_costas(&q, &m2).unwrap()));
        for m in 3..8 {
            let map = FrequencyMapping::identity(m).unwrap();
            assert!(!is_costas(&Permutation::identity(m).unwrap(), &map).unwrap());
        }
    }

    #[test]
    fn lattice_psl_examples() {
        let id = FrequencyMapping::identity(8).unwrap();
        assert_eq!(lattice_psl(&Permutation::identity(8).unwrap(), &id).unwrap(), 0.875);
        let costas_like = Permutation::from_one_based(&[1, 2, 4, 5, 8, 7, 6, 3]).unwrap();
        assert_eq!(lattice_psl(&costas_like, &id).unwrap(), 0.25);
    }

    #[test]
    fn af_origin_and_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let m = rng.random_range(2..=8);
            let q = random_perm(m, &mut rng);
            let map = FrequencyMapping::identity(m).unwrap();
            let params = WaveformParams::normalized(m);
            assert!((af_value(&q, &map, &params, 0.0, 0.0).norm() - 1.0).abs() < 1e-12);
            assert_eq!(af_value(&q, &map, &params, m as f64, 0.3).norm(), 0.0);
            assert_eq!(af_value(&q, &map, &params, -(m as f64) - 0.2, 0.3).norm(), 0.0);
        }
    }

    #[test]
    fn zero_delay_cut_is_sinc() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = 6;
        let map = FrequencyMapping::identity(m).unwrap();
        let params = WaveformParams::normalized(m);
        let perms: Vec<_> = (0..10).map(|_| random_perm(m, &mut rng)).collect();
        for _ in 0..50 {
            let fd = rng.random_range(-7.0..7.0);
            let x = PI * m as f64 * fd;
            let expect = Complex64::from_polar(sinc(m as f64 * fd), x);
            for q in &perms {
                let v = af_value(q, &map, &params, 0.0, fd);
                assert!((v - expect).norm() < 1e-9, "{q} fd={fd}");
            }
        }
    }

    #[test]
    fn zero_doppler_auto_matches_pulse_sum() {
        for (m, qq, fc) in [(4, 1, 0.0), (6, 2, 0.0), (5, 1, 3.0)] {
            let params = WaveformParams {
                m,
                t_pulse: 1.0,
                q: qq,
                f_c: fc,
            };
            assert!((af_zero_doppler_auto(&params, 0.0).norm() - 1.0).abs() < 1e-12);
            let first_zero = 1.0 / (m as f64 * qq as f64);
            assert!(af_zero_doppler_auto(&params, first_zero).norm() < 1e-9);
            assert_eq!(af_zero_doppler_auto(&params, 1.5).norm(), 0.0);
            for i in -20..=20 {
                let tau = i as f64 * 0.049;
                let mut direct = Complex64::new(0.0, 0.0);
                for n in 0..m {
                    let f = params.freq(n);
                    direct += Complex64::from_polar((1.0 - tau.abs()) * 1.0, -2.0 * PI * f * tau);
                }
                direct /= m as f64;
                assert!((af_zero_doppler_auto(&params, tau) - direct).norm() < 1e-9, "tau={tau}");
            }
        }
    }

    #[test]
    fn closed_form_matches_numeric_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for m in [3, 4, 5] {
            let q = random_perm(m, &mut rng);
            let map = FrequencyMapping::identity(m).unwrap();
            let params = WaveformParams::normalized(m);
            for _ in 0..30 {
                let tau = rng.random_range(-(m as f64)..m as f64);
                let fd = rng.random_range(-(m as f64)..m as f64);
                let a = af_value(&q, &map, &params, tau, fd);
                let b = af_numeric_oracle(&q, &map, &params, tau, fd, 2048).unwrap();
                assert!((a.norm() - b.norm()).abs() < 1e-3, "{q} {tau} {fd}");
            }
        }
        let params = WaveformParams::normalized(4);
        let map = FrequencyMapping::identity(4).unwrap();
        assert!(af_numeric_oracle(&p(&[0, 1, 2, 3]), &map, &params, 0.0, 0.0, 32).is_err());
    }

    #[test]
    fn lattice_identity_with_triangle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let m = rng.random_range(3..=8);
            let q = random_perm(m, &mut rng);
            let map = FrequencyMapping::identity(m).unwrap();
            let params = WaveformParams::normalized(m);
            let tri = difference_triangle(&q, &map).unwrap();
            for l in 1..m {
                for k in -(m as i32)..=(m as i32) {
                    let v = af_value(&q, &map, &params, l as f64, k as f64).norm();
                    let expect = tri.multiplicity(l, k) as f64 / m as f64;
                    assert!((v - expect).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn conjugate_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let q = random_perm(6, &mut rng);
        let map = FrequencyMapping::identity(6).unwrap();
        let params = WaveformParams::normalized(6);
        for _ in 0..100 {
            let tau = rng.random_range(-6.0..6.0);
            let fd = rng.random_range(-6.0..6.0);
            let a = af_value(&q, &map, &params, tau, fd).norm();
            let b = af_value(&q, &map, &params, -tau, -fd).norm();
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn grid_psl_bounds_lattice_psl() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let map = FrequencyMapping::identity(5).unwrap();
        let params = WaveformParams::normalized(5);
        let grid = PslGrid {
            step: 0.05,
            min_tau: 0.5,
        };
        for _ in 0..5 {
            let q = random_perm(5, &mut rng);
            let g = grid_psl(&q, &map, &params, &grid).unwrap();
            assert!(g >= lattice_psl(&q, &map).unwrap() - 1e-12);
            assert!(g <= 1.0);
        }
        let bad = PslGrid {
            step: 0.1,
            min_tau: 0.5,
        };
        assert!(grid_psl(
            &p(&[0, 1, 2]),
            &FrequencyMapping::identity(3).unwrap(),
            &WaveformParams::normalized(3),
            &bad
        )
        .is_err());
    }

    fn direct_grid_psl(q: &Permutation, map: &FrequencyMapping, params: &WaveformParams, grid: &PslGrid) -> f64 {
        let m = q.m();
        let fd_axis = axis(m as f64 * params.q as f64, grid.step);
        let mut best = 0.0f64;
        let i_lo = (grid.min_tau / grid.step - 1e-9).ceil() as i64;
        let i_hi = (m as f64 / grid.step + 1e-9).floor() as i64;
        for i in i_lo..=i_hi {
            let tau = i as f64 * grid.step * params.t_pulse;
            for &f in &fd_axis {
                best = best.max(af_value(q, map, params, tau, f / params.t_pulse).norm());
            }
        }
        best
    }

    #[test]
    fn doppler_sweep_matches_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let grid = PslGrid {
            step: 0.02,
            min_tau: 0.5,
        };
        for m in [3, 4, 6] {
            for (q_factor, f_c, t_pulse) in [(1, 0.0, 1.0), (2, 0.7, 1.0), (1, 2.0, 2.5)] {
                let params = WaveformParams {
                    m,
                    t_pulse,
                    q: q_factor,
                    f_c,
                };
                let mut tones: Vec<usize> = (0..m).collect();
                tones.shuffle(&mut rng);
                let map = FrequencyMapping::new(tones).unwrap();
                let q = random_perm(m, &mut rng);
                let fast = grid_psl(&q, &map, &params, &grid).unwrap();
                let slow = direct_grid_psl(&q, &map, &params, &grid);
                assert!((fast - slow).abs() < 1e-10, "m={m} q={q_factor}: {fast} vs {slow}");
            }
        }
    }

    #[test]
    fn grid_layout() {
        let map = FrequencyMapping::identity(3).unwrap();
        let params = WaveformParams::normalized(3);
        let g = af_grid(&p(&[0, 2, 1]), &map, &params, 3.0, 3.0, 0.5).unwrap();
        assert_eq!(g.tau_axis.len(), 13);
        assert_eq!(g.fd_axis.len(), 13);
        assert!((g.mag[6][6] - 1.0).abs() < 1e-12);
        assert!(g.mag.iter().flatten().all(|&v| v >= 0.0));
    }

    #[test]
    fn radar_ranking() {
        let map = FrequencyMapping::identity(6).unwrap();
        let ranks = rank_subset_by_repeats(6, &map, 360).unwrap();
        assert_eq!(ranks.len(), 360);
        assert!(ranks.windows(2).all(|w| w[0] < w[1]));
        for &r in &ranks {
            let q = Permutation::unrank_unchecked(6, r);
            assert!(max_repeats(&q, &map).unwrap() <= 1);
        }
        assert_eq!(
            rank_subset_by_repeats(4, &FrequencyMapping::identity(4).unwrap(), 24).unwrap(),
            (0..24).collect::<Vec<_>>()
        );
        assert!(rank_subset_by_repeats(4, &FrequencyMapping::identity(4).unwrap(), 25).is_err());
        let m7 = FrequencyMapping::identity(7).unwrap();
        let n_le1 = all_permutations(7)
            .unwrap()
            .filter(|q| max_repeats(q, &m7).unwrap() <= 1)
            .count();
        assert_eq!(n_le1, 3262);
    }

    #[test]
    fn histogram_totals() {
        let spec = SubsetSpec::universal(7).unwrap();
        let h = repeats_histogram(&spec, &FrequencyMapping::identity(7).unwrap(), 10_000).unwrap();
        assert_eq!(h.values().sum::<u64>(), 5040);
        assert_eq!(h[&0], 200);
        assert!(repeats_histogram(&spec, &FrequencyMapping::identity(7).unwrap(), 100).is_err());
    }
}
