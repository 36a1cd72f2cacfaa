//! Channel draws and the per-pulse/per-tone correlation statistic.
//!
//! The receiver works on an `M×M` matrix `R` where `r[u][v]` is the matched
//! filter output of pulse `u` against tone `v`. Tones are orthogonal, so the
//! noise in distinct cells is independent and `R` can be synthesized directly:
//!
//! ```text
//! r[u][v] = ‖h‖² √(E/M) · 1{p(u) = v} + Re(hᴴ w_uv),   w_uv ~ CN(0, N0 I)
//! ```
//!
//! Under this model the score difference between the transmitted permutation
//! and a competitor at Hamming distance `d` is Gaussian with mean
//! `‖h‖² √(E/M) d` and variance `‖h‖² N0 d`, i.e. the pairwise error is
//! `Q(√(‖h‖² E d / (N0 M)))`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use crate::linalg::{matrix_sqrt_psd, sym_eig, SquareMatrix, SymEigen};

use crate::error::{Error, Result};
use crate::perm::Permutation;

pub type CorrelationMatrix = SquareMatrix;

/// Exponential correlation model `C(i, j) = ρ^|i-j|`.
pub fn correlation_matrix_cu(n: usize, rho: f64) -> Result<SquareMatrix> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!("rho = {rho} outside [0, 1)")));
    }
    Ok(SquareMatrix::from_fn(n, |i, j| rho.powi((i as i32 - j as i32).abs())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelModel {
    Awgn {
        #[serde(rename = "N")]
        n_antennas: usize,
    },
    Rician {
        #[serde(rename = "K")]
        k_factor: f64,
        rho: f64,
        #[serde(rename = "N")]
        n_antennas: usize,
        /// Line-of-sight phases in radians; all zero when omitted.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        los_phases: Option<Vec<f64>>,
    },
}

impl ChannelModel {
    pub fn awgn(n_antennas: usize) -> Self {
        Self::Awgn { n_antennas }
    }

    pub fn rician(k_factor: f64, rho: f64, n_antennas: usize) -> Self {
        Self::Rician {
            k_factor,
            rho,
            n_antennas,
            los_phases: None,
        }
    }

    pub fn n_antennas(&self) -> usize {
        match self {
            Self::Awgn { n_antennas } | Self::Rician { n_antennas, .. } => *n_antennas,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_antennas() == 0 {
            return Err(Error::InvalidParameter("at least one antenna required".into()));
        }
        if let Self::Rician {
            k_factor,
            rho,
            n_antennas,
            los_phases,
        } = self
        {
            if !(*k_factor >= 0.0 && k_factor.is_finite()) {
                return Err(Error::InvalidParameter(format!("K = {k_factor}")));
            }
            if !(0.0..1.0).contains(rho) {
                return Err(Error::InvalidParameter(format!("rho = {rho} outside [0, 1)")));
            }
            if let Some(ph) = los_phases {
                if ph.len() != *n_antennas {
                    return Err(Error::LengthMismatch(ph.len(), *n_antennas));
                }
            }
        }
        Ok(())
    }

    /// Unit-modulus LoS vector Δ.
    pub fn los_vector(&self) -> Vec<Complex64> {
        match self {
            Self::Awgn { n_antennas } => vec![Complex64::new(1.0, 0.0); *n_antennas],
            Self::Rician {
                n_antennas, los_phases, ..
            } => match los_phases {
                Some(ph) => ph.iter().map(|&a| Complex64::from_polar(1.0, a)).collect(),
                None => vec![Complex64::new(1.0, 0.0); *n_antennas],
            },
        }
    }

    /// Precomputes `C_u^{1/2}` so repeated draws are cheap.
    pub fn prepare(&self) -> Result<PreparedChannel> {
        self.validate()?;
        let scatter_sqrt = match self {
            Self::Awgn { .. } => None,
            Self::Rician { rho, n_antennas, .. } => Some(matrix_sqrt_psd(&correlation_matrix_cu(*n_antennas, *rho)?)?),
        };
        Ok(PreparedChannel {
            model: self.clone(),
            los: self.los_vector(),
            scatter_sqrt,
        })
    }
}

#[derive(Debug, Clone)]
pub struct PreparedChannel {
    model: ChannelModel,
    los: Vec<Complex64>,
    scatter_sqrt: Option<SquareMatrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: Vec<Complex64>,
    /// `hᴴh`.
    pub gain: f64,
}

impl ChannelRealization {
    pub fn new(h: Vec<Complex64>) -> Self {
        let gain = h.iter().map(|c| c.norm_sqr()).sum();
        Self { h, gain }
    }
}

#[inline]
pub(crate) fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

impl PreparedChannel {
    pub fn model(&self) -> &ChannelModel {
        &self.model
    }

    /// AWGN gives the deterministic all-ones vector. Rician draws
    /// `h = √(K/(K+1)) Δ + √(1/(K+1)) C_u^{1/2} u` with `u ~ CN(0, I)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelRealization {
        match (&self.model, &self.scatter_sqrt) {
            (ChannelModel::Rician { k_factor, .. }, Some(s)) => {
                let n = self.los.len();
                let u: Vec<Complex64> = (0..n).map(|_| complex_normal(rng)).collect();
                let los_w = (k_factor / (k_factor + 1.0)).sqrt();
                let sc_w = (1.0 / (k_factor + 1.0)).sqrt();
                let h = (0..n)
                    .map(|i| {
                        let scatter: Complex64 = (0..n).map(|j| u[j] * s[(i, j)]).sum();
                        self.los[i] * los_w + scatter * sc_w
                    })
                    .collect();
                ChannelRealization::new(h)
            }
            _ => ChannelRealization::new(self.los.clone()),
        }
    }
}

/// One-shot draw; prefer [`ChannelModel::prepare`] in loops.
pub fn sample_channel<R: Rng + ?Sized>(model: &ChannelModel, rng: &mut R) -> Result<ChannelRealization> {
    Ok(model.prepare()?.sample(rng))
}

/// Synthesizes the receiver statistic for transmitted permutation `p`.
pub fn synth_correlation_matrix<R: Rng + ?Sized>(
    p: &Permutation,
    ch: &ChannelRealization,
    e_total: f64,
    n0: f64,
    rng: &mut R,
) -> CorrelationMatrix {
    let m = p.m();
    let mut r = SquareMatrix::zeros(m);
    let peak = ch.gain * (e_total / m as f64).sqrt();
    for u in 0..m {
        r[(u, p.get(u))] = peak;
    }
    if n0 > 0.0 {
        let sigma = (n0 / 2.0).sqrt();
        for u in 0..m {
            for v in 0..m {
                // Re(hᴴ w) = Σ Re(h_n) Re(w_n) + Im(h_n) Im(w_n)
                let mut noise = 0.0;
                for hn in &ch.h {
                    let wr: f64 = rng.sample(StandardNormal);
                    let wi: f64 = rng.sample(StandardNormal);
                    noise += hn.re * wr + hn.im * wi;
                }
                r[(u, v)] += sigma * noise;
            }
        }
    }
    r
}

/// Block-basis statistic: `r̂[u][v] = Σ_o r[uk + o][vk + o]`.
pub fn block_aggregate(r: &CorrelationMatrix, k: usize) -> Result<SquareMatrix> {
    let m = r.n();
    if k == 0 || !m.is_multiple_of(k) {
        return Err(Error::InvalidParameter(format!("block size {k} does not divide {m}")));
    }
    let nb = m / k;
    Ok(SquareMatrix::from_fn(nb, |u, v| {
        (0..k).map(|o| r[(u * k + o, v * k + o)]).sum()
    }))
}
