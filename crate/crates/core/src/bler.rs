//! Analytic block error rate bounds.
//!
//! SNR is `E/N0` with `E[hᴴh] = N`, so on AWGN the pairwise error between
//! waveforms at Hamming distance `l` is `Q(√(N E l / (N0 M)))`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use crate::channel::{correlation_matrix_cu, sym_eig, ChannelModel};
use crate::error::{Error, Result};
use crate::subsets::{DistanceDistribution, SubsetSpec, Variant, DEFAULT_BUDGET};

/// Gaussian tail probability `P(Z > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Craig's form `(1/π) ∫₀^{π/2} exp(−x²/(2 sin²θ)) dθ`, valid for `x ≥ 0`.
pub fn q_craig(x: f64) -> f64 {
    assert!(x >= 0.0, "Craig form needs x >= 0");
    let f = |t: f64| {
        let s = t.sin();
        (-x * x / (2.0 * s * s)).exp()
    };
    // For small x the integrand rises sharply near θ ≈ x, so panels are
    // refined geometrically around that point.
    let mut edges = vec![0.0];
    edges.extend(
        [0.125, 0.25, 0.5, 1.0, 2.0, 4.0]
            .iter()
            .map(|c| c * x)
            .filter(|&b| b > 0.0 && b < FRAC_PI_2),
    );
    edges.push(FRAC_PI_2);
    let rule = gauss_legendre_64();
    edges.windows(2).map(|w| rule.integrate(w[0], w[1], f)).sum::<f64>() / PI
}

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes by Newton iteration on `P_n` from the Chebyshev-like initial guess.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        half * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
    }
}

/// `(P_n(x), P_n'(x))` via the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

pub fn gauss_legendre_64() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(64))
}

/// `α_l = 2 N0 M (K+1) / (E l)`.
pub fn alpha_l(k_factor: f64, n0: f64, m: usize, e_total: f64, l: usize) -> f64 {
    2.0 * n0 * m as f64 * (k_factor + 1.0) / (e_total * l as f64)
}

/// `Q(√(N E d / (N0 M)))`.
pub fn pairwise_error_awgn(d: usize, n: usize, e_total: f64, n0: f64, m: usize) -> f64 {
    q_function((n as f64 * e_total * d as f64 / (n0 * m as f64)).sqrt())
}

/// Eigen-structure of the scatter correlation needed by the Rician bound.
#[derive(Debug, Clone, PartialEq)]
pub struct RicianSpectrum {
    pub lambda: Vec<f64>,
    /// `|(Vᴴ Δ)_n|²` for each eigenvector.
    pub v_delta: Vec<f64>,
    pub k_factor: f64,
}

impl RicianSpectrum {
    pub fn from_channel(model: &ChannelModel) -> Result<Self> {
        model.validate()?;
        let ChannelModel::Rician {
            k_factor,
            rho,
            n_antennas,
            ..
        } = model
        else {
            return Err(Error::InvalidParameter("Rician spectrum needs a Rician channel".into()));
        };
        let eig = sym_eig(&correlation_matrix_cu(*n_antennas, *rho)?)?;
        if let Some(&bad) = eig.values.iter().find(|&&l| l <= 0.0) {
            return Err(Error::NotPsd(bad));
        }
        let delta = model.los_vector();
        let v_delta = (0..*n_antennas)
            .map(|col| {
                (0..*n_antennas)
                    .map(|row| delta[row] * eig.vectors[(row, col)])
                    .sum::<num_complex::Complex64>()
                    .norm_sqr()
            })
            .collect();
        Ok(Self {
            lambda: eig.values,
            v_delta,
            k_factor: *k_factor,
        })
    }
}

/// `Π_n α s²/(λ_n + α s²) · exp(−K Σ_n |(VᴴΔ)_n|²/(λ_n + α s²))` with `s = sin θ`.
pub fn rician_integrand(spectrum: &RicianSpectrum, alpha: f64, theta: f64) -> f64 {
    let as2 = alpha * theta.sin().powi(2);
    let mut prod = 1.0;
    let mut expo = 0.0;
    for (&l, &v) in spectrum.lambda.iter().zip(&spectrum.v_delta) {
        let den = l + as2;
        prod *= as2 / den;
        expo -= spectrum.k_factor * v / den;
    }
    prod * expo.exp()
}

/// Average pairwise error at distance `l` over the Rician channel.
pub fn pairwise_error_rician(spectrum: &RicianSpectrum, alpha: f64, rule: &GaussLegendre) -> f64 {
    rule.integrate(0.0, FRAC_PI_2, |t| rician_integrand(spectrum, alpha, t)) / PI
}

/// Everything the bounds need for one (subset, channel, SNR) point.
#[derive(Debug, Clone)]
pub struct BoundInputs {
    pub m: usize,
    pub n: usize,
    pub e_total: f64,
    pub n0: f64,
    pub dist: DistanceDistribution,
    pub channel: ChannelModel,
    /// Nearest-neighbor term `(d_min, multiplicity)` when defined for the subset family.
    pub nn_term: Option<(usize, f64)>,
}

impl BoundInputs {
    /// Unit energy and `N0 = 1/SNR`.
    pub fn for_subset(spec: &SubsetSpec, channel: &ChannelModel, snr_db: f64) -> Result<Self> {
        Self::from_parts(spec, channel, 1.0, 1.0 / db_to_linear(snr_db))
    }

    pub fn from_parts(spec: &SubsetSpec, channel: &ChannelModel, e_total: f64, n0: f64) -> Result<Self> {
        let dist = spec.distance_distribution(DEFAULT_BUDGET)?;
        Ok(Self {
            m: spec.m(),
            n: channel.n_antennas(),
            e_total,
            n0,
            nn_term: nn_term(spec, &dist),
            dist,
            channel: channel.clone(),
        })
    }

    /// Same subset and channel at another noise level.
    pub fn with_snr_db(&self, snr_db: f64) -> Self {
        Self {
            n0: self.e_total / db_to_linear(snr_db),
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.e_total > 0.0 && self.n0 > 0.0 && self.m >= 2 && self.n == self.channel.n_antennas();
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "bound inputs: E={}, N0={}, M={}, N={}",
                self.e_total, self.n0, self.m, self.n
            )));
        }
        self.channel.validate()
    }

    fn pep(&self, l: usize, spectrum: Option<&RicianSpectrum>) -> f64 {
        match spectrum {
            None => pairwise_error_awgn(l, self.n, self.e_total, self.n0, self.m),
            Some(s) => {
                let alpha = alpha_l(s.k_factor, self.n0, self.m, self.e_total, l);
                pairwise_error_rician(s, alpha, gauss_legendre_64())
            }
        }
    }

    fn spectrum(&self) -> Result<Option<RicianSpectrum>> {
        match self.channel {
            ChannelModel::Awgn { .. } => Ok(None),
            ChannelModel::Rician { .. } => RicianSpectrum::from_channel(&self.channel).map(Some),
        }
    }
}

/// Multiplicity of the nearest neighbors for families where it is known in
/// closed form: `C(M/k, 2)` at distance `2k` for blocks (the universal set is
/// `k = 1`) and `M(M−1)(M−2)/3` at distance 3 for the alternating subset.
fn nn_term(spec: &SubsetSpec, dist: &DistanceDistribution) -> Option<(usize, f64)> {
    let m = spec.m() as f64;
    match spec.variant() {
        Variant::Universal => Some((2, m * (m - 1.0) / 2.0)),
        Variant::Block { k } => {
            let b = m / *k as f64;
            (b >= 2.0).then(|| (2 * k, b * (b - 1.0) / 2.0))
        }
        Variant::Alternating => (dist.d_min == 3).then_some((3, m * (m - 1.0) * (m - 2.0) / 3.0)),
        _ => None,
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `Σ_l A_l Q(√(N E l / (N0 M)))`.
pub fn union_bound_awgn(inp: &BoundInputs) -> Result<f64> {
    inp.validate()?;
    if !matches!(inp.channel, ChannelModel::Awgn { .. }) {
        return Err(Error::InvalidParameter("AWGN bound on a fading channel".into()));
    }
    Ok(inp.dist.a.iter().map(|(&l, &a)| a * inp.pep(l, None)).sum())
}

/// `Σ_l A_l (1/π) ∫₀^{π/2} [Rician integrand] dθ` with 64-node Gauss–Legendre.
pub fn union_bound_rician(inp: &BoundInputs) -> Result<f64> {
    union_bound_rician_with(inp, gauss_legendre_64())
}

pub fn union_bound_rician_with(inp: &BoundInputs, rule: &GaussLegendre) -> Result<f64> {
    inp.validate()?;
    let spectrum = RicianSpectrum::from_channel(&inp.channel)?;
    Ok(inp
        .dist
        .a
        .iter()
        .map(|(&l, &a)| {
            a * pairwise_error_rician(
                &spectrum,
                alpha_l(spectrum.k_factor, inp.n0, inp.m, inp.e_total, l),
                rule,
            )
        })
        .sum())
}

/// Union bound for whichever channel the inputs carry.
pub fn union_bound(inp: &BoundInputs) -> Result<f64> {
    match inp.channel {
        ChannelModel::Awgn { .. } => union_bound_awgn(inp),
        ChannelModel::Rician { .. } => union_bound_rician(inp),
    }
}

/// Single nearest-neighbor term of the union bound.
pub fn nn_approx(inp: &BoundInputs) -> Result<f64> {
    inp.validate()?;
    let (l, coeff) = inp
        .nn_term
        .ok_or_else(|| Error::InvalidParameter("nearest-neighbor approximation undefined for this subset".into()))?;
    let spectrum = inp.spectrum()?;
    Ok(coeff * inp.pep(l, spectrum.as_ref()))
}
