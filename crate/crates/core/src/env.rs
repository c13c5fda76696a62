//! Simulated QoE environment: truncated-Gaussian feedback per arm drawn
//! through keyed streams.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use statrs::function::erf::{erfc, erfc_inv};

use crate::model::{ArmId, ArmSpec, QOE_MAX, QOE_MIN};
use crate::streams::FeedbackStream;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

fn std_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

fn std_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `1 - Phi(x)` without cancellation.
fn std_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

fn std_quantile(p: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * p)
}

/// Normal(mu, sigma) restricted to `[lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedGaussian {
    mu: f64,
    sigma: f64,
    lower: f64,
    upper: f64,
    truncated_mean: f64,
    // standardized bounds
    alpha: f64,
    beta: f64,
    // Sampling works on whichever tail keeps the probabilities away from 1.
    upper_tail: bool,
    p_lo: f64,
    p_mass: f64,
}

impl TruncatedGaussian {
    pub fn new(mu: f64, sigma: f64, lower: f64, upper: f64) -> Self {
        assert!(sigma > 0.0 && sigma.is_finite(), "sigma must be positive");
        assert!(lower < upper, "empty truncation interval");
        let alpha = (lower - mu) / sigma;
        let beta = (upper - mu) / sigma;
        let upper_tail = alpha > 0.0;
        let (p_lo, p_hi) = if upper_tail {
            // in the upper tail, sample the mirrored variable -Z in [-beta, -alpha]
            (std_sf(beta), std_sf(alpha))
        } else {
            (std_cdf(alpha), std_cdf(beta))
        };
        let p_mass = p_hi - p_lo;
        assert!(p_mass > 0.0, "truncation interval has no probability mass");
        let mean = mu + sigma * (std_pdf(alpha) - std_pdf(beta)) / p_mass;
        Self {
            mu,
            sigma,
            lower,
            upper,
            truncated_mean: mean.clamp(lower, upper),
            alpha,
            beta,
            upper_tail,
            p_lo,
            p_mass,
        }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// Standardized truncation points `(alpha, beta)`.
    pub fn standardized_bounds(&self) -> (f64, f64) {
        (self.alpha, self.beta)
    }

    /// Analytic mean of the truncated law.
    pub fn truncated_mean(&self) -> f64 {
        self.truncated_mean
    }

    /// Inverse-CDF transform of a uniform in (0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        let p = self.p_lo + u * self.p_mass;
        let z = std_quantile(p);
        let z = if self.upper_tail { -z } else { z };
        (self.mu + self.sigma * z).clamp(self.lower, self.upper)
    }
}

pub fn make_arm_distribution(arm: &ArmSpec) -> TruncatedGaussian {
    TruncatedGaussian::new(arm.expected_qoe, arm.noise_sigma, QOE_MIN, QOE_MAX)
}

pub fn true_expected_qoe(dist: &TruncatedGaussian) -> f64 {
    dist.truncated_mean()
}

/// Fills `out` with the QoE of users `0..out.len()` for the given pull.
pub fn sample_feedback(
    stream: &FeedbackStream,
    dist: &TruncatedGaussian,
    arm: ArmId,
    pull_index: u64,
    out: &mut [f64],
) {
    stream.fill_uniforms(arm.index(), pull_index, out);
    for x in out.iter_mut() {
        *x = dist.quantile(*x);
    }
}

/// The arm distributions of one episode together with its feedback stream.
#[derive(Debug, Clone)]
pub struct Environment {
    dists: Vec<TruncatedGaussian>,
    stream: FeedbackStream,
}

impl Environment {
    pub fn new(arms: &[ArmSpec], stream: FeedbackStream) -> Self {
        Self {
            dists: arms.iter().map(make_arm_distribution).collect(),
            stream,
        }
    }

    pub fn num_arms(&self) -> usize {
        self.dists.len()
    }

    pub fn distribution(&self, arm: ArmId) -> &TruncatedGaussian {
        &self.dists[arm.index()]
    }

    pub fn stream(&self) -> &FeedbackStream {
        &self.stream
    }

    /// Ground-truth `U_i` of every arm.
    pub fn true_means(&self) -> Vec<f64> {
        self.dists.iter().map(true_expected_qoe).collect()
    }

    pub fn sample(&self, arm: ArmId, pull_index: u64, out: &mut [f64]) {
        sample_feedback(&self.stream, self.distribution(arm), arm, pull_index, out);
    }
}
