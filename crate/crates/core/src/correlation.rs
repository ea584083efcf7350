//! Analytic autocorrelation of the aggregate interference process.
//!
//! The lag-τ correlation factors into three independent product moments:
//! a fading term driven by the Doppler spectrum, a traffic term from the
//! slotted renewal on/off process, and a spatial term from node mobility.
//! All functions here are pure; curves are computed once and cached in a
//! [`CorrelationCurve`] for downstream model fitting.

use crate::bessel::{bessel_j0, J0_FIRST_ROOT};
use crate::{Error, Result};
use std::f64::consts::PI;

/// Network, traffic, and channel parameters shared by the analytic model
/// and the simulator.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Fraction of all nodes starting a new message per slot (0 < μ, μℓ ≤ 1).
    pub mu: f64,
    /// Message length in slots (ℓ ≥ 1).
    pub ell: u32,
    /// Node speed in normalized distance units per slot (ν ≥ 0).
    pub nu: f64,
    /// Path loss exponent (α > 2).
    pub alpha: f64,
    /// Transmit power, linear units (κ > 0).
    pub kappa: f64,
    /// Node density per unit area; used only by the simulator.
    pub lambda: f64,
}

impl SystemParams {
    pub fn new(mu: f64, ell: u32, nu: f64, alpha: f64, kappa: f64, lambda: f64) -> Result<Self> {
        let p = Self { mu, ell, nu, alpha, kappa, lambda };
        p.validate()?;
        Ok(p)
    }

    /// Checks every domain invariant; all other operations assume a valid set.
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(Error::InvalidParameter(format!("mu must be positive, got {}", self.mu)));
        }
        if self.ell < 1 {
            return Err(Error::InvalidParameter("ell must be >= 1".into()));
        }
        let ml = self.mu * self.ell as f64;
        // Expected busy fraction cannot exceed one node-slot per node.
        if ml > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!("mu*ell must be <= 1, got {ml}")));
        }
        // The renewal restart probability needs mu*(ell-1) < 1.
        if self.mu * (self.ell as f64 - 1.0) >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "mu*(ell-1) must be < 1, got {}",
                self.mu * (self.ell as f64 - 1.0)
            )));
        }
        if !(self.nu >= 0.0) || !self.nu.is_finite() {
            return Err(Error::InvalidParameter(format!("nu must be >= 0, got {}", self.nu)));
        }
        if !(self.alpha > 2.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha must be > 2, got {}", self.alpha)));
        }
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(Error::InvalidParameter(format!("kappa must be > 0, got {}", self.kappa)));
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda must be > 0, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// Sampled autocorrelation ρ(τ) over integer lags 0..=T.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationCurve {
    values: Vec<f64>,
}

impl CorrelationCurve {
    /// Wraps a sampled curve. The lag-0 value must be 1 and no magnitude may
    /// exceed 1; both are hard errors since every consumer relies on them.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("correlation curve"));
        }
        if values[0] != 1.0 {
            return Err(Error::InvalidParameter(format!(
                "correlation at lag 0 must be 1, got {}",
                values[0]
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || v.abs() > 1.0) {
            return Err(Error::InvalidParameter(format!("correlation value {v} outside [-1, 1]")));
        }
        Ok(Self { values })
    }

    /// Wraps a reconstructed (model-implied) curve. Lag 0 must still be 1,
    /// but magnitudes may transiently exceed 1: a poorly fitted model can
    /// overshoot before its tail is rejected by the feasibility checks.
    pub fn from_model(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("correlation curve"));
        }
        if values[0] != 1.0 {
            return Err(Error::InvalidParameter(format!(
                "correlation at lag 0 must be 1, got {}",
                values[0]
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("correlation value {v} not finite")));
        }
        Ok(Self { values })
    }

    /// Largest lag T; the curve holds T+1 samples.
    pub fn max_lag(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Keeps every d-th sample: ρ_d(τ) = ρ(d·τ) for τ = 0..=T.
    pub fn decimate(&self, d: usize, t_max: usize) -> Result<Self> {
        if d < 1 {
            return Err(Error::InvalidParameter("decimation factor must be >= 1".into()));
        }
        if self.max_lag() < d * t_max {
            return Err(Error::InvalidParameter(format!(
                "curve covers lag {} but decimation by {d} to T={t_max} needs {}",
                self.max_lag(),
                d * t_max
            )));
        }
        let values = (0..=t_max).map(|t| self.values[d * t]).collect();
        Ok(Self { values })
    }
}

impl std::ops::Index<usize> for CorrelationCurve {
    type Output = f64;
    fn index(&self, tau: usize) -> &f64 {
        &self.values[tau]
    }
}

/// Fading process autocorrelation J₀(2πτν) for isotropic scattering.
pub fn jakes_channel_autocorr(tau: f64, nu: f64) -> f64 {
    bessel_j0(2.0 * PI * tau * nu)
}

/// Squared-envelope product moment E[h²(t)h²(t+τ)] = J₀²(2πτν) + 1.
///
/// At τ=0 this is E[h⁴] = 2 for a unit-power Rayleigh envelope, exactly.
pub fn channel_product_moment(tau: f64, nu: f64) -> f64 {
    let j = jakes_channel_autocorr(tau, nu);
    j * j + 1.0
}

/// Cumulative ln-factorial table; entry k holds ln(k!).
struct LnFactorial(Vec<f64>);

impl LnFactorial {
    fn up_to(n: usize) -> Self {
        let mut t = Vec::with_capacity(n + 1);
        t.push(0.0);
        let mut acc = 0.0;
        for k in 1..=n {
            acc += (k as f64).ln();
            t.push(acc);
        }
        Self(t)
    }

    fn ln_binomial(&self, n: usize, k: usize) -> f64 {
        debug_assert!(k <= n);
        self.0[n] - self.0[k] - self.0[n - k]
    }
}

/// On/off activity product moment E[γ(t)γ(t+τ)] for the slotted renewal
/// traffic process with start fraction μ and fixed message length ℓ.
pub fn traffic_product_moment(tau: usize, mu: f64, ell: u32) -> Result<f64> {
    let table = LnFactorial::up_to(tau + 2);
    traffic_product_moment_with(tau, mu, ell, &table)
}

/// Inner worker sharing one ln-factorial table across a whole curve.
fn traffic_product_moment_with(tau: usize, mu: f64, ell: u32, table: &LnFactorial) -> Result<f64> {
    let l = ell as f64;
    if mu * (l - 1.0) >= 1.0 || mu <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "traffic moment needs 0 < mu and mu*(ell-1) < 1, got mu={mu}, ell={ell}"
        )));
    }
    let tau_f = tau as f64;
    let ell_z = ell as usize;
    // Overlap of the same message covering both slots.
    let direct = (mu * (l - tau_f)).max(0.0);
    // Restart probability after an idle slot, and its complement.
    let p_start = mu / (1.0 - mu * (l - 1.0));
    let beta = 1.0 - p_start;
    let ln_beta = if beta > 0.0 { beta.ln() } else { f64::NEG_INFINITY };
    let ln_pstart = if p_start > 0.0 { p_start.ln() } else { f64::NEG_INFINITY };

    let mut series = 0.0;
    if tau >= 1 {
        let i_max = tau.saturating_sub(1).min(ell_z - 1);
        for i in 0..=i_max {
            let j_max = (tau - i).min(ell_z);
            for j in 1..=j_max {
                let g = tau - i - j;
                for k in 0..=g / ell_z {
                    let rem = g - k * ell_z;
                    // beta^0 is 1 even when beta = 0 (saturated traffic).
                    let ln_term = if rem == 0 {
                        table.ln_binomial(rem + k, k) + k as f64 * ln_pstart
                    } else if beta > 0.0 {
                        table.ln_binomial(rem + k, k)
                            + rem as f64 * ln_beta
                            + k as f64 * ln_pstart
                    } else {
                        continue;
                    };
                    series += ln_term.exp();
                }
            }
        }
    }
    Ok(direct + mu * mu / (1.0 - mu * (l - 1.0)) * series)
}

/// How the spatial mobility ratio is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum SpatialConfig {
    /// Displacements are negligible against node spacing; the ratio is 1.
    Static,
    /// Monte Carlo estimate over an annulus [epsilon, radius] with
    /// `samples` Gaussian displacement draws per lag.
    MonteCarlo { epsilon: f64, radius: f64, samples: usize, seed: u64 },
}

impl Default for SpatialConfig {
    fn default() -> Self {
        SpatialConfig::Static
    }
}

/// Average per-node path gain ratio E[g(x+w_τ)/g(x)] after a lag-τ
/// displacement, estimated by Monte Carlo, in [0, 1].
///
/// The displacement is √τ·ν·ω₀ with ω₀ a standard 2D Gaussian. Positions
/// are sampled uniformly over the annulus [ε, R] (by area); a displaced
/// node contributes (r_d/r)^{-α}, or zero if it leaves the annulus.
/// Averaging per-node ratios rather than a ratio of sample sums keeps
/// the estimate finite-variance: r^{-2α} sample sums are dominated by
/// the rare near-edge draw and do not stabilize at practical sample
/// counts. The raw mean can slightly exceed 1 for large displacements
/// (the ratio is convex in the displacement), so the result is clamped.
pub fn spatial_mobility_factor(
    tau: usize,
    nu: f64,
    alpha: f64,
    config: &SpatialConfig,
) -> Result<f64> {
    match config {
        SpatialConfig::Static => Ok(1.0),
        SpatialConfig::MonteCarlo { epsilon, radius, samples, seed } => {
            if *epsilon <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "annulus inner radius must be positive, got {epsilon}"
                )));
            }
            if *radius <= *epsilon {
                return Err(Error::InvalidParameter(
                    "annulus outer radius must exceed the inner radius".into(),
                ));
            }
            if tau == 0 || nu == 0.0 {
                return Ok(1.0);
            }
            Ok(mc_spatial_ratio(tau, nu, alpha, *epsilon, *radius, *samples, *seed))
        }
    }
}

fn mc_spatial_ratio(
    tau: usize,
    nu: f64,
    alpha: f64,
    eps: f64,
    rmax: f64,
    samples: usize,
    seed: u64,
) -> f64 {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Per-axis displacement deviation after tau slots; the 2/pi factor makes
    // nu the mean displacement per slot, matching the mobility model.
    let sigma = nu * (2.0 * tau as f64 / std::f64::consts::PI).sqrt();
    let n = samples.max(16);
    let mut acc = 0.0;
    for _ in 0..n {
        // Uniform over the annulus area: r^2 uniform on [eps^2, rmax^2].
        // By isotropy the position can be taken as (r, 0).
        let u: f64 = rng.gen();
        let r = (eps * eps + u * (rmax * rmax - eps * eps)).sqrt();
        let dx: f64 = rng.sample::<f64, _>(StandardNormal);
        let dy: f64 = rng.sample::<f64, _>(StandardNormal);
        let rd = ((r + sigma * dx) * (r + sigma * dx) + sigma * dy * sigma * dy).sqrt();
        // Displacements leaving the annulus contribute zero.
        if rd >= eps && rd <= rmax {
            acc += (rd / r).powf(-alpha);
        }
    }
    (acc / n as f64).clamp(0.0, 1.0)
}

/// Full interference autocorrelation: the product of the channel, traffic,
/// and spatial moments normalized so that ρ(0) = 1 exactly.
pub fn interference_autocorr(
    params: &SystemParams,
    t_max: usize,
    spatial: &SpatialConfig,
) -> Result<CorrelationCurve> {
    params.validate()?;
    if t_max < 1 {
        return Err(Error::InvalidParameter("max lag must be >= 1".into()));
    }
    let ml = params.mu * params.ell as f64;
    let table = LnFactorial::up_to(t_max + 2);
    let mut values = Vec::with_capacity(t_max + 1);
    values.push(1.0);
    for tau in 1..=t_max {
        let ch = channel_product_moment(tau as f64, params.nu);
        let tr = traffic_product_moment_with(tau, params.mu, params.ell, &table)?;
        let sp = spatial_mobility_factor(tau, params.nu, params.alpha, spatial)?;
        // Each factor is at most its lag-0 value, so the ratio stays in [0, 1];
        // clamp only the float dust.
        values.push((ch * tr * sp / (ml * 2.0)).clamp(-1.0, 1.0));
    }
    CorrelationCurve::new(values)
}

/// Correlation seen when the fading channel is the only time-varying part:
/// ρ(τ) = J₀²(2πτν).
pub fn channel_only_autocorr(nu: f64, t_max: usize) -> Result<CorrelationCurve> {
    if t_max < 1 {
        return Err(Error::InvalidParameter("max lag must be >= 1".into()));
    }
    let values = (0..=t_max)
        .map(|tau| {
            let j = jakes_channel_autocorr(tau as f64, nu);
            (j * j).clamp(0.0, 1.0)
        })
        .collect();
    CorrelationCurve::new(values)
}

/// Coherence lag: the τ where J₀(2πτν) first reaches zero.
pub fn eta_from_speed(nu: f64) -> Result<f64> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "coherence lag needs nu > 0, got {nu}"
        )));
    }
    Ok(J0_FIRST_ROOT / (2.0 * PI * nu))
}
