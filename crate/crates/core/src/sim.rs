//! Monte Carlo interference trace generator.
//!
//! Each realization places transmitters by a Poisson point process on an
//! origin-centered square (optionally thinned to keep only well-connected
//! nodes), then steps three per-node processes slot by slot: an on/off
//! message renewal process, a Rayleigh fading channel with a Jakes Doppler
//! spectrum, and Brownian motion. The emitted value per slot is the total
//! received power at the origin.
//!
//! Determinism: every realization derives its own stream cipher key from
//! (master seed, realization index), so traces are reproducible bit for
//! bit and independent across indices regardless of evaluation order.

use crate::correlation::SystemParams;
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

/// Number of sinusoids in the fading generator. Gaussian-weighted sums keep
/// the marginal exactly Rayleigh at any count; 32 keeps the residual
/// autocorrelation noise well under the validation tolerances.
pub const FADING_SINUSOIDS: usize = 32;
/// Nodes this close to the origin are re-drawn at placement time.
pub const ORIGIN_EXCLUSION: f64 = 1e-6;
/// Distance floor applied when evaluating the path loss, so a mobile node
/// grazing the origin cannot produce a non-finite power.
const DISTANCE_FLOOR: f64 = 1e-9;

/// Message length law.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LengthMode {
    /// Every message lasts exactly `ell` slots.
    Fixed,
    /// Lengths are Poisson with mean `ell`, re-drawn on zero.
    Poisson,
}

/// Node placement law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlacementMode {
    /// Homogeneous Poisson point process.
    Ppp,
    /// PPP thinned to nodes with at least `min_neighbors` other nodes
    /// within `radius`.
    Thinned { radius: f64, min_neighbors: usize },
}

/// Full description of one simulation experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub params: SystemParams,
    /// Region size in square distance units; the region is an
    /// origin-centered square of side sqrt(area).
    pub area: f64,
    /// Trace length in slots (after warm-up).
    pub horizon: usize,
    pub length_mode: LengthMode,
    pub placement: PlacementMode,
    /// When false, nodes keep their placement positions and only fading
    /// and traffic evolve.
    pub mobile: bool,
    /// Master seed; realization i uses the stream keyed by (seed, i).
    pub seed: u64,
    pub realizations: usize,
}

impl ScenarioConfig {
    /// Standard single-realization template over the default region.
    pub fn new(params: SystemParams) -> Self {
        Self {
            params,
            area: 10_000.0,
            horizon: 1_000,
            length_mode: LengthMode::Fixed,
            placement: PlacementMode::Ppp,
            mobile: true,
            seed: 0,
            realizations: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.area > 0.0) || !self.area.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "area must be positive and finite, got {}",
                self.area
            )));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        if let PlacementMode::Thinned { radius, .. } = self.placement {
            if !(radius > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "thinning radius must be positive, got {radius}"
                )));
            }
        }
        Ok(())
    }

    /// Probability that an eligible node starts a message, chosen so the
    /// aggregate start rate is `mu` per node and slot.
    pub fn start_probability(&self) -> f64 {
        let p = &self.params;
        p.mu / (1.0 - p.mu * (p.ell as f64 - 1.0))
    }
}

/// One realization's output: the interference trace plus the placement
/// geometry sums that trace-level estimators need.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceTrace {
    /// Received power per slot, all finite and nonnegative.
    pub values: Vec<f64>,
    /// The realization's derived seed material (master seed, index).
    pub seed: (u64, u64),
    /// Sum of path gains kappa*r^-alpha over placed nodes.
    pub sum_gain: f64,
    /// Sum of squared path gains.
    pub sum_gain_sq: f64,
}

/// Jakes-spectrum Rayleigh channel: a Gaussian-weighted sum of sinusoids
/// with stratified arrival angles, advanced by one phasor rotation per
/// slot. The marginal of h = sum of phasors is exactly CN(0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct FadingGen {
    /// Phasor values, interleaved (re, im).
    state: Vec<f64>,
    /// Per-slot rotation factors, interleaved (cos, sin).
    rot: Vec<f64>,
}

impl FadingGen {
    /// Draws amplitudes and arrival angles. Angles are a random rotation of
    /// an even grid: each is marginally uniform, so the mean autocorrelation
    /// is an exact Bessel J0, while stratification suppresses its variance.
    pub fn init<R: Rng>(nu: f64, rng: &mut R) -> Self {
        let n = FADING_SINUSOIDS;
        let offset: f64 = rng.gen();
        let scale = 1.0 / (2.0 * n as f64).sqrt();
        let mut state = Vec::with_capacity(2 * n);
        let mut rot = Vec::with_capacity(2 * n);
        for k in 0..n {
            let theta = 2.0 * std::f64::consts::PI * (k as f64 + offset) / n as f64;
            let omega = 2.0 * std::f64::consts::PI * nu * theta.cos();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            state.push(re * scale);
            state.push(im * scale);
            rot.push(omega.cos());
            rot.push(omega.sin());
        }
        Self { state, rot }
    }

    /// Advances one slot: rotates every phasor by its Doppler frequency.
    pub fn step(&mut self) {
        for k in 0..FADING_SINUSOIDS {
            let (re, im) = (self.state[2 * k], self.state[2 * k + 1]);
            let (cr, ci) = (self.rot[2 * k], self.rot[2 * k + 1]);
            self.state[2 * k] = re * cr - im * ci;
            self.state[2 * k + 1] = re * ci + im * cr;
        }
    }

    /// Current complex coefficient.
    pub fn coeff(&self) -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        for k in 0..FADING_SINUSOIDS {
            re += self.state[2 * k];
            im += self.state[2 * k + 1];
        }
        (re, im)
    }

    /// Current channel power h².
    pub fn power(&self) -> f64 {
        let (re, im) = self.coeff();
        re * re + im * im
    }
}

/// Per-node simulation state.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub position: [f64; 2],
    pub fading: FadingGen,
    /// Slots left in the current message, counting the current slot;
    /// 0 means idle and eligible to start.
    pub remaining: u32,
}

/// Draws a homogeneous PPP on the origin-centered square of the given
/// area: Poisson count, then i.i.d. uniform positions. Positions inside
/// the origin exclusion disc are re-drawn.
pub fn sample_ppp<R: Rng>(lambda: f64, area: f64, rng: &mut R) -> Vec<[f64; 2]> {
    assert!(lambda > 0.0 && area > 0.0);
    let count = Poisson::new(lambda * area).expect("valid Poisson mean").sample(rng) as usize;
    let half = area.sqrt() / 2.0;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        loop {
            let x = rng.gen_range(-half..half);
            let y = rng.gen_range(-half..half);
            if x.hypot(y) > ORIGIN_EXCLUSION {
                out.push([x, y]);
                break;
            }
        }
    }
    out
}

/// Counts, for every node, the other nodes within `radius`, using a uniform
/// grid of cell size `radius` so only the 3x3 neighborhood is scanned.
fn neighbor_counts(nodes: &[[f64; 2]], radius: f64) -> Vec<usize> {
    use std::collections::HashMap;
    let inv = 1.0 / radius;
    let cell = |p: &[f64; 2]| ((p[0] * inv).floor() as i64, (p[1] * inv).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in nodes.iter().enumerate() {
        grid.entry(cell(p)).or_default().push(i);
    }
    let r2 = radius * radius;
    let mut counts = vec![0usize; nodes.len()];
    for (i, p) in nodes.iter().enumerate() {
        let (cx, cy) = cell(p);
        let mut n = 0;
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(bucket) = grid.get(&(cx + dx, cy + dy)) {
                    for &j in bucket {
                        if j != i {
                            let ddx = nodes[j][0] - p[0];
                            let ddy = nodes[j][1] - p[1];
                            if ddx * ddx + ddy * ddy <= r2 {
                                n += 1;
                            }
                        }
                    }
                }
            }
        }
        counts[i] = n;
    }
    counts
}

/// Keeps exactly the nodes with at least `min_neighbors` others within
/// `radius`. `min_neighbors` = 0 is the identity.
pub fn thin_inhomogeneous(
    nodes: Vec<[f64; 2]>,
    radius: f64,
    min_neighbors: usize,
) -> Vec<[f64; 2]> {
    assert!(radius > 0.0);
    if min_neighbors == 0 {
        return nodes;
    }
    let counts = neighbor_counts(&nodes, radius);
    nodes
        .into_iter()
        .zip(counts)
        .filter_map(|(p, c)| (c >= min_neighbors).then_some(p))
        .collect()
}

/// One Brownian step: each axis moves by a zero-mean Gaussian with variance
/// nu² · 2/π, so the mean step length is exactly nu.
pub fn step_mobility<R: Rng>(node: &mut NodeState, nu: f64, rng: &mut R) {
    if nu == 0.0 {
        return;
    }
    let sigma = nu * (2.0 / std::f64::consts::PI).sqrt();
    let dx: f64 = rng.sample(StandardNormal);
    let dy: f64 = rng.sample(StandardNormal);
    node.position[0] += sigma * dx;
    node.position[1] += sigma * dy;
}

/// One traffic step: decrement the current message, then let an eligible
/// node start a fresh one. A node whose message ends in slot t can start
/// again in slot t+1.
pub fn step_traffic<R: Rng>(
    node: &mut NodeState,
    p_start: f64,
    ell: u32,
    mode: LengthMode,
    rng: &mut R,
) {
    if node.remaining > 0 {
        node.remaining -= 1;
    }
    if node.remaining == 0 && rng.gen::<f64>() < p_start {
        node.remaining = draw_length(ell, mode, rng);
    }
}

fn draw_length<R: Rng>(ell: u32, mode: LengthMode, rng: &mut R) -> u32 {
    match mode {
        LengthMode::Fixed => ell,
        LengthMode::Poisson => {
            let dist = Poisson::new(ell as f64).expect("valid Poisson mean");
            loop {
                let l = dist.sample(rng);
                if l >= 1.0 {
                    return l as u32;
                }
            }
        }
    }
}

/// Path gain kappa·r^-alpha with a small distance floor.
pub fn path_gain(distance: f64, kappa: f64, alpha: f64) -> f64 {
    kappa * distance.max(DISTANCE_FLOOR).powf(-alpha)
}

/// Total received power at the origin from `(distance, h², transmitting)`
/// contributions.
pub fn measure_interference(
    contributions: impl Iterator<Item = (f64, f64, bool)>,
    kappa: f64,
    alpha: f64,
) -> f64 {
    contributions
        .filter(|&(_, _, tx)| tx)
        .map(|(d, h2, _)| path_gain(d, kappa, alpha) * h2)
        .sum()
}

fn realization_rng(master: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master.to_le_bytes());
    key[8..16].copy_from_slice(&index.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Runs one full realization: placement, thinning, stationary traffic
/// start plus 5ℓ warm-up slots, then `horizon` recorded slots advancing
/// traffic, fading, and (when enabled) mobility.
pub fn run_realization(config: &ScenarioConfig, index: u64) -> Result<InterferenceTrace> {
    config.validate()?;
    let p = &config.params;
    let mut rng = realization_rng(config.seed, index);

    let mut positions = sample_ppp(p.lambda, config.area, &mut rng);
    if let PlacementMode::Thinned { radius, min_neighbors } = config.placement {
        positions = thin_inhomogeneous(positions, radius, min_neighbors);
    }

    let ell = p.ell as u32;
    let p_start = config.start_probability();
    // Stationary traffic start: busy with the mode's duty cycle, residual
    // uniform over a length-biased message. For Poisson lengths the
    // length-biased draw is 1 + Poisson(ell), and the duty cycle uses the
    // zero-truncated mean; a cold start instead would need on the order of
    // 1/mu slots to mix, far more than the warm-up provides.
    let mean_len = match config.length_mode {
        LengthMode::Fixed => p.ell as f64,
        LengthMode::Poisson => {
            let l = p.ell as f64;
            l / (1.0 - (-l).exp())
        }
    };
    let duty = p.mu * mean_len / (p.mu * mean_len + 1.0 - p.mu * p.ell as f64);
    let mut nodes: Vec<NodeState> = positions
        .into_iter()
        .map(|position| {
            let fading = FadingGen::init(p.nu, &mut rng);
            let remaining = if rng.gen::<f64>() < duty {
                let len = match config.length_mode {
                    LengthMode::Fixed => ell,
                    LengthMode::Poisson => {
                        let dist = Poisson::new(p.ell as f64).expect("valid Poisson mean");
                        1 + dist.sample(&mut rng) as u32
                    }
                };
                rng.gen_range(1..=len)
            } else {
                0
            };
            NodeState { position, fading, remaining }
        })
        .collect();

    for _ in 0..5 * p.ell {
        for node in nodes.iter_mut() {
            step_traffic(node, p_start, ell, config.length_mode, &mut rng);
        }
    }

    let mut sum_gain = 0.0;
    let mut sum_gain_sq = 0.0;
    for node in &nodes {
        let g = path_gain(node.position[0].hypot(node.position[1]), p.kappa, p.alpha);
        sum_gain += g;
        sum_gain_sq += g * g;
    }

    let mut values = Vec::with_capacity(config.horizon);
    for _ in 0..config.horizon {
        let mut total = 0.0;
        for node in nodes.iter_mut() {
            step_traffic(node, p_start, ell, config.length_mode, &mut rng);
            node.fading.step();
            if config.mobile {
                step_mobility(node, p.nu, &mut rng);
            }
            if node.remaining > 0 {
                let d = node.position[0].hypot(node.position[1]);
                total += path_gain(d, p.kappa, p.alpha) * node.fading.power();
            }
        }
        debug_assert!(total.is_finite() && total >= 0.0);
        values.push(total);
    }

    Ok(InterferenceTrace {
        values,
        seed: (config.seed, index),
        sum_gain,
        sum_gain_sq,
    })
}
