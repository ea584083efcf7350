//! Steady-state Kalman prediction on a companion-form ARMA realization.
//!
//! The fitted model is mapped once to a state space, the Riccati recursion
//! is iterated offline until the error covariance settles, and the online
//! predictor is then a fixed-gain filter: one O(p²) state update per slot
//! plus an O(p²·Δ) extrapolation per prediction. Raw interference powers
//! are standardized against exponentially weighted running moments before
//! they enter the filter, since the source model is zero-mean.

use crate::arma::{ArmaModel, STATIONARITY_MARGIN};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Convergence tolerance on the max-norm covariance delta.
pub const GAIN_TOL: f64 = 1e-10;
/// Iteration cap of the offline Riccati recursion.
pub const GAIN_MAX_ITER: usize = 10_000;
/// Half-life, in slots, of the exponentially weighted observation moments.
pub const MEAN_HALF_LIFE: f64 = 200.0;
/// The first observations seed the moments cumulatively before the
/// exponential weighting takes over.
pub const SEED_OBSERVATIONS: u64 = 50;
/// Variance floor keeping the standardization defined on constant streams.
const VAR_FLOOR: f64 = 1e-12;

/// Companion-form realization of a stationary ARMA model: the state keeps
/// the last n all-pole outputs, the output row reads the MA combination.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    /// n×n transition matrix: negated AR coefficients on the first row,
    /// ones on the subdiagonal.
    pub a: DMatrix<f64>,
    /// n×1 input column mapping the innovation into the newest state.
    pub b: DVector<f64>,
    /// 1×n output row carrying b₀..b_q (stored as a column).
    pub c: DVector<f64>,
}

impl StateSpaceModel {
    /// State dimension n = max(p, q+1).
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Largest eigenvalue magnitude of the transition matrix.
    pub fn spectral_radius(&self) -> f64 {
        self.a.complex_eigenvalues().iter().map(|e| e.norm()).fold(0.0, f64::max)
    }
}

/// Builds the companion realization. The state dimension is max(p, q+1):
/// pure-MA and q = p models embed by zero-padding the AR row, which leaves
/// the transfer function unchanged. The impulse response of (A, B, C) with
/// a unit direct term equals the model's difference-equation response.
pub fn to_state_space(model: &ArmaModel) -> Result<StateSpaceModel> {
    let radius = model.ar_spectral_radius();
    if radius >= 1.0 / (1.0 + STATIONARITY_MARGIN) {
        return Err(Error::UnstableModel(radius));
    }
    let n = model.p().max(model.q() + 1);
    let mut a = DMatrix::<f64>::zeros(n, n);
    for (j, coeff) in model.ar.iter().enumerate() {
        a[(0, j)] = -coeff;
    }
    for i in 1..n {
        a[(i, i - 1)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[0] = 1.0;
    let mut c = DVector::<f64>::zeros(n);
    c[0] = 1.0;
    for (j, coeff) in model.ma.iter().enumerate() {
        c[j + 1] = *coeff;
    }
    Ok(StateSpaceModel { a, b, c })
}

/// Iterates the covariance recursion from P = B·Bᵀ (measurement update
/// with a unit innovation-noise term, then time update) until the
/// max-norm delta drops below `tol`. Returns the combined one-step gain
/// K = (A·P·C + B)/(C·P·C + 1) and the converged covariance, so that
/// x(t+1) = A·x(t) + K·(z(t) − C·x(t)) reproduces both updates.
pub fn steady_state_gain(
    ss: &StateSpaceModel,
    tol: f64,
    max_iter: usize,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let (a, b, c) = (&ss.a, &ss.b, &ss.c);
    let bbt = b * b.transpose();
    let mut p = bbt.clone();
    let mut delta = f64::INFINITY;
    for _ in 0..max_iter {
        let pc = &p * c;
        let s = (c.dot(&pc)) + 1.0;
        // P⁺ = (I − M·C)·P with M = P·C/s, then P' = A·P⁺·Aᵀ + B·Bᵀ.
        let posterior = &p - (&pc * pc.transpose()) / s;
        let next = a * posterior * a.transpose() + &bbt;
        delta = (&next - &p).amax();
        p = next;
        if delta < tol {
            let pc = &p * c;
            let s = c.dot(&pc) + 1.0;
            let k = (a * pc + b) / s;
            return Ok((k, p));
        }
    }
    Err(Error::GainNoConvergence { iterations: max_iter, last_delta: delta })
}

/// Exponentially weighted mean and variance of the observation stream,
/// seeded cumulatively from the first observations.
#[derive(Debug, Clone, PartialEq)]
struct RunningStats {
    mean: f64,
    var: f64,
    sum: f64,
    sum_sq: f64,
    count: u64,
    weight: f64,
}

impl RunningStats {
    fn new() -> Self {
        Self {
            mean: 0.0,
            var: VAR_FLOOR,
            sum: 0.0,
            sum_sq: 0.0,
            count: 0,
            weight: 1.0 - 0.5f64.powf(1.0 / MEAN_HALF_LIFE),
        }
    }

    fn update(&mut self, x: f64) {
        self.count += 1;
        if self.count <= SEED_OBSERVATIONS {
            self.sum += x;
            self.sum_sq += x * x;
            let n = self.count as f64;
            self.mean = self.sum / n;
            self.var = (self.sum_sq / n - self.mean * self.mean).max(VAR_FLOOR);
        } else {
            let w = self.weight;
            self.mean = (1.0 - w) * self.mean + w * x;
            self.var = ((1.0 - w) * self.var + w * (x - self.mean).powi(2)).max(VAR_FLOOR);
        }
    }

    fn std(&self) -> f64 {
        self.var.sqrt()
    }
}

/// Fixed-gain Δ-step predictor of a nonnegative power sequence.
#[derive(Debug, Clone)]
pub struct SteadyStatePredictor {
    ss: StateSpaceModel,
    gain: DVector<f64>,
    x: DVector<f64>,
    stats: RunningStats,
    n_obs: u64,
}

impl SteadyStatePredictor {
    /// Realizes the model and solves for the steady-state gain with the
    /// default tolerance and iteration cap.
    pub fn new(model: &ArmaModel) -> Result<Self> {
        let ss = to_state_space(model)?;
        let (gain, _) = steady_state_gain(&ss, GAIN_TOL, GAIN_MAX_ITER)?;
        Ok(Self::from_parts(ss, gain))
    }

    /// Assembles a predictor from an already-solved gain.
    pub fn from_parts(ss: StateSpaceModel, gain: DVector<f64>) -> Self {
        let n = ss.dim();
        Self { ss, gain, x: DVector::zeros(n), stats: RunningStats::new(), n_obs: 0 }
    }

    /// Consumes one interference observation: refreshes the running
    /// moments, standardizes, and advances the state by the fixed-gain
    /// recursion. A non-finite or negative observation is rejected and
    /// leaves the state untouched.
    pub fn update(&mut self, observation: f64) -> Result<()> {
        if !observation.is_finite() || observation < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "observation must be a nonnegative power, got {observation}"
            )));
        }
        self.stats.update(observation);
        let z = (observation - self.stats.mean) / self.stats.std();
        let innovation = z - self.ss.c.dot(&self.x);
        self.x = &self.ss.a * &self.x + &self.gain * innovation;
        self.n_obs += 1;
        Ok(())
    }

    /// Extrapolates Δ ≥ 1 slots ahead: C·A^(Δ−1)·x(t+1), de-standardized
    /// and clamped at zero. Repeated multiplication keeps the cost at
    /// O(p²·Δ) with no decompositions.
    pub fn predict(&self, delta: usize) -> f64 {
        assert!(delta >= 1, "prediction horizon must be >= 1");
        let mut v = self.x.clone();
        for _ in 1..delta {
            v = &self.ss.a * v;
        }
        let z_hat = self.ss.c.dot(&v);
        (z_hat * self.stats.std() + self.stats.mean).max(0.0)
    }

    /// Observations consumed so far.
    pub fn observations(&self) -> u64 {
        self.n_obs
    }

    /// Current running mean of the raw observations; the Δ→∞ prediction
    /// limit.
    pub fn running_mean(&self) -> f64 {
        self.stats.mean
    }

    /// Current running standard deviation of the raw observations.
    pub fn running_std(&self) -> f64 {
        self.stats.std()
    }

    /// Current state estimate (standardized domain).
    pub fn state(&self) -> &DVector<f64> {
        &self.x
    }

    /// Spectral radius of the closed loop A − K·C; < 1 for a usable gain.
    pub fn closed_loop_radius(&self) -> f64 {
        let m = &self.ss.a - &self.gain * self.ss.c.transpose();
        m.complex_eigenvalues().iter().map(|e| e.norm()).fold(0.0, f64::max)
    }
}

/// Impulse response of the model's difference equation: g(0) = 1,
/// g(m) = b_m − Σ_n a_n·g(m−n). The state-space realization must match
/// term for term with its unit direct feedthrough.
pub fn impulse_response(model: &ArmaModel, terms: usize) -> Vec<f64> {
    let mut g = Vec::with_capacity(terms);
    for m in 0..terms {
        let mut v = if m == 0 {
            1.0
        } else if m <= model.q() {
            model.ma[m - 1]
        } else {
            0.0
        };
        for (n, a) in model.ar.iter().enumerate() {
            if m > n {
                v -= a * g[m - n - 1];
            }
        }
        g.push(v);
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ar1(phi: f64) -> ArmaModel {
        ArmaModel::new(vec![-phi], vec![], 1.0).unwrap()
    }

    // ---- state space construction ----

    #[test]
    fn scalar_companion_form() {
        let ss = to_state_space(&ar1(0.9)).unwrap();
        assert_eq!(ss.dim(), 1);
        assert_abs_diff_eq!(ss.a[(0, 0)], 0.9);
        assert_abs_diff_eq!(ss.b[0], 1.0);
        assert_abs_diff_eq!(ss.c[0], 1.0);
    }

    #[test]
    fn impulse_response_matches_difference_equation() {
        let m = ArmaModel::new(vec![-0.9, 0.2], vec![0.4], 1.0).unwrap();
        let ss = to_state_space(&m).unwrap();
        let g = impulse_response(&m, 7);
        assert_abs_diff_eq!(g[0], 1.0);
        // h(m) = C·A^m·B term by term, h(0) = C·B = 1.
        let mut v = ss.b.clone();
        for gm in &g {
            assert_abs_diff_eq!(ss.c.dot(&v), *gm, epsilon = 1e-10);
            v = &ss.a * v;
        }
    }

    #[test]
    fn pure_ma_embeds_with_padded_state() {
        let m = ArmaModel::new(vec![], vec![0.5, 0.25], 1.0).unwrap();
        let ss = to_state_space(&m).unwrap();
        assert_eq!(ss.dim(), 3);
        let g = impulse_response(&m, 8);
        let mut v = ss.b.clone();
        for gm in &g {
            assert_abs_diff_eq!(ss.c.dot(&v), *gm, epsilon = 1e-12);
            v = &ss.a * v;
        }
        // The MA response truncates after q terms.
        assert_eq!(&g[3..], &[0.0; 5]);
    }

    #[test]
    fn equal_orders_embed_with_padded_state() {
        let m = ArmaModel::new(vec![-0.7, 0.1], vec![0.3, 0.2], 1.0).unwrap();
        let ss = to_state_space(&m).unwrap();
        assert_eq!(ss.dim(), 3);
    }

    #[test]
    fn rejects_unstable_model() {
        let m = ArmaModel { ar: vec![-1.2], ma: vec![], sigma2: 1.0 };
        assert!(matches!(to_state_space(&m), Err(Error::UnstableModel(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn impulse_response_equivalence(
            ks in prop::collection::vec(-0.85f64..0.85, 1..=5),
            ms in prop::collection::vec(-0.85f64..0.85, 0..=5),
        ) {
            fn poly(ks: &[f64]) -> Vec<f64> {
                let mut a: Vec<f64> = Vec::new();
                for &k in ks {
                    let prev = a.clone();
                    a.push(0.0);
                    let m = a.len();
                    for i in 0..m {
                        let mirror = if i == m - 1 { 1.0 } else { prev[m - 2 - i] };
                        a[i] = if i == m - 1 { 0.0 } else { prev[i] } + k * mirror;
                    }
                }
                a
            }
            let p = ks.len();
            let q = ms.len().min(p);
            let model = ArmaModel::new(poly(&ks), poly(&ms[..q]), 1.0).unwrap();
            let ss = to_state_space(&model).unwrap();
            let g = impulse_response(&model, 3 * p + 1);
            let mut v = ss.b.clone();
            for gm in &g {
                prop_assert!((ss.c.dot(&v) - gm).abs() < 1e-8);
                v = &ss.a * v;
            }
        }
    }

    // ---- steady-state gain ----

    #[test]
    fn scalar_riccati_fixed_point() {
        // p <- 0.81 p/(p+1) + 1 has the positive root of p^2 - 0.81 p - 1.
        let ss = to_state_space(&ar1(0.9)).unwrap();
        let (k, p) = steady_state_gain(&ss, GAIN_TOL, GAIN_MAX_ITER).unwrap();
        let p_star = (0.81 + (0.81f64 * 0.81 + 4.0).sqrt()) / 2.0;
        assert_abs_diff_eq!(p[(0, 0)], p_star, epsilon = 1e-8);
        assert_abs_diff_eq!(k[0], (0.9 * p_star + 1.0) / (p_star + 1.0), epsilon = 1e-8);
    }

    #[test]
    fn memoryless_system_covariance_is_one() {
        let m = ArmaModel::new(vec![0.0], vec![], 1.0).unwrap();
        let ss = to_state_space(&m).unwrap();
        let (k, p) = steady_state_gain(&ss, GAIN_TOL, GAIN_MAX_ITER).unwrap();
        assert_abs_diff_eq!(p[(0, 0)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(k[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn gain_iteration_reports_non_convergence() {
        let ss = to_state_space(&ar1(0.9)).unwrap();
        match steady_state_gain(&ss, 1e-14, 2) {
            Err(Error::GainNoConvergence { iterations: 2, last_delta }) => {
                assert!(last_delta > 1e-14);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn closed_loop_is_stable() {
        for phi in [0.5, 0.9, 0.99] {
            let pred = SteadyStatePredictor::new(&ar1(phi)).unwrap();
            assert!(pred.closed_loop_radius() < 1.0, "phi={phi}");
        }
        let m = ArmaModel::new(vec![-1.2, 0.4], vec![0.3, 0.1], 1.0).unwrap();
        let pred = SteadyStatePredictor::new(&m).unwrap();
        assert!(pred.closed_loop_radius() < 1.0);
    }

    // ---- online prediction ----

    #[test]
    fn rejects_bad_observations() {
        let mut pred = SteadyStatePredictor::new(&ar1(0.5)).unwrap();
        pred.update(1.0).unwrap();
        let x = pred.state().clone();
        assert!(pred.update(f64::NAN).is_err());
        assert!(pred.update(f64::INFINITY).is_err());
        assert!(pred.update(-1.0).is_err());
        assert_eq!(pred.state(), &x);
        assert_eq!(pred.observations(), 1);
    }

    #[test]
    fn first_observation_has_zero_innovation() {
        // The cumulative seed pins the mean to the first sample, so its
        // z-score is 0 and the state stays at A·0 = 0.
        let mut pred = SteadyStatePredictor::new(&ar1(0.5)).unwrap();
        pred.update(7.0).unwrap();
        assert!(pred.state().amax() == 0.0);
    }

    #[test]
    fn hand_computed_two_step_state() {
        let model = ar1(0.5);
        let ss = to_state_space(&model).unwrap();
        let (k, _) = steady_state_gain(&ss, GAIN_TOL, GAIN_MAX_ITER).unwrap();
        let mut pred = SteadyStatePredictor::new(&model).unwrap();
        pred.update(2.0).unwrap();
        pred.update(3.0).unwrap();
        // After [2, 3]: mean 2.5, var 0.25, z = 1; the first update left
        // x = 0, so the innovation is 1 and x = K.
        assert_abs_diff_eq!(pred.state()[0], k[0], epsilon = 1e-15);
        assert_abs_diff_eq!(pred.running_mean(), 2.5, epsilon = 1e-15);
        assert_abs_diff_eq!(pred.predict(1), k[0] * 0.5 + 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(pred.predict(2), 0.5 * k[0] * 0.5 + 2.5, epsilon = 1e-12);
    }

    #[test]
    fn one_step_prediction_is_output_of_state() {
        let mut pred = SteadyStatePredictor::new(&ar1(0.8)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            pred.update(rng.gen::<f64>() * 2.0).unwrap();
        }
        let manual =
            (pred.ss.c.dot(pred.state()) * pred.running_std() + pred.running_mean()).max(0.0);
        assert_eq!(pred.predict(1), manual);
    }

    #[test]
    fn constant_stream_converges_to_constant() {
        let mut pred = SteadyStatePredictor::new(&ar1(0.9)).unwrap();
        for _ in 0..500 {
            pred.update(4.2).unwrap();
        }
        for delta in [1, 5, 20] {
            assert!((pred.predict(delta) - 4.2).abs() < 1e-3 * 4.2, "delta={delta}");
        }
    }

    #[test]
    fn white_stream_long_horizon_approaches_mean() {
        let mut pred = SteadyStatePredictor::new(&ar1(0.6)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20_000 {
            pred.update(rng.gen::<f64>() * 2.0).unwrap();
        }
        // Uniform[0, 2]: mean 1. Three standard errors at the effective
        // window of the exponential weighting (~289 samples).
        assert!((pred.predict(10) - 1.0).abs() < 0.1);
    }

    #[test]
    fn infinite_horizon_is_running_mean() {
        let mut pred = SteadyStatePredictor::new(&ar1(0.9)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..400 {
            pred.update(rng.gen::<f64>() + 0.5).unwrap();
        }
        assert_abs_diff_eq!(pred.predict(10_000), pred.running_mean(), epsilon = 1e-9);
    }

    #[test]
    fn predictions_are_deterministic() {
        let run = || {
            let mut pred = SteadyStatePredictor::new(&ar1(0.7)).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            let mut out = Vec::new();
            for _ in 0..200 {
                pred.update(rng.gen::<f64>() * 3.0).unwrap();
                out.push(pred.predict(4));
            }
            out
        };
        let (a, b) = (run(), run());
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn predictions_clamp_at_zero() {
        let mut pred = SteadyStatePredictor::new(&ar1(0.95)).unwrap();
        // A crashing trend drives the standardized forecast negative.
        for i in 0..200 {
            pred.update((200.0 - i as f64).max(0.0)).unwrap();
        }
        for _ in 0..50 {
            pred.update(0.0).unwrap();
        }
        assert!(pred.predict(1) >= 0.0);
        assert!(pred.predict(8) >= 0.0);
    }
}
