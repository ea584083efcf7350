//! Experiment harness: builds predictors from scenario parameters alone,
//! scores them against trace baselines over Monte Carlo realizations, and
//! aggregates normalized mean square errors.
//!
//! Aggregation note: the headline NMSE is the equal-weight mean over
//! realizations of per-realization error ratios. Per-realization
//! normalization is what makes averaging across realizations meaningful
//! under a singular path loss law, where a single close-by node can carry
//! orders of magnitude more power than the rest of the ensemble combined;
//! the power-weighted pooled ratio is also reported, and coincides with
//! the mean when all realizations hold equal power.

use crate::arma::{select_order, ArmaModel, FitReport};
use crate::correlation::{
    channel_only_autocorr, interference_autocorr, CorrelationCurve, SpatialConfig, SystemParams,
};
use crate::kalman::SteadyStatePredictor;
use crate::sim::{run_realization, LengthMode, PlacementMode, ScenarioConfig};
use crate::{Error, Result};
use rayon::prelude::*;
use std::io::Write as _;
use std::path::Path;

/// Slots discarded at the head of every trace before errors are scored,
/// letting the running standardization settle.
pub const EVAL_BURN_SLOTS: usize = 100;
/// Lower clamp when converting error ratios to dB.
pub const NMSE_FLOOR_DB: f64 = -150.0;
/// Model curves decimate once their significant span exceeds this.
pub const DECIMATION_SPAN: usize = 100;

/// The four predictor families an evaluation run compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PredictorKind {
    /// Recursive filter designed from the full interference correlation.
    Interference,
    /// Same filter pipeline, designed from the fading correlation only.
    ChannelOnly,
    /// Repeats the newest observation.
    LastValue,
    /// Causal running mean of the trace so far.
    MeanValue,
}

impl PredictorKind {
    pub const ALL: [PredictorKind; 4] = [
        PredictorKind::Interference,
        PredictorKind::ChannelOnly,
        PredictorKind::LastValue,
        PredictorKind::MeanValue,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            PredictorKind::Interference => "interference",
            PredictorKind::ChannelOnly => "channel_only",
            PredictorKind::LastValue => "last_value",
            PredictorKind::MeanValue => "mean_value",
        }
    }
}

/// Per-realization error ratio: sum of squared errors over sum of squared
/// true values.
pub fn nmse_ratio(truth: &[f64], predicted: &[f64]) -> Result<f64> {
    if truth.len() != predicted.len() || truth.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "nmse needs equal nonempty sequences, got {} and {}",
            truth.len(),
            predicted.len()
        )));
    }
    let den: f64 = truth.iter().map(|v| v * v).sum();
    if den <= 0.0 {
        return Err(Error::InvalidParameter(
            "nmse is undefined for an all-zero true sequence".into(),
        ));
    }
    let num: f64 = truth.iter().zip(predicted).map(|(t, p)| (t - p) * (t - p)).sum();
    Ok(num / den)
}

/// Ratio to decibels, clamped at the floor.
pub fn to_db(ratio: f64) -> f64 {
    10.0 * ratio.max(0.0).log10().max(NMSE_FLOOR_DB / 10.0)
}

/// Baseline prediction series for one horizon: element j of each vector
/// predicts `values[j + delta]`. Last-value repeats the newest sample;
/// mean-value carries the causal running mean.
pub fn run_baselines(values: &[f64], delta: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(values.len() > delta, "trace shorter than the horizon");
    let n = values.len() - delta;
    let last = values[..n].to_vec();
    let mut mean = Vec::with_capacity(n);
    let mut cum = 0.0;
    for (t, v) in values[..n].iter().enumerate() {
        cum += v;
        mean.push(cum / (t + 1) as f64);
    }
    (last, mean)
}

/// Histogram of per-realization NMSE in dB over fixed 2 dB bins spanning
/// [-40, 20), with open-ended bins at both ends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    pub counts: Vec<u64>,
}

impl Histogram {
    pub const LO_DB: f64 = -40.0;
    pub const HI_DB: f64 = 20.0;
    pub const STEP_DB: f64 = 2.0;
    const INNER: usize = ((Self::HI_DB - Self::LO_DB) / Self::STEP_DB) as usize;

    pub fn new() -> Self {
        Self { counts: vec![0; Self::INNER + 2] }
    }

    pub fn add(&mut self, db: f64) {
        let idx = if db < Self::LO_DB {
            0
        } else if db >= Self::HI_DB {
            Self::INNER + 1
        } else {
            1 + ((db - Self::LO_DB) / Self::STEP_DB) as usize
        };
        self.counts[idx] += 1;
    }

    /// Bin bounds in dB; the end bins are open.
    pub fn bounds(&self, idx: usize) -> (f64, f64) {
        if idx == 0 {
            (f64::NEG_INFINITY, Self::LO_DB)
        } else if idx == Self::INNER + 1 {
            (Self::HI_DB, f64::INFINITY)
        } else {
            let lo = Self::LO_DB + (idx - 1) as f64 * Self::STEP_DB;
            (lo, lo + Self::STEP_DB)
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

impl Default for Histogram {
    fn default() -> Self {
        Self::new()
    }
}

/// One (predictor, horizon) cell of an evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalCell {
    pub predictor: PredictorKind,
    pub delta: usize,
    /// Equal-weight mean over realizations of per-realization ratios, dB.
    pub nmse_db: f64,
    /// Power-weighted aggregate (summed numerators over summed
    /// denominators), dB.
    pub pooled_db: f64,
    pub histogram: Histogram,
}

/// Fit diagnostics of a model-based predictor.
#[derive(Debug, Clone)]
pub struct FitRecord {
    pub predictor: PredictorKind,
    pub report: FitReport,
    /// Time-base decimation the online filter runs at (1 = every slot).
    pub decimation: usize,
}

/// Complete outcome of one scenario evaluation.
#[derive(Debug, Clone)]
pub struct EvaluationResult {
    pub scenario: String,
    pub realizations: usize,
    pub cells: Vec<EvalCell>,
    pub fits: Vec<FitRecord>,
    /// Wall-clock seconds; not part of any emitted artifact.
    pub elapsed_s: f64,
}

/// Order-selection settings shared by every model-based predictor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitSettings {
    pub p_max: usize,
    /// MSE evaluation window in (possibly decimated) lags.
    pub window: usize,
    pub target_db: f64,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self { p_max: 20, window: 100, target_db: -30.0 }
    }
}

/// A predictor parametrized offline from scenario parameters only.
#[derive(Debug, Clone)]
pub struct BuiltPredictor {
    pub kind: PredictorKind,
    /// Fresh filter state to clone per realization; None for baselines.
    template: Option<SteadyStatePredictor>,
    pub model: Option<ArmaModel>,
    pub report: Option<FitReport>,
    /// Slots per filter step; phase-interleaved copies cover every slot.
    pub decimation: usize,
}

/// Longest analytic curve the design phase will compute while hunting
/// for the point where the correlation settles onto its floor.
const MAX_PROBE_LAG: usize = 20_000;

/// Produces the design curve at whatever length the decimation choice
/// requires, together with its long-lag floor. The curve is extended by
/// doubling until its significant span fits inside it, so the span (and
/// hence the decimation factor) is never read off a truncated curve.
fn design_curve(
    params: &SystemParams,
    kind: PredictorKind,
) -> Result<(CorrelationCurve, f64, usize)> {
    let make = |len: usize| -> Result<CorrelationCurve> {
        match kind {
            PredictorKind::Interference => {
                interference_autocorr(params, len, &SpatialConfig::Static)
            }
            // The fading power correlation decays to zero, so the same
            // fitting pipeline applies with a zero long-lag floor.
            PredictorKind::ChannelOnly => channel_only_autocorr(params.nu, len),
            _ => unreachable!("baselines have no design curve"),
        }
    };
    let floor = match kind {
        PredictorKind::Interference => params.mu * params.ell as f64 / 2.0,
        _ => 0.0,
    };
    // An oscillating curve can dip under the significance threshold right
    // at the probe edge while still carrying energy past it, so the probe
    // grows until the last significant lag sits well inside the curve.
    let mut len = 3 * DECIMATION_SPAN;
    let mut curve = make(len)?;
    while crate::arma::significant_lag_count(&curve, floor) > len * 4 / 5 && len < MAX_PROBE_LAG {
        len = (len * 2).min(MAX_PROBE_LAG);
        curve = make(len)?;
    }
    let d = crate::arma::decimation_factor(&curve, floor);
    if d > 1 && len < DECIMATION_SPAN * d {
        curve = make(DECIMATION_SPAN * d)?;
    }
    Ok((curve, floor, d))
}

/// Designs one predictor from the analytic correlation alone. Trace data
/// never enters: the signature has nowhere to accept it.
pub fn build_predictor(
    kind: PredictorKind,
    params: &SystemParams,
    settings: &FitSettings,
) -> Result<BuiltPredictor> {
    match kind {
        PredictorKind::LastValue | PredictorKind::MeanValue => Ok(BuiltPredictor {
            kind,
            template: None,
            model: None,
            report: None,
            decimation: 1,
        }),
        _ => {
            let (curve, _floor, d) = design_curve(params, kind)?;
            let fit_curve = if d > 1 {
                curve.decimate(d, curve.max_lag() / d)?
            } else {
                curve
            };
            let (report, model) =
                select_order(&fit_curve, settings.p_max, settings.target_db, settings.window)?;
            // A decimated design tries to map back to the slot rate; when
            // the root mapping fails the filter runs phase-interleaved on
            // the decimated base instead.
            let (model, decimation) = if d > 1 {
                match crate::arma::rescale_model(&model, d) {
                    Ok(m) => (m, 1),
                    Err(_) => (model, d),
                }
            } else {
                (model, 1)
            };
            let template = SteadyStatePredictor::new(&model)?;
            Ok(BuiltPredictor {
                kind,
                template: Some(template),
                model: Some(model),
                report: Some(report),
                decimation,
            })
        }
    }
}

/// Per-realization accumulation for one predictor across all horizons.
fn score_realization(
    built: &BuiltPredictor,
    values: &[f64],
    deltas: &[usize],
) -> Result<Vec<(f64, f64)>> {
    let t_len = values.len();
    let burn = EVAL_BURN_SLOTS;
    let mut acc = vec![(0.0, 0.0); deltas.len()];
    match built.kind {
        PredictorKind::LastValue => {
            for (di, &delta) in deltas.iter().enumerate() {
                for t in burn..t_len.saturating_sub(delta) {
                    let e = values[t + delta] - values[t];
                    acc[di].0 += e * e;
                    acc[di].1 += values[t + delta] * values[t + delta];
                }
            }
        }
        PredictorKind::MeanValue => {
            let mut cum = 0.0;
            for t in 0..t_len {
                cum += values[t];
                if t < burn {
                    continue;
                }
                let rm = cum / (t + 1) as f64;
                for (di, &delta) in deltas.iter().enumerate() {
                    if t + delta < t_len {
                        let e = values[t + delta] - rm;
                        acc[di].0 += e * e;
                        acc[di].1 += values[t + delta] * values[t + delta];
                    }
                }
            }
        }
        _ => {
            let template = built.template.as_ref().expect("model predictor has a template");
            let d = built.decimation;
            // One filter copy per phase of the decimated time base; each
            // copy sees every d-th observation.
            let mut phases: Vec<SteadyStatePredictor> = (0..d).map(|_| template.clone()).collect();
            for t in 0..t_len {
                phases[t % d].update(values[t])?;
                if t < burn {
                    continue;
                }
                for (di, &delta) in deltas.iter().enumerate() {
                    let s = t + delta;
                    if s >= t_len {
                        continue;
                    }
                    // The phase owning slot s was last updated at u <= t;
                    // s - u is a whole number of filter steps.
                    let q = s % d;
                    let u = t - ((t + d - q) % d);
                    let k = (s - u) / d;
                    let pred = phases[q].predict(k);
                    let e = values[s] - pred;
                    acc[di].0 += e * e;
                    acc[di].1 += values[s] * values[s];
                }
            }
        }
    }
    Ok(acc)
}

/// Evaluates the given predictor kinds on one scenario. Predictors are
/// designed first, from parameters alone; traces are then generated and
/// scored in parallel, and aggregated in realization order.
pub fn evaluate_scenario(
    name: &str,
    config: &ScenarioConfig,
    kinds: &[PredictorKind],
    deltas: &[usize],
) -> Result<EvaluationResult> {
    evaluate_scenario_with(name, config, kinds, deltas, &FitSettings::default())
}

pub fn evaluate_scenario_with(
    name: &str,
    config: &ScenarioConfig,
    kinds: &[PredictorKind],
    deltas: &[usize],
    settings: &FitSettings,
) -> Result<EvaluationResult> {
    let started = std::time::Instant::now();
    config.validate()?;
    if deltas.is_empty() || kinds.is_empty() {
        return Err(Error::InvalidParameter("need at least one kind and one horizon".into()));
    }
    let max_delta = *deltas.iter().max().unwrap();
    if config.horizon <= EVAL_BURN_SLOTS + max_delta {
        return Err(Error::InvalidParameter(format!(
            "horizon {} leaves no scoring window past burn-in {} and horizon {}",
            config.horizon, EVAL_BURN_SLOTS, max_delta
        )));
    }

    // Design phase: no trace exists yet.
    let built: Vec<BuiltPredictor> = kinds
        .iter()
        .map(|&k| build_predictor(k, &config.params, settings))
        .collect::<Result<_>>()?;

    // Measurement phase.
    let per_real: Vec<Vec<(f64, f64)>> = (0..config.realizations as u64)
        .into_par_iter()
        .map(|idx| {
            let trace = run_realization(config, idx)?;
            let mut cells = Vec::with_capacity(built.len() * deltas.len());
            for b in &built {
                cells.extend(score_realization(b, &trace.values, deltas)?);
            }
            Ok(cells)
        })
        .collect::<Result<_>>()?;

    let mut cells = Vec::with_capacity(built.len() * deltas.len());
    for (bi, b) in built.iter().enumerate() {
        for (di, &delta) in deltas.iter().enumerate() {
            let slot = bi * deltas.len() + di;
            let mut ratio_sum = 0.0;
            let mut num_sum = 0.0;
            let mut den_sum = 0.0;
            let mut histogram = Histogram::new();
            for real in &per_real {
                let (num, den) = real[slot];
                if den <= 0.0 {
                    return Err(Error::InvalidParameter(
                        "nmse is undefined for an all-zero true sequence".into(),
                    ));
                }
                ratio_sum += num / den;
                num_sum += num;
                den_sum += den;
                histogram.add(to_db(num / den));
            }
            let r = config.realizations as f64;
            cells.push(EvalCell {
                predictor: b.kind,
                delta,
                nmse_db: to_db(ratio_sum / r),
                pooled_db: to_db(num_sum / den_sum),
                histogram,
            });
        }
    }
    let fits = built
        .iter()
        .filter_map(|b| {
            b.report.as_ref().map(|r| FitRecord {
                predictor: b.kind,
                report: r.clone(),
                decimation: b.decimation,
            })
        })
        .collect();
    Ok(EvaluationResult {
        scenario: name.to_string(),
        realizations: config.realizations,
        cells,
        fits,
        elapsed_s: started.elapsed().as_secs_f64(),
    })
}

// ---- empirical correlation ----

/// Uncentered model-form correlation estimated from simulated traces:
/// the lagged product mean of each trace, with the cross-node product
/// offset removed and the per-node second moment normalized out, then
/// averaged with equal weight over realizations.
///
/// For trace I_t = Σ_i g_i x_{i,t} with i.i.d. per-node activity x of
/// duty cycle b: E[I_t I_{t+τ}] = Σg²·E[x x_τ] + ((Σg)² − Σg²)·b², so the
/// normalized per-node moment E[x x_τ]/E[x²] is recovered per trace.
pub fn empirical_autocorr(config: &ScenarioConfig, lags: &[usize]) -> Result<Vec<f64>> {
    config.validate()?;
    let max_lag = lags.iter().copied().max().unwrap_or(0);
    if config.horizon <= max_lag {
        return Err(Error::InvalidParameter(format!(
            "horizon {} cannot estimate lag {max_lag}",
            config.horizon
        )));
    }
    let duty = config.params.mu * config.params.ell as f64;
    let per_real: Vec<Vec<f64>> = (0..config.realizations as u64)
        .into_par_iter()
        .map(|idx| {
            let trace = run_realization(config, idx)?;
            let v = &trace.values;
            let cross = duty * duty * (trace.sum_gain * trace.sum_gain - trace.sum_gain_sq);
            let den = 2.0 * duty * trace.sum_gain_sq;
            if den <= 0.0 {
                return Err(Error::InvalidParameter(
                    "realization carries no nodes to estimate from".into(),
                ));
            }
            Ok(lags
                .iter()
                .map(|&tau| {
                    let n = v.len() - tau;
                    let prod: f64 =
                        v[..n].iter().zip(&v[tau..]).map(|(a, b)| a * b).sum::<f64>() / n as f64;
                    (prod - cross) / den
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(mean_rows(&per_real))
}

/// Centered sample autocorrelation (biased normalization), averaged with
/// equal weight over realizations.
///
/// The fading generator has a finite line spectrum, so a single trajectory
/// is not ergodic in fourth moments: with n sinusoids the per-trace power
/// correlation converges to (rho - 1/n) / (1 - 1/n), not rho. The centered
/// estimator inherits that deficit; the de-crossed product estimator above
/// does not, because its normalizer is geometric rather than per-trace.
pub fn empirical_pearson_autocorr(config: &ScenarioConfig, lags: &[usize]) -> Result<Vec<f64>> {
    config.validate()?;
    let max_lag = lags.iter().copied().max().unwrap_or(0);
    if config.horizon <= max_lag {
        return Err(Error::InvalidParameter(format!(
            "horizon {} cannot estimate lag {max_lag}",
            config.horizon
        )));
    }
    let per_real: Vec<Vec<f64>> = (0..config.realizations as u64)
        .into_par_iter()
        .map(|idx| {
            let trace = run_realization(config, idx)?;
            let v = &trace.values;
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let var: f64 = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
            if var <= 0.0 {
                return Err(Error::InvalidParameter(
                    "constant trace has no correlation structure".into(),
                ));
            }
            Ok(lags
                .iter()
                .map(|&tau| {
                    let n = v.len() - tau;
                    let cov: f64 = v[..n]
                        .iter()
                        .zip(&v[tau..])
                        .map(|(a, b)| (a - mean) * (b - mean))
                        .sum();
                    cov / var
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(mean_rows(&per_real))
}

fn mean_rows(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len() as f64;
    let width = rows.first().map_or(0, Vec::len);
    (0..width).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect()
}

// ---- technology scenarios ----

/// Speed of light in m/s, for the Doppler conversion.
const LIGHT_SPEED: f64 = 3.0e8;

/// One technology row: radio parameters and the derived slot-rate scales.
#[derive(Debug, Clone, PartialEq)]
pub struct TechScenario {
    pub name: &'static str,
    pub carrier_hz: f64,
    pub speed_mps: f64,
    pub slot_s: f64,
    /// Doppler shift normalized to the slot rate.
    pub doppler_normalized: f64,
    /// Channel coherence lag in slots.
    pub eta: f64,
    pub mu: f64,
    pub ell: u32,
}

/// Doppler shift of a reflected path, normalized to the slot rate:
/// (2 v / c) · f_c · slot.
pub fn doppler_normalized(speed_mps: f64, carrier_hz: f64, slot_s: f64) -> f64 {
    assert!(speed_mps > 0.0 && carrier_hz > 0.0 && slot_s > 0.0);
    2.0 * speed_mps / LIGHT_SPEED * carrier_hz * slot_s
}

/// The four published technology rows. The coherence column drives the
/// effective fading speed; message length is 20 slots throughout.
pub fn build_tech_scenario(name: &str) -> Result<TechScenario> {
    let (canon, carrier_hz, speed_mps, slot_s, eta) = match name.to_ascii_lowercase().as_str() {
        "lte1" => ("lte1", 2.0e9, 6.0 / 3.6, 1.0e-3, 225.0),
        "lte2" => ("lte2", 2.0e9, 40.0 / 3.6, 1.0e-3, 35.0),
        "lte3" => ("lte3", 2.0e9, 80.0 / 3.6, 1.0e-3, 17.0),
        "wsn" => ("wsn", 2.4e9, 6.0 / 3.6, 4.6e-3, 50.0),
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown technology scenario '{other}'"
            )))
        }
    };
    Ok(TechScenario {
        name: canon,
        carrier_hz,
        speed_mps,
        slot_s,
        doppler_normalized: doppler_normalized(speed_mps, carrier_hz, slot_s),
        eta,
        mu: 0.01,
        ell: 20,
    })
}

impl TechScenario {
    /// Effective per-slot fading speed placing the first coherence zero at
    /// lag eta.
    pub fn effective_speed(&self) -> f64 {
        crate::bessel::J0_FIRST_ROOT / (2.0 * std::f64::consts::PI * self.eta)
    }

    /// System parameters over the standard region.
    pub fn system_params(&self) -> Result<SystemParams> {
        SystemParams::new(self.mu, self.ell, self.effective_speed(), 3.0, 1.0, 0.01)
    }
}

// ---- presets ----

/// One named experiment: a scenario plus what to evaluate on it.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub name: String,
    pub config: ScenarioConfig,
    pub kinds: Vec<PredictorKind>,
    pub deltas: Vec<usize>,
}

pub const PRESET_NAMES: [&str; 10] = [
    "setup1",
    "setup2",
    "setup3",
    "msglen-sweep",
    "thinning",
    "poisson-len",
    "lte1",
    "lte2",
    "lte3",
    "wsn",
];

fn example_setup(nu: f64) -> Result<SystemParams> {
    SystemParams::new(0.01, 10, nu, 3.0, 1.0, 0.01)
}

pub fn setup_speed(index: usize) -> f64 {
    [0.0077, 0.0191, 0.0765][index - 1]
}

fn base_config(params: SystemParams, seed: u64, realizations: usize) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::new(params);
    cfg.seed = seed;
    cfg.realizations = realizations;
    // Evaluation presets freeze node positions: with a singular path gain
    // a walker can wander arbitrarily close to the receiver, which makes
    // the interference moments diverge and drowns every aggregate in a
    // handful of blow-up realizations. Time variation enters through
    // fading and traffic.
    cfg.mobile = false;
    cfg
}

/// Expands a preset name into the experiments it runs. `full_scale`
/// switches from desk-scale realization counts to the published scale.
pub fn preset(name: &str, seed: u64, full_scale: bool) -> Result<Vec<ScenarioSpec>> {
    let scale = |desk: usize, full: usize| if full_scale { full } else { desk };
    let deltas: Vec<usize> = (1..=12).collect();
    match name.to_ascii_lowercase().as_str() {
        "setup1" | "setup2" | "setup3" => {
            let idx: usize = name[5..].parse().expect("digit suffix");
            let params = example_setup(setup_speed(idx))?;
            Ok(vec![ScenarioSpec {
                name: name.to_string(),
                config: base_config(params, seed, scale(1_000, 10_000)),
                kinds: PredictorKind::ALL.to_vec(),
                deltas,
            }])
        }
        "msglen-sweep" => {
            let mut out = Vec::new();
            for ell in [10u32, 50, 100] {
                let params = SystemParams::new(0.01, ell, 0.0077, 3.0, 1.0, 0.01)?;
                out.push(ScenarioSpec {
                    name: format!("msglen-{ell}"),
                    config: base_config(params, seed, scale(1_000, 10_000)),
                    kinds: PredictorKind::ALL.to_vec(),
                    deltas: deltas.clone(),
                });
            }
            Ok(out)
        }
        "thinning" => {
            let mut out = Vec::new();
            for (tag, placement) in [
                ("thinning-ppp", PlacementMode::Ppp),
                ("thinning-k20", PlacementMode::Thinned { radius: 40.0, min_neighbors: 20 }),
                ("thinning-k30", PlacementMode::Thinned { radius: 40.0, min_neighbors: 30 }),
            ] {
                let params = example_setup(0.0077)?;
                let mut config = base_config(params, seed, scale(200, 2_000));
                config.area = 200_000.0;
                config.horizon = 600;
                config.placement = placement;
                out.push(ScenarioSpec {
                    name: tag.to_string(),
                    config,
                    kinds: vec![PredictorKind::Interference],
                    deltas: (1..=5).collect(),
                });
            }
            Ok(out)
        }
        "poisson-len" => {
            let mut out = Vec::new();
            for ell in [10u32, 100] {
                for (tag, mode) in [("fixed", LengthMode::Fixed), ("poisson", LengthMode::Poisson)]
                {
                    let params = SystemParams::new(0.01, ell, 0.0077, 3.0, 1.0, 0.01)?;
                    let mut config = base_config(params, seed, scale(500, 5_000));
                    config.length_mode = mode;
                    out.push(ScenarioSpec {
                        name: format!("poisson-len-{tag}-{ell}"),
                        config,
                        kinds: vec![PredictorKind::Interference],
                        deltas: (1..=5).collect(),
                    });
                }
            }
            Ok(out)
        }
        "lte1" | "lte2" | "lte3" | "wsn" => {
            let tech = build_tech_scenario(name)?;
            let params = tech.system_params()?;
            Ok(vec![ScenarioSpec {
                name: tech.name.to_string(),
                config: base_config(params, seed, scale(500, 5_000)),
                kinds: PredictorKind::ALL.to_vec(),
                deltas: (1..=8).collect(),
            }])
        }
        other => Err(Error::InvalidParameter(format!("unknown preset '{other}'"))),
    }
}

// ---- CSV emission ----

fn write_file(path: &Path, content: &str) -> Result<()> {
    let mut f = std::fs::File::create(path)
        .map_err(|e| Error::Parse(format!("cannot create {}: {e}", path.display())))?;
    f.write_all(content.as_bytes())
        .map_err(|e| Error::Parse(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

/// Main results table: one row per (scenario, predictor, horizon).
pub fn write_nmse_csv(results: &[EvaluationResult], path: &Path) -> Result<()> {
    let mut s = String::from("scenario,predictor,delta,nmse_db,realizations\n");
    for r in results {
        for c in &r.cells {
            s.push_str(&format!(
                "{},{},{},{:.6},{}\n",
                r.scenario,
                c.predictor.label(),
                c.delta,
                c.nmse_db,
                r.realizations
            ));
        }
    }
    write_file(path, &s)
}

/// Fit diagnostics: the full order-selection error grid per model.
pub fn write_heatmap_csv(results: &[EvaluationResult], path: &Path) -> Result<()> {
    let mut s = String::from("scenario,predictor,p,q,mse_db,selected\n");
    for r in results {
        for f in &r.fits {
            for (p, q, db) in f.report.feasible_cells() {
                let sel = (p, q) == f.report.selected;
                s.push_str(&format!(
                    "{},{},{},{},{:.6},{}\n",
                    r.scenario,
                    f.predictor.label(),
                    p,
                    q,
                    db,
                    sel as u8
                ));
            }
        }
    }
    write_file(path, &s)
}

/// Per-realization NMSE distribution, one row per occupied bin.
pub fn write_histogram_csv(results: &[EvaluationResult], path: &Path) -> Result<()> {
    let mut s = String::from("scenario,predictor,delta,bin_lo_db,bin_hi_db,count\n");
    for r in results {
        for c in &r.cells {
            for (idx, &count) in c.histogram.counts.iter().enumerate() {
                if count == 0 {
                    continue;
                }
                let (lo, hi) = c.histogram.bounds(idx);
                s.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.scenario,
                    c.predictor.label(),
                    c.delta,
                    fmt_bound(lo),
                    fmt_bound(hi),
                    count
                ));
            }
        }
    }
    write_file(path, &s)
}

fn fmt_bound(v: f64) -> String {
    if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else if v == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{v:.1}")
    }
}

/// Analytic correlation curve table for one parameter set.
pub fn write_correlation_csv(curve: &CorrelationCurve, path: &Path) -> Result<()> {
    let mut s = String::from("lag,correlation\n");
    for (tau, v) in curve.values().iter().enumerate() {
        s.push_str(&format!("{tau},{v:.9}\n"));
    }
    write_file(path, &s)
}
