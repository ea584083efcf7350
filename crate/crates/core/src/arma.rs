//! ARMA approximation of a sampled autocorrelation curve.
//!
//! The pipeline mirrors the classic two-stage closed-form fit: the AR
//! coefficients come from a Yule-Walker system over lags shifted past the
//! MA order, the MA part from a spectral factorization of the residual
//! autocovariance (Wilson's Newton iteration). Order selection scans the
//! whole (p, q) grid, keeps pairs whose reconstructed curve stays bounded,
//! and picks the lowest order meeting the target error.

use crate::correlation::CorrelationCurve;
use crate::{Error, Result};
use nalgebra::{Complex, DMatrix, DVector};

/// AR roots must clear the unit circle by this relative margin.
pub const STATIONARITY_MARGIN: f64 = 1e-6;
/// Perfect reconstructions are reported at this floor instead of -inf dB.
pub const MSE_FLOOR_DB: f64 = -150.0;
/// Default convergence tolerance of the MA factorization, on the residual
/// of the normalized (psi(0) = 1) system.
pub const WILSON_TOL: f64 = 1e-10;
/// Default iteration cap of the MA factorization.
pub const WILSON_MAX_ITER: usize = 200;
/// Yule-Walker systems with a larger condition estimate are infeasible.
const YW_COND_LIMIT: f64 = 1e12;
/// Relative residual gate on the solved Yule-Walker system.
const YW_RESIDUAL_LIMIT: f64 = 1e-9;
/// A reconstructed tail drifting further than this from the long-lag level
/// of the target curve marks the pair divergent.
const TAIL_DEVIATION_LIMIT: f64 = 0.5;

/// Causal ARMA(p, q) model with implicit unit leading coefficients:
/// the AR polynomial is 1 + a₁z + … + a_p z^p and the MA polynomial
/// 1 + b₁z + … + b_q z^q, driven by white noise of variance `sigma2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmaModel {
    /// a₁..a_p.
    pub ar: Vec<f64>,
    /// b₁..b_q.
    pub ma: Vec<f64>,
    /// Innovation variance σ²_ε > 0.
    pub sigma2: f64,
}

impl ArmaModel {
    /// Builds a model and enforces stationarity and a positive innovation
    /// variance. The stationarity margin is shared with order selection so
    /// every emitted model round-trips through this constructor.
    pub fn new(ar: Vec<f64>, ma: Vec<f64>, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "innovation variance must be positive, got {sigma2}"
            )));
        }
        if ar.iter().chain(ma.iter()).any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite ARMA coefficient".into()));
        }
        let m = Self { ar, ma, sigma2 };
        let radius = m.ar_spectral_radius();
        if radius >= 1.0 / (1.0 + STATIONARITY_MARGIN) {
            return Err(Error::UnstableModel(radius));
        }
        Ok(m)
    }

    pub fn p(&self) -> usize {
        self.ar.len()
    }

    pub fn q(&self) -> usize {
        self.ma.len()
    }

    /// Largest |1/z| over AR polynomial roots z; stationary iff < 1.
    pub fn ar_spectral_radius(&self) -> f64 {
        companion_spectral_radius(&self.ar)
    }
}

/// Spectral radius of the companion matrix of 1 + c₁z + … + c_k z^k,
/// equal to the largest reciprocal root magnitude. Zero for k = 0.
fn companion_spectral_radius(coeffs: &[f64]) -> f64 {
    // Trailing zero coefficients only lower the effective degree.
    let k = coeffs.iter().rposition(|c| *c != 0.0).map_or(0, |i| i + 1);
    if k == 0 {
        return 0.0;
    }
    let mut m = DMatrix::<f64>::zeros(k, k);
    for (j, c) in coeffs[..k].iter().enumerate() {
        m[(0, j)] = -c;
    }
    for i in 1..k {
        m[(i, i - 1)] = 1.0;
    }
    m.complex_eigenvalues().iter().map(|e| e.norm()).fold(0.0, f64::max)
}

/// Roots of 1 + c₁z + … + c_k z^k, via the companion matrix of the
/// reversed polynomial (eigenvalues are the reciprocal roots).
fn poly_roots(coeffs: &[f64]) -> Vec<Complex<f64>> {
    let k = coeffs.iter().rposition(|c| *c != 0.0).map_or(0, |i| i + 1);
    if k == 0 {
        return Vec::new();
    }
    let mut m = DMatrix::<f64>::zeros(k, k);
    for (j, c) in coeffs[..k].iter().enumerate() {
        m[(0, j)] = -c;
    }
    for i in 1..k {
        m[(i, i - 1)] = 1.0;
    }
    m.complex_eigenvalues().iter().map(|w| Complex::new(1.0, 0.0) / w).collect()
}

/// Expands Π_k (1 - z/z_k) into real coefficients c₁..c_k (c₀ = 1 implied).
/// Fails when the imaginary parts do not cancel, i.e. the root set is not
/// closed under conjugation.
fn poly_from_roots(roots: &[Complex<f64>]) -> std::result::Result<Vec<f64>, f64> {
    let mut coeffs = vec![Complex::new(1.0, 0.0)];
    for z in roots {
        let w = -Complex::new(1.0, 0.0) / z;
        coeffs.push(Complex::new(0.0, 0.0));
        for i in (1..coeffs.len()).rev() {
            let prev = coeffs[i - 1];
            coeffs[i] += prev * w;
        }
    }
    let imag = coeffs.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    let scale = coeffs.iter().map(|c| c.re.abs()).fold(1.0, f64::max);
    if imag > 1e-8 * scale {
        return Err(imag);
    }
    Ok(coeffs[1..].iter().map(|c| c.re).collect())
}

/// Solves the shifted Yule-Walker system for a₁..a_p: row i requires
/// Σ_n a_n ρ(q+i-n) = -ρ(q+i), with ρ(-τ) = ρ(τ).
///
/// The solve is a plain LU factorization; backward stability keeps the
/// relative residual near machine precision whenever the system is
/// meaningfully solvable, so feasibility is gated on the residual plus an
/// SVD condition estimate rather than on pivot magnitudes.
pub fn solve_yule_walker(rho: &CorrelationCurve, p: usize, q: usize) -> Result<Vec<f64>> {
    if rho.max_lag() < p + q {
        return Err(Error::InvalidParameter(format!(
            "curve covers lag {} but the (p={p}, q={q}) system needs {}",
            rho.max_lag(),
            p + q
        )));
    }
    if p == 0 {
        return Ok(Vec::new());
    }
    let r = rho.values();
    let mut m = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DVector::<f64>::zeros(p);
    for i in 1..=p {
        for n in 1..=p {
            m[(i - 1, n - 1)] = r[(q + i).abs_diff(n)];
        }
        rhs[i - 1] = -r[q + i];
    }
    let cond = {
        let sv = m.clone().singular_values();
        let (smax, smin) = (sv.max(), sv.min());
        if smin <= 0.0 {
            f64::INFINITY
        } else {
            smax / smin
        }
    };
    if !cond.is_finite() || cond > YW_COND_LIMIT {
        return Err(Error::IllConditioned(cond));
    }
    let a = m
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or(Error::IllConditioned(cond))?;
    let residual = (&m * &a - &rhs).norm();
    let denom = rhs.norm().max(f64::MIN_POSITIVE);
    if !(residual / denom <= YW_RESIDUAL_LIMIT) {
        return Err(Error::IllConditioned(cond));
    }
    Ok(a.iter().copied().collect())
}

/// Autocovariance of the AR-filtered curve: ψ(τ) = Σ_m Σ_n a_m a_n ρ(τ+n-m)
/// for τ = 0..=q, with a₀ = 1 implied and ρ(-τ) = ρ(τ).
pub fn compute_psi(rho: &CorrelationCurve, ar: &[f64], q: usize) -> Vec<f64> {
    let p = ar.len();
    assert!(rho.max_lag() >= p + q, "curve too short for psi at q={q}");
    let r = rho.values();
    let coeff = |i: usize| if i == 0 { 1.0 } else { ar[i - 1] };
    (0..=q)
        .map(|tau| {
            let mut s = 0.0;
            for m in 0..=p {
                for n in 0..=p {
                    s += coeff(m) * coeff(n) * r[(tau + n).abs_diff(m)];
                }
            }
            s
        })
        .collect()
}

/// Spectral factorization ψ(τ) = σ²·Σ_n b_n b_{n+τ} with b₀ = 1, returning
/// (b₁..b_q, σ²). The iteration is Wilson's damped Newton method on the
/// normalized sequence ψ/ψ(0); the minimum-phase factor is the one it
/// converges to from the white-noise start.
pub fn solve_ma_wilson(psi: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, f64)> {
    if psi.is_empty() {
        return Err(Error::EmptyInput("psi sequence"));
    }
    let scale = psi[0];
    if !(scale > 0.0) || psi.iter().any(|v| !v.is_finite()) {
        return Err(Error::IndefinitePsi(scale));
    }
    let q = psi.len() - 1;
    if q == 0 {
        return Ok((Vec::new(), scale));
    }
    let ps: Vec<f64> = psi.iter().map(|v| v / scale).collect();
    // A valid MA(q) autocovariance has a nonnegative spectral density
    // psi(0) + 2 sum psi(k) cos(k w); reject clearly indefinite inputs
    // before iterating toward a factorization that cannot exist.
    let fmin = (0..1024)
        .map(|i| {
            let w = std::f64::consts::PI * i as f64 / 1023.0;
            ps[0] + 2.0 * (1..=q).map(|k| ps[k] * (k as f64 * w).cos()).sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    if fmin < -1e-10 {
        return Err(Error::IndefinitePsi(fmin));
    }

    // c holds the unnormalized factor: psi_hat(tau) = sum c_j c_{j+tau}.
    let mut c = DVector::<f64>::zeros(q + 1);
    c[0] = 1.0;
    let resid = |c: &DVector<f64>| -> DVector<f64> {
        DVector::from_iterator(
            q + 1,
            (0..=q).map(|tau| ps[tau] - (0..=q - tau).map(|j| c[j] * c[j + tau]).sum::<f64>()),
        )
    };
    let mut r = resid(&c);
    let mut iter = 0;
    loop {
        if r.amax() < tol {
            break;
        }
        if iter >= max_iter {
            return Err(Error::MaNoConvergence(max_iter));
        }
        iter += 1;
        let mut jac = DMatrix::<f64>::zeros(q + 1, q + 1);
        for tau in 0..=q {
            for j in 0..=q {
                let mut v = 0.0;
                if j + tau <= q {
                    v += c[j + tau];
                }
                if j >= tau {
                    v += c[j - tau];
                }
                jac[(tau, j)] = v;
            }
        }
        let step =
            jac.lu().solve(&r).ok_or(Error::MaNoConvergence(iter))?;
        // Halve the step while it fails to reduce the residual; the raw
        // Newton step overshoots on near-degenerate spectra.
        let mut lam = 1.0;
        let (mut cn, mut rn);
        loop {
            cn = &c + lam * &step;
            rn = resid(&cn);
            if rn.amax() < r.amax() || rn.amax() < tol || lam < 1e-9 {
                break;
            }
            lam *= 0.5;
        }
        c = cn;
        r = rn;
    }
    if c[0] == 0.0 {
        return Err(Error::MaNoConvergence(iter));
    }
    // Normalize b0 = 1 at convergence and restore the original scale.
    let sigma2 = c[0] * c[0] * scale;
    let b: Vec<f64> = (1..=q).map(|j| c[j] / c[0]).collect();
    Ok((b, sigma2))
}

/// Autocorrelation implied by the model over lags 0..=T, normalized to 1
/// at lag 0. Cross-covariances δ(0..q) seed a symmetric linear system for
/// the first p+1 autocovariances; beyond q the pure AR recursion extends
/// the curve.
pub fn model_autocorr(model: &ArmaModel, t_max: usize) -> Result<CorrelationCurve> {
    let radius = model.ar_spectral_radius();
    if radius >= 1.0 / (1.0 + STATIONARITY_MARGIN) {
        return Err(Error::UnstableModel(radius));
    }
    let q = model.q();
    // Padding zero AR coefficients up to the MA order leaves the model
    // unchanged but closes the initial-value system below.
    let p = model.p().max(q);
    let a = |n: usize| {
        if n == 0 {
            1.0
        } else if n <= model.p() {
            model.ar[n - 1]
        } else {
            0.0
        }
    };
    let b = |n: usize| {
        if n == 0 {
            1.0
        } else if n <= q {
            model.ma[n - 1]
        } else {
            0.0
        }
    };
    // delta(tau) = E[i(t) eps(t-tau)]: the noise-to-output cross moments.
    let mut delta = vec![0.0; q + 1];
    for tau in 0..=q {
        let mut s = b(tau) * model.sigma2;
        for n in 1..=tau.min(p) {
            s -= a(n) * delta[tau - n];
        }
        delta[tau] = s;
    }
    let rhs = |tau: usize| -> f64 { (tau..=q).map(|n| b(n) * delta[n - tau]).sum() };
    // Equations tau = 0..=p in the unknowns c(0..=p), folding c(|tau-n|).
    let mut g = DMatrix::<f64>::zeros(p + 1, p + 1);
    let mut y = DVector::<f64>::zeros(p + 1);
    for tau in 0..=p {
        for n in 0..=p {
            g[(tau, tau.abs_diff(n))] += a(n);
        }
        y[tau] = rhs(tau);
    }
    let head = g
        .lu()
        .solve(&y)
        .ok_or(Error::UnstableModel(radius))?;
    let mut c = vec![0.0; t_max + 1];
    for tau in 0..=p.min(t_max) {
        c[tau] = head[tau];
    }
    for tau in p + 1..=t_max {
        let mut s = rhs(tau);
        for n in 1..=p {
            s -= a(n) * c[tau - n];
        }
        c[tau] = s;
    }
    let c0 = c[0];
    if !(c0 > 0.0) || !c0.is_finite() {
        return Err(Error::UnstableModel(radius));
    }
    for v in &mut c {
        *v /= c0;
    }
    c[0] = 1.0;
    CorrelationCurve::from_model(c)
}

/// Mean square deviation over lags 1..=T in dB, floored at -150.
pub fn approximation_mse(rho: &CorrelationCurve, rho_hat: &CorrelationCurve, t: usize) -> f64 {
    assert!(t >= 1 && rho.max_lag() >= t && rho_hat.max_lag() >= t, "curves must cover 1..=T");
    let (r, h) = (rho.values(), rho_hat.values());
    let mse: f64 = (1..=t).map(|tau| (r[tau] - h[tau]).powi(2)).sum::<f64>() / t as f64;
    if mse > 0.0 {
        (10.0 * mse.log10()).max(MSE_FLOOR_DB)
    } else {
        MSE_FLOOR_DB
    }
}

/// Outcome of an order-selection scan over the (p, q) grid.
#[derive(Debug, Clone)]
pub struct FitReport {
    /// Reconstruction error in dB for feasible pairs; `grid[p-1][q]`,
    /// q running 0..=p. `None` marks an infeasible pair.
    pub mse_grid: Vec<Vec<Option<f64>>>,
    /// Chosen (p, q).
    pub selected: (usize, usize),
    /// MSE of the chosen pair in dB.
    pub selected_mse_db: f64,
    /// Threshold the selection aimed for.
    pub target_db: f64,
    /// Pairs rejected by the feasibility gates (divergent tail, failed
    /// factorization, unstable or ill-conditioned system).
    pub infeasible: Vec<(usize, usize)>,
    /// Set when no feasible pair met the target and the minimum-MSE pair
    /// was returned instead.
    pub missed_target: bool,
}

impl FitReport {
    /// Rows of (p, q, mse_db) for every feasible pair, in grid order.
    pub fn feasible_cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.mse_grid.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter_map(move |(q, m)| m.map(|db| (i + 1, q, db)))
        })
    }
}

/// Fits every pair 1 ≤ p ≤ p_max, 0 ≤ q ≤ p and returns the minimal-p
/// (then minimal-q) model meeting `target_db`, together with the full
/// error grid. Pairs are infeasible when any stage fails or when the
/// reconstructed curve drifts more than 0.5 from the target's long-lag
/// level over lags T..2T. If nothing meets the target, the best feasible
/// pair is returned with `missed_target` set; with no feasible pair at
/// all the scan fails.
pub fn select_order(
    rho: &CorrelationCurve,
    p_max: usize,
    target_db: f64,
    t: usize,
) -> Result<(FitReport, ArmaModel)> {
    if p_max < 1 {
        return Err(Error::InvalidParameter("p_max must be >= 1".into()));
    }
    if rho.max_lag() < (2 * p_max).max(t) {
        return Err(Error::InvalidParameter(format!(
            "curve covers lag {} but selection needs {}",
            rho.max_lag(),
            (2 * p_max).max(t)
        )));
    }
    let floor = rho.values()[t];
    let mut grid: Vec<Vec<Option<f64>>> = (1..=p_max).map(|p| vec![None; p + 1]).collect();
    let mut infeasible = Vec::new();
    let mut best: Option<(usize, usize, f64)> = None;
    let mut best_any: Option<(usize, usize, f64)> = None;
    for p in 1..=p_max {
        for q in 0..=p {
            let fit = fit_pair(rho, p, q, t, floor);
            match fit {
                Ok(mse) => {
                    grid[p - 1][q] = Some(mse);
                    if best_any.is_none_or(|(_, _, m)| mse < m) {
                        best_any = Some((p, q, mse));
                    }
                    if mse <= target_db && best.is_none() {
                        best = Some((p, q, mse));
                    }
                }
                Err(_) => infeasible.push((p, q)),
            }
        }
    }
    let (selected, missed_target) = match (best, best_any) {
        (Some(b), _) => (b, false),
        (None, Some(b)) => (b, true),
        (None, None) => return Err(Error::NoFeasibleFit),
    };
    let (p, q, mse) = selected;
    let model = fit_model(rho, p, q)?;
    Ok((
        FitReport {
            mse_grid: grid,
            selected: (p, q),
            selected_mse_db: mse,
            target_db,
            infeasible,
            missed_target,
        },
        model,
    ))
}

/// Fits a model of fixed orders to the curve: AR part from the shifted
/// linear system, MA part by spectral factorization of the residual.
pub fn fit_model(rho: &CorrelationCurve, p: usize, q: usize) -> Result<ArmaModel> {
    let ar = solve_yule_walker(rho, p, q)?;
    let psi = compute_psi(rho, &ar, q);
    let (ma, sigma2) = solve_ma_wilson(&psi, WILSON_TOL, WILSON_MAX_ITER)?;
    ArmaModel::new(ar, ma, sigma2)
}

/// Full feasibility pipeline for one pair; Ok carries the MSE in dB.
fn fit_pair(rho: &CorrelationCurve, p: usize, q: usize, t: usize, floor: f64) -> Result<f64> {
    let model = fit_model(rho, p, q)?;
    let rho_hat = model_autocorr(&model, 2 * t)?;
    let h = rho_hat.values();
    let drift = (t..=2 * t).map(|tau| (h[tau] - floor).abs()).fold(0.0, f64::max);
    if drift > TAIL_DEVIATION_LIMIT {
        return Err(Error::NoFeasibleFit);
    }
    Ok(approximation_mse(rho, &rho_hat, t))
}

/// Keeps every d-th sample of the curve, covering as many lags as the
/// input allows: the output has max_lag / d samples past lag zero.
pub fn decimate_correlation(rho: &CorrelationCurve, d: usize) -> Result<CorrelationCurve> {
    if d < 1 {
        return Err(Error::InvalidParameter("decimation factor must be >= 1".into()));
    }
    rho.decimate(d, rho.max_lag() / d)
}

/// Number of lags (including lag 0) before the curve settles onto its
/// long-lag level: one past the last lag with |ρ(τ) - floor| > 0.01.
pub fn significant_lag_count(rho: &CorrelationCurve, floor: f64) -> usize {
    let last = rho
        .values()
        .iter()
        .rposition(|v| (v - floor).abs() > 0.01);
    last.map_or(1, |l| l + 1).max(1)
}

/// Decimation factor compressing the significant lags to at most 100.
pub fn decimation_factor(rho: &CorrelationCurve, floor: f64) -> usize {
    significant_lag_count(rho, floor).div_ceil(100)
}

/// Retimes a model fitted on a d-decimated curve back to the original
/// slot base by mapping every AR and MA root z to |z|^(1/d)·e^(i·arg(z)/d).
/// Fails with the imaginary residual when the mapped roots cannot form
/// real polynomials again (an unpaired negative real root).
pub fn rescale_model(model: &ArmaModel, d: usize) -> Result<ArmaModel> {
    if d < 1 {
        return Err(Error::InvalidParameter("rescale factor must be >= 1".into()));
    }
    if d == 1 {
        return Ok(model.clone());
    }
    let map = |roots: Vec<Complex<f64>>| -> Vec<Complex<f64>> {
        roots
            .into_iter()
            .map(|z| Complex::from_polar(z.norm().powf(1.0 / d as f64), z.arg() / d as f64))
            .collect()
    };
    let ar = poly_from_roots(&map(poly_roots(&model.ar))).map_err(Error::RescaleFailed)?;
    let ma = poly_from_roots(&map(poly_roots(&model.ma))).map_err(Error::RescaleFailed)?;
    // sigma2 carries over: the normalized autocorrelation and the filter
    // gain depend only on the coefficient polynomials.
    ArmaModel::new(ar, ma, model.sigma2)
}
