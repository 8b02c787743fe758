//! Imperfect-CSI-aware weighted-MMSE beamforming with per-subcarrier
//! water-filling, plus the regularized zero-forcing baseline.
//!
//! The solver runs block-coordinate descent on the weighted-MSE surrogate of
//! the downlink sum rate. One outer iteration, per subcarrier:
//!
//! 1. re-split the total budget across subcarriers by water-filling on the
//!    rate profiles induced by the current (normalized) beams,
//! 2. update each user's scalar MMSE equalizer `e` and MSE weight
//!    `lambda = 1/eps`,
//! 3. refresh the beams with the closed-form solve
//!    `f_k = A_k^{-1} conj(e_k) lambda_k h_k`, where
//!    `A_k = (sigma^2/p) sum_m w_m I + sum_{m!=k} w_m R_e + sum_m w_m h_m h_m^H`
//!    and `w_m = lambda_m |e_m|^2`, then project onto the per-subcarrier
//!    power budget.
//!
//! All statistics run on the *estimated* channel plus the error covariance
//! `R_e`; a zero covariance recovers the estimate-trusting variant. The MSE
//! model splits into `eps1` (estimate-visible part) and `eps2` (the
//! inter-user power leaked through the estimation error), and the achieved
//! rate obeys `rate = -log2(eps) = log2(1 + sinr)`.

use num_complex::Complex64;

use crate::channel::ChannelTensor;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::tensor::{dot_h, hermitian_solve, CMat};

/// Beamforming matrices for every subcarrier (each N_t x K, column per user).
#[derive(Clone, Debug, PartialEq)]
pub struct Beamformer {
    antennas: usize,
    users: usize,
    per_sub: Vec<CMat>,
}

impl Beamformer {
    pub fn new(per_sub: Vec<CMat>) -> Result<Self> {
        let Some(first) = per_sub.first() else {
            return Err(Error::Dimension("beamformer needs at least one subcarrier".into()));
        };
        let (antennas, users) = (first.rows(), first.cols());
        if per_sub
            .iter()
            .any(|m| m.rows() != antennas || m.cols() != users)
        {
            return Err(Error::Dimension(
                "all per-subcarrier beamforming matrices must share one shape".into(),
            ));
        }
        Ok(Self {
            antennas,
            users,
            per_sub,
        })
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn subcarriers(&self) -> usize {
        self.per_sub.len()
    }

    pub fn at(&self, n: usize) -> &CMat {
        &self.per_sub[n]
    }

    pub fn matrices(&self) -> &[CMat] {
        &self.per_sub
    }

    /// Transmit power spent on subcarrier `n`.
    pub fn power_at(&self, n: usize) -> f64 {
        self.per_sub[n].frob_norm_sq()
    }

    pub fn total_power(&self) -> f64 {
        self.per_sub.iter().map(|m| m.frob_norm_sq()).sum()
    }

    /// Largest relative overshoot of `||F[n]||_F^2` above its budget
    /// (nonpositive when every subcarrier is within budget).
    pub fn max_budget_overshoot(&self, alloc: &PowerAllocation) -> f64 {
        self.per_sub
            .iter()
            .zip(alloc.per_subcarrier.iter())
            .map(|(m, &p)| (m.frob_norm_sq() - p) / p.max(f64::MIN_POSITIVE))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Per-subcarrier power split summing to at most the total budget.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerAllocation {
    pub per_subcarrier: Vec<f64>,
    pub total: f64,
}

impl PowerAllocation {
    pub fn uniform(subcarriers: usize, total: f64) -> Self {
        Self {
            per_subcarrier: vec![total / subcarriers as f64; subcarriers],
            total,
        }
    }

    pub fn sum(&self) -> f64 {
        self.per_subcarrier.iter().sum()
    }
}

/// Scalar receive equalizers per (user, subcarrier).
#[derive(Clone, Debug, PartialEq)]
pub struct EqualizerSet {
    users: usize,
    subcarriers: usize,
    values: Vec<Complex64>,
}

impl EqualizerSet {
    pub fn zeros(users: usize, subcarriers: usize) -> Self {
        Self {
            users,
            subcarriers,
            values: vec![Complex64::new(0.0, 0.0); users * subcarriers],
        }
    }

    #[inline]
    pub fn at(&self, k: usize, n: usize) -> Complex64 {
        self.values[k * self.subcarriers + n]
    }

    pub fn set(&mut self, k: usize, n: usize, v: Complex64) {
        self.values[k * self.subcarriers + n] = v;
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }
}

/// Positive MSE weights per (user, subcarrier).
#[derive(Clone, Debug, PartialEq)]
pub struct WmseWeights {
    users: usize,
    subcarriers: usize,
    values: Vec<f64>,
}

impl WmseWeights {
    pub fn ones(users: usize, subcarriers: usize) -> Self {
        Self {
            users,
            subcarriers,
            values: vec![1.0; users * subcarriers],
        }
    }

    #[inline]
    pub fn at(&self, k: usize, n: usize) -> f64 {
        self.values[k * self.subcarriers + n]
    }

    pub fn set(&mut self, k: usize, n: usize, v: f64) {
        self.values[k * self.subcarriers + n] = v;
    }
}

/// Solver configuration. The error covariance is shared by all users; pass a
/// zero matrix to trust the channel estimate outright.
#[derive(Clone, Debug)]
pub struct WmmseConfig {
    /// Fixed outer iteration count (no early exit, for reproducibility).
    pub iterations: usize,
    /// Receiver noise variance, strictly positive.
    pub noise_variance: f64,
    /// Total transmit power budget across all subcarriers.
    pub total_power: f64,
    /// Channel-estimation error covariance R_e (N_t x N_t, Hermitian PSD).
    pub error_covariance: CMat,
}

impl WmmseConfig {
    pub fn validate(&self, antennas: usize) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if !(self.noise_variance > 0.0) || !self.noise_variance.is_finite() {
            return Err(Error::Config(format!(
                "noise_variance must be positive, got {}",
                self.noise_variance
            )));
        }
        if !(self.total_power > 0.0) || !self.total_power.is_finite() {
            return Err(Error::Config(format!(
                "total_power must be positive, got {}",
                self.total_power
            )));
        }
        if self.error_covariance.rows() != antennas || self.error_covariance.cols() != antennas {
            return Err(Error::Dimension(format!(
                "error covariance is {}x{}, expected {antennas}x{antennas}",
                self.error_covariance.rows(),
                self.error_covariance.cols()
            )));
        }
        Ok(())
    }
}

/// Complete solver output. Equalizers and weights are recomputed from the
/// final beams, so the triple (beams, equalizers, weights) is mutually
/// consistent.
#[derive(Clone, Debug)]
pub struct WmmseSolution {
    pub beamformer: Beamformer,
    pub power: PowerAllocation,
    pub equalizers: EqualizerSet,
    pub weights: WmseWeights,
}

/// Projections of a channel vector through every beam column:
/// `out[m] = h^H f_m`.
pub fn channel_projections(h_kn: &[Complex64], f_all: &CMat) -> Vec<Complex64> {
    debug_assert_eq!(h_kn.len(), f_all.rows());
    let users = f_all.cols();
    let mut acc = vec![Complex64::new(0.0, 0.0); users];
    for (r, h) in h_kn.iter().enumerate() {
        let hc = h.conj();
        let row = f_all.row(r);
        for (m, &f) in row.iter().enumerate() {
            acc[m] += hc * f;
        }
    }
    acc
}

/// Hermitian quadratic form `Re{v^H R v}` (exact value is real for
/// Hermitian R; rounding noise in the imaginary part is discarded).
pub fn quad_form(r: &CMat, v: &[Complex64]) -> f64 {
    debug_assert_eq!(r.rows(), v.len());
    debug_assert_eq!(r.cols(), v.len());
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..v.len() {
        let mut row_acc = Complex64::new(0.0, 0.0);
        let row = r.row(i);
        for (j, &vj) in v.iter().enumerate() {
            row_acc += row[j] * vj;
        }
        acc += v[i].conj() * row_acc;
    }
    acc.re
}

/// Regularized zero-forcing precoder for one subcarrier, rescaled to spend
/// exactly `p`. With the receive model `y_k = h_k^H x + z`, the beams that
/// invert the effective channel are built from the conjugated user rows:
/// `F = Hc^H (Hc Hc^H + (K sigma^2 / p) I)^{-1}` with `Hc = conj(H)`,
/// so that `h_k^H f_m ~ delta_km`.
pub fn rzf_precoder(h_hat_n: &CMat, noise_variance: f64, power: f64) -> Result<CMat> {
    if !(power > 0.0) || !power.is_finite() {
        return Err(Error::Domain(format!(
            "precoder power budget must be positive, got {power}"
        )));
    }
    if !(noise_variance >= 0.0) {
        return Err(Error::Domain(format!(
            "noise variance must be nonnegative, got {noise_variance}"
        )));
    }
    let users = h_hat_n.rows();
    let hc = conj_rows(h_hat_n);
    let mut gram = gram_of_rows(&hc);
    let reg = users as f64 * noise_variance / power;
    for i in 0..users {
        let d = gram.at(i, i);
        gram.set(i, i, d + Complex64::new(reg, 0.0));
    }
    let y = hermitian_solve(&gram, &hc)?;
    let mut f = y.hermitian_transpose();
    let norm_sq = f.frob_norm_sq();
    if norm_sq <= 0.0 {
        return Err(Error::Numeric(
            "regularized zero-forcing produced a zero precoder (zero channel?)".into(),
        ));
    }
    f.scale((power / norm_sq).sqrt());
    Ok(f)
}

/// Entrywise conjugate.
fn conj_rows(h: &CMat) -> CMat {
    let mut out = CMat::zeros(h.rows(), h.cols());
    for r in 0..h.rows() {
        for (c, &v) in h.row(r).iter().enumerate() {
            out.set(r, c, v.conj());
        }
    }
    out
}

/// `H H^H` for a K x N_t matrix of user rows, symmetrized exactly.
fn gram_of_rows(h: &CMat) -> CMat {
    let users = h.rows();
    let mut g = CMat::zeros(users, users);
    for r in 0..users {
        for c in r..users {
            // (H H^H)[r, c] = sum_t H[r,t] conj(H[c,t]) = row_c^H row_r.
            let v = dot_h(h.row(c), h.row(r));
            if r == c {
                g.set(r, c, Complex64::new(v.re, 0.0));
            } else {
                g.set(r, c, v);
                g.set(c, r, v.conj());
            }
        }
    }
    g
}

/// Total received power at one user under estimated CSI:
/// `T = sum_m |h^H f_m|^2 + sigma^2`.
pub fn received_power(h_hat_kn: &[Complex64], f_all: &CMat, noise_variance: f64) -> f64 {
    let proj = channel_projections(h_hat_kn, f_all);
    proj.iter().map(|z| z.norm_sqr()).sum::<f64>() + noise_variance
}

/// The two symbol-MSE components of user `k` under equalizer `e`:
///
/// * `eps1 = |e|^2 T - 2 Re{e h^H f_k} + 1` — the estimate-visible error,
/// * `eps2 = |e|^2 sum_{m != k} f_m^H R_e f_m` — interference leaked through
///   the estimation error.
pub fn mse_terms(
    h_hat_kn: &[Complex64],
    f_all: &CMat,
    k: usize,
    e: Complex64,
    r_e: &CMat,
    noise_variance: f64,
) -> Result<(f64, f64)> {
    check_user_dims(h_hat_kn, f_all, k, r_e)?;
    let proj = channel_projections(h_hat_kn, f_all);
    let t = proj.iter().map(|z| z.norm_sqr()).sum::<f64>() + noise_variance;
    let eps1 = e.norm_sqr() * t - 2.0 * (e * proj[k]).re + 1.0;
    let eps2 = if r_e.frob_norm_sq() == 0.0 {
        0.0
    } else {
        let leak: f64 = (0..f_all.cols())
            .filter(|&m| m != k)
            .map(|m| quad_form(r_e, &f_all.col(m)))
            .sum();
        e.norm_sqr() * leak
    };
    Ok((eps1, eps2))
}

fn check_user_dims(h_hat_kn: &[Complex64], f_all: &CMat, k: usize, r_e: &CMat) -> Result<()> {
    if h_hat_kn.len() != f_all.rows() {
        return Err(Error::Dimension(format!(
            "channel vector has {} entries, beams have {} rows",
            h_hat_kn.len(),
            f_all.rows()
        )));
    }
    if k >= f_all.cols() {
        return Err(Error::Dimension(format!(
            "user index {k} outside the {} beam columns",
            f_all.cols()
        )));
    }
    if r_e.rows() != h_hat_kn.len() || r_e.cols() != h_hat_kn.len() {
        return Err(Error::Dimension(format!(
            "error covariance is {}x{}, expected {len}x{len}",
            r_e.rows(),
            r_e.cols(),
            len = h_hat_kn.len()
        )));
    }
    Ok(())
}

/// Error-aware MMSE equalizer of user `k`:
/// `e = f_k^H h / (T + sum_{m != k} f_m^H R_e f_m)`.
pub fn mmse_equalizer(
    h_hat_kn: &[Complex64],
    f_all: &CMat,
    k: usize,
    r_e: &CMat,
    noise_variance: f64,
) -> Result<Complex64> {
    check_user_dims(h_hat_kn, f_all, k, r_e)?;
    let proj = channel_projections(h_hat_kn, f_all);
    let denom = equalizer_denominator(&proj, f_all, k, r_e, noise_variance);
    if denom <= 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(proj[k].conj() / denom)
}

fn equalizer_denominator(
    proj: &[Complex64],
    f_all: &CMat,
    k: usize,
    r_e: &CMat,
    noise_variance: f64,
) -> f64 {
    let t = proj.iter().map(|z| z.norm_sqr()).sum::<f64>() + noise_variance;
    let leak = if r_e.frob_norm_sq() == 0.0 {
        0.0
    } else {
        (0..f_all.cols())
            .filter(|&m| m != k)
            .map(|m| quad_form(r_e, &f_all.col(m)))
            .sum()
    };
    t + leak
}

/// Residual MSE at the optimum equalizer:
/// `eps = 1 - |f_k^H h|^2 / (T + sum_{m != k} f_m^H R_e f_m)`.
pub fn mmse_residual(
    h_hat_kn: &[Complex64],
    f_all: &CMat,
    k: usize,
    r_e: &CMat,
    noise_variance: f64,
) -> Result<f64> {
    check_user_dims(h_hat_kn, f_all, k, r_e)?;
    let proj = channel_projections(h_hat_kn, f_all);
    let denom = equalizer_denominator(&proj, f_all, k, r_e, noise_variance);
    if denom <= 0.0 {
        return Ok(1.0);
    }
    Ok(1.0 - proj[k].norm_sqr() / denom)
}

/// Maps a residual MSE in (0, 1] to (SINR, achievable rate):
/// `sinr = 1/eps - 1`, `rate = -log2(eps) = log2(1 + sinr)`.
pub fn sinr_and_rate(eps: f64) -> Result<(f64, f64)> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Domain(format!(
            "residual MSE must lie in (0, 1], got {eps}"
        )));
    }
    let sinr = 1.0 / eps - 1.0;
    let rate = -eps.log2() + 0.0; // normalize -0.0 at eps = 1
    Ok((sinr, rate))
}

/// MSE weight minimizing the weighted-MSE surrogate: `lambda = 1/eps`.
pub fn optimal_weight(eps: f64) -> Result<f64> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Domain(format!(
            "residual MSE must be positive to weight, got {eps}"
        )));
    }
    Ok(1.0 / eps)
}

/// Weighted-MSE contribution of one user: `xi = lambda * eps - log2(lambda)`.
/// At `lambda = 1/eps` this equals `1 + log2(eps)`, i.e. 1 minus the rate.
pub fn wmse(lambda: f64, eps: f64) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!(
            "wmse weight must be positive, got {lambda}"
        )));
    }
    if !eps.is_finite() {
        return Err(Error::Domain(format!("wmse needs a finite mse, got {eps}")));
    }
    Ok(lambda * eps - lambda.log2())
}

/// Sum over users of the weighted MSE on every subcarrier, with the true
/// noise term. Used to watch the block-coordinate descent.
pub fn total_wmse(
    h_hat: &ChannelTensor,
    f: &Beamformer,
    e: &EqualizerSet,
    lambda: &WmseWeights,
    r_e: &CMat,
    noise_variance: f64,
) -> Result<f64> {
    let mut acc = 0.0;
    for n in 0..h_hat.subcarriers() {
        let f_n = f.at(n);
        for k in 0..h_hat.users() {
            let (e1, e2) = mse_terms(h_hat.vector(k, n), f_n, k, e.at(k, n), r_e, noise_variance)?;
            acc += wmse(lambda.at(k, n), e1 + e2)?;
        }
    }
    Ok(acc)
}

/// Weighted MSE of one subcarrier with the noise term replaced by the
/// power-coupled expression `sigma^2/p * ||F||_F^2`. The closed-form beam
/// update is the exact stationary point of this objective; when the beams
/// spend the full budget `p` it coincides with the plain weighted MSE.
pub fn wmse_with_embedded_power(
    h_hat_n: &CMat,
    f_all: &CMat,
    e_n: &[Complex64],
    lambda_n: &[f64],
    r_e: &CMat,
    noise_variance: f64,
    power: f64,
) -> Result<f64> {
    if !(power > 0.0) {
        return Err(Error::Domain(format!(
            "power budget must be positive, got {power}"
        )));
    }
    let embedded_noise = noise_variance / power * f_all.frob_norm_sq();
    let mut acc = 0.0;
    for k in 0..h_hat_n.rows() {
        let (e1, e2) = mse_terms(h_hat_n.row(k), f_all, k, e_n[k], r_e, embedded_noise)?;
        acc += wmse(lambda_n[k], e1 + e2)?;
    }
    Ok(acc)
}

/// Closed-form beam update for one subcarrier, before the power projection.
///
/// Solves `A_k f_k = conj(e_k) lambda_k h_k` per user with
/// `A_k = (sigma^2/p) W I + (W - w_k) R_e + sum_m w_m h_m h_m^H`,
/// `w_m = lambda_m |e_m|^2`, `W = sum_m w_m`.
pub fn precoder_closed_form_raw(
    h_hat_n: &CMat,
    e_n: &[Complex64],
    lambda_n: &[f64],
    r_e: &CMat,
    noise_variance: f64,
    power: f64,
) -> Result<CMat> {
    let users = h_hat_n.rows();
    let antennas = h_hat_n.cols();
    if e_n.len() != users || lambda_n.len() != users {
        return Err(Error::Dimension(format!(
            "need one equalizer and weight per user ({users}), got {} and {}",
            e_n.len(),
            lambda_n.len()
        )));
    }
    if r_e.rows() != antennas || r_e.cols() != antennas {
        return Err(Error::Dimension(format!(
            "error covariance is {}x{}, expected {antennas}x{antennas}",
            r_e.rows(),
            r_e.cols()
        )));
    }
    if !(power > 0.0) || !power.is_finite() {
        return Err(Error::Domain(format!(
            "power budget must be positive, got {power}"
        )));
    }
    if lambda_n.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(Error::Domain("all weights must be positive and finite".into()));
    }

    let w: Vec<f64> = lambda_n
        .iter()
        .zip(e_n.iter())
        .map(|(&l, e)| l * e.norm_sqr())
        .collect();
    let w_total: f64 = w.iter().sum();
    if w_total <= 0.0 {
        // No user carries any signal (all equalizers zero): the update has
        // no pull direction, keep silence on this subcarrier.
        return Ok(CMat::zeros(antennas, users));
    }

    // Shared part: (sigma^2/p) W I + W R_e + sum_m w_m h_m h_m^H.
    let mut base = CMat::zeros(antennas, antennas);
    let diag = noise_variance / power * w_total;
    for i in 0..antennas {
        base.set(i, i, Complex64::new(diag, 0.0));
    }
    let has_error = r_e.frob_norm_sq() > 0.0;
    if has_error {
        base.add_scaled(Complex64::new(w_total, 0.0), r_e);
    }
    for (m, &wm) in w.iter().enumerate() {
        if wm == 0.0 {
            continue;
        }
        let hm = h_hat_n.row(m);
        for i in 0..antennas {
            let hi = hm[i] * wm;
            // Fill the upper triangle then mirror, keeping A exactly Hermitian.
            for j in i..antennas {
                let v = base.at(i, j) + hi * hm[j].conj();
                base.set(i, j, v);
            }
        }
    }
    for i in 0..antennas {
        let d = base.at(i, i);
        base.set(i, i, Complex64::new(d.re, 0.0));
        for j in (i + 1)..antennas {
            let v = base.at(i, j);
            base.set(j, i, v.conj());
        }
    }

    let mut f = CMat::zeros(antennas, users);
    if !has_error {
        // A_k is user-independent: one factorization serves all right-hand
        // sides.
        let mut rhs = CMat::zeros(antennas, users);
        for k in 0..users {
            let scale = e_n[k].conj() * lambda_n[k];
            for i in 0..antennas {
                rhs.set(i, k, scale * h_hat_n.at(k, i));
            }
        }
        f = hermitian_solve(&base, &rhs)?;
    } else {
        for k in 0..users {
            let mut a_k = base.clone();
            a_k.add_scaled(Complex64::new(-w[k], 0.0), r_e);
            let mut rhs = CMat::zeros(antennas, 1);
            let scale = e_n[k].conj() * lambda_n[k];
            for i in 0..antennas {
                rhs.set(i, 0, scale * h_hat_n.at(k, i));
            }
            let col = hermitian_solve(&a_k, &rhs)?;
            for i in 0..antennas {
                f.set(i, k, col.at(i, 0));
            }
        }
    }
    Ok(f)
}

/// [`precoder_closed_form_raw`] followed by the power projection: if the
/// update overshoots the per-subcarrier budget it is scaled back onto the
/// boundary, so `||F||_F^2 <= p` always holds on return.
pub fn precoder_closed_form(
    h_hat_n: &CMat,
    e_n: &[Complex64],
    lambda_n: &[f64],
    r_e: &CMat,
    noise_variance: f64,
    power: f64,
) -> Result<CMat> {
    let mut f = precoder_closed_form_raw(h_hat_n, e_n, lambda_n, r_e, noise_variance, power)?;
    let used = f.frob_norm_sq();
    if used > power {
        f.scale((power / used).sqrt());
    }
    Ok(f)
}

/// Rate curve of one subcarrier as a function of the power `p` assigned to
/// it, for beams of fixed shape: `sum_k log2(1 + s_k p / (i_k p + noise))`.
/// Concave and nondecreasing for nonnegative coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct RateProfile {
    signal: Vec<f64>,
    interference: Vec<f64>,
    noise: f64,
}

impl RateProfile {
    pub fn new(signal: Vec<f64>, interference: Vec<f64>, noise: f64) -> Result<Self> {
        if signal.len() != interference.len() {
            return Err(Error::Dimension(format!(
                "signal ({}) and interference ({}) coefficient counts differ",
                signal.len(),
                interference.len()
            )));
        }
        if signal.iter().any(|&s| !(s >= 0.0) || !s.is_finite())
            || interference.iter().any(|&i| !(i >= 0.0) || !i.is_finite())
        {
            return Err(Error::Contract(
                "rate profile coefficients must be nonnegative and finite \
                 (a negative signal term would make the profile non-monotone)"
                    .into(),
            ));
        }
        if !(noise > 0.0) || !noise.is_finite() {
            return Err(Error::Contract(format!(
                "rate profile noise must be positive, got {noise}"
            )));
        }
        Ok(Self {
            signal,
            interference,
            noise,
        })
    }

    /// Profile induced by a unit-Frobenius beam matrix on one subcarrier:
    /// `s_k = |h_k^H f_k|^2`,
    /// `i_k = sum_{m != k} (|h_k^H f_m|^2 + f_m^H R_e f_m)`.
    pub fn from_normalized_precoder(
        h_hat_n: &CMat,
        f_unit: &CMat,
        r_e: &CMat,
        noise_variance: f64,
    ) -> Result<Self> {
        let users = h_hat_n.rows();
        if f_unit.rows() != h_hat_n.cols() || f_unit.cols() != users {
            return Err(Error::Dimension(format!(
                "beams are {}x{}, expected {}x{users}",
                f_unit.rows(),
                f_unit.cols(),
                h_hat_n.cols()
            )));
        }
        let has_error = r_e.frob_norm_sq() > 0.0;
        let quads: Vec<f64> = if has_error {
            (0..users).map(|m| quad_form(r_e, &f_unit.col(m))).collect()
        } else {
            vec![0.0; users]
        };
        let quad_total: f64 = quads.iter().sum();
        let mut signal = Vec::with_capacity(users);
        let mut interference = Vec::with_capacity(users);
        for k in 0..users {
            let proj = channel_projections(h_hat_n.row(k), f_unit);
            let s = proj[k].norm_sqr();
            let cross: f64 = proj
                .iter()
                .enumerate()
                .filter(|&(m, _)| m != k)
                .map(|(_, z)| z.norm_sqr())
                .sum();
            signal.push(s);
            // Rounding in the quadratic forms can leave a tiny negative sum.
            interference.push((cross + (quad_total - quads[k])).max(0.0));
        }
        Self::new(signal, interference, noise_variance)
    }

    pub fn rate(&self, p: f64) -> f64 {
        debug_assert!(p >= 0.0);
        self.signal
            .iter()
            .zip(self.interference.iter())
            .map(|(&s, &i)| {
                if s == 0.0 {
                    0.0
                } else {
                    (1.0 + s * p / (i * p + self.noise)).log2()
                }
            })
            .sum()
    }

    /// d rate / d p, strictly decreasing in `p` whenever any signal
    /// coefficient is positive.
    pub fn derivative(&self, p: f64) -> f64 {
        let ln2 = std::f64::consts::LN_2;
        self.signal
            .iter()
            .zip(self.interference.iter())
            .map(|(&s, &i)| {
                if s == 0.0 {
                    0.0
                } else {
                    s * self.noise / (((s + i) * p + self.noise) * (i * p + self.noise) * ln2)
                }
            })
            .sum()
    }
}

/// Splits `total_power` across subcarriers to maximize the summed rate
/// profiles: exact KKT water-filling via bisection on the water level, with
/// an inner bisection per subcarrier on the marginal rate. The returned
/// split sums to `total_power` exactly (to relative 1e-9 or better) and only
/// subcarriers whose initial slope clears the water level get power.
pub fn waterfill_power(profiles: &[RateProfile], total_power: f64) -> Result<PowerAllocation> {
    if profiles.is_empty() {
        return Err(Error::Dimension("waterfill needs at least one profile".into()));
    }
    if !(total_power > 0.0) || !total_power.is_finite() {
        return Err(Error::Domain(format!(
            "total power must be positive, got {total_power}"
        )));
    }
    let slopes: Vec<f64> = profiles.iter().map(|pr| pr.derivative(0.0)).collect();
    let mu_hi = slopes.iter().fold(0.0f64, |a, &b| a.max(b));
    if mu_hi == 0.0 {
        // Every profile is flat; any feasible split is optimal.
        return Ok(PowerAllocation::uniform(profiles.len(), total_power));
    }

    // Power drawn by one profile at water level mu.
    let draw = |profile: &RateProfile, slope0: f64, mu: f64| -> f64 {
        if slope0 <= mu {
            return 0.0;
        }
        // Bracket the root of derivative(p) = mu, then bisect.
        let mut hi = total_power.max(1.0);
        let mut guard = 0;
        while profile.derivative(hi) > mu && guard < 200 {
            hi *= 2.0;
            guard += 1;
        }
        let mut lo = 0.0;
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if profile.derivative(mid) > mu {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };

    let total_at = |mu: f64| -> f64 {
        profiles
            .iter()
            .zip(slopes.iter())
            .map(|(pr, &s0)| draw(pr, s0, mu))
            .sum()
    };

    // Find a lower water level pushing out at least the full budget.
    let mut mu_lo = mu_hi;
    let mut guard = 0;
    while total_at(mu_lo) < total_power && guard < 200 {
        mu_lo *= 0.5;
        guard += 1;
    }
    if total_at(mu_lo) < total_power {
        return Err(Error::Numeric(
            "water-filling failed to bracket the water level".into(),
        ));
    }
    let mut hi = mu_hi;
    let mut lo = mu_lo;
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if total_at(mid) >= total_power {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = lo;
    let mut per: Vec<f64> = profiles
        .iter()
        .zip(slopes.iter())
        .map(|(pr, &s0)| draw(pr, s0, mu))
        .collect();
    // Exact budget: rescale the strictly positive entries.
    let sum: f64 = per.iter().sum();
    if sum > 0.0 {
        let scale = total_power / sum;
        for p in &mut per {
            *p *= scale;
        }
    }
    Ok(PowerAllocation {
        per_subcarrier: per,
        total: total_power,
    })
}

/// Runs the block-coordinate solver on the estimated channel.
/// Requires K <= N_t; the iteration count is fixed, with no early exit.
pub fn wmmse_solve(h_hat: &ChannelTensor, cfg: &WmmseConfig) -> Result<WmmseSolution> {
    wmmse_solve_with(h_hat, cfg, Execution::Parallel)
}

/// [`wmmse_solve`] with an explicit execution strategy (the parallel and
/// sequential paths are bit-identical).
pub fn wmmse_solve_with(
    h_hat: &ChannelTensor,
    cfg: &WmmseConfig,
    exec: Execution,
) -> Result<WmmseSolution> {
    let users = h_hat.users();
    let subcarriers = h_hat.subcarriers();
    let antennas = h_hat.antennas();
    if users == 0 || subcarriers == 0 || antennas == 0 {
        return Err(Error::Dimension("channel tensor has an empty axis".into()));
    }
    if users > antennas {
        return Err(Error::Config(format!(
            "unsupported configuration: {users} users exceed {antennas} antennas"
        )));
    }
    cfg.validate(antennas)?;

    let sigma2 = cfg.noise_variance;
    let r_e = &cfg.error_covariance;
    let h_mats: Vec<CMat> = (0..subcarriers)
        .map(|n| h_hat.subcarrier_matrix(n))
        .collect();

    // Zero-forcing start, regularized fallback for singular user sets.
    let p0 = cfg.total_power / subcarriers as f64;
    let mut beams: Vec<CMat> = Vec::with_capacity(subcarriers);
    for h_n in &h_mats {
        beams.push(initial_beams(h_n, sigma2, p0)?);
    }

    let mut power = PowerAllocation::uniform(subcarriers, cfg.total_power);
    let mut eq = EqualizerSet::zeros(users, subcarriers);
    let mut weights = WmseWeights::ones(users, subcarriers);

    for _ in 0..cfg.iterations {
        // (a) Re-split the power budget over subcarriers for the current
        // beam shapes, then rescale each subcarrier onto its new budget.
        let mut profiles = Vec::with_capacity(subcarriers);
        for (h_n, f_n) in h_mats.iter().zip(beams.iter()) {
            let norm_sq = f_n.frob_norm_sq();
            let unit = if norm_sq > 0.0 {
                let mut u = f_n.clone();
                u.scale((1.0 / norm_sq).sqrt());
                u
            } else {
                f_n.clone()
            };
            profiles.push(RateProfile::from_normalized_precoder(
                h_n, &unit, r_e, sigma2,
            )?);
        }
        power = waterfill_power(&profiles, cfg.total_power)?;
        for (f_n, &p_n) in beams.iter_mut().zip(power.per_subcarrier.iter()) {
            let norm_sq = f_n.frob_norm_sq();
            if norm_sq > 0.0 {
                f_n.scale((p_n / norm_sq).sqrt());
            }
        }

        // (b) + (c) fused per subcarrier; subcarriers are independent.
        let updated: Vec<Result<(Vec<Complex64>, Vec<f64>, CMat)>> =
            map_indexed(exec, subcarriers, |n| {
                let h_n = &h_mats[n];
                let f_n = &beams[n];
                let p_n = power.per_subcarrier[n];
                let (e_n, l_n) = equalizer_weight_update(h_n, f_n, r_e, sigma2);
                let f_new = if p_n <= 0.0 {
                    CMat::zeros(antennas, users)
                } else {
                    precoder_closed_form(h_n, &e_n, &l_n, r_e, sigma2, p_n)?
                };
                Ok((e_n, l_n, f_new))
            });
        for (n, item) in updated.into_iter().enumerate() {
            let (e_n, l_n, f_new) = item?;
            for k in 0..users {
                eq.set(k, n, e_n[k]);
                weights.set(k, n, l_n[k]);
            }
            beams[n] = f_new;
        }
    }

    // Make the returned equalizers/weights consistent with the final beams.
    for (n, (h_n, f_n)) in h_mats.iter().zip(beams.iter()).enumerate() {
        let (e_n, l_n) = equalizer_weight_update(h_n, f_n, r_e, sigma2);
        for k in 0..users {
            eq.set(k, n, e_n[k]);
            weights.set(k, n, l_n[k]);
        }
    }

    let beamformer = Beamformer::new(beams)?;
    Ok(WmmseSolution {
        beamformer,
        power,
        equalizers: eq,
        weights,
    })
}

fn initial_beams(h_n: &CMat, sigma2: f64, p0: f64) -> Result<CMat> {
    let users = h_n.rows();
    let hc = conj_rows(h_n);
    let gram = gram_of_rows(&hc);
    match hermitian_solve(&gram, &hc) {
        Ok(y) => {
            let mut f = y.hermitian_transpose();
            let norm_sq = f.frob_norm_sq();
            if norm_sq > 0.0 && norm_sq.is_finite() {
                f.scale((p0 / norm_sq).sqrt());
                return Ok(f);
            }
            rzf_or_silence(h_n, sigma2, p0, users)
        }
        Err(_) => rzf_or_silence(h_n, sigma2, p0, users),
    }
}

fn rzf_or_silence(h_n: &CMat, sigma2: f64, p0: f64, users: usize) -> Result<CMat> {
    match rzf_precoder(h_n, sigma2, p0) {
        Ok(f) => Ok(f),
        // A fully zero (or otherwise degenerate) channel carries nothing.
        Err(Error::Numeric(_)) => Ok(CMat::zeros(h_n.cols(), users)),
        Err(e) => Err(e),
    }
}

fn equalizer_weight_update(
    h_n: &CMat,
    f_n: &CMat,
    r_e: &CMat,
    sigma2: f64,
) -> (Vec<Complex64>, Vec<f64>) {
    let users = h_n.rows();
    let has_error = r_e.frob_norm_sq() > 0.0;
    let quads: Vec<f64> = if has_error {
        (0..users).map(|m| quad_form(r_e, &f_n.col(m))).collect()
    } else {
        vec![0.0; users]
    };
    let quad_total: f64 = quads.iter().sum();
    let mut e_out = Vec::with_capacity(users);
    let mut l_out = Vec::with_capacity(users);
    for k in 0..users {
        let proj = channel_projections(h_n.row(k), f_n);
        let t: f64 = proj.iter().map(|z| z.norm_sqr()).sum::<f64>() + sigma2;
        let denom = t + (quad_total - quads[k]);
        let (e, eps) = if denom > 0.0 {
            (proj[k].conj() / denom, 1.0 - proj[k].norm_sqr() / denom)
        } else {
            (Complex64::new(0.0, 0.0), 1.0)
        };
        e_out.push(e);
        // denom >= sigma2 > 0 keeps eps strictly inside (0, 1].
        l_out.push(1.0 / eps);
    }
    (e_out, l_out)
}

/// Per-user and per-(user, subcarrier) achievable rates of a beamformer
/// against the true channel, averaged over subcarriers.
#[derive(Clone, Debug)]
pub struct RateSummary {
    /// Average rate of each user across subcarriers (bits/s/Hz).
    pub per_user: Vec<f64>,
    /// Rate of each (user, subcarrier) pair, row-major users x subcarriers.
    pub per_entry: Vec<f64>,
    /// Sum over users of the per-user averages.
    pub sum: f64,
}

/// Genie-aided sum rate: SINRs are formed with the true channel, so this
/// measures what the beams actually deliver rather than what the estimate
/// promised.
pub fn evaluate_sum_rate(
    h_true: &ChannelTensor,
    f: &Beamformer,
    noise_variance: f64,
) -> Result<RateSummary> {
    if !(noise_variance > 0.0) || !noise_variance.is_finite() {
        return Err(Error::Domain(format!(
            "noise variance must be positive, got {noise_variance}"
        )));
    }
    if f.antennas() != h_true.antennas()
        || f.users() != h_true.users()
        || f.subcarriers() != h_true.subcarriers()
    {
        return Err(Error::Dimension(format!(
            "beamformer ({}x{} over {} subcarriers) does not match the channel \
             ({} users, {} subcarriers, {} antennas)",
            f.antennas(),
            f.users(),
            f.subcarriers(),
            h_true.users(),
            h_true.subcarriers(),
            h_true.antennas()
        )));
    }
    let users = h_true.users();
    let subcarriers = h_true.subcarriers();
    let mut per_entry = vec![0.0; users * subcarriers];
    for n in 0..subcarriers {
        let f_n = f.at(n);
        for k in 0..users {
            let proj = channel_projections(h_true.vector(k, n), f_n);
            let s = proj[k].norm_sqr();
            let i: f64 = proj
                .iter()
                .enumerate()
                .filter(|&(m, _)| m != k)
                .map(|(_, z)| z.norm_sqr())
                .sum();
            per_entry[k * subcarriers + n] = (1.0 + s / (i + noise_variance)).log2();
        }
    }
    let per_user: Vec<f64> = (0..users)
        .map(|k| {
            per_entry[k * subcarriers..(k + 1) * subcarriers]
                .iter()
                .sum::<f64>()
                / subcarriers as f64
        })
        .collect();
    let sum = per_user.iter().sum();
    Ok(RateSummary {
        per_user,
        per_entry,
        sum,
    })
}
