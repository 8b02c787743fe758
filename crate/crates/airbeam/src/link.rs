//! Link-level transmission: payload symbol grids, precoding, hybrid branch
//! combining, total-power projection, propagation over the true channel with
//! AWGN, receiver-side scalar equalization, and empirical metrics that sit
//! next to their analytical counterparts in a [`LinkReport`].
//!
//! The receiver equalizer is genie-aided: it is built from the *true*
//! equivalent scalar channel `h^H f` and true interference power, so every
//! gap between schemes is attributable to transmitter-side CSI quality.

use num_complex::Complex64;
use serde::Serialize;

use crate::beamforming::{
    channel_projections, evaluate_sum_rate, rzf_precoder, sinr_and_rate, wmmse_solve_with,
    Beamformer, EqualizerSet,
};
use crate::channel::{generate_channel_tensor, inject_csi_error, nmse, ChannelTensor};
use crate::config::{ScenarioConfig, Scheme, SymbolKind};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::tensor::{sample_complex_gaussian, Prng, RandomSource};

/// Payload symbols, subcarriers x users x frames. `unit_power` records
/// whether the grid came from a unit-power constellation.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolGrid {
    subcarriers: usize,
    users: usize,
    frames: usize,
    unit_power: bool,
    values: Vec<Complex64>,
}

impl SymbolGrid {
    pub fn zeros(subcarriers: usize, users: usize, frames: usize) -> Self {
        Self {
            subcarriers,
            users,
            frames,
            unit_power: false,
            values: vec![Complex64::new(0.0, 0.0); subcarriers * users * frames],
        }
    }

    pub fn from_values(
        subcarriers: usize,
        users: usize,
        frames: usize,
        values: Vec<Complex64>,
    ) -> Result<Self> {
        if values.len() != subcarriers * users * frames {
            return Err(Error::Dimension(format!(
                "symbol grid expects {} values, got {}",
                subcarriers * users * frames,
                values.len()
            )));
        }
        Ok(Self {
            subcarriers,
            users,
            frames,
            unit_power: false,
            values,
        })
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn unit_power(&self) -> bool {
        self.unit_power
    }

    pub fn data(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    fn idx(&self, n: usize, k: usize, q: usize) -> usize {
        (n * self.users + k) * self.frames + q
    }

    pub fn at(&self, n: usize, k: usize, q: usize) -> Complex64 {
        self.values[self.idx(n, k, q)]
    }

    pub fn set(&mut self, n: usize, k: usize, q: usize, v: Complex64) {
        let i = self.idx(n, k, q);
        self.values[i] = v;
    }

    /// The Q consecutive samples of one (subcarrier, user) stream.
    pub fn stream(&self, n: usize, k: usize) -> &[Complex64] {
        let start = (n * self.users + k) * self.frames;
        &self.values[start..start + self.frames]
    }
}

/// Antenna-domain transmit signal, subcarriers x antennas x frames.
#[derive(Clone, Debug, PartialEq)]
pub struct TransmitGrid {
    subcarriers: usize,
    antennas: usize,
    frames: usize,
    values: Vec<Complex64>,
}

impl TransmitGrid {
    pub fn zeros(subcarriers: usize, antennas: usize, frames: usize) -> Self {
        Self {
            subcarriers,
            antennas,
            frames,
            values: vec![Complex64::new(0.0, 0.0); subcarriers * antennas * frames],
        }
    }

    pub fn from_values(
        subcarriers: usize,
        antennas: usize,
        frames: usize,
        values: Vec<Complex64>,
    ) -> Result<Self> {
        if values.len() != subcarriers * antennas * frames {
            return Err(Error::Dimension(format!(
                "transmit grid expects {} values, got {}",
                subcarriers * antennas * frames,
                values.len()
            )));
        }
        Ok(Self {
            subcarriers,
            antennas,
            frames,
            values,
        })
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn data(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    fn idx(&self, n: usize, t: usize, q: usize) -> usize {
        (n * self.antennas + t) * self.frames + q
    }

    pub fn at(&self, n: usize, t: usize, q: usize) -> Complex64 {
        self.values[self.idx(n, t, q)]
    }

    pub fn set(&mut self, n: usize, t: usize, q: usize, v: Complex64) {
        let i = self.idx(n, t, q);
        self.values[i] = v;
    }

    /// The Q consecutive samples radiated by one (subcarrier, antenna) pair.
    pub fn stream(&self, n: usize, t: usize) -> &[Complex64] {
        let start = (n * self.antennas + t) * self.frames;
        &self.values[start..start + self.frames]
    }

    pub fn frob_norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }
}

/// Per-user received samples, users x subcarriers x frames.
#[derive(Clone, Debug, PartialEq)]
pub struct ReceivedGrid {
    users: usize,
    subcarriers: usize,
    frames: usize,
    values: Vec<Complex64>,
}

impl ReceivedGrid {
    pub fn zeros(users: usize, subcarriers: usize, frames: usize) -> Self {
        Self {
            users,
            subcarriers,
            frames,
            values: vec![Complex64::new(0.0, 0.0); users * subcarriers * frames],
        }
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn data(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    fn idx(&self, k: usize, n: usize, q: usize) -> usize {
        (k * self.subcarriers + n) * self.frames + q
    }

    pub fn at(&self, k: usize, n: usize, q: usize) -> Complex64 {
        self.values[self.idx(k, n, q)]
    }

    pub fn set(&mut self, k: usize, n: usize, q: usize, v: Complex64) {
        let i = self.idx(k, n, q);
        self.values[i] = v;
    }

    /// The Q consecutive samples one user sees on one subcarrier.
    pub fn stream(&self, k: usize, n: usize) -> &[Complex64] {
        let start = (k * self.subcarriers + n) * self.frames;
        &self.values[start..start + self.frames]
    }
}

/// Weights for combining a data-driven and a model-driven transmit branch.
/// At least one weight must be nonzero.
#[derive(Clone, Copy, Debug)]
pub struct HybridCombineConfig {
    pub beta_data: f64,
    pub beta_model: f64,
}

impl Default for HybridCombineConfig {
    /// Model-driven branch only.
    fn default() -> Self {
        Self {
            beta_data: 0.0,
            beta_model: 1.0,
        }
    }
}

impl HybridCombineConfig {
    pub fn new(beta_data: f64, beta_model: f64) -> Result<Self> {
        if !beta_data.is_finite() || !beta_model.is_finite() {
            return Err(Error::Contract(format!(
                "combining weights must be finite, got ({beta_data}, {beta_model})"
            )));
        }
        if beta_data == 0.0 && beta_model == 0.0 {
            return Err(Error::Contract(
                "at least one combining weight must be nonzero".into(),
            ));
        }
        Ok(Self {
            beta_data,
            beta_model,
        })
    }
}

/// What the total-power projection did to a transmit grid.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PowerScaleReport {
    /// Squared Frobenius norm of the input grid.
    pub input_norm_sq: f64,
    /// Scalar applied to every entry (exactly 1 when no clipping occurred).
    pub scale: f64,
    /// Whether the input exceeded the frame-power budget Q*P_t.
    pub clipped: bool,
    /// Whether the input was identically zero (projection is a no-op).
    pub zero_input: bool,
}

/// Draws an i.i.d. unit-power payload grid in (n, k, q) storage order.
///
/// `UnitGaussian` symbols are CN(0, 1); `Qpsk` symbols come from the
/// unit-modulus set {1, j, -1, -j}, so E|r|^2 = 1 holds exactly.
pub fn random_symbols(
    rng: &mut Prng,
    users: usize,
    subcarriers: usize,
    frames: usize,
    kind: SymbolKind,
) -> Result<SymbolGrid> {
    if users == 0 || subcarriers == 0 || frames == 0 {
        return Err(Error::Dimension(
            "symbol grid dimensions must all be at least 1".into(),
        ));
    }
    let count = subcarriers * users * frames;
    let values = match kind {
        SymbolKind::UnitGaussian => sample_complex_gaussian(rng, count, 1.0)?,
        SymbolKind::Qpsk => {
            const POINTS: [Complex64; 4] = [
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(-1.0, 0.0),
                Complex64::new(0.0, -1.0),
            ];
            use rand::Rng as _;
            (0..count).map(|_| POINTS[rng.gen_range(0..4usize)]).collect()
        }
    };
    let mut grid = SymbolGrid::from_values(subcarriers, users, frames, values)?;
    grid.unit_power = true;
    Ok(grid)
}

/// Beamforms a symbol grid: `X[n] = F[n] W[n]` per subcarrier, where column
/// m of `F[n]` carries user m's stream.
pub fn apply_precoding(f: &Beamformer, s: &SymbolGrid) -> Result<TransmitGrid> {
    if f.users() != s.users() || f.subcarriers() != s.subcarriers() {
        return Err(Error::Dimension(format!(
            "beamformer serves {} users on {} subcarriers, symbols carry {} users on {}",
            f.users(),
            f.subcarriers(),
            s.users(),
            s.subcarriers()
        )));
    }
    let mut x = TransmitGrid::zeros(s.subcarriers(), f.antennas(), s.frames());
    for n in 0..s.subcarriers() {
        let f_n = f.at(n);
        for t in 0..f.antennas() {
            let row = f_n.row(t);
            let start = (n * x.antennas + t) * x.frames;
            let out = &mut x.values[start..start + x.frames];
            for (m, &w) in row.iter().enumerate() {
                let sym = s.stream(n, m);
                for (o, &r) in out.iter_mut().zip(sym) {
                    *o += w * r;
                }
            }
        }
    }
    Ok(x)
}

/// Entrywise weighted sum of two transmit branches:
/// `X_c = beta_data * X_d + beta_model * X_m`.
pub fn hybrid_combine(
    x_data: &TransmitGrid,
    x_model: &TransmitGrid,
    cfg: &HybridCombineConfig,
) -> Result<TransmitGrid> {
    if x_data.subcarriers != x_model.subcarriers
        || x_data.antennas != x_model.antennas
        || x_data.frames != x_model.frames
    {
        return Err(Error::Dimension(
            "hybrid branches must have identical grid shapes".into(),
        ));
    }
    if x_data.values.is_empty() {
        return Err(Error::Dimension("hybrid branches must be nonempty".into()));
    }
    let mut out = x_model.clone();
    for (o, (&d, &m)) in out
        .values
        .iter_mut()
        .zip(x_data.values.iter().zip(x_model.values.iter()))
    {
        *o = cfg.beta_data * d + cfg.beta_model * m;
    }
    Ok(out)
}

/// Projects a transmit grid onto the frame power budget:
/// `X = min(sqrt(Q*P_t), ||X_c||_F) * X_c / ||X_c||_F`, so the output always
/// satisfies `||X||_F^2 <= Q*P_t` with equality iff the input exceeded it.
/// A grid already inside the budget passes through bit-identically; a zero
/// grid is returned unchanged with the `zero_input` flag set.
pub fn power_normalize(
    x: &TransmitGrid,
    total_power: f64,
) -> Result<(TransmitGrid, PowerScaleReport)> {
    if !(total_power > 0.0) || !total_power.is_finite() {
        return Err(Error::Contract(format!(
            "total power must be positive and finite, got {total_power}"
        )));
    }
    let input_norm_sq = x.frob_norm_sq();
    if !input_norm_sq.is_finite() {
        return Err(Error::Numeric(
            "transmit grid has a non-finite Frobenius norm".into(),
        ));
    }
    let budget = x.frames as f64 * total_power;
    if input_norm_sq == 0.0 {
        return Ok((
            x.clone(),
            PowerScaleReport {
                input_norm_sq,
                scale: 1.0,
                clipped: false,
                zero_input: true,
            },
        ));
    }
    if input_norm_sq <= budget {
        return Ok((
            x.clone(),
            PowerScaleReport {
                input_norm_sq,
                scale: 1.0,
                clipped: false,
                zero_input: false,
            },
        ));
    }
    let scale = (budget / input_norm_sq).sqrt();
    let mut out = x.clone();
    for v in out.values.iter_mut() {
        *v *= scale;
    }
    Ok((
        out,
        PowerScaleReport {
            input_norm_sq,
            scale,
            clipped: true,
            zero_input: false,
        },
    ))
}

/// Sends a transmit grid through the true channel and adds white noise:
/// `y[k,n,q] = h[k,n]^H x[n,q] + z`, with `z ~ CN(0, noise_variance)` drawn
/// in (k, n, q) order. Zero noise variance yields the exact inner products.
pub fn propagate(
    rng: &mut Prng,
    h_true: &ChannelTensor,
    x: &TransmitGrid,
    noise_variance: f64,
) -> Result<ReceivedGrid> {
    if h_true.antennas() != x.antennas || h_true.subcarriers() != x.subcarriers {
        return Err(Error::Dimension(format!(
            "channel covers {} antennas x {} subcarriers, transmit grid {} x {}",
            h_true.antennas(),
            h_true.subcarriers(),
            x.antennas,
            x.subcarriers
        )));
    }
    let users = h_true.users();
    let frames = x.frames;
    let mut y = ReceivedGrid::zeros(users, x.subcarriers, frames);
    let mut acc = vec![Complex64::new(0.0, 0.0); frames];
    for k in 0..users {
        for n in 0..x.subcarriers {
            let h = h_true.vector(k, n);
            acc.fill(Complex64::new(0.0, 0.0));
            for (t, &ht) in h.iter().enumerate() {
                let hc = ht.conj();
                for (a, &xv) in acc.iter_mut().zip(x.stream(n, t)) {
                    *a += hc * xv;
                }
            }
            let noise = sample_complex_gaussian(rng, frames, noise_variance)?;
            let start = (k * y.subcarriers + n) * frames;
            let dst = &mut y.values[start..start + frames];
            for ((d, &a), &z) in dst.iter_mut().zip(acc.iter()).zip(noise.iter()) {
                *d = a + z;
            }
        }
    }
    Ok(y)
}

/// Applies per-(user, subcarrier) scalar equalizers:
/// `r_hat[k,n,q] = e[k,n] * y[k,n,q]`.
pub fn equalize_estimate(y: &ReceivedGrid, e: &EqualizerSet) -> Result<SymbolGrid> {
    if e.users() != y.users || e.subcarriers() != y.subcarriers {
        return Err(Error::Dimension(format!(
            "equalizer set is {}x{}, received grid is {}x{}",
            e.users(),
            e.subcarriers(),
            y.users,
            y.subcarriers
        )));
    }
    let mut r = SymbolGrid::zeros(y.subcarriers, y.users, y.frames);
    for k in 0..y.users {
        for n in 0..y.subcarriers {
            let ekn = e.at(k, n);
            let src = y.stream(k, n);
            let start = (n * r.users + k) * r.frames;
            let dst = &mut r.values[start..start + r.frames];
            for (d, &v) in dst.iter_mut().zip(src) {
                *d = ekn * v;
            }
        }
    }
    Ok(r)
}

/// Equivalent scalar channels after beamforming: `g[k,n,m] = scale *
/// h[k,n]^H f_m[n]`, the gain from stream m to user k on subcarrier n,
/// including any transmit power scaling.
#[derive(Clone, Debug)]
pub struct EquivalentGains {
    users: usize,
    subcarriers: usize,
    values: Vec<Complex64>,
}

impl EquivalentGains {
    pub fn users(&self) -> usize {
        self.users
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    /// Gains of every stream into user k on subcarrier n.
    pub fn row(&self, k: usize, n: usize) -> &[Complex64] {
        let start = (k * self.subcarriers + n) * self.users;
        &self.values[start..start + self.users]
    }

    pub fn at(&self, k: usize, n: usize, m: usize) -> Complex64 {
        self.row(k, n)[m]
    }
}

/// Projects the true channel through every beam, with the transmit scale
/// folded in.
pub fn equivalent_gains(
    h_true: &ChannelTensor,
    f: &Beamformer,
    scale: f64,
) -> Result<EquivalentGains> {
    if h_true.antennas() != f.antennas()
        || h_true.users() != f.users()
        || h_true.subcarriers() != f.subcarriers()
    {
        return Err(Error::Dimension(
            "channel and beamformer shapes do not match".into(),
        ));
    }
    let users = h_true.users();
    let subcarriers = h_true.subcarriers();
    let mut values = Vec::with_capacity(users * subcarriers * users);
    for k in 0..users {
        for n in 0..subcarriers {
            let mut proj = channel_projections(h_true.vector(k, n), f.at(n));
            for p in proj.iter_mut() {
                *p *= scale;
            }
            values.extend_from_slice(&proj);
        }
    }
    Ok(EquivalentGains {
        users,
        subcarriers,
        values,
    })
}

/// Receiver-side MMSE equalizers from the true equivalent channel:
/// `e[k,n] = g[k,n,k]^* / (sum_m |g[k,n,m]|^2 + noise_variance)`.
pub fn genie_equalizers(gains: &EquivalentGains, noise_variance: f64) -> EqualizerSet {
    let mut e = EqualizerSet::zeros(gains.users, gains.subcarriers);
    for k in 0..gains.users {
        for n in 0..gains.subcarriers {
            let row = gains.row(k, n);
            let denom: f64 = row.iter().map(|g| g.norm_sqr()).sum::<f64>() + noise_variance;
            if denom > 0.0 {
                e.set(k, n, row[k].conj() / denom);
            }
        }
    }
    e
}

/// Received samples split into their desired-signal, interference, and noise
/// components, so `signal + interference + noise == y` up to rounding.
#[derive(Clone, Debug)]
pub struct SignalParts {
    pub signal: ReceivedGrid,
    pub interference: ReceivedGrid,
    pub noise: ReceivedGrid,
}

/// Reconstructs the per-stream composition of a received grid from the
/// equivalent gains and the transmitted symbols; the noise component is the
/// residual `y - signal - interference`.
pub fn decompose_received(
    gains: &EquivalentGains,
    symbols: &SymbolGrid,
    y: &ReceivedGrid,
) -> Result<SignalParts> {
    if gains.users != y.users
        || gains.subcarriers != y.subcarriers
        || symbols.users() != y.users
        || symbols.subcarriers() != y.subcarriers
        || symbols.frames() != y.frames
    {
        return Err(Error::Dimension(
            "gains, symbols, and received grid shapes do not match".into(),
        ));
    }
    let mut signal = ReceivedGrid::zeros(y.users, y.subcarriers, y.frames);
    let mut interference = ReceivedGrid::zeros(y.users, y.subcarriers, y.frames);
    let mut noise = ReceivedGrid::zeros(y.users, y.subcarriers, y.frames);
    for k in 0..y.users {
        for n in 0..y.subcarriers {
            let row = gains.row(k, n);
            let start = (k * y.subcarriers + n) * y.frames;
            for q in 0..y.frames {
                let sig = row[k] * symbols.at(n, k, q);
                let mut intf = Complex64::new(0.0, 0.0);
                for (m, &g) in row.iter().enumerate() {
                    if m != k {
                        intf += g * symbols.at(n, m, q);
                    }
                }
                signal.values[start + q] = sig;
                interference.values[start + q] = intf;
                noise.values[start + q] = y.values[start + q] - sig - intf;
            }
        }
    }
    Ok(SignalParts {
        signal,
        interference,
        noise,
    })
}

/// Sample statistics of one trial's equalized estimates, per (user,
/// subcarrier) in row-major user x subcarrier order.
#[derive(Clone, Debug, Serialize)]
pub struct EmpiricalMetrics {
    /// Mean over frames of |r_hat - r|^2.
    pub mse: Vec<f64>,
    /// Signal power over interference-plus-noise power, from the received
    /// samples' decomposition (equalizer-invariant).
    pub sinr: Vec<f64>,
}

/// Per-(user, subcarrier) empirical MSE and SINR estimates.
pub fn empirical_metrics(
    r_hat: &SymbolGrid,
    reference: &SymbolGrid,
    parts: &SignalParts,
) -> Result<EmpiricalMetrics> {
    if r_hat.users() != reference.users()
        || r_hat.subcarriers() != reference.subcarriers()
        || r_hat.frames() != reference.frames()
        || parts.signal.users != r_hat.users()
        || parts.signal.subcarriers != r_hat.subcarriers()
        || parts.signal.frames != r_hat.frames()
    {
        return Err(Error::Dimension(
            "estimates, reference symbols, and decomposition shapes do not match".into(),
        ));
    }
    let users = r_hat.users();
    let subcarriers = r_hat.subcarriers();
    let frames = r_hat.frames() as f64;
    let mut mse = vec![0.0; users * subcarriers];
    let mut sinr = vec![0.0; users * subcarriers];
    for k in 0..users {
        for n in 0..subcarriers {
            let est = r_hat.stream(n, k);
            let refs = reference.stream(n, k);
            let err: f64 = est
                .iter()
                .zip(refs)
                .map(|(&a, &b)| (a - b).norm_sqr())
                .sum();
            let sig: f64 = parts.signal.stream(k, n).iter().map(|v| v.norm_sqr()).sum();
            let intf: f64 = parts
                .interference
                .stream(k, n)
                .iter()
                .map(|v| v.norm_sqr())
                .sum();
            let nse: f64 = parts.noise.stream(k, n).iter().map(|v| v.norm_sqr()).sum();
            mse[k * subcarriers + n] = err / frames;
            sinr[k * subcarriers + n] = sig / (intf + nse);
        }
    }
    Ok(EmpiricalMetrics { mse, sinr })
}

/// Everything one trial produced: analytical predictions from the true
/// equivalent channel, their empirical counterparts, genie-evaluated rates,
/// and enough metadata to reproduce the trial exactly. Per-(user,
/// subcarrier) vectors are row-major user x subcarrier.
#[derive(Clone, Debug, Serialize)]
pub struct LinkReport {
    pub scheme: Scheme,
    pub seed: u64,
    pub stream_index: u64,
    pub scenario_hash: u64,
    pub users: usize,
    pub subcarriers: usize,
    pub antennas: usize,
    pub frames: usize,
    pub snr_db: f64,
    pub noise_variance: f64,
    /// Measured NMSE of the channel estimate the transmitter worked from.
    pub realized_nmse: f64,
    pub power: PowerScaleReport,
    /// MSE of the genie MMSE equalizer, from the true equivalent gains.
    pub analytical_mse: Vec<f64>,
    pub analytical_sinr: Vec<f64>,
    /// Per-entry rate log2(1 + sinr) in bits/s/Hz.
    pub analytical_rate: Vec<f64>,
    pub empirical_mse: Vec<f64>,
    pub empirical_sinr: Vec<f64>,
    /// Per-user achievable rate averaged over subcarriers, genie-evaluated
    /// against the true channel (no transmit clipping folded in).
    pub rate_per_user: Vec<f64>,
    pub sum_rate: f64,
    pub min_user_rate: f64,
}

fn solve_scheme(
    cfg: &ScenarioConfig,
    scheme: Scheme,
    h_hat: &ChannelTensor,
    exec: Execution,
) -> Result<Beamformer> {
    match scheme {
        Scheme::Rzf => {
            let per_power = cfg.total_power / cfg.subcarriers as f64;
            let mats = (0..cfg.subcarriers)
                .map(|n| {
                    rzf_precoder(&h_hat.subcarrier_matrix(n), cfg.noise_variance(), per_power)
                })
                .collect::<Result<Vec<_>>>()?;
            Beamformer::new(mats)
        }
        Scheme::WmmseNaive => {
            Ok(wmmse_solve_with(h_hat, &cfg.wmmse_config(false)?, exec)?.beamformer)
        }
        Scheme::WmmseRobust => {
            Ok(wmmse_solve_with(h_hat, &cfg.wmmse_config(true)?, exec)?.beamformer)
        }
    }
}

/// Runs one complete trial: channel draw, CSI-error injection,
/// scheme-dependent beamformer solve from the estimate, symbol transmission
/// under the power budget, propagation with noise, genie equalization, and
/// metric extraction. Substreams: 0 channel paths, 1 CSI error, 2 symbols,
/// 3 noise.
pub fn run_trial(cfg: &ScenarioConfig, scheme: Scheme, src: RandomSource) -> Result<LinkReport> {
    run_trial_with(cfg, scheme, src, Execution::Parallel)
}

/// [`run_trial`] with an explicit execution strategy for the solver (the
/// report is bit-identical either way).
pub fn run_trial_with(
    cfg: &ScenarioConfig,
    scheme: Scheme,
    src: RandomSource,
    exec: Execution,
) -> Result<LinkReport> {
    cfg.validate()?;
    let geom = cfg.geometry()?;
    let spec = cfg.multipath_spec()?;
    let model = cfg.error_model()?;
    let sigma2 = cfg.noise_variance();

    let mut rng_paths = src.substream(0).rng();
    let h = generate_channel_tensor(&mut rng_paths, cfg.users, &spec, &geom)?;
    let mut rng_error = src.substream(1).rng();
    let h_hat = inject_csi_error(&mut rng_error, &h, &model)?;
    let realized_nmse = nmse(&h, &h_hat)?;

    let beams = solve_scheme(cfg, scheme, &h_hat, exec)?;

    let mut rng_symbols = src.substream(2).rng();
    let symbols = random_symbols(
        &mut rng_symbols,
        cfg.users,
        cfg.subcarriers,
        cfg.frames,
        cfg.symbols,
    )?;
    let x_model = apply_precoding(&beams, &symbols)?;
    let (x, power) = power_normalize(&x_model, cfg.total_power)?;
    debug_assert!(x.frob_norm_sq() <= cfg.frames as f64 * cfg.total_power + 1e-9);

    let mut rng_noise = src.substream(3).rng();
    let y = propagate(&mut rng_noise, &h, &x, sigma2)?;

    let gains = equivalent_gains(&h, &beams, power.scale)?;
    let equalizers = genie_equalizers(&gains, sigma2);
    let r_hat = equalize_estimate(&y, &equalizers)?;
    let parts = decompose_received(&gains, &symbols, &y)?;
    let empirical = empirical_metrics(&r_hat, &symbols, &parts)?;

    let entries = cfg.users * cfg.subcarriers;
    let mut analytical_mse = vec![0.0; entries];
    let mut analytical_sinr = vec![0.0; entries];
    let mut analytical_rate = vec![0.0; entries];
    for k in 0..cfg.users {
        for n in 0..cfg.subcarriers {
            let row = gains.row(k, n);
            let total: f64 = row.iter().map(|g| g.norm_sqr()).sum::<f64>() + sigma2;
            let eps = 1.0 - row[k].norm_sqr() / total;
            let (gamma, rate) = sinr_and_rate(eps)?;
            let i = k * cfg.subcarriers + n;
            analytical_mse[i] = eps;
            analytical_sinr[i] = gamma;
            analytical_rate[i] = rate;
        }
    }

    let rates = evaluate_sum_rate(&h, &beams, sigma2)?;
    let min_user_rate = rates
        .per_user
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);

    Ok(LinkReport {
        scheme,
        seed: src.seed,
        stream_index: src.stream_index,
        scenario_hash: cfg.scenario_hash(),
        users: cfg.users,
        subcarriers: cfg.subcarriers,
        antennas: cfg.antennas(),
        frames: cfg.frames,
        snr_db: cfg.snr_db,
        noise_variance: sigma2,
        realized_nmse,
        power,
        analytical_mse,
        analytical_sinr,
        analytical_rate,
        empirical_mse: empirical.mse,
        empirical_sinr: empirical.sinr,
        rate_per_user: rates.per_user,
        sum_rate: rates.sum,
        min_user_rate,
    })
}

/// Runs `cfg.trials` independent trials of one scheme; trial t draws from
/// stream index t of the scenario seed. Under parallel execution the trials
/// spread across threads, each solving sequentially; reports are
/// bit-identical to a sequential run.
pub fn run_trials(
    cfg: &ScenarioConfig,
    scheme: Scheme,
    exec: Execution,
) -> Result<Vec<LinkReport>> {
    cfg.validate()?;
    let results = map_indexed(exec, cfg.trials as usize, |t| {
        run_trial_with(
            cfg,
            scheme,
            RandomSource::new(cfg.seed, t as u64),
            Execution::Sequential,
        )
    });
    results.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::CMat;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rng_for(seed: u64, stream: u64) -> Prng {
        RandomSource::new(seed, stream).rng()
    }

    #[test]
    fn qpsk_symbols_have_exact_unit_modulus() {
        let mut rng = rng_for(7, 0);
        let s = random_symbols(&mut rng, 3, 4, 50, SymbolKind::Qpsk).unwrap();
        assert!(s.unit_power());
        for &v in s.data() {
            assert_eq!(v.norm_sqr(), 1.0);
        }
        // All four constellation points should appear in 600 draws.
        for point in [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)] {
            assert!(s.data().iter().any(|&v| v == point));
        }
    }

    #[test]
    fn gaussian_symbols_have_unit_second_moment() {
        let mut rng = rng_for(8, 0);
        let s = random_symbols(&mut rng, 2, 5, 10_000, SymbolKind::UnitGaussian).unwrap();
        let m2: f64 =
            s.data().iter().map(|v| v.norm_sqr()).sum::<f64>() / s.data().len() as f64;
        assert!((0.99..=1.01).contains(&m2), "second moment {m2}");
    }

    #[test]
    fn symbols_are_deterministic_under_a_fixed_stream() {
        let a = random_symbols(&mut rng_for(3, 5), 2, 3, 16, SymbolKind::UnitGaussian).unwrap();
        let b = random_symbols(&mut rng_for(3, 5), 2, 3, 16, SymbolKind::UnitGaussian).unwrap();
        assert_eq!(a, b);
        let other = random_symbols(&mut rng_for(3, 6), 2, 3, 16, SymbolKind::UnitGaussian).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn precoding_matches_the_explicit_product() {
        // Single user, single frame, two antennas: f = [1, j]^T, s = 2.
        let f_n = CMat::from_rows(2, 1, vec![c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        let f = Beamformer::new(vec![f_n]).unwrap();
        let s = SymbolGrid::from_values(1, 1, 1, vec![c(2.0, 0.0)]).unwrap();
        let x = apply_precoding(&f, &s).unwrap();
        assert_eq!(x.at(0, 0, 0), c(2.0, 0.0));
        assert_eq!(x.at(0, 1, 0), c(0.0, 2.0));

        let zero = SymbolGrid::zeros(1, 1, 1);
        let x0 = apply_precoding(&f, &zero).unwrap();
        assert!(x0.data().iter().all(|&v| v == c(0.0, 0.0)));
    }

    #[test]
    fn precoding_is_linear_on_integer_grids() {
        // Integer-valued entries keep every product and sum exact, so
        // distributivity holds bitwise.
        let mut rng = rng_for(11, 0);
        use rand::Rng as _;
        let mut int_c = |bound: i32| {
            c(
                rng.gen_range(-bound..=bound) as f64,
                rng.gen_range(-bound..=bound) as f64,
            )
        };
        let (users, antennas, subcarriers, frames) = (2, 3, 2, 4);
        let mats = (0..subcarriers)
            .map(|_| {
                CMat::from_rows(
                    antennas,
                    users,
                    (0..antennas * users).map(|_| int_c(3)).collect(),
                )
                .unwrap()
            })
            .collect();
        let f = Beamformer::new(mats).unwrap();
        let count = subcarriers * users * frames;
        let s1 = SymbolGrid::from_values(
            subcarriers,
            users,
            frames,
            (0..count).map(|_| int_c(5)).collect(),
        )
        .unwrap();
        let s2 = SymbolGrid::from_values(
            subcarriers,
            users,
            frames,
            (0..count).map(|_| int_c(5)).collect(),
        )
        .unwrap();
        let sum_values: Vec<Complex64> = s1
            .data()
            .iter()
            .zip(s2.data())
            .map(|(&a, &b)| a + b)
            .collect();
        let s_sum = SymbolGrid::from_values(subcarriers, users, frames, sum_values).unwrap();
        let x_sum = apply_precoding(&f, &s_sum).unwrap();
        let x1 = apply_precoding(&f, &s1).unwrap();
        let x2 = apply_precoding(&f, &s2).unwrap();
        for i in 0..x_sum.data().len() {
            assert_eq!(x_sum.data()[i], x1.data()[i] + x2.data()[i]);
        }
    }

    #[test]
    fn precoding_rejects_mismatched_shapes() {
        let f_n = CMat::from_rows(2, 1, vec![c(1.0, 0.0), c(0.0, 1.0)]).unwrap();
        let f = Beamformer::new(vec![f_n]).unwrap();
        let s = SymbolGrid::zeros(1, 2, 1);
        assert!(matches!(
            apply_precoding(&f, &s),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn hybrid_combine_matches_the_weighted_sum() {
        let mut rng = rng_for(12, 0);
        let values = sample_complex_gaussian(&mut rng, 2 * 3 * 4, 1.0).unwrap();
        let x_m = TransmitGrid::from_values(2, 3, 4, values.clone()).unwrap();
        let x_d =
            TransmitGrid::from_values(2, 3, 4, sample_complex_gaussian(&mut rng, 24, 1.0).unwrap())
                .unwrap();

        // Model-branch only is the default and passes the branch through.
        let model_only = hybrid_combine(&x_d, &x_m, &HybridCombineConfig::default()).unwrap();
        for (a, b) in model_only.data().iter().zip(x_m.data()) {
            assert_eq!(a, b);
        }

        // Equal halves of the same grid reproduce it.
        let halves = HybridCombineConfig::new(0.5, 0.5).unwrap();
        let same = hybrid_combine(&x_m, &x_m, &halves).unwrap();
        for (a, b) in same.data().iter().zip(x_m.data()) {
            assert_eq!(a, b);
        }

        // General weights match the direct entrywise sum.
        let cfg = HybridCombineConfig::new(0.3, -1.2).unwrap();
        let combined = hybrid_combine(&x_d, &x_m, &cfg).unwrap();
        for i in 0..combined.data().len() {
            let want = 0.3 * x_d.data()[i] + (-1.2) * x_m.data()[i];
            assert_eq!(combined.data()[i], want);
        }

        assert!(HybridCombineConfig::new(0.0, 0.0).is_err());
        let wrong = TransmitGrid::zeros(2, 3, 5);
        assert!(hybrid_combine(&wrong, &x_m, &cfg).is_err());
    }

    #[test]
    fn power_normalize_passes_through_below_budget() {
        // Q = 4, P_t = 1: budget 4. A grid with norm^2 = 1 stays untouched.
        let mut rng = rng_for(13, 0);
        let mut values = sample_complex_gaussian(&mut rng, 8, 1.0).unwrap();
        let norm: f64 = values.iter().map(|v| v.norm_sqr()).sum::<f64>();
        for v in values.iter_mut() {
            *v /= norm.sqrt();
        }
        let x = TransmitGrid::from_values(1, 2, 4, values).unwrap();
        let (out, report) = power_normalize(&x, 1.0).unwrap();
        assert_eq!(report.scale, 1.0);
        assert!(!report.clipped);
        assert!(!report.zero_input);
        for (a, b) in out.data().iter().zip(x.data()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn power_normalize_clips_to_the_budget() {
        // Q = 2, P_t = 2: budget 4, limit 2. One entry of magnitude 4 is
        // scaled by exactly 0.5.
        let mut x = TransmitGrid::zeros(1, 1, 2);
        x.set(0, 0, 0, c(4.0, 0.0));
        let (out, report) = power_normalize(&x, 2.0).unwrap();
        assert_eq!(report.scale, 0.5);
        assert!(report.clipped);
        assert_eq!(out.at(0, 0, 0), c(2.0, 0.0));
        assert!((out.frob_norm_sq() - 4.0).abs() < 1e-12);

        // Contract bound holds for arbitrary inputs.
        let mut rng = rng_for(14, 0);
        for trial in 0..50 {
            let scale = 10f64.powf((trial % 7) as f64 - 3.0);
            let mut values = sample_complex_gaussian(&mut rng, 3 * 2 * 5, 1.0).unwrap();
            for v in values.iter_mut() {
                *v *= scale;
            }
            let grid = TransmitGrid::from_values(3, 2, 5, values).unwrap();
            let (out, _) = power_normalize(&grid, 0.7).unwrap();
            assert!(out.frob_norm_sq() <= 5.0 * 0.7 + 1e-9);
        }
    }

    #[test]
    fn power_normalize_flags_zero_input() {
        let x = TransmitGrid::zeros(2, 2, 3);
        let (out, report) = power_normalize(&x, 1.0).unwrap();
        assert!(report.zero_input);
        assert!(!report.clipped);
        assert_eq!(report.input_norm_sq, 0.0);
        assert!(out.data().iter().all(|&v| v == c(0.0, 0.0)));
        assert!(power_normalize(&x, 0.0).is_err());
    }

    #[test]
    fn propagate_without_noise_is_the_exact_inner_product() {
        // One user, one subcarrier, two antennas, one frame: hand-computed
        // h^H x with h = [1+j, 2], x = [3, j]:
        // conj(1+j)*3 + conj(2)*j = (3 - 3j) + 2j = 3 - j.
        let mut h = ChannelTensor::zeros(1, 1, 2);
        h.vector_mut(0, 0).copy_from_slice(&[c(1.0, 1.0), c(2.0, 0.0)]);
        let x = TransmitGrid::from_values(1, 2, 1, vec![c(3.0, 0.0), c(0.0, 1.0)]).unwrap();
        let mut rng = rng_for(15, 0);
        let y = propagate(&mut rng, &h, &x, 0.0).unwrap();
        assert_eq!(y.at(0, 0, 0), c(3.0, -1.0));
    }

    #[test]
    fn pure_noise_has_the_requested_variance() {
        let x = TransmitGrid::zeros(1, 1, 100_000);
        let h = {
            let mut h = ChannelTensor::zeros(1, 1, 1);
            h.vector_mut(0, 0)[0] = c(1.0, 0.0);
            h
        };
        let mut rng = rng_for(16, 0);
        let y = propagate(&mut rng, &h, &x, 0.04).unwrap();
        let var: f64 =
            y.data().iter().map(|v| v.norm_sqr()).sum::<f64>() / y.data().len() as f64;
        assert!((var - 0.04).abs() < 0.02 * 0.04, "variance {var}");
    }

    #[test]
    fn noise_is_uncorrelated_with_the_signal() {
        // Correlate the noiseless received signal with the injected noise
        // over 10^5 samples; the normalized coefficient must be small.
        let frames = 100_000;
        let mut rng = rng_for(17, 0);
        let mut h = ChannelTensor::zeros(1, 1, 2);
        let hv = sample_complex_gaussian(&mut rng, 2, 1.0).unwrap();
        h.vector_mut(0, 0).copy_from_slice(&hv);
        let x = TransmitGrid::from_values(
            1,
            2,
            frames,
            sample_complex_gaussian(&mut rng, 2 * frames, 1.0).unwrap(),
        )
        .unwrap();
        let mut rng_clean = rng_for(18, 0);
        let clean = propagate(&mut rng_clean, &h, &x, 0.0).unwrap();
        let mut rng_noisy = rng_for(18, 0);
        let noisy = propagate(&mut rng_noisy, &h, &x, 0.25).unwrap();
        let mut cross = c(0.0, 0.0);
        let mut sig_pow = 0.0;
        let mut noise_pow = 0.0;
        for (s, y) in clean.data().iter().zip(noisy.data()) {
            let z = y - s;
            cross += s.conj() * z;
            sig_pow += s.norm_sqr();
            noise_pow += z.norm_sqr();
        }
        let coeff = cross.norm() / (sig_pow.sqrt() * noise_pow.sqrt());
        assert!(coeff < 0.01, "correlation {coeff}");
    }

    #[test]
    fn equalize_applies_the_scalar_per_stream() {
        let mut y = ReceivedGrid::zeros(2, 1, 2);
        y.set(0, 0, 0, c(1.0, 2.0));
        y.set(0, 0, 1, c(-1.0, 0.5));
        y.set(1, 0, 0, c(0.0, 3.0));
        y.set(1, 0, 1, c(2.0, 2.0));

        let zero = EqualizerSet::zeros(2, 1);
        let r0 = equalize_estimate(&y, &zero).unwrap();
        assert!(r0.data().iter().all(|&v| v == c(0.0, 0.0)));

        let mut ones = EqualizerSet::zeros(2, 1);
        ones.set(0, 0, c(1.0, 0.0));
        ones.set(1, 0, c(1.0, 0.0));
        let r1 = equalize_estimate(&y, &ones).unwrap();
        for k in 0..2 {
            for q in 0..2 {
                assert_eq!(r1.at(0, k, q), y.at(k, 0, q));
            }
        }

        // Doubling the equalizer doubles the estimate exactly.
        let mut e = EqualizerSet::zeros(2, 1);
        e.set(0, 0, c(0.3, -0.7));
        e.set(1, 0, c(-1.1, 0.2));
        let mut e2 = EqualizerSet::zeros(2, 1);
        e2.set(0, 0, 2.0 * e.at(0, 0));
        e2.set(1, 0, 2.0 * e.at(1, 0));
        let r = equalize_estimate(&y, &e).unwrap();
        let rr = equalize_estimate(&y, &e2).unwrap();
        for (a, b) in rr.data().iter().zip(r.data()) {
            assert_eq!(*a, 2.0 * b);
        }
    }

    #[test]
    fn noiseless_single_user_link_recovers_symbols() {
        // With true CSI, no noise, and one user there is no interference:
        // the genie equalizer inverts the equivalent scalar exactly.
        let mut rng = rng_for(19, 0);
        let antennas = 4;
        let mut h = ChannelTensor::zeros(1, 2, antennas);
        for n in 0..2 {
            let hv = sample_complex_gaussian(&mut rng, antennas, 1.0).unwrap();
            h.vector_mut(0, n).copy_from_slice(&hv);
        }
        // Matched-filter beam per subcarrier, unit power.
        let mats = (0..2)
            .map(|n| {
                let hv = h.vector(0, n);
                let norm = hv.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                CMat::from_rows(antennas, 1, hv.iter().map(|v| v / norm).collect()).unwrap()
            })
            .collect();
        let f = Beamformer::new(mats).unwrap();
        let symbols = random_symbols(&mut rng, 1, 2, 64, SymbolKind::Qpsk).unwrap();
        let x = apply_precoding(&f, &symbols).unwrap();
        let mut rng_noise = rng_for(19, 1);
        let y = propagate(&mut rng_noise, &h, &x, 0.0).unwrap();

        // r_hat = e * h^H f * r for any equalizer; with e = 1 the estimate
        // is the symbol scaled by the equivalent gain.
        let gains = equivalent_gains(&h, &f, 1.0).unwrap();
        let mut ones = EqualizerSet::zeros(1, 2);
        ones.set(0, 0, c(1.0, 0.0));
        ones.set(0, 1, c(1.0, 0.0));
        let raw = equalize_estimate(&y, &ones).unwrap();
        for n in 0..2 {
            let g = gains.at(0, n, 0);
            for q in 0..64 {
                let want = g * symbols.at(n, 0, q);
                assert!((raw.at(n, 0, q) - want).norm() < 1e-12);
            }
        }

        // The genie equalizer (sigma^2 = 0, no interference) is 1/g up to
        // conjugation algebra, so the symbols come back exactly.
        let e = genie_equalizers(&gains, 0.0);
        let r_hat = equalize_estimate(&y, &e).unwrap();
        for n in 0..2 {
            for q in 0..64 {
                assert!((r_hat.at(n, 0, q) - symbols.at(n, 0, q)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn decomposition_reconstructs_the_received_grid() {
        let mut cfg = ScenarioConfig::baseline();
        cfg.users = 3;
        cfg.n_y = 2;
        cfg.n_z = 2;
        cfg.subcarriers = 4;
        cfg.frames = 8;
        cfg.max_delay = Some(2.0);
        cfg.target_nmse = Some(0.1);
        let src = RandomSource::new(42, 0);
        let report_inputs = || -> (ChannelTensor, Beamformer, SymbolGrid, ReceivedGrid, f64) {
            let geom = cfg.geometry().unwrap();
            let spec = cfg.multipath_spec().unwrap();
            let mut rng = src.substream(0).rng();
            let h = generate_channel_tensor(&mut rng, cfg.users, &spec, &geom).unwrap();
            let f = solve_scheme(&cfg, Scheme::Rzf, &h, Execution::Sequential).unwrap();
            let mut rng_s = src.substream(2).rng();
            let s = random_symbols(&mut rng_s, 3, 4, 8, SymbolKind::UnitGaussian).unwrap();
            let x = apply_precoding(&f, &s).unwrap();
            let (x, rep) = power_normalize(&x, cfg.total_power).unwrap();
            let mut rng_n = src.substream(3).rng();
            let y = propagate(&mut rng_n, &h, &x, cfg.noise_variance()).unwrap();
            (h, f, s, y, rep.scale)
        };
        let (h, f, s, y, scale) = report_inputs();
        let gains = equivalent_gains(&h, &f, scale).unwrap();
        let parts = decompose_received(&gains, &s, &y).unwrap();
        for i in 0..y.data().len() {
            let sum = parts.signal.data()[i] + parts.interference.data()[i]
                + parts.noise.data()[i];
            assert!((sum - y.data()[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn empirical_metrics_hit_the_trivial_cases() {
        let mut rng = rng_for(20, 0);
        let s = random_symbols(&mut rng, 2, 3, 200, SymbolKind::Qpsk).unwrap();
        let parts = SignalParts {
            signal: ReceivedGrid::zeros(2, 3, 200),
            interference: ReceivedGrid::zeros(2, 3, 200),
            noise: ReceivedGrid::zeros(2, 3, 200),
        };
        // Perfect estimates: zero MSE.
        let perfect = empirical_metrics(&s, &s, &parts).unwrap();
        assert!(perfect.mse.iter().all(|&m| m == 0.0));
        // Zero estimates of unit-modulus symbols: MSE exactly 1.
        let zero = SymbolGrid::zeros(3, 2, 200);
        let silent = empirical_metrics(&zero, &s, &parts).unwrap();
        assert!(silent.mse.iter().all(|&m| m == 1.0));
    }

    fn tiny_scenario() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::baseline();
        cfg.users = 2;
        cfg.n_y = 2;
        cfg.n_z = 2;
        cfg.subcarriers = 4;
        cfg.frames = 32;
        cfg.iterations = 4;
        cfg.max_delay = Some(2.0);
        cfg
    }

    #[test]
    fn perfect_csi_makes_naive_and_robust_coincide() {
        let mut cfg = tiny_scenario();
        cfg.target_nmse = Some(0.0);
        let a = run_trial(&cfg, Scheme::WmmseNaive, RandomSource::new(5, 0)).unwrap();
        let b = run_trial(&cfg, Scheme::WmmseRobust, RandomSource::new(5, 0)).unwrap();
        assert_eq!(a.realized_nmse, 0.0);
        assert_eq!(a.analytical_mse, b.analytical_mse);
        assert_eq!(a.empirical_mse, b.empirical_mse);
        assert_eq!(a.empirical_sinr, b.empirical_sinr);
        assert_eq!(a.rate_per_user, b.rate_per_user);
        assert_eq!(a.sum_rate, b.sum_rate);
    }

    #[test]
    fn fixed_seed_reports_serialize_identically() {
        let mut cfg = tiny_scenario();
        cfg.target_nmse = Some(0.05);
        let a = run_trial(&cfg, Scheme::WmmseRobust, RandomSource::new(9, 3)).unwrap();
        let b = run_trial_with(
            &cfg,
            Scheme::WmmseRobust,
            RandomSource::new(9, 3),
            Execution::Sequential,
        )
        .unwrap();
        let ja = serde_json::to_string(&a).unwrap();
        let jb = serde_json::to_string(&b).unwrap();
        assert_eq!(ja, jb);
        assert_eq!(a.stream_index, 3);
        assert_eq!(a.scenario_hash, cfg.scenario_hash());
    }

    #[test]
    fn trial_batches_match_across_execution_strategies() {
        let mut cfg = tiny_scenario();
        cfg.trials = 3;
        cfg.target_nmse = Some(0.02);
        let par = run_trials(&cfg, Scheme::Rzf, Execution::Parallel).unwrap();
        let seq = run_trials(&cfg, Scheme::Rzf, Execution::Sequential).unwrap();
        assert_eq!(par.len(), 3);
        for (a, b) in par.iter().zip(&seq) {
            assert_eq!(
                serde_json::to_string(a).unwrap(),
                serde_json::to_string(b).unwrap()
            );
        }
        // Distinct trials see distinct channels.
        assert_ne!(par[0].sum_rate, par[1].sum_rate);
    }

    #[test]
    fn genie_trial_empirical_metrics_track_the_analytical_ones() {
        // True CSI and the genie equalizer: the empirical MSE and SINR of
        // each (user, subcarrier) stream estimate their analytical values.
        let mut cfg = tiny_scenario();
        cfg.frames = 6000;
        cfg.snr_db = 10.0;
        let report = run_trial(&cfg, Scheme::WmmseRobust, RandomSource::new(31, 0)).unwrap();
        assert!(!report.power.clipped || report.power.scale <= 1.0);
        for i in 0..report.analytical_mse.len() {
            let rel = (report.empirical_mse[i] - report.analytical_mse[i]).abs()
                / report.analytical_mse[i];
            assert!(
                rel < 0.10,
                "entry {i}: empirical {} vs analytical {}",
                report.empirical_mse[i],
                report.analytical_mse[i]
            );
            let rel_s = (report.empirical_sinr[i] - report.analytical_sinr[i]).abs()
                / report.analytical_sinr[i];
            assert!(rel_s < 0.15, "sinr entry {i} off by {rel_s}");
        }
        // Analytical identities inside the report.
        for i in 0..report.analytical_mse.len() {
            let eps = report.analytical_mse[i];
            assert!((report.analytical_sinr[i] - (1.0 / eps - 1.0)).abs() < 1e-9);
            assert!((report.analytical_rate[i] + eps.log2()).abs() < 1e-9);
        }
    }

    #[test]
    fn transmit_grids_respect_the_power_budget_across_schemes() {
        let mut cfg = tiny_scenario();
        cfg.target_nmse = Some(0.1);
        for scheme in [Scheme::Rzf, Scheme::WmmseNaive, Scheme::WmmseRobust] {
            for t in 0..3u64 {
                let report = run_trial(&cfg, scheme, RandomSource::new(77, t)).unwrap();
                // scale <= 1 always; clipping implies the input was over.
                assert!(report.power.scale <= 1.0);
                if report.power.clipped {
                    assert!(
                        report.power.input_norm_sq
                            > cfg.frames as f64 * cfg.total_power
                    );
                } else {
                    assert_eq!(report.power.scale, 1.0);
                }
            }
        }
    }
}
