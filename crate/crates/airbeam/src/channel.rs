//! Sparse multipath channel generation for uniform planar arrays, plus
//! estimation-error injection with calibrated NMSE.
//!
//! A user's frequency response on subcarrier `n` is the path sum
//!
//! ```text
//! h[k,n] = (1/sqrt(L_k)) * sum_l gain_l * a(az_l, ze_l) * exp(-j*2*pi*n*delay_l / (N_c*T_s))
//! ```
//!
//! with complex-normal path gains, azimuth uniform on [-pi, pi], zenith
//! uniform on [0, pi/4], and delays uniform on [0, max_delay]. Since the
//! steering vector has unit-modulus entries and E|gain|^2 = 1, the expected
//! squared norm of every `h[k,n]` equals the antenna count — which is what
//! lets a scaled-identity error covariance hit an NMSE target exactly in
//! expectation.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::tensor::{psd_factor_lower, sample_complex_gaussian, CMat, ComplexTensor, Prng};

/// Uniform planar array in the y-z plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArrayGeometry {
    /// Elements along the horizontal axis.
    pub n_y: usize,
    /// Elements along the vertical axis.
    pub n_z: usize,
    /// Element spacing in wavelengths (0.5 = the usual half wavelength).
    pub spacing_over_wavelength: f64,
}

impl ArrayGeometry {
    pub fn new(n_y: usize, n_z: usize, spacing_over_wavelength: f64) -> Result<Self> {
        if n_y == 0 || n_z == 0 {
            return Err(Error::Config(format!(
                "array must have at least one element per axis, got {n_y}x{n_z}"
            )));
        }
        if !(spacing_over_wavelength > 0.0) || !spacing_over_wavelength.is_finite() {
            return Err(Error::Config(format!(
                "spacing_over_wavelength must be positive and finite, got {spacing_over_wavelength}"
            )));
        }
        Ok(Self {
            n_y,
            n_z,
            spacing_over_wavelength,
        })
    }

    pub fn half_wavelength(n_y: usize, n_z: usize) -> Result<Self> {
        Self::new(n_y, n_z, 0.5)
    }

    pub fn num_antennas(&self) -> usize {
        self.n_y * self.n_z
    }
}

/// One propagation path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathParams {
    pub gain: Complex64,
    /// Azimuth angle of departure, radians in [-pi, pi].
    pub azimuth: f64,
    /// Zenith angle of departure, radians in [0, pi/4].
    pub zenith: f64,
    /// Path delay in the same unit as the sampling interval, in [0, max_delay].
    pub delay: f64,
}

/// Multipath ensemble parameters shared by all draws.
#[derive(Clone, Debug, PartialEq)]
pub struct MultipathSpec {
    /// Path count per user; index k describes user k.
    pub paths_per_user: Vec<usize>,
    /// Sampling interval T_s (sets the delay unit).
    pub sampling_interval: f64,
    pub num_subcarriers: usize,
    /// Upper edge of the uniform delay distribution; must stay inside one
    /// OFDM symbol (max_delay < N_c * T_s).
    pub max_delay: f64,
}

impl MultipathSpec {
    pub fn new(
        paths_per_user: Vec<usize>,
        sampling_interval: f64,
        num_subcarriers: usize,
        max_delay: f64,
    ) -> Result<Self> {
        if paths_per_user.is_empty() || paths_per_user.iter().any(|&l| l == 0) {
            return Err(Error::Config(
                "paths_per_user entries must all be at least 1".into(),
            ));
        }
        if !(sampling_interval > 0.0) || !sampling_interval.is_finite() {
            return Err(Error::Config(format!(
                "sampling_interval must be positive, got {sampling_interval}"
            )));
        }
        if num_subcarriers == 0 {
            return Err(Error::Config("num_subcarriers must be at least 1".into()));
        }
        if !(max_delay >= 0.0) || !max_delay.is_finite() {
            return Err(Error::Config(format!(
                "max_delay must be nonnegative, got {max_delay}"
            )));
        }
        if max_delay >= num_subcarriers as f64 * sampling_interval {
            return Err(Error::Config(format!(
                "max_delay {max_delay} must be below N_c * T_s = {}",
                num_subcarriers as f64 * sampling_interval
            )));
        }
        Ok(Self {
            paths_per_user,
            sampling_interval,
            num_subcarriers,
            max_delay,
        })
    }

    /// Same path count for every one of `users` users.
    pub fn uniform(
        users: usize,
        paths: usize,
        sampling_interval: f64,
        num_subcarriers: usize,
        max_delay: f64,
    ) -> Result<Self> {
        Self::new(
            vec![paths; users],
            sampling_interval,
            num_subcarriers,
            max_delay,
        )
    }
}

/// Frequency-domain channel for all users: users x subcarriers x antennas.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelTensor {
    users: usize,
    subcarriers: usize,
    antennas: usize,
    values: ComplexTensor,
}

impl ChannelTensor {
    pub fn zeros(users: usize, subcarriers: usize, antennas: usize) -> Self {
        Self {
            users,
            subcarriers,
            antennas,
            values: ComplexTensor::zeros(&[users, subcarriers, antennas]),
        }
    }

    pub fn from_tensor(values: ComplexTensor) -> Result<Self> {
        let shape = values.shape();
        if shape.len() != 3 {
            return Err(Error::Dimension(format!(
                "channel tensor must be rank 3 (users, subcarriers, antennas), got {shape:?}"
            )));
        }
        Ok(Self {
            users: shape[0],
            subcarriers: shape[1],
            antennas: shape[2],
            values,
        })
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn values(&self) -> &ComplexTensor {
        &self.values
    }

    /// Channel vector of user `k` on subcarrier `n` (contiguous, length N_t).
    #[inline]
    pub fn vector(&self, k: usize, n: usize) -> &[Complex64] {
        debug_assert!(k < self.users && n < self.subcarriers);
        let off = (k * self.subcarriers + n) * self.antennas;
        &self.values.data()[off..off + self.antennas]
    }

    pub fn vector_mut(&mut self, k: usize, n: usize) -> &mut [Complex64] {
        let off = (k * self.subcarriers + n) * self.antennas;
        &mut self.values.data_mut()[off..off + self.antennas]
    }

    /// The K x N_t matrix of user rows on subcarrier `n`.
    pub fn subcarrier_matrix(&self, n: usize) -> CMat {
        let mut m = CMat::zeros(self.users, self.antennas);
        for k in 0..self.users {
            m.row_mut(k).copy_from_slice(self.vector(k, n));
        }
        m
    }

    pub fn frob_norm_sq(&self) -> f64 {
        self.values.frob_norm_sq()
    }
}

/// Channel-estimation error statistics: a shared per-vector covariance and
/// the NMSE level it was calibrated to.
#[derive(Clone, Debug)]
pub struct CsiErrorModel {
    covariance: CMat,
    /// Cached lower factor of the covariance, used for sampling.
    factor: CMat,
    target_nmse: f64,
}

impl CsiErrorModel {
    /// Scaled-identity covariance `target_nmse * I`. Because every channel
    /// vector has expected squared norm N_t, this attains the NMSE target in
    /// expectation regardless of the multipath parameters.
    pub fn scaled_identity(antennas: usize, target_nmse: f64) -> Result<Self> {
        if !(target_nmse >= 0.0) || !target_nmse.is_finite() {
            return Err(Error::Domain(format!(
                "target_nmse must be nonnegative and finite, got {target_nmse}"
            )));
        }
        let mut covariance = CMat::identity(antennas);
        covariance.scale(target_nmse);
        let mut factor = CMat::identity(antennas);
        factor.scale(target_nmse.sqrt());
        Ok(Self {
            covariance,
            factor,
            target_nmse,
        })
    }

    /// Arbitrary Hermitian positive-semidefinite covariance (correlated
    /// error); `target_nmse` records the calibration used to build it.
    pub fn from_covariance(covariance: CMat, target_nmse: f64) -> Result<Self> {
        if covariance.rows() != covariance.cols() {
            return Err(Error::Dimension(format!(
                "error covariance must be square, got {}x{}",
                covariance.rows(),
                covariance.cols()
            )));
        }
        let factor = psd_factor_lower(&covariance, 1e-12)?;
        Ok(Self {
            covariance,
            factor,
            target_nmse,
        })
    }

    pub fn covariance(&self) -> &CMat {
        &self.covariance
    }

    pub fn target_nmse(&self) -> f64 {
        self.target_nmse
    }

    pub fn antennas(&self) -> usize {
        self.covariance.rows()
    }
}

/// Transmit steering vector of the planar array toward (azimuth, zenith).
///
/// Entry (n, m) — n along y, m along z, flattened as `n * n_z + m` — carries
/// phase `2*pi*spacing*(n*sin(az)*cos(ze) + m*sin(ze))`; the first entry is
/// exactly 1 and all entries have unit modulus.
pub fn steering_vector(azimuth: f64, zenith: f64, geom: &ArrayGeometry) -> Vec<Complex64> {
    let phase_y = 2.0 * PI * geom.spacing_over_wavelength * azimuth.sin() * zenith.cos();
    let phase_z = 2.0 * PI * geom.spacing_over_wavelength * zenith.sin();
    let mut v = Vec::with_capacity(geom.num_antennas());
    for n in 0..geom.n_y {
        for m in 0..geom.n_z {
            let phase = phase_y * n as f64 + phase_z * m as f64;
            v.push(Complex64::from_polar(1.0, phase));
        }
    }
    v
}

/// Draws the path set of user `k`: per path, a CN(0,1) gain (two normal
/// draws), then uniform azimuth, zenith, and delay, in that fixed order.
pub fn draw_paths(rng: &mut Prng, spec: &MultipathSpec, k: usize) -> Result<Vec<PathParams>> {
    use rand::Rng as _;
    let Some(&count) = spec.paths_per_user.get(k) else {
        return Err(Error::Dimension(format!(
            "user index {k} outside the {}-user multipath spec",
            spec.paths_per_user.len()
        )));
    };
    let mut paths = Vec::with_capacity(count);
    for _ in 0..count {
        let gain = sample_complex_gaussian(rng, 1, 1.0)?[0];
        let azimuth = rng.gen_range(-PI..=PI);
        let zenith = rng.gen_range(0.0..=PI / 4.0);
        let delay = if spec.max_delay > 0.0 {
            rng.gen_range(0.0..=spec.max_delay)
        } else {
            0.0
        };
        paths.push(PathParams {
            gain,
            azimuth,
            zenith,
            delay,
        });
    }
    Ok(paths)
}

/// Frequency response (N_c x N_t) of one user's path set.
pub fn frequency_response(paths: &[PathParams], spec: &MultipathSpec, geom: &ArrayGeometry) -> CMat {
    let n_c = spec.num_subcarriers;
    let n_t = geom.num_antennas();
    let mut h = CMat::zeros(n_c, n_t);
    if paths.is_empty() {
        return h;
    }
    let norm = 1.0 / (paths.len() as f64).sqrt();
    let symbol_span = n_c as f64 * spec.sampling_interval;
    for p in paths {
        let a = steering_vector(p.azimuth, p.zenith, geom);
        let scaled_gain = p.gain * norm;
        for n in 0..n_c {
            let phase = -2.0 * PI * n as f64 * p.delay / symbol_span;
            let w = scaled_gain * Complex64::from_polar(1.0, phase);
            let row = h.row_mut(n);
            for (t, &at) in a.iter().enumerate() {
                row[t] += w * at;
            }
        }
    }
    h
}

/// Stacks independent per-user path draws into the full channel tensor.
/// Users are drawn in index order from the single stream `rng`.
pub fn generate_channel_tensor(
    rng: &mut Prng,
    users: usize,
    spec: &MultipathSpec,
    geom: &ArrayGeometry,
) -> Result<ChannelTensor> {
    if spec.paths_per_user.len() != users {
        return Err(Error::Dimension(format!(
            "multipath spec describes {} users, requested {users}",
            spec.paths_per_user.len()
        )));
    }
    let mut out = ChannelTensor::zeros(users, spec.num_subcarriers, geom.num_antennas());
    for k in 0..users {
        let paths = draw_paths(rng, spec, k)?;
        let h = frequency_response(&paths, spec, geom);
        for n in 0..spec.num_subcarriers {
            out.vector_mut(k, n).copy_from_slice(h.row(n));
        }
    }
    Ok(out)
}

/// Subtracts a fresh error draw from the true channel: `h_hat = h - dh` with
/// `dh ~ CN(0, R_e)` independently per (user, subcarrier), so the true
/// channel decomposes as estimate plus error. Errors are drawn in (k, n)
/// row-major order, N_t standard draws each.
pub fn inject_csi_error(
    rng: &mut Prng,
    h: &ChannelTensor,
    model: &CsiErrorModel,
) -> Result<ChannelTensor> {
    if model.antennas() != h.antennas() {
        return Err(Error::Dimension(format!(
            "error covariance is {}x{} but the channel has {} antennas",
            model.antennas(),
            model.antennas(),
            h.antennas()
        )));
    }
    let n_t = h.antennas();
    let l = &model.factor;
    let mut out = h.clone();
    for k in 0..h.users() {
        for n in 0..h.subcarriers() {
            let g = sample_complex_gaussian(rng, n_t, 1.0)?;
            let dst = out.vector_mut(k, n);
            // dh = L g; L is lower triangular.
            for i in 0..n_t {
                let mut dh = Complex64::new(0.0, 0.0);
                for j in 0..=i {
                    dh += l.at(i, j) * g[j];
                }
                dst[i] -= dh;
            }
        }
    }
    Ok(out)
}

/// Normalized mean-square error between a channel and its estimate:
/// `||h - h_hat||_F^2 / ||h||_F^2`.
pub fn nmse(h: &ChannelTensor, h_hat: &ChannelTensor) -> Result<f64> {
    if h.values().shape() != h_hat.values().shape() {
        return Err(Error::Dimension(format!(
            "channel {:?} and estimate {:?} shapes differ",
            h.values().shape(),
            h_hat.values().shape()
        )));
    }
    let denom = h.frob_norm_sq();
    if denom == 0.0 {
        return Err(Error::Domain(
            "nmse is undefined for an all-zero reference channel".into(),
        ));
    }
    let num: f64 = h
        .values()
        .data()
        .iter()
        .zip(h_hat.values().data())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    Ok(num / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::RandomSource;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn test_spec(users: usize, n_c: usize) -> MultipathSpec {
        MultipathSpec::uniform(users, 2, 1.0, n_c, 16.0f64.min(n_c as f64 - 0.5)).unwrap()
    }

    #[test]
    fn steering_broadside_is_all_ones() {
        let geom = ArrayGeometry::half_wavelength(8, 8).unwrap();
        let v = steering_vector(0.0, 0.0, &geom);
        assert_eq!(v.len(), 64);
        assert!(v.iter().all(|&z| z == c(1.0, 0.0)));
    }

    #[test]
    fn steering_two_element_endfire_alternates_sign() {
        let geom = ArrayGeometry::half_wavelength(2, 1).unwrap();
        let v = steering_vector(PI / 2.0, 0.0, &geom);
        assert_eq!(v[0], c(1.0, 0.0));
        assert!((v[1] - c(-1.0, 0.0)).norm() < 1e-12, "got {:?}", v[1]);
    }

    #[test]
    fn steering_entries_have_unit_modulus() {
        let geom = ArrayGeometry::new(4, 3, 0.5).unwrap();
        let mut rng = RandomSource::new(5, 0).rng();
        use rand::Rng as _;
        for _ in 0..200 {
            let az = rng.gen_range(-PI..=PI);
            let ze = rng.gen_range(0.0..=PI / 4.0);
            let v = steering_vector(az, ze, &geom);
            assert_eq!(v.len(), 12);
            assert_eq!(v[0], c(1.0, 0.0));
            for z in &v {
                assert!((z.norm() - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn draw_paths_respects_ranges_and_count() {
        let spec = MultipathSpec::uniform(2, 3, 0.5, 32, 8.0).unwrap();
        let mut rng = RandomSource::new(21, 0).rng();
        for _ in 0..500 {
            let paths = draw_paths(&mut rng, &spec, 1).unwrap();
            assert_eq!(paths.len(), 3);
            for p in paths {
                assert!((-PI..=PI).contains(&p.azimuth));
                assert!((0.0..=PI / 4.0).contains(&p.zenith));
                assert!((0.0..=8.0).contains(&p.delay));
            }
        }
        assert!(draw_paths(&mut rng, &spec, 2).is_err(), "user out of range");
    }

    #[test]
    fn path_gains_are_unit_variance() {
        let spec = MultipathSpec::uniform(1, 1, 1.0, 8, 4.0).unwrap();
        let mut rng = RandomSource::new(33, 0).rng();
        let mut acc = 0.0;
        let draws = 10_000;
        for _ in 0..draws {
            acc += draw_paths(&mut rng, &spec, 0).unwrap()[0].gain.norm_sqr();
        }
        let m2 = acc / draws as f64;
        assert!((0.98..=1.02).contains(&m2), "gain second moment {m2:.4}");
    }

    #[test]
    fn single_zero_delay_path_repeats_steering_on_every_subcarrier() {
        let geom = ArrayGeometry::half_wavelength(4, 2).unwrap();
        let spec = MultipathSpec::uniform(1, 1, 1.0, 8, 4.0).unwrap();
        let paths = [PathParams {
            gain: c(1.0, 0.0),
            azimuth: 0.7,
            zenith: 0.2,
            delay: 0.0,
        }];
        let h = frequency_response(&paths, &spec, &geom);
        let a = steering_vector(0.7, 0.2, &geom);
        for n in 0..8 {
            assert_eq!(h.row(n), &a[..], "subcarrier {n}");
        }
    }

    #[test]
    fn opposite_phase_paths_cancel_on_the_half_band_subcarrier() {
        // Two identical paths, delays 0 and 1 sample, N_c = 8: on subcarrier
        // n = 4 the second path arrives rotated by pi and the row vanishes.
        let geom = ArrayGeometry::half_wavelength(3, 3).unwrap();
        let spec = MultipathSpec::uniform(1, 2, 1.0, 8, 4.0).unwrap();
        let mk = |delay: f64| PathParams {
            gain: c(1.0, 0.0),
            azimuth: -0.4,
            zenith: 0.1,
            delay,
        };
        let h = frequency_response(&[mk(0.0), mk(1.0)], &spec, &geom);
        let cancel: f64 = h.row(4).iter().map(|z| z.norm_sqr()).sum();
        assert!(cancel <= 1e-20, "row 4 should cancel, |.|^2 = {cancel:.3e}");
        let full: f64 = h.row(0).iter().map(|z| z.norm_sqr()).sum();
        assert!((full - 2.0 * 9.0).abs() < 1e-9, "row 0 adds coherently");
    }

    #[test]
    fn channel_norm_concentrates_at_antenna_count() {
        // Pooled E||h[k,n]||^2 over many draws of the 64-antenna scenario
        // lands within 2% of N_t = 64.
        let geom = ArrayGeometry::half_wavelength(8, 8).unwrap();
        let spec = test_spec(4, 4);
        let mut rng = RandomSource::new(2024, 0).rng();
        let mut acc = 0.0;
        let mut count = 0usize;
        for _ in 0..2000 {
            let h = generate_channel_tensor(&mut rng, 4, &spec, &geom).unwrap();
            for k in 0..4 {
                for n in 0..4 {
                    acc += h.vector(k, n).iter().map(|z| z.norm_sqr()).sum::<f64>();
                    count += 1;
                }
            }
        }
        let mean = acc / count as f64;
        assert!(
            (62.72..=65.28).contains(&mean),
            "mean ||h||^2 = {mean:.3}, want 64 +- 2%"
        );
    }

    #[test]
    fn generation_is_deterministic_per_stream() {
        let geom = ArrayGeometry::half_wavelength(4, 4).unwrap();
        let spec = test_spec(3, 8);
        let a = generate_channel_tensor(&mut RandomSource::new(77, 4).rng(), 3, &spec, &geom)
            .unwrap();
        let b = generate_channel_tensor(&mut RandomSource::new(77, 4).rng(), 3, &spec, &geom)
            .unwrap();
        assert_eq!(a, b);
        let c = generate_channel_tensor(&mut RandomSource::new(77, 5).rng(), 3, &spec, &geom)
            .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn users_are_statistically_independent() {
        let geom = ArrayGeometry::half_wavelength(8, 8).unwrap();
        let spec = test_spec(2, 1);
        let mut rng = RandomSource::new(11, 0).rng();
        let mut cross = c(0.0, 0.0);
        let mut p1 = 0.0;
        let mut p2 = 0.0;
        for _ in 0..1000 {
            let h = generate_channel_tensor(&mut rng, 2, &spec, &geom).unwrap();
            let (u1, u2) = (h.vector(0, 0), h.vector(1, 0));
            cross += crate::tensor::dot_h(u1, u2);
            p1 += u1.iter().map(|z| z.norm_sqr()).sum::<f64>();
            p2 += u2.iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        let corr = cross.norm() / (p1 * p2).sqrt();
        assert!(corr < 0.05, "cross-user correlation {corr:.4}");
    }

    #[test]
    fn zero_target_nmse_reproduces_the_channel_exactly() {
        let geom = ArrayGeometry::half_wavelength(4, 2).unwrap();
        let spec = test_spec(2, 4);
        let h = generate_channel_tensor(&mut RandomSource::new(3, 0).rng(), 2, &spec, &geom)
            .unwrap();
        let model = CsiErrorModel::scaled_identity(8, 0.0).unwrap();
        let h_hat = inject_csi_error(&mut RandomSource::new(3, 1).rng(), &h, &model).unwrap();
        assert_eq!(h, h_hat);
    }

    #[test]
    fn injected_error_hits_the_nmse_target() {
        // Pooled empirical NMSE over 1e3 draws at sigma_e^2 = 0.02 stays in
        // [0.018, 0.022].
        let geom = ArrayGeometry::half_wavelength(4, 4).unwrap();
        let spec = test_spec(2, 8);
        let model = CsiErrorModel::scaled_identity(16, 0.02).unwrap();
        let mut rng_h = RandomSource::new(8, 0).rng();
        let mut rng_e = RandomSource::new(8, 1).rng();
        let mut num = 0.0;
        let mut den = 0.0;
        for _ in 0..1000 {
            let h = generate_channel_tensor(&mut rng_h, 2, &spec, &geom).unwrap();
            let h_hat = inject_csi_error(&mut rng_e, &h, &model).unwrap();
            num += h
                .values()
                .data()
                .iter()
                .zip(h_hat.values().data())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>();
            den += h.frob_norm_sq();
        }
        let empirical = num / den;
        assert!(
            (0.018..=0.022).contains(&empirical),
            "pooled NMSE {empirical:.5}, want 0.02 +- 10%"
        );
    }

    #[test]
    fn estimate_plus_error_reconstructs_the_channel() {
        let geom = ArrayGeometry::half_wavelength(3, 2).unwrap();
        let spec = test_spec(1, 4);
        let h = generate_channel_tensor(&mut RandomSource::new(5, 0).rng(), 1, &spec, &geom)
            .unwrap();
        let model = CsiErrorModel::scaled_identity(6, 0.1).unwrap();
        let h_hat = inject_csi_error(&mut RandomSource::new(5, 1).rng(), &h, &model).unwrap();
        // dh recovered as h - h_hat must add back to h within rounding.
        for (i, (a, b)) in h
            .values()
            .data()
            .iter()
            .zip(h_hat.values().data())
            .enumerate()
        {
            let dh = a - b;
            let back = b + dh;
            assert!((back - a).norm() <= 1e-14 * a.norm().max(1.0), "entry {i}");
        }
        // Determinism of the injection stream.
        let again = inject_csi_error(&mut RandomSource::new(5, 1).rng(), &h, &model).unwrap();
        assert_eq!(h_hat, again);
    }

    #[test]
    fn correlated_error_model_matches_its_covariance() {
        // Rank-deficient covariance: errors must stay in the span and carry
        // the right total power.
        let n_t = 4;
        let v = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)];
        let mut cov = CMat::zeros(n_t, n_t);
        for r in 0..n_t {
            for cl in 0..n_t {
                cov.set(r, cl, v[r] * v[cl].conj() * 0.25);
            }
        }
        for i in 0..n_t {
            let d = cov.at(i, i);
            cov.set(i, i, c(d.re, 0.0));
        }
        let model = CsiErrorModel::from_covariance(cov, 0.25).unwrap();
        let geom = ArrayGeometry::half_wavelength(2, 2).unwrap();
        let spec = test_spec(1, 2);
        let mut rng_h = RandomSource::new(6, 0).rng();
        let mut rng_e = RandomSource::new(6, 1).rng();
        let mut power = 0.0;
        let mut count = 0;
        for _ in 0..2000 {
            let h = generate_channel_tensor(&mut rng_h, 1, &spec, &geom).unwrap();
            let h_hat = inject_csi_error(&mut rng_e, &h, &model).unwrap();
            for (a, b) in h.values().data().iter().zip(h_hat.values().data()) {
                power += (a - b).norm_sqr();
            }
            count += h.values().data().len();
        }
        let per_entry = power / count as f64;
        // Trace of the covariance is 1.0 over 4 antennas = 0.25 per entry.
        assert!(
            (0.24..=0.26).contains(&per_entry),
            "per-entry error power {per_entry:.4}"
        );
    }

    #[test]
    fn nmse_matches_definition_and_rejects_zero_reference() {
        let mut h = ChannelTensor::zeros(1, 1, 2);
        assert!(matches!(
            nmse(&h, &h.clone()),
            Err(Error::Domain(_))
        ));
        h.vector_mut(0, 0).copy_from_slice(&[c(3.0, 0.0), c(0.0, 4.0)]);
        let mut h_hat = h.clone();
        h_hat.vector_mut(0, 0)[0] = c(2.0, 0.0);
        // ||diff||^2 = 1, ||h||^2 = 25.
        assert!((nmse(&h, &h_hat).unwrap() - 0.04).abs() < 1e-15);
    }

    #[test]
    fn spec_validation_rejects_bad_parameters() {
        assert!(MultipathSpec::uniform(2, 0, 1.0, 8, 4.0).is_err());
        assert!(MultipathSpec::uniform(2, 1, 0.0, 8, 4.0).is_err());
        assert!(MultipathSpec::uniform(2, 1, 1.0, 8, 8.0).is_err(), "delay spread = symbol span");
        assert!(ArrayGeometry::new(0, 4, 0.5).is_err());
        assert!(ArrayGeometry::new(4, 4, 0.0).is_err());
        assert!(CsiErrorModel::scaled_identity(4, -0.1).is_err());
    }
}
