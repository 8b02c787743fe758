//! Dense complex tensors, a small matrix kernel, and seeded random streams.
//!
//! Everything downstream (channel draws, beamformer algebra, link grids) is
//! built on the two value types here: [`ComplexTensor`] for rank-N storage and
//! [`CMat`] for 2-D linear algebra. The solver is an in-place Cholesky; sizes
//! in this crate stay at or below a few hundred, where a hand-written kernel
//! is both transparent and fast enough.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Concrete RNG used everywhere. ChaCha gives portable, reproducible draws
/// and cheap independent streams, which the harness maps to trial indices.
pub type Prng = ChaCha12Rng;

/// A (seed, stream) pair identifying one reproducible random stream.
///
/// Equal pairs always replay the same draw sequence; distinct stream indices
/// under one seed are statistically independent. Substreams partition the
/// index space so one logical stream can fan out to up to 16 purposes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RandomSource {
    pub seed: u64,
    pub stream_index: u64,
}

/// Fan-out factor between a logical stream and its purpose substreams.
pub const SUBSTREAMS: u64 = 16;

impl RandomSource {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        Self { seed, stream_index }
    }

    /// Substream `purpose` (< 16) of this logical stream.
    pub fn substream(&self, purpose: u64) -> RandomSource {
        debug_assert!(purpose < SUBSTREAMS);
        RandomSource {
            seed: self.seed,
            stream_index: self.stream_index.wrapping_mul(SUBSTREAMS) + purpose,
        }
    }

    /// Instantiates the generator positioned at the start of the stream.
    pub fn rng(&self) -> Prng {
        let mut rng = Prng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

/// Rank-N complex tensor, row-major (last index fastest).
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexTensor {
    shape: Vec<usize>,
    data: Vec<Complex64>,
}

impl ComplexTensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![Complex64::new(0.0, 0.0); len],
        }
    }

    /// Wraps existing storage; the element count must match the shape.
    pub fn from_parts(shape: Vec<usize>, data: Vec<Complex64>) -> Result<Self> {
        let expect: usize = shape.iter().product();
        if data.len() != expect {
            return Err(Error::Dimension(format!(
                "tensor shape {:?} needs {} entries, got {}",
                shape,
                expect,
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// True when every entry is finite in both components.
    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn frob_norm_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Dense complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.data[r * self.cols + c] = v;
    }

    /// Contiguous view of row `r`.
    #[inline]
    pub fn row(&self, r: usize) -> &[Complex64] {
        debug_assert!(r < self.rows);
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [Complex64] {
        debug_assert!(r < self.rows);
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Column `c` copied out (rows are contiguous, columns are not).
    pub fn col(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self.at(r, c)).collect()
    }

    pub fn set_col(&mut self, c: usize, v: &[Complex64]) {
        debug_assert_eq!(v.len(), self.rows);
        for (r, &x) in v.iter().enumerate() {
            self.set(r, c, x);
        }
    }

    /// Conjugate transpose.
    pub fn hermitian_transpose(&self) -> CMat {
        let mut out = CMat::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.at(r, c).conj());
            }
        }
        out
    }

    /// `self * other`.
    pub fn mul(&self, other: &CMat) -> Result<CMat> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "matmul {}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = CMat::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(r, k);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let orow = other.row(k);
                let out_row = out.row_mut(r);
                for (c, &b) in orow.iter().enumerate() {
                    out_row[c] += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn scale(&mut self, s: f64) {
        for z in &mut self.data {
            *z *= s;
        }
    }

    /// `self += s * other` (shapes must match).
    pub fn add_scaled(&mut self, s: Complex64, other: &CMat) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, &b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += s * b;
        }
    }

    pub fn frob_norm_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest absolute deviation from `A = A^H` relative to the largest entry.
    pub fn hermitian_defect(&self) -> f64 {
        let mut defect: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for r in 0..self.rows {
            for c in r..self.cols.min(self.rows) {
                let a = self.at(r, c);
                let b = self.at(c, r).conj();
                defect = defect.max((a - b).norm());
                scale = scale.max(a.norm()).max(b.norm());
            }
        }
        if scale > 0.0 {
            defect / scale
        } else {
            0.0
        }
    }
}

/// Inner product `a^H b` of two equal-length vectors.
#[inline]
pub fn dot_h(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, y) in a.iter().zip(b.iter()) {
        acc += x.conj() * y;
    }
    acc
}

/// Dense real matrix, row-major; the interchange format for packed data.
#[derive(Clone, Debug, PartialEq)]
pub struct RealMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }
}

/// Splits an R x C complex matrix into an R x 2C real matrix: real parts in
/// the first C columns, imaginary parts in the last C, rows unchanged.
pub fn pack_complex_to_real(m: &CMat) -> RealMatrix {
    let (r, c) = (m.rows(), m.cols());
    let mut out = RealMatrix::zeros(r, 2 * c);
    for i in 0..r {
        for j in 0..c {
            let z = m.at(i, j);
            out.set(i, j, z.re);
            out.set(i, j + c, z.im);
        }
    }
    out
}

/// Inverse of [`pack_complex_to_real`]; the input must have an even column
/// count.
pub fn unpack_real_to_complex(m: &RealMatrix) -> Result<CMat> {
    if m.cols % 2 != 0 {
        return Err(Error::Dimension(format!(
            "cannot unpack a real matrix with odd column count {}",
            m.cols
        )));
    }
    let c = m.cols / 2;
    let mut out = CMat::zeros(m.rows, c);
    for i in 0..m.rows {
        for j in 0..c {
            out.set(i, j, Complex64::new(m.at(i, j), m.at(i, j + c)));
        }
    }
    Ok(out)
}

/// Tolerance for the Hermitian-input check of [`hermitian_solve`].
const HERMITIAN_TOL: f64 = 1e-12;

/// Lower-triangular Cholesky factor of a Hermitian positive-definite matrix.
///
/// Fails with a diagnostic naming the first non-positive pivot; the ratio
/// against the largest diagonal entry doubles as a crude conditioning hint.
pub fn cholesky_lower(a: &CMat) -> Result<CMat> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::Dimension(format!(
            "cholesky needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let max_diag = (0..n).map(|i| a.at(i, i).re).fold(0.0f64, f64::max);
    let mut l = CMat::zeros(n, n);
    for j in 0..n {
        let mut d = a.at(j, j).re;
        for k in 0..j {
            d -= l.at(j, k).norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Numeric(format!(
                "matrix is not positive definite: pivot {j} = {d:.3e} \
                 (max diagonal {max_diag:.3e}, pivot/max ratio {:.3e})",
                if max_diag > 0.0 { d / max_diag } else { f64::NAN }
            )));
        }
        let ljj = d.sqrt();
        l.set(j, j, Complex64::new(ljj, 0.0));
        for i in (j + 1)..n {
            let mut s = a.at(i, j);
            for k in 0..j {
                s -= l.at(i, k) * l.at(j, k).conj();
            }
            l.set(i, j, s / ljj);
        }
    }
    Ok(l)
}

/// Solves `a x = b` for Hermitian positive-definite `a` via Cholesky.
///
/// `b` may have any number of right-hand-side columns. The input must be
/// Hermitian to within 1e-12 (relative to its largest entry); violations are
/// contract errors, non-positive-definite systems are numeric errors.
pub fn hermitian_solve(a: &CMat, b: &CMat) -> Result<CMat> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::Dimension(format!(
            "hermitian_solve needs a square system, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if b.rows() != n {
        return Err(Error::Dimension(format!(
            "right-hand side has {} rows, system is {n}x{n}",
            b.rows()
        )));
    }
    let defect = a.hermitian_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::Contract(format!(
            "matrix is not Hermitian: relative defect {defect:.3e} exceeds {HERMITIAN_TOL:.0e}"
        )));
    }
    let l = cholesky_lower(a)?;
    // Forward substitution L y = b, then back substitution L^H x = y,
    // column by column.
    let mut x = b.clone();
    let nrhs = b.cols();
    for c in 0..nrhs {
        for i in 0..n {
            let mut s = x.at(i, c);
            for k in 0..i {
                s -= l.at(i, k) * x.at(k, c);
            }
            x.set(i, c, s / l.at(i, i).re);
        }
        for i in (0..n).rev() {
            let mut s = x.at(i, c);
            for k in (i + 1)..n {
                s -= l.at(k, i).conj() * x.at(k, c);
            }
            x.set(i, c, s / l.at(i, i).re);
        }
    }
    Ok(x)
}

/// Lower factor `L` with `L L^H ≈ a` for Hermitian positive *semi*definite
/// `a`: zero pivots (within `tol` of the largest diagonal) zero out their
/// column instead of failing. Used to sample from singular covariances.
pub fn psd_factor_lower(a: &CMat, tol: f64) -> Result<CMat> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::Dimension(format!(
            "psd factor needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let defect = a.hermitian_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::Contract(format!(
            "matrix is not Hermitian: relative defect {defect:.3e} exceeds {HERMITIAN_TOL:.0e}"
        )));
    }
    let scale = (0..n).map(|i| a.at(i, i).re).fold(0.0f64, f64::max).max(1.0);
    let cut = tol * scale;
    let mut l = CMat::zeros(n, n);
    for j in 0..n {
        let mut d = a.at(j, j).re;
        for k in 0..j {
            d -= l.at(j, k).norm_sqr();
        }
        if d > cut {
            let ljj = d.sqrt();
            l.set(j, j, Complex64::new(ljj, 0.0));
            for i in (j + 1)..n {
                let mut s = a.at(i, j);
                for k in 0..j {
                    s -= l.at(i, k) * l.at(j, k).conj();
                }
                l.set(i, j, s / ljj);
            }
        } else if d > -cut {
            // Semidefinite pivot: the Schur complement column is zero too.
        } else {
            return Err(Error::Numeric(format!(
                "matrix is not positive semidefinite: pivot {j} = {d:.3e}"
            )));
        }
    }
    Ok(l)
}

/// Draws `n` iid samples of a circularly symmetric complex Gaussian with
/// per-sample variance `variance` (so E|x|^2 = variance; each component has
/// variance/2). A zero variance yields zeros while still consuming the same
/// number of draws, keeping downstream streams aligned.
pub fn sample_complex_gaussian(rng: &mut Prng, n: usize, variance: f64) -> Result<Vec<Complex64>> {
    if !(variance >= 0.0) {
        return Err(Error::Domain(format!(
            "complex Gaussian variance must be nonnegative, got {variance}"
        )));
    }
    let s = (variance / 2.0).sqrt();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        out.push(Complex64::new(s * re, s * im));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Random Hermitian positive-definite matrix G G^H + I.
    fn random_spd(rng: &mut Prng, n: usize) -> CMat {
        let g = sample_complex_gaussian(rng, n * n, 1.0).unwrap();
        let g = CMat::from_parts_for_test(n, n, g);
        let mut a = g.mul(&g.hermitian_transpose()).unwrap();
        for i in 0..n {
            let d = a.at(i, i);
            // The product is Hermitian up to rounding; symmetrize exactly so
            // the solver's contract check cannot trip on build noise.
            a.set(i, i, c(d.re, 0.0));
        }
        for r in 0..n {
            for cidx in (r + 1)..n {
                let v = a.at(r, cidx);
                a.set(cidx, r, v.conj());
            }
        }
        for i in 0..n {
            let d = a.at(i, i);
            a.set(i, i, d + c(1.0, 0.0));
        }
        a
    }

    impl CMat {
        fn from_parts_for_test(rows: usize, cols: usize, data: Vec<Complex64>) -> CMat {
            CMat::from_rows(rows, cols, data).unwrap()
        }
    }

    #[test]
    fn pack_splits_real_and_imaginary_columns() {
        let m = CMat::from_rows(1, 1, vec![c(2.0, 3.0)]).unwrap();
        let r = pack_complex_to_real(&m);
        assert_eq!((r.rows, r.cols), (1, 2));
        assert_eq!(r.data, vec![2.0, 3.0]);
    }

    #[test]
    fn pack_zero_matrix_doubles_columns() {
        let m = CMat::zeros(4, 8);
        let r = pack_complex_to_real(&m);
        assert_eq!((r.rows, r.cols), (4, 16));
        assert!(r.data.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn unpack_selects_component_columns() {
        let mut r = RealMatrix::zeros(1, 2);
        r.set(0, 0, 1.0);
        let m = unpack_real_to_complex(&r).unwrap();
        assert_eq!(m.at(0, 0), c(1.0, 0.0));
        let mut r = RealMatrix::zeros(1, 2);
        r.set(0, 1, 1.0);
        let m = unpack_real_to_complex(&r).unwrap();
        assert_eq!(m.at(0, 0), c(0.0, 1.0));
    }

    #[test]
    fn unpack_rejects_odd_columns() {
        let r = RealMatrix::zeros(3, 5);
        assert!(matches!(
            unpack_real_to_complex(&r),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn pack_unpack_round_trips_bitwise() {
        // Randomized inverse-pair property over shapes and values.
        let mut rng = RandomSource::new(11, 0).rng();
        for _ in 0..50 {
            let rows = rng.gen_range(1..=9usize);
            let cols = rng.gen_range(1..=9usize);
            let data = sample_complex_gaussian(&mut rng, rows * cols, 1.0).unwrap();
            let m = CMat::from_rows(rows, cols, data).unwrap();
            let back = unpack_real_to_complex(&pack_complex_to_real(&m)).unwrap();
            assert_eq!(m, back);
            // And the other composition on a real matrix of even width.
            let repacked = pack_complex_to_real(&back);
            assert_eq!(repacked, pack_complex_to_real(&m));
        }
    }

    #[test]
    fn hermitian_solve_identity_returns_rhs() {
        let a = CMat::identity(4);
        let b = CMat::from_rows(4, 1, vec![c(1.0, 2.0), c(-3.0, 0.5), c(0.0, 0.0), c(4.0, -4.0)])
            .unwrap();
        let x = hermitian_solve(&a, &b).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn hermitian_solve_scaled_identity_scales_back() {
        let mut a = CMat::identity(3);
        a.scale(2.0);
        let b = CMat::from_rows(3, 1, vec![c(2.0, 0.0); 3]).unwrap();
        let x = hermitian_solve(&a, &b).unwrap();
        for i in 0..3 {
            assert!((x.at(i, 0) - c(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn hermitian_solve_residual_small_across_sizes() {
        // Relative residual ||a x - b|| / ||b|| stays below 1e-10 on random
        // SPD systems up to n = 128.
        let mut rng = RandomSource::new(7, 1).rng();
        for &n in &[1usize, 2, 3, 5, 8, 16, 32, 64, 128] {
            let a = random_spd(&mut rng, n);
            let bdata = sample_complex_gaussian(&mut rng, n * 2, 1.0).unwrap();
            let b = CMat::from_rows(n, 2, bdata).unwrap();
            let x = hermitian_solve(&a, &b).unwrap();
            let ax = a.mul(&x).unwrap();
            let mut err = 0.0;
            for (p, q) in ax.data().iter().zip(b.data().iter()) {
                err += (p - q).norm_sqr();
            }
            let rel = (err / b.frob_norm_sq()).sqrt();
            assert!(rel <= 1e-10, "n={n}: relative residual {rel:.3e}");
        }
    }

    #[test]
    fn hermitian_solve_rejects_indefinite_with_diagnostic() {
        let a = CMat::from_rows(
            2,
            2,
            vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
        )
        .unwrap();
        let b = CMat::zeros(2, 1);
        match hermitian_solve(&a, &b) {
            Err(Error::Numeric(msg)) => {
                assert!(msg.contains("pivot 1"), "diagnostic was: {msg}");
            }
            other => panic!("expected numeric error, got {other:?}"),
        }
    }

    #[test]
    fn hermitian_solve_rejects_non_hermitian() {
        let a = CMat::from_rows(
            2,
            2,
            vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        )
        .unwrap();
        let b = CMat::zeros(2, 1);
        assert!(matches!(hermitian_solve(&a, &b), Err(Error::Contract(_))));
    }

    #[test]
    fn psd_factor_handles_singular_covariance() {
        // Rank-1 PSD matrix v v^H: plain Cholesky would fail, the PSD factor
        // must reproduce it.
        let v = [c(1.0, 0.5), c(-0.25, 1.0), c(0.0, -2.0)];
        let mut a = CMat::zeros(3, 3);
        for r in 0..3 {
            for cl in 0..3 {
                a.set(r, cl, v[r] * v[cl].conj());
            }
        }
        for i in 0..3 {
            let d = a.at(i, i);
            a.set(i, i, c(d.re, 0.0));
        }
        let l = psd_factor_lower(&a, 1e-12).unwrap();
        let back = l.mul(&l.hermitian_transpose()).unwrap();
        let mut err = 0.0f64;
        for (p, q) in back.data().iter().zip(a.data().iter()) {
            err = err.max((p - q).norm());
        }
        assert!(err < 1e-10, "reconstruction error {err:.3e}");
        // Zero matrix factors to zero.
        let z = psd_factor_lower(&CMat::zeros(4, 4), 1e-12).unwrap();
        assert!(z.frob_norm_sq() == 0.0);
    }

    #[test]
    fn gaussian_zero_variance_gives_zeros() {
        let mut rng = RandomSource::new(1, 2).rng();
        let v = sample_complex_gaussian(&mut rng, 64, 0.0).unwrap();
        assert!(v.iter().all(|z| z.re == 0.0 && z.im == 0.0));
    }

    #[test]
    fn gaussian_negative_variance_rejected() {
        let mut rng = RandomSource::new(1, 2).rng();
        assert!(matches!(
            sample_complex_gaussian(&mut rng, 4, -1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn gaussian_second_moment_converges() {
        // E|x|^2 over 1e5 draws of CN(0, 1) lands within 2% of 1.
        let mut rng = RandomSource::new(42, 3).rng();
        let v = sample_complex_gaussian(&mut rng, 100_000, 1.0).unwrap();
        let m2 = v.iter().map(|z| z.norm_sqr()).sum::<f64>() / v.len() as f64;
        assert!((0.98..=1.02).contains(&m2), "second moment {m2:.4}");
        // Components are uncorrelated and mean-zero.
        let mean_re = v.iter().map(|z| z.re).sum::<f64>() / v.len() as f64;
        let mean_im = v.iter().map(|z| z.im).sum::<f64>() / v.len() as f64;
        assert!(mean_re.abs() < 0.01 && mean_im.abs() < 0.01);
    }

    #[test]
    fn gaussian_streams_replay_and_differ() {
        let a1 = sample_complex_gaussian(&mut RandomSource::new(9, 5).rng(), 32, 2.0).unwrap();
        let a2 = sample_complex_gaussian(&mut RandomSource::new(9, 5).rng(), 32, 2.0).unwrap();
        assert_eq!(a1, a2, "identical (seed, stream) must replay bitwise");
        let b = sample_complex_gaussian(&mut RandomSource::new(9, 6).rng(), 32, 2.0).unwrap();
        assert_ne!(a1, b, "distinct streams must differ");
        let c = sample_complex_gaussian(&mut RandomSource::new(10, 5).rng(), 32, 2.0).unwrap();
        assert_ne!(a1, c, "distinct seeds must differ");
    }

    #[test]
    fn substreams_partition_the_index_space() {
        let t0 = RandomSource::new(3, 0);
        let t1 = RandomSource::new(3, 1);
        let mut seen = std::collections::HashSet::new();
        for t in [t0, t1] {
            for p in 0..SUBSTREAMS {
                assert!(seen.insert(t.substream(p).stream_index));
            }
        }
    }

    #[test]
    fn tensor_shape_checks() {
        let t = ComplexTensor::zeros(&[2, 3, 4]);
        assert_eq!(t.data().len(), 24);
        assert!(t.is_finite());
        assert!(ComplexTensor::from_parts(vec![2, 2], vec![c(0.0, 0.0); 3]).is_err());
    }
}
