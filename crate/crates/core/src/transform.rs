//! 𝔏- and 𝔏*-Fourier transforms on the model grid, their inverses, the
//! Plancherel pairing, Riesz-bound estimation and 𝔏-convolution.
//!
//! `f̂(j) = ⟨f, v_j⟩` and `f̂_*(j) = ⟨f, u_j⟩`. On the grid both reduce to a
//! plain DFT of `f` weighted by `c⁻¹h^{-x}` (resp. `c h^{x}`), which is exact
//! whenever the weighted samples are a trigonometric polynomial of degree
//! below `N_x / 2`, i.e. on `span{u_j}` (resp. `span{v_j}`).

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::FftPair;
use crate::model::{FrequencyWindow, ModelSystem};
use crate::numeric::{complex_normal, seeded_rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransformKind {
    /// entries are `⟨f, v_j⟩`, synthesized with `u_j`
    L,
    /// entries are `⟨f, u_j⟩`, synthesized with `v_j`
    LStar,
}

/// Samples of a function on the model grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("grid function has non-finite entries".into()));
        }
        Ok(Self { values })
    }

    pub fn from_fn<F: Fn(f64) -> Complex64>(system: &ModelSystem, f: F) -> Self {
        Self {
            values: system.grid().nodes().map(f).collect(),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs_diff(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn zip_with<F: Fn(Complex64, Complex64) -> Complex64>(&self, other: &GridFunction, f: F) -> Self {
        Self {
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Self {
        Self {
            values: self.values.iter().map(|&a| f(a)).collect(),
        }
    }
}

/// Spectral coefficients over the symmetric window, tagged by transform kind.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    kind: TransformKind,
    window: FrequencyWindow,
    values: Vec<Complex64>,
}

impl CoefficientVector {
    pub fn new(kind: TransformKind, window: FrequencyWindow, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != window.len() {
            return Err(Error::GeometryMismatch(format!(
                "coefficient vector has {} entries, window needs {}",
                values.len(),
                window.len()
            )));
        }
        Ok(Self { kind, window, values })
    }

    pub fn zeros(kind: TransformKind, window: FrequencyWindow) -> Self {
        Self {
            kind,
            window,
            values: vec![Complex64::new(0.0, 0.0); window.len()],
        }
    }

    /// Unit vector `e_j`.
    pub fn unit(kind: TransformKind, window: FrequencyWindow, j: i64) -> Self {
        let mut v = Self::zeros(kind, window);
        if let Some(p) = window.position(j) {
            v.values[p] = Complex64::new(1.0, 0.0);
        }
        v
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    pub fn window(&self) -> FrequencyWindow {
        self.window
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn get(&self, j: i64) -> Complex64 {
        self.window
            .position(j)
            .map(|p| self.values[p])
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn set(&mut self, j: i64, z: Complex64) {
        if let Some(p) = self.window.position(j) {
            self.values[p] = z;
        }
    }

    pub fn to_dvector(&self) -> DVector<Complex64> {
        DVector::from_column_slice(&self.values)
    }

    pub fn with_values(&self, values: Vec<Complex64>) -> Result<Self> {
        Self::new(self.kind, self.window, values)
    }

    pub fn max_abs_diff(&self, other: &CoefficientVector) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Energy of the weighted DFT outside the window (transform truncation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub tail_energy: f64,
    pub total_energy: f64,
    pub relative_tail: f64,
}

/// Extremes of `(Σ|f̂|²)^{1/2} / ‖f‖` over random band-limited samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RieszBounds {
    pub m1_est: f64,
    pub m2_est: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Transform engine bound to one model system; caches the FFT plan, grid
/// weights and the u-family Gram matrix.
#[derive(Debug)]
pub struct Transform {
    system: ModelSystem,
    fft: FftPair,
    u_weight: Vec<f64>,
    v_weight: Vec<f64>,
    gram: OnceLock<DMatrix<Complex64>>,
    gram_factor: OnceLock<DMatrix<Complex64>>,
}

impl Clone for Transform {
    fn clone(&self) -> Self {
        Self::new(self.system)
    }
}

impl Transform {
    pub fn new(system: ModelSystem) -> Self {
        let spec = system.spec();
        let c = spec.norm_const();
        let lh = spec.log_h();
        let u_weight = system.grid().nodes().map(|x| c * (x * lh).exp()).collect();
        let v_weight = system.grid().nodes().map(|x| (-x * lh).exp() / c).collect();
        Self {
            fft: FftPair::new(system.grid().len()),
            system,
            u_weight,
            v_weight,
            gram: OnceLock::new(),
            gram_factor: OnceLock::new(),
        }
    }

    pub fn system(&self) -> &ModelSystem {
        &self.system
    }

    pub fn window(&self) -> FrequencyWindow {
        self.system.window()
    }

    pub fn fft(&self) -> &FftPair {
        &self.fft
    }

    /// `c h^{x_k}`: `u_j(x_k) = c h^{x_k} e^{2πi j x_k}`.
    pub fn u_weight(&self) -> &[f64] {
        &self.u_weight
    }

    /// `c⁻¹ h^{-x_k}`.
    pub fn v_weight(&self) -> &[f64] {
        &self.v_weight
    }

    fn check_grid(&self, f: &GridFunction) -> Result<()> {
        if f.len() != self.system.grid().len() {
            return Err(Error::GeometryMismatch(format!(
                "grid function has {} samples, grid has {}",
                f.len(),
                self.system.grid().len()
            )));
        }
        Ok(())
    }

    fn weighted_dft(&self, f: &GridFunction, weight: &[f64]) -> Vec<Complex64> {
        let n = f.len() as f64;
        let mut buf: Vec<Complex64> = f.values.iter().zip(weight).map(|(z, w)| z * w).collect();
        self.fft.forward(&mut buf);
        buf.iter_mut().for_each(|z| *z /= n);
        buf
    }

    fn windowed(&self, spectrum: &[Complex64], kind: TransformKind) -> CoefficientVector {
        let w = self.window();
        let values = w.indices().map(|j| spectrum[self.fft.bin(j)]).collect();
        CoefficientVector { kind, window: w, values }
    }

    /// `f̂(j) = ⟨f, v_j⟩`, uniform-grid rule.
    pub fn forward_l(&self, f: &GridFunction) -> Result<CoefficientVector> {
        self.check_grid(f)?;
        let s = self.weighted_dft(f, &self.v_weight);
        Ok(self.windowed(&s, TransformKind::L))
    }

    /// `f̂_*(j) = ⟨f, u_j⟩`, uniform-grid rule (exact on `span{v_j}`).
    pub fn forward_lstar(&self, f: &GridFunction) -> Result<CoefficientVector> {
        self.check_grid(f)?;
        let s = self.weighted_dft(f, &self.u_weight);
        Ok(self.windowed(&s, TransformKind::LStar))
    }

    fn synthesize(&self, a: &CoefficientVector, weight: &[f64]) -> GridFunction {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.fft.len()];
        for (j, z) in a.window.indices().zip(&a.values) {
            buf[self.fft.bin(j)] += z;
        }
        self.fft.inverse(&mut buf);
        for (z, w) in buf.iter_mut().zip(weight) {
            *z *= w;
        }
        GridFunction { values: buf }
    }

    fn check_coeffs(&self, a: &CoefficientVector, kind: TransformKind) -> Result<()> {
        if a.kind != kind {
            return Err(Error::KindMismatch {
                expected: kind,
                actual: a.kind,
            });
        }
        if a.window != self.window() {
            return Err(Error::GeometryMismatch("coefficient window differs from model window".into()));
        }
        Ok(())
    }

    /// `f = Σ a(j) u_j`.
    pub fn inverse_l(&self, a: &CoefficientVector) -> Result<GridFunction> {
        self.check_coeffs(a, TransformKind::L)?;
        Ok(self.synthesize(a, &self.u_weight))
    }

    /// `f = Σ a(j) v_j`.
    pub fn inverse_lstar(&self, a: &CoefficientVector) -> Result<GridFunction> {
        self.check_coeffs(a, TransformKind::LStar)?;
        Ok(self.synthesize(a, &self.v_weight))
    }

    /// Tail energy of the weighted DFT beyond the window, for user-supplied
    /// samples that need not lie in the window span.
    pub fn truncation_report(&self, f: &GridFunction, kind: TransformKind) -> Result<TruncationReport> {
        self.check_grid(f)?;
        let weight = match kind {
            TransformKind::L => &self.v_weight,
            TransformKind::LStar => &self.u_weight,
        };
        let s = self.weighted_dft(f, weight);
        let w = self.window();
        let mut tail = 0.0;
        let mut total = 0.0;
        for (m, z) in s.iter().enumerate() {
            let e = z.norm_sqr();
            total += e;
            if !w.contains(self.fft.signed_frequency(m)) {
                tail += e;
            }
        }
        Ok(TruncationReport {
            tail_energy: tail,
            total_energy: total,
            relative_tail: if total > 0.0 { tail / total } else { 0.0 },
        })
    }

    /// Gram matrix `G[p, q] = ⟨u_q, u_p⟩` over the window (closed form).
    pub fn u_gram(&self) -> &DMatrix<Complex64> {
        self.gram.get_or_init(|| {
            let w = self.window();
            let spec = self.system.spec();
            let n = w.len();
            DMatrix::from_fn(n, n, |p, q| spec.u_gram(w.index_at(q), w.index_at(p)))
        })
    }

    /// Lower Cholesky factor `L` of the Gram matrix, `G = L Lᴴ`. Coordinates
    /// `b = Lᴴ a` are L²-orthonormal; an operator matrix `M` becomes
    /// `Lᴴ M L⁻ᴴ`. The Gram matrix is Hermitian positive definite for every
    /// Riesz basis, so the factorization cannot fail on a valid system.
    pub fn gram_factor(&self) -> &DMatrix<Complex64> {
        self.gram_factor.get_or_init(|| {
            nalgebra::Cholesky::new(self.u_gram().clone())
                .expect("u-family Gram matrix is positive definite")
                .l()
        })
    }

    /// Exact `⟨f, u_j⟩` for `f = Σ a(j) u_j` in the window span.
    pub fn lstar_of_u_span(&self, a: &CoefficientVector) -> Result<CoefficientVector> {
        self.check_coeffs(a, TransformKind::L)?;
        let b = self.u_gram() * a.to_dvector();
        CoefficientVector::new(TransformKind::LStar, a.window, b.iter().copied().collect())
    }

    /// `⟨f, g⟩_{L²}` for `f = Σ a u_j`, `g = Σ b u_j`.
    pub fn inner_u_span(&self, a: &CoefficientVector, b: &CoefficientVector) -> Result<Complex64> {
        self.check_coeffs(a, TransformKind::L)?;
        self.check_coeffs(b, TransformKind::L)?;
        let ga = self.u_gram() * a.to_dvector();
        Ok(b.to_dvector().dotc(&ga))
    }

    pub fn norm_u_span(&self, a: &CoefficientVector) -> Result<f64> {
        Ok(self.inner_u_span(a, a)?.re.max(0.0).sqrt())
    }

    /// `Σ_j f̂(j) conj(ĝ_*(j))`; `ĝ_*` is taken exactly from the window-span
    /// expansion of `g`.
    pub fn plancherel_pairing(&self, f: &GridFunction, g: &GridFunction) -> Result<Complex64> {
        let a = self.forward_l(f)?;
        let gs = self.lstar_of_u_span(&self.forward_l(g)?)?;
        Ok(a.values.iter().zip(&gs.values).map(|(x, y)| x * y.conj()).sum())
    }

    /// `Σ_j f̂(j) ĝ(j) u_j`.
    pub fn convolve_l(&self, f: &GridFunction, g: &GridFunction) -> Result<GridFunction> {
        let a = self.forward_l(f)?;
        let b = self.forward_l(g)?;
        let prod = a.values.iter().zip(&b.values).map(|(x, y)| x * y).collect();
        self.inverse_l(&CoefficientVector::new(TransformKind::L, a.window, prod)?)
    }

    /// Random coefficients supported on `|j| <= band` (clamped to the window).
    pub fn random_coefficients<R: Rng + ?Sized>(&self, band: usize, rng: &mut R) -> CoefficientVector {
        let w = self.window();
        let band = band.min(w.half_width());
        let values = w
            .indices()
            .map(|j| {
                if j.unsigned_abs() as usize <= band {
                    complex_normal(rng)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        CoefficientVector {
            kind: TransformKind::L,
            window: w,
            values,
        }
    }

    pub fn riesz_bounds(&self, samples: usize, seed: u64) -> Result<RieszBounds> {
        if samples == 0 {
            return Err(Error::InvalidParameter("riesz_bounds needs at least one sample".into()));
        }
        let mut rng = seeded_rng(seed);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for _ in 0..samples {
            let a = self.random_coefficients(self.window().half_width(), &mut rng);
            let r = a.l2_norm() / self.norm_u_span(&a)?;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        Ok(RieszBounds {
            m1_est: lo,
            m2_est: hi,
            samples,
            seed,
        })
    }
}
