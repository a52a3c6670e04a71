//! The model boundary-value problem `-i d/dx` on (0, 1) with `f(1) = h f(0)`.
//!
//! Its eigenfunctions `u_j(x) = c h^x e^{2πijx}` and the adjoint family
//! `v_j(x) = c⁻¹ h^{-x} e^{2πijx}` form a biorthogonal Riesz basis that
//! generates the whole calculus. Frequencies are truncated to a symmetric
//! window `|j| <= J` and space is sampled on a uniform grid of `[0, 1)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::FftPair;
use crate::numeric::{compensated_sum, fit_slope};

/// Order of the model differential operator.
pub const OPERATOR_ORDER: u32 = 1;

/// Boundary parameter and normalization choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    h: f64,
    normalize_u: bool,
}

impl ModelSpec {
    pub fn new(h: f64, normalize_u: bool) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "boundary parameter h must be positive and finite, got {h}"
            )));
        }
        Ok(Self { h, normalize_u })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn normalize_u(&self) -> bool {
        self.normalize_u
    }

    pub fn log_h(&self) -> f64 {
        self.h.ln()
    }

    /// `∫₀¹ h^{2x} dx`, i.e. `‖h^x‖²`.
    fn h_square_mass(&self) -> f64 {
        let a = 2.0 * self.log_h();
        if a.abs() < 1e-12 {
            1.0 + a / 2.0
        } else {
            a.exp_m1() / a
        }
    }

    /// Scale `c` of the u-family: 1 unless `normalize_u`, in which case
    /// `‖u_j‖ = 1`. The v-family carries `c⁻¹` so biorthogonality is exact.
    pub fn norm_const(&self) -> f64 {
        if self.normalize_u {
            self.h_square_mass().powf(-0.5)
        } else {
            1.0
        }
    }

    /// `λ_j = 2πj - i ln h`.
    pub fn eigenvalue(&self, j: i64) -> Complex64 {
        Complex64::new(2.0 * PI * j as f64, -self.log_h())
    }

    /// `⟨j⟩ = (1 + |λ_j|²)^{1/2}`.
    pub fn bracket(&self, j: i64) -> f64 {
        (1.0 + self.eigenvalue(j).norm_sqr()).sqrt()
    }

    pub fn eval_u(&self, j: i64, x: f64) -> Complex64 {
        let amp = self.norm_const() * (x * self.log_h()).exp();
        Complex64::from_polar(amp, 2.0 * PI * j as f64 * x)
    }

    pub fn eval_v(&self, j: i64, x: f64) -> Complex64 {
        let amp = (-x * self.log_h()).exp() / self.norm_const();
        Complex64::from_polar(amp, 2.0 * PI * j as f64 * x)
    }

    /// Closed-form Gram entry `⟨u_a, u_b⟩_{L²}`.
    pub fn u_gram(&self, a: i64, b: i64) -> Complex64 {
        let c2 = self.norm_const().powi(2);
        gram_entry(2.0 * self.log_h(), a - b) * c2
    }

    /// Closed-form Gram entry `⟨v_a, v_b⟩_{L²}`.
    pub fn v_gram(&self, a: i64, b: i64) -> Complex64 {
        let c2 = self.norm_const().powi(-2);
        gram_entry(-2.0 * self.log_h(), a - b) * c2
    }
}

/// `∫₀¹ e^{(s + 2πin)x} dx` for real s and integer n.
fn gram_entry(s: f64, n: i64) -> Complex64 {
    if n == 0 {
        if s.abs() < 1e-12 {
            return Complex64::new(1.0 + s / 2.0, 0.0);
        }
        return Complex64::new(s.exp_m1() / s, 0.0);
    }
    if s == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    // e^{2πin} = 1, so the numerator is e^s - 1.
    Complex64::new(s.exp_m1(), 0.0) / Complex64::new(s, 2.0 * PI * n as f64)
}

/// Symmetric frequency window `{j : |j| <= J}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrequencyWindow {
    half_width: usize,
}

impl FrequencyWindow {
    pub fn new(half_width: usize) -> Result<Self> {
        if half_width == 0 {
            return Err(Error::InvalidParameter("window half-width J must be positive".into()));
        }
        Ok(Self { half_width })
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn lo(&self) -> i64 {
        -(self.half_width as i64)
    }

    pub fn hi(&self) -> i64 {
        self.half_width as i64
    }

    pub fn len(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, j: i64) -> bool {
        j.unsigned_abs() as usize <= self.half_width
    }

    pub fn position(&self, j: i64) -> Option<usize> {
        self.contains(j).then(|| (j - self.lo()) as usize)
    }

    pub fn index_at(&self, pos: usize) -> i64 {
        self.lo() + pos as i64
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> + Clone {
        self.lo()..=self.hi()
    }
}

/// Uniform grid `x_k = k / N_x`, `k = 0..N_x-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpatialGrid {
    n: usize,
}

impl SpatialGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("grid size N_x must be positive".into()));
        }
        Ok(Self { n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        k as f64 / self.n as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|k| self.node(k))
    }
}

/// Eigen-triple at one index of the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenData {
    pub j: i64,
    pub eigenvalue: Complex64,
    pub bracket: f64,
    pub norm_const: f64,
}

/// Model parameters together with the discretization geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSystem {
    spec: ModelSpec,
    window: FrequencyWindow,
    grid: SpatialGrid,
}

impl ModelSystem {
    /// Requires `N_x > 4J + 2` so every product `u_j v̄_k` used internally is
    /// integrated exactly by the uniform rule.
    pub fn new(spec: ModelSpec, window: FrequencyWindow, grid: SpatialGrid) -> Result<Self> {
        let need = 4 * window.half_width() + 2;
        if grid.len() <= need {
            return Err(Error::GeometryMismatch(format!(
                "N_x = {} must exceed 4J + 2 = {need}",
                grid.len()
            )));
        }
        Ok(Self { spec, window, grid })
    }

    pub fn with_params(h: f64, half_width: usize, nx: usize, normalize_u: bool) -> Result<Self> {
        Self::new(
            ModelSpec::new(h, normalize_u)?,
            FrequencyWindow::new(half_width)?,
            SpatialGrid::new(nx)?,
        )
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn window(&self) -> FrequencyWindow {
        self.window
    }

    pub fn grid(&self) -> SpatialGrid {
        self.grid
    }

    /// Same model and grid, different window (grid must still oversample).
    pub fn with_window(&self, half_width: usize) -> Result<Self> {
        Self::new(self.spec, FrequencyWindow::new(half_width)?, self.grid)
    }

    pub fn u_samples(&self, j: i64) -> Vec<Complex64> {
        self.grid.nodes().map(|x| self.spec.eval_u(j, x)).collect()
    }

    pub fn v_samples(&self, j: i64) -> Vec<Complex64> {
        self.grid.nodes().map(|x| self.spec.eval_v(j, x)).collect()
    }

    pub fn eigendata(&self) -> Vec<EigenData> {
        let c = self.spec.norm_const();
        self.window
            .indices()
            .map(|j| EigenData {
                j,
                eigenvalue: self.spec.eigenvalue(j),
                bracket: self.spec.bracket(j),
                norm_const: c,
            })
            .collect()
    }

    /// Uniform-grid quadrature of `⟨u_a, v_b⟩`.
    pub fn pairing_quadrature(&self, a: i64, b: i64) -> Complex64 {
        let w = self.grid.spacing();
        compensated_sum(
            self.grid
                .nodes()
                .map(|x| self.spec.eval_u(a, x) * self.spec.eval_v(b, x).conj() * w),
        )
    }

    /// `max |⟨u_j, v_k⟩ - δ_jk|` over the window.
    pub fn biorthogonality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in self.window.indices() {
            for b in self.window.indices() {
                let target = if a == b { 1.0 } else { 0.0 };
                let d = (self.pairing_quadrature(a, b) - target).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Checks `sup_x |u_j(x)| <= C ⟨j⟩^{μ₀}` with `μ₀ = 0`, `C = c·max(1, h)`;
    /// returns the largest observed `sup |u_j| / C`.
    pub fn sup_bound_ratio(&self) -> f64 {
        let bound = self.spec.norm_const() * self.spec.h().max(1.0);
        let mut worst = 0.0f64;
        for j in self.window.indices() {
            let sup = self
                .closed_nodes()
                .map(|x| self.spec.eval_u(j, x).norm())
                .fold(0.0, f64::max);
            worst = worst.max(sup / bound);
        }
        worst
    }

    /// Grid nodes plus the right endpoint, i.e. samples of the closed interval.
    fn closed_nodes(&self) -> impl Iterator<Item = f64> + '_ {
        self.grid.nodes().chain(std::iter::once(1.0))
    }
}

/// `‖-i u_j' - λ_j u_j‖_∞ / ‖u_j‖_∞`, with the periodic factor differentiated
/// spectrally and the exact log-derivative of `h^x`.
pub fn verify_eigenpair(system: &ModelSystem, j: i64) -> f64 {
    let spec = system.spec();
    let grid = system.grid();
    let n = grid.len();
    let fft = FftPair::new(n);
    let mut periodic: Vec<Complex64> = grid
        .nodes()
        .map(|x| Complex64::from_polar(1.0, 2.0 * PI * j as f64 * x))
        .collect();
    fft.forward(&mut periodic);
    for (m, z) in periodic.iter_mut().enumerate() {
        let k = fft.signed_frequency(m) as f64;
        *z *= Complex64::new(0.0, 2.0 * PI * k) / n as f64;
    }
    fft.inverse(&mut periodic);
    let c = spec.norm_const();
    let lam = spec.eigenvalue(j);
    let mut resid = 0.0f64;
    let mut sup = 0.0f64;
    for (k, x) in grid.nodes().enumerate() {
        let hx = c * (x * spec.log_h()).exp();
        let p = Complex64::from_polar(1.0, 2.0 * PI * j as f64 * x);
        let u = hx * p;
        let du = hx * (spec.log_h() * p + periodic[k]);
        let r = Complex64::new(0.0, -1.0) * du - lam * u;
        resid = resid.max(r.norm());
        sup = sup.max(u.norm());
    }
    resid / sup
}

/// Infima of one index of the WZ report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WzEntry {
    pub j: i64,
    pub inf_u: f64,
    pub inf_v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WzReport {
    pub entries: Vec<WzEntry>,
    pub min_inf_u: f64,
    pub min_inf_v: f64,
    /// Fitted `N` with `inf ≥ C⟨j⟩^{-N}` (the worse of the two families).
    pub exponent: f64,
    pub nowhere_zero: bool,
}

pub fn wz_check(system: &ModelSystem) -> WzReport {
    let spec = system.spec();
    let entries: Vec<WzEntry> = system
        .window()
        .indices()
        .map(|j| {
            let (mut iu, mut iv) = (f64::INFINITY, f64::INFINITY);
            for x in system.closed_nodes() {
                iu = iu.min(spec.eval_u(j, x).norm());
                iv = iv.min(spec.eval_v(j, x).norm());
            }
            WzEntry { j, inf_u: iu, inf_v: iv }
        })
        .collect();
    let logb: Vec<f64> = entries.iter().map(|e| spec.bracket(e.j).ln()).collect();
    let lu: Vec<f64> = entries.iter().map(|e| e.inf_u.ln()).collect();
    let lv: Vec<f64> = entries.iter().map(|e| e.inf_v.ln()).collect();
    let exponent = (-fit_slope(&logb, &lu)).max(-fit_slope(&logb, &lv));
    let min_inf_u = entries.iter().map(|e| e.inf_u).fold(f64::INFINITY, f64::min);
    let min_inf_v = entries.iter().map(|e| e.inf_v).fold(f64::INFINITY, f64::min);
    WzReport {
        entries,
        min_inf_u,
        min_inf_v,
        exponent,
        nowhere_zero: min_inf_u > 0.0 && min_inf_v > 0.0,
    }
}
