//! Symbols sampled on grid × frequency range, the difference operators
//! `Δ^α`, the Taylor-derivative operators `D^(β)`, seminorm scans and
//! membership/ellipticity checks for the weighted classes.
//!
//! The admissible function of the model is `q(x, y) = e^{2πi(y-x)} - 1`.
//! Its kernel-integral difference reduces to the forward index difference,
//! and its Taylor recurrence has coefficient matrix `(2πi)^β S(β, α)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::FftPair;
use crate::model::ModelSystem;
use crate::numeric::{compensated_sum, fit_slope, stirling1_signed_table, stirling2_table};
use crate::weights::WeightFunction;

/// How the x-dependence of a symbol may be differentiated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpatialRegularity {
    /// smooth and 1-periodic in x: spectral differentiation is exact
    Periodic,
    /// raw samples (e.g. CSV import): finite differences only
    Sampled,
}

/// `σ(x_k, j)` for `k < N_x`, `j_lo <= j <= j_hi`, stored column-major by `j`.
#[derive(Debug, Clone)]
pub struct SymbolGrid {
    nx: usize,
    j_lo: i64,
    j_hi: i64,
    values: Vec<Complex64>,
    order: f64,
    rho: f64,
    weight: Arc<WeightFunction>,
    regularity: SpatialRegularity,
    generator: Option<String>,
}

impl SymbolGrid {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        nx: usize,
        j_lo: i64,
        j_hi: i64,
        values: Vec<Complex64>,
        order: f64,
        rho: f64,
        weight: Arc<WeightFunction>,
        regularity: SpatialRegularity,
    ) -> Result<Self> {
        if nx == 0 || j_hi < j_lo {
            return Err(Error::InvalidParameter(format!(
                "empty symbol grid (nx = {nx}, j range {j_lo}..={j_hi})"
            )));
        }
        let cols = (j_hi - j_lo + 1) as usize;
        if values.len() != nx * cols {
            return Err(Error::GeometryMismatch(format!(
                "symbol has {} values, shape needs {}",
                values.len(),
                nx * cols
            )));
        }
        if !(rho > 0.0 && rho <= 1.0 / weight.mu() + 1e-15) {
            return Err(Error::InvalidParameter(format!(
                "rho = {rho} must lie in (0, 1/mu] = (0, {}]",
                1.0 / weight.mu()
            )));
        }
        if !order.is_finite() {
            return Err(Error::InvalidParameter("symbol order must be finite".into()));
        }
        if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidParameter("symbol has non-finite entries".into()));
        }
        if !weight.covers(j_lo, j_hi) {
            return Err(Error::WindowTooSmall("weight table does not cover the symbol range".into()));
        }
        Ok(Self {
            nx,
            j_lo,
            j_hi,
            values,
            order,
            rho,
            weight,
            regularity,
            generator: None,
        })
    }

    #[allow(clippy::too_many_arguments)]
    pub fn from_fn<F: Fn(f64, i64) -> Complex64>(
        nx: usize,
        j_lo: i64,
        j_hi: i64,
        order: f64,
        rho: f64,
        weight: Arc<WeightFunction>,
        regularity: SpatialRegularity,
        f: F,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(nx * (j_hi - j_lo + 1).max(0) as usize);
        for j in j_lo..=j_hi {
            for k in 0..nx {
                values.push(f(k as f64 / nx as f64, j));
            }
        }
        Self::new(nx, j_lo, j_hi, values, order, rho, weight, regularity)
    }

    /// Same metadata, new values on a new range.
    fn derived(&self, j_lo: i64, j_hi: i64, values: Vec<Complex64>, order: f64) -> Self {
        debug_assert_eq!(values.len(), self.nx * (j_hi - j_lo + 1) as usize);
        Self {
            nx: self.nx,
            j_lo,
            j_hi,
            values,
            order,
            rho: self.rho,
            weight: Arc::clone(&self.weight),
            regularity: self.regularity,
            generator: None,
        }
    }

    pub fn with_generator(mut self, tag: impl Into<String>) -> Self {
        self.generator = Some(tag.into());
        self
    }

    pub fn generator(&self) -> Option<&str> {
        self.generator.as_deref()
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn j_lo(&self) -> i64 {
        self.j_lo
    }

    pub fn j_hi(&self) -> i64 {
        self.j_hi
    }

    pub fn n_cols(&self) -> usize {
        (self.j_hi - self.j_lo + 1) as usize
    }

    pub fn contains(&self, j: i64) -> bool {
        j >= self.j_lo && j <= self.j_hi
    }

    /// Largest `J` with `[-J, J]` inside the range.
    pub fn symmetric_half_width(&self) -> i64 {
        (-self.j_lo).min(self.j_hi).max(0)
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn weight(&self) -> &WeightFunction {
        &self.weight
    }

    pub fn weight_arc(&self) -> Arc<WeightFunction> {
        Arc::clone(&self.weight)
    }

    pub fn regularity(&self) -> SpatialRegularity {
        self.regularity
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, k: usize, j: i64) -> Complex64 {
        self.values[(j - self.j_lo) as usize * self.nx + k]
    }

    pub fn column(&self, j: i64) -> &[Complex64] {
        let s = (j - self.j_lo) as usize * self.nx;
        &self.values[s..s + self.nx]
    }

    pub fn with_order(mut self, order: f64) -> Self {
        self.order = order;
        self
    }

    pub fn with_rho(mut self, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0 / self.weight.mu() + 1e-15) {
            return Err(Error::InvalidParameter(format!("rho = {rho} outside (0, 1/mu]")));
        }
        self.rho = rho;
        Ok(self)
    }

    /// True when every column is constant in x (bitwise).
    pub fn is_x_independent(&self) -> bool {
        (self.j_lo..=self.j_hi).all(|j| {
            let c = self.column(j);
            c.iter().all(|z| *z == c[0])
        })
    }

    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Self {
        let values = self.values.iter().map(|&z| f(z)).collect();
        self.derived(self.j_lo, self.j_hi, values, self.order)
    }

    /// Pointwise map with access to `(k, j)`.
    pub fn map_indexed<F: Fn(usize, i64, Complex64) -> Complex64>(&self, f: F) -> Self {
        let mut values = Vec::with_capacity(self.values.len());
        for j in self.j_lo..=self.j_hi {
            for (k, &z) in self.column(j).iter().enumerate() {
                values.push(f(k, j, z));
            }
        }
        self.derived(self.j_lo, self.j_hi, values, self.order)
    }

    pub fn restrict(&self, lo: i64, hi: i64) -> Result<Self> {
        if lo < self.j_lo || hi > self.j_hi || hi < lo {
            return Err(Error::WindowTooSmall(format!(
                "cannot restrict {}..={} to {lo}..={hi}",
                self.j_lo, self.j_hi
            )));
        }
        let s = (lo - self.j_lo) as usize * self.nx;
        let e = (hi - self.j_lo + 1) as usize * self.nx;
        Ok(self.derived(lo, hi, self.values[s..e].to_vec(), self.order))
    }

    fn binary<F: Fn(Complex64, Complex64) -> Complex64>(&self, other: &Self, order: f64, f: F) -> Result<Self> {
        if self.nx != other.nx {
            return Err(Error::GeometryMismatch("symbols sampled on different grids".into()));
        }
        let lo = self.j_lo.max(other.j_lo);
        let hi = self.j_hi.min(other.j_hi);
        if hi < lo {
            return Err(Error::WindowTooSmall("symbol ranges do not overlap".into()));
        }
        let mut values = Vec::with_capacity(self.nx * (hi - lo + 1) as usize);
        for j in lo..=hi {
            for (a, b) in self.column(j).iter().zip(other.column(j)) {
                values.push(f(*a, *b));
            }
        }
        let mut out = self.derived(lo, hi, values, order);
        out.rho = self.rho.min(other.rho);
        if other.regularity == SpatialRegularity::Sampled {
            out.regularity = SpatialRegularity::Sampled;
        }
        Ok(out)
    }

    /// Pointwise product; claimed order is the sum.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.binary(other, self.order + other.order, |a, b| a * b)
    }

    /// Pointwise sum; claimed order is the max.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.binary(other, self.order.max(other.order), |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.binary(other, self.order.max(other.order), |a, b| a - b)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|z| z * s)
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let lo = self.j_lo.max(other.j_lo);
        let hi = self.j_hi.min(other.j_hi);
        (lo..=hi)
            .flat_map(|j| self.column(j).iter().zip(other.column(j)).map(|(a, b)| (a - b).norm()))
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Trigonometric polynomial `a₀ + Σ_k cos_k cos(2πkx) + sin_k sin(2πkx)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SpatialFactor {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl SpatialFactor {
    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            ..Default::default()
        }
    }

    /// `2 + sin 2πx`.
    pub fn elliptic_demo() -> Self {
        Self {
            constant: 2.0,
            cos: vec![],
            sin: vec![1.0],
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut v = self.constant;
        for (k, a) in self.cos.iter().enumerate() {
            v += a * (2.0 * PI * (k + 1) as f64 * x).cos();
        }
        for (k, b) in self.sin.iter().enumerate() {
            v += b * (2.0 * PI * (k + 1) as f64 * x).sin();
        }
        v
    }

    pub fn bandwidth(&self) -> usize {
        self.cos.len().max(self.sin.len())
    }

    pub fn is_finite(&self) -> bool {
        self.constant.is_finite() && self.cos.iter().chain(&self.sin).all(|v| v.is_finite())
    }
}

/// Catalogue of built-in test symbols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SymbolFamily {
    /// `Λ(j)^m`
    MultiplierPower { m: f64 },
    /// `Λ(j)^m g(x)`
    Separable { g: SpatialFactor, m: f64 },
    /// `Λ(j)^m (2 + sin 2πx)`
    EllipticDemo { m: f64 },
    /// `Λ(j)^m g(x - c j)`: a frequency-dependent spatial shift
    Shifted { g: SpatialFactor, c: f64, m: f64 },
    /// `c + Λ(j)^m g(x)` with m < 0: constant plus a decaying part
    ConstantPlusDecay { c: f64, g: SpatialFactor, m: f64 },
    /// `σ(x, j) = j` with an explicitly claimed order
    Index { claimed_order: f64 },
    /// samples read from a CSV file (see `io::read_symbol_csv`)
    Csv { path: String, claimed_order: f64 },
}

impl SymbolFamily {
    pub fn claimed_order(&self) -> f64 {
        match self {
            Self::MultiplierPower { m }
            | Self::Separable { m, .. }
            | Self::EllipticDemo { m }
            | Self::Shifted { m, .. } => *m,
            Self::ConstantPlusDecay { m, .. } => m.max(0.0),
            Self::Index { claimed_order } | Self::Csv { claimed_order, .. } => *claimed_order,
        }
    }

    pub fn tag(&self) -> String {
        match self {
            Self::MultiplierPower { m } => format!("multiplier_power(m={m})"),
            Self::Separable { m, .. } => format!("separable(m={m})"),
            Self::EllipticDemo { m } => format!("elliptic_demo(m={m})"),
            Self::Shifted { c, m, .. } => format!("shifted(c={c}, m={m})"),
            Self::ConstantPlusDecay { c, m, .. } => format!("constant_plus_decay(c={c}, m={m})"),
            Self::Index { claimed_order } => format!("index(claimed m={claimed_order})"),
            Self::Csv { path, .. } => format!("csv({path})"),
        }
    }

    /// Samples the family on `nx` grid points and frequencies `lo..=hi`.
    /// CSV families are loaded through the io module instead.
    pub fn generate(&self, nx: usize, lo: i64, hi: i64, weight: Arc<WeightFunction>, rho: f64) -> Result<SymbolGrid> {
        let w = Arc::clone(&weight);
        let lam = move |j: i64| w.eval(j);
        if !weight.covers(lo, hi) {
            return Err(Error::WindowTooSmall("weight table does not cover the requested range".into()));
        }
        let periodic = SpatialRegularity::Periodic;
        let order = self.claimed_order();
        let real = |v: f64| Complex64::new(v, 0.0);
        let grid = match self {
            Self::MultiplierPower { m } => {
                SymbolGrid::from_fn(nx, lo, hi, order, rho, weight, periodic, |_, j| real(lam(j).powf(*m)))
            }
            Self::Separable { g, m } => SymbolGrid::from_fn(nx, lo, hi, order, rho, weight, periodic, |x, j| {
                real(lam(j).powf(*m) * g.eval(x))
            }),
            Self::EllipticDemo { m } => {
                let g = SpatialFactor::elliptic_demo();
                SymbolGrid::from_fn(nx, lo, hi, order, rho, weight, periodic, |x, j| {
                    real(lam(j).powf(*m) * g.eval(x))
                })
            }
            Self::Shifted { g, c, m } => SymbolGrid::from_fn(nx, lo, hi, order, rho, weight, periodic, |x, j| {
                real(lam(j).powf(*m) * g.eval(x - c * j as f64))
            }),
            Self::ConstantPlusDecay { c, g, m } => {
                SymbolGrid::from_fn(nx, lo, hi, order, rho, weight, periodic, |x, j| {
                    real(c + lam(j).powf(*m) * g.eval(x))
                })
            }
            Self::Index { .. } => {
                SymbolGrid::from_fn(nx, lo, hi, order, rho, weight, periodic, |_, j| real(j as f64))
            }
            Self::Csv { path, .. } => {
                return Err(Error::InvalidParameter(format!(
                    "csv symbol '{path}' must be loaded with io::read_symbol_csv"
                )))
            }
        }?;
        Ok(grid.with_generator(self.tag()))
    }

    /// Convenience: sample on the model grid over its window.
    pub fn on_system(&self, system: &ModelSystem, weight: Arc<WeightFunction>, rho: f64) -> Result<SymbolGrid> {
        let w = system.window();
        self.generate(system.grid().len(), w.lo(), w.hi(), weight, rho)
    }
}

// ---------------------------------------------------------------------------
// difference operators

/// `α`-fold forward difference in the frequency index; the range loses `α`
/// indices at the upper edge.
pub fn delta_forward(sigma: &SymbolGrid, alpha: usize) -> Result<SymbolGrid> {
    if sigma.n_cols() <= alpha {
        return Err(Error::WindowTooSmall(format!(
            "{} frequencies cannot support {alpha} forward differences",
            sigma.n_cols()
        )));
    }
    let mut cur = sigma.clone();
    for _ in 0..alpha {
        let hi = cur.j_hi - 1;
        let mut values = Vec::with_capacity(cur.nx * (hi - cur.j_lo + 1) as usize);
        for j in cur.j_lo..=hi {
            for (a, b) in cur.column(j + 1).iter().zip(cur.column(j)) {
                values.push(a - b);
            }
        }
        cur = cur.derived(cur.j_lo, hi, values, cur.order);
    }
    cur.order = sigma.order - sigma.rho * alpha as f64;
    Ok(cur)
}

/// `α`-fold conjugate difference `(Δ̃τ)(j) = τ(j-1) - τ(j)`, from
/// `q̃ = conj q`; the range loses `α` indices at the lower edge.
pub fn delta_conjugate(sigma: &SymbolGrid, alpha: usize) -> Result<SymbolGrid> {
    if sigma.n_cols() <= alpha {
        return Err(Error::WindowTooSmall(format!(
            "{} frequencies cannot support {alpha} conjugate differences",
            sigma.n_cols()
        )));
    }
    let mut cur = sigma.clone();
    for _ in 0..alpha {
        let lo = cur.j_lo + 1;
        let mut values = Vec::with_capacity(cur.nx * (cur.j_hi - lo + 1) as usize);
        for j in lo..=cur.j_hi {
            for (a, b) in cur.column(j - 1).iter().zip(cur.column(j)) {
                values.push(a - b);
            }
        }
        cur = cur.derived(lo, cur.j_hi, values, cur.order);
    }
    cur.order = sigma.order - sigma.rho * alpha as f64;
    Ok(cur)
}

/// Difference via the kernel integral
/// `u_ξ(x)⁻¹ ∫ q^α(x, y) K(x, y) u_ξ(y) dy`, `K(x, y) = Σ_ξ u_ξ(x) σ(x, ξ) v̄_ξ(y)`,
/// evaluated by uniform-grid quadrature in y at the requested x indices.
/// Returns one row per x index over `ξ ∈ [j_lo, j_hi - α]`.
pub fn delta_kernel_oracle(
    sigma: &SymbolGrid,
    alpha: usize,
    system: &ModelSystem,
    x_indices: &[usize],
) -> Result<Vec<Vec<Complex64>>> {
    let nx = system.grid().len();
    if sigma.nx != nx {
        return Err(Error::GeometryMismatch("symbol grid differs from model grid".into()));
    }
    if sigma.n_cols() <= alpha {
        return Err(Error::WindowTooSmall("range too small for the requested difference".into()));
    }
    if let Some(&k) = x_indices.iter().find(|&&k| k >= nx) {
        return Err(Error::InvalidParameter(format!("x index {k} outside the grid")));
    }
    let spec = system.spec();
    let grid = system.grid();
    let u_tab: Vec<Vec<Complex64>> = (sigma.j_lo..=sigma.j_hi)
        .map(|j| grid.nodes().map(|y| spec.eval_u(j, y)).collect())
        .collect();
    let v_tab: Vec<Vec<Complex64>> = (sigma.j_lo..=sigma.j_hi)
        .map(|j| grid.nodes().map(|y| spec.eval_v(j, y)).collect())
        .collect();
    let w = grid.spacing();
    let mut out = Vec::with_capacity(x_indices.len());
    for &k in x_indices {
        let x = grid.node(k);
        // K(x, y_l) over the grid
        let kernel: Vec<Complex64> = (0..nx)
            .map(|l| {
                compensated_sum((sigma.j_lo..=sigma.j_hi).map(|j| {
                    let p = (j - sigma.j_lo) as usize;
                    u_tab[p][k] * sigma.get(k, j) * v_tab[p][l].conj()
                }))
            })
            .collect();
        let qa: Vec<Complex64> = grid
            .nodes()
            .map(|y| (Complex64::from_polar(1.0, 2.0 * PI * (y - x)) - 1.0).powu(alpha as u32))
            .collect();
        let row = (sigma.j_lo..=sigma.j_hi - alpha as i64)
            .map(|xi| {
                let p = (xi - sigma.j_lo) as usize;
                let integral = compensated_sum((0..nx).map(|l| qa[l] * kernel[l] * u_tab[p][l] * w));
                integral / u_tab[p][k]
            })
            .collect();
        out.push(row);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Taylor-derivative operators

/// `T[β][α] = (1/α!) ∂_y^β q^α(x, y)|_{y=x} = (2πi)^β S(β, α)`, so that
/// `∂^β = Σ_α T[β][α] D^(α)`.
pub fn taylor_coefficient_matrix(order: usize) -> Vec<Vec<Complex64>> {
    let s2 = stirling2_table(order);
    (0..=order)
        .map(|b| {
            let p = Complex64::new(0.0, 2.0 * PI).powu(b as u32);
            (0..=order).map(|a| p * s2[b][a]).collect()
        })
        .collect()
}

/// Coefficients of `D^(α) = Σ_β C[α][β] ∂^β`: the inverse of the Taylor
/// matrix, `C[α][β] = s(α, β) (2πi)^{-β}` with signed Stirling numbers of
/// the first kind.
pub fn taylor_inverse_matrix(order: usize) -> Vec<Vec<Complex64>> {
    let s1 = stirling1_signed_table(order);
    (0..=order)
        .map(|a| {
            (0..=order)
                .map(|b| Complex64::new(0.0, 2.0 * PI).powi(-(b as i32)) * s1[a][b])
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Differentiation {
    Spectral,
    FiniteDifference,
}

/// `D^(β)` in x. Periodic symbols are differentiated spectrally; sampled
/// symbols are rejected (use `d_derivative_with` and finite differences).
pub fn d_derivative(sigma: &SymbolGrid, beta: usize) -> Result<SymbolGrid> {
    match sigma.regularity {
        SpatialRegularity::Periodic => d_derivative_with(sigma, beta, Differentiation::Spectral),
        SpatialRegularity::Sampled if beta == 0 => Ok(sigma.clone()),
        SpatialRegularity::Sampled => Err(Error::NonSmoothSymbol(
            "sampled symbol needs finite-difference mode for D^(beta)".into(),
        )),
    }
}

pub fn d_derivative_with(sigma: &SymbolGrid, beta: usize, mode: Differentiation) -> Result<SymbolGrid> {
    if beta == 0 {
        return Ok(sigma.clone());
    }
    let coeffs = &taylor_inverse_matrix(beta)[beta];
    let nx = sigma.nx;
    let mut values = Vec::with_capacity(sigma.values.len());
    match mode {
        Differentiation::Spectral => {
            let fft = FftPair::new(nx);
            let mult: Vec<Complex64> = (0..nx)
                .map(|m| {
                    let n = fft.signed_frequency(m);
                    if nx.is_multiple_of(2) && 2 * n.unsigned_abs() as usize == nx {
                        return Complex64::new(0.0, 0.0);
                    }
                    let w = Complex64::new(0.0, 2.0 * PI * n as f64);
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (k, c) in coeffs.iter().enumerate().take(beta + 1) {
                        acc += c * w.powu(k as u32);
                    }
                    acc / nx as f64
                })
                .collect();
            for j in sigma.j_lo..=sigma.j_hi {
                let mut buf = sigma.column(j).to_vec();
                fft.forward(&mut buf);
                for (z, m) in buf.iter_mut().zip(&mult) {
                    *z *= m;
                }
                fft.inverse(&mut buf);
                values.extend(buf);
            }
        }
        Differentiation::FiniteDifference => {
            let stencils: Vec<FdStencils> = (1..=beta).map(|k| FdStencils::new(nx, k)).collect();
            for j in sigma.j_lo..=sigma.j_hi {
                let col = sigma.column(j);
                let mut acc = vec![Complex64::new(0.0, 0.0); nx];
                for (k, st) in stencils.iter().enumerate() {
                    let c = coeffs[k + 1];
                    let d = st.apply(col);
                    for (a, v) in acc.iter_mut().zip(d) {
                        *a += c * v;
                    }
                }
                // k = 0 coefficient of D^(β), β >= 1, is s(β, 0) = 0
                values.extend(acc);
            }
        }
    }
    let mut out = sigma.derived(sigma.j_lo, sigma.j_hi, values, sigma.order);
    out.regularity = sigma.regularity;
    Ok(out)
}

/// Finite-difference weights for one derivative order on a non-periodic
/// uniform grid: sixth-order central stencils inside, one-sided near the ends.
struct FdStencils {
    rows: Vec<(usize, Vec<f64>)>,
}

impl FdStencils {
    fn new(nx: usize, order: usize) -> Self {
        let half = 2 + order.div_ceil(2);
        let central = 2 * half + 1;
        let one_sided = order + 6;
        let h = 1.0 / nx as f64;
        let scale = h.powi(order as i32);
        let rows = (0..nx)
            .map(|i| {
                let (start, len) = if i >= half && i + half < nx {
                    (i - half, central)
                } else {
                    let len = one_sided.min(nx);
                    let start = if i < half { 0 } else { nx - len };
                    (start, len)
                };
                let nodes: Vec<f64> = (start..start + len).map(|p| p as f64 - i as f64).collect();
                let w = fornberg(0.0, &nodes, order);
                (start, w.into_iter().map(|c| c / scale).collect())
            })
            .collect();
        Self { rows }
    }

    fn apply(&self, col: &[Complex64]) -> Vec<Complex64> {
        self.rows
            .iter()
            .map(|(start, w)| w.iter().enumerate().map(|(p, c)| col[start + p] * *c).sum())
            .collect()
    }
}

/// Fornberg's recursion: weights of the `m`-th derivative at `z` on `nodes`.
fn fornberg(z: f64, nodes: &[f64], m: usize) -> Vec<f64> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - z;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - z;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c.swap_remove(m)
}

// ---------------------------------------------------------------------------
// seminorm scans and class checks

/// Relative growth allowed between half-range and full-range suprema.
pub const SYMBOL_STABILITY_TOL: f64 = 0.10;
const ABS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeminormRow {
    pub alpha: usize,
    pub beta: usize,
    pub gamma: usize,
    pub sup: f64,
    pub sup_half: f64,
    /// log-log slope of the per-frequency ratio over the outer half
    pub tail_slope: f64,
    pub effective_lo: i64,
    pub effective_hi: i64,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeminormReport {
    pub claimed_order: f64,
    pub rho: f64,
    pub tolerance: f64,
    pub rows: Vec<SeminormRow>,
    /// `S^m` verdict (γ = 0 rows)
    pub member_s: bool,
    /// `M^m` verdict (all rows)
    pub member_m: bool,
}

/// Per-frequency supremum over x of a pointwise ratio.
fn column_sup<F: Fn(usize, i64) -> f64>(lo: i64, hi: i64, nx: usize, f: F) -> Vec<(i64, f64)> {
    (lo..=hi)
        .map(|j| (j, (0..nx).map(|k| f(k, j)).fold(0.0, f64::max)))
        .collect()
}

/// Rounding-noise model for `Δ^k D^(β) σ` at column `j`: each difference can
/// amplify absolute error by two, and spectral `D^(β)` can lift errors of
/// size `ε max|σ|` by `(nx/2)^β`.
fn noise_scale(sigma: &SymbolGrid, j: i64, k: usize, beta: usize) -> f64 {
    let m = (j..=(j + k as i64).min(sigma.j_hi))
        .flat_map(|t| sigma.column(t).iter().map(|z| z.norm()))
        .fold(0.0, f64::max);
    64.0 * f64::EPSILON * 2f64.powi(k as i32) * (1.0 + (sigma.nx as f64 / 2.0).powi(beta as i32)) * m
}

fn summarize(per_j: &[(i64, f64)], half: i64, shell_lo: i64) -> (f64, f64, f64) {
    let sup = per_j.iter().map(|p| p.1).fold(0.0, f64::max);
    let sup_half = per_j
        .iter()
        .filter(|p| p.0.abs() <= half.max(shell_lo))
        .map(|p| p.1)
        .fold(0.0, f64::max);
    let (xs, ys): (Vec<f64>, Vec<f64>) = per_j
        .iter()
        .filter(|p| p.0.abs() >= half && p.1 > 1e-300)
        .map(|p| ((1.0 + p.0.abs() as f64).ln(), p.1.ln()))
        .unzip();
    (sup, sup_half, fit_slope(&xs, &ys))
}

fn is_stable(sup: f64, sup_half: f64, noise: f64, tol: f64) -> bool {
    sup.is_finite() && sup <= (1.0 + tol) * sup_half + noise + ABS_FLOOR
}

/// Scans `|j^γ Δ^{α+γ} D^(β) σ| / Λ^{m - ρα}`. A row is stable when its
/// supremum over the full range exceeds the half-range supremum by at most
/// `tol` (relative); membership means every relevant row is stable.
pub fn seminorm_estimate(
    sigma: &SymbolGrid,
    alpha_max: usize,
    beta_max: usize,
    gammas: &[usize],
    tol: f64,
) -> Result<SeminormReport> {
    if gammas.iter().any(|&g| g > 1) {
        return Err(Error::InvalidParameter("gamma must be 0 or 1".into()));
    }
    let g_max = gammas.iter().copied().max().unwrap_or(0);
    if sigma.n_cols() <= alpha_max + g_max + 1 {
        return Err(Error::WindowTooSmall(format!(
            "{} frequencies cannot support {} differences",
            sigma.n_cols(),
            alpha_max + g_max
        )));
    }
    let half = sigma.symmetric_half_width() / 2;
    let m = sigma.order;
    let mut rows = Vec::new();
    for beta in 0..=beta_max {
        let d = d_derivative(sigma, beta)?;
        for alpha in 0..=alpha_max {
            for &gamma in gammas {
                let dd = delta_forward(&d, alpha + gamma)?;
                let expo = m - sigma.rho * alpha as f64;
                let per_j = column_sup(dd.j_lo, dd.j_hi, dd.nx, |k, j| {
                    let jg = if gamma == 1 { j as f64 } else { 1.0 };
                    (jg * dd.get(k, j)).norm() / sigma.weight.eval(j).powf(expo)
                });
                let (sup, sup_half, tail_slope) = summarize(&per_j, half, 0);
                let noise = (dd.j_lo..=dd.j_hi)
                    .map(|j| {
                        let jg = if gamma == 1 { j.abs().max(1) as f64 } else { 1.0 };
                        jg * noise_scale(sigma, j, alpha + gamma, beta) / sigma.weight.eval(j).powf(expo)
                    })
                    .fold(0.0, f64::max);
                rows.push(SeminormRow {
                    alpha,
                    beta,
                    gamma,
                    sup,
                    sup_half,
                    tail_slope,
                    effective_lo: dd.j_lo,
                    effective_hi: dd.j_hi,
                    stable: is_stable(sup, sup_half, noise, tol),
                });
            }
        }
    }
    let member_s = rows.iter().filter(|r| r.gamma == 0).all(|r| r.stable);
    let member_m = rows.iter().all(|r| r.stable);
    Ok(SeminormReport {
        claimed_order: m,
        rho: sigma.rho,
        tolerance: tol,
        rows,
        member_s,
        member_m,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticityReport {
    /// `min |σ| / Λ^m` over x and `R <= |j| <= J`
    pub c_est: f64,
    /// same over `R <= |j| <= max(R, J/2)`
    pub c_half: f64,
    pub cutoff: i64,
    pub threshold: f64,
    pub verdict: bool,
}

pub const ELLIPTICITY_THRESHOLD: f64 = 1e-6;

pub fn m_ellipticity_check(sigma: &SymbolGrid, cutoff: i64, threshold: f64, tol: f64) -> Result<EllipticityReport> {
    let big_j = sigma.symmetric_half_width();
    if cutoff < 0 || cutoff >= big_j {
        return Err(Error::WindowTooSmall(format!(
            "ellipticity shell is empty: R = {cutoff}, J = {big_j}"
        )));
    }
    let m = sigma.order;
    let half = (big_j / 2).max(cutoff);
    let (mut c_est, mut c_half) = (f64::INFINITY, f64::INFINITY);
    for j in -big_j..=big_j {
        if j.abs() < cutoff {
            continue;
        }
        let lam = sigma.weight.eval(j).powf(m);
        let r = sigma.column(j).iter().map(|z| z.norm() / lam).fold(f64::INFINITY, f64::min);
        c_est = c_est.min(r);
        if j.abs() <= half {
            c_half = c_half.min(r);
        }
    }
    let stable = c_est >= (1.0 - tol) * c_half;
    Ok(EllipticityReport {
        c_est,
        c_half,
        cutoff,
        threshold,
        verdict: c_est > threshold && stable,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypoellipticityReport {
    pub m: f64,
    pub l: f64,
    pub cutoff: i64,
    /// `min |σ| / Λ^ℓ` on the shell, full and half
    pub c1: f64,
    pub c1_half: f64,
    /// `max |σ| / Λ^m` on the shell, full and half
    pub c2: f64,
    pub c2_half: f64,
    /// domination ratios `|j^γ Δ^{α+γ} D^(β) σ| / (|σ| Λ^{-ρα})`
    pub rows: Vec<SeminormRow>,
    pub verdict: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn hypoellipticity_check(
    sigma: &SymbolGrid,
    m: f64,
    l: f64,
    cutoff: i64,
    alpha_max: usize,
    beta_max: usize,
    tol: f64,
) -> Result<HypoellipticityReport> {
    if l > m {
        return Err(Error::InvalidParameter(format!("need l <= m, got l = {l}, m = {m}")));
    }
    let big_j = sigma.symmetric_half_width();
    if cutoff < 0 || cutoff + alpha_max as i64 + 1 >= big_j {
        return Err(Error::WindowTooSmall(format!(
            "hypoellipticity shell is empty: R = {cutoff}, J = {big_j}"
        )));
    }
    let half = (big_j / 2).max(cutoff);
    let (mut c1, mut c1h, mut c2, mut c2h) = (f64::INFINITY, f64::INFINITY, 0.0f64, 0.0f64);
    for j in -big_j..=big_j {
        if j.abs() < cutoff {
            continue;
        }
        let w = sigma.weight.eval(j);
        for z in sigma.column(j) {
            let a = z.norm();
            let lo = a / w.powf(l);
            let hi = a / w.powf(m);
            c1 = c1.min(lo);
            c2 = c2.max(hi);
            if j.abs() <= half {
                c1h = c1h.min(lo);
                c2h = c2h.max(hi);
            }
        }
    }
    let mut rows = Vec::new();
    for beta in 0..=beta_max {
        let d = d_derivative(sigma, beta)?;
        for alpha in 0..=alpha_max {
            for gamma in 0..=1usize {
                let dd = delta_forward(&d, alpha + gamma)?;
                let lo = dd.j_lo.max(-big_j);
                let hi = dd.j_hi.min(big_j);
                let per_j: Vec<(i64, f64)> = column_sup(lo, hi, dd.nx, |k, j| {
                    if j.abs() < cutoff {
                        return 0.0;
                    }
                    let jg = if gamma == 1 { j as f64 } else { 1.0 };
                    let base = sigma.get(k, j).norm() * sigma.weight.eval(j).powf(-sigma.rho * alpha as f64);
                    (jg * dd.get(k, j)).norm() / base
                })
                .into_iter()
                .filter(|p| p.0.abs() >= cutoff)
                .collect();
                let (sup, sup_half, tail_slope) = summarize(&per_j, half, cutoff);
                let noise = per_j
                    .iter()
                    .map(|&(j, _)| {
                        let jg = if gamma == 1 { j.abs().max(1) as f64 } else { 1.0 };
                        let low = sigma.column(j).iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
                        let base = low * sigma.weight.eval(j).powf(-sigma.rho * alpha as f64);
                        jg * noise_scale(sigma, j, alpha + gamma, beta) / base
                    })
                    .fold(0.0, f64::max);
                rows.push(SeminormRow {
                    alpha,
                    beta,
                    gamma,
                    sup,
                    sup_half,
                    tail_slope,
                    effective_lo: lo,
                    effective_hi: hi,
                    stable: is_stable(sup, sup_half, noise, tol),
                });
            }
        }
    }
    let bounds_stable = c1 >= (1.0 - tol) * c1h && c2 <= (1.0 + tol) * c2h;
    let verdict = c1 > 0.0 && c2.is_finite() && bounds_stable && rows.iter().all(|r| r.stable);
    Ok(HypoellipticityReport {
        m,
        l,
        cutoff,
        c1,
        c1_half: c1h,
        c2,
        c2_half: c2h,
        rows,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelSpec;
    use crate::numeric::factorial;

    fn std_weight(h: f64) -> Arc<WeightFunction> {
        Arc::new(WeightFunction::standard(&ModelSpec::new(h, false).unwrap()))
    }

    fn gen(f: &SymbolFamily, nx: usize, j: i64, w: Arc<WeightFunction>) -> SymbolGrid {
        f.generate(nx, -j, j, w, 1.0).unwrap()
    }

    #[test]
    fn forward_difference_examples() {
        let s = gen(&SymbolFamily::Index { claimed_order: 1.0 }, 8, 10, std_weight(1.0));
        let d = delta_forward(&s, 1).unwrap();
        assert_eq!(d.j_hi(), 9);
        assert!(d.values().iter().all(|z| *z == Complex64::new(1.0, 0.0)));
        let c = gen(
            &SymbolFamily::Separable {
                g: SpatialFactor::elliptic_demo(),
                m: 0.0,
            },
            8,
            10,
            std_weight(1.0),
        );
        for a in 1..4 {
            assert!(delta_forward(&c, a).unwrap().max_abs() < 1e-15);
        }
        assert!(delta_forward(&s, 21).is_err());
    }

    #[test]
    fn conjugate_difference_is_backward() {
        let s = gen(&SymbolFamily::Index { claimed_order: 1.0 }, 4, 5, std_weight(1.0));
        let d = delta_conjugate(&s, 1).unwrap();
        assert_eq!(d.j_lo(), -4);
        assert!(d.values().iter().all(|z| *z == Complex64::new(-1.0, 0.0)));
    }

    #[test]
    fn kernel_oracle_trivial_cases() {
        let sys = ModelSystem::with_params(2.0, 8, 64, false).unwrap();
        let w = std_weight(2.0);
        let one = SymbolFamily::MultiplierPower { m: 0.0 }.on_system(&sys, Arc::clone(&w), 1.0).unwrap();
        let rows = delta_kernel_oracle(&one, 1, &sys, &[0, 17, 40]).unwrap();
        assert!(rows.iter().flatten().all(|z| z.norm() < 1e-12));
        let idx = SymbolFamily::Index { claimed_order: 1.0 }.on_system(&sys, w, 1.0).unwrap();
        let rows = delta_kernel_oracle(&idx, 1, &sys, &[3, 50]).unwrap();
        assert!(rows.iter().flatten().all(|z| (z - 1.0).norm() < 1e-10));
    }

    #[test]
    fn kernel_oracle_matches_forward_difference_on_demo() {
        let sys = ModelSystem::with_params(2.0, 8, 64, false).unwrap();
        let s = SymbolFamily::EllipticDemo { m: 1.0 }.on_system(&sys, std_weight(2.0), 1.0).unwrap();
        for alpha in 0..3 {
            let d = delta_forward(&s, alpha).unwrap();
            let ks = [0usize, 9, 33, 63];
            let rows = delta_kernel_oracle(&s, alpha, &sys, &ks).unwrap();
            for (row, &k) in rows.iter().zip(&ks) {
                for (p, z) in row.iter().enumerate() {
                    let j = d.j_lo() + p as i64;
                    assert!((z - d.get(k, j)).norm() < 1e-8 * d.max_abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn taylor_inverse_first_order_is_scaled_derivative() {
        let c = taylor_inverse_matrix(1);
        let expect = Complex64::new(0.0, 2.0 * PI).inv();
        assert!((c[1][1] - expect).norm() < 1e-17);
        assert_eq!(c[1][0], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn d1_on_fundamental_mode_is_identity_factor() {
        // D^(1) e^{2πix} = e^{2πix}
        let w = std_weight(1.0);
        let s = SymbolGrid::from_fn(32, -2, 2, 0.0, 1.0, w, SpatialRegularity::Periodic, |x, _| {
            Complex64::from_polar(1.0, 2.0 * PI * x)
        })
        .unwrap();
        let d = d_derivative(&s, 1).unwrap();
        assert!(d.max_abs_diff(&s) < 1e-13);
        assert!(d_derivative(&s, 0).unwrap().max_abs_diff(&s) == 0.0);
    }

    #[test]
    fn d_derivative_is_falling_factorial_on_modes() {
        // D^(β) e^{2πinx} = n(n-1)...(n-β+1) e^{2πinx}
        let w = std_weight(1.0);
        for n in [-3i64, -1, 2, 5] {
            let s = SymbolGrid::from_fn(64, 0, 0, 0.0, 1.0, Arc::clone(&w), SpatialRegularity::Periodic, |x, _| {
                Complex64::from_polar(1.0, 2.0 * PI * n as f64 * x)
            })
            .unwrap();
            for beta in 0..5usize {
                let ff: f64 = (0..beta).map(|t| (n - t as i64) as f64).product();
                let d = d_derivative(&s, beta).unwrap();
                let expect = s.scale(Complex64::new(ff, 0.0));
                let tol = 1e-13 * 32f64.powi(beta as i32) + 1e-12 * ff.abs();
                assert!(d.max_abs_diff(&expect) < tol, "n={n} beta={beta}");
            }
        }
    }

    #[test]
    fn finite_difference_mode_on_sampled_symbols() {
        let w = std_weight(1.0);
        // non-periodic smooth profile
        let s = SymbolGrid::from_fn(200, -1, 1, 0.0, 1.0, w, SpatialRegularity::Sampled, |x, _| {
            Complex64::new((1.5 * x).exp(), 0.0)
        })
        .unwrap();
        assert!(matches!(d_derivative(&s, 1), Err(Error::NonSmoothSymbol(_))));
        for beta in 1..=3usize {
            let d = d_derivative_with(&s, beta, Differentiation::FiniteDifference).unwrap();
            // D^(β) = Σ_k C[β][k] ∂^k, ∂^k e^{1.5x} = 1.5^k e^{1.5x}
            let c = &taylor_inverse_matrix(beta)[beta];
            for k in [0usize, 3, 100, 199] {
                let x = k as f64 / 200.0;
                let expect: Complex64 = (0..=beta).map(|p| c[p] * 1.5f64.powi(p as i32)).sum::<Complex64>()
                    * (1.5 * x).exp();
                assert!((d.get(k, 0) - expect).norm() < 1e-7, "beta={beta} k={k}");
            }
        }
    }

    #[test]
    fn fornberg_reproduces_central_first_derivative() {
        let w = fornberg(0.0, &[-1.0, 0.0, 1.0], 1);
        assert!((w[0] + 0.5).abs() < 1e-15 && w[1].abs() < 1e-15 && (w[2] - 0.5).abs() < 1e-15);
        let w = fornberg(0.0, &[-1.0, 0.0, 1.0], 2);
        assert!((w[0] - 1.0).abs() < 1e-15 && (w[1] + 2.0).abs() < 1e-15);
    }

    #[test]
    fn taylor_matrix_rows() {
        let t = taylor_coefficient_matrix(3);
        let p = Complex64::new(0.0, 2.0 * PI);
        assert!((t[2][1] - p * p).norm() < 1e-12);
        assert!((t[3][2] - p.powu(3) * 3.0).norm() < 1e-10);
        assert_eq!(t[1][2], Complex64::new(0.0, 0.0));
        let _ = factorial(3);
    }

    #[test]
    fn seminorm_examples() {
        let w = std_weight(2.0);
        let one = gen(&SymbolFamily::MultiplierPower { m: 0.0 }, 32, 64, Arc::clone(&w));
        let r = seminorm_estimate(&one, 3, 2, &[0, 1], SYMBOL_STABILITY_TOL).unwrap();
        assert!(r.rows.iter().all(|row| row.sup <= 1.0 + 1e-12));
        assert!(r.member_m);

        let idx = gen(&SymbolFamily::Index { claimed_order: 0.0 }, 32, 64, Arc::clone(&w));
        let r = seminorm_estimate(&idx, 3, 2, &[0, 1], SYMBOL_STABILITY_TOL).unwrap();
        let row = r.rows.iter().find(|x| x.alpha == 0 && x.beta == 0 && x.gamma == 0).unwrap();
        assert!((row.tail_slope - 1.0).abs() < 0.1);
        assert!(!r.member_s && !r.member_m);
    }

    #[test]
    fn multiplier_membership_stable_under_doubling() {
        let w = std_weight(2.0);
        let f = SymbolFamily::MultiplierPower { m: 2.0 };
        let a = seminorm_estimate(&gen(&f, 32, 64, Arc::clone(&w)), 3, 2, &[0, 1], SYMBOL_STABILITY_TOL).unwrap();
        let b = seminorm_estimate(&gen(&f, 32, 128, w), 3, 2, &[0, 1], SYMBOL_STABILITY_TOL).unwrap();
        assert!(a.member_m && b.member_m);
        // rows that vanish exactly (Δ^3 Λ^2) carry only rounding noise
        for (x, y) in a.rows.iter().zip(&b.rows).filter(|(x, _)| x.sup > 1e-4) {
            assert!((y.sup - x.sup).abs() <= 0.1 * x.sup, "{x:?} {y:?}");
        }
    }

    #[test]
    fn ellipticity_examples() {
        let w = std_weight(2.0);
        let demo = gen(&SymbolFamily::EllipticDemo { m: 2.0 }, 64, 32, Arc::clone(&w));
        let r = m_ellipticity_check(&demo, 4, ELLIPTICITY_THRESHOLD, SYMBOL_STABILITY_TOL).unwrap();
        assert!(r.verdict && r.c_est >= 1.0 - 1e-12);

        let sine = gen(
            &SymbolFamily::Separable {
                g: SpatialFactor {
                    constant: 0.0,
                    cos: vec![],
                    sin: vec![1.0],
                },
                m: 2.0,
            },
            64,
            32,
            Arc::clone(&w),
        );
        assert!(!m_ellipticity_check(&sine, 4, ELLIPTICITY_THRESHOLD, SYMBOL_STABILITY_TOL).unwrap().verdict);

        let mp = gen(&SymbolFamily::MultiplierPower { m: 1.5 }, 8, 32, w);
        let r = m_ellipticity_check(&mp, 2, ELLIPTICITY_THRESHOLD, SYMBOL_STABILITY_TOL).unwrap();
        assert!((r.c_est - 1.0).abs() < 1e-12);
        assert!(m_ellipticity_check(&mp, 32, ELLIPTICITY_THRESHOLD, SYMBOL_STABILITY_TOL).is_err());
    }

    #[test]
    fn hypoellipticity_examples() {
        let w = std_weight(2.0);
        let mp = gen(&SymbolFamily::MultiplierPower { m: 2.0 }, 16, 64, Arc::clone(&w));
        let r = hypoellipticity_check(&mp, 2.0, 2.0, 4, 2, 2, SYMBOL_STABILITY_TOL).unwrap();
        assert!(r.verdict);
        assert!((r.c1 - 1.0).abs() < 1e-12 && (r.c2 - 1.0).abs() < 1e-12);

        let demo = gen(&SymbolFamily::EllipticDemo { m: 2.0 }, 64, 64, Arc::clone(&w));
        assert!(hypoellipticity_check(&demo, 2.0, 2.0, 4, 2, 2, SYMBOL_STABILITY_TOL).unwrap().verdict);

        let shifted = gen(
            &SymbolFamily::Shifted {
                g: SpatialFactor::elliptic_demo(),
                c: 0.3,
                m: 2.0,
            },
            64,
            64,
            w,
        );
        let r = hypoellipticity_check(&shifted, 2.0, 2.0, 4, 2, 2, SYMBOL_STABILITY_TOL).unwrap();
        assert!(!r.verdict);
        assert!(hypoellipticity_check(&demo, 1.0, 2.0, 4, 2, 2, SYMBOL_STABILITY_TOL).is_err());
    }

    #[test]
    fn binary_ops_intersect_ranges() {
        let w = std_weight(1.0);
        let a = SymbolFamily::MultiplierPower { m: 1.0 }.generate(4, -5, 5, Arc::clone(&w), 1.0).unwrap();
        let b = SymbolFamily::MultiplierPower { m: 1.0 }.generate(4, -2, 8, w, 1.0).unwrap();
        let p = a.mul(&b).unwrap();
        assert_eq!((p.j_lo(), p.j_hi()), (-2, 5));
        assert_eq!(p.order(), 2.0);
    }

    #[test]
    fn rho_is_validated() {
        let w = std_weight(1.0);
        assert!(SymbolFamily::MultiplierPower { m: 1.0 }.generate(4, -2, 2, Arc::clone(&w), 0.0).is_err());
        assert!(SymbolFamily::MultiplierPower { m: 1.0 }.generate(4, -2, 2, w, 1.5).is_err());
    }
}
