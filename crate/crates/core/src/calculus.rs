//! Quantization, operator matrices, symbol recovery, the composition and
//! adjoint expansions, asymptotic sums and the parametrix.
//!
//! `T_σ f(x) = Σ_ξ σ(x, ξ) f̂(ξ) u_ξ(x)`. Matrices act on 𝔏-coefficients:
//! `M[η][ξ] = ⟨T_σ u_ξ, v_η⟩`, which is the Fourier coefficient of
//! `σ(·, ξ)` at `η - ξ`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::FrequencyWindow;
use crate::numeric::{compensated_sum, factorial, smoothstep};
use crate::symbols::{
    d_derivative, delta_conjugate, delta_forward, m_ellipticity_check, EllipticityReport, SpatialRegularity,
    SymbolGrid, ELLIPTICITY_THRESHOLD, SYMBOL_STABILITY_TOL,
};
use crate::transform::{CoefficientVector, GridFunction, Transform, TransformKind};
use crate::weights::WeightFunction;

/// Dense operator on window coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    window: FrequencyWindow,
    entries: DMatrix<Complex64>,
}

impl OperatorMatrix {
    pub fn new(window: FrequencyWindow, entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() != window.len() || entries.ncols() != window.len() {
            return Err(Error::GeometryMismatch(format!(
                "matrix is {}x{}, window has {} modes",
                entries.nrows(),
                entries.ncols(),
                window.len()
            )));
        }
        Ok(Self { window, entries })
    }

    pub fn identity(window: FrequencyWindow) -> Self {
        Self {
            window,
            entries: DMatrix::identity(window.len(), window.len()),
        }
    }

    pub fn window(&self) -> FrequencyWindow {
        self.window
    }

    pub fn dim(&self) -> usize {
        self.window.len()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<Complex64> {
        self.entries
    }

    /// Entry `M[η][ξ]`.
    pub fn get(&self, eta: i64, xi: i64) -> Complex64 {
        let w = self.window;
        self.entries[(w.position(eta).expect("eta in window"), w.position(xi).expect("xi in window"))]
    }

    pub fn apply(&self, a: &CoefficientVector) -> Result<CoefficientVector> {
        if a.window() != self.window {
            return Err(Error::GeometryMismatch("coefficient window differs from matrix window".into()));
        }
        let b = &self.entries * a.to_dvector();
        CoefficientVector::new(a.kind(), self.window, b.iter().copied().collect())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_window(other)?;
        Ok(Self {
            window: self.window,
            entries: &self.entries * &other.entries,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_window(other)?;
        Ok(Self {
            window: self.window,
            entries: &self.entries - &other.entries,
        })
    }

    fn same_window(&self, other: &Self) -> Result<()> {
        if self.window != other.window {
            return Err(Error::GeometryMismatch("operator matrices on different windows".into()));
        }
        Ok(())
    }

    /// Conjugate transpose. If `M` represents `T` in the 𝔏-basis, `Mᴴ`
    /// represents `T*` in the 𝔏*-basis.
    pub fn adjoint(&self) -> Self {
        Self {
            window: self.window,
            entries: self.entries.adjoint(),
        }
    }

    /// Sub-block with the given row and column frequencies.
    pub fn block(&self, rows: &[i64], cols: &[i64]) -> DMatrix<Complex64> {
        let w = self.window;
        let r: Vec<usize> = rows.iter().map(|&j| w.position(j).expect("row in window")).collect();
        let c: Vec<usize> = cols.iter().map(|&j| w.position(j).expect("col in window")).collect();
        DMatrix::from_fn(r.len(), c.len(), |p, q| self.entries[(r[p], c[q])])
    }

    /// All rows, selected columns.
    pub fn columns(&self, cols: &[i64]) -> DMatrix<Complex64> {
        let rows: Vec<i64> = self.window.indices().collect();
        self.block(&rows, cols)
    }

    pub fn spectral_norm(&self) -> f64 {
        spectral_norm(&self.entries)
    }

    /// `Lᴴ M L⁻ᴴ` with `G = L Lᴴ`: the matrix in an L²-orthonormal basis of
    /// the window span.
    pub fn l2_representation(&self, transform: &Transform) -> Result<DMatrix<Complex64>> {
        if transform.window() != self.window {
            return Err(Error::GeometryMismatch("transform window differs from matrix window".into()));
        }
        let l = transform.gram_factor();
        let lh = l.adjoint();
        // M L⁻ᴴ = (L⁻¹ Mᴴ)ᴴ
        let x = l
            .solve_lower_triangular(&self.entries.adjoint())
            .ok_or_else(|| Error::Singular("Gram factor".into()))?;
        Ok(lh * x.adjoint())
    }

    /// Operator norm on the window span in L².
    pub fn l2_norm(&self, transform: &Transform) -> Result<f64> {
        Ok(spectral_norm(&self.l2_representation(transform)?))
    }

    /// Singular values of the L²-orthonormal representation, descending.
    pub fn l2_singular_values(&self, transform: &Transform) -> Result<Vec<f64>> {
        let m = self.l2_representation(transform)?;
        Ok(singular_values_desc(m))
    }
}

pub fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

pub fn singular_values_desc(m: DMatrix<Complex64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Frequencies `j` of the window with `lo <= |j| <= hi`.
pub fn modes_between(window: FrequencyWindow, lo: i64, hi: i64) -> Vec<i64> {
    window.indices().filter(|j| j.abs() >= lo && j.abs() <= hi).collect()
}

/// Interior modes `|j| <= J/2`.
pub fn interior_modes(window: FrequencyWindow) -> Vec<i64> {
    let h = window.half_width() as i64 / 2;
    modes_between(window, 0, h)
}

fn check_symbol_on(sigma: &SymbolGrid, transform: &Transform) -> Result<()> {
    let w = transform.window();
    if sigma.nx() != transform.system().grid().len() {
        return Err(Error::GeometryMismatch(format!(
            "symbol sampled on {} points, grid has {}",
            sigma.nx(),
            transform.system().grid().len()
        )));
    }
    if !(sigma.contains(w.lo()) && sigma.contains(w.hi())) {
        return Err(Error::WindowTooSmall(format!(
            "symbol range {}..={} does not cover the window {}..={}",
            sigma.j_lo(),
            sigma.j_hi(),
            w.lo(),
            w.hi()
        )));
    }
    Ok(())
}

/// `e^{2πi m / N}` for `m < N`.
fn roots_of_unity(n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|m| Complex64::from_polar(1.0, 2.0 * PI * m as f64 / n as f64))
        .collect()
}

fn synthesize_with(
    sigma: &SymbolGrid,
    coeffs: &CoefficientVector,
    weight: &[f64],
    roots: &[Complex64],
) -> GridFunction {
    let n = roots.len();
    let w = coeffs.window();
    let values = (0..n)
        .map(|k| {
            let s = compensated_sum(w.indices().zip(coeffs.values()).map(|(j, a)| {
                let phase = roots[((j * k as i64).rem_euclid(n as i64)) as usize];
                sigma.get(k, j) * a * phase
            }));
            s * weight[k]
        })
        .collect();
    GridFunction::new(values).expect("finite inputs give finite samples")
}

/// `(T_σ f)(x_k) = Σ_j σ(x_k, j) f̂(j) u_j(x_k)` with `f̂ = forward_L(f)`.
pub fn quantize_apply(sigma: &SymbolGrid, f: &GridFunction, transform: &Transform) -> Result<GridFunction> {
    check_symbol_on(sigma, transform)?;
    let a = transform.forward_l(f)?;
    Ok(synthesize_with(sigma, &a, transform.u_weight(), &roots_of_unity(f.len())))
}

/// `(T_τ f)(x_k) = Σ_j τ(x_k, j) f̂_*(j) v_j(x_k)` with `f̂_* = forward_Lstar(f)`.
pub fn quantize_apply_star(tau: &SymbolGrid, f: &GridFunction, transform: &Transform) -> Result<GridFunction> {
    check_symbol_on(tau, transform)?;
    let a = transform.forward_lstar(f)?;
    Ok(synthesize_with(tau, &a, transform.v_weight(), &roots_of_unity(f.len())))
}

fn assemble_with(sigma: &SymbolGrid, transform: &Transform, kind: TransformKind) -> Result<OperatorMatrix> {
    check_symbol_on(sigma, transform)?;
    let w = transform.window();
    let system = transform.system();
    let mut entries = DMatrix::zeros(w.len(), w.len());
    for (q, xi) in w.indices().enumerate() {
        if sigma.column(xi).iter().all(|z| *z == sigma.column(xi)[0]) {
            // x-independent column: the transform of a multiple of `u_ξ`
            entries[(q, q)] = sigma.column(xi)[0];
            continue;
        }
        let basis = match kind {
            TransformKind::L => system.u_samples(xi),
            TransformKind::LStar => system.v_samples(xi),
        };
        let g = GridFunction::new(basis.iter().zip(sigma.column(xi)).map(|(b, s)| b * s).collect())?;
        let col = match kind {
            TransformKind::L => transform.forward_l(&g)?,
            TransformKind::LStar => transform.forward_lstar(&g)?,
        };
        for (p, z) in col.values().iter().enumerate() {
            entries[(p, q)] = *z;
        }
    }
    OperatorMatrix::new(w, entries)
}

/// Column `ξ` is `forward_L(x ↦ σ(x, ξ) u_ξ(x))`.
pub fn assemble_matrix(sigma: &SymbolGrid, transform: &Transform) -> Result<OperatorMatrix> {
    assemble_with(sigma, transform, TransformKind::L)
}

/// 𝔏*-quantized operator on 𝔏*-coefficients: column `ξ` is
/// `forward_Lstar(x ↦ τ(x, ξ) v_ξ(x))`.
pub fn assemble_matrix_star(tau: &SymbolGrid, transform: &Transform) -> Result<OperatorMatrix> {
    assemble_with(tau, transform, TransformKind::LStar)
}

/// Metadata attached to a recovered symbol.
#[derive(Debug, Clone)]
pub struct SymbolMeta {
    pub weight: Arc<WeightFunction>,
    pub order: f64,
    pub rho: f64,
}

/// `σ_A(x_k, j) = (A u_j)(x_k) / u_j(x_k)` over the window.
pub fn symbol_from_operator<F>(apply: F, transform: &Transform, meta: SymbolMeta) -> Result<SymbolGrid>
where
    F: Fn(&GridFunction) -> Result<GridFunction>,
{
    let system = transform.system();
    let w = transform.window();
    let nx = system.grid().len();
    let mut values = Vec::with_capacity(nx * w.len());
    for j in w.indices() {
        let u = system.u_samples(j);
        let au = apply(&GridFunction::new(u.clone())?)?;
        if au.len() != nx {
            return Err(Error::GeometryMismatch("operator changed the grid size".into()));
        }
        for (k, (a, b)) in au.values().iter().zip(&u).enumerate() {
            let mag = b.norm();
            if mag < 1e-14 {
                return Err(Error::DivisionGuard {
                    x_index: k,
                    j,
                    magnitude: mag,
                });
            }
            values.push(a / b);
        }
    }
    SymbolGrid::new(
        nx,
        w.lo(),
        w.hi(),
        values,
        meta.order,
        meta.rho,
        meta.weight,
        SpatialRegularity::Periodic,
    )
}

/// Symbol of a matrix operator: `σ(x, ξ) = Σ_η M[η][ξ] e^{2πi(η-ξ)x}`.
pub fn symbol_from_matrix(m: &OperatorMatrix, nx: usize, meta: SymbolMeta) -> Result<SymbolGrid> {
    let w = m.window();
    let roots = roots_of_unity(nx);
    let mut values = Vec::with_capacity(nx * w.len());
    for (q, xi) in w.indices().enumerate() {
        for k in 0..nx {
            values.push(compensated_sum(w.indices().enumerate().map(|(p, eta)| {
                m.entries[(p, q)] * roots[((eta - xi) * k as i64).rem_euclid(nx as i64) as usize]
            })));
        }
    }
    SymbolGrid::new(
        nx,
        w.lo(),
        w.hi(),
        values,
        meta.order,
        meta.rho,
        meta.weight,
        SpatialRegularity::Periodic,
    )
}

// ---------------------------------------------------------------------------
// expansions

/// `Σ_{α<N} (1/α!) (Δ^α σ_A)(D^(α) σ_B)` on the shrunken range.
pub fn compose_symbols(a: &SymbolGrid, b: &SymbolGrid, n: usize) -> Result<SymbolGrid> {
    if n == 0 {
        return Err(Error::InvalidParameter("truncation order N must be at least 1".into()));
    }
    let mut acc: Option<SymbolGrid> = None;
    for alpha in 0..n {
        let da = delta_forward(a, alpha)?;
        let db = d_derivative(b, alpha)?;
        let term = da.mul(&db)?.scale(Complex64::new(1.0 / factorial(alpha), 0.0));
        acc = Some(match acc {
            None => term,
            Some(s) => s.add(&term)?,
        });
    }
    let out = acc.expect("n >= 1");
    Ok(out.with_order(a.order() + b.order()))
}

/// 𝔏*-symbol of the adjoint, `Σ_{α<N} (1/α!) Δ̃^α conj(D^(α) σ)`.
/// Conjugation is applied after `D^(α)`, as the adjoint expansion is derived.
pub fn adjoint_symbol(sigma: &SymbolGrid, n: usize) -> Result<SymbolGrid> {
    if n == 0 {
        return Err(Error::InvalidParameter("truncation order N must be at least 1".into()));
    }
    let mut acc: Option<SymbolGrid> = None;
    for alpha in 0..n {
        let d = d_derivative(sigma, alpha)?.conj();
        let term = delta_conjugate(&d, alpha)?.scale(Complex64::new(1.0 / factorial(alpha), 0.0));
        acc = Some(match acc {
            None => term,
            Some(s) => s.add(&term)?,
        });
    }
    Ok(acc.expect("n >= 1").with_order(sigma.order()))
}

/// Cutoff `χ(t)`: 0 for `|t| <= 1/2`, 1 for `|t| >= 1`, C¹ in between.
pub fn cutoff_chi(t: f64) -> f64 {
    smoothstep(2.0 * t.abs() - 1.0)
}

/// Default dyadic schedule `ε_l = 2^{-l}` for `l >= 1`.
pub fn dyadic_schedule(terms: usize) -> Vec<f64> {
    (1..terms).map(|l| 0.5f64.powi(l as i32)).collect()
}

/// `σ_0 + Σ_{l>=1} χ(ε_l ξ) σ_l`. The leading term is not cut off, so the
/// result lives on its range; later terms contribute where they are defined.
/// `eps[l-1]` is `ε_l`.
pub fn asymptotic_sum(terms: &[SymbolGrid], eps: Option<&[f64]>) -> Result<SymbolGrid> {
    let first = terms
        .first()
        .ok_or_else(|| Error::InvalidParameter("asymptotic sum of an empty list".into()))?;
    if terms.windows(2).any(|p| p[1].order() >= p[0].order()) {
        return Err(Error::InvalidParameter("term orders must be strictly decreasing".into()));
    }
    let default = dyadic_schedule(terms.len());
    let eps = eps.unwrap_or(&default);
    if eps.len() != terms.len() - 1 || eps.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "need {} positive cutoff parameters, got {:?}",
            terms.len() - 1,
            eps
        )));
    }
    if terms.iter().any(|t| t.nx() != first.nx()) {
        return Err(Error::GeometryMismatch("terms sampled on different grids".into()));
    }
    let out = first.map_indexed(|k, j, z0| {
        let mut z = z0;
        for (t, e) in terms[1..].iter().zip(eps) {
            if t.contains(j) {
                let c = cutoff_chi(e * j as f64);
                if c != 0.0 {
                    z += t.get(k, j) * c;
                }
            }
        }
        z
    });
    Ok(out)
}

// ---------------------------------------------------------------------------
// parametrix

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParametrixOptions {
    /// number of terms `N` in the recursion
    pub terms: usize,
    /// cutoff radius `R`: `ψ = 0` for `|j| <= R`, `ψ = 1` for `|j| >= 2R`
    pub cutoff: i64,
    /// extra modes skipped beyond `2R` when measuring the interior residual
    pub guard: i64,
    /// `ε_l` for `l >= 1`; dyadic when absent
    #[serde(default)]
    pub epsilons: Option<Vec<f64>>,
}

impl Default for ParametrixOptions {
    fn default() -> Self {
        Self {
            terms: 3,
            cutoff: 4,
            guard: 4,
            epsilons: None,
        }
    }
}

pub const PARAMETRIX_CONVENTION: &str =
    "sigma_l uses weights 1/gamma! without (-i)^gamma phases, the same convention as compose_symbols";

#[derive(Debug, Clone)]
pub struct ParametrixResult {
    pub terms: Vec<SymbolGrid>,
    pub combined: SymbolGrid,
    pub cutoff: i64,
    pub guard: i64,
    pub ellipticity: EllipticityReport,
    /// `‖(M_B M_σ - I)|_{2R <= |j| <= J/2}‖₂`
    pub residual_literal: f64,
    /// same on `2R + guard <= |j| <= J/2`
    pub residual_interior: f64,
    pub literal_modes: Vec<i64>,
    pub interior_modes: Vec<i64>,
    /// `sup |r(x, ξ)|` of the residual symbol over the interior modes
    pub residual_symbol_sup: f64,
    pub convention: &'static str,
}

/// `ψ(j)`: 0 for `|j| <= R`, 1 for `|j| >= 2R`; identically 1 when `R = 0`.
pub fn radial_cutoff(j: i64, r: i64) -> f64 {
    if r <= 0 {
        1.0
    } else {
        smoothstep((j.abs() - r) as f64 / r as f64)
    }
}

/// Left parametrix of an M-elliptic symbol, with residuals measured on the
/// transform's window.
pub fn parametrix(sigma: &SymbolGrid, transform: &Transform, opts: &ParametrixOptions) -> Result<ParametrixResult> {
    if opts.terms == 0 {
        return Err(Error::InvalidParameter("parametrix needs at least one term".into()));
    }
    if opts.cutoff < 0 || opts.guard < 0 {
        return Err(Error::InvalidParameter("cutoff and guard must be nonnegative".into()));
    }
    let ellipticity = m_ellipticity_check(sigma, opts.cutoff, ELLIPTICITY_THRESHOLD, SYMBOL_STABILITY_TOL)?;
    if !ellipticity.verdict {
        return Err(Error::Hypothesis(format!(
            "symbol is not M-elliptic of order {} beyond R = {} (min |sigma|/Lambda^m = {:.3e})",
            sigma.order(),
            opts.cutoff,
            ellipticity.c_est
        )));
    }
    let r = opts.cutoff;
    let sigma0 = sigma
        .map_indexed(|_, j, z| {
            let psi = radial_cutoff(j, r);
            if psi == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                psi / z
            }
        })
        .with_order(-sigma.order());
    let derivs: Vec<SymbolGrid> = (0..opts.terms).map(|g| d_derivative(sigma, g)).collect::<Result<_>>()?;
    let rho = sigma.rho();
    let mut terms = vec![sigma0.clone()];
    for l in 1..opts.terms {
        let mut acc: Option<SymbolGrid> = None;
        for (k, prev) in terms.iter().enumerate() {
            let gamma = l - k;
            let part = derivs[gamma]
                .mul(&delta_forward(prev, gamma)?)?
                .scale(Complex64::new(1.0 / factorial(gamma), 0.0));
            acc = Some(match acc {
                None => part,
                Some(s) => s.add(&part)?,
            });
        }
        let t = acc
            .expect("l >= 1")
            .mul(&sigma0)?
            .scale(Complex64::new(-1.0, 0.0))
            .with_order(-sigma.order() - rho * l as f64);
        terms.push(t);
    }
    let combined = asymptotic_sum(&terms, opts.epsilons.as_deref())?.with_order(-sigma.order());

    let w = transform.window();
    let half = w.half_width() as i64 / 2;
    let literal_modes = modes_between(w, 2 * r, half);
    let interior_modes = modes_between(w, 2 * r + opts.guard, half);
    if interior_modes.is_empty() {
        return Err(Error::WindowTooSmall(format!(
            "no modes with {} <= |j| <= {half}",
            2 * r + opts.guard
        )));
    }
    let ms = assemble_matrix(sigma, transform)?;
    let mb = assemble_matrix(&combined, transform)?;
    let resid = mb.mul(&ms)?.sub(&OperatorMatrix::identity(w))?;
    let residual_literal = spectral_norm(&resid.columns(&literal_modes));
    let residual_interior = spectral_norm(&resid.columns(&interior_modes));
    let nx = sigma.nx();
    let roots = roots_of_unity(nx);
    let mut residual_symbol_sup = 0.0f64;
    for &xi in &interior_modes {
        let q = w.position(xi).expect("interior mode in window");
        for k in 0..nx {
            let z = compensated_sum(w.indices().enumerate().map(|(p, eta)| {
                resid.entries[(p, q)] * roots[((eta - xi) * k as i64).rem_euclid(nx as i64) as usize]
            }));
            residual_symbol_sup = residual_symbol_sup.max(z.norm());
        }
    }
    Ok(ParametrixResult {
        terms,
        combined,
        cutoff: r,
        guard: opts.guard,
        ellipticity,
        residual_literal,
        residual_interior,
        literal_modes,
        interior_modes,
        residual_symbol_sup,
        convention: PARAMETRIX_CONVENTION,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelSystem;
    use crate::numeric::seeded_rng;
    use crate::symbols::{seminorm_estimate, SpatialFactor, SymbolFamily};

    fn setup(h: f64, j: usize, nx: usize) -> (Transform, Arc<WeightFunction>) {
        let sys = ModelSystem::with_params(h, j, nx, false).unwrap();
        let w = Arc::new(WeightFunction::standard(sys.spec()));
        (Transform::new(sys), w)
    }

    fn on(t: &Transform, f: SymbolFamily, w: &Arc<WeightFunction>, pad: i64) -> SymbolGrid {
        let win = t.window();
        f.generate(t.system().grid().len(), win.lo() - pad, win.hi() + pad, Arc::clone(w), 1.0)
            .unwrap()
    }

    fn random_f(t: &Transform, seed: u64) -> GridFunction {
        let mut rng = seeded_rng(seed);
        let a = t.random_coefficients(t.window().half_width() / 2, &mut rng);
        t.inverse_l(&a).unwrap()
    }

    fn meta(w: &Arc<WeightFunction>) -> SymbolMeta {
        SymbolMeta {
            weight: Arc::clone(w),
            order: 0.0,
            rho: 1.0,
        }
    }

    #[test]
    fn identity_symbol_is_identity() {
        let (t, w) = setup(2.0, 16, 128);
        let one = on(&t, SymbolFamily::MultiplierPower { m: 0.0 }, &w, 0);
        let f = random_f(&t, 1);
        assert!(quantize_apply(&one, &f, &t).unwrap().max_abs_diff(&f) < 1e-10);
    }

    #[test]
    fn spatial_symbol_multiplies() {
        let (t, w) = setup(2.0, 16, 128);
        let g = SpatialFactor::elliptic_demo();
        let s = on(&t, SymbolFamily::Separable { g: g.clone(), m: 0.0 }, &w, 0);
        let f = random_f(&t, 2);
        let tf = quantize_apply(&s, &f, &t).unwrap();
        let expect = GridFunction::new(
            f.values()
                .iter()
                .zip(t.system().grid().nodes())
                .map(|(z, x)| z * g.eval(x))
                .collect(),
        )
        .unwrap();
        assert!(tf.max_abs_diff(&expect) < 1e-10);
    }

    #[test]
    fn multiplier_on_eigenfunction() {
        let (t, w) = setup(2.0, 16, 128);
        let s = on(&t, SymbolFamily::MultiplierPower { m: 2.0 }, &w, 0);
        let u = GridFunction::new(t.system().u_samples(5)).unwrap();
        let tu = quantize_apply(&s, &u, &t).unwrap();
        let l2 = w.eval(5).powi(2);
        assert!(tu.max_abs_diff(&u.map(|z| z * l2)) < 1e-9 * l2);
    }

    #[test]
    fn star_quantization_mirrors() {
        let (t, w) = setup(2.0, 16, 128);
        let one = on(&t, SymbolFamily::MultiplierPower { m: 0.0 }, &w, 0);
        let v = GridFunction::new(t.system().v_samples(-3)).unwrap();
        assert!(quantize_apply_star(&one, &v, &t).unwrap().max_abs_diff(&v) < 1e-10);
        let s = on(&t, SymbolFamily::MultiplierPower { m: 1.0 }, &w, 0);
        let tv = quantize_apply_star(&s, &v, &t).unwrap();
        assert!(tv.max_abs_diff(&v.map(|z| z * w.eval(-3))) < 1e-10 * w.eval(-3));
        let g = SpatialFactor::elliptic_demo();
        let s = on(&t, SymbolFamily::Separable { g: g.clone(), m: 0.0 }, &w, 0);
        let mut rng = seeded_rng(4);
        let a = t.random_coefficients(8, &mut rng);
        let a = CoefficientVector::new(TransformKind::LStar, a.window(), a.values().to_vec()).unwrap();
        let f = t.inverse_lstar(&a).unwrap();
        let tf = quantize_apply_star(&s, &f, &t).unwrap();
        let expect = GridFunction::new(
            f.values()
                .iter()
                .zip(t.system().grid().nodes())
                .map(|(z, x)| z * g.eval(x))
                .collect(),
        )
        .unwrap();
        assert!(tf.max_abs_diff(&expect) < 1e-10);
    }

    #[test]
    fn matrix_structure() {
        let (t, w) = setup(2.0, 8, 64);
        let mp = on(&t, SymbolFamily::MultiplierPower { m: 1.0 }, &w, 0);
        let m = assemble_matrix(&mp, &t).unwrap();
        for eta in t.window().indices() {
            for xi in t.window().indices() {
                let z = m.get(eta, xi);
                if eta == xi {
                    assert_eq!(z, Complex64::new(w.eval(xi), 0.0));
                } else {
                    assert_eq!(z, Complex64::new(0.0, 0.0));
                }
            }
        }
        let win = t.window();
        let shift = SymbolGrid::from_fn(64, win.lo(), win.hi(), 0.0, 1.0, Arc::clone(&w), SpatialRegularity::Periodic, |x, _| {
            Complex64::from_polar(1.0, 2.0 * PI * x)
        })
        .unwrap();
        let m = assemble_matrix(&shift, &t).unwrap();
        for eta in win.indices() {
            for xi in win.indices() {
                let expect = if eta == xi + 1 { 1.0 } else { 0.0 };
                assert!((m.get(eta, xi) - expect).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn matvec_matches_quantize_apply() {
        let (t, w) = setup(2.0, 16, 128);
        let s = on(
            &t,
            SymbolFamily::Shifted {
                g: SpatialFactor::elliptic_demo(),
                c: 0.13,
                m: 1.0,
            },
            &w,
            0,
        );
        let m = assemble_matrix(&s, &t).unwrap();
        for seed in 0..4 {
            let f = random_f(&t, seed);
            let lhs = m.apply(&t.forward_l(&f).unwrap()).unwrap();
            let rhs = t.forward_l(&quantize_apply(&s, &f, &t).unwrap()).unwrap();
            assert!(lhs.max_abs_diff(&rhs) < 1e-10 * lhs.l2_norm().max(1.0));
        }
    }

    #[test]
    fn symbol_recovery() {
        let (t, w) = setup(2.0, 8, 64);
        let m = meta(&w);
        let id = symbol_from_operator(|f| Ok(f.clone()), &t, m.clone()).unwrap();
        assert!(id.values().iter().all(|z| (z - 1.0).norm() < 1e-14));
        let g = SpatialFactor::elliptic_demo();
        let nodes: Vec<f64> = t.system().grid().nodes().collect();
        let mult = symbol_from_operator(
            |f| GridFunction::new(f.values().iter().zip(&nodes).map(|(z, x)| z * g.eval(*x)).collect()),
            &t,
            m.clone(),
        )
        .unwrap();
        for j in t.window().indices() {
            for (k, x) in nodes.iter().enumerate() {
                assert!((mult.get(k, j) - g.eval(*x)).norm() < 1e-13);
            }
        }
        let s = on(&t, SymbolFamily::EllipticDemo { m: 1.0 }, &w, 0);
        let back = symbol_from_operator(|f| quantize_apply(&s, f, &t), &t, m.clone()).unwrap();
        assert!(back.max_abs_diff(&s) < 1e-10 * s.max_abs());
        // edge columns lose the side band that falls outside the window
        let via_matrix = symbol_from_matrix(&assemble_matrix(&s, &t).unwrap(), 64, m).unwrap();
        let inner = |g: &SymbolGrid| g.restrict(-7, 7).unwrap();
        assert!(inner(&via_matrix).max_abs_diff(&inner(&s)) < 1e-10 * s.max_abs());
    }

    #[test]
    fn zero_operator_has_zero_symbol() {
        let (t, w) = setup(2.0, 4, 32);
        let zero = symbol_from_operator(|f| Ok(f.map(|_| Complex64::new(0.0, 0.0))), &t, meta(&w)).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
    }

    #[test]
    fn composition_with_multiplier_right_is_exact() {
        let (t, w) = setup(2.0, 16, 128);
        let a = on(&t, SymbolFamily::EllipticDemo { m: 1.0 }, &w, 4);
        let b = on(&t, SymbolFamily::MultiplierPower { m: 1.0 }, &w, 4);
        let prod = assemble_matrix(&a, &t).unwrap().mul(&assemble_matrix(&b, &t).unwrap()).unwrap();
        for n in 1..=3 {
            let c = compose_symbols(&a, &b, n).unwrap();
            assert_eq!(c.order(), 2.0);
            let mc = assemble_matrix(&c, &t).unwrap();
            let d = mc.sub(&prod).unwrap().spectral_norm();
            assert!(d <= 1e-10 * prod.spectral_norm(), "N={n}: {d}");
        }
    }

    #[test]
    fn composition_with_identity_left() {
        let (t, w) = setup(2.0, 8, 64);
        let one = on(&t, SymbolFamily::MultiplierPower { m: 0.0 }, &w, 4);
        let b = on(&t, SymbolFamily::EllipticDemo { m: 1.0 }, &w, 4);
        for n in 1..=3 {
            let c = compose_symbols(&one, &b, n).unwrap();
            assert!(c.max_abs_diff(&b) < 1e-12 * b.max_abs());
        }
        assert!(compose_symbols(&one, &b, 0).is_err());
    }

    #[test]
    fn adjoint_trivial_cases() {
        let (t, w) = setup(2.0, 8, 64);
        let re = on(&t, SymbolFamily::MultiplierPower { m: 1.0 }, &w, 4);
        let a = adjoint_symbol(&re, 3).unwrap();
        assert!(a.max_abs_diff(&re) < 1e-12);
        let cx = re.scale(Complex64::new(0.3, 0.7));
        let a = adjoint_symbol(&cx, 2).unwrap();
        assert!(a.max_abs_diff(&cx.conj()) < 1e-12);
    }

    fn adjoint_defect(t: &Transform, sigma: &SymbolGrid, n: usize) -> f64 {
        let interior = interior_modes(t.window());
        let exact = assemble_matrix(sigma, t).unwrap().adjoint();
        let tau = adjoint_symbol(sigma, n).unwrap();
        let approx = assemble_matrix_star(&tau, t).unwrap();
        spectral_norm(&(approx.block(&interior, &interior) - exact.block(&interior, &interior)))
    }

    #[test]
    fn adjoint_defect_decreases() {
        let sys = ModelSystem::with_params(2.0, 64, 512, false).unwrap();
        let t = Transform::new(sys);
        let w = Arc::new(WeightFunction::smoothed_integer());
        let s = on(&t, SymbolFamily::EllipticDemo { m: 1.0 }, &w, 6);
        let d: Vec<f64> = (1..=3).map(|n| adjoint_defect(&t, &s, n)).collect();
        assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
        let s0 = on(&t, SymbolFamily::EllipticDemo { m: 0.0 }, &w, 6);
        for n in 1..=3 {
            assert!(adjoint_defect(&t, &s0, n) < 1e-12);
        }
    }

    #[test]
    fn adjoint_pairing_contract() {
        let (t, w) = setup(2.0, 32, 256);
        let s = on(&t, SymbolFamily::EllipticDemo { m: 0.0 }, &w, 6);
        let tau = adjoint_symbol(&s, 2).unwrap();
        let nx = t.system().grid().len() as f64;
        let inner = |f: &GridFunction, g: &GridFunction| -> Complex64 {
            f.values().iter().zip(g.values()).map(|(a, b)| a * b.conj()).sum::<Complex64>() / nx
        };
        for seed in 0..3 {
            let f = random_f(&t, 10 + seed);
            let mut rng = seeded_rng(20 + seed);
            let b = t.random_coefficients(8, &mut rng);
            let g = t
                .inverse_lstar(&CoefficientVector::new(TransformKind::LStar, b.window(), b.values().to_vec()).unwrap())
                .unwrap();
            let lhs = inner(&quantize_apply(&s, &f, &t).unwrap(), &g);
            let rhs = inner(&f, &quantize_apply_star(&tau, &g, &t).unwrap());
            assert!((lhs - rhs).norm() < 1e-9 * lhs.norm().max(1.0));
        }
    }

    #[test]
    fn asymptotic_sum_examples() {
        let w = Arc::new(WeightFunction::smoothed_integer());
        let a = SymbolFamily::MultiplierPower { m: 0.0 }.generate(4, -20, 20, Arc::clone(&w), 1.0).unwrap();
        let single = asymptotic_sum(std::slice::from_ref(&a), None).unwrap();
        assert_eq!(single.max_abs_diff(&a), 0.0);
        let b = SymbolFamily::MultiplierPower { m: -1.0 }.generate(4, -20, 20, Arc::clone(&w), 1.0).unwrap();
        let s = asymptotic_sum(&[a.clone(), b.clone()], Some(&[0.1])).unwrap();
        for j in -20..=20i64 {
            let c = cutoff_chi(0.1 * j as f64);
            let expect = 1.0 + c * w.eval(j).powi(-1);
            assert!((s.get(0, j) - expect).norm() < 1e-15);
            if j.abs() <= 5 {
                assert_eq!(s.get(0, j), Complex64::new(1.0, 0.0));
            }
            if j.abs() >= 10 {
                assert!((s.get(0, j) - (1.0 + w.eval(j).powi(-1))).norm() < 1e-15);
            }
        }
        assert!(asymptotic_sum(&[], None).is_err());
        assert!(asymptotic_sum(&[b.clone(), a.clone()], None).is_err());
        // remainder beyond the partial sum is of the next order on the outer shell
        let gen = |m: f64| SymbolFamily::MultiplierPower { m }.generate(4, -40, 40, Arc::clone(&w), 1.0).unwrap();
        let (a, b, c) = (gen(0.0), gen(-1.0), gen(-2.0));
        let s = asymptotic_sum(&[a.clone(), b.clone(), c], None).unwrap();
        let rem = s.sub(&a).unwrap().sub(&b).unwrap().restrict(-40, 40).unwrap().with_order(-2.0);
        let outer = rem.map_indexed(|_, j, z| if j.abs() >= 8 { z } else { Complex64::new(0.0, 0.0) });
        let r = seminorm_estimate(&outer, 2, 0, &[0], SYMBOL_STABILITY_TOL).unwrap();
        assert!(r.member_s, "{r:?}");
    }

    #[test]
    fn parametrix_multiplier_is_exact() {
        let (t, w) = setup(2.0, 32, 256);
        let s = on(&t, SymbolFamily::MultiplierPower { m: 2.0 }, &w, 6);
        let opts = ParametrixOptions {
            terms: 3,
            cutoff: 3,
            guard: 0,
            epsilons: None,
        };
        let p = parametrix(&s, &t, &opts).unwrap();
        assert!(p.residual_literal < 1e-10, "{}", p.residual_literal);
        assert!(p.terms[1].max_abs() < 1e-12 && p.terms[2].max_abs() < 1e-12);
        for j in [-20i64, 7, 16] {
            assert!((p.terms[0].get(0, j) - w.eval(j).powi(-2)).norm() < 1e-15);
        }
    }

    #[test]
    fn parametrix_rejects_non_elliptic() {
        let (t, w) = setup(2.0, 16, 128);
        let s = on(
            &t,
            SymbolFamily::Separable {
                g: SpatialFactor {
                    constant: 0.0,
                    cos: vec![],
                    sin: vec![1.0],
                },
                m: 2.0,
            },
            &w,
            4,
        );
        assert!(matches!(
            parametrix(&s, &t, &ParametrixOptions::default()),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn parametrix_demo_improves() {
        let (t, w) = setup(2.0, 64, 512);
        let s = on(&t, SymbolFamily::EllipticDemo { m: 2.0 }, &w, 8);
        let r: Vec<f64> = (1..=3)
            .map(|n| {
                parametrix(
                    &s,
                    &t,
                    &ParametrixOptions {
                        terms: n,
                        ..Default::default()
                    },
                )
                .unwrap()
                .residual_interior
            })
            .collect();
        assert!(r[0] >= r[1] && r[1] >= r[2] && r[2] < r[0], "{r:?}");
    }
}
