//! Weighted Sobolev norms, symbol powers, Gårding constants, Gohberg
//! distance and compactness diagnostics, resolvents and strong solutions.
//!
//! Every quadratic form is evaluated on the window span in 𝔏-coefficients,
//! using the exact Gram matrix `G[p, q] = ⟨u_q, u_p⟩`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::calculus::{assemble_matrix, parametrix, OperatorMatrix, ParametrixOptions};
use crate::error::{Error, Result};
use crate::numeric::{fit_slope, seeded_rng};
use crate::symbols::{seminorm_estimate, SymbolGrid, SYMBOL_STABILITY_TOL};
use crate::transform::{CoefficientVector, GridFunction, Transform, TransformKind};
use crate::weights::WeightFunction;

/// Realization of `Λ(D)^s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SobolevConvention {
    /// `inverse_L(Λ^s forward_L f)`: `Λ(D)^0` is the identity
    #[default]
    SameTransform,
    /// `inverse_Lstar(Λ^s forward_L f)`, the literal mixed form
    MixedTransform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SobolevMode {
    /// `(Σ Λ^{2s} f̂ conj(f̂_*))^{1/2}`
    Pairing,
    /// `‖Λ(D)^s f‖_{L²}`
    Multiplier,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevParams {
    pub s: f64,
    pub convention: SobolevConvention,
}

fn weight_powers(weight: &WeightFunction, transform: &Transform, s: f64) -> Result<Vec<f64>> {
    transform
        .window()
        .indices()
        .map(|j| weight.try_eval(j).map(|w| w.powf(s)))
        .collect()
}

fn scaled(a: &CoefficientVector, d: &[f64]) -> Vec<Complex64> {
    a.values().iter().zip(d).map(|(z, w)| z * w).collect()
}

/// Coefficients of `Λ(D)^s f`, tagged with the synthesis family.
pub fn lambda_power_coefficients(
    s: f64,
    f: &GridFunction,
    convention: SobolevConvention,
    transform: &Transform,
    weight: &WeightFunction,
) -> Result<CoefficientVector> {
    let a = transform.forward_l(f)?;
    let d = weight_powers(weight, transform, s)?;
    let kind = match convention {
        SobolevConvention::SameTransform => TransformKind::L,
        SobolevConvention::MixedTransform => TransformKind::LStar,
    };
    CoefficientVector::new(kind, a.window(), scaled(&a, &d))
}

pub fn lambda_power_apply(
    s: f64,
    f: &GridFunction,
    convention: SobolevConvention,
    transform: &Transform,
    weight: &WeightFunction,
) -> Result<GridFunction> {
    let b = lambda_power_coefficients(s, f, convention, transform, weight)?;
    match convention {
        SobolevConvention::SameTransform => transform.inverse_l(&b),
        SobolevConvention::MixedTransform => transform.inverse_lstar(&b),
    }
}

/// `‖Σ b_j v_j‖_{L²}` from the closed-form v-family Gram matrix.
pub fn norm_v_span(b: &CoefficientVector, transform: &Transform) -> f64 {
    let spec = transform.system().spec();
    let w = b.window();
    let g = DMatrix::from_fn(w.len(), w.len(), |p, q| spec.v_gram(w.index_at(q), w.index_at(p)));
    let v = b.to_dvector();
    v.dotc(&(g * &v)).re.max(0.0).sqrt()
}

/// Raw pairing `Σ Λ^{2s} f̂ conj(f̂_*)` for `f` in the window span.
pub fn sobolev_pairing(f: &GridFunction, s: f64, transform: &Transform, weight: &WeightFunction) -> Result<Complex64> {
    let a = transform.forward_l(f)?;
    let b = transform.lstar_of_u_span(&a)?;
    let d = weight_powers(weight, transform, 2.0 * s)?;
    Ok(a.values()
        .iter()
        .zip(b.values())
        .zip(&d)
        .map(|((x, y), w)| x * y.conj() * w)
        .sum())
}

pub fn sobolev_norm(
    f: &GridFunction,
    s: f64,
    mode: SobolevMode,
    convention: SobolevConvention,
    transform: &Transform,
    weight: &WeightFunction,
) -> Result<f64> {
    match mode {
        SobolevMode::Pairing => {
            let p = sobolev_pairing(f, s, transform, weight)?;
            if p.re < -1e-10 {
                return Err(Error::PairingNotPositive { value: p.re });
            }
            Ok(p.re.max(0.0).sqrt())
        }
        SobolevMode::Multiplier => {
            let b = lambda_power_coefficients(s, f, convention, transform, weight)?;
            match convention {
                SobolevConvention::SameTransform => transform.norm_u_span(&b),
                SobolevConvention::MixedTransform => Ok(norm_v_span(&b, transform)),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationRow {
    pub epsilon: f64,
    pub c_epsilon: f64,
    /// `min (ε‖u‖_s² + C_ε‖u‖² - ‖u‖_t²) / ‖u‖²` over the samples
    pub worst_slack: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationReport {
    pub s: f64,
    pub t: f64,
    pub samples: usize,
    pub rows: Vec<InterpolationRow>,
    pub verdict: bool,
}

/// `C_ε = max_j (Λ^{2t} - εΛ^{2s}, 0)` and a sampled check of
/// `‖u‖_t² <= ε‖u‖_s² + C_ε‖u‖²` in the coefficient norms
/// `‖u‖_r² = Σ Λ^{2r} |û|²` (the pairing norms when `h = 1`).
pub fn sobolev_interpolation_check(
    s: f64,
    t: f64,
    epsilons: &[f64],
    samples: usize,
    seed: u64,
    transform: &Transform,
    weight: &WeightFunction,
) -> Result<InterpolationReport> {
    let regime_ok = (s >= t && t >= 0.0) || (s < 0.0 && t < 0.0 && s >= t);
    if !regime_ok {
        return Err(Error::InvalidParameter(format!(
            "interpolation needs s >= t >= 0 or t <= s < 0, got s = {s}, t = {t}"
        )));
    }
    if epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::InvalidParameter("epsilon ladder must be positive".into()));
    }
    let lam: Vec<f64> = transform.window().indices().map(|j| weight.try_eval(j)).collect::<Result<_>>()?;
    let mut rng = seeded_rng(seed);
    let coeffs: Vec<CoefficientVector> = (0..samples)
        .map(|_| transform.random_coefficients(transform.window().half_width() / 2, &mut rng))
        .collect();
    let norm_sq = |a: &CoefficientVector, r: f64| -> f64 {
        a.values().iter().zip(&lam).map(|(z, l)| z.norm_sqr() * l.powf(2.0 * r)).sum()
    };
    let rows = epsilons
        .iter()
        .map(|&eps| {
            let c_eps = lam
                .iter()
                .map(|l| (l.powf(2.0 * t) - eps * l.powf(2.0 * s)).max(0.0))
                .fold(0.0, f64::max);
            let worst_slack = coeffs
                .iter()
                .map(|a| {
                    let base = norm_sq(a, 0.0);
                    (eps * norm_sq(a, s) + c_eps * base - norm_sq(a, t)) / base
                })
                .fold(f64::INFINITY, f64::min);
            InterpolationRow {
                epsilon: eps,
                c_epsilon: c_eps,
                worst_slack,
                holds: worst_slack >= -1e-10,
            }
        })
        .collect::<Vec<_>>();
    Ok(InterpolationReport {
        s,
        t,
        samples,
        verdict: rows.iter().all(|r| r.holds),
        rows,
    })
}

/// Entrywise `exp(s log σ)` on the principal branch.
pub fn symbol_power(sigma: &SymbolGrid, s: f64) -> Result<SymbolGrid> {
    for j in sigma.j_lo()..=sigma.j_hi() {
        for (k, z) in sigma.column(j).iter().enumerate() {
            if z.re <= 0.0 && z.im.abs() <= 1e-14 {
                return Err(Error::BranchCut { x_index: k, j });
            }
        }
    }
    Ok(sigma.map(|z| (z.ln() * s).exp()).with_order(sigma.order() * s))
}

// ---------------------------------------------------------------------------
// Gårding

pub const GARDING_MARGIN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GardingSweepPoint {
    pub c2: f64,
    /// largest feasible `C1`, 0 when none
    pub c1: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GardingReport {
    pub m: f64,
    pub dim: usize,
    /// `max |Λ^m / A|`
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub margin: f64,
    pub sweep: Vec<GardingSweepPoint>,
    /// `C1'` used in the constructive square-root route
    pub constructive_c1: f64,
    /// `(A - C1'Λ^m)^{1/2}` passes the `M^{m/2}` scan
    pub constructive_member: bool,
    pub verdict: bool,
}

struct GardingForms {
    /// Hermitian part of `G M` (the form `Re⟨T f, f⟩`)
    h: DMatrix<Complex64>,
    /// Hermitian part of `G Λ^m` (the real part of the pairing norm)
    p: DMatrix<Complex64>,
    g: DMatrix<Complex64>,
    l: DMatrix<Complex64>,
}

impl GardingForms {
    fn new(m_op: &OperatorMatrix, transform: &Transform, weight: &WeightFunction, m: f64) -> Result<Self> {
        let g = transform.u_gram().clone();
        let gm = &g * m_op.entries();
        let h = (&gm + gm.adjoint()) * Complex64::new(0.5, 0.0);
        let d = weight_powers(weight, transform, m)?;
        let n = d.len();
        let gd = DMatrix::from_fn(n, n, |p, q| g[(p, q)] * d[q]);
        let p = (&gd + gd.adjoint()) * Complex64::new(0.5, 0.0);
        Ok(Self {
            h,
            p,
            g,
            l: transform.gram_factor().clone(),
        })
    }

    /// Smallest eigenvalue of `L⁻¹(H - C1 P + C2 G)L⁻ᴴ`.
    fn margin(&self, c1: f64, c2: f64) -> f64 {
        let x = &self.h - &self.p * Complex64::new(c1, 0.0) + &self.g * Complex64::new(c2, 0.0);
        let y = self.l.solve_lower_triangular(&x).expect("Gram factor is nonsingular");
        let z = self.l.solve_lower_triangular(&y.adjoint()).expect("Gram factor is nonsingular");
        let z = (&z + z.adjoint()) * Complex64::new(0.5, 0.0);
        z.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `{0} ∪ {10^{-3}, ..., 10^{3}}`.
pub fn default_c2_grid() -> Vec<f64> {
    std::iter::once(0.0).chain((-3..=3).map(|e| 10f64.powi(e))).collect()
}

/// Gårding constants for `σ` of order `m = σ.order()` on the window span.
pub fn garding_verify(
    sigma: &SymbolGrid,
    transform: &Transform,
    c2_grid: &[f64],
    bisection_steps: usize,
) -> Result<GardingReport> {
    let m = sigma.order();
    let weight = sigma.weight_arc();
    let win = transform.window();
    let mut c0 = 0.0f64;
    for j in win.indices() {
        let lam = weight.try_eval(j)?.powf(m);
        for z in sigma.column(j) {
            if z.re.is_nan() || z.re <= 0.0 {
                return Err(Error::Hypothesis(format!(
                    "Re sigma = {:.3e} at j = {j} is not positive; A is not bounded below against Lambda^m",
                    z.re
                )));
            }
            c0 = c0.max(lam / z.re);
        }
    }
    if !c0.is_finite() {
        return Err(Error::Hypothesis("Lambda^m / A is unbounded".into()));
    }
    let m_op = assemble_matrix(sigma, transform)?;
    let forms = GardingForms::new(&m_op, transform, &weight, m)?;
    let c1_max = 1.0 / c0;
    let feasible = |c1: f64, c2: f64| forms.margin(c1, c2) >= -GARDING_MARGIN_TOL;
    let mut sweep = Vec::with_capacity(c2_grid.len());
    let mut best: Option<(f64, f64)> = None;
    for &c2 in c2_grid {
        let c1 = if feasible(c1_max, c2) {
            c1_max
        } else if !feasible(c1_max * 1e-12, c2) {
            0.0
        } else {
            let (mut lo, mut hi) = (c1_max * 1e-12, c1_max);
            for _ in 0..bisection_steps {
                let mid = 0.5 * (lo + hi);
                if feasible(mid, c2) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        let margin = forms.margin(c1, c2);
        sweep.push(GardingSweepPoint { c2, c1, margin });
        if c1 > 0.0 && best.is_none_or(|(b, _)| c1 > b) {
            best = Some((c1, c2));
        }
    }
    let (c1, c2) = best.unwrap_or((0.0, f64::NAN));
    let margin = if c1 > 0.0 { forms.margin(c1, c2) } else { f64::NAN };

    let constructive_c1 = c1_max.min(0.5 / c0);
    let a_minus = sigma
        .map_indexed(|_, j, z| Complex64::new(z.re - constructive_c1 * weight.eval(j).powf(m), 0.0))
        .restrict(win.lo(), win.hi())?;
    let constructive_member = match symbol_power(&a_minus, 0.5) {
        Ok(q) => seminorm_estimate(&q, 2, 1, &[0, 1], SYMBOL_STABILITY_TOL)?.member_m,
        Err(_) => false,
    };
    Ok(GardingReport {
        m,
        dim: win.len(),
        c0,
        c1,
        c2,
        margin,
        sweep,
        constructive_c1,
        constructive_member,
        verdict: c1 > 0.0 && margin >= -GARDING_MARGIN_TOL,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GardingDirectCheck {
    pub samples: usize,
    /// `min (Re⟨Tf, f⟩ - C1‖f‖²_{m/2} + C2‖f‖²)` over `‖f‖ = 1`
    pub min_slack: f64,
    pub passes: bool,
}

/// Evaluates the Gårding inequality on random band-limited `f` by direct
/// operator application and the Plancherel pairing.
pub fn garding_direct_check(
    sigma: &SymbolGrid,
    report: &GardingReport,
    transform: &Transform,
    samples: usize,
    seed: u64,
) -> Result<GardingDirectCheck> {
    let weight = sigma.weight_arc();
    let mut rng = seeded_rng(seed);
    let mut min_slack = f64::INFINITY;
    for _ in 0..samples {
        let a = transform.random_coefficients(transform.window().half_width() / 2, &mut rng);
        let scale = 1.0 / transform.norm_u_span(&a)?;
        let a = a.with_values(a.values().iter().map(|z| z * scale).collect())?;
        let f = transform.inverse_l(&a)?;
        let tf = crate::calculus::quantize_apply(sigma, &f, transform)?;
        let form = transform.plancherel_pairing(&tf, &f)?.re;
        let h_norm_sq = sobolev_pairing(&f, report.m / 2.0, transform, &weight)?.re;
        let l2_sq = transform.norm_u_span(&a)?.powi(2);
        let slack = form - report.c1 * h_norm_sq + report.c2 * l2_sq;
        min_slack = min_slack.min(slack);
    }
    Ok(GardingDirectCheck {
        samples,
        min_slack,
        passes: min_slack >= -1e-9,
    })
}

// ---------------------------------------------------------------------------
// Gohberg distance and compactness

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellSup {
    pub j0: i64,
    pub sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactnessReport {
    pub shells: Vec<ShellSup>,
    /// descending singular values of the L²-orthonormal matrix
    pub singular_values: Vec<f64>,
    /// `d̂` of the outermost shell
    pub d_sigma_estimate: f64,
    pub bound_fraction: f64,
    pub bound_tolerance: f64,
    /// `s_k >= d̂(outer) - tol` for all `k <= fraction · dim`
    pub lower_bound_holds: bool,
}

/// Shell ladder `J₀ = 0, J/8, ..., J`.
pub fn default_shell_ladder(half_width: i64) -> Vec<i64> {
    let mut v: Vec<i64> = (0..=8).map(|k| k * half_width / 8).collect();
    v.dedup();
    v
}

pub fn gohberg_distance(
    sigma: &SymbolGrid,
    transform: &Transform,
    ladder: &[i64],
    fraction: f64,
    tolerance: f64,
) -> Result<CompactnessReport> {
    let win = transform.window();
    let big_j = win.half_width() as i64;
    if ladder.is_empty() || ladder.iter().any(|&j0| j0 < 0 || j0 > big_j) {
        return Err(Error::InvalidParameter(format!("shell ladder must lie in [0, {big_j}]")));
    }
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidParameter("bound fraction must lie in [0, 1]".into()));
    }
    let col_sup: Vec<(i64, f64)> = win
        .indices()
        .map(|j| (j, sigma.column(j).iter().map(|z| z.norm()).fold(0.0, f64::max)))
        .collect();
    let shells: Vec<ShellSup> = ladder
        .iter()
        .map(|&j0| ShellSup {
            j0,
            sup: col_sup.iter().filter(|p| p.0.abs() >= j0).map(|p| p.1).fold(0.0, f64::max),
        })
        .collect();
    let singular_values = assemble_matrix(sigma, transform)?.l2_singular_values(transform)?;
    let d_outer = shells.last().expect("nonempty ladder").sup;
    let k_max = (fraction * singular_values.len() as f64).floor() as usize;
    let lower_bound_holds = singular_values
        .iter()
        .take((k_max + 1).min(singular_values.len()))
        .all(|s| *s >= d_outer - tolerance);
    Ok(CompactnessReport {
        shells,
        singular_values,
        d_sigma_estimate: d_outer,
        bound_fraction: fraction,
        bound_tolerance: tolerance,
        lower_bound_holds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompactnessThresholds {
    /// shell suprema must fall below `shell_ratio · d̂(0)` ...
    pub shell_ratio: f64,
    /// ... or decrease along the ladder with log-log slope at most this
    pub max_slope: f64,
    /// `s_{dim/2} <= sv_ratio · s_0`
    pub sv_ratio: f64,
}

impl Default for CompactnessThresholds {
    fn default() -> Self {
        Self {
            shell_ratio: 1e-3,
            max_slope: -0.1,
            sv_ratio: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactnessVerdict {
    pub report: CompactnessReport,
    pub shell_slope: f64,
    pub shells_decreasing: bool,
    pub shell_condition: bool,
    pub singular_condition: bool,
    pub compact_consistent: bool,
    pub d_sigma: f64,
    pub thresholds: CompactnessThresholds,
}

pub fn compactness_test(
    sigma: &SymbolGrid,
    transform: &Transform,
    ladder: &[i64],
    thresholds: CompactnessThresholds,
) -> Result<CompactnessVerdict> {
    let report = gohberg_distance(sigma, transform, ladder, 0.25, 0.05)?;
    let d0 = report.shells[0].sup;
    let last = report.shells.last().expect("nonempty ladder").sup;
    let (xs, ys): (Vec<f64>, Vec<f64>) = report
        .shells
        .iter()
        .filter(|s| s.j0 >= 1 && s.sup > 0.0)
        .map(|s| ((s.j0 as f64).ln(), s.sup.ln()))
        .unzip();
    let shell_slope = fit_slope(&xs, &ys);
    let shells_decreasing = report.shells.windows(2).all(|p| p[1].sup < p[0].sup);
    let below = last <= thresholds.shell_ratio * d0;
    let sloped = shells_decreasing && shell_slope <= thresholds.max_slope;
    let shell_condition = below || sloped;
    let sv = &report.singular_values;
    let singular_condition = !sv.is_empty() && sv[sv.len() / 2] <= thresholds.sv_ratio * sv[0];
    Ok(CompactnessVerdict {
        d_sigma: last,
        shell_slope,
        shells_decreasing,
        shell_condition,
        singular_condition,
        compact_consistent: shell_condition && singular_condition,
        report,
        thresholds,
    })
}

// ---------------------------------------------------------------------------
// resolvent and strong solutions

fn relative_residual(r: &DVector<Complex64>, f: &DVector<Complex64>) -> f64 {
    let fnorm = f.norm();
    if fnorm == 0.0 {
        r.norm()
    } else {
        r.norm() / fnorm
    }
}

#[derive(Debug, Clone)]
pub struct ResolventSolution {
    pub u: GridFunction,
    pub coefficients: CoefficientVector,
    /// `‖(T_σ - λ)u - f‖ / ‖f‖` measured by applying `T_σ` on the grid
    pub residual: f64,
}

/// `û(j) = f̂(j) / (σ(j) - λ)` for an x-independent `σ`.
pub fn resolvent_solve_multiplier(
    sigma: &SymbolGrid,
    lambda: Complex64,
    f: &GridFunction,
    transform: &Transform,
) -> Result<ResolventSolution> {
    if !sigma.is_x_independent() {
        return Err(Error::InvalidParameter("resolvent_solve_multiplier needs an x-independent symbol".into()));
    }
    let win = transform.window();
    if !(sigma.contains(win.lo()) && sigma.contains(win.hi())) {
        return Err(Error::WindowTooSmall("symbol does not cover the window".into()));
    }
    let offending: Vec<i64> = win
        .indices()
        .filter(|&j| (sigma.column(j)[0] - lambda).norm() <= 1e-12)
        .collect();
    if !offending.is_empty() {
        return Err(Error::SingularResolvent { indices: offending });
    }
    let a = transform.forward_l(f)?;
    let values = win
        .indices()
        .zip(a.values())
        .map(|(j, z)| z / (sigma.column(j)[0] - lambda))
        .collect();
    let coefficients = a.with_values(values)?;
    let u = transform.inverse_l(&coefficients)?;
    let tu = crate::calculus::quantize_apply(sigma, &u, transform)?;
    let r = tu.zip_with(&u, |a, b| a - lambda * b).zip_with(f, |a, b| a - b);
    let fn2: f64 = f.values().iter().map(|z| z.norm_sqr()).sum();
    let rn2: f64 = r.values().iter().map(|z| z.norm_sqr()).sum();
    let residual = if fn2 > 0.0 { (rn2 / fn2).sqrt() } else { rn2.sqrt() };
    Ok(ResolventSolution { u, coefficients, residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Dense,
    ParametrixIteration,
}

pub const SOLVE_TOLERANCE: f64 = 1e-8;
pub const SOLVE_MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone)]
pub struct StrongSolution {
    pub u: GridFunction,
    pub coefficients: CoefficientVector,
    /// relative coefficient residuals `‖f̂ - (M + λ)û_k‖ / ‖f̂‖`
    pub history: Vec<f64>,
    /// 2-norm condition number of `M + λI` (dense method)
    pub condition_number: Option<f64>,
    pub method: SolveMethod,
}

/// Solves `(T_σ + λ) u = f` on the window span.
pub fn strong_solve(
    sigma: &SymbolGrid,
    lambda: f64,
    lambda0: Option<f64>,
    f: &GridFunction,
    method: SolveMethod,
    transform: &Transform,
    parametrix_terms: usize,
) -> Result<StrongSolution> {
    if let Some(l0) = lambda0 {
        if lambda < l0 {
            return Err(Error::Hypothesis(format!("lambda = {lambda} is below lambda0 = {l0}")));
        }
    }
    let win = transform.window();
    let a_op = assemble_matrix(sigma, transform)?;
    let n = win.len();
    let shifted = a_op.entries() + DMatrix::<Complex64>::identity(n, n) * Complex64::new(lambda, 0.0);
    let fhat = transform.forward_l(f)?;
    let fv = fhat.to_dvector();
    let (uv, history, condition_number) = match method {
        SolveMethod::Dense => {
            let sv = shifted.clone().singular_values();
            let smax = sv.iter().copied().fold(0.0, f64::max);
            let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
            if smin.is_nan() || smin <= smax * 1e-14 {
                return Err(Error::Singular(format!("dense system is singular (sigma_min = {smin:.3e})")));
            }
            let uv = shifted
                .clone()
                .lu()
                .solve(&fv)
                .ok_or_else(|| Error::Singular("LU solve failed".into()))?;
            let r = &fv - &shifted * &uv;
            (uv, vec![relative_residual(&r, &fv)], Some(smax / smin))
        }
        SolveMethod::ParametrixIteration => {
            let shifted_sym = sigma.map(|z| z + lambda);
            let opts = ParametrixOptions {
                terms: parametrix_terms.max(1),
                cutoff: 0,
                guard: 0,
                epsilons: None,
            };
            let b = assemble_matrix(&parametrix(&shifted_sym, transform, &opts)?.combined, transform)?;
            let mut uv = DVector::<Complex64>::zeros(n);
            let mut history = Vec::new();
            loop {
                let r = &fv - &shifted * &uv;
                let rel = relative_residual(&r, &fv);
                history.push(rel);
                if rel <= SOLVE_TOLERANCE {
                    break;
                }
                if history.len() > SOLVE_MAX_ITERATIONS || !rel.is_finite() {
                    return Err(Error::NonConvergence {
                        iterations: history.len() - 1,
                        last: rel,
                        history,
                    });
                }
                uv += b.entries() * r;
            }
            (uv, history, None)
        }
    };
    let coefficients = fhat.with_values(uv.iter().copied().collect())?;
    let u = transform.inverse_l(&coefficients)?;
    Ok(StrongSolution {
        u,
        coefficients,
        history,
        condition_number,
        method,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AprioriWindow {
    pub half_width: usize,
    /// min of `(‖T u‖ + ‖u‖) / ‖u‖_{H^m}`
    pub c: f64,
    /// max of the same ratio
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AprioriReport {
    pub m: f64,
    pub samples: usize,
    pub base: AprioriWindow,
    pub doubled: AprioriWindow,
    pub tolerance: f64,
    pub stable: bool,
    pub verdict: bool,
}

/// Ratio bounds on random band-limited `u` for one window.
pub fn apriori_window(sigma: &SymbolGrid, transform: &Transform, samples: usize, seed: u64) -> Result<AprioriWindow> {
    let m = sigma.order();
    let weight = sigma.weight_arc();
    let op = assemble_matrix(sigma, transform)?;
    let d = weight_powers(&weight, transform, m)?;
    let mut rng = seeded_rng(seed);
    let (mut c, mut dmax) = (f64::INFINITY, 0.0f64);
    for _ in 0..samples {
        let a = transform.random_coefficients(transform.window().half_width() / 2, &mut rng);
        let tu = op.apply(&a)?;
        let hm = a.with_values(scaled(&a, &d))?;
        let ratio = (transform.norm_u_span(&tu)? + transform.norm_u_span(&a)?) / transform.norm_u_span(&hm)?;
        c = c.min(ratio);
        dmax = dmax.max(ratio);
    }
    Ok(AprioriWindow {
        half_width: transform.window().half_width(),
        c,
        d: dmax,
    })
}

/// A-priori constants at the transform's window and at a doubled window.
/// `make_symbol` samples the same symbol for a given transform.
pub fn apriori_estimate_check<F>(
    make_symbol: F,
    transform: &Transform,
    samples: usize,
    seed: u64,
    tolerance: f64,
) -> Result<AprioriReport>
where
    F: Fn(&Transform) -> Result<SymbolGrid>,
{
    let sigma = make_symbol(transform)?;
    let sys = transform.system();
    let doubled_sys = crate::model::ModelSystem::with_params(
        sys.spec().h(),
        2 * sys.window().half_width(),
        2 * sys.grid().len(),
        sys.spec().normalize_u(),
    )?;
    let doubled_t = Transform::new(doubled_sys);
    let sigma2 = make_symbol(&doubled_t)?;
    let base = apriori_window(&sigma, transform, samples, seed)?;
    let doubled = apriori_window(&sigma2, &doubled_t, samples, seed)?;
    let rel = |a: f64, b: f64| (a - b).abs() <= tolerance * a.abs();
    let stable = rel(base.c, doubled.c) && rel(base.d, doubled.d);
    let finite_ok = |w: &AprioriWindow| w.c > 0.0 && w.c <= w.d && w.d.is_finite();
    Ok(AprioriReport {
        m: sigma.order(),
        samples,
        verdict: finite_ok(&base) && finite_ok(&doubled) && stable,
        stable,
        base,
        doubled,
        tolerance,
    })
}

/// Interior-mode agreement `max_{|j| <= J/2} |û₁(j) - û₂(j)|`.
pub fn interior_difference(a: &CoefficientVector, b: &CoefficientVector) -> f64 {
    let half = a.window().half_width() as i64 / 2;
    a.window()
        .indices()
        .zip(a.values().iter().zip(b.values()))
        .filter(|(j, _)| j.abs() <= half)
        .map(|(_, (x, y))| (x - y).norm())
        .fold(0.0, f64::max)
}
