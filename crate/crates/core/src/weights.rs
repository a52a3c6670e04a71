//! Weight functions Λ on the frequency index and numerical checks of the
//! growth and difference axioms.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FrequencyWindow, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    /// `Λ(j) = ⟨j⟩ = (1 + |λ_j|²)^{1/2}`
    Standard,
    /// `Λ(j) = (1 + j²)^{1/2}`
    SmoothedInteger,
    UserTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightFunction {
    kind: WeightKind,
    mu0: f64,
    mu1: f64,
    mu: f64,
    log_h: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    table: Option<BTreeMap<i64, f64>>,
}

impl WeightFunction {
    pub fn standard(spec: &ModelSpec) -> Self {
        Self {
            kind: WeightKind::Standard,
            mu0: 1.0,
            mu1: 1.0,
            mu: 1.0,
            log_h: spec.log_h(),
            table: None,
        }
    }

    pub fn smoothed_integer() -> Self {
        Self {
            kind: WeightKind::SmoothedInteger,
            mu0: 1.0,
            mu1: 1.0,
            mu: 1.0,
            log_h: 0.0,
            table: None,
        }
    }

    /// User table with declared exponents; validated, not trusted.
    pub fn user_table(table: BTreeMap<i64, f64>, mu0: f64, mu1: f64, mu: f64) -> Result<Self> {
        if !(mu0 >= 0.0 && mu0 <= mu1 && mu1 <= mu && mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "weight exponents must satisfy 0 <= mu0 <= mu1 <= mu, mu > 0 (got {mu0}, {mu1}, {mu})"
            )));
        }
        if table.is_empty() {
            return Err(Error::InvalidParameter("weight table is empty".into()));
        }
        if let Some((j, v)) = table.iter().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "weight table entry at j = {j} must be positive and finite, got {v}"
            )));
        }
        Ok(Self {
            kind: WeightKind::UserTable,
            mu0,
            mu1,
            mu,
            log_h: 0.0,
            table: Some(table),
        })
    }

    /// `Λ ≡ 1` on the window (exponents 0, 0, 1).
    pub fn constant_one(window: FrequencyWindow) -> Self {
        let table = window.indices().map(|j| (j, 1.0)).collect();
        Self::user_table(table, 0.0, 0.0, 1.0).expect("valid constant table")
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    pub fn mu0(&self) -> f64 {
        self.mu0
    }

    pub fn mu1(&self) -> f64 {
        self.mu1
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Whether `Λ(j)` is available (tables are finite).
    pub fn covers(&self, lo: i64, hi: i64) -> bool {
        match &self.table {
            None => true,
            Some(t) => (lo..=hi).all(|j| t.contains_key(&j)),
        }
    }

    pub fn try_eval(&self, j: i64) -> Result<f64> {
        match self.kind {
            WeightKind::Standard => {
                let re = 2.0 * std::f64::consts::PI * j as f64;
                Ok((1.0 + re * re + self.log_h * self.log_h).sqrt())
            }
            WeightKind::SmoothedInteger => Ok((1.0 + (j as f64).powi(2)).sqrt()),
            WeightKind::UserTable => self
                .table
                .as_ref()
                .and_then(|t| t.get(&j).copied())
                .ok_or_else(|| Error::WindowTooSmall(format!("weight table has no entry for j = {j}"))),
        }
    }

    /// Panics if a table lacks `j`; callers check `covers` first.
    pub fn eval(&self, j: i64) -> f64 {
        self.try_eval(j).expect("weight evaluated outside its table")
    }

    pub fn table(&self) -> Option<&BTreeMap<i64, f64>> {
        self.table.as_ref()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub c0_fit: f64,
    pub c1_fit: f64,
    pub verdict: bool,
}

/// Tightest `C₀, C₁` with `C₀(1+|j|)^{μ₀} <= Λ(j) <= C₁(1+|j|)^{μ₁}` on the window.
pub fn check_growth(weight: &WeightFunction, window: FrequencyWindow) -> Result<GrowthReport> {
    if !weight.covers(window.lo(), window.hi()) {
        return Err(Error::WindowTooSmall("weight table does not cover the window".into()));
    }
    let (mut c0, mut c1) = (f64::INFINITY, 0.0f64);
    for j in window.indices() {
        let l = weight.eval(j);
        let base = 1.0 + j.unsigned_abs() as f64;
        c0 = c0.min(l / base.powf(weight.mu0));
        c1 = c1.max(l / base.powf(weight.mu1));
    }
    Ok(GrowthReport {
        c0_fit: c0,
        c1_fit: c1,
        verdict: c0.is_finite() && c1.is_finite() && c0 > 0.0 && c1 > 0.0,
    })
}

/// One `(α, γ)` row of the difference-axiom scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifferenceRow {
    pub alpha: usize,
    pub gamma: usize,
    /// sup over the effective window
    pub sup: f64,
    /// sup over the half window `|j| <= J/2`
    pub sup_half: f64,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceReport {
    pub rows: Vec<DifferenceRow>,
    /// upper edge of the effective window for the deepest difference
    pub effective_hi: i64,
    pub tolerance: f64,
    pub verdict: bool,
}

/// Default relative growth allowed between the half and full window.
pub const WEIGHT_STABILITY_TOL: f64 = 0.05;

/// `k`-fold forward difference of a sequence.
pub(crate) fn forward_difference(values: &[f64], k: usize) -> Vec<f64> {
    let mut v = values.to_vec();
    for _ in 0..k {
        v = v.windows(2).map(|w| w[1] - w[0]).collect();
    }
    v
}

/// Sup of `|j^γ Δ^{α+γ}Λ(j)| / Λ(j)^{1-α/μ}` per `(α, γ)`, `γ ∈ {0, 1}`.
/// Differences shrink the window at the upper edge; nothing is extrapolated.
pub fn check_difference_axiom(
    weight: &WeightFunction,
    window: FrequencyWindow,
    alpha_max: usize,
    tol: f64,
) -> Result<DifferenceReport> {
    if window.len() < alpha_max + 2 + 1 {
        return Err(Error::WindowTooSmall(format!(
            "{} indices cannot support {} differences",
            window.len(),
            alpha_max + 1
        )));
    }
    if !weight.covers(window.lo(), window.hi()) {
        return Err(Error::WindowTooSmall("weight table does not cover the window".into()));
    }
    let lam: Vec<f64> = window.indices().map(|j| weight.eval(j)).collect();
    let half = (window.half_width() / 2) as i64;
    let mut rows = Vec::new();
    for alpha in 0..=alpha_max {
        for gamma in 0..=1usize {
            let d = forward_difference(&lam, alpha + gamma);
            let expo = 1.0 - alpha as f64 / weight.mu;
            let (mut sup, mut sup_half) = (0.0f64, 0.0f64);
            for (p, dv) in d.iter().enumerate() {
                let j = window.index_at(p);
                let jg = if gamma == 1 { j as f64 } else { 1.0 };
                let r = (jg * dv).abs() / lam[p].powf(expo);
                sup = sup.max(r);
                if j.abs() <= half {
                    sup_half = sup_half.max(r);
                }
            }
            let stable = sup.is_finite() && sup <= (1.0 + tol) * sup_half + 1e-9;
            rows.push(DifferenceRow {
                alpha,
                gamma,
                sup,
                sup_half,
                stable,
            });
        }
    }
    let verdict = rows.iter().all(|r| r.stable);
    Ok(DifferenceReport {
        rows,
        effective_hi: window.hi() - (alpha_max + 1) as i64,
        tolerance: tol,
        verdict,
    })
}
