//! Run configuration: a versioned TOML document, parsed strictly and then
//! validated as a whole so every problem is reported at once.

use std::path::{Path, PathBuf};

use nonharmonic::analysis::CompactnessThresholds;
use nonharmonic::symbols::{SpatialFactor, SymbolFamily};
use nonharmonic::ParametrixOptions;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Largest window accepted; dense matrices are `(2J+1)²`.
pub const MAX_HALF_WIDTH: usize = 256;
pub const MAX_GRID: usize = 16384;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub version: u32,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub model: ModelConfig,
    pub weight: WeightConfig,
    pub symbol: SymbolConfig,
    pub tasks: TaskConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            version: SCHEMA_VERSION,
            seed: 20240917,
            output_dir: PathBuf::from("out"),
            model: ModelConfig::default(),
            weight: WeightConfig::default(),
            symbol: SymbolConfig::default(),
            tasks: TaskConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub h: f64,
    #[serde(rename = "J")]
    pub half_width: usize,
    #[serde(rename = "N_x")]
    pub nx: usize,
    pub normalize_u: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            h: 2.0,
            half_width: 64,
            nx: 512,
            normalize_u: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightChoice {
    Standard,
    SmoothedInteger,
    UserTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightConfig {
    pub kind: WeightChoice,
    /// CSV table `j,lambda` (user_table only)
    pub table: Option<PathBuf>,
    pub mu0: f64,
    pub mu1: f64,
    pub mu: f64,
}

impl Default for WeightConfig {
    fn default() -> Self {
        Self {
            kind: WeightChoice::Standard,
            table: None,
            mu0: 1.0,
            mu1: 1.0,
            mu: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SymbolConfig {
    pub family: SymbolFamily,
    pub rho: f64,
    /// frequencies sampled beyond the window on each side
    pub pad: i64,
}

impl Default for SymbolConfig {
    fn default() -> Self {
        Self {
            family: SymbolFamily::EllipticDemo { m: 2.0 },
            rho: 1.0,
            pad: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct TaskConfig {
    pub transform: TransformTask,
    pub weights: WeightsTask,
    pub symbol: SymbolTask,
    pub apply: ApplyTask,
    pub compose: ComposeTask,
    pub adjoint: AdjointTask,
    pub parametrix: ParametrixOptions,
    pub garding: GardingTask,
    pub compact: CompactTask,
    pub resolvent: ResolventTask,
    pub solve: SolveTask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransformTask {
    pub samples: usize,
}

impl Default for TransformTask {
    fn default() -> Self {
        Self { samples: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightsTask {
    pub alpha_max: usize,
    pub tolerance: f64,
}

impl Default for WeightsTask {
    fn default() -> Self {
        Self {
            alpha_max: 3,
            tolerance: nonharmonic::weights::WEIGHT_STABILITY_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SymbolTask {
    pub alpha_max: usize,
    pub beta_max: usize,
    pub gammas: Vec<usize>,
    pub tolerance: f64,
    /// ellipticity cutoff `R`
    pub cutoff: i64,
    /// hypoellipticity lower order `ℓ`; skipped when absent
    pub hypo_l: Option<f64>,
}

impl Default for SymbolTask {
    fn default() -> Self {
        Self {
            alpha_max: 3,
            beta_max: 2,
            gammas: vec![0, 1],
            tolerance: nonharmonic::symbols::SYMBOL_STABILITY_TOL,
            cutoff: 4,
            hypo_l: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ApplyTask {
    /// input grid function CSV; a seeded band-limited sample when absent
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ComposeTask {
    /// factors of `T_A T_B`, sampled with the configured weight and rho
    pub left: SymbolFamily,
    pub right: SymbolFamily,
    pub truncations: Vec<usize>,
}

impl Default for ComposeTask {
    fn default() -> Self {
        Self {
            left: SymbolFamily::EllipticDemo { m: 1.0 },
            right: SymbolFamily::EllipticDemo { m: 1.0 },
            truncations: vec![1, 2, 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdjointTask {
    pub truncations: Vec<usize>,
}

impl Default for AdjointTask {
    fn default() -> Self {
        Self {
            truncations: vec![1, 2, 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GardingTask {
    pub c2_grid: Vec<f64>,
    pub bisection_steps: usize,
    pub direct_samples: usize,
}

impl Default for GardingTask {
    fn default() -> Self {
        Self {
            c2_grid: nonharmonic::analysis::default_c2_grid(),
            bisection_steps: 60,
            direct_samples: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct CompactTask {
    /// shell ladder `J₀`; `k J / 8` when empty
    pub shells: Vec<i64>,
    pub thresholds: CompactnessThresholds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResolventTask {
    /// x-independent symbol
    pub family: SymbolFamily,
    pub lambda_re: f64,
    pub lambda_im: f64,
}

impl Default for ResolventTask {
    fn default() -> Self {
        Self {
            family: SymbolFamily::MultiplierPower { m: 2.0 },
            lambda_re: -1.0,
            lambda_im: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveChoice {
    Dense,
    ParametrixIteration,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveTask {
    pub method: SolveChoice,
    /// shift `λ`; `λ₀ + 1` with the Gårding `λ₀ = C2` when absent
    pub lambda: Option<f64>,
    pub parametrix_terms: usize,
    pub apriori_samples: usize,
    pub apriori_tolerance: f64,
}

impl Default for SolveTask {
    fn default() -> Self {
        Self {
            method: SolveChoice::Both,
            lambda: None,
            parametrix_terms: 3,
            apriori_samples: 200,
            apriori_tolerance: 0.2,
        }
    }
}

/// One validation failure, addressed by its dotted key path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, Vec<ConfigError>> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let path = e.span().map(|s| format!("byte {}..{}", s.start, s.end)).unwrap_or_default();
            vec![ConfigError::new(path, e.message().to_string())]
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, Vec<ConfigError>> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| vec![ConfigError::new("", format!("cannot read {}: {e}", path.display()))])?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every field and returns all failures.
    pub fn validate(&self) -> Result<(), Vec<ConfigError>> {
        let mut errs = Vec::new();
        let mut need = |ok: bool, path: &str, msg: String| {
            if !ok {
                errs.push(ConfigError::new(path, msg));
            }
        };
        need(
            self.version == SCHEMA_VERSION,
            "version",
            format!("unsupported schema version {}, expected {SCHEMA_VERSION}", self.version),
        );

        let m = &self.model;
        need(m.h.is_finite() && m.h > 0.0, "model.h", format!("must be positive and finite, got {}", m.h));
        need(
            (1..=MAX_HALF_WIDTH).contains(&m.half_width),
            "model.J",
            format!("must lie in 1..={MAX_HALF_WIDTH}, got {}", m.half_width),
        );
        need(
            m.nx > 4 * m.half_width + 2 && m.nx <= MAX_GRID,
            "model.N_x",
            format!("must exceed 4J + 2 = {} and be at most {MAX_GRID}, got {}", 4 * m.half_width + 2, m.nx),
        );

        let w = &self.weight;
        match w.kind {
            WeightChoice::UserTable => {
                need(w.table.is_some(), "weight.table", "required for user_table".into());
                need(
                    w.mu0 >= 0.0 && w.mu0 <= w.mu1 && w.mu1 <= w.mu && w.mu > 0.0 && w.mu.is_finite(),
                    "weight.mu",
                    format!("need 0 <= mu0 <= mu1 <= mu, mu > 0 (got {}, {}, {})", w.mu0, w.mu1, w.mu),
                );
            }
            _ => need(w.table.is_none(), "weight.table", "only allowed for user_table".into()),
        }

        let mu = match w.kind {
            WeightChoice::UserTable => w.mu,
            _ => 1.0,
        };
        let s = &self.symbol;
        need(
            s.rho > 0.0 && s.rho <= 1.0 / mu,
            "symbol.rho",
            format!("must lie in (0, 1/mu] = (0, {}], got {}", 1.0 / mu, s.rho),
        );
        need(s.pad >= 0 && s.pad <= 64, "symbol.pad", format!("must lie in 0..=64, got {}", s.pad));
        let families = [
            ("symbol.family", &s.family),
            ("tasks.compose.left", &self.tasks.compose.left),
            ("tasks.compose.right", &self.tasks.compose.right),
            ("tasks.resolvent.family", &self.tasks.resolvent.family),
        ];
        for (path, f) in families {
            if let Some(msg) = family_problem(f) {
                need(false, path, msg);
            }
            if path != "symbol.family" && matches!(f, SymbolFamily::Csv { .. }) {
                need(false, path, "csv symbols are only accepted as symbol.family".into());
            }
        }

        let t = &self.tasks;
        need(t.transform.samples > 0, "tasks.transform.samples", "must be positive".into());
        need(
            t.weights.tolerance > 0.0 && t.weights.tolerance.is_finite(),
            "tasks.weights.tolerance",
            "must be positive".into(),
        );
        need(
            t.symbol.gammas.iter().all(|&g| g <= 1) && !t.symbol.gammas.is_empty(),
            "tasks.symbol.gammas",
            "entries must be 0 or 1 and the list nonempty".into(),
        );
        need(
            t.symbol.tolerance > 0.0 && t.symbol.tolerance.is_finite(),
            "tasks.symbol.tolerance",
            "must be positive".into(),
        );
        need(
            t.symbol.cutoff >= 0 && (t.symbol.cutoff as usize) < m.half_width,
            "tasks.symbol.cutoff",
            format!("must lie in 0..J = 0..{}", m.half_width),
        );
        if let Some(l) = t.symbol.hypo_l {
            need(
                l.is_finite() && l <= s.family.claimed_order(),
                "tasks.symbol.hypo_l",
                format!("must be finite and at most the claimed order {}", s.family.claimed_order()),
            );
        }
        for (path, list) in [
            ("tasks.compose.truncations", &t.compose.truncations),
            ("tasks.adjoint.truncations", &t.adjoint.truncations),
        ] {
            need(
                !list.is_empty() && list.iter().all(|&n| (1..=6).contains(&n)),
                path,
                "entries must lie in 1..=6 and the list nonempty".into(),
            );
        }
        let p = &t.parametrix;
        need((1..=6).contains(&p.terms), "tasks.parametrix.terms", "must lie in 1..=6".into());
        need(
            p.cutoff >= 0 && 2 * p.cutoff + p.guard < m.half_width as i64 / 2,
            "tasks.parametrix.cutoff",
            "need cutoff >= 0 and 2 cutoff + guard < J/2".into(),
        );
        need(p.guard >= 0, "tasks.parametrix.guard", "must be nonnegative".into());
        if let Some(eps) = &p.epsilons {
            need(
                eps.len() + 1 == p.terms && eps.iter().all(|e| e.is_finite() && *e > 0.0),
                "tasks.parametrix.epsilons",
                format!("need {} positive entries", p.terms.saturating_sub(1)),
            );
        }
        need(
            !t.garding.c2_grid.is_empty() && t.garding.c2_grid.iter().all(|c| c.is_finite() && *c >= 0.0),
            "tasks.garding.c2_grid",
            "entries must be finite and nonnegative".into(),
        );
        need(
            (1..=200).contains(&t.garding.bisection_steps),
            "tasks.garding.bisection_steps",
            "must lie in 1..=200".into(),
        );
        need(
            t.compact.shells.iter().all(|&j0| j0 >= 0 && j0 <= m.half_width as i64),
            "tasks.compact.shells",
            format!("entries must lie in 0..=J = 0..={}", m.half_width),
        );
        let th = &t.compact.thresholds;
        need(
            th.shell_ratio > 0.0 && th.sv_ratio > 0.0 && th.max_slope.is_finite(),
            "tasks.compact.thresholds",
            "ratios must be positive and the slope finite".into(),
        );
        need(
            t.resolvent.lambda_re.is_finite() && t.resolvent.lambda_im.is_finite(),
            "tasks.resolvent.lambda",
            "must be finite".into(),
        );
        if let Some(l) = t.solve.lambda {
            need(l.is_finite(), "tasks.solve.lambda", "must be finite".into());
        }
        need(
            (1..=6).contains(&t.solve.parametrix_terms),
            "tasks.solve.parametrix_terms",
            "must lie in 1..=6".into(),
        );
        need(t.solve.apriori_samples > 0, "tasks.solve.apriori_samples", "must be positive".into());
        need(
            t.solve.apriori_tolerance > 0.0 && t.solve.apriori_tolerance.is_finite(),
            "tasks.solve.apriori_tolerance",
            "must be positive".into(),
        );

        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }
}

fn factor_problem(g: &SpatialFactor) -> Option<String> {
    (!g.is_finite()).then(|| "spatial factor coefficients must be finite".to_string())
}

fn family_problem(f: &SymbolFamily) -> Option<String> {
    let order = f.claimed_order();
    if !order.is_finite() {
        return Some(format!("order must be finite, got {order}"));
    }
    match f {
        SymbolFamily::Separable { g, .. } => factor_problem(g),
        SymbolFamily::Shifted { g, c, .. } => factor_problem(g).or_else(|| (!c.is_finite()).then(|| "shift c must be finite".into())),
        SymbolFamily::ConstantPlusDecay { c, g, m } => factor_problem(g)
            .or_else(|| (!c.is_finite()).then(|| "constant c must be finite".into()))
            .or_else(|| (*m >= 0.0).then(|| format!("decay order m must be negative, got {m}"))),
        SymbolFamily::Csv { path, .. } => path.is_empty().then(|| "csv path is empty".into()),
        _ => None,
    }
}

/// Relative paths in a config resolve against the config file's directory.
pub fn resolve_path(base: Option<&Path>, p: &Path) -> PathBuf {
    match base {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p.to_path_buf(),
    }
}
