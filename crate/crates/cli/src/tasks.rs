//! One function per subcommand. Each returns a result document, the checks
//! that decide the exit code, and the CSV series behind any plots.

use std::path::PathBuf;
use std::sync::Arc;

use nonharmonic::analysis::{
    apriori_estimate_check, compactness_test, default_c2_grid, default_shell_ladder, garding_direct_check,
    garding_verify, interior_difference, resolvent_solve_multiplier, strong_solve,
};
use nonharmonic::calculus::{
    adjoint_symbol, assemble_matrix, assemble_matrix_star, compose_symbols, interior_modes, parametrix,
    quantize_apply, spectral_norm, symbol_from_operator, SymbolMeta,
};
use nonharmonic::model::{verify_eigenpair, wz_check};
use nonharmonic::numeric::seeded_rng;
use nonharmonic::symbols::{
    hypoellipticity_check, m_ellipticity_check, seminorm_estimate, SpatialRegularity, ELLIPTICITY_THRESHOLD,
};
use nonharmonic::weights::{check_difference_axiom, check_growth};
use nonharmonic::{
    Error, GridFunction, ModelSystem, ParametrixOptions, SolveMethod, SymbolFamily, SymbolGrid, Transform,
    WeightFunction,
};
use num_complex::Complex64;
use serde_json::json;

use crate::config::{resolve_path, RunConfig, SolveChoice, WeightChoice};
use crate::output::{Check, Series, TaskOutput};

pub type TaskResult = Result<TaskOutput, Error>;

/// Resolved model, transform and weight for one invocation.
pub struct Context {
    pub cfg: RunConfig,
    /// directory of the config file; relative input paths resolve here
    pub base_dir: Option<PathBuf>,
    pub transform: Transform,
    pub weight: Arc<WeightFunction>,
}

impl Context {
    pub fn new(cfg: RunConfig, base_dir: Option<PathBuf>) -> Result<Self, Error> {
        let m = &cfg.model;
        let system = ModelSystem::with_params(m.h, m.half_width, m.nx, m.normalize_u)?;
        let weight = match cfg.weight.kind {
            WeightChoice::Standard => WeightFunction::standard(system.spec()),
            WeightChoice::SmoothedInteger => WeightFunction::smoothed_integer(),
            WeightChoice::UserTable => {
                let p = cfg.weight.table.as_ref().expect("validated: table present");
                let file = std::fs::File::open(resolve_path(base_dir.as_deref(), p))?;
                let table = nonharmonic::io::read_weight_table_csv(file)?;
                WeightFunction::user_table(table, cfg.weight.mu0, cfg.weight.mu1, cfg.weight.mu)?
            }
        };
        Ok(Self {
            cfg,
            base_dir,
            transform: Transform::new(system),
            weight: Arc::new(weight),
        })
    }

    pub fn system(&self) -> &ModelSystem {
        self.transform.system()
    }

    /// Samples `family` on the window plus the configured padding; CSV
    /// symbols are read as given.
    pub fn sample(&self, family: &SymbolFamily) -> Result<SymbolGrid, Error> {
        let win = self.transform.window();
        let nx = self.system().grid().len();
        let rho = self.cfg.symbol.rho;
        if let SymbolFamily::Csv { path, claimed_order } = family {
            let file = std::fs::File::open(resolve_path(self.base_dir.as_deref(), path.as_ref()))?;
            let s = nonharmonic::io::read_symbol_csv(file, *claimed_order, rho, Arc::clone(&self.weight))?;
            if s.nx() != nx || !s.contains(win.lo()) || !s.contains(win.hi()) {
                return Err(Error::GeometryMismatch(format!(
                    "csv symbol has N_x = {} and range {}..={}; the run needs N_x = {nx} and {}..={}",
                    s.nx(),
                    s.j_lo(),
                    s.j_hi(),
                    win.lo(),
                    win.hi()
                )));
            }
            return Ok(s.with_generator(family.tag()));
        }
        let pad = self.cfg.symbol.pad;
        family.generate(nx, win.lo() - pad, win.hi() + pad, Arc::clone(&self.weight), rho)
    }

    /// The configured symbol on the window only.
    pub fn symbol_on_window(&self) -> Result<SymbolGrid, Error> {
        let win = self.transform.window();
        self.sample(&self.cfg.symbol.family)?.restrict(win.lo(), win.hi())
    }

    pub fn random_f(&self, seed: u64) -> GridFunction {
        let mut rng = seeded_rng(seed);
        let a = self
            .transform
            .random_coefficients(self.transform.window().half_width() / 2, &mut rng);
        self.transform.inverse_l(&a).expect("window coefficients synthesize")
    }
}

fn bool_f(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

pub fn system(ctx: &Context) -> TaskResult {
    let sys = ctx.system();
    let mut eig = Series::new("eigendata", &["j", "eigenvalue_re", "eigenvalue_im", "bracket"]);
    for e in sys.eigendata() {
        eig.push(vec![e.j as f64, e.eigenvalue.re, e.eigenvalue.im, e.bracket]);
    }
    let wz = wz_check(sys);
    let mut wz_series = Series::new("wz_infima", &["j", "inf_u", "inf_v"]).with_plot("WZ infima", 0, &[1, 2], true);
    for e in &wz.entries {
        wz_series.push(vec![e.j as f64, e.inf_u, e.inf_v]);
    }
    let biorth = sys.biorthogonality_defect();
    let sup_ratio = sys.sup_bound_ratio();
    let eigen_res = sys.window().indices().map(|j| verify_eigenpair(sys, j)).fold(0.0, f64::max);
    Ok(TaskOutput {
        result: json!({
            "norm_const": sys.spec().norm_const(),
            "biorthogonality_defect": biorth,
            "sup_bound_ratio": sup_ratio,
            "eigenpair_residual": eigen_res,
            "wz": {
                "min_inf_u": wz.min_inf_u,
                "min_inf_v": wz.min_inf_v,
                "exponent": wz.exponent,
                "nowhere_zero": wz.nowhere_zero,
            },
        }),
        checks: vec![
            Check::at_most("biorthogonality", biorth, 1e-12),
            Check::at_most("eigenpair_residual", eigen_res, 1e-9),
            Check::at_most("sup_bound", sup_ratio, 1.0 + 1e-12),
            Check::new("wz_nowhere_zero", wz.nowhere_zero, format!("min inf = {:e}", wz.min_inf_u.min(wz.min_inf_v))),
        ],
        series: vec![eig, wz_series],
    })
}

pub fn transform(ctx: &Context) -> TaskResult {
    let t = &ctx.transform;
    let samples = ctx.cfg.tasks.transform.samples;
    let mut rng = seeded_rng(ctx.cfg.seed);
    let mut s = Series::new("round_trip", &["sample", "coefficient_error", "grid_error", "plancherel_rel"]);
    let (mut worst_c, mut worst_g, mut worst_p) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..samples {
        let a = t.random_coefficients(t.window().half_width() / 2, &mut rng);
        let f = t.inverse_l(&a)?;
        let back = t.forward_l(&f)?;
        let ce = back.max_abs_diff(&a) / a.values().iter().map(|z| z.norm()).fold(0.0, f64::max);
        let ge = t.inverse_l(&back)?.max_abs_diff(&f) / f.max_abs();
        let n2 = t.norm_u_span(&a)?.powi(2);
        let pe = (t.plancherel_pairing(&f, &f)? - n2).norm() / n2;
        worst_c = worst_c.max(ce);
        worst_g = worst_g.max(ge);
        worst_p = worst_p.max(pe);
        s.push(vec![i as f64, ce, ge, pe]);
    }
    let riesz = t.riesz_bounds(samples, ctx.cfg.seed.wrapping_add(1))?;
    // ‖f‖² = c² ∫ h^{2x}|g|², so the ratio lies between the extremes of 1/(c h^x)
    let c = ctx.system().spec().norm_const();
    let h = ctx.system().spec().h();
    let (lo, hi) = (1.0 / (c * h.max(1.0)), 1.0 / (c * h.min(1.0)));
    Ok(TaskOutput {
        result: json!({
            "samples": samples,
            "round_trip_coefficient_error": worst_c,
            "round_trip_grid_error": worst_g,
            "plancherel_relative_error": worst_p,
            "riesz": riesz,
            "riesz_interval": [lo, hi],
        }),
        checks: vec![
            Check::at_most("round_trip_coefficients", worst_c, 1e-10),
            Check::at_most("round_trip_grid", worst_g, 1e-10),
            Check::at_most("plancherel", worst_p, 1e-10),
            Check::at_least("riesz_lower", riesz.m1_est, lo - 1e-9),
            Check::at_most("riesz_upper", riesz.m2_est, hi + 1e-9),
        ],
        series: vec![s],
    })
}

pub fn weights(ctx: &Context) -> TaskResult {
    let cfgw = &ctx.cfg.tasks.weights;
    let win = ctx.transform.window();
    let growth = check_growth(&ctx.weight, win)?;
    let diff = check_difference_axiom(&ctx.weight, win, cfgw.alpha_max, cfgw.tolerance)?;
    let mut table = Series::new("weight", &["j", "lambda"]).with_plot("weight", 0, &[1], false);
    for j in win.indices() {
        table.push(vec![j as f64, ctx.weight.eval(j)]);
    }
    let mut rows = Series::new("difference_axiom", &["alpha", "gamma", "sup", "sup_half", "stable"]);
    for r in &diff.rows {
        rows.push(vec![r.alpha as f64, r.gamma as f64, r.sup, r.sup_half, bool_f(r.stable)]);
    }
    Ok(TaskOutput {
        result: json!({
            "kind": ctx.weight.kind(),
            "exponents": {"mu0": ctx.weight.mu0(), "mu1": ctx.weight.mu1(), "mu": ctx.weight.mu()},
            "growth": growth,
            "difference": diff,
        }),
        checks: vec![
            Check::new("growth", growth.verdict, format!("C0 = {:e}, C1 = {:e}", growth.c0_fit, growth.c1_fit)),
            Check::new("difference_axiom", diff.verdict, format!("{} rows", diff.rows.len())),
        ],
        series: vec![table, rows],
    })
}

/// Class scans are findings, not requirements: a symbol outside `M^m`
/// still exits 0 and reports `member_m = false`.
pub fn symbol(ctx: &Context) -> TaskResult {
    let st = &ctx.cfg.tasks.symbol;
    let sigma = ctx.symbol_on_window()?;
    let beta_max = match sigma.regularity() {
        SpatialRegularity::Periodic => st.beta_max,
        SpatialRegularity::Sampled => 0,
    };
    let scan = seminorm_estimate(&sigma, st.alpha_max, beta_max, &st.gammas, st.tolerance)?;
    let ell = m_ellipticity_check(&sigma, st.cutoff, ELLIPTICITY_THRESHOLD, st.tolerance)?;
    let hypo = match st.hypo_l {
        Some(l) => Some(hypoellipticity_check(
            &sigma,
            sigma.order(),
            l,
            st.cutoff,
            st.alpha_max,
            beta_max,
            st.tolerance,
        )?),
        None => None,
    };
    let mut rows = Series::new("seminorms", &["alpha", "beta", "gamma", "sup", "sup_half", "tail_slope", "stable"]);
    for r in &scan.rows {
        rows.push(vec![
            r.alpha as f64,
            r.beta as f64,
            r.gamma as f64,
            r.sup,
            r.sup_half,
            r.tail_slope,
            bool_f(r.stable),
        ]);
    }
    let finite = scan.rows.iter().all(|r| r.sup_half.is_finite());
    Ok(TaskOutput {
        result: json!({
            "symbol": sigma.generator(),
            "claimed_order": sigma.order(),
            "rho": sigma.rho(),
            "beta_max_used": beta_max,
            "membership": {"s": scan.member_s, "m": scan.member_m},
            "seminorms": scan,
            "ellipticity": ell,
            "hypoellipticity": hypo,
        }),
        checks: vec![Check::new("scan_finite", finite, "half-window suprema are finite")],
        series: vec![rows],
    })
}

pub fn apply(ctx: &Context) -> TaskResult {
    let t = &ctx.transform;
    let sigma = ctx.symbol_on_window()?;
    let f = match &ctx.cfg.tasks.apply.input {
        Some(p) => {
            let file = std::fs::File::open(resolve_path(ctx.base_dir.as_deref(), p))?;
            nonharmonic::io::read_grid_function_csv(file)?
        }
        None => ctx.random_f(ctx.cfg.seed),
    };
    let g = quantize_apply(&sigma, &f, t)?;
    let m = assemble_matrix(&sigma, t)?;
    let via_matrix = m.apply(&t.forward_l(&f)?)?;
    let direct = t.forward_l(&g)?;
    let scale = direct.values().iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let matrix_err = via_matrix.max_abs_diff(&direct) / scale;
    let meta = SymbolMeta {
        weight: sigma.weight_arc(),
        order: sigma.order(),
        rho: sigma.rho(),
    };
    let recovered = symbol_from_operator(|h| quantize_apply(&sigma, h, t), t, meta)?;
    let recovery_err = recovered.max_abs_diff(&sigma) / sigma.max_abs().max(f64::MIN_POSITIVE);
    let mut s = Series::new("apply", &["k", "x", "f_re", "f_im", "tf_re", "tf_im"]);
    let grid = ctx.system().grid();
    for (k, (a, b)) in f.values().iter().zip(g.values()).enumerate() {
        s.push(vec![k as f64, grid.node(k), a.re, a.im, b.re, b.im]);
    }
    Ok(TaskOutput {
        result: json!({
            "symbol": sigma.generator(),
            "input": ctx.cfg.tasks.apply.input.as_ref().map(|p| p.display().to_string()),
            "output_max_abs": g.max_abs(),
            "matrix_consistency": matrix_err,
            "symbol_recovery_error": recovery_err,
        }),
        checks: vec![
            Check::at_most("matrix_consistency", matrix_err, 1e-10),
            Check::at_most("symbol_recovery", recovery_err, 1e-10),
        ],
        series: vec![s],
    })
}

pub fn compose(ctx: &Context) -> TaskResult {
    let t = &ctx.transform;
    let ct = &ctx.cfg.tasks.compose;
    let a = ctx.sample(&ct.left)?;
    let b = ctx.sample(&ct.right)?;
    let prod = assemble_matrix(&a, t)?.mul(&assemble_matrix(&b, t)?)?;
    let prod_norm = prod.spectral_norm();
    let interior = interior_modes(t.window());
    let mut s = Series::new("composition_defect", &["n", "defect_full_rel", "defect_interior"]).with_plot(
        "composition defect",
        0,
        &[1, 2],
        true,
    );
    let mut rows = Vec::new();
    for &n in &ct.truncations {
        let c = compose_symbols(&a, &b, n)?;
        let diff = assemble_matrix(&c, t)?.sub(&prod)?;
        let full = diff.spectral_norm() / prod_norm;
        let inner = spectral_norm(&diff.block(&interior, &interior));
        s.push(vec![n as f64, full, inner]);
        rows.push(json!({"n": n, "defect_full_rel": full, "defect_interior": inner}));
    }
    let interior: Vec<f64> = s.rows.iter().map(|r| r[2]).collect();
    let decreasing = interior.windows(2).all(|p| p[1] < p[0]);
    let mut checks = Vec::new();
    if b.is_x_independent() {
        let worst = s.rows.iter().map(|r| r[1]).fold(0.0, f64::max);
        checks.push(Check::at_most("multiplier_right_exact", worst, 1e-10));
    }
    Ok(TaskOutput {
        result: json!({
            "left": a.generator(),
            "right": b.generator(),
            "right_x_independent": b.is_x_independent(),
            "rows": rows,
            "interior_strictly_decreasing": decreasing,
        }),
        checks,
        series: vec![s],
    })
}

pub fn adjoint(ctx: &Context) -> TaskResult {
    let t = &ctx.transform;
    let sigma = ctx.sample(&ctx.cfg.symbol.family)?;
    let exact = assemble_matrix(&sigma, t)?.adjoint();
    let exact_norm = exact.spectral_norm();
    let interior = interior_modes(t.window());
    let mut s = Series::new("adjoint_defect", &["n", "defect_full_rel", "defect_interior"]).with_plot(
        "adjoint defect",
        0,
        &[1, 2],
        true,
    );
    let mut rows = Vec::new();
    for &n in &ctx.cfg.tasks.adjoint.truncations {
        let tau = adjoint_symbol(&sigma, n)?;
        let diff = assemble_matrix_star(&tau, t)?.sub(&exact)?;
        let full = diff.spectral_norm() / exact_norm;
        let inner = spectral_norm(&diff.block(&interior, &interior));
        s.push(vec![n as f64, full, inner]);
        rows.push(json!({"n": n, "defect_full_rel": full, "defect_interior": inner}));
    }
    let interior: Vec<f64> = s.rows.iter().map(|r| r[2]).collect();
    let mut checks = Vec::new();
    let real_multiplier = sigma.is_x_independent() && sigma.values().iter().all(|z| z.im == 0.0);
    if real_multiplier {
        let worst = s.rows.iter().map(|r| r[1]).fold(0.0, f64::max);
        checks.push(Check::at_most("real_multiplier_self_adjoint", worst, 1e-12));
    }
    Ok(TaskOutput {
        result: json!({
            "symbol": sigma.generator(),
            "rows": rows,
            "interior_strictly_decreasing": interior.windows(2).all(|p| p[1] < p[0]),
        }),
        checks,
        series: vec![s],
    })
}

pub fn parametrix_task(ctx: &Context) -> TaskResult {
    let t = &ctx.transform;
    let opts = &ctx.cfg.tasks.parametrix;
    let sigma = ctx.sample(&ctx.cfg.symbol.family)?;
    let mut s = Series::new("parametrix_residual", &["n", "residual_literal", "residual_interior"]).with_plot(
        "parametrix residual",
        0,
        &[1, 2],
        true,
    );
    let mut last = None;
    for n in 1..=opts.terms {
        let o = ParametrixOptions {
            terms: n,
            epsilons: opts.epsilons.as_ref().map(|e| e[..n - 1].to_vec()),
            ..opts.clone()
        };
        let p = parametrix(&sigma, t, &o)?;
        s.push(vec![n as f64, p.residual_literal, p.residual_interior]);
        last = Some(p);
    }
    let p = last.expect("at least one term");
    let win = t.window();
    let sigma0 = p.terms[0].restrict(win.lo(), win.hi())?;
    let st = &ctx.cfg.tasks.symbol;
    let beta_max = match sigma0.regularity() {
        SpatialRegularity::Periodic => st.beta_max,
        SpatialRegularity::Sampled => 0,
    };
    let scan = seminorm_estimate(&sigma0, st.alpha_max, beta_max, &st.gammas, st.tolerance)?;
    let interior: Vec<f64> = s.rows.iter().map(|r| r[2]).collect();
    let monotone = interior.windows(2).all(|q| q[1] <= q[0] + 1e-12);
    Ok(TaskOutput {
        result: json!({
            "symbol": sigma.generator(),
            "options": opts,
            "ellipticity": p.ellipticity,
            "literal_modes": [p.literal_modes.first(), p.literal_modes.last(), p.literal_modes.len()],
            "interior_modes": [p.interior_modes.first(), p.interior_modes.last(), p.interior_modes.len()],
            "residual_literal": s.rows.iter().map(|r| r[1]).collect::<Vec<_>>(),
            "residual_interior": interior,
            "residual_symbol_sup": p.residual_symbol_sup,
            "sigma0_order": sigma0.order(),
            "sigma0_membership_m": scan.member_m,
            "convention": p.convention,
        }),
        checks: vec![
            Check::new("interior_residual_non_increasing", monotone, format!("{interior:?}")),
            Check::new("sigma0_in_class", scan.member_m, format!("M^{}", sigma0.order())),
        ],
        series: vec![s],
    })
}

pub fn garding(ctx: &Context) -> TaskResult {
    let t = &ctx.transform;
    let gt = &ctx.cfg.tasks.garding;
    let sigma = ctx.symbol_on_window()?;
    let report = garding_verify(&sigma, t, &gt.c2_grid, gt.bisection_steps)?;
    let direct = garding_direct_check(&sigma, &report, t, gt.direct_samples, ctx.cfg.seed)?;
    let mut s = Series::new("garding_sweep", &["c2", "c1", "margin"]);
    for p in &report.sweep {
        s.push(vec![p.c2, p.c1, p.margin]);
    }
    Ok(TaskOutput {
        result: json!({"symbol": sigma.generator(), "report": report, "direct": direct}),
        checks: vec![
            Check::new(
                "garding_constants",
                report.verdict,
                format!("C1 = {:e}, C2 = {:e}, margin = {:e}", report.c1, report.c2, report.margin),
            ),
            Check::at_least("direct_slack", direct.min_slack, -1e-9),
        ],
        series: vec![s],
    })
}

pub fn compact(ctx: &Context) -> TaskResult {
    let t = &ctx.transform;
    let ct = &ctx.cfg.tasks.compact;
    let sigma = ctx.symbol_on_window()?;
    if sigma.order() > 0.0 {
        return Err(Error::Hypothesis(format!(
            "compactness diagnostics need a bounded symbol (order <= 0), got order {}",
            sigma.order()
        )));
    }
    let ladder = if ct.shells.is_empty() {
        default_shell_ladder(t.window().half_width() as i64)
    } else {
        ct.shells.clone()
    };
    let v = compactness_test(&sigma, t, &ladder, ct.thresholds)?;
    let mut shells = Series::new("shell_suprema", &["j0", "sup"]).with_plot("shell suprema", 0, &[1], true);
    for sh in &v.report.shells {
        shells.push(vec![sh.j0 as f64, sh.sup]);
    }
    let mut sv = Series::new("singular_values", &["k", "s"]).with_plot("singular values", 0, &[1], true);
    for (k, x) in v.report.singular_values.iter().enumerate() {
        sv.push(vec![k as f64, *x]);
    }
    Ok(TaskOutput {
        result: json!({"symbol": sigma.generator(), "ladder": ladder, "verdict": v}),
        checks: vec![Check::new(
            "gohberg_lower_bound",
            v.report.lower_bound_holds,
            format!("s_k >= {:e} - {:e}", v.report.d_sigma_estimate, v.report.bound_tolerance),
        )],
        series: vec![shells, sv],
    })
}

pub fn resolvent(ctx: &Context) -> TaskResult {
    let t = &ctx.transform;
    let rt = &ctx.cfg.tasks.resolvent;
    let win = t.window();
    let sigma = ctx.sample(&rt.family)?.restrict(win.lo(), win.hi())?;
    let lambda = Complex64::new(rt.lambda_re, rt.lambda_im);
    let f = ctx.random_f(ctx.cfg.seed);
    let sol = resolvent_solve_multiplier(&sigma, lambda, &f, t)?;
    let mut s = Series::new("resolvent_coefficients", &["j", "abs_u_hat"]).with_plot(
        "resolvent coefficients",
        0,
        &[1],
        true,
    );
    for (j, z) in win.indices().zip(sol.coefficients.values()) {
        s.push(vec![j as f64, z.norm()]);
    }
    Ok(TaskOutput {
        result: json!({
            "symbol": sigma.generator(),
            "lambda": [lambda.re, lambda.im],
            "residual": sol.residual,
        }),
        checks: vec![Check::at_most("resolvent_residual", sol.residual, 1e-10)],
        series: vec![s],
    })
}

pub fn solve(ctx: &Context) -> TaskResult {
    let t = &ctx.transform;
    let sv = &ctx.cfg.tasks.solve;
    let sigma = ctx.sample(&ctx.cfg.symbol.family)?;
    let (lambda, lambda0) = match sv.lambda {
        Some(l) => (l, None),
        None => {
            let win = t.window();
            let g = garding_verify(&sigma.restrict(win.lo(), win.hi())?, t, &default_c2_grid(), 60)?;
            (g.c2 + 1.0, Some(g.c2))
        }
    };
    let f = ctx.random_f(ctx.cfg.seed);
    let methods: &[SolveMethod] = match sv.method {
        SolveChoice::Dense => &[SolveMethod::Dense],
        SolveChoice::ParametrixIteration => &[SolveMethod::ParametrixIteration],
        SolveChoice::Both => &[SolveMethod::Dense, SolveMethod::ParametrixIteration],
    };
    let mut checks = Vec::new();
    let mut series = Vec::new();
    let mut results = Vec::new();
    let mut sols = Vec::new();
    for &method in methods {
        let sol = strong_solve(&sigma, lambda, lambda0, &f, method, t, sv.parametrix_terms)?;
        let last = *sol.history.last().expect("nonempty history");
        let name = match method {
            SolveMethod::Dense => "dense",
            SolveMethod::ParametrixIteration => "parametrix_iteration",
        };
        checks.push(Check::at_most(format!("{name}_residual"), last, nonharmonic::analysis::SOLVE_TOLERANCE));
        let mut s = Series::new(&format!("{name}_history"), &["iteration", "residual"]).with_plot(
            &format!("{name} residual"),
            0,
            &[1],
            true,
        );
        for (k, r) in sol.history.iter().enumerate() {
            s.push(vec![k as f64, *r]);
        }
        series.push(s);
        results.push(json!({
            "method": method,
            "iterations": sol.history.len() - 1,
            "final_residual": last,
            "condition_number": sol.condition_number,
        }));
        sols.push(sol);
    }
    let agreement = (sols.len() == 2).then(|| interior_difference(&sols[0].coefficients, &sols[1].coefficients));
    if let Some(d) = agreement {
        checks.push(Check::at_most("methods_agree_interior", d, 1e-6));
    }
    let apriori = match &ctx.cfg.symbol.family {
        SymbolFamily::Csv { .. } => None,
        family => {
            let report = apriori_estimate_check(
                |tr: &Transform| {
                    let w = tr.window();
                    let weight = match ctx.cfg.weight.kind {
                        WeightChoice::Standard => Arc::new(WeightFunction::standard(tr.system().spec())),
                        _ => Arc::clone(&ctx.weight),
                    };
                    family.generate(tr.system().grid().len(), w.lo(), w.hi(), weight, ctx.cfg.symbol.rho)
                },
                t,
                sv.apriori_samples,
                ctx.cfg.seed.wrapping_add(2),
                sv.apriori_tolerance,
            )?;
            checks.push(Check::new(
                "apriori_constants",
                report.verdict,
                format!(
                    "C: {:e} -> {:e}, D: {:e} -> {:e}",
                    report.base.c, report.doubled.c, report.base.d, report.doubled.d
                ),
            ));
            Some(report)
        }
    };
    Ok(TaskOutput {
        result: json!({
            "symbol": sigma.generator(),
            "lambda": lambda,
            "lambda0": lambda0,
            "solutions": results,
            "interior_agreement": agreement,
            "apriori": apriori,
        }),
        checks,
        series,
    })
}
