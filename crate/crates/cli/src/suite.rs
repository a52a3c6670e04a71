//! The acceptance battery behind `suite`. Fixtures are pinned here rather
//! than read from the config; only the seed is taken from the run.

use std::sync::Arc;

use nonharmonic::analysis::{
    apriori_estimate_check, compactness_test, default_c2_grid, default_shell_ladder, garding_direct_check,
    garding_verify, gohberg_distance, interior_difference, resolvent_solve_multiplier, strong_solve,
    CompactnessThresholds, SOLVE_TOLERANCE,
};
use nonharmonic::calculus::{
    assemble_matrix, compose_symbols, interior_modes, parametrix, quantize_apply, spectral_norm,
    symbol_from_operator, SymbolMeta,
};
use nonharmonic::numeric::seeded_rng;
use nonharmonic::symbols::{
    delta_forward, delta_kernel_oracle, seminorm_estimate, taylor_coefficient_matrix, taylor_inverse_matrix,
    SpatialFactor, SYMBOL_STABILITY_TOL,
};
use nonharmonic::{
    Error, ModelSystem, ParametrixOptions, SolveMethod, SymbolFamily, SymbolGrid, Transform, WeightFunction,
};
use num_complex::Complex64;
use serde_json::json;

use crate::output::{Check, Series, TaskOutput};

struct Fixture {
    t: Transform,
    w: Arc<WeightFunction>,
}

impl Fixture {
    fn new(h: f64, j: usize, nx: usize) -> Result<Self, Error> {
        let sys = ModelSystem::with_params(h, j, nx, false)?;
        let w = Arc::new(WeightFunction::standard(sys.spec()));
        Ok(Self { t: Transform::new(sys), w })
    }

    fn with_weight(mut self, w: WeightFunction) -> Self {
        self.w = Arc::new(w);
        self
    }

    fn sample(&self, f: &SymbolFamily, pad: i64) -> Result<SymbolGrid, Error> {
        let win = self.t.window();
        f.generate(self.t.system().grid().len(), win.lo() - pad, win.hi() + pad, Arc::clone(&self.w), 1.0)
    }
}

fn catalogue() -> Vec<SymbolFamily> {
    let g = SpatialFactor {
        constant: 1.0,
        cos: vec![0.3],
        sin: vec![0.0, 0.2],
    };
    vec![
        SymbolFamily::MultiplierPower { m: 2.0 },
        SymbolFamily::Separable { g: g.clone(), m: 1.0 },
        SymbolFamily::EllipticDemo { m: 1.0 },
        SymbolFamily::Shifted {
            g: SpatialFactor::elliptic_demo(),
            c: 0.01,
            m: 0.0,
        },
        SymbolFamily::ConstantPlusDecay { c: 0.5, g, m: -1.0 },
        SymbolFamily::Index { claimed_order: 1.0 },
    ]
}

fn c1_biorthogonality(seed: u64) -> Result<Vec<Check>, Error> {
    let mut worst_b = 0.0f64;
    let mut worst_p = 0.0f64;
    for h in [1.0, 2.0, 4.0] {
        let fx = Fixture::new(h, 64, 512)?;
        worst_b = worst_b.max(fx.t.system().biorthogonality_defect());
        let mut rng = seeded_rng(seed);
        for _ in 0..200 {
            let a = fx.t.random_coefficients(32, &mut rng);
            let f = fx.t.inverse_l(&a)?;
            let n2 = fx.t.norm_u_span(&a)?.powi(2);
            worst_p = worst_p.max((fx.t.plancherel_pairing(&f, &f)? - n2).norm() / n2);
        }
    }
    Ok(vec![
        Check::at_most("c01_biorthogonality", worst_b, 1e-12),
        Check::at_most("c01_plancherel", worst_p, 1e-10),
    ])
}

/// `Σ|f̂|²` against the classical Parseval sum of `f·h^{-x}` on the grid.
fn c2_riesz(seed: u64) -> Result<Vec<Check>, Error> {
    let fx = Fixture::new(2.0, 64, 512)?;
    let grid = fx.t.system().grid();
    let h = fx.t.system().spec().h();
    let mut rng = seeded_rng(seed);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let mut parseval_err = 0.0f64;
    for _ in 0..500 {
        let a = fx.t.random_coefficients(64, &mut rng);
        let f = fx.t.inverse_l(&a)?;
        let g2: f64 = f
            .values()
            .iter()
            .zip(grid.nodes())
            .map(|(z, x)| (z * h.powf(-x)).norm_sqr())
            .sum::<f64>()
            / grid.len() as f64;
        let coef2: f64 = fx.t.forward_l(&f)?.values().iter().map(|z| z.norm_sqr()).sum();
        parseval_err = parseval_err.max((coef2 - g2).abs() / g2);
        let r = coef2.sqrt() / fx.t.norm_u_span(&a)?;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok(vec![
        Check::at_most("c02_parseval_oracle", parseval_err, 1e-10),
        Check::at_least("c02_riesz_lower", lo, 0.5 - 1e-9),
        Check::at_most("c02_riesz_upper", hi, 1.0 + 1e-9),
    ])
}

fn c3_difference() -> Result<Vec<Check>, Error> {
    let fx = Fixture::new(2.0, 16, 128)?;
    let xs: Vec<usize> = (0..16).map(|i| 8 * i + 3).collect();
    let mut worst = 0.0f64;
    for fam in catalogue() {
        let s = fx.sample(&fam, 4)?;
        let scale = s.max_abs();
        for alpha in 1..=3 {
            let fwd = delta_forward(&s, alpha)?;
            let kern = delta_kernel_oracle(&s, alpha, fx.t.system(), &xs)?;
            for (row, &k) in kern.iter().zip(&xs) {
                for (p, z) in row.iter().enumerate() {
                    let j = s.j_lo() + p as i64;
                    worst = worst.max((z - fwd.get(k, j)).norm() / scale);
                }
            }
        }
    }
    Ok(vec![Check::at_most("c03_difference_oracle", worst, 1e-8)])
}

/// Forward substitution on the lower-triangular Taylor matrix.
#[allow(clippy::needless_range_loop)]
fn c4_taylor() -> Vec<Check> {
    let mut worst = 0.0f64;
    for order in 0..=4 {
        let t = taylor_coefficient_matrix(order);
        let c = taylor_inverse_matrix(order);
        let n = order + 1;
        // solve T X = I column by column
        for col in 0..n {
            let mut x = vec![Complex64::new(0.0, 0.0); n];
            for r in 0..n {
                let rhs = if r == col { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
                let acc: Complex64 = (0..r).map(|k| t[r][k] * x[k]).sum();
                x[r] = (rhs - acc) / t[r][r];
            }
            // T C = I, so the solved column must match C's column
            for r in 0..n {
                let scale = x[r].norm().max(1.0);
                worst = worst.max((x[r] - c[r][col]).norm() / scale);
            }
        }
    }
    vec![Check::at_most("c04_taylor_inverse", worst, 16.0 * f64::EPSILON)]
}

fn c5_round_trip() -> Result<Vec<Check>, Error> {
    let fx = Fixture::new(2.0, 16, 128)?;
    let win = fx.t.window();
    let mut worst = 0.0f64;
    for fam in catalogue() {
        let s = fx.sample(&fam, 0)?.restrict(win.lo(), win.hi())?;
        let meta = SymbolMeta {
            weight: Arc::clone(&fx.w),
            order: s.order(),
            rho: 1.0,
        };
        let back = symbol_from_operator(|f| quantize_apply(&s, f, &fx.t), &fx.t, meta)?;
        worst = worst.max(back.max_abs_diff(&s) / s.max_abs());
    }
    Ok(vec![Check::at_most("c05_quantization_round_trip", worst, 1e-10)])
}

fn c6_multiplier_right() -> Result<Vec<Check>, Error> {
    let fx = Fixture::new(2.0, 32, 256)?;
    let a = fx.sample(&SymbolFamily::EllipticDemo { m: 1.0 }, 4)?;
    let b = fx.sample(&SymbolFamily::MultiplierPower { m: 1.0 }, 4)?;
    let prod = assemble_matrix(&a, &fx.t)?.mul(&assemble_matrix(&b, &fx.t)?)?;
    let mut worst = 0.0f64;
    for n in 1..=3 {
        let c = compose_symbols(&a, &b, n)?;
        let d = assemble_matrix(&c, &fx.t)?.sub(&prod)?.spectral_norm();
        worst = worst.max(d / prod.spectral_norm());
    }
    Ok(vec![Check::at_most("c06_composition_multiplier_exact", worst, 1e-10)])
}

fn c7_composition(series: &mut Vec<Series>) -> Result<Vec<Check>, Error> {
    let fx = Fixture::new(2.0, 64, 512)?.with_weight(WeightFunction::smoothed_integer());
    let fam = SymbolFamily::EllipticDemo { m: 1.0 };
    let a = fx.sample(&fam, 8)?;
    let b = fx.sample(&fam, 8)?;
    let prod = assemble_matrix(&a, &fx.t)?.mul(&assemble_matrix(&b, &fx.t)?)?;
    let interior = interior_modes(fx.t.window());
    let mut s = Series::new("c07_composition_defect", &["n", "defect_interior"]).with_plot(
        "composition defect (interior)",
        0,
        &[1],
        true,
    );
    let mut d = Vec::new();
    for n in 1..=3 {
        let c = compose_symbols(&a, &b, n)?;
        let diff = assemble_matrix(&c, &fx.t)?.sub(&prod)?;
        let v = spectral_norm(&diff.block(&interior, &interior));
        s.push(vec![n as f64, v]);
        d.push(v);
    }
    series.push(s);
    Ok(vec![
        Check::new("c07_strictly_decreasing", d[0] > d[1] && d[1] > d[2], format!("{d:?}")),
        Check::at_most("c07_ratio", d[2] / d[0], 0.2),
    ])
}

fn c8_parametrix(series: &mut Vec<Series>) -> Result<Vec<Check>, Error> {
    let fx = Fixture::new(2.0, 64, 512)?;
    let mp = fx.sample(&SymbolFamily::MultiplierPower { m: 2.0 }, 8)?;
    let exact = parametrix(
        &mp,
        &fx.t,
        &ParametrixOptions {
            terms: 3,
            cutoff: 4,
            guard: 0,
            epsilons: None,
        },
    )?;
    let demo = fx.sample(&SymbolFamily::EllipticDemo { m: 2.0 }, 8)?;
    let mut s = Series::new("c08_parametrix_residual", &["n", "residual_interior"]).with_plot(
        "parametrix residual (interior)",
        0,
        &[1],
        true,
    );
    let mut r = Vec::new();
    let mut sigma0 = None;
    for n in 1..=3 {
        let p = parametrix(
            &demo,
            &fx.t,
            &ParametrixOptions {
                terms: n,
                ..Default::default()
            },
        )?;
        s.push(vec![n as f64, p.residual_interior]);
        r.push(p.residual_interior);
        sigma0.get_or_insert(p.terms[0].clone());
    }
    series.push(s);
    let win = fx.t.window();
    let sigma0 = sigma0.expect("three runs").restrict(win.lo(), win.hi())?;
    let scan = seminorm_estimate(&sigma0, 3, 2, &[0, 1], SYMBOL_STABILITY_TOL)?;
    Ok(vec![
        Check::at_most("c08_multiplier_exact", exact.residual_literal, 1e-10),
        Check::new("c08_interior_monotone", r[0] >= r[1] && r[1] >= r[2], format!("{r:?}")),
        Check::new("c08_sigma0_membership", scan.member_m, format!("M^{}", sigma0.order())),
    ])
}

fn c9_garding(seed: u64) -> Result<Vec<Check>, Error> {
    let fx = Fixture::new(1.0, 32, 256)?;
    let mp = fx.sample(&SymbolFamily::MultiplierPower { m: 2.0 }, 0)?;
    let g = garding_verify(&mp, &fx.t, &default_c2_grid(), 60)?;
    let mut c1 = Vec::new();
    let mut direct = None;
    for j in [32, 64] {
        let fx = Fixture::new(1.0, j, 8 * j)?;
        let demo = fx.sample(&SymbolFamily::EllipticDemo { m: 2.0 }, 0)?;
        let r = garding_verify(&demo, &fx.t, &default_c2_grid(), 60)?;
        if j == 64 {
            direct = Some(garding_direct_check(&demo, &r, &fx.t, 500, seed)?);
        }
        c1.push(r.c1);
    }
    let direct = direct.expect("J = 64 ran");
    let stable = c1[0] > 0.0 && c1[1] > 0.0 && (c1[1] - c1[0]).abs() <= 0.2 * c1[0];
    Ok(vec![
        Check::new(
            "c09_multiplier_constants",
            (g.c1 - 1.0).abs() <= 1e-12 && g.c2 == 0.0,
            format!("C1 = {}, C2 = {}", g.c1, g.c2),
        ),
        Check::at_least("c09_multiplier_margin", g.margin, -1e-12),
        Check::new("c09_demo_c1_stable", stable, format!("{c1:?}")),
        Check::at_least("c09_direct_slack", direct.min_slack, -1e-9),
    ])
}

fn c10_compactness(series: &mut Vec<Series>) -> Result<Vec<Check>, Error> {
    let fx = Fixture::new(1.0, 64, 512)?;
    let ladder = default_shell_ladder(64);
    let cpd = fx.sample(
        &SymbolFamily::ConstantPlusDecay {
            c: 0.5,
            g: SpatialFactor::elliptic_demo(),
            m: -1.0,
        },
        0,
    )?;
    let r = gohberg_distance(&cpd, &fx.t, &ladder, 0.25, 0.05)?;
    let k_max = r.singular_values.len() / 4;
    let s_min = r.singular_values[..=k_max].iter().copied().fold(f64::INFINITY, f64::min);
    let half = fx.sample(&SymbolFamily::MultiplierPower { m: -0.5 }, 0)?;
    let v = compactness_test(&half, &fx.t, &ladder, CompactnessThresholds::default())?;
    let sv = &v.report.singular_values;
    let mut shells = Series::new("c10_shell_suprema", &["j0", "sup"]).with_plot("shell suprema", 0, &[1], true);
    for sh in &v.report.shells {
        shells.push(vec![sh.j0 as f64, sh.sup]);
    }
    let mut svs = Series::new("c10_singular_values", &["k", "s"]).with_plot("singular values", 0, &[1], true);
    for (k, x) in sv.iter().enumerate() {
        svs.push(vec![k as f64, *x]);
    }
    series.push(shells);
    series.push(svs);
    let ratio = sv[sv.len() / 2] / sv[0];
    Ok(vec![
        Check::at_least("c10_noncompact_lower_bound", s_min, 0.45),
        Check::new("c10_shells_decreasing", v.shells_decreasing, format!("slope {:e}", v.shell_slope)),
        Check::at_most("c10_singular_decay", ratio, 0.1),
    ])
}

fn c11_solve(seed: u64, series: &mut Vec<Series>) -> Result<Vec<Check>, Error> {
    let fx = Fixture::new(2.0, 64, 512)?;
    let mut rng = seeded_rng(seed);
    let a = fx.t.random_coefficients(32, &mut rng);
    let f = fx.t.inverse_l(&a)?;
    let mp = fx.sample(&SymbolFamily::MultiplierPower { m: 2.0 }, 0)?;
    let res = resolvent_solve_multiplier(&mp, Complex64::new(0.5, 2.0), &f, &fx.t)?;
    let demo = fx.sample(&SymbolFamily::EllipticDemo { m: 2.0 }, 8)?;
    let win = fx.t.window();
    let g = garding_verify(&demo.restrict(win.lo(), win.hi())?, &fx.t, &default_c2_grid(), 60)?;
    let lambda = g.c2 + 1.0;
    let dense = strong_solve(&demo, lambda, Some(g.c2), &f, SolveMethod::Dense, &fx.t, 3)?;
    let iter = strong_solve(&demo, lambda, Some(g.c2), &f, SolveMethod::ParametrixIteration, &fx.t, 3)?;
    let mut s = Series::new("c11_iteration_history", &["iteration", "residual"]).with_plot(
        "parametrix iteration residual",
        0,
        &[1],
        true,
    );
    for (k, r) in iter.history.iter().enumerate() {
        s.push(vec![k as f64, *r]);
    }
    series.push(s);
    Ok(vec![
        Check::at_most("c11_resolvent_residual", res.residual, 1e-10),
        Check::at_most("c11_dense_residual", dense.history[0], SOLVE_TOLERANCE),
        Check::at_most(
            "c11_methods_agree",
            interior_difference(&dense.coefficients, &iter.coefficients),
            1e-6,
        ),
    ])
}

fn c12_apriori(seed: u64) -> Result<Vec<Check>, Error> {
    let fx = Fixture::new(2.0, 32, 256)?;
    let r = apriori_estimate_check(
        |tr: &Transform| {
            let w = tr.window();
            let weight = Arc::new(WeightFunction::standard(tr.system().spec()));
            SymbolFamily::EllipticDemo { m: 2.0 }.generate(tr.system().grid().len(), w.lo(), w.hi(), weight, 1.0)
        },
        &fx.t,
        200,
        seed,
        0.2,
    )?;
    Ok(vec![Check::new(
        "c12_apriori_stable",
        r.verdict,
        format!("C: {:e} -> {:e}, D: {:e} -> {:e}", r.base.c, r.doubled.c, r.base.d, r.doubled.d),
    )])
}

pub fn run(seed: u64) -> Result<TaskOutput, Error> {
    let mut series = Vec::new();
    let mut checks = Vec::new();
    checks.extend(c1_biorthogonality(seed)?);
    checks.extend(c2_riesz(seed.wrapping_add(1))?);
    checks.extend(c3_difference()?);
    checks.extend(c4_taylor());
    checks.extend(c5_round_trip()?);
    checks.extend(c6_multiplier_right()?);
    checks.extend(c7_composition(&mut series)?);
    checks.extend(c8_parametrix(&mut series)?);
    checks.extend(c9_garding(seed.wrapping_add(3))?);
    checks.extend(c10_compactness(&mut series)?);
    checks.extend(c11_solve(seed.wrapping_add(4), &mut series)?);
    checks.extend(c12_apriori(seed.wrapping_add(5))?);
    let summary: serde_json::Map<String, serde_json::Value> = checks
        .iter()
        .map(|c| (c.name.clone(), json!(if c.pass { "pass" } else { "fail" })))
        .collect();
    Ok(TaskOutput {
        result: json!({
            "seed": seed,
            "passed": checks.iter().filter(|c| c.pass).count(),
            "total": checks.len(),
            "summary": summary,
        }),
        checks,
        series,
    })
}
