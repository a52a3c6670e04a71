//! Acceptance criteria 1 to 13, run without the libtest harness so each
//! criterion prints one PASS/FAIL line; any failure exits nonzero. Oracles are computed here from first principles. Operator
//! matrices come from direct grid quadrature and L² norms from the
//! closed-form Gram of `h^x e^{2πijx}`.

#![allow(clippy::needless_range_loop)]

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use nalgebra::DMatrix;
use nonharmonic::analysis::{
    apriori_estimate_check, default_c2_grid, garding_verify, interior_difference, resolvent_solve_multiplier,
    strong_solve,
};
use nonharmonic::calculus::{compose_symbols, parametrix, quantize_apply, symbol_from_operator, SymbolMeta};
use nonharmonic::numeric::seeded_rng;
use nonharmonic::symbols::{
    delta_forward, delta_kernel_oracle, seminorm_estimate, taylor_inverse_matrix, SpatialFactor, SYMBOL_STABILITY_TOL,
};
use nonharmonic::{
    GridFunction, ModelSystem, ParametrixOptions, SolveMethod, SymbolFamily, SymbolGrid, Transform,
    WeightFunction,
};
use num_complex::Complex64;

const SEED: u64 = 20240917;

static FAILED: AtomicBool = AtomicBool::new(false);

fn report(n: u32, name: &str, pass: bool, detail: String) {
    println!("criterion {n:02} {name}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    if !pass {
        FAILED.store(true, Ordering::SeqCst);
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

struct Fx {
    t: Transform,
    w: Arc<WeightFunction>,
}

fn fixture(h: f64, j: usize, nx: usize) -> Fx {
    let sys = ModelSystem::with_params(h, j, nx, false).unwrap();
    let w = Arc::new(WeightFunction::standard(sys.spec()));
    Fx { t: Transform::new(sys), w }
}

impl Fx {
    fn with_weight(mut self, w: WeightFunction) -> Self {
        self.w = Arc::new(w);
        self
    }

    fn big_j(&self) -> i64 {
        self.t.window().half_width() as i64
    }

    fn nx(&self) -> usize {
        self.t.system().grid().len()
    }

    fn h(&self) -> f64 {
        self.t.system().spec().h()
    }

    fn sample(&self, f: &SymbolFamily, pad: i64) -> SymbolGrid {
        let j = self.big_j();
        f.generate(self.nx(), -j - pad, j + pad, Arc::clone(&self.w), 1.0).unwrap()
    }
}

/// `⟨j⟩ = (1 + (2πj)² + ln²h)^{1/2}`.
fn bracket(h: f64, j: i64) -> f64 {
    (1.0 + (2.0 * PI * j as f64).powi(2) + h.ln().powi(2)).sqrt()
}

/// `∫₀¹ h^{2x} e^{2πikx} dx`.
fn weighted_moment(h: f64, k: i64) -> Complex64 {
    let a = c(2.0 * h.ln(), 2.0 * PI * k as f64);
    if a.norm() == 0.0 {
        c(1.0, 0.0)
    } else {
        (a.exp() - 1.0) / a
    }
}

/// `‖Σ a_j h^x e^{2πijx}‖²` in closed form.
fn exact_norm2(h: f64, a: &[Complex64]) -> f64 {
    let mut s = c(0.0, 0.0);
    for (p, ap) in a.iter().enumerate() {
        for (q, aq) in a.iter().enumerate() {
            s += ap * aq.conj() * weighted_moment(h, p as i64 - q as i64);
        }
    }
    s.re
}

/// `M[η][ξ] = (1/N) Σ_k σ(x_k, ξ) e^{2πi(ξ-η)x_k}`: the window matrix of
/// `T_σ`, since `u_ξ v̄_η = e^{2πi(ξ-η)x}` for the unnormalized family.
fn oracle_matrix(sigma: &SymbolGrid, big_j: i64) -> DMatrix<Complex64> {
    let n = (2 * big_j + 1) as usize;
    let nx = sigma.nx();
    let mut m = DMatrix::zeros(n, n);
    for (q, xi) in (-big_j..=big_j).enumerate() {
        let col = sigma.column(xi);
        for (p, eta) in (-big_j..=big_j).enumerate() {
            let mut s = c(0.0, 0.0);
            for (k, z) in col.iter().enumerate() {
                let phase = 2.0 * PI * ((xi - eta) * k as i64).rem_euclid(nx as i64) as f64 / nx as f64;
                s += z * Complex64::from_polar(1.0, phase);
            }
            m[(p, q)] = s / nx as f64;
        }
    }
    m
}

fn norm2(m: &DMatrix<Complex64>) -> f64 {
    m.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

fn sorted_singular_values(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

fn positions(big_j: i64, keep: impl Fn(i64) -> bool) -> Vec<usize> {
    (-big_j..=big_j)
        .enumerate()
        .filter(|(_, j)| keep(*j))
        .map(|(p, _)| p)
        .collect()
}

fn select(m: &DMatrix<Complex64>, rows: &[usize], cols: &[usize]) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows.len(), cols.len(), |r, q| m[(rows[r], cols[q])])
}

fn catalogue() -> Vec<SymbolFamily> {
    let g = SpatialFactor {
        constant: 1.0,
        cos: vec![0.25, 0.1],
        sin: vec![0.3],
    };
    vec![
        SymbolFamily::MultiplierPower { m: 1.5 },
        SymbolFamily::Separable { g: g.clone(), m: -1.0 },
        SymbolFamily::EllipticDemo { m: 2.0 },
        SymbolFamily::Shifted {
            g: SpatialFactor::elliptic_demo(),
            c: 0.03,
            m: 1.0,
        },
        SymbolFamily::ConstantPlusDecay { c: 0.5, g, m: -2.0 },
        SymbolFamily::Index { claimed_order: 1.0 },
    ]
}

fn criterion_01_biorthogonality_and_plancherel() {
    let mut worst_b = 0.0f64;
    let mut worst_p = 0.0f64;
    for h in [1.0, 2.0, 4.0] {
        let fx = fixture(h, 64, 512);
        let nx = fx.nx();
        let sys = fx.t.system();
        // library samples against the closed forms, then the pairing by the grid rule
        let u: Vec<Vec<Complex64>> = (-64..=64i64).map(|j| sys.u_samples(j)).collect();
        let v: Vec<Vec<Complex64>> = (-64..=64i64).map(|j| sys.v_samples(j)).collect();
        for (p, j) in (-64..=64i64).enumerate() {
            for k in 0..nx {
                let x = k as f64 / nx as f64;
                let uj = h.powf(x) * Complex64::from_polar(1.0, 2.0 * PI * j as f64 * x);
                let vj = h.powf(-x) * Complex64::from_polar(1.0, 2.0 * PI * j as f64 * x);
                assert!((u[p][k] - uj).norm() <= 1e-12 * uj.norm() && (v[p][k] - vj).norm() <= 1e-12 * vj.norm());
            }
        }
        for p in 0..u.len() {
            for q in 0..v.len() {
                let s: Complex64 = u[p].iter().zip(&v[q]).map(|(a, b)| a * b.conj()).sum::<Complex64>() / nx as f64;
                let target = if p == q { 1.0 } else { 0.0 };
                worst_b = worst_b.max((s - target).norm());
            }
        }
        let mut rng = seeded_rng(SEED);
        for _ in 0..200 {
            let a = fx.t.random_coefficients(32, &mut rng);
            let f = fx.t.inverse_l(&a).unwrap();
            let n2 = exact_norm2(h, a.values());
            let pairing = fx.t.plancherel_pairing(&f, &f).unwrap();
            worst_p = worst_p.max((pairing - n2).norm() / n2);
        }
    }
    let pass = worst_b <= 1e-12 && worst_p <= 1e-10;
    report(1, "biorthogonality_plancherel", pass, format!("defect {worst_b:.2e} <= 1e-12, pairing {worst_p:.2e} <= 1e-10"));
}

fn criterion_02_riesz_bounds() {
    let fx = fixture(2.0, 64, 512);
    let nx = fx.nx();
    let mut rng = seeded_rng(SEED + 2);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let mut parseval = 0.0f64;
    for _ in 0..500 {
        let a = fx.t.random_coefficients(64, &mut rng);
        let f = fx.t.inverse_l(&a).unwrap();
        let fhat2: f64 = fx.t.forward_l(&f).unwrap().values().iter().map(|z| z.norm_sqr()).sum();
        // classical Parseval of g = f h^{-x}, a trigonometric polynomial
        let g2: f64 = f
            .values()
            .iter()
            .enumerate()
            .map(|(k, z)| (z * 2f64.powf(-(k as f64) / nx as f64)).norm_sqr())
            .sum::<f64>()
            / nx as f64;
        parseval = parseval.max((fhat2 - g2).abs() / g2);
        let r = (g2 / exact_norm2(2.0, a.values())).sqrt();
        lo = lo.min(r);
        hi = hi.max(r);
    }
    let pass = lo >= 0.5 - 1e-9 && hi <= 1.0 + 1e-9 && parseval <= 1e-10;
    report(2, "riesz_bounds", pass, format!("ratios in [{lo:.4}, {hi:.4}], parseval {parseval:.2e}"));
}

fn criterion_03_difference_operators() {
    let fx = fixture(2.0, 16, 128);
    let xs: Vec<usize> = (0..16).map(|i| (i * 37 + 5) % 128).collect();
    let binom = |n: usize, k: usize| -> f64 { (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64) };
    let mut worst = 0.0f64;
    for fam in catalogue() {
        let s = fx.sample(&fam, 5);
        let scale = s.max_abs();
        for alpha in 1..=4usize {
            let fwd = delta_forward(&s, alpha).unwrap();
            let kern = delta_kernel_oracle(&s, alpha, fx.t.system(), &xs).unwrap();
            for (row, &k) in kern.iter().zip(&xs) {
                for (p, z) in row.iter().enumerate() {
                    let j = s.j_lo() + p as i64;
                    let direct: Complex64 = (0..=alpha)
                        .map(|i| s.get(k, j + i as i64) * binom(alpha, i) * if (alpha - i) % 2 == 0 { 1.0 } else { -1.0 })
                        .sum();
                    worst = worst.max((z - direct).norm() / scale).max((fwd.get(k, j) - direct).norm() / scale);
                }
            }
        }
    }
    report(3, "difference_equivalence", worst <= 1e-8, format!("max deviation {worst:.2e} <= 1e-8"));
}

fn criterion_04_taylor_inversion() {
    let n_max = 4usize;
    // S(n, k) = k S(n-1, k) + S(n-1, k-1)
    let mut s2 = vec![vec![0.0f64; n_max + 1]; n_max + 1];
    s2[0][0] = 1.0;
    for n in 1..=n_max {
        for k in 1..=n {
            s2[n][k] = k as f64 * s2[n - 1][k] + s2[n - 1][k - 1];
        }
    }
    let n = n_max + 1;
    let t: Vec<Vec<Complex64>> = (0..n)
        .map(|b| (0..n).map(|a| c(0.0, 2.0 * PI).powu(b as u32) * s2[b][a]).collect())
        .collect();
    let lib = taylor_inverse_matrix(n_max);
    let mut worst = 0.0f64;
    for col in 0..n {
        let mut x = vec![c(0.0, 0.0); n];
        for r in 0..n {
            let rhs = if r == col { c(1.0, 0.0) } else { c(0.0, 0.0) };
            let acc: Complex64 = (0..r).map(|k| t[r][k] * x[k]).sum();
            x[r] = (rhs - acc) / t[r][r];
        }
        for r in 0..n {
            worst = worst.max((lib[r][col] - x[r]).norm() / x[r].norm().max(1e-300).max(lib[r][col].norm()).max(f64::MIN_POSITIVE));
        }
    }
    let tol = 16.0 * f64::EPSILON;
    report(4, "taylor_inversion", worst <= tol, format!("relative deviation {worst:.2e} <= {tol:.2e}"));
}

fn criterion_05_quantization_round_trip() {
    let fx = fixture(2.0, 16, 128);
    let mut worst = 0.0f64;
    for fam in catalogue() {
        let s = fx.sample(&fam, 0);
        let meta = SymbolMeta {
            weight: Arc::clone(&fx.w),
            order: s.order(),
            rho: 1.0,
        };
        let back = symbol_from_operator(|f| quantize_apply(&s, f, &fx.t), &fx.t, meta).unwrap();
        worst = worst.max(back.max_abs_diff(&s) / s.max_abs());
    }
    report(5, "quantization_round_trip", worst <= 1e-10, format!("relative deviation {worst:.2e} <= 1e-10"));
}

fn criterion_06_composition_multiplier_exact() {
    let fx = fixture(2.0, 32, 256);
    let a = fx.sample(&SymbolFamily::EllipticDemo { m: 1.0 }, 4);
    let b = fx.sample(&SymbolFamily::MultiplierPower { m: 2.0 }, 4);
    let prod = oracle_matrix(&a, 32) * oracle_matrix(&b, 32);
    let scale = norm2(&prod);
    let mut worst = 0.0f64;
    for n in 1..=3 {
        let ab = compose_symbols(&a, &b, n).unwrap();
        worst = worst.max(norm2(&(oracle_matrix(&ab, 32) - &prod)) / scale);
    }
    report(6, "composition_multiplier_exact", worst <= 1e-10, format!("relative defect {worst:.2e} <= 1e-10"));
}

fn criterion_07_composition_asymptotics() {
    // Smoothed-integer weight; the standard weight's first difference does
    // not decay fast enough at J = 64 for the N = 3 term to pay off.
    let fx = fixture(2.0, 64, 512).with_weight(WeightFunction::smoothed_integer());
    let fam = SymbolFamily::EllipticDemo { m: 1.0 };
    let a = fx.sample(&fam, 8);
    let b = fx.sample(&fam, 8);
    let prod = oracle_matrix(&a, 64) * oracle_matrix(&b, 64);
    let inner = positions(64, |j| j.abs() <= 32);
    let d: Vec<f64> = (1..=3)
        .map(|n| {
            let ab = compose_symbols(&a, &b, n).unwrap();
            norm2(&select(&(oracle_matrix(&ab, 64) - &prod), &inner, &inner))
        })
        .collect();
    let pass = d[0] > d[1] && d[1] > d[2] && d[2] <= 0.2 * d[0];
    report(7, "composition_asymptotics", pass, format!("interior defects {d:?}, ratio {:.3}", d[2] / d[0]));
}

fn criterion_08_parametrix() {
    let fx = fixture(2.0, 64, 512);
    let r = 4i64;
    let mp = fx.sample(&SymbolFamily::MultiplierPower { m: 2.0 }, 8);
    let opts = ParametrixOptions {
        terms: 3,
        cutoff: r,
        guard: 0,
        epsilons: None,
    };
    let p = parametrix(&mp, &fx.t, &opts).unwrap();
    let eye = |n: usize| DMatrix::<Complex64>::identity(n, n);
    let lit_cols = positions(64, |j| j.abs() >= 2 * r && j.abs() <= 32);
    let all: Vec<usize> = (0..129).collect();
    let residual = oracle_matrix(&p.combined, 64) * oracle_matrix(&mp, 64) - eye(129);
    let exact = norm2(&select(&residual, &all, &lit_cols));

    let demo = fx.sample(&SymbolFamily::EllipticDemo { m: 2.0 }, 8);
    let ma = oracle_matrix(&demo, 64);
    let guard = 4;
    let int_cols = positions(64, |j| j.abs() >= 2 * r + guard && j.abs() <= 32);
    let mut res = Vec::new();
    let mut sigma0 = None;
    for n in 1..=3 {
        let p = parametrix(
            &demo,
            &fx.t,
            &ParametrixOptions {
                terms: n,
                cutoff: r,
                guard,
                epsilons: None,
            },
        )
        .unwrap();
        let e = oracle_matrix(&p.combined, 64) * &ma - eye(129);
        res.push(norm2(&select(&e, &all, &int_cols)));
        sigma0.get_or_insert(p.terms[0].clone());
    }
    let sigma0 = sigma0.unwrap().restrict(-64, 64).unwrap();
    let scan = seminorm_estimate(&sigma0, 3, 2, &[0, 1], SYMBOL_STABILITY_TOL).unwrap();
    let pass = exact <= 1e-10 && res[0] >= res[1] && res[1] >= res[2] && scan.member_m && sigma0.order() == -2.0;
    report(
        8,
        "parametrix",
        pass,
        format!("multiplier {exact:.2e} <= 1e-10, interior {res:?}, sigma0 in M^-2: {}", scan.member_m),
    );
}

fn criterion_09_garding() {
    let fx = fixture(1.0, 32, 256);
    let mp = fx.sample(&SymbolFamily::MultiplierPower { m: 2.0 }, 0);
    let g = garding_verify(&mp, &fx.t, &default_c2_grid(), 60).unwrap();
    let mult_ok = (g.c1 - 1.0).abs() <= 1e-12 && g.c2 == 0.0 && g.margin >= -1e-12;

    let mut c1 = Vec::new();
    let mut slack = f64::INFINITY;
    for j in [32usize, 64] {
        let fx = fixture(1.0, j, 8 * j);
        let demo = fx.sample(&SymbolFamily::EllipticDemo { m: 2.0 }, 0);
        let r = garding_verify(&demo, &fx.t, &default_c2_grid(), 60).unwrap();
        c1.push(r.c1);
        if j == 64 {
            // at h = 1 the family is orthonormal and the grid rule is exact
            let mut rng = seeded_rng(SEED + 9);
            let nx = fx.nx() as f64;
            for _ in 0..500 {
                let a = fx.t.random_coefficients(32, &mut rng);
                let norm: f64 = a.values().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                let a = a.with_values(a.values().iter().map(|z| z / norm).collect()).unwrap();
                let f = fx.t.inverse_l(&a).unwrap();
                let tf = quantize_apply(&demo, &f, &fx.t).unwrap();
                let form: f64 = tf.values().iter().zip(f.values()).map(|(x, y)| (x * y.conj()).re).sum::<f64>() / nx;
                let hm: f64 = (-64..=64i64).zip(a.values()).map(|(j, z)| bracket(1.0, j).powi(2) * z.norm_sqr()).sum();
                slack = slack.min(form - r.c1 * hm + r.c2);
            }
        }
    }
    let stable = c1.iter().all(|&x| x > 0.0) && (c1[1] - c1[0]).abs() <= 0.2 * c1[0];
    let pass = mult_ok && stable && slack >= -1e-9;
    report(
        9,
        "garding",
        pass,
        format!(
            "multiplier C1 = {}, C2 = {}, margin {:.1e}; demo C1 {c1:?}; min slack {slack:.3e}",
            g.c1, g.c2, g.margin
        ),
    );
}

fn criterion_10_gohberg_compactness() {
    let fx = fixture(1.0, 64, 512);
    let cpd = fx.sample(
        &SymbolFamily::ConstantPlusDecay {
            c: 0.5,
            g: SpatialFactor::elliptic_demo(),
            m: -1.0,
        },
        0,
    );
    // at h = 1 the window matrix is already L²-orthonormal
    let s = sorted_singular_values(&oracle_matrix(&cpd, 64));
    let k_max = s.len() / 4;
    let s_min = s[..=k_max].iter().copied().fold(f64::INFINITY, f64::min);

    let half = fx.sample(&SymbolFamily::MultiplierPower { m: -0.5 }, 0);
    let ladder: Vec<i64> = (0..=8).map(|k| k * 8).collect();
    let shells: Vec<f64> = ladder
        .iter()
        .map(|&j0| {
            (-64..=64i64)
                .filter(|j| j.abs() >= j0)
                .flat_map(|j| half.column(j).iter().map(|z| z.norm()))
                .fold(0.0, f64::max)
        })
        .collect();
    let decreasing = shells.windows(2).all(|p| p[1] < p[0]);
    let sv = sorted_singular_values(&oracle_matrix(&half, 64));
    let ratio = sv[sv.len() / 2] / sv[0];
    let pass = s_min >= 0.45 && decreasing && ratio <= 0.1;
    report(
        10,
        "gohberg_compactness",
        pass,
        format!("min s_k (k <= dim/4) {s_min:.4} >= 0.45; shells decreasing {decreasing}; s_mid/s_0 {ratio:.4} <= 0.1"),
    );
}

fn criterion_11_resolvent_and_strong_solution() {
    let fx = fixture(2.0, 64, 512);
    let mut rng = seeded_rng(SEED + 11);
    let a = fx.t.random_coefficients(32, &mut rng);
    let f = fx.t.inverse_l(&a).unwrap();
    let fhat = fx.t.forward_l(&f).unwrap();

    let mp = fx.sample(&SymbolFamily::MultiplierPower { m: 2.0 }, 0);
    let lambda = c(0.5, 2.0);
    let res = resolvent_solve_multiplier(&mp, lambda, &f, &fx.t).unwrap();
    let coeff_defect = (-64..=64i64)
        .zip(res.coefficients.values().iter().zip(fhat.values()))
        .map(|(j, (u, g))| ((mp.column(j)[0] - lambda) * u - g).norm())
        .fold(0.0, f64::max)
        / fhat.values().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let resolvent_ok = res.residual <= 1e-10 && coeff_defect <= 1e-10;

    let demo = fx.sample(&SymbolFamily::EllipticDemo { m: 2.0 }, 8);
    let g = garding_verify(&demo.restrict(-64, 64).unwrap(), &fx.t, &default_c2_grid(), 60).unwrap();
    let shift = g.c2 + 1.0;
    let dense = strong_solve(&demo, shift, Some(g.c2), &f, SolveMethod::Dense, &fx.t, 3).unwrap();
    let iter = strong_solve(&demo, shift, Some(g.c2), &f, SolveMethod::ParametrixIteration, &fx.t, 3).unwrap();
    let m = oracle_matrix(&demo, 64) + DMatrix::<Complex64>::identity(129, 129) * c(shift, 0.0);
    let u = nalgebra::DVector::from_column_slice(dense.coefficients.values());
    let rhs = nalgebra::DVector::from_column_slice(fhat.values());
    let dense_res = (&m * u - &rhs).norm() / rhs.norm();
    let agree = interior_difference(&dense.coefficients, &iter.coefficients);
    let pass = resolvent_ok && dense_res <= 1e-8 && agree <= 1e-6;
    report(
        11,
        "resolvent_strong_solution",
        pass,
        format!(
            "resolvent {:.2e} / {coeff_defect:.2e} <= 1e-10; dense {dense_res:.2e} <= 1e-8; agreement {agree:.2e} <= 1e-6",
            res.residual
        ),
    );
}

/// `(‖Au‖ + ‖u‖) / ‖u‖_{H^m}` extremes at h = 1, where every norm is a
/// coefficient norm.
fn apriori_oracle(j: usize, samples: usize) -> (f64, f64) {
    let fx = fixture(1.0, j, 8 * j);
    let demo = fx.sample(&SymbolFamily::EllipticDemo { m: 2.0 }, 0);
    let m = oracle_matrix(&demo, j as i64);
    let mut rng = seeded_rng(SEED + 12);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for _ in 0..samples {
        let a = fx.t.random_coefficients(j / 2, &mut rng);
        let v = nalgebra::DVector::from_column_slice(a.values());
        let au = (&m * &v).norm();
        let hm: f64 = (-(j as i64)..=j as i64)
            .zip(a.values())
            .map(|(k, z)| bracket(1.0, k).powi(4) * z.norm_sqr())
            .sum::<f64>()
            .sqrt();
        let r = (au + v.norm()) / hm;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    (lo, hi)
}

fn criterion_12_apriori_estimate() {
    let fx = fixture(2.0, 32, 256);
    let lib = apriori_estimate_check(
        |tr: &Transform| {
            let w = tr.window();
            let weight = Arc::new(WeightFunction::standard(tr.system().spec()));
            SymbolFamily::EllipticDemo { m: 2.0 }.generate(tr.system().grid().len(), w.lo(), w.hi(), weight, 1.0)
        },
        &fx.t,
        200,
        SEED,
        0.2,
    )
    .unwrap();
    let (c1, d1) = apriori_oracle(32, 200);
    let (c2, d2) = apriori_oracle(64, 200);
    let stable = |a: f64, b: f64| a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() && (a - b).abs() <= 0.2 * a;
    let pass = lib.verdict && stable(c1, c2) && stable(d1, d2);
    report(
        12,
        "apriori_estimate",
        pass,
        format!(
            "h=2 C {:.3} -> {:.3}, D {:.3} -> {:.3}; h=1 oracle C {c1:.3} -> {c2:.3}, D {d1:.3} -> {d2:.3}",
            lib.base.c, lib.doubled.c, lib.base.d, lib.doubled.d
        ),
    );
}

fn run_suite(out: &Path) -> (i32, Vec<u8>) {
    let status = Command::new(env!("CARGO_BIN_EXE_nonharmonic"))
        .args(["suite", "--seed", "7", "--plots", "off", "--out"])
        .arg(out)
        .output()
        .unwrap();
    let payload = std::fs::read(out.join("suite").join("payload.json")).unwrap();
    (status.status.code().unwrap_or(-1), payload)
}

fn criterion_13_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let (code1, first) = run_suite(dir.path());
    let (code2, second) = run_suite(dir.path());
    let doc: serde_json::Value = serde_json::from_slice(&first).unwrap();
    let all_pass = doc["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true);
    let pass = code1 == 0 && code2 == 0 && first == second && all_pass && doc["verdict"] == "pass";
    report(
        13,
        "determinism",
        pass,
        format!("exit codes {code1}/{code2}, {} payload bytes, identical {}", first.len(), first == second),
    );
}

/// The oracle matrix agrees with the library's quantization on one column.
fn oracle_self_check() {
    let fx = fixture(2.0, 8, 64);
    let s = fx.sample(&SymbolFamily::EllipticDemo { m: 1.0 }, 0);
    let m = oracle_matrix(&s, 8);
    let u3 = GridFunction::new(fx.t.system().u_samples(3)).unwrap();
    let col = fx.t.forward_l(&quantize_apply(&s, &u3, &fx.t).unwrap()).unwrap();
    for (p, z) in col.values().iter().enumerate() {
        assert!((z - m[(p, 11)]).norm() < 1e-12 * s.max_abs());
    }
    assert!(fx.h() == 2.0);
}

fn main() {
    let criteria: [(u32, fn()); 13] = [
        (1, criterion_01_biorthogonality_and_plancherel),
        (2, criterion_02_riesz_bounds),
        (3, criterion_03_difference_operators),
        (4, criterion_04_taylor_inversion),
        (5, criterion_05_quantization_round_trip),
        (6, criterion_06_composition_multiplier_exact),
        (7, criterion_07_composition_asymptotics),
        (8, criterion_08_parametrix),
        (9, criterion_09_garding),
        (10, criterion_10_gohberg_compactness),
        (11, criterion_11_resolvent_and_strong_solution),
        (12, criterion_12_apriori_estimate),
        (13, criterion_13_determinism),
    ];
    oracle_self_check();
    for (n, f) in criteria {
        if std::panic::catch_unwind(f).is_err() {
            println!("criterion {n:02}: FAIL (panicked)");
            FAILED.store(true, Ordering::SeqCst);
        }
    }
    if FAILED.load(Ordering::SeqCst) {
        std::process::exit(1);
    }
    println!("acceptance: all 13 criteria pass");
}
