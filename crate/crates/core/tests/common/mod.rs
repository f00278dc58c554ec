//! Shared fixtures: brute-force oracles written independently of the library
//! internals, random instance builders, and the property checks used by both
//! the property suites and the acceptance gate.
#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use xtreat::inference::{eate, eate_band, eqte, eqte_band, BandArm, BandSpec};
use xtreat::survival::{survival_curve, LocalDistribution};
use xtreat::tail::{fit_tail, GammaMethod, HillWeights};
use xtreat::tuning::{select_k, TuningConfig};
use xtreat::weights::{estimate_weights_kernel_ratio, WeightModel};
use xtreat::{inference, sim, tail, tuning, Dataset, ExecMode, KernelSpec, Observation, SeededRng, Smoother};

// ---------------------------------------------------------------------------
// oracles

pub fn epa(u: f64) -> f64 {
    if u.abs() <= 1.0 {
        0.75 * (1.0 - u * u)
    } else {
        0.0
    }
}

/// Reflected Epanechnikov weight `h⁻¹[K((s-t)/h) + K((-s-t)/h) + K((2-s-t)/h)]`.
pub fn kh(s: f64, t: f64, h: f64) -> f64 {
    (epa((s - t) / h) + epa((-s - t) / h) + epa((2.0 - s - t) / h)) / h
}

pub struct Instance {
    pub ts: Vec<f64>,
    pub ys: Vec<f64>,
    pub ws: Vec<f64>,
}

impl Instance {
    pub fn dataset(&self) -> Dataset {
        Dataset::from_ty(&self.ts, &self.ys).unwrap()
    }
}

pub fn brute_survival(inst: &Instance, t: f64, h: f64, y: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..inst.ts.len() {
        let k = inst.ws[i] * kh(inst.ts[i], t, h);
        den += k;
        if inst.ys[i] > y {
            num += k;
        }
    }
    num / den
}

/// `inf{z : F̄(z) ≤ 1 - α}` by checking every sample value.
pub fn brute_quantile(inst: &Instance, t: f64, h: f64, alpha: f64) -> f64 {
    let mut cands: Vec<f64> = (0..inst.ts.len()).filter(|&i| kh(inst.ts[i], t, h) > 0.0).map(|i| inst.ys[i]).collect();
    cands.sort_by(f64::total_cmp);
    *cands.iter().find(|&&z| brute_survival(inst, t, h, z) <= 1.0 - alpha).unwrap()
}

pub fn brute_density(inst: &Instance, t: f64, h: f64) -> f64 {
    inst.ts.iter().map(|&s| kh(s, t, h)).sum::<f64>() / inst.ts.len() as f64
}

fn brute_psi(inst: &Instance, t: f64, h: f64, threshold: f64, p: f64) -> Vec<f64> {
    let n = inst.ts.len() as f64;
    let f = brute_density(inst, t, h);
    (0..inst.ts.len())
        .map(|i| {
            let ind = if inst.ys[i] > threshold { 1.0 } else { 0.0 };
            (h * p / n).sqrt() * (inst.ws[i] * ind * kh(inst.ts[i], t, h) / (p * f) - 1.0)
        })
        .collect()
}

pub fn brute_omega_f(inst: &Instance, t: f64, h: f64, y_n: f64, v1: f64, v2: f64) -> f64 {
    let a = brute_psi(inst, t, h, v1 * y_n, brute_survival(inst, t, h, v1 * y_n));
    let b = brute_psi(inst, t, h, v2 * y_n, brute_survival(inst, t, h, v2 * y_n));
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

pub fn brute_omega_q(inst: &Instance, t: f64, h: f64, alpha: f64, gamma: f64, v1: f64, v2: f64) -> f64 {
    let col = |v: f64| {
        let p = v * (1.0 - alpha);
        brute_psi(inst, t, h, brute_quantile(inst, t, h, 1.0 - p), p)
    };
    let (a, b) = (col(v1), col(v2));
    gamma * gamma * a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

// ---------------------------------------------------------------------------
// random instances

/// Heavy-tailed outcomes with a treatment-dependent scale.
pub fn random_instance(seed: u64, n: usize, weighted: bool) -> Instance {
    let mut rng = SeededRng::new(seed, 99);
    let mut inst = Instance { ts: vec![], ys: vec![], ws: vec![] };
    for _ in 0..n {
        let t = rng.uniform();
        let u = rng.uniform_open0();
        inst.ts.push(t);
        inst.ys.push((1.0 + t) * u.powf(-0.3));
        inst.ws.push(if weighted { 0.5 + 1.5 * rng.uniform() } else { 1.0 });
    }
    inst
}

pub fn smoother(h: f64) -> Smoother {
    Smoother::new(KernelSpec::default(), h).unwrap()
}

#[derive(Debug, Clone)]
pub struct Case {
    pub seed: u64,
    pub n: usize,
    pub h: f64,
    pub t: f64,
    pub alpha: f64,
    pub c: f64,
}

pub fn case_strategy() -> impl Strategy<Value = Case> {
    (any::<u64>(), 40usize..160, 0.2f64..0.6, 0.1f64..0.9, 0.3f64..0.95, 0.05f64..20.0)
        .prop_map(|(seed, n, h, t, alpha, c)| Case { seed, n, h, t, alpha, c })
}

fn err(msg: String) -> TestCaseError {
    TestCaseError::fail(msg)
}

// ---------------------------------------------------------------------------
// property checks

pub fn check_monotone_survival(c: &Case) -> Result<(), TestCaseError> {
    let inst = random_instance(c.seed, c.n, true);
    let ds = inst.dataset();
    let mut grid = inst.ys.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid.insert(0, grid[0] - 1.0);
    let curve = match survival_curve(&ds, &inst.ws, &smoother(c.h), c.t, &grid) {
        Ok(curve) => curve,
        Err(_) => return Ok(()),
    };
    for w in curve.values.windows(2) {
        if w[1] > w[0] {
            return Err(err(format!("survival increased {} -> {}", w[0], w[1])));
        }
    }
    if curve.values[0] != 1.0 || *curve.values.last().unwrap() != 0.0 {
        return Err(err("survival must run from 1 to 0".into()));
    }
    if curve.values.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(err("survival outside [0,1]".into()));
    }
    Ok(())
}

pub fn check_generalized_inverse(c: &Case) -> Result<(), TestCaseError> {
    let inst = random_instance(c.seed, c.n, true);
    let ds = inst.dataset();
    let Ok(local) = LocalDistribution::new(&ds, &inst.ws, &smoother(c.h), c.t) else {
        return Ok(());
    };
    let q = local.quantile(c.alpha).map_err(|e| err(e.to_string()))?;
    if local.survival(q) > 1.0 - c.alpha {
        return Err(err(format!("F̄(q) = {} > 1 - α", local.survival(q))));
    }
    // every support point strictly below q must still be above the level
    for &z in local.support().iter().filter(|&&z| z < q) {
        if local.survival(z) <= 1.0 - c.alpha {
            return Err(err(format!("smaller z = {z} already reaches the level")));
        }
    }
    if local.survival(q - 1e-9 * q.abs().max(1.0)) <= 1.0 - c.alpha && local.support()[0] < q {
        return Err(err("left limit at q already reaches the level".into()));
    }
    Ok(())
}

pub fn fits(inst: &Instance, c: &Case, scale: f64) -> Option<(Dataset, tail::TailFit, tail::TailFit, f64, f64)> {
    let ds = inst.dataset().map_outcomes(|y| y * scale).unwrap();
    let sm = smoother(c.h);
    let k = (c.n / 4).max(8);
    let m = GammaMethod::Hill(HillWeights::new(8).unwrap());
    let f1 = fit_tail(&ds, &inst.ws, &sm, c.t, k, &m).ok()?;
    let f2 = fit_tail(&ds, &inst.ws, &sm, 1.0 - c.t, k, &m).ok()?;
    let v1 = inference::gamma_variance(&ds, &inst.ws, &sm, &f1, Default::default()).ok()?;
    let v2 = inference::gamma_variance(&ds, &inst.ws, &sm, &f2, Default::default()).ok()?;
    Some((ds, f1, f2, v1, v2))
}

fn band_rho(alpha_n: f64) -> Vec<f64> {
    (0..10).map(|i| 0.5 * alpha_n + 0.5 * alpha_n * i as f64 / 9.0).collect()
}

pub fn check_scale_set(c: &Case) -> Result<(), TestCaseError> {
    let inst = random_instance(c.seed, c.n, true);
    let ds = inst.dataset();
    let sm = smoother(c.h);
    // quantiles are equivariant
    if let Ok(local) = LocalDistribution::new(&ds, &inst.ws, &sm, c.t) {
        let scaled = ds.map_outcomes(|y| y * c.c).unwrap();
        let ls = LocalDistribution::new(&scaled, &inst.ws, &sm, c.t).unwrap();
        let (q, qs) = (local.quantile(c.alpha).unwrap(), ls.quantile(c.alpha).unwrap());
        if qs != q * c.c {
            return Err(err(format!("q(cY) = {qs} vs c·q(Y) = {}", q * c.c)));
        }
    }
    let (Some(a), Some(b)) = (fits(&inst, c, 1.0), fits(&inst, c, c.c)) else {
        return Ok(());
    };
    let tol = 1e-10;
    for (x, y, what) in [
        (a.1.gamma_hat, b.1.gamma_hat, "γ̂(t1)"),
        (a.2.gamma_hat, b.2.gamma_hat, "γ̂(t2)"),
        (a.3, b.3, "σ̂²(t1)"),
        (a.4, b.4, "σ̂²(t2)"),
    ] {
        if !close(x, y, tol) {
            return Err(err(format!("{what} not scale invariant: {x} vs {y}")));
        }
    }
    let alpha = 0.999;
    let pairs = [
        (eqte(&a.1, &a.2, alpha), eqte(&b.1, &b.2, alpha)),
        (eate(&a.1, &a.2, alpha), eate(&b.1, &b.2, alpha)),
    ];
    for (x, y) in pairs {
        if let (Ok(x), Ok(y)) = (x, y) {
            if !close(x, y, tol) {
                return Err(err(format!("effect not scale invariant: {x} vs {y}")));
            }
        }
    }
    let spec = BandSpec::new(alpha, 0.95);
    let rho = band_rho(alpha);
    let arms = |f: &(Dataset, tail::TailFit, tail::TailFit, f64, f64)| {
        (BandArm { fit: f.1.clone(), var_gamma: f.3 }, BandArm { fit: f.2.clone(), var_gamma: f.4 })
    };
    let (a1, a2) = arms(&a);
    let (b1, b2) = arms(&b);
    let ba = eqte_band(&a1, &a2, &spec, &rho).unwrap();
    let bb = eqte_band(&b1, &b2, &spec, &rho).unwrap();
    for (p, q) in ba.points.iter().zip(&bb.points) {
        if !close(p.center, q.center, tol) || !close(p.lower.unwrap(), q.lower.unwrap(), tol) || !close(p.upper.unwrap(), q.upper.unwrap(), tol) {
            return Err(err(format!("band not scale invariant at ϱ = {}", p.rho)));
        }
    }
    Ok(())
}

pub fn check_select_k_invariant(seed: u64, n: usize, pow2: i32) -> Result<(), TestCaseError> {
    let inst = random_instance(seed, n, true);
    let ds = inst.dataset();
    let sm = smoother(0.35);
    let cfg = TuningConfig { t_grid: vec![0.3, 0.5, 0.7], ..TuningConfig::default() };
    let c = 2f64.powi(pow2);
    let a = select_k(&ds, &inst.ws, &sm, &cfg, ExecMode::Sequential);
    let b = select_k(&ds.map_outcomes(|y| y * c).unwrap(), &inst.ws, &sm, &cfg, ExecMode::Sequential);
    match (a, b) {
        (Ok(a), Ok(b)) => {
            if a.k != b.k || a.distances != b.distances {
                return Err(err(format!("select_k changed under scaling: {} vs {}", a.k, b.k)));
            }
            let (lo, hi) = tuning::k_candidate_range(n, 8);
            if a.k < lo || a.k > hi {
                return Err(err(format!("k = {} outside [{lo}, {hi}]", a.k)));
            }
            if a.distances.iter().flatten().any(|&d| d < 0.0) {
                return Err(err("negative D_ℓ".into()));
            }
            Ok(())
        }
        (Err(a), Err(b)) if a == b => Ok(()),
        (a, b) => Err(err(format!("feasibility changed under scaling: {:?} vs {:?}", a.is_ok(), b.is_ok()))),
    }
}

pub fn check_band_shape(c: &Case) -> Result<(), TestCaseError> {
    let inst = random_instance(c.seed, c.n, true);
    let Some((_, f1, f2, v1, v2)) = fits(&inst, c, 1.0) else {
        return Ok(());
    };
    let a1 = BandArm { fit: f1, var_gamma: v1 };
    let a2 = BandArm { fit: f2, var_gamma: v2 };
    let rho = band_rho(0.999);
    let narrow = BandSpec::new(0.999, 0.95);
    let wide = BandSpec::new(0.999, 0.99);
    let checks = [
        (eqte_band(&a1, &a2, &narrow, &rho), eqte_band(&a1, &a2, &wide, &rho)),
        (eate_band(&a1, &a2, &narrow, &rho, true), eate_band(&a1, &a2, &wide, &rho, true)),
    ];
    for (n95, n99) in checks {
        let (Ok(n95), Ok(n99)) = (n95, n99) else {
            continue;
        };
        for (p, q) in n95.points.iter().zip(&n99.points) {
            let (Some(lo), Some(hi)) = (p.lower, p.upper) else {
                continue;
            };
            if !(lo > 0.0 && lo <= p.center && p.center <= hi) {
                return Err(err(format!("band disordered at ϱ = {}", p.rho)));
            }
            if !close(hi / p.center, p.center / lo, 1e-12) {
                return Err(err(format!("band not multiplicative at ϱ = {}", p.rho)));
            }
            if !(q.lower.unwrap() <= lo && hi <= q.upper.unwrap()) {
                return Err(err(format!("0.99 band does not nest the 0.95 band at ϱ = {}", p.rho)));
            }
        }
    }
    if eqte(&a1.fit, &a2.fit, 0.999).unwrap() * eqte(&a2.fit, &a1.fit, 0.999).unwrap() != 1.0 {
        // reciprocal ratios can differ from 1 by rounding; the product of a/b and b/a is exactly 1 only up to one ulp
        let p = eqte(&a1.fit, &a2.fit, 0.999).unwrap() * eqte(&a2.fit, &a1.fit, 0.999).unwrap();
        if !close(p, 1.0, 4.0 * f64::EPSILON) {
            return Err(err(format!("eqte·eqte⁻¹ = {p}")));
        }
    }
    Ok(())
}

pub fn check_weight_mean_one(seed: u64, n: usize) -> Result<(), TestCaseError> {
    let mut rng = SeededRng::new(seed, 5);
    let obs: Vec<Observation> = (0..n)
        .map(|_| {
            let x = rng.uniform();
            let t = (0.3 * x + 0.7 * rng.uniform()).clamp(0.0, 1.0);
            Observation::new(t, vec![x, rng.uniform()], rng.uniform())
        })
        .collect();
    let ds = Dataset::new(obs).unwrap();
    let model = WeightModel::kernel_ratio(&ds).unwrap();
    let w = estimate_weights_kernel_ratio(&ds, &model, &KernelSpec::default(), ExecMode::Sequential).map_err(|e| err(e.to_string()))?;
    let mean = w.iter().sum::<f64>() / n as f64;
    if (mean - 1.0).abs() > 1e-12 {
        return Err(err(format!("weight mean {mean}")));
    }
    let ratio = w.iter().copied().fold(f64::NEG_INFINITY, f64::max) / w.iter().copied().fold(f64::INFINITY, f64::min);
    if ratio > model.eta_hi / model.eta_lo * (1.0 + 1e-12) {
        return Err(err(format!("weights escape the clip bounds: spread {ratio}")));
    }
    Ok(())
}

pub fn check_determinism(seed: u64) -> Result<(), TestCaseError> {
    let spec = sim::DgpSpec::Dgp1;
    let a = spec.sample(60, &mut SeededRng::new(seed, 3));
    let b = spec.sample(60, &mut SeededRng::new(seed, 3));
    if a != b {
        return Err(err("same seed produced different data".into()));
    }
    let mut cfg = sim::ExperimentConfig::new(spec, 300, 0.99, 2, seed);
    cfg.t_grid = vec![0.3, 0.6];
    cfg.mode = ExecMode::Parallel;
    let r1 = sim::simulate(&cfg).map_err(|e| err(e.to_string()))?;
    cfg.mode = ExecMode::Sequential;
    let r2 = sim::simulate(&cfg).map_err(|e| err(e.to_string()))?;
    if r1 != r2 {
        return Err(err("parallel and sequential simulation differ".into()));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// runner used by the acceptance gate

pub struct SuiteReport {
    pub name: &'static str,
    pub cases: u32,
    pub outcome: Result<(), String>,
}

pub fn run_suite<S: Strategy>(name: &'static str, cases: u32, strategy: S, check: impl Fn(S::Value) -> Result<(), TestCaseError>) -> SuiteReport
where
    S::Value: std::fmt::Debug,
{
    let mut runner = TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() });
    let outcome = runner.run(&strategy, check).map_err(|e| e.to_string());
    SuiteReport { name, cases, outcome }
}

pub const SUITE_COUNT: usize = 7;

pub fn suite(idx: usize, cases: u32) -> SuiteReport {
    match idx {
        0 => run_suite("monotone survival", cases, case_strategy(), |c| check_monotone_survival(&c)),
        1 => run_suite("generalized inverse", cases, case_strategy(), |c| check_generalized_inverse(&c)),
        2 => run_suite("scale equivariance/invariance", cases, case_strategy(), |c| check_scale_set(&c)),
        3 => run_suite("select_k scale invariance", cases, (any::<u64>(), 60usize..200, -4i32..10), |(s, n, p)| {
            check_select_k_invariant(s, n, p)
        }),
        4 => run_suite("band multiplicativity and nesting", cases, case_strategy(), |c| check_band_shape(&c)),
        5 => run_suite("weight mean one", cases, (any::<u64>(), 30usize..150), |(s, n)| check_weight_mean_one(s, n)),
        _ => run_suite("determinism", cases, any::<u64>(), check_determinism),
    }
}

// ---------------------------------------------------------------------------
// deterministic gates

fn pick<T: Copy>(rng: &mut SeededRng, xs: &[T]) -> T {
    xs[(rng.uniform() * xs.len() as f64) as usize % xs.len()]
}

/// Library survival, `Ω̂ᶠ` and `Ω̂^Q` against the brute-force sums on
/// `instances` random small problems. Returns the number of comparisons.
pub fn oracle_equivalence(instances: u64, tol: f64) -> Result<usize, String> {
    use xtreat::inference::{omega_f_hat, omega_q_hat};
    use xtreat::survival::survival_at;
    let mut compared = 0;
    for seed in 0..instances {
        let mut rng = SeededRng::new(seed, 1234);
        let n = 10 + (rng.uniform() * 41.0) as usize;
        let inst = random_instance(seed, n.min(50), true);
        let ds = inst.dataset();
        let h = 0.25 + 0.35 * rng.uniform();
        let t = rng.uniform();
        let sm = smoother(h);
        if inst.ts.iter().all(|&s| kh(s, t, h) == 0.0) {
            if LocalDistribution::new(&ds, &inst.ws, &sm, t).is_ok() {
                return Err(format!("seed {seed}: empty window not reported"));
            }
            continue;
        }
        let mut grid = inst.ys.clone();
        grid.extend(inst.ys.iter().map(|y| y * 0.999));
        grid.push(0.0);
        for &y in &grid {
            let (lib, brute) = (survival_at(&ds, &inst.ws, &sm, t, y).map_err(|e| e.to_string())?, brute_survival(&inst, t, h, y));
            if !close(lib, brute, tol) {
                return Err(format!("seed {seed}: survival({y}) {lib} vs {brute}"));
            }
            compared += 1;
        }
        let mut sorted = inst.ys.clone();
        sorted.sort_by(f64::total_cmp);
        let y_n = sorted[n / 2];
        for _ in 0..4 {
            let (v1, v2) = (pick(&mut rng, &[0.5, 0.8, 1.0, 1.3]), pick(&mut rng, &[0.5, 0.8, 1.0, 1.3]));
            let beyond = brute_survival(&inst, t, h, v1 * y_n) == 0.0 || brute_survival(&inst, t, h, v2 * y_n) == 0.0;
            match omega_f_hat(&ds, &inst.ws, &sm, t, y_n, v1, v2) {
                Ok(lib) => {
                    let brute = brute_omega_f(&inst, t, h, y_n, v1, v2);
                    if beyond || !close(lib, brute, tol) {
                        return Err(format!("seed {seed}: Ω̂ᶠ({v1},{v2}) {lib} vs {brute}"));
                    }
                    compared += 1;
                }
                Err(e) if !beyond => return Err(format!("seed {seed}: Ω̂ᶠ failed: {e}")),
                Err(_) => {}
            }
        }
        for _ in 0..4 {
            let k = 2 + (rng.uniform() * (n / 2) as f64) as usize;
            let alpha = 1.0 - k as f64 / n as f64;
            let gamma = 0.1 + 0.5 * rng.uniform();
            let (v1, v2) = (pick(&mut rng, &[1.0, 0.5, 0.25]), pick(&mut rng, &[1.0, 0.5, 0.25]));
            let lib = omega_q_hat(&ds, &inst.ws, &sm, t, alpha, gamma, v1, v2).map_err(|e| format!("seed {seed}: Ω̂^Q failed: {e}"))?;
            let brute = brute_omega_q(&inst, t, h, alpha, gamma, v1, v2);
            if !close(lib, brute, tol) {
                return Err(format!("seed {seed}: Ω̂^Q({v1},{v2}) at α={alpha} {lib} vs {brute}"));
            }
            compared += 1;
        }
    }
    Ok(compared)
}

/// Hill and Pickands on the exact Pareto quantile `(1-α)^{-γ}`.
pub fn pareto_identity(tol: f64) -> Result<(), String> {
    use xtreat::tail::{hill_with, pickands_with};
    for gamma in [0.2, 0.25, 0.3] {
        let q = |a: f64| Ok((1.0 - a).powf(-gamma));
        for (n, k) in [(1000, 50), (2000, 73), (16265, 400)] {
            let hill = hill_with(n, k, &HillWeights::new(8).unwrap(), q).map_err(|e| e.to_string())?;
            let pick = pickands_with(n, k, q).map_err(|e| e.to_string())?;
            if (hill - gamma).abs() > tol || (pick - gamma).abs() > tol {
                return Err(format!("γ = {gamma}, N = {n}: Hill {hill}, Pickands {pick}"));
            }
        }
    }
    Ok(())
}

/// `q̂ᴱ` at the anchor `1 - k/N` must return the intermediate quantile bit for bit.
pub fn anchor_identity(fits: u64) -> Result<(), String> {
    let mut done = 0;
    let mut seed = 0;
    while done < fits {
        let mut rng = SeededRng::new(seed, 77);
        seed += 1;
        let n = 100 + (rng.uniform() * 400.0) as usize;
        let inst = random_instance(seed, n, true);
        let ds = inst.dataset();
        let sm = smoother(0.2 + 0.3 * rng.uniform());
        let k = 8 + (rng.uniform() * (n / 5) as f64) as usize;
        let method = if seed % 2 == 0 { GammaMethod::Pickands } else { GammaMethod::Hill(HillWeights::new(8).unwrap()) };
        let Ok(fit) = fit_tail(&ds, &inst.ws, &sm, rng.uniform(), k, &method) else {
            continue;
        };
        let q = tail::extreme_quantile(&fit, fit.anchor_level()).map_err(|e| e.to_string())?;
        if q.to_bits() != fit.q_intermediate.to_bits() {
            return Err(format!("fit {done}: {q:e} vs {:e}", fit.q_intermediate));
        }
        done += 1;
    }
    Ok(())
}
