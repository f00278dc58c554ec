//! Simulation designs with analytic truths, and the bias and coverage
//! experiments built on them.
//!
//! Every design shares the treatment model `T = 0.04 X + 0.96 ε` with
//! `X, ε ~ U(0, 1)` independent, so `T ∈ [0, 1]`. Outcomes are drawn by
//! inverse transform from the design's conditional survival function with
//! tail index `γ(t) = 1/4 + sin(2πt)/20`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::inference::{eate_band, eqte_band, gamma_variance, BandArm, BandSpec, PickandsPrefactor, DEFAULT_DELTA0};
use crate::numeric::{bisect, integrate, median_iqr};
use crate::par::{map_range, ExecMode};
use crate::survival::LocalDistribution;
use crate::tail::{extreme_quantile, fit_from_local, GammaMethod};
use crate::tuning::{bandwidth_candidates, select_k, TuningConfig};
use crate::weights::{estimate_weights_kernel_ratio, WeightModel, WeightSource};
use crate::{Boundary, Dataset, Error, KernelSpec, Observation, Result, SeededRng, Smoother};

/// `γ(t) = 1/4 + sin(2πt)/20`.
pub fn gamma_fn(t: f64) -> f64 {
    0.25 + (2.0 * std::f64::consts::PI * t).sin() / 20.0
}

pub type TFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `F̄(y | t) = y^{-1/γ(t)} (c₀(t) + c₁(t) y^{-β(t)})` above the point where
/// it reaches 1.
#[derive(Clone)]
pub struct HallClass {
    pub gamma: TFn,
    pub c0: TFn,
    pub c1: TFn,
    pub beta: TFn,
}

impl fmt::Debug for HallClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "HallClass {{ γ(0.5) = {}, c₀(0.5) = {}, c₁(0.5) = {}, β(0.5) = {} }}",
            (self.gamma)(0.5),
            (self.c0)(0.5),
            (self.c1)(0.5),
            (self.beta)(0.5)
        )
    }
}

const CHECK_GRID: usize = 101;

impl HallClass {
    /// Validates positivity of `γ, c₀, β` and monotonicity of the survival
    /// function on a treatment grid.
    pub fn new(gamma: TFn, c0: TFn, c1: TFn, beta: TFn) -> Result<Self> {
        let spec = Self { gamma, c0, c1, beta };
        for i in 0..CHECK_GRID {
            let t = i as f64 / (CHECK_GRID - 1) as f64;
            let (g, c0, c1, b) = spec.params(t);
            if !(g > 0.0 && c0 > 0.0 && b > 0.0 && c1.is_finite()) {
                return Err(Error::InvalidInput(format!("Hall parameters invalid at t = {t}")));
            }
            let y0 = spec.lower_end(t)?;
            // the derivative is negative iff c₀/γ + c₁(1/γ + β) y^{-β} > 0; y^{-β} is largest at y₀
            if !(c0 / g + c1 * (1.0 / g + b) * y0.powf(-b) > 0.0) {
                return Err(Error::NonMonotoneSurvival(format!("at t = {t}")));
            }
        }
        Ok(spec)
    }

    /// Exact Pareto with tail index `γ(t)` from [`gamma_fn`].
    pub fn pareto() -> Self {
        Self::new(Arc::new(gamma_fn), Arc::new(|_| 1.0), Arc::new(|_| 0.0), Arc::new(|_| 1.0)).unwrap()
    }

    fn params(&self, t: f64) -> (f64, f64, f64, f64) {
        ((self.gamma)(t), (self.c0)(t), (self.c1)(t), (self.beta)(t))
    }

    pub fn survival(&self, t: f64, y: f64) -> f64 {
        if !(y > 0.0) {
            return 1.0;
        }
        let (g, c0, c1, b) = self.params(t);
        (y.powf(-1.0 / g) * (c0 + c1 * y.powf(-b))).min(1.0)
    }

    fn raw_survival(&self, t: f64, y: f64) -> f64 {
        let (g, c0, c1, b) = self.params(t);
        y.powf(-1.0 / g) * (c0 + c1 * y.powf(-b))
    }

    /// The lower end of the support, where the survival function reaches 1.
    fn lower_end(&self, t: f64) -> Result<f64> {
        let mut hi = 1.0;
        while self.raw_survival(t, hi) >= 1.0 {
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(Error::NonMonotoneSurvival(format!("no tail at t = {t}")));
            }
        }
        let mut lo = hi;
        while self.raw_survival(t, lo) < 1.0 {
            lo /= 2.0;
            if lo < 1e-300 {
                return Err(Error::NonMonotoneSurvival(format!("survival never reaches 1 at t = {t}")));
            }
        }
        Ok(bisect(|y| self.raw_survival(t, y) - 1.0, lo, hi, 1e-15))
    }

    /// `F̄⁻¹(p | t)` for `p ∈ (0, 1]`.
    pub fn inverse_survival(&self, t: f64, p: f64) -> f64 {
        let lo = self.lower_end(t).expect("validated at construction");
        if p >= 1.0 {
            return lo;
        }
        let mut hi = lo * 2.0;
        while self.raw_survival(t, hi) > p {
            hi *= 2.0;
        }
        bisect(|y| self.raw_survival(t, y) - p, lo, hi, 1e-15)
    }
}

#[derive(Debug, Clone)]
pub enum DgpSpec {
    /// `Y = ((0.9 + 0.2x)/U)^{γ(t)}`.
    Dgp1,
    /// `Y = (1/U - 1 + 0.2x)^{γ(t)}`.
    Dgp2,
    HallClass(HallClass),
}

impl fmt::Display for DgpSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Dgp1 => "dgp1",
            Self::Dgp2 => "dgp2",
            Self::HallClass(_) => "hall",
        })
    }
}

impl std::str::FromStr for DgpSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dgp1" | "1" => Ok(Self::Dgp1),
            "dgp2" | "2" => Ok(Self::Dgp2),
            "hall" | "pareto" => Ok(Self::HallClass(HallClass::pareto())),
            other => Err(Error::InvalidInput(format!("unknown design `{other}`"))),
        }
    }
}

/// DGP2 survival in `s = y^{1/γ}`, integrated over `X ~ U(0, 1)`.
fn dgp2_survival_s(s: f64) -> f64 {
    if s >= 0.2 {
        5.0 * (0.2 / (0.8 + s)).ln_1p()
    } else if s > 0.0 {
        1.0 - 5.0 * s + 5.0 * s.ln_1p()
    } else {
        1.0
    }
}

/// DGP1 survival in `s = y^{1/γ}`, integrated over `X ~ U(0, 1)`.
fn dgp1_survival_s(s: f64) -> f64 {
    if s >= 1.1 {
        1.0 / s
    } else if s > 0.9 {
        let a = 5.0 * (s - 0.9);
        1.0 - a + (0.9 * a + 0.1 * a * a) / s
    } else {
        1.0
    }
}

/// Solves a decreasing survival function in `s` for level `p`.
fn invert_s(survival: impl Fn(f64) -> f64, p: f64, lo: f64) -> f64 {
    let mut hi = lo.max(1.0);
    while survival(hi) > p {
        hi *= 2.0;
    }
    bisect(|s| survival(s) - p, lo, hi, 1e-15)
}

impl DgpSpec {
    pub fn gamma(&self, t: f64) -> f64 {
        match self {
            Self::Dgp1 | Self::Dgp2 => gamma_fn(t),
            Self::HallClass(h) => (h.gamma)(t),
        }
    }

    /// Outcome from a uniform draw `u ∈ (0, 1]` at `(t, x)`.
    pub fn conditional_draw(&self, t: f64, x: f64, u: f64) -> f64 {
        let g = self.gamma(t);
        match self {
            Self::Dgp1 => ((0.9 + 0.2 * x) / u).powf(g),
            Self::Dgp2 => (1.0 / u - 1.0 + 0.2 * x).powf(g),
            Self::HallClass(h) => h.inverse_survival(t, u),
        }
    }

    /// `P(Y(t) > y | X = x)`.
    pub fn conditional_survival(&self, t: f64, x: f64, y: f64) -> f64 {
        if !(y > 0.0) {
            return 1.0;
        }
        let s = y.powf(1.0 / self.gamma(t));
        match self {
            Self::Dgp1 => ((0.9 + 0.2 * x) / s).min(1.0),
            Self::Dgp2 => (1.0 / (1.0 + s - 0.2 * x)).min(1.0),
            Self::HallClass(h) => h.survival(t, y),
        }
    }

    /// `P(Y(t) > y)`, with `X` integrated out.
    pub fn survival(&self, t: f64, y: f64) -> f64 {
        if !(y > 0.0) {
            return 1.0;
        }
        let s = y.powf(1.0 / self.gamma(t));
        match self {
            Self::Dgp1 => dgp1_survival_s(s),
            Self::Dgp2 => dgp2_survival_s(s),
            Self::HallClass(h) => h.survival(t, y),
        }
    }

    /// `q_t(1 - p)` for exceedance probability `p ∈ (0, 1)`.
    fn quantile_at_exceedance(&self, t: f64, p: f64) -> f64 {
        let g = self.gamma(t);
        match self {
            Self::Dgp1 if p <= 1.0 / 1.1 => p.powf(-g),
            Self::Dgp1 => invert_s(dgp1_survival_s, p, 0.9).powf(g),
            Self::Dgp2 => invert_s(dgp2_survival_s, p, 0.0).powf(g),
            Self::HallClass(h) => h.inverse_survival(t, p),
        }
    }

    /// `q_t(α)`.
    pub fn oracle_quantile(&self, t: f64, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::LevelOutOfRange(alpha));
        }
        Ok(self.quantile_at_exceedance(t, 1.0 - alpha))
    }

    /// `TM_t(α) = E[Y(t) | Y(t) > q_t(α)] = (1-α)⁻¹ ∫_α^1 q_t(u) du`.
    pub fn oracle_tail_mean(&self, t: f64, alpha: f64) -> Result<f64> {
        let g = self.gamma(t);
        if !(g < 1.0) {
            return Err(Error::TailMeanUndefined(g));
        }
        let q = self.oracle_quantile(t, alpha)?;
        let p = 1.0 - alpha;
        if matches!(self, Self::Dgp1) && p <= 1.0 / 1.1 {
            return Ok(q / (1.0 - g));
        }
        // With e = p·s^κ, κ = 1/(1-γ), the integrand q(1 - e)·de is bounded
        // on [0, 1] because q(1 - e) grows like e^{-γ}.
        let kappa = 1.0 / (1.0 - g);
        let f = |s: f64| {
            if s <= 0.0 {
                return 0.0;
            }
            let e = p * s.powf(kappa);
            self.quantile_at_exceedance(t, e) * p * kappa * s.powf(kappa - 1.0)
        };
        Ok(integrate(f, 0.0, 1.0, 1e-11 * q * p) / p)
    }

    pub fn sample(&self, n: usize, rng: &mut SeededRng) -> Dataset {
        let obs = (0..n)
            .map(|_| {
                let x = rng.uniform();
                let e = rng.uniform();
                let t = 0.04 * x + 0.96 * e;
                let y = self.conditional_draw(t, x, rng.uniform_open0());
                Observation::new(t, vec![x], y)
            })
            .collect();
        Dataset::new(obs).expect("simulated data are finite")
    }
}

pub fn dgp_sample(spec: &DgpSpec, n: usize, rng: &mut SeededRng) -> Dataset {
    spec.sample(n, rng)
}

pub fn hall_class_sample(spec: &HallClass, n: usize, rng: &mut SeededRng) -> Dataset {
    DgpSpec::HallClass(spec.clone()).sample(n, rng)
}

/// `π₀(t, x) = f_T(t) / f_{T|X}(t|x)` for the design. Both densities carry
/// the factor `1/0.96`, leaving the length of `{x' : T can equal t}`.
pub fn oracle_weight(t: f64, x: f64) -> Result<f64> {
    const TOL: f64 = 1e-12;
    if !(t >= 0.04 * x - TOL && t <= 0.04 * x + 0.96 + TOL) {
        return Err(Error::OutsideSupport { t, x });
    }
    let lo = ((t - 0.96) / 0.04).max(0.0);
    let hi = (t / 0.04).min(1.0);
    Ok(hi - lo)
}

/// Marginal treatment density of the design.
pub fn oracle_f_t(t: f64) -> f64 {
    if !(0.0..=1.0).contains(&t) {
        return 0.0;
    }
    (((t / 0.04).min(1.0)) - ((t - 0.96) / 0.04).max(0.0)) / 0.96
}

/// [`oracle_weight`] at every observation, using the first covariate.
pub fn oracle_weights(ds: &Dataset) -> Result<Vec<f64>> {
    if ds.r() < 1 {
        return Err(Error::InvalidInput("oracle weights need the design covariate".into()));
    }
    ds.observations().iter().map(|o| oracle_weight(o.t, o.x[0])).collect()
}

/// Shared estimation settings of the experiments.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub spec: DgpSpec,
    pub n: usize,
    pub alpha: f64,
    pub reps: usize,
    pub t_grid: Vec<f64>,
    pub seed: u64,
    pub kernel: KernelSpec,
    pub boundary: Boundary,
    pub method: GammaMethod,
    pub weights: WeightSource,
    /// Fixed bandwidth; defaults to the candidate-interval midpoint.
    pub h: Option<f64>,
    /// Fixed tail sample size; defaults to the `D_ℓ` rule.
    pub k: Option<usize>,
    pub mode: ExecMode,
}

impl ExperimentConfig {
    pub fn new(spec: DgpSpec, n: usize, alpha: f64, reps: usize, seed: u64) -> Self {
        Self {
            spec,
            n,
            alpha,
            reps,
            t_grid: crate::tuning::default_t_grid(),
            seed,
            kernel: KernelSpec::default(),
            boundary: Boundary::Reflect,
            method: GammaMethod::default(),
            weights: WeightSource::Oracle,
            h: None,
            k: None,
            mode: ExecMode::Parallel,
        }
    }
}

/// One simulated dataset together with its tuned smoother and weights.
struct Prepared {
    ds: Dataset,
    weights: Vec<f64>,
    smoother: Smoother,
    k: usize,
}

fn prepare(cfg: &ExperimentConfig, rep: usize, extra_t: &[f64]) -> Result<Prepared> {
    let mut rng = SeededRng::new(cfg.seed, rep as u64);
    let ds = cfg.spec.sample(cfg.n, &mut rng);
    let weights = match cfg.weights {
        WeightSource::Oracle => oracle_weights(&ds)?,
        WeightSource::KernelRatio => {
            let model = WeightModel::kernel_ratio(&ds)?;
            estimate_weights_kernel_ratio(&ds, &model, &cfg.kernel, crate::ExecMode::Sequential)?
        }
        WeightSource::UserSupplied => vec![1.0; ds.n()],
    };
    let h = match cfg.h {
        Some(h) => h,
        None => bandwidth_candidates(&ds)?.midpoint(),
    };
    let smoother = Smoother::new(cfg.kernel, h)?.with_boundary(cfg.boundary);
    let k = match cfg.k {
        Some(k) => k,
        None => {
            let j = match &cfg.method {
                GammaMethod::Hill(w) => w.j(),
                GammaMethod::Pickands => crate::tail::DEFAULT_J,
            };
            let mut t_grid = cfg.t_grid.clone();
            t_grid.extend_from_slice(extra_t);
            let tc = TuningConfig { t_grid, j, ..TuningConfig::default() };
            select_k(&ds, &weights, &smoother, &tc, ExecMode::Sequential)?.k
        }
    };
    Ok(Prepared { ds, weights, smoother, k })
}

/// Estimated-over-true ratios per treatment level, one entry per successful
/// replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub t_grid: Vec<f64>,
    pub alpha: f64,
    /// `q̂ᴱ_t(α) / q_t(α)`, indexed `[t][rep]`.
    pub extreme_ratio: Vec<Vec<f64>>,
    /// Inversion without extrapolation, `q̂_t(α) / q_t(α)`.
    pub naive_ratio: Vec<Vec<f64>>,
    pub gamma_hat: Vec<Vec<f64>>,
    pub k: Vec<usize>,
    pub h: Vec<f64>,
    pub failures: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
}

pub fn box_stats(values: &[f64]) -> BoxStats {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let (median, iqr) = median_iqr(&v);
    BoxStats {
        median,
        q1: crate::numeric::sorted_quantile(&v, 0.25),
        q3: crate::numeric::sorted_quantile(&v, 0.75),
        iqr,
    }
}

struct RepEstimates {
    extreme: Vec<f64>,
    naive: Vec<f64>,
    gamma: Vec<f64>,
    k: usize,
    h: f64,
}

/// Repeated estimation of `q_t(α)` by extrapolation and by plain inversion.
pub fn simulate(cfg: &ExperimentConfig) -> Result<SimulationResult> {
    let truth = cfg.t_grid.iter().map(|&t| cfg.spec.oracle_quantile(t, cfg.alpha)).collect::<Result<Vec<_>>>()?;
    let reps = map_range(cfg.reps, cfg.mode, |rep| -> Result<RepEstimates> {
        let p = prepare(cfg, rep, &[])?;
        let mut out = RepEstimates { extreme: vec![], naive: vec![], gamma: vec![], k: p.k, h: p.smoother.h };
        for (&t, &q) in cfg.t_grid.iter().zip(&truth) {
            let local = LocalDistribution::new(&p.ds, &p.weights, &p.smoother, t)?;
            let fit = fit_from_local(&p.ds, &p.smoother, &local, p.k, &cfg.method)?;
            out.extreme.push(extreme_quantile(&fit, cfg.alpha)? / q);
            out.naive.push(local.quantile(cfg.alpha)? / q);
            out.gamma.push(fit.gamma_hat);
        }
        Ok(out)
    });
    let m = cfg.t_grid.len();
    let mut res = SimulationResult {
        t_grid: cfg.t_grid.clone(),
        alpha: cfg.alpha,
        extreme_ratio: vec![vec![]; m],
        naive_ratio: vec![vec![]; m],
        gamma_hat: vec![vec![]; m],
        k: vec![],
        h: vec![],
        failures: 0,
    };
    for r in reps {
        match r {
            Ok(r) => {
                for i in 0..m {
                    res.extreme_ratio[i].push(r.extreme[i]);
                    res.naive_ratio[i].push(r.naive[i]);
                    res.gamma_hat[i].push(r.gamma[i]);
                }
                res.k.push(r.k);
                res.h.push(r.h);
            }
            Err(e) => {
                log::debug!("replication failed: {e}");
                res.failures += 1;
            }
        }
    }
    Ok(res)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub hits: usize,
    pub total: usize,
    pub rate: f64,
    /// Binomial standard error `√(r(1-r)/total)`.
    pub se: f64,
}

impl Rate {
    pub fn new(hits: usize, total: usize) -> Self {
        let rate = if total == 0 { f64::NAN } else { hits as f64 / total as f64 };
        Self { hits, total, rate, se: (rate * (1.0 - rate) / total as f64).sqrt() }
    }
}

#[derive(Debug, Clone)]
pub struct CoverageConfig {
    pub experiment: ExperimentConfig,
    pub confidence: f64,
    /// Baseline treatment level `t₂` of `EQTE_{t₂,t}`.
    pub baseline_t: f64,
    pub delta0: f64,
    pub prefactor: PickandsPrefactor,
    /// Replaces every estimated tail-index variance.
    pub variance_override: Option<f64>,
}

impl CoverageConfig {
    pub fn new(experiment: ExperimentConfig, confidence: f64) -> Self {
        Self {
            experiment,
            confidence,
            baseline_t: 0.0,
            delta0: DEFAULT_DELTA0,
            prefactor: PickandsPrefactor::PowerMinusOne,
            variance_override: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub t_grid: Vec<f64>,
    pub baseline_t: f64,
    pub alpha: f64,
    pub eqte: Vec<Rate>,
    pub eate_adjusted: Vec<Rate>,
    pub eate_unadjusted: Vec<Rate>,
    pub failures: usize,
}

struct RepHits {
    eqte: Vec<bool>,
    eate_adj: Vec<bool>,
    eate_raw: Vec<bool>,
}

/// Fraction of replications whose bands at `ϱ = α` cover the true
/// `EQTE_{t₂,t}(α)` and `EATE_{t₂,t}(α)`, per grid point.
pub fn coverage_experiment(cfg: &CoverageConfig) -> Result<CoverageResult> {
    let ex = &cfg.experiment;
    let alpha = ex.alpha;
    let spec = &ex.spec;
    let q0 = spec.oracle_quantile(cfg.baseline_t, alpha)?;
    let tm0 = spec.oracle_tail_mean(cfg.baseline_t, alpha)?;
    let truth = ex
        .t_grid
        .iter()
        .map(|&t| Ok((q0 / spec.oracle_quantile(t, alpha)?, tm0 / spec.oracle_tail_mean(t, alpha)?)))
        .collect::<Result<Vec<_>>>()?;
    let band_spec = BandSpec { alpha_n: alpha, delta0: cfg.delta0, confidence: cfg.confidence };
    let rho = [alpha];

    let reps = map_range(ex.reps, ex.mode, |rep| -> Result<RepHits> {
        let p = prepare(ex, rep, &[])?;
        let arm = |t: f64| -> Result<BandArm> {
            let local = LocalDistribution::new(&p.ds, &p.weights, &p.smoother, t)?;
            let fit = fit_from_local(&p.ds, &p.smoother, &local, p.k, &ex.method)?;
            let var_gamma = match cfg.variance_override {
                Some(v) => v,
                None => gamma_variance(&p.ds, &p.weights, &p.smoother, &fit, cfg.prefactor)?,
            };
            Ok(BandArm { fit, var_gamma })
        };
        let base = arm(cfg.baseline_t)?;
        let mut hits = RepHits { eqte: vec![], eate_adj: vec![], eate_raw: vec![] };
        for (&t, &(eq, ea)) in ex.t_grid.iter().zip(&truth) {
            let other = arm(t)?;
            let covers = |band: crate::inference::EffectBand, truth: f64| -> Result<bool> {
                band.contains(0, truth).ok_or_else(|| Error::InvalidInput("band undefined at ϱ = α".into()))
            };
            hits.eqte.push(covers(eqte_band(&base, &other, &band_spec, &rho)?, eq)?);
            hits.eate_adj.push(covers(eate_band(&base, &other, &band_spec, &rho, true)?, ea)?);
            hits.eate_raw.push(covers(eate_band(&base, &other, &band_spec, &rho, false)?, ea)?);
        }
        Ok(hits)
    });

    let m = ex.t_grid.len();
    let mut counts = vec![[0usize; 3]; m];
    let mut ok = 0;
    let mut failures = 0;
    for r in reps {
        match r {
            Ok(h) => {
                ok += 1;
                for (i, c) in counts.iter_mut().enumerate() {
                    c[0] += h.eqte[i] as usize;
                    c[1] += h.eate_adj[i] as usize;
                    c[2] += h.eate_raw[i] as usize;
                }
            }
            Err(e) => {
                log::debug!("replication failed: {e}");
                failures += 1;
            }
        }
    }
    Ok(CoverageResult {
        t_grid: ex.t_grid.clone(),
        baseline_t: cfg.baseline_t,
        alpha,
        eqte: counts.iter().map(|c| Rate::new(c[0], ok)).collect(),
        eate_adjusted: counts.iter().map(|c| Rate::new(c[1], ok)).collect(),
        eate_unadjusted: counts.iter().map(|c| Rate::new(c[2], ok)).collect(),
        failures,
    })
}
