use std::path::PathBuf;

use anyhow::{bail, ensure, Context, Result};
use xtreat::data::rescale_treatment;
use xtreat::diagnostics::{box_cox_search, exponential_qq, BoxCoxGrid};
use xtreat::inference::{eate_band, eqte_band, gamma_variance, BandArm, BandSpec, EffectBand, PickandsPrefactor};
use xtreat::sim::{box_stats, coverage_experiment, oracle_weights, simulate as run_simulation, CoverageConfig, DgpSpec, ExperimentConfig};
use xtreat::tail::{extreme_quantile, fit_tail, naive_extreme_quantile, tail_mean, GammaMethod, HillWeights, TailFit};
use xtreat::tuning::{bandwidth_candidates, default_t_grid, select_k, TuningConfig};
use xtreat::weights::{estimate_weights_kernel_ratio, load_weights, WeightModel, WeightSource};
use xtreat::{AffineMap, Dataset, ExecMode, KernelSpec, Smoother};

use crate::output::{Cell, Params, Sink, Table};
use crate::{CoverageArgs, DiagnoseArgs, EffectsArgs, EstimateArgs, EstimationArgs, GammaChoice, SampleArgs, SimArgs, SimulateArgs, WeightChoice};

fn method(choice: GammaChoice, j: usize) -> Result<GammaMethod> {
    Ok(match choice {
        GammaChoice::Hill => GammaMethod::Hill(HillWeights::new(j)?),
        GammaChoice::Pickands => GammaMethod::Pickands,
    })
}

fn check_alphas(alphas: &[f64]) -> Result<()> {
    ensure!(!alphas.is_empty(), "at least one --alpha is required");
    if let Some(a) = alphas.iter().find(|&&a| !(a > 0.0 && a < 1.0)) {
        bail!("alpha must lie in (0, 1), got {a}");
    }
    Ok(())
}

/// Input data on the unit treatment scale with weights, smoother and `k_N`.
struct Fitted {
    ds: Dataset,
    weights: Vec<f64>,
    smoother: Smoother,
    method: GammaMethod,
    k: usize,
    map: AffineMap,
    /// `(original, unit)` treatment levels.
    grid: Vec<(f64, f64)>,
    params: Params,
}

impl Fitted {
    fn fit(&self, t_unit: f64) -> xtreat::Result<TailFit> {
        fit_tail(&self.ds, &self.weights, &self.smoother, t_unit, self.k, &self.method)
    }

    fn arm(&self, t_unit: f64) -> xtreat::Result<BandArm> {
        let fit = self.fit(t_unit)?;
        let var_gamma = gamma_variance(&self.ds, &self.weights, &self.smoother, &fit, PickandsPrefactor::PowerMinusOne)?;
        Ok(BandArm { fit, var_gamma })
    }
}

fn prepare(command: &str, a: &EstimateArgs) -> Result<Fitted> {
    let est: &EstimationArgs = &a.est;
    check_alphas(&est.alpha)?;
    let raw = xtreat::io::read_dataset_path(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let choice = est.weights.unwrap_or(if raw.has_weights() { WeightChoice::Column } else { WeightChoice::Kernel });
    let kernel = KernelSpec::new(est.kernel);
    // the design oracle is defined on the original treatment scale
    let oracle_w = if choice == WeightChoice::Oracle { Some(oracle_weights(&raw)?) } else { None };
    let (ds, map) = if a.no_rescale { (raw, AffineMap::IDENTITY) } else { rescale_treatment(&raw)? };
    let weights = match choice {
        WeightChoice::Column => load_weights(&ds)?,
        WeightChoice::Oracle => oracle_w.unwrap(),
        WeightChoice::Kernel => {
            let model = WeightModel::kernel_ratio(&ds)?;
            estimate_weights_kernel_ratio(&ds, &model, &kernel, ExecMode::Parallel)?
        }
    };
    let grid: Vec<(f64, f64)> = match &est.t_grid {
        Some(ts) => ts.iter().map(|&t| (t, map.to_unit(t))).collect(),
        None => default_t_grid().into_iter().map(|u| (map.to_original(u), u)).collect(),
    };
    if let Some((t, _)) = grid.iter().find(|(_, u)| !(0.0..=1.0).contains(u)) {
        bail!("treatment level {t} lies outside the observed treatment range");
    }
    let h = match est.bandwidth {
        Some(h) => h,
        None => bandwidth_candidates(&ds)?.midpoint(),
    };
    let smoother = Smoother::new(kernel, h)?.with_boundary(est.boundary);
    let method = method(est.gamma_method, est.j)?;
    let k = match est.k {
        Some(k) => k,
        None => {
            let cfg = TuningConfig { t_grid: grid.iter().map(|g| g.1).collect(), j: est.j, ..TuningConfig::default() };
            select_k(&ds, &weights, &smoother, &cfg, ExecMode::Parallel)?.k
        }
    };
    let mut params = Params::default();
    params
        .set("command", command)
        .set("input", a.input.display())
        .set("n", ds.n())
        .set("covariates", ds.r())
        .set("h", h)
        .set("k_n", k)
        .set("J", est.j)
        .set("gamma_method", &method)
        .set("kernel", format!("{:?}", est.kernel).to_lowercase())
        .set("boundary", format!("{:?}", est.boundary).to_lowercase())
        .set("weights", format!("{choice:?}").to_lowercase())
        .set("treatment_offset", map.offset)
        .set("treatment_scale", map.scale)
        .set("seed", est.seed)
        .set("alpha", join(&est.alpha));
    Ok(Fitted { ds, weights, smoother, method, k, map, grid, params })
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

fn ok_or_warn<T>(r: xtreat::Result<T>, what: &str) -> Option<T> {
    r.map_err(|e| log::warn!("{what}: {e}")).ok()
}

pub fn estimate(a: &EstimateArgs) -> Result<Vec<PathBuf>> {
    let f = prepare("estimate", a)?;
    let mut cols = vec!["t", "t_unit", "alpha", "q_intermediate", "q_extreme", "q_naive", "gamma", "tail_mean", "f_t", "k_n", "h"];
    if a.oracle {
        cols.extend(["oracle_q", "oracle_tail_mean"]);
    }
    let mut table = Table::new("estimate", &cols);
    for &(t, u) in &f.grid {
        let fit = ok_or_warn(f.fit(u), &format!("t = {t}"));
        for &alpha in &a.est.alpha {
            let mut row: Vec<Cell> = vec![t.into(), u.into(), alpha.into()];
            match &fit {
                Some(fit) => {
                    row.push(fit.q_intermediate.into());
                    row.push(extreme_quantile(fit, alpha).ok().into());
                    row.push(naive_extreme_quantile(&f.ds, &f.weights, &f.smoother, u, alpha).ok().into());
                    row.push(fit.gamma_hat.into());
                    row.push(tail_mean(fit, alpha).ok().into());
                    row.push(fit.f_t_hat.into());
                }
                None => row.extend(std::iter::repeat_n(Cell::Missing, 6)),
            }
            row.push(f.k.into());
            row.push(f.smoother.h.into());
            if a.oracle {
                row.push(a.dgp.oracle_quantile(t, alpha).ok().into());
                row.push(a.dgp.oracle_tail_mean(t, alpha).ok().into());
            }
            table.push(row);
        }
    }
    let mut params = f.params.clone();
    if a.oracle {
        params.set("dgp", &a.dgp);
    }
    Sink::new(&a.out.output_dir, a.out.format)?.write(&table, &params)
}

fn rho_grid(alpha_n: f64, delta0: f64, m: usize) -> Vec<f64> {
    if m <= 1 {
        return vec![alpha_n];
    }
    let lo = delta0 * alpha_n;
    let mut g: Vec<f64> = (0..m).map(|i| lo + (alpha_n - lo) * i as f64 / (m - 1) as f64).collect();
    g[m - 1] = alpha_n;
    g
}

fn bounds(b: &Option<EffectBand>, i: usize) -> (Cell, Cell, Cell) {
    match b {
        Some(b) => {
            let p = &b.points[i];
            (p.center.into(), p.lower.into(), p.upper.into())
        }
        None => (Cell::Missing, Cell::Missing, Cell::Missing),
    }
}

fn oracle_ratio(spec: &DgpSpec, t1: f64, t2: f64, rho: f64, tail: bool) -> Option<f64> {
    if tail {
        Some(spec.oracle_tail_mean(t1, rho).ok()? / spec.oracle_tail_mean(t2, rho).ok()?)
    } else {
        Some(spec.oracle_quantile(t1, rho).ok()? / spec.oracle_quantile(t2, rho).ok()?)
    }
}

pub fn effects(a: &EffectsArgs) -> Result<Vec<PathBuf>> {
    let b = &a.base;
    let f = prepare("effects", b)?;
    ensure!(a.rho_points >= 1, "--rho-points must be positive");
    let base_t = a.baseline_t.unwrap_or(f.map.to_original(0.0));
    let base_u = f.map.to_unit(base_t);
    ensure!((0.0..=1.0).contains(&base_u), "baseline treatment {base_t} lies outside the observed range");
    let arm1 = f.arm(base_u).with_context(|| format!("fitting the baseline t = {base_t}"))?;

    let mut cols = vec![
        "t", "alpha_n", "rho", "eqte", "eqte_lower", "eqte_upper", "eate", "eate_lower", "eate_upper", "eate_unadj_lower",
        "eate_unadj_upper",
    ];
    if b.oracle {
        cols.extend(["oracle_eqte", "oracle_eate"]);
    }
    let mut table = Table::new("effects", &cols);
    let sink = Sink::new(&b.out.output_dir, b.out.format)?;
    let mut params = f.params.clone();
    params.set("baseline_t", base_t).set("confidence", a.confidence).set("delta0", xtreat::inference::DEFAULT_DELTA0);
    if b.oracle {
        params.set("dgp", &b.dgp);
    }
    let mut written = vec![];
    for &(t, u) in &f.grid {
        let Some(arm2) = ok_or_warn(f.arm(u), &format!("t = {t}")) else {
            continue;
        };
        for &alpha in &b.est.alpha {
            let spec = BandSpec::new(alpha, a.confidence);
            let rho = rho_grid(alpha, spec.delta0, a.rho_points);
            let eq = ok_or_warn(eqte_band(&arm1, &arm2, &spec, &rho), &format!("EQTE band at t = {t}"));
            let ea = ok_or_warn(eate_band(&arm1, &arm2, &spec, &rho, true), &format!("EATE band at t = {t}"));
            let raw = ok_or_warn(eate_band(&arm1, &arm2, &spec, &rho, false), &format!("EATE band at t = {t}"));
            for (i, &r) in rho.iter().enumerate() {
                let (c, l, u_) = bounds(&eq, i);
                let (ec, el, eu) = bounds(&ea, i);
                let (_, rl, ru) = bounds(&raw, i);
                let mut row = vec![t.into(), alpha.into(), r.into(), c, l, u_, ec, el, eu, rl, ru];
                if b.oracle {
                    row.push(oracle_ratio(&b.dgp, base_t, t, r, false).into());
                    row.push(oracle_ratio(&b.dgp, base_t, t, r, true).into());
                }
                table.push(row);
            }
            for (name, band) in [("eqte", &eq), ("eate", &ea)] {
                let Some(band) = band else { continue };
                let mut plot = Table::new(format!("plot/{name}_t{t}_alpha{alpha}"), &["rho", "center", "lower", "upper"]);
                for p in &band.points {
                    plot.push(vec![p.rho.into(), p.center.into(), p.lower.into(), p.upper.into()]);
                }
                let mut pp = params.clone();
                pp.set("t", t).set("alpha_n", alpha).set("z", band.z);
                written.extend(sink.write(&plot, &pp)?);
            }
        }
    }
    let mut out = sink.write(&table, &params)?;
    out.extend(written);
    Ok(out)
}

fn experiment(s: &SimArgs, weights: WeightChoice) -> Result<(ExperimentConfig, Params)> {
    ensure!(s.reps >= 1, "--reps must be positive");
    ensure!(s.alpha > 0.0 && s.alpha < 1.0, "alpha must lie in (0, 1), got {}", s.alpha);
    let mut cfg = ExperimentConfig::new(s.dgp.clone(), s.n, s.alpha, s.reps, s.seed);
    if let Some(g) = &s.t_grid {
        if let Some(t) = g.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            bail!("simulation treatment levels must lie in [0, 1], got {t}");
        }
        cfg.t_grid = g.clone();
    }
    cfg.kernel = KernelSpec::new(s.kernel);
    cfg.method = method(s.gamma_method, s.j)?;
    cfg.weights = match weights {
        WeightChoice::Column => WeightSource::UserSupplied,
        WeightChoice::Kernel => WeightSource::KernelRatio,
        WeightChoice::Oracle => WeightSource::Oracle,
    };
    cfg.h = s.bandwidth;
    cfg.k = s.k;
    let mut p = Params::default();
    p.set("dgp", &s.dgp)
        .set("n", s.n)
        .set("reps", s.reps)
        .set("alpha", s.alpha)
        .set("t_grid", join(&cfg.t_grid))
        .set("h", s.bandwidth.map_or("interval midpoint per replication".to_string(), |h| h.to_string()))
        .set("k_n", s.k.map_or("selected per replication".to_string(), |k| k.to_string()))
        .set("J", s.j)
        .set("gamma_method", &cfg.method)
        .set("kernel", format!("{:?}", s.kernel).to_lowercase())
        .set("boundary", "reflect")
        .set("weights", format!("{weights:?}").to_lowercase())
        .set("seed", s.seed);
    Ok((cfg, p))
}

pub fn simulate(a: &SimulateArgs) -> Result<Vec<PathBuf>> {
    let (mut cfg, mut params) = experiment(&a.sim, a.weights)?;
    params.set("command", "simulate");
    cfg.mode = ExecMode::Parallel;
    let res = run_simulation(&cfg)?;
    params.set("failures", res.failures);
    let mut cols = vec!["rep".to_string(), "k_n".to_string(), "h".to_string()];
    for prefix in ["extreme_ratio", "naive_ratio", "gamma"] {
        cols.extend(res.t_grid.iter().map(|t| format!("{prefix}_t{t}")));
    }
    let mut samples = Table::with_columns("samples", cols);
    for rep in 0..res.k.len() {
        let mut row: Vec<Cell> = vec![rep.into(), res.k[rep].into(), res.h[rep].into()];
        for series in [&res.extreme_ratio, &res.naive_ratio, &res.gamma_hat] {
            row.extend(series.iter().map(|s| Cell::from(s[rep])));
        }
        samples.push(row);
    }
    let mut summary = Table::new(
        "summary",
        &["t", "extreme_median", "extreme_q1", "extreme_q3", "extreme_iqr", "naive_median", "naive_q1", "naive_q3", "naive_iqr"],
    );
    if !res.k.is_empty() {
        for (i, &t) in res.t_grid.iter().enumerate() {
            let e = box_stats(&res.extreme_ratio[i]);
            let nv = box_stats(&res.naive_ratio[i]);
            summary.push(vec![
                t.into(),
                e.median.into(),
                e.q1.into(),
                e.q3.into(),
                e.iqr.into(),
                nv.median.into(),
                nv.q1.into(),
                nv.q3.into(),
                nv.iqr.into(),
            ]);
        }
    }
    let sink = Sink::new(&a.out.output_dir, a.out.format)?;
    let mut out = sink.write(&samples, &params)?;
    out.extend(sink.write(&summary, &params)?);
    Ok(out)
}

pub fn coverage(a: &CoverageArgs) -> Result<Vec<PathBuf>> {
    let (mut ex, mut params) = experiment(&a.sim, a.weights)?;
    ex.mode = ExecMode::Parallel;
    let mut cfg = CoverageConfig::new(ex, a.confidence);
    cfg.baseline_t = a.baseline_t;
    params
        .set("command", "coverage")
        .set("baseline_t", a.baseline_t)
        .set("confidence", a.confidence)
        .set("delta0", cfg.delta0);
    let res = coverage_experiment(&cfg)?;
    params.set("failures", res.failures);
    let mut table = Table::new(
        "coverage",
        &["t", "reps", "eqte", "eqte_se", "eate_adjusted", "eate_adjusted_se", "eate_unadjusted", "eate_unadjusted_se"],
    );
    for (i, &t) in res.t_grid.iter().enumerate() {
        let (q, e, r) = (res.eqte[i], res.eate_adjusted[i], res.eate_unadjusted[i]);
        table.push(vec![t.into(), q.total.into(), q.rate.into(), q.se.into(), e.rate.into(), e.se.into(), r.rate.into(), r.se.into()]);
    }
    Sink::new(&a.out.output_dir, a.out.format)?.write(&table, &params)
}

pub fn diagnose(a: &DiagnoseArgs) -> Result<Vec<PathBuf>> {
    let ds = xtreat::io::read_dataset_path(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let ys = ds.outcomes();
    let grid = BoxCoxGrid::default();
    let bc = box_cox_search(&ys, &grid, ExecMode::Parallel)?;
    let qq = exponential_qq(&ys)?;
    let mut params = Params::default();
    params
        .set("command", "diagnose")
        .set("input", a.input.display())
        .set("n", ds.n())
        .set("seed", a.seed)
        .set("lambda1_grid", format!("{}:{}:{}", grid.lambda1.0, grid.lambda1.1, grid.lambda1.2))
        .set("lambda2_grid", format!("{}:{}:{}", grid.lambda2.0, grid.lambda2.1, grid.lambda2.2))
        .set("lambda1", bc.lambda1)
        .set("lambda2", bc.lambda2)
        .set("boxcox_correlation", bc.correlation)
        .set("qq_correlation", qq.correlation)
        .set("qq_skipped", qq.skipped);
    let mut summary = Table::new("diagnose", &["lambda1", "lambda2", "boxcox_correlation", "qq_correlation", "qq_points", "qq_skipped"]);
    summary.push(vec![
        bc.lambda1.into(),
        bc.lambda2.into(),
        bc.correlation.into(),
        qq.correlation.into(),
        qq.pairs.len().into(),
        qq.skipped.into(),
    ]);
    let mut transformed = Table::new("boxcox", &["y", "transformed"]);
    for (&y, &z) in ys.iter().zip(&bc.transformed) {
        transformed.push(vec![y.into(), z.into()]);
    }
    let mut pairs = Table::new("qq", &["exponential_quantile", "z"]);
    for &(e, z) in &qq.pairs {
        pairs.push(vec![e.into(), z.into()]);
    }
    let sink = Sink::new(&a.out.output_dir, a.out.format)?;
    let mut out = sink.write(&summary, &params)?;
    out.extend(sink.write(&transformed, &params)?);
    out.extend(sink.write(&pairs, &params)?);
    Ok(out)
}

pub fn sample(a: &SampleArgs) -> Result<Vec<PathBuf>> {
    ensure!(a.n >= 1, "--n must be positive");
    let ds = a.dgp.sample(a.n, &mut xtreat::SeededRng::new(a.seed, 0));
    if let Some(parent) = a.output.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    xtreat::io::write_dataset_path(&ds, &a.output)?;
    Ok(vec![a.output.clone()])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_grid_spans_band_range() {
        let g = rho_grid(0.999, 0.5, 5);
        assert_eq!(g.len(), 5);
        assert_eq!(g[0], 0.4995);
        assert_eq!(g[4], 0.999);
        assert_eq!(rho_grid(0.9, 0.5, 1), vec![0.9]);
    }
}
