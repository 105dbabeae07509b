//! Price of fairness: stochastic block model graphs, the closed-form
//! asymptotic estimates, Monte Carlo estimates and a worst-case family.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact_oracle::solve_rc;
use crate::fairness_search::{max_feasible_w, solve_instance, FairnessConfig, OutcomeStatus, SolverChoice};
use crate::instance::Instance;
use crate::netmodel::{Graph, GroupPartition};

/// Smallest community size for which `log log |N_c|` is safely positive.
pub const MIN_ANALYTIC_SIZE: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SbmParams {
    /// Community sizes, nondecreasing.
    pub sizes: Vec<usize>,
    /// Within-community coefficients: `p_in = min(1, a_c / |N_c|)`.
    pub a: Vec<f64>,
    /// Between-community coefficients, symmetric:
    /// `p_out = min(1, b / (n · ln² n))` with `n` the larger community.
    pub b: Vec<Vec<f64>>,
    pub seed: u64,
}

impl SbmParams {
    /// Same `a` in every community and the same `b` between every pair.
    pub fn uniform(sizes: Vec<usize>, a: f64, b: f64, seed: u64) -> Result<Self> {
        let c = sizes.len();
        let params = Self { a: vec![a; c], b: vec![vec![b; c]; c], sizes, seed };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.sizes.len();
        if c == 0 {
            return Err(Error::Input("at least one community is required".into()));
        }
        if let Some(&s) = self.sizes.iter().find(|&&s| s < 2) {
            return Err(Error::Input(format!("community sizes must be at least 2, got {s}")));
        }
        if self.sizes.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Input(format!("community sizes must be nondecreasing, got {:?}", self.sizes)));
        }
        if self.a.len() != c || self.b.len() != c || self.b.iter().any(|row| row.len() != c) {
            return Err(Error::Input(format!("coefficients must match {c} communities")));
        }
        let coefficients = self.a.iter().chain(self.b.iter().flatten());
        if let Some(v) = coefficients.clone().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::Input(format!("coefficients must be finite and nonnegative, got {v}")));
        }
        for i in 0..c {
            for j in 0..c {
                if self.b[i][j] != self.b[j][i] {
                    return Err(Error::Input(format!("between coefficients are not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(())
    }

    pub fn p_in(&self, c: usize) -> f64 {
        (self.a[c] / self.sizes[c] as f64).min(1.0)
    }

    pub fn p_out(&self, c: usize, d: usize) -> f64 {
        let n = self.sizes[c].max(self.sizes[d]) as f64;
        (self.b[c][d] / (n * n.ln().powi(2))).min(1.0)
    }

    pub fn node_count(&self) -> usize {
        self.sizes.iter().sum()
    }

    fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

/// Undirected SBM graph stored as symmetric directed pairs. Nodes are
/// numbered community by community.
pub fn generate_sbm(params: &SbmParams) -> Result<(Graph, GroupPartition)> {
    params.validate()?;
    let group_of: Vec<usize> = params.sizes.iter().enumerate().flat_map(|(c, &s)| std::iter::repeat_n(c, s)).collect();
    let n = group_of.len();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let (cu, cv) = (group_of[u], group_of[v]);
            let p = if cu == cv { params.p_in(cu) } else { params.p_out(cu, cv) };
            if rng.gen_bool(p) {
                edges.push((u, v));
                edges.push((v, u));
            }
        }
    }
    Ok((Graph::new(n, edges)?, GroupPartition::new(group_of)?))
}

/// `log n / log log n` with natural logarithms.
pub fn degree_scale(size: usize) -> Result<f64> {
    if size < MIN_ANALYTIC_SIZE {
        return Err(Error::Domain(format!("community size {size} is below {MIN_ANALYTIC_SIZE}")));
    }
    let l = (size as f64).ln();
    Ok(l / l.ln())
}

fn scales(sizes: &[usize]) -> Result<Vec<f64>> {
    if sizes.is_empty() {
        return Err(Error::Input("at least one community is required".into()));
    }
    if sizes.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Input(format!("community sizes must be nondecreasing, got {sizes:?}")));
    }
    sizes.iter().map(|&s| degree_scale(s)).collect()
}

/// Asymptotic price of fairness without failures.
pub fn analytic_pof_det(sizes: &[usize]) -> Result<f64> {
    let d = scales(sizes)?;
    let largest = *d.last().expect("nonempty");
    let total: f64 = sizes.iter().map(|&s| s as f64).sum();
    let weighted: f64 = sizes.iter().zip(&d).map(|(&s, &dc)| s as f64 * (largest / dc)).sum();
    Ok(1.0 - total / weighted)
}

/// `(I − C·J) / Σ_c |N_c| / d(c)`.
pub fn eta(sizes: &[usize], i: f64, j: f64) -> Result<f64> {
    let d = scales(sizes)?;
    let c = sizes.len() as f64;
    if i <= c * j {
        return Err(Error::Domain(format!("need I > C·J, got I = {i}, C = {c}, J = {j}")));
    }
    let spread: f64 = sizes.iter().zip(&d).map(|(&s, &dc)| s as f64 / dc).sum();
    Ok((i - c * j) / spread)
}

/// Asymptotic price of fairness with `J` failures among `I` monitors.
/// `J` may be fractional (a failure rate times `I`).
pub fn analytic_pof_robust(sizes: &[usize], i: f64, j: f64) -> Result<f64> {
    if j < 0.0 {
        return Err(Error::Domain(format!("J must be nonnegative, got {j}")));
    }
    let d = scales(sizes)?;
    let e = eta(sizes, i, j)?;
    let largest = *d.last().expect("nonempty");
    let total: f64 = sizes.iter().map(|&s| s as f64).sum();
    let others: f64 = d[..d.len() - 1].iter().sum();
    Ok(1.0 - e * total / ((i - j) * largest) - j * others / ((i - j) * largest))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub small: usize,
    pub large: usize,
    pub ratio: f64,
    pub gamma: f64,
    pub j: f64,
    pub pof: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveConfig {
    pub small: usize,
    pub large_min: usize,
    pub large_max: usize,
    pub points: usize,
    pub monitors: usize,
    pub gammas: Vec<f64>,
    /// Round `γ·I` to an integer instead of using it as is.
    pub integer_failures: bool,
}

impl Default for CurveConfig {
    fn default() -> Self {
        Self {
            small: 20,
            large_min: 20,
            large_max: 10_000,
            points: 200,
            monitors: 12,
            gammas: vec![0.0, 0.1, 0.2],
            integer_failures: false,
        }
    }
}

impl CurveConfig {
    /// Geometric grid of large-community sizes, deduplicated after rounding.
    pub fn grid(&self) -> Vec<usize> {
        let steps = self.points.max(2) - 1;
        let span = self.large_max as f64 / self.large_min as f64;
        let mut grid: Vec<usize> = (0..=steps)
            .map(|k| (self.large_min as f64 * span.powf(k as f64 / steps as f64)).round() as usize)
            .collect();
        grid.dedup();
        grid
    }
}

/// Analytic PoF of two communities as the larger one grows, one series
/// per failure rate.
pub fn pof_curves(cfg: &CurveConfig) -> Result<Vec<CurvePoint>> {
    let i = cfg.monitors as f64;
    let mut out = Vec::new();
    for &gamma in &cfg.gammas {
        let j = if cfg.integer_failures { (gamma * i).round() } else { (gamma * i * 1e9).round() / 1e9 };
        for large in cfg.grid() {
            let sizes = [cfg.small, large];
            let pof = if j == 0.0 { analytic_pof_det(&sizes)? } else { analytic_pof_robust(&sizes, i, j)? };
            out.push(CurvePoint { small: cfg.small, large, ratio: large as f64 / cfg.small as f64, gamma, j, pof });
        }
    }
    Ok(out)
}

/// Worst-case family: a four-node path `a–b–c–d` (groups 0, 1, 0, 2)
/// next to a clique of `N − 4` nodes in group 1.
pub fn worst_case_graph(n: usize) -> Result<(Graph, GroupPartition)> {
    if n < 9 {
        return Err(Error::Input(format!("the worst-case family needs N >= 9, got {n}")));
    }
    let path = [(0, 1), (1, 2), (2, 3)];
    let clique = (4..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
    let edges = path.into_iter().chain(clique).flat_map(|(u, v)| [(u, v), (v, u)]);
    let groups = [0, 1, 0, 2].into_iter().chain(std::iter::repeat_n(1, n - 4)).collect();
    Ok((Graph::new(n, edges)?, GroupPartition::new(groups)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PofSample {
    pub opt: usize,
    pub opt_fair: usize,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PofReport {
    pub analytic: Option<f64>,
    pub empirical: f64,
    pub mean_opt: f64,
    pub mean_opt_fair: f64,
    /// Percentile bootstrap interval of the ratio of means.
    pub ci: (f64, f64),
    pub samples: usize,
    pub failures: usize,
    pub per_sample: Vec<PofSample>,
    pub gamma: f64,
    pub degree_scales: Option<Vec<f64>>,
    pub eta: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PofConfig {
    pub monitors: usize,
    pub failures: usize,
    pub samples: usize,
    pub fairness: FairnessConfig,
    pub bootstrap: usize,
    pub threads: usize,
}

impl PofConfig {
    pub fn new(monitors: usize, failures: usize, samples: usize, fairness: FairnessConfig) -> Self {
        let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
        Self { monitors, failures, samples, fairness, bootstrap: 1000, threads }
    }
}

/// Unconstrained and maximin-fair optima of one instance.
pub fn pof_sample(instance: &Instance, fairness: &FairnessConfig) -> Result<PofSample> {
    let plain = instance.clone().with_w(0.0)?;
    let opt = if fairness.setup.solver == SolverChoice::Oracle {
        solve_rc(&plain, &fairness.setup.oracle)?.optimum
    } else {
        let out = solve_instance(&plain, &fairness.setup)?;
        (out.status == OutcomeStatus::Optimal).then_some(out.tau).flatten()
    };
    let opt = opt.ok_or_else(|| Error::Solver("unconstrained problem not solved".into()))?;
    let fair = max_feasible_w(instance, fairness)?;
    let opt_fair = fair.outcome.tau.ok_or_else(|| Error::Solver("fair problem not solved".into()))?;
    Ok(PofSample { opt, opt_fair, w: fair.w })
}

fn ratio_pof(samples: &[PofSample]) -> (f64, f64, f64) {
    let n = samples.len() as f64;
    let opt = samples.iter().map(|s| s.opt as f64).sum::<f64>() / n;
    let fair = samples.iter().map(|s| s.opt_fair as f64).sum::<f64>() / n;
    let pof = if opt > 0.0 { 1.0 - fair / opt } else { 0.0 };
    (pof, opt, fair)
}

/// Ratio-of-means PoF over given instances, solved in parallel. Solver
/// errors count as failures; more than a tenth of failures aborts.
pub fn pof_over(instances: &[Instance], cfg: &PofConfig, seed: u64) -> Result<PofReport> {
    if instances.is_empty() {
        return Err(Error::Input("at least one sample is required".into()));
    }
    let threads = cfg.threads.clamp(1, instances.len());
    let chunk = instances.len().div_ceil(threads);
    let results: Vec<Result<PofSample>> = std::thread::scope(|s| {
        let handles: Vec<_> = instances
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(|inst| pof_sample(inst, &cfg.fairness)).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("sample thread panicked")).collect()
    });
    let mut per_sample = Vec::new();
    let mut failures = 0;
    for r in results {
        match r {
            Ok(s) => per_sample.push(s),
            Err(e) => {
                if std::env::var_os("FAIRCOVER_DEBUG").is_some() {
                    eprintln!("sample failed: {e}");
                }
                failures += 1;
            }
        }
    }
    if failures * 10 > instances.len() || per_sample.is_empty() {
        return Err(Error::Solver(format!("{failures} of {} samples failed", instances.len())));
    }
    let (empirical, mean_opt, mean_opt_fair) = ratio_pof(&per_sample);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut boot: Vec<f64> = (0..cfg.bootstrap)
        .map(|_| {
            let draw: Vec<PofSample> =
                (0..per_sample.len()).map(|_| *per_sample.choose(&mut rng).expect("nonempty")).collect();
            ratio_pof(&draw).0
        })
        .collect();
    boot.sort_by(f64::total_cmp);
    let ci = if boot.is_empty() {
        (empirical, empirical)
    } else {
        let at = |q: f64| boot[((q * (boot.len() - 1) as f64).round() as usize).min(boot.len() - 1)];
        (at(0.025), at(0.975))
    };
    Ok(PofReport {
        analytic: None,
        empirical,
        mean_opt,
        mean_opt_fair,
        ci,
        samples: per_sample.len(),
        failures,
        per_sample,
        gamma: if cfg.monitors == 0 { 0.0 } else { cfg.failures as f64 / cfg.monitors as f64 },
        degree_scales: None,
        eta: None,
    })
}

/// Draws `samples` SBM graphs (sample `s` uses stream `s` of the master
/// seed) and estimates the PoF; the analytic value is attached when the
/// closed form is defined for these sizes.
pub fn empirical_pof(params: &SbmParams, cfg: &PofConfig) -> Result<PofReport> {
    params.validate()?;
    let instances = (0..cfg.samples)
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(s as u64 + 1);
            let (g, p) = generate_sbm(&params.with_seed(rng.gen()))?;
            Instance::with_budget(g, p, cfg.monitors, cfg.failures)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = pof_over(&instances, cfg, params.seed)?;
    let (i, j) = (cfg.monitors as f64, cfg.failures as f64);
    report.degree_scales = scales(&params.sizes).ok();
    report.eta = eta(&params.sizes, i, j).ok();
    report.analytic = if cfg.failures == 0 {
        analytic_pof_det(&params.sizes).ok()
    } else {
        analytic_pof_robust(&params.sizes, i, j).ok()
    };
    Ok(report)
}
