//! Verification runs shared by the `oracle-suite` command and the acceptance
//! tests. Each check returns a pass flag plus a one-line summary of the worst
//! case it saw.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::baselines::{run_baseline, BaselineKind};
use crate::error::Result;
use crate::fp::{
    auxiliary_from_effective, matched_filter, precoder_from_effective, random_phases, run_es, surrogate_value, AuxiliaryState,
    EsOptions,
};
use crate::model::{effective_channels, InvariantAudit, PrecoderMatrix, StarRisConfiguration};
use crate::oracle::{
    exhaustive_small_instance, grid_maximize_element, perturbation_check, polish_configuration, project_to_power, GridSpec,
    InnerLoop,
};
use crate::par::{self, Execution};
use crate::passive::{passive_objective, update_element, PassiveQuadraticForm, PassiveUpdate};
use crate::scenario::{generate_channels, random_channels, reference_config, rng_for, sides_for, Side, SystemConfig, C64};
use crate::ts::{mode_from_parts, optimize_delta, run_ts, ts_coefficients, ts_fp_objective, TsOptions, TsState};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CheckOutcome {
    fn new(name: &'static str, passed: bool, detail: String, start: Instant) -> Self {
        Self { name, passed, detail, seconds: start.elapsed().as_secs_f64() }
    }

    pub fn line(&self) -> String {
        format!("{} {}: {} ({:.1} s)", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail, self.seconds)
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// Desk-scale configuration used by the ascent, invariant and timing checks.
pub fn desk_config() -> SystemConfig {
    reference_config(4, 8, 10.0).truncate_users(2, 1).expect("reference has enough users")
}

/// Desk-scale configuration of the ordering and convergence checks.
pub fn ordering_config() -> SystemConfig {
    reference_config(8, 16, 30.0)
}

/// Surrogate never decreases across any block of any iteration.
pub fn monotone_ascent(instances: u64, slack: f64, exec: Execution) -> Result<(CheckOutcome, InvariantAudit)> {
    let start = Instant::now();
    let cfg = desk_config();
    let runs = par::map_indices(instances as usize, exec, |i| {
        let seed = i as u64;
        let ch = generate_channels(&cfg, seed);
        run_es(&cfg, &ch, &EsOptions { seed, record_blocks: true, audit: true, ..EsOptions::default() })
    });
    let mut worst_drop = 0.0f64;
    let mut blocks = 0;
    let mut audit = InvariantAudit::default();
    for run in runs {
        let run = run?;
        blocks += run.blocks.len();
        for pair in run.blocks.windows(2) {
            worst_drop = worst_drop.max(pair[0].surrogate - pair[1].surrogate);
        }
        if let Some(a) = run.audit {
            audit.merge(&a);
        }
    }
    let passed = worst_drop <= slack;
    Ok((CheckOutcome::new("monotone-ascent", passed, format!("{instances} instances, {blocks} blocks, worst drop {worst_drop:.3e}"), start), audit))
}

fn random_context(seed: u64, n: usize) -> (PassiveQuadraticForm, StarRisConfiguration, usize) {
    let mut rng = rng_for(seed, 31);
    let br = random_matrix(&mut rng, n, n);
    let bt = random_matrix(&mut rng, n, n);
    let qf = PassiveQuadraticForm {
        u_r: &br * br.adjoint(),
        u_t: &bt * bt.adjoint(),
        v_r: random_matrix(&mut rng, n, 1).column(0).into_owned() * c(2.0, 0.0),
        v_t: random_matrix(&mut rng, n, 1).column(0).into_owned() * c(2.0, 0.0),
    };
    let theta_r = random_phases(n, &mut rng);
    let theta_t = random_phases(n, &mut rng);
    let rho = (0..n).map(|_| rng.random_range(0.0..=1.0)).collect();
    let ris = StarRisConfiguration::new(theta_r, theta_t, rho).expect("valid random configuration");
    let element = rng.random_range(0..n);
    (qf, ris, element)
}

/// Closed-form element update against the phase/split grid.
pub fn element_oracle(contexts: u64, spec: GridSpec, exec: Execution) -> Result<CheckOutcome> {
    let start = Instant::now();
    let gaps = par::map_indices(contexts as usize, exec, |i| -> Result<f64> {
        let (qf, ris, n) = random_context(i as u64, 4);
        let grid = grid_maximize_element(&qf, &ris, n, &spec)?;
        let mut closed = ris;
        update_element(n, &qf, &mut closed, PassiveUpdate::Full)?;
        Ok(grid.objective - passive_objective(&qf, &closed))
    });
    let mut worst = f64::NEG_INFINITY;
    for g in gaps {
        worst = worst.max(g?);
    }
    let passed = worst <= spec.tolerance;
    Ok(CheckOutcome::new(
        "element-oracle",
        passed,
        format!("{contexts} contexts on {}x{} grid, worst grid advantage {worst:.3e}", spec.phase_points, spec.split_points),
        start,
    ))
}

/// Random perturbations on the power sphere never improve the surrogate at
/// the closed-form precoder.
pub fn precoder_stationarity(instances: u64, perturbations: usize, radius: f64, exec: Execution) -> Result<CheckOutcome> {
    let start = Instant::now();
    let (m, n, k) = (3, 4, 2);
    let power = 10.0;
    let noise = vec![1.0; k];
    let results = par::map_indices(instances as usize, exec, |i| -> Result<bool> {
        let seed = i as u64;
        let mut rng = rng_for(seed, 41);
        let ch = random_channels(m, n, &sides_for(1, 1), &mut rng);
        let ris = StarRisConfiguration::new(random_phases(n, &mut rng), random_phases(n, &mut rng), vec![0.5; n])?;
        let eff = effective_channels(&ch, &ris)?;
        let w0 = matched_filter(&eff, power).expect("non-zero channels");
        let mut aux = auxiliary_from_effective(&w0, &eff, &noise)?;
        let update = precoder_from_effective(&aux, &eff, &noise, power)?;
        aux.compensate_rescale(update.scale);
        let point = DVector::from_column_slice(update.precoder.0.as_slice());
        let objective = |x: &DVector<C64>| {
            let w = PrecoderMatrix(DMatrix::from_column_slice(m, k, x.as_slice()));
            surrogate_value(&w, &aux, &ch, &ris, &noise, power).unwrap_or(f64::INFINITY)
        };
        Ok(perturbation_check(objective, &point, perturbations, radius, project_to_power(power), seed))
    });
    let mut failures = 0;
    for r in results {
        if !r? {
            failures += 1;
        }
    }
    Ok(CheckOutcome::new(
        "precoder-stationarity",
        failures == 0,
        format!("{instances} instances x {perturbations} perturbations, {failures} improved"),
        start,
    ))
}

/// Settings of the tiny-instance global check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TinyInstanceSettings {
    pub instances: u64,
    /// Joint grid for single-element instances.
    pub single_grid: GridSpec,
    /// Coarse joint grid for two-element instances, followed by a
    /// coordinate-wise polish on `single_grid`.
    pub pair_grid: GridSpec,
    pub polish_rounds: usize,
    pub ratio: f64,
}

impl Default for TinyInstanceSettings {
    fn default() -> Self {
        Self {
            instances: 20,
            single_grid: GridSpec { phase_points: 64, split_points: 33, tolerance: 0.0 },
            pair_grid: GridSpec { phase_points: 8, split_points: 5, tolerance: 0.0 },
            polish_rounds: 5,
            ratio: 0.98,
        }
    }
}

/// ES against the exhaustive grid on two-antenna, two-user instances of the
/// reference scenario. The first half of the instances has one element, the
/// second half two.
pub fn tiny_instances(settings: TinyInstanceSettings, exec: Execution) -> Result<CheckOutcome> {
    let start = Instant::now();
    let mut worst = f64::INFINITY;
    let mut misses = Vec::new();
    for seed in 0..settings.instances {
        let n = if seed < settings.instances / 2 { 1 } else { 2 };
        let cfg = reference_config(2, n, 30.0).truncate_users(1, 1)?;
        let ch = generate_channels(&cfg, seed);
        let inner = InnerLoop::default();
        let oracle = if n == 1 {
            exhaustive_small_instance(&cfg, &ch, &settings.single_grid, inner, exec)?
        } else {
            let coarse = exhaustive_small_instance(&cfg, &ch, &settings.pair_grid, inner, exec)?;
            polish_configuration(&cfg, &ch, coarse, &settings.single_grid, inner, settings.polish_rounds)?
        };
        let es = run_es(&cfg, &ch, &EsOptions { seed, ..EsOptions::default() })?;
        let ratio = es.sum_rate / oracle.sum_rate;
        worst = worst.min(ratio);
        if ratio < settings.ratio {
            misses.push(format!("seed {seed} N={n}: {:.3} vs {:.3}", es.sum_rate, oracle.sum_rate));
        }
    }
    let mut detail = format!("{} instances, worst ES/oracle {worst:.4}", settings.instances);
    if !misses.is_empty() {
        detail.push_str(&format!(", below {}: {}", settings.ratio, misses.join("; ")));
    }
    Ok(CheckOutcome::new("tiny-instance", misses.is_empty(), detail, start))
}

/// Random per-mode states for the time-split identification check.
pub fn random_ts_state(seed: u64) -> (crate::ts::ModeSolution, crate::ts::ModeSolution, Vec<f64>) {
    let mut rng = rng_for(seed, 51);
    let (m, n) = (3, 4);
    let ch = random_channels(m, n, &sides_for(2, 2), &mut rng);
    let mode = |side: Side, rng: &mut rand_chacha::ChaCha8Rng| {
        let w = random_matrix(rng, m, 2);
        let aux = AuxiliaryState {
            lambda: (0..2).map(|_| rng.random_range(0.0..5.0)).collect(),
            beta: (0..2).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect(),
        };
        mode_from_parts(side, &ch, random_phases(n, rng), w, aux)
    };
    let reflect = mode(Side::Reflect, &mut rng);
    let transmit = mode(Side::Transmit, &mut rng);
    let noise = (0..4).map(|_| rng.random_range(0.1..3.0)).collect();
    (reflect, transmit, noise)
}

/// Quadratic coefficients against the direct objective, and the closed-form
/// time split against a dense grid.
pub fn ts_identification(states: u64, grid_points: usize, coefficient_tol: f64, grid_tol: f64) -> Result<CheckOutcome> {
    let start = Instant::now();
    let mut worst_coeff = 0.0f64;
    let mut worst_grid = f64::NEG_INFINITY;
    for seed in 0..states {
        let (r, t, noise) = random_ts_state(seed);
        let s = ts_coefficients(&r, &t, &noise, 0.5)?;
        for delta in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let direct = ts_fp_objective(&r, &t, &noise, delta)?;
            worst_coeff = worst_coeff.max((direct - s.objective(delta)).abs());
        }
        worst_grid = worst_grid.max(delta_grid_gap(&s, grid_points)?);
        let mut rng = rng_for(seed, 52);
        let synthetic = TsState { a: rng.random_range(-4.0..4.0), b: rng.random_range(0.0..4.0), ..s };
        worst_grid = worst_grid.max(delta_grid_gap(&synthetic, grid_points)?);
    }
    let passed = worst_coeff <= coefficient_tol && worst_grid <= grid_tol;
    Ok(CheckOutcome::new(
        "ts-identification",
        passed,
        format!("{states} states, worst coefficient error {worst_coeff:.3e}, worst grid advantage {worst_grid:.3e}"),
        start,
    ))
}

fn delta_grid_gap(s: &TsState, points: usize) -> Result<f64> {
    let best = optimize_delta(s)?;
    let last = (points - 1) as f64;
    let grid = (0..points).map(|i| s.t(i as f64 / last)).fold(f64::NEG_INFINITY, f64::max);
    Ok(grid - s.t(best))
}

/// Mean sum-rates of the ordering check.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OrderingMeans {
    pub es: f64,
    pub ts: f64,
    pub equal_energy: f64,
    pub two_conventional: f64,
    pub random_conventional: f64,
    pub random_star: f64,
}

pub fn ordering_means(seeds: u64, exec: Execution) -> Result<OrderingMeans> {
    let cfg = ordering_config();
    let rows = par::map_indices(seeds as usize, exec, |i| -> Result<[f64; 6]> {
        let seed = i as u64;
        let ch = generate_channels(&cfg, seed);
        let opts = EsOptions { seed, ..EsOptions::default() };
        let base = |k| run_baseline(k, &cfg, &ch, &opts).map(|r| r.sum_rate());
        Ok([
            run_es(&cfg, &ch, &opts)?.sum_rate,
            run_ts(&cfg, &ch, &TsOptions { es: opts.clone(), ..TsOptions::default() })?.sum_rate,
            base(BaselineKind::EqualEnergy)?,
            base(BaselineKind::TwoConventionalRis)?,
            base(BaselineKind::RandomConventionalRis)?,
            base(BaselineKind::RandomStar)?,
        ])
    });
    let mut sum = [0.0; 6];
    for row in rows {
        for (s, v) in sum.iter_mut().zip(row?) {
            *s += v;
        }
    }
    let n = seeds as f64;
    Ok(OrderingMeans {
        es: sum[0] / n,
        ts: sum[1] / n,
        equal_energy: sum[2] / n,
        two_conventional: sum[3] / n,
        random_conventional: sum[4] / n,
        random_star: sum[5] / n,
    })
}

/// `a > b` by at least `margin` relative to `b`.
pub fn beats(a: f64, b: f64, margin: f64) -> bool {
    a >= b * (1.0 + margin)
}

pub fn ordering(seeds: u64, margin: f64, exec: Execution) -> Result<CheckOutcome> {
    let start = Instant::now();
    let m = ordering_means(seeds, exec)?;
    let relations = [
        ("ES>EE", beats(m.es, m.equal_energy, margin)),
        ("EE>2CR", beats(m.equal_energy, m.two_conventional, margin)),
        ("2CR>RCR", beats(m.two_conventional, m.random_conventional, margin)),
        ("ES>RS", beats(m.es, m.random_star, margin)),
        ("TS<=ES", m.ts <= m.es),
    ];
    let failed: Vec<&str> = relations.iter().filter(|r| !r.1).map(|r| r.0).collect();
    let detail = format!(
        "means ES {:.3} EE {:.3} 2CR {:.3} RCR {:.3} RS {:.3} TS {:.3}{}",
        m.es,
        m.equal_energy,
        m.two_conventional,
        m.random_conventional,
        m.random_star,
        m.ts,
        if failed.is_empty() { String::new() } else { format!("; violated: {}", failed.join(", ")) }
    );
    Ok(CheckOutcome::new("ordering", failed.is_empty(), detail, start))
}

/// Share of seeds whose surrogate after `early` iterations reaches `fraction`
/// of its value after `total` iterations.
pub fn convergence_shape(seeds: u64, early: usize, total: usize, fraction: f64, required: f64, exec: Execution) -> Result<CheckOutcome> {
    let start = Instant::now();
    let cfg = ordering_config();
    let ratios = par::map_indices(seeds as usize, exec, |i| -> Result<f64> {
        let seed = i as u64;
        let ch = generate_channels(&cfg, seed);
        let run = run_es(&cfg, &ch, &EsOptions { seed, max_iter: total, tol: 0.0, ..EsOptions::default() })?;
        let last = run.trace.last().map(|r| r.surrogate).unwrap_or(0.0);
        let at = run.trace.get(early - 1).map(|r| r.surrogate).unwrap_or(last);
        Ok(at / last)
    });
    let mut hits = 0;
    let mut worst = f64::INFINITY;
    for r in ratios {
        let r = r?;
        worst = worst.min(r);
        if r >= fraction {
            hits += 1;
        }
    }
    let share = hits as f64 / seeds as f64;
    Ok(CheckOutcome::new(
        "convergence-shape",
        share >= required,
        format!("{hits}/{seeds} seeds reach {fraction} of the {total}-iteration surrogate by iteration {early}, worst {worst:.3}"),
        start,
    ))
}

/// Median per-iteration stage times over seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageMedians {
    pub passive: f64,
    pub precoder: f64,
}

pub fn stage_medians(elements: usize, seeds: u64, iterations: usize) -> Result<StageMedians> {
    let cfg = reference_config(4, elements, 10.0);
    let mut passive = Vec::new();
    let mut precoder = Vec::new();
    for seed in 0..seeds {
        let ch = generate_channels(&cfg, seed);
        let run = run_es(&cfg, &ch, &EsOptions { seed, max_iter: iterations, tol: 0.0, ..EsOptions::default() })?;
        passive.push(run.timings.passive / run.iterations as f64);
        precoder.push(run.timings.precoder / run.iterations as f64);
    }
    Ok(StageMedians { passive: median(&mut passive), precoder: median(&mut precoder) })
}

pub fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Passive-sweep time ratio when the element count doubles, and precoder
/// time ratio over the same change. Runs sequentially so timings are not
/// disturbed by other workers.
pub fn complexity_scaling(seeds: u64, iterations: usize, passive_band: (f64, f64), precoder_band: (f64, f64)) -> Result<CheckOutcome> {
    let start = Instant::now();
    stage_medians(16, 2, iterations)?;
    let small = stage_medians(16, seeds, iterations)?;
    let large = stage_medians(32, seeds, iterations)?;
    let passive = large.passive / small.passive;
    let precoder = large.precoder / small.precoder;
    let passed = (passive_band.0..=passive_band.1).contains(&passive) && (precoder_band.0..=precoder_band.1).contains(&precoder);
    Ok(CheckOutcome::new(
        "complexity-scaling",
        passed,
        format!(
            "N 16->32 over {seeds} seeds: passive x{passive:.2} (band {:?}), precoder x{precoder:.2} (band {:?})",
            passive_band, precoder_band
        ),
        start,
    ))
}

/// Feasibility audit over ES, baselines and TS runs at desk scale.
pub fn invariant_audit(seeds: u64, exec: Execution) -> Result<InvariantAudit> {
    let cfg = reference_config(4, 8, 20.0);
    let audits = par::map_indices(seeds as usize, exec, |i| -> Result<InvariantAudit> {
        let seed = i as u64;
        let ch = generate_channels(&cfg, seed);
        let opts = EsOptions { seed, audit: true, ..EsOptions::default() };
        let mut audit = InvariantAudit::default();
        let mut add = |a: Option<InvariantAudit>| {
            if let Some(a) = a {
                audit.merge(&a);
            }
        };
        add(run_es(&cfg, &ch, &opts)?.audit);
        for kind in BaselineKind::ALL {
            add(run_baseline(kind, &cfg, &ch, &opts)?.run.audit);
        }
        add(run_ts(&cfg, &ch, &TsOptions { es: opts.clone(), ..TsOptions::default() })?.audit());
        Ok(audit)
    });
    let mut total = InvariantAudit::default();
    for a in audits {
        total.merge(&a?);
    }
    Ok(total)
}

pub fn audit_outcome(audit: &InvariantAudit, start: Instant) -> CheckOutcome {
    CheckOutcome::new(
        "invariants",
        audit.holds() && audit.steps > 0,
        format!(
            "{} steps, worst |theta| error {:.2e}, power error {:.2e}, split error {:.2e}",
            audit.steps, audit.max_modulus_error, audit.max_power_error, audit.max_split_error
        ),
        start,
    )
}

/// Reduced-size versions of every check, for the `oracle-suite` command.
pub fn quick_suite(exec: Execution) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    let (ascent, mut audit) = monotone_ascent(10, 1e-9, exec)?;
    out.push(ascent);
    out.push(element_oracle(200, GridSpec::default(), exec)?);
    out.push(precoder_stationarity(20, 1000, 1e-3, exec)?);
    out.push(tiny_instances(
        TinyInstanceSettings {
            instances: 4,
            single_grid: GridSpec { phase_points: 32, split_points: 17, tolerance: 0.0 },
            ..TinyInstanceSettings::default()
        },
        exec,
    )?);
    out.push(ts_identification(100, 100_000, 1e-9, 1e-12)?);
    let start = Instant::now();
    audit.merge(&invariant_audit(3, exec)?);
    out.push(audit_outcome(&audit, start));
    Ok(out)
}
