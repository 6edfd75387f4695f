//! Experiment sweeps and their CSV output.
//!
//! An experiment file names a scenario, a list of algorithms, an optional
//! sweep over transmit power or element count, and how many channel
//! realisations to average. Every (algorithm, sweep value, seed) triple is one
//! independent run; runs go through the work pool and the rows are written in
//! a fixed order, so reruns with the same seeds give identical rate columns.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{run_baseline, BaselineKind};
use crate::error::{Error, Result};
use crate::fp::{run_es, EsOptions, EsRunReport, IterationRecord, StageTimings};
use crate::par::{self, Execution};
use crate::scenario::{generate_channels, Scenario, Side, SystemConfig};
use crate::ts::{run_ts, TsOptions, TsReport, TsSchedule};

/// Environment variable holding the default output directory.
pub const OUT_DIR_ENV: &str = "STARRIS_OUT_DIR";
/// Output directory when neither the command line, the experiment file nor
/// the environment name one.
pub const DEFAULT_OUT_DIR: &str = "results";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    ElementStarEs,
    ElementStarTs,
    EqualEnergy,
    RandomStar,
    ConventionalRis,
    TwoConventionalRis,
    RandomConventionalRis,
    NoRis,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::ElementStarEs,
        Algorithm::ElementStarTs,
        Algorithm::EqualEnergy,
        Algorithm::RandomStar,
        Algorithm::ConventionalRis,
        Algorithm::TwoConventionalRis,
        Algorithm::RandomConventionalRis,
        Algorithm::NoRis,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::ElementStarEs => "element-star-es",
            Algorithm::ElementStarTs => "element-star-ts",
            other => other.baseline().expect("baseline variant").name(),
        }
    }

    pub fn baseline(self) -> Option<BaselineKind> {
        match self {
            Algorithm::ElementStarEs | Algorithm::ElementStarTs => None,
            Algorithm::EqualEnergy => Some(BaselineKind::EqualEnergy),
            Algorithm::RandomStar => Some(BaselineKind::RandomStar),
            Algorithm::ConventionalRis => Some(BaselineKind::ConventionalRis),
            Algorithm::TwoConventionalRis => Some(BaselineKind::TwoConventionalRis),
            Algorithm::RandomConventionalRis => Some(BaselineKind::RandomConventionalRis),
            Algorithm::NoRis => Some(BaselineKind::NoRis),
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum SweepAxis {
    #[default]
    None,
    PowerDb(Vec<f64>),
    Elements(Vec<usize>),
}

impl SweepAxis {
    pub fn label(&self) -> &'static str {
        match self {
            SweepAxis::None => "none",
            SweepAxis::PowerDb(_) => "power_db",
            SweepAxis::Elements(_) => "n_elements",
        }
    }

    /// Sweep values as reals; a single cell at the scenario's own setting when
    /// there is no sweep.
    pub fn values(&self, scenario: &Scenario) -> Vec<f64> {
        match self {
            SweepAxis::None => vec![scenario.power_db],
            SweepAxis::PowerDb(v) => v.clone(),
            SweepAxis::Elements(v) => v.iter().map(|&n| n as f64).collect(),
        }
    }

    fn config_at(&self, scenario: &Scenario, index: usize) -> SystemConfig {
        match self {
            SweepAxis::None => scenario.config.clone(),
            SweepAxis::PowerDb(v) => scenario.config.with_power_db(v[index]),
            SweepAxis::Elements(v) => scenario.config.with_elements(v[index]),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    power_db: Option<Vec<f64>>,
    n_elements: Option<Vec<usize>>,
}

/// Per-run optimiser settings of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunOptions {
    pub max_iter: usize,
    pub tol: f64,
    /// Element sweeps per outer iteration.
    pub inner_sweeps: usize,
    pub ts_max_rounds: usize,
    pub ts_delta_tol: f64,
    pub ts_one_shot: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        let es = EsOptions::default();
        let ts = TsOptions::default();
        Self {
            max_iter: es.max_iter,
            tol: es.tol,
            inner_sweeps: es.inner_sweeps,
            ts_max_rounds: ts.max_rounds,
            ts_delta_tol: ts.delta_tol,
            ts_one_shot: false,
        }
    }
}

impl RunOptions {
    pub fn es(&self, seed: u64) -> EsOptions {
        EsOptions { max_iter: self.max_iter, tol: self.tol, seed, inner_sweeps: self.inner_sweeps, ..EsOptions::default() }
    }

    pub fn ts(&self, seed: u64) -> TsOptions {
        TsOptions {
            es: self.es(seed),
            max_rounds: self.ts_max_rounds,
            delta_tol: self.ts_delta_tol,
            schedule: if self.ts_one_shot { TsSchedule::OneShot } else { TsSchedule::Alternate },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentFile {
    scenario: PathBuf,
    algorithms: Vec<Algorithm>,
    #[serde(default)]
    sweep: SweepFile,
    realizations: usize,
    #[serde(default)]
    seed_base: u64,
    output_dir: Option<PathBuf>,
    #[serde(default)]
    traces: bool,
    #[serde(default)]
    options: RunOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub scenario_path: PathBuf,
    pub scenario: Scenario,
    pub algorithms: Vec<Algorithm>,
    pub sweep: SweepAxis,
    pub realizations: usize,
    pub seed_base: u64,
    pub output_dir: Option<PathBuf>,
    /// Write per-iteration traces of every run.
    pub traces: bool,
    pub options: RunOptions,
}

impl ExperimentSpec {
    /// Parse an experiment file; the scenario path is resolved relative to
    /// the directory of `origin`.
    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        let file: ExperimentFile =
            toml::from_str(text).map_err(|e| Error::Parse { path: origin.display().to_string(), message: e.to_string() })?;
        let base = origin.parent().unwrap_or(Path::new(""));
        let scenario_path = if file.scenario.is_absolute() { file.scenario.clone() } else { base.join(&file.scenario) };
        let scenario = Scenario::load(&scenario_path)?;
        let sweep = match (file.sweep.power_db, file.sweep.n_elements) {
            (Some(_), Some(_)) => return Err(Error::InvalidConfig("sweep over both power_db and n_elements".into())),
            (Some(p), None) => SweepAxis::PowerDb(p),
            (None, Some(n)) => SweepAxis::Elements(n),
            (None, None) => SweepAxis::None,
        };
        let output_dir = file.output_dir.map(|d| if d.is_absolute() { d } else { base.join(d) });
        let spec = Self {
            scenario_path,
            scenario,
            algorithms: file.algorithms,
            sweep,
            realizations: file.realizations,
            seed_base: file.seed_base,
            output_dir,
            traces: file.traces,
            options: file.options,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text, path)
    }

    pub fn validate(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::InvalidConfig("realizations must be at least 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidConfig("no algorithms listed".into()));
        }
        let sorted = |v: &[f64]| !v.is_empty() && v.windows(2).all(|w| w[0] < w[1]);
        let ok = match &self.sweep {
            SweepAxis::None => true,
            SweepAxis::PowerDb(v) => sorted(v) && v.iter().all(|p| p.is_finite()),
            SweepAxis::Elements(v) => sorted(&v.iter().map(|&n| n as f64).collect::<Vec<_>>()),
        };
        if !ok {
            return Err(Error::InvalidConfig(format!("{} sweep must be non-empty and strictly increasing", self.sweep.label())));
        }
        if self.algorithms.contains(&Algorithm::TwoConventionalRis) {
            let cells = self.sweep.values(&self.scenario).len();
            for i in 0..cells {
                let n = self.sweep.config_at(&self.scenario, i).elements;
                if !n.is_multiple_of(2) {
                    return Err(Error::InvalidConfig(format!("two-conventional-ris needs an even element count, got {n}")));
                }
            }
        }
        if !(self.options.tol >= 0.0) || self.options.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be positive and tol non-negative".into()));
        }
        Ok(())
    }

    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.realizations as u64).map(move |r| self.seed_base.wrapping_add(r))
    }
}

/// One run of one algorithm on one channel realisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub algorithm: Algorithm,
    pub axis: String,
    pub sweep_value: f64,
    pub seed: u64,
    /// Sum-rate in bits per channel use.
    pub sum_rate: f64,
    /// Part of `sum_rate` earned by reflect-side users.
    pub reflect_sum_rate: f64,
    pub iterations: usize,
    pub converged: bool,
    pub degenerate: bool,
    /// Time split of the TS protocol; empty for other algorithms.
    pub delta: Option<f64>,
    pub aux_s: f64,
    pub precoder_s: f64,
    pub passive_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub axis: String,
    pub sweep_value: f64,
    pub runs: usize,
    pub mean_sum_rate: f64,
    pub std_sum_rate: f64,
    pub mean_reflect_sum_rate: f64,
    pub mean_iterations: f64,
    pub mean_total_s: f64,
    pub converged_runs: usize,
    pub degenerate_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub algorithm: Algorithm,
    /// `es` for single-run algorithms, `reflect` / `transmit` for TS modes.
    pub part: String,
    pub sweep_value: f64,
    pub seed: u64,
    pub iteration: usize,
    pub surrogate: f64,
    /// Sum-rate (bits) after the iteration; empty for TS modes.
    pub sum_rate: Option<f64>,
    pub elapsed_s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdfPoint {
    pub runtime_s: f64,
    pub cdf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfRow {
    pub algorithm: Algorithm,
    pub sweep_value: f64,
    pub runtime_s: f64,
    pub cdf: f64,
}

/// Outcome of one algorithm run, before it is flattened into a row.
#[derive(Debug, Clone)]
pub enum RunOutcome {
    Bcd(EsRunReport, f64),
    Ts(TsReport),
}

impl RunOutcome {
    fn timings(&self) -> StageTimings {
        match self {
            RunOutcome::Bcd(r, _) => r.timings,
            RunOutcome::Ts(r) => r.timings,
        }
    }
}

/// Run one algorithm on the configuration of a sweep cell.
pub fn run_algorithm(algorithm: Algorithm, config: &SystemConfig, seed: u64, options: &RunOptions) -> Result<RunOutcome> {
    let channels = generate_channels(config, seed);
    match algorithm {
        Algorithm::ElementStarEs => {
            let run = run_es(config, &channels, &options.es(seed))?;
            let reflect = channels.users_on(Side::Reflect).iter().map(|&k| run.user_rates[k]).sum();
            Ok(RunOutcome::Bcd(run, reflect))
        }
        Algorithm::ElementStarTs => Ok(RunOutcome::Ts(run_ts(config, &channels, &options.ts(seed))?)),
        other => {
            let kind = other.baseline().expect("baseline variant");
            let report = run_baseline(kind, config, &channels, &options.es(seed))?;
            Ok(RunOutcome::Bcd(report.run, report.reflect_sum_rate))
        }
    }
}

fn to_row(algorithm: Algorithm, axis: &str, sweep_value: f64, seed: u64, outcome: &RunOutcome) -> ResultRow {
    let t = outcome.timings();
    let (sum_rate, reflect_sum_rate, iterations, converged, degenerate, delta) = match outcome {
        RunOutcome::Bcd(r, reflect) => (r.sum_rate, *reflect, r.iterations, r.converged, r.degenerate, None),
        RunOutcome::Ts(r) => (r.sum_rate, r.reflect_sum_rate, r.iterations, r.converged, r.degenerate, Some(r.delta)),
    };
    ResultRow {
        algorithm,
        axis: axis.to_string(),
        sweep_value,
        seed,
        sum_rate,
        reflect_sum_rate,
        iterations,
        converged,
        degenerate,
        delta,
        aux_s: t.auxiliary,
        precoder_s: t.precoder,
        passive_s: t.passive,
        total_s: t.total(),
    }
}

fn bcd_trace(algorithm: Algorithm, part: &str, sweep_value: f64, seed: u64, trace: &[IterationRecord]) -> Vec<TraceRow> {
    trace
        .iter()
        .enumerate()
        .map(|(i, r)| TraceRow {
            algorithm,
            part: part.to_string(),
            sweep_value,
            seed,
            iteration: i + 1,
            surrogate: r.surrogate,
            sum_rate: Some(r.sum_rate),
            elapsed_s: Some(r.elapsed),
        })
        .collect()
}

fn trace_rows(algorithm: Algorithm, sweep_value: f64, seed: u64, outcome: &RunOutcome) -> Vec<TraceRow> {
    match outcome {
        RunOutcome::Bcd(r, _) => bcd_trace(algorithm, "es", sweep_value, seed, &r.trace),
        RunOutcome::Ts(r) => [("reflect", &r.reflect), ("transmit", &r.transmit)]
            .into_iter()
            .flat_map(|(part, mode)| {
                mode.surrogate_trace.iter().enumerate().map(move |(i, s)| TraceRow {
                    algorithm,
                    part: part.to_string(),
                    sweep_value,
                    seed,
                    iteration: i + 1,
                    surrogate: *s,
                    sum_rate: None,
                    elapsed_s: None,
                })
            })
            .collect(),
    }
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Per-cell means, in algorithm then sweep order.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut cells: BTreeMap<(Algorithm, u64), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        cells.entry((r.algorithm, r.sweep_value.to_bits())).or_default().push(r);
    }
    let mut out: Vec<SummaryRow> = cells
        .into_values()
        .map(|cell| {
            let rates: Vec<f64> = cell.iter().map(|r| r.sum_rate).collect();
            let (mean, std) = mean_std(&rates);
            let n = cell.len() as f64;
            SummaryRow {
                algorithm: cell[0].algorithm,
                axis: cell[0].axis.clone(),
                sweep_value: cell[0].sweep_value,
                runs: cell.len(),
                mean_sum_rate: mean,
                std_sum_rate: std,
                mean_reflect_sum_rate: cell.iter().map(|r| r.reflect_sum_rate).sum::<f64>() / n,
                mean_iterations: cell.iter().map(|r| r.iterations as f64).sum::<f64>() / n,
                mean_total_s: cell.iter().map(|r| r.total_s).sum::<f64>() / n,
                converged_runs: cell.iter().filter(|r| r.converged).count(),
                degenerate_runs: cell.iter().filter(|r| r.degenerate).count(),
            }
        })
        .collect();
    out.sort_by(|a, b| a.algorithm.cmp(&b.algorithm).then(a.sweep_value.total_cmp(&b.sweep_value)));
    out
}

/// Empirical CDF of the total runtimes of `rows`.
pub fn emit_runtime_cdf(rows: &[ResultRow]) -> Result<Vec<CdfPoint>> {
    if rows.is_empty() {
        return Err(Error::InvalidConfig("runtime CDF of an empty run set".into()));
    }
    let mut times: Vec<f64> = rows.iter().map(|r| r.total_s).collect();
    times.sort_by(f64::total_cmp);
    let n = times.len() as f64;
    Ok(times.into_iter().enumerate().map(|(i, t)| CdfPoint { runtime_s: t, cdf: (i + 1) as f64 / n }).collect())
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush().map_err(|source| Error::Io { path: path.display().to_string(), source })
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_path(path)?;
    reader.deserialize().map(|r| r.map_err(Error::from)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
    pub traces: Vec<TraceRow>,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy)]
struct Job {
    algorithm: Algorithm,
    cell: usize,
    seed: u64,
}

/// Run every (algorithm, sweep value, seed) of `spec` and write
/// `results.csv`, `summary.csv`, `runtime_cdf.csv` and, when traces are on,
/// `traces.csv` into `out_dir`.
pub fn run_experiment(spec: &ExperimentSpec, out_dir: &Path, exec: Execution) -> Result<ExperimentOutput> {
    spec.validate()?;
    fs::create_dir_all(out_dir).map_err(|source| Error::Io { path: out_dir.display().to_string(), source })?;
    let values = spec.sweep.values(&spec.scenario);
    let configs: Vec<SystemConfig> = (0..values.len()).map(|i| spec.sweep.config_at(&spec.scenario, i)).collect();
    let mut jobs = Vec::new();
    for &algorithm in &spec.algorithms {
        for cell in 0..values.len() {
            for seed in spec.seeds() {
                jobs.push(Job { algorithm, cell, seed });
            }
        }
    }
    let axis = spec.sweep.label();
    let results = par::map_slice(&jobs, exec, |job| -> Result<(ResultRow, Vec<TraceRow>)> {
        let outcome = run_algorithm(job.algorithm, &configs[job.cell], job.seed, &spec.options)?;
        let value = values[job.cell];
        let traces = if spec.traces { trace_rows(job.algorithm, value, job.seed, &outcome) } else { Vec::new() };
        Ok((to_row(job.algorithm, axis, value, job.seed, &outcome), traces))
    });
    let mut rows = Vec::with_capacity(jobs.len());
    let mut traces = Vec::new();
    for r in results {
        let (row, t) = r?;
        rows.push(row);
        traces.extend(t);
    }
    let summary = summarize(&rows);

    let mut cdf = Vec::new();
    for s in &summary {
        let cell: Vec<ResultRow> =
            rows.iter().filter(|r| r.algorithm == s.algorithm && r.sweep_value == s.sweep_value).cloned().collect();
        for p in emit_runtime_cdf(&cell)? {
            cdf.push(CdfRow { algorithm: s.algorithm, sweep_value: s.sweep_value, runtime_s: p.runtime_s, cdf: p.cdf });
        }
    }

    let mut files = Vec::new();
    let mut write = |name: &str, f: &dyn Fn(&Path) -> Result<()>| -> Result<()> {
        let path = out_dir.join(name);
        f(&path)?;
        files.push(path);
        Ok(())
    };
    write("results.csv", &|p| write_csv(p, &rows))?;
    write("summary.csv", &|p| write_csv(p, &summary))?;
    write("runtime_cdf.csv", &|p| write_csv(p, &cdf))?;
    if spec.traces {
        write("traces.csv", &|p| write_csv(p, &traces))?;
    }
    Ok(ExperimentOutput { rows, summary, traces, files })
}

/// Single run of every algorithm of `spec` at its first sweep value with seed
/// `seed`, writing the per-iteration traces to `trace.csv` in `out_dir`.
pub fn run_trace(spec: &ExperimentSpec, seed: u64, out_dir: &Path) -> Result<(Vec<TraceRow>, PathBuf)> {
    spec.validate()?;
    fs::create_dir_all(out_dir).map_err(|source| Error::Io { path: out_dir.display().to_string(), source })?;
    let value = spec.sweep.values(&spec.scenario)[0];
    let config = spec.sweep.config_at(&spec.scenario, 0);
    let mut rows = Vec::new();
    for &algorithm in &spec.algorithms {
        let outcome = run_algorithm(algorithm, &config, seed, &spec.options)?;
        rows.extend(trace_rows(algorithm, value, seed, &outcome));
    }
    let path = out_dir.join("trace.csv");
    write_csv(&path, &rows)?;
    Ok((rows, path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(total: f64) -> ResultRow {
        ResultRow {
            algorithm: Algorithm::NoRis,
            axis: "none".into(),
            sweep_value: 0.0,
            seed: 0,
            sum_rate: 1.0,
            reflect_sum_rate: 0.5,
            iterations: 1,
            converged: true,
            degenerate: false,
            delta: None,
            aux_s: 0.0,
            precoder_s: 0.0,
            passive_s: 0.0,
            total_s: total,
        }
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
            let quoted = format!("a = \"{}\"", a.name());
            #[derive(Deserialize)]
            struct W {
                a: Algorithm,
            }
            assert_eq!(toml::from_str::<W>(&quoted).unwrap().a, a);
        }
    }

    #[test]
    fn cdf_cases() {
        assert!(emit_runtime_cdf(&[]).is_err());
        let one = emit_runtime_cdf(&[row(3.0)]).unwrap();
        assert_eq!(one, vec![CdfPoint { runtime_s: 3.0, cdf: 1.0 }]);
        let four = emit_runtime_cdf(&[row(2.0), row(2.0), row(2.0), row(2.0)]).unwrap();
        assert_eq!(four.iter().map(|p| p.cdf).collect::<Vec<_>>(), vec![0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn cdf_matches_sorted_reference() {
        let times: Vec<f64> = (0..100).map(|i| ((i * 37) % 101) as f64 * 0.01).collect();
        let rows: Vec<ResultRow> = times.iter().map(|&t| row(t)).collect();
        let cdf = emit_runtime_cdf(&rows).unwrap();
        let mut reference = times.clone();
        reference.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (i, (p, t)) in cdf.iter().zip(&reference).enumerate() {
            assert_eq!(p.runtime_s, *t);
            assert_eq!(p.cdf, (i + 1) as f64 / 100.0);
        }
        assert!(cdf.windows(2).all(|w| w[0].cdf < w[1].cdf));
    }

    #[test]
    fn summary_means() {
        let mut rows = vec![row(1.0), row(2.0), row(3.0)];
        for (i, r) in rows.iter_mut().enumerate() {
            r.sum_rate = 0.1 * (i as f64 + 1.0);
        }
        let s = summarize(&rows);
        assert_eq!(s.len(), 1);
        assert!((s[0].mean_sum_rate - 0.2).abs() < 1e-12);
        assert!((s[0].std_sum_rate - 0.1).abs() < 1e-12);
        assert_eq!(s[0].runs, 3);
    }

    #[test]
    fn mean_std_edge_cases() {
        assert!(mean_std(&[]).0.is_nan());
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
    }
}
