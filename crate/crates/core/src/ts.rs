//! Time-splitting protocol.
//!
//! The surface alternates between full reflection (a fraction `delta` of the
//! time) and full transmission (`1 - delta`). Each mode is a conventional
//! phase-only RIS problem over its own user group, solved with the same FP
//! block-coordinate machinery as the energy-splitting protocol but with the
//! noise of each user scaled by its mode's time share. For fixed per-mode
//! auxiliaries the FP objective is a concave quadratic in `delta`,
//! `(c_t - d_t) + a delta - b delta^2`, whose vertex (clamped to `[0, 1]`)
//! gives the time split.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fp::{auxiliary_from_effective, matched_filter, random_phases, run_bcd, AuxiliaryState, BcdProblem, EsOptions, StageTimings};
use crate::model::{effective_channels, user_rates, EffectiveChannels, InvariantAudit, PrecoderMatrix, StarRisConfiguration};
use crate::par;
use crate::passive::PassiveUpdate;
use crate::scenario::{rng_for, stream, ChannelSet, Side, SystemConfig, C64};

/// Converged state of one mode of the time-splitting protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSolution {
    pub side: Side,
    /// Global indices of the users served in this mode.
    pub users: Vec<usize>,
    pub channels: ChannelSet,
    pub ris: StarRisConfiguration,
    pub precoder: PrecoderMatrix,
    /// Auxiliaries evaluated at the final state under the share-scaled noise.
    pub aux: AuxiliaryState,
    /// Time share the mode was optimised for.
    pub share: f64,
    pub iterations: usize,
    /// Per-outer-iteration surrogate values of the last optimisation.
    pub surrogate_trace: Vec<f64>,
    pub audit: Option<InvariantAudit>,
    pub timings: StageTimings,
    pub degenerate: bool,
}

impl ModeSolution {
    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    fn effective(&self) -> Result<EffectiveChannels> {
        effective_channels(&self.channels, &self.ris)
    }

    fn empty(side: Side, channels: &ChannelSet) -> Self {
        let n = channels.elements();
        Self {
            side,
            users: Vec::new(),
            channels: channels.subset(&[]),
            ris: mode_configuration(side, vec![C64::new(1.0, 0.0); n]),
            precoder: PrecoderMatrix::zeros(channels.antennas(), 0),
            aux: AuxiliaryState::zeros(0),
            share: 0.0,
            iterations: 0,
            surrogate_trace: Vec::new(),
            audit: None,
            timings: StageTimings::default(),
            degenerate: false,
        }
    }
}

fn mode_configuration(side: Side, phases: Vec<C64>) -> StarRisConfiguration {
    let n = phases.len();
    let ones = vec![C64::new(1.0, 0.0); n];
    match side {
        Side::Reflect => StarRisConfiguration::new(phases, ones, vec![1.0; n]),
        Side::Transmit => StarRisConfiguration::new(ones, phases, vec![0.0; n]),
    }
    .expect("unit phases and binary splits are valid")
}

fn share_of(side: Side, delta: f64) -> f64 {
    match side {
        Side::Reflect => delta,
        Side::Transmit => 1.0 - delta,
    }
}

/// Phase-only optimisation of one mode at time split `delta`.
///
/// `warm` continues from a previous solution of the same mode; otherwise the
/// phases come from the run seed (both modes share one draw) and the precoders
/// are matched filters.
pub fn optimize_mode(
    side: Side,
    channels: &ChannelSet,
    config: &SystemConfig,
    delta: f64,
    warm: Option<&ModeSolution>,
    opts: &EsOptions,
) -> Result<ModeSolution> {
    let users = channels.users_on(side);
    if users.is_empty() {
        return Ok(ModeSolution::empty(side, channels));
    }
    let share = share_of(side, delta);
    if !(share > 0.0 && share <= 1.0) {
        return Err(Error::InvalidConfig(format!("mode {side:?} has time share {share}")));
    }
    let sub = channels.subset(&users);
    let noise: Vec<f64> = users.iter().map(|&k| config.noise[k] * share).collect();
    let (ris, w) = match warm {
        Some(prev) if prev.users == users => (prev.ris.clone(), prev.precoder.clone()),
        _ => {
            let phases = random_phases(channels.elements(), &mut rng_for(opts.seed, stream::INIT));
            let ris = mode_configuration(side, phases);
            let eff = effective_channels(&sub, &ris)?;
            let w = matched_filter(&eff, config.power).unwrap_or_else(|| {
                crate::fp::random_precoder(sub.antennas(), users.len(), config.power, &mut rng_for(opts.seed, stream::RESTART))
            });
            (ris, w)
        }
    };
    let report = run_bcd(BcdProblem::new(&sub, &noise, config.power)?, ris, w, PassiveUpdate::PhaseOnly, opts)?;
    let eff = effective_channels(&sub, &report.ris)?;
    let aux = auxiliary_from_effective(&report.precoder, &eff, &noise)?;
    Ok(ModeSolution {
        side,
        users,
        channels: sub,
        ris: report.ris,
        precoder: report.precoder,
        aux,
        share,
        iterations: report.iterations,
        surrogate_trace: report.trace.iter().map(|r| r.surrogate).collect(),
        audit: report.audit,
        timings: report.timings,
        degenerate: report.degenerate,
    })
}

/// Coefficients of the time-split objective `t(delta) = a delta - b delta^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsState {
    pub delta: f64,
    pub c_r: f64,
    pub c_t: f64,
    pub d_r: f64,
    pub d_t: f64,
    pub a: f64,
    pub b: f64,
}

impl TsState {
    pub fn from_parts(delta: f64, c_r: f64, c_t: f64, d_r: f64, d_t: f64) -> Self {
        Self { delta, c_r, c_t, d_r, d_t, a: c_r - c_t + 2.0 * d_t, b: d_r + d_t }
    }

    pub fn t(&self, delta: f64) -> f64 {
        self.a * delta - self.b * delta * delta
    }

    /// FP objective including the delta-independent part.
    pub fn objective(&self, delta: f64) -> f64 {
        self.c_t - self.d_t + self.t(delta)
    }
}

/// Mode constant `c` and noise weight `d` from fixed auxiliaries.
fn mode_terms(mode: &ModeSolution, noise: &[f64]) -> Result<(f64, f64)> {
    if mode.is_empty() {
        return Ok((0.0, 0.0));
    }
    let eff = mode.effective()?;
    let gains = eff.gains(&mode.precoder);
    let mut c = 0.0;
    let mut d = 0.0;
    for (j, &k) in mode.users.iter().enumerate() {
        let (l, b) = (mode.aux.lambda[j], mode.aux.beta[j]);
        let interference: f64 = gains.row(j).iter().map(|g| g.norm_sqr()).sum();
        c += l.ln_1p() - l + 2.0 * (1.0 + l).sqrt() * (b.conj() * gains[(j, j)]).re - b.norm_sqr() * interference;
        d += b.norm_sqr() * noise[k];
    }
    Ok((c, d))
}

pub fn ts_coefficients(reflect: &ModeSolution, transmit: &ModeSolution, noise: &[f64], delta: f64) -> Result<TsState> {
    let (c_r, d_r) = mode_terms(reflect, noise)?;
    let (c_t, d_t) = mode_terms(transmit, noise)?;
    Ok(TsState::from_parts(delta, c_r, c_t, d_r, d_t))
}

/// The FP objective `delta S_r(delta) + (1 - delta) S_t(delta)` for fixed
/// per-mode auxiliaries, evaluated term by term with the share-scaled noise.
pub fn ts_fp_objective(reflect: &ModeSolution, transmit: &ModeSolution, noise: &[f64], delta: f64) -> Result<f64> {
    let mut total = 0.0;
    for (mode, weight) in [(reflect, delta), (transmit, 1.0 - delta)] {
        if mode.is_empty() {
            continue;
        }
        let eff = mode.effective()?;
        let gains = eff.gains(&mode.precoder);
        let mut s = 0.0;
        for (j, &k) in mode.users.iter().enumerate() {
            let (l, b) = (mode.aux.lambda[j], mode.aux.beta[j]);
            let mut denom = weight * noise[k];
            for i in 0..mode.users.len() {
                denom += gains[(j, i)].norm_sqr();
            }
            s += l.ln_1p() - l + 2.0 * (1.0 + l).sqrt() * (b.conj() * gains[(j, j)]).re - b.norm_sqr() * denom;
        }
        total += weight * s;
    }
    Ok(total)
}

/// Maximiser of `a delta - b delta^2` on `[0, 1]`.
pub fn optimize_delta(ts: &TsState) -> Result<f64> {
    if ts.b < -1e-12 {
        return Err(Error::Invariant(format!("negative curvature coefficient b = {}", ts.b)));
    }
    if ts.b > 0.0 {
        return Ok((ts.a / (2.0 * ts.b)).clamp(0.0, 1.0));
    }
    Ok(if ts.a > 0.0 {
        1.0
    } else if ts.a < 0.0 {
        0.0
    } else {
        0.5
    })
}

/// Same maximiser found by bisection on the decreasing derivative `a - 2 b delta`.
pub fn optimize_delta_bisection(ts: &TsState) -> Result<f64> {
    if ts.b < -1e-12 {
        return Err(Error::Invariant(format!("negative curvature coefficient b = {}", ts.b)));
    }
    let slope = |d: f64| ts.a - 2.0 * ts.b * d;
    if ts.b <= 0.0 && ts.a == 0.0 {
        return Ok(0.5);
    }
    if slope(1.0) >= 0.0 {
        return Ok(1.0);
    }
    if slope(0.0) <= 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Sum-rate (bits) of one mode with its noise scaled by `share`; zero when the
/// mode has no users or no time.
fn mode_rate(mode: &ModeSolution, noise: &[f64], share: f64) -> Result<f64> {
    if mode.is_empty() || share <= 0.0 {
        return Ok(0.0);
    }
    let scaled: Vec<f64> = mode.users.iter().map(|&k| noise[k] * share).collect();
    Ok(user_rates(&mode.precoder, &mode.effective()?, &scaled)?.iter().sum())
}

/// Time-split sum-rate `delta R_r + (1 - delta) R_t` in bits.
pub fn ts_objective(reflect: &ModeSolution, transmit: &ModeSolution, noise: &[f64], delta: f64) -> Result<f64> {
    Ok(delta * mode_rate(reflect, noise, delta)? + (1.0 - delta) * mode_rate(transmit, noise, 1.0 - delta)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsSchedule {
    /// Re-optimise both modes after every delta update.
    Alternate,
    /// Optimise the modes once at the initial delta, then set delta.
    OneShot,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsOptions {
    pub es: EsOptions,
    pub max_rounds: usize,
    pub delta_tol: f64,
    pub schedule: TsSchedule,
}

impl Default for TsOptions {
    fn default() -> Self {
        Self { es: EsOptions::default(), max_rounds: 20, delta_tol: 1e-6, schedule: TsSchedule::Alternate }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsRound {
    /// Delta the modes were optimised at.
    pub delta: f64,
    /// Delta chosen from the coefficients of this round.
    pub next_delta: f64,
    /// True objective (bits) before and after the delta update.
    pub objective_before: f64,
    pub objective_after: f64,
    pub coefficients: TsState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsReport {
    pub delta: f64,
    pub reflect: ModeSolution,
    pub transmit: ModeSolution,
    /// Time-split sum-rate in bits.
    pub sum_rate: f64,
    /// Reflect-mode share of `sum_rate`.
    pub reflect_sum_rate: f64,
    pub rounds: Vec<TsRound>,
    pub schedule: TsSchedule,
    /// Whether delta settled within the round limit.
    pub converged: bool,
    /// BCD iterations over all rounds and both modes.
    pub iterations: usize,
    /// Stage times over all rounds and both modes.
    pub timings: StageTimings,
    pub degenerate: bool,
    audit: Option<InvariantAudit>,
}

impl TsReport {
    pub fn audit(&self) -> Option<InvariantAudit> {
        self.audit
    }
}

fn add_timings(total: &mut StageTimings, part: &StageTimings) {
    total.auxiliary += part.auxiliary;
    total.precoder += part.precoder;
    total.passive += part.passive;
}

/// Time-splitting optimisation: alternate per-mode FP-BCD with the closed-form
/// time split until delta settles.
pub fn run_ts(config: &SystemConfig, channels: &ChannelSet, opts: &TsOptions) -> Result<TsReport> {
    config.validate()?;
    if channels.users() != config.users() || channels.antennas() != config.bs_antennas {
        return Err(Error::Dimension("channels do not match the configuration".into()));
    }
    let (kr, kt) = (config.reflect_users(), config.transmit_users());
    let mut delta = match (kr, kt) {
        (_, 0) => 1.0,
        (0, _) => 0.0,
        _ => 0.5,
    };
    let mut reflect = ModeSolution::empty(Side::Reflect, channels);
    let mut transmit = ModeSolution::empty(Side::Transmit, channels);
    let mut rounds = Vec::new();
    let mut converged = kr == 0 || kt == 0;
    let mut iterations = 0;
    let mut timings = StageTimings::default();
    let mut audit: Option<InvariantAudit> = None;
    let mut degenerate = false;

    for _ in 0..opts.max_rounds.max(1) {
        let (r, t) = par::join(
            || -> Result<ModeSolution> {
                if delta > 0.0 {
                    optimize_mode(Side::Reflect, channels, config, delta, Some(&reflect), &opts.es)
                } else {
                    Ok(reflect.clone())
                }
            },
            || -> Result<ModeSolution> {
                if delta < 1.0 {
                    optimize_mode(Side::Transmit, channels, config, delta, Some(&transmit), &opts.es)
                } else {
                    Ok(transmit.clone())
                }
            },
        );
        let (r, t) = (r?, t?);
        for (mode, fresh) in [(&r, delta > 0.0), (&t, delta < 1.0)] {
            if fresh && !mode.is_empty() {
                iterations += mode.iterations;
                add_timings(&mut timings, &mode.timings);
                degenerate |= mode.degenerate;
                if let Some(a) = &mode.audit {
                    audit.get_or_insert_with(InvariantAudit::default).merge(a);
                }
            }
        }
        reflect = r;
        transmit = t;
        if kr == 0 || kt == 0 {
            break;
        }
        let coefficients = ts_coefficients(&reflect, &transmit, &config.noise, delta)?;
        let next = optimize_delta(&coefficients)?;
        rounds.push(TsRound {
            delta,
            next_delta: next,
            objective_before: ts_objective(&reflect, &transmit, &config.noise, delta)?,
            objective_after: ts_objective(&reflect, &transmit, &config.noise, next)?,
            coefficients,
        });
        let settled = (next - delta).abs() < opts.delta_tol;
        converged |= settled;
        delta = next;
        if settled || opts.schedule == TsSchedule::OneShot {
            break;
        }
    }

    Ok(TsReport {
        sum_rate: ts_objective(&reflect, &transmit, &config.noise, delta)?,
        reflect_sum_rate: delta * mode_rate(&reflect, &config.noise, delta)?,
        delta,
        reflect,
        transmit,
        rounds,
        schedule: opts.schedule,
        converged,
        iterations,
        timings,
        degenerate,
        audit,
    })
}

/// Helper for tests and the oracle suite: build a mode solution directly from
/// given precoders and auxiliaries.
pub fn mode_from_parts(
    side: Side,
    channels: &ChannelSet,
    phases: Vec<C64>,
    precoder: DMatrix<C64>,
    aux: AuxiliaryState,
) -> ModeSolution {
    let users = channels.users_on(side);
    ModeSolution {
        side,
        channels: channels.subset(&users),
        users,
        ris: mode_configuration(side, phases),
        precoder: PrecoderMatrix(precoder),
        aux,
        share: 0.0,
        iterations: 0,
        surrogate_trace: Vec::new(),
        audit: None,
        timings: StageTimings::default(),
        degenerate: false,
    }
}
