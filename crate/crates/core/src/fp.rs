//! Fractional-programming surrogate and the block-coordinate-descent loop for
//! the energy-splitting protocol.
//!
//! The sum of log-SINR terms is lifted with a Lagrangian dual transform
//! (auxiliaries `lambda`) and a quadratic transform (auxiliaries `beta`). For
//! fixed auxiliaries the surrogate is a concave quadratic in the precoders and
//! a pair of quadratic forms in the RIS coefficients, so every block has a
//! closed-form (or 1-D bisection) maximiser.
//!
//! The precoder block uses the power-rescaled noise term
//! `sigma_k^2 * ||W||^2 / P_t`. Its maximiser is rescaled onto the power
//! sphere afterwards; the surrogate is invariant under `(W, beta) -> (cW,
//! beta / c)`, so `beta` is divided by the same factor and the rescale leaves
//! the surrogate untouched. Internally everything is in nats; reported rates
//! are in bits.

use std::f64::consts::LN_2;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{
    effective_channels, sinrs, transmit_power, user_rates, EffectiveChannels, InvariantAudit, PrecoderMatrix,
    StarRisConfiguration,
};
use crate::passive::{build_quadratic_forms, sweep_elements_observed, PassiveUpdate};
use crate::scenario::{rng_for, stream, ChannelSet, SystemConfig, C64};

/// Auxiliary variables of the two transforms.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryState {
    pub lambda: Vec<f64>,
    pub beta: Vec<C64>,
}

impl AuxiliaryState {
    pub fn zeros(users: usize) -> Self {
        Self { lambda: vec![0.0; users], beta: vec![C64::new(0.0, 0.0); users] }
    }

    /// Undo the effect of scaling the precoders by `scale` on the surrogate.
    pub fn compensate_rescale(&mut self, scale: f64) {
        for b in &mut self.beta {
            *b /= scale;
        }
    }
}

/// Closed-form auxiliaries from already-evaluated effective channels.
pub fn auxiliary_from_effective(w: &PrecoderMatrix, eff: &EffectiveChannels, noise: &[f64]) -> Result<AuxiliaryState> {
    let lambda = sinrs(w, eff, noise)?;
    let gains = eff.gains(w);
    let beta = (0..eff.users())
        .map(|k| {
            let total: f64 = gains.row(k).iter().map(|g| g.norm_sqr()).sum::<f64>() + noise[k];
            gains[(k, k)] * ((1.0 + lambda[k]).sqrt() / total)
        })
        .collect();
    Ok(AuxiliaryState { lambda, beta })
}

/// `lambda_k = sinr_k`, `beta_k = sqrt(1 + lambda_k) h_k^H w_k / (sum_i |h_k^H w_i|^2 + sigma_k^2)`.
pub fn update_auxiliary(
    w: &PrecoderMatrix,
    channels: &ChannelSet,
    ris: &StarRisConfiguration,
    noise: &[f64],
) -> Result<AuxiliaryState> {
    auxiliary_from_effective(w, &effective_channels(channels, ris)?, noise)
}

/// Surrogate from effective channels; see [`surrogate_value`].
pub fn surrogate_from_effective(
    w: &PrecoderMatrix,
    aux: &AuxiliaryState,
    eff: &EffectiveChannels,
    noise: &[f64],
    power: f64,
) -> f64 {
    let gains = eff.gains(w);
    let w_power = transmit_power(w);
    (0..eff.users())
        .map(|k| {
            let (l, b) = (aux.lambda[k], aux.beta[k]);
            let interference: f64 = gains.row(k).iter().map(|g| g.norm_sqr()).sum();
            l.ln_1p() - l + 2.0 * (1.0 + l).sqrt() * (b.conj() * gains[(k, k)]).re
                - b.norm_sqr() * (interference + noise[k] * w_power / power)
        })
        .sum()
}

/// Full FP surrogate in nats, including the `log(1 + lambda) - lambda` terms
/// and the power-rescaled noise. Tight (equal to `sum ln(1 + sinr_k)`) right
/// after [`update_auxiliary`] whenever `W` sits on the power sphere.
pub fn surrogate_value(
    w: &PrecoderMatrix,
    aux: &AuxiliaryState,
    channels: &ChannelSet,
    ris: &StarRisConfiguration,
    noise: &[f64],
    power: f64,
) -> Result<f64> {
    let eff = effective_channels(channels, ris)?;
    if aux.lambda.len() != eff.users() || aux.beta.len() != eff.users() {
        return Err(Error::Dimension(format!("{} auxiliaries for {} users", aux.lambda.len(), eff.users())));
    }
    Ok(surrogate_from_effective(w, aux, &eff, noise, power))
}

/// Output of a precoder update: the rescaled precoder and the amplitude factor
/// that was applied to reach the power budget.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderUpdate {
    pub precoder: PrecoderMatrix,
    pub scale: f64,
}

pub fn precoder_from_effective(
    aux: &AuxiliaryState,
    eff: &EffectiveChannels,
    noise: &[f64],
    power: f64,
) -> Result<PrecoderUpdate> {
    let k_all = eff.users();
    let m = eff.0.ncols();
    if aux.beta.iter().all(|b| b.norm_sqr() == 0.0) {
        return Err(Error::DegeneratePrecoder);
    }
    // h_i as columns (conjugates of the effective rows).
    let h = eff.0.adjoint();
    let mut a = DMatrix::<C64>::zeros(m, m);
    let mut diag = 0.0;
    for i in 0..k_all {
        let b2 = aux.beta[i].norm_sqr();
        if b2 == 0.0 {
            continue;
        }
        diag += b2 * noise[i] / power;
        let col = h.column(i);
        a += (col * col.adjoint()) * C64::new(b2, 0.0);
    }
    for d in 0..m {
        a[(d, d)] += diag;
    }
    let rhs = DMatrix::from_fn(m, k_all, |r, k| h[(r, k)] * aux.beta[k] * (1.0 + aux.lambda[k]).sqrt());
    let solved = match a.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => a.lu().solve(&rhs).ok_or(Error::DegeneratePrecoder)?,
    };
    let mut precoder = PrecoderMatrix(solved);
    let scale = precoder.rescale_to(power).ok_or(Error::DegeneratePrecoder)?;
    Ok(PrecoderUpdate { precoder, scale })
}

/// Closed-form maximiser of the rescaled-noise precoder objective, rescaled so
/// that `sum ||w_k||^2 = P_t`.
pub fn update_precoder(
    aux: &AuxiliaryState,
    channels: &ChannelSet,
    ris: &StarRisConfiguration,
    noise: &[f64],
    power: f64,
) -> Result<PrecoderUpdate> {
    precoder_from_effective(aux, &effective_channels(channels, ris)?, noise, power)
}

/// Matched filters `w_k = h_k`, scaled to the power budget.
pub fn matched_filter(eff: &EffectiveChannels, power: f64) -> Option<PrecoderMatrix> {
    let mut w = PrecoderMatrix(eff.0.adjoint());
    w.rescale_to(power).map(|_| w)
}

pub fn random_precoder(antennas: usize, users: usize, power: f64, rng: &mut ChaCha8Rng) -> PrecoderMatrix {
    let mut w = PrecoderMatrix(DMatrix::from_fn(antennas, users, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    }));
    if w.rescale_to(power).is_none() {
        w.0[(0, 0)] = C64::new(power.sqrt(), 0.0);
    }
    w
}

pub fn random_phases(elements: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    (0..elements).map(|_| C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))).collect()
}

/// Default starting point: uniform random phases from the run seed, equal
/// splits and matched-filter precoders at full power.
pub fn initial_state(
    channels: &ChannelSet,
    power: f64,
    seed: u64,
    rho_r: f64,
) -> Result<(StarRisConfiguration, PrecoderMatrix)> {
    let n = channels.elements();
    let mut rng = rng_for(seed, stream::INIT);
    let theta_r = random_phases(n, &mut rng);
    let theta_t = random_phases(n, &mut rng);
    let ris = StarRisConfiguration::new(theta_r, theta_t, vec![rho_r; n])?;
    let eff = effective_channels(channels, &ris)?;
    let w = matched_filter(&eff, power).unwrap_or_else(|| {
        random_precoder(channels.antennas(), channels.users(), power, &mut rng_for(seed, stream::RESTART))
    });
    Ok((ris, w))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EsOptions {
    pub max_iter: usize,
    /// Stop when the relative surrogate change between outer iterations drops
    /// below this value.
    pub tol: f64,
    pub seed: u64,
    /// Element sweeps per outer iteration.
    pub inner_sweeps: usize,
    /// Record the surrogate after every block (slow; for diagnostics).
    pub record_blocks: bool,
    /// Check feasibility invariants after every block.
    pub audit: bool,
}

impl Default for EsOptions {
    fn default() -> Self {
        Self { max_iter: 200, tol: 1e-6, seed: 0, inner_sweeps: 1, record_blocks: false, audit: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// Surrogate (nats) at the end of the iteration.
    pub surrogate: f64,
    /// True sum-rate (bits) at the end of the iteration.
    pub sum_rate: f64,
    /// Seconds since the start of the run, excluding bookkeeping.
    pub elapsed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Auxiliary,
    Precoder,
    Element(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockRecord {
    pub iteration: usize,
    pub block: Block,
    pub surrogate: f64,
}

/// Wall-clock seconds spent in each stage.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    /// Effective channels plus auxiliary update.
    pub auxiliary: f64,
    /// Precoder solve and rescale, given effective channels.
    pub precoder: f64,
    /// Quadratic-form build plus element sweeps.
    pub passive: f64,
}

impl StageTimings {
    pub fn total(&self) -> f64 {
        self.auxiliary + self.precoder + self.passive
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EsRunReport {
    pub ris: StarRisConfiguration,
    pub precoder: PrecoderMatrix,
    pub aux: AuxiliaryState,
    pub trace: Vec<IterationRecord>,
    pub iterations: usize,
    pub converged: bool,
    pub degenerate: bool,
    pub restarts: usize,
    pub blocks: Vec<BlockRecord>,
    pub audit: Option<InvariantAudit>,
    /// Final per-user rates in bits.
    pub user_rates: Vec<f64>,
    /// Final sum-rate in bits.
    pub sum_rate: f64,
    pub timings: StageTimings,
}

impl EsRunReport {
    pub fn final_surrogate(&self) -> Option<f64> {
        self.trace.last().map(|r| r.surrogate)
    }
}

/// One optimisation problem: channels, per-user noise and power budget.
#[derive(Debug, Clone, Copy)]
pub struct BcdProblem<'a> {
    pub channels: &'a ChannelSet,
    pub noise: &'a [f64],
    pub power: f64,
}

impl<'a> BcdProblem<'a> {
    pub fn new(channels: &'a ChannelSet, noise: &'a [f64], power: f64) -> Result<Self> {
        if noise.len() != channels.users() {
            return Err(Error::Dimension(format!("{} noise entries for {} users", noise.len(), channels.users())));
        }
        if !(power > 0.0) {
            return Err(Error::InvalidConfig(format!("power budget must be positive, got {power}")));
        }
        Ok(Self { channels, noise, power })
    }
}

fn relative_change(now: f64, prev: f64) -> f64 {
    (now - prev).abs() / prev.abs().max(1e-300)
}

/// Block-coordinate ascent from a given starting point. `mode` selects which
/// RIS coefficients the passive block may touch.
pub fn run_bcd(
    problem: BcdProblem<'_>,
    init_ris: StarRisConfiguration,
    init_w: PrecoderMatrix,
    mode: PassiveUpdate,
    opts: &EsOptions,
) -> Result<EsRunReport> {
    let BcdProblem { channels, noise, power } = problem;
    if init_ris.elements() != channels.elements() || init_w.users() != channels.users() || init_w.antennas() != channels.antennas() {
        return Err(Error::Dimension("initial state does not match the channels".into()));
    }
    let mut ris = init_ris;
    let mut w = init_w;
    let mut aux = AuxiliaryState::zeros(channels.users());
    let mut trace = Vec::new();
    let mut blocks = Vec::new();
    let mut audit = opts.audit.then(InvariantAudit::default);
    let mut timings = StageTimings::default();
    let mut converged = false;
    let mut degenerate = false;
    let mut restarts = 0;

    if let Some(a) = audit.as_mut() {
        a.record(&ris, &w, power);
    }

    let mut iteration = 0;
    while iteration < opts.max_iter {
        let t0 = Instant::now();
        let eff = effective_channels(channels, &ris)?;
        aux = auxiliary_from_effective(&w, &eff, noise)?;
        let t1 = Instant::now();
        timings.auxiliary += (t1 - t0).as_secs_f64();
        if opts.record_blocks {
            let s = surrogate_from_effective(&w, &aux, &eff, noise, power);
            blocks.push(BlockRecord { iteration, block: Block::Auxiliary, surrogate: s });
        }
        if let Some(a) = audit.as_mut() {
            a.record(&ris, &w, power);
        }

        let t1 = Instant::now();
        match precoder_from_effective(&aux, &eff, noise, power) {
            Ok(update) => {
                w = update.precoder;
                aux.compensate_rescale(update.scale);
            }
            Err(Error::DegeneratePrecoder) if restarts == 0 => {
                restarts += 1;
                w = random_precoder(channels.antennas(), channels.users(), power, &mut rng_for(opts.seed, stream::RESTART));
                timings.precoder += t1.elapsed().as_secs_f64();
                continue;
            }
            Err(Error::DegeneratePrecoder) => {
                degenerate = true;
                break;
            }
            Err(e) => return Err(e),
        }
        let t2 = Instant::now();
        timings.precoder += (t2 - t1).as_secs_f64();
        if opts.record_blocks {
            let s = surrogate_from_effective(&w, &aux, &eff, noise, power);
            blocks.push(BlockRecord { iteration, block: Block::Precoder, surrogate: s });
        }
        if let Some(a) = audit.as_mut() {
            a.record(&ris, &w, power);
        }

        let t2 = Instant::now();
        let mut observed = Vec::new();
        if mode != PassiveUpdate::Frozen {
            let qf = build_quadratic_forms(channels, &w, &aux)?;
            let diagnostics = opts.record_blocks || opts.audit;
            let mut observer = |n: usize, state: &StarRisConfiguration| {
                if diagnostics {
                    observed.push((n, state.clone()));
                }
            };
            ris = sweep_elements_observed(&qf, &ris, opts.inner_sweeps, mode, &mut observer);
        }
        timings.passive += t2.elapsed().as_secs_f64();
        for (n, state) in observed {
            if opts.record_blocks {
                let eff = effective_channels(channels, &state)?;
                let s = surrogate_from_effective(&w, &aux, &eff, noise, power);
                blocks.push(BlockRecord { iteration, block: Block::Element(n), surrogate: s });
            }
            if let Some(a) = audit.as_mut() {
                a.record(&state, &w, power);
            }
        }

        let eff = effective_channels(channels, &ris)?;
        let surrogate = surrogate_from_effective(&w, &aux, &eff, noise, power);
        let rate: f64 = user_rates(&w, &eff, noise)?.iter().sum();
        let prev = trace.last().map(|r: &IterationRecord| r.surrogate);
        trace.push(IterationRecord { surrogate, sum_rate: rate, elapsed: timings.total() });
        iteration += 1;
        if let Some(prev) = prev {
            if relative_change(surrogate, prev) < opts.tol {
                converged = true;
                break;
            }
        }
    }

    let eff = effective_channels(channels, &ris)?;
    let rates = user_rates(&w, &eff, noise)?;
    Ok(EsRunReport {
        sum_rate: rates.iter().sum(),
        user_rates: rates,
        ris,
        precoder: w,
        aux,
        iterations: trace.len(),
        trace,
        converged,
        degenerate,
        restarts,
        blocks,
        audit,
        timings,
    })
}

fn check_config(config: &SystemConfig, channels: &ChannelSet) -> Result<()> {
    config.validate()?;
    if channels.antennas() != config.bs_antennas || channels.users() != config.users() {
        return Err(Error::Dimension(format!(
            "channels for {} antennas / {} users, config has {} / {}",
            channels.antennas(),
            channels.users(),
            config.bs_antennas,
            config.users()
        )));
    }
    Ok(())
}

/// Element-wise STAR-RIS optimisation for the energy-splitting protocol.
pub fn run_es(config: &SystemConfig, channels: &ChannelSet, opts: &EsOptions) -> Result<EsRunReport> {
    check_config(config, channels)?;
    let (ris, w) = initial_state(channels, config.power, opts.seed, 0.5)?;
    run_bcd(BcdProblem::new(channels, &config.noise, config.power)?, ris, w, PassiveUpdate::Full, opts)
}

/// As [`run_es`] but from a caller-supplied starting point.
pub fn run_es_from(
    config: &SystemConfig,
    channels: &ChannelSet,
    ris: StarRisConfiguration,
    w: PrecoderMatrix,
    opts: &EsOptions,
) -> Result<EsRunReport> {
    check_config(config, channels)?;
    run_bcd(BcdProblem::new(channels, &config.noise, config.power)?, ris, w, PassiveUpdate::Full, opts)
}

/// Precoder-only FP iterations on fixed effective channels. Returns the final
/// precoder and its sum-rate in bits.
pub fn optimize_precoder(
    eff: &EffectiveChannels,
    noise: &[f64],
    power: f64,
    init: PrecoderMatrix,
    max_iter: usize,
    tol: f64,
) -> Result<(PrecoderMatrix, f64)> {
    let mut w = init;
    let mut prev = f64::NAN;
    for _ in 0..max_iter {
        let aux = auxiliary_from_effective(&w, eff, noise)?;
        let now: f64 = aux.lambda.iter().map(|l| l.ln_1p()).sum();
        if relative_change(now, prev) < tol {
            break;
        }
        prev = now;
        match precoder_from_effective(&aux, eff, noise, power) {
            Ok(u) => w = u.precoder,
            Err(Error::DegeneratePrecoder) => break,
            Err(e) => return Err(e),
        }
    }
    let rate = user_rates(&w, eff, noise)?.iter().sum::<f64>();
    Ok((w, rate))
}

/// Convert nats to bits.
pub fn nats_to_bits(x: f64) -> f64 {
    x / LN_2
}

/// Columns of `w` restricted to `users`.
pub fn select_columns(w: &PrecoderMatrix, users: &[usize]) -> PrecoderMatrix {
    let cols: Vec<DVector<C64>> = users.iter().map(|&k| w.column(k)).collect();
    if cols.is_empty() {
        return PrecoderMatrix::zeros(w.antennas(), 0);
    }
    PrecoderMatrix::from_columns(&cols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sinr;
    use crate::scenario::{random_channels, reference_config, generate_channels, sides_for};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn scalar_eff(h: C64) -> EffectiveChannels {
        EffectiveChannels(DMatrix::from_element(1, 1, h))
    }

    fn random_setup(seed: u64, m: usize, n: usize, kr: usize, kt: usize, power: f64) -> (ChannelSet, StarRisConfiguration, PrecoderMatrix, Vec<f64>) {
        let mut rng = rng_for(seed, 7);
        let ch = random_channels(m, n, &sides_for(kr, kt), &mut rng);
        let ris = StarRisConfiguration::new(random_phases(n, &mut rng), random_phases(n, &mut rng), (0..n).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap();
        let w = random_precoder(m, kr + kt, power, &mut rng);
        let noise = (0..kr + kt).map(|_| rng.random_range(0.5..2.0)).collect();
        (ch, ris, w, noise)
    }

    #[test]
    fn auxiliary_direct_substitution() {
        let w = PrecoderMatrix(DMatrix::from_element(1, 1, c(1.0, 0.0)));
        let aux = auxiliary_from_effective(&w, &scalar_eff(c(1.0, 0.0)), &[1.0]).unwrap();
        assert_eq!(aux.lambda, vec![1.0]);
        assert!((aux.beta[0] - c(2f64.sqrt() / 2.0, 0.0)).norm() < 1e-15);
        let aux = auxiliary_from_effective(&PrecoderMatrix::zeros(1, 1), &scalar_eff(c(1.0, 0.0)), &[1.0]).unwrap();
        assert_eq!(aux.lambda, vec![0.0]);
        assert_eq!(aux.beta, vec![c(0.0, 0.0)]);
    }

    #[test]
    fn beta_maximises_quadratic_transform() {
        let (ch, ris, w, noise) = random_setup(1, 3, 4, 1, 1, 5.0);
        let aux = update_auxiliary(&w, &ch, &ris, &noise).unwrap();
        let base = surrogate_value(&w, &aux, &ch, &ris, &noise, 5.0).unwrap();
        for k in 0..2 {
            for dr in -10..=10 {
                for di in -10..=10 {
                    let mut p = aux.clone();
                    p.beta[k] += c(dr as f64 * 0.01, di as f64 * 0.01) * aux.beta[k].norm().max(1e-3);
                    let v = surrogate_value(&w, &p, &ch, &ris, &noise, 5.0).unwrap();
                    assert!(v <= base + 1e-12, "beta perturbation improved surrogate");
                }
            }
        }
    }

    #[test]
    fn surrogate_is_tight_after_auxiliary_update() {
        let (ch, ris, w, noise) = random_setup(2, 3, 5, 2, 1, 4.0);
        let aux = update_auxiliary(&w, &ch, &ris, &noise).unwrap();
        let s = surrogate_value(&w, &aux, &ch, &ris, &noise, 4.0).unwrap();
        let eff = effective_channels(&ch, &ris).unwrap();
        let expect: f64 = (0..3).map(|k| sinr(k, &w, &eff, &noise).unwrap().ln_1p()).sum();
        assert!((s - expect).abs() < 1e-9);
    }

    #[test]
    fn surrogate_zero_auxiliaries() {
        let (ch, ris, w, noise) = random_setup(3, 2, 3, 1, 1, 1.0);
        let s = surrogate_value(&w, &AuxiliaryState::zeros(2), &ch, &ris, &noise, 1.0).unwrap();
        assert_eq!(s, 0.0);
    }

    #[test]
    fn surrogate_matches_rederivation() {
        let (ch, ris, w, noise) = random_setup(4, 2, 3, 1, 1, 2.0);
        let mut rng = rng_for(4, 99);
        let aux = AuxiliaryState {
            lambda: vec![rng.random_range(0.0..3.0), rng.random_range(0.0..3.0)],
            beta: vec![c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)), c(0.3, -0.2)],
        };
        let eff = effective_channels(&ch, &ris).unwrap();
        let hw = |k: usize, i: usize| -> C64 { (0..2).map(|m| eff.0[(k, m)] * w.0[(m, i)]).sum() };
        let p: f64 = w.0.iter().map(|x| x.norm_sqr()).sum();
        let mut expect = 0.0;
        for k in 0..2 {
            let l = aux.lambda[k];
            let b = aux.beta[k];
            expect += (1.0 + l).ln() - l;
            expect += 2.0 * (1.0 + l).sqrt() * (b.conj() * hw(k, k)).re;
            expect -= b.norm_sqr() * (hw(k, 0).norm_sqr() + hw(k, 1).norm_sqr() + noise[k] * p / 2.0);
        }
        let s = surrogate_value(&w, &aux, &ch, &ris, &noise, 2.0).unwrap();
        assert!((s - expect).abs() < 1e-12);
    }

    #[test]
    fn precoder_scalar_power() {
        let eff = scalar_eff(c(1.0, 0.0));
        let w0 = PrecoderMatrix(DMatrix::from_element(1, 1, c(1.0, 0.0)));
        let aux = auxiliary_from_effective(&w0, &eff, &[1.0]).unwrap();
        let up = precoder_from_effective(&aux, &eff, &[1.0], 1.0).unwrap();
        assert!((transmit_power(&up.precoder) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn precoder_rejects_all_zero_beta() {
        let eff = scalar_eff(c(1.0, 0.0));
        assert!(matches!(
            precoder_from_effective(&AuxiliaryState::zeros(1), &eff, &[1.0], 1.0),
            Err(Error::DegeneratePrecoder)
        ));
    }

    #[test]
    fn rescale_compensation_keeps_surrogate() {
        let (ch, ris, w, noise) = random_setup(5, 3, 4, 1, 1, 3.0);
        let aux = update_auxiliary(&w, &ch, &ris, &noise).unwrap();
        let before = surrogate_value(&w, &aux, &ch, &ris, &noise, 3.0).unwrap();
        let up = update_precoder(&aux, &ch, &ris, &noise, 3.0).unwrap();
        let mut comp = aux.clone();
        comp.compensate_rescale(up.scale);
        let after = surrogate_value(&up.precoder, &comp, &ch, &ris, &noise, 3.0).unwrap();
        let unscaled = PrecoderMatrix(up.precoder.0.map(|x| x / up.scale));
        let at_optimum = surrogate_value(&unscaled, &aux, &ch, &ris, &noise, 3.0).unwrap();
        assert!((after - at_optimum).abs() < 1e-9 * at_optimum.abs().max(1.0));
        assert!(after >= before - 1e-9);
        assert!((transmit_power(&up.precoder) - 3.0).abs() < 1e-9 * 3.0);
    }

    #[test]
    fn es_without_ris_improves_on_matched_filter() {
        let cfg = reference_config(4, 0, 10.0).truncate_users(2, 1).unwrap();
        let ch = generate_channels(&cfg, 11);
        let (ris, w) = initial_state(&ch, cfg.power, 0, 0.5).unwrap();
        let start = crate::model::sum_rate(&w, &ch, &ris, &cfg.noise).unwrap();
        let rep = run_es(&cfg, &ch, &EsOptions::default()).unwrap();
        assert!(rep.sum_rate >= start - 1e-9);
        assert_eq!(rep.ris.elements(), 0);
    }

    #[test]
    fn es_blocks_are_monotone_and_feasible() {
        let cfg = reference_config(4, 8, 10.0).truncate_users(2, 1).unwrap();
        let ch = generate_channels(&cfg, 5);
        let opts = EsOptions { max_iter: 30, record_blocks: true, audit: true, ..Default::default() };
        let rep = run_es(&cfg, &ch, &opts).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for b in &rep.blocks {
            assert!(b.surrogate >= prev - 1e-9, "{:?} dropped from {prev}", b);
            prev = b.surrogate;
        }
        assert!(rep.audit.unwrap().holds());
        assert!(!rep.degenerate);
    }

    #[test]
    fn es_fixed_point_consistency() {
        let cfg = reference_config(4, 8, 10.0).truncate_users(2, 1).unwrap();
        let ch = generate_channels(&cfg, 6);
        let opts = EsOptions { max_iter: 500, tol: 1e-6, ..Default::default() };
        let rep = run_es(&cfg, &ch, &opts).unwrap();
        assert!(rep.converged);
        let more = run_es_from(&cfg, &ch, rep.ris.clone(), rep.precoder.clone(), &EsOptions { max_iter: 1, ..opts.clone() }).unwrap();
        let a = rep.final_surrogate().unwrap();
        let b = more.final_surrogate().unwrap();
        assert!((b - a).abs() / a.abs() < 1e-5, "{a} vs {b}");
    }

    #[test]
    fn degenerate_state_is_flagged_not_hung() {
        // No direct link and no RIS: every beta vanishes, also after restart.
        let sides = sides_for(1, 0);
        let ch = ChannelSet::new(vec![DVector::zeros(2)], vec![DVector::zeros(0)], DMatrix::zeros(0, 2), sides).unwrap();
        let ris = StarRisConfiguration::uniform(0, 0.5);
        let w = random_precoder(2, 1, 1.0, &mut rng_for(0, 0));
        let rep = run_bcd(BcdProblem::new(&ch, &[1.0], 1.0).unwrap(), ris, w, PassiveUpdate::Full, &EsOptions::default()).unwrap();
        assert!(rep.degenerate);
        assert_eq!(rep.restarts, 1);
    }

    #[test]
    fn precoder_only_loop_ascends() {
        let (ch, ris, w, noise) = random_setup(9, 2, 0, 1, 1, 10.0);
        let eff = effective_channels(&ch, &ris).unwrap();
        let start: f64 = user_rates(&w, &eff, &noise).unwrap().iter().sum();
        let (_, rate) = optimize_precoder(&eff, &noise, 10.0, w, 200, 1e-9).unwrap();
        assert!(rate >= start - 1e-9);
    }
}
