//! Brute-force verifiers for the closed-form updates.
//!
//! Nothing in here uses the closed-form phase or split rules; objectives are
//! evaluated from scratch at every grid point.

use std::f64::consts::TAU;

use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};
use crate::fp::{matched_filter, optimize_precoder};
use crate::model::{effective_channels, PrecoderMatrix, StarRisConfiguration};
use crate::par::{self, Execution};
use crate::passive::{passive_objective, PassiveQuadraticForm};
use crate::scenario::{rng_for, ChannelSet, Side, SystemConfig, C64};

/// Improvement above which a perturbed point counts as better.
pub const PERTURBATION_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub phase_points: usize,
    pub split_points: usize,
    pub tolerance: f64,
}

impl GridSpec {
    pub fn new(phase_points: usize, split_points: usize, tolerance: f64) -> Result<Self> {
        let spec = Self { phase_points, split_points, tolerance };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.phase_points < 8 || self.split_points < 3 {
            return Err(Error::InvalidConfig(format!(
                "grid needs at least 8 phases and 3 splits, got {} and {}",
                self.phase_points, self.split_points
            )));
        }
        Ok(())
    }

    /// Grid with twice the resolution that contains every point of this one.
    pub fn refined(&self) -> Self {
        Self { phase_points: 2 * self.phase_points, split_points: 2 * self.split_points - 1, tolerance: self.tolerance }
    }

    pub fn phases(&self) -> Vec<C64> {
        (0..self.phase_points).map(|i| C64::from_polar(1.0, TAU * i as f64 / self.phase_points as f64)).collect()
    }

    pub fn splits(&self) -> Vec<f64> {
        let last = (self.split_points - 1) as f64;
        (0..self.split_points).map(|i| i as f64 / last).collect()
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { phase_points: 360, split_points: 101, tolerance: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGridResult {
    pub theta_r: C64,
    pub theta_t: C64,
    pub split: f64,
    /// Full passive objective at the best grid point.
    pub objective: f64,
}

fn with_element(ris: &StarRisConfiguration, n: usize, theta_r: C64, theta_t: C64, x: f64) -> StarRisConfiguration {
    let mut out = ris.clone();
    out.set_phase(Side::Reflect, n, theta_r);
    out.set_phase(Side::Transmit, n, theta_t);
    out.set_split(n, x);
    out
}

/// Best grid point for element `n` with every other element held fixed.
///
/// The objective splits into one term per side, and for a fixed split each
/// side's best phase does not depend on the split's magnitude, so the best
/// reflect phase is found at `x = 1`, the best transmit phase at `x = 0`, and
/// the split is scanned with both. This visits the same optimum as the full
/// `phases x phases x splits` product.
pub fn grid_maximize_element(
    qf: &PassiveQuadraticForm,
    ris: &StarRisConfiguration,
    n: usize,
    spec: &GridSpec,
) -> Result<ElementGridResult> {
    spec.validate()?;
    if n >= ris.elements() {
        return Err(Error::OutOfRange { index: n, len: ris.elements() });
    }
    if qf.elements() != ris.elements() {
        return Err(Error::Dimension("form and configuration sizes differ".into()));
    }
    let phases = spec.phases();
    let best_phase = |x: f64, side: Side| {
        let mut best = (phases[0], f64::NEG_INFINITY);
        for &p in &phases {
            let (tr, tt) = match side {
                Side::Reflect => (p, ris.theta_t()[n]),
                Side::Transmit => (ris.theta_r()[n], p),
            };
            let value = passive_objective(qf, &with_element(ris, n, tr, tt, x));
            if value > best.1 {
                best = (p, value);
            }
        }
        best.0
    };
    let theta_r = best_phase(1.0, Side::Reflect);
    let theta_t = best_phase(0.0, Side::Transmit);
    let mut best = ElementGridResult { theta_r, theta_t, split: 0.0, objective: f64::NEG_INFINITY };
    for x in spec.splits() {
        let value = passive_objective(qf, &with_element(ris, n, theta_r, theta_t, x));
        if value > best.objective {
            best.split = x;
            best.objective = value;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustiveResult {
    pub ris: StarRisConfiguration,
    pub precoder: PrecoderMatrix,
    /// Best sum-rate found, in bits.
    pub sum_rate: f64,
    /// Number of surface configurations evaluated.
    pub evaluated: usize,
}

/// Limits of the exhaustive search.
pub const EXHAUSTIVE_MAX_ELEMENTS: usize = 2;
pub const EXHAUSTIVE_MAX_PHASES: usize = 64;
pub const EXHAUSTIVE_MAX_ANTENNAS: usize = 2;
pub const EXHAUSTIVE_MAX_USERS: usize = 2;

/// Inner precoder loop settings of the exhaustive search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerLoop {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for InnerLoop {
    fn default() -> Self {
        Self { max_iter: 500, tol: 1e-9 }
    }
}

fn element_candidates(spec: &GridSpec) -> Vec<(C64, C64, f64)> {
    let phases = spec.phases();
    let mut out = Vec::new();
    for x in spec.splits() {
        if x == 0.0 {
            out.extend(phases.iter().map(|&p| (C64::new(1.0, 0.0), p, x)));
        } else if x == 1.0 {
            out.extend(phases.iter().map(|&p| (p, C64::new(1.0, 0.0), x)));
        } else {
            for &pr in &phases {
                out.extend(phases.iter().map(|&pt| (pr, pt, x)));
            }
        }
    }
    out
}

fn configuration_at(candidates: &[(C64, C64, f64)], index: usize, elements: usize) -> StarRisConfiguration {
    let mut ris = StarRisConfiguration::uniform(elements, 0.5);
    let mut rest = index;
    for n in 0..elements {
        let (tr, tt, x) = candidates[rest % candidates.len()];
        rest /= candidates.len();
        ris.set_phase(Side::Reflect, n, tr);
        ris.set_phase(Side::Transmit, n, tt);
        ris.set_split(n, x);
    }
    ris
}

/// Sum-rate (bits) of the inner precoder loop started from the matched filter.
pub fn best_precoder(
    config: &SystemConfig,
    channels: &ChannelSet,
    ris: &StarRisConfiguration,
    inner: InnerLoop,
) -> Result<(PrecoderMatrix, f64)> {
    let eff = effective_channels(channels, ris)?;
    match matched_filter(&eff, config.power) {
        Some(w) => optimize_precoder(&eff, &config.noise, config.power, w, inner.max_iter, inner.tol),
        None => Ok((PrecoderMatrix::zeros(channels.antennas(), channels.users()), 0.0)),
    }
}

/// Joint grid search over every element's phases and split, with the
/// precoder optimised at each grid point. Points with a zero split skip the
/// (irrelevant) reflect phase and vice versa.
pub fn exhaustive_small_instance(
    config: &SystemConfig,
    channels: &ChannelSet,
    spec: &GridSpec,
    inner: InnerLoop,
    exec: Execution,
) -> Result<ExhaustiveResult> {
    spec.validate()?;
    let n = channels.elements();
    if n > EXHAUSTIVE_MAX_ELEMENTS {
        return Err(Error::OracleGuard(format!("{n} elements, at most {EXHAUSTIVE_MAX_ELEMENTS}")));
    }
    if spec.phase_points > EXHAUSTIVE_MAX_PHASES {
        return Err(Error::OracleGuard(format!("{} phase points, at most {EXHAUSTIVE_MAX_PHASES}", spec.phase_points)));
    }
    if channels.antennas() > EXHAUSTIVE_MAX_ANTENNAS || channels.users() > EXHAUSTIVE_MAX_USERS {
        return Err(Error::OracleGuard(format!(
            "{} antennas and {} users, at most {EXHAUSTIVE_MAX_ANTENNAS} and {EXHAUSTIVE_MAX_USERS}",
            channels.antennas(),
            channels.users()
        )));
    }
    let candidates = element_candidates(spec);
    let total = candidates.len().pow(n as u32);
    let rates = par::map_indices(total, exec, |i| {
        let ris = configuration_at(&candidates, i, n);
        best_precoder(config, channels, &ris, inner).map(|(_, r)| r)
    });
    let mut best = (0, f64::NEG_INFINITY);
    for (i, r) in rates.into_iter().enumerate() {
        let r = r?;
        if r > best.1 {
            best = (i, r);
        }
    }
    let ris = configuration_at(&candidates, best.0, n);
    let (precoder, sum_rate) = best_precoder(config, channels, &ris, inner)?;
    Ok(ExhaustiveResult { ris, precoder, sum_rate, evaluated: total })
}

/// Coordinate-wise grid polish of a surface configuration: each element's
/// reflect phase, transmit phase and split are scanned in turn on `spec`'s
/// grids, keeping any point that raises the sum-rate.
pub fn polish_configuration(
    config: &SystemConfig,
    channels: &ChannelSet,
    start: ExhaustiveResult,
    spec: &GridSpec,
    inner: InnerLoop,
    rounds: usize,
) -> Result<ExhaustiveResult> {
    spec.validate()?;
    let mut best = start;
    let phases = spec.phases();
    let splits = spec.splits();
    for _ in 0..rounds {
        let before = best.sum_rate;
        for n in 0..best.ris.elements() {
            for axis in 0..3 {
                let trials: Vec<StarRisConfiguration> = match axis {
                    0 => phases.iter().map(|&p| with_element(&best.ris, n, p, best.ris.theta_t()[n], best.ris.rho_r()[n])).collect(),
                    1 => phases.iter().map(|&p| with_element(&best.ris, n, best.ris.theta_r()[n], p, best.ris.rho_r()[n])).collect(),
                    _ => splits.iter().map(|&x| with_element(&best.ris, n, best.ris.theta_r()[n], best.ris.theta_t()[n], x)).collect(),
                };
                for ris in trials {
                    let (precoder, rate) = best_precoder(config, channels, &ris, inner)?;
                    best.evaluated += 1;
                    if rate > best.sum_rate {
                        best = ExhaustiveResult { ris, precoder, sum_rate: rate, evaluated: best.evaluated };
                    }
                }
            }
        }
        if best.sum_rate <= before {
            break;
        }
    }
    Ok(best)
}

/// True iff none of `count` random perturbations of `point` (relative size
/// `radius`, passed through `project` to restore feasibility) raises
/// `objective` by more than [`PERTURBATION_SLACK`].
pub fn perturbation_check<F, P>(objective: F, point: &DVector<C64>, count: usize, radius: f64, project: P, seed: u64) -> bool
where
    F: Fn(&DVector<C64>) -> f64,
    P: Fn(&mut DVector<C64>),
{
    let base = objective(point);
    let scale = radius * point.norm().max(f64::MIN_POSITIVE);
    let mut rng = rng_for(seed, 0);
    for _ in 0..count {
        let mut dir = DVector::from_fn(point.len(), |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let norm = dir.norm();
        if norm == 0.0 {
            continue;
        }
        dir *= C64::new(scale / norm, 0.0);
        let mut trial = point + dir;
        project(&mut trial);
        if objective(&trial) > base + PERTURBATION_SLACK {
            return false;
        }
    }
    true
}

/// Projection onto the sphere `||x||^2 = power`.
pub fn project_to_power(power: f64) -> impl Fn(&mut DVector<C64>) {
    move |x: &mut DVector<C64>| {
        let norm = x.norm();
        if norm > 0.0 {
            *x *= C64::new(power.sqrt() / norm, 0.0);
        }
    }
}
