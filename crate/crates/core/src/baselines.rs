//! Reference schemes the element-wise optimiser is compared against.
//!
//! Every baseline is a restriction of the energy-splitting problem: a frozen
//! split, frozen phases, or both. They all run through the same BCD loop so
//! their reports have the same shape as an ES run.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fp::{initial_state, matched_filter, random_phases, random_precoder, run_bcd, run_es, BcdProblem, EsOptions, EsRunReport};
use crate::model::{effective_channels, StarRisConfiguration};
use crate::passive::PassiveUpdate;
use crate::scenario::{rng_for, stream, ChannelSet, Side, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    /// ES with every split frozen at one half.
    EqualEnergy,
    /// Equal splits and uniformly random phases; only the precoder is optimised.
    RandomStar,
    /// Reflect-only surface; transmit users are served over their direct links.
    ConventionalRis,
    /// Half the elements reflect only, the other half transmit only.
    TwoConventionalRis,
    /// Reflect-only surface with random phases.
    RandomConventionalRis,
    /// Direct links only.
    NoRis,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 6] = [
        BaselineKind::EqualEnergy,
        BaselineKind::RandomStar,
        BaselineKind::ConventionalRis,
        BaselineKind::TwoConventionalRis,
        BaselineKind::RandomConventionalRis,
        BaselineKind::NoRis,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::EqualEnergy => "equal-energy",
            BaselineKind::RandomStar => "random-star",
            BaselineKind::ConventionalRis => "conventional-ris",
            BaselineKind::TwoConventionalRis => "two-conventional-ris",
            BaselineKind::RandomConventionalRis => "random-conventional-ris",
            BaselineKind::NoRis => "no-ris",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaselineKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown baseline {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineReport {
    pub kind: BaselineKind,
    pub run: EsRunReport,
    /// Sum-rate over reflect-side users only, in bits. For the conventional
    /// RIS this is the accounting that drops the direct-link transmit users.
    pub reflect_sum_rate: f64,
}

impl BaselineReport {
    pub fn sum_rate(&self) -> f64 {
        self.run.sum_rate
    }
}

fn fixed_split(channels: &ChannelSet, config: &SystemConfig, seed: u64, rho_r: Vec<f64>) -> Result<StarRisConfiguration> {
    let (ris, _) = initial_state(channels, config.power, seed, 0.5)?;
    StarRisConfiguration::new(ris.theta_r().to_vec(), ris.theta_t().to_vec(), rho_r)
}

fn random_split(channels: &ChannelSet, seed: u64, rho_r: f64) -> Result<StarRisConfiguration> {
    let n = channels.elements();
    let mut rng = rng_for(seed, stream::RANDOM_PHASES);
    let theta_r = random_phases(n, &mut rng);
    let theta_t = random_phases(n, &mut rng);
    StarRisConfiguration::new(theta_r, theta_t, vec![rho_r; n])
}

/// Surface configuration a baseline starts from (and, for frozen baselines,
/// keeps). Phases come from the same draw as the ES initial state unless the
/// baseline is a random one.
pub fn baseline_configuration(kind: BaselineKind, config: &SystemConfig, channels: &ChannelSet, seed: u64) -> Result<StarRisConfiguration> {
    let n = channels.elements();
    match kind {
        BaselineKind::EqualEnergy => fixed_split(channels, config, seed, vec![0.5; n]),
        BaselineKind::ConventionalRis => fixed_split(channels, config, seed, vec![1.0; n]),
        BaselineKind::TwoConventionalRis => {
            if !n.is_multiple_of(2) {
                return Err(Error::InvalidConfig(format!("two conventional RISs need an even element count, got {n}")));
            }
            fixed_split(channels, config, seed, (0..n).map(|i| if i < n / 2 { 1.0 } else { 0.0 }).collect())
        }
        BaselineKind::RandomStar => random_split(channels, seed, 0.5),
        BaselineKind::RandomConventionalRis => random_split(channels, seed, 1.0),
        BaselineKind::NoRis => Ok(StarRisConfiguration::uniform(0, 0.5)),
    }
}

fn update_mode(kind: BaselineKind) -> PassiveUpdate {
    match kind {
        BaselineKind::EqualEnergy | BaselineKind::ConventionalRis | BaselineKind::TwoConventionalRis => PassiveUpdate::PhaseOnly,
        BaselineKind::RandomStar | BaselineKind::RandomConventionalRis | BaselineKind::NoRis => PassiveUpdate::Frozen,
    }
}

pub fn run_baseline(kind: BaselineKind, config: &SystemConfig, channels: &ChannelSet, opts: &EsOptions) -> Result<BaselineReport> {
    let run = if kind == BaselineKind::NoRis {
        run_es(&config.with_elements(0), &channels.without_ris(), opts)?
    } else {
        config.validate()?;
        if channels.users() != config.users() || channels.antennas() != config.bs_antennas {
            return Err(Error::Dimension("channels do not match the configuration".into()));
        }
        let ris = baseline_configuration(kind, config, channels, opts.seed)?;
        let eff = effective_channels(channels, &ris)?;
        let w = matched_filter(&eff, config.power).unwrap_or_else(|| {
            random_precoder(channels.antennas(), channels.users(), config.power, &mut rng_for(opts.seed, stream::RESTART))
        });
        run_bcd(BcdProblem::new(channels, &config.noise, config.power)?, ris, w, update_mode(kind), opts)?
    };
    let reflect_sum_rate = channels.users_on(Side::Reflect).iter().map(|&k| run.user_rates[k]).sum();
    Ok(BaselineReport { kind, run, reflect_sum_rate })
}
