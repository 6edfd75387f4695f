//! Optimisation state and the sum-rate objective.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scenario::{ChannelSet, Side, C64};

/// Tolerance on `|theta| = 1`.
pub const UNIT_MODULUS_TOL: f64 = 1e-12;
/// Relative tolerance on `sum ||w_k||^2 = P_t` after a rescale.
pub const POWER_TOL: f64 = 1e-9;

/// Phases and amplitude splits of every STAR-RIS element.
///
/// Only the reflection share `rho_r` is stored; the transmission share is
/// `1 - rho_r`, which makes energy conservation hold by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct StarRisConfiguration {
    theta_r: Vec<C64>,
    theta_t: Vec<C64>,
    rho_r: Vec<f64>,
}

impl StarRisConfiguration {
    pub fn new(theta_r: Vec<C64>, theta_t: Vec<C64>, rho_r: Vec<f64>) -> Result<Self> {
        let n = rho_r.len();
        if theta_r.len() != n || theta_t.len() != n {
            return Err(Error::Dimension(format!(
                "{} / {} phases for {n} elements",
                theta_r.len(),
                theta_t.len()
            )));
        }
        if let Some(t) = theta_r.iter().chain(&theta_t).find(|t| (t.norm() - 1.0).abs() > UNIT_MODULUS_TOL) {
            return Err(Error::InvalidConfig(format!("phase {t} is not unit modulus")));
        }
        if let Some(r) = rho_r.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::InvalidConfig(format!("amplitude split {r} outside [0, 1]")));
        }
        Ok(Self { theta_r, theta_t, rho_r })
    }

    /// Unit phases with the same split on every element.
    pub fn uniform(elements: usize, rho_r: f64) -> Self {
        Self {
            theta_r: vec![C64::new(1.0, 0.0); elements],
            theta_t: vec![C64::new(1.0, 0.0); elements],
            rho_r: vec![rho_r.clamp(0.0, 1.0); elements],
        }
    }

    pub fn elements(&self) -> usize {
        self.rho_r.len()
    }

    pub fn theta(&self, side: Side) -> &[C64] {
        match side {
            Side::Reflect => &self.theta_r,
            Side::Transmit => &self.theta_t,
        }
    }

    pub fn theta_r(&self) -> &[C64] {
        &self.theta_r
    }

    pub fn theta_t(&self) -> &[C64] {
        &self.theta_t
    }

    pub fn rho_r(&self) -> &[f64] {
        &self.rho_r
    }

    pub fn rho_t(&self) -> Vec<f64> {
        self.rho_r.iter().map(|r| 1.0 - r).collect()
    }

    /// Amplitude share of element `n` on `side`.
    pub fn rho(&self, side: Side, n: usize) -> f64 {
        match side {
            Side::Reflect => self.rho_r[n],
            Side::Transmit => 1.0 - self.rho_r[n],
        }
    }

    /// `phi[n] = sqrt(rho[n]) * theta[n]` for one side.
    pub fn coefficients(&self, side: Side) -> Vec<C64> {
        self.theta(side).iter().enumerate().map(|(n, t)| t * self.rho(side, n).sqrt()).collect()
    }

    pub fn set_phase(&mut self, side: Side, n: usize, theta: C64) {
        match side {
            Side::Reflect => self.theta_r[n] = theta,
            Side::Transmit => self.theta_t[n] = theta,
        }
    }

    pub fn set_split(&mut self, n: usize, rho_r: f64) {
        self.rho_r[n] = rho_r.clamp(0.0, 1.0);
    }

    /// Largest deviation of any phase from unit modulus.
    pub fn max_modulus_error(&self) -> f64 {
        self.theta_r.iter().chain(&self.theta_t).map(|t| (t.norm() - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Beamforming vectors, one column per user (`M x K`).
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderMatrix(pub DMatrix<C64>);

impl PrecoderMatrix {
    pub fn zeros(antennas: usize, users: usize) -> Self {
        Self(DMatrix::zeros(antennas, users))
    }

    pub fn from_columns(columns: &[DVector<C64>]) -> Self {
        Self(DMatrix::from_columns(columns))
    }

    pub fn users(&self) -> usize {
        self.0.ncols()
    }

    pub fn antennas(&self) -> usize {
        self.0.nrows()
    }

    pub fn column(&self, k: usize) -> DVector<C64> {
        self.0.column(k).into_owned()
    }

    /// Scale to total power `power`. Returns the applied amplitude factor, or
    /// `None` when the matrix is identically zero.
    pub fn rescale_to(&mut self, power: f64) -> Option<f64> {
        let p = transmit_power(self);
        if p <= 0.0 || !p.is_finite() {
            return None;
        }
        let s = (power / p).sqrt();
        self.0 *= C64::new(s, 0.0);
        Some(s)
    }
}

/// `sum_k ||w_k||^2`.
pub fn transmit_power(w: &PrecoderMatrix) -> f64 {
    w.0.iter().map(|x| x.norm_sqr()).sum()
}

/// Effective channel rows `h_k^H`, one row per user (`K x M`).
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannels(pub DMatrix<C64>);

impl EffectiveChannels {
    pub fn users(&self) -> usize {
        self.0.nrows()
    }

    pub fn row(&self, k: usize) -> DVector<C64> {
        self.0.row(k).transpose()
    }

    /// `gains[(k, i)] = h_k^H w_i`.
    pub fn gains(&self, w: &PrecoderMatrix) -> DMatrix<C64> {
        &self.0 * &w.0
    }
}

/// `h_k^H = h_d,k^H + phi_k^H G_k`, returned as the entries of the row.
pub fn effective_channel(k: usize, channels: &ChannelSet, ris: &StarRisConfiguration) -> Result<DVector<C64>> {
    if k >= channels.users() {
        return Err(Error::OutOfRange { index: k, len: channels.users() });
    }
    if ris.elements() != channels.elements() {
        return Err(Error::Dimension(format!(
            "{} RIS coefficients for {} elements",
            ris.elements(),
            channels.elements()
        )));
    }
    let phi = ris.coefficients(channels.sides[k]);
    let g = &channels.cascaded[k];
    let mut row = channels.direct[k].map(|x| x.conj());
    for (n, p) in phi.iter().enumerate() {
        let pc = p.conj();
        if pc == C64::new(0.0, 0.0) {
            continue;
        }
        for m in 0..row.len() {
            row[m] += pc * g[(n, m)];
        }
    }
    Ok(row)
}

pub fn effective_channels(channels: &ChannelSet, ris: &StarRisConfiguration) -> Result<EffectiveChannels> {
    let k = channels.users();
    let m = channels.antennas();
    let mut out = DMatrix::zeros(k, m);
    for user in 0..k {
        out.set_row(user, &effective_channel(user, channels, ris)?.transpose());
    }
    Ok(EffectiveChannels(out))
}

fn check_dims(w: &PrecoderMatrix, eff: &EffectiveChannels, noise: &[f64]) -> Result<()> {
    if w.users() != eff.users() || noise.len() != eff.users() || w.antennas() != eff.0.ncols() {
        return Err(Error::Dimension(format!(
            "precoder {}x{}, channels {}x{}, {} noise entries",
            w.antennas(),
            w.users(),
            eff.0.nrows(),
            eff.0.ncols(),
            noise.len()
        )));
    }
    Ok(())
}

/// SINR of user `k`.
pub fn sinr(k: usize, w: &PrecoderMatrix, eff: &EffectiveChannels, noise: &[f64]) -> Result<f64> {
    check_dims(w, eff, noise)?;
    if k >= eff.users() {
        return Err(Error::OutOfRange { index: k, len: eff.users() });
    }
    let h = eff.0.row(k);
    let mut signal = 0.0;
    let mut interference = 0.0;
    for i in 0..w.users() {
        let g = (h * w.0.column(i))[(0, 0)].norm_sqr();
        if i == k {
            signal = g;
        } else {
            interference += g;
        }
    }
    Ok(signal / (interference + noise[k]))
}

pub fn sinrs(w: &PrecoderMatrix, eff: &EffectiveChannels, noise: &[f64]) -> Result<Vec<f64>> {
    check_dims(w, eff, noise)?;
    let gains = eff.gains(w);
    Ok((0..eff.users())
        .map(|k| {
            let row_total: f64 = gains.row(k).iter().map(|g| g.norm_sqr()).sum();
            let signal = gains[(k, k)].norm_sqr();
            signal / (row_total - signal + noise[k])
        })
        .collect())
}

/// Per-user rates `log2(1 + sinr_k)` in bits per channel use.
pub fn user_rates(w: &PrecoderMatrix, eff: &EffectiveChannels, noise: &[f64]) -> Result<Vec<f64>> {
    Ok(sinrs(w, eff, noise)?.into_iter().map(|g| g.ln_1p() / std::f64::consts::LN_2).collect())
}

/// `sum_k log2(1 + sinr_k)`.
pub fn sum_rate(w: &PrecoderMatrix, channels: &ChannelSet, ris: &StarRisConfiguration, noise: &[f64]) -> Result<f64> {
    let eff = effective_channels(channels, ris)?;
    Ok(user_rates(w, &eff, noise)?.iter().sum())
}

/// Worst observed violations of the feasibility invariants.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct InvariantAudit {
    pub steps: usize,
    pub max_modulus_error: f64,
    pub max_power_error: f64,
    pub max_split_error: f64,
}

impl InvariantAudit {
    pub fn record(&mut self, ris: &StarRisConfiguration, w: &PrecoderMatrix, power: f64) {
        self.steps += 1;
        self.max_modulus_error = self.max_modulus_error.max(ris.max_modulus_error());
        let rel = (transmit_power(w) - power).abs() / power;
        self.max_power_error = self.max_power_error.max(rel);
        let split = ris
            .rho_r()
            .iter()
            .zip(ris.rho_t())
            .map(|(r, t)| {
                let range = if (0.0..=1.0).contains(r) && (0.0..=1.0).contains(&t) { 0.0 } else { 1.0 };
                ((r + t) - 1.0).abs().max(range)
            })
            .fold(0.0, f64::max);
        self.max_split_error = self.max_split_error.max(split);
    }

    pub fn merge(&mut self, other: &InvariantAudit) {
        self.steps += other.steps;
        self.max_modulus_error = self.max_modulus_error.max(other.max_modulus_error);
        self.max_power_error = self.max_power_error.max(other.max_power_error);
        self.max_split_error = self.max_split_error.max(other.max_split_error);
    }

    pub fn holds(&self) -> bool {
        self.max_modulus_error <= UNIT_MODULUS_TOL && self.max_power_error <= POWER_TOL && self.max_split_error == 0.0
    }
}
