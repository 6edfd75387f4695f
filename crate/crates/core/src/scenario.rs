//! Physical scenario and reproducible channel realisations.
//!
//! Large-scale fading follows a distance-based law
//! `PL(d) = C0 * (d / d0)^(-alpha)` with separate exponents for the direct,
//! BS-RIS and RIS-user links. Small-scale fading is Rayleigh on the direct
//! link and Rician on both RIS links, the LoS part coming from uniform linear
//! arrays (BS along x, RIS along y, half-wavelength spacing).
//!
//! Channel gains are expressed relative to the receiver noise floor
//! (`noise_floor_dbm`), so a noise variance of 1 in [`SystemConfig::noise`]
//! corresponds to the physical floor and transmit powers are read as dBm.
//! The constants are documented stand-ins: they reproduce the qualitative
//! behaviour of a STAR-RIS deployment, not any particular measurement campaign.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Point = [f64; 3];

/// RNG stream ids. Every consumer of randomness draws from its own stream of
/// the same seed so that, e.g., adding a baseline never perturbs the channels.
pub mod stream {
    pub const CHANNELS: u64 = 0;
    pub const INIT: u64 = 1;
    pub const RESTART: u64 = 2;
    pub const RANDOM_PHASES: u64 = 3;
}

/// ChaCha8 generator positioned on `(seed, stream)`.
pub fn rng_for(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Reflect,
    Transmit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub bs: Point,
    pub ris: Point,
    /// One position per user, reflect users first.
    pub users: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub reference_loss_db: f64,
    pub reference_distance: f64,
    pub direct_exponent: f64,
    pub bs_ris_exponent: f64,
    pub ris_user_exponent: f64,
    pub rician_factor_db: f64,
    pub noise_floor_dbm: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            reference_loss_db: -30.0,
            reference_distance: 1.0,
            direct_exponent: 3.5,
            bs_ris_exponent: 2.2,
            ris_user_exponent: 2.2,
            rician_factor_db: 10.0,
            noise_floor_dbm: -80.0,
        }
    }
}

impl ChannelParams {
    /// Linear large-scale gain at `distance` metres.
    pub fn path_loss(&self, distance: f64, exponent: f64) -> f64 {
        db_to_linear(self.reference_loss_db) * (distance / self.reference_distance).powf(-exponent)
    }

    fn rician_weights(&self) -> (f64, f64) {
        let k = db_to_linear(self.rician_factor_db);
        ((k / (1.0 + k)).sqrt(), (1.0 / (1.0 + k)).sqrt())
    }

    fn noise_scale(&self) -> f64 {
        db_to_linear(-self.noise_floor_dbm).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub bs_antennas: usize,
    pub elements: usize,
    /// Total transmit power, linear (mW when channels are noise-normalised).
    pub power: f64,
    /// Per-user noise variance relative to the noise floor.
    pub noise: Vec<f64>,
    pub geometry: Geometry,
    pub sides: Vec<Side>,
    pub channel: ChannelParams,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

impl SystemConfig {
    pub fn users(&self) -> usize {
        self.sides.len()
    }

    pub fn reflect_users(&self) -> usize {
        self.sides.iter().filter(|s| **s == Side::Reflect).count()
    }

    pub fn transmit_users(&self) -> usize {
        self.users() - self.reflect_users()
    }

    pub fn with_power_db(&self, power_db: f64) -> Self {
        Self { power: db_to_linear(power_db), ..self.clone() }
    }

    pub fn with_elements(&self, elements: usize) -> Self {
        Self { elements, ..self.clone() }
    }

    /// Keep the first `reflect` reflect users and the first `transmit`
    /// transmit users, preserving their order.
    pub fn truncate_users(&self, reflect: usize, transmit: usize) -> Result<Self> {
        let (kr, kt) = (self.reflect_users(), self.transmit_users());
        if reflect > kr || transmit > kt {
            return Err(Error::InvalidConfig(format!(
                "cannot keep {reflect}/{transmit} users out of {kr}/{kt}"
            )));
        }
        let keep: Vec<usize> = (0..reflect).chain(kr..kr + transmit).collect();
        let mut out = self.clone();
        out.sides = keep.iter().map(|&k| self.sides[k]).collect();
        out.noise = keep.iter().map(|&k| self.noise[k]).collect();
        out.geometry.users = keep.iter().map(|&k| self.geometry.users[k]).collect();
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.users();
        if self.bs_antennas == 0 {
            return Err(Error::InvalidConfig("BS needs at least one antenna".into()));
        }
        if k == 0 {
            return Err(Error::InvalidConfig("at least one user is required".into()));
        }
        if !(self.power > 0.0 && self.power.is_finite()) {
            return Err(Error::InvalidConfig(format!("transmit power must be positive, got {}", self.power)));
        }
        if self.noise.len() != k {
            return Err(Error::InvalidConfig(format!("{} noise variances for {k} users", self.noise.len())));
        }
        if let Some(bad) = self.noise.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidConfig(format!("noise variance must be positive, got {bad}")));
        }
        if self.geometry.users.len() != k {
            return Err(Error::InvalidConfig(format!(
                "{} user positions for {k} users",
                self.geometry.users.len()
            )));
        }
        if self.sides.windows(2).any(|w| w[0] == Side::Transmit && w[1] == Side::Reflect) {
            return Err(Error::InvalidConfig("reflect users must precede transmit users".into()));
        }
        // The STAR-RIS plane is y = ris.y; the BS side is the reflect side.
        let plane = self.geometry.ris[1];
        let bs_side = (self.geometry.bs[1] - plane).signum();
        for (i, (pos, side)) in self.geometry.users.iter().zip(&self.sides).enumerate() {
            let s = pos[1] - plane;
            let ok = match side {
                Side::Reflect => s * bs_side >= 0.0,
                Side::Transmit => s * bs_side <= 0.0,
            };
            if !ok {
                return Err(Error::InvalidConfig(format!(
                    "user {i} tagged {side:?} lies on the other side of the STAR-RIS plane"
                )));
            }
        }
        Ok(())
    }
}

/// All channels of one realisation.
///
/// `cascaded[k]` is `diag(conj(r_k)) * T`, so the effective channel row of user
/// `k` is `conj(h_d,k)^T + phi_k^H * cascaded[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub direct: Vec<DVector<C64>>,
    pub ris_user: Vec<DVector<C64>>,
    pub bs_ris: DMatrix<C64>,
    pub cascaded: Vec<DMatrix<C64>>,
    pub sides: Vec<Side>,
}

impl ChannelSet {
    pub fn new(
        direct: Vec<DVector<C64>>,
        ris_user: Vec<DVector<C64>>,
        bs_ris: DMatrix<C64>,
        sides: Vec<Side>,
    ) -> Result<Self> {
        let k = sides.len();
        if direct.len() != k || ris_user.len() != k {
            return Err(Error::Dimension(format!(
                "{} direct / {} RIS-user channels for {k} users",
                direct.len(),
                ris_user.len()
            )));
        }
        let m = bs_ris.ncols();
        if let Some(h) = direct.iter().find(|h| h.len() != m) {
            return Err(Error::Dimension(format!("direct channel of length {} with {m} antennas", h.len())));
        }
        let cascaded = ris_user.iter().map(|r| cascade(r, &bs_ris)).collect::<Result<Vec<_>>>()?;
        Ok(Self { direct, ris_user, bs_ris, cascaded, sides })
    }

    pub fn users(&self) -> usize {
        self.sides.len()
    }

    pub fn antennas(&self) -> usize {
        self.bs_ris.ncols()
    }

    pub fn elements(&self) -> usize {
        self.bs_ris.nrows()
    }

    pub fn users_on(&self, side: Side) -> Vec<usize> {
        (0..self.users()).filter(|&k| self.sides[k] == side).collect()
    }

    /// Channels of the listed users only, in the given order.
    pub fn subset(&self, users: &[usize]) -> ChannelSet {
        ChannelSet {
            direct: users.iter().map(|&k| self.direct[k].clone()).collect(),
            ris_user: users.iter().map(|&k| self.ris_user[k].clone()).collect(),
            bs_ris: self.bs_ris.clone(),
            cascaded: users.iter().map(|&k| self.cascaded[k].clone()).collect(),
            sides: users.iter().map(|&k| self.sides[k]).collect(),
        }
    }

    /// Same users and direct links with the RIS removed (N = 0).
    pub fn without_ris(&self) -> ChannelSet {
        let m = self.antennas();
        ChannelSet {
            direct: self.direct.clone(),
            ris_user: vec![DVector::zeros(0); self.users()],
            bs_ris: DMatrix::zeros(0, m),
            cascaded: vec![DMatrix::zeros(0, m); self.users()],
            sides: self.sides.clone(),
        }
    }
}

/// `diag(conj(r)) * T`, i.e. `out[n, m] = conj(r[n]) * T[n, m]`.
pub fn cascade(r: &DVector<C64>, bs_ris: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    if r.len() != bs_ris.nrows() {
        return Err(Error::Dimension(format!(
            "RIS-user channel of length {} against a {}x{} BS-RIS matrix",
            r.len(),
            bs_ris.nrows(),
            bs_ris.ncols()
        )));
    }
    let mut g = bs_ris.clone();
    for (n, mut row) in g.row_iter_mut().enumerate() {
        row *= r[n].conj();
    }
    Ok(g)
}

const BS_AXIS: Point = [1.0, 0.0, 0.0];
const RIS_AXIS: Point = [0.0, 1.0, 0.0];

fn distance(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Half-wavelength ULA response towards `to` as seen from `from`.
pub fn steering(len: usize, axis: &Point, from: &Point, to: &Point) -> DVector<C64> {
    let d = distance(from, to);
    let cos = if d > 0.0 {
        (axis[0] * (to[0] - from[0]) + axis[1] * (to[1] - from[1]) + axis[2] * (to[2] - from[2])) / d
    } else {
        0.0
    };
    DVector::from_fn(len, |i, _| C64::from_polar(1.0, PI * i as f64 * cos))
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draw one channel realisation. Pure in `(config, seed)`.
pub fn generate_channels(config: &SystemConfig, seed: u64) -> ChannelSet {
    let p = &config.channel;
    let (m, n) = (config.bs_antennas, config.elements);
    let g = &config.geometry;
    let (los, nlos) = p.rician_weights();
    let norm = p.noise_scale();
    let mut rng = rng_for(seed, stream::CHANNELS);

    let bs_ris_gain = p.path_loss(distance(&g.bs, &g.ris), p.bs_ris_exponent).sqrt() * norm;
    let a_ris = steering(n, &RIS_AXIS, &g.ris, &g.bs);
    let a_bs = steering(m, &BS_AXIS, &g.bs, &g.ris);
    let bs_ris = DMatrix::from_fn(n, m, |i, j| {
        let scatter = complex_gaussian(&mut rng);
        (a_ris[i] * a_bs[j].conj() * los + scatter * nlos) * bs_ris_gain
    });

    let mut direct = Vec::with_capacity(config.users());
    let mut ris_user = Vec::with_capacity(config.users());
    for pos in &g.users {
        let gain = p.path_loss(distance(&g.bs, pos), p.direct_exponent).sqrt() * norm;
        direct.push(DVector::from_fn(m, |_, _| complex_gaussian(&mut rng) * gain));
        let gain = p.path_loss(distance(&g.ris, pos), p.ris_user_exponent).sqrt();
        let a = steering(n, &RIS_AXIS, &g.ris, pos);
        ris_user.push(DVector::from_fn(n, |i, _| (a[i] * los + complex_gaussian(&mut rng) * nlos) * gain));
    }
    ChannelSet::new(direct, ris_user, bs_ris, config.sides.clone())
        .expect("generated channel dimensions are consistent")
}

/// Fully random channels with unit-variance entries; used by tests and the
/// oracle suite where geometry is irrelevant.
pub fn random_channels(
    antennas: usize,
    elements: usize,
    sides: &[Side],
    rng: &mut ChaCha8Rng,
) -> ChannelSet {
    let bs_ris = DMatrix::from_fn(elements, antennas, |_, _| complex_gaussian(rng));
    let direct = sides.iter().map(|_| DVector::from_fn(antennas, |_, _| complex_gaussian(rng))).collect();
    let ris_user = sides.iter().map(|_| DVector::from_fn(elements, |_, _| complex_gaussian(rng))).collect();
    ChannelSet::new(direct, ris_user, bs_ris, sides.to_vec()).expect("consistent dimensions")
}

pub fn sides_for(reflect: usize, transmit: usize) -> Vec<Side> {
    std::iter::repeat_n(Side::Reflect, reflect).chain(std::iter::repeat_n(Side::Transmit, transmit)).collect()
}

// ---------------------------------------------------------------------------
// Scenario files
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum NoiseSpec {
    Common(f64),
    PerUser(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryFile {
    pub bs: Point,
    pub ris: Point,
    #[serde(default)]
    pub reflect_users: Vec<Point>,
    #[serde(default)]
    pub transmit_users: Vec<Point>,
}

/// On-disk scenario schema (TOML).
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub bs_antennas: usize,
    pub elements: usize,
    pub power_db: f64,
    #[serde(default = "default_noise")]
    pub noise_variance: NoiseSpec,
    #[serde(default)]
    pub seed: u64,
    pub geometry: GeometryFile,
    #[serde(default)]
    pub channel: ChannelParams,
}

fn default_noise() -> NoiseSpec {
    NoiseSpec::Common(1.0)
}

/// A parsed scenario: the system configuration plus its nominal power and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: SystemConfig,
    pub power_db: f64,
    pub seed: u64,
}

impl Scenario {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        let file: ScenarioFile =
            toml::from_str(text).map_err(|e| Error::Parse { path: origin.to_string(), message: e.to_string() })?;
        Self::from_file(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn from_file(file: ScenarioFile) -> Result<Self> {
        let g = file.geometry;
        let sides = sides_for(g.reflect_users.len(), g.transmit_users.len());
        let k = sides.len();
        let noise = match file.noise_variance {
            NoiseSpec::Common(s) => vec![s; k],
            NoiseSpec::PerUser(v) => v,
        };
        let users = g.reflect_users.into_iter().chain(g.transmit_users).collect();
        let config = SystemConfig {
            bs_antennas: file.bs_antennas,
            elements: file.elements,
            power: db_to_linear(file.power_db),
            noise,
            geometry: Geometry { bs: g.bs, ris: g.ris, users },
            sides,
            channel: file.channel,
        };
        config.validate()?;
        Ok(Self { config, power_db: file.power_db, seed: file.seed })
    }
}

/// The deployment used throughout the experiments: BS at the origin, STAR-RIS
/// at (50, 10, 0) m, three reflect and two transmit users.
pub fn reference_config(bs_antennas: usize, elements: usize, power_db: f64) -> SystemConfig {
    let users = vec![[50.0, 0.0, 0.0], [55.0, 0.0, 0.0], [53.0, 5.0, 0.0], [50.0, 20.0, 0.0], [55.0, 15.0, 0.0]];
    SystemConfig {
        bs_antennas,
        elements,
        power: db_to_linear(power_db),
        noise: vec![1.0; 5],
        geometry: Geometry { bs: [0.0; 3], ris: [50.0, 10.0, 0.0], users },
        sides: sides_for(3, 2),
        channel: ChannelParams::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn cascade_identity() {
        let r = DVector::from_element(3, c(1.0, 0.0));
        let t = DMatrix::<C64>::identity(3, 3);
        assert_eq!(cascade(&r, &t).unwrap(), DMatrix::identity(3, 3));
    }

    #[test]
    fn cascade_conjugates() {
        let r = DVector::from_element(2, c(0.0, 1.0));
        let t = DMatrix::<C64>::identity(2, 2);
        let g = cascade(&r, &t).unwrap();
        assert_eq!(g, DMatrix::identity(2, 2) * c(0.0, -1.0));
    }

    #[test]
    fn cascade_matches_loop() {
        let mut rng = rng_for(9, 0);
        let r = DVector::from_fn(3, |_, _| complex_gaussian(&mut rng));
        let t = DMatrix::from_fn(3, 2, |_, _| complex_gaussian(&mut rng));
        let g = cascade(&r, &t).unwrap();
        for n in 0..3 {
            for m in 0..2 {
                let expect = C64::new(r[n].re, -r[n].im) * t[(n, m)];
                assert!((g[(n, m)] - expect).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn cascade_rejects_mismatch() {
        let r = DVector::from_element(2, c(1.0, 0.0));
        let t = DMatrix::<C64>::zeros(3, 2);
        assert!(matches!(cascade(&r, &t), Err(Error::Dimension(_))));
    }

    proptest! {
        #[test]
        fn cascade_is_conjugate_linear(seed in any::<u64>(), re in -3.0..3.0f64, im in -3.0..3.0f64) {
            let mut rng = rng_for(seed, 0);
            let r = DVector::from_fn(4, |_, _| complex_gaussian(&mut rng));
            let t = DMatrix::from_fn(4, 3, |_, _| complex_gaussian(&mut rng));
            let a = c(re, im);
            let lhs = cascade(&(r.clone() * a), &t).unwrap();
            let rhs = cascade(&r, &t).unwrap() * a.conj();
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = reference_config(4, 8, 10.0);
        assert_eq!(generate_channels(&cfg, 42), generate_channels(&cfg, 42));
        assert_ne!(generate_channels(&cfg, 42), generate_channels(&cfg, 43));
    }

    #[test]
    fn no_ris_configuration_has_empty_ris_channels() {
        let cfg = reference_config(4, 0, 10.0);
        let ch = generate_channels(&cfg, 1);
        assert_eq!(ch.elements(), 0);
        assert!(ch.ris_user.iter().all(|r| r.is_empty()));
        assert!(ch.cascaded.iter().all(|g| g.nrows() == 0 && g.ncols() == 4));
    }

    #[test]
    fn reference_config_is_valid() {
        reference_config(8, 40, 30.0).validate().unwrap();
    }

    #[test]
    fn validation_catches_bad_configs() {
        let base = reference_config(4, 8, 10.0);
        let mut c = base.clone();
        c.power = 0.0;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.noise[2] = -1.0;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.sides.swap(0, 4);
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.geometry.users[0] = [50.0, 30.0, 0.0];
        assert!(c.validate().is_err());
    }

    #[test]
    fn truncation_keeps_side_order() {
        let c = reference_config(4, 8, 10.0).truncate_users(2, 1).unwrap();
        assert_eq!(c.sides, vec![Side::Reflect, Side::Reflect, Side::Transmit]);
        assert_eq!(c.geometry.users[2], [50.0, 20.0, 0.0]);
        c.validate().unwrap();
    }

    #[test]
    fn scenario_file_roundtrip() {
        let text = r#"
            bs_antennas = 4
            elements = 8
            power_db = 10.0
            noise_variance = [1.0, 2.0]
            seed = 7
            [geometry]
            bs = [0.0, 0.0, 0.0]
            ris = [50.0, 10.0, 0.0]
            reflect_users = [[50.0, 0.0, 0.0]]
            transmit_users = [[50.0, 20.0, 0.0]]
            [channel]
            rician_factor_db = 3.0
        "#;
        let s = Scenario::from_toml_str(text, "inline").unwrap();
        assert_eq!(s.seed, 7);
        assert_eq!(s.config.noise, vec![1.0, 2.0]);
        assert_eq!(s.config.sides, vec![Side::Reflect, Side::Transmit]);
        assert!((s.config.power - 10.0).abs() < 1e-12);
        assert_eq!(s.config.channel.rician_factor_db, 3.0);
        assert_eq!(s.config.channel.direct_exponent, 3.5);
    }

    #[test]
    fn scenario_rejects_unknown_keys() {
        let text = "bs_antennas = 1\nelements = 0\npower_db = 0\nbogus = 1\n[geometry]\nbs=[0,0,0]\nris=[1,1,0]\nreflect_users=[[1,0,0]]\n";
        assert!(matches!(Scenario::from_toml_str(text, "x"), Err(Error::Parse { .. })));
    }
}
