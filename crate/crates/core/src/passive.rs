//! Element-wise passive beamforming for the STAR-RIS.
//!
//! With the precoders and the fractional-programming auxiliaries fixed, the
//! surrogate depends on the RIS only through two independent quadratic forms,
//! `2 Re{phi_s^H v_s} - phi_s^H U_s phi_s` for `s` in {reflect, transmit}.
//! Each element is then updated in turn: both phases align with their
//! residuals in closed form, and the reflection share solves a concave 1-D
//! problem by bisection on its derivative.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fp::AuxiliaryState;
use crate::model::{PrecoderMatrix, StarRisConfiguration};
use crate::scenario::{ChannelSet, Side, C64};

/// Endpoint guard for the split bisection; the derivative diverges at 0 and 1.
pub const SPLIT_EPS: f64 = 1e-12;
const BISECTION_WIDTH: f64 = 1e-10;
const BISECTION_ROOT: f64 = 1e-12;

/// Which RIS coefficients a passive sweep may change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PassiveUpdate {
    /// Phases and amplitude splits.
    Full,
    /// Phases only; splits stay where they are.
    PhaseOnly,
    /// Nothing; the RIS is held fixed.
    Frozen,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PassiveQuadraticForm {
    pub u_r: DMatrix<C64>,
    pub u_t: DMatrix<C64>,
    pub v_r: DVector<C64>,
    pub v_t: DVector<C64>,
}

impl PassiveQuadraticForm {
    pub fn zeros(elements: usize) -> Self {
        Self {
            u_r: DMatrix::zeros(elements, elements),
            u_t: DMatrix::zeros(elements, elements),
            v_r: DVector::zeros(elements),
            v_t: DVector::zeros(elements),
        }
    }

    pub fn elements(&self) -> usize {
        self.v_r.len()
    }

    pub fn u(&self, side: Side) -> &DMatrix<C64> {
        match side {
            Side::Reflect => &self.u_r,
            Side::Transmit => &self.u_t,
        }
    }

    pub fn v(&self, side: Side) -> &DVector<C64> {
        match side {
            Side::Reflect => &self.v_r,
            Side::Transmit => &self.v_t,
        }
    }
}

/// Quadratic forms of the passive subproblem for the current `(W, aux)`.
///
/// Reflect-side sums run over reflect users, transmit-side sums over transmit
/// users; the interference sum inside each term runs over all users.
pub fn build_quadratic_forms(
    channels: &ChannelSet,
    w: &PrecoderMatrix,
    aux: &AuxiliaryState,
) -> Result<PassiveQuadraticForm> {
    let k_all = channels.users();
    if w.users() != k_all || aux.lambda.len() != k_all || w.antennas() != channels.antennas() {
        return Err(Error::Dimension(format!(
            "{k_all} users, precoder {}x{}, {} auxiliaries",
            w.antennas(),
            w.users(),
            aux.lambda.len()
        )));
    }
    let mut qf = PassiveQuadraticForm::zeros(channels.elements());
    for k in 0..k_all {
        let beta = aux.beta[k];
        let weight = beta.norm_sqr();
        let gw = &channels.cascaded[k] * &w.0; // column i = G_k w_i
        let direct_gain = w.0.adjoint() * &channels.direct[k]; // entry i = w_i^H h_d,k
        let (u, v) = match channels.sides[k] {
            Side::Reflect => (&mut qf.u_r, &mut qf.v_r),
            Side::Transmit => (&mut qf.u_t, &mut qf.v_t),
        };
        if weight > 0.0 {
            *u += (&gw * gw.adjoint()) * C64::new(weight, 0.0);
            *v -= (&gw * direct_gain) * C64::new(weight, 0.0);
        }
        *v += gw.column(k) * (beta.conj() * (1.0 + aux.lambda[k]).sqrt());
    }
    Ok(qf)
}

/// Passive objective `sum_s 2 Re{phi_s^H v_s} - phi_s^H U_s phi_s`.
pub fn passive_objective(qf: &PassiveQuadraticForm, ris: &StarRisConfiguration) -> f64 {
    [Side::Reflect, Side::Transmit]
        .iter()
        .map(|&side| {
            let phi = DVector::from_vec(ris.coefficients(side));
            let linear = phi.dotc(qf.v(side)).re;
            let quad = phi.dotc(&(qf.u(side) * &phi)).re;
            2.0 * linear - quad
        })
        .sum()
}

fn residual(n: usize, u: &DMatrix<C64>, v: &DVector<C64>, phi: &[C64]) -> C64 {
    let mut a = v[n];
    for (i, p) in phi.iter().enumerate() {
        if i != n {
            a -= u[(n, i)] * p;
        }
    }
    a
}

/// Residuals `(a_r, a_t)` of element `n`: the linear coefficient left once all
/// other elements are held fixed.
pub fn element_residual(n: usize, qf: &PassiveQuadraticForm, ris: &StarRisConfiguration) -> Result<(C64, C64)> {
    let len = qf.elements();
    if n >= len {
        return Err(Error::OutOfRange { index: n, len });
    }
    if ris.elements() != len {
        return Err(Error::Dimension(format!("{} RIS elements for a {len}-element form", ris.elements())));
    }
    let phi_r = ris.coefficients(Side::Reflect);
    let phi_t = ris.coefficients(Side::Transmit);
    Ok((residual(n, &qf.u_r, &qf.v_r, &phi_r), residual(n, &qf.u_t, &qf.v_t, &phi_t)))
}

/// Unit-modulus phase aligned with `a`; `1` when `a` vanishes.
pub fn optimal_phase(a: C64) -> C64 {
    let r = a.norm();
    if r > 0.0 && r.is_finite() {
        a / r
    } else {
        C64::new(1.0, 0.0)
    }
}

/// Data of the one-element split problem
/// `f(x) = sqrt(x) b_r + sqrt(1 - x) b_t - x u_diff`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementContext {
    pub a_r: C64,
    pub a_t: C64,
    pub b_r: f64,
    pub b_t: f64,
    /// `u_r[n, n] - u_t[n, n]`.
    pub u_diff: f64,
}

impl ElementContext {
    /// Context after both phases have been aligned, so `b = 2 |a|`.
    pub fn aligned(a_r: C64, a_t: C64, u_rr: f64, u_tt: f64) -> Self {
        Self { a_r, a_t, b_r: 2.0 * a_r.norm(), b_t: 2.0 * a_t.norm(), u_diff: u_rr - u_tt }
    }

    pub fn objective(&self, x: f64) -> f64 {
        x.sqrt() * self.b_r + (1.0 - x).sqrt() * self.b_t - x * self.u_diff
    }

    /// `f'(x)`; monotonically decreasing whenever `b_r, b_t >= 0`.
    pub fn derivative(&self, x: f64) -> f64 {
        0.5 * self.b_r / x.sqrt() - 0.5 * self.b_t / (1.0 - x).sqrt() - self.u_diff
    }

    pub fn curvature(&self, x: f64) -> f64 {
        -0.25 * self.b_r * x.powf(-1.5) - 0.25 * self.b_t * (1.0 - x).powf(-1.5)
    }
}

/// Global maximiser of `ctx.objective` on `[0, 1]`.
///
/// `current` is returned unchanged when the objective is flat (no residual and
/// equal self-interference on both sides).
pub fn optimal_split(ctx: &ElementContext, current: f64) -> f64 {
    if ctx.b_r == 0.0 && ctx.b_t == 0.0 {
        return if ctx.u_diff > 0.0 {
            0.0
        } else if ctx.u_diff < 0.0 {
            1.0
        } else {
            current.clamp(0.0, 1.0)
        };
    }
    let (mut lo, mut hi) = (SPLIT_EPS, 1.0 - SPLIT_EPS);
    if ctx.derivative(hi) >= 0.0 {
        return 1.0;
    }
    if ctx.derivative(lo) <= 0.0 {
        return 0.0;
    }
    while hi - lo >= BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        let g = ctx.derivative(mid);
        if g.abs() < BISECTION_ROOT {
            return mid;
        }
        if g > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One element update as a standalone step: align both phases against the
/// residuals, then pick the best split (unless `mode` forbids it).
pub fn update_element(
    n: usize,
    qf: &PassiveQuadraticForm,
    ris: &mut StarRisConfiguration,
    mode: PassiveUpdate,
) -> Result<()> {
    let (a_r, a_t) = element_residual(n, qf, ris)?;
    apply_element(n, a_r, a_t, qf, ris, mode);
    Ok(())
}

fn apply_element(n: usize, a_r: C64, a_t: C64, qf: &PassiveQuadraticForm, ris: &mut StarRisConfiguration, mode: PassiveUpdate) {
    if mode == PassiveUpdate::Frozen {
        return;
    }
    ris.set_phase(Side::Reflect, n, optimal_phase(a_r));
    ris.set_phase(Side::Transmit, n, optimal_phase(a_t));
    if mode == PassiveUpdate::Full {
        let ctx = ElementContext::aligned(a_r, a_t, qf.u_r[(n, n)].re, qf.u_t[(n, n)].re);
        let x = optimal_split(&ctx, ris.rho_r()[n]);
        ris.set_split(n, x);
    }
}

/// `sweeps` ascending passes over all elements.
pub fn sweep_elements(
    qf: &PassiveQuadraticForm,
    ris: &StarRisConfiguration,
    sweeps: usize,
    mode: PassiveUpdate,
) -> StarRisConfiguration {
    sweep_elements_observed(qf, ris, sweeps, mode, &mut |_, _| {})
}

/// As [`sweep_elements`], calling `observer(n, &state)` after every element.
pub fn sweep_elements_observed(
    qf: &PassiveQuadraticForm,
    ris: &StarRisConfiguration,
    sweeps: usize,
    mode: PassiveUpdate,
    observer: &mut dyn FnMut(usize, &StarRisConfiguration),
) -> StarRisConfiguration {
    let mut out = ris.clone();
    if mode == PassiveUpdate::Frozen {
        return out;
    }
    let n_el = out.elements();
    let mut phi_r = out.coefficients(Side::Reflect);
    let mut phi_t = out.coefficients(Side::Transmit);
    for _ in 0..sweeps {
        for n in 0..n_el {
            let a_r = residual(n, &qf.u_r, &qf.v_r, &phi_r);
            let a_t = residual(n, &qf.u_t, &qf.v_t, &phi_t);
            apply_element(n, a_r, a_t, qf, &mut out, mode);
            let x = out.rho_r()[n];
            phi_r[n] = out.theta_r()[n] * x.sqrt();
            phi_t[n] = out.theta_t()[n] * (1.0 - x).sqrt();
            observer(n, &out);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fp::update_auxiliary;
    use crate::scenario::{random_channels, rng_for, sides_for};
    use proptest::prelude::*;
    use rand::Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_ris(rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> StarRisConfiguration {
        let mut ph = || C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
        let tr: Vec<_> = (0..n).map(|_| ph()).collect();
        let tt: Vec<_> = (0..n).map(|_| ph()).collect();
        let rho = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        StarRisConfiguration::new(tr, tt, rho).unwrap()
    }

    fn random_problem(seed: u64, m: usize, n: usize, kr: usize, kt: usize) -> (ChannelSet, StarRisConfiguration, PrecoderMatrix, AuxiliaryState) {
        let mut rng = rng_for(seed, 0);
        let ch = random_channels(m, n, &sides_for(kr, kt), &mut rng);
        let ris = random_ris(&mut rng, n);
        let w = PrecoderMatrix(DMatrix::from_fn(m, kr + kt, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))));
        let noise = vec![1.0; kr + kt];
        let aux = update_auxiliary(&w, &ch, &ris, &noise).unwrap();
        (ch, ris, w, aux)
    }

    /// Naive re-derivation of the quadratic forms with explicit loops.
    fn forms_by_loops(ch: &ChannelSet, w: &PrecoderMatrix, aux: &AuxiliaryState) -> PassiveQuadraticForm {
        let n = ch.elements();
        let m = ch.antennas();
        let k_all = ch.users();
        let mut qf = PassiveQuadraticForm::zeros(n);
        for k in 0..k_all {
            let g = |row: usize, i: usize| -> C64 {
                let mut s = c(0.0, 0.0);
                for col in 0..m {
                    s += ch.ris_user[k][row].conj() * ch.bs_ris[(row, col)] * w.0[(col, i)];
                }
                s
            };
            let b2 = aux.beta[k].norm_sqr();
            let (u, v) = match ch.sides[k] {
                Side::Reflect => (&mut qf.u_r, &mut qf.v_r),
                Side::Transmit => (&mut qf.u_t, &mut qf.v_t),
            };
            for p in 0..n {
                v[p] += aux.beta[k].conj() * (1.0 + aux.lambda[k]).sqrt() * g(p, k);
                for i in 0..k_all {
                    let mut wh = c(0.0, 0.0);
                    for col in 0..m {
                        wh += w.0[(col, i)].conj() * ch.direct[k][col];
                    }
                    v[p] -= b2 * g(p, i) * wh;
                    for q in 0..n {
                        u[(p, q)] += b2 * g(p, i) * g(q, i).conj();
                    }
                }
            }
        }
        qf
    }

    #[test]
    fn zero_beta_gives_zero_forms() {
        let (ch, _, w, mut aux) = random_problem(1, 2, 3, 1, 1);
        aux.beta.iter_mut().for_each(|b| *b = c(0.0, 0.0));
        let qf = build_quadratic_forms(&ch, &w, &aux).unwrap();
        assert_eq!(qf, PassiveQuadraticForm::zeros(3));
    }

    #[test]
    fn single_term_substitution() {
        let w = DVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let ch = ChannelSet::new(
            vec![DVector::zeros(2)],
            vec![DVector::from_element(2, c(1.0, 0.0))],
            DMatrix::identity(2, 2),
            vec![Side::Reflect],
        )
        .unwrap();
        let aux = AuxiliaryState { lambda: vec![0.0], beta: vec![c(1.0, 0.0)] };
        let qf = build_quadratic_forms(&ch, &PrecoderMatrix::from_columns(&[w.clone()]), &aux).unwrap();
        assert!((&qf.u_r - &w * w.adjoint()).norm() < 1e-15);
        assert!((&qf.v_r - &w).norm() < 1e-15);
        assert_eq!(qf.u_t.norm(), 0.0);
    }

    #[test]
    fn forms_match_loop_oracle() {
        let (ch, _, w, aux) = random_problem(2, 2, 4, 1, 1);
        let qf = build_quadratic_forms(&ch, &w, &aux).unwrap();
        let oracle = forms_by_loops(&ch, &w, &aux);
        for side in [Side::Reflect, Side::Transmit] {
            assert!((qf.u(side) - oracle.u(side)).norm() < 1e-12);
            assert!((qf.v(side) - oracle.v(side)).norm() < 1e-12);
        }
    }

    #[test]
    fn forms_are_hermitian_psd() {
        let (ch, _, w, aux) = random_problem(3, 3, 6, 2, 2);
        let qf = build_quadratic_forms(&ch, &w, &aux).unwrap();
        for u in [&qf.u_r, &qf.u_t] {
            assert!((u - u.adjoint()).iter().all(|z| z.norm() < 1e-10));
            let eig = nalgebra::linalg::SymmetricEigen::new(u.clone());
            assert!(eig.eigenvalues.iter().all(|l| *l >= -1e-9));
        }
    }

    #[test]
    fn residual_cases() {
        let mut qf = PassiveQuadraticForm::zeros(1);
        qf.v_r[0] = c(2.0, -1.0);
        qf.v_t[0] = c(0.5, 0.5);
        qf.u_r[(0, 0)] = c(3.0, 0.0);
        let ris = StarRisConfiguration::uniform(1, 0.3);
        assert_eq!(element_residual(0, &qf, &ris).unwrap(), (c(2.0, -1.0), c(0.5, 0.5)));

        let mut qf = PassiveQuadraticForm::zeros(3);
        for i in 0..3 {
            qf.v_r[i] = c(i as f64, 1.0);
            qf.u_r[(i, i)] = c(5.0, 0.0);
        }
        let ris = StarRisConfiguration::uniform(3, 0.5);
        for n in 0..3 {
            assert_eq!(element_residual(n, &qf, &ris).unwrap().0, qf.v_r[n]);
        }
        assert!(matches!(element_residual(3, &qf, &ris), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn residual_matches_loop() {
        let (ch, ris, w, aux) = random_problem(4, 2, 5, 1, 1);
        let qf = build_quadratic_forms(&ch, &w, &aux).unwrap();
        for n in 0..5 {
            let (ar, at) = element_residual(n, &qf, &ris).unwrap();
            let mut er = qf.v_r[n];
            let mut et = qf.v_t[n];
            for i in (0..5).filter(|&i| i != n) {
                er -= ris.rho_r()[i].sqrt() * ris.theta_r()[i] * qf.u_r[(n, i)];
                et -= (1.0 - ris.rho_r()[i]).sqrt() * ris.theta_t()[i] * qf.u_t[(n, i)];
            }
            assert!((ar - er).norm() < 1e-12 && (at - et).norm() < 1e-12);
        }
    }

    #[test]
    fn phase_cases() {
        let p = optimal_phase(c(1.0, 1.0));
        assert!((p - C64::from_polar(1.0, std::f64::consts::FRAC_PI_4)).norm() < 1e-15);
        assert!((optimal_phase(c(-3.0, 0.0)) - c(-1.0, 0.0)).norm() < 1e-15);
        assert_eq!(optimal_phase(c(0.0, 0.0)), c(1.0, 0.0));
    }

    proptest! {
        #[test]
        fn phase_beats_unit_circle_grid(re in -5.0..5.0f64, im in -5.0..5.0f64) {
            let a = c(re, im);
            let best = (optimal_phase(a).conj() * a).re;
            for i in 0..360 {
                let u = C64::from_polar(1.0, i as f64 * std::f64::consts::TAU / 360.0);
                prop_assert!(best >= (u.conj() * a).re - 1e-12);
            }
        }

        #[test]
        fn split_beats_dense_grid(br in 0.0..4.0f64, bt in 0.0..4.0f64, u in -4.0..4.0f64) {
            let ctx = ElementContext { a_r: c(0.0, 0.0), a_t: c(0.0, 0.0), b_r: br, b_t: bt, u_diff: u };
            let x = optimal_split(&ctx, 0.5);
            prop_assert!((0.0..=1.0).contains(&x));
            let fx = ctx.objective(x);
            let grid = (0..=100_000).map(|i| ctx.objective(i as f64 / 100_000.0)).fold(f64::MIN, f64::max);
            prop_assert!(fx >= grid - 1e-10);
        }

        #[test]
        fn derivative_is_decreasing(br in 0.0..4.0f64, bt in 0.0..4.0f64, u in -4.0..4.0f64) {
            let ctx = ElementContext { a_r: c(0.0, 0.0), a_t: c(0.0, 0.0), b_r: br, b_t: bt, u_diff: u };
            let mut prev = f64::INFINITY;
            for i in 1..100 {
                let x = i as f64 / 100.0;
                let g = ctx.derivative(x);
                prop_assert!(g <= prev + 1e-12);
                prop_assert!(ctx.curvature(x) <= 0.0);
                prev = g;
            }
        }
    }

    #[test]
    fn split_closed_cases() {
        let ctx = |br, bt, u| ElementContext { a_r: c(0.0, 0.0), a_t: c(0.0, 0.0), b_r: br, b_t: bt, u_diff: u };
        assert!((optimal_split(&ctx(1.0, 1.0, 0.0), 0.1) - 0.5).abs() < 1e-9);
        assert!((optimal_split(&ctx(1.0, 0.0, 1.0), 0.1) - 0.25).abs() < 1e-9);
        assert_eq!(optimal_split(&ctx(2.0, 0.0, 0.0), 0.1), 1.0);
        assert_eq!(optimal_split(&ctx(0.0, 2.0, 0.0), 0.9), 0.0);
        assert_eq!(optimal_split(&ctx(0.0, 0.0, 1.0), 0.4), 0.0);
        assert_eq!(optimal_split(&ctx(0.0, 0.0, -1.0), 0.4), 1.0);
        assert_eq!(optimal_split(&ctx(0.0, 0.0, 0.0), 0.4), 0.4);
    }

    #[test]
    fn single_element_sweep_is_closed_form() {
        let mut qf = PassiveQuadraticForm::zeros(1);
        qf.v_r[0] = c(1.0, 2.0);
        qf.v_t[0] = c(-0.5, 0.3);
        qf.u_r[(0, 0)] = c(2.0, 0.0);
        qf.u_t[(0, 0)] = c(0.7, 0.0);
        let out = sweep_elements(&qf, &StarRisConfiguration::uniform(1, 0.5), 1, PassiveUpdate::Full);
        let ctx = ElementContext::aligned(qf.v_r[0], qf.v_t[0], 2.0, 0.7);
        assert_eq!(out.theta_r()[0], optimal_phase(qf.v_r[0]));
        assert_eq!(out.theta_t()[0], optimal_phase(qf.v_t[0]));
        assert_eq!(out.rho_r()[0], optimal_split(&ctx, 0.5));
    }

    #[test]
    fn sweep_never_decreases_objective() {
        for seed in 0..20 {
            let (ch, ris, w, aux) = random_problem(100 + seed, 4, 8, 2, 1);
            let qf = build_quadratic_forms(&ch, &w, &aux).unwrap();
            let mut prev = passive_objective(&qf, &ris);
            let mut count = 0;
            sweep_elements_observed(&qf, &ris, 3, PassiveUpdate::Full, &mut |_, state| {
                let now = passive_objective(&qf, state);
                assert!(now >= prev - 1e-9, "seed {seed}: {now} < {prev}");
                prev = now;
                count += 1;
            });
            assert_eq!(count, 24);
        }
    }

    #[test]
    fn phase_only_and_frozen_modes() {
        let (ch, ris, w, aux) = random_problem(7, 2, 4, 1, 1);
        let qf = build_quadratic_forms(&ch, &w, &aux).unwrap();
        let p = sweep_elements(&qf, &ris, 2, PassiveUpdate::PhaseOnly);
        assert_eq!(p.rho_r(), ris.rho_r());
        assert!(passive_objective(&qf, &p) >= passive_objective(&qf, &ris) - 1e-12);
        assert_eq!(sweep_elements(&qf, &ris, 2, PassiveUpdate::Frozen), ris);
    }

    #[test]
    fn passive_objective_by_hand() {
        assert_eq!(passive_objective(&PassiveQuadraticForm::zeros(2), &StarRisConfiguration::uniform(2, 0.3)), 0.0);
        let mut qf = PassiveQuadraticForm::zeros(1);
        qf.v_r[0] = c(1.0, 0.0);
        qf.v_t[0] = c(0.0, 2.0);
        qf.u_r[(0, 0)] = c(3.0, 0.0);
        qf.u_t[(0, 0)] = c(1.0, 0.0);
        let ris = StarRisConfiguration::new(vec![c(1.0, 0.0)], vec![c(0.0, 1.0)], vec![0.25]).unwrap();
        // reflect: 2*0.5*1 - 0.25*3 ; transmit: 2*sqrt(.75)*2 - 0.75*1
        let expect = 1.0 - 0.75 + 4.0 * 0.75f64.sqrt() - 0.75;
        assert!((passive_objective(&qf, &ris) - expect).abs() < 1e-12);
    }

    #[test]
    fn passive_objective_matches_loop() {
        let (ch, ris, w, aux) = random_problem(8, 3, 5, 2, 1);
        let qf = build_quadratic_forms(&ch, &w, &aux).unwrap();
        let mut expect = 0.0;
        for side in [Side::Reflect, Side::Transmit] {
            let phi = ris.coefficients(side);
            for p in 0..5 {
                expect += 2.0 * (phi[p].conj() * qf.v(side)[p]).re;
                for q in 0..5 {
                    expect -= (phi[p].conj() * qf.u(side)[(p, q)] * phi[q]).re;
                }
            }
        }
        assert!((passive_objective(&qf, &ris) - expect).abs() < 1e-10);
    }
}
