//! Linearized dynamics of one atom-light interaction pulse.
//!
//! The mean atomic fields follow the Rabi transfer matrix. Fluctuations are
//! driven by the optical Langevin force of the control and passive channels and,
//! for kernels sharing a control channel with upstream kernels, by the back-action
//! carried on that channel.

mod forces;
mod timeop;

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::Matrix2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub use forces::{force_decomposition, DynamicalCoefficients, ForceTerms, LangevinCoefficients};
pub use timeop::TimeOp;

use crate::error::{check_finite, Error, Result};
use crate::mode_algebra::{ModeId, ModeKind, OperatorExpr, PolyExp};

const I: C64 = C64::new(0.0, 1.0);

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Parameters of one pulse.
///
/// `control_coupling` is `chi * |a_p|`, the coefficient of the control channel in
/// the Langevin force; `passive_coupling` is `chi * |a_c|`. The Rabi frequency is
/// `chi * |a_c| * |a_p|`. A balanced kernel has equal couplings `chi_a`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub omega: f64,
    pub control_coupling: f64,
    pub passive_coupling: f64,
    pub control_phase: f64,
    pub passive_phase: f64,
    pub duration: f64,
    pub signal_phase: f64,
}

impl KernelParams {
    /// Balanced kernel with `phi_p = 0` and `phi_c = phase`.
    pub fn balanced(omega: f64, chi_a: f64, phase: f64, duration: f64, signal_phase: f64) -> Result<Self> {
        let p = KernelParams {
            omega,
            control_coupling: chi_a,
            passive_coupling: chi_a,
            control_phase: phase,
            passive_phase: 0.0,
            duration,
            signal_phase,
        };
        p.validate()?;
        Ok(p)
    }

    /// From the raw coupling and pump amplitudes.
    pub fn from_amplitudes(
        chi: f64,
        control_amplitude: f64,
        passive_amplitude: f64,
        control_phase: f64,
        passive_phase: f64,
        duration: f64,
        signal_phase: f64,
    ) -> Result<Self> {
        check_finite("chi", chi, true)?;
        check_finite("control_amplitude", control_amplitude, true)?;
        check_finite("passive_amplitude", passive_amplitude, true)?;
        let p = KernelParams {
            omega: chi * control_amplitude * passive_amplitude,
            control_coupling: chi * passive_amplitude,
            passive_coupling: chi * control_amplitude,
            control_phase,
            passive_phase,
            duration,
            signal_phase,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_finite("omega", self.omega, true)?;
        check_finite("duration", self.duration, true)?;
        for (name, v) in [
            ("control_coupling", self.control_coupling),
            ("passive_coupling", self.passive_coupling),
        ] {
            check_finite(name, v, false)?;
            if v < 0.0 {
                return Err(crate::error::invalid(name, "must be non-negative"));
            }
        }
        check_finite("control_phase", self.control_phase, false)?;
        check_finite("passive_phase", self.passive_phase, false)?;
        check_finite("signal_phase", self.signal_phase, false)?;
        Ok(())
    }

    pub fn is_balanced(&self) -> bool {
        self.control_coupling == self.passive_coupling
    }

    /// `chi_a = chi * a_L` of a balanced kernel.
    pub fn chi_a(&self) -> Result<f64> {
        if !self.is_balanced() {
            return Err(Error::Unbalanced {
                control: self.control_coupling,
                passive: self.passive_coupling,
            });
        }
        Ok(self.control_coupling)
    }

    /// `phi = phi_c - phi_p`.
    pub fn phase(&self) -> f64 {
        self.control_phase - self.passive_phase
    }

    pub fn theta(&self) -> f64 {
        self.omega * self.duration
    }
}

/// `M(theta, phi)`, mapping `(A_A, A_B)` at entry to exit.
pub fn transfer_matrix(theta: f64, phi: f64) -> Matrix2<C64> {
    let (s, co) = theta.sin_cos();
    Matrix2::new(
        c(co),
        -I * s * (I * phi).exp(),
        -I * s * (-I * phi).exp(),
        c(co),
    )
}

/// `T(phi)`, mapping `(A_+, A_-)` to `(A_A, A_B)`.
pub fn basis_change(phi: f64) -> Matrix2<C64> {
    let e = (I * phi / 2.0).exp() * FRAC_1_SQRT_2;
    let f = (-I * phi / 2.0).exp() * FRAC_1_SQRT_2;
    Matrix2::new(e, e, f, -f)
}

/// Mean fields at local time `t`.
pub fn rabi_mean(params: &KernelParams, mean_in: [C64; 2], t: f64) -> Result<[C64; 2]> {
    params.validate()?;
    if !(0.0..=params.duration).contains(&t) {
        return Err(Error::TimeOutOfWindow {
            t,
            duration: params.duration,
        });
    }
    let m = transfer_matrix(params.omega * t, params.phase());
    let v = m * nalgebra::Vector2::new(mean_in[0], mean_in[1]);
    Ok([v[0], v[1]])
}

/// Entries of `M(omega*t, phi)` as functions of `t`.
fn transfer_fns(omega: f64, phi: f64) -> [[PolyExp; 2]; 2] {
    let cos = PolyExp::exp(c(0.5), omega).add(&PolyExp::exp(c(0.5), -omega));
    // -i sin(wt) = -(e^{iwt} - e^{-iwt})/2
    let msin = PolyExp::exp(c(-0.5), omega).add(&PolyExp::exp(c(0.5), -omega));
    [
        [cos.clone(), msin.scale((I * phi).exp())],
        [msin.scale((-I * phi).exp()), cos],
    ]
}

fn mean_trajectory(params: &KernelParams, mean_in: [C64; 2]) -> [PolyExp; 2] {
    let m = transfer_fns(params.omega, params.phase());
    [
        m[0][0].scale(mean_in[0]).add(&m[0][1].scale(mean_in[1])),
        m[1][0].scale(mean_in[0]).add(&m[1][1].scale(mean_in[1])),
    ]
}

/// The optical channels a kernel interacts with.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Channels {
    pub control: ModeId,
    pub passive: ModeId,
}

impl Channels {
    pub fn new(control: ModeId, passive: ModeId) -> Result<Self> {
        for m in [control, passive] {
            if m.kind() != ModeKind::FilteredOptical {
                return Err(Error::ChannelMismatch(
                    "kernel channels must be filtered optical modes".into(),
                ));
            }
        }
        if control == passive {
            return Err(Error::ChannelMismatch(
                "control and passive channels must differ".into(),
            ));
        }
        Ok(Channels { control, passive })
    }
}

/// Everything known about one evolved kernel.
#[derive(Clone, Debug)]
pub struct KernelRecord {
    params: KernelParams,
    channels: Channels,
    mean_in: [C64; 2],
    mean_out: [C64; 2],
    mean_traj: [PolyExp; 2],
    atom_in: [OperatorExpr; 2],
    trajectory: [TimeOp; 2],
    exit: [OperatorExpr; 2],
    back_action: [OperatorExpr; 2],
}

impl KernelRecord {
    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn channels(&self) -> Channels {
        self.channels
    }

    pub fn mean_in(&self) -> [C64; 2] {
        self.mean_in
    }

    pub fn mean_out(&self) -> [C64; 2] {
        self.mean_out
    }

    pub fn atom_in(&self) -> &[OperatorExpr; 2] {
        &self.atom_in
    }

    /// Exit fluctuations `(A_A, A_B)` at local time `duration`.
    pub fn exit(&self) -> &[OperatorExpr; 2] {
        &self.exit
    }

    /// The part of [`exit`](Self::exit) driven by upstream back-action.
    pub fn back_action(&self) -> &[OperatorExpr; 2] {
        &self.back_action
    }

    pub fn trajectory(&self) -> &[TimeOp; 2] {
        &self.trajectory
    }

    /// Fluctuations at local time `t`.
    pub fn fluctuation_at(&self, t: f64) -> Result<[OperatorExpr; 2]> {
        Ok([self.trajectory[0].eval(t)?, self.trajectory[1].eval(t)?])
    }

    /// Perturbation the kernel adds to its outgoing control field.
    pub fn control_perturbation(&self) -> TimeOp {
        let p = &self.params;
        let pre = -I * p.control_coupling * (-I * p.passive_phase).exp();
        let [ma, mb] = &self.mean_traj;
        let [xa, xb] = &self.trajectory;
        let t1 = xb.mul_fn(&ma.conj());
        let t2 = xa.dagger().mul_fn(mb);
        t1.add(&t2).expect("one kernel window").scale(pre)
    }

    /// Perturbation the kernel adds to its outgoing passive field.
    pub fn passive_perturbation(&self) -> TimeOp {
        let p = &self.params;
        let pre = -I * p.passive_coupling * (-I * p.control_phase).exp();
        let [ma, mb] = &self.mean_traj;
        let [xa, xb] = &self.trajectory;
        let t1 = xb.dagger().mul_fn(ma);
        let t2 = xa.mul_fn(&mb.conj());
        t1.add(&t2).expect("one kernel window").scale(pre)
    }
}

/// Source terms of the fluctuation equations, before propagation.
struct Sources {
    a: TimeOp,
    b: TimeOp,
}

fn langevin_sources(
    params: &KernelParams,
    traj: &[PolyExp; 2],
    channels: Channels,
    registry: u64,
) -> Sources {
    let tau = params.duration;
    let kc = params.control_coupling;
    let kp = params.passive_coupling;
    let (pc, pp) = (params.control_phase, params.passive_phase);
    let [ma, mb] = traj;
    let fa_c = mb.scale(-I * kc * (-I * pp).exp());
    let fa_p = mb.scale(-I * kp * (I * pc).exp());
    let fb_c = ma.scale(-I * kc * (I * pp).exp());
    let fb_p = ma.scale(-I * kp * (-I * pc).exp());
    let a = TimeOp::local(registry, tau, channels.control, true, fa_c)
        .add(&TimeOp::local(registry, tau, channels.passive, false, fa_p))
        .expect("one kernel window");
    let b = TimeOp::local(registry, tau, channels.control, false, fb_c)
        .add(&TimeOp::local(registry, tau, channels.passive, true, fb_p))
        .expect("one kernel window");
    Sources { a, b }
}

fn back_action_sources(
    params: &KernelParams,
    traj: &[PolyExp; 2],
    channels: Channels,
    upstream: &KernelRecord,
) -> Result<Sources> {
    if upstream.channels.control != channels.control {
        return Err(Error::ChannelMismatch(
            "upstream kernel does not share the control channel".into(),
        ));
    }
    if upstream.params.duration != params.duration {
        return Err(Error::ChannelMismatch(format!(
            "pulse durations differ ({} vs {})",
            upstream.params.duration, params.duration
        )));
    }
    let kc = params.control_coupling;
    let pp = params.passive_phase;
    let [ma, mb] = traj;
    let delta = upstream.control_perturbation();
    let a = delta
        .dagger()
        .mul_fn(&mb.scale(-I * kc * (-I * pp).exp()));
    let b = delta.mul_fn(&ma.scale(-I * kc * (I * pp).exp()));
    Ok(Sources { a, b })
}

/// Solves `L x = s` with zero initial value, returning `(x_A, x_B)`.
fn solve(params: &KernelParams, s: &Sources) -> Result<[TimeOp; 2]> {
    let phi = params.phase();
    let em = (-I * phi / 2.0).exp() * FRAC_1_SQRT_2;
    let ep = (I * phi / 2.0).exp() * FRAC_1_SQRT_2;
    let sp = s.a.scale(em).add(&s.b.scale(ep))?;
    let sm = s.a.scale(em).add(&s.b.scale(-ep))?;
    let xp = sp.propagate(params.omega);
    let xm = sm.propagate(-params.omega);
    let xa = xp.add(&xm)?.scale(ep);
    let xb = xp.add(&xm.scale(c(-1.0)))?.scale(em);
    Ok([xa, xb])
}

fn check_inputs(params: &KernelParams, atom_in: &[OperatorExpr; 2], mean_in: [C64; 2]) -> Result<()> {
    params.validate()?;
    if atom_in[0].registry_id() != atom_in[1].registry_id() {
        return Err(Error::MixedRegistries);
    }
    for m in mean_in {
        if !(m.re.is_finite() && m.im.is_finite()) {
            return Err(crate::error::invalid("mean_in", "must be finite"));
        }
    }
    Ok(())
}

fn evolve_impl(
    params: &KernelParams,
    mean_in: [C64; 2],
    atom_in: &[OperatorExpr; 2],
    channels: Channels,
    upstream: &[&KernelRecord],
) -> Result<KernelRecord> {
    check_inputs(params, atom_in, mean_in)?;
    let registry = atom_in[0].registry_id();
    let tau = params.duration;
    let traj = mean_trajectory(params, mean_in);

    let m = transfer_fns(params.omega, params.phase());
    let mut hom = Vec::with_capacity(2);
    for row in &m {
        let x = TimeOp::atom(tau, row[0].clone(), atom_in[0].clone())
            .add(&TimeOp::atom(tau, row[1].clone(), atom_in[1].clone()))?;
        hom.push(x);
    }

    let langevin = solve(params, &langevin_sources(params, &traj, channels, registry))?;
    let mut ba = [TimeOp::zero(registry, tau), TimeOp::zero(registry, tau)];
    for up in upstream {
        let s = back_action_sources(params, &traj, channels, up)?;
        let x = solve(params, &s)?;
        ba = [ba[0].add(&x[0])?, ba[1].add(&x[1])?];
    }

    let trajectory = [
        hom[0].add(&langevin[0])?.add(&ba[0])?,
        hom[1].add(&langevin[1])?.add(&ba[1])?,
    ];
    let exit = [trajectory[0].eval_end()?, trajectory[1].eval_end()?];
    let back_action = [ba[0].eval_end()?, ba[1].eval_end()?];
    let mean_out = rabi_mean(params, mean_in, tau)?;
    Ok(KernelRecord {
        params: *params,
        channels,
        mean_in,
        mean_out,
        mean_traj: traj,
        atom_in: atom_in.clone(),
        trajectory,
        exit,
        back_action,
    })
}

/// Evolves the fluctuations of a balanced kernel.
pub fn evolve_fluctuations(
    params: &KernelParams,
    mean_in: [C64; 2],
    atom_in: &[OperatorExpr; 2],
    channels: Channels,
) -> Result<KernelRecord> {
    params.chi_a()?;
    evolve_impl(params, mean_in, atom_in, channels, &[])
}

/// Like [`evolve_fluctuations`], with back-action from kernels upstream on the
/// same control channel, in the order the light passes them.
pub fn evolve_with_back_action(
    params: &KernelParams,
    mean_in: [C64; 2],
    atom_in: &[OperatorExpr; 2],
    channels: Channels,
    upstream: &[&KernelRecord],
) -> Result<KernelRecord> {
    params.chi_a()?;
    for up in upstream {
        let (a, b) = (up.params.chi_a()?, params.chi_a()?);
        if (a - b).abs() > 1e-12 * a.max(b) {
            return Err(Error::ChannelMismatch(format!(
                "coupling differs along the control channel ({a} vs {b})"
            )));
        }
    }
    evolve_impl(params, mean_in, atom_in, channels, upstream)
}

/// Langevin-only evolution of a possibly unbalanced kernel.
///
/// The ponderomotive and dynamical forces are omitted, so for unbalanced
/// couplings the output does not preserve commutators; the size of that defect is
/// what this entry point exists to measure.
pub fn evolve_langevin_only(
    params: &KernelParams,
    mean_in: [C64; 2],
    atom_in: &[OperatorExpr; 2],
    channels: Channels,
) -> Result<KernelRecord> {
    evolve_impl(params, mean_in, atom_in, channels, &[])
}

/// Exit correction of a downstream kernel due to one upstream kernel.
pub fn apply_back_action(
    params: &KernelParams,
    mean_in: [C64; 2],
    channels: Channels,
    upstream: &KernelRecord,
) -> Result<[OperatorExpr; 2]> {
    params.validate()?;
    let (a, b) = (upstream.params.chi_a()?, params.chi_a()?);
    if (a - b).abs() > 1e-12 * a.max(b) {
        return Err(Error::ChannelMismatch(format!(
            "coupling differs along the control channel ({a} vs {b})"
        )));
    }
    let traj = mean_trajectory(params, mean_in);
    let s = back_action_sources(params, &traj, channels, upstream)?;
    let x = solve(params, &s)?;
    Ok([x[0].eval_end()?, x[1].eval_end()?])
}

/// Outgoing control and passive fields, filtered with `probe` over the pulse.
pub fn output_optical(record: &KernelRecord, probe: &PolyExp) -> Result<(OperatorExpr, OperatorExpr)> {
    let tau = record.params.duration;
    let registry = record.exit[0].registry_id();
    let one = PolyExp::constant(c(1.0));
    let control = TimeOp::local(registry, tau, record.channels.control, false, one.clone())
        .add(&record.control_perturbation())?;
    let passive = TimeOp::local(registry, tau, record.channels.passive, false, one)
        .add(&record.passive_perturbation())?;
    Ok((control.filter(probe)?, passive.filter(probe)?))
}

/// Exit value of the first-order signal field.
///
/// `signal_in` is the signal perturbation entering the pulse; the pulse's own
/// `signal_phase` adds a source proportional to the mean fields.
pub fn signal_exit(params: &KernelParams, mean_in: [C64; 2], signal_in: [C64; 2]) -> Result<[C64; 2]> {
    params.validate()?;
    let phi = params.phase();
    let (w, tau, ps) = (params.omega, params.duration, params.signal_phase);
    let tinv = basis_change(phi).adjoint();
    let mpm = tinv * nalgebra::Vector2::new(mean_in[0], mean_in[1]);
    let spm = tinv * nalgebra::Vector2::new(signal_in[0], signal_in[1]);
    // A_pm(t) = e^{-+iwt} A_pm(0); source for s_pm is -+ w ps A_mp(t).
    let mut out = [C64::new(0.0, 0.0); 2];
    for (k, sign) in [(0usize, 1.0), (1usize, -1.0)] {
        let partner = PolyExp::exp(mpm[1 - k], sign * w);
        let source = partner.scale(c(-sign * w * ps));
        let kernel = PolyExp::exp((-I * sign * w * tau).exp(), sign * w);
        let driven = kernel.mul(&source).integrate(0.0, tau);
        out[k] = (-I * sign * w * tau).exp() * spm[k] + driven;
    }
    let v = basis_change(phi) * nalgebra::Vector2::new(out[0], out[1]);
    Ok([v[0], v[1]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mode_algebra::{commutator, ModeRegistry, ModeState};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn transfer_matrix_golden_values() {
        let m = transfer_matrix(0.0, 0.7);
        assert_eq!(m, Matrix2::identity());
        let m = transfer_matrix(FRAC_PI_2, 0.0);
        assert!(close(m[(0, 0)], c(0.0), 1e-16));
        assert!(close(m[(0, 1)], -I, 1e-16));
        assert!(close(m[(1, 0)], -I, 1e-16));
        let m = transfer_matrix(FRAC_PI_4, 0.0);
        let v = m * nalgebra::Vector2::new(c(1.0), c(0.0));
        assert!(close(v[0], c(FRAC_1_SQRT_2), 1e-15));
        assert!(close(v[1], -I * FRAC_1_SQRT_2, 1e-15));
    }

    #[test]
    fn transfer_matrix_is_unitary_and_composes() {
        for &(a, b, phi) in &[(0.3, 1.1, 0.4), (2.0, -0.7, 2.5)] {
            let m = transfer_matrix(a, phi) * transfer_matrix(b, phi);
            let n = transfer_matrix(a + b, phi);
            assert!((m - n).norm() < 1e-14);
            let u = transfer_matrix(a, phi);
            assert!((u * u.adjoint() - Matrix2::identity()).norm() < 1e-15);
        }
    }

    #[test]
    fn basis_change_diagonalizes() {
        let phi = 0.9;
        let theta = 0.6;
        let t = basis_change(phi);
        let d = t.adjoint() * transfer_matrix(theta, phi) * t;
        assert!(close(d[(0, 0)], (-I * theta).exp(), 1e-15));
        assert!(close(d[(1, 1)], (I * theta).exp(), 1e-15));
        assert!(d[(0, 1)].norm() < 1e-15 && d[(1, 0)].norm() < 1e-15);
    }

    #[test]
    fn rabi_mean_rejects_time_outside_window() {
        let p = KernelParams::balanced(1.0, 0.1, 0.0, 1.0, 0.0).unwrap();
        assert!(rabi_mean(&p, [c(1.0), c(0.0)], 1.5).is_err());
    }

    #[test]
    fn mean_trajectory_matches_matrix() {
        let p = KernelParams::balanced(1.3, 0.1, 0.8, 2.0, 0.0).unwrap();
        let m0 = [C64::new(0.4, 0.3), C64::new(-0.2, 0.9)];
        let tr = mean_trajectory(&p, m0);
        for &t in &[0.0, 0.5, 1.7] {
            let m = rabi_mean(&p, m0, t).unwrap();
            assert!(close(tr[0].eval(t), m[0], 1e-14));
            assert!(close(tr[1].eval(t), m[1], 1e-14));
        }
    }

    #[test]
    fn signal_source_matches_phase_derivative() {
        let p = KernelParams::balanced(1.0, 0.1, 0.3, 0.9, 1.0).unwrap();
        let m0 = [C64::new(0.6, 0.1), C64::new(0.2, -0.5)];
        let s = signal_exit(&p, m0, [c(0.0), c(0.0)]).unwrap();
        let h = 1e-6;
        let v = nalgebra::Vector2::new(m0[0], m0[1]);
        let d = (transfer_matrix(0.9, 0.3 + h) * v - transfer_matrix(0.9, 0.3 - h) * v) / c(2.0 * h);
        assert!(close(s[0], d[0], 1e-9));
        assert!(close(s[1], d[1], 1e-9));
        // closed form: s = sin(theta) (e^{i phi} A_B, -e^{-i phi} A_A)
        let sn = 0.9f64.sin();
        assert!(close(s[0], sn * (I * 0.3).exp() * m0[1], 1e-14));
        assert!(close(s[1], -sn * (-I * 0.3).exp() * m0[0], 1e-14));
    }

    fn setup(reg: &mut ModeRegistry) -> ([OperatorExpr; 2], Channels) {
        let a = reg
            .register("A", ModeKind::DiscreteAtom, ModeState::Vacuum)
            .unwrap();
        let b = reg
            .register("B", ModeKind::DiscreteAtom, ModeState::Vacuum)
            .unwrap();
        let c = reg
            .register("c", ModeKind::FilteredOptical, ModeState::Vacuum)
            .unwrap();
        let p = reg
            .register("p", ModeKind::FilteredOptical, ModeState::Vacuum)
            .unwrap();
        (
            [
                OperatorExpr::annihilation(a).unwrap(),
                OperatorExpr::annihilation(b).unwrap(),
            ],
            Channels::new(c, p).unwrap(),
        )
    }

    #[test]
    fn zero_coupling_is_pure_rotation() {
        let mut reg = ModeRegistry::new();
        let (x, ch) = setup(&mut reg);
        let p = KernelParams::balanced(1.0, 0.0, 0.4, FRAC_PI_4, 0.0).unwrap();
        let r = evolve_fluctuations(&p, [c(3.0), c(0.0)], &x, ch).unwrap();
        let m = transfer_matrix(FRAC_PI_4, 0.4);
        let a_ann = r.exit()[0].discrete_coefficients(reg.lookup("A").unwrap()).0;
        assert!(close(a_ann, m[(0, 0)], 1e-15));
        assert!(r.exit()[0].coefficient(ch.control).is_none());
    }

    #[test]
    fn balanced_kernel_preserves_commutators() {
        let mut reg = ModeRegistry::new();
        let (x, ch) = setup(&mut reg);
        let p = KernelParams::balanced(1.0, 0.05, 0.0, FRAC_PI_2, 0.0).unwrap();
        let r = evolve_fluctuations(&p, [c(10.0), c(0.0)], &x, ch).unwrap();
        for e in r.exit() {
            let k = commutator(e, &e.dagger()).unwrap();
            assert!((k - c(1.0)).norm() < 1e-12, "{k}");
        }
        let k = commutator(&r.exit()[0], &r.exit()[1].dagger()).unwrap();
        assert!(k.norm() < 1e-12);
    }

    #[test]
    fn unbalanced_rejected_by_balanced_entry_points() {
        let mut reg = ModeRegistry::new();
        let (x, ch) = setup(&mut reg);
        let p = KernelParams::from_amplitudes(0.1, 2.0, 3.0, 0.0, 0.0, 1.0, 0.0).unwrap();
        assert!(matches!(
            evolve_fluctuations(&p, [c(1.0), c(0.0)], &x, ch),
            Err(Error::Unbalanced { .. })
        ));
        assert!(evolve_langevin_only(&p, [c(1.0), c(0.0)], &x, ch).is_ok());
    }

    #[test]
    fn back_action_requires_shared_control() {
        let mut reg = ModeRegistry::new();
        let (x, ch) = setup(&mut reg);
        let other = reg
            .register("c2", ModeKind::FilteredOptical, ModeState::Vacuum)
            .unwrap();
        let p = KernelParams::balanced(1.0, 0.1, 0.0, PI / 2.0, 0.0).unwrap();
        let up = evolve_fluctuations(&p, [c(1.0), c(0.0)], &x, ch).unwrap();
        let ch2 = Channels::new(other, ch.passive).unwrap();
        assert!(matches!(
            apply_back_action(&p, [c(1.0), c(0.0)], ch2, &up),
            Err(Error::ChannelMismatch(_))
        ));
    }

    #[test]
    fn back_action_vanishes_without_upstream_mean() {
        let mut reg = ModeRegistry::new();
        let (x, ch) = setup(&mut reg);
        let p = KernelParams::balanced(1.0, 0.1, 0.0, FRAC_PI_2, 0.0).unwrap();
        let up = evolve_fluctuations(&p, [c(0.0), c(0.0)], &x, ch).unwrap();
        let corr = apply_back_action(&p, [c(1.0), c(0.0)], ch, &up).unwrap();
        assert!(corr[0].terms().next().is_none());
        assert!(corr[1].terms().next().is_none());
    }

    #[test]
    fn output_without_atoms_is_input() {
        let mut reg = ModeRegistry::new();
        let (x, ch) = setup(&mut reg);
        let zero = [x[0].scale(c(0.0)), x[1].scale(c(0.0))];
        let p = KernelParams::balanced(1.0, 0.1, 0.0, 1.0, 0.0).unwrap();
        let r = evolve_fluctuations(&p, [c(0.0), c(0.0)], &zero, ch).unwrap();
        let probe = PolyExp::constant(c(1.0));
        let (co, po) = output_optical(&r, &probe).unwrap();
        assert_eq!(co.terms().count(), 1);
        assert_eq!(po.terms().count(), 1);
        let k = commutator(&co, &co.dagger()).unwrap();
        assert!((k - c(1.0)).norm() < 1e-15);
    }
}
