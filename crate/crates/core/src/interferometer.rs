//! Mach-Zehnder composition of three pulses, the phase estimator, the
//! two-interferometer configuration and the gravitational-wave phase response.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, invalid, Error, Result};
use crate::kernel::{
    evolve_with_back_action, signal_exit, Channels, KernelParams, KernelRecord,
};
use crate::mode_algebra::{
    covariance, vacuum_variance, ModeId, ModeKind, ModeRegistry, ModeState, OperatorExpr,
};

/// Pulse areas `Omega * tau` of the beam-splitter, mirror and recombiner pulses.
pub const CANONICAL_THETAS: [f64; 3] = [FRAC_PI_4, FRAC_PI_2, FRAC_PI_4];

/// Base control phases of the three pulses.
///
/// The mirror pulse carries a quarter-turn so that the exit ports come out as
/// `-(e^{i pi/4}, e^{-i pi/4}) / sqrt(2)` times the input amplitude.
pub const CANONICAL_PHASES: [f64; 3] = [0.0, FRAC_PI_2, FRAC_PI_2];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSpec {
    pub theta: f64,
    pub phase: f64,
    pub signal_phase: f64,
}

/// One Mach-Zehnder sequence.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceSpec {
    pub omega: f64,
    pub chi_a: f64,
    /// Mean amplitude of the input atom cloud, `sqrt(N_a)`.
    pub amplitude: f64,
    pub steps: [StepSpec; 3],
    pub interrogation_time: f64,
    /// Whether the second half of the mirror pulse feels back-action from the first.
    pub mirror_back_action: bool,
}

impl SequenceSpec {
    pub fn mach_zehnder(
        omega: f64,
        chi_a: f64,
        amplitude: f64,
        signal_phases: [f64; 3],
        interrogation_time: f64,
    ) -> Self {
        let step = |k: usize| StepSpec {
            theta: CANONICAL_THETAS[k],
            phase: CANONICAL_PHASES[k],
            signal_phase: signal_phases[k],
        };
        SequenceSpec {
            omega,
            chi_a,
            amplitude,
            steps: [step(0), step(1), step(2)],
            interrogation_time,
            mirror_back_action: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_finite("omega", self.omega, true)?;
        check_finite("chi_a", self.chi_a, false)?;
        if self.chi_a < 0.0 {
            return Err(invalid("chi_a", "must be non-negative"));
        }
        check_finite("amplitude", self.amplitude, false)?;
        if self.amplitude == 0.0 {
            return Err(Error::ZeroAmplitude);
        }
        if self.amplitude < 0.0 {
            return Err(invalid("amplitude", "must be positive"));
        }
        check_finite("interrogation_time", self.interrogation_time, true)?;
        for (k, s) in self.steps.iter().enumerate() {
            let want = CANONICAL_THETAS[k];
            if (s.theta - want).abs() > 1e-12 * want {
                return Err(Error::NonCanonicalSequence(format!(
                    "pulse {} has area {} instead of {}",
                    k + 1,
                    s.theta,
                    want
                )));
            }
            check_finite("phase", s.phase, false)?;
            check_finite("signal_phase", s.signal_phase, false)?;
        }
        Ok(())
    }

    pub fn durations(&self) -> [f64; 3] {
        [
            self.steps[0].theta / self.omega,
            self.steps[1].theta / self.omega,
            self.steps[2].theta / self.omega,
        ]
    }

    pub fn atom_number(&self) -> f64 {
        self.amplitude * self.amplitude
    }

    fn params(&self, k: usize) -> Result<KernelParams> {
        let s = self.steps[k];
        KernelParams::balanced(
            self.omega,
            self.chi_a,
            s.phase,
            s.theta / self.omega,
            s.signal_phase,
        )
    }
}

/// Modes registered for one interferometer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SequenceModes {
    pub atom_a_initial: ModeId,
    pub atom_b_initial: ModeId,
    pub atom_a_injected: ModeId,
    pub atom_b_injected: ModeId,
    pub control: [ModeId; 3],
    pub passive: [ModeId; 4],
}

impl SequenceModes {
    fn register(
        registry: &mut ModeRegistry,
        prefix: &str,
        amplitude: f64,
        shared_control: Option<[ModeId; 3]>,
    ) -> Result<Self> {
        let mut atom = |name: &str, state| {
            registry.register(format!("{prefix}atom.{name}"), ModeKind::DiscreteAtom, state)
        };
        let atom_a_initial = atom("A.initial", ModeState::Coherent(C64::new(amplitude, 0.0)))?;
        let atom_b_initial = atom("B.initial", ModeState::Vacuum)?;
        let atom_a_injected = atom("A.injected", ModeState::Vacuum)?;
        let atom_b_injected = atom("B.injected", ModeState::Vacuum)?;
        let mut light = |name: &str| {
            registry.register(
                format!("{prefix}light.{name}"),
                ModeKind::FilteredOptical,
                ModeState::Vacuum,
            )
        };
        let control = match shared_control {
            Some(c) => c,
            None => [light("control.1")?, light("control.2")?, light("control.3")?],
        };
        let passive = [
            light("passive.1")?,
            light("passive.2a")?,
            light("passive.2b")?,
            light("passive.3")?,
        ];
        Ok(SequenceModes {
            atom_a_initial,
            atom_b_initial,
            atom_a_injected,
            atom_b_injected,
            control,
            passive,
        })
    }

    fn is_initial_atom(&self, index: usize) -> bool {
        index == self.atom_a_initial.index() || index == self.atom_b_initial.index()
    }
}

/// Variance of the population difference split by noise origin.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct NoiseBreakdown {
    /// Vacuum fluctuations of the input atom modes.
    pub atom_shot: f64,
    /// Atom modes that reach the readout only through optical back-action.
    pub back_action: f64,
    /// Optical vacuum fluctuations of all pulses.
    pub optical: f64,
    pub total: f64,
}

/// Result of one Mach-Zehnder sequence.
#[derive(Clone, Debug)]
pub struct InterferometerOutput {
    pub spec: SequenceSpec,
    pub modes: SequenceModes,
    /// Mean exit amplitudes `(A_A, A_B)`.
    pub mean_out: [C64; 2],
    /// First-order signal part of the exit amplitudes.
    pub signal_field: [C64; 2],
    /// `N_B - N_A` of the mean fields without signal.
    pub population_offset: f64,
    /// Signal part of `N_B - N_A`.
    pub delta_n_signal: f64,
    /// `d(Delta N) / d(phi_1 - 2 phi_2 + phi_3)`.
    pub signal_coefficient: f64,
    /// Linearized `N_B - N_A` (mean plus fluctuations).
    pub delta_n: OperatorExpr,
    /// Exit fluctuations `(A_A, A_B)`.
    pub fields: [OperatorExpr; 2],
    pub noise: NoiseBreakdown,
    /// Pulses in the order 1, 2a, 2b, 3.
    pub records: Vec<KernelRecord>,
}

/// Records of the kernels each control channel has passed, in order.
#[derive(Clone, Debug, Default)]
struct ControlChain {
    steps: [Vec<KernelRecord>; 3],
}

fn refs(v: &[KernelRecord]) -> Vec<&KernelRecord> {
    v.iter().collect()
}

fn population_fluctuation(mean: [C64; 2], fields: &[OperatorExpr; 2]) -> Result<OperatorExpr> {
    let n = |k: usize| -> Result<OperatorExpr> {
        fields[k]
            .scale(mean[k].conj())
            .try_add(&fields[k].dagger().scale(mean[k]))
    };
    n(1)?.try_sub(&n(0)?)
}

fn breakdown(
    delta_n: &OperatorExpr,
    modes: &SequenceModes,
    registry: &ModeRegistry,
) -> Result<NoiseBreakdown> {
    let kind = |k: usize| registry.info(k).map(|m| m.kind).ok();
    let shot = delta_n.restrict(|k| modes.is_initial_atom(k));
    let ba = delta_n.restrict(|k| {
        kind(k) == Some(ModeKind::DiscreteAtom) && !modes.is_initial_atom(k)
    });
    let opt = delta_n.restrict(|k| kind(k) == Some(ModeKind::FilteredOptical));
    Ok(NoiseBreakdown {
        atom_shot: vacuum_variance(&shot, registry)?,
        back_action: vacuum_variance(&ba, registry)?,
        optical: vacuum_variance(&opt, registry)?,
        total: vacuum_variance(delta_n, registry)?,
    })
}

fn signal_response(spec: &SequenceSpec, phases: [f64; 3]) -> Result<([C64; 2], [C64; 2])> {
    let mut s = *spec;
    for k in 0..3 {
        s.steps[k].signal_phase = phases[k];
    }
    let p: Vec<KernelParams> = (0..3).map(|k| s.params(k)).collect::<Result<_>>()?;
    let zero = C64::new(0.0, 0.0);
    let a = C64::new(spec.amplitude, 0.0);
    let m1 = crate::kernel::rabi_mean(&p[0], [a, zero], p[0].duration)?;
    let s1 = signal_exit(&p[0], [a, zero], [zero, zero])?;
    let m2a = crate::kernel::rabi_mean(&p[1], [m1[0], zero], p[1].duration)?;
    let m2b = crate::kernel::rabi_mean(&p[1], [zero, m1[1]], p[1].duration)?;
    let s2a = signal_exit(&p[1], [m1[0], zero], [s1[0], zero])?;
    let s2b = signal_exit(&p[1], [zero, m1[1]], [zero, s1[1]])?;
    let m3_in = [m2b[0], m2a[1]];
    let m3 = crate::kernel::rabi_mean(&p[2], m3_in, p[2].duration)?;
    let s3 = signal_exit(&p[2], m3_in, [s2b[0], s2a[1]])?;
    Ok((m3, s3))
}

fn population_signal(mean: [C64; 2], signal: [C64; 2]) -> f64 {
    2.0 * (mean[1].conj() * signal[1]).re - 2.0 * (mean[0].conj() * signal[0]).re
}

fn run_one(
    spec: &SequenceSpec,
    registry: &mut ModeRegistry,
    prefix: &str,
    upstream: Option<&ControlChain>,
) -> Result<(InterferometerOutput, ControlChain)> {
    spec.validate()?;
    let modes = SequenceModes::register(
        registry,
        prefix,
        spec.amplitude,
        upstream.map(|u| {
            [
                u.steps[0][0].channels().control,
                u.steps[1][0].channels().control,
                u.steps[2][0].channels().control,
            ]
        }),
    )?;
    let p: Vec<KernelParams> = (0..3).map(|k| spec.params(k)).collect::<Result<_>>()?;
    let zero = C64::new(0.0, 0.0);
    let empty = ControlChain::default();
    let up = upstream.unwrap_or(&empty);

    let a_ini = OperatorExpr::annihilation(modes.atom_a_initial)?;
    let b_ini = OperatorExpr::annihilation(modes.atom_b_initial)?;
    let a_inj = OperatorExpr::annihilation(modes.atom_a_injected)?;
    let b_inj = OperatorExpr::annihilation(modes.atom_b_injected)?;

    let amp = C64::new(spec.amplitude, 0.0);
    let r1 = evolve_with_back_action(
        &p[0],
        [amp, zero],
        &[a_ini, b_ini],
        Channels::new(modes.control[0], modes.passive[0])?,
        &refs(&up.steps[0]),
    )?;
    let m1 = r1.mean_out();
    let x1 = r1.exit().clone();

    let r2a = evolve_with_back_action(
        &p[1],
        [m1[0], zero],
        &[x1[0].clone(), b_inj],
        Channels::new(modes.control[1], modes.passive[1])?,
        &refs(&up.steps[1]),
    )?;
    let mut up2b = refs(&up.steps[1]);
    if spec.mirror_back_action {
        up2b.push(&r2a);
    }
    let r2b = evolve_with_back_action(
        &p[1],
        [zero, m1[1]],
        &[a_inj, x1[1].clone()],
        Channels::new(modes.control[1], modes.passive[2])?,
        &up2b,
    )?;

    let m3_in = [r2b.mean_out()[0], r2a.mean_out()[1]];
    let r3 = evolve_with_back_action(
        &p[2],
        m3_in,
        &[r2b.exit()[0].clone(), r2a.exit()[1].clone()],
        Channels::new(modes.control[2], modes.passive[3])?,
        &refs(&up.steps[2]),
    )?;

    let phases = [
        spec.steps[0].signal_phase,
        spec.steps[1].signal_phase,
        spec.steps[2].signal_phase,
    ];
    let (mean_out, signal_field) = signal_response(spec, phases)?;
    let (_, unit) = signal_response(spec, [1.0, 0.0, 0.0])?;
    let signal_coefficient = population_signal(mean_out, unit);
    let delta_n_signal = population_signal(mean_out, signal_field);
    let population_offset = mean_out[1].norm_sqr() - mean_out[0].norm_sqr();

    let fields = r3.exit().clone();
    let delta_n = population_fluctuation(mean_out, &fields)?
        .with_mean(C64::new(population_offset + delta_n_signal, 0.0));
    let noise = breakdown(&delta_n, &modes, registry)?;

    let mut chain = up.clone();
    chain.steps[0].push(r1.clone());
    chain.steps[1].push(r2a.clone());
    chain.steps[1].push(r2b.clone());
    chain.steps[2].push(r3.clone());

    Ok((
        InterferometerOutput {
            spec: *spec,
            modes,
            mean_out,
            signal_field,
            population_offset,
            delta_n_signal,
            signal_coefficient,
            delta_n,
            fields,
            noise,
            records: vec![r1, r2a, r2b, r3],
        },
        chain,
    ))
}

/// Runs one interferometer with fresh modes in `registry`.
pub fn run_sequence(spec: &SequenceSpec, registry: &mut ModeRegistry) -> Result<InterferometerOutput> {
    run_one(spec, registry, "", None).map(|(o, _)| o)
}

/// Runs one interferometer, labelling its modes with `prefix`.
pub fn run_sequence_labeled(
    spec: &SequenceSpec,
    registry: &mut ModeRegistry,
    prefix: &str,
) -> Result<InterferometerOutput> {
    run_one(spec, registry, prefix, None).map(|(o, _)| o)
}

/// Phase estimate and its noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    /// Estimate of `phi_1 - 2 phi_2 + phi_3`.
    pub phase_combination: f64,
    /// Variance of that estimate, total and by origin.
    pub variance: NoiseBreakdown,
    /// `phase_combination / T^2`.
    pub phase_curvature: f64,
}

pub fn estimator(output: &InterferometerOutput) -> Result<Estimate> {
    let k = output.signal_coefficient;
    if k == 0.0 || !k.is_finite() {
        return Err(Error::ZeroAmplitude);
    }
    let k2 = k * k;
    let n = output.noise;
    let est = (output.delta_n.mean().re - output.population_offset) / k;
    let t = output.spec.interrogation_time;
    Ok(Estimate {
        phase_combination: est,
        variance: NoiseBreakdown {
            atom_shot: n.atom_shot / k2,
            back_action: n.back_action / k2,
            optical: n.optical / k2,
            total: n.total / k2,
        },
        phase_curvature: est / (t * t),
    })
}

/// How the two interferometers of a pair share light.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairLink {
    /// Every control pulse passes the first interferometer, then the second.
    Shared,
    /// Independent light for each interferometer.
    Severed,
}

#[derive(Clone, Debug)]
pub struct PairOutput {
    pub first: InterferometerOutput,
    pub second: InterferometerOutput,
    pub link: PairLink,
    /// Covariance of the two population differences.
    pub covariance: f64,
    pub correlation: f64,
    /// `Delta N_I - Delta N_II`.
    pub differential: OperatorExpr,
    pub differential_variance: f64,
    /// Part of the second interferometer's variance carried by the first one's atoms.
    pub cross_back_action: f64,
}

pub fn run_pair(
    first: &SequenceSpec,
    second: &SequenceSpec,
    link: PairLink,
    registry: &mut ModeRegistry,
) -> Result<PairOutput> {
    let (o1, chain) = run_one(first, registry, "I.", None)?;
    let (o2, _) = match link {
        PairLink::Shared => run_one(second, registry, "II.", Some(&chain))?,
        PairLink::Severed => run_one(second, registry, "II.", None)?,
    };
    let cov = covariance(&o1.delta_n, &o2.delta_n, registry)?.re;
    let denom = (o1.noise.total * o2.noise.total).sqrt();
    let differential = o1.delta_n.try_sub(&o2.delta_n)?;
    let differential_variance = vacuum_variance(&differential, registry)?;
    let m1 = o1.modes;
    let first_atoms = [
        m1.atom_a_initial,
        m1.atom_b_initial,
        m1.atom_a_injected,
        m1.atom_b_injected,
    ];
    let cross = o2
        .delta_n
        .restrict(|k| first_atoms.iter().any(|m| m.index() == k));
    Ok(PairOutput {
        cross_back_action: vacuum_variance(&cross, registry)?,
        covariance: cov,
        correlation: if denom > 0.0 { cov / denom } else { 0.0 },
        differential,
        differential_variance,
        first: o1,
        second: o2,
        link,
    })
}

/// Unit system for the gravitational-wave response.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GwUnits {
    pub speed_of_light: f64,
}

impl Default for GwUnits {
    fn default() -> Self {
        GwUnits { speed_of_light: 1.0 }
    }
}

/// Parameters of a plane gravitational wave seen by a pair of interferometers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GwParams {
    /// Angular frequency.
    pub omega: f64,
    pub strain: f64,
    /// Distance between the interferometers.
    pub baseline: f64,
    pub interrogation_time: f64,
    /// Effective wavenumber of the atom-light interaction.
    pub wavenumber: f64,
    /// Observation time.
    pub time: f64,
    #[serde(default)]
    pub units: GwUnits,
}

impl GwParams {
    fn validate(&self) -> Result<()> {
        check_finite("gw.omega", self.omega, false)?;
        if self.omega < 0.0 {
            return Err(invalid("gw.omega", "must be non-negative"));
        }
        check_finite("gw.strain", self.strain, false)?;
        check_finite("gw.baseline", self.baseline, true)?;
        check_finite("gw.interrogation_time", self.interrogation_time, true)?;
        check_finite("gw.wavenumber", self.wavenumber, false)?;
        check_finite("gw.time", self.time, false)?;
        check_finite("gw.units.speed_of_light", self.units.speed_of_light, true)?;
        Ok(())
    }
}

/// Differential phase `k h L sin^2(w T / 2) (c sin(w L / c) / w) sin(w t)`.
pub fn gw_phase_response(p: &GwParams) -> Result<f64> {
    p.validate()?;
    let c = p.units.speed_of_light;
    let w = p.omega;
    if w == 0.0 {
        return Ok(0.0);
    }
    let half = (0.5 * w * p.interrogation_time).sin();
    let light = c * (w * p.baseline / c).sin() / w;
    Ok(p.wavenumber * p.strain * p.baseline * half * half * light * (w * p.time).sin())
}

/// `lim_{wT -> 0} phi / (w T)^2` at fixed `w`, `L` and `t`.
pub fn gw_low_frequency_ratio(p: &GwParams) -> Result<f64> {
    p.validate()?;
    let c = p.units.speed_of_light;
    let w = p.omega;
    if w == 0.0 {
        return Ok(0.0);
    }
    let light = c * (w * p.baseline / c).sin() / w;
    Ok(0.25 * p.wavenumber * p.strain * p.baseline * light * (w * p.time).sin())
}

/// Tidal acceleration `w^2 h L` of the wave across the baseline.
pub fn gw_tidal_acceleration(p: &GwParams) -> f64 {
    p.omega * p.omega * p.strain * p.baseline
}
