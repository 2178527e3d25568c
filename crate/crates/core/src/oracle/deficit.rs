//! Commutator defect of the Langevin-only linearization.
//!
//! For unequal control and passive couplings the Langevin force alone does not
//! preserve `[A, A^dagger] = 1`; the dynamical force restores it. The defect is
//! second order in the coupling.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, invalid, Result};
use crate::kernel::{evolve_langevin_only, Channels, KernelParams};
use crate::mode_algebra::{commutator, ModeKind, ModeRegistry, ModeState, OperatorExpr};
use crate::oracle::rk4::{integrate_kernel, output_commutator, GridConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeficitSpec {
    pub omega: f64,
    pub chi_a: f64,
    /// Control coupling is `chi_a (1 + imbalance)`, passive `chi_a / (1 + imbalance)`.
    pub imbalance: f64,
    pub duration: f64,
    pub mean_in: [C64; 2],
    /// Grid resolution `dt * Omega` of the integrator cross-check.
    pub dt_omega: f64,
}

impl Default for DeficitSpec {
    fn default() -> Self {
        DeficitSpec {
            omega: 1.0,
            chi_a: 0.05,
            imbalance: 0.2,
            duration: std::f64::consts::FRAC_PI_4,
            mean_in: [C64::new(3.0, 0.0), C64::new(1.0, 0.0)],
            dt_omega: 1e-3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DeficitReport {
    /// `[A_A, A_A^dagger] - 1` at `chi_a`.
    pub deficit: f64,
    /// Same at `chi_a / 2`.
    pub deficit_half: f64,
    pub ratio: f64,
    /// Same kernel with balanced couplings.
    pub balanced: f64,
    /// Integrator value without the dynamical force, to compare with `deficit`.
    pub integrated: f64,
    /// Integrator value with the dynamical force.
    pub integrated_dynamical: f64,
}

fn params(spec: &DeficitSpec, chi: f64, imbalance: f64) -> KernelParams {
    KernelParams {
        omega: spec.omega,
        control_coupling: chi * (1.0 + imbalance),
        passive_coupling: chi / (1.0 + imbalance),
        control_phase: 0.0,
        passive_phase: 0.0,
        duration: spec.duration,
        signal_phase: 0.0,
    }
}

fn closed_form(spec: &DeficitSpec, p: &KernelParams) -> Result<f64> {
    let mut reg = ModeRegistry::new();
    let a = reg.register("A", ModeKind::DiscreteAtom, ModeState::Vacuum)?;
    let b = reg.register("B", ModeKind::DiscreteAtom, ModeState::Vacuum)?;
    let c = reg.register("control", ModeKind::FilteredOptical, ModeState::Vacuum)?;
    let q = reg.register("passive", ModeKind::FilteredOptical, ModeState::Vacuum)?;
    let atoms = [OperatorExpr::annihilation(a)?, OperatorExpr::annihilation(b)?];
    let rec = evolve_langevin_only(p, spec.mean_in, &atoms, Channels::new(c, q)?)?;
    let x = &rec.exit()[0];
    Ok(commutator(x, &x.dagger())?.re - 1.0)
}

pub fn commutator_deficit(spec: &DeficitSpec) -> Result<DeficitReport> {
    check_finite("chi_a", spec.chi_a, true)?;
    check_finite("imbalance", spec.imbalance, false)?;
    check_finite("dt_omega", spec.dt_omega, true)?;
    if spec.imbalance <= -1.0 {
        return Err(invalid("imbalance", "must exceed -1"));
    }
    let p = params(spec, spec.chi_a, spec.imbalance);
    p.validate()?;
    let deficit = closed_form(spec, &p)?;
    let deficit_half = closed_form(spec, &params(spec, spec.chi_a / 2.0, spec.imbalance))?;
    let balanced = closed_form(spec, &params(spec, spec.chi_a, 0.0))?;

    let mut grid = GridConfig::with_resolution(&p, spec.dt_omega);
    let plain = integrate_kernel(&p, spec.mean_in, grid)?;
    grid.include_dynamical = true;
    let dynamical = integrate_kernel(&p, spec.mean_in, grid)?;

    Ok(DeficitReport {
        deficit,
        deficit_half,
        ratio: deficit / deficit_half,
        balanced,
        integrated: output_commutator(&plain, 0, 0) - 1.0,
        integrated_dynamical: output_commutator(&dynamical, 0, 0) - 1.0,
    })
}
