//! Laboratory parameter mapping and the phase-noise budget.
//!
//! The budget terms are order-of-magnitude scalings, not exact variances; the
//! composed interferometer in [`crate::interferometer`] gives the exact ones.

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, invalid, Result};
use crate::exec::{map_indexed, Execution};

/// Laboratory description of one pulse and atom cloud.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabParams {
    /// Spatial length `l_a` of the light pulse.
    pub pulse_length: f64,
    /// Photons per pulse, `N_L`.
    pub photon_number: f64,
    /// Atoms per cloud, `N_a`.
    pub atom_number: f64,
    /// Laser carrier frequency `omega_L`.
    pub laser_frequency: f64,
    /// Dipole couplings of the two Raman legs, already reduced to one dimension.
    pub g13: f64,
    pub g23: f64,
    /// Single-photon detuning `Delta omega_0`.
    pub detuning: f64,
    /// Excited-state frequency `omega_30`.
    pub excited_frequency: f64,
    pub beam_area: f64,
    #[serde(default = "default_c")]
    pub speed_of_light: f64,
}

fn default_c() -> f64 {
    1.0
}

/// Derived interaction-picture constants.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MappedParams {
    pub g_eff: f64,
    pub chi: f64,
    /// Photon flux `|a_L|^2 = N_L c / l_a`.
    pub photon_flux: f64,
    pub omega: f64,
    pub chi_a: f64,
    /// `k = Omega l_a / c`, the pulse area of one pulse length.
    pub momentum_scale: f64,
    pub pulse_duration: f64,
    pub atom_amplitude: f64,
    pub beam_area: f64,
    pub warnings: Vec<String>,
}

fn validity_warnings(atom_number: f64, photon_number: f64) -> Vec<String> {
    let mut w = Vec::new();
    if atom_number >= photon_number / 10.0 {
        w.push(format!(
            "atom number {atom_number:e} is not small compared with photon number {photon_number:e}; \
             the linearized model assumes N_a << N_L"
        ));
    }
    w
}

impl LabParams {
    pub fn validate(&self) -> Result<()> {
        check_finite("pulse_length", self.pulse_length, true)?;
        check_finite("photon_number", self.photon_number, true)?;
        check_finite("atom_number", self.atom_number, true)?;
        check_finite("laser_frequency", self.laser_frequency, true)?;
        check_finite("g13", self.g13, false)?;
        check_finite("g23", self.g23, false)?;
        check_finite("detuning", self.detuning, false)?;
        if self.detuning == 0.0 {
            return Err(invalid("detuning", "zero detuning: the adiabatic elimination does not apply"));
        }
        check_finite("excited_frequency", self.excited_frequency, true)?;
        check_finite("beam_area", self.beam_area, true)?;
        check_finite("speed_of_light", self.speed_of_light, true)?;
        Ok(())
    }
}

pub fn map_params(lab: &LabParams) -> Result<MappedParams> {
    lab.validate()?;
    let g_eff = lab.g13 * lab.g23 / (lab.detuning * lab.excited_frequency);
    let chi = -g_eff / (2.0 * lab.laser_frequency);
    let flux = lab.photon_number * lab.speed_of_light / lab.pulse_length;
    let omega = chi.abs() * flux;
    if omega == 0.0 {
        return Err(invalid("g13", "the effective coupling vanishes"));
    }
    let chi_a = chi.abs() * flux.sqrt();
    Ok(MappedParams {
        g_eff,
        chi,
        photon_flux: flux,
        omega,
        chi_a,
        momentum_scale: omega * lab.pulse_length / lab.speed_of_light,
        pulse_duration: lab.pulse_length / lab.speed_of_light,
        atom_amplitude: lab.atom_number.sqrt(),
        beam_area: lab.beam_area,
        warnings: validity_warnings(lab.atom_number, lab.photon_number),
    })
}

/// Phase-variance scaling terms for one configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoiseBudget {
    pub atom_number: f64,
    pub photon_number: f64,
    pub momentum_scale: f64,
    /// `N_a k^2 / N_L^2`.
    pub back_action: f64,
    /// `2 / N_a`.
    pub atom_shot: f64,
    /// `1 / N_L`.
    pub optical: f64,
    pub total: f64,
    /// `1 / N_L`.
    pub standard_quantum_limit: f64,
    pub warnings: Vec<String>,
}

fn check_counts(atom_number: Option<f64>, photon_number: f64, k: f64) -> Result<()> {
    if let Some(n) = atom_number {
        check_finite("atom_number", n, true)?;
    }
    check_finite("photon_number", photon_number, true)?;
    check_finite("momentum_scale", k, true)?;
    Ok(())
}

pub fn error_budget(atom_number: f64, photon_number: f64, k: f64) -> Result<NoiseBudget> {
    check_counts(Some(atom_number), photon_number, k)?;
    let back_action = atom_number * k * k / (photon_number * photon_number);
    let atom_shot = 2.0 / atom_number;
    let optical = 1.0 / photon_number;
    Ok(NoiseBudget {
        atom_number,
        photon_number,
        momentum_scale: k,
        back_action,
        atom_shot,
        optical,
        total: back_action + atom_shot + optical,
        standard_quantum_limit: 1.0 / photon_number,
        warnings: validity_warnings(atom_number, photon_number),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Optimum {
    pub atom_number: f64,
    /// Total variance at the optimum.
    pub variance: f64,
    /// `variance / (1 / N_L)`.
    pub ratio_to_sql: f64,
}

/// Minimizer `N_a* = sqrt(2) N_L / k` of back-action plus shot noise.
pub fn optimize_atom_number(photon_number: f64, k: f64) -> Result<Optimum> {
    check_counts(None, photon_number, k)?;
    let n = std::f64::consts::SQRT_2 * photon_number / k;
    let b = error_budget(n, photon_number, k)?;
    Ok(Optimum {
        atom_number: n,
        variance: b.total,
        ratio_to_sql: b.total * photon_number,
    })
}

/// `n` points spaced evenly in `log10` from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    check_finite("grid.lo", lo, true)?;
    check_finite("grid.hi", hi, true)?;
    if n < 2 || hi <= lo {
        return Err(invalid("grid", "need at least two points and hi > lo"));
    }
    let (a, b) = (lo.log10(), hi.log10());
    Ok((0..n)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
        .collect())
}

/// Budget at each atom number, in order.
pub fn budget_sweep(
    atom_numbers: &[f64],
    photon_number: f64,
    k: f64,
    exec: Execution,
) -> Result<Vec<NoiseBudget>> {
    map_indexed(atom_numbers.len(), exec, |i| {
        error_budget(atom_numbers[i], photon_number, k)
    })
    .into_iter()
    .collect()
}

/// Grid point with the smallest total variance.
pub fn grid_minimum(budgets: &[NoiseBudget]) -> Option<&NoiseBudget> {
    budgets
        .iter()
        .min_by(|a, b| a.total.total_cmp(&b.total))
}
