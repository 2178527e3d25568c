//! Identities of the Gaussian cloud profile and the effective atom operator.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, invalid, Error, Result};
use crate::mode_algebra::{combine, commutator, ModeKind, ModeRegistry, ModeState, OperatorExpr};
use crate::oracle::quadrature::Composite;

/// Tolerance on the profile norm before anything else is checked.
pub const NORM_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    /// Gaussian width `Delta_A`, an inverse length.
    pub width: f64,
    #[serde(default)]
    pub center: f64,
    /// Multiplies the normalized profile; anything but 1 is rejected.
    #[serde(default = "one")]
    pub amplitude_scale: f64,
    /// Half-range of the grids in units of `1 / width`.
    #[serde(default = "default_extent")]
    pub extent: f64,
    /// Cells of the discretized atom field.
    #[serde(default = "default_cells")]
    pub cells: usize,
}

fn one() -> f64 {
    1.0
}

fn default_extent() -> f64 {
    12.0
}

fn default_cells() -> usize {
    400
}

impl ProfileSpec {
    pub fn gaussian(width: f64) -> Self {
        ProfileSpec {
            width,
            center: 0.0,
            amplitude_scale: 1.0,
            extent: default_extent(),
            cells: default_cells(),
        }
    }

    /// `f_a(y) = sqrt(D) / (2 pi)^(1/4) * exp(-D^2 (y - z0)^2 / 4)`, times the scale.
    pub fn eval(&self, y: f64) -> f64 {
        let d = self.width;
        let x = y - self.center;
        self.amplitude_scale * d.sqrt() / (2.0 * std::f64::consts::PI).powf(0.25)
            * (-d * d * x * x / 4.0).exp()
    }

    fn range(&self) -> (f64, f64) {
        let h = self.extent / self.width;
        (self.center - h, self.center + h)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProfileReport {
    /// Integral of `f_a^2`.
    pub norm: f64,
    /// Integral over z of `f_a(z)^2` times the integral of `f_a^2` up to z.
    pub half_factor: f64,
    /// `[A, A^dagger]` of the effective operator on the discretized field.
    pub commutator: f64,
}

pub fn profile_checks(spec: &ProfileSpec) -> Result<ProfileReport> {
    check_finite("width", spec.width, true)?;
    check_finite("center", spec.center, false)?;
    check_finite("amplitude_scale", spec.amplitude_scale, false)?;
    check_finite("extent", spec.extent, true)?;
    if spec.cells < 2 {
        return Err(invalid("cells", "need at least two cells"));
    }
    let (lo, hi) = spec.range();
    let q = Composite::new(10, 40);
    let sq = |y: f64| spec.eval(y).powi(2);
    let norm = q.integrate(lo, hi, sq);
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::UnnormalizedProfile(norm));
    }

    let inner = Composite::new(10, 8);
    let half_factor = q.integrate(lo, hi, |z| sq(z) * inner.integrate(lo, z, sq));

    // A = sum_k f(y_k) sqrt(h) a_k with [a_k, a_l^dagger] = delta_kl.
    let mut reg = ModeRegistry::new();
    let h = (hi - lo) / spec.cells as f64;
    let mut parts = Vec::with_capacity(spec.cells);
    for k in 0..spec.cells {
        let id = reg.register(format!("cell.{k}"), ModeKind::DiscreteAtom, ModeState::Vacuum)?;
        parts.push(OperatorExpr::annihilation(id)?);
    }
    let coefs: Vec<C64> = (0..spec.cells)
        .map(|k| C64::new(spec.eval(lo + (k as f64 + 0.5) * h) * h.sqrt(), 0.0))
        .collect();
    let terms: Vec<(C64, &OperatorExpr)> = coefs.iter().copied().zip(&parts).collect();
    let a = combine(&terms)?;
    let comm = commutator(&a, &a.dagger())?;

    Ok(ProfileReport {
        norm,
        half_factor,
        commutator: comm.re,
    })
}
