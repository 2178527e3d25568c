//! Decomposition of the optical force on the atomic fields.

use num_complex::Complex64 as C64;
use serde::Serialize;

use super::KernelParams;

const I: C64 = C64::new(0.0, 1.0);

/// Coefficients of `a_c`, `a_c^dagger`, `a_p`, `a_p^dagger` in a Langevin force.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct LangevinCoefficients {
    pub control_ann: C64,
    pub control_cre: C64,
    pub passive_ann: C64,
    pub passive_cre: C64,
}

/// `own * A_X + partner_dagger * A_Y^dagger` for the force on field `X`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct DynamicalCoefficients {
    pub own: C64,
    pub partner_dagger: C64,
}

/// Langevin, ponderomotive and dynamical parts of the force on `(A_A, A_B)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ForceTerms {
    pub langevin: [LangevinCoefficients; 2],
    pub classical: [C64; 2],
    pub dynamical: [DynamicalCoefficients; 2],
}

impl ForceTerms {
    /// Largest magnitude among the ponderomotive and dynamical coefficients.
    pub fn max_second_order(&self) -> f64 {
        let mut m = 0.0f64;
        for k in 0..2 {
            m = m
                .max(self.classical[k].norm())
                .max(self.dynamical[k].own.norm())
                .max(self.dynamical[k].partner_dagger.norm());
        }
        m
    }
}

/// Instantaneous force coefficients for mean fields `mean = (A_A, A_B)`.
///
/// The second-order terms come from evaluating the optical operators at the
/// midpoint of input and output. They scale with `|a_p|^2 - |a_c|^2` and vanish
/// identically for balanced pumps.
pub fn force_decomposition(params: &KernelParams, mean: [C64; 2]) -> ForceTerms {
    let kc = params.control_coupling;
    let kp = params.passive_coupling;
    let (pc, pp) = (params.control_phase, params.passive_phase);
    let [ma, mb] = mean;

    let langevin = [
        LangevinCoefficients {
            control_cre: -I * kc * (-I * pp).exp() * mb,
            passive_ann: -I * kp * (I * pc).exp() * mb,
            ..Default::default()
        },
        LangevinCoefficients {
            control_ann: -I * kc * (I * pp).exp() * ma,
            passive_cre: -I * kp * (-I * pc).exp() * ma,
            ..Default::default()
        },
    ];

    // chi^2 (|a_p|^2 - |a_c|^2) / 2 in coupling form; exactly zero when balanced.
    let k = 0.5 * (kc * kc - kp * kp);
    let classical = [k * mb.norm_sqr() * ma, -k * ma.norm_sqr() * mb];
    let dynamical = [
        DynamicalCoefficients {
            own: C64::new(k * mb.norm_sqr(), 0.0),
            partner_dagger: k * ma * mb,
        },
        DynamicalCoefficients {
            own: C64::new(-k * ma.norm_sqr(), 0.0),
            partner_dagger: -k * ma * mb,
        },
    ];
    ForceTerms {
        langevin,
        classical,
        dynamical,
    }
}
