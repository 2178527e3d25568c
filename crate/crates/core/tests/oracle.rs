use std::f64::consts::{FRAC_PI_2, PI};

use matterwave::exec::Execution;
use matterwave::kernel::{
    basis_change, evolve_fluctuations, evolve_with_back_action, Channels, KernelParams,
};
use matterwave::mode_algebra::{ModeKind, ModeRegistry, ModeState, OperatorExpr};
use matterwave::oracle::rk4::{output_commutator, relative_deviation, ChainIntegration, ChainModes};
use matterwave::oracle::{
    integrate_chain, integrate_kernel, monte_carlo, profile_checks, GridConfig, MonteCarloConfig,
    ProfileSpec,
};
use matterwave::{Complex64 as C64, Error};

const ZERO: C64 = C64::new(0.0, 0.0);

fn grid(steps: usize) -> GridConfig {
    GridConfig {
        steps,
        include_dynamical: false,
    }
}

/// `T^dagger U T` for the integrated atom block of kernel 0.
fn pm_propagator(out: &ChainIntegration, phi: f64) -> [[C64; 2]; 2] {
    let t = basis_change(phi);
    let u = nalgebra::Matrix2::new(
        out.atoms[(0, 0)],
        out.atoms[(0, 1)],
        out.atoms[(1, 0)],
        out.atoms[(1, 1)],
    );
    let d = t.adjoint() * u * t;
    [[d[(0, 0)], d[(0, 1)]], [d[(1, 0)], d[(1, 1)]]]
}

#[test]
fn free_propagator_in_pm_basis() {
    let (omega, phi, tau) = (1.5, 0.6, 2.0);
    let p = KernelParams::balanced(omega, 0.0, phi, tau, 0.0).unwrap();
    let out = integrate_kernel(&p, [ZERO, ZERO], GridConfig::with_resolution(&p, 1e-3)).unwrap();
    let d = pm_propagator(&out, phi);
    let want = [
        C64::from_polar(1.0, -omega * tau),
        C64::from_polar(1.0, omega * tau),
    ];
    assert!((d[0][0] - want[0]).norm() < 1e-8);
    assert!((d[1][1] - want[1]).norm() < 1e-8);
    assert!(d[0][1].norm() < 1e-8 && d[1][0].norm() < 1e-8);
}

#[test]
fn mean_norm_conserved_over_pi_pulse() {
    let p = KernelParams::balanced(1.0, 0.1, 0.3, PI, 0.0).unwrap();
    let m = [C64::new(3.0, 1.0), C64::new(-0.5, 2.0)];
    let out = integrate_kernel(&p, m, GridConfig::with_resolution(&p, 1e-3)).unwrap();
    let n0 = m[0].norm_sqr() + m[1].norm_sqr();
    let n1 = out.mean_out[0][0].norm_sqr() + out.mean_out[0][1].norm_sqr();
    assert!((n1 - n0).abs() / n0 < 1e-10);
}

#[test]
fn fourth_order_convergence() {
    let p = KernelParams::balanced(1.0, 0.0, 0.2, FRAC_PI_2, 0.0).unwrap();
    let exact = matterwave::kernel::transfer_matrix(FRAC_PI_2, 0.2);
    let err = |n: usize| {
        let out = integrate_kernel(&p, [ZERO, ZERO], grid(n)).unwrap();
        let mut e = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                e += (out.atoms[(r, c)] - exact[(r, c)]).norm_sqr();
            }
        }
        e.sqrt()
    };
    let ratio = err(16) / err(32);
    assert!((ratio - 16.0).abs() < 1.0, "{ratio}");
}

#[test]
fn rejects_unstable_step() {
    let p = KernelParams::balanced(1.0, 0.1, 0.0, 2.0, 0.0).unwrap();
    assert!(matches!(
        integrate_kernel(&p, [ZERO, ZERO], grid(10)),
        Err(Error::UnstableStep(_))
    ));
}

#[test]
fn back_action_chain_matches_integrator() {
    let (omega, chi, tau) = (1.0, 0.2, FRAC_PI_2);
    let p1 = KernelParams::balanced(omega, chi, 0.0, tau, 0.0).unwrap();
    let p2 = KernelParams::balanced(omega, chi, FRAC_PI_2, tau, 0.0).unwrap();
    let m1 = [C64::new(3.0, 0.0), C64::new(0.0, 0.5)];
    let m2 = [C64::new(0.2, -1.0), C64::new(2.0, 0.0)];

    let mut reg = ModeRegistry::new();
    let mut atom = |l: &str| reg.register(l, ModeKind::DiscreteAtom, ModeState::Vacuum).unwrap();
    let (a1, b1, a2, b2) = (atom("A1"), atom("B1"), atom("A2"), atom("B2"));
    let mut light = |l: &str| reg.register(l, ModeKind::FilteredOptical, ModeState::Vacuum).unwrap();
    let (c, q1, q2) = (light("c"), light("p1"), light("p2"));
    let ann = |id| OperatorExpr::annihilation(id).unwrap();

    let r1 = evolve_fluctuations(&p1, m1, &[ann(a1), ann(b1)], Channels::new(c, q1).unwrap()).unwrap();
    let r2 = evolve_with_back_action(
        &p2,
        m2,
        &[ann(a2), ann(b2)],
        Channels::new(c, q2).unwrap(),
        &[&r1],
    )
    .unwrap();

    let out = integrate_chain(&[(p1, m1), (p2, m2)], GridConfig::with_resolution(&p1, 1e-3)).unwrap();
    let modes = ChainModes {
        atoms: vec![[a1, b1], [a2, b2]],
        control: c,
        passive: vec![q1, q2],
    };
    for r in 0..2 {
        let d1 = relative_deviation(&out, 0, r, &r1.exit()[r], &modes).unwrap();
        let d2 = relative_deviation(&out, 1, r, &r2.exit()[r], &modes).unwrap();
        assert!(d1 < 1e-6 && d2 < 1e-6, "{d1} {d2}");
    }
    // The downstream kernel stays unitary once back-action is included.
    assert!((output_commutator(&out, 1, 0) - 1.0).abs() < 1e-7);
}

fn quadrature(reg: &mut ModeRegistry, label: &str, amp: f64) -> OperatorExpr {
    let id = reg.register(label, ModeKind::DiscreteAtom, ModeState::Vacuum).unwrap();
    OperatorExpr::discrete(id, C64::new(amp, 0.0), C64::new(amp, 0.0)).unwrap()
}

#[test]
fn sampled_quadrature_variance() {
    let mut reg = ModeRegistry::new();
    let x = quadrature(&mut reg, "a", 1e3);
    let st = monte_carlo(&[x], &reg, &MonteCarloConfig::new(100_000, 5)).unwrap();
    assert!(st.covariance_z(0, 0, 1e6) < 3.0);
}

#[test]
fn disjoint_modes_uncorrelated() {
    let mut reg = ModeRegistry::new();
    let x = quadrature(&mut reg, "a", 2.0);
    let y = quadrature(&mut reg, "b", 3.0);
    let st = monte_carlo(&[x, y], &reg, &MonteCarloConfig::new(50_000, 9)).unwrap();
    assert!(st.covariance_z(0, 1, 0.0) < 3.0);
}

#[test]
fn sampling_is_deterministic() {
    let mut reg = ModeRegistry::new();
    let x = quadrature(&mut reg, "a", 1.0);
    let mut cfg = MonteCarloConfig::new(20_000, 42);
    let s1 = monte_carlo(std::slice::from_ref(&x), &reg, &cfg).unwrap();
    let s2 = monte_carlo(std::slice::from_ref(&x), &reg, &cfg).unwrap();
    assert_eq!(s1, s2);
    cfg.execution = Execution::Sequential;
    let s3 = monte_carlo(std::slice::from_ref(&x), &reg, &cfg).unwrap();
    assert_eq!(s1, s3);
    cfg.seed = 43;
    let s4 = monte_carlo(&[x], &reg, &cfg).unwrap();
    assert_ne!(s1, s4);
}

#[test]
fn profile_rejects_unnormalized_scale() {
    let mut s = ProfileSpec::gaussian(2.0);
    s.amplitude_scale = 0.9;
    assert!(matches!(profile_checks(&s), Err(Error::UnnormalizedProfile(_))));
    s.amplitude_scale = 1.0;
    let r = profile_checks(&s).unwrap();
    assert!((r.norm - 1.0).abs() < 1e-10);
}
