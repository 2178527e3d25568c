//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
//! unless the set of failing criteria is exactly `EXPECTED_FAILURES`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use matterwave::budget::{budget_sweep, error_budget, grid_minimum, log_grid, optimize_atom_number};
use matterwave::exec::Execution;
use matterwave::interferometer::{
    gw_low_frequency_ratio, gw_phase_response, run_pair, run_sequence, GwParams, PairLink,
    SequenceSpec,
};
use matterwave::kernel::{evolve_fluctuations, force_decomposition, Channels, KernelParams};
use matterwave::mode_algebra::{
    covariance, vacuum_variance, ModeKind, ModeRegistry, ModeState, OperatorExpr,
};
use matterwave::oracle::deficit::DeficitSpec;
use matterwave::oracle::rk4::relative_deviation;
use matterwave::oracle::{
    commutator_deficit, integrate_kernel, monte_carlo, profile_checks, ChainModes, GridConfig,
    MonteCarloConfig, ProfileSpec,
};
use matterwave::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Pinned tolerances.
const MEAN_TOL: f64 = 1e-12;
const SIGNAL_REL_TOL: f64 = 1e-12;
const SHOT_REL_TOL: f64 = 1e-12;
const SAMPLING_Z: f64 = 3.0;
const ORACLE_REL_TOL: f64 = 1e-6;
const ORACLE_DT_OMEGA: f64 = 1e-3;
const MINIMIZER_REL_TOL: f64 = 2e-3;
const SQL_RATIO_BOUND: f64 = 4.0;
const SEVERED_ABS_TOL: f64 = 1e-12;
const SHARED_MIN_Z: f64 = 5.0;
const PROFILE_NORM_TOL: f64 = 1e-10;
const HALF_FACTOR_TOL: f64 = 1e-8;
const PROFILE_COMM_TOL: f64 = 1e-8;
const DEFICIT_RATIO: f64 = 4.0;
const DEFICIT_RATIO_TOL: f64 = 0.1;
const GW_ZERO_TOL: f64 = 1e-15;
const GW_LIMIT_REL_TOL: f64 = 1e-4;

const SAMPLES: usize = 100_000;
const RANDOM_TRIALS: usize = 1000;
const SEED: u64 = 0x6d77_6176;

/// The bound of criterion 6 does not hold for k above 3 / (2 sqrt 2).
const EXPECTED_FAILURES: &[usize] = &[6];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn c1_mean_field() -> Outcome {
    let spec = SequenceSpec::mach_zehnder(1.0, 0.0, 1.0, [0.0; 3], 1.0);
    let o = run_sequence(&spec, &mut ModeRegistry::new()).unwrap();
    let want = [
        -FRAC_1_SQRT_2 * C64::from_polar(1.0, FRAC_PI_4),
        -FRAC_1_SQRT_2 * C64::from_polar(1.0, -FRAC_PI_4),
    ];
    let err = (o.mean_out[0] - want[0]).norm().max((o.mean_out[1] - want[1]).norm());
    outcome(err <= MEAN_TOL, format!("max deviation {err:.2e}"))
}

fn c2_signal_transfer() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut worst, mut worst_common) = (0.0f64, 0.0f64);
    // The signal does not depend on the coupling; a subset checks that.
    for trial in 0..RANDOM_TRIALS {
        let chi = if trial % 20 == 0 { 1e-3 } else { 0.0 };
        let amp = rng.gen_range(0.5..50.0);
        let ph = [
            rng.gen_range(-0.5..0.5),
            rng.gen_range(-0.5..0.5),
            rng.gen_range(-0.5..0.5),
        ];
        let spec = SequenceSpec::mach_zehnder(1.0, chi, amp, ph, 1.0);
        let o = run_sequence(&spec, &mut ModeRegistry::new()).unwrap();
        let n = amp * amp;
        let want = -n * (ph[0] - 2.0 * ph[1] + ph[2]);
        let scale = n * (ph[0].abs() + 2.0 * ph[1].abs() + ph[2].abs());
        worst = worst.max((o.delta_n_signal - want).abs() / scale);

        let common = SequenceSpec::mach_zehnder(1.0, chi, amp, [ph[0]; 3], 1.0);
        let oc = run_sequence(&common, &mut ModeRegistry::new()).unwrap();
        worst_common = worst_common.max(oc.delta_n_signal.abs() / (4.0 * n * ph[0].abs()));
    }
    outcome(
        worst <= SIGNAL_REL_TOL && worst_common <= SIGNAL_REL_TOL,
        format!("worst relative {worst:.2e}, common-phase residual {worst_common:.2e}"),
    )
}

fn c3_shot_noise() -> Outcome {
    let amp = 30.0;
    let spec = SequenceSpec::mach_zehnder(1.0, 1e-3, amp, [0.0; 3], 1.0);
    let mut reg = ModeRegistry::new();
    let o = run_sequence(&spec, &mut reg).unwrap();
    let m = o.modes;
    let shot = o
        .delta_n
        .fluctuation()
        .restrict(|k| k == m.atom_a_initial.index() || k == m.atom_b_initial.index());
    let v = vacuum_variance(&shot, &reg).unwrap();
    let st = monte_carlo(&[shot], &reg, &MonteCarloConfig::new(SAMPLES, SEED)).unwrap();
    let z = st.covariance_z(0, 0, v);
    outcome(
        rel(v, amp * amp) <= SHOT_REL_TOL && z <= SAMPLING_Z,
        format!("variance {v} (A^2 = {}), sampled {:.1} ({z:.2} se)", amp * amp, st.variance(0)),
    )
}

fn c4_balanced_forces() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let mut worst = 0.0f64;
    for _ in 0..RANDOM_TRIALS {
        let p = KernelParams::balanced(
            rng.gen_range(0.01..10.0),
            rng.gen_range(0.0..3.0),
            rng.gen_range(-PI..PI),
            rng.gen_range(0.1..3.0),
            0.0,
        )
        .unwrap();
        let mean = [
            C64::new(rng.gen_range(-30.0..30.0), rng.gen_range(-30.0..30.0)),
            C64::new(rng.gen_range(-30.0..30.0), rng.gen_range(-30.0..30.0)),
        ];
        worst = worst.max(force_decomposition(&p, mean).max_second_order());
    }
    outcome(worst == 0.0, format!("largest coefficient {worst:e}"))
}

fn c5_oracle_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    for theta in [FRAC_PI_4, FRAC_PI_2] {
        let p = KernelParams::balanced(2.0, 0.3, 0.7, theta / 2.0, 0.0).unwrap();
        let mean = [C64::new(4.0, -1.0), C64::new(0.5, 2.0)];
        let mut reg = ModeRegistry::new();
        let a = reg.register("A", ModeKind::DiscreteAtom, ModeState::Vacuum).unwrap();
        let b = reg.register("B", ModeKind::DiscreteAtom, ModeState::Vacuum).unwrap();
        let c = reg.register("c", ModeKind::FilteredOptical, ModeState::Vacuum).unwrap();
        let q = reg.register("p", ModeKind::FilteredOptical, ModeState::Vacuum).unwrap();
        let atoms = [OperatorExpr::annihilation(a).unwrap(), OperatorExpr::annihilation(b).unwrap()];
        let rec = evolve_fluctuations(&p, mean, &atoms, Channels::new(c, q).unwrap()).unwrap();
        let grid = GridConfig::with_resolution(&p, ORACLE_DT_OMEGA);
        assert!(grid.steps as f64 * ORACLE_DT_OMEGA >= theta - 1e-9);
        let out = integrate_kernel(&p, mean, grid).unwrap();
        let modes = ChainModes {
            atoms: vec![[a, b]],
            control: c,
            passive: vec![q],
        };
        for r in 0..2 {
            worst = worst.max(relative_deviation(&out, 0, r, &rec.exit()[r], &modes).unwrap());
        }
    }
    outcome(worst <= ORACLE_REL_TOL, format!("worst relative L2 deviation {worst:.2e}"))
}

fn c6_budget_optimum() -> Outcome {
    let mut minimizer_ok = true;
    let mut worst_ratio = 0.0f64;
    let mut worst_k = 0.0;
    for i in 0..=8 {
        let k = FRAC_PI_4 + (FRAC_PI_2 - FRAC_PI_4) * i as f64 / 8.0;
        for nl in [1e4, 1e6, 1e8] {
            let opt = optimize_atom_number(nl, k).unwrap();
            let grid = log_grid(opt.atom_number / 1e3, opt.atom_number * 1e3, 6001).unwrap();
            let sweep = budget_sweep(&grid, nl, k, Execution::Parallel).unwrap();
            let best = grid_minimum(&sweep).unwrap();
            minimizer_ok &= rel(best.atom_number, opt.atom_number) <= MINIMIZER_REL_TOL;
            // The closed form really is a minimum of the budget.
            for f in [0.99, 1.01] {
                let b = error_budget(opt.atom_number * f, nl, k).unwrap();
                minimizer_ok &= b.total > opt.variance;
            }
            if opt.ratio_to_sql > worst_ratio {
                worst_ratio = opt.ratio_to_sql;
                worst_k = k;
            }
        }
    }
    let bound_ok = worst_ratio <= SQL_RATIO_BOUND;
    outcome(
        minimizer_ok && bound_ok,
        format!(
            "grid minimizer {}; largest sigma^2_min * N_L = {worst_ratio:.3} at k = {worst_k:.3} \
             (bound {SQL_RATIO_BOUND}, exceeded for k > 1.061)",
            if minimizer_ok { "confirmed" } else { "MISMATCH" }
        ),
    )
}

fn c7_pair_correlation() -> Outcome {
    let spec = SequenceSpec::mach_zehnder(1.0, 0.03, 30.0, [0.0; 3], 1.0);
    let mut reg = ModeRegistry::new();
    let shared = run_pair(&spec, &spec, PairLink::Shared, &mut reg).unwrap();
    let severed = run_pair(&spec, &spec, PairLink::Severed, &mut ModeRegistry::new()).unwrap();
    let exact = covariance(&shared.first.delta_n, &shared.second.delta_n, &reg).unwrap().re;
    let st = monte_carlo(
        &[shared.first.delta_n.clone(), shared.second.delta_n.clone()],
        &reg,
        &MonteCarloConfig::new(SAMPLES, SEED + 7),
    )
    .unwrap();
    let z = st.covariance_z(0, 1, exact);
    let z0 = st.covariance_z(0, 1, 0.0);
    let sampled = st.covariance[0][1].re;
    let ok = exact != 0.0
        && severed.covariance.abs() <= SEVERED_ABS_TOL
        && z <= SAMPLING_Z
        && z0 >= SHARED_MIN_Z
        && sampled.signum() == exact.signum();
    outcome(
        ok,
        format!(
            "shared {exact:.3}, sampled {sampled:.3} ({z:.2} se), severed {:.1e}",
            severed.covariance
        ),
    )
}

fn c8_profile() -> Outcome {
    let r = profile_checks(&ProfileSpec::gaussian(1.0)).unwrap();
    let (e1, e2, e3) = (
        (r.norm - 1.0).abs(),
        (r.half_factor - 0.5).abs(),
        (r.commutator - 1.0).abs(),
    );
    outcome(
        e1 <= PROFILE_NORM_TOL && e2 <= HALF_FACTOR_TOL && e3 <= PROFILE_COMM_TOL,
        format!("norm {e1:.1e}, half factor {e2:.1e}, commutator {e3:.1e}"),
    )
}

fn c9_deficit() -> Outcome {
    let r = commutator_deficit(&DeficitSpec::default()).unwrap();
    outcome(
        (r.ratio - DEFICIT_RATIO).abs() <= DEFICIT_RATIO_TOL,
        format!(
            "ratio {:.6} (deficit {:.3e}); balanced {:.1e}; with dynamical force {:.1e}",
            r.ratio, r.deficit, r.balanced, r.integrated_dynamical
        ),
    )
}

fn c10_gw() -> Outcome {
    let base = GwParams {
        omega: 0.8,
        strain: 1e-2,
        baseline: 2.0,
        interrogation_time: 1.0,
        wavenumber: 5.0,
        time: 0.3,
        units: Default::default(),
    };
    let mut zero_ok = gw_phase_response(&GwParams { omega: 0.0, ..base }).unwrap() == 0.0;
    let mut last = f64::INFINITY;
    for w in [1e-2, 1e-4, 1e-6] {
        let v = gw_phase_response(&GwParams { omega: w, ..base }).unwrap().abs();
        zero_ok &= v < last;
        last = v;
    }
    let node = gw_phase_response(&GwParams { omega: PI / base.baseline, ..base }).unwrap();
    let mut worst = 0.0f64;
    for wt in [1e-2, 1e-3, 1e-4] {
        let p = GwParams { interrogation_time: wt / base.omega, ..base };
        let ratio = gw_phase_response(&p).unwrap() / (wt * wt);
        worst = worst.max(rel(ratio, gw_low_frequency_ratio(&p).unwrap()));
    }
    outcome(
        zero_ok && node.abs() <= GW_ZERO_TOL && worst <= GW_LIMIT_REL_TOL,
        format!("node residual {:.1e}, low-frequency relative {worst:.1e}", node.abs()),
    )
}

fn main() -> ExitCode {
    let criteria: [(usize, &str, Duration, fn() -> Outcome); 10] = [
        (1, "mean-field golden value", Duration::from_secs(1), c1_mean_field),
        (2, "signal transfer", Duration::from_secs(5), c2_signal_transfer),
        (3, "atom shot noise", Duration::from_secs(30), c3_shot_noise),
        (4, "balanced force cancellation", Duration::from_secs(1), c4_balanced_forces),
        (5, "integrator equivalence", Duration::from_secs(60), c5_oracle_equivalence),
        (6, "budget optimum", Duration::from_secs(5), c6_budget_optimum),
        (7, "pair correlation", Duration::from_secs(60), c7_pair_correlation),
        (8, "profile identities", Duration::from_secs(5), c8_profile),
        (9, "commutator deficit scaling", Duration::from_secs(5), c9_deficit),
        (10, "gravitational-wave response", Duration::from_secs(1), c10_gw),
    ];
    let mut failed = Vec::new();
    for (n, name, budget, run) in criteria {
        let start = Instant::now();
        let o = run();
        let dt = start.elapsed();
        let in_time = dt <= budget;
        let pass = o.passed && in_time;
        println!(
            "criterion {n:>2} {}: {name}: {} [{:.3} s of {} s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            dt.as_secs_f64(),
            budget.as_secs()
        );
        if !pass {
            failed.push(n);
        }
    }
    println!("failing criteria: {failed:?} (expected {EXPECTED_FAILURES:?})");
    if failed == EXPECTED_FAILURES {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
