//! Time-stepping oracle for chains of kernels on one control channel.
//!
//! The optical continuum is cut into bins of width `dt`; on bin `k` the field is
//! `b_k / sqrt(dt)` with `[b_k, b_l^dagger] = delta_kl`. The Heisenberg equations of
//! all kernels in the chain, including the control field each one hands to the
//! next, are then an ordinary linear ODE that classical RK4 integrates.
//!
//! Each state vector holds, for every kernel `j`, the coefficients of one input
//! operator in `(A_j, B_j, A_j^dagger, B_j^dagger)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::kernel::KernelParams;
use crate::mode_algebra::{Coefficient, ModeId, OperatorExpr, Weight};
use crate::oracle::quadrature::Composite;

const I: C64 = C64::new(0.0, 1.0);
const ZERO: C64 = C64::new(0.0, 0.0);

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Largest `dt * Omega` accepted.
pub const MAX_STEP: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridConfig {
    pub steps: usize,
    /// Include the second-order ponderomotive and dynamical forces.
    pub include_dynamical: bool,
}

impl GridConfig {
    /// Smallest step count with `dt * omega <= dt_omega`.
    pub fn with_resolution(params: &KernelParams, dt_omega: f64) -> Self {
        let steps = (params.theta() / dt_omega - 1e-9).ceil().max(1.0) as usize;
        GridConfig {
            steps,
            include_dynamical: false,
        }
    }
}

/// Output coefficients of one chain integration.
#[derive(Clone, Debug)]
pub struct ChainIntegration {
    pub dt: f64,
    pub steps: usize,
    pub mean_out: Vec<[C64; 2]>,
    /// Column `4i + r` gives the response to input `r` of kernel `i`, where
    /// `r` indexes `(A, B, A^dagger, B^dagger)`.
    pub atoms: DMatrix<C64>,
    /// Per bin: response to the control-channel `b_k` and `b_k^dagger`.
    pub control: Vec<[DVector<C64>; 2]>,
    /// Per kernel, per bin: response to its passive `b_k` and `b_k^dagger`.
    pub passive: Vec<Vec<[DVector<C64>; 2]>>,
}

impl ChainIntegration {
    /// Row index of output `(A_j, B_j, A_j^dagger, B_j^dagger)[r]`.
    pub fn row(kernel: usize, r: usize) -> usize {
        4 * kernel + r
    }
}

struct Kernel {
    p: KernelParams,
}

impl Kernel {
    fn rabi(&self) -> (C64, C64) {
        let phi = self.p.phase();
        (
            -I * self.p.omega * (I * phi).exp(),
            -I * self.p.omega * (-I * phi).exp(),
        )
    }

    /// Langevin coefficients `(A: [c, c^dag, p, p^dag], B: [...])` for mean `m`.
    fn langevin(&self, m: [C64; 2]) -> [[C64; 4]; 2] {
        let kc = self.p.control_coupling;
        let kp = self.p.passive_coupling;
        let (pc, pp) = (self.p.control_phase, self.p.passive_phase);
        [
            [
                ZERO,
                -I * kc * (-I * pp).exp() * m[1],
                -I * kp * (I * pc).exp() * m[1],
                ZERO,
            ],
            [
                -I * kc * (I * pp).exp() * m[0],
                ZERO,
                ZERO,
                -I * kp * (-I * pc).exp() * m[0],
            ],
        ]
    }

    /// `delta = d1 * B + d2 * A^dagger`, the control-field perturbation.
    fn control_out(&self, m: [C64; 2]) -> (C64, C64) {
        let pre = -I * self.p.control_coupling * (-I * self.p.passive_phase).exp();
        (pre * m[0].conj(), pre * m[1])
    }

    fn second_order(&self) -> f64 {
        0.5 * (self.p.control_coupling.powi(2) - self.p.passive_coupling.powi(2))
    }

    fn mean_rhs(&self, m: [C64; 2], dynamical: bool) -> [C64; 2] {
        let (ra, rb) = self.rabi();
        let mut d = [ra * m[1], rb * m[0]];
        if dynamical {
            let k = self.second_order();
            d[0] += k * m[1].norm_sqr() * m[0];
            d[1] -= k * m[0].norm_sqr() * m[1];
        }
        d
    }
}

fn rk4_mean(k: &Kernel, m0: [C64; 2], h: f64, n: usize, dynamical: bool) -> Vec<[C64; 2]> {
    let mut out = Vec::with_capacity(n + 1);
    let mut m = m0;
    out.push(m);
    let add = |a: [C64; 2], b: [C64; 2], s: f64| [a[0] + b[0] * s, a[1] + b[1] * s];
    for _ in 0..n {
        let k1 = k.mean_rhs(m, dynamical);
        let k2 = k.mean_rhs(add(m, k1, h / 2.0), dynamical);
        let k3 = k.mean_rhs(add(m, k2, h / 2.0), dynamical);
        let k4 = k.mean_rhs(add(m, k3, h), dynamical);
        for r in 0..2 {
            m[r] += (k1[r] + 2.0 * k2[r] + 2.0 * k3[r] + k4[r]) * (h / 6.0);
        }
        out.push(m);
    }
    out
}

/// Homogeneous system matrix at one instant; `means[j]` is kernel `j`'s mean.
fn system(kernels: &[Kernel], means: &[[C64; 2]], dynamical: bool) -> DMatrix<C64> {
    let d = 4 * kernels.len();
    let mut m = DMatrix::<C64>::zeros(d, d);
    for (j, k) in kernels.iter().enumerate() {
        let (a, b, ad, bd) = (4 * j, 4 * j + 1, 4 * j + 2, 4 * j + 3);
        let (ra, rb) = k.rabi();
        m[(a, b)] += ra;
        m[(b, a)] += rb;
        m[(ad, bd)] += ra.conj();
        m[(bd, ad)] += rb.conj();
        let mj = means[j];
        if dynamical {
            let s = k.second_order();
            let own_a = C64::new(s * mj[1].norm_sqr(), 0.0);
            let pd_a = s * mj[0] * mj[1];
            let own_b = C64::new(-s * mj[0].norm_sqr(), 0.0);
            let pd_b = -s * mj[0] * mj[1];
            m[(a, a)] += own_a;
            m[(a, bd)] += pd_a;
            m[(b, b)] += own_b;
            m[(b, ad)] += pd_b;
            m[(ad, ad)] += own_a.conj();
            m[(ad, b)] += pd_a.conj();
            m[(bd, bd)] += own_b.conj();
            m[(bd, a)] += pd_b.conj();
        }
        // Control field arriving at j carries every upstream perturbation.
        let l = k.langevin(mj);
        let (lcc, lca) = (l[0][1], l[1][0]);
        for (i, up) in kernels.iter().enumerate().take(j) {
            let (d1, d2) = up.control_out(means[i]);
            let (ai, bi, adi, bdi) = (4 * i, 4 * i + 1, 4 * i + 2, 4 * i + 3);
            // A_j += lcc * delta^dagger, B_j += lca * delta
            m[(a, ai)] += lcc * d2.conj();
            m[(a, bdi)] += lcc * d1.conj();
            m[(b, bi)] += lca * d1;
            m[(b, adi)] += lca * d2;
            m[(ad, adi)] += lcc.conj() * d2;
            m[(ad, bi)] += lcc.conj() * d1;
            m[(bd, bdi)] += lca.conj() * d1.conj();
            m[(bd, ai)] += lca.conj() * d2.conj();
        }
    }
    m
}

/// Source vector of a white-noise input on one channel.
///
/// `coef(j)` returns `(ann, cre)` coefficients of that channel in `(F_A, F_B)` of
/// kernel `j`; `creation` selects the `b^dagger` input.
fn source(
    n: usize,
    creation: bool,
    coef: impl Fn(usize) -> Option<[(C64, C64); 2]>,
) -> DVector<C64> {
    let mut v = DVector::<C64>::zeros(4 * n);
    for j in 0..n {
        if let Some(c) = coef(j) {
            for r in 0..2 {
                let (ann, cre) = c[r];
                let (direct, dagger) = if creation { (cre, ann) } else { (ann, cre) };
                v[4 * j + r] += direct;
                v[4 * j + 2 + r] += dagger.conj();
            }
        }
    }
    v
}

/// Integrates kernels `(params, mean_in)` that a control pulse passes in order.
pub fn integrate_chain(kernels: &[(KernelParams, [C64; 2])], grid: GridConfig) -> Result<ChainIntegration> {
    let (first, _) = kernels.first().ok_or(Error::Empty("kernel chain"))?;
    let tau = first.duration;
    for (p, _) in kernels {
        p.validate()?;
        if p.duration != tau {
            return Err(Error::ChannelMismatch(
                "kernels on one control channel must share the pulse window".into(),
            ));
        }
    }
    if grid.steps == 0 {
        return Err(invalid("steps", "must be positive"));
    }
    let n = grid.steps;
    let dt = tau / n as f64;
    let max_omega = kernels.iter().map(|(p, _)| p.omega).fold(0.0, f64::max);
    if dt * max_omega > MAX_STEP {
        return Err(Error::UnstableStep(dt * max_omega));
    }
    let ks: Vec<Kernel> = kernels.iter().map(|(p, _)| Kernel { p: *p }).collect();
    let nk = ks.len();
    let dim = 4 * nk;
    let dyn_on = grid.include_dynamical;

    // Means on the half-step grid.
    let means: Vec<Vec<[C64; 2]>> = ks
        .iter()
        .zip(kernels)
        .map(|(k, (_, m0))| rk4_mean(k, *m0, dt / 2.0, 2 * n, dyn_on))
        .collect();
    let at = |s: usize| -> Vec<[C64; 2]> { means.iter().map(|m| m[s]).collect() };

    let id = DMatrix::<C64>::identity(dim, dim);
    let scale = 1.0 / dt.sqrt();
    let mut steps = Vec::with_capacity(n);
    let mut srcs: Vec<Vec<DVector<C64>>> = Vec::with_capacity(n);
    for s in 0..n {
        let mv = [at(2 * s), at(2 * s + 1), at(2 * s + 2)];
        let sys = [
            system(&ks, &mv[0], dyn_on),
            system(&ks, &mv[1], dyn_on),
            system(&ks, &mv[2], dyn_on),
        ];
        // RK4 step map for x' = M x.
        let k1 = &sys[0];
        let k2 = &sys[1] * (&id + k1 * C64::new(dt / 2.0, 0.0));
        let k3 = &sys[1] * (&id + &k2 * C64::new(dt / 2.0, 0.0));
        let k4 = &sys[2] * (&id + &k3 * C64::new(dt, 0.0));
        let step = &id + (k1 + &k2 * c(2.0) + &k3 * c(2.0) + &k4) * C64::new(dt / 6.0, 0.0);

        // Inputs: control ann/cre, then passive ann/cre of each kernel.
        let mut inputs: Vec<DVector<C64>> = Vec::with_capacity(2 + 2 * nk);
        let channel = |which: usize, creation: bool, owner: Option<usize>| {
            let f = |m: &[[C64; 2]]| {
                source(nk, creation, |j| {
                    if owner.is_some_and(|o| o != j) {
                        return None;
                    }
                    let l = ks[j].langevin(m[j]);
                    let base = 2 * which;
                    Some([(l[0][base], l[0][base + 1]), (l[1][base], l[1][base + 1])])
                })
            };
            let s0 = f(&mv[0]) * C64::new(scale, 0.0);
            let sh = f(&mv[1]) * C64::new(scale, 0.0);
            let s1 = f(&mv[2]) * C64::new(scale, 0.0);
            // RK4 from zero state with a time-dependent source.
            let r1 = s0.clone();
            let r2 = &sys[1] * (&r1 * C64::new(dt / 2.0, 0.0)) + &sh;
            let r3 = &sys[1] * (&r2 * C64::new(dt / 2.0, 0.0)) + &sh;
            let r4 = &sys[2] * (&r3 * C64::new(dt, 0.0)) + &s1;
            (r1 + r2 * c(2.0) + r3 * c(2.0) + r4) * C64::new(dt / 6.0, 0.0)
        };
        inputs.push(channel(0, false, None));
        inputs.push(channel(0, true, None));
        for j in 0..nk {
            inputs.push(channel(1, false, Some(j)));
            inputs.push(channel(1, true, Some(j)));
        }
        steps.push(step);
        srcs.push(inputs);
    }

    // Backward accumulation of the propagator to the final time.
    let mut prop = id.clone();
    let mut control = vec![[DVector::zeros(dim), DVector::zeros(dim)]; n];
    let mut passive = vec![vec![[DVector::zeros(dim), DVector::zeros(dim)]; n]; nk];
    for s in (0..n).rev() {
        let v = &srcs[s];
        control[s] = [&prop * &v[0], &prop * &v[1]];
        for j in 0..nk {
            passive[j][s] = [&prop * &v[2 + 2 * j], &prop * &v[3 + 2 * j]];
        }
        prop = &prop * &steps[s];
    }

    Ok(ChainIntegration {
        dt,
        steps: n,
        mean_out: means.iter().map(|m| m[2 * n]).collect(),
        atoms: prop,
        control,
        passive,
    })
}

/// Single-kernel convenience wrapper.
pub fn integrate_kernel(params: &KernelParams, mean_in: [C64; 2], grid: GridConfig) -> Result<ChainIntegration> {
    integrate_chain(&[(*params, mean_in)], grid)
}

/// `[A_j, A_j^dagger]` (r = 0) or `[B_j, B_j^dagger]` (r = 1) of the integrated output.
pub fn output_commutator(out: &ChainIntegration, kernel: usize, r: usize) -> f64 {
    let row = ChainIntegration::row(kernel, r);
    let mut sum = 0.0;
    // op = u b + v b^dagger contributes |u|^2 - |v|^2
    let mut add = |ann: &DVector<C64>, cre: &DVector<C64>| {
        sum += ann[row].norm_sqr() - cre[row].norm_sqr();
    };
    let nk = out.atoms.ncols() / 4;
    for i in 0..nk {
        for q in 0..2 {
            let ann = out.atoms.column(4 * i + q).into_owned();
            let cre = out.atoms.column(4 * i + 2 + q).into_owned();
            add(&ann, &cre);
        }
    }
    for s in 0..out.steps {
        add(&out.control[s][0], &out.control[s][1]);
        for p in &out.passive {
            add(&p[s][0], &p[s][1]);
        }
    }
    sum
}

/// Modes that feed a chain, in the layout of [`ChainIntegration`].
#[derive(Clone, Debug)]
pub struct ChainModes {
    /// `(A, B)` input modes of each kernel.
    pub atoms: Vec<[ModeId; 2]>,
    pub control: ModeId,
    pub passive: Vec<ModeId>,
}

/// `(1/sqrt(dt)) * integral of w over each bin`, by Gauss-Legendre quadrature.
pub fn bin_coefficients(w: &Weight, dt: f64, steps: usize) -> Vec<C64> {
    let q = Composite::new(6, 1);
    let s = 1.0 / dt.sqrt();
    (0..steps)
        .map(|k| {
            let (a, b) = (k as f64 * dt, (k + 1) as f64 * dt);
            q.integrate_complex(a, b, |t| w.eval(t)) * s
        })
        .collect()
}

fn filtered(expr: &OperatorExpr, id: ModeId) -> (Weight, Weight) {
    match expr.coefficient(id) {
        Some(Coefficient::Filtered { ann, cre }) => (ann.clone(), cre.clone()),
        _ => (Weight::zero(), Weight::zero()),
    }
}

/// Relative L2 distance between the coefficients of `expr` and output row
/// `(A_j, B_j)[r]` of the integration.
///
/// Only the modes listed in `modes` are compared; `expr` must be a fluctuation
/// whose atom inputs are those modes' annihilators.
pub fn relative_deviation(
    out: &ChainIntegration,
    kernel: usize,
    r: usize,
    expr: &OperatorExpr,
    modes: &ChainModes,
) -> Result<f64> {
    let row = ChainIntegration::row(kernel, r);
    let (mut diff, mut norm) = (0.0, 0.0);
    let mut acc = |analytic: C64, numeric: C64| {
        diff += (analytic - numeric).norm_sqr();
        norm += analytic.norm_sqr();
    };
    for (i, ids) in modes.atoms.iter().enumerate() {
        for q in 0..2 {
            let (ann, cre) = expr.discrete_coefficients(ids[q]);
            acc(ann, out.atoms[(row, 4 * i + q)]);
            acc(cre, out.atoms[(row, 4 * i + 2 + q)]);
        }
    }
    let mut channel = |id: ModeId, numeric: &[[DVector<C64>; 2]]| {
        let (ann, cre) = filtered(expr, id);
        let a = bin_coefficients(&ann, out.dt, out.steps);
        let c = bin_coefficients(&cre, out.dt, out.steps);
        for s in 0..out.steps {
            acc(a[s], numeric[s][0][row]);
            acc(c[s], numeric[s][1][row]);
        }
    };
    channel(modes.control, &out.control);
    if modes.passive.len() != out.passive.len() {
        return Err(Error::ChannelMismatch("one passive channel per kernel".into()));
    }
    for (id, p) in modes.passive.iter().zip(&out.passive) {
        channel(*id, p);
    }
    if norm == 0.0 {
        return Err(Error::Empty("expression has no coefficients"));
    }
    Ok((diff / norm).sqrt())
}
