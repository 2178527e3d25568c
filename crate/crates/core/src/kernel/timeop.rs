//! Operator-valued functions of kernel-local time.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::mode_algebra::{ModeId, OperatorExpr, PolyExp, Weight, Window};

#[derive(Clone, Debug)]
enum OpTerm {
    /// `f(t) * X` with a fixed expression `X`.
    Atom { f: PolyExp, op: OperatorExpr },
    /// `f(t) * a(t)` (or `a^dagger(t)`) of a white-noise channel.
    Local {
        mode: ModeId,
        creation: bool,
        f: PolyExp,
    },
    /// `outer(t) * int_0^t inner(s) a(s) ds`.
    Integrated {
        mode: ModeId,
        creation: bool,
        outer: PolyExp,
        inner: PolyExp,
    },
}

/// A linear operator-valued function on `[0, duration]`.
#[derive(Clone, Debug)]
pub struct TimeOp {
    registry: u64,
    duration: f64,
    terms: Vec<OpTerm>,
}

impl TimeOp {
    pub fn zero(registry: u64, duration: f64) -> Self {
        TimeOp {
            registry,
            duration,
            terms: Vec::new(),
        }
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn atom(duration: f64, f: PolyExp, op: OperatorExpr) -> Self {
        let registry = op.registry_id();
        let mut out = Self::zero(registry, duration);
        if !f.is_zero() {
            out.terms.push(OpTerm::Atom { f, op });
        }
        out
    }

    pub fn local(registry: u64, duration: f64, mode: ModeId, creation: bool, f: PolyExp) -> Self {
        let mut out = Self::zero(registry, duration);
        if !f.is_zero() {
            out.terms.push(OpTerm::Local { mode, creation, f });
        }
        out
    }

    fn compatible(&self, other: &TimeOp) -> Result<()> {
        if self.registry != other.registry {
            return Err(Error::MixedRegistries);
        }
        if self.duration != other.duration {
            return Err(Error::ChannelMismatch(format!(
                "kernel windows differ ({} vs {})",
                self.duration, other.duration
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &TimeOp) -> Result<TimeOp> {
        self.compatible(other)?;
        let mut out = self.clone();
        out.terms.extend(other.terms.iter().cloned());
        Ok(out)
    }

    /// Pointwise product with a scalar function of time.
    pub fn mul_fn(&self, g: &PolyExp) -> TimeOp {
        let terms = self
            .terms
            .iter()
            .map(|t| match t {
                OpTerm::Atom { f, op } => OpTerm::Atom {
                    f: f.mul(g),
                    op: op.clone(),
                },
                OpTerm::Local { mode, creation, f } => OpTerm::Local {
                    mode: *mode,
                    creation: *creation,
                    f: f.mul(g),
                },
                OpTerm::Integrated {
                    mode,
                    creation,
                    outer,
                    inner,
                } => OpTerm::Integrated {
                    mode: *mode,
                    creation: *creation,
                    outer: outer.mul(g),
                    inner: inner.clone(),
                },
            })
            .collect();
        TimeOp {
            terms,
            ..self.clone_empty()
        }
    }

    pub fn scale(&self, c: C64) -> TimeOp {
        self.mul_fn(&PolyExp::constant(c))
    }

    fn clone_empty(&self) -> TimeOp {
        TimeOp::zero(self.registry, self.duration)
    }

    pub fn dagger(&self) -> TimeOp {
        let terms = self
            .terms
            .iter()
            .map(|t| match t {
                OpTerm::Atom { f, op } => OpTerm::Atom {
                    f: f.conj(),
                    op: op.dagger(),
                },
                OpTerm::Local { mode, creation, f } => OpTerm::Local {
                    mode: *mode,
                    creation: !creation,
                    f: f.conj(),
                },
                OpTerm::Integrated {
                    mode,
                    creation,
                    outer,
                    inner,
                } => OpTerm::Integrated {
                    mode: *mode,
                    creation: !creation,
                    outer: outer.conj(),
                    inner: inner.conj(),
                },
            })
            .collect();
        TimeOp {
            terms,
            ..self.clone_empty()
        }
    }

    /// `int_0^t exp(-i*lambda*(t-s)) op(s) ds` as a new function of `t`.
    pub fn propagate(&self, lambda: f64) -> TimeOp {
        let out_phase = PolyExp::exp(C64::new(1.0, 0.0), -lambda);
        let in_phase = PolyExp::exp(C64::new(1.0, 0.0), lambda);
        let mut terms = Vec::with_capacity(self.terms.len() * 2);
        for t in &self.terms {
            match t {
                OpTerm::Atom { f, op } => {
                    let g = in_phase.mul(f).integral_from(0.0);
                    terms.push(OpTerm::Atom {
                        f: out_phase.mul(&g),
                        op: op.clone(),
                    });
                }
                OpTerm::Local { mode, creation, f } => terms.push(OpTerm::Integrated {
                    mode: *mode,
                    creation: *creation,
                    outer: out_phase.clone(),
                    inner: in_phase.mul(f),
                }),
                OpTerm::Integrated {
                    mode,
                    creation,
                    outer,
                    inner,
                } => {
                    // int_0^t h(s) int_0^s g a = H(t) int_0^t g a - int_0^t (H g) a
                    let h = in_phase.mul(outer).antiderivative();
                    terms.push(OpTerm::Integrated {
                        mode: *mode,
                        creation: *creation,
                        outer: out_phase.mul(&h),
                        inner: inner.clone(),
                    });
                    terms.push(OpTerm::Integrated {
                        mode: *mode,
                        creation: *creation,
                        outer: out_phase.scale(C64::new(-1.0, 0.0)),
                        inner: h.mul(inner),
                    });
                }
            }
        }
        TimeOp {
            terms,
            ..self.clone_empty()
        }
    }

    fn window(&self) -> Window {
        Window {
            start: 0.0,
            end: self.duration,
        }
    }

    fn channel_expr(&self, mode: ModeId, creation: bool, w: PolyExp) -> Result<OperatorExpr> {
        let w = Weight::piece(self.window(), w);
        if creation {
            OperatorExpr::filtered(mode, Weight::zero(), w)
        } else {
            OperatorExpr::filtered(mode, w, Weight::zero())
        }
    }

    /// Value at time `t`. White-noise terms have no pointwise value.
    pub fn eval(&self, t: f64) -> Result<OperatorExpr> {
        if !(0.0..=self.duration).contains(&t) {
            return Err(Error::TimeOutOfWindow {
                t,
                duration: self.duration,
            });
        }
        let mut out = OperatorExpr::zero_in(self.registry);
        for term in &self.terms {
            let piece = match term {
                OpTerm::Atom { f, op } => op.scale(f.eval(t)),
                OpTerm::Local { .. } => return Err(Error::PointwiseNoise),
                OpTerm::Integrated {
                    mode,
                    creation,
                    outer,
                    inner,
                } => {
                    if t == 0.0 {
                        continue;
                    }
                    let w = Weight::piece(Window { start: 0.0, end: t }, inner.scale(outer.eval(t)));
                    if *creation {
                        OperatorExpr::filtered(*mode, Weight::zero(), w)?
                    } else {
                        OperatorExpr::filtered(*mode, w, Weight::zero())?
                    }
                }
            };
            out = out.try_add(&piece)?;
        }
        Ok(out)
    }

    pub fn eval_end(&self) -> Result<OperatorExpr> {
        self.eval(self.duration)
    }

    /// `int_0^T w(t) op(t) dt`.
    pub fn filter(&self, w: &PolyExp) -> Result<OperatorExpr> {
        let tau = self.duration;
        let mut out = OperatorExpr::zero_in(self.registry);
        for term in &self.terms {
            let piece = match term {
                OpTerm::Atom { f, op } => op.scale(w.mul(f).integrate(0.0, tau)),
                OpTerm::Local { mode, creation, f } => {
                    self.channel_expr(*mode, *creation, w.mul(f))?
                }
                OpTerm::Integrated {
                    mode,
                    creation,
                    outer,
                    inner,
                } => {
                    let k = w.mul(outer).antiderivative();
                    let tail = PolyExp::constant(k.eval(tau)).sub(&k);
                    self.channel_expr(*mode, *creation, inner.mul(&tail))?
                }
            };
            out = out.try_add(&piece)?;
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mode_algebra::{commutator, ModeKind, ModeRegistry, ModeState};

    #[test]
    fn propagated_local_noise_matches_direct_integral() {
        let mut reg = ModeRegistry::new();
        let m = reg
            .register("c", ModeKind::FilteredOptical, ModeState::Vacuum)
            .unwrap();
        let tau = 1.3;
        let lam = 2.0;
        let src = TimeOp::local(reg.id(), tau, m, false, PolyExp::exp(C64::new(0.5, 0.0), 1.0));
        let x = src.propagate(lam).eval_end().unwrap();
        // kernel: exp(-i lam (tau - s)) * 0.5 exp(i s)
        let (ann, _) = match x.coefficient(m).unwrap() {
            crate::mode_algebra::Coefficient::Filtered { ann, cre } => (ann.clone(), cre.clone()),
            _ => unreachable!(),
        };
        for &s in &[0.1, 0.6, 1.2] {
            let expect = C64::new(0.0, -lam * (tau - s)).exp() * 0.5 * C64::new(0.0, s).exp();
            assert!((ann.eval(s) - expect).norm() < 1e-13);
        }
    }

    #[test]
    fn filter_of_integrated_matches_nested_quadrature() {
        let mut reg = ModeRegistry::new();
        let m = reg
            .register("c", ModeKind::FilteredOptical, ModeState::Vacuum)
            .unwrap();
        let tau = 1.0;
        let src = TimeOp::local(reg.id(), tau, m, false, PolyExp::exp(C64::new(1.0, 0.0), 0.7));
        let prop = src.propagate(1.5).propagate(-0.4);
        let w = PolyExp::exp(C64::new(1.0, 0.2), 0.9);
        let x = prop.filter(&w).unwrap();
        // Brute force: the kernel at s is int_s^tau w(t) K(t, s) dt with K from eval(t).
        let n = 400;
        let s = 0.37;
        let mut sum = C64::new(0.0, 0.0);
        let h = (tau - s) / n as f64;
        for i in 0..=n {
            let t = s + h * i as f64;
            let kt = match prop.eval(t).unwrap().coefficient(m) {
                Some(crate::mode_algebra::Coefficient::Filtered { ann, .. }) => ann.eval(s),
                _ => C64::new(0.0, 0.0),
            };
            let wt = if i == 0 || i == n { 0.5 } else { 1.0 };
            sum += w.eval(t) * kt * wt * h;
        }
        let got = match x.coefficient(m).unwrap() {
            crate::mode_algebra::Coefficient::Filtered { ann, .. } => ann.eval(s),
            _ => unreachable!(),
        };
        assert!((got - sum).norm() < 1e-5 * sum.norm().max(1e-3));
        let _ = commutator(&x, &x.dagger()).unwrap();
    }

    #[test]
    fn white_noise_has_no_pointwise_value() {
        let mut reg = ModeRegistry::new();
        let m = reg
            .register("c", ModeKind::FilteredOptical, ModeState::Vacuum)
            .unwrap();
        let src = TimeOp::local(reg.id(), 1.0, m, false, PolyExp::constant(C64::new(1.0, 0.0)));
        assert_eq!(src.eval(0.5).unwrap_err(), Error::PointwiseNoise);
        assert!(matches!(src.eval(2.0), Err(Error::TimeOutOfWindow { .. })));
    }
}
