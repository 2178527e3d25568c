//! Time-domain weight functions for filtered continuum modes.
//!
//! Every weight is a finite sum of terms `c * t^n * exp(i*rate*t)` restricted to a
//! window. Products, conjugates, antiderivatives and definite integrals of such sums
//! stay in closed form, which is all the linearized dynamics ever needs.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const I: C64 = C64::new(0.0, 1.0);

/// Relative tolerance below which two rates are treated as equal.
const RATE_TOL: f64 = 1e-13;

/// Closed interval `[start, end]` in kernel-local time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !(start.is_finite() && end.is_finite()) || end <= start {
            return Err(Error::InvalidWindow { start, end });
        }
        Ok(Window { start, end })
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t <= self.end
    }

    pub fn intersect(&self, other: &Window) -> Option<Window> {
        let start = self.start.max(other.start);
        let end = self.end.min(other.end);
        (end > start).then_some(Window { start, end })
    }
}

/// One term `coef * t^power * exp(i*rate*t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpTerm {
    pub coef: C64,
    pub power: u32,
    pub rate: f64,
}

fn same_rate(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= RATE_TOL * a.abs().max(b.abs())
}

fn snap_sum(a: f64, b: f64) -> f64 {
    let s = a + b;
    if s.abs() <= RATE_TOL * (a.abs() + b.abs()) {
        0.0
    } else {
        s
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn binomial(n: u32, k: u32) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// `int_0^len u^j exp(i*rate*u) du` for j = 0..=n, stable for small `rate*len`.
fn shifted_moments(n: u32, rate: f64, len: f64) -> Vec<C64> {
    let x = rate * len;
    let mut out = Vec::with_capacity(n as usize + 1);
    if x.abs() <= 0.5 {
        for j in 0..=n {
            // sum_m (i*rate)^m len^(j+m+1) / (m! (j+m+1))
            let mut sum = C64::new(0.0, 0.0);
            let mut pw = C64::new(len.powi(j as i32 + 1), 0.0);
            for m in 0..60u32 {
                let term = pw / f64::from(j + m + 1);
                sum += term;
                if term.norm() <= 1e-18 * sum.norm() {
                    break;
                }
                pw = pw * I * x / f64::from(m + 1);
            }
            out.push(sum);
        }
    } else {
        let ik = I * rate;
        let e = (I * x).exp();
        let mut prev = (e - 1.0) / ik;
        out.push(prev);
        for j in 1..=n {
            let next = (e * len.powi(j as i32) - prev * f64::from(j)) / ik;
            out.push(next);
            prev = next;
        }
    }
    out
}

impl ExpTerm {
    pub fn eval(&self, t: f64) -> C64 {
        self.coef * t.powi(self.power as i32) * (I * self.rate * t).exp()
    }

    /// Definite integral over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64) -> C64 {
        let n = self.power;
        let moments = shifted_moments(n, self.rate, b - a);
        let mut sum = C64::new(0.0, 0.0);
        for (j, mj) in moments.iter().enumerate() {
            let j = j as u32;
            sum += *mj * binomial(n, j) * a.powi((n - j) as i32);
        }
        self.coef * (I * self.rate * a).exp() * sum
    }
}

/// Finite sum of [`ExpTerm`]s.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PolyExp {
    terms: Vec<ExpTerm>,
}

impl PolyExp {
    pub fn zero() -> Self {
        PolyExp { terms: Vec::new() }
    }

    pub fn constant(c: C64) -> Self {
        Self::term(c, 0, 0.0)
    }

    pub fn exp(c: C64, rate: f64) -> Self {
        Self::term(c, 0, rate)
    }

    pub fn term(coef: C64, power: u32, rate: f64) -> Self {
        let mut p = PolyExp {
            terms: vec![ExpTerm { coef, power, rate }],
        };
        p.simplify();
        p
    }

    pub fn from_terms(terms: Vec<ExpTerm>) -> Self {
        let mut p = PolyExp { terms };
        p.simplify();
        p
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn simplify(&mut self) {
        let mut merged: Vec<ExpTerm> = Vec::with_capacity(self.terms.len());
        for t in self.terms.drain(..) {
            if t.coef == C64::new(0.0, 0.0) {
                continue;
            }
            match merged
                .iter_mut()
                .find(|m| m.power == t.power && same_rate(m.rate, t.rate))
            {
                Some(m) => m.coef += t.coef,
                None => merged.push(t),
            }
        }
        merged.retain(|t| t.coef != C64::new(0.0, 0.0));
        self.terms = merged;
    }

    pub fn eval(&self, t: f64) -> C64 {
        self.terms.iter().map(|x| x.eval(t)).sum()
    }

    pub fn integrate(&self, a: f64, b: f64) -> C64 {
        self.terms.iter().map(|x| x.integrate(a, b)).sum()
    }

    pub fn add(&self, other: &PolyExp) -> PolyExp {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Self::from_terms(terms)
    }

    pub fn sub(&self, other: &PolyExp) -> PolyExp {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> PolyExp {
        Self::from_terms(
            self.terms
                .iter()
                .map(|t| ExpTerm {
                    coef: t.coef * c,
                    ..*t
                })
                .collect(),
        )
    }

    pub fn mul(&self, other: &PolyExp) -> PolyExp {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(ExpTerm {
                    coef: a.coef * b.coef,
                    power: a.power + b.power,
                    rate: snap_sum(a.rate, b.rate),
                });
            }
        }
        Self::from_terms(terms)
    }

    pub fn conj(&self) -> PolyExp {
        PolyExp {
            terms: self
                .terms
                .iter()
                .map(|t| ExpTerm {
                    coef: t.coef.conj(),
                    power: t.power,
                    rate: -t.rate,
                })
                .collect(),
        }
    }

    /// An antiderivative (the constant of integration is dropped).
    pub fn antiderivative(&self) -> PolyExp {
        let mut terms = Vec::new();
        for t in &self.terms {
            if t.rate == 0.0 {
                terms.push(ExpTerm {
                    coef: t.coef / f64::from(t.power + 1),
                    power: t.power + 1,
                    rate: 0.0,
                });
            } else {
                // t^n e^{ikt}: sum_j (-1)^j n!/(n-j)! t^(n-j) e^{ikt} / (ik)^(j+1)
                let ik = I * t.rate;
                let n = t.power;
                let mut falling = 1.0;
                let mut denom = ik;
                for j in 0..=n {
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    terms.push(ExpTerm {
                        coef: t.coef * sign * falling / denom,
                        power: n - j,
                        rate: t.rate,
                    });
                    falling *= f64::from(n - j);
                    denom *= ik;
                }
            }
        }
        Self::from_terms(terms)
    }

    /// `F(t) - F(a)` where `F` is the antiderivative.
    pub fn integral_from(&self, a: f64) -> PolyExp {
        let f = self.antiderivative();
        let fa = f.eval(a);
        f.add(&PolyExp::constant(-fa))
    }
}

/// Functional shape of a [`WeightKernel`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightForm {
    Constant,
    ComplexExponential { rate: f64 },
    Sinusoid { rate: f64 },
    PolyExponential { power: u32, rate: f64 },
}

/// A windowed weight `prefactor * form(t)` on `window`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightKernel {
    pub window: Window,
    pub prefactor: C64,
    pub form: WeightForm,
}

impl WeightKernel {
    pub fn new(window: Window, prefactor: C64, form: WeightForm) -> Self {
        WeightKernel {
            window,
            prefactor,
            form,
        }
    }

    pub fn to_polyexp(&self) -> PolyExp {
        let c = self.prefactor;
        match self.form {
            WeightForm::Constant => PolyExp::constant(c),
            WeightForm::ComplexExponential { rate } => PolyExp::exp(c, rate),
            WeightForm::Sinusoid { rate } => PolyExp::from_terms(vec![
                ExpTerm {
                    coef: c / (2.0 * I),
                    power: 0,
                    rate,
                },
                ExpTerm {
                    coef: -c / (2.0 * I),
                    power: 0,
                    rate: -rate,
                },
            ]),
            WeightForm::PolyExponential { power, rate } => PolyExp::term(c, power, rate),
        }
    }

    pub fn eval(&self, t: f64) -> C64 {
        if self.window.contains(t) {
            self.to_polyexp().eval(t)
        } else {
            C64::new(0.0, 0.0)
        }
    }

    /// `int w1(t) conj(w2(t)) dt` over the overlap of the two windows.
    pub fn inner_product(&self, other: &WeightKernel) -> C64 {
        Weight::from(*self).inner(&Weight::from(*other))
    }
}

/// A sum of windowed [`PolyExp`] pieces: the coefficient function of one
/// continuum mode inside an operator expression.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Weight {
    pieces: Vec<(Window, PolyExp)>,
}

impl From<WeightKernel> for Weight {
    fn from(k: WeightKernel) -> Self {
        Weight::piece(k.window, k.to_polyexp())
    }
}

impl Weight {
    pub fn zero() -> Self {
        Weight { pieces: Vec::new() }
    }

    pub fn piece(window: Window, f: PolyExp) -> Self {
        let mut w = Weight::zero();
        w.push(window, f);
        w
    }

    fn push(&mut self, window: Window, f: PolyExp) {
        if f.is_zero() {
            return;
        }
        match self.pieces.iter_mut().find(|(w, _)| *w == window) {
            Some((_, g)) => *g = g.add(&f),
            None => self.pieces.push((window, f)),
        }
        self.pieces.retain(|(_, g)| !g.is_zero());
    }

    pub fn pieces(&self) -> &[(Window, PolyExp)] {
        &self.pieces
    }

    pub fn is_zero(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn add(&self, other: &Weight) -> Weight {
        let mut out = self.clone();
        for (w, f) in &other.pieces {
            out.push(*w, f.clone());
        }
        out
    }

    pub fn scale(&self, c: C64) -> Weight {
        let mut out = Weight::zero();
        for (w, f) in &self.pieces {
            out.push(*w, f.scale(c));
        }
        out
    }

    pub fn conj(&self) -> Weight {
        Weight {
            pieces: self.pieces.iter().map(|(w, f)| (*w, f.conj())).collect(),
        }
    }

    pub fn eval(&self, t: f64) -> C64 {
        self.pieces
            .iter()
            .filter(|(w, _)| w.contains(t))
            .map(|(_, f)| f.eval(t))
            .sum()
    }

    /// Bilinear pairing `int w1(t) w2(t) dt` (no conjugation).
    pub fn bilinear(&self, other: &Weight) -> C64 {
        let mut sum = C64::new(0.0, 0.0);
        for (wa, fa) in &self.pieces {
            for (wb, fb) in &other.pieces {
                if let Some(w) = wa.intersect(wb) {
                    sum += fa.mul(fb).integrate(w.start, w.end);
                }
            }
        }
        sum
    }

    /// Inner product `int w1(t) conj(w2(t)) dt`.
    pub fn inner(&self, other: &Weight) -> C64 {
        self.bilinear(&other.conj())
    }

    pub fn norm_sq(&self) -> f64 {
        self.inner(self).re.max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn constant_integral() {
        let p = PolyExp::constant(c(2.0, 0.0));
        assert!((p.integrate(0.0, 3.0) - c(6.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn exponential_integral_matches_closed_form() {
        let k = 2.5;
        let p = PolyExp::exp(c(1.0, 0.0), k);
        let exact = ((I * k * 1.2).exp() - (I * k * 0.3).exp()) / (I * k);
        assert!((p.integrate(0.3, 1.2) - exact).norm() < 1e-14);
    }

    #[test]
    fn tiny_rate_is_continuous() {
        let a = PolyExp::term(c(1.0, 0.0), 2, 1e-9).integrate(0.0, 2.0);
        let b = PolyExp::term(c(1.0, 0.0), 2, 0.0).integrate(0.0, 2.0);
        assert!((a - b).norm() < 1e-8);
    }

    #[test]
    fn antiderivative_differentiates_back() {
        let p = PolyExp::from_terms(vec![
            ExpTerm {
                coef: c(0.3, -1.0),
                power: 2,
                rate: 1.7,
            },
            ExpTerm {
                coef: c(1.0, 0.5),
                power: 1,
                rate: 0.0,
            },
        ]);
        let f = p.antiderivative();
        let h = 1e-5;
        for &t in &[0.1, 0.7, 1.3] {
            let d = (f.eval(t + h) - f.eval(t - h)) / (2.0 * h);
            assert!((d - p.eval(t)).norm() < 1e-8);
        }
        let direct = p.integrate(0.2, 1.1);
        let via = f.eval(1.1) - f.eval(0.2);
        assert!((direct - via).norm() < 1e-13);
    }

    #[test]
    fn opposite_rates_cancel_to_constant() {
        let p = PolyExp::exp(c(1.0, 0.0), 3.0).mul(&PolyExp::exp(c(1.0, 0.0), -3.0));
        assert_eq!(p.terms().len(), 1);
        assert_eq!(p.terms()[0].rate, 0.0);
    }

    #[test]
    fn sinusoid_decomposes() {
        let w = Window::new(0.0, 1.0).unwrap();
        let k = WeightKernel::new(w, c(1.0, 0.0), WeightForm::Sinusoid { rate: 2.0 });
        for &t in &[0.0, 0.4, 0.9] {
            assert!((k.eval(t) - c((2.0 * t).sin(), 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn disjoint_windows_have_zero_overlap() {
        let a = WeightKernel::new(
            Window::new(0.0, 1.0).unwrap(),
            c(1.0, 0.0),
            WeightForm::Constant,
        );
        let b = WeightKernel::new(
            Window::new(2.0, 3.0).unwrap(),
            c(1.0, 0.0),
            WeightForm::Constant,
        );
        assert_eq!(a.inner_product(&b), c(0.0, 0.0));
    }

    #[test]
    fn rejects_empty_window() {
        assert!(Window::new(1.0, 1.0).is_err());
        assert!(Window::new(f64::NAN, 1.0).is_err());
    }
}
