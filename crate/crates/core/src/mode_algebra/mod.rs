//! Linearized Heisenberg operators over a registry of bosonic modes.
//!
//! An [`OperatorExpr`] is a c-number mean plus a linear combination of
//! annihilation and creation operators. Discrete modes carry scalar coefficients,
//! filtered continuum modes carry [`Weight`] functions (`int w(t) a(t) dt`).
//! All moments are taken in the vacuum of the fluctuations.

mod weight;

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub use weight::{ExpTerm, PolyExp, Weight, WeightForm, WeightKernel, Window};

use crate::error::{Error, Result};

static NEXT_REGISTRY: AtomicU64 = AtomicU64::new(1);

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModeKind {
    DiscreteAtom,
    FilteredOptical,
}

impl ModeKind {
    fn name(self) -> &'static str {
        match self {
            ModeKind::DiscreteAtom => "a discrete atom mode",
            ModeKind::FilteredOptical => "a filtered optical mode",
        }
    }
}

/// Input state of a mode. Coherent inputs have vacuum fluctuations; their mean is
/// carried separately by the caller.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ModeState {
    Vacuum,
    Coherent(C64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ModeId {
    registry: u64,
    index: usize,
    kind: ModeKind,
}

impl ModeId {
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn kind(&self) -> ModeKind {
        self.kind
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeInfo {
    pub label: String,
    pub kind: ModeKind,
    pub state: ModeState,
}

/// Owns the set of modes that expressions may refer to.
#[derive(Debug)]
pub struct ModeRegistry {
    id: u64,
    modes: Vec<ModeInfo>,
    by_label: HashMap<String, usize>,
}

impl Default for ModeRegistry {
    fn default() -> Self {
        Self::new()
    }
}

impl ModeRegistry {
    pub fn new() -> Self {
        ModeRegistry {
            id: NEXT_REGISTRY.fetch_add(1, Ordering::Relaxed),
            modes: Vec::new(),
            by_label: HashMap::new(),
        }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn register(
        &mut self,
        label: impl Into<String>,
        kind: ModeKind,
        state: ModeState,
    ) -> Result<ModeId> {
        let label = label.into();
        if self.by_label.contains_key(&label) {
            return Err(Error::DuplicateLabel(label));
        }
        let index = self.modes.len();
        self.by_label.insert(label.clone(), index);
        self.modes.push(ModeInfo { label, kind, state });
        Ok(ModeId {
            registry: self.id,
            index,
            kind,
        })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn info(&self, index: usize) -> Result<&ModeInfo> {
        self.modes.get(index).ok_or(Error::UnregisteredMode(index))
    }

    pub fn label(&self, index: usize) -> Result<&str> {
        self.info(index).map(|m| m.label.as_str())
    }

    pub fn lookup(&self, label: &str) -> Option<ModeId> {
        self.by_label.get(label).map(|&index| ModeId {
            registry: self.id,
            index,
            kind: self.modes[index].kind,
        })
    }

    pub fn modes(&self) -> impl Iterator<Item = (ModeId, &ModeInfo)> {
        self.modes.iter().enumerate().map(move |(index, m)| {
            (
                ModeId {
                    registry: self.id,
                    index,
                    kind: m.kind,
                },
                m,
            )
        })
    }

    pub fn check(&self, expr: &OperatorExpr) -> Result<()> {
        if expr.registry != self.id {
            return Err(Error::MixedRegistries);
        }
        if let Some((&index, _)) = expr.terms.iter().next_back() {
            if index >= self.modes.len() {
                return Err(Error::UnregisteredMode(index));
            }
        }
        Ok(())
    }
}

/// Coefficients of `a` and `a^dagger` of one mode.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Coefficient {
    Discrete { ann: C64, cre: C64 },
    Filtered { ann: Weight, cre: Weight },
}

impl Coefficient {
    fn add(&self, other: &Coefficient) -> Coefficient {
        match (self, other) {
            (Coefficient::Discrete { ann, cre }, Coefficient::Discrete { ann: a2, cre: c2 }) => {
                Coefficient::Discrete {
                    ann: ann + a2,
                    cre: cre + c2,
                }
            }
            (Coefficient::Filtered { ann, cre }, Coefficient::Filtered { ann: a2, cre: c2 }) => {
                Coefficient::Filtered {
                    ann: ann.add(a2),
                    cre: cre.add(c2),
                }
            }
            // Mode kinds are fixed at registration, so a given index never mixes.
            _ => unreachable!("coefficient kinds differ for one mode"),
        }
    }

    fn scale(&self, c: C64) -> Coefficient {
        match self {
            Coefficient::Discrete { ann, cre } => Coefficient::Discrete {
                ann: ann * c,
                cre: cre * c,
            },
            Coefficient::Filtered { ann, cre } => Coefficient::Filtered {
                ann: ann.scale(c),
                cre: cre.scale(c),
            },
        }
    }

    fn dagger(&self) -> Coefficient {
        match self {
            Coefficient::Discrete { ann, cre } => Coefficient::Discrete {
                ann: cre.conj(),
                cre: ann.conj(),
            },
            Coefficient::Filtered { ann, cre } => Coefficient::Filtered {
                ann: cre.conj(),
                cre: ann.conj(),
            },
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            Coefficient::Discrete { ann, cre } => *ann == ZERO && *cre == ZERO,
            Coefficient::Filtered { ann, cre } => ann.is_zero() && cre.is_zero(),
        }
    }

    /// `<x_ann a . y_cre a^dagger>` for this mode.
    fn pair(x: &Coefficient, y: &Coefficient) -> C64 {
        match (x, y) {
            (Coefficient::Discrete { ann, .. }, Coefficient::Discrete { cre, .. }) => ann * cre,
            (Coefficient::Filtered { ann, .. }, Coefficient::Filtered { cre, .. }) => {
                ann.bilinear(cre)
            }
            _ => unreachable!("coefficient kinds differ for one mode"),
        }
    }

    /// Squared size of the anti-Hermitian residual `cre - conj(ann)`.
    fn hermitian_residual(&self) -> (f64, f64) {
        match self {
            Coefficient::Discrete { ann, cre } => ((cre - ann.conj()).norm(), ann.norm()),
            Coefficient::Filtered { ann, cre } => {
                let diff = cre.add(&ann.conj().scale(C64::new(-1.0, 0.0)));
                (diff.norm_sq().sqrt(), ann.norm_sq().sqrt())
            }
        }
    }
}

/// Mean plus a linear combination of mode operators.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OperatorExpr {
    #[serde(skip)]
    registry: u64,
    mean: C64,
    terms: BTreeMap<usize, Coefficient>,
}

impl OperatorExpr {
    pub fn zero(registry: &ModeRegistry) -> Self {
        Self::constant(registry, ZERO)
    }

    pub fn constant(registry: &ModeRegistry, mean: C64) -> Self {
        OperatorExpr {
            registry: registry.id,
            mean,
            terms: BTreeMap::new(),
        }
    }

    pub(crate) fn zero_in(registry: u64) -> Self {
        OperatorExpr {
            registry,
            mean: ZERO,
            terms: BTreeMap::new(),
        }
    }

    /// `ann * a + cre * a^dagger` of a discrete mode.
    pub fn discrete(id: ModeId, ann: C64, cre: C64) -> Result<Self> {
        if id.kind != ModeKind::DiscreteAtom {
            return Err(Error::ModeKind {
                label: format!("#{}", id.index),
                expected: ModeKind::DiscreteAtom.name(),
                actual: id.kind.name(),
            });
        }
        Ok(Self::single(id, Coefficient::Discrete { ann, cre }))
    }

    pub fn annihilation(id: ModeId) -> Result<Self> {
        Self::discrete(id, C64::new(1.0, 0.0), ZERO)
    }

    pub fn creation(id: ModeId) -> Result<Self> {
        Self::discrete(id, ZERO, C64::new(1.0, 0.0))
    }

    /// `int ann(t) a(t) dt + int cre(t) a^dagger(t) dt` of a continuum mode.
    pub fn filtered(id: ModeId, ann: Weight, cre: Weight) -> Result<Self> {
        if id.kind != ModeKind::FilteredOptical {
            return Err(Error::ModeKind {
                label: format!("#{}", id.index),
                expected: ModeKind::FilteredOptical.name(),
                actual: id.kind.name(),
            });
        }
        Ok(Self::single(id, Coefficient::Filtered { ann, cre }))
    }

    fn single(id: ModeId, c: Coefficient) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(id.index, c);
        }
        OperatorExpr {
            registry: id.registry,
            mean: ZERO,
            terms,
        }
    }

    pub fn registry_id(&self) -> u64 {
        self.registry
    }

    pub fn mean(&self) -> C64 {
        self.mean
    }

    pub fn with_mean(mut self, mean: C64) -> Self {
        self.mean = mean;
        self
    }

    /// The same expression with its mean removed.
    pub fn fluctuation(&self) -> Self {
        self.clone().with_mean(ZERO)
    }

    pub fn terms(&self) -> impl Iterator<Item = (usize, &Coefficient)> {
        self.terms.iter().map(|(&k, v)| (k, v))
    }

    pub fn coefficient(&self, id: ModeId) -> Option<&Coefficient> {
        if id.registry != self.registry {
            return None;
        }
        self.terms.get(&id.index)
    }

    /// Coefficients of a discrete mode, zero when absent.
    pub fn discrete_coefficients(&self, id: ModeId) -> (C64, C64) {
        match self.coefficient(id) {
            Some(Coefficient::Discrete { ann, cre }) => (*ann, *cre),
            _ => (ZERO, ZERO),
        }
    }

    pub fn dagger(&self) -> Self {
        OperatorExpr {
            registry: self.registry,
            mean: self.mean.conj(),
            terms: self.terms.iter().map(|(&k, v)| (k, v.dagger())).collect(),
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        OperatorExpr {
            registry: self.registry,
            mean: self.mean * c,
            terms: self
                .terms
                .iter()
                .map(|(&k, v)| (k, v.scale(c)))
                .filter(|(_, v)| !v.is_zero())
                .collect(),
        }
    }

    pub fn try_add(&self, other: &OperatorExpr) -> Result<Self> {
        if self.registry != other.registry {
            return Err(Error::MixedRegistries);
        }
        let mut out = self.clone();
        out.mean += other.mean;
        for (&k, v) in &other.terms {
            let merged = match out.terms.get(&k) {
                Some(existing) => existing.add(v),
                None => v.clone(),
            };
            if merged.is_zero() {
                out.terms.remove(&k);
            } else {
                out.terms.insert(k, merged);
            }
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &OperatorExpr) -> Result<Self> {
        self.try_add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// Keeps only the terms on modes selected by `keep`, and drops the mean.
    pub fn restrict(&self, keep: impl Fn(usize) -> bool) -> Self {
        OperatorExpr {
            registry: self.registry,
            mean: ZERO,
            terms: self
                .terms
                .iter()
                .filter(|(&k, _)| keep(k))
                .map(|(&k, v)| (k, v.clone()))
                .collect(),
        }
    }

    /// Hermitian residual relative to the expression size.
    pub fn hermitian_residual(&self) -> f64 {
        let mut resid = self.mean.im.abs();
        let mut scale = self.mean.norm();
        for c in self.terms.values() {
            let (r, s) = c.hermitian_residual();
            resid = resid.max(r);
            scale = scale.max(s);
        }
        resid / scale.max(1.0)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_residual() <= tol
    }
}

/// Tolerance used when a moment requires a Hermitian argument.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// `sum_k c_k x_k` over expressions from one registry.
pub fn combine(parts: &[(C64, &OperatorExpr)]) -> Result<OperatorExpr> {
    let (first, rest) = parts.split_first().ok_or(Error::Empty("combination"))?;
    let mut out = first.1.scale(first.0);
    for (c, x) in rest {
        out = out.try_add(&x.scale(*c))?;
    }
    Ok(out)
}

/// Vacuum second moment `<dx dy>` of the fluctuations.
pub fn second_moment(x: &OperatorExpr, y: &OperatorExpr) -> Result<C64> {
    if x.registry != y.registry {
        return Err(Error::MixedRegistries);
    }
    let mut sum = ZERO;
    for (k, cx) in &x.terms {
        if let Some(cy) = y.terms.get(k) {
            sum += Coefficient::pair(cx, cy);
        }
    }
    Ok(sum)
}

/// `[x, y]`, a c-number for linear expressions.
pub fn commutator(x: &OperatorExpr, y: &OperatorExpr) -> Result<C64> {
    Ok(second_moment(x, y)? - second_moment(y, x)?)
}

/// Symmetrized covariance of two Hermitian expressions.
pub fn covariance(x: &OperatorExpr, y: &OperatorExpr, registry: &ModeRegistry) -> Result<C64> {
    registry.check(x)?;
    registry.check(y)?;
    for e in [x, y] {
        let r = e.hermitian_residual();
        if r > HERMITIAN_TOL {
            return Err(Error::NotHermitian(r));
        }
    }
    Ok(0.5 * (second_moment(x, y)? + second_moment(y, x)?))
}

/// Vacuum variance of a Hermitian expression.
pub fn vacuum_variance(x: &OperatorExpr, registry: &ModeRegistry) -> Result<f64> {
    Ok(covariance(x, x, registry)?.re.max(0.0))
}
