//! Semiclassical sampling of vacuum noise.
//!
//! Every vacuum mode is replaced by a complex Gaussian c-number whose second
//! moments reproduce the symmetrized vacuum moments. Since all dynamics is
//! linear this reproduces the exact symmetrized covariances, so sample statistics
//! test the moment algebra.
//!
//! A filtered continuum mode is sampled only on the span of the kernel functions
//! that the requested expressions use. The Gram matrix of those functions is
//! computed by quadrature from pointwise values.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::mode_algebra::{Coefficient, ModeKind, ModeRegistry, OperatorExpr, Weight};
use crate::oracle::quadrature::Composite;

/// Samples drawn from one RNG stream.
pub const CHUNK: usize = 4096;

/// Smallest sample count accepted.
pub const MIN_SAMPLES: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub execution: Execution,
    /// Gauss-Legendre panels per window piece for the Gram matrix.
    #[serde(default = "default_panels")]
    pub quadrature_panels: usize,
}

fn default_panels() -> usize {
    16
}

impl MonteCarloConfig {
    pub fn new(samples: usize, seed: u64) -> Self {
        MonteCarloConfig {
            samples,
            seed,
            execution: Execution::default(),
            quadrature_panels: default_panels(),
        }
    }
}

/// Sample statistics of the requested expressions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarloStats {
    pub samples: usize,
    pub seed: u64,
    pub mean: Vec<C64>,
    pub mean_se: Vec<f64>,
    /// `E[(x_i - m_i)(x_j - m_j)]`, real for Hermitian expressions.
    pub covariance: Vec<Vec<C64>>,
    pub covariance_se: Vec<Vec<f64>>,
}

impl MonteCarloStats {
    pub fn variance(&self, i: usize) -> f64 {
        self.covariance[i][i].re
    }

    /// `|sample - expected| / se` for covariance entry `(i, j)`.
    pub fn covariance_z(&self, i: usize, j: usize, expected: f64) -> f64 {
        let se = self.covariance_se[i][j];
        let d = (self.covariance[i][j].re - expected).abs();
        if se == 0.0 {
            if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            d / se
        }
    }
}

/// Linear map from independent unit draws to every expression.
struct Sampler {
    means: Vec<C64>,
    /// Independent complex draws `z` with `E|z|^2 = 1/2`.
    draws: usize,
    /// Value of expression `e` is `mean + sum ann[e]·z + cre[e]·conj(z)`.
    ann: Vec<DVector<C64>>,
    cre: Vec<DVector<C64>>,
}

fn filtered_parts(expr: &OperatorExpr, index: usize) -> Option<(&Weight, &Weight)> {
    expr.terms().find(|(i, _)| *i == index).and_then(|(_, c)| match c {
        Coefficient::Filtered { ann, cre } => Some((ann, cre)),
        Coefficient::Discrete { .. } => None,
    })
}

/// Gram matrix `G_ij = integral of conj(f_i) f_j` over the union of windows.
fn gram(funcs: &[Weight], panels: usize) -> DMatrix<C64> {
    let mut cuts: Vec<f64> = funcs
        .iter()
        .flat_map(|f| f.pieces().iter().flat_map(|(w, _)| [w.start, w.end]))
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let q = Composite::new(10, panels);
    let mut pts = Vec::new();
    for w in cuts.windows(2) {
        pts.extend(q.points(w[0], w[1]));
    }
    let vals: Vec<Vec<C64>> = funcs
        .iter()
        .map(|f| pts.iter().map(|(t, _)| f.eval(*t)).collect())
        .collect();
    let n = funcs.len();
    DMatrix::from_fn(n, n, |i, j| {
        pts.iter()
            .enumerate()
            .map(|(k, (_, w))| vals[i][k].conj() * vals[j][k] * *w)
            .sum()
    })
}

/// `L` with `L L^dagger = G`, dropping negative eigenvalues from rounding.
fn factor(g: DMatrix<C64>) -> DMatrix<C64> {
    let eig = nalgebra::SymmetricEigen::new(g);
    let mut l = eig.eigenvectors;
    for (k, lambda) in eig.eigenvalues.iter().enumerate() {
        l.column_mut(k).scale_mut(lambda.max(0.0).sqrt());
    }
    l
}

fn build(exprs: &[OperatorExpr], registry: &ModeRegistry, panels: usize) -> Result<Sampler> {
    let mut used = BTreeMap::new();
    for e in exprs {
        registry.check(e)?;
        for (i, _) in e.terms() {
            used.insert(i, registry.info(i)?.kind);
        }
    }
    let n = exprs.len();
    // Blocks of columns: one per discrete mode, a span for each filtered mode.
    let mut blocks: Vec<(Vec<C64>, Vec<C64>, DMatrix<C64>)> = Vec::new();
    for (&index, &kind) in &used {
        match kind {
            ModeKind::DiscreteAtom => {
                let mut a = vec![C64::new(0.0, 0.0); n];
                let mut c = a.clone();
                for (e, x) in exprs.iter().enumerate() {
                    if let Some((_, Coefficient::Discrete { ann, cre })) =
                        x.terms().find(|(i, _)| *i == index)
                    {
                        a[e] = *ann;
                        c[e] = *cre;
                    }
                }
                // One draw; store as a 1x1 factor.
                blocks.push((a, c, DMatrix::from_element(1, 1, C64::new(1.0, 0.0))));
            }
            ModeKind::FilteredOptical => {
                // Functions f = conj(u_e) and v_e; sample c_j = integral conj(f_j) alpha.
                let mut funcs = Vec::with_capacity(2 * n);
                for x in exprs {
                    match filtered_parts(x, index) {
                        Some((u, v)) => {
                            funcs.push(u.conj());
                            funcs.push(v.clone());
                        }
                        None => {
                            funcs.push(Weight::zero());
                            funcs.push(Weight::zero());
                        }
                    }
                }
                let l = factor(gram(&funcs, panels));
                blocks.push((Vec::new(), Vec::new(), l));
            }
        }
    }

    let draws: usize = blocks.iter().map(|b| b.2.ncols()).sum();
    let mut ann = vec![DVector::<C64>::zeros(draws); n];
    let mut cre = vec![DVector::<C64>::zeros(draws); n];
    let mut col = 0;
    for (a, c, l) in &blocks {
        if a.is_empty() && l.nrows() == 2 * n {
            // integral u alpha = c_{2e}; integral v conj(alpha) = conj(c_{2e+1})
            for e in 0..n {
                for k in 0..l.ncols() {
                    ann[e][col + k] += l[(2 * e, k)];
                    cre[e][col + k] += l[(2 * e + 1, k)].conj();
                }
            }
        } else {
            for e in 0..n {
                ann[e][col] += a[e];
                cre[e][col] += c[e];
            }
        }
        col += l.ncols();
    }
    Ok(Sampler {
        means: exprs.iter().map(OperatorExpr::mean).collect(),
        draws,
        ann,
        cre,
    })
}

fn chunk_samples(s: &Sampler, seed: u64, chunk: usize, count: usize) -> Vec<Vec<C64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    let mut z = DVector::<C64>::zeros(s.draws);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        for v in z.iter_mut() {
            let g1: f64 = StandardNormal.sample(&mut rng);
            let g2: f64 = StandardNormal.sample(&mut rng);
            *v = C64::new(g1, g2) * 0.5;
        }
        let row = (0..s.means.len())
            .map(|e| {
                let mut x = s.means[e];
                for (k, zk) in z.iter().enumerate() {
                    x += s.ann[e][k] * zk + s.cre[e][k] * zk.conj();
                }
                x
            })
            .collect();
        out.push(row);
    }
    out
}

/// Samples every expression jointly and returns its statistics.
///
/// Identical inputs give bit-identical statistics for either execution mode.
pub fn monte_carlo(
    exprs: &[OperatorExpr],
    registry: &ModeRegistry,
    config: &MonteCarloConfig,
) -> Result<MonteCarloStats> {
    if exprs.is_empty() {
        return Err(Error::Empty("expressions"));
    }
    if config.samples < MIN_SAMPLES {
        return Err(invalid("samples", "at least 1000 samples are required"));
    }
    if config.quadrature_panels == 0 {
        return Err(invalid("quadrature_panels", "must be positive"));
    }
    let s = build(exprs, registry, config.quadrature_panels)?;
    let chunks = config.samples.div_ceil(CHUNK);
    let rows: Vec<Vec<C64>> = map_indexed(chunks, config.execution, |c| {
        let count = CHUNK.min(config.samples - c * CHUNK);
        chunk_samples(&s, config.seed, c, count)
    })
    .into_iter()
    .flatten()
    .collect();

    let n = exprs.len();
    let ns = rows.len() as f64;
    let mean: Vec<C64> = (0..n)
        .map(|e| rows.iter().map(|r| r[e]).sum::<C64>() / ns)
        .collect();
    let mean_se = (0..n)
        .map(|e| {
            let v: f64 = rows.iter().map(|r| (r[e] - mean[e]).norm_sqr()).sum::<f64>() / (ns - 1.0);
            (v / ns).sqrt()
        })
        .collect();
    let mut covariance = vec![vec![C64::new(0.0, 0.0); n]; n];
    let mut covariance_se = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let prods: Vec<C64> = rows
                .iter()
                .map(|r| (r[i] - mean[i]) * (r[j] - mean[j]))
                .collect();
            let c = prods.iter().sum::<C64>() / ns;
            let v = prods.iter().map(|p| (p - c).norm_sqr()).sum::<f64>() / (ns - 1.0);
            covariance[i][j] = c;
            covariance[j][i] = c;
            covariance_se[i][j] = (v / ns).sqrt();
            covariance_se[j][i] = covariance_se[i][j];
        }
    }
    Ok(MonteCarloStats {
        samples: rows.len(),
        seed: config.seed,
        mean,
        mean_se,
        covariance,
        covariance_se,
    })
}
