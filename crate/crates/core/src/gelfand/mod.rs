//! Eigenvalues, multiplicities and restricted eigenfunctions recovered from
//! heat-flow data on an observation set.
//!
//! For a source `f` supported in 𝒪 with solution `u`, the trace
//! `h(t, x) = (e^{-tA} L u)(x) = Σ_k e^{-t μ_k} μ_k log μ_k (π_k u)(x)` is an
//! exponential sum in `t` with rates `μ_k = λ_k + m`. Identifying the sum on
//! a uniform time grid yields the rates, and the per-node amplitudes are the
//! residues of its Laplace transform at `z = -μ_k`.

mod pencil;

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use pencil::{extract_exponents, uniform_step, ExponentialFit, PencilOptions};

use crate::calculus::{FieldCoefficients, HeatTrace, Mass, QuadratureControl};
use crate::error::{Error, Result};
use crate::forward::{ForwardOperator, PotentialField, SourceFunction};
use crate::linalg::{self, Matrix};
use crate::manifold::{ObservationSet, Point, SpectralModel};
use crate::quadrature;

/// `z` closer than this fraction of `μ_k` to the pole `-μ_k` is rejected.
pub const POLE_EXCLUSION_REL: f64 = 1e-9;

/// `amplitudes[i][k] = μ_k log μ_k (π_k u)(x_i)`.
pub fn trace_amplitudes(u: &FieldCoefficients, mass: Mass, nodes: &[Point]) -> Vec<Vec<f64>> {
    let model = u.model();
    let mult: Vec<f64> = model.eigenvalues().iter().map(|&l| mass.l_multiplier(l)).collect();
    let basis = model.basis_matrix(nodes);
    (0..nodes.len())
        .map(|i| {
            (0..model.truncation())
                .map(|k| {
                    let s: f64 = model
                        .block_range(k)
                        .map(|j| basis[(i, j)] * u.coeffs()[j])
                        .sum();
                    mult[k] * s
                })
                .collect()
        })
        .collect()
}

/// `h(t_j, x_i) = Σ_k e^{-t_j μ_k} μ_k log μ_k (π_k u)(x_i)` on the
/// observation nodes.
pub fn heat_trace_of_solution(
    u: &FieldCoefficients,
    mass: Mass,
    observation: &ObservationSet,
    times: &[f64],
) -> Result<HeatTrace> {
    if let Some(&t) = times.iter().find(|&&t| !(t > 0.0)) {
        return Err(Error::NonPositiveTime(t));
    }
    let model = u.model();
    let rates: Vec<f64> = model.eigenvalues().iter().map(|&l| mass.shifted(l)).collect();
    let amps = trace_amplitudes(u, mass, &observation.nodes);
    let values = times
        .iter()
        .map(|&t| {
            let decay: Vec<f64> = rates.iter().map(|mu| (-t * mu).exp()).collect();
            amps.iter()
                .map(|a| a.iter().zip(&decay).map(|(a, e)| a * e).sum())
                .collect()
        })
        .collect();
    HeatTrace::new(
        observation.node_indices.clone(),
        observation.nodes.clone(),
        times.to_vec(),
        values,
    )
}

/// Rational form `R(z, x) = Σ_k μ_k log μ_k (π_k u)(x) / (μ_k + z)` at each point.
pub fn laplace_transform(u: &FieldCoefficients, mass: Mass, nodes: &[Point], z: Complex64) -> Result<Vec<Complex64>> {
    let rates: Vec<f64> = u.model().eigenvalues().iter().map(|&l| mass.shifted(l)).collect();
    for &mu in &rates {
        if (z + mu).norm() <= POLE_EXCLUSION_REL * mu {
            return Err(Error::NearPole {
                z: z.to_string(),
                pole: mu,
            });
        }
    }
    Ok(trace_amplitudes(u, mass, nodes)
        .iter()
        .map(|a| a.iter().zip(&rates).map(|(a, mu)| *a / (z + mu)).sum())
        .collect())
}

/// `∫₀^∞ h(t, x) e^{-zt} dt` by adaptive quadrature, for `Re z > 0`.
pub fn laplace_integral(
    u: &FieldCoefficients,
    mass: Mass,
    point: &Point,
    z: Complex64,
    control: QuadratureControl,
) -> Result<Complex64> {
    if !(z.re > 0.0) {
        return Err(Error::NonPositiveArgument(z.re));
    }
    let rates: Vec<f64> = u.model().eigenvalues().iter().map(|&l| mass.shifted(l)).collect();
    let amps = trace_amplitudes(u, mass, std::slice::from_ref(point)).remove(0);
    let scale: f64 = amps.iter().map(|a| a.abs()).sum();
    if scale == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let slowest = rates[0] + z.re;
    let target = 0.25 * control.tolerance;
    let cutoff = ((scale / (slowest * target)).ln() / slowest).max(1.0);
    let h = |t: f64| -> f64 { amps.iter().zip(&rates).map(|(a, mu)| a * (-mu * t).exp()).sum() };
    let re = quadrature::integrate(|t| h(t) * (-z.re * t).exp() * (z.im * t).cos(), 0.0, cutoff, target, control.max_panels);
    let im = quadrature::integrate(|t| -h(t) * (-z.re * t).exp() * (z.im * t).sin(), 0.0, cutoff, target, control.max_panels);
    let error = re.error + im.error;
    if error > control.tolerance {
        return Err(Error::QuadratureNotConverged {
            error,
            tolerance: control.tolerance,
        });
    }
    Ok(Complex64::new(re.value, im.value))
}

/// Radial limit `lim_{z → -μ_k} (z + μ_k) R(z, x)` along the real axis,
/// Richardson-extrapolated from two offsets.
pub fn residue(u: &FieldCoefficients, mass: Mass, nodes: &[Point], k: usize) -> Result<Vec<f64>> {
    let model = u.model();
    if k >= model.truncation() {
        return Err(Error::IndexOutOfRange(format!("k = {k} with K = {}", model.truncation())));
    }
    let rates: Vec<f64> = model.eigenvalues().iter().map(|&l| mass.shifted(l)).collect();
    let gap = rates
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != k)
        .map(|(_, mu)| (mu - rates[k]).abs())
        .fold(rates[k], f64::min);
    let eps = 1e-6 * gap;
    let amps = trace_amplitudes(u, mass, nodes);
    // evaluate with the offset to the pole held exactly: z + μ_j = μ_j - μ_k + e
    let g = |e: f64| -> Vec<f64> {
        amps.iter()
            .map(|a| {
                a.iter()
                    .zip(&rates)
                    .map(|(a, mu)| a * e / (mu - rates[k] + e))
                    .sum()
            })
            .collect()
    };
    let g1 = g(eps);
    let g2 = g(0.5 * eps);
    Ok(g1.iter().zip(&g2).map(|(a, b)| 2.0 * b - a).collect())
}

/// `J = 4K` uniform times on `[t_min, t_max]` with `t_max (λ_0 + m) = 8` and
/// `t_min (λ_{K-1} + m) = 0.2`.
pub fn default_time_grid(model: &SpectralModel, mass: Mass) -> Vec<f64> {
    let ev = model.eigenvalues();
    let t_max = 8.0 / mass.shifted(ev[0]);
    let t_min = 0.2 / mass.shifted(*ev.last().expect("K >= 2"));
    let j = 4 * model.truncation();
    (0..j)
        .map(|i| t_min + (t_max - t_min) * i as f64 / (j - 1) as f64)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GelfandMode {
    /// The model is known: families are orthonormalized in `L²(M)` and every
    /// materialized eigenspace must be fully excited.
    Internal,
    /// Only 𝒪 data: families span the recovered space and are orthonormal
    /// in the 𝒪-weighted inner product.
    Blind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GelfandOptions {
    pub mode: GelfandMode,
    /// Rates within this relative gap are one eigenvalue.
    pub cluster_rel: f64,
    /// Multiplicity threshold relative to the largest singular value.
    pub rank_rel: f64,
    pub pencil: PencilOptions,
    /// Maximum exponents per source; defaults to K.
    pub order_budget: Option<usize>,
}

impl Default for GelfandOptions {
    fn default() -> Self {
        Self {
            mode: GelfandMode::Internal,
            cluster_rel: 1e-6,
            rank_rel: 1e-8,
            pencil: PencilOptions::default(),
            order_budget: None,
        }
    }
}

pub const GELFAND_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GelfandData {
    pub format_version: u32,
    pub mode: GelfandMode,
    pub mass: f64,
    pub truncation: usize,
    pub node_ids: Vec<usize>,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Strictly increasing.
    pub eigenvalues: Vec<f64>,
    pub multiplicities: Vec<usize>,
    /// `eigenfunctions[k][ℓ][i]`: ℓ-th restricted eigenfunction of the k-th
    /// eigenvalue at observation node `i`.
    pub eigenfunctions: Vec<Vec<Vec<f64>>>,
    pub sources: Vec<String>,
    pub max_fit_residual: f64,
}

impl GelfandData {
    /// Orthonormal basis of the k-th restricted family under the 𝒪-weighted
    /// inner product, as columns of `sqrt(w)`-scaled samples.
    fn weighted_span(&self, k: usize, rank_rel: f64) -> Matrix {
        let fam = &self.eigenfunctions[k];
        let a = Matrix::from_fn(self.weights.len(), fam.len(), |i, j| fam[j][i] * self.weights[i].sqrt());
        linalg::orthonormal_span(&a, rank_rel)
    }
}

struct SourceFit {
    index: usize,
    fit: ExponentialFit,
}

/// Runs the extraction pipeline for every source and assembles the
/// eigenvalues, multiplicities and restricted eigenfunction families.
pub fn build_gelfand_data(
    model: &Arc<SpectralModel>,
    mass: Mass,
    potential: &PotentialField,
    observation: &ObservationSet,
    sources: &[SourceFunction],
    times: &[f64],
    options: GelfandOptions,
) -> Result<GelfandData> {
    if sources.is_empty() {
        return Err(Error::NoSources);
    }
    let operator = ForwardOperator::new(model.clone(), mass, potential)?;
    let budget = options.order_budget.unwrap_or(model.truncation());
    let fits: Vec<SourceFit> = sources
        .par_iter()
        .enumerate()
        .map(|(index, source)| {
            source.check_support(model)?;
            let sol = operator.solve(&source.coefficients(model)?)?;
            let trace = heat_trace_of_solution(&sol.field, mass, observation, times)?;
            let channels: Vec<Vec<f64>> = (0..observation.len()).map(|i| trace.series(i)).collect();
            let fit = extract_exponents(times, &channels, budget, options.pencil)?;
            Ok(SourceFit { index, fit })
        })
        .collect::<Result<_>>()?;

    // (rate, source, amplitude row)
    let mut terms: Vec<(f64, usize, &[f64])> = fits
        .iter()
        .flat_map(|sf| {
            sf.fit
                .exponents
                .iter()
                .zip(&sf.fit.amplitudes)
                .map(move |(&mu, a)| (mu, sf.index, a.as_slice()))
        })
        .collect();
    terms.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut clusters: Vec<Vec<(f64, usize, &[f64])>> = Vec::new();
    for term in terms {
        match clusters.last_mut() {
            Some(c) if (term.0 - c[0].0).abs() <= options.cluster_rel * term.0 => c.push(term),
            _ => clusters.push(vec![term]),
        }
    }

    let sqrt_w: Vec<f64> = observation.weights.iter().map(|w| w.sqrt()).collect();
    let nodes = observation.len();
    let mut eigenvalues = Vec::with_capacity(clusters.len());
    let mut multiplicities = Vec::with_capacity(clusters.len());
    let mut families = Vec::with_capacity(clusters.len());
    let mut matched_blocks = Vec::new();
    let basis_o = match options.mode {
        GelfandMode::Internal => model.basis_matrix(&observation.nodes),
        GelfandMode::Blind => Matrix::zeros(0, 0),
    };
    for cluster in &clusters {
        let mu = cluster.iter().map(|c| c.0).sum::<f64>() / cluster.len() as f64;
        let lambda = mu - mass.value();
        let norm = mu * mu.ln();
        // columns: restricted (π_k u)(x_i) per source, sqrt(w)-weighted
        let weighted = Matrix::from_fn(nodes, cluster.len(), |i, j| cluster[j].2[i] / norm * sqrt_w[i]);
        let rank = linalg::numerical_rank(&linalg::singular_values(&weighted), options.rank_rel);
        let family = match options.mode {
            GelfandMode::Blind => weighted_gram_schmidt(&weighted, rank, options.rank_rel)
                .into_iter()
                .map(|q| q.iter().zip(&sqrt_w).map(|(v, s)| v / s).collect())
                .collect(),
            GelfandMode::Internal => {
                let k = match_block(model, lambda)?;
                matched_blocks.push(k);
                let expected = model.multiplicities()[k];
                let range = model.block_range(k);
                let block = Matrix::from_fn(nodes, expected, |i, l| basis_o[(i, range.start + l)] * sqrt_w[i]);
                let coeffs = linalg::lstsq(&block, &weighted);
                let coeff_rank = linalg::numerical_rank(&linalg::singular_values(&coeffs), options.rank_rel);
                if coeff_rank < expected || rank < expected {
                    return Err(Error::UnderExcitedEigenspace {
                        eigenvalue: lambda,
                        rank: rank.min(coeff_rank),
                        expected,
                    });
                }
                let q = weighted_gram_schmidt(&coeffs, expected, options.rank_rel);
                q.iter()
                    .map(|c| {
                        (0..nodes)
                            .map(|i| (0..expected).map(|l| basis_o[(i, range.start + l)] * c[l]).sum())
                            .collect()
                    })
                    .collect()
            }
        };
        eigenvalues.push(lambda);
        multiplicities.push(rank);
        families.push(family);
    }

    if options.mode == GelfandMode::Internal {
        for k in 0..model.truncation() {
            if !matched_blocks.contains(&k) {
                return Err(Error::UnderExcitedEigenspace {
                    eigenvalue: model.eigenvalues()[k],
                    rank: 0,
                    expected: model.multiplicities()[k],
                });
            }
        }
    }

    Ok(GelfandData {
        format_version: GELFAND_VERSION,
        mode: options.mode,
        mass: mass.value(),
        truncation: model.truncation(),
        node_ids: observation.node_indices.clone(),
        nodes: observation.nodes.iter().map(|p| p.coords.clone()).collect(),
        weights: observation.weights.clone(),
        eigenvalues,
        multiplicities,
        eigenfunctions: families,
        sources: sources.iter().map(|s| s.id.clone()).collect(),
        max_fit_residual: fits.iter().map(|f| f.fit.residual).fold(0.0, f64::max),
    })
}

fn match_block(model: &SpectralModel, lambda: f64) -> Result<usize> {
    model
        .eigenvalues()
        .iter()
        .position(|&l| (l - lambda).abs() <= 1e-5 * l.max(1.0))
        .ok_or_else(|| Error::FitFailed(format!("recovered eigenvalue {lambda} is not in the model spectrum")))
}

/// Modified Gram–Schmidt over the columns of `a` in order, skipping columns
/// whose remainder falls below `rel` times the largest column norm; stops
/// after `limit` vectors.
fn weighted_gram_schmidt(a: &Matrix, limit: usize, rel: f64) -> Vec<Vec<f64>> {
    let cols: Vec<Vec<f64>> = (0..a.ncols()).map(|j| linalg::column(a, j)).collect();
    let scale = cols.iter().map(|c| linalg::norm2(c)).fold(0.0, f64::max);
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(limit);
    for mut v in cols {
        if out.len() == limit {
            break;
        }
        for _ in 0..2 {
            for q in &out {
                let d: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= d * y);
            }
        }
        let n = linalg::norm2(&v);
        if n > rel * scale {
            out.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    out
}

/// Largest principal angle between each recovered family and the analytic
/// eigenspace of the same eigenvalue, both restricted to the observation
/// nodes.
pub fn analytic_angles(data: &GelfandData, model: &SpectralModel, observation: &ObservationSet) -> Result<Vec<f64>> {
    check_nodes(&data.node_ids, &data.nodes, &observation.node_indices, &observation.nodes.iter().map(|p| p.coords.clone()).collect::<Vec<_>>())?;
    let basis = model.basis_matrix(&observation.nodes);
    let sqrt_w: Vec<f64> = observation.weights.iter().map(|w| w.sqrt()).collect();
    data.eigenvalues
        .iter()
        .enumerate()
        .map(|(k, &lambda)| {
            let b = match_block(model, lambda)?;
            let range = model.block_range(b);
            let analytic = Matrix::from_fn(observation.len(), range.len(), |i, l| basis[(i, range.start + l)] * sqrt_w[i]);
            let qa = linalg::orthonormal_span(&analytic, 1e-12);
            let qb = data.weighted_span(k, 1e-12);
            Ok(linalg::principal_angles(&qa, &qb).into_iter().fold(0.0, f64::max))
        })
        .collect()
}

fn check_nodes(ids_a: &[usize], nodes_a: &[Vec<f64>], ids_b: &[usize], nodes_b: &[Vec<f64>]) -> Result<()> {
    if ids_a != ids_b {
        return Err(Error::IncompatibleNodes(format!(
            "{} vs {} observation nodes with different indices",
            ids_a.len(),
            ids_b.len()
        )));
    }
    for (x, y) in nodes_a.iter().zip(nodes_b) {
        if x.len() != y.len() || x.iter().zip(y).any(|(a, b)| (a - b).abs() > 1e-12) {
            return Err(Error::IncompatibleNodes(format!("node {x:?} vs {y:?}")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareTolerances {
    /// Bound on `|λ_a - λ_b| / max(|λ_a|, |λ_b|, 1)`.
    pub eigenvalue: f64,
    /// Bound on the largest principal angle (radians).
    pub angle: f64,
}

impl Default for CompareTolerances {
    fn default() -> Self {
        Self {
            eigenvalue: 1e-6,
            angle: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub k: usize,
    pub lambda_a: Option<f64>,
    pub lambda_b: Option<f64>,
    pub gap: f64,
    pub multiplicity_a: usize,
    pub multiplicity_b: usize,
    pub max_angle: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GelfandComparison {
    pub rows: Vec<ComparisonRow>,
    pub first_failure: Option<usize>,
    pub pass: bool,
}

impl GelfandComparison {
    pub fn to_table(&self) -> String {
        let mut s = String::from("k\tlambda_a\tlambda_b\tgap\tmult_a\tmult_b\tmax_angle\tpass\n");
        let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.12e}"));
        for r in &self.rows {
            s.push_str(&format!(
                "{}\t{}\t{}\t{:.6e}\t{}\t{}\t{:.6e}\t{}\n",
                r.k,
                opt(r.lambda_a),
                opt(r.lambda_b),
                r.gap,
                r.multiplicity_a,
                r.multiplicity_b,
                r.max_angle,
                r.pass
            ));
        }
        s
    }
}

/// Compares two data sets eigenvalue by eigenvalue: relative gaps,
/// multiplicities, and principal angles between the restricted eigenspaces
/// on 𝒪.
pub fn compare_gelfand(a: &GelfandData, b: &GelfandData, tol: CompareTolerances) -> Result<GelfandComparison> {
    check_nodes(&a.node_ids, &a.nodes, &b.node_ids, &b.nodes)?;
    let n = a.eigenvalues.len().max(b.eigenvalues.len());
    let mut rows = Vec::with_capacity(n);
    for k in 0..n {
        let la = a.eigenvalues.get(k).copied();
        let lb = b.eigenvalues.get(k).copied();
        let row = match (la, lb) {
            (Some(x), Some(y)) => {
                let gap = (x - y).abs() / x.abs().max(y.abs()).max(1.0);
                let sines = linalg::principal_angle_sines(&a.weighted_span(k, 1e-12), &b.weighted_span(k, 1e-12));
                let max_angle = sines.into_iter().fold(0.0_f64, f64::max).min(1.0).asin();
                let same_mult = a.multiplicities[k] == b.multiplicities[k];
                ComparisonRow {
                    k,
                    lambda_a: la,
                    lambda_b: lb,
                    gap,
                    multiplicity_a: a.multiplicities[k],
                    multiplicity_b: b.multiplicities[k],
                    max_angle,
                    pass: gap <= tol.eigenvalue && same_mult && max_angle <= tol.angle,
                }
            }
            _ => ComparisonRow {
                k,
                lambda_a: la,
                lambda_b: lb,
                gap: f64::INFINITY,
                multiplicity_a: a.multiplicities.get(k).copied().unwrap_or(0),
                multiplicity_b: b.multiplicities.get(k).copied().unwrap_or(0),
                max_angle: std::f64::consts::FRAC_PI_2,
                pass: false,
            },
        };
        rows.push(row);
    }
    let first_failure = rows.iter().find(|r| !r.pass).map(|r| r.k);
    Ok(GelfandComparison {
        pass: first_failure.is_none(),
        first_failure,
        rows,
    })
}

/// A constant fitted on the lower half of the materialized eigendata and
/// checked on all of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SanityFit {
    pub constant: f64,
    pub exponent: f64,
    pub fitted_on: usize,
    pub checked: usize,
    pub violations: usize,
    pub pass: bool,
}

const SANITY_MARGIN: f64 = 1.5;

fn fit_bound(samples: &[(f64, f64)], exponent: f64) -> SanityFit {
    // samples: (argument, value) with value <= C · argument^exponent
    let half = samples.len().div_ceil(2).max(1);
    let constant = SANITY_MARGIN
        * samples[..half]
            .iter()
            .map(|&(x, v)| v / x.powf(exponent))
            .fold(0.0, f64::max);
    let violations = samples
        .iter()
        .filter(|&&(x, v)| v > constant * x.powf(exponent) * (1.0 + 1e-12))
        .count();
    SanityFit {
        constant,
        exponent,
        fitted_on: half,
        checked: samples.len(),
        violations,
        pass: violations == 0,
    }
}

/// `N(λ) <= C λ^{n/2}` for the cumulative eigenvalue count over the
/// nonzero materialized eigenvalues.
pub fn weyl_fit(model: &SpectralModel) -> SanityFit {
    let mut count = 0usize;
    let mut samples = Vec::new();
    for (&lam, &d) in model.eigenvalues().iter().zip(model.multiplicities()) {
        count += d;
        if lam > 0.0 {
            samples.push((lam, count as f64));
        }
    }
    fit_bound(&samples, model.dimension() as f64 / 2.0)
}

/// `max_nodes |φ_{k,ℓ}| <= C (λ_k + m)^{(n-1)/4}` over every materialized
/// eigenfunction.
pub fn sup_norm_fit(model: &SpectralModel, mass: Mass) -> SanityFit {
    let b = model.basis_at_nodes();
    let block = model.block_of_index();
    let samples: Vec<(f64, f64)> = (0..model.basis_len())
        .map(|j| {
            let sup = (0..b.nrows()).map(|i| b[(i, j)].abs()).fold(0.0, f64::max);
            (mass.shifted(model.eigenvalues()[block[j]]), sup)
        })
        .collect();
    fit_bound(&samples, (model.dimension() as f64 - 1.0) / 4.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{make_source_basis, SourceShape};
    use crate::manifold::{build_model, ModelKind, ObservationDescriptor};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn circle(k: usize) -> Arc<SpectralModel> {
        Arc::new(build_model(ModelKind::Circle { radius: 1.0 }, k, None).unwrap())
    }

    fn half() -> ObservationDescriptor {
        ObservationDescriptor::AngularInterval { a: 0.0, b: PI }
    }

    fn two() -> Mass {
        Mass::new(2.0).unwrap()
    }

    #[test]
    fn single_mode_traces() {
        let m = circle(4);
        let obs = m.restrict_to_observation(&half()).unwrap();
        let times = [0.1, 0.5, 1.0];
        let c = FieldCoefficients::eigenfunction(m.clone(), 0, 1).unwrap().scale(0.4);
        let h = heat_trace_of_solution(&c, two(), &obs, &times).unwrap();
        let phi0 = 1.0 / (2.0 * PI).sqrt();
        for (j, &t) in times.iter().enumerate() {
            let expected = 0.4 * 2.0 * 2f64.ln() * (-2.0 * t).exp() * phi0;
            assert!((h.values[j][3] - expected).abs() < 1e-15);
        }
        let u = FieldCoefficients::eigenfunction(m.clone(), 1, 1).unwrap();
        let h = heat_trace_of_solution(&u, two(), &obs, &times).unwrap();
        for (j, &t) in times.iter().enumerate() {
            for (i, p) in obs.nodes.iter().enumerate() {
                let expected = 3.0 * 3f64.ln() * (-3.0 * t).exp() * p.coords[0].cos() / PI.sqrt();
                assert!((h.values[j][i] - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn trace_matches_functional_calculus() {
        let m = circle(6);
        let coeffs: Vec<f64> = (0..m.basis_len()).map(|i| ((i * 7 % 5) as f64 - 2.0) * 0.3).collect();
        let u = FieldCoefficients::new(m.clone(), coeffs).unwrap();
        let obs = m.restrict_to_observation(&half()).unwrap();
        let h = heat_trace_of_solution(&u, two(), &obs, &[0.3]).unwrap();
        let direct = u.apply_l(two()).heat_apply(two(), 0.3).unwrap();
        for (i, p) in obs.nodes.iter().enumerate() {
            assert!((h.values[0][i] - direct.evaluate(p)).abs() < 1e-13);
        }
        assert!(matches!(
            heat_trace_of_solution(&u, two(), &obs, &[0.0, 1.0]),
            Err(Error::NonPositiveTime(_))
        ));
    }

    #[test]
    fn laplace_forms_agree() {
        let m = circle(5);
        let coeffs: Vec<f64> = (0..m.basis_len()).map(|i| (i as f64 * 1.3).sin()).collect();
        let u = FieldCoefficients::new(m.clone(), coeffs).unwrap();
        let x = Point::new(vec![0.7]);
        let z = Complex64::new(1.0, 1.0);
        let rational = laplace_transform(&u, two(), std::slice::from_ref(&x), z).unwrap()[0];
        let integral = laplace_integral(&u, two(), &x, z, QuadratureControl::default()).unwrap();
        assert!((rational - integral).norm() < 1e-7, "{rational} vs {integral}");
    }

    #[test]
    fn laplace_single_mode_and_residue() {
        let m = circle(4);
        let u = FieldCoefficients::eigenfunction(m.clone(), 2, 1).unwrap();
        let x = Point::new(vec![0.3]);
        let phi = (2.0 * 0.3f64).cos() / PI.sqrt();
        let r0 = laplace_transform(&u, two(), std::slice::from_ref(&x), Complex64::new(0.0, 0.0)).unwrap()[0];
        assert!((r0.re - 6f64.ln() * phi).abs() < 1e-14);
        let res = residue(&u, two(), std::slice::from_ref(&x), 2).unwrap()[0];
        assert!((res - 6.0 * 6f64.ln() * phi).abs() < 1e-10);
        let near = laplace_transform(&u, two(), &[x], Complex64::new(-6.0, 1e-12));
        assert!(matches!(near, Err(Error::NearPole { .. })));
    }

    #[test]
    fn residue_equals_block_amplitude_for_mixed_field() {
        let m = circle(5);
        let coeffs: Vec<f64> = (0..m.basis_len()).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let u = FieldCoefficients::new(m.clone(), coeffs).unwrap();
        let x = [Point::new(vec![1.1])];
        let amps = trace_amplitudes(&u, two(), &x);
        for k in 0..5 {
            let r = residue(&u, two(), &x, k).unwrap()[0];
            assert!((r - amps[0][k]).abs() < 1e-9 * amps[0][k].abs().max(1.0), "k={k}");
        }
    }

    fn sources(m: &SpectralModel, count: usize, seed: u64) -> Vec<SourceFunction> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = SourceShape {
            radius: None,
            jitter: if seed == 0 { 0.0 } else { 0.5 },
        };
        make_source_basis(m, &half(), count, shape, &mut rng).unwrap()
    }

    #[test]
    fn circle_extraction_recovers_catalog() {
        let m = circle(5);
        let obs = m.restrict_to_observation(&half()).unwrap();
        let times = default_time_grid(&m, two());
        let src = sources(&m, 5, 0);
        let data = build_gelfand_data(&m, two(), &PotentialField::zero(), &obs, &src, &times, GelfandOptions::default())
            .unwrap();
        assert_eq!(data.multiplicities, vec![1, 2, 2, 2, 2]);
        for (got, want) in data.eigenvalues.iter().zip([0.0, 1.0, 4.0, 9.0, 16.0]) {
            assert!((got - want).abs() <= 1e-6 * want.max(1.0), "{got} vs {want}");
        }
        let angles = analytic_angles(&data, &m, &obs).unwrap();
        assert!(angles.iter().all(|&a| a < 1e-6), "{angles:?}");

        let other = build_gelfand_data(
            &m,
            two(),
            &PotentialField::zero(),
            &obs,
            &sources(&m, 5, 9),
            &times,
            GelfandOptions {
                mode: GelfandMode::Blind,
                ..GelfandOptions::default()
            },
        )
        .unwrap();
        let cmp = compare_gelfand(&data, &other, CompareTolerances::default()).unwrap();
        assert!(cmp.pass, "{}", cmp.to_table());
        let own = compare_gelfand(&data, &data, CompareTolerances::default()).unwrap();
        assert!(own.rows.iter().all(|r| r.gap == 0.0 && r.max_angle < 1e-7));
    }

    #[test]
    fn potential_does_not_move_the_rates() {
        let m = circle(5);
        let obs = m.restrict_to_observation(&half()).unwrap();
        let v = PotentialField::global("cos", |p| 0.3 * p.coords[0].cos());
        let data = build_gelfand_data(
            &m,
            two(),
            &v,
            &obs,
            &sources(&m, 5, 0),
            &default_time_grid(&m, two()),
            GelfandOptions::default(),
        )
        .unwrap();
        assert_eq!(data.multiplicities, vec![1, 2, 2, 2, 2]);
        assert!((data.eigenvalues[4] - 16.0).abs() < 1e-5);
    }

    #[test]
    fn single_mode_trace_has_one_exponent() {
        let m = circle(5);
        let obs = m.restrict_to_observation(&half()).unwrap();
        let times = default_time_grid(&m, two());
        let u = FieldCoefficients::eigenfunction(m.clone(), 1, 1).unwrap();
        let trace = heat_trace_of_solution(&u, two(), &obs, &times).unwrap();
        let ch: Vec<Vec<f64>> = (0..obs.len()).map(|i| trace.series(i)).collect();
        let fit = extract_exponents(&times, &ch, 5, PencilOptions::default()).unwrap();
        assert_eq!(fit.order(), 1);
        assert!((fit.exponents[0] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn single_symmetric_bump_in_blind_mode() {
        // a bump centered at π/2 is even about π/2, so its sin(kθ)-type
        // coefficients vanish for even k and its cos-type ones for odd k
        let m = circle(5);
        let obs = m.restrict_to_observation(&half()).unwrap();
        let src = sources(&m, 1, 0);
        let opts = GelfandOptions {
            mode: GelfandMode::Blind,
            ..GelfandOptions::default()
        };
        let times = default_time_grid(&m, two());
        let data = build_gelfand_data(&m, two(), &PotentialField::zero(), &obs, &src, &times, opts).unwrap();
        assert_eq!(data.eigenvalues.len(), 5);
        assert!(data.multiplicities.iter().all(|&d| d == 1));
        let internal = build_gelfand_data(&m, two(), &PotentialField::zero(), &obs, &src, &times, GelfandOptions::default());
        assert!(
            matches!(internal, Err(Error::UnderExcitedEigenspace { rank: 1, expected: 2, .. })),
            "{internal:?}"
        );
    }

    #[test]
    fn radius_change_is_flagged_at_first_nonzero_eigenvalue() {
        let run = |r: f64| {
            let m = Arc::new(build_model(ModelKind::Circle { radius: r }, 5, None).unwrap());
            let obs = m.restrict_to_observation(&half()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let src = make_source_basis(&m, &half(), 5, SourceShape::default(), &mut rng).unwrap();
            build_gelfand_data(
                &m,
                two(),
                &PotentialField::zero(),
                &obs,
                &src,
                &default_time_grid(&m, two()),
                GelfandOptions::default(),
            )
            .unwrap()
        };
        let cmp = compare_gelfand(&run(1.0), &run(1.01), CompareTolerances::default()).unwrap();
        assert!(!cmp.pass);
        assert_eq!(cmp.first_failure, Some(1));
        assert!((cmp.rows[1].gap - (1.0 - 1.0 / 1.0201)).abs() < 1e-4);
    }

    #[test]
    fn sanity_fits_hold_on_catalog() {
        let models = [
            build_model(ModelKind::Circle { radius: 1.0 }, 16, None).unwrap(),
            build_model(ModelKind::FlatTorus { edges: vec![2.0 * PI, 3.0] }, 16, None).unwrap(),
            build_model(ModelKind::Sphere2 { radius: 1.0 }, 12, None).unwrap(),
        ];
        for m in &models {
            assert!(weyl_fit(m).pass);
            assert!(sup_norm_fit(m, two()).pass);
        }
    }
}
