//! Unique-continuation experiments at finite rank, moment sequences,
//! potential recovery off the observation set, heat-kernel comparison and the
//! isometry gauge check.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{FieldCoefficients, Mass};
use crate::error::{Error, Result};
use crate::forward::{cauchy_record, ForwardOperator, PotentialField, SourceFunction};
use crate::linalg::{self, Matrix};
use crate::manifold::{Isometry, ObservationDescriptor, ObservationSet, Point, SpectralModel};
use crate::quadrature;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UcpOptions {
    /// Per-axis refinement of the model quadrature grid used for sampling 𝒪.
    pub node_multiplier: usize,
    /// Singular values below this fraction of the largest count as null.
    pub null_rel: f64,
}

impl Default for UcpOptions {
    fn default() -> Self {
        Self {
            node_multiplier: 2,
            null_rel: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcpReport {
    pub truncation: usize,
    pub observation: ObservationDescriptor,
    pub unknowns: usize,
    pub sample_nodes: usize,
    /// Numerical dimension of `{v : v|_𝒪 = 0, (L v)|_𝒪 = 0}`.
    pub null_dimension: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Same quantities for the constraint `v|_𝒪 = 0` alone.
    pub solution_only_sigma_min: f64,
    pub solution_only_null_dimension: usize,
    pub pass: bool,
}

/// Builds `v ↦ (v(x_i), (L v)(x_i) / Λ_max)` over refined 𝒪 nodes, with rows
/// weighted by `sqrt(w_i)`, and reports its numerical null space.
///
/// The `L` block is divided by the largest multiplier so both blocks have
/// unit scale; this leaves the null space unchanged.
pub fn ucp_nullspace_test(
    model: &SpectralModel,
    mass: Mass,
    observation: &ObservationDescriptor,
    options: UcpOptions,
) -> Result<UcpReport> {
    observation.validate(model.kind())?;
    let (nodes, weights) = model.refined_quadrature(options.node_multiplier);
    let (pts, w): (Vec<Point>, Vec<f64>) = nodes
        .into_iter()
        .zip(weights)
        .filter(|(p, _)| observation.contains(p))
        .unzip();
    let unknowns = model.basis_len();
    if 2 * pts.len() < 2 * unknowns {
        return Err(Error::Underdetermined {
            rows: 2 * pts.len(),
            unknowns,
            required: 2 * unknowns,
        });
    }
    let mult: Vec<f64> = model
        .block_of_index()
        .iter()
        .map(|&k| mass.l_multiplier(model.eigenvalues()[k]))
        .collect();
    let top = mult.iter().fold(0.0_f64, |a, &b| a.max(b));
    let b = model.basis_matrix(&pts);
    let n = pts.len();
    let values = Matrix::from_fn(n, unknowns, |i, j| b[(i, j)] * w[i].sqrt());
    let full = Matrix::from_fn(2 * n, unknowns, |r, j| {
        if r < n {
            values[(r, j)]
        } else {
            values[(r - n, j)] * mult[j] / top
        }
    });
    let s_full = linalg::singular_values(&full);
    let s_vals = linalg::singular_values(&values);
    let sigma_max = s_full[0];
    let null_of = |s: &[f64]| s.iter().filter(|&&x| x < options.null_rel * s[0]).count() + unknowns.saturating_sub(s.len());
    let null_dimension = null_of(&s_full);
    Ok(UcpReport {
        truncation: model.truncation(),
        observation: observation.clone(),
        unknowns,
        sample_nodes: n,
        null_dimension,
        sigma_min: *s_full.last().unwrap_or(&0.0),
        sigma_max,
        solution_only_sigma_min: *s_vals.last().unwrap_or(&0.0),
        solution_only_null_dimension: null_of(&s_vals),
        pass: null_dimension == 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    /// `∫ s^k φ(s) ds` for `k = 0..=K_max`, including the fitted tail.
    pub moments: Vec<f64>,
    /// Magnitude of the fitted tail beyond the last sample for each moment.
    pub tail_bounds: Vec<f64>,
    /// Fitted `c` and `C` in `|φ(s)| <= C e^{-cs}` over the last half of the grid.
    pub decay_rate: f64,
    pub decay_constant: f64,
}

/// `∫_S^∞ s^k e^{-cs} ds = k! e^{-cS} Σ_{j<=k} (cS)^j / j! / c^{k+1}`.
fn exp_tail(k: usize, c: f64, s: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..=k {
        term *= c * s / j as f64;
        sum += term;
    }
    let fact: f64 = (1..=k).map(|j| j as f64).product();
    fact * (-c * s).exp() * sum / c.powi(k as i32 + 1)
}

/// Simpson moments of `φ` sampled on a uniform grid starting at `s ≥ 0`,
/// plus the tail of the fitted exponential envelope.
pub fn moment_vector(s: &[f64], phi: &[f64], k_max: usize) -> Result<MomentReport> {
    if s.len() != phi.len() {
        return Err(Error::LengthMismatch {
            expected: s.len(),
            got: phi.len(),
        });
    }
    let h = crate::gelfand::uniform_step(s)?;
    if s[0] < 0.0 {
        return Err(Error::NonPositiveArgument(s[0]));
    }
    if phi.iter().all(|&v| v == 0.0) {
        return Ok(MomentReport {
            moments: vec![0.0; k_max + 1],
            tail_bounds: vec![0.0; k_max + 1],
            decay_rate: f64::INFINITY,
            decay_constant: 0.0,
        });
    }
    // least-squares slope of log|φ| over the nonzero samples of the last half
    let tail: Vec<(f64, f64)> = s[s.len() / 2..]
        .iter()
        .zip(&phi[phi.len() / 2..])
        .filter(|(_, &v)| v != 0.0)
        .map(|(&x, &v)| (x, v.abs().ln()))
        .collect();
    if tail.len() < 2 {
        return Err(Error::NoDecay(0.0));
    }
    let n = tail.len() as f64;
    let mx = tail.iter().map(|p| p.0).sum::<f64>() / n;
    let my = tail.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = tail.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let rate = -sxy / sxx;
    if !(rate > 0.0) {
        return Err(Error::NoDecay(rate));
    }
    let constant = tail.iter().map(|&(x, l)| (l + rate * x).exp()).fold(0.0, f64::max);
    let end = *s.last().expect("nonempty");
    let sign = phi.iter().rev().find(|v| **v != 0.0).map_or(1.0, |v| v.signum());
    let mut moments = Vec::with_capacity(k_max + 1);
    let mut tail_bounds = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let y: Vec<f64> = s.iter().zip(phi).map(|(x, v)| x.powi(k as i32) * v).collect();
        let t = constant * exp_tail(k, rate, end);
        moments.push(quadrature::simpson_uniform(h, &y) + sign * t);
        tail_bounds.push(t);
    }
    Ok(MomentReport {
        moments,
        tail_bounds,
        decay_rate: rate,
        decay_constant: constant,
    })
}

/// Amplitudes `a_j` of `φ(s) = Σ_j a_j e^{-μ_j s}` from its moments
/// `M_k = k! Σ_j a_j / μ_j^{k+1}`, by least squares.
pub fn amplitudes_from_moments(moments: &[f64], exponents: &[f64]) -> Result<Vec<f64>> {
    if moments.len() < exponents.len() {
        return Err(Error::Underdetermined {
            rows: moments.len(),
            unknowns: exponents.len(),
            required: exponents.len(),
        });
    }
    let mut fact = 1.0;
    let scaled: Vec<f64> = moments
        .iter()
        .enumerate()
        .map(|(k, m)| {
            if k > 0 {
                fact *= k as f64;
            }
            m / fact
        })
        .collect();
    let a = Matrix::from_fn(moments.len(), exponents.len(), |k, j| exponents[j].powi(-(k as i32 + 1)));
    let rhs = Matrix::from_fn(moments.len(), 1, |k, _| scaled[k]);
    Ok(linalg::column(&linalg::lstsq(&a, &rhs), 0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingHit {
    pub source_index: usize,
    pub source_id: String,
    /// 1-based index within the eigenspace.
    pub l: usize,
    pub value: f64,
}

/// Finds the first candidate source whose solution pairs nontrivially with
/// some `φ_{k,ℓ}`. A pairing counts when it exceeds `rel` times the
/// coefficient norm of the solution.
pub fn nonvanishing_pairing_search(
    operator: &ForwardOperator,
    k: usize,
    candidates: &[SourceFunction],
    rel: f64,
) -> Result<PairingHit> {
    let model = operator.model();
    if k >= model.truncation() {
        return Err(Error::IndexOutOfRange(format!("k = {k} with K = {}", model.truncation())));
    }
    operator.check_invertible()?;
    for (i, src) in candidates.iter().enumerate() {
        let sol = operator.solve(&src.coefficients(model)?)?;
        let scale = sol.field.l2_norm();
        if let Some((l, &value)) = sol
            .field
            .block(k)
            .iter()
            .enumerate()
            .find(|(_, v)| v.abs() > rel * scale)
        {
            return Ok(PairingHit {
                source_index: i,
                source_id: src.id.clone(),
                l: l + 1,
                value,
            });
        }
    }
    Err(Error::AllPairingsVanish(k))
}

/// A source together with the full solution it generates.
#[derive(Debug, Clone)]
pub struct SourceSolution {
    pub source: SourceFunction,
    pub solution: FieldCoefficients,
}

pub fn solve_sources(operator: &ForwardOperator, sources: &[SourceFunction]) -> Result<Vec<SourceSolution>> {
    sources
        .par_iter()
        .map(|s| {
            let sol = operator.solve(&s.coefficients(operator.model())?)?;
            Ok(SourceSolution {
                source: s.clone(),
                solution: sol.field,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryOptions {
    /// Nodes where `|u| <= mask_rel · ‖u‖_∞` give no candidate for that source.
    pub mask_rel: f64,
    /// Largest allowed spread between a node's candidates and their median.
    pub disagreement_tol: f64,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        Self {
            mask_rel: 1e-6,
            disagreement_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveredPotential {
    pub nodes: Vec<Vec<f64>>,
    pub in_observation: Vec<bool>,
    /// `None` on complement nodes with no admissible source.
    pub values: Vec<Option<f64>>,
    /// Max distance of a node's candidates from their weighted median.
    pub spread: Vec<f64>,
    pub covered: usize,
    pub uncovered: usize,
    pub max_spread: f64,
}

impl RecoveredPotential {
    pub fn to_table(&self) -> String {
        let mut s = String::from("node\tcoords\tregion\tcovered\tvalue\tspread\n");
        for (i, p) in self.nodes.iter().enumerate() {
            let coords: Vec<String> = p.iter().map(|c| format!("{c:.17e}")).collect();
            let region = if self.in_observation[i] { "observed" } else { "complement" };
            let (cov, val) = match self.values[i] {
                Some(v) => ("1", format!("{v:.17e}")),
                None => ("0", "NA".to_string()),
            };
            s.push_str(&format!("{i}\t{}\t{region}\t{cov}\t{val}\t{:.6e}\n", coords.join(","), self.spread[i]));
        }
        s
    }

    /// Max `|V̂ - V|` over covered complement nodes.
    pub fn max_error(&self, truth: &PotentialField) -> f64 {
        self.nodes
            .iter()
            .zip(&self.values)
            .zip(&self.in_observation)
            .filter(|(_, &obs)| !obs)
            .filter_map(|((p, v), _)| v.map(|v| (v - truth.evaluate(&Point::new(p.clone()))).abs()))
            .fold(0.0, f64::max)
    }
}

fn weighted_median(mut pairs: Vec<(f64, f64)>) -> f64 {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let mut acc = 0.0;
    for &(v, w) in &pairs {
        acc += w;
        if acc >= 0.5 * total {
            return v;
        }
    }
    pairs.last().map_or(0.0, |p| p.0)
}

/// Recovers `V` on the complement of 𝒪 from full solutions `u^f`: each
/// source with `|u^f(x)|` above the mask threshold proposes
/// `(f_K(x) - (L u^f)(x)) / u^f(x)`, where `f_K` is the source as represented
/// in the truncated basis; candidates are combined by the `|u^f|`-weighted
/// median. On 𝒪 the known values are copied.
pub fn recover_potential(
    model: &SpectralModel,
    mass: Mass,
    observation: &ObservationSet,
    known_on_observation: &[f64],
    data: &[SourceSolution],
    options: RecoveryOptions,
) -> Result<RecoveredPotential> {
    if known_on_observation.len() != observation.len() {
        return Err(Error::LengthMismatch {
            expected: observation.len(),
            got: known_on_observation.len(),
        });
    }
    if data.is_empty() {
        return Err(Error::NoSources);
    }
    let model_arc = data[0].solution.model().clone();
    let b = model.basis_at_nodes();
    let fields: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = data
        .par_iter()
        .map(|d| {
            let u = linalg::mat_vec(b, d.solution.coeffs());
            let lu = linalg::mat_vec(b, d.solution.apply_l(mass).coeffs());
            let f_hat = d.source.coefficients(&model_arc)?;
            let f = linalg::mat_vec(b, f_hat.coeffs());
            Ok((u, lu, f))
        })
        .collect::<Result<_>>()?;
    let mask = observation.mask(model.nodes().len());
    let mut position = vec![usize::MAX; mask.len()];
    for (j, &i) in observation.node_indices.iter().enumerate() {
        position[i] = j;
    }
    let thresholds: Vec<f64> = fields.iter().map(|(u, _, _)| options.mask_rel * linalg::max_abs(u)).collect();

    let per_node: Vec<(Option<f64>, f64)> = (0..mask.len())
        .into_par_iter()
        .map(|i| {
            if mask[i] {
                return (Some(known_on_observation[position[i]]), 0.0);
            }
            let cands: Vec<(f64, f64)> = fields
                .iter()
                .zip(&thresholds)
                .filter(|((u, _, _), &eps)| u[i].abs() > eps)
                .map(|((u, lu, f), _)| ((f[i] - lu[i]) / u[i], u[i].abs()))
                .collect();
            if cands.is_empty() {
                return (None, 0.0);
            }
            let med = weighted_median(cands.clone());
            let spread = cands.iter().map(|c| (c.0 - med).abs()).fold(0.0, f64::max);
            (Some(med), spread)
        })
        .collect();

    let covered = per_node.iter().zip(&mask).filter(|((v, _), &m)| !m && v.is_some()).count();
    let uncovered = per_node.iter().zip(&mask).filter(|((v, _), &m)| !m && v.is_none()).count();
    if covered == 0 {
        return Err(Error::EmptyCoverage);
    }
    let max_spread = per_node.iter().map(|p| p.1).fold(0.0, f64::max);
    if max_spread > options.disagreement_tol {
        return Err(Error::InconsistentCandidates {
            disagreement: max_spread,
            tolerance: options.disagreement_tol,
        });
    }
    Ok(RecoveredPotential {
        nodes: model.nodes().iter().map(|p| p.coords.clone()).collect(),
        in_observation: mask,
        values: per_node.iter().map(|p| p.0).collect(),
        spread: per_node.iter().map(|p| p.1).collect(),
        covered,
        uncovered,
        max_spread,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelEqualityReport {
    pub times: Vec<f64>,
    pub pairs: usize,
    pub max_deviation: f64,
    /// Time of the largest deviation.
    pub worst_time: f64,
    /// Largest deviation at each time.
    pub deviation_by_time: Vec<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

/// Compares `P̃_A(t, x, y)` and `P̃_B(t, x, y)` for all pairs of observation
/// nodes and all grid times.
pub fn heat_kernel_equality_check(
    model_a: &SpectralModel,
    model_b: &SpectralModel,
    mass: Mass,
    observation: &ObservationDescriptor,
    times: &[f64],
    tolerance: f64,
) -> Result<KernelEqualityReport> {
    let oa = model_a.restrict_to_observation(observation)?;
    let ob = model_b.restrict_to_observation(observation)?;
    let same = oa.node_indices == ob.node_indices
        && oa
            .nodes
            .iter()
            .zip(&ob.nodes)
            .all(|(x, y)| x.coords.iter().zip(&y.coords).all(|(a, b)| (a - b).abs() <= 1e-12));
    if !same {
        return Err(Error::IncompatibleNodes(format!(
            "{} vs {} observation nodes",
            oa.len(),
            ob.len()
        )));
    }
    if let Some(&t) = times.iter().find(|&&t| !(t > 0.0)) {
        return Err(Error::NonPositiveTime(t));
    }
    let kernel = |model: &SpectralModel, nodes: &[Point], t: f64| -> Matrix {
        let b = model.basis_matrix(nodes);
        let block = model.block_of_index();
        let decay: Vec<f64> = block
            .iter()
            .map(|&k| (-t * mass.shifted(model.eigenvalues()[k])).exp())
            .collect();
        let scaled = Matrix::from_fn(b.nrows(), b.ncols(), |i, j| b[(i, j)] * decay[j]);
        &scaled * b.transpose()
    };
    let deviation_by_time: Vec<f64> = times
        .par_iter()
        .map(|&t| {
            let pa = kernel(model_a, &oa.nodes, t);
            let pb = kernel(model_b, &ob.nodes, t);
            linalg::max_abs_matrix(&(&pa - &pb))
        })
        .collect();
    let (worst, max_deviation) = deviation_by_time
        .iter()
        .enumerate()
        .fold((0, 0.0_f64), |acc, (j, &d)| if d > acc.1 { (j, d) } else { acc });
    Ok(KernelEqualityReport {
        times: times.to_vec(),
        pairs: oa.len() * (oa.len() + 1) / 2,
        max_deviation,
        worst_time: times.get(worst).copied().unwrap_or(0.0),
        deviation_by_time,
        tolerance,
        pass: max_deviation <= tolerance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeReport {
    pub isometry: Isometry,
    pub fixes_observation_pointwise: bool,
    /// `max |A(u∘Φ) - (A u)∘Φ|` over the model nodes for a test field.
    pub intertwining_a: f64,
    pub intertwining_l: f64,
    /// Max difference between the records of `(V, f)` and `(V∘Φ⁻¹, f)`.
    pub record_deviation: f64,
    pub sources: usize,
    pub tolerance: f64,
    pub pass: bool,
}

/// Checks that `Φ` intertwines `A` and `L` and that the Cauchy records of
/// `V` and its push-forward `V∘Φ⁻¹` coincide on 𝒪.
///
/// `Φ` must map 𝒪 into itself. When it moves points of 𝒪, the potential
/// must be `Φ`-invariant, otherwise the records are not comparable
/// source by source.
pub fn isometry_gauge_check(
    model: &Arc<SpectralModel>,
    mass: Mass,
    potential: &PotentialField,
    observation: &ObservationSet,
    isometry: &Isometry,
    sources: &[SourceFunction],
    tolerance: f64,
) -> Result<GaugeReport> {
    isometry.check_kind(model.kind())?;
    let kind = model.kind();
    let mut pointwise = true;
    for p in &observation.nodes {
        let q = isometry.apply(p);
        if !observation.descriptor.contains(&q) {
            return Err(Error::IsometryDoesNotFixObservation(format!(
                "{isometry:?} maps {:?} outside the observation set",
                p.coords
            )));
        }
        if kind.distance(p, &q) > 1e-12 {
            pointwise = false;
        }
    }
    let pushed = potential.push_forward(isometry);
    if !pointwise {
        let scale = potential.samples(model).iter().fold(1.0_f64, |a, v| a.max(v.abs()));
        let moved = model
            .nodes()
            .iter()
            .map(|p| (pushed.evaluate(p) - potential.evaluate(p)).abs())
            .fold(0.0, f64::max);
        if moved > 1e-12 * scale {
            return Err(Error::IsometryDoesNotFixObservation(format!(
                "{isometry:?} moves points of the observation set and the potential is not invariant (change {moved:e})"
            )));
        }
    }

    // a deterministic test field touching every block
    let test: Vec<f64> = (0..model.basis_len())
        .map(|i| ((i as f64 + 1.0) * 0.7).sin() / (1.0 + i as f64))
        .collect();
    let u = FieldCoefficients::new(model.clone(), test)?;
    let composed = FieldCoefficients::from_samples(model.clone(), &model.sample(|p| u.evaluate(&isometry.apply(p))))?;
    let deviation = |lhs: &FieldCoefficients, rhs: &FieldCoefficients| {
        model
            .nodes()
            .iter()
            .map(|p| (lhs.evaluate(p) - rhs.evaluate(&isometry.apply(p))).abs())
            .fold(0.0, f64::max)
    };
    let intertwining_a = deviation(&composed.apply_a(mass), &u.apply_a(mass));
    let intertwining_l = deviation(&composed.apply_l(mass), &u.apply_l(mass));

    let op1 = ForwardOperator::new(model.clone(), mass, potential)?;
    let op2 = ForwardOperator::new(model.clone(), mass, &pushed)?;
    let record_deviation = sources
        .par_iter()
        .map(|s| {
            let (r1, _) = cauchy_record(&op1, potential, s, observation)?;
            let (r2, _) = cauchy_record(&op2, &pushed, s, observation)?;
            Ok(r1
                .u
                .iter()
                .zip(&r2.u)
                .chain(r1.lu.iter().zip(&r2.lu))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let op_scale = mass.l_multiplier(*model.eigenvalues().last().expect("K >= 2"));
    let pass = intertwining_a <= tolerance * op_scale
        && intertwining_l <= tolerance * op_scale
        && record_deviation <= tolerance;
    Ok(GaugeReport {
        isometry: isometry.clone(),
        fixes_observation_pointwise: pointwise,
        intertwining_a,
        intertwining_l,
        record_deviation,
        sources: sources.len(),
        tolerance,
        pass,
    })
}
