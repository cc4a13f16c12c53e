//! Galerkin solution of `L u + V u = f` in the truncated eigenbasis.
//!
//! `L` is diagonal in the basis, so the only approximation is the potential
//! matrix `M_V[i][j] = ⟨V φ_i, φ_j⟩`, assembled by the model quadrature. The
//! system `(Λ_L + M_V) û = f̂` is symmetric; invertibility is decided from its
//! spectrum with a scale-relative threshold.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{FieldCoefficients, Mass};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::manifold::{
    Isometry, ModelKind, ObservationDescriptor, ObservationSet, Point, SpectralModel,
};

/// Zero is treated as an eigenvalue of `Λ_L + M_V` below this fraction of
/// the largest multiplier.
pub const INVERTIBILITY_REL: f64 = 1e-10;
/// Condition number above which a solve is refused.
pub const MAX_CONDITION: f64 = 1e12;
/// Euclidean residual bound on the coefficient system.
pub const RESIDUAL_TOL: f64 = 1e-10;

type Evaluator = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Support {
    Global,
    SupportedIn(ObservationDescriptor),
}

/// Closed-form potentials selectable from configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    Zero,
    Constant { value: f64 },
    /// `amplitude · cos(first chart coordinate)`: `cos θ` on the circle,
    /// `cos θ_1` on a torus, `cos(colatitude)` (zonal) on the sphere.
    Cosine { amplitude: f64 },
    /// Smooth bump supported in the observation set.
    Bump {
        center: Vec<f64>,
        radius: f64,
        amplitude: f64,
    },
}

/// A smooth potential `V` given by an evaluator on chart points.
#[derive(Clone)]
pub struct PotentialField {
    label: String,
    support: Support,
    eval: Evaluator,
}

impl fmt::Debug for PotentialField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PotentialField")
            .field("label", &self.label)
            .field("support", &self.support)
            .finish()
    }
}

impl PotentialField {
    pub fn zero() -> Self {
        Self::global("zero", |_| 0.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::global(format!("constant({c})"), move |_| c)
    }

    pub fn global(label: impl Into<String>, f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            support: Support::Global,
            eval: Arc::new(f),
        }
    }

    /// A potential declared to vanish outside `descriptor`; checked on the
    /// model nodes.
    pub fn supported_in(
        model: &SpectralModel,
        descriptor: ObservationDescriptor,
        label: impl Into<String>,
        f: impl Fn(&Point) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let field = Self {
            label: label.into(),
            support: Support::SupportedIn(descriptor.clone()),
            eval: Arc::new(f),
        };
        let leak = model
            .nodes()
            .iter()
            .filter(|p| !descriptor.contains(p))
            .map(|p| field.evaluate(p).abs())
            .fold(0.0_f64, f64::max);
        if leak > f64::EPSILON {
            return Err(Error::PotentialSupportViolated(leak));
        }
        Ok(field)
    }

    pub fn from_spec(spec: &PotentialSpec, model: &SpectralModel, observation: &ObservationDescriptor) -> Result<Self> {
        Ok(match spec {
            PotentialSpec::Zero => Self::zero(),
            PotentialSpec::Constant { value } => Self::constant(*value),
            PotentialSpec::Cosine { amplitude } => {
                let a = *amplitude;
                Self::global(format!("{a}*cos(x0)"), move |p| a * p.coords[0].cos())
            }
            PotentialSpec::Bump {
                center,
                radius,
                amplitude,
            } => {
                let center = model.point(center.clone())?;
                let bump = Bump {
                    kind: model.kind().clone(),
                    center,
                    radius: *radius,
                    amplitude: *amplitude,
                };
                Self::supported_in(model, observation.clone(), format!("bump({radius})"), move |p| {
                    bump.evaluate(p)
                })?
            }
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn evaluate(&self, p: &Point) -> f64 {
        (self.eval)(p)
    }

    pub fn is_identically_zero(&self, model: &SpectralModel) -> bool {
        model.nodes().iter().all(|p| self.evaluate(p) == 0.0)
    }

    pub fn samples(&self, model: &SpectralModel) -> Vec<f64> {
        model.sample(|p| self.evaluate(p))
    }

    pub fn restricted_samples(&self, observation: &ObservationSet) -> Vec<f64> {
        observation.nodes.iter().map(|p| self.evaluate(p)).collect()
    }

    /// `V ∘ Φ⁻¹`.
    pub fn push_forward(&self, isometry: &Isometry) -> Self {
        let inv = isometry.inverse();
        let eval = self.eval.clone();
        Self {
            label: format!("{}∘{:?}", self.label, inv),
            support: Support::Global,
            eval: Arc::new(move |p| eval(&inv.apply(p))),
        }
    }
}

/// `amplitude · e · exp(-1 / (1 - s²))` with `s = d(x, center) / radius`, so the
/// peak value equals `amplitude`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    pub kind: ModelKind,
    pub center: Point,
    pub radius: f64,
    pub amplitude: f64,
}

impl Bump {
    pub fn evaluate(&self, p: &Point) -> f64 {
        let s = self.kind.distance(p, &self.center) / self.radius;
        if s >= 1.0 {
            0.0
        } else {
            self.amplitude * (1.0 - 1.0 / (1.0 - s * s)).exp()
        }
    }
}

/// A smooth source compactly supported in the observation set.
#[derive(Clone)]
pub struct SourceFunction {
    pub id: String,
    pub support: ObservationDescriptor,
    pub center: Point,
    pub radius: f64,
    eval: Evaluator,
}

impl fmt::Debug for SourceFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SourceFunction")
            .field("id", &self.id)
            .field("center", &self.center)
            .field("radius", &self.radius)
            .finish()
    }
}

impl SourceFunction {
    pub fn from_bump(id: impl Into<String>, support: ObservationDescriptor, bump: Bump) -> Self {
        let center = bump.center.clone();
        let radius = bump.radius;
        Self {
            id: id.into(),
            support,
            center,
            radius,
            eval: Arc::new(move |p| bump.evaluate(p)),
        }
    }

    /// A source given directly by an evaluator. The caller is responsible
    /// for the support claim; [`SourceFunction::check_support`] verifies it
    /// on a node table.
    pub fn from_fn(
        id: impl Into<String>,
        support: ObservationDescriptor,
        center: Point,
        radius: f64,
        f: impl Fn(&Point) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            id: id.into(),
            support,
            center,
            radius,
            eval: Arc::new(f),
        }
    }

    pub fn evaluate(&self, p: &Point) -> f64 {
        (self.eval)(p)
    }

    pub fn samples(&self, model: &SpectralModel) -> Vec<f64> {
        model.sample(|p| self.evaluate(p))
    }

    /// Expansion `f̂` in the materialized eigenbasis.
    pub fn coefficients(&self, model: &Arc<SpectralModel>) -> Result<FieldCoefficients> {
        FieldCoefficients::from_samples(model.clone(), &self.samples(model))
    }

    pub fn check_support(&self, model: &SpectralModel) -> Result<()> {
        let leak = model
            .nodes()
            .iter()
            .filter(|p| !self.support.contains(p))
            .map(|p| self.evaluate(p).abs())
            .fold(0.0_f64, f64::max);
        if leak > 0.0 {
            return Err(Error::SupportExceedsObservation(format!(
                "source {} is {leak:e} outside the observation set",
                self.id
            )));
        }
        Ok(())
    }

    /// `f ∘ Φ⁻¹`.
    pub fn push_forward(&self, isometry: &Isometry) -> Self {
        let inv = isometry.inverse();
        let eval = self.eval.clone();
        Self {
            id: format!("{}@{:?}", self.id, isometry),
            support: self.support.clone(),
            center: isometry.apply(&self.center),
            radius: self.radius,
            eval: Arc::new(move |p| eval(&inv.apply(p))),
        }
    }
}

/// Layout of the bump sources placed inside an observation set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceShape {
    /// Bump radius in distance units; defaults to a quarter of the set's
    /// extent.
    pub radius: Option<f64>,
    /// Random displacement of each center as a fraction of the center spacing.
    #[serde(default)]
    pub jitter: f64,
}

impl Default for SourceShape {
    fn default() -> Self {
        Self {
            radius: None,
            jitter: 0.0,
        }
    }
}

fn arc_centers(a: f64, width: f64, r: f64, count: usize, jitter: f64, rng: &mut impl Rng) -> Vec<f64> {
    let spacing = (width - 2.0 * r) / (count + 1) as f64;
    (0..count)
        .map(|i| {
            let shift = if jitter > 0.0 {
                rng.gen_range(-jitter..=jitter) * spacing * 0.5
            } else {
                0.0
            };
            a + r + spacing * (i + 1) as f64 + shift
        })
        .collect()
}

fn unit_vector(colat: f64, lon: f64) -> [f64; 3] {
    [colat.sin() * lon.cos(), colat.sin() * lon.sin(), colat.cos()]
}

fn sphere_point_from(v: [f64; 3]) -> Point {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let z = (v[2] / n).clamp(-1.0, 1.0);
    Point::spherical(z.acos(), v[1].atan2(v[0]))
}

/// Places `count` smooth bumps (scaled `exp(-1/(1-s²))` profiles) at distinct
/// interior points of the observation set. Errors when a bump of the
/// requested radius cannot fit.
pub fn make_source_basis(
    model: &SpectralModel,
    observation: &ObservationDescriptor,
    count: usize,
    shape: SourceShape,
    rng: &mut impl Rng,
) -> Result<Vec<SourceFunction>> {
    if count == 0 {
        return Err(Error::NoSources);
    }
    observation.validate(model.kind())?;
    let kind = model.kind().clone();
    let jitter = shape.jitter.clamp(0.0, 1.0);
    let exceeds = |msg: String| Err(Error::SupportExceedsObservation(msg));

    let (centers, radius): (Vec<Point>, f64) = match (observation, &kind) {
        (ObservationDescriptor::AngularInterval { a, b }, ModelKind::Circle { radius: big_r }) => {
            let width = b - a;
            let r = shape.radius.unwrap_or(0.25 * width * big_r);
            let r_angle = r / big_r;
            if !(r > 0.0) || r_angle >= 0.5 * width {
                return exceeds(format!("radius {r} vs interval half-length {}", 0.5 * width * big_r));
            }
            let cs = arc_centers(*a, width, r_angle, count, jitter, rng);
            (cs.into_iter().map(|c| Point::periodic(vec![c])).collect(), r)
        }
        (ObservationDescriptor::TorusBox { intervals }, ModelKind::FlatTorus { edges }) => {
            let min_extent = intervals
                .iter()
                .zip(edges)
                .map(|(iv, l)| (iv[1] - iv[0]).min(std::f64::consts::TAU) * l / std::f64::consts::TAU)
                .fold(f64::INFINITY, f64::min);
            let r = shape.radius.unwrap_or(0.25 * min_extent);
            let mut per_axis = Vec::with_capacity(edges.len());
            for (iv, l) in intervals.iter().zip(edges) {
                let width = iv[1] - iv[0];
                let r_angle = r * std::f64::consts::TAU / l;
                if width >= std::f64::consts::TAU {
                    per_axis.push(arc_centers(iv[0], width, 0.0, count, jitter, rng));
                } else {
                    if !(r > 0.0) || r_angle >= 0.5 * width {
                        return exceeds(format!("radius {r} does not fit the box axis {iv:?}"));
                    }
                    per_axis.push(arc_centers(iv[0], width, r_angle, count, jitter, rng));
                }
            }
            let centers = (0..count)
                .map(|i| Point::periodic(per_axis.iter().map(|axis| axis[i]).collect()))
                .collect();
            (centers, r)
        }
        (ObservationDescriptor::SphericalCap { center, radius: cap }, ModelKind::Sphere2 { radius: big_r }) => {
            let r = shape.radius.unwrap_or(0.5 * cap * big_r);
            let r_angle = r / big_r;
            if !(r > 0.0) || r_angle >= *cap {
                return exceeds(format!("radius {r} vs cap radius {}", cap * big_r));
            }
            let c = unit_vector(center[0], center[1]);
            // tangent frame at the cap center
            let e1 = unit_vector(center[0] + std::f64::consts::FRAC_PI_2, center[1]);
            let e2 = [
                c[1] * e1[2] - c[2] * e1[1],
                c[2] * e1[0] - c[0] * e1[2],
                c[0] * e1[1] - c[1] * e1[0],
            ];
            let ring = 0.5 * (cap - r_angle);
            let mut centers = vec![Point::spherical(center[0], center[1])];
            let ring_count = count - 1;
            for i in 0..ring_count {
                let mut az = std::f64::consts::TAU * i as f64 / ring_count as f64;
                if jitter > 0.0 {
                    az += rng.gen_range(-jitter..=jitter) * std::f64::consts::PI / ring_count as f64;
                }
                let dir = [
                    az.cos() * e1[0] + az.sin() * e2[0],
                    az.cos() * e1[1] + az.sin() * e2[1],
                    az.cos() * e1[2] + az.sin() * e2[2],
                ];
                let v = [
                    ring.cos() * c[0] + ring.sin() * dir[0],
                    ring.cos() * c[1] + ring.sin() * dir[1],
                    ring.cos() * c[2] + ring.sin() * dir[2],
                ];
                centers.push(sphere_point_from(v));
            }
            (centers, r)
        }
        _ => {
            return Err(Error::InvalidModel(format!(
                "observation descriptor does not apply to a {} model",
                kind.name()
            )))
        }
    };

    let sources: Vec<SourceFunction> = centers
        .into_iter()
        .enumerate()
        .map(|(i, center)| {
            SourceFunction::from_bump(
                format!("bump{i}"),
                observation.clone(),
                Bump {
                    kind: kind.clone(),
                    center,
                    radius,
                    amplitude: 1.0,
                },
            )
        })
        .collect();
    for s in &sources {
        s.check_support(model)?;
    }
    Ok(sources)
}

/// Condition number of the L² Gram matrix of a source family.
pub fn source_gram_condition(model: &SpectralModel, sources: &[SourceFunction]) -> Result<f64> {
    let samples: Vec<Vec<f64>> = sources.iter().map(|s| s.samples(model)).collect();
    let n = sources.len();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let g = model.inner_product(&samples[i], &samples[j])?;
            data[i * n + j] = g;
            data[j * n + i] = g;
        }
    }
    let ev = linalg::symmetric_eigenvalues(&linalg::from_rows(n, n, &data));
    let lo = ev.first().copied().unwrap_or(0.0);
    let hi = ev.last().copied().unwrap_or(0.0);
    Ok(if lo > 0.0 { hi / lo } else { f64::INFINITY })
}

/// `M_V[i][j] = ⟨V φ_i, φ_j⟩` by quadrature.
pub fn assemble_potential_matrix(model: &SpectralModel, potential: &PotentialField) -> Result<Matrix> {
    let v = potential.samples(model);
    assemble_from_samples(model, &v)
}

fn assemble_from_samples(model: &SpectralModel, v: &[f64]) -> Result<Matrix> {
    let b = model.basis_at_nodes();
    let n = model.basis_len();
    if v.iter().all(|&x| x == 0.0) {
        return Ok(Matrix::zeros(n, n));
    }
    let ortho = model.verify_orthonormality(1e-9);
    if !ortho.pass {
        return Err(Error::QuadratureUnderResolved(format!(
            "basis Gram defect {:e}",
            ortho.max_offdiag.max(ortho.max_diag_error)
        )));
    }
    let w = model.weights();
    let scaled = Matrix::from_fn(b.nrows(), n, |i, j| b[(i, j)] * w[i] * v[i]);
    let m = b.transpose() * &scaled;
    let defect = linalg::symmetry_defect(&m);
    let scale = linalg::max_abs_matrix(&m).max(f64::MIN_POSITIVE);
    if defect > 1e-10 * scale {
        return Err(Error::QuadratureUnderResolved(format!(
            "potential matrix symmetry defect {defect:e}"
        )));
    }
    Ok(Matrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)])))
}

/// The assembled operator `Λ_L + M_V` with its spectrum, ready for repeated
/// solves with different sources.
pub struct ForwardOperator {
    model: Arc<SpectralModel>,
    mass: Mass,
    matrix: Matrix,
    diagonal_only: bool,
    spectrum: Vec<f64>,
    multipliers: Vec<f64>,
}

impl ForwardOperator {
    pub fn new(model: Arc<SpectralModel>, mass: Mass, potential: &PotentialField) -> Result<Self> {
        let v = potential.samples(&model);
        let diagonal_only = v.iter().all(|&x| x == 0.0);
        let mut matrix = assemble_from_samples(&model, &v)?;
        let block = model.block_of_index();
        let multipliers: Vec<f64> = block
            .iter()
            .map(|&k| mass.l_multiplier(model.eigenvalues()[k]))
            .collect();
        for (i, mu) in multipliers.iter().enumerate() {
            matrix[(i, i)] += mu;
        }
        let spectrum = if diagonal_only {
            let mut s: Vec<f64> = (0..matrix.nrows()).map(|i| matrix[(i, i)]).collect();
            s.sort_by(|a, b| a.total_cmp(b));
            s
        } else {
            linalg::symmetric_eigenvalues(&matrix)
        };
        if spectrum.iter().any(|x| !x.is_finite()) {
            return Err(Error::Eigensolver("non-finite eigenvalue".into()));
        }
        Ok(Self {
            model,
            mass,
            matrix,
            diagonal_only,
            spectrum,
            multipliers,
        })
    }

    pub fn model(&self) -> &Arc<SpectralModel> {
        &self.model
    }

    pub fn mass(&self) -> Mass {
        self.mass
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    /// Sorted eigenvalues of `Λ_L + M_V`.
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn min_abs_eigenvalue(&self) -> f64 {
        self.spectrum.iter().fold(f64::INFINITY, |a, x| a.min(x.abs()))
    }

    pub fn condition_number(&self) -> f64 {
        let hi = self.spectrum.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
        hi / self.min_abs_eigenvalue()
    }

    /// `min |eigenvalue| > 1e-10 × max multiplier`.
    pub fn is_invertible(&self) -> bool {
        self.min_abs_eigenvalue() > self.invertibility_threshold()
    }

    fn invertibility_threshold(&self) -> f64 {
        INVERTIBILITY_REL * self.multipliers.iter().fold(0.0_f64, |a, &x| a.max(x))
    }

    pub fn check_invertible(&self) -> Result<()> {
        let min_abs = self.min_abs_eigenvalue();
        let threshold = self.invertibility_threshold();
        if !(min_abs > threshold) {
            return Err(Error::SingularOperator { min_abs, threshold });
        }
        let cond = self.condition_number();
        if cond > MAX_CONDITION {
            return Err(Error::IllConditioned(cond));
        }
        Ok(())
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        linalg::mat_vec(&self.matrix, u)
    }

    pub fn solve_coefficients(&self, rhs: &[f64]) -> Result<ForwardSolution> {
        self.check_invertible()?;
        let coeffs = if self.diagonal_only {
            rhs.iter().zip(&self.multipliers).map(|(f, mu)| f / mu).collect()
        } else {
            linalg::solve(&self.matrix, rhs)
        };
        let au = self.apply(&coeffs);
        let residual = linalg::norm2(&au.iter().zip(rhs).map(|(a, b)| a - b).collect::<Vec<_>>());
        let tolerance = RESIDUAL_TOL * linalg::norm2(rhs).max(1.0);
        if residual > tolerance {
            return Err(Error::ResidualTooLarge { residual, tolerance });
        }
        Ok(ForwardSolution {
            field: FieldCoefficients::new(self.model.clone(), coeffs)?,
            residual,
            min_abs_eigenvalue: self.min_abs_eigenvalue(),
            condition_number: self.condition_number(),
        })
    }

    pub fn solve(&self, source: &FieldCoefficients) -> Result<ForwardSolution> {
        self.solve_coefficients(source.coeffs())
    }
}

#[derive(Debug, Clone)]
pub struct ForwardSolution {
    pub field: FieldCoefficients,
    /// `‖(Λ_L + M_V) û - f̂‖₂`.
    pub residual: f64,
    pub min_abs_eigenvalue: f64,
    pub condition_number: f64,
}

pub fn solve_schrodinger(
    model: &Arc<SpectralModel>,
    mass: Mass,
    potential: &PotentialField,
    source: &FieldCoefficients,
) -> Result<ForwardSolution> {
    ForwardOperator::new(model.clone(), mass, potential)?.solve(source)
}

pub fn operator_spectrum(model: &Arc<SpectralModel>, mass: Mass, potential: &PotentialField) -> Result<Vec<f64>> {
    Ok(ForwardOperator::new(model.clone(), mass, potential)?.spectrum)
}

pub const CAUCHY_RECORD_VERSION: u32 = 1;

/// One Cauchy-data pair `(u|_𝒪, (L u)|_𝒪)` for a source supported in 𝒪.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyRecord {
    pub format_version: u32,
    pub source_id: String,
    pub node_ids: Vec<usize>,
    pub nodes: Vec<Vec<f64>>,
    pub u: Vec<f64>,
    pub lu: Vec<f64>,
    pub truncation: usize,
    pub mass: f64,
    /// `max |L u + V u - P_K f|` over the observation nodes.
    pub equation_residual: f64,
}

/// Solves for `u^f` and samples `u` and `L u` on the observation nodes.
pub fn cauchy_record(
    operator: &ForwardOperator,
    potential: &PotentialField,
    source: &SourceFunction,
    observation: &ObservationSet,
) -> Result<(CauchyRecord, ForwardSolution)> {
    let model = operator.model();
    let f_hat = source.coefficients(model)?;
    let solution = operator.solve(&f_hat)?;
    let lu_field = solution.field.apply_l(operator.mass());
    let basis = model.basis_matrix(&observation.nodes);
    let u = linalg::mat_vec(&basis, solution.field.coeffs());
    let lu = linalg::mat_vec(&basis, lu_field.coeffs());
    // the truncated problem is driven by the projected source
    let f_k = linalg::mat_vec(&basis, f_hat.coeffs());
    let equation_residual = observation
        .nodes
        .iter()
        .enumerate()
        .map(|(i, p)| (lu[i] + potential.evaluate(p) * u[i] - f_k[i]).abs())
        .fold(0.0_f64, f64::max);
    Ok((
        CauchyRecord {
            format_version: CAUCHY_RECORD_VERSION,
            source_id: source.id.clone(),
            node_ids: observation.node_indices.clone(),
            nodes: observation.nodes.iter().map(|p| p.coords.clone()).collect(),
            u,
            lu,
            truncation: model.truncation(),
            mass: operator.mass().value(),
            equation_residual,
        },
        solution,
    ))
}

/// Cauchy records for a family of sources, solved in parallel.
pub fn cauchy_records(
    operator: &ForwardOperator,
    potential: &PotentialField,
    sources: &[SourceFunction],
    observation: &ObservationSet,
) -> Result<Vec<(CauchyRecord, ForwardSolution)>> {
    sources
        .par_iter()
        .map(|s| cauchy_record(operator, potential, s, observation))
        .collect()
}

/// Index of the records written by one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyManifest {
    pub format_version: u32,
    pub model: ModelKind,
    pub truncation: usize,
    pub mass: f64,
    pub observation: ObservationDescriptor,
    pub potential: String,
    pub records: Vec<String>,
}
