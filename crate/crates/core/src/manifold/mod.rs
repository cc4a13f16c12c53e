//! Closed model manifolds with closed-form eigen-decompositions of the
//! Laplace–Beltrami operator, together with product quadrature rules.
//!
//! Three kinds are supported: the circle of radius r, flat n-tori with
//! arbitrary edge lengths, and the round 2-sphere of radius r. Every model
//! materializes exactly `K` distinct eigenvalues `0 = λ_0 < … < λ_{K-1}` and a
//! real L²-orthonormal basis of each eigenspace, ordered deterministically:
//!
//! * circle / torus: lexicographically sorted lattice representatives, each
//!   contributing `cos` then `sin` (the zero vector contributes the constant);
//! * sphere: orders `m = 0, 1, …, ℓ`, each `m > 0` contributing `cos` then `sin`.

mod harmonics;
mod isometry;
mod observation;

use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub use harmonics::LegendreTable;
pub use isometry::Isometry;
pub use observation::{ObservationDescriptor, ObservationSet};

/// Relative tolerance under which two lattice eigenvalues are the same.
const EIGEN_MERGE_REL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    Circle { radius: f64 },
    FlatTorus { edges: Vec<f64> },
    Sphere2 { radius: f64 },
}

impl ModelKind {
    pub fn dimension(&self) -> usize {
        match self {
            ModelKind::Circle { .. } => 1,
            ModelKind::FlatTorus { edges } => edges.len(),
            ModelKind::Sphere2 { .. } => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Circle { .. } => "circle",
            ModelKind::FlatTorus { .. } => "flat_torus",
            ModelKind::Sphere2 { .. } => "sphere2",
        }
    }

    /// Riemannian distance between two points in chart coordinates.
    pub fn distance(&self, x: &Point, y: &Point) -> f64 {
        match self {
            ModelKind::Sphere2 { radius } => radius * great_circle(x, y),
            k => {
                let edges = k.lattice_edges().expect("lattice");
                edges
                    .iter()
                    .enumerate()
                    .map(|(a, l)| {
                        let d = angle_diff(x.coords[a], y.coords[a]) * l / TAU;
                        d * d
                    })
                    .sum::<f64>()
                    .sqrt()
            }
        }
    }

    /// Edge lengths when the model is a (1- or n-dimensional) flat torus.
    pub(crate) fn lattice_edges(&self) -> Option<Vec<f64>> {
        match self {
            ModelKind::Circle { radius } => Some(vec![TAU * radius]),
            ModelKind::FlatTorus { edges } => Some(edges.clone()),
            ModelKind::Sphere2 { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidModel(what));
        match self {
            ModelKind::Circle { radius } | ModelKind::Sphere2 { radius } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return bad(format!("radius must be positive (got {radius})"));
                }
            }
            ModelKind::FlatTorus { edges } => {
                if edges.is_empty() {
                    return bad("torus needs at least one edge length".into());
                }
                if let Some(e) = edges.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
                    return bad(format!("torus edge lengths must be positive (got {e})"));
                }
            }
        }
        Ok(())
    }
}

/// A point in chart coordinates (radians): `[θ]` on the circle,
/// `[θ_1, …, θ_n]` on a torus, `[colatitude, longitude]` on the sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    /// Reduces angle coordinates to `[0, 2π)`.
    pub fn periodic(coords: Vec<f64>) -> Self {
        Self {
            coords: coords.into_iter().map(wrap_angle).collect(),
        }
    }

    /// Reduces `(colatitude, longitude)` to `[0, π] × [0, 2π)`.
    pub fn spherical(colatitude: f64, longitude: f64) -> Self {
        let mut th = wrap_angle(colatitude);
        let mut ph = longitude;
        if th > PI {
            th = TAU - th;
            ph += PI;
        }
        Self {
            coords: vec![th, wrap_angle(ph)],
        }
    }
}

pub(crate) fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Signed angular difference reduced to `(-π, π]`.
pub(crate) fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Parity {
    Cos,
    Sin,
}

#[derive(Debug, Clone, PartialEq)]
enum Mode {
    /// `cos(k·θ)` or `sin(k·θ)` on a flat torus (the circle is the 1-torus).
    Lattice { freq: Vec<i64>, parity: Parity },
    /// Real spherical harmonic of degree `l` and order `m`.
    Harmonic { l: usize, m: usize, parity: Parity },
}

/// A closed model manifold with materialized eigendata and quadrature.
#[derive(Debug)]
pub struct SpectralModel {
    kind: ModelKind,
    truncation: usize,
    eigenvalues: Vec<f64>,
    multiplicities: Vec<usize>,
    offsets: Vec<usize>,
    modes: Vec<Mode>,
    next_eigenvalue: f64,
    resolution: Vec<usize>,
    nodes: Vec<Point>,
    weights: Vec<f64>,
    basis_at_nodes: OnceLock<Matrix>,
}

/// Builds a model with `truncation` distinct eigenvalues. `resolution`
/// overrides the default quadrature: `[N]` on the circle, `[N_1, …, N_n]` on
/// a torus, `[n_colatitude, n_longitude]` on the sphere.
pub fn build_model(
    kind: ModelKind,
    truncation: usize,
    resolution: Option<Vec<usize>>,
) -> Result<SpectralModel> {
    kind.validate()?;
    if truncation < 2 {
        return Err(Error::TruncationTooSmall(truncation));
    }
    let (eigenvalues, multiplicities, modes, next_eigenvalue) = match &kind {
        ModelKind::Sphere2 { radius } => sphere_catalog(*radius, truncation),
        _ => {
            let edges = kind.lattice_edges().expect("lattice kind");
            lattice_catalog(&edges, truncation)
        }
    };
    let mut offsets = Vec::with_capacity(truncation + 1);
    let mut acc = 0;
    offsets.push(0);
    for d in &multiplicities {
        acc += d;
        offsets.push(acc);
    }

    let resolution = match resolution {
        Some(r) => {
            let expected = match &kind {
                ModelKind::Sphere2 { .. } => 2,
                k => k.dimension(),
            };
            if r.len() != expected || r.contains(&0) {
                return Err(Error::InvalidModel(format!(
                    "quadrature resolution must list {expected} positive counts (got {r:?})"
                )));
            }
            r
        }
        None => default_resolution(&kind, &modes),
    };
    let (nodes, weights) = quadrature_rule(&kind, &resolution);

    Ok(SpectralModel {
        kind,
        truncation,
        eigenvalues,
        multiplicities,
        offsets,
        modes,
        next_eigenvalue,
        resolution,
        nodes,
        weights,
        basis_at_nodes: OnceLock::new(),
    })
}

type Catalog = (Vec<f64>, Vec<usize>, Vec<Mode>, f64);

fn lattice_eigenvalue(freq: &[i64], edges: &[f64]) -> f64 {
    freq.iter()
        .zip(edges)
        .map(|(&k, &l)| {
            let w = TAU * k as f64 / l;
            w * w
        })
        .sum()
}

/// Representative of `{k, -k}`: zero, or first nonzero component positive.
fn is_representative(freq: &[i64]) -> bool {
    match freq.iter().find(|&&k| k != 0) {
        None => true,
        Some(&k) => k > 0,
    }
}

fn lattice_catalog(edges: &[f64], truncation: usize) -> Catalog {
    let n = edges.len();
    let min_step = edges
        .iter()
        .map(|l| (TAU / l).powi(2))
        .fold(f64::INFINITY, f64::min);
    // Enumerate every lattice vector with eigenvalue <= bound, doubling the
    // bound until K+1 distinct values are present.
    let mut bound = min_step * (truncation as f64 + 1.0);
    loop {
        let radii: Vec<i64> = edges
            .iter()
            .map(|l| (bound.sqrt() * l / TAU).floor() as i64)
            .collect();
        let mut vecs: Vec<(f64, Vec<i64>)> = Vec::new();
        let mut cur = radii.iter().map(|r| -r).collect::<Vec<_>>();
        'box_scan: loop {
            if is_representative(&cur) {
                let lam = lattice_eigenvalue(&cur, edges);
                if lam <= bound * (1.0 + EIGEN_MERGE_REL) {
                    vecs.push((lam, cur.clone()));
                }
            }
            let mut axis = n;
            loop {
                if axis == 0 {
                    break 'box_scan;
                }
                axis -= 1;
                if cur[axis] < radii[axis] {
                    cur[axis] += 1;
                    for (a, c) in cur.iter_mut().enumerate().skip(axis + 1) {
                        *c = -radii[a];
                    }
                    break;
                }
            }
        }
        vecs.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        let mut groups: Vec<(f64, Vec<Vec<i64>>)> = Vec::new();
        for (lam, v) in vecs {
            match groups.last_mut() {
                Some((g, members)) if (lam - *g).abs() <= EIGEN_MERGE_REL * g.max(1.0) => {
                    members.push(v)
                }
                _ => groups.push((lam, vec![v])),
            }
        }
        if groups.len() > truncation {
            let next = groups[truncation].0;
            groups.truncate(truncation);
            let mut eigenvalues = Vec::with_capacity(truncation);
            let mut multiplicities = Vec::with_capacity(truncation);
            let mut modes = Vec::new();
            for (lam, mut members) in groups {
                members.sort();
                eigenvalues.push(lam);
                let mut d = 0;
                for freq in members {
                    if freq.iter().all(|&k| k == 0) {
                        modes.push(Mode::Lattice {
                            freq,
                            parity: Parity::Cos,
                        });
                        d += 1;
                    } else {
                        modes.push(Mode::Lattice {
                            freq: freq.clone(),
                            parity: Parity::Cos,
                        });
                        modes.push(Mode::Lattice {
                            freq,
                            parity: Parity::Sin,
                        });
                        d += 2;
                    }
                }
                multiplicities.push(d);
            }
            return (eigenvalues, multiplicities, modes, next);
        }
        bound *= 2.0;
    }
}

fn sphere_catalog(radius: f64, truncation: usize) -> Catalog {
    let r2 = radius * radius;
    let mut eigenvalues = Vec::with_capacity(truncation);
    let mut multiplicities = Vec::with_capacity(truncation);
    let mut modes = Vec::new();
    for l in 0..truncation {
        eigenvalues.push((l * (l + 1)) as f64 / r2);
        multiplicities.push(2 * l + 1);
        modes.push(Mode::Harmonic {
            l,
            m: 0,
            parity: Parity::Cos,
        });
        for m in 1..=l {
            modes.push(Mode::Harmonic {
                l,
                m,
                parity: Parity::Cos,
            });
            modes.push(Mode::Harmonic {
                l,
                m,
                parity: Parity::Sin,
            });
        }
    }
    let next = (truncation * (truncation + 1)) as f64 / r2;
    (eigenvalues, multiplicities, modes, next)
}

fn round_up_even(n: usize) -> usize {
    n + n % 2
}

fn default_resolution(kind: &ModelKind, modes: &[Mode]) -> Vec<usize> {
    match kind {
        ModelKind::Sphere2 { .. } => {
            let lmax = modes
                .iter()
                .map(|m| match m {
                    Mode::Harmonic { l, .. } => *l,
                    Mode::Lattice { .. } => 0,
                })
                .max()
                .unwrap_or(0);
            let nt = (2 * (lmax + 1)).max(16);
            vec![nt, 2 * nt]
        }
        _ => {
            let n = kind.dimension();
            let floor = if n == 1 { 256 } else { 32 };
            (0..n)
                .map(|axis| {
                    let kmax = modes
                        .iter()
                        .map(|m| match m {
                            Mode::Lattice { freq, .. } => freq[axis].unsigned_abs() as usize,
                            Mode::Harmonic { .. } => 0,
                        })
                        .max()
                        .unwrap_or(0);
                    round_up_even((4 * (kmax + 1)).max(floor))
                })
                .collect()
        }
    }
}

/// Nodes and weights of the product quadrature rule at the given resolution.
pub(crate) fn quadrature_rule(kind: &ModelKind, resolution: &[usize]) -> (Vec<Point>, Vec<f64>) {
    match kind {
        ModelKind::Sphere2 { radius } => {
            let (nt, np) = (resolution[0], resolution[1]);
            let (x, w) = crate::quadrature::gauss_legendre(nt);
            let mut nodes = Vec::with_capacity(nt * np);
            let mut weights = Vec::with_capacity(nt * np);
            // x descending gives colatitude ascending
            for j in (0..nt).rev() {
                let th = x[j].clamp(-1.0, 1.0).acos();
                for k in 0..np {
                    nodes.push(Point::new(vec![th, TAU * k as f64 / np as f64]));
                    weights.push(radius * radius * w[j] * TAU / np as f64);
                }
            }
            (nodes, weights)
        }
        _ => {
            let edges = kind.lattice_edges().expect("lattice kind");
            let volume: f64 = edges.iter().product();
            let total: usize = resolution.iter().product();
            let weight = volume / total as f64;
            let mut nodes = Vec::with_capacity(total);
            let mut idx = vec![0usize; resolution.len()];
            for _ in 0..total {
                nodes.push(Point::new(
                    idx.iter()
                        .zip(resolution)
                        .map(|(&i, &n)| TAU * i as f64 / n as f64)
                        .collect(),
                ));
                for axis in (0..idx.len()).rev() {
                    idx[axis] += 1;
                    if idx[axis] < resolution[axis] {
                        break;
                    }
                    idx[axis] = 0;
                }
            }
            (nodes, vec![weight; total])
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrthonormalityReport {
    pub max_offdiag: f64,
    pub max_diag_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl SpectralModel {
    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn dimension(&self) -> usize {
        self.kind.dimension()
    }

    /// Number K of materialized distinct eigenvalues.
    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    /// First eigenvalue beyond the truncation, `λ_K`.
    pub fn next_eigenvalue(&self) -> f64 {
        self.next_eigenvalue
    }

    /// Total number of materialized basis functions, `Σ d_k`.
    pub fn basis_len(&self) -> usize {
        self.modes.len()
    }

    /// Flat basis-index range of eigenspace `k`.
    pub fn block_range(&self, k: usize) -> std::ops::Range<usize> {
        self.offsets[k]..self.offsets[k + 1]
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Eigenspace index of each flat basis index.
    pub fn block_of_index(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.basis_len());
        for (k, d) in self.multiplicities.iter().enumerate() {
            out.extend(std::iter::repeat_n(k, *d));
        }
        out
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn volume(&self) -> f64 {
        match &self.kind {
            ModelKind::Sphere2 { radius } => 4.0 * PI * radius * radius,
            k => k.lattice_edges().expect("lattice").iter().product(),
        }
    }

    /// Reduces chart coordinates to the fundamental domain of this model.
    pub fn point(&self, coords: Vec<f64>) -> Result<Point> {
        let expected = self.point_arity();
        if coords.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: coords.len(),
            });
        }
        Ok(match self.kind {
            ModelKind::Sphere2 { .. } => Point::spherical(coords[0], coords[1]),
            _ => Point::periodic(coords),
        })
    }

    pub(crate) fn point_arity(&self) -> usize {
        match self.kind {
            ModelKind::Sphere2 { .. } => 2,
            _ => self.dimension(),
        }
    }

    /// Riemannian distance between two points.
    pub fn distance(&self, x: &Point, y: &Point) -> f64 {
        self.kind.distance(x, y)
    }

    /// Value of the orthonormal eigenfunction `φ_{k,ℓ}` (ℓ is 1-based) at a point.
    pub fn evaluate_eigenfunction(&self, k: usize, l: usize, point: &Point) -> Result<f64> {
        if k >= self.truncation {
            return Err(Error::IndexOutOfRange(format!(
                "eigenspace {k} (truncation {})",
                self.truncation
            )));
        }
        if l == 0 || l > self.multiplicities[k] {
            return Err(Error::IndexOutOfRange(format!(
                "basis index {l} in eigenspace {k} of multiplicity {}",
                self.multiplicities[k]
            )));
        }
        if point.coords.len() != self.point_arity() {
            return Err(Error::LengthMismatch {
                expected: self.point_arity(),
                got: point.coords.len(),
            });
        }
        let mode = &self.modes[self.offsets[k] + l - 1];
        Ok(match mode {
            Mode::Lattice { .. } => self.lattice_value(mode, point),
            Mode::Harmonic { l: deg, .. } => {
                let table = LegendreTable::new(*deg, point.coords[0]);
                self.harmonic_value(mode, &table, point)
            }
        })
    }

    fn lattice_value(&self, mode: &Mode, point: &Point) -> f64 {
        let Mode::Lattice { freq, parity } = mode else {
            unreachable!()
        };
        let vol = self.volume();
        if freq.iter().all(|&k| k == 0) {
            return 1.0 / vol.sqrt();
        }
        let phase: f64 = freq
            .iter()
            .zip(&point.coords)
            .map(|(&k, &t)| k as f64 * t)
            .sum();
        let amp = (2.0 / vol).sqrt();
        match parity {
            Parity::Cos => amp * phase.cos(),
            Parity::Sin => amp * phase.sin(),
        }
    }

    fn harmonic_value(&self, mode: &Mode, table: &LegendreTable, point: &Point) -> f64 {
        let Mode::Harmonic { l, m, parity } = mode else {
            unreachable!()
        };
        let ModelKind::Sphere2 { radius } = self.kind else {
            unreachable!()
        };
        let p = table.get(*l, *m) / radius;
        if *m == 0 {
            return p;
        }
        let arg = *m as f64 * point.coords[1];
        let s2 = std::f64::consts::SQRT_2;
        match parity {
            Parity::Cos => s2 * p * arg.cos(),
            Parity::Sin => s2 * p * arg.sin(),
        }
    }

    /// All materialized basis functions at one point, in flat basis order.
    pub fn basis_values(&self, point: &Point) -> Vec<f64> {
        match self.kind {
            ModelKind::Sphere2 { .. } => {
                let table = LegendreTable::new(self.truncation - 1, point.coords[0]);
                self.modes
                    .iter()
                    .map(|m| self.harmonic_value(m, &table, point))
                    .collect()
            }
            _ => self
                .modes
                .iter()
                .map(|m| self.lattice_value(m, point))
                .collect(),
        }
    }

    /// Matrix of basis values, one row per point.
    pub fn basis_matrix(&self, points: &[Point]) -> Matrix {
        let rows: Vec<Vec<f64>> = points.par_iter().map(|p| self.basis_values(p)).collect();
        let n = self.basis_len();
        Matrix::from_fn(points.len(), n, |i, j| rows[i][j])
    }

    /// Cached basis table at the model quadrature nodes.
    pub fn basis_at_nodes(&self) -> &Matrix {
        self.basis_at_nodes
            .get_or_init(|| self.basis_matrix(&self.nodes))
    }

    /// Node samples of a closure.
    pub fn sample<F: Fn(&Point) -> f64 + Sync + Send>(&self, f: F) -> Vec<f64> {
        self.nodes.par_iter().map(f).collect()
    }

    /// Quadrature approximation of `∫_M f g dV`.
    pub fn inner_product(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        let n = self.nodes.len();
        for len in [f.len(), g.len()] {
            if len != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: len,
                });
            }
        }
        Ok(self
            .weights
            .iter()
            .zip(f.iter().zip(g))
            .map(|(w, (a, b))| w * a * b)
            .sum())
    }

    /// Coefficients `⟨f, φ_j⟩` of node samples in the materialized basis.
    pub fn project_samples(&self, samples: &[f64]) -> Result<Vec<f64>> {
        if samples.len() != self.nodes.len() {
            return Err(Error::LengthMismatch {
                expected: self.nodes.len(),
                got: samples.len(),
            });
        }
        let weighted: Vec<f64> = samples
            .iter()
            .zip(&self.weights)
            .map(|(s, w)| s * w)
            .collect();
        Ok(crate::linalg::mat_t_vec(self.basis_at_nodes(), &weighted))
    }

    /// Gram matrix of all materialized eigenfunctions under the quadrature.
    pub fn gram_matrix(&self) -> Matrix {
        let b = self.basis_at_nodes();
        let sw: Vec<f64> = self.weights.iter().map(|w| w.sqrt()).collect();
        let bw = Matrix::from_fn(b.nrows(), b.ncols(), |i, j| b[(i, j)] * sw[i]);
        bw.transpose() * &bw
    }

    pub fn verify_orthonormality(&self, tolerance: f64) -> OrthonormalityReport {
        let g = self.gram_matrix();
        let n = g.nrows();
        let mut max_offdiag = 0.0_f64;
        let mut max_diag_error = 0.0_f64;
        for j in 0..n {
            for i in 0..n {
                if i == j {
                    max_diag_error = max_diag_error.max((g[(i, j)] - 1.0).abs());
                } else {
                    max_offdiag = max_offdiag.max(g[(i, j)].abs());
                }
            }
        }
        OrthonormalityReport {
            max_offdiag,
            max_diag_error,
            tolerance,
            pass: max_offdiag <= tolerance && max_diag_error <= tolerance,
        }
    }

    /// Quadrature rule refined by an integer factor per axis.
    pub fn refined_quadrature(&self, multiplier: usize) -> (Vec<Point>, Vec<f64>) {
        let res: Vec<usize> = self.resolution.iter().map(|n| n * multiplier.max(1)).collect();
        quadrature_rule(&self.kind, &res)
    }

    pub fn dump(&self) -> ModelDump {
        ModelDump {
            format_version: MODEL_DUMP_VERSION,
            kind: self.kind.clone(),
            truncation: self.truncation,
            resolution: self.resolution.clone(),
            eigenvalues: self.eigenvalues.clone(),
            multiplicities: self.multiplicities.clone(),
            nodes: self.nodes.iter().map(|p| p.coords.clone()).collect(),
            weights: self.weights.clone(),
        }
    }

    /// Rebuilds a model from a dump and checks the stored eigendata and node
    /// table against the rebuilt ones.
    pub fn from_dump(dump: &ModelDump) -> Result<Self> {
        if dump.format_version != MODEL_DUMP_VERSION {
            return Err(Error::Format(format!(
                "unsupported model dump version {}",
                dump.format_version
            )));
        }
        let model = build_model(
            dump.kind.clone(),
            dump.truncation,
            Some(dump.resolution.clone()),
        )?;
        let same_eig = model.multiplicities == dump.multiplicities
            && model
                .eigenvalues
                .iter()
                .zip(&dump.eigenvalues)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(1.0));
        if !same_eig || model.nodes.len() != dump.nodes.len() {
            return Err(Error::Format(
                "model dump does not match the catalog eigendata".into(),
            ));
        }
        Ok(model)
    }
}

pub(crate) fn great_circle(x: &Point, y: &Point) -> f64 {
    let (t1, p1) = (x.coords[0], x.coords[1]);
    let (t2, p2) = (y.coords[0], y.coords[1]);
    // haversine in colatitude form
    let dt = 0.5 * (t1 - t2);
    let dp = 0.5 * (p1 - p2);
    let h = dt.sin().powi(2) + t1.sin() * t2.sin() * dp.sin().powi(2);
    2.0 * h.sqrt().min(1.0).asin()
}

pub const MODEL_DUMP_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDump {
    pub format_version: u32,
    pub kind: ModelKind,
    pub truncation: usize,
    pub resolution: Vec<usize>,
    pub eigenvalues: Vec<f64>,
    pub multiplicities: Vec<usize>,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(k: usize) -> SpectralModel {
        build_model(ModelKind::Circle { radius: 1.0 }, k, None).unwrap()
    }

    #[test]
    fn circle_catalog() {
        let m = circle(4);
        assert_eq!(m.eigenvalues(), &[0.0, 1.0, 4.0, 9.0]);
        assert_eq!(m.multiplicities(), &[1, 2, 2, 2]);
        assert_eq!(m.next_eigenvalue(), 16.0);
    }

    #[test]
    fn sphere_catalog_multiplicities() {
        let m = build_model(ModelKind::Sphere2 { radius: 1.0 }, 3, None).unwrap();
        assert_eq!(m.eigenvalues(), &[0.0, 2.0, 6.0]);
        assert_eq!(m.multiplicities(), &[1, 3, 5]);
    }

    #[test]
    fn torus_catalog_matches_brute_force_lattice_count() {
        let m = build_model(ModelKind::FlatTorus { edges: vec![TAU, TAU] }, 3, None).unwrap();
        assert_eq!(m.eigenvalues(), &[0.0, 1.0, 2.0]);
        // brute force: count (j, k) with j^2 + k^2 = n
        let count = |n: i64| {
            let mut c = 0;
            for j in -3..=3i64 {
                for k in -3..=3i64 {
                    if j * j + k * k == n {
                        c += 1;
                    }
                }
            }
            c
        };
        assert_eq!(m.multiplicities(), &[count(0), count(1), count(2)]);
        assert_eq!(m.multiplicities(), &[1, 4, 4]);
    }

    #[test]
    fn rejects_small_truncation_and_bad_parameters() {
        assert!(matches!(
            build_model(ModelKind::Circle { radius: 1.0 }, 1, None),
            Err(Error::TruncationTooSmall(1))
        ));
        assert!(build_model(ModelKind::Circle { radius: -1.0 }, 4, None).is_err());
        assert!(build_model(ModelKind::FlatTorus { edges: vec![] }, 4, None).is_err());
    }

    #[test]
    fn circle_eigenfunction_values() {
        let m = circle(4);
        let p = Point::new(vec![0.0]);
        let v0 = m.evaluate_eigenfunction(0, 1, &Point::new(vec![1.234])).unwrap();
        assert!((v0 - 1.0 / TAU.sqrt()).abs() < 1e-15);
        let v1 = m.evaluate_eigenfunction(1, 1, &p).unwrap();
        assert!((v1 - 1.0 / PI.sqrt()).abs() < 1e-15);
        assert!(matches!(
            m.evaluate_eigenfunction(4, 1, &p),
            Err(Error::IndexOutOfRange(_))
        ));
        assert!(matches!(
            m.evaluate_eigenfunction(1, 3, &p),
            Err(Error::IndexOutOfRange(_))
        ));
    }

    #[test]
    fn sphere_zonal_harmonic_at_pole_matches_quadrature_normalization() {
        let m = build_model(ModelKind::Sphere2 { radius: 1.0 }, 3, None).unwrap();
        let pole = Point::new(vec![0.0, 0.0]);
        let v = m.evaluate_eigenfunction(1, 1, &pole).unwrap();
        // oracle: normalize z = cos(colatitude) by quadrature
        let z = m.sample(|p| p.coords[0].cos());
        let norm = m.inner_product(&z, &z).unwrap().sqrt();
        assert!((v - 1.0 / norm).abs() < 1e-13);
        assert!((v - (3.0 / (4.0 * PI)).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn inner_products_on_circle() {
        let m = circle(4);
        let ones = vec![1.0; m.nodes().len()];
        assert!((m.inner_product(&ones, &ones).unwrap() - TAU).abs() < 1e-12);
        let p11 = m.sample(|p| m.evaluate_eigenfunction(1, 1, p).unwrap());
        let p21 = m.sample(|p| m.evaluate_eigenfunction(2, 1, p).unwrap());
        assert!((m.inner_product(&p11, &p11).unwrap() - 1.0).abs() < 1e-13);
        assert!(m.inner_product(&p11, &p21).unwrap().abs() < 1e-13);
        assert!(matches!(
            m.inner_product(&p11, &p21[1..]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn orthonormality_reports() {
        let good = build_model(ModelKind::Circle { radius: 1.0 }, 8, Some(vec![256])).unwrap();
        assert!(good.verify_orthonormality(1e-12).pass);
        let sphere = build_model(ModelKind::Sphere2 { radius: 1.0 }, 6, None).unwrap();
        assert!(sphere.verify_orthonormality(1e-10).pass);
        let aliased = build_model(ModelKind::Circle { radius: 1.0 }, 8, Some(vec![8])).unwrap();
        let r = aliased.verify_orthonormality(1e-12);
        assert!(!r.pass);
        assert!(r.max_offdiag > 0.1 || r.max_diag_error > 0.1);
    }

    #[test]
    fn torus_orthonormality_with_unequal_edges() {
        let m = build_model(ModelKind::FlatTorus { edges: vec![3.0, 5.0] }, 12, None).unwrap();
        assert!(m.verify_orthonormality(1e-12).pass);
    }

    #[test]
    fn sphere_distance_between_poles() {
        let m = build_model(ModelKind::Sphere2 { radius: 2.0 }, 3, None).unwrap();
        let n = Point::new(vec![0.0, 0.0]);
        let s = Point::new(vec![PI, 0.0]);
        assert!((m.distance(&n, &s) - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn point_reduction() {
        let p = Point::spherical(-0.3, 0.0);
        assert!((p.coords[0] - 0.3).abs() < 1e-15);
        assert!((p.coords[1] - PI).abs() < 1e-15);
        let q = Point::periodic(vec![-0.5, 7.0]);
        assert!((q.coords[0] - (TAU - 0.5)).abs() < 1e-15);
        assert!((q.coords[1] - (7.0 - TAU)).abs() < 1e-15);
    }

    #[test]
    fn dump_round_trip() {
        let m = build_model(ModelKind::Sphere2 { radius: 1.5 }, 4, None).unwrap();
        let text = serde_json::to_string(&m.dump()).unwrap();
        let back: ModelDump = serde_json::from_str(&text).unwrap();
        let rebuilt = SpectralModel::from_dump(&back).unwrap();
        assert_eq!(rebuilt.dump(), m.dump());
    }
}
