//! Batch runner: each subcommand reads an experiment config, runs one stage
//! of the pipeline and writes a JSON artifact plus a tab-separated table into
//! the output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::calculus::{grigoryan_check, GrigoryanReport};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::forward::{
    cauchy_records, make_source_basis, CauchyManifest, ForwardOperator, PotentialField, SourceFunction,
    CAUCHY_RECORD_VERSION,
};
use crate::gelfand::{analytic_angles, build_gelfand_data, compare_gelfand, default_time_grid, CompareTolerances, GelfandData};
use crate::manifold::{build_model, ObservationSet, SpectralModel};
use crate::ucp::{
    heat_kernel_equality_check, isometry_gauge_check, recover_potential, solve_sources, ucp_nullspace_test,
    KernelEqualityReport,
};

pub const ARTIFACT_VERSION: u32 = 1;

/// Environment variable selecting the worker thread count.
pub const THREADS_ENV: &str = "LOGSCHRO_THREADS";

#[derive(Debug, Parser)]
#[command(name = "logschro", version, about = "Logarithmic Schrödinger inverse-problem experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides `seed` in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Dump the model eigendata.
    Spectrum,
    /// Forward solve for every source.
    Solve,
    /// Write Cauchy records and their manifest.
    Cauchy,
    /// Extract Gel'fand data from the heat traces.
    Extract,
    /// Compare two Gel'fand data files.
    Compare { a: PathBuf, b: PathBuf },
    /// Finite-rank unique continuation test.
    Ucp,
    /// Recover the potential off the observation set.
    Recover,
    /// Isometry gauge check.
    Gauge,
    /// Heat-kernel bound and kernel equality checks.
    Heatcheck,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Solve => "solve",
            Command::Cauchy => "cauchy",
            Command::Extract => "extract",
            Command::Compare { .. } => "compare",
            Command::Ucp => "ucp",
            Command::Recover => "recover",
            Command::Gauge => "gauge",
            Command::Heatcheck => "heatcheck",
        }
    }
}

/// JSON envelope for command reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub format_version: u32,
    pub command: String,
    pub seed: u64,
    pub report: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub pass: bool,
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub k: usize,
    pub lambda: f64,
    pub multiplicity: usize,
    pub l_multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub rows: Vec<SpectrumRow>,
    pub next_eigenvalue: f64,
    pub orthonormality_error: f64,
    pub operator_min_abs_eigenvalue: f64,
    pub operator_condition: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolvedSource {
    pub source_id: String,
    pub coefficients: Vec<f64>,
    /// Solution values at the model quadrature nodes.
    pub node_values: Vec<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub truncation: usize,
    pub mass: f64,
    pub potential: String,
    pub min_abs_eigenvalue: f64,
    pub condition_number: f64,
    pub solutions: Vec<SolvedSource>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractReport {
    pub eigenvalues: Vec<f64>,
    pub multiplicities: Vec<usize>,
    pub analytic_eigenvalues: Vec<f64>,
    pub analytic_multiplicities: Vec<usize>,
    pub max_angles: Vec<f64>,
    pub max_fit_residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoverySummary {
    pub truth: String,
    pub covered: usize,
    pub uncovered: usize,
    pub max_error: f64,
    pub relative_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatcheckReport {
    pub probe_nodes: Vec<usize>,
    pub grigoryan: GrigoryanReport,
    pub kernel_equality: Option<KernelEqualityReport>,
    pub pass: bool,
}

struct Context {
    config: ExperimentConfig,
    seed: u64,
    out: PathBuf,
}

impl Context {
    fn model(&self) -> Result<Arc<SpectralModel>> {
        Ok(Arc::new(build_model(
            self.config.model.clone(),
            self.config.truncation,
            self.config.resolution.clone(),
        )?))
    }

    fn observation(&self, model: &SpectralModel) -> Result<ObservationSet> {
        model.restrict_to_observation(&self.config.observation)
    }

    fn potential(&self, model: &SpectralModel) -> Result<PotentialField> {
        PotentialField::from_spec(&self.config.potential, model, &self.config.observation)
    }

    fn sources(&self, model: &SpectralModel) -> Result<Vec<SourceFunction>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        make_source_basis(
            model,
            &self.config.observation,
            self.config.sources.count,
            self.config.sources.shape(),
            &mut rng,
        )
    }

    fn times(&self, model: &SpectralModel) -> Vec<f64> {
        match &self.config.time_grid {
            Some(g) => g.times(),
            None => default_time_grid(model, self.config.mass),
        }
    }

    fn artifact<T: Serialize>(&self, command: &str, report: T) -> Artifact<T> {
        Artifact {
            format_version: ARTIFACT_VERSION,
            command: command.to_string(),
            seed: self.seed,
            report,
        }
    }
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.text(name, &text)
    }

    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, text)?;
        self.files.push(path);
        Ok(())
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn read_gelfand(path: &Path) -> Result<GelfandData> {
    let data: GelfandData = read_json(path)?;
    if data.format_version != crate::gelfand::GELFAND_VERSION {
        return Err(Error::Format(format!(
            "{}: unsupported format version {}",
            path.display(),
            data.format_version
        )));
    }
    Ok(data)
}

fn file_id(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// Applies `LOGSCHRO_THREADS` to the global rayon pool. Returns the thread
/// count that was requested, if any.
pub fn configure_threads() -> Result<Option<usize>> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::config(THREADS_ENV, format!("`{raw}` is not a positive integer")))?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(Some(n))
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    if let Command::Compare { a, b } = &cli.command {
        let tol = match &cli.config {
            Some(path) => ExperimentConfig::load(path)?.compare_tolerances(),
            None => CompareTolerances::default(),
        };
        let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
        return run_compare(a, b, tol, &out, cli.seed.unwrap_or(0));
    }
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::config("--config", "required for this subcommand"))?;
    let config = ExperimentConfig::load(path)?;
    let seed = cli.seed.unwrap_or(config.seed);
    let out = cli
        .out
        .clone()
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let ctx = Context { config, seed, out };
    match &cli.command {
        Command::Spectrum => run_spectrum(&ctx),
        Command::Solve => run_solve(&ctx),
        Command::Cauchy => run_cauchy(&ctx),
        Command::Extract => run_extract(&ctx),
        Command::Ucp => run_ucp(&ctx),
        Command::Recover => run_recover(&ctx),
        Command::Gauge => run_gauge(&ctx),
        Command::Heatcheck => run_heatcheck(&ctx),
        Command::Compare { .. } => unreachable!(),
    }
}

fn outcome(pass: bool, w: Writer, summary: Vec<String>) -> Result<Outcome> {
    Ok(Outcome {
        pass,
        out_dir: w.dir,
        files: w.files,
        summary,
    })
}

fn run_spectrum(ctx: &Context) -> Result<Outcome> {
    let model = ctx.model()?;
    let mass = ctx.config.mass;
    let ortho = model.verify_orthonormality(1e-10);
    let potential = ctx.potential(&model)?;
    let op = ForwardOperator::new(model.clone(), mass, &potential)?;
    let rows: Vec<SpectrumRow> = model
        .eigenvalues()
        .iter()
        .zip(model.multiplicities())
        .enumerate()
        .map(|(k, (&lambda, &d))| SpectrumRow {
            k,
            lambda,
            multiplicity: d,
            l_multiplier: mass.l_multiplier(lambda),
        })
        .collect();
    let mut table = String::from("k\tlambda\tmultiplicity\tl_multiplier\n");
    for r in &rows {
        let _ = writeln!(table, "{}\t{}\t{}\t{}", r.k, r.lambda, r.multiplicity, r.l_multiplier);
    }
    let report = SpectrumReport {
        rows,
        next_eigenvalue: model.next_eigenvalue(),
        orthonormality_error: ortho.max_offdiag.max(ortho.max_diag_error),
        operator_min_abs_eigenvalue: op.min_abs_eigenvalue(),
        operator_condition: op.condition_number(),
    };
    let pass = ortho.pass && op.is_invertible();
    let mut w = Writer::new(&ctx.out)?;
    w.json("model.json", &model.dump())?;
    w.json("spectrum.json", &ctx.artifact("spectrum", &report))?;
    w.text("spectrum.tsv", &table)?;
    let summary = vec![
        format!("{} eigenvalues, {} basis functions", model.truncation(), model.basis_len()),
        format!("orthonormality error {:.3e}", report.orthonormality_error),
        format!("operator condition {:.3e}", report.operator_condition),
    ];
    outcome(pass, w, summary)
}

fn run_solve(ctx: &Context) -> Result<Outcome> {
    let model = ctx.model()?;
    let potential = ctx.potential(&model)?;
    let sources = ctx.sources(&model)?;
    let op = ForwardOperator::new(model.clone(), ctx.config.mass, &potential)?;
    op.check_invertible()?;
    let solved = solve_sources(&op, &sources)?;
    let mut residuals = Vec::with_capacity(solved.len());
    let solutions: Vec<SolvedSource> = solved
        .iter()
        .map(|s| {
            let f = s.source.coefficients(&model)?;
            let residual = crate::linalg::norm2(
                &op.apply(s.solution.coeffs())
                    .iter()
                    .zip(f.coeffs())
                    .map(|(a, b)| a - b)
                    .collect::<Vec<_>>(),
            );
            residuals.push(residual);
            Ok(SolvedSource {
                source_id: s.source.id.clone(),
                coefficients: s.solution.coeffs().to_vec(),
                node_values: s.solution.evaluate_at_nodes(),
                residual,
            })
        })
        .collect::<Result<_>>()?;
    let mut table = String::from("source\tresidual\tl2_norm\tmax_node_value\n");
    for (s, sol) in solved.iter().zip(&solutions) {
        let peak = crate::linalg::max_abs(&sol.node_values);
        let _ = writeln!(table, "{}\t{:e}\t{}\t{}", sol.source_id, sol.residual, s.solution.l2_norm(), peak);
    }
    let report = SolveReport {
        truncation: model.truncation(),
        mass: ctx.config.mass.value(),
        potential: potential.label().to_string(),
        min_abs_eigenvalue: op.min_abs_eigenvalue(),
        condition_number: op.condition_number(),
        solutions,
    };
    let worst = residuals.iter().copied().fold(0.0_f64, f64::max);
    let mut w = Writer::new(&ctx.out)?;
    w.json("solve.json", &ctx.artifact("solve", &report))?;
    w.text("solve.tsv", &table)?;
    let summary = vec![
        format!("{} sources solved, worst residual {worst:.3e}", report.solutions.len()),
        format!("condition number {:.3e}", report.condition_number),
    ];
    outcome(worst <= ctx.config.tolerances.residual, w, summary)
}

fn run_cauchy(ctx: &Context) -> Result<Outcome> {
    let model = ctx.model()?;
    let obs = ctx.observation(&model)?;
    let potential = ctx.potential(&model)?;
    let sources = ctx.sources(&model)?;
    let op = ForwardOperator::new(model.clone(), ctx.config.mass, &potential)?;
    let records = cauchy_records(&op, &potential, &sources, &obs)?;
    let mut w = Writer::new(&ctx.out)?;
    let mut names = Vec::with_capacity(records.len());
    let mut table = String::from("source\tnodes\tequation_residual\tmax_u\tmax_lu\n");
    let mut worst = 0.0_f64;
    for (rec, _) in &records {
        let name = format!("records/{}.json", file_id(&rec.source_id));
        w.json(&name, rec)?;
        names.push(name);
        worst = worst.max(rec.equation_residual);
        let _ = writeln!(
            table,
            "{}\t{}\t{:e}\t{}\t{}",
            rec.source_id,
            rec.u.len(),
            rec.equation_residual,
            crate::linalg::max_abs(&rec.u),
            crate::linalg::max_abs(&rec.lu)
        );
    }
    let manifest = CauchyManifest {
        format_version: CAUCHY_RECORD_VERSION,
        model: ctx.config.model.clone(),
        truncation: model.truncation(),
        mass: ctx.config.mass.value(),
        observation: ctx.config.observation.clone(),
        potential: potential.label().to_string(),
        records: names,
    };
    w.json("manifest.json", &manifest)?;
    w.text("cauchy.tsv", &table)?;
    let summary = vec![format!(
        "{} records on {} observation nodes, worst equation residual {worst:.3e}",
        records.len(),
        obs.len()
    )];
    outcome(worst <= ctx.config.tolerances.residual, w, summary)
}

fn run_extract(ctx: &Context) -> Result<Outcome> {
    let model = ctx.model()?;
    let obs = ctx.observation(&model)?;
    let potential = ctx.potential(&model)?;
    let sources = ctx.sources(&model)?;
    let times = ctx.times(&model);
    let data = build_gelfand_data(
        &model,
        ctx.config.mass,
        &potential,
        &obs,
        &sources,
        &times,
        ctx.config.gelfand_options(),
    )?;
    let angles = analytic_angles(&data, &model, &obs)?;
    let tol = ctx.config.tolerances;
    let eig_ok = data.eigenvalues.len() == model.truncation()
        && data
            .eigenvalues
            .iter()
            .zip(model.eigenvalues())
            .all(|(a, b)| (a - b).abs() <= tol.eigenvalue * b.abs().max(1.0));
    let mult_ok = data.multiplicities == model.multiplicities();
    let angle_ok = angles.iter().all(|&a| a <= tol.angle);
    let report = ExtractReport {
        eigenvalues: data.eigenvalues.clone(),
        multiplicities: data.multiplicities.clone(),
        analytic_eigenvalues: model.eigenvalues().to_vec(),
        analytic_multiplicities: model.multiplicities().to_vec(),
        max_angles: angles.clone(),
        max_fit_residual: data.max_fit_residual,
        pass: eig_ok && mult_ok && angle_ok,
    };
    let mut table = String::from("k\tlambda\tmultiplicity\tanalytic_lambda\tmax_angle\n");
    for (k, (&lambda, &d)) in data.eigenvalues.iter().zip(&data.multiplicities).enumerate() {
        let analytic = model
            .eigenvalues()
            .get(k)
            .map_or_else(|| "NA".to_string(), |v| v.to_string());
        let _ = writeln!(table, "{k}\t{lambda}\t{d}\t{analytic}\t{:e}", angles[k]);
    }
    let mut w = Writer::new(&ctx.out)?;
    w.json("gelfand.json", &data)?;
    w.json("extract.json", &ctx.artifact("extract", &report))?;
    w.text("gelfand.tsv", &table)?;
    let worst = angles.iter().copied().fold(0.0_f64, f64::max);
    let summary = vec![
        format!("eigenvalues {:?}", data.eigenvalues),
        format!("multiplicities {:?}", data.multiplicities),
        format!("max principal angle {worst:.3e}, max fit residual {:.3e}", data.max_fit_residual),
    ];
    outcome(report.pass, w, summary)
}

fn run_compare(a: &Path, b: &Path, tol: CompareTolerances, out: &Path, seed: u64) -> Result<Outcome> {
    let da = read_gelfand(a)?;
    let db = read_gelfand(b)?;
    let cmp = compare_gelfand(&da, &db, tol)?;
    let mut w = Writer::new(out)?;
    w.json(
        "comparison.json",
        &Artifact {
            format_version: ARTIFACT_VERSION,
            command: "compare".to_string(),
            seed,
            report: &cmp,
        },
    )?;
    w.text("comparison.tsv", &cmp.to_table())?;
    let summary = vec![match cmp.first_failure {
        None => format!("{} eigenvalues agree", cmp.rows.len()),
        Some(k) => format!("first disagreement at k = {k}"),
    }];
    outcome(cmp.pass, w, summary)
}

fn run_ucp(ctx: &Context) -> Result<Outcome> {
    let model = ctx.model()?;
    let r = ucp_nullspace_test(&model, ctx.config.mass, &ctx.config.observation, ctx.config.ucp)?;
    let table = format!(
        "truncation\tunknowns\tsample_nodes\tnull_dimension\tsigma_min\tsigma_max\tsolution_only_sigma_min\tsolution_only_null_dimension\tpass\n{}\t{}\t{}\t{}\t{:e}\t{:e}\t{:e}\t{}\t{}\n",
        r.truncation,
        r.unknowns,
        r.sample_nodes,
        r.null_dimension,
        r.sigma_min,
        r.sigma_max,
        r.solution_only_sigma_min,
        r.solution_only_null_dimension,
        r.pass
    );
    let mut w = Writer::new(&ctx.out)?;
    w.json("ucp.json", &ctx.artifact("ucp", &r))?;
    w.text("ucp.tsv", &table)?;
    let summary = vec![format!(
        "null dimension {} (sigma ratio {:.3e}; solution-only null dimension {})",
        r.null_dimension,
        r.sigma_min / r.sigma_max,
        r.solution_only_null_dimension
    )];
    outcome(r.pass, w, summary)
}

fn run_recover(ctx: &Context) -> Result<Outcome> {
    let model = ctx.model()?;
    let obs = ctx.observation(&model)?;
    let potential = ctx.potential(&model)?;
    let sources = ctx.sources(&model)?;
    let op = ForwardOperator::new(model.clone(), ctx.config.mass, &potential)?;
    let data = solve_sources(&op, &sources)?;
    let known = potential.restricted_samples(&obs);
    let rec = recover_potential(&model, ctx.config.mass, &obs, &known, &data, ctx.config.recovery)?;
    let scale = potential.samples(&model).iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let max_error = rec.max_error(&potential);
    let relative_error = if scale > 0.0 { max_error / scale } else { max_error };
    let tolerance = ctx.config.tolerances.recovery;
    let summary_report = RecoverySummary {
        truth: potential.label().to_string(),
        covered: rec.covered,
        uncovered: rec.uncovered,
        max_error,
        relative_error,
        tolerance,
        pass: relative_error <= tolerance,
    };
    let mut w = Writer::new(&ctx.out)?;
    w.json("recovery.json", &ctx.artifact("recover", (&summary_report, &rec)))?;
    w.text("recovery.tsv", &rec.to_table())?;
    let summary = vec![
        format!("{} complement nodes covered, {} uncovered", rec.covered, rec.uncovered),
        format!("max relative error {relative_error:.3e} (tolerance {tolerance:e})"),
    ];
    outcome(summary_report.pass, w, summary)
}

fn run_gauge(ctx: &Context) -> Result<Outcome> {
    let iso = ctx
        .config
        .isometry
        .as_ref()
        .ok_or_else(|| Error::config("isometry", "missing (required by gauge)"))?;
    let model = ctx.model()?;
    let obs = ctx.observation(&model)?;
    let potential = ctx.potential(&model)?;
    let sources = ctx.sources(&model)?;
    let r = isometry_gauge_check(
        &model,
        ctx.config.mass,
        &potential,
        &obs,
        iso,
        &sources,
        ctx.config.tolerances.gauge,
    )?;
    let table = format!(
        "fixes_observation_pointwise\tintertwining_a\tintertwining_l\trecord_deviation\tsources\ttolerance\tpass\n{}\t{:e}\t{:e}\t{:e}\t{}\t{:e}\t{}\n",
        r.fixes_observation_pointwise, r.intertwining_a, r.intertwining_l, r.record_deviation, r.sources, r.tolerance, r.pass
    );
    let mut w = Writer::new(&ctx.out)?;
    w.json("gauge.json", &ctx.artifact("gauge", &r))?;
    w.text("gauge.tsv", &table)?;
    let summary = vec![format!(
        "record deviation {:.3e}, intertwining {:.3e} / {:.3e}",
        r.record_deviation, r.intertwining_a, r.intertwining_l
    )];
    outcome(r.pass, w, summary)
}

fn run_heatcheck(ctx: &Context) -> Result<Outcome> {
    let model = ctx.model()?;
    let hc = &ctx.config.heatcheck;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let count = hc.probe_points.clamp(2, model.nodes().len());
    let mut probe_nodes = sample(&mut rng, model.nodes().len(), count).into_vec();
    probe_nodes.sort_unstable();
    let mut pairs = Vec::new();
    for (a, &i) in probe_nodes.iter().enumerate() {
        for &j in &probe_nodes[a..] {
            pairs.push((model.nodes()[i].clone(), model.nodes()[j].clone()));
        }
    }
    let grigoryan = grigoryan_check(&model, ctx.config.mass, &hc.times, &pairs)?;
    let kernel_equality = match &hc.compare_model {
        None => None,
        Some(kind) => {
            let other = build_model(kind.clone(), ctx.config.truncation, ctx.config.resolution.clone())?;
            Some(heat_kernel_equality_check(
                &model,
                &other,
                ctx.config.mass,
                &ctx.config.observation,
                &hc.times,
                ctx.config.tolerances.kernel,
            )?)
        }
    };
    let pass = grigoryan.pass && kernel_equality.as_ref().is_none_or(|k| k.pass);
    let mut table = String::from("check\tvalue\tpass\n");
    let _ = writeln!(
        table,
        "grigoryan_violations\t{}\t{}",
        grigoryan.violations + grigoryan.refined_violations,
        grigoryan.pass
    );
    let _ = writeln!(table, "grigoryan_prefactor\t{}\t{}", grigoryan.fitted_c_prefactor, grigoryan.pass);
    let _ = writeln!(table, "grigoryan_exponent\t{}\t{}", grigoryan.fitted_c_exponent, grigoryan.pass);
    if let Some(k) = &kernel_equality {
        let _ = writeln!(table, "kernel_max_deviation\t{:e}\t{}", k.max_deviation, k.pass);
        let _ = writeln!(table, "kernel_worst_time\t{}\t{}", k.worst_time, k.pass);
    }
    let mut summary = vec![format!(
        "Grigor'yan fit C = {:.4}, c = {:.4}: {} violations on {} probes",
        grigoryan.fitted_c_prefactor,
        grigoryan.fitted_c_exponent,
        grigoryan.violations + grigoryan.refined_violations,
        grigoryan.probes + grigoryan.refined_probes
    )];
    if let Some(k) = &kernel_equality {
        summary.push(format!(
            "kernel deviation {:.3e} (worst at t = {})",
            k.max_deviation, k.worst_time
        ));
    }
    let report = HeatcheckReport {
        probe_nodes,
        grigoryan,
        kernel_equality,
        pass,
    };
    let mut w = Writer::new(&ctx.out)?;
    w.json("heatcheck.json", &ctx.artifact("heatcheck", &report))?;
    w.text("heatcheck.tsv", &table)?;
    outcome(pass, w, summary)
}

/// Runs the parsed command line and maps the result to an exit status:
/// 0 when every check passes, 1 when a check fails, 2 on an error.
pub fn main_with(cli: Cli) -> i32 {
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return 2;
    }
    match run(&cli) {
        Ok(o) => {
            if !cli.quiet {
                for line in &o.summary {
                    println!("{line}");
                }
                println!(
                    "{} {} -> {}",
                    cli.command.name(),
                    if o.pass { "PASS" } else { "FAIL" },
                    o.out_dir.display()
                );
            }
            if o.pass {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
