//! Command-line surface: `audit`, `canonical`, `pid`, `train`, `sample`
//! and `schema`.
//!
//! Exit codes: 0 success, 1 usage or role-binding error, 2 input error
//! (unreadable or malformed files), 3 numeric failure. `canonical` also
//! exits 3 when a verdict differs from the expected one.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use crate::canonical::{canonical_row, canonical_table, render_table, CanonicalRow, MEASURE_NAMES};
use crate::error::{Error, Result};
use crate::ingest::{discretize, read_csv, ColumnBinning};
use crate::measures::{decompose, observational, Bipartition, BipartitionValue, ObservationalMeasures, Roles};
use crate::pid::{pid_decompose_with, PidResult};
use crate::scm::{enumerate, path_specific_influence, sample, scenario, scenario_text, Scm};
use crate::tolerance::Tolerances;
use crate::trainer::{sweep, DataSource, ModelShape, Regularizer, TrainConfig, DEFAULT_LAMBDAS};

pub const SCHEMA: &str = include_str!("../schema/report.schema.json");
pub const THREADS_VAR: &str = "EXEMPT_AUDIT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "exempt-audit", version, about = "Exempt and non-exempt disparity audits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decompose the disparity of a model (SCM) or observational measures (CSV).
    Audit(AuditArgs),
    /// Score the six canonical examples with the four candidate measures.
    Canonical(CanonicalArgs),
    /// Partial information decomposition of I(Z;(A,B)).
    Pid(PidArgs),
    /// Train classifiers over a λ grid with an information penalty.
    Train(TrainArgs),
    /// Draw samples from a model as CSV.
    Sample(SampleArgs),
    /// Print the JSON schema of audit reports.
    Schema,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Model file in the line format.
    #[arg(long)]
    pub scm: Option<PathBuf>,
    /// Catalog model name.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Comma-separated table with a header row.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long)]
    pub protected: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub critical: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub general: Option<Vec<String>>,
    #[arg(long)]
    pub output: Option<String>,
    #[arg(long)]
    pub label: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub xprime: Vec<String>,
    /// Quantile bins for continuous CSV columns.
    #[arg(long, default_value_t = 8)]
    pub bins: usize,
    /// Solver tolerance in bits.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CanonicalArgs {
    /// `all` or an example number 1..6.
    #[arg(long, default_value = "all")]
    pub example: String,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Write the rows as JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PidArgs {
    #[command(flatten)]
    pub source: Source,
    /// Variables of the target slot.
    #[arg(long, value_delimiter = ',', required = true)]
    pub z: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub a: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub b: Vec<String>,
    #[arg(long, default_value_t = 8)]
    pub bins: usize,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub source: Source,
    /// none, mi, uniq, cmi, cmi_extended or eo.
    #[arg(long, default_value = "none")]
    pub reg: String,
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub xprime: Vec<String>,
    #[arg(long)]
    pub protected: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub critical: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub general: Option<Vec<String>>,
    #[arg(long)]
    pub label: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Mini-batch size; 0 trains full-batch.
    #[arg(long)]
    pub batch: Option<usize>,
    /// Hidden width; 0 gives a logistic model.
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long, default_value_t = 8)]
    pub bins: usize,
    /// Decision threshold on the predicted probability.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, conflicts_with = "scenario", required_unless_present = "scenario")]
    pub scm: Option<PathBuf>,
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// What the request asked for, echoed into the report.
#[derive(Debug, Clone, Serialize)]
pub struct RequestEcho {
    pub source_kind: &'static str,
    pub source: String,
    pub protected: String,
    pub critical: Vec<String>,
    pub general: Vec<String>,
    pub output: String,
    pub label: Option<String>,
    pub x_prime: Vec<String>,
    pub bins: Option<usize>,
    pub solver_tolerance: f64,
}

/// Disparity fields; causal ones are `null` for observational sources.
#[derive(Debug, Clone, Serialize)]
pub struct DisparityFields {
    pub total: Option<f64>,
    pub visible: f64,
    pub masked: Option<f64>,
    pub m_ne_star: Option<f64>,
    pub m_e: Option<f64>,
    pub m_v_ne: f64,
    pub m_v_e: f64,
    pub m_m_ne: Option<f64>,
    pub m_m_e: Option<f64>,
    pub minimizing_bipartitions: Option<Vec<Bipartition>>,
    pub bipartitions: Option<Vec<BipartitionValue>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateVerdict {
    pub measure: &'static str,
    pub value: Option<f64>,
    /// Above the nonzero threshold.
    pub flags_disparity: Option<bool>,
}

/// Comparison measures that need the latents; `null` for CSV sources.
#[derive(Debug, Clone, Serialize)]
pub struct LatentMeasures {
    pub prior_intersection: Option<f64>,
    pub product: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportDocument {
    pub tool: &'static str,
    pub version: &'static str,
    pub units: &'static str,
    pub request: RequestEcho,
    pub disparity: DisparityFields,
    /// Computable from the observed columns alone.
    pub observational: ObservationalMeasures,
    pub latent_measures: LatentMeasures,
    pub pid: PidResult,
    pub candidates: Vec<CandidateVerdict>,
    pub binning: Option<Vec<ColumnBinning>>,
    pub notes: Vec<String>,
    pub elapsed_ms: f64,
}

/// Round every float in a JSON tree to 9 significant digits.
pub fn round_numbers(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(x) = n.as_f64() {
                    let r: f64 = format!("{x:.8e}").parse().unwrap_or(x);
                    if let Some(m) = serde_json::Number::from_f64(r) {
                        *n = m;
                    }
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_numbers),
        Value::Object(o) => o.values_mut().for_each(round_numbers),
        _ => {}
    }
}

/// Serialize with rounded numbers, pretty-printed.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_numbers(&mut v);
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn read_table(path: &Path) -> Result<crate::scm::Dataset> {
    if let Err(e) = std::fs::metadata(path) {
        return Err(Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))));
    }
    read_csv(path)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn tolerances(tol: Option<f64>) -> Result<Tolerances> {
    let mut t = Tolerances::default();
    if let Some(v) = tol {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::Config(format!("--tol must lie in (0, 1), got {v}")));
        }
        t.solver = v;
    }
    Ok(t)
}

fn check_disjoint(sets: &[(&str, &[String])]) -> Result<()> {
    let mut seen: Vec<(&str, &str)> = Vec::new();
    for (role, names) in sets {
        for n in names.iter() {
            if let Some((other, _)) = seen.iter().find(|(_, m)| m == n) {
                return Err(Error::Binding(format!("`{n}` is bound as both {other} and {role}")));
            }
            seen.push((role, n));
        }
    }
    Ok(())
}

/// `# note:` comment lines of a model text.
fn notes_of(text: &str) -> Vec<String> {
    text.lines()
        .filter_map(|l| l.trim().strip_prefix('#'))
        .filter_map(|l| l.trim().strip_prefix("note:"))
        .map(|l| l.trim().to_string())
        .collect()
}

fn load_scm(source: &Source) -> Result<(Scm, String, String, &'static str)> {
    if let Some(name) = &source.scenario {
        let text = scenario_text(name)?.to_string();
        Ok((scenario(name)?, text, name.clone(), "scenario"))
    } else if let Some(path) = &source.scm {
        let text = read_text(path)?;
        Ok((Scm::parse(&text)?, text, path.display().to_string(), "scm"))
    } else {
        Err(Error::Config("a model source is required".into()))
    }
}

fn strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

pub fn cmd_audit(args: &AuditArgs) -> Result<ReportDocument> {
    let start = Instant::now();
    let tol = tolerances(args.tol)?;
    let critical = args.critical.clone().unwrap_or_default();
    let general = args.general.clone().unwrap_or_default();
    let output_flag: Vec<String> = args.output.iter().cloned().collect();
    let protected_flag: Vec<String> = args.protected.iter().cloned().collect();
    let label_flag: Vec<String> = args.label.iter().cloned().collect();
    check_disjoint(&[
        ("protected", &protected_flag),
        ("critical", &critical),
        ("general", &general),
        ("output", &output_flag),
        ("label", &label_flag),
        ("x'", &args.xprime),
    ])?;
    if let Some(csv) = &args.source.csv {
        return audit_csv(args, csv, critical, general, tol, start);
    }
    let (mut scm, text, source, kind) = load_scm(&args.source)?;
    if let Some(p) = &args.protected {
        if p != scm.protected_name() {
            return Err(Error::Binding(format!(
                "--protected `{p}` does not match the model's protected variable `{}`",
                scm.protected_name()
            )));
        }
    }
    if args.critical.is_some() {
        scm = scm.retagged(&strs(&critical)).map_err(|e| Error::Binding(e.to_string()))?;
    }
    let output = scm
        .output_name()
        .map_err(|_| Error::Binding("the model has no output assignment to audit".into()))?
        .to_string();
    if let Some(o) = &args.output {
        if *o != output {
            return Err(Error::Binding(format!("--output `{o}` does not match the model output `{output}`")));
        }
    }
    let features = scm.feature_names();
    for n in general.iter().chain(&args.xprime) {
        if !features.contains(&n.as_str()) {
            return Err(Error::Binding(format!("`{n}` is not a feature of the model")));
        }
    }
    let x_prime = strs(&args.xprime);
    let roles = Roles::from_scm(&scm)?.with_x_prime(&x_prime);
    let joint = enumerate(&scm)?.joint_over(&roles.causal_variables())?;
    let report = decompose(&joint, &roles, &tol)?;
    let critical_now = scm.critical();
    let pid = pid_decompose_with(&joint, &[scm.protected_name()], &[&output], &critical_now, &tol)?;
    let values = [
        report.observational.cmi,
        report.observational.uni,
        path_specific_influence(&scm)?,
        report.m_ne_star,
    ];
    let candidates = MEASURE_NAMES
        .iter()
        .zip(values)
        .map(|(&measure, v)| CandidateVerdict {
            measure,
            value: Some(v),
            flags_disparity: Some(v > tol.nonzero),
        })
        .collect();
    Ok(ReportDocument {
        tool: "exempt-audit",
        version: env!("CARGO_PKG_VERSION"),
        units: "bits",
        request: RequestEcho {
            source_kind: kind,
            source,
            protected: scm.protected_name().to_string(),
            critical: critical_now.iter().map(|s| s.to_string()).collect(),
            general: scm.general().iter().map(|s| s.to_string()).collect(),
            output,
            label: scm.label().map(|l| l.name.clone()),
            x_prime: args.xprime.clone(),
            bins: None,
            solver_tolerance: tol.solver,
        },
        disparity: DisparityFields {
            total: Some(report.total),
            visible: report.visible,
            masked: Some(report.masked),
            m_ne_star: Some(report.m_ne_star),
            m_e: Some(report.m_e),
            m_v_ne: report.m_v_ne,
            m_v_e: report.m_v_e,
            m_m_ne: Some(report.m_m_ne),
            m_m_e: Some(report.m_m_e),
            minimizing_bipartitions: Some(report.minimizing_bipartitions),
            bipartitions: Some(report.bipartitions),
        },
        latent_measures: LatentMeasures {
            prior_intersection: report.observational.prior_intersection,
            product: report.observational.product,
        },
        observational: ObservationalMeasures {
            prior_intersection: None,
            product: None,
            ..report.observational
        },
        pid,
        candidates,
        binning: None,
        notes: notes_of(&text),
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

fn audit_csv(
    args: &AuditArgs,
    path: &Path,
    critical: Vec<String>,
    general: Vec<String>,
    tol: Tolerances,
    start: Instant,
) -> Result<ReportDocument> {
    let protected = args
        .protected
        .clone()
        .ok_or_else(|| Error::Binding("--protected is required for CSV sources".into()))?;
    let output = args
        .output
        .clone()
        .ok_or_else(|| Error::Binding("--output is required for CSV sources".into()))?;
    let data = read_table(path)?;
    let needed: Vec<&String> = [&protected, &output]
        .into_iter()
        .chain(&critical)
        .chain(&general)
        .chain(&args.xprime)
        .chain(args.label.as_ref())
        .collect();
    for n in needed {
        data.column_index(n).map_err(|_| Error::Binding(format!("column `{n}` not found in {}", path.display())))?;
    }
    let mut cols = vec![protected.as_str(), output.as_str()];
    cols.extend(strs(&critical));
    cols.extend(strs(&args.xprime));
    let (joint, binning) = discretize(&data, &cols, args.bins)?;
    let (obs, pid) = observational(&joint, &protected, &strs(&critical), &strs(&args.xprime), &output, &tol)?;
    let visible = joint.mutual_information(&[&protected], &[&output])?;
    let m_v_ne = obs.uni;
    let candidates = vec![
        CandidateVerdict {
            measure: "cmi",
            value: Some(obs.cmi),
            flags_disparity: Some(obs.cmi > tol.nonzero),
        },
        CandidateVerdict {
            measure: "uni",
            value: Some(obs.uni),
            flags_disparity: Some(obs.uni > tol.nonzero),
        },
        CandidateVerdict {
            measure: "path_specific",
            value: None,
            flags_disparity: None,
        },
        CandidateVerdict {
            measure: "proposed",
            value: None,
            flags_disparity: None,
        },
    ];
    Ok(ReportDocument {
        tool: "exempt-audit",
        version: env!("CARGO_PKG_VERSION"),
        units: "bits",
        request: RequestEcho {
            source_kind: "csv",
            source: path.display().to_string(),
            protected,
            critical,
            general,
            output,
            label: args.label.clone(),
            x_prime: args.xprime.clone(),
            bins: Some(args.bins),
            solver_tolerance: tol.solver,
        },
        disparity: DisparityFields {
            total: None,
            visible,
            masked: None,
            m_ne_star: None,
            m_e: None,
            m_v_ne,
            m_v_e: tol.clamp_report(visible - m_v_ne),
            m_m_ne: None,
            m_m_e: None,
            minimizing_bipartitions: None,
            bipartitions: None,
        },
        observational: obs,
        latent_measures: LatentMeasures {
            prior_intersection: None,
            product: None,
        },
        pid,
        candidates,
        binning: Some(binning),
        notes: vec!["observational source: causal fields need latents and are null".into()],
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Flat `field,value` rows for spreadsheet use.
fn report_csv(doc: &ReportDocument) -> Result<String> {
    let mut v = serde_json::to_value(doc)?;
    round_numbers(&mut v);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["field", "value"])?;
    let f = |x: &Value| match x {
        Value::Null => String::new(),
        other => other.to_string(),
    };
    for section in ["disparity", "observational", "pid"] {
        if let Some(Value::Object(o)) = v.get(section) {
            for (k, x) in o {
                if !x.is_array() {
                    w.write_record([format!("{section}.{k}"), f(x)])?;
                }
            }
        }
    }
    for c in &doc.candidates {
        w.write_record([
            format!("candidate.{}", c.measure),
            c.value.map_or(String::new(), |x| format!("{x:.9}")),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

#[derive(Debug, Serialize)]
struct CanonicalDocument {
    rows: Vec<CanonicalRow>,
    all_match: bool,
}

/// Prints the table; returns whether every verdict matched.
pub fn cmd_canonical(args: &CanonicalArgs) -> Result<bool> {
    let tol = tolerances(args.tol)?;
    let rows = if args.example == "all" {
        canonical_table(&tol)?
    } else {
        let n: usize = args
            .example
            .parse()
            .map_err(|_| Error::Config(format!("--example must be `all` or 1..6, got `{}`", args.example)))?;
        vec![canonical_row(n, &tol)?]
    };
    print!("{}", render_table(&rows));
    let all_match = rows.iter().all(CanonicalRow::matches);
    if let Some(out) = &args.out {
        std::fs::write(out, to_json(&CanonicalDocument { rows, all_match })?)?;
    }
    Ok(all_match)
}

#[derive(Debug, Serialize)]
struct PidDocument {
    z: Vec<String>,
    a: Vec<String>,
    b: Vec<String>,
    units: &'static str,
    pid: PidResult,
}

pub fn cmd_pid(args: &PidArgs) -> Result<PidResult> {
    let tol = tolerances(args.tol)?;
    check_disjoint(&[("z", &args.z), ("a", &args.a), ("b", &args.b)])?;
    let mut cols = strs(&args.z);
    cols.extend(strs(&args.a));
    cols.extend(strs(&args.b));
    let joint = if let Some(csv) = &args.source.csv {
        discretize(&read_table(csv)?, &cols, args.bins)?.0
    } else {
        let (scm, ..) = load_scm(&args.source)?;
        enumerate(&scm)?.joint_over(&cols)?
    };
    let pid = pid_decompose_with(&joint, &strs(&args.z), &strs(&args.a), &strs(&args.b), &tol)?;
    let text = match args.format {
        Format::Json => to_json(&PidDocument {
            z: args.z.clone(),
            a: args.a.clone(),
            b: args.b.clone(),
            units: "bits",
            pid,
        })?,
        Format::Csv => format!(
            "uni_a_given_b,uni_b_given_a,redundancy,synergy,total\n{:.9},{:.9},{:.9},{:.9},{:.9}\n",
            pid.uni_a_given_b, pid.uni_b_given_a, pid.redundancy, pid.synergy, pid.total
        ),
    };
    emit(args.out.as_deref(), &text)?;
    Ok(pid)
}

pub fn train_config(args: &TrainArgs) -> Result<TrainConfig> {
    let source = if let Some(csv) = &args.source.csv {
        let need = |v: &Option<String>, flag: &str| {
            v.clone()
                .ok_or_else(|| Error::Binding(format!("--{flag} is required for CSV sources")))
        };
        let critical = args.critical.clone().unwrap_or_default();
        let general = args.general.clone().unwrap_or_default();
        let protected = need(&args.protected, "protected")?;
        let label = need(&args.label, "label")?;
        check_disjoint(&[
            ("protected", std::slice::from_ref(&protected)),
            ("critical", &critical),
            ("general", &general),
            ("label", std::slice::from_ref(&label)),
        ])?;
        DataSource::Csv {
            path: csv.clone(),
            protected,
            critical,
            general,
            label,
        }
    } else if let Some(name) = &args.source.scenario {
        DataSource::Scenario {
            name: name.clone(),
            samples: args.samples,
        }
    } else if let Some(path) = &args.source.scm {
        DataSource::ScmFile {
            path: path.clone(),
            samples: args.samples,
        }
    } else {
        return Err(Error::Config("a data source is required".into()));
    };
    let mut c = TrainConfig::scenario("");
    c.source = source;
    c.regularizer = Regularizer::parse(&args.reg, &args.xprime)?;
    c.seed = args.seed;
    c.bins = args.bins;
    c.threshold = args.threshold;
    if let Some(e) = args.epochs {
        c.epochs = e;
    }
    if let Some(lr) = args.lr {
        c.learning_rate = lr;
    }
    match args.batch {
        Some(0) => c.batch_size = None,
        Some(b) => c.batch_size = Some(b),
        None => {}
    }
    match args.width {
        Some(0) => c.shape = ModelShape::Linear,
        Some(w) => c.shape = ModelShape::Hidden { width: w },
        None => {}
    }
    c.validate()?;
    Ok(c)
}

pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    let config = train_config(args)?;
    let lambdas = args.lambdas.clone().unwrap_or_else(|| DEFAULT_LAMBDAS.to_vec());
    let trace = sweep(&config, &lambdas)?;
    let text = match args.format {
        Format::Json => to_json(&trace)?,
        Format::Csv => {
            let mut buf = Vec::new();
            trace.write_csv(&mut buf)?;
            String::from_utf8_lossy(&buf).into_owned()
        }
    };
    emit(args.out.as_deref(), &text)
}

pub fn cmd_sample(args: &SampleArgs) -> Result<()> {
    let scm = match (&args.scenario, &args.scm) {
        (Some(name), _) => scenario(name)?,
        (None, Some(path)) => Scm::parse(&read_text(path)?)?,
        (None, None) => return Err(Error::Config("--scenario or --scm is required".into())),
    };
    let data = sample(&scm, args.n, args.seed)?;
    match &args.out {
        Some(p) => data.save_csv(p),
        None => data.write_csv(std::io::stdout().lock()),
    }
}

/// Apply `EXEMPT_AUDIT_THREADS` to the global thread pool.
pub fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| Error::Config(format!("{THREADS_VAR} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

/// Run a parsed command; returns the process exit code.
pub fn run(cli: &Cli) -> Result<i32> {
    configure_threads()?;
    match &cli.command {
        Command::Audit(a) => {
            let doc = cmd_audit(a)?;
            let text = match a.format {
                Format::Json => to_json(&doc)?,
                Format::Csv => report_csv(&doc)?,
            };
            emit(a.out.as_deref(), &text)?;
        }
        Command::Canonical(a) => {
            if !cmd_canonical(a)? {
                eprintln!("some verdicts differ from the expected ones");
                return Ok(3);
            }
        }
        Command::Pid(a) => {
            cmd_pid(a)?;
        }
        Command::Train(a) => cmd_train(a)?,
        Command::Sample(a) => cmd_sample(a)?,
        Command::Schema => print!("{SCHEMA}"),
    }
    Ok(0)
}

/// Parse `args` and run; errors are printed and mapped to exit codes.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
