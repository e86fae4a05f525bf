//! Command implementations behind the `hdlss` binary.
//!
//! Every command computes its artifacts in memory first and writes them only
//! once everything succeeded, so a failing run leaves no partial output.

pub mod config;
mod table;

use std::path::{Path, PathBuf};

use hdlss_core::asymptotics::{
    classify, block_regime, predict_eigenvalue_limits, EigenvalueLimit, BlockRegime, LimitLaw,
    RegimeVerdict, SpikeStructure,
};
use hdlss_core::harness::{run_experiment_with, verify_prediction, AggregateReport};
use hdlss_core::spectra::{condition_check, eigenvalues, sphericity, Family};
use serde::Serialize;
use serde_json::json;

use config::{Format, RunConfig};
use table::Table;

/// Schema version stamped into every JSON artifact.
pub const SPEC_VERSION: &str = "1.0";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] hdlss_core::Error),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use hdlss_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 5,
            CliError::Core(e) => match e {
                E::UnsupportedStructure(_) | E::BoundaryUnsupported(_) => 3,
                E::ExcessiveFailures { .. } | E::RankDeficient { .. } => 4,
                E::Io(_) | E::Csv(_) => 5,
                _ => 2,
            },
        }
    }
}

/// Result of a command: files to write, an optional summary table, and
/// whether every check passed.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<(String, Vec<u8>)>,
    pub table: Option<String>,
    pub passed: bool,
}

impl Outcome {
    fn add_json<T: Serialize>(&mut self, name: &str, value: &T) {
        let mut bytes = serde_json::to_vec_pretty(value).expect("artifacts serialize");
        bytes.push(b'\n');
        self.files.push((name.into(), bytes));
    }

    /// Writes the selected artifacts into `dir` and returns the stdout text.
    pub fn write(&self, dir: &Path, formats: &[Format]) -> Result<Option<String>, CliError> {
        let wanted = |name: &str| {
            let ext = Path::new(name).extension().and_then(|e| e.to_str()).unwrap_or("");
            formats.iter().any(|f| match f {
                Format::Csv => ext == "csv",
                Format::Json => ext == "json",
                Format::Text => false,
            })
        };
        if self.files.iter().any(|(n, _)| wanted(n)) {
            std::fs::create_dir_all(dir)
                .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
            for (name, bytes) in self.files.iter().filter(|(n, _)| wanted(n)) {
                let path = dir.join(name);
                std::fs::write(&path, bytes)
                    .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            }
        }
        Ok(formats
            .contains(&Format::Text)
            .then(|| self.table.clone())
            .flatten())
    }
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

pub fn cmd_spectrum(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (grid, spec) = cfg.spectrum_settings()?;
    let mut verdicts = Vec::new();
    for &k in &spec.k {
        verdicts.push(condition_check(&cfg.model, k, &grid).map_err(config_error)?);
    }
    let mut sph_rows = Vec::new();
    let mut eig_rows = Vec::new();
    let mut table = Table::new(&["d", "k", "epsilon_k", "d_epsilon_k", "sqrtd_epsilon_k"]);
    for &d in &grid {
        let spectrum = eigenvalues(&cfg.model, d).map_err(config_error)?;
        for (i, lambda) in spectrum.iter().take(spec.top).enumerate() {
            eig_rows.push(vec![d.to_string(), (i + 1).to_string(), lambda.to_string()]);
        }
        for &k in &spec.k {
            let s = sphericity(&spectrum, k).map_err(config_error)?;
            let row = vec![
                d.to_string(),
                k.to_string(),
                s.epsilon_k.to_string(),
                s.d_epsilon_k.to_string(),
                s.sqrtd_epsilon_k.to_string(),
            ];
            table.row(vec![
                d.to_string(),
                k.to_string(),
                format!("{:.6}", s.epsilon_k),
                format!("{:.4}", s.d_epsilon_k),
                format!("{:.4}", s.sqrtd_epsilon_k),
            ]);
            sph_rows.push(row);
        }
    }
    let mut text = table.render();
    for v in &verdicts {
        let strong = match v.strong_index {
            Some(l) => format!("{:?} (l = {l})", v.strong_epsilon_condition),
            None => format!("{:?}", v.strong_epsilon_condition),
        };
        text.push_str(&format!(
            "\nk = {}: epsilon-condition {:?}, strong epsilon-condition {}, basis {:?}",
            v.k, v.epsilon_condition, strong, v.basis
        ));
    }
    text.push('\n');
    let mut out = Outcome {
        passed: true,
        table: Some(text),
        ..Outcome::default()
    };
    out.files.push((
        "spectrum.csv".into(),
        csv_bytes(&["d", "k", "epsilon_k", "d_epsilon_k", "sqrtd_epsilon_k"], &sph_rows)?,
    ));
    out.files.push(("eigenvalues.csv".into(), csv_bytes(&["d", "i", "lambda"], &eig_rows)?));
    out.add_json(
        "condition.json",
        &json!({
            "spec_version": SPEC_VERSION,
            "model": cfg.model,
            "d_grid": grid,
            "verdicts": verdicts,
        }),
    );
    Ok(out)
}

/// Errors in the model/grid a user supplied are configuration errors.
fn config_error(e: hdlss_core::Error) -> CliError {
    match e {
        hdlss_core::Error::UnsupportedStructure(_) | hdlss_core::Error::BoundaryUnsupported(_) => {
            CliError::Core(e)
        }
        other => CliError::Config(other.to_string()),
    }
}

/// Spike structure, verdict and limit laws for the configured model.
pub fn predictions(cfg: &RunConfig) -> Result<(SpikeStructure, RegimeVerdict, Vec<EigenvalueLimit>), CliError> {
    let n = cfg.n_grid()?[0];
    let structure = SpikeStructure::from_model(&cfg.model, n, cfg.z_assumption())?;
    let verdict = classify(&structure)?;
    let limits = predict_eigenvalue_limits(&structure, cfg.noise.is_gaussian());
    Ok((structure, verdict, limits))
}

/// Regime of a two-block model read from its correlation rules.
pub fn block_case(cfg: &RunConfig) -> Result<Option<BlockRegime>, CliError> {
    match cfg.model.family() {
        Family::BlockEquicorrelation(p) => Ok(Some(block_regime(&p.rho1, &p.rho2)?)),
        _ => Ok(None),
    }
}

pub fn describe_law(law: &LimitLaw) -> String {
    match law {
        LimitLaw::ChiSqOverN { scale, dof, n } => format!("{scale} * chi2_{dof}/{n}"),
        LimitLaw::ScaledWishartEigen {
            order,
            scales,
            dof,
            n,
            gaussian,
            ..
        } => {
            let diag: Vec<String> = scales.iter().map(|c| c.to_string()).collect();
            let name = if *gaussian { "W" } else { "ZZ'" };
            format!("phi_{order}({name}_{}({dof}, diag({}))/{n})", scales.len(), diag.join(", "))
        }
        LimitLaw::TailConstant { k } => format!("K = {k}"),
    }
}

pub fn cmd_classify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (structure, verdict, limits) = predictions(cfg)?;
    let case = block_case(cfg)?;
    if let Some(c) = case {
        if BlockRegime::from_verdict(&verdict) != Some(c) {
            return Err(CliError::Core(hdlss_core::Error::UnsupportedStructure(format!(
                "classifier and block-regime table disagree (table says case {})",
                c.number()
            ))));
        }
    }
    let mut table = Table::new(&["i", "verdict", "group", "limit", "exponent", "mode"]);
    let mut rows = Vec::new();
    let mode = serde_json::to_value(verdict.mode).expect("mode serializes");
    let mode = mode.as_str().unwrap_or_default().to_string();
    for (dir, limit) in verdict.directions.iter().zip(&limits) {
        let label = serde_json::to_value(dir.verdict).expect("verdict serializes");
        let label = label.as_str().unwrap_or_default().to_string();
        let group = dir
            .group
            .as_ref()
            .map(|g| g.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(" "))
            .unwrap_or_default();
        let growing = if dir.growing_n.is_some() { "consistent" } else { "" };
        table.row(vec![
            dir.i.to_string(),
            label.clone(),
            group.clone(),
            describe_law(&limit.law),
            limit.exponent.to_string(),
            mode.clone(),
        ]);
        rows.push(vec![
            dir.i.to_string(),
            label,
            group,
            growing.to_string(),
            describe_law(&limit.law),
            limit.exponent.to_string(),
        ]);
    }
    let mut text = table.render();
    if let Some(c) = case {
        text.push_str(&format!("\nblock regime: case {}", c.number()));
    }
    text.push('\n');
    let mut out = Outcome {
        passed: true,
        table: Some(text),
        ..Outcome::default()
    };
    out.files.push((
        "regime.csv".into(),
        csv_bytes(&["i", "verdict", "group", "growing_n", "limit", "exponent"], &rows)?,
    ));
    let mut doc = json!({
        "spec_version": SPEC_VERSION,
        "model": cfg.model,
        "n": structure.n(),
        "kappa": structure.kappa(),
        "structure": structure,
        "directions": verdict.directions,
        "mode": verdict.mode,
        "limits": limits,
    });
    if let Some(c) = case {
        doc["block_case"] = json!(c.number());
    }
    out.add_json("classify.json", &doc);
    Ok(out)
}

fn report_files(out: &mut Outcome, plan: &impl Serialize, report: &AggregateReport) -> Result<(), CliError> {
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    out.files.push(("report.csv".into(), csv));
    out.add_json(
        "report.json",
        &json!({ "spec_version": SPEC_VERSION, "plan": plan, "report": report }),
    );
    Ok(())
}

fn progress(cmd: &'static str) -> impl Fn(usize, usize) {
    move |n, d| eprintln!("{cmd}: finished n = {n}, d = {d}")
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let plan = cfg.experiment_plan()?;
    let report = run_experiment_with(&plan, progress("simulate"))?;
    let mut table = Table::new(&["n", "d", "metric", "median", "mean", "sd", "n_rep", "failures"]);
    for c in &report.cells {
        table.row(vec![
            c.n.to_string(),
            c.d.to_string(),
            c.metric.clone(),
            format!("{:.5}", c.q50),
            format!("{:.5}", c.mean),
            format!("{:.5}", c.sd),
            c.n_rep.to_string(),
            c.failures.to_string(),
        ]);
    }
    let mut out = Outcome {
        passed: true,
        table: Some(table.render() + "\n"),
        ..Outcome::default()
    };
    report_files(&mut out, &plan, &report)?;
    Ok(out)
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let plan = cfg.experiment_plan()?;
    let (_, verdict, limits) = predictions(cfg)?;
    eprintln!("verify: simulating {} replicates per grid point", plan.replicates);
    let (report, verification) = verify_prediction(&plan, &verdict, &limits)?;
    let mut table = Table::new(&["check", "metric", "i", "result", "detail"]);
    for c in &verification.checks {
        table.row(vec![
            c.kind.clone(),
            c.metric.clone(),
            c.direction.map(|i| i.to_string()).unwrap_or_default(),
            if c.passed { "pass" } else { "FAIL" }.into(),
            c.detail.clone(),
        ]);
    }
    let summary = if verification.passed { "all checks passed" } else { "verification FAILED" };
    let mut out = Outcome {
        passed: verification.passed,
        table: Some(format!("{}\n{summary}\n", table.render())),
        ..Outcome::default()
    };
    report_files(&mut out, &plan, &report)?;
    out.add_json(
        "verify.json",
        &json!({
            "spec_version": SPEC_VERSION,
            "passed": verification.passed,
            "directions": verdict.directions,
            "mode": verdict.mode,
            "checks": verification.checks,
        }),
    );
    Ok(out)
}

/// Output directory: command line, then config, then `out`.
pub fn output_dir(cli: Option<&Path>, cfg: &RunConfig) -> PathBuf {
    cli.map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}
