use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use super::pipeline::{RunResults, ScenarioResult, SeriesResult};
use crate::error::{Error, Result};
use crate::sarimax::FittedModel;
use crate::scenario::RecoveryPacePoint;
use crate::selection::SelectionReport;

/// Marks a directory as written by this tool, so reruns may replace it.
pub const OUTPUT_MARKER: &str = ".freightcast-output";

/// Rounds to 12 significant digits and prints the shortest decimal that
/// reads back as the rounded value.
pub fn fmt_num(v: f64) -> String {
    if !v.is_finite() {
        return String::new();
    }
    round12(v).to_string()
}

fn round12(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.11e}").parse().expect("formatted float parses")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

/// Applies [`round12`] to every number in a JSON tree.
fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if let Some(f) = n.as_f64().filter(|_| !n.is_i64() && !n.is_u64()) {
                *v = serde_json::Number::from_f64(round12(f)).map_or(Value::Null, Value::Number);
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_json),
        Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}

fn to_value<T: serde::Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("report types serialize")
}

pub fn save_model(model: &FittedModel, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(model).expect("model serializes");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<FittedModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        file: path.display().to_string(),
        row: e.line(),
        column: e.column().to_string(),
        message: e.to_string(),
    })
}

/// In-memory text files keyed by path relative to the output root.
#[derive(Debug, Default)]
pub struct OutputTree {
    pub files: Vec<(PathBuf, String)>,
}

impl OutputTree {
    fn add(&mut self, rel: impl Into<PathBuf>, text: String) {
        self.files.push((rel.into(), text));
    }

    pub fn get(&self, rel: &str) -> Option<&str> {
        self.files.iter().find(|(p, _)| p == Path::new(rel)).map(|(_, t)| t.as_str())
    }
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

fn selection_csv(report: &SelectionReport) -> String {
    csv_text(
        &[
            "rank", "order", "transform", "k", "aic", "ljung_box_p", "mape_1", "mad_1", "mape_12", "mad_12", "converged",
            "passes_gates", "error",
        ],
        report.entries.iter().enumerate().map(|(i, e)| {
            let m = e.metrics;
            vec![
                (i + 1).to_string(),
                format!("\"{}\"", e.order),
                e.order.transform.name().to_string(),
                e.k_params.to_string(),
                opt_num(e.aic),
                opt_num(e.ljung_box_p),
                opt_num(m.map(|m| m.mape_1)),
                opt_num(m.map(|m| m.mad_1)),
                opt_num(m.map(|m| m.mape_12)),
                opt_num(m.map(|m| m.mad_12)),
                e.converged.to_string(),
                e.passes_gates.to_string(),
                e.error.as_deref().map(|s| format!("\"{}\"", s.replace('"', "'"))).unwrap_or_default(),
            ]
        }),
    )
}

fn projection_csv(s: &ScenarioResult) -> String {
    let f = &s.outcome.baseline;
    csv_text(
        &["period", "actual", "median", "lower", "upper"],
        f.periods().enumerate().map(|(i, p)| {
            vec![
                p.to_string(),
                opt_num(s.actual.get(&p)),
                fmt_num(f.median[i]),
                fmt_num(f.lower[i]),
                fmt_num(f.upper[i]),
            ]
        }),
    )
}

fn impact_csv(s: &ScenarioResult) -> String {
    csv_text(
        &["period", "actual", "baseline", "ratio", "deviation"],
        s.outcome.impact.points.iter().map(|p| {
            vec![
                p.period.to_string(),
                fmt_num(p.actual),
                fmt_num(p.baseline),
                opt_num(p.ratio),
                opt_num(p.deviation),
            ]
        }),
    )
}

fn overlay_csv(s: &ScenarioResult) -> Option<String> {
    let overlay = s.overlay.as_ref()?;
    Some(csv_text(
        &["period", "freight_pct_change", "covariate_pct_change"],
        overlay
            .iter()
            .map(|(p, a, b)| vec![p.to_string(), fmt_num(*a), fmt_num(*b)]),
    ))
}

fn recovery_csv(points: &[RecoveryPacePoint]) -> String {
    csv_text(
        &["name", "x", "y", "region"],
        points
            .iter()
            .map(|p| vec![p.name.clone(), fmt_num(p.x), fmt_num(p.y), p.region.to_string()]),
    )
}

fn series_json(s: &SeriesResult) -> Value {
    let mut v = json!({
        "name": s.name,
        "order": s.order.map(|o| o.to_string()),
        "order_detail": s.order.map(|o| to_value(&o)),
    });
    if let Some(m) = &s.model {
        let params: Vec<Value> = m
            .param_names
            .iter()
            .zip(m.params.to_natural())
            .enumerate()
            .map(|(i, (name, value))| {
                json!({
                    "name": name,
                    "value": value,
                    "std_error": m.std_errors.as_ref().map(|se| se[i]),
                })
            })
            .collect();
        v["fit"] = json!({
            "training": { "from": m.endog.start().to_string(), "to": m.endog.end().to_string() },
            "parameters": params,
            "exog_p_values": m.exog_p_values,
            "aic": m.aic,
            "loglik": m.loglik,
            "k_params": m.k_params,
            "nobs_used": m.nobs_used,
            "converged": m.converged,
            "warnings": m.warnings,
        });
    }
    if let Some(f) = &s.fitness {
        v["fitness"] = to_value(f);
    }
    if let Some(sel) = &s.selection {
        v["selection"] = json!({
            "winner": sel.winner().order.to_string(),
            "recommended_d": sel.recommended_d,
            "adf": to_value(&sel.adf),
            "advisory": to_value(&sel.advisory),
            "candidates": sel.entries.len(),
            "warnings": sel.warnings,
        });
    }
    if let Some(d) = &s.diagnostics {
        v["diagnostics"] = to_value(d);
    }
    v
}

fn scenario_json(s: &ScenarioResult) -> Value {
    let o = &s.outcome;
    json!({
        "name": s.name,
        "series": s.series,
        "kind": o.spec.kind,
        "scenario": o.spec.kind.number(),
        "train": o.spec.train_window,
        "eval": o.spec.eval_window,
        "covariate": o.spec.covariate_name,
        "model": o.model.order.to_string(),
        "aic": o.model.aic,
        "exog_coefficients": o.model.params.beta,
        "exog_p_values": o.model.exog_p_values,
        "shared_fit_with": s.shared_with,
        "mean_deviation": mean(o.impact.points.iter().filter_map(|p| p.deviation)),
        "correlation": s.correlation,
    })
}

fn mean(it: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = it.collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Renders every artifact without touching the disk.
pub fn render_reports(results: &RunResults) -> OutputTree {
    let mut tree = OutputTree::default();
    let mut report = json!({
        "seed": results.seed,
        "stage": results.stage,
        "series": results.series.iter().map(series_json).collect::<Vec<_>>(),
        "scenarios": results.scenarios.iter().map(scenario_json).collect::<Vec<_>>(),
        "warnings": results.warnings,
    });
    if let Some(r) = &results.recovery {
        report["recovery_pace"] = json!({
            "disruption": r.disruption,
            "recovery": r.recovery,
            "points": to_value(&r.points),
            "best_fit_line": to_value(&r.line),
            "warnings": r.warnings,
        });
        tree.add("recovery_pace.csv", recovery_csv(&r.points));
    }
    round_json(&mut report);
    tree.add(
        "report.json",
        serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
    );
    for s in &results.series {
        if let Some(sel) = &s.selection {
            tree.add(format!("selection/{}.csv", s.name), selection_csv(sel));
        }
        if let Some(m) = &s.model {
            tree.add(
                format!("models/{}.json", s.name),
                serde_json::to_string_pretty(m).expect("model serializes") + "\n",
            );
        }
    }
    for s in &results.scenarios {
        tree.add(format!("scenarios/{}_projection.csv", s.name), projection_csv(s));
        tree.add(format!("scenarios/{}_impact.csv", s.name), impact_csv(s));
        if let Some(o) = overlay_csv(s) {
            tree.add(format!("scenarios/{}_covariate_overlay.csv", s.name), o);
        }
    }
    let mut index = String::new();
    for (p, _) in &tree.files {
        let _ = writeln!(index, "{}", p.display());
    }
    tree.add("MANIFEST", index);
    tree
}

fn is_replaceable(dir: &Path) -> Result<bool> {
    if !dir.exists() {
        return Ok(true);
    }
    if dir.join(OUTPUT_MARKER).is_file() {
        return Ok(true);
    }
    let mut entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    Ok(entries.next().is_none())
}

/// Writes the tree to a staging directory, then moves it into place. An
/// existing output directory is replaced only if it is empty or was
/// written by a previous run.
pub fn write_tree(tree: &OutputTree, out_dir: &Path) -> Result<()> {
    if !is_replaceable(out_dir)? {
        return Err(Error::Config(format!(
            "output directory {} exists and was not created by freightcast; refusing to overwrite",
            out_dir.display()
        )));
    }
    let name = out_dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let staging = out_dir.with_file_name(format!(".{name}.staging-{}", std::process::id()));
    if staging.exists() {
        std::fs::remove_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
    }
    let result = (|| {
        for (rel, text) in &tree.files {
            let path = staging.join(rel);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        let marker = staging.join(OUTPUT_MARKER);
        std::fs::write(&marker, "").map_err(|e| Error::io(&marker, e))?;
        if out_dir.exists() {
            std::fs::remove_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        }
        std::fs::rename(&staging, out_dir).map_err(|e| Error::io(out_dir, e))
    })();
    if result.is_err() && staging.exists() {
        let _ = std::fs::remove_dir_all(&staging);
    }
    result
}

pub fn write_reports(results: &RunResults, out_dir: &Path) -> Result<OutputTree> {
    let tree = render_reports(results);
    write_tree(&tree, out_dir)?;
    Ok(tree)
}
