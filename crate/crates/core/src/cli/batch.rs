//! `gdp batch <dir>`: runs every scenario in a directory in parallel and
//! compares the reports with goldens stored in `<dir>/golden`.

use super::execute;
use crate::error::{Error, Result};
use crate::report::render;
use crate::scenario::load_scenario;
use rayon::prelude::*;
use serde_json::{json, Map, Value};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Ok,
    Blessed,
    NoGolden,
    Mismatch,
    Inconsistent,
    Invalid,
}

impl Status {
    fn name(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Blessed => "blessed",
            Status::NoGolden => "no-golden",
            Status::Mismatch => "mismatch",
            Status::Inconsistent => "inconsistent",
            Status::Invalid => "invalid",
        }
    }
}

/// Per-field numeric tolerances of a golden file.
#[derive(Debug, Clone, Default)]
struct Tolerances {
    default: f64,
    fields: Map<String, Value>,
}

impl Tolerances {
    fn parse(v: Option<&Value>) -> Self {
        let Some(v) = v else { return Self::default() };
        Tolerances {
            default: v.get("default").and_then(Value::as_f64).unwrap_or(0.0),
            fields: v.get("fields").and_then(Value::as_object).cloned().unwrap_or_default(),
        }
    }

    fn exact(&self) -> bool {
        self.default == 0.0 && self.fields.values().all(|t| t.as_f64() == Some(0.0))
    }

    fn for_field(&self, key: Option<&str>) -> f64 {
        key.and_then(|k| self.fields.get(k)).and_then(Value::as_f64).unwrap_or(self.default)
    }
}

fn matches(got: &Value, want: &Value, tol: &Tolerances, key: Option<&str>) -> bool {
    match (got, want) {
        (Value::Number(a), Value::Number(b)) => {
            let (a, b) = (a.as_f64().unwrap(), b.as_f64().unwrap());
            (a - b).abs() <= tol.for_field(key) * (1.0 + b.abs())
        }
        (Value::Array(a), Value::Array(b)) => a.len() == b.len() && a.iter().zip(b).all(|(x, y)| matches(x, y, tol, key)),
        (Value::Object(a), Value::Object(b)) => {
            a.len() == b.len() && a.iter().all(|(k, x)| b.get(k).is_some_and(|y| matches(x, y, tol, Some(k))))
        }
        _ => got == want,
    }
}

fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let io = |e: std::io::Error| Error::Invalid(format!("{}: {e}", path.display()));
    let tmp = path.with_extension(format!("json.tmp{}", std::process::id()));
    fs::write(&tmp, text).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

fn scenario_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::Invalid(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

/// Runs all queries of one scenario file and builds its report.
fn report_for(path: &Path) -> (Value, Status) {
    let scenario = match load_scenario(path) {
        Ok(s) => s,
        Err(e) => return (json!({ "error": super::error_json(&e) }), Status::Invalid),
    };
    let mut inconsistent = false;
    let results: Vec<Value> = scenario
        .queries
        .iter()
        .map(|q| match execute(&scenario, q) {
            Ok(o) => {
                inconsistent |= o.exit == 4;
                json!({ "command": q.command(), "exit_code": o.exit, "report": o.report })
            }
            Err(e) => {
                inconsistent |= e.exit_code() == 4;
                json!({ "command": q.command(), "exit_code": e.exit_code(), "error": super::error_json(&e) })
            }
        })
        .collect();
    let report = json!({ "scenario": scenario.name, "results": results });
    (report, if inconsistent { Status::Inconsistent } else { Status::Ok })
}

fn process(path: &Path, out_dir: &Path, golden_dir: &Path, bless: bool) -> Result<(String, Status)> {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let (report, mut status) = report_for(path);
    let text = render(&report);
    write_atomic(&out_dir.join(format!("{stem}.json")), &format!("{text}\n"))?;
    if status == Status::Invalid {
        return Ok((stem, status));
    }
    let golden_path = golden_dir.join(format!("{stem}.json"));
    if bless {
        let mut tolerances = json!({ "default": 0.0, "fields": {} });
        if let Some(old) = fs::read_to_string(&golden_path).ok().and_then(|t| serde_json::from_str::<Value>(&t).ok()) {
            if let Some(t) = old.get("tolerances") {
                tolerances = t.clone();
            }
        }
        let golden = json!({ "tolerances": tolerances, "report": report });
        write_atomic(&golden_path, &format!("{}\n", render(&golden)))?;
        if status == Status::Ok {
            status = Status::Blessed;
        }
        return Ok((stem, status));
    }
    let Ok(golden_text) = fs::read_to_string(&golden_path) else {
        return Ok((stem, if status == Status::Ok { Status::NoGolden } else { status }));
    };
    let golden: Value =
        serde_json::from_str(&golden_text).map_err(|e| Error::Invalid(format!("{}: {e}", golden_path.display())))?;
    let tol = Tolerances::parse(golden.get("tolerances"));
    let want = golden.get("report").cloned().unwrap_or(Value::Null);
    let same = if tol.exact() { render(&want) == text } else { matches(&serde_json::from_str(&text).unwrap(), &want, &tol, None) };
    if !same {
        status = Status::Mismatch;
    }
    Ok((stem, status))
}

pub(super) fn run(dir: &Path, out: Option<&Path>, bless: bool, stdout: &mut dyn Write, _stderr: &mut dyn Write) -> Result<i32> {
    let files = scenario_files(dir)?;
    let out_dir = out.map(Path::to_path_buf).unwrap_or_else(|| dir.join("reports"));
    let golden_dir = dir.join("golden");
    let io = |p: &Path, e: std::io::Error| Error::Invalid(format!("{}: {e}", p.display()));
    fs::create_dir_all(&out_dir).map_err(|e| io(&out_dir, e))?;
    if bless {
        fs::create_dir_all(&golden_dir).map_err(|e| io(&golden_dir, e))?;
    }
    let results: Vec<Result<(String, Status)>> = files.par_iter().map(|p| process(p, &out_dir, &golden_dir, bless)).collect();
    let mut exit = 0;
    for r in results {
        let (stem, status) = r?;
        writeln!(stdout, "{}", json!({ "scenario": stem, "status": status.name() })).ok();
        exit = exit.max(match status {
            Status::Invalid => 2,
            Status::Mismatch | Status::Inconsistent => 4,
            _ => 0,
        });
    }
    Ok(exit)
}
