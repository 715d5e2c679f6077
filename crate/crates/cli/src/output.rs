use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

/// Rounds to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

pub fn fmt_num(x: f64) -> String {
    let r = sig12(x);
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

/// Rounds every float in `v` and drops timing fields so data files stay
/// byte-identical across runs.
pub fn normalize(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = sig12(n.as_f64().unwrap_or(f64::NAN));
            serde_json::Number::from_f64(if x == 0.0 { 0.0 } else { x })
                .map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(normalize).collect()),
        Value::Object(m) => Value::Object(
            m.into_iter()
                .filter(|(k, _)| k != "wall_time")
                .map(|(k, v)| (k, normalize(v)))
                .collect::<Map<_, _>>(),
        ),
        other => other,
    }
}

pub fn to_json<T: Serialize>(data: &T) -> Result<String, String> {
    let v = serde_json::to_value(data).map_err(|e| e.to_string())?;
    let mut s = serde_json::to_string_pretty(&normalize(v)).map_err(|e| e.to_string())?;
    s.push('\n');
    Ok(s)
}

pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => fmt_num(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

pub fn to_csv(header: &[&str], rows: &[Vec<Cell>]) -> Result<String, String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| e.to_string())?;
    for row in rows {
        w.write_record(row.iter().map(Cell::render))
            .map_err(|e| e.to_string())?;
    }
    let bytes = w.into_inner().map_err(|e| e.to_string())?;
    String::from_utf8(bytes).map_err(|e| e.to_string())
}

/// Writes `text` to `path`, or to stdout when there is no path.
pub fn emit(path: Option<&Path>, text: &str) -> Result<Option<PathBuf>, String> {
    match path {
        Some(p) => {
            fs::write(p, text).map_err(|e| format!("cannot write {}: {e}", p.display()))?;
            Ok(Some(p.to_path_buf()))
        }
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| e.to_string())?;
            Ok(None)
        }
    }
}

/// `<path>.<suffix>`, keeping the original extension.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

#[derive(Serialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub subcommand: String,
    pub config: Value,
    pub seed: u64,
    pub version: String,
    pub parallel: bool,
    pub threads: Option<usize>,
    pub wall_time_seconds: f64,
    pub outputs: Vec<String>,
}
