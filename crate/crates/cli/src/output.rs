//! CSV and JSON artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value as Json};

use crate::config::{Format, RunConfig};
use crate::RunError;

pub const VERSION: &str = concat!("emergence ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Str(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Real(v) => v.to_string(),
            Cell::Str(v) => v.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn to_json(&self) -> Json {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Real(v) if v.is_finite() => json!(v),
            Cell::Real(v) => json!(v.to_string()),
            Cell::Str(v) => json!(v),
            Cell::Empty => Json::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Str(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Str(v.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Real)
    }
}

/// A rectangular result table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        Table { columns: columns.iter().map(|c| c.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }
}

/// What an experiment hands back: the main table, scalar results, and
/// optional extra tables written next to the main artifact.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub table: Table,
    pub summary: Map<String, Json>,
    pub extra: Vec<(String, Table)>,
}

fn config_json(cfg: &RunConfig) -> Json {
    let mut m = Map::new();
    m.insert("experiment".into(), json!(cfg.experiment));
    m.insert("replicas".into(), json!(cfg.replicas));
    m.insert("format".into(), json!(cfg.format.extension()));
    for (k, v) in &cfg.params {
        m.insert(k.clone(), v.to_json());
    }
    Json::Object(m)
}

fn table_json(t: &Table) -> Json {
    json!({
        "columns": t.columns,
        "rows": t.rows.iter().map(|r| r.iter().map(Cell::to_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
    })
}

/// Serialises `table` as CSV with a `#` comment preamble.
pub fn csv_bytes(cfg: &RunConfig, summary: &Map<String, Json>, table: &Table) -> Result<Vec<u8>, RunError> {
    let mut buf = Vec::new();
    buf.extend_from_slice(format!("# version: {VERSION}\n# seed: {}\n", cfg.seed).as_bytes());
    for (k, v) in cfg.echo() {
        buf.extend_from_slice(format!("# config.{k}: {v}\n").as_bytes());
    }
    for (k, v) in summary {
        buf.extend_from_slice(format!("# result.{k}: {v}\n").as_bytes());
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(buf);
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::render))?;
    }
    w.into_inner().map_err(|e| RunError::Io(e.into_error()))
}

pub fn json_bytes(cfg: &RunConfig, outcome: &Outcome) -> Result<Vec<u8>, RunError> {
    let mut results = Map::new();
    results.insert("summary".into(), Json::Object(outcome.summary.clone()));
    results.insert("table".into(), table_json(&outcome.table));
    for (name, t) in &outcome.extra {
        results.insert(name.clone(), table_json(t));
    }
    let doc = json!({
        "version": VERSION,
        "seed": cfg.seed,
        "config": config_json(cfg),
        "results": Json::Object(results),
    });
    let mut bytes = serde_json::to_vec_pretty(&doc)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Writes the run's artifacts under `cfg.out` and returns their paths.
pub fn write_outcome(cfg: &RunConfig, outcome: &Outcome) -> Result<Vec<PathBuf>, RunError> {
    fs::create_dir_all(&cfg.out)?;
    let path = |stem: &str, ext: &str| -> PathBuf { Path::new(&cfg.out).join(format!("{stem}.{ext}")) };
    let mut written = Vec::new();
    match cfg.format {
        Format::Csv => {
            let main = path(cfg.experiment, "csv");
            fs::write(&main, csv_bytes(cfg, &outcome.summary, &outcome.table)?)?;
            written.push(main);
            for (name, t) in &outcome.extra {
                let p = path(&format!("{}_{name}", cfg.experiment), "csv");
                fs::write(&p, csv_bytes(cfg, &Map::new(), t)?)?;
                written.push(p);
            }
        }
        Format::Json => {
            let main = path(cfg.experiment, "json");
            fs::write(&main, json_bytes(cfg, outcome)?)?;
            written.push(main);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn cfg() -> RunConfig {
        parse_config("experiment = cmj_alpha\nseed = 9\n", &[]).unwrap()
    }

    #[test]
    fn csv_has_preamble_header_and_lf() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![Cell::Real(0.5), Cell::Str("x,y".into())]);
        t.push(vec![Cell::Int(3), Cell::Empty]);
        let mut summary = Map::new();
        summary.insert("alpha".into(), json!(0.25));
        let text = String::from_utf8(csv_bytes(&cfg(), &summary, &t).unwrap()).unwrap();
        assert!(!text.contains('\r'));
        assert!(text.starts_with("# version: emergence "));
        assert!(text.contains("# seed: 9\n"));
        assert!(text.contains("# result.alpha: 0.25\n"));
        assert!(text.ends_with("a,b\n0.5,\"x,y\"\n3,\n"), "{text}");
    }

    #[test]
    fn json_document_shape() {
        let mut o = Outcome { table: Table::new(&["q"]), ..Default::default() };
        o.table.push(vec![Cell::Real(f64::NAN)]);
        let doc: Json = serde_json::from_slice(&json_bytes(&cfg(), &o).unwrap()).unwrap();
        assert_eq!(doc["seed"], json!(9));
        assert_eq!(doc["config"]["experiment"], json!("cmj_alpha"));
        assert_eq!(doc["results"]["table"]["rows"][0][0], json!("NaN"));
        assert!(doc["version"].as_str().unwrap().starts_with("emergence"));
    }
}
