use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const OBS_SCHEMA: &str = "# cardassim observations v1";
pub const TRUTH_SCHEMA: &str = "# cardassim truth v1";

/// One observation time; absent blocks were not sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct ObsRow {
    pub time: f64,
    pub ecg: Option<Vec<f64>>,
    pub mech: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObservationTable {
    pub ecg_dim: usize,
    pub mech_dim: usize,
    pub rows: Vec<ObsRow>,
}

impl ObservationTable {
    pub fn row_at(&self, t: f64) -> Option<&ObsRow> {
        self.rows.iter().find(|r| (r.time - t).abs() <= 1e-9 * (1.0 + t.abs()))
    }

    /// Every recorded displacement with its time.
    pub fn mech_records(&self) -> Vec<(f64, Vec<f64>)> {
        self.rows.iter().filter_map(|r| r.mech.as_ref().map(|m| (r.time, m.clone()))).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{OBS_SCHEMA}\n");
        let head: Vec<String> = std::iter::once("time".to_string())
            .chain((0..self.ecg_dim).map(|i| format!("ecg.{i}")))
            .chain((0..self.mech_dim).map(|i| format!("mech.{i}")))
            .collect();
        let _ = writeln!(s, "{}", head.join(","));
        for r in &self.rows {
            let mut fields = vec![fmt(r.time)];
            block(&mut fields, r.ecg.as_deref(), self.ecg_dim);
            block(&mut fields, r.mech.as_deref(), self.mech_dim);
            let _ = writeln!(s, "{}", fields.join(","));
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let (head, body) = split_header(path, &text, OBS_SCHEMA)?;
        let ecg_dim = head.iter().filter(|h| h.starts_with("ecg.")).count();
        let mech_dim = head.iter().filter(|h| h.starts_with("mech.")).count();
        if head.len() != 1 + ecg_dim + mech_dim || head[0] != "time" {
            return Err(parse_err(path, "unexpected observation columns"));
        }
        let mut rows = Vec::new();
        for (k, line) in body {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != head.len() {
                return Err(parse_err(path, format!("line {k}: {} fields, expected {}", f.len(), head.len())));
            }
            let time = num(path, k, f[0])?;
            let ecg = opt_block(path, k, &f[1..1 + ecg_dim])?;
            let mech = opt_block(path, k, &f[1 + ecg_dim..])?;
            rows.push(ObsRow { time, ecg, mech });
        }
        Ok(ObservationTable { ecg_dim, mech_dim, rows })
    }
}

/// Truth state at every window end, `t = 0` included.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TruthTable {
    pub names: Vec<String>,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl TruthTable {
    pub fn column_range(&self, prefix: &str) -> std::ops::Range<usize> {
        let pre = format!("{prefix}.");
        let idx: Vec<usize> = (0..self.names.len()).filter(|&i| self.names[i].starts_with(&pre)).collect();
        match (idx.first(), idx.last()) {
            (Some(a), Some(b)) => *a..b + 1,
            _ => 0..0,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{TRUTH_SCHEMA}\n");
        let head: Vec<&str> = std::iter::once("time").chain(self.names.iter().map(|s| s.as_str())).collect();
        let _ = writeln!(s, "{}", head.join(","));
        for (t, v) in self.times.iter().zip(&self.values) {
            let fields: Vec<String> = std::iter::once(*t).chain(v.iter().cloned()).map(fmt).collect();
            let _ = writeln!(s, "{}", fields.join(","));
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let (head, body) = split_header(path, &text, TRUTH_SCHEMA)?;
        if head.first().map(|s| s.as_str()) != Some("time") {
            return Err(parse_err(path, "first column must be time"));
        }
        let mut out = TruthTable { names: head[1..].to_vec(), ..Default::default() };
        for (k, line) in body {
            let v = line.split(',').map(|f| num(path, k, f)).collect::<Result<Vec<_>>>()?;
            if v.len() != head.len() {
                return Err(parse_err(path, format!("line {k}: {} fields, expected {}", v.len(), head.len())));
            }
            out.times.push(v[0]);
            out.values.push(v[1..].to_vec());
        }
        Ok(out)
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt(v: f64) -> String {
    format!("{v:?}")
}

fn block(fields: &mut Vec<String>, b: Option<&[f64]>, dim: usize) {
    match b {
        Some(v) => fields.extend(v.iter().map(|x| fmt(*x))),
        None => fields.extend(std::iter::repeat_n(String::new(), dim)),
    }
}

pub(crate) fn parse_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.display().to_string(), msg: msg.into() }
}

fn num(path: &Path, line: usize, f: &str) -> Result<f64> {
    f.trim().parse::<f64>().map_err(|e| parse_err(path, format!("line {line}: `{f}`: {e}")))
}

fn opt_block(path: &Path, line: usize, f: &[&str]) -> Result<Option<Vec<f64>>> {
    if f.is_empty() || f.iter().all(|s| s.trim().is_empty()) {
        return Ok(None);
    }
    f.iter().map(|s| num(path, line, s)).collect::<Result<Vec<_>>>().map(Some)
}

/// Checks the schema line and returns the column names and numbered data lines.
pub(crate) fn split_header<'a>(
    path: &Path,
    text: &'a str,
    schema: &str,
) -> Result<(Vec<String>, Vec<(usize, &'a str)>)> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == schema => {}
        _ => return Err(parse_err(path, format!("missing schema line `{schema}`"))),
    }
    let head = lines
        .next()
        .map(|(_, l)| l.split(',').map(|s| s.trim().to_string()).collect())
        .ok_or_else(|| parse_err(path, "missing column header"))?;
    let body = lines.filter(|(_, l)| !l.trim().is_empty()).map(|(k, l)| (k + 1, l)).collect();
    Ok((head, body))
}
