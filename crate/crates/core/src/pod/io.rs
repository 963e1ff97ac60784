use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};

use super::{GramKind, PodBasis, SnapshotSet};
use crate::error::{Error, Result};

fn parse_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.display().to_string(), msg: msg.into() }
}

fn parse_row(path: &Path, line_no: usize, fields: &[&str]) -> Result<Vec<f64>> {
    fields
        .iter()
        .map(|f| f.trim().parse::<f64>().map_err(|e| parse_err(path, format!("line {line_no}: {e}"))))
        .collect()
}

fn join(values: impl Iterator<Item = f64>) -> String {
    values.map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",")
}

/// Singular values go next to the basis as `<stem>.sv.csv`.
pub fn sidecar_path(basis_path: &Path) -> PathBuf {
    let stem = basis_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    basis_path.with_file_name(format!("{stem}.sv.csv"))
}

/// Writes one row per state entry: the `r` mode values, then the gramian weight.
pub fn write_basis(path: &Path, b: &PodBasis) -> Result<()> {
    let mut s = format!("# pod rank={} gram={}\n", b.rank(), b.gram_kind.as_str());
    let head: Vec<String> = (1..=b.rank()).map(|k| format!("phi_{k}")).chain(["gram".into()]).collect();
    let _ = writeln!(s, "{}", head.join(","));
    for i in 0..b.dim() {
        let row = b.phi.row(i);
        let _ = writeln!(s, "{}", join(row.iter().cloned().chain([b.gram[i]])));
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))?;
    let mut sv = format!("# pod singular values rank={}{}\nindex,singular_value\n", b.rank(), if b.rank_deficient { " rank_deficient" } else { "" });
    for (k, v) in b.singular_values.iter().enumerate() {
        let _ = writeln!(sv, "{},{v:?}", k + 1);
    }
    let side = sidecar_path(path);
    fs::write(&side, sv).map_err(|e| Error::io(&side, e))
}

pub fn read_basis(path: &Path) -> Result<PodBasis> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| parse_err(path, "empty basis file"))?;
    let mut rank = None;
    let mut kind = None;
    for tok in header.trim_start_matches('#').split_whitespace() {
        if let Some(v) = tok.strip_prefix("rank=") {
            rank = Some(v.parse::<usize>().map_err(|e| parse_err(path, format!("rank: {e}")))?);
        } else if let Some(v) = tok.strip_prefix("gram=") {
            kind = Some(GramKind::parse(v)?);
        }
    }
    let (rank, kind) = match (rank, kind) {
        (Some(r), Some(k)) if header.starts_with("# pod") => (r, k),
        _ => return Err(parse_err(path, "missing `# pod rank=<r> gram=<g>` header")),
    };
    lines.next();
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != rank + 1 {
            return Err(parse_err(path, format!("line {}: expected {} fields", k + 3, rank + 1)));
        }
        rows.push(parse_row(path, k + 3, &fields)?);
    }
    let n = rows.len();
    let phi = DMatrix::from_fn(n, rank, |i, j| rows[i][j]);
    let gram = DVector::from_fn(n, |i, _| rows[i][rank]);

    let side = sidecar_path(path);
    let sv_text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let rank_deficient = sv_text.lines().next().is_some_and(|l| l.contains("rank_deficient"));
    let mut sv = Vec::new();
    for (k, line) in sv_text.lines().enumerate().skip(2) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 {
            return Err(parse_err(&side, format!("line {}: expected index,value", k + 1)));
        }
        sv.push(parse_row(&side, k + 1, &fields[1..])?[0]);
    }
    if sv.len() != rank {
        return Err(parse_err(&side, format!("expected {rank} singular values, found {}", sv.len())));
    }
    Ok(PodBasis { phi, gram, gram_kind: kind, singular_values: DVector::from_vec(sv), rank_deficient })
}

/// One snapshot per row: tag, then the state entries.
pub fn write_snapshots(path: &Path, set: &SnapshotSet) -> Result<()> {
    let mut s = format!("# snapshots count={} dim={}\n", set.len(), set.dim());
    for (c, tag) in set.columns.iter().zip(&set.tags) {
        let _ = writeln!(s, "{},{}", tag.replace(',', ";"), join(c.iter().cloned()));
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn read_snapshots(path: &Path) -> Result<SnapshotSet> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut set = SnapshotSet::default();
    for (k, line) in text.lines().enumerate() {
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let tag = fields.next().unwrap_or_default().to_string();
        let rest: Vec<&str> = fields.collect();
        let values = parse_row(path, k + 1, &rest)?;
        set.push(DVector::from_vec(values), tag)
            .map_err(|e| parse_err(path, format!("line {}: {e}", k + 1)))?;
    }
    if set.is_empty() {
        return Err(parse_err(path, "no snapshots"));
    }
    Ok(set)
}
