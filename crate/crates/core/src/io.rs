//! Model files.
//!
//! Dense text format (`relmor-dense`, version 1):
//!
//! ```text
//! # name: <free text>        optional metadata, comment lines start with '#'
//! # source: <free text>
//! n m
//! <n rows of A, n numbers each>
//! <n rows of B, m numbers each>
//! <m rows of C, n numbers each>
//! <m rows of D, m numbers each>
//! ```
//!
//! Sparse manifest format (`relmor-sparse`, version 1): a text file with one
//! `key value` pair per line,
//!
//! ```text
//! relmor-sparse 1
//! n 348
//! m 1
//! A A.mtx
//! B B.mtx
//! C C.mtx
//! D D.mtx          optional, zero if absent
//! name beam        optional
//! ```
//!
//! Matrix paths are relative to the manifest. Each matrix file holds 1-based
//! `row col value` triplets, one per line; Matrix Market coordinate files
//! (`%%MatrixMarket matrix coordinate real general|symmetric`) are accepted.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{MorError, Result};
use crate::linalg::Matrix;
use crate::ss::StateSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelFormat {
    Dense,
    SparseManifest,
}

impl ModelFormat {
    /// A file whose first non-comment line starts with `relmor-sparse` is a
    /// manifest; anything else is read as dense text.
    pub fn detect(path: &Path) -> Result<Self> {
        let text = read(path)?;
        let first = text
            .lines()
            .map(str::trim)
            .find(|l| !l.is_empty() && !l.starts_with('#'));
        Ok(match first {
            Some(l) if l.starts_with("relmor-sparse") => ModelFormat::SparseManifest,
            _ => ModelFormat::Dense,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub name: Option<String>,
    pub source: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ModelFile {
    pub format: ModelFormat,
    pub sys: StateSpace,
    pub meta: ModelMeta,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| MorError::Io(format!("{}: {e}", path.display())))
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> MorError {
    MorError::Parse {
        line,
        msg: format!("{}: {}", path.display(), msg.into()),
    }
}

fn parse_number(path: &Path, line: usize, tok: &str) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(path, line, format!("not a number: {tok:?}")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(parse_err(path, line, format!("non-finite entry {tok:?}")))
    }
}

pub fn load_model(path: &Path, format: Option<ModelFormat>) -> Result<ModelFile> {
    let format = match format {
        Some(f) => f,
        None => ModelFormat::detect(path)?,
    };
    match format {
        ModelFormat::Dense => load_dense(path),
        ModelFormat::SparseManifest => load_manifest(path),
    }
}

fn load_dense(path: &Path) -> Result<ModelFile> {
    let text = read(path)?;
    let mut meta = ModelMeta::default();
    let mut rows: Vec<(usize, Vec<&str>)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let l = raw.trim();
        if l.is_empty() {
            continue;
        }
        if let Some(c) = l.strip_prefix('#') {
            let c = c.trim();
            if let Some(v) = c.strip_prefix("name:") {
                meta.name = Some(v.trim().to_string());
            } else if let Some(v) = c.strip_prefix("source:") {
                meta.source = Some(v.trim().to_string());
            }
            continue;
        }
        rows.push((i + 1, l.split_whitespace().collect()));
    }
    let Some((hline, header)) = rows.first() else {
        return Err(parse_err(path, 1, "missing \"n m\" header"));
    };
    if header.len() != 2 {
        return Err(parse_err(path, *hline, "header must be \"n m\""));
    }
    let dim = |t: &str| {
        t.parse::<usize>()
            .map_err(|_| parse_err(path, *hline, format!("bad dimension {t:?}")))
    };
    let (n, m) = (dim(header[0])?, dim(header[1])?);
    if m == 0 {
        return Err(parse_err(path, *hline, "m must be positive"));
    }
    let expected = 2 * n + 2 * m;
    let body = &rows[1..];
    if body.len() != expected {
        let line = body.last().map_or(*hline, |r| r.0);
        return Err(parse_err(
            path,
            line,
            format!("expected {expected} matrix rows for n={n}, m={m}, found {}", body.len()),
        ));
    }
    let take = |start: usize, nr: usize, nc: usize, name: &str| -> Result<Matrix> {
        let mut out = Matrix::zeros(nr, nc);
        for i in 0..nr {
            let (line, toks) = &body[start + i];
            if toks.len() != nc {
                return Err(parse_err(
                    path,
                    *line,
                    format!("{name} row {} has {} entries, expected {nc}", i + 1, toks.len()),
                ));
            }
            for (j, t) in toks.iter().enumerate() {
                out[(i, j)] = parse_number(path, *line, t)?;
            }
        }
        Ok(out)
    };
    let a = take(0, n, n, "A")?;
    let b = take(n, n, m, "B")?;
    let c = take(2 * n, m, n, "C")?;
    let d = take(2 * n + m, m, m, "D")?;
    Ok(ModelFile {
        format: ModelFormat::Dense,
        sys: StateSpace::new(a, b, c, d)?,
        meta,
    })
}

fn load_manifest(path: &Path) -> Result<ModelFile> {
    let text = read(path)?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut kv: BTreeMap<String, (usize, String)> = BTreeMap::new();
    let mut seen_tag = false;
    for (i, raw) in text.lines().enumerate() {
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let (k, v) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
        if !seen_tag {
            if k != "relmor-sparse" || v.trim() != "1" {
                return Err(parse_err(path, i + 1, "expected \"relmor-sparse 1\""));
            }
            seen_tag = true;
            continue;
        }
        kv.insert(k.to_string(), (i + 1, v.trim().to_string()));
    }
    if !seen_tag {
        return Err(parse_err(path, 1, "empty manifest"));
    }
    let dim = |key: &str| -> Result<usize> {
        let (line, v) = kv
            .get(key)
            .ok_or_else(|| parse_err(path, 0, format!("missing key {key:?}")))?;
        v.parse()
            .map_err(|_| parse_err(path, *line, format!("bad {key}: {v:?}")))
    };
    let (n, m) = (dim("n")?, dim("m")?);
    let mat = |key: &str, nr: usize, nc: usize, required: bool| -> Result<Matrix> {
        match kv.get(key) {
            Some((_, file)) => load_triplets(&dir.join(file), nr, nc),
            None if !required => Ok(Matrix::zeros(nr, nc)),
            None => Err(parse_err(path, 0, format!("missing key {key:?}"))),
        }
    };
    let sys = StateSpace::new(
        mat("A", n, n, true)?,
        mat("B", n, m, true)?,
        mat("C", m, n, true)?,
        mat("D", m, m, false)?,
    )?;
    Ok(ModelFile {
        format: ModelFormat::SparseManifest,
        sys,
        meta: ModelMeta {
            name: kv.get("name").map(|v| v.1.clone()),
            source: kv.get("source").map(|v| v.1.clone()),
        },
    })
}

fn load_triplets(path: &Path, nr: usize, nc: usize) -> Result<Matrix> {
    if !path.exists() {
        return Err(MorError::Io(format!("{}: referenced matrix file not found", path.display())));
    }
    let text = read(path)?;
    let mut out = Matrix::zeros(nr, nc);
    let mut symmetric = false;
    let mut mm_size_pending = false;
    for (i, raw) in text.lines().enumerate() {
        let l = raw.trim();
        if let Some(h) = l.strip_prefix("%%MatrixMarket") {
            let h = h.to_ascii_lowercase();
            if !h.contains("coordinate") || h.contains("complex") || h.contains("pattern") {
                return Err(parse_err(path, i + 1, "only real coordinate Matrix Market files are supported"));
            }
            symmetric = h.contains("symmetric");
            mm_size_pending = true;
            continue;
        }
        if l.is_empty() || l.starts_with('%') || l.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = l.split_whitespace().collect();
        if mm_size_pending {
            mm_size_pending = false;
            let rows: usize = toks.first().and_then(|t| t.parse().ok()).unwrap_or(usize::MAX);
            let cols: usize = toks.get(1).and_then(|t| t.parse().ok()).unwrap_or(usize::MAX);
            if rows != nr || cols != nc {
                return Err(parse_err(
                    path,
                    i + 1,
                    format!("size line says {}, expected {nr}x{nc}", toks.join("x")),
                ));
            }
            continue;
        }
        if toks.len() != 3 {
            return Err(parse_err(path, i + 1, "expected \"row col value\""));
        }
        let idx = |t: &str, hi: usize| -> Result<usize> {
            match t.parse::<usize>() {
                Ok(k) if (1..=hi).contains(&k) => Ok(k - 1),
                _ => Err(parse_err(path, i + 1, format!("index {t:?} outside 1..={hi}"))),
            }
        };
        let (r, c) = (idx(toks[0], nr)?, idx(toks[1], nc)?);
        let v = parse_number(path, i + 1, toks[2])?;
        out[(r, c)] += v;
        if symmetric && r != c {
            out[(c, r)] += v;
        }
    }
    Ok(out)
}

/// Canonical dense text for a model; loading and re-saving reproduces it byte for byte.
pub fn to_dense_text(sys: &StateSpace, meta: &ModelMeta) -> String {
    let mut s = String::new();
    if let Some(n) = &meta.name {
        let _ = writeln!(s, "# name: {}", n.replace('\n', " "));
    }
    if let Some(src) = &meta.source {
        let _ = writeln!(s, "# source: {}", src.replace('\n', " "));
    }
    let _ = writeln!(s, "{} {}", sys.n(), sys.m());
    for mat in [sys.a(), sys.b(), sys.c(), sys.d()] {
        for i in 0..mat.nrows() {
            let row: Vec<String> = (0..mat.ncols()).map(|j| format!("{:e}", mat[(i, j)])).collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
    }
    s
}

pub fn save_model(path: &Path, sys: &StateSpace, meta: &ModelMeta) -> Result<()> {
    fs::write(path, to_dense_text(sys, meta)).map_err(|e| MorError::Io(format!("{}: {e}", path.display())))
}

/// Writes `sys` as a sparse manifest plus one triplet file per matrix next to it.
pub fn save_manifest(path: &Path, sys: &StateSpace, meta: &ModelMeta) -> Result<Vec<PathBuf>> {
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".into());
    let mut manifest = format!("relmor-sparse 1\nn {}\nm {}\n", sys.n(), sys.m());
    let mut written = Vec::new();
    for (key, mat) in [("A", sys.a()), ("B", sys.b()), ("C", sys.c()), ("D", sys.d())] {
        let file = format!("{stem}.{key}.txt");
        let mut body = String::new();
        for j in 0..mat.ncols() {
            for i in 0..mat.nrows() {
                let v = mat[(i, j)];
                if v != 0.0 {
                    let _ = writeln!(body, "{} {} {:e}", i + 1, j + 1, v);
                }
            }
        }
        let p = dir.join(&file);
        fs::write(&p, body).map_err(|e| MorError::Io(format!("{}: {e}", p.display())))?;
        written.push(p);
        let _ = writeln!(manifest, "{key} {file}");
    }
    if let Some(n) = &meta.name {
        let _ = writeln!(manifest, "name {n}");
    }
    if let Some(src) = &meta.source {
        let _ = writeln!(manifest, "source {src}");
    }
    fs::write(path, manifest).map_err(|e| MorError::Io(format!("{}: {e}", path.display())))?;
    written.push(path.to_path_buf());
    Ok(written)
}
