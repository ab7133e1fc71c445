//! `SRFIELD v1` binary field dumps.
//!
//! One ASCII header line
//!
//! ```text
//! SRFIELD v1 dim=<d> counts=<n0,...> mins=<...> maxs=<...> times=<t0,...> [key=value ...]
//! ```
//!
//! followed by little-endian `f64` values, one time slice after another,
//! each slice row-major with axis 0 slowest. Trailing `key=value` tokens
//! are optional metadata (for example `kind=qmin sentinel=2`); readers keep
//! them but do not interpret them.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};

const MAGIC: &str = "SRFIELD";
const VERSION: &str = "v1";

fn join(xs: impl IntoIterator<Item = String>) -> String {
    xs.into_iter().collect::<Vec<_>>().join(",")
}

fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Serializes `field` with optional metadata tokens.
pub fn write_field<W: Write>(mut out: W, field: &ScalarField, meta: &[(&str, String)]) -> Result<()> {
    let g = field.grid();
    let mut header = format!(
        "{MAGIC} {VERSION} dim={} counts={} mins={} maxs={} times={}",
        g.dim(),
        join(g.counts().iter().map(|c| c.to_string())),
        join(g.mins().into_iter().map(fmt_f64)),
        join(g.maxs().into_iter().map(fmt_f64)),
        join(field.times().iter().copied().map(fmt_f64)),
    );
    for (k, v) in meta {
        header.push_str(&format!(" {k}={v}"));
    }
    header.push('\n');
    out.write_all(header.as_bytes())?;
    let mut buf = Vec::with_capacity(g.len() * 8);
    for slice in field.slices() {
        buf.clear();
        for v in slice {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    Ok(())
}

pub fn save_field(path: &Path, field: &ScalarField, meta: &[(&str, String)]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let file = std::io::BufWriter::new(fs::File::create(path)?);
    write_field(file, field, meta)
}

/// A decoded dump: the field and any extra header metadata.
#[derive(Clone, Debug)]
pub struct FieldDump {
    pub field: ScalarField,
    pub meta: Vec<(String, String)>,
}

impl FieldDump {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|x| {
            x.parse()
                .map_err(|_| Error::Format(format!("bad value {x:?} in {key}")))
        })
        .collect()
}

pub fn read_field<R: Read>(input: R) -> Result<FieldDump> {
    let mut reader = BufReader::new(input);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let line = line
        .strip_suffix('\n')
        .ok_or_else(|| Error::Format("missing header line".into()))?;
    let mut tokens = line.split(' ');
    if tokens.next() != Some(MAGIC) || tokens.next() != Some(VERSION) {
        return Err(Error::Format(format!("not an {MAGIC} {VERSION} file")));
    }
    let (mut dim, mut counts, mut mins, mut maxs, mut times) = (None, None, None, None, None);
    let mut meta = Vec::new();
    for tok in tokens {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("bad header token {tok:?}")))?;
        match k {
            "dim" => dim = Some(parse_list::<usize>(k, v)?[0]),
            "counts" => counts = Some(parse_list::<usize>(k, v)?),
            "mins" => mins = Some(parse_list::<f64>(k, v)?),
            "maxs" => maxs = Some(parse_list::<f64>(k, v)?),
            "times" => times = Some(parse_list::<f64>(k, v)?),
            _ => meta.push((k.to_string(), v.to_string())),
        }
    }
    let missing = |name: &str| Error::Format(format!("header lacks {name}"));
    let dim = dim.ok_or_else(|| missing("dim"))?;
    let counts = counts.ok_or_else(|| missing("counts"))?;
    let mins = mins.ok_or_else(|| missing("mins"))?;
    let maxs = maxs.ok_or_else(|| missing("maxs"))?;
    let times = times.ok_or_else(|| missing("times"))?;
    if counts.len() != dim || mins.len() != dim || maxs.len() != dim {
        return Err(Error::Format("axis lists disagree with dim".into()));
    }
    let specs: Vec<_> = (0..dim).map(|i| (mins[i], maxs[i], counts[i])).collect();
    let grid = Grid::new(&specs)?;
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    let expected = grid.len() * times.len() * 8;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "payload has {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    let values: Vec<Vec<f64>> = bytes
        .chunks_exact(grid.len() * 8)
        .map(|slice| {
            slice
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                .collect()
        })
        .collect();
    Ok(FieldDump {
        field: ScalarField::new(grid, times, values)?,
        meta,
    })
}

pub fn load_field(path: &Path) -> Result<FieldDump> {
    read_field(fs::File::open(path)?)
}
