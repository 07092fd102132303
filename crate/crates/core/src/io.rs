//! Text formats: distribution and relation CSVs, experiment tables, and JSON
//! with every float written to 17 significant digits.

use std::collections::HashMap;
use std::io;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fca::Relation;
use crate::mps::ExperimentRow;
use crate::qprob::{Alphabet, JointDistribution};

/// Largest allowed `|Σp − 1|` before a distribution file is rejected.
pub const CSV_SUM_TOLERANCE: f64 = 1e-9;

/// `{:.16e}`: 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

struct PreciseFormatter(serde_json::ser::PrettyFormatter<'static>);

impl serde_json::ser::Formatter for PreciseFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_float(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Pretty JSON with 17-digit floats and a trailing newline. Non-finite floats
/// become `null`.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut buf,
        PreciseFormatter(serde_json::ser::PrettyFormatter::with_indent(b"  ")),
    );
    value
        .serialize(&mut ser)
        .map_err(|e| Error::invalid(format!("serialization failed: {e}")))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

/// One symbol per nonblank line.
pub fn parse_ordering(text: &str) -> Result<Alphabet> {
    Alphabet::new(
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(String::from),
    )
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn check_header(rdr: &mut csv::Reader<&[u8]>, want: &[&str]) -> Result<()> {
    let header = rdr
        .headers()
        .map_err(|e| Error::parse(1, e.to_string()))?;
    if header.iter().ne(want.iter().copied()) {
        return Err(Error::parse(
            1,
            format!("expected header `{}`, found `{}`", want.join(","), header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    Ok(())
}

fn records(text: &str, header: &[&str]) -> Result<Vec<(usize, csv::StringRecord)>> {
    if text.trim().is_empty() {
        return Err(Error::parse(1, "empty input"));
    }
    let mut rdr = reader(text);
    check_header(&mut rdr, header)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        out.push((line, rec));
    }
    Ok(out)
}

fn resolve(order: Option<&Alphabet>, seen: &mut Vec<String>, symbol: &str, line: usize) -> Result<usize> {
    match order {
        Some(a) => a
            .index_of(symbol)
            .ok_or_else(|| Error::parse(line, format!("`{symbol}` is not in the ordering file"))),
        None => Ok(seen.iter().position(|s| s == symbol).unwrap_or_else(|| {
            seen.push(symbol.to_string());
            seen.len() - 1
        })),
    }
}

/// Reads `x,y,p`. Alphabets follow first appearance unless orderings are
/// given. Sums within [`CSV_SUM_TOLERANCE`] of 1 are renormalized exactly.
pub fn parse_distribution_csv(
    text: &str,
    x_order: Option<&Alphabet>,
    y_order: Option<&Alphabet>,
) -> Result<JointDistribution> {
    let rows = records(text, &["x", "y", "p"])?;
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(rows.len());
    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    for (line, rec) in &rows {
        let (x, y, p) = (&rec[0], &rec[1], &rec[2]);
        let p: f64 = p
            .parse()
            .map_err(|_| Error::parse(*line, format!("`{p}` is not a number")))?;
        if !p.is_finite() || p < 0.0 {
            return Err(Error::parse(*line, format!("probability {p} must be finite and nonnegative")));
        }
        let i = resolve(x_order, &mut xs, x, *line)?;
        let a = resolve(y_order, &mut ys, y, *line)?;
        if let Some(prev) = seen.insert((i, a), *line) {
            return Err(Error::parse(*line, format!("pair ({x},{y}) already given on line {prev}")));
        }
        entries.push((i, a, p));
    }
    let x_alphabet = x_order.cloned().map_or_else(|| Alphabet::new(xs), Ok)?;
    let y_alphabet = y_order.cloned().map_or_else(|| Alphabet::new(ys), Ok)?;
    let total: f64 = entries.iter().map(|e| e.2).sum();
    if (total - 1.0).abs() > CSV_SUM_TOLERANCE {
        return Err(Error::NotNormalized {
            what: "probability column sum",
            value: total,
        });
    }
    let ny = y_alphabet.len();
    let mut weights = vec![0.0; x_alphabet.len() * ny];
    for (i, a, p) in entries {
        weights[i * ny + a] = p;
    }
    JointDistribution::from_weights(x_alphabet, y_alphabet, weights)
}

/// Reads `x,y`, one related pair per row.
pub fn parse_relation_csv(text: &str) -> Result<Relation> {
    let rows = records(text, &["x", "y"])?;
    if rows.is_empty() {
        return Err(Error::invalid("relation file has no pairs"));
    }
    let pairs: Vec<(String, String)> = rows
        .iter()
        .map(|(_, r)| (r[0].to_string(), r[1].to_string()))
        .collect();
    Relation::from_pairs(&pairs)
}

pub const EXPERIMENT_HEADER: &str = "fraction,replica,seed,n_samples,bhattacharyya";

pub fn experiment_csv(rows: &[ExperimentRow]) -> String {
    let mut out = String::from(EXPERIMENT_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            format_float(r.fraction),
            r.replica,
            r.seed,
            r.n_samples,
            format_float(r.bhattacharyya)
        ));
    }
    out
}

pub fn parse_experiment_csv(text: &str) -> Result<Vec<ExperimentRow>> {
    let header: Vec<&str> = EXPERIMENT_HEADER.split(',').collect();
    records(text, &header)?
        .into_iter()
        .map(|(line, r)| {
            let bad = |field: &str| Error::parse(line, format!("bad {field}"));
            Ok(ExperimentRow {
                fraction: r[0].parse().map_err(|_| bad("fraction"))?,
                replica: r[1].parse().map_err(|_| bad("replica"))?,
                seed: r[2].parse().map_err(|_| bad("seed"))?,
                n_samples: r[3].parse().map_err(|_| bad("n_samples"))?,
                bhattacharyya: r[4].parse().map_err(|_| bad("bhattacharyya"))?,
            })
        })
        .collect()
}
