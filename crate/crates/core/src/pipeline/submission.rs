//! Tab-separated submission files and their gold counterparts.
//!
//! Task 1: `id, bin_maj, bin_one, bin_all, multi_maj, disagree_bin`, one
//! category per cell. Gold files may hold ambiguous cells written `a|b`.
//! Task 2: `id, dist_bin_0, dist_bin_1, dist_multi_0 .. dist_multi_4`, six
//! decimal places.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use crate::aggregate::{LabelDistribution, Target, ValidLabelSet};
use crate::error::{Error, Result};
use crate::metrics::{DistributionRow, Subtask1Gold, Subtask1Predictions};

pub const TASK1_HEADER: [&str; 6] = ["id", "bin_maj", "bin_one", "bin_all", "multi_maj", "disagree_bin"];
pub const TASK2_HEADER: [&str; 8] = [
    "id",
    "dist_bin_0",
    "dist_bin_1",
    "dist_multi_0",
    "dist_multi_1",
    "dist_multi_2",
    "dist_multi_3",
    "dist_multi_4",
];

/// Rounded six-decimal cells may miss a unit sum by a few millionths. Rows
/// off by more than `1e-6` are rescaled to sum to one.
const PARSED_SUM_TOLERANCE: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub enum Submission {
    Task1(Subtask1Predictions),
    Task2(Vec<DistributionRow>),
}

impl Submission {
    pub fn task(&self) -> u8 {
        match self {
            Submission::Task1(_) => 1,
            Submission::Task2(_) => 2,
        }
    }
}

fn target_columns<'a, T>(ids: &[String], targets: &'a BTreeMap<Target, Vec<T>>) -> Result<Vec<&'a [T]>> {
    Target::ALL
        .iter()
        .map(|t| {
            let col = targets.get(t).ok_or_else(|| Error::MissingTarget(t.name().into()))?;
            if col.len() != ids.len() {
                let missing = ids.get(col.len()).cloned().unwrap_or_default();
                return Err(Error::IdMismatch(format!(
                    "target {} has {} rows for {} comments (first unmatched {missing:?})",
                    t.name(),
                    col.len(),
                    ids.len()
                )));
            }
            Ok(col.as_slice())
        })
        .collect()
}

pub fn write_task1<W: Write>(mut w: W, p: &Subtask1Predictions) -> Result<()> {
    let cols = target_columns(&p.ids, &p.targets)?;
    writeln!(w, "{}", TASK1_HEADER.join("\t"))?;
    for (i, id) in p.ids.iter().enumerate() {
        write!(w, "{id}")?;
        for col in &cols {
            write!(w, "\t{}", col[i])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_task1_gold<W: Write>(mut w: W, g: &Subtask1Gold) -> Result<()> {
    let cols = target_columns(&g.ids, &g.targets)?;
    writeln!(w, "{}", TASK1_HEADER.join("\t"))?;
    for (i, id) in g.ids.iter().enumerate() {
        write!(w, "{id}")?;
        for col in &cols {
            write!(w, "\t{}", col[i])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_task2<W: Write>(mut w: W, rows: &[DistributionRow]) -> Result<()> {
    writeln!(w, "{}", TASK2_HEADER.join("\t"))?;
    for row in rows {
        if row.binary.len() != 2 || row.multi.len() != 5 {
            return Err(Error::ShapeMismatch(format!("distribution row {:?} has the wrong width", row.id)));
        }
        write!(w, "{}", row.id)?;
        for p in row.binary.probs().iter().chain(row.multi.probs()) {
            write!(w, "\t{p:.6}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_submission<W: Write>(w: W, s: &Submission) -> Result<()> {
    match s {
        Submission::Task1(p) => write_task1(w, p),
        Submission::Task2(rows) => write_task2(w, rows),
    }
}

/// Writes a submission file; row order follows the predictions.
pub fn export_submission(s: &Submission, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(Error::file(path))?;
    let mut w = BufWriter::new(file);
    write_submission(&mut w, s)?;
    w.flush().map_err(Error::file(path))
}

fn rows<R: BufRead>(reader: R, header: &[&str]) -> Result<Vec<(usize, Vec<String>)>> {
    let mut lines = reader.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        message: "missing header".into(),
    })?;
    let first = first?;
    if first.trim_end_matches('\r').split('\t').ne(header.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {:?}", header.join("\t")),
        });
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let cells: Vec<String> = line.split('\t').map(str::to_string).collect();
        if cells.len() != header.len() {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("{} cells, expected {}", cells.len(), header.len()),
            });
        }
        out.push((i + 1, cells));
    }
    Ok(out)
}

fn parse_set(line: usize, cell: &str, target: Target, allow_sets: bool) -> Result<ValidLabelSet> {
    let bad = |message: String| Error::Parse { line, message };
    let values = cell
        .split('|')
        .map(|v| v.parse::<u8>().map_err(|_| bad(format!("{} cell {cell:?} is not a category", target.name()))))
        .collect::<Result<Vec<u8>>>()?;
    if values.len() > 1 && !allow_sets {
        return Err(bad(format!("{} cell {cell:?} must hold a single category", target.name())));
    }
    if let Some(v) = values.iter().find(|v| !target.domain().contains(v)) {
        return Err(bad(format!("{} value {v} outside its domain", target.name())));
    }
    ValidLabelSet::from_categories(values).map_err(|e| bad(e.to_string()))
}

fn parse_task1<R: BufRead>(reader: R, allow_sets: bool) -> Result<(Vec<String>, BTreeMap<Target, Vec<ValidLabelSet>>)> {
    let mut ids = Vec::new();
    let mut targets: BTreeMap<Target, Vec<ValidLabelSet>> = Target::ALL.iter().map(|&t| (t, Vec::new())).collect();
    for (line, cells) in rows(reader, &TASK1_HEADER)? {
        for (t, cell) in Target::ALL.iter().zip(&cells[1..]) {
            targets.get_mut(t).unwrap().push(parse_set(line, cell, *t, allow_sets)?);
        }
        ids.push(cells[0].clone());
    }
    Ok((ids, targets))
}

pub fn read_task1<R: BufRead>(reader: R) -> Result<Subtask1Predictions> {
    let (ids, targets) = parse_task1(reader, false)?;
    let targets = targets
        .into_iter()
        .map(|(t, col)| (t, col.into_iter().map(ValidLabelSet::smallest).collect()))
        .collect();
    Ok(Subtask1Predictions { ids, targets })
}

pub fn read_task1_gold<R: BufRead>(reader: R) -> Result<Subtask1Gold> {
    let (ids, targets) = parse_task1(reader, true)?;
    Ok(Subtask1Gold { ids, targets })
}

pub fn read_task2<R: BufRead>(reader: R) -> Result<Vec<DistributionRow>> {
    rows(reader, &TASK2_HEADER)?
        .into_iter()
        .map(|(line, cells)| {
            let bad = |message: String| Error::Parse { line, message };
            let values = cells[1..]
                .iter()
                .map(|c| c.parse::<f64>().map_err(|_| bad(format!("{c:?} is not a number"))))
                .collect::<Result<Vec<f64>>>()?;
            let dist = |v: &[f64]| {
                let d = LabelDistribution::with_tolerance(v.to_vec(), PARSED_SUM_TOLERANCE).map_err(|e| bad(e.to_string()))?;
                let sum: f64 = v.iter().sum();
                if (sum - 1.0).abs() <= 1e-6 {
                    return Ok(d);
                }
                LabelDistribution::new(v.iter().map(|x| x / sum).collect()).map_err(|e| bad(e.to_string()))
            };
            Ok(DistributionRow {
                id: cells[0].clone(),
                binary: dist(&values[..2])?,
                multi: dist(&values[2..])?,
            })
        })
        .collect()
}

pub fn read_file<T>(path: &Path, parse: impl FnOnce(std::io::BufReader<File>) -> Result<T>) -> Result<T> {
    let file = File::open(path).map_err(Error::file(path))?;
    parse(std::io::BufReader::new(file)).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}
