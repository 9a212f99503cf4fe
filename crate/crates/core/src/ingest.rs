//! Actor × event participation matrices and their CSV form.
//!
//! The CSV layout is a mandatory header `actor,e1,...,eK` followed by one row per actor:
//! the actor id, then `K` nonnegative numeric cells. Column order defines the event index.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    MissingFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV at line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("header must be `actor,e1,...,eK` with at least one event column")]
    BadHeader,
    #[error("line {line} (actor `{actor}`): expected {expected} cells, found {found}")]
    RaggedRow {
        line: u64,
        actor: String,
        expected: usize,
        found: usize,
    },
    #[error("line {line}, column `{column}`: `{cell}` is not a number")]
    NonNumericCell {
        line: u64,
        column: String,
        cell: String,
    },
    #[error("line {line}, column `{column}`: negative value `{cell}`")]
    NegativeCell {
        line: u64,
        column: String,
        cell: String,
    },
    #[error("line {line}: duplicate actor id `{actor}`")]
    DuplicateActorId { line: u64, actor: String },
    #[error("duplicate event id `{0}` in header")]
    DuplicateEventId(String),
    #[error("matrix has no actor rows")]
    NoActors,
    #[error("{0}")]
    Shape(String),
}

/// `R` actors by `K` events of nonnegative participation amounts.
///
/// Constructed only through validating paths; fields are immutable afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticipationMatrix<T> {
    actor_ids: Vec<String>,
    event_ids: Vec<String>,
    values: Vec<Vec<T>>,
}

impl<T: Scalar> ParticipationMatrix<T> {
    pub fn new(actor_ids: Vec<String>, event_ids: Vec<String>, values: Vec<Vec<T>>) -> Result<Self, IngestError> {
        if actor_ids.is_empty() || values.is_empty() {
            return Err(IngestError::NoActors);
        }
        if event_ids.is_empty() {
            return Err(IngestError::BadHeader);
        }
        if actor_ids.len() != values.len() {
            return Err(IngestError::Shape(format!(
                "{} actor ids for {} rows",
                actor_ids.len(),
                values.len()
            )));
        }
        let mut seen = HashSet::new();
        for e in &event_ids {
            if !seen.insert(e.as_str()) {
                return Err(IngestError::DuplicateEventId(e.clone()));
            }
        }
        let mut seen = HashSet::new();
        for (i, (id, row)) in actor_ids.iter().zip(&values).enumerate() {
            let line = i as u64 + 2;
            if !seen.insert(id.as_str()) {
                return Err(IngestError::DuplicateActorId { line, actor: id.clone() });
            }
            if row.len() != event_ids.len() {
                return Err(IngestError::RaggedRow {
                    line,
                    actor: id.clone(),
                    expected: event_ids.len(),
                    found: row.len(),
                });
            }
            for (k, v) in row.iter().enumerate() {
                if *v < T::zero() {
                    return Err(IngestError::NegativeCell {
                        line,
                        column: event_ids[k].clone(),
                        cell: v.to_string(),
                    });
                }
            }
        }
        Ok(Self {
            actor_ids,
            event_ids,
            values,
        })
    }

    /// Matrix with generated ids `a1..aR` and `e1..eK`.
    pub fn from_rows(values: Vec<Vec<T>>) -> Result<Self, IngestError> {
        let r = values.len();
        let k = values.first().map_or(0, Vec::len);
        let actors = (1..=r).map(|i| format!("a{i}")).collect();
        let events = (1..=k).map(|i| format!("e{i}")).collect();
        Self::new(actors, events, values)
    }

    pub fn n_actors(&self) -> usize {
        self.values.len()
    }

    pub fn n_events(&self) -> usize {
        self.event_ids.len()
    }

    pub fn actor_ids(&self) -> &[String] {
        &self.actor_ids
    }

    pub fn event_ids(&self) -> &[String] {
        &self.event_ids
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i]
    }

    pub fn get(&self, i: usize, k: usize) -> T {
        self.values[i][k]
    }

    /// Total participation of every actor over all events.
    pub fn row_sums(&self) -> Vec<T> {
        self.values.iter().map(|row| row.iter().copied().sum()).collect()
    }

    /// Per-event mean over actors.
    pub fn column_means(&self) -> Vec<T> {
        let r = T::from_count(self.n_actors());
        (0..self.n_events())
            .map(|k| self.values.iter().map(|row| row[k]).sum::<T>() / r)
            .collect()
    }

    /// Same matrix with event columns reordered; `order[k]` is the source column of column `k`.
    pub fn permute_events(&self, order: &[usize]) -> Result<Self, IngestError> {
        let events = order.iter().map(|&k| self.event_ids[k].clone()).collect();
        let values = self
            .values
            .iter()
            .map(|row| order.iter().map(|&k| row[k]).collect())
            .collect();
        Self::new(self.actor_ids.clone(), events, values)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("actor");
        for e in &self.event_ids {
            let _ = write!(out, ",{e}");
        }
        out.push('\n');
        for (id, row) in self.actor_ids.iter().zip(&self.values) {
            out.push_str(id);
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Free-function form of [`ParticipationMatrix::row_sums`].
pub fn row_sums<T: Scalar>(m: &ParticipationMatrix<T>) -> Vec<T> {
    m.row_sums()
}

pub fn load_csv<T: Scalar + FromStr>(path: impl AsRef<Path>) -> Result<ParticipationMatrix<T>, IngestError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| IngestError::MissingFile {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file)
}

pub fn read_csv<T: Scalar + FromStr, R: Read>(reader: R) -> Result<ParticipationMatrix<T>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut records = rdr.records();
    let header = match records.next() {
        Some(rec) => rec.map_err(csv_err)?,
        None => return Err(IngestError::BadHeader),
    };
    if header.len() < 2 {
        return Err(IngestError::BadHeader);
    }
    let event_ids: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    if event_ids.iter().any(String::is_empty) {
        return Err(IngestError::BadHeader);
    }
    let k = event_ids.len();

    let mut actor_ids = Vec::new();
    let mut values = Vec::new();
    for rec in records {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        // blank lines
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        let actor = rec[0].to_owned();
        if rec.len() - 1 != k {
            return Err(IngestError::RaggedRow {
                line,
                actor,
                expected: k,
                found: rec.len() - 1,
            });
        }
        let mut row = Vec::with_capacity(k);
        for (cell, column) in rec.iter().skip(1).zip(&event_ids) {
            let v: T = parse_cell(cell).ok_or_else(|| IngestError::NonNumericCell {
                line,
                column: column.clone(),
                cell: cell.to_owned(),
            })?;
            if v < T::zero() {
                return Err(IngestError::NegativeCell {
                    line,
                    column: column.clone(),
                    cell: cell.to_owned(),
                });
            }
            row.push(v);
        }
        if actor_ids.contains(&actor) {
            return Err(IngestError::DuplicateActorId { line, actor });
        }
        actor_ids.push(actor);
        values.push(row);
    }
    ParticipationMatrix::new(actor_ids, event_ids, values)
}

fn parse_cell<T: Scalar + FromStr>(cell: &str) -> Option<T> {
    if cell.is_empty() {
        return None;
    }
    let v = cell.parse::<T>().ok()?;
    // rejects "NaN" / "inf" spellings accepted by the float parser
    v.to_f64().filter(|f| f.is_finite())?;
    Some(v)
}

fn csv_err(e: csv::Error) -> IngestError {
    let line = e.position().map_or(0, |p| p.line());
    IngestError::Csv {
        line,
        message: e.to_string(),
    }
}
