//! Versioned CSV tables and key=value run-record files.
//!
//! Every file starts with a `# schema: <name>/v<version>` line. Tables are
//! written to `<path>.partial` and renamed into place once complete, so a
//! canonical path never holds a truncated file.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::algorithm::RunRecord;
use crate::error::{Error, Result};

pub const SCHEMA_PREFIX: &str = "# schema: ";

pub const SWEEP_SCHEMA: &str = "sweep/v1";
pub const SWEEP_COLUMNS: &[&str] = &[
    "algo", "n", "strength", "trial", "seed", "iterations", "evaluations", "lower_hits", "upper_hits", "censored",
];

pub const SWEEP_SUMMARY_SCHEMA: &str = "sweep-summary/v1";
pub const SWEEP_SUMMARY_COLUMNS: &[&str] =
    &["algo", "n", "strength", "trials", "censored", "mean", "median", "q1", "q3"];

pub const CENSUS_SCHEMA: &str = "census/v1";
pub const CENSUS_COLUMNS: &[&str] = &[
    "algo", "n", "strength", "trial", "seed", "checkpoint", "iterations", "found", "lower_hits", "at_lower",
    "upper_hits", "min_marginal",
];

pub const HITTING_SCHEMA: &str = "hitting/v1";
pub const HITTING_COLUMNS: &[&str] = &["mode", "algo", "param", "s", "alpha", "trial", "T", "outcome"];

pub const BSTEP_SCHEMA: &str = "bstep/v1";
pub const BSTEP_COLUMNS: &[&str] = &["n", "trials", "b_steps", "empirical", "se", "exact", "ratio"];

pub const RUN_RECORD_SCHEMA: &str = "runrecord/v1";

/// A schema-tagged table held in memory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table {
    pub schema: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(schema: &str, columns: &[&str]) -> Self {
        Table {
            schema: schema.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Values of one column across all rows.
    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx].as_str()).collect())
    }
}

pub fn partial_path(path: &Path) -> PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".partial");
    PathBuf::from(os)
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn write_rows<W: Write>(w: W, rows: &[Vec<String>]) -> Result<()> {
    let mut cw = csv_writer(w);
    for row in rows {
        cw.write_record(row)?;
    }
    cw.flush()?;
    Ok(())
}

fn write_header<W: Write>(w: &mut W, schema: &str, columns: &[String]) -> Result<()> {
    writeln!(w, "{SCHEMA_PREFIX}{schema}")?;
    write_rows(&mut *w, &[columns.to_vec()])
}

/// Writes `table` to `path` via a `.partial` file and an atomic rename.
pub fn write_table(path: &Path, table: &Table) -> Result<()> {
    let tmp = partial_path(path);
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        write_header(&mut w, &table.schema, &table.columns)?;
        write_rows(&mut w, &table.rows)?;
        w.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn read_schema_line(path: &Path, line: Option<std::io::Result<String>>) -> Result<String> {
    let line = line.transpose()?.unwrap_or_default();
    line.strip_prefix(SCHEMA_PREFIX)
        .map(|s| s.trim().to_string())
        .ok_or_else(|| Error::Parse { path: path.to_path_buf(), detail: "missing schema line".into() })
}

/// Reads a table, refusing any schema other than `expected`.
pub fn read_table(path: &Path, expected: &str) -> Result<Table> {
    let file = File::open(path)?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let found = read_schema_line(path, Some(Ok(first.trim_end_matches(['\n', '\r']).to_string())))?;
    if found != expected {
        return Err(Error::Schema { path: path.to_path_buf(), expected: expected.into(), found });
    }
    let mut cr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let columns: Vec<String> = cr.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in cr.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok(Table { schema: found, columns, rows })
}

/// Appends the rows of `table` to an existing file with the same schema and columns,
/// or creates the file when absent.
pub fn append_table(path: &Path, table: &Table) -> Result<()> {
    if !path.exists() {
        return write_table(path, table);
    }
    let existing = read_table(path, &table.schema)?;
    if existing.columns != table.columns {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            expected: table.columns.join(","),
            found: existing.columns.join(","),
        });
    }
    let mut merged = existing;
    merged.rows.extend(table.rows.iter().cloned());
    write_table(path, &merged)
}

/// Incrementally written table: rows go to `<path>.partial` and are flushed as
/// they arrive; [`PartialTable::finish`] renames the file into place.
pub struct PartialTable {
    path: PathBuf,
    tmp: PathBuf,
    writer: BufWriter<File>,
}

impl PartialTable {
    /// Starts a fresh partial file, discarding any previous one.
    pub fn create(path: &Path, schema: &str, columns: &[&str]) -> Result<Self> {
        let tmp = partial_path(path);
        let mut writer = BufWriter::new(File::create(&tmp)?);
        let cols: Vec<String> = columns.iter().map(|c| c.to_string()).collect();
        write_header(&mut writer, schema, &cols)?;
        writer.flush()?;
        Ok(PartialTable { path: path.to_path_buf(), tmp, writer })
    }

    /// Reopens an existing partial file, returning the rows it already holds.
    /// Falls back to [`PartialTable::create`] when there is none.
    pub fn resume(path: &Path, schema: &str, columns: &[&str]) -> Result<(Self, Vec<Vec<String>>)> {
        let tmp = partial_path(path);
        if !tmp.exists() {
            return Ok((Self::create(path, schema, columns)?, Vec::new()));
        }
        let existing = read_table(&tmp, schema)?;
        if existing.columns.iter().map(String::as_str).ne(columns.iter().copied()) {
            return Err(Error::Schema {
                path: tmp,
                expected: columns.join(","),
                found: existing.columns.join(","),
            });
        }
        // rewrite so a torn last line from an interrupted run is dropped
        let mut me = Self::create(path, schema, columns)?;
        me.write(&existing.rows)?;
        Ok((me, existing.rows))
    }

    pub fn write(&mut self, rows: &[Vec<String>]) -> Result<()> {
        write_rows(&mut self.writer, rows)?;
        self.writer.flush()?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush()?;
        drop(self.writer);
        fs::rename(&self.tmp, &self.path)?;
        Ok(())
    }
}

/// One `key=value` line per record.
pub fn run_record_line(r: &RunRecord) -> String {
    let iterations = r.iterations.map_or_else(|| "none".to_string(), |t| t.to_string());
    let b_steps = if r.b_steps.is_empty() {
        "-".to_string()
    } else {
        r.b_steps.iter().map(|(b, c)| format!("{b}:{c}")).collect::<Vec<_>>().join(";")
    };
    format!(
        "algo={} n={} strength={} budget={} seed={} iterations={} iterations_run={} evaluations={} censored={} \
         lower_hits={} upper_hits={} min_marginal={} b_steps={} phi_min={} phi_max={} phi_final={}",
        r.algorithm,
        r.n,
        r.strength,
        r.budget,
        r.seed,
        iterations,
        r.iterations_run,
        r.evaluations,
        r.censored(),
        r.lower_border_hits,
        r.upper_border_hits,
        r.min_marginal,
        b_steps,
        r.phi.min,
        r.phi.max,
        r.phi.last,
    )
}

pub fn write_run_records(path: &Path, records: &[RunRecord]) -> Result<()> {
    let tmp = partial_path(path);
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        writeln!(w, "{SCHEMA_PREFIX}{RUN_RECORD_SCHEMA}")?;
        for r in records {
            writeln!(w, "{}", run_record_line(r))?;
        }
        w.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Appends records to a run-record file, refusing files of another schema.
pub fn append_run_records(path: &Path, records: &[RunRecord]) -> Result<()> {
    if !path.exists() {
        return write_run_records(path, records);
    }
    let found = {
        let mut lines = BufReader::new(File::open(path)?).lines();
        read_schema_line(path, lines.next())?
    };
    if found != RUN_RECORD_SCHEMA {
        return Err(Error::Schema { path: path.to_path_buf(), expected: RUN_RECORD_SCHEMA.into(), found });
    }
    let mut w = BufWriter::new(OpenOptions::new().append(true).open(path)?);
    for r in records {
        writeln!(w, "{}", run_record_line(r))?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a run-record file into one key/value list per line.
pub fn read_run_records(path: &Path) -> Result<Vec<Vec<(String, String)>>> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    let found = read_schema_line(path, lines.next())?;
    if found != RUN_RECORD_SCHEMA {
        return Err(Error::Schema { path: path.to_path_buf(), expected: RUN_RECORD_SCHEMA.into(), found });
    }
    let mut out = Vec::new();
    for line in lines {
        let line = line?;
        let fields = line
            .split(' ')
            .map(|kv| {
                kv.split_once('=')
                    .map(|(k, v)| (k.to_string(), v.to_string()))
                    .ok_or_else(|| Error::Parse { path: path.to_path_buf(), detail: format!("field `{kv}`") })
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(fields);
    }
    Ok(out)
}
