//! Metrics and policy-dump CSV files, and reading metrics back.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use dtap_core::metrics::{MetricsFrame, CSV_HEADER, POLICY_CSV_HEADER};
use dtap_core::sim::Tick;
use dtap_core::Policy;

/// Line-oriented CSV writer for [`MetricsFrame`]s. Each frame is flushed as
/// soon as it is written.
pub struct MetricsSink<W: Write> {
    out: W,
    rows: u64,
}

impl MetricsSink<BufWriter<File>> {
    pub fn create(path: &Path) -> io::Result<Self> {
        Self::new(BufWriter::new(File::create(path)?))
    }
}

impl<W: Write> MetricsSink<W> {
    pub fn new(mut out: W) -> io::Result<Self> {
        writeln!(out, "{CSV_HEADER}")?;
        out.flush()?;
        Ok(Self { out, rows: 0 })
    }

    pub fn emit_frame(&mut self, frame: &MetricsFrame) -> io::Result<()> {
        writeln!(self.out, "{}", frame.csv_row())?;
        self.out.flush()?;
        self.rows += 1;
        Ok(())
    }

    pub fn rows(&self) -> u64 {
        self.rows
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

pub struct PolicySink<W: Write> {
    out: W,
}

impl PolicySink<BufWriter<File>> {
    pub fn create(path: &Path) -> io::Result<Self> {
        Self::new(BufWriter::new(File::create(path)?))
    }
}

impl<W: Write> PolicySink<W> {
    pub fn new(mut out: W) -> io::Result<Self> {
        writeln!(out, "{POLICY_CSV_HEADER}")?;
        Ok(Self { out })
    }

    pub fn dump<'a, I>(&mut self, time: Tick, policies: I) -> io::Result<()>
    where
        I: IntoIterator<Item = &'a Policy>,
    {
        for (agent, policy) in policies.into_iter().enumerate() {
            for (action, p) in policy.as_slice().iter().enumerate() {
                writeln!(self.out, "{time},{agent},{action},{p}")?;
            }
        }
        self.out.flush()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unexpected metrics header {0:?}")]
    Header(String),
    #[error("row {row}: bad field `{field}`")]
    Field { row: usize, field: String },
}

fn field<T: std::str::FromStr>(record: &csv::StringRecord, i: usize, row: usize) -> Result<T, ReadError> {
    let text = record.get(i).unwrap_or("");
    text.parse().map_err(|_| ReadError::Field {
        row,
        field: text.to_string(),
    })
}

/// Parses a metrics CSV produced by [`MetricsSink`].
pub fn read_metrics<R: io::Read>(input: R) -> Result<Vec<MetricsFrame>, ReadError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = reader.headers()?.iter().collect::<Vec<_>>().join(",");
    if header != CSV_HEADER {
        return Err(ReadError::Header(header));
    }
    let mut frames = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let atst = match record.get(2) {
            Some("") | None => None,
            Some(_) => Some(field(&record, 2, row)?),
        };
        frames.push(MetricsFrame {
            time: field(&record, 0, row)?,
            window_tasks: field(&record, 1, row)?,
            atst,
            entropy_mean: field(&record, 3, row)?,
            entropy_std: field(&record, 4, row)?,
            tasks_completed_total: field(&record, 5, row)?,
        });
    }
    Ok(frames)
}

pub fn read_metrics_file(path: &Path) -> Result<Vec<MetricsFrame>, ReadError> {
    let file = File::open(path).map_err(csv::Error::from)?;
    read_metrics(file)
}
