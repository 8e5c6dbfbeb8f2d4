//! Aggregated results and their CSV/markdown renderings.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Summary of one protocol's values over all seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single seed.
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Stats {
    /// Values are reduced in the order given.
    pub fn from_values(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Self { mean, std, min, max, n })
    }
}

/// Row key: group sizes and stream count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RowKey {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_streams: usize,
}

impl RowKey {
    pub fn label(&self) -> String {
        if self.n_streams > 1 {
            format!("N={} M={} K={}", self.n_tx, self.n_rx, self.n_streams)
        } else {
            format!("N={} M={}", self.n_tx, self.n_rx)
        }
    }

    fn parse(label: &str) -> Result<Self> {
        let mut key = RowKey {
            n_tx: 0,
            n_rx: 0,
            n_streams: 1,
        };
        for part in label.split_whitespace() {
            let (name, value) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidInput(format!("bad scenario label {label:?}")))?;
            let value: usize = value
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad scenario label {label:?}")))?;
            match name {
                "N" => key.n_tx = value,
                "M" => key.n_rx = value,
                "K" => key.n_streams = value,
                _ => return Err(Error::InvalidInput(format!("bad scenario label {label:?}"))),
            }
        }
        Ok(key)
    }

    fn short(&self) -> String {
        if self.n_streams > 1 {
            format!("({},{},{})", self.n_tx, self.n_rx, self.n_streams)
        } else {
            format!("({},{})", self.n_tx, self.n_rx)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub key: RowKey,
    /// One entry per protocol column; `None` where the protocol was not run.
    pub cells: Vec<Option<Stats>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub title: String,
    pub protocols: Vec<String>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Md,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRecord {
    scenario: String,
    protocol: String,
    mean: f64,
    std: f64,
    min: f64,
    max: f64,
    n_seeds: usize,
}

impl ResultTable {
    pub fn cell(&self, key: RowKey, protocol: &str) -> Option<&Stats> {
        let col = self.protocols.iter().position(|p| p == protocol)?;
        self.rows.iter().find(|r| r.key == key)?.cells[col].as_ref()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.iter().all(|r| r.cells.iter().all(Option::is_none))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidInput(format!("csv: {e}"));
        // header is written even for a table without cells
        w.write_record(["scenario", "protocol", "mean", "std", "min", "max", "n_seeds"])
            .map_err(io)?;
        for row in &self.rows {
            for (p, cell) in self.protocols.iter().zip(&row.cells) {
                if let Some(s) = cell {
                    w.write_record([
                        row.key.label(),
                        p.clone(),
                        s.mean.to_string(),
                        s.std.to_string(),
                        s.min.to_string(),
                        s.max.to_string(),
                        s.n.to_string(),
                    ])
                    .map_err(io)?;
                }
            }
        }
        w.flush().map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::InvalidInput(e.to_string()))
    }

    /// Rebuilds a table from CSV written by [`ResultTable::write_csv`].
    /// Rows and columns keep their first-seen order.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(input);
        let mut table = ResultTable {
            title: String::new(),
            protocols: Vec::new(),
            rows: Vec::new(),
        };
        let mut entries = Vec::new();
        for rec in rd.deserialize::<CsvRecord>() {
            let rec = rec.map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
            if !table.protocols.contains(&rec.protocol) {
                table.protocols.push(rec.protocol.clone());
            }
            let key = RowKey::parse(&rec.scenario)?;
            if !table.rows.iter().any(|r| r.key == key) {
                table.rows.push(Row { key, cells: Vec::new() });
            }
            entries.push((key, rec));
        }
        let width = table.protocols.len();
        for row in &mut table.rows {
            row.cells = vec![None; width];
        }
        for (key, rec) in entries {
            let col = table.protocols.iter().position(|p| *p == rec.protocol).unwrap_or(0);
            let row = table.rows.iter_mut().find(|r| r.key == key).expect("row inserted above");
            row.cells[col] = Some(Stats {
                mean: rec.mean,
                std: rec.std,
                min: rec.min,
                max: rec.max,
                n: rec.n_seeds,
            });
        }
        Ok(table)
    }

    /// Means with two decimals, one column per protocol, `-` where absent.
    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        if !self.title.is_empty() {
            s.push_str(&format!("**{}**\n\n", self.title));
        }
        let key_header = if self.rows.iter().any(|r| r.key.n_streams > 1) {
            "(N,M,K)"
        } else {
            "(N,M)"
        };
        let header: Vec<String> = std::iter::once(key_header.to_string())
            .chain(self.protocols.iter().cloned())
            .collect();
        let body: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                std::iter::once(r.key.short())
                    .chain(r.cells.iter().map(|c| match c {
                        Some(st) => format!("{:.2}", st.mean),
                        None => "-".to_string(),
                    }))
                    .collect()
            })
            .collect();
        let widths: Vec<usize> = (0..header.len())
            .map(|i| {
                body.iter()
                    .map(|r| r[i].len())
                    .chain(std::iter::once(header[i].len()))
                    .max()
                    .unwrap_or(1)
            })
            .collect();
        let line = |cells: &[String]| {
            let padded: Vec<String> = cells
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            format!("| {} |\n", padded.join(" | "))
        };
        s.push_str(&line(&header));
        let rule: Vec<String> = widths
            .iter()
            .enumerate()
            .map(|(i, w)| if i == 0 { "-".repeat(w + 2) } else { format!("{}:", "-".repeat(w + 1)) })
            .collect();
        s.push_str(&format!("|{}|\n", rule.join("|")));
        for r in &body {
            s.push_str(&line(r));
        }
        s
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.to_csv_string(),
            Format::Md => Ok(self.to_markdown()),
        }
    }
}

/// Writes `table` to `path` in `format`.
pub fn emit(table: &ResultTable, format: Format, path: impl AsRef<Path>) -> Result<()> {
    if table.is_empty() {
        return Err(Error::InvalidInput("refusing to emit an empty table".into()));
    }
    let path = path.as_ref();
    let text = table.render(format)?;
    std::fs::write(path, text)
        .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}
