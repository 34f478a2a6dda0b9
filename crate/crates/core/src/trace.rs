//! Encounter traces and per-pair contact statistics.
//!
//! The canonical trace is a CSV file with the exact header
//! `node_a,node_b,start,end`, times in seconds. Real datasets are expected to
//! be converted to this layout before ingestion.

use std::collections::BTreeMap;
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TRACE_HEADER: &str = "node_a,node_b,start,end";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncounterRecord {
    pub node_a: String,
    pub node_b: String,
    pub start: f64,
    pub end: f64,
}

impl EncounterRecord {
    pub fn new(node_a: impl Into<String>, node_b: impl Into<String>, start: f64, end: f64) -> Result<Self> {
        let rec = EncounterRecord { node_a: node_a.into(), node_b: node_b.into(), start, end };
        rec.validate().map_err(Error::Domain)?;
        Ok(rec)
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn pair(&self) -> NodePair {
        NodePair::new(&self.node_a, &self.node_b)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.node_a.is_empty() || self.node_b.is_empty() {
            return Err("empty node identifier".into());
        }
        if self.node_a == self.node_b {
            return Err(format!("self-contact of node {}", self.node_a));
        }
        if !self.start.is_finite() || !self.end.is_finite() {
            return Err("non-finite time".into());
        }
        if self.start < 0.0 {
            return Err(format!("negative start time {}", self.start));
        }
        if self.end <= self.start {
            return Err(format!("end {} is not after start {}", self.end, self.start));
        }
        Ok(())
    }
}

/// Unordered UE pair, stored with the lexicographically smaller id first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodePair(String, String);

impl NodePair {
    pub fn new(a: &str, b: &str) -> Self {
        if a <= b {
            NodePair(a.to_owned(), b.to_owned())
        } else {
            NodePair(b.to_owned(), a.to_owned())
        }
    }

    pub fn first(&self) -> &str {
        &self.0
    }

    pub fn second(&self) -> &str {
        &self.1
    }

    pub fn contains(&self, id: &str) -> bool {
        self.0 == id || self.1 == id
    }

    /// The member of the pair that is not `id`.
    pub fn other(&self, id: &str) -> Option<&str> {
        if self.0 == id {
            Some(&self.1)
        } else if self.1 == id {
            Some(&self.0)
        } else {
            None
        }
    }
}

impl fmt::Display for NodePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.0, self.1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactStats {
    pub pair: NodePair,
    pub n_encounters: u64,
    /// Mean contact duration in seconds.
    pub mean_duration: f64,
    /// Population variance (denominator N) of the contact duration, s².
    pub var_duration: f64,
}

impl ContactStats {
    /// Statistics of a non-empty sample of durations.
    pub fn from_durations(pair: NodePair, durations: &[f64]) -> Option<Self> {
        if durations.is_empty() {
            return None;
        }
        let n = durations.len() as f64;
        let mean = durations.iter().sum::<f64>() / n;
        let var = durations.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Some(ContactStats { pair, n_encounters: durations.len() as u64, mean_duration: mean, var_duration: var })
    }

    /// Combines the moments of two disjoint samples of the same pair.
    pub fn merge(&self, other: &ContactStats) -> Result<ContactStats> {
        if self.pair != other.pair {
            return Err(Error::domain(format!("cannot merge stats of {} with {}", self.pair, other.pair)));
        }
        let (n1, n2) = (self.n_encounters as f64, other.n_encounters as f64);
        let n = n1 + n2;
        let mean = (n1 * self.mean_duration + n2 * other.mean_duration) / n;
        let var = (n1 * (self.var_duration + (self.mean_duration - mean).powi(2))
            + n2 * (other.var_duration + (other.mean_duration - mean).powi(2)))
            / n;
        Ok(ContactStats {
            pair: self.pair.clone(),
            n_encounters: self.n_encounters + other.n_encounters,
            mean_duration: mean,
            var_duration: var.max(0.0),
        })
    }
}

/// Parses a trace in the canonical CSV layout.
///
/// Blank lines are skipped. Line numbers in errors are 1-based and count the
/// header line.
pub fn parse_trace<R: BufRead>(source: R) -> Result<Vec<EncounterRecord>> {
    let mut lines = source.lines();
    let header = match lines.next() {
        Some(line) => line?,
        None => return Err(Error::Format(format!("missing header, expected `{TRACE_HEADER}`"))),
    };
    let header = header.trim_start_matches('\u{feff}').trim_end_matches('\r');
    if header != TRACE_HEADER {
        return Err(Error::Format(format!("bad header `{header}`, expected `{TRACE_HEADER}`")));
    }

    let mut records = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        records.push(parse_line(line).map_err(|msg| Error::Parse { line: line_no, msg })?);
    }
    Ok(records)
}

fn parse_line(line: &str) -> std::result::Result<EncounterRecord, String> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 4 {
        return Err(format!("expected 4 fields, found {}", fields.len()));
    }
    let time = |s: &str, name: &str| {
        s.trim().parse::<f64>().map_err(|_| format!("non-numeric {name} time `{s}`"))
    };
    let rec = EncounterRecord {
        node_a: fields[0].trim().to_owned(),
        node_b: fields[1].trim().to_owned(),
        start: time(fields[2], "start")?,
        end: time(fields[3], "end")?,
    };
    rec.validate()?;
    Ok(rec)
}

pub fn write_trace<W: std::io::Write>(mut out: W, records: &[EncounterRecord]) -> Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in records {
        writeln!(out, "{},{},{},{}", r.node_a, r.node_b, r.start, r.end)?;
    }
    Ok(())
}

/// Groups records by unordered pair and computes count, mean and population
/// variance of the contact durations.
///
/// Durations are sorted before summation so the result does not depend on
/// record order, bit for bit.
pub fn aggregate_contacts(records: &[EncounterRecord]) -> BTreeMap<NodePair, ContactStats> {
    let mut by_pair: BTreeMap<NodePair, Vec<f64>> = BTreeMap::new();
    for r in records {
        by_pair.entry(r.pair()).or_default().push(r.duration());
    }
    by_pair
        .into_iter()
        .filter_map(|(pair, mut durations)| {
            durations.sort_by(f64::total_cmp);
            ContactStats::from_durations(pair.clone(), &durations).map(|s| (pair, s))
        })
        .collect()
}
