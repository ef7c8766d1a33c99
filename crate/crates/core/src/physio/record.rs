use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const EPOCH_SECONDS: f64 = 30.0;

/// Stage as scored in the annotation file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RawStage {
    W,
    N1,
    N2,
    N3,
    Rem,
    Unknown,
}

impl FromStr for RawStage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "W" => Ok(RawStage::W),
            "N1" => Ok(RawStage::N1),
            "N2" => Ok(RawStage::N2),
            "N3" => Ok(RawStage::N3),
            "REM" | "R" => Ok(RawStage::Rem),
            "?" => Ok(RawStage::Unknown),
            other => Err(Error::UnknownStage(other.to_string())),
        }
    }
}

/// Three-class target: NREM 1-3 merged into one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StageLabel {
    Wake,
    Rem,
    Nrem,
    Unknown,
}

impl StageLabel {
    /// Scored classes in the fixed head order.
    pub const CLASSES: [StageLabel; 3] = [StageLabel::Wake, StageLabel::Rem, StageLabel::Nrem];

    pub fn class_index(self) -> Option<usize> {
        match self {
            StageLabel::Wake => Some(0),
            StageLabel::Rem => Some(1),
            StageLabel::Nrem => Some(2),
            StageLabel::Unknown => None,
        }
    }

    pub fn from_class_index(i: usize) -> StageLabel {
        Self::CLASSES.get(i).copied().unwrap_or(StageLabel::Unknown)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            StageLabel::Wake => "WAKE",
            StageLabel::Rem => "REM",
            StageLabel::Nrem => "NREM",
            StageLabel::Unknown => "UNKNOWN",
        }
    }
}

impl fmt::Display for StageLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StageLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "WAKE" => Ok(StageLabel::Wake),
            "REM" => Ok(StageLabel::Rem),
            "NREM" => Ok(StageLabel::Nrem),
            "UNKNOWN" => Ok(StageLabel::Unknown),
            other => Err(Error::UnknownStage(other.to_string())),
        }
    }
}

pub fn merge_stage(raw: RawStage) -> StageLabel {
    match raw {
        RawStage::W => StageLabel::Wake,
        RawStage::Rem => StageLabel::Rem,
        RawStage::N1 | RawStage::N2 | RawStage::N3 => StageLabel::Nrem,
        RawStage::Unknown => StageLabel::Unknown,
    }
}

/// Parse an annotation label and merge it in one step.
pub fn merge_stage_text(text: &str) -> Result<StageLabel> {
    text.parse::<RawStage>().map(merge_stage)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RrEvent {
    pub time_s: f64,
    pub rr_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MovementEvent {
    pub start_s: f64,
    pub end_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Annotation {
    pub epoch_index: usize,
    pub stage: RawStage,
}

/// One subject-night of beat and movement events with optional scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct SleepRecord {
    pub record_id: String,
    rr_events: Vec<RrEvent>,
    movement_events: Vec<MovementEvent>,
    annotations: Vec<Annotation>,
}

impl SleepRecord {
    pub fn new(
        record_id: impl Into<String>,
        rr_events: Vec<RrEvent>,
        movement_events: Vec<MovementEvent>,
        mut annotations: Vec<Annotation>,
    ) -> Result<Self> {
        for (i, e) in rr_events.iter().enumerate() {
            if !(e.time_s >= 0.0) || !e.time_s.is_finite() {
                return Err(Error::InvalidRecord(format!(
                    "RR event {i} has invalid time {}",
                    e.time_s
                )));
            }
            if !(e.rr_ms > 0.0) || !e.rr_ms.is_finite() {
                return Err(Error::InvalidRecord(format!(
                    "RR event {i} has non-positive interval {}",
                    e.rr_ms
                )));
            }
        }
        if let Some(i) = rr_events.windows(2).position(|w| w[1].time_s <= w[0].time_s) {
            return Err(Error::InvalidRecord(format!(
                "RR event times must be strictly increasing (events {i} and {})",
                i + 1
            )));
        }
        if let Some(m) = movement_events.iter().find(|m| !(m.start_s < m.end_s)) {
            return Err(Error::InvalidRecord(format!(
                "movement interval [{}, {}) is empty",
                m.start_s, m.end_s
            )));
        }
        annotations.sort_by_key(|a| a.epoch_index);
        if let Some(w) = annotations.windows(2).find(|w| w[0].epoch_index == w[1].epoch_index) {
            return Err(Error::InvalidRecord(format!(
                "epoch {} annotated twice",
                w[0].epoch_index
            )));
        }
        Ok(SleepRecord {
            record_id: record_id.into(),
            rr_events,
            movement_events,
            annotations,
        })
    }

    pub fn rr_events(&self) -> &[RrEvent] {
        &self.rr_events
    }

    pub fn movement_events(&self) -> &[MovementEvent] {
        &self.movement_events
    }

    /// Sorted by epoch index.
    pub fn annotations(&self) -> &[Annotation] {
        &self.annotations
    }

    /// Merged reference labels, sorted by epoch.
    pub fn reference(&self) -> Vec<(usize, StageLabel)> {
        self.annotations
            .iter()
            .map(|a| (a.epoch_index, merge_stage(a.stage)))
            .collect()
    }

    /// Latest time covered by any event or annotated epoch.
    pub fn duration_s(&self) -> f64 {
        let rr = self.rr_events.last().map_or(0.0, |e| e.time_s);
        let mv = self.movement_events.iter().map(|m| m.end_s).fold(0.0, f64::max);
        let ann = self
            .annotations
            .last()
            .map_or(0.0, |a| (a.epoch_index + 1) as f64 * EPOCH_SECONDS);
        rr.max(mv).max(ann)
    }
}

/// Non-empty, non-comment lines with 1-based line numbers; a leading line
/// that does not parse as numbers is treated as a header.
fn csv_rows<R: BufRead>(reader: R, source: &str, columns: usize) -> Result<Vec<(usize, Vec<String>)>> {
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Parse {
            source_name: source.to_string(),
            line: line_no,
            message: e.to_string(),
        })?;
        let line = line.trim_end_matches('\r').trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<String> = line.split(',').map(|f| f.trim().to_string()).collect();
        if fields.len() != columns {
            return Err(Error::Parse {
                source_name: source.to_string(),
                line: line_no,
                message: format!("expected {columns} comma-separated fields, found {}", fields.len()),
            });
        }
        rows.push((line_no, fields));
    }
    Ok(rows)
}

fn number<T: FromStr>(source: &str, line: usize, field: &str, what: &str) -> Result<T> {
    field.parse::<T>().map_err(|_| Error::Parse {
        source_name: source.to_string(),
        line,
        message: format!("invalid {what} {field:?}"),
    })
}

fn is_header(rows: &[(usize, Vec<String>)]) -> bool {
    rows.first().is_some_and(|(_, f)| f[0].parse::<f64>().is_err())
}

pub fn parse_rr<R: BufRead>(reader: R, source: &str) -> Result<Vec<RrEvent>> {
    let rows = csv_rows(reader, source, 2)?;
    let skip = usize::from(is_header(&rows));
    rows.iter()
        .skip(skip)
        .map(|(line, f)| {
            Ok(RrEvent {
                time_s: number(source, *line, &f[0], "time_s")?,
                rr_ms: number(source, *line, &f[1], "rr_ms")?,
            })
        })
        .collect()
}

pub fn parse_movement<R: BufRead>(reader: R, source: &str) -> Result<Vec<MovementEvent>> {
    let rows = csv_rows(reader, source, 2)?;
    let skip = usize::from(is_header(&rows));
    rows.iter()
        .skip(skip)
        .map(|(line, f)| {
            Ok(MovementEvent {
                start_s: number(source, *line, &f[0], "start_s")?,
                end_s: number(source, *line, &f[1], "end_s")?,
            })
        })
        .collect()
}

pub fn parse_annotations<R: BufRead>(reader: R, source: &str) -> Result<Vec<Annotation>> {
    let rows = csv_rows(reader, source, 2)?;
    let skip = usize::from(rows.first().is_some_and(|(_, f)| f[0].parse::<usize>().is_err()));
    rows.iter()
        .skip(skip)
        .map(|(line, f)| {
            let stage = f[1].parse::<RawStage>().map_err(|_| Error::Parse {
                source_name: source.to_string(),
                line: *line,
                message: format!("unrecognized stage {:?}", f[1]),
            })?;
            Ok(Annotation {
                epoch_index: number(source, *line, &f[0], "epoch_index")?,
                stage,
            })
        })
        .collect()
}
