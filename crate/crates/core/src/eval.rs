//! Hypnogram assembly and epoch-level scoring metrics.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::physio::{StageLabel, EPOCH_SECONDS};
use crate::zoo::{argmax_first, EpochDecode};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypnogramEntry {
    pub epoch_index: usize,
    pub stage: StageLabel,
    /// Wake, REM, NREM.
    pub scores: [f32; 3],
}

/// Per-epoch predicted stages, strictly increasing in epoch index.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypnogram {
    pub record_id: String,
    pub entries: Vec<HypnogramEntry>,
}

/// Head output of one window together with the epochs it scores.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowDecode {
    pub targets: Vec<usize>,
    pub epochs: Vec<EpochDecode>,
}

/// Merge window decodes into one hypnogram. An epoch scored by several
/// windows gets the mean of their scores, re-argmaxed with ties going to
/// the earlier class.
pub fn assemble_hypnogram(record_id: &str, decodes: &[WindowDecode]) -> Result<Hypnogram> {
    let mut acc: BTreeMap<usize, ([f64; 3], usize)> = BTreeMap::new();
    for d in decodes {
        if d.targets.len() != d.epochs.len() {
            return Err(Error::DimensionMismatch {
                what: "window decode targets",
                expected: d.targets.len(),
                found: d.epochs.len(),
            });
        }
        for (epoch, dec) in d.targets.iter().zip(&d.epochs) {
            let (sum, n) = acc.entry(*epoch).or_insert(([0.0; 3], 0));
            for (s, v) in sum.iter_mut().zip(dec.scores) {
                *s += v as f64;
            }
            *n += 1;
        }
    }
    if acc.is_empty() {
        return Err(Error::Empty("window decodes"));
    }
    let entries = acc
        .into_iter()
        .map(|(epoch_index, (sum, n))| {
            let scores = sum.map(|s| (s / n as f64) as f32);
            HypnogramEntry {
                epoch_index,
                stage: StageLabel::from_class_index(argmax_first(&scores)),
                scores,
            }
        })
        .collect();
    Ok(Hypnogram {
        record_id: record_id.to_string(),
        entries,
    })
}

/// Counts indexed `[reference][predicted]` over Wake, REM, NREM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 3]; 3],
}

impl ConfusionMatrix {
    pub fn from_counts(counts: [[u64; 3]; 3]) -> Self {
        ConfusionMatrix { counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..3).map(|i| self.counts[i][i]).sum()
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        for r in 0..3 {
            for p in 0..3 {
                self.counts[r][p] += other.counts[r][p];
            }
        }
    }
}

/// Tally predictions against reference labels. Epochs without a known
/// reference, or without a prediction, are skipped.
pub fn confusion(h: &Hypnogram, reference: &[(usize, StageLabel)]) -> Result<ConfusionMatrix> {
    let reference: BTreeMap<usize, StageLabel> = reference.iter().copied().collect();
    let mut m = ConfusionMatrix::default();
    for e in &h.entries {
        let (Some(r), Some(p)) = (
            reference.get(&e.epoch_index).and_then(|s| s.class_index()),
            e.stage.class_index(),
        ) else {
            continue;
        };
        m.counts[r][p] += 1;
    }
    if m.total() == 0 {
        return Err(Error::NoOverlap);
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    /// `None` when the class has no reference epochs.
    pub sensitivity: [Option<f64>; 3],
    /// `None` when every reference epoch belongs to the class.
    pub specificity: [Option<f64>; 3],
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn metrics(m: &ConfusionMatrix) -> Result<Metrics> {
    let total = m.total();
    if total == 0 {
        return Err(Error::Empty("confusion matrix"));
    }
    let mut sensitivity = [None; 3];
    let mut specificity = [None; 3];
    for c in 0..3 {
        let tp = m.counts[c][c];
        let fn_: u64 = (0..3).filter(|p| *p != c).map(|p| m.counts[c][p]).sum();
        let fp: u64 = (0..3).filter(|r| *r != c).map(|r| m.counts[r][c]).sum();
        let tn = total - tp - fn_ - fp;
        sensitivity[c] = ratio(tp, tp + fn_);
        specificity[c] = ratio(tn, tn + fp);
    }
    Ok(Metrics {
        accuracy: m.trace() as f64 / total as f64,
        sensitivity,
        specificity,
    })
}

/// Accuracy over all epochs pooled, and the mean of per-record accuracies.
pub fn pooled_and_mean_accuracy(per_record: &[ConfusionMatrix]) -> Result<(f64, f64)> {
    let mut pooled = ConfusionMatrix::default();
    let mut accs = Vec::with_capacity(per_record.len());
    for m in per_record {
        pooled.add(m);
        accs.push(metrics(m)?.accuracy);
    }
    if accs.is_empty() {
        return Err(Error::Empty("records"));
    }
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    Ok((metrics(&pooled)?.accuracy, mean))
}

fn fmt_metric(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| format!("{x}"))
}

/// `key=value` lines, one per metric.
pub fn metrics_report(per_record: &[ConfusionMatrix]) -> Result<String> {
    let (pooled_acc, mean_acc) = pooled_and_mean_accuracy(per_record)?;
    let mut pooled = ConfusionMatrix::default();
    for m in per_record {
        pooled.add(m);
    }
    let met = metrics(&pooled)?;
    let mut out = String::new();
    writeln!(out, "records={}", per_record.len()).unwrap();
    writeln!(out, "epochs={}", pooled.total()).unwrap();
    writeln!(out, "accuracy_pooled={pooled_acc}").unwrap();
    writeln!(out, "accuracy_record_mean={mean_acc}").unwrap();
    for (r, rs) in StageLabel::CLASSES.iter().enumerate() {
        for (p, ps) in StageLabel::CLASSES.iter().enumerate() {
            writeln!(
                out,
                "confusion.{}.{}={}",
                rs.as_str().to_lowercase(),
                ps.as_str().to_lowercase(),
                pooled.counts[r][p]
            )
            .unwrap();
        }
    }
    for (c, s) in StageLabel::CLASSES.iter().enumerate() {
        let name = s.as_str().to_lowercase();
        writeln!(out, "sensitivity.{name}={}", fmt_metric(met.sensitivity[c])).unwrap();
        writeln!(out, "specificity.{name}={}", fmt_metric(met.specificity[c])).unwrap();
    }
    Ok(out)
}

pub const HYPNOGRAM_HEADER: &str = "epoch_index,start_s,stage,score_wake,score_rem,score_nrem";

pub fn write_hypnogram_csv(h: &Hypnogram) -> String {
    let mut out = String::from(HYPNOGRAM_HEADER);
    out.push('\n');
    for e in &h.entries {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            e.epoch_index,
            e.epoch_index as f64 * EPOCH_SECONDS,
            e.stage,
            e.scores[0],
            e.scores[1],
            e.scores[2]
        )
        .unwrap();
    }
    out
}

pub fn read_hypnogram_csv<R: BufRead>(reader: R, source: &str, record_id: &str) -> Result<Hypnogram> {
    let parse_err = |line: usize, message: String| Error::Parse {
        source_name: source.to_string(),
        line,
        message,
    };
    let mut entries: Vec<HypnogramEntry> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| parse_err(line_no, e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line == HYPNOGRAM_HEADER {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 6 {
            return Err(parse_err(line_no, format!("expected 6 fields, found {}", f.len())));
        }
        let epoch_index = f[0]
            .parse::<usize>()
            .map_err(|_| parse_err(line_no, format!("invalid epoch index {:?}", f[0])))?;
        let stage = f[2]
            .parse::<StageLabel>()
            .map_err(|_| parse_err(line_no, format!("invalid stage {:?}", f[2])))?;
        let mut scores = [0.0f32; 3];
        for (s, text) in scores.iter_mut().zip(&f[3..]) {
            *s = text
                .parse()
                .map_err(|_| parse_err(line_no, format!("invalid score {text:?}")))?;
        }
        if entries.last().is_some_and(|e| e.epoch_index >= epoch_index) {
            return Err(parse_err(line_no, "epoch indices must be strictly increasing".into()));
        }
        entries.push(HypnogramEntry {
            epoch_index,
            stage,
            scores,
        });
    }
    Ok(Hypnogram {
        record_id: record_id.to_string(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use StageLabel::*;

    fn dec(stage: StageLabel, scores: [f32; 3]) -> EpochDecode {
        EpochDecode { stage, scores }
    }

    fn hyp(stages: &[StageLabel]) -> Hypnogram {
        Hypnogram {
            record_id: "r".into(),
            entries: stages
                .iter()
                .enumerate()
                .map(|(i, s)| HypnogramEntry {
                    epoch_index: i,
                    stage: *s,
                    scores: [1.0, 0.0, 0.0],
                })
                .collect(),
        }
    }

    #[test]
    fn assemble_one_window() {
        let d = WindowDecode {
            targets: (5..12).collect(),
            epochs: vec![dec(Nrem, [0.1, 0.1, 0.8]); 7],
        };
        let h = assemble_hypnogram("r", &[d]).unwrap();
        assert_eq!(h.entries.len(), 7);
        assert_eq!(h.entries[0].epoch_index, 5);
    }

    #[test]
    fn assemble_disjoint_windows_sorted() {
        let a = WindowDecode {
            targets: vec![12, 13],
            epochs: vec![dec(Rem, [0.2, 0.7, 0.1]); 2],
        };
        let b = WindowDecode {
            targets: vec![5, 6],
            epochs: vec![dec(Wake, [0.7, 0.2, 0.1]); 2],
        };
        let h = assemble_hypnogram("r", &[a, b]).unwrap();
        let idx: Vec<usize> = h.entries.iter().map(|e| e.epoch_index).collect();
        assert_eq!(idx, vec![5, 6, 12, 13]);
    }

    #[test]
    fn assemble_overlap_averages_and_ties_to_wake() {
        let a = WindowDecode {
            targets: vec![3],
            epochs: vec![dec(Wake, [0.6, 0.2, 0.2])],
        };
        let b = WindowDecode {
            targets: vec![3],
            epochs: vec![dec(Rem, [0.2, 0.6, 0.2])],
        };
        let h = assemble_hypnogram("r", &[a, b]).unwrap();
        assert_eq!(h.entries.len(), 1);
        let s = h.entries[0].scores;
        assert!((s[0] - 0.4).abs() < 1e-7 && (s[1] - 0.4).abs() < 1e-7 && (s[2] - 0.2).abs() < 1e-7);
        assert_eq!(h.entries[0].stage, Wake);
    }

    #[test]
    fn assemble_empty() {
        assert!(assemble_hypnogram("r", &[]).is_err());
    }

    #[test]
    fn perfect_prediction_is_diagonal() {
        let stages = [Wake, Rem, Nrem, Nrem, Wake];
        let h = hyp(&stages);
        let reference: Vec<_> = stages.iter().enumerate().map(|(i, s)| (i, *s)).collect();
        let m = confusion(&h, &reference).unwrap();
        assert_eq!(m.counts, [[2, 0, 0], [0, 1, 0], [0, 0, 2]]);
        let met = metrics(&m).unwrap();
        assert_eq!(met.accuracy, 1.0);
        assert!(met.sensitivity.iter().all(|s| *s == Some(1.0)));
    }

    #[test]
    fn all_wake_vs_all_nrem() {
        let h = hyp(&[Wake; 10]);
        let reference: Vec<_> = (0..10).map(|i| (i, Nrem)).collect();
        let m = confusion(&h, &reference).unwrap();
        assert_eq!(m.counts, [[0, 0, 0], [0, 0, 0], [10, 0, 0]]);
    }

    #[test]
    fn hand_tallied_six_epochs() {
        // ref:  W  W  R  N  N  ?
        // pred: W  R  R  N  W  N
        let h = hyp(&[Wake, Rem, Rem, Nrem, Wake, Nrem]);
        let reference = vec![(0, Wake), (1, Wake), (2, Rem), (3, Nrem), (4, Nrem), (5, Unknown)];
        let m = confusion(&h, &reference).unwrap();
        assert_eq!(m.counts, [[1, 1, 0], [0, 1, 0], [1, 0, 1]]);
        assert_eq!(m.total(), 5);
    }

    #[test]
    fn no_overlap() {
        let h = hyp(&[Wake; 3]);
        assert!(matches!(confusion(&h, &[(10, Wake)]), Err(Error::NoOverlap)));
    }

    #[test]
    fn uniform_matrix() {
        let m = ConfusionMatrix::from_counts([[1; 3]; 3]);
        assert!((metrics(&m).unwrap().accuracy - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn worked_matrix() {
        let m = ConfusionMatrix::from_counts([[5, 1, 0], [2, 7, 1], [0, 1, 8]]);
        let met = metrics(&m).unwrap();
        assert_eq!(met.accuracy, 0.8);
        assert_eq!(met.sensitivity[1], Some(0.7));
    }

    #[test]
    fn empty_class_is_undefined() {
        let m = ConfusionMatrix::from_counts([[3, 0, 0], [0, 0, 0], [1, 0, 4]]);
        let met = metrics(&m).unwrap();
        assert_eq!(met.sensitivity[1], None);
        assert_eq!(met.specificity[1], Some(1.0));
        let report = metrics_report(&[m]).unwrap();
        assert!(report.contains("sensitivity.rem=undefined"));
        assert!(metrics(&ConfusionMatrix::default()).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let h = Hypnogram {
            record_id: "r".into(),
            entries: vec![
                HypnogramEntry {
                    epoch_index: 5,
                    stage: Nrem,
                    scores: [0.1, 0.2, 0.7],
                },
                HypnogramEntry {
                    epoch_index: 6,
                    stage: Wake,
                    scores: [0.5, 0.25, 0.25],
                },
            ],
        };
        let text = write_hypnogram_csv(&h);
        assert!(text.starts_with(HYPNOGRAM_HEADER));
        assert!(text.contains("5,150,NREM,"));
        let back = read_hypnogram_csv(text.as_bytes(), "h.csv", "r").unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn mean_vs_pooled_accuracy() {
        let a = ConfusionMatrix::from_counts([[1, 0, 0], [0, 0, 0], [0, 0, 0]]);
        let b = ConfusionMatrix::from_counts([[1, 1, 0], [0, 0, 0], [0, 0, 1]]);
        let (pooled, mean) = pooled_and_mean_accuracy(&[a, b]).unwrap();
        assert!((pooled - 0.75).abs() < 1e-12);
        assert!((mean - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-12);
    }
}
