//! Score a predicted hypnogram against reference stages.

use sleepnet::eval::{confusion, metrics_report, Hypnogram, HypnogramEntry};
use sleepnet::physio::{merge_stage_text, StageLabel};

fn main() -> sleepnet::Result<()> {
    let reference = ["W", "W", "N1", "N2", "N2", "N3", "N3", "REM", "REM", "N2", "W", "?"];
    let predicted = [
        "WAKE", "WAKE", "WAKE", "NREM", "NREM", "NREM", "NREM", "REM", "NREM", "NREM", "REM", "NREM",
    ];

    let reference: Vec<(usize, StageLabel)> = reference
        .iter()
        .enumerate()
        .map(|(i, s)| Ok((i, merge_stage_text(s)?)))
        .collect::<sleepnet::Result<_>>()?;
    let entries = predicted
        .iter()
        .enumerate()
        .map(|(epoch_index, s)| HypnogramEntry {
            epoch_index,
            stage: s.parse().unwrap(),
            scores: [0.0; 3],
        })
        .collect();
    let h = Hypnogram {
        record_id: "demo".into(),
        entries,
    };

    let m = confusion(&h, &reference)?;
    print!("{}", metrics_report(&[m])?);
    Ok(())
}
