//! End to end: synthetic record -> windows -> random-weight CNN -> hypnogram CSV.

use sleepnet::cli::infer_windows;
use sleepnet::physio::{make_windows, RrEvent, SleepRecord};
use sleepnet::zoo::{build_paper_cnn, HeadConfig, WeightInit};

fn main() -> anyhow::Result<()> {
    let rr: Vec<RrEvent> = (0..1000)
        .map(|i| {
            let time_s = i as f64 * 0.9;
            RrEvent {
                time_s,
                rr_ms: 900.0 + 40.0 * (time_s / 50.0).cos(),
            }
        })
        .collect();
    let record = SleepRecord::new("demo", rr, vec![], vec![])?;
    let windows = make_windows(&record, 7)?;
    let model = build_paper_cnn(HeadConfig::default(), 3, WeightInit::Uniform { seed: 7 })?;
    print!("{}", infer_windows(&model, &record.record_id, &windows)?);
    Ok(())
}
