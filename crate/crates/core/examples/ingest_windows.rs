//! Synthesize a 20 minute night, resample it to 4 Hz windows and inspect the
//! three channels (HRV, movement, quality).

use sleepnet::physio::{make_windows, MovementEvent, RrEvent, SleepRecord};

fn main() -> sleepnet::Result<()> {
    let mut rr = Vec::new();
    let mut t: f64 = 0.0;
    while t < 1200.0 {
        // a 60 s beat-free gap in the middle
        if !(600.0..660.0).contains(&t) {
            let rr_ms = 950.0 + 60.0 * (t / 25.0).sin();
            rr.push(RrEvent { time_s: t, rr_ms });
        }
        t += 0.95;
    }
    let movement = vec![MovementEvent {
        start_s: 300.0,
        end_s: 310.0,
    }];
    let record = SleepRecord::new("synthetic", rr, movement, vec![])?;

    let windows = make_windows(&record, 7)?;
    println!("{} s record -> {} windows", record.duration_s(), windows.len());
    for w in &windows {
        let s = &w.series;
        let moving = (0..s.length()).filter(|t| s.get(*t, 1) > 0.0).count();
        let gaps = (0..s.length()).filter(|t| s.get(*t, 2) == 0.0).count();
        let mean = s.channel(0).iter().sum::<f32>() / s.length() as f32;
        println!(
            "  start {:>6.0} s  epochs {:?}  mean RR {mean:.3} s  moving samples {moving:>3}  gap samples {gaps:>3}",
            w.start_s, w.target_epochs
        );
    }
    Ok(())
}
