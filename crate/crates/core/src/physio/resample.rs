use crate::error::{Error, Result};
use crate::physio::record::{MovementEvent, RrEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HrvUnit {
    /// Interpolated RR duration in seconds.
    #[default]
    RrSeconds,
    /// Instantaneous heart rate, `60000 / rr_ms`.
    BeatsPerMinute,
}

impl HrvUnit {
    fn convert(self, rr_ms: f64) -> f64 {
        match self {
            HrvUnit::RrSeconds => rr_ms / 1000.0,
            HrvUnit::BeatsPerMinute => 60_000.0 / rr_ms,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResampleConfig {
    pub rate_hz: f64,
    pub length: usize,
    /// Samples farther than this from every beat are flagged as gaps.
    pub gap_s: f64,
    pub unit: HrvUnit,
}

impl Default for ResampleConfig {
    fn default() -> Self {
        ResampleConfig {
            rate_hz: 4.0,
            length: 2048,
            gap_s: 5.0,
            unit: HrvUnit::RrSeconds,
        }
    }
}

impl ResampleConfig {
    pub fn sample_time(&self, t0: f64, k: usize) -> f64 {
        t0 + k as f64 / self.rate_hz
    }

    pub fn window_seconds(&self) -> f64 {
        self.length as f64 / self.rate_hz
    }
}

/// Resample the RR tachogram on the grid `t0 + k / rate`.
///
/// Returns the HRV channel and a quality mask. The HRV channel is the
/// piecewise-linear interpolation of `(time, rr)`; before the first and after
/// the last beat it holds the nearest beat's value. A sample has quality 1
/// when some beat lies within `gap_s` of it, otherwise 0 (its value is still
/// the interpolation across the gap).
pub fn resample_hrv(events: &[RrEvent], t0: f64, cfg: &ResampleConfig) -> Result<(Vec<f32>, Vec<f32>)> {
    let t_end = cfg.sample_time(t0, cfg.length.saturating_sub(1));
    let usable = events
        .iter()
        .filter(|e| e.time_s >= t0 - cfg.gap_s && e.time_s <= t_end + cfg.gap_s)
        .count();
    if usable < 2 {
        return Err(Error::InsufficientRrEvents(usable));
    }
    let values: Vec<f64> = events.iter().map(|e| cfg.unit.convert(e.rr_ms)).collect();
    let mut hrv = Vec::with_capacity(cfg.length);
    let mut quality = Vec::with_capacity(cfg.length);
    for k in 0..cfg.length {
        let t = cfg.sample_time(t0, k);
        // first event strictly after t
        let hi = events.partition_point(|e| e.time_s <= t);
        let v = if hi == 0 {
            values[0]
        } else if hi == events.len() {
            values[hi - 1]
        } else {
            let (a, b) = (&events[hi - 1], &events[hi]);
            let frac = (t - a.time_s) / (b.time_s - a.time_s);
            values[hi - 1] + frac * (values[hi] - values[hi - 1])
        };
        let nearest = [hi.checked_sub(1), (hi < events.len()).then_some(hi)]
            .into_iter()
            .flatten()
            .map(|i| (events[i].time_s - t).abs())
            .fold(f64::INFINITY, f64::min);
        hrv.push(v as f32);
        quality.push(if nearest <= cfg.gap_s { 1.0 } else { 0.0 });
    }
    Ok((hrv, quality))
}

/// 1 where the sample time falls in some half-open `[start, end)` interval.
pub fn movement_channel(events: &[MovementEvent], t0: f64, length: usize, rate_hz: f64) -> Vec<f32> {
    (0..length)
        .map(|k| {
            let t = t0 + k as f64 / rate_hz;
            if events.iter().any(|m| m.start_s <= t && t < m.end_s) {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}
