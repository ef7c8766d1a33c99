use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::blob::{BlobReader, BlobWriter};
use crate::physio::record::{SleepRecord, EPOCH_SECONDS};
use crate::physio::resample::{movement_channel, resample_hrv, ResampleConfig};
use crate::tensor::Series1D;

/// Channel layout of a model-ready window.
pub const HRV_CHANNEL: usize = 0;
pub const MOVEMENT_CHANNEL: usize = 1;
pub const QUALITY_CHANNEL: usize = 2;
pub const WINDOW_CHANNELS: usize = 3;

/// Scored epochs per window and their offset from the window's first epoch.
pub const TARGET_EPOCHS: usize = 7;
pub const TARGET_OFFSET: usize = 5;
pub const DEFAULT_STRIDE_EPOCHS: usize = 7;

/// A 512 s window (2048 samples at 4 Hz): HRV, movement and quality channels.
#[derive(Debug, Clone, PartialEq)]
pub struct HrvWindow {
    pub series: Series1D,
    pub start_s: f64,
    /// Absolute epoch indices scored from this window, in time order.
    pub target_epochs: Vec<usize>,
}

/// Epoch indices a window starting at epoch `first_epoch` is scored on: the
/// seven consecutive epochs centered in its 17-epoch span.
pub fn window_targets(first_epoch: usize) -> Vec<usize> {
    (first_epoch + TARGET_OFFSET..first_epoch + TARGET_OFFSET + TARGET_EPOCHS).collect()
}

/// Number of windows a record of `duration_s` yields.
pub fn window_count(duration_s: f64, stride_epochs: usize, cfg: &ResampleConfig) -> usize {
    let span = cfg.window_seconds();
    if duration_s < span || stride_epochs == 0 {
        return 0;
    }
    ((duration_s - span) / (stride_epochs as f64 * EPOCH_SECONDS)).floor() as usize + 1
}

pub fn make_windows(record: &SleepRecord, stride_epochs: usize) -> Result<Vec<HrvWindow>> {
    make_windows_with(record, stride_epochs, &ResampleConfig::default())
}

pub fn make_windows_with(record: &SleepRecord, stride_epochs: usize, cfg: &ResampleConfig) -> Result<Vec<HrvWindow>> {
    if stride_epochs == 0 {
        return Err(Error::InvalidParameter("stride must be at least one epoch".into()));
    }
    let duration = record.duration_s();
    let count = window_count(duration, stride_epochs, cfg);
    if count == 0 {
        return Err(Error::RecordTooShort {
            duration_s: duration,
            required_s: cfg.window_seconds(),
        });
    }
    (0..count)
        .map(|w| {
            let first_epoch = w * stride_epochs;
            let start_s = first_epoch as f64 * EPOCH_SECONDS;
            let (hrv, quality) = resample_hrv(record.rr_events(), start_s, cfg)?;
            let movement = movement_channel(record.movement_events(), start_s, cfg.length, cfg.rate_hz);
            let mut data = Vec::with_capacity(cfg.length * WINDOW_CHANNELS);
            for k in 0..cfg.length {
                data.extend([hrv[k], movement[k], quality[k]]);
            }
            Ok(HrvWindow {
                series: Series1D::from_vec(cfg.length, WINDOW_CHANNELS, data)?,
                start_s,
                target_epochs: window_targets(first_epoch),
            })
        })
        .collect()
}

const WINDOW_MAGIC: &[u8; 4] = b"SNWF";
const WINDOW_VERSION: u32 = 1;

/// Binary window dump, little-endian:
///
/// ```text
/// "SNWF" u32 version u32 id_len id_bytes u32 count u32 length u32 channels
/// per window: f64 start_s, u32 n_targets, n_targets x u32, length*channels x f32
/// ```
pub fn encode_windows(record_id: &str, windows: &[HrvWindow]) -> Result<Vec<u8>> {
    let (length, channels) = windows
        .first()
        .map_or((0, 0), |w| (w.series.length(), w.series.channels()));
    let mut w = BlobWriter::new();
    w.bytes(WINDOW_MAGIC);
    w.u32(WINDOW_VERSION);
    w.u32(record_id.len() as u32);
    w.bytes(record_id.as_bytes());
    w.u32(windows.len() as u32);
    w.u32(length as u32);
    w.u32(channels as u32);
    for win in windows {
        if win.series.length() != length || win.series.channels() != channels {
            return Err(Error::InvalidParameter(
                "all windows in a file must share one shape".into(),
            ));
        }
        w.f64(win.start_s);
        w.u32(win.target_epochs.len() as u32);
        for t in &win.target_epochs {
            w.u32(*t as u32);
        }
        w.f32s(win.series.data());
    }
    Ok(w.into_bytes())
}

pub fn decode_windows(bytes: &[u8]) -> Result<(String, Vec<HrvWindow>)> {
    let corrupt = |m: &str| Error::Manifest(format!("window file: {m}"));
    let mut r = BlobReader::new(bytes);
    let need = |r: &BlobReader<'_>, n: usize| {
        if r.remaining() < n {
            Err(corrupt("truncated"))
        } else {
            Ok(())
        }
    };
    need(&r, 12)?;
    if r.bytes(4) != WINDOW_MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = r.u32();
    if version != WINDOW_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            supported: WINDOW_VERSION,
        });
    }
    let id_len = r.u32() as usize;
    need(&r, id_len + 12)?;
    let record_id = String::from_utf8(r.bytes(id_len).to_vec()).map_err(|_| corrupt("record id is not UTF-8"))?;
    let count = r.u32() as usize;
    let length = r.u32() as usize;
    let channels = r.u32() as usize;
    let mut windows = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        need(&r, 12)?;
        let start_s = r.f64();
        let n_targets = r.u32() as usize;
        need(&r, n_targets.saturating_mul(4))?;
        let target_epochs = (0..n_targets).map(|_| r.u32() as usize).collect();
        let n = length.checked_mul(channels).ok_or_else(|| corrupt("shape overflows"))?;
        need(&r, n.saturating_mul(4))?;
        let series = Series1D::from_vec(length, channels, r.f32s(n))?;
        windows.push(HrvWindow {
            series,
            start_s,
            target_epochs,
        });
    }
    if r.remaining() != 0 {
        return Err(corrupt("trailing bytes"));
    }
    Ok((record_id, windows))
}

pub fn write_windows(path: impl AsRef<Path>, record_id: &str, windows: &[HrvWindow]) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_windows(record_id, windows)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_windows(path: impl AsRef<Path>) -> Result<(String, Vec<HrvWindow>)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_windows(&bytes)
}
