//! Wave / finger-tap / rub detection from proximity sensor changes.
//!
//! Every change time goes into a cyclic buffer of `wind_sz` slots. Once the
//! buffer is full, a change that arrives less than `wave_time_limit` after
//! the oldest buffered change opens an unlock window of `unlock_time_frame`.

use thiserror::Error;

use crate::sensor::{Millis, ProxTrace};

pub const DEFAULT_WIND_SZ: usize = 6;
pub const DEFAULT_WAVE_TIME_LIMIT_MS: Millis = 1500;
pub const DEFAULT_UNLOCK_TIME_FRAME_MS: Millis = 1000;
pub const DEFAULT_EPSILON_CM: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProxConfig {
    pub wind_sz: usize,
    pub wave_time_limit: Millis,
    pub unlock_time_frame: Millis,
}

impl Default for ProxConfig {
    fn default() -> Self {
        Self {
            wind_sz: DEFAULT_WIND_SZ,
            wave_time_limit: DEFAULT_WAVE_TIME_LIMIT_MS,
            unlock_time_frame: DEFAULT_UNLOCK_TIME_FRAME_MS,
        }
    }
}

impl ProxConfig {
    pub fn validate(&self) -> Result<(), ProxError> {
        if self.wind_sz < 2 {
            return Err(ProxError::InvalidConfig(format!("wind_sz must be at least 2, got {}", self.wind_sz)));
        }
        if self.wave_time_limit == 0 || self.unlock_time_frame == 0 {
            return Err(ProxError::InvalidConfig("durations must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProxError {
    #[error("change at {t} ms precedes the previous change at {last} ms")]
    NonMonotone { t: Millis, last: Millis },
    #[error("invalid proximity config: {0}")]
    InvalidConfig(String),
}

/// Half-open interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct UnlockWindow {
    pub start: Millis,
    pub end: Millis,
}

impl UnlockWindow {
    pub fn contains(&self, t: Millis) -> bool {
        self.start <= t && t < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProxDetectorState {
    change_times: Vec<Millis>,
    index: usize,
    filled: u64,
    last_change: Option<Millis>,
    unlock: Option<UnlockWindow>,
}

impl ProxDetectorState {
    pub fn new(cfg: &ProxConfig) -> Self {
        Self { change_times: vec![0; cfg.wind_sz], index: 0, filled: 0, last_change: None, unlock: None }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    /// Number of changes recorded so far.
    pub fn filled(&self) -> u64 {
        self.filled
    }

    pub fn unlock_until(&self) -> Option<Millis> {
        self.unlock.map(|w| w.end)
    }

    /// The current (possibly extended) unlock interval.
    pub fn unlock_window(&self) -> Option<UnlockWindow> {
        self.unlock
    }

    /// Records one proximity change at `t`.
    ///
    /// The time is stored at the current slot, compared with the slot after
    /// it (the oldest of the last `wind_sz` changes), and then the slot index
    /// advances. No unlock is possible until `wind_sz` changes have been
    /// seen. A qualifying change during an open window pushes its end out.
    pub fn on_change(&mut self, t: Millis, cfg: &ProxConfig) -> Result<Option<UnlockWindow>, ProxError> {
        if let Some(last) = self.last_change {
            if t < last {
                return Err(ProxError::NonMonotone { t, last });
            }
        }
        let size = self.change_times.len();
        self.change_times[self.index] = t;
        self.filled += 1;
        self.last_change = Some(t);

        let mut emitted = None;
        if self.filled >= size as u64 {
            let oldest = self.change_times[(self.index + 1) % size];
            let time_diff = t - oldest;
            if time_diff < cfg.wave_time_limit {
                let window = UnlockWindow { start: t, end: t + cfg.unlock_time_frame };
                self.unlock = Some(match self.unlock {
                    Some(open) if open.contains(t) => UnlockWindow { start: open.start, end: window.end },
                    _ => window,
                });
                emitted = Some(window);
            }
        }
        self.index = (self.index + 1) % size;
        Ok(emitted)
    }

    pub fn is_unlocked(&self, t: Millis) -> bool {
        self.unlock.is_some_and(|w| w.contains(t))
    }
}

/// Timestamps of samples whose value moved by more than `epsilon` from the
/// previous sample.
pub fn detect_changes(trace: &ProxTrace, epsilon: f64) -> Vec<Millis> {
    trace.samples().windows(2).filter(|w| (w[1].value - w[0].value).abs() > epsilon).map(|w| w[1].t).collect()
}

/// Feeds every change of `trace` through a fresh detector and returns the
/// emitted windows in order.
pub fn run_detector(trace: &ProxTrace, cfg: &ProxConfig, epsilon: f64) -> Result<Vec<UnlockWindow>, ProxError> {
    cfg.validate()?;
    let mut state = ProxDetectorState::new(cfg);
    let mut out = Vec::new();
    for t in detect_changes(trace, epsilon) {
        if let Some(w) = state.on_change(t, cfg)? {
            out.push(w);
        }
    }
    Ok(out)
}
