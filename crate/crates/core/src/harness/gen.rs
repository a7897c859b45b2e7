//! Seeded synthetic sensor traces.
//!
//! Every generator is a pure function of its kind and [`GenParams`]; the
//! random stream is ChaCha8 seeded with `rng_seed` via `seed_from_u64`, and
//! Gaussian draws go through `rand_distr::Normal`. The rest orientation has
//! gravity on the y axis, `(0, 9.81, 0)` m/s², and taps push mostly along z.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use thiserror::Error;

use crate::sensor::{AccelSample, AccelTrace, Millis, ProxSample, ProxTrace};

/// Recorded in generated file headers.
pub const RNG_ALGORITHM: &str = "chacha8 (rand_chacha 0.9 seed_from_u64) + rand_distr 0.5 Normal";

pub const GRAVITY: f64 = 9.81;
pub const PROX_NEAR_CM: f64 = 0.0;
pub const PROX_FAR_CM: f64 = 5.0;

const TAP_AXIS_WEIGHTS: [f64; 3] = [0.35, 0.5, 1.0];
const TAP_SHAPE_JITTER: f64 = 0.1;
const TAP_CENTER_JITTER_MS: f64 = 12.0;
const TAP_SPACING_FACTOR: f64 = 1.5;
const WINDOW_MARGIN_MS: f64 = 150.0;

#[derive(Debug, Clone, PartialEq)]
pub struct GenParams {
    pub rng_seed: u64,
    pub sample_rate_hz: u32,
    /// Length of one accelerometer window.
    pub window_ms: Millis,
    pub noise_sigma: f64,
    pub impulse_amplitude: f64,
    pub impulse_width_ms: f64,
    pub taps_per_window: u8,
    pub prox_transition_period_ms: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            rng_seed: 42,
            sample_rate_hz: 50,
            window_ms: 2000,
            noise_sigma: 0.05,
            impulse_amplitude: 6.0,
            impulse_width_ms: 250.0,
            taps_per_window: 1,
            prox_transition_period_ms: 180.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("invalid generator parameter: {0}")]
    InvalidParam(String),
    #[error("{count} impulses of {width_ms} ms do not fit in a {window_ms} ms window")]
    ImpulsesDontFit { count: u8, width_ms: f64, window_ms: Millis },
}

impl GenParams {
    pub fn with_seed(&self, seed: u64) -> Self {
        Self { rng_seed: seed, ..self.clone() }
    }

    pub fn with_taps(&self, taps: u8) -> Self {
        Self { taps_per_window: taps, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: &str| Err(GenError::InvalidParam(m.to_string()));
        if self.sample_rate_hz == 0 {
            return bad("sample_rate_hz must be positive");
        }
        if self.window_ms == 0 {
            return bad("window_ms must be positive");
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma > 0.0) {
            return bad("noise_sigma must be positive");
        }
        if !(self.impulse_amplitude.is_finite() && self.impulse_amplitude >= 0.0) {
            return bad("impulse_amplitude must be non-negative");
        }
        if !(self.impulse_width_ms.is_finite() && self.impulse_width_ms > 0.0) {
            return bad("impulse_width_ms must be positive");
        }
        if !(1..=3).contains(&self.taps_per_window) {
            return bad("taps_per_window must be 1, 2 or 3");
        }
        if !(self.prox_transition_period_ms.is_finite() && self.prox_transition_period_ms > 0.0) {
            return bad("prox_transition_period_ms must be positive");
        }
        Ok(())
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.rng_seed)
    }

    fn timestamps(&self, duration_ms: Millis) -> Vec<Millis> {
        let count = duration_ms * self.sample_rate_hz as u64 / 1000;
        (0..count).map(|k| k * 1000 / self.sample_rate_hz as u64).collect()
    }
}

/// Derives the seed of item `index` in a corpus from a base seed and a corpus tag.
pub fn derive_seed(base: u64, tag: u64, index: u64) -> u64 {
    // splitmix64 finalizer over the combined inputs
    let mut z = base ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn normal(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    Normal::new(0.0, sigma).expect("finite positive sigma").sample(rng)
}

fn half_sine(t: f64, center: f64, width: f64) -> f64 {
    let x = (t - center) / width + 0.5;
    if (0.0..=1.0).contains(&x) {
        (PI * x).sin()
    } else {
        0.0
    }
}

/// Rest noise around gravity for every timestamp.
fn rest(rng: &mut ChaCha8Rng, times: &[Millis], sigma: f64) -> Vec<[f64; 3]> {
    times.iter().map(|_| [normal(rng, sigma), GRAVITY + normal(rng, sigma), normal(rng, sigma)]).collect()
}

fn assemble(times: &[Millis], values: Vec<[f64; 3]>, label: &str) -> AccelTrace {
    let samples = times.iter().zip(values).map(|(&t, [x, y, z])| AccelSample::new(t, x, y, z)).collect();
    AccelTrace::new(samples, Some(label.to_string())).expect("generated timestamps increase")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TapGesture {
    Once,
    Twice,
    Thrice,
}

impl TapGesture {
    pub const ALL: [TapGesture; 3] = [TapGesture::Once, TapGesture::Twice, TapGesture::Thrice];

    pub fn taps(self) -> u8 {
        match self {
            TapGesture::Once => 1,
            TapGesture::Twice => 2,
            TapGesture::Thrice => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TapGesture::Once => "Tapping Once",
            TapGesture::Twice => "Tapping Twice",
            TapGesture::Thrice => "Tapping Thrice",
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            TapGesture::Once => "tap-once",
            TapGesture::Twice => "tap-twice",
            TapGesture::Thrice => "tap-thrice",
        }
    }
}

/// One 2 s window with `taps_per_window` half-sine impulses over rest noise.
///
/// Each impulse is dominant on z with smaller components on x and y; its
/// amplitude, width and axis weights vary by ±10 % (1σ) and the group centre
/// wanders by 30 ms (1σ) around the middle of the window.
pub fn gen_tap_trace(p: &GenParams) -> Result<AccelTrace, GenError> {
    p.validate()?;
    let count = p.taps_per_window;
    let spacing = TAP_SPACING_FACTOR * p.impulse_width_ms;
    let extent = (count as f64 - 1.0) * spacing + p.impulse_width_ms;
    if extent + 2.0 * WINDOW_MARGIN_MS > p.window_ms as f64 {
        return Err(GenError::ImpulsesDontFit { count, width_ms: p.impulse_width_ms, window_ms: p.window_ms });
    }
    let mut rng = p.rng();
    let times = p.timestamps(p.window_ms);
    let mut values = rest(&mut rng, &times, p.noise_sigma);

    let center = p.window_ms as f64 / 2.0 + normal(&mut rng, TAP_CENTER_JITTER_MS);
    let first = center - (count as f64 - 1.0) * spacing / 2.0;
    for k in 0..count {
        let c = first + k as f64 * spacing + normal(&mut rng, TAP_SHAPE_JITTER * p.impulse_width_ms / 2.0);
        let amp = p.impulse_amplitude * (1.0 + normal(&mut rng, TAP_SHAPE_JITTER));
        let width = p.impulse_width_ms * (1.0 + normal(&mut rng, TAP_SHAPE_JITTER));
        let weights = TAP_AXIS_WEIGHTS.map(|w| w * (1.0 + normal(&mut rng, TAP_SHAPE_JITTER)));
        for (&t, v) in times.iter().zip(values.iter_mut()) {
            let h = amp * half_sine(t as f64, c, width);
            for axis in 0..3 {
                v[axis] += weights[axis] * h;
            }
        }
    }
    let label = match count {
        1 => TapGesture::Once.slug(),
        2 => TapGesture::Twice.slug(),
        _ => TapGesture::Thrice.slug(),
    };
    Ok(assemble(&times, values, label))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activity {
    Walking,
    Stairs,
    Still,
    ScreenTouch,
    PhoneMovement,
}

impl Activity {
    pub const ALL: [Activity; 5] =
        [Activity::Walking, Activity::Stairs, Activity::Still, Activity::ScreenTouch, Activity::PhoneMovement];

    pub fn name(self) -> &'static str {
        match self {
            Activity::Walking => "Walking",
            Activity::Stairs => "Walking Stairs",
            Activity::Still => "Still",
            Activity::ScreenTouch => "Screen-touch Activities",
            Activity::PhoneMovement => "Phone Movement",
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            Activity::Walking => "walking",
            Activity::Stairs => "stairs",
            Activity::Still => "still",
            Activity::ScreenTouch => "screen-touch",
            Activity::PhoneMovement => "phone-movement",
        }
    }
}

impl FromStr for Activity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Activity::ALL
            .into_iter()
            .find(|a| a.slug() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown activity {s:?}"))
    }
}

impl fmt::Display for Activity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

/// Probability that a phone-movement window contains a tap-like jerk.
const MOVEMENT_JERK_PROBABILITY: f64 = 0.04;

/// A 2 s window of a benign activity.
pub fn gen_activity_trace(kind: Activity, p: &GenParams) -> Result<AccelTrace, GenError> {
    gen_activity_stream(kind, p.window_ms, p)
}

/// An activity recording of arbitrary length.
pub fn gen_activity_stream(kind: Activity, duration_ms: Millis, p: &GenParams) -> Result<AccelTrace, GenError> {
    p.validate()?;
    let mut rng = p.rng();
    let times = p.timestamps(duration_ms);
    if times.len() < 2 {
        return Err(GenError::InvalidParam(format!("{duration_ms} ms holds fewer than 2 samples")));
    }
    let mut values = rest(&mut rng, &times, p.noise_sigma);
    let secs = |t: Millis| t as f64 / 1000.0;
    match kind {
        Activity::Still => {}
        Activity::Walking | Activity::Stairs => {
            let stairs = kind == Activity::Stairs;
            let freq = if stairs { rng.random_range(1.3..1.7) } else { rng.random_range(1.7..2.1) };
            let base = if stairs { [0.9, 2.6, 1.4] } else { [0.6, 2.0, 1.0] };
            let phase: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.0..2.0 * PI));
            let total_steps = (secs(duration_ms) * freq).ceil() as usize + 2;
            // Stairs vary step to step; walking keeps a steady stride.
            let step_gain: Vec<f64> = (0..total_steps)
                .map(|_| if stairs { 1.0 + normal(&mut rng, 0.35) } else { 1.0 + normal(&mut rng, 0.05) })
                .collect();
            for (&t, v) in times.iter().zip(values.iter_mut()) {
                let cycles = secs(t) * freq;
                let gain = step_gain[cycles as usize];
                for axis in 0..3 {
                    let w = 2.0 * PI * cycles + phase[axis];
                    v[axis] += gain * base[axis] * (w.sin() + 0.3 * (2.0 * w).sin());
                }
            }
        }
        Activity::ScreenTouch => {
            let blips = rng.random_range(3..=8) * (duration_ms as usize).div_ceil(2000);
            for _ in 0..blips {
                let c = rng.random_range(0.0..duration_ms as f64);
                let amp = 1.5 * p.noise_sigma * rng.random_range(0.5..1.0);
                for (&t, v) in times.iter().zip(values.iter_mut()) {
                    v[2] += amp * half_sine(t as f64, c, 40.0);
                }
            }
        }
        Activity::PhoneMovement => {
            let comps: Vec<([f64; 3], f64, f64)> = (0..3)
                .map(|_| {
                    let amp = std::array::from_fn(|_| rng.random_range(-3.0..3.0));
                    (amp, rng.random_range(0.25..1.0), rng.random_range(0.0..2.0 * PI))
                })
                .collect();
            for (&t, v) in times.iter().zip(values.iter_mut()) {
                for (amp, f, ph) in &comps {
                    let s = (2.0 * PI * f * secs(t) + ph).sin();
                    for axis in 0..3 {
                        v[axis] += amp[axis] * s;
                    }
                }
            }
            if rng.random_bool(MOVEMENT_JERK_PROBABILITY) {
                let c = rng.random_range(0.0..duration_ms as f64);
                let amp = p.impulse_amplitude * rng.random_range(0.5..1.2);
                let width = p.impulse_width_ms * rng.random_range(0.7..1.3);
                let weights: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
                for (&t, v) in times.iter().zip(values.iter_mut()) {
                    let h = amp * half_sine(t as f64, c, width);
                    for axis in 0..3 {
                        v[axis] += weights[axis] * h;
                    }
                }
            }
        }
    }
    Ok(assemble(&times, values, kind.slug()))
}

/// Replaces the samples of `stream` covering `gesture` so that the gesture
/// ends at `end_t`. Both traces must share a sample rate.
pub fn embed_gesture(stream: &AccelTrace, gesture: &AccelTrace, end_t: Millis) -> Option<AccelTrace> {
    let start_t = end_t.checked_sub(gesture.span())?;
    let placed = gesture.rebased(start_t);
    let mut samples: Vec<AccelSample> =
        stream.samples().iter().filter(|s| s.t < start_t || s.t > end_t).copied().collect();
    samples.extend_from_slice(placed.samples());
    samples.sort_by_key(|s| s.t);
    AccelTrace::new(samples, stream.label().map(str::to_string)).ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProxKind {
    Wave,
    TapRub,
    Walking,
    DropFall,
    Daily,
    ScreenTouch,
    GameO1,
    GameO2,
    Bump,
}

impl ProxKind {
    pub const ALL: [ProxKind; 9] = [
        ProxKind::Wave,
        ProxKind::TapRub,
        ProxKind::Walking,
        ProxKind::DropFall,
        ProxKind::Daily,
        ProxKind::ScreenTouch,
        ProxKind::GameO1,
        ProxKind::GameO2,
        ProxKind::Bump,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProxKind::Wave => "Hand Waving",
            ProxKind::TapRub => "Tapping / Rubbing",
            ProxKind::Walking => "Walking",
            ProxKind::DropFall => "Phone Drop/Fall",
            ProxKind::Daily => "Daily Activity",
            ProxKind::ScreenTouch => "Screen-touch Activities",
            ProxKind::GameO1 => "Game Play (O1)",
            ProxKind::GameO2 => "Game Play (O2)",
            ProxKind::Bump => "Bumping",
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            ProxKind::Wave => "wave",
            ProxKind::TapRub => "tap-rub",
            ProxKind::Walking => "prox-walking",
            ProxKind::DropFall => "drop-fall",
            ProxKind::Daily => "daily",
            ProxKind::ScreenTouch => "prox-screen-touch",
            ProxKind::GameO1 => "game-o1",
            ProxKind::GameO2 => "game-o2",
            ProxKind::Bump => "bump",
        }
    }

    pub fn is_gesture(self) -> bool {
        matches!(self, ProxKind::Wave | ProxKind::TapRub)
    }

    pub fn duration_ms(self) -> Millis {
        match self {
            ProxKind::Wave | ProxKind::TapRub => 4_000,
            ProxKind::DropFall | ProxKind::Bump => 10_000,
            ProxKind::Walking | ProxKind::ScreenTouch | ProxKind::GameO1 | ProxKind::GameO2 => 60_000,
            ProxKind::Daily => 300_000,
        }
    }
}

impl FromStr for ProxKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProxKind::ALL
            .into_iter()
            .find(|k| k.slug() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown proximity stream kind {s:?}"))
    }
}

/// Event-style proximity recording: a reading at t = 0, one per change, and
/// a closing reading at the end of the stream.
struct ProxBuilder {
    samples: Vec<ProxSample>,
    near: bool,
}

impl ProxBuilder {
    fn new(near: bool) -> Self {
        Self { samples: vec![ProxSample::new(0, Self::value(near))], near }
    }

    fn value(near: bool) -> f64 {
        if near {
            PROX_NEAR_CM
        } else {
            PROX_FAR_CM
        }
    }

    fn last_t(&self) -> Millis {
        self.samples.last().map_or(0, |s| s.t)
    }

    /// Flips the reading at `t` (bumped forward to stay strictly increasing).
    fn toggle(&mut self, t: f64) -> Millis {
        let t = (t.max(0.0).round() as Millis).max(self.last_t() + 1);
        self.near = !self.near;
        self.samples.push(ProxSample::new(t, Self::value(self.near)));
        t
    }

    fn finish(mut self, end: Millis, label: &str) -> ProxTrace {
        let end = end.max(self.last_t() + 1);
        self.samples.push(ProxSample::new(end, Self::value(self.near)));
        ProxTrace::new(self.samples, Some(label.to_string())).expect("builder keeps timestamps increasing")
    }
}

fn pick_weighted(rng: &mut ChaCha8Rng, choices: &[(u32, f64)]) -> u32 {
    let total: f64 = choices.iter().map(|c| c.1).sum();
    let mut x = rng.random_range(0.0..total);
    for &(v, w) in choices {
        if x < w {
            return v;
        }
        x -= w;
    }
    choices[choices.len() - 1].0
}

/// Probability that a game-play (O2) stream contains a rapid thumb combo.
const GAME_O2_COMBO_PROBABILITY: f64 = 0.065;

pub fn gen_prox_stream(kind: ProxKind, p: &GenParams) -> Result<ProxTrace, GenError> {
    p.validate()?;
    let mut rng = p.rng();
    let duration = kind.duration_ms();
    let period = p.prox_transition_period_ms;
    let trace = match kind {
        ProxKind::Wave | ProxKind::TapRub => {
            // Wave: a hand passes over the sensor (near then far) several
            // times. Tap/rub: a finger near the sensor, faster.
            let (passes, base) = if kind == ProxKind::Wave {
                (pick_weighted(&mut rng, &[(2, 0.04), (3, 0.5), (4, 0.36), (5, 0.1)]), period)
            } else {
                (pick_weighted(&mut rng, &[(2, 0.03), (3, 0.3), (4, 0.4), (5, 0.2), (6, 0.07)]), 0.7 * period)
            };
            let mut b = ProxBuilder::new(false);
            let mut t = rng.random_range(300.0..800.0);
            for _ in 0..passes * 2 {
                t = b.toggle(t) as f64;
                t += (base * (1.0 + normal(&mut rng, 0.25))).clamp(40.0, 1.8 * base);
            }
            b.finish(duration, kind.slug())
        }
        ProxKind::Walking => {
            // Stowed in a bag: mostly covered, the occasional slow shift.
            let mut b = ProxBuilder::new(true);
            let exp = Exp::new(1.0 / 15_000.0).expect("positive rate");
            let mut t = 3_000.0 + exp.sample(&mut rng);
            while t < duration as f64 {
                b.toggle(t);
                t += 3_000.0 + exp.sample(&mut rng);
            }
            b.finish(duration, kind.slug())
        }
        ProxKind::DropFall => {
            let mut b = ProxBuilder::new(false);
            let mut t = rng.random_range(1_000.0..4_000.0);
            t = b.toggle(t) as f64;
            if rng.random_bool(0.5) {
                t = b.toggle(t + rng.random_range(50.0..150.0)) as f64;
                t = b.toggle(t + rng.random_range(50.0..150.0)) as f64;
            }
            b.toggle(t + rng.random_range(2_000.0..4_000.0));
            b.finish(duration, kind.slug())
        }
        ProxKind::Daily => {
            // Calls and pocketing: covered for tens of seconds at a time.
            let mut b = ProxBuilder::new(false);
            let mut t = rng.random_range(2_000.0..20_000.0);
            while t < duration as f64 - 2_000.0 {
                t = b.toggle(t) as f64;
                let uncover = (t + rng.random_range(10_000.0..90_000.0)).min(duration as f64 - 1_000.0);
                t = b.toggle(uncover) as f64;
                t += rng.random_range(2_000.0..40_000.0);
            }
            b.finish(duration, kind.slug())
        }
        ProxKind::ScreenTouch => {
            let mut b = ProxBuilder::new(false);
            let exp = Exp::new(1.0 / 20_000.0).expect("positive rate");
            let mut t = 5_000.0 + exp.sample(&mut rng);
            while t < duration as f64 - 1_000.0 {
                t = b.toggle(t) as f64;
                t = b.toggle(t + rng.random_range(150.0..400.0)) as f64;
                t += 5_000.0 + exp.sample(&mut rng);
            }
            b.finish(duration, kind.slug())
        }
        ProxKind::GameO1 => {
            // Thumb rests on the sensor and lifts now and then.
            let mut b = ProxBuilder::new(true);
            let exp = Exp::new(1.0 / 5_000.0).expect("positive rate");
            let mut t = 2_000.0 + exp.sample(&mut rng);
            while t < duration as f64 - 1_000.0 {
                t = b.toggle(t) as f64;
                t = b.toggle(t + rng.random_range(300.0..800.0)) as f64;
                t += 2_000.0 + exp.sample(&mut rng);
            }
            b.finish(duration, kind.slug())
        }
        ProxKind::GameO2 => {
            // Thumb below the sensor: single flicks at least 800 ms apart,
            // occasionally a rapid three-flick combo.
            let mut b = ProxBuilder::new(false);
            let exp = Exp::new(1.0 / 2_200.0).expect("positive rate");
            let mut flick_times = Vec::new();
            let mut t = rng.random_range(500.0..2_500.0);
            while t < duration as f64 - 2_000.0 {
                flick_times.push(t);
                t += 800.0 + exp.sample(&mut rng);
            }
            let combo_at = if rng.random_bool(GAME_O2_COMBO_PROBABILITY) && !flick_times.is_empty() {
                Some(rng.random_range(0..flick_times.len()))
            } else {
                None
            };
            for (i, &start) in flick_times.iter().enumerate() {
                let flicks = if combo_at == Some(i) { 3 } else { 1 };
                let mut t = start.max(b.last_t() as f64 + 1.0);
                for _ in 0..flicks {
                    t = b.toggle(t) as f64;
                    t = b.toggle(t + rng.random_range(100.0..200.0)) as f64;
                    t += rng.random_range(80.0..160.0);
                }
            }
            b.finish(duration, kind.slug())
        }
        ProxKind::Bump => {
            let mut b = ProxBuilder::new(true);
            let mut t = rng.random_range(2_000.0..6_000.0);
            t = b.toggle(t) as f64;
            t = b.toggle(t + rng.random_range(60.0..200.0)) as f64;
            if rng.random_bool(0.5) {
                t = b.toggle(t + rng.random_range(300.0..800.0)) as f64;
                b.toggle(t + rng.random_range(60.0..200.0));
            }
            b.finish(duration, kind.slug())
        }
    };
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensor::Axis;

    #[test]
    fn tap_trace_is_seeded() {
        let p = GenParams::default();
        let a = gen_tap_trace(&p).unwrap();
        let b = gen_tap_trace(&p).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        assert_eq!(a.len(), 100);
        assert_eq!(a.end(), 1980);
        assert_ne!(a, gen_tap_trace(&p.with_seed(43)).unwrap());
    }

    #[test]
    fn zero_amplitude_is_noise() {
        let p = GenParams { impulse_amplitude: 0.0, ..GenParams::default() };
        let tr = gen_tap_trace(&p).unwrap();
        let max = tr.axis_values(Axis::Z).into_iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max < 6.0 * p.noise_sigma, "max {max}");
    }

    #[test]
    fn too_many_wide_impulses_rejected() {
        let p = GenParams { impulse_width_ms: 500.0, taps_per_window: 3, ..GenParams::default() };
        assert!(matches!(gen_tap_trace(&p), Err(GenError::ImpulsesDontFit { .. })));
        let p = GenParams { taps_per_window: 4, ..GenParams::default() };
        assert!(matches!(gen_tap_trace(&p), Err(GenError::InvalidParam(_))));
    }

    #[test]
    fn activity_streams_are_seeded() {
        let p = GenParams::default().with_seed(7);
        for kind in Activity::ALL {
            let a = gen_activity_trace(kind, &p).unwrap();
            assert_eq!(a, gen_activity_trace(kind, &p).unwrap());
            assert_eq!(a.len(), 100);
        }
    }

    #[test]
    fn prox_streams_are_valid_and_seeded() {
        let p = GenParams::default();
        for kind in ProxKind::ALL {
            let a = gen_prox_stream(kind, &p).unwrap();
            assert_eq!(a, gen_prox_stream(kind, &p).unwrap());
            assert_eq!(a.end(), kind.duration_ms());
        }
    }

    #[test]
    fn embed_places_gesture_at_end() {
        let p = GenParams::default();
        let stream = gen_activity_stream(Activity::Still, 10_000, &p).unwrap();
        let tap = gen_tap_trace(&p).unwrap();
        let out = embed_gesture(&stream, &tap, 5_000).unwrap();
        assert_eq!(out.len(), stream.len());
        let cut = out.slice_time(5_000 - tap.span(), 5_000).unwrap();
        assert_eq!(cut.axis_values(Axis::Z), tap.axis_values(Axis::Z));
    }

    #[test]
    fn seeds_differ_by_tag_and_index() {
        assert_ne!(derive_seed(1, 2, 3), derive_seed(1, 2, 4));
        assert_ne!(derive_seed(1, 2, 3), derive_seed(1, 3, 3));
        assert_eq!(derive_seed(9, 9, 9), derive_seed(9, 9, 9));
    }
}
