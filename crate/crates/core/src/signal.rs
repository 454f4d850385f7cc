//! Synthetic EEG trials and their reduction to 480-D feature vectors.
//!
//! A trial is 400 ms of 8-channel data sampled at 200 Hz, time-locked to one
//! illumination. Preprocessing drops the first 100 ms and concatenates the
//! remaining 60 samples of each channel in channel-major order.
//!
//! Online and training sessions draw trials from a [`SignalStream`], which
//! keeps one continuous noise record and superimposes every evoked response
//! at its true onset. At short inter-trial intervals consecutive windows
//! overlap, so a trial also contains the tail of earlier responses.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::alphabet::SymbolId;
use crate::classifier::Label;
use crate::error::{Error, Result};
use crate::math::{exp, round, sqrt};
use crate::rng::SimRng;

pub const CHANNELS: usize = 8;
pub const CHANNEL_NAMES: [&str; CHANNELS] = ["C3", "Cz", "C4", "P3", "Pz", "P4", "O1", "O2"];
pub const SAMPLE_RATE_HZ: u32 = 200;
pub const SAMPLE_PERIOD_US: u64 = 1_000_000 / SAMPLE_RATE_HZ as u64;
/// Acquisition window per trial.
pub const ACQUISITION_MS: u32 = 400;
/// Leading part of each trial excluded from the feature vector.
pub const DISCARD_MS: u32 = 100;
pub const TRIAL_SAMPLES: usize = (ACQUISITION_MS * SAMPLE_RATE_HZ / 1000) as usize;
pub const DISCARD_SAMPLES: usize = (DISCARD_MS * SAMPLE_RATE_HZ / 1000) as usize;
pub const KEPT_SAMPLES: usize = TRIAL_SAMPLES - DISCARD_SAMPLES;
pub const FEATURE_DIM: usize = CHANNELS * KEPT_SAMPLES;

/// Lag-one autocorrelation of the simulated background EEG at 200 Hz.
pub const BACKGROUND_AR: f64 = 0.9;
/// Background level of the mid-SNR subject, µV.
pub const MID_SNR_SIGMA_UV: f64 = 8.0;

/// Full width at half maximum over the standard deviation of a Gaussian.
const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949;
/// Evoked responses older than this no longer reach a new window.
const RESPONSE_HORIZON_US: u64 = 1_000_000;

/// One 8 x 80 sample segment time-locked to a stimulus.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trial {
    /// Channel-major samples in µV: channel `c` occupies `c*80 .. (c+1)*80`.
    samples: Vec<f64>,
    pub label: Label,
    /// Symbols illuminated at onset.
    pub stimulus: Vec<SymbolId>,
    /// Onset in microseconds since the start of the session.
    pub onset_us: u64,
}

impl Trial {
    pub fn new(samples: Vec<f64>, label: Label, stimulus: Vec<SymbolId>, onset_us: u64) -> Result<Self> {
        if samples.len() != CHANNELS * TRIAL_SAMPLES {
            return Err(Error::InvalidTrial(format!(
                "expected {} samples, got {}",
                CHANNELS * TRIAL_SAMPLES,
                samples.len()
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidTrial("non-finite sample".into()));
        }
        Ok(Trial {
            samples,
            label,
            stimulus,
            onset_us,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.samples[c * TRIAL_SAMPLES..(c + 1) * TRIAL_SAMPLES]
    }

    pub fn sample(&self, c: usize, j: usize) -> f64 {
        self.samples[c * TRIAL_SAMPLES + j]
    }

    pub fn onset_s(&self) -> f64 {
        self.onset_us as f64 / 1e6
    }
}

/// One Gaussian-shaped deflection of the evoked response.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ErpComponent {
    pub name: String,
    /// Peak latency after stimulus onset.
    pub latency_ms: f64,
    /// Signed peak amplitude in µV before channel gains.
    pub amplitude_uv: f64,
    /// Full width at half maximum.
    pub width_ms: f64,
    pub gains: [f64; CHANNELS],
}

impl ErpComponent {
    pub fn value(&self, channel: usize, t_ms: f64) -> f64 {
        let sigma = self.width_ms / FWHM_PER_SIGMA;
        let z = (t_ms - self.latency_ms) / sigma;
        self.amplitude_uv * self.gains[channel] * exp(-0.5 * z * z)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ErpTemplate {
    pub components: Vec<ErpComponent>,
}

impl ErpTemplate {
    pub fn validate(&self) -> Result<()> {
        for c in &self.components {
            if !(0.0..=f64::from(ACQUISITION_MS)).contains(&c.latency_ms) {
                return Err(Error::param("erp.latency_ms", format!("{} outside [0, 400]", c.latency_ms)));
            }
            if !(c.width_ms > 0.0) {
                return Err(Error::param("erp.width_ms", "must be positive"));
            }
            if !c.amplitude_uv.is_finite() || c.gains.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        Ok(())
    }

    /// Response of `channel` at `t_ms` after onset.
    pub fn value(&self, channel: usize, t_ms: f64) -> f64 {
        self.components.iter().map(|c| c.value(channel, t_ms)).sum()
    }

    /// The noiseless 8 x 80 response to a stimulus at the window start.
    pub fn waveform(&self) -> Vec<f64> {
        let mut out = vec![0.0; CHANNELS * TRIAL_SAMPLES];
        for c in 0..CHANNELS {
            for j in 0..TRIAL_SAMPLES {
                out[c * TRIAL_SAMPLES + j] = self.value(c, sample_time_ms(j));
            }
        }
        out
    }
}

impl Default for ErpTemplate {
    fn default() -> Self {
        ErpTemplate {
            components: vec![
                ErpComponent {
                    name: "N200".into(),
                    latency_ms: 190.0,
                    amplitude_uv: -5.0,
                    width_ms: 40.0,
                    // Occipital maximum, weaker parietal, phase-reversed centrally.
                    gains: [-0.4, -0.4, -0.4, 0.5, 0.5, 0.5, 1.0, 1.0],
                },
                ErpComponent {
                    name: "P300".into(),
                    latency_ms: 290.0,
                    amplitude_uv: 8.0,
                    width_ms: 80.0,
                    gains: [0.8, 0.8, 0.8, 1.0, 1.0, 1.0, 0.6, 0.6],
                },
            ],
        }
    }
}

#[inline]
fn sample_time_ms(j: usize) -> f64 {
    j as f64 * 1000.0 / f64::from(SAMPLE_RATE_HZ)
}

/// Parametric stand-in for a human subject.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SubjectModel {
    pub erp: ErpTemplate,
    /// Marginal standard deviation of the background EEG per channel, µV.
    pub noise_sigma_uv: f64,
    /// Probability that an attended illumination evokes a response.
    pub attention: f64,
    /// Standard deviation of the per-response latency shift.
    pub jitter_ms: f64,
    /// First-order autoregressive coefficient of the noise; 0 is white.
    pub ar_coefficient: f64,
    /// Noiseless, always attending, no jitter.
    pub oracle: bool,
}

impl SubjectModel {
    pub fn oracle() -> Self {
        SubjectModel {
            erp: ErpTemplate::default(),
            noise_sigma_uv: 0.0,
            attention: 1.0,
            jitter_ms: 0.0,
            ar_coefficient: 0.0,
            oracle: true,
        }
    }

    /// Full responses in white background noise.
    pub fn noisy(noise_sigma_uv: f64) -> Self {
        SubjectModel {
            noise_sigma_uv,
            oracle: false,
            ..SubjectModel::oracle()
        }
    }

    pub fn with_ar(self, ar_coefficient: f64) -> Self {
        SubjectModel {
            ar_coefficient,
            ..self
        }
    }

    /// Tuned to roughly 94% single-trial cross-validated accuracy at 160 ms.
    pub fn mid_snr() -> Self {
        SubjectModel::noisy(MID_SNR_SIGMA_UV).with_ar(BACKGROUND_AR)
    }

    /// The mid-SNR background with no evoked responses at all.
    pub fn noise_only() -> Self {
        SubjectModel::inattentive(MID_SNR_SIGMA_UV).with_ar(BACKGROUND_AR)
    }

    /// Background EEG only: no illumination evokes anything.
    pub fn inattentive(noise_sigma_uv: f64) -> Self {
        SubjectModel {
            attention: 0.0,
            ..SubjectModel::noisy(noise_sigma_uv)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.erp.validate()?;
        if !(self.noise_sigma_uv >= 0.0) || !self.noise_sigma_uv.is_finite() {
            return Err(Error::param("noise_sigma_uv", "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.attention) {
            return Err(Error::param("attention", "must lie in [0, 1]"));
        }
        if !(self.jitter_ms >= 0.0) || !self.jitter_ms.is_finite() {
            return Err(Error::param("jitter_ms", "must be non-negative"));
        }
        if !(self.ar_coefficient > -1.0 && self.ar_coefficient < 1.0) {
            return Err(Error::param("ar_coefficient", "must lie in (-1, 1)"));
        }
        Ok(())
    }

    fn effective_noise(&self) -> f64 {
        if self.oracle {
            0.0
        } else {
            self.noise_sigma_uv
        }
    }

    /// Whether an illumination of the attended symbol evokes a response, and
    /// the latency shift if so. Always consumes the same random draws.
    fn draw_response<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<f64> {
        let u: f64 = rng.random();
        let z: f64 = StandardNormal.sample(rng);
        if self.oracle {
            return Some(0.0);
        }
        (u < self.attention).then(|| z * self.jitter_ms)
    }
}

/// Background EEG generator with optional AR(1) coloring at fixed marginal variance.
#[derive(Debug, Clone)]
struct NoiseSource {
    sigma: f64,
    a: f64,
    innovation: f64,
    state: Option<[f64; CHANNELS]>,
}

impl NoiseSource {
    fn new(subject: &SubjectModel) -> Self {
        let sigma = subject.effective_noise();
        let a = subject.ar_coefficient;
        NoiseSource {
            sigma,
            a,
            innovation: sigma * sqrt(1.0 - a * a),
            state: None,
        }
    }

    fn next<R: Rng + ?Sized>(&mut self, rng: &mut R) -> [f64; CHANNELS] {
        if self.sigma == 0.0 {
            return [0.0; CHANNELS];
        }
        let mut x = [0.0; CHANNELS];
        for (c, xc) in x.iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(rng);
            *xc = match self.state {
                None => self.sigma * z,
                Some(prev) => self.a * prev[c] + self.innovation * z,
            };
        }
        self.state = Some(x);
        x
    }
}

/// A single, isolated trial: fresh noise plus (for attended oddballs) one response.
pub fn synthesize_trial<R: Rng + ?Sized>(subject: &SubjectModel, label: Label, rng: &mut R) -> Result<Trial> {
    subject.validate()?;
    let mut noise = NoiseSource::new(subject);
    let mut samples = vec![0.0; CHANNELS * TRIAL_SAMPLES];
    for j in 0..TRIAL_SAMPLES {
        let x = noise.next(rng);
        for c in 0..CHANNELS {
            samples[c * TRIAL_SAMPLES + j] = x[c];
        }
    }
    if label.is_oddball() {
        if let Some(shift) = subject.draw_response(rng) {
            for c in 0..CHANNELS {
                for j in 0..TRIAL_SAMPLES {
                    samples[c * TRIAL_SAMPLES + j] += subject.erp.value(c, sample_time_ms(j) - shift);
                }
            }
        }
    }
    Trial::new(samples, label, Vec::new(), 0)
}

/// Continuous multichannel recording from which overlapping trials are cut.
///
/// Windows must be requested in nondecreasing onset order.
#[derive(Debug, Clone)]
pub struct SignalStream {
    subject: SubjectModel,
    rng: SimRng,
    noise: NoiseSource,
    /// Absolute sample index of `buffer[0]`.
    base: u64,
    buffer: VecDeque<[f64; CHANNELS]>,
    /// Onsets and latency shifts of responses that may still reach a window.
    responses: Vec<(u64, f64)>,
    last_onset_us: u64,
}

impl SignalStream {
    pub fn new(subject: SubjectModel, rng: SimRng) -> Result<Self> {
        subject.validate()?;
        let noise = NoiseSource::new(&subject);
        Ok(SignalStream {
            subject,
            rng,
            noise,
            base: 0,
            buffer: VecDeque::new(),
            responses: Vec::new(),
            last_onset_us: 0,
        })
    }

    pub fn subject(&self) -> &SubjectModel {
        &self.subject
    }

    /// Registers an illumination at `onset_us` and returns the trial window
    /// that starts at the nearest sample. `attended` says whether the
    /// illumination contains the symbol the subject is attending to; the
    /// stored label is its truth value.
    pub fn acquire(&mut self, onset_us: u64, attended: bool, stimulus: Vec<SymbolId>) -> Result<Trial> {
        if onset_us < self.last_onset_us {
            return Err(Error::param("onset_us", "trial onsets must not decrease"));
        }
        self.last_onset_us = onset_us;
        if attended {
            if let Some(shift) = self.subject.draw_response(&mut self.rng) {
                self.responses.push((onset_us, shift));
            }
        }

        let start = round(onset_us as f64 / SAMPLE_PERIOD_US as f64) as u64;
        let end = start + TRIAL_SAMPLES as u64;
        while self.base < start && !self.buffer.is_empty() {
            self.buffer.pop_front();
            self.base += 1;
        }
        if self.buffer.is_empty() {
            // Generate (and drop) any gap so the noise process stays continuous.
            let generated_to = self.base;
            for _ in generated_to..start {
                self.noise.next(&mut self.rng);
            }
            self.base = start.max(self.base);
        }
        while self.base + (self.buffer.len() as u64) < end {
            let x = self.noise.next(&mut self.rng);
            self.buffer.push_back(x);
        }

        let window_start_us = start * SAMPLE_PERIOD_US;
        self.responses
            .retain(|(t, _)| t + RESPONSE_HORIZON_US >= window_start_us);

        let mut samples = vec![0.0; CHANNELS * TRIAL_SAMPLES];
        for j in 0..TRIAL_SAMPLES {
            let x = self.buffer[(start - self.base) as usize + j];
            for c in 0..CHANNELS {
                samples[c * TRIAL_SAMPLES + j] = x[c];
            }
        }
        for &(t0, shift) in &self.responses {
            for j in 0..TRIAL_SAMPLES {
                let t_us = (start + j as u64) * SAMPLE_PERIOD_US;
                if t_us < t0 {
                    continue;
                }
                let t_ms = (t_us - t0) as f64 / 1000.0 - shift;
                for c in 0..CHANNELS {
                    samples[c * TRIAL_SAMPLES + j] += self.subject.erp.value(c, t_ms);
                }
            }
        }
        let label = if attended {
            Label::Oddball
        } else {
            Label::NonOddball
        };
        Trial::new(samples, label, stimulus, onset_us)
    }
}

/// A 480-D classifier input.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != FEATURE_DIM {
            return Err(Error::DimensionMismatch {
                expected: FEATURE_DIM,
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(FeatureVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for FeatureVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Drops the first 100 ms of each channel and concatenates the rest channel by channel.
pub fn preprocess(trial: &Trial) -> Result<FeatureVector> {
    if trial.samples.len() != CHANNELS * TRIAL_SAMPLES {
        return Err(Error::InvalidTrial(format!(
            "expected {} samples, got {}",
            CHANNELS * TRIAL_SAMPLES,
            trial.samples.len()
        )));
    }
    let mut out = Vec::with_capacity(FEATURE_DIM);
    for c in 0..CHANNELS {
        out.extend_from_slice(&trial.channel(c)[DISCARD_SAMPLES..]);
    }
    FeatureVector::new(out)
}

/// Acquisition windows of a run of trials with a fixed inter-trial interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OverlapSchedule {
    pub iti_ms: u32,
    pub acquisition_ms: u32,
}

pub fn overlap_schedule(iti_ms: u32, acquisition_ms: u32) -> Result<OverlapSchedule> {
    if iti_ms == 0 {
        return Err(Error::param("iti_ms", "must be positive"));
    }
    if acquisition_ms == 0 {
        return Err(Error::param("acquisition_ms", "must be positive"));
    }
    Ok(OverlapSchedule {
        iti_ms,
        acquisition_ms,
    })
}

impl OverlapSchedule {
    /// `[start, end)` of window `k`, in ms.
    pub fn window(&self, k: u64) -> (u64, u64) {
        let start = k * u64::from(self.iti_ms);
        (start, start + u64::from(self.acquisition_ms))
    }

    /// Time shared by consecutive windows.
    pub fn overlap_ms(&self) -> u32 {
        self.acquisition_ms.saturating_sub(self.iti_ms)
    }
}
