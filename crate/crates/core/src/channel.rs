//! Information-transfer-rate calculus for the oddball detector viewed as an
//! asymmetric binary channel.
//!
//! All entropies are in bits and `0 * log2(0)` is taken as 0.

use crate::error::{Error, Result};
use crate::math::{log2, xlog2x};

const ROW_TOLERANCE: f64 = 1e-12;

/// Conditional decision probabilities: `p_xy = p(decide x | true y)`.
///
/// `p_eo` is the omission rate and `p_oe` the false-alarm rate.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConfusionMatrix {
    pub p_oo: f64,
    pub p_eo: f64,
    pub p_oe: f64,
    pub p_ee: f64,
}

impl ConfusionMatrix {
    pub fn new(p_oo: f64, p_eo: f64, p_oe: f64, p_ee: f64) -> Result<Self> {
        let m = ConfusionMatrix {
            p_oo,
            p_eo,
            p_oe,
            p_ee,
        };
        m.validate()?;
        Ok(m)
    }

    /// From hit rate `p(ô|o)` and false-alarm rate `p(ô|e)`.
    pub fn from_rates(hit: f64, false_alarm: f64) -> Result<Self> {
        Self::new(hit, 1.0 - hit, false_alarm, 1.0 - false_alarm)
    }

    pub fn perfect() -> Self {
        ConfusionMatrix {
            p_oo: 1.0,
            p_eo: 0.0,
            p_oe: 0.0,
            p_ee: 1.0,
        }
    }

    /// A detector that always answers non-oddball.
    pub fn always_non_oddball() -> Self {
        ConfusionMatrix {
            p_oo: 0.0,
            p_eo: 1.0,
            p_oe: 0.0,
            p_ee: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.p_oo, self.p_eo, self.p_oe, self.p_ee];
        if all.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite);
        }
        if all.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::param("confusion", "entries must lie in [0, 1]"));
        }
        if (self.p_oo + self.p_eo - 1.0).abs() > ROW_TOLERANCE
            || (self.p_oe + self.p_ee - 1.0).abs() > ROW_TOLERANCE
        {
            return Err(Error::param("confusion", "each row must sum to 1"));
        }
        Ok(())
    }

    pub fn omission(&self) -> f64 {
        self.p_eo
    }

    pub fn false_alarm(&self) -> f64 {
        self.p_oe
    }

    /// Overall accuracy under the given oddball prior.
    pub fn accuracy(&self, prior_o: f64) -> f64 {
        prior_o * self.p_oo + (1.0 - prior_o) * self.p_ee
    }
}

/// Raw decision counts, `xy` = decided x when the truth was y.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConfusionCounts {
    pub oo: u64,
    pub eo: u64,
    pub oe: u64,
    pub ee: u64,
}

impl ConfusionCounts {
    pub fn record(&mut self, truth_oddball: bool, decided_oddball: bool) {
        match (truth_oddball, decided_oddball) {
            (true, true) => self.oo += 1,
            (true, false) => self.eo += 1,
            (false, true) => self.oe += 1,
            (false, false) => self.ee += 1,
        }
    }

    pub fn merge(&mut self, other: &ConfusionCounts) {
        self.oo += other.oo;
        self.eo += other.eo;
        self.oe += other.oe;
        self.ee += other.ee;
    }

    pub fn total(&self) -> u64 {
        self.oo + self.eo + self.oe + self.ee
    }

    pub fn oddballs(&self) -> u64 {
        self.oo + self.eo
    }

    pub fn non_oddballs(&self) -> u64 {
        self.oe + self.ee
    }

    pub fn accuracy(&self) -> f64 {
        (self.oo + self.ee) as f64 / self.total() as f64
    }

    /// Fraction of oddball trials among all trials.
    pub fn empirical_prior(&self) -> f64 {
        self.oddballs() as f64 / self.total() as f64
    }

    /// Row-normalized confusion matrix; both classes must be present.
    pub fn confusion(&self) -> Result<ConfusionMatrix> {
        if self.oddballs() == 0 || self.non_oddballs() == 0 {
            return Err(Error::InsufficientData(
                "confusion rates need both classes".into(),
            ));
        }
        let o = self.oddballs() as f64;
        let e = self.non_oddballs() as f64;
        ConfusionMatrix::new(
            self.oo as f64 / o,
            self.eo as f64 / o,
            self.oe as f64 / e,
            self.ee as f64 / e,
        )
    }
}

/// A confusion matrix together with the input (stimulus) distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChannelSpec {
    pub confusion: ConfusionMatrix,
    pub prior_o: f64,
}

impl ChannelSpec {
    pub fn new(confusion: ConfusionMatrix, prior_o: f64) -> Result<Self> {
        confusion.validate()?;
        if !(prior_o > 0.0 && prior_o < 1.0) {
            return Err(Error::param("prior_o", "must lie strictly between 0 and 1"));
        }
        Ok(ChannelSpec { confusion, prior_o })
    }

    /// Oddball-to-non-oddball ratio `1 : k` as used by the stimulus design.
    pub fn with_ratio(confusion: ConfusionMatrix, non_oddballs_per_oddball: f64) -> Result<Self> {
        Self::new(confusion, 1.0 / (1.0 + non_oddballs_per_oddball))
    }

    pub fn prior_e(&self) -> f64 {
        1.0 - self.prior_o
    }

    /// Output distribution `(p(ô), p(ê))`.
    pub fn output_distribution(&self) -> (f64, f64) {
        output_distribution(&self.confusion, self.prior_o)
    }
}

fn output_distribution(c: &ConfusionMatrix, prior_o: f64) -> (f64, f64) {
    let prior_e = 1.0 - prior_o;
    (
        c.p_oo * prior_o + c.p_oe * prior_e,
        c.p_eo * prior_o + c.p_ee * prior_e,
    )
}

/// Entropy of a two-point distribution `(p, 1 - p)` in bits.
pub fn binary_entropy(p: f64) -> f64 {
    -(xlog2x(p) + xlog2x(1.0 - p))
}

/// Entropy of the stimulus class.
pub fn input_entropy(prior_o: f64) -> f64 {
    binary_entropy(prior_o)
}

/// `I(in; out) = H(out) - H(out | in)` in bits per trial.
pub fn mutual_information(spec: &ChannelSpec) -> f64 {
    mi_unchecked(&spec.confusion, spec.prior_o)
}

fn mi_unchecked(c: &ConfusionMatrix, prior_o: f64) -> f64 {
    if c.p_oo == c.p_oe {
        // Identical rows: the output carries no trace of the input.
        return 0.0;
    }
    let prior_e = 1.0 - prior_o;
    let (q_o, q_e) = output_distribution(c, prior_o);
    let h_out = -(xlog2x(q_o) + xlog2x(q_e));
    let h_out_given_in = -prior_o * (xlog2x(c.p_oo) + xlog2x(c.p_eo))
        - prior_e * (xlog2x(c.p_oe) + xlog2x(c.p_ee));
    (h_out - h_out_given_in).max(0.0)
}

/// Bits per selection for a `classes`-way symmetric channel with accuracy `p_c`.
pub fn wolpaw_itr(classes: u32, p_c: f64) -> Result<f64> {
    if classes < 2 {
        return Err(Error::param("classes", "must be at least 2"));
    }
    if !(0.0..=1.0).contains(&p_c) {
        return Err(Error::param("p_c", "must lie in [0, 1]"));
    }
    let c = f64::from(classes);
    let p_err = 1.0 - p_c;
    let err_term = if p_err > 0.0 {
        p_err * log2(p_err / (c - 1.0))
    } else {
        0.0
    };
    Ok(log2(c) + xlog2x(p_c) + err_term)
}

/// Fano lower bound on the information of a binary channel with accuracy `p_c`.
///
/// May be negative, in which case it is vacuous.
pub fn fano_lower_bound(prior_o: f64, p_c: f64) -> Result<f64> {
    if !(prior_o > 0.0 && prior_o < 1.0) {
        return Err(Error::param("prior_o", "must lie strictly between 0 and 1"));
    }
    if !(0.0..=1.0).contains(&p_c) {
        return Err(Error::param("p_c", "must lie in [0, 1]"));
    }
    Ok(input_entropy(prior_o) + xlog2x(p_c) + xlog2x(1.0 - p_c))
}

/// Correctly typed information per second of session time.
pub fn practical_itr(n_correct: usize, time_s: f64, alphabet_size: usize) -> Result<f64> {
    if !(time_s > 0.0) || !time_s.is_finite() {
        return Err(Error::param("time_s", "must be positive"));
    }
    if alphabet_size < 2 {
        return Err(Error::param("alphabet_size", "must be at least 2"));
    }
    Ok(n_correct as f64 / time_s * log2(alphabet_size as f64))
}

/// Mutual information of the same detector under a different stimulus ratio,
/// given as oddballs per non-oddball (1:3 is `1.0 / 3.0`).
///
/// The ratio may be `f64::INFINITY` (oddballs only); both extremes give 0.
pub fn recompute_with_ratio(confusion: &ConfusionMatrix, oddball_ratio: f64) -> Result<f64> {
    confusion.validate()?;
    if oddball_ratio.is_nan() || oddball_ratio <= 0.0 {
        return Err(Error::param("oddball_ratio", "must be positive"));
    }
    let prior_o = if oddball_ratio.is_infinite() {
        1.0
    } else {
        oddball_ratio / (1.0 + oddball_ratio)
    };
    Ok(mi_unchecked(confusion, prior_o))
}

/// Information rate summary.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ItrReport {
    pub bits_per_trial: Option<f64>,
    pub trials_per_sec: Option<f64>,
    pub bits_per_sec: f64,
    pub n_correct: Option<usize>,
    pub time_s: Option<f64>,
    pub alphabet_size: Option<usize>,
}

impl ItrReport {
    pub fn practical(n_correct: usize, time_s: f64, alphabet_size: usize) -> Result<Self> {
        Ok(ItrReport {
            bits_per_trial: None,
            trials_per_sec: None,
            bits_per_sec: practical_itr(n_correct, time_s, alphabet_size)?,
            n_correct: Some(n_correct),
            time_s: Some(time_s),
            alphabet_size: Some(alphabet_size),
        })
    }

    /// `bits_per_trial * trials_per_sec`.
    pub fn per_trial(bits_per_trial: f64, trials_per_sec: f64) -> Result<Self> {
        if !bits_per_trial.is_finite() || !trials_per_sec.is_finite() {
            return Err(Error::NonFinite);
        }
        if bits_per_trial < 0.0 || trials_per_sec < 0.0 {
            return Err(Error::param("itr", "rates must be non-negative"));
        }
        Ok(ItrReport {
            bits_per_trial: Some(bits_per_trial),
            trials_per_sec: Some(trials_per_sec),
            bits_per_sec: bits_per_trial * trials_per_sec,
            n_correct: None,
            time_s: None,
            alphabet_size: None,
        })
    }
}

/// Per-trial ITR of a session: channel information per trial times the trial
/// rate over active (non-pause) time.
pub fn per_trial_itr_from_session(
    spec: &ChannelSpec,
    trials: usize,
    active_time_s: f64,
) -> Result<ItrReport> {
    if !(active_time_s > 0.0) {
        return Err(Error::param("active_time_s", "must be positive"));
    }
    ItrReport::per_trial(mutual_information(spec), trials as f64 / active_time_s)
}
