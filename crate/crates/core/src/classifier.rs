//! Linear Bayesian decision rule on the scalar feature.
//!
//! Both classes are modelled as Gaussians with a shared variance, so the log
//! posterior odds are affine in the feature and the rule is a single
//! threshold on the feature line.

use alloc::format;

use crate::error::{Error, Result};
use crate::math::{exp, ln};

/// True class of a trial, or the detector's decision about it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Label {
    Oddball,
    NonOddball,
}

impl Label {
    pub fn is_oddball(self) -> bool {
        self == Label::Oddball
    }

    pub fn other(self) -> Label {
        match self {
            Label::Oddball => Label::NonOddball,
            Label::NonOddball => Label::Oddball,
        }
    }
}

/// Class priors `(p(o), p(e))`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Priors {
    pub oddball: f64,
    pub non_oddball: f64,
}

impl Priors {
    pub fn new(oddball: f64) -> Result<Self> {
        if !(oddball > 0.0 && oddball < 1.0) {
            return Err(Error::param("prior_o", "must lie strictly between 0 and 1"));
        }
        Ok(Priors {
            oddball,
            non_oddball: 1.0 - oddball,
        })
    }

    /// The 1:6 stimulus design.
    pub fn design() -> Self {
        Priors {
            oddball: 1.0 / 7.0,
            non_oddball: 6.0 / 7.0,
        }
    }
}

/// Misclassification costs; only their ratio matters to decisions.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Costs {
    /// Cost of a false alarm (deciding oddball on a non-oddball trial).
    pub false_alarm: f64,
    /// Cost of an omission (deciding non-oddball on an oddball trial).
    pub omission: f64,
}

impl Costs {
    pub fn new(false_alarm: f64, omission: f64) -> Result<Self> {
        if !(false_alarm > 0.0 && false_alarm.is_finite() && omission > 0.0 && omission.is_finite()) {
            return Err(Error::param("costs", "both costs must be positive and finite"));
        }
        Ok(Costs {
            false_alarm,
            omission,
        })
    }

    /// Costs with `false_alarm / omission = theta` and unit omission cost.
    pub fn from_theta(theta: f64) -> Result<Self> {
        Self::new(theta, 1.0)
    }

    pub fn theta(&self) -> f64 {
        self.false_alarm / self.omission
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassifierParams {
    pub mu_o: f64,
    pub mu_e: f64,
    /// Unconditional sample variance of all training features.
    pub sigma2: f64,
    pub prior_o: f64,
    pub prior_e: f64,
    pub lambda_fa: f64,
    pub lambda_om: f64,
}

/// Fits class means and the shared variance.
///
/// With `priors` set to `None` the priors are the label frequencies.
pub fn fit(features: &[f64], labels: &[Label], priors: Option<Priors>, costs: Costs) -> Result<ClassifierParams> {
    if features.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: features.len(),
            actual: labels.len(),
        });
    }
    if features.iter().any(|f| !f.is_finite()) {
        return Err(Error::NonFinite);
    }
    let (mut sum_o, mut n_o, mut sum_e, mut n_e) = (0.0, 0usize, 0.0, 0usize);
    for (&f, &l) in features.iter().zip(labels) {
        match l {
            Label::Oddball => {
                sum_o += f;
                n_o += 1;
            }
            Label::NonOddball => {
                sum_e += f;
                n_e += 1;
            }
        }
    }
    if n_o == 0 || n_e == 0 {
        return Err(Error::InsufficientData(format!(
            "both classes required, got {n_o} oddball and {n_e} non-oddball"
        )));
    }
    let n = features.len() as f64;
    let mean = (sum_o + sum_e) / n;
    let sigma2 = features.iter().map(|f| (f - mean) * (f - mean)).sum::<f64>() / (n - 1.0);
    if !(sigma2 > 0.0) {
        return Err(Error::InsufficientData("feature variance is zero".into()));
    }
    let priors = match priors {
        Some(p) => Priors::new(p.oddball)?,
        None => Priors::new(n_o as f64 / n)?,
    };
    Ok(ClassifierParams {
        mu_o: sum_o / n_o as f64,
        mu_e: sum_e / n_e as f64,
        sigma2,
        prior_o: priors.oddball,
        prior_e: priors.non_oddball,
        lambda_fa: costs.false_alarm,
        lambda_om: costs.omission,
    })
}

impl ClassifierParams {
    pub fn theta(&self) -> f64 {
        self.lambda_fa / self.lambda_om
    }

    pub fn with_priors(mut self, priors: Priors) -> Self {
        self.prior_o = priors.oddball;
        self.prior_e = priors.non_oddball;
        self
    }

    pub fn with_costs(mut self, costs: Costs) -> Self {
        self.lambda_fa = costs.false_alarm;
        self.lambda_om = costs.omission;
        self
    }

    /// `ln[p(o|F) / p(e|F)]`.
    pub fn log_posterior_odds(&self, f: f64) -> Result<f64> {
        if !f.is_finite() {
            return Err(Error::NonFinite);
        }
        let d_o = f - self.mu_o;
        let d_e = f - self.mu_e;
        let log_lr = (d_e * d_e - d_o * d_o) / (2.0 * self.sigma2);
        Ok(log_lr + ln(self.prior_o) - ln(self.prior_e))
    }

    pub fn posterior_odds(&self, f: f64) -> Result<f64> {
        Ok(exp(self.log_posterior_odds(f)?))
    }

    /// `p(o|F)`.
    pub fn posterior_oddball(&self, f: f64) -> Result<f64> {
        let l = self.log_posterior_odds(f)?;
        Ok(if l >= 0.0 {
            1.0 / (1.0 + exp(-l))
        } else {
            let e = exp(l);
            e / (1.0 + e)
        })
    }

    /// Oddball iff the posterior odds exceed `theta`; equality is non-oddball.
    pub fn decide(&self, f: f64, theta: f64) -> Result<Label> {
        if !(theta > 0.0) {
            return Err(Error::param("theta", "must be positive"));
        }
        let l = self.log_posterior_odds(f)?;
        Ok(if l > ln(theta) {
            Label::Oddball
        } else {
            Label::NonOddball
        })
    }

    /// Decision with the threshold implied by the stored costs.
    pub fn classify(&self, f: f64) -> Result<Label> {
        self.decide(f, self.theta())
    }

    /// `(R(o|F), R(e|F))`: the expected cost of deciding oddball and of
    /// deciding non-oddball.
    pub fn conditional_risk(&self, f: f64) -> Result<(f64, f64)> {
        let p_o = self.posterior_oddball(f)?;
        let p_e = 1.0 - p_o;
        Ok((self.lambda_fa * p_e, self.lambda_om * p_o))
    }

    /// The decision with smaller conditional risk, compared in the log domain
    /// so that extreme posteriors do not collapse to ties.
    pub fn min_risk_decision(&self, f: f64) -> Result<Label> {
        let l = self.log_posterior_odds(f)?;
        // R(o) < R(e)  <=>  λ_FA p(e) < λ_OM p(o)  <=>  ln λ_FA - ln λ_OM < l
        let risk_o = ln(self.lambda_fa) - l;
        let risk_e = ln(self.lambda_om);
        Ok(if risk_o < risk_e {
            Label::Oddball
        } else {
            Label::NonOddball
        })
    }

    /// Feature value where the log odds equal `ln(theta)`, if the classes differ.
    pub fn decision_boundary(&self, theta: f64) -> Option<f64> {
        let slope = (self.mu_o - self.mu_e) / self.sigma2;
        if slope == 0.0 {
            return None;
        }
        let intercept = (self.mu_e * self.mu_e - self.mu_o * self.mu_o) / (2.0 * self.sigma2)
            + ln(self.prior_o)
            - ln(self.prior_e);
        Some((ln(theta) - intercept) / slope)
    }
}
