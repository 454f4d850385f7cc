//! Experimental protocol: training sessions, cross-validation and simulated
//! online spelling.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::alphabet::{build_cdf, form_cycle, CharacterSet, FrequencyTable, SymbolId, BACKSPACE, EXIT};
use crate::channel::{
    mutual_information, per_trial_itr_from_session, ChannelSpec, ConfusionCounts, ConfusionMatrix, ItrReport,
};
use crate::classifier::{self, ClassifierParams, Costs, Label, Priors};
use crate::error::{Error, Result};
use crate::features::{ClassMoments, CpcaConfig, FeatureModel};
use crate::math::sqrt;
use crate::rng::Seed;
use crate::signal::{preprocess, FeatureVector, SignalStream, SubjectModel, Trial, ACQUISITION_MS, DISCARD_MS};
use crate::speller::{
    correct_prefix_len, Dictionary, Mechanism, Mode, SelectionEvent, SessionClock, Speller, SpellerConfig,
    TrialTiming,
};

/// Version tag written into every session log.
pub const SESSION_LOG_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ProtocolConfig {
    pub iti_ms: u32,
    /// Illuminated fraction of each inter-trial interval.
    pub duty_cycle: f64,
    pub acquisition_ms: u32,
    pub discard_ms: u32,
    pub training_characters: usize,
    pub seconds_per_character: u32,
    /// Rest between training characters.
    pub character_break_ms: u32,
    pub pause_ms: u32,
    pub theta_stage1: f64,
    pub theta_stage2: f64,
    pub overhead_us: u64,
    pub cpca: CpcaConfig,
    /// Online trials after which an unfinished session is abandoned.
    pub trial_budget: u64,
    pub cv_folds: usize,
    pub cv_repeats: usize,
    pub seed: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            iti_ms: 160,
            duty_cycle: 0.6,
            acquisition_ms: ACQUISITION_MS,
            discard_ms: DISCARD_MS,
            training_characters: 10,
            seconds_per_character: 30,
            character_break_ms: 10_000,
            pause_ms: 3000,
            theta_stage1: 1.0,
            theta_stage2: 0.5,
            overhead_us: 12_000,
            cpca: CpcaConfig::default(),
            trial_budget: 20_000,
            cv_folds: 10,
            cv_repeats: 10,
            seed: 0,
        }
    }
}

impl ProtocolConfig {
    pub fn with_iti(iti_ms: u32) -> Self {
        ProtocolConfig {
            iti_ms,
            ..ProtocolConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iti_ms == 0 {
            return Err(Error::param("iti_ms", "must be positive"));
        }
        if !(self.duty_cycle > 0.0 && self.duty_cycle <= 1.0) {
            return Err(Error::param("duty_cycle", "must lie in (0, 1]"));
        }
        if self.acquisition_ms != ACQUISITION_MS || self.discard_ms != DISCARD_MS {
            return Err(Error::param(
                "acquisition_ms",
                format!("only a {ACQUISITION_MS} ms window with {DISCARD_MS} ms discarded is supported"),
            ));
        }
        if self.training_characters == 0 || self.seconds_per_character == 0 {
            return Err(Error::param("training", "characters and seconds per character must be positive"));
        }
        if self.trials_per_character() == 0 {
            return Err(Error::param("iti_ms", "longer than the time per training character"));
        }
        if self.pause_ms == 0 {
            return Err(Error::param("pause_ms", "must be positive"));
        }
        if self.cv_folds < 2 || self.cv_repeats == 0 {
            return Err(Error::param("cv", "need at least 2 folds and 1 repeat"));
        }
        if self.trial_budget == 0 {
            return Err(Error::param("trial_budget", "must be positive"));
        }
        self.cpca.validate()?;
        self.speller_config().validate()
    }

    /// Illumination on-time.
    pub fn on_ms(&self) -> f64 {
        self.duty_cycle * f64::from(self.iti_ms)
    }

    pub fn trials_per_character(&self) -> usize {
        (self.seconds_per_character * 1000 / self.iti_ms) as usize
    }

    pub fn training_trials(&self) -> usize {
        self.trials_per_character() * self.training_characters
    }

    pub fn timing(&self) -> TrialTiming {
        TrialTiming {
            iti_us: u64::from(self.iti_ms) * 1000,
            overhead_us: self.overhead_us,
        }
    }

    pub fn speller_config(&self) -> SpellerConfig {
        SpellerConfig {
            theta_stage1: self.theta_stage1,
            theta_stage2: self.theta_stage2,
            pause_us: u64::from(self.pause_ms) * 1000,
            ..SpellerConfig::default()
        }
    }
}

/// Labelled trials of one training session.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub iti_ms: u32,
    pub targets: Vec<SymbolId>,
    pub trials: Vec<Trial>,
}

impl TrainingSet {
    pub fn labels(&self) -> Vec<Label> {
        self.trials.iter().map(|t| t.label).collect()
    }

    pub fn features(&self) -> Result<Vec<FeatureVector>> {
        self.trials.iter().map(preprocess).collect()
    }
}

/// Generates a training session: for each target character, group cycles
/// for the configured time, each illumination one trial labelled by whether
/// it contained the target.
pub fn run_training(
    config: &ProtocolConfig,
    subject: &SubjectModel,
    freq: &FrequencyTable,
    seed: Seed,
) -> Result<TrainingSet> {
    config.validate()?;
    let cdf = build_cdf(freq)?;
    let mut schedule = seed.fork("training-schedule").rng();
    let mut stream = SignalStream::new(subject.clone(), seed.fork("training-eeg").rng())?;
    let charset = freq.charset();
    if config.training_characters > charset.len() {
        return Err(Error::param("training_characters", "more targets than symbols"));
    }
    let mut pool: Vec<SymbolId> = charset.ids().collect();
    pool.shuffle(&mut schedule);
    let targets: Vec<SymbolId> = pool[..config.training_characters].to_vec();

    let iti_us = u64::from(config.iti_ms) * 1000;
    let per_char = config.trials_per_character();
    let char_span_us = per_char as u64 * iti_us + u64::from(config.character_break_ms) * 1000;
    let mut trials = Vec::with_capacity(config.training_trials());
    for (c, &target) in targets.iter().enumerate() {
        let start = c as u64 * char_span_us;
        let mut cycle = form_cycle(cdf.draw_permutation(&mut schedule))?;
        let mut g = 0;
        for k in 0..per_char {
            if g == cycle.groups().count() {
                cycle = form_cycle(cdf.draw_permutation(&mut schedule))?;
                g = 0;
            }
            let group = cycle.group(g).to_vec();
            let attended = group.contains(&target);
            trials.push(stream.acquire(start + k as u64 * iti_us, attended, group)?);
            g += 1;
        }
    }
    Ok(TrainingSet {
        iti_ms: config.iti_ms,
        targets,
        trials,
    })
}

/// Feature extractor and classifier fitted on one training session.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FittedModel {
    pub iti_ms: u32,
    pub features: FeatureModel,
    pub classifier: ClassifierParams,
}

impl FittedModel {
    /// Feature value, posterior p(oddball | feature) and decision at `theta`.
    pub fn evaluate(&self, x: &[f64], theta: f64) -> Result<(f64, f64, Label)> {
        let f = self.features.extract(x)?;
        Ok((f, self.classifier.posterior_oddball(f)?, self.classifier.decide(f, theta)?))
    }
}

/// Fits the full pipeline. Classifier priors are fixed at the 1:6 design ratio.
pub fn fit_pipeline<V: AsRef<[f64]>>(
    vectors: &[V],
    labels: &[Label],
    config: CpcaConfig,
    iti_ms: u32,
) -> Result<FittedModel> {
    let features = FeatureModel::fit(vectors, labels, config)?;
    finish_fit(features, vectors, labels, iti_ms)
}

fn finish_fit<V: AsRef<[f64]>>(
    features: FeatureModel,
    vectors: &[V],
    labels: &[Label],
    iti_ms: u32,
) -> Result<FittedModel> {
    let f: Vec<f64> = vectors
        .iter()
        .map(|v| features.extract(v.as_ref()))
        .collect::<Result<_>>()?;
    let classifier = classifier::fit(&f, labels, Some(Priors::design()), Costs::from_theta(1.0)?)?;
    Ok(FittedModel {
        iti_ms,
        features,
        classifier,
    })
}

/// Training plus fitting in one call.
pub fn train_and_fit(
    config: &ProtocolConfig,
    subject: &SubjectModel,
    freq: &FrequencyTable,
    seed: Seed,
) -> Result<(TrainingSet, FittedModel)> {
    let set = run_training(config, subject, freq, seed)?;
    let vectors = set.features()?;
    let model = fit_pipeline(&vectors, &set.labels(), config.cpca, config.iti_ms)?;
    Ok((set, model))
}

/// Outcome of one cross-validation repeat.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RepeatOutcome {
    pub accuracy: f64,
    pub counts: ConfusionCounts,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CvResult {
    pub repeats: Vec<RepeatOutcome>,
    pub mean_accuracy: f64,
    /// Sample standard deviation of the per-repeat accuracies.
    pub std_accuracy: f64,
    pub best_accuracy: f64,
    pub counts: ConfusionCounts,
    pub confusion: ConfusionMatrix,
    pub prior_o: f64,
    /// Mutual information of the pooled confusion at the empirical prior.
    pub bits_per_trial: f64,
}

impl CvResult {
    pub fn from_repeats(repeats: Vec<RepeatOutcome>) -> Result<Self> {
        if repeats.is_empty() {
            return Err(Error::InsufficientData("no cross-validation repeats".into()));
        }
        let n = repeats.len() as f64;
        let mean = repeats.iter().map(|r| r.accuracy).sum::<f64>() / n;
        let var = if repeats.len() > 1 {
            repeats.iter().map(|r| (r.accuracy - mean) * (r.accuracy - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let best = repeats.iter().map(|r| r.accuracy).fold(0.0, f64::max);
        let mut counts = ConfusionCounts::default();
        for r in &repeats {
            counts.merge(&r.counts);
        }
        let confusion = counts.confusion()?;
        let prior_o = counts.empirical_prior();
        let bits_per_trial = mutual_information(&ChannelSpec::new(confusion, prior_o)?);
        Ok(CvResult {
            repeats,
            mean_accuracy: mean,
            std_accuracy: sqrt(var),
            best_accuracy: best,
            counts,
            confusion,
            prior_o,
            bits_per_trial,
        })
    }
}

/// Data prepared once for any number of cross-validation repeats.
pub struct CvData<'a, V> {
    vectors: &'a [V],
    labels: &'a [Label],
    reference_o: Vec<f64>,
    reference_e: Vec<f64>,
    folds: usize,
    config: CpcaConfig,
}

impl<'a, V: AsRef<[f64]>> CvData<'a, V> {
    pub fn new(vectors: &'a [V], labels: &'a [Label], folds: usize, config: CpcaConfig) -> Result<Self> {
        if vectors.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: vectors.len(),
                actual: labels.len(),
            });
        }
        if folds < 2 {
            return Err(Error::param("folds", "need at least 2"));
        }
        let class = |l: Label| -> Vec<&[f64]> {
            vectors
                .iter()
                .zip(labels)
                .filter(|(_, &x)| x == l)
                .map(|(v, _)| v.as_ref())
                .collect()
        };
        let (o, e) = (class(Label::Oddball), class(Label::NonOddball));
        if o.len() < folds || e.len() < folds {
            return Err(Error::InsufficientData(format!(
                "{folds}-fold cross-validation needs {folds} trials per class, got {} and {}",
                o.len(),
                e.len()
            )));
        }
        let reference_o = ClassMoments::from_vectors(&o)?.mean();
        let reference_e = ClassMoments::from_vectors(&e)?.mean();
        Ok(CvData {
            vectors,
            labels,
            reference_o,
            reference_e,
            folds,
            config,
        })
    }

    /// Stratified fold index of every trial for one repeat.
    pub fn assign_folds(&self, seed: Seed) -> Vec<usize> {
        let mut rng = seed.rng();
        let mut fold = vec![0; self.labels.len()];
        for class in [Label::Oddball, Label::NonOddball] {
            let mut idx: Vec<usize> = (0..self.labels.len()).filter(|&i| self.labels[i] == class).collect();
            idx.shuffle(&mut rng);
            for (k, i) in idx.into_iter().enumerate() {
                fold[i] = k % self.folds;
            }
        }
        fold
    }

    /// One repeat: every fold held out once, the rest used for fitting.
    pub fn run_repeat(&self, seed: Seed) -> Result<RepeatOutcome> {
        let fold = self.assign_folds(seed);
        let mut per_fold: Vec<(ClassMoments, ClassMoments)> = (0..self.folds)
            .map(|_| (ClassMoments::new(self.reference_o.clone()), ClassMoments::new(self.reference_e.clone())))
            .collect();
        for (i, v) in self.vectors.iter().enumerate() {
            let m = &mut per_fold[fold[i]];
            match self.labels[i] {
                Label::Oddball => m.0.add(v.as_ref())?,
                Label::NonOddball => m.1.add(v.as_ref())?,
            }
        }
        let mut counts = ConfusionCounts::default();
        for k in 0..self.folds {
            let mut mo = ClassMoments::new(self.reference_o.clone());
            let mut me = ClassMoments::new(self.reference_e.clone());
            for (j, (fo, fe)) in per_fold.iter().enumerate() {
                if j != k {
                    mo.merge(fo)?;
                    me.merge(fe)?;
                }
            }
            let train: Vec<usize> = (0..fold.len()).filter(|&i| fold[i] != k).collect();
            let tv: Vec<&[f64]> = train.iter().map(|&i| self.vectors[i].as_ref()).collect();
            let tl: Vec<Label> = train.iter().map(|&i| self.labels[i]).collect();
            let features = FeatureModel::fit_with_moments(&mo, &me, &tv, &tl, self.config)?;
            let model = finish_fit(features, &tv, &tl, 0)?;
            for i in (0..fold.len()).filter(|&i| fold[i] == k) {
                let (_, _, decision) = model.evaluate(self.vectors[i].as_ref(), 1.0)?;
                counts.record(self.labels[i].is_oddball(), decision.is_oddball());
            }
        }
        Ok(RepeatOutcome {
            accuracy: counts.accuracy(),
            counts,
        })
    }
}

/// Seed of the `r`-th cross-validation repeat.
pub fn repeat_seed(seed: Seed, r: usize) -> Seed {
    seed.fork_indexed("cv-repeat", r as u64)
}

/// Repeated stratified k-fold cross-validation of the full pipeline at θ = 1.
pub fn cross_validate<V: AsRef<[f64]>>(
    vectors: &[V],
    labels: &[Label],
    folds: usize,
    repeats: usize,
    config: CpcaConfig,
    seed: Seed,
) -> Result<CvResult> {
    let data = CvData::new(vectors, labels, folds, config)?;
    let outcomes = (0..repeats)
        .map(|r| data.run_repeat(repeat_seed(seed, r)))
        .collect::<Result<Vec<_>>>()?;
    CvResult::from_repeats(outcomes)
}

/// Indices of a random subsample of `target` trials with
/// `floor(target / 7)` oddballs and the rest non-oddballs, in original order.
pub fn stratified_subsample(labels: &[Label], target: usize, seed: Seed) -> Result<Vec<usize>> {
    let n_o = target / 7;
    let n_e = target - n_o;
    let mut o: Vec<usize> = (0..labels.len()).filter(|&i| labels[i].is_oddball()).collect();
    let mut e: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i].is_oddball()).collect();
    if o.len() < n_o || e.len() < n_e {
        return Err(Error::InsufficientData(format!(
            "subsample of {target} needs {n_o} oddball and {n_e} non-oddball trials, have {} and {}",
            o.len(),
            e.len()
        )));
    }
    let mut rng = seed.rng();
    o.shuffle(&mut rng);
    e.shuffle(&mut rng);
    let mut idx: Vec<usize> = o[..n_o].iter().chain(&e[..n_e]).copied().collect();
    idx.sort_unstable();
    Ok(idx)
}

/// Cross-validation on a stratified subsample.
pub fn subsample_check<V: AsRef<[f64]>>(
    vectors: &[V],
    labels: &[Label],
    target: usize,
    folds: usize,
    repeats: usize,
    config: CpcaConfig,
    seed: Seed,
) -> Result<CvResult> {
    let idx = stratified_subsample(labels, target, seed.fork("subsample"))?;
    let v: Vec<&[f64]> = idx.iter().map(|&i| vectors[i].as_ref()).collect();
    let l: Vec<Label> = idx.iter().map(|&i| labels[i]).collect();
    cross_validate(&v, &l, folds, repeats, config, seed.fork("subsample-cv"))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrialRecord {
    pub index: u64,
    pub onset_us: u64,
    pub mode: Mode,
    pub illuminated: String,
    /// Symbol the simulated user was attending to.
    pub attending: char,
    pub attended: bool,
    pub feature: f64,
    pub posterior: f64,
    pub theta: f64,
    pub decision: Label,
    /// Session time after the trial slot (and any pause it triggered).
    pub clock_us: u64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum LogRecord {
    Trial(TrialRecord),
    Selection(SelectionEvent),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SessionLog {
    pub schema: u32,
    pub records: Vec<LogRecord>,
}

impl SessionLog {
    pub fn trials(&self) -> impl Iterator<Item = &TrialRecord> {
        self.records.iter().filter_map(|r| match r {
            LogRecord::Trial(t) => Some(t),
            LogRecord::Selection(_) => None,
        })
    }

    pub fn selections(&self) -> impl Iterator<Item = &SelectionEvent> {
        self.records.iter().filter_map(|r| match r {
            LogRecord::Selection(s) => Some(s),
            LogRecord::Trial(_) => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SessionReport {
    pub iti_ms: u32,
    pub target: String,
    pub prompt: String,
    /// The prompt equals the target.
    pub completed: bool,
    /// The session ended on an exit selection (correct or not).
    pub exited: bool,
    pub n_correct: usize,
    pub selections: usize,
    pub selections_by_mechanism: [usize; 3],
    pub clock: SessionClock,
    pub time_s: f64,
    pub active_time_s: f64,
    /// Error-free rate over the whole session.
    pub practical: ItrReport,
    /// The same rate over time excluding notification pauses.
    pub active: ItrReport,
    pub counts: ConfusionCounts,
    /// Channel mutual information times trial rate, when both classes occurred.
    pub channel: Option<ItrReport>,
}

/// Symbol the simulated user attends to: the next target character while the
/// prompt is a correct prefix, otherwise backspace.
pub fn attending_symbol(prompt: &str, target: &str) -> char {
    let n = correct_prefix_len(prompt, target);
    if n == prompt.chars().count() {
        target.chars().nth(n).unwrap_or(EXIT)
    } else {
        BACKSPACE
    }
}

/// Checks a target sentence and makes sure it ends with the exit symbol.
pub fn normalize_sentence(charset: &CharacterSet, sentence: &str) -> Result<String> {
    let mut s = String::from(sentence);
    if !s.ends_with(EXIT) {
        s.push(EXIT);
    }
    if !charset.contains_str(&s) {
        return Err(Error::InvalidCharacterSet(format!("sentence {sentence:?} has symbols outside the alphabet")));
    }
    if s[..s.len() - EXIT.len_utf8()].contains(EXIT) {
        return Err(Error::param("sentence", "the exit symbol may only appear at the end"));
    }
    Ok(s)
}

/// Simulates free spelling of `sentence` with a fitted model.
pub fn run_online(
    config: &ProtocolConfig,
    subject: &SubjectModel,
    model: &FittedModel,
    freq: &FrequencyTable,
    dictionary: &Dictionary,
    sentence: &str,
    seed: Seed,
) -> Result<(SessionLog, SessionReport)> {
    config.validate()?;
    if model.iti_ms != config.iti_ms {
        return Err(Error::param(
            "iti_ms",
            format!("model trained at {} ms, session runs at {} ms", model.iti_ms, config.iti_ms),
        ));
    }
    let charset = freq.charset().clone();
    let target = normalize_sentence(&charset, sentence)?;
    let mut speller = Speller::new(
        freq,
        dictionary.clone(),
        config.speller_config(),
        seed.fork("online-speller").rng(),
    )?;
    let mut stream = SignalStream::new(subject.clone(), seed.fork("online-eeg").rng())?;
    let timing = config.timing();
    let mut records = Vec::new();
    let mut counts = ConfusionCounts::default();
    let mut by_mechanism = [0usize; 3];
    let mut index = 0u64;

    while speller.mode() != Mode::Exited && index < config.trial_budget {
        if speller.mode() == Mode::Paused {
            speller.resume()?;
        }
        let mode = speller.mode();
        let illuminated = speller.illuminated().to_vec();
        let attending = attending_symbol(speller.prompt(), &target);
        let attended = illuminated.iter().any(|&s| charset.symbol(s) == attending);
        let onset_us = speller.clock().elapsed_us;
        let trial = stream.acquire(onset_us, attended, illuminated.clone())?;
        let theta = speller.theta();
        let (feature, posterior, decision) = model.evaluate(preprocess(&trial)?.as_slice(), theta)?;
        counts.record(attended, decision.is_oddball());
        let event = speller.step(decision, posterior, timing)?;
        records.push(LogRecord::Trial(TrialRecord {
            index,
            onset_us,
            mode,
            illuminated: illuminated.iter().map(|&s| charset.symbol(s)).collect(),
            attending,
            attended,
            feature,
            posterior,
            theta,
            decision,
            clock_us: speller.clock().elapsed_us,
        }));
        if let Some(ev) = event {
            by_mechanism[match ev.mechanism {
                Mechanism::Stage2 => 0,
                Mechanism::Integration => 1,
                Mechanism::Completion => 2,
            }] += 1;
            records.push(LogRecord::Selection(ev));
        }
        index += 1;
    }

    let clock = *speller.clock();
    let prompt = String::from(speller.prompt());
    let n_correct = correct_prefix_len(&prompt, &target);
    let time_s = clock.elapsed_s();
    let active_time_s = clock.active_us() as f64 / 1e6;
    let practical = ItrReport::practical(n_correct, time_s, charset.len())?;
    let mut active = ItrReport::practical(n_correct, active_time_s, charset.len())?;
    active.trials_per_sec = Some(clock.trials as f64 / active_time_s);
    active.bits_per_trial = Some(active.bits_per_sec / (clock.trials as f64 / active_time_s));
    let channel = match counts.confusion() {
        Ok(c) => Some(per_trial_itr_from_session(
            &ChannelSpec::new(c, counts.empirical_prior())?,
            clock.trials as usize,
            active_time_s,
        )?),
        Err(_) => None,
    };
    let report = SessionReport {
        iti_ms: config.iti_ms,
        completed: prompt == target,
        exited: speller.mode() == Mode::Exited,
        target,
        prompt,
        n_correct,
        selections: by_mechanism.iter().sum(),
        selections_by_mechanism: by_mechanism,
        clock,
        time_s,
        active_time_s,
        practical,
        active,
        counts,
        channel,
    };
    Ok((
        SessionLog {
            schema: SESSION_LOG_SCHEMA,
            records,
        },
        report,
    ))
}
