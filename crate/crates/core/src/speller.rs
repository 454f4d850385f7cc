//! The online selection state machine.
//!
//! Stage 1 illuminates the groups of a frequency-biased cycle one at a time.
//! A group classified as oddball switches to stage 2, which illuminates its six
//! members singly; an oddball there selects the character. When the partial
//! word admits at most five dictionary continuations, those are offered singly
//! instead of stage 1. Independently of the stage, every trial feeds a
//! per-symbol evidence accumulator; a symbol that stays the strict leader for
//! ten consecutive trials is selected directly.
//!
//! Each selection is followed by a notification pause (except the final exit
//! selection). The machine reports this as [`Mode::Paused`] until
//! [`Speller::resume`] is called.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::alphabet::{
    build_cdf, form_cycle, shuffled, Cdf, CharacterSet, FrequencyTable, IlluminationCycle, SymbolId,
    BACKSPACE, EXIT, GROUPS_PER_CYCLE, SPACE,
};
use crate::classifier::Label;
use crate::error::{Error, Result};
use crate::math::{exp, ln};
use crate::rng::SimRng;

const DEFAULT_DICTIONARY: &str = include_str!("../data/words_v1.txt");

/// Lower bound on a single log-probability contribution to the accumulator.
const LOG_FLOOR: f64 = -700.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Mode {
    Stage1,
    Stage2,
    Completion,
    Paused,
    Exited,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Mechanism {
    Stage2,
    Integration,
    Completion,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SelectionEvent {
    pub symbol: SymbolId,
    pub character: char,
    pub mechanism: Mechanism,
    /// Session time at the end of the triggering trial.
    pub time_us: u64,
    /// Notification pause that follows; zero only for the exit symbol.
    pub pause_us: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpellerConfig {
    /// Posterior-odds threshold while groups are illuminated.
    pub theta_stage1: f64,
    /// Posterior-odds threshold while single characters are illuminated.
    pub theta_stage2: f64,
    pub pause_us: u64,
    /// Consecutive trials a symbol must lead the accumulator to be selected.
    pub integration_streak: u32,
    /// Full stage-2 passes without a selection before falling back to stage 1.
    pub stage2_max_cycles: u32,
    /// Full completion passes without a selection before falling back to stage 1.
    pub completion_max_cycles: u32,
    /// Completion mode is offered only for this many continuations or fewer.
    pub max_completions: usize,
}

impl Default for SpellerConfig {
    fn default() -> Self {
        SpellerConfig {
            theta_stage1: 1.0,
            theta_stage2: 0.5,
            pause_us: 3_000_000,
            integration_streak: 10,
            stage2_max_cycles: 3,
            completion_max_cycles: 3,
            max_completions: 5,
        }
    }
}

impl SpellerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta_stage1 > 0.0 && self.theta_stage1.is_finite()) {
            return Err(Error::param("theta_stage1", "must be positive"));
        }
        if !(self.theta_stage2 > 0.0 && self.theta_stage2.is_finite()) {
            return Err(Error::param("theta_stage2", "must be positive"));
        }
        if self.integration_streak == 0 {
            return Err(Error::param("integration_streak", "must be at least 1"));
        }
        if self.stage2_max_cycles == 0 || self.completion_max_cycles == 0 {
            return Err(Error::param("max_cycles", "must be at least 1"));
        }
        Ok(())
    }
}

/// Uppercase word list for completion mode.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dictionary {
    words: BTreeSet<String>,
}

impl Dictionary {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words = words
            .into_iter()
            .map(|w| w.as_ref().trim().to_uppercase())
            .filter(|w| !w.is_empty())
            .collect();
        Dictionary { words }
    }

    /// One word per line (whitespace-separated words also accepted); `#` starts a comment.
    pub fn parse(text: &str) -> Self {
        Dictionary::new(
            text.lines()
                .map(|l| l.split('#').next().unwrap_or(""))
                .flat_map(str::split_whitespace),
        )
    }

    pub fn bundled() -> Self {
        Dictionary::parse(DEFAULT_DICTIONARY)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    /// Distinct next characters of words extending `partial`, plus the space
    /// symbol when `partial` is itself a word. Sorted.
    pub fn next_characters(&self, partial: &str) -> Vec<char> {
        let partial = partial.to_uppercase();
        let mut out = BTreeSet::new();
        for w in self.words.range(partial.clone()..) {
            if !w.starts_with(&partial) {
                break;
            }
            match w[partial.len()..].chars().next() {
                Some(c) => {
                    out.insert(c);
                }
                None => {
                    out.insert(SPACE);
                }
            }
        }
        out.into_iter().collect()
    }
}

/// The word being typed: everything after the last space.
pub fn partial_word(prompt: &str) -> &str {
    match prompt.rfind(SPACE) {
        Some(i) => &prompt[i + SPACE.len_utf8()..],
        None => prompt,
    }
}

/// Continuations to offer singly, or empty when completion mode does not apply.
pub fn completion_candidates(
    dict: &Dictionary,
    charset: &CharacterSet,
    prompt: &str,
    max_completions: usize,
) -> Vec<SymbolId> {
    let partial = partial_word(prompt);
    if partial.is_empty() {
        return Vec::new();
    }
    let ids: Vec<SymbolId> = dict
        .next_characters(partial)
        .into_iter()
        .filter_map(|c| charset.id_of(c))
        .collect();
    if ids.is_empty() || ids.len() > max_completions {
        Vec::new()
    } else {
        ids
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionEffect {
    Appended,
    Deleted,
    /// Backspace on an empty prompt.
    Unchanged,
    /// The exit symbol was appended and the session ends.
    Exit,
}

/// Applies one selected character to the prompt.
pub fn apply_selection(prompt: &mut String, symbol: char) -> SelectionEffect {
    match symbol {
        BACKSPACE => {
            if prompt.pop().is_some() {
                SelectionEffect::Deleted
            } else {
                SelectionEffect::Unchanged
            }
        }
        EXIT => {
            prompt.push(EXIT);
            SelectionEffect::Exit
        }
        c => {
            prompt.push(c);
            SelectionEffect::Appended
        }
    }
}

/// Number of leading characters of `prompt` that match `target`.
pub fn correct_prefix_len(prompt: &str, target: &str) -> usize {
    prompt
        .chars()
        .zip(target.chars())
        .take_while(|(a, b)| a == b)
        .count()
}

/// Per-symbol log evidence with a streak detector on its strict maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct Integrator {
    log_evidence: Vec<f64>,
    leader: Option<SymbolId>,
    streak: u32,
    threshold: u32,
}

impl Integrator {
    pub fn new(symbols: usize, threshold: u32) -> Self {
        Integrator {
            log_evidence: vec![0.0; symbols],
            leader: None,
            streak: 0,
            threshold,
        }
    }

    pub fn reset(&mut self) {
        self.log_evidence.iter_mut().for_each(|v| *v = 0.0);
        self.leader = None;
        self.streak = 0;
    }

    pub fn log_evidence(&self) -> &[f64] {
        &self.log_evidence
    }

    /// Normalized integrated probabilities; uniform after a reset.
    pub fn probabilities(&self) -> Vec<f64> {
        let top = self.log_evidence.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
        let w: Vec<f64> = self.log_evidence.iter().map(|v| exp(v - top)).collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect()
    }

    pub fn streak(&self) -> u32 {
        self.streak
    }

    pub fn leader(&self) -> Option<SymbolId> {
        self.leader
    }

    /// Adds one trial: illuminated symbols gain `ln p`, the rest `ln(1 - p)`.
    /// Returns the symbol whose streak reached the threshold, if any.
    pub fn update(&mut self, illuminated: &[SymbolId], posterior: f64) -> Option<SymbolId> {
        let on = ln(posterior).max(LOG_FLOOR);
        let off = ln(1.0 - posterior).max(LOG_FLOOR);
        for (i, v) in self.log_evidence.iter_mut().enumerate() {
            let lit = illuminated.iter().any(|s| s.index() == i);
            *v += if lit { on } else { off };
        }
        let mut best = 0usize;
        let mut tie = false;
        for i in 1..self.log_evidence.len() {
            let (a, b) = (self.log_evidence[i], self.log_evidence[best]);
            if a > b {
                best = i;
                tie = false;
            } else if a == b {
                tie = true;
            }
        }
        if tie {
            self.leader = None;
            self.streak = 0;
            return None;
        }
        let id = SymbolId::new(best).expect("index within symbol set");
        if self.leader == Some(id) {
            self.streak = (self.streak + 1).min(self.threshold);
        } else {
            self.leader = Some(id);
            self.streak = 1;
        }
        (self.streak >= self.threshold).then_some(id)
    }
}

/// Duration of one trial slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrialTiming {
    pub iti_us: u64,
    /// Per-trial processing time on top of the inter-trial interval.
    pub overhead_us: u64,
}

/// Simulated session time and its breakdown.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SessionClock {
    pub elapsed_us: u64,
    pub trials: u64,
    pub iti_total_us: u64,
    pub overhead_total_us: u64,
    pub pause_total_us: u64,
}

impl SessionClock {
    /// One trial slot plus the pauses of the selections it produced.
    pub fn advance(&mut self, timing: TrialTiming, events: &[SelectionEvent]) {
        self.trials += 1;
        self.iti_total_us += timing.iti_us;
        self.overhead_total_us += timing.overhead_us;
        let pauses: u64 = events.iter().map(|e| e.pause_us).sum();
        self.pause_total_us += pauses;
        self.elapsed_us += timing.iti_us + timing.overhead_us + pauses;
    }

    pub fn elapsed_s(&self) -> f64 {
        self.elapsed_us as f64 / 1e6
    }

    /// Time outside notification pauses.
    pub fn active_us(&self) -> u64 {
        self.elapsed_us - self.pause_total_us
    }
}

/// Single-character illumination state shared by stage 2 and completion mode.
#[derive(Debug, Clone, PartialEq)]
struct SingleScan {
    members: Vec<SymbolId>,
    order: Vec<SymbolId>,
    position: usize,
    passes: u32,
}

#[derive(Debug, Clone)]
pub struct Speller {
    charset: CharacterSet,
    cdf: Cdf,
    dictionary: Dictionary,
    config: SpellerConfig,
    rng: SimRng,
    mode: Mode,
    cycle: IlluminationCycle,
    group_position: usize,
    scan: Option<SingleScan>,
    prompt: String,
    integrator: Integrator,
    clock: SessionClock,
}

impl Speller {
    pub fn new(freq: &FrequencyTable, dictionary: Dictionary, config: SpellerConfig, mut rng: SimRng) -> Result<Self> {
        config.validate()?;
        let cdf = build_cdf(freq)?;
        let cycle = form_cycle(cdf.draw_permutation(&mut rng))?;
        let charset = freq.charset().clone();
        let n = charset.len();
        Ok(Speller {
            charset,
            cdf,
            dictionary,
            config,
            rng,
            mode: Mode::Stage1,
            cycle,
            group_position: 0,
            scan: None,
            prompt: String::new(),
            integrator: Integrator::new(n, config.integration_streak),
            clock: SessionClock::default(),
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn prompt(&self) -> &str {
        &self.prompt
    }

    pub fn clock(&self) -> &SessionClock {
        &self.clock
    }

    pub fn charset(&self) -> &CharacterSet {
        &self.charset
    }

    pub fn integrator(&self) -> &Integrator {
        &self.integrator
    }

    pub fn cycle(&self) -> &IlluminationCycle {
        &self.cycle
    }

    pub fn group_position(&self) -> usize {
        self.group_position
    }

    /// Members of the group (stage 2) or the completion candidates.
    pub fn single_members(&self) -> Option<&[SymbolId]> {
        self.scan.as_ref().map(|s| s.members.as_slice())
    }

    /// Symbols illuminated on the next trial; empty while paused or exited.
    pub fn illuminated(&self) -> &[SymbolId] {
        match self.mode {
            Mode::Stage1 => self.cycle.group(self.group_position),
            Mode::Stage2 | Mode::Completion => {
                let s = self.scan.as_ref().expect("scan state in single mode");
                &s.order[s.position..s.position + 1]
            }
            Mode::Paused | Mode::Exited => &[],
        }
    }

    /// Decision threshold for the next trial.
    pub fn theta(&self) -> f64 {
        match self.mode {
            Mode::Stage2 | Mode::Completion => self.config.theta_stage2,
            _ => self.config.theta_stage1,
        }
    }

    /// Processes the classification of the trial just shown.
    pub fn step(&mut self, decision: Label, posterior: f64, timing: TrialTiming) -> Result<Option<SelectionEvent>> {
        match self.mode {
            Mode::Exited => return Err(Error::SessionExited),
            Mode::Paused => return Err(Error::SessionPaused),
            _ => {}
        }
        if !(0.0..=1.0).contains(&posterior) {
            return Err(Error::param("posterior", format!("{posterior} outside [0, 1]")));
        }
        let illuminated = self.illuminated().to_vec();
        let mut selected: Option<(SymbolId, Mechanism)> = None;

        match (self.mode, decision) {
            (Mode::Stage1, Label::Oddball) => {
                let group = self.cycle.group(self.group_position).to_vec();
                self.scan = Some(SingleScan {
                    members: group.clone(),
                    order: group,
                    position: 0,
                    passes: 0,
                });
                self.mode = Mode::Stage2;
            }
            (Mode::Stage1, Label::NonOddball) => {
                self.group_position += 1;
                if self.group_position == GROUPS_PER_CYCLE {
                    self.new_cycle()?;
                }
            }
            (Mode::Stage2, Label::Oddball) => selected = Some((illuminated[0], Mechanism::Stage2)),
            (Mode::Completion, Label::Oddball) => selected = Some((illuminated[0], Mechanism::Completion)),
            (Mode::Stage2 | Mode::Completion, Label::NonOddball) => self.advance_scan()?,
            (Mode::Paused | Mode::Exited, _) => unreachable!("rejected above"),
        }

        let integrated = self.integrator.update(&illuminated, posterior);
        if selected.is_none() {
            selected = integrated.map(|s| (s, Mechanism::Integration));
        }

        let Some((symbol, mechanism)) = selected else {
            self.clock.advance(timing, &[]);
            return Ok(None);
        };
        let character = self.charset.symbol(symbol);
        let effect = apply_selection(&mut self.prompt, character);
        self.integrator.reset();
        self.scan = None;
        let event = SelectionEvent {
            symbol,
            character,
            mechanism,
            time_us: self.clock.elapsed_us + timing.iti_us + timing.overhead_us,
            pause_us: if effect == SelectionEffect::Exit {
                0
            } else {
                self.config.pause_us
            },
        };
        self.clock.advance(timing, &[event]);
        self.mode = if effect == SelectionEffect::Exit {
            Mode::Exited
        } else {
            Mode::Paused
        };
        Ok(Some(event))
    }

    /// Ends a notification pause: completion mode if the dictionary offers
    /// few enough continuations, otherwise a fresh stage-1 cycle.
    pub fn resume(&mut self) -> Result<Mode> {
        if self.mode != Mode::Paused {
            return Err(Error::param("mode", "resume() is only valid while paused"));
        }
        let candidates =
            completion_candidates(&self.dictionary, &self.charset, &self.prompt, self.config.max_completions);
        if candidates.is_empty() {
            self.new_cycle()?;
            self.mode = Mode::Stage1;
        } else {
            let order = shuffled(&candidates, &mut self.rng);
            self.scan = Some(SingleScan {
                members: candidates,
                order,
                position: 0,
                passes: 0,
            });
            self.mode = Mode::Completion;
        }
        Ok(self.mode)
    }

    fn new_cycle(&mut self) -> Result<()> {
        self.cycle = form_cycle(self.cdf.draw_permutation(&mut self.rng))?;
        self.group_position = 0;
        Ok(())
    }

    fn advance_scan(&mut self) -> Result<()> {
        let limit = match self.mode {
            Mode::Stage2 => self.config.stage2_max_cycles,
            _ => self.config.completion_max_cycles,
        };
        let scan = self.scan.as_mut().expect("scan state in single mode");
        scan.position += 1;
        if scan.position < scan.order.len() {
            return Ok(());
        }
        scan.passes += 1;
        if scan.passes >= limit {
            self.scan = None;
            self.mode = Mode::Stage1;
            return self.new_cycle();
        }
        scan.position = 0;
        scan.order = match self.mode {
            Mode::Stage2 => self.cdf.draw_order_of(&scan.members, &mut self.rng),
            _ => shuffled(&scan.members, &mut self.rng),
        };
        Ok(())
    }
}

impl core::fmt::Display for Mode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let s = match self {
            Mode::Stage1 => "stage1",
            Mode::Stage2 => "stage2",
            Mode::Completion => "completion",
            Mode::Paused => "paused",
            Mode::Exited => "exited",
        };
        f.write_str(s)
    }
}

impl core::fmt::Display for Mechanism {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let s = match self {
            Mechanism::Stage2 => "stage2",
            Mechanism::Integration => "integration",
            Mechanism::Completion => "completion",
        };
        f.write_str(s)
    }
}

/// The benchmark sentence, ending in the exit symbol.
pub const BENCHMARK_SENTENCE: &str = "THE>QUICK>BROWN>FOX>JUMPS>OVER>THE>LAZY>DOG*";

/// Converts ordinary text to speller symbols: spaces become the space symbol
/// and letters are uppercased.
pub fn to_symbols(text: &str) -> String {
    text.chars()
        .map(|c| if c == ' ' { SPACE } else { c.to_ascii_uppercase() })
        .collect()
}
