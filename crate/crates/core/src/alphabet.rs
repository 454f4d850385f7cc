//! The 42-symbol matrix, character frequencies and biased illumination orders.
//!
//! An illumination cycle is a permutation of the whole symbol set drawn by
//! inverse-transform sampling without replacement: frequent symbols tend to
//! land early, so they are usually illuminated in the first group or two.
//! After each draw the chosen symbol's mass is removed and the remainder is
//! renormalized.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

pub const SYMBOL_COUNT: usize = 42;
pub const GRID_ROWS: usize = 6;
pub const GRID_COLS: usize = 7;
/// Symbols per stage-1 group.
pub const GROUP_SIZE: usize = 6;
/// Groups per illumination cycle.
pub const GROUPS_PER_CYCLE: usize = SYMBOL_COUNT / GROUP_SIZE;

pub const SPACE: char = '>';
pub const BACKSPACE: char = '<';
pub const EXIT: char = '*';

/// Default symbol order, which is also the row-major grid layout.
pub const DEFAULT_SYMBOLS: &str = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789><*.,?";

const DEFAULT_TABLE: &str = include_str!("../data/english_v1.txt");
const DEFAULT_TABLE_SOURCE: &str = "english_v1";
const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Index of a symbol within its [`CharacterSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct SymbolId(u8);

impl SymbolId {
    pub fn new(index: usize) -> Option<Self> {
        (index < SYMBOL_COUNT).then(|| SymbolId(index as u8))
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CharacterSet {
    symbols: Vec<char>,
}

impl CharacterSet {
    /// Validates a 42-symbol set; the order doubles as the row-major grid layout.
    pub fn new(symbols: Vec<char>) -> Result<Self> {
        if symbols.len() != SYMBOL_COUNT {
            return Err(Error::InvalidCharacterSet(format!(
                "expected {SYMBOL_COUNT} symbols, got {}",
                symbols.len()
            )));
        }
        for (i, c) in symbols.iter().enumerate() {
            if symbols[..i].contains(c) {
                return Err(Error::InvalidCharacterSet(format!("duplicate symbol {c:?}")));
            }
            if c.is_whitespace() || *c == '#' {
                return Err(Error::InvalidCharacterSet(format!("symbol {c:?} is reserved")));
            }
        }
        let required = ('A'..='Z').chain([SPACE, BACKSPACE, EXIT]);
        for c in required {
            if !symbols.contains(&c) {
                return Err(Error::InvalidCharacterSet(format!("missing required symbol {c:?}")));
            }
        }
        Ok(CharacterSet { symbols })
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = SymbolId> {
        (0..SYMBOL_COUNT as u8).map(SymbolId)
    }

    pub fn id_of(&self, c: char) -> Option<SymbolId> {
        self.symbols.iter().position(|&s| s == c).map(|i| SymbolId(i as u8))
    }

    pub fn symbol(&self, id: SymbolId) -> char {
        self.symbols[id.index()]
    }

    /// (row, column) on the 6x7 display grid.
    pub fn grid_position(&self, id: SymbolId) -> (usize, usize) {
        (id.index() / GRID_COLS, id.index() % GRID_COLS)
    }

    pub fn space(&self) -> SymbolId {
        self.id_of(SPACE).expect("validated at construction")
    }

    pub fn backspace(&self) -> SymbolId {
        self.id_of(BACKSPACE).expect("validated at construction")
    }

    pub fn exit(&self) -> SymbolId {
        self.id_of(EXIT).expect("validated at construction")
    }

    pub fn contains_str(&self, s: &str) -> bool {
        s.chars().all(|c| self.id_of(c).is_some())
    }
}

impl Default for CharacterSet {
    fn default() -> Self {
        CharacterSet::new(DEFAULT_SYMBOLS.chars().collect()).expect("default set is valid")
    }
}

/// Per-symbol probabilities over a [`CharacterSet`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FrequencyTable {
    charset: CharacterSet,
    prob: Vec<f64>,
    source: String,
}

impl FrequencyTable {
    /// `prob` is indexed by symbol id.
    pub fn new(charset: CharacterSet, prob: Vec<f64>, source: impl Into<String>) -> Result<Self> {
        if prob.len() != charset.len() {
            return Err(Error::InvalidFrequencyTable(format!(
                "expected {} probabilities, got {}",
                charset.len(),
                prob.len()
            )));
        }
        for (c, p) in charset.symbols().iter().zip(&prob) {
            if !p.is_finite() || *p <= 0.0 {
                return Err(Error::InvalidFrequencyTable(format!(
                    "probability of {c:?} must be positive, got {p}"
                )));
            }
        }
        let total: f64 = prob.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidFrequencyTable(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(FrequencyTable {
            charset,
            prob,
            source: source.into(),
        })
    }

    pub fn uniform(charset: CharacterSet) -> Self {
        let prob = vec![1.0 / SYMBOL_COUNT as f64; SYMBOL_COUNT];
        FrequencyTable {
            charset,
            prob,
            source: "uniform".to_string(),
        }
    }

    /// The bundled English table on the default character set.
    pub fn english() -> Self {
        Self::parse(CharacterSet::default(), DEFAULT_TABLE, DEFAULT_TABLE_SOURCE)
            .expect("bundled table is valid")
    }

    /// Parses the two-column text format: `<symbol> <probability>` per line,
    /// blank lines and `#` comments ignored. Every symbol must appear once.
    pub fn parse(charset: CharacterSet, text: &str, source: impl Into<String>) -> Result<Self> {
        let mut prob: Vec<Option<f64>> = vec![None; charset.len()];
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(sym), Some(val), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::InvalidFrequencyTable(format!(
                    "line {}: expected `<symbol> <probability>`",
                    lineno + 1
                )));
            };
            let mut chars = sym.chars();
            let (Some(c), None) = (chars.next(), chars.next()) else {
                return Err(Error::InvalidFrequencyTable(format!(
                    "line {}: symbol {sym:?} is not a single character",
                    lineno + 1
                )));
            };
            let id = charset.id_of(c).ok_or_else(|| {
                Error::InvalidFrequencyTable(format!("line {}: unknown symbol {c:?}", lineno + 1))
            })?;
            let p: f64 = val.parse().map_err(|_| {
                Error::InvalidFrequencyTable(format!("line {}: bad probability {val:?}", lineno + 1))
            })?;
            if prob[id.index()].replace(p).is_some() {
                return Err(Error::InvalidFrequencyTable(format!(
                    "line {}: duplicate symbol {c:?}",
                    lineno + 1
                )));
            }
        }
        let mut out = Vec::with_capacity(prob.len());
        for (i, p) in prob.into_iter().enumerate() {
            match p {
                Some(p) => out.push(p),
                None => {
                    return Err(Error::InvalidFrequencyTable(format!(
                        "missing symbol {:?}",
                        charset.symbols()[i]
                    )))
                }
            }
        }
        FrequencyTable::new(charset, out, source)
    }

    /// Serializes to the format accepted by [`FrequencyTable::parse`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# source: {}", self.source);
        for (c, p) in self.charset.symbols().iter().zip(&self.prob) {
            let _ = writeln!(s, "{c} {p}");
        }
        s
    }

    pub fn charset(&self) -> &CharacterSet {
        &self.charset
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn probability(&self, id: SymbolId) -> f64 {
        self.prob[id.index()]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.prob
    }

    /// Symbols by descending probability; equal probabilities keep symbol order.
    pub fn ranked(&self) -> Vec<SymbolId> {
        let mut ids: Vec<SymbolId> = self.charset.ids().collect();
        ids.sort_by(|a, b| {
            self.prob[b.index()]
                .total_cmp(&self.prob[a.index()])
                .then(a.cmp(b))
        });
        ids
    }
}

/// Cumulative distribution over the ranked symbol order.
#[derive(Debug, Clone, PartialEq)]
pub struct Cdf {
    order: Vec<SymbolId>,
    mass: Vec<f64>,
    breakpoints: Vec<f64>,
}

pub fn build_cdf(freq: &FrequencyTable) -> Result<Cdf> {
    // Re-validate: tables are constructible only through checked paths, but a
    // deserialized table may have bypassed them.
    let checked = FrequencyTable::new(freq.charset.clone(), freq.prob.clone(), freq.source.clone())?;
    let order = checked.ranked();
    let mass: Vec<f64> = order.iter().map(|id| checked.prob[id.index()]).collect();
    let mut acc = 0.0;
    let breakpoints = mass
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    Ok(Cdf {
        order,
        mass,
        breakpoints,
    })
}

impl Cdf {
    pub fn order(&self) -> &[SymbolId] {
        &self.order
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Probability mass of each symbol in `order()`.
    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn mass_of(&self, id: SymbolId) -> f64 {
        let pos = self.order.iter().position(|s| *s == id).expect("complete order");
        self.mass[pos]
    }

    /// The symbol whose CDF interval contains `u`, for `u` in `[0, 1)`.
    pub fn inverse(&self, u: f64) -> SymbolId {
        let k = self.breakpoints.partition_point(|&b| b <= u);
        self.order[k.min(self.order.len() - 1)]
    }

    /// One frequency-biased permutation of the full symbol set.
    pub fn draw_permutation<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<SymbolId> {
        draw_weighted(&self.order, &self.mass, rng)
    }

    /// Frequency-biased order of a subset of symbols (stage-2 re-randomization).
    pub fn draw_order_of<R: Rng + ?Sized>(&self, members: &[SymbolId], rng: &mut R) -> Vec<SymbolId> {
        let masses: Vec<f64> = members.iter().map(|&m| self.mass_of(m)).collect();
        draw_weighted(members, &masses, rng)
    }
}

/// Inverse-transform sampling without replacement with proportional renormalization.
fn draw_weighted<R: Rng + ?Sized>(items: &[SymbolId], masses: &[f64], rng: &mut R) -> Vec<SymbolId> {
    let mut remaining: Vec<f64> = masses.to_vec();
    let mut out = Vec::with_capacity(items.len());
    for _ in 0..items.len() {
        let total: f64 = remaining.iter().sum();
        let u = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &m) in remaining.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            acc += m;
            pick = Some(i);
            if u < acc {
                break;
            }
        }
        let i = pick.expect("positive mass remains");
        out.push(items[i]);
        remaining[i] = 0.0;
    }
    out
}

/// A permutation of all symbols, viewed as 7 consecutive groups of 6.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IlluminationCycle {
    order: Vec<SymbolId>,
}

pub fn form_cycle(permutation: Vec<SymbolId>) -> Result<IlluminationCycle> {
    if permutation.len() != SYMBOL_COUNT {
        return Err(Error::NotAPermutation(format!(
            "expected {SYMBOL_COUNT} symbols, got {}",
            permutation.len()
        )));
    }
    let mut seen = [false; SYMBOL_COUNT];
    for s in &permutation {
        if core::mem::replace(&mut seen[s.index()], true) {
            return Err(Error::NotAPermutation(format!("symbol id {} repeated", s.index())));
        }
    }
    Ok(IlluminationCycle { order: permutation })
}

impl IlluminationCycle {
    pub fn order(&self) -> &[SymbolId] {
        &self.order
    }

    /// Group `g` (0-based); its internal order is the stage-2 order.
    pub fn group(&self, g: usize) -> &[SymbolId] {
        &self.order[g * GROUP_SIZE..(g + 1) * GROUP_SIZE]
    }

    pub fn groups(&self) -> impl Iterator<Item = &[SymbolId]> {
        self.order.chunks(GROUP_SIZE)
    }

    /// 0-based group containing `id`.
    pub fn group_of(&self, id: SymbolId) -> usize {
        self.position_of(id) / GROUP_SIZE
    }

    /// 0-based position of `id` in the cycle.
    pub fn position_of(&self, id: SymbolId) -> usize {
        self.order.iter().position(|s| *s == id).expect("complete permutation")
    }
}

/// Uniformly shuffled order of `items`.
pub fn shuffled<R: Rng + ?Sized>(items: &[SymbolId], rng: &mut R) -> Vec<SymbolId> {
    let mut v = items.to_vec();
    v.shuffle(rng);
    v
}

/// Monte Carlo summary of where each symbol lands in an illumination cycle.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroupStats {
    pub runs: usize,
    /// Mean 1-based group index, indexed by symbol id.
    pub mean_group: Vec<f64>,
    /// Mean 1-based position in the cycle, indexed by symbol id.
    pub mean_position: Vec<f64>,
}

pub fn monte_carlo_group_stats<R: Rng + ?Sized>(
    freq: &FrequencyTable,
    n_runs: usize,
    rng: &mut R,
) -> Result<GroupStats> {
    if n_runs == 0 {
        return Err(Error::param("n_runs", "must be at least 1"));
    }
    let cdf = build_cdf(freq)?;
    let mut group_sum = vec![0u64; SYMBOL_COUNT];
    let mut pos_sum = vec![0u64; SYMBOL_COUNT];
    for _ in 0..n_runs {
        let perm = cdf.draw_permutation(rng);
        for (pos, s) in perm.iter().enumerate() {
            group_sum[s.index()] += (pos / GROUP_SIZE + 1) as u64;
            pos_sum[s.index()] += (pos + 1) as u64;
        }
    }
    let n = n_runs as f64;
    Ok(GroupStats {
        runs: n_runs,
        mean_group: group_sum.iter().map(|&g| g as f64 / n).collect(),
        mean_position: pos_sum.iter().map(|&p| p as f64 / n).collect(),
    })
}
