//! Command-line interface.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use speller_core::alphabet::{monte_carlo_group_stats, CharacterSet, FrequencyTable};
use speller_core::channel::{
    fano_lower_bound, mutual_information, practical_itr, wolpaw_itr, ChannelSpec, ConfusionMatrix,
};
use speller_core::harness::{
    cross_validate, run_online, run_training, subsample_check, train_and_fit, SessionReport,
};
use speller_core::rng::Seed;

use crate::config::{ExperimentConfig, DEFAULT_PRESET, PRESETS};
use crate::formats::{self, ModelFile};
use crate::manifest::{RunIdentity, RunManifest};
use crate::report::{at_chance, CvRow, RateRow, SessionRow, SessionSummaryRow, CHANCE_ACCURACY};

#[derive(Debug, Parser)]
#[command(name = "speller", version, about = "Simulated high-speed oddball speller experiments")]
pub struct Cli {
    /// Root seed; overrides the configuration's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Configuration file, or the name of a bundled preset.
    #[arg(long, global = true, default_value = DEFAULT_PRESET)]
    pub config: String,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a training session, fit the model and cross-validate it.
    Train(TrainArgs),
    /// Spell a sentence online with a fitted model.
    Spell(SpellArgs),
    /// Information-rate calculator.
    Itr(ItrArgs),
    /// Monte Carlo statistics of illumination order.
    Mc(McArgs),
    /// Cross-validate a training set.
    Cv(CvArgs),
    /// List the bundled presets.
    Presets,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TrialFormat {
    Bin,
    Csv,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Cross-validation repeats; the configuration's value when absent.
    #[arg(long)]
    pub cv_repeats: Option<usize>,
    /// Skip cross-validation.
    #[arg(long)]
    pub no_cv: bool,
    /// Also write the training trials.
    #[arg(long, value_enum)]
    pub save_trials: Option<TrialFormat>,
}

#[derive(Debug, Args)]
pub struct SpellArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Target sentence; spaces may be written as spaces.
    #[arg(long)]
    pub sentence: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    /// Trial budget per session.
    #[arg(long)]
    pub budget: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ItrArgs {
    /// Correctly typed characters.
    #[arg(long)]
    pub nc: Option<usize>,
    /// Session time in seconds.
    #[arg(long)]
    pub t: Option<f64>,
    /// Alphabet size for the practical rate.
    #[arg(long)]
    pub alphabet: Option<usize>,
    /// Wolpaw's symmetric-channel formula.
    #[arg(long)]
    pub wolpaw: bool,
    /// Number of classes.
    #[arg(long)]
    pub classes: Option<u32>,
    /// Probability of a correct classification.
    #[arg(long)]
    pub pc: Option<f64>,
    /// `p_oo,p_eo,p_oe,p_ee` with `p_xy = p(decide x | true y)`, or `perfect`.
    #[arg(long)]
    pub confusion: Option<String>,
    /// Oddball to non-oddball ratio such as `1:6`.
    #[arg(long)]
    pub ratio: Option<String>,
    /// Oddball prior.
    #[arg(long)]
    pub prior: Option<f64>,
    /// Trial rate, to express the channel information per second.
    #[arg(long)]
    pub trials_per_sec: Option<f64>,
}

#[derive(Debug, Args)]
pub struct McArgs {
    /// Frequency table file; the configuration's table when absent.
    #[arg(long, conflicts_with = "uniform")]
    pub table: Option<PathBuf>,
    /// Use equal probabilities for all symbols.
    #[arg(long)]
    pub uniform: bool,
    #[arg(long, default_value_t = 100_000)]
    pub runs: usize,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    /// Trial set (`.csv` or binary); simulated from the configuration when absent.
    #[arg(long)]
    pub trials: Option<PathBuf>,
    /// Cross-validate a stratified subsample of this many trials.
    #[arg(long)]
    pub subsample: Option<usize>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub repeats: Option<usize>,
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    if let Command::Presets = cli.command {
        for (name, _) in PRESETS {
            writeln!(stdout, "{name}")?;
        }
        return Ok(());
    }
    let (mut cfg, _) = ExperimentConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.protocol.seed = seed;
    }
    fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    match &cli.command {
        Command::Train(a) => train(&cfg, &cli.out, a, stdout),
        Command::Spell(a) => spell(&cfg, &cli.out, a, stdout),
        Command::Itr(a) => itr(&cfg, &cli.out, a, stdout),
        Command::Mc(a) => mc(&cfg, &cli.out, a, stdout),
        Command::Cv(a) => cv(&cfg, &cli.out, a, stdout),
        Command::Presets => unreachable!("handled above"),
    }
}

fn identity(command: &str, cfg: &ExperimentConfig) -> Result<RunIdentity> {
    let mut id = RunIdentity::new(command, cfg.protocol.seed, cfg.to_toml());
    for p in [&cfg.frequency_table, &cfg.dictionary].into_iter().flatten() {
        id = id.input(p)?;
    }
    Ok(id)
}

fn root(cfg: &ExperimentConfig) -> Seed {
    Seed(cfg.protocol.seed)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn percent(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}

fn train(cfg: &ExperimentConfig, out: &Path, a: &TrainArgs, w: &mut dyn Write) -> Result<()> {
    let subject = cfg.subject_model()?;
    let freq = cfg.frequency_table()?;
    let repeats = a.cv_repeats.unwrap_or(cfg.protocol.cv_repeats);
    ensure!(repeats > 0 || a.no_cv, "--cv-repeats must be positive");
    let id = identity("train", cfg)?.param("cv_repeats", if a.no_cv { 0 } else { repeats });
    let mut manifest = RunManifest::new(id);
    let digest = manifest.digest.clone();

    let (set, model) = train_and_fit(&cfg.protocol, &subject, &freq, root(cfg).fork("train"))?;
    let file = ModelFile {
        manifest: digest.clone(),
        model,
    };
    formats::write_model(&out.join("model.p3md"), &file)?;
    manifest.output(out, "model.p3md")?;
    fs::write(out.join("model.json"), formats::model_json(&file)?)?;
    manifest.output(out, "model.json")?;
    if let Some(fmt) = a.save_trials {
        let name = match fmt {
            TrialFormat::Bin => "trials.p3ts",
            TrialFormat::Csv => "trials.csv",
        };
        formats::write_trials(&out.join(name), &set.trials)?;
        manifest.output(out, name)?;
    }

    let m = &file.model;
    writeln!(w, "config: {}", cfg.name)?;
    writeln!(w, "training trials: {} at ITI {} ms", set.trials.len(), cfg.protocol.iti_ms)?;
    writeln!(
        w,
        "subspace dimensions: oddball {}, non-oddball {}",
        m.features.cpca.oddball.components, m.features.cpca.non_oddball.components
    )?;
    if !a.no_cv {
        let vectors = set.features()?;
        let labels = set.labels();
        let result = cross_validate(&vectors, &labels, cfg.protocol.cv_folds, repeats, cfg.protocol.cpca, root(cfg).fork("cv"))?;
        let row = CvRow::new(&cfg.name, cfg.protocol.iti_ms, cfg.protocol.cv_folds, &result, &digest);
        formats::write_csv(&out.join("cv.csv"), &[row])?;
        manifest.output(out, "cv.csv")?;
        print_cv(w, &result, cfg.protocol.cv_folds)?;
    }
    manifest.write(out)?;
    writeln!(w, "manifest: {digest}")?;
    Ok(())
}

fn print_cv(w: &mut dyn Write, r: &speller_core::harness::CvResult, folds: usize) -> Result<()> {
    writeln!(
        w,
        "cv accuracy ({folds}-fold x {}): {} +/- {} (best {})",
        r.repeats.len(),
        percent(r.mean_accuracy),
        percent(r.std_accuracy),
        percent(r.best_accuracy)
    )?;
    let verdict = if at_chance(r.mean_accuracy) { "at chance" } else { "above chance" };
    writeln!(w, "chance threshold: {} ({verdict})", percent(CHANCE_ACCURACY))?;
    writeln!(w, "offline bits/trial: {:.4}", r.bits_per_trial)?;
    Ok(())
}

fn cv(cfg: &ExperimentConfig, out: &Path, a: &CvArgs, w: &mut dyn Write) -> Result<()> {
    let folds = a.folds.unwrap_or(cfg.protocol.cv_folds);
    let repeats = a.repeats.unwrap_or(cfg.protocol.cv_repeats);
    ensure!(folds >= 2 && repeats >= 1, "need at least 2 folds and 1 repeat");
    let mut id = identity("cv", cfg)?.param("folds", folds).param("repeats", repeats);
    if let Some(n) = a.subsample {
        id = id.param("subsample", n);
    }
    let trials = match &a.trials {
        Some(p) => {
            id = id.input(p)?;
            formats::read_trials(p)?
        }
        None => run_training(&cfg.protocol, &cfg.subject_model()?, &cfg.frequency_table()?, root(cfg).fork("train"))?.trials,
    };
    let mut manifest = RunManifest::new(id);
    let vectors = trials
        .iter()
        .map(speller_core::signal::preprocess)
        .collect::<speller_core::Result<Vec<_>>>()?;
    let labels: Vec<_> = trials.iter().map(|t| t.label).collect();
    let seed = root(cfg).fork("cv");
    let result = match a.subsample {
        Some(n) => subsample_check(&vectors, &labels, n, folds, repeats, cfg.protocol.cpca, seed)?,
        None => cross_validate(&vectors, &labels, folds, repeats, cfg.protocol.cpca, seed)?,
    };
    let row = CvRow::new(&cfg.name, cfg.protocol.iti_ms, folds, &result, &manifest.digest);
    formats::write_csv(&out.join("cv.csv"), &[row])?;
    manifest.output(out, "cv.csv")?;
    manifest.write(out)?;
    writeln!(w, "trials: {}", vectors.len())?;
    if let Some(n) = a.subsample {
        writeln!(w, "subsample: {n}")?;
    }
    print_cv(w, &result, folds)?;
    writeln!(w, "manifest: {}", manifest.digest)?;
    Ok(())
}

fn spell(cfg: &ExperimentConfig, out: &Path, a: &SpellArgs, w: &mut dyn Write) -> Result<()> {
    ensure!(a.runs >= 1, "--runs must be at least 1");
    let mut cfg = cfg.clone();
    if let Some(s) = &a.sentence {
        cfg.sentence = s.clone();
    }
    if let Some(b) = a.budget {
        cfg.protocol.trial_budget = b;
    }
    let file = formats::read_model(&a.model)?;
    ensure!(
        file.model.iti_ms == cfg.protocol.iti_ms,
        "model {} was trained at ITI {} ms but the configuration runs at {} ms",
        a.model.display(),
        file.model.iti_ms,
        cfg.protocol.iti_ms
    );
    let subject = cfg.subject_model()?;
    let freq = cfg.frequency_table()?;
    let dict = cfg.load_dictionary()?;
    let sentence = cfg.sentence_symbols(freq.charset())?;
    let id = identity("spell", &cfg)?.input(&a.model)?.param("runs", a.runs);
    let mut manifest = RunManifest::new(id);
    let digest = manifest.digest.clone();

    let mut reports: Vec<SessionReport> = Vec::with_capacity(a.runs);
    writeln!(w, "config: {}", cfg.name)?;
    writeln!(w, "sentence: {sentence}")?;
    for k in 0..a.runs {
        let seed = root(&cfg).fork_indexed("spell", k as u64);
        let (log, rep) = run_online(&cfg.protocol, &subject, &file.model, &freq, &dict, &sentence, seed)?;
        check_accounting(&cfg, &log, &rep)?;
        let name = format!("session_{k}.jsonl");
        let mut f = BufWriter::new(File::create(out.join(&name))?);
        formats::write_session_log(&mut f, &log, &digest)?;
        f.flush()?;
        drop(f);
        manifest.output(out, &name)?;
        print_session(w, k, &cfg, &rep)?;
        reports.push(rep);
    }
    let rows: Vec<SessionRow> = reports.iter().enumerate().map(|(k, r)| SessionRow::new(k, r, &digest)).collect();
    formats::write_csv(&out.join("sessions.csv"), &rows)?;
    manifest.output(out, "sessions.csv")?;
    let summary = SessionSummaryRow::new(&cfg.name, cfg.protocol.iti_ms, &reports, &digest);
    formats::write_csv(&out.join("sessions_summary.csv"), &[summary])?;
    manifest.output(out, "sessions_summary.csv")?;
    let rates: Vec<RateRow> = reports.iter().enumerate().map(|(k, r)| RateRow::new(k, r, &digest)).collect();
    formats::write_csv(&out.join("rates.csv"), &rates)?;
    manifest.output(out, "rates.csv")?;
    manifest.write(out)?;
    writeln!(w, "manifest: {digest}")?;
    Ok(())
}

/// Recomputes the session time from the log and checks it against the clock.
fn check_accounting(
    cfg: &ExperimentConfig,
    log: &speller_core::harness::SessionLog,
    rep: &SessionReport,
) -> Result<()> {
    let timing = cfg.protocol.timing();
    let trials = log.trials().count() as u64;
    let pauses: u64 = log.selections().map(|s| s.pause_us).sum();
    let expected = trials * (timing.iti_us + timing.overhead_us) + pauses;
    let c = &rep.clock;
    if c.elapsed_us != expected || c.elapsed_us != c.iti_total_us + c.overhead_total_us + c.pause_total_us {
        bail!("session time {} us does not match its logged components ({expected} us)", c.elapsed_us);
    }
    Ok(())
}

fn print_session(w: &mut dyn Write, k: usize, cfg: &ExperimentConfig, r: &SessionReport) -> Result<()> {
    let c = &r.clock;
    let status = if r.completed {
        "completed"
    } else if r.exited {
        "exited early"
    } else {
        "trial budget exhausted"
    };
    writeln!(w, "run {k}: {status}, prompt {}", r.prompt)?;
    writeln!(
        w,
        "  T = {:.3} s = {} trials x ({} ms ITI + {} us overhead) + {:.1} s pauses",
        r.time_s,
        c.trials,
        cfg.protocol.iti_ms,
        cfg.protocol.overhead_us,
        c.pause_total_us as f64 / 1e6
    )?;
    writeln!(w, "  N_c = {}, selections = {}", r.n_correct, r.selections)?;
    writeln!(w, "  practical ITR = {:.4} bits/s", r.practical.bits_per_sec)?;
    writeln!(
        w,
        "  active-time ITR = {:.4} bits/s ({:.4} bits/trial x {:.3} trials/s over {:.3} s)",
        r.active.bits_per_sec,
        r.active.bits_per_trial.unwrap_or(0.0),
        r.active.trials_per_sec.unwrap_or(0.0),
        r.active_time_s
    )?;
    Ok(())
}

#[derive(Debug, Default, Serialize)]
struct ItrOutput {
    mutual_information: Option<f64>,
    mutual_information_per_sec: Option<f64>,
    wolpaw: Option<f64>,
    fano: Option<f64>,
    practical: Option<f64>,
}

fn parse_confusion(s: &str) -> Result<ConfusionMatrix> {
    if s.eq_ignore_ascii_case("perfect") {
        return Ok(ConfusionMatrix::perfect());
    }
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().with_context(|| format!("bad confusion entry {x:?}")))
        .collect::<Result<_>>()?;
    ensure!(v.len() == 4, "--confusion takes four comma-separated values p_oo,p_eo,p_oe,p_ee");
    Ok(ConfusionMatrix::new(v[0], v[1], v[2], v[3])?)
}

fn parse_ratio(s: &str) -> Result<f64> {
    let (a, b) = s.split_once(':').context("--ratio takes the form ODDBALL:NON_ODDBALL, e.g. 1:6")?;
    let (a, b): (f64, f64) = (a.trim().parse()?, b.trim().parse()?);
    ensure!(a > 0.0 && b > 0.0, "ratio terms must be positive");
    Ok(a / (a + b))
}

fn itr(cfg: &ExperimentConfig, out: &Path, a: &ItrArgs, w: &mut dyn Write) -> Result<()> {
    let practical_set = a.nc.is_some() || a.t.is_some() || a.alphabet.is_some();
    let wolpaw_set = a.wolpaw || a.classes.is_some() || a.pc.is_some();
    let channel_set = a.confusion.is_some() || a.ratio.is_some() || a.prior.is_some() || a.trials_per_sec.is_some();
    let modes = [practical_set, wolpaw_set, channel_set].iter().filter(|&&b| b).count();
    if modes != 1 {
        bail!("give exactly one of: --nc/--t/--alphabet, --wolpaw/--classes/--pc, or --confusion with --ratio or --prior");
    }
    let mut o = ItrOutput::default();
    let mut id = identity("itr", cfg)?;
    if practical_set {
        let (Some(nc), Some(t)) = (a.nc, a.t) else {
            bail!("the practical rate needs both --nc and --t");
        };
        let alphabet = a.alphabet.unwrap_or(CharacterSet::default().len());
        o.practical = Some(practical_itr(nc, t, alphabet)?);
        id = id.param("nc", nc).param("t", t).param("alphabet", alphabet);
    } else if wolpaw_set {
        let (true, Some(c), Some(pc)) = (a.wolpaw, a.classes, a.pc) else {
            bail!("the Wolpaw rate needs --wolpaw, --classes and --pc");
        };
        o.wolpaw = Some(wolpaw_itr(c, pc)?);
        id = id.param("classes", c).param("pc", pc);
    } else {
        let Some(conf) = &a.confusion else {
            bail!("the channel rate needs --confusion");
        };
        let confusion = parse_confusion(conf)?;
        let prior = match (&a.ratio, a.prior) {
            (Some(r), None) => parse_ratio(r)?,
            (None, Some(p)) => p,
            _ => bail!("give exactly one of --ratio and --prior"),
        };
        let spec = ChannelSpec::new(confusion, prior)?;
        let mi = mutual_information(&spec);
        let pc = confusion.accuracy(prior);
        o.mutual_information = Some(mi);
        o.wolpaw = Some(wolpaw_itr(2, pc)?);
        o.fano = Some(fano_lower_bound(prior, pc)?);
        if let Some(r) = a.trials_per_sec {
            ensure!(r > 0.0 && r.is_finite(), "--trials-per-sec must be positive");
            o.mutual_information_per_sec = Some(mi * r);
            id = id.param("trials_per_sec", r);
        }
        id = id.param("confusion", conf).param("prior", prior);
    }
    let mut manifest = RunManifest::new(id);
    write_json(&out.join("itr.json"), &o)?;
    manifest.output(out, "itr.json")?;
    manifest.write(out)?;
    let lines = [
        ("mutual information (bits/trial)", o.mutual_information),
        ("mutual information (bits/s)", o.mutual_information_per_sec),
        ("Wolpaw (bits/selection)", o.wolpaw),
        ("Fano lower bound (bits/trial)", o.fano),
        ("practical ITR (bits/s)", o.practical),
    ];
    for (name, v) in lines {
        if let Some(v) = v {
            writeln!(w, "{name}: {v:.6}")?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct McRow {
    rank: usize,
    symbol: char,
    probability: f64,
    mean_group: f64,
    mean_position: f64,
}

fn mc(cfg: &ExperimentConfig, out: &Path, a: &McArgs, w: &mut dyn Write) -> Result<()> {
    ensure!(a.runs >= 1, "--runs must be at least 1");
    let mut id = identity("mc", cfg)?.param("runs", a.runs).param("uniform", a.uniform);
    let freq = if a.uniform {
        FrequencyTable::uniform(CharacterSet::default())
    } else if let Some(p) = &a.table {
        id = id.input(p)?;
        formats::read_frequency_table(p)?
    } else {
        cfg.frequency_table()?
    };
    let mut manifest = RunManifest::new(id);
    let mut rng = root(cfg).fork("mc").rng();
    let stats = monte_carlo_group_stats(&freq, a.runs, &mut rng)?;
    let cs = freq.charset();
    let rows: Vec<McRow> = freq
        .ranked()
        .into_iter()
        .enumerate()
        .map(|(rank, id)| McRow {
            rank: rank + 1,
            symbol: cs.symbol(id),
            probability: freq.probability(id),
            mean_group: stats.mean_group[id.index()],
            mean_position: stats.mean_position[id.index()],
        })
        .collect();
    formats::write_csv(&out.join("mc.csv"), &rows)?;
    manifest.output(out, "mc.csv")?;
    manifest.write(out)?;
    writeln!(w, "runs: {}", a.runs)?;
    writeln!(w, "rank symbol probability mean_group mean_position")?;
    for r in &rows {
        writeln!(
            w,
            "{:>4} {:>6} {:>11.5} {:>10} {:>13}",
            r.rank, r.symbol, r.probability, r.mean_group, r.mean_position
        )?;
    }
    Ok(())
}
