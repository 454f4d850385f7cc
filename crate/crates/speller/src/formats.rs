//! On-disk formats: frequency tables, trial sets, model containers, session
//! logs and report tables.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use anyhow::{anyhow, bail, ensure, Context, Result};
use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use speller_core::alphabet::{CharacterSet, FrequencyTable, SymbolId};
use speller_core::classifier::{ClassifierParams, Label};
use speller_core::features::{Branch, ClassSubspace, CpcaConfig, CpcaModel, DiscriminantModel, FeatureModel};
use speller_core::harness::{FittedModel, LogRecord, SessionLog, SESSION_LOG_SCHEMA};
use speller_core::linalg::Matrix;
use speller_core::signal::{Trial, CHANNELS, TRIAL_SAMPLES};

pub fn read_frequency_table(path: &Path) -> Result<FrequencyTable> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    FrequencyTable::parse(CharacterSet::default(), &text, path.display().to_string())
        .with_context(|| format!("invalid frequency table {}", path.display()))
}

pub fn write_frequency_table(path: &Path, table: &FrequencyTable) -> Result<()> {
    fs::write(path, table.to_text()).with_context(|| format!("writing {}", path.display()))
}

fn label_name(l: Label) -> &'static str {
    match l {
        Label::Oddball => "oddball",
        Label::NonOddball => "non_oddball",
    }
}

fn parse_label(s: &str) -> Result<Label> {
    match s {
        "oddball" => Ok(Label::Oddball),
        "non_oddball" => Ok(Label::NonOddball),
        _ => bail!("unknown label {s:?}"),
    }
}

fn symbol_id(i: u64) -> Result<SymbolId> {
    SymbolId::new(i as usize).ok_or_else(|| anyhow!("symbol id {i} out of range"))
}

// Trial CSV: one row per sample.

#[derive(Serialize, Deserialize)]
struct SampleRow {
    trial: usize,
    label: String,
    onset_us: u64,
    /// Illuminated symbol ids separated by `;`.
    stimulus: String,
    channel: usize,
    sample: usize,
    value: f64,
}

pub fn write_trials_csv<W: Write>(w: W, trials: &[Trial]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for (i, t) in trials.iter().enumerate() {
        let stimulus: Vec<String> = t.stimulus.iter().map(|s| s.index().to_string()).collect();
        let stimulus = stimulus.join(";");
        for c in 0..CHANNELS {
            for j in 0..TRIAL_SAMPLES {
                out.serialize(SampleRow {
                    trial: i,
                    label: label_name(t.label).into(),
                    onset_us: t.onset_us,
                    stimulus: stimulus.clone(),
                    channel: c,
                    sample: j,
                    value: t.sample(c, j),
                })?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_trials_csv<R: Read>(r: R) -> Result<Vec<Trial>> {
    let mut rows = csv::Reader::from_reader(r);
    let mut trials = Vec::new();
    let mut head: Option<SampleRow> = None;
    let mut values = Vec::new();
    let per_trial = CHANNELS * TRIAL_SAMPLES;
    for (n, row) in rows.deserialize::<SampleRow>().enumerate() {
        let row = row.with_context(|| format!("trial CSV row {}", n + 1))?;
        let k = n % per_trial;
        ensure!(
            row.trial == n / per_trial && row.channel * TRIAL_SAMPLES + row.sample == k,
            "trial CSV row {} out of order",
            n + 1
        );
        values.push(row.value);
        match &head {
            None => head = Some(row),
            Some(h) => ensure!(
                h.label == row.label && h.onset_us == row.onset_us && h.stimulus == row.stimulus,
                "trial {} changes its metadata mid-trial",
                row.trial
            ),
        }
        if k == per_trial - 1 {
            let h = head.take().expect("first row seen");
            let stimulus = if h.stimulus.is_empty() {
                Vec::new()
            } else {
                h.stimulus
                    .split(';')
                    .map(|s| symbol_id(s.parse()?))
                    .collect::<Result<Vec<_>>>()?
            };
            trials.push(Trial::new(std::mem::take(&mut values), parse_label(&h.label)?, stimulus, h.onset_us)?);
        }
    }
    ensure!(head.is_none(), "trial CSV ends inside a trial");
    Ok(trials)
}

// Trial binary: 16-byte header then fixed-layout records.

pub const TRIALS_MAGIC: &[u8; 4] = b"P3TS";
pub const TRIALS_VERSION: u16 = 1;

pub fn write_trials_bin<W: Write>(mut w: W, trials: &[Trial]) -> Result<()> {
    w.write_all(TRIALS_MAGIC)?;
    w.write_u16::<LE>(TRIALS_VERSION)?;
    w.write_u16::<LE>(CHANNELS as u16)?;
    w.write_u32::<LE>(TRIAL_SAMPLES as u32)?;
    w.write_u32::<LE>(u32::try_from(trials.len())?)?;
    for t in trials {
        w.write_u8(u8::from(t.label.is_oddball()))?;
        w.write_u64::<LE>(t.onset_us)?;
        w.write_u8(u8::try_from(t.stimulus.len())?)?;
        for s in &t.stimulus {
            w.write_u8(s.index() as u8)?;
        }
        for v in t.samples() {
            w.write_f64::<LE>(*v)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_trials_bin<R: Read>(mut r: R) -> Result<Vec<Trial>> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    ensure!(&magic == TRIALS_MAGIC, "not a trial container");
    let version = r.read_u16::<LE>()?;
    ensure!(version == TRIALS_VERSION, "unsupported trial container version {version}");
    let channels = r.read_u16::<LE>()? as usize;
    let samples = r.read_u32::<LE>()? as usize;
    ensure!(
        channels == CHANNELS && samples == TRIAL_SAMPLES,
        "container holds {channels} x {samples} trials, expected {CHANNELS} x {TRIAL_SAMPLES}"
    );
    let n = r.read_u32::<LE>()? as usize;
    let mut trials = Vec::with_capacity(n);
    for _ in 0..n {
        let label = match r.read_u8()? {
            1 => Label::Oddball,
            0 => Label::NonOddball,
            b => bail!("bad label byte {b}"),
        };
        let onset = r.read_u64::<LE>()?;
        let k = r.read_u8()? as usize;
        let stimulus = (0..k)
            .map(|_| symbol_id(u64::from(r.read_u8()?)))
            .collect::<Result<Vec<_>>>()?;
        let mut values = vec![0.0; channels * samples];
        r.read_f64_into::<LE>(&mut values)?;
        trials.push(Trial::new(values, label, stimulus, onset)?);
    }
    let mut rest = [0u8; 1];
    ensure!(r.read(&mut rest)? == 0, "trailing bytes after the last trial");
    Ok(trials)
}

/// Writes `.csv` as text and anything else as the binary container.
pub fn write_trials(path: &Path, trials: &[Trial]) -> Result<()> {
    let f = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    if path.extension().is_some_and(|e| e == "csv") {
        write_trials_csv(f, trials)
    } else {
        write_trials_bin(f, trials)
    }
}

pub fn read_trials(path: &Path) -> Result<Vec<Trial>> {
    let f = BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
    if path.extension().is_some_and(|e| e == "csv") {
        read_trials_csv(f)
    } else {
        read_trials_bin(f)
    }
    .with_context(|| format!("reading trials from {}", path.display()))
}

// Model container: header, payload, SHA-256 of the payload.

pub const MODEL_MAGIC: &[u8; 4] = b"P3MD";
pub const MODEL_VERSION: u16 = 1;

/// A fitted model together with the manifest digest of the run that made it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub manifest: String,
    pub model: FittedModel,
}

fn put_vec(w: &mut Vec<u8>, v: &[f64]) -> Result<()> {
    w.write_u32::<LE>(u32::try_from(v.len())?)?;
    for x in v {
        w.write_f64::<LE>(*x)?;
    }
    Ok(())
}

fn get_vec(r: &mut &[u8]) -> Result<Vec<f64>> {
    let n = r.read_u32::<LE>()? as usize;
    ensure!(n * 8 <= r.len(), "vector length {n} exceeds the payload");
    let mut v = vec![0.0; n];
    r.read_f64_into::<LE>(&mut v)?;
    Ok(v)
}

fn put_subspace(w: &mut Vec<u8>, s: &ClassSubspace) -> Result<()> {
    w.write_u8(u8::from(s.class.is_oddball()))?;
    put_vec(w, &s.mean)?;
    w.write_u32::<LE>(s.basis.rows() as u32)?;
    w.write_u32::<LE>(s.basis.cols() as u32)?;
    for x in s.basis.as_slice() {
        w.write_f64::<LE>(*x)?;
    }
    w.write_u32::<LE>(s.components as u32)?;
    put_vec(w, &s.eigenvalues)?;
    w.write_f64::<LE>(s.total_variance)?;
    Ok(())
}

fn get_subspace(r: &mut &[u8]) -> Result<ClassSubspace> {
    let class = if r.read_u8()? == 1 { Label::Oddball } else { Label::NonOddball };
    let mean = get_vec(r)?;
    let rows = r.read_u32::<LE>()? as usize;
    let cols = r.read_u32::<LE>()? as usize;
    ensure!(cols == mean.len(), "basis width {cols} differs from mean length {}", mean.len());
    ensure!(rows * cols * 8 <= r.len(), "basis exceeds the payload");
    let mut data = vec![0.0; rows * cols];
    r.read_f64_into::<LE>(&mut data)?;
    let components = r.read_u32::<LE>()? as usize;
    let eigenvalues = get_vec(r)?;
    ensure!(components <= rows && eigenvalues.len() == components, "inconsistent subspace sizes");
    Ok(ClassSubspace {
        class,
        mean,
        basis: Matrix::from_row_major(rows, cols, data)?,
        components,
        eigenvalues,
        total_variance: r.read_f64::<LE>()?,
    })
}

fn put_branch(w: &mut Vec<u8>, b: &Branch) -> Result<()> {
    put_vec(w, &b.direction)?;
    for x in [b.mean_o, b.mean_e, b.variance, b.prior_o, b.ridge] {
        w.write_f64::<LE>(x)?;
    }
    Ok(())
}

fn get_branch(r: &mut &[u8]) -> Result<Branch> {
    let direction = get_vec(r)?;
    let mut x = [0.0; 5];
    r.read_f64_into::<LE>(&mut x)?;
    Ok(Branch {
        direction,
        mean_o: x[0],
        mean_e: x[1],
        variance: x[2],
        prior_o: x[3],
        ridge: x[4],
    })
}

pub fn encode_model(file: &ModelFile) -> Result<Vec<u8>> {
    let m = &file.model;
    let mut p = Vec::new();
    let digest = hex::decode(&file.manifest).context("manifest digest is not hex")?;
    ensure!(digest.len() == 32, "manifest digest must be 32 bytes");
    p.extend_from_slice(&digest);
    p.write_u32::<LE>(m.iti_ms)?;
    p.write_f64::<LE>(m.features.cpca.config.eta)?;
    p.write_u32::<LE>(m.features.cpca.config.max_components as u32)?;
    put_subspace(&mut p, &m.features.cpca.oddball)?;
    put_subspace(&mut p, &m.features.cpca.non_oddball)?;
    put_branch(&mut p, &m.features.disc.oddball)?;
    put_branch(&mut p, &m.features.disc.non_oddball)?;
    let c = &m.classifier;
    for x in [c.mu_o, c.mu_e, c.sigma2, c.prior_o, c.prior_e, c.lambda_fa, c.lambda_om] {
        p.write_f64::<LE>(x)?;
    }

    let mut out = Vec::with_capacity(p.len() + 48);
    out.extend_from_slice(MODEL_MAGIC);
    out.write_u16::<LE>(MODEL_VERSION)?;
    out.write_u16::<LE>(0)?;
    out.write_u64::<LE>(p.len() as u64)?;
    out.extend_from_slice(&p);
    out.extend_from_slice(&Sha256::digest(&p));
    Ok(out)
}

pub fn decode_model(bytes: &[u8]) -> Result<ModelFile> {
    ensure!(bytes.len() >= 16 && &bytes[..4] == MODEL_MAGIC, "not a model container");
    let mut h = &bytes[4..16];
    let version = h.read_u16::<LE>()?;
    ensure!(version == MODEL_VERSION, "unsupported model version {version}");
    h.read_u16::<LE>()?;
    let len = h.read_u64::<LE>()? as usize;
    ensure!(bytes.len() == 16 + len + 32, "model container has the wrong length");
    let payload = &bytes[16..16 + len];
    ensure!(Sha256::digest(payload).as_slice() == &bytes[16 + len..], "model checksum mismatch");

    let mut r = payload;
    let manifest = hex::encode(&r[..32]);
    r = &r[32..];
    let iti_ms = r.read_u32::<LE>()?;
    let config = CpcaConfig {
        eta: r.read_f64::<LE>()?,
        max_components: r.read_u32::<LE>()? as usize,
    };
    let oddball = get_subspace(&mut r)?;
    let non_oddball = get_subspace(&mut r)?;
    let b_o = get_branch(&mut r)?;
    let b_e = get_branch(&mut r)?;
    ensure!(
        oddball.mean.len() == non_oddball.mean.len()
            && b_o.direction.len() == oddball.basis.rows()
            && b_e.direction.len() == non_oddball.basis.rows(),
        "inconsistent model dimensions"
    );
    let mut c = [0.0; 7];
    r.read_f64_into::<LE>(&mut c)?;
    ensure!(r.is_empty(), "trailing bytes in model payload");
    Ok(ModelFile {
        manifest,
        model: FittedModel {
            iti_ms,
            features: FeatureModel {
                cpca: CpcaModel {
                    oddball,
                    non_oddball,
                    config,
                },
                disc: DiscriminantModel {
                    oddball: b_o,
                    non_oddball: b_e,
                },
            },
            classifier: ClassifierParams {
                mu_o: c[0],
                mu_e: c[1],
                sigma2: c[2],
                prior_o: c[3],
                prior_e: c[4],
                lambda_fa: c[5],
                lambda_om: c[6],
            },
        },
    })
}

pub fn write_model(path: &Path, file: &ModelFile) -> Result<()> {
    fs::write(path, encode_model(file)?).with_context(|| format!("writing {}", path.display()))
}

pub fn read_model(path: &Path) -> Result<ModelFile> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    decode_model(&bytes).with_context(|| format!("invalid model {}", path.display()))
}

/// Human-readable dump of the same content.
pub fn model_json(file: &ModelFile) -> Result<String> {
    Ok(serde_json::to_string_pretty(file)? + "\n")
}

pub fn parse_model_json(text: &str) -> Result<ModelFile> {
    Ok(serde_json::from_str(text)?)
}

// Session log: a header line, then one JSON record per line.

#[derive(Debug, Serialize, Deserialize)]
struct LogHeader {
    kind: String,
    schema: u32,
    manifest: String,
}

pub fn write_session_log<W: Write>(mut w: W, log: &SessionLog, manifest: &str) -> Result<()> {
    let header = LogHeader {
        kind: "header".into(),
        schema: log.schema,
        manifest: manifest.into(),
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for rec in &log.records {
        serde_json::to_writer(&mut w, rec)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Returns the log and the manifest digest from its header.
pub fn read_session_log<R: BufRead>(r: R) -> Result<(SessionLog, String)> {
    let mut lines = r.lines();
    let first = lines.next().ok_or_else(|| anyhow!("empty session log"))??;
    let header: LogHeader = serde_json::from_str(&first).context("session log header")?;
    ensure!(header.kind == "header", "session log must start with a header record");
    ensure!(header.schema == SESSION_LOG_SCHEMA, "unsupported session log schema {}", header.schema);
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LogRecord = serde_json::from_str(&line).with_context(|| format!("session log line {}", i + 2))?;
        records.push(rec);
    }
    Ok((
        SessionLog {
            schema: header.schema,
            records,
        },
        header.manifest,
    ))
}

/// Writes serializable rows as CSV with a header.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
