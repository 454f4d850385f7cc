//! Experiment configuration files and the bundled presets.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use speller_core::alphabet::{CharacterSet, FrequencyTable};
use speller_core::harness::ProtocolConfig;
use speller_core::signal::SubjectModel;
use speller_core::speller::{Dictionary, BENCHMARK_SENTENCE};

/// Named presets, `{slow, medium, fast} x {oracle, mid_snr, noise_only}`.
pub const PRESETS: [(&str, &str); 9] = [
    ("slow_oracle", include_str!("../presets/slow_oracle.toml")),
    ("slow_mid_snr", include_str!("../presets/slow_mid_snr.toml")),
    ("slow_noise_only", include_str!("../presets/slow_noise_only.toml")),
    ("medium_oracle", include_str!("../presets/medium_oracle.toml")),
    ("medium_mid_snr", include_str!("../presets/medium_mid_snr.toml")),
    ("medium_noise_only", include_str!("../presets/medium_noise_only.toml")),
    ("fast_oracle", include_str!("../presets/fast_oracle.toml")),
    ("fast_mid_snr", include_str!("../presets/fast_mid_snr.toml")),
    ("fast_noise_only", include_str!("../presets/fast_noise_only.toml")),
];

const SCHEDULE: &str = include_str!("../presets/schedule.toml");

pub const DEFAULT_PRESET: &str = "fast_mid_snr";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubjectPreset {
    Oracle,
    MidSnr,
    NoiseOnly,
}

/// A preset subject with optional parameter overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectSection {
    pub preset: SubjectPreset,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_sigma_uv: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attention: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jitter_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ar_coefficient: Option<f64>,
}

impl SubjectSection {
    pub fn model(&self) -> Result<SubjectModel> {
        let mut m = match self.preset {
            SubjectPreset::Oracle => SubjectModel::oracle(),
            SubjectPreset::MidSnr => SubjectModel::mid_snr(),
            SubjectPreset::NoiseOnly => SubjectModel::noise_only(),
        };
        if let Some(v) = self.noise_sigma_uv {
            m.noise_sigma_uv = v;
        }
        if let Some(v) = self.attention {
            m.attention = v;
        }
        if let Some(v) = self.jitter_ms {
            m.jitter_ms = v;
        }
        if let Some(v) = self.ar_coefficient {
            m.ar_coefficient = v;
        }
        m.validate()?;
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub subject: SubjectSection,
    #[serde(default)]
    pub protocol: ProtocolConfig,
    /// Frequency table file; the bundled English table when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency_table: Option<PathBuf>,
    /// Word list for completion mode; the bundled list when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dictionary: Option<PathBuf>,
    #[serde(default = "default_sentence")]
    pub sentence: String,
}

fn default_sentence() -> String {
    BENCHMARK_SENTENCE.to_string()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.protocol.validate()?;
        cfg.subject.model()?;
        Ok(cfg)
    }

    pub fn preset(name: &str) -> Option<Self> {
        PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| Self::parse(text).expect("bundled preset is valid"))
    }

    /// Loads a file, or a preset when no such file exists.
    /// Relative table and dictionary paths resolve against the file's directory.
    pub fn load(spec: &str) -> Result<(Self, Option<PathBuf>)> {
        let path = Path::new(spec);
        if path.is_file() {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let mut cfg = Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))?;
            let base = path.parent().unwrap_or(Path::new("."));
            for p in [&mut cfg.frequency_table, &mut cfg.dictionary].into_iter().flatten() {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
            return Ok((cfg, Some(path.to_path_buf())));
        }
        match Self::preset(spec) {
            Some(cfg) => Ok((cfg, None)),
            None => {
                let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
                bail!("no config file {spec:?} and no preset of that name (presets: {})", names.join(", "))
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn subject_model(&self) -> Result<SubjectModel> {
        self.subject.model()
    }

    pub fn frequency_table(&self) -> Result<FrequencyTable> {
        match &self.frequency_table {
            Some(p) => crate::formats::read_frequency_table(p),
            None => Ok(FrequencyTable::english()),
        }
    }

    pub fn load_dictionary(&self) -> Result<Dictionary> {
        match &self.dictionary {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                Ok(Dictionary::parse(&text))
            }
            None => Ok(Dictionary::bundled()),
        }
    }

    /// The configured sentence in speller symbols.
    pub fn sentence_symbols(&self, charset: &CharacterSet) -> Result<String> {
        let s = speller_core::speller::to_symbols(&self.sentence);
        Ok(speller_core::harness::normalize_sentence(charset, &s)?)
    }
}

/// Speed order per study day, as preset name prefixes.
pub fn study_schedule() -> Vec<Vec<String>> {
    #[derive(Deserialize)]
    struct Schedule {
        days: Vec<Vec<String>>,
    }
    toml::from_str::<Schedule>(SCHEDULE).expect("bundled schedule is valid").days
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_match_their_names() {
        for (name, _) in PRESETS {
            let cfg = ExperimentConfig::preset(name).unwrap();
            assert_eq!(cfg.name, name);
            let iti = match name.split('_').next().unwrap() {
                "slow" => 400,
                "medium" => 240,
                _ => 160,
            };
            assert_eq!(cfg.protocol.iti_ms, iti);
            let back = ExperimentConfig::parse(&cfg.to_toml()).unwrap();
            assert_eq!(back, cfg);
        }
    }

    #[test]
    fn schedule_is_a_latin_square_of_presets() {
        let days = study_schedule();
        assert_eq!(days.len(), 3);
        for k in 0..3 {
            let mut col: Vec<&str> = days.iter().map(|d| d[k].as_str()).collect();
            col.sort();
            assert_eq!(col, ["fast", "medium", "slow"]);
            for d in &days {
                assert!(ExperimentConfig::preset(&format!("{}_oracle", d[k])).is_some());
            }
        }
    }

    #[test]
    fn overrides_and_rejections() {
        let cfg = ExperimentConfig::parse(
            "name = \"x\"\n[subject]\npreset = \"mid_snr\"\nnoise_sigma_uv = 3.0\n[protocol]\niti_ms = 200\n",
        )
        .unwrap();
        assert_eq!(cfg.subject_model().unwrap().noise_sigma_uv, 3.0);
        assert_eq!(cfg.protocol.duty_cycle, 0.6);
        assert!(ExperimentConfig::parse("name = \"x\"\n[subject]\npreset = \"oracle\"\nbogus = 1\n").is_err());
        assert!(ExperimentConfig::parse("name = \"x\"\n[subject]\npreset = \"oracle\"\n[protocol]\niti_ms = 0\n").is_err());
        assert!(ExperimentConfig::parse("name = \"x\"\n[subject]\npreset = \"oracle\"\nattention = 2.0\n").is_err());
    }
}
