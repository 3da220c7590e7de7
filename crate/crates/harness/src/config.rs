//! Run configuration from `key = value` text or a flat JSON object.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use robust_elicit_core::datagen::{ContamScheme, CvScheme};

use crate::error::{HarnessError, Result};

pub const KEYS: [&str; 23] = [
    "preset",
    "seed",
    "out",
    "repetitions",
    "threads",
    "p",
    "n",
    "n_test",
    "n_sub",
    "s0",
    "mu",
    "snr",
    "snr_or_mu",
    "contam_scheme",
    "gross_value",
    "r",
    "r_val",
    "cv",
    "n_starts",
    "loo_starts",
    "trim_alpha",
    "n_val",
    "train_identification",
];

/// Everything a `run` needs beyond the experiment name. Unset fields fall back
/// to the preset and the experiment's defaults.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub repetitions: Option<usize>,
    pub threads: Option<usize>,
    pub p: Option<usize>,
    pub n: Option<usize>,
    pub n_test: Option<usize>,
    pub n_sub: Option<usize>,
    pub s0: Option<usize>,
    pub mu: Option<f64>,
    pub snr: Option<f64>,
    /// SNR points for regression, μ points for classification.
    pub snr_or_mu: Option<Vec<f64>>,
    pub contam_scheme: Option<ContamScheme>,
    pub gross_value: Option<f64>,
    pub r: Option<Vec<f64>>,
    pub r_val: Option<Vec<f64>>,
    pub cv: Option<Vec<CvScheme>>,
    /// Random starts of the trimmed estimators.
    pub n_starts: Option<usize>,
    /// Random starts per leave-one-out fold (on top of the warm start).
    pub loo_starts: Option<usize>,
    /// Training-trim rate of E6; defaults to `r`.
    pub trim_alpha: Option<f64>,
    /// Test-set sizes of E0/E1.
    pub n_val: Option<Vec<usize>>,
    /// E5/E6: also run leave-one-out identification of training outliers.
    pub train_identification: Option<bool>,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| HarnessError::config(key, format!("cannot parse `{value}`")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    let items: Vec<&str> = value.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(HarnessError::config(key, "empty list"));
    }
    items.into_iter().map(|s| parse(key, s)).collect()
}

impl RunConfig {
    /// Sets one key; later calls override earlier ones.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "preset" => self.preset = Some(value.trim().to_string()),
            "seed" => self.seed = Some(parse(key, value)?),
            "out" => self.out = Some(PathBuf::from(value.trim())),
            "repetitions" => self.repetitions = Some(parse(key, value)?),
            "threads" => self.threads = Some(parse(key, value)?),
            "p" => self.p = Some(parse(key, value)?),
            "n" => self.n = Some(parse(key, value)?),
            "n_test" => self.n_test = Some(parse(key, value)?),
            "n_sub" => self.n_sub = Some(parse(key, value)?),
            "s0" => self.s0 = Some(parse(key, value)?),
            "mu" => self.mu = Some(parse(key, value)?),
            "snr" => self.snr = Some(parse(key, value)?),
            "snr_or_mu" => self.snr_or_mu = Some(parse_list(key, value)?),
            "contam_scheme" => self.contam_scheme = Some(parse(key, value)?),
            "gross_value" => self.gross_value = Some(parse(key, value)?),
            "r" => self.r = Some(parse_list(key, value)?),
            "r_val" => self.r_val = Some(parse_list(key, value)?),
            "cv" => self.cv = Some(parse_list(key, value)?),
            "n_starts" => self.n_starts = Some(parse(key, value)?),
            "loo_starts" => self.loo_starts = Some(parse(key, value)?),
            "trim_alpha" => self.trim_alpha = Some(parse(key, value)?),
            "n_val" => self.n_val = Some(parse_list(key, value)?),
            "train_identification" => self.train_identification = Some(parse(key, value)?),
            _ => return Err(HarnessError::config(key, format!("unknown key; expected one of {}", KEYS.join(", ")))),
        }
        Ok(())
    }

    /// `key = value` lines; `#` starts a comment.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::config(line, format!("line {}: expected key = value", no + 1)))?;
            cfg.set(key.trim(), value)?;
        }
        Ok(cfg)
    }

    /// A flat JSON object with the same keys; lists may be arrays.
    pub fn parse_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| HarnessError::format("config json", e.to_string()))?;
        let obj = value.as_object().ok_or_else(|| HarnessError::format("config json", "top level must be an object"))?;
        let scalar = |key: &str, v: &serde_json::Value| -> Result<String> {
            match v {
                serde_json::Value::String(s) => Ok(s.clone()),
                serde_json::Value::Number(n) => Ok(n.to_string()),
                serde_json::Value::Bool(b) => Ok(b.to_string()),
                _ => Err(HarnessError::config(key, "expected a string, number or boolean")),
            }
        };
        let mut cfg = RunConfig::default();
        for (key, v) in obj {
            let text = match v {
                serde_json::Value::Array(items) => {
                    items.iter().map(|i| scalar(key, i)).collect::<Result<Vec<_>>>()?.join(",")
                }
                other => scalar(key, other)?,
            };
            cfg.set(key, &text)?;
        }
        Ok(cfg)
    }

    /// JSON when the file starts with `{`, key = value text otherwise.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        if text.trim_start().starts_with('{') {
            Self::parse_json(&text)
        } else {
            Self::parse_text(&text)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_and_json_agree() {
        let a = RunConfig::parse_text("preset = reg-p20 # table 1\nseed=42\nr = 0.05, 0.5\ncv=kfold-5,randomized-10\n").unwrap();
        let b = RunConfig::parse_json(r#"{"preset":"reg-p20","seed":42,"r":[0.05,0.5],"cv":["kfold-5","randomized-10"]}"#)
            .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cv.unwrap()[1], CvScheme::Randomized { batches: 10 });
    }

    #[test]
    fn unknown_and_malformed_keys_name_the_key() {
        let e = RunConfig::parse_text("sed = 4\n").unwrap_err();
        assert!(e.to_string().contains("`sed`"), "{e}");
        let e = RunConfig::parse_json(r#"{"repetitions": "many"}"#).unwrap_err();
        assert!(e.to_string().contains("`repetitions`"), "{e}");
        assert!(RunConfig::parse_text("cv = loo\n").is_err());
    }
}
