//! Flat `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys use snake_case;
//! dashes are accepted and normalized to underscores.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::domain::{Semester, Term};
use crate::error::{Error, Result};
use crate::synth::{DagSpec, SynthConfig};
use crate::train::TrainConfig;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_").to_ascii_lowercase()
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
            let key = normalize(key);
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", i + 1)));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Config { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Config::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(normalize(key), value.into());
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(&normalize(key)).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|e| Error::Config(format!("{key} = {v:?}: {e}"))))
            .transpose()
    }

    /// Entries of `other` replace entries of `self`.
    pub fn merged(mut self, other: &Config) -> Config {
        for (k, v) in &other.values {
            self.values.insert(k.clone(), v.clone());
        }
        self
    }

    fn apply<T: FromStr>(&self, key: &str, slot: &mut T) -> Result<()>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = self.get(key)? {
            *slot = v;
        }
        Ok(())
    }

    pub fn synth_config(&self) -> Result<SynthConfig> {
        let mut c = SynthConfig::default();
        self.apply("n_courses", &mut c.n_courses)?;
        self.apply("n_departments", &mut c.n_departments)?;
        self.apply("n_majors", &mut c.n_majors)?;
        self.apply("n_students", &mut c.n_students)?;
        self.apply("n_semesters", &mut c.n_semesters)?;
        self.apply("seed", &mut c.seed)?;
        self.apply("p_prepared", &mut c.p_prepared)?;
        self.apply("p_unprepared", &mut c.p_unprepared)?;
        self.apply("pnp_fraction", &mut c.pnp_fraction)?;
        self.apply("courses_per_semester", &mut c.courses_per_semester)?;
        self.apply("first_semester", &mut c.first_semester)?;
        self.apply("max_start", &mut c.max_start)?;
        self.apply("ability_spread", &mut c.ability_spread)?;
        self.apply("difficulty_spread", &mut c.difficulty_spread)?;
        self.apply("cross_department", &mut c.cross_department)?;
        self.apply("own_department_weight", &mut c.own_department_weight)?;
        self.apply("ready_weight", &mut c.ready_weight)?;
        self.apply("unready_weight", &mut c.unready_weight)?;
        if let Some(edges) = self.get::<usize>("dag_edges")? {
            c.dag = DagSpec::Random { edges };
        }
        if c.first_semester.term == Term::Summer {
            return Err(Error::Config("first_semester must be a Fall or Spring semester".into()));
        }
        Ok(c)
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let mut c = TrainConfig::default();
        self.apply("learning_rate", &mut c.learning_rate)?;
        self.apply("lr_decay", &mut c.lr_decay)?;
        self.apply("weight_decay", &mut c.weight_decay)?;
        self.apply("clip_norm", &mut c.clip_norm)?;
        self.apply("dropout", &mut c.dropout_rate)?;
        self.apply("batch_size", &mut c.batch_size)?;
        self.apply("epochs", &mut c.epochs)?;
        self.apply("seed", &mut c.seed)?;
        self.apply("hidden", &mut c.hidden_dim)?;
        if let Some(side) = self.get::<usize>("side")? {
            c.side_dim = Some(side);
        }
        c.validate()?;
        Ok(c)
    }
}

/// Parses `"train_end,val,test"`, each in any semester syntax.
pub fn parse_split(text: &str) -> Result<(Semester, Semester, Semester)> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let [a, b, c] = parts.as_slice() else {
        return Err(Error::Config(format!("split {text:?}: expected three comma-separated semesters")));
    };
    let sem = |s: &str| s.parse::<Semester>().map_err(|e| Error::Config(format!("split: {e}")));
    Ok((sem(a)?, sem(b)?, sem(c)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_overrides() {
        let cfg = Config::parse("# synth\nn-students = 50\n\nseed=7\np_prepared = 0.9\n").unwrap();
        assert_eq!(cfg.get::<usize>("n_students").unwrap(), Some(50));
        let mut flags = Config::default();
        flags.set("seed", "11");
        let merged = cfg.merged(&flags);
        let synth = merged.synth_config().unwrap();
        assert_eq!((synth.n_students, synth.seed, synth.p_prepared), (50, 11, 0.9));
    }

    #[test]
    fn rejects_garbage() {
        assert!(Config::parse("no equals sign").is_err());
        let cfg = Config::parse("epochs = many").unwrap();
        assert!(cfg.train_config().is_err());
    }

    #[test]
    fn split_syntax() {
        let (a, b, c) = parse_split("2015:Fall,2016:Spring, Spring 2017").unwrap();
        assert_eq!(a, Semester::new(2015, Term::Fall));
        assert_eq!(b, Semester::new(2016, Term::Spring));
        assert_eq!(c, Semester::new(2017, Term::Spring));
        assert!(parse_split("2015:Fall").is_err());
    }
}
