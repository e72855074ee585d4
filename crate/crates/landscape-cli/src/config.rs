//! Flag/config-file resolution: every parameter can come from the command
//! line or from a `key = value` text file, with flags taking precedence.
//! Each command dumps its fully resolved parameters next to its artifacts
//! so any run can be reproduced from the dump alone.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

/// Raw `key = value` pairs from an optional config file.
#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
        let mut values = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .or_else(|| line.split_once(char::is_whitespace))
                .ok_or_else(|| format!("{}:{}: expected `key = value`", path.display(), idx + 1))?;
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    /// Flag wins over file value; file value wins over the default.
    pub fn resolve<T>(&self, key: &str, flag: Option<T>, default: T) -> Result<T, String>
    where
        T: FromStr,
        T::Err: Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.values.get(key) {
            Some(raw) => raw
                .parse()
                .map_err(|e| format!("config key {key} = {raw:?}: {e}")),
            None => Ok(default),
        }
    }

    /// Like [`resolve`](Self::resolve) but without a default.
    pub fn resolve_required<T>(&self, key: &str, flag: Option<T>) -> Result<T, String>
    where
        T: FromStr,
        T::Err: Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.values.get(key) {
            Some(raw) => raw
                .parse()
                .map_err(|e| format!("config key {key} = {raw:?}: {e}")),
            None => Err(format!("missing required parameter --{key}")),
        }
    }
}

/// Accumulates the resolved parameters for the reproducibility dump.
#[derive(Debug, Default)]
pub struct ResolvedDump {
    entries: BTreeMap<String, String>,
}

impl ResolvedDump {
    pub fn put(&mut self, key: &str, value: impl Display) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn render(&self, command: &str) -> String {
        let mut out = format!("command = {command}\n");
        for (k, v) in &self.entries {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}

/// `1/8` or `0.125`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WidthScale(pub f64);

impl FromStr for WidthScale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let value = if let Some((num, den)) = s.split_once('/') {
            let n: f64 = num.trim().parse().map_err(|_| format!("bad fraction {s:?}"))?;
            let d: f64 = den.trim().parse().map_err(|_| format!("bad fraction {s:?}"))?;
            if d == 0.0 {
                return Err("width scale denominator is zero".into());
            }
            n / d
        } else {
            s.parse().map_err(|_| format!("bad width scale {s:?}"))?
        };
        if !(value > 0.0 && value <= 1.0) {
            return Err(format!("width scale {value} outside (0, 1]"));
        }
        Ok(WidthScale(value))
    }
}

impl Display for WidthScale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Class selection: a count (`12` means ids 1..=12) or an explicit id list
/// (`1,3,4`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassSelection(pub Vec<u32>);

impl FromStr for ClassSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let ids = if s.contains(',') {
            s.split(',')
                .map(|t| t.trim().parse::<u32>().map_err(|_| format!("bad class id {t:?}")))
                .collect::<Result<Vec<_>, _>>()?
        } else {
            let count: u32 = s.trim().parse().map_err(|_| format!("bad class count {s:?}"))?;
            (1..=count).collect()
        };
        if ids.is_empty() {
            return Err("empty class selection".into());
        }
        Ok(ClassSelection(ids))
    }
}

impl Display for ClassSelection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let strs: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "{}", strs.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn width_scale_parses_fractions_and_decimals() {
        assert_eq!("1/8".parse::<WidthScale>().unwrap().0, 0.125);
        assert_eq!("0.5".parse::<WidthScale>().unwrap().0, 0.5);
        assert!("0".parse::<WidthScale>().is_err());
        assert!("3/2".parse::<WidthScale>().is_err());
        assert!("1/0".parse::<WidthScale>().is_err());
    }

    #[test]
    fn class_selection_count_and_list() {
        assert_eq!("3".parse::<ClassSelection>().unwrap().0, vec![1, 2, 3]);
        assert_eq!("1,3,4".parse::<ClassSelection>().unwrap().0, vec![1, 3, 4]);
        assert!("x".parse::<ClassSelection>().is_err());
    }

    #[test]
    fn flags_override_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "dim = 10\nseed 7\n# comment\n").unwrap();
        let fc = FileConfig::load(Some(&path)).unwrap();
        assert_eq!(fc.resolve("dim", None::<usize>, 2).unwrap(), 10);
        assert_eq!(fc.resolve("dim", Some(3usize), 2).unwrap(), 3);
        assert_eq!(fc.resolve("seed", None::<u64>, 0).unwrap(), 7);
        assert_eq!(fc.resolve("budget", None::<usize>, 42).unwrap(), 42);
        assert!(fc.resolve_required::<usize>("missing", None).is_err());
    }
}
