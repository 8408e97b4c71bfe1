//! Artifact writers. Every artifact carries a [`Provenance`] record.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::circle::Diffeo;
use crate::config::Config;
use crate::error::Result;

/// Configuration hash and the constants a run settled on.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub alpha: f64,
    pub lambda: f64,
    pub t0: Option<f64>,
    pub m: Option<i64>,
}

impl Provenance {
    pub fn new(cfg: &Config) -> Result<Self> {
        Ok(Provenance {
            config_hash: cfg.hash()?,
            alpha: cfg.generators.alpha,
            lambda: cfg.generators.lambda,
            t0: cfg.rotation.t0,
            m: None,
        })
    }

    fn comment(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "none".into());
        format!(
            "# config_hash={} alpha={} lambda={} t0={} m={}\n",
            self.config_hash,
            self.alpha,
            self.lambda,
            opt(self.t0.map(|v| v.to_string())),
            opt(self.m.map(|v| v.to_string())),
        )
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    provenance: &'a Provenance,
    data: &'a T,
}

/// Writes `{"provenance": ..., "data": ...}` as pretty JSON.
pub fn write_json<T: Serialize>(dir: &Path, name: &str, prov: &Provenance, data: &T) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(&Envelope { provenance: prov, data })?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

/// Writes serializable rows as CSV after a `#` provenance line.
pub fn write_csv<T: Serialize>(dir: &Path, name: &str, prov: &Provenance, rows: &[T]) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let body = w.into_inner().map_err(|e| e.into_error())?;
    let path = dir.join(name);
    let mut out = prov.comment().into_bytes();
    out.extend(body);
    fs::write(&path, out)?;
    Ok(path)
}

/// One sample `(x, f(x), f'(x))`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MapSample {
    pub x: f64,
    pub value: f64,
    pub derivative: f64,
}

pub fn map_samples(f: &Diffeo, n: usize) -> Result<Vec<MapSample>> {
    (0..n)
        .map(|i| {
            let x = i as f64 / n as f64;
            let (value, derivative) = f.lift_jet(x)?;
            Ok(MapSample { x, value, derivative })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn artifacts_are_deterministic() {
        let dir = std::env::temp_dir().join(format!("distort-io-{}", std::process::id()));
        let prov = Provenance::new(&Config::default()).unwrap();
        let rows = map_samples(&Diffeo::rotation(0.25), 8).unwrap();
        let a = fs::read(write_csv(&dir, "a.csv", &prov, &rows).unwrap()).unwrap();
        let b = fs::read(write_csv(&dir, "b.csv", &prov, &rows).unwrap()).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("# config_hash="));
        assert!(text.lines().nth(1).unwrap() == "x,value,derivative");
        let j = fs::read_to_string(write_json(&dir, "r.json", &prov, &rows).unwrap()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&j).unwrap();
        assert_eq!(v["provenance"]["config_hash"], prov.config_hash);
        fs::remove_dir_all(&dir).unwrap();
    }
}
