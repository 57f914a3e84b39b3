//! Settings shared by the subcommands. Every field may come from a TOML
//! file (`--config`) or a flag of the same name; flags win.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Settings {
    /// TOML file with defaults for any of these flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Assignment method: dp, ilp, lian1 or lian2.
    #[arg(long)]
    pub variant: Option<String>,
    /// Penalty per peak reuse under lian2.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// H matching window (ppm).
    #[arg(long)]
    pub delta1: Option<f64>,
    /// N matching window (ppm).
    #[arg(long)]
    pub delta2: Option<f64>,
    /// C matching window (ppm).
    #[arg(long)]
    pub delta3: Option<f64>,
    /// Typing threshold in standard deviations.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Cliques kept per component, or "all".
    #[arg(long)]
    pub top_k: Option<String>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// LP backend: "bundled" or "external:<path>".
    #[arg(long)]
    pub backend: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated experiments expected in a peak list.
    #[arg(long)]
    pub experiments: Option<String>,

    /// Simulation protocol: cisa or flya.
    #[arg(long)]
    pub protocol: Option<String>,
    /// Simulated noise level: low or high (cisa only).
    #[arg(long)]
    pub noise: Option<String>,
    /// Simulation seed (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Probability of dropping an expected peak (flya only).
    #[arg(long)]
    pub deletion_rate: Option<f64>,
    /// Reference protein JSON (default: the bundled one for the protocol).
    #[arg(long)]
    pub reference: Option<PathBuf>,
}

macro_rules! fill {
    ($dst:ident, $src:ident, $($f:ident),*) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f; } )*
    };
}

impl Settings {
    /// Fills unset fields from the config file, if one was given.
    pub fn resolve(mut self) -> Result<Self, String> {
        let Some(path) = self.config.clone() else { return Ok(self) };
        let file = read_config(&path)?;
        fill!(
            self,
            file,
            variant,
            lambda,
            delta1,
            delta2,
            delta3,
            delta,
            top_k,
            threads,
            backend,
            out,
            experiments,
            protocol,
            noise,
            seed,
            deletion_rate,
            reference
        );
        Ok(self)
    }
}

fn read_config(path: &Path) -> Result<Settings, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "seed = 3\nlambda = 2.0\nvariant = \"lian2\"\n").unwrap();
        let s = Settings { config: Some(path), seed: Some(9), ..Default::default() }.resolve().unwrap();
        assert_eq!(s.seed, Some(9));
        assert_eq!(s.lambda, Some(2.0));
        assert_eq!(s.variant.as_deref(), Some("lian2"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "sed = 3\n").unwrap();
        assert!(Settings { config: Some(path), ..Default::default() }.resolve().is_err());
    }
}
