//! Flags, the `key=value` config file, and how they combine.
//!
//! Every flag has a config key spelled the same without the leading dashes
//! (`--max-frames 64` and `max-frames=64`). A flag beats the config file,
//! which beats the built-in default. Without `--config`, `<root>/embalign.conf`
//! is read when it exists. Relative paths in a config file are resolved
//! against the file's directory.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use embalign_core::{AnalysisConfig, GammaMode, Metric, MetricConfig, TestMode};

pub const CONFIG_FILE: &str = "embalign.conf";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma {
    Median,
    Fixed(f64),
}

impl FromStr for Gamma {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "median" {
            return Ok(Gamma::Median);
        }
        match s.parse::<f64>() {
            Ok(g) if g.is_finite() && g > 0.0 => Ok(Gamma::Fixed(g)),
            _ => Err(format!("gamma must be `median` or a positive number, got {s:?}")),
        }
    }
}

pub fn parse_metric(s: &str) -> Result<Metric, String> {
    match s {
        "mmd" => Ok(Metric::Mmd),
        "wasserstein" => Ok(Metric::Wasserstein),
        _ => Err(format!("metric must be `mmd` or `wasserstein`, got {s:?}")),
    }
}

pub fn parse_mode(s: &str) -> Result<TestMode, String> {
    match s {
        "monte-carlo" => Ok(TestMode::MonteCarlo),
        "exhaustive-if-small" => Ok(TestMode::ExhaustiveIfSmall),
        _ => Err(format!("mode must be `monte-carlo` or `exhaustive-if-small`, got {s:?}")),
    }
}

/// Options shared by every subcommand. All optional so that unset flags can
/// fall through to the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Dataset root holding `Data/Recordings`, `Data/Embeddings`, `Data/labels.csv`
    #[arg(long, global = true)]
    pub root: Option<PathBuf>,
    /// Output directory [default: <root>/results]
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// mmd or wasserstein [default: mmd]
    #[arg(long, global = true, value_parser = parse_metric)]
    pub metric: Option<Metric>,
    /// RBF bandwidth: `median` or a positive number [default: median]
    #[arg(long, global = true)]
    pub gamma: Option<Gamma>,
    /// Monte Carlo permutations per pair [default: 1000]
    #[arg(long, global = true)]
    pub permutations: Option<usize>,
    /// Significance level [default: 0.05]
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Master seed [default: 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Frames kept per track [default: 512]
    #[arg(long = "max-frames", global = true)]
    pub max_frames: Option<usize>,
    /// Pair-test worker threads [default: logical cores]
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// monte-carlo or exhaustive-if-small [default: exhaustive-if-small]
    #[arg(long, global = true, value_parser = parse_mode)]
    pub mode: Option<TestMode>,
    /// Largest split count enumerated exhaustively [default: 20000]
    #[arg(long = "exhaustive-limit", global = true)]
    pub exhaustive_limit: Option<u64>,
    /// D/I grid CSV to align instead of running tests (align)
    #[arg(long = "model-matrix", global = true)]
    pub model_matrix: Option<PathBuf>,
    /// Report timestamp [default: $SOURCE_DATE_EPOCH, else now]
    #[arg(long, global = true)]
    pub timestamp: Option<String>,
    /// Frame length in samples (embed) [default: 1024]
    #[arg(long = "frame-size", global = true)]
    pub frame_size: Option<usize>,
    /// Hop length in samples (embed) [default: 512]
    #[arg(long, global = true)]
    pub hop: Option<usize>,
    /// Port (serve) [default: 8734]
    #[arg(long, global = true)]
    pub port: Option<u16>,
    /// Built UI assets to serve at / (serve)
    #[arg(long = "ui-dir", global = true)]
    pub ui_dir: Option<PathBuf>,
    /// Analyses run concurrently (serve) [default: 2]
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// key=value config file [default: <root>/embalign.conf if present]
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| format!("invalid value {value:?} for {key}: {e}"))
}

impl Flags {
    /// Parses config text into the same shape as the flags. `base` anchors
    /// relative paths.
    pub fn from_config(text: &str, base: &Path) -> Result<Self, String> {
        let mut f = Flags::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected key=value, got {raw:?}", n + 1))?;
            let (key, value) = (key.trim(), value.trim());
            let path = || base.join(value);
            match key {
                "root" => f.root = Some(path()),
                "out" => f.out = Some(path()),
                "metric" => f.metric = Some(parse_metric(value)?),
                "gamma" => f.gamma = Some(value.parse()?),
                "permutations" => f.permutations = Some(parse_value(key, value)?),
                "alpha" => f.alpha = Some(parse_value(key, value)?),
                "seed" => f.seed = Some(parse_value(key, value)?),
                "max-frames" => f.max_frames = Some(parse_value(key, value)?),
                "threads" => f.threads = Some(parse_value(key, value)?),
                "mode" => f.mode = Some(parse_mode(value)?),
                "exhaustive-limit" => f.exhaustive_limit = Some(parse_value(key, value)?),
                "model-matrix" => f.model_matrix = Some(path()),
                "timestamp" => f.timestamp = Some(value.to_string()),
                "frame-size" => f.frame_size = Some(parse_value(key, value)?),
                "hop" => f.hop = Some(parse_value(key, value)?),
                "port" => f.port = Some(parse_value(key, value)?),
                "ui-dir" => f.ui_dir = Some(path()),
                "workers" => f.workers = Some(parse_value(key, value)?),
                _ => return Err(format!("config line {}: unknown key {key:?}", n + 1)),
            }
        }
        Ok(f)
    }

    /// Fields set here win; the rest come from `fallback`.
    pub fn or(self, fallback: Flags) -> Flags {
        Flags {
            root: self.root.or(fallback.root),
            out: self.out.or(fallback.out),
            metric: self.metric.or(fallback.metric),
            gamma: self.gamma.or(fallback.gamma),
            permutations: self.permutations.or(fallback.permutations),
            alpha: self.alpha.or(fallback.alpha),
            seed: self.seed.or(fallback.seed),
            max_frames: self.max_frames.or(fallback.max_frames),
            threads: self.threads.or(fallback.threads),
            mode: self.mode.or(fallback.mode),
            exhaustive_limit: self.exhaustive_limit.or(fallback.exhaustive_limit),
            model_matrix: self.model_matrix.or(fallback.model_matrix),
            timestamp: self.timestamp.or(fallback.timestamp),
            frame_size: self.frame_size.or(fallback.frame_size),
            hop: self.hop.or(fallback.hop),
            port: self.port.or(fallback.port),
            ui_dir: self.ui_dir.or(fallback.ui_dir),
            workers: self.workers.or(fallback.workers),
            config: self.config.or(fallback.config),
        }
    }
}

/// Flags merged with the config file and defaults.
#[derive(Debug, Clone)]
pub struct Settings {
    pub root: PathBuf,
    pub out: PathBuf,
    pub analysis: AnalysisConfig,
    pub threads: Option<usize>,
    pub model_matrix: Option<PathBuf>,
    pub timestamp: Option<String>,
    pub frame_size: usize,
    pub hop: usize,
    pub port: u16,
    pub ui_dir: Option<PathBuf>,
    pub workers: usize,
}

impl Settings {
    pub fn resolve(flags: Flags) -> Result<Self, String> {
        let config_path = match &flags.config {
            Some(path) => Some(path.clone()),
            None => {
                let auto = flags.root.clone().unwrap_or_else(|| PathBuf::from(".")).join(CONFIG_FILE);
                auto.is_file().then_some(auto)
            }
        };
        let file = match &config_path {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
                let base = path.parent().unwrap_or(Path::new(""));
                Flags::from_config(&text, base).map_err(|e| format!("{}: {e}", path.display()))?
            }
            None => Flags::default(),
        };
        let f = flags.or(file);

        let defaults = AnalysisConfig::default();
        let metric = f.metric.unwrap_or(defaults.metric_config.metric);
        let metric_config = match f.gamma.unwrap_or(Gamma::Median) {
            Gamma::Median => MetricConfig { metric, ..MetricConfig::default() },
            Gamma::Fixed(g) => MetricConfig { metric, gamma_mode: GammaMode::Fixed, gamma_value: Some(g), ..MetricConfig::default() },
        };
        let analysis = AnalysisConfig {
            metric_config,
            n_permutations: f.permutations.unwrap_or(defaults.n_permutations),
            alpha: f.alpha.unwrap_or(defaults.alpha),
            master_seed: f.seed.unwrap_or(defaults.master_seed),
            mode: f.mode.unwrap_or(defaults.mode),
            exhaustive_limit: f.exhaustive_limit.unwrap_or(defaults.exhaustive_limit),
            max_frames: f.max_frames.unwrap_or(defaults.max_frames),
        };
        if f.threads == Some(0) {
            return Err("threads must be ≥ 1".into());
        }
        if f.workers == Some(0) {
            return Err("workers must be ≥ 1".into());
        }
        let root = f.root.unwrap_or_else(|| PathBuf::from("."));
        Ok(Settings {
            out: f.out.unwrap_or_else(|| root.join("results")),
            root,
            analysis,
            threads: f.threads,
            model_matrix: f.model_matrix,
            timestamp: f.timestamp,
            frame_size: f.frame_size.unwrap_or(1024),
            hop: f.hop.unwrap_or(512),
            port: f.port.unwrap_or(embalign_service::DEFAULT_PORT),
            ui_dir: f.ui_dir,
            workers: f.workers.unwrap_or(2),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_conf(dir: &Path, text: &str) -> PathBuf {
        let path = dir.join("run.conf");
        std::fs::write(&path, text).unwrap();
        path
    }

    #[test]
    fn flag_beats_config_beats_default() {
        let dir = tempfile::tempdir().unwrap();
        let conf = write_conf(dir.path(), "# comment\npermutations = 50\nalpha=0.1\nmetric=wasserstein\n\n");
        let flags = Flags { config: Some(conf), permutations: Some(7), ..Flags::default() };
        let s = Settings::resolve(flags).unwrap();
        assert_eq!(s.analysis.n_permutations, 7);
        assert_eq!(s.analysis.alpha, 0.1);
        assert_eq!(s.analysis.metric_config.metric, Metric::Wasserstein);
        assert_eq!(s.analysis.master_seed, 0);
        assert_eq!(s.analysis.max_frames, 512);
        assert_eq!(s.port, 8734);
    }

    #[test]
    fn every_flag_has_a_config_key() {
        let dir = tempfile::tempdir().unwrap();
        let text = "root=data\nout=o\nmetric=mmd\ngamma=0.5\npermutations=3\nalpha=0.2\nseed=9\nmax-frames=40\n\
                    threads=2\nmode=monte-carlo\nexhaustive-limit=10\nmodel-matrix=m.csv\ntimestamp=T\n\
                    frame-size=64\nhop=32\nport=9000\nui-dir=ui\nworkers=3\n";
        let f = Flags::from_config(text, dir.path()).unwrap();
        let s = Settings::resolve(Flags { config: Some(write_conf(dir.path(), text)), ..Flags::default() }).unwrap();
        assert_eq!(f.root, Some(dir.path().join("data")));
        assert_eq!(s.root, dir.path().join("data"));
        assert_eq!(s.out, dir.path().join("o"));
        assert_eq!(s.analysis.metric_config, MetricConfig::mmd_fixed(0.5));
        assert_eq!(
            (s.analysis.n_permutations, s.analysis.alpha, s.analysis.master_seed, s.analysis.max_frames),
            (3, 0.2, 9, 40)
        );
        assert_eq!((s.analysis.mode, s.analysis.exhaustive_limit), (TestMode::MonteCarlo, 10));
        assert_eq!(s.threads, Some(2));
        assert_eq!(s.model_matrix, Some(dir.path().join("m.csv")));
        assert_eq!(s.timestamp.as_deref(), Some("T"));
        assert_eq!((s.frame_size, s.hop, s.port, s.workers), (64, 32, 9000, 3));
        assert_eq!(s.ui_dir, Some(dir.path().join("ui")));
    }

    #[test]
    fn root_config_is_picked_up() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join(CONFIG_FILE), "seed=5\nmodel-matrix=grid.csv\n").unwrap();
        let s = Settings::resolve(Flags { root: Some(dir.path().into()), ..Flags::default() }).unwrap();
        assert_eq!(s.analysis.master_seed, 5);
        assert_eq!(s.model_matrix, Some(dir.path().join("grid.csv")));
        assert_eq!(s.out, dir.path().join("results"));
    }

    #[test]
    fn bad_config_lines() {
        let base = Path::new(".");
        assert!(Flags::from_config("nonsense\n", base).unwrap_err().contains("line 1"));
        assert!(Flags::from_config("colour=red\n", base).unwrap_err().contains("unknown key"));
        assert!(Flags::from_config("alpha=high\n", base).unwrap_err().contains("alpha"));
        assert!(Flags::from_config("gamma=-1\n", base).is_err());
        assert!(Flags::from_config("metric=cosine\n", base).is_err());
    }
}
