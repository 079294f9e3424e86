//! Config flags shared by the simulating and predicting commands.
//!
//! Layering is defaults < `--preset` < `--config` file < individual flags.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use strobe_core::{Config, Preset};

#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// Named parameter set: paper or ideal
    #[arg(long)]
    pub preset: Option<Preset>,
    /// `key = value` config file applied over the preset
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Detector output pulse width (e.g. 21, 21ns)
    #[arg(long)]
    pub tau_pd: Option<String>,
    /// Detector dead time
    #[arg(long)]
    pub tau_dead: Option<String>,
    /// Afterpulse delay constant
    #[arg(long)]
    pub tau_a: Option<String>,
    /// Afterpulse probability per detection
    #[arg(long)]
    pub p_after: Option<String>,
    /// Dark count rate (cps, kHz, ...)
    #[arg(long)]
    pub dark_rate: Option<String>,
    /// Detection efficiency
    #[arg(long)]
    pub efficiency: Option<String>,
    /// Trigger to photon delay
    #[arg(long)]
    pub delay: Option<String>,
    /// Detector timing jitter, FWHM
    #[arg(long)]
    pub detector_jitter: Option<String>,
    /// Mean photon number per laser pulse
    #[arg(long)]
    pub mean_photons: Option<String>,
    /// Laser timing jitter, FWHM
    #[arg(long)]
    pub laser_jitter: Option<String>,
    /// Trigger period (e.g. 100ns)
    #[arg(long, conflicts_with = "rate")]
    pub period: Option<String>,
    /// Trigger rate (e.g. 10MHz)
    #[arg(long)]
    pub rate: Option<String>,
    /// Strobe margin after the photon
    #[arg(long)]
    pub delta_t: Option<String>,
    /// Number of triggers (accepts 1e7)
    #[arg(long = "n")]
    pub n_triggers: Option<String>,
    /// Master seed
    #[arg(long)]
    pub seed: Option<String>,
    /// Let afterpulse-caused detections spawn further afterpulses
    #[arg(long)]
    pub chains: bool,
}

impl ConfigArgs {
    pub fn build(&self) -> Result<Config> {
        let mut cfg = self.preset.map_or_else(Config::default, Preset::config);
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            cfg.apply_text(&text)
                .with_context(|| format!("in config {}", path.display()))?;
        }
        let flags = [
            ("tau_pd", &self.tau_pd),
            ("tau_dead", &self.tau_dead),
            ("tau_a", &self.tau_a),
            ("p_after", &self.p_after),
            ("dark_rate", &self.dark_rate),
            ("efficiency", &self.efficiency),
            ("delay", &self.delay),
            ("detector_jitter", &self.detector_jitter),
            ("mean_photons", &self.mean_photons),
            ("laser_jitter", &self.laser_jitter),
            ("period", &self.period),
            ("rate", &self.rate),
            ("delta_t", &self.delta_t),
            ("n_triggers", &self.n_triggers),
            ("seed", &self.seed),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v).with_context(|| format!("--{}", key.replace('_', "-")))?;
            }
        }
        if self.chains {
            cfg.run.allow_afterpulse_chains = true;
        }
        Ok(cfg.validate()?)
    }
}
