//! Experiment configuration: a JSON document describing the scene, the
//! channel generator, the sweep axis, the baselines and the seeds.
//!
//! Powers are given in dBm and converted once at scene-construction time;
//! only power ratios enter any objective. Angles are in degrees.

use polarsense_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    Mse,
    Sinr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    GammaThDb,
    ChiAnt,
    TxSnrDb,
    NAntennas,
    TargetAngleDeg,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::GammaThDb => "gamma_th_db",
            SweepAxis::ChiAnt => "chi_ant",
            SweepAxis::TxSnrDb => "tx_snr_db",
            SweepAxis::NAntennas => "n_antennas",
            SweepAxis::TargetAngleDeg => "target_angle_deg",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    Static,
    TxOnly,
    RxOnly,
    TxRx,
    Dual1x,
    Dual2x,
}

impl BaselineKind {
    pub fn name(&self) -> &'static str {
        match self {
            BaselineKind::Static => "static",
            BaselineKind::TxOnly => "tx_only",
            BaselineKind::RxOnly => "rx_only",
            BaselineKind::TxRx => "tx_rx",
            BaselineKind::Dual1x => "dual_1x",
            BaselineKind::Dual2x => "dual_2x",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(BaselineKind::Static),
            "tx_only" | "tx-only" => Ok(BaselineKind::TxOnly),
            "rx_only" | "rx-only" => Ok(BaselineKind::RxOnly),
            "tx_rx" | "tx-rx" => Ok(BaselineKind::TxRx),
            "dual_1x" | "dual-1x" => Ok(BaselineKind::Dual1x),
            "dual_2x" | "dual-2x" => Ok(BaselineKind::Dual2x),
            other => Err(Error::Config(format!("unknown baseline '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClutterCfg {
    pub angle_deg: f64,
    pub sigma2_dbm: f64,
}

fn default_spacing() -> f64 {
    0.5
}

fn default_paths() -> usize {
    4
}

fn default_outer_iters() -> usize {
    6
}

fn default_mm_iters() -> usize {
    30
}

fn default_angle_spread() -> f64 {
    60.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub objective: ObjectiveKind,
    pub nt: usize,
    pub nr: usize,
    pub l: usize,
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    pub users: usize,
    #[serde(default = "default_paths")]
    pub paths_per_user: usize,
    #[serde(default = "default_angle_spread")]
    pub angle_spread_deg: f64,
    pub chi_ant: f64,
    pub chi_user: f64,
    /// Transmit power (dBm).
    pub rho_t_dbm: f64,
    /// Sensing receiver noise power (dBm).
    pub sigma_s2_dbm: f64,
    /// Communication receiver noise power (dBm).
    pub sigma_c2_dbm: f64,
    pub target_angle_deg: f64,
    /// Variance of the target attenuation (dBm); the amplitude loss is its
    /// square root.
    pub target_var_dbm: f64,
    /// Entries preset of the target depolarization covariance; defaults to
    /// the preset matching the objective.
    #[serde(default)]
    pub sigma0_preset: Option<Sigma0Preset>,
    pub clutter: Vec<ClutterCfg>,
    /// Clutter depolarization covariance scale (`Sigma_q = c I`).
    #[serde(default = "default_sigma_q_scale")]
    pub sigma_q_scale: f64,
    /// User SINR threshold (dB) when not swept.
    pub gamma_th_db: f64,
    pub sweep_axis: SweepAxis,
    pub sweep_grid: Vec<f64>,
    pub baselines: Vec<BaselineKind>,
    /// Monte-Carlo seeds (distinct).
    pub seeds: Vec<u64>,
    #[serde(default = "default_outer_iters")]
    pub outer_iters: usize,
    #[serde(default = "default_mm_iters")]
    pub mm_iters: usize,
}

fn default_sigma_q_scale() -> f64 {
    0.2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sigma0Preset {
    Estimation,
    Detection,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sweep_grid.is_empty() {
            return Err(Error::Config("sweep grid must not be empty".into()));
        }
        if self.baselines.is_empty() {
            return Err(Error::Config("baseline list must not be empty".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("need at least one seed".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(Error::Config("seeds must be distinct".into()));
        }
        for v in &self.sweep_grid {
            if !v.is_finite() {
                return Err(Error::Config("sweep grid contains a non-finite value".into()));
            }
        }
        for v in [
            self.rho_t_dbm,
            self.sigma_s2_dbm,
            self.sigma_c2_dbm,
            self.target_var_dbm,
            self.gamma_th_db,
        ] {
            if !v.is_finite() {
                return Err(Error::Config("dB parameters must be finite".into()));
            }
        }
        if self.nt == 0 || self.nr == 0 || self.users == 0 {
            return Err(Error::Config("nt, nr and users must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.chi_ant) || !(0.0..=1.0).contains(&self.chi_user) {
            return Err(Error::Config("XPD leakages must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("config parse error at line {}: {e}", e.line())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialization")
    }

    pub fn sigma0_preset(&self) -> Sigma0Preset {
        self.sigma0_preset.unwrap_or(match self.objective {
            ObjectiveKind::Mse => Sigma0Preset::Estimation,
            ObjectiveKind::Sinr => Sigma0Preset::Detection,
        })
    }

    /// Desk-scale defaults: small arrays for fast runs.
    pub fn desk(objective: ObjectiveKind) -> Self {
        let (clutter, sweep_grid) = match objective {
            ObjectiveKind::Mse => (
                vec![
                    ClutterCfg { angle_deg: -80.0, sigma2_dbm: -20.0 },
                    ClutterCfg { angle_deg: -45.0, sigma2_dbm: -20.0 },
                    ClutterCfg { angle_deg: 30.0, sigma2_dbm: -20.0 },
                    ClutterCfg { angle_deg: 60.0, sigma2_dbm: -20.0 },
                ],
                vec![4.0, 8.0, 12.0],
            ),
            ObjectiveKind::Sinr => (
                vec![
                    ClutterCfg { angle_deg: -80.0, sigma2_dbm: -20.0 },
                    ClutterCfg { angle_deg: -45.0, sigma2_dbm: -20.0 },
                    ClutterCfg { angle_deg: 30.0, sigma2_dbm: -20.0 },
                    ClutterCfg { angle_deg: 60.0, sigma2_dbm: -20.0 },
                ],
                vec![4.0, 8.0, 12.0],
            ),
        };
        Self {
            name: format!(
                "desk_{}",
                match objective {
                    ObjectiveKind::Mse => "mse",
                    ObjectiveKind::Sinr => "sinr",
                }
            ),
            objective,
            nt: 4,
            nr: 4,
            l: 8,
            spacing: 0.5,
            users: 2,
            paths_per_user: 4,
            angle_spread_deg: 60.0,
            chi_ant: 0.1,
            chi_user: 0.1,
            rho_t_dbm: 30.0,
            sigma_s2_dbm: 0.0,
            sigma_c2_dbm: 0.0,
            target_angle_deg: 0.0,
            target_var_dbm: -20.0,
            sigma0_preset: None,
            clutter,
            sigma_q_scale: 0.2,
            gamma_th_db: 10.0,
            sweep_axis: SweepAxis::GammaThDb,
            sweep_grid,
            baselines: vec![
                BaselineKind::Static,
                BaselineKind::TxOnly,
                BaselineKind::RxOnly,
                BaselineKind::TxRx,
            ],
            seeds: (0..50).collect(),
            outer_iters: 6,
            mm_iters: 30,
        }
    }

    /// Full-scale profile matching the reference simulation setup:
    /// 6x6 arrays, codewords of length 16, 30 dBm transmit power.
    pub fn paper(objective: ObjectiveKind) -> Self {
        let mut cfg = Self::desk(objective);
        cfg.name = cfg.name.replace("desk", "paper");
        cfg.nt = 6;
        cfg.nr = 6;
        cfg.l = 16;
        cfg.sweep_grid = vec![4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0];
        cfg
    }
}
