//! Experiment execution: expand the (baseline x sweep x seed) grid into a
//! parallel work queue, run one full design per task and collect rows.

use crate::baselines::{static_pattern, static_user_polarization, update_mask};
use crate::config::{BaselineKind, ExperimentConfig, ObjectiveKind, Sigma0Preset, SweepAxis};
use polarsense_core::conic::SolverOptions;
use polarsense_core::dualpol::{build_dual_system, solve_dual_pol, DualPolVariant};
use polarsense_core::linalg::{db_to_linear, linear_to_db};
use polarsense_core::mm::{alternate_full, AlternationOptions, MmOptions, Objective};
use polarsense_core::par::run_tasks;
use polarsense_core::scene::{
    sigma0_detection, sigma0_estimation, sigma_clutter_iso, sample_comm_channels, ChannelConfig,
    ClutterPatch, Scene, TargetSpec,
};
use polarsense_core::{Error, Result};
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Instant;

static DUMP_DIR: Mutex<Option<PathBuf>> = Mutex::new(None);

/// Route every conic subproblem of subsequent runs into CBF dumps under
/// `dir` (None disables dumping).
pub fn set_dump_dir(dir: Option<PathBuf>) {
    *DUMP_DIR.lock().unwrap() = dir;
}

fn solver_options() -> SolverOptions {
    SolverOptions { dump_dir: DUMP_DIR.lock().unwrap().clone(), ..Default::default() }
}

/// One row of the result table: a single (baseline, sweep value, seed) run.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub baseline: String,
    pub sweep_axis: String,
    pub sweep_value: f64,
    pub seed: u64,
    pub nmse_db: f64,
    pub target_sinr_db: f64,
    pub min_user_sinr_db: f64,
    pub sum_rate: f64,
    pub outer_iters: usize,
    pub wall_s: f64,
    pub feasible: bool,
}

/// Scene parameters after applying one sweep override.
#[derive(Debug, Clone)]
pub struct CasePoint {
    pub nt: usize,
    pub nr: usize,
    pub l: usize,
    pub chi_ant: f64,
    pub rho_t: f64,
    pub sigma_s2: f64,
    pub sigma_c2: f64,
    pub gamma_th: f64,
    pub target_angle: f64,
}

impl CasePoint {
    pub fn from_config(cfg: &ExperimentConfig, sweep_value: f64) -> Result<Self> {
        let mut p = Self {
            nt: cfg.nt,
            nr: cfg.nr,
            l: cfg.l,
            chi_ant: cfg.chi_ant,
            rho_t: db_to_linear(cfg.rho_t_dbm),
            sigma_s2: db_to_linear(cfg.sigma_s2_dbm),
            sigma_c2: db_to_linear(cfg.sigma_c2_dbm),
            gamma_th: db_to_linear(cfg.gamma_th_db),
            target_angle: cfg.target_angle_deg.to_radians(),
        };
        match cfg.sweep_axis {
            SweepAxis::GammaThDb => p.gamma_th = db_to_linear(sweep_value),
            SweepAxis::ChiAnt => p.chi_ant = sweep_value,
            SweepAxis::TxSnrDb => p.rho_t = p.sigma_s2 * db_to_linear(sweep_value),
            SweepAxis::NAntennas => {
                let n = sweep_value.round();
                if n < 1.0 || (n - sweep_value).abs() > 1e-9 {
                    return Err(Error::Config(format!(
                        "antenna sweep value {sweep_value} is not a positive integer"
                    )));
                }
                p.nt = n as usize;
                p.nr = n as usize;
                // codewords must cover all precoder columns
                p.l = p.l.max(2 * p.nt);
            }
            SweepAxis::TargetAngleDeg => p.target_angle = sweep_value.to_radians(),
        }
        Ok(p)
    }
}

/// Build the scene for one case point.
pub fn build_scene(cfg: &ExperimentConfig, point: &CasePoint) -> Result<Scene> {
    let sigma0 = match cfg.sigma0_preset() {
        Sigma0Preset::Estimation => sigma0_estimation(),
        Sigma0Preset::Detection => sigma0_detection(),
    };
    let beta0 = db_to_linear(cfg.target_var_dbm).sqrt();
    let target = TargetSpec::new(point.target_angle, beta0, sigma0)?;
    let clutter = cfg
        .clutter
        .iter()
        .map(|c| {
            ClutterPatch::new(
                c.angle_deg.to_radians(),
                db_to_linear(c.sigma2_dbm),
                sigma_clutter_iso(cfg.sigma_q_scale),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Scene::new(
        point.nt,
        point.nr,
        cfg.spacing,
        point.chi_ant,
        target,
        clutter,
        point.sigma_s2,
    )
}

fn channel_config(cfg: &ExperimentConfig, point: &CasePoint) -> ChannelConfig {
    ChannelConfig {
        k_users: cfg.users,
        paths_per_user: cfg.paths_per_user,
        angle_spread: cfg.angle_spread_deg.to_radians(),
        chi_user: cfg.chi_user,
        user_xpd: point.chi_ant,
        sigma_c2: point.sigma_c2,
    }
}

fn alternation_options(cfg: &ExperimentConfig, point: &CasePoint) -> AlternationOptions {
    AlternationOptions {
        mm: MmOptions { i_max: cfg.mm_iters, ..Default::default() },
        solver: solver_options(),
        outer_iters: cfg.outer_iters,
        outer_tol: 1e-4,
        l: point.l,
    }
}

/// Run a single (baseline, sweep value, seed) case.
pub fn run_case(
    cfg: &ExperimentConfig,
    baseline: BaselineKind,
    sweep_value: f64,
    seed: u64,
) -> Result<ResultRow> {
    let start = Instant::now();
    let point = CasePoint::from_config(cfg, sweep_value)?;
    let scene = build_scene(cfg, &point)?;
    let objective = match cfg.objective {
        ObjectiveKind::Mse => Objective::Mse,
        ObjectiveKind::Sinr => Objective::Sinr,
    };
    let ch_cfg = channel_config(cfg, &point);

    let outcome = match baseline {
        BaselineKind::Dual1x | BaselineKind::Dual2x => {
            let variant = if baseline == BaselineKind::Dual1x {
                DualPolVariant::OneX
            } else {
                DualPolVariant::TwoX
            };
            let system = build_dual_system(&scene, variant)?;
            let mut channels = system.sample_channels(&ch_cfg, seed)?;
            for (k, user) in channels.users.iter_mut().enumerate() {
                user.p_u = static_user_polarization(cfg.objective, k);
            }
            solve_dual_pol(
                objective,
                &system,
                &channels,
                point.gamma_th,
                point.rho_t,
                point.l.max(system.n_rf + cfg.users),
                &solver_options(),
            )
            .map(|r| (r.nmse_db, r.target_sinr, r.user_sinr, 1usize, r.feasible))
        }
        _ => {
            let mask = update_mask(baseline);
            let mut channels = sample_comm_channels(&scene, &ch_cfg, seed)?;
            for (k, user) in channels.users.iter_mut().enumerate() {
                user.p_u = static_user_polarization(cfg.objective, k);
            }
            let p_t0 = static_pattern(cfg.objective, point.nt)?;
            let p_r0 = static_pattern(cfg.objective, point.nr)?;
            let opts = alternation_options(cfg, &point);
            alternate_full(
                objective,
                &scene,
                &mut channels,
                point.gamma_th,
                point.rho_t,
                &p_t0,
                &p_r0,
                mask,
                &opts,
            )
            .map(|r| (r.nmse_db, r.target_sinr, r.user_sinr, r.outer_iters, r.feasible))
        }
    };

    let row = match outcome {
        Ok((nmse_db, target_sinr, user_sinr, outer_iters, feasible)) => {
            let min_user = user_sinr.iter().copied().fold(f64::INFINITY, f64::min);
            let sum_rate: f64 = user_sinr.iter().map(|g| (1.0 + g).log2()).sum();
            ResultRow {
                baseline: baseline.name().to_string(),
                sweep_axis: cfg.sweep_axis.name().to_string(),
                sweep_value,
                seed,
                nmse_db,
                target_sinr_db: linear_to_db(target_sinr.max(1e-300)),
                min_user_sinr_db: if user_sinr.is_empty() {
                    f64::NAN
                } else {
                    linear_to_db(min_user.max(1e-300))
                },
                sum_rate,
                outer_iters,
                wall_s: start.elapsed().as_secs_f64(),
                feasible,
            }
        }
        Err(Error::Infeasible(_)) => ResultRow {
            baseline: baseline.name().to_string(),
            sweep_axis: cfg.sweep_axis.name().to_string(),
            sweep_value,
            seed,
            nmse_db: f64::NAN,
            target_sinr_db: f64::NAN,
            min_user_sinr_db: f64::NAN,
            sum_rate: f64::NAN,
            outer_iters: 0,
            wall_s: start.elapsed().as_secs_f64(),
            feasible: false,
        },
        Err(e) => return Err(e),
    };
    Ok(row)
}

/// Run the whole experiment grid; rows come back in deterministic
/// (baseline, sweep, seed) order regardless of the execution schedule.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let mut tasks = Vec::new();
    for &baseline in &cfg.baselines {
        for &sweep_value in &cfg.sweep_grid {
            for &seed in &cfg.seeds {
                tasks.push((baseline, sweep_value, seed));
            }
        }
    }
    let results = run_tasks(tasks, |(baseline, sweep_value, seed)| {
        run_case(cfg, baseline, sweep_value, seed)
    });
    results.into_iter().collect()
}
