use polarsense_core::conic::SolverOptions;
use polarsense_core::linalg::db_to_linear;
use polarsense_core::metrics::{user_sinr, SensingView};
use polarsense_core::mm::*;
use polarsense_core::polar::PolBlockMatrix;
use polarsense_core::scene::*;
use polarsense_core::waveform::solve_mse_waveform;

#[test]
#[ignore]
fn trace_violation_case() {
    // desk scene, seed 1, 12 dB threshold
    let target = TargetSpec::new(0.0, db_to_linear(-20.0).sqrt(), sigma0_estimation()).unwrap();
    let clutter: Vec<ClutterPatch> = [-80f64, -45.0, 30.0, 60.0]
        .iter()
        .map(|a| ClutterPatch::new(a.to_radians(), db_to_linear(-20.0), sigma_clutter_iso(0.2)).unwrap())
        .collect();
    let scene = Scene::new(4, 4, 0.5, 0.1, target, clutter, 1.0).unwrap();
    let cfg = ChannelConfig { k_users: 2, paths_per_user: 4, ..Default::default() };
    let mut channels = sample_comm_channels(&scene, &cfg, 1).unwrap();
    channels.users[0].p_u = polarsense_core::polar::PolVector::vertical();
    channels.users[1].p_u = polarsense_core::polar::PolVector::horizontal();
    let gamma = db_to_linear(12.0);
    let rho = db_to_linear(30.0);
    let mut p_t = PolBlockMatrix::alternating(4).unwrap();
    let mut p_r = PolBlockMatrix::alternating(4).unwrap();

    for outer in 0..6 {
        let view = SensingView::reconfigurable(&scene, &p_t, &p_r);
        let h = channels.effective(&p_t);
        let sol = solve_mse_waveform(&view, &h, gamma, 1.0, rho, 8, &SolverOptions::default()).unwrap();
        let gam_after_wave: Vec<f64> = h.iter().enumerate()
            .map(|(k, hk)| 10.0 * user_sinr(hk, sol.waveform.precoder(), 1.0, k).log10())
            .collect();
        let pol = optimize_polarization(
            Objective::Mse, &scene, &mut channels, &sol.waveform, gamma,
            &p_t, &p_r, UpdateMask::TX_RX, &MmOptions { i_max: 30, ..Default::default() },
        ).unwrap();
        p_t = pol.p_t;
        p_r = pol.p_r;
        let h2 = channels.effective(&p_t);
        let gam_after_pol: Vec<f64> = h2.iter().enumerate()
            .map(|(k, hk)| 10.0 * user_sinr(hk, sol.waveform.precoder(), 1.0, k).log10())
            .collect();
        eprintln!(
            "outer {outer}: after wave {gam_after_wave:?}, after pol {gam_after_pol:?} feas {} mse trace {:?}",
            pol.feasible, pol.trace.len()
        );
    }
}
