use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use sqlab::algebra::{
    casimir_entangled_state, chsh_analytic, chsh_value, dephase, identity2, sg_entangled_state,
    witness_analytic, witness_matrix, Axis, ChshSettings, PhaseWindow, Subsystem,
};
use sqlab::codec::{encode, povm_pair, EncodingSpec};
use sqlab::pipelines::{casimir_constant, casimir_phases, CasimirConfig};
use sqlab::wavepacket::{leakage_epsilon_natural, GaussianPacket};

fn window() -> impl Strategy<Value = PhaseWindow> {
    (0.0..2.0 * PI - 1e-9).prop_map(|d| PhaseWindow::new(d).unwrap())
}

fn subsystem() -> impl Strategy<Value = Subsystem> {
    prop_oneof![
        Just(Subsystem::Spatial1),
        Just(Subsystem::Spatial2),
        Just(Subsystem::Both)
    ]
}

fn casimir(radius: f64, tau: f64, epsilon_r: f64) -> CasimirConfig {
    CasimirConfig {
        radius,
        center_separation: 3.5e-6,
        d: 50e-9,
        epsilon_r,
        tau,
        m: 1e-19,
        sigma_d: 1e-9,
        gamma: 0.0,
        window: PhaseWindow::SHARP,
        delay: 0.0,
        phase_override: None,
        dephase_during_delay: false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn chsh_paths_agree(w in window(), gt in 0.0..10.0f64) {
        let rho = dephase(&sg_entangled_state(), gt, Subsystem::Spatial1).unwrap();
        let m = chsh_value(&rho, &ChshSettings::spin_motion(w)).unwrap();
        prop_assert!((m - chsh_analytic(w, gt).unwrap()).abs() <= 1e-12);
        prop_assert!(m.abs() <= 2.0 * 2f64.sqrt() + 1e-12);
    }

    #[test]
    fn witness_paths_agree(a in -PI..PI, b in -PI..PI, gt in 0.0..5.0f64, w in window()) {
        let x = witness_analytic(a, b, gt, w).unwrap();
        let y = witness_matrix(a, b, gt, w).unwrap();
        prop_assert!((x - y).abs() <= 1e-10);
    }

    #[test]
    fn dephasing_keeps_a_state(a in -PI..PI, b in -PI..PI, gt in 0.0..20.0f64, s in subsystem()) {
        let rho = dephase(&casimir_entangled_state(a, b), gt, s).unwrap();
        prop_assert!((rho.matrix().trace().re - 1.0).abs() <= 1e-12);
        prop_assert!(rho.matrix().hermitian_eigenvalues().iter().all(|&l| l >= -1e-12));
    }

    #[test]
    fn dephasing_composes(gt1 in 0.0..5.0f64, gt2 in 0.0..5.0f64) {
        let rho = casimir_entangled_state(0.3, -0.7);
        let twice = dephase(&dephase(&rho, gt1, Subsystem::Both).unwrap(), gt2, Subsystem::Both).unwrap();
        let once = dephase(&rho, gt1 + gt2, Subsystem::Both).unwrap();
        prop_assert!(twice.matrix().max_abs_diff(once.matrix()) <= 1e-12);
    }

    #[test]
    fn free_evolution_composes(x0 in -5.0..5.0f64, k0 in -3.0..3.0f64, s in 0.3..3.0f64, t1 in 0.0..20.0f64, t2 in 0.0..20.0f64) {
        let p = GaussianPacket::natural(x0, k0, s).unwrap();
        let a = p.evolve(t1).unwrap().evolve(t2).unwrap();
        let b = p.evolve(t1 + t2).unwrap();
        for x in [-10.0, -1.0, 0.0, 2.5, 10.0] {
            prop_assert!((a.value(x) - b.value(x)).norm() <= 1e-12);
        }
        prop_assert!((a.width() - b.width()).abs() <= 1e-12 * b.width());
    }

    #[test]
    fn leakage_grows_with_time(ratio in 10.0..100.0f64, t1 in 0.01..1.0f64, dt in 0.01..1.0f64) {
        let e1 = leakage_epsilon_natural(ratio, t1).unwrap();
        let e2 = leakage_epsilon_natural(ratio, t1 + dt).unwrap();
        prop_assert!(e2 >= e1);
        prop_assert!((0.0..0.5).contains(&e1));
    }

    #[test]
    fn povm_is_complete(w in window()) {
        for axis in [Axis::X, Axis::Y] {
            let p = povm_pair(axis, w).unwrap();
            prop_assert!(p.completeness().max_abs_diff(&identity2()) <= 1e-12);
        }
    }

    #[test]
    fn encoding_is_normalized(theta in 0.0..PI, phi in 0.0..2.0 * PI, ratio in 50.0..200.0f64) {
        let spec = EncodingSpec::natural(ratio).unwrap();
        let alpha = Complex64::new((theta / 2.0).cos(), 0.0);
        let beta = Complex64::from_polar((theta / 2.0).sin(), phi);
        let state = encode(alpha, beta, &spec).unwrap();
        prop_assert!((state.norm().unwrap() - 1.0).abs() <= 1e-9);
        let later = state.at_time(spec.overlap_time()).unwrap();
        prop_assert!((later.norm().unwrap() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn phases_scale_with_radius_time_and_coupling(r in 5e-9..100e-9f64, tau in 1e-4..0.1f64, eps in 1.5..20.0f64) {
        let base = casimir_phases(&casimir(r, tau, eps)).unwrap();
        let bigger = casimir_phases(&casimir(2.0 * r, tau, eps)).unwrap();
        prop_assert!((bigger.dphi10 / base.dphi10 - 64.0).abs() <= 1e-9);
        let longer = casimir_phases(&casimir(r, 3.0 * tau, eps)).unwrap();
        prop_assert!((longer.dphi01 / base.dphi01 - 3.0).abs() <= 1e-9);
        let other = casimir_phases(&casimir(r, tau, 2.0 * eps)).unwrap();
        let k_ratio = casimir_constant(2.0 * eps).unwrap() / casimir_constant(eps).unwrap();
        prop_assert!((other.phi / base.phi - k_ratio).abs() <= 1e-9);
    }
}
