//! Parallel grid sweeps with threshold crossings.

use sqlab::algebra::PhaseWindow;
use sqlab::pipelines::{sweep, CasimirConfig, PhaseOverride, SweepAxis, SweepBase};

fn main() -> sqlab::Result<()> {
    let base = SweepBase::Witness(CasimirConfig {
        radius: 20e-9,
        center_separation: 3.5e-6,
        d: 50e-9,
        epsilon_r: 5.7,
        tau: 0.01,
        m: 1e-19,
        sigma_d: 1e-9,
        gamma: 0.0,
        window: PhaseWindow::SHARP,
        delay: 0.0,
        phase_override: Some(PhaseOverride {
            dphi01: -0.032,
            dphi10: 0.036,
            reference_tau: 0.01,
        }),
        dephase_during_delay: false,
    });
    let tau = SweepAxis::linspace("tau", 0.001, 0.1, 100)?;
    let result = sweep(&base, &[tau], None)?;
    println!("witness crosses zero at τ = {:?} s", result.crossings(0.0)?);

    let gamma = SweepAxis::new("gamma", vec![0.0, 5.0, 20.0])?;
    let coarse = SweepAxis::new("tau", vec![0.005, 0.01, 0.02, 0.04])?;
    let grid = sweep(&base, &[coarse, gamma], Some(2))?;
    println!("{} points, {} flagged", grid.rows.len(), grid.flagged());
    for g in [0.0, 5.0, 20.0] {
        println!(
            "γ = {g}: ⟨W⟩(τ = 0.01) = {:?}",
            grid.value_at(&[("tau", 0.01), ("gamma", g)])
        );
    }
    Ok(())
}
