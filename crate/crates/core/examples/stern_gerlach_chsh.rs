//! CHSH test on the spin–motion state after a Stern-Gerlach split.

use sqlab::algebra::PhaseWindow;
use sqlab::constants::MU_B;
use sqlab::pipelines::{chsh_point, run_sg_chsh, MonteCarloSpec, SternGerlachConfig};

fn main() -> sqlab::Result<()> {
    let mut config = SternGerlachConfig {
        m: 1e-19,
        gradient: 1e5,
        mu: 2.0 * MU_B,
        t_prep: 50e-6,
        sigma_d: 1e-10,
        gamma: 0.0,
        window: PhaseWindow::new(1.0)?,
    };
    let report = run_sg_chsh(
        &config,
        Some(MonteCarloSpec {
            shots: 10_000,
            seed: 3,
        }),
    )?;
    println!("{}", serde_json::to_string_pretty(&report)?);

    config.gamma = 100.0;
    let damped = run_sg_chsh(&config, None)?;
    println!(
        "with γ = 100/s: S = {:.6} (γt = {:.4})",
        damped.chsh_analytic, damped.gamma_t
    );

    for dt in [0.0, 1.0, 2.0, 2.783, 3.0] {
        println!(
            "δθ = {dt}: S = {:.6}",
            chsh_point(PhaseWindow::new(dt)?, 0.0)?
        );
    }
    Ok(())
}
