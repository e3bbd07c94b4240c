//! Free Gaussian evolution of the `|0⟩ + |1⟩` encoding, fringe peaks, σz
//! leakage and the spectral grid cross-check.

use std::f64::consts::PI;

use sqlab::wavepacket::{
    first_fringe_peak_ratio, grid_leakage_natural, leakage_epsilon_natural, plus_state_natural,
    spectral_propagate, GridSpec, GridState,
};

fn main() -> sqlab::Result<()> {
    for d in [10.0, 50.0, 100.0] {
        let peak = first_fringe_peak_ratio(1.0 / d, 1.0)?;
        println!(
            "d/σ_d = {d:>5}: first fringe peak {peak:.6} σ_d (far field {:.6})",
            4.0 * PI
        );
    }

    let eps = leakage_epsilon_natural(50.0, 0.1)?;
    let grid = grid_leakage_natural(50.0, 0.1)?;
    println!("σz leakage at t = 0.1·t_overlap: erfc {eps:.4e}, grid {grid:.4e}");

    let d = 50.0;
    let t = 2.0 * d;
    let initial = plus_state_natural(d)?;
    let spec = GridSpec::for_scales(1.0, d);
    let grid0 = GridState::from_state(&initial, spec)?;
    let evolved = spectral_propagate(&grid0, t)?;
    println!(
        "grid of {} points: norm {:.15}, L2 distance to analytic {:.3e}",
        evolved.len(),
        evolved.norm(),
        evolved.l2_distance(&initial)?
    );
    Ok(())
}
