//! Timing budget: latest σz readout, overlap time, fringe spacing and
//! detector resolution.

use sqlab::pipelines::{feasibility, FeasibilityConfig, WitnessPhases};

fn main() -> sqlab::Result<()> {
    let config = FeasibilityConfig {
        m: 1e-19,
        sigma_d: 1e-10,
        d: 25e-9,
        delta_x: 1e-10,
        delta_t: 0.0,
        leakage_tolerance: 1e-6,
        witness_phases: Some(WitnessPhases {
            dphi01: -0.032,
            dphi10: 0.036,
        }),
        reference_t_xy: Some(1e-3),
    };
    println!("{}", serde_json::to_string_pretty(&feasibility(&config)?)?);
    Ok(())
}
