//! A pair of phase-angle detectors viewed as a beam splitter.

use std::f64::consts::FRAC_PI_2;

use sqlab::pipelines::beam_splitter_equivalence;

fn main() -> sqlab::Result<()> {
    for (a, b) in [(FRAC_PI_2, -FRAC_PI_2), (0.0, std::f64::consts::PI)] {
        let r = beam_splitter_equivalence(a, b)?;
        println!(
            "θ = ({a:+.4}, {b:+.4}): unitarity defect {:.2e}, distance to phase-shifted splitter {:.2e}, to Hadamard {:.2e}",
            r.unitarity_defect, r.distance_to_phase_shifted_splitter, r.distance_to_hadamard
        );
    }
    Ok(())
}
