//! Encoding a qubit in two wavepackets, reading it out with finite detectors,
//! and sampling seeded measurement records.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use sqlab::algebra::{Axis, DensityMatrix, Factor};
use sqlab::codec::{
    delta_theta_of, detection_probability, encode, povm_pair, rng_for, sample_measurements,
    write_records_csv, DetectorSpec, EncodingSpec, StateInput,
};

fn main() -> sqlab::Result<()> {
    let spec = EncodingSpec::natural(50.0)?;
    let t = spec.overlap_time();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (alpha, beta) = (Complex64::new(s, 0.0), Complex64::new(0.0, s));
    let state = encode(alpha, beta, &spec)?;
    println!("encoded norm {:.12}", state.norm()?);
    for theta in [-FRAC_PI_2, 0.0, FRAC_PI_2] {
        println!(
            "P(θ = {theta:+.4}) = {:.6}",
            detection_probability(alpha, beta, theta, &spec, t)?
        );
    }

    let pair = DetectorSpec::pauli_pair(Axis::Y, t, 1.0, 0.0, &spec)?;
    let window = delta_theta_of(&pair[0], &spec)?;
    let povm = povm_pair(Axis::Y, window)?;
    println!(
        "δθ = {:.4}, g = {:.6}, miss effect = {:?}",
        window.delta_theta(),
        window.g(),
        povm.miss
    );

    let qubit = DensityMatrix::pure(&[alpha, beta], vec![Factor::Spatial], "y+")?;
    let q = sample_measurements(
        StateInput::Qubit(&qubit),
        &pair,
        &spec,
        20_000,
        &mut rng_for(1, 0),
    )?;
    let w = sample_measurements(
        StateInput::Wavepacket(&state),
        &pair,
        &spec,
        20_000,
        &mut rng_for(1, 1),
    )?;
    println!(
        "qubit level:      raw {:.4}  conditioned {:.4}",
        q.raw()?.value,
        q.conditioned()?.value
    );
    println!(
        "wavepacket level: raw {:.4}  conditioned {:.4}",
        w.raw()?.value,
        w.conditioned()?.value
    );

    let path = std::env::temp_dir().join("sqlab_records.csv");
    write_records_csv(&w.records[..10], &path)?;
    println!("first records written to {}", path.display());
    Ok(())
}
