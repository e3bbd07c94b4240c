//! Two-qubit states, blurred Pauli operators, CHSH and witness evaluation.

use sqlab::algebra::{
    casimir_entangled_state, chsh_analytic, chsh_threshold, chsh_value, dephase, effective_pauli,
    expectation, pauli, sg_entangled_state, witness_analytic, witness_matrix, Axis, ChshSettings,
    PhaseWindow, Subsystem,
};

fn main() -> sqlab::Result<()> {
    let sg = sg_entangled_state();
    println!(
        "spin-motion state, reduced spatial qubit:\n{:?}",
        sg.partial_trace(1)?
    );

    for dt in [0.0, 1.0, 2.0, chsh_threshold()] {
        let w = PhaseWindow::new(dt)?;
        let zx = pauli(Axis::X).kron(&effective_pauli(Axis::X, w)?)?;
        println!(
            "δθ = {dt:.4}  g = {:.6}  ⟨σx ⊗ σ̃x⟩ = {:+.6}",
            w.g(),
            expectation(&sg, &zx)?
        );
    }

    for gamma_t in [0.0, 0.1, 0.5] {
        let rho = dephase(&sg, gamma_t, Subsystem::Spatial1)?;
        let w = PhaseWindow::new(0.5)?;
        let s = chsh_value(&rho, &ChshSettings::spin_motion(w))?;
        println!(
            "γt = {gamma_t}: CHSH matrix {s:.12}, closed form {:.12}",
            chsh_analytic(w, gamma_t)?
        );
    }
    println!("CHSH threshold δθ = {:.6} rad", chsh_threshold());

    let (dphi01, dphi10) = (-0.032, 0.036);
    let rho = casimir_entangled_state(dphi01, dphi10);
    println!("Casimir state trace = {:.3}", rho.matrix().trace().re);
    println!(
        "witness: closed form {:.8}, Tr(Wρ) {:.8}",
        witness_analytic(dphi01, dphi10, 0.0, PhaseWindow::SHARP)?,
        witness_matrix(dphi01, dphi10, 0.0, PhaseWindow::SHARP)?
    );
    Ok(())
}
