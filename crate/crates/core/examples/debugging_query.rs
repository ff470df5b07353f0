// Asks which outcomes have probability 1/6 and whether qubits 1 and 2 can
// both read 1, on a state built directly and on one built by a circuit.

use qsym::programs::{debugging_state_amplitudes, debugging_state_circuit};
use qsym::{PartialAssignment, PrecisionConfig, QuantumState, Registry};

fn report(label: &str, qs: &QuantumState) -> qsym::Result<()> {
    let count = qs.measurement_counts(1.0 / 6.0)?;
    let both = qs.prob(&PartialAssignment::from([(1, 1), (2, 1)]))?;
    println!("{label:<16} counts(1/6) = {count}  prob(q1=1,q2=1) = {both:.3e}");
    Ok(())
}

fn main() -> qsym::Result<()> {
    let registry = Registry::default();
    let prec = PrecisionConfig::default();
    for backend in ["bdd", "wbdd", "dense"] {
        let direct = QuantumState::from_amplitudes(&registry, backend, &debugging_state_amplitudes(53), prec)?;
        report(&format!("{backend}/direct"), &direct)?;
        let prepared = debugging_state_circuit()?.run_on(&registry, backend, prec)?;
        report(&format!("{backend}/circuit"), &prepared)?;
    }
    Ok(())
}
