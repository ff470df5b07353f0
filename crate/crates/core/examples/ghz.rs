// GHZ on 4096 qubits with the CFLOBDD backend.

use qsym::{BackendKind, PartialAssignment, QuantumState};

fn main() -> qsym::Result<()> {
    let n = 4096;
    let mut qs = QuantumState::new(BackendKind::Cflobdd, n)?;
    qs.h(0)?;
    for i in 1..n {
        qs.cx(0, i)?;
    }
    let p = qs.prob(&PartialAssignment::all(n, true))?;
    if (p - 0.5).abs() < 1e-8 {
        println!("Circuit is correct");
    } else {
        println!("Circuit is incorrect: prob(all ones) = {p}");
    }
    println!("{} groupings", qs.node_count());
    Ok(())
}
