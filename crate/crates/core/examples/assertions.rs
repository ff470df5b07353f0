// Three small circuits, each with probability assertions on the final state.

use qsym::programs::assertion_programs;
use qsym::{PrecisionConfig, Registry};

fn main() -> qsym::Result<()> {
    let registry = Registry::default();
    for program in assertion_programs()? {
        let qs = program.circuit.run_on(&registry, program.backend, PrecisionConfig::default())?;
        for (m, check) in &program.checks {
            let p = qs.prob(m)?;
            let verdict = if check.holds(p) { "ok" } else { "FAILED" };
            println!("{:<12} {:<5} prob({m}) = {p:.6}  {check:?}  {verdict}", program.name, program.backend);
        }
    }
    Ok(())
}
