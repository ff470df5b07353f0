// Seeded sampling from a Bell pair and a 12-qubit uniform superposition.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qsym::{BackendKind, QuantumState};

fn main() -> qsym::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for kind in BackendKind::ALL {
        let mut bell = QuantumState::new(kind, 2)?;
        bell.h(0)?.cx(0, 1)?;
        let mut freq = BTreeMap::new();
        for _ in 0..1000 {
            *freq.entry(bell.measure(&mut rng).to_string()).or_insert(0) += 1;
        }
        println!("{:<8} {freq:?}", kind.name());
    }

    let mut uniform = QuantumState::new(BackendKind::Wbdd, 12)?;
    for q in 0..12 {
        uniform.h(q)?;
    }
    let draws: Vec<String> = (0..4).map(|_| uniform.measure(&mut rng).to_string()).collect();
    println!("uniform: {}", draws.join(" "));
    println!("outcomes at 2^-12: {}", uniform.measurement_counts(2f64.powi(-12))?);
    Ok(())
}
