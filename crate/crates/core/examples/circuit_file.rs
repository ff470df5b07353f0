// Parses a `.qc` file (or a built-in one) and answers queries on every backend.
//
// `cargo run --example circuit_file -- path/to/circuit.qc`

use qsym::{Circuit, PartialAssignment, PrecisionConfig, Registry};

const DEFAULT: &str = "\
# three-qubit QFT of |101>, padded to four qubits
qubits 4
x 0
x 2
h 0
cp 1 0 0.5
cp 2 0 0.25
h 1
cp 2 1 0.5
h 2
swap 0 2
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path)?,
        None => DEFAULT.to_string(),
    };
    let circuit = Circuit::parse(&text)?;
    println!("{} qubits, {} gates", circuit.num_qubits(), circuit.len());
    let registry = Registry::default();
    let q0 = PartialAssignment::from([(0, 0)]);
    for backend in registry.names() {
        match circuit.run_on(&registry, &backend, PrecisionConfig::default()) {
            Ok(qs) => println!("{backend:<8} prob({q0}) = {:.6}  nodes {}", qs.prob(&q0)?, qs.node_count()),
            Err(e) => println!("{backend:<8} {e}"),
        }
    }
    Ok(())
}
