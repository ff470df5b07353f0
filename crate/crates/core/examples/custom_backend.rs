// Registers a replacement backend and runs a circuit through it.
//
// The wrapper delegates to the weighted BDD but counts gate applications.

use std::any::Any;
use std::cell::Cell;
use std::rc::Rc;

use qsym::wbdd::WbddBackend;
use qsym::{
    Amplitude, Backend, BitString, Circuit, GateApplication, OutcomeCount, PartialAssignment, PrecisionConfig,
    Registry, StateHandle,
};

thread_local! {
    static GATES: Cell<usize> = const { Cell::new(0) };
}

struct Counting(Box<dyn StateHandle>);

impl StateHandle for Counting {
    fn backend_name(&self) -> &str {
        "counting"
    }
    fn num_qubits(&self) -> usize {
        self.0.num_qubits()
    }
    fn precision(&self) -> &PrecisionConfig {
        self.0.precision()
    }
    fn apply_gate(&self, g: &GateApplication) -> qsym::Result<Box<dyn StateHandle>> {
        GATES.with(|c| c.set(c.get() + 1));
        Ok(Box::new(Counting(self.0.apply_gate(g)?)))
    }
    fn prob(&self, m: &PartialAssignment) -> qsym::Result<f64> {
        self.0.prob(m)
    }
    fn measure(&self, rng: &mut dyn rand::RngCore) -> BitString {
        self.0.measure(rng)
    }
    fn measurement_counts(&self, p: f64, tol: f64) -> qsym::Result<OutcomeCount> {
        self.0.measurement_counts(p, tol)
    }
    fn amplitude(&self, bits: &[bool]) -> Amplitude {
        self.0.amplitude(bits)
    }
    fn node_count(&self) -> usize {
        self.0.node_count()
    }
    fn same_representation(&self, other: &dyn StateHandle) -> bool {
        other
            .as_any()
            .downcast_ref::<Counting>()
            .is_some_and(|o| self.0.same_representation(&*o.0))
    }
    fn as_any(&self) -> &dyn Any {
        self
    }
}

struct CountingBackend;

impl Backend for CountingBackend {
    fn name(&self) -> &str {
        "counting"
    }
    fn new_state(&self, n: usize, precision: &PrecisionConfig) -> qsym::Result<Box<dyn StateHandle>> {
        Ok(Box::new(Counting(WbddBackend.new_state(n, precision)?)))
    }
}

fn main() -> qsym::Result<()> {
    let mut registry = Registry::default();
    registry.register(Rc::new(CountingBackend));
    println!("backends: {}", registry.names().join(" "));

    let circuit: Circuit = "qubits 3\nh 0\ncx 0 1\ncx 1 2\n".parse()?;
    let qs = circuit.run_on(&registry, "counting", PrecisionConfig::default())?;
    println!("prob(111) = {}", qs.prob(&PartialAssignment::all(3, true))?);
    println!("gates applied: {}", GATES.with(Cell::get));
    Ok(())
}
