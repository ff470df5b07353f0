mod common;

use proptest::prelude::*;

use common::{bits, dense_run, random_circuit, run_on, seeded, width_for, SYMBOLIC};
use qsym::{Circuit, GateApplication as G, PartialAssignment, PrecisionConfig, QuantumState, Registry};

fn circuit_strategy() -> impl Strategy<Value = Circuit> {
    (3usize..=6, 0usize..20, any::<u64>()).prop_map(|(n, depth, seed)| random_circuit(&mut seeded(seed), n, depth))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn symbolic_backends_agree_with_dense(c in circuit_strategy()) {
        let n = c.num_qubits();
        let d = dense_run(&c);
        for b in SYMBOLIC {
            let qs = run_on(b, &c, PrecisionConfig::default());
            for i in 0..1usize << n {
                let got = qs.prob(&PartialAssignment::from_bits(&bits(i, n))).unwrap();
                prop_assert!((got - d.amplitudes()[i].norm_sqr()).abs() < 1e-9, "{b} basis {i}");
            }
        }
    }

    #[test]
    fn marginals_sum_to_one(c in circuit_strategy(), q in 0usize..3) {
        for b in SYMBOLIC {
            let qs = run_on(b, &c, PrecisionConfig::default());
            let p0 = qs.prob(&PartialAssignment::from([(q, 0)])).unwrap();
            let p1 = qs.prob(&PartialAssignment::from([(q, 1)])).unwrap();
            prop_assert!((p0 + p1 - 1.0).abs() < 1e-9, "{b}: {p0} + {p1}");
        }
    }

    #[test]
    fn circuit_then_inverse_is_identity(c in circuit_strategy()) {
        let n = c.num_qubits();
        for b in SYMBOLIC {
            let w = width_for(b, n);
            let zero = QuantumState::from_registry(&Registry::default(), b, w, PrecisionConfig::default()).unwrap();
            let round = run_on(b, &c.then(&c.inverse()), PrecisionConfig::default());
            let p = round.prob(&PartialAssignment::all(w, false)).unwrap();
            prop_assert!((p - 1.0).abs() < 1e-9, "{b}: {p}");
            // fresh managers never share handles
            prop_assert!(!zero.same_representation(&round));
        }
    }

    #[test]
    fn same_function_same_handle(seed in any::<u64>(), a in 0usize..3, b in 0usize..3) {
        prop_assume!(a != b);
        for backend in SYMBOLIC {
            let prefix = random_circuit(&mut seeded(seed), 4, 8);
            let root = run_on(backend, &prefix, PrecisionConfig::default());
            // gates on disjoint qubits commute
            let x = root.apply(&G::h(a)).unwrap().apply(&G::t(b)).unwrap();
            let y = root.apply(&G::t(b)).unwrap().apply(&G::h(a)).unwrap();
            prop_assert!(x.same_representation(&y), "{backend}");
            let z = x.apply(&G::x(3)).unwrap().apply(&G::x(3)).unwrap();
            prop_assert!(x.same_representation(&z), "{backend}");
        }
    }

    #[test]
    fn measurement_stays_in_support(c in circuit_strategy(), seed in any::<u64>()) {
        let d = dense_run(&c);
        let mut rng = seeded(seed);
        for b in SYMBOLIC {
            let qs = run_on(b, &c, PrecisionConfig::default());
            for _ in 0..32 {
                let s = qs.measure(&mut rng);
                let idx = s.0[..c.num_qubits()].iter().fold(0usize, |acc, &x| acc << 1 | x as usize);
                prop_assert!(d.amplitudes()[idx].norm_sqr() > 1e-12, "{b} drew {s}");
                prop_assert!(s.0[c.num_qubits()..].iter().all(|x| !x), "{b} drew padding {s}");
            }
        }
    }
}

#[test]
fn persistence_keeps_old_states() {
    for b in SYMBOLIC {
        let zero = QuantumState::from_registry(&Registry::default(), b, 4, PrecisionConfig::default()).unwrap();
        let plus = zero.apply(&G::h(0)).unwrap();
        assert!((zero.prob(&PartialAssignment::from([(0, 0)])).unwrap() - 1.0).abs() < 1e-12);
        assert!((plus.prob(&PartialAssignment::from([(0, 0)])).unwrap() - 0.5).abs() < 1e-12);
    }
}

#[test]
fn invalid_arguments_are_rejected() {
    for b in SYMBOLIC {
        let qs = QuantumState::from_registry(&Registry::default(), b, 4, PrecisionConfig::default()).unwrap();
        assert!(qs.apply(&G::cx(1, 1)).is_err());
        assert!(qs.apply(&G::h(4)).is_err());
        assert!(qs.prob(&PartialAssignment::from([(7, 1)])).is_err());
        assert!(qs.measurement_counts(1.5).is_err());
        assert!(qs.amplitude(&[false; 3]).is_err());
    }
}

#[test]
fn wbdd_long_grover_keeps_its_norm() {
    use qsym::bench::circuits::{self, Benchmark, OracleSpec, Secret};
    // 200 iterations drive the low-path weights into cancellation residue
    let spec = OracleSpec::generate(Benchmark::Grover, 16, 1).unwrap();
    let Secret::Marked(marked) = &spec.secret else { unreachable!() };
    let inst = circuits::instance(&spec).unwrap();
    let qs = inst.circuit.run_on(&Registry::default(), "wbdd", PrecisionConfig::default()).unwrap();
    let total = qs.prob(&PartialAssignment::new()).unwrap();
    assert!((total - 1.0).abs() < 1e-8, "{total}");
    assert!(qs.prob(&PartialAssignment::from_bits(marked)).unwrap() > 0.9);
    assert!(qs.node_count() < 1000);
}
