mod common;

use proptest::prelude::*;

use common::{random_circuit, seeded};
use qsym::{Circuit, ParseErrorKind};

proptest! {
    #[test]
    fn serialize_then_parse_is_identity(n in 3usize..10, depth in 0usize..40, seed in any::<u64>()) {
        let c = random_circuit(&mut seeded(seed), n, depth);
        prop_assert_eq!(Circuit::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn parser_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..200)) {
        let _ = Circuit::parse_bytes(&bytes);
    }

    #[test]
    fn parser_never_panics_on_near_misses(lines in proptest::collection::vec("(qubits|h|cx|cp|p|ccx|foo)( [0-9a-z.-]{1,4}){0,4}", 0..8)) {
        let _ = Circuit::parse(&lines.join("\n"));
    }
}

#[test]
fn diagnostics_are_distinct() {
    let cases = [
        ("h 0", ParseErrorKind::MissingHeader),
        ("qubits 2\nfoo 0", ParseErrorKind::UnknownMnemonic("foo".into())),
        ("qubits 2\ncx 0", ParseErrorKind::ArityMismatch { gate: "cx".into(), expected: 2, got: 1 }),
        ("qubits 2\nh 5", ParseErrorKind::QubitOutOfRange { index: "5".into(), qubits: 2 }),
        ("qubits 2\np 0", ParseErrorKind::MissingAngle("p".into())),
        ("qubits 2\nh 0 0.5", ParseErrorKind::UnexpectedAngle("h".into())),
    ];
    for (text, kind) in cases {
        assert_eq!(Circuit::parse(text).unwrap_err().kind, kind, "{text:?}");
    }
    assert_eq!(Circuit::parse("qubits 2\nh 5").unwrap_err().to_string(), "qubit index out of range (5 >= 2), line 2");
}

#[test]
fn angle_is_a_multiple_of_pi() {
    let c = Circuit::parse("qubits 3\ncp 0 1 0.25").unwrap();
    assert_eq!(c.ops()[0].angle, Some(0.25));
    let d = common::dense_run(&Circuit::parse("qubits 1\nx 0\np 0 0.5").unwrap());
    assert!((d.amplitudes()[1] - num_complex::Complex64::new(0.0, 1.0)).norm() < 1e-12);
}

#[test]
fn empty_circuit_leaves_the_basis_state() {
    let c = Circuit::parse("# nothing\nqubits 4\n").unwrap();
    for b in common::SYMBOLIC {
        let qs = common::run_on(b, &c, Default::default());
        assert_eq!(qs.prob(&qsym::PartialAssignment::all(4, false)).unwrap(), 1.0);
    }
}
