//! Runs each example's `main` so they cannot rot.

macro_rules! example {
    ($name:ident) => {
        mod $name {
            #![allow(dead_code)]
            include!(concat!("../examples/", stringify!($name), ".rs"));

            #[test]
            fn runs() {
                main().unwrap();
            }
        }
    };
}

example!(ghz);
example!(assertions);
example!(debugging_query);
example!(custom_backend);
example!(circuit_file);
example!(sampling);
