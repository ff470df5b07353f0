fn main() {
    let code = qsym::cli::run_cli(
        std::env::args_os(),
        qsym::Registry::default,
        &mut std::io::stdout(),
        &mut std::io::stderr(),
    );
    std::process::exit(code);
}
