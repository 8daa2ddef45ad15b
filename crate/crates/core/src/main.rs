fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BVCS_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let code = calcspec::cli::run(std::env::args_os(), &mut std::io::stdout().lock());
    std::process::exit(code.code());
}
