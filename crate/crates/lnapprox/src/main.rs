fn main() -> std::process::ExitCode {
    std::process::ExitCode::from(lnapprox::cli::run(std::env::args_os()))
}
