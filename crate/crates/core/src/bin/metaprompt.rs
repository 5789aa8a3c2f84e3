fn main() {
    std::process::exit(metaprompt::harness::cli_dispatch(std::env::args_os()));
}
