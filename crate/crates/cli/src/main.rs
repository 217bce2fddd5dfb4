fn main() {
    std::process::exit(pillar_lens_cli::main_with_args(std::env::args_os()));
}
