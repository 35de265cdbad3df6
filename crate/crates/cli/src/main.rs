fn main() {
    std::process::exit(wavemetro_cli::run(std::env::args_os().skip(1)));
}
