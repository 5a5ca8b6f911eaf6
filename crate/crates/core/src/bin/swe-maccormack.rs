fn main() {
    std::process::exit(swe_maccormack::cli::run(std::env::args_os()));
}
