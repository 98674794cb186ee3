fn main() {
    std::process::exit(sketchboot_cli::run(std::env::args_os()));
}
