fn main() {
    std::process::exit(vidmix::pipeline::run_cli(std::env::args_os()));
}
