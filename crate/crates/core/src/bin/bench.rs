fn main() {
    std::process::exit(accel_consensus::bench::main_with_args(std::env::args_os()));
}
