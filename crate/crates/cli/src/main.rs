fn main() {
    std::process::exit(vacuumlab::run(std::env::args_os()));
}
