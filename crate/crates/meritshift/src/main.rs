fn main() {
    let status = meritshift::cli::run(std::env::args_os());
    std::process::exit(status as i32);
}
