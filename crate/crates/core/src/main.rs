fn main() {
    std::process::exit(jhcpp::cli::run(std::env::args_os()));
}
