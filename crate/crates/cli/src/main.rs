fn main() {
    std::process::exit(slackwatch::run(std::env::args_os()));
}
