fn main() {
    eprintln!("{{\"error\":\"cli not wired up yet\"}}");
    std::process::exit(1);
}
