pub fn run() -> String {
    left::fetch_env()
}
