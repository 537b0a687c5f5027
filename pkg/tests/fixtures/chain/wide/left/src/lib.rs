pub fn fetch_env() -> String {
    std::env::var("MODE").unwrap_or_default()
}
