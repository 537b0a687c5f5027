pub fn fetch(url: &str) -> String {
    http_client::get(url)
}

pub fn local_read(path: &str) -> String {
    std::fs::read_to_string(path).unwrap_or_default()
}
