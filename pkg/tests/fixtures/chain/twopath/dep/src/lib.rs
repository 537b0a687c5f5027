pub fn read_with_flag(path: &str, check: bool) -> String {
    if check {
        std::fs::read_to_string(path).unwrap_or_default()
    } else {
        audit_log(path);
        String::new()
    }
}

fn audit_log(path: &str) {
    let _ = std::fs::write("log", path);
}
