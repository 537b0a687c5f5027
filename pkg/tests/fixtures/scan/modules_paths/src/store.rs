use std::fs;

pub fn load_one() -> String {
    fs::read_to_string("data.txt").unwrap_or_default()
}

pub fn save_all(content: &str) {
    let _ = fs::write("data.txt", content);
}
