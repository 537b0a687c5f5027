pub fn read_raw(path: &str) -> String {
    std::fs::read_to_string(path).unwrap_or_default()
}

pub fn pure_leaf(x: u8) -> u8 {
    x ^ 0xff
}

pub fn write_raw(path: &str, s: &str) {
    let _ = std::fs::write(path, s);
}
