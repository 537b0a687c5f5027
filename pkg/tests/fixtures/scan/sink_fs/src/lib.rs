use std::fs;
use std::path::PathBuf;

pub fn read_config(name: &str) -> String {
    let p = PathBuf::from(name);
    fs::read_to_string(p).unwrap_or_default()
}

pub fn config_exists(name: &str) -> bool {
    std::path::Path::new(name).exists()
}
