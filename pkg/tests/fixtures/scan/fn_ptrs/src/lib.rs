use std::fs;

pub fn read_file(path: &str) -> String {
    fs::read_to_string(path).unwrap_or_default()
}

pub fn double(x: i32) -> i32 {
    x * 2
}

pub fn pick_reader() -> fn(&str) -> String {
    read_file
}

pub fn pick_math() -> fn(i32) -> i32 {
    double
}

pub fn ping() -> u32 {
    pong
}

pub fn pong() -> u32 {
    ping
}
