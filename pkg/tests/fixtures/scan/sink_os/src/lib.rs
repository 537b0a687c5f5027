use std::env;

pub fn home_dir() -> String {
    env::var("HOME").unwrap_or_default()
}

pub fn stderr_fd() -> i32 {
    std::os::unix::io::RawFd::from(2)
}

pub fn c_string(s: &str) -> std::ffi::CString {
    std::ffi::CString::new(s).unwrap()
}
