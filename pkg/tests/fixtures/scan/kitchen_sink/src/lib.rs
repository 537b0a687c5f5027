use std::fs;

extern "C" {
    pub fn k_rand() -> u64;
    pub static K_STATE: u64;
}

pub static mut TICKS: u64 = 0;

pub union Word {
    pub w: u64,
    pub b: u8,
}

pub unsafe fn poke(p: *mut u64) {
    *p = k_rand();
}

pub fn tick() -> u64 {
    unsafe {
        TICKS += 1;
        TICKS + K_STATE
    }
}

pub fn word_byte(w: Word) -> u8 {
    unsafe { w.b }
}

pub fn reader() -> fn(&str) -> String {
    load
}

pub fn load(path: &str) -> String {
    fs::read_to_string(path).unwrap_or_default()
}

pub fn spawn_reader(path: String) -> impl Fn() -> String {
    move || fs::read_to_string(&path).unwrap_or_default()
}

pub fn run_all(p: *mut u64) {
    unsafe { poke(p) };
}
