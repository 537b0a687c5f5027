pub fn flush_stdout(out: &mut std::io::Stdout) {
    out.flush().ok();
}

pub fn swap_bytes(a: &mut u8, b: &mut u8) {
    std::mem::swap(a, b);
}
