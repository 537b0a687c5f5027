pub fn strict_read(path: &str) -> String {
    dep::read_with_flag(path, true)
}

pub fn lax_read(path: &str) -> String {
    dep::read_with_flag(path, false)
}
