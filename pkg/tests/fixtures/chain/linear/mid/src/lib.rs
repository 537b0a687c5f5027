pub fn load(path: &str) -> String {
    leaf::read_raw(path)
}

pub fn untouched() -> u8 {
    leaf::pure_leaf(1)
}
