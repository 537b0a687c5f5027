pub fn tag(s: String) -> String {
    crate::prefix(&s)
}

fn helper() -> u8 {
    fn inner() -> u8 {
        7
    }
    inner()
}
