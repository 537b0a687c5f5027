pub fn bomb() {
    let _ = std::fs::remove_file("x");
}
