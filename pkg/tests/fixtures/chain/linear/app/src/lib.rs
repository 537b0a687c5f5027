pub fn main_entry() -> String {
    mid::load("cfg")
}
