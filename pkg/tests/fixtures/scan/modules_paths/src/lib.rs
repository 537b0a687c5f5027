pub mod store;
mod util;

pub fn run() -> String {
    util::tag(store::load_one())
}

pub fn prefix(s: &str) -> String {
    format!(">> {}", s)
}
