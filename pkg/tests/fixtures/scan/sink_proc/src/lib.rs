pub fn run(cmd: &str) -> bool {
    std::process::Command::new(cmd).status().is_ok()
}

pub fn guarded() -> u8 {
    std::panic::catch_unwind(|| 7).unwrap_or(0)
}

pub fn trace() -> String {
    let bt = std::backtrace::Backtrace::capture();
    format!("{:?}", bt)
}
