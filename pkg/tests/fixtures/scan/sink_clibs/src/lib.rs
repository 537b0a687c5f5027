pub fn pid() -> i32 {
    unsafe { libc::getpid() }
}

pub fn beep() {
    unsafe { winapi::um::winuser::MessageBeep(0) };
}
