static mut COUNTER: u64 = 0;

pub fn bump() -> u64 {
    unsafe {
        COUNTER += 1;
        COUNTER
    }
}

pub fn peek() -> u64 {
    unsafe { COUNTER }
}
