pub unsafe fn dangerous(x: u8) -> u8 {
    x + 1
}

pub fn call_local(x: u8) -> u8 {
    unsafe { dangerous(x) }
}

pub fn first_byte(data: &[u8]) -> u8 {
    unsafe { *data.get_unchecked(0) }
}
