pub fn read_at(p: *const u8) -> u8 {
    unsafe { *p }
}

pub fn write_at(p: *mut u8, v: u8) {
    unsafe {
        *p = v;
    }
}

pub fn double_deref(pp: *const *const u8) -> u8 {
    unsafe { **pp }
}
