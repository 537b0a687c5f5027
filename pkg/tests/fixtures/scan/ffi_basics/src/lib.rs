extern "C" {
    pub fn c_add(a: i32, b: i32) -> i32;
    fn c_log(level: i32);
    pub static C_ERRNO: i32;
}

pub fn add_twice(x: i32) -> i32 {
    unsafe { c_add(x, x) }
}

pub fn log_all() {
    unsafe {
        c_log(1);
        c_log(2);
    }
}

pub fn read_errno() -> i32 {
    unsafe { C_ERRNO }
}
