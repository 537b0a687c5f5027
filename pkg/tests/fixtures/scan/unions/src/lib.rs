pub union Bits {
    pub int: u32,
    pub float: f32,
}

pub fn as_float(b: Bits) -> f32 {
    unsafe { b.float }
}

pub fn set_int(b: &mut Bits) {
    b.int = 7;
}
