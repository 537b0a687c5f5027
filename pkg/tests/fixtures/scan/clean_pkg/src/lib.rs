pub fn add(a: i32, b: i32) -> i32 {
    a + b
}

pub fn compose(x: i32) -> i32 {
    add(add(x, 1), 2)
}
