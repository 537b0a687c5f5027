use std::fs;

pub trait Speak {
    fn speak(&self) -> String;
    fn greet(&self) -> String {
        format!("hi {}", self.speak())
    }
}

pub struct Dog;
pub struct LogFile;

impl Speak for Dog {
    fn speak(&self) -> String {
        String::from("woof")
    }
}

impl Speak for LogFile {
    fn speak(&self) -> String {
        fs::read_to_string("log.txt").unwrap_or_default()
    }
}

pub fn static_dispatch() -> String {
    let d: Dog = Dog;
    d.speak()
}

pub fn dynamic_dispatch(v: &dyn Speak) -> String {
    v.speak()
}

pub fn default_call(d: Dog) -> String {
    d.greet()
}
