pub struct AddrIncoming {
    addr: String,
}

impl AddrIncoming {
    pub fn new(addr: &str) -> AddrIncoming {
        let listener = std::net::TcpListener::bind(addr);
        drop(listener);
        AddrIncoming { addr: addr.to_string() }
    }
}

pub fn serve(addr: &str) -> AddrIncoming {
    AddrIncoming::new(addr)
}
