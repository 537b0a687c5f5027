"""Static effect scanner and interactive audit toolchain for Rust packages."""

__version__ = "0.1.0"
