pub fn cycle_count() -> u64 {
    std::arch::x86_64::_rdtsc() as u64
}

pub fn lanes() -> u32 {
    std::simd::u32x4::splat(1).reduce_sum()
}

pub fn hint(b: bool) -> bool {
    std::intrinsics::likely(b)
}
