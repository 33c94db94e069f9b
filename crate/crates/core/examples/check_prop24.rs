fn main() {
    let cfg = hlc_core::SieveConfig::default();
    let t0 = std::time::Instant::now();
    let p = hlc_core::sieve::nth_prime(1_700_000_000, &cfg).unwrap();
    println!("p_1700000000 = {} in {:?}", p, t0.elapsed());
    let t0 = std::time::Instant::now();
    let n = hlc_core::sieve::pi(39_708_229_123, &cfg).unwrap();
    println!("pi(39708229123) = {} in {:?}", n, t0.elapsed());
}
