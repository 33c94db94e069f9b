fn main() {
    let cfg = hlc_core::SieveConfig::default();
    let t0 = std::time::Instant::now();
    let n = hlc_core::sieve::pi(1_000_000_000, &cfg).unwrap();
    println!("pi(1e9) = {} in {:?}", n, t0.elapsed());
    let t0 = std::time::Instant::now();
    let n = hlc_core::sieve::pi(10_000_000_000, &cfg).unwrap();
    println!("pi(1e10) = {} in {:?}", n, t0.elapsed());
    let t0 = std::time::Instant::now();
    let p = hlc_core::sieve::nth_prime(50_847_534, &cfg).unwrap();
    println!("p_50847534 = {} in {:?}", p, t0.elapsed());
}
