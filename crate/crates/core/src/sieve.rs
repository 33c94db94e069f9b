//! Segmented, bit-packed sieve of Eratosthenes with a 3-5-7-11-13 presieve
//! wheel. Ground-truth prime oracle for every other module.
//!
//! Segments store odd numbers only: bit `i` of the map represents the odd
//! number `2*(I0+i)+1` where `I0` is the segment's global odd-index base.
//! Multiples of the wheel primes are stamped from a precomputed pattern, so
//! marking starts at p = 17. pi(x) and nth_prime(k) stream segments without
//! storing primes, which keeps nth_prime(1.7e9) in bounded memory.

use std::io::{Read, Write};
use std::ops::ControlFlow;
use std::sync::OnceLock;

use crate::error::{Error, Result};

const WHEEL_PRIMES: [u64; 5] = [3, 5, 7, 11, 13];
/// lcm(3,5,7,11,13) bytes; the presieve pattern repeats at this byte period
/// in global odd-index space.
const WHEEL_BYTES: usize = 15015;

/// Sieving configuration: segment size, hard range cap, worker count.
#[derive(Clone, Debug)]
pub struct SieveConfig {
    /// Bytes per segment bitmap; L2-cache sized by default.
    pub segment_bytes: usize,
    /// Hard cap on any sieving request.
    pub max_limit: u64,
    /// Independent workers for range-partitioned sieving.
    pub shards: usize,
}

impl Default for SieveConfig {
    fn default() -> Self {
        SieveConfig {
            segment_bytes: 256 * 1024,
            max_limit: 100_000_000_000,
            shards: default_shards(),
        }
    }
}

pub fn default_shards() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl SieveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.segment_bytes < 4096 {
            return Err(Error::Domain(format!(
                "segment_bytes {} < 4096",
                self.segment_bytes
            )));
        }
        if self.max_limit > i64::MAX as u64 {
            return Err(Error::Domain("max_limit above 2^63-1".into()));
        }
        if self.shards == 0 {
            return Err(Error::Domain("shards must be >= 1".into()));
        }
        Ok(())
    }

    fn check_range(&self, lo: u64, hi: u64) -> Result<()> {
        self.validate()?;
        if hi < lo {
            return Err(Error::EmptyRange { lo, hi });
        }
        if hi > self.max_limit {
            return Err(Error::Capacity(format!(
                "hi={hi} exceeds max_limit={}",
                self.max_limit
            )));
        }
        Ok(())
    }
}

fn wheel_pattern() -> &'static [u8] {
    static PATTERN: OnceLock<Vec<u8>> = OnceLock::new();
    PATTERN.get_or_init(|| {
        let mut pat = vec![0u8; WHEEL_BYTES];
        for (j, byte) in pat.iter_mut().enumerate() {
            for k in 0..8u64 {
                let i = 8 * j as u64 + k;
                // odd number n = 2i+1 divisible by p  <=>  i = (p-1)/2 mod p
                if WHEEL_PRIMES.iter().any(|&p| i % p == (p - 1) / 2) {
                    *byte |= 1 << k;
                }
            }
        }
        pat
    })
}

/// Integer square root, exact.
pub fn isqrt(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut r = (n as f64).sqrt() as u64;
    while r.saturating_mul(r) > n {
        r -= 1;
    }
    while (r + 1).saturating_mul(r + 1) <= n {
        r += 1;
    }
    r
}

/// Simple odd sieve for base primes (and for small tables in tests).
pub fn small_primes(limit: u64) -> Vec<u64> {
    if limit < 2 {
        return Vec::new();
    }
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = vec![2u64];
    let mut i = 3usize;
    while i * i <= n {
        if !composite[i] {
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += 2 * i;
            }
        }
        i += 2;
    }
    let mut i = 3usize;
    while i <= n {
        if !composite[i] {
            out.push(i as u64);
        }
        i += 2;
    }
    out
}

/// Walks the odd-index bitmap of `[lo, hi]` one segment at a time.
struct Walker<'a> {
    base: &'a [u64],
    next_idx: Vec<u64>,
    words: Vec<u64>,
    /// Words of `words` holding the most recent segment.
    last_words: usize,
    seg_bits: u64,
    i_lo: u64,
    i_cur: u64,
    i_end: u64, // exclusive
}

impl<'a> Walker<'a> {
    /// `base` must hold the odd primes >= 17 up to sqrt(hi).
    fn new(lo: u64, hi: u64, segment_bytes: usize, base: &'a [u64]) -> Walker<'a> {
        let lo_odd = lo.max(3) | 1;
        let i_lo = (lo_odd - 1) / 2;
        let i_end = if hi < 3 { i_lo } else { (hi - 1) / 2 + 1 };
        let i_start = i_lo & !7; // byte-align for pattern stamping
        let seg_bits = (segment_bytes * 8) as u64;
        let next_idx = base
            .iter()
            .map(|&p| {
                let n0 = 2 * i_start + 1;
                let mut m = n0.div_ceil(p).max(p) * p;
                if m < p * p {
                    m = p * p;
                }
                if m % 2 == 0 {
                    m += p;
                }
                (m - 1) / 2
            })
            .collect();
        Walker {
            base,
            next_idx,
            words: vec![0u64; segment_bytes / 8],
            last_words: 0,
            seg_bits,
            i_lo,
            i_cur: i_start,
            i_end,
        }
    }

    /// Sieve the next segment; returns (segment base index, live bit count)
    /// with the bitmap left in `self.words` (zero bit = prime).
    fn advance(&mut self) -> Option<(u64, u64)> {
        if self.i_cur >= self.i_end {
            return None;
        }
        let i0 = self.i_cur;
        let i1 = (i0 + self.seg_bits).min(self.i_end);
        let nbits = i1 - i0;
        let nwords = nbits.div_ceil(64) as usize;
        let words = &mut self.words[..nwords];

        // Stamp the wheel pattern byte-wise.
        let bytes: &mut [u8] = bytemuck_cast(words);
        let nbytes = (nbits as usize).div_ceil(8);
        let pat = wheel_pattern();
        let mut src = (i0 as usize / 8) % WHEEL_BYTES;
        let mut dst = 0usize;
        while dst < nbytes {
            let run = (WHEEL_BYTES - src).min(nbytes - dst);
            bytes[dst..dst + run].copy_from_slice(&pat[src..src + run]);
            dst += run;
            src = (src + run) % WHEEL_BYTES;
        }
        for b in bytes[nbytes..].iter_mut() {
            *b = 0xFF;
        }

        // The wheel primes themselves are prime; 1 is not.
        for &p in &WHEEL_PRIMES {
            let i = (p - 1) / 2;
            if i >= i0 && i < i1 {
                words[((i - i0) / 64) as usize] &= !(1u64 << ((i - i0) % 64));
            }
        }
        if i0 == 0 {
            words[0] |= 1; // n = 1
        }

        // Cross off multiples of the remaining base primes.
        for (j, &p) in self.base.iter().enumerate() {
            let mut idx = self.next_idx[j];
            while idx < i1 {
                let rel = idx - i0;
                words[(rel >> 6) as usize] |= 1u64 << (rel & 63);
                idx += p;
            }
            self.next_idx[j] = idx;
        }

        // Mask everything outside [i_lo, i_end).
        if i0 < self.i_lo {
            for i in 0..(self.i_lo - i0) {
                words[(i >> 6) as usize] |= 1u64 << (i & 63);
            }
        }
        let tail = nbits;
        let full = (nwords as u64) * 64;
        for i in tail..full {
            words[(i >> 6) as usize] |= 1u64 << (i & 63);
        }

        let live: u64 = words.iter().map(|w| w.count_zeros() as u64).sum();
        self.i_cur = i1;
        self.last_words = nwords;
        Some((i0, live))
    }

    /// Visit the primes of the segment most recently produced by `advance`.
    fn for_each_prime(&self, i0: u64, mut f: impl FnMut(u64)) {
        for (w, &word) in self.words[..self.last_words].iter().enumerate() {
            let mut inv = !word;
            while inv != 0 {
                let bit = inv.trailing_zeros() as u64;
                f(2 * (i0 + 64 * w as u64 + bit) + 1);
                inv &= inv - 1;
            }
        }
    }
}

fn bytemuck_cast(words: &mut [u64]) -> &mut [u8] {
    // u64 -> u8 view; safe because u8 has no alignment or validity demands.
    unsafe { std::slice::from_raw_parts_mut(words.as_mut_ptr().cast::<u8>(), words.len() * 8) }
}

fn base_primes_for(hi: u64) -> Vec<u64> {
    small_primes(isqrt(hi))
        .into_iter()
        .filter(|&p| p >= 17)
        .collect()
}

/// Split [lo, hi] into at most `shards` contiguous non-empty chunks.
fn chunks(lo: u64, hi: u64, shards: usize) -> Vec<(u64, u64)> {
    let span = hi - lo + 1;
    let k = (shards as u64).min(span).max(1);
    let w = span.div_ceil(k);
    let mut out = Vec::new();
    let mut a = lo;
    while a <= hi {
        let b = hi.min(a + w - 1);
        out.push((a, b));
        if b == hi {
            break;
        }
        a = b + 1;
    }
    out
}

/// Exactly the primes p with lo <= p <= hi, ascending.
pub fn primes_in_range(lo: u64, hi: u64, cfg: &SieveConfig) -> Result<Vec<u64>> {
    cfg.check_range(lo, hi)?;
    let base = base_primes_for(hi);
    let parts = chunks(lo, hi, cfg.shards);
    let mut results: Vec<Vec<u64>> = Vec::with_capacity(parts.len());
    if parts.len() == 1 {
        results.push(collect_chunk(parts[0].0, parts[0].1, cfg.segment_bytes, &base));
    } else {
        let base = &base;
        std::thread::scope(|scope| {
            let handles: Vec<_> = parts
                .iter()
                .map(|&(a, b)| scope.spawn(move || collect_chunk(a, b, cfg.segment_bytes, base)))
                .collect();
            for h in handles {
                results.push(h.join().expect("sieve worker panicked"));
            }
        });
    }
    let mut out = Vec::with_capacity(results.iter().map(Vec::len).sum());
    for r in results {
        out.extend(r);
    }
    Ok(out)
}

fn collect_chunk(lo: u64, hi: u64, segment_bytes: usize, base: &[u64]) -> Vec<u64> {
    let mut out = Vec::new();
    if lo <= 2 && 2 <= hi {
        out.push(2);
    }
    let mut walker = Walker::new(lo, hi, segment_bytes, base);
    while let Some((i0, live)) = walker.advance() {
        if live == 0 {
            continue;
        }
        walker.for_each_prime(i0, |p| out.push(p));
    }
    out
}

/// Exact prime count pi(x), streaming segments without storing primes.
pub fn pi(x: u64, cfg: &SieveConfig) -> Result<u64> {
    cfg.check_range(0, x.max(1))?;
    if x < 2 {
        return Ok(0);
    }
    if x == 2 {
        return Ok(1);
    }
    let base = base_primes_for(x);
    let parts = chunks(3, x, cfg.shards);
    let mut total = 1u64; // the prime 2
    if parts.len() == 1 {
        total += count_chunk(parts[0].0, parts[0].1, cfg.segment_bytes, &base);
    } else {
        let base = &base;
        std::thread::scope(|scope| {
            let handles: Vec<_> = parts
                .iter()
                .map(|&(a, b)| scope.spawn(move || count_chunk(a, b, cfg.segment_bytes, base)))
                .collect();
            for h in handles {
                total += h.join().expect("sieve worker panicked");
            }
        });
    }
    Ok(total)
}

fn count_chunk(lo: u64, hi: u64, segment_bytes: usize, base: &[u64]) -> u64 {
    let mut walker = Walker::new(lo, hi, segment_bytes, base);
    let mut n = 0u64;
    while let Some((_, live)) = walker.advance() {
        n += live;
    }
    n
}

/// Rosser-style upper bound on p_k, used to size streaming searches.
fn nth_prime_upper(k: u64) -> u64 {
    const SMALL: [u64; 6] = [0, 2, 3, 5, 7, 11];
    if k < 6 {
        return SMALL[k as usize];
    }
    let kf = k as f64;
    (kf * (kf.ln() + kf.ln().ln())).ceil() as u64 + 16
}

/// The k-th prime (1-based), streaming in bounded memory.
pub fn nth_prime(k: u64, cfg: &SieveConfig) -> Result<u64> {
    if k == 0 {
        return Err(Error::Domain("prime indices are 1-based".into()));
    }
    if k == 1 {
        return Ok(2);
    }
    let ub = nth_prime_upper(k);
    cfg.validate()?;
    if ub > cfg.max_limit {
        return Err(Error::Capacity(format!(
            "p_{k} may exceed max_limit={} (upper estimate {ub})",
            cfg.max_limit
        )));
    }
    let base = base_primes_for(ub);
    let parts = chunks(3, ub, cfg.shards);
    // Count each chunk in parallel, then walk the chunk holding p_k.
    let mut counts = vec![0u64; parts.len()];
    if parts.len() == 1 {
        counts[0] = count_chunk(parts[0].0, parts[0].1, cfg.segment_bytes, &base);
    } else {
        let base = &base;
        std::thread::scope(|scope| {
            let handles: Vec<_> = parts
                .iter()
                .map(|&(a, b)| scope.spawn(move || count_chunk(a, b, cfg.segment_bytes, base)))
                .collect();
            for (slot, h) in counts.iter_mut().zip(handles) {
                *slot = h.join().expect("sieve worker panicked");
            }
        });
    }
    let mut remaining = k - 1; // 2 already accounted for
    for (ci, &(a, b)) in parts.iter().enumerate() {
        if remaining > counts[ci] {
            remaining -= counts[ci];
            continue;
        }
        let mut walker = Walker::new(a, b, cfg.segment_bytes, &base);
        while let Some((i0, live)) = walker.advance() {
            if remaining > live {
                remaining -= live;
                continue;
            }
            let mut found = 0u64;
            let mut result = None;
            walker.for_each_prime(i0, |p| {
                found += 1;
                if found == remaining && result.is_none() {
                    result = Some(p);
                }
            });
            return result.ok_or_else(|| Error::Capacity("prime location failed".into()));
        }
    }
    Err(Error::Capacity(format!(
        "upper estimate {ub} for p_{k} was too small"
    )))
}

/// Stream ascending primes of [lo, hi] in batches to `sink`; the sink may
/// stop the stream early with `ControlFlow::Break`.
pub fn for_each_prime_block(
    lo: u64,
    hi: u64,
    cfg: &SieveConfig,
    mut sink: impl FnMut(&[u64]) -> ControlFlow<()>,
) -> Result<()> {
    cfg.check_range(lo, hi)?;
    let base = base_primes_for(hi);
    let mut batch = Vec::with_capacity(1 << 16);
    if lo <= 2 && 2 <= hi {
        batch.push(2);
    }
    let mut walker = Walker::new(lo, hi, cfg.segment_bytes, &base);
    while let Some((i0, _)) = walker.advance() {
        walker.for_each_prime(i0, |p| batch.push(p));
        if batch.len() >= (1 << 16) {
            if sink(&batch).is_break() {
                return Ok(());
            }
            batch.clear();
        }
    }
    if !batch.is_empty() {
        let _ = sink(&batch);
    }
    Ok(())
}

// ---------------------------------------------------------------- PrimeTable

/// Indexed, contiguous block of primes supporting p_k lookup and pi queries.
///
/// Immutable after construction; shareable across threads.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimeTable {
    base_index: u64,
    primes: Vec<u64>,
    limit: u64,
}

impl PrimeTable {
    /// Full table of all primes <= limit (base_index = 1).
    pub fn sieved(limit: u64, cfg: &SieveConfig) -> Result<PrimeTable> {
        let primes = primes_in_range(0, limit, cfg)?;
        Ok(PrimeTable {
            base_index: 1,
            primes,
            limit,
        })
    }

    /// Assemble from parts. Checks ordering and the limit, not primality;
    /// call `verify` for the full invariant sweep.
    pub fn from_parts(base_index: u64, primes: Vec<u64>, limit: u64) -> Result<PrimeTable> {
        if base_index == 0 {
            return Err(Error::Domain("base_index is 1-based".into()));
        }
        if !primes.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Format("prime list not strictly increasing".into()));
        }
        if let Some(&last) = primes.last() {
            if last > limit {
                return Err(Error::Format(format!(
                    "last entry {last} exceeds stated limit {limit}"
                )));
            }
        }
        Ok(PrimeTable {
            base_index,
            primes,
            limit,
        })
    }

    pub fn base_index(&self) -> u64 {
        self.base_index
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// Largest global index the table can answer `nth` for.
    pub fn last_index(&self) -> u64 {
        self.base_index + self.primes.len() as u64 - 1
    }

    /// p_k by global 1-based index.
    pub fn nth(&self, k: u64) -> Result<u64> {
        if k < self.base_index || k > self.last_index() {
            return Err(Error::Capacity(format!(
                "index {k} outside table [{}, {}]",
                self.base_index,
                self.last_index()
            )));
        }
        Ok(self.primes[(k - self.base_index) as usize])
    }

    /// pi(x) for x <= limit.
    pub fn count_leq(&self, x: u64) -> Result<u64> {
        if x > self.limit {
            return Err(Error::Capacity(format!(
                "x={x} beyond sieved limit {}",
                self.limit
            )));
        }
        if self.base_index != 1 {
            match self.primes.first() {
                Some(&first) if x >= first => {}
                _ => {
                    return Err(Error::Domain(
                        "partial table cannot count below its first entry".into(),
                    ))
                }
            }
        }
        let stored = self.primes.partition_point(|&p| p <= x) as u64;
        Ok(self.base_index - 1 + stored)
    }

    /// Full invariant sweep: ascending order, primality (exhaustive up to
    /// 2^20 entries, sampled beyond), nth/count consistency, and no missing
    /// primes in sampled gaps.
    pub fn verify(&self) -> Result<()> {
        if !self.primes.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Format("table not strictly increasing".into()));
        }
        let n = self.primes.len();
        let exhaustive = n <= (1 << 20);
        let step = if exhaustive { 1 } else { n / (1 << 16) };
        for idx in (0..n).step_by(step.max(1)) {
            let p = self.primes[idx];
            if !is_prime(p) {
                return Err(Error::Format(format!("composite entry {p} at {idx}")));
            }
        }
        for idx in (0..n.saturating_sub(1)).step_by((n / 256).max(1)) {
            let (a, b) = (self.primes[idx], self.primes[idx + 1]);
            let mut m = a + 1;
            while m < b {
                if is_prime(m) {
                    return Err(Error::Format(format!("missing prime {m} between {a} and {b}")));
                }
                m += 1;
            }
        }
        if self.base_index == 1 {
            for idx in (0..n).step_by(step.max(1)) {
                let k = idx as u64 + 1;
                if self.count_leq(self.primes[idx])? != k {
                    return Err(Error::Format(format!("count_leq(nth({k})) != {k}")));
                }
            }
        }
        Ok(())
    }

    // ------------------------------------------------------------- cache IO

    /// Write the cache format: magic "HLCP", version u32, base_index u64,
    /// count u64 (all little-endian), then the primes as little-endian u64.
    pub fn save(&self, mut w: impl Write) -> Result<()> {
        w.write_all(b"HLCP")?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&self.base_index.to_le_bytes())?;
        w.write_all(&(self.primes.len() as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(8 * 8192);
        for chunk in self.primes.chunks(8192) {
            buf.clear();
            for &p in chunk {
                buf.extend_from_slice(&p.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    /// Read the cache format. The header does not carry `limit`; the caller
    /// supplies the limit the file was sieved to (cache keys carry it), or
    /// `None` to clamp conservatively to the last stored prime.
    pub fn load(mut r: impl Read, limit: Option<u64>) -> Result<PrimeTable> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"HLCP" {
            return Err(Error::Format("bad magic (expected HLCP)".into()));
        }
        let mut u32b = [0u8; 4];
        r.read_exact(&mut u32b)?;
        let version = u32::from_le_bytes(u32b);
        if version != 1 {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let mut u64b = [0u8; 8];
        r.read_exact(&mut u64b)?;
        let base_index = u64::from_le_bytes(u64b);
        r.read_exact(&mut u64b)?;
        let count = u64::from_le_bytes(u64b) as usize;
        let mut primes = Vec::with_capacity(count);
        let mut buf = vec![0u8; 8 * 8192];
        let mut left = count;
        while left > 0 {
            let take = left.min(8192);
            r.read_exact(&mut buf[..8 * take])?;
            for i in 0..take {
                primes.push(u64::from_le_bytes(buf[8 * i..8 * i + 8].try_into().unwrap()));
            }
            left -= take;
        }
        let fallback = primes.last().copied().unwrap_or(1);
        PrimeTable::from_parts(base_index, primes, limit.unwrap_or(fallback))
    }
}

// ---------------------------------------------------------------- primality

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1u64;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a, m);
        }
        a = mul_mod(a, a, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller-Rabin over the full u64 range.
pub fn is_prime(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &WITNESSES {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn trial_division_primes(lo: u64, hi: u64) -> Vec<u64> {
        (lo.max(2)..=hi)
            .filter(|&n| {
                let r = isqrt(n);
                (2..=r).all(|d| n % d != 0)
            })
            .collect()
    }

    fn cfg(shards: usize) -> SieveConfig {
        SieveConfig {
            shards,
            ..SieveConfig::default()
        }
    }

    #[test]
    fn small_ranges_match_trial_division() {
        assert_eq!(primes_in_range(1, 10, &cfg(1)).unwrap(), vec![2, 3, 5, 7]);
        assert_eq!(primes_in_range(0, 1, &cfg(1)).unwrap(), Vec::<u64>::new());
        assert_eq!(primes_in_range(2, 2, &cfg(1)).unwrap(), vec![2]);
        for (lo, hi) in [(0, 300), (289, 400), (990, 1100), (65000, 66000)] {
            assert_eq!(
                primes_in_range(lo, hi, &cfg(1)).unwrap(),
                trial_division_primes(lo, hi),
                "window [{lo}, {hi}]"
            );
        }
    }

    #[test]
    fn windows_to_1e6_match_trial_division_exhaustively() {
        let c = cfg(2);
        for w in 0..100u64 {
            let lo = w * 10_000;
            let hi = lo + 10_000;
            assert_eq!(
                primes_in_range(lo, hi, &c).unwrap(),
                trial_division_primes(lo, hi),
                "window [{lo}, {hi}]"
            );
        }
    }

    #[test]
    fn sampled_windows_to_1e10_match_trial_division() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
        let c = cfg(2);
        for _ in 0..100 {
            let lo = rng.gen_range(0..10_000_000_000u64);
            let hi = lo + 10_000;
            assert_eq!(
                primes_in_range(lo, hi, &c).unwrap(),
                trial_division_primes(lo, hi),
                "window [{lo}, {hi}]"
            );
        }
    }

    #[test]
    fn window_around_1e9_matches_trial_division() {
        let (lo, hi) = (1_000_000_000 - 100, 1_000_000_000 + 100);
        assert_eq!(
            primes_in_range(lo, hi, &cfg(1)).unwrap(),
            trial_division_primes(lo, hi)
        );
    }

    #[test]
    fn pi_reference_points() {
        let c = cfg(2);
        assert_eq!(pi(0, &c).unwrap(), 0);
        assert_eq!(pi(1, &c).unwrap(), 0);
        assert_eq!(pi(2, &c).unwrap(), 1);
        assert_eq!(pi(3, &c).unwrap(), 2);
        assert_eq!(pi(100, &c).unwrap(), 25);
        assert_eq!(pi(1_000, &c).unwrap(), 168);
        assert_eq!(pi(1_000_000, &c).unwrap(), 78_498);
        // p_250000 from the Panaitopol computation
        assert_eq!(pi(3_497_861, &c).unwrap(), 250_000);
    }

    #[test]
    fn pi_steps_by_one_at_primes() {
        let c = cfg(1);
        let table = PrimeTable::sieved(1_000_000, &c).unwrap();
        let mut expected = 0u64;
        for &p in table.primes() {
            expected += 1;
            assert_eq!(table.count_leq(p).unwrap(), expected);
            assert_eq!(table.count_leq(p - 1).unwrap(), expected - 1);
        }
    }

    #[test]
    fn nth_prime_reference_points() {
        let c = cfg(2);
        assert_eq!(nth_prime(1, &c).unwrap(), 2);
        assert_eq!(nth_prime(2, &c).unwrap(), 3);
        assert_eq!(nth_prime(6, &c).unwrap(), 13);
        assert_eq!(nth_prime(25, &c).unwrap(), 97);
        assert_eq!(nth_prime(9679, &c).unwrap(), 101_081);
        assert_eq!(nth_prime(250_000, &c).unwrap(), 3_497_861);
    }

    #[test]
    fn shard_counts_do_not_change_output() {
        let reference = PrimeTable::sieved(2_000_000, &cfg(1)).unwrap();
        for shards in [2, 3, 4, 16] {
            let t = PrimeTable::sieved(2_000_000, &cfg(shards)).unwrap();
            assert_eq!(t, reference, "{shards} shards");
        }
        assert_eq!(pi(2_000_000, &cfg(5)).unwrap(), reference.len() as u64);
    }

    #[test]
    fn table_lookup_contract() {
        let t = PrimeTable::sieved(1000, &cfg(1)).unwrap();
        assert_eq!(t.base_index(), 1);
        assert_eq!(t.nth(1).unwrap(), 2);
        assert_eq!(t.nth(168).unwrap(), 997);
        assert!(t.nth(169).is_err());
        assert!(t.nth(0).is_err());
        assert_eq!(t.count_leq(1000).unwrap(), 168);
        assert!(t.count_leq(1001).is_err());
        t.verify().unwrap();
    }

    #[test]
    fn partial_table_counts_from_offset() {
        let t = PrimeTable::from_parts(5, vec![11, 13, 17, 19], 20).unwrap();
        assert_eq!(t.nth(5).unwrap(), 11);
        assert_eq!(t.nth(8).unwrap(), 19);
        assert_eq!(t.count_leq(19).unwrap(), 8);
        assert!(t.count_leq(7).is_err());
    }

    #[test]
    fn range_errors() {
        let c = cfg(1);
        assert!(matches!(
            primes_in_range(10, 5, &c),
            Err(Error::EmptyRange { .. })
        ));
        assert!(matches!(
            primes_in_range(0, c.max_limit + 1, &c),
            Err(Error::Capacity(_))
        ));
        assert!(matches!(pi(c.max_limit + 1, &c), Err(Error::Capacity(_))));
        let tiny = SieveConfig {
            max_limit: 1000,
            ..SieveConfig::default()
        };
        assert!(matches!(nth_prime(10_000, &tiny), Err(Error::Capacity(_))));
        let bad = SieveConfig {
            segment_bytes: 16,
            ..SieveConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn miller_rabin_reference() {
        assert!(is_prime(2));
        assert!(is_prime(3));
        assert!(!is_prime(1));
        assert!(!is_prime(0));
        assert!(is_prime(101_081));
        assert!(is_prime(3_497_861));
        assert!(is_prime(39_708_229_123));
        assert!(!is_prime(561)); // Carmichael
        assert!(!is_prime(46_856_248_255_981)); // Carmichael
        assert!(is_prime(18_446_744_073_709_551_557)); // largest u64 prime
        assert!(!is_prime(18_446_744_073_709_551_615));
        for n in 2..2000u64 {
            assert_eq!(is_prime(n), trial_division_primes(n, n).len() == 1, "{n}");
        }
    }

    #[test]
    fn cache_roundtrip_and_header_layout() {
        let t = PrimeTable::sieved(10_000, &cfg(1)).unwrap();
        let mut buf = Vec::new();
        t.save(&mut buf).unwrap();
        assert_eq!(&buf[0..4], b"HLCP");
        assert_eq!(u32::from_le_bytes(buf[4..8].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(buf[8..16].try_into().unwrap()), 1);
        assert_eq!(
            u64::from_le_bytes(buf[16..24].try_into().unwrap()),
            t.len() as u64
        );
        let back = PrimeTable::load(&buf[..], Some(10_000)).unwrap();
        assert_eq!(back, t);
        // Without a limit hint the table clamps to its last prime.
        let clamped = PrimeTable::load(&buf[..], None).unwrap();
        assert_eq!(clamped.limit(), *t.primes().last().unwrap());
        // Corrupt magic
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(PrimeTable::load(&bad[..], None).is_err());
    }

    #[test]
    fn streaming_blocks_cover_range_in_order() {
        let mut seen = Vec::new();
        for_each_prime_block(0, 100_000, &cfg(1), |block| {
            seen.extend_from_slice(block);
            ControlFlow::Continue(())
        })
        .unwrap();
        assert_eq!(seen, primes_in_range(0, 100_000, &cfg(1)).unwrap());
    }

    #[test]
    fn isqrt_is_exact() {
        for n in [0u64, 1, 2, 3, 4, 15, 16, 17, 288, 289, 290, u32::MAX as u64] {
            let r = isqrt(n);
            assert!(r * r <= n && (r + 1) * (r + 1) > n, "n={n}");
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let n: u64 = rng.gen_range(0..1 << 62);
            let r = isqrt(n);
            assert!(r * r <= n && (r + 1).saturating_mul(r + 1) > n);
        }
    }
}
