//! Scanner for Segal's prime-inequality criterion
//! p_k >= p_{k-q} + p_{q+1} - 1, whose universal truth over the right (k, q)
//! ranges is equivalent to the second Hardy-Littlewood conjecture.
//!
//! The scan certifies whole q-blocks at once: p_{k-q} is nonincreasing and
//! p_{q+1} nondecreasing in q, so `p_{k-a} + p_{b+1} - 1 <= p_k` clears all
//! of q in [a, b]. Blocks that fail the coarse bound are bisected down to
//! pointwise tests, so the result is exactly the pointwise scan's.

use std::io::{BufRead, Write};
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sieve::{self, PrimeTable, SieveConfig};

/// Which q-range is scanned for each k.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QRule {
    /// 1 <= q <= (k-1)/2, the original criterion (k >= 3).
    Full,
    /// 34 <= q <= (k-1)/27, valid for k >= 9680.
    Panaitopol,
}

impl QRule {
    /// Inclusive q interval for a given k; empty when lo > hi.
    pub fn q_range(self, k: u64) -> (u64, u64) {
        match self {
            QRule::Full => (1, (k - 1) / 2),
            QRule::Panaitopol => (34, (k - 1) / 27),
        }
    }
}

pub const DEFAULT_CHECKPOINT_EVERY: u64 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanPolicy {
    pub k_from: u64,
    pub k_to: u64,
    pub q_rule: QRule,
    /// k values between checkpoint callbacks.
    pub checkpoint_every: u64,
}

impl ScanPolicy {
    pub fn new(k_from: u64, k_to: u64, q_rule: QRule) -> Result<ScanPolicy> {
        let p = ScanPolicy {
            k_from,
            k_to,
            q_rule,
            checkpoint_every: DEFAULT_CHECKPOINT_EVERY,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_from < 3 {
            return Err(Error::Domain("k_from must be >= 3".into()));
        }
        if self.k_from > self.k_to {
            return Err(Error::Domain(format!(
                "k_from {} > k_to {}",
                self.k_from, self.k_to
            )));
        }
        if self.q_rule == QRule::Panaitopol && self.k_from < 9680 {
            return Err(Error::Domain(
                "the Panaitopol rule applies from k = 9680".into(),
            ));
        }
        if self.checkpoint_every == 0 {
            return Err(Error::Domain("checkpoint_every must be positive".into()));
        }
        Ok(())
    }
}

/// One failing (k, q) pair with the primes that witnessed it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    pub k: u64,
    pub q: u64,
    pub p_k: u64,
    pub p_k_minus_q: u64,
    pub p_q_plus_1: u64,
}

/// Outcome of a scan: coverage cursor plus the complete failure inventory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanReport {
    pub policy: ScanPolicy,
    /// (k, q) pairs covered, whether individually or as certified blocks.
    pub checked: u64,
    pub counterexamples: Vec<Counterexample>,
    /// Last fully verified k.
    pub cursor: u64,
    /// p_cursor; 0 in mid-scan checkpoints that never resolved it.
    pub verified_prime: u64,
}

/// Checkpoint line payload: one JSON object per line in checkpoint files.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckpointRecord {
    pub policy: ScanPolicy,
    pub cursor: u64,
    pub checked: u64,
    pub counterexamples: Vec<Counterexample>,
}

impl ScanReport {
    pub fn checkpoint(&self) -> CheckpointRecord {
        CheckpointRecord {
            policy: self.policy.clone(),
            cursor: self.cursor,
            checked: self.checked,
            counterexamples: self.counterexamples.clone(),
        }
    }
}

impl CheckpointRecord {
    pub fn into_report(self) -> ScanReport {
        ScanReport {
            policy: self.policy,
            checked: self.checked,
            counterexamples: self.counterexamples,
            cursor: self.cursor,
            verified_prime: 0,
        }
    }
}

/// Append one checkpoint line.
pub fn write_checkpoint_line(mut w: impl Write, report: &ScanReport) -> Result<()> {
    let line =
        serde_json::to_string(&report.checkpoint()).map_err(|e| Error::Format(e.to_string()))?;
    writeln!(w, "{line}")?;
    Ok(())
}

/// Read the last checkpoint line, if any; resume is idempotent on the last line.
pub fn read_last_checkpoint(r: impl BufRead) -> Result<Option<ScanReport>> {
    let mut last = None;
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CheckpointRecord =
            serde_json::from_str(&line).map_err(|e| Error::Format(e.to_string()))?;
        last = Some(rec.into_report());
    }
    Ok(last)
}

/// p_k >= p_{k-q} + p_{q+1} - 1 for a single pair.
pub fn segal_inequality(k: u64, q: u64, table: &PrimeTable) -> Result<bool> {
    if k < 3 {
        return Err(Error::Domain("k must be >= 3".into()));
    }
    if q < 1 || q > (k - 1) / 2 {
        return Err(Error::Domain(format!("q={q} outside [1, {}]", (k - 1) / 2)));
    }
    let p_k = table.nth(k)?;
    let p_kq = table.nth(k - q)?;
    let p_q1 = table.nth(q + 1)?;
    Ok(p_k >= p_kq + p_q1 - 1)
}

/// Index-addressable prime source; implementations guarantee the needed
/// coverage before `p` is called.
trait PrimeIndex {
    fn p(&self, k: u64) -> u64;
}

struct TableIndex<'a> {
    primes: &'a [u64],
}

impl PrimeIndex for TableIndex<'_> {
    #[inline]
    fn p(&self, k: u64) -> u64 {
        self.primes[(k - 1) as usize]
    }
}

/// Scan one k; block certification with bisection fallback. Counterexamples
/// are appended in ascending q order.
fn scan_k<P: PrimeIndex>(
    src: &P,
    k: u64,
    rule: QRule,
    stack: &mut Vec<(u64, u64)>,
    checked: &mut u64,
    out: &mut Vec<Counterexample>,
) {
    let (q_lo, q_hi) = rule.q_range(k);
    if q_lo > q_hi {
        return;
    }
    let p_k = src.p(k);
    stack.clear();
    stack.push((q_lo, q_hi));
    while let Some((a, b)) = stack.pop() {
        // Max of p_{k-q} + p_{q+1} over q in [a, b] is at the endpoints.
        if src.p(k - a) + src.p(b + 1) - 1 <= p_k {
            *checked += b - a + 1;
            continue;
        }
        if a == b {
            *checked += 1;
            let (p_kq, p_q1) = (src.p(k - a), src.p(a + 1));
            if p_k < p_kq + p_q1 - 1 {
                out.push(Counterexample {
                    k,
                    q: a,
                    p_k,
                    p_k_minus_q: p_kq,
                    p_q_plus_1: p_q1,
                });
            }
            continue;
        }
        let mid = a + (b - a) / 2;
        stack.push((mid + 1, b));
        stack.push((a, mid));
    }
}

fn check_resume(policy: &ScanPolicy, resume: &ScanReport) -> Result<()> {
    if resume.policy.q_rule != policy.q_rule
        || resume.policy.k_from != policy.k_from
        || resume.policy.k_to != policy.k_to
    {
        return Err(Error::Resume(format!(
            "checkpoint policy {:?} does not match requested {:?}",
            resume.policy, policy
        )));
    }
    if resume.cursor < policy.k_from.saturating_sub(1) || resume.cursor > policy.k_to {
        return Err(Error::Resume(format!(
            "checkpoint cursor {} outside [{}, {}]",
            resume.cursor, policy.k_from, policy.k_to
        )));
    }
    Ok(())
}

/// Scan under `policy` against a full table (base_index 1 covering k_to).
/// `resume`, if given, must carry a matching policy; scanning restarts at
/// `resume.cursor + 1`. The observer runs at every checkpoint boundary.
pub fn scan_with(
    policy: &ScanPolicy,
    table: &PrimeTable,
    resume: Option<&ScanReport>,
    mut observer: impl FnMut(&ScanReport) -> Result<()>,
) -> Result<ScanReport> {
    policy.validate()?;
    if table.base_index() != 1 || table.last_index() < policy.k_to {
        return Err(Error::Capacity(format!(
            "table covers indices up to {}, scan needs {}",
            table.last_index(),
            policy.k_to
        )));
    }
    let mut report = match resume {
        Some(r) => {
            check_resume(policy, r)?;
            let mut r = r.clone();
            r.policy = policy.clone();
            r
        }
        None => ScanReport {
            policy: policy.clone(),
            checked: 0,
            counterexamples: Vec::new(),
            cursor: policy.k_from - 1,
            verified_prime: 0,
        },
    };
    let src = TableIndex {
        primes: table.primes(),
    };
    let mut stack = Vec::with_capacity(128);
    let start = report.cursor.max(policy.k_from - 1) + 1;
    for k in start..=policy.k_to {
        scan_k(
            &src,
            k,
            policy.q_rule,
            &mut stack,
            &mut report.checked,
            &mut report.counterexamples,
        );
        report.cursor = k;
        if (k - policy.k_from + 1) % policy.checkpoint_every == 0 && k != policy.k_to {
            report.verified_prime = src.p(k);
            observer(&report)?;
        }
    }
    report.cursor = policy.k_to;
    report.verified_prime = src.p(policy.k_to);
    observer(&report)?;
    Ok(report)
}

pub fn scan(
    policy: &ScanPolicy,
    table: &PrimeTable,
    resume: Option<&ScanReport>,
) -> Result<ScanReport> {
    scan_with(policy, table, resume, |_| Ok(()))
}

/// Shard by contiguous k-intervals and merge in order; output is identical
/// to the single-shard scan.
pub fn scan_sharded(policy: &ScanPolicy, table: &PrimeTable, shards: usize) -> Result<ScanReport> {
    policy.validate()?;
    let shards = shards.max(1) as u64;
    let span = policy.k_to - policy.k_from + 1;
    if shards <= 1 || span < 2 * shards {
        return scan(policy, table, None);
    }
    let width = span.div_ceil(shards);
    let mut subpolicies = Vec::new();
    let mut a = policy.k_from;
    while a <= policy.k_to {
        let b = policy.k_to.min(a + width - 1);
        subpolicies.push(ScanPolicy {
            k_from: a,
            k_to: b,
            q_rule: policy.q_rule,
            checkpoint_every: policy.checkpoint_every,
        });
        a = b + 1;
    }
    let mut parts: Vec<ScanReport> = Vec::with_capacity(subpolicies.len());
    std::thread::scope(|scope| -> Result<()> {
        let handles: Vec<_> = subpolicies
            .iter()
            .map(|sub| scope.spawn(move || scan(sub, table, None)))
            .collect();
        for h in handles {
            parts.push(h.join().expect("scan worker panicked")?);
        }
        Ok(())
    })?;
    let mut iter = parts.into_iter();
    let mut acc = iter.next().expect("at least one shard");
    for next in iter {
        acc = merge(acc, &next)?;
    }
    // Sub-policies carry shard-local k ranges; restore the caller's policy.
    acc.policy = policy.clone();
    Ok(acc)
}

/// Merge reports over adjacent ranges: checked sums, counterexamples
/// concatenate, the cursor advances. Associative.
pub fn merge(a: ScanReport, b: &ScanReport) -> Result<ScanReport> {
    if a.policy.q_rule != b.policy.q_rule {
        return Err(Error::Resume(
            "merging reports with different q rules".into(),
        ));
    }
    if b.policy.k_from != a.cursor + 1 {
        return Err(Error::Resume(format!(
            "reports not adjacent: cursor {} then k_from {}",
            a.cursor, b.policy.k_from
        )));
    }
    let mut merged = a;
    merged.policy.k_to = b.policy.k_to;
    merged.checked += b.checked;
    merged.counterexamples.extend_from_slice(&b.counterexamples);
    merged.cursor = b.cursor;
    merged.verified_prime = b.verified_prime;
    Ok(merged)
}

/// Bound M such that the conjecture holds for all m, n >= 2 with m+n <= M,
/// given a clean report. A Panaitopol-rule report relies on the reduction
/// that assumes the full rule holds below k = 9680, so that range is always
/// re-scanned here (it is sub-second).
pub fn verified_hlc_bound(report: &ScanReport, table: &PrimeTable) -> Result<u64> {
    if !report.counterexamples.is_empty() {
        let smallest = report
            .counterexamples
            .iter()
            .map(|c| c.p_k)
            .min()
            .expect("nonempty");
        return Err(Error::Refuted {
            smallest_pk: smallest,
            count: report.counterexamples.len(),
        });
    }
    match report.policy.q_rule {
        QRule::Full => {
            if report.policy.k_from > 3 {
                return Err(Error::Coverage(format!(
                    "full-rule report starts at k={}, needs 3",
                    report.policy.k_from
                )));
            }
        }
        QRule::Panaitopol => {
            if report.policy.k_from != 9680 {
                return Err(Error::Coverage(format!(
                    "Panaitopol-rule report starts at k={}, needs 9680",
                    report.policy.k_from
                )));
            }
            let full = ScanPolicy::new(3, 9679, QRule::Full)?;
            let base = scan(&full, table, None)?;
            if let Some(c) = base.counterexamples.first() {
                return Err(Error::Refuted {
                    smallest_pk: c.p_k,
                    count: base.counterexamples.len(),
                });
            }
        }
    }
    if report.cursor < report.policy.k_from {
        return Err(Error::Coverage("report covers no k".into()));
    }
    // Prefer the table's value; fall back to the report for streamed scans
    // whose cursor lies beyond stored primes.
    if report.cursor <= table.last_index() && table.base_index() == 1 {
        let p = table.nth(report.cursor)?;
        if report.verified_prime != 0 && report.verified_prime != p {
            return Err(Error::Format(format!(
                "report verified_prime {} disagrees with table p_{} = {p}",
                report.verified_prime, report.cursor
            )));
        }
        Ok(p)
    } else if report.verified_prime != 0 {
        Ok(report.verified_prime)
    } else {
        Err(Error::Coverage(
            "report lacks verified_prime and table does not cover cursor".into(),
        ))
    }
}

/// Ring-buffered source for streamed scans: a prefix of small-index primes
/// plus a sliding window ending at the newest prime.
struct StreamIndex {
    prefix: Vec<u64>,
    ring: Vec<u64>,
    mask: u64,
    newest: u64, // global index of the newest prime pushed
}

impl StreamIndex {
    fn new(prefix_cap: usize, window: u64) -> StreamIndex {
        let cap = (window + 2).next_power_of_two() as usize;
        StreamIndex {
            prefix: Vec::with_capacity(prefix_cap),
            ring: vec![0; cap],
            mask: cap as u64 - 1,
            newest: 0,
        }
    }

    fn push(&mut self, p: u64) {
        self.newest += 1;
        let slot = (self.newest & self.mask) as usize;
        self.ring[slot] = p;
        if self.prefix.len() < self.prefix.capacity() {
            self.prefix.push(p);
        }
    }
}

impl PrimeIndex for StreamIndex {
    #[inline]
    fn p(&self, k: u64) -> u64 {
        if k <= self.prefix.len() as u64 {
            self.prefix[(k - 1) as usize]
        } else {
            debug_assert!(k <= self.newest && self.newest - k <= self.mask);
            self.ring[(k & self.mask) as usize]
        }
    }
}

fn nth_prime_upper_for_scan(k: u64) -> u64 {
    const SMALL: [u64; 6] = [0, 2, 3, 5, 7, 11];
    if k < 6 {
        return SMALL[k as usize];
    }
    let kf = k as f64;
    (kf * (kf.ln() + kf.ln().ln())).ceil() as u64 + 16
}

/// Streamed scan in bounded memory: primes are sieved on the fly and only a
/// prefix plus a sliding window are retained. Suited to the Panaitopol rule,
/// where the window is k/27 wide; the full rule effectively needs the whole
/// table and is capped by `memory_cap_bytes`.
pub fn scan_streaming_with(
    policy: &ScanPolicy,
    cfg: &SieveConfig,
    memory_cap_bytes: u64,
    resume: Option<&ScanReport>,
    mut observer: impl FnMut(&ScanReport) -> Result<()>,
) -> Result<ScanReport> {
    policy.validate()?;
    let (prefix_need, window_need) = match policy.q_rule {
        QRule::Full => ((policy.k_to + 1) / 2 + 1, policy.k_to),
        QRule::Panaitopol => {
            let qmax = (policy.k_to - 1) / 27;
            (qmax + 2, qmax + 2)
        }
    };
    let ring_cap = (window_need + 2).next_power_of_two();
    let bytes_needed = 8 * (prefix_need + ring_cap);
    if bytes_needed > memory_cap_bytes {
        return Err(Error::Capacity(format!(
            "streamed scan needs ~{bytes_needed} bytes of prime window, cap is {memory_cap_bytes}"
        )));
    }
    let mut report = match resume {
        Some(r) => {
            check_resume(policy, r)?;
            let mut r = r.clone();
            r.policy = policy.clone();
            r
        }
        None => ScanReport {
            policy: policy.clone(),
            checked: 0,
            counterexamples: Vec::new(),
            cursor: policy.k_from - 1,
            verified_prime: 0,
        },
    };
    let start = report.cursor.max(policy.k_from - 1) + 1;
    let hi_est = nth_prime_upper_for_scan(policy.k_to);
    let scan_cfg = SieveConfig {
        max_limit: cfg.max_limit.max(hi_est),
        ..cfg.clone()
    };
    let mut src = StreamIndex::new(prefix_need as usize, window_need);
    let mut stack = Vec::with_capacity(128);
    let mut observer_err: Option<Error> = None;
    sieve::for_each_prime_block(2, hi_est, &scan_cfg, |block| {
        for &p in block {
            src.push(p);
            let k = src.newest;
            if k >= start && k <= policy.k_to {
                scan_k(
                    &src,
                    k,
                    policy.q_rule,
                    &mut stack,
                    &mut report.checked,
                    &mut report.counterexamples,
                );
                report.cursor = k;
                report.verified_prime = p;
                if (k - policy.k_from + 1) % policy.checkpoint_every == 0 && k != policy.k_to {
                    if let Err(e) = observer(&report) {
                        observer_err = Some(e);
                        return ControlFlow::Break(());
                    }
                }
            }
            if k == policy.k_to {
                return ControlFlow::Break(());
            }
        }
        ControlFlow::Continue(())
    })?;
    if let Some(e) = observer_err {
        return Err(e);
    }
    if report.cursor < policy.k_to {
        return Err(Error::Capacity(format!(
            "prime stream ended at k={} before k_to={}",
            report.cursor, policy.k_to
        )));
    }
    observer(&report)?;
    Ok(report)
}

pub fn scan_streaming(
    policy: &ScanPolicy,
    cfg: &SieveConfig,
    memory_cap_bytes: u64,
) -> Result<ScanReport> {
    scan_streaming_with(policy, cfg, memory_cap_bytes, None, |_| Ok(()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sieve::PrimeTable;
    use rand::{Rng, SeedableRng};

    fn table_to(limit_index: u64) -> PrimeTable {
        let bound = nth_prime_upper_for_scan(limit_index).max(100);
        PrimeTable::sieved(bound, &SieveConfig::default()).unwrap()
    }

    /// Pointwise oracle: the scan result must match this exactly.
    fn naive_scan(policy: &ScanPolicy, table: &PrimeTable) -> (u64, Vec<Counterexample>) {
        let mut checked = 0;
        let mut ces = Vec::new();
        for k in policy.k_from..=policy.k_to {
            let (lo, hi) = policy.q_rule.q_range(k);
            if lo > hi {
                continue;
            }
            for q in lo..=hi {
                checked += 1;
                let p_k = table.nth(k).unwrap();
                let p_kq = table.nth(k - q).unwrap();
                let p_q1 = table.nth(q + 1).unwrap();
                if p_k < p_kq + p_q1 - 1 {
                    ces.push(Counterexample {
                        k,
                        q,
                        p_k,
                        p_k_minus_q: p_kq,
                        p_q_plus_1: p_q1,
                    });
                }
            }
        }
        (checked, ces)
    }

    #[test]
    fn inequality_examples() {
        let t = table_to(100);
        assert!(segal_inequality(3, 1, &t).unwrap()); // 5 >= 3 + 3 - 1
        assert!(segal_inequality(5, 2, &t).unwrap()); // 11 >= 5 + 5 - 1
        assert!(matches!(segal_inequality(5, 3, &t), Err(Error::Domain(_))));
        assert!(matches!(segal_inequality(5, 0, &t), Err(Error::Domain(_))));
        assert!(matches!(segal_inequality(2, 1, &t), Err(Error::Domain(_))));
    }

    #[test]
    fn single_pair_scan() {
        let t = table_to(10);
        let policy = ScanPolicy::new(3, 3, QRule::Full).unwrap();
        let r = scan(&policy, &t, None).unwrap();
        assert_eq!(r.checked, 1);
        assert!(r.counterexamples.is_empty());
        assert_eq!(r.cursor, 3);
        assert_eq!(r.verified_prime, 5);
    }

    #[test]
    fn blocked_scan_matches_naive_oracle() {
        let t = table_to(13_000);
        for policy in [
            ScanPolicy::new(3, 2000, QRule::Full).unwrap(),
            ScanPolicy::new(9680, 12_000, QRule::Panaitopol).unwrap(),
        ] {
            let r = scan(&policy, &t, None).unwrap();
            let (checked, ces) = naive_scan(&policy, &t);
            assert_eq!(r.checked, checked, "{policy:?}");
            assert_eq!(r.counterexamples, ces, "{policy:?}");
        }
    }

    #[test]
    fn full_scan_to_9679_is_clean() {
        let t = table_to(9679);
        let policy = ScanPolicy::new(3, 9679, QRule::Full).unwrap();
        let r = scan(&policy, &t, None).unwrap();
        assert!(r.counterexamples.is_empty());
        let expected: u64 = (3..=9679u64).map(|k| (k - 1) / 2).sum();
        assert_eq!(r.checked, expected);
        assert_eq!(verified_hlc_bound(&r, &t).unwrap(), 101_081);
    }

    #[test]
    fn policy_validation() {
        assert!(ScanPolicy::new(2, 10, QRule::Full).is_err());
        assert!(ScanPolicy::new(10, 3, QRule::Full).is_err());
        assert!(ScanPolicy::new(9000, 10_000, QRule::Panaitopol).is_err());
        assert!(ScanPolicy::new(9680, 10_000, QRule::Panaitopol).is_ok());
    }

    #[test]
    fn capacity_error_when_table_too_small() {
        let t = table_to(100);
        let policy = ScanPolicy::new(3, 10_000_000, QRule::Full).unwrap();
        assert!(matches!(scan(&policy, &t, None), Err(Error::Capacity(_))));
    }

    #[test]
    fn shard_counts_do_not_change_reports() {
        let t = table_to(100_000);
        let policy = ScanPolicy::new(3, 100_000, QRule::Full).unwrap();
        let reference = scan(&policy, &t, None).unwrap();
        for shards in [1, 4, 16] {
            let sharded = scan_sharded(&policy, &t, shards).unwrap();
            assert_eq!(sharded, reference, "{shards} shards");
        }
    }

    #[test]
    fn merge_is_associative_over_random_splits() {
        let t = table_to(100_000);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..8 {
            let a = rng.gen_range(3..99_000u64);
            let b = rng.gen_range(a..99_500u64);
            let c = rng.gen_range(b + 1..100_000u64);
            let whole = scan(&ScanPolicy::new(a, c, QRule::Full).unwrap(), &t, None).unwrap();
            let left = scan(&ScanPolicy::new(a, b, QRule::Full).unwrap(), &t, None).unwrap();
            let right = scan(&ScanPolicy::new(b + 1, c, QRule::Full).unwrap(), &t, None).unwrap();
            let merged = merge(left, &right).unwrap();
            assert_eq!(merged, whole, "split {a}..{b}..{c}");
        }
    }

    #[test]
    fn resume_reproduces_uninterrupted_scan() {
        let t = table_to(9679);
        let mut policy = ScanPolicy::new(3, 9679, QRule::Full).unwrap();
        policy.checkpoint_every = 1000;
        let whole = scan(&policy, &t, None).unwrap();

        // Capture checkpoints, pretend the scan died after the third one.
        let mut lines = Vec::new();
        scan_with(&policy, &t, None, |r| {
            if lines.len() < 3 {
                write_checkpoint_line(&mut lines, r)?;
            }
            Ok(())
        })
        .unwrap();
        let resumed_from = read_last_checkpoint(&lines[..]).unwrap().unwrap();
        assert!(resumed_from.cursor < policy.k_to);
        let resumed = scan(&policy, &t, Some(&resumed_from)).unwrap();
        assert_eq!(resumed, whole);

        // Mismatched policy must be rejected.
        let other = ScanPolicy::new(3, 5000, QRule::Full).unwrap();
        assert!(matches!(
            scan(&other, &t, Some(&resumed_from)),
            Err(Error::Resume(_))
        ));
    }

    #[test]
    fn streaming_scan_matches_table_scan() {
        let t = table_to(30_000);
        let cfg = SieveConfig::default();
        for policy in [
            ScanPolicy::new(3, 5000, QRule::Full).unwrap(),
            ScanPolicy::new(9680, 30_000, QRule::Panaitopol).unwrap(),
        ] {
            let table_report = scan(&policy, &t, None).unwrap();
            let stream_report = scan_streaming(&policy, &cfg, 1 << 30).unwrap();
            assert_eq!(stream_report, table_report, "{policy:?}");
        }
    }

    #[test]
    fn streaming_scan_respects_memory_cap() {
        let cfg = SieveConfig::default();
        let policy = ScanPolicy::new(3, 10_000_000, QRule::Full).unwrap();
        assert!(matches!(
            scan_streaming(&policy, &cfg, 1 << 20),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn doctored_table_yields_counterexamples_and_refutation() {
        // Lower p_5 from 11 to 8: (k=5, q=2) gives 8 < 5 + 5 - 1.
        let t = PrimeTable::from_parts(1, vec![2, 3, 5, 7, 8, 13, 17, 19, 23, 29], 30).unwrap();
        let policy = ScanPolicy::new(3, 5, QRule::Full).unwrap();
        let r = scan(&policy, &t, None).unwrap();
        assert!(!r.counterexamples.is_empty());
        for c in &r.counterexamples {
            assert!(c.p_k < c.p_k_minus_q + c.p_q_plus_1 - 1);
        }
        // Ascending (k, q) order makes the first entry the smallest failing p_k.
        let ks: Vec<_> = r.counterexamples.iter().map(|c| (c.k, c.q)).collect();
        let mut sorted = ks.clone();
        sorted.sort_unstable();
        assert_eq!(ks, sorted);
        match verified_hlc_bound(&r, &t) {
            Err(Error::Refuted { smallest_pk, count }) => {
                assert_eq!(smallest_pk, 8);
                assert_eq!(count, r.counterexamples.len());
            }
            other => panic!("expected refutation, got {other:?}"),
        }
    }

    #[test]
    fn hlc_bound_requires_coverage() {
        let t = table_to(9679);
        let partial = scan(&ScanPolicy::new(5, 100, QRule::Full).unwrap(), &t, None).unwrap();
        assert!(matches!(
            verified_hlc_bound(&partial, &t),
            Err(Error::Coverage(_))
        ));
    }

    #[test]
    fn checkpoint_lines_roundtrip() {
        let t = table_to(50);
        let policy = ScanPolicy::new(3, 50, QRule::Full).unwrap();
        let r = scan(&policy, &t, None).unwrap();
        let mut buf = Vec::new();
        write_checkpoint_line(&mut buf, &r).unwrap();
        write_checkpoint_line(&mut buf, &r).unwrap();
        let line = std::str::from_utf8(&buf).unwrap().lines().next().unwrap();
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v.get("policy").is_some());
        assert!(v.get("cursor").is_some());
        assert!(v.get("checked").is_some());
        assert!(v.get("counterexamples").is_some());
        let back = read_last_checkpoint(&buf[..]).unwrap().unwrap();
        assert_eq!(back.cursor, r.cursor);
        assert_eq!(back.checked, r.checked);
    }
}
