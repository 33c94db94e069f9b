//! Explicit estimates of the prime counting function and their empirical
//! audits against the exact sieve.
//!
//! Every bound value is defined by its double-double evaluation. Audits over
//! tens of millions of points first evaluate in f64 with a conservative
//! error margin and fall back to the double-double path only when the f64
//! comparison is too close to call, so the fast path can never flip a
//! verdict.

use std::io::Write;

use serde::Serialize;

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::sieve::PrimeTable;

// ---------------------------------------------------------------- li(x)

/// li via the exponential-integral series Ei(t) = gamma + ln t + sum t^k/(k k!)
/// at t = ln x. Convergent for every x > 1; the production route below the
/// asymptotic switchover.
pub fn li_ei_series_dd(x: Dd) -> Dd {
    let t = x.ln();
    let mut sum = Dd::EULER + t.abs().ln();
    let mut term = Dd::ONE;
    let mut k = 0u64;
    loop {
        k += 1;
        term = term * t / Dd::from_u64(k);
        let contrib = term / Dd::from_u64(k);
        sum = sum + contrib;
        if contrib.abs().hi() < 1e-36 * sum.abs().hi().max(1e-300) || k > 400 {
            break;
        }
    }
    sum
}

/// li via Ramanujan's alternating series
/// gamma + ln t + sqrt(x) * sum_{n>=1} (-1)^(n-1) t^n / (n! 2^(n-1)) * h(n),
/// h(n) = sum_{k=0..floor((n-1)/2)} 1/(2k+1). An independent convergent
/// route used to cross-check the series evaluation.
pub fn li_ramanujan_dd(x: Dd) -> Dd {
    let t = x.ln();
    let sqrt_x = x.sqrt();
    let mut u = t; // t^n / (n! 2^(n-1))
    let mut h = Dd::ONE;
    let mut sum = u * h;
    let mut n = 1u64;
    loop {
        n += 1;
        u = u * t / Dd::from_u64(2 * n);
        if n % 2 == 1 {
            h = h + Dd::ONE / Dd::from_u64(n);
        }
        let contrib = u * h;
        if n % 2 == 0 {
            sum = sum - contrib;
        } else {
            sum = sum + contrib;
        }
        if contrib.abs().hi() < 1e-36 * sum.abs().hi().max(1e-300) || n > 600 {
            break;
        }
    }
    Dd::EULER + t.abs().ln() + sqrt_x * sum
}

/// li via the divergent asymptotic expansion (x/t) sum j!/t^j truncated at
/// its smallest term. Only meaningful for large t; at the ln x = 40
/// switchover the truncation floor is ~7e-17 relative.
pub fn li_asymptotic_dd(x: Dd) -> Dd {
    let t = x.ln();
    let mut term = Dd::ONE;
    let mut sum = Dd::ONE;
    let mut j = 0u64;
    loop {
        j += 1;
        let next = term * Dd::from_u64(j) / t;
        if next.abs() >= term.abs() || j > 200 {
            break;
        }
        term = next;
        sum = sum + term;
        if (term / sum).abs().hi() < 1e-36 {
            break;
        }
    }
    x / t * sum
}

/// Switchover between the convergent series and the asymptotic expansion.
pub const LI_ASYMPTOTIC_CUTOVER_LN: f64 = 40.0;

/// Principal-value logarithmic integral, double-double route.
pub fn li_dd(x: Dd) -> Result<Dd> {
    if !(x > Dd::ONE) {
        return Err(Error::Domain(format!(
            "li requires x > 1 (got {})",
            x.to_f64()
        )));
    }
    if x.ln().to_f64() < LI_ASYMPTOTIC_CUTOVER_LN {
        Ok(li_ei_series_dd(x))
    } else {
        Ok(li_asymptotic_dd(x))
    }
}

/// Principal-value logarithmic integral.
pub fn li(x: f64) -> Result<f64> {
    Ok(li_dd(Dd::from(x))?.to_f64())
}

/// Fast f64 evaluation together with a conservative absolute error margin.
fn li_f64_with_margin(x: f64) -> (f64, f64) {
    let t = x.ln();
    if t >= 34.0 {
        let v = li_dd(Dd::from(x)).expect("x > 1").to_f64();
        return (v, v.abs() * 1e-13);
    }
    let mut sum = 0.577_215_664_901_532_9 + t.abs().ln();
    let mut term = 1.0f64;
    let mut k = 0u64;
    loop {
        k += 1;
        term = term * t / k as f64;
        let contrib = term / k as f64;
        sum += contrib;
        if contrib.abs() < 1e-17 * sum.abs().max(1e-300) || k > 200 {
            break;
        }
    }
    (sum, sum.abs() * 1e-11 + 1e-12)
}

// ---------------------------------------------------------------- f_c family

/// f_c(t) = t / (ln t - 1 - c/ln t), double-double route.
pub fn f_c_dd(t: Dd, c: Dd) -> Result<Dd> {
    if !(t > Dd::ONE) {
        return Err(Error::Domain(format!(
            "f_c requires t > 1, got {}",
            t.to_f64()
        )));
    }
    let l = t.ln();
    let den = l - Dd::ONE - c / l;
    if !(den > Dd::ZERO) {
        return Err(Error::Singularity(format!(
            "f_c denominator {} <= 0 at t={}, c={}",
            den.to_f64(),
            t.to_f64(),
            c.to_f64()
        )));
    }
    Ok(t / den)
}

/// f_c(t) = t / (ln t - 1 - c/ln t).
pub fn f_c(t: f64, c: f64) -> Result<f64> {
    Ok(f_c_dd(Dd::from(t), Dd::from(c))?.to_f64())
}

// ---------------------------------------------------------------- BoundSpec

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Lower,
    Upper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Conditional {
    None,
    Rh,
}

/// Shape of an estimate of pi(x).
#[derive(Clone, Debug)]
pub enum BoundForm {
    /// x / (ln x - 1 - sum a_j/ln^j x - eps/ln^k x), k = coeffs.len().
    RationalLog { coeffs: Vec<Dd>, epsilon: Dd },
    /// li(x) + band * sqrt(x)/ln x (band 0 is plain li).
    LiBand { band: f64 },
    /// Two-sided |pi(x) - li(x)| <= (sqrt(x)/(8 pi)) ln(x/ln x).
    RhBand,
}

/// A named explicit estimate of pi(x) with its validity window.
#[derive(Clone, Debug)]
pub struct BoundSpec {
    pub id: String,
    pub direction: Direction,
    pub form: BoundForm,
    pub valid_from: f64,
    pub valid_to: Option<f64>,
    pub conditional: Conditional,
    pub provenance: String,
}

impl BoundSpec {
    /// Construct a rational-log spec, checking that all coefficients are
    /// nonnegative (so the denominator is increasing in x) and that the
    /// denominator is positive at `valid_from`, which then implies
    /// positivity on the whole validity range.
    pub fn rational_log(
        id: &str,
        direction: Direction,
        coeffs: Vec<Dd>,
        epsilon: Dd,
        valid_from: f64,
        valid_to: Option<f64>,
        provenance: &str,
    ) -> Result<BoundSpec> {
        if valid_from < 2.0 {
            return Err(Error::Domain(format!("{id}: valid_from must be >= 2")));
        }
        if coeffs.iter().any(|c| *c < Dd::ZERO) || epsilon < Dd::ZERO {
            return Err(Error::Domain(format!(
                "{id}: negative coefficients break denominator monotonicity"
            )));
        }
        let spec = BoundSpec {
            id: id.into(),
            direction,
            form: BoundForm::RationalLog { coeffs, epsilon },
            valid_from,
            valid_to,
            conditional: Conditional::None,
            provenance: provenance.into(),
        };
        // Positive at valid_from -> positive for every x >= valid_from.
        spec.eval_dd(Dd::from(valid_from))?;
        Ok(spec)
    }

    /// Defining double-double evaluation of the bound value at x. For the
    /// two-sided RH band this is the upper envelope li(x) + band(x).
    pub fn eval_dd(&self, x: Dd) -> Result<Dd> {
        match &self.form {
            BoundForm::RationalLog { coeffs, epsilon } => {
                rational_log_dd(x, coeffs, *epsilon, &self.id)
            }
            BoundForm::LiBand { band } => {
                let v = li_dd(x)?;
                if *band == 0.0 {
                    Ok(v)
                } else {
                    Ok(v + Dd::from(*band) * x.sqrt() / x.ln())
                }
            }
            BoundForm::RhBand => Ok(li_dd(x)? + rh_band_dd(x)),
        }
    }
}

fn rational_log_dd(x: Dd, coeffs: &[Dd], epsilon: Dd, id: &str) -> Result<Dd> {
    if !(x > Dd::ONE) {
        return Err(Error::Domain(format!("{id}: x must be > 1")));
    }
    let l = x.ln();
    let mut den = l - Dd::ONE;
    let mut lp = Dd::ONE;
    for c in coeffs {
        lp = lp * l;
        den = den - *c / lp;
    }
    if epsilon > Dd::ZERO {
        if coeffs.is_empty() {
            lp = lp * l;
        }
        den = den - epsilon / lp;
    }
    if !(den > Dd::ZERO) {
        return Err(Error::Singularity(format!(
            "{id}: denominator {} <= 0 at x = {}",
            den.to_f64(),
            x.to_f64()
        )));
    }
    Ok(x / den)
}

fn rational_log_f64_with_margin(x: f64, coeffs: &[Dd], epsilon: Dd) -> Option<(f64, f64)> {
    let l = x.ln();
    let mut den = l - 1.0;
    let mut lp = 1.0;
    for c in coeffs {
        lp *= l;
        den -= c.to_f64() / lp;
    }
    let e = epsilon.to_f64();
    if e > 0.0 {
        den -= e / lp.max(l);
    }
    if den <= 1e-9 {
        return None; // near-singular; let the dd path decide
    }
    let v = x / den;
    Some((v, v * 1e-10))
}

/// Evaluate a RATIONAL_LOG spec at x, enforcing its validity window.
pub fn pana_bound(x: f64, spec: &BoundSpec) -> Result<f64> {
    if !matches!(spec.form, BoundForm::RationalLog { .. }) {
        return Err(Error::Domain(format!(
            "{} is not a rational-log bound",
            spec.id
        )));
    }
    check_validity(spec, x)?;
    Ok(spec.eval_dd(Dd::from(x))?.to_f64())
}

fn check_validity(spec: &BoundSpec, x: f64) -> Result<()> {
    if x < spec.valid_from {
        return Err(Error::Validity {
            id: spec.id.clone(),
            x,
            valid_from: spec.valid_from,
        });
    }
    if let Some(cap) = spec.valid_to {
        if x > cap {
            return Err(Error::Validity {
                id: spec.id.clone(),
                x,
                valid_from: cap,
            });
        }
    }
    Ok(())
}

/// li(x) - 2 sqrt(x)/ln x, valid from 1 090 877.
pub fn li_lower_band(x: f64) -> Result<f64> {
    if x < 1_090_877.0 {
        return Err(Error::Validity {
            id: "li_lower_band".into(),
            x,
            valid_from: 1_090_877.0,
        });
    }
    let xd = Dd::from(x);
    Ok((li_dd(xd)? - Dd::from(2.0) * xd.sqrt() / xd.ln()).to_f64())
}

fn rh_band_dd(x: Dd) -> Dd {
    let l = x.ln();
    x.sqrt() / (Dd::PI * 8.0) * (x / l).ln()
}

/// The conditional band width (sqrt(x)/(8 pi)) ln(x/ln x), valid from 5639.
pub fn rh_band(x: f64) -> Result<f64> {
    if x < 5639.0 {
        return Err(Error::Validity {
            id: "rh_band".into(),
            x,
            valid_from: 5639.0,
        });
    }
    Ok(rh_band_dd(Dd::from(x)).to_f64())
}

// ---------------------------------------------------------------- gamma_k

pub const GAMMA_SEARCH_CAP: u64 = 1 << 40;

/// Smallest integer gamma >= 2 such that
/// ln 2 >= eps/ln^k x + sum a_j/ln^j x for all x >= gamma. The right side is
/// decreasing in x, so the condition at gamma settles the whole tail.
pub fn gamma_k(coeffs: &[f64], epsilon: f64) -> Result<u64> {
    gamma_k_capped(coeffs, epsilon, GAMMA_SEARCH_CAP)
}

pub fn gamma_k_capped(coeffs: &[f64], epsilon: f64, cap: u64) -> Result<u64> {
    if coeffs.iter().any(|&c| c < 0.0) || epsilon < 0.0 {
        return Err(Error::Domain(
            "gamma_k needs nonnegative coefficients".into(),
        ));
    }
    let coeffs: Vec<Dd> = coeffs.iter().map(|&c| Dd::from(c)).collect();
    let eps = Dd::from(epsilon);
    let holds = |x: u64| -> bool {
        let l = Dd::from_u64(x).ln();
        let mut rhs = Dd::ZERO;
        let mut lp = Dd::ONE;
        for c in &coeffs {
            lp = lp * l;
            rhs = rhs + *c / lp;
        }
        if coeffs.is_empty() {
            // k = 0: eps/ln^0 x is the constant eps
            rhs = rhs + eps;
        } else {
            rhs = rhs + eps / lp;
        }
        Dd::LN2 >= rhs
    };
    if holds(2) {
        return Ok(2);
    }
    // Exponential search for the first satisfied point, then bisect.
    let mut hi = 4u64;
    while !holds(hi) {
        if hi >= cap {
            return Err(Error::SearchCap {
                what: format!("gamma_k(eps={epsilon})"),
                cap,
            });
        }
        hi = (hi * 2).min(cap);
    }
    let mut lo = hi / 2; // holds(lo) is false here
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

// ---------------------------------------------------------------- registry

/// Epsilon of the two-term upper bound (23 significant digits).
pub const PANA2_EPSILON: &str = "0.70863503301170907614119";
/// Validity threshold B of the f_1.15 upper bound.
pub const F115_VALID_FROM: f64 = 38_284_442_297.0;
/// Validity threshold alpha_2 of the two-term lower bound.
pub const PANA2_ALPHA: f64 = 38_099_531.0;
/// Validity threshold beta_2 of the two-term upper bound.
pub const PANA2_BETA: f64 = 14_000_264_036_190_262.0;

/// The built-in named bounds.
pub fn registry() -> Vec<BoundSpec> {
    registry_with_three_term_threshold(F115_VALID_FROM)
}

/// The three-term upper bound's validity threshold is quoted from an
/// external corollary without a restated number, so it is configurable; the
/// default reuses B.
pub fn registry_with_three_term_threshold(three_term_from: f64) -> Vec<BoundSpec> {
    let d = |s: &str| Dd::parse(s).expect("registry literal");
    vec![
        BoundSpec::rational_log(
            "dusart_lower",
            Direction::Lower,
            vec![],
            Dd::ZERO,
            5393.0,
            None,
            "Dusart: pi(t) >= t/(ln t - 1) for t >= 5393",
        )
        .expect("registry"),
        BoundSpec::rational_log(
            "axler_f1_lower",
            Direction::Lower,
            vec![Dd::ONE],
            Dd::ZERO,
            468_049.0,
            None,
            "Axler: pi(t) >= f_1(t) for t >= 468049",
        )
        .expect("registry"),
        BoundSpec::rational_log(
            "axler_f115_upper",
            Direction::Upper,
            vec![d("1.15")],
            Dd::ZERO,
            F115_VALID_FROM,
            None,
            "Axler: pi(t) <= f_1.15(t) for t >= 38284442297",
        )
        .expect("registry"),
        BoundSpec::rational_log(
            "axler_3term_upper",
            Direction::Upper,
            vec![Dd::ONE, d("3.15"), d("14.25")],
            Dd::ZERO,
            three_term_from,
            None,
            "Axler: three-term upper bound (validity threshold configurable)",
        )
        .expect("registry"),
        BoundSpec::rational_log(
            "pana2_lower",
            Direction::Lower,
            vec![Dd::ONE, d("2.85")],
            Dd::ZERO,
            PANA2_ALPHA,
            None,
            "Axler: two-term lower bound from alpha_2 = 38099531",
        )
        .expect("registry"),
        BoundSpec::rational_log(
            "pana2_upper",
            Direction::Upper,
            vec![Dd::ONE, d("2.85")],
            d(PANA2_EPSILON),
            PANA2_BETA,
            None,
            "Axler: two-term upper bound from beta_2 = 14000264036190262",
        )
        .expect("registry"),
        BoundSpec {
            id: "li_upper".into(),
            direction: Direction::Upper,
            form: BoundForm::LiBand { band: 0.0 },
            valid_from: 2.0,
            valid_to: Some(1e20),
            conditional: Conditional::None,
            provenance: "Dusart: pi(x) <= li(x) for 2 <= x <= 1e20".into(),
        },
        BoundSpec {
            id: "li_lower_band".into(),
            direction: Direction::Lower,
            form: BoundForm::LiBand { band: -2.0 },
            valid_from: 1_090_877.0,
            valid_to: Some(1e20),
            conditional: Conditional::None,
            provenance: "Dusart: li(x) - 2 sqrt(x)/ln x <= pi(x) for 1090877 <= x <= 1e20".into(),
        },
        BoundSpec {
            id: "rh_band".into(),
            direction: Direction::Upper,
            form: BoundForm::RhBand,
            valid_from: 5639.0,
            valid_to: None,
            conditional: Conditional::Rh,
            provenance:
                "Dusart: |pi(x) - li(x)| <= (sqrt(x)/(8 pi)) ln(x/ln x) under RH, x >= 5639".into(),
        },
    ]
}

pub fn registry_spec(id: &str) -> Option<BoundSpec> {
    registry().into_iter().find(|s| s.id == id)
}

// ---------------------------------------------------------------- audit

/// One audit failure; `bound_x` is the double-double-refined value of the
/// violated side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub x: u64,
    pub pi_x: u64,
    pub bound_x: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditResult {
    pub spec_id: String,
    pub lo: u64,
    pub hi: u64,
    pub points_checked: u64,
    pub violations: Vec<Violation>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Upper, // bound must be >= pi
    Lower, // bound must be <= pi
}

fn rh_band_f64(x: f64) -> f64 {
    let l = x.ln();
    x.sqrt() / (8.0 * std::f64::consts::PI) * (x / l).ln()
}

/// Decide one point. Returns the violated side's refined value when violated.
fn check_point(spec: &BoundSpec, x: u64, pi_x: u64, side: Side) -> Option<f64> {
    let xf = x as f64;
    let pif = pi_x as f64;
    let fast = match (&spec.form, side) {
        (BoundForm::RationalLog { coeffs, epsilon }, _) => {
            rational_log_f64_with_margin(xf, coeffs, *epsilon)
        }
        (BoundForm::LiBand { band }, _) => {
            let (v, m) = li_f64_with_margin(xf);
            let b = band * xf.sqrt() / xf.ln();
            Some((v + b, m + b.abs() * 1e-12))
        }
        (BoundForm::RhBand, Side::Upper) => {
            let (v, m) = li_f64_with_margin(xf);
            let band = rh_band_f64(xf);
            Some((v + band, m + band * 1e-12))
        }
        (BoundForm::RhBand, Side::Lower) => {
            let (v, m) = li_f64_with_margin(xf);
            let band = rh_band_f64(xf);
            Some((v - band, m + band * 1e-12))
        }
    };
    if let Some((v, margin)) = fast {
        match side {
            Side::Upper if v - margin >= pif => return None,
            Side::Lower if v + margin <= pif => return None,
            _ => {}
        }
    }
    // Close call (or near-singular f64 path): the double-double value decides.
    let xd = Dd::from_u64(x);
    let vd = match (&spec.form, side) {
        (BoundForm::RhBand, Side::Lower) => {
            li_dd(xd).expect("x >= valid_from > 1") - rh_band_dd(xd)
        }
        _ => spec.eval_dd(xd).expect("validity pre-checked"),
    };
    let pid = Dd::from_u64(pi_x);
    let violated = match side {
        Side::Upper => vd < pid,
        Side::Lower => vd > pid,
    };
    violated.then(|| vd.to_f64())
}

/// Audit a bound over [lo, hi]. LOWER bounds are checked at each prime-gap
/// end x = p_{i+1} - 1 (pi smallest against a rising bound), UPPER bounds at
/// x = p_i (pi largest); the two-sided RH band checks both. Checking these
/// per-gap extremal integers is equivalent to checking every integer in the
/// range.
pub fn audit(spec: &BoundSpec, lo: u64, hi: u64, table: &PrimeTable) -> Result<AuditResult> {
    audit_sharded(spec, lo, hi, table, 1)
}

pub fn audit_sharded(
    spec: &BoundSpec,
    lo: u64,
    hi: u64,
    table: &PrimeTable,
    shards: usize,
) -> Result<AuditResult> {
    audit_inner(spec, lo, hi, table, shards, None)
}

/// Audit while streaming one CSV row per audited point:
/// spec_id, x, pi_x, bound_x, direction, violated.
pub fn audit_csv(
    spec: &BoundSpec,
    lo: u64,
    hi: u64,
    table: &PrimeTable,
    mut w: impl Write,
) -> Result<AuditResult> {
    writeln!(w, "spec_id,x,pi_x,bound_x,direction,violated")?;
    audit_inner(spec, lo, hi, table, 1, Some(&mut w))
}

type PointRow = (u64, u64, Side, Option<f64>);

fn audit_inner(
    spec: &BoundSpec,
    lo: u64,
    hi: u64,
    table: &PrimeTable,
    shards: usize,
    mut csv: Option<&mut dyn Write>,
) -> Result<AuditResult> {
    if hi < lo {
        return Err(Error::EmptyRange { lo, hi });
    }
    if hi > table.limit() {
        return Err(Error::Capacity(format!(
            "audit range end {hi} beyond sieved limit {}",
            table.limit()
        )));
    }
    if (lo as f64) < spec.valid_from {
        return Err(Error::Validity {
            id: spec.id.clone(),
            x: lo as f64,
            valid_from: spec.valid_from,
        });
    }
    if let Some(cap) = spec.valid_to {
        if hi as f64 > cap {
            return Err(Error::Validity {
                id: spec.id.clone(),
                x: hi as f64,
                valid_from: cap,
            });
        }
    }
    if table.base_index() != 1 {
        return Err(Error::Domain(
            "audit needs a full table (base_index 1)".into(),
        ));
    }

    let count_before = if lo <= 2 { 0 } else { table.count_leq(lo - 1)? };
    let primes = table.primes();
    let start = count_before as usize; // slice index of first prime >= lo
    let mut end = start;
    while end < primes.len() && primes[end] <= hi {
        end += 1;
    }

    let mut result = AuditResult {
        spec_id: spec.id.clone(),
        lo,
        hi,
        points_checked: 0,
        violations: Vec::new(),
    };

    // Leading gap [lo, first_prime - 1]: pi is constant; the lower-direction
    // worst case sits at its right end.
    let has_lower = matches!(spec.direction, Direction::Lower) || matches!(spec.form, BoundForm::RhBand);
    if has_lower {
        let gap_end = if start < end { primes[start] - 1 } else { hi };
        if gap_end >= lo {
            result.points_checked += 1;
            let v = check_point(spec, gap_end, count_before, Side::Lower);
            if let Some(w) = csv.as_deref_mut() {
                emit_csv_row(w, spec, gap_end, count_before, Side::Lower, v)?;
            }
            if let Some(bound_x) = v {
                result.violations.push(Violation {
                    x: gap_end,
                    pi_x: count_before,
                    bound_x,
                });
            }
        }
    }

    if start >= end {
        return Ok(result);
    }

    // Points attached to prime indices [start, end), audited in index-sharded
    // chunks and merged in order.
    let want_rows = csv.is_some();
    let shards = shards.max(1).min(end - start);
    let chunk = (end - start).div_ceil(shards);
    let mut shard_out: Vec<(u64, Vec<Violation>, Vec<PointRow>)> = Vec::with_capacity(shards);
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..shards)
            .map(|s| {
                let a = start + s * chunk;
                let b = end.min(a + chunk);
                scope.spawn(move || {
                    let mut points = 0u64;
                    let mut rows: Vec<PointRow> = Vec::new();
                    let mut violations = Vec::new();
                    let mut handle = |x: u64, pi_x: u64, side: Side| {
                        points += 1;
                        let v = check_point(spec, x, pi_x, side);
                        if want_rows {
                            rows.push((x, pi_x, side, v));
                        }
                        if let Some(bound_x) = v {
                            violations.push(Violation { x, pi_x, bound_x });
                        }
                    };
                    for idx in a..b {
                        let p = primes[idx];
                        let pi_p = idx as u64 + 1;
                        let gap_end = if idx + 1 < primes.len() {
                            hi.min(primes[idx + 1] - 1)
                        } else {
                            hi
                        };
                        match (spec.direction, &spec.form) {
                            (_, BoundForm::RhBand) => {
                                handle(p, pi_p, Side::Upper);
                                if gap_end >= p {
                                    handle(gap_end, pi_p, Side::Lower);
                                }
                            }
                            (Direction::Upper, _) => handle(p, pi_p, Side::Upper),
                            (Direction::Lower, _) => {
                                if gap_end >= p {
                                    handle(gap_end, pi_p, Side::Lower);
                                }
                            }
                        }
                    }
                    (points, violations, rows)
                })
            })
            .collect();
        for h in handles {
            shard_out.push(h.join().expect("audit worker panicked"));
        }
    });
    for (points, violations, rows) in shard_out {
        result.points_checked += points;
        result.violations.extend(violations);
        if let Some(w) = csv.as_deref_mut() {
            for (x, pi_x, side, v) in rows {
                emit_csv_row(w, spec, x, pi_x, side, v)?;
            }
        }
    }
    Ok(result)
}

fn emit_csv_row(
    w: &mut dyn Write,
    spec: &BoundSpec,
    x: u64,
    pi_x: u64,
    side: Side,
    v: Option<f64>,
) -> Result<()> {
    let bound_x = match v {
        Some(b) => b,
        None => match (&spec.form, side) {
            (BoundForm::RhBand, Side::Lower) => {
                let xd = Dd::from_u64(x);
                (li_dd(xd)? - rh_band_dd(xd)).to_f64()
            }
            _ => spec.eval_dd(Dd::from_u64(x))?.to_f64(),
        },
    };
    let dir = match side {
        Side::Upper => "upper",
        Side::Lower => "lower",
    };
    writeln!(
        w,
        "{},{},{},{:.6},{},{}",
        spec.id,
        x,
        pi_x,
        bound_x,
        dir,
        v.is_some()
    )?;
    Ok(())
}
