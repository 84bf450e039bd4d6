//! Exact-rational backward induction for uniform costs.
//!
//! `C(i, j)` is the expected cost-to-go of the optimal online policy with `i`
//! steps remaining, the next `j` of them already covered. With uniform costs
//! each entry is an integral over [0,1] of the pointwise minimum of at most
//! `i` lines `r*x + C(i-1, r-1)` (hire the current applicant for `r` steps)
//! and, when waiting is allowed, the constant `C(i-1, j-1)`; the integrand's
//! lower envelope has exact rational breakpoints, so every entry is rational.
//!
//! Every entry is rounded *down* onto the dyadic grid with denominator
//! `2^denominator_bits`: each envelope segment carries a floored cumulative
//! integral, so no intermediate rational ever grows beyond a few machine
//! words and each entry is read off with two binary searches. Rounding down
//! preserves the direction of the final inequality: `C(n,0)/(H_{n+1}-1)`
//! stays a valid lower bound on the strict competitive ratio of every online
//! policy, while the total downward drift is below `n^2 * 2^-bits`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

pub type Rational = BigRational;

fn ratio(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// The computed table. With `full` storage every row is kept (what the
/// table-driven policy needs); otherwise only the first column survives,
/// which is all the lower-bound curve requires.
pub struct DpTable {
    n: u64,
    denominator_bits: u32,
    /// C(i, 0) for i = 1..=n.
    first_column: Vec<Rational>,
    /// All rows (row i has entries j = 0..=i) when built with full storage.
    rows: Option<Vec<Vec<Rational>>>,
}

impl DpTable {
    pub fn horizon(&self) -> u64 {
        self.n
    }

    pub fn denominator_bits(&self) -> u32 {
        self.denominator_bits
    }

    pub fn value(&self) -> &Rational {
        &self.first_column[self.n as usize - 1]
    }

    /// C(i, 0) for i = 1..=n.
    pub fn first_column(&self) -> &[Rational] {
        &self.first_column
    }

    pub fn rows(&self) -> Option<&Vec<Vec<Rational>>> {
        self.rows.as_ref()
    }

    /// Rows converted to f64 for the runtime policy.
    pub fn rows_f64(&self) -> Option<Vec<Vec<f64>>> {
        self.rows.as_ref().map(|rows| {
            rows.iter()
                .map(|row| row.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect())
                .collect()
        })
    }
}

pub fn default_denominator_bound() -> u32 {
    64
}

// ---------------------------------------------------------------------------
// Lower envelope of lines over [0, 1]
// ---------------------------------------------------------------------------

/// A segment of the envelope: the line `slope * x + intercept` is the minimum
/// from `from` until the next segment's `from`. `cum` is the integral of the
/// envelope from 0 to `from`, floored onto the dyadic grid `k / 2^bits` — a
/// bounded-size lower bound that lets entries be read off in O(log segments).
struct Segment {
    slope: u64,
    intercept: Rational,
    from: Rational,
    cum: BigInt,
}

impl Segment {
    fn value_at_start(&self) -> Rational {
        &self.from * BigInt::from(self.slope) + &self.intercept
    }
}

/// Incrementally built lower envelope; lines must be inserted in strictly
/// decreasing slope order (each new line is the eventual winner for large x).
struct Envelope {
    segments: Vec<Segment>,
    bits: u32,
}

impl Envelope {
    fn new(bits: u32) -> Self {
        Self { segments: Vec::new(), bits }
    }

    /// `floor(t * 2^bits)`: the dyadic-grid numerator of a lower bound on `t`.
    fn floor_term(&self, t: &Rational) -> BigInt {
        debug_assert!(!t.is_negative());
        (t.numer() << self.bits).div_floor(t.denom())
    }

    fn push(&mut self, slope: u64, intercept: Rational) {
        loop {
            match self.segments.last() {
                None => {
                    self.segments.push(Segment {
                        slope,
                        intercept,
                        from: Rational::zero(),
                        cum: BigInt::zero(),
                    });
                    return;
                }
                Some(top) => {
                    debug_assert!(slope < top.slope, "slopes must strictly decrease");
                    // Value of the new line at the top segment's activation point.
                    let at_from = &top.from * BigInt::from(slope) + &intercept;
                    if at_from <= top.value_at_start() {
                        // The new, flatter line already wins where the top
                        // segment begins; the top segment never surfaces.
                        self.segments.pop();
                        continue;
                    }
                    let cross = (&intercept - &top.intercept)
                        / BigRational::from(BigInt::from(top.slope - slope));
                    let cum = &top.cum
                        + self.floor_term(&integral_line(top.slope, &top.intercept, &top.from, &cross));
                    self.segments.push(Segment { slope, intercept, from: cross, cum });
                    return;
                }
            }
        }
    }

    /// Dyadic lower bound on the integral of the envelope from 0 to `x`
    /// (numerator over `2^bits`), for `x` within [0, 1].
    fn prefix_dyadic(&self, x: &Rational) -> BigInt {
        let idx = self.segments.partition_point(|s| s.from <= *x);
        debug_assert!(idx >= 1, "envelope starts at 0");
        let s = &self.segments[idx - 1];
        &s.cum + self.floor_term(&integral_line(s.slope, &s.intercept, &s.from, x))
    }

    /// Dyadic lower bound on `int_0^1 min(envelope, constant?) dx`. All
    /// slopes are positive, so the envelope is strictly increasing and a
    /// constant cuts it at most once; both the cut and the prefix lookup are
    /// binary searches over the segment stack.
    fn entry_dyadic(&self, constant: Option<&Rational>) -> Rational {
        let one = Rational::one();
        let numer = match constant {
            None => self.prefix_dyadic(&one),
            Some(c) => {
                // First segment whose start value already reaches c.
                let k = self.segments.partition_point(|s| s.value_at_start() < *c);
                if k == 0 {
                    // The constant undercuts the whole envelope.
                    self.floor_term(c)
                } else {
                    let s = &self.segments[k - 1];
                    let cross =
                        (c - &s.intercept) / BigRational::from(BigInt::from(s.slope));
                    if cross >= one {
                        self.prefix_dyadic(&one)
                    } else {
                        self.prefix_dyadic(&cross) + self.floor_term(&(c * (&one - &cross)))
                    }
                }
            }
        };
        Rational::new(numer, BigInt::one() << self.bits)
    }

    /// Exact integral over [0,1] of min(envelope, optional constant). All
    /// slopes are positive, so the envelope is strictly increasing and a
    /// constant cuts it at most once.
    fn integral_unit(&self, constant: Option<&Rational>) -> Rational {
        let one = Rational::one();
        let mut total = Rational::zero();
        for (idx, seg) in self.segments.iter().enumerate() {
            let a = if seg.from < Rational::zero() { Rational::zero() } else { seg.from.clone() };
            if a >= one {
                break;
            }
            let mut b = match self.segments.get(idx + 1) {
                Some(next) if next.from < one => next.from.clone(),
                _ => one.clone(),
            };
            if b <= a {
                continue;
            }
            if let Some(c) = constant {
                // Where does this segment reach the constant?
                let value_a = &a * BigInt::from(seg.slope) + &seg.intercept;
                if value_a >= *c {
                    // Constant is the minimum from here on.
                    total += c * (&one - &a);
                    return total;
                }
                let cross = (c - &seg.intercept) / BigRational::from(BigInt::from(seg.slope));
                if cross < b {
                    // Line up to the crossing, constant for the rest of [0,1].
                    b = cross;
                    total += integral_line(seg.slope, &seg.intercept, &a, &b);
                    total += c * (&one - &b);
                    return total;
                }
            }
            total += integral_line(seg.slope, &seg.intercept, &a, &b);
        }
        total
    }

}

fn integral_line(slope: u64, intercept: &Rational, a: &Rational, b: &Rational) -> Rational {
    // int_a^b (s x + c) dx = s (b^2 - a^2) / 2 + c (b - a)
    let s = BigRational::from(BigInt::from(slope));
    let half = ratio(1, 2);
    &s * (b * b - a * a) * half + intercept * (b - a)
}

/// Exact `int_0^1 min(constant?, min_r (slope_r * x + intercept_r)) dx`.
/// Slopes must be strictly increasing positive integers.
pub fn lower_envelope_integral(
    lines: &[(u64, Rational)],
    constant: Option<&Rational>,
) -> Result<Rational> {
    if lines.is_empty() {
        return match constant {
            Some(c) => Ok(c.clone()),
            None => Err(Error::InvalidInput("need at least one line or a constant".into())),
        };
    }
    for w in lines.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(Error::InvalidInput(format!(
                "slopes must be strictly increasing, got {} then {}",
                w[0].0, w[1].0
            )));
        }
    }
    if lines[0].0 == 0 {
        return Err(Error::InvalidInput("line slopes must be positive".into()));
    }
    let mut env = Envelope::new(64);
    for (slope, intercept) in lines.iter().rev() {
        env.push(*slope, intercept.clone());
    }
    Ok(env.integral_unit(constant))
}

// ---------------------------------------------------------------------------
// Downward rounding: best lower rational approximation, bounded denominator
// ---------------------------------------------------------------------------

/// Largest rational <= x whose denominator is at most `dmax`, found by walking
/// the continued-fraction convergents (equivalently the Stern-Brocot tree) and
/// taking the best semiconvergent that still fits the bound.
pub fn best_lower_approx(x: &Rational, dmax: &BigInt) -> Rational {
    debug_assert!(!x.is_negative());
    debug_assert!(*dmax >= BigInt::one());
    if x.denom() <= dmax {
        return x.clone();
    }
    let mut p = x.numer().clone();
    let mut q = x.denom().clone();
    // Convergent pairs h/k: (h1, k1) most recent, (h0, k0) one before.
    let (mut h0, mut k0) = (BigInt::zero(), BigInt::one());
    let (mut h1, mut k1) = (BigInt::one(), BigInt::zero());
    loop {
        let a = &p / &q;
        let h2 = &a * &h1 + &h0;
        let k2 = &a * &k1 + &k0;
        if k2 > *dmax {
            // The next convergent overshoots the bound; the best candidates
            // are the last in-bound convergent and the deepest in-bound
            // semiconvergent toward the overshooting one. They approximate x
            // from opposite sides; pick the larger one that is still <= x.
            let t = (dmax - &k0) / &k1;
            let semi = BigRational::new(&h0 + &t * &h1, &k0 + &t * &k1);
            let conv = BigRational::new(h1, k1);
            return if conv <= *x {
                if semi <= *x && semi > conv {
                    semi
                } else {
                    conv
                }
            } else {
                debug_assert!(semi <= *x);
                semi
            };
        }
        let r = &p - &a * &q;
        (h0, k0, h1, k1) = (h1, k1, h2, k2);
        if r.is_zero() {
            // Exhausted the expansion without exceeding dmax; x itself fits
            // (handled above), so this cannot happen for reduced inputs.
            return x.clone();
        }
        (p, q) = (q, r);
    }
}

// ---------------------------------------------------------------------------
// Table computation
// ---------------------------------------------------------------------------

/// Compute the full backward induction up to horizon `n`, rounding every
/// entry down to denominators of at most `2^denominator_bits`.
pub fn compute_table(n: u64, denominator_bits: u32, full: bool) -> Result<DpTable> {
    compute_table_with_limit(n, denominator_bits, full, None)
}

/// As [`compute_table`], refusing to start if the estimated table storage
/// exceeds `memory_limit_bytes`.
pub fn compute_table_with_limit(
    n: u64,
    denominator_bits: u32,
    full: bool,
    memory_limit_bytes: Option<u64>,
) -> Result<DpTable> {
    if n < 1 {
        return Err(Error::Domain("horizon must be at least 1".into()));
    }
    if let Some(limit) = memory_limit_bytes {
        // Each entry stores two integers of at most denominator_bits bits
        // plus allocator overhead.
        let per_entry = 2 * (denominator_bits as u64 / 8 + 1) + 48;
        let entries = if full { n * (n + 3) / 2 } else { 2 * (n + 1) };
        let estimate = entries.saturating_mul(per_entry);
        if estimate > limit {
            return Err(Error::ResourceLimit(format!(
                "table for n={n} needs ~{estimate} bytes, limit is {limit}"
            )));
        }
    }

    let mut rows: Vec<Vec<Rational>> = Vec::new();
    let mut prev: Vec<Rational> = vec![Rational::zero()]; // row 0: C(0,0) = 0
    let mut first_column = Vec::with_capacity(n as usize);
    if full {
        rows.push(prev.clone());
    }

    for i in 1..=n as usize {
        let mut row: Vec<Rational> = vec![Rational::zero(); i + 1];
        // One envelope reused across the row: entry j uses hire options
        // r = j+1..=i, so walking j from i-1 down to 0 adds exactly one line
        // (slope j+1) per entry, in the decreasing-slope order the envelope
        // builder wants.
        let mut env = Envelope::new(denominator_bits);
        for j in (0..i).rev() {
            let r = j + 1;
            env.push(r as u64, prev[r - 1].clone());
            let constant = if j >= 1 { Some(&prev[j - 1]) } else { None };
            row[j] = env.entry_dyadic(constant);
        }
        first_column.push(row[0].clone());
        prev = row;
        if full {
            rows.push(prev.clone());
        }
    }

    Ok(DpTable {
        n,
        denominator_bits,
        first_column,
        rows: if full { Some(rows) } else { None },
    })
}

/// `C(n,0) / (H_{n+1} - 1)` with the harmonic number evaluated exactly: a
/// certified lower bound on the strict competitive ratio of any online policy.
pub fn lower_bound_ratio(table: &DpTable) -> f64 {
    ratio_at(table, table.n)
}

/// The same bound read off at an intermediate horizon `i <= n`.
pub fn ratio_at(table: &DpTable, i: u64) -> f64 {
    assert!(i >= 1 && i <= table.n);
    let opt = crate::analysis::harmonic_exact(i + 1) - Rational::one();
    (&table.first_column[i as usize - 1] / opt).to_f64().unwrap()
}

/// Independent small-n oracle: the same backward induction with the cost law
/// discretized to the m-point midpoint grid on [0,1]. Converges to C(n,0)
/// with O(1/m) error.
pub fn grid_oracle(n: u64, m: u64) -> f64 {
    assert!((1..=6).contains(&n), "oracle is for small horizons");
    assert!(m >= 1_000);
    let mut prev: Vec<f64> = vec![0.0];
    for i in 1..=n as usize {
        let mut row = vec![0.0; i + 1];
        for (j, slot) in row.iter_mut().enumerate().take(i) {
            let mut acc = 0.0;
            for l in 0..m {
                let x = (l as f64 + 0.5) / m as f64;
                let mut best = if j >= 1 { prev[j - 1] } else { f64::INFINITY };
                for r in j + 1..=i {
                    best = best.min(r as f64 * x + prev[r - 1]);
                }
                acc += best;
            }
            *slot = acc / m as f64;
        }
        prev = row;
    }
    prev[0]
}
