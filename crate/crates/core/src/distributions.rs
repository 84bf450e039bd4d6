//! Cost-law abstraction: the continuous nonnegative distributions used by the
//! simulations and the analytic bounds, with closed-form CDFs, quantiles,
//! conditional expectations over bands, and the survival-power integrals
//! `int_0^inf (1 - F(x))^m dx` that make up the offline optimum.

use serde::Deserialize;

use crate::rng::RngStream;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub enum Kind {
    Uniform01,
    Exponential { rate: f64 },
    Pareto { shape: f64, scale: f64 },
    /// Piecewise-empirical law over a sorted sample; quantiles follow the
    /// left-continuous inverse (smallest x with F(x) >= q).
    Empirical { values: Vec<f64> },
}

#[derive(Clone, Debug)]
pub struct Distribution {
    kind: Kind,
    /// Relative tolerance used when a quantile has to be inverted numerically.
    inversion_tol: f64,
}

impl Distribution {
    pub fn uniform01() -> Self {
        Self::from_kind(Kind::Uniform01)
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::Domain(format!("exponential rate must be positive, got {rate}")));
        }
        Ok(Self::from_kind(Kind::Exponential { rate }))
    }

    /// Shape must exceed 1: the analysis operations all require a finite mean.
    pub fn pareto(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 1.0 && shape.is_finite()) {
            return Err(Error::Domain(format!("pareto shape must exceed 1, got {shape}")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Domain(format!("pareto scale must be positive, got {scale}")));
        }
        Ok(Self::from_kind(Kind::Pareto { shape, scale }))
    }

    pub fn empirical(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("empirical law needs at least one sample".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Domain("empirical samples must be finite and nonnegative".into()));
        }
        values.sort_by(|a, b| a.total_cmp(b));
        Ok(Self::from_kind(Kind::Empirical { values }))
    }

    fn from_kind(kind: Kind) -> Self {
        Self { kind, inversion_tol: 1e-12 }
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    pub fn inversion_tol(&self) -> f64 {
        self.inversion_tol
    }

    /// Short stable name for CSV output.
    pub fn label(&self) -> String {
        match &self.kind {
            Kind::Uniform01 => "uniform01".into(),
            Kind::Exponential { rate } => format!("exponential({rate})"),
            Kind::Pareto { shape, scale } => format!("pareto({shape},{scale})"),
            Kind::Empirical { values } => format!("empirical[{}]", values.len()),
        }
    }

    /// Parse a `{"kind": "...", "params": {...}}` description.
    pub fn from_config(value: &serde_json::Value) -> Result<Self> {
        let cfg: DistConfig = serde_json::from_value(value.clone())
            .map_err(|e| Error::InvalidInput(format!("distribution config: {e}")))?;
        match cfg.kind.as_str() {
            "uniform01" => Ok(Self::uniform01()),
            "exponential" => {
                let p: ExpParams = parse_params(cfg.params)?;
                Self::exponential(p.rate)
            }
            "pareto" => {
                let p: ParetoParams = parse_params(cfg.params)?;
                Self::pareto(p.shape, p.scale)
            }
            "empirical" => {
                let p: EmpiricalParams = parse_params(cfg.params)?;
                Self::empirical(p.values)
            }
            other => Err(Error::InvalidInput(format!("unknown distribution kind {other:?}"))),
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        let u = rng.uniform();
        match &self.kind {
            Kind::Uniform01 => u,
            Kind::Exponential { rate } => -(-u).ln_1p() / rate,
            Kind::Pareto { shape, scale } => scale * (1.0 - u).powf(-1.0 / shape),
            Kind::Empirical { values } => values[(u * values.len() as f64) as usize],
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Uniform01 => x.min(1.0),
            Kind::Exponential { rate } => -(-rate * x).exp_m1(),
            Kind::Pareto { shape, scale } => {
                if x < *scale {
                    0.0
                } else {
                    1.0 - (scale / x).powf(*shape)
                }
            }
            Kind::Empirical { values } => {
                values.partition_point(|v| *v <= x) as f64 / values.len() as f64
            }
        }
    }

    /// Smallest x with F(x) >= q. For q = 1 on unbounded support this is the
    /// distinguished value `+inf`, which makes an "accept everything" initial
    /// threshold come out of the quantile machinery with no special casing.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::Domain(format!("quantile needs q in (0, 1], got {q}")));
        }
        Ok(match &self.kind {
            Kind::Uniform01 => q,
            Kind::Exponential { rate } => {
                if q == 1.0 {
                    f64::INFINITY
                } else {
                    -(-q).ln_1p() / rate
                }
            }
            Kind::Pareto { shape, scale } => {
                if q == 1.0 {
                    f64::INFINITY
                } else {
                    scale * (1.0 - q).powf(-1.0 / shape)
                }
            }
            Kind::Empirical { values } => {
                let n = values.len();
                let idx = ((q * n as f64).ceil() as usize).max(1) - 1;
                values[idx.min(n - 1)]
            }
        })
    }

    pub fn mean(&self) -> f64 {
        match &self.kind {
            Kind::Uniform01 => 0.5,
            Kind::Exponential { rate } => 1.0 / rate,
            Kind::Pareto { shape, scale } => shape * scale / (shape - 1.0),
            Kind::Empirical { values } => values.iter().sum::<f64>() / values.len() as f64,
        }
    }

    /// Partial mean `E[x * 1{x <= hi}]`. Unlike the conditional expectation this
    /// is well defined (zero) when no mass lies below `hi`, which keeps the
    /// sequential-cost recursion free of zero-mass corner cases.
    pub fn partial_mean_below(&self, hi: f64) -> f64 {
        if hi <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Uniform01 => {
                let b = hi.min(1.0);
                b * b / 2.0
            }
            Kind::Exponential { rate } => {
                if hi.is_infinite() {
                    1.0 / rate
                } else {
                    1.0 / rate - (hi + 1.0 / rate) * (-rate * hi).exp()
                }
            }
            Kind::Pareto { shape, scale } => {
                if hi <= *scale {
                    0.0
                } else if hi.is_infinite() {
                    self.mean()
                } else {
                    shape * scale.powf(*shape) / (shape - 1.0)
                        * (scale.powf(1.0 - shape) - hi.powf(1.0 - shape))
                }
            }
            Kind::Empirical { values } => {
                let cut = values.partition_point(|v| *v <= hi);
                values[..cut].iter().sum::<f64>() / values.len() as f64
            }
        }
    }

    /// `E[x | lo < x <= hi]`.
    pub fn conditional_expectation(&self, lo: f64, hi: f64) -> Result<f64> {
        if !(lo < hi) {
            return Err(Error::Domain(format!("conditional expectation needs lo < hi, got ({lo}, {hi})")));
        }
        let mass = self.cdf_extended(hi) - self.cdf_extended(lo);
        if mass <= 1e-300 {
            return Err(Error::ZeroMassInterval { lo, hi });
        }
        let numer = self.partial_mean_below(hi) - self.partial_mean_below(lo);
        Ok(numer / mass)
    }

    fn cdf_extended(&self, x: f64) -> f64 {
        if x.is_infinite() && x > 0.0 {
            1.0
        } else {
            self.cdf(x)
        }
    }

    /// `int_0^inf (1 - F(x))^m dx`: the expected minimum of m draws.
    pub fn survival_power_integral(&self, m: u64) -> Result<f64> {
        if m == 0 {
            return Err(Error::Domain("survival power needs m >= 1".into()));
        }
        let m_f = m as f64;
        Ok(match &self.kind {
            Kind::Uniform01 => 1.0 / (m_f + 1.0),
            Kind::Exponential { rate } => 1.0 / (m_f * rate),
            Kind::Pareto { shape, scale } => {
                // int = scale + scale^(a m) * int_scale^inf x^(-a m) dx; finite
                // because shape > 1 forces a*m > 1.
                let am = shape * m_f;
                scale * am / (am - 1.0)
            }
            Kind::Empirical { values } => {
                let n = values.len() as f64;
                let mut total = 0.0;
                let mut prev = 0.0;
                for (i, v) in values.iter().enumerate() {
                    let survival = (n - i as f64) / n;
                    total += (v - prev) * survival.powi(m as i32);
                    prev = *v;
                }
                total
            }
        })
    }
}

/// Adaptive Simpson quadrature; used as an independent cross-check of the
/// closed forms above rather than as a runtime fallback.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), fm)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let (left, flm) = simpson(f, a, fa, m, fm);
        let (right, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol || (b - a) < 1e-14 {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(Error::Divergence(format!("adaptive quadrature depth exhausted on [{a}, {b}]")));
        }
        Ok(recurse(f, a, fa, m, fm, left, flm, tol / 2.0, depth - 1)?
            + recurse(f, m, fm, b, fb, right, frm, tol / 2.0, depth - 1)?)
    }

    let fa = f(a);
    let fb = f(b);
    let (whole, fm) = simpson(f, a, fa, b, fb);
    let tol = rel_tol * whole.abs().max(1e-12);
    recurse(f, a, fa, b, fb, whole, fm, tol, 48)
}

#[derive(Deserialize)]
struct DistConfig {
    kind: String,
    #[serde(default)]
    params: serde_json::Value,
}

#[derive(Deserialize)]
struct ExpParams {
    rate: f64,
}

#[derive(Deserialize)]
struct ParetoParams {
    shape: f64,
    scale: f64,
}

#[derive(Deserialize)]
struct EmpiricalParams {
    values: Vec<f64>,
}

fn parse_params<T: for<'de> Deserialize<'de>>(v: serde_json::Value) -> Result<T> {
    serde_json::from_value(v).map_err(|e| Error::InvalidInput(format!("distribution params: {e}")))
}
