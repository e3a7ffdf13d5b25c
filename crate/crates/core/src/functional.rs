//! Real functionals of finite paths used as test statistics, with exact
//! rational evaluation on lattice paths.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_rational::Ratio;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::path::{FinitePath, LatticePath};

/// Fractions at which [`FunctionalSpec::TripletComponent`] reads the path
/// when none are given.
pub const DEFAULT_TRIPLET_TIMES: (f64, f64) = (0.25, 0.75);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FunctionalSpec {
    /// `w(f·ζ)` for a fraction `f ∈ [0, 1]`.
    EvalAt(f64),
    Sup,
    /// `∫_0^ζ w(t) dt` of the interpolated path.
    Area,
    /// The lifetime `ζ`.
    Duration,
    /// Component `index ∈ {1, 2, 3}` of `(w(u) − m, w(v) − m, m)` where
    /// `u, v` are the given fractions of `ζ` and `m` is the minimum
    /// between them.
    TripletComponent { index: u8, u: f64, v: f64 },
}

impl FunctionalSpec {
    pub fn triplet(index: u8) -> Result<Self> {
        let (u, v) = DEFAULT_TRIPLET_TIMES;
        Self::triplet_at(index, u, v)
    }

    pub fn triplet_at(index: u8, u: f64, v: f64) -> Result<Self> {
        if !(1..=3).contains(&index) {
            return Err(Error::Input(format!("triplet components are 1, 2 or 3, got {index}")));
        }
        check_fraction(u)?;
        check_fraction(v)?;
        Ok(FunctionalSpec::TripletComponent { index, u, v })
    }

    pub fn eval_at(fraction: f64) -> Result<Self> {
        check_fraction(fraction)?;
        Ok(FunctionalSpec::EvalAt(fraction))
    }

    pub fn eval(&self, w: &FinitePath) -> f64 {
        let z = w.lifetime();
        match *self {
            FunctionalSpec::EvalAt(f) => w.eval(f * z).expect("fraction within [0, 1]"),
            FunctionalSpec::Sup => w.sup(),
            FunctionalSpec::Area => w.area(),
            FunctionalSpec::Duration => z,
            FunctionalSpec::TripletComponent { index, u, v } => {
                let (a, b) = (u * z, v * z);
                let wa = w.eval(a).expect("fraction within [0, 1]");
                let wb = w.eval(b).expect("fraction within [0, 1]");
                let m = w.range_min(a.min(b), a.max(b)).expect("ordered interval");
                match index {
                    1 => wa - m,
                    2 => wb - m,
                    _ => m,
                }
            }
        }
    }

    /// Exact value on a lattice path with unit time step.
    pub fn eval_exact(&self, p: &LatticePath) -> Result<Ratio<i128>> {
        let h = p.heights();
        let z = Ratio::from_integer((h.len() - 1) as i128);
        Ok(match *self {
            FunctionalSpec::EvalAt(f) => interpolate(h, dyadic_ratio(f)? * z),
            FunctionalSpec::Sup => Ratio::from_integer(*h.iter().max().expect("nonempty") as i128),
            FunctionalSpec::Area => {
                let twice: i128 = h.windows(2).map(|w| (w[0] + w[1]) as i128).sum();
                Ratio::new(twice, 2)
            }
            FunctionalSpec::Duration => z,
            FunctionalSpec::TripletComponent { index, u, v } => {
                let (a, b) = (dyadic_ratio(u)? * z, dyadic_ratio(v)? * z);
                let wa = interpolate(h, a);
                let wb = interpolate(h, b);
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                let mut m = wa.min(wb);
                let first = lo.ceil().to_integer() as usize;
                let last = hi.floor().to_integer() as usize;
                for &x in h.iter().take(last + 1).skip(first) {
                    m = m.min(Ratio::from_integer(x as i128));
                }
                match index {
                    1 => wa - m,
                    2 => wb - m,
                    _ => m,
                }
            }
        })
    }

    pub fn name(&self) -> String {
        format!("{self}")
    }
}

fn check_fraction(f: f64) -> Result<()> {
    if (0.0..=1.0).contains(&f) {
        Ok(())
    } else {
        Err(Error::Input(format!("time fraction must lie in [0, 1], got {f}")))
    }
}

fn interpolate(h: &[i64], t: Ratio<i128>) -> Ratio<i128> {
    let i = t.floor().to_integer() as usize;
    let frac = t - t.floor();
    let left = Ratio::from_integer(h[i] as i128);
    if frac.is_zero() {
        return left;
    }
    let right = Ratio::from_integer(h[i + 1] as i128);
    left + (right - left) * frac
}

/// The exact rational value of a finite `f64`, when its denominator fits.
pub fn dyadic_ratio(x: f64) -> Result<Ratio<i128>> {
    if !x.is_finite() {
        return Err(Error::Input(format!("{x} has no rational value")));
    }
    if x == 0.0 {
        return Ok(Ratio::zero());
    }
    let bits = x.to_bits();
    let sign: i128 = if bits >> 63 == 1 { -1 } else { 1 };
    let exponent = ((bits >> 52) & 0x7ff) as i32;
    let fraction = bits & ((1u64 << 52) - 1);
    let (mantissa, exp) = if exponent == 0 { (fraction, -1074) } else { (fraction | (1u64 << 52), exponent - 1075) };
    let (mantissa, exp) = {
        let shift = mantissa.trailing_zeros().min(52) as i32;
        ((mantissa >> shift) as i128, exp + shift)
    };
    if exp >= 0 {
        if exp > 60 {
            return Err(Error::Resource(format!("{x} is too large for exact evaluation")));
        }
        Ok(Ratio::from_integer(sign * (mantissa << exp)))
    } else {
        if -exp > 120 {
            return Err(Error::Resource(format!("{x} needs too fine a denominator for exact evaluation")));
        }
        Ok(Ratio::new(sign * mantissa, 1i128 << (-exp)))
    }
}

/// `{eval_at 1/4, 1/2, 3/4; sup; area; duration}`.
pub fn default_battery() -> Vec<FunctionalSpec> {
    alloc::vec![
        FunctionalSpec::EvalAt(0.25),
        FunctionalSpec::EvalAt(0.5),
        FunctionalSpec::EvalAt(0.75),
        FunctionalSpec::Sup,
        FunctionalSpec::Area,
        FunctionalSpec::Duration,
    ]
}

impl fmt::Display for FunctionalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FunctionalSpec::EvalAt(x) => write!(f, "eval_at({x})"),
            FunctionalSpec::Sup => f.write_str("sup"),
            FunctionalSpec::Area => f.write_str("area"),
            FunctionalSpec::Duration => f.write_str("duration"),
            FunctionalSpec::TripletComponent { index, u, v } => {
                if (u, v) == DEFAULT_TRIPLET_TIMES {
                    write!(f, "triplet({index})")
                } else {
                    write!(f, "triplet({index},{u},{v})")
                }
            }
        }
    }
}

impl FromStr for FunctionalSpec {
    type Err = Error;

    /// Parses the forms written by `Display`, e.g. `eval_at(0.5)`, `sup`,
    /// `triplet(2)` or `triplet(1,0.1,0.6)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "sup" => return Ok(FunctionalSpec::Sup),
            "area" => return Ok(FunctionalSpec::Area),
            "duration" => return Ok(FunctionalSpec::Duration),
            _ => {}
        }
        let bad = || Error::Input(format!("unknown functional `{s}`"));
        let (head, rest) = s.split_once('(').ok_or_else(bad)?;
        let args = rest.strip_suffix(')').ok_or_else(bad)?;
        let nums: Vec<f64> = args
            .split(',')
            .map(|a| a.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        match (head.trim(), nums.as_slice()) {
            ("eval_at", [x]) => Self::eval_at(*x),
            ("triplet", [i]) if libm::trunc(*i) == *i => Self::triplet(*i as u8),
            ("triplet", [i, u, v]) if libm::trunc(*i) == *i => Self::triplet_at(*i as u8, *u, *v),
            _ => Err(bad()),
        }
    }
}
