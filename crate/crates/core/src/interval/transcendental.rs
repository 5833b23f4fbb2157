//! Enclosures of pi, exp, sin, cos and sqrt.
//!
//! Point values are computed in fixed-point interval arithmetic on `BigInt`
//! mantissas at a working scale `2^-q`, with explicit Taylor remainder
//! bounds, then snapped outward to the `2^-(p+2)` grid. The snapped width is
//! below `2^-p` for every point evaluation.

use std::sync::Mutex;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{rat, ratio, EvalError, Precision, RatInterval, Rational};

/// Guard bits above the output grid for the first attempt.
const GUARD_BITS: u32 = 24;
const MAX_ATTEMPTS: u32 = 6;
/// Beyond this magnitude the f64 estimate of the quadrant is unreliable.
const TRIG_ARG_LIMIT: f64 = 1e12;
const EXP_ARG_LIMIT: i64 = 1 << 20;

fn floor_shift(x: &BigInt, q: u32) -> BigInt {
    if !x.is_negative() {
        x >> q as usize
    } else {
        let bias = (BigInt::one() << q as usize) - 1u32;
        -((-x + bias) >> q as usize)
    }
}

fn ceil_shift(x: &BigInt, q: u32) -> BigInt {
    -floor_shift(&-x, q)
}

/// Interval of fixed-point numbers `[lo, hi] * 2^-q`; the scale travels
/// separately.
#[derive(Clone, Debug)]
struct Fx {
    lo: BigInt,
    hi: BigInt,
}

impl Fx {
    fn exact(v: BigInt) -> Self {
        Self { lo: v.clone(), hi: v }
    }

    fn from_rational(x: &Rational, q: u32) -> Self {
        let scaled = x.numer() << q as usize;
        let d = x.denom();
        Self {
            lo: num_integer::Integer::div_floor(&scaled, d),
            hi: -num_integer::Integer::div_floor(&-scaled, d),
        }
    }

    fn add(&self, o: &Fx) -> Fx {
        Fx {
            lo: &self.lo + &o.lo,
            hi: &self.hi + &o.hi,
        }
    }

    fn sub(&self, o: &Fx) -> Fx {
        Fx {
            lo: &self.lo - &o.hi,
            hi: &self.hi - &o.lo,
        }
    }

    fn neg(&self) -> Fx {
        Fx {
            lo: -&self.hi,
            hi: -&self.lo,
        }
    }

    fn mul(&self, o: &Fx, q: u32) -> Fx {
        let ps = [
            &self.lo * &o.lo,
            &self.lo * &o.hi,
            &self.hi * &o.lo,
            &self.hi * &o.hi,
        ];
        let lo = ps.iter().min().unwrap();
        let hi = ps.iter().max().unwrap();
        Fx {
            lo: floor_shift(lo, q),
            hi: ceil_shift(hi, q),
        }
    }

    fn square(&self, q: u32) -> Fx {
        if self.lo.is_negative() && self.hi.is_positive() {
            let m = self.mag();
            Fx {
                lo: BigInt::zero(),
                hi: ceil_shift(&(&m * &m), q),
            }
        } else {
            let a = &self.lo * &self.lo;
            let b = &self.hi * &self.hi;
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            Fx {
                lo: floor_shift(&lo, q),
                hi: ceil_shift(&hi, q),
            }
        }
    }

    fn mul_int(&self, k: &BigInt) -> Fx {
        let a = &self.lo * k;
        let b = &self.hi * k;
        if a <= b {
            Fx { lo: a, hi: b }
        } else {
            Fx { lo: b, hi: a }
        }
    }

    fn div_u64(&self, d: u64) -> Fx {
        let d = BigInt::from(d);
        Fx {
            lo: num_integer::Integer::div_floor(&self.lo, &d),
            hi: -num_integer::Integer::div_floor(&-&self.hi, &d),
        }
    }

    fn widen(&self, by: &BigInt) -> Fx {
        Fx {
            lo: &self.lo - by,
            hi: &self.hi + by,
        }
    }

    fn mag(&self) -> BigInt {
        self.lo.abs().max(self.hi.abs())
    }

    fn to_interval(&self, q: u32) -> RatInterval {
        let den = BigInt::one() << q as usize;
        RatInterval::new_unchecked(
            Rational::new(self.lo.clone(), den.clone()),
            Rational::new(self.hi.clone(), den),
        )
    }

    fn width_ulps(&self) -> BigInt {
        &self.hi - &self.lo
    }
}

/// `atan(1/n)` at scale `q`; every truncated term errs by less than one ulp.
fn atan_inv(n: u64, q: u32) -> Fx {
    let n_big = BigInt::from(n);
    let n2 = &n_big * &n_big;
    let mut power = (BigInt::one() << q as usize) / &n_big;
    let mut sum = BigInt::zero();
    let (mut pos, mut neg) = (0u64, 0u64);
    let mut j = 0u64;
    loop {
        let t = &power / BigInt::from(2 * j + 1);
        if t.is_zero() {
            break;
        }
        if j.is_multiple_of(2) {
            sum += &t;
            pos += 1;
        } else {
            sum -= &t;
            neg += 1;
        }
        power /= &n2;
        j += 1;
    }
    // the first omitted term is below one ulp and bounds the alternating tail
    Fx {
        lo: &sum - BigInt::from(neg + 1),
        hi: &sum + BigInt::from(pos + 1),
    }
}

fn compute_pi(q: u32) -> Fx {
    let a5 = atan_inv(5, q);
    let a239 = atan_inv(239, q);
    a5.mul_int(&BigInt::from(16))
        .sub(&a239.mul_int(&BigInt::from(4)))
}

static PI_CACHE: Mutex<Option<(u32, Fx)>> = Mutex::new(None);

/// Pi at scale `q`, cached at the finest scale computed so far.
fn pi_fx(q: u32) -> Fx {
    let mut cache = PI_CACHE.lock().unwrap_or_else(|e| e.into_inner());
    match cache.as_ref() {
        Some((qc, fx)) if *qc >= q => {
            let shift = qc - q;
            Fx {
                lo: floor_shift(&fx.lo, shift),
                hi: ceil_shift(&fx.hi, shift),
            }
        }
        _ => {
            let qc = q.max(128) + 16;
            let fx = compute_pi(qc);
            let out = Fx {
                lo: floor_shift(&fx.lo, qc - q),
                hi: ceil_shift(&fx.hi, qc - q),
            };
            *cache = Some((qc, fx));
            out
        }
    }
}

pub fn pi_enclosure(prec: Precision) -> RatInterval {
    let p = prec.bits();
    pi_fx(p + GUARD_BITS).to_interval(p + GUARD_BITS).snap_outward(p + 2)
}

/// Taylor series of sin on a small fixed-point argument.
fn sin_taylor(y: &Fx, q: u32) -> Fx {
    let y2 = y.square(q);
    let mut term = y.clone();
    let mut sum = y.clone();
    let mut j = 0u64;
    let one = BigInt::one();
    loop {
        term = term.mul(&y2, q).div_u64((2 * j + 2) * (2 * j + 3));
        j += 1;
        sum = if j % 2 == 1 { sum.sub(&term) } else { sum.add(&term) };
        if term.mag() <= one {
            break;
        }
    }
    // remaining alternating tail is bounded by the last term's magnitude
    sum.widen(&(term.mag() + 2u32))
}

fn cos_taylor(y: &Fx, q: u32) -> Fx {
    let y2 = y.square(q);
    let one_fx = Fx::exact(BigInt::one() << q as usize);
    let mut term = one_fx.clone();
    let mut sum = one_fx;
    let mut j = 0u64;
    let one = BigInt::one();
    loop {
        term = term.mul(&y2, q).div_u64((2 * j + 1) * (2 * j + 2));
        j += 1;
        sum = if j % 2 == 1 { sum.sub(&term) } else { sum.add(&term) };
        if term.mag() <= one {
            break;
        }
    }
    sum.widen(&(term.mag() + 2u32))
}

/// exp on `|y| <= 1`; the tail after the last term is at most twice the
/// next term.
fn exp_taylor(y: &Fx, q: u32) -> Fx {
    let one_fx = Fx::exact(BigInt::one() << q as usize);
    let mut term = one_fx.clone();
    let mut sum = one_fx;
    let mut j = 0u64;
    let one = BigInt::one();
    loop {
        term = term.mul(y, q).div_u64(j + 1);
        j += 1;
        sum = sum.add(&term);
        if j >= 2 && term.mag() <= one {
            break;
        }
    }
    let next = term.mul(y, q).div_u64(j + 1);
    sum.widen(&(next.mag() * 2u32 + 2u32))
}

fn pow_fx(base: &Fx, mut n: u64, q: u32) -> Fx {
    let mut acc = Fx::exact(BigInt::one() << q as usize);
    let mut b = base.clone();
    while n > 0 {
        if n & 1 == 1 {
            acc = acc.mul(&b, q);
        }
        n >>= 1;
        if n > 0 {
            b = b.mul(&b, q);
        }
    }
    acc
}

/// Runs `f` at increasing working scales until the enclosure is narrower
/// than the output grid spacing, then snaps it onto that grid.
fn refine_point<F>(prec: Precision, extra: u32, f: F) -> Option<RatInterval>
where
    F: Fn(u32) -> Option<Fx>,
{
    let out_bits = prec.bits() + 2;
    let mut q = out_bits + GUARD_BITS + extra;
    for _ in 0..MAX_ATTEMPTS {
        let fx = f(q)?;
        // width <= 2^(q - out_bits) ulps means <= 2^-out_bits in value
        if fx.width_ulps() <= BigInt::one() << (q - out_bits) as usize {
            return Some(fx.to_interval(q).snap_outward(out_bits));
        }
        q += 32;
    }
    None
}

fn bit_len(k: i64) -> u32 {
    64 - k.unsigned_abs().leading_zeros()
}

#[derive(Clone, Copy)]
enum Trig {
    Sin,
    Cos,
}

fn trig_point(x: &Rational, prec: Precision, which: Trig) -> Option<RatInterval> {
    if x.is_zero() {
        return Some(match which {
            Trig::Sin => RatInterval::point(rat(0)),
            Trig::Cos => RatInterval::point(rat(1)),
        });
    }
    let xf = x.to_f64()?;
    if !xf.is_finite() || xf.abs() > TRIG_ARG_LIMIT {
        return None;
    }
    let k = (xf / std::f64::consts::FRAC_PI_2).round() as i64;
    let extra = bit_len(k) + 4;
    refine_point(prec, extra, |q| {
        // pi at scale q-1 read at scale q is pi/2
        let half_pi = pi_fx(q - 1);
        let y = Fx::from_rational(x, q).sub(&half_pi.mul_int(&BigInt::from(k)));
        // |y| must stay inside the convergence region of the short series
        if y.mag() > BigInt::from(13) << (q as usize - 3) {
            return None;
        }
        let quadrant = k.rem_euclid(4);
        let v = match (which, quadrant) {
            (Trig::Sin, 0) | (Trig::Cos, 3) => sin_taylor(&y, q),
            (Trig::Sin, 1) | (Trig::Cos, 0) => cos_taylor(&y, q),
            (Trig::Sin, 2) | (Trig::Cos, 1) => sin_taylor(&y, q).neg(),
            _ => cos_taylor(&y, q).neg(),
        };
        Some(v)
    })
}

fn exp_point(x: &Rational, prec: Precision) -> Result<RatInterval, EvalError> {
    let n = x.round().to_integer();
    let n = n
        .to_i64()
        .filter(|n| n.abs() <= EXP_ARG_LIMIT)
        .ok_or_else(|| EvalError::Domain {
            op: "exp",
            arg: x.to_string(),
        })?;
    let y = x - rat(n);
    let magnitude_bits = if n > 0 { (n as f64 * std::f64::consts::LOG2_E).ceil() as u32 + 2 } else { 0 };
    let extra = 2 * bit_len(n) + magnitude_bits + 8;
    refine_point(prec, extra, |q| {
        let ey = exp_taylor(&Fx::from_rational(&y, q), q);
        if n == 0 {
            return Some(ey);
        }
        let unit = if n > 0 { BigInt::one() } else { -BigInt::one() };
        let base = exp_taylor(&Fx::exact(unit << q as usize), q);
        Some(pow_fx(&base, n.unsigned_abs(), q).mul(&ey, q))
    })
    .ok_or_else(|| EvalError::Domain {
        op: "exp",
        arg: x.to_string(),
    })
}

pub fn exp_interval(a: &RatInterval, prec: Precision) -> Result<RatInterval, EvalError> {
    let lo = exp_point(a.lo(), prec)?;
    let hi = if a.is_point() {
        lo.clone()
    } else {
        exp_point(a.hi(), prec)?
    };
    let lower = lo.lo().clone().max(rat(0));
    Ok(RatInterval::new_unchecked(lower, hi.hi().clone()))
}

/// Whether some point `pi * (offset + 2k)` may lie in `a`, judged against
/// the pi enclosure at the given precision.
fn may_contain_critical(a: &RatInterval, offset: &Rational, prec: Precision) -> bool {
    let (lo_f, hi_f) = (a.lo().to_f64().unwrap_or(0.0), a.hi().to_f64().unwrap_or(0.0));
    let off = offset.to_f64().unwrap_or(0.0);
    let pf = std::f64::consts::PI;
    let k_min = ((lo_f / pf - off) / 2.0).floor() as i64 - 1;
    let k_max = ((hi_f / pf - off) / 2.0).ceil() as i64 + 1;
    let mut pi = None;
    (k_min..=k_max).any(|k| {
        let cf = off + 2.0 * k as f64;
        let slop = 1e-9 * (1.0 + (cf * pf).abs());
        if cf * pf + slop < lo_f || cf * pf - slop > hi_f {
            return false;
        }
        let pi = pi.get_or_insert_with(|| pi_enclosure(prec.raised(8)));
        let c = offset + rat(2 * k);
        let crit = if c >= rat(0) {
            RatInterval::new_unchecked(&c * pi.lo(), &c * pi.hi())
        } else {
            RatInterval::new_unchecked(&c * pi.hi(), &c * pi.lo())
        };
        crit.intersects(a)
    })
}

fn unit_range() -> RatInterval {
    RatInterval::new_unchecked(rat(-1), rat(1))
}

fn clamp_unit(v: RatInterval) -> RatInterval {
    RatInterval::new_unchecked(v.lo().clone().max(rat(-1)), v.hi().clone().min(rat(1)))
}

fn trig_interval(a: &RatInterval, prec: Precision, which: Trig) -> RatInterval {
    let too_large = |x: &Rational| x.to_f64().is_none_or(|f| f.abs() > TRIG_ARG_LIMIT);
    if a.width() > rat(7) || too_large(a.lo()) || too_large(a.hi()) {
        return unit_range();
    }
    let Some(at_lo) = trig_point(a.lo(), prec, which) else {
        return unit_range();
    };
    if a.is_point() {
        return clamp_unit(at_lo);
    }
    let Some(at_hi) = trig_point(a.hi(), prec, which) else {
        return unit_range();
    };
    let mut out = at_lo.hull(&at_hi);
    let (max_offset, min_offset) = match which {
        Trig::Sin => (ratio(1, 2), ratio(-1, 2)),
        Trig::Cos => (rat(0), rat(1)),
    };
    if may_contain_critical(a, &max_offset, prec) {
        out = out.hull(&RatInterval::point(rat(1)));
    }
    if may_contain_critical(a, &min_offset, prec) {
        out = out.hull(&RatInterval::point(rat(-1)));
    }
    clamp_unit(out)
}

pub fn sin_interval(a: &RatInterval, prec: Precision) -> RatInterval {
    trig_interval(a, prec, Trig::Sin)
}

pub fn cos_interval(a: &RatInterval, prec: Precision) -> RatInterval {
    trig_interval(a, prec, Trig::Cos)
}

pub fn sqrt_interval(a: &RatInterval, prec: Precision) -> Result<RatInterval, EvalError> {
    if a.lo() < &rat(0) {
        return Err(EvalError::Domain {
            op: "sqrt",
            arg: a.to_string(),
        });
    }
    let bits = (prec.bits() + 2) as usize;
    let den = BigInt::one() << bits;
    let scale = BigInt::one() << (2 * bits);
    let lo_n = num_integer::Integer::div_floor(&(a.lo().numer() * &scale), a.lo().denom());
    let hi_scaled = a.hi().numer() * &scale;
    let hi_n = -num_integer::Integer::div_floor(&-hi_scaled, a.hi().denom());
    let lo = lo_n.sqrt();
    let s = hi_n.sqrt();
    let hi = if &s * &s == hi_n { s } else { s + 1u32 };
    Ok(RatInterval::new_unchecked(
        Rational::new(lo, den.clone()),
        Rational::new(hi, den),
    ))
}
