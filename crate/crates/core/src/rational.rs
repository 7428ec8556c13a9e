//! Exact rationals and their `"p/q"` serialization.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::Value;

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(p: i64, d: i64) -> Q {
    Q::new(BigInt::from(p), BigInt::from(d))
}

pub fn qi(p: i64) -> Q {
    Q::from_integer(BigInt::from(p))
}

pub fn q_to_string(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn q_to_json(x: &Q) -> Value {
    Value::String(q_to_string(x))
}

pub fn q_parse(s: &str) -> Result<Q> {
    let bad = || Error::Malformed(format!("bad rational {s:?}"));
    let s = s.trim();
    match s.split_once('/') {
        Some((p, d)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Q::new(p, d))
        }
        None => Ok(Q::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

/// Accepts `"p/q"` strings and integers. Floats are rejected to keep
/// documents exact.
pub fn q_from_json(v: &Value) -> Result<Q> {
    match v {
        Value::String(s) => q_parse(s),
        Value::Number(n) if n.is_i64() => Ok(Q::from_integer(BigInt::from(n.as_i64().unwrap()))),
        _ => Err(Error::Malformed(format!("expected rational \"p/q\", got {v}"))),
    }
}

/// Rank over ℚ by Gaussian elimination.
pub fn rank(rows: &[Vec<Q>]) -> usize {
    let mut m: Vec<Vec<Q>> = rows.to_vec();
    let cols = m.iter().map(Vec::len).max().unwrap_or(0);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..m.len()).find(|&i| c < m[i].len() && !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        let pivot = m[r][c].clone();
        for i in 0..m.len() {
            if i != r && c < m[i].len() && !m[i][c].is_zero() {
                let f = &m[i][c] / &pivot;
                for k in c..cols {
                    let sub = &f * m[r].get(k).cloned().unwrap_or_else(Q::zero);
                    if k < m[i].len() {
                        m[i][k] = &m[i][k] - sub;
                    }
                }
            }
        }
        r += 1;
    }
    r
}

/// Generator `g ≥ 0` of the subgroup `gℤ` spanned by rationals.
pub fn span_generator(xs: &[Q]) -> Q {
    use num_integer::Integer;
    let mut num = BigInt::zero();
    let mut den = BigInt::one();
    for x in xs {
        den = den.lcm(x.denom());
    }
    for x in xs {
        num = num.gcd(&(x.numer() * (&den / x.denom())));
    }
    Q::new(num, den)
}

/// Whether `x` lies in the span `gℤ` (with `g = 0` meaning `{0}`).
pub fn in_span(x: &Q, g: &Q) -> bool {
    if g.is_zero() {
        x.is_zero()
    } else {
        (x / g).is_integer()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        for x in [q(3, 7), q(-5, 10), qi(4), Q::zero()] {
            assert_eq!(q_from_json(&q_to_json(&x)).unwrap(), x);
        }
        assert!(q_parse("1/0").is_err());
        assert!(q_from_json(&serde_json::json!(0.5)).is_err());
    }

    #[test]
    fn ranks_and_spans() {
        assert_eq!(rank(&[vec![qi(1), qi(2)], vec![qi(2), qi(4)]]), 1);
        assert_eq!(rank(&[vec![qi(1), qi(0)], vec![qi(1), qi(1)], vec![qi(0), qi(3)]]), 2);
        assert_eq!(span_generator(&[q(1, 10), qi(1)]), q(1, 10));
        assert_eq!(span_generator(&[q(2, 3), q(1, 2)]), q(1, 6));
        assert!(in_span(&q(11, 5), &q(1, 10)));
        assert!(!in_span(&q(1, 3), &qi(1)));
    }
}
