//! Angles that may be exact rational multiples of π.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::spectral::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle {
    /// (num/den)·π with den > 0 and the fraction in lowest terms.
    PiRational { num: i64, den: i64 },
    Real(f64),
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 { a.abs() } else { gcd(b, a % b) }
}

impl Angle {
    pub fn pi_times(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::AngleParse(format!("{num}/{den} pi")));
        }
        let g = gcd(num, den).max(1);
        let s = den.signum();
        Ok(Angle::PiRational {
            num: s * num / g,
            den: s * den / g,
        })
    }

    pub fn pi() -> Self {
        Angle::PiRational { num: 1, den: 1 }
    }

    pub fn value(&self) -> f64 {
        match *self {
            Angle::PiRational { num, den } => PI * num as f64 / den as f64,
            Angle::Real(x) => x,
        }
    }

    /// e^{2ikT}; exactly 1 whenever 2kT is a multiple of 2π.
    pub fn exp_2ik(&self, k: i64) -> C64 {
        match *self {
            Angle::PiRational { num, den } => {
                let r = (i128::from(k) * i128::from(num)).rem_euclid(i128::from(den));
                if r == 0 {
                    C64::new(1.0, 0.0)
                } else {
                    C64::from_polar(1.0, TAU * r as f64 / den as f64)
                }
            }
            Angle::Real(x) => C64::from_polar(1.0, 2.0 * k as f64 * x),
        }
    }

    /// Linear interpolation; the endpoints are returned unchanged.
    pub fn lerp(from: Angle, to: Angle, s: f64) -> Angle {
        if s == 0.0 {
            from
        } else if s == 1.0 {
            to
        } else {
            Angle::Real((1.0 - s) * from.value() + s * to.value())
        }
    }

    pub fn shifted_by_pi_multiple(&self, m: i64) -> Angle {
        match *self {
            Angle::PiRational { num, den } => Angle::PiRational {
                num: num + m * den,
                den,
            },
            Angle::Real(x) => Angle::Real(x + PI * m as f64),
        }
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Angle::PiRational { num, den } => {
                match num {
                    0 => return write!(f, "0"),
                    1 => write!(f, "pi")?,
                    -1 => write!(f, "-pi")?,
                    n => write!(f, "{n}pi")?,
                }
                if den != 1 {
                    write!(f, "/{den}")?;
                }
                Ok(())
            }
            Angle::Real(x) => write!(f, "{x}"),
        }
    }
}

fn parse_int(s: &str, whole: &str) -> Result<i64> {
    s.trim()
        .parse()
        .map_err(|_| Error::AngleParse(whole.to_string()))
}

impl FromStr for Angle {
    type Err = Error;

    /// Accepts plain numbers and forms like `pi`, `-pi`, `2pi`, `2*pi`,
    /// `pi/2`, `2pi/3`, `3/4*pi`, `3/4pi`.
    fn from_str(raw: &str) -> Result<Self> {
        let s: String = raw.chars().filter(|c| !c.is_whitespace()).collect();
        let s = s.to_ascii_lowercase();
        if !s.contains("pi") {
            return s
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(Angle::Real)
                .ok_or_else(|| Error::AngleParse(raw.to_string()));
        }
        let (before, after) = s.split_once("pi").expect("checked above");
        let before = before.strip_suffix('*').unwrap_or(before);
        let (mut num, mut den) = match before {
            "" | "+" => (1, 1),
            "-" => (-1, 1),
            b => match b.split_once('/') {
                Some((n, d)) => (parse_int(n, raw)?, parse_int(d, raw)?),
                None => (parse_int(b, raw)?, 1),
            },
        };
        if !after.is_empty() {
            let d = after
                .strip_prefix('/')
                .ok_or_else(|| Error::AngleParse(raw.to_string()))?;
            den *= parse_int(d, raw)?;
        }
        if den == 0 {
            return Err(Error::AngleParse(raw.to_string()));
        }
        if den < 0 {
            num = -num;
            den = -den;
        }
        Angle::pi_times(num, den)
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Angle::PiRational { .. } => s.serialize_str(&self.to_string()),
            Angle::Real(x) => s.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct AngleVisitor;

        impl Visitor<'_> for AngleVisitor {
            type Value = Angle;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or a multiple of pi such as \"pi/2\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Angle, E> {
                Ok(Angle::Real(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Angle, E> {
                Ok(Angle::Real(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Angle, E> {
                Ok(Angle::Real(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Angle, E> {
                v.parse().map_err(E::custom)
            }
        }

        d.deserialize_any(AngleVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(s: &str) -> Angle {
        s.parse().unwrap()
    }

    #[test]
    fn parses_symbolic_forms() {
        assert_eq!(a("pi"), Angle::pi());
        assert_eq!(a("2pi"), Angle::PiRational { num: 2, den: 1 });
        assert_eq!(a("2*pi"), Angle::PiRational { num: 2, den: 1 });
        assert_eq!(a("pi/2"), Angle::PiRational { num: 1, den: 2 });
        assert_eq!(a("2pi/4"), Angle::PiRational { num: 1, den: 2 });
        assert_eq!(a("3/4*pi"), Angle::PiRational { num: 3, den: 4 });
        assert_eq!(a("-pi/3"), Angle::PiRational { num: -1, den: 3 });
        assert_eq!(a(" 1.5 "), Angle::Real(1.5));
        for bad in ["", "pix", "pi/0", "x", "nan", "1/pi"] {
            assert!(bad.parse::<Angle>().is_err(), "{bad}");
        }
    }

    #[test]
    fn display_round_trips() {
        for s in ["pi", "-pi", "2pi/3", "pi/2", "0"] {
            assert_eq!(a(s).to_string(), s);
            assert_eq!(a(&a(s).to_string()), a(s));
        }
    }

    #[test]
    fn exact_unit_phases() {
        let pi = Angle::pi();
        for k in -5..=5 {
            assert_eq!(pi.exp_2ik(k), C64::new(1.0, 0.0));
        }
        let half = a("pi/2");
        assert_eq!(half.exp_2ik(2), C64::new(1.0, 0.0));
        assert!((half.exp_2ik(1) + 1.0).norm() < 1e-15);
        assert!((Angle::Real(1.0).exp_2ik(3) - C64::from_polar(1.0, 6.0)).norm() < 1e-15);
    }

    #[test]
    fn serde_accepts_numbers_and_strings() {
        let v: Vec<Angle> = serde_json::from_str(r#"[1, 2.5, "pi/2"]"#).unwrap();
        assert_eq!(v, vec![Angle::Real(1.0), Angle::Real(2.5), a("pi/2")]);
        assert_eq!(serde_json::to_string(&a("pi/2")).unwrap(), "\"pi/2\"");
    }

    #[test]
    fn lerp_keeps_exact_endpoints() {
        let (from, to) = (Angle::Real(1.0), Angle::pi());
        assert_eq!(Angle::lerp(from, to, 1.0), to);
        assert_eq!(Angle::lerp(from, to, 0.0), from);
        assert!((Angle::lerp(from, to, 0.5).value() - (1.0 + PI) / 2.0).abs() < 1e-15);
    }
}
