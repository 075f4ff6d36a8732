use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An integrability or fine index in `(0, inf]`.
///
/// Serializes as a JSON number, or the string `"inf"` for infinity.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Exponent(f64);

impl Exponent {
    pub const INF: Exponent = Exponent(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p > 0.0 && !p.is_nan() {
            Ok(Exponent(p))
        } else {
            Err(Error::InvalidParams(format!("exponent must lie in (0, inf], got {p}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_inf(self) -> bool {
        self.0.is_infinite()
    }

    /// `1/p` with `1/inf = 0`.
    pub fn recip(self) -> f64 {
        if self.is_inf() {
            0.0
        } else {
            1.0 / self.0
        }
    }

    /// Conjugate index: `p/(p-1)` for `1<p<inf`, `1` for `p=inf`, `inf` for `p<=1`.
    pub fn conjugate(self) -> Exponent {
        if self.is_inf() {
            Exponent(1.0)
        } else if self.0 <= 1.0 {
            Exponent::INF
        } else {
            Exponent(self.0 / (self.0 - 1.0))
        }
    }

    pub fn min(self, other: Exponent) -> Exponent {
        if self.0 <= other.0 {
            self
        } else {
            other
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_inf() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_inf() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        let p = match Raw::deserialize(d)? {
            Raw::Num(x) => x,
            Raw::Str(s) if s == "inf" || s == "infinity" => f64::INFINITY,
            Raw::Str(s) => return Err(serde::de::Error::custom(format!("bad exponent {s:?}"))),
        };
        Exponent::new(p).map_err(serde::de::Error::custom)
    }
}

/// Source and target parameters `(d, s1, p1, q1, s2, p2, q2)` of the embedding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct EmbeddingParams {
    pub d: u32,
    pub s1: f64,
    pub s2: f64,
    pub p1: Exponent,
    pub q1: Exponent,
    pub p2: Exponent,
    pub q2: Exponent,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    d: u32,
    s1: Option<f64>,
    s2: Option<f64>,
    delta: Option<f64>,
    p1: Exponent,
    q1: Option<Exponent>,
    p2: Exponent,
    q2: Option<Exponent>,
}

impl TryFrom<RawParams> for EmbeddingParams {
    type Error = Error;

    fn try_from(r: RawParams) -> Result<Self> {
        let q1 = r.q1.unwrap_or(r.p1);
        let q2 = r.q2.unwrap_or(r.p2);
        match (r.s1, r.s2, r.delta) {
            (Some(s1), Some(s2), None) => EmbeddingParams::new(r.d, s1, s2, r.p1, q1, r.p2, q2),
            (None, None, Some(delta)) => {
                let mut p = EmbeddingParams::from_delta(r.d, delta, r.p1, r.p2)?;
                p.q1 = q1;
                p.q2 = q2;
                Ok(p)
            }
            _ => Err(Error::InvalidParams(
                "give either both s1 and s2, or delta alone".into(),
            )),
        }
    }
}

impl EmbeddingParams {
    pub fn new(
        d: u32,
        s1: f64,
        s2: f64,
        p1: Exponent,
        q1: Exponent,
        p2: Exponent,
        q2: Exponent,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParams("dimension d must be positive".into()));
        }
        if !s1.is_finite() || !s2.is_finite() {
            return Err(Error::InvalidParams("smoothness indices must be finite".into()));
        }
        let p = EmbeddingParams { d, s1, s2, p1, q1, p2, q2 };
        if !(p.delta() > 0.0) {
            return Err(Error::InvalidParams(format!(
                "delta = s1 - s2 - d(1/p1 - 1/p2) must be positive, got {}",
                p.delta()
            )));
        }
        Ok(p)
    }

    /// Parameters with `s2 = 0`, `s1` chosen to realize `delta`, and `q_i = p_i`.
    pub fn from_delta(d: u32, delta: f64, p1: Exponent, p2: Exponent) -> Result<Self> {
        let s1 = delta + d as f64 * (p1.recip() - p2.recip());
        EmbeddingParams::new(d, s1, 0.0, p1, p1, p2, p2)
    }

    pub fn dim(&self) -> f64 {
        self.d as f64
    }

    pub fn r1(&self) -> f64 {
        self.p1.recip()
    }

    pub fn r2(&self) -> f64 {
        self.p2.recip()
    }

    pub fn delta(&self) -> f64 {
        self.s1 - self.s2 - self.dim() * (self.r1() - self.r2())
    }

    /// Signed `1/p = 1/p2 - 1/p1`.
    pub fn p_recip(&self) -> f64 {
        self.r2() - self.r1()
    }

    /// `1/p* = (1/p2 - 1/p1)_+`.
    pub fn p_star_recip(&self) -> f64 {
        self.p_recip().max(0.0)
    }

    pub fn p1_prime(&self) -> Exponent {
        self.p1.conjugate()
    }

    /// `t = min(p1', p2)`.
    pub fn t(&self) -> Exponent {
        self.p1_prime().min(self.p2)
    }

    pub fn theta(&self) -> f64 {
        (self.r1() - self.r2()) / (0.5 - self.r2())
    }

    pub fn theta1(&self) -> f64 {
        (self.r1() - self.r2()) / (self.r1() - 0.5)
    }

    /// Power-triangle exponent `rho = min(1, p2, q2)` of the target space.
    pub fn rho(&self) -> f64 {
        1.0f64.min(self.p2.value()).min(self.q2.value())
    }

    /// The pure-diagonal setting: `p2 < p1`, `q1 = p1`, `q2 = p2`.
    pub fn is_diagonal_model(&self) -> bool {
        self.p2.value() < self.p1.value() && self.q1 == self.p1 && self.q2 == self.p2
    }
}
