use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::numeric::PROB_EPS;

/// Behaviour of `h` at one interior discontinuity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub at: f64,
    pub left: f64,
    pub value: f64,
    pub right: f64,
}

/// Known distortion families. `h` is applied to exceedance probabilities
/// `P(X > x)`.
#[derive(Clone)]
pub enum DistortionKind {
    /// `1{x > 1 - alpha}`; `1{x = 1}` at `alpha = 0`.
    VarIndicator(f64),
    /// `min(x / (1 - alpha), 1)`.
    EsRamp(f64),
    /// `1{x > (1 - alpha)/2}`.
    MsIndicator(f64),
    /// `1{x >= 1 - alpha}`.
    RightQuantileIndicator(f64),
    /// `(1 - c) 1{x = 1 - alpha} + 1{x > 1 - alpha}`.
    QuantileMix {
        alpha: f64,
        c: f64,
    },
    /// `1 - (1 - x^(1/(1+alpha)))^(1+alpha)`.
    MinMaxVar(f64),
    Identity,
    /// `1 - c` on the open unit interval.
    EndpointStep(f64),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for DistortionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::VarIndicator(a) => write!(f, "VarIndicator({a})"),
            Self::EsRamp(a) => write!(f, "EsRamp({a})"),
            Self::MsIndicator(a) => write!(f, "MsIndicator({a})"),
            Self::RightQuantileIndicator(a) => write!(f, "RightQuantileIndicator({a})"),
            Self::QuantileMix { alpha, c } => write!(f, "QuantileMix({alpha}, {c})"),
            Self::MinMaxVar(a) => write!(f, "MinMaxVar({a})"),
            Self::Identity => write!(f, "Identity"),
            Self::EndpointStep(c) => write!(f, "EndpointStep({c})"),
            Self::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// Nondecreasing `h` on `[0,1]` with `h(0) = 0`, `h(1) = 1` and explicit jumps.
#[derive(Debug, Clone)]
pub struct DistortionFunction {
    kind: DistortionKind,
    jumps: Vec<Jump>,
    kinks: Vec<f64>,
    zero_exponent: f64,
    one_exponent: f64,
}

fn level(name: &str, a: f64, lo_open: bool, hi_open: bool) -> Result<()> {
    let ok = a.is_finite()
        && if lo_open { a > 0.0 } else { a >= 0.0 }
        && if hi_open { a < 1.0 } else { a <= 1.0 };
    if ok {
        Ok(())
    } else {
        Err(invalid(format!("{name} = {a} out of range")))
    }
}

fn step(at: f64, value: f64) -> Jump {
    Jump {
        at,
        left: 0.0,
        value,
        right: 1.0,
    }
}

impl DistortionFunction {
    fn build(kind: DistortionKind, jumps: Vec<Jump>, kinks: Vec<f64>, z: f64, o: f64) -> Self {
        Self {
            kind,
            jumps,
            kinks,
            zero_exponent: z,
            one_exponent: o,
        }
    }

    pub fn var(alpha: f64) -> Result<Self> {
        level("alpha", alpha, false, false)?;
        let jump = if alpha == 0.0 {
            Jump {
                at: 1.0,
                left: 0.0,
                value: 1.0,
                right: 1.0,
            }
        } else {
            step(1.0 - alpha, 0.0)
        };
        let z = if alpha < 1.0 { f64::INFINITY } else { 0.0 };
        let o = if alpha > 0.0 { f64::INFINITY } else { 0.0 };
        Ok(Self::build(
            DistortionKind::VarIndicator(alpha),
            vec![jump],
            vec![],
            z,
            o,
        ))
    }

    pub fn right_quantile(alpha: f64) -> Result<Self> {
        level("alpha", alpha, false, true)?;
        let o = if alpha > 0.0 { f64::INFINITY } else { 0.0 };
        Ok(Self::build(
            DistortionKind::RightQuantileIndicator(alpha),
            vec![step(1.0 - alpha, 1.0)],
            vec![],
            f64::INFINITY,
            o,
        ))
    }

    pub fn es(alpha: f64) -> Result<Self> {
        level("alpha", alpha, false, true)?;
        let kinks = if alpha > 0.0 {
            vec![1.0 - alpha]
        } else {
            vec![]
        };
        let o = if alpha > 0.0 { f64::INFINITY } else { 1.0 };
        Ok(Self::build(
            DistortionKind::EsRamp(alpha),
            vec![],
            kinks,
            1.0,
            o,
        ))
    }

    pub fn ms(alpha: f64) -> Result<Self> {
        level("alpha", alpha, false, true)?;
        Ok(Self::build(
            DistortionKind::MsIndicator(alpha),
            vec![step(0.5 * (1.0 - alpha), 0.0)],
            vec![],
            f64::INFINITY,
            f64::INFINITY,
        ))
    }

    pub fn quantile_mix(alpha: f64, c: f64) -> Result<Self> {
        level("alpha", alpha, true, true)?;
        level("c", c, false, false)?;
        Ok(Self::build(
            DistortionKind::QuantileMix { alpha, c },
            vec![step(1.0 - alpha, 1.0 - c)],
            vec![],
            f64::INFINITY,
            f64::INFINITY,
        ))
    }

    pub fn minmaxvar(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(invalid(format!("alpha = {alpha} must be nonnegative")));
        }
        Ok(Self::build(
            DistortionKind::MinMaxVar(alpha),
            vec![],
            vec![],
            1.0 / (1.0 + alpha),
            1.0 + alpha,
        ))
    }

    pub fn identity() -> Self {
        Self::build(DistortionKind::Identity, vec![], vec![], 1.0, 1.0)
    }

    pub fn endpoint(c: f64) -> Result<Self> {
        level("c", c, false, false)?;
        let jumps = vec![
            Jump {
                at: 0.0,
                left: 0.0,
                value: 0.0,
                right: 1.0 - c,
            },
            Jump {
                at: 1.0,
                left: 1.0 - c,
                value: 1.0,
                right: 1.0,
            },
        ];
        let z = if c < 1.0 { 0.0 } else { f64::INFINITY };
        let o = if c > 0.0 { 0.0 } else { f64::INFINITY };
        Ok(Self::build(
            DistortionKind::EndpointStep(c),
            jumps,
            vec![],
            z,
            o,
        ))
    }

    /// A user-supplied `h`. `jumps` must list every discontinuity; the
    /// exponents describe `h(x) ~ x^a` at 0 and `1 - h(1-y) ~ y^b` at 1 and
    /// drive the integrability check on unbounded laws.
    pub fn custom<F>(h: F, jumps: Vec<Jump>, zero_exponent: f64, one_exponent: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let d = Self::build(
            DistortionKind::Custom(Arc::new(h)),
            jumps,
            vec![],
            zero_exponent,
            one_exponent,
        );
        d.validate()?;
        Ok(d)
    }

    pub fn kind(&self) -> &DistortionKind {
        &self.kind
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    /// Interior points where `h` jumps or its slope changes.
    pub fn critical_points(&self) -> Vec<f64> {
        self.jumps
            .iter()
            .map(|j| j.at)
            .chain(self.kinks.iter().copied())
            .filter(|t| *t > 0.0 && *t < 1.0)
            .collect()
    }

    /// Exponent `a` with `h(x) ~ x^a` as `x -> 0`; infinite when `h` vanishes near 0.
    pub fn zero_exponent(&self) -> f64 {
        self.zero_exponent
    }

    /// Exponent `b` with `1 - h(1 - y) ~ y^b` as `y -> 0`.
    pub fn one_exponent(&self) -> f64 {
        self.one_exponent
    }

    /// `h(x)` as written, without snapping to declared jumps.
    pub fn eval_raw(&self, x: f64) -> f64 {
        match &self.kind {
            DistortionKind::VarIndicator(a) => {
                if *a == 0.0 {
                    f64::from(u8::from(x >= 1.0))
                } else {
                    f64::from(u8::from(x > 1.0 - a))
                }
            }
            DistortionKind::EsRamp(a) => (x / (1.0 - a)).min(1.0),
            DistortionKind::MsIndicator(a) => f64::from(u8::from(x > 0.5 * (1.0 - a))),
            DistortionKind::RightQuantileIndicator(a) => f64::from(u8::from(x >= 1.0 - a)),
            DistortionKind::QuantileMix { alpha, c } => {
                if x > 1.0 - alpha {
                    1.0
                } else if x == 1.0 - alpha {
                    1.0 - c
                } else {
                    0.0
                }
            }
            DistortionKind::MinMaxVar(a) => {
                let e = 1.0 + a;
                1.0 - (1.0 - x.powf(1.0 / e)).powf(e)
            }
            DistortionKind::Identity => x,
            DistortionKind::EndpointStep(c) => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    1.0 - c
                }
            }
            DistortionKind::Custom(h) => h(x),
        }
    }

    /// `h(x)`, reading the declared jump value whenever `x` is within
    /// rounding distance of a jump location.
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        for j in &self.jumps {
            if (x - j.at).abs() <= PROB_EPS {
                return j.value;
            }
        }
        self.eval_raw(x)
    }

    /// Checks the endpoint values, monotonicity on a 10^4 grid and the declared jumps.
    pub fn validate(&self) -> Result<()> {
        if self.eval(0.0).abs() > 1e-12 || (self.eval(1.0) - 1.0).abs() > 1e-12 {
            return Err(invalid("distortion must satisfy h(0) = 0 and h(1) = 1"));
        }
        let mut pts: Vec<f64> = (0..=10_000).map(|k| f64::from(k) / 10_000.0).collect();
        for j in &self.jumps {
            if !(j.left <= j.value && j.value <= j.right) {
                return Err(invalid(format!("jump at {} is not monotone", j.at)));
            }
            pts.extend([j.at - 1e-9, j.at, j.at + 1e-9]);
        }
        pts.retain(|x| (0.0..=1.0).contains(x));
        pts.sort_by(f64::total_cmp);
        let mut prev = f64::NEG_INFINITY;
        for x in pts {
            let v = self.eval(x);
            if !v.is_finite() || v < prev - 1e-12 || !(-1e-12..=1.0 + 1e-12).contains(&v) {
                return Err(invalid(format!(
                    "distortion not monotone in [0,1] near {x}"
                )));
            }
            prev = v;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families_validate() {
        for d in [
            DistortionFunction::var(0.9).unwrap(),
            DistortionFunction::var(0.0).unwrap(),
            DistortionFunction::var(1.0).unwrap(),
            DistortionFunction::es(0.975).unwrap(),
            DistortionFunction::ms(0.5).unwrap(),
            DistortionFunction::quantile_mix(0.3, 0.25).unwrap(),
            DistortionFunction::minmaxvar(0.25).unwrap(),
            DistortionFunction::identity(),
            DistortionFunction::endpoint(0.4).unwrap(),
            DistortionFunction::right_quantile(0.2).unwrap(),
        ] {
            d.validate()
                .unwrap_or_else(|e| panic!("{:?}: {e}", d.kind()));
        }
    }

    #[test]
    fn jump_values_are_snapped() {
        let h = DistortionFunction::quantile_mix(0.7, 0.25).unwrap();
        assert_eq!(h.eval(0.3 + 1e-15), 0.75);
        assert_eq!(h.eval(0.3 - 1e-15), 0.75);
        assert_eq!(h.eval(0.31), 1.0);
        assert_eq!(h.eval(0.29), 0.0);
    }

    #[test]
    fn minmaxvar_shape() {
        let h = DistortionFunction::minmaxvar(0.0).unwrap();
        assert!((h.eval(0.37) - 0.37).abs() < 1e-15);
        let h = DistortionFunction::minmaxvar(1.0).unwrap();
        let x: f64 = 0.25;
        assert!((h.eval(x) - (1.0 - (1.0 - x.sqrt()).powi(2))).abs() < 1e-15);
    }

    #[test]
    fn custom_rejects_decreasing() {
        assert!(DistortionFunction::custom(|x| 1.0 - x, vec![], 1.0, 1.0).is_err());
        assert!(DistortionFunction::custom(|x| x * x, vec![], 2.0, 1.0).is_ok());
    }

    #[test]
    fn levels_checked() {
        assert!(DistortionFunction::es(1.0).is_err());
        assert!(DistortionFunction::quantile_mix(0.0, 0.5).is_err());
        assert!(DistortionFunction::endpoint(1.5).is_err());
    }
}
