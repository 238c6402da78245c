use std::fmt;
use std::str::FromStr;

use crate::dist::{DiscreteDistribution, Distribution};
use crate::error::{invalid, Result, RiskError};

use super::DistortionFunction;

/// Which risk functional to evaluate.
#[derive(Debug, Clone)]
pub enum MeasureKind {
    Var(f64),
    Es(f64),
    Ms(f64),
    Mean,
    QuantileMix {
        alpha: f64,
        c: f64,
    },
    EndpointMix(f64),
    MinMaxVar(f64),
    /// Quantile weights on `(0, 1]`.
    GenSpectral(DiscreteDistribution),
    Distortion(DistortionFunction),
}

/// A risk functional together with its scale `s`.
#[derive(Debug, Clone)]
pub struct RiskMeasureSpec {
    kind: MeasureKind,
    scale: f64,
}

impl RiskMeasureSpec {
    pub fn new(kind: MeasureKind) -> Result<Self> {
        let spec = Self { kind, scale: 1.0 };
        spec.distortion_or_spectrum()?;
        Ok(spec)
    }

    pub fn var(alpha: f64) -> Result<Self> {
        Self::new(MeasureKind::Var(alpha))
    }

    pub fn es(alpha: f64) -> Result<Self> {
        Self::new(MeasureKind::Es(alpha))
    }

    pub fn ms(alpha: f64) -> Result<Self> {
        Self::new(MeasureKind::Ms(alpha))
    }

    pub fn mean() -> Self {
        Self {
            kind: MeasureKind::Mean,
            scale: 1.0,
        }
    }

    pub fn quantile_mix(alpha: f64, c: f64) -> Result<Self> {
        Self::new(MeasureKind::QuantileMix { alpha, c })
    }

    pub fn endpoint_mix(c: f64) -> Result<Self> {
        Self::new(MeasureKind::EndpointMix(c))
    }

    pub fn with_scale(mut self, s: f64) -> Result<Self> {
        if !(s.is_finite() && s > 0.0) {
            return Err(invalid(format!("scale must be positive, got {s}")));
        }
        self.scale = s;
        Ok(self)
    }

    pub fn kind(&self) -> &MeasureKind {
        &self.kind
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn distortion_or_spectrum(&self) -> Result<Option<DistortionFunction>> {
        Ok(Some(match &self.kind {
            MeasureKind::Var(a) => DistortionFunction::var(*a)?,
            MeasureKind::Es(a) => DistortionFunction::es(*a)?,
            MeasureKind::Ms(a) => DistortionFunction::ms(*a)?,
            MeasureKind::Mean => DistortionFunction::identity(),
            MeasureKind::QuantileMix { alpha, c } => DistortionFunction::quantile_mix(*alpha, *c)?,
            MeasureKind::EndpointMix(c) => DistortionFunction::endpoint(*c)?,
            MeasureKind::MinMaxVar(a) => DistortionFunction::minmaxvar(*a)?,
            MeasureKind::GenSpectral(delta) => {
                if delta.min() <= 0.0 || delta.max() > 1.0 {
                    return Err(invalid("spectral weights must sit on (0,1]"));
                }
                return Ok(None);
            }
            MeasureKind::Distortion(h) => h.clone(),
        }))
    }

    /// The distortion `h` behind the functional; `None` for spectra.
    pub fn distortion(&self) -> Option<DistortionFunction> {
        self.distortion_or_spectrum().ok().flatten()
    }

    /// `s * rho(d)`.
    pub fn evaluate(&self, d: &Distribution) -> Result<f64> {
        let v = match &self.kind {
            MeasureKind::Var(a) => super::var(d, *a)?,
            MeasureKind::Es(a) => super::es(d, *a)?,
            MeasureKind::Ms(a) => super::ms(d, *a)?,
            MeasureKind::Mean => super::mean(d)?,
            MeasureKind::QuantileMix { alpha, c } => super::quantile_mix(d, *alpha, *c)?,
            MeasureKind::EndpointMix(c) => super::endpoint_mix(d, *c)?,
            MeasureKind::MinMaxVar(a) => {
                super::choquet(d, &DistortionFunction::minmaxvar(*a)?, 1.0)?
            }
            MeasureKind::GenSpectral(delta) => super::gen_spectral(d, delta)?,
            MeasureKind::Distortion(h) => super::choquet(d, h, 1.0)?,
        };
        Ok(self.scale * v)
    }
}

impl fmt::Display for RiskMeasureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut keys: Vec<String> = Vec::new();
        match &self.kind {
            MeasureKind::Var(a) => write!(f, "var@{a}")?,
            MeasureKind::Es(a) => write!(f, "es@{a}")?,
            MeasureKind::Ms(a) => write!(f, "ms@{a}")?,
            MeasureKind::Mean => write!(f, "mean")?,
            MeasureKind::QuantileMix { alpha, c } => {
                write!(f, "qmix@{alpha}")?;
                keys.push(format!("c={c}"));
            }
            MeasureKind::EndpointMix(c) => {
                write!(f, "endpoint")?;
                keys.push(format!("c={c}"));
            }
            MeasureKind::MinMaxVar(a) => {
                write!(f, "minmaxvar")?;
                keys.push(format!("alpha={a}"));
            }
            MeasureKind::GenSpectral(delta) => {
                write!(f, "gspec")?;
                for (u, w) in delta.atoms().iter().zip(delta.probs()) {
                    keys.push(format!("{u}={w}"));
                }
            }
            MeasureKind::Distortion(h) => write!(f, "distortion[{:?}]", h.kind())?,
        }
        if self.scale != 1.0 {
            keys.push(format!("s={}", self.scale));
        }
        if !keys.is_empty() {
            write!(f, ":{}", keys.join(","))?;
        }
        Ok(())
    }
}

fn num(field: &str, text: &str) -> Result<f64> {
    text.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| RiskError::Parse(format!("{field}: `{text}` is not a number")))
}

impl FromStr for RiskMeasureSpec {
    type Err = RiskError;

    /// `name[@alpha][:key=value,...]`.
    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        let (head, opts) = match text.split_once(':') {
            Some((h, o)) => (h, o),
            None => (text, ""),
        };
        let (name, level) = match head.split_once('@') {
            Some((n, a)) => (n.trim(), Some(num("alpha", a)?)),
            None => (head.trim(), None),
        };
        let mut pairs: Vec<(String, String)> = Vec::new();
        for item in opts.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| RiskError::Parse(format!("option `{item}` is not key=value")))?;
            pairs.push((k.trim().to_ascii_lowercase(), v.trim().to_string()));
        }
        let mut scale = 1.0;
        let mut named: Vec<(String, f64)> = Vec::new();
        let mut spectrum: Vec<(f64, f64)> = Vec::new();
        for (k, v) in pairs {
            if k == "s" {
                scale = num("s", &v)?;
            } else if name.eq_ignore_ascii_case("gspec") {
                spectrum.push((num("atom", &k)?, num("weight", &v)?));
            } else {
                named.push((k, num("option", &v)?));
            }
        }
        let take = |key: &str| named.iter().find(|(k, _)| k == key).map(|(_, v)| *v);
        let need_level = || {
            level.ok_or_else(|| {
                RiskError::Parse(format!("`{name}` needs a level, as in {name}@0.99"))
            })
        };
        let known: &[&str] = match name.to_ascii_lowercase().as_str() {
            "qmix" | "endpoint" => &["c"],
            "minmaxvar" => &["alpha"],
            _ => &[],
        };
        if let Some((k, _)) = named.iter().find(|(k, _)| !known.contains(&k.as_str())) {
            return Err(RiskError::Parse(format!("`{name}` has no option `{k}`")));
        }
        let kind = match name.to_ascii_lowercase().as_str() {
            "var" => MeasureKind::Var(need_level()?),
            "es" => MeasureKind::Es(need_level()?),
            "ms" => MeasureKind::Ms(need_level()?),
            "mean" => MeasureKind::Mean,
            "qmix" => MeasureKind::QuantileMix {
                alpha: need_level()?,
                c: take("c").ok_or_else(|| RiskError::Parse("qmix needs c=<weight>".into()))?,
            },
            "endpoint" => MeasureKind::EndpointMix(
                take("c").ok_or_else(|| RiskError::Parse("endpoint needs c=<weight>".into()))?,
            ),
            "minmaxvar" => MeasureKind::MinMaxVar(
                take("alpha")
                    .or(level)
                    .ok_or_else(|| RiskError::Parse("minmaxvar needs alpha=<value>".into()))?,
            ),
            "gspec" => MeasureKind::GenSpectral(
                DiscreteDistribution::from_pairs(&spectrum)
                    .map_err(|e| RiskError::Parse(format!("gspec weights: {e}")))?,
            ),
            other => return Err(RiskError::Parse(format!("unknown measure `{other}`"))),
        };
        let spec = RiskMeasureSpec::new(kind).map_err(|e| RiskError::Parse(e.to_string()))?;
        spec.with_scale(scale)
            .map_err(|e| RiskError::Parse(e.to_string()))
    }
}
