//! Learning-rate schedules.
//!
//! A [`Schedule`] holds the per-step multipliers `eta_1..eta_T`. The base
//! learning-rate is kept separate (it is the `gamma` of the bound module), so
//! every generator here peaks at 1 except [`make_polynomial_decay`], which
//! returns `(T + 1 - t)^alpha` verbatim.
//!
//! All schedules reach zero at the virtual step `T + 1`; that zero is never
//! stored, so every stored value is strictly positive.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::table::Table;

/// Positive step-size multipliers for steps `t = 1..=T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Schedule {
    values: Vec<f64>,
}

impl Schedule {
    /// Wrap raw multipliers; every value must be positive and finite.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidHorizon(0));
        }
        if let Some((i, &v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::InvalidScheduleValue { t: i + 1, value: v });
        }
        Ok(Self { values })
    }

    pub fn horizon(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Multiplier at step `t` (1-based). Returns 0 at the virtual step `T + 1`.
    pub fn eta(&self, t: usize) -> f64 {
        assert!(t >= 1, "schedule steps are 1-based");
        if t == self.values.len() + 1 {
            0.0
        } else {
            self.values[t - 1]
        }
    }

    /// Multiply every value by `factor`. The result may exceed 1.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        ensure_positive("scale factor", factor)?;
        Self::from_values(self.values.iter().map(|v| v * factor).collect())
    }

    /// Restrict to the first `t` steps.
    pub fn truncated(&self, t: usize) -> Result<Self> {
        if t == 0 || t > self.horizon() {
            return Err(Error::HorizonOutOfRange {
                t,
                horizon: self.horizon(),
            });
        }
        Ok(Self {
            values: self.values[..t].to_vec(),
        })
    }

    /// `(t, eta)` table.
    pub fn to_table(&self) -> Table {
        let mut table = Table::new(["t", "eta"]);
        for (i, &v) in self.values.iter().enumerate() {
            table.push(vec![(i + 1).into(), v.into()]);
        }
        table
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.values).expect("f64 slice serializes")
    }
}

impl TryFrom<Vec<f64>> for Schedule {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Schedule::from_values(values)
    }
}

impl From<Schedule> for Vec<f64> {
    fn from(s: Schedule) -> Self {
        s.values
    }
}

/// Shape of the decay phase of a warmup-stable-decay schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CooldownShape {
    Linear,
    OneMinusSqrt,
}

impl CooldownShape {
    /// Multiplier at relative cooldown progress `x = (t - T0) / (T + 1 - T0)`.
    #[inline]
    pub fn factor(self, x: f64) -> f64 {
        match self {
            CooldownShape::Linear => 1.0 - x,
            CooldownShape::OneMinusSqrt => 1.0 - x.sqrt(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CooldownShape::Linear => "linear",
            CooldownShape::OneMinusSqrt => "1-sqrt",
        }
    }
}

impl fmt::Display for CooldownShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CooldownShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(CooldownShape::Linear),
            "1-sqrt" | "one-minus-sqrt" | "sqrt" => Ok(CooldownShape::OneMinusSqrt),
            other => Err(Error::InvalidParameter(format!(
                "unknown cooldown shape `{other}` (expected linear or 1-sqrt)"
            ))),
        }
    }
}

fn check_horizon(horizon: usize) -> Result<()> {
    if horizon == 0 {
        Err(Error::InvalidHorizon(0))
    } else {
        Ok(())
    }
}

fn check_fraction(c: f64) -> Result<()> {
    if c.is_finite() && c > 0.0 && c <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidFraction(c))
    }
}

/// First step of the cooldown: `T0 = clamp(T - round(c * T), 1, T)`.
pub fn cooldown_start(horizon: usize, fraction: f64) -> Result<usize> {
    check_horizon(horizon)?;
    check_fraction(fraction)?;
    let len = (fraction * horizon as f64).round() as usize;
    Ok(horizon.saturating_sub(len).clamp(1, horizon))
}

fn cooldown_value(t: usize, start: usize, horizon: usize, shape: CooldownShape) -> f64 {
    let x = (t - start) as f64 / (horizon + 1 - start) as f64;
    shape.factor(x)
}

pub fn make_constant(horizon: usize) -> Result<Schedule> {
    check_horizon(horizon)?;
    Ok(Schedule {
        values: vec![1.0; horizon],
    })
}

/// Constant at 1 up to `T0`, then a cooldown of the given shape reaching 0 at `T + 1`.
pub fn make_wsd(horizon: usize, fraction: f64, shape: CooldownShape) -> Result<Schedule> {
    let start = cooldown_start(horizon, fraction)?;
    Ok(wsd_from_start(horizon, start, shape))
}

/// Warmup-stable-decay schedule with an explicit cooldown start step `T0`.
pub fn make_wsd_with_start(
    horizon: usize,
    start: usize,
    shape: CooldownShape,
) -> Result<Schedule> {
    check_horizon(horizon)?;
    if start == 0 || start > horizon {
        return Err(Error::InvalidCooldown {
            horizon,
            cooldown_start: start,
        });
    }
    Ok(wsd_from_start(horizon, start, shape))
}

fn wsd_from_start(horizon: usize, start: usize, shape: CooldownShape) -> Schedule {
    let values = (1..=horizon)
        .map(|t| {
            if t < start {
                1.0
            } else {
                cooldown_value(t, start, horizon, shape)
            }
        })
        .collect();
    Schedule { values }
}

/// Half-cosine from 1 down to `final_fraction`, restarted every
/// `round(cycle_length * T)` steps.
pub fn make_cosine(horizon: usize, final_fraction: f64, cycle_length: f64) -> Result<Schedule> {
    check_horizon(horizon)?;
    if !(final_fraction.is_finite() && (0.0..1.0).contains(&final_fraction)) {
        return Err(Error::InvalidParameter(format!(
            "cosine final fraction {final_fraction} must lie in [0, 1)"
        )));
    }
    if !(cycle_length.is_finite() && cycle_length > 0.0 && cycle_length <= 1.0) {
        return Err(Error::InvalidCycle(cycle_length));
    }
    let cycle = ((cycle_length * horizon as f64).round() as usize).max(1);
    let values = (1..=horizon)
        .map(|t| {
            let phase = ((t - 1) % cycle) as f64 / cycle as f64;
            final_fraction + (1.0 - final_fraction) * 0.5 * (1.0 + (PI * phase).cos())
        })
        .collect();
    Schedule::from_values(values)
}

/// `eta_t = (T + 1 - t) / T`; identical to `make_wsd(T, 1.0, Linear)`.
pub fn make_linear_decay(horizon: usize) -> Result<Schedule> {
    make_wsd(horizon, 1.0, CooldownShape::Linear)
}

/// `eta_t = 1 / sqrt(t)`.
pub fn make_inv_sqrt(horizon: usize) -> Result<Schedule> {
    check_horizon(horizon)?;
    Ok(Schedule {
        values: (1..=horizon).map(|t| 1.0 / (t as f64).sqrt()).collect(),
    })
}

/// `eta_t = 1 - sqrt((t - 1) / T)`.
pub fn make_one_minus_sqrt(horizon: usize) -> Result<Schedule> {
    check_horizon(horizon)?;
    let h = horizon as f64;
    Ok(Schedule {
        values: (1..=horizon)
            .map(|t| 1.0 - ((t - 1) as f64 / h).sqrt())
            .collect(),
    })
}

/// `eta_t = (T + 1 - t)^alpha`. Not normalized: the peak is `T^alpha`.
pub fn make_polynomial_decay(horizon: usize, alpha: f64) -> Result<Schedule> {
    check_horizon(horizon)?;
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidExponent(alpha));
    }
    Schedule::from_values(
        (1..=horizon)
            .map(|t| ((horizon + 1 - t) as f64).powf(alpha))
            .collect(),
    )
}

/// Keep `base` up to `T0` and scale a cooldown of `shape` by `base[T0]` afterwards.
pub fn compose_with_cooldown(
    base: &Schedule,
    fraction: f64,
    shape: CooldownShape,
) -> Result<Schedule> {
    let horizon = base.horizon();
    let start = cooldown_start(horizon, fraction)?;
    let anchor = base.eta(start);
    let values = (1..=horizon)
        .map(|t| {
            if t < start {
                base.eta(t)
            } else {
                anchor * cooldown_value(t, start, horizon, shape)
            }
        })
        .collect();
    Schedule::from_values(values)
}

/// The short wsd run a continued-training schedule is built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShortRun {
    pub horizon: usize,
    pub fraction: f64,
    pub shape: CooldownShape,
}

/// Continued-training schedule: 1 until the short run's cooldown start, `rho`
/// until the long run's cooldown start, then a `rho`-scaled cooldown ending at
/// `long_horizon + 1`.
pub fn make_extended(
    short: ShortRun,
    long_horizon: usize,
    rho: f64,
    long_fraction: f64,
) -> Result<Schedule> {
    if !(rho.is_finite() && rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "rho {rho} must lie in (0, 1]"
        )));
    }
    let short_start = cooldown_start(short.horizon, short.fraction)?;
    if long_horizon <= short.horizon {
        return Err(Error::InfeasibleExtension {
            short_start,
            long_start: short_start,
        });
    }
    let long_start = cooldown_start(long_horizon, long_fraction)?;
    if long_start <= short_start {
        return Err(Error::InfeasibleExtension {
            short_start,
            long_start,
        });
    }
    let values = (1..=long_horizon)
        .map(|t| {
            if t < short_start {
                1.0
            } else if t < long_start {
                rho
            } else {
                rho * cooldown_value(t, long_start, long_horizon, short.shape)
            }
        })
        .collect();
    Schedule::from_values(values)
}

/// Textual schedule description, `name:key=value,...`.
///
/// | name       | keys                                   |
/// |------------|----------------------------------------|
/// | `constant` | `T`                                    |
/// | `wsd`      | `T`, `c`, `shape` (default linear)     |
/// | `cosine`   | `T`, `final` (0), `cycle` (1)          |
/// | `linear`   | `T`                                    |
/// | `invsqrt`  | `T`, optional `c` and `shape`          |
/// | `onesqrt`  | `T`                                    |
/// | `poly`     | `T`, `alpha`                           |
/// | `extended` | `T1`, `c`, `T2`, `rho`, `c_long` (= c), `shape` |
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScheduleSpec {
    Constant {
        horizon: usize,
    },
    Wsd {
        horizon: usize,
        fraction: f64,
        shape: CooldownShape,
    },
    Cosine {
        horizon: usize,
        final_fraction: f64,
        cycle_length: f64,
    },
    Linear {
        horizon: usize,
    },
    InvSqrt {
        horizon: usize,
        cooldown: Option<(f64, CooldownShape)>,
    },
    OneMinusSqrt {
        horizon: usize,
    },
    Poly {
        horizon: usize,
        alpha: f64,
    },
    Extended {
        short: ShortRun,
        long_horizon: usize,
        rho: f64,
        long_fraction: f64,
    },
}

impl ScheduleSpec {
    pub fn build(&self) -> Result<Schedule> {
        match *self {
            ScheduleSpec::Constant { horizon } => make_constant(horizon),
            ScheduleSpec::Wsd {
                horizon,
                fraction,
                shape,
            } => make_wsd(horizon, fraction, shape),
            ScheduleSpec::Cosine {
                horizon,
                final_fraction,
                cycle_length,
            } => make_cosine(horizon, final_fraction, cycle_length),
            ScheduleSpec::Linear { horizon } => make_linear_decay(horizon),
            ScheduleSpec::InvSqrt { horizon, cooldown } => {
                let base = make_inv_sqrt(horizon)?;
                match cooldown {
                    Some((c, shape)) => compose_with_cooldown(&base, c, shape),
                    None => Ok(base),
                }
            }
            ScheduleSpec::OneMinusSqrt { horizon } => make_one_minus_sqrt(horizon),
            ScheduleSpec::Poly { horizon, alpha } => make_polynomial_decay(horizon, alpha),
            ScheduleSpec::Extended {
                short,
                long_horizon,
                rho,
                long_fraction,
            } => make_extended(short, long_horizon, rho, long_fraction),
        }
    }

    pub fn horizon(&self) -> usize {
        match *self {
            ScheduleSpec::Constant { horizon }
            | ScheduleSpec::Wsd { horizon, .. }
            | ScheduleSpec::Cosine { horizon, .. }
            | ScheduleSpec::Linear { horizon }
            | ScheduleSpec::InvSqrt { horizon, .. }
            | ScheduleSpec::OneMinusSqrt { horizon }
            | ScheduleSpec::Poly { horizon, .. } => horizon,
            ScheduleSpec::Extended { long_horizon, .. } => long_horizon,
        }
    }

    /// Cooldown start step, for schedules that have one.
    pub fn cooldown_start(&self) -> Option<usize> {
        match *self {
            ScheduleSpec::Wsd {
                horizon, fraction, ..
            } => cooldown_start(horizon, fraction).ok(),
            ScheduleSpec::InvSqrt {
                horizon,
                cooldown: Some((c, _)),
            } => cooldown_start(horizon, c).ok(),
            ScheduleSpec::Linear { .. } => Some(1),
            ScheduleSpec::Extended {
                long_horizon,
                long_fraction,
                ..
            } => cooldown_start(long_horizon, long_fraction).ok(),
            _ => None,
        }
    }
}

impl fmt::Display for ScheduleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleSpec::Constant { horizon } => write!(f, "constant:T={horizon}"),
            ScheduleSpec::Wsd {
                horizon,
                fraction,
                shape,
            } => write!(f, "wsd:T={horizon},c={fraction},shape={shape}"),
            ScheduleSpec::Cosine {
                horizon,
                final_fraction,
                cycle_length,
            } => write!(
                f,
                "cosine:T={horizon},final={final_fraction},cycle={cycle_length}"
            ),
            ScheduleSpec::Linear { horizon } => write!(f, "linear:T={horizon}"),
            ScheduleSpec::InvSqrt { horizon, cooldown } => match cooldown {
                Some((c, shape)) => write!(f, "invsqrt:T={horizon},c={c},shape={shape}"),
                None => write!(f, "invsqrt:T={horizon}"),
            },
            ScheduleSpec::OneMinusSqrt { horizon } => write!(f, "onesqrt:T={horizon}"),
            ScheduleSpec::Poly { horizon, alpha } => write!(f, "poly:T={horizon},alpha={alpha}"),
            ScheduleSpec::Extended {
                short,
                long_horizon,
                rho,
                long_fraction,
            } => write!(
                f,
                "extended:T1={},c={},T2={long_horizon},rho={rho},c_long={long_fraction},shape={}",
                short.horizon, short.fraction, short.shape
            ),
        }
    }
}

struct KeyValues<'a> {
    spec: &'a str,
    pairs: Vec<(&'a str, &'a str)>,
    used: Vec<bool>,
}

impl<'a> KeyValues<'a> {
    fn parse(spec: &'a str, body: &'a str) -> Result<Self> {
        let mut pairs = Vec::new();
        for item in body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item.split_once('=').ok_or_else(|| Error::ScheduleSpec {
                spec: spec.to_string(),
                reason: format!("expected key=value, got `{item}`"),
            })?;
            let k = k.trim();
            if pairs.iter().any(|(existing, _)| *existing == k) {
                return Err(Error::ScheduleSpec {
                    spec: spec.to_string(),
                    reason: format!("duplicate key `{k}`"),
                });
            }
            pairs.push((k, v.trim()));
        }
        let used = vec![false; pairs.len()];
        Ok(Self { spec, pairs, used })
    }

    fn err(&self, reason: String) -> Error {
        Error::ScheduleSpec {
            spec: self.spec.to_string(),
            reason,
        }
    }

    fn raw(&mut self, key: &str) -> Option<&'a str> {
        let idx = self.pairs.iter().position(|(k, _)| *k == key)?;
        self.used[idx] = true;
        Some(self.pairs[idx].1)
    }

    fn parse_value<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| self.err(format!("invalid value `{v}` for `{key}`"))),
        }
    }

    fn required<T: FromStr>(&mut self, key: &str) -> Result<T> {
        self.parse_value(key)?
            .ok_or_else(|| self.err(format!("missing key `{key}`")))
    }

    fn horizon(&mut self, key: &str) -> Result<usize> {
        // accept 4e3 style horizons as long as they are integral
        let v: f64 = self.required(key)?;
        if v.fract() != 0.0 || v < 0.0 {
            return Err(self.err(format!("`{key}` must be a non-negative integer")));
        }
        Ok(v as usize)
    }

    fn shape(&mut self) -> Result<Option<CooldownShape>> {
        match self.raw("shape") {
            None => Ok(None),
            Some(v) => v.parse().map(Some),
        }
    }

    fn finish(self) -> Result<()> {
        let unknown: Vec<&str> = self
            .pairs
            .iter()
            .zip(&self.used)
            .filter(|(_, used)| !**used)
            .map(|((k, _), _)| *k)
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(self.err(format!("unknown key(s): {}", unknown.join(", "))))
        }
    }
}

impl FromStr for ScheduleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, body) = s.split_once(':').unwrap_or((s, ""));
        let mut kv = KeyValues::parse(s, body)?;
        let spec = match name {
            "constant" => ScheduleSpec::Constant {
                horizon: kv.horizon("T")?,
            },
            "wsd" => ScheduleSpec::Wsd {
                horizon: kv.horizon("T")?,
                fraction: kv.required("c")?,
                shape: kv.shape()?.unwrap_or(CooldownShape::Linear),
            },
            "cosine" => ScheduleSpec::Cosine {
                horizon: kv.horizon("T")?,
                final_fraction: kv.parse_value("final")?.unwrap_or(0.0),
                cycle_length: kv.parse_value("cycle")?.unwrap_or(1.0),
            },
            "linear" => ScheduleSpec::Linear {
                horizon: kv.horizon("T")?,
            },
            "invsqrt" => {
                let horizon = kv.horizon("T")?;
                let c: Option<f64> = kv.parse_value("c")?;
                let shape = kv.shape()?;
                let cooldown = match (c, shape) {
                    (Some(c), shape) => Some((c, shape.unwrap_or(CooldownShape::Linear))),
                    (None, Some(_)) => {
                        return Err(kv.err("`shape` given without `c`".to_string()))
                    }
                    (None, None) => None,
                };
                ScheduleSpec::InvSqrt { horizon, cooldown }
            }
            "onesqrt" => ScheduleSpec::OneMinusSqrt {
                horizon: kv.horizon("T")?,
            },
            "poly" => ScheduleSpec::Poly {
                horizon: kv.horizon("T")?,
                alpha: kv.required("alpha")?,
            },
            "extended" => {
                let short_horizon = kv.horizon("T1")?;
                let fraction: f64 = kv.required("c")?;
                let long_horizon = kv.horizon("T2")?;
                let rho = kv.required("rho")?;
                let long_fraction = kv.parse_value("c_long")?.unwrap_or(fraction);
                let shape = kv.shape()?.unwrap_or(CooldownShape::Linear);
                ScheduleSpec::Extended {
                    short: ShortRun {
                        horizon: short_horizon,
                        fraction,
                        shape,
                    },
                    long_horizon,
                    rho,
                    long_fraction,
                }
            }
            other => {
                return Err(Error::ScheduleSpec {
                    spec: s.to_string(),
                    reason: format!(
                        "unknown schedule `{other}` (expected constant, wsd, cosine, linear, invsqrt, onesqrt, poly, extended)"
                    ),
                })
            }
        };
        kv.finish()?;
        Ok(spec)
    }
}
