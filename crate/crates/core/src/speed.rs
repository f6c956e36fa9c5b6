//! Speed oracles: the earliest time by which a given amount of work can be completed.

use num::traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{format_q, from_f64, serde_q_vec, to_f64, Q};

/// `f(v) = inf { b : integral_0^b s(t) dt >= v }`.
pub trait SpeedOracle: Sync {
    /// Exact oracle value.
    fn time(&self, volume: &Q) -> Result<Q>;

    /// Floating point oracle value, used inside dynamic programs.
    fn time_f64(&self, volume: f64) -> Result<f64> {
        self.time(&from_f64(volume.max(0.0))?).map(|t| to_f64(&t))
    }
}

/// Piecewise-constant speed function; the last segment extends to infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpeed", into = "RawSpeed")]
pub struct PiecewiseConstantSpeed {
    breakpoints: Vec<Q>,
    speeds: Vec<Q>,
    cumulative: Vec<Q>,
    breakpoints_f: Vec<f64>,
    speeds_f: Vec<f64>,
    cumulative_f: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawSpeed {
    #[serde(with = "serde_q_vec")]
    breakpoints: Vec<Q>,
    #[serde(with = "serde_q_vec")]
    speeds: Vec<Q>,
}

impl TryFrom<RawSpeed> for PiecewiseConstantSpeed {
    type Error = Error;
    fn try_from(r: RawSpeed) -> Result<Self> {
        PiecewiseConstantSpeed::new(r.breakpoints, r.speeds)
    }
}

impl From<PiecewiseConstantSpeed> for RawSpeed {
    fn from(s: PiecewiseConstantSpeed) -> Self {
        RawSpeed { breakpoints: s.breakpoints, speeds: s.speeds }
    }
}

impl PiecewiseConstantSpeed {
    /// Segment `i` runs at `speeds[i]` on `[breakpoints[i], breakpoints[i+1])`.
    pub fn new(breakpoints: Vec<Q>, speeds: Vec<Q>) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints.len() != speeds.len() {
            return Err(Error::InvalidParameter("speed needs matching nonempty breakpoints and speeds".into()));
        }
        if !breakpoints[0].is_zero() {
            return Err(Error::InvalidParameter("first breakpoint must be 0".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("breakpoints must be strictly increasing".into()));
        }
        if speeds.iter().any(|s| s.is_negative()) {
            return Err(Error::InvalidParameter("speeds must be nonnegative".into()));
        }
        let mut cumulative = Vec::with_capacity(speeds.len());
        let mut acc = Q::zero();
        for i in 0..speeds.len() {
            cumulative.push(acc.clone());
            if i + 1 < speeds.len() {
                acc += &speeds[i] * (&breakpoints[i + 1] - &breakpoints[i]);
            }
        }
        let f = |xs: &[Q]| xs.iter().map(to_f64).collect::<Vec<_>>();
        Ok(PiecewiseConstantSpeed {
            breakpoints_f: f(&breakpoints),
            speeds_f: f(&speeds),
            cumulative_f: f(&cumulative),
            breakpoints,
            speeds,
            cumulative,
        })
    }

    /// Constant speed `s > 0`.
    pub fn constant(s: Q) -> Result<Self> {
        if !s.is_positive() {
            return Err(Error::InvalidParameter("constant speed must be positive".into()));
        }
        PiecewiseConstantSpeed::new(vec![Q::zero()], vec![s])
    }

    pub fn unit() -> Self {
        PiecewiseConstantSpeed::constant(crate::rational::qi(1)).expect("unit speed")
    }

    pub fn breakpoints(&self) -> &[Q] {
        &self.breakpoints
    }

    pub fn speeds(&self) -> &[Q] {
        &self.speeds
    }

    /// Work completed by the end of each segment start, i.e. at every breakpoint.
    pub fn capacities_at_breakpoints(&self) -> &[Q] {
        &self.cumulative
    }

    /// Total work capacity, `None` when unbounded.
    pub fn total_capacity(&self) -> Option<Q> {
        let last = self.speeds.len() - 1;
        if self.speeds[last].is_positive() {
            None
        } else {
            Some(self.cumulative[last].clone())
        }
    }

    /// Work completed by time `t`.
    pub fn work_by(&self, t: &Q) -> Q {
        let i = self.breakpoints.partition_point(|b| b <= t) - 1;
        &self.cumulative[i] + &self.speeds[i] * (t - &self.breakpoints[i])
    }

    fn segment_for(&self, v: &Q) -> Result<usize> {
        let last = self.speeds.len() - 1;
        // first segment whose end capacity reaches v
        let (mut i, mut hi) = (0usize, last);
        while i < hi {
            let mid = (i + hi) / 2;
            if self.cumulative[mid + 1] < *v {
                i = mid + 1;
            } else {
                hi = mid;
            }
        }
        if i == last && !self.speeds[last].is_positive() {
            return Err(Error::InsufficientCapacity {
                capacity: format_q(&self.cumulative[last]),
                requested: format_q(v),
            });
        }
        Ok(i)
    }
}

impl SpeedOracle for PiecewiseConstantSpeed {
    fn time(&self, volume: &Q) -> Result<Q> {
        if volume.is_negative() {
            return Err(Error::InvalidParameter(format!("negative volume {}", format_q(volume))));
        }
        if volume.is_zero() {
            return Ok(Q::zero());
        }
        let i = self.segment_for(volume)?;
        Ok(&self.breakpoints[i] + (volume - &self.cumulative[i]) / &self.speeds[i])
    }

    fn time_f64(&self, volume: f64) -> Result<f64> {
        if volume <= 0.0 {
            return Ok(0.0);
        }
        let last = self.speeds_f.len() - 1;
        let mut lo = 0usize;
        let mut hi = last;
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.cumulative_f[mid + 1] < volume {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        let i = lo;
        if self.speeds_f[i] <= 0.0 {
            if i == last {
                let cap = self.cumulative_f[last];
                if volume <= cap * (1.0 + 1e-12) {
                    return Ok(self.breakpoints_f[last]);
                }
                return Err(Error::InsufficientCapacity {
                    capacity: format!("{cap}"),
                    requested: format!("{volume}"),
                });
            }
            return Ok(self.breakpoints_f[i + 1]);
        }
        Ok(self.breakpoints_f[i] + (volume - self.cumulative_f[i]) / self.speeds_f[i])
    }
}

/// Concave oracle `f(x) = x^p` for a rational exponent `0 < p <= 1`.
#[derive(Debug, Clone)]
pub struct PowerOracle {
    p: f64,
    num: i32,
    den: i32,
}

impl PowerOracle {
    pub fn new(exponent: &Q) -> Result<Self> {
        if !exponent.is_positive() {
            return Err(Error::InvalidParameter("oracle exponent must be positive".into()));
        }
        let num = exponent.numer().to_i32().unwrap_or(0);
        let den = exponent.denom().to_i32().unwrap_or(0);
        Ok(PowerOracle { p: to_f64(exponent), num, den })
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }
}

impl SpeedOracle for PowerOracle {
    fn time(&self, volume: &Q) -> Result<Q> {
        if volume.is_zero() {
            return Ok(Q::zero());
        }
        from_f64(self.time_f64(to_f64(volume))?)
    }

    fn time_f64(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(0.0);
        }
        let y = x.powf(self.p);
        if self.num > 0 && self.den > 0 && self.den <= 16 && self.num <= 16 {
            // one Newton step on y^den = x^num
            let g = y.powi(self.den) - x.powi(self.num);
            let dg = self.den as f64 * y.powi(self.den - 1);
            if g.is_finite() && dg.is_finite() && dg > 0.0 {
                let y1 = y - g / dg;
                if y1 > 0.0 && (y1 - y).abs() <= 1e-12 * y {
                    return Ok(y1);
                }
            }
        }
        Ok(y)
    }
}
