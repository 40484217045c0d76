use std::fmt;
use std::str::FromStr;

use serde::Serialize;

const MAX_POINTS: usize = 1_000_000;

/// A `start:stop:step` sweep, inclusive of `stop` up to rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, stop, step] = parts[..] else {
            return Err(format!("grid `{s}` must look like start:stop:step"));
        };
        let parse = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("`{v}` is not a number in grid `{s}`"));
        let (start, stop, step) = (parse(start)?, parse(stop)?, parse(step)?);
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err(format!("grid `{s}` has non-finite entries"));
        }
        if step <= 0.0 || stop < start {
            return Err(format!("grid `{s}` needs step > 0 and stop >= start"));
        }
        if (stop - start) / step >= MAX_POINTS as f64 {
            return Err(format!("grid `{s}` exceeds the cap of {MAX_POINTS} points"));
        }
        Ok(Grid { start, stop, step })
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

impl Serialize for Grid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_survive_rounding() {
        let g: Grid = "0.05:1.0:0.05".parse().unwrap();
        let p = g.points();
        assert_eq!(p.len(), 20);
        assert!((p[19] - 1.0).abs() < 1e-12);
        assert_eq!("0:10:0.01".parse::<Grid>().unwrap().points().len(), 1001);
    }

    #[test]
    fn rejects_bad_grids() {
        for bad in ["1:0:0.1", "0:1:0", "0:1", "a:1:0.1", "0:1e9:1e-3"] {
            assert!(bad.parse::<Grid>().is_err(), "{bad}");
        }
    }
}
