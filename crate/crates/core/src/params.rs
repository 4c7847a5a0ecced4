use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// One mile in meters.
pub const METERS_PER_MILE: f64 = 1609.344;
/// One mile per hour in meters per second.
pub const MPS_PER_MPH: f64 = METERS_PER_MILE / 3600.0;

/// Traffic statistics and radio parameters for one road segment.
///
/// `lambda` is a spatial density (vehicles per meter, per direction). All
/// other quantities are SI: meters, meters per second, seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficParams {
    pub lambda: f64,
    pub range_r: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub hop_delay: f64,
    pub segment_length: f64,
}

impl Default for TrafficParams {
    fn default() -> Self {
        Self {
            lambda: 0.004,
            range_r: 250.0,
            v_min: 8.9,
            v_max: 22.4,
            hop_delay: 0.002,
            segment_length: 2000.0,
        }
    }
}

impl TrafficParams {
    pub fn validate(&self) -> Result<()> {
        positive("lambda", self.lambda)?;
        positive("range_r", self.range_r)?;
        positive("v_min", self.v_min)?;
        positive("v_max", self.v_max)?;
        positive("hop_delay", self.hop_delay)?;
        positive("segment_length", self.segment_length)?;
        if self.v_min > self.v_max {
            return Err(invalid(
                "v_min",
                format!("v_min {} exceeds v_max {}", self.v_min, self.v_max),
            ));
        }
        Ok(())
    }

    /// Mean of the uniform speed interval.
    pub fn v_eff(&self) -> f64 {
        0.5 * (self.v_min + self.v_max)
    }

    /// Dimensionless density `lambda * range_r`.
    pub fn lambda_r(&self) -> f64 {
        self.lambda * self.range_r
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }

    pub fn with_segment_length(self, segment_length: f64) -> Self {
        Self {
            segment_length,
            ..self
        }
    }

    /// Converts a temporal arrival rate (vehicles per second) into spatial
    /// density using the mean speed.
    pub fn lambda_from_arrival_rate(rate_per_second: f64, v_min: f64, v_max: f64) -> f64 {
        rate_per_second / (0.5 * (v_min + v_max))
    }
}

fn positive(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(
            field,
            format!("must be finite and > 0, got {value}"),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::EfdError;

    #[test]
    fn rejects_negative_range() {
        let p = TrafficParams {
            range_r: -5.0,
            ..Default::default()
        };
        match p.validate() {
            Err(EfdError::InvalidParameter { field, .. }) => assert_eq!(field, "range_r"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_inverted_speed_interval() {
        let p = TrafficParams {
            v_min: 30.0,
            v_max: 10.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn forty_mph_is_exact() {
        assert!((40.0 * MPS_PER_MPH - 17.8816).abs() < 1e-12);
    }
}
