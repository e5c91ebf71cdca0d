use std::str::FromStr;

use crate::error::{Result, SaleError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingMode {
    Strong,
    Weak,
}

impl ScalingMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Strong => "strong",
            Self::Weak => "weak",
        }
    }
}

impl FromStr for ScalingMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "strong" => Ok(Self::Strong),
            "weak" => Ok(Self::Weak),
            other => Err(format!("unknown scaling mode '{other}' (expected strong|weak)")),
        }
    }
}

/// Wall time of one run in a scaling suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRecord {
    pub mode: ScalingMode,
    pub cores: usize,
    pub time: f64,
}

/// Parallel efficiency of each record: `T1/Tn` for weak scaling,
/// `T1/(n·Tn)` for strong scaling. Records of the other mode are ignored.
pub fn efficiency(records: &[ScalingRecord], mode: ScalingMode) -> Result<Vec<(usize, f64)>> {
    let of_mode: Vec<_> = records.iter().filter(|r| r.mode == mode).collect();
    let t1 = of_mode.iter().find(|r| r.cores == 1).ok_or(SaleError::MissingBaseline)?.time;
    Ok(of_mode
        .iter()
        .map(|r| {
            let e = if r.cores == 1 {
                1.0
            } else {
                match mode {
                    ScalingMode::Weak => t1 / r.time,
                    ScalingMode::Strong => t1 / (r.cores as f64 * r.time),
                }
            };
            (r.cores, e)
        })
        .collect())
}
