//! Hardware-cost comparison between the cylinder architecture (antenna
//! elements plus SPDT switches) and the three-sector ULA with phase-shifter
//! hybrid beamforming. Unit prices are held in integer cents so the
//! tabulated totals reproduce exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A currency amount in integer cents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Money(pub i64);

impl Money {
    /// Round a dollar value to the nearest cent.
    pub fn from_dollars(d: f64) -> Self {
        Money((d * 100.0).round() as i64)
    }

    pub fn dollars(self) -> f64 {
        self.0 as f64 / 100.0
    }
}

/// Unit prices and system dimensions for the cost comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostInputs {
    /// Price of one antenna element.
    pub c_an: Money,
    /// Price of one phase shifter.
    pub c_ps: Money,
    /// Price of one SPDT switch.
    pub c_sw: Money,
    /// Elements per sub-array / per sector ULA.
    pub m: usize,
    /// Number of rings in the cylinder.
    pub n: usize,
    /// RF chains.
    pub n_rf: usize,
}

impl CostInputs {
    pub fn validate(&self) -> Result<()> {
        if self.c_an.0 < 0 || self.c_ps.0 < 0 || self.c_sw.0 < 0 {
            return Err(Error::invalid("unit costs must be nonnegative"));
        }
        Ok(())
    }
}

/// Cylinder hardware cost: `2 N M c_an + N_RF N c_sw`.
pub fn cost_cylinder(inputs: &CostInputs) -> Money {
    let elements = 2 * inputs.n as i64 * inputs.m as i64 * inputs.c_an.0;
    let switches = inputs.n_rf as i64 * inputs.n as i64 * inputs.c_sw.0;
    Money(elements + switches)
}

/// Sectored-ULA hardware cost: `3 N_RF M c_ps + 3 M c_an`.
pub fn cost_ula(inputs: &CostInputs) -> Money {
    let shifters = 3 * inputs.n_rf as i64 * inputs.m as i64 * inputs.c_ps.0;
    let elements = 3 * inputs.m as i64 * inputs.c_an.0;
    Money(shifters + elements)
}

/// Antenna-element price at which the two systems cost the same:
/// `(3 N_RF M c_ps - N_RF N c_sw) / (2 N M - 3 M)`, in dollars.
pub fn breakeven_antenna_cost(inputs: &CostInputs) -> Result<f64> {
    let denom = 2 * inputs.n as i64 * inputs.m as i64 - 3 * inputs.m as i64;
    if denom == 0 {
        return Err(Error::numerical("degenerate geometry: 2NM = 3M"));
    }
    let numer = 3 * inputs.n_rf as i64 * inputs.m as i64 * inputs.c_ps.0
        - inputs.n_rf as i64 * inputs.n as i64 * inputs.c_sw.0;
    Ok(numer as f64 / denom as f64 / 100.0)
}

/// The exported cost report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostReport {
    pub cost_cylinder: f64,
    pub cost_ula: f64,
    pub ratio: f64,
    pub breakeven_c_an: f64,
}

pub fn cost_report(inputs: &CostInputs) -> Result<CostReport> {
    inputs.validate()?;
    let cyl = cost_cylinder(inputs);
    let ula = cost_ula(inputs);
    Ok(CostReport {
        cost_cylinder: cyl.dollars(),
        cost_ula: ula.dollars(),
        ratio: cyl.0 as f64 / ula.0 as f64,
        breakeven_c_an: breakeven_antenna_cost(inputs)?,
    })
}
