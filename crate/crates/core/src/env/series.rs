use crate::scalar::Scalar;

use super::EnvError;

/// Time-indexed prices, aggregate target demands and PV generation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExogenousSeries<S: Scalar = f64> {
    pub p_e: Vec<S>,
    pub p_g: Vec<S>,
    pub p_o: Vec<S>,
    pub demand_e: Vec<S>,
    pub demand_g: Vec<S>,
    pub demand_h: Vec<S>,
    pub pv: Vec<S>,
}

/// All exogenous values of one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExoSlot<S: Scalar = f64> {
    pub t: usize,
    pub p_e: S,
    pub p_g: S,
    pub p_o: S,
    pub demand_e: S,
    pub demand_g: S,
    pub demand_h: S,
    pub pv: S,
}

impl<S: Scalar> ExogenousSeries<S> {
    /// Series of `horizon` slots where every column holds one constant.
    pub fn constant(horizon: usize, slot: ExoSlot<S>) -> Self {
        Self {
            p_e: vec![slot.p_e; horizon],
            p_g: vec![slot.p_g; horizon],
            p_o: vec![slot.p_o; horizon],
            demand_e: vec![slot.demand_e; horizon],
            demand_g: vec![slot.demand_g; horizon],
            demand_h: vec![slot.demand_h; horizon],
            pv: vec![slot.pv; horizon],
        }
    }

    pub fn from_slots(slots: &[ExoSlot<S>]) -> Self {
        Self {
            p_e: slots.iter().map(|s| s.p_e).collect(),
            p_g: slots.iter().map(|s| s.p_g).collect(),
            p_o: slots.iter().map(|s| s.p_o).collect(),
            demand_e: slots.iter().map(|s| s.demand_e).collect(),
            demand_g: slots.iter().map(|s| s.demand_g).collect(),
            demand_h: slots.iter().map(|s| s.demand_h).collect(),
            pv: slots.iter().map(|s| s.pv).collect(),
        }
    }

    pub fn horizon(&self) -> usize {
        self.p_e.len()
    }

    pub fn columns(&self) -> [(&'static str, &Vec<S>); 7] {
        [
            ("p_e", &self.p_e),
            ("p_g", &self.p_g),
            ("p_o", &self.p_o),
            ("demand_e", &self.demand_e),
            ("demand_g", &self.demand_g),
            ("demand_h", &self.demand_h),
            ("pv", &self.pv),
        ]
    }

    pub fn slot(&self, t: usize) -> ExoSlot<S> {
        ExoSlot {
            t,
            p_e: self.p_e[t],
            p_g: self.p_g[t],
            p_o: self.p_o[t],
            demand_e: self.demand_e[t],
            demand_g: self.demand_g[t],
            demand_h: self.demand_h[t],
            pv: self.pv[t],
        }
    }

    /// Checks equal lengths, finiteness, non-negativity and `p_o <= p_e`.
    /// Row numbers in errors are 0-based slot indices.
    pub fn validate(&self) -> Result<(), EnvError> {
        let horizon = self.horizon();
        if horizon == 0 {
            return Err(EnvError::InvalidSeries {
                row: None,
                reason: "series is empty".into(),
            });
        }
        for (name, col) in self.columns() {
            if col.len() != horizon {
                return Err(EnvError::InvalidSeries {
                    row: None,
                    reason: format!("column {name} has {} rows, expected {horizon}", col.len()),
                });
            }
            for (t, v) in col.iter().enumerate() {
                if !v.is_finite() || *v < S::zero() {
                    return Err(EnvError::InvalidSeries {
                        row: Some(t),
                        reason: format!("{name} = {v} must be finite and non-negative"),
                    });
                }
            }
        }
        for t in 0..horizon {
            if self.p_o[t] > self.p_e[t] {
                return Err(EnvError::InvalidSeries {
                    row: Some(t),
                    reason: format!(
                        "sale price p_o = {} exceeds purchase price p_e = {}",
                        self.p_o[t], self.p_e[t]
                    ),
                });
            }
        }
        Ok(())
    }

    /// Multiplies all three demand columns by `factor`.
    pub fn scale_demand(&mut self, factor: S) {
        for col in [&mut self.demand_e, &mut self.demand_g, &mut self.demand_h] {
            for v in col.iter_mut() {
                *v *= factor;
            }
        }
    }

    /// Multiplies the PV column by `factor`.
    pub fn scale_pv(&mut self, factor: S) {
        for v in self.pv.iter_mut() {
            *v *= factor;
        }
    }

    pub fn cast<T: Scalar>(&self) -> ExogenousSeries<T> {
        let c = |col: &Vec<S>| col.iter().map(|x| T::lit(x.to_f64_lossy())).collect();
        ExogenousSeries {
            p_e: c(&self.p_e),
            p_g: c(&self.p_g),
            p_o: c(&self.p_o),
            demand_e: c(&self.demand_e),
            demand_g: c(&self.demand_g),
            demand_h: c(&self.demand_h),
            pv: c(&self.pv),
        }
    }
}
