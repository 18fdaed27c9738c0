use crate::error::{Error, Result};

use super::DiagnosticsRecord;

pub const DEFAULT_GRAD_THRESHOLD: f64 = 20.0;

/// Watches `‖∇u(t)‖` for a crossing of `grad_threshold × ‖∇u₀‖`.
///
/// The first record fixes the reference gradient norm and, with the second,
/// the direction of time; records must then stay monotone in that direction.
#[derive(Debug, Clone, PartialEq)]
pub struct BlowupMonitor {
    pub grad_threshold: f64,
    pub triggered: bool,
    pub t_trigger: Option<f64>,
    pub peak_at_trigger: Option<Vec<f64>>,
    reference: Option<f64>,
    direction: f64,
    last: Option<(f64, f64, Vec<f64>)>,
}

impl Default for BlowupMonitor {
    fn default() -> Self {
        BlowupMonitor::new(DEFAULT_GRAD_THRESHOLD)
    }
}

impl BlowupMonitor {
    pub fn new(grad_threshold: f64) -> BlowupMonitor {
        BlowupMonitor {
            grad_threshold,
            triggered: false,
            t_trigger: None,
            peak_at_trigger: None,
            reference: None,
            direction: 0.0,
            last: None,
        }
    }

    /// Gradient norm the threshold is measured against, once known.
    pub fn reference(&self) -> Option<f64> {
        self.reference
    }

    /// Feeds one record; see [`update_blowup_monitor`].
    pub fn update(&mut self, rec: &DiagnosticsRecord) -> Result<()> {
        let reference = *self.reference.get_or_insert(rec.grad_norm);
        if let Some((t_prev, _, _)) = &self.last {
            let dt = rec.t - t_prev;
            if dt == 0.0 || (self.direction != 0.0 && dt.signum() != self.direction) {
                return Err(Error::Precondition(format!(
                    "blow-up monitor got out-of-order record at t = {} after t = {}",
                    rec.t, t_prev
                )));
            }
            self.direction = dt.signum();
        }
        let ratio = if reference > 0.0 {
            rec.grad_norm / reference
        } else {
            0.0
        };
        if !self.triggered && ratio >= self.grad_threshold {
            self.triggered = true;
            match &self.last {
                Some((t_prev, r_prev, peak_prev)) => {
                    let theta = (self.grad_threshold - r_prev) / (ratio - r_prev);
                    self.t_trigger = Some(t_prev + theta * (rec.t - t_prev));
                    self.peak_at_trigger = Some(
                        peak_prev
                            .iter()
                            .zip(&rec.peak_location)
                            .map(|(a, b)| a + theta * (b - a))
                            .collect(),
                    );
                }
                None => {
                    self.t_trigger = Some(rec.t);
                    self.peak_at_trigger = Some(rec.peak_location.clone());
                }
            }
        }
        self.last = Some((rec.t, ratio, rec.peak_location.clone()));
        Ok(())
    }
}

/// Returns the monitor after seeing `rec`. Crossing times and peak
/// locations are linearly interpolated in the gradient ratio between the
/// bracketing records.
pub fn update_blowup_monitor(m: BlowupMonitor, rec: &DiagnosticsRecord) -> Result<BlowupMonitor> {
    let mut m = m;
    m.update(rec)?;
    Ok(m)
}
