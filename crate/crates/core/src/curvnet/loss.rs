/// Regression loss on a scalar prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Loss {
    Huber { delta: f64 },
    Mse,
}

impl Loss {
    pub const DEFAULT_HUBER: Loss = Loss::Huber { delta: 0.4 };

    /// `(loss, d loss / d pred)`.
    pub fn eval(&self, pred: f64, target: f64) -> (f64, f64) {
        match *self {
            Loss::Huber { delta } => huber_loss(pred, target, delta),
            Loss::Mse => mse_loss(pred, target),
        }
    }
}

/// Quadratic within `delta` of the target, linear beyond it.
pub fn huber_loss(pred: f64, target: f64, delta: f64) -> (f64, f64) {
    let e = pred - target;
    if e.abs() <= delta {
        (0.5 * e * e, e)
    } else {
        (delta * (e.abs() - 0.5 * delta), delta * e.signum())
    }
}

pub fn mse_loss(pred: f64, target: f64) -> (f64, f64) {
    let e = pred - target;
    (e * e, 2.0 * e)
}
