//! Hoeffding-type sample sizes for estimating `Q(x)` and for sample-average
//! optimization. The constants are implemented as printed in the source
//! theorems, including the factor-of-four gap between the single-allocation
//! bound (`q²/2ε²`) and the finite-set bound (`2q²/ε²`).

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Inputs shared by the three bounds. `q_d` is the width of the range of
/// attainable recourse values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundQuery {
    pub q_d: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// Size of the finite allocation set.
    #[serde(default)]
    pub x_space_size: Option<u64>,
    /// Dimension of the allocation space.
    #[serde(default)]
    pub n_dim: Option<u64>,
    /// Side length of the box containing the allocation space.
    #[serde(default)]
    pub d_box: Option<f64>,
    /// Lipschitz constant of the objective in the allocation.
    #[serde(default)]
    pub lipschitz_k: Option<f64>,
}

impl BoundQuery {
    pub fn new(q_d: f64, epsilon: f64, delta: f64) -> Self {
        BoundQuery {
            q_d,
            epsilon,
            delta,
            x_space_size: None,
            n_dim: None,
            d_box: None,
            lipschitz_k: None,
        }
    }

    pub fn with_x_space(mut self, size: u64) -> Self {
        self.x_space_size = Some(size);
        self
    }

    pub fn with_box(mut self, n_dim: u64, d_box: f64, lipschitz_k: f64) -> Self {
        self.n_dim = Some(n_dim);
        self.d_box = Some(d_box);
        self.lipschitz_k = Some(lipschitz_k);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidQuery(msg));
        if !(self.q_d.is_finite() && self.q_d > 0.0) {
            return bad(format!("q_d must be positive, got {}", self.q_d));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        Ok(())
    }
}

/// A sample size: the real-valued formula and its ceiling.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bound {
    pub raw: f64,
    pub n: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl Bound {
    fn of(raw: f64) -> Self {
        Bound {
            raw,
            n: raw.ceil() as u64,
            warning: None,
        }
    }
}

/// `N ≥ q²/(2ε²) · ln(2/δ)`: estimating `Q(x)` for one fixed allocation.
pub fn theorem1_bound(q: &BoundQuery) -> Result<Bound> {
    q.validate()?;
    Ok(Bound::of(q.q_d * q.q_d / (2.0 * q.epsilon * q.epsilon) * (2.0 / q.delta).ln()))
}

/// `N ≥ 2q²/ε² · ln(2|X|/δ)`: optimizing over a finite allocation set.
pub fn theorem2_bound(q: &BoundQuery) -> Result<Bound> {
    q.validate()?;
    let size = match q.x_space_size {
        Some(s) if s >= 1 => s as f64,
        Some(_) => return Err(Error::InvalidQuery("x_space_size must be at least 1".into())),
        None => return Err(Error::InvalidQuery("x_space_size is required".into())),
    };
    Ok(Bound::of(
        2.0 * q.q_d * q.q_d / (q.epsilon * q.epsilon) * (2.0 * size / q.delta).ln(),
    ))
}

/// `N ≥ 8q²/ε² · (n·ln(2dK/ε) + ln(2/δ))`: optimizing over a box of side `d`
/// in `n` dimensions with a `K`-Lipschitz objective.
///
/// When `2dK/ε ≤ 1` the dimension term is not positive and the formula
/// degenerates; that term is then dropped, a warning is attached, and the
/// result is never below [`theorem1_bound`].
pub fn theorem3_bound(q: &BoundQuery) -> Result<Bound> {
    q.validate()?;
    let (Some(n), Some(d), Some(k)) = (q.n_dim, q.d_box, q.lipschitz_k) else {
        return Err(Error::InvalidQuery("n_dim, d_box and lipschitz_k are required".into()));
    };
    if !(d.is_finite() && d > 0.0 && k.is_finite() && k > 0.0) {
        return Err(Error::InvalidQuery(format!(
            "d_box and lipschitz_k must be positive, got {d} and {k}"
        )));
    }
    let scale = 8.0 * q.q_d * q.q_d / (q.epsilon * q.epsilon);
    let log_term = (2.0 * d * k / q.epsilon).ln();
    let tail = (2.0 / q.delta).ln();
    if n == 0 || log_term > 0.0 {
        return Ok(Bound::of(scale * (n as f64 * log_term + tail)));
    }
    let floor = theorem1_bound(q)?;
    let mut b = Bound::of((scale * tail).max(floor.raw));
    b.warning = Some(format!(
        "2·d·K/ε = {} ≤ 1: dimension term dropped, bound degenerate",
        2.0 * d * k / q.epsilon
    ));
    Ok(b)
}
