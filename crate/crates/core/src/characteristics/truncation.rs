use super::CharError;
use crate::mfg_solver::{solve_fokker_planck, TimeGrid, VectorGrid};
use crate::spectral_measure::{dist_w1_1d, evaluate_density, FourierMeasure};

/// `eta(t) = d_W1(m_t, mu_t) / t` where `mu_t` keeps the `F_N` modes of `m_t`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncationSeries {
    pub order: usize,
    /// Times `t_1, t_2, ...` (the initial time is excluded).
    pub times: Vec<f64>,
    pub eta: Vec<f64>,
    pub sup: f64,
    /// Linear extrapolation of `eta` to `t -> 0` from the first two points.
    pub limit_estimate: f64,
    /// First time at which `mu_t` stopped being positive, if before the horizon.
    pub positivity_time: Option<f64>,
}

/// Controlled flow of `m0` under `feedback` on `grid` (full grid resolution),
/// compared with its `F_N` truncation in the circle Wasserstein distance.
pub fn truncation_error(
    m0: &FourierMeasure,
    feedback: &[VectorGrid],
    order: usize,
    grid: &TimeGrid,
) -> Result<TruncationSeries, CharError> {
    if m0.dim() != 1 {
        return Err(CharError::Invalid(
            "the truncation series is one-dimensional".into(),
        ));
    }
    if m0.order() > order {
        return Err(CharError::Invalid(format!(
            "m0 has order {} > N = {order}",
            m0.order()
        )));
    }
    let resolution = feedback
        .first()
        .and_then(|f| f.components.first())
        .map(Vec::len)
        .ok_or_else(|| CharError::Invalid("empty feedback".into()))?;
    if resolution < 4 * order {
        return Err(CharError::Invalid(format!(
            "feedback grid {resolution} is too coarse for N = {order}"
        )));
    }
    let flow = solve_fokker_planck(&evaluate_density(m0, resolution)?, feedback, grid, 1e-9)?;
    let mut times = Vec::new();
    let mut eta = Vec::new();
    let mut positivity_time = None;
    for (n, m) in flow.iter().enumerate().skip(1) {
        let t = grid.time(n) - grid.t0();
        let mu = evaluate_density(&m.to_fourier(order)?, resolution)?;
        if mu.min() <= 0.0 {
            positivity_time = Some(grid.time(n));
            break;
        }
        times.push(grid.time(n));
        eta.push(dist_w1_1d(m, &mu)? / t);
    }
    if eta.is_empty() {
        return Err(CharError::Positivity {
            time: positivity_time.unwrap_or(grid.t0()),
        });
    }
    let limit_estimate = match (eta.first(), eta.get(1), times.first(), times.get(1)) {
        (Some(&a), Some(&b), Some(&s), Some(&u)) => {
            let (s, u) = (s - grid.t0(), u - grid.t0());
            a - (b - a) / (u - s) * s
        }
        _ => eta[0],
    };
    Ok(TruncationSeries {
        order,
        sup: eta.iter().copied().fold(0.0, f64::max),
        times,
        eta,
        limit_estimate,
        positivity_time,
    })
}
