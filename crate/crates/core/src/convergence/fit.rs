use crate::error::{Error, Result};

/// Fewest points a fit accepts.
pub const MIN_FIT_POINTS: usize = 3;

/// Least-squares line through `(L, ln error)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// `-slope`: decay rate per unit `L`.
    pub alpha_obs: f64,
    /// Intercept of the line.
    pub log_c_obs: f64,
    pub r_squared: f64,
    /// Set when the fitted slope is not negative.
    pub non_decaying: bool,
    /// Grid sizes that entered the final fit.
    pub used: Vec<usize>,
    /// Grid sizes dropped for a zero (or non-finite) error.
    pub dropped_zero: Vec<usize>,
    /// Smallest grid size, dropped as an outlier of the first fit.
    pub dropped_transient: Option<usize>,
}

struct Line {
    slope: f64,
    intercept: f64,
    r_squared: f64,
    residuals: Vec<f64>,
    ss_res: f64,
}

fn least_squares(points: &[(f64, f64)]) -> Line {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = points
        .iter()
        .map(|p| p.1 - (intercept + slope * p.0))
        .collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Line {
        slope,
        intercept,
        r_squared,
        residuals,
        ss_res,
    }
}

/// Fits `error ~ C e^{-alpha L}` to `(L, error)` pairs.
///
/// Zero errors carry no rate information and are dropped. When at least four
/// points remain and the smallest `L` sits more than three standard deviations
/// off the first line, it is dropped once as pre-asymptotic. Both drops are
/// recorded in the result.
pub fn fit_exponential(points: &[(usize, f64)]) -> Result<FitResult> {
    let mut sorted = points.to_vec();
    sorted.sort_by_key(|p| p.0);
    let (usable, zero): (Vec<_>, Vec<_>) = sorted
        .into_iter()
        .partition(|p| p.1 > 0.0 && p.1.is_finite());
    let dropped_zero: Vec<usize> = zero.iter().map(|p| p.0).collect();
    let distinct = {
        let mut ls: Vec<usize> = usable.iter().map(|p| p.0).collect();
        ls.dedup();
        ls.len()
    };
    if usable.len() < MIN_FIT_POINTS || distinct < 2 {
        return Err(Error::InsufficientData {
            usable: usable.len(),
        });
    }
    let mut logs: Vec<(f64, f64)> = usable.iter().map(|p| (p.0 as f64, p.1.ln())).collect();
    let mut used: Vec<usize> = usable.iter().map(|p| p.0).collect();
    let mut line = least_squares(&logs);
    let mut dropped_transient = None;
    if logs.len() > MIN_FIT_POINTS {
        let sigma = (line.ss_res / (logs.len() - 2) as f64).sqrt();
        if line.residuals[0].abs() > 3.0 * sigma && sigma > 0.0 {
            dropped_transient = Some(used.remove(0));
            logs.remove(0);
            line = least_squares(&logs);
        }
    }
    let alpha_obs = -line.slope;
    Ok(FitResult {
        alpha_obs,
        log_c_obs: line.intercept,
        r_squared: line.r_squared,
        non_decaying: !(alpha_obs > 1e-12 * (1.0 + line.intercept.abs())),
        used,
        dropped_zero,
        dropped_transient,
    })
}
