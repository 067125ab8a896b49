//! Estimators and statistical tests shared by the experiments.

use crate::lpp::{self, ang};
use crate::point::PointConfig;
use crate::{Error, Result};

/// Sup-norm distance between the empirical CDF of `samples` and `cdf`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("ks_distance needs at least one sample"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d)
}

/// Least-squares slope of log(dispersion) against log(scale), with its
/// standard error.
pub fn fit_exponent(scales: &[f64], dispersions: &[f64]) -> Result<(f64, f64)> {
    if scales.len() < 3 || scales.len() != dispersions.len() {
        return Err(Error::invalid("fit_exponent needs ≥ 3 matching points"));
    }
    if scales.iter().chain(dispersions).any(|&v| v <= 0.0) {
        return Err(Error::invalid("fit_exponent needs positive entries"));
    }
    let xs: Vec<f64> = scales.iter().map(|s| s.ln()).collect();
    let ys: Vec<f64> = dispersions.iter().map(|d| d.ln()).collect();
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let stderr = if xs.len() > 2 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok((slope, stderr))
}

/// Axis-aligned grid of equal square boxes used for Poisson box counts.
#[derive(Debug, Clone, Copy)]
pub struct BoxGrid {
    pub x0: f64,
    pub t0: f64,
    pub side: f64,
    pub nx: usize,
    pub nt: usize,
}

impl BoxGrid {
    pub fn boxes(&self) -> usize {
        self.nx * self.nt
    }
}

/// Beta-point counts of one configuration over the grid boxes, row-major.
pub fn beta_box_counts(config: &PointConfig, grid: &BoxGrid) -> Result<Vec<usize>> {
    let (x_max, t_max) = config.window;
    if grid.side <= 0.0
        || grid.x0 < 0.0
        || grid.t0 < 0.0
        || grid.x0 + grid.nx as f64 * grid.side > x_max
        || grid.t0 + grid.nt as f64 * grid.side > t_max
    {
        return Err(Error::invalid("box grid does not fit inside the window"));
    }
    let decomp = lpp::level_decomposition(config);
    let mut counts = vec![0usize; grid.boxes()];
    for k in 1..=decomp.max_complete_level() {
        for bp in lpp::beta_points(&decomp, k)? {
            let i = (bp.location.x - grid.x0) / grid.side;
            let j = (bp.location.t - grid.t0) / grid.side;
            if i >= 0.0 && j >= 0.0 {
                let (i, j) = (i as usize, j as usize);
                if i < grid.nx && j < grid.nt {
                    counts[j * grid.nx + i] += 1;
                }
            }
        }
    }
    Ok(counts)
}

/// Pooled intensity estimate and dispersion index (variance/mean) of the
/// beta-point field of a stationary ensemble over the grid boxes.
pub fn beta_poisson_test(configs: &[PointConfig], grid: &BoxGrid) -> Result<(f64, f64)> {
    if configs.is_empty() {
        return Err(Error::invalid("beta_poisson_test needs configurations"));
    }
    if configs.len() * grid.boxes() < 2 {
        return Err(Error::invalid("beta_poisson_test needs at least two boxes"));
    }
    for cfg in configs {
        if cfg.lambda * cfg.rho != 1.0 {
            return Err(Error::invalid("beta_poisson_test needs the stationary regime"));
        }
    }
    let mut counts: Vec<f64> = Vec::with_capacity(configs.len() * grid.boxes());
    for cfg in configs {
        counts.extend(beta_box_counts(cfg, grid)?.into_iter().map(|c| c as f64));
    }
    dispersion_of_counts(&counts, grid.side * grid.side)
}

/// Intensity and dispersion index from raw box counts.
pub fn dispersion_of_counts(counts: &[f64], box_area: f64) -> Result<(f64, f64)> {
    if counts.len() < 2 {
        return Err(Error::invalid("dispersion needs at least two counts"));
    }
    let n = counts.len() as f64;
    let mean = counts.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return Err(Error::invalid("dispersion undefined for all-empty boxes"));
    }
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean / box_area, var / mean))
}

/// For bulk points `P` with chain level inside `level_range` and direction
/// within π/8 of the diagonal, pairs |P| with the widest angle any point of
/// R^out(P) makes with P's direction.
pub fn delta_straightness_stat(
    config: &PointConfig,
    level_range: (usize, usize),
    delta: f64,
) -> Result<Vec<(f64, f64)>> {
    if !(delta > 0.0 && delta < 1.0 / 3.0) {
        return Err(Error::invalid("delta must lie in (0, 1/3)"));
    }
    let decomp = lpp::level_decomposition(config);
    let diag = crate::PlanarPoint::new(1.0, 1.0);
    let mut out = Vec::new();
    for (i, cp) in decomp.points.iter().enumerate() {
        let level = decomp.level_of[i];
        if level < level_range.0 || level > level_range.1 {
            continue;
        }
        let p = cp.loc;
        if p.x == 0.0 || p.t == 0.0 || ang(p, diag)? > std::f64::consts::FRAC_PI_8 {
            continue;
        }
        let mut widest = 0.0f64;
        for q in lpp::r_out(config, p)? {
            widest = widest.max(ang(p, q)?);
        }
        out.push((p.norm(), widest));
    }
    Ok(out)
}
