//! Per-experiment replica runners and estimators. Each experiment writes a
//! small set of named observables per replica; the estimators read nothing
//! else, so summaries are reproducible from the persisted records alone.

use std::collections::BTreeMap;

use serde_json::{json, Value};

use super::stats::{self, BoxGrid};
use super::{Estimate, ExperimentId, ExperimentSpec, ReplicaRecord, Verdict};
use crate::lpp::{self, PathStrategy};
use crate::point::{replica_seed, sample_config};
use crate::{hammersley, hydro, png, Error, PlanarPoint, Result};

/// Number of density bins across the rarefaction fan.
const DENSITY_BINS: usize = 30;
/// Random beta-paths drawn per replica for the angle-bound check.
const ANGLE_PATHS: usize = 20;
/// Half-angle δ used when sampling the straightness statistic.
const STRAIGHTNESS_DELTA: f64 = 0.25;

fn require(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::invalid(msg))
    }
}

/// Parameter-regime preconditions per experiment.
pub fn validate_params(spec: &ExperimentSpec) -> Result<()> {
    let (l, r) = (spec.lambda, spec.rho);
    match spec.experiment {
        ExperimentId::CdfScp | ExperimentId::DensityProfile => {
            require(l > 0.0 && r > 0.0 && l * r < 1.0, "needs λ > 0, ρ > 0, λρ < 1")
        }
        ExperimentId::LlnStationary
        | ExperimentId::InterfaceSlope
        | ExperimentId::FluctXi
        | ExperimentId::BetaPoisson => require(l * r == 1.0, "needs the stationary regime λρ = 1"),
        ExperimentId::ShapeCheck | ExperimentId::FluctChi | ExperimentId::TailCheck => {
            require(l == 0.0 && r == 0.0, "needs empty boundaries λ = ρ = 0")
        }
        ExperimentId::AngleBounds => require(r > 0.0 && l * r < 1.0, "needs ρ > 0 and λρ < 1"),
        ExperimentId::DeltaStraightness => Ok(()),
    }
}

/// Window wide enough for trajectories drifting at up to λ⁻² plus
/// fluctuation slack.
fn drift_window(spec: &ExperimentSpec, horizon: f64) -> (f64, f64) {
    (horizon * (1.0 / (spec.lambda * spec.lambda) + 0.3), horizon)
}

fn square_window(side: f64) -> (f64, f64) {
    (side, side)
}

/// Probe times for the fluctuation-exponent fits.
fn scales(horizon: f64) -> [f64; 4] {
    [horizon / 8.0, horizon / 4.0, horizon / 2.0, horizon]
}

fn density_support(spec: &ExperimentSpec) -> (f64, f64) {
    (spec.rho * spec.rho, 1.0 / (spec.lambda * spec.lambda))
}

fn poisson_grid(horizon: f64) -> BoxGrid {
    BoxGrid {
        x0: 0.2 * horizon,
        t0: 0.2 * horizon,
        side: 0.1 * horizon,
        nx: 6,
        nt: 6,
    }
}

type Observables = BTreeMap<String, Value>;

fn obs1(key: &str, value: Value) -> Observables {
    BTreeMap::from([(key.to_string(), value)])
}

/// Runs one replica of the experiment and returns its observables.
/// Truncation and no-sink-exit errors bubble up as replica exclusions.
pub fn run_replica(spec: &ExperimentSpec, seed: u64) -> Result<Observables> {
    let h = spec.horizon;
    match spec.experiment {
        ExperimentId::CdfScp | ExperimentId::LlnStationary => {
            let window = if spec.experiment == ExperimentId::CdfScp {
                drift_window(spec, h)
            } else {
                (h * 1.3 / (spec.lambda * spec.lambda), h)
            };
            let cfg = sample_config(spec.lambda, spec.rho, window, seed)?;
            let scp = hammersley::second_class(&cfg)?;
            let x = scp
                .position_at(h)
                .ok_or_else(|| Error::Truncated("second-class particle left the window".into()))?;
            Ok(obs1("x_over_t", json!(x / h)))
        }
        ExperimentId::InterfaceSlope => {
            let cfg = sample_config(spec.lambda, spec.rho, square_window(0.95 * h), seed)?;
            let (_, trace) = png::evolve_two_type(&png::nucleations_from(&cfg), h)?;
            Ok(obs1("phi_over_s", json!(trace.phi_at(h) / h)))
        }
        ExperimentId::ShapeCheck => {
            let cfg = sample_config(0.0, 0.0, square_window(h), seed)?;
            let origin = PlanarPoint::new(0.0, 0.0);
            let half = lpp::last_passage(&cfg, origin, PlanarPoint::new(h / 2.0, h / 2.0))?;
            let full = lpp::last_passage(&cfg, origin, PlanarPoint::new(h, h))?;
            Ok(BTreeMap::from([
                ("ratio_half".to_string(), json!(half as f64 / h)),
                ("ratio_full".to_string(), json!(full as f64 / (2.0 * h))),
            ]))
        }
        ExperimentId::FluctChi | ExperimentId::TailCheck => {
            let cfg = sample_config(0.0, 0.0, square_window(h), seed)?;
            let origin = PlanarPoint::new(0.0, 0.0);
            if spec.experiment == ExperimentId::TailCheck {
                let l = lpp::last_passage(&cfg, origin, PlanarPoint::new(h, h))?;
                return Ok(obs1("l", json!(l)));
            }
            let ls: Vec<Value> = scales(h)
                .iter()
                .map(|&t| {
                    lpp::last_passage(&cfg, origin, PlanarPoint::new(t, t)).map(|l| json!(l))
                })
                .collect::<Result<_>>()?;
            Ok(obs1("l_at_scales", Value::Array(ls)))
        }
        ExperimentId::FluctXi => {
            let window = (h * 1.3 / (spec.lambda * spec.lambda), h);
            let cfg = sample_config(spec.lambda, spec.rho, window, seed)?;
            let scp = hammersley::second_class(&cfg)?;
            let xs: Vec<Value> = scales(h)
                .iter()
                .map(|&t| {
                    scp.position_at(t)
                        .map(|x| json!(x))
                        .ok_or_else(|| Error::Truncated("trajectory left the window".into()))
                })
                .collect::<Result<_>>()?;
            Ok(obs1("x_at_scales", Value::Array(xs)))
        }
        ExperimentId::BetaPoisson => {
            let cfg = sample_config(spec.lambda, spec.rho, square_window(h), seed)?;
            let counts = stats::beta_box_counts(&cfg, &poisson_grid(h))?;
            Ok(obs1("box_counts", json!(counts)))
        }
        ExperimentId::DensityProfile => {
            let cfg = sample_config(spec.lambda, spec.rho, drift_window(spec, h), seed)?;
            let run = hammersley::evolve(&cfg);
            let (lo, hi) = density_support(spec);
            let width = (hi - lo) / DENSITY_BINS as f64;
            let mut counts = vec![0u64; DENSITY_BINS];
            for x in run.live_positions_at(h) {
                let r = x / h;
                if r >= lo && r < hi {
                    counts[((r - lo) / width) as usize] += 1;
                }
            }
            Ok(obs1("bin_counts", json!(counts)))
        }
        ExperimentId::AngleBounds => {
            let cfg = sample_config(spec.lambda, spec.rho, square_window(h), seed)?;
            let decomp = lpp::level_decomposition(&cfg);
            let mut ratios = Vec::new();
            for j in 0..ANGLE_PATHS {
                let strategy = PathStrategy::UniformRandom(replica_seed(seed, 1 + j as u64));
                let path = lpp::enumerate_beta_path(&decomp, strategy)?;
                if let Some(last) = path.points.last() {
                    ratios.push(last.location.t / last.location.x);
                }
            }
            if ratios.is_empty() {
                return Err(Error::Truncated("no beta-path reached any level".into()));
            }
            Ok(obs1("tan_theta", json!(ratios)))
        }
        ExperimentId::DeltaStraightness => {
            let cfg = sample_config(spec.lambda, spec.rho, square_window(h), seed)?;
            let decomp = lpp::level_decomposition(&cfg);
            // A few probe points per dyadic radius near the diagonal; the
            // full statistic over all points is far too slow at this size.
            let diag = PlanarPoint::new(1.0, 1.0);
            let mut radii = Vec::new();
            let mut angles = Vec::new();
            let r_max = h * f64::sqrt(2.0) * 0.9;
            let mut target = r_max / 16.0;
            while target <= r_max {
                let mut best: Vec<(f64, PlanarPoint)> = Vec::new();
                for cp in &decomp.points {
                    let p = cp.loc;
                    if p.x == 0.0 || p.t == 0.0 {
                        continue;
                    }
                    if lpp::ang(p, diag)? > std::f64::consts::FRAC_PI_8 {
                        continue;
                    }
                    let d = (p.norm() - target).abs();
                    best.push((d, p));
                }
                best.sort_by(|a, b| a.0.total_cmp(&b.0));
                for &(_, p) in best.iter().take(3) {
                    let mut widest = 0.0f64;
                    for q in lpp::r_out(&cfg, p)? {
                        widest = widest.max(lpp::ang(p, q)?);
                    }
                    radii.push(p.norm());
                    angles.push(widest);
                }
                target *= 2.0;
            }
            Ok(BTreeMap::from([
                ("radii".to_string(), json!(radii)),
                ("max_ang".to_string(), json!(angles)),
            ]))
        }
    }
}

fn included(replicas: &[ReplicaRecord]) -> impl Iterator<Item = &ReplicaRecord> {
    replicas.iter().filter(|r| r.excluded.is_none())
}

fn num(r: &ReplicaRecord, key: &str) -> Result<f64> {
    r.observables
        .get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::SchemaMismatch(format!("missing numeric observable `{key}`")))
}

fn nums(r: &ReplicaRecord, key: &str) -> Result<Vec<f64>> {
    r.observables
        .get(key)
        .and_then(Value::as_array)
        .map(|a| a.iter().filter_map(Value::as_f64).collect::<Vec<f64>>())
        .ok_or_else(|| Error::SchemaMismatch(format!("missing array observable `{key}`")))
}

fn collect_num(replicas: &[ReplicaRecord], key: &str) -> Result<Vec<f64>> {
    included(replicas).map(|r| num(r, key)).collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)).sqrt()
}

fn mean_estimate(name: &str, xs: &[f64], reference: Option<f64>) -> Estimate {
    Estimate {
        name: name.to_string(),
        value: mean(xs),
        stderr: (xs.len() > 1).then(|| sd(xs) / (xs.len() as f64).sqrt()),
        reference,
    }
}

fn interval_verdict(name: &str, observed: f64, lo: f64, hi: f64, n: usize) -> Verdict {
    Verdict {
        name: name.to_string(),
        observed,
        tolerance: format!("within [{lo}, {hi}]"),
        pass: (lo..=hi).contains(&observed),
        replicas: n,
    }
}

fn upper_verdict(name: &str, observed: f64, bound: f64, n: usize) -> Verdict {
    Verdict {
        name: name.to_string(),
        observed,
        tolerance: format!("≤ {bound}"),
        pass: observed <= bound,
        replicas: n,
    }
}

/// Estimators and verdicts, computed purely from the replica observables.
pub fn evaluate(
    spec: &ExperimentSpec,
    replicas: &[ReplicaRecord],
) -> Result<(Vec<Estimate>, Vec<Verdict>)> {
    let n = included(replicas).count();
    if n == 0 {
        // Nothing to estimate; the summary will be marked invalid through
        // the exclusion fraction.
        return Ok((Vec::new(), Vec::new()));
    }
    let params = hydro::ModelParams::new(spec.lambda, spec.rho)?;
    match spec.experiment {
        ExperimentId::CdfScp => {
            let samples = collect_num(replicas, "x_over_t")?;
            let ks = stats::ks_distance(&samples, |r| {
                if r <= 0.0 {
                    0.0
                } else {
                    hydro::z_cdf(r, params).unwrap_or(f64::NAN)
                }
            })?;
            Ok((
                vec![
                    mean_estimate("mean_x_over_t", &samples, None),
                    Estimate {
                        name: "ks_distance".into(),
                        value: ks,
                        stderr: None,
                        reference: Some(0.0),
                    },
                ],
                // The finite-time law lags the limit by O(t^{-1/3});
                // measured KS ≈ 0.9·t^{-1/3} ≈ 0.10 at the pinned horizon
                // 500, so the bound leaves headroom above that while still
                // rejecting a wrong law (distance ≥ 0.3).
                vec![upper_verdict("ks_vs_z_cdf", ks, 0.15, n)],
            ))
        }
        ExperimentId::LlnStationary => {
            let samples = collect_num(replicas, "x_over_t")?;
            let reference = 1.0 / (spec.lambda * spec.lambda);
            let m = mean(&samples);
            Ok((
                vec![mean_estimate("mean_x_over_t", &samples, Some(reference))],
                vec![interval_verdict(
                    "lln_x_over_t",
                    m,
                    reference - 0.1,
                    reference + 0.1,
                    n,
                )],
            ))
        }
        ExperimentId::InterfaceSlope => {
            let samples = collect_num(replicas, "phi_over_s")?;
            let w = hydro::stationary_interface_slope(params)?;
            Ok((
                vec![mean_estimate("mean_phi_over_s", &samples, Some(w))],
                vec![interval_verdict("interface_slope", mean(&samples), w - 0.1, w + 0.1, n)],
            ))
        }
        ExperimentId::ShapeCheck => {
            let half = collect_num(replicas, "ratio_half")?;
            let full = collect_num(replicas, "ratio_full")?;
            let (mh, mf) = (mean(&half), mean(&full));
            Ok((
                vec![
                    mean_estimate("ratio_at_half_horizon", &half, Some(1.0)),
                    mean_estimate("ratio_at_horizon", &full, Some(1.0)),
                ],
                vec![
                    interval_verdict("shape_ratio", mh, 0.90, 1.00, n),
                    Verdict {
                        name: "finite_size_correction_shrinks".into(),
                        observed: mf - mh,
                        tolerance: "> 0".into(),
                        pass: mf > mh,
                        replicas: n,
                    },
                ],
            ))
        }
        ExperimentId::FluctChi | ExperimentId::FluctXi => {
            let key = if spec.experiment == ExperimentId::FluctChi {
                "l_at_scales"
            } else {
                "x_at_scales"
            };
            let ts = scales(spec.horizon);
            let per_scale: Vec<Vec<f64>> = (0..ts.len())
                .map(|i| {
                    included(replicas)
                        .map(|r| nums(r, key).map(|v| v[i]))
                        .collect()
                })
                .collect::<Result<_>>()?;
            let sds: Vec<f64> = per_scale.iter().map(|v| sd(v)).collect();
            let (slope, stderr) = stats::fit_exponent(&ts, &sds)?;
            let (name, lo, hi, target) = if spec.experiment == ExperimentId::FluctChi {
                ("chi_exponent", 0.23, 0.43, 1.0 / 3.0)
            } else {
                ("xi_exponent", 0.50, 0.80, 2.0 / 3.0)
            };
            Ok((
                vec![Estimate {
                    name: name.into(),
                    value: slope,
                    stderr: Some(stderr),
                    reference: Some(target),
                }],
                vec![interval_verdict(name, slope, lo, hi, n)],
            ))
        }
        ExperimentId::BetaPoisson => {
            let mut counts = Vec::new();
            for r in included(replicas) {
                counts.extend(nums(r, "box_counts")?);
            }
            let side = poisson_grid(spec.horizon).side;
            let (intensity, index) = stats::dispersion_of_counts(&counts, side * side)?;
            Ok((
                vec![
                    Estimate {
                        name: "beta_intensity".into(),
                        value: intensity,
                        stderr: None,
                        reference: Some(1.0),
                    },
                    Estimate {
                        name: "dispersion_index".into(),
                        value: index,
                        stderr: None,
                        reference: Some(1.0),
                    },
                ],
                vec![
                    interval_verdict("beta_intensity", intensity, 0.9, 1.1, n),
                    interval_verdict("dispersion_index", index, 0.85, 1.15, n),
                ],
            ))
        }
        ExperimentId::DensityProfile => {
            let (lo, hi) = density_support(spec);
            let width = (hi - lo) / DENSITY_BINS as f64;
            let mut mean_counts = vec![0.0; DENSITY_BINS];
            for r in included(replicas) {
                for (b, c) in nums(r, "bin_counts")?.iter().enumerate() {
                    mean_counts[b] += c / n as f64;
                }
            }
            let mut l1 = 0.0;
            for (b, c) in mean_counts.iter().enumerate() {
                let mid = lo + (b as f64 + 0.5) * width;
                let density = c / (spec.horizon * width);
                l1 += (density - hydro::burgers_u(mid, 1.0, params)?).abs() * width;
            }
            Ok((
                vec![Estimate {
                    name: "density_l1_error".into(),
                    value: l1,
                    stderr: None,
                    reference: Some(0.0),
                }],
                vec![upper_verdict("density_vs_burgers", l1, 0.1, n)],
            ))
        }
        ExperimentId::AngleBounds => {
            let (lo, hi) = (
                spec.lambda * spec.lambda - 0.05,
                1.0 / (spec.rho * spec.rho) + 0.05,
            );
            // Individual terminal angles fluctuate at scale t^{-1/3}, far
            // beyond the 0.05 slack at any desk-size horizon, so the bound
            // is tested on the ensemble mean; the outside fraction is
            // reported alongside.
            let mut ratios = Vec::new();
            let mut outside = 0usize;
            for r in included(replicas) {
                for ratio in nums(r, "tan_theta")? {
                    if !(lo..=hi).contains(&ratio) {
                        outside += 1;
                    }
                    ratios.push(ratio);
                }
            }
            let fraction = outside as f64 / ratios.len() as f64;
            Ok((
                vec![
                    mean_estimate("mean_terminal_angle", &ratios, None),
                    Estimate {
                        name: "fraction_outside_bounds".into(),
                        value: fraction,
                        stderr: None,
                        reference: Some(0.0),
                    },
                ],
                vec![interval_verdict(
                    "mean_terminal_angle",
                    mean(&ratios),
                    lo,
                    hi,
                    n,
                )],
            ))
        }
        ExperimentId::TailCheck => {
            let ls = collect_num(replicas, "l")?;
            let t = spec.horizon;
            let cut = 6.0 * t.powf(1.0 / 3.0);
            let exceed = ls.iter().filter(|&&l| (l - 2.0 * t).abs() > cut).count();
            let fraction = exceed as f64 / ls.len() as f64;
            Ok((
                vec![Estimate {
                    name: "tail_exceedance".into(),
                    value: fraction,
                    stderr: None,
                    reference: Some(0.0),
                }],
                vec![upper_verdict("tail_fraction", fraction, 0.02, n)],
            ))
        }
        ExperimentId::DeltaStraightness => {
            let mut pairs: Vec<(f64, f64)> = Vec::new();
            for r in included(replicas) {
                let radii = nums(r, "radii")?;
                let angles = nums(r, "max_ang")?;
                pairs.extend(radii.into_iter().zip(angles));
            }
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            if pairs.len() < 6 {
                return Err(Error::invalid("too few straightness probes"));
            }
            let third = pairs.len() / 3;
            let median = |chunk: &[(f64, f64)]| {
                let mut a: Vec<f64> = chunk.iter().map(|p| p.1).collect();
                a.sort_by(f64::total_cmp);
                a[a.len() / 2]
            };
            let near = median(&pairs[..third]);
            let far = median(&pairs[pairs.len() - third..]);
            Ok((
                vec![
                    Estimate {
                        name: "median_ang_near".into(),
                        value: near,
                        stderr: None,
                        reference: None,
                    },
                    Estimate {
                        name: "median_ang_far".into(),
                        value: far,
                        stderr: None,
                        reference: Some(STRAIGHTNESS_DELTA),
                    },
                ],
                vec![Verdict {
                    name: "envelope_nonincreasing".into(),
                    observed: far - near,
                    tolerance: "≤ 0 (median max-angle shrinks with |P|)".into(),
                    pass: far <= near,
                    replicas: n,
                }],
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run_ensemble, ExperimentSpec};

    fn small(id: ExperimentId, lambda: f64, rho: f64, horizon: f64, replicas: usize) -> ExperimentSpec {
        ExperimentSpec {
            experiment: id,
            lambda,
            rho,
            horizon,
            replicas,
            seed: 99,
            out_dir: None,
        }
    }

    #[test]
    fn replica_zero_matches_a_direct_run() {
        let spec = small(ExperimentId::LlnStationary, 1.0, 1.0, 60.0, 1);
        let record = run_ensemble(&spec).unwrap();
        let seed = replica_seed(spec.seed, 0);
        assert_eq!(record.replicas[0].seed, seed);
        let cfg = sample_config(1.0, 1.0, (60.0 * 1.3, 60.0), seed).unwrap();
        let scp = hammersley::second_class(&cfg).unwrap();
        match scp.position_at(60.0) {
            Some(x) => {
                assert_eq!(num(&record.replicas[0], "x_over_t").unwrap(), x / 60.0)
            }
            None => assert!(record.replicas[0].excluded.is_some()),
        }
    }

    #[test]
    fn same_spec_same_records() {
        let spec = small(ExperimentId::ShapeCheck, 0.0, 0.0, 40.0, 4);
        let a = run_ensemble(&spec).unwrap();
        let b = run_ensemble(&spec).unwrap();
        assert_eq!(a.replicas, b.replicas);
        assert_eq!(a.summary.verdicts, b.summary.verdicts);
        assert_eq!(a.summary.estimates, b.summary.estimates);
    }

    #[test]
    fn parameter_regimes_are_enforced() {
        assert!(run_ensemble(&small(ExperimentId::LlnStationary, 0.5, 1.0, 10.0, 1)).is_err());
        assert!(run_ensemble(&small(ExperimentId::CdfScp, 1.0, 1.0, 10.0, 1)).is_err());
        assert!(run_ensemble(&small(ExperimentId::ShapeCheck, 1.0, 0.0, 10.0, 1)).is_err());
        assert!(run_ensemble(&small(ExperimentId::ShapeCheck, 0.0, 0.0, 0.0, 1)).is_err());
        assert!(run_ensemble(&small(ExperimentId::ShapeCheck, 0.0, 0.0, 10.0, 0)).is_err());
    }

    #[test]
    fn verdicts_carry_tolerances_and_counts() {
        let spec = small(ExperimentId::TailCheck, 0.0, 0.0, 50.0, 20);
        let record = run_ensemble(&spec).unwrap();
        assert!(!record.summary.verdicts.is_empty());
        for v in &record.summary.verdicts {
            assert!(!v.tolerance.is_empty());
            assert!(v.replicas > 0);
        }
        assert_eq!(record.summary.excluded, 0);
    }

    #[test]
    fn small_angle_bounds_run_is_sound() {
        let spec = small(ExperimentId::AngleBounds, 0.5, 1.0, 30.0, 5);
        let record = run_ensemble(&spec).unwrap();
        let v = &record.summary.verdicts[0];
        assert!(v.observed.is_finite() && v.observed > 0.0);
    }

    #[test]
    fn evaluation_is_pure_in_the_observables() {
        let spec = small(ExperimentId::BetaPoisson, 1.0, 1.0, 40.0, 6);
        let record = run_ensemble(&spec).unwrap();
        let (est, ver) = evaluate(&record.spec, &record.replicas).unwrap();
        assert_eq!(est, record.summary.estimates);
        assert_eq!(ver, record.summary.verdicts);
    }
}
