//! Last-passage percolation on the shared point configuration: longest
//! weakly-increasing chains, the level decomposition of the growth process,
//! beta-points and beta-paths, geodesic reconstruction, enclosing geodesics,
//! and the outward-reachability sets used by the straightness statistics.
//!
//! Chains use weak componentwise domination. Sources share ordinate 0 and
//! sinks share abscissa 0, so a chain may run through several of them; all
//! chain computations therefore sort by `(x asc, t asc)` and take the
//! longest nondecreasing subsequence in `t`. The origin itself is never a
//! chain point; sources and sinks are.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::point::{PlanarPoint, PointConfig};
use crate::{Error, Result};

/// Which of the three Poisson streams a configuration point came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointKind {
    Bulk,
    Source,
    Sink,
}

/// A configuration point together with its stream of origin.
#[derive(Debug, Clone, Copy)]
pub struct ConfigPoint {
    pub loc: PlanarPoint,
    pub kind: PointKind,
}

/// Flattens a configuration into chain-eligible points: bulk points, sources
/// as `(x, 0)` and sinks as `(0, t)`.
pub fn config_points(config: &PointConfig) -> Vec<ConfigPoint> {
    let mut pts = Vec::with_capacity(config.bulk.len() + config.sources.len() + config.sinks.len());
    pts.extend(config.sinks.iter().map(|&t| ConfigPoint {
        loc: PlanarPoint { x: 0.0, t },
        kind: PointKind::Sink,
    }));
    pts.extend(config.sources.iter().map(|&x| ConfigPoint {
        loc: PlanarPoint { x, t: 0.0 },
        kind: PointKind::Source,
    }));
    pts.extend(config.bulk.iter().map(|&loc| ConfigPoint {
        loc,
        kind: PointKind::Bulk,
    }));
    pts
}

fn sort_chain_order(pts: &mut [ConfigPoint]) {
    pts.sort_by(|a, b| {
        a.loc
            .x
            .total_cmp(&b.loc.x)
            .then(a.loc.t.total_cmp(&b.loc.t))
    });
}

/// Length of the longest nondecreasing subsequence of `ts` (patience piles).
fn lnds_length(ts: impl Iterator<Item = f64>) -> usize {
    let mut tails: Vec<f64> = Vec::new();
    for t in ts {
        let idx = tails.partition_point(|&v| v <= t);
        if idx == tails.len() {
            tails.push(t);
        } else {
            tails[idx] = t;
        }
    }
    tails.len()
}

/// Last-passage time between `p` and `q`: the maximal number of
/// configuration points on a weakly up/right chain from `p` to `q`.
/// `O(n log n)` via patience sorting.
pub fn last_passage(config: &PointConfig, p: PlanarPoint, q: PlanarPoint) -> Result<usize> {
    if !p.dominated_by(&q) {
        return Err(Error::invalid("last_passage requires p to dominate-precede q"));
    }
    let mut pts: Vec<ConfigPoint> = config_points(config)
        .into_iter()
        .filter(|c| p.dominated_by(&c.loc) && c.loc.dominated_by(&q))
        .collect();
    sort_chain_order(&mut pts);
    Ok(lnds_length(pts.iter().map(|c| c.loc.t)))
}

/// Assignment of every configuration point to its chain level, plus the
/// per-level staircases.
pub struct LevelDecomposition {
    /// All configuration points, in `(x asc, t asc)` chain order.
    pub points: Vec<ConfigPoint>,
    /// `level_of[i]` is the level of `points[i]` (1-based).
    pub level_of: Vec<usize>,
    /// `levels[k-1]` holds indices of the level-`k` points by increasing `x`
    /// (equivalently decreasing `t`: each level is an antichain).
    pub levels: Vec<Vec<usize>>,
    pub window: (f64, f64),
}

impl LevelDecomposition {
    pub fn max_complete_level(&self) -> usize {
        self.levels.len()
    }

    pub fn level_points(&self, k: usize) -> impl Iterator<Item = &ConfigPoint> {
        self.levels[k - 1].iter().map(move |&i| &self.points[i])
    }
}

/// Computes the level of every configuration point in one patience sweep:
/// the level of `P` is the longest chain of configuration points ending at
/// (and counting) `P`.
pub fn level_decomposition(config: &PointConfig) -> LevelDecomposition {
    let mut points = config_points(config);
    sort_chain_order(&mut points);

    let mut level_of = vec![0usize; points.len()];
    let mut levels: Vec<Vec<usize>> = Vec::new();
    let mut tails: Vec<f64> = Vec::new();
    for (i, c) in points.iter().enumerate() {
        let t = c.loc.t;
        let idx = tails.partition_point(|&v| v <= t);
        if idx == tails.len() {
            tails.push(t);
            levels.push(Vec::new());
        } else {
            tails[idx] = t;
        }
        level_of[i] = idx + 1;
        levels[idx].push(i);
    }
    // Within a level the chain order already sorts by increasing x.
    LevelDecomposition {
        points,
        level_of,
        levels,
        window: config.window,
    }
}

/// A concave corner of the level-`k` staircase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaPoint {
    pub location: PlanarPoint,
    pub level: usize,
}

/// Interior concave corners of the level-`k` staircase: with the level
/// points sorted by increasing `x` as `(x_1,t_1),...,(x_m,t_m)`, these are
/// `(x_{i+1}, t_i)`. Corners induced by the axes are excluded.
pub fn beta_points(decomp: &LevelDecomposition, k: usize) -> Result<Vec<BetaPoint>> {
    if k < 1 || k > decomp.max_complete_level() {
        return Err(Error::invalid(format!(
            "level {k} out of range 1..={}",
            decomp.max_complete_level()
        )));
    }
    let pts: Vec<&ConfigPoint> = decomp.level_points(k).collect();
    Ok(pts
        .windows(2)
        .map(|w| BetaPoint {
            location: PlanarPoint {
                x: w[1].loc.x,
                t: w[0].loc.t,
            },
            level: k,
        })
        .collect())
}

/// A level-indexed sequence of beta-points, weakly increasing in both
/// coordinates; `points[n-1]` has level `n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BetaPath {
    pub points: Vec<BetaPoint>,
    /// False when the enumeration ran out of admissible successors before
    /// the last complete level (window truncation).
    pub complete: bool,
}

impl BetaPath {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Checks the defining properties against a decomposition: level-`n`
    /// membership among the beta-points and weak coordinatewise growth.
    pub fn validate(&self, decomp: &LevelDecomposition) -> bool {
        let mut prev: Option<PlanarPoint> = None;
        for (n, bp) in self.points.iter().enumerate() {
            if bp.level != n + 1 {
                return false;
            }
            let candidates = match beta_points(decomp, bp.level) {
                Ok(c) => c,
                Err(_) => return false,
            };
            let eps = 1e-9;
            if !candidates.iter().any(|c| {
                (c.location.x - bp.location.x).abs() < eps
                    && (c.location.t - bp.location.t).abs() < eps
            }) {
                return false;
            }
            if let Some(p) = prev {
                if !p.dominated_by(&bp.location) {
                    return false;
                }
            }
            prev = Some(bp.location);
        }
        true
    }
}

/// Successor choice rule for beta-path enumeration.
#[derive(Debug, Clone, Copy)]
pub enum PathStrategy {
    /// Smallest admissible abscissa at each level.
    Leftmost,
    /// Largest admissible abscissa at each level.
    Rightmost,
    /// Uniform choice among admissible successors, seeded.
    UniformRandom(u64),
}

/// Enumerates a maximal-length admissible beta-path under the strategy,
/// starting from the origin. The path is marked incomplete when no
/// admissible successor exists before the last complete level.
pub fn enumerate_beta_path(
    decomp: &LevelDecomposition,
    strategy: PathStrategy,
) -> Result<BetaPath> {
    let max_level = decomp.max_complete_level();
    if max_level < 1 {
        return Err(Error::Truncated("no complete level in window".into()));
    }
    let mut rng = match strategy {
        PathStrategy::UniformRandom(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    let mut points: Vec<BetaPoint> = Vec::new();
    let mut cur = PlanarPoint { x: 0.0, t: 0.0 };
    let mut complete = true;
    for k in 1..=max_level {
        let candidates = beta_points(decomp, k)?;
        // Admissible successors dominate the current point. Candidates are
        // sorted by x ascending with t descending, so they form a
        // contiguous run.
        let lo = candidates.partition_point(|c| c.location.x < cur.x);
        let hi = candidates.partition_point(|c| c.location.t >= cur.t);
        if lo >= hi {
            // A dead end strictly before the last level is a truncation.
            complete = k == max_level;
            break;
        }
        let pick = match strategy {
            PathStrategy::Leftmost => lo,
            PathStrategy::Rightmost => hi - 1,
            PathStrategy::UniformRandom(_) => rng.as_mut().unwrap().gen_range(lo..hi),
        };
        cur = candidates[pick].location;
        points.push(candidates[pick]);
    }
    Ok(BetaPath { points, complete })
}

/// A weakly up/right chain realizing a last-passage time; `points` are the
/// configuration points, `end` the (not necessarily Poissonian) endpoint.
#[derive(Debug, Clone)]
pub struct Geodesic {
    pub points: Vec<PlanarPoint>,
    pub end: PlanarPoint,
}

impl Geodesic {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Reconstructs one maximal chain from the origin to `q`. Deterministic
/// tie-break: among predecessors attaining the maximum, the one with the
/// largest ordinate (the uppermost geodesic).
pub fn maximal_path(config: &PointConfig, q: PlanarPoint) -> Result<Geodesic> {
    let (x_max, t_max) = config.window;
    if q.x > x_max || q.t > t_max || q.x < 0.0 || q.t < 0.0 {
        return Err(Error::OutOfWindow {
            x: q.x,
            t: q.t,
            x_max,
            t_max,
        });
    }
    let mut pts: Vec<ConfigPoint> = config_points(config)
        .into_iter()
        .filter(|c| c.loc.dominated_by(&q))
        .collect();
    sort_chain_order(&mut pts);

    // Patience sweep, keeping per-level point lists for the backward pass.
    let mut levels: Vec<Vec<PlanarPoint>> = Vec::new();
    let mut tails: Vec<f64> = Vec::new();
    for c in &pts {
        let t = c.loc.t;
        let idx = tails.partition_point(|&v| v <= t);
        if idx == tails.len() {
            tails.push(t);
            levels.push(Vec::new());
        } else {
            tails[idx] = t;
        }
        levels[idx].push(c.loc);
    }
    let total = levels.len();
    if total == 0 {
        return Ok(Geodesic { points: Vec::new(), end: q });
    }
    // Each level list is sorted by x ascending / t descending. The uppermost
    // admissible predecessor is the first list entry with t <= current t;
    // existence of some predecessor guarantees its abscissa also fits.
    let mut chain: Vec<PlanarPoint> = Vec::with_capacity(total);
    let mut cur = levels[total - 1][0];
    chain.push(cur);
    for l in (0..total - 1).rev() {
        let list = &levels[l];
        let j = list.partition_point(|p| p.t > cur.t);
        debug_assert!(j < list.len() && list[j].x <= cur.x);
        cur = list[j];
        chain.push(cur);
    }
    chain.reverse();
    Ok(Geodesic { points: chain, end: q })
}

/// The two geodesics of the enclosing construction: `gamma_plus` selects at
/// each level the nearest configuration point to the left of the beta-path,
/// constrained to the dominance set of the previously chosen point;
/// `gamma_minus` is the symmetric rightward selection. Both end at the
/// `n`-th path point; the first lies weakly above the path prefix, the
/// second weakly below.
pub fn enclosing_geodesics(
    decomp: &LevelDecomposition,
    beta: &BetaPath,
    n: usize,
) -> Result<(Geodesic, Geodesic)> {
    if n > beta.len() {
        return Err(Error::invalid(format!(
            "n = {n} exceeds path length {}",
            beta.len()
        )));
    }
    if n == 0 {
        let origin = PlanarPoint { x: 0.0, t: 0.0 };
        let degenerate = Geodesic { points: Vec::new(), end: origin };
        return Ok((degenerate.clone(), degenerate));
    }
    let end = beta.points[n - 1].location;

    // Leftward selection, built from level n downwards.
    let mut plus_rev: Vec<PlanarPoint> = Vec::with_capacity(n);
    let mut bound: Option<PlanarPoint> = None;
    for m in (1..=n).rev() {
        let target = beta.points[m - 1].location;
        let list = &decomp.levels[m - 1];
        let pts = &decomp.points;
        // Candidates: x strictly left of the path point, inside the
        // dominance set of the previous selection. Within a level t falls
        // as x grows, so both constraints cut contiguous runs.
        let mut hi = list.partition_point(|&i| pts[i].loc.x < target.x);
        let mut lo = 0usize;
        if let Some(b) = bound {
            hi = hi.min(list.partition_point(|&i| pts[i].loc.x <= b.x));
            lo = list.partition_point(|&i| pts[i].loc.t > b.t);
        }
        if lo >= hi {
            return Err(Error::Truncated(format!(
                "no leftward level-{m} predecessor inside the window"
            )));
        }
        let chosen = pts[list[hi - 1]].loc;
        plus_rev.push(chosen);
        bound = Some(chosen);
    }
    plus_rev.reverse();

    // Rightward selection.
    let mut minus_rev: Vec<PlanarPoint> = Vec::with_capacity(n);
    let mut bound: Option<PlanarPoint> = None;
    for m in (1..=n).rev() {
        let target = beta.points[m - 1].location;
        let list = &decomp.levels[m - 1];
        let pts = &decomp.points;
        let mut lo = list.partition_point(|&i| pts[i].loc.x < target.x);
        let mut hi = list.len();
        if let Some(b) = bound {
            hi = hi.min(list.partition_point(|&i| pts[i].loc.x <= b.x));
            lo = lo.max(list.partition_point(|&i| pts[i].loc.t > b.t));
        }
        if lo >= hi {
            return Err(Error::Truncated(format!(
                "no rightward level-{m} predecessor inside the window"
            )));
        }
        let chosen = pts[list[lo]].loc;
        minus_rev.push(chosen);
        bound = Some(chosen);
    }
    minus_rev.reverse();

    Ok((
        Geodesic { points: plus_rev, end },
        Geodesic { points: minus_rev, end },
    ))
}

/// All configuration points `q` dominating `p` such that some maximal chain
/// from the origin to `q` passes through `p`. Two patience sweeps,
/// `O(n log n)` per query.
pub fn r_out(config: &PointConfig, p: PlanarPoint) -> Result<Vec<PlanarPoint>> {
    let decomp = level_decomposition(config);
    let idx = decomp
        .points
        .iter()
        .position(|c| c.loc.x == p.x && c.loc.t == p.t)
        .ok_or_else(|| Error::invalid("r_out requires a configuration point"))?;
    let level_p = decomp.level_of[idx];

    // Chain lengths from p (excluding p, counting the endpoint), over the
    // points dominating p. The chain order of `decomp.points` restricts to
    // chain order on the subset.
    let mut out = Vec::new();
    let mut tails: Vec<f64> = Vec::new();
    for (i, c) in decomp.points.iter().enumerate() {
        if i == idx || !p.dominated_by(&c.loc) {
            continue;
        }
        let t = c.loc.t;
        let pos = tails.partition_point(|&v| v <= t);
        if pos == tails.len() {
            tails.push(t);
        } else {
            tails[pos] = t;
        }
        if level_p + pos + 1 == decomp.level_of[i] {
            out.push(c.loc);
        }
    }
    Ok(out)
}

/// Absolute difference of the polar angles of two nonzero points.
pub fn ang(p: PlanarPoint, q: PlanarPoint) -> Result<f64> {
    if (p.x == 0.0 && p.t == 0.0) || (q.x == 0.0 && q.t == 0.0) {
        return Err(Error::invalid("ang requires nonzero points"));
    }
    Ok((p.t.atan2(p.x) - q.t.atan2(q.x)).abs())
}

/// Whether `q` lies in the closed cone with apex `apex`, axis along the ray
/// from the origin through `apex`, and the given half-angle.
pub fn cone_contains(apex: PlanarPoint, half_angle: f64, q: PlanarPoint) -> Result<bool> {
    if apex.x == 0.0 && apex.t == 0.0 {
        return Err(Error::invalid("cone apex must be nonzero"));
    }
    if half_angle < 0.0 {
        return Err(Error::invalid("half-angle must be nonnegative"));
    }
    let vx = q.x - apex.x;
    let vt = q.t - apex.t;
    if vx == 0.0 && vt == 0.0 {
        return Ok(true);
    }
    let dot = vx * apex.x + vt * apex.t;
    let cross = (vx * apex.t - vt * apex.x).abs();
    Ok(cross.atan2(dot) <= half_angle)
}

/// The curvature defect `alpha(q) - alpha(p) - alpha(q - p)` of the shape
/// function `alpha(x,t) = 2 sqrt(xt)`; nonnegative by concavity.
pub fn curvature_defect(p: PlanarPoint, q: PlanarPoint) -> Result<f64> {
    if !p.dominated_by(&q) || (p.x == q.x && p.t == q.t) {
        return Err(Error::invalid("curvature_defect requires p strictly before q"));
    }
    Ok(2.0 * (q.x * q.t).sqrt() - 2.0 * (p.x * p.t).sqrt()
        - 2.0 * ((q.x - p.x) * (q.t - p.t)).sqrt())
}
