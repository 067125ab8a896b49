//! Polynuclear growth in the rotated `(z, s)` frame.
//!
//! The state is the ordered list of plateaus tiling the line. Each plateau
//! stores its height and its *left* boundary as a line `z(s) = z0 + vel·(s −
//! t0)`; up-steps carry `vel = −1`, down-steps `vel = +1`, stopped pairs and
//! type markers `vel = 0`. A plateau dies when its left boundary catches up
//! with its right neighbour's left boundary; those times sit in a lazy
//! min-heap keyed by (time, plateau, version), so stale entries are skipped
//! instead of removed.
//!
//! Because heights only change by nucleation (which stacks a height `+1`
//! island on top of the plateau it hits) and boundaries never cross between
//! processed events, every moving boundary is a unit step for the whole
//! run. Two-type labels ride along without touching heights: a collision of
//! different-type steps freezes into a `vel = 0`, `dh = 0` marker and is
//! recorded on the competition interface; a moving step reaching a frozen
//! marker buries it and keeps going.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::point::{self, mix64, PointConfig, RotatedPoint};
use crate::{Error, Result};

/// Which part of the driving configuration a nucleation came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NucleationOrigin {
    Bulk,
    /// Source on the x-axis, landing on `{z = s}`.
    PlusBoundary,
    /// Sink on the t-axis, landing on `{z = −s}`.
    MinusBoundary,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Nucleation {
    pub at: RotatedPoint,
    pub origin: NucleationOrigin,
}

/// Rotates a configuration into its nucleation events, sorted by time.
pub fn nucleations_from(config: &PointConfig) -> Vec<Nucleation> {
    let mut out: Vec<Nucleation> = Vec::with_capacity(
        config.bulk.len() + config.sources.len() + config.sinks.len(),
    );
    out.extend(config.bulk.iter().map(|&p| Nucleation {
        at: point::rotate(p),
        origin: NucleationOrigin::Bulk,
    }));
    out.extend(config.sources.iter().map(|&x| Nucleation {
        at: point::rotate(crate::PlanarPoint { x, t: 0.0 }),
        origin: NucleationOrigin::PlusBoundary,
    }));
    out.extend(config.sinks.iter().map(|&t| Nucleation {
        at: point::rotate(crate::PlanarPoint { x: 0.0, t }),
        origin: NucleationOrigin::MinusBoundary,
    }));
    out.sort_by(|a, b| a.at.s.total_cmp(&b.at.s));
    out
}

/// One recorded boundary: a unit step (`dh = ±1`) or a frozen marker
/// (`dh = 0`) alive on `[t0, t_end)`, at `z(s) = z0 + vel·(s − t0)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Segment {
    pub z0: f64,
    pub t0: f64,
    pub vel: f64,
    pub dh: i32,
    pub t_end: f64,
}

/// Piecewise-constant height profile, queryable anywhere up to the horizon.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeightProfile {
    pub segments: Vec<Segment>,
    pub horizon: f64,
}

impl HeightProfile {
    /// Height at `(z, s)`: the sum of the step sizes of all boundaries
    /// strictly to the left of or at `z` at time `s`.
    pub fn height(&self, z: f64, s: f64) -> Result<i64> {
        if !(0.0..=self.horizon).contains(&s) {
            return Err(Error::invalid(format!(
                "query time {s} outside [0, {}]",
                self.horizon
            )));
        }
        let mut h = 0i64;
        for seg in &self.segments {
            if seg.t0 > s || s >= seg.t_end {
                continue;
            }
            let pos = seg.z0 + seg.vel * (s - seg.t0);
            // Islands are closed regions: an up-step at z itself already
            // counts, a down-step at z itself does not yet.
            let counts = if seg.dh < 0 { pos < z } else { pos <= z };
            if counts {
                h += seg.dh as i64;
            }
        }
        Ok(h)
    }
}

/// The competition interface: `hits[n-1]` is the level-`n` collision point
/// `(φ_n, σ_n)`; `(φ_0, σ_0) = (0, 0)`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct InterfaceTrace {
    pub hits: Vec<RotatedPoint>,
    /// Island level of each collision; successive from 1 when the theory
    /// applies, kept explicit so tests can verify it.
    pub levels: Vec<u32>,
}

impl InterfaceTrace {
    /// The step function φ(s): position of the last collision at or before
    /// `s`, starting from φ = 0.
    pub fn phi_at(&self, s: f64) -> f64 {
        let mut phi = 0.0;
        for hit in &self.hits {
            if hit.s <= s {
                phi = hit.z;
            } else {
                break;
            }
        }
        phi
    }
}

const NO_SEG: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Boundary {
    z0: f64,
    t0: f64,
    vel: f64,
    seg: u32,
}

impl Boundary {
    fn pos(&self, s: f64) -> f64 {
        self.z0 + self.vel * (s - self.t0)
    }
}

#[derive(Debug, Clone, Copy)]
struct Plateau {
    height: i32,
    label: u8,
    left: Boundary,
    version: u32,
    alive: bool,
}

struct Event {
    time: f64,
    plateau: u32,
    version: u32,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    // Reversed on time: BinaryHeap is a max-heap and we want the earliest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.plateau.cmp(&self.plateau))
    }
}

struct Engine {
    slab: Vec<Plateau>,
    free: Vec<u32>,
    /// Plateau ids left to right; left boundary positions are nondecreasing
    /// at every processed event time.
    index: Vec<u32>,
    heap: BinaryHeap<Event>,
    segments: Vec<Segment>,
    trace: InterfaceTrace,
    horizon: f64,
    two_type: bool,
}

impl Engine {
    fn new(horizon: f64, two_type: bool) -> Self {
        let mut engine = Engine {
            slab: Vec::new(),
            free: Vec::new(),
            index: Vec::new(),
            heap: BinaryHeap::new(),
            segments: Vec::new(),
            trace: InterfaceTrace::default(),
            horizon,
            two_type,
        };
        let far_left = Boundary {
            z0: f64::NEG_INFINITY,
            t0: 0.0,
            vel: 0.0,
            seg: NO_SEG,
        };
        if two_type {
            // Substrate marker at the origin: type 1 left, type 2 right.
            let a = engine.alloc(Plateau {
                height: 0,
                label: 1,
                left: far_left,
                version: 0,
                alive: true,
            });
            let marker = engine.push_segment(0.0, 0.0, 0.0, 0);
            let b = engine.alloc(Plateau {
                height: 0,
                label: 2,
                left: Boundary { z0: 0.0, t0: 0.0, vel: 0.0, seg: marker },
                version: 0,
                alive: true,
            });
            engine.index.push(a);
            engine.index.push(b);
        } else {
            let a = engine.alloc(Plateau {
                height: 0,
                label: 0,
                left: far_left,
                version: 0,
                alive: true,
            });
            engine.index.push(a);
        }
        engine
    }

    fn alloc(&mut self, mut p: Plateau) -> u32 {
        if let Some(id) = self.free.pop() {
            // Versions stay monotone across slot reuse so stale heap
            // entries for the previous occupant can never match.
            p.version = self.slab[id as usize].version + 1;
            self.slab[id as usize] = p;
            id
        } else {
            self.slab.push(p);
            (self.slab.len() - 1) as u32
        }
    }

    fn push_segment(&mut self, z0: f64, t0: f64, vel: f64, dh: i32) -> u32 {
        self.segments.push(Segment {
            z0,
            t0,
            vel,
            dh,
            t_end: f64::INFINITY,
        });
        (self.segments.len() - 1) as u32
    }

    fn end_segment(&mut self, seg: u32, t: f64) {
        if seg != NO_SEG {
            self.segments[seg as usize].t_end = t;
        }
    }

    /// Bumps the version of the plateau at index position `i` and, when its
    /// boundary pair is approaching, schedules its vanish time.
    fn reschedule(&mut self, i: usize, now: f64) {
        let id = self.index[i];
        self.slab[id as usize].version += 1;
        if i == 0 || i + 1 >= self.index.len() {
            return;
        }
        let left = self.slab[id as usize].left;
        let right = self.slab[self.index[i + 1] as usize].left;
        let closing = left.vel - right.vel;
        if closing <= 0.0 {
            return;
        }
        let t = (right.z0 - right.vel * right.t0 - left.z0 + left.vel * left.t0) / closing;
        let t = t.max(now);
        if t <= self.horizon {
            self.heap.push(Event {
                time: t,
                plateau: id,
                version: self.slab[id as usize].version,
            });
        }
    }

    /// Index position of the plateau whose left boundary covers `z` at time
    /// `s` (the last one with boundary position ≤ z).
    fn containing(&self, z: f64, s: f64) -> usize {
        let mut i = self
            .index
            .partition_point(|&id| self.slab[id as usize].left.pos(s) <= z)
            - 1;
        // Boundary-driven nucleations travel exactly along the rays {z = s}
        // and {z = -s}, riding the outward step of the previous boundary
        // island.  Rounding can land them a few ulps on either side of the
        // step, so resolve near-exact ties by stacking on top of the island:
        // step right over coincident up-steps, left over coincident
        // down-steps.
        let eps = 1e-9 * (1.0 + z.abs());
        while i + 1 < self.index.len() {
            let b = self.slab[self.index[i + 1] as usize].left;
            if b.vel < 0.0 && (b.pos(s) - z).abs() <= eps {
                i += 1;
            } else {
                break;
            }
        }
        while i > 0 {
            let b = self.slab[self.index[i] as usize].left;
            if b.vel > 0.0 && (b.pos(s) - z).abs() <= eps {
                i -= 1;
            } else {
                break;
            }
        }
        i
    }

    /// Index position of a live plateau, found through its boundary
    /// position with an outward scan over exact ties.
    fn position_of(&self, id: u32, s: f64) -> usize {
        let target = self.slab[id as usize].left.pos(s);
        let start = self
            .index
            .partition_point(|&p| self.slab[p as usize].left.pos(s) < target);
        let mut k = start;
        while k < self.index.len() {
            if self.index[k] == id {
                return k;
            }
            if self.slab[self.index[k] as usize].left.pos(s) > target {
                break;
            }
            k += 1;
        }
        // Floating-point slack pushed it out of the tied block; fall back
        // to a linear scan rather than guessing.
        self.index.iter().position(|&p| p == id).expect("live plateau in index")
    }

    fn nucleate(&mut self, z: f64, s: f64) {
        let i = self.containing(z, s);
        let base = self.slab[self.index[i] as usize];
        let label = if self.two_type && z == 0.0 {
            // Measure-zero landing on the substrate seam: deterministic
            // fair coin from the coordinate bits.
            1 + (mix64(z.to_bits() ^ s.to_bits()) & 1) as u8
        } else if self.two_type {
            base.label
        } else {
            0
        };
        let up = self.push_segment(z, s, -1.0, 1);
        let down = self.push_segment(z, s, 1.0, -1);
        let island = self.alloc(Plateau {
            height: base.height + 1,
            label,
            left: Boundary { z0: z, t0: s, vel: -1.0, seg: up },
            version: 0,
            alive: true,
        });
        let tail = self.alloc(Plateau {
            height: base.height,
            label: base.label,
            left: Boundary { z0: z, t0: s, vel: 1.0, seg: down },
            version: 0,
            alive: true,
        });
        self.index.splice(i + 1..i + 1, [island, tail]);
        self.reschedule(i, s);
        self.reschedule(i + 1, s);
        self.reschedule(i + 2, s);
    }

    fn vanish(&mut self, id: u32, t: f64) {
        let i = self.position_of(id, t);
        debug_assert!(i > 0 && i + 1 < self.index.len());
        let q = self.slab[id as usize];
        let c_id = self.index[i + 1];
        let c = self.slab[c_id as usize];
        let a = self.slab[self.index[i - 1] as usize];
        let z = q.left.pos(t);

        self.end_segment(q.left.seg, t);
        self.end_segment(c.left.seg, t);
        self.slab[id as usize].alive = false;
        self.free.push(id);

        if a.height == c.height {
            if self.two_type && a.label != c.label {
                // Different-type steps stop for good: a frozen marker keeps
                // the label seam and the collision joins the interface.
                self.trace.hits.push(RotatedPoint { z, s: t });
                self.trace.levels.push(a.height as u32);
                let marker = self.push_segment(z, t, 0.0, 0);
                self.slab[c_id as usize].left =
                    Boundary { z0: z, t0: t, vel: 0.0, seg: marker };
                self.index.remove(i);
                self.reschedule(i - 1, t);
                self.reschedule(i, t);
            } else {
                // Step pair annihilates; the flanking plateaus coalesce.
                self.slab[c_id as usize].alive = false;
                self.free.push(c_id);
                self.index.drain(i..i + 2);
                self.reschedule(i - 1, t);
            }
        } else {
            // One side was a frozen marker: the moving step buries it and
            // carries on as the new boundary between the survivors.
            debug_assert_eq!((a.height - c.height).abs(), 1);
            let vel = q.left.vel + c.left.vel;
            let dh = c.height - a.height;
            debug_assert_eq!(dh as f64, -vel);
            let seg = self.push_segment(z, t, vel, dh);
            self.slab[c_id as usize].left = Boundary { z0: z, t0: t, vel, seg };
            self.index.remove(i);
            self.reschedule(i - 1, t);
            self.reschedule(i, t);
        }
    }

    fn run(mut self, nucleations: &[Nucleation]) -> (HeightProfile, InterfaceTrace) {
        let mut ni = 0;
        loop {
            let next_nucleation = nucleations.get(ni).map(|n| n.at.s);
            let next_vanish = self.heap.peek().map(|e| e.time);
            match (next_nucleation, next_vanish) {
                (Some(s), v) if s <= self.horizon && v.map_or(true, |t| s <= t) => {
                    let n = nucleations[ni];
                    ni += 1;
                    self.nucleate(n.at.z, s);
                }
                (_, Some(_)) => {
                    let e = self.heap.pop().unwrap();
                    let p = &self.slab[e.plateau as usize];
                    if p.alive && p.version == e.version {
                        self.vanish(e.plateau, e.time);
                    }
                }
                _ => break,
            }
        }
        (
            HeightProfile {
                segments: self.segments,
                horizon: self.horizon,
            },
            self.trace,
        )
    }
}

fn check_nucleations(nucleations: &[Nucleation], horizon: f64) -> Result<()> {
    if !(horizon > 0.0) {
        return Err(Error::invalid("horizon must be positive"));
    }
    if nucleations.windows(2).any(|w| w[0].at.s > w[1].at.s) {
        return Err(Error::invalid("nucleations must be sorted by time"));
    }
    Ok(())
}

/// Single-type growth from a sorted nucleation list.
pub fn evolve_png(nucleations: &[Nucleation], horizon: f64) -> Result<HeightProfile> {
    check_nucleations(nucleations, horizon)?;
    Ok(Engine::new(horizon, false).run(nucleations).0)
}

/// Two-type growth with the competition interface; heights are identical to
/// the single-type evolution on the same nucleation list.
pub fn evolve_two_type(
    nucleations: &[Nucleation],
    horizon: f64,
) -> Result<(HeightProfile, InterfaceTrace)> {
    check_nucleations(nucleations, horizon)?;
    Ok(Engine::new(horizon, true).run(nucleations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lpp;
    use crate::point::{rotate, sample_config, unrotate, PlanarPoint};

    fn bulk(z: f64, s: f64) -> Nucleation {
        Nucleation {
            at: RotatedPoint { z, s },
            origin: NucleationOrigin::Bulk,
        }
    }

    #[test]
    fn no_nucleations_stay_flat() {
        let profile = evolve_png(&[], 10.0).unwrap();
        assert_eq!(profile.height(0.0, 5.0).unwrap(), 0);
        assert_eq!(profile.height(-3.0, 9.9).unwrap(), 0);
    }

    #[test]
    fn single_island_spreads_at_unit_speed() {
        let profile = evolve_png(&[bulk(0.0, 1.0)], 10.0).unwrap();
        for (z, s, want) in [
            (0.0, 0.5, 0),
            (0.0, 1.0, 1),
            (1.9, 3.0, 1),
            (2.1, 3.0, 0),
            (-1.9, 3.0, 1),
            (-2.1, 3.0, 0),
        ] {
            assert_eq!(profile.height(z, s).unwrap(), want, "h({z}, {s})");
        }
        assert!(profile.height(0.0, 11.0).is_err());
    }

    #[test]
    fn same_level_islands_coalesce() {
        let profile = evolve_png(&[bulk(-1.0, 1.0), bulk(1.0, 1.0)], 10.0).unwrap();
        // Inner edges meet at (0, 2) and annihilate; afterwards one island.
        assert_eq!(profile.height(0.0, 1.5).unwrap(), 0);
        assert_eq!(profile.height(0.0, 2.5).unwrap(), 1);
        assert_eq!(profile.height(3.4, 3.5).unwrap(), 1);
        assert_eq!(profile.height(3.6, 3.5).unwrap(), 0);
    }

    #[test]
    fn nucleation_on_island_stacks() {
        let profile = evolve_png(&[bulk(0.0, 1.0), bulk(0.5, 2.0)], 10.0).unwrap();
        assert_eq!(profile.height(0.5, 2.0).unwrap(), 2);
        assert_eq!(profile.height(-0.4, 2.5).unwrap(), 1);
        assert_eq!(profile.height(0.5, 2.5).unwrap(), 2);
    }

    #[test]
    fn axis_points_rotate_onto_the_boundary_rays() {
        let cfg = PointConfig {
            bulk: vec![PlanarPoint::new(1.0, 1.0)],
            sources: vec![1.0],
            sinks: vec![1.0],
            lambda: 1.0,
            rho: 1.0,
            window: (2.0, 2.0),
            seed: 0,
        };
        let nucs = nucleations_from(&cfg);
        assert_eq!(nucs.len(), 3);
        let r = 1.0 / f64::sqrt(2.0);
        for n in &nucs {
            match n.origin {
                NucleationOrigin::PlusBoundary => {
                    assert!((n.at.z - r).abs() < 1e-12 && (n.at.s - r).abs() < 1e-12);
                }
                NucleationOrigin::MinusBoundary => {
                    assert!((n.at.z + r).abs() < 1e-12 && (n.at.s - r).abs() < 1e-12);
                }
                NucleationOrigin::Bulk => {
                    assert!(n.at.z.abs() < 1e-12 && (n.at.s - f64::sqrt(2.0)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn height_equals_rotated_passage_time() {
        let origin = PlanarPoint::new(0.0, 0.0);
        for seed in 0..8 {
            let cfg = sample_config(1.0, 1.0, (12.0, 12.0), 40_000 + seed).unwrap();
            let nucs = nucleations_from(&cfg);
            let horizon = (cfg.window.0 + cfg.window.1) / f64::sqrt(2.0);
            let profile = evolve_png(&nucs, horizon).unwrap();
            for i in 1..=5 {
                for j in 1..=5 {
                    let p = PlanarPoint::new(2.3 * i as f64, 2.3 * j as f64);
                    let q = rotate(p);
                    let want = lpp::last_passage(&cfg, origin, p).unwrap() as i64;
                    assert_eq!(
                        profile.height(q.z, q.s).unwrap(),
                        want,
                        "seed {seed} at ({}, {})",
                        p.x,
                        p.t
                    );
                }
            }
        }
    }

    #[test]
    fn two_type_heights_match_single_type() {
        for seed in 0..6 {
            let cfg = sample_config(1.0, 1.0, (12.0, 12.0), 41_000 + seed).unwrap();
            let nucs = nucleations_from(&cfg);
            let horizon = 16.0;
            let single = evolve_png(&nucs, horizon).unwrap();
            let (two, _) = evolve_two_type(&nucs, horizon).unwrap();
            for i in -12..=12 {
                for j in 1..=15 {
                    let (z, s) = (i as f64 * 0.9, j as f64);
                    assert_eq!(
                        single.height(z, s).unwrap(),
                        two.height(z, s).unwrap(),
                        "seed {seed} at ({z}, {s})"
                    );
                }
            }
        }
    }

    #[test]
    fn opposite_type_islands_stop_and_record() {
        // One type-1 island left of the origin, one type-2 right of it:
        // their inner edges meet midway and freeze.
        let (profile, trace) =
            evolve_two_type(&[bulk(-2.0, 1.0), bulk(2.0, 1.0)], 10.0).unwrap();
        assert_eq!(trace.hits.len(), 1);
        let hit = trace.hits[0];
        assert!((hit.z - 0.0).abs() < 1e-12 && (hit.s - 3.0).abs() < 1e-12);
        assert_eq!(trace.levels, vec![1]);
        assert_eq!(trace.phi_at(2.9), 0.0);
        assert_eq!(trace.phi_at(3.0), 0.0);
        // Heights are the single-type ones: the two islands still cover
        // the seam after the collision.
        assert_eq!(profile.height(0.0, 3.5).unwrap(), 1);
    }

    #[test]
    fn moving_edge_buries_a_frozen_marker() {
        // A type-1 island swallows the substrate seam at the origin before
        // any type-2 material exists, then meets a later type-2 island.
        let (profile, trace) =
            evolve_two_type(&[bulk(-1.0, 1.0), bulk(4.0, 4.0)], 12.0).unwrap();
        // The down-step of the first island passes z=0 at s=2 and keeps
        // going; heights are unaffected.
        assert_eq!(profile.height(1.5, 3.6).unwrap(), 1);
        assert_eq!(trace.hits.len(), 1);
        let hit = trace.hits[0];
        // Unit-speed edges from (-1,1) rightwards and (4,4) leftwards.
        assert!((hit.z - 3.0).abs() < 1e-12 && (hit.s - 5.0).abs() < 1e-12);
    }

    #[test]
    fn interface_matches_the_beta_path_decomposition() {
        for seed in 0..8 {
            let cfg = sample_config(1.0, 1.0, (15.0, 15.0), 42_000 + seed).unwrap();
            let nucs = nucleations_from(&cfg);
            let horizon = (cfg.window.0 + cfg.window.1) / f64::sqrt(2.0);
            let (_, trace) = evolve_two_type(&nucs, horizon).unwrap();
            assert!(!trace.hits.is_empty(), "seed {seed}: no collisions");
            let decomp = lpp::level_decomposition(&cfg);
            let path = lpp::BetaPath {
                points: trace
                    .hits
                    .iter()
                    .zip(&trace.levels)
                    .map(|(&hit, &level)| lpp::BetaPoint {
                        location: unrotate(hit).unwrap(),
                        level: level as usize,
                    })
                    .collect(),
                complete: true,
            };
            for (n, &level) in trace.levels.iter().enumerate() {
                assert_eq!(level as usize, n + 1, "seed {seed}: level order");
            }
            assert!(path.validate(&decomp), "seed {seed}: not a beta-path");
        }
    }

    #[test]
    fn symmetric_interface_drift_is_small() {
        let mut mean = 0.0;
        let reps = 30;
        let horizon = 80.0;
        for i in 0..reps {
            let side = horizon / f64::sqrt(2.0) * 1.3;
            let cfg = sample_config(1.0, 1.0, (side, side), 43_000 + i).unwrap();
            let (_, trace) = evolve_two_type(&nucleations_from(&cfg), horizon).unwrap();
            mean += trace.phi_at(horizon) / horizon;
        }
        mean /= reps as f64;
        assert!(mean.abs() < 0.15, "mean phi/s = {mean}");
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(evolve_png(&[], 0.0).is_err());
        let unsorted = [bulk(0.0, 2.0), bulk(0.0, 1.0)];
        assert!(evolve_png(&unsorted, 5.0).is_err());
    }
}
