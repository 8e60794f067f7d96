//! Deterministic image-method tracer.
//!
//! Computes the line-of-sight path and every specular reflection path off
//! building faces and the ground, up to a configurable number of bounces.
//! Antennas are isotropic, each bounce costs its material's reflection loss
//! plus a π phase shift, and free-space loss follows Friis.

mod physics;
mod surface;
mod tree;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

pub use physics::{mirror_point, path_phase, path_power, AxisPlane};

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::geom::Vec3;
use crate::scene::{Scene, UserEntry, SPEED_OF_LIGHT};
use physics::{direction_angles, half_open_azimuth};
use surface::{scene_surfaces, segment_clear, Obstacle, Surface};
use tree::{ImageTree, SIDE_EPS};

/// Paths recorded per (BS, user) pair.
pub const MAX_RECORDED_PATHS: usize = 25;
pub const DEFAULT_MAX_REFLECTIONS: usize = 4;

/// One propagation path. Angles in degrees, elevation measured from +z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub aod_az: f64,
    pub aod_el: f64,
    pub aoa_az: f64,
    pub aoa_el: f64,
    /// Linear receive power, watts (unit transmit power).
    pub power: f64,
    /// Radians in [0, 2π).
    pub phase: f64,
    /// Seconds.
    pub delay: f64,
    pub n_reflections: u16,
}

/// Paths between one BS and one user, strongest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathList {
    pub bs_id: u32,
    pub user_index: u64,
    pub user_position: Vec3,
    pub paths: Vec<PathRecord>,
}

/// A path with its geometry kept alongside the record.
#[derive(Debug, Clone, PartialEq)]
pub struct TracedPath {
    pub record: PathRecord,
    /// Reflection points in propagation order.
    pub bounce_points: Vec<Vec3>,
    /// Unfolded polyline length, meters.
    pub length: f64,
}

/// Traces all paths from one base station. Building the tracer precomputes
/// the image tree; tracing individual receivers is then cheap and `&self`.
#[derive(Debug, Clone)]
pub struct Tracer {
    bs_id: u32,
    tx: Vec3,
    carrier_freq: f64,
    surfaces: Vec<Surface>,
    obstacles: Vec<Obstacle>,
    tree: ImageTree,
    max_paths: usize,
}

impl Tracer {
    pub fn new(scene: &Scene, bs_id: u32, max_reflections: usize, max_paths: usize) -> Result<Self> {
        let tx = scene.base_station(bs_id)?.position;
        let surfaces = scene_surfaces(scene);
        let tree = ImageTree::build(&surfaces, tx, max_reflections);
        log::debug!("BS{bs_id}: image tree with {} nodes", tree.nodes.len());
        Ok(Tracer {
            bs_id,
            tx,
            carrier_freq: scene.carrier_freq,
            surfaces,
            obstacles: Obstacle::from_scene(scene),
            tree,
            max_paths,
        })
    }

    pub fn bs_id(&self) -> u32 {
        self.bs_id
    }

    pub fn image_count(&self) -> usize {
        self.tree.nodes.len()
    }

    pub fn trace_user(&self, user: &UserEntry) -> PathList {
        PathList {
            bs_id: self.bs_id,
            user_index: user.global_index,
            user_position: user.position,
            paths: self
                .trace_detailed(user.position)
                .into_iter()
                .map(|p| p.record)
                .collect(),
        }
    }

    /// Traces users given by global index, in the given order.
    pub fn trace_users<E: Executor>(&self, scene: &Scene, users: &[u64], exec: &E) -> Result<Vec<PathList>> {
        exec.map(users.len(), |i| Ok(self.trace_user(&scene.user(users[i])?)))
            .into_iter()
            .collect()
    }

    /// Every path to `rx`, sorted and truncated like [`trace_paths`].
    pub fn trace_detailed(&self, rx: Vec3) -> Vec<TracedPath> {
        let mut found = Vec::new();
        if segment_clear(&self.obstacles, self.tx, rx) && self.tx.distance(rx) > 0.0 {
            found.push(self.assemble(rx, Vec::new(), &[]));
        }
        let mut points = Vec::with_capacity(8);
        let mut losses = Vec::with_capacity(8);
        for node in &self.tree.nodes {
            points.clear();
            losses.clear();
            if self.backtrack(node, rx, &mut points, &mut losses) {
                points.reverse();
                losses.reverse();
                if self.unobstructed(&points, rx) {
                    found.push(self.assemble(rx, points.clone(), &losses));
                }
            }
        }
        found.sort_by(compare_paths);
        found.dedup_by(|b, a| same_geometry(a, b));
        found.truncate(self.max_paths);
        found
    }

    /// Walks from the receiver back to the transmitter through `node`'s
    /// surfaces, collecting reflection points (receiver side first).
    fn backtrack(&self, node: &tree::Node, rx: Vec3, points: &mut Vec<Vec3>, losses: &mut Vec<f64>) -> bool {
        let mut target = rx;
        let mut cur = node;
        loop {
            let s = &self.surfaces[cur.surface as usize];
            if s.side(target) <= SIDE_EPS {
                return false;
            }
            let img = cur.image;
            let t = (s.offset - img[s.axis]) / (target[s.axis] - img[s.axis]);
            if !(t > 0.0 && t < 1.0) {
                return false;
            }
            let mut p = img + (target - img) * t;
            p[s.axis] = s.offset;
            let axes = surface::plane_axes(s.axis);
            for k in 0..2 {
                let x = p[axes[k]];
                let tol = 1e-9 * (1.0 + x.abs());
                if x < cur.lo[k] - tol || x > cur.hi[k] + tol {
                    return false;
                }
            }
            points.push(p);
            losses.push(s.loss_db);
            target = p;
            match cur.parent {
                Some(i) => cur = &self.tree.nodes[i as usize],
                None => return true,
            }
        }
    }

    fn unobstructed(&self, points: &[Vec3], rx: Vec3) -> bool {
        let mut prev = self.tx;
        for &p in points.iter().chain(std::iter::once(&rx)) {
            if !segment_clear(&self.obstacles, prev, p) {
                return false;
            }
            prev = p;
        }
        true
    }

    fn assemble(&self, rx: Vec3, bounce_points: Vec<Vec3>, losses: &[f64]) -> TracedPath {
        let mut length = 0.0;
        let mut prev = self.tx;
        for &p in bounce_points.iter().chain(std::iter::once(&rx)) {
            length += prev.distance(p);
            prev = p;
        }
        let first = bounce_points.first().copied().unwrap_or(rx);
        let last = bounce_points.last().copied().unwrap_or(self.tx);
        let (aod_az, aod_el) = direction_angles(first - self.tx);
        let (aoa_az, aoa_el) = direction_angles(last - rx);
        let n = bounce_points.len() as u16;
        let delay = length / SPEED_OF_LIGHT;
        let power = path_power(length, self.carrier_freq, losses).expect("positive path length and carrier");
        TracedPath {
            record: PathRecord {
                aod_az: half_open_azimuth(aod_az),
                aod_el,
                aoa_az,
                aoa_el,
                power,
                phase: path_phase(delay, u32::from(n), self.carrier_freq),
                delay,
                n_reflections: n,
            },
            bounce_points,
            length,
        }
    }
}

/// Power descending, then delay ascending, then reflection points
/// lexicographically.
fn compare_paths(a: &TracedPath, b: &TracedPath) -> Ordering {
    b.record
        .power
        .total_cmp(&a.record.power)
        .then(a.record.delay.total_cmp(&b.record.delay))
        .then_with(|| {
            let ka = a.bounce_points.iter().flat_map(|p| p.to_array());
            let kb = b.bounce_points.iter().flat_map(|p| p.to_array());
            ka.zip(kb)
                .map(|(x, y)| x.total_cmp(&y))
                .find(|o| o.is_ne())
                .unwrap_or(a.bounce_points.len().cmp(&b.bounce_points.len()))
        })
}

fn same_geometry(a: &TracedPath, b: &TracedPath) -> bool {
    a.bounce_points.len() == b.bounce_points.len()
        && a.bounce_points
            .iter()
            .zip(&b.bounce_points)
            .all(|(p, q)| p.distance(*q) < 1e-9)
}

/// Traces one (BS, position) pair. The returned list has `user_index` 0; use
/// [`Tracer::trace_user`] to stamp a user identity.
pub fn trace_paths(
    scene: &Scene,
    bs_id: u32,
    user_position: Vec3,
    max_reflections: usize,
    max_paths: usize,
) -> Result<PathList> {
    if !user_position.is_finite() {
        return Err(Error::Domain("user position must be finite".into()));
    }
    let tracer = Tracer::new(scene, bs_id, max_reflections, max_paths)?;
    Ok(PathList {
        bs_id,
        user_index: 0,
        user_position,
        paths: tracer
            .trace_detailed(user_position)
            .into_iter()
            .map(|p| p.record)
            .collect(),
    })
}

#[cfg(test)]
mod tests;
