use crate::geom::Vec3;
use crate::scene::Scene;

/// The two axes spanning a plane normal to `axis`, ascending.
pub(crate) const fn plane_axes(axis: usize) -> [usize; 2] {
    match axis {
        0 => [1, 2],
        1 => [0, 2],
        _ => [0, 1],
    }
}

/// One reflecting rectangle: a building face or the ground.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Surface {
    pub axis: usize,
    pub offset: f64,
    /// +1 if the outward normal points along +axis, -1 otherwise.
    pub outward: f64,
    /// Extent along `plane_axes(axis)`; infinite for the ground.
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub loss_db: f64,
}

impl Surface {
    /// Signed distance to the plane, positive on the outward side.
    #[inline]
    pub fn side(&self, p: Vec3) -> f64 {
        (p[self.axis] - self.offset) * self.outward
    }
}

pub(crate) fn scene_surfaces(scene: &Scene) -> Vec<Surface> {
    let inf = f64::INFINITY;
    let mut out = vec![Surface {
        axis: 2,
        offset: scene.ground_z,
        outward: 1.0,
        lo: [-inf, -inf],
        hi: [inf, inf],
        loss_db: scene.material_loss_db(&scene.ground_material),
    }];
    for b in &scene.buildings {
        let loss_db = scene.material_loss_db(&b.material_id);
        for axis in 0..3 {
            let [u, v] = plane_axes(axis);
            let lo = [b.min_corner[u], b.min_corner[v]];
            let hi = [b.max_corner[u], b.max_corner[v]];
            for (offset, outward) in [(b.min_corner[axis], -1.0), (b.max_corner[axis], 1.0)] {
                // Bottom faces resting on the ground can never be lit.
                if axis == 2 && outward < 0.0 && offset <= scene.ground_z {
                    continue;
                }
                out.push(Surface {
                    axis,
                    offset,
                    outward,
                    lo,
                    hi,
                    loss_db,
                });
            }
        }
    }
    out
}

/// Axis-aligned box used for occlusion tests, shrunk slightly so that
/// segments touching a face from outside do not count as blocked.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Obstacle {
    min: Vec3,
    max: Vec3,
}

const FACE_TOLERANCE: f64 = 1e-7;

impl Obstacle {
    pub fn from_scene(scene: &Scene) -> Vec<Obstacle> {
        let eps = Vec3::new(FACE_TOLERANCE, FACE_TOLERANCE, FACE_TOLERANCE);
        scene
            .buildings
            .iter()
            .map(|b| Obstacle {
                min: b.min_corner + eps,
                max: b.max_corner - eps,
            })
            .collect()
    }

    /// True if the open segment a→b passes through the box interior.
    pub fn blocks(&self, a: Vec3, b: Vec3) -> bool {
        let d = b - a;
        let mut t0 = 0.0f64;
        let mut t1 = 1.0f64;
        for axis in 0..3 {
            let (lo, hi, p, dp) = (self.min[axis], self.max[axis], a[axis], d[axis]);
            if dp == 0.0 {
                if p <= lo || p >= hi {
                    return false;
                }
            } else {
                let inv = 1.0 / dp;
                let (mut ta, mut tb) = ((lo - p) * inv, (hi - p) * inv);
                if ta > tb {
                    std::mem::swap(&mut ta, &mut tb);
                }
                t0 = t0.max(ta);
                t1 = t1.min(tb);
                if t0 >= t1 {
                    return false;
                }
            }
        }
        t1 > t0
    }
}

pub(crate) fn segment_clear(obstacles: &[Obstacle], a: Vec3, b: Vec3) -> bool {
    !obstacles.iter().any(|o| o.blocks(a, b))
}
