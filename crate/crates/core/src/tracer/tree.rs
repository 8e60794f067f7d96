//! Image tree for one transmitter.
//!
//! Every node is a sequence of reflecting surfaces together with the image of
//! the transmitter after mirroring across each of them in turn. Each node also
//! carries a conservative window: an axis-aligned rectangle on its last
//! surface containing every point that a ray from the image can reach through
//! the parent's window. Nodes whose window is empty are never created, which
//! keeps the tree small in street canyons. The tree depends only on the
//! transmitter, so it is shared by all receivers of one BS.

use super::surface::{plane_axes, Surface};
use crate::geom::Vec3;

pub(crate) const SIDE_EPS: f64 = 1e-9;

#[derive(Debug, Clone)]
pub(crate) struct Node {
    pub parent: Option<u32>,
    pub surface: u32,
    pub depth: u8,
    pub image: Vec3,
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

#[derive(Debug, Clone)]
pub(crate) struct ImageTree {
    pub nodes: Vec<Node>,
}

type Window = ([f64; 2], [f64; 2]);

fn intersect(a: Window, b: Window) -> Option<Window> {
    let lo = [a.0[0].max(b.0[0]), a.0[1].max(b.0[1])];
    let hi = [a.1[0].min(b.1[0]), a.1[1].min(b.1[1])];
    (lo[0] <= hi[0] && lo[1] <= hi[1]).then_some((lo, hi))
}

impl ImageTree {
    pub fn build(surfaces: &[Surface], tx: Vec3, max_depth: usize) -> ImageTree {
        let mut nodes = Vec::new();
        if max_depth == 0 {
            return ImageTree { nodes };
        }
        for (j, s) in surfaces.iter().enumerate() {
            if s.side(tx) > SIDE_EPS {
                nodes.push(Node {
                    parent: None,
                    surface: j as u32,
                    depth: 1,
                    image: mirror(tx, s),
                    lo: s.lo,
                    hi: s.hi,
                });
            }
        }
        // Breadth-first: nodes are appended as they are expanded.
        let mut cursor = 0;
        while cursor < nodes.len() {
            let node = nodes[cursor].clone();
            if usize::from(node.depth) < max_depth {
                for (j, sj) in surfaces.iter().enumerate() {
                    if j as u32 == node.surface {
                        continue;
                    }
                    if let Some((lo, hi)) = child_window(surfaces, &node, sj) {
                        nodes.push(Node {
                            parent: Some(cursor as u32),
                            surface: j as u32,
                            depth: node.depth + 1,
                            image: mirror(node.image, sj),
                            lo,
                            hi,
                        });
                    }
                }
            }
            cursor += 1;
        }
        ImageTree { nodes }
    }
}

fn mirror(p: Vec3, s: &Surface) -> Vec3 {
    let mut out = p;
    out[s.axis] = 2.0 * s.offset - p[s.axis];
    out
}

/// Window on `sj` lit from `node.image` through `node`'s window, or `None`
/// when no ray can make that bounce.
fn child_window(surfaces: &[Surface], node: &Node, sj: &Surface) -> Option<Window> {
    let si = &surfaces[node.surface as usize];
    let img = node.image;
    // The virtual source must face the next surface.
    if sj.side(img) <= SIDE_EPS {
        return None;
    }
    let face = (sj.lo, sj.hi);
    if sj.axis == si.axis {
        // Parallel planes: the next plane must lie in front of the current
        // one; the window scales about the image point.
        if (sj.offset - si.offset) * si.outward <= SIDE_EPS {
            return None;
        }
        let t = (sj.offset - img[si.axis]) / (si.offset - img[si.axis]);
        if !(t > 1.0) {
            return None;
        }
        let [u, v] = plane_axes(si.axis);
        let proj = |k: usize, x: f64| img[k] + t * (x - img[k]);
        let w = (
            [proj(u, node.lo[0]), proj(v, node.lo[1])],
            [proj(u, node.hi[0]), proj(v, node.hi[1])],
        );
        return intersect(w, face);
    }

    // Perpendicular planes. `kj` indexes sj's axis among si's plane axes,
    // `kw` the remaining axis.
    let si_axes = plane_axes(si.axis);
    let kj = if si_axes[0] == sj.axis { 0 } else { 1 };
    let kw = 1 - kj;
    let w_axis = si_axes[kw];
    // Points of the current window that send rays onto the outward side of
    // sj lie strictly between sj's plane and the image along sj's axis.
    let bound_lo = sj.offset.min(img[sj.axis]);
    let bound_hi = sj.offset.max(img[sj.axis]);
    let c_lo = node.lo[kj].max(bound_lo);
    let c_hi = node.hi[kj].min(bound_hi);
    if c_lo >= c_hi {
        return None;
    }

    // Restrict sj to the outward side of si.
    let sj_axes = plane_axes(sj.axis);
    let ki = if sj_axes[0] == si.axis { 0 } else { 1 };
    let mut face = face;
    if si.outward > 0.0 {
        face.0[ki] = face.0[ki].max(si.offset);
    } else {
        face.1[ki] = face.1[ki].min(si.offset);
    }
    if face.0[ki] > face.1[ki] {
        return None;
    }

    let reaches_image = c_lo <= img[sj.axis] && img[sj.axis] <= c_hi;
    if reaches_image || !node.lo[kw].is_finite() || !node.hi[kw].is_finite() {
        // Projection is unbounded; keep the whole (clipped) face.
        return Some(face);
    }

    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for cj in [c_lo, c_hi] {
        for cw in [node.lo[kw], node.hi[kw]] {
            let mut c = Vec3::ZERO;
            c[si.axis] = si.offset;
            c[sj.axis] = cj;
            c[w_axis] = cw;
            let t = (sj.offset - img[sj.axis]) / (c[sj.axis] - img[sj.axis]);
            let q = img + (c - img) * t;
            for (k, &axis) in sj_axes.iter().enumerate() {
                lo[k] = lo[k].min(q[axis]);
                hi[k] = hi[k].max(q[axis]);
            }
        }
    }
    intersect((lo, hi), face)
}
