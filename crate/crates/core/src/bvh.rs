//! Bounding volume hierarchy for ray casting and segment occlusion tests.

use crate::math::Vec3;
use crate::mesh::TriangleMesh;

/// Hits closer than this along a ray are ignored, so rays starting on a
/// surface do not immediately hit it.
pub const RAY_T_MIN: f64 = 1e-6;

/// Margin at both ends of an occlusion segment, relative to its length.
pub const SEGMENT_EPS: f64 = 1e-6;

const LEAF_SIZE: usize = 4;
const DET_EPS: f64 = 1e-12;

/// A ray with origin and (not necessarily unit) direction.
#[derive(Debug, Clone, Copy)]
pub struct Ray {
    pub origin: Vec3,
    pub dir: Vec3,
}

/// Nearest intersection along a ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub face: u32,
    /// Parameter along the ray direction; the hit point is `origin + t * dir`.
    pub t: f64,
}

/// Möller–Trumbore ray/triangle intersection.
///
/// Boundaries are inclusive (`u >= 0`, `v >= 0`, `u + v <= 1`), so a ray
/// through a shared edge reports a hit on both adjacent triangles and the
/// caller's tie-break decides. Returns the ray parameter `t`, unbounded.
#[inline]
pub fn ray_triangle(origin: Vec3, dir: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let p = dir.cross(e2);
    let det = e1.dot(p);
    if det.abs() < DET_EPS {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - a;
    let u = s.dot(p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = dir.dot(q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    Some(e2.dot(q) * inv)
}

#[derive(Debug, Clone, Copy)]
struct Aabb {
    lo: Vec3,
    hi: Vec3,
}

impl Aabb {
    const EMPTY: Aabb = Aabb {
        lo: Vec3 { x: f64::INFINITY, y: f64::INFINITY, z: f64::INFINITY },
        hi: Vec3 { x: f64::NEG_INFINITY, y: f64::NEG_INFINITY, z: f64::NEG_INFINITY },
    };

    fn add(&mut self, p: Vec3) {
        self.lo = self.lo.min_components(p);
        self.hi = self.hi.max_components(p);
    }

    fn merge(&mut self, other: &Aabb) {
        self.lo = self.lo.min_components(other.lo);
        self.hi = self.hi.max_components(other.hi);
    }

    fn longest_axis(&self) -> usize {
        let d = self.hi - self.lo;
        if d.x >= d.y && d.x >= d.z {
            0
        } else if d.y >= d.z {
            1
        } else {
            2
        }
    }

    /// Slab test. Returns the entry parameter if the ray overlaps the box
    /// within `[t_min, t_max]`.
    #[inline]
    fn entry(&self, origin: Vec3, inv_dir: Vec3, t_min: f64, t_max: f64) -> Option<f64> {
        let mut t0 = t_min;
        let mut t1 = t_max;
        for axis in 0..3 {
            let inv = inv_dir.component(axis);
            let o = origin.component(axis);
            let mut near = (self.lo.component(axis) - o) * inv;
            let mut far = (self.hi.component(axis) - o) * inv;
            if near > far {
                std::mem::swap(&mut near, &mut far);
            }
            // NaN from 0 * inf means the ray is parallel and inside the slab;
            // keep the current interval in that case.
            if near.is_nan() || far.is_nan() {
                if o < self.lo.component(axis) || o > self.hi.component(axis) {
                    return None;
                }
                continue;
            }
            t0 = t0.max(near);
            t1 = t1.min(far);
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}

#[derive(Debug)]
enum Node {
    Leaf { start: u32, len: u32 },
    Inner { left: u32, right: u32 },
}

#[derive(Debug)]
struct FlatNode {
    aabb: Aabb,
    node: Node,
}

/// Binary BVH over mesh faces.
///
/// Construction is deterministic: faces are sorted by barycenter along the
/// longest axis of the node's bounding box (face index breaks ties) and split
/// at the median; leaves hold at most four faces.
#[derive(Debug)]
pub struct Bvh {
    nodes: Vec<FlatNode>,
    /// Face indices, permuted so each leaf owns a contiguous range.
    order: Vec<u32>,
}

impl Bvh {
    pub fn build(mesh: &TriangleMesh) -> Bvh {
        let n = mesh.face_count();
        let mut order: Vec<u32> = (0..n as u32).collect();
        let boxes: Vec<Aabb> = (0..n as u32)
            .map(|f| {
                let [a, b, c] = mesh.face_vertices(f);
                let mut bb = Aabb::EMPTY;
                bb.add(a);
                bb.add(b);
                bb.add(c);
                bb
            })
            .collect();
        let centers: Vec<Vec3> = (0..n as u32).map(|f| mesh.face_barycenter(f)).collect();
        let mut nodes = Vec::with_capacity(2 * n / LEAF_SIZE + 1);
        build_node(&boxes, &centers, &mut order, 0, &mut nodes);
        Bvh { nodes, order }
    }

    /// Nearest intersection with `t > RAY_T_MIN`.
    ///
    /// Equal-distance hits (rays through shared edges) resolve to the lowest
    /// face index, which makes the result identical to an exhaustive scan of
    /// all faces.
    pub fn ray_first_hit(&self, mesh: &TriangleMesh, ray: Ray) -> Option<RayHit> {
        let inv_dir = Vec3::new(1.0 / ray.dir.x, 1.0 / ray.dir.y, 1.0 / ray.dir.z);
        let mut best: Option<RayHit> = None;
        let mut stack = [0u32; 64];
        let mut top = 0usize;
        stack[top] = 0;
        top += 1;
        while top > 0 {
            top -= 1;
            let node = &self.nodes[stack[top] as usize];
            let limit = best.map_or(f64::INFINITY, |h| h.t);
            // Prune only strictly farther boxes so equal-t tie-breaks stay
            // reachable.
            match node.aabb.entry(ray.origin, inv_dir, RAY_T_MIN, f64::INFINITY) {
                Some(entry) if entry <= limit => {}
                _ => continue,
            }
            match node.node {
                Node::Leaf { start, len } => {
                    for &face in &self.order[start as usize..(start + len) as usize] {
                        let [a, b, c] = mesh.face_vertices(face);
                        if let Some(t) = ray_triangle(ray.origin, ray.dir, a, b, c) {
                            if t > RAY_T_MIN && closer(t, face, best) {
                                best = Some(RayHit { face, t });
                            }
                        }
                    }
                }
                Node::Inner { left, right } => {
                    let tl = self.nodes[left as usize]
                        .aabb
                        .entry(ray.origin, inv_dir, RAY_T_MIN, limit);
                    let tr = self.nodes[right as usize]
                        .aabb
                        .entry(ray.origin, inv_dir, RAY_T_MIN, limit);
                    // Push the farther child first so the nearer one pops first.
                    match (tl, tr) {
                        (Some(l), Some(r)) => {
                            let (first, second) = if l <= r { (left, right) } else { (right, left) };
                            stack[top] = second;
                            stack[top + 1] = first;
                            top += 2;
                        }
                        (Some(_), None) => {
                            stack[top] = left;
                            top += 1;
                        }
                        (None, Some(_)) => {
                            stack[top] = right;
                            top += 1;
                        }
                        (None, None) => {}
                    }
                }
            }
        }
        best
    }

    /// Whether the open segment between `from` and `to` is blocked by any
    /// face not listed in `exclude`.
    ///
    /// Both segment ends are trimmed by [`SEGMENT_EPS`] (relative to segment
    /// length), so surfaces touching either endpoint do not count.
    pub fn segment_occluded(
        &self,
        mesh: &TriangleMesh,
        from: Vec3,
        to: Vec3,
        exclude: &[u32],
    ) -> bool {
        let dir = to - from;
        let inv_dir = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let (t_lo, t_hi) = (SEGMENT_EPS, 1.0 - SEGMENT_EPS);
        let mut stack = [0u32; 64];
        let mut top = 0usize;
        stack[top] = 0;
        top += 1;
        while top > 0 {
            top -= 1;
            let node = &self.nodes[stack[top] as usize];
            if node.aabb.entry(from, inv_dir, t_lo, t_hi).is_none() {
                continue;
            }
            match node.node {
                Node::Leaf { start, len } => {
                    for &face in &self.order[start as usize..(start + len) as usize] {
                        if exclude.contains(&face) {
                            continue;
                        }
                        let [a, b, c] = mesh.face_vertices(face);
                        if let Some(t) = ray_triangle(from, dir, a, b, c) {
                            if t > t_lo && t < t_hi {
                                return true;
                            }
                        }
                    }
                }
                Node::Inner { left, right } => {
                    stack[top] = left;
                    stack[top + 1] = right;
                    top += 2;
                }
            }
        }
        false
    }

    /// Depth of the tree (a single leaf has depth 0).
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[FlatNode], i: u32) -> usize {
            match nodes[i as usize].node {
                Node::Leaf { .. } => 0,
                Node::Inner { left, right } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[inline]
fn closer(t: f64, face: u32, best: Option<RayHit>) -> bool {
    match best {
        None => true,
        Some(h) => t < h.t || (t == h.t && face < h.face),
    }
}

fn build_node(
    boxes: &[Aabb],
    centers: &[Vec3],
    order: &mut [u32],
    offset: u32,
    nodes: &mut Vec<FlatNode>,
) -> u32 {
    let mut aabb = Aabb::EMPTY;
    for &f in order.iter() {
        aabb.merge(&boxes[f as usize]);
    }
    let index = nodes.len() as u32;
    if order.len() <= LEAF_SIZE {
        nodes.push(FlatNode {
            aabb,
            node: Node::Leaf { start: offset, len: order.len() as u32 },
        });
        return index;
    }
    let axis = aabb.longest_axis();
    order.sort_unstable_by(|&a, &b| {
        centers[a as usize]
            .component(axis)
            .total_cmp(&centers[b as usize].component(axis))
            .then(a.cmp(&b))
    });
    let mid = order.len() / 2;
    nodes.push(FlatNode {
        aabb,
        node: Node::Inner { left: 0, right: 0 },
    });
    let (lo, hi) = order.split_at_mut(mid);
    let left = build_node(boxes, centers, lo, offset, nodes);
    let right = build_node(boxes, centers, hi, offset + mid as u32, nodes);
    match &mut nodes[index as usize].node {
        Node::Inner { left: l, right: r } => {
            *l = left;
            *r = right;
        }
        Node::Leaf { .. } => unreachable!(),
    }
    index
}
