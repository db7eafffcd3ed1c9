//! Bounding-box hierarchy over consecutive runs of a polyline.
//!
//! Consecutive segments of a polyline are spatially coherent, so splitting the
//! segment list at its midpoint gives tight boxes without any sorting. Nearest
//! segment queries are branch-and-bound over the boxes.

use crate::point::{Point2, Segment};

/// Runs shorter than this are scanned linearly.
pub(crate) const LEAF_SIZE: usize = 8;

/// Whole boundaries below this size skip the hierarchy altogether.
pub(crate) const BRUTE_FORCE_BELOW: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point2,
    pub max: Point2,
}

impl Aabb {
    pub fn empty() -> Self {
        Aabb {
            min: Point2::new(f64::INFINITY, f64::INFINITY),
            max: Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn of_segment(s: &Segment) -> Self {
        Aabb {
            min: Point2::new(s.a.x.min(s.b.x), s.a.y.min(s.b.y)),
            max: Point2::new(s.a.x.max(s.b.x), s.a.y.max(s.b.y)),
        }
    }

    pub fn union(self, o: Aabb) -> Aabb {
        Aabb {
            min: Point2::new(self.min.x.min(o.min.x), self.min.y.min(o.min.y)),
            max: Point2::new(self.max.x.max(o.max.x), self.max.y.max(o.max.y)),
        }
    }

    /// Squared distance from `p` to the box (zero inside).
    #[inline]
    pub fn distance_sq(&self, p: Point2) -> f64 {
        let dx = (self.min.x - p.x).max(0.0).max(p.x - self.max.x);
        let dy = (self.min.y - p.y).max(0.0).max(p.y - self.max.y);
        dx * dx + dy * dy
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }
}

#[derive(Debug, Clone)]
struct Node {
    bbox: Aabb,
    start: u32,
    end: u32,
    /// Index of the left child; the right child is `left + 1`. Zero marks a leaf.
    left: u32,
}

#[derive(Debug, Clone)]
pub struct SegmentIndex {
    nodes: Vec<Node>,
}

impl SegmentIndex {
    pub fn build(segments: &[Segment]) -> Self {
        let mut nodes = Vec::with_capacity(2 * segments.len() / LEAF_SIZE + 1);
        if segments.len() >= BRUTE_FORCE_BELOW {
            nodes.push(Node {
                bbox: Aabb::empty(),
                start: 0,
                end: segments.len() as u32,
                left: 0,
            });
            Self::split(&mut nodes, 0, segments);
        }
        SegmentIndex { nodes }
    }

    fn split(nodes: &mut Vec<Node>, at: usize, segments: &[Segment]) {
        let (start, end) = (nodes[at].start as usize, nodes[at].end as usize);
        if end - start <= LEAF_SIZE {
            nodes[at].bbox = segments[start..end]
                .iter()
                .fold(Aabb::empty(), |b, s| b.union(Aabb::of_segment(s)));
            return;
        }
        let mid = (start + end) / 2;
        let left = nodes.len();
        nodes[at].left = left as u32;
        for (s, e) in [(start, mid), (mid, end)] {
            nodes.push(Node {
                bbox: Aabb::empty(),
                start: s as u32,
                end: e as u32,
                left: 0,
            });
        }
        Self::split(nodes, left, segments);
        Self::split(nodes, left + 1, segments);
        nodes[at].bbox = nodes[left].bbox.union(nodes[left + 1].bbox);
    }

    /// Nearest segment to `p` among those closer than `sqrt(cap_sq)`.
    ///
    /// Returns `(segment index, squared distance)`.
    pub fn nearest_within(
        &self,
        segments: &[Segment],
        p: Point2,
        cap_sq: f64,
    ) -> Option<(usize, f64)> {
        let mut best = cap_sq;
        let mut best_idx = None;
        if self.nodes.is_empty() {
            for (i, s) in segments.iter().enumerate() {
                let d = s.distance_sq(p);
                if d <= best {
                    best = d;
                    best_idx = Some(i);
                }
            }
            return best_idx.map(|i| (i, best));
        }

        let mut stack: [u32; 64] = [0; 64];
        let mut top = 1usize;
        while top > 0 {
            top -= 1;
            let node = &self.nodes[stack[top] as usize];
            if node.bbox.distance_sq(p) > best {
                continue;
            }
            if node.left == 0 {
                for i in node.start as usize..node.end as usize {
                    let d = segments[i].distance_sq(p);
                    if d <= best {
                        best = d;
                        best_idx = Some(i);
                    }
                }
                continue;
            }
            let (l, r) = (node.left, node.left + 1);
            let dl = self.nodes[l as usize].bbox.distance_sq(p);
            let dr = self.nodes[r as usize].bbox.distance_sq(p);
            // Push the farther child first so the nearer one is explored first.
            let (near, far, dfar) = if dl <= dr { (l, r, dr) } else { (r, l, dl) };
            if dfar <= best {
                stack[top] = far;
                top += 1;
            }
            stack[top] = near;
            top += 1;
        }
        best_idx.map(|i| (i, best))
    }

    /// Number of segments crossed by the horizontal ray from `p` towards +x.
    pub fn ray_crossings(&self, segments: &[Segment], p: Point2) -> usize {
        let crosses = |s: &Segment| -> bool {
            if (s.a.y > p.y) == (s.b.y > p.y) {
                return false;
            }
            let t = (p.y - s.a.y) / (s.b.y - s.a.y);
            s.a.x + t * (s.b.x - s.a.x) > p.x
        };
        if self.nodes.is_empty() {
            return segments.iter().filter(|s| crosses(s)).count();
        }
        let mut count = 0;
        let mut stack = vec![0u32];
        while let Some(at) = stack.pop() {
            let node = &self.nodes[at as usize];
            let b = node.bbox;
            if b.max.x < p.x || b.min.y > p.y || b.max.y < p.y {
                continue;
            }
            if node.left == 0 {
                count += segments[node.start as usize..node.end as usize]
                    .iter()
                    .filter(|s| crosses(s))
                    .count();
            } else {
                stack.push(node.left);
                stack.push(node.left + 1);
            }
        }
        count
    }
}
