use crate::linalg::Vec3;
use crate::scalar::Real;

/// Static 3-d tree for fixed-radius queries. The tree is implicit in a
/// permutation of point indices: each subrange stores its splitting point at
/// the midpoint.
#[derive(Clone, Debug)]
pub struct KdTree<T> {
    points: Vec<Vec3<T>>,
    order: Vec<usize>,
    axis: Vec<u8>,
}

impl<T: Real> KdTree<T> {
    pub fn new(points: Vec<Vec3<T>>) -> Self {
        let n = points.len();
        let mut tree = Self {
            points,
            order: (0..n).collect(),
            axis: vec![0; n],
        };
        tree.build(0, n);
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn build(&mut self, lo: usize, hi: usize) {
        if hi <= lo + 1 {
            return;
        }
        let mut min = [T::infinity(); 3];
        let mut max = [T::neg_infinity(); 3];
        for &i in &self.order[lo..hi] {
            for k in 0..3 {
                min[k] = min[k].min(self.points[i][k]);
                max[k] = max[k].max(self.points[i][k]);
            }
        }
        let a = (0..3)
            .max_by(|&i, &j| (max[i] - min[i]).partial_cmp(&(max[j] - min[j])).unwrap())
            .unwrap();
        let mid = (lo + hi) / 2;
        let pts = &self.points;
        self.order[lo..hi].select_nth_unstable_by(mid - lo, |&i, &j| {
            pts[i][a].partial_cmp(&pts[j][a]).unwrap_or(std::cmp::Ordering::Equal)
        });
        self.axis[mid] = a as u8;
        self.build(lo, mid);
        self.build(mid + 1, hi);
    }

    /// Indices of all points within distance `r` of `q` (inclusive), ascending.
    pub fn within(&self, q: Vec3<T>, r: T) -> Vec<usize> {
        let mut out = Vec::new();
        self.search(0, self.points.len(), q, r, r * r, &mut out);
        out.sort_unstable();
        out
    }

    fn search(&self, lo: usize, hi: usize, q: Vec3<T>, r: T, r2: T, out: &mut Vec<usize>) {
        if lo >= hi {
            return;
        }
        let mid = (lo + hi) / 2;
        let i = self.order[mid];
        let p = self.points[i];
        let d2 = (0..3).map(|k| (p[k] - q[k]) * (p[k] - q[k])).fold(T::zero(), |s, x| s + x);
        if d2 <= r2 {
            out.push(i);
        }
        if hi - lo == 1 {
            return;
        }
        let a = self.axis[mid] as usize;
        let d = q[a] - p[a];
        if d <= r {
            self.search(lo, mid, q, r, r2, out);
        }
        if d >= -r {
            self.search(mid + 1, hi, q, r, r2, out);
        }
    }
}
