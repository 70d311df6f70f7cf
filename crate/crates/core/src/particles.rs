use std::ops::Range;

/// Structure-of-arrays particle storage. Charges are ignored when the system
/// is used as a target set.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParticleSystem {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub q: Vec<f64>,
}

impl ParticleSystem {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            x: Vec::with_capacity(n),
            y: Vec::with_capacity(n),
            z: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
        }
    }

    pub fn from_points(points: &[[f64; 3]], charges: &[f64]) -> Self {
        assert_eq!(points.len(), charges.len());
        let mut sys = Self::with_capacity(points.len());
        for (p, &q) in points.iter().zip(charges) {
            sys.push(*p, q);
        }
        sys
    }

    pub fn push(&mut self, p: [f64; 3], q: f64) {
        self.x.push(p[0]);
        self.y.push(p[1]);
        self.z.push(p[2]);
        self.q.push(q);
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    #[inline]
    pub fn position(&self, i: usize) -> [f64; 3] {
        [self.x[i], self.y[i], self.z[i]]
    }

    #[inline]
    pub fn coord(&self, dim: usize) -> &[f64] {
        match dim {
            0 => &self.x,
            1 => &self.y,
            _ => &self.z,
        }
    }

    /// New system whose `i`-th particle is `self[order[i]]`.
    pub fn gather(&self, order: &[usize]) -> Self {
        let pick = |v: &[f64]| order.iter().map(|&i| v[i]).collect::<Vec<_>>();
        Self {
            x: pick(&self.x),
            y: pick(&self.y),
            z: pick(&self.z),
            q: pick(&self.q),
        }
    }

    /// Borrowed view of a contiguous index range.
    pub fn slice(&self, range: Range<usize>) -> ParticleSlice<'_> {
        ParticleSlice {
            x: &self.x[range.clone()],
            y: &self.y[range.clone()],
            z: &self.z[range.clone()],
            q: &self.q[range],
        }
    }

    pub fn view(&self) -> ParticleSlice<'_> {
        self.slice(0..self.len())
    }

    pub fn extend_from_slice(&mut self, s: ParticleSlice<'_>) {
        self.x.extend_from_slice(s.x);
        self.y.extend_from_slice(s.y);
        self.z.extend_from_slice(s.z);
        self.q.extend_from_slice(s.q);
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ParticleSlice<'a> {
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub z: &'a [f64],
    pub q: &'a [f64],
}

impl ParticleSlice<'_> {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    #[inline]
    pub fn position(&self, i: usize) -> [f64; 3] {
        [self.x[i], self.y[i], self.z[i]]
    }
}
