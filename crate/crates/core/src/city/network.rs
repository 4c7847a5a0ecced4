use serde::{Deserialize, Serialize};

use crate::error::{EfdError, Result};
use crate::params::{TrafficParams, METERS_PER_MILE};

/// Map width used by the default 5 x 5 grid (4.2 miles).
pub const DEFAULT_WIDTH: f64 = 4.2 * METERS_PER_MILE;
/// Map height used by the default 5 x 5 grid (3.7 miles).
pub const DEFAULT_HEIGHT: f64 = 3.7 * METERS_PER_MILE;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intersection {
    pub id: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub id: usize,
    /// Lower-numbered endpoint.
    pub a: usize,
    pub b: usize,
    pub length: f64,
}

impl Segment {
    pub fn other_end(&self, node: usize) -> usize {
        if node == self.a {
            self.b
        } else {
            self.a
        }
    }

    /// 0 for travel a -> b, 1 for b -> a.
    pub fn direction_from(&self, node: usize) -> usize {
        usize::from(node != self.a)
    }

    pub fn has_end(&self, node: usize) -> bool {
        node == self.a || node == self.b
    }
}

/// A point on the road network, `offset` meters from the segment's `a` end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetPosition {
    pub segment: usize,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadNetwork {
    pub rows: usize,
    pub cols: usize,
    pub intersections: Vec<Intersection>,
    pub segments: Vec<Segment>,
    /// Incident segment ids per intersection, ordered by neighbor id.
    pub adjacency: Vec<Vec<usize>>,
    /// Current statistics per segment, indexed by [`Segment::direction_from`].
    pub traffic: Vec<[TrafficParams; 2]>,
}

/// Regular `rows x cols` grid covering `width x height` meters.
pub fn build_grid(rows: usize, cols: usize, width: f64, height: f64) -> Result<RoadNetwork> {
    if rows < 2 || cols < 2 {
        return Err(EfdError::InvalidConfig(format!(
            "grid needs at least 2 x 2 intersections, got {rows} x {cols}"
        )));
    }
    if !(width > 0.0 && height > 0.0) {
        return Err(EfdError::InvalidConfig(format!(
            "grid extent must be positive, got {width} x {height}"
        )));
    }
    let dx = width / (cols - 1) as f64;
    let dy = height / (rows - 1) as f64;
    let intersections: Vec<Intersection> = (0..rows * cols)
        .map(|id| Intersection {
            id,
            x: (id % cols) as f64 * dx,
            y: (id / cols) as f64 * dy,
        })
        .collect();
    let mut segments = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let n = r * cols + c;
            if c + 1 < cols {
                segments.push((n, n + 1, dx));
            }
            if r + 1 < rows {
                segments.push((n, n + cols, dy));
            }
        }
    }
    let segments: Vec<Segment> = segments
        .into_iter()
        .enumerate()
        .map(|(id, (a, b, length))| Segment { id, a, b, length })
        .collect();
    let mut adjacency = vec![Vec::new(); rows * cols];
    for s in &segments {
        adjacency[s.a].push(s.id);
        adjacency[s.b].push(s.id);
    }
    for (n, list) in adjacency.iter_mut().enumerate() {
        list.sort_by_key(|&s| segments[s].other_end(n));
    }
    let base = TrafficParams::default();
    let traffic = segments
        .iter()
        .map(|s| [base.with_segment_length(s.length); 2])
        .collect();
    Ok(RoadNetwork {
        rows,
        cols,
        intersections,
        segments,
        adjacency,
        traffic,
    })
}

impl RoadNetwork {
    pub fn node_count(&self) -> usize {
        self.intersections.len()
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn segment_between(&self, u: usize, v: usize) -> Option<usize> {
        self.adjacency[u]
            .iter()
            .copied()
            .find(|&s| self.segments[s].other_end(u) == v)
    }

    /// Applies one set of radio/speed parameters to every segment, keeping
    /// each segment's length and current density.
    pub fn set_base_params(&mut self, base: TrafficParams) {
        for (s, t) in self.segments.iter().zip(self.traffic.iter_mut()) {
            for dir in t.iter_mut() {
                *dir = TrafficParams {
                    lambda: dir.lambda,
                    segment_length: s.length,
                    ..base
                };
            }
        }
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.node_count()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &s in &self.adjacency[u] {
                let v = self.segments[s].other_end(u);
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|x| x)
    }
}
