use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::{SimConfig, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Placement of edge servers and users plus the derived coverage sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkTopology {
    edge_positions: Vec<Point>,
    user_positions: Vec<Point>,
    cell_radius: f64,
    /// E^u, ascending server index.
    servers_of_user: Vec<Vec<usize>>,
    /// U^e, ascending user index.
    users_of_server: Vec<Vec<usize>>,
    /// distance[e][u] in meters.
    distance: Vec<Vec<f64>>,
}

impl NetworkTopology {
    pub fn from_positions(edges: Vec<Point>, users: Vec<Point>, cell_radius: f64) -> Self {
        let distance: Vec<Vec<f64>> = edges
            .iter()
            .map(|e| users.iter().map(|u| e.distance(u)).collect())
            .collect();
        let mut servers_of_user = vec![Vec::new(); users.len()];
        let mut users_of_server = vec![Vec::new(); edges.len()];
        for (e, row) in distance.iter().enumerate() {
            for (u, &d) in row.iter().enumerate() {
                if d <= cell_radius {
                    servers_of_user[u].push(e);
                    users_of_server[e].push(u);
                }
            }
        }
        Self {
            edge_positions: edges,
            user_positions: users,
            cell_radius,
            servers_of_user,
            users_of_server,
            distance,
        }
    }

    pub fn num_edges(&self) -> usize {
        self.edge_positions.len()
    }

    pub fn num_users(&self) -> usize {
        self.user_positions.len()
    }

    pub fn edge_positions(&self) -> &[Point] {
        &self.edge_positions
    }

    pub fn user_positions(&self) -> &[Point] {
        &self.user_positions
    }

    pub fn cell_radius(&self) -> f64 {
        self.cell_radius
    }

    pub fn servers_covering(&self, user: usize) -> &[usize] {
        &self.servers_of_user[user]
    }

    pub fn users_covered_by(&self, edge: usize) -> &[usize] {
        &self.users_of_server[edge]
    }

    pub fn covers(&self, edge: usize, user: usize) -> bool {
        self.distance[edge][user] <= self.cell_radius
    }

    pub fn distance(&self, edge: usize, user: usize) -> f64 {
        self.distance[edge][user]
    }

    pub fn is_multi_covered(&self, user: usize) -> bool {
        self.servers_of_user[user].len() >= 2
    }

    /// U^E: users that can choose between single and joint transmission.
    pub fn multi_covered_users(&self) -> Vec<usize> {
        (0..self.num_users())
            .filter(|&u| self.is_multi_covered(u))
            .collect()
    }
}

/// Deterministic server layout: one server at the origin, three on an
/// equilateral triangle with side `r`, otherwise a ring of radius `0.9 r`.
pub fn edge_layout(num_edges: usize, radius: f64) -> Vec<Point> {
    match num_edges {
        1 => vec![Point::new(0.0, 0.0)],
        3 => {
            let circum = radius / 3f64.sqrt();
            (0..3)
                .map(|k| {
                    let angle = std::f64::consts::FRAC_PI_2
                        + k as f64 * 2.0 * std::f64::consts::PI / 3.0;
                    Point::new(circum * angle.cos(), circum * angle.sin())
                })
                .collect()
        }
        n => {
            let ring = 0.9 * radius;
            (0..n)
                .map(|k| {
                    let angle = k as f64 * 2.0 * std::f64::consts::PI / n as f64;
                    Point::new(ring * angle.cos(), ring * angle.sin())
                })
                .collect()
        }
    }
}

/// The user deployment area: the smallest disc around the server centroid
/// that contains every cell.
fn deployment_disc(edges: &[Point], radius: f64) -> (Point, f64) {
    let n = edges.len() as f64;
    let center = Point::new(
        edges.iter().map(|p| p.x).sum::<f64>() / n,
        edges.iter().map(|p| p.y).sum::<f64>() / n,
    );
    let reach = edges
        .iter()
        .map(|p| p.distance(&center))
        .fold(0.0, f64::max);
    (center, reach + radius)
}

/// Area in km² over which users are scattered.
pub fn deployment_area_km2(cfg: &SimConfig) -> f64 {
    let edges = edge_layout(cfg.num_edges, cfg.cell_radius_m);
    let (_, r) = deployment_disc(&edges, cfg.cell_radius_m);
    std::f64::consts::PI * r * r * 1e-6
}

/// Draws the number of users: the override if present, otherwise Poisson with
/// mean `λ · area`.
pub fn sample_user_count<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> usize {
    match cfg.fixed_users {
        Some(n) => n,
        None => {
            let mean = cfg.user_density_per_km2 * deployment_area_km2(cfg);
            Poisson::new(mean).expect("positive Poisson mean").sample(rng) as usize
        }
    }
}

pub fn sample_topology<R: Rng + ?Sized>(
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<NetworkTopology, SimError> {
    cfg.validate()?;
    let edges = edge_layout(cfg.num_edges, cfg.cell_radius_m);
    if let Some(users) = &cfg.user_positions {
        if users.is_empty() {
            return Err(SimError::EmptyTopology);
        }
        return Ok(NetworkTopology::from_positions(edges, users.clone(), cfg.cell_radius_m));
    }
    let (center, disc) = deployment_disc(&edges, cfg.cell_radius_m);
    let count = sample_user_count(cfg, rng);
    if count == 0 {
        return Err(SimError::EmptyTopology);
    }
    let users = (0..count)
        .map(|_| {
            let rho = disc * rng.random::<f64>().sqrt();
            let angle = 2.0 * std::f64::consts::PI * rng.random::<f64>();
            Point::new(center.x + rho * angle.cos(), center.y + rho * angle.sin())
        })
        .collect();
    Ok(NetworkTopology::from_positions(edges, users, cfg.cell_radius_m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    #[test]
    fn fixed_count_three_cells() {
        let cfg = SimConfig {
            fixed_users: Some(20),
            ..SimConfig::default()
        };
        let mut rng = stream(7, Stream::Topology);
        let topo = sample_topology(&cfg, &mut rng).unwrap();
        assert_eq!(topo.num_users(), 20);
        assert_eq!(topo.num_edges(), 3);
    }

    #[test]
    fn explicit_positions_override_sampling() {
        let users = vec![Point::new(0.0, 0.0), Point::new(5.0, 5.0)];
        let cfg = SimConfig {
            num_edges: 2,
            fixed_users: Some(20),
            user_positions: Some(users.clone()),
            ..SimConfig::default()
        };
        let topo = sample_topology(&cfg, &mut stream(7, Stream::Topology)).unwrap();
        assert_eq!(topo.user_positions(), users.as_slice());
        assert_eq!(topo.multi_covered_users(), vec![0, 1]);
    }

    #[test]
    fn triangle_cells_intersect() {
        let edges = edge_layout(3, 100.0);
        for a in 0..3 {
            for b in (a + 1)..3 {
                assert!((edges[a].distance(&edges[b]) - 100.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn zero_distance_user_is_covered() {
        let topo = NetworkTopology::from_positions(
            vec![Point::new(0.0, 0.0)],
            vec![Point::new(0.0, 0.0)],
            100.0,
        );
        assert_eq!(topo.servers_covering(0), &[0]);
        assert_eq!(topo.users_covered_by(0), &[0]);
    }

    #[test]
    fn coverage_matches_distance_rule() {
        let cfg = SimConfig {
            fixed_users: Some(200),
            ..SimConfig::default()
        };
        let topo = sample_topology(&cfg, &mut stream(3, Stream::Topology)).unwrap();
        for u in 0..topo.num_users() {
            for e in 0..topo.num_edges() {
                let inside = topo.distance(e, u) <= cfg.cell_radius_m;
                assert_eq!(topo.servers_covering(u).contains(&e), inside);
                assert_eq!(topo.users_covered_by(e).contains(&u), inside);
            }
        }
    }

    #[test]
    fn boundary_distance_counts_as_covered() {
        let topo = NetworkTopology::from_positions(
            vec![Point::new(0.0, 0.0)],
            vec![Point::new(100.0, 0.0), Point::new(100.000001, 0.0)],
            100.0,
        );
        assert!(topo.covers(0, 0));
        assert!(!topo.covers(0, 1));
    }

    #[test]
    fn empty_topology_is_signalled() {
        let cfg = SimConfig {
            user_density_per_km2: 1e-9,
            ..SimConfig::default()
        };
        let err = sample_topology(&cfg, &mut stream(1, Stream::Topology)).unwrap_err();
        assert_eq!(err, SimError::EmptyTopology);
    }
}
