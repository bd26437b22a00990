//! Discrete pairwise models `p(x) = Π_n ψ_n(x_n) Π_e φ_e(x_u, x_v)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::GmError;

pub type Configuration = Vec<usize>;

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    /// `log_phi[a][b] = ln φ(x_u = a, x_v = b)`.
    pub log_phi: Vec<Vec<f64>>,
    pub log_max: f64,
    pub log_min: f64,
}

impl Edge {
    /// `ln φ` with `a` the value of `node` and `b` the value of the other end.
    pub fn value_from(&self, node: usize, a: usize, b: usize) -> f64 {
        if node == self.u {
            self.log_phi[a][b]
        } else {
            self.log_phi[b][a]
        }
    }

    pub fn other(&self, node: usize) -> usize {
        if node == self.u {
            self.v
        } else {
            self.u
        }
    }

    /// Slack of replacing `φ` by its maximum, `ln(φmax / φmin)`.
    pub fn spread(&self) -> f64 {
        self.log_max - self.log_min
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseModel {
    log_psi: Vec<Vec<f64>>,
    edges: Vec<Edge>,
    incident: Vec<Vec<usize>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeJson {
    id: usize,
    domain: usize,
    log_psi: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EdgeJson {
    u: usize,
    v: usize,
    log_phi: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelJson {
    nodes: Vec<NodeJson>,
    edges: Vec<EdgeJson>,
}

impl PairwiseModel {
    pub fn new(log_psi: Vec<Vec<f64>>, edges: Vec<(usize, usize, Vec<Vec<f64>>)>) -> Result<Self, GmError> {
        let invalid = |m: String| Err(GmError::InvalidModel(m));
        for (n, psi) in log_psi.iter().enumerate() {
            if psi.is_empty() {
                return invalid(format!("node {n} has an empty domain"));
            }
            if psi.iter().any(|v| !v.is_finite()) {
                return invalid(format!("node {n} has a non-finite potential"));
            }
        }
        let mut incident = vec![Vec::new(); log_psi.len()];
        let mut out = Vec::with_capacity(edges.len());
        for (id, (u, v, log_phi)) in edges.into_iter().enumerate() {
            if u >= log_psi.len() || v >= log_psi.len() || u == v {
                return invalid(format!("edge {id} joins invalid nodes {u} and {v}"));
            }
            if log_phi.len() != log_psi[u].len() || log_phi.iter().any(|row| row.len() != log_psi[v].len()) {
                return invalid(format!("edge {id} table does not match the domains of {u} and {v}"));
            }
            let flat = log_phi.iter().flatten();
            if flat.clone().any(|v| !v.is_finite()) {
                return invalid(format!("edge {id} has a non-finite potential"));
            }
            let log_max = flat.clone().copied().fold(f64::NEG_INFINITY, f64::max);
            let log_min = flat.copied().fold(f64::INFINITY, f64::min);
            incident[u].push(id);
            incident[v].push(id);
            out.push(Edge {
                u,
                v,
                log_phi,
                log_max,
                log_min,
            });
        }
        Ok(Self {
            log_psi,
            edges: out,
            incident,
        })
    }

    /// A `rows x cols` Ising grid with spins `s = 2x - 1`, fields
    /// `ln ψ = h s` and couplings `ln φ = J s s'`, `h, J ~ N(0, sigma)`.
    /// Nodes are row-major; each node adds its right edge, then its down edge.
    pub fn ising(rows: usize, cols: usize, sigma: f64, seed: u64) -> Result<Self, GmError> {
        if rows == 0 || cols == 0 {
            return Err(GmError::InvalidModel("grid must have at least one node".into()));
        }
        let normal = Normal::new(0.0, sigma).map_err(|e| GmError::InvalidModel(format!("sigma: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut psi = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            let h: f64 = normal.sample(&mut rng);
            psi.push(vec![-h, h]);
        }
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let n = r * cols + c;
                let mut add = |m: usize| {
                    let j: f64 = normal.sample(&mut rng);
                    edges.push((n, m, vec![vec![j, -j], vec![-j, j]]));
                };
                if c + 1 < cols {
                    add(n + 1);
                }
                if r + 1 < rows {
                    add(n + cols);
                }
            }
        }
        Self::new(psi, edges)
    }

    pub fn from_json(text: &str) -> Result<Self, GmError> {
        let parsed: ModelJson = serde_json::from_str(text)?;
        let mut psi = vec![None; parsed.nodes.len()];
        for node in parsed.nodes {
            if node.id >= psi.len() || psi[node.id].is_some() {
                return Err(GmError::InvalidModel(format!("node ids must be 0..n without repeats, got {}", node.id)));
            }
            if node.log_psi.len() != node.domain {
                return Err(GmError::InvalidModel(format!(
                    "node {} declares domain {} but has {} potentials",
                    node.id,
                    node.domain,
                    node.log_psi.len()
                )));
            }
            psi[node.id] = Some(node.log_psi);
        }
        let psi = psi.into_iter().map(|p| p.expect("every id filled")).collect();
        Self::new(psi, parsed.edges.into_iter().map(|e| (e.u, e.v, e.log_phi)).collect())
    }

    pub fn to_json(&self) -> String {
        let doc = ModelJson {
            nodes: self
                .log_psi
                .iter()
                .enumerate()
                .map(|(id, p)| NodeJson {
                    id,
                    domain: p.len(),
                    log_psi: p.clone(),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeJson {
                    u: e.u,
                    v: e.v,
                    log_phi: e.log_phi.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("model serializes")
    }

    pub fn num_nodes(&self) -> usize {
        self.log_psi.len()
    }

    pub fn domain(&self, node: usize) -> usize {
        self.log_psi[node].len()
    }

    pub fn log_psi(&self, node: usize) -> &[f64] {
        &self.log_psi[node]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> &Edge {
        &self.edges[id]
    }

    pub fn incident(&self, node: usize) -> &[usize] {
        &self.incident[node]
    }

    /// Number of joint configurations.
    pub fn configuration_count(&self) -> u128 {
        self.log_psi.iter().map(|p| p.len() as u128).product()
    }

    pub fn log_p(&self, x: &[usize]) -> f64 {
        if x.len() != self.num_nodes() || x.iter().zip(&self.log_psi).any(|(&v, p)| v >= p.len()) {
            return f64::NEG_INFINITY;
        }
        let unary: f64 = x.iter().zip(&self.log_psi).map(|(&v, p)| p[v]).sum();
        let pairwise: f64 = self.edges.iter().map(|e| e.log_phi[x[e.u]][x[e.v]]).sum();
        unary + pairwise
    }
}

impl osstar_core::Target<Configuration> for PairwiseModel {
    fn log_p(&self, x: &Configuration) -> f64 {
        PairwiseModel::log_p(self, x)
    }
}
