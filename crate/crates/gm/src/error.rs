use thiserror::Error;

#[derive(Debug, Error)]
pub enum GmError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },
    #[error("node {node} is already conditioned in region {region}")]
    AlreadyConditioned { region: usize, node: usize },
    #[error("region {0} has no unassigned node left")]
    NoUnassignedNode(usize),
    #[error("region {0} is not a leaf")]
    NotALeaf(usize),
    #[error("policy needs a rejected configuration")]
    MissingReject,
    #[error("no region can be refined further")]
    NoRefinementAvailable,
    #[error("model JSON: {0}")]
    Json(#[from] serde_json::Error),
}
