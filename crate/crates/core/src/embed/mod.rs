//! Informed starting values: spectral embedding of adjacency matrices,
//! density clustering of the embedded nodes and moment-matched parameters.

mod align;
mod density;
mod init;
mod outliers;
mod spectral;

pub use align::{agreement, align_labels};
pub use density::{density_cluster, kmeans, ClusterLabels, ClusterMethod};
pub use init::{
    init_gamma, init_global_groups, init_layer_groups, init_rho, initial_state, soften, GlobalInit, GlobalStart,
    InitConfig, InitReport, LayerInit,
};
pub use outliers::assign_outliers;
pub use spectral::{spectral_embed, Embedding};
