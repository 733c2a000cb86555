//! Deep networks as kernel machines over measures on their parameter space.
//!
//! A network `N(x, θ)` with a fixed architecture, weighted by a rapidly
//! decaying `ρ(θ)`, gives an asymmetric kernel `K(x, θ) = N(x, θ) ρ(θ)`.
//! Functions `f_μ(x) = ∫ K(x, θ) dμ(θ)` with the total variation of `μ` as the
//! norm form the hypothesis space. On a finite set of candidate parameters the
//! learning problems become linear programs:
//!
//! * [`mni`]: minimum norm interpolation, solved both through its dual (the
//!   certificate `ĝ` and the optimal value `C*`) and directly as an L1 problem,
//!   with the support, sign and sparsity structure of the solution checked
//!   against the certificate.
//! * [`reg`]: loss plus `λ·TV` for square and absolute losses.
//! * [`trainer`]: the direct alternative, gradient descent on the expansion
//!   coefficients and network parameters.
//!
//! [`harness`] ties these together into the file-based pipeline driven by the
//! `rkbs` command-line tool.

pub mod candidates;
pub mod data;
pub mod error;
pub mod harness;
pub mod kernel;
pub mod lp;
pub mod measure;
pub mod mni;
pub mod network;
pub mod par;
pub mod reg;
pub mod trainer;

pub use candidates::{refine, sample, BoxSpec, CandidateSet, Provenance, SampleMode};
pub use data::{Dataset, TargetMatrix};
pub use error::{Error, Result};
pub use kernel::{
    feature_matrix, kernel_eval, rank_check, rho, FeatureMatrix, RankReport, WeightFn,
};
pub use lp::{solve_lp, LinearProgram, LpSolution, LpStatus};
pub use measure::{f_mu_eval, prune, tv_norm, Atom, DiscreteMeasure};
pub use mni::{
    argmax_set, solve_dual, solve_mni, verify_representer, DualCertificate, MniOptions, MniReport,
};
pub use network::{forward, grad_params, merge, param_dim, Activation, NetworkParams, NetworkSpec};
pub use par::Exec;
pub use reg::{
    kkt_check, lambda_path, mni_consistency, solve_regularized, Loss, RegProblem, RegReport,
};
pub use trainer::{grad_check, train_expansion, TrainConfig, TrainTrace};
