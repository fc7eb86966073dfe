//! Fair linear and kernel support vector machines.
//!
//! Trains SVM classifiers under two families of group-fairness constraints:
//! a linear mean-difference constraint that bounds the gap between group
//! score means, and a covariance constraint that bounds the gap between
//! group second moments along the decision direction. The covariance
//! constraint is nonconvex; it is handled by splitting the indefinite gap
//! matrix into a positive and a negative semidefinite part and solving a
//! sequence of convex subproblems that linearize the concave side
//! (a convex-concave procedure). Subproblems are quadratically constrained
//! QPs solved by a primal-dual interior-point method.
//!
//! Model quality and fairness are evaluated over every decision threshold
//! at once: ROC curves against the label give AUC, ROC curves against the
//! group attribute give the maximal demographic-parity and equalized-odds
//! gaps.

pub mod cli;
pub mod data;
pub mod error;
pub mod fairness;
pub mod kernel_svm;
pub mod linalg;
pub mod linear_svm;
pub mod metrics;
pub mod qp;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
