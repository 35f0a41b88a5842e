//! Tensor-on-tensor regression with missing response values.
//!
//! The crate is `no_std` (it needs `alloc`). It provides
//!
//! * [`tensor`] and [`mask`]: dense order-n tensors, unfoldings, mode and
//!   contraction products, and the masked projection `P_Ω`;
//! * [`linalg`]: SVD, singular value thresholding, nuclear norms, rank
//!   estimation and HOSVD;
//! * [`completion`]: the consensus-ADMM completion step;
//! * [`regression`]: Tucker-constrained coefficient fitting by alternating
//!   least squares, and prediction;
//! * [`solver`]: the outer block-coordinate-descent loop (TRMV);
//! * [`baseline`]: completion-then-regression (TC-MTOT);
//! * [`datagen`]: seeded synthetic generators;
//! * [`metrics`]: SPE/TSPE and cross-validated λ selection.
#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod baseline;
pub mod completion;
pub mod datagen;
pub mod error;
pub mod linalg;
pub mod mask;
pub mod metrics;
pub mod regression;
pub mod solver;
pub mod tensor;

pub use baseline::{tc_complete, tc_mtot_fit};
pub use completion::{admm_complete, AdmmConfig};
pub use datagen::{GeneratorParams, MaskPolicy, SyntheticDataset};
pub use error::{Error, Result};
pub use metrics::{spe, tspe, Tspe};
pub use regression::{predict, CoefficientTensor, TrmvModel};
pub use solver::{default_config, fit, TrmvConfig};
pub use mask::{project_mask, ObservationMask};
pub use tensor::{contract, contract_batched, DenseTensor, Matrix};
