//! Per-image sparse modelling: dictionary learning with K-SVD, ORMP sparse
//! coding, and the closed-form patch-averaging reconstruction whose
//! difference with the input is the residual image.

mod denoise;
mod dictionary;
mod ksvd;
mod ormp;

pub use denoise::{
    denoise, denoise_with_dictionary, estimate_sigma, reconstruct, residual, DenoiseParams,
    Denoised, Residual, SIGMA_FLOOR,
};
pub use dictionary::{init_dictionary, Dictionary, NORM_TOLERANCE};
pub use ksvd::{ksvd_iterate, objective};
pub use ormp::{code_all, ormp, recode_no_worse, Ormp, SparseCode};
