//! Numerical and combinatorial kernels for random-like matrices built from
//! skew-shift orbits.

pub mod error;
pub mod expsum;
pub mod extreal;
pub mod graphcore;
pub mod matrixmodel;
pub mod momentengine;
pub mod quad;
pub mod spectra;
pub mod sum;

pub use error::{Error, Result};
pub use extreal::{phase_frac, ExtReal};
pub use matrixmodel::{
    build_matrix, make_frequencies, DeterministicModel, FrequencyKind, FrequencySequence,
    LinearTerm, ModelConfig, PhaseMatrix, QuadForm,
};

/// Sets the thread count used by the dense eigensolver.
pub fn set_threads(threads: usize) {
    let par = if threads <= 1 {
        faer::Par::Seq
    } else {
        faer::Par::rayon(threads)
    };
    faer::set_global_parallelism(par);
}
