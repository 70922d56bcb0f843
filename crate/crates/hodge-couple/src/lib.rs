//! Symmetric FEM–BEM coupling for Hodge–Helmholtz transmission problems.
//!
//! Lowest-order edge/nodal elements inside, RWG / rotated-RWG / P0 / P1
//! boundary elements outside, coupled through the Calderón projector of the
//! Hodge–Helmholtz operator `curl curl − η ∇div − κ²`.

// index loops mirror the element formulas; negated comparisons reject NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments, clippy::type_complexity)]

pub mod bem;
pub mod cli;
pub mod coupling;
pub mod fem;
pub mod geom;
pub mod kernels;
pub mod mesh;
pub mod potentials;
pub mod quad;
pub mod traces;
pub mod verify;

pub use num_complex::Complex64 as C64;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    Mesh(String),
    #[error("gmsh parse error at line {line}: {msg}")]
    Gmsh { line: usize, msg: String },
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("quadrature: {0}")]
    Quadrature(String),
    #[error("solver: {0}")]
    Solver(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// True when `HODGE_COUPLE_DETERMINISTIC=1` is set.
pub fn deterministic() -> bool {
    std::env::var("HODGE_COUPLE_DETERMINISTIC").map(|v| v == "1").unwrap_or(false)
}

/// Map over `0..n` in parallel (when enabled) and return results in index order.
pub(crate) fn par_map<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        if !deterministic() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    (0..n).map(f).collect()
}

/// Set the rayon pool size (when parallel) and faer's global parallelism;
/// the deterministic switch forces serial dense kernels.
pub fn configure_parallelism(threads: Option<usize>) -> Result<()> {
    #[cfg(feature = "parallel")]
    {
        if let Some(n) = threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global()
                .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
        }
        if !deterministic() {
            faer::set_global_parallelism(faer::Par::rayon(threads.unwrap_or(0)));
            return Ok(());
        }
    }
    let _ = threads;
    faer::set_global_parallelism(faer::Par::Seq);
    Ok(())
}
