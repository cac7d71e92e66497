//! Stereographic spherical sliced Wasserstein distances on 𝕊^d.
//!
//! The crate maps measures on the hypersphere into ℝ^d with a capped
//! stereographic projection followed by a radial rescaling, slices them with
//! random directions and averages closed-form one-dimensional transport
//! costs. On top of the distance it provides rotation-invariant variants,
//! analytic particle gradients, gradient-flow drivers and the evaluation
//! metrics used to compare sliced distances.
//!
//! ```
//! use s3w::distance::{s3w, EmpiricalMeasure, ProjectionSet, S3WConfig};
//! use s3w::rng::rng_from_seed;
//! use s3w::sphere::sample_uniform;
//!
//! let mut rng = rng_from_seed(7);
//! let mu = EmpiricalMeasure::uniform(&sample_uniform(2, 200, &mut rng)?)?;
//! let nu = EmpiricalMeasure::uniform(&sample_uniform(2, 200, &mut rng)?)?;
//! let cfg = S3WConfig::default();
//! let proj = ProjectionSet::sample(2, cfg.n_projections, &mut rng)?;
//! let d = s3w(&mu, &nu, &cfg, &proj)?;
//! assert!(d > 0.0 && d < 0.5);
//! # Ok::<(), s3w::Error>(())
//! ```

pub mod distance;
pub mod error;
pub mod eval;
pub mod grad;
pub mod io;
pub mod ot1d;
pub mod rng;
pub mod sort;
pub mod sphere;
pub mod sum;

pub use error::{Error, Result};

// The guide's code blocks run as doctests of these empty modules.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident) => {
            #[doc = include_str!(concat!("../../../book/src/", stringify!($name), ".md"))]
            mod $name {}
        };
    }
    chapter!(introduction);
    chapter!(sphere);
    chapter!(transport_1d);
    chapter!(distances);
    chapter!(flows);
    chapter!(evaluation);
    chapter!(reproducibility);
    chapter!(cli);
}
