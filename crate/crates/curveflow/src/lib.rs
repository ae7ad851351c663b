//! Numerical toolkit for a nonlocal curvature flow that deforms one locally
//! convex plane curve into another of the same winding number while keeping
//! the elastic energy `∮ dθ/ρ` constant.
//!
//! Curves are parametrized by tangent angle on `[0, 2πm)` and represented by
//! their radius of curvature `ρ` or support function `p`; see [`geometry`].
//! The flow itself lives in [`solver`], convergence diagnostics in
//! [`analysis`], and the configuration/file formats behind the `curveflow`
//! binary in [`config`] and [`io`].

pub mod analysis;
pub mod commands;
pub mod config;
pub mod error;
pub mod geometry;
pub mod io;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};

#[cfg(test)]
pub(crate) mod test_fixtures {
    use crate::geometry::{
        eval_trig_support, radius_from_support, Harmonic, TangentAngleGrid, TrigSupportSpec,
    };
    use crate::solver::FlowProblem;

    /// Initial-curve constant tuned so both example curves carry the same
    /// elastic energy (computed on the 512-node grid, where quadrature is
    /// exact to roundoff for these profiles).
    pub const MATCHED_CONSTANT: f64 = 11.673542947120707;

    /// The bundled example: two threefold curves of equal elastic energy.
    pub fn threefold_problem(n: usize) -> FlowProblem {
        let grid = TangentAngleGrid::new(n, 3).unwrap();
        let target = eval_trig_support(
            &TrigSupportSpec::new(
                10.0,
                vec![Harmonic {
                    k: 2,
                    sin: 10.0,
                    cos: 10.0,
                }],
            ),
            grid,
        )
        .unwrap();
        let initial = radius_from_support(
            &eval_trig_support(
                &TrigSupportSpec::new(
                    MATCHED_CONSTANT,
                    vec![Harmonic {
                        k: 4,
                        sin: 9.0,
                        cos: 9.0,
                    }],
                ),
                grid,
            )
            .unwrap(),
        );
        FlowProblem::new(initial, target).unwrap()
    }
}
