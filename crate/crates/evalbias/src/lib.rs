//! Solver and simulation toolkit for an optimization model of biased
//! evaluation processes.
//!
//! A true-utility density is transformed into the observed density that
//! minimizes an expected risk-weighted loss subject to an entropy lower bound
//! `tau`. The optimum is a Gibbs density of the expected-loss energy; the
//! temperature is the dual variable of the entropy constraint. On top of the
//! solver sit parameter fitting by total-variation distance against observed
//! data, a constrained top-k selection simulator for comparing interventions,
//! and a group-biased preferential-attachment generator for synthetic data.
//!
//! - [`grid`]: finite-support densities (entropy, moments, quantiles, TV).
//! - [`loss`] / [`energy`]: risk-weighted losses and their expected-loss energies.
//! - [`family`]: the four analytic input families and closed-form energies.
//! - [`gibbs`]: the entropy-constrained solver.
//! - [`closed_form`]: analytic solutions used as oracles.
//! - [`fit`]: grid-search fitting of the model and of two baseline models.
//! - [`selection`]: quantile-coupled sampling and constrained top-k selection.
//! - [`netgen`]: biased preferential-attachment network generator.
//! - [`io`]: grouped CSV ingestion and plot-data emission.
//! - [`checks`]: the end-to-end verification suite.

pub mod checks;
pub mod closed_form;
pub mod energy;
pub mod error;
pub mod family;
pub mod fit;
pub mod gibbs;
pub mod grid;
pub mod io;
pub mod loss;
pub mod math;
pub mod netgen;
pub mod selection;

pub use closed_form::{analytic_alpha1, beta_for_entropy, implicit_variance_instance, pareto_limit_density, AnalyticSolution};
pub use energy::{energy_table, EnergyTable};
pub use error::{Error, Result};
pub use family::FamilyParams;
pub use fit::{
    fit_baseline, fit_optprog, fit_optprog_with_report, train_test_split, transform_implicit,
    transform_multiplicative, BaselineFit, BaselineModel, BaselineParams, BaselineSearch,
    FitReport, FitResult, SearchSpace,
};
pub use gibbs::{
    gibbs_density, solve, solve_instance, solve_point_utility, GibbsSolution, InstanceSpec,
};
pub use grid::{Cdf, Density, Grid, GridKind, MomentSummary};
pub use loss::{LossFamily, LossSpec};
pub use netgen::{generate_biased_ba, DegreeRecord, NetworkGenConfig};
pub use selection::{
    constrained_topk, coupled_sample, run_selection, Group, Intervention, SelectionConfig,
    SelectionOutcome, SelectionRule,
};
