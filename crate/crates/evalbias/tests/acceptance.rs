//! Acceptance suite: one test per verification criterion, each printing a
//! pass/fail line. Run with `cargo test --test acceptance -- --nocapture`
//! to see the per-criterion details.

fn run(name: &str, check: fn() -> Result<String, String>) {
    match check() {
        Ok(detail) => println!("PASS {name}: {detail}"),
        Err(reason) => {
            println!("FAIL {name}: {reason}");
            panic!("{name}: {reason}");
        }
    }
}

#[test]
fn criterion_01_gaussian_closed_form() {
    run("gaussian closed form", evalbias::checks::gaussian_closed_form);
}

#[test]
fn criterion_02_pareto_closed_form() {
    run("pareto closed form", evalbias::checks::pareto_closed_form);
}

#[test]
fn criterion_03_exponential_laplace_closed_forms() {
    run(
        "exponential and laplace closed forms",
        evalbias::checks::exponential_laplace_closed_forms,
    );
}

#[test]
fn criterion_04_recovery_loss() {
    run(
        "recovery loss returns the input density",
        evalbias::checks::recovery_loss,
    );
}

#[test]
fn criterion_05_gibbs_identity() {
    run("gibbs identity", evalbias::checks::gibbs_identity);
}

#[test]
fn criterion_06_single_individual_mean() {
    run(
        "single-individual mean",
        evalbias::checks::single_individual_mean,
    );
}

#[test]
fn criterion_07_monotonicity_suite() {
    run("monotonicity suite", evalbias::checks::monotonicity_suite);
}

#[test]
fn criterion_08_dispersion_lower_bounds() {
    run(
        "dispersion lower bounds",
        evalbias::checks::dispersion_lower_bounds,
    );
}

#[test]
fn criterion_09_implicit_variance_targets() {
    run(
        "implicit-variance targets",
        evalbias::checks::implicit_variance_targets,
    );
}

#[test]
fn criterion_10_fitting_oracle() {
    run("fitting oracle", evalbias::checks::fitting_oracle);
}

#[test]
fn criterion_11_synthetic_network_pipeline() {
    run(
        "synthetic network pipeline",
        evalbias::checks::synthetic_network_pipeline,
    );
}

#[test]
fn criterion_12_selection_oracle() {
    run("selection oracle", evalbias::checks::selection_oracle);
}

#[test]
fn criterion_13_pareto_limit_density() {
    run("pareto limit density", evalbias::checks::pareto_limit);
}
