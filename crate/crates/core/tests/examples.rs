use approx::assert_abs_diff_eq;
use gflow_core::density::{density_to_quantiles, moments, quantiles_to_density, Density, Grid};
use gflow_core::profiles::gaussian_pdf;
use gflow_core::transport::{w2_distance, w2_distance_density};
use statrs::distribution::{ContinuousCDF, Normal};

fn std_normal(grid: Grid<f64>) -> Density<f64> {
    Density::from_fn(grid, |x| gaussian_pdf(x, 0.0, 1.0)).unwrap()
}

#[test]
fn gaussian_two_quantiles() {
    let n = Normal::new(0.0, 1.0).unwrap();
    let q = density_to_quantiles(&std_normal(Grid::new(-6.0, 6.0, 4000).unwrap()), 2).unwrap();
    let x = q.positions();
    assert_abs_diff_eq!(x[0], n.inverse_cdf(0.25), epsilon = 2e-3);
    assert_abs_diff_eq!(x[1], n.inverse_cdf(0.75), epsilon = 2e-3);
}

#[test]
fn gaussian_quantiles_follow_inverse_cdf() {
    let n = Normal::new(0.0, 1.0).unwrap();
    let m = 200;
    let q = density_to_quantiles(&std_normal(Grid::new(-6.0, 6.0, 2400).unwrap()), m).unwrap();
    for (i, &x) in q.positions().iter().enumerate().skip(5).take(m - 10) {
        let p = (i as f64 + 0.5) / m as f64;
        assert_abs_diff_eq!(x, n.inverse_cdf(p), epsilon = 5e-3);
    }
}

#[test]
fn gaussian_round_trip() {
    let grid = Grid::new(-6.0, 6.0, 400).unwrap();
    let rho = std_normal(grid);
    let back = quantiles_to_density(&density_to_quantiles(&rho, 800).unwrap(), &grid);
    assert!(back.l1_distance(&rho).unwrap() <= 0.02);
}

#[test]
fn round_trip_error_halves_under_refinement() {
    let err = |cells: usize, m: usize| {
        let grid = Grid::new(-6.0, 6.0, cells).unwrap();
        let q = density_to_quantiles(&std_normal(Grid::new(-6.0, 6.0, 4000).unwrap()), m).unwrap();
        quantiles_to_density(&q, &grid).l1_error_vs(|x| gaussian_pdf(x, 0.0, 1.0))
    };
    let coarse = err(100, 200);
    let fine = err(200, 400);
    assert!(coarse / fine >= 1.7, "{coarse} vs {fine}");
}

#[test]
fn truncated_gaussian_second_moment() {
    let mo = moments(&std_normal(Grid::new(-6.0, 6.0, 1200).unwrap()));
    assert_abs_diff_eq!(mo.second_moment, 1.0, epsilon = 1e-3);
}

#[test]
fn shifted_gaussians() {
    let grid = Grid::new(-8.0, 10.0, 1800).unwrap();
    let a = Density::from_fn(grid, |x| gaussian_pdf(x, 0.0, 1.0)).unwrap();
    let b = Density::from_fn(grid, |x| gaussian_pdf(x, 2.0, 1.0)).unwrap();
    assert_abs_diff_eq!(w2_distance_density(&a, &b, 800).unwrap(), 2.0, epsilon = 5e-3);
    assert_abs_diff_eq!(w2_distance_density(&a, &a, 800).unwrap(), 0.0, epsilon = 1e-12);
}

#[test]
fn scaled_gaussians() {
    let grid = Grid::new(-12.0, 12.0, 2400).unwrap();
    let a = Density::from_fn(grid, |x| gaussian_pdf(x, 0.0, 1.0)).unwrap();
    let b = Density::from_fn(grid, |x| gaussian_pdf(x, 0.0, 4.0)).unwrap();
    assert_abs_diff_eq!(w2_distance_density(&a, &b, 800).unwrap(), 1.0, epsilon = 5e-3);
}

#[test]
fn unit_translation_of_uniform() {
    let a = density_to_quantiles(&Density::uniform(Grid::new(0.0, 1.0, 40).unwrap()), 400).unwrap();
    let b = density_to_quantiles(&Density::uniform(Grid::new(1.0, 2.0, 40).unwrap()), 400).unwrap();
    assert_abs_diff_eq!(w2_distance(&a, &b).unwrap(), 1.0, epsilon = 1e-12);
}
