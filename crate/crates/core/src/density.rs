//! Eulerian (grid) and Lagrangian (equal-mass quantile) views of a probability
//! density on a truncated interval, plus conversions between them.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Uniform cell-centered grid on `[x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid<T> {
    x_min: T,
    x_max: T,
    n_cells: usize,
}

impl<T: Real> Grid<T> {
    pub fn new(x_min: T, x_max: T, n_cells: usize) -> Result<Self> {
        if !(x_min < x_max) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "need finite x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if n_cells == 0 {
            return Err(Error::InvalidGrid("n_cells must be positive".into()));
        }
        Ok(Self { x_min, x_max, n_cells })
    }

    pub fn x_min(&self) -> T {
        self.x_min
    }

    pub fn x_max(&self) -> T {
        self.x_max
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn length(&self) -> T {
        self.x_max - self.x_min
    }

    /// Cell width.
    pub fn h(&self) -> T {
        self.length() / T::of_usize(self.n_cells)
    }

    /// Center of cell `j`.
    pub fn center(&self, j: usize) -> T {
        self.x_min + (T::of_usize(j) + T::lit(0.5)) * self.h()
    }

    /// Left edge of cell `j` (`j == n_cells` gives `x_max`).
    pub fn edge(&self, j: usize) -> T {
        if j == self.n_cells {
            self.x_max
        } else {
            self.x_min + T::of_usize(j) * self.h()
        }
    }

    pub fn centers(&self) -> Vec<T> {
        (0..self.n_cells).map(|j| self.center(j)).collect()
    }

    /// Smallest admissible gap between consecutive quantile positions.
    pub fn min_gap(&self) -> T {
        T::lit(1e-10) * self.length()
    }

    /// Index of the cell containing `x`, clamped to the grid.
    pub fn cell_of(&self, x: T) -> usize {
        let s = ((x - self.x_min) / self.h()).floor();
        if s <= T::zero() {
            0
        } else {
            s.to_usize().unwrap_or(usize::MAX).min(self.n_cells - 1)
        }
    }

    pub fn contains(&self, x: T) -> bool {
        x >= self.x_min && x <= self.x_max
    }
}

fn mass_tolerance<T: Real>(n: usize) -> T {
    T::lit(1e-12).max(T::epsilon() * T::of_usize(64 * n.max(1)))
}

/// Nonnegative cell-averaged probability density of unit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Density<T> {
    grid: Grid<T>,
    values: Vec<T>,
}

impl<T: Real> Density<T> {
    /// Validates nonnegativity and unit mass.
    pub fn new(grid: Grid<T>, values: Vec<T>) -> Result<Self> {
        check_values(&grid, &values)?;
        let mass = grid.h() * values.iter().copied().sum::<T>();
        if (mass - T::one()).abs() > mass_tolerance::<T>(values.len()) {
            return Err(Error::InvalidDensity(format!("mass {mass} differs from 1")));
        }
        Ok(Self { grid, values })
    }

    /// Rescales nonnegative values to unit mass.
    pub fn normalized(grid: Grid<T>, mut values: Vec<T>) -> Result<Self> {
        check_values(&grid, &values)?;
        let mass = grid.h() * values.iter().copied().sum::<T>();
        if !(mass > T::zero()) {
            return Err(Error::ZeroMass);
        }
        for v in values.iter_mut() {
            *v = *v / mass;
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at cell centers and normalizes.
    pub fn from_fn(grid: Grid<T>, f: impl Fn(T) -> T) -> Result<Self> {
        let values = (0..grid.n_cells()).map(|j| f(grid.center(j))).collect();
        Self::normalized(grid, values)
    }

    pub fn uniform(grid: Grid<T>) -> Self {
        let v = T::one() / grid.length();
        Self {
            grid,
            values: vec![v; grid.n_cells()],
        }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn mass(&self) -> T {
        self.grid.h() * self.values.iter().copied().sum::<T>()
    }

    /// `∫|a − b| dx` on a shared grid.
    pub fn l1_distance(&self, other: &Density<T>) -> Result<T> {
        if self.grid != other.grid {
            return Err(Error::InvalidGrid("densities live on different grids".into()));
        }
        Ok(self.grid.h()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| (a - b).abs())
                .sum::<T>())
    }

    /// `∫|ρ − f| dx` against a function sampled at cell centers.
    pub fn l1_error_vs(&self, f: impl Fn(T) -> T) -> T {
        let h = self.grid.h();
        self.values
            .iter()
            .enumerate()
            .map(|(j, &v)| (v - f(self.grid.center(j))).abs())
            .sum::<T>()
            * h
    }

    pub fn min_value(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }
}

fn check_values<T: Real>(grid: &Grid<T>, values: &[T]) -> Result<()> {
    if values.len() != grid.n_cells() {
        return Err(Error::InvalidDensity(format!(
            "{} values for {} cells",
            values.len(),
            grid.n_cells()
        )));
    }
    if let Some(j) = values.iter().position(|v| !(v.is_finite() && *v >= T::zero())) {
        return Err(Error::InvalidDensity(format!(
            "value {} at cell {j} is negative or not finite",
            values[j]
        )));
    }
    Ok(())
}

/// Positions of `M` equal-mass particles, strictly increasing. Each particle
/// carries mass `1/M`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileRep<T> {
    positions: Vec<T>,
}

impl<T: Real> QuantileRep<T> {
    pub fn new(positions: Vec<T>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::param("positions", "need at least one particle"));
        }
        if let Some(x) = positions.iter().find(|x| !x.is_finite()) {
            return Err(Error::param("positions", format!("non-finite position {x}")));
        }
        for (i, w) in positions.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::NotIncreasing {
                    index: i,
                    gap: (w[1] - w[0]).as_f64(),
                });
            }
        }
        Ok(Self { positions })
    }

    /// Skips validation; callers guarantee strict monotonicity.
    pub(crate) fn from_sorted_unchecked(positions: Vec<T>) -> Self {
        debug_assert!(positions.windows(2).all(|w| w[1] > w[0]));
        Self { positions }
    }

    pub fn positions(&self) -> &[T] {
        &self.positions
    }

    pub fn into_positions(self) -> Vec<T> {
        self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Consecutive gaps `X_{i+1} − X_i`.
    pub fn gaps(&self) -> impl Iterator<Item = T> + '_ {
        self.positions.windows(2).map(|w| w[1] - w[0])
    }

    pub fn min_gap(&self) -> T {
        self.gaps().fold(T::infinity(), T::min)
    }

    /// Adds `c` to every position.
    pub fn translated(&self, c: T) -> Self {
        Self {
            positions: self.positions.iter().map(|&x| x + c).collect(),
        }
    }

    pub fn within(&self, grid: &Grid<T>) -> bool {
        self.positions.first().is_some_and(|&x| x >= grid.x_min())
            && self.positions.last().is_some_and(|&x| x <= grid.x_max())
    }

    /// Particle moments: `(1/M)Σ X_i` and `(1/M)Σ X_i²`.
    pub fn moments(&self) -> Moments<T> {
        let inv = T::one() / T::of_usize(self.len());
        let mean = self.positions.iter().copied().sum::<T>() * inv;
        let second_moment = self.positions.iter().map(|&x| x * x).sum::<T>() * inv;
        Moments {
            mass: T::one(),
            mean,
            second_moment,
        }
    }
}

/// Mass, mean and second moment `∫x² dμ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments<T> {
    pub mass: T,
    pub mean: T,
    pub second_moment: T,
}

impl<T: Real> Moments<T> {
    pub fn variance(&self) -> T {
        self.second_moment / self.mass - (self.mean / self.mass).powi(2)
    }
}

/// Midpoint-rule moments of a grid density.
pub fn moments<T: Real>(rho: &Density<T>) -> Moments<T> {
    let grid = rho.grid();
    let h = grid.h();
    let (mut mass, mut first, mut second) = (T::zero(), T::zero(), T::zero());
    for (j, &v) in rho.values().iter().enumerate() {
        let x = grid.center(j);
        mass = mass + v;
        first = first + x * v;
        second = second + x * x * v;
    }
    Moments {
        mass: mass * h,
        mean: first * h,
        second_moment: second * h,
    }
}

/// Quantiles `X_i = F⁻¹((i − ½)/M)` of the piecewise-linear CDF built from
/// cell masses.
pub fn density_to_quantiles<T: Real>(rho: &Density<T>, m: usize) -> Result<QuantileRep<T>> {
    if m < 2 {
        return Err(Error::param("M", format!("need at least 2 particles, got {m}")));
    }
    let grid = rho.grid();
    let h = grid.h();
    let masses: Vec<T> = rho.values().iter().map(|&v| v * h).collect();
    let total: T = masses.iter().copied().sum();
    if !(total > T::zero()) {
        return Err(Error::ZeroMass);
    }
    let inv_m = T::one() / T::of_usize(m);
    let mut positions = Vec::with_capacity(m);
    let mut j = 0usize;
    let mut below = T::zero(); // CDF at the left edge of cell j
    for i in 0..m {
        let level = (T::of_usize(i) + T::lit(0.5)) * inv_m * total;
        while j + 1 < masses.len() && (masses[j] <= T::zero() || below + masses[j] < level) {
            below = below + masses[j];
            j += 1;
        }
        let frac = if masses[j] > T::zero() {
            ((level - below) / masses[j]).max(T::zero()).min(T::one())
        } else {
            T::lit(0.5)
        };
        positions.push(grid.edge(j) + frac * h);
    }
    enforce_gaps(&mut positions, grid);
    Ok(QuantileRep::from_sorted_unchecked(positions))
}

fn enforce_gaps<T: Real>(positions: &mut [T], grid: &Grid<T>) {
    let gap = grid.min_gap();
    for i in 1..positions.len() {
        if positions[i] < positions[i - 1] + gap {
            positions[i] = positions[i - 1] + gap;
        }
    }
}

/// Piecewise-constant reconstruction `ρ = (1/M)/(X_{i+1} − X_i)` on every
/// quantile interval, deposited conservatively onto the grid. The two end
/// particles spread their outer half-mass over half a neighbouring gap.
pub fn quantiles_to_density<T: Real>(q: &QuantileRep<T>, grid: &Grid<T>) -> Density<T> {
    let x = q.positions();
    let m = x.len();
    let mut cell_mass = vec![T::zero(); grid.n_cells()];
    let inv_m = T::one() / T::of_usize(m);
    if m == 1 {
        cell_mass[grid.cell_of(x[0])] = T::one();
    } else {
        let half = T::lit(0.5);
        let left_gap = x[1] - x[0];
        let right_gap = x[m - 1] - x[m - 2];
        deposit(
            &mut cell_mass,
            grid,
            (x[0] - half * left_gap).max(grid.x_min()),
            x[0],
            half * inv_m,
        );
        for w in x.windows(2) {
            deposit(&mut cell_mass, grid, w[0], w[1], inv_m);
        }
        deposit(
            &mut cell_mass,
            grid,
            x[m - 1],
            (x[m - 1] + half * right_gap).min(grid.x_max()),
            half * inv_m,
        );
    }
    let total: T = cell_mass.iter().copied().sum();
    let h = grid.h();
    let values = cell_mass.iter().map(|&c| c / (total * h)).collect();
    Density { grid: *grid, values }
}

/// Spreads `mass` uniformly over `[a, b]` onto the overlapping cells.
fn deposit<T: Real>(cells: &mut [T], grid: &Grid<T>, a: T, b: T, mass: T) {
    let a = a.max(grid.x_min()).min(grid.x_max());
    let b = b.max(grid.x_min()).min(grid.x_max());
    if !(b > a) {
        cells[grid.cell_of(a)] = cells[grid.cell_of(a)] + mass;
        return;
    }
    let width = b - a;
    let first = grid.cell_of(a);
    let last = grid.cell_of(b);
    for (j, cell) in cells.iter_mut().enumerate().take(last + 1).skip(first) {
        let lo = grid.edge(j).max(a);
        let hi = grid.edge(j + 1).min(b);
        if hi > lo {
            *cell = *cell + mass * (hi - lo) / width;
        }
    }
}
