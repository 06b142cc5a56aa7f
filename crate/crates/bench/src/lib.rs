//! Fixtures shared by the kernel benchmarks: the positive-mass Born–Infeld problem
//! (`g = −s + s³`, `N = 4`) at `θ = 0.25` on the default grid.

use std::sync::Arc;

use bisolve_core::nonlinearity::find_xi0;
use bisolve_core::operators::select_q;
use bisolve_core::solver::{choose_plateau, PlateauChoice};
use bisolve_core::{MassRegime, Nonlinearity, OperatorFamily, RadialGrid, TruncatedOperator};

pub struct Fixture {
    pub trunc: TruncatedOperator,
    pub nl: Nonlinearity,
    pub grid: Arc<RadialGrid>,
    pub plateau: PlateauChoice,
}

pub fn positive_mass(theta: f64) -> Fixture {
    let fam = OperatorFamily::born_infeld();
    let nl = Nonlinearity::power_minus_mass(1.0, 2.0, 4.0, 4);
    let grid = Arc::new(RadialGrid::graded(4, 40.0, 2048, 1.5).expect("default grid"));
    let q = select_q(&fam, theta, MassRegime::PositiveMass, nl.gamma, nl.n).expect("q");
    let trunc = TruncatedOperator::new(fam.clone(), theta, 0.5, q).expect("truncation");
    let q1 = select_q(&fam, 0.5, MassRegime::PositiveMass, nl.gamma, nl.n).expect("q");
    let trunc1 = TruncatedOperator::new(fam, 0.5, 0.5, q1).expect("truncation");
    let xi0 = find_xi0(&nl, 10.0).expect("xi0");
    let plateau = choose_plateau(&trunc1, &nl, grid.clone(), xi0, 10.0).expect("plateau");
    Fixture { trunc, nl, grid, plateau }
}
