use plate_fsi::coupling::CouplingConfig;
use plate_fsi::verification::{run_convergence_study, Column, Mode};

#[test]
fn partitioned_study_rates_and_monotonicity() {
    let r = run_convergence_study(&[4, 6, 8], Mode::Partitioned, &CouplingConfig::default()).unwrap();
    let rate = r.rates(Column::L2U)[1].unwrap();
    assert!((1.7..=2.4).contains(&rate), "velocity L2 rate {rate}");
    for c in [Column::L2U, Column::H1U, Column::L2P, Column::L2W1] {
        let e: Vec<f64> = r.rows.iter().map(|row| row.error(c)).collect();
        assert!(e.windows(2).all(|w| w[1] < w[0]), "{}: {e:?}", c.name());
    }
    for row in &r.rows {
        assert!(row.trace.as_ref().unwrap().converged);
    }
}

#[test]
fn reports_are_deterministic() {
    let c = CouplingConfig::default();
    for mode in [Mode::Partitioned, Mode::Monolithic] {
        let a = run_convergence_study(&[2, 3], mode, &c).unwrap().to_csv();
        let b = run_convergence_study(&[2, 3], mode, &c).unwrap().to_csv();
        assert_eq!(a, b);
    }
}

#[test]
fn monolithic_study_converges() {
    let r = run_convergence_study(&[2, 4, 6], Mode::Monolithic, &CouplingConfig::default()).unwrap();
    for c in [Column::L2U, Column::H1U] {
        let e: Vec<f64> = r.rows.iter().map(|row| row.error(c)).collect();
        assert!(e.windows(2).all(|w| w[1] < w[0]), "{}: {e:?}", c.name());
    }
    for row in &r.rows {
        let k = row.constraints;
        assert!(k.plate_mean.unwrap().abs() <= 1e-10 && k.constraint_residual.unwrap() <= 1e-9);
    }
}
