use kinflow_core::diagnostics::{
    certify_all, certify_energy, certify_mass, certify_maximum_principle, certify_second_moment, energy_envelope,
    record,
};
use kinflow_core::{
    BoundCertificates, CutoffForce, DiagnosticRecord, DriveField, ForceModel, InitialDensity, MeanFieldDynamics,
    MollifiedDrive, ParticleEnsemble, PhasePoint, Vec2,
};

fn run(dynamics: &MeanFieldDynamics, e: &mut ParticleEnsemble, t: f64, dt: f64, stride: usize) -> Vec<DiagnosticRecord> {
    dynamics.advance(e, t, dt, stride, |_, _| Ok(())).unwrap()
}

fn spring_setup(n: usize, well: bool) -> (MeanFieldDynamics, InitialDensity) {
    let model = ForceModel::spring(1.0, 0.5, 1.0, 0.5, 1.0).unwrap();
    let cf = CutoffForce::new(model, n, 0.25).unwrap();
    let drive = if well {
        DriveField::GaussianWell {
            center: Vec2::new(1.0, 0.0),
            amplitude: 0.5,
            sigma: 2.0,
        }
    } else {
        DriveField::Constant {
            g: Vec2::new(0.3, -0.2),
        }
    };
    let md = MollifiedDrive::new(drive, n, 24).unwrap();
    let density = InitialDensity::truncated_gaussian([0.0; 4], 10.0, 1.0, 3.0, 1.0).unwrap();
    (MeanFieldDynamics::new(cf, md), density)
}

#[test]
fn single_particle_kinetic_energy() {
    let e = ParticleEnsemble::new(vec![PhasePoint::new(Vec2::ZERO, Vec2::new(3.0, 4.0))], 1.0).unwrap();
    assert_eq!(record(&e).kinetic, 12.5);
    let still = ParticleEnsemble::new(vec![PhasePoint::new(Vec2::new(1.0, 2.0), Vec2::ZERO); 7], 1.0).unwrap();
    assert_eq!(record(&still).kinetic, 0.0);
}

#[test]
fn decoupled_run_hits_the_equality_cases() {
    let n = 500;
    let density = InitialDensity::truncated_gaussian([0.5, 0.0, 0.3, -0.2], 1.0, 1.0, 3.0, 1.0).unwrap();
    let mut e = density.sample(n, 7).unwrap();
    let z0 = e.points().to_vec();
    let w = e.weight();
    let cf = CutoffForce::new(ForceModel::decoupled(), n, 0.25).unwrap();
    let md = MollifiedDrive::damping_only();
    let dynamics = MeanFieldDynamics::new(cf, md.clone());
    let records = run(&dynamics, &mut e, 1.0, 1e-3, 50);
    let certs = BoundCertificates::for_run(&cf, &md, &records[0]);
    assert_eq!(certs.energy_forcing, 0.0);
    assert_eq!(certs.energy_cap, records[0].kinetic);
    assert_eq!(certs.growth_exponent, 2.0);
    assert!(certify_all(&records, &certs).iter().all(|c| c.passed));

    let mp = certify_maximum_principle(&records, &certs);
    assert!(mp.worst.abs() <= 1e-8, "{}", mp.worst);
    for r in &records {
        // closed-form moments of the free damped flow
        let decay = (-r.t).exp();
        let e_exact = records[0].kinetic * decay * decay;
        let m2_exact: f64 = w * z0.iter().map(|p| (p.x + p.v * (1.0 - decay)).norm_sq()).sum::<f64>();
        assert!((r.kinetic - e_exact).abs() <= 1e-6 * e_exact);
        assert!((r.second_moment - m2_exact).abs() <= 1e-10 * m2_exact);
        assert!((r.sup_log_growth - 2.0 * r.t).abs() <= 1e-8);
    }
}

#[test]
fn flat_velocity_region_without_dissipation_is_an_equality_case() {
    let n = 300;
    let model = ForceModel::spring(0.5, 0.0, 1.0, 0.5, 10.0).unwrap();
    let cf = CutoffForce::new(model, n, 0.25).unwrap();
    let md = MollifiedDrive::damping_only();
    let dynamics = MeanFieldDynamics::new(cf, md.clone());
    let density = InitialDensity::truncated_gaussian([0.0; 4], 1.0, 0.3, 3.0, 1.0).unwrap();
    let mut e = density.sample(n, 8).unwrap();
    let records = run(&dynamics, &mut e, 1.0, 1e-2, 10);
    for r in &records {
        assert!((r.sup_log_growth - 2.0 * r.t).abs() <= 1e-12, "{}", r.sup_log_growth);
    }
    let certs = BoundCertificates::for_run(&cf, &md, &records[0]);
    assert!(certify_maximum_principle(&records, &certs).passed);
    assert!(e.log_jacobian().iter().all(|&l| (l + 2.0).abs() <= 1e-12));
}

#[test]
fn origin_cluster_keeps_zero_second_moment() {
    let e0 = ParticleEnsemble::new(vec![PhasePoint::default(); 20], 1.0).unwrap();
    let cf = CutoffForce::new(ForceModel::decoupled(), 20, 0.25).unwrap();
    let md = MollifiedDrive::damping_only();
    let mut e = e0.retain_initial();
    let records = run(&MeanFieldDynamics::new(cf, md.clone()), &mut e, 1.0, 0.1, 1);
    assert!(records.iter().all(|r| r.second_moment == 0.0 && r.kinetic == 0.0));
    let certs = BoundCertificates::for_run(&cf, &md, &records[0]);
    assert!(certify_second_moment(&records, &certs).passed);
}

#[test]
fn spring_run_passes_every_certificate() {
    let (dynamics, density) = spring_setup(1000, false);
    let mut e = density.sample(1000, 9).unwrap();
    let records = run(&dynamics, &mut e, 2.0, 1e-2, 10);
    let certs = BoundCertificates::for_run(&dynamics.force, &dynamics.drive, &records[0]);
    for outcome in certify_all(&records, &certs) {
        assert!(outcome.passed, "{outcome:?}");
    }
    for r in records.iter().filter(|r| r.t > 0.0) {
        assert!(r.sup_log_growth < certs.growth_envelope(r.t));
    }
    assert!(certify_mass(&records).passed);
}

#[test]
fn loosened_constants_keep_a_pass() {
    let (dynamics, density) = spring_setup(500, true);
    let mut e = density.sample(500, 10).unwrap();
    let records = run(&dynamics, &mut e, 1.0, 1e-2, 10);
    let tight = BoundCertificates::for_run(&dynamics.force, &dynamics.drive, &records[0]);
    let loose = BoundCertificates::from_constants(
        tight.mass,
        2.0 * tight.f_inf_bound,
        1.5 * tight.grad_v_bound,
        tight.sup_g + 1.0,
        tight.initial_energy,
        tight.initial_second_moment,
    );
    for (a, b) in certify_all(&records, &tight).iter().zip(certify_all(&records, &loose)) {
        assert!(a.passed && b.passed);
        assert!(b.worst <= a.worst, "{a:?} {b:?}");
    }
}

#[test]
fn energy_cap_below_initial_energy_fails() {
    let (dynamics, density) = spring_setup(200, true);
    let mut e = density.sample(200, 11).unwrap();
    let records = run(&dynamics, &mut e, 0.2, 1e-2, 5);
    let certs = BoundCertificates::for_run(&dynamics.force, &dynamics.drive, &records[0]).with_energy_cap(0.5 * records[0].kinetic);
    let outcome = certify_energy(&records, &certs);
    assert!(!outcome.passed);
    assert_eq!(outcome.worst_t, 0.0);
    assert!((outcome.worst - 2.0).abs() < 1e-12);
}

#[test]
fn hot_start_decays_under_the_ode_envelope() {
    // E0 far above (A/2)^2: the damping term dominates.
    let (dynamics, _) = spring_setup(1000, false);
    let hot = InitialDensity::truncated_gaussian([0.0; 4], 10.0, 4.0, 3.0, 1.0).unwrap();
    let mut e = hot.sample(1000, 12).unwrap();
    let records = run(&dynamics, &mut e, 2.0, 1e-2, 10);
    let certs = BoundCertificates::for_run(&dynamics.force, &dynamics.drive, &records[0]);
    assert!(records[0].kinetic > (certs.energy_forcing / 2.0).powi(2));
    for w in records.windows(2).skip(1) {
        assert!(w[1].kinetic < w[0].kinetic);
    }
    for r in &records {
        let envelope = energy_envelope(certs.energy_forcing, records[0].kinetic, r.t, 2000);
        assert!(r.kinetic <= envelope * 1.01, "t={} {} > {}", r.t, r.kinetic, envelope);
    }
}
