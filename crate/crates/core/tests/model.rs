use crn_phase::model::{birth_death, brusselator, parse_network, PropensityForm, Reaction, ReactionNetwork, StateVector};
use proptest::prelude::*;

fn network_strategy() -> impl Strategy<Value = ReactionNetwork> {
    (1usize..4, 1usize..5).prop_flat_map(|(k, m)| {
        let reaction = (0.1f64..5.0, prop::collection::vec(0u32..3, k), prop::collection::vec(0u32..3, k))
            .prop_filter("reaction changes something", |(_, s, p)| s.iter().any(|&v| v > 0) || p.iter().any(|&v| v > 0));
        (prop::collection::vec(reaction, m), 10.0f64..1000.0).prop_map(move |(rs, omega)| {
            let species = (0..k).map(|i| format!("S{i}")).collect();
            let reactions = rs
                .into_iter()
                .map(|(rate, s, p)| Reaction {
                    rate_constant: rate,
                    reactant_coeffs: s,
                    product_coeffs: p,
                })
                .collect();
            ReactionNetwork::new(species, reactions, omega).unwrap()
        })
    })
}

fn state_for(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.1f64..10.0, k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn drift_is_stoichiometry_times_propensities((net, x) in network_strategy().prop_flat_map(|n| {
        let k = n.num_species();
        (Just(n), state_for(k))
    })) {
        let lambda = net.propensities(&x);
        let f = net.drift(&x);
        let s = net.stoichiometric_matrix();
        for i in 0..net.num_species() {
            let expected: f64 = (0..net.num_reactions()).map(|a| s[i][a] as f64 * lambda[a]).sum();
            prop_assert!((f[i] - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
        }
    }

    #[test]
    fn diffusion_is_psd_and_factored((net, x) in network_strategy().prop_flat_map(|n| {
        let k = n.num_species();
        (Just(n), state_for(k))
    })) {
        let (d, b) = net.diffusion_matrices(&x);
        let bbt = &b * b.transpose();
        let scale = d.abs().max().max(1.0);
        prop_assert!((&d - &bbt).abs().max() <= 1e-12 * scale);
        prop_assert!((&d - d.transpose()).abs().max() == 0.0);
        for ev in d.symmetric_eigenvalues().iter() {
            prop_assert!(*ev >= -1e-10 * scale);
        }
    }

    #[test]
    fn jacobian_matches_central_differences((net, x) in network_strategy().prop_flat_map(|n| {
        let k = n.num_species();
        (Just(n), state_for(k))
    })) {
        let j = net.jacobian(&x);
        let k = net.num_species();
        for c in 0..k {
            let h = 1e-6 * x[c].max(1.0);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[c] += h;
            xm[c] -= h;
            let (fp, fm) = (net.drift(&xp), net.drift(&xm));
            for r in 0..k {
                let fd = (fp[r] - fm[r]) / (2.0 * h);
                prop_assert!((j[(r, c)] - fd).abs() <= 1e-6 * (1.0 + fd.abs()), "J[{r},{c}] = {} vs {fd}", j[(r, c)]);
            }
        }
    }

    #[test]
    fn dsl_round_trip(net in network_strategy()) {
        let again = parse_network(&net.to_dsl(), net.omega()).unwrap();
        prop_assert_eq!(&net, &again);
    }
}

#[test]
fn exact_counts_converge_to_mass_action() {
    // 2X + Y -> 3X has the largest correction; gap should shrink like 1/omega.
    let mut gaps = Vec::new();
    for omega in [1e2, 1e3, 1e4] {
        let net = brusselator(1.0, 2.5, omega).unwrap();
        let x = [1.3, 2.1];
        let mass = net.propensity(&StateVector::Concentrations(x.to_vec()), PropensityForm::MassAction);
        let exact = net.propensity(&StateVector::Concentrations(x.to_vec()), PropensityForm::ExactCounts);
        let gap = (0..4).map(|a| ((exact[a] - mass[a]) / mass[a]).abs()).fold(0.0, f64::max);
        gaps.push(gap * omega);
    }
    // gap * omega is roughly constant
    assert!(gaps.iter().all(|g| (g / gaps[2] - 1.0).abs() < 0.05), "{gaps:?}");
}

#[test]
fn brusselator_jacobian_and_hopf() {
    let b = 2.5;
    let net = brusselator(1.0, b, 1.0).unwrap();
    let (u1, u2) = (1.7, 0.6);
    let j = net.jacobian(&[u1, u2]);
    let expect = [[-(b + 1.0) + 2.0 * u1 * u2, u1 * u1], [b - 2.0 * u1 * u2, -u1 * u1]];
    for r in 0..2 {
        for c in 0..2 {
            assert!((j[(r, c)] - expect[r][c]).abs() < 1e-14);
        }
    }
    let jf = net.jacobian(&[1.0, 2.5]);
    assert!((jf.trace() - 0.5).abs() < 1e-14);
}

#[test]
fn zero_state_has_zero_drift_without_inflow() {
    let net = parse_network("1 : X -> Y\n2 : X + Y -> \n", 1.0).unwrap();
    assert_eq!(net.drift(&[0.0, 0.0]), vec![0.0, 0.0]);
    let (d, b) = net.diffusion_matrices(&[0.0, 0.0]);
    assert_eq!(d.abs().max(), 0.0);
    assert_eq!(b.abs().max(), 0.0);
}

#[test]
fn birth_death_counts() {
    let net = birth_death(2.0, 1.0, 50.0).unwrap();
    assert_eq!(net.propensity(&StateVector::Counts(vec![100]), PropensityForm::MassAction), vec![2.0, 2.0]);
    let (d, _) = net.diffusion_matrices(&[2.0]);
    assert_eq!(d[(0, 0)], 4.0);
}

#[test]
fn shipped_model_files_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("models");
    let bruss = parse_network(&std::fs::read_to_string(dir.join("brusselator.crn")).unwrap(), 3000.0).unwrap();
    assert_eq!(bruss, brusselator(1.0, 2.5, 3000.0).unwrap());
    let bd = parse_network(&std::fs::read_to_string(dir.join("birth_death.crn")).unwrap(), 100.0).unwrap();
    assert_eq!(bd, birth_death(2.0, 1.0, 100.0).unwrap());
}
