use jumpcode::designs::{
    bundled_seeds, construct_833, group_833, group_order, orbit, verify_seed, SeedCheck, SEEDS_833,
};
use jumpcode::jumpcodes::{
    builtin_833, complement_code, encode, pairing_code, verify_code, JumpCode,
};
use jumpcode::lindblad::{DecayModel, JumpSet};
use jumpcode::qstate::BasisState;
use jumpcode::recovery::{verify_recovery, RecoveryTable};

#[test]
fn bundled_seeds_agree_with_their_codes() {
    for (name, seed) in bundled_seeds() {
        let code = encode(&seed).unwrap();
        let kappa = 1.7;
        let model = DecayModel::uniform(seed.n_points(), kappa).unwrap();
        for d in 0..=seed.w() {
            let seed_check = verify_seed(&seed.with_order(d)).unwrap();
            let report = verify_code(&code, d, &model).unwrap();
            assert_eq!(seed_check.is_valid(), report.passed, "{name} at d={d}");
            if let SeedCheck::Valid(table) = seed_check {
                assert_eq!(table.len(), report.lambda_table.len());
                for (set, ratio) in &table {
                    let exact = *ratio.numer() as f64 / *ratio.denom() as f64;
                    let entry = &report.lambda_table[set];
                    assert!((entry.raw - exact).abs() < 1e-10);
                    assert!((entry.scaled - exact * kappa.powi(set.len() as i32)).abs() < 1e-10);
                }
            }
        }
    }
}

#[test]
fn eight_qubit_code_from_group_action() {
    let group = group_833();
    assert_eq!(group_order(&group).unwrap(), 48);
    for seed in SEEDS_833 {
        let b = BasisState::from_positions(8, &seed).unwrap();
        assert_eq!(orbit(&group, b).unwrap().len(), 12);
    }
    let code = builtin_833();
    let model = DecayModel::uniform(8, 1.0).unwrap();
    let report = verify_code(&code, 3, &model).unwrap();
    assert!(report.passed);
    assert!(!verify_code(&code, 4, &model).unwrap().passed);
    let e = JumpSet::new(8, &[1, 5, 8]).unwrap();
    assert_eq!(
        report.lambda_table[&e].exact,
        Some(num_rational::Ratio::new(1, 12))
    );
    assert_eq!(construct_833().families().len(), 3);
}

#[test]
fn every_recovery_of_the_corrected_codes_is_exact() {
    let codes = [
        pairing_code(4, 0.0).unwrap(),
        pairing_code(6, 2.0).unwrap(),
        builtin_833(),
        complement_code(&builtin_833()),
    ];
    for code in &codes {
        let model = DecayModel::new(
            (1..=code.n_qubits())
                .map(|a| 0.5 + a as f64 * 0.1)
                .collect(),
        )
        .unwrap();
        let table = RecoveryTable::for_code(code).unwrap();
        for rec in table.ops() {
            let check = verify_recovery(rec, code, &model).unwrap();
            assert!(
                check.residual < 1e-10,
                "{} alpha={}",
                code.label(),
                rec.alpha
            );
            assert!(check.unitarity_defect < 1e-10);
        }
    }
}

#[test]
fn code_files_round_trip() {
    for code in [pairing_code(6, 0.25).unwrap(), builtin_833()] {
        let text = code.to_json();
        let back = JumpCode::from_json(&text).unwrap();
        assert_eq!(back.codewords(), code.codewords());
        assert_eq!(back.to_json(), text);
        let model = DecayModel::uniform(code.n_qubits(), 1.0).unwrap();
        assert!(verify_code(&back, code.order(), &model).unwrap().passed);
    }
}
