use super::*;
use crate::audit::corpus::example;
use crate::lp::tv_distance;
use crate::rational::ratio;
use num_bigint::BigUint;

fn status(name: &str, ext: Extension) -> Status {
    decide(&example(name), ext).unwrap().status
}

#[test]
fn two_cycle_verdicts() {
    assert_eq!(status("EX1", Extension::Cbd1), Status::Noncontextual);
    assert_eq!(status("EX1_MARGINAL", Extension::Cbd1), Status::Contextual);
}

#[test]
fn coarse_graining_can_create_contextuality() {
    assert_eq!(status("EX2_P", Extension::Cbd2), Status::Noncontextual);
    assert_eq!(status("EX2_PPRIME", Extension::Cbd2), Status::Contextual);
}

#[test]
fn witnesses_replay() {
    for name in ["EX1", "EX2_P", "EX3_P", "EX4_COIN"] {
        let b = example(name);
        let v = cbd2_decide(&b).unwrap();
        match v.witness.unwrap() {
            Witness::Coupling { atoms } => check_coupling(&b, Criterion::Multimaximal, &atoms).unwrap(),
            Witness::Farkas { rows } => {
                let p = CouplingProblem::build(&b, Criterion::Multimaximal, DEFAULT_ATOM_BUDGET).unwrap();
                let y: Vec<_> = rows.iter().map(|r| r.1.clone()).collect();
                assert!(p.system.is_infeasibility_certificate(&y), "{name}");
            }
            Witness::Global { .. } => panic!("unexpected global witness"),
        }
    }
}

#[test]
fn pr_box_is_ks_contextual_with_certificate() {
    let b = example("PR_BOX");
    let v = ks_decide(&b).unwrap();
    assert!(v.is_contextual());
    let Some(Witness::Farkas { rows }) = v.witness else { panic!("no certificate") };
    let p = GlobalProblem::build(&b, DEFAULT_ATOM_BUDGET).unwrap();
    let y: Vec<_> = rows.iter().map(|r| r.1.clone()).collect();
    assert!(p.system.is_infeasibility_certificate(&y));
}

#[test]
fn ks_is_undefined_on_disturbing_input() {
    let v = ks_decide(&example("EX1")).unwrap();
    assert_eq!(v.reason, Some(UndefinedReason::Disturbing));
}

#[test]
fn ks_global_witness_replays() {
    let b = example("THM2_P1");
    let v = ks_decide(&b).unwrap();
    let Some(Witness::Global { atoms }) = v.witness else { panic!("no witness") };
    check_global(&b, &atoms).unwrap();
}

#[test]
fn coupling_space_sizes() {
    let n = |b: &Behavior| {
        let sp = coupling_space(b);
        (sp.nominal_atoms, sp.marginal_equalities)
    };
    assert_eq!(n(&example("PR_BOX")), (BigUint::from(256u32), BigUint::from(16u32)));
    assert_eq!(n(&example("EX1_MARGINAL")), (BigUint::from(16u32), BigUint::from(8u32)));
    assert_eq!(n(&example("EX1")).0, BigUint::from(256u32));
}

#[test]
fn joined_observable_is_contextual_with_lp_agreement_two_thirds() {
    let b = example("PROP2_JOINED");
    let s = b.scenario();
    let q = s.observable_index("q").unwrap();
    let c = s.context_index("c").unwrap();
    let d = s.context_index("c'").unwrap();
    let tv = tv_distance(&b.marginal_idx(&[q], c).unwrap(), &b.marginal_idx(&[q], d).unwrap()).unwrap();
    assert_eq!(tv, ratio(1, 3));
    assert_eq!(coupling_max_agreement(&b, "q", "c", "c'").unwrap(), ratio(2, 3));
    assert!(cbd2_decide(&b).unwrap().is_contextual());
    assert!(cbd2_decide(&example("PROP2_P")).unwrap().is_noncontextual());
}

#[test]
fn binary_only_extensions() {
    assert_eq!(decide(&example("EX2_P"), Extension::Bcbd2).unwrap().reason, Some(UndefinedReason::NonBinary));
    // Binary, and it contains the 2-cycle as a marginal.
    assert_eq!(status("EX1", Extension::Bcbd2), Status::Contextual);
    assert_eq!(status("EX4_COIN", Extension::Cbcbd2Strict), Status::Noncontextual);
    assert_eq!(decide(&example("EX2_P"), Extension::Cbcbd2Strict).unwrap().reason, Some(UndefinedReason::NonCanonical));
}

#[test]
fn blunt_extensions() {
    let ex1 = example("EX1");
    assert!(blunt_decide(&ex1, BluntVariant::Dc).unwrap().is_contextual());
    assert!(blunt_decide(&ex1, BluntVariant::Dnc).unwrap().is_noncontextual());
    assert!(matches!(blunt_decide(&ex1, BluntVariant::Iccc), Err(DecideError::Unsupported(_))));
    let pr = example("PR_BOX");
    for v in [BluntVariant::Dc, BluntVariant::Dnc, BluntVariant::Dccc] {
        assert!(blunt_decide(&pr, v).unwrap().is_contextual());
    }
}

#[test]
fn verdict_json_round_trip() {
    for ext in Extension::ALL {
        let v = decide(&example("EX1"), ext).unwrap();
        let back: Verdict = serde_json::from_str(&v.to_json()).unwrap();
        assert_eq!(back, v);
        assert_eq!(ext.code().parse::<Extension>().unwrap(), ext);
    }
}
