//! Whole-pipeline runs on exact rationals, checked against floating point.

use num_traits::ToPrimitive;
use trustnet::harness::{builtin_scenario, run_scenario, Builtin};
use trustnet::{Exact, RunReport64, RunReportExact};

#[test]
fn exact_and_f64_runs_agree_on_every_builtin() {
    for b in Builtin::ALL {
        let exact: RunReportExact = run_scenario(&builtin_scenario::<Exact>(b.name()).unwrap()).unwrap();
        let float: RunReport64 = run_scenario(&builtin_scenario::<f64>(b.name()).unwrap()).unwrap();
        assert_eq!(exact.detection, float.detection, "{b}");

        let (re, rf) = (exact.last_round(), float.last_round());
        assert_eq!(re.verdicts, rf.verdicts, "{b}");
        assert_eq!(re.metrics, rf.metrics, "{b}");
        for (id, t) in &re.aggregate_t {
            let f = rf.aggregate_t[id];
            assert!((t.to_f64().unwrap() - f).abs() < 1e-12, "{b} {id}");
        }
    }
}

#[test]
fn honest_pairs_score_exactly_one() {
    let report = run_scenario(&builtin_scenario::<Exact>("t1c1").unwrap()).unwrap();
    let round = report.last_round();
    let flagged = &report.detection.flagged_untrusted;
    for (rater, row) in &round.per_pair {
        for (ratee, state) in row {
            if !flagged.contains(rater) && !flagged.contains(ratee) {
                assert_eq!(state.t, Exact::from_integer(1), "{rater}->{ratee}");
            }
        }
    }
}
