use maxaffine::affine::{best_intercept, residual_extremes, uniform_aap_falsify, CampaignReport};
use maxaffine::cantor::{build, FatCantorParams};
use maxaffine::lipfun::{CantorIntegralFunction, LipFunction, PLFunction, TentSequenceFunction};
use maxaffine::{Interval, Scalar};
use serde_json::json;

fn q(s: &str) -> Scalar {
    s.parse().unwrap()
}

#[test]
fn lip_functions_round_trip_through_json() {
    let pl = PLFunction::new(vec![q("0"), q("1/3"), q("1")], vec![q("0"), q("1/3"), q("-1/7")]).unwrap();
    let cantor = CantorIntegralFunction::new(build(FatCantorParams::quarter_power(q("1/2")).unwrap(), 3).unwrap());
    let functions: Vec<LipFunction> = vec![pl.into(), cantor.into(), TentSequenceFunction::new(5).unwrap().into()];
    for f in functions {
        let text = serde_json::to_string(&f).unwrap();
        let back: LipFunction = serde_json::from_str(&text).unwrap();
        assert_eq!(back, f, "{text}");
    }
    let tent: LipFunction = serde_json::from_value(json!({"kind": "tent_sequence", "data": {"n": 3}})).unwrap();
    assert_eq!(tent.codomain_dim(), 3);
}

#[test]
fn huge_rationals_survive_json() {
    let x = Scalar::pow2(-200) * q("3");
    let text = serde_json::to_string(&x).unwrap();
    assert!(text.starts_with("[3,1606938044258990275541962092341162602522202993782792835301376]"));
    assert_eq!(serde_json::from_str::<Scalar>(&text).unwrap(), x);
}

#[test]
fn campaign_report_schema() {
    let report = uniform_aap_falsify(&q("1/2"), &q("1/4"), &[q("-1"), q("1")], 8).unwrap();
    let value = serde_json::to_value(&report).unwrap();
    assert_eq!(value["params"], json!({"c": [1, 2], "k": [1, 4], "grid_step": [1, 4], "depth": 8}));
    assert_eq!(value["summary"], json!({"total": 12, "certified": 12, "inconclusive": 0}));
    let cell = &value["cells"][0];
    assert_eq!(cell["a"], json!([0, 1]));
    assert_eq!(cell["b"], json!([1, 2]));
    assert_eq!(cell["slope"], json!([-1, 1]));
    assert_eq!(cell["status"], "certified");
    let back: CampaignReport = serde_json::from_value(value).unwrap();
    assert_eq!(back, report);
}

#[test]
fn refinement_tightens_cantor_fits() {
    let params = FatCantorParams::quarter_power(q("7/10")).unwrap();
    let w = Interval::new(q("1/10"), q("9/10")).unwrap();
    let slope = q("15/16");
    let mut previous: Option<maxaffine::Bracket> = None;
    for depth in [4, 8, 12, 16] {
        let f: LipFunction = CantorIntegralFunction::new(build(params.clone(), depth).unwrap()).into();
        let fit = best_intercept(&f, &w, &slope).unwrap();
        if let Some(prev) = &previous {
            assert!(fit.sup_error.lo() <= prev.hi() && prev.lo() <= fit.sup_error.hi());
            assert!(fit.sup_error.width() <= prev.width());
        }
        let e = residual_extremes(&f, &w, &slope).unwrap();
        assert!(e.min.lo() <= e.max.hi());
        previous = Some(fit.sup_error);
    }
    assert!(previous.unwrap().width() < q("1/10000"));
}
