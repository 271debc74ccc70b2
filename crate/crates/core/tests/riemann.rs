use std::path::PathBuf;

use genus0::cmcheck::{theta_cm_scan, Grid, ScanPlan};
use genus0::gk::{verified_margins, GkSource};
use genus0::heatkernel::ThetaKernel;
use genus0::numcore::{PrecisionContext, QuadratureSpec};
use genus0::riemann::{
    corollary4_run, ingest_text, ingest_zeros, to_lambda, xi_coefficients, xi_on_real_axis, xi_oscillatory,
    zero_count_check, Corollary4Input, PhiSeriesSpec, XiSqrtModel,
};
use genus0::rug::Float;
use genus0::Error;

fn ctx() -> PrecisionContext {
    PrecisionContext::with_bits(192).unwrap()
}

fn shipped() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/riemann_zeros_25.txt")
}

fn defaults() -> (PhiSeriesSpec, QuadratureSpec) {
    (PhiSeriesSpec::default(), QuadratureSpec::default())
}

#[test]
fn xi_half_against_constants() {
    let ctx = ctx();
    let (phi, quad) = defaults();
    let v = xi_on_real_axis(&ctx.zero(), &phi, &quad, &ctx).unwrap();
    // 0.497120778188314109912...
    assert!(v.to_f64().to_string().starts_with("0.4971207781883"));
    let osc = xi_oscillatory(&ctx.zero(), &phi, &quad, &ctx).unwrap();
    assert!(v.agrees_with(&osc));
}

#[test]
fn partial_sums_reach_xi_at_one() {
    let ctx = ctx();
    let (phi, quad) = defaults();
    let a = xi_coefficients(32, &phi, &quad, &ctx).unwrap();
    let direct = xi_on_real_axis(&ctx.float(1), &phi, &quad, &ctx).unwrap();
    let mut sum = Float::with_val(192, 0);
    for c in &a {
        sum += &c.value;
    }
    let gap = Float::with_val(192, &sum - &direct.value).abs();
    assert!(gap < 1e-40, "{}", gap.to_f64());
}

#[test]
fn two_line_ingestion() {
    let ctx = ctx();
    let data = ingest_text("14.134725\n21.022040\n", "inline", &ctx).unwrap();
    let z = to_lambda(&data, &ctx).unwrap();
    assert_eq!(z.len(), 2);
    assert!(z.all_positive());
    assert_eq!(z.beta0().to_f64(), 1.0);
    let l1 = z.zeros()[0].real().to_f64();
    assert!((l1 - 199.7904).abs() < 1e-4, "{l1}");
    // seven significant digits force the wide bracket
    assert!(z.rel_uncertainty().to_f64() > 1e-9);
}

#[test]
fn empty_and_unsorted_files_rejected() {
    let ctx = ctx();
    assert!(matches!(ingest_text("# header only\n", "empty", &ctx), Err(Error::EmptyZeroList)));
    assert!(matches!(
        ingest_text("21.02\n14.13\n", "dec", &ctx),
        Err(Error::NonIncreasing { line: 2, .. })
    ));
}

#[test]
fn a_wrong_ordinate_fails_validation() {
    let ctx = ctx();
    assert!(ingest_text("14.2\n", "off", &ctx).is_err());
}

#[test]
fn shipped_file_validates_and_counts() {
    let ctx = ctx();
    let data = ingest_zeros(&shipped(), &ctx).unwrap();
    assert_eq!(data.ordinates.len(), 25);
    assert_eq!(data.checks.len(), 25);
    let count = zero_count_check(&data);
    assert!(count.within_two, "{count:?}");
}

#[test]
fn riemann_theta_is_positive_on_certified_range() {
    let ctx = ctx();
    let data = ingest_zeros(&shipped(), &ctx).unwrap();
    let kernel = ThetaKernel::new(to_lambda(&data, &ctx).unwrap()).unwrap();
    let t_min = kernel.t_min(3, &ctx).unwrap();
    let plan = ScanPlan::new(3, 0, Grid::log(t_min, 0.2, 6).unwrap());
    let report = theta_cm_scan(&kernel, &plan, &ctx);
    assert!(report.all_certified_nonnegative(), "{:?}", report.summary);
}

#[test]
fn g0_at_large_x_from_both_routes() {
    let ctx = ctx();
    let (phi, quad) = defaults();
    let data = ingest_zeros(&shipped(), &ctx).unwrap();
    let zeros = to_lambda(&data, &ctx).unwrap();
    let x = ctx.float(10_000);
    let from_zeros = zeros.gk_margins(&x, 0, 0, &ctx).unwrap()[0][0].clone();
    let model = XiSqrtModel::new(phi, quad);
    let stream = genus0::efun::CoefficientStream::new(
        ctx.float(1),
        genus0::efun::CoefficientRule::XiSqrt(Box::new(model)),
    )
    .unwrap();
    let from_jets = verified_margins(&stream, &x, 0, 0, &ctx).unwrap()[0][0].clone();
    assert!(from_zeros.agrees_with(&from_jets), "{from_zeros} vs {from_jets}");
    assert!(from_jets.error_f64() < 1e-30);
}

#[test]
fn empty_plan_is_vacuous() {
    let ctx = ctx();
    let input = Corollary4Input {
        zeros: None,
        model: Some(XiSqrtModel::default()),
    };
    let r = corollary4_run(&input, &ScanPlan::new(3, 3, Grid::empty()), &ctx).unwrap();
    assert!(r.cells.is_empty());
    assert_eq!(r.exit_code(), 0);
}

#[test]
fn run_needs_some_input() {
    let r = corollary4_run(&Corollary4Input::default(), &ScanPlan::new(1, 1, Grid::empty()), &ctx());
    assert!(r.is_err());
}
