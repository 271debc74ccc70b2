//! Complete-monotonicity scans with three-valued certified verdicts, the
//! heat-kernel variant, and a finite-difference cross-check.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use rug::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gk::{verified_margins, GkSource};
use crate::heatkernel::ThetaKernel;
use crate::numcore::{binomial, to_decimal, BoundedValue, PrecisionContext};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Lin,
    Log,
}

/// `n` points from `a` to `b`, equally spaced in `x` or in `log x`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub kind: GridKind,
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(kind: GridKind, a: f64, b: f64, n: usize) -> Result<Self> {
        if a <= 0.0 || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParameter(format!("grid needs 0 < a, got a = {a}")));
        }
        if n > 1 && b <= a {
            return Err(Error::InvalidParameter(format!("grid needs a < b, got [{a}, {b}]")));
        }
        Ok(Self { kind, a, b, n })
    }

    pub fn log(a: f64, b: f64, n: usize) -> Result<Self> {
        Self::new(GridKind::Log, a, b, n)
    }

    pub fn lin(a: f64, b: f64, n: usize) -> Result<Self> {
        Self::new(GridKind::Lin, a, b, n)
    }

    /// A grid with no points.
    pub fn empty() -> Self {
        Self {
            kind: GridKind::Lin,
            a: 1.0,
            b: 1.0,
            n: 0,
        }
    }

    pub fn points(&self) -> Vec<f64> {
        match self.n {
            0 => Vec::new(),
            1 => vec![self.a],
            n => (0..n)
                .map(|i| {
                    let f = i as f64 / (n - 1) as f64;
                    if i == 0 {
                        return self.a;
                    }
                    if i == n - 1 {
                        return self.b;
                    }
                    match self.kind {
                        GridKind::Lin => self.a + (self.b - self.a) * f,
                        GridKind::Log => (self.a.ln() + (self.b.ln() - self.a.ln()) * f).exp(),
                    }
                })
                .collect(),
        }
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            GridKind::Lin => "lin",
            GridKind::Log => "log",
        };
        write!(f, "{kind}:{}:{}:{}", self.a, self.b, self.n)
    }
}

impl FromStr for Grid {
    type Err = Error;

    /// `kind:a:b:n` with `kind ∈ {lin, log}`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::InvalidParameter(format!("grid '{s}' is not of the form kind:a:b:n"));
        if parts.len() != 4 {
            return Err(bad());
        }
        let kind = match parts[0] {
            "lin" => GridKind::Lin,
            "log" => GridKind::Log,
            _ => return Err(bad()),
        };
        let a: f64 = parts[1].parse().map_err(|_| bad())?;
        let b: f64 = parts[2].parse().map_err(|_| bad())?;
        let n: usize = parts[3].parse().map_err(|_| bad())?;
        Self::new(kind, a, b, n)
    }
}

/// Orders `0..=k_max`, `0..=m_max` over a grid of `x` (or `t`) values.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanPlan {
    pub k_max: usize,
    pub m_max: usize,
    pub grid: Grid,
}

impl ScanPlan {
    pub fn new(k_max: usize, m_max: usize, grid: Grid) -> Self {
        Self { k_max, m_max, grid }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    CertifiedNonnegative,
    CertifiedViolation,
    Inconclusive,
}

impl Verdict {
    pub fn of(margin: &BoundedValue) -> Self {
        if margin.is_certified_positive() {
            Self::CertifiedNonnegative
        } else if margin.is_certified_negative() {
            Self::CertifiedViolation
        } else {
            Self::Inconclusive
        }
    }
}

/// One `(k, m, x)` margin.
#[derive(Clone, Debug, Serialize)]
pub struct Cell {
    pub k: usize,
    pub m: usize,
    #[serde(serialize_with = "ser_x")]
    pub x: Float,
    pub margin: BoundedValue,
    pub verdict: Verdict,
    /// Evaluated again at doubled precision after an inconclusive first pass.
    pub escalated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn ser_x<S: serde::Serializer>(v: &Float, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&to_decimal(v, 17))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Summary {
    NoViolationFound,
    Violation { witnesses: usize },
    Inconclusive { cells: usize },
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Timings {
    pub evaluation_ms: u128,
}

/// Result of a scan. Cells are ordered by `(k, m, x)` whatever the order of
/// evaluation.
#[derive(Clone, Debug, Serialize)]
pub struct CMReport {
    pub source: String,
    /// `"x"` for `G_k` scans, `"t"` for heat-kernel scans.
    pub variable: String,
    pub plan: ScanPlan,
    pub precision: PrecisionContext,
    pub cells: Vec<Cell>,
    pub summary: Summary,
    pub witnesses: Vec<Cell>,
    pub diagnostics: Vec<String>,
    pub timings: Timings,
}

impl CMReport {
    /// Recomputes the summary and witness list from the cells.
    pub fn refresh_summary(&mut self) {
        self.witnesses = self
            .cells
            .iter()
            .filter(|c| c.verdict == Verdict::CertifiedViolation)
            .cloned()
            .collect();
        let inconclusive = self.cells.iter().filter(|c| c.verdict == Verdict::Inconclusive).count();
        self.summary = if !self.witnesses.is_empty() {
            Summary::Violation {
                witnesses: self.witnesses.len(),
            }
        } else if inconclusive > 0 {
            Summary::Inconclusive { cells: inconclusive }
        } else {
            Summary::NoViolationFound
        };
    }

    /// `0` no violation, `2` certified violation, `3` inconclusive cells.
    pub fn exit_code(&self) -> i32 {
        match self.summary {
            Summary::NoViolationFound => 0,
            Summary::Violation { .. } => 2,
            Summary::Inconclusive { .. } => 3,
        }
    }

    pub fn all_certified_nonnegative(&self) -> bool {
        self.cells.iter().all(|c| c.verdict == Verdict::CertifiedNonnegative)
    }
}

/// Escalation context: doubled precision, same verification policy.
fn escalated(ctx: &PrecisionContext) -> PrecisionContext {
    PrecisionContext {
        verify_by_recompute: ctx.verify_by_recompute,
        ..ctx.doubled()
    }
}

type Row = std::result::Result<Vec<Vec<BoundedValue>>, String>;

/// Evaluates one grid point, retrying once at doubled precision if any cell
/// is inconclusive. Returns the margins, whether escalation happened, and an
/// error note when evaluation failed.
fn evaluate_point<F>(eval: &F, x: f64, ctx: &PrecisionContext) -> (Row, bool)
where
    F: Fn(&Float, &PrecisionContext) -> Result<Vec<Vec<BoundedValue>>> + Sync,
{
    let first = eval(&ctx.float(x), ctx).map_err(|e| e.to_string());
    let needs_retry = match &first {
        Ok(rows) => rows.iter().flatten().any(|v| Verdict::of(v) == Verdict::Inconclusive),
        Err(_) => true,
    };
    if !needs_retry {
        return (first, false);
    }
    let up = escalated(ctx);
    match eval(&up.float(x), &up) {
        Ok(rows) => (Ok(rows), true),
        Err(e) => (first.and(Err(e.to_string())), true),
    }
}

fn run_scan<F>(source: String, variable: &str, plan: &ScanPlan, m_max: usize, ctx: &PrecisionContext, eval: F) -> CMReport
where
    F: Fn(&Float, &PrecisionContext) -> Result<Vec<Vec<BoundedValue>>> + Sync,
{
    let start = Instant::now();
    let mut xs = plan.grid.points();
    // larger x first: near-violating inputs tend to fail there first
    xs.reverse();
    let results: Vec<(Row, bool)> = xs.par_iter().map(|&x| evaluate_point(&eval, x, ctx)).collect();
    let elapsed = start.elapsed().as_millis();
    let escalations = results.iter().filter(|r| r.1).count();

    let mut cells = Vec::new();
    let mut diagnostics = Vec::new();
    for (&x, (row, escalated)) in xs.iter().zip(results) {
        let xf = ctx.float(x);
        match row {
            Ok(rows) => {
                for (k, r) in rows.into_iter().enumerate() {
                    for (m, margin) in r.into_iter().enumerate() {
                        cells.push(Cell {
                            k,
                            m,
                            x: xf.clone(),
                            verdict: Verdict::of(&margin),
                            margin,
                            escalated,
                            note: None,
                        });
                    }
                }
            }
            Err(e) => {
                diagnostics.push(format!("{variable} = {x}: evaluation failed: {e}"));
                for k in 0..=plan.k_max {
                    for m in 0..=m_max {
                        cells.push(Cell {
                            k,
                            m,
                            x: xf.clone(),
                            margin: BoundedValue::new(ctx.zero(), ctx.float(rug::float::Special::Infinity)),
                            verdict: Verdict::Inconclusive,
                            escalated,
                            note: Some(e.clone()),
                        });
                    }
                }
            }
        }
    }
    cells.sort_by(|a, b| (a.k, a.m).cmp(&(b.k, b.m)).then(a.x.partial_cmp(&b.x).expect("finite grid")));
    if escalations > 0 {
        diagnostics.push(format!("{escalations} grid point(s) re-evaluated at doubled precision"));
    }
    let mut report = CMReport {
        source,
        variable: variable.to_string(),
        plan: plan.clone(),
        precision: ctx.clone(),
        cells,
        summary: Summary::NoViolationFound,
        witnesses: Vec::new(),
        diagnostics,
        timings: Timings { evaluation_ms: elapsed },
    };
    report.refresh_summary();
    report
}

/// Margins `(-1)^m G_k^{(m)}(x)` over the plan. Evaluation failures mark the
/// affected cells inconclusive.
pub fn cm_scan(source: &dyn GkSource, plan: &ScanPlan, ctx: &PrecisionContext) -> CMReport {
    let work = ctx.for_order((plan.k_max + plan.m_max) as u32);
    run_scan(source.label(), "x", plan, plan.m_max, &work, |x, c| {
        verified_margins(source, x, plan.k_max, plan.m_max, c)
    })
}

/// Margins `(-1)^k Θ^{(k)}(t)` over the plan's grid (read as `t`), `k ≤ k_max`.
/// Points below the kernel's accurate range are reported inconclusive.
pub fn theta_cm_scan(kernel: &ThetaKernel, plan: &ScanPlan, ctx: &PrecisionContext) -> CMReport {
    let work = ctx.for_order(plan.k_max as u32);
    let t_min = kernel.t_min(plan.k_max, ctx);
    let label = format!("theta({})", crate::gk::GkSource::label(kernel.zeros()));
    let mut report = run_scan(label, "t", plan, 0, &work, |t, c| {
        match &t_min {
            Ok(tm) if t.to_f64() < *tm => {
                return Err(Error::InvalidParameter(format!("t below t_min = {tm:e}")));
            }
            Err(e) => return Err(Error::InvalidParameter(e.to_string())),
            _ => {}
        }
        let d = kernel.theta_derivs(t, plan.k_max, c)?;
        Ok(d
            .into_iter()
            .enumerate()
            .map(|(k, v)| vec![if k % 2 == 1 { v.neg() } else { v }])
            .collect())
    });
    report.plan.m_max = 0;
    report
}

/// One order of [`difference_crosscheck`].
#[derive(Clone, Debug, Serialize)]
pub struct DifferenceEntry {
    pub j: usize,
    /// `(-1)^j Δ_h^j F(x0)`.
    pub value: BoundedValue,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct DifferenceReport {
    pub x0: f64,
    pub h: f64,
    pub entries: Vec<DifferenceEntry>,
    /// Orders `j` with a certified negative signed difference.
    pub failures: Vec<usize>,
}

/// Checks `(-1)^j Δ_h^j F(x0) ≥ 0` for `j ≤ j_max` from point values only.
pub fn difference_crosscheck<F>(f: F, x0: f64, h: f64, j_max: usize, ctx: &PrecisionContext) -> Result<DifferenceReport>
where
    F: Fn(&Float) -> Result<BoundedValue>,
{
    if !(x0 > 0.0 && h > 0.0) {
        return Err(Error::InvalidParameter("x0 and h must be positive".into()));
    }
    let prec = ctx.prec();
    let hf = ctx.float(h);
    let values: Vec<BoundedValue> = (0..=j_max)
        .map(|i| f(&(ctx.float(x0) + Float::with_val(prec, &hf * i as u64))))
        .collect::<Result<_>>()?;
    let mut entries = Vec::with_capacity(j_max + 1);
    let mut failures = Vec::new();
    for j in 0..=j_max {
        // (-1)^j Δ^j F(x0) = Σ_i (-1)^i C(j,i) F(x0 + i h)
        let mut acc = BoundedValue::exact(ctx.zero());
        for (i, v) in values.iter().enumerate().take(j + 1) {
            let c = binomial(j as u32, i as u32, prec);
            let term = v.scale(&c);
            acc = if i % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
        }
        let verdict = Verdict::of(&acc);
        if verdict == Verdict::CertifiedViolation {
            failures.push(j);
        }
        entries.push(DifferenceEntry { j, value: acc, verdict });
    }
    Ok(DifferenceReport { x0, h, entries, failures })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::efun::ZeroSequence;
    use rug::Complex;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(128, 32, true).unwrap()
    }

    fn zeros(parts: &[(f64, f64)]) -> ZeroSequence {
        ZeroSequence::finite(parts.iter().map(|&(a, b)| Complex::with_val(128, (a, b))).collect()).unwrap()
    }

    #[test]
    fn grid_parsing_and_points() {
        let g: Grid = "log:0.1:10:3".parse().unwrap();
        let p = g.points();
        assert!((p[1] - 1.0).abs() < 1e-12 && (p[2] - 10.0).abs() < 1e-12);
        assert_eq!("lin:1:2:0".parse::<Grid>().unwrap().points().len(), 0);
        assert!("log:0:1:3".parse::<Grid>().is_err());
        assert!("cubic:1:2:3".parse::<Grid>().is_err());
        assert!("log:2:1:3".parse::<Grid>().is_err());
        assert_eq!(g.to_string(), "log:0.1:10:3");
    }

    #[test]
    fn single_zero_scan_is_clean() {
        let ctx = ctx();
        let plan = ScanPlan::new(4, 4, Grid::log(0.1, 10.0, 20).unwrap());
        let r = cm_scan(&zeros(&[(1.0, 0.0)]), &plan, &ctx);
        assert_eq!(r.summary, Summary::NoViolationFound);
        assert_eq!(r.cells.len(), 5 * 5 * 20);
        assert!(r.all_certified_nonnegative());
        assert_eq!(r.exit_code(), 0);
    }

    #[test]
    fn empty_plan_is_vacuous() {
        let ctx = ctx();
        let plan = ScanPlan::new(3, 3, Grid::empty());
        let r = cm_scan(&zeros(&[(1.0, 0.0)]), &plan, &ctx);
        assert!(r.cells.is_empty());
        assert_eq!(r.summary, Summary::NoViolationFound);
    }

    #[test]
    fn rotated_pair_violates() {
        let ctx = ctx();
        let h = 3f64.sqrt() / 2.0;
        let plan = ScanPlan::new(4, 4, Grid::log(0.01, 10.0, 20).unwrap());
        let r = cm_scan(&zeros(&[(0.5, h), (0.5, -h)]), &plan, &ctx);
        assert!(matches!(r.summary, Summary::Violation { .. }));
        assert_eq!(r.exit_code(), 2);
    }

    #[test]
    fn theta_scans() {
        let ctx = ctx();
        let plan = ScanPlan::new(3, 0, Grid::log(0.1, 10.0, 12).unwrap());
        let k = ThetaKernel::new(zeros(&[(1.0, 0.0), (4.0, 0.0), (9.0, 0.0)])).unwrap();
        assert!(theta_cm_scan(&k, &plan, &ctx).all_certified_nonnegative());

        let plan = ScanPlan::new(0, 0, Grid::lin(2.0, 2.0, 1).unwrap());
        let k = ThetaKernel::new(zeros(&[(1.0, 1.0), (1.0, -1.0)])).unwrap();
        let r = theta_cm_scan(&k, &plan, &ctx);
        assert_eq!(r.cells[0].verdict, Verdict::CertifiedViolation);
        assert!((r.cells[0].margin.to_f64() + 0.112_638_699_984_255_76).abs() < 1e-15);

        let plan = ScanPlan::new(3, 0, Grid::lin(1.0, 1.0, 1).unwrap());
        let k = ThetaKernel::new(zeros(&[(2.0, 0.0)])).unwrap();
        let r = theta_cm_scan(&k, &plan, &ctx);
        let exact = Float::with_val(128, -2).exp() * 8u32;
        assert!(r.cells[3].margin.contains(&exact));
    }

    #[test]
    fn finite_differences() {
        let ctx = ctx();
        let r = difference_crosscheck(|x| Ok(BoundedValue::exact((Float::with_val(128, x + 1u32)).recip())), 1.0, 0.5, 2, &ctx).unwrap();
        // 1/3 - 2/2.5 + 1/2
        assert!((r.entries[2].value.to_f64() - (1.0 / 3.0 - 0.8 + 0.5)).abs() < 1e-15);
        assert!(r.failures.is_empty());
        let r = difference_crosscheck(|_| Ok(BoundedValue::exact(Float::with_val(128, 1))), 1.0, 1.0, 3, &ctx).unwrap();
        assert!(r.entries[1..].iter().all(|e| e.value.value.is_zero()));
        let r = difference_crosscheck(|x| Ok(BoundedValue::exact(Float::with_val(128, -x).exp())), 1.0, 1.0, 3, &ctx).unwrap();
        let e1 = (-1f64).exp();
        assert!((r.entries[3].value.to_f64() - e1 * (1.0 - e1).powi(3)).abs() < 1e-15);
    }
}
