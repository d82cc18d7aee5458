//! Decision layer: volume thresholds, homology criteria on the double, and
//! the topological conclusions they license.
//!
//! Yamabe positivity of the conformal infinity is an input flag. Every
//! strict inequality is compared with an absolute tolerance; values within
//! the tolerance of the threshold get a [`Verdict::Boundary`] verdict, which
//! never licenses a conclusion.

use std::f64::consts::PI;
use std::fmt;
use std::ops::RangeInclusive;

use serde::Serialize;

use crate::gb::{anderson_identity_residual, IntegralSuite};

pub const DEFAULT_COMPARISON_TOL: f64 = 1e-9;
/// Largest `|8π²χ − ¼∫|W|² − 6V| / (8π²|χ|)` accepted before conclusions
/// are refused.
pub const DEFAULT_CONSISTENCY_TOL: f64 = 1e-3;

const PI2: f64 = PI * PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Boundary,
    /// A premise such as Yamabe positivity is missing.
    NotApplicable,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Boundary => "boundary",
            Verdict::NotApplicable => "not_applicable",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `value > threshold`
    Above,
    /// `value < threshold`
    Below,
    /// `value ≤ threshold`
    AtMost,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub relation: Relation,
    /// Signed slack, positive when the inequality holds: `value − threshold`
    /// for [`Relation::Above`], `threshold − value` otherwise.
    pub margin: f64,
    pub verdict: Verdict,
    pub note: Option<String>,
}

impl Check {
    pub fn compare(name: &str, value: f64, relation: Relation, threshold: f64, tol: f64) -> Check {
        let margin = match relation {
            Relation::Above => value - threshold,
            Relation::Below | Relation::AtMost => threshold - value,
        };
        let verdict = match relation {
            _ if margin.is_nan() => Verdict::Fail,
            Relation::AtMost if margin >= -tol => Verdict::Pass,
            Relation::AtMost => Verdict::Fail,
            _ if margin.abs() <= tol => Verdict::Boundary,
            _ if margin > 0.0 => Verdict::Pass,
            _ => Verdict::Fail,
        };
        Check {
            name: name.to_string(),
            value,
            threshold,
            relation,
            margin,
            verdict,
            note: None,
        }
    }

    pub fn passes(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    fn unlicensed(mut self) -> Check {
        self.verdict = Verdict::NotApplicable;
        self.note = Some("conformal infinity not flagged Yamabe-positive".into());
        self
    }
}

/// A statement together with the checks it rests on.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Conclusion {
    pub statement: String,
    pub chain: Vec<String>,
}

/// `V ≤ 4π²/3`. Equality within `tol` is the rigid case.
pub fn volume_bound(v: f64, yamabe_positive: bool, tol: f64) -> Check {
    let bound = 4.0 * PI2 / 3.0;
    let mut c = Check::compare("volume_upper_bound", v, Relation::AtMost, bound, tol);
    if !yamabe_positive {
        return c.unlicensed();
    }
    if c.margin.abs() <= tol {
        c.note = Some("equality: X is hyperbolic space and its double is the round 4-sphere".into());
    } else if !c.passes() {
        c.note = Some("inconsistent input: no Yamabe-positive Einstein filling has this volume".into());
    }
    c
}

/// Threshold of the weaker volume criterion, `(4π²/9) χ`.
pub fn weak_threshold(chi_x: i64) -> f64 {
    4.0 * PI2 / 9.0 * chi_x as f64
}

/// Threshold of the stronger volume criterion, `(2π²/3) χ`.
pub fn strong_threshold(chi_x: i64) -> f64 {
    2.0 * PI2 / 3.0 * chi_x as f64
}

/// `V > (4π²/9) χ(X)`.
pub fn weak_volume_criterion(chi_x: i64, v: f64, yamabe_positive: bool, tol: f64) -> Check {
    let c = Check::compare("volume_criterion_weak", v, Relation::Above, weak_threshold(chi_x), tol);
    if yamabe_positive {
        c
    } else {
        c.unlicensed()
    }
}

/// `V > (2π²/3) χ(X)`.
pub fn strong_volume_criterion(chi_x: i64, v: f64, yamabe_positive: bool, tol: f64) -> Check {
    let c = Check::compare("volume_criterion_strong", v, Relation::Above, strong_threshold(chi_x), tol);
    if yamabe_positive {
        c
    } else {
        c.unlicensed()
    }
}

/// `¼∫_Y|W|² < ∫_Y σ₂` on the double, the form the stronger criterion
/// takes there.
pub fn doubled_weyl_check(weyl_y: f64, sigma2_y: f64, tol: f64) -> Check {
    Check::compare("double_weyl_below_sigma2", 0.25 * weyl_y, Relation::Below, sigma2_y, tol)
}

/// `¼∫|W⁺|² < ∫σ₂`, `¼∫|W⁻|² < ∫σ₂` and `¼∫|W|² < 2∫σ₂` on a closed
/// double, plus `∫σ₂ > (8π²/3) χ(Y)`, which is the last one rewritten with
/// the Gauss–Bonnet formula. Its verdict is compared with the direct one in
/// [`HomologyChecks::equivalent`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HomologyChecks {
    pub self_dual: Check,
    pub anti_self_dual: Check,
    pub total: Check,
    pub sigma2_vs_euler: Check,
}

impl HomologyChecks {
    pub fn all(&self) -> [&Check; 4] {
        [&self.self_dual, &self.anti_self_dual, &self.total, &self.sigma2_vs_euler]
    }

    pub fn equivalent(&self) -> bool {
        self.total.passes() == self.sigma2_vs_euler.passes()
    }
}

pub fn homology_criteria(suite_y: &IntegralSuite, tol: f64) -> HomologyChecks {
    let s = suite_y.sigma2_integral;
    HomologyChecks {
        self_dual: Check::compare("self_dual_weyl_below_sigma2", 0.25 * suite_y.weyl_plus, Relation::Below, s, tol),
        anti_self_dual: Check::compare(
            "anti_self_dual_weyl_below_sigma2",
            0.25 * suite_y.weyl_minus,
            Relation::Below,
            s,
            tol,
        ),
        total: Check::compare("weyl_below_twice_sigma2", 0.25 * suite_y.weyl_energy, Relation::Below, 2.0 * s, tol),
        // χ(Y) from the suite's own Gauss–Bonnet value keeps both sides
        // exactly comparable
        sigma2_vs_euler: Check::compare(
            "sigma2_above_euler_share",
            s,
            Relation::Above,
            8.0 * PI2 / 3.0 * suite_y.euler_gb,
            tol,
        ),
    }
}

/// `3(2(2+2k) − 6k) > 2(2+2k)`, the inequality left for `dim H²₋(Y) = 2k`,
/// cleared of denominators.
pub fn betti_parity_feasible(k: u64) -> bool {
    let k = k as i128;
    3 * (2 * (2 + 2 * k) - 6 * k) > 2 * (2 + 2 * k)
}

/// All `k` in the range passing [`betti_parity_feasible`].
pub fn betti_parity_argument(range: RangeInclusive<u64>) -> Vec<u64> {
    range.filter(|k| betti_parity_feasible(*k)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TopologyInputs {
    pub chi_x: i64,
    pub v: f64,
    /// `∫_X |W|² dv` of the Einstein metric.
    pub weyl_energy: f64,
    pub weyl_plus_y: f64,
    pub weyl_minus_y: f64,
    pub sigma2_y: f64,
    pub yamabe_positive: bool,
}

impl TopologyInputs {
    /// Double data by bookkeeping: `∫_Y|W±|² = ∫_X|W|²` and
    /// `∫_Y σ₂ = 2·6V`.
    pub fn from_volume(chi_x: i64, v: f64, weyl_energy: f64, yamabe_positive: bool) -> Self {
        TopologyInputs {
            chi_x,
            v,
            weyl_energy,
            weyl_plus_y: weyl_energy,
            weyl_minus_y: weyl_energy,
            sigma2_y: 12.0 * v,
            yamabe_positive,
        }
    }

    pub fn double_suite(&self) -> IntegralSuite {
        IntegralSuite::from_integrals(
            crate::gb::DomainTag::ClosedDouble,
            f64::NAN,
            self.weyl_plus_y,
            self.weyl_minus_y,
            self.sigma2_y,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TopologyOptions {
    pub comparison_tol: f64,
    pub consistency_tol: f64,
}

impl Default for TopologyOptions {
    fn default() -> Self {
        TopologyOptions {
            comparison_tol: DEFAULT_COMPARISON_TOL,
            consistency_tol: DEFAULT_CONSISTENCY_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TopologyReport {
    pub inputs: TopologyInputs,
    pub identity_residual: f64,
    pub consistent: bool,
    pub checks: Vec<Check>,
    pub homology: HomologyChecks,
    pub conclusions: Vec<Conclusion>,
    pub notes: Vec<String>,
}

impl TopologyReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().chain(self.homology.all()).find(|c| c.name == name)
    }
}

fn conclude(out: &mut Vec<Conclusion>, statement: &str, chain: &[&Check]) {
    out.push(Conclusion {
        statement: statement.to_string(),
        chain: chain.iter().map(|c| c.name.clone()).collect(),
    });
}

/// Runs every check on `inputs` and collects the licensed conclusions.
pub fn evaluate(inputs: &TopologyInputs, opts: &TopologyOptions) -> TopologyReport {
    let tol = opts.comparison_tol;
    let i = inputs;
    let residual = anderson_identity_residual(i.chi_x, i.weyl_energy, i.v);
    let scale = 8.0 * PI2 * (i.chi_x.abs().max(1)) as f64;
    let consistent = residual.abs() <= opts.consistency_tol * scale;

    let bound = volume_bound(i.v, i.yamabe_positive, tol);
    let weak = weak_volume_criterion(i.chi_x, i.v, i.yamabe_positive, tol);
    let strong = strong_volume_criterion(i.chi_x, i.v, i.yamabe_positive, tol);
    let positive_v = Check::compare("volume_positive", i.v, Relation::Above, 0.0, tol);
    let suite_y = i.double_suite();
    let doubled = doubled_weyl_check(suite_y.weyl_energy, i.sigma2_y, tol);
    let positive_sigma2 = Check::compare("double_sigma2_positive", i.sigma2_y, Relation::Above, 0.0, tol);
    let homology = homology_criteria(&suite_y, tol);

    let mut notes = Vec::new();
    notes.extend(bound.note.clone());
    let mut conclusions = Vec::new();
    if !consistent {
        notes.push(format!(
            "inconsistent inputs: identity residual {residual:e} exceeds {:e}; no conclusions drawn",
            opts.consistency_tol * scale
        ));
    } else if bound.verdict == Verdict::Fail {
        notes.push("volume exceeds the upper bound; no conclusions drawn".into());
    } else {
        if weak.passes() {
            conclude(&mut conclusions, "V > 0", &[&weak, &positive_v]);
            conclude(&mut conclusions, "H^1(X; R) = H^2(X; R) = 0", &[&weak, &homology.total]);
            conclude(&mut conclusions, "integral of sigma_2 over the double is positive", &[&weak, &positive_sigma2]);
            conclude(&mut conclusions, "X has finite fundamental group", &[&weak]);
            conclude(
                &mut conclusions,
                "a finite cover of X is homeomorphic to the 4-ball",
                &[&weak, &homology.total],
            );
        }
        if strong.passes() {
            conclude(&mut conclusions, "the double of X is diffeomorphic to S^4", &[&strong, &doubled]);
            conclude(
                &mut conclusions,
                "X is diffeomorphic to the 4-ball and its boundary to S^3",
                &[&strong, &doubled],
            );
        }
    }
    TopologyReport {
        inputs: *inputs,
        identity_residual: residual,
        consistent,
        checks: vec![bound, weak, strong, positive_v, doubled, positive_sigma2],
        homology,
        conclusions,
        notes,
    }
}
