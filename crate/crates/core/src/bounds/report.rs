use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BoundId {
    #[serde(rename = "REILLY_1_1")]
    Reilly11,
    #[serde(rename = "REILLY_1_2")]
    Reilly12,
    #[serde(rename = "REILLY_1_3")]
    Reilly13,
    #[serde(rename = "REILLY_SPHERE_1_4")]
    ReillySphere14,
    #[serde(rename = "REILLY_HYP_1_5")]
    ReillyHyp15,
    #[serde(rename = "HEINTZE_1_6")]
    Heintze16,
    #[serde(rename = "GENERAL_1_7")]
    General17,
    #[serde(rename = "THM1_CASE1")]
    Thm1Case1,
    #[serde(rename = "THM1_CASE2")]
    Thm1Case2,
    #[serde(rename = "THM2_CASE1")]
    Thm2Case1,
    #[serde(rename = "THM2_CASE2")]
    Thm2Case2,
    #[serde(rename = "THM3_CASE1")]
    Thm3Case1,
    #[serde(rename = "THM3_CASE2")]
    Thm3Case2,
}

impl BoundId {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundId::Reilly11 => "REILLY_1_1",
            BoundId::Reilly12 => "REILLY_1_2",
            BoundId::Reilly13 => "REILLY_1_3",
            BoundId::ReillySphere14 => "REILLY_SPHERE_1_4",
            BoundId::ReillyHyp15 => "REILLY_HYP_1_5",
            BoundId::Heintze16 => "HEINTZE_1_6",
            BoundId::General17 => "GENERAL_1_7",
            BoundId::Thm1Case1 => "THM1_CASE1",
            BoundId::Thm1Case2 => "THM1_CASE2",
            BoundId::Thm2Case1 => "THM2_CASE1",
            BoundId::Thm2Case2 => "THM2_CASE2",
            BoundId::Thm3Case1 => "THM3_CASE1",
            BoundId::Thm3Case2 => "THM3_CASE2",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IdentityId {
    #[serde(rename = "HM_POINTWISE")]
    HmPointwise,
    #[serde(rename = "HM_INTEGRAL")]
    HmIntegral,
    #[serde(rename = "HM_WEIGHTED_X")]
    HmWeightedX,
    #[serde(rename = "LEMSD")]
    LemSd,
    #[serde(rename = "LEM31")]
    Lem31,
    #[serde(rename = "LEM32")]
    Lem32,
    #[serde(rename = "GROSJEAN_PTWISE")]
    GrosjeanPointwise,
    #[serde(rename = "PROP5")]
    Prop5,
}

impl IdentityId {
    pub fn as_str(self) -> &'static str {
        match self {
            IdentityId::HmPointwise => "HM_POINTWISE",
            IdentityId::HmIntegral => "HM_INTEGRAL",
            IdentityId::HmWeightedX => "HM_WEIGHTED_X",
            IdentityId::LemSd => "LEMSD",
            IdentityId::Lem31 => "LEM31",
            IdentityId::Lem32 => "LEM32",
            IdentityId::GrosjeanPointwise => "GROSJEAN_PTWISE",
            IdentityId::Prop5 => "PROP5",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Holds,
    EqualityWithinTol,
    Violated,
    HypothesesUnmet,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Holds => "holds",
            Status::EqualityWithinTol => "equality_within_tol",
            Status::Violated => "violated",
            Status::HypothesesUnmet => "hypotheses_unmet",
        }
    }

    /// `holds` or `equality_within_tol`.
    pub fn is_satisfied(self) -> bool {
        matches!(self, Status::Holds | Status::EqualityWithinTol)
    }
}

/// The manifold an identity is evaluated on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// A closed surface `M`.
    ClosedSurface,
    /// A surface `Ω` with boundary.
    Domain,
    /// The boundary curve `M = ∂Ω`, itself closed.
    BoundaryCurve,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Hypothesis {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative band around zero slack reported as equality.
    pub equality_tol: f64,
    /// Normalized negative slack still accepted as `holds`.
    pub hold_tol: f64,
    /// Normalized residual accepted for integral identities.
    pub identity_tol: f64,
    /// Normalized residual accepted for pointwise inequalities.
    pub pointwise_margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { equality_tol: 0.02, hold_tol: 1e-9, identity_tol: 1e-3, pointwise_margin: 1e-3 }
    }
}

pub type Metadata = BTreeMap<String, Value>;

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub bound_id: BoundId,
    pub variant: Option<String>,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub status: Status,
    pub hypotheses: Vec<Hypothesis>,
    pub metadata: Metadata,
}

impl BoundReport {
    pub fn new(
        bound_id: BoundId,
        variant: Option<String>,
        lhs: f64,
        rhs: f64,
        hypotheses: Vec<Hypothesis>,
        metadata: Metadata,
        tol: &Tolerances,
    ) -> Self {
        let slack = rhs - lhs;
        let status = if hypotheses.iter().any(|h| !h.passed) {
            Status::HypothesesUnmet
        } else {
            bound_status(lhs, rhs, tol)
        };
        Self { bound_id, variant, lhs, rhs, slack, status, hypotheses, metadata }
    }

    /// The status the comparison would have with every hypothesis granted.
    pub fn literal_status(&self, tol: &Tolerances) -> Status {
        bound_status(self.lhs, self.rhs, tol)
    }
}

/// Status of `lhs ≤ rhs`.
pub fn bound_status(lhs: f64, rhs: f64, tol: &Tolerances) -> Status {
    let slack = rhs - lhs;
    let scale = lhs.abs().max(rhs.abs()).max(1e-30);
    if !slack.is_finite() {
        return if slack > 0.0 { Status::Holds } else { Status::Violated };
    }
    if slack.abs() <= tol.equality_tol * scale {
        Status::EqualityWithinTol
    } else if slack / scale >= -tol.hold_tol {
        Status::Holds
    } else {
        Status::Violated
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub identity_id: IdentityId,
    pub domain: Domain,
    pub lhs: f64,
    pub rhs: f64,
    /// Oriented so that the inequality reads `residual ≤ 0`.
    pub residual: f64,
    /// Magnitude used to normalize the residual.
    pub scale: f64,
    pub normalized_residual: f64,
    pub tolerance: f64,
    pub status: Status,
    /// `global` for integral checks, otherwise the worst vertex or triangle.
    pub locus: String,
    pub hypotheses: Vec<Hypothesis>,
    pub metadata: Metadata,
}

pub(crate) struct IdentityDraft {
    pub identity_id: IdentityId,
    pub domain: Domain,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub scale: f64,
    pub locus: String,
    pub hypotheses: Vec<Hypothesis>,
    pub metadata: Metadata,
    /// Largest `|residual|` over a pointwise family; equality needs all of them small.
    pub max_abs_residual: Option<f64>,
}

impl IdentityDraft {
    pub fn finish(mut self, tolerance: f64, tol: &Tolerances) -> IdentityReport {
        let scale = self.scale.abs().max(1e-30);
        let normalized_residual = self.residual / scale;
        let spread = self.max_abs_residual.map_or(normalized_residual.abs(), |m| m / scale);
        let literal = identity_status(normalized_residual, spread, tolerance, tol.equality_tol);
        let status = if self.hypotheses.iter().any(|h| !h.passed) {
            self.metadata.insert("literal_status".into(), serde_json::json!(literal.as_str()));
            Status::HypothesesUnmet
        } else {
            literal
        };
        IdentityReport {
            identity_id: self.identity_id,
            domain: self.domain,
            lhs: self.lhs,
            rhs: self.rhs,
            residual: self.residual,
            scale,
            normalized_residual,
            tolerance,
            status,
            locus: self.locus,
            hypotheses: self.hypotheses,
            metadata: self.metadata,
        }
    }
}

impl IdentityReport {
    /// The status the check would have with every hypothesis granted.
    pub fn literal_status(&self) -> Status {
        match self.metadata.get("literal_status").and_then(|v| v.as_str()) {
            Some("violated") => Status::Violated,
            Some("holds") => Status::Holds,
            Some("equality_within_tol") => Status::EqualityWithinTol,
            _ => self.status,
        }
    }
}

fn identity_status(normalized: f64, spread: f64, tolerance: f64, equality_tol: f64) -> Status {
    if normalized.is_nan() || normalized > tolerance {
        Status::Violated
    } else if spread <= equality_tol {
        Status::EqualityWithinTol
    } else {
        Status::Holds
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_bands() {
        let tol = Tolerances::default();
        assert_eq!(bound_status(2.0, 2.01, &tol), Status::EqualityWithinTol);
        assert_eq!(bound_status(2.0, 2.01 + 0.1, &tol), Status::Holds);
        assert_eq!(bound_status(1.0, 0.0, &tol), Status::Violated);
        assert_eq!(bound_status(1.0, f64::INFINITY, &tol), Status::Holds);
        assert_eq!(identity_status(-0.5, 0.5, 1e-3, 0.02), Status::Holds);
        assert_eq!(identity_status(5e-4, 5e-4, 1e-3, 0.02), Status::EqualityWithinTol);
        assert_eq!(identity_status(-1e-3, 0.3, 1e-3, 0.02), Status::Holds);
        assert_eq!(identity_status(5e-3, 5e-3, 1e-3, 0.02), Status::Violated);
    }

    #[test]
    fn ids_serialize_by_name() {
        assert_eq!(serde_json::to_string(&BoundId::ReillySphere14).unwrap(), "\"REILLY_SPHERE_1_4\"");
        assert_eq!(serde_json::to_string(&IdentityId::GrosjeanPointwise).unwrap(), "\"GROSJEAN_PTWISE\"");
        assert_eq!(serde_json::to_string(&Status::EqualityWithinTol).unwrap(), "\"equality_within_tol\"");
    }
}
