use super::{ProcessKind, ProcessSpec};
use crate::error::{Error, Result};
use serde::Serialize;
use std::fmt;

const EPS_GRID: [f64; 3] = [0.01, 0.05, 0.1];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ConditionId {
    #[serde(rename = "H")]
    H,
    #[serde(rename = "CC1")]
    Cc1,
    #[serde(rename = "CC15")]
    Cc15,
    #[serde(rename = "CC2")]
    Cc2,
    #[serde(rename = "GAMMA")]
    Gamma,
    #[serde(rename = "SMALLJUMP")]
    SmallJump,
    #[serde(rename = "SUMA")]
    SumA,
    #[serde(rename = "SRE-SYM")]
    SreSym,
}

impl ConditionId {
    pub const ALL: [ConditionId; 8] = [
        ConditionId::H,
        ConditionId::Cc1,
        ConditionId::Cc15,
        ConditionId::Cc2,
        ConditionId::Gamma,
        ConditionId::SmallJump,
        ConditionId::SumA,
        ConditionId::SreSym,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ConditionId::H => "H",
            ConditionId::Cc1 => "CC1",
            ConditionId::Cc15 => "CC15",
            ConditionId::Cc2 => "CC2",
            ConditionId::Gamma => "GAMMA",
            ConditionId::SmallJump => "SMALLJUMP",
            ConditionId::SumA => "SUMA",
            ConditionId::SreSym => "SRE-SYM",
        }
    }
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Holds,
    Fails,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionEntry {
    pub id: ConditionId,
    pub status: Status,
    pub evidence: String,
    pub numbers: Vec<(String, f64)>,
}

impl ConditionEntry {
    fn new(id: ConditionId, status: Status, evidence: impl Into<String>) -> Self {
        ConditionEntry {
            id,
            status,
            evidence: evidence.into(),
            numbers: Vec::new(),
        }
    }

    fn with(mut self, name: &str, value: f64) -> Self {
        self.numbers.push((name.to_string(), value));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub entries: Vec<ConditionEntry>,
}

impl ConditionReport {
    pub fn get(&self, id: ConditionId) -> &ConditionEntry {
        self.entries
            .iter()
            .find(|e| e.id == id)
            .expect("every condition id is reported")
    }

    pub fn status(&self, id: ConditionId) -> Status {
        self.get(id).status
    }

    /// True when no condition fails.
    pub fn all_hold_or_unknown(&self) -> bool {
        self.entries.iter().all(|e| e.status != Status::Fails)
    }
}

fn noise_mean_zero(spec: &ProcessSpec) -> ConditionEntry {
    let law = &spec.noise;
    let id = ConditionId::H;
    let entry = if law.alpha() <= 1.0 {
        ConditionEntry::new(id, Status::Holds, "alpha <= 1: no mean condition")
    } else if law.centered() {
        ConditionEntry::new(id, Status::Holds, "centered noise has mean 0")
    } else if law.is_symmetric() {
        ConditionEntry::new(id, Status::Holds, "symmetric noise has mean 0")
    } else {
        ConditionEntry::new(id, Status::Fails, "alpha > 1 and E Z != 0")
            .with("mean", law.mean().unwrap_or(f64::NAN))
    };
    entry.with("alpha", law.alpha())
}

/// Contraction certificate for recursions: some `ε` in the grid with
/// `E|Y|^{α+ε} < 1`. Returns the best `(ε, moment)` found.
fn contraction(spec: &ProcessSpec) -> Option<(bool, f64, f64)> {
    let y = spec.y_law()?;
    let a = spec.alpha();
    let best = EPS_GRID.iter().map(|&e| (e, y.abs_moment(a + e))).fold(
        (f64::NAN, f64::INFINITY),
        |acc, m| if m.1 < acc.1 { m } else { acc },
    );
    Some((best.1 < 1.0, best.0, best.1))
}

fn moment_condition(spec: &ProcessSpec, id: ConditionId) -> ConditionEntry {
    let a = spec.alpha();
    let applies = match id {
        ConditionId::Cc1 => a < 2.0 && a != 1.0,
        ConditionId::Cc15 => a == 1.0 || a == 2.0,
        ConditionId::Cc2 => a > 2.0,
        _ => unreachable!(),
    };
    if !applies {
        return ConditionEntry::new(id, Status::Holds, "not applicable for this alpha")
            .with("alpha", a);
    }
    match contraction(spec) {
        None => ConditionEntry::new(id, Status::Holds, "finitely many bounded coefficients"),
        Some((ok, eps, m)) => {
            let status = if ok { Status::Holds } else { Status::Fails };
            let text = if ok {
                "geometric decay: E|Y|^(alpha+eps) < 1"
            } else {
                "no contraction: E|Y|^(alpha+eps) >= 1 on the eps grid"
            };
            ConditionEntry::new(id, status, text)
                .with("eps", eps)
                .with("moment", m)
        }
    }
}

pub(crate) fn gamma_rule(alpha: f64, beta: f64) -> ConditionEntry {
    let id = ConditionId::Gamma;
    let (ok, text) = if !beta.is_finite() {
        (false, "exponent must be finite")
    } else if alpha < 1.0 {
        (beta > 1.0 / alpha, "alpha < 1 needs beta > 1/alpha")
    } else if alpha == 1.0 {
        (beta > 1.0, "alpha = 1 needs beta > 1")
    } else if alpha < 2.0 {
        (beta >= 1.0, "1 < alpha < 2 needs beta >= 1")
    } else if alpha == 2.0 {
        (
            beta >= 1.0,
            "alpha = 2 needs beta >= 1 (then gamma_n/sqrt(n^(1+eps)) diverges)",
        )
    } else {
        (
            beta >= 1.0,
            "alpha > 2 needs beta >= 1 (then gamma_n/sqrt(n log n) diverges)",
        )
    };
    let status = if ok { Status::Holds } else { Status::Fails };
    ConditionEntry::new(id, status, text)
        .with("alpha", alpha)
        .with("beta", beta)
}

fn sre_symmetric(spec: &ProcessSpec) -> ConditionEntry {
    let id = ConditionId::SreSym;
    let y = match &spec.kind {
        ProcessKind::Sre { y } => y,
        _ => return ConditionEntry::new(id, Status::Unknown, "not a recursion"),
    };
    let a = spec.alpha();
    let (contracts, eps, m) = contraction(spec).expect("recursion");
    let sym = y.is_symmetric() && spec.noise.is_symmetric();
    let ok = sym && a < 2.0 && contracts;
    let text = if ok {
        "symmetric (Y, Z), alpha < 2, contraction certified"
    } else if !sym {
        "(Y, Z) not symmetric"
    } else if a >= 2.0 {
        "alpha >= 2"
    } else {
        "no contraction certificate"
    };
    let status = if ok { Status::Holds } else { Status::Fails };
    ConditionEntry::new(id, status, text)
        .with("eps", eps)
        .with("moment", m)
}

/// Evaluate every standing condition for `spec` with `γ_n = n^gamma_exponent`.
pub fn validate_conditions(spec: &ProcessSpec, gamma_exponent: f64) -> ConditionReport {
    let a = spec.alpha();
    let h = noise_mean_zero(spec);
    let cc: Vec<ConditionEntry> = [ConditionId::Cc1, ConditionId::Cc15, ConditionId::Cc2]
        .into_iter()
        .map(|id| moment_condition(spec, id))
        .collect();
    let cc_ok = cc.iter().all(|e| e.status == Status::Holds);
    let gamma = gamma_rule(a, gamma_exponent);
    let sym = sre_symmetric(spec);
    let finite = spec.finite_support().is_some();

    let small = if !cc_ok {
        ConditionEntry::new(
            ConditionId::SmallJump,
            Status::Unknown,
            "moment conditions fail",
        )
    } else if a < 1.0 {
        ConditionEntry::new(ConditionId::SmallJump, Status::Holds, "alpha < 1")
    } else if finite {
        ConditionEntry::new(
            ConditionId::SmallJump,
            Status::Holds,
            "finitely many i.i.d. coefficient vectors",
        )
    } else if sym.status == Status::Holds {
        ConditionEntry::new(
            ConditionId::SmallJump,
            Status::Holds,
            "symmetric recursion with alpha < 2",
        )
    } else {
        ConditionEntry::new(
            ConditionId::SmallJump,
            Status::Unknown,
            "no checkable criterion applies",
        )
    };

    let suma = if !cc_ok {
        ConditionEntry::new(ConditionId::SumA, Status::Unknown, "moment conditions fail")
    } else if finite {
        ConditionEntry::new(ConditionId::SumA, Status::Holds, "finite coefficient sum")
    } else if a <= 1.0 {
        ConditionEntry::new(
            ConditionId::SumA,
            Status::Holds,
            "alpha <= 1: absolute sum has finite alpha-moment",
        )
    } else {
        // Minkowski: ||Σ_j |V| Π|Y|||_α ≤ ||V||_α Σ_j (E|Y|^α)^{j/α} < ∞.
        let m = spec.y_law().expect("recursion").abs_moment(a);
        ConditionEntry::new(
            ConditionId::SumA,
            Status::Holds,
            "E|Y|^alpha < 1 bounds the absolute sum in L^alpha",
        )
        .with("moment", m)
    };

    let mut entries = vec![h];
    entries.extend(cc);
    entries.extend([gamma, small, suma, sym]);
    ConditionReport { entries }
}

/// Conditions every simulation needs: mean-zero noise when `α > 1` and the
/// moment conditions.
pub(crate) fn check_standing(spec: &ProcessSpec) -> Result<()> {
    let report = validate_conditions(spec, 1.0);
    for id in [
        ConditionId::H,
        ConditionId::Cc1,
        ConditionId::Cc15,
        ConditionId::Cc2,
    ] {
        let e = report.get(id);
        if e.status == Status::Fails {
            return Err(Error::ConditionFailed {
                id: id.as_str(),
                reason: e.evidence.clone(),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::RegVarLaw;
    use crate::process::FiniteLaw;

    #[test]
    fn iid_symmetric_all_hold() {
        let spec = ProcessSpec::iid(RegVarLaw::symmetric(1.5).unwrap());
        let r = validate_conditions(&spec, 1.0);
        assert_eq!(r.entries.len(), ConditionId::ALL.len());
        for id in ConditionId::ALL {
            if id == ConditionId::SreSym {
                continue;
            }
            assert_eq!(r.status(id), Status::Holds, "{id}");
        }
    }

    #[test]
    fn each_id_exactly_once() {
        let spec = ProcessSpec::sre(
            RegVarLaw::new(0.8, 1.0, 1.0, false).unwrap(),
            FiniteLaw::constant(0.5).unwrap(),
        );
        let r = validate_conditions(&spec, 1.5);
        for id in ConditionId::ALL {
            assert_eq!(r.entries.iter().filter(|e| e.id == id).count(), 1);
        }
    }

    #[test]
    fn near_unit_recursion_contracts() {
        let spec = ProcessSpec::sre(
            RegVarLaw::new(0.8, 1.0, 1.0, false).unwrap(),
            FiniteLaw::constant(0.99).unwrap(),
        );
        let r = validate_conditions(&spec, 1.5);
        assert_eq!(r.status(ConditionId::Cc1), Status::Holds);
        let expect = 0.99f64.powf(0.81);
        assert!(expect < 1.0);
        let best = r.get(ConditionId::Cc1).numbers[1].1;
        assert!(best <= expect);
    }

    #[test]
    fn expanding_recursion_fails() {
        let spec = ProcessSpec::sre(
            RegVarLaw::symmetric(1.5).unwrap(),
            FiniteLaw::constant(1.01).unwrap(),
        );
        let r = validate_conditions(&spec, 1.0);
        assert_eq!(r.status(ConditionId::Cc1), Status::Fails);
        assert!(check_standing(&spec).is_err());
    }

    #[test]
    fn skewed_uncentered_fails_h() {
        let spec = ProcessSpec::iid(RegVarLaw::new(1.5, 0.8, 1.0, false).unwrap());
        assert_eq!(
            validate_conditions(&spec, 1.0).status(ConditionId::H),
            Status::Fails
        );
        let centered = ProcessSpec::iid(RegVarLaw::new(1.5, 0.8, 1.0, true).unwrap());
        assert_eq!(
            validate_conditions(&centered, 1.0).status(ConditionId::H),
            Status::Holds
        );
    }

    #[test]
    fn gamma_branches() {
        assert_eq!(gamma_rule(0.8, 1.2).status, Status::Fails);
        assert_eq!(gamma_rule(0.8, 1.3).status, Status::Holds);
        assert_eq!(gamma_rule(1.5, 0.99).status, Status::Fails);
        assert_eq!(gamma_rule(1.5, 1.0).status, Status::Holds);
        assert_eq!(gamma_rule(1.0, 1.0).status, Status::Fails);
        assert_eq!(gamma_rule(2.5, 1.0).status, Status::Holds);
    }

    #[test]
    fn symmetric_recursion() {
        let spec = ProcessSpec::sre(
            RegVarLaw::symmetric(1.5).unwrap(),
            FiniteLaw::uniform(vec![-0.5, 0.5]).unwrap(),
        );
        let r = validate_conditions(&spec, 1.0);
        assert_eq!(r.status(ConditionId::SreSym), Status::Holds);
        assert_eq!(r.status(ConditionId::SmallJump), Status::Holds);
        let pos = ProcessSpec::sre(
            RegVarLaw::symmetric(1.5).unwrap(),
            FiniteLaw::constant(0.5).unwrap(),
        );
        let r = validate_conditions(&pos, 1.0);
        assert_eq!(r.status(ConditionId::SreSym), Status::Fails);
        assert_eq!(r.status(ConditionId::SmallJump), Status::Unknown);
    }
}
