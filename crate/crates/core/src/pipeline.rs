//! End-to-end verification: family conditions, operator identities, local
//! isometry, and junk ⊗ target factorization in one report.

use std::f64::consts::FRAC_PI_4;

use serde::Serialize;

use crate::conditions::{
    check, conditions_for, dicke_operator_identities, ghz_operator_identities, graph_anticommutation_check,
    schmidt_condition_check, tilted_pair_identities, w_operator_identities, CheckReport, QubitFrame,
};
use crate::correlations::format_number;
use crate::error::{Error, Result};
use crate::isometry::{
    ancilla_registers, extract_schmidt_operators_unchecked, factorization_check_raw, measurement_selftest_check,
    project_target, schmidt_chain_residuals, LocalIsometry,
};
use crate::linalg::{vec_norm, C64, ONE, ZERO};
use crate::observables::mu_from_theta;
use crate::strategies::{ideal_strategy, Family, Strategy};

/// Tolerances for [`verify`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Correlation conditions and operator identities.
    pub tol: f64,
    /// Pass requires fidelity ≥ 1 - `fidelity_tol`.
    pub fidelity_tol: f64,
    /// Extracted-operator relations and measurement images.
    pub operator_tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            tol: 1e-9,
            fidelity_tol: 1e-9,
            operator_tol: 1e-8,
        }
    }
}

/// Everything [`verify`] measured.
#[derive(Debug, Clone, Serialize)]
pub struct SelfTestReport {
    pub family: Family,
    pub noise: f64,
    pub conditions: CheckReport,
    pub identities: CheckReport,
    pub measurements: Option<CheckReport>,
    /// Overlap of the isometry output with `junk ⊗ target`, averaged over
    /// the noisy state when the strategy carries noise.
    pub fidelity: f64,
    /// `‖Φ(ψ) - junk ⊗ target‖` on the pure part.
    pub factorization_residual: f64,
    pub junk_dims: Vec<usize>,
    #[serde(skip)]
    pub junk_state: Option<crate::linalg::StateVector>,
    /// Why the isometry could not be built, if it could not.
    pub isometry_error: Option<String>,
    pub passed: bool,
}

impl SelfTestReport {
    /// JSON report with an extra `failing` list of labels.
    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v["failing"] = self.failing_labels().into();
        serde_json::to_string_pretty(&v).expect("report serializes")
    }

    /// One row per residual: `section,label,measured,target,residual,passed`,
    /// followed by summary rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("section,label,measured,target,residual,passed\n");
        let mut sections = vec![("conditions", &self.conditions), ("identities", &self.identities)];
        if let Some(m) = &self.measurements {
            sections.push(("measurements", m));
        }
        for (name, report) in sections {
            for e in &report.entries {
                out.push_str(&format!(
                    "{name},{},{},{},{},{}\n",
                    csv_field(&e.label),
                    format_number(e.measured),
                    format_number(e.target),
                    format_number(e.residual),
                    e.residual <= report.tol
                ));
            }
        }
        out.push_str(&format!(
            "summary,fidelity,{},{},{},{}\n",
            format_number(self.fidelity),
            format_number(1.0),
            format_number(1.0 - self.fidelity),
            self.isometry_error.is_none()
        ));
        out.push_str(&format!(
            "summary,factorization residual,{},{},{},\n",
            format_number(self.factorization_residual),
            format_number(0.0),
            format_number(self.factorization_residual)
        ));
        let dims: Vec<String> = self.junk_dims.iter().map(|d| d.to_string()).collect();
        out.push_str(&format!("summary,junk dims,{},,,\n", dims.join("x")));
        out.push_str(&format!("summary,passed,,,,{}\n", self.passed));
        out
    }

    /// Labels of every failing residual.
    pub fn failing_labels(&self) -> Vec<String> {
        let mut v: Vec<String> = self
            .conditions
            .failing()
            .chain(self.identities.failing())
            .chain(self.measurements.iter().flat_map(|m| m.failing()))
            .map(|e| e.label.clone())
            .collect();
        if let Some(e) = &self.isometry_error {
            v.push(format!("isometry: {e}"));
        }
        v
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Angle `μ` used to split the last party's settings into `Z` and `X`.
fn frame_angle(family: &Family) -> Result<f64> {
    match family {
        Family::Chsh { theta } | Family::Ghz { theta, .. } => mu_from_theta(*theta),
        _ => Ok(FRAC_PI_4),
    }
}

fn identities_for(s: &Strategy, family: &Family, tol: f64) -> Result<CheckReport> {
    match family {
        Family::Chsh { theta } => tilted_pair_identities(s, *theta, tol),
        Family::Ghz { theta, .. } => ghz_operator_identities(s, *theta, tol),
        Family::W { .. } => w_operator_identities(s, tol),
        Family::Dicke { k, .. } => dicke_operator_identities(s, *k, tol),
        Family::Graph { .. } => graph_anticommutation_check(s, tol),
        Family::Schmidt { .. } => Err(Error::Strategy("Schmidt identities need extracted operators".into())),
    }
}

fn build_isometry(s: &Strategy, family: &Family) -> Result<LocalIsometry> {
    match family {
        Family::Schmidt { coeffs, .. } => Ok(LocalIsometry::Qudit(extract_schmidt_operators_unchecked(s, coeffs)?)),
        _ => Ok(LocalIsometry::Qubit(QubitFrame::from_strategy(
            s,
            frame_angle(family)?,
        )?)),
    }
}

/// `(1-ε) F(ψ) + (ε/D) Σ_e ‖(I ⊗ ⟨t|) Φ e‖²` over the computational basis.
fn mixed_fidelity(s: &Strategy, iso: &LocalIsometry, pure: f64) -> Result<f64> {
    let eps = s.noise();
    if eps == 0.0 {
        return Ok(pure);
    }
    Ok(pure * (1.0 - eps) + eps * basis_average(s, iso)?)
}

fn basis_average(s: &Strategy, iso: &LocalIsometry) -> Result<f64> {
    let family = s
        .family()
        .ok_or_else(|| Error::Strategy("noisy fidelity needs the strategy's family".into()))?;
    let target = family.target_state()?;
    let total = s.total_dim();
    let anc = ancilla_registers(s.party_count());
    let mut e = vec![ZERO; total];
    let mut sum = 0.0;
    for i in 0..total {
        e[i] = ONE;
        let (dims, out) = iso.apply(s.dims(), &e)?;
        let (_, junk) = project_target(&dims, &out, &target, &anc)?;
        sum += vec_norm(&junk).powi(2);
        e[i] = ZERO;
    }
    Ok(sum / total as f64)
}

/// Run every check for `family` on `s`.
///
/// Returns `Err` only for malformed input (parameters out of range, or a
/// strategy whose shape does not fit the family). A strategy that is
/// well-formed but fails verification yields `Ok` with `passed = false`.
pub fn verify(s: &Strategy, family: &Family, opts: &VerifyOptions) -> Result<SelfTestReport> {
    family.validate()?;
    s.check_arity(family)?;
    let s = &s.clone().with_family(family.clone());
    let conditions = match family {
        Family::Schmidt { coeffs, .. } => schmidt_condition_check(s, coeffs, opts.tol)?,
        _ => check(s, &conditions_for(family)?, opts.tol)?,
    };
    let target = family.target_state()?;
    let reference = ideal_strategy(family)?;
    let anc = ancilla_registers(s.party_count());

    let mut report = SelfTestReport {
        family: family.clone(),
        noise: s.noise(),
        conditions,
        identities: CheckReport::from_entries(Vec::new(), opts.tol),
        measurements: None,
        fidelity: 0.0,
        factorization_residual: f64::NAN,
        junk_dims: Vec::new(),
        junk_state: None,
        isometry_error: None,
        passed: false,
    };

    let iso = match build_isometry(s, family) {
        Ok(iso) => iso,
        Err(e) => {
            report.isometry_error = Some(e.to_string());
            return Ok(report);
        }
    };
    report.identities = match (&iso, family) {
        (LocalIsometry::Qudit(inputs), Family::Schmidt { coeffs, .. }) => {
            schmidt_chain_residuals(s, inputs, coeffs, opts.operator_tol)?
        }
        _ => identities_for(s, family, opts.tol)?,
    };
    let (dims, out) = iso.apply(s.dims(), s.state().amplitudes())?;
    let fact = factorization_check_raw(&dims, &out, &target, &anc)?;
    report.measurements = Some(measurement_selftest_check(s, &iso, &reference, opts.operator_tol)?);
    report.fidelity = mixed_fidelity(s, &iso, fact.target_fidelity)?;
    report.factorization_residual = fact.residual_norm;
    report.junk_dims = fact.junk_dims;
    report.junk_state = fact.junk_state;
    report.passed = report.conditions.passed
        && report.identities.passed
        && report.measurements.as_ref().is_some_and(|m| m.passed)
        && report.fidelity >= 1.0 - opts.fidelity_tol;
    Ok(report)
}

/// Amplitudes of `Φ(ψ)` for callers that want the raw isometry output.
pub fn isometry_output(s: &Strategy, family: &Family) -> Result<(Vec<usize>, Vec<C64>)> {
    s.check_arity(family)?;
    build_isometry(s, family)?.apply(s.dims(), s.state().amplitudes())
}
