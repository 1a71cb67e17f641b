//! Disparity measures on an enumerated joint of protected attribute,
//! latents, features and model output.
//!
//! Causal quantities need the latents; the observational ones need only
//! `Z`, the features and `Ŷ`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{concat, disjoint, JointTable};
use crate::error::{Error, Result};
use crate::pid::{pid_decompose_with, unique_information_with, PidResult};
use crate::scm::Scm;
use crate::tolerance::Tolerances;

/// Default cap on the number of latents searched over by
/// [`non_exempt_disparity`] (2^12 PID solves).
pub const DEFAULT_LATENT_CAP: usize = 12;

/// Which variables of a joint play which part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roles {
    pub protected: String,
    pub latents: Vec<String>,
    pub critical: Vec<String>,
    pub output: String,
    /// Extra conditioning features for the extended CMI measure.
    #[serde(default)]
    pub x_prime: Vec<String>,
}

fn strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

impl Roles {
    /// Roles read off a model: its protected variable, latents, critical
    /// features and output.
    pub fn from_scm(scm: &Scm) -> Result<Roles> {
        Ok(Roles {
            protected: scm.protected_name().to_string(),
            latents: scm.latent_names().into_iter().map(String::from).collect(),
            critical: scm.critical().into_iter().map(String::from).collect(),
            output: scm.output_name()?.to_string(),
            x_prime: Vec::new(),
        })
    }

    pub fn with_x_prime(mut self, x_prime: &[&str]) -> Self {
        self.x_prime = x_prime.iter().map(|s| s.to_string()).collect();
        self
    }

    /// Variables a causal report needs from the enumerated model.
    pub fn causal_variables(&self) -> Vec<&str> {
        let mut v = vec![self.protected.as_str()];
        v.extend(strs(&self.latents));
        v.extend(strs(&self.critical));
        v.extend(strs(&self.x_prime));
        v.push(&self.output);
        v
    }

    fn check(&self) -> Result<()> {
        let z = [self.protected.as_str()];
        let y = [self.output.as_str()];
        disjoint(&[&z, &strs(&self.latents), &strs(&self.critical), &y, &strs(&self.x_prime)])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bipartition {
    pub u_a: Vec<String>,
    pub u_b: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BipartitionValue {
    pub bipartition: Bipartition,
    /// `Uni((Z,U_a):(Ŷ,U_b)|X_c)` in bits.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonExempt {
    pub value: f64,
    /// Every bipartition within the tie tolerance of the minimum.
    pub minimizers: Vec<Bipartition>,
    /// Value of every bipartition, in mask order (latent `i` is in `U_a`
    /// when bit `i` of the mask is set).
    pub bipartitions: Vec<BipartitionValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationalMeasures {
    /// `Uni(Z:Ŷ|X_c)`.
    pub uni: f64,
    /// `I(Z;Ŷ|X_c)`.
    pub cmi: f64,
    /// `I(Z;Ŷ|X_c,X')`, present when `X'` is given.
    pub cmi_extended: Option<f64>,
    /// `Uni(Z:(Ŷ,U)|X_c) − Uni(Z:(Ŷ,U)|(X_c,Ŷ))`; needs latents.
    pub prior_intersection: Option<f64>,
    /// `I(Z;Ŷ|X_c) · I(Z;(Ŷ,U))`; needs latents.
    pub product: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisparityReport {
    pub total: f64,
    pub visible: f64,
    pub masked: f64,
    pub m_ne_star: f64,
    pub m_e: f64,
    pub m_v_ne: f64,
    pub m_v_e: f64,
    pub m_m_ne: f64,
    pub m_m_e: f64,
    pub minimizing_bipartitions: Vec<Bipartition>,
    pub bipartitions: Vec<BipartitionValue>,
    pub observational: ObservationalMeasures,
}

impl DisparityReport {
    /// Sum of the four components.
    pub fn component_sum(&self) -> f64 {
        self.m_v_ne + self.m_v_e + self.m_m_ne + self.m_m_e
    }
}

/// `I(Z;(Ŷ,U))`, cross-checked against `I(Z;Ŷ|U)` (equal because the
/// latents are independent of `Z`).
pub fn total_disparity(joint: &JointTable, z: &str, latents: &[&str], output: &str) -> Result<f64> {
    let yu = concat(&[&[output], latents]);
    let total = joint.mutual_information(&[z], &yu)?;
    let conditional = joint.conditional_mutual_information(&[z], &[output], latents)?;
    if (total - conditional).abs() > 1e-9 {
        return Err(Error::InvalidTable(format!(
            "latents are not independent of `{z}`: I(Z;(Y,U)) = {total}, I(Z;Y|U) = {conditional}"
        )));
    }
    Ok(total)
}

/// `I(Z;Ŷ)`.
pub fn visible_disparity(joint: &JointTable, z: &str, output: &str) -> Result<f64> {
    joint.mutual_information(&[z], &[output])
}

/// `I(Z;(Ŷ,U)) − I(Z;Ŷ)`.
pub fn masked_disparity(joint: &JointTable, z: &str, latents: &[&str], output: &str) -> Result<f64> {
    let m = total_disparity(joint, z, latents, output)? - visible_disparity(joint, z, output)?;
    Tolerances::default().clamp_information(m)
}

/// `min over U_a ⊔ U_b = U of Uni((Z,U_a):(Ŷ,U_b)|X_c)`, searched
/// exhaustively and in parallel.
pub fn non_exempt_disparity(
    joint: &JointTable,
    z: &str,
    latents: &[&str],
    critical: &[&str],
    output: &str,
    tolerances: &Tolerances,
) -> Result<NonExempt> {
    non_exempt_disparity_capped(joint, z, latents, critical, output, tolerances, DEFAULT_LATENT_CAP)
}

pub fn non_exempt_disparity_capped(
    joint: &JointTable,
    z: &str,
    latents: &[&str],
    critical: &[&str],
    output: &str,
    tolerances: &Tolerances,
    cap: usize,
) -> Result<NonExempt> {
    if latents.len() > cap {
        return Err(Error::TooManyLatents {
            count: latents.len(),
            cap,
        });
    }
    disjoint(&[&[z], latents, critical, &[output]])?;
    let values: Vec<BipartitionValue> = (0u32..1 << latents.len())
        .into_par_iter()
        .map(|mask| {
            let (mut u_a, mut u_b) = (Vec::new(), Vec::new());
            for (i, &u) in latents.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    u_a.push(u);
                } else {
                    u_b.push(u);
                }
            }
            let za = concat(&[&[z], &u_a]);
            let yb = concat(&[&[output], &u_b]);
            let uni = unique_information_with(joint, &za, &yb, critical, tolerances)?;
            Ok(BipartitionValue {
                bipartition: Bipartition {
                    u_a: u_a.iter().map(|s| s.to_string()).collect(),
                    u_b: u_b.iter().map(|s| s.to_string()).collect(),
                },
                value: tolerances.clamp_report(uni.value),
            })
        })
        .collect::<Result<_>>()?;
    let value = values.iter().map(|b| b.value).fold(f64::INFINITY, f64::min);
    let minimizers = values
        .iter()
        .filter(|b| b.value <= value + tolerances.tie)
        .map(|b| b.bipartition.clone())
        .collect();
    Ok(NonExempt {
        value,
        minimizers,
        bipartitions: values,
    })
}

/// `Uni(Z:Ŷ|X_c)`.
pub fn obs_unique(joint: &JointTable, z: &str, critical: &[&str], output: &str, tolerances: &Tolerances) -> Result<f64> {
    Ok(unique_information_with(joint, &[z], &[output], critical, tolerances)?.value)
}

/// `I(Z;Ŷ|X_c)`.
pub fn obs_cmi(joint: &JointTable, z: &str, critical: &[&str], output: &str) -> Result<f64> {
    joint.conditional_mutual_information(&[z], &[output], critical)
}

/// `I(Z;Ŷ|X_c,X')`.
pub fn obs_cmi_extended(
    joint: &JointTable,
    z: &str,
    critical: &[&str],
    x_prime: &[&str],
    output: &str,
) -> Result<f64> {
    disjoint(&[critical, x_prime])?;
    joint.conditional_mutual_information(&[z], &[output], &concat(&[critical, x_prime]))
}

/// `Uni(Z:(Ŷ,U)|X_c) − Uni(Z:(Ŷ,U)|(X_c,Ŷ))`. `Ŷ` appears on both sides
/// of the second term, so it is duplicated into a copy variable first.
pub fn prior_intersection_measure(
    joint: &JointTable,
    z: &str,
    latents: &[&str],
    critical: &[&str],
    output: &str,
    tolerances: &Tolerances,
) -> Result<f64> {
    let yu = concat(&[&[output], latents]);
    let first = unique_information_with(joint, &[z], &yu, critical, tolerances)?.value;
    let mut copy = format!("{output}#copy");
    while joint.contains(&copy) {
        copy.push('#');
    }
    let widened = joint.marginalize(&concat(&[&[z], &yu, critical]))?.with_copy(output, &copy)?;
    let side = concat(&[critical, &[copy.as_str()]]);
    let second = unique_information_with(&widened, &[z], &yu, &side, tolerances)?.value;
    Ok(tolerances.clamp_report(first - second))
}

/// `I(Z;Ŷ|X_c) · I(Z;(Ŷ,U))`.
pub fn product_measure(joint: &JointTable, z: &str, latents: &[&str], critical: &[&str], output: &str) -> Result<f64> {
    Ok(obs_cmi(joint, z, critical, output)? * total_disparity(joint, z, latents, output)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessCheck {
    pub found: bool,
    /// Subset with the largest gain `I(Z;Ŷ|G) − I(Z;Ŷ)`, and that gain.
    pub best: Option<(Vec<String>, f64)>,
    /// Gain of the full latent set, which equals the masked disparity.
    pub full_set_gain: f64,
}

/// Look for a projection `G` of the latents with `I(Z;Ŷ|G) > I(Z;Ŷ)`.
pub fn masked_witness_check(
    joint: &JointTable,
    z: &str,
    latents: &[&str],
    output: &str,
    witness_subsets: &[Vec<&str>],
) -> Result<WitnessCheck> {
    let visible = visible_disparity(joint, z, output)?;
    let gain = |g: &[&str]| -> Result<f64> {
        Ok(joint.conditional_mutual_information(&[z], &[output], g)? - visible)
    };
    let mut best: Option<(Vec<String>, f64)> = None;
    for g in witness_subsets {
        for name in g {
            if !latents.contains(name) {
                return Err(Error::Binding(format!("witness variable `{name}` is not a latent")));
            }
        }
        let v = gain(g)?;
        if best.as_ref().is_none_or(|(_, b)| v > *b) {
            best = Some((g.iter().map(|s| s.to_string()).collect(), v));
        }
    }
    let full_set_gain = gain(latents)?;
    let masked = masked_disparity(joint, z, latents, output)?;
    if masked > 1e-9 && full_set_gain <= 1e-9 {
        return Err(Error::InvalidTable(
            "masked disparity is positive but the full latent set is not a witness".into(),
        ));
    }
    Ok(WitnessCheck {
        found: best.as_ref().is_some_and(|(_, v)| *v > 1e-9),
        best,
        full_set_gain,
    })
}

/// Full causal report: totals, the minimizing bipartitions, the four-way
/// split and the observational measures.
pub fn decompose(joint: &JointTable, roles: &Roles, tolerances: &Tolerances) -> Result<DisparityReport> {
    roles.check()?;
    let z = roles.protected.as_str();
    let latents = strs(&roles.latents);
    let critical = strs(&roles.critical);
    let output = roles.output.as_str();
    // Work on the needed marginal only.
    let joint = joint.marginalize(&roles.causal_variables())?;
    let total = total_disparity(&joint, z, &latents, output)?;
    let visible = visible_disparity(&joint, z, output)?;
    let masked = tolerances.clamp_information(total - visible)?;
    let ne = non_exempt_disparity(&joint, z, &latents, &critical, output, tolerances)?;
    let pid = pid_decompose_with(&joint, &[z], &[output], &critical, tolerances)?;
    let m_v_ne = pid.uni_a_given_b;
    let m_ne = ne.value;
    let cmi = obs_cmi(&joint, z, &critical, output)?;
    let observational = ObservationalMeasures {
        uni: m_v_ne,
        cmi,
        cmi_extended: if roles.x_prime.is_empty() {
            None
        } else {
            Some(obs_cmi_extended(&joint, z, &critical, &strs(&roles.x_prime), output)?)
        },
        prior_intersection: Some(prior_intersection_measure(&joint, z, &latents, &critical, output, tolerances)?),
        product: Some(cmi * total),
    };
    let m_m_ne = m_ne - m_v_ne;
    Ok(DisparityReport {
        total,
        visible,
        masked,
        m_ne_star: m_ne,
        m_e: tolerances.clamp_report(total - m_ne),
        m_v_ne,
        m_v_e: tolerances.clamp_report(visible - m_v_ne),
        m_m_ne: tolerances.clamp_report(m_m_ne),
        m_m_e: tolerances.clamp_report(total - visible - m_m_ne),
        minimizing_bipartitions: ne.minimizers,
        bipartitions: ne.bipartitions,
        observational,
    })
}

/// Observational measures only, for joints without latents.
pub fn observational(
    joint: &JointTable,
    z: &str,
    critical: &[&str],
    x_prime: &[&str],
    output: &str,
    tolerances: &Tolerances,
) -> Result<(ObservationalMeasures, PidResult)> {
    disjoint(&[&[z], critical, x_prime, &[output]])?;
    let pid = pid_decompose_with(joint, &[z], &[output], critical, tolerances)?;
    Ok((
        ObservationalMeasures {
            uni: pid.uni_a_given_b,
            cmi: obs_cmi(joint, z, critical, output)?,
            cmi_extended: if x_prime.is_empty() {
                None
            } else {
                Some(obs_cmi_extended(joint, z, critical, x_prime, output)?)
            },
            prior_intersection: None,
            product: None,
        },
        pid,
    ))
}

/// Enumerate a model and produce its causal report.
pub fn audit_scm(scm: &Scm, x_prime: &[&str], tolerances: &Tolerances) -> Result<DisparityReport> {
    let roles = Roles::from_scm(scm)?.with_x_prime(x_prime);
    let joint = crate::scm::enumerate(scm)?.joint_over(&roles.causal_variables())?;
    decompose(&joint, &roles, tolerances)
}
