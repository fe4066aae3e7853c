//! Separability criteria: PPT, reduction, majorization and Rényi entropy.
//!
//! Each check returns a [`Verdict`]: a boolean and a margin. The criterion is
//! fulfilled exactly when the margin is at least `-EPS_PSD`, so the boolean
//! and the margin never disagree.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, identity, kron, min_eigenvalue, CMatrix};
use crate::states::{partial_trace, partial_transpose, DensityMatrix, Subsystem, EPS_PSD};

/// Order of a Rényi entropy: a positive real or infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Alpha {
    Finite(f64),
    Infinity,
}

impl Alpha {
    pub fn new(value: f64) -> Result<Self> {
        if value == f64::INFINITY {
            Ok(Alpha::Infinity)
        } else if value > 0.0 && value.is_finite() {
            Ok(Alpha::Finite(value))
        } else {
            Err(Error::InvalidParameter(format!(
                "Rényi order must be positive, got {value}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Alpha::Finite(a) => a,
            Alpha::Infinity => f64::INFINITY,
        }
    }

    /// `1/α`, zero for infinity.
    pub fn reciprocal(self) -> f64 {
        match self {
            Alpha::Finite(a) => 1.0 / a,
            Alpha::Infinity => 0.0,
        }
    }

    /// Default orders evaluated by experiments.
    pub fn default_grid() -> Vec<Alpha> {
        [1.0, 2.0, 3.0, 5.0, 10.0]
            .into_iter()
            .map(Alpha::Finite)
            .chain(std::iter::once(Alpha::Infinity))
            .collect()
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alpha::Finite(a) => write!(f, "{a}"),
            Alpha::Infinity => f.write_str("inf"),
        }
    }
}

impl From<Alpha> for String {
    fn from(a: Alpha) -> String {
        a.to_string()
    }
}

impl TryFrom<String> for Alpha {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for Alpha {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") || t == "∞" {
            return Ok(Alpha::Infinity);
        }
        let v: f64 = t
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("cannot parse Rényi order '{s}'")))?;
        Alpha::new(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub fulfilled: bool,
    pub margin: f64,
}

impl Verdict {
    pub fn from_margin(margin: f64) -> Self {
        Self {
            fulfilled: margin >= -EPS_PSD,
            margin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionVerdict {
    pub ppt: Verdict,
    pub reduction: Verdict,
    pub majorization: Verdict,
    pub renyi: Vec<(Alpha, Verdict)>,
}

impl CriterionVerdict {
    pub fn renyi(&self, alpha: Alpha) -> Option<Verdict> {
        self.renyi.iter().find(|(a, _)| *a == alpha).map(|(_, v)| *v)
    }
}

/// Smallest eigenvalue of the partial transpose on A.
pub fn check_ppt(rho: &DensityMatrix) -> Verdict {
    let (n_a, n_b) = rho.dims();
    Verdict::from_margin(min_eigenvalue(&partial_transpose(
        rho.matrix(),
        n_a,
        n_b,
        Subsystem::A,
    )))
}

fn reduction_margin(rho: &CMatrix, rho_a: &CMatrix, rho_b: &CMatrix) -> f64 {
    let (n_a, n_b) = (rho_a.nrows(), rho_b.nrows());
    let left = kron(rho_a, &identity(n_b)) - rho;
    let right = kron(&identity(n_a), rho_b) - rho;
    min_eigenvalue(&left).min(min_eigenvalue(&right))
}

/// `ρ_A ⊗ I - ρ ≥ 0` and `I ⊗ ρ_B - ρ ≥ 0`.
pub fn check_reduction(rho: &DensityMatrix) -> Verdict {
    Verdict::from_margin(reduction_margin(
        rho.matrix(),
        &rho.reduced_a(),
        &rho.reduced_b(),
    ))
}

/// Smallest prefix-sum gap `Σ_{i≤k} μ↓_i - Σ_{i≤k} λ↓_i` for `k < n`, where
/// `μ` is zero-padded to the length of `λ`. Both inputs are ascending.
fn majorization_gap(joint_ascending: &[f64], reduced_ascending: &[f64]) -> f64 {
    let n = joint_ascending.len();
    let mut lambda_sum = 0.0;
    let mut mu_sum = 0.0;
    let mut gap = f64::INFINITY;
    for k in 0..n {
        lambda_sum += joint_ascending[n - 1 - k];
        if k < reduced_ascending.len() {
            mu_sum += reduced_ascending[reduced_ascending.len() - 1 - k];
        }
        if k + 1 < n {
            gap = gap.min(mu_sum - lambda_sum);
        }
    }
    debug_assert!(
        (mu_sum - lambda_sum).abs() < 1e-9,
        "spectra have different totals: {mu_sum} vs {lambda_sum}"
    );
    gap
}

fn majorization_margin(joint: &[f64], spec_a: &[f64], spec_b: &[f64]) -> f64 {
    majorization_gap(joint, spec_a).min(majorization_gap(joint, spec_b))
}

/// `λ(ρ) ≺ λ(ρ_A)` and `λ(ρ) ≺ λ(ρ_B)`.
pub fn check_majorization(rho: &DensityMatrix) -> Verdict {
    let joint = hermitian_eigenvalues(rho.matrix());
    let spec_a = hermitian_eigenvalues(&rho.reduced_a());
    let spec_b = hermitian_eigenvalues(&rho.reduced_b());
    Verdict::from_margin(majorization_margin(&joint, &spec_a, &spec_b))
}

/// Rényi entropy (natural log) of a probability spectrum. Entries are clamped
/// to `[0, 1]` first.
pub fn renyi_entropy_of_spectrum(spectrum: &[f64], alpha: Alpha) -> f64 {
    let clamped = spectrum.iter().map(|p| p.clamp(0.0, 1.0));
    match alpha {
        Alpha::Infinity => -clamped.fold(0.0, f64::max).ln(),
        Alpha::Finite(1.0) => -clamped
            .filter(|&p| p > 0.0)
            .map(|p| p * p.ln())
            .sum::<f64>(),
        Alpha::Finite(a) => {
            let s: f64 = clamped.filter(|&p| p > 0.0).map(|p| p.powf(a)).sum();
            s.ln() / (1.0 - a)
        }
    }
}

pub fn renyi_entropy(m: &CMatrix, alpha: f64) -> Result<f64> {
    let alpha = Alpha::new(alpha)?;
    Ok(renyi_entropy_of_spectrum(&hermitian_eigenvalues(m), alpha))
}

fn renyi_margin(joint: &[f64], spec_a: &[f64], spec_b: &[f64], alpha: Alpha) -> f64 {
    let s_ab = renyi_entropy_of_spectrum(joint, alpha);
    let s_a = renyi_entropy_of_spectrum(spec_a, alpha);
    let s_b = renyi_entropy_of_spectrum(spec_b, alpha);
    s_ab - s_a.max(s_b)
}

/// `S_α(ρ_A) ≤ S_α(ρ)` and `S_α(ρ_B) ≤ S_α(ρ)`.
pub fn check_renyi(rho: &DensityMatrix, alpha: f64) -> Result<Verdict> {
    let alpha = Alpha::new(alpha)?;
    let joint = hermitian_eigenvalues(rho.matrix());
    let spec_a = hermitian_eigenvalues(&rho.reduced_a());
    let spec_b = hermitian_eigenvalues(&rho.reduced_b());
    Ok(Verdict::from_margin(renyi_margin(
        &joint, &spec_a, &spec_b, alpha,
    )))
}

/// All criteria at once, decomposing `ρ`, `ρ_A` and `ρ_B` a single time.
pub fn evaluate_all(rho: &DensityMatrix, alphas: &[Alpha]) -> CriterionVerdict {
    let (n_a, n_b) = rho.dims();
    evaluate_matrix(rho.matrix(), n_a, n_b, alphas)
}

/// [`evaluate_all`] on a bare matrix that the caller knows to be a state.
pub(crate) fn evaluate_matrix(m: &CMatrix, n_a: usize, n_b: usize, alphas: &[Alpha]) -> CriterionVerdict {
    let rho_a = partial_trace(m, n_a, n_b, Subsystem::B);
    let rho_b = partial_trace(m, n_a, n_b, Subsystem::A);
    let joint = hermitian_eigenvalues(m);
    let spec_a = hermitian_eigenvalues(&rho_a);
    let spec_b = hermitian_eigenvalues(&rho_b);

    let ppt = Verdict::from_margin(min_eigenvalue(&partial_transpose(
        m,
        n_a,
        n_b,
        Subsystem::A,
    )));
    let reduction = Verdict::from_margin(reduction_margin(m, &rho_a, &rho_b));
    let majorization = Verdict::from_margin(majorization_margin(&joint, &spec_a, &spec_b));
    let renyi = alphas
        .iter()
        .map(|&a| {
            (
                a,
                Verdict::from_margin(renyi_margin(&joint, &spec_a, &spec_b, a)),
            )
        })
        .collect();
    CriterionVerdict {
        ppt,
        reduction,
        majorization,
        renyi,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{FamilyKind, StateFamily};
    use num_complex::Complex64;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn phi_plus() -> DensityMatrix {
        DensityMatrix::pure(2, 2, &[c(1.0), c(0.0), c(0.0), c(1.0)]).unwrap()
    }

    fn werner(p: f64) -> DensityMatrix {
        let m = phi_plus().into_matrix() * c(p) + identity(4) * c((1.0 - p) / 4.0);
        DensityMatrix::new(2, 2, m).unwrap()
    }

    fn bell_diagonal(a: [f64; 3]) -> DensityMatrix {
        let f = StateFamily::new(FamilyKind::BellDiagonal, None).unwrap();
        DensityMatrix::new(2, 2, f.to_matrix(&a).unwrap()).unwrap()
    }

    #[test]
    fn alpha_parsing() {
        assert_eq!("inf".parse::<Alpha>().unwrap(), Alpha::Infinity);
        assert_eq!("2.5".parse::<Alpha>().unwrap(), Alpha::Finite(2.5));
        assert!("0".parse::<Alpha>().is_err());
        assert!("-1".parse::<Alpha>().is_err());
        assert!("x".parse::<Alpha>().is_err());
        assert_eq!(Alpha::Infinity.to_string(), "inf");
        assert_eq!(Alpha::Finite(1.0).to_string(), "1");
    }

    #[test]
    fn ppt_of_maximally_mixed_and_bell_state() {
        let v = check_ppt(&DensityMatrix::maximally_mixed(2, 2));
        assert!(v.fulfilled);
        assert!((v.margin - 0.25).abs() < 1e-14);
        let v = check_ppt(&phi_plus());
        assert!(!v.fulfilled);
        assert!((v.margin + 0.5).abs() < 1e-12);
    }

    #[test]
    fn werner_threshold() {
        for p in [0.0, 0.1, 0.3, 0.33, 0.34, 0.5, 0.9, 1.0] {
            let v = check_ppt(&werner(p));
            assert!((v.margin - (1.0 - 3.0 * p) / 4.0).abs() < 1e-12, "p={p}");
            assert_eq!(v.fulfilled, p <= 1.0 / 3.0, "p={p}");
        }
    }

    #[test]
    fn reduction_of_maximally_mixed() {
        for (na, nb) in [(2, 2), (2, 3), (3, 3)] {
            let v = check_reduction(&DensityMatrix::maximally_mixed(na, nb));
            let n = (na * nb) as f64;
            let expected = (1.0 / na as f64 - 1.0 / n).min(1.0 / nb as f64 - 1.0 / n);
            assert!(v.fulfilled);
            assert!((v.margin - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn reduction_on_bell_diagonal_is_half_identity_minus_rho() {
        let a = [0.2, -0.1, 0.3];
        let rho = bell_diagonal(a);
        let expected = min_eigenvalue(&(identity(4) * c(0.5) - rho.matrix()));
        assert!((check_reduction(&rho).margin - expected).abs() < 1e-14);
    }

    #[test]
    fn majorization_cases() {
        assert!(check_majorization(&DensityMatrix::maximally_mixed(2, 3)).fulfilled);
        let v = check_majorization(&phi_plus());
        assert!(!v.fulfilled);
        assert!((v.margin + 0.5).abs() < 1e-12);
        for a in [[0.1, 0.1, 0.1], [-0.3, -0.3, -0.3], [0.2, -0.1, 0.3], [-0.4, 0.1, 0.0]] {
            let lmax = crate::states::bell_diagonal_eigenvalues(a)
                .into_iter()
                .fold(f64::MIN, f64::max);
            assert_eq!(check_majorization(&bell_diagonal(a)).fulfilled, lmax <= 0.5);
        }
    }

    #[test]
    fn majorization_gap_pads_with_zeros() {
        // λ = (0.4, 0.3, 0.2, 0.1), μ = (0.6, 0.4, 0, 0)
        let joint = [0.1, 0.2, 0.3, 0.4];
        let reduced = [0.4, 0.6];
        // prefix gaps 0.2, 0.3, 0.1
        let gap = majorization_gap(&joint, &reduced);
        assert!((gap - 0.1).abs() < 1e-15);
    }

    #[test]
    fn entropy_values() {
        for n in [2usize, 4, 6] {
            let flat = vec![1.0 / n as f64; n];
            for a in [Alpha::Finite(0.5), Alpha::Finite(1.0), Alpha::Finite(3.0), Alpha::Infinity] {
                assert!((renyi_entropy_of_spectrum(&flat, a) - (n as f64).ln()).abs() < 1e-14);
            }
        }
        let pure = [0.0, 0.0, 1.0, -1e-16];
        for a in [Alpha::Finite(1.0), Alpha::Finite(2.0), Alpha::Infinity] {
            assert!(renyi_entropy_of_spectrum(&pure, a).abs() < 1e-15);
        }
        let half = [0.5, 0.5, 0.0, 0.0];
        assert!((renyi_entropy_of_spectrum(&half, Alpha::Finite(2.0)) - 2f64.ln()).abs() < 1e-15);
        assert!(matches!(
            renyi_entropy(&identity(2), 0.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!((renyi_entropy(&(identity(3) * c(1.0 / 3.0)), 2.0).unwrap() - 3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn renyi_of_maximally_mixed_is_fulfilled() {
        let rho = DensityMatrix::maximally_mixed(2, 3);
        for a in [1.0, 2.0, f64::INFINITY] {
            let v = check_renyi(&rho, a).unwrap();
            assert!(v.fulfilled);
            assert!((v.margin - (6f64.ln() - 3f64.ln())).abs() < 1e-14);
        }
        assert!(check_renyi(&rho, -2.0).is_err());
    }

    #[test]
    fn evaluate_all_matches_individual_checks() {
        let rho = bell_diagonal([0.2, -0.2, 1.0 / 3.0]);
        let alphas = [Alpha::Finite(1.0), Alpha::Finite(2.0), Alpha::Infinity];
        let all = evaluate_all(&rho, &alphas);
        assert_eq!(all.ppt, check_ppt(&rho));
        assert_eq!(all.reduction, check_reduction(&rho));
        assert_eq!(all.majorization, check_majorization(&rho));
        for (a, v) in &all.renyi {
            assert_eq!(*v, check_renyi(&rho, a.value()).unwrap());
        }
        assert!(!all.ppt.fulfilled);
        assert!(!all.reduction.fulfilled);
        assert!(!all.majorization.fulfilled);
        assert!(!all.renyi(Alpha::Infinity).unwrap().fulfilled);
        assert!(all.renyi(Alpha::Finite(1.0)).unwrap().fulfilled);
    }

    #[test]
    fn bell_state_violates_everything() {
        let all = evaluate_all(&phi_plus(), &[Alpha::Finite(1.0), Alpha::Infinity]);
        assert!(!all.ppt.fulfilled && !all.reduction.fulfilled && !all.majorization.fulfilled);
        assert!(all.renyi.iter().all(|(_, v)| !v.fulfilled));
        let mixed = evaluate_all(
            &DensityMatrix::maximally_mixed(2, 2),
            &[Alpha::Finite(1.0), Alpha::Infinity],
        );
        assert!(mixed.ppt.fulfilled && mixed.reduction.fulfilled && mixed.majorization.fulfilled);
        assert!(mixed.renyi.iter().all(|(_, v)| v.fulfilled));
    }
}
