//! Mass-action reaction networks.
//!
//! A network holds `K` species, `M` single-step reactions and a system size
//! `omega`. Concentrations are `x = n / omega`; every reaction `a` has a
//! propensity `lambda_a(x) = kappa_a * prod_j x_j^{s_ja}` and changes the
//! copy numbers by the column `S[:, a] = r[:, a] - s[:, a]`.

mod dsl;

pub use dsl::{parse_network, ParseError};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Invalid network construction.
#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("network needs at least one species")]
    NoSpecies,
    #[error("network needs at least one reaction")]
    NoReactions,
    #[error("duplicate species `{0}`")]
    DuplicateSpecies(String),
    #[error("reaction {reaction} has rate constant {rate}, expected a finite positive value")]
    NonPositiveRate { reaction: usize, rate: f64 },
    #[error("reaction {reaction} has {found} coefficients, expected {expected}")]
    CoefficientLength {
        reaction: usize,
        expected: usize,
        found: usize,
    },
    #[error("reaction {0} has neither reactants nor products")]
    EmptyReaction(usize),
    #[error("system size must be positive, got {0}")]
    InvalidOmega(f64),
    #[error("stoichiometric matrix does not match the reactions")]
    StoichiometryMismatch,
}

/// One single-step reaction `sum_i s_i X_i -> sum_i r_i X_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reaction {
    pub rate_constant: f64,
    /// `s_i`, one entry per species.
    pub reactant_coeffs: Vec<u32>,
    /// `r_i`, one entry per species.
    pub product_coeffs: Vec<u32>,
}

impl Reaction {
    fn is_empty(&self) -> bool {
        self.reactant_coeffs.iter().all(|&c| c == 0) && self.product_coeffs.iter().all(|&c| c == 0)
    }
}

/// How the propensity of a reaction is evaluated from copy numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropensityForm {
    /// `kappa * prod_j (n_j / omega)^{s_j}`.
    #[default]
    MassAction,
    /// Small-count correction: `(n_j/omega)^{s_j}` becomes
    /// `omega^{-s_j} n_j! / (n_j - s_j)!`, which vanishes when `n_j < s_j`.
    ExactCounts,
}

/// Molecule counts or concentrations.
#[derive(Debug, Clone, PartialEq)]
pub enum StateVector {
    Counts(Vec<u64>),
    Concentrations(Vec<f64>),
}

impl StateVector {
    pub fn len(&self) -> usize {
        match self {
            StateVector::Counts(n) => n.len(),
            StateVector::Concentrations(x) => x.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn concentrations(&self, omega: f64) -> Vec<f64> {
        match self {
            StateVector::Counts(n) => n.iter().map(|&c| c as f64 / omega).collect(),
            StateVector::Concentrations(x) => x.clone(),
        }
    }
}

/// Reactant factor of a reaction, kept sparse for the hot paths.
#[derive(Debug, Clone, PartialEq)]
struct Factor {
    species: usize,
    power: u32,
}

/// A mass-action chemical reaction network. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ReactionNetwork {
    species: Vec<String>,
    reactions: Vec<Reaction>,
    omega: f64,
    /// K x M, row-major.
    stoich: Vec<i64>,
    factors: Vec<Vec<Factor>>,
    changes: Vec<Vec<(usize, i64)>>,
}

impl ReactionNetwork {
    pub fn new(
        species: Vec<String>,
        reactions: Vec<Reaction>,
        omega: f64,
    ) -> Result<Self, ModelError> {
        if species.is_empty() {
            return Err(ModelError::NoSpecies);
        }
        if reactions.is_empty() {
            return Err(ModelError::NoReactions);
        }
        for (i, s) in species.iter().enumerate() {
            if species[..i].contains(s) {
                return Err(ModelError::DuplicateSpecies(s.clone()));
            }
        }
        if !(omega > 0.0) {
            return Err(ModelError::InvalidOmega(omega));
        }
        let k = species.len();
        let m = reactions.len();
        let mut stoich = vec![0i64; k * m];
        let mut factors = Vec::with_capacity(m);
        let mut changes = Vec::with_capacity(m);
        for (a, r) in reactions.iter().enumerate() {
            if !(r.rate_constant > 0.0 && r.rate_constant.is_finite()) {
                return Err(ModelError::NonPositiveRate {
                    reaction: a,
                    rate: r.rate_constant,
                });
            }
            for coeffs in [&r.reactant_coeffs, &r.product_coeffs] {
                if coeffs.len() != k {
                    return Err(ModelError::CoefficientLength {
                        reaction: a,
                        expected: k,
                        found: coeffs.len(),
                    });
                }
            }
            if r.is_empty() {
                return Err(ModelError::EmptyReaction(a));
            }
            let mut f = Vec::new();
            let mut c = Vec::new();
            for i in 0..k {
                let delta = r.product_coeffs[i] as i64 - r.reactant_coeffs[i] as i64;
                stoich[i * m + a] = delta;
                if r.reactant_coeffs[i] > 0 {
                    f.push(Factor {
                        species: i,
                        power: r.reactant_coeffs[i],
                    });
                }
                if delta != 0 {
                    c.push((i, delta));
                }
            }
            factors.push(f);
            changes.push(c);
        }
        Ok(Self {
            species,
            reactions,
            omega,
            stoich,
            factors,
            changes,
        })
    }

    /// Same network at a different system size.
    pub fn with_omega(&self, omega: f64) -> Result<Self, ModelError> {
        if !(omega > 0.0) {
            return Err(ModelError::InvalidOmega(omega));
        }
        let mut net = self.clone();
        net.omega = omega;
        Ok(net)
    }

    /// Same network with reaction `index` (0-based) given a new rate constant.
    pub fn with_rate_constant(&self, index: usize, rate: f64) -> Result<Self, ModelError> {
        let mut reactions = self.reactions.clone();
        if let Some(r) = reactions.get_mut(index) {
            r.rate_constant = rate;
        }
        Self::new(self.species.clone(), reactions, self.omega)
    }

    pub fn species(&self) -> &[String] {
        &self.species
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Number of species `K`.
    pub fn num_species(&self) -> usize {
        self.species.len()
    }

    /// Number of reactions `M`.
    pub fn num_reactions(&self) -> usize {
        self.reactions.len()
    }

    /// `S_ia`.
    pub fn stoich(&self, i: usize, a: usize) -> i64 {
        self.stoich[i * self.reactions.len() + a]
    }

    /// The stoichiometric matrix as K rows of M entries.
    pub fn stoichiometric_matrix(&self) -> Vec<Vec<i64>> {
        let m = self.num_reactions();
        self.stoich.chunks(m).map(|row| row.to_vec()).collect()
    }

    /// Column `S_a` as a dense K-vector.
    pub fn stoich_column(&self, a: usize) -> Vec<f64> {
        (0..self.num_species()).map(|i| self.stoich(i, a) as f64).collect()
    }

    /// Nonzero entries of column `a`.
    pub fn changes(&self, a: usize) -> &[(usize, i64)] {
        &self.changes[a]
    }

    /// Concentration-form propensities `lambda_a(x)` written into `out`.
    pub fn propensities_into(&self, x: &[f64], out: &mut [f64]) {
        for (a, (r, fs)) in self.reactions.iter().zip(&self.factors).enumerate() {
            let mut v = r.rate_constant;
            for f in fs {
                v *= powi(x[f.species], f.power);
            }
            out[a] = v;
        }
    }

    pub fn propensities(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_reactions()];
        self.propensities_into(x, &mut out);
        out
    }

    /// Propensities `lambda_a(n / omega)` from copy numbers.
    ///
    /// With [`PropensityForm::ExactCounts`] each factor uses the falling
    /// factorial. Independently of the form, a channel whose firing would make
    /// a count negative gets zero propensity.
    pub fn count_propensities_into(&self, n: &[u64], form: PropensityForm, out: &mut [f64]) {
        let inv = 1.0 / self.omega;
        for (a, (r, fs)) in self.reactions.iter().zip(&self.factors).enumerate() {
            let blocked = self.changes[a]
                .iter()
                .any(|&(i, d)| d < 0 && n[i] < d.unsigned_abs());
            if blocked {
                out[a] = 0.0;
                continue;
            }
            let mut v = r.rate_constant;
            for f in fs {
                let nj = n[f.species];
                v *= match form {
                    PropensityForm::MassAction => powi(nj as f64 * inv, f.power),
                    PropensityForm::ExactCounts => falling_factorial(nj as f64, f.power) * powi(inv, f.power),
                };
            }
            out[a] = v;
        }
    }

    /// `propensity(net, state, exact_counts)`.
    ///
    /// For a concentration state under [`PropensityForm::ExactCounts`] the
    /// implied count `x * omega` need not be an integer; the falling factorial
    /// is evaluated on the real value and clamped at zero below `s_j`.
    pub fn propensity(&self, state: &StateVector, form: PropensityForm) -> Vec<f64> {
        let m = self.num_reactions();
        let mut out = vec![0.0; m];
        match (state, form) {
            (StateVector::Counts(n), _) => self.count_propensities_into(n, form, &mut out),
            (StateVector::Concentrations(x), PropensityForm::MassAction) => {
                self.propensities_into(x, &mut out)
            }
            (StateVector::Concentrations(x), PropensityForm::ExactCounts) => {
                for (a, (r, fs)) in self.reactions.iter().zip(&self.factors).enumerate() {
                    let mut v = r.rate_constant;
                    for f in fs {
                        v *= falling_factorial(x[f.species] * self.omega, f.power)
                            * powi(1.0 / self.omega, f.power);
                    }
                    out[a] = v;
                }
            }
        }
        out
    }

    /// `F(x) = S lambda(x)`.
    pub fn drift_into(&self, x: &[f64], props: &mut [f64], out: &mut [f64]) {
        self.propensities_into(x, props);
        out.iter_mut().for_each(|v| *v = 0.0);
        for (a, ch) in self.changes.iter().enumerate() {
            for &(i, d) in ch {
                out[i] += d as f64 * props[a];
            }
        }
    }

    pub fn drift(&self, x: &[f64]) -> Vec<f64> {
        let mut props = vec![0.0; self.num_reactions()];
        let mut out = vec![0.0; self.num_species()];
        self.drift_into(x, &mut props, &mut out);
        out
    }

    /// `D_ij = sum_a S_ia S_ja lambda_a` and `B_ia = S_ia sqrt(lambda_a)`.
    ///
    /// Negative propensities (possible off the nonnegative orthant) are
    /// clipped at zero in both matrices so that `D = B B^T` always holds.
    pub fn diffusion_matrices(&self, x: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
        let k = self.num_species();
        let m = self.num_reactions();
        let props = self.propensities(x);
        let mut d = DMatrix::zeros(k, k);
        let mut b = DMatrix::zeros(k, m);
        for a in 0..m {
            let lam = props[a].max(0.0);
            let sq = lam.sqrt();
            for &(i, si) in &self.changes[a] {
                b[(i, a)] = si as f64 * sq;
                for &(j, sj) in &self.changes[a] {
                    d[(i, j)] += (si * sj) as f64 * lam;
                }
            }
        }
        (d, b)
    }

    /// Analytic Jacobian `J_jk = dF_j / dx_k`, row-major K x K.
    pub fn jacobian_into(&self, x: &[f64], out: &mut [f64]) {
        let k = self.num_species();
        out.iter_mut().for_each(|v| *v = 0.0);
        for (a, (r, fs)) in self.reactions.iter().zip(&self.factors).enumerate() {
            for (p, fp) in fs.iter().enumerate() {
                // d lambda_a / d x_{fp.species}
                let mut g = r.rate_constant * fp.power as f64 * powi(x[fp.species], fp.power - 1);
                for (q, fq) in fs.iter().enumerate() {
                    if q != p {
                        g *= powi(x[fq.species], fq.power);
                    }
                }
                for &(i, d) in &self.changes[a] {
                    out[i * k + fp.species] += d as f64 * g;
                }
            }
        }
    }

    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let k = self.num_species();
        let mut out = vec![0.0; k * k];
        self.jacobian_into(x, &mut out);
        DMatrix::from_row_slice(k, k, &out)
    }

    /// Reaction-DSL source that parses back to this network.
    pub fn to_dsl(&self) -> String {
        dsl::serialize(self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&NetworkJson::from(self)).expect("network serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, crate::Error> {
        let raw: NetworkJson = serde_json::from_str(text)?;
        Ok(raw.try_into()?)
    }
}

#[inline]
fn powi(x: f64, p: u32) -> f64 {
    match p {
        0 => 1.0,
        1 => x,
        2 => x * x,
        3 => x * x * x,
        _ => x.powi(p as i32),
    }
}

/// `n (n-1) ... (n-s+1)`, zero when `n < s`.
fn falling_factorial(n: f64, s: u32) -> f64 {
    if n < s as f64 {
        return 0.0;
    }
    (0..s).fold(1.0, |acc, i| acc * (n - i as f64))
}

/// Interchange form: species, reactions, S and omega.
#[derive(Debug, Serialize, Deserialize)]
struct NetworkJson {
    species: Vec<String>,
    omega: f64,
    reactions: Vec<Reaction>,
    stoichiometry: Vec<Vec<i64>>,
}

impl From<&ReactionNetwork> for NetworkJson {
    fn from(net: &ReactionNetwork) -> Self {
        Self {
            species: net.species.clone(),
            omega: net.omega,
            reactions: net.reactions.clone(),
            stoichiometry: net.stoichiometric_matrix(),
        }
    }
}

impl TryFrom<NetworkJson> for ReactionNetwork {
    type Error = ModelError;

    fn try_from(raw: NetworkJson) -> Result<Self, ModelError> {
        let net = ReactionNetwork::new(raw.species, raw.reactions, raw.omega)?;
        if net.stoichiometric_matrix() != raw.stoichiometry {
            return Err(ModelError::StoichiometryMismatch);
        }
        Ok(net)
    }
}

/// The Brusselator `0 -> X`, `X -> Y`, `2X + Y -> 3X`, `X -> 0` with
/// `c = d = 1`.
pub fn brusselator(a: f64, b: f64, omega: f64) -> Result<ReactionNetwork, ModelError> {
    let species = vec!["X".to_string(), "Y".to_string()];
    let r = |rate, s: [u32; 2], p: [u32; 2]| Reaction {
        rate_constant: rate,
        reactant_coeffs: s.to_vec(),
        product_coeffs: p.to_vec(),
    };
    ReactionNetwork::new(
        species,
        vec![
            r(a, [0, 0], [1, 0]),
            r(b, [1, 0], [0, 1]),
            r(1.0, [2, 1], [3, 0]),
            r(1.0, [1, 0], [0, 0]),
        ],
        omega,
    )
}

/// Immigration-death process `0 -> X` (rate `k`), `X -> 0` (rate `gamma`).
pub fn birth_death(k: f64, gamma: f64, omega: f64) -> Result<ReactionNetwork, ModelError> {
    ReactionNetwork::new(
        vec!["X".to_string()],
        vec![
            Reaction {
                rate_constant: k,
                reactant_coeffs: vec![0],
                product_coeffs: vec![1],
            },
            Reaction {
                rate_constant: gamma,
                reactant_coeffs: vec![1],
                product_coeffs: vec![0],
            },
        ],
        omega,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bruss() -> ReactionNetwork {
        brusselator(1.0, 2.5, 3000.0).unwrap()
    }

    #[test]
    fn brusselator_propensities_at_fixed_point() {
        let net = bruss();
        let lam = net.propensity(&StateVector::Concentrations(vec![1.0, 2.5]), PropensityForm::MassAction);
        assert_eq!(lam, vec![1.0, 2.5, 2.5, 1.0]);
    }

    #[test]
    fn exact_counts_vanish_below_reactant_multiplicity() {
        let net = ReactionNetwork::new(
            vec!["X".into()],
            vec![Reaction {
                rate_constant: 1.0,
                reactant_coeffs: vec![2],
                product_coeffs: vec![0],
            }],
            10.0,
        )
        .unwrap();
        let lam = net.propensity(&StateVector::Counts(vec![1]), PropensityForm::ExactCounts);
        assert_eq!(lam, vec![0.0]);
        let lam = net.propensity(&StateVector::Counts(vec![3]), PropensityForm::ExactCounts);
        assert!((lam[0] - 6.0 / 100.0).abs() < 1e-15);
    }

    #[test]
    fn birth_death_propensities() {
        let net = birth_death(2.0, 1.0, 50.0).unwrap();
        let lam = net.propensity(&StateVector::Counts(vec![100]), PropensityForm::MassAction);
        assert_eq!(lam, vec![2.0, 2.0]);
    }

    #[test]
    fn drift_examples() {
        let net = bruss();
        assert_eq!(net.drift(&[1.0, 2.5]), vec![0.0, 0.0]);
        assert_eq!(net.drift(&[2.0, 1.0]), vec![-2.0, 1.0]);
        let net = parse_network("1.0 : X -> \n3.0 : X + Y -> 2 Y\n", 1.0).unwrap();
        assert_eq!(net.drift(&[0.0, 0.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn diffusion_birth_death() {
        let net = birth_death(2.0, 1.0, 50.0).unwrap();
        let (d, b) = net.diffusion_matrices(&[2.0]);
        assert_eq!(d[(0, 0)], 4.0);
        assert!(((&b * b.transpose())[(0, 0)] - 4.0).abs() < 1e-14);
        let (d0, b0) = net.diffusion_matrices(&[0.0]);
        assert!(d0[(0, 0)] == 2.0 && b0[(0, 1)] == 0.0);
    }

    #[test]
    fn diffusion_is_b_bt() {
        let net = bruss();
        let (d, b) = net.diffusion_matrices(&[1.0, 2.5]);
        let bbt = &b * b.transpose();
        assert!((d - bbt).abs().max() < 1e-14);
    }

    #[test]
    fn jacobian_closed_form() {
        let net = bruss();
        let (u1, u2, b) = (1.3, 2.1, 2.5);
        let j = net.jacobian(&[u1, u2]);
        let expect = [
            [-(b + 1.0) + 2.0 * u1 * u2, u1 * u1],
            [b - 2.0 * u1 * u2, -u1 * u1],
        ];
        for r in 0..2 {
            for c in 0..2 {
                assert!((j[(r, c)] - expect[r][c]).abs() < 1e-13);
            }
        }
        let jf = net.jacobian(&[1.0, 2.5]);
        assert!((jf.trace() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn linear_decay_jacobian() {
        let net = ReactionNetwork::new(
            vec!["X".into()],
            vec![Reaction {
                rate_constant: 1.0,
                reactant_coeffs: vec![1],
                product_coeffs: vec![0],
            }],
            1.0,
        )
        .unwrap();
        assert_eq!(net.jacobian(&[3.0])[(0, 0)], -1.0);
    }

    #[test]
    fn negative_count_guard() {
        let net = bruss();
        let mut out = [0.0; 4];
        net.count_propensities_into(&[0, 5], PropensityForm::MassAction, &mut out);
        // X -> Y and X -> 0 need an X; 2X+Y -> 3X needs Y only to go negative
        assert_eq!(out[1], 0.0);
        assert_eq!(out[3], 0.0);
        assert_eq!(out[0], 1.0);
    }

    #[test]
    fn rejects_invalid_networks() {
        assert_eq!(
            ReactionNetwork::new(vec!["X".into()], vec![], 1.0).unwrap_err(),
            ModelError::NoReactions
        );
        assert!(matches!(
            brusselator(1.0, -1.0, 1.0),
            Err(ModelError::NonPositiveRate { .. })
        ));
        assert!(matches!(brusselator(1.0, 2.0, 0.0), Err(ModelError::InvalidOmega(_))));
    }

    #[test]
    fn json_round_trip() {
        let net = bruss();
        let back = ReactionNetwork::from_json(&net.to_json()).unwrap();
        assert_eq!(net, back);
    }
}
