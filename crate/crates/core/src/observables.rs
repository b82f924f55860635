//! Quadratic parafermion observables at filling ν = 2/3 and the standard
//! Alice/Bob observable sets built from them.
//!
//! The nine-dimensional space is the product of the two independent
//! ternary charge sectors. Alice's operators act on the first factor only;
//! the unprimed Bob operators act on the second factor only, so they commute
//! with Alice's. The primed Bob operators share the local algebra of the
//! unprimed ones but pick up a phase `e^{4πi/3}` against Alice's.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{omega, tensor_product, Operator};

/// Tolerance on the commutator entries when classifying a set as signaling.
pub const SIGNALING_TOLERANCE: f64 = 1e-12;

/// Labels of the ten standard sets, in reporting order.
pub const STANDARD_SET_LABELS: [&str; 10] = [
    "A0A1-B0B1",
    "A0A1-B0pB1p",
    "A1A0-B1B0",
    "A1A0-B1pB0p",
    "A0A1-B1B0",
    "A0A1-B1pB0p",
    "A0A1-B0B2",
    "A0A1-B0pB2p",
    "A0A1-B2B0",
    "A0A1-B2pB0p",
];

/// The non-signaling and signaling sets of the headline comparison.
pub const TABLE_I_LABELS: [&str; 2] = ["A0A1-B0B1", "A0A1-B0pB1p"];

/// The eight concrete 9×9 observables.
#[derive(Debug, Clone)]
pub struct ParafermionObservables {
    pub a0: Operator,
    pub a1: Operator,
    pub b0: Operator,
    pub b1: Operator,
    pub b2: Operator,
    pub b0p: Operator,
    pub b1p: Operator,
    pub b2p: Operator,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

impl ParafermionObservables {
    pub fn new() -> Self {
        let w = omega();
        let wb = w.conj();
        let zero = c(0.0, 0.0);
        let one = c(1.0, 0.0);

        let id = Operator::identity(3);
        let clock = Operator::from_rows("Z", 3, &[one, zero, zero, zero, w, zero, zero, zero, wb])
            .expect("3x3 literal");
        let shift = Operator::shift(3);
        let twisted_shift =
            Operator::from_rows("M", 3, &[zero, wb, zero, zero, zero, w, one, zero, zero])
                .expect("3x3 literal");
        let twisted_back =
            Operator::from_rows("N", 3, &[zero, zero, one, wb, zero, zero, zero, w, zero])
                .expect("3x3 literal");

        let a0 = tensor_product(&clock, &id).with_label("A0");
        let a1 = tensor_product(&shift, &id).with_label("A1");
        let b0 = tensor_product(&id, &clock).with_label("B0");
        let b1 = tensor_product(&id, &shift).with_label("B1");
        let b0p = tensor_product(&twisted_shift, &shift).with_label("B0p");
        let b1p = tensor_product(&twisted_shift, &twisted_back).with_label("B1p");
        let b2 = b0
            .adjoint()
            .compose(&b1)
            .expect("same dimension")
            .with_label("B2");
        let b2p = b0p
            .adjoint()
            .compose(&b1p)
            .expect("same dimension")
            .with_label("B2p");

        Self {
            a0,
            a1,
            b0,
            b1,
            b2,
            b0p,
            b1p,
            b2p,
        }
    }

    /// Looks up an observable by token (`A0`, `B1p`, `B2'`, ...). A trailing
    /// `dag` selects the adjoint.
    pub fn by_token(&self, token: &str) -> Option<Operator> {
        let token = token.trim();
        let (base, dagger) = match token.strip_suffix("dag") {
            Some(base) => (base, true),
            None => (token, false),
        };
        let base = base.replace('\'', "p");
        let op = match base.as_str() {
            "A0" => &self.a0,
            "A1" => &self.a1,
            "B0" => &self.b0,
            "B1" => &self.b1,
            "B2" => &self.b2,
            "B0p" => &self.b0p,
            "B1p" => &self.b1p,
            "B2p" => &self.b2p,
            _ => return None,
        };
        Some(if dagger { op.adjoint() } else { op.clone() })
    }

    pub fn all(&self) -> [&Operator; 8] {
        [
            &self.a0, &self.a1, &self.b0, &self.b1, &self.b2, &self.b0p, &self.b1p, &self.b2p,
        ]
    }
}

impl Default for ParafermionObservables {
    fn default() -> Self {
        Self::new()
    }
}

/// Alice's two observables and Bob's two observables, in CHSH order.
#[derive(Debug, Clone)]
pub struct ObservableSet {
    pub label: String,
    pub alice0: Operator,
    pub alice1: Operator,
    pub bob0: Operator,
    pub bob1: Operator,
    pub signaling: bool,
}

impl ObservableSet {
    /// Builds a set and classifies it as signaling when any Alice/Bob pair
    /// fails to commute.
    pub fn new(
        label: impl Into<String>,
        alice0: Operator,
        alice1: Operator,
        bob0: Operator,
        bob1: Operator,
    ) -> Result<Self> {
        let dim = alice0.dim();
        for op in [&alice1, &bob0, &bob1] {
            op.check_dim(dim)?;
        }
        let signaling = [&alice0, &alice1].iter().any(|a| {
            [&bob0, &bob1]
                .iter()
                .any(|b| a.commutator_norm(b) > SIGNALING_TOLERANCE)
        });
        Ok(Self {
            label: label.into(),
            alice0,
            alice1,
            bob0,
            bob1,
            signaling,
        })
    }

    pub fn dim(&self) -> usize {
        self.alice0.dim()
    }

    pub fn alice(&self, i: usize) -> &Operator {
        if i == 0 {
            &self.alice0
        } else {
            &self.alice1
        }
    }

    pub fn bob(&self, j: usize) -> &Operator {
        if j == 0 {
            &self.bob0
        } else {
            &self.bob1
        }
    }

    /// `[A0, A1, B0, B1]`.
    pub fn operators(&self) -> [&Operator; 4] {
        [&self.alice0, &self.alice1, &self.bob0, &self.bob1]
    }
}

/// Canonical form of a set label: primes become `p`, whitespace is dropped.
pub fn normalize_label(label: &str) -> String {
    label
        .chars()
        .filter(|ch| !ch.is_whitespace())
        .map(|ch| if ch == '\'' { 'p' } else { ch })
        .collect()
}

fn split_tokens(side: &str) -> Option<(String, String)> {
    // Each token is a letter, a digit and an optional `p`.
    let mut tokens = Vec::new();
    let chars: Vec<char> = side.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        if i + 1 >= chars.len() || !chars[i].is_ascii_alphabetic() || !chars[i + 1].is_ascii_digit()
        {
            return None;
        }
        let mut tok: String = chars[i..i + 2].iter().collect();
        i += 2;
        if i < chars.len() && chars[i] == 'p' {
            tok.push('p');
            i += 1;
        }
        tokens.push(tok);
    }
    match tokens.as_slice() {
        [x, y] => Some((x.clone(), y.clone())),
        _ => None,
    }
}

/// Builds one set from a label of the form `<A_i A_j>-<B_k B_l>`.
pub fn set_from_label(observables: &ParafermionObservables, label: &str) -> Result<ObservableSet> {
    let norm = normalize_label(label);
    let unknown = || Error::UnknownSet(label.to_string());
    let (alice, bob) = norm.split_once('-').ok_or_else(unknown)?;
    let (a0, a1) = split_tokens(alice).ok_or_else(unknown)?;
    let (b0, b1) = split_tokens(bob).ok_or_else(unknown)?;
    if !a0.starts_with('A') || !a1.starts_with('A') || !b0.starts_with('B') || !b1.starts_with('B')
    {
        return Err(unknown());
    }
    let get = |t: &str| observables.by_token(t).ok_or_else(unknown);
    ObservableSet::new(norm.clone(), get(&a0)?, get(&a1)?, get(&b0)?, get(&b1)?)
}

/// The ten sets of the extended comparison, including the two headline sets.
pub fn build_standard_sets() -> Vec<ObservableSet> {
    let obs = ParafermionObservables::new();
    STANDARD_SET_LABELS
        .iter()
        .map(|label| set_from_label(&obs, label).expect("standard labels are valid"))
        .collect()
}

/// Looks up one of the ten standard sets by label (primes accepted).
pub fn standard_set(label: &str) -> Result<ObservableSet> {
    let norm = normalize_label(label);
    if !STANDARD_SET_LABELS.contains(&norm.as_str()) {
        return Err(Error::UnknownSet(label.to_string()));
    }
    set_from_label(&ParafermionObservables::new(), &norm)
}

/// Expands a selection (`all`, `tableI`, `tableII`, or comma-separated labels).
pub fn select_sets(selection: &str) -> Result<Vec<ObservableSet>> {
    let all = build_standard_sets();
    match selection.trim() {
        "all" | "tableII" => Ok(all),
        "tableI" => Ok(all
            .into_iter()
            .filter(|s| TABLE_I_LABELS.contains(&s.label.as_str()))
            .collect()),
        list => list
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(standard_set)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::commutation_phase;
    use nalgebra::DMatrix;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn alice0_is_clock_on_first_factor() {
        let obs = ParafermionObservables::new();
        let w = omega();
        for k in 0..9 {
            let expected = match k / 3 {
                0 => Complex64::new(1.0, 0.0),
                1 => w,
                _ => w.conj(),
            };
            assert!(close(obs.a0.entries()[(k, k)], expected));
        }
        let off: f64 = (0..9)
            .flat_map(|i| (0..9).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| obs.a0.entries()[(i, j)].norm())
            .sum();
        assert_eq!(off, 0.0);
    }

    #[test]
    fn every_observable_is_unitary_of_order_three() {
        let obs = ParafermionObservables::new();
        for op in obs.all() {
            assert!(op.unitarity_defect() < 1e-12, "{}", op.label());
            assert!(op.cube_defect() < 1e-12, "{}", op.label());
        }
    }

    #[test]
    fn b2_matches_direct_product() {
        let obs = ParafermionObservables::new();
        let w = omega();
        // Independent route: I ⊗ (diag(1, ω̄, ω)·S).
        let diag = [Complex64::new(1.0, 0.0), w.conj(), w];
        let mut small = DMatrix::<Complex64>::zeros(3, 3);
        for r in 0..3 {
            small[(r, (r + 1) % 3)] = diag[r];
        }
        let expected = DMatrix::<Complex64>::identity(3, 3).kronecker(&small);
        assert!((obs.b2.entries() - expected).norm() < 1e-12);
    }

    #[test]
    fn local_and_cross_phases() {
        let obs = ParafermionObservables::new();
        let w = omega();
        assert!(close(commutation_phase(&obs.a0, &obs.a1).unwrap(), w.conj()));
        assert!(close(commutation_phase(&obs.b0, &obs.b1).unwrap(), w.conj()));
        assert!(close(commutation_phase(&obs.b0p, &obs.b1p).unwrap(), w.conj()));
        let four_thirds = w * w;
        for a in [&obs.a0, &obs.a1] {
            for b in [&obs.b0, &obs.b1, &obs.b2, &obs.b2p] {
                assert!(close(commutation_phase(a, b).unwrap(), Complex64::new(1.0, 0.0)));
            }
            for b in [&obs.b0p, &obs.b1p] {
                assert!(close(commutation_phase(a, b).unwrap(), four_thirds));
            }
        }
    }

    #[test]
    fn signaling_flags() {
        for set in build_standard_sets() {
            assert_eq!(set.signaling, set.label.contains('p'), "{}", set.label);
        }
    }

    #[test]
    fn labels_accept_primes() {
        let set = standard_set("A0A1-B0'B1'").unwrap();
        assert_eq!(set.label, "A0A1-B0pB1p");
        assert!(set.signaling);
        assert!(matches!(standard_set("A0A1-B9B1"), Err(Error::UnknownSet(_))));
        assert!(matches!(standard_set("nonsense"), Err(Error::UnknownSet(_))));
    }

    #[test]
    fn selections() {
        assert_eq!(select_sets("all").unwrap().len(), 10);
        assert_eq!(select_sets("tableI").unwrap().len(), 2);
        let two = select_sets("A0A1-B0B1,A0A1-B2pB0p").unwrap();
        assert_eq!(two[1].label, "A0A1-B2pB0p");
        assert!(select_sets("A0A1-B0B1,bogus").is_err());
    }

    #[test]
    fn dagger_tokens() {
        let obs = ParafermionObservables::new();
        let d = obs.by_token("B0pdag").unwrap();
        assert!((d.entries() - obs.b0p.entries().adjoint()).norm() < 1e-15);
    }
}
