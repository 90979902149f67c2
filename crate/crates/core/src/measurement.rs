//! Projective and generalized measurements on labeled registers.
//!
//! Every measurement family comes in two forms. The `*_branches`
//! functions enumerate all outcomes with their exact probabilities and
//! collapsed post-states, dropping branches whose probability falls
//! below [`NEGLIGIBLE_BRANCH`]. The sampled forms take a unit-interval
//! draw and pick the branch whose cumulative probability interval
//! contains it, so a zero-probability outcome can never be selected.
//!
//! Generalized measurements use the positive square root of each POVM
//! element as its Kraus operator, i.e. the collapse E -> sqrt(E) |psi>
//! up to normalization.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::{SchmidtPair, StateVector};

/// Tolerance for Hermiticity, positivity and completeness of a POVM.
pub const POVM_TOLERANCE: f64 = 1e-12;

/// Branches below this probability are dropped from enumeration; a full
/// branch list still sums to 1 within 4 * NEGLIGIBLE_BRANCH.
pub const NEGLIGIBLE_BRANCH: f64 = 1e-14;

/// One measurement outcome: its name, probability, and the collapsed
/// state of the full register (measured qubits included).
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub outcome: &'static str,
    pub probability: f64,
    pub post_state: StateVector,
}

/// A validated POVM: Hermitian positive semidefinite elements summing to
/// the identity, each paired with its positive square root for collapse.
#[derive(Debug, Clone)]
pub struct Povm {
    dim: usize,
    names: Vec<&'static str>,
    elements: Vec<DMatrix<Complex64>>,
    kraus: Vec<DMatrix<Complex64>>,
}

impl Povm {
    /// Validates the elements against [`POVM_TOLERANCE`] and precomputes
    /// the Kraus operators.
    pub fn new(elements: Vec<DMatrix<Complex64>>, names: Vec<&'static str>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::BadArgument("a POVM needs at least one element".into()));
        }
        if elements.len() != names.len() {
            return Err(Error::PovmNameCount {
                elements: elements.len(),
                names: names.len(),
            });
        }
        let dim = elements[0].nrows();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::BadArgument(format!(
                "element dimension {dim} is not a power of two"
            )));
        }
        let mut sum = DMatrix::<Complex64>::zeros(dim, dim);
        let mut kraus = Vec::with_capacity(elements.len());
        for (index, e) in elements.iter().enumerate() {
            if e.nrows() != dim || e.ncols() != dim {
                return Err(Error::OperatorDim {
                    got: e.nrows().max(e.ncols()),
                    expected: dim,
                });
            }
            let herm_dev = (e - e.adjoint())
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            if herm_dev > POVM_TOLERANCE {
                return Err(Error::BadPovmElement {
                    index,
                    property: "Hermitian",
                    deviation: herm_dev,
                });
            }
            kraus.push(positive_sqrt(e, index)?);
            sum += e;
        }
        let mut dev: f64 = 0.0;
        for r in 0..dim {
            for c in 0..dim {
                let want = if r == c { Complex64::ONE } else { Complex64::ZERO };
                dev = dev.max((sum[(r, c)] - want).norm());
            }
        }
        if dev > POVM_TOLERANCE {
            return Err(Error::PovmIncomplete(dev));
        }
        Ok(Self {
            dim,
            names,
            elements,
            kraus,
        })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self, index: usize) -> &'static str {
        self.names[index]
    }

    pub fn names(&self) -> &[&'static str] {
        &self.names
    }

    pub fn element(&self, index: usize) -> &DMatrix<Complex64> {
        &self.elements[index]
    }

    pub fn kraus(&self, index: usize) -> &DMatrix<Complex64> {
        &self.kraus[index]
    }
}

/// Positive square root of a Hermitian PSD matrix through its spectral
/// decomposition. Eigenvalues in [-POVM_TOLERANCE, 0] are clamped to
/// zero; anything lower is rejected.
fn positive_sqrt(e: &DMatrix<Complex64>, index: usize) -> Result<DMatrix<Complex64>> {
    let eigen = nalgebra::SymmetricEigen::new(e.clone());
    let min = eigen.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -POVM_TOLERANCE {
        return Err(Error::BadPovmElement {
            index,
            property: "positive semidefinite",
            deviation: -min,
        });
    }
    let dim = e.nrows();
    let mut root = DMatrix::<Complex64>::zeros(dim, dim);
    for k in 0..dim {
        let lambda = eigen.eigenvalues[k].max(0.0).sqrt();
        let column = eigen.eigenvectors.column(k);
        for r in 0..dim {
            for c in 0..dim {
                root[(r, c)] += Complex64::new(lambda, 0.0) * column[r] * column[c].conj();
            }
        }
    }
    Ok(root)
}

/// Unambiguous discrimination POVM for the pair u+- = alpha|0> +- beta|1>:
/// "conclusive-plus" never fires on u-, "conclusive-minus" never fires
/// on u+, and "inconclusive" absorbs the overlap. On an equal mixture of
/// u+ and u- the conclusive probability is the optimal 2 beta^2.
pub fn build_unambiguous_povm(pair: &SchmidtPair) -> Result<Povm> {
    if pair.is_product() {
        return Err(Error::DegeneratePair);
    }
    let (a, b) = (pair.alpha(), pair.beta());
    let scale = 1.0 / (2.0 * a * a);
    let conclusive = |sign: f64| {
        // scale * |v><v| with v = beta|0> + sign alpha|1>
        DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(scale * b * b, 0.0),
                Complex64::new(scale * sign * a * b, 0.0),
                Complex64::new(scale * sign * a * b, 0.0),
                Complex64::new(scale * a * a, 0.0),
            ],
        )
    };
    let mut inconclusive = DMatrix::<Complex64>::zeros(2, 2);
    inconclusive[(0, 0)] = Complex64::new((a * a - b * b) / (a * a), 0.0);
    Povm::new(
        vec![conclusive(1.0), conclusive(-1.0), inconclusive],
        vec!["conclusive-plus", "conclusive-minus", "inconclusive"],
    )
}

/// Four-dimensional discrimination POVM for the two-qubit states
/// a1|00> +- b1|11>, where (a1, b1) are the squared-and-renormalized
/// coefficients of the input pair. The odd-parity directions |01> and
/// |10> carry no conclusive information and are folded into the
/// inconclusive element, keeping the set complete on the full space.
pub fn build_residual_discrimination_povm(pair: &SchmidtPair) -> Result<Povm> {
    if pair.is_product() {
        return Err(Error::DegeneratePair);
    }
    let r = pair.squared();
    let (a1, b1) = (r.alpha(), r.beta());
    let scale = 1.0 / (2.0 * a1 * a1);
    let conclusive = |sign: f64| {
        let mut e = DMatrix::<Complex64>::zeros(4, 4);
        e[(0, 0)] = Complex64::new(scale * b1 * b1, 0.0);
        e[(0, 3)] = Complex64::new(scale * sign * a1 * b1, 0.0);
        e[(3, 0)] = Complex64::new(scale * sign * a1 * b1, 0.0);
        e[(3, 3)] = Complex64::new(scale * a1 * a1, 0.0);
        e
    };
    let mut inconclusive = DMatrix::<Complex64>::zeros(4, 4);
    inconclusive[(0, 0)] = Complex64::new((a1 * a1 - b1 * b1) / (a1 * a1), 0.0);
    inconclusive[(1, 1)] = Complex64::ONE;
    inconclusive[(2, 2)] = Complex64::ONE;
    Povm::new(
        vec![conclusive(1.0), conclusive(-1.0), inconclusive],
        vec!["conclusive-plus", "conclusive-minus", "inconclusive"],
    )
}

/// Both outcomes of a standard-basis measurement of one qubit.
pub fn z_branches(state: &StateVector, label: &str) -> Result<Vec<MeasurementRecord>> {
    let mask = state.label_mask(label)?;
    let outcomes: [(&'static str, bool); 2] = [("0", false), ("1", true)];
    let mut records = Vec::with_capacity(2);
    for (name, bit) in outcomes {
        if let Some(record) = collapse(state, name, |i| (i & mask != 0) == bit) {
            records.push(record);
        }
    }
    Ok(records)
}

/// Standard-basis measurement of one qubit, selected by `draw`.
pub fn measure_z(state: &StateVector, label: &str, draw: f64) -> Result<MeasurementRecord> {
    select_branch(z_branches(state, label)?, draw)
}

/// Both outcomes of a joint parity measurement of two qubits, projecting
/// onto the even span {|00>, |11>} or the odd span {|01>, |10>} without
/// disturbing anything inside either subspace.
pub fn parity_branches(state: &StateVector, pair: (&str, &str)) -> Result<Vec<MeasurementRecord>> {
    if pair.0 == pair.1 {
        return Err(Error::BadArgument(format!(
            "parity needs two distinct qubits, got `{}` twice",
            pair.0
        )));
    }
    let m0 = state.label_mask(pair.0)?;
    let m1 = state.label_mask(pair.1)?;
    let outcomes: [(&'static str, bool); 2] = [("even", true), ("odd", false)];
    let mut records = Vec::with_capacity(2);
    for (name, even) in outcomes {
        if let Some(record) = collapse(state, name, |i| ((i & m0 != 0) == (i & m1 != 0)) == even) {
            records.push(record);
        }
    }
    Ok(records)
}

/// Parity measurement selected by `draw`.
pub fn measure_subspace_parity(
    state: &StateVector,
    pair: (&str, &str),
    draw: f64,
) -> Result<MeasurementRecord> {
    select_branch(parity_branches(state, pair)?, draw)
}

/// Both outcomes of the incomplete Bell measurement distinguishing the
/// two odd-parity Bell states (|01> +- |10>)/sqrt(2) of the given
/// qubits. The register support must already lie in the odd subspace.
pub fn bell_branches(state: &StateVector, pair: (&str, &str)) -> Result<Vec<MeasurementRecord>> {
    if pair.0 == pair.1 {
        return Err(Error::BadArgument(format!(
            "a Bell measurement needs two distinct qubits, got `{}` twice",
            pair.0
        )));
    }
    let m0 = state.label_mask(pair.0)?;
    let m1 = state.label_mask(pair.1)?;
    let amps = state.amplitudes();
    let outside: f64 = (0..amps.len())
        .filter(|i| (i & m0 != 0) == (i & m1 != 0))
        .map(|i| amps[i].norm_sqr())
        .sum();
    if outside > POVM_TOLERANCE {
        return Err(Error::NotOddParity(outside));
    }
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let outcomes: [(&'static str, f64); 2] = [("psi-plus", 1.0), ("psi-minus", -1.0)];
    let mut records = Vec::with_capacity(2);
    for (name, sign) in outcomes {
        let mut post = vec![Complex64::ZERO; amps.len()];
        let mut probability = 0.0;
        for base in 0..amps.len() {
            if base & m0 != 0 || base & m1 != 0 {
                continue;
            }
            let i01 = base | m1;
            let i10 = base | m0;
            let overlap = (amps[i01] + sign * amps[i10]) * inv_sqrt2;
            probability += overlap.norm_sqr();
            post[i01] = overlap * inv_sqrt2;
            post[i10] = sign * overlap * inv_sqrt2;
        }
        if probability < NEGLIGIBLE_BRANCH {
            continue;
        }
        let inv = 1.0 / probability.sqrt();
        for amp in &mut post {
            *amp *= inv;
        }
        records.push(MeasurementRecord {
            outcome: name,
            probability,
            post_state: StateVector::from_parts(state.labels_arc(), post),
        });
    }
    Ok(records)
}

/// Incomplete Bell measurement selected by `draw`.
pub fn incomplete_bell_measure(
    state: &StateVector,
    pair: (&str, &str),
    draw: f64,
) -> Result<MeasurementRecord> {
    select_branch(bell_branches(state, pair)?, draw)
}

/// Every outcome of a POVM applied to the named qubits, collapsing the
/// register with the Kraus operator sqrt(E) of each element.
pub fn povm_branches(
    state: &StateVector,
    labels: &[&str],
    povm: &Povm,
) -> Result<Vec<MeasurementRecord>> {
    let mut masks = Vec::with_capacity(labels.len());
    for label in labels {
        let mask = state.label_mask(label)?;
        if masks.contains(&mask) {
            return Err(Error::DuplicateLabel(label.to_string()));
        }
        masks.push(mask);
    }
    let sub_dim = 1usize << labels.len();
    if povm.dim() != sub_dim {
        return Err(Error::OperatorDim {
            got: povm.dim(),
            expected: sub_dim,
        });
    }
    let mut records = Vec::with_capacity(povm.len());
    for k in 0..povm.len() {
        let (mut post, probability) = apply_on_subsystem(state, &masks, povm.kraus(k));
        if probability < NEGLIGIBLE_BRANCH {
            continue;
        }
        let inv = 1.0 / probability.sqrt();
        for amp in &mut post {
            *amp *= inv;
        }
        records.push(MeasurementRecord {
            outcome: povm.name(k),
            probability,
            post_state: StateVector::from_parts(state.labels_arc(), post),
        });
    }
    Ok(records)
}

/// POVM outcome selected by `draw`.
pub fn apply_povm(
    state: &StateVector,
    labels: &[&str],
    povm: &Povm,
    draw: f64,
) -> Result<MeasurementRecord> {
    select_branch(povm_branches(state, labels, povm)?, draw)
}

/// Applies an operator to the subsystem picked out by `masks` (one mask
/// per measured qubit, first mask owning the operator's high bit) and
/// returns the unnormalized image with its squared norm.
fn apply_on_subsystem(
    state: &StateVector,
    masks: &[usize],
    op: &DMatrix<Complex64>,
) -> (Vec<Complex64>, f64) {
    let amps = state.amplitudes();
    let m = masks.len();
    let sub_dim = 1usize << m;
    let sub: usize = masks.iter().sum();
    let mut scatter = vec![0usize; sub_dim];
    for (s, slot) in scatter.iter_mut().enumerate() {
        for (j, &mask) in masks.iter().enumerate() {
            if (s >> (m - 1 - j)) & 1 == 1 {
                *slot |= mask;
            }
        }
    }
    let mut out = vec![Complex64::ZERO; amps.len()];
    let mut weight = 0.0;
    let mut gathered = vec![Complex64::ZERO; sub_dim];
    for base in 0..amps.len() {
        if base & sub != 0 {
            continue;
        }
        for (s, slot) in gathered.iter_mut().enumerate() {
            *slot = amps[base | scatter[s]];
        }
        for r in 0..sub_dim {
            let mut image = Complex64::ZERO;
            for (s, g) in gathered.iter().enumerate() {
                image += op[(r, s)] * g;
            }
            out[base | scatter[r]] = image;
            weight += image.norm_sqr();
        }
    }
    (out, weight)
}

/// Projects onto the indices accepted by `keep` and renormalizes;
/// `None` when the branch probability is negligible.
fn collapse<F>(state: &StateVector, name: &'static str, keep: F) -> Option<MeasurementRecord>
where
    F: Fn(usize) -> bool,
{
    let amps = state.amplitudes();
    let probability: f64 = (0..amps.len())
        .filter(|&i| keep(i))
        .map(|i| amps[i].norm_sqr())
        .sum();
    if probability < NEGLIGIBLE_BRANCH {
        return None;
    }
    let inv = 1.0 / probability.sqrt();
    let post: Vec<Complex64> = amps
        .iter()
        .enumerate()
        .map(|(i, a)| if keep(i) { a * inv } else { Complex64::ZERO })
        .collect();
    Some(MeasurementRecord {
        outcome: name,
        probability,
        post_state: StateVector::from_parts(state.labels_arc(), post),
    })
}

/// Index of the branch whose cumulative probability interval contains
/// the draw. The intervals partition [0, 1) up to rounding; a draw past
/// the accumulated total lands in the last branch.
pub(crate) fn pick_index(branches: &[MeasurementRecord], draw: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&draw) {
        return Err(Error::BadUnitDraw(draw));
    }
    if branches.is_empty() {
        return Err(Error::NoBranches);
    }
    let mut cumulative = 0.0;
    for (k, branch) in branches.iter().enumerate() {
        cumulative += branch.probability;
        if draw < cumulative {
            return Ok(k);
        }
    }
    Ok(branches.len() - 1)
}

/// Consumes the branch list and returns the record selected by `draw`.
pub(crate) fn select_branch(
    mut branches: Vec<MeasurementRecord>,
    draw: f64,
) -> Result<MeasurementRecord> {
    let k = pick_index(&branches, draw)?;
    Ok(branches.swap_remove(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{make_pair_state, StateVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn pair(alpha_sq: f64) -> SchmidtPair {
        SchmidtPair::from_alpha_sq(alpha_sq).unwrap()
    }

    /// State after the filtering CNOT with a fresh |0> ancilla at the
    /// target side: alpha|00>|0> + beta|11>|1> over (a, b, anc).
    fn filtered_state(p: &SchmidtPair) -> StateVector {
        make_pair_state(p, ("a", "b"))
            .unwrap()
            .tensor(&StateVector::basis_state(&["anc"], 0).unwrap())
            .unwrap()
            .apply_cnot("b", "anc")
            .unwrap()
    }

    #[test]
    fn povm_rejects_non_hermitian_elements() {
        let mut e = DMatrix::<Complex64>::identity(2, 2);
        e[(0, 1)] = Complex64::new(0.0, 0.5);
        let result = Povm::new(vec![e], vec!["bad"]);
        assert!(matches!(
            result,
            Err(Error::BadPovmElement {
                property: "Hermitian",
                ..
            })
        ));
    }

    #[test]
    fn povm_rejects_negative_elements() {
        let mut neg = DMatrix::<Complex64>::zeros(2, 2);
        neg[(0, 0)] = re(1.5);
        neg[(1, 1)] = re(-0.5);
        let mut fill = DMatrix::<Complex64>::zeros(2, 2);
        fill[(0, 0)] = re(-0.5);
        fill[(1, 1)] = re(1.5);
        let result = Povm::new(vec![neg, fill], vec!["n", "f"]);
        assert!(matches!(
            result,
            Err(Error::BadPovmElement {
                property: "positive semidefinite",
                ..
            })
        ));
    }

    #[test]
    fn povm_rejects_incomplete_sets() {
        let half = DMatrix::<Complex64>::identity(2, 2) * Complex64::new(0.5, 0.0);
        let result = Povm::new(vec![half.clone()], vec!["h"]);
        assert!(matches!(result, Err(Error::PovmIncomplete(_))));
        let result = Povm::new(vec![half.clone(), half], vec!["a"]);
        assert!(matches!(result, Err(Error::PovmNameCount { .. })));
    }

    #[test]
    fn kraus_operators_square_back_to_the_elements() {
        for alpha_sq in [0.55, 0.75, 0.9] {
            for povm in [
                build_unambiguous_povm(&pair(alpha_sq)).unwrap(),
                build_residual_discrimination_povm(&pair(alpha_sq)).unwrap(),
            ] {
                for k in 0..povm.len() {
                    let back = povm.kraus(k).adjoint() * povm.kraus(k);
                    let dev = (&back - povm.element(k))
                        .iter()
                        .map(|z| z.norm())
                        .fold(0.0, f64::max);
                    assert!(dev < 1e-12, "element {k} at alpha_sq {alpha_sq}: {dev:e}");
                }
            }
        }
    }

    #[test]
    fn discrimination_povm_is_unambiguous() {
        let p = pair(0.8);
        let povm = build_unambiguous_povm(&p).unwrap();
        let quadratic = |e: &DMatrix<Complex64>, v: [Complex64; 2]| -> f64 {
            let mut total = Complex64::ZERO;
            for r in 0..2 {
                for c in 0..2 {
                    total += v[r].conj() * e[(r, c)] * v[c];
                }
            }
            total.re
        };
        let u_plus = [re(p.alpha()), re(p.beta())];
        let u_minus = [re(p.alpha()), re(-p.beta())];
        // wrong-state probabilities vanish identically
        assert!(quadratic(povm.element(0), u_minus).abs() < 1e-14);
        assert!(quadratic(povm.element(1), u_plus).abs() < 1e-14);
        // each conclusive element fires with 2 beta^2 on its own state
        assert!((quadratic(povm.element(0), u_plus) - 0.4).abs() < 1e-12);
        assert!((quadratic(povm.element(1), u_minus) - 0.4).abs() < 1e-12);
        assert!(build_unambiguous_povm(&pair(1.0)).is_err());
    }

    #[test]
    fn degenerate_conclusive_elements_drop_out_of_branches() {
        // alpha = beta: the inconclusive element is zero and only two
        // branches survive, each with probability 1/2
        let p = SchmidtPair::maximally_entangled();
        let state = filtered_state(&p);
        let povm = build_unambiguous_povm(&p).unwrap();
        let branches = povm_branches(&state, &["anc"], &povm).unwrap();
        assert_eq!(branches.len(), 2);
        for branch in &branches {
            assert!((branch.probability - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn z_branch_probabilities_match_direct_amplitude_sums() {
        let filter = StateVector::single_qubit("x", re(0.8944271909999159), re(0.4472135954999579))
            .unwrap();
        let joint = filter
            .tensor(&make_pair_state(&pair(0.75), ("a", "b")).unwrap())
            .unwrap()
            .apply_cnot("x", "a")
            .unwrap();
        // direct sums over amplitudes with the measured bit fixed
        let amps = joint.amplitudes();
        let mask = 0b010usize;
        let p0_direct: f64 = (0..8)
            .filter(|i| i & mask == 0)
            .map(|i| amps[i].norm_sqr())
            .sum();
        let branches = z_branches(&joint, "a").unwrap();
        assert_eq!(branches.len(), 2);
        assert_eq!(branches[0].outcome, "0");
        assert!((branches[0].probability - p0_direct).abs() < 1e-15);
        assert!((branches[0].probability + branches[1].probability - 1.0).abs() < 1e-12);
        let (_, minor) = branches[0].post_state.reduced_eigenvalues("a").unwrap();
        assert!(minor < 1e-15, "measured qubit must collapse");
    }

    #[test]
    fn parity_branches_split_even_and_odd_support() {
        let p = pair(0.75);
        let joint = make_pair_state(&p, ("a1", "a2"))
            .unwrap()
            .tensor(&make_pair_state(&p, ("a3", "b")).unwrap())
            .unwrap();
        let branches = parity_branches(&joint, ("a2", "a3")).unwrap();
        assert_eq!(branches.len(), 2);
        assert_eq!(branches[0].outcome, "even");
        assert!((branches[0].probability - 0.625).abs() < 1e-12);
        assert!((branches[1].probability - 0.375).abs() < 1e-12);
        // even branch holds only aligned components of (a2, a3)
        let even = &branches[0].post_state;
        for (i, amp) in even.amplitudes().iter().enumerate() {
            let aligned = ((i >> 2) & 1) == ((i >> 1) & 1);
            if !aligned {
                assert_eq!(*amp, Complex64::ZERO);
            }
        }
        assert!(parity_branches(&joint, ("a2", "a2")).is_err());
    }

    #[test]
    fn bell_branches_resolve_the_odd_bell_states() {
        let psi_plus = StateVector::new(
            &["a", "b"],
            vec![
                Complex64::ZERO,
                re(std::f64::consts::FRAC_1_SQRT_2),
                re(std::f64::consts::FRAC_1_SQRT_2),
                Complex64::ZERO,
            ],
        )
        .unwrap();
        let branches = bell_branches(&psi_plus, ("a", "b")).unwrap();
        assert_eq!(branches.len(), 1);
        assert_eq!(branches[0].outcome, "psi-plus");
        assert!((branches[0].probability - 1.0).abs() < 1e-12);
        assert!(branches[0].post_state.fidelity(&psi_plus).unwrap() > 1.0 - 1e-12);

        let tilted = StateVector::new(
            &["a", "b"],
            vec![Complex64::ZERO, re(0.8), re(-0.6), Complex64::ZERO],
        )
        .unwrap();
        let branches = bell_branches(&tilted, ("a", "b")).unwrap();
        assert_eq!(branches.len(), 2);
        assert!((branches[0].probability - 0.02).abs() < 1e-12);
        assert!((branches[1].probability - 0.98).abs() < 1e-12);

        let even = StateVector::basis_state(&["a", "b"], 0).unwrap();
        assert!(matches!(
            bell_branches(&even, ("a", "b")),
            Err(Error::NotOddParity(_))
        ));
    }

    #[test]
    fn discrimination_branches_on_the_filtered_state() {
        // joint state (Phi+ u+ + Phi- u-)/sqrt(2): conclusive branches
        // carry beta^2 each, the inconclusive one alpha^2 - beta^2
        let state = filtered_state(&pair(0.8));
        let povm = build_unambiguous_povm(&pair(0.8)).unwrap();
        let branches = povm_branches(&state, &["anc"], &povm).unwrap();
        assert_eq!(branches.len(), 3);
        assert_eq!(branches[0].outcome, "conclusive-plus");
        assert!((branches[0].probability - 0.2).abs() < 1e-12);
        assert!((branches[1].probability - 0.2).abs() < 1e-12);
        assert!((branches[2].probability - 0.6).abs() < 1e-12);
        // inconclusive collapse lands on |000>
        let vacuum = StateVector::basis_state(&["a", "b", "anc"], 0).unwrap();
        assert!(branches[2].post_state.fidelity(&vacuum).unwrap() > 1.0 - 1e-12);
        // wrong dimension is rejected
        assert!(matches!(
            povm_branches(&state, &["a", "anc"], &povm),
            Err(Error::OperatorDim { .. })
        ));
    }

    #[test]
    fn residual_discrimination_carries_the_squared_pair_statistics() {
        let p = pair(0.8);
        let joint = make_pair_state(&p, ("a1", "a2"))
            .unwrap()
            .tensor(&make_pair_state(&p, ("a3", "b")).unwrap())
            .unwrap();
        let even = parity_branches(&joint, ("a2", "a3"))
            .unwrap()
            .swap_remove(0);
        assert!((even.probability - 0.68).abs() < 1e-12);
        let povm = build_residual_discrimination_povm(&p).unwrap();
        let branches = povm_branches(&even.post_state, &["a2", "a3"], &povm).unwrap();
        assert_eq!(branches.len(), 3);
        // conditional probabilities 1/17, 1/17, 15/17
        assert!((branches[0].probability - 0.058823529411764705).abs() < 1e-12);
        assert!((branches[1].probability - 0.058823529411764705).abs() < 1e-12);
        assert!((branches[2].probability - 0.8823529411764706).abs() < 1e-12);
    }

    #[test]
    fn residual_conclusive_rate_confirmed_by_sampling() {
        let p = pair(0.8);
        let joint = make_pair_state(&p, ("a1", "a2"))
            .unwrap()
            .tensor(&make_pair_state(&p, ("a3", "b")).unwrap())
            .unwrap();
        let even = parity_branches(&joint, ("a2", "a3"))
            .unwrap()
            .swap_remove(0);
        let povm = build_residual_discrimination_povm(&p).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(0x5eed);
        let trials = 200_000u32;
        let mut conclusive = 0u32;
        for _ in 0..trials {
            let draw = rng.random::<f64>();
            let record = apply_povm(&even.post_state, &["a2", "a3"], &povm, draw).unwrap();
            if record.outcome != "inconclusive" {
                conclusive += 1;
            }
        }
        let expected = 2.0 / 17.0;
        let sigma = (expected * (1.0 - expected) / trials as f64).sqrt();
        let observed = conclusive as f64 / trials as f64;
        assert!(
            (observed - expected).abs() < 4.0 * sigma,
            "observed {observed}, expected {expected} +- {:.2e}",
            4.0 * sigma
        );
    }

    #[test]
    fn cumulative_selection_respects_interval_boundaries() {
        let state = filtered_state(&pair(0.8));
        let branches = z_branches(&state, "anc").unwrap();
        // probabilities (0.8, 0.2)
        assert_eq!(pick_index(&branches, 0.0).unwrap(), 0);
        assert_eq!(pick_index(&branches, 0.7999999).unwrap(), 0);
        assert_eq!(pick_index(&branches, 0.8000001).unwrap(), 1);
        assert_eq!(pick_index(&branches, 0.9999999999999999).unwrap(), 1);
        assert!(matches!(
            pick_index(&branches, 1.0),
            Err(Error::BadUnitDraw(_))
        ));
        assert!(matches!(
            pick_index(&branches, -0.1),
            Err(Error::BadUnitDraw(_))
        ));
        assert!(matches!(
            pick_index(&branches, f64::NAN),
            Err(Error::BadUnitDraw(_))
        ));
        assert!(matches!(pick_index(&[], 0.5), Err(Error::NoBranches)));
    }

    #[test]
    fn measured_branches_stay_normalized() {
        let state = filtered_state(&pair(0.55));
        for record in z_branches(&state, "anc").unwrap() {
            assert!((record.post_state.norm_sq() - 1.0).abs() < 1e-12);
        }
        let povm = build_unambiguous_povm(&pair(0.55)).unwrap();
        for record in povm_branches(&state, &["anc"], &povm).unwrap() {
            assert!((record.post_state.norm_sq() - 1.0).abs() < 1e-12);
        }
    }
}
