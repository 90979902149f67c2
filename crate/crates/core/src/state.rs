//! Dense state vectors over small registers of labeled qubits.
//!
//! Amplitudes are stored in computational-basis order with the first
//! label owning the most significant bit: for labels `["a", "b"]` the
//! index 2 = 0b10 addresses |1>_a |0>_b. Registers are capped at twelve
//! qubits, which keeps every state in this crate a few kilobytes and
//! makes exhaustive checks cheap.
//!
//! Partially entangled pairs are described throughout by their Schmidt
//! coefficients (alpha, beta), held canonically with beta <= alpha so
//! the ratio x = beta/alpha never exceeds one.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest register the dense representation will hold.
pub const MAX_QUBITS: usize = 12;

/// Absolute tolerance on |norm^2 - 1| for accepting a state.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Schmidt coefficients of a two-party pure state, kept in canonical
/// order beta <= alpha. Both coefficients are nonnegative and satisfy
/// alpha^2 + beta^2 = 1 to within [`NORM_TOLERANCE`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchmidtPair {
    alpha: f64,
    beta: f64,
}

impl SchmidtPair {
    /// Builds a pair, swapping the coefficients into canonical order if
    /// needed.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        Self::new_ordered(alpha, beta).map(|(pair, _)| pair)
    }

    /// Like [`SchmidtPair::new`], also reporting whether the inputs were
    /// swapped to restore beta <= alpha.
    pub fn new_ordered(alpha: f64, beta: f64) -> Result<(Self, bool)> {
        if !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::BadSchmidtPair {
                alpha,
                beta,
                reason: "coefficients must be finite",
            });
        }
        if alpha < 0.0 || beta < 0.0 {
            return Err(Error::BadSchmidtPair {
                alpha,
                beta,
                reason: "coefficients must be nonnegative",
            });
        }
        if (alpha * alpha + beta * beta - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::BadSchmidtPair {
                alpha,
                beta,
                reason: "alpha^2 + beta^2 must equal 1",
            });
        }
        let swapped = beta > alpha;
        let (hi, lo) = if swapped { (beta, alpha) } else { (alpha, beta) };
        Ok((Self { alpha: hi, beta: lo }, swapped))
    }

    /// Builds (sqrt(a2), sqrt(1 - a2)). Requires 0.5 <= a2 <= 1 so the
    /// result is canonical without swapping.
    pub fn from_alpha_sq(alpha_sq: f64) -> Result<Self> {
        if !(0.5..=1.0).contains(&alpha_sq) {
            return Err(Error::BadAlphaSq(alpha_sq));
        }
        Ok(Self {
            alpha: alpha_sq.sqrt(),
            beta: (1.0 - alpha_sq).sqrt(),
        })
    }

    pub fn maximally_entangled() -> Self {
        Self {
            alpha: std::f64::consts::FRAC_1_SQRT_2,
            beta: std::f64::consts::FRAC_1_SQRT_2,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn alpha_sq(&self) -> f64 {
        self.alpha * self.alpha
    }

    pub fn beta_sq(&self) -> f64 {
        self.beta * self.beta
    }

    /// Ratio x = beta/alpha, in [0, 1] for canonical pairs.
    pub fn ratio(&self) -> f64 {
        self.beta / self.alpha
    }

    /// True when the pair carries no entanglement at all.
    pub fn is_product(&self) -> bool {
        self.beta == 0.0
    }

    /// Entanglement of the pair: twice the smaller eigenvalue of either
    /// one-qubit marginal, so 2 beta^2. Ranges from 0 (product) to 1
    /// (maximally entangled).
    pub fn entanglement(&self) -> f64 {
        2.0 * self.beta * self.beta
    }

    /// The pair with coefficients proportional to (alpha^2, beta^2),
    /// which is what a failed filtering round leaves behind. Already
    /// canonical, and never more entangled than the input.
    pub fn squared(&self) -> SchmidtPair {
        let norm = (self.alpha_sq() * self.alpha_sq() + self.beta_sq() * self.beta_sq()).sqrt();
        SchmidtPair {
            alpha: self.alpha_sq() / norm,
            beta: self.beta_sq() / norm,
        }
    }
}

/// A pure state over a register of labeled qubits. Construction
/// validates label uniqueness, the register size, and normalization;
/// every operation returns a fresh state and leaves its input intact.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    labels: Arc<[String]>,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn new(labels: &[&str], amps: Vec<Complex64>) -> Result<Self> {
        let labels: Arc<[String]> = labels.iter().map(|l| l.to_string()).collect();
        Self::from_labeled(labels, amps)
    }

    pub(crate) fn from_labeled(labels: Arc<[String]>, amps: Vec<Complex64>) -> Result<Self> {
        let n = labels.len();
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::BadQubitCount(n));
        }
        for (i, label) in labels.iter().enumerate() {
            if labels[..i].contains(label) {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        let dim = 1usize << n;
        if amps.len() != dim {
            return Err(Error::AmplitudeCount {
                qubits: n,
                expected: dim,
                got: amps.len(),
            });
        }
        let mut norm_sq = 0.0;
        for (i, a) in amps.iter().enumerate() {
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(Error::NonFiniteAmplitude(i));
            }
            norm_sq += a.norm_sqr();
        }
        let deviation = (norm_sq - 1.0).abs();
        if deviation > NORM_TOLERANCE {
            return Err(Error::NotNormalized(deviation));
        }
        Ok(Self { labels, amps })
    }

    /// Internal constructor for states produced by unitary or collapse
    /// steps, which preserve the norm by construction.
    pub(crate) fn from_parts(labels: Arc<[String]>, amps: Vec<Complex64>) -> Self {
        debug_assert!(
            (amps.iter().map(|a| a.norm_sqr()).sum::<f64>() - 1.0).abs() < 1e-9,
            "internal state drifted off the unit sphere"
        );
        Self { labels, amps }
    }

    /// The computational basis state |index> over the given labels.
    pub fn basis_state(labels: &[&str], index: usize) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::BadQubitCount(0));
        }
        let dim = 1usize
            .checked_shl(labels.len() as u32)
            .ok_or(Error::BadQubitCount(labels.len()))?;
        if index >= dim {
            return Err(Error::BadArgument(format!(
                "basis index {index} out of range for {} qubits",
                labels.len()
            )));
        }
        let mut amps = vec![Complex64::ZERO; dim];
        amps[index] = Complex64::ONE;
        Self::new(labels, amps)
    }

    /// One qubit in the state a0|0> + a1|1>.
    pub fn single_qubit(label: &str, a0: Complex64, a1: Complex64) -> Result<Self> {
        Self::new(&[label], vec![a0, a1])
    }

    pub fn num_qubits(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub(crate) fn labels_arc(&self) -> Arc<[String]> {
        self.labels.clone()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Position of a label in the register, with position 0 owning the
    /// most significant bit of a basis index.
    pub fn position(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    fn mask_at(&self, position: usize) -> usize {
        1usize << (self.labels.len() - 1 - position)
    }

    /// Bit mask a label contributes to basis indices.
    pub(crate) fn label_mask(&self, label: &str) -> Result<usize> {
        Ok(self.mask_at(self.position(label)?))
    }

    /// Kronecker product, with `self`'s labels staying in the high bits.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let n = self.labels.len() + other.labels.len();
        if n > MAX_QUBITS {
            return Err(Error::BadQubitCount(n));
        }
        for label in other.labels.iter() {
            if self.labels.contains(label) {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        let labels: Arc<[String]> = self.labels.iter().chain(other.labels.iter()).cloned().collect();
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Ok(StateVector::from_parts(labels, amps))
    }

    /// CNOT by label: flips the target bit wherever the control bit is
    /// set. Self-inverse.
    pub fn apply_cnot(&self, control: &str, target: &str) -> Result<StateVector> {
        if control == target {
            return Err(Error::ControlEqualsTarget(control.to_string()));
        }
        let c = self.label_mask(control)?;
        let t = self.label_mask(target)?;
        let mut amps = self.amps.clone();
        for i in 0..amps.len() {
            if i & c != 0 && i & t == 0 {
                amps.swap(i, i | t);
            }
        }
        Ok(StateVector::from_parts(self.labels.clone(), amps))
    }

    /// The same state with its labels listed in `order`, which must be a
    /// permutation of the register.
    pub fn reorder(&self, order: &[&str]) -> Result<StateVector> {
        let n = self.labels.len();
        if order.len() != n {
            return Err(Error::LabelSetMismatch(
                order.iter().map(|s| s.to_string()).collect(),
            ));
        }
        let mut old_pos = Vec::with_capacity(n);
        let mut seen = [false; MAX_QUBITS];
        for label in order {
            let p = self.position(label)?;
            if seen[p] {
                return Err(Error::LabelSetMismatch(
                    order.iter().map(|s| s.to_string()).collect(),
                ));
            }
            seen[p] = true;
            old_pos.push(p);
        }
        if old_pos.iter().enumerate().all(|(q, &p)| q == p) {
            return Ok(self.clone());
        }
        let mut amps = vec![Complex64::ZERO; self.amps.len()];
        for (k, slot) in amps.iter_mut().enumerate() {
            let mut i = 0usize;
            for (q, &p) in old_pos.iter().enumerate() {
                let bit = (k >> (n - 1 - q)) & 1;
                i |= bit << (n - 1 - p);
            }
            *slot = self.amps[i];
        }
        let labels: Arc<[String]> = order.iter().map(|s| s.to_string()).collect();
        Ok(StateVector::from_parts(labels, amps))
    }

    /// |<self|other>|^2 for states over the same label set; the label
    /// order of `other` is aligned automatically.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        let aligned;
        let other = if self.labels == other.labels {
            other
        } else {
            let order: Vec<&str> = self.labels.iter().map(|s| s.as_str()).collect();
            aligned = other.reorder(&order)?;
            &aligned
        };
        let mut inner = Complex64::ZERO;
        for (a, b) in self.amps.iter().zip(&other.amps) {
            inner += a.conj() * b;
        }
        Ok(inner.norm_sqr().min(1.0))
    }

    /// Probability that the qubits named by `target` would be found in
    /// that state, i.e. the expectation of the projector |t><t| extended
    /// by identity on the rest of the register. Coincides with
    /// [`StateVector::fidelity`] when `target` covers the full register.
    pub fn subsystem_fidelity(&self, target: &StateVector) -> Result<f64> {
        let m = target.num_qubits();
        let mut masks = Vec::with_capacity(m);
        for label in target.labels.iter() {
            masks.push(self.label_mask(label)?);
        }
        let sub: usize = masks.iter().sum();
        let mut total = 0.0;
        for base in 0..self.amps.len() {
            if base & sub != 0 {
                continue;
            }
            let mut inner = Complex64::ZERO;
            for (s, t) in target.amps.iter().enumerate() {
                let mut idx = base;
                for (j, &mask) in masks.iter().enumerate() {
                    if (s >> (m - 1 - j)) & 1 == 1 {
                        idx |= mask;
                    }
                }
                inner += t.conj() * self.amps[idx];
            }
            total += inner.norm_sqr();
        }
        Ok(total.min(1.0))
    }

    /// Eigenvalues (major, minor) of the one-qubit reduced density
    /// matrix of `label`. They sum to one; minor is at most 1/2.
    pub fn reduced_eigenvalues(&self, label: &str) -> Result<(f64, f64)> {
        let mask = self.label_mask(label)?;
        let mut rho00 = 0.0;
        let mut rho11 = 0.0;
        let mut rho01 = Complex64::ZERO;
        for i in 0..self.amps.len() {
            if i & mask != 0 {
                continue;
            }
            let a0 = self.amps[i];
            let a1 = self.amps[i | mask];
            rho00 += a0.norm_sqr();
            rho11 += a1.norm_sqr();
            rho01 += a0 * a1.conj();
        }
        let det = (rho00 * rho11 - rho01.norm_sqr()).clamp(0.0, 0.25);
        let trace = rho00 + rho11;
        // (rho00 - rho11)^2 + 4|rho01|^2 equals trace^2 - 4 det but
        // stays accurate when the eigenvalues are nearly degenerate
        let gap = rho00 - rho11;
        let disc = (gap * gap + 4.0 * rho01.norm_sqr()).sqrt();
        let major = 0.5 * (trace + disc);
        // minor via det/major keeps precision when det is tiny
        let minor = if major > 0.0 { (det / major).max(0.0) } else { 0.5 * trace };
        Ok((major, minor))
    }

    /// Entanglement between `label` and the rest of the register: twice
    /// the smaller eigenvalue of its reduced density matrix.
    pub fn entanglement_across(&self, label: &str) -> Result<f64> {
        let (_, minor) = self.reduced_eigenvalues(label)?;
        Ok(2.0 * minor)
    }
}

/// alpha|00> + beta|11> over the two labels.
pub fn make_pair_state(pair: &SchmidtPair, labels: (&str, &str)) -> Result<StateVector> {
    make_cat_state(pair, &[labels.0, labels.1])
}

/// alpha|0...0> + beta|1...1> over the labels. Two parties give an
/// ordinary pair; the register cap bounds the party count above.
pub fn make_cat_state(pair: &SchmidtPair, labels: &[&str]) -> Result<StateVector> {
    if labels.len() < 2 {
        return Err(Error::BadArgument(format!(
            "a cat state needs at least two parties, got {}",
            labels.len()
        )));
    }
    if labels.len() > MAX_QUBITS {
        return Err(Error::BadQubitCount(labels.len()));
    }
    let dim = 1usize << labels.len();
    let mut amps = vec![Complex64::ZERO; dim];
    amps[0] = Complex64::new(pair.alpha(), 0.0);
    amps[dim - 1] = Complex64::new(pair.beta(), 0.0);
    StateVector::new(labels, amps)
}

/// Schmidt data of a two-qubit pure state: coefficients in decreasing
/// order and matching orthonormal one-qubit bases, so that the state is
/// sum_k lambda_k |left_k> |right_k>.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtReport {
    pub lambda_major: f64,
    pub lambda_minor: f64,
    pub left_basis: [[Complex64; 2]; 2],
    pub right_basis: [[Complex64; 2]; 2],
}

impl SchmidtReport {
    /// Entanglement carried by a pair with these coefficients: twice the
    /// smaller marginal eigenvalue, 2 lambda_minor^2.
    pub fn single_pair_entanglement(&self) -> f64 {
        2.0 * self.lambda_minor * self.lambda_minor
    }

    /// The coefficients as a canonical pair.
    pub fn as_pair(&self) -> Result<SchmidtPair> {
        SchmidtPair::new(self.lambda_major, self.lambda_minor)
    }

    /// Rebuilds sum_k lambda_k |left_k>|right_k> over the given labels.
    pub fn reconstruct(&self, labels: (&str, &str)) -> Result<StateVector> {
        let mut amps = vec![Complex64::ZERO; 4];
        for (k, lambda) in [self.lambda_major, self.lambda_minor].into_iter().enumerate() {
            for i in 0..2 {
                for j in 0..2 {
                    amps[2 * i + j] += lambda * self.left_basis[k][i] * self.right_basis[k][j];
                }
            }
        }
        StateVector::new(&[labels.0, labels.1], amps)
    }
}

/// Schmidt decomposition of a two-qubit state across (left, right).
///
/// Solved in closed form from the left marginal: its eigenvalues give
/// the squared coefficients, its eigenvectors the left basis, and the
/// right basis follows by contracting the state against the left one.
/// Phases are fixed so the dominant component of each left vector is
/// real and nonnegative.
pub fn schmidt_decompose_pair(state: &StateVector, pair: (&str, &str)) -> Result<SchmidtReport> {
    if state.num_qubits() != 2 {
        return Err(Error::BadArgument(format!(
            "Schmidt split needs a two-qubit state, register has {}",
            state.num_qubits()
        )));
    }
    let ordered = state.reorder(&[pair.0, pair.1])?;
    let m = [
        [ordered.amps[0], ordered.amps[1]],
        [ordered.amps[2], ordered.amps[3]],
    ];
    let a = m[0][0].norm_sqr() + m[0][1].norm_sqr();
    let c = m[1][0].norm_sqr() + m[1][1].norm_sqr();
    let b = m[0][0] * m[1][0].conj() + m[0][1] * m[1][1].conj();

    let det = (a * c - b.norm_sqr()).clamp(0.0, 0.25);
    let trace = a + c;
    let disc = (trace * trace - 4.0 * det).max(0.0).sqrt();
    let mu_major = 0.5 * (trace + disc);
    let mu_minor = if mu_major > 0.0 { (det / mu_major).max(0.0) } else { 0.0 };
    let lambdas = [mu_major.sqrt(), mu_minor.sqrt()];

    let u_major = hermitian_eigenvector(a, b, c, mu_major);
    let u_minor = [-u_major[1].conj(), u_major[0].conj()];
    let mut left = [u_major, u_minor];
    let mut right = [[Complex64::ZERO; 2]; 2];
    for k in 0..2 {
        let pick = usize::from(left[k][0].norm_sqr() < left[k][1].norm_sqr());
        let mag = left[k][pick].norm();
        if mag > 0.0 {
            let phase = (left[k][pick] / mag).conj();
            left[k][0] *= phase;
            left[k][1] *= phase;
        }
        if lambdas[k] > 1e-12 {
            for j in 0..2 {
                right[k][j] = (left[k][0].conj() * m[0][j] + left[k][1].conj() * m[1][j]) / lambdas[k];
            }
        }
    }
    if lambdas[1] <= 1e-12 {
        // degenerate direction: any unit vector orthogonal to the major
        // right vector completes the basis
        right[1] = [-right[0][1].conj(), right[0][0].conj()];
    }
    Ok(SchmidtReport {
        lambda_major: lambdas[0],
        lambda_minor: lambdas[1],
        left_basis: left,
        right_basis: right,
    })
}

/// Entanglement read off a Schmidt decomposition; see
/// [`SchmidtReport::single_pair_entanglement`].
pub fn single_pair_entanglement(report: &SchmidtReport) -> f64 {
    report.single_pair_entanglement()
}

/// Unit eigenvector of the Hermitian matrix [[a, b], [conj(b), c]] for
/// eigenvalue mu, using whichever row equation is better conditioned.
fn hermitian_eigenvector(a: f64, b: Complex64, c: f64, mu: f64) -> [Complex64; 2] {
    let v1 = [b, Complex64::new(mu - a, 0.0)];
    let v2 = [Complex64::new(mu - c, 0.0), b.conj()];
    let n1 = v1[0].norm_sqr() + v1[1].norm_sqr();
    let n2 = v2[0].norm_sqr() + v2[1].norm_sqr();
    let (v, n) = if n1 >= n2 { (v1, n1) } else { (v2, n2) };
    if n < 1e-28 {
        // the marginal is (numerically) diagonal
        return if a >= c {
            [Complex64::ONE, Complex64::ZERO]
        } else {
            [Complex64::ZERO, Complex64::ONE]
        };
    }
    let inv = 1.0 / n.sqrt();
    [v[0] * inv, v[1] * inv]
}
