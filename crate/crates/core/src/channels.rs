//! Kraus channels, named gate families, Haar sampling, reference states and
//! Choi states.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    c, max_abs, BipartiteOperator, CMatrix, CVector, LocalAction, Party, PureState,
    SubsystemLayout, C64,
};
use crate::random::{self, Rng};

/// Trace-preservation tolerance `‖Σ K†K − 1‖_max`.
pub const TP_TOL: f64 = 1e-10;
/// Unitarity tolerance for gates built in code.
pub const UNITARY_TOL: f64 = 1e-10;
/// Unitarity tolerance for gates read from files.
pub const GATE_FILE_UNITARY_TOL: f64 = 1e-8;

/// Pauli matrices: 0 → 1, 1 → X, 2 → Y, 3 → Z.
pub fn pauli(j: usize) -> CMatrix {
    let (o, z, i) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
    match j {
        0 => CMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        1 => CMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        2 => CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        3 => CMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        _ => panic!("pauli index {j} out of range"),
    }
}

/// `Λ(ρ) = Σ_i K_i ρ K_i†` on the target systems.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    kraus_ops: Vec<BipartiteOperator>,
    target_layout: SubsystemLayout,
    label: String,
}

impl KrausChannel {
    /// Checks that all operators share a layout and that `Σ K†K = 1` to
    /// [`TP_TOL`].
    pub fn new(kraus_ops: Vec<BipartiteOperator>, label: impl Into<String>) -> Result<Self> {
        let first = kraus_ops.first().ok_or_else(|| {
            Error::InvalidParameter("channel needs at least one Kraus operator".into())
        })?;
        let target_layout = first.layout().clone();
        if let Some(bad) = kraus_ops.iter().find(|k| k.layout() != &target_layout) {
            return Err(Error::Layout(format!(
                "Kraus operators disagree on layout: {:?} vs {:?}",
                target_layout.subsystems(),
                bad.layout().subsystems()
            )));
        }
        let channel = Self {
            kraus_ops,
            target_layout,
            label: label.into(),
        };
        let dev = channel.tp_deviation();
        if dev > TP_TOL {
            return Err(Error::NotTracePreserving(dev));
        }
        Ok(channel)
    }

    pub fn kraus_ops(&self) -> &[BipartiteOperator] {
        &self.kraus_ops
    }

    pub fn target_layout(&self) -> &SubsystemLayout {
        &self.target_layout
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.target_layout.total_dim()
    }

    pub fn is_single_kraus(&self) -> bool {
        self.kraus_ops.len() == 1
    }

    /// `‖Σ K†K − 1‖_max`.
    pub fn tp_deviation(&self) -> f64 {
        let n = self.dim();
        let sum = self.kraus_ops.iter().fold(CMatrix::zeros(n, n), |acc, k| {
            acc + k.matrix().adjoint() * k.matrix()
        });
        max_abs(&(sum - CMatrix::identity(n, n)))
    }

    /// Layout with one ancilla per party and the positions of the channel's
    /// own subsystems in it; see [`with_ancillas`].
    pub fn extended_layout(
        &self,
        anc_a: usize,
        anc_b: usize,
    ) -> Result<(SubsystemLayout, Vec<usize>)> {
        with_ancillas(&self.target_layout, anc_a, anc_b)
    }
}

/// Extends `target` with an ancilla of dimension `anc_a` on A and `anc_b` on
/// B. The result orders A's targets, A's ancilla, B's targets, B's ancilla;
/// for a two-subsystem target this is `(a, a', b, b')`. Also returns the
/// positions of the target subsystems in target order.
pub fn with_ancillas(
    target: &SubsystemLayout,
    anc_a: usize,
    anc_b: usize,
) -> Result<(SubsystemLayout, Vec<usize>)> {
    target.require_bipartite()?;
    let mut subs = Vec::new();
    let mut positions = vec![0; target.len()];
    for party in [Party::A, Party::B] {
        for (k, s) in target.subsystems().iter().enumerate() {
            if s.party == party {
                positions[k] = subs.len();
                subs.push((s.dim, party));
            }
        }
        subs.push((if party == Party::A { anc_a } else { anc_b }, party));
    }
    Ok((SubsystemLayout::new(subs)?, positions))
}

/// Single Kraus operator, possibly sub-normalized.
#[derive(Clone, Debug)]
pub struct KrausOperator {
    op: BipartiteOperator,
}

impl KrausOperator {
    /// Rejects operators with `‖K‖_op > 1 + 1e-10`.
    pub fn new(op: BipartiteOperator) -> Result<Self> {
        let norm = crate::linalg::operator_norm(&op);
        if norm > 1.0 + 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "Kraus operator has operator norm {norm:.6} > 1"
            )));
        }
        Ok(Self { op })
    }

    pub fn op(&self) -> &BipartiteOperator {
        &self.op
    }
}

/// Choi state of a channel on the `(a, a', b, b')` layout.
#[derive(Clone, Debug)]
pub enum ChoiState {
    Pure {
        state: PureState,
        source: String,
    },
    Mixed {
        density: BipartiteOperator,
        source: String,
    },
}

impl ChoiState {
    pub fn density(&self) -> BipartiteOperator {
        match self {
            Self::Pure { state, .. } => state.density(),
            Self::Mixed { density, .. } => density.clone(),
        }
    }

    pub fn source(&self) -> &str {
        match self {
            Self::Pure { source, .. } | Self::Mixed { source, .. } => source,
        }
    }
}

pub fn unitary_channel(u: &BipartiteOperator) -> Result<KrausChannel> {
    unitary_channel_labeled(u, "unitary")
}

pub fn unitary_channel_labeled(u: &BipartiteOperator, label: &str) -> Result<KrausChannel> {
    let dev = u.unitarity_deviation();
    if dev > UNITARY_TOL {
        return Err(Error::NotUnitary(dev));
    }
    KrausChannel::new(vec![u.clone()], label)
}

/// Applies the channel to the subsystems of `rho` at `targets` (listed in the
/// channel's subsystem order), acting as identity elsewhere.
pub fn apply(
    ch: &KrausChannel,
    rho: &BipartiteOperator,
    targets: &[usize],
) -> Result<BipartiteOperator> {
    let action = target_action(ch, rho.layout(), targets)?;
    let n = rho.dim();
    let out = ch.kraus_ops.iter().fold(CMatrix::zeros(n, n), |acc, k| {
        acc + action.conjugate(k.matrix(), rho.matrix())
    });
    BipartiteOperator::new(out, rho.layout().clone())
}

/// Validated [`LocalAction`] for the channel's operators inside `layout`.
pub fn target_action(
    ch: &KrausChannel,
    layout: &SubsystemLayout,
    targets: &[usize],
) -> Result<LocalAction> {
    if targets.len() != ch.target_layout.len() {
        return Err(Error::Layout(format!(
            "channel acts on {} subsystems, {} targets given",
            ch.target_layout.len(),
            targets.len()
        )));
    }
    for (want, &pos) in ch.target_layout.subsystems().iter().zip(targets) {
        let have = layout
            .subsystems()
            .get(pos)
            .ok_or_else(|| Error::Layout(format!("target position {pos} out of range")))?;
        if have != want {
            return Err(Error::Layout(format!(
                "target position {pos} holds {have:?}, channel expects {want:?}"
            )));
        }
    }
    LocalAction::new(layout, targets)
}

/// `|Φ_A>|Φ_B>` on `(a, a', b, b')`: the product of the local maximally
/// entangled states `Σ_j |jj>/√d_a` and `Σ_k |kk>/√d_b`.
pub fn max_entangled_pair(layout: &SubsystemLayout) -> Result<PureState> {
    let s = layout.subsystems();
    let shape_ok = s.len() == 4
        && s[0].party == Party::A
        && s[1].party == Party::A
        && s[2].party == Party::B
        && s[3].party == Party::B;
    if !shape_ok {
        return Err(Error::Layout("expected an (a, a', b, b') layout".into()));
    }
    let (da, db) = (s[0].dim, s[2].dim);
    if s[1].dim != da || s[3].dim != db {
        return Err(Error::Layout(format!(
            "ancilla dimensions {:?} do not mirror targets {:?}",
            (s[1].dim, s[3].dim),
            (da, db)
        )));
    }
    let amp = c(1.0 / ((da * db) as f64).sqrt(), 0.0);
    let mut v = CVector::zeros(layout.total_dim());
    for j in 0..da {
        for k in 0..db {
            v[((j * da + j) * db + k) * db + k] = amp;
        }
    }
    PureState::new(v, layout.clone())
}

/// `K|Φ_A>|Φ_B>` for a single operator on `(a, b)`, unnormalized.
pub fn choi_vector(k: &BipartiteOperator) -> Result<CVector> {
    let tl = k.layout();
    if tl.len() != 2 {
        return Err(Error::Layout(
            "Choi construction needs an (a, b) target".into(),
        ));
    }
    let (layout, targets) = with_ancillas(tl, tl.subsystems()[0].dim, tl.subsystems()[1].dim)?;
    let phi = max_entangled_pair(&layout)?;
    Ok(LocalAction::new(&layout, &targets)?.apply_vector(k.matrix(), phi.amplitudes()))
}

/// `(Λ ⊗ 1)(|Φ><Φ|)` with `|Φ> = |Φ_A>|Φ_B>`, on `(a, a', b, b')`.
pub fn choi_state(ch: &KrausChannel) -> Result<ChoiState> {
    let tl = ch.target_layout();
    if tl.len() != 2 {
        return Err(Error::Layout(
            "Choi construction needs an (a, b) target".into(),
        ));
    }
    let (layout, targets) = ch.extended_layout(tl.subsystems()[0].dim, tl.subsystems()[1].dim)?;
    let phi = max_entangled_pair(&layout)?;
    let source = ch.label().to_string();
    if ch.is_single_kraus() {
        let action = LocalAction::new(&layout, &targets)?;
        let v = action.apply_vector(ch.kraus_ops()[0].matrix(), phi.amplitudes());
        return Ok(ChoiState::Pure {
            state: PureState::new(v, layout)?,
            source,
        });
    }
    Ok(ChoiState::Mixed {
        density: apply(ch, &phi.density(), &targets)?,
        source,
    })
}

pub fn haar_unitary(layout: &SubsystemLayout, seed: u64) -> Result<BipartiteOperator> {
    haar_unitary_with(layout, &mut random::rng(seed))
}

/// Haar unitary from QR of a complex Ginibre matrix with the phases of `R`'s
/// diagonal moved into `Q`.
pub fn haar_unitary_with(layout: &SubsystemLayout, rng: &mut Rng) -> Result<BipartiteOperator> {
    if layout.total_dim() < 2 {
        return Err(Error::InvalidParameter(
            "Haar unitary needs dimension ≥ 2".into(),
        ));
    }
    BipartiteOperator::new(random::haar_matrix(layout.total_dim(), rng), layout.clone())
}

/// Named gate families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "param", rename_all = "snake_case")]
pub enum GateFamily {
    /// `exp(iφ Z⊗Z)` on two qubits.
    Phase(f64),
    /// `|jk> → |kj>` on two qudits of dimension `d`.
    Swap(usize),
    /// `U_d = (1 − |0><0|) ⊗ 1 + |0><0| ⊗ X_d`.
    CnotD(usize),
    /// `X_d = Σ_j |j⊕1><j|` on a single qudit (party A).
    PauliX(usize),
}

impl fmt::Display for GateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Phase(phi) => write!(f, "phase:{phi}"),
            Self::Swap(d) => write!(f, "swap:{d}"),
            Self::CnotD(d) => write!(f, "cnot_d:{d}"),
            Self::PauliX(d) => write!(f, "pauli_x:{d}"),
        }
    }
}

impl FromStr for GateFamily {
    type Err = Error;

    /// Parses `name:param`, e.g. `phase:0.785`, `cnot_d:3`, `swap:2`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, param) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidParameter(format!("expected name:param, got `{s}`")))?;
        let int = || {
            param
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidParameter(format!("`{param}` is not a dimension")))
        };
        match name.trim() {
            "phase" => param
                .trim()
                .parse::<f64>()
                .map(Self::Phase)
                .map_err(|_| Error::InvalidParameter(format!("`{param}` is not an angle"))),
            "swap" => int().map(Self::Swap),
            "cnot_d" => int().map(Self::CnotD),
            "pauli_x" => int().map(Self::PauliX),
            other => Err(Error::UnknownGate(other.to_string())),
        }
    }
}

fn require_dim(d: usize) -> Result<()> {
    if d < 2 {
        Err(Error::InvalidParameter(format!("dimension {d} < 2")))
    } else {
        Ok(())
    }
}

fn shift(d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| {
        if i == (j + 1) % d {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

/// Exact matrix of a named gate.
pub fn gate_family(family: &GateFamily) -> Result<BipartiteOperator> {
    match *family {
        GateFamily::Phase(phi) => {
            if !phi.is_finite() {
                return Err(Error::InvalidParameter(format!("phase angle {phi}")));
            }
            let (p, m) = (C64::from_polar(1.0, phi), C64::from_polar(1.0, -phi));
            let diag = CVector::from_vec(vec![p, m, m, p]);
            BipartiteOperator::new(
                CMatrix::from_diagonal(&diag),
                SubsystemLayout::bipartite(2, 2)?,
            )
        }
        GateFamily::Swap(d) => {
            require_dim(d)?;
            let n = d * d;
            let m = CMatrix::from_fn(n, n, |i, j| {
                let (ja, jb) = (j / d, j % d);
                if i == jb * d + ja {
                    c(1.0, 0.0)
                } else {
                    c(0.0, 0.0)
                }
            });
            BipartiteOperator::new(m, SubsystemLayout::bipartite(d, d)?)
        }
        GateFamily::CnotD(d) => {
            require_dim(d)?;
            let mut p0 = CMatrix::zeros(d, d);
            p0[(0, 0)] = c(1.0, 0.0);
            let id = CMatrix::identity(d, d);
            let m = (&id - &p0).kronecker(&id) + p0.kronecker(&shift(d));
            BipartiteOperator::new(m, SubsystemLayout::bipartite(d, d)?)
        }
        GateFamily::PauliX(d) => {
            require_dim(d)?;
            BipartiteOperator::new(shift(d), SubsystemLayout::single(d, Party::A)?)
        }
    }
}

/// Measure-and-prepare channel
/// `σ ↦ <00|σ|00> ρ₁ + (1 − <00|σ|00>) 1/d` on the layout of `rho1`,
/// where `|00>` is the first computational basis state and `d` the total
/// dimension.
///
/// Kraus set: `√p_m |e_m><00|` for the eigenpairs of `ρ₁`, and
/// `|i><j|/√d` for every `i` and every basis state `j ≠ |00>`.
pub fn lambda1_channel(rho1: &BipartiteOperator) -> Result<KrausChannel> {
    if !rho1.is_density(1e-10) {
        return Err(Error::NotDensity(format!(
            "ρ₁ must be a density matrix (trace {:.3e}, min eigenvalue {:.3e})",
            rho1.trace().re,
            rho1.min_eigenvalue()
        )));
    }
    let layout = rho1.layout().clone();
    let d = layout.total_dim();
    let eig = rho1.matrix().clone().symmetric_eigen();
    let mut ops = Vec::new();
    for (m, &p) in eig.eigenvalues.iter().enumerate() {
        if p <= 1e-15 {
            continue;
        }
        let e = eig.eigenvectors.column(m);
        let mut k = CMatrix::zeros(d, d);
        for i in 0..d {
            k[(i, 0)] = e[i] * p.sqrt();
        }
        ops.push(BipartiteOperator::new(k, layout.clone())?);
    }
    let w = c(1.0 / (d as f64).sqrt(), 0.0);
    for j in 1..d {
        for i in 0..d {
            let mut k = CMatrix::zeros(d, d);
            k[(i, j)] = w;
            ops.push(BipartiteOperator::new(k, layout.clone())?);
        }
    }
    // eigenvalues of ρ₁ may sum to 1 ± O(1e-15) after clipping
    KrausChannel::new(ops, "lambda1")
}

/// On-disk gate description.
///
/// ```json
/// {"dims": [[2, "A"], [2, "B"]], "matrix": [[[1, 0], [0, 0], ...], ...], "unitary": true}
/// ```
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GateFile {
    pub dims: Vec<(usize, Party)>,
    pub matrix: Vec<Vec<[f64; 2]>>,
    #[serde(default)]
    pub unitary: bool,
}

impl GateFile {
    pub fn from_operator(op: &BipartiteOperator, unitary: bool) -> Self {
        let m = op.matrix();
        Self {
            dims: op
                .layout()
                .subsystems()
                .iter()
                .map(|s| (s.dim, s.party))
                .collect(),
            matrix: (0..m.nrows())
                .map(|i| {
                    (0..m.ncols())
                        .map(|j| [m[(i, j)].re, m[(i, j)].im])
                        .collect()
                })
                .collect(),
            unitary,
        }
    }

    pub fn to_operator(&self) -> Result<BipartiteOperator> {
        let layout = SubsystemLayout::new(self.dims.iter().copied())?;
        let n = self.matrix.len();
        if let Some(row) = self.matrix.iter().find(|r| r.len() != n) {
            return Err(Error::GateFile(format!(
                "row of length {} in {n}x{n} matrix",
                row.len()
            )));
        }
        let m = CMatrix::from_fn(n, n, |i, j| {
            let [re, im] = self.matrix[i][j];
            c(re, im)
        });
        let op = BipartiteOperator::new(m, layout)?;
        if self.unitary {
            let dev = op.unitarity_deviation();
            if dev > GATE_FILE_UNITARY_TOL {
                return Err(Error::NotUnitary(dev));
            }
        }
        Ok(op)
    }
}

/// Parses a gate file, enforcing unitarity to 1e-8 when it declares
/// `"unitary": true`.
pub fn parse_gate_json(text: &str) -> Result<BipartiteOperator> {
    let gate: GateFile = serde_json::from_str(text).map_err(|e| Error::GateFile(e.to_string()))?;
    gate.to_operator()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{partial_trace, partial_transpose, trace_norm};
    use crate::random::{random_density, random_state, rng};
    use approx::assert_abs_diff_eq;

    fn ab() -> SubsystemLayout {
        SubsystemLayout::bipartite(2, 2).unwrap()
    }

    #[test]
    fn unitary_channels() {
        let id = unitary_channel(&BipartiteOperator::identity(ab())).unwrap();
        assert_eq!(id.kraus_ops().len(), 1);
        assert_eq!(id.kraus_ops()[0].matrix(), &CMatrix::identity(4, 4));
        let swap = unitary_channel(&gate_family(&GateFamily::Swap(2)).unwrap()).unwrap();
        assert!(swap.tp_deviation() < 1e-15);
        let u = haar_unitary(&SubsystemLayout::bipartite(3, 3).unwrap(), 5).unwrap();
        assert!(unitary_channel(&u).unwrap().tp_deviation() < TP_TOL);
        let bad = BipartiteOperator::new(CMatrix::identity(4, 4) * c(2.0, 0.0), ab()).unwrap();
        assert!(matches!(unitary_channel(&bad), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn channel_rejects_non_trace_preserving_sets() {
        let half = BipartiteOperator::new(CMatrix::identity(4, 4) * c(0.5, 0.0), ab()).unwrap();
        assert!(matches!(
            KrausChannel::new(vec![half], "x"),
            Err(Error::NotTracePreserving(_))
        ));
        assert!(KrausChannel::new(vec![], "x").is_err());
    }

    #[test]
    fn apply_identity_and_unitary() {
        let mut r = rng(61);
        let (layout, targets) = with_ancillas(&ab(), 2, 2).unwrap();
        assert_eq!(targets, vec![0, 2]);
        let rho = random_density(&layout, &mut r);
        let id = unitary_channel(&BipartiteOperator::identity(ab())).unwrap();
        assert!(apply(&id, &rho, &targets).unwrap().max_abs_diff(&rho) < 1e-14);

        let u = haar_unitary(&ab(), 3).unwrap();
        let psi = random_state(&ab(), &mut r);
        let out = apply(&unitary_channel(&u).unwrap(), &psi.density(), &[0, 1]).unwrap();
        let want = u.matrix() * psi.density().matrix() * u.matrix().adjoint();
        assert!(max_abs(&(out.matrix() - want)) < 1e-14);
        assert!(apply(&id, &rho, &[0, 1]).is_err());
        assert!(apply(&id, &rho, &[0]).is_err());
    }

    #[test]
    fn apply_preserves_trace_and_positivity() {
        let mut r = rng(67);
        let (layout, targets) = with_ancillas(&ab(), 2, 2).unwrap();
        for seed in 0..10 {
            let ch = random_channel(&ab(), 3, seed);
            let rho = random_density(&layout, &mut r);
            let out = apply(&ch, &rho, &targets).unwrap();
            assert!((out.trace() - rho.trace()).norm() < 1e-10);
            assert!(out.min_eigenvalue() >= -1e-9);
        }
    }

    #[test]
    fn reference_pair_amplitudes() {
        let layout = SubsystemLayout::with_ancillas(2, 2, 2, 2).unwrap();
        let phi = max_entangled_pair(&layout).unwrap();
        for idx in 0..16 {
            let (a, ap, b, bp) = (idx >> 3 & 1, idx >> 2 & 1, idx >> 1 & 1, idx & 1);
            let want = if a == ap && b == bp { 0.5 } else { 0.0 };
            assert_abs_diff_eq!(phi.amplitudes()[idx].re, want, epsilon = 1e-15);
        }
        // reduced state on (a, a') is the pure maximally entangled pair
        let red = partial_trace(&phi.density(), &[0, 1]).unwrap();
        let purity = (red.matrix() * red.matrix()).trace().re;
        assert_abs_diff_eq!(purity, 1.0, epsilon = 1e-12);
        let rr = partial_trace(&red, &[0]).unwrap();
        assert!(max_abs(&(rr.matrix() - CMatrix::identity(2, 2) * c(0.5, 0.0))) < 1e-12);
        assert!(max_entangled_pair(&SubsystemLayout::with_ancillas(2, 3, 2, 2).unwrap()).is_err());
    }

    #[test]
    fn reference_pair_is_ppt_across_the_cut() {
        for (da, db) in [(2, 2), (2, 3), (3, 2), (3, 3)] {
            let layout = SubsystemLayout::with_ancillas(da, da, db, db).unwrap();
            let phi = max_entangled_pair(&layout).unwrap();
            let tn = trace_norm(&partial_transpose(&phi.density()).unwrap());
            assert!(tn.log2().abs() <= 1e-10);
        }
    }

    #[test]
    fn choi_state_of_identity_is_reference_pair() {
        let id = unitary_channel(&BipartiteOperator::identity(ab())).unwrap();
        let ChoiState::Pure { state, .. } = choi_state(&id).unwrap() else {
            panic!("single Kraus gives a pure Choi state");
        };
        let phi = max_entangled_pair(state.layout()).unwrap();
        assert_abs_diff_eq!(state.overlap(&phi), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn mixed_choi_state_is_a_density() {
        let ch = random_channel(&ab(), 2, 71);
        let choi = choi_state(&ch).unwrap();
        assert!(matches!(choi, ChoiState::Mixed { .. }));
        assert!(choi.density().is_density(1e-10));
    }

    #[test]
    fn haar_samples_are_unitary_and_reproducible() {
        let layout = SubsystemLayout::bipartite(3, 3).unwrap();
        let mut r = rng(73);
        for _ in 0..100 {
            let u = haar_unitary_with(&layout, &mut r).unwrap();
            assert!(u.unitarity_deviation() <= 1e-12);
            for col in u.matrix().column_iter() {
                assert_abs_diff_eq!(col.norm(), 1.0, epsilon = 1e-12);
            }
        }
        assert_eq!(
            haar_unitary(&layout, 9).unwrap(),
            haar_unitary(&layout, 9).unwrap()
        );
        assert_ne!(
            haar_unitary(&layout, 9).unwrap(),
            haar_unitary(&layout, 10).unwrap()
        );
    }

    #[test]
    fn haar_second_moment() {
        // E|tr U|² = 1 for Haar U in any dimension
        let layout = SubsystemLayout::bipartite(3, 3).unwrap();
        let mut r = rng(79);
        let xs: Vec<f64> = (0..500)
            .map(|_| {
                haar_unitary_with(&layout, &mut r)
                    .unwrap()
                    .trace()
                    .norm_sqr()
            })
            .collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        let se = (var / xs.len() as f64).sqrt();
        assert!((mean - 1.0).abs() <= 3.0 * se, "mean {mean}, se {se}");
    }

    #[test]
    fn gate_families() {
        assert_eq!(
            gate_family(&GateFamily::Phase(0.0)).unwrap().matrix(),
            &CMatrix::identity(4, 4)
        );
        let x3 = gate_family(&GateFamily::PauliX(3)).unwrap();
        for j in 0..3 {
            assert_eq!(x3.matrix()[((j + 1) % 3, j)], c(1.0, 0.0));
        }
        // U_2 controls on |0>; it is CNOT conjugated by X on the control
        let cnot = CMatrix::from_fn(4, 4, |i, j| {
            let to = if j >= 2 { j ^ 1 } else { j };
            if i == to {
                c(1.0, 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let xi = pauli(1).kronecker(&pauli(0));
        let u2 = gate_family(&GateFamily::CnotD(2)).unwrap();
        assert!(max_abs(&(u2.matrix() - &xi * cnot * &xi)) < 1e-15);
        for d in 2..6 {
            assert!(gate_family(&GateFamily::CnotD(d))
                .unwrap()
                .is_unitary(1e-14));
            assert!(gate_family(&GateFamily::Swap(d)).unwrap().is_unitary(1e-14));
        }
        assert!(gate_family(&GateFamily::CnotD(1)).is_err());
        assert!(gate_family(&GateFamily::Phase(f64::NAN)).is_err());
        assert!(matches!(
            "toffoli:3".parse::<GateFamily>(),
            Err(Error::UnknownGate(_))
        ));
        assert_eq!(
            "cnot_d:4".parse::<GateFamily>().unwrap(),
            GateFamily::CnotD(4)
        );
        assert!("swap:x".parse::<GateFamily>().is_err());
    }

    #[test]
    fn lambda1_examples() {
        let mut r = rng(83);
        let rho1 = random_density(&ab(), &mut r);
        let ch = lambda1_channel(&rho1).unwrap();
        assert!(ch.tp_deviation() <= 1e-10);
        let zero = PureState::basis(ab(), 0).unwrap().density();
        let out = apply(&ch, &zero, &[0, 1]).unwrap();
        assert!(out.max_abs_diff(&rho1) < 1e-12);
        let ones = PureState::basis(ab(), 3).unwrap().density();
        let out = apply(&ch, &ones, &[0, 1]).unwrap();
        assert!(max_abs(&(out.matrix() - CMatrix::identity(4, 4) * c(0.25, 0.0))) < 1e-14);
        let not_density = BipartiteOperator::identity(ab());
        assert!(matches!(
            lambda1_channel(&not_density),
            Err(Error::NotDensity(_))
        ));
    }

    #[test]
    fn gate_file_round_trip_and_rejection() {
        let swap = gate_family(&GateFamily::Swap(2)).unwrap();
        let text = serde_json::to_string(&GateFile::from_operator(&swap, true)).unwrap();
        assert!(text.contains("\"A\""));
        assert_eq!(parse_gate_json(&text).unwrap(), swap);
        let mut bad = GateFile::from_operator(&swap, true);
        bad.matrix[0][0] = [0.5, 0.0];
        assert!(matches!(
            parse_gate_json(&serde_json::to_string(&bad).unwrap()),
            Err(Error::NotUnitary(_))
        ));
        bad.unitary = false;
        assert!(parse_gate_json(&serde_json::to_string(&bad).unwrap()).is_ok());
        assert!(matches!(
            parse_gate_json("{not json"),
            Err(Error::GateFile(_))
        ));
    }

    /// Random channel with `rank` Kraus operators from a Haar isometry.
    pub(crate) fn random_channel(layout: &SubsystemLayout, rank: usize, seed: u64) -> KrausChannel {
        crate::random::random_channel(layout, rank, &mut rng(seed)).unwrap()
    }
}
