//! Analytic bounds on the log-negativity capacity: the operator-norm upper
//! bound, the basic-unitary closed form, the Choi lower bound and the values
//! for the `U_d` family.

use serde::Serialize;

use crate::channels::{choi_state, ChoiState, KrausChannel, KrausOperator};
use crate::error::{Error, Result};
use crate::linalg::{
    c, matrix_operator_norm, BipartiteOperator, CMatrix, LocalAction, Party, SubsystemLayout,
};
use crate::monotones::log_negativity;
use crate::schmidt::{
    check_basic, operator_schmidt, two_qubit_basic, BasicStatus, OperatorSchmidtDecomposition,
};

/// Tolerance for accepting a decomposition as basic.
pub const BASIC_TOL: f64 = 1e-8;

/// Schmidt data of one Kraus operator entering the upper bound.
#[derive(Clone, Debug, Serialize)]
pub struct KrausBound {
    pub coefficients: Vec<f64>,
    pub o_a_norm: f64,
    pub o_b_norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundCertificate {
    pub upper_thm2: f64,
    pub per_kraus: Vec<KrausBound>,
    pub choi_lower: f64,
    pub basic_closed_form: Option<f64>,
    pub source_channel: String,
}

fn kraus_bound(k: &BipartiteOperator) -> Result<KrausBound> {
    let d = operator_schmidt(k)?;
    Ok(KrausBound {
        o_a_norm: matrix_operator_norm(&d.o_a()),
        o_b_norm: matrix_operator_norm(&d.o_b()),
        coefficients: d.coefficients,
    })
}

/// `log₂ Σ_i ‖O_{A,i}‖_op ‖O_{B,i}‖_op` with `O_A = Σ λ A†A`,
/// `O_B = Σ λ B†B` per Kraus operator.
pub fn thm2_upper_bound(ch: &KrausChannel) -> Result<(f64, Vec<KrausBound>)> {
    let per_kraus = ch
        .kraus_ops()
        .iter()
        .map(kraus_bound)
        .collect::<Result<Vec<_>>>()?;
    let total: f64 = per_kraus.iter().map(|k| k.o_a_norm * k.o_b_norm).sum();
    Ok((total.log2(), per_kraus))
}

fn coefficient_formula(coeffs: &[f64], da: usize, db: usize) -> f64 {
    let s: f64 = coeffs.iter().sum();
    2.0 * (s / ((da * db) as f64).sqrt()).log2()
}

/// `2 log₂(Σ λ / √(d_a d_b))` for a basic decomposition.
pub fn basic_closed_form(d: &OperatorSchmidtDecomposition) -> Result<f64> {
    if check_basic(d, BASIC_TOL).status != BasicStatus::Basic {
        return Err(Error::NotBasic);
    }
    Ok(coefficient_formula(&d.coefficients, d.dim_a(), d.dim_b()))
}

/// `2 log₂(Σ λ / √(d_a d_b))`, the log-negativity of `K|Φ_A>|Φ_B>`.
pub fn choi_lower_bound(k: &KrausOperator) -> Result<f64> {
    let d = operator_schmidt(k.op())?;
    Ok(coefficient_formula(&d.coefficients, d.dim_a(), d.dim_b()))
}

/// A basic decomposition when one is found: the canonical form for two
/// qubits, otherwise the SVD decomposition if it passes the check.
pub fn basic_witness(u: &BipartiteOperator) -> Result<Option<OperatorSchmidtDecomposition>> {
    if !u.is_unitary(1e-10) {
        return Ok(None);
    }
    let l = u.layout();
    let two_qubits = l.dims() == vec![2, 2] && l.subsystems()[0].party == Party::A;
    if two_qubits {
        return Ok(Some(two_qubit_basic(u)?.1));
    }
    Ok(check_basic(&operator_schmidt(u)?, BASIC_TOL).witness)
}

/// Lower bound from the Choi state; for one Kraus operator this is the
/// coefficient formula, otherwise the log-negativity of the mixed Choi state.
pub fn channel_choi_lower(ch: &KrausChannel) -> Result<f64> {
    if ch.is_single_kraus() {
        return choi_lower_bound(&KrausOperator::new(ch.kraus_ops()[0].clone())?);
    }
    match choi_state(ch)? {
        ChoiState::Mixed { density, .. } => Ok(log_negativity(&density)?.value),
        ChoiState::Pure { state, .. } => Ok(crate::monotones::pure_log_negativity(&state)?.value),
    }
}

pub fn certificate(ch: &KrausChannel) -> Result<BoundCertificate> {
    let (upper_thm2, per_kraus) = thm2_upper_bound(ch)?;
    let choi_lower = channel_choi_lower(ch)?;
    let basic_closed_form = if ch.is_single_kraus() {
        basic_witness(&ch.kraus_ops()[0])?
            .map(|d| coefficient_formula(&d.coefficients, d.dim_a(), d.dim_b()))
    } else {
        None
    };
    Ok(BoundCertificate {
        upper_thm2,
        per_kraus,
        choi_lower,
        basic_closed_form,
        source_channel: ch.label().to_string(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CnotRow {
    pub d: usize,
    pub choi_lower: f64,
    pub exact_capacity: f64,
    pub thm2_upper: f64,
}

/// `2 log₂(√(1−1/d) + √(1/d))`.
pub fn cnot_choi_value(d: usize) -> f64 {
    let d = d as f64;
    2.0 * ((1.0 - 1.0 / d).sqrt() + (1.0 / d).sqrt()).log2()
}

/// `log₂(√(d−1) + 1)`.
pub fn cnot_upper_value(d: usize) -> f64 {
    ((d as f64 - 1.0).sqrt() + 1.0).log2()
}

/// Two Schmidt coefficients cap the capacity at `log₂ 2`, and the gate
/// reaches it.
pub const CNOT_EXACT_CAPACITY: f64 = 1.0;

pub fn cnot_family_table(ds: &[usize]) -> Result<Vec<CnotRow>> {
    ds.iter()
        .map(|&d| {
            if d < 2 {
                return Err(Error::InvalidParameter(format!("dimension {d} < 2")));
            }
            Ok(CnotRow {
                d,
                choi_lower: cnot_choi_value(d),
                exact_capacity: CNOT_EXACT_CAPACITY,
                thm2_upper: cnot_upper_value(d),
            })
        })
        .collect()
}

/// Gram matrix of the states `√d (A_k ⊗ 1)|Φ>` with
/// `|Φ> = Σ_j |jj>/√d`.
pub fn ancilla_gram(ops: &[CMatrix]) -> Result<CMatrix> {
    let d = ops.first().map_or(0, |o| o.nrows());
    if d == 0 || ops.iter().any(|o| o.shape() != (d, d)) {
        return Err(Error::InvalidParameter(
            "operators must share a square shape".into(),
        ));
    }
    let layout = SubsystemLayout::new([(d, Party::A), (d, Party::A)])?;
    let action = LocalAction::new(&layout, &[0])?;
    let mut phi = crate::linalg::CVector::zeros(d * d);
    for j in 0..d {
        phi[j * d + j] = c(1.0 / (d as f64).sqrt(), 0.0);
    }
    let states: Vec<_> = ops
        .iter()
        .map(|a| action.apply_vector(a, &phi) * c((d as f64).sqrt(), 0.0))
        .collect();
    Ok(CMatrix::from_fn(ops.len(), ops.len(), |i, j| {
        states[i].dotc(&states[j])
    }))
}

/// `d²` operators orthonormal under `tr(A†B)`, cut from the columns of a
/// Haar unitary.
pub fn random_orthonormal_operators(d: usize, rng: &mut crate::random::Rng) -> Vec<CMatrix> {
    let u = crate::random::haar_matrix(d * d, rng);
    (0..d * d)
        .map(|k| CMatrix::from_fn(d, d, |i, j| u[(i * d + j, k)]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{gate_family, haar_unitary, unitary_channel, GateFamily};
    use crate::linalg::max_abs;
    use crate::monotones::pure_log_negativity;
    use crate::random::rng;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn gate(f: GateFamily) -> BipartiteOperator {
        gate_family(&f).unwrap()
    }

    fn upper(u: &BipartiteOperator) -> f64 {
        thm2_upper_bound(&unitary_channel(u).unwrap()).unwrap().0
    }

    #[test]
    fn upper_bound_examples() {
        assert_abs_diff_eq!(upper(&gate(GateFamily::Swap(2))), 2.0, epsilon = 1e-10);
        let (_, per) =
            thm2_upper_bound(&unitary_channel(&gate(GateFamily::Swap(2))).unwrap()).unwrap();
        assert_abs_diff_eq!(per[0].o_a_norm, 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(per[0].o_b_norm, 2.0, epsilon = 1e-10);
        for d in 2..6 {
            assert_abs_diff_eq!(
                upper(&gate(GateFamily::CnotD(d))),
                cnot_upper_value(d),
                epsilon = 1e-10
            );
        }
        let id = BipartiteOperator::identity(SubsystemLayout::bipartite(3, 2).unwrap());
        assert_abs_diff_eq!(upper(&id), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn closed_form_examples() {
        for phi in [0.1, 0.5, std::f64::consts::FRAC_PI_4, 1.2] {
            let d = basic_witness(&gate(GateFamily::Phase(phi)))
                .unwrap()
                .unwrap();
            let want = 2.0 * (phi.cos().abs() + phi.sin().abs()).log2();
            assert_abs_diff_eq!(basic_closed_form(&d).unwrap(), want, epsilon = 1e-10);
        }
        let swap = basic_witness(&gate(GateFamily::Swap(2))).unwrap().unwrap();
        assert_abs_diff_eq!(basic_closed_form(&swap).unwrap(), 2.0, epsilon = 1e-10);
        let id = operator_schmidt(&BipartiteOperator::identity(
            SubsystemLayout::bipartite(2, 3).unwrap(),
        ))
        .unwrap();
        assert_abs_diff_eq!(basic_closed_form(&id).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn non_basic_is_rejected() {
        let mut r = rng(211);
        let layout = SubsystemLayout::bipartite(2, 2).unwrap();
        let k = BipartiteOperator::new(crate::random::random_matrix(4, &mut r), layout).unwrap();
        assert!(matches!(
            basic_closed_form(&operator_schmidt(&k).unwrap()),
            Err(Error::NotBasic)
        ));
    }

    #[test]
    fn choi_lower_examples() {
        for d in 2..6 {
            let k = KrausOperator::new(gate(GateFamily::CnotD(d))).unwrap();
            assert_abs_diff_eq!(
                choi_lower_bound(&k).unwrap(),
                cnot_choi_value(d),
                epsilon = 1e-10
            );
            let ChoiState::Pure { state, .. } =
                choi_state(&unitary_channel(k.op()).unwrap()).unwrap()
            else {
                panic!()
            };
            assert_abs_diff_eq!(
                pure_log_negativity(&state).unwrap().value,
                cnot_choi_value(d),
                epsilon = 1e-9
            );
        }
        let id = KrausOperator::new(BipartiteOperator::identity(
            SubsystemLayout::bipartite(2, 2).unwrap(),
        ))
        .unwrap();
        assert_abs_diff_eq!(choi_lower_bound(&id).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn two_qubit_bounds_collapse() {
        let layout = SubsystemLayout::bipartite(2, 2).unwrap();
        for seed in 0..20 {
            let u = haar_unitary(&layout, seed).unwrap();
            let cert = certificate(&unitary_channel(&u).unwrap()).unwrap();
            let basic = cert.basic_closed_form.expect("two-qubit gates are basic");
            assert!((cert.upper_thm2 - basic).abs() <= 1e-9, "{cert:?}");
            assert!((cert.choi_lower - basic).abs() <= 1e-9, "{cert:?}");
        }
    }

    #[test]
    fn certificate_ordering_on_random_channels() {
        let layout = SubsystemLayout::bipartite(2, 2).unwrap();
        for seed in 0..10 {
            let ch = crate::random::random_channel(&layout, 2, &mut rng(seed)).unwrap();
            let cert = certificate(&ch).unwrap();
            assert!(cert.upper_thm2 >= cert.choi_lower - 1e-9);
            assert!(cert.basic_closed_form.is_none());
        }
        let u = haar_unitary(&SubsystemLayout::bipartite(3, 3).unwrap(), 1).unwrap();
        let cert = certificate(&unitary_channel(&u).unwrap()).unwrap();
        assert!(cert.upper_thm2 >= cert.choi_lower - 1e-9);
    }

    #[test]
    fn cnot_table() {
        let t = cnot_family_table(&[2, 3, 50]).unwrap();
        assert_abs_diff_eq!(t[0].choi_lower, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t[0].thm2_upper, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            t[1].choi_lower,
            2.0 * ((2.0f64 / 3.0).sqrt() + (1.0f64 / 3.0).sqrt()).log2(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            t[1].thm2_upper,
            (2.0f64.sqrt() + 1.0).log2(),
            epsilon = 1e-12
        );
        assert!(t[2].choi_lower < t[1].choi_lower && t[2].choi_lower < 0.6);
        assert!(cnot_family_table(&[1]).is_err());
    }

    #[test]
    fn gram_identity_for_orthonormal_sets() {
        let mut r = rng(223);
        for d in [2, 3] {
            for _ in 0..50 {
                let ops = random_orthonormal_operators(d, &mut r);
                let g = ancilla_gram(&ops).unwrap();
                assert!(max_abs(&(g - CMatrix::identity(d * d, d * d))) <= 1e-10);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn ancillas_leave_the_upper_bound_unchanged(seed in any::<u64>(), anc_a in 1usize..3, anc_b in 1usize..3) {
            let ab = SubsystemLayout::bipartite(2, 2).unwrap();
            let ch = crate::random::random_channel(&ab, 2, &mut rng(seed)).unwrap();
            let (layout, targets) = crate::channels::with_ancillas(&ab, anc_a, anc_b).unwrap();
            let action = LocalAction::new(&layout, &targets).unwrap();
            let ops = ch
                .kraus_ops()
                .iter()
                .map(|k| BipartiteOperator::new(action.embed(k.matrix()), layout.clone()).unwrap())
                .collect();
            let wide = KrausChannel::new(ops, "embedded").unwrap();
            let narrow = thm2_upper_bound(&ch).unwrap().0;
            prop_assert!((thm2_upper_bound(&wide).unwrap().0 - narrow).abs() <= 1e-10);
        }
    }
}
