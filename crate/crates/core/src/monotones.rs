//! Negativity, log-negativity and pure-state von Neumann entropy.

use serde::Serialize;

use crate::channels::{apply, KrausChannel};
use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_trace_norm, trace_norm, BipartiteOperator, PartialTranspose, PureState, HERMITIAN_TOL,
};
use crate::schmidt::pure_schmidt;

/// Allowed deviation of the trace from one.
pub const TRACE_TOL: f64 = 1e-8;
/// Trace norms within `CLAMP_TOL` of 1 report exactly zero entanglement.
pub const CLAMP_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Kind {
    Negativity,
    LogNegativity,
    VonNeumann,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EntanglementValue {
    pub value: f64,
    pub kind: Kind,
}

impl EntanglementValue {
    fn new(value: f64, kind: Kind) -> Self {
        Self { value, kind }
    }
}

/// Monotone selector for [`entanglement_delta`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Monotone {
    Negativity,
    LogNegativity,
}

/// `‖ρ^Γ‖₁` after the unit-trace check. Positivity is not required.
pub fn partial_transpose_norm(rho: &BipartiteOperator) -> Result<f64> {
    rho.layout().require_bipartite()?;
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
        return Err(Error::NotUnitTrace(tr.re));
    }
    let pt = PartialTranspose::new(rho.layout())?.apply(rho.matrix());
    if rho.is_hermitian(HERMITIAN_TOL) {
        Ok(hermitian_trace_norm(&pt))
    } else {
        Ok(trace_norm(&BipartiteOperator::new(
            pt,
            rho.layout().clone(),
        )?))
    }
}

pub(crate) fn clamp(norm: f64) -> f64 {
    if (norm - 1.0).abs() <= CLAMP_TOL {
        1.0
    } else {
        norm
    }
}

/// `(‖ρ^Γ‖₁ − 1)/2`.
pub fn negativity(rho: &BipartiteOperator) -> Result<EntanglementValue> {
    let n = clamp(partial_transpose_norm(rho)?);
    Ok(EntanglementValue::new((n - 1.0) / 2.0, Kind::Negativity))
}

/// `log₂‖ρ^Γ‖₁`.
pub fn log_negativity(rho: &BipartiteOperator) -> Result<EntanglementValue> {
    let n = clamp(partial_transpose_norm(rho)?);
    Ok(EntanglementValue::new(n.log2(), Kind::LogNegativity))
}

/// `2 log₂ Σ s_i` from the Schmidt coefficients.
pub fn pure_log_negativity(psi: &PureState) -> Result<EntanglementValue> {
    let s: f64 = pure_schmidt(psi)?.iter().sum();
    Ok(EntanglementValue::new(
        (2.0 * s.log2()).max(0.0),
        Kind::LogNegativity,
    ))
}

/// Entropy of entanglement `−Σ s² log₂ s²`.
pub fn von_neumann(psi: &PureState) -> Result<EntanglementValue> {
    let h = pure_schmidt(psi)?
        .iter()
        .map(|s| s * s)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum::<f64>();
    Ok(EntanglementValue::new(h.max(0.0), Kind::VonNeumann))
}

pub fn evaluate(monotone: Monotone, rho: &BipartiteOperator) -> Result<f64> {
    Ok(match monotone {
        Monotone::Negativity => negativity(rho)?.value,
        Monotone::LogNegativity => log_negativity(rho)?.value,
    })
}

/// `E(Λ(ψψ†)) − E(ψψ†)` with the channel acting on `targets`.
pub fn entanglement_delta(
    ch: &KrausChannel,
    psi: &PureState,
    targets: &[usize],
    monotone: Monotone,
) -> Result<f64> {
    let rho = psi.density();
    let out = apply(ch, &rho, targets)?;
    Ok(evaluate(monotone, &out)? - evaluate(monotone, &rho)?)
}

/// Robustness of entanglement needs an optimization over separable states.
pub fn robustness(_rho: &BipartiteOperator) -> Result<EntanglementValue> {
    Err(Error::Unsupported("robustness of entanglement"))
}

/// Decomposition-based monotone over PPT states.
pub fn bound_entanglement_monotone(_rho: &BipartiteOperator) -> Result<EntanglementValue> {
    Err(Error::Unsupported(
        "the bound-entangled decomposition monotone",
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{gate_family, max_entangled_pair, unitary_channel, GateFamily};
    use crate::linalg::{c, tensor_product, CMatrix, CVector, SubsystemLayout};
    use crate::random::{haar_matrix, random_density, random_hermitian, random_state, rng};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn bell() -> PureState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = CVector::from_vec(vec![c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)]);
        PureState::new(v, SubsystemLayout::bipartite(2, 2).unwrap()).unwrap()
    }

    #[test]
    fn bell_state_values() {
        let rho = bell().density();
        assert_abs_diff_eq!(negativity(&rho).unwrap().value, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(log_negativity(&rho).unwrap().value, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            pure_log_negativity(&bell()).unwrap().value,
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(von_neumann(&bell()).unwrap().value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn product_states_are_zero() {
        let mut r = rng(101);
        let la = SubsystemLayout::single(3, crate::linalg::Party::A).unwrap();
        let lb = SubsystemLayout::single(2, crate::linalg::Party::B).unwrap();
        let rho = tensor_product(&random_density(&la, &mut r), &random_density(&lb, &mut r));
        assert_eq!(negativity(&rho).unwrap().value, 0.0);
        assert_eq!(log_negativity(&rho).unwrap().value, 0.0);
        let psi = random_state(&la, &mut r).product(&random_state(&lb, &mut r));
        assert_abs_diff_eq!(
            pure_log_negativity(&psi).unwrap().value,
            0.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(von_neumann(&psi).unwrap().value, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn non_unit_trace_is_rejected() {
        let rho = bell().density().scale(c(2.0, 0.0));
        assert!(matches!(negativity(&rho), Err(Error::NotUnitTrace(_))));
    }

    #[test]
    fn reference_pair_has_zero_log_negativity() {
        let layout = SubsystemLayout::with_ancillas(2, 2, 2, 2).unwrap();
        let phi = max_entangled_pair(&layout).unwrap();
        assert_eq!(log_negativity(&phi.density()).unwrap().value, 0.0);
    }

    #[test]
    fn choi_log_negativities() {
        let swap = unitary_channel(&gate_family(&GateFamily::Swap(2)).unwrap()).unwrap();
        let choi = crate::channels::choi_state(&swap).unwrap().density();
        assert_abs_diff_eq!(log_negativity(&choi).unwrap().value, 2.0, epsilon = 1e-10);

        let cnot3 = unitary_channel(&gate_family(&GateFamily::CnotD(3)).unwrap()).unwrap();
        let choi = crate::channels::choi_state(&cnot3).unwrap().density();
        let s = (2.0f64 / 3.0).sqrt() + (1.0f64 / 3.0).sqrt();
        assert_abs_diff_eq!(
            negativity(&choi).unwrap().value,
            (s * s - 1.0) / 2.0,
            epsilon = 1e-10
        );
        assert_abs_diff_eq!(
            log_negativity(&choi).unwrap().value,
            2.0 * s.log2(),
            epsilon = 1e-10
        );
    }

    #[test]
    fn pure_formula_matches_dense_on_nine_by_nine_cut() {
        let layout = SubsystemLayout::with_ancillas(3, 3, 3, 3).unwrap();
        let mut r = rng(103);
        for _ in 0..5 {
            let psi = random_state(&layout, &mut r);
            let dense = log_negativity(&psi.density()).unwrap().value;
            assert_abs_diff_eq!(
                pure_log_negativity(&psi).unwrap().value,
                dense,
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn von_neumann_of_unequal_pair() {
        let (p, q) = ((1.0f64 / 3.0).sqrt(), (2.0f64 / 3.0).sqrt());
        let v = CVector::from_vec(vec![c(p, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(q, 0.0)]);
        let psi = PureState::new(v, SubsystemLayout::bipartite(2, 2).unwrap()).unwrap();
        let want = -(1.0 / 3.0) * (1.0f64 / 3.0).log2() - (2.0 / 3.0) * (2.0f64 / 3.0).log2();
        assert_abs_diff_eq!(von_neumann(&psi).unwrap().value, want, epsilon = 1e-12);
        assert_abs_diff_eq!(want, 0.9183, epsilon = 1e-4);
    }

    #[test]
    fn deltas() {
        let ab = SubsystemLayout::bipartite(2, 2).unwrap();
        let id = unitary_channel(&BipartiteOperator::identity(ab.clone())).unwrap();
        let mut r = rng(107);
        let psi = random_state(&ab, &mut r);
        let d = entanglement_delta(&id, &psi, &[0, 1], Monotone::LogNegativity).unwrap();
        assert_abs_diff_eq!(d, 0.0, epsilon = 1e-12);

        // Bell pairs (a, b') and (b, a'): swapping a and b makes both local
        let layout = SubsystemLayout::with_ancillas(2, 2, 2, 2).unwrap();
        let mut v = CVector::zeros(16);
        for x in 0..2 {
            for y in 0..2 {
                // a = x, b' = x, b = y, a' = y
                v[(x << 3) | (y << 2) | (y << 1) | x] = c(0.5, 0.0);
            }
        }
        let psi = PureState::new(v, layout).unwrap();
        let swap = unitary_channel(&gate_family(&GateFamily::Swap(2)).unwrap()).unwrap();
        let d = entanglement_delta(&swap, &psi, &[0, 2], Monotone::LogNegativity).unwrap();
        assert_abs_diff_eq!(d, -2.0, epsilon = 1e-10);

        let plus = CVector::from_element(4, c(0.5, 0.0));
        let pp = PureState::new(plus, ab).unwrap();
        let phase =
            unitary_channel(&gate_family(&GateFamily::Phase(std::f64::consts::FRAC_PI_4)).unwrap())
                .unwrap();
        let d = entanglement_delta(&phase, &pp, &[0, 1], Monotone::LogNegativity).unwrap();
        assert_abs_diff_eq!(d, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn unsupported_monotones() {
        let rho = bell().density();
        assert!(matches!(robustness(&rho), Err(Error::Unsupported(_))));
        assert!(matches!(
            bound_entanglement_monotone(&rho),
            Err(Error::Unsupported(_))
        ));
    }

    fn local_unitary(da: usize, db: usize, r: &mut crate::random::Rng) -> CMatrix {
        haar_matrix(da, r).kronecker(&haar_matrix(db, r))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn log_negativity_is_additive(seed in any::<u64>(), da in 2usize..4, db in 2usize..4) {
            let mut r = rng(seed);
            let l1 = SubsystemLayout::bipartite(da, db).unwrap();
            let l2 = SubsystemLayout::bipartite(2, 2).unwrap();
            let p1 = random_density(&l1, &mut r);
            let p2 = random_density(&l2, &mut r);
            let joint = log_negativity(&tensor_product(&p1, &p2)).unwrap().value;
            let sum = log_negativity(&p1).unwrap().value + log_negativity(&p2).unwrap().value;
            prop_assert!((joint - sum).abs() <= 1e-9);
        }

        #[test]
        fn log_negativity_is_local_unitary_invariant(seed in any::<u64>(), da in 2usize..4, db in 2usize..4) {
            let mut r = rng(seed);
            let layout = SubsystemLayout::bipartite(da, db).unwrap();
            let psi = random_state(&layout, &mut r);
            let rho = psi.density();
            let u = local_unitary(da, db, &mut r);
            let rotated = BipartiteOperator::new(&u * rho.matrix() * u.adjoint(), layout).unwrap();
            let before = log_negativity(&rho).unwrap().value;
            let after = log_negativity(&rotated).unwrap().value;
            prop_assert!((before - after).abs() <= 1e-9);
        }

        #[test]
        fn ppt_operators_have_zero_negativity(seed in any::<u64>()) {
            let mut r = rng(seed);
            let layout = SubsystemLayout::bipartite(2, 3).unwrap();
            let h = random_hermitian(&layout, &mut r);
            // (1 + εH)/tr stays PPT for ε‖H‖ < 1
            let eps = 0.5 / crate::linalg::operator_norm(&h).max(1.0);
            let m = CMatrix::identity(6, 6) + h.matrix() * c(eps, 0.0);
            let tr = m.trace();
            let rho = BipartiteOperator::new(m / tr, layout.clone()).unwrap();
            let sigma = crate::linalg::partial_transpose(&rho).unwrap();
            prop_assert_eq!(negativity(&sigma).unwrap().value, 0.0);
        }

        #[test]
        fn pure_and_dense_agree(seed in any::<u64>()) {
            let mut r = rng(seed);
            let layout = SubsystemLayout::with_ancillas(2, 2, 3, 1).unwrap();
            let psi = random_state(&layout, &mut r);
            let dense = log_negativity(&psi.density()).unwrap().value;
            prop_assert!((pure_log_negativity(&psi).unwrap().value - dense).abs() <= 1e-9);
        }
    }
}
