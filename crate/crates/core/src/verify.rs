//! Self-check groups run by `entcap verify`.

use serde::Serialize;

use crate::bounds::{
    ancilla_gram, certificate, cnot_choi_value, cnot_upper_value, random_orthonormal_operators,
};
use crate::capacity::{dual_capacity_bound, search_layout, unassisted_capacity, SearchConfig};
use crate::channels::{
    apply, gate_family, haar_unitary, lambda1_channel, max_entangled_pair, unitary_channel,
    GateFamily,
};
use crate::error::Result;
use crate::linalg::{
    c, max_abs, partial_transpose, tensor_product, trace_norm, BipartiteOperator, CMatrix,
    PureState, SubsystemLayout,
};
use crate::monotones::{entanglement_delta, log_negativity, Monotone};
use crate::random::{haar_matrix, random_channel, random_density, random_matrix, rng};
use crate::schmidt::operator_schmidt;

pub type PartialTransposeFn = fn(&BipartiteOperator) -> Result<BipartiteOperator>;

/// Replaceable pieces, so the checks can be shown to catch faults.
#[derive(Clone, Copy)]
pub struct Hooks {
    pub partial_transpose: PartialTransposeFn,
}

impl Default for Hooks {
    fn default() -> Self {
        Self { partial_transpose }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GroupResult {
    pub name: &'static str,
    pub passed: bool,
    pub checks: usize,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub groups: Vec<GroupResult>,
}

impl VerifyReport {
    pub fn group(&self, name: &str) -> Option<&GroupResult> {
        self.groups.iter().find(|g| g.name == name)
    }
}

struct Group {
    name: &'static str,
    checks: usize,
    failures: Vec<String>,
}

impl Group {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checks: 0,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok && self.failures.len() < 20 {
            self.failures.push(what());
        }
    }

    /// Errors count as failed checks.
    fn run(&mut self, body: impl FnOnce(&mut Self) -> Result<()>) {
        if let Err(e) = body(self) {
            self.checks += 1;
            self.failures.push(format!("error: {e}"));
        }
    }

    fn finish(self) -> GroupResult {
        GroupResult {
            name: self.name,
            passed: self.failures.is_empty() && self.checks > 0,
            checks: self.checks,
            failures: self.failures,
        }
    }
}

/// `Σ_{j,k} (1 ⊗ |j><k|) ρ (1 ⊗ |j><k|)` on a two-subsystem layout.
fn transpose_oracle(rho: &BipartiteOperator) -> CMatrix {
    let dims = rho.layout().dims();
    let (da, db) = (dims[0], dims[1]);
    let mut out = CMatrix::zeros(da * db, da * db);
    for j in 0..db {
        for k in 0..db {
            let mut e = CMatrix::zeros(db, db);
            e[(j, k)] = c(1.0, 0.0);
            let op = CMatrix::identity(da, da).kronecker(&e);
            out += &op * rho.matrix() * &op;
        }
    }
    out
}

fn involution_group(hooks: &Hooks, seed: u64) -> GroupResult {
    let mut g = Group::new("partial_transpose_involution");
    g.run(|g| {
        let mut r = rng(seed);
        for (da, db) in [(2, 2), (2, 3), (3, 2)] {
            let layout = SubsystemLayout::bipartite(da, db)?;
            for _ in 0..10 {
                let m = BipartiteOperator::new(random_matrix(da * db, &mut r), layout.clone())?;
                let once = (hooks.partial_transpose)(&m)?;
                let twice = (hooks.partial_transpose)(&once)?;
                g.check(twice.max_abs_diff(&m) <= 1e-12, || {
                    format!("Γ∘Γ ≠ id on {da}x{db}")
                });
                g.check(
                    max_abs(&(once.matrix() - transpose_oracle(&m))) <= 1e-12,
                    || format!("Γ disagrees with the index oracle on {da}x{db}"),
                );
            }
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v =
            crate::linalg::CVector::from_vec(vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]);
        let bell = PureState::new(v, SubsystemLayout::bipartite(2, 2)?)?.density();
        let pt = (hooks.partial_transpose)(&bell)?;
        let mut ev = crate::linalg::hermitian_eigenvalues(pt.matrix());
        ev.sort_by(f64::total_cmp);
        let want = [-0.5, 0.5, 0.5, 0.5];
        g.check(
            ev.iter().zip(want).all(|(x, y)| (x - y).abs() <= 1e-12),
            || format!("Bell partial transpose spectrum {ev:?}"),
        );
        Ok(())
    });
    g.finish()
}

fn schmidt_group(seed: u64) -> GroupResult {
    let mut g = Group::new("operator_schmidt");
    g.run(|g| {
        let mut r = rng(seed);
        for (da, db) in [(2, 2), (2, 3), (3, 3)] {
            let layout = SubsystemLayout::bipartite(da, db)?;
            for _ in 0..10 {
                let k = BipartiteOperator::new(random_matrix(da * db, &mut r), layout.clone())?;
                let d = operator_schmidt(&k)?;
                g.check(d.reconstruct().max_abs_diff(&k) <= 1e-10, || {
                    format!("reconstruction on {da}x{db}")
                });
                g.check(d.orthonormality_deviation() <= 1e-10, || {
                    format!("orthonormality on {da}x{db}")
                });
            }
        }
        Ok(())
    });
    g.finish()
}

fn channel_group(seed: u64) -> GroupResult {
    let mut g = Group::new("channel_certificates");
    g.run(|g| {
        let mut r = rng(seed);
        let ab = SubsystemLayout::bipartite(2, 2)?;
        for rank in 1..=4 {
            let ch = random_channel(&ab, rank, &mut r)?;
            g.check(ch.tp_deviation() <= 1e-10, || {
                format!("rank-{rank} channel not trace preserving")
            });
        }
        for d in 2..=4 {
            let u = haar_unitary(&SubsystemLayout::bipartite(d, d)?, seed + d as u64)?;
            g.check(unitary_channel(&u)?.tp_deviation() <= 1e-10, || {
                format!("Haar channel at d={d}")
            });
        }
        let zero = PureState::basis(ab.clone(), 0)?.density();
        for _ in 0..10 {
            let rho1 = random_density(&ab, &mut r);
            let ch = lambda1_channel(&rho1)?;
            g.check(ch.tp_deviation() <= 1e-10, || {
                "Λ₁ not trace preserving".into()
            });
            let out = apply(&ch, &zero, &[0, 1])?;
            let diff = BipartiteOperator::new(out.matrix() - rho1.matrix(), ab.clone())?;
            let dist = 0.5 * trace_norm(&diff);
            g.check(dist <= 1e-10, || {
                format!("Λ₁(|00><00|) misses ρ₁ by {dist:.3e}")
            });
        }
        Ok(())
    });
    g.finish()
}

fn choi_group() -> GroupResult {
    let mut g = Group::new("choi_separability");
    g.run(|g| {
        for da in [2, 3] {
            for db in [2, 3] {
                let phi = max_entangled_pair(&SubsystemLayout::with_ancillas(da, da, db, db)?)?;
                let e = log_negativity(&phi.density())?.value;
                g.check(e.abs() <= 1e-10, || {
                    format!("|Φ_A>|Φ_B> at ({da},{db}) has E_LN {e:.3e}")
                });
            }
        }
        Ok(())
    });
    g.finish()
}

fn monotone_group(seed: u64) -> GroupResult {
    let mut g = Group::new("monotone_properties");
    g.run(|g| {
        let mut r = rng(seed);
        let l1 = SubsystemLayout::bipartite(2, 2)?;
        let l2 = SubsystemLayout::bipartite(2, 3)?;
        for _ in 0..100 {
            let (p1, p2) = (random_density(&l1, &mut r), random_density(&l2, &mut r));
            let joint = log_negativity(&tensor_product(&p1, &p2))?.value;
            let sum = log_negativity(&p1)?.value + log_negativity(&p2)?.value;
            g.check((joint - sum).abs() <= 1e-9, || {
                format!("additivity off by {:.3e}", joint - sum)
            });
        }
        for _ in 0..100 {
            let rho = random_density(&l2, &mut r);
            let u = haar_matrix(2, &mut r).kronecker(&haar_matrix(3, &mut r));
            let rotated = BipartiteOperator::new(&u * rho.matrix() * u.adjoint(), l2.clone())?;
            let delta = log_negativity(&rotated)?.value - log_negativity(&rho)?.value;
            g.check(delta.abs() <= 1e-9, || {
                format!("local unitary changed E_LN by {delta:.3e}")
            });
        }
        Ok(())
    });
    g.finish()
}

fn gram_group(seed: u64) -> GroupResult {
    let mut g = Group::new("gram_identity");
    g.run(|g| {
        let mut r = rng(seed);
        for d in [2, 3] {
            for _ in 0..50 {
                let ops = random_orthonormal_operators(d, &mut r);
                let gram = ancilla_gram(&ops)?;
                let dev = max_abs(&(gram - CMatrix::identity(d * d, d * d)));
                g.check(dev <= 1e-10, || {
                    format!("Gram deviation {dev:.3e} at d={d}")
                });
            }
        }
        Ok(())
    });
    g.finish()
}

fn bounds_group(seed: u64) -> GroupResult {
    let mut g = Group::new("bound_consistency");
    g.run(|g| {
        let ab = SubsystemLayout::bipartite(2, 2)?;
        for k in 0..20 {
            let cert = certificate(&unitary_channel(&haar_unitary(&ab, seed + k)?)?)?;
            let basic = cert.basic_closed_form.unwrap_or(f64::NAN);
            g.check(
                (cert.upper_thm2 - basic).abs() <= 1e-9 && (cert.choi_lower - basic).abs() <= 1e-9,
                || format!("two-qubit bounds do not collapse: {cert:?}"),
            );
        }
        for d in 2..=5 {
            let cert = certificate(&unitary_channel(&gate_family(&GateFamily::CnotD(d))?)?)?;
            g.check((cert.choi_lower - cnot_choi_value(d)).abs() <= 1e-9, || {
                format!("U_{d} Choi value")
            });
            g.check(
                (cert.upper_thm2 - cnot_upper_value(d)).abs() <= 1e-9,
                || format!("U_{d} upper bound"),
            );
        }
        Ok(())
    });
    g.finish()
}

fn duality_group(cfg: &SearchConfig) -> GroupResult {
    let mut g = Group::new("capacity_duality");
    g.run(|g| {
        let ab = SubsystemLayout::bipartite(2, 2)?;
        let mut r = rng(cfg.seed ^ 0x9e37);
        for k in 0..3 {
            let ch = random_channel(&ab, 2, &mut r)?;
            let un = unassisted_capacity(&ch, cfg)?;
            let dual = dual_capacity_bound(&ch, cfg)?;
            g.check(un.value <= dual.value + 1e-6, || {
                format!(
                    "channel {k}: unassisted {} above dual {}",
                    un.value, dual.value
                )
            });
            let layout = search_layout(&ch, cfg)?;
            for _ in 0..20 {
                let psi = crate::random::random_state(&layout, &mut r);
                let d = entanglement_delta(&ch, &psi, &[0, 2], Monotone::LogNegativity)?;
                g.check(d <= dual.value + 1e-6, || {
                    format!("channel {k}: delta {d} above dual {}", dual.value)
                });
            }
        }
        Ok(())
    });
    g.finish()
}

/// Runs every group; the searches use `cfg`, everything else is seeded from
/// `cfg.seed`.
pub fn run(cfg: &SearchConfig, hooks: &Hooks) -> VerifyReport {
    let s = cfg.seed;
    let groups = vec![
        involution_group(hooks, s),
        schmidt_group(s.wrapping_add(1)),
        channel_group(s.wrapping_add(2)),
        choi_group(),
        monotone_group(s.wrapping_add(3)),
        gram_group(s.wrapping_add(4)),
        bounds_group(s.wrapping_add(5)),
        duality_group(cfg),
    ];
    VerifyReport {
        passed: groups.iter().all(|g| g.passed),
        groups,
    }
}
