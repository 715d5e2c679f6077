//! Random-restart searches for the unassisted log-negativity capacity, the
//! dual bound over extremal elements `(|ψ><ψ|)^Γ`, and a lower-bound probe of
//! the assisted capacity over pure inputs.
//!
//! Each restart runs a stochastic hill climb on unit vectors and, when
//! `polish` is set, hands its point to a monotone alternating ascent that
//! writes the trace norm as `max_S tr(S X)` and alternates between the sign
//! matrix `S` and the best input for fixed `S`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bounds::{certificate, BoundCertificate};
use crate::channels::{with_ancillas, KrausChannel};
use crate::error::{Error, Result};
use crate::linalg::{
    c, fix_global_phase, hermitian_trace_norm, svd, CMatrix, CVector, LocalAction,
    PartialTranspose, Party, PureState, SubsystemLayout, C64,
};
use crate::monotones::clamp;
use crate::par;
use crate::random::{self, Rng};

/// Allowed excess of the lower end of a bracket over the upper end.
pub const BRACKET_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub initial_step: f64,
    pub step_decay: f64,
    pub convergence_tol: f64,
    pub seed: u64,
    /// `(d_a', d_b')`; `None` mirrors the target party dimensions.
    pub ancilla_dims: Option<(usize, usize)>,
    /// Rejections in a row before the step shrinks.
    pub stall_window: usize,
    /// Run the alternating ascent after the hill climb.
    pub polish: bool,
    /// Step size at which the hill climb hands over to the ascent.
    pub coarse_tol: f64,
    /// Run restarts on the worker pool.
    pub parallel: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            restarts: 64,
            max_iters: 2000,
            initial_step: 0.3,
            step_decay: 0.7,
            convergence_tol: 1e-9,
            seed: 0,
            ancilla_dims: None,
            stall_window: 8,
            polish: true,
            coarse_tol: 3e-2,
            parallel: true,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if self.restarts == 0 {
            return bad("restarts must be at least 1");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1");
        }
        if !(self.convergence_tol > 0.0) {
            return bad("convergence_tol must be positive");
        }
        if !(self.initial_step > 0.0) {
            return bad("initial_step must be positive");
        }
        if !(self.step_decay > 0.0 && self.step_decay < 1.0) {
            return bad("step_decay must lie in (0, 1)");
        }
        if self.stall_window == 0 {
            return bad("stall_window must be at least 1");
        }
        if !(self.coarse_tol > 0.0) {
            return bad("coarse_tol must be positive");
        }
        if let Some((a, b)) = self.ancilla_dims {
            if a == 0 || b == 0 {
                return bad("ancilla dimensions must be positive");
            }
        }
        Ok(())
    }

    /// Same search with `factor` times the restarts.
    pub fn scaled(&self, factor: usize) -> Self {
        Self {
            restarts: self.restarts * factor.max(1),
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// `E_LN(Λ(α⊗β))` over product inputs.
    Unassisted,
    /// `E_LN(Λ((ψψ†)^Γ))` over pure generators.
    Dual,
    /// `E_LN(Λ(ψψ†)) − E_LN(ψψ†)` over pure inputs.
    AssistedProbe,
    /// Entropy of entanglement of `K(α⊗β)`, single Kraus operator only.
    VonNeumannUnassisted,
}

impl Objective {
    fn is_product(self) -> bool {
        matches!(self, Self::Unassisted | Self::VonNeumannUnassisted)
    }
}

/// Complex amplitudes as `[re, im]` pairs.
pub type Amplitudes = Vec<[f64; 2]>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Argmax {
    /// `α` on `(a, a')` and `β` on `(b, b')`.
    Product {
        side_a: Amplitudes,
        side_b: Amplitudes,
    },
    /// `ψ` on `(a, a', b, b')`.
    Generator { amplitudes: Amplitudes },
}

fn to_pairs(v: &CVector) -> Amplitudes {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn from_pairs(p: &Amplitudes) -> CVector {
    CVector::from_iterator(p.len(), p.iter().map(|[re, im]| c(*re, *im)))
}

impl Argmax {
    fn from_blocks(objective: Objective, blocks: &[CVector]) -> Self {
        if objective.is_product() {
            Self::Product {
                side_a: to_pairs(&blocks[0]),
                side_b: to_pairs(&blocks[1]),
            }
        } else {
            Self::Generator {
                amplitudes: to_pairs(&blocks[0]),
            }
        }
    }

    fn blocks(&self) -> Vec<CVector> {
        match self {
            Self::Product { side_a, side_b } => vec![from_pairs(side_a), from_pairs(side_b)],
            Self::Generator { amplitudes } => vec![from_pairs(amplitudes)],
        }
    }

    /// The full input vector on `(a, a', b, b')`.
    pub fn full_vector(&self) -> CVector {
        match self {
            Self::Product { side_a, side_b } => from_pairs(side_a).kronecker(&from_pairs(side_b)),
            Self::Generator { amplitudes } => from_pairs(amplitudes),
        }
    }

    /// Full input as a state on `layout`.
    pub fn state(&self, layout: &SubsystemLayout) -> Result<PureState> {
        PureState::new(self.full_vector(), layout.clone())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestartTrace {
    pub restart: usize,
    pub value: f64,
    /// Value when the hill climb handed over.
    pub coarse_value: f64,
    pub iterations: usize,
    pub polish_sweeps: usize,
    pub evaluations: u64,
    pub final_step: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CapacityEstimate {
    pub objective: Objective,
    pub value: f64,
    pub argmax: Argmax,
    pub best_restart: usize,
    pub trace: Vec<RestartTrace>,
    pub evaluations: u64,
    pub wall_time: f64,
}

impl PartialEq for CapacityEstimate {
    /// Wall time is excluded.
    fn eq(&self, other: &Self) -> bool {
        self.objective == other.objective
            && self.value == other.value
            && self.argmax == other.argmax
            && self.best_restart == other.best_restart
            && self.trace == other.trace
            && self.evaluations == other.evaluations
    }
}

/// Channel data prepared for repeated objective evaluation.
struct Problem {
    kraus: Vec<CMatrix>,
    kraus_adj: Vec<CMatrix>,
    action: LocalAction,
    pt: PartialTranspose,
    layout: SubsystemLayout,
    da: usize,
    db: usize,
}

impl Problem {
    fn new(ch: &KrausChannel, cfg: &SearchConfig) -> Result<Self> {
        let tl = ch.target_layout();
        let (anc_a, anc_b) = cfg
            .ancilla_dims
            .unwrap_or((tl.party_dim(Party::A), tl.party_dim(Party::B)));
        let (layout, targets) = with_ancillas(tl, anc_a, anc_b)?;
        let kraus: Vec<CMatrix> = ch.kraus_ops().iter().map(|k| k.matrix().clone()).collect();
        Ok(Self {
            kraus_adj: kraus.iter().map(|k| k.adjoint()).collect(),
            kraus,
            action: LocalAction::new(&layout, &targets)?,
            pt: PartialTranspose::new(&layout)?,
            da: layout.party_dim(Party::A),
            db: layout.party_dim(Party::B),
            layout,
        })
    }

    fn single(&self) -> bool {
        self.kraus.len() == 1
    }

    fn n(&self) -> usize {
        self.da * self.db
    }

    fn cut(&self, v: &CVector) -> CMatrix {
        CMatrix::from_fn(self.da, self.db, |i, j| v[i * self.db + j])
    }

    fn nuclear(&self, v: &CVector) -> f64 {
        self.cut(v).svd(false, false).singular_values.sum()
    }

    fn outputs(&self, psi: &CVector) -> Vec<CVector> {
        self.kraus
            .iter()
            .map(|k| self.action.apply_vector(k, psi))
            .collect()
    }

    fn mixed_output(&self, psi: &CVector) -> CMatrix {
        let n = self.n();
        self.outputs(psi)
            .iter()
            .fold(CMatrix::zeros(n, n), |acc, phi| acc + phi * phi.adjoint())
    }

    fn apply_channel(&self, x: &CMatrix) -> CMatrix {
        let n = self.n();
        self.kraus.iter().fold(CMatrix::zeros(n, n), |acc, k| {
            acc + self.action.conjugate(k, x)
        })
    }

    fn apply_dual(&self, y: &CMatrix) -> CMatrix {
        let n = self.n();
        self.kraus_adj.iter().fold(CMatrix::zeros(n, n), |acc, k| {
            acc + self.action.conjugate(k, y)
        })
    }

    /// `log₂‖Λ(ψψ†)^Γ‖₁`.
    fn output_log_negativity(&self, psi: &CVector) -> f64 {
        if self.single() {
            let s = self.nuclear(&self.action.apply_vector(&self.kraus[0], psi));
            return 2.0 * clamp(s).log2();
        }
        let x = self.pt.apply(&self.mixed_output(psi));
        clamp(hermitian_trace_norm(&x)).log2()
    }

    fn dual_operator(&self, psi: &CVector) -> CMatrix {
        let sigma = self.pt.apply(&(psi * psi.adjoint()));
        self.pt.apply(&self.apply_channel(&sigma))
    }

    fn evaluate(&self, objective: Objective, blocks: &[CVector]) -> f64 {
        match objective {
            Objective::Unassisted => self.output_log_negativity(&blocks[0].kronecker(&blocks[1])),
            Objective::VonNeumannUnassisted => {
                let phi = self
                    .action
                    .apply_vector(&self.kraus[0], &blocks[0].kronecker(&blocks[1]));
                let s = self.cut(&phi).svd(false, false).singular_values;
                let total: f64 = s.iter().map(|x| x * x).sum();
                s.iter()
                    .map(|x| x * x / total)
                    .filter(|&p| p > 1e-14)
                    .map(|p| -p * p.log2())
                    .sum::<f64>()
                    .max(0.0)
            }
            Objective::Dual => clamp(hermitian_trace_norm(&self.dual_operator(&blocks[0]))).log2(),
            Objective::AssistedProbe => {
                let before = 2.0 * clamp(self.nuclear(&blocks[0])).log2();
                self.output_log_negativity(&blocks[0]) - before
            }
        }
    }

    fn block_dims(&self, objective: Objective) -> Vec<usize> {
        if objective.is_product() {
            vec![self.da, self.db]
        } else {
            vec![self.n()]
        }
    }
}

fn normalized(mut v: CVector) -> CVector {
    let n = v.norm();
    v /= c(n, 0.0);
    v
}

fn random_blocks(dims: &[usize], rng: &mut Rng) -> Vec<CVector> {
    dims.iter()
        .map(|&d| normalized(random::random_vector(d, rng)))
        .collect()
}

fn perturb(blocks: &[CVector], step: f64, rng: &mut Rng) -> Vec<CVector> {
    blocks
        .iter()
        .map(|b| normalized(b + random::random_vector(b.len(), rng) * c(step, 0.0)))
        .collect()
}

/// `V sign(D) V†` for Hermitian `x = V D V†`.
fn sign_matrix(x: &CMatrix) -> CMatrix {
    let eig = x.clone().symmetric_eigen();
    let signs = eig
        .eigenvalues
        .map(|l| c(if l >= 0.0 { 1.0 } else { -1.0 }, 0.0));
    let v = &eig.eigenvectors;
    v * CMatrix::from_diagonal(&signs) * v.adjoint()
}

fn top_eigenvector(g: &CMatrix) -> CVector {
    let h = (g + g.adjoint()) * c(0.5, 0.0);
    let eig = h.symmetric_eigen();
    let k = eig.eigenvalues.imax();
    eig.eigenvectors.column(k).into_owned()
}

/// `G_β[i,i'] = Σ_{j,j'} conj(β_j) G[(i,j),(i',j')] β_{j'}`, or the same
/// contraction over the A index when `side` is B.
fn contract(g: &CMatrix, other: &CVector, da: usize, db: usize, contract_b: bool) -> CMatrix {
    if contract_b {
        CMatrix::from_fn(da, da, |i, ip| {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..db {
                for jp in 0..db {
                    acc += other[j].conj() * g[(i * db + j, ip * db + jp)] * other[jp];
                }
            }
            acc
        })
    } else {
        CMatrix::from_fn(db, db, |j, jp| {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..da {
                for ip in 0..da {
                    acc += other[i].conj() * g[(i * db + j, ip * db + jp)] * other[ip];
                }
            }
            acc
        })
    }
}

/// `argmax_{|x|=1} Re Σ x_i g_i`.
fn phase_aligned(g: CVector) -> Option<CVector> {
    let n = g.norm();
    (n > 0.0).then(|| g.map(|z| z.conj()) / c(n, 0.0))
}

impl Problem {
    /// One sweep of the alternating ascent; returns the updated point.
    fn polish_step(&self, objective: Objective, blocks: &[CVector]) -> Vec<CVector> {
        match objective {
            Objective::Unassisted if self.single() => self.nuclear_sweep(blocks),
            Objective::Unassisted => self.product_sweep(blocks),
            Objective::Dual => vec![self.dual_step(&blocks[0])],
            _ => blocks.to_vec(),
        }
    }

    /// Alternating update of `α` then `β` for `‖cut(K(α⊗β))‖_*`, written as
    /// `max_W Re tr(W†M)` with `W = UV†`.
    fn nuclear_sweep(&self, blocks: &[CVector]) -> Vec<CVector> {
        let (mut alpha, mut beta) = (blocks[0].clone(), blocks[1].clone());
        for update_a in [true, false] {
            let phi = self
                .action
                .apply_vector(&self.kraus[0], &alpha.kronecker(&beta));
            let svd = svd(&self.cut(&phi));
            let w = svd.u * svd.v_t;
            let wv = CVector::from_fn(self.n(), |k, _| w[(k / self.db, k % self.db)]);
            let h = self.cut(&self.action.apply_vector(&self.kraus_adj[0], &wv));
            let hc = h.map(|z| z.conj());
            if update_a {
                if let Some(a) = phase_aligned(&hc * &beta) {
                    alpha = a;
                }
            } else if let Some(b) = phase_aligned(hc.transpose() * &alpha) {
                beta = b;
            }
        }
        vec![alpha, beta]
    }

    /// Alternating update for several Kraus operators: each side becomes the
    /// top eigenvector of `Λ*(S^Γ)` contracted with the other side.
    fn product_sweep(&self, blocks: &[CVector]) -> Vec<CVector> {
        let (mut alpha, mut beta) = (blocks[0].clone(), blocks[1].clone());
        for update_a in [true, false] {
            let psi = alpha.kronecker(&beta);
            let s = sign_matrix(&self.pt.apply(&self.mixed_output(&psi)));
            let g = self.apply_dual(&self.pt.apply(&s));
            if update_a {
                alpha = top_eigenvector(&contract(&g, &beta, self.da, self.db, true));
            } else {
                beta = top_eigenvector(&contract(&g, &alpha, self.da, self.db, false));
            }
        }
        vec![alpha, beta]
    }

    /// `ψ ← top eigenvector of Γ(Λ*(Γ(S)))` with `S = sign(Γ(Λ(Γ(ψψ†))))`.
    fn dual_step(&self, psi: &CVector) -> CVector {
        let s = sign_matrix(&self.dual_operator(psi));
        let g = self.pt.apply(&self.apply_dual(&self.pt.apply(&s)));
        top_eigenvector(&g)
    }
}

struct RestartOutcome {
    blocks: Vec<CVector>,
    trace: RestartTrace,
}

fn run_restart(
    problem: &Problem,
    objective: Objective,
    cfg: &SearchConfig,
    restart: usize,
    start: Option<&[CVector]>,
) -> RestartOutcome {
    let mut rng = random::rng(cfg.seed.wrapping_add(restart as u64));
    let dims = problem.block_dims(objective);
    let mut x = match start {
        Some(s) => s.iter().cloned().map(normalized).collect(),
        None => random_blocks(&dims, &mut rng),
    };
    let mut f = problem.evaluate(objective, &x);
    let mut evaluations = 1u64;
    let can_polish = cfg.polish && matches!(objective, Objective::Unassisted | Objective::Dual);
    let stop_step = if can_polish {
        cfg.coarse_tol
    } else {
        cfg.convergence_tol
    };
    let mut step = cfg.initial_step;
    let mut stall = 0;
    let mut iterations = 0;
    while iterations < cfg.max_iters && step >= stop_step {
        iterations += 1;
        let y = perturb(&x, step, &mut rng);
        let fy = problem.evaluate(objective, &y);
        evaluations += 1;
        if fy > f {
            x = y;
            f = fy;
            stall = 0;
        } else {
            stall += 1;
            if stall >= cfg.stall_window {
                step *= cfg.step_decay;
                stall = 0;
            }
        }
    }
    let coarse_value = f;
    let mut sweeps = 0;
    if can_polish {
        while sweeps < cfg.max_iters {
            sweeps += 1;
            let y = problem.polish_step(objective, &x);
            let fy = problem.evaluate(objective, &y);
            evaluations += 1;
            if !(fy > f) {
                break;
            }
            let gain = fy - f;
            x = y;
            f = fy;
            if gain < cfg.convergence_tol {
                break;
            }
        }
    }
    RestartOutcome {
        blocks: x,
        trace: RestartTrace {
            restart,
            value: f,
            coarse_value,
            iterations,
            polish_sweeps: sweeps,
            evaluations,
            final_step: step,
        },
    }
}

fn search(
    ch: &KrausChannel,
    cfg: &SearchConfig,
    objective: Objective,
    start: Option<Vec<CVector>>,
) -> Result<CapacityEstimate> {
    cfg.validate()?;
    let timer = Instant::now();
    let problem = Problem::new(ch, cfg)?;
    if objective == Objective::VonNeumannUnassisted && !problem.single() {
        return Err(Error::Unsupported("von Neumann search for mixed outputs"));
    }
    if let Some(s) = &start {
        let dims = problem.block_dims(objective);
        if s.len() != dims.len() || s.iter().zip(&dims).any(|(v, &d)| v.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: dims.iter().sum(),
                found: s.iter().map(|v| v.len()).sum(),
            });
        }
    }
    let outcomes = par::map(cfg.restarts, cfg.parallel, |r| {
        let warm = if r == 0 { start.as_deref() } else { None };
        run_restart(&problem, objective, cfg, r, warm)
    });
    let mut best = 0;
    for (r, o) in outcomes.iter().enumerate() {
        if o.trace.value > outcomes[best].trace.value {
            best = r;
        }
    }
    let mut blocks = outcomes[best].blocks.clone();
    for b in &mut blocks {
        fix_global_phase(b);
    }
    let argmax = Argmax::from_blocks(objective, &blocks);
    // re-evaluate from the stored amplitudes so the report is self-consistent
    let value = problem.evaluate(objective, &argmax.blocks());
    Ok(CapacityEstimate {
        objective,
        value,
        argmax,
        best_restart: best,
        evaluations: outcomes.iter().map(|o| o.trace.evaluations).sum(),
        trace: outcomes.into_iter().map(|o| o.trace).collect(),
        wall_time: timer.elapsed().as_secs_f64(),
    })
}

/// Best `E_LN(Λ(α⊗β))` found over product inputs; a lower bound on the
/// unassisted capacity.
pub fn unassisted_capacity(ch: &KrausChannel, cfg: &SearchConfig) -> Result<CapacityEstimate> {
    search(ch, cfg, Objective::Unassisted, None)
}

/// Best `E_LN(Λ((ψψ†)^Γ))` found over pure generators `ψ`.
pub fn dual_capacity_bound(ch: &KrausChannel, cfg: &SearchConfig) -> Result<CapacityEstimate> {
    search(ch, cfg, Objective::Dual, None)
}

/// As [`dual_capacity_bound`], with restart 0 started from the generator
/// `α⊗conj(β)` of a product input, whose dual value equals the unassisted
/// value of `α⊗β`.
pub fn dual_capacity_bound_from(
    ch: &KrausChannel,
    cfg: &SearchConfig,
    product: &CapacityEstimate,
) -> Result<CapacityEstimate> {
    let start = match &product.argmax {
        Argmax::Product { side_a, side_b } => {
            from_pairs(side_a).kronecker(&from_pairs(side_b).map(|z| z.conj()))
        }
        Argmax::Generator { .. } => {
            return Err(Error::InvalidParameter(
                "warm start needs a product input".into(),
            ))
        }
    };
    search(ch, cfg, Objective::Dual, Some(vec![start]))
}

/// Best `E_LN(Λ(ψψ†)) − E_LN(ψψ†)` found over pure inputs. Restart 0 starts
/// from the best product input of an unassisted search with the same config.
pub fn assisted_capacity_lower(ch: &KrausChannel, cfg: &SearchConfig) -> Result<CapacityEstimate> {
    let product = unassisted_capacity(ch, cfg)?;
    assisted_capacity_lower_from(ch, cfg, &product)
}

pub fn assisted_capacity_lower_from(
    ch: &KrausChannel,
    cfg: &SearchConfig,
    start: &CapacityEstimate,
) -> Result<CapacityEstimate> {
    search(
        ch,
        cfg,
        Objective::AssistedProbe,
        Some(vec![start.argmax.full_vector()]),
    )
}

/// Best entropy of entanglement of `K(α⊗β)` over product inputs.
pub fn von_neumann_unassisted(ch: &KrausChannel, cfg: &SearchConfig) -> Result<CapacityEstimate> {
    search(ch, cfg, Objective::VonNeumannUnassisted, None)
}

/// Objective value at the reported argmax.
pub fn reevaluate(ch: &KrausChannel, cfg: &SearchConfig, est: &CapacityEstimate) -> Result<f64> {
    let problem = Problem::new(ch, cfg)?;
    let blocks = est.argmax.blocks();
    let dims = problem.block_dims(est.objective);
    if blocks.iter().map(|b| b.len()).collect::<Vec<_>>() != dims {
        return Err(Error::DimensionMismatch {
            expected: dims.iter().sum(),
            found: blocks.iter().map(|b| b.len()).sum(),
        });
    }
    Ok(problem.evaluate(est.objective, &blocks))
}

/// The `(a, a', b, b')` layout searched under `cfg`.
pub fn search_layout(ch: &KrausChannel, cfg: &SearchConfig) -> Result<SubsystemLayout> {
    Ok(Problem::new(ch, cfg)?.layout)
}

#[derive(Clone, Debug, Serialize)]
pub struct CapacityBracket {
    pub lower: f64,
    pub upper: f64,
    pub width: f64,
    pub lower_source: &'static str,
    pub upper_source: &'static str,
    pub certificate: BoundCertificate,
    pub unassisted: CapacityEstimate,
    pub dual: CapacityEstimate,
    pub assisted: CapacityEstimate,
}

/// Combines the searches and the analytic bounds:
/// `lower = max(unassisted, assisted probe, Choi bound)`,
/// `upper = min(operator-norm bound, dual)`.
pub fn capacity_bracket(ch: &KrausChannel, cfg: &SearchConfig) -> Result<CapacityBracket> {
    let cert = certificate(ch)?;
    let unassisted = unassisted_capacity(ch, cfg)?;
    let dual = dual_capacity_bound_from(ch, cfg, &unassisted)?;
    let assisted = assisted_capacity_lower_from(ch, cfg, &unassisted)?;
    let mut lowers = vec![
        ("unassisted", unassisted.value),
        ("assisted_probe", assisted.value),
    ];
    if ch.is_single_kraus() {
        lowers.push(("choi", cert.choi_lower));
    }
    let (lower_source, lower) =
        lowers
            .into_iter()
            .fold(("unassisted", f64::NEG_INFINITY), |b, x| {
                if x.1 > b.1 {
                    x
                } else {
                    b
                }
            });
    let (upper_source, upper) = if dual.value < cert.upper_thm2 {
        ("dual", dual.value)
    } else {
        ("operator_norm_bound", cert.upper_thm2)
    };
    if lower > upper + BRACKET_TOL {
        return Err(Error::BracketInverted { lower, upper });
    }
    Ok(CapacityBracket {
        lower,
        upper,
        width: (upper - lower).max(0.0),
        lower_source,
        upper_source,
        certificate: cert,
        unassisted,
        dual,
        assisted,
    })
}
