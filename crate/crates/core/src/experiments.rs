//! Table generators shared by the command-line tool and the acceptance
//! suite.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::bounds::{cnot_choi_value, cnot_upper_value, thm2_upper_bound, CNOT_EXACT_CAPACITY};
use crate::capacity::{
    assisted_capacity_lower_from, dual_capacity_bound, unassisted_capacity, von_neumann_unassisted,
    SearchConfig,
};
use crate::channels::{
    choi_state, gate_family, haar_unitary, unitary_channel, ChoiState, GateFamily,
};
use crate::error::{Error, Result};
use crate::linalg::SubsystemLayout;
use crate::monotones::{log_negativity, pure_log_negativity};
use crate::par;

/// `2 log₂(|cos φ| + |sin φ|)`.
pub fn phase_closed_form(phi: f64) -> f64 {
    2.0 * (phi.cos().abs() + phi.sin().abs()).log2()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseRow {
    pub phi: f64,
    pub analytic_basic: f64,
    pub numeric_unassisted: f64,
    pub numeric_dual: f64,
    pub numeric_assisted_probe: f64,
    pub numeric_vn_unassisted: f64,
}

pub const PHASE_COLUMNS: [&str; 6] = [
    "phi",
    "analytic_basic",
    "numeric_unassisted",
    "numeric_dual",
    "numeric_assisted_probe",
    "numeric_vn_unassisted",
];

impl PhaseRow {
    pub fn values(&self) -> [f64; 6] {
        [
            self.phi,
            self.analytic_basic,
            self.numeric_unassisted,
            self.numeric_dual,
            self.numeric_assisted_probe,
            self.numeric_vn_unassisted,
        ]
    }
}

/// Uniform grid on `[0, π/2]`.
pub fn phase_grid(points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid needs at least 2 points, got {points}"
        )));
    }
    Ok((0..points)
        .map(|k| {
            if k + 1 == points {
                FRAC_PI_2
            } else {
                FRAC_PI_2 * k as f64 / (points - 1) as f64
            }
        })
        .collect())
}

pub fn phase_row(phi: f64, cfg: &SearchConfig) -> Result<PhaseRow> {
    let ch = unitary_channel(&gate_family(&GateFamily::Phase(phi))?)?;
    let un = unassisted_capacity(&ch, cfg)?;
    let dual = dual_capacity_bound(&ch, cfg)?;
    let assisted = assisted_capacity_lower_from(&ch, cfg, &un)?;
    let vn = von_neumann_unassisted(&ch, cfg)?;
    Ok(PhaseRow {
        phi,
        analytic_basic: phase_closed_form(phi),
        numeric_unassisted: un.value,
        numeric_dual: dual.value,
        numeric_assisted_probe: assisted.value,
        numeric_vn_unassisted: vn.value,
    })
}

pub fn phase_curve(points: usize, cfg: &SearchConfig) -> Result<Vec<PhaseRow>> {
    phase_grid(points)?
        .into_iter()
        .map(|phi| phase_row(phi, cfg))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuditRow {
    pub index: usize,
    pub unitary_seed: u64,
    pub e_ln_unassisted: f64,
    pub e_n_dual: f64,
    pub gap: f64,
}

pub const QUDIT_COLUMNS: [&str; 5] = [
    "index",
    "unitary_seed",
    "E_LN_unassisted",
    "E_N_dual",
    "gap",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuditSummary {
    pub n: usize,
    pub dim: usize,
    pub seed: u64,
    pub max_gap: f64,
    pub mean_gap: f64,
    pub within_1e_4: usize,
    pub within_1e_6: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuditReport {
    pub rows: Vec<QuditRow>,
    pub summary: QuditSummary,
}

/// Haar unitary `i` of the batch uses seed `seed + i` on a `dim × dim`
/// system; the searches use `cfg` unchanged.
pub fn random_qudits(n: usize, dim: usize, seed: u64, cfg: &SearchConfig) -> Result<QuditReport> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one unitary".into()));
    }
    if dim < 2 {
        return Err(Error::InvalidParameter(format!("dimension {dim} < 2")));
    }
    let layout = SubsystemLayout::bipartite(dim, dim)?;
    let rows = par::map(n, cfg.parallel, |i| -> Result<QuditRow> {
        let unitary_seed = seed.wrapping_add(i as u64);
        let ch = unitary_channel(&haar_unitary(&layout, unitary_seed)?)?;
        let un = unassisted_capacity(&ch, cfg)?;
        let dual = dual_capacity_bound(&ch, cfg)?;
        Ok(QuditRow {
            index: i,
            unitary_seed,
            e_ln_unassisted: un.value,
            e_n_dual: dual.value,
            gap: (dual.value - un.value).abs(),
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let max_gap = rows.iter().map(|r| r.gap).fold(0.0, f64::max);
    let summary = QuditSummary {
        n,
        dim,
        seed,
        max_gap,
        mean_gap: rows.iter().map(|r| r.gap).sum::<f64>() / n as f64,
        within_1e_4: rows.iter().filter(|r| r.gap <= 1e-4).count(),
        within_1e_6: rows.iter().filter(|r| r.gap <= 1e-6).count(),
    };
    Ok(QuditReport { rows, summary })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CnotFamilyRow {
    pub d: usize,
    pub choi_lower_analytic: f64,
    pub choi_numeric: f64,
    pub ec_numeric: f64,
    pub ec_exact: f64,
    pub thm2_analytic: f64,
    pub thm2_numeric: f64,
    pub choi_agrees: bool,
    pub ec_agrees: bool,
    pub thm2_agrees: bool,
}

pub const CNOT_COLUMNS: [&str; 10] = [
    "d",
    "choi_lower_analytic",
    "choi_numeric",
    "ec_numeric",
    "ec_exact",
    "thm2_analytic",
    "thm2_numeric",
    "choi_agrees",
    "ec_agrees",
    "thm2_agrees",
];

pub fn cnot_row(d: usize, cfg: &SearchConfig) -> Result<CnotFamilyRow> {
    let ch = unitary_channel(&gate_family(&GateFamily::CnotD(d))?)?;
    let choi_numeric = match choi_state(&ch)? {
        ChoiState::Pure { state, .. } => pure_log_negativity(&state)?.value,
        ChoiState::Mixed { density, .. } => log_negativity(&density)?.value,
    };
    let thm2_numeric = thm2_upper_bound(&ch)?.0;
    let ec_numeric = unassisted_capacity(&ch, cfg)?.value;
    let (choi_a, thm2_a) = (cnot_choi_value(d), cnot_upper_value(d));
    Ok(CnotFamilyRow {
        d,
        choi_lower_analytic: choi_a,
        choi_numeric,
        ec_numeric,
        ec_exact: CNOT_EXACT_CAPACITY,
        thm2_analytic: thm2_a,
        thm2_numeric,
        choi_agrees: (choi_numeric - choi_a).abs() <= 1e-9,
        ec_agrees: (ec_numeric - CNOT_EXACT_CAPACITY).abs() <= 1e-6,
        thm2_agrees: (thm2_numeric - thm2_a).abs() <= 1e-9,
    })
}

/// Rows for `d = 2..=d_max`.
pub fn cnot_family(d_max: usize, cfg: &SearchConfig) -> Result<Vec<CnotFamilyRow>> {
    if d_max < 2 {
        return Err(Error::InvalidParameter(format!("d_max {d_max} < 2")));
    }
    (2..=d_max).map(|d| cnot_row(d, cfg)).collect()
}
