//! Deterministic scan of the Bell-diagonal line `a = (x, -x, 1/3)`.
//!
//! Along this line the state exists for `|x| ≤ 5/12`. PPT, reduction,
//! majorization and `S_∞` all switch off at `|x| = 1/12`, while the
//! von Neumann criterion holds much further out. The verdicts here come from
//! the full matrix pipeline, not from the closed-form spectrum.

use serde::{Deserialize, Serialize};

use crate::criteria::{evaluate_all, Alpha, Verdict};
use crate::states::{DensityMatrix, FamilyKind, StateFamily};

pub const SLICE_A_Z: f64 = 1.0 / 3.0;
/// Largest `|x|` for which the slice point is a state.
pub const SLICE_HALF_WIDTH: f64 = 5.0 / 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SliceCriterion {
    Ppt,
    Reduction,
    Majorization,
    RenyiInf,
    Renyi1,
}

impl SliceCriterion {
    pub const ALL: [SliceCriterion; 5] = [
        SliceCriterion::Ppt,
        SliceCriterion::Reduction,
        SliceCriterion::Majorization,
        SliceCriterion::RenyiInf,
        SliceCriterion::Renyi1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SliceCriterion::Ppt => "ppt",
            SliceCriterion::Reduction => "reduction",
            SliceCriterion::Majorization => "majorization",
            SliceCriterion::RenyiInf => "renyi_inf",
            SliceCriterion::Renyi1 => "renyi_1",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlicePoint {
    pub x: f64,
    pub valid: bool,
    /// Verdicts in the order of [`SliceCriterion::ALL`]; empty when the
    /// point is not a state.
    pub verdicts: Vec<Verdict>,
}

impl SlicePoint {
    pub fn verdict(&self, c: SliceCriterion) -> Option<Verdict> {
        let idx = SliceCriterion::ALL.iter().position(|&k| k == c)?;
        self.verdicts.get(idx).copied()
    }
}

pub fn slice_coords(x: f64) -> [f64; 3] {
    [x, -x, SLICE_A_Z]
}

pub fn evaluate_slice_point(family: &StateFamily, x: f64) -> SlicePoint {
    debug_assert_eq!(family.kind(), FamilyKind::BellDiagonal);
    let coords = slice_coords(x);
    let matrix = match family.to_matrix(&coords) {
        Ok(m) if family.is_state(&coords) => m,
        _ => {
            return SlicePoint {
                x,
                valid: false,
                verdicts: Vec::new(),
            }
        }
    };
    let rho = match DensityMatrix::new(2, 2, matrix) {
        Ok(r) => r,
        Err(_) => {
            return SlicePoint {
                x,
                valid: false,
                verdicts: Vec::new(),
            }
        }
    };
    let all = evaluate_all(&rho, &[Alpha::Infinity, Alpha::Finite(1.0)]);
    let verdicts = vec![
        all.ppt,
        all.reduction,
        all.majorization,
        all.renyi(Alpha::Infinity).expect("requested order"),
        all.renyi(Alpha::Finite(1.0)).expect("requested order"),
    ];
    SlicePoint {
        x,
        valid: true,
        verdicts,
    }
}

/// `points` equally spaced values of `x` over `[-5/12, 5/12]`, endpoints included.
pub fn scan(points: usize) -> Vec<SlicePoint> {
    let family = bell_diagonal();
    let points = points.max(2);
    (0..points)
        .map(|i| {
            let t = i as f64 / (points - 1) as f64;
            let x = -SLICE_HALF_WIDTH + 2.0 * SLICE_HALF_WIDTH * t;
            evaluate_slice_point(&family, x)
        })
        .collect()
}

fn bell_diagonal() -> StateFamily {
    StateFamily::new(FamilyKind::BellDiagonal, None).expect("fixed family")
}

/// Largest `x ≥ 0` where `criterion` still holds, by bisection on
/// `[0, 5/12]` down to an interval of width `tol`.
pub fn flip_point(criterion: SliceCriterion, tol: f64) -> f64 {
    let family = bell_diagonal();
    let holds = |x: f64| {
        evaluate_slice_point(&family, x)
            .verdict(criterion)
            .is_some_and(|v| v.fulfilled)
    };
    let (mut lo, mut hi) = (0.0, SLICE_HALF_WIDTH);
    assert!(holds(lo) && !holds(hi), "no sign change for {criterion:?}");
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
