//! Hand-derived reference values, computed without the crate's linear algebra.
//!
//! States are sparse maps from global digits `(c, f1, s, f2, w1, w2)` to real
//! amplitudes. Digits: c head=0 tail=1; s up=0 down=1; f1 0/head/tail;
//! f2 0/+/-; w 0/ok/fail.

#![allow(dead_code)]

use std::collections::BTreeMap;

pub type Digits = [usize; 6];
pub type Sparse = BTreeMap<Digits, f64>;

pub const C: usize = 0;
pub const F1: usize = 1;
pub const S: usize = 2;
pub const F2: usize = 3;
pub const W1: usize = 4;
pub const W2: usize = 5;

pub const INV_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn add(state: &mut Sparse, digits: Digits, amp: f64) {
    *state.entry(digits).or_insert(0.0) += amp;
}

/// Copies the value of digit `from` into the ready memory at `to`, shifted by one.
fn copy_record(state: &Sparse, from: usize, to: usize) -> Sparse {
    let mut out = Sparse::new();
    for (&d, &a) in state {
        assert_eq!(d[to], 0, "recorder must be ready");
        let mut e = d;
        e[to] = d[from] + 1;
        add(&mut out, e, a);
    }
    out
}

/// Records the ok/fail measurement of the pair `(x, y)` in memory `to`.
/// `plus` is the pair whose ok amplitude is `+1/√2`, `minus` the one with `-1/√2`;
/// fail is their symmetric sum.
fn copy_ok_fail(
    state: &Sparse,
    x: usize,
    y: usize,
    plus: (usize, usize),
    minus: (usize, usize),
    to: usize,
) -> Sparse {
    let mut out = Sparse::new();
    for (&d, &a) in state {
        assert_eq!(d[to], 0, "recorder must be ready");
        let pair = (d[x], d[y]);
        let sign = if pair == plus {
            1.0
        } else if pair == minus {
            -1.0
        } else {
            panic!("state left the two-dimensional span");
        };
        for (label, coeff, vec_sign) in [(1, sign * INV_SQRT2, -1.0), (2, INV_SQRT2, 1.0)] {
            for (p, s) in [(plus, 1.0), (minus, vec_sign)] {
                let mut e = d;
                e[x] = p.0;
                e[y] = p.1;
                e[to] = label;
                add(&mut out, e, a * coeff * s * INV_SQRT2);
            }
        }
    }
    out.retain(|_, a| a.abs() > 1e-15);
    out
}

/// Pilot state after each of the six stages, for real coin amplitudes `(a, b)`.
pub fn pilot_states(a: f64, b: f64) -> Vec<Sparse> {
    let mut prep = Sparse::new();
    add(&mut prep, [0, 0, 1, 0, 0, 0], a);
    add(&mut prep, [1, 0, 1, 0, 0, 0], b);
    prep.retain(|_, x| *x != 0.0);
    let obs0 = copy_record(&prep, C, F1);
    let mut prep1 = Sparse::new();
    for (&d, &x) in &obs0 {
        if d[F1] == 2 {
            // |down⟩ -> (|up⟩ + |down⟩)/√2
            add(&mut prep1, [d[0], d[1], 0, d[3], d[4], d[5]], x * INV_SQRT2);
            add(&mut prep1, [d[0], d[1], 1, d[3], d[4], d[5]], x * INV_SQRT2);
        } else {
            add(&mut prep1, d, x);
        }
    }
    let obs2 = copy_record(&prep1, S, F2);
    // ok_{F1C} = (hh - tt)/√2 in (c, f1) digits
    let meas3 = copy_ok_fail(&obs2, C, F1, (0, 1), (1, 2), W1);
    // ok_{F2S} = (|down,-⟩ - |up,+⟩)/√2 in (s, f2) digits
    let meas4 = copy_ok_fail(&meas3, S, F2, (1, 2), (0, 1), W2);
    vec![prep, obs0, prep1, obs2, meas3, meas4]
}

pub fn default_pilot_states() -> Vec<Sparse> {
    pilot_states((1.0f64 / 3.0).sqrt(), (2.0f64 / 3.0).sqrt())
}

/// Total weight of basis states whose digits satisfy `keep`.
pub fn weight(state: &Sparse, keep: impl Fn(&Digits) -> bool) -> f64 {
    state
        .iter()
        .filter(|(d, _)| keep(d))
        .map(|(_, a)| a * a)
        .sum()
}

/// `P(w1, w2)` for the default coin, frozen from the basis-change expansion
/// with coefficients `(1, -1, 1, 3)/√12`.
pub const W_MARGINAL: [((usize, usize), f64); 4] = [
    ((1, 1), 1.0 / 12.0),
    ((1, 2), 1.0 / 12.0),
    ((2, 1), 1.0 / 12.0),
    ((2, 2), 9.0 / 12.0),
];

/// The memory trajectory `(f1, f2, w1, w2)` after each stage, and its chain
/// probability `2/3 · 1 · 1/2 · 1/4 · 1/4` worked out row by row.
pub const PAPER_TRAJECTORY_PROBABILITY: f64 = 1.0 / 48.0;
