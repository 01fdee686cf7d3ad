//! Closed-form analysis of the 2x2 Alice-Bob paradigm.
//!
//! Two binary settings per side, four contexts. Marginal selectivity
//! (no-signaling) plus the four CH/Fine inequalities is equivalent to the
//! existence of an identity coupling, which makes this module both a user
//! feature and an exact oracle for the LP path in `coupling`.

use serde::Serialize;

use crate::rational::Q;
use crate::system::{build_system, System, SystemSpec};

/// The sixteen context masses of a 2x2 Bell system.
///
/// `p[i][j]`, `q[i][j]`, `r[i][j]`, `s[i][j]` are the probabilities of
/// (+1,+1), (+1,-1), (-1,+1), (-1,-1) in the context with Alice's setting
/// i+1 and Bob's setting j+1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BellSystem {
    pub p: [[Q; 2]; 2],
    pub q: [[Q; 2]; 2],
    pub r: [[Q; 2]; 2],
    pub s: [[Q; 2]; 2],
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum BellError {
    #[error("not a 2x2 Bell system: {0}")]
    NotABellSystem(String),
    #[error("context ({0},{1}) masses do not form a pmf")]
    BadContext(usize, usize),
    #[error("CH/Fine marginals are undefined: marginal selectivity is violated")]
    MarginalsUndefined,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChFineReport {
    /// Expression value at each (i,j); satisfaction means all lie in [-1, 0].
    pub expressions: [[Q; 2]; 2],
    pub satisfied: bool,
    /// Distance of the worst expression outside [-1, 0]; zero when satisfied.
    pub max_violation: Q,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SelectivityReport {
    pub pass: bool,
    /// |alice_i via j=1 - alice_i via j=2| and the Bob analogue, per index.
    pub alice_discrepancy: [Q; 2],
    pub bob_discrepancy: [Q; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BellClass {
    Noncontextual,
    Case1Signaling,
    Case2PureContextuality,
}

impl BellSystem {
    pub fn new(p: [[Q; 2]; 2], q: [[Q; 2]; 2], r: [[Q; 2]; 2], s: [[Q; 2]; 2]) -> Result<BellSystem, BellError> {
        let bs = BellSystem { p, q, r, s };
        for i in 0..2 {
            for j in 0..2 {
                let cell = [&bs.p[i][j], &bs.q[i][j], &bs.r[i][j], &bs.s[i][j]];
                let total: Q = cell.iter().copied().sum();
                if total != Q::one() || cell.iter().any(|m| m.is_negative()) {
                    return Err(BellError::BadContext(i + 1, j + 1));
                }
            }
        }
        Ok(bs)
    }

    /// Alice's +1 marginal in context (i,j): p_ij + q_ij.
    pub fn alice_plus(&self, i: usize, j: usize) -> Q {
        &self.p[i][j] + &self.q[i][j]
    }

    /// Bob's +1 marginal in context (i,j): p_ij + r_ij.
    pub fn bob_plus(&self, i: usize, j: usize) -> Q {
        &self.p[i][j] + &self.r[i][j]
    }

    /// The equivalent general `System` over contents A1,A2,B1,B2 with
    /// contexts c11..c22 and default identity classes.
    pub fn to_system(&self, name: &str) -> System {
        let mut contexts = Vec::new();
        for i in 0..2 {
            for j in 0..2 {
                contexts.push(serde_json::json!({
                    "id": format!("c{}{}", i + 1, j + 1),
                    "contents": [format!("A{}", i + 1), format!("B{}", j + 1)],
                    "pmf": [
                        {"values": ["+1", "+1"], "p": self.p[i][j].to_string()},
                        {"values": ["+1", "-1"], "p": self.q[i][j].to_string()},
                        {"values": ["-1", "+1"], "p": self.r[i][j].to_string()},
                        {"values": ["-1", "-1"], "p": self.s[i][j].to_string()},
                    ]
                }));
            }
        }
        let spec: SystemSpec = serde_json::from_value(serde_json::json!({
            "name": name,
            "contents": [
                {"id": "A1", "outcomes": ["+1", "-1"]},
                {"id": "A2", "outcomes": ["+1", "-1"]},
                {"id": "B1", "outcomes": ["+1", "-1"]},
                {"id": "B2", "outcomes": ["+1", "-1"]},
            ],
            "contexts": contexts,
        }))
        .expect("well-formed spec");
        build_system(&spec).expect("bell masses form pmfs")
    }
}

/// Extracts the sixteen masses from a system shaped as a 2x2 Bell design:
/// four two-content contexts crossing two Alice contents with two Bob
/// contents, all binary with outcomes {+1, -1}, default identity classes.
pub fn from_system(system: &System) -> Result<BellSystem, BellError> {
    let fail = |msg: &str| BellError::NotABellSystem(msg.to_string());
    if system.contexts.len() != 4 {
        return Err(fail("expected exactly 4 contexts"));
    }
    for c in &system.contents {
        let plus_minus = c.outcomes.iter().map(String::as_str).collect::<Vec<_>>();
        if plus_minus != ["+1", "-1"] {
            return Err(fail("outcomes must be [\"+1\", \"-1\"]"));
        }
    }
    let mut rows: Vec<&str> = Vec::new(); // Alice contents, first position
    let mut cols: Vec<&str> = Vec::new(); // Bob contents, second position
    for ctx in &system.contexts {
        if ctx.contents.len() != 2 {
            return Err(fail("every context must pair two contents"));
        }
        if !rows.contains(&ctx.contents[0].as_str()) {
            rows.push(&ctx.contents[0]);
        }
        if !cols.contains(&ctx.contents[1].as_str()) {
            cols.push(&ctx.contents[1]);
        }
    }
    if rows.len() != 2 || cols.len() != 2 {
        return Err(fail("contexts must cross two Alice and two Bob contents"));
    }
    let zero = || [[Q::zero(), Q::zero()], [Q::zero(), Q::zero()]];
    let (mut p, mut q, mut r, mut s) = (zero(), zero(), zero(), zero());
    let mut seen = [[false; 2]; 2];
    for ctx in &system.contexts {
        let i = rows.iter().position(|x| *x == ctx.contents[0]).unwrap();
        let j = cols.iter().position(|x| *x == ctx.contents[1]).unwrap();
        if seen[i][j] {
            return Err(fail("duplicate setting combination"));
        }
        seen[i][j] = true;
        let m = |a: &str, b: &str| ctx.pmf.mass_of(&[a.to_string(), b.to_string()]);
        p[i][j] = m("+1", "+1");
        q[i][j] = m("+1", "-1");
        r[i][j] = m("-1", "+1");
        s[i][j] = m("-1", "-1");
    }
    if seen.iter().flatten().any(|x| !x) {
        return Err(fail("contexts must cover all four setting combinations"));
    }
    BellSystem::new(p, q, r, s)
}

/// Marginal selectivity: Alice's marginal may not depend on Bob's setting
/// and vice versa, checked exactly.
pub fn marginal_selectivity(bs: &BellSystem) -> SelectivityReport {
    let alice = [
        (bs.alice_plus(0, 0) - bs.alice_plus(0, 1)).abs(),
        (bs.alice_plus(1, 0) - bs.alice_plus(1, 1)).abs(),
    ];
    let bob = [
        (bs.bob_plus(0, 0) - bs.bob_plus(1, 0)).abs(),
        (bs.bob_plus(0, 1) - bs.bob_plus(1, 1)).abs(),
    ];
    let pass = alice.iter().chain(&bob).all(Q::is_zero);
    SelectivityReport {
        pass,
        alice_discrepancy: alice,
        bob_discrepancy: bob,
    }
}

/// The four CH/Fine expressions
/// `p11+p12+p21+p22 - (2 p_{3-i,3-j} + p_{i.} + p_{.j})`, each required to
/// lie in [-1, 0]. Refuses to evaluate when selectivity fails, since the
/// setting-free marginals are undefined then.
pub fn ch_fine(bs: &BellSystem) -> Result<ChFineReport, BellError> {
    if !marginal_selectivity(bs).pass {
        return Err(BellError::MarginalsUndefined);
    }
    let total: Q = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| bs.p[i][j].clone())
        .sum();
    // selectivity holds, so any context gives the same setting-free marginal
    let alice_m = [bs.alice_plus(0, 0), bs.alice_plus(1, 0)];
    let bob_m = [bs.bob_plus(0, 0), bs.bob_plus(0, 1)];
    let mut expressions = [[Q::zero(), Q::zero()], [Q::zero(), Q::zero()]];
    let mut max_violation = Q::zero();
    let mut satisfied = true;
    for i in 0..2 {
        for j in 0..2 {
            let e = &total
                - &(Q::from_int(2) * &bs.p[1 - i][1 - j] + &alice_m[i] + &bob_m[j]);
            let excess = if e > Q::zero() {
                e.clone()
            } else if e < -Q::one() {
                -Q::one() - &e
            } else {
                Q::zero()
            };
            if excess > max_violation {
                max_violation = excess.clone();
            }
            satisfied &= excess.is_zero();
            expressions[i][j] = e;
        }
    }
    Ok(ChFineReport {
        expressions,
        satisfied,
        max_violation,
    })
}

/// Case 1 iff selectivity fails; Case 2 iff selectivity holds but CH/Fine
/// is violated; noncontextual iff both hold.
pub fn classify(bs: &BellSystem) -> BellClass {
    if !marginal_selectivity(bs).pass {
        return BellClass::Case1Signaling;
    }
    if ch_fine(bs).expect("selectivity verified").satisfied {
        BellClass::Noncontextual
    } else {
        BellClass::Case2PureContextuality
    }
}

/// The PR box: perfect correlation in contexts (1,1), (1,2), (2,1) and
/// perfect anticorrelation in (2,2).
pub fn pr_box() -> BellSystem {
    let h = Q::new(1, 2);
    let z = Q::zero;
    let corr = |on: bool| if on { h.clone() } else { z() };
    let p = [[corr(true), corr(true)], [corr(true), corr(false)]];
    let s = [[corr(true), corr(true)], [corr(true), corr(false)]];
    let q = [[z(), z()], [z(), h.clone()]];
    let r = [[z(), z()], [z(), h.clone()]];
    BellSystem::new(p, q, r, s).unwrap()
}

/// All four contexts independent uniform (every cell 1/4).
pub fn uniform_independent() -> BellSystem {
    let quarter = || Q::new(1, 4);
    let cells = || [[quarter(), quarter()], [quarter(), quarter()]];
    BellSystem::new(cells(), cells(), cells(), cells()).unwrap()
}

/// Convex mixture pointwise per context: `lambda * a + (1-lambda) * b`.
pub fn mix(a: &BellSystem, b: &BellSystem, lambda: &Q) -> BellSystem {
    let co = Q::one() - lambda;
    let blend = |x: &[[Q; 2]; 2], y: &[[Q; 2]; 2]| {
        let mut out = [[Q::zero(), Q::zero()], [Q::zero(), Q::zero()]];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = lambda * &x[i][j] + &co * &y[i][j];
            }
        }
        out
    };
    BellSystem::new(
        blend(&a.p, &b.p),
        blend(&a.q, &b.q),
        blend(&a.r, &b.r),
        blend(&a.s, &b.s),
    )
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::identity_coupling_exists;

    fn q2(n: i64, d: i64) -> Q {
        Q::new(n, d)
    }

    #[test]
    fn pr_box_roundtrips_through_system() {
        let bs = pr_box();
        let sys = bs.to_system("prbox");
        let back = from_system(&sys).unwrap();
        assert_eq!(back, bs);
        assert_eq!(back.p[0][0], q2(1, 2));
        assert_eq!(back.p[1][1], Q::zero());
        assert_eq!(back.q[1][1], q2(1, 2));
    }

    #[test]
    fn non_bell_shapes_rejected() {
        let bs = pr_box();
        let mut sys = bs.to_system("prbox");
        sys.contexts.pop();
        assert!(matches!(from_system(&sys), Err(BellError::NotABellSystem(_))));

        let ternary: SystemSpec = serde_json::from_value(serde_json::json!({
            "name": "t",
            "contents": [
                {"id": "A1", "outcomes": ["a", "b", "c"]},
                {"id": "B1", "outcomes": ["a", "b", "c"]}
            ],
            "contexts": [{"id": "c", "contents": ["A1", "B1"], "pmf": [
                {"values": ["a", "a"], "p": "1"}
            ]}]
        }))
        .unwrap();
        let sys = build_system(&ternary).unwrap();
        assert!(matches!(from_system(&sys), Err(BellError::NotABellSystem(_))));
    }

    #[test]
    fn pr_box_selectivity_holds() {
        assert!(marginal_selectivity(&pr_box()).pass);
    }

    #[test]
    fn constructed_signaling_detected() {
        let mut bs = pr_box();
        // make Alice-1's marginal 3/4 in context (1,1) but 1/2 in (1,2)
        bs.p[0][0] = q2(3, 4);
        bs.s[0][0] = q2(1, 4);
        bs.q[0][0] = Q::zero();
        bs.r[0][0] = Q::zero();
        let rep = marginal_selectivity(&bs);
        assert!(!rep.pass);
        assert_eq!(rep.alice_discrepancy[0], q2(1, 4));
        assert_eq!(classify(&bs), BellClass::Case1Signaling);
        assert!(matches!(ch_fine(&bs), Err(BellError::MarginalsUndefined)));
    }

    #[test]
    fn pr_box_ch_fine_values() {
        let rep = ch_fine(&pr_box()).unwrap();
        assert_eq!(rep.expressions[0][0], q2(1, 2));
        assert_eq!(rep.expressions[0][1], q2(-1, 2));
        assert_eq!(rep.expressions[1][0], q2(-1, 2));
        assert_eq!(rep.expressions[1][1], q2(-1, 2));
        assert!(!rep.satisfied);
        assert_eq!(rep.max_violation, q2(1, 2));
        assert_eq!(classify(&pr_box()), BellClass::Case2PureContextuality);
    }

    #[test]
    fn uniform_independent_is_noncontextual() {
        let rep = ch_fine(&uniform_independent()).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(rep.expressions[i][j], q2(-1, 2));
            }
        }
        assert!(rep.satisfied);
        assert_eq!(classify(&uniform_independent()), BellClass::Noncontextual);
    }

    #[test]
    fn deterministic_boundary_sits_at_zero() {
        let one = || [[Q::one(), Q::one()], [Q::one(), Q::one()]];
        let zero = || [[Q::zero(), Q::zero()], [Q::zero(), Q::zero()]];
        let bs = BellSystem::new(one(), zero(), zero(), zero()).unwrap();
        let rep = ch_fine(&bs).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(rep.expressions[i][j], Q::zero());
            }
        }
        assert!(rep.satisfied);
    }

    #[test]
    fn ch_fine_symmetric_under_alice_bob_swap() {
        // swap sides: (p,q,r,s)_ij -> (p, r, q, s)_ji
        let bs = mix(&pr_box(), &uniform_independent(), &q2(1, 3));
        let t = |m: &[[Q; 2]; 2]| {
            [[m[0][0].clone(), m[1][0].clone()], [m[0][1].clone(), m[1][1].clone()]]
        };
        let swapped = BellSystem::new(t(&bs.p), t(&bs.r), t(&bs.q), t(&bs.s)).unwrap();
        let a = ch_fine(&bs).unwrap();
        let b = ch_fine(&swapped).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(a.expressions[i][j], b.expressions[j][i]);
            }
        }
    }

    #[test]
    fn pr_mixture_threshold_is_one_half() {
        // CH expression at (1,1) is lambda - 1/2; classification flips there
        let lam_star = q2(1, 2);
        for (lam, contextual) in [(q2(1, 4), false), (q2(1, 2), false), (q2(3, 4), true)] {
            let bs = mix(&pr_box(), &uniform_independent(), &lam);
            let class = classify(&bs);
            let exists = identity_coupling_exists(&bs.to_system("mix")).is_some();
            if contextual {
                assert!(lam > lam_star);
                assert_eq!(class, BellClass::Case2PureContextuality);
                assert!(!exists);
            } else {
                assert_eq!(class, BellClass::Noncontextual);
                assert!(exists);
            }
        }
    }
}
