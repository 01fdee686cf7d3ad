//! Signed quasi-couplings.
//!
//! A quasi-coupling assigns one (possibly negative) mass per tuple of
//! class values so that every context marginal is reproduced exactly and
//! the masses sum to 1. It exists iff no-signaling holds; when an identity
//! coupling exists it coincides with a true reduced coupling. Among all
//! quasi-couplings we return one of minimal total negative mass.

use crate::lp::{solve_optimize, Direction, LinearProgram, LpOutcome};
use crate::rational::Q;
use crate::system::{product_support, System, VariableId};

/// A real-valued mass function over value tuples, summing to exactly 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedMeasure {
    pub support: Vec<Vec<String>>,
    pub masses: Vec<Q>,
}

impl SignedMeasure {
    pub fn mass_of(&self, tuple: &[String]) -> Q {
        self.support
            .iter()
            .position(|t| t[..] == *tuple)
            .map(|i| self.masses[i].clone())
            .unwrap_or_else(Q::zero)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuasiResult {
    pub classes: Vec<String>,
    pub measure: SignedMeasure,
    /// Total absolute negative mass; zero iff the measure is a pmf.
    pub negativity: Q,
}

/// Sum of absolute values of the negative masses.
pub fn negativity(m: &SignedMeasure) -> Q {
    m.masses
        .iter()
        .filter(|x| x.is_negative())
        .map(Q::abs)
        .sum()
}

/// Min-negativity quasi-coupling over one variable per identity class, or
/// `None` when none exists (exactly the signaling case). Masses are split
/// into nonnegative positive/negative parts and the total negative part is
/// minimized, so the objective value is the measure's negativity.
pub fn quasi_coupling(system: &System) -> Option<QuasiResult> {
    let class_of = |v: &VariableId| -> usize {
        system
            .classes
            .iter()
            .position(|c| c.members.contains(v))
            .expect("classes partition the variables")
    };
    let alphabets: Vec<&[String]> = system.classes.iter().map(|c| c.outcomes.as_slice()).collect();
    let support = product_support(&alphabets);
    let n = support.len();
    // variables: n positive parts, then n negative parts
    let mut lp = LinearProgram::new(2 * n);
    for ctx in &system.contexts {
        let classes: Vec<usize> = ctx
            .contents
            .iter()
            .map(|c| {
                class_of(&VariableId {
                    content: c.clone(),
                    context: ctx.id.clone(),
                })
            })
            .collect();
        for (tuple, mass) in ctx.pmf.iter() {
            let mut row = vec![Q::zero(); 2 * n];
            for (i, atom) in support.iter().enumerate() {
                if classes.iter().enumerate().all(|(k, &cl)| atom[cl] == tuple[k]) {
                    row[i] = Q::one();
                    row[n + i] = -Q::one();
                }
            }
            lp.eq(row, mass.clone());
        }
    }
    let mut obj = vec![Q::zero(); 2 * n];
    for v in obj.iter_mut().skip(n) {
        *v = Q::one();
    }
    lp.objective = Some((obj, Direction::Minimize));
    match solve_optimize(&lp).expect("well-formed program") {
        LpOutcome::Optimal { point, value } => {
            let masses: Vec<Q> = (0..n).map(|i| &point[i] - &point[n + i]).collect();
            let measure = SignedMeasure { support, masses };
            debug_assert_eq!(negativity(&measure), value);
            Some(QuasiResult {
                classes: system.classes.iter().map(|c| c.id.clone()).collect(),
                measure,
                negativity: value,
            })
        }
        LpOutcome::Infeasible => None,
        other => unreachable!("bounded program returned {other:?}"),
    }
}

/// Signed re-marginalization check: the measure's induced marginal in each
/// context must equal the context pmf exactly.
pub fn verify_quasi(result: &QuasiResult, system: &System) -> bool {
    let class_of = |v: &VariableId| -> usize {
        system
            .classes
            .iter()
            .position(|c| c.members.contains(v))
            .expect("classes partition the variables")
    };
    let total: Q = result.measure.masses.iter().sum();
    if total != Q::one() {
        return false;
    }
    system.contexts.iter().all(|ctx| {
        let classes: Vec<usize> = ctx
            .contents
            .iter()
            .map(|c| {
                class_of(&VariableId {
                    content: c.clone(),
                    context: ctx.id.clone(),
                })
            })
            .collect();
        ctx.pmf.iter().all(|(tuple, want)| {
            let got: Q = result
                .measure
                .support
                .iter()
                .zip(&result.measure.masses)
                .filter(|(atom, _)| classes.iter().enumerate().all(|(k, &cl)| atom[cl] == tuple[k]))
                .map(|(_, m)| m)
                .sum();
            &got == want
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{pr_box, uniform_independent};
    use crate::coupling::identity_coupling_exists;

    #[test]
    fn negativity_of_plain_and_signed_measures() {
        let m = SignedMeasure {
            support: vec![vec!["a".into()], vec!["b".into()]],
            masses: vec![Q::new(1, 2), Q::new(1, 2)],
        };
        assert_eq!(negativity(&m), Q::zero());
        let m = SignedMeasure {
            support: vec![vec!["a".into()], vec!["b".into()]],
            masses: vec![Q::new(3, 2), Q::new(-1, 2)],
        };
        assert_eq!(negativity(&m), Q::new(1, 2));
    }

    #[test]
    fn noncontextual_system_gets_zero_negativity() {
        let sys = uniform_independent().to_system("uniform");
        let res = quasi_coupling(&sys).expect("no-signaling system");
        assert_eq!(res.negativity, Q::zero());
        assert!(verify_quasi(&res, &sys));
        assert!(res.measure.masses.iter().all(|m| !m.is_negative()));
        assert!(identity_coupling_exists(&sys).is_some());
    }

    #[test]
    fn pr_box_quasi_exists_with_positive_negativity() {
        let sys = pr_box().to_system("prbox");
        let res = quasi_coupling(&sys).expect("PR box is no-signaling");
        assert!(res.negativity.is_positive());
        assert!(verify_quasi(&res, &sys));
        assert_eq!(negativity(&res.measure), res.negativity);
    }

    #[test]
    fn signaling_system_has_no_quasi_coupling() {
        let mut bs = pr_box();
        bs.p[0][0] = Q::new(3, 4);
        bs.s[0][0] = Q::new(1, 4);
        bs.q[0][0] = Q::zero();
        bs.r[0][0] = Q::zero();
        let sys = bs.to_system("signal");
        assert!(!crate::system::check_no_signaling(&sys).pass);
        assert!(quasi_coupling(&sys).is_none());
    }
}
