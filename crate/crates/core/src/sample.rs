//! Seeded generators: random systems for property checks and i.i.d. trial
//! sampling from a known system.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::bell::BellSystem;
use crate::ingest::TrialRecord;
use crate::rational::Q;
use crate::system::{product_support, System};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random exact pmf over `cells` outcomes: integer weights up to
/// `max_weight`, normalized. Zero cells are possible.
pub fn random_pmf(rng: &mut ChaCha8Rng, cells: usize, max_weight: u32) -> Vec<Q> {
    loop {
        let weights: Vec<i64> = (0..cells).map(|_| rng.gen_range(0..=max_weight) as i64).collect();
        let total: i64 = weights.iter().sum();
        if total > 0 {
            return weights.into_iter().map(|w| Q::new(w, total)).collect();
        }
    }
}

fn cell_from(masses: &[Q]) -> ([[Q; 2]; 2], [[Q; 2]; 2], [[Q; 2]; 2], [[Q; 2]; 2]) {
    // masses laid out context-major: (p,q,r,s) for (1,1),(1,2),(2,1),(2,2)
    let zero = || [[Q::zero(), Q::zero()], [Q::zero(), Q::zero()]];
    let (mut p, mut q, mut r, mut s) = (zero(), zero(), zero(), zero());
    for (k, (i, j)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
        p[i][j] = masses[4 * k].clone();
        q[i][j] = masses[4 * k + 1].clone();
        r[i][j] = masses[4 * k + 2].clone();
        s[i][j] = masses[4 * k + 3].clone();
    }
    (p, q, r, s)
}

/// Four independent random context pmfs; generically signaling.
pub fn random_bell_system(rng: &mut ChaCha8Rng) -> BellSystem {
    let mut masses = Vec::with_capacity(16);
    for _ in 0..4 {
        masses.extend(random_pmf(rng, 4, 12));
    }
    let (p, q, r, s) = cell_from(&masses);
    BellSystem::new(p, q, r, s).expect("normalized by construction")
}

/// Contexts generated as marginals of one random joint over
/// (A1, A2, B1, B2): noncontextual by construction.
pub fn noncontextual_bell_system(rng: &mut ChaCha8Rng) -> BellSystem {
    let joint = random_pmf(rng, 16, 12); // atoms (a1, a2, b1, b2), last fastest
    let bit = |atom: usize, pos: usize| (atom >> (3 - pos)) & 1; // 0 => +1
    let mut masses = Vec::with_capacity(16);
    for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let m: Q = (0..16)
                .filter(|&atom| bit(atom, i) == a && bit(atom, 2 + j) == b)
                .map(|atom| joint[atom].clone())
                .sum();
            masses.push(m);
        }
    }
    let (p, q, r, s) = cell_from(&masses);
    BellSystem::new(p, q, r, s).expect("marginals of a pmf")
}

/// A random no-signaling Bell system: a mixture of a noncontextual one
/// with the PR box, which can land on either side of the CH/Fine boundary.
pub fn random_nosignaling_bell_system(rng: &mut ChaCha8Rng) -> BellSystem {
    let base = noncontextual_bell_system(rng);
    let lambda = Q::new(rng.gen_range(0..=16), 16);
    crate::bell::mix(&crate::bell::pr_box(), &base, &lambda)
}

/// `per_context` i.i.d. trials from every context of the system, seeded.
/// Sampling uses f64 inverse-cdf over the exact masses; estimation from
/// the output remains exact.
pub fn sample_trials(system: &System, per_context: usize, seed: u64) -> Vec<TrialRecord> {
    let mut rng = rng(seed);
    let mut out = Vec::with_capacity(per_context * system.contexts.len());
    for ctx in &system.contexts {
        let weights: Vec<f64> = ctx.pmf.masses().iter().map(Q::to_f64).collect();
        for _ in 0..per_context {
            let mut u: f64 = rng.gen();
            let mut idx = ctx.pmf.len() - 1;
            for (i, w) in weights.iter().enumerate() {
                if u < *w {
                    idx = i;
                    break;
                }
                u -= w;
            }
            out.push(TrialRecord {
                context: ctx.id.clone(),
                values: ctx.pmf.support()[idx].clone(),
            });
        }
    }
    out
}

/// Random multi-context systems over shared binary contents, for existence
/// sweeps beyond the 2x2 shape. Generically signaling.
pub fn random_small_system(rng: &mut ChaCha8Rng, name: &str) -> System {
    use crate::system::{build_system, ContentSpec, ContextSpec, PmfEntry, SystemSpec};
    let ncontents = rng.gen_range(2..=3usize);
    let contents: Vec<ContentSpec> = (0..ncontents)
        .map(|i| ContentSpec {
            id: format!("X{i}"),
            outcomes: vec!["0".into(), "1".into()],
        })
        .collect();
    let ncontexts = rng.gen_range(2..=3usize);
    let contexts: Vec<ContextSpec> = (0..ncontexts)
        .map(|k| {
            let mut ids: Vec<usize> = (0..ncontents).collect();
            ids.shuffle(rng);
            let take = rng.gen_range(1..=ncontents.min(2));
            let chosen: Vec<String> = ids[..take].iter().map(|i| format!("X{i}")).collect();
            let alphabets: Vec<&[String]> = chosen
                .iter()
                .map(|c| contents.iter().find(|x| x.id == *c).unwrap().outcomes.as_slice())
                .collect();
            let support = product_support(&alphabets);
            let masses = random_pmf(rng, support.len(), 8);
            ContextSpec {
                id: format!("c{k}"),
                contents: chosen,
                pmf: support
                    .into_iter()
                    .zip(masses)
                    .map(|(values, p)| PmfEntry { values, p })
                    .collect(),
            }
        })
        .collect();
    let spec = SystemSpec {
        name: name.into(),
        contents,
        contexts,
        identity_classes: None,
    };
    build_system(&spec).expect("generated spec is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{classify, marginal_selectivity, BellClass};
    use crate::coupling::identity_coupling_exists;

    #[test]
    fn noncontextual_family_is_nosignaling_and_couplable() {
        let mut rng = rng(7);
        for _ in 0..25 {
            let bs = noncontextual_bell_system(&mut rng);
            assert!(marginal_selectivity(&bs).pass);
            assert_eq!(classify(&bs), BellClass::Noncontextual);
            assert!(identity_coupling_exists(&bs.to_system("gen")).is_some());
        }
    }

    #[test]
    fn sampling_approaches_truth_in_tv() {
        use crate::ingest::{estimate_system, Design, DesignContext};
        let sys = crate::bell::pr_box().to_system("prbox");
        let trials = sample_trials(&sys, 10_000, 42);
        let design = Design {
            name: "prbox".into(),
            contents: sys
                .contents
                .iter()
                .map(|c| crate::system::ContentSpec {
                    id: c.id.clone(),
                    outcomes: c.outcomes.clone(),
                })
                .collect(),
            contexts: sys
                .contexts
                .iter()
                .map(|c| DesignContext {
                    id: c.id.clone(),
                    contents: c.contents.clone(),
                })
                .collect(),
        };
        let (est, _) = estimate_system(&trials, &design).unwrap();
        for (a, b) in sys.contexts.iter().zip(&est.contexts) {
            let tv = a.pmf.total_variation(&b.pmf);
            assert!(tv < Q::new(1, 20), "tv {tv} too large at N=10^4");
        }
    }
}
