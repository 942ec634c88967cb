//! Deterministic synthetic training trace: drafts whose formal pass rate and
//! content quality both improve over the steps, for replaying step scoring.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::draft::{parse_draft, Draft, DraftTriple, ObjectValue};
use super::step::{StepBatch, StepShape};
use super::TriplesError;

const TITLES: [&str; 8] = [
    "La Mouette",
    "Le Cid",
    "Fin de partie",
    "Les Bonnes",
    "Britannicus",
    "Le Prince de Hombourg",
    "Mère Courage",
    "La Cerisaie",
];
const PEOPLE: [&str; 8] = [
    "Jeanne Marchal",
    "Paul Girard",
    "Nadia Berthier",
    "Louis Féraud",
    "Anne Roussel",
    "Marc Delorme",
    "Claire Vasseur",
    "Hugo Lemaire",
];
const COMPANIES: [&str; 4] = [
    "Compagnie du Rempart",
    "Théâtre des Halles",
    "Compagnie Lune Rousse",
    "Théâtre du Chêne",
];
const MONTHS: [&str; 3] = ["juillet", "juin", "août"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticTrace {
    pub shape: StepShape,
    pub ground_truths: BTreeMap<String, Draft>,
    pub batches: Vec<StepBatch>,
}

fn truth(i: usize) -> Draft {
    let t = |s: &str| ObjectValue::Text(s.to_string());
    let title = TITLES[i % TITLES.len()];
    Draft::new(
        title,
        vec![
            (
                "title",
                ObjectValue::Lang {
                    text: title.to_string(),
                    language: "fr".into(),
                },
            ),
            ("instance of", t("Works")),
            ("director", t(PEOPLE[i % PEOPLE.len()])),
            ("author", t(PEOPLE[(i * 3 + 1) % PEOPLE.len()])),
            ("production company", t(COMPANIES[i % COMPANIES.len()])),
            (
                "date of first performance",
                t(&format!("{} {} {}", 1 + i * 5 % 28, MONTHS[i % 3], 1970 + i)),
            ),
            ("stated in", t(&format!("{title} show programme"))),
        ],
    )
}

/// Damage `d` so it fails the formal gate.
fn break_formally(d: &mut Draft, rng: &mut ChaCha8Rng) {
    if rng.random_bool(0.5) {
        d.triples.push(DraftTriple {
            property: "publisher".into(),
            object: ObjectValue::Text("Éditions du Seuil".into()),
        });
    } else {
        let k = rng.random_range(0..d.triples.len());
        let dup = d.triples[k].clone();
        d.triples.push(dup);
    }
}

/// Truncate, drop or replace each field with probability `p`.
fn degrade(d: &mut Draft, p: f64, rng: &mut ChaCha8Rng) {
    let mut kept = Vec::new();
    for mut t in std::mem::take(&mut d.triples) {
        if rng.random_bool(p) {
            match rng.random_range(0..3) {
                0 => continue,
                1 => {
                    let words: Vec<&str> = t.object.text().split(' ').collect();
                    let short = words[..words.len().div_ceil(2)].join(" ");
                    t.object = ObjectValue::Text(short);
                }
                _ => t.object = ObjectValue::Text(PEOPLE[rng.random_range(0..PEOPLE.len())].to_string()),
            }
        }
        kept.push(t);
    }
    if kept.is_empty() {
        kept.push(DraftTriple {
            property: "title".into(),
            object: ObjectValue::Text(d.subject.clone()),
        });
    }
    d.triples = kept;
}

/// `steps` steps of `shape` over a pool of 12 problems. The formal pass rate
/// ramps from 0 to about 0.97 over the first half; field corruption falls
/// from 70% to 5% over the whole run.
pub fn synthetic_trace(steps: usize, shape: StepShape, seed: u64) -> SyntheticTrace {
    const POOL: usize = 12;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ground_truths: BTreeMap<String, Draft> = (0..POOL).map(|i| (format!("prog-{i:02}"), truth(i))).collect();
    let ids: Vec<String> = ground_truths.keys().cloned().collect();
    let mut batches = Vec::with_capacity(steps);
    for s in 0..steps {
        let x = if steps > 1 { s as f64 / (steps - 1) as f64 } else { 1.0 };
        let pass = ((x - 0.05) / 0.45).clamp(0.0, 1.0) * 0.97;
        let corrupt = 0.7 - 0.65 * x;
        let problems: Vec<String> = (0..shape.problems).map(|i| ids[(s * shape.problems + i) % POOL].clone()).collect();
        let drafts = problems
            .iter()
            .map(|p| {
                (0..shape.drafts)
                    .map(|_| {
                        let mut d = ground_truths[p].clone();
                        d.thinking = format!("step {s}");
                        degrade(&mut d, corrupt, &mut rng);
                        if !rng.random_bool(pass) {
                            break_formally(&mut d, &mut rng);
                        }
                        d.render()
                    })
                    .collect()
            })
            .collect();
        batches.push(StepBatch {
            step_index: s as u64,
            problems,
            drafts,
            scores: Vec::new(),
        });
    }
    SyntheticTrace {
        shape,
        ground_truths,
        batches,
    }
}

impl SyntheticTrace {
    /// Write `truths/<id>.txt` and `steps.jsonl` under `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), TriplesError> {
        for (id, d) in &self.ground_truths {
            crate::fsutil::write_if_changed(&dir.join("truths").join(format!("{id}.txt")), d.render().as_bytes())?;
        }
        let mut lines = String::new();
        for b in &self.batches {
            lines.push_str(&serde_json::to_string(b).map_err(|e| TriplesError::InvalidInput(e.to_string()))?);
            lines.push('\n');
        }
        crate::fsutil::write_if_changed(&dir.join("steps.jsonl"), lines.as_bytes())?;
        Ok(())
    }

    /// Read a trace written by [`SyntheticTrace::save`] (or by hand).
    pub fn load(dir: &Path, shape: StepShape) -> Result<Self, TriplesError> {
        let mut ground_truths = BTreeMap::new();
        let truths = dir.join("truths");
        let mut paths: Vec<_> = std::fs::read_dir(&truths)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "txt"))
            .collect();
        paths.sort();
        for p in paths {
            let id = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            ground_truths.insert(id, parse_draft(&std::fs::read_to_string(&p)?)?);
        }
        let mut batches = Vec::new();
        for (n, line) in std::fs::read_to_string(dir.join("steps.jsonl"))?.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            batches.push(
                serde_json::from_str(line)
                    .map_err(|e| TriplesError::InvalidInput(format!("steps.jsonl:{}: {e}", n + 1)))?,
            );
        }
        Ok(Self {
            shape,
            ground_truths,
            batches,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_complete() {
        let a = synthetic_trace(20, StepShape::default(), 7);
        assert_eq!(a, synthetic_trace(20, StepShape::default(), 7));
        assert_ne!(a.batches, synthetic_trace(20, StepShape::default(), 8).batches);
        for b in &a.batches {
            assert_eq!(b.drafts.len(), 4);
            assert!(b.drafts.iter().all(|g| g.len() == 8));
            assert!(b.drafts.iter().flatten().all(|d| parse_draft(d).is_ok()));
        }
    }

    #[test]
    fn save_load() {
        let dir = tempfile::tempdir().unwrap();
        let t = synthetic_trace(3, StepShape::default(), 1);
        t.save(dir.path()).unwrap();
        assert_eq!(SyntheticTrace::load(dir.path(), StepShape::default()).unwrap(), t);
    }
}
