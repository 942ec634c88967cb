//! Deterministic fixture generators shared by the integration targets.
//!
//! Text fixtures are committed under `tests/fixtures/`; setting
//! `SHOWPROG_BLESS=1` rewrites them from these generators. Page images are
//! regenerated on every run instead of being committed.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use showprog::imaging::save_page_png;
use showprog::synthetic::{programme_page, uniform_spread, SubpageLayout, SyntheticPage};
use showprog::triples::{synthetic_trace, StepShape};

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn blessing() -> bool {
    std::env::var("SHOWPROG_BLESS").is_ok_and(|v| v == "1")
}

/// Every regular file under `root`, keyed by its relative path.
pub fn tree_files(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        let Ok(entries) = fs::read_dir(dir) else { return };
        for e in entries.flatten() {
            let p = e.path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

pub fn copy_tree(src: &Path, dst: &Path) {
    for (rel, bytes) in tree_files(src) {
        let to = dst.join(rel);
        fs::create_dir_all(to.parent().unwrap()).unwrap();
        fs::write(to, bytes).unwrap();
    }
}

fn write(path: &Path, text: impl AsRef<[u8]>) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(path, text).unwrap();
}

// --- programme text ----------------------------------------------------------

const WORDS: &[&str] = &[
    "théâtre", "spectacle", "création", "compagnie", "représentation", "mise", "scène", "avec", "lumières",
    "décor", "costumes", "musique", "texte", "traduction", "production", "coproduction", "festival", "cour",
    "honneur", "palais", "papes", "cloître", "carmes", "soirée", "durée", "entracte", "remerciements",
    "soutien", "ministère", "culture", "ville", "région", "direction", "assistant", "régie", "générale",
    "son", "vidéo", "chorégraphie", "danseurs", "comédiens", "orchestre", "chant", "premier", "acte",
    "tableau", "prologue", "épilogue", "juillet", "août", "heures", "minutes", "billetterie", "location",
    "place", "tarif", "réduit", "programme", "édition", "public", "jeune", "auteur", "poète", "roman",
    "pièce", "tragédie", "comédie", "drame", "nuit", "jour", "mer", "ville", "amour", "guerre", "mémoire",
    "de", "la", "le", "les", "du", "des", "et", "en", "un", "une", "pour", "par", "sur", "dans",
];

const NAMES: &[&str] = &[
    "Jean Vilar", "Maria Casarès", "Gérard Philipe", "Ariane Mnouchkine", "Antoine Vitez", "Patrice Chéreau",
    "Pina Bausch", "Peter Brook", "Jeanne Moreau", "Daniel Mesguich", "Claude Régy", "Sylvie Guillem",
];

fn sentence(rng: &mut ChaCha8Rng, words: usize) -> String {
    let mut s: Vec<String> = (0..words).map(|_| WORDS[rng.random_range(0..WORDS.len())].to_string()).collect();
    let mut first = s[0].chars();
    let head = first.next().unwrap().to_uppercase().collect::<String>();
    s[0] = head + first.as_str();
    let mut out = s.join(" ");
    if rng.random_bool(0.6) {
        out.push('.');
    }
    out
}

/// A programme page in the transcription markdown format: a title, a credit
/// line and a few paragraphs.
pub fn programme_text(rng: &mut ChaCha8Rng) -> String {
    let mut out = String::new();
    let n = rng.random_range(2..5);
    let title = sentence(rng, n);
    out.push_str(&format!("# {}\n", title.trim_end_matches('.')));
    out.push_str(&format!("Mise en scène : {}\n", NAMES[rng.random_range(0..NAMES.len())]));
    for _ in 0..rng.random_range(5..9) {
        let n = rng.random_range(8..16);
        out.push_str(&sentence(rng, n));
        out.push('\n');
    }
    out
}

/// OCR-like corruption: each word is hit with probability `word_p`; inside a
/// hit word each character is substituted, dropped or doubled with
/// probability `char_p` (at least one edit per hit word).
pub fn degrade(text: &str, rng: &mut ChaCha8Rng, word_p: f64, char_p: f64) -> String {
    const GLYPHS: &[&str] = &["l", "1", "I", "c", "e", "o", "0", "rn", "m", "n", "u", "v", "a"];
    let mut out = String::new();
    for line in text.lines() {
        let (prefix, body) = match line.strip_prefix("# ") {
            Some(rest) => ("# ", rest),
            None => ("", line),
        };
        let words: Vec<String> = body
            .split(' ')
            .map(|w| {
                if w.is_empty() || !rng.random_bool(word_p) {
                    return w.to_string();
                }
                let chars: Vec<char> = w.chars().collect();
                let forced = rng.random_range(0..chars.len());
                let mut s = String::new();
                for (i, &c) in chars.iter().enumerate() {
                    if i != forced && !rng.random_bool(char_p) {
                        s.push(c);
                        continue;
                    }
                    match rng.random_range(0..4) {
                        0 | 1 => s.push_str(GLYPHS[rng.random_range(0..GLYPHS.len())]),
                        2 => {}
                        _ => {
                            s.push(c);
                            s.push(c);
                        }
                    }
                }
                s
            })
            .collect();
        out.push_str(prefix);
        out.push_str(&words.join(" "));
        out.push('\n');
    }
    out
}

// --- degradation corpus -------------------------------------------------------

pub const DEGRADATION_WORD_P: f64 = 0.2;
pub const DEGRADATION_CHAR_P: f64 = 0.5;

/// `reference/<doc>/<page>.md` and `hypothesis/<doc>/<page>.md` for 8
/// documents of 5 pages.
pub fn write_degradation_corpus(dir: &Path) {
    let mut rng = ChaCha8Rng::seed_from_u64(0xdeca_de);
    for d in 0..8 {
        for p in 0..5 {
            let reference = programme_text(&mut rng);
            let hypothesis = degrade(&reference, &mut rng, DEGRADATION_WORD_P, DEGRADATION_CHAR_P);
            let doc = format!("doc-{d:02}");
            write(&dir.join("reference").join(&doc).join(format!("{p}.md")), &reference);
            write(&dir.join("hypothesis").join(&doc).join(format!("{p}.md")), &hypothesis);
        }
    }
}

// --- end-to-end corpus ----------------------------------------------------------

/// One document of the end-to-end corpus with its expected segmentation.
pub struct E2eDoc {
    pub doc_id: &'static str,
    pub year: i32,
    pub born_digital: bool,
    /// Subpage layouts per physical page.
    pub pages: Vec<Vec<SubpageLayout>>,
}

impl E2eDoc {
    pub fn expected_subpages(&self) -> usize {
        self.pages.iter().map(Vec::len).sum()
    }
}

fn two_columns(width: u32) -> SubpageLayout {
    let m = width / 10;
    let gutter = width / 6;
    let mid = width / 2;
    SubpageLayout {
        width,
        columns: vec![(m, mid - gutter / 2), (mid + gutter / 2, width - m)],
    }
}

/// Reference widths of the bundled table: 1975 → 715, 1980 → 1068,
/// 2010 → 877, 2015 → 800.
pub fn e2e_docs() -> Vec<E2eDoc> {
    let single = |w: u32| SubpageLayout::single(w, w / 10, w / 9);
    vec![
        E2eDoc {
            doc_id: "prog-1975-a",
            year: 1975,
            born_digital: false,
            pages: vec![vec![single(715), single(715)], vec![single(715), single(715)]],
        },
        // two-column subpages: the gutters are detected first and then merged
        E2eDoc {
            doc_id: "prog-1980-b",
            year: 1980,
            born_digital: false,
            pages: vec![vec![two_columns(1068), two_columns(1068)]],
        },
        // a blank back page the first phase cannot cut off
        E2eDoc {
            doc_id: "prog-2010-c",
            year: 2010,
            born_digital: false,
            pages: vec![vec![single(877), single(877), SubpageLayout::blank(877)]],
        },
        E2eDoc {
            doc_id: "prog-2015-d",
            year: 2015,
            born_digital: true,
            pages: vec![vec![single(800), single(800), single(800), single(800)]],
        },
    ]
}

pub const E2E_HEIGHT: u32 = 480;
/// Page refused with the standard prompt by the stub service.
pub const E2E_REFUSED: &str = "prog-1980-b/1";

pub const E2E_CONFIG: &str = r#"[transcription.endpoint]
poll_interval_secs = 0.01
poll_jitter = 0.0
timeout_secs = 120.0
retry_backoff_secs = 0.0

[transcription.stub]
canned_dir = "canned"
refuse_standard = ["prog-1980-b/1"]
polls_to_complete = 1

[steps]
problems = 4
drafts = 8
"#;

/// Committed text inputs: configuration, manifest, ground truth, canned
/// service answers, drafts and a short step trace.
pub fn write_e2e_inputs(dir: &Path) {
    write(&dir.join("showprog.toml"), E2E_CONFIG);
    let mut manifest = String::from("doc_id,year,born_digital\n");
    for d in e2e_docs() {
        manifest.push_str(&format!("{},{},{}\n", d.doc_id, d.year, d.born_digital));
    }
    write(&dir.join("documents.csv"), manifest);

    let mut rng = ChaCha8Rng::seed_from_u64(0xe2e);
    for d in e2e_docs() {
        for i in 0..d.expected_subpages() {
            let truth = programme_text(&mut rng);
            // the first page of each document comes back verbatim
            let answer = if i == 0 { truth.clone() } else { degrade(&truth, &mut rng, 0.08, 0.4) };
            write(&dir.join("ground_truth").join(d.doc_id).join(format!("{i}.md")), &truth);
            write(&dir.join("canned").join(d.doc_id).join(format!("{i}.md")), answer);
        }
    }

    let draft = fs::read_to_string(fixtures_dir().join("sample_draft.txt")).unwrap();
    write(&dir.join("drafts/coquin-de-coq.txt"), draft);
    write(&dir.join("drafts/absalon.txt"), ABSALON_DRAFT);
    write(&dir.join("drafts/unknown-property.txt"), UNKNOWN_PROPERTY_DRAFT);

    let trace = synthetic_trace(12, StepShape::default(), 11);
    trace.save(&dir.join("steps")).unwrap();
}

pub const ABSALON_DRAFT: &str = "<|data_start|>
<|subject|>Absalon, Absalon !
<|property|>title<|object|>{'text': 'Absalon, Absalon !', 'language': 'fr'}
<|property|>director<|object|>Séverine Chavrier
<|property|>author<|object|>William Faulkner
<|property|>date of first performance<|object|>26 juin 2024
<|property|>stated in<|object|>Festival d'Avignon 2024 programme
<|data_end|>
";

pub const UNKNOWN_PROPERTY_DRAFT: &str = "<|data_start|>
<|subject|>Le Prince de Hombourg
<|property|>title<|object|>Le Prince de Hombourg
<|property|>publisher<|object|>TNP
<|data_end|>
";

/// Render the page images of the end-to-end corpus into `images/`.
pub fn write_e2e_images(dir: &Path) -> Vec<SyntheticPage> {
    let mut pages = Vec::new();
    for (di, d) in e2e_docs().iter().enumerate() {
        for (pi, layouts) in d.pages.iter().enumerate() {
            let page = programme_page(d.doc_id, pi, E2E_HEIGHT, layouts, 100 * di as u64 + pi as u64);
            save_page_png(&dir.join("images").join(d.doc_id).join(format!("{pi}.png")), &page.page).unwrap();
            pages.push(page);
        }
    }
    pages
}

/// A full working copy of the end-to-end corpus in `dir`.
pub fn e2e_workspace(dir: &Path) {
    copy_tree(&fixtures_dir().join("e2e/input"), dir);
    write_e2e_images(dir);
}

// --- segmentation fixtures --------------------------------------------------------

/// `n` subpages of `width` whose text sits in two columns.
pub fn over_segmented(doc_id: &str, n: usize, width: u32, height: u32, seed: u64) -> SyntheticPage {
    let layouts: Vec<SubpageLayout> = (0..n).map(|_| two_columns(width)).collect();
    programme_page(doc_id, 0, height, &layouts, seed)
}

/// `n` subpages of `width`; the last `blank` of them carry no text.
pub fn under_segmented(doc_id: &str, n: usize, blank: usize, width: u32, height: u32, seed: u64) -> SyntheticPage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layouts: Vec<SubpageLayout> = (0..n)
        .map(|i| {
            if i + blank >= n {
                SubpageLayout::blank(width)
            } else {
                SubpageLayout::single(width, rng.random_range(width / 12..width / 8), rng.random_range(width / 12..width / 8))
            }
        })
        .collect();
    programme_page(doc_id, 0, height, &layouts, seed)
}

pub fn uniform(doc_id: &str, n: usize, width: u32, height: u32, seed: u64) -> SyntheticPage {
    uniform_spread(doc_id, 0, n, width, height, seed)
}
