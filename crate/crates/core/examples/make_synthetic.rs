//! Generates the bundled synthetic evaluation collection.
//!
//! Usage: `cargo run -p convsearch --example make_synthetic -- OUT_DIR`
//!
//! Writes `corpus.tsv`, `conversations.json`, `manual.tsv` and `qrels.txt`.
//! Every conversation introduces a topic, asks about several of its facets
//! without naming it again, then moves on to new topics with a cue phrase.
//! Relevant passages mention both the current topic and the facet, while
//! passages about the same facet of other topics act as distractors.

use std::fmt::Write as _;
use std::path::PathBuf;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

const SEED: u64 = 20_191_117;
const CORPUS_SIZE: usize = 2000;
const CONVERSATIONS: usize = 10;

const TOPICS: &[&str] = &[
    "tiger sharks",
    "lung cancer",
    "throat cancer",
    "solar panels",
    "honey bees",
    "coral reefs",
    "black holes",
    "electric cars",
    "green tea",
    "olive oil",
    "wind turbines",
    "snow leopards",
    "bamboo forests",
    "sea turtles",
    "desert lizards",
    "rain forests",
    "copper mines",
    "coffee beans",
    "cotton farms",
    "salmon rivers",
    "glacier lakes",
    "wheat crops",
    "oak trees",
    "grey wolves",
];

const FACETS: &[&str] = &[
    "history", "size", "diet", "cost", "risks", "benefits", "habitat", "lifespan", "causes", "threats",
];

fn copula(facet: &str) -> &'static str {
    if facet.ends_with('s') {
        "are"
    } else {
        "is"
    }
}

const FILLER: &[&str] = &[
    "people",
    "region",
    "study",
    "report",
    "experts",
    "water",
    "season",
    "number",
    "area",
    "world",
    "scientists",
    "summer",
    "winter",
    "local",
    "common",
    "large",
    "small",
    "recent",
    "early",
    "major",
    "group",
    "system",
    "level",
    "change",
    "growth",
    "energy",
    "market",
    "family",
    "city",
    "country",
    "record",
    "survey",
    "journal",
    "article",
    "museum",
    "visitors",
    "program",
    "project",
    "team",
    "data",
    "source",
    "method",
    "result",
    "factor",
    "example",
    "feature",
    "surface",
    "material",
    "design",
    "model",
    "version",
    "period",
    "decade",
    "century",
    "evidence",
    "analysis",
    "measure",
    "pattern",
    "process",
    "range",
    "light",
    "heat",
    "air",
    "soil",
    "stone",
    "metal",
    "wood",
    "glass",
    "paper",
    "plastic",
    "river",
    "mountain",
    "valley",
    "island",
    "coast",
    "village",
    "street",
    "bridge",
    "harbor",
    "station",
    "students",
    "teachers",
    "farmers",
    "workers",
    "doctors",
    "engineers",
    "travelers",
    "residents",
    "owners",
    "buyers",
    "often",
    "usually",
    "rarely",
    "widely",
    "largely",
    "mostly",
    "nearly",
    "partly",
    "fully",
    "slowly",
];

const OPENERS: &[&str] = &["Tell me about {t}.", "What are {t}?", "I want to learn about {t}."];

const SHIFTS: &[&str] = &[
    "What about {t}?",
    "Tell me about {t}.",
    "How about {t}?",
    "Tell me more about {t}.",
];

/// Follow-up templates that leave the topic implicit, paired with the
/// manual (self-contained) form.
const FOLLOWUPS: &[(&str, &str)] = &[
    ("What {be} the {f}?", "What {be} the {f} of {t}?"),
    ("What {be} its {f}?", "What {be} the {f} of {t}?"),
    ("What {be} their {f}?", "What {be} the {f} of {t}?"),
    ("Can you explain the {f}?", "Can you explain the {f} of {t}?"),
];

fn fill(template: &str, topic: &str, facet: &str) -> String {
    template
        .replace("{t}", topic)
        .replace("{f}", facet)
        .replace("{be}", copula(facet))
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next()
        .map_or_else(String::new, |f| f.to_uppercase().chain(c).collect())
}

/// A sentence of filler words with `slots` spliced in at random positions.
fn sentence(rng: &mut ChaCha8Rng, slots: &[&str], filler_words: usize) -> String {
    let mut words: Vec<String> = (0..filler_words)
        .map(|_| FILLER.choose(rng).unwrap().to_string())
        .collect();
    for slot in slots {
        let at = rng.random_range(0..=words.len());
        words.insert(at, slot.to_string());
    }
    let mut s = capitalize(&words.join(" "));
    s.push('.');
    s
}

/// Passage text built from sentences, each tuple being the terms to
/// mention in that sentence.
fn passage(rng: &mut ChaCha8Rng, sentences: &[Vec<&str>]) -> String {
    sentences
        .iter()
        .map(|slots| {
            let n = rng.random_range(5..10);
            sentence(rng, slots, n)
        })
        .collect::<Vec<_>>()
        .join(" ")
}

struct Doc {
    text: String,
    topic: Option<usize>,
    facet: Option<usize>,
    grade: u8,
}

fn make_docs(rng: &mut ChaCha8Rng) -> Vec<Doc> {
    let mut docs = Vec::new();
    for (ti, topic) in TOPICS.iter().enumerate() {
        // overview passages: the first four are relevant to an introduction
        for g in [2u8, 2, 1, 1, 0, 0] {
            let mentions = if g == 0 { 1 } else { 2 };
            let sents: Vec<Vec<&str>> = (0..4)
                .map(|i| if i < mentions { vec![*topic] } else { vec![] })
                .collect();
            docs.push(Doc {
                text: passage(rng, &sents),
                topic: Some(ti),
                facet: None,
                grade: g,
            });
        }
        for (fi, facet) in FACETS.iter().enumerate() {
            for g in [2u8, 1, 1] {
                let sents: Vec<Vec<&str>> = if g == 2 {
                    vec![vec![*topic, *facet], vec![*facet], vec![*topic, *facet], vec![]]
                } else {
                    // weaker passages name only the head word of the topic
                    let head = topic.rsplit(' ').next().unwrap();
                    vec![vec![*topic], vec![*facet], vec![head], vec![], vec![]]
                };
                docs.push(Doc {
                    text: passage(rng, &sents),
                    topic: Some(ti),
                    facet: Some(fi),
                    grade: g,
                });
            }
        }
    }
    while docs.len() < CORPUS_SIZE {
        let roll: f64 = rng.random();
        let facet = (roll < 0.35).then(|| rng.random_range(0..FACETS.len()));
        // some background passages share one word with a topic
        let partial = if roll > 0.8 {
            let t = TOPICS.choose(rng).unwrap();
            t.split(' ').collect::<Vec<_>>().choose(rng).copied()
        } else {
            None
        };
        let mut sents: Vec<Vec<&str>> = vec![vec![], vec![], vec![]];
        if let Some(f) = facet {
            sents[0].push(FACETS[f]);
            if rng.random_bool(0.5) {
                sents[2].push(FACETS[f]);
            }
        }
        if let Some(w) = partial {
            sents[1].push(w);
        }
        docs.push(Doc {
            text: passage(rng, &sents),
            topic: None,
            facet,
            grade: 0,
        });
    }
    docs
}

struct TurnSpec {
    raw: String,
    manual: String,
    topic: usize,
    facet: Option<usize>,
}

fn make_conversation(rng: &mut ChaCha8Rng, topics: &[usize]) -> Vec<TurnSpec> {
    let mut turns = Vec::new();
    for (i, &t) in topics.iter().enumerate() {
        let topic = TOPICS[t];
        let intro = if i == 0 {
            OPENERS.choose(rng).unwrap()
        } else {
            SHIFTS.choose(rng).unwrap()
        };
        turns.push(TurnSpec {
            raw: fill(intro, topic, ""),
            manual: fill(intro, topic, ""),
            topic: t,
            facet: None,
        });
        let n = if i + 1 == topics.len() { 2 } else { 3 };
        let mut facets: Vec<usize> = (0..FACETS.len()).collect();
        facets.shuffle(rng);
        for &f in &facets[..n] {
            let (raw, manual) = FOLLOWUPS.choose(rng).unwrap();
            turns.push(TurnSpec {
                raw: fill(raw, topic, FACETS[f]),
                manual: fill(manual, topic, FACETS[f]),
                topic: t,
                facet: Some(f),
            });
        }
    }
    turns
}

fn main() -> std::io::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).expect("usage: make_synthetic OUT_DIR"));
    std::fs::create_dir_all(&out)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    let mut docs = make_docs(&mut rng);
    docs.shuffle(&mut rng);
    let ids: Vec<String> = (0..docs.len()).map(|i| format!("syn_{i:05}")).collect();

    let mut corpus = String::new();
    for (id, d) in ids.iter().zip(&docs) {
        writeln!(corpus, "{id}\t{}", d.text).unwrap();
    }
    std::fs::write(out.join("corpus.tsv"), corpus)?;

    let mut conv_json = Vec::new();
    let mut manual = String::new();
    let mut qrels = String::new();
    let mut order: Vec<usize> = (0..TOPICS.len()).collect();
    for c in 0..CONVERSATIONS {
        let conv_id = 31 + c;
        // the first conversation moves from one cancer to a related one
        let topics: Vec<usize> = if c == 0 {
            vec![1, 2, 5]
        } else {
            order.shuffle(&mut rng);
            order[..3].to_vec()
        };
        let turns = make_conversation(&mut rng, &topics);
        let mut jturns = Vec::new();
        for (i, t) in turns.iter().enumerate() {
            let turn_id = format!("{conv_id}_{}", i + 1);
            jturns.push(json!({"number": i + 1, "raw_utterance": t.raw}));
            writeln!(manual, "{turn_id}\t{}", t.manual).unwrap();
            for (id, d) in ids.iter().zip(&docs) {
                // judge the topic's own passages, same-facet passages of
                // other topics, and a sample of same-facet background
                let judged = match d.topic {
                    Some(dt) if dt == t.topic => true,
                    Some(_) => t.facet.is_some() && d.facet == t.facet,
                    None => t.facet.is_some() && d.facet == t.facet && id.ends_with('0'),
                };
                if !judged {
                    continue;
                }
                let grade = match (d.topic == Some(t.topic), t.facet) {
                    (true, Some(_)) if d.facet == t.facet => d.grade,
                    // a facet passage says something about its topic
                    (true, None) => {
                        if d.facet.is_some() {
                            1
                        } else {
                            d.grade
                        }
                    }
                    _ => 0,
                };
                writeln!(qrels, "{turn_id} 0 {id} {grade}").unwrap();
            }
        }
        conv_json.push(json!({"number": conv_id, "turn": jturns}));
    }
    std::fs::write(
        out.join("conversations.json"),
        serde_json::to_string_pretty(&conv_json).unwrap() + "\n",
    )?;
    std::fs::write(out.join("manual.tsv"), manual)?;
    std::fs::write(out.join("qrels.txt"), qrels)?;
    Ok(())
}
