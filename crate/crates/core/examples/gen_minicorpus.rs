//! Regenerates the bundled mini-corpora under `data/mini/`.
//!
//! Sentences come from a small hand-written grammar, so every annotation
//! layer (two segmentation granularities, POS tags, entities, dependency
//! trees) is consistent by construction.
//!
//! ```sh
//! cargo run -p hanforge --example gen_minicorpus -- crates/core/data/mini
//! ```

use std::fmt::Write as _;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// One coarse-grained word. `pieces` is its fine-grained split.
#[derive(Clone)]
struct Word {
    pieces: Vec<&'static str>,
    pos: &'static str,
    entity: Option<&'static str>,
    head: usize,
    rel: &'static str,
}

fn word(pieces: &[&'static str], pos: &'static str) -> Word {
    Word {
        pieces: pieces.to_vec(),
        pos,
        entity: None,
        head: 0,
        rel: "",
    }
}

impl Word {
    fn form(&self) -> String {
        self.pieces.concat()
    }

    fn ent(mut self, e: &'static str) -> Self {
        self.entity = Some(e);
        self
    }
}

const SURNAMES: &[&str] = &["张", "王", "李", "刘", "陈", "杨", "赵", "黄", "周", "吴"];
const GIVEN: &[&str] = &["伟", "芳", "娜", "敏", "静", "磊", "洋", "勇", "杰", "丽"];
const PLACES: &[&str] = &["北京", "上海", "南京", "广州", "杭州", "成都", "武汉", "西安", "天津", "重庆"];
const INSTITUTIONS: &[&str] = &["大学", "银行", "医院", "公司"];
const NOUNS: &[&str] = &[
    "足球", "篮球", "电影", "音乐", "比赛", "问题", "经济", "历史", "文化", "朋友", "老师", "学生", "城市", "新闻",
    "报告", "计划", "工作", "书",
];
const COMPOUNDS: &[(&str, &str)] = &[
    ("足球", "比赛"),
    ("篮球", "比赛"),
    ("经济", "问题"),
    ("历史", "文化"),
    ("音乐", "老师"),
    ("新闻", "报告"),
    ("工作", "计划"),
    ("城市", "经济"),
];
const VERBS: &[&str] = &["喜欢", "参观", "访问", "支持", "研究", "讨论", "介绍", "关心", "离开", "了解"];
const WISH: &[&str] = &["喜欢", "希望", "打算"];
const ACTIONS: &[(&str, &[&str])] = &[
    ("踢", &["足球"]),
    ("看", &["电影", "比赛", "新闻"]),
    ("听", &["音乐"]),
    ("打", &["篮球"]),
    ("读", &["书", "报告"]),
    ("学习", &["历史", "文化", "经济"]),
];
const PRONOUNS: &[&str] = &["我", "你", "他", "她", "我们", "他们", "大家"];
const TIMES: &[&str] = &["昨天", "今天", "明天", "去年", "现在"];
const ADVERBS: &[&str] = &["非常", "经常", "也", "都", "一直"];

fn pick<R: Rng>(rng: &mut R, xs: &[&'static str]) -> &'static str {
    xs.choose(rng).copied().expect("non-empty")
}

fn person<R: Rng>(rng: &mut R) -> Word {
    word(&[pick(rng, SURNAMES), pick(rng, GIVEN)], "NR").ent("PER")
}

fn place<R: Rng>(rng: &mut R) -> Word {
    let p = pick(rng, PLACES);
    if rng.gen_bool(0.3) {
        word(&[p, "市"], "NR").ent("LOC")
    } else {
        word(&[p], "NR").ent("LOC")
    }
}

fn organization<R: Rng>(rng: &mut R) -> Word {
    word(&[pick(rng, PLACES), pick(rng, INSTITUTIONS)], "NR").ent("ORG")
}

fn noun<R: Rng>(rng: &mut R) -> Word {
    if rng.gen_bool(0.35) {
        let (a, b) = *COMPOUNDS.choose(rng).expect("non-empty");
        word(&[a, b], "NN")
    } else {
        word(&[pick(rng, NOUNS)], "NN")
    }
}

/// Appends a noun phrase; returns the index of its head word.
fn noun_phrase<R: Rng>(rng: &mut R, out: &mut Vec<Word>, allow_modifier: bool) -> usize {
    match rng.gen_range(0..10) {
        0 | 1 => {
            out.push(person(rng));
        }
        2 => {
            out.push(place(rng));
        }
        3 | 4 => {
            out.push(organization(rng));
        }
        5 if allow_modifier => {
            let m = out.len();
            let modifier = match rng.gen_range(0..3) {
                0 => place(rng),
                1 => organization(rng),
                _ => word(&[pick(rng, PRONOUNS)], "PN"),
            };
            out.push(modifier);
            out.push(word(&["的"], "DEG"));
            out.push(noun(rng));
            let h = out.len() - 1;
            out[m].head = h + 1;
            out[m].rel = "assmod";
            out[m + 1].head = m + 1;
            out[m + 1].rel = "assm";
        }
        _ => {
            out.push(noun(rng));
        }
    }
    out.len() - 1
}

fn subject<R: Rng>(rng: &mut R, out: &mut Vec<Word>) -> usize {
    match rng.gen_range(0..4) {
        0 | 1 => {
            out.push(word(&[pick(rng, PRONOUNS)], "PN"));
            out.len() - 1
        }
        2 => {
            out.push(person(rng));
            out.len() - 1
        }
        _ => noun_phrase(rng, out, false),
    }
}

fn sentence<R: Rng>(rng: &mut R) -> Vec<Word> {
    let mut w: Vec<Word> = Vec::new();
    let mut attach: Vec<(usize, &'static str)> = Vec::new();
    if rng.gen_bool(0.25) {
        w.push(word(&[pick(rng, TIMES)], "NT"));
        attach.push((w.len() - 1, "tmod"));
    }
    let subj = subject(rng, &mut w);
    attach.push((subj, "nsubj"));
    if rng.gen_bool(0.3) {
        w.push(word(&[pick(rng, ADVERBS)], "AD"));
        attach.push((w.len() - 1, "advmod"));
    }
    let root;
    match rng.gen_range(0..3) {
        0 => {
            w.push(word(&[pick(rng, WISH)], "VV"));
            root = w.len() - 1;
            let (act, objs) = *ACTIONS.choose(rng).expect("non-empty");
            w.push(word(&[act], "VV"));
            let v2 = w.len() - 1;
            w[v2].head = root + 1;
            w[v2].rel = "ccomp";
            w.push(word(&[pick(rng, objs)], "NN"));
            let o = w.len() - 1;
            w[o].head = v2 + 1;
            w[o].rel = "dobj";
        }
        1 => {
            w.push(word(&["在"], "P"));
            let p = w.len() - 1;
            let loc = place(rng);
            w.push(loc);
            let l = w.len() - 1;
            w.push(word(&[pick(rng, VERBS)], "VV"));
            root = w.len() - 1;
            w[p].head = root + 1;
            w[p].rel = "prep";
            w[l].head = p + 1;
            w[l].rel = "pobj";
            let o = noun_phrase(rng, &mut w, true);
            attach.push((o, "dobj"));
        }
        _ => {
            w.push(word(&[pick(rng, VERBS)], "VV"));
            root = w.len() - 1;
            if rng.gen_bool(0.3) {
                w.push(word(&["了"], "AS"));
                attach.push((w.len() - 1, "asp"));
            }
            let o = noun_phrase(rng, &mut w, true);
            attach.push((o, "dobj"));
        }
    }
    if rng.gen_bool(0.6) {
        w.push(word(&["。"], "PU"));
        attach.push((w.len() - 1, "punct"));
    }
    for (i, rel) in attach {
        w[i].head = root + 1;
        w[i].rel = rel;
    }
    w[root].head = 0;
    w[root].rel = "root";
    w
}

fn coarse(s: &[Word]) -> String {
    s.iter().map(Word::form).collect::<Vec<_>>().join(" ")
}

fn fine(s: &[Word]) -> String {
    s.iter().flat_map(|w| w.pieces.iter().copied()).collect::<Vec<_>>().join(" ")
}

fn pos_block(s: &[Word]) -> String {
    s.iter().map(|w| format!("{}\t{}\n", w.form(), w.pos)).collect()
}

fn ner_block(s: &[Word]) -> String {
    let mut out = String::new();
    for w in s {
        let chars: Vec<char> = w.form().chars().collect();
        for (i, c) in chars.iter().enumerate() {
            let label = match w.entity {
                None => "O".to_string(),
                Some(e) => {
                    let p = match (chars.len(), i) {
                        (1, _) => "S",
                        (_, 0) => "B",
                        (n, i) if i + 1 == n => "E",
                        _ => "M",
                    };
                    format!("{p}-{e}")
                }
            };
            let _ = writeln!(out, "{c}\t{label}");
        }
    }
    out
}

fn dep_block(s: &[Word]) -> String {
    s.iter()
        .enumerate()
        .map(|(i, w)| format!("{}\t{}\t{}\t{}\t{}\n", i + 1, w.form(), w.pos, w.head, w.rel))
        .collect()
}

fn generate(seed: u64, n: usize) -> Vec<Vec<Word>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sentence(&mut rng)).collect()
}

/// One rendering per sentence, each followed by a newline. Block formats
/// already end in a newline, which leaves the blank separator line.
fn render(sents: &[Vec<Word>], f: fn(&[Word]) -> String) -> String {
    sents.iter().map(|s| f(s) + "\n").collect()
}

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "crates/core/data/mini".into()));
    std::fs::create_dir_all(&dir)?;
    let seg = generate(1, 300);
    std::fs::write(dir.join("cws_coarse.txt"), render(&seg, coarse))?;
    std::fs::write(dir.join("cws_fine.txt"), render(&seg, fine))?;
    std::fs::write(dir.join("pos.txt"), render(&generate(2, 300), pos_block))?;
    std::fs::write(dir.join("ner.txt"), render(&generate(3, 300), ner_block))?;
    std::fs::write(dir.join("dep.txt"), render(&generate(4, 300), dep_block))?;
    let probe: String = generate(5, 100)
        .iter()
        .map(|s| s.iter().map(Word::form).collect::<String>() + "\n")
        .collect();
    std::fs::write(dir.join("probe.txt"), probe)?;
    Ok(())
}
