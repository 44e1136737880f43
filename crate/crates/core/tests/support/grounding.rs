//! Data-flow checks for every agent under the mock provider: an output must
//! move when any declared input moves and hold still when undeclared data
//! moves.

#![allow(dead_code)]

use assetopt::agents::Agents;
use assetopt::gateway::CallTape;
use assetopt::model::{PromptRecord, ReasoningAssets, RetrievalHit, ScoreVector, TrainingInstance};

use super::fixtures::{instance, mock_agents};

type HitEdit = fn(&mut RetrievalHit);

pub struct Check {
    pub agent: &'static str,
    pub input: String,
    pub declared: bool,
    pub changed: bool,
}

impl Check {
    pub fn ok(&self) -> bool {
        self.declared == self.changed
    }
}

fn base_instance() -> TrainingInstance {
    instance(
        "train-7",
        "Write a haiku about the sea",
        "Waves fold into foam",
        [3.0, 2.5, 4.0, 1.0, 0.5],
    )
}

fn with_score(inst: &TrainingInstance, slot: usize) -> TrainingInstance {
    let mut v = inst.scores.to_array();
    v[slot] = if v[slot] >= 2.0 { v[slot] - 1.0 } else { v[slot] + 1.0 };
    TrainingInstance { scores: ScoreVector::new(v).unwrap(), ..inst.clone() }
}

fn with_prompt(inst: &TrainingInstance, text: &str) -> TrainingInstance {
    let prompt = PromptRecord::single(inst.id(), text).unwrap();
    TrainingInstance { prompt, ..inst.clone() }
}

fn renamed(inst: &TrainingInstance, id: &str) -> TrainingInstance {
    let prompt = PromptRecord::single(id, inst.prompt.text.clone()).unwrap();
    TrainingInstance { prompt, ..inst.clone() }
}

fn hit(rank: usize, score: f64, id: &str, topic: &str) -> RetrievalHit {
    RetrievalHit {
        instance: instance(
            id,
            &format!("Tell me about {topic}"),
            &format!("{topic} in brief"),
            [2.0, 3.0, 4.0, 1.0, 2.0],
        ),
        assets: ReasoningAssets {
            source_id: id.into(),
            card: format!("card for {topic}"),
            diagnosis: format!("diagnosis for {topic}"),
            directives: vec![format!("name the audience for {topic}"), "be concise".into()],
        },
        score,
        rank,
    }
}

fn base_hits() -> Vec<RetrievalHit> {
    vec![
        hit(1, 3.0, "a", "sea birds"),
        hit(2, 2.0, "b", "sea salt"),
        hit(3, 1.0, "c", "tides"),
    ]
}

fn rerank(mut hits: Vec<RetrievalHit>) -> Vec<RetrievalHit> {
    for (i, h) in hits.iter_mut().enumerate() {
        h.rank = i + 1;
    }
    hits
}

/// Runs every check against a mock with `seed`.
pub fn run(seed: u64) -> Vec<Check> {
    let agents = mock_agents(seed);
    let mut checks = Vec::new();
    let mut push = |agent, input: &str, declared, base: &String, other: &String| {
        checks.push(Check { agent, input: input.into(), declared, changed: base != other });
    };
    let tape = &mut CallTape::new();
    let inst = base_instance();

    // Explainer: prompt, response, scores.
    let card = |a: &Agents, i: &TrainingInstance| a.explain_metrics(i, &mut CallTape::new()).unwrap();
    let c0 = card(&agents, &inst);
    push("explainer", "prompt", true, &c0, &card(&agents, &with_prompt(&inst, "Write a limerick about the sea")));
    push("explainer", "response", true, &c0, &card(&agents, &TrainingInstance { response: "Waves fold into spray".into(), ..inst.clone() }));
    for slot in 0..5 {
        push("explainer", &format!("score {slot}"), true, &c0, &card(&agents, &with_score(&inst, slot)));
    }
    push("explainer", "record id", false, &c0, &card(&agents, &renamed(&inst, "train-8")));

    // Diagnostician: instance fields and the card.
    let diag = |i: &TrainingInstance, c: &str| agents.diagnose(i, c, &mut CallTape::new()).unwrap();
    let d0 = diag(&inst, &c0);
    let mut c1 = c0.clone();
    c1.push('!');
    push("diagnostician", "card", true, &d0, &diag(&inst, &c1));
    push("diagnostician", "prompt", true, &d0, &diag(&with_prompt(&inst, "Write a haiku about snow"), &c0));
    push("diagnostician", "response", true, &d0, &diag(&TrainingInstance { response: "Foam".into(), ..inst.clone() }, &c0));
    push("diagnostician", "verbosity score", true, &d0, &diag(&with_score(&inst, 4), &c0));
    push("diagnostician", "record id", false, &d0, &diag(&renamed(&inst, "x"), &c0));

    // Synthesizer: instance fields, card and diagnosis.
    let syn = |i: &TrainingInstance, c: &str, d: &str| {
        agents.synthesize_actions(i, c, d, &mut CallTape::new()).unwrap().join("\n")
    };
    let s0 = syn(&inst, &c0, &d0);
    push("synthesizer", "card", true, &s0, &syn(&inst, &c1, &d0));
    push("synthesizer", "diagnosis", true, &s0, &syn(&inst, &c0, &format!("{d0}?")));
    push("synthesizer", "prompt", true, &s0, &syn(&with_prompt(&inst, "Write a haiku about rain"), &c0, &d0));
    push("synthesizer", "correctness score", true, &s0, &syn(&with_score(&inst, 1), &c0, &d0));
    push("synthesizer", "record id", false, &s0, &syn(&renamed(&inst, "y"), &c0, &d0));

    // Analyzer: test prompt and every field of every hit, in rank order.
    let test = PromptRecord::single("q1", "Write a poem about the sea for children").unwrap();
    let ana = |p: &PromptRecord, h: &[RetrievalHit]| agents.analyze(p, h, &mut CallTape::new()).unwrap();
    let hits = base_hits();
    let a0 = ana(&test, &hits);
    push("analyzer", "test prompt", true, &a0, &ana(&PromptRecord::single("q1", "Write a poem about rivers").unwrap(), &hits));
    for i in 0..hits.len() {
        let edits: [(&str, HitEdit); 5] = [
            ("prompt", |h| h.instance.prompt = PromptRecord::single(h.instance.id(), format!("{} now", h.instance.prompt.text)).unwrap()),
            ("response", |h| h.instance.response.push_str(" more")),
            ("card", |h| h.assets.card.push_str(" more")),
            ("diagnosis", |h| h.assets.diagnosis.push_str(" more")),
            ("directives", |h| h.assets.directives.push("add an example".into())),
        ];
        for (field, edit) in edits {
            let mut h = hits.clone();
            edit(&mut h[i]);
            push("analyzer", &format!("hit {} {field}", i + 1), true, &a0, &ana(&test, &h));
        }
    }
    let mut swapped = hits.clone();
    swapped.swap(0, 1);
    swapped[0].score = 3.0;
    swapped[1].score = 2.0;
    push("analyzer", "hit order", true, &a0, &ana(&test, &rerank(swapped)));
    let mut rescored = hits.clone();
    for h in &mut rescored {
        h.score *= 10.0;
    }
    push("analyzer", "retrieval scores", false, &a0, &ana(&test, &rescored));
    let mut rescaled = hits.clone();
    rescaled[0].instance.scores = ScoreVector::uniform(0.0).unwrap();
    push("analyzer", "hit training scores", false, &a0, &ana(&test, &rescaled));
    push("analyzer", "test prompt id", false, &a0, &ana(&PromptRecord::single("q2", test.text.clone()).unwrap(), &hits));

    // Refiner: test prompt and report only.
    let refine = |p: &PromptRecord, r: &str| agents.refine(p, r, &mut CallTape::new()).unwrap().text;
    let r0 = refine(&test, &a0);
    push("refiner", "report", true, &r0, &refine(&test, &format!("{a0} and more")));
    push("refiner", "test prompt", true, &r0, &refine(&PromptRecord::single("q1", "Write a poem about lakes").unwrap(), &a0));
    // The refiner never sees hits, so moving retrieval scores cannot reach it
    // except through the report, which depends only on the ranked content.
    let a_rescored = ana(&test, &rescored);
    push("refiner", "retrieval scores", false, &r0, &refine(&test, &a_rescored));
    push("refiner", "test prompt id", false, &r0, &refine(&PromptRecord::single("q9", test.text.clone()).unwrap(), &a0));

    // Combined agent: test prompt and hits.
    let comb = |p: &PromptRecord, h: &[RetrievalHit]| {
        let (a, r) = agents.analyze_and_refine_combined(p, h, &mut CallTape::new()).unwrap();
        format!("{a}\n{}", r.text)
    };
    let m0 = comb(&test, &hits);
    let mut h = hits.clone();
    h[2].assets.card.push('.');
    push("combined", "hit 3 card", true, &m0, &comb(&test, &h));
    push("combined", "retrieval scores", false, &m0, &comb(&test, &rescored));

    // Responder: the optimized prompt only.
    let respond = |p: &PromptRecord| agents.respond(p, &mut CallTape::new()).unwrap();
    let opt = agents.refine(&test, &a0, tape).unwrap();
    let o0 = respond(&opt);
    push("responder", "optimized prompt", true, &o0, &respond(&PromptRecord::single(opt.id.clone(), format!("{} Please.", opt.text)).unwrap()));
    let mut relinked = opt.clone();
    relinked.derived_from = Some("elsewhere".into());
    relinked.id = "other".into();
    push("responder", "provenance", false, &o0, &respond(&relinked));

    checks
}
