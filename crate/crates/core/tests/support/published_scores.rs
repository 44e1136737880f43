//! Published per-metric means (Help, Corr, Coh, Comp, Verb) on the unit scale
//! and the printed average for each dataset, backbone and method.

#![allow(dead_code)]

pub struct Row {
    pub dataset: &'static str,
    pub backbone: &'static str,
    pub method: &'static str,
    pub metrics: [f64; 5],
    pub avg: f64,
}

const fn row(
    dataset: &'static str,
    backbone: &'static str,
    method: &'static str,
    metrics: [f64; 5],
    avg: f64,
) -> Row {
    Row { dataset, backbone, method, metrics, avg }
}

// 0.3927 is a printed average, not an approximation of pi/8.
#[allow(clippy::approx_constant)]
pub const ROWS: [Row; 28] = [
    row("HelpSteer1", "GPT-4o", "Direct", [0.3216, 0.3866, 0.7583, 0.2951, 0.4215], 0.4366),
    row("HelpSteer1", "GPT-4o", "CoT", [0.3223, 0.3876, 0.7595, 0.2935, 0.4192], 0.4364),
    row("HelpSteer1", "GPT-4o", "Role", [0.3988, 0.4679, 0.8024, 0.3427, 0.5008], 0.5025),
    row("HelpSteer1", "GPT-4o", "RAG", [0.3751, 0.4402, 0.7871, 0.3116, 0.4779], 0.4784),
    row("HelpSteer1", "GPT-4o", "MAD", [0.3774, 0.4764, 0.7954, 0.3210, 0.5248], 0.4990),
    row("HelpSteer1", "GPT-4o", "MARS", [0.4159, 0.4876, 0.7963, 0.3293, 0.5188], 0.5096),
    row("HelpSteer1", "GPT-4o", "MA-SAPO", [0.5183, 0.6260, 0.8614, 0.5013, 0.7363], 0.6486),
    row("HelpSteer1", "LLaMA-3-8B", "Direct", [0.2549, 0.3247, 0.7054, 0.2702, 0.4062], 0.3927),
    row("HelpSteer1", "LLaMA-3-8B", "CoT", [0.2359, 0.3077, 0.6906, 0.2627, 0.3967], 0.3787),
    row("HelpSteer1", "LLaMA-3-8B", "Role", [0.2887, 0.3516, 0.7287, 0.3164, 0.4517], 0.4274),
    row("HelpSteer1", "LLaMA-3-8B", "RAG", [0.2930, 0.3594, 0.7452, 0.3007, 0.4377], 0.4272),
    row("HelpSteer1", "LLaMA-3-8B", "MAD", [0.3774, 0.5049, 0.8067, 0.4084, 0.6708], 0.5531),
    row("HelpSteer1", "LLaMA-3-8B", "MARS", [0.3901, 0.4591, 0.7745, 0.3512, 0.5801], 0.5110),
    row("HelpSteer1", "LLaMA-3-8B", "MA-SAPO", [0.4110, 0.4868, 0.8326, 0.4720, 0.8433], 0.6091),
    row("HelpSteer2", "GPT-4o", "Direct", [0.3616, 0.4700, 0.7723, 0.3280, 0.4913], 0.4846),
    row("HelpSteer2", "GPT-4o", "CoT", [0.2981, 0.3958, 0.7169, 0.2888, 0.4709], 0.4341),
    row("HelpSteer2", "GPT-4o", "Role", [0.4400, 0.5175, 0.8221, 0.4025, 0.5992], 0.5563),
    row("HelpSteer2", "GPT-4o", "RAG", [0.4903, 0.5745, 0.8642, 0.4161, 0.6567], 0.6003),
    row("HelpSteer2", "GPT-4o", "MAD", [0.4167, 0.5049, 0.8067, 0.4084, 0.6708], 0.5615),
    row("HelpSteer2", "GPT-4o", "MARS", [0.4791, 0.5569, 0.8268, 0.4095, 0.6234], 0.5791),
    row("HelpSteer2", "GPT-4o", "MA-SAPO", [0.5072, 0.6038, 0.8527, 0.5244, 0.7570], 0.6490),
    row("HelpSteer2", "LLaMA-3-8B", "Direct", [0.2616, 0.3636, 0.7078, 0.2942, 0.4421], 0.4139),
    row("HelpSteer2", "LLaMA-3-8B", "CoT", [0.1600, 0.2545, 0.6291, 0.2421, 0.3812], 0.3334),
    row("HelpSteer2", "LLaMA-3-8B", "Role", [0.2555, 0.3303, 0.7050, 0.3267, 0.4441], 0.4123),
    row("HelpSteer2", "LLaMA-3-8B", "RAG", [0.3990, 0.4711, 0.7989, 0.3722, 0.5814], 0.5245),
    row("HelpSteer2", "LLaMA-3-8B", "MAD", [0.3971, 0.4532, 0.7898, 0.3998, 0.6439], 0.5368),
    row("HelpSteer2", "LLaMA-3-8B", "MARS", [0.4296, 0.5019, 0.7994, 0.3957, 0.6181], 0.5482),
    row("HelpSteer2", "LLaMA-3-8B", "MA-SAPO", [0.4005, 0.4754, 0.8294, 0.4833, 0.8441], 0.6065),
];
