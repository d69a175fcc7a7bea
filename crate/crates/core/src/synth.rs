//! Synthetic product catalogs for tests and demos.
//!
//! Each product draws distinct attributes from a fixed template table; each
//! question is a templated paraphrase aimed at one of the product's
//! specifications, which is recorded as its gold index. A `noise` fraction
//! of question tokens is replaced by distractor words.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::{AnswerTypeRules, Product, ProductCatalog, Question, Specification};
use crate::labeling::ValidationPair;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid synth argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_products: usize,
    pub specs_per_product: usize,
    pub questions_per_spec: usize,
    /// Fraction of question tokens replaced by distractors, in [0, 1].
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_products: 50,
            specs_per_product: 10,
            questions_per_spec: 2,
            noise: 0.2,
            seed: 42,
        }
    }
}

struct Attribute {
    key: &'static str,
    values: &'static [&'static str],
    /// `{v}` is replaced by a value from `values`.
    questions: &'static [&'static str],
}

const VERTICALS: [&str; 6] = ["Mobile", "AC", "Backpack", "Computer", "Shoes", "Watches"];

const DISTRACTORS: &[&str] = &[
    "please", "kindly", "sir", "urgent", "reply", "thanks", "bro", "asap", "guys", "tell",
    "me", "actually", "really", "just", "want", "know", "hello", "friend", "seller", "quickly",
];

const ATTRIBUTES: &[Attribute] = &[
    Attribute { key: "material", values: &["polyester", "nylon", "leather", "canvas", "cotton"],
        questions: &["what is the fabric material of this bag", "is the material {v}", "which material is it made of", "is this made of {v} material"] },
    Attribute { key: "color", values: &["black", "blue", "red", "grey", "green"],
        questions: &["what color is it", "is it available in {v} color", "which color shade does it come in", "does the color look {v}"] },
    Attribute { key: "compatible laptop size", values: &["15.4 inch", "14 inch", "17 inch", "13.3 inch"],
        questions: &["does 16 inch laptop fit in to it", "which laptop size is compatible", "can i keep a {v} laptop", "will my laptop fit inside"] },
    Attribute { key: "number of cores", values: &["2", "4", "6", "8"],
        questions: &["how many cores are there", "how many cores does the processor have", "number of processor cores", "does it have {v} cores"] },
    Attribute { key: "processor name", values: &["core i3", "core i5", "core i7", "ryzen 5"],
        questions: &["which processor is used", "is the processor {v}", "what processor name chip does it run", "does it come with {v} processor"] },
    Attribute { key: "ram", values: &["4 gb", "8 gb", "16 gb", "32 gb"],
        questions: &["how much ram memory does it have", "is the ram {v}", "can the ram be upgraded", "what ram size is installed"] },
    Attribute { key: "battery capacity", values: &["3000 mah", "4000 mah", "5000 mah", "6000 mah"],
        questions: &["how long does the battery last", "what is the battery capacity", "is battery backup good", "does it have a {v} battery"] },
    Attribute { key: "screen size", values: &["6.1 inch", "6.5 inch", "15.6 inch", "14 inch"],
        questions: &["what is the screen size", "how big is the display screen", "is the screen {v}", "does the screen measure {v}"] },
    Attribute { key: "weight", values: &["1.2 kg", "450 g", "2.1 kg", "180 g"],
        questions: &["what is the weight", "how heavy is the weight", "is it light weight", "is the weight {v}"] },
    Attribute { key: "warranty period", values: &["1 year", "2 years", "6 months"],
        questions: &["how long is the warranty", "is there any warranty period", "does warranty cover {v}", "what warranty do i get"] },
    Attribute { key: "water resistant depth", values: &["30 m", "50 m", "100 m", "200 m"],
        questions: &["is it water resistant", "can i swim with it in water", "what is the water resistance depth", "how deep can it go under water"] },
    Attribute { key: "strap material", values: &["silicone", "leather", "stainless steel", "nylon"],
        questions: &["what is the strap made of", "is the strap {v}", "can the strap be replaced", "which strap material is used"] },
    Attribute { key: "dial shape", values: &["round", "square", "rectangle"],
        questions: &["what is the dial shape", "is the dial {v}", "which shape dial does it have", "does the dial look {v}"] },
    Attribute { key: "cooling capacity", values: &["1 ton", "1.5 ton", "2 ton"],
        questions: &["what is the cooling capacity", "is it {v} capacity", "how much cooling tonnage", "will cooling be enough for a big room"] },
    Attribute { key: "energy rating", values: &["3 star", "4 star", "5 star"],
        questions: &["what is the star energy rating", "is the energy rating {v}", "how much energy power does it save", "which energy star rating"] },
    Attribute { key: "compressor type", values: &["inverter", "rotary", "reciprocating"],
        questions: &["is the compressor inverter or non inverter", "which compressor type is used", "does it have {v} compressor", "what kind of compressor"] },
    Attribute { key: "refrigerant", values: &["r32", "r410a", "r22"],
        questions: &["which refrigerant gas is used", "is the refrigerant {v}", "what gas refrigerant", "does it use {v} refrigerant"] },
    Attribute { key: "sole material", values: &["rubber", "eva", "pu", "tpr"],
        questions: &["what is the sole made of", "is the sole {v}", "does the sole have good grip", "which sole material"] },
    Attribute { key: "closure", values: &["lace up", "velcro", "slip on", "zipper"],
        questions: &["what type of closure", "is it {v} closure", "does it have laces or closure strap", "how does the closure work"] },
    Attribute { key: "occasion", values: &["casual", "formal", "sports", "party"],
        questions: &["which occasion is it for", "can i wear it for {v} occasion", "is it suitable for formal occasion", "what occasion suits it"] },
    Attribute { key: "number of compartments", values: &["1", "2", "3", "4"],
        questions: &["how many compartments are there", "does it have {v} compartments", "number of compartment sections", "are there separate compartments"] },
    Attribute { key: "number of pockets", values: &["2", "3", "5", "6"],
        questions: &["how many pockets does it have", "are there side pockets", "does it have {v} pockets", "number of pockets inside"] },
    Attribute { key: "capacity", values: &["20 l", "30 l", "35 l", "45 l"],
        questions: &["what is the capacity in litres", "is the capacity {v}", "how much capacity volume", "does it hold {v} of capacity"] },
    Attribute { key: "rain cover", values: &["yes", "no"],
        questions: &["does it come with a rain cover", "is rain cover included", "will the rain cover protect it", "is there any rain cover"] },
    Attribute { key: "primary camera", values: &["12 mp", "48 mp", "64 mp", "108 mp"],
        questions: &["how good is the primary camera", "is the camera {v}", "what is the rear camera resolution", "does the primary camera have {v}"] },
    Attribute { key: "secondary camera", values: &["8 mp", "16 mp", "32 mp"],
        questions: &["how is the front secondary camera for selfies", "is the selfie camera {v}", "what is the secondary camera quality", "does the front camera have {v}"] },
    Attribute { key: "internal storage", values: &["64 gb", "128 gb", "256 gb", "512 gb"],
        questions: &["how much internal storage", "is the storage {v}", "what internal storage memory does it have", "does it have {v} storage"] },
    Attribute { key: "expandable storage", values: &["up to 256 gb", "up to 512 gb", "not supported"],
        questions: &["can storage be expanded with sd card", "is expandable storage supported", "is the storage expandable with a memory card", "what expandable storage limit"] },
    Attribute { key: "network type", values: &["5g", "4g volte", "3g"],
        questions: &["does it support 5g network", "is it {v} network", "which network type is supported", "will the network work with jio"] },
    Attribute { key: "sim type", values: &["dual sim", "single sim", "esim"],
        questions: &["is it dual sim", "how many sim slots", "which sim type", "does the sim support {v}"] },
    Attribute { key: "operating system", values: &["android 13", "ios 17", "windows 11", "linux"],
        questions: &["which operating system does it run", "is the operating system {v}", "what os operating system is installed", "can the operating system be updated"] },
    Attribute { key: "fast charging", values: &["33 w", "65 w", "18 w"],
        questions: &["does it support fast charging", "what is the charging speed", "is fast charging {v}", "how fast does it charge"] },
    Attribute { key: "display type", values: &["amoled", "lcd", "ips", "oled"],
        questions: &["what type of display panel", "is the display {v}", "which display technology", "does it have an {v} display"] },
    Attribute { key: "refresh rate", values: &["60 hz", "90 hz", "120 hz", "144 hz"],
        questions: &["what is the refresh rate", "is the refresh rate {v}", "does it support high refresh rate", "how smooth is the refresh rate"] },
    Attribute { key: "graphics card", values: &["integrated", "rtx 3050", "rtx 4060", "radeon"],
        questions: &["does it have a dedicated graphics card", "which graphics gpu", "is the graphics card {v}", "can it run games with this graphics"] },
    Attribute { key: "ssd capacity", values: &["256 gb", "512 gb", "1 tb"],
        questions: &["is it ssd or hdd", "what is the ssd capacity", "does it have {v} ssd", "how much ssd space"] },
    Attribute { key: "usb ports", values: &["2", "3", "4"],
        questions: &["how many usb ports", "does it have usb c ports", "are there {v} usb ports", "which usb ports are available"] },
    Attribute { key: "backlit keyboard", values: &["yes", "no"],
        questions: &["is the keyboard backlit", "does the keyboard have backlight", "can the keyboard light be turned off", "is there a backlit keyboard"] },
    Attribute { key: "heel height", values: &["1 inch", "2 inch", "3 inch"],
        questions: &["what is the heel height", "is the heel {v}", "how high is the heel", "does it have flat heel"] },
    Attribute { key: "ideal for", values: &["men", "women", "boys", "girls", "unisex"],
        questions: &["is it ideal for {v}", "is it ideal for kids", "who is it ideal for", "is this ideal for men or women"] },
];

/// Number of attribute templates; the upper bound for `specs_per_product`.
pub fn attribute_pool_size() -> usize {
    ATTRIBUTES.len()
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidArgument(m));
        if self.n_products < 1 || self.specs_per_product < 1 || self.questions_per_spec < 1 {
            return bad("all counts must be >= 1".into());
        }
        if self.specs_per_product > ATTRIBUTES.len() {
            return bad(format!(
                "specs_per_product {} exceeds the {} attribute templates",
                self.specs_per_product,
                ATTRIBUTES.len()
            ));
        }
        if !(0.0..=1.0).contains(&self.noise) {
            return bad(format!("noise {} is outside [0, 1]", self.noise));
        }
        Ok(())
    }
}

/// Generates a catalog. Product `i` gets id `p{i:04}` and question ids
/// `q{spec:03}_{k}`; every question carries its gold spec index.
pub fn generate(cfg: &SynthConfig) -> Result<ProductCatalog, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let rules = AnswerTypeRules::default();
    let mut products = Vec::with_capacity(cfg.n_products);
    for pi in 0..cfg.n_products {
        let chosen: Vec<&Attribute> = ATTRIBUTES
            .choose_multiple(&mut rng, cfg.specs_per_product)
            .collect();
        let mut specs = Vec::with_capacity(chosen.len());
        let mut questions = Vec::new();
        for (si, attr) in chosen.iter().enumerate() {
            let value = attr.values.choose(&mut rng).expect("values are non-empty");
            specs.push(Specification::new(attr.key, value, si).expect("template keys are non-empty"));
            for k in 0..cfg.questions_per_spec {
                let template = attr.questions.choose(&mut rng).expect("templates are non-empty");
                let asked = attr.values.choose(&mut rng).expect("values are non-empty");
                let text = add_noise(&template.replace("{v}", asked), cfg.noise, &mut rng);
                let q = Question::new(format!("q{si:03}_{k}"), text, Some(si), &rules)
                    .expect("templates produce tokens");
                questions.push(q);
            }
        }
        questions.shuffle(&mut rng);
        products.push(Product {
            product_id: format!("p{pi:04}"),
            vertical: VERTICALS[pi % VERTICALS.len()].to_owned(),
            specs,
            questions,
        });
    }
    Ok(ProductCatalog::new(products).expect("generated ids are unique"))
}

fn add_noise(text: &str, noise: f64, rng: &mut impl Rng) -> String {
    text.split_whitespace()
        .map(|w| {
            if noise > 0.0 && rng.gen_bool(noise) {
                *DISTRACTORS.choose(rng).expect("non-empty")
            } else {
                w
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Splits each product's questions into (train, held-out), sending
/// `test_fraction` of them (rounded) to the held-out side.
pub fn split_questions(
    catalog: &ProductCatalog,
    test_fraction: f64,
    seed: u64,
) -> (ProductCatalog, ProductCatalog) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for p in catalog.products() {
        let mut qs = p.questions.clone();
        qs.shuffle(&mut rng);
        let n_test = ((qs.len() as f64) * test_fraction).round() as usize;
        let held = qs.split_off(qs.len() - n_test.min(qs.len()));
        train.push(Product { questions: qs, ..p.clone() });
        test.push(Product { questions: held, ..p.clone() });
    }
    (
        ProductCatalog::new(train).expect("ids unchanged"),
        ProductCatalog::new(test).expect("ids unchanged"),
    )
}

/// Balanced validation pairs from gold-annotated questions: for each sampled
/// question, its gold spec (relevant) and one other spec (irrelevant).
/// Returns `2 * min(n_pairs / 2, available)` pairs.
pub fn validation_pairs(catalog: &ProductCatalog, n_pairs: usize, seed: u64) -> Vec<ValidationPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates: Vec<(&Product, &Question)> = catalog
        .products()
        .iter()
        .filter(|p| p.specs.len() >= 2)
        .flat_map(|p| p.questions.iter().filter(|q| q.gold_spec_index.is_some()).map(move |q| (p, q)))
        .collect();
    candidates.shuffle(&mut rng);
    let mut out = Vec::with_capacity(n_pairs);
    for (p, q) in candidates.into_iter().take(n_pairs / 2) {
        let gold = q.gold_spec_index.expect("filtered");
        let mut other = rng.gen_range(0..p.specs.len() - 1);
        if other >= gold {
            other += 1;
        }
        out.push(ValidationPair::new(&q.text, p.specs[gold].text(), true));
        out.push(ValidationPair::new(&q.text, p.specs[other].text(), false));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_catalog_shares_a_token() {
        let cfg = SynthConfig {
            n_products: 1,
            specs_per_product: 1,
            questions_per_spec: 1,
            noise: 0.0,
            seed: 1,
        };
        let cat = generate(&cfg).unwrap();
        let p = &cat.products()[0];
        assert_eq!(p.specs.len(), 1);
        assert_eq!(p.questions.len(), 1);
        let q = &p.questions[0];
        assert_eq!(q.gold_spec_index, Some(0));
        assert!(q.tokens.iter().any(|t| p.specs[0].tokens().as_slice().contains(t)));
    }

    #[test]
    fn every_template_names_its_key() {
        let stop = ["is", "it", "the", "a", "of", "for", "in", "to", "with", "does", "how"];
        let mut missing = Vec::new();
        for attr in ATTRIBUTES {
            let key = crate::corpus::normalize(attr.key);
            for t in attr.questions {
                let q = crate::corpus::normalize(&t.replace("{v}", ""));
                if !q.iter().any(|w| !stop.contains(&w.as_str()) && key.as_slice().contains(w)) {
                    missing.push(format!("{t:?} / {:?}", attr.key));
                }
            }
        }
        assert!(missing.is_empty(), "templates without a key token: {missing:#?}");
    }

    #[test]
    fn same_seed_same_catalog() {
        let cfg = SynthConfig::default();
        assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
        let other = SynthConfig { seed: 7, ..cfg.clone() };
        assert_ne!(generate(&cfg).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn argument_validation() {
        let base = SynthConfig::default();
        for cfg in [
            SynthConfig { n_products: 0, ..base.clone() },
            SynthConfig { specs_per_product: 0, ..base.clone() },
            SynthConfig { questions_per_spec: 0, ..base.clone() },
            SynthConfig { noise: 1.5, ..base.clone() },
            SynthConfig { noise: -0.1, ..base.clone() },
            SynthConfig { specs_per_product: ATTRIBUTES.len() + 1, ..base.clone() },
        ] {
            assert!(generate(&cfg).is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn split_and_validation() {
        let cat = generate(&SynthConfig::default()).unwrap();
        let (train, test) = split_questions(&cat, 0.2, 42);
        assert_eq!(train.question_count() + test.question_count(), 1000);
        assert_eq!(test.question_count(), 200);
        let pairs = validation_pairs(&train, 380, 42);
        assert_eq!(pairs.len(), 380);
        assert_eq!(pairs.iter().filter(|p| p.relevant).count(), 190);
    }
}
