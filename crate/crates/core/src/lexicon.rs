//! English surface forms: articles, plurals and attribute classes.

use serde::{Deserialize, Serialize};

/// Vowel-initial words that take "a".
const A_EXCEPTIONS: &[&str] = &[
    "one", "once", "ufo", "ukulele", "unicorn", "unicycle", "uniform", "union", "unit", "universe",
    "university", "usb", "use", "user", "usual", "utensil", "utility", "ewe", "euro", "european",
];

/// Consonant-initial words that take "an".
const AN_EXCEPTIONS: &[&str] = &["hour", "honest", "honor", "honour", "heir", "herb", "hors"];

const IRREGULAR: &[(&str, &str)] = &[
    ("person", "people"),
    ("man", "men"),
    ("woman", "women"),
    ("child", "children"),
    ("mouse", "mice"),
    ("goose", "geese"),
    ("foot", "feet"),
    ("tooth", "teeth"),
    ("ox", "oxen"),
    ("knife", "knives"),
    ("wife", "wives"),
    ("life", "lives"),
    ("leaf", "leaves"),
    ("loaf", "loaves"),
    ("shelf", "shelves"),
    ("wolf", "wolves"),
    ("calf", "calves"),
    ("half", "halves"),
    ("scarf", "scarves"),
    ("thief", "thieves"),
    ("potato", "potatoes"),
    ("tomato", "tomatoes"),
    ("hero", "heroes"),
    ("cactus", "cacti"),
    ("fungus", "fungi"),
    ("bus", "buses"),
    ("quiz", "quizzes"),
];

/// Nouns whose plural equals the singular.
const INVARIANT: &[&str] = &[
    "sheep", "deer", "fish", "moose", "bison", "salmon", "trout", "aircraft", "series", "species",
    "furniture", "equipment", "clothing", "luggage", "baggage", "broccoli", "lettuce", "rice",
    "food", "meat", "bread", "cheese", "grass", "hair", "water", "snow", "sand", "dirt", "mud",
    "gravel", "sky", "produce", "footwear", "headwear", "silverware", "tableware", "cutlery",
    "scissors", "pants", "jeans", "glasses", "sunglasses", "eyeglasses", "shorts", "trousers",
    "goggles", "headphones", "tongs", "pliers", "binoculars", "pajamas", "clothes", "people",
];

/// Nouns that are grammatically plural in the singular sense ("the jeans are").
const PLURALIA_TANTUM: &[&str] = &[
    "scissors", "pants", "jeans", "glasses", "sunglasses", "eyeglasses", "shorts", "trousers",
    "goggles", "headphones", "tongs", "pliers", "binoculars", "pajamas", "clothes", "people",
];

fn head_split(noun: &str) -> (&str, &str) {
    match noun.rfind(' ') {
        Some(i) => (&noun[..=i], &noun[i + 1..]),
        None => ("", noun),
    }
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

/// Plural of a lowercase noun phrase; only the last word is inflected.
pub fn pluralize(noun: &str) -> String {
    let (prefix, head) = head_split(noun);
    if head.is_empty() {
        return noun.to_string();
    }
    if INVARIANT.contains(&head) || IRREGULAR.iter().any(|(_, p)| *p == head) {
        return noun.to_string();
    }
    if let Some((_, p)) = IRREGULAR.iter().find(|(s, _)| *s == head) {
        return format!("{prefix}{p}");
    }
    let plural = if ["s", "x", "z", "ch", "sh"].iter().any(|suf| head.ends_with(suf)) {
        format!("{head}es")
    } else if let Some(stem) = head.strip_suffix('y') {
        match stem.chars().last() {
            Some(c) if !is_vowel(c) => format!("{stem}ies"),
            _ => format!("{head}s"),
        }
    } else {
        format!("{head}s")
    };
    format!("{prefix}{plural}")
}

pub fn is_plurale_tantum(noun: &str) -> bool {
    PLURALIA_TANTUM.contains(&head_split(noun).1)
}

/// "a" or "an" for the phrase, judged on its first word.
pub fn indefinite_article(phrase: &str) -> &'static str {
    let first = phrase.split_whitespace().next().unwrap_or("").to_lowercase();
    let word = first.trim_matches(|c: char| !c.is_alphanumeric());
    if A_EXCEPTIONS.iter().any(|w| word == *w || (word.starts_with(w) && w.len() > 3)) {
        return "a";
    }
    if word.starts_with("uni") || word.starts_with("eu") {
        return "a";
    }
    if AN_EXCEPTIONS.iter().any(|w| word.starts_with(w)) {
        return "an";
    }
    match word.chars().next() {
        Some(c) if is_vowel(c) => "an",
        _ => "a",
    }
}

/// Singular indefinite noun phrase: "a dog", "an apple", "some jeans".
pub fn with_article(phrase: &str) -> String {
    let (_, head) = head_split(phrase);
    if is_plurale_tantum(head) {
        format!("some {phrase}")
    } else {
        format!("{} {phrase}", indefinite_article(phrase))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeClass {
    Color,
    Material,
    State,
    Other,
}

impl AttributeClass {
    /// Tag used in taxonomy attribute signatures.
    pub fn tag(self) -> &'static str {
        match self {
            Self::Color => "color",
            Self::Material => "material",
            Self::State => "state",
            Self::Other => "other",
        }
    }
}

pub const COLORS: &[&str] = &[
    "white", "black", "brown", "red", "blue", "green", "yellow", "orange", "pink", "purple",
    "gray", "silver", "gold", "beige", "tan",
];

/// Adjectival form and noun form of each material.
pub const MATERIALS: &[(&str, &str)] = &[
    ("wooden", "wood"),
    ("metal", "metal"),
    ("plastic", "plastic"),
    ("glass", "glass"),
    ("leather", "leather"),
    ("concrete", "concrete"),
    ("brick", "brick"),
    ("stone", "stone"),
    ("ceramic", "ceramic"),
    ("porcelain", "porcelain"),
    ("lace", "lace"),
    ("cotton", "cotton"),
    ("wicker", "wicker"),
    ("paper", "paper"),
    ("cardboard", "cardboard"),
    ("denim", "denim"),
    ("steel", "steel"),
];

const MATERIAL_ALIASES: &[(&str, &str)] = &[("wood", "wood"), ("metallic", "metal"), ("grey", "gray")];

pub const STATES: &[&str] = &[
    "on", "off", "open", "closed", "empty", "full", "standing", "sitting", "lying", "parked",
    "wet", "dry", "clean", "dirty", "lit", "folded", "sliced", "broken",
];

pub fn classify(attribute: &str) -> AttributeClass {
    let a = attribute.trim();
    if COLORS.contains(&a) || a == "grey" {
        AttributeClass::Color
    } else if material_noun(a).is_some() {
        AttributeClass::Material
    } else if STATES.contains(&a) {
        AttributeClass::State
    } else {
        AttributeClass::Other
    }
}

/// "wooden" -> "wood"; `None` for non-materials.
pub fn material_noun(attribute: &str) -> Option<&'static str> {
    MATERIALS
        .iter()
        .find(|(adj, noun)| *adj == attribute || *noun == attribute)
        .map(|(_, noun)| *noun)
        .or_else(|| {
            MATERIAL_ALIASES
                .iter()
                .find(|(alias, _)| *alias == attribute)
                .map(|(_, noun)| *noun)
                .filter(|n| MATERIALS.iter().any(|(_, m)| m == n))
        })
}

/// "wood" -> "wooden"; other materials are their own modifier.
pub fn material_adjective(attribute: &str) -> Option<&'static str> {
    let noun = material_noun(attribute)?;
    MATERIALS.iter().find(|(_, n)| *n == noun).map(|(adj, _)| *adj)
}

/// Canonical key for "is this the same attribute": material nouns for
/// materials, the lowercase form otherwise.
pub fn attribute_key(attribute: &str) -> String {
    let a = attribute.trim().to_lowercase();
    if a == "grey" {
        return "gray".into();
    }
    material_noun(&a).map_or(a, str::to_string)
}

pub fn vocabulary(class: AttributeClass) -> Vec<&'static str> {
    match class {
        AttributeClass::Color => COLORS.to_vec(),
        AttributeClass::Material => MATERIALS.iter().map(|(adj, _)| *adj).collect(),
        AttributeClass::State => STATES.to_vec(),
        AttributeClass::Other => Vec::new(),
    }
}
