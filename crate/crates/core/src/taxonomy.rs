//! Rule-based prompt categorization: spatial content, temporal content and
//! attribute control subcategories by keyword lookup, plus a complexity label
//! from the count of non-stop words.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::text::tokenize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub prompt_id: String,
    pub text: String,
    #[serde(default)]
    pub source: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aspect {
    Spatial,
    Temporal,
    Attribute,
}

impl Aspect {
    pub const ALL: [Aspect; 3] = [Aspect::Spatial, Aspect::Temporal, Aspect::Attribute];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Complexity {
    Simple,
    Medium,
    Complex,
}

impl Complexity {
    /// `<= 8` non-stop words is simple, `9..=11` medium, anything above complex.
    pub fn from_non_stop_count(count: usize) -> Self {
        match count {
            0..=8 => Complexity::Simple,
            9..=11 => Complexity::Medium,
            _ => Complexity::Complex,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Complexity::Simple => "simple",
            Complexity::Medium => "medium",
            Complexity::Complex => "complex",
        }
    }
}

impl fmt::Display for Complexity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TableError {
    #[error("keyword table is missing aspect {0:?}")]
    MissingAspect(Aspect),
    #[error("subcategory {0:?} has no keywords")]
    EmptySubcategory(String),
    #[error("keyword {0:?} is not lowercase")]
    NotLowercase(String),
    #[error("keyword {0:?} tokenizes to nothing")]
    EmptyKeyword(String),
}

/// aspect -> subcategory -> keywords. Keywords may span several tokens
/// ("out of"); they then match consecutive prompt tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KeywordTable {
    pub aspects: BTreeMap<Aspect, BTreeMap<String, Vec<String>>>,
}

type Seed = &'static [(&'static str, &'static [&'static str])];

const SPATIAL: Seed = &[
    (
        "people",
        &[
            "person", "man", "woman", "men", "women", "kid", "girl", "boy", "baby", "people", "child", "children",
            "human", "player", "singer",
        ],
    ),
    (
        "plants",
        &[
            "flower", "leaf", "leave", "leaves", "tree", "grass", "forest", "wheat", "plant", "peony",
        ],
    ),
    (
        "animals",
        &[
            "panda",
            "dog",
            "cat",
            "elephant",
            "horse",
            "bird",
            "butterfly",
            "butterflies",
            "rabbit",
            "puppy",
            "puppies",
            "fish",
            "shark",
            "animal",
        ],
    ),
    (
        "vehicles",
        &[
            "car",
            "van",
            "plane",
            "tank",
            "carriage",
            "rocket",
            "motorcycle",
            "boat",
            "train",
            "bus",
        ],
    ),
    (
        "artifacts",
        &[
            "robot",
            "doll",
            "toy",
            "microphone",
            "paper",
            "plate",
            "bowl",
            "ball",
            "umbrella",
            "cup",
            "bottle",
            "skateboard",
        ],
    ),
    (
        "illustrations",
        &["abstract", "pattern", "particle", "gradient", "loop", "graphic", "line"],
    ),
    (
        "food and beverage",
        &["water", "wine", "coffee", "apple", "butter", "egg", "chocolate", "lime"],
    ),
    (
        "buildings and infrastructure",
        &[
            "room", "building", "bridge", "court", "concert", "hotel", "factory", "house", "stage",
        ],
    ),
    (
        "scenery and natural objects",
        &[
            "wind", "sand", "snow", "rain", "sky", "fog", "mountain", "river", "sun", "ocean", "sea", "field",
            "horizon",
        ],
    ),
];

const TEMPORAL: Seed = &[
    (
        "actions",
        &[
            "sing", "singing", "dance", "dancing", "laugh", "laughing", "cry", "crying", "smile", "smiling", "jump",
            "jumping", "walk", "walking", "eat", "eating", "drink", "drinking", "run", "running", "play", "playing",
            "nod", "blow", "pour", "stand", "standing", "swim", "swimming", "ride", "riding", "compete", "flip",
            "flipping",
        ],
    ),
    (
        "kinetic motions",
        &[
            "fly", "flying", "flies", "spin", "spinning", "race", "racing", "move", "moving", "rotate", "rotating",
            "fall", "falling", "rise", "rising", "bounce", "bouncing", "sway", "swaying", "run", "running", "swim",
            "swimming",
        ],
    ),
    (
        "fluid motions",
        &[
            "waterfall",
            "wave",
            "fountain",
            "smoke",
            "steam",
            "inflate",
            "melt",
            "melting",
            "pour",
            "pouring",
            "swim",
            "swimming",
            "float",
            "floating",
            "ripple",
            "rippling",
            "flow",
            "flowing",
            "splash",
            "wilt",
            "bloom",
        ],
    ),
    (
        "light change",
        &[
            "sunset", "sunrise", "firework", "shine", "shining", "glow", "glowing", "burn", "burning", "flash",
            "flashing", "bright",
        ],
    ),
];

const ATTRIBUTE: Seed = &[
    (
        "color",
        &[
            "white", "pink", "black", "red", "green", "purple", "blue", "yellow", "orange", "brown", "gray", "grey",
        ],
    ),
    (
        "quantity",
        &[
            "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
        ],
    ),
    (
        "camera view",
        &[
            "view", "macro", "film", "close", "capture", "aerial", "arial", "overhead", "shot", "camera",
        ],
    ),
    (
        "speed",
        &[
            "fast", "slow", "slowly", "rapid", "speed", "motion", "time", "quick", "quickly", "swift", "lag",
        ],
    ),
    ("event order", &["then", "before", "after", "first", "second"]),
    (
        "motion direction",
        &[
            "forward", "backward", "from", "into", "through", "out of", "left", "right", "toward", "towards",
        ],
    ),
];

impl Default for KeywordTable {
    /// The shipped table: the representative keywords of each subcategory
    /// plus common inflections, since matching strips plurals only.
    fn default() -> Self {
        let build = |seed: Seed| {
            seed.iter()
                .map(|(sub, words)| (sub.to_string(), words.iter().map(|w| w.to_string()).collect()))
                .collect::<BTreeMap<String, Vec<String>>>()
        };
        let mut aspects = BTreeMap::new();
        aspects.insert(Aspect::Spatial, build(SPATIAL));
        aspects.insert(Aspect::Temporal, build(TEMPORAL));
        aspects.insert(Aspect::Attribute, build(ATTRIBUTE));
        KeywordTable { aspects }
    }
}

impl KeywordTable {
    pub fn validate(&self) -> Result<(), TableError> {
        for aspect in Aspect::ALL {
            let subs = self.aspects.get(&aspect).ok_or(TableError::MissingAspect(aspect))?;
            for (sub, words) in subs {
                if words.is_empty() {
                    return Err(TableError::EmptySubcategory(sub.clone()));
                }
                for w in words {
                    if w.chars().any(char::is_uppercase) {
                        return Err(TableError::NotLowercase(w.clone()));
                    }
                    if tokenize(w).is_empty() {
                        return Err(TableError::EmptyKeyword(w.clone()));
                    }
                }
            }
        }
        Ok(())
    }
}

/// 52 English function words. "then", "before" and "after" are deliberately
/// absent: they are event-order keywords.
pub const DEFAULT_STOP_WORDS: [&str; 52] = [
    "a", "an", "the", "i", "me", "my", "we", "our", "you", "your", "he", "his", "she", "her", "it", "its", "they",
    "their", "them", "this", "that", "these", "those", "of", "in", "on", "at", "to", "for", "with", "by", "as", "and",
    "or", "but", "so", "if", "is", "are", "was", "were", "be", "been", "being", "am", "do", "does", "did", "has",
    "have", "had", "will",
];

pub fn default_stop_list() -> BTreeSet<String> {
    DEFAULT_STOP_WORDS.iter().map(|w| w.to_string()).collect()
}

pub fn count_non_stop_words(text: &str, stop_list: &BTreeSet<String>) -> usize {
    tokenize(text)
        .iter()
        .filter(|t| !stop_list.contains(t.as_str()))
        .count()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptCategories {
    #[serde(with = "null_set")]
    pub spatial: BTreeSet<String>,
    #[serde(with = "null_set")]
    pub temporal: BTreeSet<String>,
    #[serde(with = "null_set")]
    pub attribute: BTreeSet<String>,
    pub complexity: Complexity,
    pub non_stop_count: usize,
}

impl PromptCategories {
    pub fn aspect(&self, aspect: Aspect) -> &BTreeSet<String> {
        match aspect {
            Aspect::Spatial => &self.spatial,
            Aspect::Temporal => &self.temporal,
            Aspect::Attribute => &self.attribute,
        }
    }
}

/// Does `token` equal `keyword`, directly or after dropping a plural suffix?
fn token_matches(token: &str, keyword: &str) -> bool {
    if token == keyword {
        return true;
    }
    if token.len() >= 4 && token.strip_suffix("es") == Some(keyword) {
        return true;
    }
    token.len() >= 3 && token.strip_suffix('s') == Some(keyword)
}

fn keyword_occurs(tokens: &[String], keyword: &[String]) -> bool {
    !keyword.is_empty()
        && tokens
            .windows(keyword.len())
            .any(|w| w.iter().zip(keyword).all(|(t, k)| token_matches(t, k)))
}

pub fn categorize_with(prompt: &PromptRecord, table: &KeywordTable, stop_list: &BTreeSet<String>) -> PromptCategories {
    let tokens = tokenize(&prompt.text);
    let hits = |aspect: Aspect| -> BTreeSet<String> {
        table
            .aspects
            .get(&aspect)
            .into_iter()
            .flatten()
            .filter(|(_, words)| words.iter().any(|w| keyword_occurs(&tokens, &tokenize(w))))
            .map(|(sub, _)| sub.clone())
            .collect()
    };
    let non_stop_count = tokens.iter().filter(|t| !stop_list.contains(t.as_str())).count();
    PromptCategories {
        spatial: hits(Aspect::Spatial),
        temporal: hits(Aspect::Temporal),
        attribute: hits(Aspect::Attribute),
        complexity: Complexity::from_non_stop_count(non_stop_count),
        non_stop_count,
    }
}

/// Categorizes with the default stop list.
pub fn categorize(prompt: &PromptRecord, table: &KeywordTable) -> PromptCategories {
    categorize_with(prompt, table, &default_stop_list())
}

/// Empty sets travel as the literal string `"null"`.
mod null_set {
    use alloc::collections::BTreeSet;
    use alloc::string::String;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(set: &BTreeSet<String>, s: S) -> Result<S::Ok, S::Error> {
        if set.is_empty() {
            s.serialize_str("null")
        } else {
            set.serialize(s)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Word(String),
        Set(BTreeSet<String>),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeSet<String>, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Word(w) if w == "null" => Ok(BTreeSet::new()),
            Repr::Word(w) => Err(serde::de::Error::custom(alloc::format!(
                "expected \"null\" or a list, got {w:?}"
            ))),
            Repr::Set(s) => Ok(s),
        }
    }
}
