//! The five counterfactual categories and their 14 modification types.

use core::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Participants,
    Process,
    Communication,
    Substance,
    Context,
}

impl Category {
    /// Default iteration order.
    pub const ALL: [Category; 5] = [
        Category::Participants,
        Category::Process,
        Category::Communication,
        Category::Substance,
        Category::Context,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Category::Participants => "participants",
            Category::Process => "process",
            Category::Communication => "communication",
            Category::Substance => "substance",
            Category::Context => "context",
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Category::Participants => "Participants",
            Category::Process => "Process",
            Category::Communication => "Communication",
            Category::Substance => "Substance",
            Category::Context => "Context",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
    }

    pub fn modifications(&self) -> impl Iterator<Item = &'static ModificationType> + '_ {
        REGISTRY.iter().filter(move |m| m.category == *self)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ModificationType {
    pub category: Category,
    /// Stable identifier, `<category>.<slug>`.
    pub key: &'static str,
    /// Imperative instruction as listed in the category table.
    pub instruction: &'static str,
    /// The instruction in gerund form, used in "change the X aspect by ...".
    pub gerund: &'static str,
    /// Short row label used by the ablation report.
    pub label: &'static str,
}

impl ModificationType {
    pub fn by_key(key: &str) -> Option<&'static ModificationType> {
        REGISTRY.iter().find(|m| m.key == key)
    }
}

macro_rules! modification {
    ($cat:ident, $key:literal, $instr:literal, $gerund:literal, $label:literal) => {
        ModificationType {
            category: Category::$cat,
            key: $key,
            instruction: $instr,
            gerund: $gerund,
            label: $label,
        }
    };
}

pub static REGISTRY: [ModificationType; 14] = [
    modification!(
        Participants,
        "participants.replace_lead_negotiator",
        "Replace the lead negotiator with a more dovish alternative",
        "replacing the lead negotiator with a more dovish alternative",
        "Replace the lead negotiator with alternative"
    ),
    modification!(
        Participants,
        "participants.include_stakeholders",
        "Include additional stakeholders in the negotiations",
        "including additional stakeholders in the negotiations",
        "Include additional stakeholders"
    ),
    modification!(
        Participants,
        "participants.exclude_parties",
        "Exclude certain parties from the talks",
        "excluding certain parties from the talks",
        "Exclude certain parties from talks"
    ),
    modification!(
        Process,
        "process.transparent_format",
        "Change the negotiation format to be more transparent",
        "changing the negotiation format to be more transparent",
        "Change the negotiation format"
    ),
    modification!(
        Process,
        "process.timing",
        "Modify the timing of diplomatic initiatives",
        "modifying the timing of diplomatic initiatives",
        "Modify the timing of diplomatic initiatives"
    ),
    modification!(
        Process,
        "process.coercive_measures",
        "Alter the use of coercive measures (e.g., sanctions, incentives)",
        "altering the use of coercive measures (e.g., sanctions, incentives)",
        "Alter the use of coercive measures"
    ),
    modification!(
        Communication,
        "communication.tone",
        "Modify the tone of official statements (e.g., more conciliatory, more assertive)",
        "modifying the tone of official statements (e.g., more conciliatory, more assertive)",
        "Modify the tone of official statements"
    ),
    modification!(
        Communication,
        "communication.publicity",
        "Change the level of publicity for negotiations (e.g., public vs. private talks)",
        "changing the level of publicity for negotiations (e.g., public vs. private talks)",
        "Change the level of publicity"
    ),
    modification!(
        Communication,
        "communication.reframe",
        "Reframe key issues in different terms",
        "reframing key issues in different terms",
        "Reframe key issues in different terms"
    ),
    modification!(
        Substance,
        "substance.concessions",
        "Modify specific concessions offered or demanded",
        "modifying specific concessions offered or demanded",
        "Modify specific concessions offered"
    ),
    modification!(
        Substance,
        "substance.primary_objective",
        "Change the primary stated objective of the event",
        "changing the primary stated objective of the event",
        "Change the primary objective"
    ),
    modification!(
        Substance,
        "substance.agreement_scope",
        "Alter the nature or scope of any proposed agreement",
        "altering the nature or scope of any proposed agreement",
        "Alter the nature of any agreement"
    ),
    modification!(
        Context,
        "context.location",
        "Change the geographical location of diplomatic events",
        "changing the geographical location of diplomatic events",
        "Change the location of diplomatic events"
    ),
    modification!(
        Context,
        "context.symbolic_gestures",
        "Modify symbolic gestures or protocols observed between parties",
        "modifying symbolic gestures or protocols observed between parties",
        "Modify symbolic gestures between parties"
    ),
];

pub fn registry() -> &'static [ModificationType] {
    &REGISTRY
}
