//! Two-part rewrite prompt: a system prompt setting the expert role and
//! constraints, and a user prompt carrying the source text and the
//! requested modification.

use alloc::format;
use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::client::ClientError;
use crate::registry::ModificationType;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptPair {
    pub system: String,
    pub user: String,
}

/// `change the <category> aspect by <gerund instruction>`
pub fn modification_clause(modification: &ModificationType) -> String {
    format!(
        "change the {} aspect by {}",
        modification.category.as_str(),
        modification.gerund
    )
}

pub fn construct_prompt(
    text: &str,
    modification: &ModificationType,
) -> Result<PromptPair, ClientError> {
    if text.trim().is_empty() {
        return Err(ClientError::InvalidInput("source text is empty".into()));
    }
    let category = modification.category.as_str();
    let system = format!(
        "You are an expert in diplomatic communication. You will be given the text of a news \
         article describing a diplomatic event. Rewrite it as a counterfactual version that \
         differs only in its {category} aspect, applying this modification type: {instruction}. \
         Modify only the {category} aspect and leave every other aspect as it is. Maintain the \
         core facts of the event. Produce a plausible alternative of similar length to the \
         original. Respond with the rewritten text only.",
        instruction = modification.instruction,
    );
    let user = format!(
        "Original text:\n{text}\n\nPlease {clause}.\nModification type ({label}): {instruction}",
        clause = modification_clause(modification),
        label = modification.category.label(),
        instruction = modification.instruction,
    );
    Ok(PromptPair { system, user })
}
