//! Instruction texts sent to the chat model. Bracketed placeholders are the
//! only parts that get substituted.

pub const SETUP: &str = "Below, please first ask me for examples of good prediction.";

pub const PRACTICE_QUESTION: &str = "Here are the observed frames of an example: [observed]. Now please give your prediction for all joint coordinates of the following frames. Respond 'Finished' once you finish.";

pub const ANSWER_KEY: &str = "Here are the correct answers: [future]. Please check if your predictions and the correct answers are similar. Besides, please also check if your predictions keep limbs the same length across frames (same as the correct answers).";

pub const PREDICTION_COMMAND: &str = "Given the joints observed in the past [L] frames, please describe these observed frames first. Then for each of the following [J] frames, please first describe the joint movements of each joint, and then output your prediction of its coordinates.";

pub const OBSERVED_SLOT: &str = "[observed]";
pub const FUTURE_SLOT: &str = "[future]";
pub const L_SLOT: &str = "[L]";
pub const J_SLOT: &str = "[J]";

/// Substitutes a rendered frame block into a template slot. The block is set
/// on its own lines so frame headers start at the beginning of a line.
pub(crate) fn fill_block(template: &str, slot: &str, block: &str) -> String {
    template.replacen(slot, &format!("\n{block}\n"), 1)
}

pub(crate) fn prediction_command(l: usize, j: usize) -> String {
    PREDICTION_COMMAND
        .replacen(L_SLOT, &l.to_string(), 1)
        .replacen(J_SLOT, &j.to_string(), 1)
}

/// Message asking the model to re-emit its prediction after a parse failure.
pub fn repair_message(error: &str, j: usize) -> String {
    format!("Your answer had {error}. Please re-output all {j} frames with every joint as `name: (x, y, z)`.")
}
