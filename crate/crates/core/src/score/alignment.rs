use std::fmt;

use super::{AlignedLine, NoteEvent, ScoreError};

/// A single broken alignment rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AlignmentRule {
    /// The number of label-1 notes differs from the number of syllables.
    CountMismatch { syllables: usize, label_sum: usize },
    /// The line is empty or its last note does not close a group.
    FinalLabelNotOne,
    /// A rest closes a group (index into the line's notes).
    LabelledRest { note: usize },
}

impl fmt::Display for AlignmentRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlignmentRule::CountMismatch { syllables, label_sum } => {
                write!(f, "label sum {label_sum} does not equal syllable count {syllables}")
            }
            AlignmentRule::FinalLabelNotOne => f.write_str("final note does not carry label 1"),
            AlignmentRule::LabelledRest { note } => write!(f, "rest at note {note} carries label 1"),
        }
    }
}

/// Every rule a line breaks, in checking order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentViolations(pub Vec<AlignmentRule>);

impl fmt::Display for AlignmentViolations {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, rule) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{rule}")?;
        }
        Ok(())
    }
}

impl std::error::Error for AlignmentViolations {}

/// Checks that the labels of `line` partition its notes into exactly one
/// group per syllable.
pub fn validate_alignment(line: &AlignedLine) -> Result<(), AlignmentViolations> {
    let mut broken = Vec::new();
    let label_sum = line.notes.iter().filter(|n| n.label).count();
    if label_sum != line.syllables.len() {
        broken.push(AlignmentRule::CountMismatch {
            syllables: line.syllables.len(),
            label_sum,
        });
    }
    if !line.notes.last().is_some_and(|n| n.label) {
        broken.push(AlignmentRule::FinalLabelNotOne);
    }
    broken.extend(
        line.notes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.label && n.pitch.is_rest())
            .map(|(note, _)| AlignmentRule::LabelledRest { note }),
    );
    if broken.is_empty() {
        Ok(())
    } else {
        Err(AlignmentViolations(broken))
    }
}

/// Splits notes into per-syllable groups, each ending at a label-1 note.
pub fn split_by_labels(notes: &[NoteEvent]) -> Result<Vec<&[NoteEvent]>, ScoreError> {
    if !notes.last().is_some_and(|n| n.label) {
        return Err(ScoreError::UnterminatedGroup);
    }
    Ok(notes.split_inclusive(|n| n.label).collect())
}

/// Concatenates note groups, rewriting labels so that exactly the last
/// note of each group carries label 1.
pub fn merge_groups<G: AsRef<[NoteEvent]>>(groups: &[G]) -> Result<Vec<NoteEvent>, ScoreError> {
    let mut notes = Vec::with_capacity(groups.iter().map(|g| g.as_ref().len()).sum());
    for (k, group) in groups.iter().enumerate() {
        let group = group.as_ref();
        if group.is_empty() {
            return Err(ScoreError::EmptyGroup(k));
        }
        let last = group.len() - 1;
        notes.extend(
            group
                .iter()
                .enumerate()
                .map(|(i, n)| NoteEvent { label: i == last, ..*n }),
        );
    }
    Ok(notes)
}

/// 1-based index of the syllable the next note sings, given the labels of
/// the notes already emitted on the line. Clamped to `num_syllables`.
pub fn syllable_index_for_note(labels_so_far: &[bool], num_syllables: usize) -> usize {
    debug_assert!(num_syllables >= 1);
    let closed = labels_so_far.iter().filter(|&&l| l).count();
    (closed + 1).min(num_syllables.max(1))
}
