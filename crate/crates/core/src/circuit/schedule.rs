//! Ordered gate lists and their line-oriented text form.
//!
//! ```text
//! # phase: M1 depth=0 mu=0
//! RESET 0 4
//! # phase: BCS 0->1 nu=0 nu0=0
//! CNOT 0 1
//! ZCSWAP 3 1 2
//! SWAP 2 3
//! ```
//!
//! One gate per line, indices 0-based. `# phase:` lines mark boundaries;
//! other `#` lines and blank lines are ignored when parsing.

use std::fmt;
use std::str::FromStr;

use super::{Gate, GateCosts, GateKind};
use crate::Error;

const PHASE_PREFIX: &str = "# phase:";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Instruction {
    Gate(Gate),
    Phase(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Schedule {
    items: Vec<Instruction>,
}

impl Schedule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, gate: Gate) {
        self.items.push(Instruction::Gate(gate));
    }

    /// Appends a phase marker. Surrounding whitespace is dropped and line
    /// breaks are flattened so the text form round-trips.
    pub fn phase(&mut self, label: impl AsRef<str>) {
        let label = label.as_ref().split_whitespace().collect::<Vec<_>>().join(" ");
        self.items.push(Instruction::Phase(label));
    }

    pub fn extend(&mut self, other: &Schedule) {
        self.items.extend_from_slice(&other.items);
    }

    pub fn items(&self) -> &[Instruction] {
        &self.items
    }

    pub fn gates(&self) -> impl DoubleEndedIterator<Item = &Gate> + '_ {
        self.items.iter().filter_map(|i| match i {
            Instruction::Gate(g) => Some(g),
            Instruction::Phase(_) => None,
        })
    }

    pub fn phases(&self) -> impl Iterator<Item = &str> + '_ {
        self.items.iter().filter_map(|i| match i {
            Instruction::Phase(p) => Some(p.as_str()),
            Instruction::Gate(_) => None,
        })
    }

    pub fn gate_count(&self) -> usize {
        self.gates().count()
    }

    pub fn count_kind(&self, kind: GateKind) -> usize {
        self.gates().filter(|g| g.kind() == kind).count()
    }

    pub fn step_count(&self, costs: &GateCosts) -> u64 {
        self.gates().map(|g| costs.cost(g.kind())).sum()
    }

    /// Highest computation-row index touched by any gate.
    pub fn max_index(&self) -> Option<usize> {
        self.gates().map(Gate::max_index).max()
    }

    /// The gates in reverse order, phases dropped.
    pub fn reversed(&self) -> Schedule {
        Schedule {
            items: self.gates().rev().map(|g| Instruction::Gate(*g)).collect(),
        }
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for item in &self.items {
            match item {
                Instruction::Gate(g) => writeln!(f, "{g}")?,
                Instruction::Phase(p) => writeln!(f, "{PHASE_PREFIX} {p}")?,
            }
        }
        Ok(())
    }
}

impl FromStr for Schedule {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self, Error> {
        let mut schedule = Schedule::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if let Some(label) = line.strip_prefix(PHASE_PREFIX) {
                schedule.phase(label);
            } else if line.is_empty() || line.starts_with('#') {
                continue;
            } else {
                let gate = line.parse::<Gate>().map_err(|message| Error::Parse {
                    line: idx + 1,
                    message,
                })?;
                schedule.push(gate);
            }
        }
        Ok(schedule)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_all_gate_kinds() {
        let text = "# phase: M1 depth=0\nRESET 0 4\nCNOT 0 1\n\n# a comment\nZCSWAP 3 1 2\nSWAP 2 3\n";
        let s: Schedule = text.parse().unwrap();
        assert_eq!(s.gate_count(), 4);
        assert_eq!(s.phases().collect::<Vec<_>>(), vec!["M1 depth=0"]);
        assert_eq!(
            s.to_text(),
            "# phase: M1 depth=0\nRESET 0 4\nCNOT 0 1\nZCSWAP 3 1 2\nSWAP 2 3\n"
        );
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = "CNOT 0 1\nCNOT 0\n".parse::<Schedule>().unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
        assert!("FLIP 0".parse::<Schedule>().is_err());
        assert!("SWAP 0 x".parse::<Schedule>().is_err());
        assert!("SWAP -1 2".parse::<Schedule>().is_err());
    }

    #[test]
    fn step_and_kind_counts() {
        let s: Schedule = "RESET 0 8\nCNOT 0 1\nZCSWAP 2 0 1\nSWAP 1 2".parse().unwrap();
        assert_eq!(s.step_count(&GateCosts::default()), 4);
        assert_eq!(s.step_count(&GateCosts::with_zcswap(2)), 5);
        assert_eq!(s.count_kind(GateKind::Reset), 1);
        assert_eq!(s.max_index(), Some(7));
        assert_eq!(Schedule::new().max_index(), None);
    }

    fn arb_instruction() -> impl Strategy<Value = Instruction> {
        let idx = 0usize..10_000;
        prop_oneof![
            (idx.clone(), idx.clone()).prop_map(|(control, target)| Instruction::Gate(Gate::Cnot { control, target })),
            (idx.clone(), idx.clone()).prop_map(|(a, b)| Instruction::Gate(Gate::Swap { a, b })),
            (idx.clone(), idx.clone(), idx.clone())
                .prop_map(|(zero_control, a, b)| Instruction::Gate(Gate::ZcSwap { zero_control, a, b })),
            (idx.clone(), 1usize..500).prop_map(|(start, len)| Instruction::Gate(Gate::Reset { start, len })),
            "[A-Za-z0-9=>_ -]{0,24}".prop_map(|l| Instruction::Phase(l.split_whitespace().collect::<Vec<_>>().join(" "))),
        ]
    }

    proptest! {
        #[test]
        fn text_round_trip(items in proptest::collection::vec(arb_instruction(), 0..60)) {
            let s = Schedule { items };
            let text = s.to_text();
            let back: Schedule = text.parse().unwrap();
            prop_assert_eq!(&back, &s);
            prop_assert_eq!(back.to_text(), text);
        }
    }
}
