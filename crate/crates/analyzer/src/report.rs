use std::fmt;

use crate::system::TransitionSystem;
use crate::verify::{Step, Verdict};

/// Outcome of one verification, with the witness rendered as states.
#[derive(Clone, Debug)]
pub struct Report {
    pub definition: String,
    pub instance: String,
    pub verdict: Verdict,
    witness: Vec<String>,
}

impl Report {
    pub fn new(
        definition: impl Into<String>,
        instance: impl Into<String>,
        verdict: Verdict,
        ts: &TransitionSystem,
    ) -> Self {
        let witness = match &verdict {
            Verdict::Pass => Vec::new(),
            Verdict::CounterExample(c) => c
                .path
                .iter()
                .enumerate()
                .map(|(i, &s)| {
                    let state = ts.state(s);
                    match i.checked_sub(1).map(|j| c.steps[j]) {
                        None => format!("{state}"),
                        Some(Step::Program) => format!("-> {state}"),
                        Some(Step::Adversary) => format!("~> {state}  (adversary)"),
                        Some(Step::Stutter) => format!("== {state}  (stutter)"),
                    }
                })
                .collect(),
        };
        Report { definition: definition.into(), instance: instance.into(), verdict, witness }
    }

    pub fn passed(&self) -> bool {
        self.verdict.is_pass()
    }

    pub fn witness(&self) -> &[String] {
        &self.witness
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "definition: {}", self.definition)?;
        writeln!(f, "instance:   {}", self.instance)?;
        match &self.verdict {
            Verdict::Pass => writeln!(f, "result:     Pass"),
            Verdict::CounterExample(c) => {
                writeln!(f, "result:     CounterExample ({})", c.violation)?;
                for line in &self.witness {
                    writeln!(f, "  {line}")?;
                }
                Ok(())
            }
        }
    }
}
