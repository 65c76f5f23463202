//! Pass/fail bookkeeping shared by all verification routines.

use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    /// Human-readable counterexample when the check fails.
    pub witness: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    /// Records a check; `witness` is `None` exactly when it passed.
    pub fn record(&mut self, name: &str, witness: Option<String>) {
        self.checks.push(Check { name: name.to_string(), pass: witness.is_none(), witness });
    }

    pub fn pass(&mut self, name: &str) {
        self.record(name, None);
    }

    pub fn fail(&mut self, name: &str, witness: impl Into<String>) {
        self.record(name, Some(witness.into()));
    }

    pub fn extend(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// First failure as an `Error::Axiom`, if any.
    pub fn into_result(self) -> crate::Result<Report> {
        if let Some(c) = self.failures().next() {
            return Err(crate::Error::Axiom { axiom: c.name.clone(), witness: c.witness.clone().unwrap_or_default() });
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_failure_becomes_the_error() {
        let mut r = Report::new();
        r.pass("a");
        r.fail("b", "x = 1");
        r.fail("c", "y");
        assert!(!r.passed());
        assert_eq!(r.failures().count(), 2);
        assert!(r.get("a").unwrap().pass);
        match r.into_result() {
            Err(crate::Error::Axiom { axiom, witness }) => assert_eq!((axiom.as_str(), witness.as_str()), ("b", "x = 1")),
            other => panic!("{other:?}"),
        }
    }
}
