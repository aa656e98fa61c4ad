//! Outcome records for the property checkers.
//!
//! Asserted properties decide pass/fail; measured quantities are carried along
//! for inspection and never fail a report.

use alloc::string::String;
use alloc::vec::Vec;

/// One asserted property aggregated over all trials of a checker.
#[derive(Debug, Clone, PartialEq)]
pub struct Assertion {
    pub prop: String,
    pub pass: bool,
    /// Worst observed defect. Its meaning is property specific, but it is
    /// always the quantity compared against the tolerance.
    pub defect: f64,
    /// Input that produced `defect`, flattened column-major when it is a matrix.
    pub witness: Vec<f64>,
}

/// A quantity recorded for inspection only.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub quantity: String,
    pub value: f64,
    pub witness: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    pub name: String,
    pub seed: u64,
    pub trials: usize,
    pub asserted: Vec<Assertion>,
    pub measured: Vec<Measurement>,
}

impl PropertyReport {
    pub fn new(name: &str, seed: u64, trials: usize) -> Self {
        PropertyReport {
            name: name.into(),
            seed,
            trials,
            asserted: Vec::new(),
            measured: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.asserted.iter().all(|a| a.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Assertion> {
        self.asserted.iter().filter(|a| !a.pass)
    }

    pub fn assertion(&self, prop: &str) -> Option<&Assertion> {
        self.asserted.iter().find(|a| a.prop == prop)
    }

    pub fn measurement(&self, quantity: &str) -> Option<&Measurement> {
        self.measured.iter().find(|m| m.quantity == quantity)
    }

    pub fn push_assertion(&mut self, tracker: Tracker) {
        self.asserted.push(tracker.into_assertion());
    }

    pub fn push_measurement(&mut self, quantity: &str, value: f64, witness: Vec<f64>) {
        self.measured.push(Measurement {
            quantity: quantity.into(),
            value,
            witness,
        });
    }

    /// Appends every entry of `other`, prefixing property names with `prefix`.
    pub fn absorb(&mut self, prefix: &str, other: PropertyReport) {
        for mut a in other.asserted {
            a.prop = alloc::format!("{prefix}{}", a.prop);
            self.asserted.push(a);
        }
        for mut m in other.measured {
            m.quantity = alloc::format!("{prefix}{}", m.quantity);
            self.measured.push(m);
        }
    }
}

/// Running worst-case tracker for one asserted property.
///
/// Once a trial fails, only failing trials can replace the witness, so a
/// failing assertion always reports an input that reproduces a failure.
#[derive(Debug, Clone)]
pub struct Tracker {
    prop: String,
    pass: bool,
    defect: f64,
    witness: Vec<f64>,
}

impl Tracker {
    pub fn new(prop: &str) -> Self {
        Tracker {
            prop: prop.into(),
            pass: true,
            defect: f64::NEG_INFINITY,
            witness: Vec::new(),
        }
    }

    /// Records one trial. `witness` is only materialized when it is kept.
    pub fn record<F>(&mut self, ok: bool, defect: f64, witness: F)
    where
        F: FnOnce() -> Vec<f64>,
    {
        let ok = ok && !defect.is_nan();
        if !ok && self.pass {
            self.pass = false;
            self.defect = defect;
            self.witness = witness();
        } else if ok == self.pass && (defect > self.defect || defect.is_nan()) {
            self.defect = defect;
            self.witness = witness();
        }
    }

    pub fn passed(&self) -> bool {
        self.pass
    }

    pub fn into_assertion(self) -> Assertion {
        Assertion {
            prop: self.prop,
            pass: self.pass,
            defect: if self.defect == f64::NEG_INFINITY {
                0.0
            } else {
                self.defect
            },
            witness: self.witness,
        }
    }
}

/// Running maximum of a measured quantity with its witness.
#[derive(Debug, Clone)]
pub struct MaxTracker {
    quantity: String,
    value: f64,
    witness: Vec<f64>,
}

impl MaxTracker {
    pub fn new(quantity: &str) -> Self {
        MaxTracker {
            quantity: quantity.into(),
            value: f64::NEG_INFINITY,
            witness: Vec::new(),
        }
    }

    pub fn record<F: FnOnce() -> Vec<f64>>(&mut self, value: f64, witness: F) {
        if value > self.value || (value.is_nan() && !self.value.is_nan()) {
            self.value = value;
            self.witness = witness();
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn into_measurement(self) -> Measurement {
        Measurement {
            quantity: self.quantity,
            value: if self.value == f64::NEG_INFINITY {
                0.0
            } else {
                self.value
            },
            witness: self.witness,
        }
    }
}
