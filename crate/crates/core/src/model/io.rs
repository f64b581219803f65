//! Instance text format:
//!
//! ```text
//! {"n":2,"kind":"pair","couplings":[[0,1,1.0]]}
//! ```
//!
//! `kind` is `"pair"` or `"sqdiff"`; couplings are zero-based `[i, j, J]`
//! triples. [`store_instance`] writes the canonical compact form (pairs sorted
//! with `i < j`, no whitespace), so `store(load(t)) == t` for canonical `t`.

use serde::{Deserialize, Serialize};

use super::{FunctionalKind, IsingInstance};
use crate::Result;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceRecord {
    n: usize,
    kind: FunctionalKind,
    couplings: Vec<(usize, usize, f64)>,
}

pub fn load_instance(text: &str) -> Result<IsingInstance> {
    let record: InstanceRecord = serde_json::from_str(text)?;
    IsingInstance::new(record.n, record.kind, record.couplings)
}

pub fn store_instance(instance: &IsingInstance) -> String {
    let record = InstanceRecord {
        n: instance.n(),
        kind: instance.kind(),
        couplings: instance
            .couplings()
            .iter()
            .map(|c| (c.i, c.j, c.value))
            .collect(),
    };
    serde_json::to_string(&record).expect("instance records always serialize")
}
