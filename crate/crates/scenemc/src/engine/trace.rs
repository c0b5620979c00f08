//! Addresses, choice records and the trace: the mutable state of a chain.

use std::collections::HashMap;
use std::fmt;

use serde_json::{Map, Value as Json};

use super::dist::{Dist, Value};
use crate::{Error, Result};

/// Name of one random choice, e.g. `glyph[3].pos_x` or `global_blur`.
///
/// Addresses are unique within a model and totally ordered (lexicographic),
/// so "variable k of K" is well defined.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Address(String);

impl Address {
    pub fn new(s: impl Into<String>) -> Self {
        Address(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Address {
    fn from(s: &str) -> Self {
        Address(s.to_string())
    }
}

/// The ordered bank of addresses and priors for one model; fixed for the
/// life of a chain.
#[derive(Debug, Clone)]
pub struct AddressSpace {
    entries: Vec<(Address, Dist)>,
    by_name: HashMap<Address, usize>,
    enumerable: Vec<usize>,
}

impl AddressSpace {
    pub fn new(entries: Vec<(Address, Dist)>) -> Result<Self> {
        let mut by_name = HashMap::with_capacity(entries.len());
        let mut enumerable = Vec::new();
        for (i, (addr, dist)) in entries.iter().enumerate() {
            dist.validate()?;
            if by_name.insert(addr.clone(), i).is_some() {
                return Err(Error::Usage(format!("duplicate address {addr}")));
            }
            if dist.is_enumerable() {
                enumerable.push(i);
            }
        }
        Ok(AddressSpace { entries, by_name, enumerable })
    }

    /// Total number of random variables K.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn address(&self, k: usize) -> &Address {
        &self.entries[k].0
    }

    pub fn dist(&self, k: usize) -> &Dist {
        &self.entries[k].1
    }

    pub fn index_of(&self, addr: &Address) -> Option<usize> {
        self.by_name.get(addr).copied()
    }

    /// Indices of the Bernoulli / UniformDiscrete sites.
    pub fn enumerable(&self) -> &[usize] {
        &self.enumerable
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Address, Dist)> {
        self.entries.iter()
    }
}

/// One recorded random choice. `log_prior` always equals
/// `dist.log_density(&value)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Choice {
    pub value: Value,
    pub dist: Dist,
    pub log_prior: f64,
}

impl Choice {
    pub fn new(value: Value, dist: Dist) -> Self {
        let log_prior = dist.log_density(&value);
        Choice { value, dist, log_prior }
    }
}

/// The state of one chain: current values for every address plus the cached
/// rendering and log likelihood they imply.
#[derive(Debug, Clone)]
pub struct Trace<R> {
    choices: Vec<Choice>,
    pub cached_render: R,
    pub cached_loglik: f64,
}

impl<R> Trace<R> {
    pub(crate) fn from_parts(choices: Vec<Choice>, render: R, loglik: f64) -> Self {
        Trace { choices, cached_render: render, cached_loglik: loglik }
    }

    pub fn choices(&self) -> &[Choice] {
        &self.choices
    }

    pub(crate) fn choices_mut(&mut self) -> &mut [Choice] {
        &mut self.choices
    }

    pub fn value(&self, k: usize) -> &Value {
        &self.choices[k].value
    }

    /// Current values, index-aligned with the model's address space.
    pub fn values(&self) -> Values<'_> {
        Values { choices: &self.choices }
    }

    /// Joint log prior of the current choices.
    pub fn log_prior(&self) -> f64 {
        self.choices.iter().map(|c| c.log_prior).sum()
    }

    /// Serializes as a JSON object mapping address strings to values.
    pub fn to_json(&self, space: &AddressSpace) -> Json {
        let mut map = Map::new();
        for (k, choice) in self.choices.iter().enumerate() {
            let v = match choice.value {
                Value::Bool(b) => Json::from(b),
                Value::Int(i) => Json::from(i),
                Value::Real(x) => Json::from(x),
            };
            map.insert(space.address(k).to_string(), v);
        }
        Json::Object(map)
    }
}

/// Reads a trace-values JSON object (address string -> value) back into
/// index-aligned values for `space`.
pub fn values_from_json(json: &Json, space: &AddressSpace) -> Result<Vec<Value>> {
    let obj = json
        .as_object()
        .ok_or_else(|| Error::Data("trace JSON must be an object".into()))?;
    let mut out = Vec::with_capacity(space.len());
    for (addr, dist) in space.iter() {
        let raw = obj
            .get(addr.as_str())
            .ok_or_else(|| Error::Data(format!("trace JSON missing address {addr}")))?;
        let value = match (dist.is_enumerable(), raw) {
            (_, Json::Bool(b)) => Value::Bool(*b),
            (_, Json::Number(n)) if n.is_i64() => Value::Int(n.as_i64().unwrap()),
            (_, Json::Number(n)) => Value::Real(n.as_f64().unwrap()),
            _ => return Err(Error::Data(format!("bad value for address {addr}"))),
        };
        out.push(value);
    }
    Ok(out)
}

/// Borrowed view of a trace's current values.
#[derive(Clone, Copy)]
pub struct Values<'a> {
    choices: &'a [Choice],
}

impl<'a> Values<'a> {
    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }

    pub fn get(&self, k: usize) -> &Value {
        &self.choices[k].value
    }

    pub fn bool_at(&self, k: usize) -> bool {
        self.choices[k].value.as_bool()
    }

    pub fn int_at(&self, k: usize) -> i64 {
        self.choices[k].value.as_int()
    }

    pub fn real_at(&self, k: usize) -> f64 {
        self.choices[k].value.as_real()
    }
}

impl<'a> From<&'a [Choice]> for Values<'a> {
    fn from(choices: &'a [Choice]) -> Self {
        Values { choices }
    }
}
