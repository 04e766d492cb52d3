//! JSON instance files.
//!
//! ```json
//! {
//!   "alphabet": ["A", "B", "C"],
//!   "objective": { "direction": "maximize", "tau": 5, "values": { "A": 4, "B": 5, "C": 1 } },
//!   "entities": [ { "set": ["A", "B"], "databases": 1 }, { "set": ["B", "C"], "databases": 2 } ],
//!   "leader": 0,
//!   "seed": 7
//! }
//! ```
//!
//! Optional `scenarios` override the objective, database counts or field and
//! carry expected results for `verify-examples`.

use std::collections::BTreeMap;
use std::path::Path;

use dofsp_core::model::{Alphabet, Direction, FeasibleSet, Instance, Objective};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::fixtures;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    pub direction: Direction,
    pub tau: u32,
    /// Objective value per alphabet label.
    pub values: BTreeMap<String, u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntitySpec {
    pub set: Vec<String>,
    pub databases: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stopping_round: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub download: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upload: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub round_costs: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub naive_cost: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub topology: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<ObjectiveSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub databases: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<u32>,
    #[serde(default)]
    pub expect: Expect,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub alphabet: Vec<String>,
    pub objective: ObjectiveSpec,
    pub entities: Vec<EntitySpec>,
    #[serde(default)]
    pub leader: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scenarios: Vec<Scenario>,
}

fn objective(alphabet: &Alphabet, spec: &ObjectiveSpec) -> Result<Objective> {
    for label in spec.values.keys() {
        if alphabet.index_of(label).is_none() {
            return Err(CliError::Usage(format!("objective value for unknown label {label:?}")));
        }
    }
    let values = alphabet
        .labels()
        .iter()
        .map(|l| {
            spec.values
                .get(l)
                .copied()
                .ok_or_else(|| CliError::Usage(format!("no objective value for label {l:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Objective::new(values, spec.direction, spec.tau)?)
}

fn objective_spec(instance: &Instance) -> ObjectiveSpec {
    let o = instance.objective();
    ObjectiveSpec {
        direction: o.direction(),
        tau: o.tau(),
        values: instance
            .alphabet()
            .labels()
            .iter()
            .cloned()
            .zip(o.values().iter().copied())
            .collect(),
    }
}

impl InstanceFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Reads a file, or a bundled fixture when `name` is `example1`,
    /// `example2.json` and so on and no such file exists.
    pub fn load(name: &str) -> Result<Self> {
        let path = Path::new(name);
        if !path.exists() {
            if let Some(text) = fixtures::get(name) {
                return Self::parse(text);
            }
        }
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn instance(&self) -> Result<Instance> {
        let alphabet = Alphabet::new(self.alphabet.clone())?;
        let objective = objective(&alphabet, &self.objective)?;
        let sets = self
            .entities
            .iter()
            .map(|e| FeasibleSet::from_labels(&alphabet, &e.set))
            .collect::<dofsp_core::error::Result<Vec<_>>>()?;
        let databases = self.entities.iter().map(|e| e.databases).collect();
        Ok(Instance::new(alphabet, sets, objective, databases, self.leader)?)
    }

    pub fn from_instance(instance: &Instance, seed: Option<u64>) -> Self {
        let alphabet = instance.alphabet();
        Self {
            name: None,
            alphabet: alphabet.labels().to_vec(),
            objective: objective_spec(instance),
            entities: instance
                .sets()
                .iter()
                .zip(instance.databases())
                .map(|(s, &databases)| EntitySpec {
                    set: s.members().iter().map(|&k| alphabet.label(k).to_string()).collect(),
                    databases,
                })
                .collect(),
            leader: instance.leader(),
            seed,
            scenarios: Vec::new(),
        }
    }

    pub fn scenario(&self, name: &str) -> Result<&Scenario> {
        self.scenarios
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| CliError::Usage(format!("no scenario named {name:?}")))
    }

    /// The base instance with the scenario's overrides applied.
    pub fn scenario_instance(&self, scenario: &Scenario) -> Result<Instance> {
        let mut inst = self.instance()?;
        if let Some(spec) = &scenario.objective {
            inst = inst.with_objective(objective(inst.alphabet(), spec)?)?;
        }
        if let Some(dbs) = &scenario.databases {
            inst = inst.with_databases(dbs.clone())?;
        }
        Ok(inst)
    }
}
