//! JSON instance documents and CSV front files.
//!
//! ```json
//! {
//!   "name": "example",
//!   "clients": [{"id": "c1", "weight": 1.0}],
//!   "requirements": [
//!     {"id": "r01", "effort": 3, "values": {"c1": 5}},
//!     {"id": "r02", "effort": 2, "satisfaction": 4}
//!   ],
//!   "interactions": {
//!     "implications": [["r01", "r02"]],
//!     "combinations": [],
//!     "exclusions": []
//!   },
//!   "effort_ratios": [0.3, 0.5, 0.75]
//! }
//! ```

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{nondominated_filter, Front};
use crate::problem::{Client, InteractionSet, NrpInstance, Requirement, Solution};

pub const DEFAULT_EFFORT_RATIOS: [f64; 3] = [0.3, 0.5, 0.75];

fn default_ratios() -> Vec<f64> {
    DEFAULT_EFFORT_RATIOS.to_vec()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClientEntry {
    pub id: String,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequirementEntry {
    pub id: String,
    pub effort: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub satisfaction: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InteractionsEntry {
    #[serde(default)]
    pub implications: Vec<(String, String)>,
    #[serde(default)]
    pub combinations: Vec<(String, String)>,
    #[serde(default)]
    pub exclusions: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub name: String,
    #[serde(default)]
    pub clients: Vec<ClientEntry>,
    pub requirements: Vec<RequirementEntry>,
    #[serde(default)]
    pub interactions: InteractionsEntry,
    #[serde(default = "default_ratios")]
    pub effort_ratios: Vec<f64>,
}

impl InstanceFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text).map_err(|e| {
            Error::parse(format!("line {}, column {}", e.line(), e.column()), e.to_string())
        })?;
        file.check()?;
        Ok(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = read_text(path)?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Parse { location, message } => {
                Error::parse(format!("{}: {location}", path.display()), message)
            }
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), self.to_json().as_bytes())
    }

    /// Document for an existing instance. Client scores are kept when present.
    pub fn from_instance(instance: &NrpInstance, effort_ratios: Vec<f64>) -> Self {
        InstanceFile {
            name: instance.name.clone(),
            clients: instance
                .clients
                .iter()
                .map(|c| ClientEntry {
                    id: c.id.clone(),
                    weight: c.weight,
                })
                .collect(),
            requirements: instance
                .requirements
                .iter()
                .map(|r| RequirementEntry {
                    id: r.id.clone(),
                    effort: r.effort,
                    values: r.client_values.clone(),
                    satisfaction: r.client_values.is_none().then_some(r.satisfaction),
                })
                .collect(),
            interactions: InteractionsEntry {
                implications: instance.interactions.implications.clone(),
                combinations: instance.interactions.combinations.clone(),
                exclusions: instance.interactions.exclusions.clone(),
            },
            effort_ratios,
        }
    }

    /// Checks references and pairs, reporting the JSON path of the first problem.
    fn check(&self) -> Result<()> {
        let mut clients = HashSet::new();
        for (i, c) in self.clients.iter().enumerate() {
            if !clients.insert(c.id.as_str()) {
                return Err(Error::parse(format!("clients[{i}].id"), format!("duplicate client id `{}`", c.id)));
            }
        }
        let mut reqs = HashMap::new();
        for (i, r) in self.requirements.iter().enumerate() {
            if reqs.insert(r.id.as_str(), i).is_some() {
                return Err(Error::parse(
                    format!("requirements[{i}].id"),
                    format!("duplicate requirement id `{}`", r.id),
                ));
            }
            match (&r.values, r.satisfaction) {
                (Some(values), None) => {
                    if let Some(c) = values.keys().find(|c| !clients.contains(c.as_str())) {
                        return Err(Error::parse(
                            format!("requirements[{i}].values.{c}"),
                            format!("unknown client `{c}`"),
                        ));
                    }
                }
                (None, Some(_)) => {}
                _ => {
                    return Err(Error::parse(
                        format!("requirements[{i}]"),
                        "exactly one of `values` and `satisfaction` is required",
                    ))
                }
            }
        }
        let mut seen: HashMap<(&str, &str), String> = HashMap::new();
        let kinds = [
            ("implications", &self.interactions.implications),
            ("combinations", &self.interactions.combinations),
            ("exclusions", &self.interactions.exclusions),
        ];
        for (kind, list) in kinds {
            for (k, (a, b)) in list.iter().enumerate() {
                let at = format!("interactions.{kind}[{k}]");
                for id in [a, b] {
                    if !reqs.contains_key(id.as_str()) {
                        return Err(Error::parse(at, format!("unknown requirement `{id}`")));
                    }
                }
                let key = if a < b { (a.as_str(), b.as_str()) } else { (b.as_str(), a.as_str()) };
                if let Some(prev) = seen.insert(key, at.clone()) {
                    return Err(Error::parse(at, format!("pair ({a}, {b}) already declared at {prev}")));
                }
            }
        }
        for (i, &ratio) in self.effort_ratios.iter().enumerate() {
            if !(ratio.is_finite() && ratio >= 0.0) {
                return Err(Error::parse(format!("effort_ratios[{i}]"), format!("invalid ratio {ratio}")));
            }
        }
        Ok(())
    }

    /// The instance with `B = ratio * total effort`.
    pub fn instance(&self, ratio: f64) -> Result<NrpInstance> {
        self.check()?;
        let requirements: Vec<Requirement> = self
            .requirements
            .iter()
            .map(|r| match (&r.values, r.satisfaction) {
                (Some(values), _) => {
                    Requirement::with_client_values(r.id.clone(), r.effort, values.clone())
                }
                (None, s) => Requirement::with_satisfaction(r.id.clone(), r.effort, s.unwrap_or(0.0)),
            })
            .collect();
        let total: f64 = requirements.iter().map(|r| r.effort).sum();
        NrpInstance::new(
            self.name.clone(),
            self.clients
                .iter()
                .map(|c| Client {
                    id: c.id.clone(),
                    weight: c.weight,
                })
                .collect(),
            requirements,
            InteractionSet {
                implications: self.interactions.implications.clone(),
                combinations: self.interactions.combinations.clone(),
                exclusions: self.interactions.exclusions.clone(),
            },
            ratio * total,
        )
    }

    /// One instance per listed effort ratio.
    pub fn instances(&self) -> Result<Vec<(f64, NrpInstance)>> {
        self.effort_ratios
            .iter()
            .map(|&r| self.instance(r).map(|i| (r, i)))
            .collect()
    }
}

/// Loads a document and builds one instance per effort ratio.
pub fn parse_instance(path: impl AsRef<Path>) -> Result<Vec<(f64, NrpInstance)>> {
    InstanceFile::load(path)?.instances()
}

/// Reads a whole file, naming it in any I/O error.
pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// One line of a front file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontRow {
    pub effort: f64,
    pub satisfaction: f64,
    /// Requirement ids joined by `;`, sorted.
    pub requirements: String,
}

impl FrontRow {
    pub fn ids(&self) -> Vec<&str> {
        self.requirements.split(';').filter(|s| !s.is_empty()).collect()
    }

    pub fn point(&self) -> (f64, f64) {
        (self.satisfaction, self.effort)
    }
}

pub fn front_rows(front: &Front, instance: &NrpInstance) -> Vec<FrontRow> {
    let mut rows: Vec<FrontRow> = front
        .solutions()
        .iter()
        .map(|s| {
            let mut ids: Vec<&str> = instance.ids_of(s.selected()).collect();
            ids.sort_unstable();
            FrontRow {
                effort: s.effort(),
                satisfaction: s.satisfaction(),
                requirements: ids.join(";"),
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        a.effort
            .total_cmp(&b.effort)
            .then(b.satisfaction.total_cmp(&a.satisfaction))
            .then_with(|| a.requirements.cmp(&b.requirements))
    });
    rows
}

pub fn front_csv(front: &Front, instance: &NrpInstance) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in front_rows(front, instance) {
        w.serialize(row).map_err(|e| Error::Io(e.into()))?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn write_front(path: impl AsRef<Path>, front: &Front, instance: &NrpInstance) -> Result<()> {
    write_atomic(path.as_ref(), &front_csv(front, instance)?)
}

pub fn read_front_rows(path: impl AsRef<Path>) -> Result<Vec<FrontRow>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| csv_error(path, e))).collect()
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let location = match e.position() {
        Some(p) => format!("{}: line {}", path.display(), p.line()),
        None => path.display().to_string(),
    };
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        kind => Error::parse(location, format!("{kind:?}")),
    }
}

/// Rebuilds a front from file rows, checking each row's objective values,
/// its budget and the mutual non-dominance of the rows.
pub fn front_from_rows(instance: &NrpInstance, rows: &[FrontRow]) -> Result<Front> {
    let mut solutions = Vec::with_capacity(rows.len());
    for (k, row) in rows.iter().enumerate() {
        let at = || format!("row {}", k + 1);
        let mut bits = instance.empty_selection();
        for id in row.ids() {
            let j = instance
                .index_of(id)
                .ok_or_else(|| Error::parse(at(), format!("unknown requirement `{id}`")))?;
            bits.insert(j);
        }
        let sol = Solution::from_selection(instance, bits);
        if sol.effort() != row.effort || sol.satisfaction() != row.satisfaction {
            return Err(Error::parse(
                at(),
                format!(
                    "stored point ({}, {}) differs from recomputed ({}, {})",
                    row.satisfaction,
                    row.effort,
                    sol.satisfaction(),
                    sol.effort()
                ),
            ));
        }
        if sol.effort() > instance.effort_limit {
            return Err(Error::Domain(format!("{} exceeds the effort limit", at())));
        }
        solutions.push(sol);
    }
    let front = nondominated_filter(instance.name.clone(), solutions.iter().cloned());
    if front.len() != solutions.len() {
        return Err(Error::Domain("front rows are not mutually non-dominated".into()));
    }
    Ok(front)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::InteractionGraph;

    const FIXTURE: &str = include_str!("../fixtures/five_requirements.json");

    #[test]
    fn minimal_document() {
        let text = r#"{"name":"m","clients":[{"id":"c","weight":1}],
            "requirements":[{"id":"r","effort":3,"values":{"c":5}}],"effort_ratios":[1.0]}"#;
        let file = InstanceFile::from_json(text).unwrap();
        let all = file.instances().unwrap();
        assert_eq!(all.len(), 1);
        let inst = &all[0].1;
        assert_eq!(inst.effort_limit, 3.0);
        assert_eq!(inst.requirements[0].satisfaction, 5.0);
    }

    #[test]
    fn fixture_builds_the_example_graph() {
        let file = InstanceFile::from_json(FIXTURE).unwrap();
        let inst = file.instance(1.0).unwrap();
        let g = InteractionGraph::build(&inst).unwrap();
        let mut ids: Vec<&str> = g.nodes().iter().map(|n| n.id.as_str()).collect();
        ids.sort_unstable();
        assert_eq!(ids, ["I_r02", "I_r03", "r01+r05", "r02", "r03", "r04"]);
        assert_eq!(inst.total_effort(), 12.0);
    }

    #[test]
    fn round_trip() {
        let file = InstanceFile::from_json(FIXTURE).unwrap();
        let again = InstanceFile::from_json(&file.to_json()).unwrap();
        assert_eq!(file, again);
        let inst = file.instance(0.5).unwrap();
        let back = InstanceFile::from_instance(&inst, file.effort_ratios.clone());
        assert_eq!(back.instance(0.5).unwrap(), inst);
    }

    fn location_of(text: &str) -> (String, String) {
        match InstanceFile::from_json(text).unwrap_err() {
            Error::Parse { location, message } => (location, message),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn error_locations() {
        let (loc, _) = location_of("{\n  \"name\": \"x\",\n  \"requirements\": [}\n");
        assert!(loc.starts_with("line 3"), "{loc}");
        let (loc, msg) = location_of(
            r#"{"name":"x","requirements":[{"id":"a","effort":1,"satisfaction":1}],
               "interactions":{"implications":[["a","zz"]]}}"#,
        );
        assert_eq!(loc, "interactions.implications[0]");
        assert!(msg.contains("zz"));
        let (loc, _) = location_of(
            r#"{"name":"x","requirements":[{"id":"a","effort":1,"satisfaction":1},{"id":"b","effort":1,"satisfaction":1}],
               "interactions":{"implications":[["a","b"]],"exclusions":[["b","a"]]}}"#,
        );
        assert_eq!(loc, "interactions.exclusions[0]");
        let (loc, _) = location_of(
            r#"{"name":"x","requirements":[{"id":"a","effort":1,"values":{"ghost":2}}]}"#,
        );
        assert_eq!(loc, "requirements[0].values.ghost");
        let (loc, _) = location_of(r#"{"name":"x","requirements":[{"id":"a","effort":1}]}"#);
        assert_eq!(loc, "requirements[0]");
    }

    #[test]
    fn front_csv_layout() {
        let file = InstanceFile::from_json(FIXTURE).unwrap();
        let inst = file.instance(1.0).unwrap();
        let g = InteractionGraph::build(&inst).unwrap();
        let front = crate::exact::brute_force_front(&inst, &g).unwrap();
        let text = String::from_utf8(front_csv(&front, &inst).unwrap()).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("effort,satisfaction,requirements"));
        assert_eq!(lines.next(), Some("0.0,0.0,"));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        write_front(&path, &front, &inst).unwrap();
        let rows = read_front_rows(&path).unwrap();
        assert_eq!(front_from_rows(&inst, &rows).unwrap(), front);
    }

    #[test]
    fn tampered_front_is_rejected() {
        let file = InstanceFile::from_json(FIXTURE).unwrap();
        let inst = file.instance(1.0).unwrap();
        let rows = vec![FrontRow { effort: 3.0, satisfaction: 9.0, requirements: "r04;r02".into() }];
        assert_eq!(front_from_rows(&inst, &rows).unwrap_err().category(), "parse");
    }
}
