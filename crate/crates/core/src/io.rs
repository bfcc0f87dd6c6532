//! JSON and JSON-lines file formats. Agents are 1-based in every file.
//!
//! ```text
//! game       {"kind":"fhg","n":3,"adj":[[0,1,0],[1,0,0],[0,0,0]]}
//!            {"kind":"anon","n":2,"vals":[[1.0,0.5],[0.2,0.7]]}
//! partition  {"blocks":[[1,2],[3]]}
//! samples    {"S":[1,3],"v":{"1":0.5,"3":0.0}}   one record per line
//! ```

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value;

use crate::coalition::Coalition;
use crate::distributions::DistSpec;
use crate::error::{Error, Result};
use crate::game::{AnonymousHg, Game, HedonicGame, SimpleFhg};
use crate::learning::SampleRecord;
use crate::partition::Partition;

/// `serde(with = ...)` adapters that shift 0-based agent ids to 1-based.
pub mod one_based {
    pub mod agent {
        use serde::{Serialize, Serializer};

        pub fn serialize<S: Serializer>(agent: &usize, s: S) -> Result<S::Ok, S::Error> {
            (agent + 1).serialize(s)
        }
    }

    pub mod agents {
        use serde::Serializer;

        pub fn serialize<S: Serializer>(agents: &[usize], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(agents.iter().map(|a| a + 1))
        }
    }

    pub mod agents_opt {
        use serde::{Serialize, Serializer};

        pub fn serialize<S: Serializer>(agents: &Option<Vec<usize>>, s: S) -> Result<S::Ok, S::Error> {
            agents.as_ref().map(|v| v.iter().map(|a| a + 1).collect::<Vec<_>>()).serialize(s)
        }
    }

    pub mod coalitions {
        use crate::coalition::Coalition;
        use serde::Serializer;

        pub fn serialize<S: Serializer>(cs: &[Coalition], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(cs.iter().map(Coalition::to_one_based))
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind")]
enum GameFile {
    #[serde(rename = "fhg")]
    Fhg {
        n: usize,
        adj: Vec<Vec<u8>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        provenance: Option<Value>,
    },
    #[serde(rename = "anon")]
    Anon {
        n: usize,
        vals: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        provenance: Option<Value>,
    },
}

/// Serializes a game, optionally with a free-form provenance object.
pub fn game_to_json(game: &Game, provenance: Option<Value>) -> String {
    let file = match game {
        Game::Fhg(g) => GameFile::Fhg {
            n: g.n(),
            adj: g.to_matrix().iter().map(|r| r.iter().map(|&b| u8::from(b)).collect()).collect(),
            provenance,
        },
        Game::Anon(g) => GameFile::Anon { n: g.n(), vals: g.rows().to_vec(), provenance },
    };
    serde_json::to_string_pretty(&file).expect("game serializes")
}

/// Parses a game file, returning the provenance object if present.
pub fn parse_game(text: &str) -> Result<(Game, Option<Value>)> {
    match serde_json::from_str(text)? {
        GameFile::Fhg { n, adj, provenance } => {
            if adj.len() != n {
                return Err(Error::InvalidGame(format!("n = {n} but adj has {} rows", adj.len())));
            }
            if let Some(x) = adj.iter().flatten().find(|&&x| x > 1) {
                return Err(Error::InvalidGame(format!("adjacency entries must be 0 or 1, got {x}")));
            }
            let m: Vec<Vec<bool>> = adj.iter().map(|r| r.iter().map(|&x| x == 1).collect()).collect();
            Ok((Game::Fhg(SimpleFhg::from_matrix(&m)?), provenance))
        }
        GameFile::Anon { n, vals, provenance } => {
            if vals.len() != n {
                return Err(Error::InvalidGame(format!("n = {n} but vals has {} rows", vals.len())));
            }
            Ok((Game::Anon(AnonymousHg::new(vals)?), provenance))
        }
    }
}

#[derive(Serialize, Deserialize)]
struct PartitionFile {
    blocks: Vec<Vec<usize>>,
}

pub fn partition_to_json(partition: &Partition) -> String {
    serde_json::to_string(&PartitionFile { blocks: partition.to_one_based() }).expect("partition serializes")
}

/// Parses and validates a partition of `n` agents.
pub fn parse_partition(text: &str, n: usize) -> Result<Partition> {
    let file: PartitionFile = serde_json::from_str(text)?;
    let mut lists = Vec::with_capacity(file.blocks.len());
    for block in &file.blocks {
        let mut list = Vec::with_capacity(block.len());
        for &a in block {
            if a == 0 {
                return Err(Error::InvalidParameter("agent ids in files are 1-based; got 0".into()));
            }
            list.push(a - 1);
        }
        lists.push(list);
    }
    Ok(Partition::from_lists(n, &lists)?)
}

pub fn parse_dist(text: &str) -> Result<DistSpec> {
    Ok(serde_json::from_str(text)?)
}

/// Writes `{"S":[…],"v":{"agent":value,…}}` with keys in ascending agent order.
struct RecordOut<'a>(&'a SampleRecord);

struct ValuesOut<'a>(&'a SampleRecord);

impl Serialize for ValuesOut<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.coalition().size()))?;
        for (agent, v) in self.0.member_values() {
            map.serialize_entry(&(agent + 1).to_string(), &v)?;
        }
        map.end()
    }
}

impl Serialize for RecordOut<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(2))?;
        map.serialize_entry("S", &self.0.coalition().to_one_based())?;
        map.serialize_entry("v", &ValuesOut(self.0))?;
        map.end()
    }
}

#[derive(Deserialize)]
struct RecordIn {
    #[serde(rename = "S")]
    s: Vec<usize>,
    v: HashMap<String, f64>,
}

pub fn sample_to_json_line(record: &SampleRecord) -> String {
    serde_json::to_string(&RecordOut(record)).expect("sample serializes")
}

pub fn write_samples<W: Write>(mut out: W, samples: &[SampleRecord]) -> Result<()> {
    for rec in samples {
        writeln!(out, "{}", sample_to_json_line(rec))?;
    }
    Ok(())
}

/// Parses one JSON-lines record; the value keys must be exactly the members.
pub fn parse_sample_line(line: &str) -> Result<SampleRecord> {
    let raw: RecordIn = serde_json::from_str(line)?;
    let mut members = Vec::with_capacity(raw.s.len());
    for &a in &raw.s {
        if a == 0 {
            return Err(Error::InconsistentSample("agent ids in files are 1-based; got 0".into()));
        }
        members.push(a - 1);
    }
    let coalition = Coalition::from_agents(members.iter().copied());
    if coalition.size() != raw.s.len() {
        return Err(Error::InconsistentSample(format!("duplicate agent in {:?}", raw.s)));
    }
    if raw.v.len() != coalition.size() {
        return Err(Error::InconsistentSample(format!("record for {:?} has {} values", raw.s, raw.v.len())));
    }
    let values = coalition
        .members()
        .map(|a| {
            raw.v.get(&(a + 1).to_string()).copied().ok_or_else(|| {
                Error::InconsistentSample(format!("record for {:?} lacks a value for agent {}", raw.s, a + 1))
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    SampleRecord::new(coalition, values)
}

/// Reads JSON-lines samples, skipping blank lines.
pub fn read_samples<R: BufRead>(input: R) -> Result<Vec<SampleRecord>> {
    let mut out = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_sample_line(&line).map_err(|e| match e {
            Error::Json(j) => Error::InconsistentSample(format!("line {}: {j}", k + 1)),
            other => other,
        })?);
    }
    Ok(out)
}
