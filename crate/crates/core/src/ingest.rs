//! Reading and writing street networks: node/edge CSV pairs, single-file
//! JSON, and GeoJSON export.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::accessibility::AccessibilityField;
use crate::error::{Error, RecordContext, Result};
use crate::network::{NetworkBuilder, Point, StreetNetwork};

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })
}

fn ctx(source: &str, line: u64) -> RecordContext {
    RecordContext {
        source: source.to_owned(),
        line,
    }
}

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim() == name)
}

fn parse_coord(raw: Option<&str>, what: &str, c: &RecordContext) -> Result<Option<f64>> {
    match raw.map(str::trim) {
        None | Some("") => Ok(None),
        Some(s) => s.parse::<f64>().map(Some).map_err(|_| Error::Malformed {
            message: format!("invalid {what} coordinate {s:?}"),
            ctx: c.clone(),
        }),
    }
}

fn warn_if_disconnected(net: &StreetNetwork) {
    let components = net.component_count();
    if components > 1 {
        log::warn!("network has {components} connected components; walks never cross between them");
    }
}

/// Loads a network from a node CSV (`id,x,y`, coordinates optional) and an
/// edge CSV (`source,target`). `*_name` labels the inputs in error messages.
pub fn load_network_csv<N: Read, E: Read>(
    nodes: N,
    nodes_name: &str,
    edges: E,
    edges_name: &str,
) -> Result<StreetNetwork> {
    let mut builder = NetworkBuilder::new();

    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(nodes);
    let headers = rdr.headers()?.clone();
    let id_col = column(&headers, "id").ok_or_else(|| Error::Malformed {
        message: "node file needs an `id` column".into(),
        ctx: ctx(nodes_name, 1),
    })?;
    let x_col = column(&headers, "x");
    let y_col = column(&headers, "y");
    for record in rdr.records() {
        let record = record?;
        let c = ctx(nodes_name, record.position().map_or(0, |p| p.line()));
        let id = record.get(id_col).unwrap_or("").to_owned();
        if id.is_empty() {
            return Err(Error::Malformed {
                message: "empty node id".into(),
                ctx: c,
            });
        }
        let x = parse_coord(x_col.and_then(|i| record.get(i)), "x", &c)?;
        let y = parse_coord(y_col.and_then(|i| record.get(i)), "y", &c)?;
        let position = match (x, y) {
            (Some(x), Some(y)) => Some(Point { x, y }),
            (None, None) => None,
            _ => {
                return Err(Error::Malformed {
                    message: "node has only one of x, y".into(),
                    ctx: c,
                })
            }
        };
        builder.add_node(id, position, c)?;
    }

    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(edges);
    let headers = rdr.headers()?.clone();
    let (s_col, t_col) = match (column(&headers, "source"), column(&headers, "target")) {
        (Some(s), Some(t)) => (s, t),
        _ => {
            return Err(Error::Malformed {
                message: "edge file needs `source` and `target` columns".into(),
                ctx: ctx(edges_name, 1),
            })
        }
    };
    for record in rdr.records() {
        let record = record?;
        let c = ctx(edges_name, record.position().map_or(0, |p| p.line()));
        let (Some(u), Some(v)) = (record.get(s_col), record.get(t_col)) else {
            return Err(Error::Malformed {
                message: "edge record is missing a column".into(),
                ctx: c,
            });
        };
        builder.add_edge_by_label(u, v, c)?;
    }

    let net = builder.build()?;
    warn_if_disconnected(&net);
    Ok(net)
}

pub fn load_network_files(nodes: &Path, edges: &Path) -> Result<StreetNetwork> {
    load_network_csv(
        open(nodes)?,
        &nodes.display().to_string(),
        open(edges)?,
        &edges.display().to_string(),
    )
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonNode {
    id: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    y: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonNetwork {
    nodes: Vec<JsonNode>,
    edges: Vec<(Value, Value)>,
}

fn label_of(v: &Value, c: &RecordContext) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        other => Err(Error::Malformed {
            message: format!("node id must be a string or number, got {other}"),
            ctx: c.clone(),
        }),
    }
}

/// Loads the single-file form `{ "nodes": [{"id","x","y"}], "edges": [["u","v"]] }`.
/// Record numbers in errors are 1-based positions within each array.
pub fn load_network_json<R: Read>(reader: R, name: &str) -> Result<StreetNetwork> {
    let doc: JsonNetwork = serde_json::from_reader(reader)?;
    let mut builder = NetworkBuilder::with_capacity(doc.nodes.len());
    for (i, node) in doc.nodes.iter().enumerate() {
        let c = ctx(&format!("{name} nodes"), i as u64 + 1);
        let label = label_of(&node.id, &c)?;
        let position = match (node.x, node.y) {
            (Some(x), Some(y)) => Some(Point { x, y }),
            (None, None) => None,
            _ => {
                return Err(Error::Malformed {
                    message: "node has only one of x, y".into(),
                    ctx: c,
                })
            }
        };
        builder.add_node(label, position, c)?;
    }
    for (i, (u, v)) in doc.edges.iter().enumerate() {
        let c = ctx(&format!("{name} edges"), i as u64 + 1);
        let (u, v) = (label_of(u, &c)?, label_of(v, &c)?);
        builder.add_edge_by_label(&u, &v, c)?;
    }
    let net = builder.build()?;
    warn_if_disconnected(&net);
    Ok(net)
}

pub fn load_network_json_file(path: &Path) -> Result<StreetNetwork> {
    load_network_json(open(path)?, &path.display().to_string())
}

pub fn write_nodes_csv<W: Write>(net: &StreetNetwork, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match net.coordinates() {
        Some(coords) => {
            w.write_record(["id", "x", "y"])?;
            for u in net.nodes() {
                let p = coords[u.index()];
                w.write_record([net.label(u), &p.x.to_string(), &p.y.to_string()])?;
            }
        }
        None => {
            w.write_record(["id"])?;
            for u in net.nodes() {
                w.write_record([net.label(u)])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_edges_csv<W: Write>(net: &StreetNetwork, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["source", "target"])?;
    for (u, v) in net.edges() {
        w.write_record([net.label(u), net.label(v)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_network_json<W: Write>(net: &StreetNetwork, out: W) -> Result<()> {
    let coords = net.coordinates();
    let doc = JsonNetwork {
        nodes: net
            .nodes()
            .map(|u| JsonNode {
                id: Value::String(net.label(u).to_owned()),
                x: coords.map(|c| c[u.index()].x),
                y: coords.map(|c| c[u.index()].y),
            })
            .collect(),
        edges: net
            .edges()
            .map(|(u, v)| {
                (
                    Value::String(net.label(u).into()),
                    Value::String(net.label(v).into()),
                )
            })
            .collect(),
    };
    serde_json::to_writer(out, &doc)?;
    Ok(())
}

/// GeoJSON `FeatureCollection` with one Point per node and one LineString
/// per edge. When a field is given, nodes it covers get a `mean_oa` property.
pub fn geojson(net: &StreetNetwork, field: Option<&AccessibilityField>) -> Result<Value> {
    let coords = net.coordinates().ok_or(Error::NoCoordinates)?;
    let mut features = Vec::with_capacity(net.node_count() + net.edge_count());
    for u in net.nodes() {
        let p = coords[u.index()];
        let mut props = json!({ "id": net.label(u), "kind": "node" });
        if let Some(row) = field.and_then(|f| f.get(u)) {
            props["mean_oa"] = json!(row.mean_oa);
        }
        features.push(json!({
            "type": "Feature",
            "geometry": { "type": "Point", "coordinates": [p.x, p.y] },
            "properties": props,
        }));
    }
    for (u, v) in net.edges() {
        let (a, b) = (coords[u.index()], coords[v.index()]);
        features.push(json!({
            "type": "Feature",
            "geometry": { "type": "LineString", "coordinates": [[a.x, a.y], [b.x, b.y]] },
            "properties": { "kind": "edge", "source": net.label(u), "target": net.label(v) },
        }));
    }
    Ok(json!({ "type": "FeatureCollection", "features": features }))
}

pub fn write_geojson<W: Write>(
    net: &StreetNetwork,
    field: Option<&AccessibilityField>,
    out: W,
) -> Result<()> {
    serde_json::to_writer(out, &geojson(net, field)?)?;
    Ok(())
}
